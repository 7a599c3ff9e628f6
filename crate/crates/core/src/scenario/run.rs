//! Whole runs: stepping, file output and the end-of-run analysis.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::observables::{
    self, interference_metrics, moments, position_marginal, resample_lab_frame, Interference, Marginal,
};
use crate::operator;
use crate::stepper::{SimulationState, WignerField};

use super::config::RunConfig;
use super::initial::gaussian_initial;
use super::snapshot::{self, SnapshotFrame};
use super::timeseries::{self, SeriesRow};

pub const CONFIG_FILE: &str = "config.toml";
pub const SERIES_FILE: &str = "series.csv";
pub const REPORT_FILE: &str = "report.toml";
pub const MARGINAL_FILE: &str = "marginal.csv";

/// Extremes of the moment curves, times in `Ωt` and in `τ/η`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    /// max of `√⟨x²⟩/(η x_zpf)`
    pub max_x_scaled: f64,
    pub t_max_x: f64,
    pub t_max_x_over_eta: f64,
    /// min of `⟨{x,p}⟩/ħ`
    pub min_xp_over_hbar: f64,
    pub t_min_xp: f64,
    pub t_min_xp_over_eta: f64,
}

/// Vertex of the parabola through `(t-h, a)`, `(t, b)`, `(t+h, c)`.
fn refine(t: f64, h: f64, a: f64, b: f64, c: f64) -> (f64, f64) {
    let curv = a - 2.0 * b + c;
    if curv == 0.0 {
        return (t, b);
    }
    let d = (0.5 * (a - c) / curv).clamp(-1.0, 1.0);
    (t + d * h, b - 0.25 * (a - c) * d)
}

fn extremum(rows: &[SeriesRow], f: impl Fn(&SeriesRow) -> f64, max: bool) -> (f64, f64) {
    let sign = if max { 1.0 } else { -1.0 };
    let k = (0..rows.len())
        .max_by(|&a, &b| (sign * f(&rows[a])).partial_cmp(&(sign * f(&rows[b]))).unwrap())
        .unwrap();
    if k == 0 || k + 1 == rows.len() {
        return (rows[k].t_omega, f(&rows[k]));
    }
    let h = rows[k + 1].t_omega - rows[k].t_omega;
    if ((rows[k].t_omega - rows[k - 1].t_omega) - h).abs() > 1e-9 * h {
        return (rows[k].t_omega, f(&rows[k]));
    }
    refine(rows[k].t_omega, h, f(&rows[k - 1]), f(&rows[k]), f(&rows[k + 1]))
}

pub fn moment_summary(rows: &[SeriesRow], eta: f64) -> Result<MomentSummary> {
    if rows.is_empty() {
        return Err(Error::Config("empty time series".into()));
    }
    let (t_max_x, x2) = extremum(rows, |r| r.x2_zpf2, true);
    let (t_min_xp, xp) = extremum(rows, |r| r.xp_sym_hbar, false);
    Ok(MomentSummary {
        max_x_scaled: x2.sqrt() / eta,
        t_max_x,
        t_max_x_over_eta: t_max_x / eta,
        min_xp_over_hbar: xp,
        t_min_xp,
        t_min_xp_over_eta: t_min_xp / eta,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub eta: f64,
    pub t_final: f64,
    pub steps: usize,
    pub moments: MomentSummary,
    /// `⟨{x,p}⟩/ħ`, `⟨{x,p}⟩/(ηħ)` and `⟨{x,p}⟩/(2ηħ)` at the final time.
    pub final_xp_over_hbar: f64,
    pub final_xp_over_eta_hbar: f64,
    pub final_xp_over_2eta_hbar: f64,
    pub lambda_min: f64,
    pub t_lambda_min: f64,
    pub eta_lambda_min: f64,
    /// max `|Σ W h_x h_p - 1|` over the series
    pub norm_drift: f64,
    pub max_boundary_fraction: f64,
    pub wrap_warning: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interference: Option<Interference>,
    /// `min W / max W` of the final lab-frame field.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lab_negativity: Option<f64>,
    pub resample_failures: usize,
}

impl Report {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serialises")
    }
}

pub struct RunOutput {
    pub series: Vec<SeriesRow>,
    pub report: Report,
    pub state: SimulationState,
    pub lab: Option<WignerField>,
    pub marginal: Option<Marginal>,
    pub files: Vec<PathBuf>,
}

fn at_step(state: &SimulationState) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::AtStep { step: state.step, time: state.time(), source: Box::new(e) }
}

fn series_row(state: &SimulationState) -> Result<SeriesRow> {
    let m = moments(&state.wigner, &state.flow)?;
    Ok(SeriesRow::new(state.time(), &m, state.wigner.norm(), observables::min_singular_value(&state.flow)))
}

/// Mapped grid lines: `x0,p0,x,p` for every `stride`-th point in both directions.
pub fn write_overlay(path: &Path, flow: &FlowField, stride: usize) -> Result<()> {
    let g = flow.grid;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x0,p0,x,p")?;
    for i in (0..g.nx).step_by(stride) {
        for j in (0..g.np).step_by(stride) {
            let s = &flow.states[g.index(i, j)];
            writeln!(w, "{},{},{},{}", g.x(i), g.p(j), s.x, s.p)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_marginal(path: &Path, m: &Marginal) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x_zpf,prob")?;
    for (i, v) in m.values.iter().enumerate() {
        writeln!(w, "{},{}", m.x(i), v)?;
    }
    w.flush()?;
    Ok(())
}

/// Lab-frame field of a Liouville-frame field at its own time.
pub fn lab_field(cfg: &RunConfig, w: &WignerField) -> Result<(WignerField, usize)> {
    let target = cfg.target_grid()?;
    let steps = observables::backward_steps(w.time, cfg.resample_dt());
    let (lab, rep) = resample_lab_frame(w, &cfg.potential.potential(), w.time, steps, target);
    Ok((lab, rep.failed.len()))
}

/// Interference metrics of a lab-frame field; `None` when there is only one peak.
pub fn marginal_analysis(lab: &WignerField) -> Result<(Marginal, Option<Interference>)> {
    let m = position_marginal(lab);
    match interference_metrics(&m) {
        Ok(i) => Ok((m, Some(i))),
        Err(Error::NoInterference) => Ok((m, None)),
        Err(e) => Err(e),
    }
}

fn negativity(w: &WignerField) -> f64 {
    let max = w.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = w.values.iter().cloned().fold(f64::INFINITY, f64::min);
    min / max
}

struct Sink<'a> {
    cfg: &'a RunConfig,
    dir: Option<&'a Path>,
    files: Vec<PathBuf>,
    lab: Option<WignerField>,
    failures: usize,
}

impl Sink<'_> {
    fn snapshot(&mut self, state: &SimulationState) -> Result<()> {
        let frame = self.cfg.output.frame;
        let need_lab = frame.lab();
        let Some(dir) = self.dir else {
            if need_lab {
                let (lab, f) = lab_field(self.cfg, &state.wigner)?;
                self.failures = f;
                self.lab = Some(lab);
            }
            return Ok(());
        };
        if frame.liouville() {
            let p = dir.join(format!("liouville_{:06}.qxwf", state.step));
            snapshot::save(&p, &state.wigner, SnapshotFrame::Liouville)?;
            self.files.push(p);
            if self.cfg.output.overlay_stride > 0 {
                let p = dir.join(format!("grid_{:06}.csv", state.step));
                write_overlay(&p, &state.flow, self.cfg.output.overlay_stride)?;
                self.files.push(p);
            }
        }
        if need_lab {
            let (lab, f) = lab_field(self.cfg, &state.wigner)?;
            let p = dir.join(format!("lab_{:06}.qxwf", state.step));
            snapshot::save(&p, &lab, SnapshotFrame::Lab)?;
            self.files.push(p);
            self.failures = f;
            self.lab = Some(lab);
        }
        Ok(())
    }
}

/// Run `cfg` to `t_final`. With `dir` set, the effective config, time series,
/// snapshots, marginal and report are written there.
pub fn run(cfg: &RunConfig, dir: Option<&Path>) -> Result<RunOutput> {
    cfg.validate()?;
    if let Some(d) = dir {
        std::fs::create_dir_all(d)?;
        cfg.save(&d.join(CONFIG_FILE))?;
    }
    let grid = cfg.grid.grid()?;
    let w0 = gaussian_initial(grid, &cfg.initial)?;
    let mut state = SimulationState::new(cfg.params()?, cfg.stepper, w0)?;
    let steps = cfg.steps();
    let every = cfg.output.snapshot_every;
    let mut sink = Sink { cfg, dir, files: Vec::new(), lab: None, failures: 0 };
    let mut series = vec![series_row(&state)?];
    if dir.is_some() {
        sink.snapshot(&state)?;
    }
    while state.step < steps {
        state.advance().map_err(at_step(&state))?;
        if state.step % cfg.output.series_every == 0 || state.step == steps {
            series.push(series_row(&state).map_err(at_step(&state))?);
        }
        let snap = state.step == steps || (every > 0 && state.step % every == 0);
        if snap && (dir.is_some() || state.step == steps) {
            sink.snapshot(&state).map_err(at_step(&state))?;
        }
    }
    let eta = cfg.eta();
    let mut lab = sink.lab.take();
    if lab.is_none() && cfg.resample.enabled {
        let (l, f) = lab_field(cfg, &state.wigner)?;
        sink.failures = f;
        lab = Some(l);
    }
    let (marginal, interference) = match &lab {
        Some(l) => {
            let (m, i) = marginal_analysis(l)?;
            (Some(m), i)
        }
        None => (None, None),
    };
    let last = *series.last().unwrap();
    let (t_lambda_min, lambda_min) = series
        .iter()
        .map(|r| (r.t_omega, r.lambda_min))
        .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let report = Report {
        eta,
        t_final: state.time(),
        steps,
        moments: moment_summary(&series, eta)?,
        final_xp_over_hbar: last.xp_sym_hbar,
        final_xp_over_eta_hbar: last.xp_sym_hbar / eta,
        final_xp_over_2eta_hbar: last.xp_sym_hbar / (2.0 * eta),
        lambda_min,
        t_lambda_min,
        eta_lambda_min: eta * lambda_min,
        norm_drift: series.iter().map(|r| (r.norm - 1.0).abs()).fold(0.0, f64::max),
        max_boundary_fraction: state.max_boundary_fraction,
        wrap_warning: state.wrap_warned(),
        interference,
        lab_negativity: lab.as_ref().map(negativity),
        resample_failures: sink.failures,
    };
    let mut files = std::mem::take(&mut sink.files);
    if let Some(d) = dir {
        let p = d.join(SERIES_FILE);
        timeseries::write_series(&p, &series)?;
        files.push(p);
        if let Some(m) = &marginal {
            let p = d.join(MARGINAL_FILE);
            write_marginal(&p, m)?;
            files.push(p);
        }
        let p = d.join(REPORT_FILE);
        std::fs::write(&p, report.to_toml())?;
        files.push(p);
    }
    Ok(RunOutput { series, report, state, lab, marginal, files })
}

/// Result of re-analysing stored outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub source: String,
    pub time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interference: Option<Interference>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moments: Option<MomentSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_lambda_min: Option<f64>,
}

fn latest(dir: &Path, prefix: &str) -> Result<Option<PathBuf>> {
    let mut best: Option<PathBuf> = None;
    for entry in std::fs::read_dir(dir)? {
        let p = entry?.path();
        let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with(prefix) && name.ends_with(".qxwf") && best.as_ref().is_none_or(|b| p > *b) {
            best = Some(p);
        }
    }
    Ok(best)
}

/// Analyse a snapshot file or a run directory. Liouville-frame snapshots are
/// resampled with `cfg`, which for a run directory is its stored config.
pub fn analyze(path: &Path, cfg: Option<&RunConfig>) -> Result<(Analysis, Option<Marginal>)> {
    if path.is_dir() {
        let own = RunConfig::load(&path.join(CONFIG_FILE))?;
        let cfg = cfg.unwrap_or(&own);
        let series = timeseries::read_series(&path.join(SERIES_FILE))?;
        let eta = cfg.eta();
        let snap = match latest(path, "lab_")? {
            Some(p) => Some(p),
            None => latest(path, "liouville_")?,
        };
        let (mut a, m) = match snap {
            Some(p) => analyze(&p, Some(cfg))?,
            None => (
                Analysis { source: String::new(), time: series.last().unwrap().t_omega, interference: None, moments: None, lambda_min: None, eta_lambda_min: None },
                None,
            ),
        };
        let lmin = series.iter().map(|r| r.lambda_min).fold(f64::INFINITY, f64::min);
        a.source = path.display().to_string();
        a.moments = Some(moment_summary(&series, eta)?);
        a.lambda_min = Some(lmin);
        a.eta_lambda_min = Some(eta * lmin);
        return Ok((a, m));
    }
    let snap = snapshot::load(path)?;
    let lab = match snap.frame {
        SnapshotFrame::Lab => snap.field,
        SnapshotFrame::Liouville => {
            let cfg = cfg.ok_or_else(|| Error::Config("a Liouville-frame snapshot needs a config to resample".into()))?;
            lab_field(cfg, &snap.field)?.0
        }
    };
    let (m, interference) = marginal_analysis(&lab)?;
    Ok((
        Analysis { source: path.display().to_string(), time: lab.time, interference, moments: None, lambda_min: None, eta_lambda_min: None },
        Some(m),
    ))
}

/// Which parameter a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepKey {
    /// Quartic strength. The run length and the lab window scale with η so
    /// that every file covers the same `τ/η` range. The Liouville grid is
    /// left alone: how far the field spreads in `x₀` does not scale with η,
    /// so it has to be chosen per run.
    Eta,
    Decoherence,
    Gamma,
}

impl std::str::FromStr for SweepKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eta" => Ok(Self::Eta),
            "decoherence" | "Gamma" => Ok(Self::Decoherence),
            "gamma" => Ok(Self::Gamma),
            _ => Err(Error::Config(format!("unknown sweep key `{s}`"))),
        }
    }
}

pub fn sweep_configs(base: &RunConfig, key: SweepKey, values: &[f64]) -> Result<Vec<RunConfig>> {
    values
        .iter()
        .map(|&v| {
            let mut c = base.clone();
            match key {
                SweepKey::Eta => {
                    let ratio = v / base.eta();
                    c.potential = super::config::PotentialSpec::Quartic { eta: v };
                    c.output.t_final *= ratio;
                    c.resample.x_extent = base.resample.x_extent.map(|x| x * ratio);
                }
                SweepKey::Decoherence => c.physics.decoherence = v,
                SweepKey::Gamma => c.physics.gamma = v,
            }
            c.validate()?;
            Ok(c)
        })
        .collect()
}

/// Write one config per value as `{key}_{index:03}.toml`.
pub fn sweep(base: &RunConfig, key: SweepKey, values: &[f64], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let name = match key {
        SweepKey::Eta => "eta",
        SweepKey::Decoherence => "decoherence",
        SweepKey::Gamma => "gamma",
    };
    sweep_configs(base, key, values)?
        .iter()
        .enumerate()
        .map(|(n, c)| {
            let p = dir.join(format!("{name}_{n:03}.toml"));
            c.save(&p)?;
            Ok(p)
        })
        .collect()
}

/// Flow field at `time`, without evolving a Wigner function.
pub fn flow_at(cfg: &RunConfig, time: f64) -> Result<FlowField> {
    let mut flow = FlowField::new(cfg.grid.grid()?);
    let n = (time / cfg.flow_dt()).round() as usize;
    flow.propagate(&cfg.potential.potential(), cfg.flow_dt(), n)?;
    Ok(flow)
}

/// Coordinate dump of `D` at `time`.
pub fn dump_operator<W: Write>(cfg: &RunConfig, time: f64, out: W) -> Result<usize> {
    let flow = flow_at(cfg, time)?;
    let pattern = operator::StencilPattern::new(flow.grid);
    let op = operator::build_operator(&pattern, &flow.states, &cfg.params()?, cfg.stepper.scheme)?;
    op.write_coo(out)?;
    Ok(op.nnz())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::config::{Frame, Mode, PotentialSpec};

    fn small() -> RunConfig {
        let mut c = RunConfig::default();
        c.potential = PotentialSpec::Quartic { eta: 3.0 };
        c.physics.decoherence = 0.0;
        c.grid = super::super::config::GridConfig { nx: 32, np: 24, hx: 0.5, hp: 0.5, center_x: 0.0, center_p: 0.0 };
        c.output.t_final = 0.5;
        c.output.frame = Frame::Both;
        c.output.snapshot_every = 5;
        c.resample.nx = 41;
        c.resample.np = 31;
        c
    }

    #[test]
    fn refine_recovers_parabola_vertex() {
        let f = |t: f64| 2.0 - (t - 0.37).powi(2);
        let (t, v) = refine(0.4, 0.1, f(0.3), f(0.4), f(0.5));
        assert!((t - 0.37).abs() < 1e-12 && (v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn run_writes_outputs_and_analyze_agrees() {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&small(), Some(dir.path())).unwrap();
        assert_eq!(out.series.len(), 11);
        for name in [CONFIG_FILE, SERIES_FILE, REPORT_FILE, MARGINAL_FILE, "liouville_000000.qxwf", "lab_000010.qxwf", "grid_000005.csv"] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
        let (a, m) = analyze(dir.path(), None).unwrap();
        assert_eq!(m.unwrap(), out.marginal.unwrap());
        assert_eq!(a.interference, out.report.interference);
        assert_eq!(a.moments.unwrap(), out.report.moments);
        let read = timeseries::read_series(&dir.path().join(SERIES_FILE)).unwrap();
        assert_eq!(read, out.series);
    }

    #[test]
    fn classical_closed_run_keeps_field() {
        let mut c = small();
        c.physics.mode = Mode::Classical;
        c.output.frame = Frame::Liouville;
        let dir = tempfile::tempdir().unwrap();
        run(&c, Some(dir.path())).unwrap();
        let a = std::fs::read(dir.path().join("liouville_000000.qxwf")).unwrap();
        let b = std::fs::read(dir.path().join("liouville_000010.qxwf")).unwrap();
        // only the time stamp differs
        assert_eq!(a[..48], b[..48]);
        assert_eq!(a[56..], b[56..]);
    }

    #[test]
    fn sweep_scales_with_eta() {
        let dir = tempfile::tempdir().unwrap();
        let base = RunConfig::default();
        let files = sweep(&base, SweepKey::Eta, &[10.0, 30.0], dir.path()).unwrap();
        let c = RunConfig::load(&files[1]).unwrap();
        assert_eq!(c.potential, PotentialSpec::Quartic { eta: 30.0 });
        assert!((c.output.t_final - 45.0).abs() < 1e-12);
        assert_eq!(c.grid, base.grid);
    }

    #[test]
    fn dump_operator_counts_entries() {
        let mut buf = Vec::new();
        let nnz = dump_operator(&small(), 0.3, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), nnz);
        assert!(nnz <= 13 * 32 * 24);
    }
}
