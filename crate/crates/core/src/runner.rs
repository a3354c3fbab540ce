//! Runs and δ-sweeps that write their artifacts to disk.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{
    defect_density, empirical_pairing, loglog_slope, strictly_decreasing, EmpiricalYoungMeasure, EnergyBreakdown,
    EnergyLedger, FieldSamples, InequalityReport, Integrand, SlopeFit,
};
use crate::error::{Error, Result};
use crate::initial::{gaussian_field, unit_defect};
use crate::integrator::{run, SimState};
use crate::io::{csv_header, csv_line, write_snapshot, EnergyRow, ExtraDiagnostic, FieldKind, RunConfig, FORMAT_VERSION, RNG_NAME};
use crate::spectral::{coercivity_identity_check, CoercivityReport};
use crate::stresses::{ericksen_identity_residual, IdentityResidual};

/// Per-step slack allowed in the monotonicity check, relative to `E(0)`.
pub const MONOTONE_SLACK: f64 = 1e-8;

#[derive(Clone, Debug, Default, Serialize)]
pub struct ExtraReports {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub young_measure: Option<EmpiricalYoungMeasure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub defect_density: Option<DefectSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ericksen_identity: Option<IdentityResidual>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coercivity: Option<CoercivityReport>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DefectSummary {
    pub total_hessian: f64,
    pub total_laplacian: f64,
    pub relative_difference: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub format_version: u32,
    pub rng: &'static str,
    pub steps: usize,
    pub t_final: f64,
    pub epsilon: f64,
    pub parodi: bool,
    pub leslie_warnings: Vec<String>,
    pub initial_unit_defect: f64,
    pub initial_energy: EnergyBreakdown,
    pub final_energy: EnergyBreakdown,
    pub max_energy_eq_residual: f64,
    pub final_energy_eq_residual: f64,
    /// Largest `E(t_{n+1}) − E(t_n)` relative to `E(0)`.
    pub max_energy_increase: f64,
    pub energy_non_increasing: bool,
    pub final_inequality: InequalityReport,
    pub min_inequality_margin: f64,
    /// Largest penalty energy relative to `E(0)`.
    pub max_penalty_ratio: f64,
    /// Largest `δ‖Δd‖²` relative to `E(0)`.
    pub max_defect_ratio: f64,
    pub final_norm_l2: f64,
    pub final_norm_linf: f64,
    pub max_norm_l2: f64,
    pub snapshots: Vec<String>,
    pub extras: ExtraReports,
    pub config: RunConfig,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub summary: RunSummary,
    /// One row per time step, whatever the CSV cadence.
    pub history: Vec<EnergyRow>,
    pub state: SimState,
}

fn extras(cfg: &RunConfig, state: &SimState) -> Result<ExtraReports> {
    let mut out = ExtraReports::default();
    let grid = &state.grid;
    for which in &cfg.output.diagnostics {
        match which {
            ExtraDiagnostic::YoungMeasure => {
                let samples = FieldSamples::from_spectral(grid, &state.d);
                out.young_measure = Some(EmpiricalYoungMeasure::from_samples(&samples, EmpiricalYoungMeasure::DEFAULT_BINS));
            }
            ExtraDiagnostic::DefectDensity => {
                let e = defect_density(grid, &state.d, state.physics.reg.delta());
                out.defect_density = Some(DefectSummary {
                    total_hessian: e.total_hessian,
                    total_laplacian: e.total_laplacian,
                    relative_difference: e.relative_difference(),
                });
            }
            ExtraDiagnostic::EricksenIdentity => {
                let mut rng = ChaCha20Rng::seed_from_u64(0);
                let mut w = gaussian_field(grid, &mut rng, 3.min(grid.dealias_cutoff()));
                grid.leray_project(&mut w);
                out.ericksen_identity = Some(ericksen_identity_residual(grid, &state.d, &state.physics.model, &state.physics.reg, &w)?);
            }
            ExtraDiagnostic::Coercivity => out.coercivity = Some(coercivity_identity_check(grid, &state.d)),
        }
    }
    Ok(out)
}

fn snapshot_fields(cfg: &RunConfig, state: &SimState, step: usize, dir: &Path, written: &mut Vec<String>) -> Result<()> {
    for f in &cfg.output.fields {
        let values = match f {
            FieldKind::Director => state.grid.vector_to_grid(&state.d),
            FieldKind::Velocity => state.grid.vector_to_grid(&state.v),
        };
        let path = write_snapshot(dir, f.name(), step, state.t, &state.grid, &values)?;
        written.push(path.file_name().unwrap().to_string_lossy().into_owned());
    }
    Ok(())
}

/// Runs `cfg` writing energy.csv, snapshots and run_summary.json into `dir`.
pub fn run_to_dir(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    fs::create_dir_all(dir)?;
    let mut state = cfg.initial_state()?;
    let report = state.physics.leslie.validate();
    let initial_unit_defect = unit_defect(&state.grid, &state.d);
    let steps = cfg.time.steps();
    let cadence = cfg.output.cadence;
    let snap_every = cfg.output.snapshot_cadence;

    let mut csv = BufWriter::new(File::create(dir.join("energy.csv"))?);
    writeln!(csv, "{}", csv_header())?;
    let mut ledger: Option<EnergyLedger> = None;
    let mut history = Vec::with_capacity(steps + 1);
    let mut snapshots = Vec::new();
    let mut min_margin = f64::INFINITY;

    run(&mut state, &cfg.time, |i, s, eval| {
        let residual = match ledger.as_mut() {
            None => {
                ledger = Some(EnergyLedger::new(s.t, &eval.energy, &eval.dissipation));
                0.0
            }
            Some(l) => l.push(s.t, &eval.energy, &eval.dissipation),
        };
        min_margin = min_margin.min(ledger.as_ref().unwrap().inequality(0.0).margin);
        let row = EnergyRow {
            step: i,
            t: s.t,
            dt: cfg.time.dt,
            energy: eval.energy,
            dissipation: eval.dissipation,
            energy_eq_residual: residual,
            norm: eval.norm,
            defect_total: eval.defect_total,
        };
        if i % cadence == 0 || i == steps {
            writeln!(csv, "{}", csv_line(&row))?;
        }
        if i == 0 || i == steps || (snap_every > 0 && i % snap_every == 0) {
            snapshot_fields(cfg, s, i, dir, &mut snapshots)?;
        }
        history.push(row);
        Ok(())
    })?;
    csv.flush()?;

    let ledger = ledger.expect("run observes the initial state");
    let first = history.first().unwrap();
    let last = history.last().unwrap();
    let e0 = first.energy.total;
    let scale = e0.abs().max(f64::MIN_POSITIVE);
    let max_increase = history.windows(2).map(|w| (w[1].energy.total - w[0].energy.total) / scale).fold(f64::NEG_INFINITY, f64::max);
    let summary = RunSummary {
        format_version: FORMAT_VERSION,
        rng: RNG_NAME,
        steps,
        t_final: state.t,
        epsilon: state.physics.reg.epsilon(),
        parodi: report.parodi,
        leslie_warnings: report.warnings,
        initial_unit_defect,
        initial_energy: first.energy,
        final_energy: last.energy,
        max_energy_eq_residual: history.iter().map(|r| r.energy_eq_residual).fold(0.0, f64::max),
        final_energy_eq_residual: last.energy_eq_residual,
        max_energy_increase: if history.len() > 1 { max_increase } else { 0.0 },
        energy_non_increasing: history.len() < 2 || max_increase <= MONOTONE_SLACK,
        final_inequality: ledger.inequality(1e-6),
        min_inequality_margin: min_margin,
        max_penalty_ratio: history.iter().map(|r| r.energy.penalty / scale).fold(0.0, f64::max),
        max_defect_ratio: history.iter().map(|r| r.defect_total / scale).fold(0.0, f64::max),
        final_norm_l2: last.norm.l2,
        final_norm_linf: last.norm.linf,
        max_norm_l2: history.iter().map(|r| r.norm.l2).fold(0.0, f64::max),
        snapshots,
        extras: extras(cfg, &state)?,
        config: cfg.clone(),
    };
    fs::write(dir.join("run_summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(RunOutcome { summary, history, state })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepMember {
    pub delta: f64,
    pub epsilon: f64,
    pub directory: String,
    pub initial_energy: f64,
    pub final_norm_l2: f64,
    pub final_norm_linf: f64,
    pub max_norm_l2: f64,
    pub max_defect_total: f64,
    /// `max_t δ‖Δd‖² ≤ 2E(0)`
    pub defect_bound_holds: bool,
    pub max_penalty_ratio: f64,
    pub max_energy_eq_residual: f64,
    pub energy_non_increasing: bool,
    pub defect_hessian_vs_laplacian: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairingSeries {
    pub integrand: String,
    pub values: Vec<f64>,
    pub masses: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub format_version: u32,
    pub deltas: Vec<f64>,
    pub members: Vec<SweepMember>,
    /// Final `‖|d|²−1‖_{L²}` strictly decreases as δ decreases.
    pub norm_l2_decreasing: bool,
    /// Fit of final `‖|d|²−1‖_{L²}` against δ; needs four points.
    pub norm_slope: Option<SlopeFit>,
    /// Fitted exponent at least 1/3.
    pub one_third_decay_observed: Option<bool>,
    pub defect_bound_holds: bool,
    pub pairings: Vec<PairingSeries>,
}

pub fn validate_deltas(deltas: &[f64]) -> Result<()> {
    let mut errs = Vec::new();
    if deltas.is_empty() {
        errs.push("sweep needs at least one delta".to_string());
    }
    for d in deltas {
        if !(*d > 0.0 && *d <= 1.0) {
            errs.push(format!("sweep delta must lie in (0, 1], got {d}"));
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(errs))
    }
}

/// One run per δ in `root/delta_<index>`, then `root/sweep_summary.json`.
pub fn sweep(cfg: &RunConfig, deltas: &[f64], root: &Path, threads: Option<usize>) -> Result<SweepSummary> {
    validate_deltas(deltas)?;
    let configs: Vec<(RunConfig, PathBuf)> = deltas
        .iter()
        .enumerate()
        .map(|(i, &delta)| {
            let mut c = cfg.clone();
            c.physics.delta = delta;
            let dir = root.join(format!("delta_{i:02}"));
            c.output.directory = dir.clone();
            (c, dir)
        })
        .collect();
    for (c, _) in &configs {
        c.validate()?;
    }
    fs::create_dir_all(root)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter { name: "threads", reason: e.to_string() })?;
    let outcomes: Vec<Result<RunOutcome>> = pool.install(|| configs.par_iter().map(|(c, dir)| run_to_dir(c, dir)).collect());
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let members: Vec<SweepMember> = outcomes
        .iter()
        .zip(&configs)
        .map(|(o, (_, dir))| {
            let s = &o.summary;
            let e0 = s.initial_energy.total;
            let max_defect_total = o.history.iter().map(|r| r.defect_total).fold(0.0, f64::max);
            let defect = defect_density(&o.state.grid, &o.state.d, o.state.physics.reg.delta());
            SweepMember {
                delta: o.state.physics.reg.delta(),
                epsilon: s.epsilon,
                directory: dir.file_name().unwrap().to_string_lossy().into_owned(),
                initial_energy: e0,
                final_norm_l2: s.final_norm_l2,
                final_norm_linf: s.final_norm_linf,
                max_norm_l2: s.max_norm_l2,
                max_defect_total,
                defect_bound_holds: max_defect_total <= 2.0 * e0,
                max_penalty_ratio: s.max_penalty_ratio,
                max_energy_eq_residual: s.max_energy_eq_residual,
                energy_non_increasing: s.energy_non_increasing,
                defect_hessian_vs_laplacian: defect.relative_difference(),
            }
        })
        .collect();

    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by(|&a, &b| members[b].delta.total_cmp(&members[a].delta));
    let norms: Vec<f64> = order.iter().map(|&i| members[i].final_norm_l2).collect();
    let ds: Vec<f64> = order.iter().map(|&i| members[i].delta).collect();
    let norm_slope = loglog_slope(&ds, &norms);

    let model = outcomes[0].state.physics.model.clone();
    let samples: Vec<FieldSamples> = outcomes.iter().map(|o| FieldSamples::from_spectral(&o.state.grid, &o.state.d)).collect();
    let pairings = [Integrand::One, Integrand::SSq, Integrand::HSqSSq, Integrand::PenaltyGrowth, Integrand::Frank(model)]
        .iter()
        .map(|f| {
            let entries = empirical_pairing(&samples, f);
            PairingSeries {
                integrand: f.name(),
                values: entries.iter().map(|e| e.value).collect(),
                masses: entries.iter().map(|e| e.measure.mass).collect(),
            }
        })
        .collect();

    let summary = SweepSummary {
        format_version: FORMAT_VERSION,
        deltas: deltas.to_vec(),
        norm_l2_decreasing: strictly_decreasing(&norms),
        one_third_decay_observed: norm_slope.map(|f| f.slope >= 1.0 / 3.0),
        norm_slope,
        defect_bound_holds: members.iter().all(|m| m.defect_bound_holds),
        members,
        pairings,
    };
    fs::write(root.join("sweep_summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(summary)
}
