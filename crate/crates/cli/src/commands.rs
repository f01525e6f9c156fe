//! The five subcommands. Each writes its artifacts under `out` and returns
//! the in-memory result so tests can inspect it.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use ssfm_core::capacity::{self, ALL_NORMALIZATIONS};
use ssfm_core::engine::{run_ensemble, write_dump, EnsembleOptions, Propagator, SpectrumTracking};
use ssfm_core::lab::{
    all_passed, check_energy_ledger, check_trace_conservation, max_amplitude_deviation, max_entropy_gap,
    round_trip_error, verify_conditional_entropy, verify_epi_step, verify_nonlinear_entropy_preservation,
    CheckRecord, KnnConfig, SampleDistribution,
};
use ssfm_core::{
    generate_input, mean_and_std_error, mi_from_ensembles, BandwidthProfile, CapacityReport, ChannelParams,
    Ensemble, FieldState, InputKind, SeedTree, SimulationGrid,
};

use crate::config::{db_to_linear, ExperimentConfig};
use crate::error::CliError;
use crate::output::{artifact, ensure_dir, fmt_f64, write_csv, write_json, write_lines};

pub const SWEEP_COLUMNS: [&str; 7] = ["snr_db", "bound_bits", "W_hz", "se_B", "se_W", "se_W0", "mi_estimate_bits"];
pub const MI_COLUMNS: [&str; 3] = ["snr_db", "mi_bits_per_sample", "bound_bits_per_sample"];

/// Total noise energy reaching the receiver, `N_ASE B_n T` times the mean
/// of the noise profile.
pub fn expected_noise_energy(params: &ChannelParams, grid: &SimulationGrid) -> f64 {
    let shape = params
        .noise_profile
        .as_ref()
        .map_or(1.0, |p| p.iter().sum::<f64>() / p.len() as f64);
    params.total_noise_energy(grid) * shape
}

fn launch<'a>(
    kind: &'a InputKind,
    e0: f64,
    grid: &'a SimulationGrid,
    seeds: &'a SeedTree,
) -> impl Fn(u64) -> ssfm_core::Result<FieldState> + Sync + 'a {
    move |r| generate_input(kind, e0, grid, seeds, r)
}

// ---------------------------------------------------------------- propagate

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropagateSummary {
    pub master_seed: u64,
    pub realizations: usize,
    pub num_samples: usize,
    pub num_steps: usize,
    pub input_energy: f64,
    pub mean_input_energy: f64,
    pub mean_output_energy: f64,
    pub output_energy_std_error: f64,
    /// `E0 + N_ASE B_n T`; absent with a loss profile.
    pub expected_mean_output_energy: Option<f64>,
    pub dump_file: String,
    pub dump_realizations: usize,
    pub full_trajectory: bool,
}

/// Writes `trajectory.bin`, `summary.json` and `timings.json`.
pub fn cmd_propagate(cfg: &ExperimentConfig, out: &Path) -> Result<PropagateSummary, CliError> {
    let started = Instant::now();
    let prop = cfg.propagator()?;
    let grid = cfg.grid;
    let e0 = cfg.input_energy()?;
    let seeds = SeedTree::new(cfg.run.seed);
    let m = cfg.run.realizations;
    let dumped = cfg.output.dump_realizations.unwrap_or(m).min(m);
    let opts = EnsembleOptions {
        retain_records: dumped,
        retain_trajectory: cfg.run.retain_trajectory,
        ..EnsembleOptions::new(m)
    };
    let run = run_ensemble(&prop, launch(&cfg.input.kind, e0, &grid, &seeds), &seeds, &opts)?;

    ensure_dir(out)?;
    let dump_name = "trajectory.bin";
    let mut w = BufWriter::new(File::create(artifact(out, dump_name))?);
    write_dump(&mut w, &grid, &run.records, cfg.run.retain_trajectory)?;
    drop(w);

    let (mean_in, _) = mean_and_std_error(&run.input_energies);
    let (mean_out, se_out) = mean_and_std_error(&run.output_energies);
    let params = prop.params();
    let summary = PropagateSummary {
        master_seed: cfg.run.seed,
        realizations: m,
        num_samples: grid.num_samples(),
        num_steps: grid.num_steps(),
        input_energy: e0,
        mean_input_energy: mean_in,
        mean_output_energy: mean_out,
        output_energy_std_error: se_out,
        expected_mean_output_energy: (!params.has_loss()).then(|| e0 + expected_noise_energy(params, &grid)),
        dump_file: dump_name.into(),
        dump_realizations: dumped,
        full_trajectory: cfg.run.retain_trajectory,
    };
    write_json(&artifact(out, "summary.json"), &summary)?;
    // Wall-clock time is kept apart so summary.json stays reproducible.
    write_json(
        &artifact(out, "timings.json"),
        &serde_json::json!({ "elapsed_seconds": started.elapsed().as_secs_f64() }),
    )?;
    Ok(summary)
}

// ---------------------------------------------------------------- verify

const DETERMINISTIC_SAMPLE: usize = 2000;
const ROUND_TRIP_SAMPLE: usize = 64;

fn knn(cfg: &ExperimentConfig) -> KnnConfig {
    KnnConfig {
        k: cfg.run.knn_k,
        bootstrap_resamples: cfg.run.bootstrap_resamples,
        seed: cfg.run.seed,
    }
}

fn step_checks(prop: &Propagator, inputs: &Ensemble) -> Result<Vec<CheckRecord>, CliError> {
    let dz = prop.grid().delta_z();
    let map = |e: &Ensemble, f: &dyn Fn(&mut Vec<ssfm_core::Complex64>) -> ssfm_core::Result<()>| {
        e.realizations()
            .iter()
            .map(|x| {
                let mut s = x.samples().to_vec();
                f(&mut s)?;
                FieldState::new(x.position(), s)
            })
            .collect::<ssfm_core::Result<Vec<_>>>()
            .and_then(Ensemble::new)
    };
    let after_nl = map(inputs, &|s| {
        prop.nonlinear().apply_in_place(s, dz);
        Ok(())
    })?;
    let after_lin = map(&after_nl, &|s| prop.dft().filter_in_place(s, prop.step_taps()))?;
    let mut out = vec![CheckRecord::at_most(
        "nonlinear_amplitude",
        max_amplitude_deviation(inputs, &after_nl),
        1e-14,
        "largest relative change of |a_l| across one nonlinear step",
    )];
    out.extend(check_trace_conservation(inputs, &after_nl, &after_lin)?.records());
    Ok(out)
}

/// Runs the invariant suite; writes `verify.txt` with one record per line.
/// Entropy checks need `L <= 4`; larger grids run the energy subset.
pub fn cmd_verify(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<CheckRecord>, CliError> {
    let prop = cfg.propagator()?;
    let grid = cfg.grid;
    let params = prop.params().clone();
    let e0 = cfg.input_energy()?;
    let seeds = SeedTree::new(cfg.run.seed);
    let m = cfg.run.realizations;
    let mut records = Vec::new();

    let run = run_ensemble(
        &prop,
        launch(&cfg.input.kind, e0, &grid, &seeds),
        &seeds,
        &EnsembleOptions {
            keep_inputs: true,
            ..EnsembleOptions::new(m)
        },
    )?;
    let inputs = run.inputs.clone().ok_or(ssfm_core::Error::EmptyEnsemble)?;
    let head = |n: usize| Ensemble::new(inputs.realizations()[..n.min(inputs.size())].to_vec());
    records.extend(step_checks(&prop, &head(DETERMINISTIC_SAMPLE)?)?);

    if params.has_loss() {
        records.push(CheckRecord::skipped("round_trip", "loss profile makes the cascade non-invertible"));
        records.push(CheckRecord::skipped("energy_ledger", "loss profile removes energy"));
    } else {
        let sample = head(ROUND_TRIP_SAMPLE)?;
        records.push(CheckRecord::at_most(
            "round_trip",
            round_trip_error(&prop, sample.realizations())?,
            1e-9,
            format!("noise-free propagate + inverse over K = {}", grid.num_steps()),
        ));
        records.push(check_energy_ledger(&run.output_energies, e0, expected_noise_energy(&params, &grid)).record());
    }

    let l = grid.num_samples();
    let knn = knn(cfg);
    let me = cfg.run.entropy_realizations;
    if l > 4 {
        records.push(CheckRecord::skipped(
            "entropy_checks",
            format!("L = {l} > 4: energy-only subset"),
        ));
    } else {
        let dist = SampleDistribution::ProperGaussian { variance: e0 / l as f64 };
        let pres = verify_nonlinear_entropy_preservation(
            prop.nonlinear(),
            grid.delta_z(),
            &dist,
            l,
            me,
            &knn,
            cfg.run.seed,
        )?;
        records.push(pres.record("entropy_preservation"));

        let outputs_e = run_ensemble(
            &prop,
            launch(&cfg.input.kind, e0, &grid, &seeds),
            &seeds,
            &EnsembleOptions {
                keep_outputs: true,
                ..EnsembleOptions::new(me)
            },
        )?
        .outputs
        .ok_or(ssfm_core::Error::EmptyEnsemble)?;
        if me >= 10_000 {
            records.extend(max_entropy_gap(&outputs_e, &knn)?.records());
        } else {
            records.push(CheckRecord::skipped("max_entropy", "needs run.entropy_realizations >= 10^4"));
        }

        if params.n_ase > 0.0 {
            let x0 = &inputs.realizations()[0];
            records.push(verify_conditional_entropy(&prop, x0, me, &knn, &seeds)?.record());
            records.push(verify_epi_step(&prop, x0, me, &knn, &seeds)?.record("epi_last_step"));
        } else {
            records.push(CheckRecord::skipped("conditional_entropy", "no noise"));
        }
    }

    ensure_dir(out)?;
    write_lines(&artifact(out, "verify.txt"), &records)?;
    Ok(records)
}

/// Exit-status helper: `Err(ChecksFailed)` when any record failed.
pub fn require_pass(records: &[CheckRecord]) -> Result<(), CliError> {
    if all_passed(records) {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(records.iter().filter(|r| !r.passed()).count()))
    }
}

// ---------------------------------------------------------------- bound / mi / sweep

/// Everything computed at one launch level.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub snr_db: f64,
    pub report: CapacityReport,
    /// Rate floor per complex sample, when requested.
    pub mi_bits_per_sample: Option<f64>,
    pub mi_std_error: Option<f64>,
}

/// Bandwidth profile and optional rate estimate at energy `e0`. Seeds are
/// per point so a point's numbers do not depend on the rest of the sweep.
pub fn evaluate_point(
    cfg: &ExperimentConfig,
    prop: &Propagator,
    e0: f64,
    seeds: &SeedTree,
    with_mi: bool,
) -> Result<PointResult, CliError> {
    let grid = *prop.grid();
    let params = prop.params();
    let m = cfg.run.realizations;
    let mi_m = cfg.mi_realizations();
    let shared = with_mi && cfg.input.kind == InputKind::IidGaussian && mi_m == m;

    let bw_opts = EnsembleOptions {
        spectra: SpectrumTracking::AllPositions,
        keep_inputs: shared,
        keep_outputs: shared,
        ..EnsembleOptions::new(m)
    };
    let bw_run = run_ensemble(prop, launch(&cfg.input.kind, e0, &grid, seeds), seeds, &bw_opts)?;
    let profile = BandwidthProfile::from_spectra(&bw_run.spectra, &grid, cfg.run.epsilon)?;
    let report = capacity::spectral_efficiency_report(&profile, e0, params, &grid, &ALL_NORMALIZATIONS)?;

    let mut mi = None;
    if with_mi {
        let (x, y) = if shared {
            (bw_run.inputs, bw_run.outputs)
        } else {
            let r = run_ensemble(
                prop,
                launch(&InputKind::IidGaussian, e0, &grid, seeds),
                seeds,
                &EnsembleOptions {
                    keep_inputs: true,
                    keep_outputs: true,
                    ..EnsembleOptions::new(mi_m)
                },
            )?;
            (r.inputs, r.outputs)
        };
        let (x, y) = (x.ok_or(ssfm_core::Error::EmptyEnsemble)?, y.ok_or(ssfm_core::Error::EmptyEnsemble)?);
        let power = e0 / grid.num_samples() as f64;
        mi = Some(mi_from_ensembles(prop, &x, y, power, cfg.run.compensate_dispersion)?);
    }
    Ok(PointResult {
        snr_db: 10.0 * report.snr.log10(),
        mi_bits_per_sample: mi.as_ref().map(|r| r.bits_per_sample),
        mi_std_error: mi.as_ref().map(|r| r.fit.rate_std_error),
        report,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundOutput {
    #[serde(flatten)]
    pub report: CapacityReport,
    pub input_energy: f64,
    pub epsilon: f64,
    pub realizations: usize,
    pub master_seed: u64,
    pub invariant_violations: Vec<String>,
}

/// Writes `report.json`; fails with a check error when the report breaks
/// its own invariants.
pub fn cmd_bound(cfg: &ExperimentConfig, out: &Path) -> Result<BoundOutput, CliError> {
    let prop = cfg.propagator()?;
    let e0 = cfg.input_energy()?;
    let seeds = SeedTree::new(cfg.run.seed).child(0);
    let point = evaluate_point(cfg, &prop, e0, &seeds, false)?;
    let result = BoundOutput {
        invariant_violations: point.report.invariant_violations(),
        report: point.report,
        input_energy: e0,
        epsilon: cfg.run.epsilon,
        realizations: cfg.run.realizations,
        master_seed: cfg.run.seed,
    };
    ensure_dir(out)?;
    write_json(&artifact(out, "report.json"), &result)?;
    if !result.invariant_violations.is_empty() {
        return Err(CliError::ChecksFailed(result.invariant_violations.len()));
    }
    Ok(result)
}

/// Launch levels for `mi`: the SNR list when given, else the configured level.
fn mi_levels(cfg: &ExperimentConfig) -> Result<Vec<(Option<f64>, f64)>, CliError> {
    if cfg.run.snr_db.is_empty() {
        Ok(vec![(cfg.input.snr_db, cfg.input_energy()?)])
    } else {
        cfg.run
            .snr_db
            .iter()
            .map(|&db| Ok((Some(db), cfg.energy_for_snr_db(db)?)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiRow {
    pub snr_db: f64,
    pub mi_bits_per_sample: f64,
    pub mi_std_error: f64,
    pub bound_bits_per_sample: f64,
}

/// Writes `mi.csv` with columns [`MI_COLUMNS`].
pub fn cmd_mi(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<MiRow>, CliError> {
    let prop = cfg.propagator()?;
    let l = cfg.grid.num_samples() as f64;
    let master = SeedTree::new(cfg.run.seed);
    let mut rows = Vec::new();
    for (i, (db, e0)) in mi_levels(cfg)?.into_iter().enumerate() {
        let p = evaluate_point(cfg, &prop, e0, &master.child(i as u64), true)?;
        rows.push(MiRow {
            snr_db: db.unwrap_or(p.snr_db),
            mi_bits_per_sample: p.mi_bits_per_sample.unwrap_or(f64::NAN),
            mi_std_error: p.mi_std_error.unwrap_or(f64::NAN),
            bound_bits_per_sample: p.report.bound_bits_total.as_f64() / l,
        });
    }
    let text: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![fmt_f64(r.snr_db), fmt_f64(r.mi_bits_per_sample), fmt_f64(r.bound_bits_per_sample)])
        .collect();
    ensure_dir(out)?;
    write_csv(&artifact(out, "mi.csv"), &MI_COLUMNS, &text)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub bound_bits: f64,
    pub w_hz: f64,
    pub se_b: f64,
    pub se_w: f64,
    pub se_w0: f64,
    /// `L` times the per-sample rate floor, comparable with `bound_bits`.
    pub mi_estimate_bits: f64,
    pub mi_std_error_bits: f64,
}

impl SweepRow {
    fn fields(&self) -> Vec<String> {
        [
            self.snr_db,
            self.bound_bits,
            self.w_hz,
            self.se_b,
            self.se_w,
            self.se_w0,
            self.mi_estimate_bits,
        ]
        .into_iter()
        .map(fmt_f64)
        .collect()
    }
}

/// Writes `sweep.csv` with columns [`SWEEP_COLUMNS`], one row per SNR in
/// the given order. Point `i` uses the seed tree `child(i)` of the master.
pub fn cmd_sweep(cfg: &ExperimentConfig, snr_list_db: &[f64], out: &Path) -> Result<Vec<SweepRow>, CliError> {
    if snr_list_db.is_empty() {
        return Err(CliError::Config("sweep needs a non-empty SNR list".into()));
    }
    let prop = cfg.propagator()?;
    let l = cfg.grid.num_samples() as f64;
    let master = SeedTree::new(cfg.run.seed);
    let mut rows = Vec::with_capacity(snr_list_db.len());
    for (i, &db) in snr_list_db.iter().enumerate() {
        let e0 = cfg.energy_for_snr_db(db)?;
        debug_assert!((capacity::snr(e0, prop.params(), prop.grid()) - db_to_linear(db)).abs() < 1e-9 * db_to_linear(db));
        let p = evaluate_point(cfg, &prop, e0, &master.child(i as u64), true)?;
        let se = |n| p.report.efficiency(n).unwrap_or(f64::NAN);
        rows.push(SweepRow {
            snr_db: db,
            bound_bits: p.report.bound_bits_total.as_f64(),
            w_hz: p.report.max_bandwidth_hz.unwrap_or(f64::NAN),
            se_b: se(capacity::Normalization::SimBandwidth),
            se_w: se(capacity::Normalization::MaxBandwidth),
            se_w0: se(capacity::Normalization::InputBandwidth),
            mi_estimate_bits: l * p.mi_bits_per_sample.unwrap_or(f64::NAN),
            mi_std_error_bits: l * p.mi_std_error.unwrap_or(f64::NAN),
        });
    }
    let text: Vec<Vec<String>> = rows.iter().map(SweepRow::fields).collect();
    ensure_dir(out)?;
    write_csv(&artifact(out, "sweep.csv"), &SWEEP_COLUMNS, &text)?;
    Ok(rows)
}
