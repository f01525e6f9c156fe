//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

use std::fs;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use ssfm_cli::{cmd_bound, cmd_mi, cmd_sweep, ExperimentConfig};
use ssfm_core::engine::{run_ensemble, EnsembleOptions, NonlinearPhaseSpec};
use ssfm_core::lab::{
    check_energy_ledger, estimate_correlation, knn_entropy, max_amplitude_deviation, max_entropy_gap,
    round_trip_error, verify_epi, verify_nonlinear_entropy_preservation, KnnConfig, SampleDistribution,
};
use ssfm_core::{generate_input, Ensemble, FieldState, InputKind, SeedTree};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)).unwrap()
}

fn knn() -> KnnConfig {
    KnnConfig::default()
}

/// Mean output energy equals E0 + N_ASE B_n T within 3 SE
/// (L = 64, K = 50, M = 10^5, SNR = 1).
fn energy_ledger() -> Verdict {
    let mut cfg = load("demo.toml");
    cfg.input.snr_db = Some(0.0);
    let prop = cfg.propagator().unwrap();
    let grid = cfg.grid;
    let e0 = cfg.input_energy().unwrap();
    let seeds = SeedTree::new(101);
    let run = run_ensemble(
        &prop,
        |r| generate_input(&InputKind::IidGaussian, e0, &grid, &seeds, r),
        &seeds,
        &EnsembleOptions::new(100_000),
    )
    .unwrap();
    let noise = prop.params().total_noise_energy(&grid);
    let rep = check_energy_ledger(&run.output_energies, e0, noise);
    verdict(
        (grid.num_samples(), grid.num_steps()) == (64, 50)
            && (e0 / noise - 1.0).abs() < 1e-12
            && (rep.mean_output_energy - rep.expected).abs() <= 3.0 * rep.standard_error,
        format!(
            "mean {:.6e} vs {:.6e}, |z| = {:.2} (rel. SE {:.2e})",
            rep.mean_output_energy,
            rep.expected,
            rep.z_score,
            rep.standard_error / rep.expected
        ),
    )
}

/// Nonlinear step keeps every |a_l| to 1e-14, linear step keeps energy to
/// 1e-12, K = 100 noise-free round trip recovers the input to 1e-9.
fn per_realization_conservation() -> Verdict {
    let mut cfg = load("demo.toml");
    cfg.grid = cfg.grid.with_num_steps(100).unwrap();
    cfg.input.snr_db = Some(20.0);
    let prop = cfg.propagator().unwrap();
    let grid = cfg.grid;
    let e0 = cfg.input_energy().unwrap();
    let seeds = SeedTree::new(102);
    let inputs: Vec<FieldState> = (0..256)
        .map(|r| generate_input(&InputKind::IidGaussian, e0, &grid, &seeds, r).unwrap())
        .collect();
    let before = Ensemble::new(inputs.clone()).unwrap();

    let mut after_nl = Vec::new();
    let mut lin_dev: f64 = 0.0;
    for x in &inputs {
        let mut s = x.samples().to_vec();
        prop.nonlinear().apply_in_place(&mut s, grid.delta_z());
        let e_nl: f64 = s.iter().map(Complex64::norm_sqr).sum();
        after_nl.push(FieldState::new(0, s.clone()).unwrap());
        prop.dft().filter_in_place(&mut s, prop.step_taps()).unwrap();
        let e_lin: f64 = s.iter().map(Complex64::norm_sqr).sum();
        lin_dev = lin_dev.max((e_lin - e_nl).abs() / e_nl);
    }
    let nl_dev = max_amplitude_deviation(&before, &Ensemble::new(after_nl).unwrap());
    let rt = round_trip_error(&prop, &inputs).unwrap();
    verdict(
        nl_dev <= 1e-14 && lin_dev <= 1e-12 && rt <= 1e-9,
        format!("nonlinear |a| {nl_dev:.2e}, linear energy {lin_dev:.2e}, K=100 round trip {rt:.2e}"),
    )
}

/// Paired k-NN entropy before/after the nonlinear step at L = 1,
/// M = 10^5 and gamma*dz in {0.1, 1, 10}: |dh| < 0.02 nats. Every law has
/// unit mean power, so gamma*dz is the rotation in radians at that power.
fn entropy_preservation() -> Verdict {
    // half the power in the mean, half in the spread
    let s = (0.5f64 / 1.25).sqrt();
    let dists = [
        ("gaussian", SampleDistribution::ProperGaussian { variance: 1.0 }),
        ("ring", SampleDistribution::Annulus { inner: 1.0, outer: 1.0 }),
        (
            "shifted gaussian",
            SampleDistribution::ShiftedGaussian {
                mean_re: s,
                mean_im: 0.5 * s,
                variance: 0.5,
            },
        ),
    ];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (i, gdz) in [0.1, 1.0, 10.0].into_iter().enumerate() {
        let spec = NonlinearPhaseSpec::kerr(gdz);
        for (j, (name, d)) in dists.iter().enumerate() {
            let rep =
                verify_nonlinear_entropy_preservation(&spec, 1.0, d, 1, 100_000, &knn(), (10 * i + j) as u64).unwrap();
            parts.push(format!("{name}@{gdz}: {:+.4}", rep.difference));
            worst = worst.max(rep.difference.abs());
        }
    }
    verdict(worst < 0.02, format!("dh nats [{}]", parts.join(", ")))
}

/// Gaussian equality cases of the EPI and of the max-entropy bound, plus the
/// three-term ordering on every test ensemble.
fn epi_and_max_entropy() -> Verdict {
    let m = 100_000;
    let x = SampleDistribution::ProperGaussian { variance: 1.0 }.draw(1, m, 201);
    let y = SampleDistribution::ProperGaussian { variance: 2.0 }.draw(1, m, 202);
    let epi = verify_epi(&x, &y, 1, &knn()).unwrap();
    let epi_ok = epi.slack.abs() <= 3.0 * epi.combined_std_error;

    let g = Ensemble::from_samples(0, x.iter().map(|v| vec![*v * 1.3]).collect()).unwrap();
    let h = knn_entropy(&g.real_embedding(), 2, &knn()).unwrap();
    let det = (std::f64::consts::PI * std::f64::consts::E).ln() + estimate_correlation(&g).unwrap().log_det().unwrap();
    let eq_ok = (h.value - det).abs() <= 3.0 * h.standard_error;

    let rows = |v: Vec<Complex64>, l: usize| {
        Ensemble::from_samples(0, v.chunks(l).map(<[_]>::to_vec).collect()).unwrap()
    };
    let mut ensembles = vec![
        ("gaussian L=1", g.clone()),
        (
            "qpsk L=2",
            rows(
                SampleDistribution::Qpsk {
                    amplitude: 1.0,
                    noise_variance: 0.1,
                }
                .draw(2, 20_000, 203),
                2,
            ),
        ),
        ("annulus L=1", rows(SampleDistribution::Annulus { inner: 0.8, outer: 1.0 }.draw(1, 20_000, 204), 1)),
        ("disk L=2", rows(SampleDistribution::UniformDisk { radius: 2.0 }.draw(2, 20_000, 205), 2)),
    ];
    let u = SampleDistribution::ProperGaussian { variance: 1.0 }.draw(1, 20_000, 206);
    let w = SampleDistribution::ProperGaussian { variance: 0.1 }.draw(1, 20_000, 207);
    ensembles.push((
        "correlated gaussian L=2",
        Ensemble::from_samples(0, u.iter().zip(&w).map(|(a, b)| vec![*a, a + b]).collect()).unwrap(),
    ));
    let cfg = load("entropy.toml");
    let prop = cfg.propagator().unwrap();
    let e0 = cfg.input_energy().unwrap();
    let seeds = SeedTree::new(208);
    let out = run_ensemble(
        &prop,
        |r| generate_input(&InputKind::IidGaussian, e0, &cfg.grid, &seeds, r),
        &seeds,
        &EnsembleOptions {
            keep_outputs: true,
            ..EnsembleOptions::new(20_000)
        },
    )
    .unwrap();
    ensembles.push(("channel output L=2", out.outputs.unwrap()));

    let bad: Vec<&str> = ensembles
        .iter()
        .filter(|(_, e)| !max_entropy_gap(e, &knn()).unwrap().ordering_holds)
        .map(|(n, _)| *n)
        .collect();
    verdict(
        epi_ok && eq_ok && bad.is_empty(),
        format!(
            "EPI slack {:.2e} (3SE {:.2e}); h - logdet term {:.2e} (3SE {:.2e}); ordering fails on {:?}",
            epi.slack,
            3.0 * epi.combined_std_error,
            h.value - det,
            3.0 * h.standard_error,
            bad
        ),
    )
}

/// L * rate floor <= bound + 3 SE over -5..20 dB with gamma > 0.
fn bound_consistency() -> Verdict {
    let mut cfg = load("demo.toml");
    cfg.run.realizations = 4000;
    let dir = tempfile::tempdir().unwrap();
    let snrs = [-5.0, 0.0, 5.0, 10.0, 15.0, 20.0];
    let rows = cmd_sweep(&cfg, &snrs, dir.path()).unwrap();
    let ok = cfg.channel.gamma > 0.0
        && rows.len() == snrs.len()
        && rows.iter().all(|r| r.mi_estimate_bits <= r.bound_bits + 3.0 * r.mi_std_error_bits);
    let margins: Vec<String> = rows
        .iter()
        .map(|r| format!("{}dB {:.1}/{:.1}", r.snr_db, r.mi_estimate_bits, r.bound_bits))
        .collect();
    verdict(ok, format!("floor/bound bits: {}", margins.join(", ")))
}

/// gamma = 0 at 10 dB with >= 10^6 pairs: within 2% of log2(1 + SNR).
fn linear_tightness() -> Verdict {
    let mut cfg = load("linear.toml");
    cfg.run.snr_db = vec![10.0];
    let pairs = cfg.mi_realizations() * cfg.grid.num_samples();
    let dir = tempfile::tempdir().unwrap();
    let row = cmd_mi(&cfg, dir.path()).unwrap().remove(0);
    let target = 11f64.log2();
    let rel = (row.mi_bits_per_sample - target).abs() / target;
    verdict(
        cfg.channel.gamma == 0.0 && pairs >= 1_000_000 && rel < 0.02,
        format!(
            "{:.5} vs {:.5} bits/sample ({:.3}% off, {} pairs)",
            row.mi_bits_per_sample,
            target,
            100.0 * rel,
            pairs
        ),
    )
}

/// Narrowband launch (bins 0..L/8) under strong SPM broadens, and the
/// report's spectral-efficiency ordering holds.
fn spectral_broadening() -> Verdict {
    let cfg = load("narrowband.toml");
    assert!(matches!(
        cfg.input.kind,
        InputKind::SincPulseTrain { band_start: 0, band_bins, .. } if band_bins == cfg.grid.num_samples() / 8
    ));
    let dir = tempfile::tempdir().unwrap();
    let out = cmd_bound(&cfg, dir.path()).unwrap();
    let r = &out.report;
    let k = cfg.grid.num_steps();
    let w = |pos: usize| r.bandwidth_profile.iter().find(|p| p.position == pos).unwrap().bandwidth_hz;
    let (w0, wk) = (w(0), w(k));
    use ssfm_core::capacity::Normalization::*;
    let (se_b, se_w, se_w0) = (
        r.efficiency(SimBandwidth).unwrap(),
        r.efficiency(MaxBandwidth).unwrap(),
        r.efficiency(InputBandwidth).unwrap(),
    );
    verdict(
        wk > w0 && r.invariant_violations().is_empty() && se_b <= se_w && se_w < se_w0,
        format!(
            "W(z0) {:.3} GHz -> W(zK) {:.3} GHz; SE_B {se_b:.3} <= SE_W {se_w:.3} < SE_W0 {se_w0:.3}",
            w0 / 1e9,
            wk / 1e9
        ),
    )
}

/// Two sweeps with the same config and seed give byte-identical CSV, also
/// when the second runs single-threaded.
fn determinism() -> Verdict {
    let mut cfg = load("demo.toml");
    cfg.run.realizations = 600;
    let snrs = cfg.run.snr_db.clone();
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    cmd_sweep(&cfg, &snrs, a.path()).unwrap();
    cmd_sweep(&cfg, &snrs, b.path()).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    pool.install(|| cmd_sweep(&cfg, &snrs, c.path())).unwrap();
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("sweep.csv")).unwrap();
    let (ba, bb, bc) = (read(&a), read(&b), read(&c));
    verdict(
        ba == bb && ba == bc,
        format!("{} bytes; repeat identical: {}, 1-thread identical: {}", ba.len(), ba == bb, ba == bc),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("energy ledger", energy_ledger),
        ("per-realization conservation", per_realization_conservation),
        ("entropy preservation", entropy_preservation),
        ("EPI and max-entropy", epi_and_max_entropy),
        ("bound consistency", bound_consistency),
        ("linear-channel tightness", linear_tightness),
        ("spectral broadening ordering", spectral_broadening),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let v = f();
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {} {}: {} ({}; {:.1} s)",
            i + 1,
            name,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            t.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
