//! Parallel Monte-Carlo propagation.
//!
//! Realizations are processed in fixed batches of `BATCH` consecutive
//! indices. Each batch reduces sequentially and batch results are combined
//! in index order, so every output is bit-identical for any thread count.

use rayon::prelude::*;

use crate::error::Result;
use crate::field::{Ensemble, FieldState};
use crate::rng::SeedTree;

use super::propagate::{PropagationRecord, Propagator};

const BATCH: usize = 256;

/// Which positions get an ensemble-averaged periodogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpectrumTracking {
    #[default]
    None,
    /// `k = 0` and `k = K` only.
    Endpoints,
    /// Every `k = 0..=K`.
    AllPositions,
}

#[derive(Debug, Clone, Default)]
pub struct EnsembleOptions {
    pub realizations: usize,
    pub keep_inputs: bool,
    pub keep_outputs: bool,
    pub spectra: SpectrumTracking,
    /// Full records are kept for realizations `0..retain_records`.
    pub retain_records: usize,
    pub retain_trajectory: bool,
}

impl EnsembleOptions {
    pub fn new(realizations: usize) -> Self {
        Self {
            realizations,
            ..Default::default()
        }
    }
}

/// Ensemble-averaged periodogram `mean |dft(x)_l|^2` at one position.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionSpectrum {
    pub position: usize,
    pub mean_power: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct EnsembleRun {
    pub inputs: Option<Ensemble>,
    pub outputs: Option<Ensemble>,
    pub input_energies: Vec<f64>,
    pub output_energies: Vec<f64>,
    pub spectra: Vec<PositionSpectrum>,
    pub records: Vec<PropagationRecord>,
}

#[derive(Default)]
struct Partial {
    inputs: Vec<FieldState>,
    outputs: Vec<FieldState>,
    input_energies: Vec<f64>,
    output_energies: Vec<f64>,
    spectra: Vec<Vec<f64>>,
    records: Vec<PropagationRecord>,
}

/// Propagates `opts.realizations` launch fields produced by `input(r)`.
pub fn run_ensemble<F>(
    prop: &Propagator,
    input: F,
    seeds: &SeedTree,
    opts: &EnsembleOptions,
) -> Result<EnsembleRun>
where
    F: Fn(u64) -> Result<FieldState> + Sync,
{
    let k_max = prop.grid().num_steps();
    let l = prop.grid().num_samples();
    let tracked: Vec<usize> = match opts.spectra {
        SpectrumTracking::None => vec![],
        SpectrumTracking::Endpoints => vec![0, k_max],
        SpectrumTracking::AllPositions => (0..=k_max).collect(),
    };
    let slot = |k: usize| tracked.iter().position(|&t| t == k);
    let dft = prop.dft();
    let m = opts.realizations;
    let n_batches = m.div_ceil(BATCH);

    let partials = (0..n_batches)
        .into_par_iter()
        .map(|b| -> Result<Partial> {
            let mut part = Partial {
                spectra: vec![vec![0.0; l]; tracked.len()],
                ..Default::default()
            };
            let accumulate = |f: &FieldState, acc: &mut Vec<Vec<f64>>| -> Result<()> {
                if let Some(i) = slot(f.position()) {
                    let spec = dft.forward(f.samples())?;
                    acc[i].iter_mut().zip(&spec).for_each(|(a, s)| *a += s.norm_sqr());
                }
                Ok(())
            };
            for r in (b * BATCH)..((b + 1) * BATCH).min(m) {
                let x = input(r as u64)?;
                accumulate(&x, &mut part.spectra)?;
                let keep_record = r < opts.retain_records;
                let mut trajectory = (keep_record && opts.retain_trajectory).then(|| vec![x.clone()]);
                let mut visit_err = Ok(());
                let y = prop.propagate_with(&x, seeds, r as u64, |f| {
                    if visit_err.is_ok() {
                        visit_err = accumulate(f, &mut part.spectra);
                    }
                    if let Some(t) = trajectory.as_mut() {
                        t.push(f.clone());
                    }
                })?;
                visit_err?;
                part.input_energies.push(x.energy());
                part.output_energies.push(y.energy());
                if keep_record {
                    part.records.push(PropagationRecord {
                        input: x.clone(),
                        output: y.clone(),
                        trajectory,
                        master_seed: seeds.master(),
                        realization: r as u64,
                    });
                }
                if opts.keep_inputs {
                    part.inputs.push(x);
                }
                if opts.keep_outputs {
                    part.outputs.push(y);
                }
            }
            Ok(part)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut run = EnsembleRun::default();
    let mut sums = vec![vec![0.0; l]; tracked.len()];
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for p in partials {
        run.input_energies.extend(p.input_energies);
        run.output_energies.extend(p.output_energies);
        run.records.extend(p.records);
        inputs.extend(p.inputs);
        outputs.extend(p.outputs);
        for (s, ps) in sums.iter_mut().zip(&p.spectra) {
            s.iter_mut().zip(ps).for_each(|(a, b)| *a += b);
        }
    }
    run.spectra = tracked
        .iter()
        .zip(sums)
        .map(|(&position, s)| PositionSpectrum {
            position,
            mean_power: s.into_iter().map(|v| v / m as f64).collect(),
        })
        .collect();
    if opts.keep_inputs && m > 0 {
        run.inputs = Some(Ensemble::new(inputs)?);
    }
    if opts.keep_outputs && m > 0 {
        run.outputs = Some(Ensemble::new(outputs)?);
    }
    Ok(run)
}
