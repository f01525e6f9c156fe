//! The split-step channel: nonlinear, linear and noise steps, their
//! composition and inverse, ensemble runs and trajectory dumps.

pub mod dump;
pub mod ensemble;
pub mod linear;
pub mod noise;
pub mod nonlinear;
pub mod propagate;

pub use dump::{read_dump, write_dump, TrajectoryDump};
pub use ensemble::{run_ensemble, EnsembleOptions, EnsembleRun, PositionSpectrum, SpectrumTracking};
pub use linear::{all_pass_deviation, apply_loss, linear_step, AllPassSpec};
pub use noise::noise_step;
pub use nonlinear::{nonlinear_step, NamedPhaseFn, NonlinearPhaseSpec, PhaseLaw};
pub use propagate::{PropagationRecord, Propagator, StepScheme};
