//! Stochastic oracles: synthesized thermal noise driving the closed-form
//! Langevin solution, empirical fluctuation-theorem estimators, and an exact
//! simulation of a finite classical bath.

mod discrete;
mod estimators;
mod noise;
mod trajectory;

pub use discrete::{
    discrete_bath_oracle, DiscreteBath, DiscreteRun, Discretization, NormalModes, PhaseState, Propagation,
};
pub use estimators::{
    crooks_histogram_fit, empirical_ft_estimators, jarzynski_estimate, moments, CrooksFit, FtEstimates,
    JarzynskiEstimate, Moments, CROOKS_BINS, MIN_BIN_COUNT,
};
pub use noise::{synthesize_noise, NoiseEnsemble, NoiseSynthesizer};
pub use trajectory::{
    noise_len_for_work, noise_offset, sample_trajectories, sample_work, ContinuumSampler, ResponseVector,
    TrajectoryEnsemble, WorkSamples,
};
