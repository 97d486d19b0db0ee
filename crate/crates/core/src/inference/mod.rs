//! Particle approximation of the latent-location posterior (the E-step).

mod filter;
mod proposal;
mod resample;

pub use filter::{
    ensemble_forecast, init_ensemble, pf_step, run_filter, LaggedMoments, ParticleEnsemble, PosteriorSummary,
    StepDiagnostics, WeightedSample,
};
pub use proposal::{proposal_params, Proposal};
pub use resample::{effective_sample_size, multinomial_resample, normalize_log_weights, systematic_resample};
