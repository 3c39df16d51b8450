//! Crowd-worker skill estimation from sparse, irregular label data.
//!
//! Under the single-coin worker model the expected agreement between two
//! workers factorizes as `E[Y_i Y_j] = s_i s_j`, so the skill vector is the
//! rank-one factor of the observed correlation matrix, sampled only on the
//! worker-interaction graph. This crate provides the whole chain:
//!
//! - [`observations`]: label data, empirical correlations (binary and
//!   multiclass), spammer thresholding, finite-sample radii;
//! - [`graph`]: the interaction graph, connectivity/bipartiteness analysis
//!   (the identifiability criterion), signless-Laplacian spectra;
//! - [`solver`]: projected gradient descent and a rescaled
//!   exponentiated-gradient method for the weighted rank-one completion,
//!   with convergence diagnostics and perturbation bounds;
//! - [`signs`]: sign recovery over a spanning tree plus closed-form
//!   odd-cycle/path magnitude oracles;
//! - [`inference`]: log-odds weighted majority voting, the majority-vote
//!   baseline, committee-potential error bounds;
//! - [`synth`]: reproducible synthetic instances (graph families, skill
//!   distributions, correlation noise, sparsification);
//! - [`pipeline`]: the batch estimation pipeline used by the CLI.

pub mod error;
pub mod graph;
pub mod inference;
pub mod observations;
pub mod pipeline;
pub mod signs;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{ComponentReport, InteractionGraph, SpectralReport};
pub use observations::{
    estimate_correlations_binary, estimate_correlations_multiclass, hoeffding_radius,
    threshold_spammers, CorrEntry, CorrelationEstimate, Observation, ObservationSet,
};
pub use pipeline::{estimate_skills, EstimateOptions, EstimateOutcome};
pub use signs::{odd_cycle_magnitude, propagate_magnitudes, recover_signs, SignAssignment, SignPolicy};
pub use solver::{
    default_alpha, default_eta, expgrad_solve, gradient, loss, lyapunov_v, perturbation_bound,
    pgd_solve, potential_g, spectral_norm, Method, SkillVector, SolverConfig, SolverTrace,
    Termination,
};
pub use synth::{
    exact_correlations, generate, inject_correlation_noise, sparsify, Assignment, GraphFamily,
    SkillDist, SynthConfig, SynthInstance,
};
