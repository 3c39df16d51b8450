//! Weighted rank-one completion of the worker correlation matrix.
//!
//! Both solvers minimize the weighted least-squares loss
//!
//! ```text
//! L(x) = 1/2 * sum_{(i,j) in E} N_ij (C_ij - x_i x_j)^2
//! ```
//!
//! over one edge term per unordered pair, so the gradient is
//! `g_i = -sum_j N_ij (C_ij - x_i x_j) x_j`.
//!
//! [`pgd_solve`] runs plain gradient descent with a per-worker boundary
//! projection onto `[-1 + tau/sqrt(N_i), 1 - tau/sqrt(N_i)]`. On a connected
//! non-bipartite graph with exact correlations and positive start it
//! converges to the unique positive factor.
//!
//! [`expgrad_solve`] runs the rescaled exponentiated-gradient update
//! `x <- P_C[x * exp(-alpha * grad)]` with `grad_i = sum_j N_ij (x_i x_j -
//! C_ij)` over the cube `C = [kappa, K]^W`. After the substitution
//! `x = e^z` this is projected gradient descent on a strongly convex
//! potential, which yields a polynomial iteration bound and the perturbation
//! bound exposed by [`perturbation_bound`].

use crate::error::{Error, Result};
use crate::graph::{InteractionGraph, SpectralReport};
use crate::observations::CorrelationEstimate;

/// Largest exponent argument accepted by [`potential_g`] before erroring.
const SAFE_EXP: f64 = 709.0;

fn invalid_bounds(kappa: f64, cap_k: f64) -> bool {
    kappa.is_nan() || cap_k.is_nan() || kappa <= 0.0 || cap_k < kappa
}

/// Per-worker skill estimates.
///
/// Binary skills live in `[-1, 1]`; `M`-class skills in `[-1/(M-1), 1]`.
/// Solver output is magnitude-only (all entries nonnegative) until sign
/// recovery resolves the global sign structure.
#[derive(Debug, Clone, PartialEq)]
pub struct SkillVector {
    values: Vec<f64>,
    magnitude_only: bool,
    class_count: usize,
}

impl SkillVector {
    /// Signed binary skills in `[-1, 1]`.
    pub fn new_binary(values: Vec<f64>) -> Result<Self> {
        Self::new_multiclass(values, 2)
    }

    /// Signed `M`-class skills in `[-1/(M-1), 1]`.
    pub fn new_multiclass(values: Vec<f64>, class_count: usize) -> Result<Self> {
        if class_count < 2 {
            return Err(Error::InvalidParameter(format!(
                "class_count must be >= 2, got {class_count}"
            )));
        }
        let lo = -1.0 / (class_count as f64 - 1.0);
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < lo - 1e-12 || v > 1.0 + 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "skill {v} for worker {i} outside [{lo}, 1]"
                )));
            }
        }
        Ok(Self {
            values,
            magnitude_only: false,
            class_count,
        })
    }

    /// Magnitude-stage estimates: nonnegative, not yet signed.
    pub fn magnitudes(values: Vec<f64>, class_count: usize) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(
                "magnitude-stage skills must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            values,
            magnitude_only: true,
            class_count,
        })
    }

    /// Pairs raw values with an existing vector's metadata without range
    /// checks; used by sign recovery, which owns the sign contract.
    pub(crate) fn signed_unchecked(values: Vec<f64>, class_count: usize) -> Self {
        Self {
            values,
            magnitude_only: false,
            class_count,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn magnitude_only(&self) -> bool {
        self.magnitude_only
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }
}

/// Which iteration to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Pgd,
    ExpGrad,
}

/// Solver parameters. `eta`, `alpha` and `tol_grad` default from the graph
/// when left unset.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub method: Method,
    /// PGD step size; `None` resolves to [`default_eta`].
    pub eta: Option<f64>,
    /// Exponentiated-gradient step size; `None` resolves to [`default_alpha`].
    pub alpha: Option<f64>,
    /// Lower cube bound `kappa > 0` for the exponentiated-gradient cube.
    pub kappa: f64,
    /// Upper cube bound `K >= kappa`.
    pub cap_k: f64,
    /// Boundary-projection parameter; PGD clips iterates into
    /// `[-1 + tau/sqrt(N_i), 1 - tau/sqrt(N_i)]`.
    pub tau: f64,
    pub max_iters: usize,
    /// Stop when the max-norm of the (descent) direction falls below this;
    /// `None` resolves to `1e-8 * (1 + ||N||_inf)`.
    pub tol_grad: Option<f64>,
    /// Stop when no coordinate moved more than this in one update.
    pub tol_step: f64,
    /// Reserved for randomized restarts; echoed into run metadata.
    pub seed: u64,
    /// Record one [`IterationRecord`] per update (plus the initial state).
    pub record_trace: bool,
    /// When set, record the Lyapunov ratio `V(x) = max_i max(x_i/r_i, r_i/x_i)`
    /// against this reference each iteration.
    pub lyapunov_reference: Option<Vec<f64>>,
    /// When set, record `||x - ref||_2^2` each iteration.
    pub distance_reference: Option<Vec<f64>>,
}

impl SolverConfig {
    pub fn pgd() -> Self {
        Self {
            method: Method::Pgd,
            eta: None,
            alpha: None,
            kappa: 0.1,
            cap_k: 1.0,
            tau: 1.0,
            max_iters: 100_000,
            tol_grad: None,
            tol_step: 1e-10,
            seed: 0,
            record_trace: true,
            lyapunov_reference: None,
            distance_reference: None,
        }
    }

    pub fn expgrad(kappa: f64, cap_k: f64) -> Self {
        Self {
            method: Method::ExpGrad,
            kappa,
            cap_k,
            ..Self::pgd()
        }
    }

    fn validate(&self) -> Result<()> {
        if invalid_bounds(self.kappa, self.cap_k) {
            return Err(Error::InvalidParameter(format!(
                "cube bounds require 0 < kappa <= K, got kappa = {}, K = {}",
                self.kappa, self.cap_k
            )));
        }
        if self.tau.is_nan() || self.tau < 0.0 {
            return Err(Error::InvalidParameter(format!("tau must be >= 0, got {}", self.tau)));
        }
        if let Some(eta) = self.eta {
            if eta.is_nan() || eta <= 0.0 {
                return Err(Error::InvalidParameter(format!("eta must be > 0, got {eta}")));
            }
        }
        if let Some(alpha) = self.alpha {
            if alpha.is_nan() || alpha <= 0.0 {
                return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
            }
        }
        if let Some(tol) = self.tol_grad {
            if tol.is_nan() || tol <= 0.0 {
                return Err(Error::InvalidParameter(format!("tol_grad must be > 0, got {tol}")));
            }
        }
        if self.tol_step.is_nan() || self.tol_step <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tol_step must be > 0, got {}",
                self.tol_step
            )));
        }
        Ok(())
    }

    /// Default start: all `0.5` for PGD, the geometric cube midpoint for
    /// the exponentiated-gradient method.
    pub fn default_x0(&self, worker_count: usize) -> SkillVector {
        let value = match self.method {
            Method::Pgd => 0.5,
            Method::ExpGrad => (self.kappa * self.cap_k).sqrt(),
        };
        SkillVector {
            values: vec![value; worker_count],
            magnitude_only: true,
            class_count: 2,
        }
    }
}

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    StepTolerance,
    MaxIterations,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Termination::GradientTolerance => "gradient tolerance",
            Termination::StepTolerance => "step tolerance",
            Termination::MaxIterations => "max iterations",
        };
        f.write_str(s)
    }
}

/// One trace row. Record 0 describes the starting point (`max_change = 0`).
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub loss: f64,
    /// Max-norm of the descent direction at this iterate.
    pub grad_norm_inf: f64,
    pub max_change: f64,
    pub lyapunov: Option<f64>,
    pub distance_sq: Option<f64>,
}

/// Full solve diagnostics.
#[derive(Debug, Clone)]
pub struct SolverTrace {
    pub records: Vec<IterationRecord>,
    pub final_values: Vec<f64>,
    pub final_loss: f64,
    /// Number of updates applied.
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// Step size actually used (eta for PGD, alpha for expgrad).
    pub step_size: f64,
}

fn check_dims(x: &SkillVector, corr: &CorrelationEstimate) -> Result<()> {
    if x.len() != corr.worker_count() {
        return Err(Error::DimensionMismatch {
            expected: corr.worker_count(),
            got: x.len(),
        });
    }
    Ok(())
}

/// Weighted rank-one loss `1/2 sum_(i,j) N_ij (C_ij - x_i x_j)^2`.
pub fn loss(x: &SkillVector, corr: &CorrelationEstimate) -> Result<f64> {
    check_dims(x, corr)?;
    Ok(loss_raw(x.values(), corr))
}

fn loss_raw(x: &[f64], corr: &CorrelationEstimate) -> f64 {
    0.5 * corr
        .entries()
        .iter()
        .map(|e| {
            let r = e.value - x[e.i] * x[e.j];
            e.count as f64 * r * r
        })
        .sum::<f64>()
}

/// Gradient of [`loss`]: `g_i = -sum_j N_ij (C_ij - x_i x_j) x_j`.
pub fn gradient(x: &SkillVector, corr: &CorrelationEstimate) -> Result<Vec<f64>> {
    check_dims(x, corr)?;
    Ok(gradient_raw(x.values(), corr))
}

fn gradient_raw(x: &[f64], corr: &CorrelationEstimate) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    for e in corr.entries() {
        let r = e.count as f64 * (e.value - x[e.i] * x[e.j]);
        g[e.i] -= r * x[e.j];
        g[e.j] -= r * x[e.i];
    }
    g
}

/// Computable safe PGD step size `kappa^2 / (K^4 ||N||_inf)`, a lower bound
/// on the descent-preserving cap `kappa^2 / (K^2 ||N D_s^2||_inf)` that does
/// not require the unknown skills.
pub fn default_eta(graph: &InteractionGraph, cap_k: f64, kappa: f64) -> Result<f64> {
    if graph.edge_count() == 0 {
        return Err(Error::NoInteractions);
    }
    if invalid_bounds(kappa, cap_k) {
        return Err(Error::InvalidParameter(format!(
            "cube bounds require 0 < kappa <= K, got kappa = {kappa}, K = {cap_k}"
        )));
    }
    Ok(kappa * kappa / (cap_k.powi(4) * graph.infinity_norm() as f64))
}

/// Guaranteed-rate step size for the exponentiated-gradient update:
/// `alpha = 1 / (2 sqrt(W) ||N||_2 K^2)`, the reciprocal of the potential's
/// gradient Lipschitz constant over the cube.
pub fn default_alpha(graph: &InteractionGraph, cap_k: f64) -> Result<f64> {
    if graph.edge_count() == 0 {
        return Err(Error::NoInteractions);
    }
    let w = graph.worker_count() as f64;
    Ok(1.0 / (2.0 * w.sqrt() * spectral_norm(graph) * cap_k * cap_k))
}

/// Spectral norm `||N||_2` by power iteration (200 rounds or relative change
/// below 1e-10). Deterministic all-ones start.
pub fn spectral_norm(graph: &InteractionGraph) -> f64 {
    let w = graph.worker_count();
    if graph.edge_count() == 0 {
        return 0.0;
    }
    let mut v = vec![1.0 / (w as f64).sqrt(); w];
    let mut sigma = 0.0f64;
    for _ in 0..200 {
        let mut nv = vec![0.0; w];
        for &(i, j) in graph.edges() {
            let c = graph.count(i, j) as f64;
            nv[i] += c * v[j];
            nv[j] += c * v[i];
        }
        let norm = nv.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        for a in &mut nv {
            *a /= norm;
        }
        let change = (norm - sigma).abs();
        sigma = norm;
        v = nv;
        if change <= 1e-10 * sigma.max(1.0) {
            break;
        }
    }
    sigma
}

struct TraceBuilder {
    records: Vec<IterationRecord>,
    record_trace: bool,
    lyapunov_reference: Option<Vec<f64>>,
    distance_reference: Option<Vec<f64>>,
}

impl TraceBuilder {
    fn new(config: &SolverConfig) -> Self {
        Self {
            records: Vec::new(),
            record_trace: config.record_trace,
            lyapunov_reference: config.lyapunov_reference.clone(),
            distance_reference: config.distance_reference.clone(),
        }
    }

    fn enabled(&self) -> bool {
        self.record_trace
    }

    fn push(&mut self, x: &[f64], loss: f64, grad_norm_inf: f64, max_change: f64) {
        if !self.record_trace {
            return;
        }
        let lyapunov = self
            .lyapunov_reference
            .as_ref()
            .and_then(|r| lyapunov_v(x, r).ok());
        let distance_sq = self.distance_reference.as_ref().map(|r| {
            x.iter()
                .zip(r)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        });
        self.records.push(IterationRecord {
            loss,
            grad_norm_inf,
            max_change,
            lyapunov,
            distance_sq,
        });
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, a| acc.max(a.abs()))
}

fn finish(
    x: Vec<f64>,
    corr: &CorrelationEstimate,
    class_count: usize,
    iterations: usize,
    termination: Termination,
    step_size: f64,
    trace: TraceBuilder,
) -> (SkillVector, SolverTrace) {
    let final_loss = loss_raw(&x, corr);
    let skills = SkillVector {
        values: x.clone(),
        magnitude_only: true,
        class_count,
    };
    let trace = SolverTrace {
        records: trace.records,
        final_values: x,
        final_loss,
        iterations,
        converged: termination != Termination::MaxIterations,
        termination,
        step_size,
    };
    (skills, trace)
}

/// Projected gradient descent for the magnitude stage.
///
/// Iterates `x_i <- clip(x_i - eta g_i, -1 + tau/sqrt(N_i), 1 - tau/sqrt(N_i))`
/// from a strictly positive start, stopping on gradient norm, step size or
/// the iteration cap.
pub fn pgd_solve(
    corr: &CorrelationEstimate,
    graph: &InteractionGraph,
    config: &SolverConfig,
    x0: &SkillVector,
) -> Result<(SkillVector, SolverTrace)> {
    config.validate()?;
    if config.method != Method::Pgd {
        return Err(Error::InvalidParameter("config.method must be pgd".into()));
    }
    check_dims(x0, corr)?;
    if x0.len() != graph.worker_count() {
        return Err(Error::DimensionMismatch {
            expected: graph.worker_count(),
            got: x0.len(),
        });
    }
    if x0.values().iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidParameter(
            "PGD requires a strictly positive starting point".into(),
        ));
    }

    let eta = match config.eta {
        Some(e) => e,
        None => default_eta(graph, config.cap_k, config.kappa)?,
    };
    let tol_grad = config
        .tol_grad
        .unwrap_or_else(|| 1e-8 * (1.0 + graph.infinity_norm() as f64));

    // Per-worker box; an empty box (tau^2 > N_i) collapses to {0}, and
    // isolated workers keep the full interval since no gradient reaches them.
    let bounds: Vec<(f64, f64)> = (0..x0.len())
        .map(|i| {
            let n_i = graph.interactions(i) as f64;
            if config.tau == 0.0 || n_i == 0.0 {
                (-1.0, 1.0)
            } else {
                let margin = config.tau / n_i.sqrt();
                if margin >= 1.0 {
                    (0.0, 0.0)
                } else {
                    (-1.0 + margin, 1.0 - margin)
                }
            }
        })
        .collect();

    let mut x: Vec<f64> = x0
        .values()
        .iter()
        .zip(&bounds)
        .map(|(&v, &(lo, hi))| v.clamp(lo, hi))
        .collect();

    let mut trace = TraceBuilder::new(config);
    let mut g = gradient_raw(&x, corr);
    if trace.enabled() {
        trace.push(&x, loss_raw(&x, corr), max_abs(&g), 0.0);
    }

    for iter in 0..config.max_iters {
        let gnorm = max_abs(&g);
        if gnorm <= tol_grad {
            return Ok(finish(x, corr, x0.class_count, iter, Termination::GradientTolerance, eta, trace));
        }
        let mut max_change = 0.0f64;
        for i in 0..x.len() {
            let next = (x[i] - eta * g[i]).clamp(bounds[i].0, bounds[i].1);
            max_change = max_change.max((next - x[i]).abs());
            x[i] = next;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { iteration: iter + 1 });
        }
        g = gradient_raw(&x, corr);
        if trace.enabled() {
            trace.push(&x, loss_raw(&x, corr), max_abs(&g), max_change);
        }
        if max_change <= config.tol_step {
            return Ok(finish(x, corr, x0.class_count, iter + 1, Termination::StepTolerance, eta, trace));
        }
    }
    Ok(finish(
        x,
        corr,
        x0.class_count,
        config.max_iters,
        Termination::MaxIterations,
        eta,
        trace,
    ))
}

/// Rescaled exponentiated-gradient iteration over the cube `[kappa, K]^W`.
///
/// Revealed correlations are clipped into the product range
/// `[kappa^2, K^2]` before iterating; this can only shrink the effective
/// perturbation when the true products lie in that range.
pub fn expgrad_solve(
    corr: &CorrelationEstimate,
    graph: &InteractionGraph,
    config: &SolverConfig,
    x0: &SkillVector,
) -> Result<(SkillVector, SolverTrace)> {
    config.validate()?;
    if config.method != Method::ExpGrad {
        return Err(Error::InvalidParameter("config.method must be expgrad".into()));
    }
    check_dims(x0, corr)?;
    if x0.len() != graph.worker_count() {
        return Err(Error::DimensionMismatch {
            expected: graph.worker_count(),
            got: x0.len(),
        });
    }
    let (kappa, cap_k) = (config.kappa, config.cap_k);
    if x0
        .values()
        .iter()
        .any(|&v| v < kappa - 1e-12 || v > cap_k + 1e-12)
    {
        return Err(Error::InvalidParameter(format!(
            "expgrad start must lie in [{kappa}, {cap_k}]"
        )));
    }

    let lo = kappa * kappa;
    let hi = cap_k * cap_k;
    let entries = corr
        .entries()
        .iter()
        .map(|e| crate::observations::CorrEntry {
            value: e.value.clamp(lo, hi),
            ..*e
        })
        .collect();
    let clipped = CorrelationEstimate::from_entries(corr.worker_count(), corr.class_count(), entries)?;

    let alpha = match config.alpha {
        Some(a) => a,
        None => default_alpha(graph, cap_k)?,
    };
    let tol_grad = config
        .tol_grad
        .unwrap_or_else(|| 1e-8 * (1.0 + graph.infinity_norm() as f64));

    let mut x: Vec<f64> = x0.values().to_vec();
    let direction = |x: &[f64]| -> Vec<f64> {
        let mut d = vec![0.0; x.len()];
        for e in clipped.entries() {
            let r = e.count as f64 * (x[e.i] * x[e.j] - e.value);
            d[e.i] += r;
            d[e.j] += r;
        }
        d
    };

    let mut trace = TraceBuilder::new(config);
    let mut d = direction(&x);
    if trace.enabled() {
        trace.push(&x, loss_raw(&x, &clipped), max_abs(&d), 0.0);
    }

    for iter in 0..config.max_iters {
        let dnorm = max_abs(&d);
        if dnorm <= tol_grad {
            return Ok(finish(x, &clipped, x0.class_count, iter, Termination::GradientTolerance, alpha, trace));
        }
        let mut max_change = 0.0f64;
        for i in 0..x.len() {
            let next = (x[i] * (-alpha * d[i]).exp()).clamp(kappa, cap_k);
            max_change = max_change.max((next - x[i]).abs());
            x[i] = next;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { iteration: iter + 1 });
        }
        d = direction(&x);
        if trace.enabled() {
            trace.push(&x, loss_raw(&x, &clipped), max_abs(&d), max_change);
        }
        if max_change <= config.tol_step {
            return Ok(finish(x, &clipped, x0.class_count, iter + 1, Termination::StepTolerance, alpha, trace));
        }
    }
    Ok(finish(
        x,
        &clipped,
        x0.class_count,
        config.max_iters,
        Termination::MaxIterations,
        alpha,
        trace,
    ))
}

/// Multiplicative Lyapunov ratio `V = max_i max(x_i/r_i, r_i/x_i)`.
///
/// Along an unprojected PGD run with a small enough step this is
/// non-increasing when the reference is the true skill vector.
pub fn lyapunov_v(x: &[f64], reference: &[f64]) -> Result<f64> {
    if x.len() != reference.len() {
        return Err(Error::DimensionMismatch {
            expected: reference.len(),
            got: x.len(),
        });
    }
    let mut v = 1.0f64;
    for (i, (&a, &r)) in x.iter().zip(reference).enumerate() {
        if a <= 0.0 || r <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "lyapunov ratio requires strictly positive entries (index {i})"
            )));
        }
        v = v.max(a / r).max(r / a);
    }
    Ok(v)
}

/// Skill-error bound for the exponentiated-gradient limit under entrywise
/// correlation perturbations of size at most `delta_max`:
///
/// ```text
/// ||x* - s||_2 <= K sqrt(W) ||N||_inf / mu * delta_max,
/// mu = kappa^2 * lambda_min(L_s^unit) * N_min
/// ```
///
/// where the signless-Laplacian eigenvalue is taken with unit weights over
/// the support graph (the worst component when disconnected).
pub fn perturbation_bound(
    graph: &InteractionGraph,
    spectral: &SpectralReport,
    kappa: f64,
    cap_k: f64,
    delta_max: f64,
) -> Result<f64> {
    if invalid_bounds(kappa, cap_k) {
        return Err(Error::InvalidParameter(format!(
            "cube bounds require 0 < kappa <= K, got kappa = {kappa}, K = {cap_k}"
        )));
    }
    if delta_max.is_nan() || delta_max < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "delta_max must be >= 0, got {delta_max}"
        )));
    }
    let lambda = spectral
        .lambda_min_unit
        .iter()
        .fold(f64::INFINITY, |acc, &l| acc.min(l));
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::NotIdentifiable(
            "bound undefined; a component is bipartite or isolated".into(),
        ));
    }
    let mu = kappa * kappa * lambda * spectral.n_min as f64;
    let w = graph.worker_count() as f64;
    Ok(cap_k * w.sqrt() * spectral.norm_inf as f64 / mu * delta_max)
}

/// Convex potential behind the exponentiated-gradient update:
/// `g(z) = 1/2 sum_{i,j} N_ij e^{z_i+z_j} - sum_i z_i sum_j N_ij C_ij`
/// (ordered-pair sums). Its gradient at `z = ln x` equals the expgrad
/// direction, which is what the finite-difference diagnostics check.
pub fn potential_g(z: &[f64], corr: &CorrelationEstimate, graph: &InteractionGraph) -> Result<f64> {
    if z.len() != graph.worker_count() {
        return Err(Error::DimensionMismatch {
            expected: graph.worker_count(),
            got: z.len(),
        });
    }
    let mut total = 0.0;
    for e in corr.entries() {
        let arg = z[e.i] + z[e.j];
        if arg > SAFE_EXP {
            return Err(Error::Overflow(format!(
                "z_{} + z_{} = {arg} exceeds the safe exponent range",
                e.i, e.j
            )));
        }
        let n = graph.count(e.i, e.j) as f64;
        total += n * (arg.exp() - e.value * arg);
    }
    Ok(total)
}
