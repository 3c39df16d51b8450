//! End-to-end skill estimation: correlations, optional spammer thresholding,
//! magnitude solve on |C|, then sign recovery.

use crate::error::{Error, Result};
use crate::graph::{ComponentReport, InteractionGraph};
use crate::observations::{
    estimate_correlations_multiclass, threshold_spammers, CorrelationEstimate, ObservationSet,
};
use crate::signs::{recover_signs, SignAssignment, SignPolicy};
use crate::solver::{
    expgrad_solve, pgd_solve, Method, SkillVector, SolverConfig, SolverTrace, Termination,
};

#[derive(Debug, Clone)]
pub struct EstimateOptions {
    pub config: SolverConfig,
    /// Spammer threshold delta; `None` skips thresholding entirely.
    pub spam_delta: Option<f64>,
    /// Drop edges backed by fewer than this many shared tasks.
    pub min_count: u64,
    pub sign_policy: SignPolicy,
    /// Refuse to run when a multi-worker component is bipartite.
    pub require_identifiable: bool,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            config: pipeline_pgd_config(),
            spam_delta: None,
            min_count: 1,
            sign_policy: SignPolicy::Majority,
            require_identifiable: true,
        }
    }
}

/// PGD configuration tuned for batch pipelines: the step is scaled to the
/// local gradient Lipschitz constant (about `3 K^2 ||N||_inf` on the box)
/// instead of the conservative worst-case cap, which matters when co-task
/// counts are large.
pub fn pipeline_pgd_config() -> SolverConfig {
    SolverConfig::pgd()
}

fn resolve_step(config: &SolverConfig, graph: &InteractionGraph) -> SolverConfig {
    let mut config = config.clone();
    if config.method == Method::Pgd && config.eta.is_none() && graph.edge_count() > 0 {
        config.eta = Some(0.4 / (config.cap_k.powi(2) * graph.infinity_norm() as f64));
    }
    config
}

#[derive(Debug, Clone)]
pub struct EstimateOutcome {
    /// Signed skills; zero for workers without usable interactions.
    pub skills: SkillVector,
    /// Magnitude-stage solver output.
    pub magnitudes: SkillVector,
    pub assignment: SignAssignment,
    pub trace: SolverTrace,
    /// Graph actually solved on (after any edge pruning).
    pub graph: InteractionGraph,
    pub report: ComponentReport,
    /// Signed correlations the sign stage used (after pruning).
    pub correlations: CorrelationEstimate,
    /// Multiclass skills clamped back into `[-1/(M-1), 1]` after signing.
    pub clamped: usize,
}

/// Runs the full estimation pipeline on one observation set.
pub fn estimate_skills(obs: &ObservationSet, opts: &EstimateOptions) -> Result<EstimateOutcome> {
    let mut corr = estimate_correlations_multiclass(obs);
    let mut graph = InteractionGraph::build(obs);

    if opts.min_count > 1 {
        let drop: Vec<(usize, usize)> = corr
            .entries()
            .iter()
            .filter(|e| e.count < opts.min_count)
            .map(|e| (e.i, e.j))
            .collect();
        graph = graph.without_edges(&drop)?;
        let kept = corr
            .entries()
            .iter()
            .filter(|e| e.count >= opts.min_count)
            .copied()
            .collect();
        corr = CorrelationEstimate::from_entries(corr.worker_count(), corr.class_count(), kept)?;
    }
    if let Some(delta) = opts.spam_delta {
        let (c, g) = threshold_spammers(&corr, delta, &graph)?;
        corr = c;
        graph = g;
    }

    let report = graph.analyze_components();
    if opts.require_identifiable && !report.identifiable() {
        let bad: Vec<String> = report
            .components()
            .iter()
            .zip(report.bipartite_flags())
            .filter(|(members, &b)| members.len() >= 2 && b)
            .map(|(members, _)| format!("{members:?}"))
            .collect();
        return Err(Error::NotIdentifiable(format!(
            "bipartite component(s) {}; rerun with force to estimate best-effort",
            bad.join(", ")
        )));
    }

    let w = obs.worker_count();
    let m = obs.class_count();
    if graph.edge_count() == 0 {
        // Nothing to estimate: every worker is isolated.
        let zeros = vec![0.0; w];
        let magnitudes = SkillVector::magnitudes(zeros.clone(), m)?;
        let skills = SkillVector::new_multiclass(zeros.clone(), m)?;
        return Ok(EstimateOutcome {
            skills,
            magnitudes: magnitudes.clone(),
            assignment: SignAssignment {
                signs: vec![0; w],
                flipped_globally: false,
                consistent: true,
                agreement: 1.0,
                zero_sum_components: Vec::new(),
            },
            trace: SolverTrace {
                records: Vec::new(),
                final_values: zeros,
                final_loss: 0.0,
                iterations: 0,
                converged: true,
                termination: Termination::GradientTolerance,
                step_size: 0.0,
            },
            graph,
            report,
            correlations: corr,
            clamped: 0,
        });
    }

    let config = resolve_step(&opts.config, &graph);
    let x0 = SkillVector::magnitudes(config.default_x0(w).values().to_vec(), m)?;
    let magnitude_input = corr.absolute();
    let (magnitudes, trace) = match config.method {
        Method::Pgd => pgd_solve(&magnitude_input, &graph, &config, &x0)?,
        Method::ExpGrad => expgrad_solve(&magnitude_input, &graph, &config, &x0)?,
    };

    let (signed, assignment) = recover_signs(&magnitudes, &corr, &graph, opts.sign_policy)?;

    // Sign application can push multiclass values below the model floor.
    let lo = -1.0 / (m as f64 - 1.0);
    let mut clamped = 0usize;
    let values: Vec<f64> = signed
        .values()
        .iter()
        .map(|&v| {
            let c = v.clamp(lo, 1.0);
            if c != v {
                clamped += 1;
            }
            c
        })
        .collect();
    let skills = SkillVector::new_multiclass(values, m)?;

    Ok(EstimateOutcome {
        skills,
        magnitudes,
        assignment,
        trace,
        graph,
        report,
        correlations: corr,
        clamped,
    })
}
