//! Subcommand implementations.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::{json, Value};

use crowdcorr::inference::{
    committee_potential, majority_vote, map_predict_binary, map_predict_multiclass,
    prediction_error,
};
use crowdcorr::observations::hoeffding_radius;
use crowdcorr::pipeline::{estimate_skills, EstimateOptions};
use crowdcorr::signs::SignPolicy;
use crowdcorr::solver::{perturbation_bound, Method, SkillVector, SolverConfig};
use crowdcorr::synth::{generate, Assignment, GraphFamily, SkillDist, SynthConfig};
use crowdcorr::InteractionGraph;

use crate::cli::{
    CheckArgs, EstimateArgs, EvalArgs, InferArgs, SignPolicyArg, SolverArgs, SynthArgs, SweepArgs,
};
use crate::formats::{
    append_plot_rows, read_observations, read_skills, read_truth, skills_document,
    unix_timestamp, write_json, write_observations, write_truth, LabelEncoding, SkillRow, Usage,
};

pub fn parse_graph_family(raw: &str) -> Result<GraphFamily> {
    match raw {
        "clique" => Ok(GraphFamily::Clique),
        "star3" => Ok(GraphFamily::StarWithTriangle),
        "ring" => Ok(GraphFamily::Ring),
        "grid" => Ok(GraphFamily::GridPlusEdge),
        other => {
            if let Some(p) = other.strip_prefix("er:") {
                let p: f64 = p
                    .parse()
                    .map_err(|_| Usage(format!("bad Erdos-Renyi probability '{p}'")))?;
                Ok(GraphFamily::ErdosRenyi { p })
            } else {
                Err(Usage(format!(
                    "unknown graph '{other}' (expected clique, star3, ring, grid, er:<p>)"
                ))
                .into())
            }
        }
    }
}

pub fn parse_skill_dist(raw: &str) -> Result<SkillDist> {
    let (kind, rest) = raw.split_once(':').unwrap_or((raw, ""));
    let nums = || -> Result<Vec<f64>> {
        rest.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| anyhow!(Usage(format!("bad number '{s}' in skill dist '{raw}'"))))
            })
            .collect()
    };
    match kind {
        "grid" => {
            let v = nums()?;
            if v.len() != 2 {
                bail!(Usage(format!("grid needs lo,hi: '{raw}'")));
            }
            Ok(SkillDist::UniformGrid { lo: v[0], hi: v[1] })
        }
        "beta" => {
            let v = nums()?;
            if v.len() != 2 {
                bail!(Usage(format!("beta needs alpha,beta: '{raw}'")));
            }
            Ok(SkillDist::Beta { alpha: v[0], beta: v[1] })
        }
        "const" => {
            let v = nums()?;
            if v.len() != 1 {
                bail!(Usage(format!("const needs one value: '{raw}'")));
            }
            Ok(SkillDist::Constant(v[0]))
        }
        "explicit" => Ok(SkillDist::Explicit(nums()?)),
        _ => bail!(Usage(format!(
            "unknown skill dist '{raw}' (expected grid:lo,hi beta:a,b const:c explicit:v1,v2,...)"
        ))),
    }
}

fn component_entries(
    graph: &InteractionGraph,
    report: &crowdcorr::ComponentReport,
    spectral: Option<&crowdcorr::SpectralReport>,
    worker_ids: &[String],
) -> Vec<Value> {
    report
        .components()
        .iter()
        .enumerate()
        .map(|(k, members)| {
            let ids: Vec<&str> = members.iter().map(|&i| worker_ids[i].as_str()).collect();
            json!({
                "workers": ids,
                "size": members.len(),
                "bipartite": report.bipartite_flags()[k],
                "estimable": report.estimable(k),
                "lambda_min_signless": spectral.map(|s| s.lambda_min_signless[k]),
                "lambda_min_unit": spectral.map(|s| s.lambda_min_unit[k]),
                "interactions": members.iter().map(|&i| graph.interactions(i)).sum::<u64>() / 2,
            })
        })
        .collect()
}

pub fn cmd_check(args: &CheckArgs) -> Result<()> {
    let encoding = LabelEncoding::resolve(args.labels.as_deref(), args.classes)?;
    let obs = read_observations(&args.input, args.classes, encoding)?;
    let graph = InteractionGraph::build(&obs);
    let report = graph.analyze_components();
    let spectral = graph.spectral_report().ok();

    let degrees: Vec<usize> = (0..graph.worker_count()).map(|i| graph.degree(i)).collect();
    let radius = spectral.as_ref().and_then(|s| {
        hoeffding_radius(s.n_min, graph.degree_sum(), args.delta).ok()
    });

    let doc = json!({
        "workers": obs.worker_count(),
        "tasks": obs.task_count(),
        "classes": obs.class_count(),
        "observations": obs.observations().len(),
        "identifiable": report.identifiable(),
        "components": component_entries(&graph, &report, spectral.as_ref(), obs.worker_ids()),
        "non_estimable_workers": report
            .singletons()
            .iter()
            .map(|&i| obs.worker_ids()[i].as_str())
            .collect::<Vec<_>>(),
        "n_min": spectral.as_ref().map(|s| s.n_min),
        "norm_inf": graph.infinity_norm(),
        "norm_two": spectral.as_ref().map(|s| s.norm_two),
        "degrees": {
            "min": degrees.iter().min().copied().unwrap_or(0),
            "max": degrees.iter().max().copied().unwrap_or(0),
            "mean": degrees.iter().sum::<usize>() as f64 / degrees.len().max(1) as f64,
        },
        "hoeffding": { "delta": args.delta, "radius": radius },
        "meta": { "command": "check", "timestamp": unix_timestamp() },
    });
    write_json(args.output.as_deref(), &doc)
}

fn solver_config(args: &SolverArgs) -> Result<SolverConfig> {
    let mut config = match args.method.as_str() {
        "pgd" => SolverConfig::pgd(),
        "expgrad" => SolverConfig::expgrad(args.kappa, args.cap_k),
        other => bail!(Usage(format!("unknown method '{other}' (expected pgd or expgrad)"))),
    };
    config.kappa = args.kappa;
    config.cap_k = args.cap_k;
    config.eta = args.eta;
    config.alpha = args.alpha;
    config.tau = args.tau;
    config.max_iters = args.max_iters;
    config.tol_grad = args.tol_grad;
    config.tol_step = args.tol_step;
    config.seed = args.seed;
    Ok(config)
}

fn sign_policy(arg: SignPolicyArg, force: bool) -> SignPolicy {
    if force {
        return SignPolicy::Force;
    }
    match arg {
        SignPolicyArg::Strict => SignPolicy::Strict,
        SignPolicyArg::Majority => SignPolicy::Majority,
        SignPolicyArg::Force => SignPolicy::Force,
    }
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<()> {
    let encoding = LabelEncoding::resolve(args.labels.as_deref(), args.classes)?;
    let config = solver_config(&args.solver)?;
    let obs = read_observations(&args.input, args.classes, encoding)?;
    let opts = EstimateOptions {
        config,
        spam_delta: args.spam_delta,
        min_count: args.min_count,
        sign_policy: sign_policy(args.sign_policy, args.force),
        require_identifiable: !args.force,
    };
    let outcome = estimate_skills(&obs, &opts)?;

    let mut labeled_tasks = vec![0u64; obs.worker_count()];
    for o in obs.observations() {
        labeled_tasks[o.worker] += 1;
    }
    let rows: Vec<SkillRow> = (0..obs.worker_count())
        .map(|i| SkillRow {
            id: obs.worker_ids()[i].clone(),
            s: outcome.skills.get(i),
            magnitude: Some(outcome.magnitudes.get(i)),
            sign: Some(outcome.assignment.signs[i]),
            n_tasks: labeled_tasks[i],
        })
        .collect();

    let spectral = outcome.graph.spectral_report().ok();
    let radius = spectral
        .as_ref()
        .and_then(|s| hoeffding_radius(s.n_min, outcome.graph.degree_sum(), args.delta).ok());
    let bound = match (&spectral, radius) {
        (Some(s), Some(r)) => perturbation_bound(
            &outcome.graph,
            s,
            opts.config.kappa,
            opts.config.cap_k,
            r,
        )
        .ok(),
        _ => None,
    };

    let meta = json!({
        "command": "estimate",
        "method": args.solver.method,
        "classes": obs.class_count(),
        "step_size": outcome.trace.step_size,
        "iterations": outcome.trace.iterations,
        "final_loss": outcome.trace.final_loss,
        "converged": outcome.trace.converged,
        "termination": outcome.trace.termination.to_string(),
        "identifiable": outcome.report.identifiable(),
        "sign_consistent": outcome.assignment.consistent,
        "sign_agreement": outcome.assignment.agreement,
        "flipped": outcome.assignment.flipped_globally,
        "clamped": outcome.clamped,
        "edges": outcome.graph.edge_count(),
        "hoeffding_delta": args.delta,
        "hoeffding_radius": radius,
        "perturbation_bound": bound,
        "seed": args.solver.seed,
        "timestamp": unix_timestamp(),
    });
    write_json(args.output.as_deref(), &skills_document(&rows, meta))
}

pub fn cmd_infer(args: &InferArgs) -> Result<()> {
    let encoding = LabelEncoding::resolve(args.labels.as_deref(), args.classes)?;
    let obs = read_observations(&args.input, args.classes, encoding)?;
    let (skill_rows, meta) = read_skills(&args.skills)?;
    if let Some(m) = meta.get("classes").and_then(Value::as_u64) {
        if m as usize != args.classes {
            bail!(
                "class mismatch: skills file was estimated with {m} classes, --classes is {}",
                args.classes
            );
        }
    }

    let by_id: HashMap<&str, f64> = skill_rows
        .iter()
        .map(|(id, s, _)| (id.as_str(), *s))
        .collect();
    let lo = -1.0 / (args.classes as f64 - 1.0);
    let mut values = Vec::with_capacity(obs.worker_count());
    for id in obs.worker_ids() {
        // Workers without an estimate get zero skill and thus zero weight.
        let s = by_id.get(id.as_str()).copied().unwrap_or(0.0);
        if !(lo..=1.0).contains(&s) {
            bail!("skill {s} for worker '{id}' outside [{lo}, 1]");
        }
        values.push(s);
    }
    let skills = SkillVector::new_multiclass(values, args.classes)?;
    let predictions = if args.classes == 2 {
        map_predict_binary(&obs, &skills)?
    } else {
        map_predict_multiclass(&obs, &skills)?
    };
    let baseline = args.baseline.then(|| majority_vote(&obs));

    let tasks: Vec<Value> = (0..obs.task_count())
        .map(|t| {
            let mut obj = json!({ "id": obs.task_ids()[t] });
            obj["label"] = match predictions[t] {
                Some(l) => json!(encoding.format(l).parse::<i64>().unwrap()),
                None => json!("abstain"),
            };
            if let Some(mv) = &baseline {
                obj["mv"] = match mv[t] {
                    Some(l) => json!(encoding.format(l).parse::<i64>().unwrap()),
                    None => json!("abstain"),
                };
            }
            obj
        })
        .collect();
    let abstained = predictions.iter().filter(|p| p.is_none()).count();
    let doc = json!({
        "tasks": tasks,
        "meta": {
            "command": "infer",
            "classes": args.classes,
            "abstained": abstained,
            "baseline": args.baseline,
            "timestamp": unix_timestamp(),
        },
    });
    write_json(args.output.as_deref(), &doc)
}

/// Ground-truth labels realigned to a (possibly sparsified) observation
/// set, matching tasks by id.
fn align_truth(
    original_task_ids: &[String],
    original_truth: &[usize],
    obs: &crowdcorr::ObservationSet,
) -> Vec<usize> {
    let by_id: HashMap<&str, usize> = original_task_ids
        .iter()
        .map(String::as_str)
        .zip(original_truth.iter().copied())
        .collect();
    obs.task_ids().iter().map(|id| by_id[id.as_str()]).collect()
}

/// Per-id skill lookup for workers surviving sparsification.
fn align_skills(
    original_worker_ids: &[String],
    skills: &SkillVector,
    obs: &crowdcorr::ObservationSet,
) -> Vec<f64> {
    let by_id: HashMap<&str, f64> = original_worker_ids
        .iter()
        .map(String::as_str)
        .zip(skills.values().iter().copied())
        .collect();
    obs.worker_ids()
        .iter()
        .map(|id| by_id[id.as_str()])
        .collect()
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let family = parse_graph_family(&args.graph)?;
    let assignment = match args.assignment.as_str() {
        "edges" => Assignment::EdgePairs,
        "all" => Assignment::AllWorkers,
        other => bail!(Usage(format!("unknown assignment '{other}' (expected edges or all)"))),
    };
    let config = SynthConfig {
        family,
        worker_count: args.workers,
        task_count: args.tasks,
        class_count: args.classes,
        skill_dist: parse_skill_dist(&args.skill_dist)?,
        assignment,
        seed: args.seed,
    };
    let inst = generate(&config)?;
    let encoding = LabelEncoding::resolve(args.labels.as_deref(), args.classes)?;

    // Optional degree cap for sparse-interaction studies.
    let (observations, truth, skill_values) = match args.max_degree {
        Some(d) => {
            let graph = InteractionGraph::build(&inst.observations);
            let (_, sparse) =
                crowdcorr::synth::sparsify(&graph, &inst.observations, d, args.seed ^ 0x5a5a)?;
            let truth = align_truth(inst.observations.task_ids(), &inst.truth, &sparse);
            let skills = align_skills(inst.observations.worker_ids(), &inst.skills, &sparse);
            (sparse, truth, skills)
        }
        None => (
            inst.observations.clone(),
            inst.truth.clone(),
            inst.skills.values().to_vec(),
        ),
    };

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    write_observations(&args.out_dir.join("observations.csv"), &observations, encoding)?;
    write_truth(
        &args.out_dir.join("truth.csv"),
        observations.task_ids(),
        &truth,
        encoding,
    )?;

    let mean_skill = skill_values.iter().sum::<f64>() / skill_values.len().max(1) as f64;
    let mut labeled_tasks = vec![0u64; observations.worker_count()];
    for o in observations.observations() {
        labeled_tasks[o.worker] += 1;
    }
    let rows: Vec<SkillRow> = (0..observations.worker_count())
        .map(|i| SkillRow {
            id: observations.worker_ids()[i].clone(),
            s: skill_values[i],
            magnitude: None,
            sign: None,
            n_tasks: labeled_tasks[i],
        })
        .collect();
    let meta = json!({
        "command": "synth",
        "graph": args.graph,
        "workers": args.workers,
        "tasks": args.tasks,
        "classes": args.classes,
        "skill_dist": args.skill_dist,
        "assignment": args.assignment,
        "max_degree": args.max_degree,
        "surviving_workers": observations.worker_count(),
        "surviving_tasks": observations.task_count(),
        "mean_skill": mean_skill,
        "seed": args.seed,
        "task_allocation": "round-robin over edges unless assignment=all",
    });
    write_json(
        Some(&args.out_dir.join("skills.json")),
        &skills_document(&rows, meta),
    )?;
    Ok(())
}

/// Task id, prediction (None = abstain), optional majority-vote label.
type PredictionRow = (String, Option<usize>, Option<usize>);

fn read_predictions(
    path: &Path,
    classes: usize,
    encoding: LabelEncoding,
) -> Result<Vec<PredictionRow>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let doc: Value =
        serde_json::from_str(&text).with_context(|| format!("{}: invalid JSON", path.display()))?;
    let tasks = doc["tasks"]
        .as_array()
        .ok_or_else(|| anyhow!("{}: missing 'tasks' array", path.display()))?;
    let parse_label = |v: &Value| -> Result<Option<usize>> {
        if v.as_str() == Some("abstain") {
            return Ok(None);
        }
        let raw = v
            .as_i64()
            .ok_or_else(|| anyhow!("label {v} is neither an integer nor \"abstain\""))?;
        Ok(Some(encoding.parse(&raw.to_string(), classes)?))
    };
    tasks
        .iter()
        .map(|t| {
            let id = t["id"]
                .as_str()
                .ok_or_else(|| anyhow!("{}: task row without id", path.display()))?;
            let label = parse_label(&t["label"])?;
            let mv = if t.get("mv").is_some() {
                parse_label(&t["mv"])?
            } else {
                None
            };
            Ok((id.to_string(), label, mv))
        })
        .collect()
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let encoding = LabelEncoding::resolve(args.labels.as_deref(), args.classes)?;
    let predictions = read_predictions(&args.pred, args.classes, encoding)?;
    let truth_rows = read_truth(&args.truth, args.classes, encoding)?;
    let truth_by_id: HashMap<&str, usize> =
        truth_rows.iter().map(|(id, l)| (id.as_str(), *l)).collect();

    let missing: Vec<&str> = predictions
        .iter()
        .filter(|(id, _, _)| !truth_by_id.contains_key(id.as_str()))
        .map(|(id, _, _)| id.as_str())
        .take(10)
        .collect();
    if !missing.is_empty() {
        bail!(
            "task-id mismatch: predictions contain tasks missing from the truth file: {}",
            missing.join(", ")
        );
    }

    let (pred_vec, truth_vec): (Vec<Option<usize>>, Vec<usize>) = predictions
        .iter()
        .map(|(id, label, _)| (*label, truth_by_id[id.as_str()]))
        .unzip();
    let (pe, abstained) = prediction_error(&pred_vec, &truth_vec);

    let has_mv = predictions.iter().any(|(_, _, mv)| mv.is_some());
    let mv_pe = has_mv.then(|| {
        let mv_vec: Vec<Option<usize>> = predictions.iter().map(|(_, _, mv)| *mv).collect();
        prediction_error(&mv_vec, &truth_vec).0
    });

    // Skill-estimate accuracy when both skill files are provided.
    let mut skill_block = json!(null);
    if let (Some(est_path), Some(true_path)) = (&args.est_skills, &args.true_skills) {
        let (est_rows, _) = read_skills(est_path)?;
        let (true_rows, _) = read_skills(true_path)?;
        let true_by_id: HashMap<&str, f64> = true_rows
            .iter()
            .map(|(id, s, _)| (id.as_str(), *s))
            .collect();
        let mut missing = Vec::new();
        let mut inf = 0.0f64;
        let mut l2 = 0.0f64;
        let mut aligned_true = Vec::new();
        for (id, s, _) in &est_rows {
            match true_by_id.get(id.as_str()) {
                Some(t) => {
                    inf = inf.max((s - t).abs());
                    l2 += (s - t) * (s - t);
                    aligned_true.push(*t);
                }
                None => missing.push(id.as_str()),
            }
        }
        if !missing.is_empty() {
            bail!(
                "worker-id mismatch: estimated skills missing from the truth file: {}",
                missing.iter().take(10).cloned().collect::<Vec<_>>().join(", ")
            );
        }
        let committee = if args.classes == 2 {
            let sv = SkillVector::new_binary(aligned_true.clone())?;
            match committee_potential(&sv) {
                Ok(c) => json!({
                    "phi": c.phi,
                    "error_upper": c.error_upper,
                    "error_lower": c.error_lower,
                }),
                Err(_) => json!(null),
            }
        } else {
            json!(null)
        };
        skill_block = json!({
            "error_inf": inf,
            "error_l2": l2.sqrt(),
            "workers": est_rows.len(),
            "committee": committee,
        });
    }

    let doc = json!({
        "prediction_error": pe,
        "evaluated": pred_vec.len() - abstained,
        "abstained": abstained,
        "mv_prediction_error": mv_pe,
        "skills": skill_block,
        "meta": { "command": "eval", "classes": args.classes, "timestamp": unix_timestamp() },
    });
    write_json(args.output.as_deref(), &doc)?;

    if let Some(plot) = &args.plot_csv {
        let x = args
            .x
            .ok_or_else(|| Usage("--plot-csv needs --x <value>".into()))?;
        let series = args
            .series
            .clone()
            .ok_or_else(|| Usage("--plot-csv needs --series <name>".into()))?;
        let mut rows = vec![(x, pe, 0.0, series.clone())];
        if let Some(mv) = mv_pe {
            rows.push((x, mv, 0.0, format!("{series}-mv")));
        }
        append_plot_rows(plot, &rows)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------
// sweep: multi-seed experiment driver
// ---------------------------------------------------------------------

#[derive(Debug, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSpec {
    name: String,
    graph: String,
    workers: usize,
    tasks: Vec<usize>,
    /// When non-empty the sweep axis is the sparsification degree cap
    /// (tasks must then hold a single value) and x = max degree.
    #[serde(default)]
    max_degrees: Vec<usize>,
    #[serde(default = "default_num_seeds")]
    num_seeds: u64,
    #[serde(default)]
    seed_base: u64,
    #[serde(default = "default_classes")]
    classes: usize,
    #[serde(default = "default_skill_dist")]
    skill_dist: String,
    #[serde(default = "default_assignment")]
    assignment: String,
    #[serde(default = "default_method")]
    method: String,
    #[serde(default = "default_true")]
    include_mv: bool,
    #[serde(default = "default_sign_policy")]
    sign_policy: String,
    #[serde(default)]
    spam_delta: Option<f64>,
}

fn default_num_seeds() -> u64 {
    15
}
fn default_classes() -> usize {
    2
}
fn default_skill_dist() -> String {
    "grid:-0.3,0.8".into()
}
fn default_assignment() -> String {
    "edges".into()
}
fn default_method() -> String {
    "pgd".into()
}
fn default_true() -> bool {
    true
}
fn default_sign_policy() -> String {
    "force".into()
}

fn run_sweep_instance(
    spec: &SweepSpec,
    family: GraphFamily,
    assignment: Assignment,
    skill_dist: &SkillDist,
    tasks: usize,
    max_degree: Option<usize>,
    seed: u64,
) -> Result<(f64, f64)> {
    let config = SynthConfig {
        family,
        worker_count: spec.workers,
        task_count: tasks,
        class_count: spec.classes,
        skill_dist: skill_dist.clone(),
        assignment,
        seed,
    };
    let inst = generate(&config)?;
    let (observations, truth) = match max_degree {
        Some(d) => {
            let graph = InteractionGraph::build(&inst.observations);
            let (_, sparse) =
                crowdcorr::synth::sparsify(&graph, &inst.observations, d, seed ^ 0x5a5a)?;
            let truth = align_truth(inst.observations.task_ids(), &inst.truth, &sparse);
            (sparse, truth)
        }
        None => (inst.observations.clone(), inst.truth.clone()),
    };

    let mut solver = match spec.method.as_str() {
        "pgd" => SolverConfig::pgd(),
        "expgrad" => SolverConfig::expgrad(0.1, 1.0),
        other => bail!(Usage(format!("unknown method '{other}'"))),
    };
    solver.method = if spec.method == "expgrad" { Method::ExpGrad } else { Method::Pgd };
    let opts = EstimateOptions {
        config: solver,
        spam_delta: spec.spam_delta,
        min_count: 1,
        sign_policy: match spec.sign_policy.as_str() {
            "strict" => SignPolicy::Strict,
            "majority" => SignPolicy::Majority,
            "force" => SignPolicy::Force,
            other => bail!(Usage(format!("unknown sign policy '{other}'"))),
        },
        require_identifiable: false,
    };
    let outcome = estimate_skills(&observations, &opts)?;
    let predictions = if spec.classes == 2 {
        map_predict_binary(&observations, &outcome.skills)?
    } else {
        map_predict_multiclass(&observations, &outcome.skills)?
    };
    let (pe, _) = prediction_error(&predictions, &truth);
    let (mv_pe, _) = prediction_error(&majority_vote(&observations), &truth);
    Ok((pe, mv_pe))
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.spec)
        .with_context(|| format!("cannot open {}", args.spec.display()))?;
    let spec: SweepSpec = serde_json::from_str(&text)
        .with_context(|| format!("{}: invalid experiment spec", args.spec.display()))?;
    let family = parse_graph_family(&spec.graph)?;
    let assignment = match spec.assignment.as_str() {
        "edges" => Assignment::EdgePairs,
        "all" => Assignment::AllWorkers,
        other => bail!(Usage(format!("unknown assignment '{other}'"))),
    };
    let skill_dist = parse_skill_dist(&spec.skill_dist)?;

    let threads = args
        .threads
        .or_else(|| {
            std::env::var("CROWDCORR_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0);
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .ok();
    }

    // The x axis is the task count, or the degree cap when max_degrees is
    // given (with a single fixed task count).
    let degree_axis = !spec.max_degrees.is_empty();
    if degree_axis && spec.tasks.len() != 1 {
        bail!(Usage(
            "a max_degrees sweep needs exactly one entry in tasks".into()
        ));
    }
    let xs: Vec<f64> = if degree_axis {
        spec.max_degrees.iter().map(|&d| d as f64).collect()
    } else {
        spec.tasks.iter().map(|&t| t as f64).collect()
    };

    let mut jobs = Vec::new();
    for x_idx in 0..xs.len() {
        let tasks = if degree_axis { spec.tasks[0] } else { spec.tasks[x_idx] };
        let cap = degree_axis.then(|| spec.max_degrees[x_idx]);
        for k in 0..spec.num_seeds {
            // Seeds repeat across x values so the trend is paired.
            jobs.push((x_idx, tasks, cap, spec.seed_base + k));
        }
    }
    use rayon::prelude::*;
    let results: Vec<(usize, f64, f64)> = jobs
        .par_iter()
        .map(|&(x_idx, tasks, cap, seed)| {
            run_sweep_instance(&spec, family, assignment, &skill_dist, tasks, cap, seed)
                .map(|(pe, mv)| (x_idx, pe, mv))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut per_x: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); xs.len()];
    for (x_idx, pe, mv) in results {
        per_x[x_idx].0.push(pe);
        per_x[x_idx].1.push(mv);
    }
    let stats = |v: &[f64]| -> (f64, f64) {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = if v.len() > 1 {
            v.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / (v.len() - 1) as f64
        } else {
            0.0
        };
        (mean, var.sqrt())
    };

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let csv_path = args.out_dir.join(format!("{}.csv", spec.name));
    if csv_path.exists() {
        std::fs::remove_file(&csv_path)?;
    }
    let mut rows = Vec::new();
    for (x_idx, &x) in xs.iter().enumerate() {
        let (mean, std) = stats(&per_x[x_idx].0);
        rows.push((x, mean, std, spec.method.clone()));
    }
    if spec.include_mv {
        for (x_idx, &x) in xs.iter().enumerate() {
            let (mean, std) = stats(&per_x[x_idx].1);
            rows.push((x, mean, std, "mv".into()));
        }
    }
    append_plot_rows(&csv_path, &rows)?;

    let meta = json!({
        "command": "sweep",
        "spec": serde_json::from_str::<Value>(&text)?,
        "rows": rows.len(),
        "output": csv_path.display().to_string(),
        "timestamp": unix_timestamp(),
    });
    write_json(Some(&args.out_dir.join(format!("{}_meta.json", spec.name))), &meta)?;
    println!("wrote {}", csv_path.display());
    Ok(())
}

/// Maps error types onto the documented exit codes.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    if let Some(core) = err.downcast_ref::<crowdcorr::Error>() {
        return match core {
            crowdcorr::Error::InvalidParameter(_) | crowdcorr::Error::DimensionMismatch { .. } => 2,
            crowdcorr::Error::DataIntegrity(_)
            | crowdcorr::Error::Infeasible(_)
            | crowdcorr::Error::NoInteractions => 3,
            crowdcorr::Error::NotIdentifiable(_) => 4,
            crowdcorr::Error::Diverged { .. }
            | crowdcorr::Error::InfiniteWeight { .. }
            | crowdcorr::Error::SignInconsistent { .. }
            | crowdcorr::Error::AmbiguousSign { .. }
            | crowdcorr::Error::DegenerateEdge { .. }
            | crowdcorr::Error::Overflow(_) => 5,
        };
    }
    for cause in err.chain() {
        if cause.downcast_ref::<Usage>().is_some() {
            return 2;
        }
        if let Some(core) = cause.downcast_ref::<crowdcorr::Error>() {
            return match core {
                crowdcorr::Error::NotIdentifiable(_) => 4,
                crowdcorr::Error::Diverged { .. }
                | crowdcorr::Error::InfiniteWeight { .. }
                | crowdcorr::Error::Overflow(_) => 5,
                _ => 3,
            };
        }
    }
    3
}
