//! Synthetic crowdsourcing instances: interaction-graph families, skill
//! distributions, single-coin label sampling, correlation noise injection
//! and degree-capped graph sparsification.
//!
//! Generation is fully reproducible from the seed: skills are drawn first,
//! then ground-truth labels, then worker labels in (task, worker) order.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::graph::InteractionGraph;
use crate::observations::{CorrEntry, CorrelationEstimate, Observation, ObservationSet};
use crate::solver::SkillVector;

/// Interaction-graph family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphFamily {
    /// All worker pairs interact.
    Clique,
    /// Hub connected to every leaf plus one leaf-leaf edge forming a 3-cycle.
    StarWithTriangle,
    /// Cycle over all workers.
    Ring,
    /// 2D grid plus the lowest-index non-adjacent edge (breaks bipartiteness).
    GridPlusEdge,
    /// Independent edges with probability `p`; may come out disconnected or
    /// bipartite, which downstream analysis reports.
    ErdosRenyi { p: f64 },
}

/// How worker skills are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum SkillDist {
    /// `W` evenly spaced values on `[lo, hi]`, randomly assigned to workers.
    UniformGrid { lo: f64, hi: f64 },
    /// Accuracy `p ~ Beta(alpha, beta)` mapped to `s = (M p - 1)/(M - 1)`.
    Beta { alpha: f64, beta: f64 },
    Constant(f64),
    Explicit(Vec<f64>),
}

/// How tasks are spread over the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assignment {
    /// Tasks round-robin over edges; each task is labeled by exactly the
    /// edge's two workers.
    EdgePairs,
    /// Every worker labels every task (clique regime).
    AllWorkers,
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub family: GraphFamily,
    pub worker_count: usize,
    pub task_count: usize,
    pub class_count: usize,
    pub skill_dist: SkillDist,
    pub assignment: Assignment,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(family: GraphFamily, worker_count: usize, task_count: usize, seed: u64) -> Self {
        Self {
            family,
            worker_count,
            task_count,
            class_count: 2,
            skill_dist: SkillDist::UniformGrid { lo: -0.3, hi: 0.8 },
            assignment: Assignment::EdgePairs,
            seed,
        }
    }
}

/// A generated instance with its hidden ground truth.
#[derive(Debug, Clone)]
pub struct SynthInstance {
    pub observations: ObservationSet,
    pub skills: SkillVector,
    pub truth: Vec<usize>,
}

/// Edge list of a named family.
pub fn family_edges(family: GraphFamily, worker_count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>> {
    let w = worker_count;
    match family {
        GraphFamily::Clique => {
            if w < 2 {
                return Err(Error::InvalidParameter("clique requires W >= 2".into()));
            }
            let mut edges = Vec::new();
            for i in 0..w {
                for j in (i + 1)..w {
                    edges.push((i, j));
                }
            }
            Ok(edges)
        }
        GraphFamily::StarWithTriangle => {
            if w < 3 {
                return Err(Error::InvalidParameter("star3 requires W >= 3".into()));
            }
            let mut edges: Vec<_> = (1..w).map(|leaf| (0, leaf)).collect();
            edges.push((1, 2));
            Ok(edges)
        }
        GraphFamily::Ring => {
            if w < 3 {
                return Err(Error::InvalidParameter("ring requires W >= 3".into()));
            }
            Ok((0..w).map(|i| (i, (i + 1) % w)).collect())
        }
        GraphFamily::GridPlusEdge => {
            if w < 3 {
                return Err(Error::InvalidParameter("grid requires W >= 3".into()));
            }
            let rows = (w as f64).sqrt().floor() as usize;
            let cols = w.div_ceil(rows);
            let mut edges = Vec::new();
            for node in 0..w {
                let (r, c) = (node / cols, node % cols);
                if c + 1 < cols && node + 1 < w {
                    edges.push((node, node + 1));
                }
                if r + 1 < rows.max(w.div_ceil(cols)) && node + cols < w {
                    edges.push((node, node + cols));
                }
            }
            // Lowest-index non-adjacent pair closes an odd cycle.
            let extra = (0..w)
                .flat_map(|i| ((i + 1)..w).map(move |j| (i, j)))
                .find(|pair| !edges.contains(pair))
                .ok_or_else(|| Error::InvalidParameter("grid too small for an extra edge".into()))?;
            edges.push(extra);
            Ok(edges)
        }
        GraphFamily::ErdosRenyi { p } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "Erdos-Renyi probability must lie in [0, 1], got {p}"
                )));
            }
            let mut edges = Vec::new();
            for i in 0..w {
                for j in (i + 1)..w {
                    if rng.random::<f64>() < p {
                        edges.push((i, j));
                    }
                }
            }
            Ok(edges)
        }
    }
}

fn draw_skills(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let w = config.worker_count;
    let m = config.class_count as f64;
    let lo_valid = -1.0 / (m - 1.0);
    let values = match &config.skill_dist {
        SkillDist::UniformGrid { lo, hi } => {
            if lo > hi {
                return Err(Error::InvalidParameter(format!(
                    "uniform grid requires lo <= hi, got [{lo}, {hi}]"
                )));
            }
            let mut values: Vec<f64> = if w == 1 {
                vec![(lo + hi) / 2.0]
            } else {
                (0..w)
                    .map(|k| lo + (hi - lo) * k as f64 / (w as f64 - 1.0))
                    .collect()
            };
            values.shuffle(rng);
            values
        }
        SkillDist::Beta { alpha, beta } => {
            if !(*alpha > 0.0 && *beta > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "beta parameters must be positive, got ({alpha}, {beta})"
                )));
            }
            let dist = rand_distr::Beta::new(*alpha, *beta)
                .map_err(|e| Error::InvalidParameter(format!("beta distribution: {e}")))?;
            (0..w)
                .map(|_| {
                    let p: f64 = dist.sample(rng);
                    (m * p - 1.0) / (m - 1.0)
                })
                .collect()
        }
        SkillDist::Constant(c) => vec![*c; w],
        SkillDist::Explicit(values) => {
            if values.len() != w {
                return Err(Error::DimensionMismatch {
                    expected: w,
                    got: values.len(),
                });
            }
            values.clone()
        }
    };
    for &v in &values {
        if v < lo_valid - 1e-12 || v > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "skill {v} outside [{lo_valid}, 1] for M = {}",
                config.class_count
            )));
        }
    }
    Ok(values)
}

/// Generates observations, true skills, and true labels from a config.
pub fn generate(config: &SynthConfig) -> Result<SynthInstance> {
    if config.worker_count < 2 {
        return Err(Error::InvalidParameter("need at least 2 workers".into()));
    }
    if config.task_count < 1 {
        return Err(Error::InvalidParameter("need at least 1 task".into()));
    }
    if config.class_count < 2 {
        return Err(Error::InvalidParameter("need at least 2 classes".into()));
    }
    if config.assignment == Assignment::AllWorkers && config.family != GraphFamily::Clique {
        return Err(Error::InvalidParameter(
            "all-workers assignment only matches the clique family".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let skills = draw_skills(config, &mut rng)?;
    let edges = family_edges(config.family, config.worker_count, &mut rng)?;
    if config.assignment == Assignment::EdgePairs && config.task_count < edges.len() {
        return Err(Error::Infeasible(format!(
            "T = {} tasks cannot cover all {} edges; some pairs would never interact",
            config.task_count,
            edges.len()
        )));
    }

    let m = config.class_count;
    let truth: Vec<usize> = (0..config.task_count)
        .map(|_| rng.random_range(0..m))
        .collect();
    let accuracies: Vec<f64> = skills
        .iter()
        .map(|s| ((m as f64 - 1.0) * s + 1.0) / m as f64)
        .collect();

    let mut triples = Vec::new();
    let label = |task: usize, worker: usize, rng: &mut ChaCha8Rng| {
        let correct = rng.random::<f64>() < accuracies[worker];
        let value = if correct {
            truth[task]
        } else {
            let k = rng.random_range(0..m - 1);
            if k < truth[task] {
                k
            } else {
                k + 1
            }
        };
        Observation { worker, task, label: value }
    };
    match config.assignment {
        Assignment::EdgePairs => {
            for task in 0..config.task_count {
                let (i, j) = edges[task % edges.len()];
                triples.push(label(task, i, &mut rng));
                triples.push(label(task, j, &mut rng));
            }
        }
        Assignment::AllWorkers => {
            for task in 0..config.task_count {
                for worker in 0..config.worker_count {
                    triples.push(label(task, worker, &mut rng));
                }
            }
        }
    }

    let observations = ObservationSet::new(
        config.worker_count,
        config.task_count,
        config.class_count,
        triples,
    )?;
    let skills = SkillVector::new_multiclass(skills, config.class_count)?;
    Ok(SynthInstance {
        observations,
        skills,
        truth,
    })
}

/// Exact correlations `C_ij = s_i s_j` on the graph's edges, with the
/// graph's counts (the infinite-task regime).
pub fn exact_correlations(skills: &SkillVector, graph: &InteractionGraph) -> CorrelationEstimate {
    let entries = graph
        .edges()
        .iter()
        .map(|&(i, j)| CorrEntry {
            i,
            j,
            value: skills.get(i) * skills.get(j),
            count: graph.count(i, j),
        })
        .collect();
    CorrelationEstimate::from_entries(graph.worker_count(), skills.class_count(), entries)
        .expect("graph edges are valid correlation entries")
}

/// Adds one independent uniform draw from `[-xi_range, xi_range]` per
/// unordered edge; counts are untouched.
pub fn inject_correlation_noise(
    corr: &CorrelationEstimate,
    xi_range: f64,
    seed: u64,
) -> Result<CorrelationEstimate> {
    if xi_range.is_nan() || xi_range < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "xi_range must be >= 0, got {xi_range}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = corr
        .entries()
        .iter()
        .map(|e| CorrEntry {
            value: e.value + xi_range * (2.0 * rng.random::<f64>() - 1.0),
            ..*e
        })
        .collect();
    CorrelationEstimate::from_entries(corr.worker_count(), corr.class_count(), entries)
}

/// Caps every worker's unweighted degree by removing random edges from the
/// currently highest-degree node, dropping the node's labels on the tasks it
/// shared with the removed neighbor. Tasks left with fewer than two labels
/// and workers left with no labels are dropped; worker and task ids survive
/// the re-indexing.
pub fn sparsify(
    graph: &InteractionGraph,
    obs: &ObservationSet,
    max_degree: usize,
    seed: u64,
) -> Result<(InteractionGraph, ObservationSet)> {
    if max_degree < 1 {
        return Err(Error::InvalidParameter("max_degree must be >= 1".into()));
    }
    if graph.worker_count() != obs.worker_count() {
        return Err(Error::DimensionMismatch {
            expected: obs.worker_count(),
            got: graph.worker_count(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triples: Vec<Observation> = obs.observations().to_vec();
    let w = obs.worker_count();

    // Co-task counts from raw triples, in the original index space (workers
    // may temporarily lose all labels mid-loop).
    let counts_of = |triples: &[Observation]| -> Vec<u64> {
        let mut by_task: Vec<Vec<usize>> = vec![Vec::new(); obs.task_count()];
        for o in triples {
            by_task[o.task].push(o.worker);
        }
        let mut counts = vec![0u64; w * w];
        for workers in &by_task {
            for (a, &i) in workers.iter().enumerate() {
                for &j in &workers[a + 1..] {
                    counts[i * w + j] += 1;
                    counts[j * w + i] += 1;
                }
            }
        }
        counts
    };

    let mut current = InteractionGraph::from_counts(w, counts_of(&triples))?;
    loop {
        let (node, degree) = (0..w)
            .map(|i| (i, current.degree(i)))
            .max_by_key(|&(i, d)| (d, std::cmp::Reverse(i)))
            .unwrap();
        if degree <= max_degree {
            break;
        }
        let neighbors = current.neighbors(node);
        let victim = neighbors[rng.random_range(0..neighbors.len())];
        // Dropping the hot node's labels on the shared tasks severs the edge
        // (and possibly other overlaps of the same node).
        let victim_tasks: std::collections::HashSet<usize> = triples
            .iter()
            .filter(|o| o.worker == victim)
            .map(|o| o.task)
            .collect();
        triples.retain(|o| !(o.worker == node && victim_tasks.contains(&o.task)));
        current = InteractionGraph::from_counts(w, counts_of(&triples))?;
    }

    // Single-label tasks carry no pair information; drop them and compact.
    let final_obs = rebuild(obs, &triples)?;
    let final_graph = InteractionGraph::build(&final_obs);
    Ok((final_graph, final_obs))
}

/// Drops tasks with fewer than two labels, drops empty workers, and
/// re-indexes densely while keeping the original id strings.
fn rebuild(template: &ObservationSet, triples: &[Observation]) -> Result<ObservationSet> {
    let mut task_cover = vec![0usize; template.task_count()];
    for o in triples {
        task_cover[o.task] += 1;
    }
    let kept: Vec<Observation> = triples
        .iter()
        .filter(|o| task_cover[o.task] >= 2)
        .copied()
        .collect();
    if kept.is_empty() {
        return Err(Error::Infeasible(
            "sparsification removed every multi-worker task".into(),
        ));
    }
    let mut worker_map = vec![usize::MAX; template.worker_count()];
    let mut task_map = vec![usize::MAX; template.task_count()];
    let mut worker_ids = Vec::new();
    let mut task_ids = Vec::new();
    let mut mapped = Vec::with_capacity(kept.len());
    for o in &kept {
        if worker_map[o.worker] == usize::MAX {
            worker_map[o.worker] = worker_ids.len();
            worker_ids.push(template.worker_ids()[o.worker].clone());
        }
        if task_map[o.task] == usize::MAX {
            task_map[o.task] = task_ids.len();
            task_ids.push(template.task_ids()[o.task].clone());
        }
        mapped.push(Observation {
            worker: worker_map[o.worker],
            task: task_map[o.task],
            label: o.label,
        });
    }
    ObservationSet::with_ids(worker_ids, task_ids, template.class_count(), mapped)
}
