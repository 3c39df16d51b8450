//! Worker-task label data and empirical pairwise correlations.
//!
//! An [`ObservationSet`] holds sparse `(worker, task, label)` triples for an
//! `M`-class labeling problem. Labels are stored as class indices in
//! `0..M`; for binary problems class `1` plays the role of `+1` and class
//! `0` the role of `-1`.
//!
//! For two workers that co-labeled `n` tasks and agreed on `m` of them, the
//! empirical correlation is
//!
//! ```text
//! binary      C_ij = (2m - n) / n                    (mean of Y_i Y_j)
//! multiclass  C_ij = (M m - n) / ((M - 1) n)         (rescaled match rate)
//! ```
//!
//! which coincide exactly at `M = 2`. In expectation both equal `s_i s_j`
//! under the single-coin worker model.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::InteractionGraph;

/// One worker-task-label triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    pub worker: usize,
    pub task: usize,
    /// Class index in `0..class_count`.
    pub label: usize,
}

/// A validated collection of labels for one crowdsourcing problem.
#[derive(Debug, Clone)]
pub struct ObservationSet {
    worker_count: usize,
    task_count: usize,
    class_count: usize,
    triples: Vec<Observation>,
    worker_ids: Vec<String>,
    task_ids: Vec<String>,
}

impl ObservationSet {
    /// Builds a set from dense indices; ids default to the stringified index.
    pub fn new(
        worker_count: usize,
        task_count: usize,
        class_count: usize,
        triples: Vec<Observation>,
    ) -> Result<Self> {
        let worker_ids = (0..worker_count).map(|i| i.to_string()).collect();
        let task_ids = (0..task_count).map(|t| t.to_string()).collect();
        Self::with_ids(worker_ids, task_ids, class_count, triples)
    }

    /// Builds a set with caller-supplied opaque ids (one per dense index).
    pub fn with_ids(
        worker_ids: Vec<String>,
        task_ids: Vec<String>,
        class_count: usize,
        triples: Vec<Observation>,
    ) -> Result<Self> {
        let worker_count = worker_ids.len();
        let task_count = task_ids.len();
        if class_count < 2 {
            return Err(Error::InvalidParameter(format!(
                "class_count must be >= 2, got {class_count}"
            )));
        }
        if triples.is_empty() {
            return Err(Error::DataIntegrity("no observations".into()));
        }
        let mut seen: HashMap<(usize, usize), usize> = HashMap::with_capacity(triples.len());
        let mut worker_has_label = vec![false; worker_count];
        for obs in &triples {
            if obs.worker >= worker_count {
                return Err(Error::DataIntegrity(format!(
                    "worker index {} out of range (W = {worker_count})",
                    obs.worker
                )));
            }
            if obs.task >= task_count {
                return Err(Error::DataIntegrity(format!(
                    "task index {} out of range (T = {task_count})",
                    obs.task
                )));
            }
            if obs.label >= class_count {
                return Err(Error::DataIntegrity(format!(
                    "label {} out of range (M = {class_count})",
                    obs.label
                )));
            }
            match seen.insert((obs.worker, obs.task), obs.label) {
                Some(prev) if prev != obs.label => {
                    return Err(Error::DataIntegrity(format!(
                        "worker {} labeled task {} with conflicting labels {} and {}",
                        obs.worker, obs.task, prev, obs.label
                    )));
                }
                Some(_) => {
                    return Err(Error::DataIntegrity(format!(
                        "duplicate observation for worker {} on task {}",
                        obs.worker, obs.task
                    )));
                }
                None => {}
            }
            worker_has_label[obs.worker] = true;
        }
        if let Some(idle) = worker_has_label.iter().position(|&has| !has) {
            return Err(Error::DataIntegrity(format!(
                "worker {idle} has no observations"
            )));
        }
        Ok(Self {
            worker_count,
            task_count,
            class_count,
            triples,
            worker_ids,
            task_ids,
        })
    }

    pub fn worker_count(&self) -> usize {
        self.worker_count
    }

    pub fn task_count(&self) -> usize {
        self.task_count
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn observations(&self) -> &[Observation] {
        &self.triples
    }

    pub fn worker_ids(&self) -> &[String] {
        &self.worker_ids
    }

    pub fn task_ids(&self) -> &[String] {
        &self.task_ids
    }

    /// Votes grouped per task: `(worker, label)` pairs sorted by worker.
    pub fn votes_by_task(&self) -> Vec<Vec<(usize, usize)>> {
        let mut by_task = vec![Vec::new(); self.task_count];
        for obs in &self.triples {
            by_task[obs.task].push((obs.worker, obs.label));
        }
        for votes in &mut by_task {
            votes.sort_unstable();
        }
        by_task
    }
}

/// One undirected correlation entry, stored once with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrEntry {
    pub i: usize,
    pub j: usize,
    /// Empirical correlation value.
    pub value: f64,
    /// Number of co-labeled tasks behind the estimate (`N_ij`).
    pub count: u64,
}

/// Sparse symmetric map of pairwise worker correlations.
///
/// Entries are kept once per unordered pair; [`CorrelationEstimate::get`]
/// answers for either orientation.
#[derive(Debug, Clone)]
pub struct CorrelationEstimate {
    worker_count: usize,
    class_count: usize,
    entries: Vec<CorrEntry>,
}

impl CorrelationEstimate {
    /// Builds from explicit entries; normalizes to `i < j` and sorts.
    pub fn from_entries(
        worker_count: usize,
        class_count: usize,
        mut entries: Vec<CorrEntry>,
    ) -> Result<Self> {
        for e in &mut entries {
            if e.i == e.j {
                return Err(Error::InvalidParameter(format!(
                    "self-correlation entry for worker {}",
                    e.i
                )));
            }
            if e.i.max(e.j) >= worker_count {
                return Err(Error::InvalidParameter(format!(
                    "correlation entry ({}, {}) out of range (W = {worker_count})",
                    e.i, e.j
                )));
            }
            if e.count == 0 {
                return Err(Error::InvalidParameter(format!(
                    "correlation entry ({}, {}) has zero count",
                    e.i, e.j
                )));
            }
            if e.i > e.j {
                std::mem::swap(&mut e.i, &mut e.j);
            }
        }
        entries.sort_unstable_by_key(|e| (e.i, e.j));
        if entries.windows(2).any(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j)) {
            return Err(Error::InvalidParameter("duplicate correlation entry".into()));
        }
        Ok(Self {
            worker_count,
            class_count,
            entries,
        })
    }

    pub fn worker_count(&self) -> usize {
        self.worker_count
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn entries(&self) -> &[CorrEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Symmetric lookup; `None` when the pair never co-labeled a task.
    pub fn get(&self, i: usize, j: usize) -> Option<(f64, u64)> {
        let key = (i.min(j), i.max(j));
        self.entries
            .binary_search_by_key(&key, |e| (e.i, e.j))
            .ok()
            .map(|idx| (self.entries[idx].value, self.entries[idx].count))
    }

    /// Same entries with absolute correlation values (magnitude stage input).
    pub fn absolute(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|e| CorrEntry {
                value: e.value.abs(),
                ..*e
            })
            .collect();
        Self {
            worker_count: self.worker_count,
            class_count: self.class_count,
            entries,
        }
    }
}

/// Agreement counts (`matches`, `total`) per co-labeling pair.
fn pair_counts(obs: &ObservationSet) -> Vec<(usize, usize, u64, u64)> {
    let by_task = obs.votes_by_task();
    let mut counts: HashMap<(usize, usize), (u64, u64)> = HashMap::new();
    for votes in &by_task {
        for (a, &(wi, li)) in votes.iter().enumerate() {
            for &(wj, lj) in &votes[a + 1..] {
                let slot = counts.entry((wi, wj)).or_insert((0, 0));
                slot.1 += 1;
                if li == lj {
                    slot.0 += 1;
                }
            }
        }
    }
    let mut out: Vec<_> = counts
        .into_iter()
        .map(|((i, j), (m, n))| (i, j, m, n))
        .collect();
    out.sort_unstable_by_key(|&(i, j, _, _)| (i, j));
    out
}

fn correlations_from_matches(obs: &ObservationSet) -> CorrelationEstimate {
    let m_classes = obs.class_count() as f64;
    let entries = pair_counts(obs)
        .into_iter()
        .map(|(i, j, m, n)| CorrEntry {
            i,
            j,
            value: (m_classes * m as f64 - n as f64) / ((m_classes - 1.0) * n as f64),
            count: n,
        })
        .collect();
    CorrelationEstimate {
        worker_count: obs.worker_count(),
        class_count: obs.class_count(),
        entries,
    }
}

/// Empirical binary correlations `C_ij = (1/N_ij) sum_t Y_i Y_j` with labels
/// read as `+-1` (class 1 = +1).
pub fn estimate_correlations_binary(obs: &ObservationSet) -> Result<CorrelationEstimate> {
    if obs.class_count() != 2 {
        return Err(Error::InvalidParameter(format!(
            "binary estimator requires M = 2, got M = {}",
            obs.class_count()
        )));
    }
    Ok(correlations_from_matches(obs))
}

/// Rescaled multiclass correlations
/// `C_ij = M/(M-1) * match_rate - 1/(M-1)`, which reduce to the binary
/// estimator bit-for-bit at `M = 2`.
pub fn estimate_correlations_multiclass(obs: &ObservationSet) -> CorrelationEstimate {
    correlations_from_matches(obs)
}

/// Removes edges whose correlation is indistinguishable from zero skill:
/// every edge with `|c| < delta + sqrt(log(W) / N_ij)` is dropped from both
/// the correlation set and the graph.
pub fn threshold_spammers(
    corr: &CorrelationEstimate,
    delta: f64,
    graph: &InteractionGraph,
) -> Result<(CorrelationEstimate, InteractionGraph)> {
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "spammer threshold delta must be >= 0, got {delta}"
        )));
    }
    let w = corr.worker_count() as f64;
    let mut kept = Vec::with_capacity(corr.entries.len());
    let mut removed = Vec::new();
    for e in &corr.entries {
        let radius = delta + (w.ln() / e.count as f64).sqrt();
        if e.value.abs() < radius {
            removed.push((e.i, e.j));
        } else {
            kept.push(*e);
        }
    }
    let pruned = graph.without_edges(&removed)?;
    let corr_out = CorrelationEstimate {
        worker_count: corr.worker_count,
        class_count: corr.class_count,
        entries: kept,
    };
    Ok((corr_out, pruned))
}

/// Uniform high-probability radius `log(D/delta) / sqrt(N_min)` covering
/// `max_(i,j) |C_ij - C_hat_ij|` over all edges simultaneously.
pub fn hoeffding_radius(n_min: u64, degree_sum: u64, delta: f64) -> Result<f64> {
    if n_min == 0 || degree_sum == 0 {
        return Err(Error::InvalidParameter(
            "hoeffding radius requires positive n_min and degree sum".into(),
        ));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1], got {delta}"
        )));
    }
    Ok((degree_sum as f64 / delta).ln() / (n_min as f64).sqrt())
}
