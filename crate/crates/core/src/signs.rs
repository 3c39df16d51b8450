//! Sign recovery for magnitude-stage skill estimates.
//!
//! The solver recovers `|s|`; the sign structure comes from the signs of the
//! observed correlations. Per connected component the lowest-index worker is
//! anchored positive, signs propagate along a maximum-|c| spanning tree via
//! `sign(s_j) = sign(s_i) * sign(C_ij)`, every non-tree edge is checked for
//! agreement, and the whole component is flipped when the signed skills sum
//! to a nonpositive value (the `sum_i s_i > 0` convention).
//!
//! The closed-form odd-cycle and path formulas from the identifiability
//! argument are exposed as independent oracles for the solver.

use crate::error::{Error, Result};
use crate::graph::InteractionGraph;
use crate::observations::CorrelationEstimate;
use crate::solver::SkillVector;

/// How to treat non-tree edges whose correlation sign disagrees with the
/// propagated assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignPolicy {
    /// Any disagreement is an error (noiseless contract).
    Strict,
    /// Accept when at least 90% of non-tree edges agree; otherwise error.
    Majority,
    /// Always accept the tree assignment (best-effort pipelines).
    Force,
}

/// Fraction of agreeing non-tree edges required by [`SignPolicy::Majority`].
const MAJORITY_AGREEMENT: f64 = 0.9;

/// Outcome of sign propagation.
#[derive(Debug, Clone)]
pub struct SignAssignment {
    /// Per-worker sign; 0 marks workers with no usable interactions.
    pub signs: Vec<i8>,
    /// Whether any component was flipped to enforce a positive skill sum.
    pub flipped_globally: bool,
    /// True when every non-tree edge agreed with the propagated signs.
    pub consistent: bool,
    /// Fraction of non-tree edges that agreed (1.0 when there were none).
    pub agreement: f64,
    /// Components whose signed sum was exactly zero; the flip convention is
    /// ambiguous there and was applied anyway.
    pub zero_sum_components: Vec<usize>,
}

/// Maximum-|c| spanning tree of one component via Prim's algorithm.
/// Returns `(parent, order)` with the root first in `order`.
fn max_weight_tree(
    members: &[usize],
    corr: &CorrelationEstimate,
    graph: &InteractionGraph,
) -> (Vec<(usize, usize)>, Vec<usize>) {
    let root = members[0];
    let mut in_tree: Vec<usize> = vec![root];
    let mut tree_edges: Vec<(usize, usize)> = Vec::new();
    while in_tree.len() < members.len() {
        let mut best: Option<(f64, usize, usize)> = None;
        for &u in &in_tree {
            for v in graph.neighbors(u) {
                if in_tree.contains(&v) {
                    continue;
                }
                let weight = corr.get(u, v).map(|(c, _)| c.abs()).unwrap_or(0.0);
                let better = match best {
                    None => true,
                    Some((bw, _, bv)) => weight > bw || (weight == bw && v < bv),
                };
                if better {
                    best = Some((weight, u, v));
                }
            }
        }
        let (_, u, v) = best.expect("component is connected");
        tree_edges.push((u, v));
        in_tree.push(v);
    }
    (tree_edges, in_tree)
}

/// Attaches signs to magnitude estimates.
pub fn recover_signs(
    magnitudes: &SkillVector,
    corr: &CorrelationEstimate,
    graph: &InteractionGraph,
    policy: SignPolicy,
) -> Result<(SkillVector, SignAssignment)> {
    if magnitudes.len() != graph.worker_count() {
        return Err(Error::DimensionMismatch {
            expected: graph.worker_count(),
            got: magnitudes.len(),
        });
    }
    if magnitudes.values().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidParameter(
            "sign recovery expects nonnegative magnitudes".into(),
        ));
    }

    let report = graph.analyze_components();
    let w = graph.worker_count();
    let mut signs = vec![0i8; w];
    let mut flipped_globally = false;
    let mut agree_edges = 0usize;
    let mut total_checked = 0usize;
    let mut first_conflict: Option<(usize, usize)> = None;
    let mut zero_sum_components = Vec::new();

    for (comp_idx, members) in report.components().iter().enumerate() {
        if members.len() < 2 {
            continue;
        }
        // Anchor the lowest-index member positive, then propagate along the
        // tree; Prim emits edges in attachment order, so the parent sign is
        // always set before its child is reached.
        let (tree_edges, _) = max_weight_tree(members, corr, graph);
        signs[members[0]] = 1;
        for &(u, v) in &tree_edges {
            let (c, _) = corr.get(u, v).unwrap_or((0.0, 0));
            if c == 0.0 && policy != SignPolicy::Force {
                return Err(Error::AmbiguousSign { i: u, j: v });
            }
            debug_assert_ne!(signs[u], 0);
            // Force carries the parent sign through a zero-information edge.
            signs[v] = if c >= 0.0 { signs[u] } else { -signs[u] };
        }

        // Verify non-tree edges.
        for &(i, j) in graph.edges() {
            if report.component_of(i) != comp_idx
                || tree_edges.contains(&(i, j))
                || tree_edges.contains(&(j, i))
            {
                continue;
            }
            let (c, _) = corr.get(i, j).unwrap_or((0.0, 0));
            if c == 0.0 {
                // A zero correlation off the tree carries no sign evidence.
                continue;
            }
            total_checked += 1;
            let expected = (signs[i] * signs[j]) as f64;
            if (c > 0.0) == (expected > 0.0) {
                agree_edges += 1;
            } else if first_conflict.is_none() {
                first_conflict = Some((i, j));
            }
        }

        // Flip the component when its signed sum is nonpositive.
        let sum: f64 = members
            .iter()
            .map(|&i| signs[i] as f64 * magnitudes.get(i))
            .sum();
        if sum == 0.0 {
            zero_sum_components.push(comp_idx);
        }
        if sum <= 0.0 {
            for &i in members {
                signs[i] = -signs[i];
            }
            flipped_globally = true;
        }
    }

    let agreement = if total_checked == 0 {
        1.0
    } else {
        agree_edges as f64 / total_checked as f64
    };
    let consistent = first_conflict.is_none();

    if !consistent {
        let (i, j) = first_conflict.unwrap();
        match policy {
            SignPolicy::Strict => return Err(Error::SignInconsistent { i, j, agreement }),
            SignPolicy::Majority if agreement < MAJORITY_AGREEMENT => {
                return Err(Error::SignInconsistent { i, j, agreement });
            }
            _ => {}
        }
    }

    let values: Vec<f64> = (0..w)
        .map(|i| signs[i] as f64 * magnitudes.get(i))
        .collect();
    let signed = SkillVector::signed_unchecked(values, magnitudes.class_count());
    Ok((
        signed,
        SignAssignment {
            signs,
            flipped_globally,
            consistent,
            agreement,
            zero_sum_components,
        },
    ))
}

/// Closed-form magnitude of the first worker on a closed odd walk:
/// `|s_{v0}| = sqrt( prod_m |C_{v_m, v_{m+1}}|^(+1/-1 alternating) )`.
pub fn odd_cycle_magnitude(cycle: &[usize], corr: &CorrelationEstimate) -> Result<f64> {
    if cycle.len() < 3 || cycle.len().is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "cycle must have odd length >= 3, got {}",
            cycle.len()
        )));
    }
    let mut log_product = 0.0f64;
    for (m, &u) in cycle.iter().enumerate() {
        let v = cycle[(m + 1) % cycle.len()];
        let (c, _) = corr.get(u, v).ok_or_else(|| {
            Error::InvalidParameter(format!("cycle edge ({u}, {v}) is not in the graph"))
        })?;
        if c == 0.0 {
            return Err(Error::DegenerateEdge { kind: "cycle", i: u, j: v });
        }
        let term = c.abs().ln();
        if m % 2 == 0 {
            log_product += term;
        } else {
            log_product -= term;
        }
    }
    Ok((0.5 * log_product).exp())
}

/// Propagates magnitudes from one anchored worker along nonzero-correlation
/// paths: `|s_j| = |C_ij| / |s_i|`. Workers outside the anchor's reach get 0.
///
/// On noisy data the result depends on the traversal (breadth-first,
/// ascending neighbors); this is a noiseless test oracle.
pub fn propagate_magnitudes(
    anchor: usize,
    anchor_magnitude: f64,
    corr: &CorrelationEstimate,
    graph: &InteractionGraph,
) -> Result<SkillVector> {
    let w = graph.worker_count();
    if anchor >= w {
        return Err(Error::InvalidParameter(format!(
            "anchor {anchor} out of range (W = {w})"
        )));
    }
    if anchor_magnitude.is_nan() || anchor_magnitude <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "anchor magnitude must be > 0, got {anchor_magnitude}"
        )));
    }
    let report = graph.analyze_components();
    let component = report.component_of(anchor);

    let mut values = vec![0.0f64; w];
    let mut visited = vec![false; w];
    values[anchor] = anchor_magnitude;
    visited[anchor] = true;
    let mut queue = std::collections::VecDeque::from([anchor]);
    while let Some(u) = queue.pop_front() {
        for v in graph.neighbors(u) {
            if visited[v] {
                continue;
            }
            let (c, _) = corr.get(u, v).unwrap_or((0.0, 0));
            if c == 0.0 {
                continue;
            }
            values[v] = c.abs() / values[u];
            visited[v] = true;
            queue.push_back(v);
        }
    }
    // Anything in the anchor's component that nonzero edges cannot reach
    // makes the path formula degenerate.
    for (i, seen) in visited.iter().enumerate() {
        if report.component_of(i) == component && !seen {
            return Err(Error::DegenerateEdge { kind: "path", i: anchor, j: i });
        }
    }
    SkillVector::magnitudes(values, corr.class_count())
}
