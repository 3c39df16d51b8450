//! Worker-interaction graph: co-task counts, connectivity, bipartiteness and
//! signless-Laplacian spectra.
//!
//! Skills are identifiable from pairwise correlations exactly when every
//! connected component with at least two workers contains an odd cycle
//! (equivalently, is non-bipartite). The smallest eigenvalue of the signless
//! Laplacian
//!
//! ```text
//! [L_s]_ij = N_ij (j != i),   [L_s]_ii = sum_k N_ik
//! ```
//!
//! is zero exactly on bipartite components and controls the robustness of
//! skill estimation on non-bipartite ones.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::observations::ObservationSet;

/// Relative eigenvalue tolerance: a smallest eigenvalue below this fraction
/// of the matrix scale is reported as an exact zero (bipartite within
/// numerical noise).
const RELATIVE_EIG_TOL: f64 = 1e-10;

/// Symmetric co-task count matrix with zero diagonal plus its edge list.
#[derive(Debug, Clone)]
pub struct InteractionGraph {
    worker_count: usize,
    counts: Vec<u64>,
    edges: Vec<(usize, usize)>,
}

impl InteractionGraph {
    /// Counts, for every worker pair, the tasks labeled by both.
    pub fn build(obs: &ObservationSet) -> Self {
        let w = obs.worker_count();
        let mut counts = vec![0u64; w * w];
        for votes in obs.votes_by_task() {
            for (a, &(wi, _)) in votes.iter().enumerate() {
                for &(wj, _) in &votes[a + 1..] {
                    counts[wi * w + wj] += 1;
                    counts[wj * w + wi] += 1;
                }
            }
        }
        Self::from_counts_unchecked(w, counts)
    }

    /// Builds from a full `W x W` count matrix (row-major).
    pub fn from_counts(worker_count: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != worker_count * worker_count {
            return Err(Error::DimensionMismatch {
                expected: worker_count * worker_count,
                got: counts.len(),
            });
        }
        for i in 0..worker_count {
            if counts[i * worker_count + i] != 0 {
                return Err(Error::InvalidParameter(format!(
                    "diagonal count N_{{{i},{i}}} must be zero"
                )));
            }
            for j in 0..i {
                if counts[i * worker_count + j] != counts[j * worker_count + i] {
                    return Err(Error::InvalidParameter(format!(
                        "count matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self::from_counts_unchecked(worker_count, counts))
    }

    /// Builds from weighted edges `(i, j, N_ij)`.
    pub fn from_weighted_edges(worker_count: usize, edges: &[(usize, usize, u64)]) -> Result<Self> {
        let mut counts = vec![0u64; worker_count * worker_count];
        for &(i, j, n) in edges {
            if i == j {
                return Err(Error::InvalidParameter(format!("self-edge on worker {i}")));
            }
            if i.max(j) >= worker_count {
                return Err(Error::InvalidParameter(format!(
                    "edge ({i}, {j}) out of range (W = {worker_count})"
                )));
            }
            counts[i * worker_count + j] += n;
            counts[j * worker_count + i] += n;
        }
        Ok(Self::from_counts_unchecked(worker_count, counts))
    }

    /// Unit-weight convenience used by tests and enumeration.
    pub fn from_edges(worker_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let weighted: Vec<_> = edges.iter().map(|&(i, j)| (i, j, 1)).collect();
        Self::from_weighted_edges(worker_count, &weighted)
    }

    fn from_counts_unchecked(worker_count: usize, counts: Vec<u64>) -> Self {
        let mut edges = Vec::new();
        for i in 0..worker_count {
            for j in (i + 1)..worker_count {
                if counts[i * worker_count + j] > 0 {
                    edges.push((i, j));
                }
            }
        }
        Self {
            worker_count,
            counts,
            edges,
        }
    }

    pub fn worker_count(&self) -> usize {
        self.worker_count
    }

    /// Co-task count `N_ij`.
    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.worker_count + j]
    }

    /// Edge list over pairs with `N_ij > 0`, each once with `i < j`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Unweighted degree: number of distinct co-workers.
    pub fn degree(&self, i: usize) -> usize {
        (0..self.worker_count)
            .filter(|&j| self.count(i, j) > 0)
            .count()
    }

    /// Sum of unweighted degrees, `D = 2 |E|`.
    pub fn degree_sum(&self) -> u64 {
        2 * self.edges.len() as u64
    }

    /// Row sum `N_i = sum_j N_ij`, the worker's total interaction count.
    pub fn interactions(&self, i: usize) -> u64 {
        (0..self.worker_count).map(|j| self.count(i, j)).sum()
    }

    /// Maximum row sum, `||N||_inf`.
    pub fn infinity_norm(&self) -> u64 {
        (0..self.worker_count)
            .map(|i| self.interactions(i))
            .max()
            .unwrap_or(0)
    }

    /// Smallest positive `N_ij`; `None` on an empty edge set.
    pub fn min_positive_count(&self) -> Option<u64> {
        self.edges.iter().map(|&(i, j)| self.count(i, j)).min()
    }

    /// Copy with the listed edges removed (both orientations).
    pub fn without_edges(&self, removed: &[(usize, usize)]) -> Result<Self> {
        let mut counts = self.counts.clone();
        for &(i, j) in removed {
            if i.max(j) >= self.worker_count {
                return Err(Error::InvalidParameter(format!(
                    "edge ({i}, {j}) out of range (W = {})",
                    self.worker_count
                )));
            }
            counts[i * self.worker_count + j] = 0;
            counts[j * self.worker_count + i] = 0;
        }
        Ok(Self::from_counts_unchecked(self.worker_count, counts))
    }

    /// Neighbors of `i` in ascending order.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.worker_count)
            .filter(|&j| j != i && self.count(i, j) > 0)
            .collect()
    }

    /// Connected components, per-component bipartiteness, and the
    /// identifiability verdict.
    pub fn analyze_components(&self) -> ComponentReport {
        let w = self.worker_count;
        let mut component_of = vec![usize::MAX; w];
        let mut color = vec![0i8; w];
        let mut components: Vec<Vec<usize>> = Vec::new();
        let mut bipartite: Vec<bool> = Vec::new();

        for start in 0..w {
            if component_of[start] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut members = vec![start];
            let mut is_bipartite = true;
            component_of[start] = id;
            color[start] = 1;
            let mut queue = std::collections::VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for v in self.neighbors(u) {
                    if component_of[v] == usize::MAX {
                        component_of[v] = id;
                        color[v] = -color[u];
                        members.push(v);
                        queue.push_back(v);
                    } else if color[v] == color[u] {
                        is_bipartite = false;
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
            bipartite.push(is_bipartite);
        }

        let identifiable = components
            .iter()
            .zip(&bipartite)
            .filter(|(members, _)| members.len() >= 2)
            .all(|(_, &b)| !b);

        ComponentReport {
            components,
            bipartite,
            component_of,
            identifiable,
        }
    }

    /// Signless Laplacian of the weighted graph as a dense matrix.
    pub fn signless_laplacian(&self) -> DMatrix<f64> {
        let w = self.worker_count;
        let mut m = DMatrix::zeros(w, w);
        for i in 0..w {
            for j in 0..w {
                if j != i {
                    m[(i, j)] = self.count(i, j) as f64;
                }
            }
            m[(i, i)] = self.interactions(i) as f64;
        }
        m
    }

    /// Per-component spectral quantities; errors on an empty edge set.
    pub fn spectral_report(&self) -> Result<SpectralReport> {
        if self.edges.is_empty() {
            return Err(Error::NoInteractions);
        }
        let report = self.analyze_components();
        let norm_two = {
            let n = DMatrix::from_fn(self.worker_count, self.worker_count, |i, j| {
                self.count(i, j) as f64
            });
            n.symmetric_eigen()
                .eigenvalues
                .iter()
                .fold(0.0f64, |acc, &l| acc.max(l.abs()))
        };
        let mut lambda_min_signless = Vec::with_capacity(report.components.len());
        let mut lambda_min_unit = Vec::with_capacity(report.components.len());
        for members in &report.components {
            lambda_min_signless.push(component_lambda_min(self, members, false));
            lambda_min_unit.push(component_lambda_min(self, members, true));
        }
        Ok(SpectralReport {
            lambda_min_signless,
            lambda_min_unit,
            n_min: self.min_positive_count().unwrap(),
            norm_two,
            norm_inf: self.infinity_norm(),
        })
    }
}

/// Smallest signless-Laplacian eigenvalue of one component, with weights
/// either taken from the count matrix or flattened to one.
fn component_lambda_min(graph: &InteractionGraph, members: &[usize], unit: bool) -> f64 {
    if members.len() == 1 {
        return 0.0;
    }
    let k = members.len();
    let mut m = DMatrix::zeros(k, k);
    for (a, &i) in members.iter().enumerate() {
        let mut diag = 0.0;
        for (b, &j) in members.iter().enumerate() {
            if i == j {
                continue;
            }
            let c = graph.count(i, j);
            if c > 0 {
                let wgt = if unit { 1.0 } else { c as f64 };
                m[(a, b)] = wgt;
                diag += wgt;
            }
        }
        m[(a, a)] = diag;
    }
    let scale = (0..k).map(|a| m[(a, a)]).fold(1.0f64, f64::max);
    let lam = m
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, &l| acc.min(l));
    if lam < RELATIVE_EIG_TOL * scale {
        0.0
    } else {
        lam
    }
}

/// Partition of workers into connected components plus bipartite flags.
///
/// `identifiable` is true exactly when no component with two or more workers
/// is bipartite; singleton components are reported but do not block the
/// verdict (they are simply non-estimable).
#[derive(Debug, Clone)]
pub struct ComponentReport {
    components: Vec<Vec<usize>>,
    bipartite: Vec<bool>,
    component_of: Vec<usize>,
    identifiable: bool,
}

impl ComponentReport {
    /// Components ordered by smallest member, members ascending.
    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn bipartite_flags(&self) -> &[bool] {
        &self.bipartite
    }

    pub fn identifiable(&self) -> bool {
        self.identifiable
    }

    pub fn component_of(&self, worker: usize) -> usize {
        self.component_of[worker]
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    /// A component is estimable when it is multi-worker and non-bipartite.
    pub fn estimable(&self, component: usize) -> bool {
        self.components[component].len() >= 2 && !self.bipartite[component]
    }

    /// Workers that share no task with anyone.
    pub fn singletons(&self) -> Vec<usize> {
        self.components
            .iter()
            .filter(|m| m.len() == 1)
            .map(|m| m[0])
            .collect()
    }
}

/// Spectral quantities of the interaction graph, aligned with the component
/// order of [`InteractionGraph::analyze_components`].
#[derive(Debug, Clone)]
pub struct SpectralReport {
    /// Smallest eigenvalue of the weighted signless Laplacian, per component.
    pub lambda_min_signless: Vec<f64>,
    /// Same with all edge weights flattened to one; this is the `lambda`
    /// entering the robustness constant `mu = kappa^2 * lambda * N_min`.
    pub lambda_min_unit: Vec<f64>,
    /// Smallest positive co-task count `N_min`.
    pub n_min: u64,
    /// Spectral norm `||N||_2`.
    pub norm_two: f64,
    /// Maximum row sum `||N||_inf`.
    pub norm_inf: u64,
}
