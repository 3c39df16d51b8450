//! Acceptance suite: one test per shipped guarantee, each printing a
//! PASS line with its measured runtime (`cargo test --test acceptance --
//! --nocapture` shows them).

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crowdcorr::graph::InteractionGraph;
use crowdcorr::inference::{
    committee_potential, majority_vote, map_predict_binary, prediction_error,
};
use crowdcorr::observations::{
    estimate_correlations_binary, hoeffding_radius, CorrEntry, CorrelationEstimate,
};
use crowdcorr::pipeline::{estimate_skills, EstimateOptions};
use crowdcorr::signs::{odd_cycle_magnitude, propagate_magnitudes, SignPolicy};
use crowdcorr::solver::{
    default_alpha, default_eta, expgrad_solve, gradient, loss, pgd_solve, SkillVector,
    SolverConfig,
};
use crowdcorr::synth::{
    exact_correlations, generate, Assignment, GraphFamily, SkillDist, SynthConfig,
};

fn ring_edges(w: usize) -> Vec<(usize, usize)> {
    (0..w).map(|i| (i, (i + 1) % w)).collect()
}

fn clique_edges(w: usize) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for i in 0..w {
        for j in (i + 1)..w {
            e.push((i, j));
        }
    }
    e
}

fn star3_edges(w: usize) -> Vec<(usize, usize)> {
    let mut e: Vec<_> = (1..w).map(|leaf| (0, leaf)).collect();
    e.push((1, 2));
    e
}

/// Random spanning tree plus extra edges, patched with one odd cycle when
/// the draw comes out bipartite.
fn random_connected_nonbipartite(w: usize, extra_p: f64, rng: &mut ChaCha8Rng) -> InteractionGraph {
    let mut edges = std::collections::BTreeSet::new();
    for v in 1..w {
        let p = rng.random_range(0..v);
        edges.insert((p, v));
    }
    for i in 0..w {
        for j in (i + 1)..w {
            if rng.random::<f64>() < extra_p {
                edges.insert((i, j));
            }
        }
    }
    let edge_vec: Vec<_> = edges.iter().copied().collect();
    let g = InteractionGraph::from_edges(w, &edge_vec).unwrap();
    let report = g.analyze_components();
    assert_eq!(report.component_count(), 1);
    if !report.bipartite_flags()[0] {
        return g;
    }
    // 2-color and connect two same-color vertices to force an odd cycle.
    let mut color = vec![-1i8; w];
    color[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for v in g.neighbors(u) {
            if color[v] < 0 {
                color[v] = 1 - color[u];
                queue.push_back(v);
            }
        }
    }
    let mates: Vec<usize> = (0..w).filter(|&v| color[v] == color[0]).collect();
    let (a, b) = if mates.len() >= 2 {
        (mates[0], mates[1])
    } else {
        let others: Vec<usize> = (0..w).filter(|&v| color[v] != color[0]).collect();
        (others[0], others[1])
    };
    edges.insert((a.min(b), a.max(b)));
    let edge_vec: Vec<_> = edges.iter().copied().collect();
    let g = InteractionGraph::from_edges(w, &edge_vec).unwrap();
    assert!(g.analyze_components().identifiable());
    g
}

fn uniform_vec(w: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..w).map(|_| rng.random_range(lo..hi)).collect()
}

fn pass(id: u32, name: &str, detail: &str, start: Instant) -> f64 {
    let secs = start.elapsed().as_secs_f64();
    println!("criterion {id:2} ({name}): PASS — {detail} ({secs:.2} s)");
    secs
}

// -------------------------------------------------------------------------
// 1. Identifiability verdicts on the named families.
// -------------------------------------------------------------------------
#[test]
fn criterion_01_identifiability() {
    let start = Instant::now();
    for w in [4usize, 6, 8] {
        let g = InteractionGraph::from_edges(w, &ring_edges(w)).unwrap();
        assert!(!g.analyze_components().identifiable(), "even ring W={w}");
    }
    let mut checked = 3;
    for w in (5..=25).step_by(2) {
        let g = InteractionGraph::from_edges(w, &ring_edges(w)).unwrap();
        assert!(g.analyze_components().identifiable(), "odd ring W={w}");
        checked += 1;
    }
    for w in 3..=25 {
        let star = InteractionGraph::from_edges(w, &star3_edges(w)).unwrap();
        assert!(star.analyze_components().identifiable(), "star3 W={w}");
        let clique = InteractionGraph::from_edges(w, &clique_edges(w)).unwrap();
        assert!(clique.analyze_components().identifiable(), "clique W={w}");
        checked += 2;
    }
    let secs = pass(1, "identifiability", &format!("{checked} graphs, exact"), start);
    assert!(secs < 1.0, "runtime budget 1 s exceeded: {secs:.2} s");
}

// -------------------------------------------------------------------------
// 2. Noiseless PGD recovery from arbitrary positive starts.
// -------------------------------------------------------------------------
#[test]
fn criterion_02_noiseless_pgd_recovery() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x2001);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let w = rng.random_range(4..=25);
        let g = random_connected_nonbipartite(w, 2.5 / w as f64, &mut rng);
        let s = uniform_vec(w, 0.2, 0.9, &mut rng);
        let corr = exact_correlations(&SkillVector::magnitudes(s.clone(), 2).unwrap(), &g);
        let eta = default_eta(&g, 0.9, 0.2).unwrap();
        for _ in 0..10 {
            let x0 = SkillVector::magnitudes(uniform_vec(w, 0.2, 0.9, &mut rng), 2).unwrap();
            let mut config = SolverConfig::pgd();
            config.eta = Some(eta);
            config.tau = 0.0;
            config.tol_grad = Some(1e-9);
            config.tol_step = 1e-14;
            config.max_iters = 2_000_000;
            config.record_trace = false;
            let (est, _) = pgd_solve(&corr, &g, &config, &x0).unwrap();
            let mut dev = est
                .values()
                .iter()
                .zip(&s)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            if dev > 1e-5 {
                // Refine from the current point with a tighter gradient stop.
                config.tol_grad = Some(1e-12);
                let warm = SkillVector::magnitudes(est.values().to_vec(), 2).unwrap();
                let (est2, _) = pgd_solve(&corr, &g, &config, &warm).unwrap();
                dev = est2
                    .values()
                    .iter()
                    .zip(&s)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
            }
            worst = worst.max(dev);
            assert!(dev <= 1e-5, "recovery error {dev:.2e} for W={w}");
        }
    }
    let secs = pass(
        2,
        "noiseless PGD recovery",
        &format!("100 instances x 10 starts, worst max-error {worst:.2e}"),
        start,
    );
    assert!(secs < 30.0, "runtime budget 30 s exceeded: {secs:.2} s");
}

// -------------------------------------------------------------------------
// Shared instance family for the exponentiated-gradient criteria.
// -------------------------------------------------------------------------
struct PerturbedInstance {
    graph: InteractionGraph,
    skills: Vec<f64>,
    corr: CorrelationEstimate,
    delta_max: f64,
}

fn perturbed_instances(count: usize) -> Vec<PerturbedInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3001);
    (0..count)
        .map(|_| {
            let w = rng.random_range(4..=12);
            let graph = random_connected_nonbipartite(w, 3.0 / w as f64, &mut rng);
            let skills = uniform_vec(w, 0.3, 0.9, &mut rng);
            let mut delta_max = 0.0f64;
            let entries = graph
                .edges()
                .iter()
                .map(|&(i, j)| {
                    let delta: f64 = rng.random_range(-0.01..0.01);
                    delta_max = delta_max.max(delta.abs());
                    CorrEntry {
                        i,
                        j,
                        value: skills[i] * skills[j] + delta,
                        count: graph.count(i, j),
                    }
                })
                .collect();
            let corr = CorrelationEstimate::from_entries(w, 2, entries).unwrap();
            PerturbedInstance {
                graph,
                skills,
                corr,
                delta_max,
            }
        })
        .collect()
}

fn tight_expgrad_config() -> SolverConfig {
    let mut config = SolverConfig::expgrad(0.3, 0.9);
    config.tol_grad = Some(1e-13);
    config.tol_step = 1e-13;
    config.max_iters = 3_000_000;
    config.record_trace = false;
    config
}

// -------------------------------------------------------------------------
// 3. The exponentiated-gradient limit obeys the perturbation bound.
// -------------------------------------------------------------------------
#[test]
fn criterion_03_perturbation_bound() {
    let start = Instant::now();
    let instances = perturbed_instances(100);
    let mut violations = 0;
    let mut worst_ratio = 0.0f64;
    for inst in &instances {
        let config = tight_expgrad_config();
        let x0 = config.default_x0(inst.graph.worker_count());
        let (est, trace) = expgrad_solve(&inst.corr, &inst.graph, &config, &x0).unwrap();
        assert!(trace.converged, "tight solve hit the iteration cap");
        let err: f64 = est
            .values()
            .iter()
            .zip(&inst.skills)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let spectral = inst.graph.spectral_report().unwrap();
        let bound =
            crowdcorr::solver::perturbation_bound(&inst.graph, &spectral, 0.3, 0.9, inst.delta_max)
                .unwrap();
        worst_ratio = worst_ratio.max(err / bound);
        if err > bound {
            violations += 1;
        }
    }
    assert_eq!(violations, 0, "perturbation bound violated");
    let secs = pass(
        3,
        "perturbation bound",
        &format!("100 instances, worst error/bound ratio {worst_ratio:.3}"),
        start,
    );
    assert!(secs < 60.0, "runtime budget 60 s exceeded: {secs:.2} s");
}

// -------------------------------------------------------------------------
// 4. The exponentiated-gradient iteration count stays under the bound.
// -------------------------------------------------------------------------
#[test]
fn criterion_04_iteration_bound() {
    let start = Instant::now();
    let instances = perturbed_instances(100);
    let (kappa, cap_k) = (0.3f64, 0.9f64);
    let epsilon = 1e-6f64;
    let mut worst_fraction = 0.0f64;
    for inst in &instances {
        let config = tight_expgrad_config();
        let x0 = config.default_x0(inst.graph.worker_count());
        let (limit, trace) = expgrad_solve(&inst.corr, &inst.graph, &config, &x0).unwrap();
        assert!(trace.converged);

        let alpha = default_alpha(&inst.graph, cap_k).unwrap();
        let big_l = 1.0 / alpha; // alpha = 1/L by construction
        let spectral = inst.graph.spectral_report().unwrap();
        let lambda = spectral
            .lambda_min_unit
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        let mu = kappa * kappa * lambda * spectral.n_min as f64;
        let w = inst.graph.worker_count() as f64;
        let bound = (4.0 * big_l / mu)
            * (w * cap_k.powi(4) * big_l / (epsilon * mu * kappa * kappa)).ln();
        let bound_iters = bound.ceil() as usize;

        let mut probe = tight_expgrad_config();
        probe.record_trace = true;
        probe.distance_reference = Some(limit.values().to_vec());
        probe.max_iters = bound_iters;
        let (_, probe_trace) = expgrad_solve(&inst.corr, &inst.graph, &probe, &x0).unwrap();
        let hit = probe_trace
            .records
            .iter()
            .position(|r| r.distance_sq.unwrap() <= epsilon);
        let hit = hit.unwrap_or_else(|| {
            panic!(
                "never reached ||x - x*||^2 <= {epsilon} within the {bound_iters}-iteration bound"
            )
        });
        worst_fraction = worst_fraction.max(hit as f64 / bound);
    }
    let secs = pass(
        4,
        "iteration bound",
        &format!("100 instances, worst used/bound fraction {worst_fraction:.3}"),
        start,
    );
    assert!(secs < 60.0, "runtime budget 60 s exceeded: {secs:.2} s");
}

// -------------------------------------------------------------------------
// 5. Gradient vs finite differences; loss equals the raw pair objective up
//    to a constant.
// -------------------------------------------------------------------------
#[test]
fn criterion_05_gradient_and_objective() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5001);

    // Finite differences at 20 points on each of 50 random instances.
    for _ in 0..50 {
        let w = rng.random_range(3..=10);
        let graph = random_connected_nonbipartite(w, 0.5, &mut rng);
        let entries = graph
            .edges()
            .iter()
            .map(|&(i, j)| CorrEntry {
                i,
                j,
                value: rng.random_range(-1.0..1.0),
                count: rng.random_range(1..20),
            })
            .collect();
        let corr = CorrelationEstimate::from_entries(w, 2, entries).unwrap();
        for _ in 0..20 {
            let x = uniform_vec(w, -1.0, 1.0, &mut rng);
            let xs = SkillVector::new_binary(x.clone()).unwrap();
            let g = gradient(&xs, &corr).unwrap();
            let h = 1e-6;
            for i in 0..w {
                let mut hi = x.clone();
                let mut lo = x.clone();
                hi[i] += h;
                lo[i] -= h;
                let l_hi = loss(&SkillVector::new_binary(hi).unwrap(), &corr).unwrap();
                let l_lo = loss(&SkillVector::new_binary(lo).unwrap(), &corr).unwrap();
                let fd = (l_hi - l_lo) / (2.0 * h);
                let denom = g[i].abs().max(1.0);
                assert!(
                    (g[i] - fd).abs() / denom <= 1e-6,
                    "finite-difference mismatch: {} vs {fd}",
                    g[i]
                );
            }
        }
    }

    // Raw objective over co-labeling pairs minus L(x) is constant in x.
    for trial in 0..20 {
        let family = [GraphFamily::Ring, GraphFamily::StarWithTriangle, GraphFamily::Clique]
            [trial % 3];
        let mut cfg = SynthConfig::new(family, 7, 42, 0x500 + trial as u64);
        if family == GraphFamily::Clique {
            cfg.assignment = Assignment::AllWorkers;
        }
        let inst = generate(&cfg).unwrap();
        let corr = estimate_correlations_binary(&inst.observations).unwrap();
        let by_task = inst.observations.votes_by_task();

        let raw = |x: &[f64]| -> f64 {
            let mut total = 0.0;
            for votes in &by_task {
                for (a, &(wi, li)) in votes.iter().enumerate() {
                    for &(wj, lj) in &votes[a + 1..] {
                        let yy = if li == lj { 1.0 } else { -1.0 };
                        let r: f64 = yy - x[wi] * x[wj];
                        total += r * r;
                    }
                }
            }
            0.5 * total
        };

        let mut offset0 = None;
        for _ in 0..10 {
            let x = uniform_vec(7, -1.0, 1.0, &mut rng);
            let l = loss(&SkillVector::new_binary(x.clone()).unwrap(), &corr).unwrap();
            let diff = raw(&x) - l;
            let benchmark = *offset0.get_or_insert(diff);
            let scale = benchmark.abs().max(1.0);
            assert!(
                (diff - benchmark).abs() <= 1e-9 * scale,
                "offset drifted: {diff} vs {benchmark}"
            );
        }
    }
    pass(
        5,
        "gradient/objective correctness",
        "50 FD instances x 20 points; 20 constant-offset instances x 10 points",
        start,
    );
}

// -------------------------------------------------------------------------
// 6. Signless-Laplacian facts by exhaustive enumeration, W <= 6.
// -------------------------------------------------------------------------
#[test]
fn criterion_06_spectral_enumeration() {
    let start = Instant::now();
    let mut connected_count = 0usize;
    let mut nonbipartite_count = 0usize;
    for w in 2..=6usize {
        let pairs = clique_edges(w);
        let masks = 1u32 << pairs.len();
        for mask in 1..masks {
            let edges: Vec<_> = pairs
                .iter()
                .enumerate()
                .filter(|(b, _)| mask & (1 << b) != 0)
                .map(|(_, &e)| e)
                .collect();
            let g = InteractionGraph::from_edges(w, &edges).unwrap();
            let report = g.analyze_components();
            if report.component_count() != 1 {
                continue;
            }
            connected_count += 1;
            let bipartite = report.bipartite_flags()[0];
            let spectral = g.spectral_report().unwrap();
            let lambda = spectral.lambda_min_signless[0];
            assert_eq!(
                lambda > 0.0,
                !bipartite,
                "lambda/bipartite mismatch on W={w} mask={mask:#b}: lambda={lambda}"
            );
            if !bipartite {
                nonbipartite_count += 1;
                let floor = 1.0 / (w as f64).powi(3);
                assert!(
                    lambda >= floor - 1e-12,
                    "lambda = {lambda} < 1/W^3 = {floor} on W={w} mask={mask:#b}"
                );
            }
        }
    }
    let secs = pass(
        6,
        "spectral enumeration",
        &format!("{connected_count} connected graphs, {nonbipartite_count} non-bipartite"),
        start,
    );
    assert!(secs < 60.0, "runtime budget 60 s exceeded: {secs:.2} s");
}

// -------------------------------------------------------------------------
// 7. Closed-form cycle/path magnitudes agree with the solver.
// -------------------------------------------------------------------------
#[test]
fn criterion_07_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x7001);
    let mut worst = 0.0f64;
    for &w in &[3usize, 5, 7] {
        for _ in 0..5 {
            let g = InteractionGraph::from_edges(w, &ring_edges(w)).unwrap();
            let s = uniform_vec(w, 0.3, 0.9, &mut rng);
            let corr = exact_correlations(&SkillVector::magnitudes(s.clone(), 2).unwrap(), &g);

            let mut config = SolverConfig::pgd();
            config.eta = Some(default_eta(&g, 0.9, 0.3).unwrap());
            config.tau = 0.0;
            config.tol_grad = Some(1e-13);
            config.tol_step = 1e-16;
            config.max_iters = 5_000_000;
            config.record_trace = false;
            let x0 = SkillVector::magnitudes(vec![0.6; w], 2).unwrap();
            let (solved, trace) = pgd_solve(&corr, &g, &config, &x0).unwrap();
            assert!(trace.converged);

            // Odd-cycle closed form, rotated to every worker.
            let cycle: Vec<usize> = (0..w).collect();
            for shift in 0..w {
                let rotated: Vec<usize> = (0..w).map(|k| cycle[(k + shift) % w]).collect();
                let m = odd_cycle_magnitude(&rotated, &corr).unwrap();
                let dev = (m - solved.get(rotated[0])).abs();
                worst = worst.max(dev);
                assert!(dev <= 1e-9, "cycle oracle dev {dev:.2e} (W={w})");
            }

            // Path propagation anchored at the cycle-recovered magnitude.
            let anchor_mag = odd_cycle_magnitude(&cycle, &corr).unwrap();
            let prop = propagate_magnitudes(0, anchor_mag, &corr, &g).unwrap();
            for i in 0..w {
                let dev = (prop.get(i) - solved.get(i)).abs();
                worst = worst.max(dev);
                assert!(dev <= 1e-9, "propagation dev {dev:.2e} (worker {i}, W={w})");
            }
        }
    }
    pass(
        7,
        "oracle equivalence",
        &format!("odd rings W in {{3,5,7}} x 5 draws, worst deviation {worst:.2e}"),
        start,
    );
}

// -------------------------------------------------------------------------
// 8. Lyapunov ratio is monotone along PGD under the step cap; loss is
//    monotone under the default step.
// -------------------------------------------------------------------------
#[test]
fn criterion_08_lyapunov_monotonicity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x8001);
    for _ in 0..50 {
        let w = rng.random_range(4..=15);
        let g = random_connected_nonbipartite(w, 3.0 / w as f64, &mut rng);
        let s = uniform_vec(w, 0.25, 0.85, &mut rng);
        let corr = exact_correlations(&SkillVector::magnitudes(s.clone(), 2).unwrap(), &g);

        // Exact step cap using the true skills: eta <= kappa^2/(K^2 ||N D_s^2||_inf).
        let kappa = s.iter().cloned().fold(f64::INFINITY, f64::min);
        let cap_k = s.iter().cloned().fold(0.0f64, f64::max);
        let nds2 = (0..w)
            .map(|i| {
                (0..w)
                    .map(|j| g.count(i, j) as f64 * s[j] * s[j])
                    .sum::<f64>()
            })
            .fold(0.0f64, f64::max);
        let eta_cap = kappa * kappa / (cap_k * cap_k * nds2);

        let mut config = SolverConfig::pgd();
        config.eta = Some(0.95 * eta_cap);
        config.tau = 0.0;
        config.max_iters = 2_000;
        config.tol_grad = Some(1e-15);
        config.tol_step = 1e-16;
        config.lyapunov_reference = Some(s.clone());
        let x0 = SkillVector::magnitudes(uniform_vec(w, kappa, cap_k, &mut rng), 2).unwrap();
        let (_, trace) = pgd_solve(&corr, &g, &config, &x0).unwrap();
        let vs: Vec<f64> = trace.records.iter().map(|r| r.lyapunov.unwrap()).collect();
        for k in 1..vs.len() {
            assert!(
                vs[k] <= vs[k - 1] + 1e-12,
                "Lyapunov increased at step {k}: {} -> {}",
                vs[k - 1],
                vs[k]
            );
        }

        // Default-step run: recorded loss sequence is non-increasing.
        let mut config = SolverConfig::pgd();
        config.eta = Some(default_eta(&g, cap_k, kappa).unwrap());
        config.tau = 0.0;
        config.max_iters = 2_000;
        config.tol_grad = Some(1e-15);
        config.tol_step = 1e-16;
        let (_, trace) = pgd_solve(&corr, &g, &config, &x0).unwrap();
        let slack = 1e-12 * trace.records[0].loss;
        for k in 1..trace.records.len() {
            assert!(
                trace.records[k].loss <= trace.records[k - 1].loss + slack,
                "loss increased at step {k}"
            );
        }
    }
    pass(8, "Lyapunov monotonicity", "50 noiseless instances, zero violations", start);
}

// -------------------------------------------------------------------------
// 9. End-to-end prediction error falls with task count and beats majority
//    vote at T = 330 on clique and star3.
// -------------------------------------------------------------------------
#[test]
fn criterion_09_end_to_end_trend() {
    let start = Instant::now();
    let t_values = [11usize, 33, 110, 330];
    let seeds = 15u64;
    let mut detail = String::new();

    for (fam_idx, (family, assignment, name)) in [
        (GraphFamily::Clique, Assignment::AllWorkers, "clique"),
        (GraphFamily::StarWithTriangle, Assignment::EdgePairs, "star3"),
        (GraphFamily::Ring, Assignment::EdgePairs, "ring"),
    ]
    .into_iter()
    .enumerate()
    {
        let mut means = Vec::new();
        let mut stds = Vec::new();
        let mut mv_means = Vec::new();
        for (t_idx, &t) in t_values.iter().enumerate() {
            let mut pes = Vec::new();
            let mut mv_pes = Vec::new();
            for seed in 0..seeds {
                let mut cfg = SynthConfig::new(family, 11, t, 0x9000 + fam_idx as u64 * 1000 + t_idx as u64 * 50 + seed);
                cfg.assignment = assignment;
                cfg.skill_dist = SkillDist::UniformGrid { lo: -0.3, hi: 0.8 };
                let inst = generate(&cfg).unwrap();
                let opts = EstimateOptions {
                    sign_policy: SignPolicy::Force,
                    ..Default::default()
                };
                let outcome = estimate_skills(&inst.observations, &opts).unwrap();
                let preds = map_predict_binary(&inst.observations, &outcome.skills).unwrap();
                let (pe, _) = prediction_error(&preds, &inst.truth);
                pes.push(pe);
                let (mv_pe, _) = prediction_error(&majority_vote(&inst.observations), &inst.truth);
                mv_pes.push(mv_pe);
            }
            let mean = pes.iter().sum::<f64>() / pes.len() as f64;
            let var = pes.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>()
                / (pes.len() as f64 - 1.0);
            means.push(mean);
            stds.push(var.sqrt());
            mv_means.push(mv_pes.iter().sum::<f64>() / mv_pes.len() as f64);
        }

        // Monotone non-increasing in T, allowing one inversion of <= 1 sigma.
        let mut inversions = 0;
        for k in 1..means.len() {
            if means[k] > means[k - 1] {
                inversions += 1;
                assert!(
                    means[k] - means[k - 1] <= stds[k],
                    "{name}: inversion {} -> {} exceeds 1 sigma = {}",
                    means[k - 1],
                    means[k],
                    stds[k]
                );
            }
        }
        assert!(inversions <= 1, "{name}: {inversions} inversions in mean PE");

        if name != "ring" {
            assert!(
                means[3] <= mv_means[3],
                "{name}: PGD mean PE {} > MV mean PE {} at T = 330",
                means[3],
                mv_means[3]
            );
        }
        detail.push_str(&format!(
            "{name} PE {:.3}->{:.3} (MV {:.3}); ",
            means[0], means[3], mv_means[3]
        ));
    }
    let secs = pass(9, "end-to-end trend", detail.trim_end_matches("; "), start);
    assert!(secs < 300.0, "runtime budget 300 s exceeded: {secs:.2} s");
}

// -------------------------------------------------------------------------
// 10. Skill-distribution regimes: reliable crowds are solved, majority-
//     negative crowds flip.
// -------------------------------------------------------------------------
#[test]
fn criterion_10_skill_regimes() {
    let start = Instant::now();
    let run = |alpha: f64, beta: f64, seed: u64| -> f64 {
        let mut cfg = SynthConfig::new(GraphFamily::Clique, 11, 300, seed);
        cfg.assignment = Assignment::AllWorkers;
        cfg.skill_dist = SkillDist::Beta { alpha, beta };
        let inst = generate(&cfg).unwrap();
        let opts = EstimateOptions {
            sign_policy: SignPolicy::Force,
            ..Default::default()
        };
        let outcome = estimate_skills(&inst.observations, &opts).unwrap();
        let preds = map_predict_binary(&inst.observations, &outcome.skills).unwrap();
        prediction_error(&preds, &inst.truth).0
    };

    let reliable: Vec<f64> = (0..10).map(|k| run(5.0, 1.0, 0xA000 + k)).collect();
    let reliable_mean = reliable.iter().sum::<f64>() / 10.0;
    assert!(
        reliable_mean <= 0.05,
        "beta(5,1) crowd mean PE {reliable_mean} > 0.05"
    );

    let adversarial: Vec<f64> = (0..10).map(|k| run(1.0, 3.0, 0xA100 + k)).collect();
    let adversarial_mean = adversarial.iter().sum::<f64>() / 10.0;
    assert!(
        adversarial_mean >= 0.5,
        "beta(1,3) crowd mean PE {adversarial_mean} < 0.5 (sign convention should flip it)"
    );
    pass(
        10,
        "skill regimes",
        &format!("beta(5,1) PE {reliable_mean:.4}; beta(1,3) PE {adversarial_mean:.4}"),
        start,
    );
}

// -------------------------------------------------------------------------
// 11. Hoeffding radius covers all edges simultaneously with the advertised
//     frequency.
// -------------------------------------------------------------------------
#[test]
fn criterion_11_hoeffding_coverage() {
    let start = Instant::now();
    let delta = 0.1;
    let seeds = 200u64;
    let mut covered = 0usize;
    for seed in 0..seeds {
        let mut cfg = SynthConfig::new(GraphFamily::Ring, 11, 1100, 0xB000 + seed);
        cfg.skill_dist = SkillDist::UniformGrid { lo: -0.3, hi: 0.8 };
        let inst = generate(&cfg).unwrap();
        let graph = InteractionGraph::build(&inst.observations);
        let corr = estimate_correlations_binary(&inst.observations).unwrap();
        let radius = hoeffding_radius(
            graph.min_positive_count().unwrap(),
            graph.degree_sum(),
            delta,
        )
        .unwrap();
        let max_dev = corr
            .entries()
            .iter()
            .map(|e| (e.value - inst.skills.get(e.i) * inst.skills.get(e.j)).abs())
            .fold(0.0f64, f64::max);
        if max_dev <= radius {
            covered += 1;
        }
    }
    let frequency = covered as f64 / seeds as f64;
    assert!(
        frequency >= 1.0 - delta,
        "coverage frequency {frequency} below {}",
        1.0 - delta
    );
    pass(
        11,
        "Hoeffding coverage",
        &format!("{covered}/{seeds} seeds covered (needed {})", (1.0 - delta) * seeds as f64),
        start,
    );
}

// -------------------------------------------------------------------------
// 12. Oracle MAP error stays under exp(-Phi/2) plus Monte Carlo slack.
// -------------------------------------------------------------------------
#[test]
fn criterion_12_map_optimality_bound() {
    let start = Instant::now();
    let profiles: Vec<Vec<f64>> = vec![
        vec![0.5, 0.5, 0.5],
        vec![0.9, 0.1, 0.1],
        vec![0.8, 0.6, 0.4, 0.2, 0.1],
        vec![0.3; 7],
        vec![0.7, -0.3, 0.5, 0.2, -0.1],
    ];
    let tasks = 10_000usize;
    let sigma = 0.5 / (tasks as f64).sqrt();
    let mut detail = String::new();
    for (p_idx, profile) in profiles.iter().enumerate() {
        let w = profile.len();
        let mut cfg = SynthConfig::new(GraphFamily::Clique, w, tasks, 0xC000 + p_idx as u64);
        cfg.assignment = Assignment::AllWorkers;
        cfg.skill_dist = SkillDist::Explicit(profile.clone());
        let inst = generate(&cfg).unwrap();
        let preds = map_predict_binary(&inst.observations, &inst.skills).unwrap();
        let (pe, _) = prediction_error(&preds, &inst.truth);
        let bound = committee_potential(&inst.skills).unwrap().error_upper;
        assert!(
            pe <= bound + 3.0 * sigma,
            "profile {p_idx}: PE {pe} exceeds bound {bound} + slack"
        );
        detail.push_str(&format!("[{p_idx}] {pe:.4}<={bound:.4}; "));
    }
    pass(12, "MAP optimality bound", detail.trim_end_matches("; "), start);
}

// -------------------------------------------------------------------------
// Supporting invariants exercised end to end (not numbered criteria).
// -------------------------------------------------------------------------

// Noiseless pipeline: solver + sign recovery reproduce mixed-sign skills.
#[test]
fn signed_recovery_on_noiseless_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD001);
    for _ in 0..100 {
        let w = rng.random_range(5..=25);
        let g = random_connected_nonbipartite(w, 3.0 / w as f64, &mut rng);
        // Mixed signs with positive sum and no zero skills.
        let mut s: Vec<f64>;
        loop {
            let magnitudes = uniform_vec(w, 0.2, 0.9, &mut rng);
            let flips: Vec<f64> = (0..w)
                .map(|_| if rng.random::<f64>() < 0.3 { -1.0 } else { 1.0 })
                .collect();
            s = magnitudes.iter().zip(&flips).map(|(m, f)| m * f).collect();
            if s.iter().sum::<f64>() > 0.0 {
                break;
            }
        }
        let corr = exact_correlations(&SkillVector::new_binary(s.clone()).unwrap(), &g);

        let mut config = SolverConfig::pgd();
        config.eta = Some(default_eta(&g, 0.9, 0.2).unwrap());
        config.tau = 0.0;
        config.tol_grad = Some(1e-11);
        config.tol_step = 1e-15;
        config.max_iters = 2_000_000;
        config.record_trace = false;
        let x0 = SkillVector::magnitudes(vec![0.5; w], 2).unwrap();
        let (mags, _) = pgd_solve(&corr.absolute(), &g, &config, &x0).unwrap();
        let (signed, assignment) =
            crowdcorr::signs::recover_signs(&mags, &corr, &g, SignPolicy::Strict).unwrap();
        assert!(assignment.consistent);
        let sum: f64 = signed.values().iter().sum();
        assert!(sum > 0.0);
        for (a, b) in signed.values().iter().zip(&s) {
            assert!((a - b).abs() <= 1e-5, "{a} vs {b}");
        }
    }
}

// Stationary-point uniqueness: many positive starts, one limit, and that
// limit is the planted factor.
#[test]
fn fifty_starts_share_one_limit() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD003);
    let w = 9;
    let g = random_connected_nonbipartite(w, 0.4, &mut rng);
    let s = uniform_vec(w, 0.2, 0.9, &mut rng);
    let corr = exact_correlations(&SkillVector::magnitudes(s.clone(), 2).unwrap(), &g);
    let mut config = SolverConfig::pgd();
    config.eta = Some(default_eta(&g, 0.9, 0.2).unwrap());
    config.tau = 0.0;
    config.tol_grad = Some(1e-11);
    config.tol_step = 1e-15;
    config.max_iters = 2_000_000;
    config.record_trace = false;
    let mut limits: Vec<Vec<f64>> = Vec::new();
    for _ in 0..50 {
        let x0 = SkillVector::magnitudes(uniform_vec(w, 0.2, 0.9, &mut rng), 2).unwrap();
        let (est, trace) = pgd_solve(&corr, &g, &config, &x0).unwrap();
        assert!(trace.converged);
        limits.push(est.values().to_vec());
    }
    for pair in limits.windows(2) {
        let gap = pair[0]
            .iter()
            .zip(&pair[1])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(gap <= 1e-5, "two starts disagree by {gap:.2e}");
    }
    for (a, b) in limits[0].iter().zip(&s) {
        assert!((a - b).abs() <= 1e-5);
    }
}

// Cross-method agreement: expgrad and PGD land on the same magnitudes.
#[test]
fn pgd_and_expgrad_agree_noiseless() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD002);
    for _ in 0..10 {
        let w = rng.random_range(4..=10);
        let g = random_connected_nonbipartite(w, 0.5, &mut rng);
        let s = uniform_vec(w, 0.35, 0.85, &mut rng);
        let corr = exact_correlations(&SkillVector::magnitudes(s.clone(), 2).unwrap(), &g);

        let mut pgd = SolverConfig::pgd();
        pgd.eta = Some(default_eta(&g, 0.9, 0.3).unwrap());
        pgd.tau = 0.0;
        pgd.tol_grad = Some(1e-12);
        pgd.max_iters = 2_000_000;
        pgd.record_trace = false;
        let x0 = SkillVector::magnitudes(vec![0.6; w], 2).unwrap();
        let (a, _) = pgd_solve(&corr, &g, &pgd, &x0).unwrap();

        let mut eg = SolverConfig::expgrad(0.3, 0.9);
        eg.tol_grad = Some(1e-12);
        eg.tol_step = 1e-14;
        eg.max_iters = 3_000_000;
        eg.record_trace = false;
        let ex0 = eg.default_x0(w);
        let (b, _) = expgrad_solve(&corr, &g, &eg, &ex0).unwrap();

        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-3, "methods disagree: {x} vs {y}");
        }
    }
}

// Thresholding removes a zero-skill worker's edges with high frequency.
#[test]
fn spammer_thresholding_monte_carlo() {
    let mut hits = 0;
    for seed in 0..100u64 {
        let mut cfg = SynthConfig::new(GraphFamily::Clique, 10, 10_000, 0xD100 + seed);
        cfg.assignment = Assignment::AllWorkers;
        let mut skills = vec![0.5; 10];
        skills[3] = 0.0;
        cfg.skill_dist = SkillDist::Explicit(skills);
        let inst = generate(&cfg).unwrap();
        let graph = InteractionGraph::build(&inst.observations);
        let corr = estimate_correlations_binary(&inst.observations).unwrap();
        let (_, pruned) = crowdcorr::observations::threshold_spammers(&corr, 0.05, &graph).unwrap();
        if pruned.degree(3) == 0 {
            hits += 1;
        }
    }
    assert!(hits >= 95, "spammer edges survived in {} of 100 runs", 100 - hits);
}

// Simulated correlations respect the Hoeffding radius around s_i s_j; the
// estimator invariants hold on every generated instance.
#[test]
fn correlation_symmetry_and_range_on_synthetic_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD200);
    for _ in 0..50 {
        let t = rng.random_range(30..200);
        let mut cfg = SynthConfig::new(GraphFamily::Ring, 9, t.max(9), rng.random());
        cfg.skill_dist = SkillDist::UniformGrid { lo: -0.5, hi: 0.9 };
        let inst = generate(&cfg).unwrap();
        let corr = estimate_correlations_binary(&inst.observations).unwrap();
        for e in corr.entries() {
            assert!(e.i < e.j);
            assert!((-1.0..=1.0).contains(&e.value));
            assert_eq!(corr.get(e.i, e.j), corr.get(e.j, e.i));
        }
    }
}
