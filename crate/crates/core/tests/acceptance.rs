//! End-to-end acceptance gate.  Each test prints one `[PASS]`/`[FAIL]`
//! line (visible with `--nocapture`, or in the captured output of a
//! failing test) and enforces a wall-clock budget.

use icm_core::{
    classify, contraction_check, estimate_icm, fragmented_asymptotics, hoarder_decompose,
    hoarder_limit, hoarder_power_closed_form, perturbed_evolve, support_experiment,
    synthesize_economy, AbsorptionVerdict, AgentId, CirculationGraph, ClassPartition, DenseMatrix,
    EconomyProfile, IncomeCirculationMatrix, PerturbationSpec, SupportEvent, SupportOptions,
    Trajectory, TransactionRecord, Verdict, WealthVector, DEFAULT_TOLERANCE,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

fn criterion<F>(number: usize, name: &str, budget: Duration, body: F)
where
    F: FnOnce(),
{
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(body));
    let elapsed = start.elapsed();
    let within = elapsed <= budget;
    let ok = outcome.is_ok() && within;
    println!(
        "[{}] criterion {number:2}: {name} ({elapsed:.2?} of {budget:.0?} budget)",
        if ok { "PASS" } else { "FAIL" },
    );
    if let Err(cause) = outcome {
        resume_unwind(cause);
    }
    assert!(within, "criterion {number} exceeded its {budget:?} budget");
}

/// Three agents passing everything around one cycle.
fn three_cycle() -> IncomeCirculationMatrix {
    IncomeCirculationMatrix::validate(
        3,
        &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)],
        DEFAULT_TOLERANCE,
    )
    .unwrap()
}

/// Random strongly connected economy: a full cycle spine keeps it whole,
/// one forced savings entry makes it cohesive, extra edges thicken it.
fn random_cohesive_pattern(n: usize, seed: u64, density: f64) -> IncomeCirculationMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let saver = rng.random_range(0..n);
    let mut entries = Vec::new();
    for j in 0..n {
        let mut rows = vec![(j + 1) % n];
        if j == saver {
            rows.push(j);
        }
        for i in 0..n {
            if !rows.contains(&i) && rng.random::<f64>() < density {
                rows.push(i);
            }
        }
        let weights: Vec<f64> = rows.iter().map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = weights.iter().sum();
        for (&i, w) in rows.iter().zip(&weights) {
            entries.push((i, j, w / total));
        }
    }
    entries.sort_by_key(|&(i, j, _)| (j, i));
    IncomeCirculationMatrix::validate(n, &entries, DEFAULT_TOLERANCE).unwrap()
}

/// Smallest k with every pair reachable by a walk of exactly k edges,
/// found by multiplying the boolean adjacency matrix one step at a time.
fn exponent_oracle(f: &IncomeCirculationMatrix, cap: usize) -> Option<usize> {
    let n = f.n();
    let mut adj = vec![false; n * n];
    for (i, j, _) in f.entries() {
        adj[i * n + j] = true;
    }
    let mut power = adj.clone();
    for k in 1..=cap {
        if k > 1 {
            let mut next = vec![false; n * n];
            for i in 0..n {
                for m in 0..n {
                    if power[i * n + m] {
                        for j in 0..n {
                            if adj[m * n + j] {
                                next[i * n + j] = true;
                            }
                        }
                    }
                }
            }
            power = next;
        }
        if power.iter().all(|&b| b) {
            return Some(k);
        }
    }
    None
}

fn cohesive_cases() -> Vec<(IncomeCirculationMatrix, WealthVector)> {
    (0..50)
        .map(|i| {
            let n = 3 + (i % 28);
            let density = 0.3 + 0.1 * (i % 4) as f64;
            synthesize_economy(
                n,
                EconomyProfile::CohesiveRandom { density },
                1000 + i as u64,
            )
            .unwrap()
        })
        .collect()
}

fn hoarder_cases() -> Vec<(IncomeCirculationMatrix, WealthVector)> {
    (0..50)
        .map(|i| {
            let n = 3 + (i % 18);
            synthesize_economy(n, EconomyProfile::Hoarder, 2000 + i as u64).unwrap()
        })
        .collect()
}

fn two_class_cases(
    poor_pay_rich: bool,
    rich_pay_poor: bool,
) -> Vec<(IncomeCirculationMatrix, WealthVector)> {
    (0..10)
        .map(|i| {
            let n = 4 + (i % 17);
            synthesize_economy(
                n,
                EconomyProfile::TwoClass {
                    marginalized_frac: 0.3,
                    poor_pay_rich,
                    rich_pay_poor,
                },
                3000 + i as u64,
            )
            .unwrap()
        })
        .collect()
}

/// Transfer setup used by the envelope criteria: richest donor, poorest
/// recipient, epsilon well under the smallness ratio.
fn support_setup(x: &WealthVector) -> SupportEvent {
    let partition = ClassPartition::by_wealth_fractions(x, 0.1, 0.1).unwrap();
    let h0 = partition.top()[0];
    let l0 = partition.bottom()[0];
    SupportEvent::new(0, h0, l0, 1e-3).unwrap()
}

/// Wealthy side of a synthetic two-class economy, recognizable by wealth
/// far above the marginalized band.
fn wealth_partition(x: &WealthVector) -> ClassPartition {
    let top: Vec<AgentId> = (0..x.len())
        .filter(|&i| x.get(AgentId(i)) > 10.0)
        .map(AgentId)
        .collect();
    let bottom: Vec<AgentId> = (0..x.len())
        .filter(|&i| x.get(AgentId(i)) <= 10.0)
        .map(AgentId)
        .collect();
    ClassPartition::from_sets(x.len(), top, bottom).unwrap()
}

/// Largest one-step relative change of the monetary base along a run.
fn max_step_drift(traj: &Trajectory) -> f64 {
    let base = traj.states()[0].monetary_base();
    traj.states()
        .windows(2)
        .map(|w| (w[1].monetary_base() - w[0].monetary_base()).abs() / base)
        .fold(0.0, f64::max)
}

#[test]
fn criterion_01_walk_length_table() {
    criterion(
        1,
        "golden walk-length table on the 3-cycle",
        Duration::from_secs(1),
        || {
            let f = three_cycle();
            let graph = CirculationGraph::from_matrix(&f);
            // Rows of the reference table, agents 0-based: each pair lists its
            // two shortest walk lengths; no other length up to 6 connects it.
            let table: [(usize, usize, [usize; 2]); 9] = [
                (0, 0, [3, 6]),
                (0, 1, [1, 4]),
                (0, 2, [2, 5]),
                (1, 0, [2, 5]),
                (1, 1, [3, 6]),
                (1, 2, [1, 4]),
                (2, 0, [1, 4]),
                (2, 1, [2, 5]),
                (2, 2, [3, 6]),
            ];
            for &(u, v, lengths) in &table {
                for k in 1..=6 {
                    assert_eq!(
                        graph.paths_of_length(AgentId(u), AgentId(v), k),
                        lengths.contains(&k),
                        "pair ({u},{v}) at length {k}"
                    );
                }
                let witness = graph.shortest_path_witness(AgentId(u), AgentId(v)).unwrap();
                assert_eq!(witness.length(), lengths[0], "shortest for ({u},{v})");
                assert_eq!(witness.nodes.first(), Some(&AgentId(u)));
                assert_eq!(witness.nodes.last(), Some(&AgentId(v)));
                for pair in witness.nodes.windows(2) {
                    assert!(graph.has_edge(pair[0].0, pair[1].0));
                }
            }
        },
    );
}

#[test]
fn criterion_02_cycle_periodicity() {
    criterion(
        2,
        "3-cycle is whole with period 3 and cubes to identity",
        Duration::from_secs(1),
        || {
            let f = three_cycle();
            let class = classify(&f);
            assert_eq!(class.verdict, Verdict::WholePeriodic);
            assert_eq!(class.period, Some(3));
            assert_eq!(class.exponent, None);
            let cubed = f.matrix_power(3).unwrap();
            assert_eq!(cubed.max_abs_diff(&DenseMatrix::identity(3)), 0.0);
        },
    );
}

#[test]
fn criterion_03_one_saver_suffices() {
    criterion(
        3,
        "200 whole societies with a saver are all cohesive",
        Duration::from_secs(30),
        || {
            let mut cohesive = 0;
            for i in 0..200u64 {
                let n = 3 + (i as usize % 28);
                let f = random_cohesive_pattern(n, 4000 + i, 0.15);
                let class = classify(&f);
                assert_eq!(class.verdict, Verdict::Cohesive, "case {i}, n = {n}");
                let k0 = class.exponent.unwrap();
                assert!(k0 <= class.wielandt_bound());
                let diag = class.diagonal_bound().expect("a saver was forced");
                assert!(k0 <= diag, "case {i}: exponent {k0} above bound {diag}");
                cohesive += 1;
            }
            assert_eq!(cohesive, 200);
        },
    );
}

#[test]
fn criterion_04_exponent_matches_oracle() {
    criterion(
        4,
        "fast exponent equals stepwise boolean oracle, 100/100",
        Duration::from_secs(10),
        || {
            for i in 0..100u64 {
                let n = 3 + (i as usize % 10);
                let f = random_cohesive_pattern(n, 5000 + i, 0.2);
                let class = classify(&f);
                let fast = class.exponent.expect("generator output is primitive");
                let cap = class.wielandt_bound();
                let oracle = exponent_oracle(&f, cap).expect("oracle must terminate");
                assert_eq!(fast, oracle, "case {i}, n = {n}");
            }
        },
    );
}

#[test]
fn criterion_05_window_contraction() {
    criterion(
        5,
        "positive stochastic maps contract zero-sum vectors, 10000/10000",
        Duration::from_secs(10),
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(6000);
            let mut trials = 0;
            for _ in 0..1000 {
                let n = rng.random_range(2..=20);
                let mut g = DenseMatrix::zeros(n);
                for j in 0..n {
                    let col: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
                    let total: f64 = col.iter().sum();
                    for (i, &v) in col.iter().enumerate() {
                        g.set(i, j, v / total);
                    }
                }
                for _ in 0..10 {
                    let mut u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let mean = u.iter().sum::<f64>() / n as f64;
                    for v in &mut u {
                        *v -= mean;
                    }
                    let check = contraction_check(&g, &u).unwrap();
                    assert!(
                        check.lhs <= check.rhs + 1e-12,
                        "|Gu| = {} exceeded (1-g)|u| = {} at g = {}",
                        check.lhs,
                        check.rhs,
                        check.g
                    );
                    trials += 1;
                }
            }
            assert_eq!(trials, 10_000);
        },
    );
}

#[test]
fn criterion_06_deviation_envelope() {
    criterion(
        6,
        "support deviation stays under its geometric envelope, 50/50",
        Duration::from_secs(60),
        || {
            for (case, (f, x)) in cohesive_cases().into_iter().enumerate() {
                let event = support_setup(&x);
                let result =
                    support_experiment(&f, &x, &event, &SupportOptions::default()).unwrap();
                assert!(!result.smallness_warning);
                let bound = result
                    .bound
                    .as_ref()
                    .expect("cohesive economies get a bound");
                for (k, (d, b)) in result.deviation.iter().zip(bound).enumerate() {
                    assert!(
                        *d <= b + 1e-9,
                        "case {case}: deviation {d} above envelope {b} at step {k}"
                    );
                }
                let info = result.bound_info.as_ref().unwrap();
                let predicted = info.horizon_for(result.recovery_threshold * event.epsilon);
                let recovered = result
                    .recovery_step
                    .expect("deviation must fall below the recovery threshold");
                assert!(
                    recovered <= predicted,
                    "case {case}: recovery at {recovered} misses predicted horizon {predicted}"
                );
            }
        },
    );
}

#[test]
fn criterion_07_hoarder_closed_form() {
    criterion(
        7,
        "hoarder powers match the closed form and limit, 50/50",
        Duration::from_secs(30),
        || {
            for (case, (f, _)) in hoarder_cases().into_iter().enumerate() {
                let dec = hoarder_decompose(&f).unwrap();
                assert!(dec.is_pure_cash_hoarder());
                for k in 1..=64 {
                    let closed = hoarder_power_closed_form(&dec, k).unwrap();
                    let direct = f.matrix_power(k).unwrap();
                    let diff = closed.max_abs_diff(&direct);
                    assert!(diff <= 1e-9, "case {case}: power {k} off by {diff}");
                }
                let limit = hoarder_limit(&dec).unwrap();
                let far = f.matrix_power(4096).unwrap();
                let diff = limit.max_abs_diff(&far);
                assert!(diff <= 1e-6, "case {case}: limit off by {diff}");
                // All mass lands on the hoarder: every bottom-row entry is a
                // full column's worth.
                let n = f.n();
                for j in 0..n {
                    assert!(
                        (limit.get(n - 1, j) - 1.0).abs() <= 1e-9,
                        "case {case}, col {j}"
                    );
                }
            }
        },
    );
}

#[test]
fn criterion_08_one_way_class_absorption() {
    criterion(
        8,
        "one-way class flows drain all wealth to the absorbing side",
        Duration::from_secs(30),
        || {
            for (f, x) in two_class_cases(true, false) {
                let partition = wealth_partition(&x);
                let diag = fragmented_asymptotics(&f, &x, &partition, 100_000).unwrap();
                assert_eq!(diag.verdict, AbsorptionVerdict::WealthyAbsorb);
                assert!(diag.steps_run <= 100_000);
                assert!(
                    diag.wealthy_share > 0.999,
                    "wealthy share only reached {}",
                    diag.wealthy_share
                );
            }
            for (f, x) in two_class_cases(false, true) {
                let partition = wealth_partition(&x);
                let diag = fragmented_asymptotics(&f, &x, &partition, 100_000).unwrap();
                assert_eq!(diag.verdict, AbsorptionVerdict::PoorAbsorb);
                assert!(diag.steps_run <= 100_000);
                assert!(
                    diag.marginalized_share > 0.999,
                    "marginalized share only reached {}",
                    diag.marginalized_share
                );
            }
        },
    );
}

#[test]
fn criterion_09_conservation_suite() {
    criterion(
        9,
        "monetary base is conserved across every trajectory family",
        Duration::from_secs(60),
        || {
            // Support experiments on the cohesive family.
            for (f, x) in cohesive_cases() {
                let event = support_setup(&x);
                let result =
                    support_experiment(&f, &x, &event, &SupportOptions::default()).unwrap();
                assert!(max_step_drift(&result.baseline) <= 1e-12);
                assert!(max_step_drift(&result.supported) <= 1e-12);
            }
            // Plain evolution on the hoarder family.
            for (f, x) in hoarder_cases() {
                let traj = icm_core::evolve_constant(&f, &x, 64).unwrap();
                assert!(max_step_drift(&traj) <= 1e-12);
            }
            // Long absorption runs on the two-class family.
            for flags in [(true, false), (false, true)] {
                for (f, x) in two_class_cases(flags.0, flags.1) {
                    let base = x.monetary_base();
                    let mut state = x;
                    for _ in 0..2000 {
                        let next = f.step(&state).unwrap();
                        assert!(
                            (next.monetary_base() - state.monetary_base()).abs() / base <= 1e-12
                        );
                        state = next;
                    }
                }
            }
            // Noisy runs: same support event, fresh noise each step, 20 seeds.
            let (f, x) =
                synthesize_economy(12, EconomyProfile::CohesiveRandom { density: 0.4 }, 7000)
                    .unwrap();
            let event = support_setup(&x);
            let mut recovered = 0;
            for seed in 0..20 {
                let noise = PerturbationSpec::new(0.01, seed).unwrap();
                let result =
                    perturbed_evolve(&f, &x, &event, &noise, &SupportOptions::default()).unwrap();
                assert!(max_step_drift(&result.baseline) <= 1e-12);
                assert!(max_step_drift(&result.supported) <= 1e-12);
                if result.recovery_step.is_some() {
                    recovered += 1;
                }
            }
            assert_eq!(recovered, 20, "every noisy run must still recover");
        },
    );
}

#[test]
fn criterion_10_estimation_round_trip() {
    criterion(
        10,
        "transaction logs re-estimate their generating matrix",
        Duration::from_secs(5),
        || {
            for i in 0..25u64 {
                let n = 2 + (i as usize % 19);
                let (f, x) = synthesize_economy(
                    n,
                    EconomyProfile::CohesiveRandom { density: 0.4 },
                    8000 + i,
                )
                .unwrap();
                let records: Vec<TransactionRecord> = f
                    .entries()
                    .filter(|&(r, c, _)| r != c)
                    .map(|(r, c, v)| TransactionRecord {
                        time: 7,
                        payer: AgentId(c),
                        payee: AgentId(r),
                        amount: v * x.get(AgentId(c)),
                    })
                    .collect();
                let estimated = estimate_icm(&records, &x, 7).unwrap();
                for r in 0..n {
                    for c in 0..n {
                        let diff = (estimated.get(r, c) - f.get(r, c)).abs();
                        assert!(diff <= 1e-12, "case {i}: entry ({r},{c}) off by {diff}");
                    }
                }
            }
            for n in [1usize, 4, 9] {
                let x = WealthVector::new(vec![1.5; n], 3).unwrap();
                let idle = estimate_icm(&[], &x, 3).unwrap();
                assert_eq!(idle.nnz(), n, "an idle step is exactly the identity");
                for j in 0..n {
                    assert_eq!(idle.get(j, j), 1.0);
                }
            }
        },
    );
}
