//! End-to-end acceptance gate. Each numbered criterion prints one PASS/FAIL
//! line; the test fails if any criterion does.

use std::panic::{catch_unwind, AssertUnwindSafe};

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use rhbg::analysis::{cycle_fixed_point, second_eigenvalue, sweep, two_cycle_report};
use rhbg::avgprop::check_average_property;
use rhbg::game::{Configuration, Game, SolveMethod};
use rhbg::milp::{build_milp, solve_milp_exhaustive};
use rhbg::rational::{parse_rational, rat, Rational};
use rhbg::simulator::{
    run_play, strategy_avg_p1, strategy_avg_p2, Action, ScriptStrategy, Strategy, Terminal,
};
use rhbg::solver::{solve_dag, solve_enumerate, solve_iterate, solve_with};
use rhbg::strength::{classify, Strength};

fn fig(text: &str) -> Game {
    Game::parse(text).unwrap().0
}

fn fig1() -> Game {
    fig(include_str!("../fixtures/fig1.json"))
}

fn dec(s: &str) -> Rational {
    parse_rational(s).unwrap()
}

fn tol_iterate() -> Rational {
    dec("1e-12")
}

/// |a - b| <= 1e-9
fn close(a: &Rational, b: &Rational) -> bool {
    (a - b).abs() <= rat(1, 1_000_000_000)
}

fn criterion_1_thresholds_vs_lambda() {
    let g = fig1();
    let vleft = g.vertex_index("vleft").unwrap();
    for lam in [rat(0, 1), rat(1, 8), rat(1, 5)] {
        let g = g.with_lambda(lam.clone()).unwrap();
        let (th, _) = solve_iterate(&g, &tol_iterate(), 200_000).unwrap();
        let expected = cycle_fixed_point(&lam);
        assert!(
            close(&th.values[vleft], &expected),
            "lambda {lam}: got {}, want {expected}",
            th.values[vleft]
        );
    }
    assert_eq!(cycle_fixed_point(&rat(0, 1)), rat(2, 3));
    assert_eq!(cycle_fixed_point(&rat(1, 8)), rat(7, 10));
    assert_eq!(cycle_fixed_point(&rat(1, 5)), rat(8, 11));
    for lam in [rat(1, 4), rat(3, 8)] {
        let g = g.with_lambda(lam).unwrap();
        let (th, _) = solve_iterate(&g, &tol_iterate(), 200_000).unwrap();
        assert_eq!(th.values[vleft], Rational::one());
        assert!(th.is_exact());
    }
}

fn criterion_2_discontinuity() {
    let g = fig1();
    let vleft = g.vertex_index("vleft").unwrap();
    let grid = vec![rat(249, 1000), rat(1, 4)];
    let pts = sweep(&g, vleft, &grid, None, &tol_iterate(), 200_000);
    let a = pts[0].threshold.clone().unwrap();
    let b = pts[1].threshold.clone().unwrap();
    assert_eq!(a, rat(751, 1002));
    assert_eq!(b, Rational::one());
    assert!((b - a).abs() >= rat(24, 100));
}

fn criterion_3_dag_exactness() {
    let g = fig(include_str!("../fixtures/fig4.json"));
    let th = solve_dag(&g).unwrap();
    let expected: Vec<Rational> = [
        rat(7, 8),
        rat(1, 1),
        rat(1, 2),
        rat(1, 1),
        rat(1, 1),
        rat(1, 1),
        rat(0, 1),
    ]
    .to_vec();
    assert_eq!(th.values, expected);
    assert!(th.is_exact());
}

fn criterion_4_pointwise_max() {
    let g = fig(include_str!("../fixtures/fig5.json"));
    let v0 = g.vertex_index("v0").unwrap();
    for t in [rat(0, 1), rat(1, 3), rat(1, 1)] {
        let f = vec![t, rat(1, 2), rat(1, 1), rat(0, 1)];
        assert!(check_average_property(&f, &g).holds);
    }
    let th = solve_enumerate(&g).unwrap();
    assert_eq!(th.values[v0], Rational::one());
    let sol = solve_milp_exhaustive(&build_milp(&g)).unwrap();
    assert_eq!(sol.f[v0], Rational::one());
}

fn criterion_5_strength() {
    let g6 = fig(include_str!("../fixtures/fig6.json"));
    let th6 = solve_enumerate(&g6).unwrap();
    assert_eq!(th6.values[g6.vertex_index("v0").unwrap()], rat(5, 18));
    assert_eq!(th6.values[g6.vertex_index("v1").unwrap()], rat(7, 18));
    let classes = classify(&g6, &th6).unwrap();
    assert_eq!(classes[g6.vertex_index("v0").unwrap()], Strength::Weak);

    let g7 = fig(include_str!("../fixtures/fig7.json"));
    let th7 = solve_dag(&g7).unwrap();
    assert_eq!(th7.values[g7.vertex_index("q0").unwrap()], rat(7, 18));
    let classes = classify(&g7, &th7).unwrap();
    assert_eq!(classes[g7.vertex_index("q0").unwrap()], Strength::OneStrong);

    let g1 = fig1().with_lambda(Rational::zero()).unwrap();
    let th1 = solve_enumerate(&g1).unwrap();
    let classes = classify(&g1, &th1).unwrap();
    assert_eq!(
        classes[g1.vertex_index("vleft").unwrap()],
        Strength::OneStrong
    );
}

fn criterion_6_fig3_play() {
    let g = fig1();
    let th = solve_enumerate(&g).unwrap();
    let mut p1 = strategy_avg_p1(&th.values, &g).unwrap();
    let mut p2 = strategy_avg_p2(&th.values, &g, dec("0.001")).unwrap();
    let start = Configuration::new(g.vertex_index("vleft").unwrap(), dec("0.6")).unwrap();
    let trace = run_play(&g, start, &mut p1, &mut p2, 100);
    assert_eq!(trace.terminal, Terminal::P2Wins);
    assert_eq!(trace.final_vertex, g.vertex_index("v2").unwrap());
    assert_eq!(trace.steps.len(), 3);
    assert_eq!(trace.steps[0].budget1_pre, dec("0.6"));
    assert_eq!(trace.steps[0].budget1_post_wr, dec("0.575"));
    assert_eq!(trace.steps[1].budget1_pre, dec("0.15"));
    assert_eq!(trace.steps[1].budget1_post_wr, dec("0.2375"));
    assert_eq!(trace.steps[2].budget1_pre, dec("0.476"));
    // WR(0.476) = 0.75 * 0.476 + 0.125.
    assert_eq!(trace.steps[2].budget1_post_wr, dec("0.482"));
}

fn criterion_7_exact_budget_win() {
    let g = fig1().with_lambda(rat(1, 4)).unwrap();
    let th = solve_enumerate(&g).unwrap();
    let mut p1 = ScriptStrategy::new(
        "scripted",
        vec![
            (rat(1, 4), "vright".to_string()),
            (rat(1, 2), "v1".to_string()),
        ],
    );
    let mut p2 = strategy_avg_p2(&th.values, &g, rat(1, 1000)).unwrap();
    let start = Configuration::new(g.vertex_index("vleft").unwrap(), Rational::one()).unwrap();
    let trace = run_play(&g, start, &mut p1, &mut p2, 10);
    assert_eq!(trace.terminal, Terminal::P1Wins);
    assert_eq!(trace.final_vertex, g.vertex_index("v1").unwrap());
    assert_eq!(trace.steps.len(), 2);
    assert_eq!(trace.final_budget1, Rational::zero());
}

fn random_lambda(rng: &mut ChaCha8Rng) -> Rational {
    let d = rng.gen_range(2i64..=64);
    let a = rng.gen_range(0..=(d - 1) / 2);
    rat(a, d)
}

/// Random game: up to 6 vertices, out-degree at most 3, at least one target.
fn random_game(rng: &mut ChaCha8Rng, force_dag: bool) -> Game {
    let n = rng.gen_range(2usize..=6);
    let names: Vec<String> = (0..n).map(|i| format!("u{i}")).collect();
    let targets = vec![names[rng.gen_range(0..n)].clone()];
    let mut edges = Vec::new();
    for i in 0..n {
        let lo = if force_dag { i + 1 } else { 0 };
        if lo >= n {
            continue;
        }
        let deg = rng.gen_range(0usize..=3);
        for _ in 0..deg {
            let j = rng.gen_range(lo..n);
            edges.push((names[i].clone(), names[j].clone()));
        }
    }
    let lambda = random_lambda(rng);
    Game::new(names, edges, targets, lambda).unwrap().0
}

fn criterion_8a_method_agreement() {
    let seeds: Vec<u64> = (0..200).collect();
    seeds.par_iter().for_each(|&s| {
        let mut rng = ChaCha8Rng::seed_from_u64(0xA11CE ^ s);
        let g = random_game(&mut rng, false);
        let en = solve_enumerate(&g).unwrap();
        let milp = solve_milp_exhaustive(&build_milp(&g)).unwrap();
        assert_eq!(en.values, milp.f, "seed {s}");
        let (it, _) = solve_iterate(&g, &tol_iterate(), 200_000).unwrap();
        for v in 0..g.vertex_count() {
            assert!(
                close(&it.values[v], &en.values[v]),
                "seed {s} vertex {v}: iterate {} vs enumerate {}",
                it.values[v],
                en.values[v]
            );
        }
    });
}

fn criterion_8b_dag_iteration_depth() {
    let seeds: Vec<u64> = (0..200).collect();
    seeds.par_iter().for_each(|&s| {
        let mut rng = ChaCha8Rng::seed_from_u64(0xDA6 ^ s);
        let g = random_game(&mut rng, true);
        let exact = solve_dag(&g).unwrap();
        let depth = g.dag_depth().unwrap();
        // Tiny tolerance so only an exact fixed point stops the iteration.
        let (it, state) = solve_iterate(&g, &dec("1e-80"), depth + 1).unwrap();
        assert_eq!(it.values, exact.values, "seed {s}");
        assert!(state.iteration <= depth + 1);
        assert!(state.max_delta.is_zero(), "seed {s}");
    });
}

/// A fuzzed but rule-abiding opponent: random valid bid, random neighbor.
struct FuzzStrategy {
    rng: ChaCha8Rng,
}

impl Strategy for FuzzStrategy {
    fn name(&self) -> &str {
        "fuzz"
    }

    fn act(&mut self, game: &Game, vertex: usize, own: &Rational, _opp: &Rational) -> Action {
        let ns = game.neighbors(vertex);
        let move_to = ns[self.rng.gen_range(0..ns.len())];
        let num = self.rng.gen_range(0i64..=64);
        let bid = own * rat(num, 64);
        Action { bid, move_to }
    }
}

fn check_invariant(
    trace: &rhbg::simulator::PlayTrace,
    th: &[Rational],
    above: bool,
    label: &str,
) {
    let mut points: Vec<(usize, Rational)> = trace
        .steps
        .iter()
        .map(|st| (st.vertex, st.budget1_pre.clone()))
        .collect();
    points.push((trace.final_vertex, trace.final_budget1.clone()));
    for (v, x) in &points {
        if above {
            assert!(*x > th[*v], "{label}: budget {x} not above {} at {v}", th[*v]);
        } else {
            assert!(*x < th[*v], "{label}: budget {x} not below {} at {v}", th[*v]);
        }
        // Criterion 8d: Player 2's budget is the exact complement, so both
        // stay in [0, 1] iff Player 1's does.
        assert!(*x >= Rational::zero() && *x <= Rational::one(), "{label}");
    }
    match trace.terminal {
        Terminal::P2Wins => assert!(!above, "{label}: lost from above threshold"),
        Terminal::P1Wins => assert!(above, "{label}: won from below threshold"),
        Terminal::Truncated => {}
    }
}

fn criterion_8cd_play_invariants() {
    let seeds: Vec<u64> = (0..1000).collect();
    seeds.par_iter().for_each(|&s| {
        let mut rng = ChaCha8Rng::seed_from_u64(0xF1A7 ^ s);
        let g = random_game(&mut rng, false);
        let th = match solve_enumerate(&g) {
            Ok(th) => th,
            Err(_) => return,
        };
        let non_sinks: Vec<usize> = (0..g.vertex_count()).filter(|&v| !g.is_sink(v)).collect();
        if non_sinks.is_empty() {
            return;
        }
        let v = non_sinks[rng.gen_range(0..non_sinks.len())];
        let t = &th.values[v];
        // Pick a side of the threshold with room on it.
        let above = if t.is_zero() {
            true
        } else if *t == Rational::one() {
            false
        } else {
            rng.gen_bool(0.5)
        };
        let k = rat(rng.gen_range(1i64..=15), 16);
        let x = if above {
            t + (Rational::one() - t) * &k
        } else {
            t - t * &k
        };
        if x <= Rational::zero() || x >= Rational::one() {
            return;
        }
        let start = Configuration::new(v, x).unwrap();
        let mut fuzz = FuzzStrategy {
            rng: ChaCha8Rng::seed_from_u64(0xBEEF ^ s),
        };
        let trace = if above {
            let mut p1 = strategy_avg_p1(&th.values, &g).unwrap();
            run_play(&g, start, &mut p1, &mut fuzz, 60)
        } else {
            let mut p2 = strategy_avg_p2(&th.values, &g, rat(1, 1_000_000)).unwrap();
            run_play(&g, start, &mut fuzz, &mut p2, 60)
        };
        check_invariant(&trace, &th.values, above, &format!("seed {s}"));
    });
}

fn criterion_8e_eigen_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xE16E);
    for _ in 0..100 {
        let d = rng.gen_range(2i64..=10_000);
        let a = rng.gen_range(0..=(d - 1) / 2);
        let lam = rat(a, d);
        // The report constructor asserts trace, determinant, and the fixed
        // point of the cycle matrix; failures panic.
        let r = two_cycle_report(&lam).unwrap();
        assert_eq!(r.eigenvalue2, second_eigenvalue(&lam));
        let x = rat(rng.gen_range(0i64..=1000), 1000);
        let fwd = rhbg::analysis::two_cycle_forward(&x, &lam);
        assert_eq!(rhbg::analysis::f_rev(&fwd, &lam), x);
    }
}

#[test]
fn acceptance() {
    let criteria: Vec<(&str, Box<dyn Fn() + Send + Sync>)> = vec![
        ("1 thresholds vs lambda", Box::new(criterion_1_thresholds_vs_lambda)),
        ("2 discontinuity at 1/4", Box::new(criterion_2_discontinuity)),
        ("3 dag exactness", Box::new(criterion_3_dag_exactness)),
        ("4 pointwise max", Box::new(criterion_4_pointwise_max)),
        ("5 strength classification", Box::new(criterion_5_strength)),
        ("6 losing play reproduction", Box::new(criterion_6_fig3_play)),
        ("7 exact budget win", Box::new(criterion_7_exact_budget_win)),
        ("8a enumerate = milp = iterate", Box::new(criterion_8a_method_agreement)),
        ("8b dag iteration depth", Box::new(criterion_8b_dag_iteration_depth)),
        ("8c/8d play invariants", Box::new(criterion_8cd_play_invariants)),
        ("8e eigen identities", Box::new(criterion_8e_eigen_identities)),
    ];
    let mut failed = Vec::new();
    for (name, run) in &criteria {
        let started = std::time::Instant::now();
        let ok = catch_unwind(AssertUnwindSafe(run)).is_ok();
        let line = format!(
            "acceptance criterion {}: {} ({:.2}s)\n",
            name,
            if ok { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
        // Direct write so the line shows up without --nocapture.
        use std::io::Write as _;
        std::io::stdout().write_all(line.as_bytes()).unwrap();
        if !ok {
            failed.push(*name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn solve_methods_agree_under_cross_check_tolerance() {
    let g = fig1();
    let tol = tol_iterate();
    let en = solve_with(&g, SolveMethod::Enumerate, &tol, 0).unwrap();
    let mi = solve_with(&g, SolveMethod::Milp, &tol, 0).unwrap();
    assert_eq!(en.values, mi.values);
}
