//! Solves the same cyclic game with every method and compares the answers.

use rhbg::game::{Game, SolveMethod};
use rhbg::rational::{format_rational, parse_rational, to_f64};
use rhbg::solver::solve_with;

fn main() {
    let (game, _) = Game::parse(include_str!("../fixtures/fig1.json")).unwrap();
    let tol = parse_rational("1e-12").unwrap();
    for method in [
        SolveMethod::Iterate,
        SolveMethod::Enumerate,
        SolveMethod::Milp,
    ] {
        let th = solve_with(&game, method, &tol, 200_000).unwrap();
        println!("{method}:");
        for v in 0..game.vertex_count() {
            println!(
                "  {} = {} ({})",
                game.vertex_name(v),
                format_rational(&th.values[v]),
                to_f64(&th.values[v])
            );
        }
        println!("  residual {}", format_rational(&th.residual));
    }
}
