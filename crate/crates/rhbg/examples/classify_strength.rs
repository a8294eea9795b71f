//! Classifies every vertex of a game where one vertex is weak: at its exact
//! threshold budget neither player can force a win.

use rhbg::game::Game;
use rhbg::rational::{format_rational, to_f64};
use rhbg::solver::solve_enumerate;
use rhbg::strength::classify;

fn main() {
    let (game, _) = Game::parse(include_str!("../fixtures/fig6.json")).unwrap();
    let th = solve_enumerate(&game).unwrap();
    let classes = classify(&game, &th).unwrap();
    for v in 0..game.vertex_count() {
        println!(
            "{}: threshold {} ({}), {}",
            game.vertex_name(v),
            format_rational(&th.values[v]),
            to_f64(&th.values[v]),
            classes[v]
        );
    }
}
