//! The self-loop game admits a whole family of average-property solutions:
//! any value at the looping vertex passes, but only the largest one is the
//! threshold function.

use rhbg::avgprop::check_average_property;
use rhbg::game::Game;
use rhbg::rational::{parse_rational, Rational};
use rhbg::solver::solve_enumerate;

fn main() {
    let (game, _) = Game::parse(include_str!("../fixtures/fig5.json")).unwrap();
    for t in ["0", "1/3", "1"] {
        let f: Vec<Rational> = [t, "1/2", "1", "0"]
            .iter()
            .map(|s| parse_rational(s).unwrap())
            .collect();
        let report = check_average_property(&f, &game);
        println!("f(v0) = {t}: {}", report.describe(&game).trim_end());
    }
    let th = solve_enumerate(&game).unwrap();
    println!(
        "threshold picks the maximum: f(v0) = {}",
        th.values[game.vertex_index("v0").unwrap()]
    );
}
