//! Replays the losing play: Player 1 starts at vleft with 0.6, below the
//! 7/10 threshold, and the optimal opponent grinds the budget down.

use rhbg::game::{Configuration, Game};
use rhbg::rational::parse_rational;
use rhbg::simulator::{run_play, strategy_avg_p1, strategy_avg_p2};
use rhbg::solver::solve_enumerate;

fn main() {
    let (game, _) = Game::parse(include_str!("../fixtures/fig1.json")).unwrap();
    let th = solve_enumerate(&game).unwrap();
    let mut p1 = strategy_avg_p1(&th.values, &game).unwrap();
    let mut p2 = strategy_avg_p2(&th.values, &game, parse_rational("0.001").unwrap()).unwrap();
    let start = Configuration::new(
        game.vertex_index("vleft").unwrap(),
        parse_rational("0.6").unwrap(),
    )
    .unwrap();
    let trace = run_play(&game, start, &mut p1, &mut p2, 100);
    print!("{}", trace.render(&game));
}
