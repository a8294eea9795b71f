//! Sweeps the redistribution factor and prints the entry vertex threshold
//! as CSV. Note the jump between 0.249 and 0.25.

use rhbg::analysis::{sweep, sweep_csv};
use rhbg::game::Game;
use rhbg::rational::{parse_rational, rat};

fn main() {
    let (game, _) = Game::parse(include_str!("../fixtures/fig1.json")).unwrap();
    let vleft = game.vertex_index("vleft").unwrap();
    let grid: Vec<_> = (0..=25).map(|i| rat(i, 100)).collect();
    let tol = parse_rational("1e-12").unwrap();
    let points = sweep(&game, vleft, &grid, None, &tol, 200_000);
    print!("{}", sweep_csv(&points));
}
