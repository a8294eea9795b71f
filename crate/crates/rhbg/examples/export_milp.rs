//! Writes the big-M mixed-integer model in LP format and solves it
//! internally as a sanity check.

use rhbg::milp::{audit_big_m, build_milp, export_lp, solve_milp_exhaustive};
use rhbg::game::Game;
use rhbg::rational::format_rational;

fn main() {
    let (game, _) = Game::parse(include_str!("../fixtures/fig5.json")).unwrap();
    let model = build_milp(&game);
    print!("{}", export_lp(&model));
    let sol = solve_milp_exhaustive(&model).unwrap();
    eprintln!(
        "internal solve: objective {}, big-M audit {}",
        format_rational(&sol.objective),
        if audit_big_m(&model, &sol.point) { "clean" } else { "saturated" }
    );
}
