//! Spectral view of the two-vertex cycle: the threshold is the fixed point
//! of a 2x2 linear system and jumps discontinuously to 1 at lambda = 1/4.

use rhbg::analysis::{tau_closed_form, two_cycle_report};
use rhbg::rational::{format_rational, rat, to_f64};

fn main() {
    for lam in [rat(0, 1), rat(1, 8), rat(1, 5), rat(249, 1000), rat(1, 4), rat(3, 8)] {
        let r = two_cycle_report(&lam).unwrap();
        let (tau, strength) = tau_closed_form(&lam).unwrap();
        println!(
            "lambda {}: eigenvalues 1 and {}, x_fix {} ({}), tau {} [{}]",
            format_rational(&lam),
            format_rational(&r.eigenvalue2),
            format_rational(&r.x_fix),
            to_f64(&r.x_fix),
            format_rational(&tau),
            strength
        );
    }
}
