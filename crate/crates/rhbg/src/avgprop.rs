//! The wealth-redistribution operator and the average property.
//!
//! `WR(x) = (1-2λ)x + λ` is applied to Player 1's budget before every bid;
//! its inverse is `WRinv(y) = (y-λ)/(1-2λ)`. A value map `f` satisfies the
//! average property when sinks carry their boundary values (0 on targets, 1
//! elsewhere) and every non-sink satisfies
//! `f(v) = clamp(WRinv((f(v⁺)+f(v⁻))/2))`, where `v⁻`/`v⁺` are neighbors
//! attaining the min/max of `f`. All checks here are exact rational equality.

use num_traits::{One, Zero};
use thiserror::Error;

use crate::game::Game;
use crate::rational::{format_rational, Rational};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AvgError {
    #[error("vertex {0} is a sink; min/max over neighbors is undefined")]
    Sink(String),
}

/// Wealth redistribution: `(1-2λ)x + λ`. Order-preserving; maps [0,1] into
/// [λ, 1-λ].
pub fn wr(x: &Rational, lambda: &Rational) -> Rational {
    (Rational::one() - lambda - lambda) * x + lambda
}

/// Inverse of [`wr`]: `(y-λ)/(1-2λ)`. The result can leave [0,1]; callers
/// clamp where the model requires it.
pub fn wr_inv(y: &Rational, lambda: &Rational) -> Rational {
    (y - lambda) / (Rational::one() - lambda - lambda)
}

pub(crate) fn clamp01(x: Rational) -> Rational {
    if x < Rational::zero() {
        Rational::zero()
    } else if x > Rational::one() {
        Rational::one()
    } else {
        x
    }
}

/// Extremal-neighbor data of one non-sink vertex under a value map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AvgTriple {
    /// Neighbor minimizing `f` (first in canonical order among ties).
    pub vminus: usize,
    /// Neighbor maximizing `f` (first in canonical order among ties).
    pub vplus: usize,
    /// `(f(v⁺) + f(v⁻)) / 2`
    pub favg: Rational,
    /// `WRinv(favg)`, the pre-WR budget matching the average.
    pub fpre: Rational,
    /// `(f(v⁺) - f(v⁻)) / 2`, the optimal bid.
    pub fdiff: Rational,
}

pub fn avg_triple(values: &[Rational], v: usize, game: &Game) -> Result<AvgTriple, AvgError> {
    let ns = game.neighbors(v);
    if ns.is_empty() {
        return Err(AvgError::Sink(game.vertex_name(v).to_string()));
    }
    let mut vminus = ns[0];
    let mut vplus = ns[0];
    for &u in &ns[1..] {
        if values[u] < values[vminus] {
            vminus = u;
        }
        if values[u] > values[vplus] {
            vplus = u;
        }
    }
    let two = Rational::from_integer(2.into());
    let favg = (&values[vplus] + &values[vminus]) / &two;
    let fdiff = (&values[vplus] - &values[vminus]) / &two;
    let fpre = wr_inv(&favg, game.lambda());
    Ok(AvgTriple {
        vminus,
        vplus,
        favg,
        fpre,
        fdiff,
    })
}

/// One simultaneous application of the average operator: sinks are forced to
/// their boundary values and every non-sink becomes `clamp(WRinv(favg))`,
/// all computed from the input map. Monotone, with range [0,1].
pub fn apply_average_operator(values: &[Rational], game: &Game) -> Vec<Rational> {
    (0..game.vertex_count())
        .map(|v| {
            if game.is_sink(v) {
                if game.is_target(v) {
                    Rational::zero()
                } else {
                    Rational::one()
                }
            } else {
                let t = avg_triple(values, v, game).expect("non-sink");
                clamp01(t.fpre)
            }
        })
        .collect()
}

/// Exact per-vertex discrepancy report for the average property.
#[derive(Debug, Clone)]
pub struct AvgReport {
    pub holds: bool,
    /// `(vertex, f(v), Op(f)(v))` wherever the two differ.
    pub violations: Vec<(usize, Rational, Rational)>,
}

impl AvgReport {
    pub fn describe(&self, game: &Game) -> String {
        if self.holds {
            return "average property: HOLDS".to_string();
        }
        let mut out = String::from("average property: FAILS\n");
        for (v, lhs, rhs) in &self.violations {
            out.push_str(&format!(
                "  {}: f = {}, operator gives {}\n",
                game.vertex_name(*v),
                format_rational(lhs),
                format_rational(rhs)
            ));
        }
        out
    }
}

/// `f` satisfies the average property iff `f = Op(f)` exactly.
pub fn check_average_property(values: &[Rational], game: &Game) -> AvgReport {
    let image = apply_average_operator(values, game);
    let violations: Vec<(usize, Rational, Rational)> = values
        .iter()
        .zip(image)
        .enumerate()
        .filter(|(_, (a, b))| *a != b)
        .map(|(v, (a, b))| (v, a.clone(), b))
        .collect();
    AvgReport {
        holds: violations.is_empty(),
        violations,
    }
}
