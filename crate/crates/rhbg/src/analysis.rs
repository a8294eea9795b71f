//! Closed-form analysis of the two-vertex cycle and λ-parameter sweeps.
//!
//! On the four-vertex cycle game (two interior vertices feeding a target and
//! a dead sink) the average property collapses to an affine map of one
//! interior value to the other. Composing the two half-steps with the
//! redistribution matrix gives a 2x2 linear system whose eigenvalues are 1
//! and `E2 = 4(2λ-1)²`; the unit-eigenvalue fixed point is the interior
//! threshold whenever it stays inside [0,1].

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::game::{Game, SolveMethod, ThresholdMap};
use crate::rational::{format_rational, rat, to_f64, Rational};
use crate::solver::{auto_method, solve_with};
use crate::strength::Strength;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("lambda {0} is outside [0, 1/2)")]
    LambdaRange(String),
}

fn check_lambda(lambda: &Rational) -> Result<(), AnalysisError> {
    if lambda.is_negative() || *lambda >= rat(1, 2) {
        return Err(AnalysisError::LambdaRange(format_rational(lambda)));
    }
    Ok(())
}

type Mat2 = [[Rational; 2]; 2];

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let cell = |i: usize, j: usize| &a[i][0] * &b[0][j] + &a[i][1] * &b[1][j];
    [[cell(0, 0), cell(0, 1)], [cell(1, 0), cell(1, 1)]]
}

/// `E2(λ) = 4(2λ-1)²`, the second eigenvalue of the cycle map. Below 1
/// exactly when λ > 1/4; the cycle then contracts toward its fixed point.
pub fn second_eigenvalue(lambda: &Rational) -> Rational {
    let s = lambda + lambda - Rational::one();
    Rational::from_integer(4.into()) * &s * &s
}

/// `x_fix(λ) = (2λ-2)/(4λ-3)`, the unit-eigenvalue fixed point.
pub fn cycle_fixed_point(lambda: &Rational) -> Rational {
    let two = Rational::from_integer(2.into());
    (lambda + lambda - &two) / (lambda * &two + lambda + lambda - Rational::from_integer(3.into()))
}

/// Forward cycle map `g(x) = 2(2λ-1)²x - (4λ²-5λ+1)`: the value one full
/// cycle downstream of an interior value `x`.
pub fn two_cycle_forward(x: &Rational, lambda: &Rational) -> Rational {
    let s = lambda + lambda - Rational::one();
    let c = Rational::from_integer(2.into()) * &s * &s;
    let d = Rational::from_integer(4.into()) * lambda * lambda
        - Rational::from_integer(5.into()) * lambda
        + Rational::one();
    c * x - d
}

/// Inverse of [`two_cycle_forward`]: recovers the upstream interior value
/// from the downstream one. Defined for every λ in [0, 1/2).
pub fn f_rev(y: &Rational, lambda: &Rational) -> Rational {
    let s = lambda + lambda - Rational::one();
    let c = Rational::from_integer(2.into()) * &s * &s;
    let d = Rational::from_integer(4.into()) * lambda * lambda
        - Rational::from_integer(5.into()) * lambda
        + Rational::one();
    (d + y) / c
}

/// The 2x2 cycle system at one λ, with its spectral data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoCycleReport {
    pub lambda: Rational,
    /// `M = B_right · W · B_left · W` acting on `(x, 1-x)` pairs.
    pub matrix: Mat2,
    /// The other eigenvalue is always 1.
    pub eigenvalue2: Rational,
    pub x_fix: Rational,
    /// `f_rev(1/2)`: the interior value feeding a half-half split downstream.
    pub f_rev_half: Rational,
}

pub fn two_cycle_report(lambda: &Rational) -> Result<TwoCycleReport, AnalysisError> {
    check_lambda(lambda)?;
    let l = lambda.clone();
    let w: Mat2 = [
        [Rational::one() - &l, l.clone()],
        [l.clone(), Rational::one() - &l],
    ];
    let b_left: Mat2 = [
        [Rational::one(), -Rational::one()],
        [Rational::zero(), Rational::from_integer(2.into())],
    ];
    let b_right: Mat2 = [
        [Rational::from_integer(2.into()), Rational::zero()],
        [-Rational::one(), Rational::one()],
    ];
    let m = mat_mul(&mat_mul(&b_right, &w), &mat_mul(&b_left, &w));
    let e2 = second_eigenvalue(lambda);
    let x_fix = cycle_fixed_point(lambda);
    // Spectral sanity: trace 1 + E2, determinant E2, and (x_fix, 1 - x_fix)
    // fixed by M.
    assert_eq!(&m[0][0] + &m[1][1], Rational::one() + &e2);
    assert_eq!(&m[0][0] * &m[1][1] - &m[0][1] * &m[1][0], e2);
    let y_fix = Rational::one() - &x_fix;
    assert_eq!(&m[0][0] * &x_fix + &m[0][1] * &y_fix, x_fix);
    assert_eq!(&m[1][0] * &x_fix + &m[1][1] * &y_fix, y_fix);
    let f_rev_half = f_rev(&rat(1, 2), lambda);
    Ok(TwoCycleReport {
        lambda: lambda.clone(),
        matrix: m,
        eigenvalue2: e2,
        x_fix,
        f_rev_half,
    })
}

/// Closed-form threshold of the cycle entry vertex and its strength class:
/// `x_fix` and one-strong below λ = 1/4, threshold 1 from λ = 1/4 on (still
/// one-strong exactly at 1/4, two-strong beyond).
pub fn tau_closed_form(lambda: &Rational) -> Result<(Rational, Strength), AnalysisError> {
    check_lambda(lambda)?;
    let quarter = rat(1, 4);
    Ok(match lambda.cmp(&quarter) {
        std::cmp::Ordering::Less => (cycle_fixed_point(lambda), Strength::OneStrong),
        std::cmp::Ordering::Equal => (Rational::one(), Strength::OneStrong),
        std::cmp::Ordering::Greater => (Rational::one(), Strength::TwoStrong),
    })
}

/// One λ sample of a sweep. `threshold` is absent when the solve failed;
/// `note` carries the reason.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub lambda: Rational,
    pub threshold: Option<Rational>,
    pub residual: Option<Rational>,
    pub method: SolveMethod,
    pub note: Option<String>,
}

/// Re-solves the game at each λ in `grid` (in parallel) and reads off the
/// threshold of one vertex. `method = None` picks per-λ automatically.
pub fn sweep(
    game: &Game,
    vertex: usize,
    grid: &[Rational],
    method: Option<SolveMethod>,
    tol: &Rational,
    max_iters: usize,
) -> Vec<SweepPoint> {
    grid.par_iter()
        .map(|lambda| {
            let g = match game.with_lambda(lambda.clone()) {
                Ok(g) => g,
                Err(e) => {
                    return SweepPoint {
                        lambda: lambda.clone(),
                        threshold: None,
                        residual: None,
                        method: method.unwrap_or(SolveMethod::Iterate),
                        note: Some(e.to_string()),
                    }
                }
            };
            let m = method.unwrap_or_else(|| auto_method(&g));
            match solve_with(&g, m, tol, max_iters) {
                Ok(th) => SweepPoint {
                    lambda: lambda.clone(),
                    threshold: Some(th.values[vertex].clone()),
                    residual: Some(th.residual),
                    method: m,
                    note: None,
                },
                Err(e) => SweepPoint {
                    lambda: lambda.clone(),
                    threshold: None,
                    residual: None,
                    method: m,
                    note: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// CSV rendering with both exact and decimal columns.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out =
        String::from("lambda,lambda_decimal,threshold,threshold_decimal,residual,method,note\n");
    for p in points {
        let th = p.threshold.as_ref();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            format_rational(&p.lambda),
            to_f64(&p.lambda),
            th.map(format_rational).unwrap_or_default(),
            th.map(|x| to_f64(x).to_string()).unwrap_or_default(),
            p.residual.as_ref().map(format_rational).unwrap_or_default(),
            p.method,
            p.note.clone().unwrap_or_default(),
        ));
    }
    out
}

/// Convenience wrapper pairing a solved map with the swept vertex.
pub fn threshold_at(th: &ThresholdMap, vertex: usize) -> &Rational {
    &th.values[vertex]
}
