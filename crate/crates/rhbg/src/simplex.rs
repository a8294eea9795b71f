//! Exact rational linear programming.
//!
//! A small dense two-phase simplex over arbitrary-precision rationals with
//! Bland's anti-cycling pivot rule. Variables are free (internally split into
//! nonnegative pairs); constraints are exact-rational affine relations. This
//! backs the regime enumeration oracle and the exhaustive MILP solve, where
//! floating-point LP would wreck the knife-edge comparisons downstream.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub terms: Vec<(usize, Rational)>,
    pub rel: Relation,
    pub rhs: Rational,
}

/// Affine maximization problem over named real variables.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    var_names: Vec<String>,
    var_index: HashMap<String, usize>,
    pub constraints: Vec<Constraint>,
    /// Coefficients of the objective to maximize, by variable id.
    pub objective: Vec<(usize, Rational)>,
}

impl LinearProgram {
    pub fn new() -> LinearProgram {
        LinearProgram::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> usize {
        let name = name.into();
        assert!(
            !self.var_index.contains_key(&name),
            "duplicate LP variable {name}"
        );
        let id = self.var_names.len();
        self.var_index.insert(name.clone(), id);
        self.var_names.push(name);
        id
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.var_index.get(name).copied()
    }

    pub fn var_name(&self, id: usize) -> &str {
        &self.var_names[id]
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn constrain(&mut self, terms: Vec<(usize, Rational)>, rel: Relation, rhs: Rational) {
        for &(v, _) in &terms {
            assert!(v < self.var_names.len(), "undeclared LP variable id {v}");
        }
        self.constraints.push(Constraint { terms, rel, rhs });
    }

    pub fn maximize(&mut self, terms: Vec<(usize, Rational)>) {
        self.objective = terms;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal {
        /// Value per declared variable, in declaration order.
        point: Vec<Rational>,
        value: Rational,
    },
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// rows[i] has one entry per column plus the rhs in the last slot.
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let inv = {
            let p = &self.rows[row][col];
            Rational::one() / p
        };
        for x in self.rows[row].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row || r[col].is_zero() {
                continue;
            }
            let factor = r[col].clone();
            for (x, p) in r.iter_mut().zip(&pivot_row) {
                *x -= &factor * p;
            }
        }
        self.basis[row] = col;
    }

    /// Bland's rule maximization of `cost` over the current feasible basis.
    /// Columns in `banned` never enter. Returns false on unboundedness.
    fn optimize(&mut self, cost: &[Rational], banned: &[bool]) -> bool {
        loop {
            let reduced = |j: usize| -> Rational {
                let mut r = cost[j].clone();
                for (i, row) in self.rows.iter().enumerate() {
                    if !cost[self.basis[i]].is_zero() && !row[j].is_zero() {
                        r -= &cost[self.basis[i]] * &row[j];
                    }
                }
                r
            };
            let mut entering = None;
            for j in 0..self.ncols {
                if banned[j] || self.basis.contains(&j) {
                    continue;
                }
                if reduced(j).is_positive() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(j) = entering else {
                return true;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[j].is_positive() {
                    continue;
                }
                let ratio = &row[self.ncols] / &row[j];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((i, _)) = leave else {
                return false;
            };
            self.pivot(i, j);
        }
    }
}

/// Exact optimum of `lp` via two-phase simplex.
pub fn simplex_max(lp: &LinearProgram) -> LpOutcome {
    let nv = lp.num_vars();
    let m = lp.constraints.len();
    // Columns: positive/negative part per variable, then slacks, then
    // one artificial per row; rhs lives past the last column.
    let mut nslack = 0;
    for c in &lp.constraints {
        if c.rel != Relation::Eq {
            nslack += 1;
        }
    }
    let ncols = 2 * nv + nslack + m;
    let slack0 = 2 * nv;
    let art0 = 2 * nv + nslack;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut next_slack = slack0;
    for (i, c) in lp.constraints.iter().enumerate() {
        let mut row = vec![Rational::zero(); ncols + 1];
        for (v, coeff) in &c.terms {
            row[2 * v] += coeff;
            row[2 * v + 1] -= coeff;
        }
        match c.rel {
            Relation::Le => {
                row[next_slack] = Rational::one();
                next_slack += 1;
            }
            Relation::Ge => {
                row[next_slack] = -Rational::one();
                next_slack += 1;
            }
            Relation::Eq => {}
        }
        row[ncols] = c.rhs.clone();
        if row[ncols].is_negative() {
            for x in row.iter_mut() {
                *x = -x.clone();
            }
        }
        row[art0 + i] = Rational::one();
        basis.push(art0 + i);
        rows.push(row);
    }

    let mut t = Tableau { rows, basis, ncols };

    // Phase 1: drive the artificials to zero.
    let mut cost1 = vec![Rational::zero(); ncols];
    for j in art0..ncols {
        cost1[j] = -Rational::one();
    }
    let banned1 = vec![false; ncols];
    let ok = t.optimize(&cost1, &banned1);
    debug_assert!(ok, "phase 1 is bounded by construction");
    let infeasibility: Rational = (0..m)
        .filter(|&i| t.basis[i] >= art0)
        .map(|i| t.rows[i][ncols].clone())
        .sum();
    if !infeasibility.is_zero() {
        return LpOutcome::Infeasible;
    }
    // Pivot out artificials stuck in the basis at level zero.
    for i in 0..m {
        if t.basis[i] < art0 {
            continue;
        }
        if let Some(j) = (0..art0).find(|&j| !t.rows[i][j].is_zero()) {
            t.pivot(i, j);
        }
        // Otherwise the row is redundant (all structural entries zero).
    }

    // Phase 2: the real objective, artificials banned.
    let mut cost2 = vec![Rational::zero(); ncols];
    for (v, coeff) in &lp.objective {
        cost2[2 * v] += coeff;
        cost2[2 * v + 1] -= coeff;
    }
    let mut banned2 = vec![false; ncols];
    for b in banned2.iter_mut().skip(art0) {
        *b = true;
    }
    if !t.optimize(&cost2, &banned2) {
        return LpOutcome::Unbounded;
    }

    let mut col_value = vec![Rational::zero(); ncols];
    for (i, &b) in t.basis.iter().enumerate() {
        col_value[b] = t.rows[i][ncols].clone();
    }
    let point: Vec<Rational> = (0..nv)
        .map(|v| &col_value[2 * v] - &col_value[2 * v + 1])
        .collect();
    let value = lp
        .objective
        .iter()
        .map(|(v, c)| c * &point[*v])
        .sum();
    LpOutcome::Optimal { point, value }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn one_var_box(lo: Rational, hi: Rational) -> LinearProgram {
        let mut lp = LinearProgram::new();
        let t = lp.add_var("t");
        lp.constrain(vec![(t, Rational::one())], Relation::Ge, lo);
        lp.constrain(vec![(t, Rational::one())], Relation::Le, hi);
        lp.maximize(vec![(t, Rational::one())]);
        lp
    }

    #[test]
    fn maximizes_over_a_box() {
        let lp = one_var_box(rat(1, 2), Rational::one());
        match simplex_max(&lp) {
            LpOutcome::Optimal { point, value } => {
                assert_eq!(point[0], Rational::one());
                assert_eq!(value, Rational::one());
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn detects_empty_polytope() {
        let lp = one_var_box(Rational::one(), Rational::zero());
        assert_eq!(simplex_max(&lp), LpOutcome::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        let mut lp = LinearProgram::new();
        let t = lp.add_var("t");
        lp.constrain(vec![(t, Rational::one())], Relation::Ge, Rational::zero());
        lp.maximize(vec![(t, Rational::one())]);
        assert_eq!(simplex_max(&lp), LpOutcome::Unbounded);
    }

    #[test]
    fn fig5_in_range_regime_piece() {
        // Identity equation at v0 of the non-uniqueness example: the equation
        // is vacuous and the box 1/2 <= f(v0) <= 1 drives the optimum to 1.
        let mut lp = LinearProgram::new();
        let f0 = lp.add_var("f_v0");
        lp.constrain(
            vec![(f0, Rational::zero())],
            Relation::Eq,
            Rational::zero(),
        );
        lp.constrain(vec![(f0, Rational::one())], Relation::Ge, rat(1, 2));
        lp.constrain(vec![(f0, Rational::one())], Relation::Le, Rational::one());
        lp.maximize(vec![(f0, Rational::one())]);
        match simplex_max(&lp) {
            LpOutcome::Optimal { point, value } => {
                assert_eq!(point[0], Rational::one());
                assert_eq!(value, Rational::one());
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn equality_system_with_negative_solution() {
        // x + y = 1, x - y = 3  ->  x = 2, y = -1; maximize y.
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x");
        let y = lp.add_var("y");
        lp.constrain(
            vec![(x, Rational::one()), (y, Rational::one())],
            Relation::Eq,
            Rational::one(),
        );
        lp.constrain(
            vec![(x, Rational::one()), (y, -Rational::one())],
            Relation::Eq,
            rat(3, 1),
        );
        lp.maximize(vec![(y, Rational::one())]);
        match simplex_max(&lp) {
            LpOutcome::Optimal { point, value } => {
                assert_eq!(point, vec![rat(2, 1), rat(-1, 1)]);
                assert_eq!(value, rat(-1, 1));
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_and_redundant_rows() {
        // Redundant duplicated equality plus a degenerate vertex.
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x");
        let y = lp.add_var("y");
        lp.constrain(
            vec![(x, Rational::one()), (y, Rational::one())],
            Relation::Eq,
            Rational::one(),
        );
        lp.constrain(
            vec![(x, rat(2, 1)), (y, rat(2, 1))],
            Relation::Eq,
            rat(2, 1),
        );
        lp.constrain(vec![(x, Rational::one())], Relation::Ge, Rational::zero());
        lp.constrain(vec![(y, Rational::one())], Relation::Ge, Rational::zero());
        lp.maximize(vec![(x, rat(3, 1)), (y, Rational::one())]);
        match simplex_max(&lp) {
            LpOutcome::Optimal { point, value } => {
                assert_eq!(point, vec![Rational::one(), Rational::zero()]);
                assert_eq!(value, rat(3, 1));
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }
}
