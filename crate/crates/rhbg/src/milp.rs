//! Big-M mixed-integer encoding of the average property.
//!
//! Per non-sink vertex the model carries the extremum auxiliaries `vm` (min
//! over neighbor values) and `vp` (max), a clamp intermediate
//! `vc = min(wr_inv((vm+vp)/2), 1)`, one-hot selector binaries for each
//! extremum, and one binary per clamp stage. Maximizing `Σ f_v` over the
//! model recovers the threshold function. The file exporter writes standard
//! LP format for external solvers; [`solve_milp_exhaustive`] solves the model
//! internally with exact arithmetic as an independent check.

use num_traits::{One, Signed, Zero};

use crate::avgprop::{check_average_property, wr_inv};
use crate::game::Game;
use crate::rational::{to_f64, Rational};
use crate::simplex::{simplex_max, Constraint, LinearProgram, LpOutcome, Relation};
use crate::solver::{regime_search, Clamp, RegimeChoice, SolveError};

/// Variable ids of one non-sink vertex's gadget block.
#[derive(Debug, Clone)]
pub struct Gadget {
    pub v: usize,
    pub vm: usize,
    pub vp: usize,
    pub vc: usize,
    /// One-hot min selectors, aligned with the neighbor list.
    pub bm: Vec<usize>,
    /// One-hot max selectors.
    pub bp: Vec<usize>,
    /// 1 selects `vc = wr_inv(favg)`, 0 selects `vc = 1`.
    pub bc: usize,
    /// 1 selects `f = 0`, 0 selects `f = vc`.
    pub bz: usize,
}

#[derive(Debug, Clone)]
pub struct MilpModel {
    /// Continuous relaxation rows and the objective; binaries appear as
    /// ordinary variables here and are restricted by `binaries`.
    pub lp: LinearProgram,
    /// Simple variable bounds, kept apart from the rows for the exporter.
    pub bounds: Vec<(usize, Rational, Rational)>,
    pub binaries: Vec<usize>,
    pub big_m: Rational,
    pub gadgets: Vec<Gadget>,
    /// `f_v` variable ids in canonical vertex order.
    pub f_vars: Vec<usize>,
    game: Game,
}

/// Builds the model: sink equalities, one-hot min/max gadgets, two-stage
/// clamp gadgets, objective `Σ f_v`, with `M = wr_inv(1)`.
pub fn build_milp(game: &Game) -> MilpModel {
    let lambda = game.lambda();
    let big_m = wr_inv(&Rational::one(), lambda);
    let m2 = &big_m + &big_m;
    // wr_inv((vm+vp)/2) = alpha (vm + vp) - beta
    let alpha = Rational::one() / (Rational::from_integer(2.into()) * (Rational::one() - lambda - lambda));
    let beta = lambda / (Rational::one() - lambda - lambda);

    let mut lp = LinearProgram::new();
    let f_vars: Vec<usize> = (0..game.vertex_count())
        .map(|v| lp.add_var(format!("f_{}", game.vertex_name(v))))
        .collect();
    let mut bounds = Vec::new();
    let mut binaries = Vec::new();
    let mut gadgets = Vec::new();

    for v in 0..game.vertex_count() {
        bounds.push((f_vars[v], Rational::zero(), Rational::one()));
        if game.is_sink(v) {
            let b = if game.is_target(v) {
                Rational::zero()
            } else {
                Rational::one()
            };
            lp.constrain(vec![(f_vars[v], Rational::one())], Relation::Eq, b);
            continue;
        }
        let name = game.vertex_name(v).to_string();
        let vm = lp.add_var(format!("vm_{name}"));
        let vp = lp.add_var(format!("vp_{name}"));
        let vc = lp.add_var(format!("vc_{name}"));
        bounds.push((vm, Rational::zero(), Rational::one()));
        bounds.push((vp, Rational::zero(), Rational::one()));
        bounds.push((vc, -m2.clone(), Rational::one()));
        let ns = game.neighbors(v).to_vec();
        let bm: Vec<usize> = (0..ns.len())
            .map(|k| lp.add_var(format!("bm_{name}_{k}")))
            .collect();
        let bp: Vec<usize> = (0..ns.len())
            .map(|k| lp.add_var(format!("bp_{name}_{k}")))
            .collect();
        let bc = lp.add_var(format!("bc_{name}"));
        let bz = lp.add_var(format!("bz_{name}"));
        binaries.extend(bm.iter().chain(&bp).chain([&bc, &bz]).copied());

        for (k, &u) in ns.iter().enumerate() {
            // vm <= f_u; vm >= f_u - 2M(1 - bm_k)
            lp.constrain(
                vec![(vm, Rational::one()), (f_vars[u], -Rational::one())],
                Relation::Le,
                Rational::zero(),
            );
            lp.constrain(
                vec![
                    (vm, Rational::one()),
                    (f_vars[u], -Rational::one()),
                    (bm[k], -m2.clone()),
                ],
                Relation::Ge,
                -m2.clone(),
            );
            // vp >= f_u; vp <= f_u + 2M(1 - bp_k)
            lp.constrain(
                vec![(vp, Rational::one()), (f_vars[u], -Rational::one())],
                Relation::Ge,
                Rational::zero(),
            );
            lp.constrain(
                vec![
                    (vp, Rational::one()),
                    (f_vars[u], -Rational::one()),
                    (bp[k], m2.clone()),
                ],
                Relation::Le,
                m2.clone(),
            );
        }
        lp.constrain(
            bm.iter().map(|&b| (b, Rational::one())).collect(),
            Relation::Eq,
            Rational::one(),
        );
        lp.constrain(
            bp.iter().map(|&b| (b, Rational::one())).collect(),
            Relation::Eq,
            Rational::one(),
        );
        // vc = min(alpha (vm+vp) - beta, 1), selected by bc.
        lp.constrain(
            vec![(vc, Rational::one()), (vm, -alpha.clone()), (vp, -alpha.clone())],
            Relation::Le,
            -beta.clone(),
        );
        lp.constrain(vec![(vc, Rational::one())], Relation::Le, Rational::one());
        lp.constrain(
            vec![
                (vc, Rational::one()),
                (vm, -alpha.clone()),
                (vp, -alpha.clone()),
                (bc, -m2.clone()),
            ],
            Relation::Ge,
            -&beta - &m2,
        );
        lp.constrain(
            vec![(vc, Rational::one()), (bc, m2.clone())],
            Relation::Ge,
            Rational::one(),
        );
        // f_v = max(vc, 0), selected by bz; the lower bound 0 is in Bounds.
        lp.constrain(
            vec![(f_vars[v], Rational::one()), (vc, -Rational::one())],
            Relation::Ge,
            Rational::zero(),
        );
        lp.constrain(
            vec![
                (f_vars[v], Rational::one()),
                (vc, -Rational::one()),
                (bz, -m2.clone()),
            ],
            Relation::Le,
            Rational::zero(),
        );
        lp.constrain(
            vec![(f_vars[v], Rational::one()), (bz, m2.clone())],
            Relation::Le,
            m2.clone(),
        );
        gadgets.push(Gadget {
            v,
            vm,
            vp,
            vc,
            bm,
            bp,
            bc,
            bz,
        });
    }
    lp.maximize(f_vars.iter().map(|&id| (id, Rational::one())).collect());
    MilpModel {
        lp,
        bounds,
        binaries,
        big_m,
        gadgets,
        f_vars,
        game: game.clone(),
    }
}

fn coef(r: &Rational) -> String {
    format!("{}", to_f64(r))
}

fn render_terms(lp: &LinearProgram, terms: &[(usize, Rational)]) -> String {
    let mut out = String::new();
    for (i, (var, c)) in terms.iter().enumerate() {
        let mag = c.abs();
        let sign = if c.is_negative() { "-" } else { "+" };
        if i == 0 {
            if c.is_negative() {
                out.push_str("- ");
            }
        } else {
            out.push_str(&format!(" {sign} "));
        }
        if !mag.is_one() {
            out.push_str(&coef(&mag));
            out.push(' ');
        }
        out.push_str(lp.var_name(*var));
    }
    out
}

/// Standard LP-format text (Maximize / Subject To / Bounds / Binary / End).
/// Coefficients are decimal, so the file is approximate whenever λ has no
/// finite decimal expansion; the internal solve stays exact.
pub fn export_lp(model: &MilpModel) -> String {
    let lp = &model.lp;
    let mut out = String::from("Maximize\n obj: ");
    out.push_str(&render_terms(lp, &lp.objective));
    out.push_str("\nSubject To\n");
    for (i, Constraint { terms, rel, rhs }) in lp.constraints.iter().enumerate() {
        let op = match rel {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        };
        out.push_str(&format!(
            " c{}: {} {} {}\n",
            i + 1,
            render_terms(lp, terms),
            op,
            coef(rhs)
        ));
    }
    out.push_str("Bounds\n");
    for (var, lo, hi) in &model.bounds {
        if lo.is_zero() {
            out.push_str(&format!(" {} <= {}\n", lp.var_name(*var), coef(hi)));
        } else {
            out.push_str(&format!(
                " {} <= {} <= {}\n",
                coef(lo),
                lp.var_name(*var),
                coef(hi)
            ));
        }
    }
    out.push_str("Binary\n");
    for &b in &model.binaries {
        out.push_str(&format!(" {}\n", lp.var_name(b)));
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone)]
pub struct MilpSolution {
    /// Projection onto the `f_v` variables, canonical vertex order.
    pub f: Vec<Rational>,
    pub objective: Rational,
    /// Full assignment over all model variables.
    pub point: Vec<Rational>,
}

/// Exhaustive exact solve: walk the structured binary assignments (one-hot
/// selectors and clamp stages), solve each induced LP with the exact simplex,
/// and keep the best feasible one. Fixing a binary substitutes its value into
/// every row it appears in, so the leaf LPs carry only continuous variables.
pub fn solve_milp_exhaustive(model: &MilpModel) -> Result<MilpSolution, SolveError> {
    let mut is_binary = vec![false; model.lp.num_vars()];
    for &b in &model.binaries {
        is_binary[b] = true;
    }
    // Continuous-only template sharing the original variable names.
    let mut reduced = LinearProgram::new();
    let mut remap: Vec<Option<usize>> = Vec::with_capacity(model.lp.num_vars());
    for old in 0..model.lp.num_vars() {
        remap.push(if is_binary[old] {
            None
        } else {
            Some(reduced.add_var(model.lp.var_name(old).to_string()))
        });
    }
    // Rows split into their continuous part and the binary terms to fold
    // into the right-hand side once the assignment is known.
    struct SplitRow {
        terms: Vec<(usize, Rational)>,
        rel: Relation,
        rhs: Rational,
        bin_terms: Vec<(usize, Rational)>,
        /// Bound rows anchor the redundancy filter and are never dropped.
        from_bounds: bool,
    }
    let mut rows: Vec<SplitRow> = Vec::new();
    for Constraint { terms, rel, rhs } in &model.lp.constraints {
        let (bin_terms, cont): (Vec<_>, Vec<_>) =
            terms.iter().cloned().partition(|(v, _)| is_binary[*v]);
        rows.push(SplitRow {
            terms: cont.into_iter().map(|(v, c)| (remap[v].unwrap(), c)).collect(),
            rel: *rel,
            rhs: rhs.clone(),
            bin_terms,
            from_bounds: false,
        });
    }
    let mut var_bounds = vec![(Rational::zero(), Rational::one()); reduced.num_vars()];
    for (var, lo, hi) in &model.bounds {
        let v = remap[*var].expect("bounds cover continuous variables only");
        var_bounds[v] = (lo.clone(), hi.clone());
        rows.push(SplitRow {
            terms: vec![(v, Rational::one())],
            rel: Relation::Ge,
            rhs: lo.clone(),
            bin_terms: Vec::new(),
            from_bounds: true,
        });
        rows.push(SplitRow {
            terms: vec![(v, Rational::one())],
            rel: Relation::Le,
            rhs: hi.clone(),
            bin_terms: Vec::new(),
            from_bounds: true,
        });
    }
    // Extreme value of a row's left side over the variable box; rows the box
    // already satisfies (typically released big-M rows) are dropped at leaves.
    let row_extreme = |terms: &[(usize, Rational)], maximize: bool| -> Rational {
        terms
            .iter()
            .map(|(v, c)| {
                let (lo, hi) = &var_bounds[*v];
                if c.is_positive() == maximize {
                    c * hi
                } else {
                    c * lo
                }
            })
            .sum()
    };
    reduced.maximize(
        model
            .lp
            .objective
            .iter()
            .map(|(v, c)| (remap[*v].expect("objective is continuous"), c.clone()))
            .collect(),
    );
    let best = regime_search(&model.game, |choices: &[RegimeChoice]| {
        let mut bin_val = vec![Rational::zero(); model.lp.num_vars()];
        for g in &model.gadgets {
            let ch = choices.iter().find(|c| c.v == g.v).expect("choice per gadget");
            let ns = model.game.neighbors(g.v);
            let mk = ns.iter().position(|&u| u == ch.vminus).unwrap();
            let xk = ns.iter().position(|&u| u == ch.vplus).unwrap();
            bin_val[g.bm[mk]] = Rational::one();
            bin_val[g.bp[xk]] = Rational::one();
            let (bc, bz) = match ch.clamp {
                Clamp::Mid => (Rational::one(), Rational::zero()),
                Clamp::Hi => (Rational::zero(), Rational::zero()),
                Clamp::Lo => (Rational::one(), Rational::one()),
            };
            bin_val[g.bc] = bc;
            bin_val[g.bz] = bz;
        }
        let mut lp = reduced.clone();
        for row in &rows {
            let mut rhs = row.rhs.clone();
            for (b, c) in &row.bin_terms {
                rhs -= c * &bin_val[*b];
            }
            if row.terms.is_empty() {
                // Pure binary row (e.g. a one-hot sum) reduced to a constant.
                let ok = match row.rel {
                    Relation::Le => !rhs.is_negative(),
                    Relation::Ge => !rhs.is_positive(),
                    Relation::Eq => rhs.is_zero(),
                };
                if ok {
                    continue;
                }
                return None;
            }
            if !row.from_bounds {
                let redundant = match row.rel {
                    Relation::Le => row_extreme(&row.terms, true) <= rhs,
                    Relation::Ge => row_extreme(&row.terms, false) >= rhs,
                    Relation::Eq => false,
                };
                if redundant {
                    continue;
                }
            }
            lp.constrain(row.terms.clone(), row.rel, rhs);
        }
        match simplex_max(&lp) {
            LpOutcome::Optimal { point, value } => {
                // Re-inflate to the full variable space.
                let mut full = bin_val.clone();
                for (old, new) in remap.iter().enumerate() {
                    if let Some(new) = new {
                        full[old] = point[*new].clone();
                    }
                }
                Some((value, full))
            }
            _ => None,
        }
    })?;
    let (objective, point) = best.ok_or_else(|| {
        SolveError::Internal("no binary assignment is feasible".to_string())
    })?;
    let f: Vec<Rational> = model.f_vars.iter().map(|&id| point[id].clone()).collect();
    if !check_average_property(&f, &model.game).holds {
        return Err(SolveError::Internal(
            "optimal assignment fails the average property".to_string(),
        ));
    }
    Ok(MilpSolution {
        f,
        objective,
        point,
    })
}

/// Big-M hygiene: in a valid optimum no auxiliary magnitude reaches `2M`.
pub fn audit_big_m(model: &MilpModel, point: &[Rational]) -> bool {
    let m2 = &model.big_m + &model.big_m;
    model.gadgets.iter().all(|g| {
        [g.vm, g.vp, g.vc]
            .iter()
            .all(|&var| point[var].abs() < m2)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use crate::solver::tests::{fig1, fig4, fig5};

    #[test]
    fn fig5_model_shape() {
        let model = build_milp(&fig5());
        assert_eq!(model.f_vars.len(), 4);
        assert_eq!(model.binaries.len(), 12);
        assert_eq!(model.big_m, rat(3, 2));
    }

    #[test]
    fn fig1_big_m() {
        assert_eq!(build_milp(&fig1("1/8")).big_m, rat(7, 6));
    }

    #[test]
    fn two_sinks_only() {
        let (g, _) = Game::parse(
            r#"{"vertices":["t","s"],"edges":[],"targets":["t"],"lambda":"1/8"}"#,
        )
        .unwrap();
        let model = build_milp(&g);
        assert!(model.binaries.is_empty());
        assert_eq!(model.lp.constraints.len(), 2);
        let sol = solve_milp_exhaustive(&model).unwrap();
        assert_eq!(sol.f, vec![Rational::zero(), Rational::one()]);
    }

    #[test]
    fn fig5_solution_and_objective() {
        let model = build_milp(&fig5());
        let sol = solve_milp_exhaustive(&model).unwrap();
        assert_eq!(
            sol.f,
            vec![Rational::one(), rat(1, 2), Rational::one(), Rational::zero()]
        );
        assert_eq!(sol.objective, rat(5, 2));
        assert!(audit_big_m(&model, &sol.point));
    }

    #[test]
    fn fig4_objective() {
        let sol = solve_milp_exhaustive(&build_milp(&fig4())).unwrap();
        assert_eq!(sol.objective, rat(43, 8));
    }

    #[test]
    fn fig1_lambda_zero() {
        let sol = solve_milp_exhaustive(&build_milp(&fig1("0"))).unwrap();
        assert_eq!(sol.f, vec![rat(2, 3), Rational::one(), rat(1, 3), Rational::zero()]);
    }

    #[test]
    fn export_objective_line_and_counts() {
        let model = build_milp(&fig5());
        let text = export_lp(&model);
        assert!(text.contains("obj: f_v0 + f_v1 + f_v2 + f_v3"));
        // Structural round-trip: one named row per model constraint.
        let body: Vec<&str> = text
            .split("Subject To\n")
            .nth(1)
            .unwrap()
            .split("Bounds\n")
            .next()
            .unwrap()
            .lines()
            .collect();
        let rows = body.iter().filter(|l| l.contains(':')).count();
        assert_eq!(rows, model.lp.constraints.len());
        assert!(text.trim_end().ends_with("End"));
    }

    #[test]
    fn clamp_binaries_cannot_pick_one_and_zero_together() {
        // bc = 0 pins vc to 1 while bz = 1 needs vc <= 0.
        let model = build_milp(&fig5());
        let mut lp = model.lp.clone();
        for (var, lo, hi) in &model.bounds {
            lp.constrain(vec![(*var, Rational::one())], Relation::Ge, lo.clone());
            lp.constrain(vec![(*var, Rational::one())], Relation::Le, hi.clone());
        }
        let g = &model.gadgets[1];
        lp.constrain(vec![(g.bc, Rational::one())], Relation::Eq, Rational::zero());
        lp.constrain(vec![(g.bz, Rational::one())], Relation::Eq, Rational::one());
        assert_eq!(simplex_max(&lp), LpOutcome::Infeasible);
    }
}
