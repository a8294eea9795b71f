//! Threshold computation by three mutually checking methods.
//!
//! * [`solve_dag`]: exact back-propagation in reverse topological order; the
//!   average property has a unique solution on acyclic games.
//! * [`solve_iterate`]: value iteration from above. Sweep `n` produces exactly
//!   the depth-`n` unravelling thresholds, a nonincreasing overestimate that
//!   converges to the threshold function.
//! * [`solve_enumerate`]: exact oracle. The threshold function is the
//!   pointwise maximum over all solutions of the average property, and the
//!   maximizer of `Σ f(v)` among them; enumerate the extremum/clamp regimes,
//!   maximize over each affine piece with the exact simplex, keep the best.

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::avgprop::{apply_average_operator, check_average_property, clamp01};
use crate::game::{Game, SolveMethod, ThresholdMap};
use crate::rational::{bit_size, ceil_to_grid, Rational};
use crate::simplex::{simplex_max, LinearProgram, LpOutcome, Relation};

/// Iterates whose numerator+denominator exceed this many bits get snapped up
/// to the dyadic grid. Snapping up preserves both the overestimate and the
/// monotone descent; it never triggers on small fixtures, so exact fixed
/// points stay exact.
const ROUND_BIT_LIMIT: u64 = 512;
const GRID_BITS: u32 = 128;

/// Cap on the nominal product of per-vertex regime counts.
const REGIME_GUARD: f64 = 1e9;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("graph contains a cycle; the dag method requires an acyclic game")]
    CyclicGraph,
    #[error("tolerance must be positive")]
    InvalidTolerance,
    #[error("game too large for exact enumeration ({0:.3e} regime combinations)")]
    SizeGuard(f64),
    #[error("internal invariant violation: {0}")]
    Internal(String),
}

fn boundary(game: &Game, v: usize) -> Rational {
    if game.is_target(v) {
        Rational::zero()
    } else {
        Rational::one()
    }
}

/// Exact thresholds of an acyclic game, bottom-up.
pub fn solve_dag(game: &Game) -> Result<ThresholdMap, SolveError> {
    let order = game.topological_order().ok_or(SolveError::CyclicGraph)?;
    let mut values = vec![Rational::zero(); game.vertex_count()];
    for &v in order.iter().rev() {
        values[v] = if game.is_sink(v) {
            boundary(game, v)
        } else {
            let t = crate::avgprop::avg_triple(&values, v, game).expect("non-sink");
            clamp01(t.fpre)
        };
    }
    if !check_average_property(&values, game).holds {
        return Err(SolveError::Internal(
            "dag solution fails the average property".to_string(),
        ));
    }
    Ok(ThresholdMap::exact(values, SolveMethod::Dag))
}

/// Progress of one value-iteration run.
#[derive(Debug, Clone)]
pub struct IterationState {
    /// Current iterate: the depth-`iteration` unravelling thresholds
    /// (possibly snapped up to the dyadic grid on large denominators).
    pub values: Vec<Rational>,
    pub iteration: usize,
    /// Sup-norm of the last sweep's change.
    pub max_delta: Rational,
}

/// Value iteration from `f_0 = 0` on targets, `1` elsewhere. Stops at an
/// exact fixed point (residual 0), when the sweep delta drops below `tol`,
/// or when the iteration budget runs out; the caller sees which via the
/// returned state and the map's residual.
pub fn solve_iterate(
    game: &Game,
    tol: &Rational,
    max_iters: usize,
) -> Result<(ThresholdMap, IterationState), SolveError> {
    if !tol.is_positive() {
        return Err(SolveError::InvalidTolerance);
    }
    let mut f: Vec<Rational> = (0..game.vertex_count())
        .map(|v| {
            if game.is_target(v) {
                Rational::zero()
            } else {
                Rational::one()
            }
        })
        .collect();
    let mut state = IterationState {
        values: f.clone(),
        iteration: 0,
        max_delta: Rational::one(),
    };
    for n in 1..=max_iters {
        let mut next = apply_average_operator(&f, game);
        if next.iter().any(|x| bit_size(x) > ROUND_BIT_LIMIT) {
            for x in next.iter_mut() {
                *x = ceil_to_grid(x, GRID_BITS);
            }
        }
        // Snapping up can only overshoot the previous iterate by a grid
        // step; taking the min keeps the sequence nonincreasing.
        let mut max_delta = Rational::zero();
        for (x, prev) in next.iter_mut().zip(&f) {
            if *x > *prev {
                *x = prev.clone();
            }
            let d = prev - &*x;
            debug_assert!(!d.is_negative());
            if d > max_delta {
                max_delta = d;
            }
        }
        f = next;
        state = IterationState {
            values: f.clone(),
            iteration: n,
            max_delta: max_delta.clone(),
        };
        if max_delta.is_zero() || max_delta < *tol {
            break;
        }
    }
    let residual = if state.max_delta.is_zero() {
        Rational::zero()
    } else {
        state.max_delta.clone()
    };
    let map = ThresholdMap {
        values: f,
        method: SolveMethod::Iterate,
        residual,
    };
    Ok((map, state))
}

/// One regime choice at a non-sink: which neighbor attains the minimum,
/// which the maximum, and which clamp branch the vertex sits in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Clamp {
    /// `f(v) = 1`, average at least `1 - λ`.
    Hi,
    /// `f(v) = wr_inv(favg)` inside `[0, 1]`.
    Mid,
    /// `f(v) = 0`, average at most `λ`.
    Lo,
}

#[derive(Debug, Clone)]
pub(crate) struct RegimeChoice {
    pub v: usize,
    pub vminus: usize,
    pub vplus: usize,
    pub clamp: Clamp,
}

pub(crate) fn regime_count(game: &Game) -> f64 {
    (0..game.vertex_count())
        .filter(|&v| !game.is_sink(v))
        .map(|v| {
            let d = game.neighbors(v).len() as f64;
            d * d * 3.0
        })
        .product()
}

/// Branch on vertices close to sinks first: their intervals pin down early
/// and the propagation prunes harder.
fn branch_order(game: &Game) -> Vec<usize> {
    let n = game.vertex_count();
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (u, v) in game.edges() {
        rev[v].push(u);
    }
    let mut dist = vec![usize::MAX; n];
    let mut queue: Vec<usize> = (0..n).filter(|&v| game.is_sink(v)).collect();
    for &v in &queue {
        dist[v] = 0;
    }
    let mut head = 0;
    while head < queue.len() {
        let v = queue[head];
        head += 1;
        for &u in &rev[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push(u);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).filter(|&v| !game.is_sink(v)).collect();
    order.sort_by_key(|&v| (dist[v], v));
    order
}

type Interval = (Rational, Rational);

fn initial_intervals(game: &Game) -> Vec<Interval> {
    let n = game.vertex_count();
    // Vertices that cannot reach a target have threshold 1; pinning them
    // keeps the search away from regimes that cannot carry the maximum.
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (u, v) in game.edges() {
        rev[v].push(u);
    }
    let mut reaches = vec![false; n];
    let mut queue: Vec<usize> = (0..n).filter(|&v| game.is_target(v)).collect();
    for &v in &queue {
        reaches[v] = true;
    }
    let mut head = 0;
    while head < queue.len() {
        let v = queue[head];
        head += 1;
        for &u in &rev[v] {
            if !reaches[u] {
                reaches[u] = true;
                queue.push(u);
            }
        }
    }
    (0..n)
        .map(|v| {
            if game.is_sink(v) {
                let b = boundary(game, v);
                (b.clone(), b)
            } else if !reaches[v] {
                (Rational::one(), Rational::one())
            } else {
                (Rational::zero(), Rational::one())
            }
        })
        .collect()
}

fn raise_lo(iv: &mut [Interval], v: usize, val: Rational, changed: &mut bool) -> bool {
    if val > iv[v].0 {
        if val > iv[v].1 {
            return false;
        }
        iv[v].0 = val;
        *changed = true;
    }
    true
}

fn lower_hi(iv: &mut [Interval], v: usize, val: Rational, changed: &mut bool) -> bool {
    if val < iv[v].1 {
        if val < iv[v].0 {
            return false;
        }
        iv[v].1 = val;
        *changed = true;
    }
    true
}

/// One interval-propagation pass for one committed choice. Every update is an
/// implication of the regime's constraints, so pruning is sound; precision is
/// best-effort (the leaf LP is the authority).
fn apply_choice(
    game: &Game,
    ch: &RegimeChoice,
    iv: &mut [Interval],
    changed: &mut bool,
) -> bool {
    let lambda = game.lambda();
    let two_lam = lambda + lambda;
    let hi_sum = Rational::from_integer(2.into()) - &two_lam;
    let c = Rational::from_integer(2.into()) - &two_lam - &two_lam; // 2(1-2λ)
    let (v, m, x) = (ch.v, ch.vminus, ch.vplus);
    let ns = game.neighbors(v);

    let min_hi = ns.iter().map(|&u| iv[u].1.clone()).min().unwrap();
    if !lower_hi(iv, m, min_hi, changed) {
        return false;
    }
    let max_lo = ns.iter().map(|&u| iv[u].0.clone()).max().unwrap();
    if !raise_lo(iv, x, max_lo, changed) {
        return false;
    }
    for &u in ns {
        let lo_m = iv[m].0.clone();
        if !raise_lo(iv, u, lo_m, changed) {
            return false;
        }
        let hi_x = iv[x].1.clone();
        if !lower_hi(iv, u, hi_x, changed) {
            return false;
        }
    }
    match ch.clamp {
        Clamp::Lo => {
            if !lower_hi(iv, v, Rational::zero(), changed) {
                return false;
            }
            if m == x {
                if !lower_hi(iv, m, lambda.clone(), changed) {
                    return false;
                }
            } else {
                let a = &two_lam - &iv[x].0;
                let b = &two_lam - &iv[m].0;
                if !lower_hi(iv, m, a, changed) || !lower_hi(iv, x, b, changed) {
                    return false;
                }
            }
        }
        Clamp::Hi => {
            if !raise_lo(iv, v, Rational::one(), changed) {
                return false;
            }
            if m == x {
                if !raise_lo(iv, m, Rational::one() - lambda, changed) {
                    return false;
                }
            } else {
                let a = &hi_sum - &iv[x].1;
                let b = &hi_sum - &iv[m].1;
                if !raise_lo(iv, m, a, changed) || !raise_lo(iv, x, b, changed) {
                    return false;
                }
            }
        }
        Clamp::Mid => {
            // c f(v) = f(m) + f(x) - 2λ
            let two = Rational::from_integer(2.into());
            if m == x {
                let lo_v = (&iv[m].0 * &two - &two_lam) / &c;
                let hi_v = (&iv[m].1 * &two - &two_lam) / &c;
                if !raise_lo(iv, v, lo_v, changed) || !lower_hi(iv, v, hi_v, changed) {
                    return false;
                }
                let lo_m = (&c * &iv[v].0 + &two_lam) / &two;
                let hi_m = (&c * &iv[v].1 + &two_lam) / &two;
                if !raise_lo(iv, m, lo_m, changed) || !lower_hi(iv, m, hi_m, changed) {
                    return false;
                }
            } else {
                let lo_v = (&iv[m].0 + &iv[x].0 - &two_lam) / &c;
                let hi_v = (&iv[m].1 + &iv[x].1 - &two_lam) / &c;
                if !raise_lo(iv, v, lo_v, changed) || !lower_hi(iv, v, hi_v, changed) {
                    return false;
                }
                let lo_m = &c * &iv[v].0 + &two_lam - &iv[x].1;
                let hi_m = &c * &iv[v].1 + &two_lam - &iv[x].0;
                if !raise_lo(iv, m, lo_m, changed) || !lower_hi(iv, m, hi_m, changed) {
                    return false;
                }
                let lo_x = &c * &iv[v].0 + &two_lam - &iv[m].1;
                let hi_x = &c * &iv[v].1 + &two_lam - &iv[m].0;
                if !raise_lo(iv, x, lo_x, changed) || !lower_hi(iv, x, hi_x, changed) {
                    return false;
                }
            }
        }
    }
    true
}

fn propagate(game: &Game, choices: &[RegimeChoice], mut iv: Vec<Interval>) -> Option<Vec<Interval>> {
    let passes = 2 * choices.len() + 4;
    for _ in 0..passes {
        let mut changed = false;
        for ch in choices {
            if !apply_choice(game, ch, &mut iv, &mut changed) {
                return None;
            }
        }
        if !changed {
            break;
        }
    }
    Some(iv)
}

struct RegimeSearch<'a, T, F> {
    game: &'a Game,
    leaf: F,
    choices: Vec<RegimeChoice>,
    best: Option<(Rational, T)>,
}

impl<'a, T, F> RegimeSearch<'a, T, F>
where
    F: FnMut(&[RegimeChoice]) -> Option<(Rational, T)>,
{
    fn recurse(&mut self, order: &[usize], depth: usize, iv: Vec<Interval>) {
        let ub: Rational = iv.iter().map(|(_, hi)| hi.clone()).sum();
        if let Some((best_obj, _)) = &self.best {
            if ub <= *best_obj {
                return;
            }
        }
        if depth == order.len() {
            if let Some((obj, payload)) = (self.leaf)(&self.choices) {
                let better = match &self.best {
                    None => true,
                    Some((b, _)) => obj > *b,
                };
                if better {
                    self.best = Some((obj, payload));
                }
            }
            return;
        }
        let v = order[depth];
        let ns: Vec<usize> = self.game.neighbors(v).to_vec();
        // Hi first: early leaves land near the maximum, so the objective
        // bound prunes most of the remaining tree.
        for clamp in [Clamp::Hi, Clamp::Mid, Clamp::Lo] {
            for &m in &ns {
                for &x in &ns {
                    self.choices.push(RegimeChoice {
                        v,
                        vminus: m,
                        vplus: x,
                        clamp,
                    });
                    if let Some(tight) = propagate(self.game, &self.choices, iv.clone()) {
                        self.recurse(order, depth + 1, tight);
                    }
                    self.choices.pop();
                }
            }
        }
    }
}

/// Depth-first search over globally consistent regime assignments with
/// interval propagation and an objective bound; `leaf` evaluates one complete
/// assignment and returns its objective plus payload if feasible. Returns the
/// best leaf found.
pub(crate) fn regime_search<T, F>(
    game: &Game,
    leaf: F,
) -> Result<Option<(Rational, T)>, SolveError>
where
    F: FnMut(&[RegimeChoice]) -> Option<(Rational, T)>,
{
    let count = regime_count(game);
    if count > REGIME_GUARD {
        return Err(SolveError::SizeGuard(count));
    }
    let order = branch_order(game);
    let iv = initial_intervals(game);
    let mut search = RegimeSearch {
        game,
        leaf,
        choices: Vec::new(),
        best: None,
    };
    search.recurse(&order, 0, iv);
    Ok(search.best)
}

/// The affine piece of the average property under one regime assignment.
fn average_lp(game: &Game, choices: &[RegimeChoice]) -> LinearProgram {
    let lambda = game.lambda();
    let two_lam = lambda + lambda;
    let hi_sum = Rational::from_integer(2.into()) - &two_lam;
    let c = Rational::from_integer(2.into()) - &two_lam - &two_lam;
    let mut lp = LinearProgram::new();
    let fv: Vec<usize> = (0..game.vertex_count())
        .map(|v| lp.add_var(format!("f_{}", game.vertex_name(v))))
        .collect();
    for v in 0..game.vertex_count() {
        if game.is_sink(v) {
            lp.constrain(
                vec![(fv[v], Rational::one())],
                Relation::Eq,
                boundary(game, v),
            );
        } else {
            lp.constrain(vec![(fv[v], Rational::one())], Relation::Ge, Rational::zero());
            lp.constrain(vec![(fv[v], Rational::one())], Relation::Le, Rational::one());
        }
    }
    for ch in choices {
        let (v, m, x) = (ch.v, ch.vminus, ch.vplus);
        for &u in game.neighbors(v) {
            lp.constrain(
                vec![(fv[m], Rational::one()), (fv[u], -Rational::one())],
                Relation::Le,
                Rational::zero(),
            );
            lp.constrain(
                vec![(fv[u], Rational::one()), (fv[x], -Rational::one())],
                Relation::Le,
                Rational::zero(),
            );
        }
        match ch.clamp {
            Clamp::Lo => {
                lp.constrain(vec![(fv[v], Rational::one())], Relation::Eq, Rational::zero());
                lp.constrain(
                    vec![(fv[m], Rational::one()), (fv[x], Rational::one())],
                    Relation::Le,
                    two_lam.clone(),
                );
            }
            Clamp::Hi => {
                lp.constrain(vec![(fv[v], Rational::one())], Relation::Eq, Rational::one());
                lp.constrain(
                    vec![(fv[m], Rational::one()), (fv[x], Rational::one())],
                    Relation::Ge,
                    hi_sum.clone(),
                );
            }
            Clamp::Mid => {
                lp.constrain(
                    vec![
                        (fv[v], c.clone()),
                        (fv[m], -Rational::one()),
                        (fv[x], -Rational::one()),
                    ],
                    Relation::Eq,
                    -two_lam.clone(),
                );
            }
        }
    }
    lp.maximize(fv.iter().map(|&id| (id, Rational::one())).collect());
    lp
}

/// Exact thresholds via regime enumeration; the returned map is the unique
/// `Σ f(v)`-maximizing solution of the average property.
pub fn solve_enumerate(game: &Game) -> Result<ThresholdMap, SolveError> {
    let best = regime_search(game, |choices| {
        let lp = average_lp(game, choices);
        match simplex_max(&lp) {
            LpOutcome::Optimal { point, value } => Some((value, point)),
            LpOutcome::Infeasible => None,
            LpOutcome::Unbounded => None,
        }
    })?;
    let (_, values) = best.ok_or_else(|| {
        SolveError::Internal("no regime is feasible, but the threshold function always exists".into())
    })?;
    if !check_average_property(&values, game).holds {
        return Err(SolveError::Internal(
            "enumeration result fails the average property".to_string(),
        ));
    }
    Ok(ThresholdMap::exact(values, SolveMethod::Enumerate))
}

/// Preferred method for a game: exact where possible.
pub fn auto_method(game: &Game) -> SolveMethod {
    if game.is_dag() {
        SolveMethod::Dag
    } else if regime_count(game) <= REGIME_GUARD {
        SolveMethod::Enumerate
    } else {
        SolveMethod::Iterate
    }
}

/// Unified dispatch used by the CLI and sweeps.
pub fn solve_with(
    game: &Game,
    method: SolveMethod,
    tol: &Rational,
    max_iters: usize,
) -> Result<ThresholdMap, SolveError> {
    match method {
        SolveMethod::Dag => solve_dag(game),
        SolveMethod::Iterate => solve_iterate(game, tol, max_iters).map(|(m, _)| m),
        SolveMethod::Enumerate => solve_enumerate(game),
        SolveMethod::Milp => {
            let model = crate::milp::build_milp(game);
            let sol = crate::milp::solve_milp_exhaustive(&model)?;
            Ok(ThresholdMap::exact(sol.f, SolveMethod::Milp))
        }
    }
}

/// Exact thresholds by whichever exact method fits, or an error if none does.
pub fn solve_exact(game: &Game) -> Result<ThresholdMap, SolveError> {
    match auto_method(game) {
        SolveMethod::Dag => solve_dag(game),
        SolveMethod::Iterate => Err(SolveError::SizeGuard(regime_count(game))),
        _ => solve_enumerate(game),
    }
}
