//! Threshold strength classification.
//!
//! At budget exactly `Th(v)` the game can go three ways: Player 1 still wins
//! (1-strong), Player 2 wins (2-strong), or neither has a winning strategy
//! (weak). For λ > 0 the decision runs in three stages on a copy of the game
//! with self-loops on sinks: partition vertices by the pre-redistribution
//! value `Th_pre`, look for a path to the 1-strong core inside the
//! min-threshold subgraph `G_good`, and settle the rest with a turn-based
//! reachability game. λ = 0 degenerates to plain graph reachability.

use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::avgprop::{avg_triple, check_average_property};
use crate::game::{Game, ThresholdMap};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strength {
    OneStrong,
    TwoStrong,
    Weak,
}

impl fmt::Display for Strength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strength::OneStrong => "OneStrong",
            Strength::TwoStrong => "TwoStrong",
            Strength::Weak => "Weak",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionClass {
    /// `Th_pre < 0`: Player 1 wins at the threshold. Contains every target.
    V1,
    /// `Th_pre > 1`: Player 2 wins at the threshold.
    V2,
    /// `Th_pre` in `[0, 1]`: undecided, handed to the later stages.
    Vmid,
}

#[derive(Debug, Clone)]
pub struct VertexPartition {
    pub class: Vec<PartitionClass>,
}

impl VertexPartition {
    pub fn set(&self, c: PartitionClass) -> Vec<usize> {
        (0..self.class.len())
            .filter(|&v| self.class[v] == c)
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum StrengthError {
    #[error("threshold map is approximate; classification needs exact values")]
    Approximate,
    #[error("values do not satisfy the average property")]
    NotAFixedPoint,
    #[error("lambda is zero; this path needs lambda > 0")]
    LambdaZero,
    #[error("lambda is nonzero; this path needs lambda = 0")]
    LambdaNonzero,
    #[error("internal invariant violation: {0}")]
    Internal(String),
}

fn th_pre(aug: &Game, values: &[Rational], v: usize) -> Rational {
    avg_triple(values, v, aug).expect("self-loop augmentation leaves no sinks").fpre
}

/// Splits vertices by the sign pattern of `Th_pre` on the self-loop-augmented
/// game. Requires λ > 0 (at λ = 0 every `Th_pre` lands in `[0, 1]`).
pub fn partition_vertices(
    game: &Game,
    th: &ThresholdMap,
) -> Result<VertexPartition, StrengthError> {
    if game.lambda().is_zero() {
        return Err(StrengthError::LambdaZero);
    }
    let aug = game.with_self_loops_on_sinks();
    let class = (0..game.vertex_count())
        .map(|v| {
            let pre = th_pre(&aug, &th.values, v);
            if pre < Rational::zero() {
                PartitionClass::V1
            } else if pre > Rational::one() {
                PartitionClass::V2
            } else {
                PartitionClass::Vmid
            }
        })
        .collect();
    Ok(VertexPartition { class })
}

/// Subgraph of the augmented game keeping only edges into threshold-minimal
/// neighbors, with `V2` vertices removed. A path to `V1` in here certifies
/// 1-strength.
pub fn build_g_good(game: &Game, th: &ThresholdMap) -> Result<Vec<Vec<usize>>, StrengthError> {
    let part = partition_vertices(game, th)?;
    let aug = game.with_self_loops_on_sinks();
    let mut adj = vec![Vec::new(); game.vertex_count()];
    for u in 0..game.vertex_count() {
        if part.class[u] == PartitionClass::V2 {
            continue;
        }
        let ns = aug.neighbors(u);
        let min = ns.iter().map(|&w| &th.values[w]).min().unwrap();
        for &w in ns {
            if th.values[w] == *min && part.class[w] != PartitionClass::V2 {
                adj[u].push(w);
            }
        }
    }
    Ok(adj)
}

/// Successor of a turn-based position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TbNode {
    /// Player 1 position of the `i`-th `Vmid` vertex.
    Pos(usize),
    /// Choice node (Player 2) of the `i`-th `Vmid` vertex.
    Choice(usize),
    /// Terminal in `V1`: Player 1 wins.
    WinP1,
    /// Terminal in `V2`: Player 2 wins.
    WinP2,
}

/// Turn-based reachability game deciding the remaining `Vmid` vertices.
/// From the position of `u`, Player 1 picks a threshold-minimal neighbor or
/// defers to `u`'s choice node, where Player 2 picks a threshold-maximal
/// neighbor. Infinite plays lose for Player 1.
#[derive(Debug, Clone)]
pub struct TurnBasedGame {
    /// Game vertex of each Player 1 position.
    pub vmid: Vec<usize>,
    pub pos_edges: Vec<Vec<TbNode>>,
    pub choice_edges: Vec<Vec<TbNode>>,
}

pub fn build_turn_based(
    game: &Game,
    th: &ThresholdMap,
    part: &VertexPartition,
) -> TurnBasedGame {
    let aug = game.with_self_loops_on_sinks();
    let vmid = part.set(PartitionClass::Vmid);
    let pos_of: Vec<Option<usize>> = {
        let mut m = vec![None; game.vertex_count()];
        for (i, &v) in vmid.iter().enumerate() {
            m[v] = Some(i);
        }
        m
    };
    let lift = |w: usize| match part.class[w] {
        PartitionClass::V1 => TbNode::WinP1,
        PartitionClass::V2 => TbNode::WinP2,
        PartitionClass::Vmid => TbNode::Pos(pos_of[w].unwrap()),
    };
    let mut pos_edges = Vec::with_capacity(vmid.len());
    let mut choice_edges = Vec::with_capacity(vmid.len());
    for (i, &u) in vmid.iter().enumerate() {
        let ns = aug.neighbors(u);
        let min = ns.iter().map(|&w| &th.values[w]).min().unwrap().clone();
        let max = ns.iter().map(|&w| &th.values[w]).max().unwrap().clone();
        let mut pe: Vec<TbNode> = ns
            .iter()
            .filter(|&&w| th.values[w] == min)
            .map(|&w| lift(w))
            .collect();
        pe.push(TbNode::Choice(i));
        let ce: Vec<TbNode> = ns
            .iter()
            .filter(|&&w| th.values[w] == max)
            .map(|&w| lift(w))
            .collect();
        pos_edges.push(pe);
        choice_edges.push(ce);
    }
    TurnBasedGame {
        vmid,
        pos_edges,
        choice_edges,
    }
}

/// Classical attractor to the `WinP1` terminals: a Player 1 position is
/// winning with some winning successor, a choice node with all successors
/// winning. Returns the winning flag per Player 1 position.
pub fn solve_turn_based(tb: &TurnBasedGame) -> Vec<bool> {
    let k = tb.vmid.len();
    let mut win_pos = vec![false; k];
    let mut win_choice = vec![false; k];
    let node_wins = |n: &TbNode, wp: &[bool], wc: &[bool]| match n {
        TbNode::WinP1 => true,
        TbNode::WinP2 => false,
        TbNode::Pos(i) => wp[*i],
        TbNode::Choice(i) => wc[*i],
    };
    loop {
        let mut changed = false;
        for i in 0..k {
            if !win_choice[i]
                && tb.choice_edges[i]
                    .iter()
                    .all(|n| node_wins(n, &win_pos, &win_choice))
            {
                win_choice[i] = true;
                changed = true;
            }
            if !win_pos[i]
                && tb.pos_edges[i]
                    .iter()
                    .any(|n| node_wins(n, &win_pos, &win_choice))
            {
                win_pos[i] = true;
                changed = true;
            }
        }
        if !changed {
            return win_pos;
        }
    }
}

/// λ = 0: 1-strong exactly where the target set is reachable, never weak.
pub fn classify_lambda_zero(
    game: &Game,
    th: &ThresholdMap,
) -> Result<Vec<Strength>, StrengthError> {
    if !game.lambda().is_zero() {
        return Err(StrengthError::LambdaNonzero);
    }
    check_exact(game, th)?;
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); game.vertex_count()];
    for (u, v) in game.edges() {
        rev[v].push(u);
    }
    let mut reaches = vec![false; game.vertex_count()];
    let mut queue: Vec<usize> = (0..game.vertex_count())
        .filter(|&v| game.is_target(v))
        .collect();
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
    Ok((0..game.vertex_count())
        .map(|v| {
            if reaches[v] {
                Strength::OneStrong
            } else {
                Strength::TwoStrong
            }
        })
        .collect())
}

fn check_exact(game: &Game, th: &ThresholdMap) -> Result<(), StrengthError> {
    if !th.is_exact() {
        return Err(StrengthError::Approximate);
    }
    if !check_average_property(&th.values, game).holds {
        return Err(StrengthError::NotAFixedPoint);
    }
    Ok(())
}

/// Full classification; refuses approximate thresholds since every decision
/// here is a knife-edge comparison.
pub fn classify(game: &Game, th: &ThresholdMap) -> Result<Vec<Strength>, StrengthError> {
    check_exact(game, th)?;
    if game.lambda().is_zero() {
        return classify_lambda_zero(game, th);
    }
    let part = partition_vertices(game, th)?;
    let g_good = build_g_good(game, th)?;

    // Backward reachability of V1 inside G_good.
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); game.vertex_count()];
    for (u, ns) in g_good.iter().enumerate() {
        for &w in ns {
            rev[w].push(u);
        }
    }
    let mut good = vec![false; game.vertex_count()];
    let mut queue: Vec<usize> = part.set(PartitionClass::V1);
    for &v in &queue {
        good[v] = true;
    }
    let mut head = 0;
    while head < queue.len() {
        let v = queue[head];
        head += 1;
        for &u in &rev[v] {
            if !good[u] {
                good[u] = true;
                queue.push(u);
            }
        }
    }

    let tb = build_turn_based(game, th, &part);
    let win = solve_turn_based(&tb);
    let mut win_of = vec![false; game.vertex_count()];
    for (i, &v) in tb.vmid.iter().enumerate() {
        win_of[v] = win[i];
    }

    let result: Vec<Strength> = (0..game.vertex_count())
        .map(|v| match part.class[v] {
            PartitionClass::V1 => Strength::OneStrong,
            PartitionClass::V2 => Strength::TwoStrong,
            PartitionClass::Vmid => {
                if good[v] {
                    Strength::OneStrong
                } else if win_of[v] {
                    Strength::Weak
                } else {
                    Strength::TwoStrong
                }
            }
        })
        .collect();

    if game.is_dag() {
        // Acyclic cross-check: a non-sink is 1-strong exactly when its
        // pre-redistribution value stays at most 1.
        for v in 0..game.vertex_count() {
            if game.is_sink(v) {
                continue;
            }
            let pre = avg_triple(&th.values, v, game).expect("non-sink").fpre;
            let expect_one_strong = pre <= Rational::one();
            if expect_one_strong != (result[v] == Strength::OneStrong) {
                return Err(StrengthError::Internal(format!(
                    "acyclic rule disagrees at {}",
                    game.vertex_name(v)
                )));
            }
        }
    }
    Ok(result)
}
