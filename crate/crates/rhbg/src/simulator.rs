//! Play execution: redistribution phase, sealed bids with ties to Player 1,
//! transfer of the winning bid, and the winner's move. Strategies are
//! pluggable; the built-in pair plays the optimal bids derived from any value
//! map with the average property.

use num_traits::{One, Signed, Zero};
use serde_json::json;
use thiserror::Error;

use crate::avgprop::{avg_triple, check_average_property, wr};
use crate::game::{Configuration, Game};
use crate::rational::{format_rational, to_f64, Rational};

/// A sealed bid plus the move to make on winning it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    pub bid: Rational,
    pub move_to: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Player {
    P1,
    P2,
}

/// Deterministic decision rule queried after the redistribution phase with
/// both post-redistribution budgets (bids are sealed; only the budgets are
/// public). Mutable state covers round-indexed schedules and scripts.
pub trait Strategy {
    fn name(&self) -> &str;
    fn act(&mut self, game: &Game, vertex: usize, own: &Rational, opp: &Rational) -> Action;
}

#[derive(Debug, Error)]
pub enum RoundError {
    #[error("{0:?} overbids: {1} exceeds the post-redistribution budget {2}")]
    Overbid(Player, String, String),
    #[error("{0:?} moves to a vertex that is not a neighbor")]
    IllegalMove(Player),
}

/// One resolved round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRecord {
    pub vertex: usize,
    /// Player 1's budget entering the round, before redistribution.
    pub budget1_pre: Rational,
    /// After redistribution (Player 2 holds the complement).
    pub budget1_post_wr: Rational,
    pub bid1: Rational,
    pub bid2: Rational,
    pub winner: Player,
    pub moved_to: usize,
    /// Set when a player emitted an invalid action and lost the round by
    /// forfeiture (the opponent wins with bid 0).
    pub forfeit: Option<Player>,
}

fn action_valid(game: &Game, vertex: usize, budget: &Rational, a: &Action) -> bool {
    !a.bid.is_negative() && a.bid <= *budget && game.neighbors(vertex).contains(&a.move_to)
}

/// Applies one full round. Both actions must be valid; invalid actions are a
/// hard error here (the play driver turns them into forfeitures instead).
pub fn resolve_round(
    game: &Game,
    config: &Configuration,
    a1: &Action,
    a2: &Action,
) -> Result<(Configuration, RoundRecord), RoundError> {
    let post1 = wr(&config.budget1, game.lambda());
    let post2 = Rational::one() - &post1;
    if a1.bid.is_negative() || a1.bid > post1 {
        return Err(RoundError::Overbid(
            Player::P1,
            format_rational(&a1.bid),
            format_rational(&post1),
        ));
    }
    if a2.bid.is_negative() || a2.bid > post2 {
        return Err(RoundError::Overbid(
            Player::P2,
            format_rational(&a2.bid),
            format_rational(&post2),
        ));
    }
    if !game.neighbors(config.vertex).contains(&a1.move_to) {
        return Err(RoundError::IllegalMove(Player::P1));
    }
    if !game.neighbors(config.vertex).contains(&a2.move_to) {
        return Err(RoundError::IllegalMove(Player::P2));
    }
    let winner = if a1.bid >= a2.bid { Player::P1 } else { Player::P2 };
    let (next_budget, moved_to) = match winner {
        Player::P1 => (&post1 - &a1.bid, a1.move_to),
        Player::P2 => (&post1 + &a2.bid, a2.move_to),
    };
    let record = RoundRecord {
        vertex: config.vertex,
        budget1_pre: config.budget1.clone(),
        budget1_post_wr: post1,
        bid1: a1.bid.clone(),
        bid2: a2.bid.clone(),
        winner,
        moved_to,
        forfeit: None,
    };
    Ok((
        Configuration {
            vertex: moved_to,
            budget1: next_budget,
        },
        record,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminal {
    /// The play reached a target.
    P1Wins,
    /// The play reached a non-target sink.
    P2Wins,
    /// Step cap hit; reachability semantics read this in Player 2's favor.
    Truncated,
}

#[derive(Debug, Clone)]
pub struct PlayTrace {
    pub start: Configuration,
    pub steps: Vec<RoundRecord>,
    pub terminal: Terminal,
    pub final_vertex: usize,
    pub final_budget1: Rational,
}

/// Runs a play to a sink or the step cap. Invalid actions become
/// forfeitures: the opponent wins the round bidding 0 and moves.
pub fn run_play(
    game: &Game,
    start: Configuration,
    s1: &mut dyn Strategy,
    s2: &mut dyn Strategy,
    max_steps: usize,
) -> PlayTrace {
    let mut config = start.clone();
    let mut steps = Vec::new();
    let terminal = loop {
        if game.is_target(config.vertex) {
            break Terminal::P1Wins;
        }
        if game.is_sink(config.vertex) {
            break Terminal::P2Wins;
        }
        if steps.len() >= max_steps {
            break Terminal::Truncated;
        }
        let post1 = wr(&config.budget1, game.lambda());
        let post2 = Rational::one() - &post1;
        let a1 = s1.act(game, config.vertex, &post1, &post2);
        let a2 = s2.act(game, config.vertex, &post2, &post1);
        let ok1 = action_valid(game, config.vertex, &post1, &a1);
        let ok2 = action_valid(game, config.vertex, &post2, &a2);
        let (next, record) = if ok1 && ok2 {
            resolve_round(game, &config, &a1, &a2).expect("validated actions")
        } else {
            let first_neighbor = game.neighbors(config.vertex)[0];
            // Whoever moved first against the rules forfeits; on a double
            // fault the tie-break favors Player 1's opponent acting last.
            let (forfeiter, winner) = if !ok1 {
                (Player::P1, Player::P2)
            } else {
                (Player::P2, Player::P1)
            };
            let moved_to = match winner {
                Player::P1 if ok1 => a1.move_to,
                Player::P2 if ok2 => a2.move_to,
                _ => first_neighbor,
            };
            let record = RoundRecord {
                vertex: config.vertex,
                budget1_pre: config.budget1.clone(),
                budget1_post_wr: post1.clone(),
                bid1: if ok1 { a1.bid.clone() } else { Rational::zero() },
                bid2: if ok2 { a2.bid.clone() } else { Rational::zero() },
                winner,
                moved_to,
                forfeit: Some(forfeiter),
            };
            (
                Configuration {
                    vertex: moved_to,
                    budget1: post1,
                },
                record,
            )
        };
        steps.push(record);
        config = next;
    };
    PlayTrace {
        start,
        steps,
        terminal,
        final_vertex: config.vertex,
        final_budget1: config.budget1,
    }
}

fn budget_pair(x: &Rational) -> String {
    let y = Rational::one() - x;
    format!(
        "{} : {} ({} : {})",
        format_rational(x),
        format_rational(&y),
        to_f64(x),
        to_f64(&y)
    )
}

impl PlayTrace {
    pub fn render(&self, game: &Game) -> String {
        let mut out = String::new();
        for (i, s) in self.steps.iter().enumerate() {
            out.push_str(&format!(
                "round {}: at {}, budgets {}\n",
                i + 1,
                game.vertex_name(s.vertex),
                budget_pair(&s.budget1_pre)
            ));
            out.push_str(&format!(
                "  after redistribution: {}\n",
                budget_pair(&s.budget1_post_wr)
            ));
            let winner = match s.winner {
                Player::P1 => "P1",
                Player::P2 => "P2",
            };
            out.push_str(&format!(
                "  bids: P1 {} ({}), P2 {} ({}) -> {} wins, moves to {}\n",
                format_rational(&s.bid1),
                to_f64(&s.bid1),
                format_rational(&s.bid2),
                to_f64(&s.bid2),
                winner,
                game.vertex_name(s.moved_to)
            ));
            if let Some(p) = s.forfeit {
                out.push_str(&format!("  (forfeit by {p:?})\n"));
            }
        }
        let status = match self.terminal {
            Terminal::P1Wins => "P1Wins",
            Terminal::P2Wins => "P2Wins",
            Terminal::Truncated => "Truncated",
        };
        out.push_str(&format!(
            "{} at {} after {} rounds, final budgets {}\n",
            status,
            game.vertex_name(self.final_vertex),
            self.steps.len(),
            budget_pair(&self.final_budget1)
        ));
        out
    }

    pub fn to_json(&self, game: &Game) -> serde_json::Value {
        let steps: Vec<serde_json::Value> = self
            .steps
            .iter()
            .map(|s| {
                json!({
                    "vertex": game.vertex_name(s.vertex),
                    "budget1_pre": format_rational(&s.budget1_pre),
                    "budget1_post_wr": format_rational(&s.budget1_post_wr),
                    "bid1": format_rational(&s.bid1),
                    "bid2": format_rational(&s.bid2),
                    "winner": match s.winner { Player::P1 => "P1", Player::P2 => "P2" },
                    "moved_to": game.vertex_name(s.moved_to),
                    "forfeit": s.forfeit.map(|p| format!("{p:?}")),
                })
            })
            .collect();
        json!({
            "start": {
                "vertex": game.vertex_name(self.start.vertex),
                "budget1": format_rational(&self.start.budget1),
            },
            "steps": steps,
            "terminal": match self.terminal {
                Terminal::P1Wins => "P1Wins",
                Terminal::P2Wins => "P2Wins",
                Terminal::Truncated => "Truncated",
            },
            "final_vertex": game.vertex_name(self.final_vertex),
            "final_budget1": format_rational(&self.final_budget1),
        })
    }
}

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("the value map does not satisfy the average property")]
    NotAFixedPoint,
}

/// Player 1's optimal strategy for a value map `f`: bid half the neighbor
/// spread and move toward the minimum. When the maximal neighbor is a lost
/// vertex (`f = 1`), losing the auction is fatal, so the bid is raised to
/// match the opponent's whole budget.
pub struct AvgStrategyP1 {
    f: Vec<Rational>,
}

pub fn strategy_avg_p1(f: &[Rational], game: &Game) -> Result<AvgStrategyP1, StrategyError> {
    if !check_average_property(f, game).holds {
        return Err(StrategyError::NotAFixedPoint);
    }
    Ok(AvgStrategyP1 { f: f.to_vec() })
}

impl Strategy for AvgStrategyP1 {
    fn name(&self) -> &str {
        "avg-p1"
    }

    fn act(&mut self, game: &Game, vertex: usize, own: &Rational, opp: &Rational) -> Action {
        let t = avg_triple(&self.f, vertex, game).expect("non-sink");
        let mut bid = t.fdiff;
        if self.f[t.vplus].is_one() && *opp > bid {
            bid = opp.clone();
        }
        if bid > *own {
            bid = own.clone();
        }
        Action {
            bid,
            move_to: t.vminus,
        }
    }
}

/// Player 2's optimal strategy: bid half the neighbor spread and move toward
/// the maximum; at vertices where losing the auction loses the game (a target
/// neighbor, or a maximal neighbor with `f = 1` to push into), strictly
/// overbid the opponent's budget by the next step of a geometric ε schedule,
/// provided that still leaves the opponent below the value at the maximum.
pub struct AvgStrategyP2 {
    f: Vec<Rational>,
    eps_next: Rational,
    overbids: usize,
}

pub fn strategy_avg_p2(
    f: &[Rational],
    game: &Game,
    eps0: Rational,
) -> Result<AvgStrategyP2, StrategyError> {
    if !check_average_property(f, game).holds {
        return Err(StrategyError::NotAFixedPoint);
    }
    Ok(AvgStrategyP2 {
        f: f.to_vec(),
        eps_next: eps0,
        overbids: 0,
    })
}

impl AvgStrategyP2 {
    pub fn overbids(&self) -> usize {
        self.overbids
    }
}

impl Strategy for AvgStrategyP2 {
    fn name(&self) -> &str {
        "avg-p2"
    }

    fn act(&mut self, game: &Game, vertex: usize, own: &Rational, opp: &Rational) -> Action {
        let t = avg_triple(&self.f, vertex, game).expect("non-sink");
        let must_win = game
            .neighbors(vertex)
            .iter()
            .any(|&u| game.is_target(u))
            || self.f[t.vplus].is_one();
        if must_win && self.eps_next.is_positive() {
            let handed = opp + opp + &self.eps_next;
            if handed < self.f[t.vplus] {
                let bid = opp + &self.eps_next;
                self.eps_next = &self.eps_next / Rational::from_integer(2.into());
                self.overbids += 1;
                debug_assert!(bid <= *own);
                return Action {
                    bid,
                    move_to: t.vplus,
                };
            }
        }
        let mut bid = t.fdiff;
        if bid > *own {
            bid = own.clone();
        }
        Action {
            bid,
            move_to: t.vplus,
        }
    }
}

/// Replays a fixed list of (bid, move) pairs; once exhausted it bids 0 and
/// moves to the first neighbor. Move names that never resolve forfeit.
pub struct ScriptStrategy {
    name: String,
    actions: Vec<(Rational, String)>,
    next: usize,
}

impl ScriptStrategy {
    pub fn new(name: impl Into<String>, actions: Vec<(Rational, String)>) -> ScriptStrategy {
        ScriptStrategy {
            name: name.into(),
            actions,
            next: 0,
        }
    }

    /// Script file: `{"actions":[{"bid":"1/4","move":"vright"}, ...]}`.
    pub fn parse(name: impl Into<String>, text: &str) -> Result<ScriptStrategy, String> {
        #[derive(serde::Deserialize)]
        struct Entry {
            bid: String,
            #[serde(rename = "move")]
            move_to: String,
        }
        #[derive(serde::Deserialize)]
        struct File {
            actions: Vec<Entry>,
        }
        let file: File = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let mut actions = Vec::new();
        for e in file.actions {
            let bid = crate::rational::parse_rational(&e.bid).map_err(|e| e.to_string())?;
            actions.push((bid, e.move_to));
        }
        Ok(ScriptStrategy::new(name, actions))
    }
}

impl Strategy for ScriptStrategy {
    fn name(&self) -> &str {
        &self.name
    }

    fn act(&mut self, game: &Game, vertex: usize, _own: &Rational, _opp: &Rational) -> Action {
        let fallback = Action {
            bid: Rational::zero(),
            move_to: game.neighbors(vertex)[0],
        };
        match self.actions.get(self.next) {
            None => fallback,
            Some((bid, mv)) => {
                self.next += 1;
                match game.vertex_index(mv) {
                    Some(m) => Action {
                        bid: bid.clone(),
                        move_to: m,
                    },
                    // Unresolvable move: emit it as-is and let the driver
                    // record the forfeiture.
                    None => Action {
                        bid: bid.clone(),
                        move_to: usize::MAX,
                    },
                }
            }
        }
    }
}
