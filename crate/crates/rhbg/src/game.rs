//! Game graphs, configurations and threshold maps.
//!
//! The game file format is JSON with all numbers as exact-rational strings:
//!
//! ```json
//! {"vertices":["vleft","v2","vright","v1"],
//!  "edges":[["vleft","v2"],["vleft","vright"],["vright","vleft"],["vright","v1"]],
//!  "targets":["v1"],"lambda":"1/8"}
//! ```
//!
//! The vertex order in the file fixes the canonical total order used for every
//! arbitrary tie-break downstream (argmin/argmax selection), so identical
//! inputs give identical outputs across runs.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{self, parse_rational, Rational};

#[derive(Debug, Error)]
pub enum GameError {
    #[error("malformed game file: {0}")]
    Syntax(String),
    #[error("duplicate vertex id {0:?}")]
    DuplicateVertex(String),
    #[error("unknown vertex {0:?} referenced in {1}")]
    UnknownVertex(String, &'static str),
    #[error("lambda out of range: {0} (need 0 <= lambda < 1/2)")]
    LambdaOutOfRange(String),
    #[error("bad rational: {0}")]
    Rational(#[from] rational::ParseRationalError),
}

#[derive(Debug, Serialize, Deserialize)]
struct GameFile {
    vertices: Vec<String>,
    edges: Vec<(String, String)>,
    targets: Vec<String>,
    lambda: String,
}

/// A finite directed game graph with a target set and redistribution factor.
///
/// Immutable after construction; targets are always sinks (normalization
/// removes their out-edges).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Game {
    vertices: Vec<String>,
    index: HashMap<String, usize>,
    /// Out-neighbors per vertex, sorted by canonical index.
    adj: Vec<Vec<usize>>,
    target: Vec<bool>,
    lambda: Rational,
}

impl Game {
    pub fn new(
        vertices: Vec<String>,
        edges: Vec<(String, String)>,
        targets: Vec<String>,
        lambda: Rational,
    ) -> Result<(Game, Vec<String>), GameError> {
        if lambda < Rational::zero() || lambda >= rational::rat(1, 2) {
            return Err(GameError::LambdaOutOfRange(rational::format_rational(&lambda)));
        }
        let mut index = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.clone(), i).is_some() {
                return Err(GameError::DuplicateVertex(v.clone()));
            }
        }
        let mut target = vec![false; vertices.len()];
        for t in &targets {
            let i = *index
                .get(t)
                .ok_or_else(|| GameError::UnknownVertex(t.clone(), "targets"))?;
            target[i] = true;
        }
        let mut adj: Vec<HashSet<usize>> = vec![HashSet::new(); vertices.len()];
        let mut warnings = Vec::new();
        for (u, v) in &edges {
            let ui = *index
                .get(u)
                .ok_or_else(|| GameError::UnknownVertex(u.clone(), "edges"))?;
            let vi = *index
                .get(v)
                .ok_or_else(|| GameError::UnknownVertex(v.clone(), "edges"))?;
            if target[ui] {
                warnings.push(format!(
                    "dropping edge ({u},{v}): target vertices are normalized to sinks"
                ));
                continue;
            }
            adj[ui].insert(vi);
        }
        let adj = adj
            .into_iter()
            .map(|s| {
                let mut v: Vec<usize> = s.into_iter().collect();
                v.sort_unstable();
                v
            })
            .collect();
        Ok((
            Game {
                vertices,
                index,
                adj,
                target,
                lambda,
            },
            warnings,
        ))
    }

    /// Parses and normalizes a game file; see the module docs for the format.
    pub fn parse(text: &str) -> Result<(Game, Vec<String>), GameError> {
        let file: GameFile =
            serde_json::from_str(text).map_err(|e| GameError::Syntax(e.to_string()))?;
        let lambda = parse_rational(&file.lambda)?;
        Game::new(file.vertices, file.edges, file.targets, lambda)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex_name(&self, i: usize) -> &str {
        &self.vertices[i]
    }

    pub fn vertex_names(&self) -> &[String] {
        &self.vertices
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn is_sink(&self, v: usize) -> bool {
        self.adj[v].is_empty()
    }

    pub fn is_target(&self, v: usize) -> bool {
        self.target[v]
    }

    pub fn lambda(&self) -> &Rational {
        &self.lambda
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().map(move |&v| (u, v)))
    }

    /// Same graph with a different redistribution factor (for lambda sweeps).
    pub fn with_lambda(&self, lambda: Rational) -> Result<Game, GameError> {
        if lambda < Rational::zero() || lambda >= rational::rat(1, 2) {
            return Err(GameError::LambdaOutOfRange(rational::format_rational(&lambda)));
        }
        let mut g = self.clone();
        g.lambda = lambda;
        Ok(g)
    }

    /// Copy with a self-loop on every sink (used by the strength reduction).
    pub fn with_self_loops_on_sinks(&self) -> Game {
        let mut g = self.clone();
        for v in 0..g.vertices.len() {
            if g.adj[v].is_empty() {
                g.adj[v].push(v);
            }
        }
        g
    }

    pub fn is_dag(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Kahn's algorithm; `None` when the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.vertices.len();
        let mut indeg = vec![0usize; n];
        for (_, v) in self.edges() {
            indeg[v] += 1;
        }
        let mut queue: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(u) = queue.pop() {
            order.push(u);
            for &v in &self.adj[u] {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    queue.push(v);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Longest path length, for iteration-depth bounds on DAGs.
    pub fn dag_depth(&self) -> Option<usize> {
        let order = self.topological_order()?;
        let mut depth = vec![0usize; self.vertices.len()];
        for &u in order.iter().rev() {
            depth[u] = self.adj[u].iter().map(|&v| depth[v] + 1).max().unwrap_or(0);
        }
        Some(depth.into_iter().max().unwrap_or(0))
    }

    /// Depth-`n` unravelling: vertices `(v, i)` for `i in 0..=n`, edges
    /// `((u,i),(v,i+1))`, targets lifted level-wise. The result is a DAG
    /// whose thresholds at level 0 are the `n`-step thresholds of `self`.
    pub fn unravel(&self, n: usize) -> Game {
        let name = |v: usize, i: usize| format!("{}@{}", self.vertices[v], i);
        let mut vertices = Vec::new();
        let mut targets = Vec::new();
        let mut edges = Vec::new();
        for i in 0..=n {
            for v in 0..self.vertices.len() {
                vertices.push(name(v, i));
                if self.target[v] {
                    targets.push(name(v, i));
                }
            }
        }
        for i in 0..n {
            for (u, v) in self.edges() {
                edges.push((name(u, i), name(v, i + 1)));
            }
        }
        let (g, warnings) = Game::new(vertices, edges, targets, self.lambda.clone())
            .expect("unravelling of a valid game is valid");
        debug_assert!(warnings.is_empty());
        g
    }
}

/// A position in a play: the token's vertex and Player 1's budget before WR.
/// Player 2's budget is `1 - budget1`; the sum is conserved throughout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    pub vertex: usize,
    pub budget1: Rational,
}

impl Configuration {
    pub fn new(vertex: usize, budget1: Rational) -> Result<Configuration, String> {
        if budget1 < Rational::zero() || budget1 > Rational::one() {
            return Err(format!(
                "budget {} outside [0,1]",
                rational::format_rational(&budget1)
            ));
        }
        Ok(Configuration { vertex, budget1 })
    }

    pub fn budget2(&self) -> Rational {
        Rational::one() - &self.budget1
    }
}

/// Which algorithm produced a [`ThresholdMap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Dag,
    Iterate,
    Enumerate,
    Milp,
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveMethod::Dag => "dag",
            SolveMethod::Iterate => "iterate",
            SolveMethod::Enumerate => "enumerate",
            SolveMethod::Milp => "milp",
        };
        f.write_str(s)
    }
}

/// Per-vertex threshold budgets, plus how they were computed and how exact
/// they are (`residual == 0` for the exact methods).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdMap {
    pub values: Vec<Rational>,
    pub method: SolveMethod,
    pub residual: Rational,
}

impl ThresholdMap {
    pub fn exact(values: Vec<Rational>, method: SolveMethod) -> ThresholdMap {
        ThresholdMap {
            values,
            method,
            residual: Rational::zero(),
        }
    }

    pub fn is_exact(&self) -> bool {
        self.residual.is_zero()
    }

    pub fn get(&self, v: usize) -> &Rational {
        &self.values[v]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateViolation {
    pub vertex: String,
    pub problem: String,
}

/// Checks a user-supplied candidate value map against a game: every vertex
/// present, every value in [0,1]. Returns canonical-order values on success.
pub fn validate_candidate(
    values: &BTreeMap<String, Rational>,
    game: &Game,
) -> Result<Vec<Rational>, Vec<CandidateViolation>> {
    let mut violations = Vec::new();
    let mut out = Vec::with_capacity(game.vertex_count());
    for v in 0..game.vertex_count() {
        let name = game.vertex_name(v);
        match values.get(name) {
            None => violations.push(CandidateViolation {
                vertex: name.to_string(),
                problem: "missing value".to_string(),
            }),
            Some(x) if *x < Rational::zero() || *x > Rational::one() => {
                violations.push(CandidateViolation {
                    vertex: name.to_string(),
                    problem: format!("value {} outside [0,1]", rational::format_rational(x)),
                });
            }
            Some(x) => out.push(x.clone()),
        }
    }
    for name in values.keys() {
        if game.vertex_index(name).is_none() {
            violations.push(CandidateViolation {
                vertex: name.clone(),
                problem: "not a game vertex".to_string(),
            });
        }
    }
    if violations.is_empty() {
        Ok(out)
    } else {
        Err(violations)
    }
}

/// Candidate-value file: `{"values":{"v0":"1","v1":"1/2"}}`.
pub fn parse_candidate_file(text: &str) -> Result<BTreeMap<String, Rational>, GameError> {
    #[derive(Deserialize)]
    struct CandidateFile {
        values: BTreeMap<String, String>,
    }
    let file: CandidateFile =
        serde_json::from_str(text).map_err(|e| GameError::Syntax(e.to_string()))?;
    let mut out = BTreeMap::new();
    for (k, v) in file.values {
        out.insert(k, parse_rational(&v)?);
    }
    Ok(out)
}
