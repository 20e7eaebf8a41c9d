//! Zielonka's recursive parity game algorithm with strategy bookkeeping,
//! and extraction of proof and refutation graphs from winning strategies.
//!
//! Priorities follow the minimal-priority convention: Even wins a play iff
//! the least priority occurring infinitely often is even.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use bitvec::prelude::*;
use thiserror::Error;

use crate::graphs::{EvidenceGraph, Origin, Owner, ParityGame, Polarity};
use crate::pbes::Instance;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameSolution {
    pub won_by_even: BitVec,
    /// For every vertex owned by the player winning it: the chosen successor.
    pub strategy: Vec<Option<usize>>,
}

impl GameSolution {
    pub fn winner(&self, v: usize) -> Owner {
        if self.won_by_even[v] {
            Owner::Even
        } else {
            Owner::Odd
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("the initial vertex is not won by the player of a {0:?}")]
    WrongPolarity(Polarity),
}

struct Predecessors {
    offsets: Vec<usize>,
    data: Vec<usize>,
}

impl Predecessors {
    fn new(g: &ParityGame) -> Self {
        let mut offsets = vec![0usize; g.len() + 1];
        for succ in &g.successors {
            for &w in succ {
                offsets[w + 1] += 1;
            }
        }
        for i in 0..g.len() {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut data = vec![0; offsets[g.len()]];
        for (v, succ) in g.successors.iter().enumerate() {
            for &w in succ {
                data[fill[w]] = v;
                fill[w] += 1;
            }
        }
        Self { offsets, data }
    }

    fn of(&self, v: usize) -> &[usize] {
        &self.data[self.offsets[v]..self.offsets[v + 1]]
    }
}

struct Solver<'a> {
    g: &'a ParityGame,
    preds: Predecessors,
    won_by_even: BitVec,
    strategy: Vec<Option<usize>>,
}

impl Solver<'_> {
    fn set_winner(&mut self, v: usize, player: Owner) {
        self.won_by_even.set(v, player == Owner::Even);
    }

    /// The attractor of `player` to `target` inside `sub`. Attracted vertices
    /// of `player` remember the successor that pulled them in.
    fn attractor(&mut self, player: Owner, target: &[usize], sub: &BitSlice) -> BitVec {
        let g = self.g;
        let mut attr = bitvec![0; g.len()];
        let mut queue = VecDeque::with_capacity(target.len());
        for &v in target {
            attr.set(v, true);
            queue.push_back(v);
        }
        let mut remaining: HashMap<usize, usize> = HashMap::new();
        while let Some(v) = queue.pop_front() {
            for &u in self.preds.of(v) {
                if !sub[u] || attr[u] {
                    continue;
                }
                if g.owner[u] == player {
                    self.strategy[u] = Some(v);
                } else {
                    let left = remaining
                        .entry(u)
                        .or_insert_with(|| g.successors[u].iter().filter(|&&w| sub[w]).count());
                    *left -= 1;
                    if *left > 0 {
                        continue;
                    }
                }
                attr.set(u, true);
                queue.push_back(u);
            }
        }
        attr
    }

    fn solve(&mut self, mut sub: BitVec) {
        let g = self.g;
        loop {
            let Some(p) = sub.iter_ones().map(|v| g.priority[v]).min() else {
                return;
            };
            let player = Owner::of_priority(p);
            let opponent = player.opponent();
            let target: Vec<usize> = sub.iter_ones().filter(|&v| g.priority[v] == p).collect();
            let attr = self.attractor(player, &target, &sub);
            let rest = sub.clone() & !attr.clone();
            self.solve(rest.clone());
            let lost: Vec<usize> = rest
                .iter_ones()
                .filter(|&v| self.winner(v) == opponent)
                .collect();
            if lost.is_empty() {
                for v in attr.iter_ones().filter(|&v| sub[v]) {
                    self.set_winner(v, player);
                }
                // Vertices of the least priority may move anywhere inside
                // the subgame; take the first successor.
                for &v in &target {
                    if g.owner[v] == player {
                        self.strategy[v] = g.successors[v].iter().copied().find(|&w| sub[w]);
                    }
                }
                return;
            }
            let b = self.attractor(opponent, &lost, &sub);
            for v in b.iter_ones() {
                self.set_winner(v, opponent);
            }
            sub &= !b;
        }
    }

    fn winner(&self, v: usize) -> Owner {
        if self.won_by_even[v] {
            Owner::Even
        } else {
            Owner::Odd
        }
    }
}

/// Solves a total parity game.
pub fn zielonka(g: &ParityGame) -> GameSolution {
    let n = g.len();
    let mut solver = Solver {
        g,
        preds: Predecessors::new(g),
        won_by_even: bitvec![0; n],
        strategy: vec![None; n],
    };
    let levels = g.priority.iter().collect::<BTreeSet<_>>().len();
    // Recursion depth is bounded by the number of priorities; give deep
    // alternations a large enough stack.
    if levels > 64 {
        std::thread::scope(|s| {
            std::thread::Builder::new()
                .stack_size((levels + 64) * 64 * 1024)
                .spawn_scoped(s, || solver.solve(bitvec![1; n]))
                .expect("spawn solver thread")
                .join()
                .expect("solver thread")
        });
    } else {
        solver.solve(bitvec![1; n]);
    }
    let mut sol = GameSolution {
        won_by_even: solver.won_by_even,
        strategy: solver.strategy,
    };
    for v in 0..n {
        if g.owner[v] != sol.winner(v) {
            sol.strategy[v] = None;
        }
    }
    sol
}

/// The instance graph induced by the winning strategy of `polarity`'s
/// player from the initial vertex: the player's vertices keep their
/// strategy edge, the opponent's keep all edges, synthetic vertices are
/// collapsed and only reachable instances are kept.
pub fn extract_evidence_graph(
    g: &ParityGame,
    sol: &GameSolution,
    polarity: Polarity,
) -> Result<EvidenceGraph, SolveError> {
    let player = polarity.player();
    if sol.winner(g.initial) != player {
        return Err(SolveError::WrongPolarity(polarity));
    }
    let moves = |u: usize| -> Vec<usize> {
        if g.owner[u] == player {
            vec![sol.strategy[u].expect("winning vertices of the player have a strategy")]
        } else {
            g.successors[u].clone()
        }
    };
    let mut vertices = BTreeSet::new();
    let mut edges = BTreeSet::new();
    let mut ranks = BTreeMap::new();
    let mut seen = BTreeSet::from([g.initial]);
    let mut queue = VecDeque::from([g.initial]);
    while let Some(v) = queue.pop_front() {
        let from: &Instance = g.instance_of(v).expect("queue holds instance vertices");
        vertices.insert(from.clone());
        ranks.insert(from.variable.clone(), g.priority[v]);
        for w in g.collapse(v, &moves) {
            debug_assert_eq!(sol.winner(w), player);
            let to = g.instance_of(w).expect("collapse yields instances");
            edges.insert((from.clone(), to.clone()));
            if seen.insert(w) {
                queue.push_back(w);
            }
        }
    }
    debug_assert!(matches!(g.origin[g.initial], Origin::Instance(_)));
    Ok(EvidenceGraph {
        polarity,
        vertices,
        edges,
        ranks,
    })
}
