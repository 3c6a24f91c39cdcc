//! Backtracking search for AT/AF colourings: each triad gets exactly one AT,
//! each orthogonal pair at most one.

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::KsSet;
use crate::colouring::Colour;

/// Summary of the search tree, enough to replay and compare runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchCertificate {
    /// Branch decisions as `(ray, assigned AT)` in the order they were made.
    pub decisions: Vec<(usize, bool)>,
    /// Depth of the decision stack at every conflict.
    pub conflict_depths: Vec<usize>,
    /// SHA-256 over the decision and conflict trace, hex encoded.
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ColourabilityVerdict {
    pub satisfiable: bool,
    pub assignment: Option<Vec<Colour>>,
    pub nodes_explored: u64,
    pub certificate: SearchCertificate,
}

struct Solver<'a> {
    n: usize,
    triads: &'a [(usize, usize, usize)],
    ray_triads: Vec<Vec<usize>>,
    neighbours: Vec<Vec<usize>>,
    /// Tiebreak rank of each ray; lower goes first.
    rank: Vec<usize>,
    nodes: u64,
    decisions: Vec<(usize, bool)>,
    conflict_depths: Vec<usize>,
    hasher: Sha256,
}

type State = Vec<Option<bool>>;

impl<'a> Solver<'a> {
    fn new(ks: &'a KsSet, order: &[usize]) -> Self {
        let n = ks.rays.len();
        let mut ray_triads = vec![Vec::new(); n];
        for (t, &(i, j, k)) in ks.triads.iter().enumerate() {
            for r in [i, j, k] {
                ray_triads[r].push(t);
            }
        }
        let mut neighbours = vec![Vec::new(); n];
        for &(i, j) in &ks.pairs {
            neighbours[i].push(j);
            neighbours[j].push(i);
        }
        let mut rank = vec![0; n];
        for (pos, &r) in order.iter().enumerate() {
            rank[r] = pos;
        }
        Solver {
            n,
            triads: &ks.triads,
            ray_triads,
            neighbours,
            rank,
            nodes: 0,
            decisions: Vec::new(),
            conflict_depths: Vec::new(),
            hasher: Sha256::new(),
        }
    }

    /// Unit propagation to a fixed point; false on conflict.
    fn propagate(&self, state: &mut State, start: usize) -> bool {
        let mut queue = vec![start];
        while let Some(r) = queue.pop() {
            let value = state[r].expect("queued rays are assigned");
            if value {
                for &m in &self.neighbours[r] {
                    match state[m] {
                        Some(true) => return false,
                        Some(false) => {}
                        None => {
                            state[m] = Some(false);
                            queue.push(m);
                        }
                    }
                }
            }
            for &t in &self.ray_triads[r] {
                let (i, j, k) = self.triads[t];
                let members = [i, j, k];
                let trues = members.iter().filter(|&&m| state[m] == Some(true)).count();
                let open: Vec<usize> = members.iter().copied().filter(|&m| state[m].is_none()).collect();
                match (trues, open.len()) {
                    (t, _) if t > 1 => return false,
                    (0, 0) => return false,
                    (0, 1) => {
                        state[open[0]] = Some(true);
                        queue.push(open[0]);
                    }
                    (1, _) => {
                        for m in open {
                            state[m] = Some(false);
                            queue.push(m);
                        }
                    }
                    _ => {}
                }
            }
        }
        true
    }

    /// Unassigned ray touching the most open constraints, ties by rank.
    fn pick(&self, state: &State) -> Option<usize> {
        (0..self.n)
            .filter(|&r| state[r].is_none())
            .map(|r| {
                let open_triads = self.ray_triads[r]
                    .iter()
                    .filter(|&&t| {
                        let (i, j, k) = self.triads[t];
                        [i, j, k].iter().all(|&m| state[m] != Some(true))
                    })
                    .count();
                let open_pairs = self.neighbours[r].iter().filter(|&&m| state[m].is_none()).count();
                (r, open_triads, open_pairs)
            })
            .max_by(|a, b| {
                (a.1, a.2)
                    .cmp(&(b.1, b.2))
                    .then(self.rank[b.0].cmp(&self.rank[a.0]))
            })
            .map(|(r, ..)| r)
    }

    fn conflict(&mut self, depth: usize) {
        self.conflict_depths.push(depth);
        self.hasher.update(format!("c{depth};"));
    }

    /// Depth-first search; `on_solution` returns true to stop.
    fn search<F>(&mut self, state: State, depth: usize, on_solution: &mut F) -> bool
    where
        F: FnMut(&State) -> bool,
    {
        self.nodes += 1;
        let Some(r) = self.pick(&state) else {
            return on_solution(&state);
        };
        for value in [true, false] {
            self.decisions.push((r, value));
            self.hasher.update(format!("d{r}={};", u8::from(value)));
            let mut next = state.clone();
            next[r] = Some(value);
            if !self.propagate(&mut next, r) {
                self.nodes += 1;
                self.conflict(depth + 1);
                continue;
            }
            if self.search(next, depth + 1, on_solution) {
                return true;
            }
        }
        false
    }

    fn run<F>(&mut self, on_solution: &mut F)
    where
        F: FnMut(&State) -> bool,
    {
        self.search(vec![None; self.n], 0, on_solution);
    }

    fn certificate(self) -> (u64, SearchCertificate) {
        let digest = self
            .hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        (
            self.nodes,
            SearchCertificate {
                decisions: self.decisions,
                conflict_depths: self.conflict_depths,
                digest,
            },
        )
    }
}

fn to_colours(state: &State) -> Vec<Colour> {
    state
        .iter()
        .map(|v| if v.expect("total") { Colour::AT } else { Colour::AF })
        .collect()
}

/// Decides colourability with index order as the tiebreak.
pub fn colourability_search(ks: &KsSet) -> ColourabilityVerdict {
    let order: Vec<usize> = (0..ks.rays.len()).collect();
    colourability_search_with_order(ks, &order)
}

/// As [`colourability_search`] with ties broken by position in `order`,
/// which must be a permutation of the ray indices.
pub fn colourability_search_with_order(ks: &KsSet, order: &[usize]) -> ColourabilityVerdict {
    assert_eq!(order.len(), ks.rays.len(), "order must list every ray once");
    let mut solver = Solver::new(ks, order);
    let mut found = None;
    solver.run(&mut |s| {
        found = Some(to_colours(s));
        true
    });
    let (nodes_explored, certificate) = solver.certificate();
    ColourabilityVerdict {
        satisfiable: found.is_some(),
        assignment: found,
        nodes_explored,
        certificate,
    }
}

/// Every valid colouring, in search order.
pub fn enumerate_colourings(ks: &KsSet) -> Vec<Vec<Colour>> {
    let order: Vec<usize> = (0..ks.rays.len()).collect();
    let mut solver = Solver::new(ks, &order);
    let mut all = Vec::new();
    solver.run(&mut |s| {
        all.push(to_colours(s));
        false
    });
    all
}
