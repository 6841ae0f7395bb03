//! Free diagonals in tensor supports.
//!
//! A free diagonal `D ⊆ S` has pairwise distinct coordinates on every leg and
//! meets nothing else of `S` inside the box `π1(D) × π2(D) × π3(D)`. Zeroing
//! every slice outside that box restricts the tensor monomially onto a diagonal
//! of size `|D|`, so the largest free diagonal lower-bounds the monomial
//! subrank.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::{Point, Support, Tensor, MAX_ENTRIES};

/// Default node budget for [`max_free_diagonal`].
pub const DEFAULT_NODE_BUDGET: u64 = 100_000_000;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Diagonal {
    pub points: Vec<Point>,
}

impl Diagonal {
    pub fn new(points: Vec<Point>) -> Self {
        Diagonal { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Pairwise distinct in every coordinate.
    pub fn is_diagonal(&self) -> bool {
        let pts = &self.points;
        (0..pts.len()).all(|x| (x + 1..pts.len()).all(|y| (0..3).all(|a| pts[x][a] != pts[y][a])))
    }
}

/// Checks that `d` is a free diagonal of `s`.
pub fn is_free_diagonal(s: &Support, d: &Diagonal) -> Result<bool> {
    if let Some(p) = d.points.iter().find(|p| !s.contains(p)) {
        return Err(Error::invalid(format!("diagonal point {p:?} is not in the support")));
    }
    if !d.is_diagonal() {
        return Ok(false);
    }
    let in_proj = |a: usize, c: usize| d.points.iter().any(|p| p[a] == c);
    let boxed = s
        .points()
        .iter()
        .filter(|p| (0..3).all(|a| in_proj(a, p[a])))
        .count();
    Ok(boxed == d.len())
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagonalSearch {
    pub size: usize,
    pub witness: Diagonal,
    /// True iff the search tree was exhausted within the budget.
    pub exact: bool,
    pub nodes: u64,
}

struct Search<'a> {
    points: &'a [Point],
    /// support point indices by leg and coordinate
    by_coord: [Vec<Vec<usize>>; 3],
    /// owner[a][c]: index of the chosen point using coordinate c on leg a
    owner: [Vec<Option<usize>>; 3],
    chosen: Vec<usize>,
    best: Vec<usize>,
    nodes: u64,
    budget: u64,
    aborted: bool,
    /// scratch marks for the bound, one per leg
    seen: [Vec<u64>; 3],
    stamp: u64,
}

impl<'a> Search<'a> {
    fn new(s: &'a Support, budget: u64) -> Self {
        let dims = s.dims();
        let mut by_coord = [0, 1, 2].map(|a| vec![Vec::new(); dims[a]]);
        for (x, p) in s.points().iter().enumerate() {
            for a in 0..3 {
                by_coord[a][p[a]].push(x);
            }
        }
        Search {
            points: s.points(),
            by_coord,
            owner: [0, 1, 2].map(|a| vec![None; dims[a]]),
            chosen: Vec::new(),
            best: Vec::new(),
            nodes: 0,
            budget,
            aborted: false,
            seen: [0, 1, 2].map(|a| vec![0; dims[a]]),
            stamp: 0,
        }
    }

    fn coords_free(&self, x: usize) -> bool {
        let p = &self.points[x];
        (0..3).all(|a| self.owner[a][p[a]].is_none())
    }

    /// With `x` tentatively owning its coordinates, no other support point
    /// touching one of them may fall inside the box.
    fn keeps_free(&self, x: usize) -> bool {
        let p = self.points[x];
        let owned = |a: usize, c: usize| c == p[a] || self.owner[a][c].is_some();
        for a in 0..3 {
            for &y in &self.by_coord[a][p[a]] {
                if y == x {
                    continue;
                }
                let r = &self.points[y];
                if (0..3).all(|b| owned(b, r[b])) {
                    return false;
                }
            }
        }
        true
    }

    fn set(&mut self, x: usize, on: bool) {
        let p = self.points[x];
        for a in 0..3 {
            self.owner[a][p[a]] = on.then_some(x);
        }
        if on {
            self.chosen.push(x);
        } else {
            self.chosen.pop();
        }
    }

    /// Current size plus, minimized over legs, the number of distinct unused
    /// coordinates among still-addable points.
    fn bound(&mut self, from: usize) -> usize {
        self.stamp += 1;
        let mut distinct = [0usize; 3];
        let mut candidates = 0;
        for x in from..self.points.len() {
            if !self.coords_free(x) {
                continue;
            }
            candidates += 1;
            let p = self.points[x];
            for a in 0..3 {
                if self.seen[a][p[a]] != self.stamp {
                    self.seen[a][p[a]] = self.stamp;
                    distinct[a] += 1;
                }
            }
        }
        self.chosen.len() + distinct.into_iter().min().unwrap_or(0).min(candidates)
    }

    fn run(&mut self, from: usize) {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.aborted = true;
            return;
        }
        if self.chosen.len() > self.best.len() {
            self.best = self.chosen.clone();
        }
        if self.bound(from) <= self.best.len() {
            return;
        }
        for x in from..self.points.len() {
            if self.aborted {
                return;
            }
            if !self.coords_free(x) || !self.keeps_free(x) {
                continue;
            }
            self.set(x, true);
            self.run(x + 1);
            self.set(x, false);
            if self.bound(x + 1) <= self.best.len() {
                return;
            }
        }
    }
}

/// Branch-and-bound search for a largest free diagonal.
///
/// Points are taken in lexicographic order. Free diagonals are closed under
/// taking subsets, so each branch only extends a free diagonal by one point.
pub fn max_free_diagonal(s: &Support, node_budget: u64) -> DiagonalSearch {
    let mut search = Search::new(s, node_budget.max(1));
    search.run(0);
    let witness = Diagonal::new(search.best.iter().map(|&x| s.points()[x]).collect());
    DiagonalSearch {
        size: witness.len(),
        witness,
        exact: !search.aborted,
        nodes: search.nodes.min(node_budget.max(1)),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PowerDiagonal {
    pub power: u32,
    pub size: usize,
    /// `log2(size) / power`, a lower bound on `log2` of the asymptotic monomial subrank.
    pub per_copy_rate: f64,
    pub exact: bool,
    pub witness: Diagonal,
    pub nodes: u64,
}

/// Largest free diagonal of `supp(t^{⊗k})`.
pub fn monomial_subrank_power(t: &Tensor, k: u32, node_budget: u64) -> Result<PowerDiagonal> {
    if k == 0 {
        return Err(Error::invalid("power must be at least 1"));
    }
    let base = t.support();
    let total = (base.len() as f64).powi(k as i32);
    if total > MAX_ENTRIES as f64 {
        return Err(Error::ResourceLimit(format!(
            "support of the {k}-th power would have {total:.0} points, limit {MAX_ENTRIES}"
        )));
    }
    let support = base.power(k)?;
    let found = max_free_diagonal(&support, node_budget);
    Ok(PowerDiagonal {
        power: k,
        size: found.size,
        per_copy_rate: (found.size as f64).log2() / f64::from(k),
        exact: found.exact,
        witness: found.witness,
        nodes: found.nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn supp(t: Tensor) -> Support {
        t.support()
    }

    #[test]
    fn free_diagonal_checks() {
        let u = supp(Tensor::unit(4).unwrap());
        assert!(is_free_diagonal(&u, &Diagonal::new(u.points().to_vec())).unwrap());

        let w = supp(Tensor::w_state());
        assert!(!is_free_diagonal(&w, &Diagonal::new(vec![[0, 0, 1], [1, 0, 0]])).unwrap());

        let cw2 = supp(Tensor::cw(2).unwrap());
        assert!(is_free_diagonal(&cw2, &Diagonal::new(vec![[0, 1, 1], [2, 2, 0]])).unwrap());
        // shares leg-3 coordinate 1
        assert!(!is_free_diagonal(&cw2, &Diagonal::new(vec![[0, 1, 1], [1, 0, 1]])).unwrap());

        assert!(is_free_diagonal(&w, &Diagonal::new(vec![[1, 1, 1]])).is_err());
    }

    #[test]
    fn box_with_extra_point_is_not_free() {
        // (0,0,0) and (1,1,1) are diagonal, but (0,1,1) lies in their box
        let s = Support::new([2, 2, 2], [[0, 0, 0], [1, 1, 1], [0, 1, 1]]).unwrap();
        assert!(!is_free_diagonal(&s, &Diagonal::new(vec![[0, 0, 0], [1, 1, 1]])).unwrap());
        let found = max_free_diagonal(&s, 1000);
        assert_eq!(found.size, 1);
    }

    #[test]
    fn searches() {
        for n in 2..=6 {
            let r = max_free_diagonal(&supp(Tensor::unit(n).unwrap()), DEFAULT_NODE_BUDGET);
            assert_eq!((r.size, r.exact), (n, true));
        }
        // checked against exhaustive enumeration of all subsets
        let r = max_free_diagonal(&supp(Tensor::matmul(2, 2, 2).unwrap()), DEFAULT_NODE_BUDGET);
        assert_eq!((r.size, r.exact), (2, true));
        let r = max_free_diagonal(&supp(Tensor::w_state()), DEFAULT_NODE_BUDGET);
        assert_eq!((r.size, r.exact), (1, true));
        let r = max_free_diagonal(&supp(Tensor::cw(2).unwrap()), DEFAULT_NODE_BUDGET);
        assert_eq!((r.size, r.exact), (2, true));
    }

    #[test]
    fn witnesses_are_free() {
        for t in [Tensor::matmul(2, 2, 2).unwrap(), Tensor::big_cw(2).unwrap(), Tensor::group_z3()] {
            let s = t.support();
            let r = max_free_diagonal(&s, DEFAULT_NODE_BUDGET);
            assert!(is_free_diagonal(&s, &r.witness).unwrap());
        }
    }

    #[test]
    fn tiny_budget_is_not_exact() {
        let s = supp(Tensor::matmul(2, 2, 2).unwrap());
        let r = max_free_diagonal(&s, 2);
        assert!(!r.exact);
        assert!(is_free_diagonal(&s, &r.witness).unwrap());
    }

    #[test]
    fn powers() {
        let r = monomial_subrank_power(&Tensor::unit(2).unwrap(), 3, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!((r.size, r.exact), (8, true));
        assert_eq!(r.per_copy_rate, 1.0);
        let r = monomial_subrank_power(&Tensor::cw(2).unwrap(), 1, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(r.size, 2);
        assert!(monomial_subrank_power(&Tensor::cw(7).unwrap(), 9, 10).is_err());
    }
}
