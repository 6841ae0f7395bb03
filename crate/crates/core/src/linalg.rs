//! Exact rank over the rationals, tensor flattenings, and the balancedness test.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{Rational, Tensor};

/// Sparse matrix with exact rational entries. Zero entries are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactMatrix {
    rows: usize,
    cols: usize,
    entries: BTreeMap<(usize, usize), Rational>,
}

impl ExactMatrix {
    pub fn new<I>(rows: usize, cols: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = ((usize, usize), Rational)>,
    {
        let mut map = BTreeMap::new();
        for ((r, c), v) in entries {
            if r >= rows || c >= cols {
                return Err(Error::invalid(format!("entry ({r},{c}) outside {rows}x{cols}")));
            }
            if !v.is_zero() {
                map.insert((r, c), v);
            }
        }
        Ok(ExactMatrix { rows, cols, entries: map })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, r: usize, c: usize) -> Option<&Rational> {
        self.entries.get(&(r, c))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &Rational)> {
        self.entries.iter()
    }
}

/// The flattening of `t` along `axis` (0-based).
///
/// Axis 0 gives the `n1 × n2·n3` matrix with entry `(i, j·n3 + k)`; axes 1 and 2
/// use row index `j` resp. `k` and pair the remaining legs in cyclic order,
/// i.e. columns `k·n1 + i` resp. `i·n2 + j`.
pub fn flatten(t: &Tensor, axis: usize) -> ExactMatrix {
    assert!(axis < 3, "axis must be 0, 1 or 2");
    let [n1, n2, n3] = t.dims();
    let (rows, cols) = match axis {
        0 => (n1, n2 * n3),
        1 => (n2, n3 * n1),
        _ => (n3, n1 * n2),
    };
    let entries = t
        .entries()
        .map(|(&[i, j, k], v)| {
            let key = match axis {
                0 => (i, j * n3 + k),
                1 => (j, k * n1 + i),
                _ => (k, i * n2 + j),
            };
            (key, v.clone())
        })
        .collect();
    ExactMatrix { rows, cols, entries }
}

/// Clears denominators row by row and drops all-zero columns.
fn integer_rows(m: &ExactMatrix) -> Vec<Vec<BigInt>> {
    let used: BTreeSet<usize> = m.entries.keys().map(|&(_, c)| c).collect();
    let col_index: BTreeMap<usize, usize> = used.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut by_row: BTreeMap<usize, Vec<(usize, &Rational)>> = BTreeMap::new();
    for (&(r, c), v) in &m.entries {
        by_row.entry(r).or_default().push((col_index[&c], v));
    }
    by_row
        .into_values()
        .map(|row| {
            let lcm = row
                .iter()
                .fold(BigInt::one(), |acc, (_, v)| acc.lcm(v.denom()));
            let mut dense = vec![BigInt::zero(); used.len()];
            for (c, v) in row {
                dense[c] = v.numer() * (&lcm / v.denom());
            }
            dense
        })
        .collect()
}

/// Rank over the rationals by fraction-free (Bareiss) elimination.
pub fn rank_exact(m: &ExactMatrix) -> usize {
    let mut a = integer_rows(m);
    let n = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut rank = 0;
    let mut prev = BigInt::one();
    for col in 0..cols {
        if rank == n {
            break;
        }
        let Some(p) = (rank..n).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        let (top, rest) = a.split_at_mut(rank + 1);
        let pivot_row = &top[rank];
        let pivot = &pivot_row[col];
        for row in rest.iter_mut() {
            let factor = std::mem::take(&mut row[col]);
            for j in col + 1..cols {
                let v = pivot * &row[j] - &factor * &pivot_row[j];
                // Sylvester's identity makes this division exact
                row[j] = v / &prev;
            }
        }
        prev = pivot_row[col].clone();
        rank += 1;
    }
    rank
}

/// Ranks of the three flattenings.
pub fn flattening_ranks(t: &Tensor) -> [usize; 3] {
    [0, 1, 2].map(|axis| rank_exact(&flatten(t, axis)))
}

/// Largest flattening rank; a lower bound on the asymptotic rank of `t`.
pub fn max_flattening_rank(t: &Tensor) -> usize {
    flattening_ranks(t).into_iter().max().unwrap_or(0)
}

/// `t_axis(v)`: the `n × n` matrix `Σ_x v_x t[.. x ..]` contracting leg `axis` with `v`.
fn contract(t: &Tensor, axis: usize, v: &[BigInt]) -> ExactMatrix {
    let mut acc: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
    for (p, c) in t.entries() {
        let (x, key) = match axis {
            0 => (p[0], (p[1], p[2])),
            1 => (p[1], (p[2], p[0])),
            _ => (p[2], (p[0], p[1])),
        };
        *acc.entry(key).or_insert_with(Rational::zero) += c * Rational::from_integer(v[x].clone());
    }
    let dims = t.dims();
    let (rows, cols) = match axis {
        0 => (dims[1], dims[2]),
        1 => (dims[2], dims[0]),
        _ => (dims[0], dims[1]),
    };
    acc.retain(|_, c| !c.is_zero());
    ExactMatrix { rows, cols, entries: acc }
}

/// Randomized test for balanced (1-generic) cubic tensors.
///
/// Requires full-rank flattenings, then looks for a random integer vector `v`
/// with `t_i(v)` invertible on each leg, trying up to `trials` vectors per leg.
/// A `true` answer is always correct; `false` may be a false negative when
/// every trial on some leg hit the determinant's zero set.
pub fn is_balanced(t: &Tensor, trials: usize, seed: u64) -> Result<bool> {
    let [n1, n2, n3] = t.dims();
    if n1 != n2 || n2 != n3 {
        return Err(Error::invalid(format!("balancedness needs cubic dims, got {:?}", t.dims())));
    }
    if trials == 0 {
        return Err(Error::invalid("trials must be positive"));
    }
    let n = n1;
    if flattening_ranks(t).iter().any(|&r| r != n) {
        return Ok(false);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // a nonzero polynomial of degree n vanishes with probability <= n / (2R+1)
    let range = (8 * n as i64).max(1000);
    for axis in 0..3 {
        let found = (0..trials).any(|_| {
            let v: Vec<BigInt> = (0..n).map(|_| BigInt::from(rng.random_range(-range..=range))).collect();
            rank_exact(&contract(t, axis, &v)) == n
        });
        if !found {
            log::warn!("no full-rank slice found on leg {} after {trials} trials; reporting not balanced", axis + 1);
            return Ok(false);
        }
    }
    Ok(true)
}
