//! Exact sparse 3-tensors and the named tensor families.
//!
//! Indices are 0-based on every leg. Composite indices produced by Kronecker
//! products use row-major pairing: `(i_s, i_t) -> i_s * n_t + i_t`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

/// An index triple `(i, j, k)`.
pub type Point = [usize; 3];

/// Largest dimension allowed on a single leg of a constructed tensor.
pub const MAX_AXIS_DIM: usize = 1 << 20;
/// Largest number of stored entries (or support points) of a constructed tensor.
pub const MAX_ENTRIES: usize = 1 << 22;

/// A 3-tensor with exact rational coefficients in a fixed basis.
///
/// Immutable after construction. Tensors of the form `u ⊗ v ⊗ w` and the zero
/// tensor are rejected.
#[derive(Clone, PartialEq, Eq)]
pub struct Tensor {
    dims: [usize; 3],
    entries: BTreeMap<Point, Rational>,
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("dims", &self.dims)
            .field("nnz", &self.entries.len())
            .finish()
    }
}

fn one() -> Rational {
    Rational::one()
}

fn check_dims(dims: [usize; 3]) -> Result<()> {
    if dims.contains(&0) {
        return Err(Error::invalid(format!("dimensions must be positive, got {dims:?}")));
    }
    if dims.iter().any(|&d| d > MAX_AXIS_DIM) {
        return Err(Error::ResourceLimit(format!(
            "dimensions {dims:?} exceed the per-leg limit {MAX_AXIS_DIM}"
        )));
    }
    Ok(())
}

fn in_range(p: &Point, dims: &[usize; 3]) -> bool {
    p.iter().zip(dims).all(|(i, n)| i < n)
}

impl Tensor {
    /// Builds a tensor from explicit entries.
    ///
    /// Rejects out-of-range indices, duplicate keys, zero coefficients, the
    /// zero tensor and simple tensors.
    pub fn new<I>(dims: [usize; 3], entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Point, Rational)>,
    {
        check_dims(dims)?;
        let mut map = BTreeMap::new();
        for (p, c) in entries {
            if !in_range(&p, &dims) {
                return Err(Error::invalid(format!("index {p:?} out of range for dims {dims:?}")));
            }
            if c.is_zero() {
                return Err(Error::invalid(format!("zero coefficient stored at {p:?}")));
            }
            if map.insert(p, c).is_some() {
                return Err(Error::invalid(format!("duplicate entry at {p:?}")));
            }
            if map.len() > MAX_ENTRIES {
                return Err(Error::ResourceLimit(format!("more than {MAX_ENTRIES} entries")));
            }
        }
        Self::from_map(dims, map)
    }

    fn from_map(dims: [usize; 3], entries: BTreeMap<Point, Rational>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("the zero tensor is not allowed"));
        }
        let t = Tensor { dims, entries };
        if t.is_simple() {
            return Err(Error::invalid("simple tensors u⊗v⊗w are not allowed"));
        }
        Ok(t)
    }

    fn ones<I: IntoIterator<Item = Point>>(dims: [usize; 3], points: I) -> Result<Self> {
        Self::new(dims, points.into_iter().map(|p| (p, one())))
    }

    /// A nonzero tensor is simple iff its support is a full box and every
    /// entry factors through the three lines of the first entry.
    fn is_simple(&self) -> bool {
        let mut sizes = [0usize; 3];
        for a in 0..3 {
            let mut seen: Vec<usize> = self.entries.keys().map(|p| p[a]).collect();
            seen.sort_unstable();
            seen.dedup();
            sizes[a] = seen.len();
        }
        if sizes.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n)) != Some(self.entries.len()) {
            return false;
        }
        let (&[i0, j0, k0], c0) = self.entries.iter().next().expect("nonzero tensor");
        let c0sq = c0 * c0;
        self.entries.iter().all(|(&[i, j, k], c)| {
            let (Some(u), Some(v), Some(w)) = (
                self.entries.get(&[i, j0, k0]),
                self.entries.get(&[i0, j, k0]),
                self.entries.get(&[i0, j0, k]),
            ) else {
                return false;
            };
            c * &c0sq == u * v * w
        })
    }

    /// The unit tensor `⟨n⟩ = Σ e_{i,i,i}`.
    pub fn unit(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("unit tensor needs n >= 2, got {n}")));
        }
        Self::ones([n, n, n], (0..n).map(|i| [i, i, i]))
    }

    /// The matrix multiplication tensor `⟨a,b,c⟩` on dims `(ab, bc, ca)`.
    pub fn matmul(a: usize, b: usize, c: usize) -> Result<Self> {
        if a == 0 || b == 0 || c == 0 {
            return Err(Error::invalid("matmul sizes must be positive"));
        }
        if a * b * c < 2 {
            return Err(Error::invalid("⟨1,1,1⟩ is a simple tensor"));
        }
        let mut points = Vec::with_capacity(a * b * c);
        for i in 0..a {
            for j in 0..b {
                for k in 0..c {
                    points.push([i * b + j, j * c + k, k * a + i]);
                }
            }
        }
        Self::ones([a * b, b * c, c * a], points)
    }

    /// The small Coppersmith–Winograd tensor `cw_q`.
    pub fn cw(q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::invalid("cw_q needs q >= 1"));
        }
        Self::ones([q + 1; 3], cw_points(q))
    }

    /// The big Coppersmith–Winograd tensor `CW_q`.
    pub fn big_cw(q: usize) -> Result<Self> {
        let n = q + 1;
        let outer = [[0, 0, n], [0, n, 0], [n, 0, 0]];
        Self::ones([q + 2; 3], cw_points(q).chain(outer))
    }

    /// The reduced polynomial multiplication tensor on `m` indices:
    /// support `{(i, j, i+j) : i + j <= m - 1}`.
    pub fn reduced_polymul(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid(format!("reduced polynomial tensor needs m >= 2, got {m}")));
        }
        let points = (0..m).flat_map(|i| (0..m - i).map(move |j| [i, j, i + j]));
        Self::ones([m; 3], points)
    }

    /// `W = e_{0,0,1} + e_{0,1,0} + e_{1,0,0}`.
    pub fn w_state() -> Self {
        Self::ones([2; 3], [[0, 0, 1], [0, 1, 0], [1, 0, 0]]).expect("W is not simple")
    }

    /// Structure tensor of the group algebra of `Z/3Z`: support `a + b ≡ c (mod 3)`.
    pub fn group_z3() -> Self {
        let points = (0..3).flat_map(|a| (0..3).map(move |b| [a, b, (a + b) % 3]));
        Self::ones([3; 3], points).expect("group tensor is not simple")
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, p: &Point) -> Option<&Rational> {
        self.entries.get(p)
    }

    /// Entries in lexicographic index order.
    pub fn entries(&self) -> impl ExactSizeIterator<Item = (&Point, &Rational)> {
        self.entries.iter()
    }

    pub fn support(&self) -> Support {
        Support {
            dims: self.dims,
            points: self.entries.keys().copied().collect(),
        }
    }

    /// Kronecker product with row-major index pairing.
    pub fn kron(&self, other: &Tensor) -> Result<Tensor> {
        let dims = kron_dims(self.dims, other.dims)?;
        check_entry_count(self.nnz(), other.nnz())?;
        let mut entries = BTreeMap::new();
        for (p, a) in &self.entries {
            for (r, b) in &other.entries {
                let c = a * b;
                entries.insert(pair(p, r, &other.dims), c);
            }
        }
        Tensor::from_map(dims, entries)
    }

    /// Direct sum; entries of `other` are shifted by the dims of `self`.
    pub fn dsum(&self, other: &Tensor) -> Result<Tensor> {
        let dims = [0, 1, 2].map(|a| self.dims[a] + other.dims[a]);
        check_dims(dims)?;
        let shifted = other
            .entries
            .iter()
            .map(|(p, c)| ([0, 1, 2].map(|a| p[a] + self.dims[a]), c.clone()));
        let entries = self.entries.clone().into_iter().chain(shifted).collect();
        Tensor::from_map(dims, entries)
    }

    /// Applies the cyclic leg permutation `(1,2,3)`: the entry at `(i,j,k)` moves to `(k,i,j)`.
    pub fn rotate_legs(&self) -> Tensor {
        Tensor {
            dims: [self.dims[2], self.dims[0], self.dims[1]],
            entries: self
                .entries
                .iter()
                .map(|(p, c)| ([p[2], p[0], p[1]], c.clone()))
                .collect(),
        }
    }

    /// Swaps legs `a` and `b`.
    pub fn swap_legs(&self, a: usize, b: usize) -> Tensor {
        let mut dims = self.dims;
        dims.swap(a, b);
        Tensor {
            dims,
            entries: self
                .entries
                .iter()
                .map(|(p, c)| {
                    let mut p = *p;
                    p.swap(a, b);
                    (p, c.clone())
                })
                .collect(),
        }
    }

    /// `t ⊗ ((1,2,3)·t) ⊗ ((1,2,3)²·t)`.
    pub fn cyc(&self) -> Result<Tensor> {
        let r1 = self.rotate_legs();
        let r2 = r1.rotate_legs();
        self.kron(&r1)?.kron(&r2)
    }

    /// True if the entry map is unchanged by the cyclic leg permutation.
    pub fn is_cyclically_symmetric(&self) -> bool {
        &self.rotate_legs() == self
    }
}

fn cw_points(q: usize) -> impl Iterator<Item = Point> {
    (1..=q).flat_map(|i| [[0, i, i], [i, 0, i], [i, i, 0]])
}

fn kron_dims(a: [usize; 3], b: [usize; 3]) -> Result<[usize; 3]> {
    let mut dims = [0; 3];
    for axis in 0..3 {
        dims[axis] = a[axis]
            .checked_mul(b[axis])
            .filter(|&d| d <= MAX_AXIS_DIM)
            .ok_or_else(|| {
                Error::ResourceLimit(format!(
                    "Kronecker product of dims {a:?} and {b:?} exceeds the per-leg limit {MAX_AXIS_DIM}"
                ))
            })?;
    }
    Ok(dims)
}

fn check_entry_count(a: usize, b: usize) -> Result<()> {
    match a.checked_mul(b) {
        Some(n) if n <= MAX_ENTRIES => Ok(()),
        _ => Err(Error::ResourceLimit(format!(
            "Kronecker product would hold {a}·{b} entries, limit {MAX_ENTRIES}"
        ))),
    }
}

fn pair(p: &Point, r: &Point, inner: &[usize; 3]) -> Point {
    [0, 1, 2].map(|a| p[a] * inner[a] + r[a])
}

/// The nonzero pattern of a tensor in its given basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Support {
    dims: [usize; 3],
    points: Vec<Point>,
}

impl Support {
    /// Sorts and deduplicates `points`; fails on an empty set or out-of-range points.
    pub fn new(dims: [usize; 3], points: impl IntoIterator<Item = Point>) -> Result<Self> {
        check_dims(dims)?;
        let set: BTreeSet<Point> = points.into_iter().collect();
        if set.is_empty() {
            return Err(Error::invalid("support must be nonempty"));
        }
        if let Some(p) = set.iter().find(|p| !in_range(p, &dims)) {
            return Err(Error::invalid(format!("point {p:?} out of range for dims {dims:?}")));
        }
        Ok(Support {
            dims,
            points: set.into_iter().collect(),
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    /// Points in lexicographic order.
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.points.binary_search(p).is_ok()
    }

    /// Support of the Kronecker product of the underlying tensors.
    pub fn kron(&self, other: &Support) -> Result<Support> {
        let dims = kron_dims(self.dims, other.dims)?;
        check_entry_count(self.len(), other.len())?;
        let mut points = Vec::with_capacity(self.len() * other.len());
        for p in &self.points {
            for r in &other.points {
                points.push(pair(p, r, &other.dims));
            }
        }
        points.sort_unstable();
        Ok(Support { dims, points })
    }

    /// The `k`-th Kronecker power.
    pub fn power(&self, k: u32) -> Result<Support> {
        if k == 0 {
            return Err(Error::invalid("power must be at least 1"));
        }
        let mut acc = self.clone();
        for _ in 1..k {
            acc = acc.kron(self)?;
        }
        Ok(acc)
    }
}
