//! Brute-force grid evaluation of the support functional objective.
//!
//! Independent of the optimizer: it enumerates candidate distributions and
//! keeps the best objective value, so the result is always a lower bound on the
//! true maximum.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::Theta;
use crate::error::{Error, Result};
use crate::tensor::{Point, Support, Tensor};

/// Largest support handled by the dense simplex grid.
pub const DENSE_GRID_MAX_SUPPORT: usize = 6;

/// Coppersmith–Winograd supports whose symmetric distributions form a
/// one-parameter family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymmetricFamily {
    /// `cw_q`: the symmetric distribution is uniform.
    SmallCw(usize),
    /// `CW_q`: mass `x` on inner points and `1/3 - qx` on outer ones.
    BigCw(usize),
}

impl SymmetricFamily {
    /// Recognizes `cw_q` (`q >= 1`) and `CW_q` (`q >= 1`) supports in their standard labeling.
    pub fn detect(support: &Support) -> Option<Self> {
        let [n1, n2, n3] = support.dims();
        if n1 != n2 || n2 != n3 || n1 < 2 {
            return None;
        }
        let same = |t: Result<Tensor>| t.map(|t| &t.support() == support).unwrap_or(false);
        if n1 >= 3 && same(Tensor::big_cw(n1 - 2)) {
            return Some(SymmetricFamily::BigCw(n1 - 2));
        }
        if same(Tensor::cw(n1 - 1)) {
            return Some(SymmetricFamily::SmallCw(n1 - 1));
        }
        None
    }
}

/// Objective evaluated directly from a point → mass map.
fn objective(points: &[Point], mass: &[f64], theta: [f64; 3]) -> f64 {
    let mut total = 0.0;
    for a in 0..3 {
        if theta[a] == 0.0 {
            continue;
        }
        let mut marg: BTreeMap<usize, f64> = BTreeMap::new();
        for (p, &m) in points.iter().zip(mass) {
            *marg.entry(p[a]).or_default() += m;
        }
        let h: f64 = marg.values().filter(|&&m| m > 0.0).map(|&m| -m * m.log2()).sum();
        total += theta[a] * h;
    }
    total
}

/// Grid maximum of the objective.
///
/// Uses the one-parameter symmetric family when the support is a
/// Coppersmith–Winograd support, and otherwise the dense grid of all
/// distributions with denominator `resolution` (support size at most
/// [`DENSE_GRID_MAX_SUPPORT`]).
pub fn rho_grid_oracle(support: &Support, theta: Theta, resolution: usize) -> Result<f64> {
    if resolution == 0 {
        return Err(Error::invalid("resolution must be positive"));
    }
    match SymmetricFamily::detect(support) {
        Some(family) => Ok(symmetric_grid(support, family, theta, resolution)),
        None => rho_grid_oracle_dense(support, theta, resolution),
    }
}

fn symmetric_grid(support: &Support, family: SymmetricFamily, theta: Theta, resolution: usize) -> f64 {
    let points = support.points();
    let th = theta.weights();
    match family {
        SymmetricFamily::SmallCw(_) => {
            let uniform = vec![1.0 / points.len() as f64; points.len()];
            objective(points, &uniform, th)
        }
        SymmetricFamily::BigCw(q) => {
            let outer = q + 1;
            let is_outer = |p: &Point| p.contains(&outer);
            let x_max = 1.0 / (3.0 * q as f64);
            (0..=resolution)
                .into_par_iter()
                .map(|step| {
                    let x = x_max * step as f64 / resolution as f64;
                    let y = (1.0 / 3.0 - q as f64 * x).max(0.0);
                    let mass: Vec<f64> = points.iter().map(|p| if is_outer(p) { y } else { x }).collect();
                    objective(points, &mass, th)
                })
                .reduce(|| f64::NEG_INFINITY, f64::max)
        }
    }
}

/// Dense simplex grid over all compositions of `resolution` into `|support|` parts.
pub fn rho_grid_oracle_dense(support: &Support, theta: Theta, resolution: usize) -> Result<f64> {
    let n = support.len();
    if n > DENSE_GRID_MAX_SUPPORT {
        return Err(Error::invalid(format!(
            "dense grid oracle handles supports of size <= {DENSE_GRID_MAX_SUPPORT}, got {n}"
        )));
    }
    if resolution == 0 {
        return Err(Error::invalid("resolution must be positive"));
    }
    // compact coordinates: at most n distinct values per leg
    let mut labels = [[0usize; DENSE_GRID_MAX_SUPPORT]; 3];
    let mut width = [0usize; 3];
    for a in 0..3 {
        let mut seen: Vec<usize> = support.points().iter().map(|p| p[a]).collect();
        seen.sort_unstable();
        seen.dedup();
        width[a] = seen.len();
        for (x, p) in support.points().iter().enumerate() {
            labels[a][x] = seen.binary_search(&p[a]).expect("coordinate present");
        }
    }
    let r = resolution;
    // c log2 c for integer counts
    let clog: Vec<f64> = (0..=r).map(|c| if c == 0 { 0.0 } else { c as f64 * (c as f64).log2() }).collect();
    let th = theta.weights();
    let log_r = (r as f64).log2();
    let inv_r = 1.0 / r as f64;

    let score = |counts: &[usize]| -> f64 {
        let mut total = 0.0;
        for a in 0..3 {
            if th[a] == 0.0 {
                continue;
            }
            let mut m = [0usize; DENSE_GRID_MAX_SUPPORT];
            for (x, &c) in counts.iter().enumerate() {
                m[labels[a][x]] += c;
            }
            let s: f64 = m[..width[a]].iter().map(|&c| clog[c]).sum();
            // H = log2 r - (1/r) Σ c log2 c
            total += th[a] * (log_r - inv_r * s);
        }
        total
    };

    if n == 1 {
        return Ok(score(&[r]));
    }
    let best = (0..=r)
        .into_par_iter()
        .map(|first| {
            let mut counts = vec![0usize; n];
            counts[0] = first;
            let mut best = f64::NEG_INFINITY;
            enumerate(&mut counts, 1, r - first, &mut |c| best = best.max(score(c)));
            best
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(best)
}

/// Visits every assignment of `left` units to `counts[idx..]`.
fn enumerate(counts: &mut [usize], idx: usize, left: usize, visit: &mut impl FnMut(&[usize])) {
    if idx + 1 == counts.len() {
        counts[idx] = left;
        visit(counts);
        return;
    }
    for c in 0..=left {
        counts[idx] = c;
        enumerate(counts, idx + 1, left - c, visit);
    }
}
