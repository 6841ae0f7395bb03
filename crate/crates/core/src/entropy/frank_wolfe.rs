//! Pairwise Frank–Wolfe ascent for `max_P Σ_a θ_a H(P_a)` on the simplex over a support.
//!
//! The objective is concave in `P`, so the Frank–Wolfe gap
//! `max_x g(x) - Σ_x P(x) g(x)` (with `g` the gradient) bounds the distance to
//! the optimum and is used as the stopping rule.

use rayon::prelude::*;

use super::{xlogx, RhoResult, SupportDistribution, Theta};
use crate::error::{Error, Result};
use crate::tensor::{Point, Support};

#[derive(Clone, Copy, Debug)]
pub struct RhoOptions {
    /// Stop once the duality gap is at most this.
    pub tol: f64,
    pub max_iter: u64,
}

impl Default for RhoOptions {
    fn default() -> Self {
        RhoOptions {
            tol: 1e-10,
            max_iter: 1_000_000,
        }
    }
}

impl RhoOptions {
    pub fn with_tol(tol: f64) -> Self {
        RhoOptions {
            tol,
            ..Default::default()
        }
    }
}

/// Iterations between full recomputations of the marginals from `P`.
const REFRESH_EVERY: u64 = 256;
/// Consecutive zero-length steps tolerated before switching to multiplicative weights.
const STALL_LIMIT: u32 = 50;

struct State<'a> {
    points: &'a [Point],
    theta: [f64; 3],
    p: Vec<f64>,
    marg: [Vec<f64>; 3],
    grad: Vec<f64>,
}

impl<'a> State<'a> {
    fn new(support: &'a Support, theta: Theta) -> Self {
        let n = support.len();
        let dims = support.dims();
        let mut s = State {
            points: support.points(),
            theta: theta.weights(),
            p: vec![1.0 / n as f64; n],
            marg: [vec![0.0; dims[0]], vec![0.0; dims[1]], vec![0.0; dims[2]]],
            grad: vec![0.0; n],
        };
        s.refresh();
        s
    }

    fn refresh(&mut self) {
        for m in &mut self.marg {
            m.iter_mut().for_each(|x| *x = 0.0);
        }
        for (pt, &x) in self.points.iter().zip(&self.p) {
            for a in 0..3 {
                self.marg[a][pt[a]] += x;
            }
        }
    }

    fn value(&self) -> f64 {
        (0..3)
            .filter(|&a| self.theta[a] > 0.0)
            .map(|a| self.theta[a] * self.marg[a].iter().map(|&x| xlogx(x)).sum::<f64>())
            .sum()
    }

    /// `g(x) = -Σ_a θ_a log2 P_a(x_a)`; the true gradient differs by a constant.
    fn compute_grad(&mut self) {
        for (g, pt) in self.grad.iter_mut().zip(self.points) {
            *g = (0..3)
                .filter(|&a| self.theta[a] > 0.0)
                .map(|a| {
                    let m = self.marg[a][pt[a]];
                    if m > 0.0 {
                        -self.theta[a] * m.log2()
                    } else {
                        f64::INFINITY
                    }
                })
                .sum();
        }
    }

    /// Returns `(gap, toward, away)`.
    fn gap(&self) -> (f64, usize, Option<usize>) {
        let mut toward = 0;
        let mut away: Option<usize> = None;
        let mut inner = 0.0;
        for (x, (&g, &p)) in self.grad.iter().zip(&self.p).enumerate() {
            if g > self.grad[toward] {
                toward = x;
            }
            if p > 0.0 {
                inner += p * g;
                if away.is_none_or(|v| g < self.grad[v]) {
                    away = Some(x);
                }
            }
        }
        ((self.grad[toward] - inner).max(0.0), toward, away)
    }

    /// Exact line search for moving mass `γ ∈ [0, γmax]` from `away` to `toward`.
    fn line_search(&self, toward: usize, away: usize) -> f64 {
        let gmax = self.p[away];
        let s = &self.points[toward];
        let v = &self.points[away];
        // (θ_a, mass at the away coordinate, mass at the toward coordinate)
        let legs: Vec<(f64, f64, f64)> = (0..3)
            .filter(|&a| self.theta[a] > 0.0 && s[a] != v[a])
            .map(|a| (self.theta[a], self.marg[a][v[a]], self.marg[a][s[a]]))
            .collect();
        if legs.is_empty() {
            return 0.0;
        }
        // φ'(γ) up to the factor 1/ln 2; strictly decreasing
        let deriv = |g: f64| -> f64 {
            legs.iter()
                .map(|&(th, a, b)| th * ((a - g).max(0.0).ln() - (b + g).ln()))
                .sum()
        };
        let curv = |g: f64| -> f64 {
            legs.iter()
                .map(|&(th, a, b)| -th * (1.0 / (a - g) + 1.0 / (b + g)))
                .sum()
        };
        if deriv(gmax) >= 0.0 {
            return gmax;
        }
        let (mut lo, mut hi) = (0.0, gmax);
        let mut g = 0.5 * gmax;
        for _ in 0..100 {
            let d = deriv(g);
            if d > 0.0 {
                lo = g;
            } else {
                hi = g;
            }
            let newton = g - d / curv(g);
            let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (next - g).abs() <= 1e-17 + 1e-15 * g.abs() || hi - lo <= 1e-18 {
                return next;
            }
            g = next;
        }
        g
    }

    fn step(&mut self, toward: usize, away: usize, gamma: f64) {
        let s = self.points[toward];
        let v = self.points[away];
        if gamma >= self.p[away] {
            self.p[toward] += self.p[away];
            self.p[away] = 0.0;
        } else {
            self.p[away] -= gamma;
            self.p[toward] += gamma;
        }
        for a in 0..3 {
            if s[a] != v[a] {
                self.marg[a][v[a]] = (self.marg[a][v[a]] - gamma).max(0.0);
                self.marg[a][s[a]] += gamma;
            }
        }
    }

    /// One exponentiated-gradient step `P(x) ∝ P(x) 2^{η (g(x) - max g)}` on the full support.
    fn multiplicative_step(&mut self, eta: f64) {
        let finite_max = self.grad.iter().copied().filter(|g| g.is_finite()).fold(f64::MIN, f64::max);
        let floor = 1e-300;
        for (p, &g) in self.p.iter_mut().zip(&self.grad) {
            let g = if g.is_finite() { g } else { finite_max + 1.0 };
            *p = p.max(floor) * (eta * (g - finite_max)).exp2();
        }
        let z: f64 = self.p.iter().sum();
        self.p.iter_mut().for_each(|p| *p /= z);
        self.refresh();
    }

    fn result(&self, support: &Support, gap: f64, iterations: u64) -> RhoResult {
        RhoResult {
            value: self.value(),
            argmax: SupportDistribution::from_parts(support, self.p.clone()),
            residual: gap,
            iterations,
        }
    }
}

/// Maximizes `Σ_a θ_a H(P_a)` over distributions on `support`.
///
/// Starts from the uniform distribution and runs pairwise Frank–Wolfe with
/// exact line search until the duality gap drops to `opts.tol`.
pub fn rho_upper(support: &Support, theta: Theta, opts: &RhoOptions) -> Result<RhoResult> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::invalid(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let mut st = State::new(support, theta);
    let mut stalls = 0u32;
    let mut last_gap = f64::INFINITY;
    for it in 0..opts.max_iter {
        if it > 0 && it % REFRESH_EVERY == 0 {
            st.refresh();
        }
        st.compute_grad();
        let (gap, toward, away) = st.gap();
        last_gap = gap;
        if gap <= opts.tol {
            return Ok(st.result(support, gap, it));
        }
        let away = away.expect("distribution has mass");
        let gamma = st.line_search(toward, away);
        if gamma <= 0.0 || toward == away {
            stalls += 1;
            if stalls >= STALL_LIMIT {
                log::debug!("pairwise line search stalled at gap {gap:.3e}; multiplicative step");
                st.multiplicative_step(0.5);
                stalls = 0;
            }
            continue;
        }
        stalls = 0;
        st.step(toward, away, gamma);
    }
    st.refresh();
    Err(Error::BudgetExceeded {
        best: Box::new(st.result(support, last_gap, opts.max_iter)),
    })
}

/// Outcome of minimizing `ρ^θ` over `θ`.
#[derive(Clone, Debug)]
pub struct ThetaSearch {
    pub theta: Theta,
    pub rho: RhoResult,
    /// Number of `θ` values evaluated.
    pub evaluations: usize,
}

fn theta_at(a: f64, b: f64) -> Option<Theta> {
    let c = 1.0 - a - b;
    if a < -1e-15 || b < -1e-15 || c < -1e-15 {
        return None;
    }
    Theta::from_weights([a.max(0.0), b.max(0.0), c.max(0.0)]).ok()
}

/// Minimizes `θ ↦ ρ^θ` over the simplex.
///
/// `ρ^θ` is a maximum of functions linear in `θ`, hence convex: a coarse grid
/// locates the basin and a shrinking pattern search refines it. Every `θ` gives
/// a valid bound, so an inexact minimizer only loosens the result.
pub fn search_theta(support: &Support, opts: &RhoOptions) -> Result<ThetaSearch> {
    let inner = RhoOptions {
        tol: opts.tol.max(1e-9),
        ..*opts
    };
    let eval = |th: Theta| -> f64 {
        match rho_upper(support, th, &inner) {
            Ok(r) => r.value,
            // the gap bounds how far the best iterate is from the maximum
            Err(Error::BudgetExceeded { best }) => best.value + best.residual,
            Err(_) => f64::INFINITY,
        }
    };
    const STEPS: usize = 12;
    let grid: Vec<(f64, f64)> = (0..=STEPS)
        .flat_map(|i| (0..=STEPS - i).map(move |j| (i as f64 / STEPS as f64, j as f64 / STEPS as f64)))
        .collect();
    let scored: Vec<(f64, (f64, f64))> = grid
        .par_iter()
        .map(|&(a, b)| (eval(theta_at(a, b).expect("grid lies in the simplex")), (a, b)))
        .collect();
    let mut evaluations = scored.len();
    let (mut best_val, (mut a, mut b)) = scored
        .into_iter()
        .fold((f64::INFINITY, (1.0 / 3.0, 1.0 / 3.0)), |acc, x| if x.0 < acc.0 { x } else { acc });
    // uniform weights are not on every grid; try them explicitly
    let uni = eval(Theta::uniform());
    evaluations += 1;
    if uni <= best_val {
        best_val = uni;
        (a, b) = (1.0 / 3.0, 1.0 / 3.0);
    }
    let dirs = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, -1.0), (-1.0, 1.0)];
    let mut h = 1.0 / (2 * STEPS) as f64;
    while h > 1e-5 {
        let trial: Vec<(f64, (f64, f64))> = dirs
            .par_iter()
            .filter_map(|&(da, db)| {
                let (na, nb) = (a + h * da, b + h * db);
                theta_at(na, nb).map(|th| (eval(th), (na, nb)))
            })
            .collect();
        evaluations += trial.len();
        match trial.into_iter().filter(|t| t.0 < best_val - 1e-13).min_by(|x, y| x.0.total_cmp(&y.0)) {
            Some((v, (na, nb))) => {
                best_val = v;
                (a, b) = (na, nb);
            }
            None => h *= 0.5,
        }
    }
    let theta = theta_at(a, b).expect("search stays in the simplex");
    let rho = rho_upper(support, theta, opts)?;
    Ok(ThetaSearch {
        theta,
        rho,
        evaluations: evaluations + 1,
    })
}
