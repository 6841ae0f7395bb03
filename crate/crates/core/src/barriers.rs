//! Irreversibility lower bounds and the barrier formulas built from them.
//!
//! Irreversibility is bounded below by
//! `max_a log2 rank(t_a) / ρ^θ(t)`: flattening ranks lower-bound the asymptotic
//! rank and the support functional upper-bounds the asymptotic subrank. Every
//! barrier here is a closed-form expression in such a bound.

use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::{fq_max, h_third, rho_upper, search_theta, RhoOptions, RhoResult, SymmetricFamily, Theta};
use crate::error::{Error, Result};
use crate::linalg::{flattening_ranks, max_flattening_rank};
use crate::tensor::Tensor;

/// Marker placed in [`BarrierReport::notes`] when the bound falls below 1.
pub const VACUOUS_NOTE: &str = "bound-vacuous";

/// How `θ` is chosen for the support functional.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThetaChoice {
    Fixed(Theta),
    /// Minimize `ρ^θ` over the simplex.
    Search,
}

impl Default for ThetaChoice {
    fn default() -> Self {
        ThetaChoice::Fixed(Theta::uniform())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BarrierReport {
    pub tensor_id: String,
    pub flattening_ranks: [usize; 3],
    pub rho: RhoResult,
    pub theta_used: Theta,
    pub irr_lb: f64,
    pub barrier_basic: f64,
    pub barrier_laser: Option<f64>,
    pub notes: String,
}

impl BarrierReport {
    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.tensor_id = id.into();
        self
    }

    /// True if `irr_lb < 1`, i.e. the bound says nothing.
    pub fn is_vacuous(&self) -> bool {
        self.irr_lb < 1.0
    }
}

/// Lower bound on `irr(t)` from flattening ranks and the support functional.
pub fn irr_lower(t: &Tensor, theta: ThetaChoice, opts: &RhoOptions) -> Result<BarrierReport> {
    let support = t.support();
    let (theta_used, rho, mut notes) = match theta {
        ThetaChoice::Fixed(th) => (th, rho_upper(&support, th, opts)?, Vec::new()),
        ThetaChoice::Search => {
            let found = search_theta(&support, opts)?;
            let note = format!("theta minimized over the simplex ({} evaluations)", found.evaluations);
            (found.theta, found.rho, vec![note])
        }
    };
    if rho.value.is_nan() || rho.value <= 1e-12 {
        return Err(Error::Degenerate(format!(
            "support functional vanishes (rho = {:e}) for theta {:?}",
            rho.value,
            theta_used.weights()
        )));
    }
    let ranks = flattening_ranks(t);
    let max_rank = ranks.into_iter().max().unwrap_or(1);
    let irr_lb = (max_rank as f64).log2() / rho.value;
    if irr_lb < 1.0 {
        notes.push(format!("{VACUOUS_NOTE}: max flattening rank is below 2^rho"));
    }
    let barrier_laser = match SymmetricFamily::detect(&support) {
        Some(SymmetricFamily::SmallCw(q)) if q >= 2 && matches!(theta, ThetaChoice::Fixed(th) if th == Theta::uniform()) => {
            notes.push(format!("laser barrier uses the outer structure of cw_{q}"));
            Some(laser_formula(irr_lb, q))
        }
        _ => None,
    };
    Ok(BarrierReport {
        tensor_id: String::from("unnamed"),
        flattening_ranks: ranks,
        rho,
        theta_used,
        irr_lb,
        barrier_basic: 2.0 * irr_lb,
        barrier_laser,
        notes: notes.join("; "),
    })
}

/// Weak lower bound on monomial irreversibility: `monirr(t) >= irr(t)`.
///
/// Sharper bounds would need upper bounds on the monomial asymptotic subrank
/// itself, which are not computed here.
pub fn monirr_lower(t: &Tensor, theta: ThetaChoice, opts: &RhoOptions) -> Result<f64> {
    irr_lower(t, theta, opts).map(|r| r.irr_lb)
}

fn check_irr(irr: f64) -> Result<()> {
    if irr.is_nan() || irr < 1.0 {
        return Err(Error::invalid(format!("irreversibility is at least 1, got {irr}")));
    }
    Ok(())
}

/// Barrier for any approach through a fixed intermediate tensor: `2 irr`.
pub fn barrier_intermediate(irr: f64) -> Result<f64> {
    check_irr(irr)?;
    Ok(2.0 * irr)
}

/// Barrier when the intermediate is reached via `⟨2⟩^α ⊗ t` with rate `β`:
/// `((α + 2β) irr - α) / β`.
pub fn barrier_schonhage(irr: f64, alpha: u32, beta: u32) -> Result<f64> {
    check_irr(irr)?;
    if beta == 0 {
        return Err(Error::invalid("beta must be positive"));
    }
    let (a, b) = (f64::from(alpha), f64::from(beta));
    Ok(((a + 2.0 * b) * irr - a) / b)
}

/// Rectangular variant: `2 I + α / (log2(abc) / 3) · (I - 1)` with `I` the bound for `cyc(t)`.
///
/// For cyclically symmetric `t`, `cyc(t) = t^{⊗3}` and the bound for `t` is reused.
pub fn barrier_rect(
    t: &Tensor,
    alpha: u32,
    (a, b, c): (u32, u32, u32),
    theta: ThetaChoice,
    opts: &RhoOptions,
) -> Result<f64> {
    let abc = u64::from(a) * u64::from(b) * u64::from(c);
    if abc < 2 {
        return Err(Error::invalid("abc must be at least 2"));
    }
    let irr = if t.is_cyclically_symmetric() {
        irr_lower(t, theta, opts)?.irr_lb
    } else {
        irr_lower(&t.cyc()?, theta, opts)?.irr_lb
    };
    Ok(2.0 * irr + f64::from(alpha) / ((abc as f64).log2() / 3.0) * (irr - 1.0))
}

/// `log2 3 - 2/3 + (2/3) log2 q`, the functional of `cw_q` at uniform `θ`.
pub fn rho_small_cw(q: u32) -> f64 {
    3f64.log2() - 2.0 / 3.0 + 2.0 / 3.0 * f64::from(q).log2()
}

/// Which rank is assumed for `cw_q` in the laser barrier.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankMode {
    /// Flattening rank `q + 1`.
    Flattening,
    /// `q + 2`, assuming the best known rank upper bound is tight.
    Conjectured,
}

fn laser_formula(irr: f64, q: usize) -> f64 {
    let log_q = (q as f64).log2();
    2.0 * irr + h_third() / (log_q / 3.0) * (irr - 1.0)
}

/// Barrier for the laser method on `cw_q` with the Coppersmith–Winograd outer structure.
pub fn barrier_laser_cw(q: u32, mode: RankMode) -> Result<f64> {
    if q < 2 {
        return Err(Error::invalid("laser barrier needs q >= 2"));
    }
    let rank = match mode {
        RankMode::Flattening => q + 1,
        RankMode::Conjectured => q + 2,
    };
    let irr = f64::from(rank).log2() / rho_small_cw(q);
    Ok(laser_formula(irr, q as usize))
}

/// `2 log2(q+2) / ρ(cw_q)`.
pub fn barrier_better_cw(q: u32) -> Result<f64> {
    if q < 2 {
        return Err(Error::invalid("better cw barrier needs q >= 2"));
    }
    Ok(2.0 * f64::from(q + 2).log2() / rho_small_cw(q))
}

/// `2 log2(q+1) / ρ(cw_q)`.
pub fn barrier_small_cw(q: u32) -> Result<f64> {
    if q < 2 {
        return Err(Error::invalid("cw barrier table starts at q = 2"));
    }
    Ok(2.0 * f64::from(q + 1).log2() / rho_small_cw(q))
}

/// `2 log2(q+2) / f_q(x*)`.
pub fn barrier_big_cw(q: u32) -> Result<f64> {
    if q < 1 {
        return Err(Error::invalid("CW barrier table starts at q = 1"));
    }
    Ok(2.0 * f64::from(q + 2).log2() / fq_max(q)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    Cw,
    #[serde(rename = "CW")]
    BigCw,
    Tn,
    Laser,
    Better,
}

#[derive(Clone, Debug, Serialize)]
pub struct TableRow {
    pub param: u32,
    pub value: f64,
    /// The same barrier recomputed through the general optimizer, where available.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check: Option<f64>,
    /// The conventional `t_n` label of the row, `n = m - 1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intro_n: Option<u32>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Table {
    pub kind: TableKind,
    pub rows: Vec<TableRow>,
}

impl Table {
    /// The row with the smallest value.
    pub fn argmin(&self) -> Option<&TableRow> {
        self.rows.iter().min_by(|a, b| a.value.total_cmp(&b.value))
    }
}

fn closed_form_table(kind: TableKind, range: std::ops::RangeInclusive<u32>, f: impl Fn(u32) -> Result<f64>) -> Result<Table> {
    let rows = range
        .map(|q| {
            Ok(TableRow {
                param: q,
                value: f(q)?,
                check: None,
                intro_n: None,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Table { kind, rows })
}

/// `cw_q` barriers for `q = 2..=q_max`.
pub fn barrier_cw_table(q_max: u32) -> Result<Table> {
    closed_form_table(TableKind::Cw, 2..=q_max, barrier_small_cw)
}

/// Laser barriers on `cw_q` for `q = 2..=q_max`.
pub fn barrier_laser_table(q_max: u32, mode: RankMode) -> Result<Table> {
    closed_form_table(TableKind::Laser, 2..=q_max, |q| barrier_laser_cw(q, mode))
}

/// Barriers assuming rank `q + 2` for `cw_q`, `q = 2..=q_max`.
pub fn barrier_better_table(q_max: u32) -> Result<Table> {
    closed_form_table(TableKind::Better, 2..=q_max, barrier_better_cw)
}

/// `CW_q` barriers for `q = 1..=q_max` from the closed form; `check` holds the
/// value obtained from flattening ranks and the general optimizer on `supp(CW_q)`.
pub fn barrier_big_cw_table(q_max: u32, opts: &RhoOptions) -> Result<Table> {
    let rows = (1..=q_max)
        .into_par_iter()
        .map(|q| {
            let value = barrier_big_cw(q)?;
            let t = Tensor::big_cw(q as usize)?;
            let rho = rho_upper(&t.support(), Theta::uniform(), opts)?;
            let rank = max_flattening_rank(&t);
            Ok(TableRow {
                param: q,
                value,
                check: Some(2.0 * (rank as f64).log2() / rho.value),
                intro_n: None,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Table {
        kind: TableKind::BigCw,
        rows,
    })
}

/// Barriers for the reduced polynomial multiplication tensors on `m = 2..=m_max`
/// indices, from the general optimizer at uniform `θ`.
pub fn barrier_tn_table(m_max: u32, opts: &RhoOptions) -> Result<Table> {
    let rows = (2..=m_max)
        .into_par_iter()
        .map(|m| {
            let t = Tensor::reduced_polymul(m as usize)?;
            let rho = rho_upper(&t.support(), Theta::uniform(), opts)?;
            let rank = max_flattening_rank(&t);
            Ok(TableRow {
                param: m,
                value: 2.0 * (rank as f64).log2() / rho.value,
                check: None,
                intro_n: Some(m - 1),
            })
        })
        .collect::<Result<_>>()?;
    Ok(Table { kind: TableKind::Tn, rows })
}
