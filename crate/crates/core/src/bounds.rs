//! Closed-form envelopes for hitting and cover times, with reference constants set to 1.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gibbs::{min_cell_at_scale, mmin_bracket, product_cell_measure, WeightModel};
use crate::metric::{MetricKind, MetricParams};
use crate::product::ProductCover;

/// Euler-Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `H_n = sum_{i=1}^n 1/i`.
pub fn harmonic(n: u64) -> f64 {
    if n <= 100_000 {
        return (1..=n).rev().map(|i| 1.0 / i as f64).sum();
    }
    let x = n as f64;
    x.ln() + EULER_GAMMA + 0.5 / x - 1.0 / (12.0 * x * x) + 1.0 / (120.0 * x.powi(4))
}

/// `(L + max_m E*(τ_{U_m})) H_N` with `L` the cover depth and `N` the cell count.
pub fn coupon_envelope(cover: &ProductCover, exact_hitting: &[f64]) -> Result<f64> {
    if exact_hitting.len() as u64 != cover.cell_count() {
        return Err(Error::invalid(format!(
            "expected {} hitting times, got {}",
            cover.cell_count(),
            exact_hitting.len()
        )));
    }
    let worst = exact_hitting.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((cover.depth() as f64 + worst) * harmonic(cover.cell_count()))
}

/// Range of `μ(U) E*(τ_U)` over all cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HittingSandwich {
    pub r_min: f64,
    pub r_max: f64,
}

pub fn hitting_sandwich(
    cover: &ProductCover,
    model: &WeightModel,
    exact_hitting: &[f64],
) -> HittingSandwich {
    let (mut r_min, mut r_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (cell, &e) in cover.cells().zip(exact_hitting) {
        let r = product_cell_measure(cell, cover, model) * e;
        r_min = r_min.min(r);
        r_max = r_max.max(r);
    }
    HittingSandwich { r_min, r_max }
}

/// A lower and upper cover-time envelope, kept in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub delta: f64,
    pub eps: f64,
    pub ln_lo: f64,
    pub ln_hi: f64,
}

impl Envelope {
    pub fn lo(&self) -> f64 {
        self.ln_lo.exp()
    }

    /// Infinite when the fine bracket underflows a double.
    pub fn hi(&self) -> f64 {
        self.ln_hi.exp()
    }
}

/// `ε = 1/(2T)`.
pub fn default_eps(params: &MetricParams) -> f64 {
    0.5 / params.sandwich_constant()
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::invalid(format!("eps must lie in (0, 1], got {eps}")));
    }
    Ok(())
}

fn envelope_with(
    delta: f64,
    eps: f64,
    params: MetricParams,
    model: &WeightModel,
    ln_factor: f64,
) -> Result<Envelope> {
    let coarse = mmin_bracket(delta / eps, params, model)?;
    let fine = mmin_bracket(eps * delta, params, model)?;
    Ok(Envelope {
        delta,
        eps,
        ln_lo: -coarse.ln_hi,
        ln_hi: -fine.ln_lo + ln_factor,
    })
}

/// `1/M(δ/ε) <= E τ_δ <= (log 1/δ)^2 / M(εδ)`, each `M` replaced by the bracket end that keeps the bound valid.
pub fn main_envelope_d1(
    delta: f64,
    eps: f64,
    model: &WeightModel,
    params: MetricParams,
) -> Result<Envelope> {
    check_eps(eps)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    let l = (1.0 / delta).ln();
    envelope_with(delta, eps, params, model, 2.0 * l.ln())
}

/// As [`main_envelope_d1`] with the factor `(log 1/δ)(log log 1/δ)`; needs `δ < 1/e`.
pub fn main_envelope_d2(
    delta: f64,
    eps: f64,
    model: &WeightModel,
    params: MetricParams,
) -> Result<Envelope> {
    check_eps(eps)?;
    if !(delta > 0.0 && delta < (-1.0f64).exp()) {
        return Err(Error::invalid(format!(
            "the d2 envelope needs 0 < delta < 1/e, got {delta}"
        )));
    }
    let l = (1.0 / delta).ln();
    envelope_with(delta, eps, params, model, l.ln() + l.ln().ln())
}

pub fn main_envelope(
    delta: f64,
    eps: f64,
    model: &WeightModel,
    params: MetricParams,
) -> Result<Envelope> {
    match params.kind() {
        MetricKind::D1 => main_envelope_d1(delta, eps, model, params),
        MetricKind::D2 => main_envelope_d2(delta, eps, model, params),
    }
}

/// Minimal-cell masses of the geometric example, computed two ways.
#[derive(Debug, Clone, Serialize)]
pub struct BernoulliExample {
    pub delta: f64,
    pub eps: f64,
    pub depth: usize,
    pub anchor: u64,
    /// `-log2` of the product of tail masses, `k (N-1)`.
    pub recomputed_exponent: f64,
    /// `-log2` of `(2^k)^{-N} / (1 - 2^{-k})`.
    pub displayed_exponent: f64,
    /// Exponents of the two-sided bound `2^{(ε/δ) log 1/δ}` and `2^{(T/(εδ)) log 1/δ}`.
    pub bound_lower_exponent: f64,
    pub bound_upper_exponent: f64,
    /// Set when the two min-cell values disagree.
    pub discrepancy: bool,
}

impl BernoulliExample {
    pub fn recomputed(&self) -> f64 {
        (-self.recomputed_exponent).exp2()
    }

    pub fn displayed(&self) -> f64 {
        (-self.displayed_exponent).exp2()
    }

    /// Exponent over `(1/δ) log2(1/δ)`; undefined at `δ >= 1`.
    pub fn normalized(&self, exponent: f64) -> f64 {
        exponent / ((1.0 / self.delta) * (1.0 / self.delta).log2())
    }
}

pub fn bernoulli_example_bounds(delta: f64, eps: f64, theta: f64) -> Result<BernoulliExample> {
    check_eps(eps)?;
    let params = MetricParams::d1(theta)?;
    let cover = ProductCover::build_clamped(delta, params, u64::MAX)?;
    let depth = cover.depth();
    let anchor = cover.base().anchor();
    let k = depth as f64;
    let m = min_cell_at_scale(delta, params, &WeightModel::Geometric)?;
    let recomputed_exponent = -m.ln_mass / std::f64::consts::LN_2;
    let displayed_exponent = k * anchor as f64 + (1.0 - (-k).exp2()).log2();
    let l = (1.0 / delta).log2().max(0.0);
    let t = params.sandwich_constant();
    Ok(BernoulliExample {
        delta,
        eps,
        depth,
        anchor,
        recomputed_exponent,
        displayed_exponent,
        bound_lower_exponent: eps / delta * l,
        bound_upper_exponent: t / (eps * delta) * l,
        discrepancy: (recomputed_exponent - displayed_exponent).abs() > 1e-9,
    })
}

/// `log M_hi(δ) / log δ` at one scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimPoint {
    pub delta: f64,
    pub ratio: f64,
}

pub fn dim_diagnostic(
    delta_grid: &[f64],
    model: &WeightModel,
    params: MetricParams,
) -> Result<Vec<DimPoint>> {
    if delta_grid.is_empty() {
        return Err(Error::invalid("the delta grid is empty"));
    }
    if delta_grid.iter().any(|&d| !(d > 0.0 && d < 1.0)) {
        return Err(Error::invalid("grid points must lie in (0, 1)"));
    }
    if delta_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("the delta grid must be strictly decreasing"));
    }
    delta_grid
        .iter()
        .map(|&delta| {
            let b = mmin_bracket(delta, params, model)?;
            Ok(DimPoint {
                delta,
                ratio: b.ln_hi / delta.ln(),
            })
        })
        .collect()
}

pub fn strictly_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] > w[0])
}
