//! Base metrics on the alphabet and the weighted shift metrics built on them.
//!
//! The alphabet is the positive naturals. Two base metrics are supported:
//!
//! ```text
//! rho1(a, b) = |1/a - 1/b|
//! rho2(a, b) = |exp(-alpha a) - exp(-alpha b)|
//! ```
//!
//! and the shift metric is `d(x, y) = sum_n theta^n rho(x_n, y_n)`.
//! Points are eventually constant, so the series splits into a finite head
//! and a geometric tail and is evaluated exactly up to rounding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack used when comparing metric quantities to thresholds.
pub const TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    D1,
    D2,
}

/// The metric on the alphabet that a cover of the naturals is built against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "lowercase")]
pub enum BaseMetric {
    Rho1,
    Rho2 { alpha: f64 },
}

impl BaseMetric {
    #[inline]
    pub fn rho(&self, a: u64, b: u64) -> f64 {
        match *self {
            BaseMetric::Rho1 => rho1_unchecked(a, b),
            BaseMetric::Rho2 { alpha } => rho2_unchecked(a, b, alpha),
        }
    }

    /// `sup_{m >= n} rho(n, m)`, the diameter of the tail `{n, n+1, ...}`.
    #[inline]
    pub fn tail_value(&self, n: u64) -> f64 {
        match *self {
            BaseMetric::Rho1 => 1.0 / n as f64,
            BaseMetric::Rho2 { alpha } => (-alpha * n as f64).exp(),
        }
    }

    /// Diameter of the whole alphabet.
    pub fn alphabet_diameter(&self) -> f64 {
        self.tail_value(1)
    }

    pub fn name(&self) -> &'static str {
        match self {
            BaseMetric::Rho1 => "rho1",
            BaseMetric::Rho2 { .. } => "rho2",
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            BaseMetric::Rho1 => None,
            BaseMetric::Rho2 { alpha } => Some(alpha),
        }
    }
}

/// Parameters of a shift metric `d1` or `d2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricParams {
    kind: MetricKind,
    theta: f64,
    alpha: Option<f64>,
}

impl MetricParams {
    pub fn d1(theta: f64) -> Result<Self> {
        check_theta(theta)?;
        Ok(MetricParams {
            kind: MetricKind::D1,
            theta,
            alpha: None,
        })
    }

    pub fn d2(theta: f64, alpha: f64) -> Result<Self> {
        check_theta(theta)?;
        check_alpha(alpha)?;
        Ok(MetricParams {
            kind: MetricKind::D2,
            theta,
            alpha: Some(alpha),
        })
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn base(&self) -> BaseMetric {
        match self.kind {
            MetricKind::D1 => BaseMetric::Rho1,
            MetricKind::D2 => BaseMetric::Rho2 {
                alpha: self.alpha.expect("d2 carries alpha"),
            },
        }
    }

    /// The ball-sandwich constant `1/(1-theta) + 1`.
    pub fn sandwich_constant(&self) -> f64 {
        1.0 / (1.0 - self.theta) + 1.0
    }

    /// `exp(-alpha)` for d2, 1 for d1: the largest base distance to a tail.
    fn base_scale(&self) -> f64 {
        match self.kind {
            MetricKind::D1 => 1.0,
            MetricKind::D2 => (-self.alpha.unwrap_or(0.0)).exp(),
        }
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("theta must lie in (0,1), got {theta}")))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha must be positive, got {alpha}")))
    }
}

fn check_symbol(a: u64) -> Result<()> {
    if a == 0 {
        Err(Error::invalid("alphabet starts at 1"))
    } else {
        Ok(())
    }
}

/// `|1/a - 1/b|` for `a, b >= 1`.
pub fn rho1(a: u64, b: u64) -> Result<f64> {
    check_symbol(a)?;
    check_symbol(b)?;
    Ok(rho1_unchecked(a, b))
}

/// `|exp(-alpha a) - exp(-alpha b)|` for `a, b >= 1`, `alpha > 0`.
pub fn rho2(a: u64, b: u64, alpha: f64) -> Result<f64> {
    check_symbol(a)?;
    check_symbol(b)?;
    check_alpha(alpha)?;
    Ok(rho2_unchecked(a, b, alpha))
}

#[inline]
fn rho1_unchecked(a: u64, b: u64) -> f64 {
    if a == b {
        return 0.0;
    }
    // |b - a| / (a b); the product is exact below 2^53.
    let diff = a.abs_diff(b) as f64;
    let prod = a as u128 * b as u128;
    diff / prod as f64
}

#[inline]
fn rho2_unchecked(a: u64, b: u64, alpha: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    (-alpha * lo as f64).exp() * -(-alpha * (hi - lo) as f64).exp_m1()
}

/// A point of the shift space: a finite prefix followed by a constant tail.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point {
    prefix: Vec<u64>,
    tail: u64,
}

impl Point {
    pub fn new(prefix: Vec<u64>, tail: u64) -> Result<Self> {
        check_symbol(tail)?;
        for &a in &prefix {
            check_symbol(a)?;
        }
        Ok(Point { prefix, tail })
    }

    pub fn constant(symbol: u64) -> Result<Self> {
        Point::new(Vec::new(), symbol)
    }

    #[inline]
    pub fn coord(&self, n: usize) -> u64 {
        self.prefix.get(n).copied().unwrap_or(self.tail)
    }

    pub fn prefix(&self) -> &[u64] {
        &self.prefix
    }

    pub fn tail(&self) -> u64 {
        self.tail
    }

    /// The first `k` coordinates.
    pub fn window(&self, k: usize) -> Vec<u64> {
        (0..k).map(|n| self.coord(n)).collect()
    }
}

/// `(x_0,...,x_{m-1},t,t,...)`.
impl std::fmt::Display for Point {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for a in &self.prefix {
            write!(f, "{a},")?;
        }
        write!(f, "{t},{t},...)", t = self.tail)
    }
}

/// `d(x, y) = sum_n theta^n rho(x_n, y_n)` evaluated as head plus geometric tail.
pub fn shift_distance(x: &Point, y: &Point, params: &MetricParams) -> f64 {
    let base = params.base();
    let theta = params.theta;
    let m = x.prefix.len().max(y.prefix.len());
    let mut sum = 0.0;
    let mut weight = 1.0;
    for n in 0..m {
        sum += weight * base.rho(x.coord(n), y.coord(n));
        weight *= theta;
    }
    sum + base.rho(x.tail, y.tail) * weight / (1.0 - theta)
}

/// Diameter of a depth-`k` cylinder: `theta^k/(1-theta)`, times `exp(-alpha)` for d2.
pub fn cylinder_diameter(k: usize, params: &MetricParams) -> f64 {
    params.base_scale() * params.theta.powi(k as i32) / (1.0 - params.theta)
}

/// Diameter of a depth-`k` product-cover cell built at scale `delta`.
pub fn product_cell_diameter(k: usize, delta: f64, params: &MetricParams) -> f64 {
    let theta = params.theta;
    let head = delta * (1.0 - theta.powi(k as i32)) / (1.0 - theta);
    head + cylinder_diameter(k, params)
}

/// Argument of the logarithm in the depth formula, i.e. `delta (1-theta)`
/// for d1 and `delta e^alpha (1-theta)` for d2.
pub(crate) fn depth_argument(delta: f64, params: &MetricParams) -> f64 {
    delta * (1.0 - params.theta) / params.base_scale()
}

/// Smallest depth `k` with `cylinder_diameter(k) <= delta`.
pub fn depth_for_scale(delta: f64, params: &MetricParams) -> Result<usize> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    let arg = depth_argument(delta, params);
    if arg >= 1.0 {
        return Err(Error::invalid(format!(
            "scale {delta} is coarser than the whole space"
        )));
    }
    let raw = (arg.ln() / params.theta.ln()).ceil().max(1.0) as usize;
    // The ceiling of a ratio of logs can land one off when the ratio is an
    // integer; settle it against the diameter directly.
    let fits = |k: usize| params.theta.powi(k as i32) <= arg * (1.0 + TOLERANCE);
    let mut k = raw;
    while !fits(k) {
        k += 1;
    }
    while k > 1 && fits(k - 1) {
        k -= 1;
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rho1_examples() {
        assert_eq!(rho1(1, 1).unwrap(), 0.0);
        assert_eq!(rho1(1, 2).unwrap(), 0.5);
        assert_eq!(rho1(4, 7).unwrap(), 3.0 / 28.0);
        assert!(rho1(0, 3).is_err());
        assert!(rho1(3, 0).is_err());
    }

    #[test]
    fn rho2_examples() {
        assert_eq!(rho2(3, 3, 1.0).unwrap(), 0.0);
        let e = (-1f64).exp() - (-2f64).exp();
        assert_abs_diff_eq!(rho2(1, 2, 1.0).unwrap(), e, epsilon = 1e-15);
        assert_abs_diff_eq!(rho2(1, 2, 1.0).unwrap(), 0.23254, epsilon = 1e-5);
        assert_abs_diff_eq!(rho2(4, 5, 0.2).unwrap(), 0.08145, epsilon = 1e-5);
        assert!(rho2(1, 2, 0.0).is_err());
        assert!(rho2(1, 2, -1.0).is_err());
    }

    #[test]
    fn shift_distance_examples() {
        let p = MetricParams::d1(0.5).unwrap();
        let x = Point::constant(1).unwrap();
        let y = Point::constant(2).unwrap();
        assert_eq!(shift_distance(&x, &x, &p), 0.0);
        assert_abs_diff_eq!(shift_distance(&x, &y, &p), 1.0, epsilon = 1e-15);

        let x = Point::new(vec![3], 1).unwrap();
        let y = Point::new(vec![4], 1).unwrap();
        assert_abs_diff_eq!(shift_distance(&x, &y, &p), 1.0 / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn diameters() {
        let p = MetricParams::d1(0.5).unwrap();
        assert_eq!(cylinder_diameter(3, &p), 0.25);
        assert_eq!(cylinder_diameter(0, &p), 2.0);
        let q = MetricParams::d2(0.5, 1.0).unwrap();
        assert_abs_diff_eq!(cylinder_diameter(3, &q), 0.09197, epsilon = 1e-5);

        assert_abs_diff_eq!(product_cell_diameter(3, 0.25, &p), 0.6875, epsilon = 1e-15);
        assert_abs_diff_eq!(product_cell_diameter(3, 0.01, &q), 0.10947, epsilon = 1e-5);
        // k -> infinity limit
        assert_abs_diff_eq!(product_cell_diameter(200, 0.3, &p), 0.6, epsilon = 1e-12);
    }

    #[test]
    fn depth_examples() {
        let p = MetricParams::d1(0.5).unwrap();
        assert_eq!(depth_for_scale(0.25, &p).unwrap(), 3);
        assert_eq!(depth_for_scale(0.1, &p).unwrap(), 5);
        // log(0.01 e 0.5)/log(0.5) = 6.2016
        let q = MetricParams::d2(0.5, 1.0).unwrap();
        assert_eq!(depth_for_scale(0.01, &q).unwrap(), 7);
        assert!(depth_for_scale(2.5, &p).is_err());
        assert!(depth_for_scale(0.0, &p).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(MetricParams::d1(1.0).is_err());
        assert!(MetricParams::d1(0.0).is_err());
        assert!(MetricParams::d2(0.5, 0.0).is_err());
        assert_eq!(MetricParams::d1(0.5).unwrap().sandwich_constant(), 3.0);
    }
}
