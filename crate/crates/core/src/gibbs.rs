//! Bernoulli product measures on the shift space.
//!
//! A [`WeightModel`] is a law `p` on the positive naturals; the measure on
//! sequences is the infinite product `p^N`. With potential `log p(x_0)` and
//! zero pressure this is a Gibbs measure with constant 1, so every cylinder
//! and cover-cell mass has a closed form.
//!
//! Masses of fine product cells underflow doubles long before the covers get
//! large, so most quantities are also available as natural logarithms.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{depth_for_scale, MetricParams};
use crate::natcover::{NatCell, NatCover};
use crate::product::{CellId, ProductCover};
use crate::stats::Estimate;

/// Terms summed directly before switching to Euler-Maclaurin.
const DIRECT_TERMS: u64 = 1000;
/// Upper end of the tabulated power-law CDF.
const MAX_TABLE: u64 = 1 << 20;
/// Target untabulated mass.
const TABLE_TAIL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub enum WeightModel {
    /// `p(n) = 2^{-n}`.
    Geometric,
    /// `p(n) = (n+1)^{-kappa} / Z`.
    PowerLaw(PowerLaw),
    /// Uniform on `{1..size}`. Not a law of full support; used as a control.
    FiniteUniform { size: u64 },
}

#[derive(Debug, Clone)]
pub struct PowerLaw {
    kappa: f64,
    z: f64,
    ln_z: f64,
    cdf: Vec<f64>,
}

impl PowerLaw {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 1.0) {
            return Err(Error::invalid(format!(
                "power-law exponent must exceed 1, got {kappa}"
            )));
        }
        let z = zeta_tail(2, kappa);
        let mut law = PowerLaw {
            kappa,
            z,
            ln_z: z.ln(),
            cdf: Vec::new(),
        };
        // smallest cutoff whose tail is below TABLE_TAIL, capped
        let mut cut = 64u64;
        while cut < MAX_TABLE && law.tail_mass(cut + 1) > TABLE_TAIL {
            cut *= 2;
        }
        let mut acc = 0.0;
        law.cdf = (1..=cut)
            .map(|n| {
                acc += law.pmf(n);
                acc
            })
            .collect();
        Ok(law)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `Z = sum_{n>=1} (n+1)^{-kappa}`.
    pub fn normalizer(&self) -> f64 {
        self.z
    }

    pub fn pmf(&self, n: u64) -> f64 {
        ((n as f64) + 1.0).powf(-self.kappa) / self.z
    }

    pub fn ln_pmf(&self, n: u64) -> f64 {
        -self.kappa * ((n as f64) + 1.0).ln() - self.ln_z
    }

    pub fn tail_mass(&self, n: u64) -> f64 {
        zeta_tail(n.saturating_add(1), self.kappa) / self.z
    }

    pub fn ln_tail_mass(&self, n: u64) -> f64 {
        ln_zeta_tail(n.saturating_add(1), self.kappa) - self.ln_z
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let top = *self.cdf.last().expect("table is nonempty");
        if u < top {
            return self.cdf.partition_point(|&c| c <= u) as u64 + 1;
        }
        self.sample_tail(rng, self.cdf.len() as u64 + 1)
    }

    /// Draw from `p` conditioned on `n >= from`: Pareto proposal on `m = n+1`
    /// rounded down, corrected by rejection.
    fn sample_tail<R: Rng + ?Sized>(&self, rng: &mut R, from: u64) -> u64 {
        let a = from as f64 + 1.0;
        let shape = self.kappa - 1.0;
        let bound = (1.0 + 1.0 / a).powf(self.kappa);
        loop {
            let u: f64 = 1.0 - rng.random::<f64>();
            let x = a * u.powf(-1.0 / shape);
            if x >= u64::MAX as f64 {
                return u64::MAX;
            }
            let m = x.floor().max(a);
            // m^{-kappa} over the proposal mass of [m, m+1)
            let ratio = shape / (m * -((-shape) * (1.0 / m).ln_1p()).exp_m1());
            if rng.random::<f64>() * bound <= ratio {
                return (m as u64 - 1).max(from);
            }
        }
    }
}

/// `sum_{m>=start} m^{-s}` for `s > 1`, direct sum then Euler-Maclaurin.
fn zeta_tail(start: u64, s: f64) -> f64 {
    let start = start.max(1);
    if start >= DIRECT_TERMS {
        return euler_maclaurin(start as f64, s);
    }
    let head: f64 = (start..DIRECT_TERMS).rev().map(|m| (m as f64).powf(-s)).sum();
    head + euler_maclaurin(DIRECT_TERMS as f64, s)
}

fn ln_zeta_tail(start: u64, s: f64) -> f64 {
    if start < DIRECT_TERMS {
        return zeta_tail(start, s).ln();
    }
    // factor out M^{1-s} so huge M does not underflow
    let m = start as f64;
    let inv = 1.0 / m;
    let series = 1.0 / (s - 1.0) + 0.5 * inv + s / 12.0 * inv * inv
        - s * (s + 1.0) * (s + 2.0) / 720.0 * inv.powi(4)
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) / 30240.0 * inv.powi(6);
    (1.0 - s) * m.ln() + series.ln()
}

fn euler_maclaurin(m: f64, s: f64) -> f64 {
    let f = m.powf(-s);
    m.powf(1.0 - s) / (s - 1.0) + 0.5 * f + s / 12.0 * f / m
        - s * (s + 1.0) * (s + 2.0) / 720.0 * f / m.powi(3)
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) / 30240.0 * f / m.powi(5)
}

impl WeightModel {
    pub fn power_law(kappa: f64) -> Result<Self> {
        PowerLaw::new(kappa).map(WeightModel::PowerLaw)
    }

    pub fn finite_uniform(size: u64) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid("uniform support must be nonempty"));
        }
        Ok(WeightModel::FiniteUniform { size })
    }

    pub fn kappa(&self) -> Option<f64> {
        match self {
            WeightModel::PowerLaw(p) => Some(p.kappa),
            _ => None,
        }
    }

    pub fn pmf(&self, n: u64) -> f64 {
        match self {
            WeightModel::Geometric => exp2_neg(n),
            WeightModel::PowerLaw(p) => p.pmf(n),
            WeightModel::FiniteUniform { size } => {
                if (1..=*size).contains(&n) {
                    1.0 / *size as f64
                } else {
                    0.0
                }
            }
        }
    }

    pub fn ln_pmf(&self, n: u64) -> f64 {
        match self {
            WeightModel::Geometric => -(n as f64) * LN_2,
            WeightModel::PowerLaw(p) => p.ln_pmf(n),
            WeightModel::FiniteUniform { .. } => self.pmf(n).ln(),
        }
    }

    /// `sum_{m<=n} p(m)`.
    pub fn cdf(&self, n: u64) -> f64 {
        match self {
            WeightModel::Geometric => 1.0 - exp2_neg(n),
            _ => 1.0 - self.tail_mass(n.saturating_add(1)),
        }
    }

    /// `sum_{m>=n} p(m)`.
    pub fn tail_mass(&self, n: u64) -> f64 {
        let n = n.max(1);
        match self {
            WeightModel::Geometric => exp2_neg(n - 1),
            WeightModel::PowerLaw(p) => p.tail_mass(n),
            WeightModel::FiniteUniform { size } => {
                size.saturating_sub(n - 1) as f64 / *size as f64
            }
        }
    }

    pub fn ln_tail_mass(&self, n: u64) -> f64 {
        let n = n.max(1);
        match self {
            WeightModel::Geometric => -((n - 1) as f64) * LN_2,
            WeightModel::PowerLaw(p) => p.ln_tail_mass(n),
            WeightModel::FiniteUniform { .. } => self.tail_mass(n).ln(),
        }
    }

    /// Exact draw from `p`.
    pub fn sample_coordinate<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            WeightModel::Geometric => sample_geometric(rng),
            WeightModel::PowerLaw(p) => p.sample(rng),
            WeightModel::FiniteUniform { size } => rng.random_range(1..=*size),
        }
    }

    /// Draw from `p` conditioned on the cell.
    pub fn sample_in_cell<R: Rng + ?Sized>(&self, cell: &NatCell, rng: &mut R) -> u64 {
        match (self, cell.hi) {
            // memorylessness
            (WeightModel::Geometric, None) => cell.lo - 1 + sample_geometric(rng),
            (WeightModel::PowerLaw(p), None) if cell.lo > p.cdf.len() as u64 => {
                p.sample_tail(rng, cell.lo)
            }
            (WeightModel::FiniteUniform { size }, None) => rng.random_range(cell.lo..=*size),
            (WeightModel::FiniteUniform { .. }, Some(hi)) => rng.random_range(cell.lo..=hi),
            _ => {
                // inverse CDF inside the cell, walking up from lo
                let mass = natcell_mass(cell, self);
                let mut u = rng.random::<f64>() * mass;
                let mut n = cell.lo;
                loop {
                    let w = self.pmf(n);
                    if u < w || cell.hi == Some(n) || w == 0.0 {
                        return n;
                    }
                    u -= w;
                    n += 1;
                }
            }
        }
    }
}

impl FromStr for WeightModel {
    type Err = Error;

    /// `geometric` or `powerlaw:KAPPA`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("geometric") {
            return Ok(WeightModel::Geometric);
        }
        if let Some(k) = s.strip_prefix("powerlaw:") {
            let kappa: f64 = k
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad power-law exponent '{k}'")))?;
            return WeightModel::power_law(kappa);
        }
        Err(Error::invalid(format!(
            "unknown model '{s}', expected 'geometric' or 'powerlaw:KAPPA'"
        )))
    }
}

impl fmt::Display for WeightModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightModel::Geometric => write!(f, "geometric"),
            WeightModel::PowerLaw(p) => write!(f, "powerlaw:{}", p.kappa),
            WeightModel::FiniteUniform { size } => write!(f, "uniform:{size}"),
        }
    }
}

fn exp2_neg(n: u64) -> f64 {
    if n > 1100 {
        0.0
    } else {
        (-(n as f64)).exp2()
    }
}

/// `1 + (number of fair coin flips before the first head)`; exact.
pub fn sample_geometric<R: Rng + ?Sized>(rng: &mut R) -> u64 {
    let mut n = 1u64;
    loop {
        let bits: u64 = rng.random();
        if bits != 0 {
            return n + bits.trailing_zeros() as u64;
        }
        n += 64;
    }
}

/// Inverse CDF of the geometric law: `floor(-log2 u) + 1` for `u` in `(0, 1]`.
pub fn geometric_inverse_cdf(u: f64) -> u64 {
    assert!(u > 0.0 && u <= 1.0, "u must lie in (0, 1]");
    (-u.log2()).floor() as u64 + 1
}

/// `prod_j p(w_j)`.
pub fn cylinder_measure(word: &[u64], model: &WeightModel) -> f64 {
    word.iter().map(|&n| model.pmf(n)).product()
}

pub fn ln_cylinder_measure(word: &[u64], model: &WeightModel) -> f64 {
    word.iter().map(|&n| model.ln_pmf(n)).sum()
}

/// Birkhoff sum `S_n phi` of the potential `phi = log p(x_0)` over a cylinder's word.
pub fn birkhoff_sum(word: &[u64], model: &WeightModel) -> f64 {
    ln_cylinder_measure(word, model)
}

pub fn natcell_mass(cell: &NatCell, model: &WeightModel) -> f64 {
    ln_natcell_mass(cell, model).exp()
}

pub fn ln_natcell_mass(cell: &NatCell, model: &WeightModel) -> f64 {
    let Some(hi) = cell.hi else {
        return model.ln_tail_mass(cell.lo);
    };
    let len = hi - cell.lo + 1;
    match model {
        WeightModel::Geometric => {
            -((cell.lo - 1) as f64) * LN_2 + (-exp2_neg(len)).ln_1p()
        }
        _ if len <= 64 => (cell.lo..=hi).map(|n| model.pmf(n)).sum::<f64>().ln(),
        _ => {
            let (a, b) = (model.ln_tail_mass(cell.lo), model.ln_tail_mass(hi + 1));
            a + (-(b - a).exp()).ln_1p()
        }
    }
}

/// Masses of the alphabet cells, in cover order.
pub fn base_masses(cover: &NatCover, model: &WeightModel) -> Vec<f64> {
    cover.cells().iter().map(|c| natcell_mass(c, model)).collect()
}

pub fn product_cell_measure(cell: CellId, cover: &ProductCover, model: &WeightModel) -> f64 {
    ln_product_cell_measure(cell, cover, model).exp()
}

pub fn ln_product_cell_measure(cell: CellId, cover: &ProductCover, model: &WeightModel) -> f64 {
    let cells = cover.base().cells();
    cover
        .decode(cell)
        .iter()
        .map(|&i| ln_natcell_mass(&cells[i], model))
        .sum()
}

/// Lightest product cell. Found coordinate-wise since the measure is a product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinCell {
    /// Index of the lightest alphabet cell, repeated on every coordinate.
    pub base_index: usize,
    pub depth: usize,
    pub ln_mass: f64,
}

impl MinCell {
    pub fn mass(&self) -> f64 {
        self.ln_mass.exp()
    }
}

/// Lightest alphabet cell with positive mass; ties go to the later cell.
pub fn min_base_cell(base: &NatCover, model: &WeightModel) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (i, c) in base.cells().iter().enumerate() {
        let m = ln_natcell_mass(c, model);
        if m > f64::NEG_INFINITY && m <= best.1 {
            best = (i, m);
        }
    }
    best
}

pub fn min_cell(base: &NatCover, depth: usize, model: &WeightModel) -> MinCell {
    let (i, m) = min_base_cell(base, model);
    MinCell {
        base_index: i,
        depth,
        ln_mass: depth as f64 * m,
    }
}

pub fn min_cell_measure(cover: &ProductCover, model: &WeightModel) -> (CellId, f64) {
    let m = min_cell(cover.base(), cover.depth(), model);
    (cover.encode(&vec![m.base_index; m.depth]), m.mass())
}

/// Bracket `lo <= M_mu(delta) <= hi` from the minimal cells at `delta / T` and `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassBracket {
    pub delta: f64,
    pub ln_lo: f64,
    pub ln_hi: f64,
}

impl MassBracket {
    pub fn lo(&self) -> f64 {
        self.ln_lo.exp()
    }

    pub fn hi(&self) -> f64 {
        self.ln_hi.exp()
    }
}

/// Minimal cell at a scale with no cell budget, clamping coarse scales to one cell.
pub fn min_cell_at_scale(delta: f64, params: MetricParams, model: &WeightModel) -> Result<MinCell> {
    match ProductCover::build_clamped(delta, params, u64::MAX) {
        Ok(cover) => Ok(min_cell(cover.base(), cover.depth(), model)),
        // the cell count overflows but the minimum is coordinate-wise anyway
        Err(Error::CellBudget { .. }) => {
            let base = NatCover::anchored(delta, params.base())?;
            Ok(min_cell(&base, depth_for_scale(delta, &params)?, model))
        }
        Err(e) => Err(e),
    }
}

pub fn mmin_bracket(delta: f64, params: MetricParams, model: &WeightModel) -> Result<MassBracket> {
    let hi = min_cell_at_scale(delta, params, model)?;
    let lo = min_cell_at_scale(delta / params.sandwich_constant(), params, model)?;
    Ok(MassBracket {
        delta,
        ln_lo: lo.ln_mass,
        ln_hi: hi.ln_mass,
    })
}

/// Result of comparing `log p(n)` with `-kappa log(n+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeCheck {
    /// `log p(n) <= -kappa log(n+1) + offset` for all `n`, with finite offset.
    pub holds: bool,
    /// `max_{n <= n_max} [log p(n) + kappa log(n+1)]`; the constant absorbed by the Gibbs bound.
    pub offset: f64,
    /// Whether the inequality already holds with no offset on `1..=n_max`.
    pub holds_pointwise: bool,
}

/// The potential-envelope hypothesis, up to an additive constant.
///
/// The finite range is scanned; beyond it the comparison is analytic.
pub fn gibbs_envelope_check(model: &WeightModel, kappa: f64, n_max: u64) -> Result<EnvelopeCheck> {
    if !(kappa.is_finite() && kappa > 1.0) {
        return Err(Error::invalid(format!("kappa must exceed 1, got {kappa}")));
    }
    if n_max == 0 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    let mut offset = f64::NEG_INFINITY;
    for n in 1..=n_max {
        let g = model.ln_pmf(n) + kappa * ((n as f64) + 1.0).ln();
        offset = offset.max(g);
    }
    let tail_bounded = match model {
        // -n log 2 + kappa log(n+1) is concave with its peak at n+1 = kappa / log 2
        WeightModel::Geometric => true,
        WeightModel::PowerLaw(p) => p.kappa >= kappa,
        WeightModel::FiniteUniform { .. } => true,
    };
    if let WeightModel::Geometric = model {
        let peak = (kappa / LN_2 - 1.0).ceil().max(1.0);
        if (n_max as f64) < peak {
            let n = peak as u64;
            offset = offset.max(-(n as f64) * LN_2 + kappa * ((n as f64) + 1.0).ln());
        }
    }
    Ok(EnvelopeCheck {
        holds: tail_bounded && offset.is_finite(),
        offset,
        holds_pointwise: tail_bounded && offset <= 0.0,
    })
}

/// Something that produces stationary symbol sequences.
pub trait SymbolSource: Sync {
    fn fill(&self, rng: &mut ChaCha8Rng, buf: &mut [u64]);
}

impl SymbolSource for WeightModel {
    fn fill(&self, rng: &mut ChaCha8Rng, buf: &mut [u64]) {
        for x in buf.iter_mut() {
            *x = self.sample_coordinate(rng);
        }
    }
}

/// Stationary Markov chain with marginal `p`: repeats the previous symbol
/// with probability `stay`, otherwise draws afresh. Dependent for `stay > 0`.
#[derive(Debug, Clone)]
pub struct StickyChain {
    pub model: WeightModel,
    pub stay: f64,
}

impl SymbolSource for StickyChain {
    fn fill(&self, rng: &mut ChaCha8Rng, buf: &mut [u64]) {
        let mut prev = self.model.sample_coordinate(rng);
        for x in buf.iter_mut() {
            if !rng.random_bool(self.stay) {
                prev = self.model.sample_coordinate(rng);
            }
            *x = prev;
        }
    }
}

/// Dependence ratio of one cylinder pair.
#[derive(Debug, Clone, Serialize)]
pub struct PairGap {
    pub a: Vec<u64>,
    pub b: Vec<u64>,
    pub joint_hits: u64,
    /// `mu(A ∩ σ^{-(i+j)} B) / (mu(A) mu(B)) - 1`.
    pub gap: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PsiReport {
    /// Largest `|gap|` over included pairs, with that pair's standard error.
    pub sup: Estimate,
    /// Largest `|gap| / stderr` over included pairs.
    pub worst_z: f64,
    pub pairs: Vec<PairGap>,
    /// Pairs with fewer than the minimum number of joint hits.
    pub excluded: Vec<(Vec<u64>, Vec<u64>)>,
}

impl PsiReport {
    pub fn consistent_with_zero(&self, sigmas: f64) -> bool {
        self.worst_z <= sigmas
    }
}

const MIN_JOINT_HITS: u64 = 100;

/// All words over `{1, 2}` of the given length.
fn small_words(depth: usize) -> Vec<Vec<u64>> {
    (0..1u64 << depth)
        .map(|bits| (0..depth).map(|j| 1 + ((bits >> (depth - 1 - j)) & 1)).collect())
        .collect()
}

/// Empirical `psi(j)` over cylinder pairs on `{1, 2}`: A of length `i`, B of
/// length `l`, separated by `j` free coordinates.
pub fn psi_mixing_gap<S: SymbolSource + ?Sized>(
    depth_i: usize,
    gap_j: usize,
    depth_l: usize,
    source: &S,
    trials: u64,
    seed: u64,
) -> Result<PsiReport> {
    if depth_i == 0 || depth_l == 0 || depth_i > 8 || depth_l > 8 {
        return Err(Error::invalid("cylinder depths must lie in 1..=8"));
    }
    if trials < 2 {
        return Err(Error::invalid("psi estimate needs at least 2 trials"));
    }
    let a_words = small_words(depth_i);
    let b_words = small_words(depth_l);
    let off = depth_i + gap_j;
    let mut buf = vec![0u64; off + depth_l];
    let mut na = vec![0u64; a_words.len()];
    let mut nb = vec![0u64; b_words.len()];
    let mut nab = vec![0u64; a_words.len() * b_words.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let index = |w: &[u64]| -> Option<usize> {
        w.iter()
            .try_fold(0usize, |acc, &x| (x <= 2).then(|| acc * 2 + (x - 1) as usize))
    };
    for _ in 0..trials {
        source.fill(&mut rng, &mut buf);
        let ia = index(&buf[..depth_i]);
        let ib = index(&buf[off..]);
        if let Some(ia) = ia {
            na[ia] += 1;
        }
        if let Some(ib) = ib {
            nb[ib] += 1;
        }
        if let (Some(ia), Some(ib)) = (ia, ib) {
            nab[ia * b_words.len() + ib] += 1;
        }
    }

    let n = trials as f64;
    let mut pairs = Vec::new();
    let mut excluded = Vec::new();
    for (ia, a) in a_words.iter().enumerate() {
        for (ib, b) in b_words.iter().enumerate() {
            let joint = nab[ia * b_words.len() + ib];
            if joint < MIN_JOINT_HITS {
                excluded.push((a.clone(), b.clone()));
                continue;
            }
            let (pa, pb, pab) = (na[ia] as f64 / n, nb[ib] as f64 / n, joint as f64 / n);
            let r = pab / (pa * pb);
            // delta method on log r over the multinomial of the indicators
            let var = (1.0 / pab - 1.0 / pa - 1.0 / pb + 2.0 * r - 1.0).max(0.0);
            pairs.push(PairGap {
                a: a.clone(),
                b: b.clone(),
                joint_hits: joint,
                gap: r - 1.0,
                stderr: r * (var / n).sqrt(),
            });
        }
    }
    if pairs.is_empty() {
        return Err(Error::invalid("every cylinder pair was undersampled"));
    }
    let worst = pairs
        .iter()
        .max_by(|x, y| x.gap.abs().total_cmp(&y.gap.abs()))
        .expect("nonempty");
    let worst_z = pairs
        .iter()
        .map(|p| p.gap.abs() / p.stderr)
        .fold(0.0, f64::max);
    Ok(PsiReport {
        sup: Estimate {
            mean: worst.gap.abs(),
            stderr: worst.stderr,
            trials,
            master_seed: seed,
        },
        worst_z,
        pairs,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricParams;
    use crate::product::build_product_cover;
    use approx::assert_relative_eq;

    fn geo() -> WeightModel {
        WeightModel::Geometric
    }

    #[test]
    fn geometric_values() {
        assert_eq!(geo().pmf(3), 0.125);
        assert_eq!(geo().tail_mass(4), 0.125);
        assert_eq!(geo().cdf(2), 0.75);
        assert_eq!(cylinder_measure(&[1, 1, 1], &geo()), 0.125);
        assert_eq!(cylinder_measure(&[], &geo()), 1.0);
        assert_eq!(cylinder_measure(&[2, 3], &geo()), 0.03125);
    }

    #[test]
    fn power_law_normalizer() {
        let m: WeightModel = "powerlaw:2".parse().unwrap();
        let z = std::f64::consts::PI.powi(2) / 6.0 - 1.0;
        let WeightModel::PowerLaw(p) = &m else { panic!() };
        assert_relative_eq!(p.normalizer(), z, max_relative = 1e-13);
        assert_relative_eq!(m.pmf(1), 0.25 / z, max_relative = 1e-13);
        assert_relative_eq!(m.tail_mass(1), 1.0, max_relative = 1e-12);
        assert_relative_eq!(m.cdf(3) + m.tail_mass(4), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn model_parsing() {
        assert!(matches!("geometric".parse::<WeightModel>(), Ok(WeightModel::Geometric)));
        assert!("powerlaw:0.9".parse::<WeightModel>().is_err());
        assert!("powerlaw:1".parse::<WeightModel>().is_err());
        assert!("powerlaw:x".parse::<WeightModel>().is_err());
        assert!("zipf".parse::<WeightModel>().is_err());
        assert_eq!("powerlaw:2.5".parse::<WeightModel>().unwrap().to_string(), "powerlaw:2.5");
    }

    #[test]
    fn natcell_masses() {
        assert_relative_eq!(natcell_mass(&NatCell::tail(4), &geo()), 0.125, max_relative = 1e-15);
        assert_relative_eq!(natcell_mass(&NatCell::finite(2, 2), &geo()), 0.25, max_relative = 1e-15);
        assert_relative_eq!(
            natcell_mass(&NatCell::finite(5, 9), &geo()),
            0.060546875,
            max_relative = 1e-15
        );
    }

    #[test]
    fn product_cells() {
        let c = build_product_cover(0.25, MetricParams::d1(0.5).unwrap()).unwrap();
        assert_relative_eq!(
            product_cell_measure(c.all_tail_cell(), &c, &geo()),
            2f64.powi(-9),
            max_relative = 1e-14
        );
        assert_relative_eq!(product_cell_measure(CellId(0), &c, &geo()), 0.125, max_relative = 1e-14);
        let total: f64 = c.cells().map(|id| product_cell_measure(id, &c, &geo())).sum();
        assert!((total - 1.0).abs() < 1e-12);

        let (id, m) = min_cell_measure(&c, &geo());
        assert_eq!(id, c.all_tail_cell());
        assert_relative_eq!(m, 2f64.powi(-9), max_relative = 1e-14);

        let c = build_product_cover(0.1, MetricParams::d1(0.5).unwrap()).unwrap();
        let (id, m) = min_cell_measure(&c, &geo());
        assert_eq!(id, c.all_tail_cell());
        assert_relative_eq!(m, 2f64.powi(-45), max_relative = 1e-13);
    }

    #[test]
    fn bracket_orders() {
        let p = MetricParams::d1(0.5).unwrap();
        let b = mmin_bracket(0.25, p, &geo()).unwrap();
        assert_relative_eq!(b.hi(), 2f64.powi(-9), max_relative = 1e-14);
        assert!(b.ln_lo <= b.ln_hi);
        // at 1/12 the cover is {1},...,{5},{6..11},{12..} and depth 5
        assert_relative_eq!(b.ln_lo, -5.0 * 11.0 * LN_2, max_relative = 1e-14);

        let coarse = mmin_bracket(1.5, p, &geo()).unwrap();
        assert_eq!(coarse.ln_hi, 0.0);
    }

    #[test]
    fn envelope_examples() {
        let c = gibbs_envelope_check(&geo(), 1.5, 1_000_000).unwrap();
        assert!(c.holds);
        assert!(!c.holds_pointwise);
        let m = WeightModel::power_law(2.0).unwrap();
        assert!(gibbs_envelope_check(&m, 1.5, 1_000_000).unwrap().holds);
        let m = WeightModel::power_law(1.2).unwrap();
        assert!(!gibbs_envelope_check(&m, 2.0, 1_000_000).unwrap().holds);
        assert!(gibbs_envelope_check(&geo(), 1.0, 10).is_err());
    }

    #[test]
    fn geometric_sampler_boundaries() {
        assert_eq!(geometric_inverse_cdf(0.5), 2);
        assert_eq!(geometric_inverse_cdf(0.75), 1);
        assert_eq!(geometric_inverse_cdf(1.0), 1);
        assert_eq!(geometric_inverse_cdf(0.25), 3);
    }

    #[test]
    fn gibbs_constant_is_one() {
        let w = [3u64, 1, 4, 1, 5];
        let ratio = cylinder_measure(&w, &geo()) / birkhoff_sum(&w, &geo()).exp();
        assert_relative_eq!(ratio, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn conditional_sampling_stays_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = WeightModel::power_law(2.0).unwrap();
        for cell in [NatCell::finite(5, 9), NatCell::tail(12), NatCell::tail(5_000_000)] {
            for _ in 0..200 {
                assert!(cell.contains(m.sample_in_cell(&cell, &mut rng)));
                assert!(cell.contains(geo().sample_in_cell(&cell, &mut rng)));
            }
        }
    }

    #[test]
    fn small_word_family() {
        assert_eq!(small_words(2), vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]);
    }
}
