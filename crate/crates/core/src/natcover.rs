//! Finite partitions of the alphabet into rho-small intervals.
//!
//! Every cover is an ordered list of adjacent intervals `{lo..hi}` ending in
//! one infinite tail cell `{N..}`. Two families are built:
//!
//! * the construction used for the product covers: singletons up to an
//!   anchor `N_s`, then maximal blocks merged downward from `N - 1` with
//!   diameter at most `1/N` (resp. `exp(-alpha N)`), then the tail;
//! * a bottom-up greedy cover with diameter at most `delta`, which is the
//!   minimum-cardinality interval cover and serves as an oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{BaseMetric, TOLERANCE};

/// `log((1 + sqrt 5)/2)`: above it every non-tail cell of the rho2 cover is a singleton.
pub fn golden_threshold() -> f64 {
    ((1.0 + 5f64.sqrt()) / 2.0).ln()
}

#[inline]
fn within(x: f64, bound: f64) -> bool {
    x <= bound * (1.0 + TOLERANCE)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NatCell {
    pub lo: u64,
    /// `None` marks the infinite tail cell.
    pub hi: Option<u64>,
}

impl NatCell {
    pub fn finite(lo: u64, hi: u64) -> Self {
        NatCell { lo, hi: Some(hi) }
    }

    pub fn tail(lo: u64) -> Self {
        NatCell { lo, hi: None }
    }

    pub fn is_tail(&self) -> bool {
        self.hi.is_none()
    }

    pub fn contains(&self, n: u64) -> bool {
        n >= self.lo && self.hi.is_none_or(|hi| n <= hi)
    }

    /// Number of elements, `None` for the tail.
    pub fn len(&self) -> Option<u64> {
        self.hi.map(|hi| hi - self.lo + 1)
    }

    /// Diameter of the cell under `base`.
    pub fn diameter(&self, base: &BaseMetric) -> f64 {
        match self.hi {
            Some(hi) => base.rho(self.lo, hi),
            None => base.tail_value(self.lo),
        }
    }
}

impl std::fmt::Display for NatCell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.hi {
            Some(hi) if hi == self.lo => write!(f, "{{{}}}", self.lo),
            Some(hi) => write!(f, "{{{}..{}}}", self.lo, hi),
            None => write!(f, "{{{}..}}", self.lo),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Construction {
    /// Singletons, maximal merged blocks, tail.
    Anchored,
    /// Bottom-up greedy maximal intervals.
    Greedy,
    /// The whole alphabet as one tail cell (scales coarser than the space).
    Whole,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NatCover {
    base: BaseMetric,
    delta: f64,
    threshold: f64,
    anchor: u64,
    singletons: u64,
    cells: Vec<NatCell>,
    construction: Construction,
}

impl NatCover {
    /// The anchored construction for `base` at scale `delta`.
    pub fn anchored(delta: f64, base: BaseMetric) -> Result<Self> {
        match base {
            BaseMetric::Rho1 => build_cover_d1(delta),
            BaseMetric::Rho2 { alpha } => build_cover_d2(delta, alpha),
        }
    }

    /// Single-cell cover `{1..}`.
    pub fn whole(delta: f64, base: BaseMetric) -> Self {
        NatCover {
            base,
            delta,
            threshold: base.alphabet_diameter(),
            anchor: 1,
            singletons: 0,
            cells: vec![NatCell::tail(1)],
            construction: Construction::Whole,
        }
    }

    pub fn base(&self) -> BaseMetric {
        self.base
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Diameter bound every finite cell satisfies.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// `N`: lower end of the tail cell.
    pub fn anchor(&self) -> u64 {
        self.anchor
    }

    /// `N_s`: number of leading singleton cells reserved by the construction.
    pub fn singletons(&self) -> u64 {
        self.singletons
    }

    pub fn cells(&self) -> &[NatCell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn construction(&self) -> Construction {
        self.construction
    }

    /// Cells strictly between the singleton run and the tail.
    pub fn blocks(&self) -> &[NatCell] {
        let s = self.singletons as usize;
        &self.cells[s.min(self.cells.len() - 1)..self.cells.len() - 1]
    }

    pub fn tail_index(&self) -> usize {
        self.cells.len() - 1
    }

    /// Index of the unique cell containing `n >= 1`.
    #[inline]
    pub fn cell_of(&self, n: u64) -> usize {
        debug_assert!(n >= 1);
        self.cells.partition_point(|c| c.lo <= n) - 1
    }

    /// Check the partition and diameter invariants, returning the first violation.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let first = self.cells.first().ok_or("empty cover")?;
        if first.lo != 1 {
            return Err(format!("first cell starts at {}", first.lo));
        }
        for pair in self.cells.windows(2) {
            let hi = pair[0]
                .hi
                .ok_or_else(|| format!("tail cell {} is not last", pair[0]))?;
            if pair[1].lo != hi + 1 {
                return Err(format!("cells {} and {} are not adjacent", pair[0], pair[1]));
            }
        }
        let last = self.cells.last().unwrap();
        if !last.is_tail() {
            return Err("last cell is finite".into());
        }
        for cell in &self.cells[..self.cells.len() - 1] {
            let hi = cell.hi.unwrap();
            if cell.lo > hi {
                return Err(format!("empty cell {cell}"));
            }
            if !within(cell.diameter(&self.base), self.threshold) {
                return Err(format!("cell {cell} exceeds threshold {}", self.threshold));
            }
        }
        if self.construction != Construction::Whole
            && !within(self.base.tail_value(last.lo), self.delta)
        {
            return Err(format!("tail {last} is wider than delta"));
        }
        Ok(())
    }

    pub fn document(&self) -> CoverDocument {
        CoverDocument {
            metric: self.base.name().to_string(),
            delta: self.delta,
            alpha: self.base.alpha(),
            threshold: self.threshold,
            cells: self.cells.iter().map(|c| (c.lo, c.hi)).collect(),
        }
    }
}

/// Wire form of a cover: `{metric, delta, alpha?, threshold, cells: [[lo, hi|null], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverDocument {
    pub metric: String,
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<f64>,
    pub threshold: f64,
    pub cells: Vec<(u64, Option<u64>)>,
}

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("delta must lie in (0,1), got {delta}")))
    }
}

/// Minimal `N` with `1/N <= delta`.
fn anchor_d1(delta: f64) -> u64 {
    let mut n = (1.0 / delta).ceil().max(1.0) as u64;
    while n > 1 && within(1.0 / (n - 1) as f64, delta) {
        n -= 1;
    }
    while !within(1.0 / n as f64, delta) {
        n += 1;
    }
    n
}

/// Minimal `N` with `exp(-alpha N) <= delta`.
fn anchor_d2(delta: f64, alpha: f64) -> u64 {
    let mut n = ((1.0 / delta).ln() / alpha).ceil().max(1.0) as u64;
    while n > 1 && within((-alpha * (n - 1) as f64).exp(), delta) {
        n -= 1;
    }
    while !within((-alpha * n as f64).exp(), delta) {
        n += 1;
    }
    n
}

/// `floor((1 + sqrt(1 + 4/delta))/2)`, the largest singleton anchor for rho1.
pub fn singleton_anchor_d1(delta: f64) -> u64 {
    ((1.0 + (1.0 + 4.0 / delta).sqrt()) / 2.0).floor() as u64
}

/// `floor(N + log(1 - e^-alpha)/alpha + 1)`, the largest singleton anchor for rho2.
pub fn singleton_anchor_d2(n: u64, alpha: f64) -> u64 {
    let v = (n as f64 + (-(-alpha).exp()).ln_1p() / alpha + 1.0).floor();
    v.max(0.0) as u64
}

/// Width of the top rho2 block below the tail: `1 + floor(log(e^-alpha + 1)/alpha)`.
pub fn first_block_width_d2(alpha: f64) -> u64 {
    1 + ((-alpha).exp().ln_1p() / alpha).floor() as u64
}

/// The constant `floor(-log(1 - e^-alpha)/alpha - 2)` bounding the rho2 block offsets.
pub fn block_offset_bound_d2(alpha: f64) -> i64 {
    (-(-(-alpha).exp()).ln_1p() / alpha - 2.0).floor() as i64
}

fn assemble(
    base: BaseMetric,
    delta: f64,
    threshold: f64,
    anchor: u64,
    singletons: u64,
    mut blocks_top_down: Vec<NatCell>,
) -> NatCover {
    let mut cells: Vec<NatCell> = (1..=singletons).map(|n| NatCell::finite(n, n)).collect();
    blocks_top_down.reverse();
    cells.extend(blocks_top_down);
    cells.push(NatCell::tail(anchor));
    NatCover {
        base,
        delta,
        threshold,
        anchor,
        singletons,
        cells,
        construction: Construction::Anchored,
    }
}

/// Anchored cover of the alphabet under rho1.
///
/// Blocks are merged downward from `N - 1`: from anchor `a` the block is the
/// maximal `{b..a}` with `1/b - 1/a <= 1/N`, i.e. `b = ceil(N a / (a + N))`,
/// clipped at `N_s + 1`. Integer arithmetic keeps the boundaries exact.
pub fn build_cover_d1(delta: f64) -> Result<NatCover> {
    check_delta(delta)?;
    let n = anchor_d1(delta);
    let ns = singleton_anchor_d1(delta).min(n - 1);
    let mut blocks = Vec::new();
    let mut a = n - 1;
    while a > ns {
        let merged = (n as u128 * a as u128).div_ceil(a as u128 + n as u128) as u64;
        let lo = merged.max(ns + 1);
        blocks.push(NatCell::finite(lo, a));
        a = lo - 1;
    }
    Ok(assemble(BaseMetric::Rho1, delta, 1.0 / n as f64, n, ns, blocks))
}

/// Anchored cover of the alphabet under rho2.
///
/// For `alpha > log phi` every cell below the tail is a singleton. Otherwise
/// singletons run up to `N_s`, and maximal blocks of diameter at most
/// `exp(-alpha N)` are merged downward from `N - 1`.
pub fn build_cover_d2(delta: f64, alpha: f64) -> Result<NatCover> {
    check_delta(delta)?;
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    let base = BaseMetric::Rho2 { alpha };
    let n = anchor_d2(delta, alpha);
    let threshold = (-alpha * n as f64).exp();
    if alpha > golden_threshold() {
        return Ok(assemble(base, delta, threshold, n, n - 1, Vec::new()));
    }
    let ns = singleton_anchor_d2(n, alpha).min(n - 1);
    let mut blocks = Vec::new();
    let mut a = n - 1;
    while a > ns {
        let mut lo = a;
        while lo - 1 > ns && within(base.rho(lo - 1, a), threshold) {
            lo -= 1;
        }
        blocks.push(NatCell::finite(lo, a));
        a = lo - 1;
    }
    Ok(assemble(base, delta, threshold, n, ns, blocks))
}

/// Minimum-cardinality interval cover with every cell of diameter at most `delta`.
///
/// Scans upward from 1; each cell is the longest interval starting at the
/// current position, and the scan stops as soon as the remaining tail fits.
pub fn greedy_min_cover(delta: f64, base: BaseMetric) -> Result<NatCover> {
    check_delta(delta)?;
    if let BaseMetric::Rho2 { alpha } = base {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
        }
    }
    let mut cells = Vec::new();
    let mut lo = 1u64;
    loop {
        if within(base.tail_value(lo), delta) {
            cells.push(NatCell::tail(lo));
            break;
        }
        let gap = base.tail_value(lo) - delta;
        let guess = match base {
            BaseMetric::Rho1 => (1.0 / gap).floor(),
            BaseMetric::Rho2 { alpha } => (-gap.ln() / alpha).floor(),
        };
        let mut hi = (guess.max(lo as f64) as u64).max(lo);
        while within(base.rho(lo, hi + 1), delta) {
            hi += 1;
        }
        while hi > lo && !within(base.rho(lo, hi), delta) {
            hi -= 1;
        }
        cells.push(NatCell::finite(lo, hi));
        lo = hi + 1;
    }
    let singletons = cells
        .iter()
        .take_while(|c| c.len() == Some(1))
        .count() as u64;
    let anchor = cells.last().unwrap().lo;
    Ok(NatCover {
        base,
        delta,
        threshold: delta,
        anchor,
        singletons,
        cells,
        construction: Construction::Greedy,
    })
}

/// Leading-order cell count `2 sqrt(1/delta)` for rho1.
pub fn predicted_count_d1(delta: f64) -> f64 {
    2.0 * (1.0 / delta).sqrt()
}

/// Leading-order cell count `log(1/delta)/alpha` for rho2.
pub fn predicted_count_d2(delta: f64, alpha: f64) -> f64 {
    (1.0 / delta).ln() / alpha
}

/// Blocks `{ceil(N/(j+1)) .. ceil(N/j) - 1}` from the closed-form endpoints,
/// clipped at `N_s + 1`, listed from the top down.
pub fn displayed_blocks_d1(delta: f64) -> Result<Vec<(u64, u64)>> {
    check_delta(delta)?;
    let n = anchor_d1(delta);
    let ns = singleton_anchor_d1(delta).min(n - 1);
    let mut out = Vec::new();
    for j in 1u64.. {
        let hi = n.div_ceil(j) - 1;
        if hi <= ns {
            break;
        }
        let lo = n.div_ceil(j + 1).max(ns + 1);
        if lo <= hi {
            out.push((lo, hi));
        }
    }
    Ok(out)
}

/// Side-by-side comparison of merged blocks against the closed-form endpoints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndpointComparison {
    pub delta: f64,
    pub merged: Vec<(u64, u64)>,
    pub displayed: Vec<(u64, u64)>,
    /// Positions (top-down) where the two lists differ, including length mismatch.
    pub mismatches: usize,
}

pub fn compare_block_endpoints_d1(delta: f64) -> Result<EndpointComparison> {
    let cover = build_cover_d1(delta)?;
    let merged: Vec<(u64, u64)> = cover
        .blocks()
        .iter()
        .rev()
        .map(|c| (c.lo, c.hi.unwrap()))
        .collect();
    let displayed = displayed_blocks_d1(delta)?;
    let common = merged
        .iter()
        .zip(&displayed)
        .filter(|(a, b)| a != b)
        .count();
    let mismatches = common + merged.len().abs_diff(displayed.len());
    Ok(EndpointComparison {
        delta,
        merged,
        displayed,
        mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cells(cover: &NatCover) -> Vec<(u64, Option<u64>)> {
        cover.cells().iter().map(|c| (c.lo, c.hi)).collect()
    }

    #[test]
    fn d1_hand_examples() {
        let c = build_cover_d1(0.1).unwrap();
        assert_eq!(
            cells(&c),
            vec![
                (1, Some(1)),
                (2, Some(2)),
                (3, Some(3)),
                (4, Some(4)),
                (5, Some(9)),
                (10, None)
            ]
        );
        assert_eq!(c.anchor(), 10);
        assert_eq!(c.singletons(), 3);
        assert_eq!(c.blocks().len(), 2);
        assert_eq!(c.len() as u64, 1 + c.blocks().len() as u64 + c.singletons());
        c.validate().unwrap();

        let c = build_cover_d1(0.25).unwrap();
        assert_eq!(
            cells(&c),
            vec![(1, Some(1)), (2, Some(2)), (3, Some(3)), (4, None)]
        );
        c.validate().unwrap();
    }

    #[test]
    fn d1_fine_scale_count() {
        let c = build_cover_d1(1e-4).unwrap();
        assert_eq!(c.anchor(), 10_000);
        assert_eq!(c.singletons(), 100);
        assert_eq!(c.len() as u64, 1 + c.blocks().len() as u64 + 100);
        assert_eq!(c.len(), 186);
        c.validate().unwrap();
    }

    #[test]
    fn d1_rejects_bad_scale() {
        assert!(build_cover_d1(1.0).is_err());
        assert!(build_cover_d1(0.0).is_err());
        assert!(build_cover_d1(-0.5).is_err());
        assert!(build_cover_d1(f64::NAN).is_err());
    }

    #[test]
    fn d2_singleton_regime() {
        let c = build_cover_d2(0.01, 1.0).unwrap();
        assert_eq!(
            cells(&c),
            vec![
                (1, Some(1)),
                (2, Some(2)),
                (3, Some(3)),
                (4, Some(4)),
                (5, None)
            ]
        );
        c.validate().unwrap();
        assert_eq!(build_cover_d2(1e-3, 1.0).unwrap().len(), 7);
        assert_eq!(build_cover_d2(1e-4, 1.0).unwrap().len(), 10);
    }

    #[test]
    fn d2_block_regime() {
        assert_eq!(first_block_width_d2(0.2), 3);
        let c = build_cover_d2(1e-3, 0.2).unwrap();
        c.validate().unwrap();
        let top = c.blocks().last().unwrap();
        assert_eq!(top.len(), Some(first_block_width_d2(0.2)));
        assert_eq!(top.hi, Some(c.anchor() - 1));
        assert!(c.blocks().iter().any(|b| b.len().unwrap() >= 2));
        assert_eq!(c.len() as u64, 1 + c.blocks().len() as u64 + c.singletons());
    }

    #[test]
    fn d2_rejects_bad_alpha() {
        assert!(build_cover_d2(0.1, 0.0).is_err());
        assert!(build_cover_d2(0.1, f64::INFINITY).is_err());
        assert!(build_cover_d2(1.5, 1.0).is_err());
    }

    #[test]
    fn golden_threshold_is_root() {
        let g = golden_threshold();
        assert!((g.exp() - (-g).exp() - 1.0).abs() < 1e-14);
        // The top block is a singleton exactly above the threshold.
        assert_eq!(first_block_width_d2(g + 1e-6), 1);
        assert_eq!(first_block_width_d2(g - 1e-3), 2);
    }

    #[test]
    fn greedy_examples() {
        let g = greedy_min_cover(0.1, BaseMetric::Rho1).unwrap();
        assert_eq!(
            cells(&g),
            vec![
                (1, Some(1)),
                (2, Some(2)),
                (3, Some(4)),
                (5, Some(10)),
                (11, None)
            ]
        );
        g.validate().unwrap();
        assert!(greedy_min_cover(0.25, BaseMetric::Rho1).unwrap().len() <= 4);
        let g = greedy_min_cover(0.01, BaseMetric::Rho2 { alpha: 1.0 }).unwrap();
        assert_eq!(g.len(), 5);
    }

    #[test]
    fn predicted_counts() {
        assert!((predicted_count_d1(1e-4) - 200.0).abs() < 1e-9);
        assert!((predicted_count_d1(1e-2) - 20.0).abs() < 1e-12);
        assert_eq!(predicted_count_d1(1.0), 2.0);
        assert!((predicted_count_d2(1e-3, 1.0) - 6.9078).abs() < 1e-4);
        assert!((predicted_count_d2(1e-2, 0.5) - 9.2103).abs() < 1e-4);
        let a = 0.7f64;
        assert!((predicted_count_d2((-a).exp(), a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cell_lookup() {
        let c = build_cover_d1(0.1).unwrap();
        assert_eq!(c.cell_of(7), 4);
        assert_eq!(c.cells()[c.cell_of(7)], NatCell::finite(5, 9));
        assert_eq!(c.cell_of(1), 0);
        assert_eq!(c.cell_of(1_000_000_000), c.tail_index());
        assert_eq!(c.cell_of(u64::MAX), c.tail_index());
    }

    #[test]
    fn endpoint_comparison_reports_disagreement() {
        let cmp = compare_block_endpoints_d1(0.1).unwrap();
        assert_eq!(cmp.mismatches, 0);
        let cmp = compare_block_endpoints_d1(1e-2).unwrap();
        assert!(cmp.mismatches > 0);
        assert_eq!(cmp.displayed.len(), 9);
        assert_eq!(cmp.merged.len(), 8);
    }

    #[test]
    fn document_roundtrip() {
        let c = build_cover_d2(0.01, 1.0).unwrap();
        let json = serde_json::to_string(&c.document()).unwrap();
        assert!(json.contains("\"cells\":[[1,1],[2,2],[3,3],[4,4],[5,null]]"));
        let back: CoverDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c.document());
        let d1 = build_cover_d1(0.25).unwrap().document();
        assert!(!serde_json::to_string(&d1).unwrap().contains("alpha"));
    }
}
