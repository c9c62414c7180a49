//! Depth-k product covers of the shift space.
//!
//! A cell is a k-tuple of alphabet-cover indices `(i_0, ..., i_{k-1})`; it
//! contains every sequence whose j-th coordinate lies in cell `i_j` of the
//! alphabet cover. Cells are never materialised. A tuple is packed into a
//! [`CellId`] in mixed radix `K` with `i_0` most significant, so a sliding
//! window over a symbol stream updates its id in O(1).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{
    depth_argument, depth_for_scale, product_cell_diameter, shift_distance, MetricParams, Point,
    TOLERANCE,
};
use crate::natcover::{NatCell, NatCover};

/// Default cap on `K^k` for anything that tracks cells individually.
pub const DEFAULT_CELL_BUDGET: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct CellId(pub u64);

#[derive(Debug, Clone)]
pub struct ProductCover {
    params: MetricParams,
    delta: f64,
    base: NatCover,
    depth: usize,
    sandwich: f64,
    cell_count: u64,
    clamped: bool,
}

impl ProductCover {
    /// Product cover at scale `delta`; `delta` must be admissible for the
    /// alphabet cover and the depth formula.
    pub fn build(delta: f64, params: MetricParams, budget: u64) -> Result<Self> {
        let base = NatCover::anchored(delta, params.base())?;
        let depth = depth_for_scale(delta, &params)?;
        Self::assemble(delta, params, base, depth, budget, false)
    }

    /// Like [`build`](Self::build), but scales at or above the coarsest
    /// admissible one collapse to the single-cell cover of depth 1.
    pub fn build_clamped(delta: f64, params: MetricParams, budget: u64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::invalid(format!("delta must be positive, got {delta}")));
        }
        if delta >= 1.0 || depth_argument(delta, &params) >= 1.0 {
            let base = NatCover::whole(delta, params.base());
            return Self::assemble(delta, params, base, 1, budget, true);
        }
        Self::build(delta, params, budget)
    }

    fn assemble(
        delta: f64,
        params: MetricParams,
        base: NatCover,
        depth: usize,
        budget: u64,
        clamped: bool,
    ) -> Result<Self> {
        let k = base.len() as u128;
        let cells = (0..depth).try_fold(1u128, |acc, _| acc.checked_mul(k));
        let cells = cells.unwrap_or(u128::MAX);
        if cells > budget as u128 {
            return Err(Error::CellBudget { cells, budget });
        }
        Ok(ProductCover {
            params,
            delta,
            base,
            depth,
            sandwich: params.sandwich_constant(),
            cell_count: cells as u64,
            clamped,
        })
    }

    pub fn params(&self) -> &MetricParams {
        &self.params
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn base(&self) -> &NatCover {
        &self.base
    }

    /// `K`, the number of alphabet cells.
    pub fn alphabet_size(&self) -> usize {
        self.base.len()
    }

    /// `k`, the number of constrained coordinates.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// The sandwich constant `T`.
    pub fn sandwich_constant(&self) -> f64 {
        self.sandwich
    }

    pub fn cell_count(&self) -> u64 {
        self.cell_count
    }

    /// True when the requested scale was coarser than the space.
    pub fn is_clamped(&self) -> bool {
        self.clamped
    }

    /// Diameter bound for every cell.
    pub fn cell_diameter(&self) -> f64 {
        product_cell_diameter(self.depth, self.delta, &self.params)
    }

    /// Whether every cell provably lies in the `T delta` ball around each of its points.
    pub fn outer_inclusion_holds(&self) -> bool {
        self.cell_diameter() <= self.sandwich * self.delta * (1.0 + TOLERANCE)
    }

    pub fn encode(&self, tuple: &[usize]) -> CellId {
        debug_assert_eq!(tuple.len(), self.depth);
        let k = self.alphabet_size() as u64;
        CellId(tuple.iter().fold(0u64, |acc, &i| acc * k + i as u64))
    }

    pub fn decode(&self, id: CellId) -> Vec<usize> {
        let k = self.alphabet_size() as u64;
        let mut rest = id.0;
        let mut out = vec![0usize; self.depth];
        for slot in out.iter_mut().rev() {
            *slot = (rest % k) as usize;
            rest /= k;
        }
        out
    }

    /// `(i_0,...,i_{k-1})`.
    pub fn render(&self, id: CellId) -> String {
        let parts: Vec<String> = self.decode(id).iter().map(|i| i.to_string()).collect();
        format!("({})", parts.join(","))
    }

    /// Cell containing every sequence whose first `k` coordinates are `window`.
    pub fn window_cell(&self, window: &[u64]) -> CellId {
        assert_eq!(window.len(), self.depth, "window length must equal depth");
        let k = self.alphabet_size() as u64;
        CellId(
            window
                .iter()
                .fold(0u64, |acc, &n| acc * k + self.base.cell_of(n) as u64),
        )
    }

    pub fn point_cell(&self, x: &Point) -> CellId {
        self.window_cell(&x.window(self.depth))
    }

    /// The cell whose every coordinate is the tail cell.
    pub fn all_tail_cell(&self) -> CellId {
        CellId(self.cell_count - 1)
    }

    pub fn cells(&self) -> impl Iterator<Item = CellId> {
        (0..self.cell_count).map(CellId)
    }
}

/// Product cover at `delta` with the default cell budget.
pub fn build_product_cover(delta: f64, params: MetricParams) -> Result<ProductCover> {
    ProductCover::build(delta, params, DEFAULT_CELL_BUDGET)
}

/// Outcome of the randomized ball-sandwich test around one point.
#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    /// Points within `delta` of `x` that fall in a different cell.
    pub inner_violations: u64,
    /// Points in the cell of `x` farther than `T delta` from `x`.
    pub outer_violations: u64,
    pub inner_samples: u64,
    pub outer_samples: u64,
    /// Closest offending point found by the inner test, with its distance.
    pub inner_witness: Option<(Point, f64)>,
    /// Set when rejection sampling ran out of attempts.
    pub diagnostic: Option<String>,
}

impl SandwichReport {
    pub fn is_clean(&self) -> bool {
        self.inner_violations == 0 && self.outer_violations == 0
    }
}

/// Extra coordinates perturbed past the cover depth.
const HORIZON_SLACK: usize = 6;
const ATTEMPTS_PER_SAMPLE: u64 = 400;

/// Falsification test of `B_delta(x) ⊂ U(x) ⊂ B_{T delta}(x)`.
///
/// Inner: points near `x` are proposed by perturbing one to three
/// coordinates and kept when `d(x, y) <= delta`. Outer: points are drawn
/// coordinate-wise from the alphabet cells of `x` on the first `k`
/// coordinates and arbitrarily after that.
pub fn verify_sandwich(
    x: &Point,
    cover: &ProductCover,
    samples: u64,
    seed: u64,
) -> Result<SandwichReport> {
    if samples == 0 {
        return Err(Error::invalid("samples must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = cover.params();
    let delta = cover.delta();
    let home = cover.point_cell(x);
    let horizon = cover.depth() + HORIZON_SLACK;
    let len = horizon.max(x.prefix().len());
    let base_coords: Vec<u64> = (0..len).map(|n| x.coord(n)).collect();

    let mut report = SandwichReport {
        inner_violations: 0,
        outer_violations: 0,
        inner_samples: 0,
        outer_samples: 0,
        inner_witness: None,
        diagnostic: None,
    };

    let mut attempts = 0u64;
    let budget = samples * ATTEMPTS_PER_SAMPLE;
    while report.inner_samples < samples && attempts < budget {
        attempts += 1;
        let mut coords = base_coords.clone();
        let mut tail = x.tail();
        for _ in 0..rng.random_range(1..=3) {
            let j = rng.random_range(0..horizon);
            coords[j] = perturb(&mut rng, coords[j]);
        }
        if rng.random_bool(0.1) {
            tail = perturb(&mut rng, tail);
        }
        let y = Point::new(coords, tail).expect("perturbation keeps symbols positive");
        let d = shift_distance(x, &y, params);
        if d > delta * (1.0 + TOLERANCE) {
            continue;
        }
        report.inner_samples += 1;
        if cover.point_cell(&y) != home {
            report.inner_violations += 1;
            if report.inner_witness.as_ref().is_none_or(|(_, w)| d < *w) {
                report.inner_witness = Some((y, d));
            }
        }
    }
    if report.inner_samples < samples {
        report.diagnostic = Some(format!(
            "inner test accepted {} of {} samples in {} attempts",
            report.inner_samples, samples, attempts
        ));
    }

    let outer_radius = cover.sandwich_constant() * delta;
    let cells: Vec<NatCell> = x
        .window(cover.depth())
        .iter()
        .map(|&n| cover.base().cells()[cover.base().cell_of(n)])
        .collect();
    for _ in 0..samples {
        let mut coords: Vec<u64> = cells.iter().map(|c| sample_in_cell(&mut rng, c)).collect();
        let extra = rng.random_range(0..=8);
        coords.extend((0..extra).map(|_| wild_symbol(&mut rng)));
        let y = Point::new(coords, wild_symbol(&mut rng)).expect("positive symbols");
        debug_assert_eq!(cover.point_cell(&y), home);
        report.outer_samples += 1;
        if shift_distance(x, &y, params) > outer_radius * (1.0 + TOLERANCE) {
            report.outer_violations += 1;
        }
    }
    Ok(report)
}

fn perturb<R: Rng>(rng: &mut R, a: u64) -> u64 {
    match rng.random_range(0..3) {
        0 => {
            let step = rng.random_range(1..=3u64);
            if rng.random_bool(0.5) || a <= step {
                a.saturating_add(step)
            } else {
                a - step
            }
        }
        1 => a.saturating_mul(1u64 << rng.random_range(1..=20)),
        _ => rng.random_range(1..=a.saturating_add(10)),
    }
}

fn sample_in_cell<R: Rng>(rng: &mut R, cell: &NatCell) -> u64 {
    match cell.hi {
        Some(hi) => rng.random_range(cell.lo..=hi),
        None => {
            // log-uniform spread over several orders of magnitude above lo
            let scale = 2f64.powf(rng.random_range(0.0..40.0));
            let v = cell.lo as f64 * scale;
            if v >= u64::MAX as f64 {
                u64::MAX
            } else {
                (v as u64).max(cell.lo)
            }
        }
    }
}

fn wild_symbol<R: Rng>(rng: &mut R) -> u64 {
    match rng.random_range(0..3) {
        0 => rng.random_range(1..=4),
        1 => rng.random_range(1..=1000),
        _ => 1 + (rng.random::<u64>() >> rng.random_range(0..64)),
    }
}

/// A point with a random prefix, used as a base point for sandwich checks.
pub fn random_point<R: Rng>(rng: &mut R, cover: &ProductCover) -> Point {
    let len = rng.random_range(0..=cover.depth() + 4);
    let reach = cover.base().anchor().saturating_mul(2).max(4);
    let draw = |rng: &mut R| match rng.random_range(0..3) {
        0 => 1 + rng.random::<u32>().trailing_zeros() as u64,
        1 => rng.random_range(1..=reach),
        _ => wild_symbol(rng),
    };
    let prefix: Vec<u64> = (0..len).map(|_| draw(rng)).collect();
    let tail = draw(rng);
    Point::new(prefix, tail).expect("positive symbols")
}
