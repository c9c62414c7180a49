//! Orbits, hitting times and cover times.
//!
//! Under a product measure the cell of `σ^n x` depends only on which
//! alphabet cell each of `x_n, ..., x_{n+k-1}` falls in, and those indices
//! are i.i.d. with law `q_i = μ(V_i)`. Streams therefore draw cell indices
//! directly and keep the packed window id up to date by rolling it:
//! `id' = (id mod K^{k-1}) K + s`.
//!
//! Hitting times count from `n = 1`; the window at position 0 is drawn but
//! never counts. Trials are keyed by `(master_seed, trial)` and collected in
//! index order, so results do not depend on the number of worker threads.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gibbs::{ln_natcell_mass, ln_product_cell_measure, min_cell, WeightModel};
use crate::metric::MetricParams;
use crate::product::{CellId, ProductCover, DEFAULT_CELL_BUDGET};
use crate::stats::{proportion, trial_rng, trial_seed, Estimate};

/// Hard cap on steps in a single trial.
pub const STEP_CAP: u64 = 1_000_000_000;
/// Largest `1 / mass` a simulation will attempt.
pub const INVERSE_MASS_LIMIT: f64 = 1e7;
/// Fewest trials accepted by the hitting and return-time estimators.
pub const MIN_TRIALS: u64 = 100;

/// Law of the reduced symbols of a cover.
#[derive(Debug, Clone)]
pub struct ReducedLaw {
    q: Vec<f64>,
    ln_q: Vec<f64>,
    sampler: WeightedIndex<f64>,
    alphabet: u64,
    depth: usize,
    /// `K^{k-1}`.
    top: u64,
}

impl ReducedLaw {
    pub fn new(cover: &ProductCover, model: &WeightModel) -> Result<Self> {
        let ln_q: Vec<f64> = cover
            .base()
            .cells()
            .iter()
            .map(|c| ln_natcell_mass(c, model))
            .collect();
        let q: Vec<f64> = ln_q.iter().map(|l| l.exp()).collect();
        let sampler = WeightedIndex::new(&q)
            .map_err(|e| Error::invalid(format!("cell masses do not form a law: {e}")))?;
        let alphabet = q.len() as u64;
        Ok(ReducedLaw {
            q,
            ln_q,
            sampler,
            alphabet,
            depth: cover.depth(),
            top: alphabet.pow(cover.depth() as u32 - 1),
        })
    }

    pub fn masses(&self) -> &[f64] {
        &self.q
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet as usize
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    #[inline]
    fn draw(&self, rng: &mut ChaCha8Rng) -> u64 {
        self.sampler.sample(rng) as u64
    }

    fn ln_cell_mass(&self, tuple: &[usize]) -> f64 {
        tuple.iter().map(|&i| self.ln_q[i]).sum()
    }
}

/// Sliding window over an i.i.d. reduced-symbol stream.
pub struct OrbitStream<'a> {
    law: &'a ReducedLaw,
    rng: ChaCha8Rng,
    window: u64,
    position: u64,
}

impl<'a> OrbitStream<'a> {
    /// Stream for trial `trial`, positioned at `n = 0` with a random window.
    pub fn new(law: &'a ReducedLaw, master_seed: u64, trial: u64) -> Self {
        let mut rng = trial_rng(master_seed, trial);
        let mut window = 0u64;
        for _ in 0..law.depth {
            window = window * law.alphabet + law.draw(&mut rng);
        }
        OrbitStream {
            law,
            rng,
            window,
            position: 0,
        }
    }

    /// Stream positioned at `n = 0` inside a given cell.
    pub fn starting_in(law: &'a ReducedLaw, cell: CellId, master_seed: u64, trial: u64) -> Self {
        OrbitStream {
            law,
            rng: trial_rng(master_seed, trial),
            window: cell.0,
            position: 0,
        }
    }

    /// Cell of the current window.
    pub fn cell(&self) -> CellId {
        CellId(self.window)
    }

    pub fn position(&self) -> u64 {
        self.position
    }

    /// Shift once and return the new window's cell.
    #[inline]
    pub fn advance(&mut self) -> CellId {
        let s = self.law.draw(&mut self.rng);
        self.window = (self.window % self.law.top) * self.law.alphabet + s;
        self.position += 1;
        CellId(self.window)
    }
}

/// First `n >= 1` with the window in `cell`.
pub fn hitting_time_trial(cell: CellId, stream: &mut OrbitStream<'_>, cap: u64) -> Option<u64> {
    while stream.position() < cap {
        if stream.advance() == cell {
            return Some(stream.position());
        }
    }
    None
}

/// First `n` such that the windows at `1..=n` have visited every cell of positive mass.
pub fn cover_time_trial(
    stream: &mut OrbitStream<'_>,
    cell_count: u64,
    null_cells: &[CellId],
    cap: u64,
) -> Option<u64> {
    let mut seen = vec![0u64; cell_count.div_ceil(64) as usize];
    for c in null_cells {
        seen[(c.0 / 64) as usize] |= 1 << (c.0 % 64);
    }
    let mut left = cell_count - null_cells.len() as u64;
    if left == 0 {
        return Some(0);
    }
    while stream.position() < cap {
        let c = stream.advance().0;
        let (w, b) = ((c / 64) as usize, 1u64 << (c % 64));
        if seen[w] & b == 0 {
            seen[w] |= b;
            left -= 1;
            if left == 0 {
                return Some(stream.position());
            }
        }
    }
    None
}

/// Run `trials` trials in parallel and return their values in trial order.
fn run_trials<F>(trials: u64, f: F) -> Result<Vec<u64>>
where
    F: Fn(u64) -> Option<u64> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|t| f(t).ok_or(Error::StepCap { trial: t, cap: STEP_CAP }))
        .collect()
}

fn summarize(samples: &[u64], master_seed: u64) -> Result<Estimate> {
    Estimate::from_samples(samples.iter().map(|&v| v as f64), master_seed)
}

fn check_trials(trials: u64, min: u64) -> Result<()> {
    if trials < min {
        return Err(Error::invalid(format!("need at least {min} trials, got {trials}")));
    }
    Ok(())
}

fn preflight(ln_mass: f64) -> Result<()> {
    let inverse_mass = (-ln_mass).exp();
    if inverse_mass.is_nan() || inverse_mass > INVERSE_MASS_LIMIT {
        return Err(Error::Infeasible {
            inverse_mass,
            limit: INVERSE_MASS_LIMIT,
        });
    }
    Ok(())
}

fn check_cell(cell: CellId, cover: &ProductCover) -> Result<()> {
    if cell.0 >= cover.cell_count() {
        return Err(Error::invalid(format!(
            "cell {} outside a cover of {} cells",
            cell.0,
            cover.cell_count()
        )));
    }
    Ok(())
}

/// One record of raw trial output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub value: u64,
}

pub fn trial_records(samples: &[u64], master_seed: u64) -> Vec<TrialRecord> {
    samples
        .iter()
        .enumerate()
        .map(|(t, &value)| TrialRecord {
            trial: t as u64,
            seed: trial_seed(master_seed, t as u64),
            value,
        })
        .collect()
}

pub fn hitting_samples(
    cell: CellId,
    cover: &ProductCover,
    model: &WeightModel,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<u64>> {
    check_cell(cell, cover)?;
    let law = ReducedLaw::new(cover, model)?;
    preflight(law.ln_cell_mass(&cover.decode(cell)))?;
    run_trials(trials, |t| {
        hitting_time_trial(cell, &mut OrbitStream::new(&law, master_seed, t), STEP_CAP)
    })
}

pub fn expected_hitting_mc(
    cell: CellId,
    cover: &ProductCover,
    model: &WeightModel,
    trials: u64,
    master_seed: u64,
) -> Result<Estimate> {
    check_trials(trials, MIN_TRIALS)?;
    summarize(&hitting_samples(cell, cover, model, trials, master_seed)?, master_seed)
}

/// Return times to `cell` from a start distributed as μ conditioned on `cell`.
pub fn kac_samples(
    cell: CellId,
    cover: &ProductCover,
    model: &WeightModel,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<u64>> {
    check_cell(cell, cover)?;
    let law = ReducedLaw::new(cover, model)?;
    preflight(law.ln_cell_mass(&cover.decode(cell)))?;
    run_trials(trials, |t| {
        let mut s = OrbitStream::starting_in(&law, cell, master_seed, t);
        hitting_time_trial(cell, &mut s, STEP_CAP)
    })
}

pub fn kac_return_mc(
    cell: CellId,
    cover: &ProductCover,
    model: &WeightModel,
    trials: u64,
    master_seed: u64,
) -> Result<Estimate> {
    check_trials(trials, MIN_TRIALS)?;
    summarize(&kac_samples(cell, cover, model, trials, master_seed)?, master_seed)
}

/// Cells of zero mass; they are never visited and never required.
fn null_cells(cover: &ProductCover, law: &ReducedLaw) -> Vec<CellId> {
    if law.q.iter().all(|&q| q > 0.0) {
        return Vec::new();
    }
    cover
        .cells()
        .filter(|&c| cover.decode(c).iter().any(|&i| law.q[i] == 0.0))
        .collect()
}

pub fn cover_samples(
    cover: &ProductCover,
    model: &WeightModel,
    trials: u64,
    master_seed: u64,
) -> Result<Vec<u64>> {
    let law = ReducedLaw::new(cover, model)?;
    preflight(min_cell(cover.base(), cover.depth(), model).ln_mass)?;
    let nulls = null_cells(cover, &law);
    let count = cover.cell_count();
    run_trials(trials, |t| {
        let mut s = OrbitStream::new(&law, master_seed, t);
        cover_time_trial(&mut s, count, &nulls, STEP_CAP)
    })
}

pub fn cover_time_mc(
    cover: &ProductCover,
    model: &WeightModel,
    trials: u64,
    master_seed: u64,
) -> Result<Estimate> {
    check_trials(trials, 2)?;
    summarize(&cover_samples(cover, model, trials, master_seed)?, master_seed)
}

/// Cover-time estimate for the product cover at `delta`.
pub fn expected_cover_mc(
    delta: f64,
    params: MetricParams,
    model: &WeightModel,
    trials: u64,
    master_seed: u64,
) -> Result<Estimate> {
    check_trials(trials, 2)?;
    let cover = ProductCover::build_clamped(delta, params, DEFAULT_CELL_BUDGET)?;
    cover_time_mc(&cover, model, trials, master_seed)
}

/// Cover times of the coarse and fine cell covers that bracket the metric cover time.
#[derive(Debug, Clone, Serialize)]
pub struct CoverBracket {
    pub delta: f64,
    /// `2 delta`, clamped to a single cell when coarser than the space.
    pub lower_delta: f64,
    /// `delta / (2T)`.
    pub upper_delta: f64,
    pub lower: Estimate,
    pub upper: Estimate,
}

/// Whether a cover at `delta` can be simulated.
pub fn simulation_feasible(delta: f64, params: MetricParams, model: &WeightModel) -> Result<()> {
    let cover = ProductCover::build_clamped(delta, params, DEFAULT_CELL_BUDGET)?;
    preflight(min_cell(cover.base(), cover.depth(), model).ln_mass)
}

/// Finest scale in `[from, to]` on a ratio-1.01 ladder that can be simulated.
pub fn finest_feasible_scale(
    from: f64,
    to: f64,
    params: MetricParams,
    model: &WeightModel,
) -> Option<f64> {
    let mut s = from;
    while s <= to {
        if simulation_feasible(s, params, model).is_ok() {
            return Some(s);
        }
        s *= 1.01;
    }
    None
}

pub fn cover_bracket(
    delta: f64,
    params: MetricParams,
    model: &WeightModel,
    trials: u64,
    master_seed: u64,
) -> Result<CoverBracket> {
    let lower_delta = 2.0 * delta;
    let upper_delta = delta / (2.0 * params.sandwich_constant());
    if let Err(e) = simulation_feasible(upper_delta, params, model) {
        if !matches!(e, Error::Infeasible { .. } | Error::CellBudget { .. }) {
            return Err(e);
        }
        let finest = finest_feasible_scale(upper_delta, lower_delta, params, model).unwrap_or(f64::NAN);
        return Err(Error::BracketRefused {
            scale: upper_delta,
            finest,
            reason: e.to_string(),
        });
    }
    Ok(CoverBracket {
        delta,
        lower_delta,
        upper_delta,
        lower: expected_cover_mc(lower_delta, params, model, trials, master_seed)?,
        upper: expected_cover_mc(upper_delta, params, model, trials, master_seed)?,
    })
}

/// Failure-function automaton recognising one tuple in the reduced stream.
#[derive(Debug, Clone)]
pub struct PatternAutomaton {
    pattern: Vec<usize>,
    q: Vec<f64>,
    /// `next[s][a]` for states `0..=k`.
    next: Vec<Vec<usize>>,
}

impl PatternAutomaton {
    pub fn new(pattern: Vec<usize>, q: Vec<f64>) -> Result<Self> {
        let k = pattern.len();
        let alphabet = q.len();
        if k == 0 || pattern.iter().any(|&a| a >= alphabet) {
            return Err(Error::invalid("pattern must be nonempty over the given alphabet"));
        }
        let mut next = vec![vec![0usize; alphabet]; k + 1];
        next[0][pattern[0]] = 1;
        let mut restart = 0usize;
        for s in 1..=k {
            next[s] = next[restart].clone();
            if s < k {
                next[s][pattern[s]] = s + 1;
                restart = next[restart][pattern[s]];
            }
        }
        Ok(PatternAutomaton { pattern, q, next })
    }

    pub fn len(&self) -> usize {
        self.pattern.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pattern.is_empty()
    }

    pub fn step(&self, state: usize, symbol: usize) -> usize {
        self.next[state][symbol]
    }

    /// Expected number of symbols read from the start state until the pattern completes.
    pub fn expected_completion(&self) -> Result<f64> {
        if let Some(&a) = self.pattern.iter().find(|&&a| self.q[a] <= 0.0) {
            return Err(Error::Singular(format!("symbol {a} of the pattern has zero mass")));
        }
        let k = self.len();
        // (I - Q) e = 1 on the transient states
        let mut m = vec![vec![0.0; k + 1]; k];
        for s in 0..k {
            m[s][s] += 1.0;
            m[s][k] = 1.0;
            for (a, &qa) in self.q.iter().enumerate() {
                let t = self.next[s][a];
                if t < k {
                    m[s][t] -= qa;
                }
            }
        }
        Ok(solve(m)?[0])
    }

    /// Probability that the pattern has not completed after `symbols` symbols.
    pub fn survival(&self, symbols: u64) -> f64 {
        let k = self.len();
        let mut dist = vec![0.0; k];
        dist[0] = 1.0;
        for _ in 0..symbols {
            let mut nd = vec![0.0; k];
            for (s, &p) in dist.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                for (a, &qa) in self.q.iter().enumerate() {
                    let t = self.next[s][a];
                    if t < k {
                        nd[t] += p * qa;
                    }
                }
            }
            dist = nd;
        }
        dist.iter().sum()
    }
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve(mut m: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let n = m.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .expect("nonempty");
        if m[piv][col].abs() < 1e-300 {
            return Err(Error::Singular(format!("zero pivot in column {col}")));
        }
        m.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f != 0.0 {
                for c in col..=n {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    Ok(x)
}

fn automaton_for(cell: CellId, cover: &ProductCover, model: &WeightModel) -> Result<PatternAutomaton> {
    check_cell(cell, cover)?;
    let q = cover
        .base()
        .cells()
        .iter()
        .map(|c| ln_natcell_mass(c, model).exp())
        .collect();
    PatternAutomaton::new(cover.decode(cell), q)
}

/// Exact `E[τ_U]` for a product cell.
///
/// The windows at `n >= 1` read only `x_1, x_2, ...`, so `τ = W - k + 1`
/// where `W` counts symbols of that stream until the tuple first completes.
pub fn expected_hitting_exact(cell: CellId, cover: &ProductCover, model: &WeightModel) -> Result<f64> {
    let a = automaton_for(cell, cover, model)?;
    Ok(a.expected_completion()? - a.len() as f64 + 1.0)
}

/// Exact `P(τ_U > n)`.
pub fn hitting_survival_exact(
    cell: CellId,
    cover: &ProductCover,
    model: &WeightModel,
    n: u64,
) -> Result<f64> {
    let a = automaton_for(cell, cover, model)?;
    Ok(a.survival(n + a.len() as u64 - 1))
}

/// Exact hitting expectations of every cell, in cell order.
pub fn all_hitting_exact(cover: &ProductCover, model: &WeightModel) -> Result<Vec<f64>> {
    cover
        .cells()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&c| expected_hitting_exact(c, cover, model))
        .collect()
}

/// One grid point of the survival comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailPoint {
    pub n: u64,
    pub survival: f64,
    pub stderr: f64,
    /// `exp(-μ(U) n)`.
    pub exponential: f64,
}

impl TailPoint {
    pub fn z_score(&self) -> f64 {
        let gap = (self.survival - self.exponential).abs();
        if gap == 0.0 {
            0.0
        } else {
            gap / self.stderr
        }
    }
}

pub fn hitting_tail_law(
    cell: CellId,
    cover: &ProductCover,
    model: &WeightModel,
    n_grid: &[u64],
    trials: u64,
    master_seed: u64,
) -> Result<Vec<TailPoint>> {
    if n_grid.is_empty() {
        return Err(Error::invalid("the n grid is empty"));
    }
    check_trials(trials, 2)?;
    let samples = hitting_samples(cell, cover, model, trials, master_seed)?;
    let mass = ln_product_cell_measure(cell, cover, model).exp();
    Ok(n_grid
        .iter()
        .map(|&n| {
            let over = samples.iter().filter(|&&t| t > n).count() as u64;
            let (survival, stderr) = proportion(over, trials);
            TailPoint {
                n,
                survival,
                stderr,
                exponential: (-mass * n as f64).exp(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product::build_product_cover;
    use approx::assert_relative_eq;

    fn d1() -> MetricParams {
        MetricParams::d1(0.5).unwrap()
    }

    fn quarter() -> ProductCover {
        build_product_cover(0.25, d1()).unwrap()
    }

    #[test]
    fn automaton_transitions() {
        // pattern 0 1 0 over {0, 1}
        let a = PatternAutomaton::new(vec![0, 1, 0], vec![0.5, 0.5]).unwrap();
        assert_eq!((a.step(0, 0), a.step(0, 1)), (1, 0));
        assert_eq!((a.step(1, 0), a.step(1, 1)), (1, 2));
        assert_eq!((a.step(2, 0), a.step(2, 1)), (3, 0));
        assert_eq!((a.step(3, 0), a.step(3, 1)), (1, 2));
        // fair coin, HTH: 10 flips on average
        assert_relative_eq!(a.expected_completion().unwrap(), 10.0, max_relative = 1e-12);
    }

    #[test]
    fn exact_k1_is_reciprocal_mass() {
        let c = quarter();
        let cover = ProductCover::build_clamped(0.25, d1(), 1 << 24).unwrap();
        assert_eq!(cover.depth(), c.depth());
        let a = PatternAutomaton::new(vec![2], vec![0.5, 0.25, 0.125, 0.125]).unwrap();
        assert_relative_eq!(a.expected_completion().unwrap(), 8.0, max_relative = 1e-12);
    }

    #[test]
    fn exact_values_at_quarter() {
        let c = quarter();
        let g = WeightModel::Geometric;
        let e = expected_hitting_exact(c.all_tail_cell(), &c, &g).unwrap();
        assert_relative_eq!(e, 582.0, max_relative = 1e-10);
        let e = expected_hitting_exact(c.encode(&[2, 3, 3]), &c, &g).unwrap();
        assert_relative_eq!(e, 510.0, max_relative = 1e-10);
        let e = expected_hitting_exact(CellId(0), &c, &g).unwrap();
        assert_relative_eq!(e, 12.0, max_relative = 1e-10);
    }

    #[test]
    fn singular_pattern() {
        let a = PatternAutomaton::new(vec![1], vec![1.0, 0.0]).unwrap();
        assert!(matches!(a.expected_completion(), Err(Error::Singular(_))));
    }

    #[test]
    fn survival_starts_at_one() {
        let c = quarter();
        let s = hitting_survival_exact(c.all_tail_cell(), &c, &WeightModel::Geometric, 0).unwrap();
        assert_eq!(s, 1.0);
    }

    #[test]
    fn rolling_window_matches_recomputation() {
        let c = quarter();
        let law = ReducedLaw::new(&c, &WeightModel::Geometric).unwrap();
        let mut s = OrbitStream::new(&law, 5, 0);
        let mut hist: Vec<usize> = c.decode(s.cell());
        for _ in 0..500 {
            let id = s.advance();
            let t = c.decode(id);
            assert_eq!(&t[..2], &hist[hist.len() - 2..]);
            hist.push(t[2]);
        }
    }

    #[test]
    fn degenerate_cover_is_covered_at_once() {
        let c = ProductCover::build_clamped(1.5, d1(), 1 << 24).unwrap();
        let e = cover_samples(&c, &WeightModel::Geometric, 10, 1).unwrap();
        assert!(e.iter().all(|&v| v == 1));
    }

    #[test]
    fn trial_count_preconditions() {
        let c = quarter();
        let g = WeightModel::Geometric;
        assert!(expected_hitting_mc(CellId(0), &c, &g, 10, 1).is_err());
        assert!(kac_return_mc(CellId(0), &c, &g, 99, 1).is_err());
        assert!(expected_cover_mc(0.25, d1(), &g, 1, 1).is_err());
        assert!(expected_hitting_mc(CellId(64), &c, &g, 100, 1).is_err());
    }

    #[test]
    fn cap_is_reported() {
        let c = quarter();
        let law = ReducedLaw::new(&c, &WeightModel::Geometric).unwrap();
        let mut s = OrbitStream::new(&law, 1, 0);
        assert_eq!(hitting_time_trial(c.all_tail_cell(), &mut s, 3), None);
        assert_eq!(s.position(), 3);
    }

    #[test]
    fn preflight_refuses_light_cells() {
        let c = build_product_cover(0.1, d1()).unwrap();
        let err = cover_samples(&c, &WeightModel::Geometric, 2, 1).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
    }

    #[test]
    fn bracket_reports_finest_scale() {
        let err = cover_bracket(0.5, d1(), &WeightModel::Geometric, 10, 1).unwrap_err();
        let Error::BracketRefused { scale, finest, .. } = err else {
            panic!("expected a refusal")
        };
        assert_relative_eq!(scale, 1.0 / 12.0);
        assert!((1.0 / 6.0..=1.01 / 6.0).contains(&finest));
    }

    #[test]
    fn trial_records_carry_seeds() {
        let r = trial_records(&[4, 5], 9);
        assert_eq!(r[1].trial, 1);
        assert_eq!(r[1].seed, trial_seed(9, 1));
        assert_eq!(r[1].value, 5);
    }
}
