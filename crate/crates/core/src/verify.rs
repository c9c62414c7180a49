//! Named numerical checks shared by the command-line `verify` suites and the acceptance tests.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::{
    bernoulli_example_bounds, coupon_envelope, dim_diagnostic, hitting_sandwich,
    strictly_increasing,
};
use crate::dynamics::{
    all_hitting_exact, expected_cover_mc, expected_hitting_exact, expected_hitting_mc,
    hitting_survival_exact, hitting_tail_law, kac_return_mc,
};
use crate::error::{Error, Result};
use crate::gibbs::{
    mmin_bracket, product_cell_measure, psi_mixing_gap, StickyChain, SymbolSource, WeightModel,
};
use crate::metric::{BaseMetric, MetricParams};
use crate::natcover::{build_cover_d1, build_cover_d2, first_block_width_d2, greedy_min_cover};
use crate::product::{build_product_cover, random_point, verify_sandwich, CellId, ProductCover};
use crate::stats::trial_seed;

pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub details: Vec<String>,
}

impl Check {
    fn new(name: &str) -> Self {
        Check {
            name: name.to_string(),
            passed: true,
            details: Vec::new(),
        }
    }

    /// Record one assertion.
    fn expect(&mut self, ok: bool, detail: impl Into<String>) {
        let detail = detail.into();
        self.details
            .push(format!("{} {}", if ok { "ok  " } else { "FAIL" }, detail));
        self.passed &= ok;
    }

    fn note(&mut self, detail: impl Into<String>) {
        self.details.push(format!("note {}", detail.into()));
    }

    fn error(&mut self, what: &str, e: Error) {
        self.expect(false, format!("{what}: {e}"));
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", if self.passed { "PASS" } else { "FAIL" }, self.name)
    }
}

fn d1(theta: f64) -> MetricParams {
    MetricParams::d1(theta).expect("valid theta")
}

fn d2(theta: f64, alpha: f64) -> MetricParams {
    MetricParams::d2(theta, alpha).expect("valid parameters")
}

/// Alphabet covers under the polynomial metric.
pub fn check_counts_d1() -> Check {
    let mut c = Check::new("counts_d1");
    let show = |delta: f64| -> Result<Vec<String>> {
        Ok(build_cover_d1(delta)?.cells().iter().map(|x| x.to_string()).collect())
    };
    for (delta, want) in [
        (0.1, vec!["{1}", "{2}", "{3}", "{4}", "{5..9}", "{10..}"]),
        (0.25, vec!["{1}", "{2}", "{3}", "{4..}"]),
    ] {
        match show(delta) {
            Ok(got) => c.expect(got == want, format!("delta={delta} cells {}", got.join(","))),
            Err(e) => c.error("build", e),
        }
    }
    for (delta, want) in [(1e-2, 0.95), (1e-4, 1.005), (1e-6, 0.9995)] {
        match build_cover_d1(delta) {
            Ok(cover) => {
                let r = cover.len() as f64 * delta.sqrt() / 2.0;
                c.expect(
                    (r - want).abs() <= 1e-3,
                    format!("delta={delta:e} K={} K*sqrt(delta)/2={r:.4} target {want}", cover.len()),
                );
            }
            Err(e) => c.error("build", e),
        }
    }
    c
}

/// Alphabet covers under the exponential metric.
pub fn check_counts_d2() -> Check {
    let mut c = Check::new("counts_d2");
    for (delta, want) in [(1e-2, 5usize), (1e-3, 7), (1e-4, 10)] {
        match build_cover_d2(delta, 1.0) {
            Ok(cover) => {
                let ceil = (1.0 / delta).ln().ceil() as usize;
                let singles = cover.blocks().is_empty();
                c.expect(
                    cover.len() == want && cover.len() == ceil && singles,
                    format!("alpha=1 delta={delta:e} K={} ceil(log 1/delta)={ceil}", cover.len()),
                );
            }
            Err(e) => c.error("build", e),
        }
    }
    match build_cover_d2(1e-3, 0.2) {
        Ok(cover) => {
            let width = cover.blocks().last().and_then(|b| b.len());
            let want = first_block_width_d2(0.2);
            c.expect(
                width == Some(3) && want == 3,
                format!("alpha=0.2 first block width {width:?}, C_alpha1={want}"),
            );
        }
        Err(e) => c.error("build", e),
    }
    c
}

/// Greedy minimum against the construction.
pub fn check_minimality() -> Check {
    let mut c = Check::new("minimality");
    for delta in [0.1, 0.05, 1e-2, 1e-3, 1e-4] {
        let pair = build_cover_d1(delta).and_then(|p| Ok((p, greedy_min_cover(delta, BaseMetric::Rho1)?)));
        match pair {
            Ok((built, greedy)) => {
                let ratio = greedy.len() as f64 / built.len() as f64;
                c.expect(
                    greedy.len() <= built.len(),
                    format!("delta={delta:e} greedy {} <= construction {} (ratio {ratio:.4})", greedy.len(), built.len()),
                );
                if delta == 0.1 {
                    c.expect(
                        (greedy.len(), built.len()) == (5, 6),
                        "delta=0.1 discrepancy 5 vs 6 reproduced",
                    );
                }
                if delta == 1e-4 {
                    c.expect(ratio >= 0.95, format!("delta=1e-4 ratio {ratio:.4} >= 0.95"));
                }
            }
            Err(e) => c.error("build", e),
        }
    }
    c
}

/// Randomized ball sandwich over several covers, plus the analytic outer inclusion.
pub fn check_sandwich(points: u64, samples: u64, seed: u64) -> Check {
    let mut c = Check::new("sandwich");
    let cases = [
        ("d1 delta=0.25", 0.25, d1(0.5)),
        ("d1 delta=0.1", 0.1, d1(0.5)),
        ("d2 delta=0.01 alpha=1", 0.01, d2(0.5, 1.0)),
    ];
    for (i, (label, delta, params)) in cases.iter().enumerate() {
        let cover = match build_product_cover(*delta, *params) {
            Ok(cover) => cover,
            Err(e) => {
                c.error(label, e);
                continue;
            }
        };
        c.expect(
            cover.outer_inclusion_holds(),
            format!("{label}: diameter {:.6} <= T delta {:.6}", cover.cell_diameter(), cover.sandwich_constant() * delta),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, i as u64));
        let (mut inner, mut outer, mut diag) = (0u64, 0u64, 0u64);
        let mut witness = None;
        for p in 0..points {
            let x = random_point(&mut rng, &cover);
            match verify_sandwich(&x, &cover, samples, trial_seed(seed ^ 0x5a5a, p)) {
                Ok(r) => {
                    inner += r.inner_violations;
                    outer += r.outer_violations;
                    diag += r.diagnostic.is_some() as u64;
                    if witness.is_none() {
                        witness = r.inner_witness.map(|(y, d)| (x.clone(), y, d));
                    }
                }
                Err(e) => c.error(label, e),
            }
        }
        c.expect(inner == 0, format!("{label}: {inner} inner violations"));
        c.expect(outer == 0, format!("{label}: {outer} outer violations"));
        if let Some((x, y, d)) = witness {
            c.note(format!("{label}: d({x}, {y}) = {d:.6} but the cells differ"));
        }
        if diag > 0 {
            c.note(format!("{label}: {diag} base points ran out of rejection attempts"));
        }
    }
    for delta in [0.5, 0.3, 0.2, 0.1, 0.05, 0.02, 0.01] {
        for params in [d1(0.5), d1(0.3), d2(0.5, 1.0), d2(0.7, 0.2)] {
            if let Ok(cover) = ProductCover::build(delta, params, u64::MAX) {
                if !cover.outer_inclusion_holds() {
                    c.expect(false, format!("analytic outer inclusion at delta={delta} {params:?}"));
                }
            }
        }
    }
    c
}

fn quarter() -> Result<ProductCover> {
    build_product_cover(0.25, d1(0.5))
}

/// Kac's lemma on the all-tail cell.
pub fn check_kac(trials: u64, seed: u64) -> Check {
    let mut c = Check::new("kac");
    let g = WeightModel::Geometric;
    let run = || -> Result<_> {
        let cover = quarter()?;
        let cell = cover.all_tail_cell();
        let target = 1.0 / product_cell_measure(cell, &cover, &g);
        Ok((target, kac_return_mc(cell, &cover, &g, trials, seed)?))
    };
    match run() {
        Ok((target, e)) => c.expect(
            e.within(target, 3.0),
            format!("mean {:.3} +- {:.3} vs 1/mu(U) = {target:.3} (z = {:.2})", e.mean, e.stderr, e.z_score(target)),
        ),
        Err(e) => c.error("kac", e),
    }
    c
}

/// `sum_{n>=0} P(τ > n)` by dynamic programming over the last `k-1`
/// symbols, stopped once the geometric tail bound is below `tol`.
/// Returns the partial sum and the bound on what remains.
pub fn hitting_tail_sum(pattern: &[usize], q: &[f64], tol: f64) -> (f64, f64) {
    let k = pattern.len();
    let big_k = q.len();
    let states = big_k.pow(k as u32 - 1);
    let mass: f64 = pattern.iter().map(|&a| q[a]).product();
    let target = pattern.iter().fold(0usize, |acc, &a| acc * big_k + a);
    // all (k-1)-prefixes, no window complete yet
    let mut dist: Vec<f64> = (0..states)
        .map(|s| {
            let mut p = 1.0;
            let mut r = s;
            for _ in 0..k - 1 {
                p *= q[r % big_k];
                r /= big_k;
            }
            p
        })
        .collect();
    let mut sum = 1.0; // P(τ > 0)
    loop {
        let mut next = vec![0.0; states];
        for (s, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (a, &qa) in q.iter().enumerate() {
                let w = s * big_k + a;
                if w != target {
                    next[w % states] += p * qa;
                }
            }
        }
        dist = next;
        let survive: f64 = dist.iter().sum();
        sum += survive;
        let bound = k as f64 * survive / mass;
        if bound < tol {
            return (sum, bound);
        }
    }
}

/// Hitting expectations: oracle sandwich, Monte Carlo agreement and closed forms.
pub fn check_hitting(trials: u64, seed: u64) -> Check {
    let mut c = Check::new("hitting");
    let g = WeightModel::Geometric;
    let cover = match quarter() {
        Ok(cover) => cover,
        Err(e) => {
            c.error("cover", e);
            return c;
        }
    };
    match all_hitting_exact(&cover, &g) {
        Ok(exact) => {
            let s = hitting_sandwich(&cover, &g, &exact);
            c.expect(
                s.r_min >= 0.5 && s.r_max <= 4.0,
                format!("mu(U) E*(tau_U) over 64 cells in [{:.4}, {:.4}]", s.r_min, s.r_max),
            );
            for (i, cell) in (0..64).step_by(9).map(CellId).enumerate() {
                match expected_hitting_mc(cell, &cover, &g, trials, trial_seed(seed, i as u64)) {
                    Ok(e) => {
                        let want = exact[cell.0 as usize];
                        c.expect(
                            e.within(want, 3.0),
                            format!("cell {}: MC {:.2} +- {:.2} vs E* {want:.4}", cover.render(cell), e.mean, e.stderr),
                        );
                    }
                    Err(e) => c.error("mc", e),
                }
            }
        }
        Err(e) => c.error("exact", e),
    }

    // depth one: every cell waits 1/q
    match ProductCover::build(0.25, d1(0.1), 1 << 24) {
        Ok(k1) => {
            let q = [0.5, 0.25, 0.125, 0.125];
            let ok = k1.depth() == 1
                && k1.cells().zip(q).all(|(cell, q)| {
                    expected_hitting_exact(cell, &k1, &g).is_ok_and(|e| (e - 1.0 / q).abs() <= 1e-6)
                });
            c.expect(ok, "k=1 cells match 1/q");
        }
        Err(e) => c.error("k=1 cover", e),
    }

    // depth two against the tail-sum enumeration, K = 2 and K = 3
    for (delta, theta, alphabet) in [(0.5, 0.5, 2usize), (1.0 / 3.0, 0.4, 3)] {
        let run = || -> Result<f64> {
            let cover = ProductCover::build(delta, d1(theta), 1 << 24)?;
            if (cover.alphabet_size(), cover.depth()) != (alphabet, 2) {
                return Err(Error::invalid("unexpected cover shape"));
            }
            let q: Vec<f64> = cover
                .base()
                .cells()
                .iter()
                .map(|cell| crate::gibbs::natcell_mass(cell, &g))
                .collect();
            let mut worst: f64 = 0.0;
            for cell in cover.cells() {
                let exact = expected_hitting_exact(cell, &cover, &g)?;
                let (sum, bound) = hitting_tail_sum(&cover.decode(cell), &q, 1e-9);
                worst = worst.max((exact - sum).abs() - bound);
            }
            Ok(worst)
        };
        match run() {
            Ok(gap) => c.expect(gap <= 1e-6, format!("k=2 K={alphabet}: max |E* - tail sum| = {:.2e}", gap.max(0.0))),
            Err(e) => c.error("k=2", e),
        }
    }
    c
}

const TAIL_GRID: [u64; 4] = [256, 512, 1024, 2048];

/// Exponential law for the all-tail cell.
pub fn check_tail_law(trials: u64, seed: u64) -> Check {
    let mut c = Check::new("tail_law");
    let g = WeightModel::Geometric;
    let cover = match quarter() {
        Ok(cover) => cover,
        Err(e) => {
            c.error("cover", e);
            return c;
        }
    };
    let cell = cover.all_tail_cell();
    match hitting_tail_law(cell, &cover, &g, &TAIL_GRID, trials, seed) {
        Ok(rows) => {
            for r in rows {
                let exact = hitting_survival_exact(cell, &cover, &g, r.n).unwrap_or(f64::NAN);
                c.expect(
                    r.z_score() <= 3.0,
                    format!(
                        "n={}: P(tau>n) = {:.4} +- {:.4} vs exp = {:.4} (z = {:.1}; exact {:.4})",
                        r.n, r.survival, r.stderr, r.exponential, r.z_score(), exact
                    ),
                );
            }
        }
        Err(e) => c.error("tail law", e),
    }
    // an aperiodic cell of the same mass, for comparison
    let aperiodic = cover.encode(&[2, 3, 3]);
    if let Ok(rows) = hitting_tail_law(aperiodic, &cover, &g, &TAIL_GRID, trials, seed ^ 1) {
        let z = rows.iter().map(|r| r.z_score()).fold(0.0, f64::max);
        c.note(format!("aperiodic cell (2,3,3): largest z = {z:.2}"));
    }
    c
}

/// Cover-time estimate against the hitting and coupon envelopes, and the grid normalization.
pub fn check_cover_envelope(trials: u64, seed: u64) -> Check {
    let mut c = Check::new("cover_envelope");
    let g = WeightModel::Geometric;
    let p = d1(0.5);
    let run = || -> Result<_> {
        let cover = quarter()?;
        let exact = all_hitting_exact(&cover, &g)?;
        let worst = exact.iter().copied().fold(0.0, f64::max);
        let coupon = coupon_envelope(&cover, &exact)?;
        let est = expected_cover_mc(0.25, p, &g, trials, seed)?;
        Ok((worst, coupon, est))
    };
    match run() {
        Ok((worst, coupon, e)) => {
            let slack = 3.0 * e.stderr;
            c.expect(
                worst <= e.mean + slack && e.mean <= coupon + slack,
                format!("max E* {worst:.2} <= E(cover) {:.2} +- {:.2} <= coupon {coupon:.2}", e.mean, e.stderr),
            );
            c.note(format!("empirical coupon constant {:.4}", e.mean / coupon));
        }
        Err(e) => c.error("delta=0.25", e),
    }
    let mut ratios = Vec::new();
    for delta in [0.5, 0.25, 0.125] {
        let run = || -> Result<f64> {
            let e = expected_cover_mc(delta, p, &g, trials, seed)?;
            let hi = mmin_bracket(delta, p, &g)?.hi();
            Ok(e.mean * hi / (1.0 / delta).ln().powi(2))
        };
        match run() {
            Ok(r) => {
                c.note(format!("delta={delta}: E * M_hi / log^2 = {r:.4}"));
                ratios.push(r);
            }
            Err(e) => c.error(&format!("delta={delta}"), e),
        }
    }
    if ratios.len() == 3 {
        let spread = ratios.iter().copied().fold(0.0, f64::max)
            / ratios.iter().copied().fold(f64::INFINITY, f64::min);
        c.expect(spread <= 10.0, format!("normalized ratio spread {spread:.3} <= 10"));
    }
    c
}

const PSI_GAPS: [usize; 3] = [0, 1, 5];
const PSI_DEPTHS: [usize; 2] = [1, 2];

fn psi_consistent<S: SymbolSource + ?Sized>(
    c: &mut Check,
    label: &str,
    source: &S,
    trials: u64,
    seed: u64,
) -> Result<Vec<bool>> {
    let mut out = Vec::new();
    for (a, &j) in PSI_GAPS.iter().enumerate() {
        for (b, &d) in PSI_DEPTHS.iter().enumerate() {
            let r = psi_mixing_gap(d, j, d, source, trials, trial_seed(seed, (a * 2 + b) as u64))?;
            let ok = r.sup.within(0.0, 3.0);
            c.note(format!(
                "{label} i=l={d} j={j}: psi = {:.4} +- {:.4} ({} pairs, {} excluded)",
                r.sup.mean,
                r.sup.stderr,
                r.pairs.len(),
                r.excluded.len()
            ));
            out.push(ok);
        }
    }
    Ok(out)
}

/// ψ-mixing: zero for the product measures, nonzero for a dependent control.
pub fn check_psi(models: &[WeightModel], trials: u64, seed: u64) -> Check {
    let mut c = Check::new("psi");
    for (i, m) in models.iter().enumerate() {
        match psi_consistent(&mut c, &m.to_string(), m, trials, trial_seed(seed, i as u64)) {
            Ok(v) => c.expect(v.iter().all(|&ok| ok), format!("{m}: psi consistent with 0 in every case")),
            Err(e) => c.error(&m.to_string(), e),
        }
    }
    let control = StickyChain {
        model: WeightModel::Geometric,
        stay: 0.5,
    };
    match psi_consistent(&mut c, "sticky control", &control, trials, trial_seed(seed, 99)) {
        // the chain forgets at rate stay^j, so only the short gaps are required to show
        Ok(v) => {
            let short: Vec<bool> = PSI_GAPS
                .iter()
                .flat_map(|&j| PSI_DEPTHS.iter().map(move |_| j))
                .zip(v)
                .filter(|&(j, _)| j <= 1)
                .map(|(_, ok)| ok)
                .collect();
            c.expect(short.iter().all(|&ok| !ok), "sticky control: psi nonzero at gaps 0 and 1")
        }
        Err(e) => c.error("control", e),
    }
    c
}

pub const DIM_GRID: [f64; 4] = [0.5, 0.25, 0.1, 0.05];
const DIM_TARGETS: [f64; 4] = [2.0, 4.5, 22.05, 26.35];

/// Minkowski-dimension diagnostic with a bounded control.
pub fn check_dim(grid: &[f64]) -> Check {
    let mut c = Check::new("dim");
    let p = d1(0.5);
    match dim_diagnostic(grid, &WeightModel::Geometric, p) {
        Ok(pts) => {
            let r: Vec<f64> = pts.iter().map(|x| x.ratio).collect();
            let shown: Vec<String> = r.iter().map(|x| format!("{x:.4}")).collect();
            c.expect(strictly_increasing(&r), format!("ratios {} strictly increasing", shown.join(", ")));
            if grid == DIM_GRID {
                for (pt, want) in pts.iter().zip(DIM_TARGETS) {
                    c.expect(
                        (pt.ratio / want - 1.0).abs() <= 0.01,
                        format!("delta={}: {:.4} vs {want}", pt.delta, pt.ratio),
                    );
                }
            }
        }
        Err(e) => c.error("dim", e),
    }
    // uniform on {1,2,3}: ratio <= k log 3 / log(1/δ) <= 3 log2 3 for δ <= 1/2
    let size = 3u64;
    let fine: Vec<f64> = (1..=20).map(|j| (-(j as f64)).exp2()).collect();
    let control = WeightModel::finite_uniform(size).expect("nonempty");
    match dim_diagnostic(&fine, &control, p) {
        Ok(pts) => {
            let top = pts.iter().map(|x| x.ratio).fold(0.0, f64::max);
            let cap = 3.0 * (size as f64).log2();
            c.expect(top <= cap, format!("uniform control max ratio {top:.4} <= {cap:.4} down to 2^-20"));
        }
        Err(e) => c.error("control", e),
    }
    c
}

/// The geometric example's minimal cell, computed and as displayed.
pub fn check_bernoulli_example() -> Check {
    let mut c = Check::new("bernoulli_example");
    let eps = 1.0 / 6.0;
    match bernoulli_example_bounds(0.25, eps, 0.5) {
        Ok(b) => {
            c.expect(
                (b.depth, b.anchor) == (3, 4)
                    && (b.recomputed() / 1.953125e-3 - 1.0).abs() < 1e-9
                    && (b.displayed() / 2.790178571e-4 - 1.0).abs() < 1e-6,
                format!("(k,N)=(3,4): recomputed {:.4e}, displayed {:.4e}", b.recomputed(), b.displayed()),
            );
            c.expect(b.discrepancy, "discrepancy flagged");
        }
        Err(e) => c.error("example", e),
    }
    let rows: Result<Vec<_>> = (2..=6)
        .map(|j| bernoulli_example_bounds((-(j as f64)).exp2(), eps, 0.5))
        .collect();
    match rows {
        Ok(rows) => {
            let rec: Vec<f64> = rows.iter().map(|b| b.normalized(b.recomputed_exponent)).collect();
            let dis: Vec<f64> = rows.iter().map(|b| b.normalized(b.displayed_exponent)).collect();
            let spread = |v: &[f64]| {
                v.iter().copied().fold(0.0, f64::max) / v.iter().copied().fold(f64::INFINITY, f64::min)
            };
            let mutual_ok = rec.iter().zip(&dis).all(|(a, b)| (0.5..=2.0).contains(&(b / a)));
            c.expect(
                spread(&rec) <= 2.0 && spread(&dis) <= 2.0 && mutual_ok,
                format!(
                    "exponent / ((1/delta) log2 1/delta) on 2^-2..2^-6: recomputed {:.3}..{:.3}, displayed {:.3}..{:.3}",
                    rec.iter().copied().fold(f64::INFINITY, f64::min),
                    rec.iter().copied().fold(0.0, f64::max),
                    dis.iter().copied().fold(f64::INFINITY, f64::min),
                    dis.iter().copied().fold(0.0, f64::max),
                ),
            );
        }
        Err(e) => c.error("growth", e),
    }
    c
}

/// Groups of checks selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Kac,
    Psi,
    Counts,
    Sandwich,
    Bounds,
    Dim,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Suite::All,
            "kac" => Suite::Kac,
            "psi" => Suite::Psi,
            "counts" => Suite::Counts,
            "sandwich" => Suite::Sandwich,
            "bounds" => Suite::Bounds,
            "dim" => Suite::Dim,
            other => return Err(Error::invalid(format!("unknown suite '{other}'"))),
        })
    }
}

/// Knobs for [`run_suite`].
#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub seed: u64,
    pub psi_models: Vec<WeightModel>,
    pub dim_grid: Vec<f64>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            seed: DEFAULT_SEED,
            psi_models: vec![WeightModel::Geometric, WeightModel::power_law(2.0).expect("valid")],
            dim_grid: DIM_GRID.to_vec(),
        }
    }
}

pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Vec<Check> {
    let s = opts.seed;
    let mut out = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Counts {
        out.extend([check_counts_d1(), check_counts_d2(), check_minimality()]);
    }
    if all || suite == Suite::Sandwich {
        out.push(check_sandwich(100, 1000, s));
    }
    if all || suite == Suite::Kac {
        out.push(check_kac(200_000, s));
    }
    if all || suite == Suite::Bounds {
        out.push(check_hitting(10_000, s));
        out.push(check_tail_law(100_000, s));
        out.push(check_cover_envelope(2000, s));
        out.push(check_bernoulli_example());
    }
    if all || suite == Suite::Psi {
        out.push(check_psi(&opts.psi_models, 200_000, s));
    }
    if all || suite == Suite::Dim {
        out.push(check_dim(&opts.dim_grid));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_sum_fair_coin() {
        // "00" on a fair coin: 6 flips to completion, so E[τ] = 6 - 1
        let (s, b) = hitting_tail_sum(&[0, 0], &[0.5, 0.5], 1e-12);
        assert!((s - 5.0).abs() <= b + 1e-12);
    }

    #[test]
    fn cheap_checks_run() {
        assert!(check_counts_d2().passed);
        assert!(check_minimality().passed);
        assert!(check_bernoulli_example().passed);
    }

    #[test]
    fn suite_names() {
        assert_eq!("psi".parse::<Suite>().unwrap(), Suite::Psi);
        assert!("nope".parse::<Suite>().is_err());
    }
}
