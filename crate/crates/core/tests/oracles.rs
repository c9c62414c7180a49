//! Checks against values computed independently of the library's algorithms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shiftlab_core::dynamics::{
    cover_time_trial, expected_hitting_exact, hitting_samples, hitting_survival_exact,
    hitting_time_trial, kac_return_mc, OrbitStream, ReducedLaw, STEP_CAP,
};
use shiftlab_core::gibbs::{
    base_masses, cylinder_measure, natcell_mass, product_cell_measure, WeightModel,
};
use shiftlab_core::metric::{rho1, rho2, shift_distance, MetricParams, Point};
use shiftlab_core::natcover::NatCell;
use shiftlab_core::product::{build_product_cover, CellId, ProductCover};
use shiftlab_core::stats::Estimate;

fn d1() -> MetricParams {
    MetricParams::d1(0.5).unwrap()
}

fn quarter() -> ProductCover {
    build_product_cover(0.25, d1()).unwrap()
}

fn q_of(cover: &ProductCover, model: &WeightModel) -> Vec<f64> {
    base_masses(cover.base(), model)
}

/// Conway's leading-number formula for the waiting time of a pattern.
fn conway_waiting_time(pattern: &[usize], q: &[f64]) -> f64 {
    let k = pattern.len();
    (1..=k)
        .filter(|&j| pattern[..j] == pattern[k - j..])
        .map(|j| 1.0 / pattern[..j].iter().map(|&a| q[a]).product::<f64>())
        .sum()
}

#[test]
fn exact_hitting_matches_conway_on_every_quarter_cell() {
    let cover = quarter();
    let g = WeightModel::Geometric;
    let q = q_of(&cover, &g);
    for cell in cover.cells() {
        let pattern = cover.decode(cell);
        let want = conway_waiting_time(&pattern, &q) - pattern.len() as f64 + 1.0;
        let got = expected_hitting_exact(cell, &cover, &g).unwrap();
        assert!((got / want - 1.0).abs() < 1e-10, "{pattern:?}: {got} vs {want}");
    }
}

#[test]
fn exact_hitting_matches_conway_for_power_law() {
    let cover = build_product_cover(0.1, d1()).unwrap();
    let m = WeightModel::power_law(2.5).unwrap();
    let q = q_of(&cover, &m);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let cell = CellId(rng.random_range(0..cover.cell_count()));
        let pattern = cover.decode(cell);
        let want = conway_waiting_time(&pattern, &q) - pattern.len() as f64 + 1.0;
        let got = expected_hitting_exact(cell, &cover, &m).unwrap();
        assert!((got / want - 1.0).abs() < 1e-9, "{pattern:?}: {got} vs {want}");
    }
}

#[test]
fn known_quarter_values() {
    let cover = quarter();
    let g = WeightModel::Geometric;
    let e = |t: [usize; 3]| expected_hitting_exact(cover.encode(&t), &cover, &g).unwrap();
    assert!((e([3, 3, 3]) - 582.0).abs() < 1e-8);
    assert!((e([2, 3, 3]) - 510.0).abs() < 1e-8);
    assert!((e([0, 0, 0]) - 12.0).abs() < 1e-10);
}

/// `P(τ > n)` by summing over every reduced word `x_1 .. x_{n+k-1}`.
fn survival_by_enumeration(pattern: &[usize], q: &[f64], n: usize) -> f64 {
    let k = pattern.len();
    let len = n + k - 1;
    let big = q.len();
    let mut total = 0.0;
    let mut word = vec![0usize; len];
    loop {
        let hit = (0..n).any(|m| word[m..m + k] == *pattern);
        if !hit {
            total += word.iter().map(|&a| q[a]).product::<f64>();
        }
        let mut i = 0;
        while i < len {
            word[i] += 1;
            if word[i] < big {
                break;
            }
            word[i] = 0;
            i += 1;
        }
        if i == len {
            return total;
        }
    }
}

#[test]
fn survival_matches_enumeration_on_tiny_covers() {
    // delta=0.5 under d1(0.5): two alphabet cells, depth 2
    let cover = build_product_cover(0.5, d1()).unwrap();
    assert_eq!((cover.alphabet_size(), cover.depth()), (2, 2));
    for model in [WeightModel::Geometric, WeightModel::power_law(3.0).unwrap()] {
        let q = q_of(&cover, &model);
        for cell in cover.cells() {
            let pattern = cover.decode(cell);
            for n in [1usize, 2, 3, 5, 9] {
                let want = survival_by_enumeration(&pattern, &q, n);
                let got = hitting_survival_exact(cell, &cover, &model, n as u64).unwrap();
                assert!((got - want).abs() < 1e-12, "{pattern:?} n={n}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn rho_against_rational_arithmetic() {
    for a in 1..40u64 {
        for b in 1..40u64 {
            // |1/a - 1/b| = |b - a| / (a b), reduced by the gcd before dividing
            let (num, den) = (a.abs_diff(b), a * b);
            let g = gcd(num, den).max(1);
            let want = (num / g) as f64 / (den / g) as f64;
            assert_eq!(rho1(a, b).unwrap(), want);
        }
    }
    assert!((rho2(1, 3, 1.0).unwrap() - ((-1.0f64).exp() - (-3.0f64).exp())).abs() < 1e-16);
    assert!(rho1(0, 1).is_err());
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[test]
fn distance_of_constant_sequences() {
    // d((a,a,...),(b,b,...)) = rho(a,b)/(1-theta)
    let p = MetricParams::d1(0.3).unwrap();
    let d = shift_distance(&Point::constant(2).unwrap(), &Point::constant(5).unwrap(), &p);
    assert!((d - 0.3 / 0.7).abs() < 1e-15);
    // one differing coordinate at n contributes theta^n rho
    let x = Point::new(vec![1, 1, 1], 1).unwrap();
    let y = Point::new(vec![1, 1, 2], 1).unwrap();
    assert!((shift_distance(&x, &y, &p) - 0.09 * 0.5).abs() < 1e-15);
}

#[test]
fn geometric_cell_masses_are_telescoping_sums() {
    let g = WeightModel::Geometric;
    for lo in 1..20u64 {
        for hi in lo..lo + 8 {
            let want = 0.5f64.powi(lo as i32 - 1) - 0.5f64.powi(hi as i32);
            let got = natcell_mass(&NatCell::finite(lo, hi), &g);
            assert!((got / want - 1.0).abs() < 1e-12);
        }
        let tail = natcell_mass(&NatCell::tail(lo), &g);
        assert!((tail / 0.5f64.powi(lo as i32 - 1) - 1.0).abs() < 1e-12);
    }
    assert_eq!(cylinder_measure(&[1, 1, 1], &g), 0.125);
    assert_eq!(cylinder_measure(&[2, 3], &g), 1.0 / 32.0);
}

#[test]
fn power_law_masses_sum_to_one() {
    for kappa in [1.5, 2.0, 3.0] {
        let m = WeightModel::power_law(kappa).unwrap();
        let direct: f64 = (1..=200_000u64).map(|n| m.pmf(n)).sum::<f64>() + m.tail_mass(200_001);
        assert!((direct - 1.0).abs() < 1e-9, "kappa={kappa}: {direct}");
        // p(n) is proportional to (n+1)^-kappa
        assert!((m.pmf(3) / m.pmf(1) / 2f64.powf(-kappa) - 1.0).abs() < 1e-12);
    }
}

/// Pearson statistic of draws against the model on bins `1..=bins` plus a tail bin.
fn chi_square(model: &WeightModel, draws: usize, bins: u64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; bins as usize + 1];
    for _ in 0..draws {
        let n = model.sample_coordinate(&mut rng);
        assert!(n >= 1);
        counts[(n.min(bins + 1) - 1) as usize] += 1;
    }
    let mut probs: Vec<f64> = (1..=bins).map(|n| model.pmf(n)).collect();
    probs.push(model.tail_mass(bins + 1));
    counts
        .iter()
        .zip(&probs)
        .map(|(&c, &p)| {
            let e = p * draws as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

#[test]
fn samplers_pass_chi_square() {
    // df = 10; the 0.9999 quantile is about 35.6
    for (i, m) in [
        WeightModel::Geometric,
        WeightModel::power_law(2.0).unwrap(),
        WeightModel::power_law(1.5).unwrap(),
    ]
    .iter()
    .enumerate()
    {
        let stat = chi_square(m, 200_000, 10, 100 + i as u64);
        assert!(stat < 35.6, "{m}: chi-square {stat}");
    }
}

#[test]
fn reduced_law_is_the_cell_masses() {
    let cover = quarter();
    let law = ReducedLaw::new(&cover, &WeightModel::Geometric).unwrap();
    for (got, want) in law.masses().iter().zip([0.5, 0.25, 0.125, 0.125]) {
        assert!((got / want - 1.0).abs() < 1e-12);
    }
    let total: f64 = cover
        .cells()
        .map(|c| product_cell_measure(c, &cover, &WeightModel::Geometric))
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn monte_carlo_hitting_on_every_quarter_cell() {
    let cover = quarter();
    let g = WeightModel::Geometric;
    for cell in cover.cells() {
        let s = hitting_samples(cell, &cover, &g, 10_000, 40 + cell.0).unwrap();
        let est = Estimate::from_samples(s.iter().map(|&t| t as f64), 0).unwrap();
        let exact = expected_hitting_exact(cell, &cover, &g).unwrap();
        // 64 comparisons; 4.5 sigma keeps the family-wise error tiny
        assert!(est.within(exact, 4.5), "{}: {} +- {} vs {exact}", cover.render(cell), est.mean, est.stderr);
    }
}

#[test]
fn kac_on_random_cells() {
    let cover = quarter();
    let g = WeightModel::Geometric;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..10 {
        let cell = CellId(rng.random_range(0..cover.cell_count()));
        let est = kac_return_mc(cell, &cover, &g, 20_000, 900 + i).unwrap();
        let inverse = 1.0 / product_cell_measure(cell, &cover, &g);
        assert!(est.within(inverse, 4.0), "{}: {} +- {} vs {inverse}", cover.render(cell), est.mean, est.stderr);
    }
}

#[test]
fn cover_time_dominates_every_hitting_time_on_the_same_orbit() {
    let cover = quarter();
    let law = ReducedLaw::new(&cover, &WeightModel::Geometric).unwrap();
    for trial in 0..50 {
        let cov = cover_time_trial(&mut OrbitStream::new(&law, 3, trial), cover.cell_count(), &[], STEP_CAP).unwrap();
        let worst = cover
            .cells()
            .map(|c| hitting_time_trial(c, &mut OrbitStream::new(&law, 3, trial), STEP_CAP).unwrap())
            .max()
            .unwrap();
        assert_eq!(cov, worst, "trial {trial}");
    }
}

#[test]
fn window_law_is_shift_invariant() {
    // the window at time 0 and time 40 both land in (0,0,0) with probability 1/8
    let cover = quarter();
    let law = ReducedLaw::new(&cover, &WeightModel::Geometric).unwrap();
    let target = cover.encode(&[0, 0, 0]);
    let trials = 40_000u64;
    let (mut at0, mut at40) = (0u64, 0u64);
    for t in 0..trials {
        let mut s = OrbitStream::new(&law, 17, t);
        at0 += (s.cell() == target) as u64;
        for _ in 0..40 {
            s.advance();
        }
        at40 += (s.cell() == target) as u64;
    }
    let se = (0.125f64 * 0.875 / trials as f64).sqrt();
    for c in [at0, at40] {
        let p = c as f64 / trials as f64;
        assert!((p - 0.125).abs() < 4.5 * se, "{p}");
    }
}
