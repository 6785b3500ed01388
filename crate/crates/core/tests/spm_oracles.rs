//! SPM statistics checked against textbook formulas and Monte-Carlo oracles.

use gaitxai::spm::{
    cohens_d_curve, estimate_fwhm, permutation_threshold, rft_threshold, spm_two_sample, supra_clusters,
    two_sample_t_curve, CurveGroup, SpmConfig,
};
use gaitxai_oracles::stats;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_curves(rng: &mut ChaCha8Rng, n: usize, q: usize, shift: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..q).map(|_| shift + rng.sample::<f64, _>(StandardNormal)).collect()).collect()
}

fn group(label: &str, curves: Vec<Vec<f64>>) -> CurveGroup {
    CurveGroup::new(label, curves).unwrap()
}

#[test]
fn t_and_d_match_textbook_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..100 {
        let (na, nb) = (rng.random_range(2..25), rng.random_range(2..25));
        let q = rng.random_range(1..60);
        let a = random_curves(&mut rng, na, q, 0.0);
        let shift = rng.random_range(-1.0..1.0);
        let b = random_curves(&mut rng, nb, q, shift);
        let t = two_sample_t_curve(&group("A", a.clone()), &group("B", b.clone())).unwrap();
        let d = cohens_d_curve(&group("A", a.clone()), &group("B", b.clone())).unwrap();
        assert_eq!(t.df, (na + nb - 2) as f64);
        let factor = ((na * nb) as f64 / (na + nb) as f64).sqrt();
        for ((x, y), (dx, dy)) in t.t.iter().zip(stats::textbook_t(&a, &b)).zip(d.d.iter().zip(stats::textbook_d(&a, &b))) {
            assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0), "t {x} vs {y}");
            assert!((dx - dy).abs() <= 1e-12 * dy.abs().max(1.0), "d {dx} vs {dy}");
            assert!((x - dx * factor).abs() <= 1e-12 * x.abs().max(1.0), "t = d·sqrt(nA nB/(nA+nB)) fails");
        }
    }
}

proptest! {
    #[test]
    fn swapping_groups_negates_exactly(seed in any::<u64>(), na in 2usize..8, nb in 2usize..8, q in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = group("A", random_curves(&mut rng, na, q, 0.0));
        let b = group("B", random_curves(&mut rng, nb, q, 0.5));
        let ab = two_sample_t_curve(&a, &b).unwrap().t;
        let ba = two_sample_t_curve(&b, &a).unwrap().t;
        prop_assert!(ab.iter().zip(&ba).all(|(x, y)| *x == -*y));
        let dab = cohens_d_curve(&a, &b).unwrap().d;
        let dba = cohens_d_curve(&b, &a).unwrap().d;
        prop_assert!(dab.iter().zip(&dba).all(|(x, y)| *x == -*y));
    }

    #[test]
    fn affine_maps_leave_t_unchanged(seed in any::<u64>(), scale in 0.01f64..100.0, offset in -50.0f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_curves(&mut rng, 6, 12, 0.0);
        let b = random_curves(&mut rng, 7, 12, 0.3);
        let map = |g: &[Vec<f64>]| g.iter().map(|c| c.iter().map(|v| scale * v + offset).collect()).collect::<Vec<_>>();
        let t0 = two_sample_t_curve(&group("A", a.clone()), &group("B", b.clone())).unwrap().t;
        let t1 = two_sample_t_curve(&group("A", map(&a)), &group("B", map(&b))).unwrap().t;
        for (x, y) in t0.iter().zip(&t1) {
            prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{} vs {}", x, y);
        }
    }

    #[test]
    fn clusters_match_a_linear_scan(t in proptest::collection::vec(-5.0f64..5.0, 0..80), t_star in 0.1f64..4.0) {
        let got: Vec<(usize, usize, f64)> = supra_clusters(&t, t_star).iter().map(|c| (c.start, c.end, c.peak_t)).collect();
        prop_assert_eq!(&got, &stats::scan_clusters(&t, t_star));
        // The clusters partition the supra-threshold set.
        let covered: Vec<usize> = got.iter().flat_map(|c| c.0..=c.1).collect();
        let supra: Vec<usize> = (0..t.len()).filter(|&i| t[i].abs() > t_star).collect();
        prop_assert_eq!(covered, supra);
    }
}

#[test]
fn fwhm_of_white_noise() {
    // Unit-variance iid fields have E[(x_{q+1} − x_q)²] = 2, so fwhm = sqrt(2 ln 2).
    let expected = (2.0 * std::f64::consts::LN_2).sqrt();
    let estimates: Vec<f64> = (0..120)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            estimate_fwhm(&random_curves(&mut rng, 50, 101, 0.0)).unwrap()
        })
        .collect();
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let sd = (estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let se = sd / n.sqrt();
    assert!((mean - expected).abs() <= 3.0 * se, "mean {mean} vs {expected} (se {se})");
}

#[test]
fn fwhm_of_smoothed_fields() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fields = stats::smooth_gaussian_fields(50, 101, 10.0, &mut rng);
        let fwhm = estimate_fwhm(&fields).unwrap();
        assert!((fwhm - 10.0).abs() <= 1.5, "seed {seed}: fwhm {fwhm}");
    }
}

#[test]
fn zero_resels_gives_the_pointwise_quantile() {
    for &df in &[2.0, 5.0, 10.0, 28.0, 60.0, 198.0, 1000.0] {
        for &alpha in &[0.001, 0.01, 0.025, 0.05, 0.1, 0.25] {
            let t = rft_threshold(df, 0.0, alpha).unwrap();
            let q = stats::t_upper_quantile(alpha, df);
            assert!((t - q).abs() <= 1e-8, "df {df}, alpha {alpha}: {t} vs {q}");
        }
    }
}

/// Two-sided RFT threshold from estimated smoothness versus the max-|t| permutation
/// threshold on null fields of a given smoothness.
fn rft_and_permutation(fwhm: f64, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = group("A", stats::smooth_gaussian_fields(30, 101, fwhm, &mut rng));
    let b = group("B", stats::smooth_gaussian_fields(30, 101, fwhm, &mut rng));
    let rft = spm_two_sample(&a, &b, &SpmConfig::default()).unwrap().t_star;
    let perm = permutation_threshold(&a, &b, 0.05, 10_000, seed).unwrap().t_star;
    (rft, perm)
}

#[test]
fn rft_tracks_permutation_on_smooth_null_fields() {
    for (fwhm, seed) in [(10.0, 1), (20.0, 2), (100.0, 3)] {
        let (rft, perm) = rft_and_permutation(fwhm, seed);
        assert!((rft - perm).abs() <= 0.1 * perm, "fwhm {fwhm}: rft {rft} vs permutation {perm}");
    }
}

#[test]
fn permutation_test_is_calibrated() {
    let draws = 200;
    let mut exceed = 0;
    for seed in 0..draws {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        let a = group("A", stats::smooth_gaussian_fields(10, 41, 5.0, &mut rng));
        let b = group("B", stats::smooth_gaussian_fields(10, 41, 5.0, &mut rng));
        let r = permutation_threshold(&a, &b, 0.05, 1000, seed).unwrap();
        if r.max_stats[0] > r.t_star {
            exceed += 1;
        }
        assert!(r.t_star >= 0.0);
    }
    let rate = exceed as f64 / draws as f64;
    let se = (0.05f64 * 0.95 / draws as f64).sqrt();
    assert!((rate - 0.05).abs() <= 2.0 * se, "rejection rate {rate}");
}

#[test]
fn permutation_threshold_is_reproducible_across_thread_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = group("A", random_curves(&mut rng, 8, 30, 0.0));
    let b = group("B", random_curves(&mut rng, 9, 30, 0.0));
    let many = permutation_threshold(&a, &b, 0.05, 2000, 17).unwrap();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| permutation_threshold(&a, &b, 0.05, 2000, 17).unwrap());
    assert_eq!(many, single);
    assert_ne!(permutation_threshold(&a, &b, 0.05, 2000, 18).unwrap().max_stats, many.max_stats);
}
