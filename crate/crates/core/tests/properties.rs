//! Property tests for the invariants of each module.

use ap_lab_core::constructions::*;
use ap_lab_core::decompose::*;
use ap_lab_core::fractal_spectral::*;
use ap_lab_core::group_fourier::*;
use ap_lab_core::io::{density_to_bytes, from_bytes, Container};
use ap_lab_core::tolerances::*;
use ap_lab_core::verify::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn density(d: usize, n: usize, seed: u64) -> GridDensity {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GridDensity::from_fn(d, n, |_| rng.gen_range(0.0..3.0)).unwrap()
}

fn shape() -> impl Strategy<Value = (usize, usize)> {
    prop_oneof![(Just(1usize), 3usize..80), (Just(2usize), 3usize..12)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spectral_equals_direct((d, n) in shape(), seed in any::<u64>()) {
        let (f0, f1, f2) = (density(d, n, seed), density(d, n, seed ^ 1), density(d, n, seed ^ 2));
        let a = lambda3_direct(&f0, &f1, &f2).unwrap();
        let b = lambda3_spectral(&f0, &f1, &f2).unwrap();
        prop_assert!((a - b).abs() <= LAMBDA3_REL * a.max(1.0));
    }

    #[test]
    fn parseval_and_round_trip((d, n) in shape(), seed in any::<u64>()) {
        let f = density(d, n, seed);
        let s = dual_transform(&f);
        let lhs = f.values().iter().map(|v| v * v).sum::<f64>() / f.len() as f64;
        let rhs: f64 = s.coeffs().iter().map(|c| c.norm_sqr()).sum();
        prop_assert!((lhs - rhs).abs() <= PARSEVAL_REL * lhs);
        let back = inverse_transform(&s);
        prop_assert!(back.sub(&f).unwrap().linf_norm() <= ROUND_TRIP_ABS);
    }

    #[test]
    fn lambda3_translation_and_reflection((d, n) in shape(), seed in any::<u64>(), t in any::<i64>()) {
        let f = density(d, n, seed);
        let base = lambda3_spectral(&f, &f, &f).unwrap();
        let shift = vec![t % 97; d];
        let moved = f.translated(&shift).unwrap();
        prop_assert!((lambda3_spectral(&moved, &moved, &moved).unwrap() - base).abs() <= 1e-12 * base);
        let r = f.reflected();
        prop_assert!((lambda3_spectral(&r, &r, &r).unwrap() - base).abs() <= 1e-12 * base);
    }

    #[test]
    fn u2_dominates_mean((d, n) in shape(), seed in any::<u64>()) {
        let f = density(d, n, seed);
        prop_assert!(u2_norm(&f).powi(4) >= f.mean().powi(4) * (1.0 - 1e-12));
        let c = GridDensity::constant(d, n, f.mean()).unwrap();
        prop_assert!((u2_norm(&c) - f.mean()).abs() <= 1e-12 * f.mean());
    }

    #[test]
    fn lambda3_coarse_bound((d, n) in shape(), seed in any::<u64>()) {
        let f = density(d, n, seed);
        let l = lambda3_direct(&f, &f, &f).unwrap();
        prop_assert!(l <= f.linf_norm().powi(2) * f.mean() * (1.0 + 1e-12));
    }

    #[test]
    fn binary_container_round_trip((d, n) in shape(), seed in any::<u64>()) {
        let f = density(d, n, seed);
        prop_assert_eq!(from_bytes(&density_to_bytes(&f)).unwrap(), Container::Density(f));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bohr_cut_contract(n in 8usize..128, seed in any::<u64>(), eps in 0.05f64..0.5, t in 1.1f64..4.0, scale in 0.5f64..3.0) {
        let f = density(1, n, seed);
        let m = f.l2_norm() * scale;
        let r = bohr_cut(&f, m, eps, t).unwrap();
        prop_assert!(r.g.is_nonnegative());
        prop_assert!(r.g.add(&r.h).unwrap().sub(&f).unwrap().linf_norm() <= BOHR_SUM_ABS);
        prop_assert!((r.g.l1_norm() - f.l1_norm()).abs() <= BOHR_MASS_ABS);
        prop_assert!(r.g_domination_excess <= BOHR_DOMINATION_ABS);
        prop_assert!(r.h_domination_excess <= BOHR_DOMINATION_ABS);
    }

    #[test]
    fn bohr_set_shape(n in 3usize..64, freqs in proptest::collection::vec(-40i64..40, 0..4), eta in 0.01f64..1.9, grow in 0.0f64..0.5) {
        let fr: Vec<Vec<i64>> = freqs.iter().map(|&k| vec![k]).collect();
        let small = bohr_set(&fr, eta, n, 1).unwrap();
        let large = bohr_set(&fr, eta + grow, n, 1).unwrap();
        prop_assert!(small.contains(0));
        for &x in &small.members {
            prop_assert!(small.contains((n - x) % n));
            prop_assert!(large.contains(x));
        }
        prop_assert_eq!(bohr_set(&fr, 2.0, n, 1).unwrap().len(), n);
    }

    #[test]
    fn q_threshold_monotone_in_m(delta in 0.05f64..1.0, a in 1.3f64..50.0, b in 1.3f64..50.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let q_lo = q_threshold_excess(lo * delta, delta, &l3count_c, 1.0, 1.0).unwrap();
        let q_hi = q_threshold_excess(hi * delta, delta, &l3count_c, 1.0, 1.0).unwrap();
        prop_assert!(q_hi <= q_lo + Q_REFINE);
        prop_assert!(q_hi > 0.0 && q_lo <= 1.0);
    }

    #[test]
    fn truncation_caps(n in 4usize..256, seed in any::<u64>(), eps in 0.1f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = GridDensity::from_fn(1, n, |_| rng.gen_range(0.0f64..1.0).powf(-0.4)).unwrap();
        let f = raw.scaled(1.0 / raw.l2_norm());
        let t = truncate_l2(&f, eps).unwrap();
        prop_assert!(t.f_le.values().iter().all(|&v| (0.0..=3.0 / eps).contains(&v)));
        prop_assert!(t.exceed_measure <= eps * eps / 9.0 + 1e-12);
        prop_assert!(t.f_le.add(&t.f_gt).unwrap().sub(&f).unwrap().linf_norm() <= 4.0 * f64::EPSILON * f.linf_norm());
    }

    #[test]
    fn spectral_truncate_idempotent_past_nyquist((d, n) in shape(), seed in any::<u64>(), extra in 0u32..3) {
        let f = density(d, n, seed);
        let level = (n as f64).log2().ceil() as u32 + extra;
        prop_assert_eq!(spectral_truncate(&f, level), f.clone());
        let once = spectral_truncate(&f, 2);
        let s1 = dual_transform(&once);
        let s0 = dual_transform(&f);
        for (a, b) in s1.coeffs().iter().zip(s0.coeffs()) {
            prop_assert!(a.norm() <= b.norm() + 1e-12);
        }
    }

    #[test]
    fn self_similar_transform_shape(xi in -200.0f64..200.0, eta in -50.0f64..50.0, b in 2usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut digits: Vec<usize> = (0..b).filter(|_| rng.gen_bool(0.6)).collect();
        for k in [0, b - 1] {
            if !digits.contains(&k) {
                digits.push(k);
            }
        }
        digits.sort();
        let mu = SelfSimilarMeasure::uniform(1, b, digits).unwrap();
        let v = self_similar_fourier(&mu, &[xi], None).unwrap();
        prop_assert!(v.norm() <= 1.0 + 1e-12);
        let w = self_similar_fourier(&mu, &[-xi], None).unwrap();
        prop_assert!((v - w.conj()).norm() < 1e-12);
        // Gram matrix of (0, ξ, η) is positive semidefinite.
        let pts = [0.0, xi, eta];
        let g = |i: usize, j: usize| self_similar_fourier(&mu, &[pts[i] - pts[j]], None).unwrap();
        let minor2 = (g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0)).re;
        let det = (g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1)) - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
            + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0)))
        .re;
        prop_assert!(minor2 >= -1e-10 && det >= -1e-10);
    }

    #[test]
    fn discretize_keeps_mass(level in 0usize..6, extra in 1usize..3) {
        let mu = SelfSimilarMeasure::middle_thirds(1);
        let n = 3usize.pow(level as u32) * extra;
        let f = discretize(&mu, n, level).unwrap();
        prop_assert!((f.mean() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_mass_is_lambda3((d, n) in shape(), seed in any::<u64>(), bins in 2usize..30) {
        let f = density(d, n, seed);
        let h = ap_length_measure(&f, &uniform_edges(d, bins)).unwrap();
        let l = lambda3_direct(&f, &f, &f).unwrap();
        prop_assert!(h.masses.iter().all(|&m| m >= 0.0));
        prop_assert!((h.total_mass - l).abs() <= 1e-12 * l);
        prop_assert!((h.masses.iter().sum::<f64>() - h.total_mass).abs() <= 1e-12 * l);
    }

    #[test]
    fn mollified_density_has_unit_mass(level in 1u32..6, b in 2usize..5) {
        let mu = SelfSimilarMeasure::uniform(1, b, vec![0, b - 1]).unwrap();
        let f = mollify(&mu, level, 64).unwrap();
        prop_assert!((f.mean() - 1.0).abs() <= MOLLIFY_MASS_ABS);
        prop_assert!(f.is_nonnegative());
    }

    #[test]
    fn lq_chain_inequality(alpha in 0.1f64..0.95, q in 2.0f64..4.0, gamma in 0.3f64..1.0) {
        let mu = BesselPotential { d: 1, gamma, band: None };
        let (lhs, rhs) = decay_to_lq_chain(&mu, alpha, q, 512.0);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn energy_nondecreasing_in_cutoff(alpha in 0.1f64..0.9, c in 4.0f64..256.0) {
        let mu = SelfSimilarMeasure::middle_thirds(1);
        let a = energy(&mu, alpha, c).unwrap();
        let b = energy(&mu, alpha, 2.0 * c).unwrap();
        prop_assert!(b.value >= a.value);
        prop_assert!(a.growth_exponent >= 0.0);
        prop_assert!(a.partial_sums.windows(2).all(|w| w[1].1 >= w[0].1));
    }

    #[test]
    fn spherical_at_most_annular(r in 4.0f64..40.0, seed in any::<u64>()) {
        // Band-limited F = |ĝ|² for g supported in a ball of radius 1/2.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<(f64, f64, f64)> = (0..4).map(|_| (rng.gen_range(-0.25..0.25), rng.gen_range(-0.25..0.25), rng.gen_range(0.1..1.0))).collect();
        let f = move |x: &[f64]| {
            let z: Complex64 = pts
                .iter()
                .map(|&(a, b, w)| Complex64::from_polar(w, -2.0 * std::f64::consts::PI * (a * x[0] + b * x[1])))
                .sum();
            z.norm_sqr()
        };
        let sphere = spherical_integral(&f, 2, r, 256);
        let annulus = annular_integral(&f, 2, r, 1.0, 64, 256);
        prop_assert!(sphere <= 10.0 * annulus / r.powi(1) + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn behrend_sets_have_only_trivial_progressions(n in 3usize..600) {
        let set = behrend_set(n).unwrap();
        prop_assert!(is_ap_free(&set));
        // Embedded in Z_p with p > 2N, so no progression wraps around.
        let e = embed_prime(n, set.elements()).unwrap();
        let p = e.n();
        let delta = set.len() as f64 / p as f64;
        let mu = e.scaled(1.0 / delta);
        let l = lambda3_spectral(&mu, &mu, &mu).unwrap();
        let trivial = trivial_ap_contribution(set.len(), p).unwrap();
        // Λ₃·p²·δ³ is the integer triple count; it equals |E| exactly.
        prop_assert_eq!((l * (p * p) as f64 * delta.powi(3)).round() as usize, set.len());
        prop_assert!((l - trivial).abs() <= 1e-9 * l);
    }

    #[test]
    fn sigma_abs_dominates_sigma(rho in 0.0f64..4.0, s in 0.05f64..0.3) {
        let g = Gaussian { d: 1, s };
        let p = SigmaParams { angular_nodes: 2, freq_cutoff: 4.0 / s, step: 0.05 };
        let (sig, abs) = sigma_pair(&g, rho, &p).unwrap();
        prop_assert!(abs + 1e-15 >= sig.norm());
    }

    #[test]
    fn checks_are_deterministic(seed in any::<u64>()) {
        let spec = L3CountCorpus { n: 64, size: 5, seed, max_ripples: 3, max_amplitude: 0.9, c: None };
        let a = check_l3count(&spec).unwrap();
        let b = check_l3count(&spec).unwrap();
        prop_assert_eq!(a.to_json_line(), b.to_json_line());
        prop_assert!(a.admissible_count.unwrap() > 0);
    }

    #[test]
    fn oracle_is_monotone(n in 1usize..20) {
        prop_assert!(max_ap_free_oracle(n + 1).unwrap() >= max_ap_free_oracle(n).unwrap());
    }
}

#[test]
fn rescaled_histogram_is_stable_under_refinement() {
    let f = band_limited_bump(2, 64, 0.15, 0.5, 16.0).unwrap();
    let coarse = ap_length_measure(&f, &uniform_edges(2, 20)).unwrap().rescaled_l2();
    let fine = ap_length_measure(&f, &uniform_edges(2, 40)).unwrap().rescaled_l2();
    assert!((fine / coarse - 1.0).abs() < 0.1, "{coarse} {fine}");
}
