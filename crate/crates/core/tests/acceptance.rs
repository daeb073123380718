//! Acceptance suite: one PASS/FAIL line per criterion, then a non-zero exit
//! if any criterion failed.

use std::f64::consts::PI;
use std::time::Instant;

use ap_lab_core::constructions::{behrend_search, behrend_set, count_nontrivial_3aps, is_ap_free, max_ap_free_oracle, SelfSimilarMeasure};
use ap_lab_core::decompose::bohr_cut;
use ap_lab_core::fractal_spectral::{
    ap_length_measure, calibrate_polar_constant, measured_beta, measured_lq_exponent, spherical_table, torus_sigma_table,
    polar_constant, BesselPotential, Gaussian, SigmaParams, SpikeSpectrum,
};
use ap_lab_core::group_fourier::{lambda3_direct, lambda3_spectral, GridDensity};
use ap_lab_core::tolerances::*;
use ap_lab_core::verify::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_density(d: usize, n: usize, seed: u64) -> GridDensity {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GridDensity::from_fn(d, n, |_| rng.gen_range(0.0..2.0)).unwrap()
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for i in 0..500u64 {
        let (d, n) = if i % 5 == 4 {
            (2, [8, 16, 32, 64, 128][(i / 5) as usize % 5])
        } else {
            (1, [64, 256, 1024, 2048, 4096][i as usize % 5])
        };
        let f = random_density(d, n, 1000 + i);
        let direct = lambda3_direct(&f, &f, &f).unwrap();
        let spectral = lambda3_spectral(&f, &f, &f).unwrap();
        worst = worst.max((spectral - direct).abs() / direct.abs().max(1.0));
        count += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    let e = GridDensity::indicator(7, &[0, 1, 2]).unwrap();
    let z7 = lambda3_spectral(&e, &e, &e).unwrap();
    let z7_direct = lambda3_direct(&e, &e, &e).unwrap();
    let exact = (z7 - 5.0 / 49.0).abs() < 1e-15 && (z7_direct - 5.0 / 49.0).abs() < 1e-15;
    outcome(
        worst <= LAMBDA3_REL && secs < 60.0 && exact,
        format!("{count} densities, worst rel {worst:.2e} (≤ {LAMBDA3_REL:e}), {secs:.1}s (< 60s), Z_7 value {z7:.15} vs 5/49"),
    )
}

fn l3count_suite() -> Outcome {
    let r = check_l3count(&L3CountCorpus { n: 512, size: 1000, seed: 7, max_ripples: 4, max_amplitude: 1.0, c: None }).unwrap();
    let admissible = r.admissible_count.unwrap_or(0);
    let margin = r.metrics["min_margin"];
    outcome(
        r.passed() && admissible >= 1000 && r.metrics["failures"] == 0.0 && margin >= -INEQ_NUMERIC,
        format!("{admissible} admissible, failures {}, min margin {margin:.2e}", r.metrics["failures"]),
    )
}

fn bohr_density(seed: u64) -> GridDensity {
    let n = 256;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = rng.gen_range(0.5..0.9);
    let xi0 = rng.gen_range(1..128) as f64;
    let phi = rng.gen_range(0.0..1.0);
    GridDensity::from_fn(1, n, |x| {
        let wave = 1.0 + a * (2.0 * PI * (xi0 * x[0] as f64 / n as f64 + phi)).cos();
        0.2 * wave * (1.0 + 0.3 * rng.gen_range(-1.0..1.0))
    })
    .unwrap()
}

fn bohr_contract() -> Outcome {
    let (mut ok, mut degenerate) = (0, 0);
    let (mut g_c, mut h_c) = (Vec::new(), Vec::new());
    for seed in 0..200 {
        let f = bohr_density(seed);
        let m = f.l2_norm();
        let r = bohr_cut(&f, m, 0.1, 2.0).unwrap();
        let sum_gap = r.g.add(&r.h).unwrap().sub(&f).unwrap().linf_norm();
        let mass_gap = (r.g.l1_norm() - f.l1_norm()).abs();
        if r.g.is_nonnegative()
            && sum_gap <= BOHR_SUM_ABS
            && mass_gap <= BOHR_MASS_ABS
            && r.g_domination_excess <= BOHR_DOMINATION_ABS
            && r.h_domination_excess <= BOHR_DOMINATION_ABS
        {
            ok += 1;
        }
        degenerate += r.degenerate as usize;
        g_c.push(r.g_constant);
        h_c.push(r.h_constant);
    }
    let spread = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min);
    let (gs, hs) = (spread(&g_c), spread(&h_c));
    outcome(
        ok == 200 && degenerate == 0 && gs <= FIT_SPREAD_MAX && hs <= FIT_SPREAD_MAX,
        format!("{ok}/200 contract, {degenerate} degenerate, ‖ĝ‖₂ constant spread {gs:.3}, ‖ĥ‖₃ constant spread {hs:.3} (≤ {FIT_SPREAD_MAX})"),
    )
}

fn brute_force_r3(n: usize) -> usize {
    (0u32..1 << n)
        .filter(|&mask| {
            let has = |x: usize| mask >> x & 1 == 1;
            !(0..n).any(|a| has(a) && (1..n).any(|u| a + 2 * u < n && has(a + u) && has(a + 2 * u)))
        })
        .map(|mask| mask.count_ones() as usize)
        .max()
        .unwrap()
}

fn behrend() -> Outcome {
    let mut free = true;
    let mut ratios = Vec::new();
    for n in [1000usize, 10_000, 100_000] {
        let (set, _) = behrend_search(n).unwrap();
        free &= is_ap_free(&set) && count_nontrivial_3aps(&set) == 0;
        let trend = (n as f64).powf(1.0 - 1.0 / (n as f64).ln().sqrt());
        ratios.push(set.len() as f64 / trend);
    }
    let floor = ratios[0] / FIT_SPREAD_MAX;
    let bounded = ratios.iter().all(|&r| r >= floor);
    let oracle = (1..=12).all(|n| max_ap_free_oracle(n).unwrap() == brute_force_r3(n));
    outcome(
        free && bounded && oracle,
        format!(
            "3AP-free {free}, |E|/N^(1-1/√ln N) = {:.4}, {:.4}, {:.4} against floor {floor:.4} fitted at N=10³, oracle N ≤ 12 {oracle}",
            ratios[0], ratios[1], ratios[2]
        ),
    )
}

fn mass_telescoping() -> Outcome {
    let start = Instant::now();
    let mu = SelfSimilarMeasure::middle_thirds(1);
    let alpha = mu.dimension();
    let grid: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
    let beta = measured_beta(&mu, &grid, 4096.0, 6).unwrap().unwrap_or(0.0);
    let r = check_mass_telescoping(&mu, "middle-thirds", 6561, &[3, 4, 5, 6, 7, 8], alpha, beta).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let slope = r.fitted.get("slope").copied().unwrap_or(f64::NAN);
    outcome(
        r.passed() && secs < 300.0,
        format!("α {alpha:.4}, β_meas {beta:.1}, slope {slope:.4} vs bound {:.4}, {secs:.1}s", r.metrics["bound"]),
    )
}

fn polar_consistency() -> Outcome {
    let widths = [0.06, 0.08, 0.1, 0.12, 0.15];
    let mut gaps = Vec::new();
    let mut all = true;
    for (d, n, band) in [(1usize, 320usize, 40.0), (2, 128, 20.0)] {
        let cal = band_limited_bump(d, n, 0.1, 0.5, band).unwrap();
        let c_d = calibrate_polar_constant(
            &ap_length_measure(&cal, &polar_edges(d)).unwrap(),
            &torus_sigma_table(&cal).unwrap(),
            POLAR_R_MIN,
            POLAR_R_MAX,
        )
        .unwrap();
        for &s in &widths {
            let f = band_limited_bump(d, n, s, 0.5, band).unwrap();
            let table = torus_sigma_table(&f).unwrap();
            let r = check_polar_consistency(&f, &table, c_d, &format!("bump d={d} s={s}")).unwrap();
            all &= r.passed();
            gaps.push(r.metrics.get("l1_gap").copied().unwrap_or(f64::NAN));
        }
    }
    let worst = gaps.iter().cloned().fold(0.0, f64::max);
    outcome(all && gaps.len() == 10, format!("10 densities in d = 1, 2, worst relative L¹ gap {worst:.4} (≤ {POLAR_L1_REL})"))
}

fn sl_split() -> Outcome {
    let s: Vec<f64> = (0..=800).map(|i| i as f64 * 0.05).collect();
    let profiles: Vec<Vec<f64>> =
        [(5.0, 1.0), (10.0, 2.0), (15.0, 0.5), (20.0, 3.0), (8.0, 4.0)].iter().map(|&(c, w)| sl_profile(&s, c, w)).collect();
    let r1 = check_sl_split(1, &s, &profiles, &s, 0.5).unwrap();
    let r2 = check_sl_split(2, &s, &profiles, &s, 0.5).unwrap();
    outcome(
        r1.passed() && r2.passed() && r1.metrics["max_abs_l"] == 0.0,
        format!(
            "d=1: L max {:.1e}, gap {:.1e}; d=2: gap {:.1e} (≤ {SL_IDENTITY_REL:e}), C {:.4} (≤ {SL_RATIO_MAX})",
            r1.metrics["max_abs_l"], r1.metrics["max_identity_gap"], r2.metrics["max_identity_gap"], r2.fitted["ratio_constant"]
        ),
    )
}

fn pointwise_decay() -> Outcome {
    let radii: Vec<f64> = (2..=20).map(|k| 2f64.powf(k as f64 / 2.0)).collect();
    let params = SigmaParams { angular_nodes: 2, freq_cutoff: 8192.0, step: 0.5 };
    let q_grid: Vec<f64> = (10..=40).map(|k| 0.1 * k as f64).collect();
    let mut all = true;
    let mut parts = Vec::new();
    for gamma in [0.55, 0.6, 0.7, 0.8] {
        let mu = BesselPotential { d: 1, gamma, band: Some(16384.0) };
        let Some(q) = measured_lq_exponent(&mu, &q_grid, 4096.0) else {
            all = false;
            parts.push(format!("γ {gamma}: no admissible q"));
            continue;
        };
        let r = check_pointwise_decay(&mu, &format!("bessel γ={gamma}"), &radii, &params, q).unwrap();
        all &= r.passed();
        parts.push(format!(
            "γ {gamma}: q {q:.1}, exponent {:.3} ≥ {:.3}",
            r.fitted.get("decay_exponent").copied().unwrap_or(f64::NAN),
            r.metrics["bound"]
        ));
    }
    outcome(all, parts.join("; "))
}

fn frostman() -> Outcome {
    let widths: Vec<f64> = (3..=8).map(|k| 2f64.powi(-k)).collect();
    let one = frostman_fit(&GridDensity::constant(1, 1024, 1.0).unwrap(), &widths, 1.0, "one").unwrap();
    let point = frostman_fit(&GridDensity::point_mass(1, 1024).unwrap(), &widths, 1.0, "point").unwrap();
    let (s1, s0) = (one.fitted["s_hat"], point.fitted["s_hat"]);
    outcome(
        (FROSTMAN_UNIFORM_LO..=FROSTMAN_UNIFORM_HI).contains(&s1) && s0 <= FROSTMAN_POINT_MAX && point.verdict == Verdict::Fail,
        format!("f ≡ 1: ŝ {s1:.4}; point mass: ŝ {s0:.4}, verdict {}", point.verdict.as_str()),
    )
}

fn negative_controls() -> Outcome {
    let mut verdicts: Vec<(&str, Verdict)> = Vec::new();

    let spikes = SpikeSpectrum { d: 1, freqs: (1..=9).map(|k| 1i64 << k).collect(), amplitude: 0.05 };
    verdicts.push(("spike spectrum, claimed β = 1", check_mass_telescoping(&spikes, "spikes", 2048, &[3, 4, 5, 6, 7, 8], 0.99, 1.0).unwrap().verdict));

    let behrend = behrend_set(1000).unwrap();
    verdicts.push(("Behrend set, U² threshold", check_gowers_sets(&[behrend], json!("behrend 1000")).unwrap().verdict));

    let widths: Vec<f64> = (3..=8).map(|k| 2f64.powi(-k)).collect();
    verdicts.push(("point mass, Frostman", frostman_fit(&GridDensity::point_mass(1, 1024).unwrap(), &widths, 1.0, "point").unwrap().verdict));

    let one = GridDensity::constant(1, 256, 1.0).unwrap();
    let flat = CorollaryInput { d: 1, alpha: 0.6, beta: 0.0, energy: 2.0, decay_constant: 1.0 };
    verdicts.push(("inadmissible β = 0, corollary", check_fractal_corollary(&flat, &one, &widths, "flat").unwrap().verdict));
    let sparse = CorollaryInput { d: 1, alpha: 0.3, beta: 0.5, energy: 2.0, decay_constant: 1.0 };
    verdicts.push(("sparse measure with small β, corollary", check_fractal_corollary(&sparse, &one, &widths, "sparse").unwrap().verdict));

    let gauss = Gaussian { d: 1, s: 0.1 };
    let coarse: Vec<f64> = (1..=10).map(|k| 0.5 * k as f64).collect();
    let table = spherical_table(&gauss, &coarse, &SigmaParams { angular_nodes: 2, freq_cutoff: 12.0, step: 0.05 }).unwrap();
    let bump = band_limited_bump(1, 320, 0.1, 0.5, 40.0).unwrap();
    verdicts.push((
        "under-resolved σ table, polar",
        check_polar_consistency(&bump, &table, polar_constant(1), "coarse").unwrap().verdict,
    ));

    let points: Vec<GridDensity> = (0..8).map(|_| GridDensity::point_mass(1, 64).unwrap()).collect();
    verdicts.push(("point masses with fixed c, L3count", check_l3count_densities(&points, Some(0.01), "points").verdict));

    let cantor = SelfSimilarMeasure::middle_thirds(1);
    let radii: Vec<f64> = (2..=10).map(|k| 2f64.powi(k)).collect();
    let params = SigmaParams { angular_nodes: 2, freq_cutoff: 256.0, step: 0.5 };
    verdicts.push(("middle-thirds with q ≥ 3, pointwise decay", check_pointwise_decay(&cantor, "cantor", &radii, &params, 3.4).unwrap().verdict));

    let passed: Vec<&str> = verdicts.iter().filter(|v| v.1 == Verdict::Pass).map(|v| v.0).collect();
    let listing: Vec<String> = verdicts.iter().map(|(n, v)| format!("{n}: {}", v.as_str())).collect();
    outcome(verdicts.len() >= 5 && passed.is_empty(), listing.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("L3count corpus", l3count_suite),
        ("Bohr-cut contract", bohr_contract),
        ("Behrend construction", behrend),
        ("mass telescoping", mass_telescoping),
        ("polar consistency", polar_consistency),
        ("S + L split", sl_split),
        ("pointwise decay", pointwise_decay),
        ("Frostman fit", frostman),
        ("negative controls", negative_controls),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += !o.pass as usize;
        println!("criterion {:>2} {tag} {name} [{:.1}s]: {}", i + 1, start.elapsed().as_secs_f64(), o.detail);
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
