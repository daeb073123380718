//! Named checks. Each one consumes the other modules and returns a
//! [`VerificationReport`] with the measured values and a verdict.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::constructions::IntegerSet;
use crate::decompose::{l3count_c, q_threshold};
use crate::error::{invalid, ApError, Result};
use crate::fractal_spectral::{
    ap_length_measure, fejer_weight, mollified_spectrum, polar_l1_gap, sigma_decay_exponent, sl_decompose,
    spherical_table, torus_diameter, FourierHandle, SigmaParams, SphericalAverageTable,
};
use crate::group_fourier::{
    centered_coords, dual_transform, embed_prime, inverse_transform, lambda3_from_spectra, lambda3_spectral, lq_norm,
    GridDensity, Spectrum,
};
use crate::numeric::{fit_line, loglog_slope};
use crate::tolerances::{
    FROSTMAN_SLACK, INEQ_NUMERIC, POINTWISE_DECAY_SLACK, POLAR_L1_REL, POLAR_R_MAX, POLAR_R_MIN, SL_IDENTITY_REL,
    SL_RATIO_MAX, TELESCOPE_SLOPE_SLACK,
};

/// Registered check names, in the order `ap-lab run --list` prints them.
pub const CHECKS: &[(&str, &str)] = &[
    ("l3count", "Λ₃ ≥ (1-c)δ³ whenever ‖f̂‖₃ ≤ ∛(1+c)δ"),
    ("gowers_threshold", "small U² deviation forces a nontrivial 3AP"),
    ("mass_telescoping", "log₂-slope of |Λ₃(φ_{n+1}∗μ) - Λ₃(φ_n∗μ)| against the exponent bound"),
    ("polar_consistency", "direct 3AP-length density against the polar representation"),
    ("frostman_fit", "scaling exponent of the 3AP-length measure on short intervals"),
    ("fractal_corollary", "q₁ against q₀ = q(M, 1), then the Frostman fit"),
    ("pointwise_decay", "decay exponent of Σ(μ) against 3d(q-1)/q - 1"),
    ("sl_split", "𝔇 = S + L and ‖S‖₂ against ‖𝔖‖₂"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Outcome of one check.
///
/// The runtime is kept out of the serialized form so that reports are
/// byte-identical across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_name: String,
    pub seed: Option<u64>,
    pub inputs: Value,
    /// SHA-256 of the canonical JSON of `inputs`.
    pub inputs_digest: String,
    pub claim: String,
    pub metrics: BTreeMap<String, f64>,
    pub fitted: BTreeMap<String, f64>,
    pub verdict: Verdict,
    /// Corpus members (or cases) meeting the hypotheses of the claim.
    pub admissible_count: Option<usize>,
    pub diagnostic: Option<String>,
    #[serde(skip)]
    pub runtime_secs: f64,
}

pub fn digest_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl VerificationReport {
    pub fn new(check_name: &str, claim: impl Into<String>, inputs: Value) -> Self {
        let canonical = serde_json::to_string(&inputs).expect("json values serialize");
        Self {
            check_name: check_name.to_string(),
            seed: None,
            inputs_digest: digest_hex(canonical.as_bytes()),
            inputs,
            claim: claim.into(),
            metrics: BTreeMap::new(),
            fitted: BTreeMap::new(),
            verdict: Verdict::Inconclusive,
            admissible_count: None,
            diagnostic: None,
            runtime_secs: 0.0,
        }
    }

    pub fn metric(&mut self, name: &str, v: f64) -> &mut Self {
        self.metrics.insert(name.to_string(), v);
        self
    }

    pub fn fit(&mut self, name: &str, v: f64) -> &mut Self {
        self.fitted.insert(name.to_string(), v);
        self
    }

    fn finish(mut self, verdict: Verdict, start: Instant) -> Self {
        self.verdict = verdict;
        self.runtime_secs = start.elapsed().as_secs_f64();
        self
    }

    fn inconclusive(mut self, why: impl Into<String>, start: Instant) -> Self {
        self.diagnostic = Some(why.into());
        self.finish(Verdict::Inconclusive, start)
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// One JSON object, no trailing newline.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        serde_json::from_str(line).map_err(|e| ApError::Format(e.to_string()))
    }
}

/// Markdown table with one row per report.
pub fn summary_markdown(reports: &[VerificationReport]) -> String {
    let mut out = String::from("| check | verdict | admissible | digest | diagnostic |\n|---|---|---|---|---|\n");
    for r in reports {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} |\n",
            r.check_name,
            r.verdict.as_str(),
            r.admissible_count.map_or("-".to_string(), |c| c.to_string()),
            &r.inputs_digest[..12],
            r.diagnostic.as_deref().unwrap_or("")
        ));
    }
    out
}

/// Errors that mean "the numerics could not decide" rather than bad input.
fn is_numerical(e: &ApError) -> bool {
    matches!(e, ApError::Resolution(_) | ApError::NonConverged { .. } | ApError::DivergentTail(_))
}

// ---------------------------------------------------------------------------
// L3count

/// Seeded corpus of near-uniform densities on `Z_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L3CountCorpus {
    pub n: usize,
    pub size: usize,
    pub seed: u64,
    /// Upper bound on the number of cosine ripples per member.
    pub max_ripples: usize,
    /// Upper bound on the total ripple amplitude `Σ a_j`, at most 1.
    pub max_amplitude: f64,
    /// Fixed slack `c`. When absent each member uses its own measured
    /// `c = ‖f̂‖₃³/δ³ - 1`.
    #[serde(default)]
    pub c: Option<f64>,
}

/// `δ (1 + Σ_j a_j cos(2π(ξ_j x/N + φ_j)))` with odd `ξ_j`, so that no
/// ripple sits at `N/2`.
pub fn l3count_corpus(spec: &L3CountCorpus) -> Result<Vec<GridDensity>> {
    if spec.n < 4 || spec.max_ripples == 0 {
        return Err(invalid("corpus", "need N ≥ 4 and at least one ripple"));
    }
    if !(spec.max_amplitude > 0.0 && spec.max_amplitude <= 1.0) {
        return Err(invalid("max_amplitude", "must lie in (0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    (0..spec.size)
        .map(|_| {
            let delta = rng.gen_range(0.2..=1.0);
            let k = rng.gen_range(1..=spec.max_ripples);
            let total = rng.gen_range(0.0..spec.max_amplitude);
            let ripples: Vec<(f64, f64, f64)> = (0..k)
                .map(|_| {
                    let xi = 2 * rng.gen_range(0..n / 4) + 1;
                    (xi as f64, rng.gen::<f64>(), total / k as f64)
                })
                .collect();
            GridDensity::from_fn(1, n, |x| {
                let x = x[0] as f64 / n as f64;
                let ripple: f64 = ripples.iter().map(|(xi, ph, a)| a * (2.0 * PI * (xi * x + ph)).cos()).sum();
                (delta * (1.0 + ripple)).max(0.0)
            })
        })
        .collect()
}

/// Hypothesis and conclusion of the L3count lemma on every member.
pub fn check_l3count(spec: &L3CountCorpus) -> Result<VerificationReport> {
    let start = Instant::now();
    let corpus = l3count_corpus(spec)?;
    let mut rep = VerificationReport::new(
        "l3count",
        "Λ₃(f) ≥ (1-c)δ³ - 1e-9 for every member with ‖f̂‖₃ ≤ ∛(1+c)δ",
        serde_json::to_value(spec).expect("serializable"),
    );
    rep.seed = Some(spec.seed);
    Ok(l3count_verdict(rep, &corpus, spec.c, start))
}

/// The L3count comparison over an explicit list of densities.
pub fn check_l3count_densities(densities: &[GridDensity], c: Option<f64>, label: &str) -> VerificationReport {
    let start = Instant::now();
    let rep = VerificationReport::new(
        "l3count",
        "Λ₃(f) ≥ (1-c)δ³ - 1e-9 for every member with ‖f̂‖₃ ≤ ∛(1+c)δ",
        json!({ "corpus": label, "size": densities.len(), "c": c }),
    );
    l3count_verdict(rep, densities, c, start)
}

fn l3count_verdict(mut rep: VerificationReport, corpus: &[GridDensity], c: Option<f64>, start: Instant) -> VerificationReport {
    let (mut admissible, mut failures) = (0usize, 0usize);
    let (mut min_margin, mut max_c) = (f64::INFINITY, 0.0f64);
    for f in corpus {
        let spec = dual_transform(f);
        let delta = spec.coeffs()[0].re;
        let l3 = lq_norm(&spec, 3.0, false).expect("q = 3 is valid");
        if !(delta > 0.0) {
            continue;
        }
        let measured_c = (l3 / delta).powi(3) - 1.0;
        let c_used = match c {
            Some(c) if l3 <= (1.0 + c).cbrt() * delta * (1.0 + 1e-12) => c,
            Some(_) => continue,
            None if measured_c < 1.0 => measured_c,
            None => continue,
        };
        admissible += 1;
        max_c = max_c.max(measured_c);
        let lambda = lambda3_spectral(f, f, f).expect("same shape");
        let margin = lambda - (1.0 - c_used) * delta.powi(3);
        min_margin = min_margin.min(margin);
        if margin < -INEQ_NUMERIC {
            failures += 1;
        }
    }
    rep.admissible_count = Some(admissible);
    rep.metric("corpus_size", corpus.len() as f64)
        .metric("failures", failures as f64)
        .metric("max_measured_c", max_c);
    if admissible == 0 {
        return rep.inconclusive("no corpus member satisfies ‖f̂‖₃ ≤ ∛(1+c)δ", start);
    }
    rep.metric("min_margin", min_margin);
    let verdict = if failures == 0 { Verdict::Pass } else { Verdict::Fail };
    rep.finish(verdict, start)
}

// ---------------------------------------------------------------------------
// Gowers threshold

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GowersCorpus {
    pub n: usize,
    pub delta: f64,
    pub size: usize,
    pub seed: u64,
}

/// One set embedded in `Z_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GowersMember {
    pub p: usize,
    pub delta_e: f64,
    /// `Σ_{ξ≠0} |Ê(ξ)|⁴`.
    pub fourth_moment: f64,
    pub hypothesis: bool,
    /// Ordered pairs `(x, u)`, `u ≠ 0`, with `x, x+u, x+2u ∈ E`.
    pub nontrivial: u64,
}

pub fn gowers_member(set: &IntegerSet) -> Result<GowersMember> {
    let f = embed_prime(set.n(), set.elements())?;
    let p = f.n();
    let spec = dual_transform(&f);
    let delta_e = set.len() as f64 / p as f64;
    let fourth: f64 = spec.coeffs()[1..].iter().map(|c| c.norm_sqr().powi(2)).sum();
    let lambda = lambda3_spectral(&f, &f, &f)?;
    let total = (lambda * (p as f64).powi(2)).round() as u64;
    Ok(GowersMember {
        p,
        delta_e,
        fourth_moment: fourth,
        hypothesis: delta_e > (p as f64).powf(-0.5) && fourth <= 0.5 * delta_e.powi(3),
        nontrivial: total.saturating_sub(set.len() as u64),
    })
}

pub fn gowers_corpus(spec: &GowersCorpus) -> Result<Vec<IntegerSet>> {
    (0..spec.size)
        .map(|i| crate::constructions::random_set(spec.n, spec.delta, spec.seed.wrapping_add(i as u64)))
        .collect()
}

pub fn check_gowers_threshold(spec: &GowersCorpus) -> Result<VerificationReport> {
    let sets = gowers_corpus(spec)?;
    let mut rep = check_gowers_sets(&sets, serde_json::to_value(spec).expect("serializable"))?;
    rep.seed = Some(spec.seed);
    Ok(rep)
}

/// Every set meeting the hypothesis must contain a nontrivial 3AP. Sets
/// without 3APs must therefore violate it; those are counted separately.
pub fn check_gowers_sets(sets: &[IntegerSet], inputs: Value) -> Result<VerificationReport> {
    let start = Instant::now();
    let mut rep = VerificationReport::new(
        "gowers_threshold",
        "Σ_{ξ≠0}|Ê|⁴ ≤ ½δ³ and δ > p^{-1/2} imply a nontrivial 3AP",
        inputs,
    );
    let members = sets.iter().map(gowers_member).collect::<Result<Vec<_>>>()?;
    let admissible = members.iter().filter(|m| m.hypothesis).count();
    let failures = members.iter().filter(|m| m.hypothesis && m.nontrivial == 0).count();
    let contrapositive = members.iter().filter(|m| !m.hypothesis && m.nontrivial == 0).count();
    rep.admissible_count = Some(admissible);
    rep.metric("corpus_size", sets.len() as f64)
        .metric("failures", failures as f64)
        .metric("ap_free_violating_hypothesis", contrapositive as f64);
    if let Some(m) = members.iter().map(|m| m.fourth_moment / (0.5 * m.delta_e.powi(3))).reduce(f64::max) {
        rep.metric("max_fourth_moment_ratio", m);
    }
    if admissible == 0 {
        return Ok(rep.inconclusive("no member satisfies the U² hypothesis", start));
    }
    let verdict = if failures == 0 { Verdict::Pass } else { Verdict::Fail };
    Ok(rep.finish(verdict, start))
}

// ---------------------------------------------------------------------------
// Mass telescoping

/// Increments below this are treated as zero and dropped from the fit.
pub const TELESCOPE_FLOOR: f64 = 1e-12;

/// `a_n = |Λ₃(φ_{n+1}∗μ) - Λ₃(φ_n∗μ)|` for `n` in `levels`.
pub fn telescoping_increments(mu: &dyn FourierHandle, grid_n: usize, levels: &[u32]) -> Result<Vec<(u32, f64)>> {
    let lambda = |n: u32| -> Result<f64> {
        let s = mollified_spectrum(mu, n, grid_n)?;
        Ok(lambda3_from_spectra(&s, &s, &s)?.re)
    };
    levels
        .iter()
        .map(|&n| Ok((n, (lambda(n + 1)? - lambda(n)?).abs())))
        .collect()
}

/// Fitted log₂-slope of `a_n` against `-((β - 2(d-α))/2) + slack`.
pub fn check_mass_telescoping(
    mu: &dyn FourierHandle,
    label: &str,
    grid_n: usize,
    levels: &[u32],
    alpha: f64,
    beta: f64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let d = mu.dim() as f64;
    let bound = -((beta - 2.0 * (d - alpha)) / 2.0) + TELESCOPE_SLOPE_SLACK;
    let mut rep = VerificationReport::new(
        "mass_telescoping",
        format!("log₂-slope of a_n ≤ -((β - 2(d-α))/2) + {TELESCOPE_SLOPE_SLACK}"),
        json!({ "measure": label, "grid_n": grid_n, "levels": levels, "alpha": alpha, "beta": beta }),
    );
    rep.metric("bound", bound);
    let a = telescoping_increments(mu, grid_n, levels)?;
    for &(n, v) in &a {
        rep.metric(&format!("a_{n}"), v);
    }
    let kept: Vec<(f64, f64)> = a.iter().filter(|p| p.1 > TELESCOPE_FLOOR).map(|&(n, v)| (n as f64, v.log2())).collect();
    rep.admissible_count = Some(kept.len());
    if kept.is_empty() {
        rep.diagnostic = Some("every a_n is below the numeric floor: Λ₃(φ_n∗μ) is constant in n".into());
        return Ok(rep.finish(Verdict::Pass, start));
    }
    if kept.len() < 3 {
        return Ok(rep.inconclusive(format!("only {} increments above the floor {TELESCOPE_FLOOR:e}", kept.len()), start));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = kept.into_iter().unzip();
    let fit = fit_line(&xs, &ys).ok_or_else(|| invalid("levels", "need distinct levels"))?;
    rep.fit("slope", fit.slope).fit("intercept", fit.intercept).fit("r2", fit.r2);
    let verdict = if fit.slope <= bound { Verdict::Pass } else { Verdict::Fail };
    Ok(rep.finish(verdict, start))
}

// ---------------------------------------------------------------------------
// Polar consistency

/// Periodic Gaussian of width `s` centred at `center`, Fejér band-limited at
/// `band` and sampled on `Z_N^d`. Nonnegative and of unit mass.
pub fn band_limited_bump(d: usize, n: usize, s: f64, center: f64, band: f64) -> Result<GridDensity> {
    let coeffs: Vec<Complex64> = (0..n.pow(d as u32))
        .map(|i| {
            let xi: Vec<f64> = centered_coords(d, n, i).iter().map(|&c| c as f64).collect();
            let r2: f64 = xi.iter().map(|x| x * x).sum();
            let phase: f64 = xi.iter().map(|x| -2.0 * PI * x * center).sum();
            let w = fejer_weight(&xi, band);
            Complex64::from_polar((-2.0 * PI * PI * s * s * r2).exp() * w, phase)
        })
        .collect();
    let f = inverse_transform(&Spectrum::new(d, n, coeffs)?);
    GridDensity::new(d, n, f.values().iter().map(|v| v.max(0.0)).collect())
}

/// Bins of width 0.05 covering `[0, √d/2]`.
pub fn polar_edges(d: usize) -> Vec<f64> {
    let diam = torus_diameter(d);
    let bins = (diam / 0.05 - 1e-9).ceil() as usize;
    (0..=bins).map(|i| 0.05 * i as f64).collect()
}

/// Direct histogram against the polar representation built from `table`.
pub fn check_polar_consistency(f: &GridDensity, table: &SphericalAverageTable, c_d: f64, label: &str) -> Result<VerificationReport> {
    let start = Instant::now();
    let mut rep = VerificationReport::new(
        "polar_consistency",
        format!("relative L¹ gap on [{POLAR_R_MIN}, {POLAR_R_MAX}] ≤ {POLAR_L1_REL}"),
        json!({ "density": label, "d": f.d(), "n": f.n(), "c_d": c_d, "table_points": table.rho_grid.len() }),
    );
    let direct = ap_length_measure(f, &polar_edges(f.d()))?;
    rep.metric("total_mass", direct.total_mass);
    match polar_l1_gap(&direct, table, c_d, POLAR_R_MIN, POLAR_R_MAX) {
        Ok(gap) => {
            rep.metric("l1_gap", gap);
            rep.admissible_count = Some(1);
            let verdict = if gap <= POLAR_L1_REL { Verdict::Pass } else { Verdict::Fail };
            Ok(rep.finish(verdict, start))
        }
        Err(e) if is_numerical(&e) => Ok(rep.inconclusive(format!("spherical table: {e}"), start)),
        Err(e) => Err(e),
    }
}

// ---------------------------------------------------------------------------
// Frostman fit

/// `sup_R ν([R, R+ε]) / R^{(d-1)/2}` for each width, with `R` at bin centres.
pub fn frostman_sups(f: &GridDensity, widths: &[f64]) -> Result<Vec<f64>> {
    let d = f.d();
    let diam = torus_diameter(d);
    widths
        .iter()
        .map(|&eps| {
            if !(eps > 0.0 && eps < diam) {
                return Err(invalid("widths", format!("{eps} not in (0, {diam})")));
            }
            let bins = (diam / eps - 1e-9).ceil() as usize;
            let edges: Vec<f64> = (0..=bins).map(|i| eps * i as f64).collect();
            let nu = ap_length_measure(f, &edges)?;
            Ok(nu
                .masses
                .iter()
                .zip(nu.bin_centers())
                .map(|(m, c)| m / c.powf((d as f64 - 1.0) / 2.0))
                .fold(0.0, f64::max))
        })
        .collect()
}

/// Fitted `ŝ` in `sup ν ≈ ε^ŝ`; passes iff `ŝ ≥ min(1, s_target) - slack`.
pub fn frostman_fit(f: &GridDensity, widths: &[f64], s_target: f64, label: &str) -> Result<VerificationReport> {
    let start = Instant::now();
    let threshold = s_target.min(1.0) - FROSTMAN_SLACK;
    let mut rep = VerificationReport::new(
        "frostman_fit",
        format!("ŝ ≥ min(1, s_target) - {FROSTMAN_SLACK}"),
        json!({ "density": label, "d": f.d(), "n": f.n(), "widths": widths, "s_target": s_target }),
    );
    rep.metric("threshold", threshold);
    let (lo, hi) = widths.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &w| (a.min(w), b.max(w)));
    if widths.len() < 3 || hi < 4.0 * lo {
        return Ok(rep.inconclusive("need at least 3 widths spanning a factor of 4", start));
    }
    let sups = frostman_sups(f, widths)?;
    for (w, s) in widths.iter().zip(&sups) {
        rep.metric(&format!("sup_at_{w}"), *s);
    }
    if sups.iter().any(|&s| !(s > 0.0)) {
        return Ok(rep.inconclusive("empty histogram at some width", start));
    }
    let fit = loglog_slope(widths, &sups).ok_or_else(|| invalid("widths", "need distinct widths"))?;
    rep.fit("s_hat", fit.slope).fit("r2", fit.r2);
    if !(s_target > 0.0) {
        return Ok(rep.inconclusive(format!("s_target = {s_target} ≤ 0: the scaling claim is empty"), start));
    }
    rep.admissible_count = Some(widths.len());
    let verdict = if fit.slope >= threshold { Verdict::Pass } else { Verdict::Fail };
    Ok(rep.finish(verdict, start))
}

// ---------------------------------------------------------------------------
// Fractal corollary

/// Measured exponents and constants of a measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorollaryInput {
    pub d: usize,
    pub alpha: f64,
    pub beta: f64,
    /// `I_α(μ)`.
    pub energy: f64,
    /// `C_F = sup |μ̂(ξ)| (1+|ξ|)^{β/2}`.
    pub decay_constant: f64,
}

impl CorollaryInput {
    pub fn q1(&self) -> f64 {
        2.0 * (self.beta + self.d as f64 - self.alpha) / self.beta
    }

    /// `(√I_α)^{β/(β+d-α)} C_F^{(d-α)/(β+d-α)}`.
    pub fn m_bound(&self) -> f64 {
        let gap = self.d as f64 - self.alpha;
        let sum = self.beta + gap;
        self.energy.sqrt().powf(self.beta / sum) * self.decay_constant.powf(gap / sum)
    }

    /// `1/2 + d(2β + 4α - 4d) / (4(β + d - α))`.
    pub fn s_target(&self) -> f64 {
        let d = self.d as f64;
        0.5 + d * (2.0 * self.beta + 4.0 * self.alpha - 4.0 * d) / (4.0 * (self.beta + d - self.alpha))
    }
}

/// `c(t)` used for `q₀`, floored so that `M = δ` stays in the domain.
fn corollary_c(t: f64) -> f64 {
    l3count_c(t).max(f64::MIN_POSITIVE)
}

/// Compares `q₁` with `q₀ = q(M, 1)` and, when `q₁ ≤ q₀`, runs the Frostman
/// fit on `density` with the corollary's `s_target`.
pub fn check_fractal_corollary(input: &CorollaryInput, density: &GridDensity, widths: &[f64], label: &str) -> Result<VerificationReport> {
    let start = Instant::now();
    let mut rep = VerificationReport::new(
        "fractal_corollary",
        "q₁ ≤ q₀ and ŝ ≥ min(1, s_target) - 0.15",
        json!({ "measure": label, "input": input, "widths": widths }),
    );
    let d = input.d as f64;
    if !(input.beta > 0.0) {
        return Ok(rep.inconclusive(format!("inadmissible β = {}: no Fourier decay", input.beta), start));
    }
    let ratio = (2.0 * input.beta + d - input.alpha) / input.beta;
    rep.metric("hypothesis_ratio", ratio);
    if !(ratio < 3.0) {
        return Ok(rep.inconclusive(format!("hypothesis (2β + d-α)/β < 3 fails: ratio = {ratio}"), start));
    }
    let q1 = input.q1();
    let m = input.m_bound();
    let q0 = q_threshold(m.max(1.0), 1.0, &corollary_c, 1.0, 1.0)?;
    rep.metric("q1", q1).metric("m_bound", m).metric("q0", q0);
    if q1 > q0 {
        return Ok(rep.inconclusive(format!("q₁ = {q1} > q₀ = {q0}: the corollary does not apply"), start));
    }
    let s_target = input.s_target();
    rep.metric("s_target", s_target);
    let fit = frostman_fit(density, widths, s_target, label)?;
    for (k, v) in &fit.fitted {
        rep.fit(k, *v);
    }
    rep.admissible_count = Some(1);
    rep.diagnostic = fit.diagnostic.clone();
    let verdict = fit.verdict;
    Ok(rep.finish(verdict, start))
}

// ---------------------------------------------------------------------------
// Pointwise decay

/// Decay exponent of `Σ(μ)(r)` over `radii` against `3d(q-1)/q - 1 - slack`.
pub fn check_pointwise_decay(
    mu: &dyn FourierHandle,
    label: &str,
    radii: &[f64],
    params: &SigmaParams,
    q: f64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let d = mu.dim() as f64;
    let bound = 3.0 * d * (q - 1.0) / q - 1.0 - POINTWISE_DECAY_SLACK;
    let mut rep = VerificationReport::new(
        "pointwise_decay",
        format!("decay exponent of Σ(μ) ≥ 3d(q-1)/q - 1 - {POINTWISE_DECAY_SLACK}"),
        json!({ "measure": label, "radii": radii, "params": params, "q": q }),
    );
    rep.metric("bound", bound);
    if !(q < 3.0) {
        return Ok(rep.inconclusive(format!("hypothesis q < 3 fails: measured q = {q}"), start));
    }
    let table = match spherical_table(mu, radii, params) {
        Ok(t) => t,
        Err(e) if is_numerical(&e) => return Ok(rep.inconclusive(format!("Σ table: {e}"), start)),
        Err(e) => return Err(e),
    };
    let exponent = sigma_decay_exponent(&table).ok_or_else(|| invalid("radii", "need two positive values"))?;
    rep.fit("decay_exponent", exponent);
    rep.admissible_count = Some(radii.len());
    let verdict = if exponent >= bound { Verdict::Pass } else { Verdict::Fail };
    Ok(rep.finish(verdict, start))
}

// ---------------------------------------------------------------------------
// S + L

/// Gaussian profiles `𝔰(s) = exp(-(s-c)²/(2w²))` on a uniform grid.
pub fn sl_profile(s_grid: &[f64], center: f64, width: f64) -> Vec<f64> {
    s_grid.iter().map(|s| (-(s - center).powi(2) / (2.0 * width * width)).exp()).collect()
}

/// `𝔇 = S + L` for every profile; in `d = 1` also `L ≡ 0`; and the fitted
/// constant `C = max(‖S‖₂/‖𝔖‖₂, ‖𝔖‖₂/‖S‖₂)` over the family is at most 10.
pub fn check_sl_split(d: usize, s_grid: &[f64], profiles: &[Vec<f64>], r_grid: &[f64], s_exponent: f64) -> Result<VerificationReport> {
    let start = Instant::now();
    let mut rep = VerificationReport::new(
        "sl_split",
        format!("identity gap ≤ {SL_IDENTITY_REL} and ‖S‖₂/‖𝔖‖₂ within C ≤ {SL_RATIO_MAX}"),
        json!({ "d": d, "s_points": s_grid.len(), "r_points": r_grid.len(), "profiles": profiles.len(), "s_exponent": s_exponent }),
    );
    let (mut max_gap, mut max_l, mut c_fit) = (0.0f64, 0.0f64, 1.0f64);
    for p in profiles {
        let sl = match sl_decompose(s_grid, p, d, s_exponent, r_grid) {
            Ok(sl) => sl,
            Err(ApError::NonConverged { coarse, .. }) => {
                rep.metric("identity_gap", coarse);
                rep.diagnostic = Some(format!("𝔇 - S - L reached {coarse:e} of ‖𝔖‖₁"));
                return Ok(rep.finish(Verdict::Fail, start));
            }
            Err(e) => return Err(e),
        };
        max_gap = max_gap.max(sl.identity_gap);
        max_l = max_l.max(sl.l_part.iter().fold(0.0, |a: f64, v| a.max(v.abs())));
        let ratio = sl.norm_s_part / sl.norm_frak_big_s;
        c_fit = c_fit.max(ratio).max(1.0 / ratio);
    }
    rep.admissible_count = Some(profiles.len());
    rep.metric("max_identity_gap", max_gap).metric("max_abs_l", max_l);
    rep.fit("ratio_constant", c_fit);
    let exact_d1 = d != 1 || max_l == 0.0;
    let verdict = if max_gap <= SL_IDENTITY_REL && exact_d1 && c_fit <= SL_RATIO_MAX {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(rep.finish(verdict, start))
}
