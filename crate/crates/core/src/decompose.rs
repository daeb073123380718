//! Bohr sets, the Bohr-cut splitting `f = g + h`, the exponent threshold
//! `q(M, δ)`, and the two truncations (pointwise cap and spectral cutoff).

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, ApError, Result};
use crate::group_fourier::{
    centered_coords, coords_of, dual_transform, index_of, inverse_transform, lambda3_spectral, lq_norm,
    GridDensity,
};
use crate::tolerances::Q_REFINE;

/// `B(S, η) = {x : |e^{2πi ξ·x/N} - 1| ≤ η for all ξ ∈ S}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BohrSet {
    pub d: usize,
    pub n: usize,
    pub freqs: Vec<Vec<i64>>,
    pub eta: f64,
    /// Sorted linear indices of the members.
    pub members: Vec<usize>,
}

impl BohrSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
    pub fn contains(&self, idx: usize) -> bool {
        self.members.binary_search(&idx).is_ok()
    }
}

/// `|e^{2πi k/N} - 1|` for an integer phase `k`, reduced exactly mod `N`.
fn chord(k: i64, n: usize) -> f64 {
    let r = k.rem_euclid(n as i64) as f64 / n as f64;
    2.0 * (std::f64::consts::PI * r).sin().abs()
}

pub fn bohr_set(freqs: &[Vec<i64>], eta: f64, n: usize, d: usize) -> Result<BohrSet> {
    if !(eta > 0.0) {
        return Err(invalid("eta", format!("{eta} is not positive")));
    }
    if n == 0 || d == 0 || d > 3 {
        return Err(ApError::InvalidShape(format!("d = {d}, N = {n}")));
    }
    if let Some(f) = freqs.iter().find(|f| f.len() != d) {
        return Err(invalid("freqs", format!("frequency {f:?} has wrong dimension")));
    }
    let len = n.pow(d as u32);
    let members = (0..len)
        .filter(|&i| {
            let x = coords_of(d, n, i);
            freqs.iter().all(|xi| {
                let phase: i64 = xi.iter().zip(&x).map(|(a, &b)| a * b as i64).sum();
                chord(phase, n) <= eta
            })
        })
        .collect();
    Ok(BohrSet {
        d,
        n,
        freqs: freqs.to_vec(),
        eta,
        members,
    })
}

/// Constant `C` in the `‖ĝ‖₂ ≲ C ‖f̂‖_q` requirement used to derive `q`.
pub const BOHR_C: f64 = 4.0;

/// Exponent implied by `(ε, M, T)`:
/// `min(3(1 - 1/T), 2 + 2 ln C / (η⁻¹ ln η⁻¹))` with `η = (ε/M)^T`,
/// clamped to `[2, 3]`.
pub fn implied_q(eps: f64, m_bound: f64, t: f64, c: f64) -> f64 {
    let inv_eta = (m_bound / eps).powf(t);
    let second = if inv_eta > 1.0 {
        2.0 + 2.0 * c.ln() / (inv_eta * inv_eta.ln())
    } else {
        f64::INFINITY
    };
    (3.0 * (1.0 - 1.0 / t)).min(second).clamp(2.0, 3.0)
}

/// Output of [`bohr_cut`].
#[derive(Debug, Clone, PartialEq)]
pub struct BohrCutResult {
    pub g: GridDensity,
    pub h: GridDensity,
    pub lambda: f64,
    pub eta: f64,
    pub q: f64,
    pub g_hat_l2: f64,
    pub h_hat_l3: f64,
    pub large_spectrum_size: usize,
    pub bohr_size: usize,
    /// `‖ĝ‖₂ / (η^{-(q-2)/2} M)`.
    pub g_constant: f64,
    /// `‖ĥ‖₃ / (η^{(3-q)/3} M)`.
    pub h_constant: f64,
    /// `‖φ̂‖_p` with `p = 2/(q-2)`, when `q > 2`.
    pub phi_hat_lp: Option<f64>,
    /// `max_{ξ ∈ E_λ} |1 - φ̂(ξ)| / η²`.
    pub one_minus_phi_ratio: f64,
    /// `|1 - φ̂| ≤ η²/2` failed somewhere on `E_λ`.
    pub eta_sq_violation: bool,
    /// The Bohr set collapsed to `{0}` while `E_λ` had nonzero frequencies.
    pub degenerate: bool,
    /// Largest `|ĝ| - |f̂|` and `|ĥ| - 2|f̂|` over all frequencies.
    pub g_domination_excess: f64,
    pub h_domination_excess: f64,
}

impl BohrCutResult {
    pub const CSV_HEADER: &'static str = "lambda,eta,q,large_spectrum_size,bohr_size,g_hat_l2,h_hat_l3,g_constant,h_constant,one_minus_phi_ratio,eta_sq_violation,degenerate";

    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{:e},{:e},{:e},{},{},{:e},{:e},{:e},{:e},{:e},{},{}",
            self.lambda,
            self.eta,
            self.q,
            self.large_spectrum_size,
            self.bohr_size,
            self.g_hat_l2,
            self.h_hat_l3,
            self.g_constant,
            self.h_constant,
            self.one_minus_phi_ratio,
            self.eta_sq_violation,
            self.degenerate
        );
        s
    }
}

/// Split `f = g + h` with `g = φ∗f`, `φ = 1_B/|B|`, `B = B(E_λ, η)`,
/// `E_λ = {ξ : |f̂(ξ)| ≥ λ}`, `λ = Mη`, `η = (ε/M)^T`.
pub fn bohr_cut(f: &GridDensity, m_bound: f64, eps: f64, t: f64) -> Result<BohrCutResult> {
    if !f.is_nonnegative() {
        return Err(invalid("f", "density must be nonnegative"));
    }
    if !(m_bound > 0.0) {
        return Err(invalid("M_bound", "must be positive"));
    }
    if !(eps > 0.0) {
        return Err(invalid("eps", "must be positive"));
    }
    if !(t > 1.0) {
        return Err(invalid("T", "must exceed 1"));
    }
    let (d, n) = (f.d(), f.n());
    let len = f.len();
    let eta = (eps / m_bound).powf(t);
    let lambda = m_bound * eta;
    let q = implied_q(eps, m_bound, t, BOHR_C);

    let fs = dual_transform(f);
    let large: Vec<Vec<i64>> = (0..len)
        .filter(|&i| fs.coeffs()[i].norm() >= lambda)
        .map(|i| centered_coords(d, n, i))
        .collect();
    let bohr = bohr_set(&large, eta, n, d)?;
    let bsize = bohr.len();

    let g_values: Vec<f64> = if bsize == len {
        vec![f.mean(); len]
    } else {
        let offsets: Vec<Vec<i64>> = bohr
            .members
            .iter()
            .map(|&m| coords_of(d, n, m).into_iter().map(|c| c as i64).collect())
            .collect();
        (0..len)
            .map(|x| {
                let xc: Vec<i64> = coords_of(d, n, x).into_iter().map(|c| c as i64).collect();
                let s: f64 = offsets
                    .iter()
                    .map(|y| {
                        let c: Vec<i64> = xc.iter().zip(y).map(|(a, b)| a - b).collect();
                        f.values()[index_of(n, &c)]
                    })
                    .sum();
                s / bsize as f64
            })
            .collect()
    };
    let g = GridDensity::new(d, n, g_values)?;
    let h = f.sub(&g)?;

    let mut phi = vec![0.0; len];
    for &m in &bohr.members {
        phi[m] = len as f64 / bsize as f64;
    }
    let phi_hat = dual_transform(&GridDensity::new(d, n, phi)?);
    let gs = dual_transform(&g);
    let hs = dual_transform(&h);

    let mut g_exc = f64::NEG_INFINITY;
    let mut h_exc = f64::NEG_INFINITY;
    for i in 0..len {
        let a = fs.coeffs()[i].norm();
        g_exc = g_exc.max(gs.coeffs()[i].norm() - a);
        h_exc = h_exc.max(hs.coeffs()[i].norm() - 2.0 * a);
    }
    let one = Complex64::new(1.0, 0.0);
    let max_gap = large
        .iter()
        .map(|xi| (one - phi_hat.at(xi)).norm())
        .fold(0.0, f64::max);
    let ratio = max_gap / (eta * eta);
    let g_hat_l2 = lq_norm(&gs, 2.0, false)?;
    let h_hat_l3 = lq_norm(&hs, 3.0, false)?;
    let phi_hat_lp = if q > 2.0 {
        Some(lq_norm(&phi_hat, 2.0 / (q - 2.0), false)?)
    } else {
        None
    };
    let nonzero_large = large.iter().any(|xi| xi.iter().any(|&c| c != 0));
    Ok(BohrCutResult {
        g_constant: g_hat_l2 / (eta.powf(-(q - 2.0) / 2.0) * m_bound),
        h_constant: h_hat_l3 / (eta.powf((3.0 - q) / 3.0) * m_bound),
        g,
        h,
        lambda,
        eta,
        q,
        g_hat_l2,
        h_hat_l3,
        large_spectrum_size: large.len(),
        bohr_size: bsize,
        phi_hat_lp,
        one_minus_phi_ratio: ratio,
        eta_sq_violation: max_gap > 0.5 * eta * eta * (1.0 + 1e-9) + 1e-15,
        degenerate: bsize == 1 && nonzero_large,
        g_domination_excess: g_exc,
        h_domination_excess: h_exc,
    })
}

/// `c(t) = t⁻³ - 1`: the slack `c` for which `‖μ̂‖₃ ≤ ∛(1+c) δ` holds with
/// equality at `M = δ/t`. Nonincreasing, and equal to 1 at `t = 2^{-1/3}`.
pub fn l3count_c(t: f64) -> f64 {
    t.powi(-3) - 1.0
}

/// Smallest and largest `T` of the search grid.
pub const T_MIN: f64 = 1.0 + 1.0 / 1024.0;
pub const T_MAX: f64 = 64.0;

/// Admissible `q - 2` at a given `T`.
fn q_objective(t: f64, base: f64, c1: f64) -> f64 {
    let first = 1.0 - 3.0 / t;
    let y_ln = t * base.ln();
    let second = if y_ln > 0.0 {
        c1 / (y_ln.exp() * y_ln)
    } else {
        f64::INFINITY
    };
    first.min(second)
}

/// Threshold exponent `q(M, δ)`.
///
/// For each `T` on the grid the admissible exponent is
/// `min(3(1 - 1/T), 2 + C1 / (y ln y))`, `y = (C2 c)^T`, `c = c2(δ/M)`; the
/// second branch imposes no constraint when `y ≤ 1`. The result is the
/// largest admissible exponent over `T`, refined locally until it moves by
/// less than `Q_REFINE`.
pub fn q_threshold(m: f64, delta: f64, c2: &dyn Fn(f64) -> f64, c1: f64, c2_scale: f64) -> Result<f64> {
    Ok(2.0 + q_threshold_excess(m, delta, c2, c1, c2_scale)?)
}

/// `q(M, δ) - 2`, computed without the cancellation of forming `q` first.
pub fn q_threshold_excess(
    m: f64,
    delta: f64,
    c2: &dyn Fn(f64) -> f64,
    c1: f64,
    c2_scale: f64,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(invalid("delta", "must be positive"));
    }
    if !(m >= delta) {
        return Err(invalid("M", format!("{m} < delta = {delta}")));
    }
    if !(c1 > 0.0 && c2_scale > 0.0) {
        return Err(invalid("C1/C2", "constants must be positive"));
    }
    let c = c2(delta / m);
    if !(c > 0.0) || !c.is_finite() {
        return Err(invalid("c2_table", format!("returned {c} at t = {}", delta / m)));
    }
    let base = c2_scale * c;
    let steps = 512;
    let ratio = (T_MAX / T_MIN).ln() / steps as f64;
    let grid: Vec<f64> = (0..=steps).map(|k| T_MIN * (ratio * k as f64).exp()).collect();
    let (mut best_t, mut best) = (grid[0], f64::NEG_INFINITY);
    for &t in &grid {
        let v = q_objective(t, base, c1);
        if v > best {
            best = v;
            best_t = t;
        }
    }
    let mut width = ratio;
    loop {
        let lo = (best_t * (-width).exp()).max(T_MIN);
        let hi = (best_t * width.exp()).min(T_MAX);
        let mut local_best = best;
        let mut local_t = best_t;
        for k in 0..=64 {
            let t = lo * ((hi / lo).ln() * k as f64 / 64.0).exp();
            let v = q_objective(t, base, c1);
            if v > local_best {
                local_best = v;
                local_t = t;
            }
        }
        let moved = local_best - best;
        best = local_best;
        best_t = local_t;
        width /= 8.0;
        if moved < Q_REFINE * best.abs().min(1.0) || width < 1e-12 {
            break;
        }
    }
    Ok(best)
}

/// Persisted lower envelope standing in for `c^(2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C2Table {
    pub corpus_seed: u64,
    pub corpus_size: usize,
    pub t: Vec<f64>,
    pub c2: Vec<f64>,
}

impl C2Table {
    /// Empirical lower envelope: `c2(t) = min Λ₃(f)` over corpus members with
    /// `‖f‖₂ = 1` and `‖f‖₁ ≥ t`.
    pub fn build(seed: u64, size: usize, n: usize, t_grid: &[f64]) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut members = Vec::with_capacity(size);
        for _ in 0..size {
            let density: f64 = rng.gen_range(0.05..=1.0);
            let jitter: f64 = rng.gen_range(0.0..1.0);
            let values: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.gen::<f64>() < density {
                        1.0 + jitter * rng.gen::<f64>()
                    } else {
                        0.0
                    }
                })
                .collect();
            let mut f = GridDensity::new(1, n, values)?;
            let norm = f.l2_norm();
            if norm == 0.0 {
                continue;
            }
            f = f.scaled(1.0 / norm);
            members.push((f.l1_norm(), lambda3_spectral(&f, &f, &f)?));
        }
        let mut t = Vec::new();
        let mut c2 = Vec::new();
        for &tv in t_grid {
            let m = members
                .iter()
                .filter(|(l1, _)| *l1 >= tv)
                .map(|(_, l)| *l)
                .fold(f64::INFINITY, f64::min);
            if m.is_finite() {
                t.push(tv);
                c2.push(m);
            }
        }
        if t.is_empty() {
            return Err(invalid("t_grid", "no corpus member reaches any grid value"));
        }
        Ok(Self {
            corpus_seed: seed,
            corpus_size: size,
            t,
            c2,
        })
    }

    /// Piecewise-linear interpolation, constant beyond the ends.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.t.partition_point(|&v| v <= x);
        if k == 0 {
            return self.c2[0];
        }
        if k == self.t.len() {
            return self.c2[k - 1];
        }
        let (t0, t1) = (self.t[k - 1], self.t[k]);
        let w = (x - t0) / (t1 - t0);
        self.c2[k - 1] * (1.0 - w) + self.c2[k] * w
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "# corpus_seed={} corpus_size={}\nt,c2_lower_bound\n",
            self.corpus_seed, self.corpus_size
        );
        for (t, c) in self.t.iter().zip(&self.c2) {
            let _ = writeln!(s, "{t:e},{c:e}");
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let head = lines.next().ok_or_else(|| ApError::Format("empty table".into()))?;
        let mut seed = None;
        let mut size = None;
        for tok in head.trim_start_matches('#').split_whitespace() {
            if let Some(v) = tok.strip_prefix("corpus_seed=") {
                seed = v.parse().ok();
            } else if let Some(v) = tok.strip_prefix("corpus_size=") {
                size = v.parse().ok();
            }
        }
        let (corpus_seed, corpus_size) = seed
            .zip(size)
            .ok_or_else(|| ApError::Format("header must name corpus_seed and corpus_size".into()))?;
        if lines.next().map(str::trim) != Some("t,c2_lower_bound") {
            return Err(ApError::Format("missing column header".into()));
        }
        let (mut t, mut c2) = (Vec::new(), Vec::new());
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| ApError::Format(format!("bad row `{line}`")))?;
            t.push(a.trim().parse().map_err(|_| ApError::Format(format!("bad t `{a}`")))?);
            c2.push(b.trim().parse().map_err(|_| ApError::Format(format!("bad value `{b}`")))?);
        }
        Ok(Self {
            corpus_seed,
            corpus_size,
            t,
            c2,
        })
    }
}

/// Result of the pointwise cap at `K = 3/ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub f_le: GridDensity,
    pub f_gt: GridDensity,
    pub cap: f64,
    pub gt_l2: f64,
    /// `ε/√3`.
    pub bound: f64,
    pub bound_holds: bool,
    /// Normalized measure of `{f > K}`; at most `ε²/9` when `‖f‖₂ ≤ 1`.
    pub exceed_measure: f64,
}

/// `f_le = min(f, 3/ε)`, `f_gt = f - f_le`.
pub fn truncate_l2(f: &GridDensity, eps: f64) -> Result<Truncation> {
    if !(eps > 0.0) {
        return Err(invalid("eps", "must be positive"));
    }
    let cap = 3.0 / eps;
    let le: Vec<f64> = f.values().iter().map(|&v| v.min(cap)).collect();
    let f_le = GridDensity::new(f.d(), f.n(), le)?;
    let f_gt = f.sub(&f_le)?;
    let gt_l2 = f_gt.l2_norm();
    let bound = eps / 3f64.sqrt();
    let exceed = f.values().iter().filter(|&&v| v > cap).count() as f64 / f.len() as f64;
    Ok(Truncation {
        f_le,
        f_gt,
        cap,
        gt_l2,
        bound,
        bound_holds: gt_l2 <= bound,
        exceed_measure: exceed,
    })
}

/// Smooth step: 0 at `s ≤ 0`, 1 at `s ≥ 1`, infinitely differentiable.
pub fn smooth_step(s: f64) -> f64 {
    let psi = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        psi(s) / (psi(s) + psi(1.0 - s))
    }
}

/// Radial multiplier: 1 on `|ξ|∞ ≤ 2^{n-1}`, 0 on `|ξ|∞ ≥ 2^n`.
pub fn cutoff_multiplier(xi: &[i64], level: u32) -> f64 {
    let r = xi.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0) as f64;
    let inner = 2f64.powi(level as i32 - 1);
    smooth_step((2.0 * inner - r) / inner)
}

/// `f_n` with `f̂_n = f̂ · ŵ`, balls taken in the max norm of the lattice.
pub fn spectral_truncate(f: &GridDensity, level: u32) -> GridDensity {
    if (1u128 << level.min(127)) >= f.n() as u128 {
        return f.clone();
    }
    let s = dual_transform(f).multiplied(|xi| cutoff_multiplier(xi, level));
    inverse_transform(&s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_frequency_set_is_everything() {
        let b = bohr_set(&[], 0.1, 12, 1).unwrap();
        assert_eq!(b.len(), 12);
        let b = bohr_set(&[vec![1], vec![5]], 2.0, 12, 1).unwrap();
        assert_eq!(b.len(), 12);
        let b = bohr_set(&[vec![1, 3]], 2.0, 5, 2).unwrap();
        assert_eq!(b.len(), 25);
    }

    #[test]
    fn nonpositive_eta_is_rejected() {
        assert!(bohr_set(&[], 0.0, 12, 1).is_err());
        assert!(bohr_set(&[], -1.0, 12, 1).is_err());
    }

    #[test]
    fn constant_density_is_untouched() {
        let f = GridDensity::constant(1, 32, 1.0).unwrap();
        let r = bohr_cut(&f, 1.0, 0.1, 2.0).unwrap();
        assert!(r.g.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
        assert!(r.h.values().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn empty_large_spectrum_gives_mean() {
        let f = GridDensity::from_fn(1, 16, |c| 1.0 + 0.1 * (c[0] % 3) as f64).unwrap();
        // T close to 1 gives λ ≈ ε, above every coefficient.
        let r = bohr_cut(&f, 10.0, 5.0, 1.0001).unwrap();
        assert_eq!(r.large_spectrum_size, 0);
        assert_eq!(r.bohr_size, 16);
        let mean = f.mean();
        assert!(r.g.values().iter().all(|v| (v - mean).abs() < 1e-14));
    }

    #[test]
    fn q_threshold_rejects_bad_table() {
        assert!(q_threshold(2.0, 1.0, &|_| 0.0, 1.0, 1.0).is_err());
        assert!(q_threshold(0.5, 1.0, &|_| 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn q_threshold_in_range() {
        for m in [1.3, 2.0, 5.0, 50.0] {
            let e = q_threshold_excess(m, 1.0, &l3count_c, 1.0, 1.0).unwrap();
            assert!(e > 0.0 && e <= 1.0, "q - 2 = {e}");
        }
    }

    #[test]
    fn truncation_spike() {
        let eps = 0.5;
        let k = 3.0 / eps;
        let mut v = vec![0.0; 10];
        v[3] = 2.0 * k;
        let f = GridDensity::new(1, 10, v).unwrap();
        let t = truncate_l2(&f, eps).unwrap();
        assert_eq!(t.f_gt.values()[3], k);
        assert!(t.f_gt.values().iter().enumerate().all(|(i, &x)| i == 3 || x == 0.0));
        assert!(truncate_l2(&f, 0.0).is_err());
    }

    #[test]
    fn smooth_step_limits() {
        assert_eq!(smooth_step(-0.1), 0.0);
        assert_eq!(smooth_step(1.5), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn c2_table_csv_round_trip() {
        let t = C2Table::build(7, 20, 31, &[0.1, 0.3, 0.5]).unwrap();
        let back = C2Table::from_csv(&t.to_csv()).unwrap();
        assert_eq!(back.corpus_seed, 7);
        assert_eq!(back.t.len(), t.t.len());
        for (a, b) in back.c2.iter().zip(&t.c2) {
            assert_eq!(a, b);
        }
    }
}
