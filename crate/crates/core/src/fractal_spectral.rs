//! Energies, decay constants, mollified measures, spherical averages of the
//! triple spectrum, the 3AP-length measure and its polar representation,
//! and the `S + L` splitting of the rescaled length density.
//!
//! Two Fourier conventions meet here. Measures on `[0,1]^d` are handled
//! through [`FourierHandle`], `μ̂(ξ) = ∫ e^{-2πi ξ·x} dμ(x)` at real `ξ`.
//! Grid densities on `Z_N^d` are read as periodic functions on the torus,
//! where the 3AP-length measure is `δ(r) = r^{d-1} ∫_{S^{d-1}} A(rθ) dσ(θ)`
//! with `A(u) = ∫ f(x) f(x-u) f(x-2u) dx`.
//!
//! Spherical tables are indexed by `ρ = |ζ|/2`, so that in both cases
//!
//! ```text
//! δ(r) = C_d r^{d/2} ∫ ρ^{d/2} J_m(4π r ρ) σ(ρ) dρ,   C_d = 2π · 2^{d/2+1}.
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::{self, bessel_j, gamma_half_integer, order};
use crate::constructions::SelfSimilarMeasure;
use crate::error::{invalid, ApError, Result};
use crate::group_fourier::{centered_coords, per_shift_sums, coords_of, dual_transform, inverse_transform, GridDensity, Spectrum};
use crate::numeric::{fit_line, loglog_slope, pairwise_sum, pairwise_sum_c, trapezoid};
use crate::tolerances::{CUTOFF_DOUBLING_REL, RICHARDSON_REL, SL_IDENTITY_REL, TAIL_BLOCK_SHARE};

/// Read access to a Fourier transform.
pub trait FourierHandle: Sync {
    fn dim(&self) -> usize;

    /// `μ̂(ξ)` at a real frequency.
    fn eval(&self, xi: &[f64]) -> Complex64;

    /// `μ̂(ξ)` at a lattice frequency.
    fn eval_lattice(&self, xi: &[i64]) -> Complex64 {
        let x: Vec<f64> = xi.iter().map(|&c| c as f64).collect();
        self.eval(&x)
    }

    /// The underlying grid data, for discretized measures.
    fn grid(&self) -> Option<&GridDensity> {
        None
    }
}

impl FourierHandle for SelfSimilarMeasure {
    fn dim(&self) -> usize {
        self.d
    }
    fn eval(&self, xi: &[f64]) -> Complex64 {
        xi.iter().map(|&x| self.fourier_axis(x, None)).product()
    }
}

/// A grid density read as a sum of point masses `N^{-d} f(x)` at `x/N`.
#[derive(Debug, Clone)]
pub struct GridMeasure {
    density: GridDensity,
    spectrum: Spectrum,
}

impl GridMeasure {
    pub fn new(density: GridDensity) -> Self {
        let spectrum = dual_transform(&density);
        Self { density, spectrum }
    }
    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }
}

impl FourierHandle for GridMeasure {
    fn dim(&self) -> usize {
        self.density.d()
    }
    fn eval(&self, xi: &[f64]) -> Complex64 {
        let (d, n) = (self.density.d(), self.density.n());
        let terms: Vec<Complex64> = self
            .density
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let phase: f64 = coords_of(d, n, i).iter().zip(xi).map(|(&c, &x)| c as f64 * x).sum();
                Complex64::from_polar(v, -2.0 * PI * phase / n as f64)
            })
            .collect();
        pairwise_sum_c(&terms) / self.density.len() as f64
    }
    fn eval_lattice(&self, xi: &[i64]) -> Complex64 {
        self.spectrum.at(xi)
    }
    fn grid(&self) -> Option<&GridDensity> {
        Some(&self.density)
    }
}

/// Product Fejér multiplier `Π_k max(0, 1 - |ξ_k|/B)`.
pub fn fejer_weight(xi: &[f64], band: f64) -> f64 {
    xi.iter().map(|&x| (1.0 - x.abs() / band).max(0.0)).product()
}

/// `μ̂(ξ) = (1 + |ξ|²)^{-γ/2}`, optionally multiplied by a Fejér band limit.
/// Positive definite, so it is the transform of a positive measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselPotential {
    pub d: usize,
    pub gamma: f64,
    pub band: Option<f64>,
}

impl FourierHandle for BesselPotential {
    fn dim(&self) -> usize {
        self.d
    }
    fn eval(&self, xi: &[f64]) -> Complex64 {
        let r2: f64 = xi.iter().map(|x| x * x).sum();
        let w = self.band.map_or(1.0, |b| fejer_weight(xi, b));
        Complex64::new((1.0 + r2).powf(-self.gamma / 2.0) * w, 0.0)
    }
}

/// Isotropic Gaussian probability density with standard deviation `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub d: usize,
    pub s: f64,
}

impl Gaussian {
    /// `A(u) = ∫ g(x) g(x+u) g(x+2u) dx` in closed form.
    pub fn triple_correlation(&self, u_abs: f64) -> f64 {
        let s2 = self.s * self.s;
        let d = self.d as f64;
        (2.0 * PI * s2).powf(-d) * 3f64.powf(-d / 2.0) * (-u_abs * u_abs / s2).exp()
    }

    /// Closed-form length density `r^{d-1} |S^{d-1}| A(r)`.
    pub fn length_density(&self, r: f64) -> f64 {
        let area = bessel::sphere_fourier(self.d, 0.0);
        r.powi(self.d as i32 - 1) * area * self.triple_correlation(r)
    }
}

impl FourierHandle for Gaussian {
    fn dim(&self) -> usize {
        self.d
    }
    fn eval(&self, xi: &[f64]) -> Complex64 {
        let r2: f64 = xi.iter().map(|x| x * x).sum();
        Complex64::new((-2.0 * PI * PI * self.s * self.s * r2).exp(), 0.0)
    }
}

/// Torus measure with `μ̂(0) = 1`, `μ̂(±f) = a` on a list of axis-0
/// frequencies, and nothing else. Defined on the lattice only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeSpectrum {
    pub d: usize,
    pub freqs: Vec<i64>,
    pub amplitude: f64,
}

impl FourierHandle for SpikeSpectrum {
    fn dim(&self) -> usize {
        self.d
    }
    fn eval(&self, xi: &[f64]) -> Complex64 {
        if xi.iter().any(|x| x.fract() != 0.0) {
            return Complex64::new(0.0, 0.0);
        }
        let k: Vec<i64> = xi.iter().map(|&x| x as i64).collect();
        self.eval_lattice(&k)
    }
    fn eval_lattice(&self, xi: &[i64]) -> Complex64 {
        if xi.iter().all(|&c| c == 0) {
            return Complex64::new(1.0, 0.0);
        }
        let on_axis = xi[1..].iter().all(|&c| c == 0);
        if on_axis && self.freqs.contains(&xi[0].abs()) {
            Complex64::new(self.amplitude, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }
}

/// Lebesgue measure on `[0,1]^d`: `μ̂(ξ) = Π e^{-iπξ_k} sinc(πξ_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LebesgueCube {
    pub d: usize,
}

impl FourierHandle for LebesgueCube {
    fn dim(&self) -> usize {
        self.d
    }
    fn eval(&self, xi: &[f64]) -> Complex64 {
        xi.iter()
            .map(|&x| {
                let s = if x == 0.0 {
                    1.0
                } else if x.fract() == 0.0 {
                    0.0
                } else {
                    (PI * x).sin() / (PI * x)
                };
                Complex64::from_polar(s, -PI * x)
            })
            .product()
    }
}

// ---------------------------------------------------------------------------
// Mollification

/// `φ_n ∗ μ` on `Z_N^d` with the product Fejér kernel of band `2^n`.
///
/// When `2^n` reaches the Nyquist frequency of a grid-backed handle the grid
/// data is returned unchanged.
pub fn mollify(mu: &dyn FourierHandle, level: u32, grid_n: usize) -> Result<GridDensity> {
    let d = mu.dim();
    let band = 2f64.powi(level as i32);
    let nyquist = (grid_n / 2) as f64;
    if let Some(g) = mu.grid() {
        if g.n() == grid_n && band >= nyquist {
            return Ok(g.clone());
        }
    }
    if band > nyquist {
        return Err(ApError::Resolution(format!(
            "band 2^{level} exceeds the Nyquist frequency {nyquist} of N = {grid_n}"
        )));
    }
    let len = grid_n.pow(d as u32);
    let coeffs = (0..len)
        .into_par_iter()
        .map(|i| {
            let xi = centered_coords(d, grid_n, i);
            let xf: Vec<f64> = xi.iter().map(|&c| c as f64).collect();
            let w = fejer_weight(&xf, band);
            if w > 0.0 {
                mu.eval_lattice(&xi) * w
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Ok(inverse_transform(&Spectrum::new(d, grid_n, coeffs)?))
}

/// Fejér-mollified spectrum of a handle, in FFT order, without inverting.
pub fn mollified_spectrum(mu: &dyn FourierHandle, level: u32, grid_n: usize) -> Result<Spectrum> {
    let d = mu.dim();
    let band = 2f64.powi(level as i32);
    if band > (grid_n / 2) as f64 {
        return Err(ApError::Resolution(format!("band 2^{level} exceeds Nyquist for N = {grid_n}")));
    }
    let coeffs = (0..grid_n.pow(d as u32))
        .into_par_iter()
        .map(|i| {
            let xi = centered_coords(d, grid_n, i);
            let xf: Vec<f64> = xi.iter().map(|&c| c as f64).collect();
            let w = fejer_weight(&xf, band);
            if w > 0.0 {
                mu.eval_lattice(&xi) * w
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Spectrum::new(d, grid_n, coeffs)
}

// ---------------------------------------------------------------------------
// Energies and decay

/// Lattice points `ξ ∈ Z^d` with `|ξ| ≤ radius`, in lexicographic order.
pub fn lattice_ball(d: usize, radius: f64) -> Vec<Vec<i64>> {
    let r = radius.floor() as i64;
    let r2 = radius * radius;
    match d {
        1 => (-r..=r).map(|a| vec![a]).collect(),
        2 => (-r..=r)
            .flat_map(|a| (-r..=r).map(move |b| vec![a, b]))
            .filter(|v| ((v[0] * v[0] + v[1] * v[1]) as f64) <= r2)
            .collect(),
        _ => (-r..=r)
            .flat_map(|a| (-r..=r).flat_map(move |b| (-r..=r).map(move |c| vec![a, b, c])))
            .filter(|v| ((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) as f64) <= r2)
            .collect(),
    }
}

fn norm_i(xi: &[i64]) -> f64 {
    xi.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt()
}

/// Partial Riesz-energy sum and its growth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub alpha: f64,
    pub value: f64,
    pub cutoff: f64,
    /// `max(0, block_slope)`.
    pub growth_exponent: f64,
    /// Fitted log₂-slope of the dyadic block contributions against the
    /// block index; negative when the sum converges.
    pub block_slope: Option<f64>,
    /// `(Ξ_j, partial sum up to Ξ_j)` at dyadic cutoffs.
    pub partial_sums: Vec<(f64, f64)>,
}

/// `Σ_{|ξ| ≤ Ξ} |μ̂(ξ)|² |ξ|₊^{-(d-α)}` with `|ξ|₊ = max(|ξ|, 1)`.
pub fn energy(mu: &dyn FourierHandle, alpha: f64, cutoff: f64) -> Result<EnergyReport> {
    let d = mu.dim();
    if !(alpha > 0.0 && alpha < d as f64) {
        return Err(invalid("alpha", format!("{alpha} not in (0, {d})")));
    }
    if !(cutoff >= 1.0) {
        return Err(invalid("cutoff", "must be at least 1"));
    }
    let points = lattice_ball(d, cutoff);
    let terms: Vec<(f64, f64)> = points
        .par_iter()
        .map(|xi| {
            let r = norm_i(xi);
            let t = mu.eval_lattice(xi).norm_sqr() * r.max(1.0).powf(-(d as f64 - alpha));
            (r, t)
        })
        .collect();
    let blocks = cutoff.log2().floor() as usize;
    let mut per_block: Vec<Vec<f64>> = vec![Vec::new(); blocks + 2];
    for &(r, t) in &terms {
        let j = if r <= 1.0 { 0 } else { (r.log2().ceil() as usize).min(blocks + 1) };
        per_block[j].push(t);
    }
    let block_sums: Vec<f64> = per_block.iter().map(|b| pairwise_sum(b)).collect();
    let mut partial_sums = Vec::new();
    let mut running = 0.0;
    for (j, s) in block_sums.iter().enumerate().take(blocks + 1) {
        running += s;
        partial_sums.push((2f64.powi(j as i32), running));
    }
    let value = pairwise_sum(&block_sums);
    // Blocks 2..=blocks are complete dyadic shells (2^{j-1}, 2^j].
    let (xs, ys): (Vec<f64>, Vec<f64>) = (2..=blocks)
        .filter(|&j| block_sums[j] > 0.0)
        .map(|j| (j as f64, block_sums[j].log2()))
        .unzip();
    let block_slope = if xs.len() >= 3 { fit_line(&xs, &ys).map(|f| f.slope) } else { None };
    Ok(EnergyReport {
        alpha,
        value,
        cutoff,
        growth_exponent: block_slope.unwrap_or(0.0).max(0.0),
        block_slope,
        partial_sums,
    })
}

/// Samples per unit frequency used by [`decay_constant`].
pub const DECAY_OVERSAMPLE: f64 = 8.0;

fn real_grid_ball(d: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    let h = 1.0 / DECAY_OVERSAMPLE;
    let k = (hi / h).floor() as i64;
    let in_shell = |r: f64| r >= lo && r <= hi;
    match d {
        1 => (-k..=k).map(|a| vec![a as f64 * h]).filter(|v| in_shell(v[0].abs())).collect(),
        _ => (-k..=k)
            .flat_map(|a| (-k..=k).map(move |b| vec![a as f64 * h, b as f64 * h]))
            .filter(|v| in_shell((v[0] * v[0] + v[1] * v[1]).sqrt()))
            .collect(),
    }
}

fn weighted_sup(mu: &dyn FourierHandle, beta: f64, lo: f64, hi: f64) -> f64 {
    real_grid_ball(mu.dim(), lo, hi)
        .par_iter()
        .map(|xi| {
            let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
            mu.eval(xi).norm() * (1.0 + r).powf(beta / 2.0)
        })
        .reduce(|| 0.0, f64::max)
}

/// `sup_{|ξ| ≤ Ξ} |μ̂(ξ)| (1 + |ξ|)^{β/2}` over real `ξ` sampled at spacing
/// `1/DECAY_OVERSAMPLE`.
pub fn decay_constant(mu: &dyn FourierHandle, beta: f64, cutoff: f64) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(invalid("beta", format!("{beta} < 0")));
    }
    Ok(weighted_sup(mu, beta, 0.0, cutoff))
}

/// Outcome of the cutoff-doubling admissibility test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayAdmissibility {
    pub beta: f64,
    /// `(Ξ_j, sup over the shell Ξ_j/2 < |ξ| ≤ Ξ_j)`.
    pub shell_sups: Vec<(f64, f64)>,
    /// Fitted log₂ growth of the shell sups per doubling.
    pub growth_per_doubling: f64,
    pub admissible: bool,
}

/// Shell sups of `|μ̂|(1+|ξ|)^{β/2}` over `doublings` dyadic shells ending at
/// `cutoff`; `β` is admissible when the fitted growth per doubling is at
/// most `log₂(1 + CUTOFF_DOUBLING_REL)`.
pub fn decay_admissibility(mu: &dyn FourierHandle, beta: f64, cutoff: f64, doublings: usize) -> Result<DecayAdmissibility> {
    if !(beta >= 0.0) {
        return Err(invalid("beta", format!("{beta} < 0")));
    }
    if doublings < 3 {
        return Err(invalid("doublings", "need at least 3 shells to fit"));
    }
    let shell_sups: Vec<(f64, f64)> = (0..doublings)
        .rev()
        .map(|j| {
            let hi = cutoff / 2f64.powi(j as i32);
            (hi, weighted_sup(mu, beta, hi / 2.0, hi))
        })
        .collect();
    let xs: Vec<f64> = (0..doublings).map(|j| j as f64).collect();
    let ys: Vec<f64> = shell_sups.iter().map(|&(_, s)| s.max(1e-300).log2()).collect();
    let growth = fit_line(&xs, &ys).map_or(f64::INFINITY, |f| f.slope);
    Ok(DecayAdmissibility {
        beta,
        shell_sups,
        growth_per_doubling: growth,
        admissible: growth <= (1.0 + CUTOFF_DOUBLING_REL).log2(),
    })
}

/// Largest admissible `β` on `grid` (ascending), if any.
pub fn measured_beta(mu: &dyn FourierHandle, grid: &[f64], cutoff: f64, doublings: usize) -> Result<Option<f64>> {
    let mut best = None;
    for &b in grid {
        if decay_admissibility(mu, b, cutoff, doublings)?.admissible {
            best = Some(b);
        } else {
            break;
        }
    }
    Ok(best)
}

/// `Σ_{|ξ| ≤ Ξ} |μ̂(ξ)|^q` over the integer lattice.
pub fn lq_power_sum(mu: &dyn FourierHandle, q: f64, cutoff: f64) -> f64 {
    let terms: Vec<f64> = lattice_ball(mu.dim(), cutoff)
        .par_iter()
        .map(|xi| mu.eval_lattice(xi).norm().powf(q))
        .collect();
    pairwise_sum(&terms)
}

/// Smallest `q` on `grid` whose `ℓ^q` norm over `|ξ| ≤ Ξ` changes by at most
/// `CUTOFF_DOUBLING_REL` when `Ξ` doubles.
pub fn measured_lq_exponent(mu: &dyn FourierHandle, grid: &[f64], cutoff: f64) -> Option<f64> {
    grid.iter().copied().find(|&q| {
        let a = lq_power_sum(mu, q, cutoff).powf(1.0 / q);
        let b = lq_power_sum(mu, q, 2.0 * cutoff).powf(1.0 / q);
        (b - a).abs() <= CUTOFF_DOUBLING_REL * b
    })
}

/// Both sides of `Σ|μ̂|^{q} ≤ I_α · sup(|μ̂|^{q-2} |ξ|₊^{d-α})` over the lattice
/// ball, computed from the same samples.
pub fn decay_to_lq_chain(mu: &dyn FourierHandle, alpha: f64, q: f64, cutoff: f64) -> (f64, f64) {
    let d = mu.dim() as f64;
    let samples: Vec<(f64, f64)> = lattice_ball(mu.dim(), cutoff)
        .par_iter()
        .map(|xi| (mu.eval_lattice(xi).norm(), norm_i(xi).max(1.0)))
        .collect();
    let lhs = pairwise_sum(&samples.iter().map(|&(a, _)| a.powf(q)).collect::<Vec<_>>());
    let energy = pairwise_sum(&samples.iter().map(|&(a, r)| a * a * r.powf(alpha - d)).collect::<Vec<_>>());
    let sup = samples
        .iter()
        .map(|&(a, r)| a.powf(q - 2.0) * r.powf(d - alpha))
        .fold(0.0, f64::max);
    (lhs, energy * sup)
}

// ---------------------------------------------------------------------------
// Spherical averages

/// Quadrature nodes on `S^{d-1}` with weights summing to the surface area.
pub fn sphere_nodes(d: usize, angular_nodes: usize) -> Vec<(Vec<f64>, f64)> {
    match d {
        1 => vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)],
        _ => (0..angular_nodes)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / angular_nodes as f64;
                (vec![t.cos(), t.sin()], 2.0 * PI / angular_nodes as f64)
            })
            .collect(),
    }
}

/// Quadrature parameters for [`sigma_spherical`] and [`sigma_abs`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaParams {
    pub angular_nodes: usize,
    pub freq_cutoff: f64,
    pub step: f64,
}

fn eta_grid(d: usize, cutoff: f64, step: f64) -> Vec<Vec<f64>> {
    let k = (cutoff / step).floor() as i64;
    let r2 = cutoff * cutoff;
    match d {
        1 => (-k..=k).map(|a| vec![a as f64 * step]).collect(),
        _ => (-k..=k)
            .flat_map(|a| (-k..=k).map(move |b| vec![a as f64 * step, b as f64 * step]))
            .filter(|v| v[0] * v[0] + v[1] * v[1] <= r2)
            .collect(),
    }
}

/// `(σ, Σ)` at one step, without the convergence check.
fn sigma_pair_at(mu: &dyn FourierHandle, rho: f64, p: &SigmaParams, step: f64) -> (Complex64, f64) {
    let d = mu.dim();
    let nodes = sphere_nodes(d, p.angular_nodes);
    let etas = eta_grid(d, p.freq_cutoff, step);
    let cell = step.powi(d as i32);
    let per_eta: Vec<(Complex64, f64)> = etas
        .par_iter()
        .map(|eta| {
            let two_eta: Vec<f64> = eta.iter().map(|e| 2.0 * e).collect();
            let a = mu.eval(&two_eta);
            let mut s = Complex64::new(0.0, 0.0);
            let mut s_abs = 0.0;
            for (theta, w) in &nodes {
                let minus: Vec<f64> = eta.iter().zip(theta).map(|(e, t)| e - rho * t).collect();
                let plus: Vec<f64> = eta.iter().zip(theta).map(|(e, t)| e + rho * t).collect();
                let b = mu.eval(&minus);
                let c = mu.eval(&plus);
                s += a * b.conj() * c.conj() * *w;
                s_abs += a.norm() * b.norm() * c.norm() * *w;
            }
            (s * cell, s_abs * cell)
        })
        .collect();
    let sig = pairwise_sum_c(&per_eta.iter().map(|p| p.0).collect::<Vec<_>>());
    let sig_abs = pairwise_sum(&per_eta.iter().map(|p| p.1).collect::<Vec<_>>());
    (sig, sig_abs)
}

fn validate_sigma(mu: &dyn FourierHandle, rho: f64, p: &SigmaParams) -> Result<()> {
    let d = mu.dim();
    if !(1..=2).contains(&d) {
        return Err(invalid("d", "spherical averages are implemented for d = 1, 2"));
    }
    if d == 2 && p.angular_nodes < 4 {
        return Err(invalid("angular_nodes", "need at least 4 nodes on the circle"));
    }
    if !(p.step > 0.0 && p.freq_cutoff > 0.0 && rho >= 0.0) {
        return Err(invalid("step", "step, cutoff and rho must be positive"));
    }
    Ok(())
}

/// `(σ(ρ), Σ(ρ))` with the Richardson check: halving the step must move
/// each value by less than `RICHARDSON_REL` of `Σ`.
pub fn sigma_pair(mu: &dyn FourierHandle, rho: f64, p: &SigmaParams) -> Result<(Complex64, f64)> {
    validate_sigma(mu, rho, p)?;
    let (c_sig, c_abs) = sigma_pair_at(mu, rho, p, p.step);
    let (f_sig, f_abs) = sigma_pair_at(mu, rho, p, p.step / 2.0);
    let scale = f_abs.max(f64::MIN_POSITIVE);
    if (c_abs - f_abs).abs() > RICHARDSON_REL * scale {
        return Err(ApError::NonConverged {
            coarse: c_abs,
            fine: f_abs,
        });
    }
    if (c_sig - f_sig).norm() > RICHARDSON_REL * scale {
        return Err(ApError::NonConverged {
            coarse: c_sig.norm(),
            fine: f_sig.norm(),
        });
    }
    Ok((f_sig, f_abs))
}

/// `σ(μ)(ρ) = ∫∫ μ̂(2η) conj μ̂(η-ρθ) conj μ̂(η+ρθ) dσ(θ) dη` over `|η| ≤ Ξ`.
pub fn sigma_spherical(mu: &dyn FourierHandle, rho: f64, p: &SigmaParams) -> Result<Complex64> {
    sigma_pair(mu, rho, p).map(|v| v.0)
}

/// `Σ(μ)(ρ)`, the same integral with absolute values.
pub fn sigma_abs(mu: &dyn FourierHandle, rho: f64, p: &SigmaParams) -> Result<f64> {
    sigma_pair(mu, rho, p).map(|v| v.1)
}

/// Smallest `2^k ≥ start` angular node count whose doubling changes `Σ(ρ)`
/// by at most `rel`.
pub fn stable_angular_nodes(mu: &dyn FourierHandle, rho: f64, p: &SigmaParams, rel: f64, max_nodes: usize) -> Result<usize> {
    if mu.dim() == 1 {
        return Ok(2);
    }
    let mut nodes = p.angular_nodes.max(4).next_power_of_two();
    while nodes <= max_nodes {
        let a = sigma_pair_at(mu, rho, &SigmaParams { angular_nodes: nodes, ..*p }, p.step).1;
        let b = sigma_pair_at(mu, rho, &SigmaParams { angular_nodes: 2 * nodes, ..*p }, p.step).1;
        if (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE) {
            return Ok(nodes);
        }
        nodes *= 2;
    }
    Err(ApError::Resolution(format!("angular quadrature unstable up to {max_nodes} nodes")))
}

/// How a spherical table was produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SigmaQuadrature {
    /// Tensorized `(θ, η)` quadrature of the defining integral.
    Continuous(SigmaParams),
    /// Exact shell sums of the torus triple spectrum `Â(ζ)` over `|ζ| = 2ρ`.
    Lattice { n: usize },
}

/// `σ` and `Σ` sampled on a grid of `ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalAverageTable {
    pub d: usize,
    pub rho_grid: Vec<f64>,
    pub sigma_values: Vec<Complex64>,
    pub sigma_abs_values: Vec<f64>,
    pub quadrature: SigmaQuadrature,
}

impl SphericalAverageTable {
    pub fn to_csv(&self) -> String {
        let mut out = match self.quadrature {
            SigmaQuadrature::Continuous(p) => format!(
                "# d={} quadrature=continuous angular_nodes={} freq_cutoff={} step={}\n",
                self.d, p.angular_nodes, p.freq_cutoff, p.step
            ),
            SigmaQuadrature::Lattice { n } => format!("# d={} quadrature=lattice N={n}\n", self.d),
        };
        out.push_str("rho,sigma_re,sigma_im,sigma_abs\n");
        for i in 0..self.rho_grid.len() {
            let s = self.sigma_values[i];
            out.push_str(&format!("{:e},{:e},{:e},{:e}\n", self.rho_grid[i], s.re, s.im, self.sigma_abs_values[i]));
        }
        out
    }
}

/// Continuous table over `rho_grid` (increasing, positive).
pub fn spherical_table(mu: &dyn FourierHandle, rho_grid: &[f64], p: &SigmaParams) -> Result<SphericalAverageTable> {
    if rho_grid.is_empty() || rho_grid.windows(2).any(|w| w[1] <= w[0]) || rho_grid[0] < 0.0 {
        return Err(invalid("rho_grid", "must be nonempty, nonnegative and increasing"));
    }
    let pairs = rho_grid
        .iter()
        .map(|&rho| sigma_pair(mu, rho, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(SphericalAverageTable {
        d: mu.dim(),
        rho_grid: rho_grid.to_vec(),
        sigma_values: pairs.iter().map(|p| p.0).collect(),
        sigma_abs_values: pairs.iter().map(|p| p.1).collect(),
        quadrature: SigmaQuadrature::Continuous(*p),
    })
}

/// Coefficients below this fraction of `max |f̂|` are rounding noise of the
/// forward transform and are left out of [`triple_spectrum`].
pub const SUPPORT_FLOOR: f64 = 1e-14;

/// `Â(ζ) = Σ_c f̂(ζ+c) f̂(-ζ-2c) f̂(c)`, the transform of
/// `A(u) = N^{-d} Σ_x f(x) f(x-u) f(x-2u)`, in FFT order.
/// The sum runs over the numerical support of `f̂`.
pub fn triple_spectrum(f: &GridDensity) -> Vec<Complex64> {
    let s = dual_transform(f);
    let (d, n) = (f.d(), f.n());
    let coeffs = s.coeffs();
    let coords = |i: usize| -> [usize; 3] {
        let mut c = [0usize; 3];
        c[..d].copy_from_slice(&coords_of(d, n, i));
        c
    };
    let floor = SUPPORT_FLOOR * coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let support: Vec<([usize; 3], Complex64)> = (0..s.len())
        .filter(|&c| coeffs[c].norm() > floor)
        .map(|c| (coords(c), coeffs[c]))
        .collect();
    (0..s.len())
        .into_par_iter()
        .map(|z| {
            let cz = coords(z);
            let terms: Vec<Complex64> = support
                .iter()
                .map(|(cc, fc)| {
                    let (mut a, mut b) = (0usize, 0usize);
                    for k in 0..d {
                        a = a * n + (cz[k] + cc[k]) % n;
                        b = b * n + (3 * n - cz[k] - 2 * cc[k]) % n;
                    }
                    coeffs[a] * coeffs[b] * fc
                })
                .collect();
            pairwise_sum_c(&terms)
        })
        .collect()
}

/// Lattice table of a band-limited torus density: shell sums of `Â(ζ)` over
/// centered `ζ` grouped by `|ζ|²`, indexed by `ρ = |ζ|/2`. The first entry
/// is `ρ = 0`.
pub fn torus_sigma_table(f: &GridDensity) -> Result<SphericalAverageTable> {
    let (d, n) = (f.d(), f.n());
    let a_hat = triple_spectrum(f);
    let mut shells: std::collections::BTreeMap<i64, (Vec<Complex64>, Vec<f64>)> = Default::default();
    for (i, &a) in a_hat.iter().enumerate() {
        let z = centered_coords(d, n, i);
        let k: i64 = z.iter().map(|c| c * c).sum();
        let e = shells.entry(k).or_default();
        e.0.push(a);
        e.1.push(a.norm());
    }
    let mut rho_grid = Vec::new();
    let mut sigma_values = Vec::new();
    let mut sigma_abs_values = Vec::new();
    for (k, (vals, abs)) in shells {
        rho_grid.push((k as f64).sqrt() / 2.0);
        sigma_values.push(pairwise_sum_c(&vals));
        sigma_abs_values.push(pairwise_sum(&abs));
    }
    Ok(SphericalAverageTable {
        d,
        rho_grid,
        sigma_values,
        sigma_abs_values,
        quadrature: SigmaQuadrature::Lattice { n },
    })
}

/// `C_d = 2π · 2^{d/2+1}`, the constant of the polar identity in the
/// `ρ = |ζ|/2` convention.
pub fn polar_constant(d: usize) -> f64 {
    2.0 * PI * 2f64.powf(d as f64 / 2.0 + 1.0)
}

/// `ρ^{-m} J_m(4π r ρ)` with its limit `(2πr)^m / Γ(m+1)` at `ρ = 0`.
pub fn radial_kernel(d: usize, r: f64, rho: f64) -> f64 {
    let m = order(d);
    if rho == 0.0 {
        return (2.0 * PI * r).powf(m) / gamma_half_integer(m + 1.0);
    }
    let x = 4.0 * PI * r * rho;
    if d == 1 {
        // ρ^{1/2} J_{-1/2}(x) = √(2/(π · 4πr)) cos x.
        return (2.0 / (PI * 4.0 * PI * r)).sqrt() * x.cos();
    }
    rho.powf(-m) * bessel_j(m, x)
}

/// `C_d r^{d/2} ∫ ρ^{d/2} J_m(4π r ρ) σ(ρ) dρ`.
pub fn polar_ap_density(table: &SphericalAverageTable, r: f64, c_d: f64) -> Result<f64> {
    let d = table.d;
    if !(r > 0.0) {
        return Err(invalid("r", "must be positive"));
    }
    let integral = match table.quadrature {
        SigmaQuadrature::Lattice { .. } => {
            // Shell masses: σ(ρ) dρ = σ_shell / (2^d ρ^{d-1}).
            let terms: Vec<f64> = table
                .rho_grid
                .iter()
                .zip(&table.sigma_values)
                .map(|(&rho, s)| radial_kernel(d, r, rho) * s.re / 2f64.powi(d as i32))
                .collect();
            pairwise_sum(&terms)
        }
        SigmaQuadrature::Continuous(_) => {
            let g = &table.rho_grid;
            let max_gap = g.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            if max_gap * r > 1.0 / 16.0 {
                return Err(ApError::Resolution(format!(
                    "rho spacing {max_gap} too coarse for r = {r}: J(4πrρ) needs spacing ≤ 1/(16 r)"
                )));
            }
            let vals: Vec<f64> = g
                .iter()
                .zip(&table.sigma_values)
                .map(|(&rho, s)| rho.powi(d as i32 - 1) * radial_kernel(d, r, rho) * s.re)
                .collect();
            let pieces: Vec<f64> = (1..g.len()).map(|i| 0.5 * (vals[i] + vals[i - 1]) * (g[i] - g[i - 1])).collect();
            pairwise_sum(&pieces)
        }
    };
    Ok(c_d * r.powf(d as f64 / 2.0) * integral)
}

/// `∫_a^b δ(r) dr` per bin by composite Simpson with `panels` panels.
pub fn polar_bin_masses(table: &SphericalAverageTable, edges: &[f64], c_d: f64, panels: usize) -> Result<Vec<f64>> {
    let panels = panels.max(2) & !1;
    edges
        .windows(2)
        .map(|w| {
            let h = (w[1] - w[0]) / panels as f64;
            let mut acc = Vec::with_capacity(panels + 1);
            for i in 0..=panels {
                let r = w[0] + i as f64 * h;
                let v = if r > 0.0 { polar_ap_density(table, r, c_d)? } else { 0.0 };
                let coef = if i == 0 || i == panels {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc.push(coef * v);
            }
            Ok(pairwise_sum(&acc) * h / 3.0)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// 3AP-length measure

/// Histogram of `δ(f)` over step lengths `|u|_T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct APLengthMeasure {
    pub d: usize,
    pub bin_edges: Vec<f64>,
    pub masses: Vec<f64>,
    pub level: Option<u32>,
    pub total_mass: f64,
}

impl APLengthMeasure {
    pub fn bin_centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Mass per unit length in each bin.
    pub fn densities(&self) -> Vec<f64> {
        self.bin_edges.windows(2).zip(&self.masses).map(|(w, m)| m / (w[1] - w[0])).collect()
    }

    /// `𝔇 = r^{-(d-1)/2} · density` at bin centers.
    pub fn rescaled(&self) -> Vec<f64> {
        let e = (self.d as f64 - 1.0) / 2.0;
        self.bin_centers().iter().zip(self.densities()).map(|(r, v)| r.powf(-e) * v).collect()
    }

    /// `L²` norm of [`Self::rescaled`] with bin widths as weights.
    pub fn rescaled_l2(&self) -> f64 {
        let terms: Vec<f64> = self
            .rescaled()
            .iter()
            .zip(self.bin_edges.windows(2))
            .map(|(v, w)| v * v * (w[1] - w[0]))
            .collect();
        pairwise_sum(&terms).sqrt()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# d={} level={} total_mass={:e}\nbin_lo,bin_hi,mass\n",
            self.d,
            self.level.map_or("none".to_string(), |l| l.to_string()),
            self.total_mass
        );
        for (w, m) in self.bin_edges.windows(2).zip(&self.masses) {
            out.push_str(&format!("{:e},{:e},{:e}\n", w[0], w[1], m));
        }
        out
    }
}

/// Torus diameter `√d / 2` in the wraparound metric.
pub fn torus_diameter(d: usize) -> f64 {
    (d as f64).sqrt() / 2.0
}

/// `n_bins` equal bins covering `[0, √d/2]`.
pub fn uniform_edges(d: usize, n_bins: usize) -> Vec<f64> {
    let diam = torus_diameter(d);
    (0..=n_bins).map(|i| diam * i as f64 / n_bins as f64).collect()
}

/// Deposit `f(x) f(x-u) f(x-2u) / N^{2d}` into the bin containing `|u|_T`;
/// a point lying on an interior edge is split evenly between its two bins.
pub fn ap_length_measure(f: &GridDensity, bin_edges: &[f64]) -> Result<APLengthMeasure> {
    if !f.is_nonnegative() {
        return Err(invalid("f", "density must be nonnegative"));
    }
    let (d, n) = (f.d(), f.n());
    let diam = torus_diameter(d);
    if bin_edges.len() < 2 || bin_edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("bins", "edges must be strictly increasing"));
    }
    if bin_edges[0] > 0.0 || *bin_edges.last().expect("nonempty") < diam {
        return Err(invalid("bins", format!("edges must cover [0, {diam}]")));
    }
    let w = per_shift_sums(f, f, f)?;
    let norm = (f.len() as f64).powi(2);
    let nb = bin_edges.len() - 1;
    let mut per_bin: Vec<Vec<f64>> = vec![Vec::new(); nb];
    for (u, &val) in w.iter().enumerate() {
        let r = centered_coords(d, n, u)
            .iter()
            .map(|&c| (c as f64 / n as f64).powi(2))
            .sum::<f64>()
            .sqrt();
        let j = bin_edges.partition_point(|&e| e <= r).saturating_sub(1).min(nb - 1);
        if j > 0 && (r - bin_edges[j]).abs() <= 1e-12 {
            // On an interior edge: the two bins share the point.
            per_bin[j - 1].push(0.5 * val);
            per_bin[j].push(0.5 * val);
        } else {
            per_bin[j].push(val);
        }
    }
    let masses: Vec<f64> = per_bin.iter().map(|b| pairwise_sum(b) / norm).collect();
    let total_mass = pairwise_sum(&masses);
    Ok(APLengthMeasure {
        d,
        bin_edges: bin_edges.to_vec(),
        masses,
        level: None,
        total_mass,
    })
}

/// Ratio of direct to polar (`C_d = 1`) mass over bins inside `[r_lo, r_hi]`.
pub fn calibrate_polar_constant(direct: &APLengthMeasure, table: &SphericalAverageTable, r_lo: f64, r_hi: f64) -> Result<f64> {
    let (idx, edges) = window_bins(&direct.bin_edges, r_lo, r_hi);
    let polar = polar_bin_masses(table, &edges, 1.0, 32)?;
    let num: f64 = idx.iter().map(|&i| direct.masses[i]).sum();
    let den: f64 = polar.iter().sum();
    Ok(num / den)
}

/// Bins fully inside `[lo, hi]` (up to rounding): their indices and edges.
pub fn window_bins(edges: &[f64], lo: f64, hi: f64) -> (Vec<usize>, Vec<f64>) {
    let eps = 1e-12;
    let idx: Vec<usize> = (0..edges.len() - 1)
        .filter(|&i| edges[i] >= lo - eps && edges[i + 1] <= hi + eps)
        .collect();
    let mut e: Vec<f64> = idx.iter().map(|&i| edges[i]).collect();
    if let Some(&last) = idx.last() {
        e.push(edges[last + 1]);
    }
    (idx, e)
}

/// Relative `L¹` gap between direct and polar bin masses on `[lo, hi]`.
pub fn polar_l1_gap(direct: &APLengthMeasure, table: &SphericalAverageTable, c_d: f64, lo: f64, hi: f64) -> Result<f64> {
    let (idx, edges) = window_bins(&direct.bin_edges, lo, hi);
    if idx.is_empty() {
        return Err(invalid("bins", "no bin inside the comparison window"));
    }
    let polar = polar_bin_masses(table, &edges, c_d, 32)?;
    let num: f64 = idx.iter().zip(&polar).map(|(&i, p)| (direct.masses[i] - p).abs()).sum();
    let den: f64 = idx.iter().map(|&i| direct.masses[i].abs()).sum();
    Ok(num / den)
}

// ---------------------------------------------------------------------------
// S + L splitting

/// `√x J_m(x)` with its limit at 0.
fn sqrt_x_j(d: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if d == 1 { (2.0 / PI).sqrt() } else { 0.0 };
    }
    if d == 1 {
        return (2.0 / PI).sqrt() * x.cos();
    }
    x.sqrt() * bessel_j(order(d), x)
}

/// `√x K(x)`, where `K = J - √(2/(πx)) cos(x - φ)`, `φ = π(d-1)/4`.
fn sqrt_x_k(d: usize, x: f64) -> f64 {
    if d == 1 {
        return 0.0;
    }
    sqrt_x_j(d, x) - (2.0 / PI).sqrt() * (x - PI * (d as f64 - 1.0) / 4.0).cos()
}

/// Samples of the length-density apparatus and its splitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SLDecomposition {
    pub d: usize,
    pub s_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    pub frak_s: Vec<f64>,
    /// `𝔖(s) = s^{(d-1)/2} 𝔰(s)`.
    pub frak_big_s: Vec<f64>,
    /// `𝔡(r) = r^{(d-1)/2} 𝔇(r)`.
    pub frak_d: Vec<f64>,
    /// `𝔇(r) = √r ∫ √s J(rs) 𝔖(s) ds`.
    pub frak_big_d: Vec<f64>,
    pub s_part: Vec<f64>,
    pub l_part: Vec<f64>,
    pub k_kernel: Vec<f64>,
    pub norm_s_part: f64,
    pub norm_frak_big_s: f64,
    pub norm_l_part: f64,
    pub s_exponent: f64,
    /// `𝔈_s = ∫ 𝔰(r) r^{s-1} dr`.
    pub energy: f64,
    /// `max_r |𝔇 - S - L| / ‖𝔖‖₁`.
    pub identity_gap: f64,
}

fn uniform_step(grid: &[f64], name: &'static str) -> Result<f64> {
    if grid.len() < 3 {
        return Err(invalid(name, "need at least 3 points"));
    }
    let h = grid[1] - grid[0];
    if !(h > 0.0) || grid.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0)) {
        return Err(invalid(name, "grid must be uniform and increasing"));
    }
    Ok(h)
}

/// Builds `𝔖`, `𝔡`, `𝔇` and the splitting `𝔇 = S + L` on `r_grid`.
///
/// `S(r) = √(2/π) ∫ cos(rs - φ) 𝔖(s) ds` is evaluated as
/// `√(2/π) (cos φ · C(r) + sin φ · Ŝ(r))` from the trapezoidal cosine and sine
/// transforms of `𝔖`; `L(r) = ∫ √(rs) K(rs) 𝔖(s) ds`.
pub fn sl_decompose(s_grid: &[f64], frak_s: &[f64], d: usize, s_exponent: f64, r_grid: &[f64]) -> Result<SLDecomposition> {
    if !(1..=3).contains(&d) {
        return Err(invalid("d", "must be 1, 2 or 3"));
    }
    if frak_s.len() != s_grid.len() {
        return Err(invalid("frak_s", "one sample per grid point"));
    }
    if frak_s.iter().any(|&v| !(v >= 0.0)) {
        return Err(invalid("frak_s", "samples must be nonnegative"));
    }
    let h = uniform_step(s_grid, "s_grid")?;
    if s_grid[0] < 0.0 || r_grid.iter().any(|&r| !(r >= 0.0)) {
        return Err(invalid("r_grid", "grids must be nonnegative"));
    }
    let half = (d as f64 - 1.0) / 2.0;
    let phi = PI * (d as f64 - 1.0) / 4.0;
    let big_s: Vec<f64> = s_grid.iter().zip(frak_s).map(|(&s, &v)| s.powf(half) * v).collect();
    let l1 = trapezoid(&big_s.iter().map(|v| v.abs()).collect::<Vec<_>>(), h);
    let rows: Vec<(f64, f64, f64, f64)> = r_grid
        .par_iter()
        .map(|&r| {
            let j: Vec<f64> = s_grid.iter().zip(&big_s).map(|(&s, &v)| sqrt_x_j(d, r * s) * v).collect();
            let k: Vec<f64> = s_grid.iter().zip(&big_s).map(|(&s, &v)| sqrt_x_k(d, r * s) * v).collect();
            let c: Vec<f64> = s_grid.iter().zip(&big_s).map(|(&s, &v)| (r * s).cos() * v).collect();
            let sn: Vec<f64> = s_grid.iter().zip(&big_s).map(|(&s, &v)| (r * s).sin() * v).collect();
            let s_part = (2.0 / PI).sqrt() * (phi.cos() * trapezoid(&c, h) + phi.sin() * trapezoid(&sn, h));
            let kernel = if r == 0.0 { f64::NAN } else { bessel::bessel_kernel(d, r).1 };
            (trapezoid(&j, h), s_part, trapezoid(&k, h), kernel)
        })
        .collect();
    let frak_big_d: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let s_part: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let l_part: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let k_kernel: Vec<f64> = rows.iter().map(|r| r.3).collect();
    let frak_d: Vec<f64> = r_grid.iter().zip(&frak_big_d).map(|(&r, &v)| r.powf(half) * v).collect();
    let identity_gap = rows
        .iter()
        .map(|(dd, s, l, _)| (dd - s - l).abs())
        .fold(0.0, f64::max)
        / l1.max(f64::MIN_POSITIVE);
    let l2 = |v: &[f64], grid: &[f64]| -> f64 {
        let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
        let pieces: Vec<f64> = (1..grid.len()).map(|i| 0.5 * (sq[i] + sq[i - 1]) * (grid[i] - grid[i - 1])).collect();
        pairwise_sum(&pieces).sqrt()
    };
    let energy_terms: Vec<f64> = s_grid
        .iter()
        .zip(frak_s)
        .map(|(&s, &v)| if s > 0.0 { v * s.powf(s_exponent - 1.0) } else { 0.0 })
        .collect();
    let out = SLDecomposition {
        d,
        s_grid: s_grid.to_vec(),
        r_grid: r_grid.to_vec(),
        frak_s: frak_s.to_vec(),
        norm_frak_big_s: l2(&big_s, s_grid),
        norm_s_part: l2(&s_part, r_grid),
        norm_l_part: l2(&l_part, r_grid),
        frak_big_s: big_s,
        frak_d,
        frak_big_d,
        s_part,
        l_part,
        k_kernel,
        s_exponent,
        energy: trapezoid(&energy_terms, h),
        identity_gap,
    };
    if out.identity_gap > SL_IDENTITY_REL {
        return Err(ApError::NonConverged {
            coarse: out.identity_gap,
            fine: SL_IDENTITY_REL,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Weighted integral of Σ

/// `∫ r^{d-1-ρ} Σ(μ)(r) dr` over the table by the trapezoidal rule, with
/// `ρ ∈ (d(1-1/q), d)`. The last dyadic block `[2^j, 2^{j+1})` of the range
/// must contribute at most `TAIL_BLOCK_SHARE` of the total.
pub fn weighted_sigma_integral(table: &SphericalAverageTable, rho_exponent: f64, d: usize, q: f64) -> Result<f64> {
    let lo = d as f64 * (1.0 - 1.0 / q);
    if !(rho_exponent > lo && rho_exponent < d as f64) {
        return Err(invalid("rho_exponent", format!("{rho_exponent} not in ({lo}, {d})")));
    }
    let g = &table.rho_grid;
    if g.len() < 2 || g[0] <= 0.0 {
        return Err(invalid("table", "need at least two positive radii"));
    }
    let w = |i: usize| g[i].powf(d as f64 - 1.0 - rho_exponent) * table.sigma_abs_values[i];
    let pieces: Vec<(f64, f64)> = (1..g.len()).map(|i| (g[i - 1], 0.5 * (w(i) + w(i - 1)) * (g[i] - g[i - 1]))).collect();
    let total = pairwise_sum(&pieces.iter().map(|p| p.1).collect::<Vec<_>>());
    if total == 0.0 {
        return Ok(0.0);
    }
    let r_max = *g.last().expect("nonempty");
    if r_max >= 2.0 {
        let start = 2f64.powi((r_max.log2().floor() as i32) - 1);
        let block: f64 = pieces.iter().filter(|p| p.0 >= start && p.0 < 2.0 * start).map(|p| p.1).sum();
        if block > TAIL_BLOCK_SHARE * total {
            return Err(ApError::DivergentTail(format!(
                "block [{start}, {}) carries {:.3} of the integral",
                2.0 * start,
                block / total
            )));
        }
    }
    Ok(total)
}

/// Fitted decay exponent `-slope` of `Σ(r)` in log-log coordinates.
pub fn sigma_decay_exponent(table: &SphericalAverageTable) -> Option<f64> {
    loglog_slope(&table.rho_grid, &table.sigma_abs_values).map(|f| -f.slope)
}

// ---------------------------------------------------------------------------
// Spherical versus annular averages

/// `∫_{S^{d-1}} F(rθ) dσ(θ)` with `nodes` uniform angles (`d = 2`) or the
/// two-point sphere (`d = 1`).
pub fn spherical_integral(f: &dyn Fn(&[f64]) -> f64, d: usize, r: f64, nodes: usize) -> f64 {
    sphere_nodes(d, nodes)
        .iter()
        .map(|(theta, w)| {
            let x: Vec<f64> = theta.iter().map(|t| r * t).collect();
            f(&x) * w
        })
        .sum()
}

/// `∫_{||x| - r| < w} F(x) dx` in polar coordinates (`radial` midpoint
/// panels, `nodes` angles).
pub fn annular_integral(f: &dyn Fn(&[f64]) -> f64, d: usize, r: f64, w: f64, radial: usize, nodes: usize) -> f64 {
    let lo = (r - w).max(0.0);
    let hi = r + w;
    let h = (hi - lo) / radial as f64;
    (0..radial)
        .map(|i| {
            let t = lo + (i as f64 + 0.5) * h;
            t.powi(d as i32 - 1) * spherical_integral(f, d, t, nodes) * h
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_fourier::lambda3_direct;

    #[test]
    fn lebesgue_mollifies_to_one() {
        let mu = SelfSimilarMeasure::lebesgue(1, 3);
        // Lattice coefficients of Lebesgue vanish off 0, up to the depth tail.
        let g = mollify(&LebesgueCube { d: 1 }, 4, 64).unwrap();
        assert!(g.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let g = mollify(&mu, 4, 64).unwrap();
        assert!(g.values().iter().all(|v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn mollify_rejects_excess_band() {
        let mu = SelfSimilarMeasure::middle_thirds(1);
        assert!(matches!(mollify(&mu, 6, 64), Err(ApError::Resolution(_))));
        let g = crate::constructions::discretize(&mu, 81, 4).unwrap();
        let gm = GridMeasure::new(g.clone());
        assert_eq!(mollify(&gm, 6, 81).unwrap(), g);
    }

    #[test]
    fn mollified_cantor_has_unit_mass() {
        let mu = SelfSimilarMeasure::middle_thirds(1);
        for n in 2..7 {
            let g = mollify(&mu, n, 256).unwrap();
            assert!(g.values().iter().all(|&v| v > -1e-12), "level {n}");
            assert!((g.mean() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn energy_of_lebesgue_converges_to_one() {
        let rep = energy(&LebesgueCube { d: 1 }, 0.5, 256.0).unwrap();
        assert!((rep.value - 1.0).abs() < 1e-12);
        assert_eq!(rep.growth_exponent, 0.0);
        assert!(rep.partial_sums.windows(2).all(|w| w[1].1 >= w[0].1));
    }

    #[test]
    fn decay_constant_beta_zero_is_sup() {
        let mu = SelfSimilarMeasure::middle_thirds(1);
        assert!((decay_constant(&mu, 0.0, 64.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_weights_sum_to_area() {
        let w1: f64 = sphere_nodes(1, 0).iter().map(|p| p.1).sum();
        let w2: f64 = sphere_nodes(2, 32).iter().map(|p| p.1).sum();
        assert_eq!(w1, 2.0);
        assert!((w2 - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn ap_length_uniform_d1() {
        let f = GridDensity::constant(1, 64, 1.0).unwrap();
        let edges = uniform_edges(1, 8);
        let m = ap_length_measure(&f, &edges).unwrap();
        for &mass in &m.masses[1..7] {
            assert!((mass - 2.0 / 16.0).abs() < 0.02, "{mass}");
        }
        assert!((m.total_mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ap_length_point_mass() {
        let f = GridDensity::point_mass(1, 32).unwrap();
        let m = ap_length_measure(&f, &uniform_edges(1, 4)).unwrap();
        assert!(m.masses[1..].iter().all(|&v| v == 0.0));
        let l3 = lambda3_direct(&f, &f, &f).unwrap();
        assert!((m.masses[0] - l3).abs() <= 1e-12 * l3);
    }

    #[test]
    fn ap_length_rejects_short_bins() {
        let f = GridDensity::constant(2, 8, 1.0).unwrap();
        assert!(ap_length_measure(&f, &[0.0, 0.5]).is_err());
        assert!(ap_length_measure(&f, &uniform_edges(2, 4)).is_ok());
    }

    #[test]
    fn polar_uniform_density() {
        for d in 1..=2 {
            let f = GridDensity::constant(d, 16, 1.0).unwrap();
            let t = torus_sigma_table(&f).unwrap();
            let c = polar_constant(d);
            for r in [0.1f64, 0.2, 0.4] {
                let expect = bessel::sphere_fourier(d, 0.0) * r.powi(d as i32 - 1);
                let got = polar_ap_density(&t, r, c).unwrap();
                assert!((got - expect).abs() < 1e-9 * expect, "d = {d}, r = {r}: {got} vs {expect}");
            }
        }
    }

    #[test]
    fn zero_table_gives_zero() {
        let t = SphericalAverageTable {
            d: 2,
            rho_grid: vec![0.1, 0.2, 0.3],
            sigma_values: vec![Complex64::new(0.0, 0.0); 3],
            sigma_abs_values: vec![0.0; 3],
            quadrature: SigmaQuadrature::Continuous(SigmaParams {
                angular_nodes: 8,
                freq_cutoff: 1.0,
                step: 0.1,
            }),
        };
        assert_eq!(polar_ap_density(&t, 0.2, 1.0).unwrap(), 0.0);
        assert_eq!(weighted_sigma_integral(&t, 1.5, 2, 2.5).unwrap(), 0.0);
        assert!(matches!(polar_ap_density(&t, 2.0, 1.0), Err(ApError::Resolution(_))));
    }

    #[test]
    fn sl_identity_d1_exact() {
        let s: Vec<f64> = (0..401).map(|i| i as f64 * 0.01).collect();
        let bump: Vec<f64> = s.iter().map(|&x| if x < 4.0 { (x * (4.0 - x)).powi(2) } else { 0.0 }).collect();
        let r: Vec<f64> = (0..200).map(|i| i as f64 * 0.1).collect();
        let out = sl_decompose(&s, &bump, 1, 0.75, &r).unwrap();
        assert!(out.l_part.iter().all(|&v| v == 0.0));
        for (a, b) in out.frak_big_d.iter().zip(&out.s_part) {
            assert!((a - b).abs() <= 1e-12 * out.norm_frak_big_s.max(1.0));
        }
    }

    #[test]
    fn sl_rejects_negative() {
        let s = [0.0, 0.1, 0.2];
        assert!(sl_decompose(&s, &[1.0, -1.0, 0.0], 2, 1.0, &[1.0]).is_err());
    }
}
