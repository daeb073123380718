//! Densities on the grid `Z_N^d`, their normalized Fourier transforms, and
//! the 3AP counting functional.
//!
//! Conventions used throughout the crate:
//!
//! * averages use the normalized counting measure, so a density `f` has
//!   `‖f‖₁ = N^{-d} Σ_x |f(x)|`;
//! * `f̂(ξ) = N^{-d} Σ_x f(x) e^{-2πi ξ·x/N}`, so `f̂(0)` is the mass;
//! * frequencies are stored in FFT order and reported through centered
//!   representatives `{-⌊N/2⌋, …, ⌈N/2⌉-1}`;
//! * grid points are stored row-major, the last axis contiguous.
//!
//! All reductions are sequential or pairwise in index order, so every
//! result is reproducible bit for bit.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, ApError, Result};
use crate::numeric::{gcd, next_prime, pairwise_sum, pairwise_sum_c};

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;

fn check_shape(d: usize, n: usize, len: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        return Err(ApError::InvalidShape(format!("d = {d} outside 1..={MAX_DIM}")));
    }
    if n == 0 {
        return Err(ApError::InvalidShape("N = 0".into()));
    }
    let expected = n
        .checked_pow(d as u32)
        .ok_or_else(|| ApError::InvalidShape(format!("N^d overflows for N = {n}, d = {d}")))?;
    if len != expected {
        return Err(ApError::InvalidShape(format!(
            "payload has {len} entries, expected N^d = {expected}"
        )));
    }
    Ok(())
}

/// Shape of a grid padded to three axes: unused leading axes have size 1.
fn shape3(d: usize, n: usize) -> [usize; 3] {
    match d {
        1 => [1, 1, n],
        2 => [1, n, n],
        _ => [n, n, n],
    }
}

/// Coordinates of a linear index, `d` entries.
pub fn coords_of(d: usize, n: usize, mut idx: usize) -> Vec<usize> {
    let mut c = vec![0; d];
    for k in (0..d).rev() {
        c[k] = idx % n;
        idx /= n;
    }
    c
}

/// Linear index of coordinates reduced mod `n`.
pub fn index_of(n: usize, coords: &[i64]) -> usize {
    let ni = n as i64;
    coords
        .iter()
        .fold(0usize, |acc, &c| acc * n + c.rem_euclid(ni) as usize)
}

/// Centered representative of a residue: `{-⌊N/2⌋, …, ⌈N/2⌉-1}`.
pub fn centered(k: usize, n: usize) -> i64 {
    let k = k as i64;
    let n = n as i64;
    if k >= n - n / 2 {
        k - n
    } else {
        k
    }
}

/// Centered coordinates of a linear frequency index.
pub fn centered_coords(d: usize, n: usize, idx: usize) -> Vec<i64> {
    coords_of(d, n, idx)
        .into_iter()
        .map(|c| centered(c, n))
        .collect()
}

/// Nonnegative (or signed, where an operation allows it) density on `Z_N^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    d: usize,
    n: usize,
    values: Vec<f64>,
}

impl GridDensity {
    pub fn new(d: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        check_shape(d, n, values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid("values", format!("entry {i} is not finite")));
        }
        Ok(Self { d, n, values })
    }

    pub fn from_fn(d: usize, n: usize, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        check_shape(d, n, n.pow(d as u32))?;
        let values = (0..n.pow(d as u32))
            .map(|i| f(&coords_of(d, n, i)))
            .collect();
        Self::new(d, n, values)
    }

    pub fn constant(d: usize, n: usize, c: f64) -> Result<Self> {
        Self::new(d, n, vec![c; n.pow(d as u32)])
    }

    /// `N^d · 1_{0}`: unit mass concentrated at the origin.
    pub fn point_mass(d: usize, n: usize) -> Result<Self> {
        let len = n.pow(d as u32);
        let mut v = vec![0.0; len];
        v[0] = len as f64;
        Self::new(d, n, v)
    }

    /// Indicator of a set of residues in `Z_N` (d = 1).
    pub fn indicator(n: usize, elements: &[usize]) -> Result<Self> {
        let mut v = vec![0.0; n];
        for &e in elements {
            if e >= n {
                return Err(invalid("elements", format!("{e} not in [0, {n})")));
            }
            v[e] = 1.0;
        }
        Self::new(1, n, v)
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Normalized sum `N^{-d} Σ f(x)`.
    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.len() as f64
    }

    /// `N^{-d} Σ |f(x)|`.
    pub fn l1_norm(&self) -> f64 {
        let a: Vec<f64> = self.values.iter().map(|v| v.abs()).collect();
        pairwise_sum(&a) / self.len() as f64
    }

    /// `(N^{-d} Σ |f(x)|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        let a: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        (pairwise_sum(&a) / self.len() as f64).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    pub fn same_shape(&self, other: &Self) -> Result<()> {
        if self.d != other.d || self.n != other.n {
            return Err(ApError::ShapeMismatch {
                expected_d: self.d,
                expected_n: self.n,
                got_d: other.d,
                got_n: other.n,
            });
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            d: self.d,
            n: self.n,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Self { d: self.d, n: self.n, values })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Self { d: self.d, n: self.n, values })
    }

    /// `x ↦ f(x + t)`.
    pub fn translated(&self, t: &[i64]) -> Result<Self> {
        if t.len() != self.d {
            return Err(invalid("t", format!("expected {} coordinates", self.d)));
        }
        let values = (0..self.len())
            .map(|i| {
                let c: Vec<i64> = coords_of(self.d, self.n, i)
                    .iter()
                    .zip(t)
                    .map(|(&a, &b)| a as i64 + b)
                    .collect();
                self.values[index_of(self.n, &c)]
            })
            .collect();
        Ok(Self { d: self.d, n: self.n, values })
    }

    /// `x ↦ f(-x)`.
    pub fn reflected(&self) -> Self {
        let values = (0..self.len())
            .map(|i| {
                let c: Vec<i64> = coords_of(self.d, self.n, i).iter().map(|&a| -(a as i64)).collect();
                self.values[index_of(self.n, &c)]
            })
            .collect();
        Self { d: self.d, n: self.n, values }
    }
}

/// Where a spectrum came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Forward,
    Synthetic,
}

/// Complex coefficients on the dual grid, stored in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    d: usize,
    n: usize,
    coeffs: Vec<Complex64>,
    provenance: Provenance,
}

impl Spectrum {
    pub fn new(d: usize, n: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        check_shape(d, n, coeffs.len())?;
        Ok(Self {
            d,
            n,
            coeffs,
            provenance: Provenance::Synthetic,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }
    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Coefficient at an integer frequency, reduced mod `N`.
    pub fn at(&self, xi: &[i64]) -> Complex64 {
        self.coeffs[index_of(self.n, xi)]
    }

    /// Pointwise product with a real multiplier indexed by centered frequency.
    pub fn multiplied(&self, mut w: impl FnMut(&[i64]) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * w(&centered_coords(self.d, self.n, i)))
            .collect();
        Self {
            d: self.d,
            n: self.n,
            coeffs,
            provenance: Provenance::Synthetic,
        }
    }

    pub fn same_shape(&self, other: &Self) -> Result<()> {
        if self.d != other.d || self.n != other.n {
            return Err(ApError::ShapeMismatch {
                expected_d: self.d,
                expected_n: self.n,
                got_d: other.d,
                got_n: other.n,
            });
        }
        Ok(())
    }
}

/// In-place multidimensional FFT along every axis.
fn fft_nd(data: &mut [Complex64], d: usize, n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let len = data.len();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        let block = stride * n;
        for start in (0..len).step_by(block) {
            for off in 0..stride {
                let base = start + off;
                for k in 0..n {
                    buf[k] = data[base + k * stride];
                }
                fft.process(&mut buf);
                for k in 0..n {
                    data[base + k * stride] = buf[k];
                }
            }
        }
    }
}

/// `f̂(ξ) = N^{-d} Σ_x f(x) e^{-2πi ξ·x/N}`.
pub fn dual_transform(f: &GridDensity) -> Spectrum {
    let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut data, f.d, f.n, false);
    let scale = 1.0 / f.len() as f64;
    for c in &mut data {
        *c *= scale;
    }
    Spectrum {
        d: f.d,
        n: f.n,
        coeffs: data,
        provenance: Provenance::Forward,
    }
}

/// Complex inverse: `f(x) = Σ_ξ F(ξ) e^{2πi ξ·x/N}`.
pub fn inverse_transform_complex(spec: &Spectrum) -> Vec<Complex64> {
    let mut data = spec.coeffs.clone();
    fft_nd(&mut data, spec.d, spec.n, true);
    data
}

/// Real part of the inverse transform.
pub fn inverse_transform(spec: &Spectrum) -> GridDensity {
    let values = inverse_transform_complex(spec).into_iter().map(|c| c.re).collect();
    GridDensity {
        d: spec.d,
        n: spec.n,
        values,
    }
}

fn shared_shape(fs: &[&GridDensity]) -> Result<(usize, usize)> {
    let first = fs[0];
    for f in &fs[1..] {
        first.same_shape(f)?;
    }
    Ok((first.d, first.n))
}

/// Wrap tables: `table[x] = (x - s) mod n`.
fn shift_table(n: usize, s: usize) -> Vec<usize> {
    (0..n).map(|x| (x + n - s % n) % n).collect()
}

/// Every last-axis row written twice, so that a cyclic shift of a row is a
/// contiguous slice.
fn doubled_rows(values: &[f64], n2: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * values.len());
    for row in values.chunks(n2) {
        out.extend_from_slice(row);
        out.extend_from_slice(row);
    }
    out
}

/// `Σ_x f0(x) f1(x-r) f2(x-2r)` for every shift `r`, in index order.
pub(crate) fn per_shift_sums(f0: &GridDensity, f1: &GridDensity, f2: &GridDensity) -> Result<Vec<f64>> {
    let (d, n) = shared_shape(&[f0, f1, f2])?;
    let [n0, n1, n2] = shape3(d, n);
    let g1 = doubled_rows(&f1.values, n2);
    let g2 = doubled_rows(&f2.values, n2);
    Ok((0..f0.len())
        .into_par_iter()
        .map(|r| {
            let (r0, rem) = (r / (n1 * n2), r % (n1 * n2));
            let (r1, r2) = (rem / n2, rem % n2);
            let a0 = shift_table(n0, r0);
            let b0 = shift_table(n0, 2 * r0);
            let a1 = shift_table(n1, r1);
            let b1 = shift_table(n1, 2 * r1);
            let off_a = n2 - r2;
            let off_b = n2 - (2 * r2) % n2;
            let mut rows = Vec::with_capacity(n0 * n1);
            for x0 in 0..n0 {
                for x1 in 0..n1 {
                    let row = &f0.values[(x0 * n1 + x1) * n2..][..n2];
                    let ra = &g1[2 * n2 * (a0[x0] * n1 + a1[x1]) + off_a..][..n2];
                    let rb = &g2[2 * n2 * (b0[x0] * n1 + b1[x1]) + off_b..][..n2];
                    rows.push(row.iter().zip(ra).zip(rb).map(|((p, q), s)| p * q * s).sum::<f64>());
                }
            }
            pairwise_sum(&rows)
        })
        .collect())
}

/// Reference oracle `N^{-2d} Σ_{x,r} f0(x) f1(x-r) f2(x-2r)`, `O(N^{2d})`.
pub fn lambda3_direct(f0: &GridDensity, f1: &GridDensity, f2: &GridDensity) -> Result<f64> {
    let per_r = per_shift_sums(f0, f1, f2)?;
    let len = f0.len() as f64;
    Ok(pairwise_sum(&per_r) / (len * len))
}

/// Linear index of `-2ξ` for every `ξ`.
fn neg_two_table(d: usize, n: usize) -> Vec<usize> {
    (0..n.pow(d as u32))
        .map(|i| {
            let c: Vec<i64> = coords_of(d, n, i).iter().map(|&a| -2 * a as i64).collect();
            index_of(n, &c)
        })
        .collect()
}

/// `Σ_ξ F0(ξ) F1(-2ξ) F2(ξ)` on precomputed spectra.
pub fn lambda3_from_spectra(s0: &Spectrum, s1: &Spectrum, s2: &Spectrum) -> Result<Complex64> {
    s0.same_shape(s1)?;
    s0.same_shape(s2)?;
    let neg2 = neg_two_table(s0.d, s0.n);
    let terms: Vec<Complex64> = (0..s0.len())
        .map(|i| s0.coeffs[i] * s1.coeffs[neg2[i]] * s2.coeffs[i])
        .collect();
    Ok(pairwise_sum_c(&terms))
}

/// Spectral form of `Λ₃`: `Σ_ξ f̂0(ξ) f̂1(-2ξ) f̂2(ξ)`, which reduces to
/// `Σ_ξ f̂(ξ)² f̂(-2ξ)` when the three densities coincide.
pub fn lambda3_spectral(f0: &GridDensity, f1: &GridDensity, f2: &GridDensity) -> Result<f64> {
    shared_shape(&[f0, f1, f2])?;
    let s0 = dual_transform(f0);
    let s1 = dual_transform(f1);
    let s2 = dual_transform(f2);
    Ok(lambda3_from_spectra(&s0, &s1, &s2)?.re)
}

/// `(Σ_ξ |F(ξ)|^q)^{1/q}`, optionally without `ξ = 0`.
pub fn lq_norm(spec: &Spectrum, q: f64, exclude_zero: bool) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(invalid("q", format!("{q} < 1")));
    }
    let skip = usize::from(exclude_zero);
    let terms: Vec<f64> = spec.coeffs[skip..].iter().map(|c| c.norm().powf(q)).collect();
    Ok(pairwise_sum(&terms).powf(1.0 / q))
}

/// `(Σ_ξ |f̂(ξ)|⁴)^{1/4}`.
pub fn u2_norm(f: &GridDensity) -> f64 {
    let s = dual_transform(f);
    let terms: Vec<f64> = s.coeffs.iter().map(|c| c.norm_sqr() * c.norm_sqr()).collect();
    pairwise_sum(&terms).powf(0.25)
}

/// `Λ₃` share of trivial progressions for `μ = 1_E/δ`: `δ^{-2} N^{-1}`.
pub fn trivial_ap_contribution(set_size: usize, n: usize) -> Result<f64> {
    if set_size == 0 {
        return Err(invalid("set_size", "must be positive"));
    }
    if set_size > n {
        return Err(invalid("set_size", format!("{set_size} > N = {n}")));
    }
    let delta = set_size as f64 / n as f64;
    Ok(1.0 / (delta * delta * n as f64))
}

/// Embed `E ⊂ [N]` into `Z_{N'}` with `N'` the smallest prime `≥ 2N+1`, so
/// that no wraparound progression of `Z_{N'}` comes from outside `[N]`.
pub fn embed_prime(n: usize, elements: &[usize]) -> Result<GridDensity> {
    GridDensity::indicator(next_prime(2 * n + 1), elements)
}

/// Pair of integer matrices `(M1, M2)` describing the configuration
/// `(x, x - M1 u, x - M2 u)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigurationMatrices {
    d: usize,
    m1: Vec<i64>,
    m2: Vec<i64>,
}

/// Determinant of a small row-major integer matrix.
pub fn det(d: usize, m: &[i64]) -> i64 {
    match d {
        1 => m[0],
        2 => m[0] * m[3] - m[1] * m[2],
        3 => {
            m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
                + m[2] * (m[3] * m[7] - m[4] * m[6])
        }
        _ => unreachable!("dimension checked at construction"),
    }
}

impl ConfigurationMatrices {
    pub fn new(d: usize, m1: Vec<i64>, m2: Vec<i64>) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return Err(ApError::InvalidShape(format!("d = {d} outside 1..={MAX_DIM}")));
        }
        if m1.len() != d * d || m2.len() != d * d {
            return Err(invalid("mats", format!("expected {d}x{d} entries")));
        }
        let diff: Vec<i64> = m2.iter().zip(&m1).map(|(a, b)| a - b).collect();
        for (name, m) in [("M1", &m1), ("M2", &m2), ("M2 - M1", &diff)] {
            let dt = det(d, m);
            if dt == 0 {
                return Err(ApError::SingularMatrix { name, det: 0, modulus: 0 });
            }
        }
        Ok(Self { d, m1, m2 })
    }

    /// `M1 = I`, `M2 = 2I`: the 3AP configuration.
    pub fn three_ap(d: usize) -> Self {
        let mut m1 = vec![0; d * d];
        let mut m2 = vec![0; d * d];
        for i in 0..d {
            m1[i * d + i] = 1;
            m2[i * d + i] = 2;
        }
        Self { d, m1, m2 }
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn m1(&self) -> &[i64] {
        &self.m1
    }
    pub fn m2(&self) -> &[i64] {
        &self.m2
    }

    /// Whether both `u ↦ M1 u` and `u ↦ M2 u` are bijections of `Z_N^d`.
    pub fn bijective_mod(&self, n: usize) -> bool {
        gcd(det(self.d, &self.m1), n as i64) == 1 && gcd(det(self.d, &self.m2), n as i64) == 1
    }
}

fn mat_vec(d: usize, m: &[i64], v: &[i64]) -> Vec<i64> {
    (0..d).map(|i| (0..d).map(|j| m[i * d + j] * v[j]).sum()).collect()
}

fn mat_t_vec(d: usize, m: &[i64], v: &[i64]) -> Vec<i64> {
    (0..d).map(|i| (0..d).map(|j| m[j * d + i] * v[j]).sum()).collect()
}

/// Both evaluations of the weighted configuration count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfigurationCount {
    /// `N^{-2d} Σ_{x,u} g(u) f0(x) f1(x - M1 u) f2(x - M2 u)`.
    pub spatial: f64,
    /// `Σ_{ξ1,ξ2} f̂0(-ξ1-ξ2) f̂1(ξ1) f̂2(ξ2) ĝ(M1ᵀξ1 + M2ᵀξ2)`.
    pub dual: Complex64,
    pub bijective_mod_n: bool,
}

impl ConfigurationCount {
    pub fn relative_gap(&self) -> f64 {
        (self.dual - self.spatial).norm() / self.spatial.abs().max(1.0)
    }
}

/// Weighted count of `(x, x - M1 u, x - M2 u)` configurations, evaluated on
/// the physical side and on the dual side.
///
/// The dual identity needs no matrix inverses, so it holds on `Z_N^d` even
/// when the matrices are not invertible mod `N`; that case is reported
/// through `bijective_mod_n`.
pub fn configuration_count(
    f0: &GridDensity,
    f1: &GridDensity,
    f2: &GridDensity,
    mats: &ConfigurationMatrices,
    weight: &GridDensity,
) -> Result<ConfigurationCount> {
    let (d, n) = shared_shape(&[f0, f1, f2, weight])?;
    if mats.d != d {
        return Err(invalid("mats", format!("dimension {} != {d}", mats.d)));
    }
    let len = f0.len();
    let mut per_u = Vec::with_capacity(len);
    for u in 0..len {
        let uc: Vec<i64> = coords_of(d, n, u).into_iter().map(|c| c as i64).collect();
        let a = mat_vec(d, &mats.m1, &uc);
        let b = mat_vec(d, &mats.m2, &uc);
        let mut s = 0.0;
        for x in 0..len {
            let xc: Vec<i64> = coords_of(d, n, x).into_iter().map(|c| c as i64).collect();
            let xa: Vec<i64> = xc.iter().zip(&a).map(|(p, q)| p - q).collect();
            let xb: Vec<i64> = xc.iter().zip(&b).map(|(p, q)| p - q).collect();
            s += f0.values[x] * f1.values[index_of(n, &xa)] * f2.values[index_of(n, &xb)];
        }
        per_u.push(weight.values[u] * s);
    }
    let spatial = pairwise_sum(&per_u) / (len as f64 * len as f64);

    let (s0, s1, s2, sg) = (
        dual_transform(f0),
        dual_transform(f1),
        dual_transform(f2),
        dual_transform(weight),
    );
    let mut per_xi1 = Vec::with_capacity(len);
    for i1 in 0..len {
        let x1: Vec<i64> = coords_of(d, n, i1).into_iter().map(|c| c as i64).collect();
        let t1 = mat_t_vec(d, &mats.m1, &x1);
        let mut terms = Vec::with_capacity(len);
        for i2 in 0..len {
            let x2: Vec<i64> = coords_of(d, n, i2).into_iter().map(|c| c as i64).collect();
            let t2 = mat_t_vec(d, &mats.m2, &x2);
            let g_arg: Vec<i64> = t1.iter().zip(&t2).map(|(p, q)| p + q).collect();
            let f0_arg: Vec<i64> = x1.iter().zip(&x2).map(|(p, q)| -p - q).collect();
            terms.push(s0.at(&f0_arg) * s1.coeffs[i1] * s2.coeffs[i2] * sg.at(&g_arg));
        }
        per_xi1.push(pairwise_sum_c(&terms));
    }
    Ok(ConfigurationCount {
        spatial,
        dual: pairwise_sum_c(&per_xi1),
        bijective_mod_n: mats.bijective_mod(n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn constant_has_single_coefficient() {
        let f = GridDensity::constant(1, 8, 1.0).unwrap();
        let s = dual_transform(&f);
        assert!(close(s.coeffs()[0].re, 1.0, 1e-15));
        for c in &s.coeffs()[1..] {
            assert!(c.norm() < 1e-15);
        }
    }

    #[test]
    fn point_mass_has_flat_spectrum() {
        let f = GridDensity::point_mass(1, 8).unwrap();
        for c in dual_transform(&f).coeffs() {
            assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn inverse_of_flat_spectrum_is_point_mass() {
        let s = Spectrum::new(1, 8, vec![Complex64::new(1.0, 0.0); 8]).unwrap();
        let f = inverse_transform(&s);
        assert!(close(f.values()[0], 8.0, 1e-12));
        assert!(f.values()[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn centered_representatives() {
        let reps: Vec<i64> = (0..8).map(|k| centered(k, 8)).collect();
        assert_eq!(reps, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        let reps: Vec<i64> = (0..7).map(|k| centered(k, 7)).collect();
        assert_eq!(reps, vec![0, 1, 2, 3, -3, -2, -1]);
    }

    #[test]
    fn shape_errors() {
        assert!(GridDensity::new(2, 4, vec![0.0; 15]).is_err());
        assert!(GridDensity::new(4, 2, vec![0.0; 16]).is_err());
        let a = GridDensity::constant(1, 4, 1.0).unwrap();
        let b = GridDensity::constant(1, 5, 1.0).unwrap();
        assert!(matches!(lambda3_direct(&a, &a, &b), Err(ApError::ShapeMismatch { .. })));
        assert!(lambda3_spectral(&a, &b, &a).is_err());
    }

    #[test]
    fn lq_rejects_small_q() {
        let s = dual_transform(&GridDensity::constant(1, 4, 1.0).unwrap());
        assert!(lq_norm(&s, 0.5, false).is_err());
    }

    #[test]
    fn trivial_contribution_edges() {
        assert!(close(trivial_ap_contribution(16, 16).unwrap(), 1.0 / 16.0, 1e-15));
        assert!(close(trivial_ap_contribution(4, 16).unwrap(), 1.0, 1e-15));
        assert!(trivial_ap_contribution(0, 16).is_err());
    }

    #[test]
    fn singular_matrices_are_named() {
        let e = ConfigurationMatrices::new(2, vec![1, 0, 0, 1], vec![1, 0, 0, 1]).unwrap_err();
        assert!(matches!(e, ApError::SingularMatrix { name: "M2 - M1", .. }));
        let e = ConfigurationMatrices::new(2, vec![1, 1, 1, 1], vec![2, 0, 0, 2]).unwrap_err();
        assert!(matches!(e, ApError::SingularMatrix { name: "M1", .. }));
    }

    #[test]
    fn prime_embedding_size() {
        let f = embed_prime(10, &[0, 3, 9]).unwrap();
        assert_eq!(f.n(), 23);
    }
}
