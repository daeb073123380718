//! Test objects: Behrend progression-free sets, the exact `r₃(N)` oracle,
//! seeded random sets, and self-similar measures with product-formula
//! Fourier transforms.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, ApError, Result};
use crate::group_fourier::GridDensity;

/// Sorted distinct integers in `[0, N)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegerSet {
    n: usize,
    elements: Vec<usize>,
}

impl IntegerSet {
    pub fn new(n: usize, mut elements: Vec<usize>) -> Result<Self> {
        elements.sort_unstable();
        elements.dedup();
        if let Some(&e) = elements.last() {
            if e >= n {
                return Err(invalid("elements", format!("{e} not in [0, {n})")));
            }
        }
        Ok(Self { n, elements })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn elements(&self) -> &[usize] {
        &self.elements
    }
    pub fn len(&self) -> usize {
        self.elements.len()
    }
    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
    pub fn density(&self) -> f64 {
        self.len() as f64 / self.n as f64
    }

    /// Indicator on `Z_N` (no embedding).
    pub fn indicator(&self) -> Result<GridDensity> {
        GridDensity::indicator(self.n, &self.elements)
    }

    /// Newline-delimited decimals.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.len() * 6);
        for e in &self.elements {
            s.push_str(&e.to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_text(n: usize, text: &str) -> Result<Self> {
        let elements = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| l.parse::<usize>().map_err(|_| ApError::Format(format!("bad element `{l}`"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, elements)
    }
}

/// Number of nontrivial progressions `a < b < c`, `a + c = 2b`, in `[0, N)`
/// (no wraparound).
pub fn count_nontrivial_3aps(set: &IntegerSet) -> u64 {
    let mut member = vec![false; set.n];
    for &e in &set.elements {
        member[e] = true;
    }
    let el = &set.elements;
    let mut count = 0;
    for i in 0..el.len() {
        for j in i + 1..el.len() {
            let s = el[i] + el[j];
            if s % 2 == 0 && member[s / 2] {
                count += 1;
            }
        }
    }
    count
}

pub fn is_ap_free(set: &IntegerSet) -> bool {
    count_nontrivial_3aps(set) == 0
}

/// Parameters of the sphere that produced a Behrend set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BehrendParams {
    pub base: usize,
    pub digit_bound: usize,
    pub radius_sq: usize,
}

/// Best digit sphere found by the grid search, with its parameters.
pub fn behrend_search(n: usize) -> Result<(IntegerSet, BehrendParams)> {
    if n < 3 {
        return Err(invalid("N", "must be at least 3"));
    }
    let mut best: Option<(Vec<usize>, BehrendParams)> = None;
    for base in 3..=n.min(512) {
        // Digits below ⌈m/2⌉ never carry when two of them are added.
        let digit_bound = base.div_ceil(2);
        let mut buckets: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        'x: for x in 0..n {
            let (mut y, mut norm) = (x, 0usize);
            while y > 0 {
                let a = y % base;
                if a >= digit_bound {
                    continue 'x;
                }
                norm += a * a;
                y /= base;
            }
            buckets.entry(norm).or_default().push(x);
        }
        for (radius_sq, xs) in buckets {
            if best.as_ref().is_none_or(|(b, _)| xs.len() > b.len()) {
                best = Some((
                    xs,
                    BehrendParams {
                        base,
                        digit_bound,
                        radius_sq,
                    },
                ));
            }
        }
    }
    let (xs, params) = best.expect("base 3 always yields a bucket");
    Ok((IntegerSet::new(n, xs)?, params))
}

/// Progression-free subset of `[N]` from points on a sphere in digit space.
pub fn behrend_set(n: usize) -> Result<IntegerSet> {
    Ok(behrend_search(n)?.0)
}

/// Largest `N` accepted by [`max_ap_free_oracle`].
pub const ORACLE_MAX_N: usize = 32;

/// Exact `r₃(N)` by branch and bound; suffix bounds come from smaller `N`.
pub fn max_ap_free_oracle(n: usize) -> Result<usize> {
    if n > ORACLE_MAX_N {
        return Err(ApError::TooLarge(format!(
            "N = {n} exceeds {ORACLE_MAX_N}; use behrend_set for large N"
        )));
    }
    let mut r3 = vec![0usize; n + 1];
    for m in 1..=n {
        let mut best = r3[m - 1];
        extend(0, 0, 0, m, &r3, &mut best);
        r3[m] = best;
    }
    Ok(r3[n])
}

fn extend(start: usize, mask: u64, size: usize, m: usize, r3: &[usize], best: &mut usize) {
    if size > *best {
        *best = size;
    }
    for x in start..m {
        // Any subset of [x, m) is a shifted subset of [0, m - x).
        if size + r3[m - x] <= *best && m - x < m {
            return;
        }
        if size + (m - x) <= *best {
            return;
        }
        let mut ok = true;
        let mut rest = mask;
        while rest != 0 {
            let b = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if 2 * b >= x && mask & (1u64 << (2 * b - x)) != 0 {
                ok = false;
                break;
            }
        }
        if ok {
            extend(x + 1, mask | (1u64 << x), size + 1, m, r3, best);
        }
    }
}

/// Each element of `[N]` independently with probability `delta`.
pub fn random_set(n: usize, delta: f64, seed: u64) -> Result<IntegerSet> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid("delta", format!("{delta} not in (0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let elements = (0..n).filter(|_| rng.gen::<f64>() < delta).collect();
    IntegerSet::new(n, elements)
}

/// Product of identical per-axis self-similar measures on `[0,1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfSimilarMeasure {
    #[serde(default = "one")]
    pub d: usize,
    pub b: usize,
    pub digits: Vec<usize>,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub depth: Option<usize>,
}

fn one() -> usize {
    1
}

impl SelfSimilarMeasure {
    pub fn new(d: usize, b: usize, digits: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        let m = Self {
            d,
            b,
            digits,
            weights,
            depth: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d > 2 {
            return Err(invalid("d", "product measures are supported for d = 1, 2"));
        }
        if self.b < 2 {
            return Err(invalid("b", "base must be at least 2"));
        }
        if self.digits.is_empty() || self.digits.len() != self.weights.len() {
            return Err(invalid("weights", "one weight per digit"));
        }
        let mut sorted = self.digits.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.digits.len() || sorted.iter().any(|&a| a >= self.b) {
            return Err(invalid("digits", "distinct digits in [0, b)"));
        }
        if self.weights.iter().any(|&w| !(w > 0.0)) {
            return Err(invalid("weights", "weights must be positive"));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid("weights", format!("sum to {total}, not 1")));
        }
        if self.digits.len() < 2 && self.b > 1 {
            return Err(invalid("digits", "similarity dimension must be positive"));
        }
        Ok(())
    }

    /// Uniform weights on the given digits.
    pub fn uniform(d: usize, b: usize, digits: Vec<usize>) -> Result<Self> {
        let w = vec![1.0 / digits.len() as f64; digits.len()];
        Self::new(d, b, digits, w)
    }

    pub fn middle_thirds(d: usize) -> Self {
        Self::uniform(d, 3, vec![0, 2]).expect("valid parameters")
    }

    /// Lebesgue measure on `[0,1]^d` written in base `b`.
    pub fn lebesgue(d: usize, b: usize) -> Self {
        Self::uniform(d, b, (0..b).collect()).expect("valid parameters")
    }

    /// Per-axis similarity dimension `log|D| / log b`.
    pub fn axis_dimension(&self) -> f64 {
        (self.digits.len() as f64).ln() / (self.b as f64).ln()
    }

    /// Similarity dimension of the product measure.
    pub fn dimension(&self) -> f64 {
        self.d as f64 * self.axis_dimension()
    }

    /// Depth rule `⌈log_b |ξ| + 40 / log₂ b⌉`.
    pub fn default_depth(&self, xi_abs: f64) -> usize {
        let b = self.b as f64;
        let lead = if xi_abs > 1.0 { xi_abs.ln() / b.ln() } else { 0.0 };
        (lead + 40.0 / b.log2()).ceil().max(1.0) as usize
    }

    fn level_factor(&self, xi: f64, scale: f64) -> Complex64 {
        self.digits
            .iter()
            .zip(&self.weights)
            .map(|(&a, &w)| Complex64::from_polar(w, -2.0 * PI * xi * a as f64 * scale))
            .sum()
    }

    /// Product formula on one axis, with the tail check
    /// `|μ̂_{K+1}(ξ) - μ̂_K(ξ)| ≤ 2π|ξ| b^{-K}`.
    pub fn fourier_axis(&self, xi: f64, depth: Option<usize>) -> Complex64 {
        let k_max = depth.or(self.depth).unwrap_or_else(|| self.default_depth(xi.abs()));
        let b = self.b as f64;
        let mut prod = Complex64::new(1.0, 0.0);
        let mut scale = 1.0;
        for _ in 0..k_max {
            scale /= b;
            prod *= self.level_factor(xi, scale);
        }
        let next = prod * self.level_factor(xi, scale / b);
        let gap = (next - prod).norm();
        assert!(
            gap <= 2.0 * PI * xi.abs() * scale * (1.0 + 1e-12) + 1e-15,
            "product tail exceeds its Lipschitz bound"
        );
        prod
    }

    pub fn to_toml(&self) -> String {
        let mut s = format!("d = {}\nb = {}\ndigits = {:?}\nweights = {:?}\n", self.d, self.b, self.digits, self.weights);
        if let Some(k) = self.depth {
            s.push_str(&format!("depth = {k}\n"));
        }
        s
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let m: Self = toml::from_str(text).map_err(|e| ApError::Format(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }
}

/// `μ̂(ξ) = Π_axes Π_{k=1}^{K} Σ_{a∈D} w_a e^{-2πi ξ a b^{-k}}`.
pub fn self_similar_fourier(mu: &SelfSimilarMeasure, xi: &[f64], depth: Option<usize>) -> Result<Complex64> {
    if xi.len() != mu.d {
        return Err(invalid("xi", format!("expected {} coordinates", mu.d)));
    }
    if depth == Some(0) {
        return Err(invalid("depth", "must be at least 1"));
    }
    Ok(xi.iter().map(|&x| mu.fourier_axis(x, depth)).product())
}

/// Level-`level` cells of one axis: `(left endpoint, mass)`.
fn axis_cells(mu: &SelfSimilarMeasure, level: usize) -> Vec<(f64, f64)> {
    let mut cells = vec![(0.0, 1.0)];
    let mut scale = 1.0;
    for _ in 0..level {
        scale /= mu.b as f64;
        cells = cells
            .iter()
            .flat_map(|&(x, m)| {
                mu.digits
                    .iter()
                    .zip(&mu.weights)
                    .map(move |(&a, &w)| (x + a as f64 * scale, m * w))
            })
            .collect();
    }
    cells
}

/// Deposit the mass of each level-`level` cell on the grid point nearest
/// its left endpoint; the result has unit mean.
pub fn discretize(mu: &SelfSimilarMeasure, n: usize, level: usize) -> Result<GridDensity> {
    let cells_per_axis = (mu.b as u128).checked_pow(level as u32);
    if cells_per_axis.is_none_or(|c| c > n as u128) {
        return Err(ApError::Resolution(format!(
            "b^level = {}^{level} exceeds N = {n}",
            mu.b
        )));
    }
    let cells = axis_cells(mu, level);
    let slot = |x: f64| ((x * n as f64).round() as usize) % n;
    let len = n.pow(mu.d as u32);
    let mut values = vec![0.0; len];
    match mu.d {
        1 => {
            for &(x, m) in &cells {
                values[slot(x)] += m * len as f64;
            }
        }
        _ => {
            for &(x, mx) in &cells {
                for &(y, my) in &cells {
                    values[slot(x) * n + slot(y)] += mx * my * len as f64;
                }
            }
        }
    }
    GridDensity::new(mu.d, n, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_small_values() {
        assert_eq!(max_ap_free_oracle(1).unwrap(), 1);
        assert_eq!(max_ap_free_oracle(5).unwrap(), 4);
        assert_eq!(max_ap_free_oracle(9).unwrap(), 5);
        assert!(matches!(max_ap_free_oracle(33), Err(ApError::TooLarge(_))));
    }

    #[test]
    fn behrend_small_is_free() {
        for n in [3, 9, 50, 200] {
            let s = behrend_set(n).unwrap();
            assert!(is_ap_free(&s), "N = {n}");
            assert!(!s.is_empty());
        }
        assert!(behrend_set(9).unwrap().len() <= 5);
    }

    #[test]
    fn random_set_edges() {
        assert_eq!(random_set(100, 1.0, 3).unwrap().len(), 100);
        assert_eq!(random_set(100, 0.5, 3).unwrap(), random_set(100, 0.5, 3).unwrap());
        assert!(random_set(100, 0.0, 3).is_err());
    }

    #[test]
    fn set_text_round_trip() {
        let s = IntegerSet::new(10, vec![7, 1, 3]).unwrap();
        assert_eq!(s.to_text(), "1\n3\n7\n");
        assert_eq!(IntegerSet::from_text(10, &s.to_text()).unwrap(), s);
        assert!(IntegerSet::new(5, vec![5]).is_err());
    }

    #[test]
    fn measure_toml_round_trip() {
        let mut m = SelfSimilarMeasure::middle_thirds(1);
        m.depth = Some(30);
        let back = SelfSimilarMeasure::from_toml(&m.to_toml()).unwrap();
        assert_eq!(back, m);
        assert!(SelfSimilarMeasure::from_toml("b = 3\ndigits = [0, 2]\nweights = [0.5, 0.6]\n").is_err());
    }

    #[test]
    fn fourier_at_zero_is_mass() {
        let m = SelfSimilarMeasure::middle_thirds(2);
        let v = self_similar_fourier(&m, &[0.0, 0.0], None).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn discretize_level_zero_is_point_mass() {
        let m = SelfSimilarMeasure::middle_thirds(1);
        let f = discretize(&m, 9, 0).unwrap();
        assert_eq!(f.values()[0], 9.0);
        assert!(discretize(&m, 8, 2).is_err());
    }
}
