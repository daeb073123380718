//! Every numeric tolerance used by checks and acceptance tests lives here.
//!
//! Exponent fits carry absolute slack in the exponent, integral comparisons
//! carry relative slack, and identities carry round-off slack.

/// Round trip `inverse(dual(f)) = f`, absolute.
pub const ROUND_TRIP_ABS: f64 = 1e-12;
/// Parseval identity, relative.
pub const PARSEVAL_REL: f64 = 1e-12;
/// Spectral versus direct 3AP count, relative to `max(1, direct)`.
pub const LAMBDA3_REL: f64 = 1e-9;
/// U² norm versus its autocorrelation form.
pub const U2_REL: f64 = 1e-9;
/// Spatial versus dual-side configuration count, relative.
pub const CONFIG_REL: f64 = 1e-8;
/// Numerical slack allowed on both sides of a lemma-level inequality.
pub const INEQ_NUMERIC: f64 = 1e-9;
/// Bohr-cut identities `g + h = f` and mass preservation.
pub const BOHR_SUM_ABS: f64 = 1e-12;
pub const BOHR_MASS_ABS: f64 = 1e-10;
/// Slack on the pointwise spectral dominations `|ĝ| ≤ |f̂|`, `|ĥ| ≤ 2|f̂|`.
pub const BOHR_DOMINATION_ABS: f64 = 1e-12;
/// Allowed max/min ratio of per-density fitted constants.
pub const FIT_SPREAD_MAX: f64 = 2.0;
/// q-threshold grid refinement stops once the optimum moves less than this.
pub const Q_REFINE: f64 = 1e-6;
/// Mollified measures keep unit mass to this accuracy.
pub const MOLLIFY_MASS_ABS: f64 = 1e-10;
/// Richardson halving check for spherical quadrature, relative.
pub const RICHARDSON_REL: f64 = 0.01;
/// Angular doubling rule in d = 2, relative.
pub const ANGULAR_DOUBLING_REL: f64 = 0.01;
/// A dyadic block contributing more than this share flags non-convergence.
pub const TAIL_BLOCK_SHARE: f64 = 0.10;
/// Bessel series and asymptotic branches agree at the seam to this.
pub const BESSEL_SEAM_ABS: f64 = 1e-10;
/// Series/asymptotic switch point.
pub const BESSEL_SEAM: f64 = 20.0;
/// Polar versus direct 3AP length densities, relative L¹.
pub const POLAR_L1_REL: f64 = 0.05;
/// Window of step lengths used by the polar comparison.
pub const POLAR_R_MIN: f64 = 0.05;
pub const POLAR_R_MAX: f64 = 0.45;
/// Slack on the telescoping decay slope, bits per level.
pub const TELESCOPE_SLOPE_SLACK: f64 = 0.1;
/// Slack on the growth slope of the mollified sup norm, bits per level.
pub const MOLLIFY_GROWTH_SLACK: f64 = 0.1;
/// Slack on the pointwise decay exponent of the absolute spherical average.
pub const POINTWISE_DECAY_SLACK: f64 = 0.2;
/// Slack on the Frostman scaling exponent.
pub const FROSTMAN_SLACK: f64 = 0.15;
/// Window for the f ≡ 1 Frostman exponent.
pub const FROSTMAN_UNIFORM_LO: f64 = 0.9;
pub const FROSTMAN_UNIFORM_HI: f64 = 1.1;
/// Point-mass Frostman exponent must not exceed this.
pub const FROSTMAN_POINT_MAX: f64 = 0.1;
/// Largest admissible constant in the S versus 𝔖 comparison.
pub const SL_RATIO_MAX: f64 = 10.0;
/// Tolerance on the on-grid identity 𝔇 = S + L, relative to ‖𝔇‖∞.
pub const SL_IDENTITY_REL: f64 = 1e-10;
/// Stability of cutoff doubling for weighted integrals and decay constants.
pub const CUTOFF_DOUBLING_REL: f64 = 0.02;
/// Energy transition bracket must contain the similarity dimension to this.
pub const ENERGY_BRACKET: f64 = 0.05;
/// Discretized spectrum versus closed form at low frequencies, relative.
pub const DISCRETIZE_REL: f64 = 0.02;
/// Depth rule: the product tail contributes less than this.
pub const DEPTH_TAIL: f64 = 1e-10;
