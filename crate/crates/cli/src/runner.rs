//! Dispatch from a parsed config to the verification checks.

use ap_lab_core::fractal_spectral::{
    ap_length_measure, calibrate_polar_constant, measured_beta, measured_lq_exponent, polar_constant, torus_sigma_table,
};
use ap_lab_core::verify::{
    check_fractal_corollary, check_gowers_threshold, check_l3count, check_mass_telescoping, check_pointwise_decay,
    check_polar_consistency, check_sl_split, frostman_fit, polar_edges, sl_profile, GowersCorpus, L3CountCorpus,
    VerificationReport,
};
use ap_lab_core::tolerances::{POLAR_R_MAX, POLAR_R_MIN};
use ap_lab_core::ApError;

use crate::config::{Check, ConfigError, ExperimentConfig, Measure};

#[derive(Debug)]
pub enum RunError {
    /// The config asks for something the library rejects as input.
    Config(String),
    Compute(String),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.0)
    }
}

impl From<ApError> for RunError {
    fn from(e: ApError) -> Self {
        match e {
            ApError::InvalidShape(_) | ApError::InvalidParameter { .. } | ApError::TooLarge(_) | ApError::ShapeMismatch { .. } => {
                RunError::Config(e.to_string())
            }
            other => RunError::Compute(other.to_string()),
        }
    }
}

fn grid(min: f64, max: f64, step: f64) -> Vec<f64> {
    let k = ((max - min) / step + 1e-9).floor() as usize;
    (0..=k).map(|i| min + step * i as f64).collect()
}

/// Runs the configured check once with `seed`.
pub fn run_one(cfg: &ExperimentConfig, seed: u64) -> Result<VerificationReport, RunError> {
    let mut rep = match &cfg.check {
        Check::L3count(p) => check_l3count(&L3CountCorpus {
            n: p.n,
            size: p.size,
            seed,
            max_ripples: p.max_ripples,
            max_amplitude: p.max_amplitude,
            c: p.c,
        })?,
        Check::GowersThreshold(p) => check_gowers_threshold(&GowersCorpus { n: p.n, delta: p.delta, size: p.size, seed })?,
        Check::MassTelescoping(p) => {
            let measure = p.measure.build()?;
            let alpha = match (p.alpha, &measure) {
                (Some(a), _) => a,
                (None, Measure::SelfSimilar(m)) => m.dimension(),
                (None, Measure::Other(_)) => {
                    return Err(RunError::Config("field `params.alpha`: required unless the measure is self-similar".into()))
                }
            };
            let beta = match p.beta {
                Some(b) => b,
                None => {
                    let s = &p.beta_search;
                    measured_beta(measure.handle(), &grid(0.0, s.grid_max, s.grid_step), s.cutoff, s.doublings)?.unwrap_or(0.0)
                }
            };
            let levels: Vec<u32> = (p.level_min..=p.level_max).collect();
            check_mass_telescoping(measure.handle(), &p.measure.label(), p.grid_n, &levels, alpha, beta)?
        }
        Check::PolarConsistency(p) => {
            let f = p.density.build()?;
            let c_d = match &p.calibration {
                Some(spec) => {
                    let cal = spec.build()?;
                    let direct = ap_length_measure(&cal, &polar_edges(cal.d()))?;
                    calibrate_polar_constant(&direct, &torus_sigma_table(&cal)?, POLAR_R_MIN, POLAR_R_MAX)?
                }
                None => polar_constant(f.d()),
            };
            check_polar_consistency(&f, &torus_sigma_table(&f)?, c_d, &p.density.label())?
        }
        Check::FrostmanFit(p) => frostman_fit(&p.density.build()?, &p.widths.values(), p.s_target, &p.density.label())?,
        Check::FractalCorollary(p) => {
            check_fractal_corollary(&p.input, &p.density.build()?, &p.widths.values(), &p.density.label())?
        }
        Check::PointwiseDecay(p) => {
            let measure = p.measure.build()?;
            let q = match (p.q, &p.q_search) {
                (Some(q), _) => q,
                (None, Some(s)) => match measured_lq_exponent(measure.handle(), &grid(s.q_min, s.q_max, s.q_step), s.cutoff) {
                    Some(q) => q,
                    None => return Err(RunError::Compute("no q on the search grid makes ‖μ̂‖_q finite".into())),
                },
                (None, None) => unreachable!("validated at parse time"),
            };
            let radii: Vec<f64> = (p.radius_k_min..=p.radius_k_max).map(|k| 2f64.powf(k as f64 / 2.0)).collect();
            check_pointwise_decay(measure.handle(), &p.measure.label(), &radii, &p.sigma, q)?
        }
        Check::SlSplit(p) => {
            let s = grid(0.0, p.s_max, p.s_step);
            let profiles: Vec<Vec<f64>> = p.profiles.iter().map(|&(c, w)| sl_profile(&s, c, w)).collect();
            check_sl_split(p.d, &s, &profiles, &s, p.s_exponent)?
        }
    };
    rep.seed = Some(seed);
    Ok(rep)
}
