//! Seeded Monte-Carlo ensembles over position jitter and dark-ion masks,
//! and parameter sweeps with per-row direction finding.
//!
//! Determinism contract: every realization draws from its own counter-based
//! ChaCha stream derived from the master seed, realizations are collected in
//! index order, and the reduction is sequential — so results are bit-identical
//! for any worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::correlations::{
    field_components, find_direction_in_cone, g2_constructive_asymptotic, unnormalized_g2_zero,
    FieldComponents, InterferencePoint, ObservationGeometry,
};
use crate::emitter::DriveParams;
use crate::geometry::{
    equilibrium_positions, sample_dark_mask, sample_jitter, DarkIonModel, EmitterChain,
    JitterModel, TrapParams,
};
use crate::{Error, Result};

/// How the ensemble g²(0) is normalized.
///
/// `RatioOfAverages` (⟨G²⟩/⟨I⟩²) matches HBT coincidence counting, where
/// coincidences and singles are accumulated over the full run before
/// normalizing; it is the reported estimator. `AverageOfRatios` is kept for
/// sensitivity analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    #[default]
    RatioOfAverages,
    AverageOfRatios,
}

/// Ensemble noise model and size.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub n_realizations: usize,
    pub jitter: JitterModel,
    pub dark: DarkIonModel,
    pub master_seed: u64,
    pub estimator: Estimator,
    /// Keep the per-realization (I, G²) samples in the result.
    pub keep_samples: bool,
}

impl EnsembleConfig {
    pub fn new(
        n_realizations: usize,
        jitter: JitterModel,
        dark: DarkIonModel,
        master_seed: u64,
    ) -> Result<Self> {
        if n_realizations == 0 {
            return Err(Error::domain("n_realizations must be at least 1"));
        }
        Ok(EnsembleConfig {
            n_realizations,
            jitter,
            dark,
            master_seed,
            estimator: Estimator::default(),
            keep_samples: false,
        })
    }

    /// Noise-free single-configuration "ensemble" (used when both noise
    /// sources are disabled).
    pub fn noiseless(master_seed: u64) -> Self {
        EnsembleConfig {
            n_realizations: 1,
            jitter: JitterModel::isotropic(0.0, 0).expect("zero rms is valid"),
            dark: DarkIonModel::new(0.0, 0).expect("zero probability is valid"),
            master_seed,
            estimator: Estimator::default(),
            keep_samples: false,
        }
    }
}

/// Ensemble-averaged intensity and g²(0) with delta-method standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub mean_intensity: f64,
    pub g2_zero: f64,
    pub intensity_stderr: f64,
    pub g2_stderr: f64,
    /// Realizations that actually contributed.
    pub n_used: usize,
    /// Realizations skipped because every emitter went dark.
    pub n_skipped: usize,
    /// Per-realization (intensity, unnormalized G²) when requested.
    pub samples: Option<Vec<(f64, f64)>>,
}

/// One realization: jitter the positions, draw a dark mask, evaluate
/// (I, G²(0)) over the surviving emitters. `None` when all emitters are dark.
fn realize(
    chain: &EmitterChain,
    drive: &DriveParams,
    obs: &ObservationGeometry,
    cfg: &EnsembleConfig,
    index: u64,
) -> Option<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    rng.set_stream(index);
    let jittered = sample_jitter(chain, &cfg.jitter, &mut rng);
    let mask = sample_dark_mask(chain.len(), &cfg.dark, &mut rng);
    let realized = jittered.masked(&mask).expect("mask length matches");
    if realized.n_active() == 0 {
        return None;
    }
    let comps = field_components(&realized, drive, obs).expect("non-empty active set");
    let (g2, i) = unnormalized_g2_zero(&comps);
    Some((i, g2))
}

/// Run the ensemble. Deterministic for a fixed master seed regardless of
/// thread count.
pub fn run_ensemble(
    chain: &EmitterChain,
    drive: &DriveParams,
    obs: &ObservationGeometry,
    cfg: &EnsembleConfig,
) -> Result<EnsembleResult> {
    if cfg.n_realizations == 0 {
        return Err(Error::domain("n_realizations must be at least 1"));
    }
    let raw: Vec<Option<(f64, f64)>> = (0..cfg.n_realizations as u64)
        .into_par_iter()
        .map(|i| realize(chain, drive, obs, cfg, i))
        .collect();

    let samples: Vec<(f64, f64)> = raw.iter().flatten().copied().collect();
    let n_skipped = cfg.n_realizations - samples.len();
    if samples.is_empty() {
        return Err(Error::AllRealizationsSkipped(cfg.n_realizations));
    }
    let n = samples.len() as f64;
    let mean_i = samples.iter().map(|(i, _)| i).sum::<f64>() / n;
    let mean_g = samples.iter().map(|(_, g)| g).sum::<f64>() / n;
    let var_i = samples
        .iter()
        .map(|(i, _)| (i - mean_i).powi(2))
        .sum::<f64>()
        / n.max(2.0 - 1.0);
    let var_g = samples
        .iter()
        .map(|(_, g)| (g - mean_g).powi(2))
        .sum::<f64>()
        / n;
    let cov = samples
        .iter()
        .map(|(i, g)| (i - mean_i) * (g - mean_g))
        .sum::<f64>()
        / n;

    let g2_zero = match cfg.estimator {
        Estimator::RatioOfAverages => mean_g / (mean_i * mean_i),
        Estimator::AverageOfRatios => samples.iter().map(|(i, g)| g / (i * i)).sum::<f64>() / n,
    };

    // delta method for g = Ḡ/Ī²
    let g2_stderr = match cfg.estimator {
        Estimator::RatioOfAverages => {
            let d_g = 1.0 / (mean_i * mean_i);
            let d_i = -2.0 * mean_g / (mean_i * mean_i * mean_i);
            ((d_g * d_g * var_g + d_i * d_i * var_i + 2.0 * d_g * d_i * cov) / n)
                .max(0.0)
                .sqrt()
        }
        Estimator::AverageOfRatios => {
            let ratios: Vec<f64> = samples.iter().map(|(i, g)| g / (i * i)).collect();
            let m = ratios.iter().sum::<f64>() / n;
            (ratios.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (n * n)).sqrt()
        }
    };

    Ok(EnsembleResult {
        mean_intensity: mean_i,
        g2_zero,
        intensity_stderr: (var_i / n).sqrt(),
        g2_stderr,
        n_used: samples.len(),
        n_skipped,
        samples: cfg.keep_samples.then_some(samples),
    })
}

/// Speckle-constructive estimator: mean of the exact identical-emitter
/// g²(0) over random-phase configurations conditioned on the fully
/// developed speckle constructive level I_coh = 2·Ī_coh ("maxima scale as
/// twice the background"). The Φ term is kept exact, so the result carries
/// the O(1/N) correlation correction that the closed asymptotic neglects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeckleConstructive {
    pub g2_zero: f64,
    pub g2_stderr: f64,
    pub mean_intensity: f64,
}

pub fn constructive_speckle_g2(
    n_active: usize,
    saturation: f64,
    n_samples: usize,
    seed: u64,
) -> Result<SpeckleConstructive> {
    if n_active < 2 {
        return Err(Error::domain(
            "speckle-constructive estimator needs at least 2 emitters",
        ));
    }
    if !saturation.is_finite() || saturation <= 0.0 {
        return Err(Error::domain("saturation must be positive"));
    }
    if n_samples == 0 {
        return Err(Error::domain("n_samples must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_active as f64;
    // conditioning band on |Σ e^{−iφ}|²/N
    let (lo, hi) = (1.95, 2.05);
    let mut g2s = Vec::with_capacity(n_samples);
    let mut intensity_sum = 0.0;
    let mut phases = vec![0.0f64; n_active];
    let mut attempts: u64 = 0;
    let max_attempts: u64 = 200_000_000;
    use rand::Rng;
    while g2s.len() < n_samples {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::domain(
                "speckle-constructive sampler failed to reach the conditioning band",
            ));
        }
        for p in phases.iter_mut() {
            *p = rng.gen_range(0.0..std::f64::consts::TAU);
        }
        let mut sum = num_complex::Complex64::new(0.0, 0.0);
        for &p in &phases {
            sum += num_complex::Complex64::new(0.0, -p).exp();
        }
        let level = sum.norm_sqr() / n;
        if level <= lo || level >= hi {
            continue;
        }
        let comps = FieldComponents::from_phases(&phases, saturation)?;
        let (g2, i) = unnormalized_g2_zero(&comps);
        g2s.push(g2 / (i * i));
        intensity_sum += i;
    }
    let m = g2s.iter().sum::<f64>() / g2s.len() as f64;
    let var = g2s.iter().map(|g| (g - m).powi(2)).sum::<f64>() / g2s.len() as f64;
    Ok(SpeckleConstructive {
        g2_zero: m,
        g2_stderr: (var / g2s.len() as f64).sqrt(),
        mean_intensity: intensity_sum / g2s.len() as f64,
    })
}

/// Tune the axial trap frequency inside `[lo, hi]` (rad/s) so the on-axis
/// noise-free intensity of the N-ion equilibrium chain is extremal — the
/// experimental way of placing a constructive or destructive interference
/// point on the fixed detector. Coarse scan plus golden-section refinement;
/// deterministic.
pub fn tune_axial_frequency(
    n: usize,
    trap: &TrapParams,
    drive: &DriveParams,
    lo: f64,
    hi: f64,
    which: InterferencePoint,
) -> Result<TrapParams> {
    if !lo.is_finite() || !hi.is_finite() || lo <= 0.0 || hi <= lo {
        return Err(Error::domain(
            "tuning range must be an increasing positive pair",
        ));
    }
    // dimensionless equilibrium is frequency-independent; only the Coulomb
    // length rescales along the scan
    let u = crate::geometry::dimensionless_equilibrium(n)?;
    let obs = ObservationGeometry::axial(drive.wavenumber)?;
    let chain_at = |omega: f64| -> Result<EmitterChain> {
        let t = TrapParams::new(omega, trap.ion_mass, trap.ion_charge)?;
        let ell = crate::geometry::length_scale(&t);
        let z: Vec<f64> = u.iter().map(|ui| ui * ell).collect();
        EmitterChain::from_axial_positions(&z)
    };
    let eval = |omega: f64| -> Result<f64> {
        let chain = chain_at(omega)?;
        let i = field_components(&chain, drive, &obs)?.intensity();
        Ok(match which {
            InterferencePoint::Constructive => -i,
            InterferencePoint::Destructive => i,
        })
    };

    const COARSE: usize = 4000;
    let mut best_idx = 0usize;
    let mut best = f64::INFINITY;
    for i in 0..=COARSE {
        let omega = lo + (hi - lo) * i as f64 / COARSE as f64;
        let v = eval(omega)?;
        if v < best {
            best = v;
            best_idx = i;
        }
    }
    let a0 = lo + (hi - lo) * best_idx.saturating_sub(1) as f64 / COARSE as f64;
    let b0 = lo + (hi - lo) * (best_idx + 1).min(COARSE) as f64 / COARSE as f64;
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a0, b0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (eval(c)?, eval(d)?);
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d)?;
        }
        if (b - a) / hi < 1e-13 {
            break;
        }
    }
    TrapParams::new(0.5 * (a + b), trap.ion_mass, trap.ion_charge)
}

/// Parameter swept by [`run_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweptParameter {
    /// ω_z in rad/s; the chain is re-equilibrated per value.
    AxialFrequency,
    /// Number of ions.
    IonNumber,
    /// Saturation parameter; the Rabi frequency is re-derived per value.
    Saturation,
    /// Observation polar angle from the chain axis, rad.
    ObservationAngle,
}

/// How the observation direction is fixed (or re-found) per sweep row.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservationRule {
    /// Fixed direction for all rows.
    Fixed(ObservationGeometry),
    /// On-axis (+z) observation.
    Axial,
    /// Re-find the intensity extremum in the detection cone per row.
    ConeExtremum {
        half_angle: f64,
        which: InterferencePoint,
    },
    /// On-axis observation with the trap frequency re-tuned per row inside
    /// the window (rad/s) to an intensity extremum.
    TunedAxialFrequency {
        lo: f64,
        hi: f64,
        which: InterferencePoint,
    },
    /// Speckle-conditioned constructive ensemble (noise-free, identical
    /// emitters; ignores the jitter/dark models).
    SpeckleConstructive { n_samples: usize, seed: u64 },
}

/// Sweep specification: one parameter varied, everything else fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweptParameter,
    pub values: Vec<f64>,
    pub ion_count: usize,
    pub trap: TrapParams,
    pub drive: DriveParams,
    pub observation: ObservationRule,
    pub ensemble: EnsembleConfig,
    /// Cap on swept axial frequencies, rad/s.
    pub axial_frequency_cap: f64,
    /// Detection efficiency and bin time for the Mandel Q column.
    pub detection_efficiency: f64,
    pub bin_time: f64,
}

/// One sweep row; failed rows carry the error text so the sweep can
/// continue past them.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: std::result::Result<RowData, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowData {
    pub mean_intensity: f64,
    pub g2_zero: f64,
    pub g2_stderr: f64,
    pub intensity_stderr: f64,
    pub mandel_q: f64,
    pub n_used: usize,
    pub n_skipped: usize,
    /// Closed asymptotic Eq-style constructive reference for this row's
    /// (N, s); provided for constructive sweeps.
    pub g2_constructive_ref: f64,
    /// Resolved observation polar angle, rad (NaN when not applicable).
    pub observation_angle: f64,
}

fn row_result(
    spec: &SweepSpec,
    n: usize,
    trap: &TrapParams,
    drive: &DriveParams,
) -> Result<RowData> {
    let s = drive.saturation();
    let chain = equilibrium_positions(n, trap)?;

    let (ens, angle) = match &spec.observation {
        ObservationRule::SpeckleConstructive { n_samples, seed } => {
            let sc = constructive_speckle_g2(n, s, *n_samples, *seed)?;
            let q = crate::correlations::mandel_q(
                sc.g2_zero,
                crate::correlations::mean_photon_number(
                    sc.mean_intensity,
                    spec.detection_efficiency,
                    drive.linewidth,
                    spec.bin_time,
                ),
            );
            return Ok(RowData {
                mean_intensity: sc.mean_intensity,
                g2_zero: sc.g2_zero,
                g2_stderr: sc.g2_stderr,
                intensity_stderr: 0.0,
                mandel_q: q,
                n_used: *n_samples,
                n_skipped: 0,
                g2_constructive_ref: g2_constructive_asymptotic(n, s),
                observation_angle: f64::NAN,
            });
        }
        ObservationRule::Fixed(obs) => {
            let ens = run_ensemble(&chain, drive, obs, &spec.ensemble)?;
            (ens, obs.direction.z.acos())
        }
        ObservationRule::Axial => {
            let obs = ObservationGeometry::axial(drive.wavenumber)?;
            let ens = run_ensemble(&chain, drive, &obs, &spec.ensemble)?;
            (ens, 0.0)
        }
        ObservationRule::ConeExtremum { half_angle, which } => {
            let obs = find_direction_in_cone(&chain, drive, drive.wavenumber, *half_angle, *which)?;
            let ens = run_ensemble(&chain, drive, &obs, &spec.ensemble)?;
            (ens, obs.direction.z.acos())
        }
        ObservationRule::TunedAxialFrequency { lo, hi, which } => {
            let tuned = tune_axial_frequency(n, trap, drive, *lo, *hi, *which)?;
            let chain = equilibrium_positions(n, &tuned)?;
            let obs = ObservationGeometry::axial(drive.wavenumber)?;
            let ens = run_ensemble(&chain, drive, &obs, &spec.ensemble)?;
            (ens, 0.0)
        }
    };

    let q = crate::correlations::mandel_q(
        ens.g2_zero,
        crate::correlations::mean_photon_number(
            ens.mean_intensity,
            spec.detection_efficiency,
            drive.linewidth,
            spec.bin_time,
        ),
    );
    Ok(RowData {
        mean_intensity: ens.mean_intensity,
        g2_zero: ens.g2_zero,
        g2_stderr: ens.g2_stderr,
        intensity_stderr: ens.intensity_stderr,
        mandel_q: q,
        n_used: ens.n_used,
        n_skipped: ens.n_skipped,
        g2_constructive_ref: g2_constructive_asymptotic(n, s),
        observation_angle: angle,
    })
}

/// Run the sweep. Rows are independent; failures are recorded per row and
/// the sweep continues.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.values.is_empty() {
        return Err(Error::domain("sweep values must be non-empty"));
    }
    if spec.parameter == SweptParameter::AxialFrequency {
        for &v in &spec.values {
            if v > spec.axial_frequency_cap * (1.0 + 1e-12) {
                return Err(Error::domain(format!(
                    "swept axial frequency {v:.4e} rad/s exceeds the cap {:.4e} rad/s",
                    spec.axial_frequency_cap
                )));
            }
        }
    }
    let rows = spec
        .values
        .iter()
        .map(|&value| {
            let outcome = (|| -> Result<RowData> {
                match spec.parameter {
                    SweptParameter::AxialFrequency => {
                        let trap =
                            TrapParams::new(value, spec.trap.ion_mass, spec.trap.ion_charge)?;
                        row_result(spec, spec.ion_count, &trap, &spec.drive)
                    }
                    SweptParameter::IonNumber => {
                        if value < 1.0 || value.fract() != 0.0 {
                            return Err(Error::domain(format!(
                                "ion_number sweep values must be positive integers, got {value}"
                            )));
                        }
                        row_result(spec, value as usize, &spec.trap, &spec.drive)
                    }
                    SweptParameter::Saturation => {
                        let drive = DriveParams::from_saturation(
                            value,
                            spec.drive.detuning,
                            spec.drive.linewidth,
                            spec.drive.drive_direction,
                            spec.drive.wavenumber,
                        )?;
                        row_result(spec, spec.ion_count, &spec.trap, &drive)
                    }
                    SweptParameter::ObservationAngle => {
                        let obs = ObservationGeometry::polar(value, spec.drive.wavenumber)?;
                        let mut row_spec = spec.clone();
                        row_spec.observation = ObservationRule::Fixed(obs);
                        row_result(&row_spec, spec.ion_count, &spec.trap, &spec.drive)
                    }
                }
            })();
            SweepRow {
                value,
                outcome: outcome.map_err(|e| e.to_string()),
            }
        })
        .collect();
    Ok(rows)
}
