//! Equal-time observables of the scattered field: coherent and spontaneous
//! components, intensity, g²(0) in closed form and in the full per-atom
//! expansion, asymptotic limits, and the Mandel Q parameter.
//!
//! Intensity is normalized so a single saturated atom radiates 1/2; all
//! directional dependence enters through the phases (k n̂ − k_L)·r_j of the
//! active emitters.

use nalgebra::{Unit, Vector3};
use num_complex::Complex64 as C64;

use crate::emitter::DriveParams;
use crate::geometry::EmitterChain;
use crate::{Error, Result};

/// Far-field observation direction and transition wavenumber.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationGeometry {
    pub direction: Unit<Vector3<f64>>,
    /// k = 2π/λ, 1/m.
    pub wavenumber: f64,
}

impl ObservationGeometry {
    pub fn new(direction: Unit<Vector3<f64>>, wavenumber: f64) -> Result<Self> {
        if !wavenumber.is_finite() || wavenumber <= 0.0 {
            return Err(Error::domain("wavenumber must be positive and finite"));
        }
        Ok(ObservationGeometry {
            direction,
            wavenumber,
        })
    }

    /// Observation along +z (the chain axis).
    pub fn axial(wavenumber: f64) -> Result<Self> {
        ObservationGeometry::new(Unit::new_normalize(Vector3::z()), wavenumber)
    }

    /// Direction at polar angle θ from +z, in the x–z plane.
    pub fn polar(theta: f64, wavenumber: f64) -> Result<Self> {
        ObservationGeometry::new(
            Unit::new_normalize(Vector3::new(theta.sin(), 0.0, theta.cos())),
            wavenumber,
        )
    }
}

/// Interference phases φ_j = (k n̂ − k_L)·r_j of the active emitters.
pub fn active_phases(
    chain: &EmitterChain,
    drive: &DriveParams,
    obs: &ObservationGeometry,
) -> Vec<f64> {
    let dk = obs.direction.into_inner() * obs.wavenumber - drive.wavevector();
    chain.active_positions().map(|r| dk.dot(r)).collect()
}

/// Decomposition of the scattered light at one observation direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldComponents {
    /// Coherently scattered field E_coh = √(s/2)/(1+s) Σ_j e^{−iφ_j}.
    pub e_coh: C64,
    /// I_coh = |E_coh|².
    pub i_coh: f64,
    /// Spontaneous-emission intensity I_SE = N s²/(2(1+s)²), isotropic.
    pub i_se: f64,
    /// Two-level term Φ = (s/2)/(1+s)² Σ_j e^{−2iφ_j}.
    pub phi: C64,
    /// Number of active emitters entering the sums.
    pub n_active: usize,
    /// Saturation parameter of the drive.
    pub saturation: f64,
}

impl FieldComponents {
    /// Total intensity I = I_SE + I_coh (uniform illumination).
    pub fn intensity(&self) -> f64 {
        self.i_se + self.i_coh
    }

    /// Evaluate from a precomputed phase list.
    pub fn from_phases(phases: &[f64], saturation: f64) -> Result<Self> {
        let n = phases.len();
        if n == 0 {
            return Err(Error::NoActiveEmitters);
        }
        let s = saturation;
        let mut sum1 = C64::new(0.0, 0.0);
        let mut sum2 = C64::new(0.0, 0.0);
        for &p in phases {
            sum1 += C64::new(0.0, -p).exp();
            sum2 += C64::new(0.0, -2.0 * p).exp();
        }
        let pref_e = (s / 2.0).sqrt() / (1.0 + s);
        let pref_p = (s / 2.0) / ((1.0 + s) * (1.0 + s));
        let e_coh = sum1 * pref_e;
        Ok(FieldComponents {
            e_coh,
            i_coh: e_coh.norm_sqr(),
            i_se: n as f64 * s * s / (2.0 * (1.0 + s) * (1.0 + s)),
            phi: sum2 * pref_p,
            n_active: n,
            saturation: s,
        })
    }
}

/// Field components of the active emitters of `chain`.
pub fn field_components(
    chain: &EmitterChain,
    drive: &DriveParams,
    obs: &ObservationGeometry,
) -> Result<FieldComponents> {
    FieldComponents::from_phases(&active_phases(chain, drive, obs), drive.saturation())
}

/// Total intensity through the per-atom route,
/// I = Σ n_a + |Σ β_a|² − Σ |β_a|².
///
/// Equals `FieldComponents::intensity` when every active atom shares the
/// same saturation.
pub fn intensity(
    chain: &EmitterChain,
    drive: &DriveParams,
    obs: &ObservationGeometry,
) -> Result<f64> {
    let mut populations = Vec::with_capacity(chain.n_active());
    let mut coherences = Vec::with_capacity(chain.n_active());
    for r in chain.active_positions() {
        let st = crate::emitter::steady_state(drive, r, obs);
        populations.push(st.population);
        coherences.push(st.coherence);
    }
    if populations.is_empty() {
        return Err(Error::NoActiveEmitters);
    }
    Ok(intensity_from_atoms(&populations, &coherences))
}

fn intensity_from_atoms(populations: &[f64], coherences: &[C64]) -> f64 {
    let n_sum: f64 = populations.iter().sum();
    let beta_sum: C64 = coherences.iter().sum();
    let beta_sq: f64 = coherences.iter().map(|b| b.norm_sqr()).sum();
    n_sum + beta_sum.norm_sqr() - beta_sq
}

/// Unnormalized equal-time correlation G²(0) and intensity I via the
/// closed-form decomposition (numerator and denominator of the identical-
/// emitter g²(0) expression). Used by the Monte-Carlo accumulators.
pub fn unnormalized_g2_zero(components: &FieldComponents) -> (f64, f64) {
    let n = components.n_active as f64;
    let s = components.saturation;
    let i_se = components.i_se;
    let i_coh = components.i_coh;
    let e2 = components.e_coh * components.e_coh;
    let cross = (e2 - components.phi).norm_sqr();
    let g2 = (2.0 - 2.0 / n + 4.0 / (n * s)) * i_se * i_se
        + 4.0 * (1.0 - 2.0 / n) * i_se * i_coh
        + cross;
    (g2, i_se + i_coh)
}

/// g²(0) for identical active emitters (closed form).
///
/// N in the formula is the number of active emitters.
pub fn g2_zero_closed(
    chain: &EmitterChain,
    drive: &DriveParams,
    obs: &ObservationGeometry,
) -> Result<f64> {
    let comps = field_components(chain, drive, obs)?;
    let (g2, i) = unnormalized_g2_zero(&comps);
    if i <= 0.0 {
        return Err(Error::ZeroIntensity);
    }
    Ok(g2 / (i * i))
}

/// g²(0) from per-atom populations and phased coherences (full product-state
/// expansion). Permits per-atom saturation, e.g. a Gaussian beam profile.
pub fn g2_zero_exact(populations: &[f64], coherences: &[C64]) -> Result<f64> {
    if populations.len() != coherences.len() {
        return Err(Error::domain(
            "populations and coherences must have equal length",
        ));
    }
    if populations.is_empty() {
        return Err(Error::NoActiveEmitters);
    }
    let n_sum: f64 = populations.iter().sum();
    let n_sq: f64 = populations.iter().map(|n| n * n).sum();
    let b_sum: C64 = coherences.iter().sum();
    let b2_sum: f64 = coherences.iter().map(|b| b.norm_sqr()).sum();
    let b4_sum: f64 = coherences.iter().map(|b| b.norm_sqr().powi(2)).sum();
    let nbconj_sum: C64 = populations
        .iter()
        .zip(coherences)
        .map(|(&n, b)| b.conj() * n)
        .sum();
    let nb2_sum: f64 = populations
        .iter()
        .zip(coherences)
        .map(|(&n, b)| n * b.norm_sqr())
        .sum();
    let b2bconj_sum: C64 = coherences.iter().map(|b| b.conj() * b.norm_sqr()).sum();
    let bsq_sum: C64 = coherences.iter().map(|b| b * b).sum();
    let bconjsq_sum: C64 = coherences.iter().map(|b| b.conj() * b.conj()).sum();

    let g2 = 2.0 * n_sum * n_sum - 2.0 * n_sq + 4.0 * n_sum * (b_sum.norm_sqr() - b2_sum)
        - 8.0 * (nbconj_sum * b_sum).re
        + 8.0 * nb2_sum
        + b_sum.norm_sqr().powi(2)
        - 6.0 * b4_sum
        - 4.0 * b_sum.norm_sqr() * b2_sum
        + 8.0 * (b_sum * b2bconj_sum).re
        + 2.0 * b2_sum * b2_sum
        - 2.0 * (b_sum * b_sum * bconjsq_sum).re
        + bsq_sum.norm_sqr();

    let i = intensity_from_atoms(populations, coherences);
    if i <= 0.0 {
        return Err(Error::ZeroIntensity);
    }
    Ok(g2 / (i * i))
}

/// Per-atom (population, coherence) pairs of the active emitters.
pub fn atom_states(
    chain: &EmitterChain,
    drive: &DriveParams,
    obs: &ObservationGeometry,
) -> (Vec<f64>, Vec<C64>) {
    let mut populations = Vec::with_capacity(chain.n_active());
    let mut coherences = Vec::with_capacity(chain.n_active());
    for r in chain.active_positions() {
        let st = crate::emitter::steady_state(drive, r, obs);
        populations.push(st.population);
        coherences.push(st.coherence);
    }
    (populations, coherences)
}

/// Elastic-scattering limit (s → 0): |E_coh² − Φ|²/I_coh² with the
/// s-dependent prefactors cancelled analytically, so the result carries no
/// saturation dependence at all.
pub fn g2_elastic_limit(
    chain: &EmitterChain,
    obs: &ObservationGeometry,
    drive_direction: &Unit<Vector3<f64>>,
) -> Result<f64> {
    let dk =
        obs.direction.into_inner() * obs.wavenumber - drive_direction.into_inner() * obs.wavenumber;
    let mut s1 = C64::new(0.0, 0.0);
    let mut s2 = C64::new(0.0, 0.0);
    let mut n = 0usize;
    for r in chain.active_positions() {
        let p = dk.dot(r);
        s1 += C64::new(0.0, -p).exp();
        s2 += C64::new(0.0, -2.0 * p).exp();
        n += 1;
    }
    if n == 0 {
        return Err(Error::NoActiveEmitters);
    }
    let i1 = s1.norm_sqr();
    if i1 == 0.0 {
        return Err(Error::DestructiveDivergence);
    }
    // (s/2)/(1+s)² multiplies both E² and Φ, so it drops out
    Ok((s1 * s1 - s2).norm_sqr() / (i1 * i1))
}

/// Destructive-direction approximation and its applicability flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DestructiveApprox {
    /// 4/(Ns) + |Σ_j e^{−2iφ_j}|²/(N²s²).
    pub value: f64,
    /// True when |E_coh|²/I_SE < 0.01 in this direction; the approximation
    /// is only meaningful there (and accurate once Ns ≪ 2).
    pub in_destructive_regime: bool,
}

/// Superbunching prediction at a destructive interference direction.
pub fn g2_destructive_approx(
    chain: &EmitterChain,
    drive: &DriveParams,
    obs: &ObservationGeometry,
) -> Result<DestructiveApprox> {
    let comps = field_components(chain, drive, obs)?;
    let s = comps.saturation;
    if s <= 0.0 {
        return Err(Error::domain("destructive approximation requires s > 0"));
    }
    let n = comps.n_active as f64;
    // |Σ e^{−2iφ}|² = |Φ|²/pref², with pref = (s/2)/(1+s)²
    let pref = (s / 2.0) / ((1.0 + s) * (1.0 + s));
    let sum2_sq = comps.phi.norm_sqr() / (pref * pref);
    let value = 4.0 / (n * s) + sum2_sq / (n * n * s * s);
    Ok(DestructiveApprox {
        value,
        in_destructive_regime: comps.i_coh / comps.i_se < 0.01,
    })
}

/// Constructive-direction asymptotic for a fully developed speckle,
/// 2 − 1/(1+s/2)² − 2s(6+s)/(N(2+s)²).
///
/// Valid for N ≳ 4; the speckle hypothesis behind it breaks down for very
/// small chains.
pub fn g2_constructive_asymptotic(n: usize, s: f64) -> f64 {
    let n = n as f64;
    2.0 - 1.0 / ((1.0 + s / 2.0) * (1.0 + s / 2.0))
        - 2.0 * s * (6.0 + s) / (n * (2.0 + s) * (2.0 + s))
}

/// Mandel Q = ⟨n̂⟩(g²(0) − 1).
pub fn mandel_q(g2_zero: f64, mean_photon_number: f64) -> f64 {
    mean_photon_number * (g2_zero - 1.0)
}

/// Mean detected photon number ⟨n̂⟩ = η · I · Γ · T_bin.
pub fn mean_photon_number(intensity: f64, efficiency: f64, linewidth: f64, bin_time: f64) -> f64 {
    efficiency * intensity * linewidth * bin_time
}

/// Which intensity extremum a direction search should target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterferencePoint {
    Constructive,
    Destructive,
}

/// Search the detection cone (half-angle around +z) for the direction of
/// maximal or minimal total intensity: coarse polar scan followed by
/// golden-section refinement. The pattern of an axial chain depends on the
/// polar angle only, so a 1-D search is exact for ideal chains.
pub fn find_direction_in_cone(
    chain: &EmitterChain,
    drive: &DriveParams,
    wavenumber: f64,
    half_angle: f64,
    which: InterferencePoint,
) -> Result<ObservationGeometry> {
    if !half_angle.is_finite() || half_angle <= 0.0 {
        return Err(Error::domain("cone half-angle must be positive"));
    }
    let eval = |theta: f64| -> Result<f64> {
        let obs = ObservationGeometry::polar(theta, wavenumber)?;
        let comps = field_components(chain, drive, &obs)?;
        let i = comps.intensity();
        Ok(match which {
            InterferencePoint::Constructive => -i,
            InterferencePoint::Destructive => i,
        })
    };

    const COARSE: usize = 512;
    let mut best_idx = 0usize;
    let mut best = f64::INFINITY;
    for i in 0..=COARSE {
        let theta = half_angle * i as f64 / COARSE as f64;
        let v = eval(theta)?;
        if v < best {
            best = v;
            best_idx = i;
        }
    }
    let lo = half_angle * best_idx.saturating_sub(1) as f64 / COARSE as f64;
    let hi = half_angle * (best_idx + 1).min(COARSE) as f64 / COARSE as f64;

    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (eval(c)?, eval(d)?);
    for _ in 0..80 {
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
        if b - a < 1e-12 {
            break;
        }
    }
    ObservationGeometry::polar(0.5 * (a + b), wavenumber)
}
