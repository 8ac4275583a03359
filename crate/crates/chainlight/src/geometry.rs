//! Emitter geometry: harmonic-trap Coulomb-chain equilibria, thermal
//! position jitter, and dark-ion masks.
//!
//! Equilibria are solved in the dimensionless form of the axial potential,
//! V(u) = Σ u_m²/2 + Σ_{m<n} 1/|u_m − u_n|, and scaled by the Coulomb length
//! ℓ = (q²/(4πε₀ M ω_z²))^{1/3}.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::{Error, Result};

/// Axial confinement of the linear Paul trap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapParams {
    /// Axial secular frequency ω_z, rad/s.
    pub axial_frequency: f64,
    /// Ion mass, kg.
    pub ion_mass: f64,
    /// Ion charge, C.
    pub ion_charge: f64,
}

impl TrapParams {
    pub fn new(axial_frequency: f64, ion_mass: f64, ion_charge: f64) -> Result<Self> {
        if !axial_frequency.is_finite() || axial_frequency <= 0.0 {
            return Err(Error::domain("axial_frequency must be positive and finite"));
        }
        if !ion_mass.is_finite() || ion_mass <= 0.0 {
            return Err(Error::domain("ion_mass must be positive and finite"));
        }
        if !ion_charge.is_finite() || ion_charge <= 0.0 {
            return Err(Error::domain("ion_charge must be positive and finite"));
        }
        Ok(TrapParams {
            axial_frequency,
            ion_mass,
            ion_charge,
        })
    }

    /// Singly charged ⁴⁰Ca⁺ at the given axial frequency (rad/s).
    pub fn calcium_40(axial_frequency: f64) -> Result<Self> {
        TrapParams::new(
            axial_frequency,
            crate::constants::CA40_ION_MASS_KG,
            crate::constants::ELEMENTARY_CHARGE,
        )
    }
}

/// Coulomb length scale ℓ = (q²/(4πε₀ M ω_z²))^{1/3}, m.
///
/// Doubling ω_z divides ℓ by 2^{2/3}.
pub fn length_scale(trap: &TrapParams) -> f64 {
    let coulomb = trap.ion_charge * trap.ion_charge
        / (4.0 * std::f64::consts::PI * crate::constants::EPSILON_0);
    let omega2 = trap.axial_frequency * trap.axial_frequency;
    (coulomb / (trap.ion_mass * omega2)).cbrt()
}

/// Positions of N emitters plus per-emitter active flags.
///
/// Dark emitters stay in the position list but are excluded from every
/// coherent and incoherent sum.
#[derive(Debug, Clone, PartialEq)]
pub struct EmitterChain {
    positions: Vec<Vector3<f64>>,
    active: Vec<bool>,
}

impl EmitterChain {
    pub fn new(positions: Vec<Vector3<f64>>, active: Vec<bool>) -> Result<Self> {
        if positions.len() != active.len() {
            return Err(Error::domain(format!(
                "positions ({}) and active mask ({}) lengths differ",
                positions.len(),
                active.len()
            )));
        }
        if positions.is_empty() {
            return Err(Error::domain("chain must contain at least one emitter"));
        }
        if positions.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::domain("positions must be finite"));
        }
        Ok(EmitterChain { positions, active })
    }

    /// Chain on the z-axis with every emitter active.
    pub fn from_axial_positions(z: &[f64]) -> Result<Self> {
        let positions = z.iter().map(|&zi| Vector3::new(0.0, 0.0, zi)).collect();
        EmitterChain::new(positions, vec![true; z.len()])
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn n_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn active_mask(&self) -> &[bool] {
        &self.active
    }

    pub fn active_positions(&self) -> impl Iterator<Item = &Vector3<f64>> {
        self.positions
            .iter()
            .zip(&self.active)
            .filter_map(|(p, &a)| a.then_some(p))
    }

    /// Same positions with a new active mask (element-wise AND with the
    /// current mask, so already-dark emitters stay dark).
    pub fn masked(&self, active: &[bool]) -> Result<Self> {
        if active.len() != self.len() {
            return Err(Error::domain("mask length mismatch"));
        }
        let combined = self
            .active
            .iter()
            .zip(active)
            .map(|(&a, &b)| a && b)
            .collect();
        EmitterChain::new(self.positions.clone(), combined)
    }

    /// End-to-end extent along z, m.
    pub fn axial_span(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in &self.positions {
            lo = lo.min(p.z);
            hi = hi.max(p.z);
        }
        if self.positions.len() < 2 {
            0.0
        } else {
            hi - lo
        }
    }

    /// Smallest distance between neighbouring emitters (positions sorted by z).
    pub fn min_spacing(&self) -> f64 {
        let mut z: Vec<f64> = self.positions.iter().map(|p| p.z).collect();
        z.sort_by(|a, b| a.partial_cmp(b).unwrap());
        z.windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Dimensionless potential V(u) = Σ u²/2 + Σ_{m<n} 1/|u_m − u_n|.
fn chain_energy(u: &[f64]) -> f64 {
    let mut v = 0.5 * u.iter().map(|x| x * x).sum::<f64>();
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            v += 1.0 / (u[i] - u[j]).abs();
        }
    }
    v
}

fn chain_gradient(u: &[f64], grad: &mut [f64]) {
    grad.copy_from_slice(u);
    for i in 0..u.len() {
        for j in 0..u.len() {
            if i != j {
                let d = u[i] - u[j];
                grad[i] -= d.signum() / (d * d);
            }
        }
    }
}

fn gradient_inf_norm(u: &[f64]) -> f64 {
    let mut g = vec![0.0; u.len()];
    chain_gradient(u, &mut g);
    g.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

const SOLVER_TOL: f64 = 1e-12;
const SOLVER_MAX_ITER: usize = 250;

/// Dimensionless equilibrium positions for N ions, sorted ascending.
///
/// Damped Newton iteration on ∇V, started from a uniform grid of span
/// ∝ N^0.87. Converges to ‖∇V‖∞ < 1e-12 for the chain lengths this crate
/// targets (N ≤ 100).
pub fn dimensionless_equilibrium(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::domain("ion count must be at least 1"));
    }
    if n == 1 {
        return Ok(vec![0.0]);
    }
    let span = 0.75 * (n as f64).powf(0.87);
    let mut u: Vec<f64> = (0..n)
        .map(|i| span * (2.0 * i as f64 / (n as f64 - 1.0) - 1.0))
        .collect();

    let mut grad = vec![0.0; n];
    for iter in 0..SOLVER_MAX_ITER {
        chain_gradient(&u, &mut grad);
        let res = grad.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if res < SOLVER_TOL {
            return Ok(u);
        }

        // Hessian: H_ii = 1 + Σ 2/|d|³, H_ij = −2/|d|³
        let mut h = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            let mut diag = 1.0;
            for j in 0..n {
                if i != j {
                    let c = 2.0 / (u[i] - u[j]).abs().powi(3);
                    h[(i, j)] = -c;
                    diag += c;
                }
            }
            h[(i, i)] = diag;
        }
        let g = DVector::from_column_slice(&grad);
        let step = h.lu().solve(&g).ok_or(Error::SolverNonConvergence {
            n,
            iterations: iter,
            residual: res,
        })?;

        // Backtracking line search keeping the ordering intact. Near the
        // minimum the energy differences underflow, so once the residual is
        // small the pure Newton step is taken on ordering alone (local
        // quadratic convergence).
        let e0 = chain_energy(&u);
        let quadratic_regime = res < 1e-6;
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = u
                .iter()
                .zip(step.iter())
                .map(|(ui, si)| ui - alpha * si)
                .collect();
            let ordered = trial.windows(2).all(|w| w[1] > w[0]);
            if ordered && (quadratic_regime || chain_energy(&trial) <= e0) {
                u = trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::SolverNonConvergence {
                n,
                iterations: iter,
                residual: res,
            });
        }
    }
    Err(Error::SolverNonConvergence {
        n,
        iterations: SOLVER_MAX_ITER,
        residual: gradient_inf_norm(&u),
    })
}

/// Equilibrium chain for N ions in the given trap, on the z-axis, sorted
/// ascending and symmetric about the origin. All emitters active.
pub fn equilibrium_positions(n: usize, trap: &TrapParams) -> Result<EmitterChain> {
    let u = dimensionless_equilibrium(n)?;
    let ell = length_scale(trap);
    let z: Vec<f64> = u.iter().map(|ui| ui * ell).collect();
    EmitterChain::from_axial_positions(&z)
}

/// Gaussian position jitter, zero mean, one RMS width per Cartesian axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterModel {
    /// RMS displacement per axis, m.
    pub rms_width: [f64; 3],
    pub seed: u64,
}

impl JitterModel {
    /// Same RMS on all three axes, lumping radial and axial thermal
    /// fluctuations into a single figure.
    pub fn isotropic(rms_width: f64, seed: u64) -> Result<Self> {
        JitterModel::per_axis([rms_width; 3], seed)
    }

    pub fn per_axis(rms_width: [f64; 3], seed: u64) -> Result<Self> {
        if rms_width.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::domain("jitter rms_width must be >= 0 and finite"));
        }
        Ok(JitterModel { rms_width, seed })
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Independent zero-mean Gaussian displacement of every coordinate.
/// The input chain and its active mask are untouched.
pub fn sample_jitter<R: Rng + ?Sized>(
    chain: &EmitterChain,
    model: &JitterModel,
    rng: &mut R,
) -> EmitterChain {
    let dists: Vec<Option<Normal<f64>>> = model
        .rms_width
        .iter()
        .map(|&r| (r > 0.0).then(|| Normal::new(0.0, r).expect("validated rms")))
        .collect();
    let positions = chain
        .positions()
        .iter()
        .map(|p| {
            let mut q = *p;
            for (axis, dist) in dists.iter().enumerate() {
                if let Some(d) = dist {
                    q[axis] += d.sample(rng);
                }
            }
            q
        })
        .collect();
    EmitterChain {
        positions,
        active: chain.active.clone(),
    }
}

/// Dark-ion model: each emitter is shelved (removed from all sums) with
/// probability `dark_probability`, independently per realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarkIonModel {
    pub dark_probability: f64,
    pub seed: u64,
}

impl DarkIonModel {
    pub fn new(dark_probability: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&dark_probability) {
            return Err(Error::domain("dark_probability must be in [0, 1]"));
        }
        Ok(DarkIonModel {
            dark_probability,
            seed,
        })
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Active mask with each emitter independently dark with probability p_dark.
/// `true` means the emitter scatters.
pub fn sample_dark_mask<R: Rng + ?Sized>(n: usize, model: &DarkIonModel, rng: &mut R) -> Vec<bool> {
    (0..n)
        .map(|_| rng.gen::<f64>() >= model.dark_probability)
        .collect()
}
