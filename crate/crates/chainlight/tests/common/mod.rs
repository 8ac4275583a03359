#![allow(dead_code)] // each test crate uses a subset

//! Shared brute-force oracles for integration tests: explicit tensor-product
//! density matrices and operator algebra, fully independent of the library's
//! summation formulas.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

fn eye(n: usize) -> DMatrix<C64> {
    DMatrix::identity(n, n)
}

/// σ⁻ = |g⟩⟨e| in basis order (e, g).
fn sm2() -> DMatrix<C64> {
    DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ],
    )
}

/// Single-atom steady-state density matrix for drive phase k_L·r = `phi_l`
/// (resonant convention; the coherence magnitude depends only on s).
fn rho_atom(phi_l: f64, s: f64) -> DMatrix<C64> {
    let amp = (s / 2.0).sqrt() / (1.0 + s);
    // Tr(σ⁻ρ) = ρ_eg = ⟨e|ρ|g⟩ = −i e^{iφ_L}·amp
    let rho_eg = -C64::i() * C64::new(0.0, phi_l).exp() * amp;
    // row-major entries: (e,e), (e,g), (g,e), (g,g)
    DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(s / (2.0 * (1.0 + s)), 0.0),
            rho_eg,
            rho_eg.conj(),
            C64::new((2.0 + s) / (2.0 * (1.0 + s)), 0.0),
        ],
    )
}

/// Embed a single-atom operator at site `a` of an N-atom register.
pub fn embed(op: &DMatrix<C64>, a: usize, n: usize) -> DMatrix<C64> {
    let mut out = DMatrix::identity(1, 1);
    for i in 0..n {
        out = if i == a {
            kron(&out, op)
        } else {
            kron(&out, &eye(2))
        };
    }
    out
}

/// Product steady state ⊗_a ρ_a with per-atom drive phases.
pub fn product_state(drive_phases: &[f64], s: f64) -> DMatrix<C64> {
    let mut rho = DMatrix::identity(1, 1);
    for &phi in drive_phases {
        rho = kron(&rho, &rho_atom(phi, s));
    }
    rho
}

/// E⁺ = Σ_a e^{−iφ_obs,a} σ_a⁻ on the N-atom register.
pub fn field_operator(obs_phases: &[f64]) -> DMatrix<C64> {
    let n = obs_phases.len();
    let mut e = DMatrix::zeros(1 << n, 1 << n);
    for (a, &phi) in obs_phases.iter().enumerate() {
        e += embed(&sm2(), a, n) * C64::new(0.0, -phi).exp();
    }
    e
}

fn trace(m: &DMatrix<C64>) -> C64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// Equal-time intensity and g²(0) by explicit operator algebra on the
/// 2^N-dimensional product state.
pub fn g2_zero_oracle(drive_phases: &[f64], obs_phases: &[f64], s: f64) -> (f64, f64) {
    let rho = product_state(drive_phases, s);
    let ep = field_operator(obs_phases);
    let em = ep.adjoint();
    let i = trace(&(&em * &ep * &rho)).re;
    let g2 = trace(&(&em * &em * &ep * &ep * &rho)).re;
    (i, g2 / (i * i))
}

/// Full N-atom Liouvillian with explicit drive phases (lab frame), acting on
/// column-stacked density operators.
pub fn liouvillian_full(
    drive_phases: &[f64],
    rabi: f64,
    detuning: f64,
    gamma: f64,
) -> DMatrix<C64> {
    let n = drive_phases.len();
    let dim = 1usize << n;
    let mut h = DMatrix::<C64>::zeros(dim, dim);
    for (a, &phi) in drive_phases.iter().enumerate() {
        let sma = embed(&sm2(), a, n);
        let spa = sma.adjoint();
        let pop = &spa * &sma;
        h += pop * C64::new(-detuning, 0.0);
        h += &spa * (C64::new(0.0, phi).exp() * C64::new(0.5 * rabi, 0.0));
        h += &sma * (C64::new(0.0, -phi).exp() * C64::new(0.5 * rabi, 0.0));
    }
    let id = eye(dim);
    let mut l = (kron(&id, &h) - kron(&h.transpose(), &id)) * (-C64::i());
    for a in 0..n {
        let sma = embed(&sm2(), a, n);
        let pop = sma.adjoint() * &sma;
        l += (kron(&sma.map(|c| c.conj()), &sma)
            - (kron(&id, &pop) + kron(&pop.transpose(), &id)) * C64::new(0.5, 0.0))
            * C64::new(gamma, 0.0);
    }
    l
}

pub fn vec_op(m: &DMatrix<C64>) -> DMatrix<C64> {
    let dim = m.nrows();
    let mut v = DMatrix::zeros(dim * dim, 1);
    for col in 0..dim {
        for row in 0..dim {
            v[(col * dim + row, 0)] = m[(row, col)];
        }
    }
    v
}

pub fn unvec_op(v: &DMatrix<C64>, dim: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        for row in 0..dim {
            m[(row, col)] = v[(col * dim + row, 0)];
        }
    }
    m
}

/// g²(τ) by explicit quantum regression on the full register:
/// Tr[E⁻E⁺ e^{𝓛τ}(E⁺ ρ_ss E⁻)] / I².
pub fn g2_tau_oracle(
    drive_phases: &[f64],
    obs_phases: &[f64],
    rabi: f64,
    detuning: f64,
    gamma: f64,
    tau: f64,
) -> f64 {
    let n = drive_phases.len();
    let dim = 1usize << n;
    let l = liouvillian_full(drive_phases, rabi, detuning, gamma);

    // steady state by long evolution from the ground state
    let relax = (l.clone() * C64::new(600.0 / gamma, 0.0)).exp();
    let mut ground = DMatrix::<C64>::zeros(dim, dim);
    ground[(dim - 1, dim - 1)] = C64::new(1.0, 0.0);
    let rho_ss = unvec_op(&(&relax * vec_op(&ground)), dim);

    let ep = field_operator(obs_phases);
    let em = ep.adjoint();
    let i = trace(&(&em * &ep * &rho_ss)).re;

    let seed = &ep * &rho_ss * &em;
    let prop = (l * C64::new(tau, 0.0)).exp();
    let evolved = unvec_op(&(&prop * vec_op(&seed)), dim);
    let g2 = trace(&(&em * &ep * &evolved)).re;
    g2 / (i * i)
}
