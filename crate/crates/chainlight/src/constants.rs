//! Physical constants and ⁴⁰Ca⁺ defaults.

use std::f64::consts::TAU;

/// Elementary charge, C (exact SI).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Vacuum permittivity, F/m (CODATA 2018).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Atomic mass constant, kg (CODATA 2018).
pub const ATOMIC_MASS_KG: f64 = 1.660_539_066_60e-27;

/// ⁴⁰Ca⁺ ion mass in atomic mass units (neutral 39.962590863 u minus one
/// electron mass).
pub const CA40_ION_MASS_U: f64 = 39.962_042_283_090_94;

/// ⁴⁰Ca⁺ ion mass, kg.
pub const CA40_ION_MASS_KG: f64 = CA40_ION_MASS_U * ATOMIC_MASS_KG;

/// Natural linewidth of the 4²S₁/₂ ↔ 4²P₁/₂ transition, rad/s.
pub const CA40_LINEWIDTH: f64 = TAU * 21.2e6;

/// Wavelength of the 397 nm transition, m.
pub const CA40_WAVELENGTH: f64 = 397e-9;

/// Transition wavenumber 2π/λ, 1/m.
pub const CA40_WAVENUMBER: f64 = TAU / CA40_WAVELENGTH;

/// Default detection numerical aperture (axial electrode aperture).
pub const DEFAULT_NA: f64 = 0.07;

/// Default axial trap frequency cap, rad/s.
pub const DEFAULT_AXIAL_FREQUENCY_CAP: f64 = TAU * 1.1e6;
