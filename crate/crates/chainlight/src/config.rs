//! Config-file schema, unit-quantity parsing, validation, and the resolved
//! echo that doubles as the reproducibility manifest.
//!
//! The document is TOML with one schema for both user configs and emitted
//! manifests: `resolve()` fills every default, canonicalizes quantities, and
//! the canonical form re-parses to bit-identical values. Frequencies, lengths
//! and times require an explicit unit suffix; bare numbers are unit errors.

use std::fmt;

use nalgebra::{Unit, Vector3};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::constants;
use crate::emitter::DriveParams;
use crate::geometry::{DarkIonModel, JitterModel, TrapParams};
use crate::montecarlo::Estimator;
use crate::{Error, Result};

const TWO_PI: f64 = std::f64::consts::TAU;

/// Parse "<number> <unit>" with an explicit unit from `units`; returns the
/// value scaled to SI by the matched factor.
fn parse_quantity(text: &str, units: &[(&str, f64)], what: &str) -> Result<f64> {
    let t = text.trim();
    // longest-suffix match so "rad/s" wins over "s"
    let mut best: Option<(&str, f64)> = None;
    for &(u, f) in units {
        if t.ends_with(u) {
            match best {
                Some((b, _)) if b.len() >= u.len() => {}
                _ => best = Some((u, f)),
            }
        }
    }
    let (unit, factor) = best.ok_or_else(|| {
        Error::config(format!(
            "{what} '{text}' needs an explicit unit suffix (one of: {})",
            units.iter().map(|(u, _)| *u).collect::<Vec<_>>().join(", ")
        ))
    })?;
    let num = t[..t.len() - unit.len()].trim();
    if num.is_empty() {
        return Err(Error::config(format!(
            "{what} '{text}' is missing a number"
        )));
    }
    let value: f64 = num
        .parse()
        .map_err(|_| Error::config(format!("{what} '{text}': '{num}' is not a number")))?;
    let scaled = value * factor;
    if !value.is_finite() || !scaled.is_finite() {
        return Err(Error::config(format!("{what} '{text}' must be finite")));
    }
    Ok(scaled)
}

const FREQUENCY_UNITS: &[(&str, f64)] = &[
    ("GHz", TWO_PI * 1e9),
    ("MHz", TWO_PI * 1e6),
    ("kHz", TWO_PI * 1e3),
    ("Hz", TWO_PI),
    ("Grad/s", 1e9),
    ("Mrad/s", 1e6),
    ("krad/s", 1e3),
    ("rad/s", 1.0),
];

const LENGTH_UNITS: &[(&str, f64)] = &[
    ("pm", 1e-12),
    ("nm", 1e-9),
    ("um", 1e-6),
    ("µm", 1e-6),
    ("mm", 1e-3),
    ("cm", 1e-2),
    ("m", 1.0),
];

const TIME_UNITS: &[(&str, f64)] = &[
    ("ps", 1e-12),
    ("ns", 1e-9),
    ("us", 1e-6),
    ("µs", 1e-6),
    ("ms", 1e-3),
    ("s", 1.0),
];

const ANGLE_UNITS: &[(&str, f64)] = &[
    ("deg", std::f64::consts::PI / 180.0),
    ("mrad", 1e-3),
    ("rad", 1.0),
];

/// Angular frequency in rad/s; written canonically as "<value> rad/s".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frequency(pub f64);

/// Length in meters; canonical "<value> m".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthQ(pub f64);

/// Time in seconds; canonical "<value> s".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeQ(pub f64);

pub fn parse_frequency(text: &str) -> Result<f64> {
    parse_quantity(text, FREQUENCY_UNITS, "frequency")
}

pub fn parse_length(text: &str) -> Result<f64> {
    parse_quantity(text, LENGTH_UNITS, "length")
}

pub fn parse_time(text: &str) -> Result<f64> {
    parse_quantity(text, TIME_UNITS, "time")
}

pub fn parse_angle(text: &str) -> Result<f64> {
    parse_quantity(text, ANGLE_UNITS, "angle")
}

macro_rules! quantity_serde {
    ($ty:ident, $parse:ident, $unit:literal) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.serialize_str(&format!(concat!("{} ", $unit), self.0))
            }
        }
        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let text = String::deserialize(d)?;
                $parse(&text).map($ty).map_err(D::Error::custom)
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!("{} ", $unit), self.0)
            }
        }
    };
}

quantity_serde!(Frequency, parse_frequency, "rad/s");
quantity_serde!(LengthQ, parse_length, "m");
quantity_serde!(TimeQ, parse_time, "s");

/// One RMS width or a per-axis triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JitterSpec {
    Isotropic(LengthQ),
    PerAxis([LengthQ; 3]),
}

/// Observation placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservationMode {
    /// Exactly along the drive beam; every interference phase vanishes.
    Forward,
    /// Along +z, the chain axis.
    Axial,
    /// Explicit direction vector.
    Fixed,
    /// Intensity maximum inside the detection cone at the configured trap
    /// frequency.
    ConeMax,
    /// Intensity minimum inside the detection cone.
    ConeMin,
    /// On-axis detection with the trap frequency tuned inside
    /// `tuning_range` to an intensity maximum (how the experiment reaches a
    /// constructive point).
    Constructive,
    /// Same, tuned to an intensity minimum.
    Destructive,
    /// Speckle-conditioned constructive ensemble (identical emitters,
    /// noise-free).
    SpeckleConstructive,
    /// Observation polar angle is the swept parameter.
    AngleScan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorName {
    RatioOfAverages,
    AverageOfRatios,
}

impl From<EstimatorName> for Estimator {
    fn from(e: EstimatorName) -> Self {
        match e {
            EstimatorName::RatioOfAverages => Estimator::RatioOfAverages,
            EstimatorName::AverageOfRatios => Estimator::AverageOfRatios,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameterName {
    AxialFrequency,
    IonNumber,
    Saturation,
    ObservationAngle,
}

/// Sweep value as written: number, or quantity string for unit-bearing
/// parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Number(f64),
    Quantity(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    pub axial_frequency: Option<Frequency>,
    pub ion_mass_amu: Option<f64>,
    pub ion_charge_e: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    pub saturation: Option<f64>,
    pub rabi_frequency: Option<Frequency>,
    pub detuning: Option<Frequency>,
    pub linewidth: Option<Frequency>,
    pub direction: Option<[f64; 3]>,
    pub wavelength: Option<LengthQ>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ObservationSection {
    pub mode: Option<ObservationMode>,
    pub direction: Option<[f64; 3]>,
    pub numerical_aperture: Option<f64>,
    /// Trap-frequency window searched by the constructive/destructive
    /// tuning heuristic.
    pub tuning_range: Option<[Frequency; 2]>,
    /// Accepted samples for the speckle-constructive estimator.
    pub speckle_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub realizations: Option<usize>,
    pub jitter_rms: Option<JitterSpec>,
    pub jitter_seed: Option<u64>,
    pub dark_probability: Option<f64>,
    pub dark_seed: Option<u64>,
    pub seed: Option<u64>,
    pub estimator: Option<EstimatorName>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DetectionSection {
    pub efficiency: Option<f64>,
    pub bin_time: Option<TimeQ>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: SweepValue,
    pub stop: SweepValue,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameterName,
    pub values: Option<Vec<SweepValue>>,
    pub range: Option<RangeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemporalSection {
    pub tau_max: Option<TimeQ>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: Option<String>,
    pub basename: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub tool: Option<String>,
    pub version: Option<String>,
    pub command: Option<String>,
    pub preset: Option<String>,
}

/// The config document. One schema serves user input and the emitted
/// manifest; unknown keys are rejected everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub ions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trap: Option<TrapSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<ObservationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temporal: Option<TemporalSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

/// Fully validated, strongly typed run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub ions: usize,
    pub trap: TrapParams,
    pub drive: DriveParams,
    pub mode: ObservationMode,
    pub fixed_direction: Option<Unit<Vector3<f64>>>,
    pub numerical_aperture: f64,
    pub tuning_range: [f64; 2],
    pub speckle_samples: usize,
    pub realizations: usize,
    pub jitter: JitterModel,
    pub dark: DarkIonModel,
    pub master_seed: u64,
    pub estimator: Estimator,
    pub detection_efficiency: f64,
    pub bin_time: f64,
    pub sweep: Option<ResolvedSweep>,
    pub temporal: Option<ResolvedTemporal>,
    pub out_directory: String,
    pub basename: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedSweep {
    pub parameter: SweepParameterName,
    /// SI values: rad/s, count, dimensionless, rad.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedTemporal {
    pub tau_max: f64,
    pub points: usize,
}

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CHAINLIGHT_OUT_DIR";

fn default_out_dir() -> String {
    std::env::var(OUT_DIR_ENV).unwrap_or_else(|_| "out".to_string())
}

impl RunConfig {
    /// Parse a TOML document. Errors carry the parser's line/column.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::config(e.to_string()))
    }

    /// Validate, fill every default, and canonicalize. Returns the canonical
    /// document (the manifest body) plus the typed parameters. Resolution is
    /// idempotent: resolving the canonical document reproduces it exactly.
    pub fn resolve(&self) -> Result<(RunConfig, Resolved)> {
        let ions = self
            .ions
            .ok_or_else(|| Error::config("missing required key 'ions'"))?;
        if ions == 0 || ions > 1000 {
            return Err(Error::config("'ions' must be in 1..=1000"));
        }

        // trap
        let trap_in = self.trap.clone().unwrap_or_default();
        let axial_frequency = trap_in
            .axial_frequency
            .map(|f| f.0)
            .unwrap_or(TWO_PI * 1.1e6);
        let ion_mass_amu = trap_in.ion_mass_amu.unwrap_or(constants::CA40_ION_MASS_U);
        let ion_charge_e = trap_in.ion_charge_e.unwrap_or(1.0);
        let trap = TrapParams::new(
            axial_frequency,
            ion_mass_amu * constants::ATOMIC_MASS_KG,
            ion_charge_e * constants::ELEMENTARY_CHARGE,
        )?;

        // drive
        let drive_in = self.drive.clone().unwrap_or_default();
        if drive_in.saturation.is_some() && drive_in.rabi_frequency.is_some() {
            return Err(Error::config(
                "drive is over-determined: give either 'saturation' or 'rabi_frequency', not both",
            ));
        }
        let detuning = drive_in.detuning.map(|f| f.0).unwrap_or(-TWO_PI * 12e6);
        let linewidth = drive_in
            .linewidth
            .map(|f| f.0)
            .unwrap_or(constants::CA40_LINEWIDTH);
        let direction_raw = drive_in.direction.unwrap_or([
            std::f64::consts::FRAC_1_SQRT_2,
            0.0,
            std::f64::consts::FRAC_1_SQRT_2,
        ]);
        let dir_vec = Vector3::new(direction_raw[0], direction_raw[1], direction_raw[2]);
        if !dir_vec.iter().all(|c| c.is_finite()) || dir_vec.norm() == 0.0 {
            return Err(Error::config(
                "drive.direction must be a finite non-zero vector",
            ));
        }
        let drive_direction = Unit::new_normalize(dir_vec);
        let wavelength = drive_in
            .wavelength
            .map(|l| l.0)
            .unwrap_or(constants::CA40_WAVELENGTH);
        if wavelength <= 0.0 {
            return Err(Error::config("drive.wavelength must be positive"));
        }
        let wavenumber = TWO_PI / wavelength;
        let drive = match drive_in.rabi_frequency {
            Some(omega) => {
                DriveParams::new(omega.0, detuning, linewidth, drive_direction, wavenumber)?
            }
            None => {
                let s = drive_in.saturation.unwrap_or(0.6);
                DriveParams::from_saturation(s, detuning, linewidth, drive_direction, wavenumber)?
            }
        };

        // observation
        let obs_in = self.observation.clone().unwrap_or_default();
        let sweep_in = self.sweep.clone();
        let default_mode = if sweep_in
            .as_ref()
            .map(|s| s.parameter == SweepParameterName::ObservationAngle)
            .unwrap_or(false)
        {
            ObservationMode::AngleScan
        } else {
            ObservationMode::Axial
        };
        let mode = obs_in.mode.unwrap_or(default_mode);
        let numerical_aperture = obs_in.numerical_aperture.unwrap_or(constants::DEFAULT_NA);
        if numerical_aperture.is_nan() || numerical_aperture <= 0.0 || numerical_aperture >= 1.0 {
            return Err(Error::config(
                "observation.numerical_aperture must be in (0, 1)",
            ));
        }
        let fixed_direction = match (mode, obs_in.direction) {
            (ObservationMode::Fixed, Some(d)) => {
                let v = Vector3::new(d[0], d[1], d[2]);
                if !v.iter().all(|c| c.is_finite()) || v.norm() == 0.0 {
                    return Err(Error::config(
                        "observation.direction must be a finite non-zero vector",
                    ));
                }
                Some(Unit::new_normalize(v))
            }
            (ObservationMode::Fixed, None) => {
                return Err(Error::config(
                    "observation.mode = \"fixed\" requires observation.direction",
                ))
            }
            (_, Some(_)) => {
                return Err(Error::config(
                    "observation.direction is only valid with observation.mode = \"fixed\"",
                ))
            }
            (_, None) => None,
        };
        let tuning_range = match obs_in.tuning_range {
            Some([lo, hi]) => {
                if lo.0 <= 0.0 || hi.0 <= lo.0 {
                    return Err(Error::config(
                        "observation.tuning_range must be an increasing positive pair",
                    ));
                }
                [lo.0, hi.0]
            }
            None => [0.55 * axial_frequency, axial_frequency],
        };
        let speckle_samples = obs_in.speckle_samples.unwrap_or(3000);
        if speckle_samples == 0 || speckle_samples > 10_000_000 {
            return Err(Error::config(
                "observation.speckle_samples must be in 1..=1e7",
            ));
        }
        if mode == ObservationMode::AngleScan
            && sweep_in
                .as_ref()
                .map(|s| s.parameter != SweepParameterName::ObservationAngle)
                .unwrap_or(true)
        {
            return Err(Error::config(
                "observation.mode = \"angle-scan\" requires a sweep over observation_angle",
            ));
        }
        if mode != ObservationMode::AngleScan
            && sweep_in
                .as_ref()
                .map(|s| s.parameter == SweepParameterName::ObservationAngle)
                .unwrap_or(false)
        {
            return Err(Error::config(
                "a sweep over observation_angle requires observation.mode = \"angle-scan\"",
            ));
        }

        // ensemble
        let ens_in = self.ensemble.clone().unwrap_or_default();
        let realizations = ens_in.realizations.unwrap_or(1000);
        if realizations == 0 || realizations > 10_000_000 {
            return Err(Error::config("ensemble.realizations must be in 1..=1e7"));
        }
        let jitter_rms = match ens_in.jitter_rms.clone() {
            Some(JitterSpec::Isotropic(l)) => [l.0; 3],
            Some(JitterSpec::PerAxis(a)) => [a[0].0, a[1].0, a[2].0],
            None => [70e-9; 3],
        };
        let jitter = JitterModel::per_axis(jitter_rms, ens_in.jitter_seed.unwrap_or(0))?;
        let dark_probability = ens_in.dark_probability.unwrap_or(0.4);
        let dark = DarkIonModel::new(dark_probability, ens_in.dark_seed.unwrap_or(0))?;
        let master_seed = ens_in.seed.unwrap_or(1);
        let estimator_name = ens_in.estimator.unwrap_or(EstimatorName::RatioOfAverages);

        // detection
        let det_in = self.detection.clone().unwrap_or_default();
        let detection_efficiency = det_in.efficiency.unwrap_or(1.0);
        if detection_efficiency.is_nan()
            || detection_efficiency <= 0.0
            || detection_efficiency > 1.0
        {
            return Err(Error::config("detection.efficiency must be in (0, 1]"));
        }
        let bin_time = det_in.bin_time.map(|t| t.0).unwrap_or(1.0 / linewidth);
        if bin_time <= 0.0 {
            return Err(Error::config("detection.bin_time must be positive"));
        }

        // sweep
        let sweep = match &sweep_in {
            None => None,
            Some(sw) => {
                let values = resolve_sweep_values(sw)?;
                if values.is_empty() {
                    return Err(Error::config("sweep values must be non-empty"));
                }
                if sw.parameter == SweepParameterName::AxialFrequency {
                    for &v in &values {
                        if v > constants::DEFAULT_AXIAL_FREQUENCY_CAP * (1.0 + 1e-12) {
                            return Err(Error::config(format!(
                                "swept axial frequency {v:.6e} rad/s exceeds the 2π×1.1 MHz cap"
                            )));
                        }
                        if v <= 0.0 {
                            return Err(Error::config("swept axial frequencies must be positive"));
                        }
                    }
                }
                if sw.parameter == SweepParameterName::IonNumber {
                    for &v in &values {
                        if !(1.0..=1000.0).contains(&v) || v.fract() != 0.0 {
                            return Err(Error::config(
                                "ion_number sweep values must be integers in 1..=1000",
                            ));
                        }
                    }
                }
                Some(ResolvedSweep {
                    parameter: sw.parameter,
                    values,
                })
            }
        };
        if sweep.is_some() && self.temporal.is_some() {
            return Err(Error::config(
                "temporal output is single-run only; remove either [sweep] or [temporal]",
            ));
        }

        // temporal
        let temporal = match &self.temporal {
            None => None,
            Some(t) => {
                let tau_max = t.tau_max.map(|x| x.0).unwrap_or(60e-9);
                let points = t.points.unwrap_or(601);
                if tau_max <= 0.0 {
                    return Err(Error::config("temporal.tau_max must be positive"));
                }
                if points < 2 {
                    return Err(Error::config("temporal.points must be at least 2"));
                }
                Some(ResolvedTemporal { tau_max, points })
            }
        };

        // output
        let out_in = self.output.clone().unwrap_or_default();
        let out_directory = out_in.directory.unwrap_or_else(default_out_dir);
        let basename = out_in.basename.unwrap_or_else(|| "run".to_string());
        if basename.is_empty() || basename.contains(['/', '\\']) {
            return Err(Error::config("output.basename must be a bare file stem"));
        }

        let resolved = Resolved {
            ions,
            trap,
            drive: drive.clone(),
            mode,
            fixed_direction,
            numerical_aperture,
            tuning_range,
            speckle_samples,
            realizations,
            jitter,
            dark,
            master_seed,
            estimator: estimator_name.into(),
            detection_efficiency,
            bin_time,
            sweep: sweep.clone(),
            temporal: temporal.clone(),
            out_directory: out_directory.clone(),
            basename: basename.clone(),
        };

        // canonical echo: every field explicit, quantities in SI units
        let canonical = RunConfig {
            ions: Some(ions),
            trap: Some(TrapSection {
                axial_frequency: Some(Frequency(axial_frequency)),
                ion_mass_amu: Some(ion_mass_amu),
                ion_charge_e: Some(ion_charge_e),
            }),
            drive: Some(DriveSection {
                saturation: None,
                rabi_frequency: Some(Frequency(drive.rabi_frequency)),
                detuning: Some(Frequency(detuning)),
                linewidth: Some(Frequency(linewidth)),
                direction: Some([drive_direction.x, drive_direction.y, drive_direction.z]),
                wavelength: Some(LengthQ(wavelength)),
            }),
            observation: Some(ObservationSection {
                mode: Some(mode),
                direction: fixed_direction.map(|d| [d.x, d.y, d.z]),
                numerical_aperture: Some(numerical_aperture),
                tuning_range: Some([Frequency(tuning_range[0]), Frequency(tuning_range[1])]),
                speckle_samples: Some(speckle_samples),
            }),
            ensemble: Some(EnsembleSection {
                realizations: Some(realizations),
                jitter_rms: Some(JitterSpec::PerAxis([
                    LengthQ(jitter_rms[0]),
                    LengthQ(jitter_rms[1]),
                    LengthQ(jitter_rms[2]),
                ])),
                jitter_seed: Some(resolved.jitter.seed),
                dark_probability: Some(dark_probability),
                dark_seed: Some(resolved.dark.seed),
                seed: Some(master_seed),
                estimator: Some(estimator_name),
            }),
            detection: Some(DetectionSection {
                efficiency: Some(detection_efficiency),
                bin_time: Some(TimeQ(bin_time)),
            }),
            sweep: sweep.as_ref().map(|sw| SweepSection {
                parameter: sw.parameter,
                values: Some(
                    sw.values
                        .iter()
                        .map(|&v| canonical_value(sw.parameter, v))
                        .collect(),
                ),
                range: None,
            }),
            temporal: temporal.as_ref().map(|t| TemporalSection {
                tau_max: Some(TimeQ(t.tau_max)),
                points: Some(t.points),
            }),
            output: Some(OutputSection {
                directory: Some(out_directory),
                basename: Some(basename),
            }),
            provenance: self.provenance.clone(),
        };

        Ok((canonical, resolved))
    }
}

fn canonical_value(parameter: SweepParameterName, v: f64) -> SweepValue {
    match parameter {
        SweepParameterName::AxialFrequency => SweepValue::Quantity(format!("{v} rad/s")),
        SweepParameterName::ObservationAngle => SweepValue::Quantity(format!("{v} rad")),
        _ => SweepValue::Number(v),
    }
}

fn sweep_value_si(parameter: SweepParameterName, v: &SweepValue) -> Result<f64> {
    match (parameter, v) {
        (SweepParameterName::AxialFrequency, SweepValue::Quantity(q)) => parse_frequency(q),
        (SweepParameterName::AxialFrequency, SweepValue::Number(_)) => Err(Error::config(
            "axial_frequency sweep values need an explicit unit (e.g. \"0.8 MHz\")",
        )),
        (SweepParameterName::ObservationAngle, SweepValue::Quantity(q)) => parse_angle(q),
        (SweepParameterName::ObservationAngle, SweepValue::Number(n)) => Ok(*n),
        (_, SweepValue::Number(n)) => Ok(*n),
        (p, SweepValue::Quantity(q)) => Err(Error::config(format!(
            "sweep parameter {p:?} takes plain numbers, got '{q}'"
        ))),
    }
}

fn resolve_sweep_values(sw: &SweepSection) -> Result<Vec<f64>> {
    match (&sw.values, &sw.range) {
        (Some(_), Some(_)) => Err(Error::config(
            "give either sweep.values or sweep.range, not both",
        )),
        (None, None) => Err(Error::config("sweep needs sweep.values or sweep.range")),
        (Some(vals), None) => vals
            .iter()
            .map(|v| sweep_value_si(sw.parameter, v))
            .collect(),
        (None, Some(r)) => {
            if r.points < 2 {
                return Err(Error::config("sweep.range.points must be at least 2"));
            }
            if r.points > 1_000_000 {
                return Err(Error::config("sweep.range.points is limited to 1e6"));
            }
            let start = sweep_value_si(sw.parameter, &r.start)?;
            let stop = sweep_value_si(sw.parameter, &r.stop)?;
            Ok((0..r.points)
                .map(|i| start + (stop - start) * i as f64 / (r.points - 1) as f64)
                .collect())
        }
    }
}

/// Load and resolve a config file.
pub fn load_config(path: &std::path::Path) -> Result<(RunConfig, Resolved)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read config '{}': {e}", path.display())))?;
    let raw = RunConfig::from_toml_str(&text)?;
    raw.resolve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quantity_parsing_units() {
        assert_relative_eq!(parse_frequency("21.2 MHz").unwrap(), TWO_PI * 21.2e6);
        assert_relative_eq!(parse_frequency("1.1MHz").unwrap(), TWO_PI * 1.1e6);
        assert_relative_eq!(parse_frequency("-12 MHz").unwrap(), -TWO_PI * 12e6);
        assert_relative_eq!(parse_frequency("6.9e6 rad/s").unwrap(), 6.9e6);
        assert_relative_eq!(parse_frequency("2 krad/s").unwrap(), 2e3);
        assert_relative_eq!(parse_length("70 nm").unwrap(), 70e-9);
        assert_relative_eq!(parse_length("4.2 um").unwrap(), 4.2e-6);
        assert_relative_eq!(parse_time("60 ns").unwrap(), 60e-9);
        assert_relative_eq!(parse_angle("90 deg").unwrap(), std::f64::consts::FRAC_PI_2);
        // bare numbers are unit errors
        assert!(parse_frequency("21.2").is_err());
        assert!(parse_length("70").is_err());
        assert!(parse_frequency("MHz").is_err());
        assert!(parse_frequency("fast MHz").is_err());
        assert!(parse_frequency("inf Hz").is_err());
    }

    #[test]
    fn quantity_round_trip_is_exact() {
        for v in [6.911503837897545e6, 1.0, 0.1 + 0.2, f64::MIN_POSITIVE] {
            let f = Frequency(v);
            let text = f.to_string();
            assert_eq!(parse_frequency(&text).unwrap(), v, "via {text}");
        }
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = RunConfig::from_toml_str("ions = 4\n[drive]\nsaturation = 0.62\n").unwrap();
        let (canonical, resolved) = cfg.resolve().unwrap();
        assert_eq!(resolved.ions, 4);
        assert_relative_eq!(resolved.drive.saturation(), 0.62, epsilon = 1e-12);
        // Γ default echoed as 2π·21.2 MHz
        let echoed = canonical.drive.as_ref().unwrap().linewidth.unwrap().0;
        assert_relative_eq!(echoed, TWO_PI * 21.2e6);
        assert_relative_eq!(resolved.trap.axial_frequency, TWO_PI * 1.1e6);
        assert_eq!(resolved.realizations, 1000);
        assert_relative_eq!(resolved.jitter.rms_width[0], 70e-9);
        assert_relative_eq!(resolved.dark.dark_probability, 0.4);
        assert_eq!(resolved.mode, ObservationMode::Axial);
    }

    #[test]
    fn overdetermined_drive_rejected() {
        let cfg = RunConfig::from_toml_str(
            "ions = 2\n[drive]\nsaturation = 0.6\nrabi_frequency = \"10 MHz\"\n",
        )
        .unwrap();
        let err = cfg.resolve().unwrap_err();
        assert!(err.to_string().contains("over-determined"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected_with_location() {
        let err = RunConfig::from_toml_str("ions = 2\nbogus = 1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus"), "{msg}");
        let err = RunConfig::from_toml_str("ions = 2\n[drive]\nomega = \"1 MHz\"\n").unwrap_err();
        assert!(err.to_string().contains("omega"));
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = RunConfig::from_toml_str("ions = [[[").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn resolve_is_idempotent_and_round_trips() {
        let cfg = RunConfig::from_toml_str(
            "ions = 18\n[trap]\naxial_frequency = \"240 kHz\"\n[drive]\nsaturation = 0.6\n[sweep]\nparameter = \"ion_number\"\nvalues = [2, 4, 6]\n",
        )
        .unwrap();
        let (canonical, resolved) = cfg.resolve().unwrap();
        let text = canonical.to_toml_string().unwrap();
        let reparsed = RunConfig::from_toml_str(&text).unwrap();
        let (canonical2, resolved2) = reparsed.resolve().unwrap();
        assert_eq!(canonical, canonical2);
        assert_eq!(resolved, resolved2);
        assert_eq!(canonical2.to_toml_string().unwrap(), text);
    }

    #[test]
    fn n18_at_cap_is_accepted_and_span_reported() {
        let cfg =
            RunConfig::from_toml_str("ions = 18\n[trap]\naxial_frequency = \"1.1 MHz\"\n").unwrap();
        let (_, resolved) = cfg.resolve().unwrap();
        let chain = crate::geometry::equilibrium_positions(resolved.ions, &resolved.trap).unwrap();
        // the solver reports the honest span at this frequency (the reported
        // 94 um corresponds to the lower trap frequency used for N=18)
        assert!(chain.axial_span() > 30e-6 && chain.axial_span() < 40e-6);
    }

    #[test]
    fn sweep_validation() {
        // empty values rejected before any computation
        let cfg = RunConfig::from_toml_str(
            "ions = 4\n[sweep]\nparameter = \"saturation\"\nvalues = []\n",
        )
        .unwrap();
        assert!(cfg.resolve().is_err());
        // frequencies need units
        let cfg = RunConfig::from_toml_str(
            "ions = 4\n[sweep]\nparameter = \"axial_frequency\"\nvalues = [1000000.0]\n",
        )
        .unwrap();
        assert!(cfg.resolve().unwrap_err().to_string().contains("unit"));
        // cap enforced
        let cfg = RunConfig::from_toml_str(
            "ions = 4\n[sweep]\nparameter = \"axial_frequency\"\nvalues = [\"2 MHz\"]\n",
        )
        .unwrap();
        assert!(cfg.resolve().unwrap_err().to_string().contains("cap"));
        // range expansion
        let cfg = RunConfig::from_toml_str(
            "ions = 4\n[sweep]\nparameter = \"axial_frequency\"\nrange = { start = \"0.6 MHz\", stop = \"1.1 MHz\", points = 6 }\n",
        )
        .unwrap();
        let (_, resolved) = cfg.resolve().unwrap();
        let vals = resolved.sweep.unwrap().values;
        assert_eq!(vals.len(), 6);
        assert_relative_eq!(vals[0], TWO_PI * 0.6e6);
        assert_relative_eq!(vals[5], TWO_PI * 1.1e6, max_relative = 1e-12);
        // fractional ion numbers rejected
        let cfg = RunConfig::from_toml_str(
            "ions = 4\n[sweep]\nparameter = \"ion_number\"\nvalues = [2.5]\n",
        )
        .unwrap();
        assert!(cfg.resolve().is_err());
    }

    #[test]
    fn angle_scan_mode_coupling() {
        let cfg =
            RunConfig::from_toml_str("ions = 4\n[observation]\nmode = \"angle-scan\"\n").unwrap();
        assert!(cfg.resolve().is_err());
        let cfg = RunConfig::from_toml_str(
            "ions = 4\n[sweep]\nparameter = \"observation_angle\"\nvalues = [0.0, 0.03]\n",
        )
        .unwrap();
        let (_, resolved) = cfg.resolve().unwrap();
        assert_eq!(resolved.mode, ObservationMode::AngleScan);
    }

    #[test]
    fn temporal_and_sweep_are_exclusive() {
        let cfg = RunConfig::from_toml_str(
            "ions = 4\n[sweep]\nparameter = \"saturation\"\nvalues = [0.6]\n[temporal]\npoints = 10\n",
        )
        .unwrap();
        assert!(cfg.resolve().is_err());
    }

    #[test]
    fn fixed_mode_requires_direction() {
        let cfg = RunConfig::from_toml_str("ions = 4\n[observation]\nmode = \"fixed\"\n").unwrap();
        assert!(cfg.resolve().is_err());
        let cfg = RunConfig::from_toml_str(
            "ions = 4\n[observation]\nmode = \"fixed\"\ndirection = [0.0, 0.0, 1.0]\n",
        )
        .unwrap();
        assert!(cfg.resolve().is_ok());
        // direction without fixed mode is rejected
        let cfg = RunConfig::from_toml_str(
            "ions = 4\n[observation]\nmode = \"axial\"\ndirection = [0.0, 0.0, 1.0]\n",
        )
        .unwrap();
        assert!(cfg.resolve().is_err());
    }

    #[test]
    fn per_axis_jitter_override() {
        let cfg = RunConfig::from_toml_str(
            "ions = 4\n[ensemble]\njitter_rms = [\"70 nm\", \"70 nm\", \"120 nm\"]\n",
        )
        .unwrap();
        let (_, resolved) = cfg.resolve().unwrap();
        assert_relative_eq!(resolved.jitter.rms_width[2], 120e-9);
        assert_relative_eq!(resolved.jitter.rms_width[0], 70e-9);
    }
}
