//! Batch execution: turn a resolved config into CSV + manifest files.
//!
//! All parallelism lives inside the Monte-Carlo layer and is deterministic,
//! so the emitted files depend only on the config content (thread count and
//! output location never change the bytes of the table).

use std::path::PathBuf;

use crate::config::{ObservationMode, Provenance, Resolved, RunConfig, SweepParameterName};
use crate::correlations::{
    field_components, find_direction_in_cone, g2_constructive_asymptotic, mandel_q,
    mean_photon_number, InterferencePoint, ObservationGeometry,
};
use crate::geometry::{equilibrium_positions, length_scale, TrapParams};
use crate::montecarlo::{
    run_ensemble, run_sweep, tune_axial_frequency, EnsembleConfig, ObservationRule, SweepSpec,
};
use crate::output::{fmt_f64, part_paths, write_manifest, ResultTable};
use crate::temporal::g2_tau;
use crate::{Error, Result};

/// Command-line overrides applied before resolution (so the manifest
/// reflects them).
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub realizations: Option<usize>,
    pub threads: Option<usize>,
    pub out_dir: Option<String>,
}

pub fn apply_overrides(cfg: &mut RunConfig, o: &Overrides) {
    if let Some(seed) = o.seed {
        cfg.ensemble.get_or_insert_with(Default::default).seed = Some(seed);
    }
    if let Some(r) = o.realizations {
        cfg.ensemble
            .get_or_insert_with(Default::default)
            .realizations = Some(r);
    }
    if let Some(dir) = &o.out_dir {
        cfg.output.get_or_insert_with(Default::default).directory = Some(dir.clone());
    }
}

/// Files produced by one run.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

fn ensemble_config(resolved: &Resolved) -> EnsembleConfig {
    EnsembleConfig {
        n_realizations: resolved.realizations,
        jitter: resolved.jitter,
        dark: resolved.dark,
        master_seed: resolved.master_seed,
        estimator: resolved.estimator,
        keep_samples: false,
    }
}

/// Derived quantities echoed in manifests and `validate` output.
pub fn derived_summary(resolved: &Resolved) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let s = resolved.drive.saturation();
    out.push(("saturation".into(), fmt_f64(s)));
    out.push((
        "rabi_frequency_rad_s".into(),
        fmt_f64(resolved.drive.rabi_frequency),
    ));
    let ell = length_scale(&resolved.trap);
    out.push(("coulomb_length_m".into(), fmt_f64(ell)));
    let chain = equilibrium_positions(resolved.ions, &resolved.trap)?;
    out.push(("chain_span_m".into(), fmt_f64(chain.axial_span())));
    if resolved.ions > 1 {
        let lambda = std::f64::consts::TAU / resolved.drive.wavenumber;
        out.push((
            "min_spacing_wavelengths".into(),
            fmt_f64(chain.min_spacing() / lambda),
        ));
    }
    Ok(out)
}

/// Resolve the observation mode to a concrete geometry (and possibly a
/// re-tuned trap) for single-run and temporal modes.
fn resolve_observation_point(
    resolved: &Resolved,
) -> Result<(TrapParams, ObservationGeometry, String)> {
    let drive = &resolved.drive;
    let half_angle = resolved.numerical_aperture.asin();
    match resolved.mode {
        ObservationMode::Forward => Ok((
            resolved.trap,
            ObservationGeometry::new(drive.drive_direction, drive.wavenumber)?,
            "forward".into(),
        )),
        ObservationMode::Axial => Ok((
            resolved.trap,
            ObservationGeometry::axial(drive.wavenumber)?,
            "axial".into(),
        )),
        ObservationMode::Fixed => {
            let dir = resolved
                .fixed_direction
                .ok_or_else(|| Error::config("fixed mode without direction"))?;
            Ok((
                resolved.trap,
                ObservationGeometry::new(dir, drive.wavenumber)?,
                "fixed".into(),
            ))
        }
        ObservationMode::ConeMax | ObservationMode::ConeMin => {
            let which = if resolved.mode == ObservationMode::ConeMax {
                InterferencePoint::Constructive
            } else {
                InterferencePoint::Destructive
            };
            let chain = equilibrium_positions(resolved.ions, &resolved.trap)?;
            let obs = find_direction_in_cone(&chain, drive, drive.wavenumber, half_angle, which)?;
            let desc = format!(
                "cone extremum at polar angle {} rad",
                obs.direction.z.acos()
            );
            Ok((resolved.trap, obs, desc))
        }
        ObservationMode::Constructive | ObservationMode::Destructive => {
            let which = if resolved.mode == ObservationMode::Constructive {
                InterferencePoint::Constructive
            } else {
                InterferencePoint::Destructive
            };
            let tuned = tune_axial_frequency(
                resolved.ions,
                &resolved.trap,
                drive,
                resolved.tuning_range[0],
                resolved.tuning_range[1],
                which,
            )?;
            let desc = format!(
                "axial observation, trap tuned to {} rad/s",
                fmt_f64(tuned.axial_frequency)
            );
            Ok((tuned, ObservationGeometry::axial(drive.wavenumber)?, desc))
        }
        ObservationMode::SpeckleConstructive | ObservationMode::AngleScan => {
            Err(Error::config("this observation mode needs a sweep context"))
        }
    }
}

const SWEEP_HEADER: &[&str] = &[
    "swept_value",
    "saturation",
    "mean_intensity",
    "g2_zero",
    "g2_stderr",
    "intensity_stderr",
    "mandel_q",
    "mandel_q_analytic",
    "g2_constructive_asymptote",
    "observation_angle_rad",
    "n_used",
    "n_skipped",
    "error",
];

fn swept_column_name(p: SweepParameterName) -> &'static str {
    match p {
        SweepParameterName::AxialFrequency => "axial_frequency_rad_s",
        SweepParameterName::IonNumber => "ion_number",
        SweepParameterName::Saturation => "saturation_swept",
        SweepParameterName::ObservationAngle => "observation_angle_swept_rad",
    }
}

/// Analytic constructive-point Mandel Q for (N, s): intensity at the
/// speckle constructive level times (g2_asymptotic − 1).
fn mandel_q_analytic(n: usize, s: f64, efficiency: f64, linewidth: f64, bin_time: f64) -> f64 {
    let i_cons = n as f64 * s * (s + 2.0) / (2.0 * (1.0 + s) * (1.0 + s));
    mandel_q(
        g2_constructive_asymptotic(n, s),
        mean_photon_number(i_cons, efficiency, linewidth, bin_time),
    )
}

fn run_sweep_mode(resolved: &Resolved, table: &mut ResultTable) -> Result<()> {
    let sweep = resolved.sweep.as_ref().expect("sweep mode");
    let half_angle = resolved.numerical_aperture.asin();
    let observation = match resolved.mode {
        ObservationMode::Axial => ObservationRule::Axial,
        ObservationMode::Forward => ObservationRule::Fixed(ObservationGeometry::new(
            resolved.drive.drive_direction,
            resolved.drive.wavenumber,
        )?),
        ObservationMode::Fixed => ObservationRule::Fixed(ObservationGeometry::new(
            resolved.fixed_direction.expect("validated"),
            resolved.drive.wavenumber,
        )?),
        ObservationMode::ConeMax => ObservationRule::ConeExtremum {
            half_angle,
            which: InterferencePoint::Constructive,
        },
        ObservationMode::ConeMin => ObservationRule::ConeExtremum {
            half_angle,
            which: InterferencePoint::Destructive,
        },
        ObservationMode::Constructive => ObservationRule::TunedAxialFrequency {
            lo: resolved.tuning_range[0],
            hi: resolved.tuning_range[1],
            which: InterferencePoint::Constructive,
        },
        ObservationMode::Destructive => ObservationRule::TunedAxialFrequency {
            lo: resolved.tuning_range[0],
            hi: resolved.tuning_range[1],
            which: InterferencePoint::Destructive,
        },
        ObservationMode::SpeckleConstructive => ObservationRule::SpeckleConstructive {
            n_samples: resolved.speckle_samples,
            seed: resolved.master_seed,
        },
        // the sweep machinery swaps in the per-row fixed angle
        ObservationMode::AngleScan => ObservationRule::Axial,
    };
    if sweep.parameter == SweepParameterName::AxialFrequency
        && matches!(
            resolved.mode,
            ObservationMode::Constructive | ObservationMode::Destructive
        )
    {
        return Err(Error::config(
            "sweeping axial_frequency with a trap-tuned observation mode is contradictory",
        ));
    }
    if resolved.mode == ObservationMode::SpeckleConstructive
        && matches!(
            sweep.parameter,
            SweepParameterName::AxialFrequency | SweepParameterName::ObservationAngle
        )
    {
        return Err(Error::config(
            "speckle-constructive observation applies to ion_number or saturation sweeps",
        ));
    }

    let spec = SweepSpec {
        parameter: match sweep.parameter {
            SweepParameterName::AxialFrequency => crate::montecarlo::SweptParameter::AxialFrequency,
            SweepParameterName::IonNumber => crate::montecarlo::SweptParameter::IonNumber,
            SweepParameterName::Saturation => crate::montecarlo::SweptParameter::Saturation,
            SweepParameterName::ObservationAngle => {
                crate::montecarlo::SweptParameter::ObservationAngle
            }
        },
        values: sweep.values.clone(),
        ion_count: resolved.ions,
        trap: resolved.trap,
        drive: resolved.drive.clone(),
        observation,
        ensemble: ensemble_config(resolved),
        axial_frequency_cap: crate::constants::DEFAULT_AXIAL_FREQUENCY_CAP,
        detection_efficiency: resolved.detection_efficiency,
        bin_time: resolved.bin_time,
    };
    let rows = run_sweep(&spec)?;

    table.meta("swept_parameter", swept_column_name(sweep.parameter));
    let mut header: Vec<&str> = SWEEP_HEADER.to_vec();
    header[0] = swept_column_name(sweep.parameter);
    table.header = header.iter().map(|s| s.to_string()).collect();

    for row in rows {
        let (n_row, s_row) = match sweep.parameter {
            SweepParameterName::IonNumber => (row.value as usize, resolved.drive.saturation()),
            SweepParameterName::Saturation => (resolved.ions, row.value),
            _ => (resolved.ions, resolved.drive.saturation()),
        };
        match &row.outcome {
            Ok(data) => table.push_row(vec![
                fmt_f64(row.value),
                fmt_f64(s_row),
                fmt_f64(data.mean_intensity),
                fmt_f64(data.g2_zero),
                fmt_f64(data.g2_stderr),
                fmt_f64(data.intensity_stderr),
                fmt_f64(data.mandel_q),
                fmt_f64(mandel_q_analytic(
                    n_row,
                    s_row,
                    resolved.detection_efficiency,
                    resolved.drive.linewidth,
                    resolved.bin_time,
                )),
                fmt_f64(g2_constructive_asymptotic(n_row, s_row)),
                fmt_f64(data.observation_angle),
                data.n_used.to_string(),
                data.n_skipped.to_string(),
                String::new(),
            ])?,
            Err(e) => table.push_row(vec![
                fmt_f64(row.value),
                fmt_f64(s_row),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                e.clone(),
            ])?,
        }
    }
    Ok(())
}

fn run_temporal_mode(resolved: &Resolved, table: &mut ResultTable) -> Result<()> {
    let temporal = resolved.temporal.as_ref().expect("temporal mode");
    let (trap, obs, desc) = resolve_observation_point(resolved)?;
    let chain = equilibrium_positions(resolved.ions, &trap)?;
    let grid: Vec<f64> = (0..temporal.points)
        .map(|i| temporal.tau_max * i as f64 / (temporal.points - 1) as f64)
        .collect();
    let curve = g2_tau(&chain, &resolved.drive, &obs, &grid)?;
    table.meta("observation", desc);
    table.meta("trap_axial_frequency_rad_s", fmt_f64(trap.axial_frequency));
    table.meta("n_active", curve.n_active);
    table.header = vec!["tau_s".into(), "g2".into()];
    for (t, v) in curve.tau.iter().zip(&curve.values) {
        table.push_row(vec![fmt_f64(*t), fmt_f64(*v)])?;
    }
    Ok(())
}

fn run_single_mode(resolved: &Resolved, table: &mut ResultTable) -> Result<()> {
    if resolved.mode == ObservationMode::SpeckleConstructive {
        let sc = crate::montecarlo::constructive_speckle_g2(
            resolved.ions,
            resolved.drive.saturation(),
            resolved.speckle_samples,
            resolved.master_seed,
        )?;
        table.meta("observation", "speckle-constructive ensemble");
        table.header = SINGLE_HEADER.iter().map(|s| s.to_string()).collect();
        let q = mandel_q(
            sc.g2_zero,
            mean_photon_number(
                sc.mean_intensity,
                resolved.detection_efficiency,
                resolved.drive.linewidth,
                resolved.bin_time,
            ),
        );
        table.push_row(vec![
            fmt_f64(resolved.drive.saturation()),
            fmt_f64(sc.mean_intensity),
            fmt_f64(sc.g2_zero),
            fmt_f64(sc.g2_stderr),
            fmt_f64(0.0),
            fmt_f64(q),
            resolved.speckle_samples.to_string(),
            "0".to_string(),
        ])?;
        return Ok(());
    }
    let (trap, obs, desc) = resolve_observation_point(resolved)?;
    let chain = equilibrium_positions(resolved.ions, &trap)?;
    let ens = run_ensemble(&chain, &resolved.drive, &obs, &ensemble_config(resolved))?;
    let q = mandel_q(
        ens.g2_zero,
        mean_photon_number(
            ens.mean_intensity,
            resolved.detection_efficiency,
            resolved.drive.linewidth,
            resolved.bin_time,
        ),
    );
    table.meta("observation", desc);
    table.meta("trap_axial_frequency_rad_s", fmt_f64(trap.axial_frequency));
    let comps = field_components(&chain, &resolved.drive, &obs)?;
    table.meta("noise_free_intensity", fmt_f64(comps.intensity()));
    table.header = SINGLE_HEADER.iter().map(|s| s.to_string()).collect();
    table.push_row(vec![
        fmt_f64(resolved.drive.saturation()),
        fmt_f64(ens.mean_intensity),
        fmt_f64(ens.g2_zero),
        fmt_f64(ens.g2_stderr),
        fmt_f64(ens.intensity_stderr),
        fmt_f64(q),
        ens.n_used.to_string(),
        ens.n_skipped.to_string(),
    ])?;
    Ok(())
}

const SINGLE_HEADER: &[&str] = &[
    "saturation",
    "mean_intensity",
    "g2_zero",
    "g2_stderr",
    "intensity_stderr",
    "mandel_q",
    "n_used",
    "n_skipped",
];

/// Execute one resolved config: compute, write `<basename>.csv` and
/// `<basename>.manifest.toml`, return the paths.
pub fn execute(
    canonical: &RunConfig,
    resolved: &Resolved,
    provenance: Provenance,
) -> Result<Outcome> {
    // the preset tag is config content (inherited through manifests) so
    // that re-running a manifest reproduces the CSV byte for byte
    let preset = provenance.preset.clone().or_else(|| {
        canonical
            .provenance
            .as_ref()
            .and_then(|p| p.preset.clone())
    });
    let provenance = Provenance {
        preset: preset.clone(),
        ..provenance
    };
    let mut table = ResultTable::default();
    table.meta("tool", "chainlight");
    table.meta("version", env!("CARGO_PKG_VERSION"));
    if let Some(p) = &preset {
        table.meta("preset", p);
    }
    table.meta("ions", resolved.ions);
    table.meta("seed", resolved.master_seed);

    if resolved.sweep.is_some() {
        run_sweep_mode(resolved, &mut table)?;
        table.meta(
            "gnuplot",
            format!(
                "plot '{}.csv' using 1:4 with linespoints title 'g2(0)'",
                resolved.basename
            ),
        );
    } else if resolved.temporal.is_some() {
        run_temporal_mode(resolved, &mut table)?;
        table.meta(
            "gnuplot",
            format!(
                "plot '{}.csv' using 1:2 with lines title 'g2(tau)'",
                resolved.basename
            ),
        );
    } else {
        run_single_mode(resolved, &mut table)?;
    }

    let paths = part_paths(&resolved.out_directory, &resolved.basename);
    table.write(&paths.csv)?;
    write_manifest(
        &paths.manifest,
        canonical,
        provenance,
        &derived_summary(resolved)?,
    )?;
    Ok(Outcome {
        files: vec![paths.csv, paths.manifest],
        summary: vec![format!("{}: {} rows", resolved.basename, table.rows.len())],
    })
}

/// Run a config (already parsed), honoring the thread override.
pub fn run(cfg: &RunConfig, overrides: &Overrides, provenance: Provenance) -> Result<Outcome> {
    let mut cfg = cfg.clone();
    apply_overrides(&mut cfg, overrides);
    let (canonical, resolved) = cfg.resolve()?;
    let work = || execute(&canonical, &resolved, provenance.clone());
    match overrides.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::config(format!("thread pool: {e}")))?;
            pool.install(work)
        }
        None => work(),
    }
}

/// The `validate` echo: canonical document plus derived quantities, no
/// computation side effects.
pub fn validate_echo(cfg: &RunConfig) -> Result<String> {
    let (canonical, resolved) = cfg.resolve()?;
    let mut out = String::new();
    for (k, v) in derived_summary(&resolved)? {
        out.push_str(&format!("# derived: {k} = {v}\n"));
    }
    out.push_str(&canonical.to_toml_string()?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_reach_the_manifest_fields() {
        let mut cfg = RunConfig::from_toml_str("ions = 3\n").unwrap();
        apply_overrides(
            &mut cfg,
            &Overrides {
                seed: Some(99),
                realizations: Some(5),
                threads: None,
                out_dir: Some("elsewhere".into()),
            },
        );
        let (canonical, resolved) = cfg.resolve().unwrap();
        assert_eq!(resolved.master_seed, 99);
        assert_eq!(resolved.realizations, 5);
        assert_eq!(resolved.out_directory, "elsewhere");
        assert_eq!(canonical.ensemble.as_ref().unwrap().seed, Some(99));
    }

    #[test]
    fn validate_echo_contains_defaults_and_derived() {
        let cfg = RunConfig::from_toml_str("ions = 4\n[drive]\nsaturation = 0.62\n").unwrap();
        let echo = validate_echo(&cfg).unwrap();
        assert!(echo.contains("# derived: saturation = 0.62"));
        assert!(echo.contains("chain_span_m"));
        assert!(echo.contains("linewidth"));
        // default Γ = 2π·21.2 MHz appears as the canonical rad/s value
        let gamma = std::f64::consts::TAU * 21.2e6;
        assert!(echo.contains(&format!("{gamma}")), "{echo}");
    }

    #[test]
    fn speckle_constructive_single_run_works() {
        let cfg = RunConfig::from_toml_str(
            "ions = 12\n[drive]\nsaturation = 0.6\n[observation]\nmode = \"speckle-constructive\"\nspeckle_samples = 200\n",
        )
        .unwrap();
        let (_, resolved) = cfg.resolve().unwrap();
        let mut table = ResultTable::default();
        run_single_mode(&resolved, &mut table).unwrap();
        assert_eq!(table.rows.len(), 1);
        let g2: f64 = table.rows[0][2].parse().unwrap();
        assert!(g2 > 1.0 && g2 < 1.5, "g2 = {g2}");
    }
}
