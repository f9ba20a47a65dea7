//! Run configuration. TOML on disk, linear frequencies in GHz/MHz and rates in
//! µs⁻¹; everything is converted to rad/µs once, in [`RunConfig::device`] and
//! [`RunConfig::sweep_spec`].

use std::path::{Path, PathBuf};

use polariton_core::hilbert::HilbertSpec;
use polariton_core::model::{ghz, mhz, DeviceParams};
use polariton_core::spectroscopy::{Axis, DriveSweep, Engine, SweepSpec};
use polariton_core::steadystate::relaxation::RelaxationOptions;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("--params {0:?}: expected key=value")]
    BadOverride(String),
    #[error("--params {key}: {reason}")]
    Override { key: String, reason: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceSection {
    #[serde(rename = "omega_r_GHz")]
    pub omega_r_ghz: f64,
    #[serde(rename = "omega_01_GHz")]
    pub omega_01_ghz: f64,
    #[serde(rename = "g0_MHz")]
    pub g0_mhz: f64,
    #[serde(rename = "alpha_MHz")]
    pub alpha_mhz: f64,
    pub kappa_per_us: f64,
    pub gamma1_per_us: f64,
    pub gamma_phi_per_us: f64,
    #[serde(rename = "calib_C")]
    pub calib_c: f64,
}

impl Default for DeviceSection {
    fn default() -> Self {
        DeviceSection {
            omega_r_ghz: 7.180,
            omega_01_ghz: 7.611,
            g0_mhz: 46.57,
            alpha_mhz: -291.4,
            kappa_per_us: 3.09,
            gamma1_per_us: 1.11,
            gamma_phi_per_us: 1.32,
            calib_c: 0.562,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    Power,
    Detuning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub mode: SweepMode,
    pub engine: Engine,
    #[serde(rename = "power_start_dBm")]
    pub power_start_dbm: f64,
    #[serde(rename = "power_stop_dBm")]
    pub power_stop_dbm: f64,
    #[serde(rename = "power_step_dB")]
    pub power_step_db: f64,
    /// Coupler frequency for power sweeps; absent means the dressed ω'ge0.
    #[serde(rename = "coupler_GHz", skip_serializing_if = "Option::is_none")]
    pub coupler_ghz: Option<f64>,
    /// Coupler power for detuning sweeps.
    #[serde(rename = "fixed_power_dBm")]
    pub fixed_power_dbm: f64,
    #[serde(rename = "detuning_start_MHz")]
    pub detuning_start_mhz: f64,
    #[serde(rename = "detuning_stop_MHz")]
    pub detuning_stop_mhz: f64,
    #[serde(rename = "detuning_step_MHz")]
    pub detuning_step_mhz: f64,
    #[serde(rename = "probe_start_GHz")]
    pub probe_start_ghz: f64,
    #[serde(rename = "probe_stop_GHz")]
    pub probe_stop_ghz: f64,
    #[serde(rename = "probe_step_GHz")]
    pub probe_step_ghz: f64,
    pub tracking_substeps: usize,
    pub matelem_threshold: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            mode: SweepMode::Power,
            engine: Engine::Both,
            power_start_dbm: -80.0,
            power_stop_dbm: 0.0,
            power_step_db: 1.0,
            coupler_ghz: None,
            fixed_power_dbm: -40.0,
            detuning_start_mhz: -20.0,
            detuning_stop_mhz: 20.0,
            detuning_step_mhz: 10.0,
            probe_start_ghz: 7.14,
            probe_stop_ghz: 7.20,
            probe_step_ghz: 1e-4,
            tracking_substeps: 8,
            matelem_threshold: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tol: f64,
    pub n_max: usize,
    pub max_sweeps: usize,
    pub n_transmon: usize,
    pub n_resonator: usize,
    #[serde(rename = "probe_rabi_MHz")]
    pub probe_rabi_mhz: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let r = RelaxationOptions::default();
        SolverSection {
            tol: r.tol,
            n_max: r.n_max,
            max_sweeps: r.max_sweeps,
            n_transmon: 4,
            n_resonator: 4,
            probe_rabi_mhz: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub device: DeviceSection,
    pub sweep: SweepSection,
    pub solver: SolverSection,
    pub output: OutputSection,
}

fn parse_error(origin: &str, e: impl std::fmt::Display) -> ConfigError {
    ConfigError::Parse { origin: origin.to_string(), message: e.to_string().trim_end().to_string() }
}

/// Parse `key=value`; the value is read as a TOML literal, falling back to a
/// bare string.
fn parse_override(raw: &str) -> Result<(Vec<String>, toml::Value), ConfigError> {
    let (key, value) = raw.split_once('=').ok_or_else(|| ConfigError::BadOverride(raw.to_string()))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(ConfigError::BadOverride(raw.to_string()));
    }
    let value = value.trim();
    let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok((key.split('.').map(String::from).collect(), parsed))
}

fn apply_override(root: &mut toml::Table, path: &[String], value: toml::Value) -> Result<(), ConfigError> {
    let joined = path.join(".");
    let (last, parents) = path.split_last().expect("non-empty key");
    let mut table = root;
    for seg in parents {
        let entry = table.entry(seg.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| ConfigError::Override {
            key: joined.clone(),
            reason: format!("{seg} is not a table"),
        })?;
    }
    table.insert(last.clone(), value);
    Ok(())
}

impl RunConfig {
    /// Read an optional file and apply `key=value` overrides on top.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let (text, origin) = match path {
            Some(p) => (
                std::fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.to_path_buf(), source })?,
                p.display().to_string(),
            ),
            None => (String::new(), "defaults".to_string()),
        };
        Self::from_toml(&text, &origin, overrides)
    }

    pub fn from_toml(text: &str, origin: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        // Deserialising the text directly keeps line numbers in the diagnostics.
        let cfg: RunConfig = toml::from_str(text).map_err(|e| parse_error(origin, e))?;
        let cfg = if overrides.is_empty() {
            cfg
        } else {
            let mut table: toml::Table = toml::from_str(text).map_err(|e| parse_error(origin, e))?;
            for raw in overrides {
                let (path, value) = parse_override(raw)?;
                apply_override(&mut table, &path, value)?;
            }
            table.try_into().map_err(|e| parse_error("--params", e))?
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn device(&self) -> DeviceParams {
        let d = &self.device;
        DeviceParams {
            omega_r: ghz(d.omega_r_ghz),
            omega_01: ghz(d.omega_01_ghz),
            g0: mhz(d.g0_mhz),
            alpha: mhz(d.alpha_mhz),
            kappa: d.kappa_per_us,
            gamma_1: d.gamma1_per_us,
            gamma_phi: d.gamma_phi_per_us,
            calib_c: d.calib_c,
        }
    }

    pub fn hilbert(&self) -> HilbertSpec {
        HilbertSpec::new(self.solver.n_transmon, self.solver.n_resonator).expect("checked at load")
    }

    pub fn sweep_spec(&self, workers: usize) -> SweepSpec {
        let s = &self.sweep;
        let drive = match s.mode {
            SweepMode::Power => DriveSweep::Power {
                omega_d: s.coupler_ghz.map(ghz),
                dbm: Axis { start: s.power_start_dbm, stop: s.power_stop_dbm, step: s.power_step_db },
            },
            SweepMode::Detuning => DriveSweep::Detuning {
                dbm: s.fixed_power_dbm,
                detuning_mhz: Axis { start: s.detuning_start_mhz, stop: s.detuning_stop_mhz, step: s.detuning_step_mhz },
            },
        };
        SweepSpec {
            drive,
            probe_ghz: Axis { start: s.probe_start_ghz, stop: s.probe_stop_ghz, step: s.probe_step_ghz },
            probe_rabi: mhz(self.solver.probe_rabi_mhz),
            engine: s.engine,
            hilbert: self.hilbert(),
            solver: RelaxationOptions {
                tol: self.solver.tol,
                n_max: self.solver.n_max,
                max_sweeps: self.solver.max_sweeps,
                ..Default::default()
            },
            workers,
            tracking_substeps: s.tracking_substeps,
            matelem_threshold: s.matelem_threshold,
        }
    }

    fn check(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        self.device().validate().map_err(|e| ConfigError::Invalid(format!("device: {e}")))?;
        if let Err(e) = HilbertSpec::new(self.solver.n_transmon, self.solver.n_resonator) {
            return invalid(format!("solver: {e}"));
        }
        let s = &self.sweep;
        let axes = [
            ("sweep.power", Axis::new(s.power_start_dbm, s.power_stop_dbm, s.power_step_db)),
            ("sweep.detuning", Axis::new(s.detuning_start_mhz, s.detuning_stop_mhz, s.detuning_step_mhz)),
            ("sweep.probe", Axis::new(s.probe_start_ghz, s.probe_stop_ghz, s.probe_step_ghz)),
        ];
        for (name, a) in axes {
            if let Err(e) = a {
                return invalid(format!("{name}: {e}"));
            }
        }
        if !(self.solver.tol > 0.0) {
            return invalid(format!("solver.tol must be positive, got {}", self.solver.tol));
        }
        if self.solver.n_max < 2 || self.solver.max_sweeps == 0 {
            return invalid("solver.n_max must be at least 2 and solver.max_sweeps positive".to_string());
        }
        if !(self.solver.probe_rabi_mhz > 0.0) {
            return invalid(format!("solver.probe_rabi_MHz must be positive, got {}", self.solver.probe_rabi_mhz));
        }
        if !(0.0..1.0).contains(&s.matelem_threshold) {
            return invalid(format!("sweep.matelem_threshold must lie in [0, 1), got {}", s.matelem_threshold));
        }
        if let Some(f) = s.coupler_ghz {
            if !(f > 0.0) {
                return invalid(format!("sweep.coupler_GHz must be positive, got {f}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_reference_device() {
        let cfg = RunConfig::from_toml("", "test", &[]).unwrap();
        assert_eq!(cfg.device(), DeviceParams::reference());
        assert_eq!(cfg.sweep_spec(1), SweepSpec::power_sweep());
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = RunConfig::from_toml("[device]\nkappa = 3.0\n", "cfg.toml", &[]).unwrap_err().to_string();
        assert!(err.contains("cfg.toml"), "{err}");
        assert!(err.contains("kappa"), "{err}");
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn overrides_replace_values() {
        let cfg = RunConfig::from_toml(
            "[device]\ng0_MHz = 40.0\n",
            "t",
            &["device.g0_MHz=30".into(), "sweep.engine=meq".into(), "solver.n_resonator=6".into()],
        )
        .unwrap();
        assert_eq!(cfg.device.g0_mhz, 30.0);
        assert_eq!(cfg.sweep.engine, Engine::Meq);
        assert_eq!(cfg.solver.n_resonator, 6);
    }

    #[test]
    fn bad_overrides() {
        assert!(matches!(RunConfig::from_toml("", "t", &["device.g0_MHz".into()]), Err(ConfigError::BadOverride(_))));
        assert!(RunConfig::from_toml("", "t", &["device.nope=1".into()]).is_err());
        assert!(RunConfig::from_toml("", "t", &["device.kappa_per_us=-1".into()]).is_err());
        assert!(RunConfig::from_toml("", "t", &["sweep.probe_step_GHz=0".into()]).is_err());
    }
}
