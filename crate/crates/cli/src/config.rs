//! Experiment configuration: a sectioned TOML file, validated up front.

use qbm_core::greens::max_step;
use qbm_core::mc::Discretization;
use qbm_core::{Protocol, Shape, SpectralDensity};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BathKindConfig {
    Ohmic,
    OhmicDrude,
    PowerLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub kind: BathKindConfig,
    pub gamma0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    pub beta: f64,
    #[serde(default)]
    pub hbar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Oscillator mass `M`, shared with the bath coupling.
    #[serde(default = "one")]
    pub mass: f64,
    /// Bare frequency `Ω`.
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Ramp,
    Smoothstep,
    Gaussian,
    Sinusoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub shape: ShapeKind,
    #[serde(default)]
    pub f0: f64,
    pub amplitude: f64,
    pub tau: f64,
    /// Gaussian only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    /// Sinusoid only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycles: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    /// Time step; must divide `τ`. Defaults to the largest stable step that does.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Green's-function horizon (memory kept for the stationary state).
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Relative tolerance of Matsubara sums.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Tabulated lags for the `kernels` subcommand.
    #[serde(default = "default_kernel_lags")]
    pub kernel_lags: usize,
    /// Points of the frequency grid for kernel tables.
    #[serde(default = "default_freq_points")]
    pub freq_points: usize,
    /// Terms of the high-temperature series.
    #[serde(default = "default_series_order")]
    pub series_order: usize,
    /// Exponential terms of the low-temperature expansion.
    #[serde(default = "default_lowtemp_terms")]
    pub lowtemp_terms: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            dt: None,
            horizon: default_horizon(),
            tolerance: default_tolerance(),
            kernel_lags: default_kernel_lags(),
            freq_points: default_freq_points(),
            series_order: default_series_order(),
            lowtemp_terms: default_lowtemp_terms(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Use the configured `ħ`.
    Quantum,
    /// Force `ħ = 0`.
    Classical,
}

/// `continuum` or `discrete:N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Oracle {
    Continuum,
    Discrete(usize),
}

impl std::str::FromStr for Oracle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            None if s == "continuum" => Ok(Oracle::Continuum),
            Some(("discrete", n)) => n
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .map(Oracle::Discrete)
                .ok_or_else(|| format!("mode count in `{s}` must be a positive integer")),
            _ => Err(format!("expected `continuum` or `discrete:N`, got `{s}`")),
        }
    }
}

impl std::fmt::Display for Oracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Oracle::Continuum => write!(f, "continuum"),
            Oracle::Discrete(n) => write!(f, "discrete:{n}"),
        }
    }
}

impl Serialize for Oracle {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Oracle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscretizationKind {
    Uniform,
    Tangent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagationKind {
    Exact,
    Leapfrog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_oracle")]
    pub oracle: Oracle,
    #[serde(default = "default_discretization")]
    pub discretization: DiscretizationKind,
    /// Top of the uniform mode grid; defaults to `20·max(Λ, Ω)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_max: Option<f64>,
    #[serde(default = "default_propagation")]
    pub propagation: PropagationKind,
    /// Below this Jarzynski effective sample size the run exits with status 4.
    #[serde(default = "default_min_n_eff")]
    pub min_n_eff: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            seed: 0,
            mode: default_mode(),
            oracle: default_oracle(),
            discretization: default_discretization(),
            omega_max: None,
            propagation: default_propagation(),
            min_n_eff: default_min_n_eff(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DechistConfig {
    /// Position resolution of the coarse-graining windows.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// History separation in units of the threshold `u*`.
    #[serde(default = "default_separation_scale")]
    pub separation_scale: f64,
}

impl Default for DechistConfig {
    fn default() -> Self {
        Self {
            sigma: default_sigma(),
            separation_scale: default_separation_scale(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Hbar,
    Beta,
    Gamma0,
    /// `βħΩ` at fixed `β` and `Ω` (sets `ħ`).
    BetaHbarOmega,
    Tau,
    Amplitude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_directory(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub bath: BathConfig,
    pub system: SystemConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolConfig>,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub dechist: DechistConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn one() -> f64 {
    1.0
}
fn default_horizon() -> f64 {
    40.0
}
fn default_tolerance() -> f64 {
    1e-12
}
fn default_kernel_lags() -> usize {
    200
}
fn default_freq_points() -> usize {
    512
}
fn default_series_order() -> usize {
    3
}
fn default_lowtemp_terms() -> usize {
    20
}
fn default_samples() -> usize {
    10_000
}
fn default_mode() -> Mode {
    Mode::Quantum
}
fn default_oracle() -> Oracle {
    Oracle::Continuum
}
fn default_discretization() -> DiscretizationKind {
    DiscretizationKind::Uniform
}
fn default_propagation() -> PropagationKind {
    PropagationKind::Exact
}
fn default_min_n_eff() -> f64 {
    100.0
}
fn default_sigma() -> f64 {
    0.1
}
fn default_separation_scale() -> f64 {
    5.0
}
fn default_directory() -> String {
    "qbm-out".into()
}

/// Field-level problems found by [`ExperimentConfig::validate`].
#[derive(Debug, Default)]
struct Issues(Vec<String>);

impl Issues {
    fn check(&mut self, ok: bool, field: &str, msg: &str) {
        if !ok {
            self.0.push(format!("{field}: {msg}"));
        }
    }

    fn positive(&mut self, v: f64, field: &str) {
        self.check(v.is_finite() && v > 0.0, field, &format!("must be a positive number, got {v}"));
    }
}

/// Which optional blocks a subcommand needs.
#[derive(Debug, Clone, Copy, Default)]
pub struct Needs {
    pub protocol: bool,
    pub sweep: bool,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    /// Checks every field the subcommand will touch, reporting all problems at once.
    pub fn validate(&self, needs: Needs) -> Result<(), CliError> {
        let mut is = Issues::default();
        let b = &self.bath;
        is.positive(b.gamma0, "bath.gamma0");
        is.positive(b.beta, "bath.beta");
        is.check(b.hbar.is_finite() && b.hbar >= 0.0, "bath.hbar", "must be >= 0");
        match b.kind {
            BathKindConfig::Ohmic => {
                is.check(b.cutoff.is_none(), "bath.cutoff", "not used by the ohmic bath");
                is.check(b.exponent.is_none(), "bath.exponent", "only used by the power_law bath");
            }
            BathKindConfig::OhmicDrude => {
                match b.cutoff {
                    Some(c) => is.positive(c, "bath.cutoff"),
                    None => is.check(false, "bath.cutoff", "required for ohmic_drude"),
                }
                is.check(b.exponent.is_none(), "bath.exponent", "only used by the power_law bath");
            }
            BathKindConfig::PowerLaw => {
                match b.cutoff {
                    Some(c) => is.positive(c, "bath.cutoff"),
                    None => is.check(false, "bath.cutoff", "required for power_law"),
                }
                match b.exponent {
                    Some(s) => is.check(s > 0.0 && s < 2.0, "bath.exponent", "must lie in (0, 2)"),
                    None => is.check(false, "bath.exponent", "required for power_law"),
                }
            }
        }
        is.positive(self.system.mass, "system.mass");
        is.positive(self.system.omega, "system.omega");

        let n = &self.numerics;
        is.positive(n.horizon, "numerics.horizon");
        is.positive(n.tolerance, "numerics.tolerance");
        is.check(n.kernel_lags >= 5, "numerics.kernel_lags", "must be at least 5");
        is.check(n.freq_points >= 2, "numerics.freq_points", "must be at least 2");
        is.check(
            (1..=qbm_core::work::MAX_ORDER).contains(&n.series_order),
            "numerics.series_order",
            &format!("must lie in 1..={}", qbm_core::work::MAX_ORDER),
        );
        if let Some(dt) = n.dt {
            is.positive(dt, "numerics.dt");
        }

        match &self.protocol {
            Some(p) => {
                is.positive(p.tau, "protocol.tau");
                is.check(p.f0.is_finite(), "protocol.f0", "must be finite");
                is.check(p.amplitude.is_finite(), "protocol.amplitude", "must be finite");
                match p.shape {
                    ShapeKind::Gaussian => match p.width {
                        Some(w) => is.positive(w, "protocol.width"),
                        None => is.check(false, "protocol.width", "required for the gaussian shape"),
                    },
                    ShapeKind::Sinusoid => {
                        is.check(p.cycles.is_some_and(|c| c > 0), "protocol.cycles", "sinusoid needs a positive whole number of cycles")
                    }
                    _ => {}
                }
                is.check(p.width.is_none() || p.shape == ShapeKind::Gaussian, "protocol.width", "only used by the gaussian shape");
                is.check(p.cycles.is_none() || p.shape == ShapeKind::Sinusoid, "protocol.cycles", "only used by the sinusoid shape");
                if let Some(dt) = n.dt {
                    let steps = p.tau / dt;
                    is.check((steps - steps.round()).abs() < 1e-9 * steps.max(1.0), "numerics.dt", "must divide protocol.tau");
                }
                is.check(n.horizon >= p.tau, "numerics.horizon", "must be at least protocol.tau");
            }
            None => is.check(!needs.protocol, "protocol", "block required by this subcommand"),
        }

        let m = &self.mc;
        is.check(m.samples >= 2, "mc.samples", "must be at least 2");
        is.check(m.min_n_eff >= 0.0, "mc.min_n_eff", "must be >= 0");
        if let Some(w) = m.omega_max {
            is.positive(w, "mc.omega_max");
        }
        if let Oracle::Discrete(_) = m.oracle {
            is.check(
                m.mode == Mode::Classical || b.hbar == 0.0,
                "mc.mode",
                "the discrete-bath oracle is classical; set mode = \"classical\"",
            );
        }
        is.positive(self.dechist.sigma, "dechist.sigma");
        is.positive(self.dechist.separation_scale, "dechist.separation_scale");

        match &self.sweep {
            Some(s) => {
                is.check(!s.values.is_empty(), "sweep.values", "must not be empty");
                is.check(s.values.iter().all(|v| v.is_finite()), "sweep.values", "must be finite");
            }
            None => is.check(!needs.sweep, "sweep", "block required by the sweep subcommand"),
        }
        is.check(!self.output.directory.is_empty(), "output.directory", "must not be empty");

        if is.0.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(is.0.join("\n")))
        }
    }

    pub fn spectral_density(&self) -> qbm_core::Result<SpectralDensity<f64>> {
        let b = &self.bath;
        let m = self.system.mass;
        match b.kind {
            BathKindConfig::Ohmic => SpectralDensity::ohmic(b.gamma0, m),
            BathKindConfig::OhmicDrude => SpectralDensity::drude(b.gamma0, b.cutoff.unwrap_or(f64::NAN), m),
            BathKindConfig::PowerLaw => {
                SpectralDensity::power_law(b.gamma0, b.cutoff.unwrap_or(f64::NAN), b.exponent.unwrap_or(f64::NAN), m)
            }
        }
    }

    pub fn protocol(&self) -> qbm_core::Result<Protocol<f64>> {
        let p = self.protocol.as_ref().expect("validated: protocol present");
        let shape = match p.shape {
            ShapeKind::Ramp => Shape::Ramp,
            ShapeKind::Smoothstep => Shape::Smoothstep,
            ShapeKind::Gaussian => Shape::Gaussian {
                width: p.width.unwrap_or(f64::NAN),
            },
            ShapeKind::Sinusoid => Shape::Sinusoid {
                cycles: p.cycles.unwrap_or(0),
            },
        };
        Protocol::new(shape, p.f0, p.amplitude, p.tau)
    }

    /// `ħ` after the MC mode is applied.
    pub fn effective_hbar(&self) -> f64 {
        match self.mc.mode {
            Mode::Quantum => self.bath.hbar,
            Mode::Classical => 0.0,
        }
    }

    /// The configured step, or the largest stable one that divides `τ`.
    pub fn time_step(&self, sd: &SpectralDensity<f64>) -> f64 {
        if let Some(dt) = self.numerics.dt {
            return dt;
        }
        // Markovian closed forms are exact at any step; resolve the drive instead
        let limit = max_step(sd, self.system.omega).min(0.01);
        match &self.protocol {
            Some(p) => p.tau / (p.tau / limit).ceil(),
            None => limit,
        }
    }

    pub fn discretization(&self, sd: &SpectralDensity<f64>) -> Discretization<f64> {
        match self.mc.discretization {
            DiscretizationKind::Tangent => Discretization::Tangent,
            DiscretizationKind::Uniform => Discretization::Uniform {
                omega_max: self
                    .mc
                    .omega_max
                    .unwrap_or(20.0 * sd.cutoff.unwrap_or(0.0).max(self.system.omega)),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[bath]
kind = "ohmic_drude"
gamma0 = 0.5
cutoff = 5.0
beta = 2.0
hbar = 1.0

[system]
omega = 1.0

[protocol]
shape = "gaussian"
amplitude = 1.0
tau = 12.0
width = 1.0

[mc]
oracle = "discrete:200"
mode = "classical"
"#;

    #[test]
    fn round_trip_is_identity() {
        let c = ExperimentConfig::parse(SAMPLE).unwrap();
        let again = ExperimentConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.to_toml(), again.to_toml());
        assert_eq!(c.mc.oracle, Oracle::Discrete(200));
        c.validate(Needs { protocol: true, sweep: false }).unwrap();
    }

    #[test]
    fn diagnostics_name_every_bad_field() {
        let text = SAMPLE.replace("cutoff = 5.0", "").replace("width = 1.0", "width = -1.0");
        let c = ExperimentConfig::parse(&text).unwrap();
        let Err(CliError::Config(msg)) = c.validate(Needs::default()) else {
            panic!("expected a config error");
        };
        assert!(msg.contains("bath.cutoff") && msg.contains("protocol.width"), "{msg}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = SAMPLE.replace("gamma0 = 0.5", "gamma0 = 0.5\ngama = 1");
        assert!(matches!(ExperimentConfig::parse(&text), Err(CliError::Config(_))));
    }

    #[test]
    fn oracle_syntax() {
        assert_eq!("continuum".parse::<Oracle>().unwrap(), Oracle::Continuum);
        assert!("discrete:0".parse::<Oracle>().is_err());
        assert!("discrete".parse::<Oracle>().is_err());
    }

    #[test]
    fn default_step_divides_tau() {
        let c = ExperimentConfig::parse(SAMPLE).unwrap();
        let sd = c.spectral_density().unwrap();
        let dt = c.time_step(&sd);
        assert!(dt <= max_step(&sd, 1.0));
        let steps = 12.0 / dt;
        assert!((steps - steps.round()).abs() < 1e-9);
    }
}
