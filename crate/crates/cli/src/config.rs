//! Experiment configuration: a flat `key = value` file, command-line
//! overrides, and per-command defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nh_sta::propagator::InitialCondition;
use nh_sta::synthesis::{SupplementRule, TrappedState};
use nh_sta::two_level::TabulatedPulse;

use crate::error::{CliError, Result};

/// Fewest grid intervals accepted.
pub const MIN_STEPS: usize = 100;
/// Output directory used when neither the flag, the environment nor the
/// config file names one.
pub const DEFAULT_OUT_DIR: &str = "nh_sta_out";
/// Environment variable that overrides the output directory of the config
/// file (the `--out` flag still wins).
pub const OUT_ENV: &str = "NH_STA_OUT";

const KNOWN_KEYS: &[&str] = &[
    "omega0",
    "delta0",
    "tau",
    "t0",
    "t_final",
    "steps",
    "gamma",
    "policy",
    "initial_state",
    "trapped",
    "common_shift",
    "format",
    "out",
    "pulse_file",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Figure1,
    Figure2,
    Figure3,
    Figure4,
    Verify,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Figure1 => "figure1",
            Command::Figure2 => "figure2",
            Command::Figure3 => "figure3",
            Command::Figure4 => "figure4",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
        }
    }

    /// Decay rates used when the configuration gives none (units of 1/τ).
    pub fn default_gammas(self) -> Vec<f64> {
        match self {
            Command::Figure1 | Command::Figure2 => vec![0.3, 3.0],
            Command::Figure3 | Command::Verify | Command::Sweep => vec![0.1, 0.3, 1.0],
            Command::Figure4 => vec![1.0],
        }
    }

    fn default_policies(self) -> Vec<PolicyTag> {
        match self {
            Command::Sweep => vec![PolicyTag::Hermitian, PolicyTag::ZeroCoupling],
            _ => vec![PolicyTag::Hermitian],
        }
    }

    fn default_initial_states(self) -> Vec<InitialTag> {
        match self {
            Command::Sweep => vec![InitialTag::EigenPlus, InitialTag::BareGround],
            _ => vec![InitialTag::EigenPlus],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Which supplementary Hamiltonian a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyTag {
    Hermitian,
    ZeroCoupling,
    NaiveCd,
    None,
}

impl PolicyTag {
    pub fn rule(self, trapped: TrappedState, common_shift: f64) -> SupplementRule<f64> {
        match self {
            PolicyTag::Hermitian => SupplementRule::HermitianRealizable { common_shift },
            PolicyTag::ZeroCoupling => SupplementRule::zero_coupling(trapped),
            PolicyTag::NaiveCd => SupplementRule::NaiveCd,
            PolicyTag::None => SupplementRule::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialTag {
    EigenPlus,
    BareGround,
}

impl InitialTag {
    pub fn condition(self) -> InitialCondition<f64> {
        match self {
            InitialTag::EigenPlus => InitialCondition::EigenPlus,
            InitialTag::BareGround => InitialCondition::BareGround,
        }
    }
}

macro_rules! tag_names {
    ($ty:ty { $($variant:path => $name:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($variant => $name),+ })
            }
        }

        impl FromStr for $ty {
            type Err = CliError;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($variant),)+
                    other => Err(CliError::Config(format!(
                        "unknown {} '{other}' (expected one of: {})",
                        stringify!($ty),
                        [$($name),+].join(", ")
                    ))),
                }
            }
        }
    };
}

tag_names!(Format { Format::Csv => "csv", Format::Json => "json" });
tag_names!(PolicyTag {
    PolicyTag::Hermitian => "hermitian",
    PolicyTag::ZeroCoupling => "zero_coupling",
    PolicyTag::NaiveCd => "naive_cd",
    PolicyTag::None => "none",
});
tag_names!(InitialTag { InitialTag::EigenPlus => "eigen_plus", InitialTag::BareGround => "bare_ground" });

/// Source of the control fields.
#[derive(Debug, Clone, PartialEq)]
pub enum PulseSource {
    AllenEberly { omega0: f64, delta0: f64, tau: f64 },
    /// Contents of a three-column `t, omega_r, delta` file.
    Tabulated { path: PathBuf, text: String },
}

impl PulseSource {
    pub fn tabulated(&self, gamma: f64) -> Option<nh_sta::Result<TabulatedPulse<f64>>> {
        match self {
            PulseSource::Tabulated { text, .. } => Some(TabulatedPulse::parse_csv(text, gamma)),
            PulseSource::AllenEberly { .. } => None,
        }
    }
}

/// Values given on the command line; they win over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub gamma: Option<String>,
    pub steps: Option<usize>,
    pub t_final: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub pulse: PulseSource,
    pub t0: f64,
    pub t_final: f64,
    /// Number of grid intervals.
    pub steps: usize,
    pub gammas: Vec<f64>,
    pub policies: Vec<PolicyTag>,
    pub initial_states: Vec<InitialTag>,
    pub trapped: TrappedState,
    pub common_shift: f64,
    pub out_dir: PathBuf,
    pub format: Format,
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are
/// ignored, keys must be known and appear once.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected 'key = value', got '{line}'", n + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::Config(format!("line {}: unknown key '{key}'", n + 1)));
        }
        if value.is_empty() {
            return Err(CliError::Config(format!("line {}: empty value for '{key}'", n + 1)));
        }
        if out.insert(key.to_string(), value.to_string()).is_some() {
            return Err(CliError::Config(format!("line {}: duplicate key '{key}'", n + 1)));
        }
    }
    Ok(out)
}

fn number<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e| CliError::Config(format!("{key} = '{value}': {e}")))
}

fn finite(key: &str, value: &str) -> Result<f64> {
    let x: f64 = number(key, value)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Config(format!("{key} must be finite, got '{value}'")))
    }
}

fn list<T: FromStr<Err = CliError>>(value: &str) -> Result<Vec<T>> {
    value.split(',').map(|s| s.trim().parse()).collect()
}

/// Comma-separated decay rates; each must be finite and non-negative.
pub fn parse_gammas(value: &str) -> Result<Vec<f64>> {
    let gammas = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| finite("gamma", s))
        .collect::<Result<Vec<_>>>()?;
    if gammas.is_empty() {
        return Err(CliError::Config("gamma list is empty".into()));
    }
    if let Some(g) = gammas.iter().find(|g| **g < 0.0) {
        return Err(CliError::Config(format!("decay rate must be non-negative, got {g}")));
    }
    Ok(gammas)
}

impl ExperimentConfig {
    /// Combines, in increasing priority: built-in defaults, the config file,
    /// the output-directory environment variable, and command-line
    /// overrides. `file` is the config text with its directory, against
    /// which relative `pulse_file` and `out` paths are resolved.
    pub fn resolve(
        command: Command,
        file: Option<(&str, &Path)>,
        overrides: &Overrides,
        env_out: Option<&str>,
    ) -> Result<Self> {
        let kv = match file {
            Some((text, _)) => parse_key_values(text)?,
            None => BTreeMap::new(),
        };
        let base_dir = file.map(|(_, dir)| dir.to_path_buf()).unwrap_or_default();
        let get = |key: &str| kv.get(key).map(String::as_str);

        let pulse = match get("pulse_file") {
            Some(p) => {
                for key in ["omega0", "delta0", "tau"] {
                    if kv.contains_key(key) {
                        return Err(CliError::Config(format!("'{key}' cannot be combined with pulse_file")));
                    }
                }
                let path = base_dir.join(p);
                let text = std::fs::read_to_string(&path)
                    .map_err(|source| CliError::ReadConfig { path: path.clone(), source })?;
                PulseSource::Tabulated { path, text }
            }
            None => PulseSource::AllenEberly {
                omega0: get("omega0").map(|v| finite("omega0", v)).transpose()?.unwrap_or(1.0),
                delta0: get("delta0").map(|v| finite("delta0", v)).transpose()?.unwrap_or(9.0),
                tau: get("tau").map(|v| finite("tau", v)).transpose()?.unwrap_or(1.0),
            },
        };
        let (default_t0, default_tf) = match &pulse {
            PulseSource::AllenEberly { tau, .. } => (-*tau, *tau),
            PulseSource::Tabulated { .. } => {
                let table = pulse.tabulated(0.0).expect("tabulated source").map_err(CliError::from)?;
                nh_sta::two_level::Pulse::window(&table).expect("tables have a window")
            }
        };

        let t0 = get("t0").map(|v| finite("t0", v)).transpose()?.unwrap_or(default_t0);
        let t_final = match overrides.t_final {
            Some(t) if t.is_finite() => t,
            Some(t) => return Err(CliError::Config(format!("t_final must be finite, got {t}"))),
            None => get("t_final").map(|v| finite("t_final", v)).transpose()?.unwrap_or(default_tf),
        };
        if t_final <= t0 {
            return Err(CliError::Config(format!("t_final = {t_final} must exceed t0 = {t0}")));
        }
        let steps = match overrides.steps {
            Some(s) => s,
            None => get("steps").map(|v| number::<usize>("steps", v)).transpose()?.unwrap_or(4000),
        };
        if steps < MIN_STEPS {
            return Err(CliError::Config(format!("steps = {steps} is below the minimum of {MIN_STEPS}")));
        }
        if steps % 2 != 0 {
            return Err(CliError::Config(format!(
                "steps = {steps} must be even (the step-halving check coarsens the grid)"
            )));
        }
        let gammas = match overrides.gamma.as_deref().or(get("gamma")) {
            Some(v) => parse_gammas(v)?,
            None => command.default_gammas(),
        };
        let policies = get("policy").map(list::<PolicyTag>).transpose()?.unwrap_or_else(|| command.default_policies());
        let initial_states = get("initial_state")
            .map(list::<InitialTag>)
            .transpose()?
            .unwrap_or_else(|| command.default_initial_states());
        if command != Command::Sweep && (policies.len() != 1 || initial_states.len() != 1) {
            return Err(CliError::Config(format!(
                "{} takes a single policy and initial_state; lists are for sweep",
                command.name()
            )));
        }
        let trapped = match get("trapped") {
            None | Some("plus") => TrappedState::Plus,
            Some("minus") => TrappedState::Minus,
            Some(other) => return Err(CliError::Config(format!("trapped must be 'plus' or 'minus', got '{other}'"))),
        };
        let common_shift = get("common_shift").map(|v| finite("common_shift", v)).transpose()?.unwrap_or(0.0);
        let format = match overrides.format {
            Some(f) => f,
            None => get("format").map(str::parse).transpose()?.unwrap_or(Format::Csv),
        };
        let out_dir = overrides
            .out
            .clone()
            .or_else(|| env_out.filter(|s| !s.is_empty()).map(PathBuf::from))
            .or_else(|| get("out").map(|p| base_dir.join(p)))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));

        Ok(Self {
            command,
            pulse,
            t0,
            t_final,
            steps,
            gammas,
            policies,
            initial_states,
            trapped,
            common_shift,
            out_dir,
            format,
        })
    }

    /// Resolved settings as `key → value`, for the manifest.
    pub fn echo(&self) -> BTreeMap<&'static str, String> {
        let join = |items: Vec<String>| items.join(",");
        let mut m = BTreeMap::new();
        m.insert("command", self.command.name().to_string());
        match &self.pulse {
            PulseSource::AllenEberly { omega0, delta0, tau } => {
                m.insert("omega0", omega0.to_string());
                m.insert("delta0", delta0.to_string());
                m.insert("tau", tau.to_string());
            }
            PulseSource::Tabulated { path, .. } => {
                m.insert("pulse_file", path.display().to_string());
            }
        }
        m.insert("t0", self.t0.to_string());
        m.insert("t_final", self.t_final.to_string());
        m.insert("steps", self.steps.to_string());
        m.insert("gamma", join(self.gammas.iter().map(f64::to_string).collect()));
        m.insert("policy", join(self.policies.iter().map(ToString::to_string).collect()));
        m.insert("initial_state", join(self.initial_states.iter().map(ToString::to_string).collect()));
        m.insert("trapped", self.trapped.label().to_string());
        m.insert("common_shift", self.common_shift.to_string());
        m.insert("format", self.format.to_string());
        m.insert("out", self.out_dir.display().to_string());
        m
    }
}
