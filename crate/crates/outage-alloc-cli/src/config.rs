//! Experiment configuration: a TOML file with one section per experiment,
//! plus top-level defaults. Command-line flags override the file, which
//! overrides the built-in defaults.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    #[serde(default)]
    pub fig3: Fig3Config,
    #[serde(default)]
    pub fig4: Fig4Config,
    #[serde(default)]
    pub fig5: Fig5Config,
    #[serde(default)]
    pub custom: CustomConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig3Config {
    pub beta: f64,
    pub rate: f64,
    pub m_values: Vec<usize>,
    /// Number of budget points swept over `(0, P_a)`.
    pub q1_points: usize,
}

impl Default for Fig3Config {
    fn default() -> Self {
        Fig3Config { beta: 8.0, rate: 3.0, m_values: vec![1, 10, 100, 10_000], q1_points: 24 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig4Config {
    pub beta: f64,
    pub rate: f64,
    pub q1: f64,
    pub m_values: Vec<usize>,
}

impl Default for Fig4Config {
    fn default() -> Self {
        Fig4Config { beta: 8.0, rate: 3.0, q1: 9.0, m_values: vec![10, 100, 1_000, 10_000] }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig5Config {
    pub beta: f64,
    pub rate: f64,
    pub n: usize,
    pub m: usize,
    /// Mean harvesting rates swept; each gives the three-state model
    /// `{0, P, 2P}` with equal probabilities.
    pub p_values: Vec<f64>,
    /// Battery grid step for the value table.
    pub delta: f64,
    /// Look-ahead windows evaluated alongside the offline and table policies.
    pub lookahead: Vec<usize>,
}

impl Default for Fig5Config {
    fn default() -> Self {
        Fig5Config {
            beta: 8.0,
            rate: 0.5,
            n: 20,
            m: 1,
            p_values: vec![0.1, 0.2, 0.4, 0.6, 0.8, 1.0],
            delta: 0.01,
            lookahead: vec![1, 2, 20],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CustomConfig {
    pub beta: f64,
    pub rate: f64,
    /// Trace CSV (`period,rate` with header). Mutually exclusive with the
    /// generator fields below.
    pub trace: Option<String>,
    pub m: usize,
    /// Generator: sample `n` periods from an i.i.d. model over `states`
    /// with `probs` (uniform when omitted).
    pub n: Option<usize>,
    pub states: Option<Vec<f64>>,
    pub probs: Option<Vec<f64>>,
    /// `optimal` or `suboptimal`.
    pub algorithm: String,
}

impl Default for CustomConfig {
    fn default() -> Self {
        CustomConfig {
            beta: 2.0,
            rate: 1.0,
            trace: None,
            m: 1,
            n: None,
            states: None,
            probs: None,
            algorithm: "optimal".into(),
        }
    }
}

/// Fully resolved settings, written into the run manifest.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub experiment: String,
    pub seed: u64,
    pub trials: u64,
    pub config: Config,
}

pub fn parse_config(text: &str) -> Result<Config, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}
