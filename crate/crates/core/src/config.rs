//! Network configuration, validation and the `key = value` config format.
//!
//! All powers are in watts. Channel gains are normalized by the noise power,
//! so a node with raw power gain `x'` has normalized gain `x = x' / N0` and
//! mean `Ω = E[x'] / N0`.
//!
//! The text format is one `key = value` pair per line. `#` starts a comment
//! that runs to the end of the line. `mean_gain` takes either one value
//! (shared by every node) or a comma-separated list with one value per node.
//! Keys not present keep their [`Default`] value.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Number of energy harvesting nodes, K.
    pub num_nodes: usize,
    /// AWGN power N0 (W).
    pub noise_power: f64,
    /// Average base-station power budget (W).
    pub avg_power: f64,
    /// Peak base-station power (W).
    pub max_power: f64,
    /// Fixed circuit power of a transmitting node (W). Point-to-point only.
    pub processing_cost: f64,
    /// Mean normalized gain per node, or a single shared value.
    pub mean_gain: Vec<f64>,
    /// Number of fading blocks M.
    pub num_epochs: usize,
    pub rng_seed: u64,
    /// Bracket width at which the harvest-fraction bisection stops.
    pub root_tol: f64,
    /// Relative tolerance on delivered average power during calibration.
    pub lambda_tol: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            num_nodes: 1,
            noise_power: 1e-12,
            avg_power: 0.1,
            max_power: 1.0,
            processing_cost: 0.0,
            mean_gain: vec![1e6],
            num_epochs: 10_000,
            rng_seed: 1,
            root_tol: 1e-10,
            lambda_tol: 1e-6,
        }
    }
}

/// One failed configuration constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub value: String,
    pub constraint: &'static str,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}: {}", self.field, self.value, self.constraint)
    }
}

/// Every violated constraint of a rejected configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigViolations(pub Vec<Violation>);

impl ConfigViolations {
    pub fn iter(&self) -> impl Iterator<Item = &Violation> {
        self.0.iter()
    }

    pub fn has_field(&self, field: &str) -> bool {
        self.0.iter().any(|v| v.field == field)
    }
}

impl fmt::Display for ConfigViolations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

const KEYS: [&str; 10] = [
    "num_nodes",
    "noise_power",
    "avg_power",
    "max_power",
    "processing_cost",
    "mean_gain",
    "num_epochs",
    "rng_seed",
    "root_tol",
    "lambda_tol",
];

impl NetworkConfig {
    /// The numerical regime used for the throughput-vs-power experiments:
    /// N0 = 1e-12 W, 60 dB path loss (Ω = 1e6), P_max = 1 W, desk-scale M.
    pub fn reference_regime(num_nodes: usize) -> Self {
        Self {
            num_nodes,
            ..Self::default()
        }
    }

    /// Mean normalized gain of node `j`.
    pub fn node_mean_gain(&self, j: usize) -> f64 {
        if self.mean_gain.len() == 1 {
            self.mean_gain[0]
        } else {
            self.mean_gain[j]
        }
    }

    pub fn validate(self) -> Result<Self> {
        let mut bad = Vec::new();
        let mut check = |ok: bool, field: &'static str, value: String, constraint: &'static str| {
            if !ok {
                bad.push(Violation {
                    field,
                    value,
                    constraint,
                });
            }
        };

        check(
            self.num_nodes >= 1,
            "num_nodes",
            self.num_nodes.to_string(),
            "K must be at least 1",
        );
        check(
            self.noise_power > 0.0 && self.noise_power.is_finite(),
            "noise_power",
            self.noise_power.to_string(),
            "N0 must be positive and finite",
        );
        check(
            self.avg_power > 0.0 && self.avg_power.is_finite(),
            "avg_power",
            self.avg_power.to_string(),
            "P_avg must be positive and finite",
        );
        check(
            self.max_power > 0.0 && self.max_power.is_finite(),
            "max_power",
            self.max_power.to_string(),
            "P_max must be positive and finite",
        );
        check(
            self.avg_power <= self.max_power || self.avg_power.is_nan() || self.max_power.is_nan(),
            "avg_power",
            self.avg_power.to_string(),
            "P_avg exceeds P_max",
        );
        check(
            self.processing_cost >= 0.0 && self.processing_cost.is_finite(),
            "processing_cost",
            self.processing_cost.to_string(),
            "p_c must be non-negative and finite",
        );
        check(
            self.processing_cost == 0.0 || self.num_nodes == 1,
            "processing_cost",
            self.processing_cost.to_string(),
            "processing cost is only supported with num_nodes = 1",
        );
        check(
            self.mean_gain.len() == 1 || self.mean_gain.len() == self.num_nodes,
            "mean_gain",
            format_list(&self.mean_gain),
            "need one shared value or one value per node",
        );
        check(
            self.mean_gain.iter().all(|g| *g > 0.0 && g.is_finite()),
            "mean_gain",
            format_list(&self.mean_gain),
            "every mean gain must be positive and finite",
        );
        check(
            self.num_epochs >= 1,
            "num_epochs",
            self.num_epochs.to_string(),
            "M must be at least 1",
        );
        check(
            self.root_tol > 0.0 && self.root_tol < 1.0,
            "root_tol",
            self.root_tol.to_string(),
            "root_tol must lie in (0, 1)",
        );
        check(
            self.lambda_tol > 0.0 && self.lambda_tol < 1.0,
            "lambda_tol",
            self.lambda_tol.to_string(),
            "lambda_tol must lie in (0, 1)",
        );

        if bad.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidConfig(ConfigViolations(bad)))
        }
    }

    /// Renders the config in the `key = value` format. Floats use the
    /// shortest representation that parses back to the same value.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        line("num_nodes", self.num_nodes.to_string());
        line("noise_power", fmt_f64(self.noise_power));
        line("avg_power", fmt_f64(self.avg_power));
        line("max_power", fmt_f64(self.max_power));
        line("processing_cost", fmt_f64(self.processing_cost));
        line("mean_gain", format_list(&self.mean_gain));
        line("num_epochs", self.num_epochs.to_string());
        line("rng_seed", self.rng_seed.to_string());
        line("root_tol", fmt_f64(self.root_tol));
        line("lambda_tol", fmt_f64(self.lambda_tol));
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.parse()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

impl FromStr for NetworkConfig {
    type Err = Error;

    /// Parses the `key = value` format. Does not validate.
    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = NetworkConfig::default();
        let mut seen = [false; KEYS.len()];

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::ConfigParse { line: line_no, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            let value = value.trim();
            let slot = KEYS
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| parse_err(format!("unknown key `{key}`")))?;
            if std::mem::replace(&mut seen[slot], true) {
                return Err(parse_err(format!("duplicate key `{key}`")));
            }

            let float = |v: &str| -> Result<f64> {
                v.parse::<f64>()
                    .map_err(|e| parse_err(format!("{key}: `{v}` is not a number ({e})")))
            };
            let int = |v: &str| -> Result<u64> {
                v.parse::<u64>()
                    .map_err(|e| parse_err(format!("{key}: `{v}` is not an integer ({e})")))
            };

            match key {
                "num_nodes" => cfg.num_nodes = int(value)? as usize,
                "noise_power" => cfg.noise_power = float(value)?,
                "avg_power" => cfg.avg_power = float(value)?,
                "max_power" => cfg.max_power = float(value)?,
                "processing_cost" => cfg.processing_cost = float(value)?,
                "mean_gain" => cfg.mean_gain = value.split(',').map(|v| float(v.trim())).collect::<Result<Vec<_>>>()?,
                "num_epochs" => cfg.num_epochs = int(value)? as usize,
                "rng_seed" => cfg.rng_seed = int(value)?,
                "root_tol" => cfg.root_tol = float(value)?,
                "lambda_tol" => cfg.lambda_tol = float(value)?,
                _ => unreachable!("key list and match arms out of sync"),
            }
        }
        Ok(cfg)
    }
}

fn fmt_f64(v: f64) -> String {
    // `{:?}` keeps a trailing `.0` / exponent and round-trips exactly.
    format!("{v:?}")
}

fn format_list(values: &[f64]) -> String {
    values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn violations(cfg: NetworkConfig) -> ConfigViolations {
        match cfg.validate() {
            Err(Error::InvalidConfig(v)) => v,
            other => panic!("expected violations, got {other:?}"),
        }
    }

    #[test]
    fn reference_regime_is_valid() {
        let cfg = NetworkConfig {
            num_nodes: 5,
            avg_power: 0.1,
            num_epochs: 100_000,
            ..NetworkConfig::default()
        };
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn avg_above_max_is_rejected() {
        let v = violations(NetworkConfig {
            avg_power: 2.0,
            max_power: 1.0,
            ..NetworkConfig::default()
        });
        assert!(v.to_string().contains("P_avg exceeds P_max"));
    }

    #[test]
    fn processing_cost_valid_for_single_node() {
        let cfg = NetworkConfig {
            processing_cost: 1e-5,
            ..NetworkConfig::default()
        };
        assert!(cfg.validate().is_ok());

        let multi = NetworkConfig {
            processing_cost: 1e-5,
            num_nodes: 2,
            ..NetworkConfig::default()
        };
        assert!(violations(multi).has_field("processing_cost"));
    }

    #[test]
    fn every_violation_is_reported() {
        let v = violations(NetworkConfig {
            num_nodes: 0,
            noise_power: -1.0,
            mean_gain: vec![1.0, 2.0, 0.0],
            num_epochs: 0,
            root_tol: 1.5,
            lambda_tol: 0.0,
            ..NetworkConfig::default()
        });
        for field in [
            "num_nodes",
            "noise_power",
            "mean_gain",
            "num_epochs",
            "root_tol",
            "lambda_tol",
        ] {
            assert!(v.has_field(field), "missing {field} in {v}");
        }
    }

    #[test]
    fn parses_comments_and_lists() {
        let text = "\
# reference regime
num_nodes = 3   # three nodes
mean_gain = 1e6, 2e6,3e6
avg_power=0.25
";
        let cfg: NetworkConfig = text.parse().unwrap();
        assert_eq!(cfg.num_nodes, 3);
        assert_eq!(cfg.mean_gain, vec![1e6, 2e6, 3e6]);
        assert_eq!(cfg.avg_power, 0.25);
        assert_eq!(cfg.node_mean_gain(2), 3e6);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = "num_nodes = 1\nbogus = 3\n".parse::<NetworkConfig>().unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 2, .. }), "{err}");
        let err = "avg_power = fast\n".parse::<NetworkConfig>().unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 1, .. }));
        let err = "rng_seed = 1\nrng_seed = 2\n".parse::<NetworkConfig>().unwrap_err();
        assert!(err.to_string().contains("duplicate"));
        let err = "just words\n".parse::<NetworkConfig>().unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: 1, .. }));
    }

    fn valid_config() -> impl Strategy<Value = NetworkConfig> {
        (
            1usize..8,
            1e-15f64..1e-6,
            0.01f64..=1.0,
            1e-3f64..10.0,
            prop::collection::vec(1e-3f64..1e9, 1..8),
            1usize..1_000_000,
            any::<u64>(),
            1e-14f64..0.5,
            1e-12f64..0.5,
        )
            .prop_map(|(k, n0, frac, pmax, gains, m, seed, rt, lt)| {
                let mean_gain = if gains.len() == k { gains } else { vec![gains[0]] };
                NetworkConfig {
                    num_nodes: k,
                    noise_power: n0,
                    avg_power: pmax * frac,
                    max_power: pmax,
                    processing_cost: if k == 1 { n0 * 1e7 } else { 0.0 },
                    mean_gain,
                    num_epochs: m,
                    rng_seed: seed,
                    root_tol: rt,
                    lambda_tol: lt,
                }
            })
    }

    proptest! {
        #[test]
        fn text_round_trip(cfg in valid_config()) {
            let cfg = cfg.validate().unwrap();
            let back: NetworkConfig = cfg.to_text().parse().unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
