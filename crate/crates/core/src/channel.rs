//! Block-fading channel traces.
//!
//! Each fading block (epoch) carries one power gain per node, constant over
//! the block and independent across blocks and nodes. Rayleigh amplitudes
//! give exponentially distributed power gains, so raw gains are drawn as
//! `x' = Ω·N0·E` with `E ~ Exp(1)`.
//!
//! Every epoch draws from its own ChaCha stream keyed by `(seed, epoch)`,
//! with nodes drawn in index order, so a trace does not depend on how the
//! epochs are split across threads.
//!
//! Trace files are CSV with header `epoch,node,gain_raw`, one row per
//! (epoch, node) in epoch-major order, gains unnormalized.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::config::NetworkConfig;
use crate::error::{Error, Result};

/// Channel state of one fading block.
///
/// `x` (downlink, harvesting) and `y` (uplink, information) are the
/// normalized gains; they coincide for reciprocal channels. The effective
/// per-node coefficient is `a_j = N0·x_j·y_j` and `b = Σ a_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochChannelState {
    raw_gains: Vec<f64>,
    uplink_raw: Option<Vec<f64>>,
    downlink: Vec<f64>,
    uplink: Vec<f64>,
    aux: Vec<f64>,
    aux_sum: f64,
    noise_power: f64,
}

impl EpochChannelState {
    /// Reciprocal channel from raw power gains `x'_j`.
    pub fn new(raw_gains: Vec<f64>, noise_power: f64) -> Result<Self> {
        Self::build(raw_gains, None, noise_power)
    }

    /// Non-reciprocal channel: `a_j = N0·x_j·y_j` with separate downlink
    /// and uplink gains.
    pub fn non_reciprocal(downlink_raw: Vec<f64>, uplink_raw: Vec<f64>, noise_power: f64) -> Result<Self> {
        if downlink_raw.len() != uplink_raw.len() {
            return Err(Error::InvalidArgument(format!(
                "downlink has {} nodes, uplink has {}",
                downlink_raw.len(),
                uplink_raw.len()
            )));
        }
        Self::build(downlink_raw, Some(uplink_raw), noise_power)
    }

    fn build(raw_gains: Vec<f64>, uplink_raw: Option<Vec<f64>>, n0: f64) -> Result<Self> {
        if raw_gains.is_empty() {
            return Err(Error::InvalidArgument("epoch with no nodes".into()));
        }
        if !(n0 > 0.0 && n0.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise power {n0} must be positive")));
        }
        for gains in std::iter::once(&raw_gains).chain(uplink_raw.as_ref()) {
            if let Some((node, &value)) = gains.iter().enumerate().find(|(_, g)| !(**g > 0.0 && g.is_finite())) {
                return Err(Error::NonPositiveGain { epoch: 0, node, value });
            }
        }

        let downlink: Vec<f64> = raw_gains.iter().map(|g| g / n0).collect();
        let uplink: Vec<f64> = match &uplink_raw {
            Some(up) => up.iter().map(|g| g / n0).collect(),
            None => downlink.clone(),
        };
        let aux: Vec<f64> = downlink.iter().zip(&uplink).map(|(x, y)| n0 * x * y).collect();
        let aux_sum = aux.iter().sum();
        Ok(Self {
            raw_gains,
            uplink_raw,
            downlink,
            uplink,
            aux,
            aux_sum,
            noise_power: n0,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.raw_gains.len()
    }

    /// Raw (downlink) power gains `x'_j`.
    pub fn raw_gains(&self) -> &[f64] {
        &self.raw_gains
    }

    pub fn is_reciprocal(&self) -> bool {
        self.uplink_raw.is_none()
    }

    /// Normalized downlink gains `x_j = x'_j / N0`.
    pub fn normalized_gains(&self) -> &[f64] {
        &self.downlink
    }

    /// Normalized uplink gains; equal to [`Self::normalized_gains`] when
    /// reciprocal.
    pub fn uplink_gains(&self) -> &[f64] {
        &self.uplink
    }

    /// `a_j = N0·x_j·y_j`.
    pub fn aux_coeffs(&self) -> &[f64] {
        &self.aux
    }

    /// `b = Σ_j a_j`.
    pub fn aux_sum(&self) -> f64 {
        self.aux_sum
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Generated { seed: u64 },
    Loaded { path: PathBuf },
}

#[derive(Debug, Clone)]
pub struct ChannelTrace {
    epochs: Vec<EpochChannelState>,
    noise_power: f64,
    provenance: Provenance,
}

impl ChannelTrace {
    pub fn from_epochs(epochs: Vec<EpochChannelState>, noise_power: f64, provenance: Provenance) -> Self {
        Self {
            epochs,
            noise_power,
            provenance,
        }
    }

    pub fn epochs(&self) -> &[EpochChannelState] {
        &self.epochs
    }

    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn num_nodes(&self) -> usize {
        self.epochs.first().map_or(0, |e| e.num_nodes())
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Same gains, same noise power; provenance is ignored.
    pub fn same_gains(&self, other: &ChannelTrace) -> bool {
        self.noise_power == other.noise_power && self.epochs == other.epochs
    }
}

fn epoch_rng(seed: u64, epoch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    rng
}

/// Draws `M` epochs of i.i.d. exponential power gains with means
/// `Ω_j·N0`.
pub fn generate_trace(cfg: &NetworkConfig) -> Result<ChannelTrace> {
    let cfg = cfg.clone().validate()?;
    let n0 = cfg.noise_power;
    let means: Vec<f64> = (0..cfg.num_nodes).map(|j| cfg.node_mean_gain(j) * n0).collect();
    let epochs = (0..cfg.num_epochs)
        .into_par_iter()
        .map(|i| {
            let mut rng = epoch_rng(cfg.rng_seed, i);
            let gains: Vec<f64> = means
                .iter()
                .map(|mean| {
                    let e: f64 = Exp1.sample(&mut rng);
                    // Exp1 can return exactly 0 with vanishing probability.
                    mean * e.max(f64::MIN_POSITIVE)
                })
                .collect();
            EpochChannelState::new(gains, n0).map_err(|e| e.at_epoch(i))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelTrace::from_epochs(
        epochs,
        n0,
        Provenance::Generated { seed: cfg.rng_seed },
    ))
}

/// Writes the raw gains as CSV. Floats are written in their shortest
/// exactly-reparsing form.
pub fn save_trace(trace: &ChannelTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "epoch,node,gain_raw")?;
        for (i, epoch) in trace.epochs().iter().enumerate() {
            for (j, g) in epoch.raw_gains().iter().enumerate() {
                writeln!(out, "{i},{j},{g:?}")?;
            }
        }
        out.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Reads a CSV trace written by [`save_trace`], normalizing with the
/// config's noise power. Rows must be epoch-major with nodes `0..K`.
pub fn load_trace(path: impl AsRef<Path>, cfg: &NetworkConfig) -> Result<ChannelTrace> {
    let path = path.as_ref();
    let cfg = cfg.clone().validate()?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let headers = reader.headers()?.clone();
    let expected = ["epoch", "node", "gain_raw"];
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::TraceParse {
            row: 1,
            column: 1,
            message: format!(
                "expected header `epoch,node,gain_raw`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let k = cfg.num_nodes;
    let mut epochs = Vec::new();
    let mut current: Vec<f64> = Vec::with_capacity(k);
    for (idx, record) in reader.records().enumerate() {
        // Header is row 1.
        let row = idx + 2;
        let record = record?;
        if record.len() != 3 {
            return Err(Error::TraceParse {
                row,
                column: record.len().min(3) + 1,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let field = |col: usize| -> &str { &record[col] };
        let parse_index = |col: usize| -> Result<usize> {
            field(col).parse::<usize>().map_err(|e| Error::TraceParse {
                row,
                column: col + 1,
                message: format!("`{}`: {e}", field(col)),
            })
        };
        let epoch = parse_index(0)?;
        let node = parse_index(1)?;
        let gain = field(2).parse::<f64>().map_err(|e| Error::TraceParse {
            row,
            column: 3,
            message: format!("`{}`: {e}", field(2)),
        })?;

        let (want_epoch, want_node) = (epochs.len(), current.len());
        if epoch != want_epoch || node != want_node {
            return Err(Error::TraceParse {
                row,
                column: if epoch != want_epoch { 1 } else { 2 },
                message: format!("expected (epoch {want_epoch}, node {want_node}), found ({epoch}, {node})"),
            });
        }
        if !(gain > 0.0 && gain.is_finite()) {
            return Err(Error::NonPositiveGain {
                epoch,
                node,
                value: gain,
            });
        }
        current.push(gain);
        if current.len() == k {
            let gains = std::mem::replace(&mut current, Vec::with_capacity(k));
            epochs.push(EpochChannelState::new(gains, cfg.noise_power).map_err(|e| e.at_epoch(epoch))?);
        }
    }
    if !current.is_empty() || epochs.len() != cfg.num_epochs {
        return Err(Error::TraceLength {
            expected: cfg.num_epochs,
            found: epochs.len(),
        });
    }
    Ok(ChannelTrace::from_epochs(
        epochs,
        cfg.noise_power,
        Provenance::Loaded {
            path: path.to_path_buf(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(k: usize, m: usize) -> NetworkConfig {
        NetworkConfig {
            num_nodes: k,
            num_epochs: m,
            ..NetworkConfig::default()
        }
    }

    #[test]
    fn aux_coefficients_match_recomputation() {
        let n0 = 1e-12;
        let state = EpochChannelState::new(vec![1e-6, 3.5e-7, 2e-5], n0).unwrap();
        for (j, raw) in state.raw_gains().iter().enumerate() {
            let x = state.normalized_gains()[j];
            assert!(((x - raw / n0) / x).abs() < 1e-12);
            // a = N0·x² = x'²/N0
            let a = raw * raw / n0;
            assert!(((state.aux_coeffs()[j] - a) / a).abs() < 1e-12);
        }
        let sum: f64 = state.aux_coeffs().iter().sum();
        assert!(((state.aux_sum() - sum) / sum).abs() < 1e-15);
    }

    #[test]
    fn non_reciprocal_uses_product() {
        let state = EpochChannelState::non_reciprocal(vec![2.0], vec![3.0], 1.0).unwrap();
        assert_eq!(state.aux_coeffs(), &[6.0]);
        assert!(!state.is_reciprocal());
        assert!(EpochChannelState::non_reciprocal(vec![2.0], vec![3.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn rejects_non_positive_gain() {
        assert!(matches!(
            EpochChannelState::new(vec![1.0, 0.0], 1.0),
            Err(Error::NonPositiveGain { node: 1, .. })
        ));
        assert!(EpochChannelState::new(vec![f64::NAN], 1.0).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = small_cfg(3, 500);
        let a = generate_trace(&cfg).unwrap();
        let b = generate_trace(&cfg).unwrap();
        assert!(a.same_gains(&b));
        let other = generate_trace(&NetworkConfig { rng_seed: 2, ..cfg }).unwrap();
        assert!(!a.same_gains(&other));
    }

    #[test]
    fn generation_ignores_thread_count() {
        let cfg = small_cfg(2, 2_000);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| generate_trace(&cfg)).unwrap();
        let b = four.install(|| generate_trace(&cfg)).unwrap();
        assert!(a.same_gains(&b));
    }

    #[test]
    fn normalized_mean_tracks_omega() {
        let cfg = NetworkConfig {
            num_nodes: 2,
            mean_gain: vec![1e6, 4e6],
            num_epochs: 100_000,
            ..NetworkConfig::default()
        };
        let trace = generate_trace(&cfg).unwrap();
        for j in 0..2 {
            let mean = trace.epochs().iter().map(|e| e.normalized_gains()[j]).sum::<f64>() / trace.len() as f64;
            let omega = cfg.node_mean_gain(j);
            assert!((mean / omega - 1.0).abs() < 0.01, "node {j}: {mean} vs {omega}");
        }
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let cfg = small_cfg(3, 50);
        let trace = generate_trace(&cfg).unwrap();
        save_trace(&trace, &path).unwrap();
        let back = load_trace(&path, &cfg).unwrap();
        assert!(trace.same_gains(&back));
        assert_eq!(back.provenance(), &Provenance::Loaded { path: path.clone() });
    }

    #[test]
    fn single_cell_trace_has_one_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.csv");
        let cfg = small_cfg(1, 1);
        save_trace(&generate_trace(&cfg).unwrap(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn empty_path_is_io_error() {
        let trace = generate_trace(&small_cfg(1, 1)).unwrap();
        assert!(matches!(save_trace(&trace, ""), Err(Error::Io { .. })));
    }

    #[test]
    fn load_rejects_zero_gain() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("zero.csv");
        std::fs::write(&path, "epoch,node,gain_raw\n0,0,1e-6\n0,1,0\n").unwrap();
        let err = load_trace(&path, &small_cfg(2, 1)).unwrap_err();
        assert_eq!(err.to_string(), "non-positive gain at (0,1): 0");
    }

    #[test]
    fn load_rejects_short_trace() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.csv");
        let cfg = small_cfg(2, 4);
        let full = generate_trace(&NetworkConfig {
            num_epochs: 3,
            ..cfg.clone()
        })
        .unwrap();
        save_trace(&full, &path).unwrap();
        assert!(matches!(
            load_trace(&path, &cfg),
            Err(Error::TraceLength { expected: 4, found: 3 })
        ));
    }

    #[test]
    fn load_reports_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "epoch,node,gain_raw\n0,0,1e-6\n1,0,abc\n").unwrap();
        let err = load_trace(&path, &small_cfg(1, 2)).unwrap_err();
        assert!(matches!(err, Error::TraceParse { row: 3, column: 3, .. }), "{err}");

        std::fs::write(&path, "epoch,node,gain_raw\n0,1,1e-6\n").unwrap();
        let err = load_trace(&path, &small_cfg(2, 1)).unwrap_err();
        assert!(matches!(err, Error::TraceParse { row: 2, column: 2, .. }), "{err}");
    }
}
