//! Experiment configuration and its `key = value` text form.
//!
//! Parsing goes through an ordered key/value map, so the CLI can overlay
//! flag values on a file before the configuration is validated.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use crate::detect::{Detector, EXHAUSTIVE_LIMIT, TRELLIS_STATE_LIMIT};
use crate::error::{Error, Result};
use crate::modulation::Scheme;

/// Every key the parser accepts, in serialization order.
pub const KEYS: [&str; 18] = [
    "m",
    "k",
    "l",
    "scheme",
    "mu",
    "snr_db",
    "snr_unit",
    "trials",
    "min_errors",
    "max_trials",
    "detector",
    "beamformer",
    "channel",
    "dt_ratio",
    "delta_deg",
    "seed",
    "sigma2",
    "out",
];

/// Whether `snr_db` is `E_s/σ²` or `E_b/σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnrUnit {
    Symbol,
    Bit,
}

impl SnrUnit {
    pub fn token(self) -> &'static str {
        match self {
            SnrUnit::Symbol => "symbol",
            SnrUnit::Bit => "bit",
        }
    }
}

impl FromStr for SnrUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symbol" => Ok(SnrUnit::Symbol),
            "bit" => Ok(SnrUnit::Bit),
            _ => Err(Error::arg(format!("unknown SNR unit `{s}` (expected symbol or bit)"))),
        }
    }
}

/// Transmit-side matrix `B` used by the runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Beamformer {
    /// `(1/√K)[I_K | 0]` with the configured `K`.
    Identity,
    /// `(1/√K)[I_K | 0]` with `K` taken from the exact design at each SNR.
    IdentityMatched,
    Waterfill,
    Exact,
}

impl Beamformer {
    pub const ALL: [Beamformer; 4] = [
        Beamformer::Identity,
        Beamformer::IdentityMatched,
        Beamformer::Waterfill,
        Beamformer::Exact,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Beamformer::Identity => "identity",
            Beamformer::IdentityMatched => "identity-matched",
            Beamformer::Waterfill => "waterfill",
            Beamformer::Exact => "exact",
        }
    }

    /// Whether `B` depends on the noise level.
    pub fn is_designed(self) -> bool {
        !matches!(self, Beamformer::Identity)
    }
}

impl FromStr for Beamformer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Beamformer::ALL
            .into_iter()
            .find(|b| b.token() == s)
            .ok_or_else(|| Error::arg(format!("unknown beamformer `{s}` (expected identity, identity-matched, waterfill or exact)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelSpec {
    Iid,
    /// Broadside array with antenna spacing `dt_ratio` wavelengths and angle spread `delta_deg`.
    Broadside { dt_ratio: f64, delta_deg: f64 },
}

/// One BER/SER curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub m: usize,
    /// Rows of `B`. Designed beamformers choose their own.
    pub k: usize,
    pub l: usize,
    pub scheme: Scheme,
    pub mu: usize,
    pub snr_db: Vec<f64>,
    pub snr_unit: SnrUnit,
    /// Trials per SNR point, or the first wave when `min_errors` is set.
    pub trials: u64,
    /// Keep adding waves of `trials` until this many symbol errors.
    pub min_errors: Option<u64>,
    /// Trial cap for the `min_errors` rule.
    pub max_trials: Option<u64>,
    pub detector: Detector,
    pub beamformer: Beamformer,
    pub channel: ChannelSpec,
    pub seed: u64,
    /// Fixed noise variance overriding the SNR grid.
    pub sigma2: Option<f64>,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            m: 2,
            k: 2,
            l: 2,
            scheme: Scheme::Qam,
            mu: 4,
            snr_db: (0..=10).map(|i| 2.0 * i as f64).collect(),
            snr_unit: SnrUnit::Symbol,
            trials: 10_000,
            min_errors: None,
            max_trials: None,
            detector: Detector::Zf,
            beamformer: Beamformer::Identity,
            channel: ChannelSpec::Iid,
            seed: 1,
            sigma2: None,
            out: None,
        }
    }
}

/// Parses `start:step:stop` or a comma-separated list.
pub fn parse_snr_grid(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    let num = |s: &str| -> Result<f64> {
        let v: f64 = s.trim().parse().map_err(|_| Error::config("snr_db", format!("`{s}` is not a number")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::config("snr_db", format!("`{s}` is not finite")))
        }
    };
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let (start, step, stop) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) {
            return Err(Error::config("snr_db", "step must be positive"));
        }
        if stop < start {
            return Err(Error::config("snr_db", "stop is below start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if count > 100_000 {
            return Err(Error::config("snr_db", format!("{count} points is too many")));
        }
        return Ok((0..count).map(|i| start + i as f64 * step).collect());
    }
    if parts.len() != 1 || text.is_empty() {
        return Err(Error::config("snr_db", format!("expected start:step:stop or a list, got `{text}`")));
    }
    text.split(',').map(num).collect()
}

/// Splits `key = value` lines, dropping `#` comments and blank lines.
///
/// Unknown and repeated keys are errors naming the key.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut pairs = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::config(format!("line {}", lineno + 1), format!("expected `key = value`, got `{line}`")));
        };
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::config(key, "unknown key"));
        }
        if pairs.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(Error::config(key, "given more than once"));
        }
    }
    Ok(pairs)
}

/// Parses and validates a configuration file body.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    ExperimentConfig::from_pairs(&parse_pairs(text)?)
}

fn field<T: FromStr>(pairs: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    pairs
        .get(key)
        .map(|v| v.parse::<T>().map_err(|e| Error::config(key, format!("`{v}`: {e}"))))
        .transpose()
}

impl ExperimentConfig {
    /// Builds a configuration from key/value pairs over the defaults.
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        if let Some(key) = pairs.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::config(key.as_str(), "unknown key"));
        }
        let mut c = Self::default();
        if let Some(v) = field(pairs, "m")? {
            c.m = v;
        }
        if let Some(v) = field(pairs, "k")? {
            c.k = v;
        }
        if let Some(v) = field(pairs, "l")? {
            c.l = v;
        }
        if let Some(v) = pairs.get("scheme") {
            c.scheme = v.parse().map_err(|e| Error::config("scheme", format!("{e}")))?;
        }
        if let Some(v) = field(pairs, "mu")? {
            c.mu = v;
        }
        if let Some(v) = pairs.get("snr_db") {
            c.snr_db = parse_snr_grid(v)?;
        }
        if let Some(v) = pairs.get("snr_unit") {
            c.snr_unit = v.parse().map_err(|e| Error::config("snr_unit", format!("{e}")))?;
        }
        if let Some(v) = field(pairs, "trials")? {
            c.trials = v;
        }
        c.min_errors = field(pairs, "min_errors")?;
        c.max_trials = field(pairs, "max_trials")?;
        if let Some(v) = pairs.get("detector") {
            c.detector = v.parse().map_err(|e| Error::config("detector", format!("{e}")))?;
        }
        if let Some(v) = pairs.get("beamformer") {
            c.beamformer = v.parse().map_err(|e| Error::config("beamformer", format!("{e}")))?;
        }
        let dt_ratio: Option<f64> = field(pairs, "dt_ratio")?;
        let delta_deg: Option<f64> = field(pairs, "delta_deg")?;
        c.channel = match pairs.get("channel").map(String::as_str).unwrap_or("iid") {
            "iid" => {
                if let Some(key) = ["dt_ratio", "delta_deg"].into_iter().find(|k| pairs.contains_key(*k)) {
                    return Err(Error::config(key, "only applies to the broadside channel"));
                }
                ChannelSpec::Iid
            }
            "broadside" => ChannelSpec::Broadside {
                dt_ratio: dt_ratio.ok_or_else(|| Error::config("dt_ratio", "required by the broadside channel"))?,
                delta_deg: delta_deg.ok_or_else(|| Error::config("delta_deg", "required by the broadside channel"))?,
            },
            other => return Err(Error::config("channel", format!("unknown channel `{other}` (expected iid or broadside)"))),
        };
        if let Some(v) = field(pairs, "seed")? {
            c.seed = v;
        }
        c.sigma2 = field(pairs, "sigma2")?;
        c.out = pairs.get("out").map(PathBuf::from);
        c.validate()?;
        Ok(c)
    }

    /// Checks every invariant, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::config("m", "must be at least 1"));
        }
        if self.k == 0 || self.k > self.m {
            return Err(Error::config("k", format!("must satisfy 1 <= K <= M = {}", self.m)));
        }
        if self.l == 0 {
            return Err(Error::config("l", "must be at least 1"));
        }
        self.scheme.validate_mu(self.mu).map_err(|e| Error::config("mu", e.to_string()))?;
        if self.snr_db.is_empty() {
            return Err(Error::config("snr_db", "needs at least one point"));
        }
        if self.snr_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("snr_db", "points must be finite"));
        }
        if self.snr_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("snr_db", "points must be strictly increasing"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.min_errors == Some(0) {
            return Err(Error::config("min_errors", "must be at least 1"));
        }
        if let Some(cap) = self.max_trials {
            if self.min_errors.is_none() {
                return Err(Error::config("max_trials", "only applies with min_errors"));
            }
            if cap < self.trials {
                return Err(Error::config("max_trials", "is below trials"));
            }
        }
        if let ChannelSpec::Broadside { dt_ratio, delta_deg } = self.channel {
            if !(dt_ratio > 0.0) || !dt_ratio.is_finite() {
                return Err(Error::config("dt_ratio", "must be positive"));
            }
            if !(delta_deg >= 0.0) || !delta_deg.is_finite() {
                return Err(Error::config("delta_deg", "must be non-negative"));
            }
        }
        if let Some(s2) = self.sigma2 {
            if !(s2 >= 0.0) || !s2.is_finite() {
                return Err(Error::config("sigma2", "must be finite and non-negative"));
            }
            if s2 == 0.0 && self.beamformer.is_designed() {
                return Err(Error::config("beamformer", "designed beamformers need a positive noise variance"));
            }
        }
        let widest = if self.beamformer.is_designed() { self.m } else { self.k };
        match self.detector {
            Detector::Ml if !fits(self.mu, self.l, EXHAUSTIVE_LIMIT) => Err(Error::config(
                "detector",
                format!("exhaustive ML over {}^{} candidates exceeds {EXHAUSTIVE_LIMIT}; use viterbi", self.mu, self.l),
            )),
            Detector::Viterbi if !fits(self.mu + 1, widest - 1, TRELLIS_STATE_LIMIT) => Err(Error::config(
                "detector",
                format!("trellis with {}^{} states exceeds {TRELLIS_STATE_LIMIT}", self.mu + 1, widest - 1),
            )),
            _ => Ok(()),
        }
    }

    /// The `key = value` form read back by [`parse_config`].
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("m", &self.m);
        put("k", &self.k);
        put("l", &self.l);
        put("scheme", &self.scheme.token());
        put("mu", &self.mu);
        let grid: Vec<String> = self.snr_db.iter().map(|v| v.to_string()).collect();
        put("snr_db", &grid.join(","));
        put("snr_unit", &self.snr_unit.token());
        put("trials", &self.trials);
        if let Some(v) = self.min_errors {
            put("min_errors", &v);
        }
        if let Some(v) = self.max_trials {
            put("max_trials", &v);
        }
        put("detector", &self.detector.token());
        put("beamformer", &self.beamformer.token());
        match self.channel {
            ChannelSpec::Iid => put("channel", &"iid"),
            ChannelSpec::Broadside { dt_ratio, delta_deg } => {
                put("channel", &"broadside");
                put("dt_ratio", &dt_ratio);
                put("delta_deg", &delta_deg);
            }
        }
        put("seed", &self.seed);
        if let Some(v) = self.sigma2 {
            put("sigma2", &v);
        }
        if let Some(p) = &self.out {
            put("out", &p.display());
        }
        s
    }

    /// `σ²` at grid point `i`.
    pub fn noise_var(&self, i: usize) -> f64 {
        if let Some(s2) = self.sigma2 {
            return s2;
        }
        let es = self.scheme.avg_energy(self.mu);
        let per = match self.snr_unit {
            SnrUnit::Symbol => es,
            SnrUnit::Bit => es / (self.mu as f64).log2(),
        };
        per * 10f64.powf(-self.snr_db[i] / 10.0)
    }
}

fn fits(base: usize, exp: usize, limit: u64) -> bool {
    let mut acc: u64 = 1;
    for _ in 0..exp {
        acc = match acc.checked_mul(base as u64) {
            Some(v) if v <= limit => v,
            _ => return false,
        };
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(parse_config(&c.serialize()).unwrap(), c);
        assert_eq!(parse_config("").unwrap(), c);
    }

    #[test]
    fn comments_blank_lines_and_grids() {
        let text = "# header\n\nm = 4 # antennas\nk = 3\nl=8\nsnr_db = 0:2.5:10\nchannel = broadside\ndt_ratio = 0.5\ndelta_deg = 5\n";
        let c = parse_config(text).unwrap();
        assert_eq!((c.m, c.k, c.l), (4, 3, 8));
        assert_eq!(c.snr_db, vec![0.0, 2.5, 5.0, 7.5, 10.0]);
        assert_eq!(c.channel, ChannelSpec::Broadside { dt_ratio: 0.5, delta_deg: 5.0 });
        assert_eq!(parse_snr_grid("0:0.1:1").unwrap().len(), 11);
        assert_eq!(parse_snr_grid("3, 1.5").unwrap(), vec![3.0, 1.5]);
    }

    fn config_field(text: &str) -> String {
        match parse_config(text) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(config_field("bogus = 1"), "bogus");
        assert_eq!(config_field("m = 2\nm = 3"), "m");
        assert_eq!(config_field("m = two"), "m");
        assert_eq!(config_field("m = 2\nk = 3"), "k");
        assert_eq!(config_field("k = 0"), "k");
        assert_eq!(config_field("mu = 8"), "mu");
        assert_eq!(config_field("snr_db = 4,2"), "snr_db");
        assert_eq!(config_field("snr_db = 0:-1:4"), "snr_db");
        assert_eq!(config_field("trials = 0"), "trials");
        assert_eq!(config_field("detector = sphere"), "detector");
        assert_eq!(config_field("beamformer = magic"), "beamformer");
        assert_eq!(config_field("dt_ratio = 0.5"), "dt_ratio");
        assert_eq!(config_field("channel = broadside\ndt_ratio = 0.5"), "delta_deg");
        assert_eq!(config_field("channel = rician"), "channel");
        assert_eq!(config_field("max_trials = 100"), "max_trials");
        assert_eq!(config_field("sigma2 = 0\nbeamformer = exact"), "beamformer");
        assert_eq!(config_field("detector = ml\nl = 11"), "detector");
        assert_eq!(config_field("just words"), "line 1");
        assert!(parse_config("detector = ml\nl = 10").is_ok());
    }

    fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
        let geometry = (1usize..=8).prop_flat_map(|m| (Just(m), 1..=m, 1usize..=6));
        let modulation = prop_oneof![
            prop::sample::select(vec![4usize, 16, 64]).prop_map(|mu| (Scheme::Qam, mu)),
            prop::sample::select(vec![2usize, 4, 8]).prop_map(|mu| (Scheme::Pam, mu)),
            prop::sample::select(vec![2usize, 4, 8, 16]).prop_map(|mu| (Scheme::Psk, mu)),
        ];
        let grid = (-20.0f64..20.0, 0.01f64..5.0, 1usize..12).prop_map(|(a, s, n)| (0..n).map(|i| a + i as f64 * s).collect::<Vec<_>>());
        let stopping = (1u64..1_000_000, prop::option::of(1u64..1000), prop::option::of(0u64..1_000_000));
        let channel = prop_oneof![
            Just(ChannelSpec::Iid),
            (0.01f64..4.0, 0.0f64..90.0).prop_map(|(dt_ratio, delta_deg)| ChannelSpec::Broadside { dt_ratio, delta_deg }),
        ];
        let choices = (
            prop::sample::select(vec![Detector::Zf, Detector::Mmse, Detector::ZfDfe]),
            prop::sample::select(Beamformer::ALL.to_vec()),
            any::<bool>(),
        );
        let extra = (any::<u64>(), prop::option::of(1e-6f64..10.0), prop::option::of("[a-z]{1,8}\\.csv"));
        (geometry, modulation, grid, stopping, channel, choices, extra).prop_map(
            |((m, k, l), (scheme, mu), snr_db, (trials, min_errors, extra_cap), channel, (detector, beamformer, bit), (seed, sigma2, out))| {
                ExperimentConfig {
                    m,
                    k,
                    l,
                    scheme,
                    mu,
                    snr_db,
                    snr_unit: if bit { SnrUnit::Bit } else { SnrUnit::Symbol },
                    trials,
                    min_errors,
                    max_trials: min_errors.and(extra_cap.map(|e| trials + e)),
                    detector,
                    beamformer,
                    channel,
                    seed,
                    sigma2,
                    out: out.map(PathBuf::from),
                }
            },
        )
    }

    proptest! {
        #[test]
        fn parse_inverts_serialize(c in arb_config()) {
            c.validate().unwrap();
            prop_assert_eq!(parse_config(&c.serialize()).unwrap(), c);
        }
    }

    #[test]
    fn noise_variance_conventions() {
        let mut c = ExperimentConfig { mu: 16, snr_db: vec![10.0], ..Default::default() };
        assert!((c.noise_var(0) - 1.0).abs() < 1e-15);
        c.snr_unit = SnrUnit::Bit;
        assert!((c.noise_var(0) - 0.25).abs() < 1e-15);
        c.sigma2 = Some(0.0);
        assert_eq!(c.noise_var(0), 0.0);
    }
}
