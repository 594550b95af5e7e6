//! `tstbc`: BER sweeps, beamformer design and code-constant estimation.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toeplitz_stbc::analytics::{estimate_constants, ToeplitzFamily};
use toeplitz_stbc::channel::correlation_broadside;
use toeplitz_stbc::design::{identity_beamformer, optimize_exact, optimize_waterfill, worst_case_pep, Method};
use toeplitz_stbc::sim::{csv_string, emit_csv, parse_pairs, preset, run_experiment};
use toeplitz_stbc::{Complex64, ComplexMatrix, Error, ExperimentConfig, Result};

#[derive(Parser)]
#[command(name = "tstbc", version, about = "Toeplitz space-time block code simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo BER/SER sweep written as CSV.
    Ber(BerArgs),
    /// Transmission-matrix design for a channel covariance.
    Design(DesignArgs),
    /// Sampled determinant constants of a matrix family.
    Constants(ConstantsArgs),
}

#[derive(Args)]
struct BerArgs {
    /// Named scenario family; `--out` is then a directory.
    #[arg(long)]
    preset: Option<String>,
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    l: Option<String>,
    /// qam, pam or psk.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    /// `start:step:stop` in dB, or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,
    /// symbol or bit.
    #[arg(long)]
    snr_unit: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    min_errors: Option<String>,
    #[arg(long)]
    max_trials: Option<String>,
    /// zf, mmse, zfdfe, ml or viterbi.
    #[arg(long)]
    detector: Option<String>,
    /// identity, identity-matched, waterfill or exact.
    #[arg(long)]
    beamformer: Option<String>,
    /// iid or broadside.
    #[arg(long)]
    channel: Option<String>,
    #[arg(long)]
    dt_ratio: Option<String>,
    #[arg(long)]
    delta_deg: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Fixed noise variance per real dimension, overriding the SNR grid.
    #[arg(long)]
    sigma2: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

impl BerArgs {
    fn flag_pairs(&self) -> Vec<(&'static str, &String)> {
        let flags = [
            ("m", &self.m),
            ("k", &self.k),
            ("l", &self.l),
            ("scheme", &self.scheme),
            ("mu", &self.mu),
            ("snr_db", &self.snr),
            ("snr_unit", &self.snr_unit),
            ("trials", &self.trials),
            ("min_errors", &self.min_errors),
            ("max_trials", &self.max_trials),
            ("detector", &self.detector),
            ("beamformer", &self.beamformer),
            ("channel", &self.channel),
            ("dt_ratio", &self.dt_ratio),
            ("delta_deg", &self.delta_deg),
            ("seed", &self.seed),
            ("sigma2", &self.sigma2),
        ];
        flags.into_iter().filter_map(|(k, v)| v.as_ref().map(|v| (k, v))).collect()
    }
}

#[derive(Args)]
struct DesignArgs {
    /// Covariance file (one row per line, entries like `1` or `0.5+0.2i`),
    /// or `broadside:<M>:<dt_ratio>:<delta_deg>`.
    #[arg(long)]
    sigma: String,
    #[arg(long)]
    dmin: f64,
    /// Noise variance per real dimension.
    #[arg(long)]
    sigma2: f64,
    /// exact, waterfill or identity.
    #[arg(long, default_value = "exact")]
    method: String,
}

#[derive(Args)]
struct ConstantsArgs {
    #[arg(long, default_value = "toeplitz")]
    family: String,
    #[arg(long)]
    l: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Ber(a) => ber(a),
        Command::Design(a) => design(a),
        Command::Constants(a) => constants(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Convergence { best, .. } = &e {
                eprintln!("best iterate: {}", join(best));
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Argument(_) => 2,
        Error::NumericalDomain(_) | Error::SingularChannel { .. } | Error::Capacity(_) | Error::Convergence { .. } => 3,
        Error::Io { .. } => 1,
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(", ")
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Layers flag values over a base map of key/value pairs.
fn overlay(mut base: BTreeMap<String, String>, layer: &BTreeMap<String, String>) -> BTreeMap<String, String> {
    for (k, v) in layer {
        // A different channel invalidates the broadside parameters of the layer below.
        if k == "channel" && v == "iid" {
            base.remove("dt_ratio");
            base.remove("delta_deg");
        }
        base.insert(k.clone(), v.clone());
    }
    base
}

fn ber(a: BerArgs) -> Result<()> {
    let mut layer = match &a.config {
        Some(path) => parse_pairs(&read_text(path)?)?,
        None => BTreeMap::new(),
    };
    for (k, v) in a.flag_pairs() {
        layer = overlay(layer, &BTreeMap::from([(k.to_string(), v.clone())]));
    }
    let Some(name) = &a.preset else {
        if let Some(out) = &a.out {
            layer.insert("out".into(), out.clone());
        }
        let cfg = ExperimentConfig::from_pairs(&layer)?;
        let records = run_experiment(&cfg)?;
        return match &cfg.out {
            Some(path) => emit_csv(&records, path),
            None => print_stdout(&csv_string(&records)),
        };
    };
    let p = preset(name)?;
    for (label, base) in p.curves {
        let cfg = ExperimentConfig::from_pairs(&overlay(parse_pairs(&base.serialize())?, &layer))?;
        let records = run_experiment(&cfg)?;
        match &a.out {
            Some(dir) => emit_csv(&records, &Path::new(dir).join(format!("{label}.csv")))?,
            None => print_stdout(&format!("# {label}\n{}", csv_string(&records)))?,
        }
    }
    Ok(())
}

fn print_stdout(text: &str) -> Result<()> {
    io::stdout()
        .write_all(text.as_bytes())
        .map_err(|source| Error::Io { path: PathBuf::from("<stdout>"), source })
}

fn parse_covariance(spec: &str) -> Result<ComplexMatrix> {
    if let Some(rest) = spec.strip_prefix("broadside:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let bad = || Error::Config {
            field: "sigma".into(),
            message: format!("expected broadside:<M>:<dt_ratio>:<delta_deg>, got `{spec}`"),
        };
        if parts.len() != 3 {
            return Err(bad());
        }
        let m: usize = parts[0].parse().map_err(|_| bad())?;
        let ratio: f64 = parts[1].parse().map_err(|_| bad())?;
        let delta: f64 = parts[2].parse().map_err(|_| bad())?;
        return correlation_broadside(m, ratio, delta.to_radians());
    }
    let path = Path::new(spec);
    let text = read_text(path)?;
    let rows: Vec<Vec<Complex64>> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split_whitespace()
                .map(|cell| {
                    cell.parse::<Complex64>().map_err(|_| Error::Config {
                        field: "sigma".into(),
                        message: format!("{}: cannot parse entry `{cell}`", path.display()),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config { field: "sigma".into(), message: format!("{}: covariance must be square", path.display()) });
    }
    ComplexMatrix::from_row_major(n, n, rows.into_iter().flatten().collect())
}

fn design(a: DesignArgs) -> Result<()> {
    let sigma = parse_covariance(&a.sigma)?;
    let method: Method = a.method.parse().map_err(|e: Error| Error::Config { field: "method".into(), message: e.to_string() })?;
    let d = match method {
        Method::Exact => optimize_exact(&sigma, a.dmin, a.sigma2)?,
        Method::Waterfill => optimize_waterfill(&sigma, a.dmin, a.sigma2)?,
        Method::Identity => identity_beamformer(sigma.rows(), sigma.rows())?,
    };
    let eps = a.dmin * a.dmin / (8.0 * a.sigma2);
    let objective = match d.objective {
        Some(g) => g,
        None => worst_case_pep(&d.b, &sigma, eps)?,
    };
    let mut out = format!("method = {}\nk = {}\ngamma_sq = {}\nobjective = {objective:.16e}\n", d.method, d.k(), join(&d.gamma_sq()));
    if let Some(c) = d.chernoff {
        out.push_str(&format!("chernoff = {c:.16e}\n"));
    }
    print_stdout(&out)
}

fn constants(a: ConstantsArgs) -> Result<()> {
    if a.family != "toeplitz" {
        return Err(Error::Config { field: "family".into(), message: format!("unknown family `{}` (expected toeplitz)", a.family) });
    }
    let e = estimate_constants(&ToeplitzFamily { l: a.l, k: a.k }, a.samples, a.seed)?;
    print_stdout(&format!(
        "samples = {}\nc_min_hat = {:.16e}\nc_max_hat = {:.16e}\nc0_hat = {:.16e}\nc0_direct = {:.16e}\n",
        e.samples, e.c_min_hat, e.c_max_hat, e.c0_hat, e.c0_direct
    ))
}
