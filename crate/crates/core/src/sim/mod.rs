//! Monte Carlo BER/SER sweeps.
//!
//! Each SNR point is split into chunks of [`CHUNK_TRIALS`] trials. Chunk `c`
//! of point `i` draws from its own ChaCha stream seeded by `(seed, i, c)`,
//! and chunk counts are summed in index order, so results do not depend on
//! the number of worker threads.

mod config;
mod csv;
mod preset;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{draw_channel, transmit, ChannelModel};
use crate::design::{identity_beamformer, optimize_exact, optimize_waterfill, BeamformerDesign};
use crate::detect::{DetectionProblem, Detector};
use crate::error::{Error, Result};
use crate::modulation::Constellation;
use crate::stbc::ToeplitzCode;

pub use config::{parse_config, parse_pairs, parse_snr_grid, Beamformer, ChannelSpec, ExperimentConfig, SnrUnit, KEYS};
pub use csv::{csv_string, emit_csv, parse_csv, write_csv, CurveRecord, CSV_HEADER};
pub use preset::{preset, Preset, PRESET_NAMES};

pub const CHUNK_TRIALS: u64 = 1000;
/// Consecutive singular draws tolerated within one trial.
pub const MAX_REDRAWS: u64 = 1000;
/// Default trial cap under `min_errors`, as a multiple of `trials`.
pub const DEFAULT_CAP_FACTOR: u64 = 100;

/// Everything a trial at one SNR point needs.
#[derive(Debug, Clone)]
pub struct PointSetup {
    pub snr_db: f64,
    pub sigma2: f64,
    pub design: BeamformerDesign,
    pub code: ToeplitzCode,
}

pub fn channel_model(cfg: &ExperimentConfig) -> Result<ChannelModel> {
    match cfg.channel {
        ChannelSpec::Iid => ChannelModel::iid(cfg.m),
        ChannelSpec::Broadside { dt_ratio, delta_deg } => ChannelModel::broadside(cfg.m, dt_ratio, delta_deg),
    }
}

/// The transmission matrix used at noise level `sigma2`.
pub fn beamformer_for(cfg: &ExperimentConfig, model: &ChannelModel, sigma2: f64) -> Result<BeamformerDesign> {
    let d_min = Constellation::new(cfg.scheme, cfg.mu)?.d_min();
    match cfg.beamformer {
        Beamformer::Identity => identity_beamformer(cfg.m, cfg.k),
        Beamformer::IdentityMatched => identity_beamformer(cfg.m, optimize_exact(model.sigma(), d_min, sigma2)?.k()),
        Beamformer::Waterfill => optimize_waterfill(model.sigma(), d_min, sigma2),
        Beamformer::Exact => optimize_exact(model.sigma(), d_min, sigma2),
    }
}

pub fn point_setup(cfg: &ExperimentConfig, model: &ChannelModel, i: usize) -> Result<PointSetup> {
    let sigma2 = cfg.noise_var(i);
    let design = beamformer_for(cfg, model, sigma2)?;
    let code = ToeplitzCode::new(design.b.clone(), cfg.l)?;
    Ok(PointSetup { snr_db: cfg.snr_db[i], sigma2, design, code })
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn chunk_seed(seed: u64, point: usize, chunk: u64) -> u64 {
    seed ^ mix(mix(point as u64) ^ chunk)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counts {
    trials: u64,
    bit_errors: u64,
    symbol_errors: u64,
    redrawn: u64,
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, o: Self) {
        self.trials += o.trials;
        self.bit_errors += o.bit_errors;
        self.symbol_errors += o.symbol_errors;
        self.redrawn += o.redrawn;
    }
}

fn run_chunk(setup: &PointSetup, c: &Constellation, model: &ChannelModel, detector: Detector, trials: u64, seed: u64) -> Result<Counts> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = Counts::default();
    let l = setup.code.l();
    for _ in 0..trials {
        let mut redraws = 0;
        loop {
            let h = draw_channel(model, &mut rng);
            let sent: Vec<usize> = (0..l).map(|_| rng.random_range(0..c.mu())).collect();
            let s: Vec<Complex64> = sent.iter().map(|&i| c.point(i)).collect();
            let y = transmit(&setup.code.encode(&s)?, &h, setup.sigma2, &mut rng)?;
            let hc = setup.code.equivalent_channel(&h)?;
            let problem = DetectionProblem::new(&hc, &y, setup.sigma2, c)?;
            match detector.detect(&problem, &setup.code) {
                Ok(d) => {
                    for (&a, &b) in d.indices.iter().zip(&sent) {
                        if a != b {
                            counts.symbol_errors += 1;
                            counts.bit_errors += u64::from(c.bit_distance(a, b));
                        }
                    }
                    break;
                }
                Err(Error::SingularChannel { .. }) if redraws < MAX_REDRAWS => {
                    redraws += 1;
                    counts.redrawn += 1;
                }
                Err(e) => return Err(e),
            }
        }
        counts.trials += 1;
    }
    Ok(counts)
}

/// Runs `budget` trials as chunks `first_chunk..`, returning the counts and the next chunk index.
fn run_wave(cfg: &ExperimentConfig, setup: &PointSetup, c: &Constellation, model: &ChannelModel, point: usize, first_chunk: u64, budget: u64) -> Result<(Counts, u64)> {
    let chunks = budget.div_ceil(CHUNK_TRIALS);
    let parts: Vec<Counts> = (0..chunks)
        .into_par_iter()
        .map(|j| {
            let n = CHUNK_TRIALS.min(budget - j * CHUNK_TRIALS);
            run_chunk(setup, c, model, cfg.detector, n, chunk_seed(cfg.seed, point, first_chunk + j))
        })
        .collect::<Result<_>>()?;
    let mut total = Counts::default();
    for p in parts {
        total += p;
    }
    Ok((total, first_chunk + chunks))
}

/// Simulates grid point `i`.
pub fn run_point(cfg: &ExperimentConfig, model: &ChannelModel, i: usize) -> Result<CurveRecord> {
    let c = Constellation::new(cfg.scheme, cfg.mu)?;
    let setup = point_setup(cfg, model, i)?;
    let (mut total, mut next) = run_wave(cfg, &setup, &c, model, i, 0, cfg.trials)?;
    if let Some(target) = cfg.min_errors {
        let cap = cfg.max_trials.unwrap_or(cfg.trials.saturating_mul(DEFAULT_CAP_FACTOR));
        while total.symbol_errors < target && total.trials < cap {
            let (more, after) = run_wave(cfg, &setup, &c, model, i, next, cfg.trials.min(cap - total.trials))?;
            total += more;
            next = after;
        }
    }
    Ok(CurveRecord::from_counts(
        setup.snr_db,
        total.trials,
        total.bit_errors,
        total.symbol_errors,
        total.redrawn,
        cfg.l,
        c.bits_per_symbol(),
    ))
}

/// One record per SNR point, in grid order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<CurveRecord>> {
    cfg.validate()?;
    let model = channel_model(cfg)?;
    (0..cfg.snr_db.len()).map(|i| run_point(cfg, &model, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulation::Scheme;

    fn small(detector: Detector) -> ExperimentConfig {
        ExperimentConfig {
            m: 2,
            k: 2,
            l: 3,
            snr_db: vec![0.0, 6.0, 12.0],
            trials: 2500,
            detector,
            seed: 42,
            ..Default::default()
        }
    }

    #[test]
    fn noiseless_runs_are_error_free() {
        for detector in Detector::ALL {
            for (scheme, mu) in [(Scheme::Qam, 16), (Scheme::Psk, 8)] {
                let cfg = ExperimentConfig { scheme, mu, sigma2: Some(0.0), trials: 300, ..small(detector) };
                for r in run_experiment(&cfg).unwrap() {
                    assert_eq!((r.bit_errors, r.symbol_errors, r.trials), (0, 0, 300));
                    assert_eq!(r.ber, 0.0);
                }
            }
        }
    }

    #[test]
    fn identical_across_thread_counts() {
        let cfg = ExperimentConfig { trials: 3500, ..small(Detector::ZfDfe) };
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            csv_string(&pool.install(|| run_experiment(&cfg)).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(3));
        assert_eq!(one, run(8));
        let other = csv_string(&run_experiment(&ExperimentConfig { seed: 43, ..cfg.clone() }).unwrap());
        assert_ne!(one, other);
    }

    #[test]
    fn curves_fall_with_snr() {
        let cfg = ExperimentConfig { snr_db: (0..=5).map(|i| 4.0 * i as f64).collect(), trials: 4000, ..small(Detector::Zf) };
        let recs = run_experiment(&cfg).unwrap();
        for w in recs.windows(2) {
            let n = (w[0].trials * cfg.l as u64) as f64;
            let sd = (w[0].ser * (1.0 - w[0].ser) / n).sqrt();
            assert!(w[1].ser <= w[0].ser + 3.0 * sd, "{w:?}");
        }
        assert!(recs[0].ser > 10.0 * recs[5].ser);
        for r in &recs {
            assert!((0.0..=1.0).contains(&r.ber) && (0.0..=1.0).contains(&r.ser));
            assert!(r.bit_errors >= r.symbol_errors);
            assert_eq!(r.redrawn, 0);
        }
    }

    #[test]
    fn min_errors_extends_until_target_or_cap() {
        let cfg = ExperimentConfig {
            snr_db: vec![10.0, 40.0],
            trials: 1000,
            min_errors: Some(200),
            max_trials: Some(5000),
            ..small(Detector::Zf)
        };
        let recs = run_experiment(&cfg).unwrap();
        assert!(recs[0].symbol_errors >= 200 || recs[0].trials == 5000);
        assert_eq!(recs[0].trials % 1000, 0);
        assert_eq!(recs[1].trials, 5000);
        assert!(recs[1].symbol_errors < 200);
    }

    #[test]
    fn single_row_designs_make_zf_and_ml_coincide() {
        let cfg = ExperimentConfig {
            m: 4,
            k: 4,
            l: 6,
            snr_db: vec![0.0, 2.0],
            snr_unit: SnrUnit::Bit,
            trials: 2000,
            beamformer: Beamformer::Exact,
            channel: ChannelSpec::Broadside { dt_ratio: 0.5, delta_deg: 5.0 },
            ..small(Detector::Zf)
        };
        let model = channel_model(&cfg).unwrap();
        for i in 0..cfg.snr_db.len() {
            assert_eq!(point_setup(&cfg, &model, i).unwrap().code.k(), 1);
        }
        let zf = run_experiment(&cfg).unwrap();
        let ml = run_experiment(&ExperimentConfig { detector: Detector::Viterbi, ..cfg }).unwrap();
        assert_eq!(zf, ml);
    }

    #[test]
    fn matched_identity_follows_the_exact_rank() {
        let cfg = ExperimentConfig {
            m: 4,
            k: 4,
            l: 10,
            snr_db: vec![0.0, 20.0],
            snr_unit: SnrUnit::Bit,
            beamformer: Beamformer::IdentityMatched,
            channel: ChannelSpec::Broadside { dt_ratio: 0.5, delta_deg: 5.0 },
            ..small(Detector::Zf)
        };
        let model = channel_model(&cfg).unwrap();
        for i in 0..2 {
            let matched = point_setup(&cfg, &model, i).unwrap();
            let exact = point_setup(&ExperimentConfig { beamformer: Beamformer::Exact, ..cfg.clone() }, &model, i).unwrap();
            assert_eq!(matched.code.k(), exact.code.k());
        }
    }

    #[test]
    fn chunk_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for p in 0..50 {
            for c in 0..200 {
                assert!(seen.insert(chunk_seed(7, p, c)));
            }
        }
    }
}
