//! Named scenario families.

use crate::detect::Detector;
use crate::error::{Error, Result};
use crate::modulation::Scheme;

use super::config::{Beamformer, ChannelSpec, ExperimentConfig, SnrUnit};

pub const PRESET_NAMES: [&str; 4] = ["example1-constellations", "example1-lengths", "example1-antennas", "example2-correlated"];

/// A set of labelled curves meant to be plotted together.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub curves: Vec<(String, ExperimentConfig)>,
}

fn example1(m: usize, l: usize, mu: usize) -> ExperimentConfig {
    ExperimentConfig {
        m,
        k: m,
        l,
        scheme: Scheme::Qam,
        mu,
        snr_db: (0..=15).map(|i| 2.0 * i as f64).collect(),
        snr_unit: SnrUnit::Bit,
        trials: 20_000,
        min_errors: Some(500),
        max_trials: Some(2_000_000),
        detector: Detector::Zf,
        beamformer: Beamformer::Identity,
        channel: ChannelSpec::Iid,
        seed: 1,
        sigma2: None,
        out: None,
    }
}

pub fn preset(name: &str) -> Result<Preset> {
    let curves = match name {
        "example1-constellations" => [4, 16, 64].iter().map(|&mu| (format!("qam{mu}"), example1(4, 8, mu))).collect(),
        "example1-lengths" => [4, 8, 16, 32].iter().map(|&l| (format!("l{l}"), example1(4, l, 16))).collect(),
        "example1-antennas" => [2, 4, 8].iter().map(|&m| (format!("m{m}"), example1(m, 8, 16))).collect(),
        "example2-correlated" => {
            let base = ExperimentConfig {
                m: 4,
                k: 4,
                l: 10,
                snr_db: (0..=10).map(|i| 2.0 * i as f64).collect(),
                channel: ChannelSpec::Broadside { dt_ratio: 0.5, delta_deg: 5.0 },
                ..example1(4, 10, 4)
            };
            let mut curves = Vec::new();
            for detector in [Detector::Zf, Detector::Viterbi] {
                for beamformer in [Beamformer::IdentityMatched, Beamformer::Waterfill, Beamformer::Exact] {
                    let label = format!("{}-{}", detector.token(), beamformer.token());
                    curves.push((label, ExperimentConfig { detector, beamformer, ..base.clone() }));
                }
            }
            curves
        }
        other => {
            return Err(Error::config(
                "preset",
                format!("unknown preset `{other}`; available: {}", PRESET_NAMES.join(", ")),
            ))
        }
    };
    let name = PRESET_NAMES.into_iter().find(|n| *n == name).expect("matched above");
    Ok(Preset { name, curves })
}
