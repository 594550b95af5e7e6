//! Receivers for the equivalent model `y = H·s + ξ`.
//!
//! Linear ZF and MMSE equalizers and ZF-DFE live in [`linear`]; exact ML by
//! exhaustive search and by the Viterbi trellis of the virtual ISI channel
//! live in [`ml`]. Every detector returns constellation indices, so symbol
//! and bit errors can be counted without re-slicing.

mod linear;
mod ml;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modulation::Constellation;
use crate::numerics::ComplexMatrix;
use crate::stbc::ToeplitzCode;

pub use linear::{mmse_detect, mmse_equalize, zf_detect, zf_dfe_detect, zf_equalize};
pub use ml::{ml_detect_exhaustive, ml_detect_viterbi, EXHAUSTIVE_LIMIT, TRELLIS_STATE_LIMIT};

/// Input shared by every detector.
#[derive(Debug, Clone, Copy)]
pub struct DetectionProblem<'a> {
    hc: &'a ComplexMatrix,
    y: &'a [Complex64],
    sigma2: f64,
    constellation: &'a Constellation,
}

impl<'a> DetectionProblem<'a> {
    pub fn new(hc: &'a ComplexMatrix, y: &'a [Complex64], sigma2: f64, constellation: &'a Constellation) -> Result<Self> {
        if hc.cols() == 0 || hc.rows() < hc.cols() {
            return Err(Error::arg(format!("channel must be tall, got {}x{}", hc.rows(), hc.cols())));
        }
        if y.len() != hc.rows() {
            return Err(Error::arg(format!("received vector has {} entries, channel has {} rows", y.len(), hc.rows())));
        }
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return Err(Error::arg(format!("noise variance must be finite and non-negative, got {sigma2}")));
        }
        Ok(Self { hc, y, sigma2, constellation })
    }

    pub fn hc(&self) -> &'a ComplexMatrix {
        self.hc
    }

    pub fn y(&self) -> &'a [Complex64] {
        self.y
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn constellation(&self) -> &'a Constellation {
        self.constellation
    }

    /// Block length `L`.
    pub fn l(&self) -> usize {
        self.hc.cols()
    }

    /// `‖y − H·s‖²` for the block of constellation indices `indices`.
    pub fn metric(&self, indices: &[usize]) -> f64 {
        let s: Vec<Complex64> = indices.iter().map(|&i| self.constellation.point(i)).collect();
        self.hc
            .mul_vec(&s)
            .iter()
            .zip(self.y)
            .map(|(a, b)| (b - a).norm_sqr())
            .sum()
    }
}

/// Decisions for one block.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub indices: Vec<usize>,
    pub symbols: Vec<Complex64>,
}

impl Detection {
    pub(crate) fn from_indices(indices: Vec<usize>, c: &Constellation) -> Self {
        let symbols = indices.iter().map(|&i| c.point(i)).collect();
        Self { indices, symbols }
    }

    pub fn bits(&self, c: &Constellation) -> Vec<u8> {
        c.demap(&self.indices)
    }
}

/// Receiver selection, by CLI token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Detector {
    Zf,
    Mmse,
    ZfDfe,
    Ml,
    Viterbi,
}

impl Detector {
    pub const ALL: [Detector; 5] = [Detector::Zf, Detector::Mmse, Detector::ZfDfe, Detector::Ml, Detector::Viterbi];

    pub fn token(self) -> &'static str {
        match self {
            Detector::Zf => "zf",
            Detector::Mmse => "mmse",
            Detector::ZfDfe => "zfdfe",
            Detector::Ml => "ml",
            Detector::Viterbi => "viterbi",
        }
    }

    /// Runs the detector. `code` supplies the tap count for the trellis.
    pub fn detect(self, p: &DetectionProblem<'_>, code: &ToeplitzCode) -> Result<Detection> {
        match self {
            Detector::Zf => zf_detect(p),
            Detector::Mmse => mmse_detect(p),
            Detector::ZfDfe => zf_dfe_detect(p),
            Detector::Ml => ml_detect_exhaustive(p),
            Detector::Viterbi => ml_detect_viterbi(p, code),
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Detector::ALL
            .into_iter()
            .find(|d| d.token() == s)
            .ok_or_else(|| Error::arg(format!("unknown detector `{s}` (expected zf, mmse, zfdfe, ml or viterbi)")))
    }
}
