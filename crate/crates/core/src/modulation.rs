//! Square QAM, PAM and PSK constellations with Gray labelling.
//!
//! Point coordinates are fixed so that the average energies are
//! `2(μ−1)/3` (QAM), `(μ²−1)/6` (PAM) and `1` (PSK). QAM sits on the
//! odd-integer lattice, PAM on odd multiples of `√2/2`, PSK on the unit
//! circle. A symbol's index is its Gray label read as an MSB-first integer.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Signalling scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Qam,
    Pam,
    Psk,
}

impl Scheme {
    /// 1 for QAM, 2 for PAM, 3 for PSK.
    pub fn index(self) -> usize {
        match self {
            Scheme::Qam => 1,
            Scheme::Pam => 2,
            Scheme::Psk => 3,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Scheme::Qam => "qam",
            Scheme::Pam => "pam",
            Scheme::Psk => "psk",
        }
    }

    /// Average symbol energy of the scheme at cardinality `mu`.
    pub fn avg_energy(self, mu: usize) -> f64 {
        let m = mu as f64;
        match self {
            Scheme::Qam => 2.0 * (m - 1.0) / 3.0,
            Scheme::Pam => (m * m - 1.0) / 6.0,
            Scheme::Psk => 1.0,
        }
    }

    /// Checks that `mu` is a legal cardinality for the scheme.
    pub fn validate_mu(self, mu: usize) -> Result<()> {
        let ok = match self {
            Scheme::Qam => mu >= 4 && mu.is_power_of_two() && mu.trailing_zeros() % 2 == 0,
            Scheme::Pam | Scheme::Psk => mu >= 2 && mu.is_power_of_two(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::arg(format!("cardinality {mu} is not valid for {self}")))
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qam" => Ok(Scheme::Qam),
            "pam" => Ok(Scheme::Pam),
            "psk" => Ok(Scheme::Psk),
            other => Err(Error::arg(format!("unknown scheme `{other}` (expected qam, pam or psk)"))),
        }
    }
}

#[cfg(test)]
fn gray(k: usize) -> usize {
    k ^ (k >> 1)
}

#[inline]
fn gray_inverse(mut g: usize) -> usize {
    let mut k = g;
    while g > 0 {
        g >>= 1;
        k ^= g;
    }
    k
}

/// A finite signal set with its Gray bit labelling.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    scheme: Scheme,
    mu: usize,
    points: Vec<Complex64>,
    avg_energy: f64,
    d_min: f64,
    bits_per_symbol: usize,
}

impl Constellation {
    pub fn new(scheme: Scheme, mu: usize) -> Result<Self> {
        scheme.validate_mu(mu)?;
        let bits_per_symbol = mu.trailing_zeros() as usize;
        let points: Vec<Complex64> = match scheme {
            Scheme::Qam => {
                let side = 1usize << (bits_per_symbol / 2);
                let half_bits = bits_per_symbol / 2;
                let level = |k: usize| 2.0 * k as f64 - (side as f64 - 1.0);
                (0..mu)
                    .map(|label| {
                        let i = gray_inverse(label >> half_bits);
                        let q = gray_inverse(label & (side - 1));
                        Complex64::new(level(i), level(q))
                    })
                    .collect()
            }
            Scheme::Pam => (0..mu)
                .map(|label| {
                    let k = gray_inverse(label);
                    Complex64::new((2.0 * k as f64 - (mu as f64 - 1.0)) * SQRT_2 / 2.0, 0.0)
                })
                .collect(),
            Scheme::Psk => (0..mu)
                .map(|label| {
                    let k = gray_inverse(label);
                    Complex64::from_polar(1.0, 2.0 * PI * k as f64 / mu as f64)
                })
                .collect(),
        };
        let d_min = match scheme {
            Scheme::Qam => 2.0,
            Scheme::Pam => SQRT_2,
            Scheme::Psk => 2.0 * (PI / mu as f64).sin(),
        };
        Ok(Self {
            scheme,
            mu,
            points,
            avg_energy: scheme.avg_energy(mu),
            d_min,
            bits_per_symbol,
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    /// Points indexed by Gray label.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    pub fn avg_energy(&self) -> f64 {
        self.avg_energy
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Bits of the label of `index`, MSB first.
    pub fn bits_of(&self, index: usize) -> impl Iterator<Item = u8> + '_ {
        let b = self.bits_per_symbol;
        (0..b).map(move |t| ((index >> (b - 1 - t)) & 1) as u8)
    }

    /// Maps a bit sequence to symbols, `bits_per_symbol` bits at a time.
    pub fn modulate(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        Ok(self.indices_from_bits(bits)?.into_iter().map(|i| self.points[i]).collect())
    }

    pub fn indices_from_bits(&self, bits: &[u8]) -> Result<Vec<usize>> {
        let b = self.bits_per_symbol;
        if bits.len() % b != 0 {
            return Err(Error::arg(format!(
                "{} bits do not split into {b}-bit symbols",
                bits.len()
            )));
        }
        bits.chunks(b)
            .map(|chunk| {
                chunk.iter().try_fold(0usize, |acc, &bit| match bit {
                    0 | 1 => Ok((acc << 1) | bit as usize),
                    other => Err(Error::arg(format!("bit value {other} is not 0 or 1"))),
                })
            })
            .collect()
    }

    /// Inverse of [`modulate`](Self::modulate) for symbol indices.
    pub fn demap(&self, indices: &[usize]) -> Vec<u8> {
        indices.iter().flat_map(|&i| self.bits_of(i)).collect()
    }

    /// Index of the nearest point; ties go to the lowest index.
    pub fn slice_index(&self, z: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Nearest point and its bits.
    pub fn slice(&self, z: Complex64) -> (Complex64, Vec<u8>) {
        let i = self.slice_index(z);
        (self.points[i], self.bits_of(i).collect())
    }

    /// Number of differing label bits between two symbol indices.
    pub fn bit_distance(&self, a: usize, b: usize) -> u32 {
        (a ^ b).count_ones()
    }
}
