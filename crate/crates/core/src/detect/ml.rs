//! Maximum-likelihood block detection.
//!
//! Both detectors minimize `‖y − H·s‖²` over `S^L` and break exact ties in
//! favour of the lexicographically smallest index sequence, so they return
//! identical decisions whenever both run.

use num_complex::Complex64;

use super::{Detection, DetectionProblem};
use crate::error::{Error, Result};
use crate::stbc::ToeplitzCode;

/// Largest search space `μ^L` the exhaustive detector accepts.
pub const EXHAUSTIVE_LIMIT: u64 = 1 << 20;

/// Largest trellis size `μ^(K−1)` the Viterbi detector accepts.
pub const TRELLIS_STATE_LIMIT: u64 = 1 << 16;

fn checked_pow(base: usize, exp: usize, limit: u64) -> Option<u64> {
    let mut acc: u64 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base as u64)?;
        if acc > limit {
            return None;
        }
    }
    Some(acc)
}

/// Exhaustive search over all `μ^L` blocks in lexicographic order.
pub fn ml_detect_exhaustive(p: &DetectionProblem<'_>) -> Result<Detection> {
    let c = p.constellation();
    let (mu, l, n) = (c.mu(), p.l(), p.hc().rows());
    if checked_pow(mu, l, EXHAUSTIVE_LIMIT).is_none() {
        return Err(Error::Capacity(format!("exhaustive search over {mu}^{l} blocks exceeds 2^20")));
    }
    let hc = p.hc();
    // Column images H·e_j·point, so a candidate's image is a sum of L columns.
    let images: Vec<Vec<Vec<Complex64>>> = (0..l)
        .map(|j| {
            (0..mu)
                .map(|a| (0..n).map(|i| hc[(i, j)] * c.point(a)).collect())
                .collect()
        })
        .collect();

    struct Search<'s> {
        images: &'s [Vec<Vec<Complex64>>],
        y: &'s [Complex64],
        current: Vec<usize>,
        best: Vec<usize>,
        best_metric: f64,
    }

    impl Search<'_> {
        fn descend(&mut self, depth: usize, partial: &[Complex64]) {
            if depth == self.images.len() {
                let metric: f64 = partial.iter().zip(self.y).map(|(a, b)| (b - a).norm_sqr()).sum();
                // Strict comparison keeps the earliest, i.e. lexicographically smallest, minimizer.
                if metric < self.best_metric {
                    self.best_metric = metric;
                    self.best.copy_from_slice(&self.current);
                }
                return;
            }
            let mut next = vec![Complex64::new(0.0, 0.0); partial.len()];
            for a in 0..self.images[depth].len() {
                for ((o, p), v) in next.iter_mut().zip(partial).zip(&self.images[depth][a]) {
                    *o = p + v;
                }
                self.current[depth] = a;
                self.descend(depth + 1, &next);
            }
        }
    }

    let mut search = Search {
        images: &images,
        y: p.y(),
        current: vec![0; l],
        best: vec![0; l],
        best_metric: f64::INFINITY,
    };
    search.descend(0, &vec![Complex64::new(0.0, 0.0); n]);
    Ok(Detection::from_indices(search.best, c))
}

/// Viterbi detection over the virtual ISI channel with taps `h̃ = B·h`.
///
/// The taps are read from the first column of the Toeplitz equivalent
/// channel. A state holds the last `K − 1` inputs; the extra digit value `μ`
/// stands for the zero padding before the first and after the last symbol,
/// so the trellis starts and ends in the all-padding state.
pub fn ml_detect_viterbi(p: &DetectionProblem<'_>, code: &ToeplitzCode) -> Result<Detection> {
    let c = p.constellation();
    let (mu, l, k) = (c.mu(), p.l(), code.k());
    let n = p.hc().rows();
    if l != code.l() || n != code.n() {
        return Err(Error::arg(format!(
            "channel is {}x{} but the code has N = {}, L = {}",
            n,
            l,
            code.n(),
            code.l()
        )));
    }
    if checked_pow(mu, k - 1, TRELLIS_STATE_LIMIT).is_none() {
        return Err(Error::Capacity(format!("trellis with {mu}^{} states exceeds 2^16", k - 1)));
    }
    let taps: Vec<Complex64> = (0..k).map(|t| p.hc()[(t, 0)]).collect();
    let radix = mu + 1;
    let states = radix.pow((k - 1) as u32);
    let keep = if k >= 2 { radix.pow((k - 2) as u32) } else { 1 };
    let pad = mu;
    let value = |digit: usize| if digit == pad { Complex64::new(0.0, 0.0) } else { c.point(digit) };

    // Interference from the remembered inputs, digit t−1 multiplying tap t.
    let isi: Vec<Complex64> = (0..states)
        .map(|s| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut rest = s;
            for tap in &taps[1..] {
                acc += tap * value(rest % radix);
                rest /= radix;
            }
            acc
        })
        .collect();
    let successor = |state: usize, input: usize| if k == 1 { 0 } else { input + radix * (state % keep) };
    let start = (0..k - 1).fold(0, |acc, _| acc * radix + pad);

    let mut metric = vec![f64::INFINITY; states];
    metric[start] = 0.0;
    // back[stage][state] = (previous state, input digit)
    let mut back: Vec<Vec<(u32, u32)>> = Vec::with_capacity(n);

    for (stage, &y) in p.y().iter().enumerate() {
        let inputs: Vec<usize> = if stage < l { (0..mu).collect() } else { vec![pad] };
        let mut next = vec![f64::INFINITY; states];
        let mut bp = vec![(u32::MAX, u32::MAX); states];
        for s in 0..states {
            let m0 = metric[s];
            if m0.is_infinite() {
                continue;
            }
            for &a in &inputs {
                let t = successor(s, a);
                let m = m0 + (y - taps[0] * value(a) - isi[s]).norm_sqr();
                let better = if m < next[t] {
                    true
                } else if m == next[t] {
                    let cand = traceback(&back, s, a);
                    let (ps, pa) = bp[t];
                    cand < traceback(&back, ps as usize, pa as usize)
                } else {
                    false
                };
                if better {
                    next[t] = m;
                    bp[t] = (s as u32, a as u32);
                }
            }
        }
        back.push(bp);
        metric = next;
    }

    let mut inputs = Vec::with_capacity(n);
    let mut s = start;
    for bp in back.iter().rev() {
        let (prev, a) = bp[s];
        inputs.push(a as usize);
        s = prev as usize;
    }
    inputs.reverse();
    inputs.truncate(l);
    Ok(Detection::from_indices(inputs, c))
}

/// Input sequence of the survivor ending with input `last` out of `state`.
fn traceback(back: &[Vec<(u32, u32)>], state: usize, last: usize) -> Vec<usize> {
    let mut path = vec![last];
    let mut s = state;
    for bp in back.iter().rev() {
        let (prev, a) = bp[s];
        path.push(a as usize);
        s = prev as usize;
    }
    path.reverse();
    path
}
