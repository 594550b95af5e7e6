//! Seeded fixtures shared by the kernel benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toeplitz_stbc::channel::{complex_gaussian, draw_channel, ChannelModel};
use toeplitz_stbc::{Complex64, ComplexMatrix, Constellation, Scheme, ToeplitzCode};

/// One received block with everything a detector needs.
pub struct Block {
    pub constellation: Constellation,
    pub code: ToeplitzCode,
    pub hc: ComplexMatrix,
    pub y: Vec<Complex64>,
    pub sigma2: f64,
}

/// A 4-QAM block over `m` i.i.d. antennas with `B = I` at the given symbol SNR.
pub fn block(m: usize, l: usize, snr_db: f64, seed: u64) -> Block {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let constellation = Constellation::new(Scheme::Qam, 4).expect("4-QAM");
    let code = ToeplitzCode::identity(m, l).expect("identity code");
    let h = draw_channel(&ChannelModel::iid(m).expect("iid model"), &mut rng);
    let hc = code.equivalent_channel(&h).expect("equivalent channel");
    let sigma2 = constellation.avg_energy() * 10f64.powf(-snr_db / 10.0);
    let s: Vec<Complex64> = (0..l).map(|_| constellation.point(rng.random_range(0..4))).collect();
    let y = hc.mul_vec(&s).into_iter().map(|v| v + complex_gaussian(&mut rng, sigma2)).collect();
    Block { constellation, code, hc, y, sigma2 }
}
