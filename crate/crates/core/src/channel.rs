//! BPSK over the binary-input AWGN channel `y = sqrt(rho) x + z`, `z ~ N(0, I)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fb::qfunc;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub rho: f64,
    pub rho_db: f64,
}

impl ChannelParams {
    pub fn from_linear(rho: f64) -> Result<Self> {
        if !(rho >= 0.0) {
            return Err(Error::InvalidArgument(format!("SNR must be >= 0, got {rho}")));
        }
        Ok(ChannelParams {
            rho,
            rho_db: linear_to_db(rho),
        })
    }

    pub fn from_db(rho_db: f64) -> Result<Self> {
        if rho_db.is_nan() {
            return Err(Error::InvalidArgument("SNR is NaN".into()));
        }
        Ok(ChannelParams {
            rho: db_to_linear(rho_db),
            rho_db,
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.rho.sqrt()
    }
}

/// Received samples together with the SNR they were observed at.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub y: Vec<f64>,
    pub rho: f64,
}

/// `x_i = 2 b_i - 1`.
pub fn modulate(bits: &[bool]) -> Vec<f64> {
    bits.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect()
}

pub fn transmit<R: Rng + ?Sized>(x: &[f64], params: &ChannelParams, rng: &mut R) -> Observation {
    let amp = params.amplitude();
    let y = x
        .iter()
        .map(|&xi| {
            let z: f64 = rng.sample(StandardNormal);
            amp * xi + z
        })
        .collect();
    Observation {
        y,
        rho: params.rho,
    }
}

/// Counter-based generator for one simulation trial: the stream depends only
/// on `(seed, trial)`, so any partition of trials over workers draws the same
/// numbers.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Uncoded BPSK bit error probability `Q(sqrt(rho))`.
pub fn bit_error_prob_uncoded(rho: f64) -> f64 {
    qfunc(rho.max(0.0).sqrt())
}
