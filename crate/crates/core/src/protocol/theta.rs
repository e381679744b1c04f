//! The shared secret θ of the single-stage protocol and the transforms it
//! keys.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::transforms::{sample_transform, SecretTransform, TransformPolicy};

pub const DEFAULT_MODULUS: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThetaState {
    pub theta: u64,
    pub modulus: u64,
    /// Bits consumed per update.
    pub update_bits: u32,
}

impl ThetaState {
    pub fn new(theta: u64, modulus: u64, update_bits: u32) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::Config("theta modulus must be positive".into()));
        }
        if update_bits == 0 || update_bits > 64 {
            return Err(Error::Config(format!("theta update width must be 1..=64 bits, got {update_bits}")));
        }
        Ok(Self { theta: theta % modulus, modulus, update_bits })
    }
}

/// `θ' = (θ + v + 1) mod M`, where `v` is the integer value (MSB first) of
/// the last `update_bits` transmitted bits. The `+ 1` keeps θ moving even
/// on all-zero traffic.
pub fn next_theta(state: &ThetaState, transmitted: &[bool]) -> Result<ThetaState> {
    let n = state.update_bits as usize;
    if transmitted.len() < n {
        return Err(Error::InsufficientMaterial { needed: n, available: transmitted.len() });
    }
    let value = transmitted[transmitted.len() - n..].iter().fold(0u128, |acc, &b| (acc << 1) | b as u128);
    let m = state.modulus as u128;
    let theta = ((state.theta as u128 + value % m + 1) % m) as u64;
    Ok(ThetaState { theta, ..*state })
}

/// The `counter`-th transform of epoch θ. Both parties call this with their
/// own θ; equal θ gives equal transforms.
pub fn derive_transform(theta: u64, counter: u64, policy: &TransformPolicy) -> Result<SecretTransform> {
    let mut stream = rng::stream("compact-coding/theta-transform", &[theta, counter]);
    sample_transform(&mut stream, policy)
}
