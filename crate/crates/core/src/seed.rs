//! Stable seed derivation.
//!
//! Seeds for trials and pipeline stages are derived from a master seed by
//! SplitMix64 finalisation, so a trial's randomness does not depend on how
//! many trials ran before it or on which thread it runs.

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Named pipeline stages; each gets an independent stream per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Model = 1,
    Observations = 2,
    Subsample = 3,
}

/// Derive the seed for `(master, trial, stage)`.
pub fn derive_seed(master: u64, trial: u64, stage: Stage) -> u64 {
    mix64(mix64(mix64(master) ^ trial) ^ (stage as u64).wrapping_mul(0xA24B_AED4_963E_E407))
}
