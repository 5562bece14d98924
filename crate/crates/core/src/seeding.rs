//! Domain-separated seed derivation.
//!
//! All randomness in the crate flows from explicit `u64` master seeds. Where a
//! component needs several independent streams (pairwise mask seeds, per-slice
//! projection matrices, per-cell experiment seeds) it derives them here by
//! hashing the master seed together with a label and the identifying integers.
//! SHA-256 keeps the derivation stable across platforms and releases.

use sha2::{Digest, Sha256};

/// Derives a 32-byte RNG seed from a master seed, a label, and parameters.
pub(crate) fn derive_seed(master: u64, label: &str, params: &[u64]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update([0x1f]);
    hasher.update(label.as_bytes());
    for p in params {
        hasher.update([0x1f]);
        hasher.update(p.to_le_bytes());
    }
    hasher.finalize().into()
}

/// Derives a `u64` sub-seed (first eight bytes of [`derive_seed`]).
pub(crate) fn derive_u64(master: u64, label: &str, params: &[u64]) -> u64 {
    let bytes = derive_seed(master, label, params);
    u64::from_le_bytes(bytes[..8].try_into().unwrap())
}
