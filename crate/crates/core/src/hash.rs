//! Hash primitives.
//!
//! `h512` is SHA-512 with accessors for the two 256-bit halves. Addresses,
//! transaction ids and commitment payloads use SHA-256.

use sha2::{Digest, Sha256, Sha512};

/// A 32-byte digest.
pub type Digest32 = [u8; 32];

/// A 64-byte SHA-512 digest split into halves.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Hash512 {
    digest: [u8; 64],
}

impl Hash512 {
    pub fn from_digest(digest: [u8; 64]) -> Self {
        Self { digest }
    }

    pub fn digest(&self) -> &[u8; 64] {
        &self.digest
    }

    /// First 32 bytes.
    pub fn left(&self) -> Digest32 {
        let mut out = [0u8; 32];
        out.copy_from_slice(&self.digest[..32]);
        out
    }

    /// Last 32 bytes.
    pub fn right(&self) -> Digest32 {
        let mut out = [0u8; 32];
        out.copy_from_slice(&self.digest[32..]);
        out
    }
}

impl std::fmt::Debug for Hash512 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Hash512({})", to_hex(&self.digest))
    }
}

pub fn h512(input: &[u8]) -> Hash512 {
    h512_parts(&[input])
}

/// SHA-512 over the plain concatenation of `parts`.
pub fn h512_parts(parts: &[&[u8]]) -> Hash512 {
    let mut hasher = Sha512::new();
    for part in parts {
        hasher.update(part);
    }
    Hash512 {
        digest: hasher.finalize().into(),
    }
}

pub fn sha256(input: &[u8]) -> Digest32 {
    sha256_parts(&[input])
}

pub fn sha256_parts(parts: &[&[u8]]) -> Digest32 {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part);
    }
    hasher.finalize().into()
}

pub fn to_hex(bytes: &[u8]) -> String {
    use std::fmt::Write;
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}
