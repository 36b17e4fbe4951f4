//! Argument-of-knowledge backends.

use std::fmt;

use crate::encoding::{Reader, Writer};
use crate::group::Group;
use crate::hash::{sha256, sha256_parts};
use crate::hd::Kdf;

/// Opaque proof bytes produced by a backend.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ProofSig(pub Vec<u8>);

impl fmt::Debug for ProofSig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ProofSig({} bytes)", self.0.len())
    }
}

/// Proof-of-preimage signature scheme instantiated with a one-way function.
pub trait OwfBackend {
    /// The instantiating one-way function `f`.
    fn owf(&self, secret: &[u8]) -> Vec<u8>;
    fn sign(&self, secret: &[u8], msg: &[u8]) -> ProofSig;
    /// Must return false, never panic, on malformed input.
    fn verify(&self, public: &[u8], msg: &[u8], sig: &ProofSig) -> bool;
}

pub trait OneWay {
    fn eval(&self, x: &[u8]) -> Vec<u8>;
}

/// `f(x) = SHA-256(x)`; maps an encoded public key to its address.
#[derive(Debug, Clone, Copy, Default)]
pub struct AddressHash;

impl OneWay for AddressHash {
    fn eval(&self, x: &[u8]) -> Vec<u8> {
        sha256(x).to_vec()
    }
}

/// `f(x) = encode(kdf_pq(x))`; the last KDF iteration.
#[derive(Debug, Clone)]
pub struct KdfFinal {
    pub group: Group,
    pub kdf: Kdf,
}

impl OneWay for KdfFinal {
    fn eval(&self, x: &[u8]) -> Vec<u8> {
        self.kdf.kdf_pq(&self.group, x).encode(&self.group)
    }
}

/// Test backend that publishes the secret next to a binding hash.
///
/// INSECURE: anyone who sees a signature learns the secret. It exists so the
/// protocol rules and the extraction-shaped checks can run without a real
/// proof system.
#[derive(Debug, Clone, Default)]
pub struct TransparentBackend<F> {
    pub f: F,
}

impl<F> TransparentBackend<F> {
    pub fn new(f: F) -> Self {
        Self { f }
    }

    fn binding(secret: &[u8], msg: &[u8]) -> [u8; 32] {
        sha256_parts(&[
            b"transparent/bind",
            &(secret.len() as u32).to_be_bytes(),
            secret,
            msg,
        ])
    }

    fn parse(sig: &ProofSig) -> Option<(&[u8], [u8; 32])> {
        let mut r = Reader::new(&sig.0);
        let secret = r.bytes().ok()?;
        let binding = r.array::<32>().ok()?;
        r.finish().ok()?;
        Some((secret, binding))
    }

    /// The secret a transparent proof was made with.
    pub fn extract(sig: &ProofSig) -> Option<Vec<u8>> {
        Self::parse(sig).map(|(s, _)| s.to_vec())
    }
}

impl<F: OneWay> OwfBackend for TransparentBackend<F> {
    fn owf(&self, secret: &[u8]) -> Vec<u8> {
        self.f.eval(secret)
    }

    fn sign(&self, secret: &[u8], msg: &[u8]) -> ProofSig {
        let mut w = Writer::new();
        w.bytes(secret).fixed(&Self::binding(secret, msg));
        ProofSig(w.finish())
    }

    fn verify(&self, public: &[u8], msg: &[u8], sig: &ProofSig) -> bool {
        match Self::parse(sig) {
            Some((secret, binding)) => {
                self.f.eval(secret) == public && Self::binding(secret, msg) == binding
            }
            None => false,
        }
    }
}
