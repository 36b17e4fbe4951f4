//! Hierarchical deterministic keys.
//!
//! Child derivation hashes `c || X || be32(i)` with SHA-512, where `X` is the
//! parent point encoding for non-hardened steps and the parent scalar encoding
//! for hardened ones. The left half (mod `q`) is added to the parent scalar and
//! the right half becomes the child chain code. The hardened flag is carried
//! as a separate field and is not folded into the index.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::encoding::{DecodeError, Reader, Writer};
use crate::group::{Group, Point, Scalar};
use crate::hash::{h512, h512_parts, sha256, Digest32};

/// Default iteration count of the wallet KDF.
pub const KDF_ITERATIONS: u32 = 2048;

/// Minimum entropy length accepted by [`Seed::new`].
pub const MIN_ENTROPY: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HdError {
    #[error("hardened steps cannot be derived from a public key")]
    HardenedPublic,
    #[error("entropy must be at least {MIN_ENTROPY} bytes, got {0}")]
    ShortEntropy(usize),
    #[error("invalid derivation path {0:?}")]
    BadPath(String),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExtendedSecretKey {
    pub sk: Scalar,
    pub chain_code: Digest32,
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExtendedPublicKey {
    pub pk: Point,
    pub chain_code: Digest32,
}

impl fmt::Debug for ExtendedSecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "xsk({:?}, {})", self.sk, crate::hash::to_hex(&self.chain_code[..4]))
    }
}

impl fmt::Debug for ExtendedPublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "xpk({:?}, {})", self.pk, crate::hash::to_hex(&self.chain_code[..4]))
    }
}

impl ExtendedSecretKey {
    /// `sk || chain_code`, length `L_sk + 32`.
    pub fn encode(&self, group: &Group) -> Vec<u8> {
        let mut out = group.encode_scalar(&self.sk);
        out.extend_from_slice(&self.chain_code);
        out
    }

    pub fn decode(group: &Group, bytes: &[u8]) -> Option<Self> {
        let n = group.scalar_len();
        if bytes.len() != n + 32 {
            return None;
        }
        let sk = group.decode_scalar(&bytes[..n])?;
        let mut chain_code = [0u8; 32];
        chain_code.copy_from_slice(&bytes[n..]);
        Some(Self { sk, chain_code })
    }

    /// Registry key id: SHA-256 of the encoding.
    pub fn id(&self, group: &Group) -> Digest32 {
        sha256(&self.encode(group))
    }

    pub fn to_xpk(&self, group: &Group) -> ExtendedPublicKey {
        ExtendedPublicKey {
            pk: group.pk_ec(&self.sk),
            chain_code: self.chain_code,
        }
    }
}

impl ExtendedPublicKey {
    pub fn encode(&self, group: &Group) -> Vec<u8> {
        let mut out = group.encode_point(&self.pk);
        out.extend_from_slice(&self.chain_code);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StepKind {
    NonHardened,
    Hardened,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DerivationStep {
    pub index: u32,
    pub kind: StepKind,
}

impl DerivationStep {
    pub fn normal(index: u32) -> Self {
        Self {
            index,
            kind: StepKind::NonHardened,
        }
    }

    pub fn hardened(index: u32) -> Self {
        Self {
            index,
            kind: StepKind::Hardened,
        }
    }

    pub fn is_hardened(&self) -> bool {
        self.kind == StepKind::Hardened
    }
}

impl fmt::Display for DerivationStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            StepKind::NonHardened => write!(f, "{}", self.index),
            StepKind::Hardened => write!(f, "{}h", self.index),
        }
    }
}

/// Ordered list of derivation steps. Written `m/0h/5/12h`; the empty path is `m`.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DerivationPath(Vec<DerivationStep>);

impl DerivationPath {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn new(steps: Vec<DerivationStep>) -> Self {
        Self(steps)
    }

    pub fn steps(&self) -> &[DerivationStep] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, step: DerivationStep) -> Self {
        let mut steps = self.0.clone();
        steps.push(step);
        Self(steps)
    }

    pub fn concat(&self, other: &DerivationPath) -> Self {
        let mut steps = self.0.clone();
        steps.extend_from_slice(&other.0);
        Self(steps)
    }

    /// Split into `(first n steps, rest)`.
    pub fn split_at(&self, n: usize) -> (Self, Self) {
        let (a, b) = self.0.split_at(n);
        (Self(a.to_vec()), Self(b.to_vec()))
    }

    /// All prefixes, shortest first, including the empty path and the path itself.
    pub fn prefixes(&self) -> impl Iterator<Item = DerivationPath> + '_ {
        (0..=self.0.len()).map(|n| Self(self.0[..n].to_vec()))
    }

    pub fn is_prefix_of(&self, other: &DerivationPath) -> bool {
        other.0.starts_with(&self.0)
    }

    /// If `self = prefix || suffix`, return `prefix`.
    pub fn strip_suffix(&self, suffix: &DerivationPath) -> Option<DerivationPath> {
        self.0
            .strip_suffix(suffix.0.as_slice())
            .map(|p| Self(p.to_vec()))
    }

    pub fn all_non_hardened(&self) -> bool {
        self.0.iter().all(|s| !s.is_hardened())
    }

    /// `count(u32) || (index(u32) || kind(u8))*`.
    pub fn encode_into(&self, w: &mut Writer) {
        w.len(self.0.len());
        for s in &self.0 {
            w.u32(s.index).u8(s.is_hardened() as u8);
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode_into(&mut w);
        w.finish()
    }

    pub fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let n = r.count(5)?;
        let mut steps = Vec::with_capacity(n);
        for _ in 0..n {
            let index = r.u32()?;
            let kind = match r.u8()? {
                0 => StepKind::NonHardened,
                1 => StepKind::Hardened,
                _ => return Err(DecodeError::Invalid("step kind")),
            };
            steps.push(DerivationStep { index, kind });
        }
        Ok(Self(steps))
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let p = Self::decode_from(&mut r)?;
        r.finish()?;
        Ok(p)
    }
}

impl fmt::Display for DerivationPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("m")?;
        for s in &self.0 {
            write!(f, "/{s}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for DerivationPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for DerivationPath {
    type Err = HdError;

    fn from_str(s: &str) -> Result<Self, HdError> {
        let bad = || HdError::BadPath(s.to_string());
        let mut parts = s.split('/');
        if parts.next() != Some("m") {
            return Err(bad());
        }
        let mut steps = Vec::new();
        for part in parts {
            let (digits, kind) = match part.strip_suffix('h') {
                Some(d) => (d, StepKind::Hardened),
                None => (part, StepKind::NonHardened),
            };
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            // Reject non-canonical forms such as "01" so that text round-trips.
            if digits.len() > 1 && digits.starts_with('0') {
                return Err(bad());
            }
            let index = digits.parse::<u32>().map_err(|_| bad())?;
            steps.push(DerivationStep { index, kind });
        }
        Ok(Self(steps))
    }
}

impl Serialize for DerivationPath {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DerivationPath {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Wallet seed: random entropy followed by an optional password.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Seed {
    entropy: Vec<u8>,
    password: Vec<u8>,
}

impl fmt::Debug for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Seed({} bytes entropy, {} bytes password)", self.entropy.len(), self.password.len())
    }
}

impl Seed {
    pub fn new(entropy: Vec<u8>, password: Vec<u8>) -> Result<Self, HdError> {
        if entropy.len() < MIN_ENTROPY {
            return Err(HdError::ShortEntropy(entropy.len()));
        }
        Ok(Self { entropy, password })
    }

    pub fn random<R: rand::Rng + ?Sized>(rng: &mut R) -> Self {
        let mut entropy = vec![0u8; 32];
        rng.fill_bytes(&mut entropy);
        Self {
            entropy,
            password: Vec::new(),
        }
    }

    pub fn entropy(&self) -> &[u8] {
        &self.entropy
    }

    pub fn password(&self) -> &[u8] {
        &self.password
    }

    /// KDF input: `entropy || password`.
    pub fn kdf_input(&self) -> Vec<u8> {
        let mut out = self.entropy.clone();
        out.extend_from_slice(&self.password);
        out
    }
}

/// Iterated SHA-512 key derivation for wallet seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Kdf {
    pub iterations: u32,
}

impl Default for Kdf {
    fn default() -> Self {
        Self {
            iterations: KDF_ITERATIONS,
        }
    }
}

impl Kdf {
    pub fn new(iterations: u32) -> Self {
        assert!(iterations >= 1, "kdf needs at least one iteration");
        Self { iterations }
    }

    /// All but the final iteration. With the default count this is 64 bytes;
    /// with a single iteration it is the raw KDF input.
    pub fn kdf_pre(&self, seed: &Seed) -> Vec<u8> {
        let mut x = seed.kdf_input();
        for _ in 1..self.iterations {
            x = h512(&x).digest().to_vec();
        }
        x
    }

    /// The final iteration, mapped to an extended key.
    pub fn kdf_pq(&self, group: &Group, x: &[u8]) -> ExtendedSecretKey {
        let h = h512(x);
        ExtendedSecretKey {
            sk: group.scalar_reduce(&h.left()),
            chain_code: h.right(),
        }
    }

    pub fn kdf(&self, group: &Group, seed: &Seed) -> ExtendedSecretKey {
        self.kdf_pq(group, &self.kdf_pre(seed))
    }
}

fn child_from_hash(group: &Group, parent_sk: &Scalar, data: &[&[u8]]) -> ExtendedSecretKey {
    let h = h512_parts(data);
    ExtendedSecretKey {
        sk: group.scalar_add(&group.scalar_reduce(&h.left()), parent_sk),
        chain_code: h.right(),
    }
}

pub fn child_nonhardened(group: &Group, parent: &ExtendedSecretKey, i: u32) -> ExtendedSecretKey {
    let pk = group.encode_point(&group.pk_ec(&parent.sk));
    child_from_hash(group, &parent.sk, &[&parent.chain_code, &pk, &i.to_be_bytes()])
}

pub fn child_hardened(group: &Group, parent: &ExtendedSecretKey, i: u32) -> ExtendedSecretKey {
    let sk = group.encode_scalar(&parent.sk);
    child_from_hash(group, &parent.sk, &[&parent.chain_code, &sk, &i.to_be_bytes()])
}

pub fn child(group: &Group, parent: &ExtendedSecretKey, step: DerivationStep) -> ExtendedSecretKey {
    match step.kind {
        StepKind::NonHardened => child_nonhardened(group, parent, step.index),
        StepKind::Hardened => child_hardened(group, parent, step.index),
    }
}

/// `Der(msk, P)`: left fold of child derivation over the path.
pub fn derive(group: &Group, msk: &ExtendedSecretKey, path: &DerivationPath) -> ExtendedSecretKey {
    path.steps()
        .iter()
        .fold(msk.clone(), |k, s| child(group, &k, *s))
}

pub fn public_child(
    group: &Group,
    parent: &ExtendedPublicKey,
    step: DerivationStep,
) -> Result<ExtendedPublicKey, HdError> {
    if step.is_hardened() {
        return Err(HdError::HardenedPublic);
    }
    let h = h512_parts(&[
        &parent.chain_code,
        &group.encode_point(&parent.pk),
        &step.index.to_be_bytes(),
    ]);
    Ok(ExtendedPublicKey {
        pk: group.add(&group.pk_ec(&group.scalar_reduce(&h.left())), &parent.pk),
        chain_code: h.right(),
    })
}

pub fn derive_public(
    group: &Group,
    xpk: &ExtendedPublicKey,
    path: &DerivationPath,
) -> Result<ExtendedPublicKey, HdError> {
    path.steps()
        .iter()
        .try_fold(xpk.clone(), |k, s| public_child(group, &k, *s))
}

/// If `candidate` is a derivation suffix of `of`, return the witness prefix `y''`
/// with `of.path = y'' || candidate.path` and `candidate.key = Der(of.key, y'')`.
pub fn is_der_suffix(
    group: &Group,
    candidate: (&ExtendedSecretKey, &DerivationPath),
    of: (&ExtendedSecretKey, &DerivationPath),
) -> Option<DerivationPath> {
    let prefix = of.1.strip_suffix(candidate.1)?;
    (derive(group, of.0, &prefix) == *candidate.0).then_some(prefix)
}
