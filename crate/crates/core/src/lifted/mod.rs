//! Lifted signatures.
//!
//! A lifted signature proves knowledge of a preimage under a one-way function
//! using a post-quantum argument-of-knowledge backend. Two liftings are built
//! on top of [`OwfBackend`]:
//!
//! * key lifting: the secret is the encoded public key, the public value is
//!   its address hash;
//! * seed lifting: the secret is `kdf_pre(seed)`, the public value is the
//!   master key `kdf_pq(secret)`, and the signature carries `(msk, P)` so the
//!   verifier can check that `Der(msk, P)` matches the spent key.

pub mod backend;
pub mod game;

use crate::encoding::{DecodeError, Reader, Writer};
use crate::group::{Group, Point, Scalar};
use crate::hash::{sha256, Digest32};
use crate::hd::{derive, DerivationPath, ExtendedSecretKey, Kdf, Seed};

pub use backend::{AddressHash, KdfFinal, OneWay, OwfBackend, ProofSig, TransparentBackend};

const TAG_KEY: u8 = 0x01;
const TAG_SEED: u8 = 0x02;

/// Address of a public key: SHA-256 of its encoding.
pub fn address_of(group: &Group, pk: &Point) -> Digest32 {
    sha256(&group.encode_point(pk))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KeyLiftedSig {
    pub proof: ProofSig,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SeedLiftedSig {
    pub proof: ProofSig,
    pub msk: ExtendedSecretKey,
    pub path: DerivationPath,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LiftedSignature {
    Key(KeyLiftedSig),
    Seed(SeedLiftedSig),
}

impl LiftedSignature {
    pub fn is_key_lifted(&self) -> bool {
        matches!(self, LiftedSignature::Key(_))
    }

    /// `0x01 || bytes(proof)` or `0x02 || bytes(proof) || bytes(msk) || path`.
    pub fn encode_into(&self, group: &Group, w: &mut Writer) {
        match self {
            LiftedSignature::Key(s) => {
                w.u8(TAG_KEY).bytes(&s.proof.0);
            }
            LiftedSignature::Seed(s) => {
                w.u8(TAG_SEED).bytes(&s.proof.0).bytes(&s.msk.encode(group));
                s.path.encode_into(w);
            }
        }
    }

    pub fn encode(&self, group: &Group) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode_into(group, &mut w);
        w.finish()
    }

    pub fn decode_from(group: &Group, r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        match r.u8()? {
            TAG_KEY => Ok(LiftedSignature::Key(KeyLiftedSig {
                proof: ProofSig(r.bytes()?.to_vec()),
            })),
            TAG_SEED => {
                let proof = ProofSig(r.bytes()?.to_vec());
                let msk = ExtendedSecretKey::decode(group, r.bytes()?)
                    .ok_or(DecodeError::Invalid("extended key"))?;
                let path = DerivationPath::decode_from(r)?;
                Ok(LiftedSignature::Seed(SeedLiftedSig { proof, msk, path }))
            }
            _ => Err(DecodeError::Invalid("lifted signature tag")),
        }
    }

    pub fn decode(group: &Group, bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let s = Self::decode_from(group, &mut r)?;
        r.finish()?;
        Ok(s)
    }
}

/// Key lifting over a backend whose one-way function is [`AddressHash`].
#[derive(Debug, Clone)]
pub struct KeyLifting<B = TransparentBackend<AddressHash>> {
    pub group: Group,
    pub backend: B,
}

impl KeyLifting {
    pub fn transparent(group: Group) -> Self {
        Self {
            group,
            backend: TransparentBackend::new(AddressHash),
        }
    }
}

impl<B: OwfBackend> KeyLifting<B> {
    pub fn sign(&self, sk: &Scalar, msg: &[u8]) -> KeyLiftedSig {
        let secret = self.group.encode_point(&self.group.pk_ec(sk));
        KeyLiftedSig {
            proof: self.backend.sign(&secret, msg),
        }
    }

    pub fn verify(&self, address: &Digest32, msg: &[u8], sig: &KeyLiftedSig) -> bool {
        self.backend.verify(address, msg, &sig.proof)
    }
}

/// Canonical `(msg, path)` framing signed by seed lifting.
pub fn seed_message(msg: &[u8], path: &DerivationPath) -> Vec<u8> {
    let mut w = Writer::new();
    w.bytes(msg);
    path.encode_into(&mut w);
    w.finish()
}

/// Seed lifting over a backend whose one-way function is [`KdfFinal`].
#[derive(Debug, Clone)]
pub struct SeedLifting<B = TransparentBackend<KdfFinal>> {
    pub group: Group,
    pub kdf: Kdf,
    pub backend: B,
}

impl SeedLifting {
    pub fn transparent(group: Group, kdf: Kdf) -> Self {
        let backend = TransparentBackend::new(KdfFinal {
            group: group.clone(),
            kdf,
        });
        Self { group, kdf, backend }
    }
}

impl<B: OwfBackend> SeedLifting<B> {
    pub fn sign(&self, seed: &Seed, path: &DerivationPath, msg: &[u8]) -> SeedLiftedSig {
        let secret = self.kdf.kdf_pre(seed);
        let msk = self.kdf.kdf_pq(&self.group, &secret);
        SeedLiftedSig {
            proof: self.backend.sign(&secret, &seed_message(msg, path)),
            msk,
            path: path.clone(),
        }
    }

    /// The point `PK(Der(msk, P))` a signature claims to control.
    pub fn derived_point(&self, sig: &SeedLiftedSig) -> Point {
        self.group.pk_ec(&derive(&self.group, &sig.msk, &sig.path).sk)
    }

    /// Backend check alone, against `msk` over `(msg, path)`.
    pub fn verify_proof(&self, msg: &[u8], sig: &SeedLiftedSig) -> bool {
        self.backend.verify(
            &sig.msk.encode(&self.group),
            &seed_message(msg, &sig.path),
            &sig.proof,
        )
    }

    pub fn verify(&self, pk: &Point, msg: &[u8], sig: &SeedLiftedSig) -> bool {
        self.derived_point(sig) == *pk && self.verify_proof(msg, sig)
    }

    /// As [`SeedLifting::verify`] but against an address hash.
    pub fn verify_address(&self, address: &Digest32, msg: &[u8], sig: &SeedLiftedSig) -> bool {
        address_of(&self.group, &self.derived_point(sig)) == *address && self.verify_proof(msg, sig)
    }
}
