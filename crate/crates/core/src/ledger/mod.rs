//! UTXO ledger: outputs, transactions, blocks, chain state, taxonomy and the
//! key registry.

pub mod block;
pub mod registry;
pub mod state;
pub mod taxonomy;
pub mod tx;

use std::fmt;

use crate::encoding::{DecodeError, Reader, Writer};
use crate::group::{Group, Point};
use crate::hash::{sha256, Digest32};

pub use block::{Block, CanaryKill, LfcClaim, LfcRecord, RegistryMessage};
pub use state::ChainState;
pub use taxonomy::{classify, memberships, KnowledgeError, KnowledgeModel, SalvageOutcome, SalvageStatus, UtxoClass};
pub use tx::{FcMethod, Transaction, TxIn, TxKind, TxOut, Witness};

pub type TxId = Digest32;

/// Reference to one output of a transaction.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OutPoint {
    pub txid: TxId,
    pub index: u32,
}

impl fmt::Debug for OutPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", crate::hash::to_hex(&self.txid[..6]), self.index)
    }
}

impl OutPoint {
    pub const ENCODED_LEN: usize = 36;

    pub fn new(txid: TxId, index: u32) -> Self {
        Self { txid, index }
    }

    pub fn encode_into(&self, w: &mut Writer) {
        w.fixed(&self.txid).u32(self.index);
    }

    pub fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            txid: r.array()?,
            index: r.u32()?,
        })
    }

    /// `H(u)`: what a lifted commitment posts instead of the outpoint.
    pub fn hash(&self) -> Digest32 {
        let mut w = Writer::new();
        self.encode_into(&mut w);
        sha256(w.as_slice())
    }
}

/// Where an output's value can be spent from.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Address {
    /// Hash of a pre-quantum public key.
    PkHash(Digest32),
    /// Pre-quantum public key in the clear. Leaks the key on creation.
    PlainPk(Point),
    /// Hash of a post-quantum secret.
    PostQuantum(Digest32),
    /// Unspendable. Value sent here leaves circulation.
    Burn,
}

const ADDR_PKHASH: u8 = 0;
const ADDR_PLAIN: u8 = 1;
const ADDR_PQ: u8 = 2;
const ADDR_BURN: u8 = 3;

impl Address {
    pub fn pk_hash(group: &Group, pk: &Point) -> Self {
        Address::PkHash(crate::lifted::address_of(group, pk))
    }

    pub fn is_pre_quantum(&self) -> bool {
        matches!(self, Address::PkHash(_) | Address::PlainPk(_))
    }

    /// Whether `pk` controls this pre-quantum address.
    pub fn matches_pk(&self, group: &Group, pk: &Point) -> bool {
        match self {
            Address::PkHash(h) => *h == crate::lifted::address_of(group, pk),
            Address::PlainPk(p) => p == pk,
            _ => false,
        }
    }

    pub fn encode_into(&self, group: &Group, w: &mut Writer) {
        match self {
            Address::PkHash(h) => {
                w.u8(ADDR_PKHASH).fixed(h);
            }
            Address::PlainPk(p) => {
                w.u8(ADDR_PLAIN).fixed(&group.encode_point(p));
            }
            Address::PostQuantum(h) => {
                w.u8(ADDR_PQ).fixed(h);
            }
            Address::Burn => {
                w.u8(ADDR_BURN);
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
            ADDR_PKHASH => Ok(Address::PkHash(r.array()?)),
            ADDR_PLAIN => group
                .decode_point(r.fixed(group.point_len())?)
                .map(Address::PlainPk)
                .ok_or(DecodeError::Invalid("point")),
            ADDR_PQ => Ok(Address::PostQuantum(r.array()?)),
            ADDR_BURN => Ok(Address::Burn),
            _ => Err(DecodeError::Invalid("address tag")),
        }
    }
}

/// An entry of the UTXO set.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Utxo {
    pub outpoint: OutPoint,
    pub value: u64,
    pub address: Address,
    pub created_height: u64,
    /// Per-output commit-reveal wait override.
    pub wait_blocks: Option<u64>,
    pub coinbase: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn address_round_trip() {
        let g = Group::toy(101).unwrap();
        let pk = g.pk_ec(&g.scalar(9));
        for a in [
            Address::pk_hash(&g, &pk),
            Address::PlainPk(pk.clone()),
            Address::PostQuantum([7; 32]),
            Address::Burn,
        ] {
            let bytes = a.encode(&g);
            let mut r = Reader::new(&bytes);
            assert_eq!(Address::decode_from(&g, &mut r).unwrap(), a);
            r.finish().unwrap();
        }
        assert!(Address::pk_hash(&g, &pk).matches_pk(&g, &pk));
        assert!(!Address::PostQuantum([0; 32]).matches_pk(&g, &pk));
    }

    #[test]
    fn outpoint_hash_distinguishes_index() {
        let a = OutPoint::new([1; 32], 0);
        let b = OutPoint::new([1; 32], 1);
        assert_ne!(a.hash(), b.hash());
    }
}
