//! Blocks and the non-transaction items they carry.
//!
//! Layout: `be64(height) || parent(32) || miner address || coinbase outputs ||
//! transactions || lifted records || lifted claims || samaritan reports ||
//! registry messages || opt(canary kill)`. Lists carry a `u32` count and each
//! transaction is additionally length-prefixed.
//!
//! A lifted record is exactly `H(tx)(32) || H(u)(32) || be64(alpha)`.

use crate::encoding::{DecodeError, Reader, Writer};
use crate::group::{Group, Point, PreQuantumSignature};
use crate::hash::{sha256, sha256_parts, Digest32};
use crate::hd::{DerivationPath, ExtendedSecretKey};
use crate::lifted::LiftedSignature;

use super::{Address, Transaction, TxOut};

/// On-chain part of a lifted commitment.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct LfcRecord {
    pub tx_hash: Digest32,
    pub utxo_hash: Digest32,
    pub alpha: u64,
}

impl LfcRecord {
    pub const ENCODED_LEN: usize = 72;

    pub fn encode_into(&self, w: &mut Writer) {
        w.fixed(&self.tx_hash).fixed(&self.utxo_hash).u64(self.alpha);
    }

    pub fn decode_from(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            tx_hash: r.array()?,
            utxo_hash: r.array()?,
            alpha: r.u64()?,
        })
    }
}

/// A miner posting the proof of ownership for an unrevealed commitment.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct LfcClaim {
    pub commitment: Digest32,
    pub sig: LiftedSignature,
}

#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub enum RegistryMessage {
    /// `(H(xsk), P1, ..., Pk)`.
    Declare {
        key_id: Digest32,
        paths: Vec<DerivationPath>,
    },
    /// Publishes `xsk`, materializing its key set.
    Reveal { xsk: ExtendedSecretKey },
}

#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct CanaryKill {
    pub sig: PreQuantumSignature,
    pub claimant: Address,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Block {
    pub height: u64,
    pub parent: Digest32,
    pub miner: Option<Address>,
    pub coinbase: Vec<TxOut>,
    pub transactions: Vec<Transaction>,
    pub lfc_records: Vec<LfcRecord>,
    pub lfc_claims: Vec<LfcClaim>,
    pub samaritan_reports: Vec<Point>,
    pub registry: Vec<RegistryMessage>,
    pub canary_kill: Option<CanaryKill>,
}

/// Txid of the implicit coinbase transaction of a block.
pub fn coinbase_txid(height: u64, parent: &Digest32) -> Digest32 {
    sha256_parts(&[b"coinbase", &height.to_be_bytes(), parent])
}

/// Txid under which protocol-created outputs of a block are recorded.
pub fn settlement_txid(height: u64, parent: &Digest32) -> Digest32 {
    sha256_parts(&[b"settlement", &height.to_be_bytes(), parent])
}

impl Block {
    pub fn coinbase_txid(&self) -> Digest32 {
        coinbase_txid(self.height, &self.parent)
    }

    pub fn settlement_txid(&self) -> Digest32 {
        settlement_txid(self.height, &self.parent)
    }

    pub fn samaritan_bytes(&self, group: &Group) -> usize {
        self.samaritan_reports.len() * group.point_len()
    }

    pub fn encode(&self, group: &Group) -> Vec<u8> {
        let mut w = Writer::new();
        w.u64(self.height).fixed(&self.parent);
        match &self.miner {
            None => {
                w.u8(0);
            }
            Some(a) => {
                w.u8(1);
                a.encode_into(group, &mut w);
            }
        }
        w.len(self.coinbase.len());
        for o in &self.coinbase {
            o.encode_into(group, &mut w);
        }
        w.len(self.transactions.len());
        for tx in &self.transactions {
            w.bytes(&tx.encode(group));
        }
        w.len(self.lfc_records.len());
        for r in &self.lfc_records {
            r.encode_into(&mut w);
        }
        w.len(self.lfc_claims.len());
        for c in &self.lfc_claims {
            w.fixed(&c.commitment);
            c.sig.encode_into(group, &mut w);
        }
        w.len(self.samaritan_reports.len());
        for p in &self.samaritan_reports {
            w.fixed(&group.encode_point(p));
        }
        w.len(self.registry.len());
        for m in &self.registry {
            match m {
                RegistryMessage::Declare { key_id, paths } => {
                    w.u8(0).fixed(key_id).len(paths.len());
                    for p in paths {
                        p.encode_into(&mut w);
                    }
                }
                RegistryMessage::Reveal { xsk } => {
                    w.u8(1).bytes(&xsk.encode(group));
                }
            }
        }
        match &self.canary_kill {
            None => {
                w.u8(0);
            }
            Some(k) => {
                w.u8(1).bytes(&k.sig.0);
                k.claimant.encode_into(group, &mut w);
            }
        }
        w.finish()
    }

    pub fn decode_from(group: &Group, r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let height = r.u64()?;
        let parent = r.array()?;
        let miner = match r.u8()? {
            0 => None,
            1 => Some(Address::decode_from(group, r)?),
            _ => return Err(DecodeError::Invalid("miner option")),
        };
        let mut coinbase = Vec::new();
        for _ in 0..r.count(10)? {
            coinbase.push(TxOut::decode_from(group, r)?);
        }
        let mut transactions = Vec::new();
        for _ in 0..r.count(4)? {
            transactions.push(Transaction::decode(group, r.bytes()?)?);
        }
        let mut lfc_records = Vec::new();
        for _ in 0..r.count(LfcRecord::ENCODED_LEN)? {
            lfc_records.push(LfcRecord::decode_from(r)?);
        }
        let mut lfc_claims = Vec::new();
        for _ in 0..r.count(33)? {
            let commitment = r.array()?;
            let sig = LiftedSignature::decode_from(group, r)?;
            lfc_claims.push(LfcClaim { commitment, sig });
        }
        let mut samaritan_reports = Vec::new();
        for _ in 0..r.count(group.point_len())? {
            let p = group
                .decode_point(r.fixed(group.point_len())?)
                .ok_or(DecodeError::Invalid("point"))?;
            samaritan_reports.push(p);
        }
        let mut registry = Vec::new();
        for _ in 0..r.count(1)? {
            registry.push(match r.u8()? {
                0 => {
                    let key_id = r.array()?;
                    let mut paths = Vec::new();
                    for _ in 0..r.count(4)? {
                        paths.push(DerivationPath::decode_from(r)?);
                    }
                    RegistryMessage::Declare { key_id, paths }
                }
                1 => RegistryMessage::Reveal {
                    xsk: ExtendedSecretKey::decode(group, r.bytes()?)
                        .ok_or(DecodeError::Invalid("extended key"))?,
                },
                _ => return Err(DecodeError::Invalid("registry tag")),
            });
        }
        let canary_kill = match r.u8()? {
            0 => None,
            1 => Some(CanaryKill {
                sig: PreQuantumSignature(r.bytes()?.to_vec()),
                claimant: Address::decode_from(group, r)?,
            }),
            _ => return Err(DecodeError::Invalid("canary option")),
        };
        Ok(Self {
            height,
            parent,
            miner,
            coinbase,
            transactions,
            lfc_records,
            lfc_claims,
            samaritan_reports,
            registry,
            canary_kill,
        })
    }

    pub fn decode(group: &Group, bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let b = Self::decode_from(group, &mut r)?;
        r.finish()?;
        Ok(b)
    }

    pub fn hash(&self, group: &Group) -> Digest32 {
        sha256(&self.encode(group))
    }
}
