//! Transactions.
//!
//! Layout: `kind || be64(nonce) || be64(fee) || inputs || outputs`, lists
//! prefixed with a `u32` count.
//!
//! * kind: tag byte, then `H(tx)` (32 bytes) for an FC commitment, a method byte
//!   for an FC spend, or the challenged txid (32 bytes) for a fraud proof.
//! * input: outpoint (36 bytes) then witness.
//! * witness: tag byte; pre-quantum `bytes(pk) || bytes(sig)`, post-quantum
//!   `bytes(proof)`, derivation `bytes(xsk_par) || path`, or nothing.
//! * output: `be64(value) || address || opt(be64 wait)`.
//!
//! The txid hashes the full encoding. The sighash replaces every witness with
//! a placeholder tag, so signatures can commit to it.

use crate::encoding::{DecodeError, Reader, Writer};
use crate::group::{Group, Point, PreQuantumSignature};
use crate::hash::{sha256, sha256_parts, Digest32};
use crate::hd::{DerivationPath, ExtendedSecretKey};
use crate::lifted::ProofSig;

use super::{Address, OutPoint, TxId};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum FcMethod {
    /// Signed with a key whose public key was not known before the commitment.
    Hashed,
    /// Carries `(xsk_par, P)` with `PK(Der(xsk_par, P)) = pk`.
    Derived,
    /// Signed spend of a known key; opens a challenge period.
    Naked,
    /// Unsigned spend of a leaked key; opens a challenge period.
    Lost,
}

impl FcMethod {
    fn tag(self) -> u8 {
        match self {
            FcMethod::Hashed => 0,
            FcMethod::Derived => 1,
            FcMethod::Naked => 2,
            FcMethod::Lost => 3,
        }
    }

    fn from_tag(t: u8) -> Result<Self, DecodeError> {
        Ok(match t {
            0 => FcMethod::Hashed,
            1 => FcMethod::Derived,
            2 => FcMethod::Naked,
            3 => FcMethod::Lost,
            _ => return Err(DecodeError::Invalid("fc method")),
        })
    }

    pub fn challenged(self) -> bool {
        matches!(self, FcMethod::Naked | FcMethod::Lost)
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub enum TxKind {
    Transfer,
    /// Payload is `H(tx)` of a later reveal.
    FcCommit { payload: Digest32 },
    FcSpend(FcMethod),
    /// Derived spend of the UTXO claimed by the challenged transaction.
    FraudProof { challenged: TxId },
    /// Reveal of a lifted commitment.
    LfcSpend,
    /// Funds the block's fine escrow. Inputs minus outputs minus fee is escrowed.
    EscrowFunding,
}

#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub enum Witness {
    PreQuantum { pk: Point, sig: PreQuantumSignature },
    PostQuantum { proof: ProofSig },
    Derivation { xsk: ExtendedSecretKey, path: DerivationPath },
    Unsigned,
}

const W_PRE: u8 = 0;
const W_PQ: u8 = 1;
const W_DER: u8 = 2;
const W_NONE: u8 = 3;
const W_STRIPPED: u8 = 0xff;

impl Witness {
    fn encode_into(&self, group: &Group, w: &mut Writer) {
        match self {
            Witness::PreQuantum { pk, sig } => {
                w.u8(W_PRE).bytes(&group.encode_point(pk)).bytes(&sig.0);
            }
            Witness::PostQuantum { proof } => {
                w.u8(W_PQ).bytes(&proof.0);
            }
            Witness::Derivation { xsk, path } => {
                w.u8(W_DER).bytes(&xsk.encode(group));
                path.encode_into(w);
            }
            Witness::Unsigned => {
                w.u8(W_NONE);
            }
        }
    }

    fn decode_from(group: &Group, r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        match r.u8()? {
            W_PRE => {
                let pk = group
                    .decode_point(r.bytes()?)
                    .ok_or(DecodeError::Invalid("point"))?;
                let sig = PreQuantumSignature(r.bytes()?.to_vec());
                Ok(Witness::PreQuantum { pk, sig })
            }
            W_PQ => Ok(Witness::PostQuantum {
                proof: ProofSig(r.bytes()?.to_vec()),
            }),
            W_DER => {
                let xsk = ExtendedSecretKey::decode(group, r.bytes()?)
                    .ok_or(DecodeError::Invalid("extended key"))?;
                let path = DerivationPath::decode_from(r)?;
                Ok(Witness::Derivation { xsk, path })
            }
            W_NONE => Ok(Witness::Unsigned),
            _ => Err(DecodeError::Invalid("witness tag")),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct TxIn {
    pub prevout: OutPoint,
    pub witness: Witness,
}

#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct TxOut {
    pub value: u64,
    pub address: Address,
    pub wait_blocks: Option<u64>,
}

impl TxOut {
    pub fn new(value: u64, address: Address) -> Self {
        Self {
            value,
            address,
            wait_blocks: None,
        }
    }

    pub fn encode_into(&self, group: &Group, w: &mut Writer) {
        w.u64(self.value);
        self.address.encode_into(group, w);
        w.opt_u64(self.wait_blocks);
    }

    pub fn decode_from(group: &Group, r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            value: r.u64()?,
            address: Address::decode_from(group, r)?,
            wait_blocks: r.opt_u64()?,
        })
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct Transaction {
    pub kind: TxKind,
    pub inputs: Vec<TxIn>,
    pub outputs: Vec<TxOut>,
    pub fee: u64,
    /// Distinguishes otherwise identical transactions.
    pub nonce: u64,
}

const K_TRANSFER: u8 = 0;
const K_COMMIT: u8 = 1;
const K_SPEND: u8 = 2;
const K_FRAUD: u8 = 3;
const K_LFC: u8 = 4;
const K_ESCROW: u8 = 5;

impl Transaction {
    fn encode_with(&self, group: &Group, strip: bool) -> Vec<u8> {
        let mut w = Writer::new();
        match &self.kind {
            TxKind::Transfer => {
                w.u8(K_TRANSFER);
            }
            TxKind::FcCommit { payload } => {
                w.u8(K_COMMIT).fixed(payload);
            }
            TxKind::FcSpend(m) => {
                w.u8(K_SPEND).u8(m.tag());
            }
            TxKind::FraudProof { challenged } => {
                w.u8(K_FRAUD).fixed(challenged);
            }
            TxKind::LfcSpend => {
                w.u8(K_LFC);
            }
            TxKind::EscrowFunding => {
                w.u8(K_ESCROW);
            }
        }
        w.u64(self.nonce).u64(self.fee);
        w.len(self.inputs.len());
        for i in &self.inputs {
            i.prevout.encode_into(&mut w);
            if strip {
                w.u8(W_STRIPPED);
            } else {
                i.witness.encode_into(group, &mut w);
            }
        }
        w.len(self.outputs.len());
        for o in &self.outputs {
            o.encode_into(group, &mut w);
        }
        w.finish()
    }

    pub fn encode(&self, group: &Group) -> Vec<u8> {
        self.encode_with(group, false)
    }

    pub fn decode_from(group: &Group, r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let kind = match r.u8()? {
            K_TRANSFER => TxKind::Transfer,
            K_COMMIT => TxKind::FcCommit { payload: r.array()? },
            K_SPEND => TxKind::FcSpend(FcMethod::from_tag(r.u8()?)?),
            K_FRAUD => TxKind::FraudProof { challenged: r.array()? },
            K_LFC => TxKind::LfcSpend,
            K_ESCROW => TxKind::EscrowFunding,
            _ => return Err(DecodeError::Invalid("tx kind")),
        };
        let nonce = r.u64()?;
        let fee = r.u64()?;
        let n = r.count(OutPoint::ENCODED_LEN + 1)?;
        let mut inputs = Vec::with_capacity(n);
        for _ in 0..n {
            let prevout = OutPoint::decode_from(r)?;
            let witness = Witness::decode_from(group, r)?;
            inputs.push(TxIn { prevout, witness });
        }
        let n = r.count(10)?;
        let mut outputs = Vec::with_capacity(n);
        for _ in 0..n {
            outputs.push(TxOut::decode_from(group, r)?);
        }
        Ok(Self {
            kind,
            inputs,
            outputs,
            fee,
            nonce,
        })
    }

    pub fn decode(group: &Group, bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let tx = Self::decode_from(group, &mut r)?;
        r.finish()?;
        Ok(tx)
    }

    pub fn txid(&self, group: &Group) -> TxId {
        sha256(&self.encode(group))
    }

    /// Digest every witness signs. Excludes witnesses.
    pub fn sighash(&self, group: &Group) -> Digest32 {
        sha256_parts(&[b"sighash", &self.encode_with(group, true)])
    }

    pub fn output_value(&self) -> u128 {
        self.outputs.iter().map(|o| o.value as u128).sum()
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            TxKind::Transfer => "transfer",
            TxKind::FcCommit { .. } => "fc-commit",
            TxKind::FcSpend(FcMethod::Hashed) => "fc-hashed",
            TxKind::FcSpend(FcMethod::Derived) => "fc-derived",
            TxKind::FcSpend(FcMethod::Naked) => "fc-naked",
            TxKind::FcSpend(FcMethod::Lost) => "fc-lost",
            TxKind::FraudProof { .. } => "fraud-proof",
            TxKind::LfcSpend => "lfc-reveal",
            TxKind::EscrowFunding => "escrow-funding",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hd::{DerivationStep, Kdf, Seed};

    fn sample(g: &Group) -> Transaction {
        let sk = g.scalar(12);
        let pk = g.pk_ec(&sk);
        let xsk = Kdf::new(2).kdf(g, &Seed::new(vec![3; 16], vec![]).unwrap());
        Transaction {
            kind: TxKind::FcSpend(FcMethod::Derived),
            inputs: vec![
                TxIn {
                    prevout: OutPoint::new([1; 32], 0),
                    witness: Witness::PreQuantum {
                        sig: g.prequantum_sign(&sk, b"x"),
                        pk,
                    },
                },
                TxIn {
                    prevout: OutPoint::new([2; 32], 3),
                    witness: Witness::Derivation {
                        xsk,
                        path: DerivationPath::new(vec![DerivationStep::hardened(1)]),
                    },
                },
                TxIn {
                    prevout: OutPoint::new([4; 32], 1),
                    witness: Witness::PostQuantum {
                        proof: ProofSig(vec![9, 9]),
                    },
                },
                TxIn {
                    prevout: OutPoint::new([5; 32], 0),
                    witness: Witness::Unsigned,
                },
            ],
            outputs: vec![
                TxOut::new(10, Address::PostQuantum([8; 32])),
                TxOut {
                    value: 5,
                    address: Address::Burn,
                    wait_blocks: Some(4),
                },
            ],
            fee: 3,
            nonce: 77,
        }
    }

    #[test]
    fn round_trip_every_kind() {
        let g = Group::toy(101).unwrap();
        let base = sample(&g);
        for kind in [
            TxKind::Transfer,
            TxKind::FcCommit { payload: [6; 32] },
            TxKind::FcSpend(FcMethod::Hashed),
            TxKind::FcSpend(FcMethod::Lost),
            TxKind::FraudProof { challenged: [1; 32] },
            TxKind::LfcSpend,
            TxKind::EscrowFunding,
        ] {
            let tx = Transaction {
                kind,
                ..base.clone()
            };
            assert_eq!(Transaction::decode(&g, &tx.encode(&g)).unwrap(), tx);
        }
    }

    #[test]
    fn sighash_ignores_witnesses_txid_does_not() {
        let g = Group::toy(101).unwrap();
        let a = sample(&g);
        let mut b = a.clone();
        b.inputs[0].witness = Witness::Unsigned;
        assert_eq!(a.sighash(&g), b.sighash(&g));
        assert_ne!(a.txid(&g), b.txid(&g));
        let mut c = a.clone();
        c.fee += 1;
        assert_ne!(a.sighash(&g), c.sighash(&g));
    }

    #[test]
    fn truncated_input_rejected() {
        let g = Group::toy(101).unwrap();
        let bytes = sample(&g).encode(&g);
        for n in 0..bytes.len() {
            assert!(Transaction::decode(&g, &bytes[..n]).is_err());
        }
    }
}
