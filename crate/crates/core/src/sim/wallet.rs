//! Key material held by simulated users and transaction signing.

use crate::consensus::ChainEnv;
use crate::group::{Point, Scalar};
use crate::hash::{sha256, sha256_parts, Digest32};
use crate::hd::{derive, DerivationPath, ExtendedSecretKey, Seed};
use crate::ledger::{Address, OutPoint, Transaction, TxIn, TxKind, TxOut, Witness};
use crate::lifted::{LiftedSignature, OwfBackend};
use crate::lfc::ownership_message;

/// Secret behind a post-quantum address.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PqKey {
    secret: Digest32,
}

impl PqKey {
    pub fn from_label(label: &str) -> Self {
        Self {
            secret: sha256_parts(&[b"sim/pq", label.as_bytes()]),
        }
    }

    pub fn address(&self) -> Address {
        Address::PostQuantum(sha256(&self.secret))
    }

    pub fn witness(&self, env: &ChainEnv, sighash: &Digest32) -> Witness {
        Witness::PostQuantum {
            proof: env.pq.sign(&self.secret, sighash),
        }
    }
}

/// How one input gets its witness.
#[derive(Debug, Clone)]
pub enum Signer {
    Pre(Scalar),
    Pq(PqKey),
    Derivation(ExtendedSecretKey, DerivationPath),
    Unsigned,
}

/// Build a transaction and fill every witness over its sighash.
pub fn build_tx(
    env: &ChainEnv,
    kind: TxKind,
    inputs: Vec<(OutPoint, Signer)>,
    outputs: Vec<TxOut>,
    fee: u64,
    nonce: u64,
) -> Transaction {
    let g = &env.group;
    let mut tx = Transaction {
        kind,
        inputs: inputs
            .iter()
            .map(|(op, _)| TxIn {
                prevout: *op,
                witness: Witness::Unsigned,
            })
            .collect(),
        outputs,
        fee,
        nonce,
    };
    let sighash = tx.sighash(g);
    for (slot, (_, signer)) in tx.inputs.iter_mut().zip(inputs) {
        slot.witness = match signer {
            Signer::Pre(sk) => Witness::PreQuantum {
                pk: g.pk_ec(&sk),
                sig: g.prequantum_sign(&sk, &sighash),
            },
            Signer::Pq(k) => k.witness(env, &sighash),
            Signer::Derivation(xsk, path) => Witness::Derivation { xsk, path },
            Signer::Unsigned => Witness::Unsigned,
        };
    }
    tx
}

/// A pre-quantum key together with how it was made.
#[derive(Debug, Clone)]
pub struct PreKey {
    pub sk: Scalar,
    pub pk: Point,
    /// Present for keys derived from a seed.
    pub origin: Option<(Seed, DerivationPath)>,
}

impl PreKey {
    /// Non-derived key from a label.
    pub fn standalone(env: &ChainEnv, label: &str) -> Self {
        let g = &env.group;
        let mut sk = g.scalar_reduce(&sha256_parts(&[b"sim/sk", label.as_bytes()]));
        if sk.is_zero() {
            sk = g.scalar(1);
        }
        Self {
            pk: g.pk_ec(&sk),
            sk,
            origin: None,
        }
    }

    /// Key at `path` under the wallet seed for `label`.
    pub fn derived(env: &ChainEnv, label: &str, path: DerivationPath) -> Self {
        let seed = Seed::new(sha256_parts(&[b"sim/seed", label.as_bytes()]).to_vec(), Vec::new())
            .expect("32 bytes of entropy");
        let msk = env.kdf.kdf(&env.group, &seed);
        let k = derive(&env.group, &msk, &path);
        Self {
            pk: env.group.pk_ec(&k.sk),
            sk: k.sk,
            origin: Some((seed, path)),
        }
    }

    pub fn address(&self, env: &ChainEnv) -> Address {
        Address::pk_hash(&env.group, &self.pk)
    }

    pub fn msk(&self, env: &ChainEnv) -> Option<ExtendedSecretKey> {
        self.origin.as_ref().map(|(seed, _)| env.kdf.kdf(&env.group, seed))
    }

    /// `(xsk, P)` witness material for derived spends.
    pub fn derivation(&self, env: &ChainEnv) -> Option<Signer> {
        let (_, path) = self.origin.as_ref()?;
        Some(Signer::Derivation(self.msk(env)?, path.clone()))
    }

    /// Proof of ownership over `(H(tx), alpha)`: seed-lifted when the key is
    /// derived, key-lifted otherwise.
    pub fn ownership(&self, env: &ChainEnv, tx_hash: &Digest32, alpha: u64) -> LiftedSignature {
        let msg = ownership_message(tx_hash, alpha);
        match &self.origin {
            Some((seed, path)) => LiftedSignature::Seed(env.seed_lifting.sign(seed, path, &msg)),
            None => LiftedSignature::Key(env.key_lifting.sign(&self.sk, &msg)),
        }
    }
}
