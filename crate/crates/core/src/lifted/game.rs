//! EUF-CMA and EUF-LCMA unforgeability games.
//!
//! The challenger samples a key pair for the lifting under test and hands the
//! adversary its public key plus oracle access. In the LCMA variant the
//! adversary may also query the base (pre-quantum) signer; in the CMA variant
//! that oracle is withheld. The adversary wins by producing a lifted
//! signature that verifies on a message it never sent to the lifted signer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{address_of, KeyLifting, LiftedSignature, SeedLifting};
use crate::group::{Group, Point, PreQuantumSignature, Scalar};
use crate::hash::Digest32;
use crate::hd::{derive, DerivationPath, DerivationStep, Kdf, Seed, StepKind};

/// Longest key-generation path sampled for seed lifting.
pub const MAX_GAME_PATH: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameMode {
    /// Base signing oracle available.
    Lcma,
    /// Lifted signing oracle only.
    Cma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftingKind {
    Key,
    Seed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GameResult {
    Win,
    Lose(String),
}

impl GameResult {
    pub fn is_win(&self) -> bool {
        *self == GameResult::Win
    }
}

/// What the adversary is given as the public key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PublicKeyView {
    /// Key lifting: the address `H(pk)`.
    Address(Digest32),
    /// Seed lifting: the derived public key.
    Point(Point),
}

/// Output of the base signing oracle. Key lifting's modified base scheme
/// returns the public key next to the signature.
#[derive(Debug, Clone)]
pub struct BaseSignature {
    pub sig: PreQuantumSignature,
    pub pk: Option<Point>,
}

enum Keys {
    Key { sk: Scalar, address: Digest32 },
    Seed { seed: Seed, path: DerivationPath, sk: Scalar, pk: Point },
}

/// Oracle access handed to an adversary for one game.
pub struct GameOracles {
    group: Group,
    mode: GameMode,
    keys: Keys,
    key_lifting: KeyLifting,
    seed_lifting: SeedLifting,
    lifted_queries: Vec<Vec<u8>>,
    base_queries: Vec<Vec<u8>>,
}

impl GameOracles {
    fn new(group: &Group, kind: LiftingKind, mode: GameMode, kdf: Kdf, rng: &mut ChaCha20Rng) -> Self {
        let key_lifting = KeyLifting::transparent(group.clone());
        let seed_lifting = SeedLifting::transparent(group.clone(), kdf);
        let keys = match kind {
            LiftingKind::Key => {
                let sk = group.random_scalar(rng);
                let address = address_of(group, &group.pk_ec(&sk));
                Keys::Key { sk, address }
            }
            LiftingKind::Seed => {
                let seed = Seed::random(rng);
                let path = random_path(rng, MAX_GAME_PATH);
                let sk = derive(group, &kdf.kdf(group, &seed), &path).sk;
                let pk = group.pk_ec(&sk);
                Keys::Seed { seed, path, sk, pk }
            }
        };
        Self {
            group: group.clone(),
            mode,
            keys,
            key_lifting,
            seed_lifting,
            lifted_queries: Vec::new(),
            base_queries: Vec::new(),
        }
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn mode(&self) -> GameMode {
        self.mode
    }

    pub fn public_key(&self) -> PublicKeyView {
        match &self.keys {
            Keys::Key { address, .. } => PublicKeyView::Address(*address),
            Keys::Seed { pk, .. } => PublicKeyView::Point(pk.clone()),
        }
    }

    /// Key and seed lifting instances the adversary can use for public
    /// operations (verification, its own signing attempts).
    pub fn key_lifting(&self) -> &KeyLifting {
        &self.key_lifting
    }

    pub fn seed_lifting(&self) -> &SeedLifting {
        &self.seed_lifting
    }

    /// Base signer; `None` in the CMA game.
    pub fn base_sign(&mut self, msg: &[u8]) -> Option<BaseSignature> {
        if self.mode == GameMode::Cma {
            return None;
        }
        self.base_queries.push(msg.to_vec());
        Some(match &self.keys {
            Keys::Key { sk, .. } => BaseSignature {
                sig: self.group.prequantum_sign(sk, msg),
                pk: Some(self.group.pk_ec(sk)),
            },
            Keys::Seed { sk, .. } => BaseSignature {
                sig: self.group.prequantum_sign(sk, msg),
                pk: None,
            },
        })
    }

    pub fn lifted_sign(&mut self, msg: &[u8]) -> LiftedSignature {
        self.lifted_queries.push(msg.to_vec());
        match &self.keys {
            Keys::Key { sk, .. } => LiftedSignature::Key(self.key_lifting.sign(sk, msg)),
            Keys::Seed { seed, path, .. } => {
                LiftedSignature::Seed(self.seed_lifting.sign(seed, path, msg))
            }
        }
    }

    /// Public lifted verification under the game's key.
    pub fn lifted_verify(&self, msg: &[u8], sig: &LiftedSignature) -> bool {
        match (&self.keys, sig) {
            (Keys::Key { address, .. }, LiftedSignature::Key(s)) => {
                self.key_lifting.verify(address, msg, s)
            }
            (Keys::Seed { pk, .. }, LiftedSignature::Seed(s)) => self.seed_lifting.verify(pk, msg, s),
            _ => false,
        }
    }

    pub fn base_queries(&self) -> &[Vec<u8>] {
        &self.base_queries
    }

    pub fn lifted_queries(&self) -> &[Vec<u8>] {
        &self.lifted_queries
    }
}

pub trait Adversary {
    fn name(&self) -> &str;
    /// Returns a claimed forgery, or `None` to give up.
    fn run(&mut self, oracles: &mut GameOracles, rng: &mut ChaCha20Rng) -> Option<(Vec<u8>, LiftedSignature)>;
}

/// Uniform path with length in `0..=max_len` and uniform step kinds.
pub fn random_path<R: Rng + ?Sized>(rng: &mut R, max_len: usize) -> DerivationPath {
    let len = rng.gen_range(0..=max_len);
    DerivationPath::new(
        (0..len)
            .map(|_| DerivationStep {
                index: rng.gen(),
                kind: if rng.gen() { StepKind::Hardened } else { StepKind::NonHardened },
            })
            .collect(),
    )
}

/// Play one game.
pub fn play(
    group: &Group,
    kind: LiftingKind,
    mode: GameMode,
    kdf: Kdf,
    adversary: &mut dyn Adversary,
    rng: &mut ChaCha20Rng,
) -> GameResult {
    let mut oracles = GameOracles::new(group, kind, mode, kdf, rng);
    let Some((msg, sig)) = adversary.run(&mut oracles, rng) else {
        return GameResult::Lose("no forgery output".into());
    };
    if oracles.lifted_queries.contains(&msg) {
        return GameResult::Lose("message was queried to the lifted signer".into());
    }
    if !oracles.lifted_verify(&msg, &sig) {
        return GameResult::Lose("forgery does not verify".into());
    }
    GameResult::Win
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameSummary {
    pub wins: usize,
    pub losses: usize,
    pub reasons: Vec<String>,
}

/// Play `rounds` independent games with fresh keys drawn from `seed`.
pub fn euf_lcma_game(
    group: &Group,
    kind: LiftingKind,
    mode: GameMode,
    kdf: Kdf,
    adversary: &mut dyn Adversary,
    rounds: usize,
    seed: u64,
) -> GameSummary {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut summary = GameSummary {
        wins: 0,
        losses: 0,
        reasons: Vec::new(),
    };
    for _ in 0..rounds {
        match play(group, kind, mode, kdf, adversary, &mut rng) {
            GameResult::Win => summary.wins += 1,
            GameResult::Lose(reason) => {
                summary.losses += 1;
                if !summary.reasons.contains(&reason) {
                    summary.reasons.push(reason);
                }
            }
        }
    }
    summary
}

/// Outputs nothing.
pub struct NullAdversary;

impl Adversary for NullAdversary {
    fn name(&self) -> &str {
        "null"
    }

    fn run(&mut self, _: &mut GameOracles, _: &mut ChaCha20Rng) -> Option<(Vec<u8>, LiftedSignature)> {
        None
    }
}

/// Asks the lifted signer for a message and hands the answer back.
pub struct ReplayAdversary;

impl Adversary for ReplayAdversary {
    fn name(&self) -> &str {
        "replay"
    }

    fn run(&mut self, oracles: &mut GameOracles, _: &mut ChaCha20Rng) -> Option<(Vec<u8>, LiftedSignature)> {
        let msg = b"replayed".to_vec();
        let sig = oracles.lifted_sign(&msg);
        Some((msg, sig))
    }
}

/// Holds a discrete-log oracle. Against key lifting it reads the public key
/// out of a base signature, inverts it and signs. Against seed lifting it
/// inverts the public key and tries:
///
/// 1. a self-made master key `(sk, c)` with the empty path;
/// 2. truncations and reuse of an honest lifted signature on another message.
///
/// It returns the first attempt that passes public verification, or its last
/// attempt if none do.
pub struct DlogAdversary {
    pub target: Vec<u8>,
}

impl Default for DlogAdversary {
    fn default() -> Self {
        Self {
            target: b"forged target".to_vec(),
        }
    }
}

impl DlogAdversary {
    fn seed_attempts(
        &self,
        oracles: &mut GameOracles,
        pk: &Point,
        rng: &mut ChaCha20Rng,
    ) -> Vec<LiftedSignature> {
        let group = oracles.group().clone();
        let mut attempts = Vec::new();
        if let Ok(sk) = group.quantum_invert(pk) {
            let mut chain_code = [0u8; 32];
            rng.fill(&mut chain_code);
            let msk = crate::hd::ExtendedSecretKey { sk: sk.clone(), chain_code };
            let sl = oracles.seed_lifting();
            // Best available proof: a preimage guess for the fabricated master key.
            let proof = super::OwfBackend::sign(
                &sl.backend,
                &group.encode_scalar(&sk),
                &super::seed_message(&self.target, &DerivationPath::empty()),
            );
            attempts.push(LiftedSignature::Seed(super::SeedLiftedSig {
                proof,
                msk,
                path: DerivationPath::empty(),
            }));
        }
        if let LiftedSignature::Seed(honest) = oracles.lifted_sign(b"unrelated message") {
            for n in 0..=honest.path.len() {
                let (p1, p2) = honest.path.split_at(n);
                attempts.push(LiftedSignature::Seed(super::SeedLiftedSig {
                    proof: honest.proof.clone(),
                    msk: derive(&group, &honest.msk, &p1),
                    path: p2,
                }));
            }
        }
        attempts
    }
}

impl Adversary for DlogAdversary {
    fn name(&self) -> &str {
        "dlog"
    }

    fn run(&mut self, oracles: &mut GameOracles, rng: &mut ChaCha20Rng) -> Option<(Vec<u8>, LiftedSignature)> {
        let target = self.target.clone();
        match oracles.public_key() {
            PublicKeyView::Address(_) => {
                let base = oracles.base_sign(&target)?;
                let pk = base.pk?;
                let sk = oracles.group().quantum_invert(&pk).ok()?;
                let sig = oracles.key_lifting().sign(&sk, &target);
                Some((target, LiftedSignature::Key(sig)))
            }
            PublicKeyView::Point(pk) => {
                let _ = oracles.base_sign(&target);
                let attempts = self.seed_attempts(oracles, &pk, rng);
                let chosen = attempts
                    .iter()
                    .find(|s| oracles.lifted_verify(&target, s))
                    .or(attempts.last())
                    .cloned()?;
                Some((target, chosen))
            }
        }
    }
}
