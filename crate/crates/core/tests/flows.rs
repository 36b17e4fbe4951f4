//! End-to-end rule flows through the block builder and the chain.

use std::sync::Arc;

use fawkes::consensus::builder::{build_block, Built, Candidates};
use fawkes::consensus::{Chain, ChainConfig, ChainEnv, Event};
use fawkes::fawkes::ChallengeStatus;
use fawkes::hash::sha256;
use fawkes::hd::{DerivationPath, DerivationStep};
use fawkes::ledger::{Address, Block, CanaryKill, FcMethod, LfcClaim, OutPoint, TxKind, TxOut, Utxo};
use fawkes::lfc::{commitment_id, LfcMessage, LfcState};
use fawkes::params::ClaimDeadline;
use fawkes::sim::wallet::{build_tx, PqKey, PreKey, Signer};

fn env() -> Arc<ChainEnv> {
    let mut cfg = ChainConfig::default();
    let p = &mut cfg.params;
    p.kdf_iterations = 1;
    p.ledger.coinbase_maturity = 1;
    p.era.countdown_blocks = 5;
    p.fc.wait_blocks = 5;
    p.fc.challenge_blocks = 20;
    p.epochs.fc_len = 60;
    p.epochs.lfc_len = 60;
    p.epochs.fc_commit_cutoff = 10;
    p.epochs.lfc_commit_cutoff = 20;
    p.lfc.wait_blocks = 5;
    p.lfc.reveal_window = 5;
    p.lfc.claim_window = 5;
    p.lfc.claim_deadline = ClaimDeadline::Window;
    p.lfc.proof_capacity = 4;
    p.lfc.capacity_window = 10;
    p.lfc.fee_aggregation_delay = 10;
    Arc::new(ChainEnv::new(cfg).unwrap())
}

struct World {
    env: Arc<ChainEnv>,
    chain: Chain,
    miner: PqKey,
}

impl World {
    fn new(alloc: Vec<TxOut>) -> Self {
        let env = env();
        let genesis = Block {
            coinbase: alloc,
            ..Block::default()
        };
        let chain = Chain::new(env.clone(), genesis).unwrap();
        Self {
            env,
            chain,
            miner: PqKey::from_label("miner"),
        }
    }

    fn mine(&mut self, c: Candidates) -> Built {
        let built = build_block(&self.env, self.chain.state(), &self.miner.address(), &c, |_, _| None).unwrap();
        assert!(
            built.rejected.is_empty(),
            "height {}: {:?}",
            built.block.height,
            built.rejected
        );
        self.chain.apply_block(built.block.clone()).unwrap();
        assert!(self.chain.state().supply.balanced());
        built
    }

    fn mine_empty_to(&mut self, h: u64) {
        while self.chain.height() < h {
            self.mine(Candidates::default());
        }
    }

    fn utxo_at(&self, a: &Address) -> Utxo {
        let mut v = self.chain.state().utxos_of(a);
        assert_eq!(v.len(), 1, "{a:?}");
        v.pop().unwrap()
    }

    fn kill_canary(&mut self) {
        let cg = &self.env.canary_group;
        let sk = cg.quantum_invert(&self.env.canary.challenge_pk).unwrap();
        let kill = CanaryKill {
            sig: cg.prequantum_sign(&sk, &self.env.canary.nonce),
            claimant: self.miner.address(),
        };
        self.mine(Candidates {
            canary_kill: Some(kill),
            ..Candidates::default()
        });
    }

    /// Commitment to `payload` paid from the single UTXO of `fee_key`.
    fn commit_tx(&self, fee_key: &PqKey, payload: [u8; 32]) -> fawkes::ledger::Transaction {
        let u = self.utxo_at(&fee_key.address());
        build_tx(
            &self.env,
            TxKind::FcCommit { payload },
            vec![(u.outpoint, Signer::Pq(fee_key.clone()))],
            vec![TxOut::new(u.value - 1, fee_key.address())],
            1,
            0,
        )
    }
}

fn path(i: u32) -> DerivationPath {
    DerivationPath::new(vec![DerivationStep::hardened(44), DerivationStep::normal(i)])
}

fn txs(v: Vec<fawkes::ledger::Transaction>) -> Candidates {
    Candidates {
        transactions: v,
        ..Candidates::default()
    }
}

#[test]
fn fawkescoin_spends_and_fraud_proof() {
    let probe = env();
    let alice = PreKey::standalone(&probe, "alice");
    let bob = PreKey::derived(&probe, "bob", path(0));
    let dave = PreKey::standalone(&probe, "dave");
    let baiter = PreKey::derived(&probe, "baiter", path(1));
    let fees: Vec<PqKey> = ["alice", "bob", "dave", "thief", "baiter", "dave-dep", "thief-dep"]
        .iter()
        .map(|l| PqKey::from_label(&format!("{l}/fee")))
        .collect();
    let mut alloc = vec![
        TxOut::new(1000, alice.address(&probe)),
        TxOut::new(1000, bob.address(&probe)),
        TxOut::new(1000, Address::PlainPk(dave.pk.clone())),
        TxOut::new(1000, baiter.address(&probe)),
    ];
    alloc.extend(fees.iter().map(|k| TxOut::new(2000, k.address())));
    let mut w = World::new(alloc);
    let env = w.env.clone();

    w.kill_canary();
    w.mine(Candidates {
        samaritan_reports: vec![baiter.pk.clone()],
        ..Candidates::default()
    });
    w.mine_empty_to(6);

    let dest = |l: &str| PqKey::from_label(l).address();
    let ua = w.utxo_at(&alice.address(&env));
    let spend_a = build_tx(
        &env,
        TxKind::FcSpend(FcMethod::Hashed),
        vec![(ua.outpoint, Signer::Pre(alice.sk.clone()))],
        vec![TxOut::new(990, dest("alice/new"))],
        10,
        0,
    );
    let ub = w.utxo_at(&bob.address(&env));
    let spend_b = build_tx(
        &env,
        TxKind::FcSpend(FcMethod::Derived),
        vec![(ub.outpoint, bob.derivation(&env).unwrap())],
        vec![TxOut::new(990, dest("bob/new"))],
        10,
        0,
    );
    let ud = w.utxo_at(&Address::PlainPk(dave.pk.clone()));
    let dd = w.utxo_at(&fees[5].address());
    let spend_d = build_tx(
        &env,
        TxKind::FcSpend(FcMethod::Naked),
        vec![(ud.outpoint, Signer::Pre(dave.sk.clone())), (dd.outpoint, Signer::Pq(fees[5].clone()))],
        vec![TxOut::new(990, dest("dave/new")), TxOut::new(dd.value, fees[5].address())],
        10,
        0,
    );
    let uv = w.utxo_at(&baiter.address(&env));
    let td = w.utxo_at(&fees[6].address());
    let theft = build_tx(
        &env,
        TxKind::FcSpend(FcMethod::Lost),
        vec![(uv.outpoint, Signer::Unsigned), (td.outpoint, Signer::Pq(fees[6].clone()))],
        vec![TxOut::new(1000, dest("thief/loot")), TxOut::new(td.value - 10, fees[6].address())],
        10,
        0,
    );
    let g = &env.group;
    let commits = vec![
        w.commit_tx(&fees[0], spend_a.txid(g)),
        w.commit_tx(&fees[1], spend_b.txid(g)),
        w.commit_tx(&fees[2], spend_d.txid(g)),
        w.commit_tx(&fees[3], theft.txid(g)),
    ];
    w.mine(txs(commits));
    w.mine_empty_to(10);

    // Too young at height 11.
    let early = build_block(&env, w.chain.state(), &w.miner.address(), &txs(vec![spend_a.clone()]), |_, _| None).unwrap();
    assert_eq!(early.rejected.len(), 1);
    assert_eq!(early.rejected[0].1.rule, "fc-commitment-young");
    w.mine_empty_to(11);

    let reveal = w.mine(txs(vec![spend_a, spend_b, spend_d.clone(), theft.clone()]));
    assert_eq!(reveal.block.height, 12);
    assert_eq!(w.chain.state().balance_of(&dest("alice/new")), 990);
    assert_eq!(w.chain.state().balance_of(&dest("bob/new")), 990);
    assert_eq!(w.chain.state().challenges.len(), 2);
    assert_eq!(w.chain.state().registry.banned_since(g, &bob.msk(&env).unwrap()), Some(12));

    // The baiter answers with a fraud proof.
    let proof = build_tx(
        &env,
        TxKind::FraudProof {
            challenged: theft.txid(g),
        },
        vec![(uv.outpoint, baiter.derivation(&env).unwrap())],
        vec![TxOut::new(995, dest("baiter/new"))],
        5,
        0,
    );
    w.mine(txs(vec![w.commit_tx(&fees[4], proof.txid(g))]));
    w.mine_empty_to(17);
    let before = w.chain.state().balance_of(&w.miner.address());
    w.mine(txs(vec![proof]));
    let st = w.chain.state();
    let rec = &st.challenges[&theft.txid(g)];
    assert_eq!(rec.status, ChallengeStatus::Defeated);
    let deposit = rec.deposit_value;
    // Deposit minus the theft fee goes to the baiter; the fee to the including miner.
    assert_eq!(st.balance_of(&dest("baiter/new")), 995 + deposit - 10);
    assert_eq!(st.balance_of(&dest("thief/loot")), 0);
    assert!(st.balance_of(&w.miner.address()) > before);

    w.mine_empty_to(32);
    let st = w.chain.state();
    assert_eq!(st.challenges[&spend_d.txid(g)].status, ChallengeStatus::Finalized);
    assert_eq!(st.balance_of(&dest("dave/new")), 990);
    assert_eq!(st.balance_of(&fees[5].address()), dd.value);
}

#[test]
fn lifted_reveal_claim_and_fine() {
    let probe = env();
    let carol = PreKey::standalone(&probe, "carol");
    let sam = PreKey::derived(&probe, "sam", path(3));
    let vic = PreKey::standalone(&probe, "vic");
    let mut w = World::new(vec![
        TxOut::new(1000, carol.address(&probe)),
        TxOut::new(1000, sam.address(&probe)),
        TxOut::new(1000, vic.address(&probe)),
    ]);
    let env = w.env.clone();
    let g = &env.group;
    w.kill_canary();
    w.mine_empty_to(66);

    let uc = w.utxo_at(&carol.address(&env));
    let alpha = 10;
    let reveal = build_tx(
        &env,
        TxKind::LfcSpend,
        vec![(uc.outpoint, Signer::Pre(carol.sk.clone()))],
        vec![TxOut::new(1000 - alpha, PqKey::from_label("carol/new").address())],
        alpha,
        0,
    );
    let msg = LfcMessage {
        tx_hash: reveal.txid(g),
        sig: carol.ownership(&env, &reveal.txid(g), alpha),
        utxo: uc.outpoint,
        alpha,
    };
    fawkes::lfc::check_admission(&env, w.chain.state(), &msg).unwrap();
    w.mine(Candidates {
        lfc_records: vec![msg.record()],
        ..Candidates::default()
    });

    let us = w.utxo_at(&sam.address(&env));
    let junk = sha256(b"never revealed");
    let spam = LfcMessage {
        tx_hash: junk,
        sig: sam.ownership(&env, &junk, 0),
        utxo: us.outpoint,
        alpha: 0,
    };
    w.mine(Candidates {
        lfc_records: vec![spam.record()],
        ..Candidates::default()
    });
    let uv = w.utxo_at(&vic.address(&env));
    let fake = fawkes::ledger::LfcRecord {
        tx_hash: sha256(b"no owner signed this"),
        utxo_hash: OutPoint::hash(&uv.outpoint),
        alpha: 0,
    };
    w.mine(Candidates {
        lfc_records: vec![fake.clone()],
        ..Candidates::default()
    });
    assert_eq!(w.chain.state().lfc_locks.len(), 3);

    w.mine_empty_to(72);
    w.mine(txs(vec![reveal]));
    assert_eq!(
        w.chain.state().balance_of(&PqKey::from_label("carol/new").address()),
        1000 - alpha
    );

    w.mine_empty_to(78);
    let spam_id = commitment_id(68, &spam.record());
    let claim = LfcClaim {
        commitment: spam_id,
        sig: spam.sig.clone(),
    };
    let before = w.chain.state().balance_of(&w.miner.address());
    let built = w.mine(Candidates {
        lfc_claims: vec![claim],
        ..Candidates::default()
    });
    let st = w.chain.state();
    assert_eq!(st.lfc[&spam_id].state, LfcState::ClaimedByMiner);
    let escrow = env.params.lfc.fine.fine(1000, env.params.lfc.fine.reference_minutes);
    assert_eq!(escrow, 34);
    assert_eq!(st.balance_of(&w.miner.address()) - before, 1000 + escrow + 50);
    assert!(built.events.iter().any(|e| matches!(e, Event::LfcClaimed { .. })));

    w.mine_empty_to(84);
    let st = w.chain.state();
    let fake_id = commitment_id(69, &fake);
    assert_eq!(st.lfc[&fake_id].state, LfcState::ExpiredFined);
    assert_eq!(st.balance_of(&vic.address(&env)), 1000 + escrow);
    assert!(st.lfc_locks.is_empty());
    assert!(st.pending_shares.is_empty());
}
