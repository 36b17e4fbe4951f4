//! Checks shared by the acceptance runner and the test suites.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use fawkes::canary::{self, sweep_bounty, sweep_w, trajectory, GameSpec};
use fawkes::consensus::epoch::{EpochKind, EpochSpan};
use fawkes::consensus::{apply_block, genesis_state, Chain, ChainEnv, Event};
use fawkes::group::Group;
use fawkes::hd::{derive, derive_public, Kdf, Seed};
use fawkes::lifted::game::{euf_lcma_game, random_path, DlogAdversary, GameMode, LiftingKind};
use fawkes::lifted::{address_of, KeyLifting, LiftedSignature, SeedLifting};
use fawkes::params::{FcMode, FinePolicy};
use fawkes::sim::config::AgentSpec;
use fawkes::sim::{salvage, scenarios, Report, ScenarioConfig, Sim, Snapshot};

pub type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

pub const GOLDEN_TABLE: &str = include_str!("../golden/canary_table.txt");

pub fn config(name: &str) -> ScenarioConfig {
    ScenarioConfig::from_toml(scenarios::bundled(name).expect("bundled scenario")).expect("bundled config parses")
}

/// One finished run of a bundled scenario.
pub struct Run {
    pub name: &'static str,
    pub report: Report,
    pub snapshot: Vec<u8>,
    pub chain: Chain,
    pub elapsed: Duration,
}

pub fn run_one(name: &'static str) -> Run {
    let t = Instant::now();
    let mut sim = Sim::new(config(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    sim.run().unwrap_or_else(|e| panic!("{name}: {e}"));
    let report = sim.report();
    let snapshot = sim.snapshot().encode().expect("snapshot encodes");
    Run {
        name,
        report,
        snapshot,
        chain: sim.chain().clone(),
        elapsed: t.elapsed(),
    }
}

/// Every bundled scenario, run once per process.
pub fn runs() -> &'static [Run] {
    static RUNS: OnceLock<Vec<Run>> = OnceLock::new();
    RUNS.get_or_init(|| scenarios::BUNDLED.iter().map(|(n, _)| run_one(n)).collect())
}

pub fn get(name: &str) -> &'static Run {
    runs().iter().find(|r| r.name == name).expect("bundled scenario")
}

fn num(r: &Report, agent: &str, key: &str) -> Result<i128, String> {
    r.note(agent, key)
        .ok_or_else(|| format!("{agent} has no {key} note"))?
        .parse()
        .map_err(|_| format!("{agent}.{key} is not a number"))
}

fn net(r: &Report, agent: &str) -> Result<(i128, i128), String> {
    let a = r.agent(agent).ok_or_else(|| format!("no agent {agent}"))?;
    Ok((a.net(), a.net_excl_mining()))
}

fn spec<'a>(cfg: &'a ScenarioConfig, name: &str) -> &'a AgentSpec {
    cfg.agents.iter().find(|a| a.name() == name).expect("agent in config")
}

// 1 ---------------------------------------------------------------------

pub fn canary_table() -> Check {
    let t = Instant::now();
    let table = canary::table();
    let elapsed = t.elapsed();
    ensure!(table == GOLDEN_TABLE, "table differs from golden file:\n{table}");
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("7 timelines byte-identical in {elapsed:?}"))
}

// 2 ---------------------------------------------------------------------

fn g(t_b_f: i64, t_l_f: i64, t_b_s: i64, t_l_s: i64, w: i64) -> GameSpec {
    GameSpec::from_times(t_b_f, t_l_f, t_b_s, t_l_s, w).expect("valid game")
}

/// `(label, game, expected)` for shrinking `w` down to 1.
pub fn w_sweeps() -> Vec<(&'static str, GameSpec, &'static str)> {
    vec![
        ("TL3->TL4", g(0, 10, 2, 12, 6), "TL3 -> TL4"),
        ("TL5->TL3", g(0, 15, 6, 17, 10), "TL5 -> TL3 -> TL4"),
        ("TL5->TL6", g(0, 12, 10, 22, 11), "TL5 -> TL6 -> TL4"),
        ("TL6->TL4", g(0, 8, 4, 15, 6), "TL6 -> TL4"),
        ("TL2->TL1", g(0, 11, 1, 9, 6), "TL2 -> TL1"),
        ("TL7 stays", g(0, 40, 50, 90, 30), "TL7"),
    ]
}

/// `(label, game, bounties, expected)`; the game's bounty is 1.
pub fn bounty_sweeps() -> Vec<(&'static str, GameSpec, u64, &'static str)> {
    vec![
        ("TL7->TL6->TL4", g(0, 40, 50, 90, 30), 10, "TL7 -> TL6 -> TL4"),
        ("TL5->TL3", g(0, 40, 20, 60, 30), 10, "TL5 -> TL3"),
    ]
}

pub fn sweeps() -> Check {
    let mut seen = Vec::new();
    for (label, game, expected) in w_sweeps() {
        let got = trajectory(&sweep_w(&game, (1..=game.w).rev()));
        ensure!(got == expected, "{label}: w sweep gave {got}, wanted {expected}");
        seen.push(label);
    }
    for (label, game, top, expected) in bounty_sweeps() {
        let got = trajectory(&sweep_bounty(&game, 1..=top));
        ensure!(got == expected, "{label}: bounty sweep gave {got}, wanted {expected}");
        seen.push(label);
    }
    Ok(seen.join(", "))
}

// 3 ---------------------------------------------------------------------

pub fn delay_fine() -> Check {
    let f = FinePolicy::default();
    ensure!(f.reference_minutes == 25_000 && f.annual_rate_percent == 100, "unexpected default policy");
    let pct = f.fraction() * 100.0;
    ensure!((pct - 3.35).abs() <= 0.05, "fraction {pct:.4}%");
    let fine = f.fine(100_000, 0);
    ensure!(fine == 3_350, "fine on 100000 is {fine}");
    Ok(format!("fraction {pct:.4}%, fine(100000) = {fine}"))
}

// 4 ---------------------------------------------------------------------

pub fn derivation(cases: usize, seed: u64) -> Check {
    let group = Group::toy_bits(20).expect("toy group");
    let kdf = Kdf::new(1);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut public_checked = 0;
    for i in 0..cases {
        let msk = kdf.kdf(&group, &Seed::random(&mut rng));
        let path = random_path(&mut rng, 4);
        let n = rng.gen_range(0..=path.len());
        let (p1, p2) = path.split_at(n);
        let whole = derive(&group, &msk, &path);
        let folded = path
            .steps()
            .iter()
            .fold(msk.clone(), |k, s| fawkes::hd::child(&group, &k, *s));
        ensure!(whole == folded, "case {i}: derive is not the child fold on {path}");
        ensure!(
            derive(&group, &derive(&group, &msk, &p1), &p2) == whole,
            "case {i}: split {p1} | {p2} disagrees"
        );
        let public = derive_public(&group, &msk.to_xpk(&group), &path);
        if path.all_non_hardened() {
            ensure!(
                public.as_ref().ok() == Some(&whole.to_xpk(&group)),
                "case {i}: public derivation differs on {path}"
            );
            public_checked += 1;
        } else {
            ensure!(public.is_err(), "case {i}: hardened public derivation accepted on {path}");
        }
    }
    Ok(format!("{cases} cases, {public_checked} public-side"))
}

// 5 ---------------------------------------------------------------------

struct Lifter {
    group: Group,
    kl: KeyLifting,
    sl: SeedLifting,
    kdf: Kdf,
}

impl Lifter {
    fn new() -> Self {
        let group = Group::toy_bits(20).expect("toy group");
        let kdf = Kdf::new(1);
        Self {
            kl: KeyLifting::transparent(group.clone()),
            sl: SeedLifting::transparent(group.clone(), kdf),
            group,
            kdf,
        }
    }

    /// A fresh signature with what a verifier needs: address and public key.
    fn sample(&self, rng: &mut ChaCha20Rng, seeded: bool, msg: &[u8]) -> (LiftedSignature, [u8; 32], fawkes::group::Point) {
        if seeded {
            let seed = Seed::random(rng);
            let path = random_path(rng, 4);
            let sk = derive(&self.group, &self.kdf.kdf(&self.group, &seed), &path).sk;
            let pk = self.group.pk_ec(&sk);
            let sig = self.sl.sign(&seed, &path, msg);
            (LiftedSignature::Seed(sig), address_of(&self.group, &pk), pk)
        } else {
            let sk = self.group.random_scalar(rng);
            let pk = self.group.pk_ec(&sk);
            (LiftedSignature::Key(self.kl.sign(&sk, msg)), address_of(&self.group, &pk), pk)
        }
    }

    fn verify(&self, sig: &LiftedSignature, address: &[u8; 32], pk: &fawkes::group::Point, msg: &[u8]) -> bool {
        match sig {
            LiftedSignature::Key(s) => self.kl.verify(address, msg, s),
            LiftedSignature::Seed(s) => self.sl.verify(pk, msg, s),
        }
    }
}

pub fn lifting(cases: usize, mutations: usize, seed: u64) -> Check {
    let l = Lifter::new();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for i in 0..cases {
        let msg: [u8; 16] = rng.gen();
        let seeded = i % 2 == 1;
        let (sig, addr, pk) = l.sample(&mut rng, seeded, &msg);
        ensure!(l.verify(&sig, &addr, &pk, &msg), "case {i}: honest signature rejected");
        let bytes = sig.encode(&l.group);
        let back = LiftedSignature::decode(&l.group, &bytes).map_err(|e| format!("case {i}: {e}"))?;
        ensure!(back == sig, "case {i}: encoding round trip");
        ensure!(!l.verify(&sig, &addr, &pk, b"another message"), "case {i}: verifies on another message");
    }
    let mut decoded = 0;
    for i in 0..mutations {
        let msg: [u8; 16] = rng.gen();
        let (sig, addr, pk) = l.sample(&mut rng, i % 2 == 1, &msg);
        let mut bytes = sig.encode(&l.group);
        let at = rng.gen_range(0..bytes.len());
        bytes[at] ^= rng.gen_range(1..=255u8);
        if let Ok(m) = LiftedSignature::decode(&l.group, &bytes) {
            decoded += 1;
            ensure!(m == sig || !l.verify(&m, &addr, &pk, &msg), "mutation {i} at byte {at} accepted");
        }
        let mut m2 = msg;
        m2[rng.gen_range(0..16)] ^= 1;
        ensure!(!l.verify(&sig, &addr, &pk, &m2), "message mutation {i} accepted");
    }
    Ok(format!("{cases} round trips, {mutations} mutations ({decoded} decodable), 0 false accepts"))
}

// 6 ---------------------------------------------------------------------

pub fn euf_lcma(trials: usize) -> Check {
    let group = Group::toy_bits(16).expect("toy group");
    let mut adv = DlogAdversary::default();
    let key = euf_lcma_game(&group, LiftingKind::Key, GameMode::Lcma, Kdf::new(1), &mut adv, trials, 11);
    ensure!(key.wins == trials, "key lifting: {} of {trials} wins", key.wins);
    let seed = euf_lcma_game(&group, LiftingKind::Seed, GameMode::Cma, Kdf::new(1), &mut adv, trials, 12);
    ensure!(seed.wins == 0, "seed lifting lost {} games: {:?}", seed.wins, seed.reasons);
    let seed_lcma = euf_lcma_game(&group, LiftingKind::Seed, GameMode::Lcma, Kdf::new(1), &mut adv, trials, 13);
    ensure!(seed_lcma.wins == 0, "seed lifting with base oracle lost {} games", seed_lcma.wins);
    Ok(format!(
        "key lifting broken {}/{trials}; seed lifting held {}/{trials} ({})",
        key.wins,
        seed.losses,
        seed.reasons.join("; ")
    ))
}

// 7 ---------------------------------------------------------------------

pub fn honest_fc(r: &Report, cfg: &ScenarioConfig) -> Check {
    for who in ["alice", "carol"] {
        let AgentSpec::FcUser { value, fee, .. } = spec(cfg, who) else {
            return Err(format!("{who} is not an fc-user"));
        };
        ensure!(r.note(who, "stage") == Some("done"), "{who} stage {:?}", r.note(who, "stage"));
        let got = num(r, who, "received")?;
        ensure!(got == (*value - *fee) as i128, "{who} received {got}");
    }
    Ok("alice and carol finalized".into())
}

pub fn front_running(fc: &Report, direct: &Report) -> Check {
    let (eve, _) = net(fc, "eve")?;
    ensure!(eve == 0, "front-runner nets {eve} against FC");
    ensure!(num(fc, "eve", "declined")? >= 1, "front-runner never considered the spend");
    let (mallory, _) = net(fc, "mallory")?;
    ensure!(mallory <= 0 && num(fc, "mallory", "stolen")? == 0, "reckless front-runner nets {mallory}");
    ensure!(fc.note("alice", "stage") == Some("done"), "victim spend did not finalize");
    let (thief, _) = net(direct, "eve")?;
    let stolen = num(direct, "eve", "stolen")?;
    ensure!(thief > 0 && stolen > 0, "front-runner nets {thief} against a direct spend");
    let (victim, _) = net(direct, "dave")?;
    ensure!(victim < 0, "direct spender nets {victim}");
    Ok(format!("FC: {eve}, reckless: {mallory}; direct: +{thief}"))
}

pub fn lfc_spammer(r: &Report, cfg: &ScenarioConfig) -> Check {
    let AgentSpec::LfcSpammer { value, .. } = spec(cfg, "spam") else {
        return Err("spam is not a spammer".into());
    };
    let (_, spam) = net(r, "spam")?;
    ensure!(spam == -(*value as i128), "spammer nets {spam}, u = {value}");
    let claims = num(r, "spam", "claimed_by_miner")?;
    ensure!(r.note("spam", "sent") == Some("true") && claims == 1, "{claims} spam commitments claimed");
    let (_, miner) = net(r, "m1")?;
    ensure!(miner >= *value as i128, "miner nets {miner} outside mining");
    ensure!(r.note("lucy", "stage") == Some("done"), "honest lifted spend did not finish");
    Ok(format!("spammer {spam}, miner +{miner}"))
}

pub fn lfc_delay(r: &Report, cfg: &ScenarioConfig) -> Check {
    let AgentSpec::Holder { value, .. } = spec(cfg, "vic") else {
        return Err("vic is not a holder".into());
    };
    let fine = cfg.chain.params.lfc.fine.fine(*value, 0) as i128;
    let fakes = num(r, "dan", "fake_commitments")?;
    ensure!(fakes >= 1, "no fake commitment was posted");
    let (_, dan) = net(r, "dan")?;
    ensure!(dan == -fine * fakes, "attacker nets {dan}, fine {fine} x {fakes}");
    let (vic, _) = net(r, "vic")?;
    ensure!(vic == fine * fakes, "victim nets {vic}");
    ensure!(num(r, "vic", "locked")? == 0, "victim still locked");
    Ok(format!("fine {fine} x {fakes} paid to victim"))
}

pub fn fraud_proof(r: &Report, cfg: &ScenarioConfig) -> Check {
    let AgentSpec::LootThief { fee, .. } = spec(cfg, "thief") else {
        return Err("thief is not a loot thief".into());
    };
    let AgentSpec::DepositBaiter { value, .. } = spec(cfg, "bob") else {
        return Err("bob is not a deposit baiter".into());
    };
    let deposit = cfg.chain.params.fc.min_deposit(*value, *fee) as i128;
    ensure!(num(r, "bob", "defeated")? == 1, "challenge not defeated");
    let payout = num(r, "bob", "deposit_payout")?;
    let miner_fee = num(r, "bob", "deposit_miner_fee")?;
    ensure!(miner_fee == *fee as i128, "miner fee {miner_fee}");
    ensure!(payout == deposit - miner_fee, "payout {payout}, deposit {deposit}");
    ensure!(num(r, "thief", "stolen")? == 0, "thief kept loot");
    ensure!(r.conserved(), "supply unbalanced");
    let total: i128 = r.agents.iter().map(|a| a.net()).sum();
    let minted = (r.supply.minted - r.supply.burned) as i128;
    let initial: i128 = r.agents.iter().map(|a| a.initial as i128).sum();
    ensure!(
        total + initial + r.supply.held() as i128 == minted,
        "agents hold {} of {minted} minus {} held",
        total + initial,
        r.supply.held()
    );
    Ok(format!("deposit {deposit} returned as {payout} + {miner_fee} fee"))
}

pub fn salvage_matrix() -> Check {
    let got = salvage::matrix().map_err(|e| e.to_string())?;
    for (mode, class, status) in &got {
        let want = salvage::expected(*mode, *class);
        ensure!(*status == want, "{mode:?}/{class}: {status:?}, wanted {want:?}");
    }
    ensure!(got.len() == 9, "{} cells", got.len());
    let modes: Vec<FcMode> = got.iter().map(|c| c.0).collect();
    ensure!(modes.iter().filter(|m| **m == FcMode::Permissive).count() == 3, "rows");
    Ok("9 cells match".into())
}

pub fn scenario_suite() -> Check {
    let limit = Duration::from_secs(5);
    let mut out = Vec::new();
    let cases: [(&str, &[&str]); 5] = [
        ("a", &["honest-fc"]),
        ("b", &["front-runner", "direct-spend"]),
        ("c", &["lfc-spammer"]),
        ("d", &["lfc-delay"]),
        ("e", &["fraud-proof"]),
    ];
    for (tag, names) in cases {
        for n in names {
            let r = get(n);
            ensure!(r.elapsed < limit, "{n} took {:?}", r.elapsed);
            let again = run_one(r.name);
            ensure!(again.snapshot == r.snapshot, "{n} is not deterministic");
        }
        let res = match tag {
            "a" => honest_fc(&get("honest-fc").report, &config("honest-fc")),
            "b" => front_running(&get("front-runner").report, &get("direct-spend").report),
            "c" => lfc_spammer(&get("lfc-spammer").report, &config("lfc-spammer")),
            "d" => lfc_delay(&get("lfc-delay").report, &config("lfc-delay")),
            _ => fraud_proof(&get("fraud-proof").report, &config("fraud-proof")),
        };
        out.push(format!("({tag}) {}", res.map_err(|e| format!("({tag}) {e}"))?));
    }
    let t = Instant::now();
    let first = salvage::matrix().map_err(|e| e.to_string())?;
    ensure!(salvage::matrix().map_err(|e| e.to_string())? == first, "salvage matrix is not deterministic");
    out.push(format!("(f) {}", salvage_matrix().map_err(|e| format!("(f) {e}"))?));
    ensure!(t.elapsed() < limit * 3, "salvage matrix took {:?}", t.elapsed());
    Ok(out.join("; "))
}

// 8 ---------------------------------------------------------------------

fn span_at(spans: &[EpochSpan], h: u64) -> Option<&EpochSpan> {
    spans.iter().find(|s| s.contains(h))
}

pub fn epochs(run: &Run) -> Check {
    let r = &run.report;
    let p = &run.chain.env().params;
    ensure!(r.height >= 30_000, "ran {} blocks", r.height);
    let kill = r.killed_at.ok_or("canary never killed")?;
    let spans = &r.epochs;
    let first = spans.first().ok_or("no epochs")?;
    ensure!(first.start == kill + 8_000, "era starts at {}, kill at {kill}", first.start);
    ensure!(p.era.countdown_blocks == 8_000, "countdown {}", p.era.countdown_blocks);
    for w in spans.windows(2) {
        ensure!(w[1].start == w[0].start + w[0].len, "gap after epoch at {}", w[0].start);
        let want = match w[0].kind {
            EpochKind::Fc => 1_900,
            EpochKind::Lfc => 500,
        };
        ensure!(w[0].len == want, "{:?} epoch at {} has length {}", w[0].kind, w[0].start, w[0].len);
    }
    let (mut fc_commits, mut lfc_commits) = (0, 0);
    for b in run.chain.blocks() {
        let h = b.height;
        let n_fc = b
            .transactions
            .iter()
            .filter(|t| matches!(t.kind, fawkes::ledger::TxKind::FcCommit { .. }))
            .count();
        if h >= first.start && n_fc > 0 {
            let s = span_at(spans, h).ok_or(format!("no epoch at {h}"))?;
            ensure!(s.kind == EpochKind::Fc, "FC commitment at {h} in a lifted epoch");
            ensure!(h - s.start < s.len - 100, "FC commitment at {h}, epoch ends {}", s.last());
            fc_commits += n_fc;
        }
        if !b.lfc_records.is_empty() {
            let s = span_at(spans, h).ok_or(format!("no epoch at {h}"))?;
            ensure!(s.kind == EpochKind::Lfc, "lifted commitment at {h} in an FC epoch");
            ensure!(h - s.start < s.len - 300, "lifted commitment at {h}, epoch ends {}", s.last());
            lfc_commits += b.lfc_records.len();
        }
    }
    ensure!(fc_commits > 0 && lfc_commits > 0, "no commitments to check");
    let ext: Vec<&EpochSpan> = spans.iter().filter(|s| s.extension).collect();
    ensure!(ext.len() == 1, "{} extensions", ext.len());
    let ext = ext[0];
    let committed: BTreeMap<_, u64> = run
        .chain
        .events()
        .iter()
        .filter_map(|(h, e)| match e {
            Event::LfcCommitted { id, .. } => Some((*id, *h)),
            _ => None,
        })
        .collect();
    let mut withheld = 0;
    for (h, e) in run.chain.events() {
        if let Event::LfcFined { id, .. } = e {
            ensure!(!(ext.start..ext.last()).contains(h), "fine at {h} inside the extension");
            if *h >= ext.last() && committed.get(id).is_some_and(|c| *c < ext.start) {
                withheld += 1;
            }
        }
        if let Event::EpochExtended { at, claims } = e {
            ensure!(*at + 1 == ext.start, "extension decided at {at}");
            ensure!(
                p.lfc.extension_p.exceeded_by(*claims, p.lfc.proof_capacity),
                "{claims} claims do not exceed k/2"
            );
        }
    }
    ensure!(withheld > 0, "no fine was withheld across the extension");
    Ok(format!(
        "{} epochs, era at kill {kill} + 8000, {fc_commits} FC / {lfc_commits} lifted commitments in window, extension at {}, {withheld} fine(s) withheld",
        spans.len(),
        ext.start
    ))
}

// 9 ---------------------------------------------------------------------

/// Replays every block, checking the balance equation and the UTXO sum.
pub fn replay_conservation(run: &Run) -> Check {
    let (snap, _) = Snapshot::verify(&run.snapshot).map_err(|e| format!("{}: {e}", run.name))?;
    let env = ChainEnv::new(snap.config.chain.clone()).map_err(|e| e.to_string())?;
    let mut st = None;
    for b in &snap.blocks {
        let next = match &st {
            None => genesis_state(&env, b),
            Some(prev) => apply_block(&env, prev, b).map(|(s, _)| s),
        }
        .map_err(|v| format!("{} block {}: {v}", run.name, b.height))?;
        let utxo: u128 = next.utxos.values().map(|u| u.value as u128).sum();
        ensure!(utxo == next.supply.utxo_value, "{} block {}: utxo sum {utxo}", run.name, b.height);
        let (l, r) = next.supply.balance();
        ensure!(l == r, "{} block {}: {l} != {r}", run.name, b.height);
        st = Some(next);
    }
    ensure!(run.report.conserved(), "{}: report unbalanced", run.name);
    Ok(format!("{} blocks", snap.blocks.len()))
}

pub fn conservation() -> Check {
    let mut blocks = 0;
    for r in runs() {
        let (snap, v) = Snapshot::verify(&r.snapshot).map_err(|e| e.to_string())?;
        drop(snap);
        replay_conservation(r)?;
        blocks += v.blocks;
    }
    Ok(format!("{} scenarios, {blocks} blocks balanced", runs().len()))
}

// 10 --------------------------------------------------------------------

pub fn determinism() -> Check {
    for r in runs() {
        let again = run_one(r.name);
        ensure!(again.snapshot == r.snapshot, "{}: snapshots differ", r.name);
        ensure!(again.report.to_string() == r.report.to_string(), "{}: reports differ", r.name);
    }
    Ok(format!("{} scenarios byte-identical", runs().len()))
}
