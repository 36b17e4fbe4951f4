mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{config, get};
use fawkes::sim::config::{AgentSpec, ScheduledEvent, SpendMethod};
use fawkes::sim::{run, Report, ScenarioConfig};

#[test]
fn a_honest_fc_spend_finalizes() {
    common::honest_fc(&get("honest-fc").report, &config("honest-fc")).unwrap();
}

#[test]
fn b_front_runner_nets_zero_against_fc_and_wins_against_direct_spend() {
    common::front_running(&get("front-runner").report, &get("direct-spend").report).unwrap();
}

#[test]
fn c_lfc_spammer_loses_its_utxo_to_the_miner() {
    common::lfc_spammer(&get("lfc-spammer").report, &config("lfc-spammer")).unwrap();
}

#[test]
fn d_delay_attacker_pays_the_fine_to_the_victim() {
    common::lfc_delay(&get("lfc-delay").report, &config("lfc-delay")).unwrap();
}

#[test]
fn e_fraud_proof_returns_deposit_minus_fee() {
    common::fraud_proof(&get("fraud-proof").report, &config("fraud-proof")).unwrap();
}

#[test]
fn f_salvage_matrix() {
    common::salvage_matrix().unwrap();
}

#[test]
fn bundled_salvage_scenario_steals_stealable_loot() {
    let r = &get("salvage").report;
    assert!(r.note("thief", "stolen").unwrap().parse::<u64>().unwrap() > 0);
}

#[test]
fn epoch_mechanics_over_30k_blocks() {
    common::epochs(get("epochs")).unwrap();
}

#[test]
fn every_block_balances() {
    common::conservation().unwrap();
}

#[test]
fn reruns_are_byte_identical() {
    common::determinism().unwrap();
}

#[test]
fn bundled_scenarios_finish_quickly() {
    for r in common::runs() {
        assert!(r.elapsed.as_secs() < 30, "{} took {:?}", r.name, r.elapsed);
    }
}

#[test]
fn seed_changes_the_chain() {
    let mut cfg = config("front-runner");
    let (_, a) = run(cfg.clone()).unwrap();
    cfg.seed += 1;
    let (_, b) = run(cfg).unwrap();
    assert_ne!(a.encode().unwrap(), b.encode().unwrap());
}

fn randomized(seed: u64) -> (ScenarioConfig, u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = config("front-runner");
    cfg.seed = seed;
    cfg.blocks = 110;
    let value = rng.gen_range(1_000..10_000);
    let fee = rng.gen_range(5..40);
    let method = if rng.gen_bool(0.3) { SpendMethod::Derived } else { SpendMethod::Hashed };
    let mut agents = vec![
        AgentSpec::Miner {
            name: "m1".into(),
            weight: rng.gen_range(1..4),
            funds: 0,
            claims: true,
        },
        AgentSpec::Miner {
            name: "m2".into(),
            weight: rng.gen_range(1..4),
            funds: 0,
            claims: true,
        },
        AgentSpec::CanaryHunter {
            name: "hunter".into(),
            at: rng.gen_range(1..6),
            quantum: true,
        },
        AgentSpec::FcUser {
            name: "alice".into(),
            value,
            method,
            start: rng.gen_range(0..25),
            fee,
            leaked: false,
            lost: false,
        },
    ];
    for i in 0..rng.gen_range(1..4) {
        agents.push(AgentSpec::FrontRunner {
            name: format!("eve{i}"),
            bump: rng.gen_range(1..200),
            reckless: rng.gen_bool(0.5),
            funds: 10_000,
        });
    }
    cfg.agents = agents;
    (cfg, value, fee)
}

/// Returns how many spends the front-runners looked at.
fn honest_spend_survived(r: &Report, value: u64, fee: u64, ctx: &str) -> u64 {
    let mut seen = 0;
    assert_eq!(r.note("alice", "stage"), Some("done"), "{ctx}");
    assert_eq!(r.note("alice", "received"), Some((value - fee).to_string().as_str()), "{ctx}");
    for a in r.agents.iter().filter(|a| a.kind == "front-runner") {
        assert_eq!(a.note("stolen"), Some("0"), "{ctx}: {}", a.name);
        assert!(a.net() <= 0, "{ctx}: {} nets {}", a.name, a.net());
        seen += a.note("attempts").and_then(|v| v.parse::<u64>().ok()).unwrap_or(0);
    }
    assert!(r.conserved(), "{ctx}");
    seen
}

#[test]
fn front_running_fuzz_200_seeds() {
    let mut seen = 0;
    for seed in 0..200 {
        let (cfg, value, fee) = randomized(seed);
        let (r, _) = run(cfg).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        seen += honest_spend_survived(&r, value, fee, &format!("seed {seed}"));
    }
    assert!(seen >= 200, "front-runners only looked at {seen} spends");
}

#[test]
fn reorg_safety_100_seeds() {
    let mut reorged = 0;
    for seed in 0..100 {
        let (mut cfg, value, fee) = randomized(1_000 + seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let wait = cfg.chain.params.fc.wait_blocks;
        let max = cfg.chain.params.consensus.reorg_max_depth.min(wait - 1);
        let mut at = rng.gen_range(8..20);
        for _ in 0..rng.gen_range(1..4) {
            cfg.events.push(ScheduledEvent::Reorg {
                height: at,
                depth: rng.gen_range(1..=max),
            });
            at += rng.gen_range(10..30);
        }
        let (r, _) = run(cfg).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        reorged += r.reorgs.len();
        honest_spend_survived(&r, value, fee, &format!("reorg seed {seed}"));
    }
    assert!(reorged >= 100, "only {reorged} reorgs happened");
}

#[test]
fn depth_three_reorg_keeps_the_honest_spend() {
    let mut cfg = config("honest-fc");
    cfg.events.push(ScheduledEvent::Reorg { height: 25, depth: 3 });
    let (r, snap) = run(cfg.clone()).unwrap();
    assert_eq!(r.reorgs.len(), 1);
    assert_eq!(r.reorgs[0].height, 25);
    assert_eq!(r.reorgs[0].fork, 21);
    common::honest_fc(&r, &cfg).unwrap();
    assert!(r.conserved());
    let (_, again) = run(cfg).unwrap();
    assert_eq!(snap.encode().unwrap(), again.encode().unwrap());
}

#[test]
fn too_deep_reorg_is_refused() {
    let mut cfg = config("honest-fc");
    let depth = cfg.chain.params.consensus.reorg_max_depth + 1;
    cfg.events.push(ScheduledEvent::Reorg { height: 30, depth });
    let err = run(cfg).unwrap_err();
    assert!(err.rule().is_some() || err.to_string().contains("reorg"), "{err}");
}
