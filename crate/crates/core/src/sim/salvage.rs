//! Salvage matrix: which party can move a leaked UTXO under each mode.

use crate::consensus::ChainConfig;
use crate::ledger::{SalvageOutcome, SalvageStatus, UtxoClass};
use crate::params::FcMode;

use super::config::{AgentSpec, Latency, ReportOptions, EventDetail, ScenarioConfig, SpendMethod};
use super::runner::{run, SimError};

pub const MODES: [FcMode; 3] = [FcMode::Restrictive, FcMode::Unrestrictive, FcMode::Permissive];
pub const CLASSES: [UtxoClass; 3] = [UtxoClass::Naked, UtxoClass::Lost, UtxoClass::Stealable];

const VALUE: u64 = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attempt {
    Owner,
    Classical,
    Quantum,
}

/// Chain parameters short enough for a 40-block run.
pub fn chain(mode: FcMode) -> ChainConfig {
    let mut c = ChainConfig::default();
    let p = &mut c.params;
    p.kdf_iterations = 1;
    p.ledger.coinbase_maturity = 5;
    p.era.countdown_blocks = 3;
    p.fc.mode = mode;
    p.fc.wait_blocks = 3;
    p.fc.challenge_blocks = 8;
    p.epochs.fc_len = 50;
    p.epochs.lfc_len = 20;
    p.epochs.fc_commit_cutoff = 10;
    p.epochs.lfc_commit_cutoff = 10;
    c
}

/// One attempt on a UTXO of `class`, as a scenario.
pub fn scenario(mode: FcMode, class: UtxoClass, who: Attempt) -> ScenarioConfig {
    let mut agents = vec![
        AgentSpec::Miner {
            name: "miner".into(),
            weight: 1,
            funds: 0,
            claims: true,
        },
        AgentSpec::CanaryHunter {
            name: "hunter".into(),
            at: 1,
            quantum: true,
        },
    ];
    match who {
        Attempt::Owner => {
            let lost = class == UtxoClass::Lost;
            agents.push(AgentSpec::FcUser {
                name: "owner".into(),
                value: VALUE,
                method: if lost { SpendMethod::Lost } else { SpendMethod::Naked },
                start: 0,
                fee: 10,
                leaked: true,
                lost,
            });
        }
        Attempt::Classical | Attempt::Quantum => {
            agents.push(AgentSpec::Holder {
                name: "owner".into(),
                value: VALUE,
                derived: false,
                leaked: true,
            });
            agents.push(AgentSpec::LootThief {
                name: "thief".into(),
                target: "owner".into(),
                start: 0,
                quantum: who == Attempt::Quantum,
                fee: 10,
                funds: 10_000,
            });
        }
    }
    ScenarioConfig {
        name: format!("salvage-{mode:?}-{class}-{who:?}").to_lowercase(),
        seed: 0,
        blocks: 40,
        chain: chain(mode),
        latency: Latency::default(),
        report: ReportOptions {
            events: EventDetail::Notable,
        },
        agents,
        events: Vec::new(),
    }
}

/// Whether the attempt moved the value to the attempter.
pub fn attempt(mode: FcMode, class: UtxoClass, who: Attempt) -> Result<bool, SimError> {
    let (report, _) = run(scenario(mode, class, who))?;
    let received = match who {
        Attempt::Owner => report.note("owner", "received"),
        _ => report.note("thief", "stolen"),
    };
    Ok(received.and_then(|v| v.parse::<u64>().ok()).unwrap_or(0) > 0)
}

pub fn outcome(mode: FcMode, class: UtxoClass) -> Result<SalvageOutcome, SimError> {
    Ok(SalvageOutcome {
        owner_succeeds: attempt(mode, class, Attempt::Owner)?,
        classical_theft_succeeds: attempt(mode, class, Attempt::Classical)?,
        quantum_theft_succeeds: attempt(mode, class, Attempt::Quantum)?,
        adversary_certain: class == UtxoClass::Stealable,
    })
}

/// `(mode, class, status)` for every cell, rows by mode.
pub fn matrix() -> Result<Vec<(FcMode, UtxoClass, SalvageStatus)>, SimError> {
    let mut out = Vec::new();
    for mode in MODES {
        for class in CLASSES {
            out.push((mode, class, outcome(mode, class)?.status()));
        }
    }
    Ok(out)
}

/// The expected table.
pub fn expected(mode: FcMode, class: UtxoClass) -> SalvageStatus {
    use SalvageStatus::*;
    match (mode, class) {
        (FcMode::Restrictive, _) => Burnt,
        (FcMode::Unrestrictive, UtxoClass::Naked) => Spendable,
        (FcMode::Unrestrictive, UtxoClass::Lost) => Unspendable,
        (FcMode::Unrestrictive, _) => QuantumLoot,
        (FcMode::Permissive, UtxoClass::Stealable) => Loot,
        (FcMode::Permissive, _) => Spendable,
    }
}
