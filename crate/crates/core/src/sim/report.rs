//! Plain-text run reports.

use std::fmt;

use crate::consensus::epoch::{EpochKind, EpochSpan};
use crate::hash::{to_hex, Digest32};
use crate::ledger::state::Supply;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentReport {
    pub name: String,
    pub kind: &'static str,
    pub initial: u64,
    pub final_balance: u64,
    /// Block rewards, fees and committer shares earned by producing blocks.
    pub mining_income: u64,
    pub notes: Vec<(String, String)>,
}

impl AgentReport {
    pub fn net(&self) -> i128 {
        self.final_balance as i128 - self.initial as i128
    }

    pub fn net_excl_mining(&self) -> i128 {
        self.net() - self.mining_income as i128
    }

    pub fn note(&self, key: &str) -> Option<&str> {
        self.notes.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// A mempool item a block builder refused, logged once per rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub height: u64,
    pub label: String,
    pub rule: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reorg {
    pub height: u64,
    pub fork: u64,
    pub abandoned: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub height: u64,
    pub tip_hash: Digest32,
    pub agents: Vec<AgentReport>,
    pub events: Vec<(u64, String)>,
    pub rejections: Vec<Rejection>,
    pub reorgs: Vec<Reorg>,
    pub supply: Supply,
    pub epochs: Vec<EpochSpan>,
    pub killed_at: Option<u64>,
    pub mempool_left: usize,
}

impl Report {
    pub fn agent(&self, name: &str) -> Option<&AgentReport> {
        self.agents.iter().find(|a| a.name == name)
    }

    pub fn note(&self, agent: &str, key: &str) -> Option<&str> {
        self.agent(agent)?.note(key)
    }

    pub fn conserved(&self) -> bool {
        self.supply.balanced()
    }

    pub fn rejected(&self, rule: &str) -> usize {
        self.rejections.iter().filter(|r| r.rule == rule).count()
    }

    pub fn extensions(&self) -> usize {
        self.epochs.iter().filter(|e| e.extension).count()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario {}", self.scenario)?;
        writeln!(f, "seed {}", self.seed)?;
        writeln!(f, "height {}", self.height)?;
        writeln!(f, "tip {}", to_hex(&self.tip_hash))?;
        match self.killed_at {
            Some(k) => writeln!(f, "canary killed_at={k}")?,
            None => writeln!(f, "canary alive")?,
        }
        let s = &self.supply;
        writeln!(
            f,
            "supply minted={} burned={} utxo={} challenge_held={} escrow_held={} shares_held={} balanced={}",
            s.minted,
            s.burned,
            s.utxo_value,
            s.challenge_held,
            s.escrow_held,
            s.shares_held,
            s.balanced()
        )?;
        writeln!(f, "mempool_left {}", self.mempool_left)?;
        writeln!(f)?;
        writeln!(f, "[agents]")?;
        for a in &self.agents {
            write!(
                f,
                "{} kind={} initial={} final={} mining={} net={} net_excl_mining={}",
                a.name,
                a.kind,
                a.initial,
                a.final_balance,
                a.mining_income,
                a.net(),
                a.net_excl_mining()
            )?;
            for (k, v) in &a.notes {
                write!(f, " {k}={v}")?;
            }
            writeln!(f)?;
        }
        writeln!(f)?;
        writeln!(f, "[epochs]")?;
        for e in &self.epochs {
            let kind = match e.kind {
                EpochKind::Fc => "fc",
                EpochKind::Lfc => "lfc",
            };
            let ext = if e.extension { " extension" } else { "" };
            writeln!(f, "{kind} start={} len={}{ext}", e.start, e.len)?;
        }
        writeln!(f)?;
        writeln!(f, "[reorgs]")?;
        for r in &self.reorgs {
            writeln!(f, "at={} fork={} abandoned={}", r.height, r.fork, r.abandoned)?;
        }
        writeln!(f)?;
        writeln!(f, "[rejections]")?;
        for r in &self.rejections {
            writeln!(f, "{} {} {}", r.height, r.rule, r.label)?;
        }
        writeln!(f)?;
        writeln!(f, "[events]")?;
        for (h, e) in &self.events {
            writeln!(f, "{h} {e}")?;
        }
        Ok(())
    }
}
