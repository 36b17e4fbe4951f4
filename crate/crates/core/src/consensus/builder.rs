//! Greedy block assembly.
//!
//! Candidates are tried one at a time on a cloned [`BlockCtx`]; anything that
//! violates a rule is left out and reported. Lifted records that the coinbase
//! cannot cover are funded through a caller-supplied escrow transaction or
//! dropped.

use crate::group::Point;
use crate::ledger::{Address, Block, CanaryKill, ChainState, LfcClaim, LfcRecord, RegistryMessage, Transaction};

use super::ctx::{BlockCtx, RuleResult};
use super::{apply_block, ChainEnv, Event, RuleViolation};

/// What a miner wants in the next block.
#[derive(Debug, Clone, Default)]
pub struct Candidates {
    pub canary_kill: Option<CanaryKill>,
    pub samaritan_reports: Vec<Point>,
    pub registry: Vec<RegistryMessage>,
    /// In arrival order; the builder sorts by fee.
    pub transactions: Vec<Transaction>,
    pub lfc_records: Vec<LfcRecord>,
    pub lfc_claims: Vec<LfcClaim>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Item {
    CanaryKill,
    Samaritan(usize),
    Registry(usize),
    Transaction(usize),
    LfcRecord(usize),
    LfcClaim(usize),
    EscrowFunding,
}

#[derive(Debug, Clone)]
pub struct Built {
    pub block: Block,
    pub state: ChainState,
    pub events: Vec<Event>,
    pub rejected: Vec<(Item, RuleViolation)>,
}

fn attempt<'e>(
    ctx: &mut BlockCtx<'e>,
    rejected: &mut Vec<(Item, RuleViolation)>,
    item: Item,
    f: impl FnOnce(&mut BlockCtx<'e>) -> RuleResult,
) -> bool {
    let mut trial = ctx.clone();
    match f(&mut trial) {
        Ok(()) => {
            *ctx = trial;
            true
        }
        Err(v) => {
            rejected.push((item, v));
            false
        }
    }
}

struct Pass {
    block: Block,
    shortfall: u64,
    included_records: Vec<usize>,
    rejected: Vec<(Item, RuleViolation)>,
}

fn fill(env: &ChainEnv, st: &ChainState, miner: &Address, c: &Candidates, records: &[usize], order: &[usize]) -> Pass {
    let mut ctx = BlockCtx::begin(env, st, miner.clone());
    let mut rejected = Vec::new();
    let mut included_records = Vec::new();
    let mut block = Block {
        height: ctx.h,
        parent: ctx.parent,
        miner: Some(miner.clone()),
        ..Block::default()
    };
    if let Some(k) = &c.canary_kill {
        if attempt(&mut ctx, &mut rejected, Item::CanaryKill, |x| x.apply_canary_kill(k)) {
            block.canary_kill = Some(k.clone());
        }
    }
    for (i, pk) in c.samaritan_reports.iter().enumerate() {
        if attempt(&mut ctx, &mut rejected, Item::Samaritan(i), |x| x.apply_samaritan(pk)) {
            block.samaritan_reports.push(pk.clone());
        }
    }
    for (i, m) in c.registry.iter().enumerate() {
        if attempt(&mut ctx, &mut rejected, Item::Registry(i), |x| x.apply_registry(m)) {
            block.registry.push(m.clone());
        }
    }
    for &i in order {
        let tx = &c.transactions[i];
        if attempt(&mut ctx, &mut rejected, Item::Transaction(i), |x| x.apply_tx(tx)) {
            block.transactions.push(tx.clone());
        }
    }
    for &i in records {
        let r = &c.lfc_records[i];
        if attempt(&mut ctx, &mut rejected, Item::LfcRecord(i), |x| x.apply_lfc_record(r)) {
            block.lfc_records.push(r.clone());
            included_records.push(i);
        }
    }
    for (i, cl) in c.lfc_claims.iter().enumerate() {
        if attempt(&mut ctx, &mut rejected, Item::LfcClaim(i), |x| x.apply_lfc_claim(cl)) {
            block.lfc_claims.push(cl.clone());
        }
    }
    Pass {
        shortfall: ctx.escrow_shortfall(),
        block,
        included_records,
        rejected,
    }
}

/// Assemble and validate the next block on `st`.
///
/// `fund_escrow(shortfall, state)` may return a zero-fee escrow funding
/// transaction covering exactly `shortfall`. If it returns `None`, or the
/// transaction does not apply, lifted records are dropped from the end until
/// the coinbase covers the rest.
pub fn build_block(
    env: &ChainEnv,
    st: &ChainState,
    miner: &Address,
    candidates: &Candidates,
    mut fund_escrow: impl FnMut(u64, &ChainState) -> Option<Transaction>,
) -> Result<Built, RuleViolation> {
    let mut order: Vec<usize> = (0..candidates.transactions.len()).collect();
    order.sort_by(|&a, &b| candidates.transactions[b].fee.cmp(&candidates.transactions[a].fee).then(a.cmp(&b)));
    let mut records: Vec<usize> = (0..candidates.lfc_records.len()).collect();
    loop {
        let mut pass = fill(env, st, miner, candidates, &records, &order);
        if pass.shortfall == 0 {
            let built = finalize(env, st, pass.block)?;
            return Ok(Built {
                rejected: pass.rejected,
                ..built
            });
        }
        if let Some(tx) = fund_escrow(pass.shortfall, st) {
            let mut b = pass.block.clone();
            b.transactions.push(tx);
            match finalize(env, st, b) {
                Ok(built) => {
                    return Ok(Built {
                        rejected: pass.rejected,
                        ..built
                    })
                }
                Err(v) => pass.rejected.push((Item::EscrowFunding, v)),
            }
        }
        let last = *pass.included_records.last().expect("shortfall comes from records");
        records.retain(|&i| i != last);
    }
}

/// Attach the expected coinbase and run full validation.
fn finalize(env: &ChainEnv, st: &ChainState, mut block: Block) -> Result<Built, RuleViolation> {
    let mut ctx = BlockCtx::begin(env, st, block.miner.clone().expect("miner"));
    if let Some(k) = &block.canary_kill {
        ctx.apply_canary_kill(k)?;
    }
    for pk in &block.samaritan_reports {
        ctx.apply_samaritan(pk)?;
    }
    for m in &block.registry {
        ctx.apply_registry(m)?;
    }
    for tx in &block.transactions {
        ctx.apply_tx(tx)?;
    }
    for r in &block.lfc_records {
        ctx.apply_lfc_record(r)?;
    }
    for c in &block.lfc_claims {
        ctx.apply_lfc_claim(c)?;
    }
    let (_, coinbase, _) = ctx.finish(None)?;
    block.coinbase = coinbase;
    let (state, events) = apply_block(env, st, &block)?;
    Ok(Built {
        block,
        state,
        events,
        rejected: Vec::new(),
    })
}
