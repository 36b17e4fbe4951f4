use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::consensus::builder::{build_block, Candidates, Item};
use crate::consensus::{Chain, ChainEnv, Event, ReorgError, RuleViolation};
use crate::hash::Digest32;
use crate::ledger::{Address, Block, TxKind};
use crate::lfc::LfcMessage;

use super::agents::{build_agent, Agent, Directory, View};
use super::config::{ConfigError, EventDetail, ScenarioConfig, ScheduledEvent};
use super::mempool::{Mempool, Submission};
use super::report::{AgentReport, Reorg, Rejection, Report};
use super::snapshot::Snapshot;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("chain parameters: {0}")]
    Group(String),
    #[error("genesis: {0}")]
    Genesis(RuleViolation),
    #[error("block {height} built by {miner} failed validation: {violation}")]
    Invalid {
        height: u64,
        miner: String,
        violation: RuleViolation,
    },
    #[error("reorg at {height}: {source}")]
    Reorg {
        height: u64,
        #[source]
        source: ReorgError,
    },
}

impl SimError {
    /// Identifier of the consensus rule behind the failure, if any.
    pub fn rule(&self) -> Option<&'static str> {
        match self {
            SimError::Genesis(v) | SimError::Invalid { violation: v, .. } => Some(v.rule),
            SimError::Reorg {
                source: ReorgError::Invalid { violation, .. },
                ..
            } => Some(violation.rule),
            _ => None,
        }
    }
}

/// One deterministic run of a scenario.
pub struct Sim {
    config: ScenarioConfig,
    env: Arc<ChainEnv>,
    chain: Chain,
    pool: Mempool,
    agents: Vec<Box<dyn Agent>>,
    directory: Directory,
    owners: BTreeMap<Address, usize>,
    rng: ChaCha8Rng,
    initial: Vec<u64>,
    rejections: Vec<Rejection>,
    seen: BTreeSet<(Digest32, &'static str)>,
    reorgs: Vec<Reorg>,
    /// Submitting agent of every item ever offered.
    origins: BTreeMap<Digest32, usize>,
}

impl Sim {
    pub fn new(config: ScenarioConfig) -> Result<Self, SimError> {
        config.validate()?;
        let env = Arc::new(ChainEnv::new(config.chain.clone()).map_err(|e| SimError::Group(e.to_string()))?);
        let agents: Vec<Box<dyn Agent>> = config.agents.iter().map(|a| build_agent(&env, a)).collect();
        let mut directory = Directory::default();
        let mut owners = BTreeMap::new();
        let mut alloc = Vec::new();
        for (i, a) in agents.iter().enumerate() {
            let addrs = a.addresses();
            for addr in &addrs {
                owners.insert(addr.clone(), i);
            }
            directory.push(a.name(), addrs);
            alloc.extend(a.genesis());
        }
        let genesis = Block {
            coinbase: alloc,
            ..Block::default()
        };
        let chain = Chain::new(env.clone(), genesis).map_err(SimError::Genesis)?;
        let initial = agents.iter().map(|a| balance(chain.state(), &a.addresses())).collect();
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            env,
            chain,
            pool: Mempool::default(),
            agents,
            directory,
            owners,
            initial,
            rejections: Vec::new(),
            seen: BTreeSet::new(),
            reorgs: Vec::new(),
            origins: BTreeMap::new(),
        })
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn env(&self) -> &Arc<ChainEnv> {
        &self.env
    }

    /// Run all configured blocks.
    pub fn run(&mut self) -> Result<(), SimError> {
        while self.chain.height() < self.config.blocks {
            self.step()?;
        }
        Ok(())
    }

    /// Let every agent act, then produce the next block.
    pub fn step(&mut self) -> Result<(), SimError> {
        let h = self.chain.height() + 1;
        let mut subs = Vec::new();
        for i in 0..self.agents.len() {
            let v = View {
                env: &self.env,
                st: self.chain.state(),
                h,
                pool: &self.pool,
                me: i,
                directory: &self.directory,
            };
            self.agents[i].act(&v, &mut subs);
            for s in subs.drain(..) {
                self.origins.entry(s.key(&self.env.group)).or_insert(i);
                self.pool.submit(&self.env.group, &self.config.latency, s, i, h);
            }
        }
        let reorg = self.config.events.iter().find_map(|e| match e {
            ScheduledEvent::Reorg { height, depth } if *height == h => Some(*depth),
            _ => None,
        });
        match reorg {
            Some(depth) => self.reorg(h, depth)?,
            None => {
                let st = self.chain.state().clone();
                let block = self.produce(&st, h)?;
                self.commit(block)?;
            }
        }
        self.pool.expire(h, self.config.latency.ttl);
        Ok(())
    }

    fn pick_miner(&mut self) -> usize {
        let miners: Vec<(usize, u64)> = self
            .agents
            .iter()
            .enumerate()
            .filter_map(|(i, a)| a.miner_ref().map(|m| (i, m.weight)))
            .collect();
        let total: u64 = miners.iter().map(|(_, w)| w).sum();
        let mut r = self.rng.gen_range(0..total);
        for (i, w) in &miners {
            if r < *w {
                return *i;
            }
            r -= w;
        }
        unreachable!("weights sum to total")
    }

    /// Build block `h` on `st` from the pool.
    fn produce(&mut self, st: &crate::ledger::ChainState, h: u64) -> Result<Block, SimError> {
        let g = self.env.group.clone();
        let who = self.pick_miner();
        let mut c = Candidates::default();
        let mut tx_keys = Vec::new();
        let mut sam_keys = Vec::new();
        let mut kill_key = None;
        let mut offered: Vec<(Digest32, LfcMessage)> = Vec::new();
        let mut bad_kills = Vec::new();
        for e in self.pool.eligible(h) {
            match &e.item {
                Submission::Tx(tx) => {
                    c.transactions.push(tx.clone());
                    tx_keys.push(e.key);
                }
                Submission::Lfc(m) => offered.push((e.key, m.clone())),
                Submission::Kill(k) => {
                    if c.canary_kill.is_none() && self.env.canary.verify(&self.env.canary_group, &k.sig) {
                        c.canary_kill = Some(k.clone());
                        kill_key = Some(e.key);
                    } else if c.canary_kill.is_none() {
                        bad_kills.push(e.key);
                    }
                }
                Submission::Samaritan(pk) => {
                    c.samaritan_reports.push(pk.clone());
                    sam_keys.push(e.key);
                }
            }
        }
        for key in bad_kills {
            self.log(h, key, "canary-kill".to_string(), crate::consensus::rules::CANARY_BAD_SOLUTION);
        }
        let env = self.env.clone();
        let core = self.agents[who].miner().expect("picked a miner");
        let miner_addr = core.address();
        let msgs: Vec<LfcMessage> = offered.iter().map(|(_, m)| m.clone()).collect();
        let (sources, refused) = core.prepare(&env, st, &msgs, &mut c);
        let built = build_block(&env, st, &miner_addr, &c, |shortfall, s| core.fund_escrow(&env, s, shortfall))
            .map_err(|violation| SimError::Invalid {
                height: h,
                miner: self.agents[who].name().to_string(),
                violation,
            })?;
        for (i, v) in refused {
            let (key, m) = &offered[i];
            self.log(h, *key, Submission::Lfc(m.clone()).label(&g), v.rule);
        }
        for (item, v) in &built.rejected {
            let (key, label) = match *item {
                Item::Transaction(i) => (tx_keys[i], Submission::Tx(c.transactions[i].clone()).label(&g)),
                Item::Samaritan(i) => (sam_keys[i], Submission::Samaritan(c.samaritan_reports[i].clone()).label(&g)),
                Item::CanaryKill => (kill_key.expect("offered"), "canary-kill".to_string()),
                Item::LfcRecord(i) => match sources[i] {
                    Some(j) => (offered[j].0, Submission::Lfc(offered[j].1.clone()).label(&g)),
                    // The miner's own records are rebuilt every block.
                    None => continue,
                },
                Item::LfcClaim(_) | Item::Registry(_) | Item::EscrowFunding => continue,
            };
            self.log(h, key, label, v.rule);
        }
        Ok(built.block)
    }

    fn log(&mut self, height: u64, key: Digest32, label: String, rule: &'static str) {
        if self.seen.insert((key, rule)) {
            self.rejections.push(Rejection { height, label, rule });
        }
    }

    /// Append `block` and drop what it included from the pool.
    fn commit(&mut self, block: Block) -> Result<(), SimError> {
        let height = block.height;
        let included = self.included(&block);
        let miner = block
            .miner
            .as_ref()
            .and_then(|m| self.owners.get(m))
            .map(|&i| self.agents[i].name().to_string())
            .unwrap_or_default();
        self.chain.apply_block(block.clone()).map_err(|violation| SimError::Invalid {
            height,
            miner,
            violation,
        })?;
        self.pool.remove(&included);
        for a in &mut self.agents {
            if let Some(m) = a.miner() {
                m.on_block(&block);
            }
        }
        Ok(())
    }

    fn included(&self, block: &Block) -> BTreeSet<Digest32> {
        let g = &self.env.group;
        let mut keys: BTreeSet<Digest32> = block.transactions.iter().map(|t| t.txid(g)).collect();
        if let Some(k) = &block.canary_kill {
            keys.insert(Submission::Kill(k.clone()).key(g));
        }
        for pk in &block.samaritan_reports {
            keys.insert(Submission::Samaritan(pk.clone()).key(g));
        }
        for e in self.pool.visible(u64::MAX) {
            if let Submission::Lfc(m) = &e.item {
                if block.lfc_records.contains(&m.record()) {
                    keys.insert(e.key);
                }
            }
        }
        keys
    }

    /// Replace the `depth` blocks below `h` with a branch ending at `h`.
    fn reorg(&mut self, h: u64, depth: u64) -> Result<(), SimError> {
        let tip = self.chain.height();
        let fork = tip.saturating_sub(depth);
        let g = self.env.group.clone();
        let abandoned: Vec<Block> = self.chain.blocks()[fork as usize + 1..].to_vec();
        for b in &abandoned {
            for tx in &b.transactions {
                if !matches!(tx.kind, TxKind::EscrowFunding) {
                    let from = self.origin_of(tx.txid(&g));
                    self.pool.requeue(&g, Submission::Tx(tx.clone()), from, fork + 1);
                }
            }
            if let Some(k) = &b.canary_kill {
                let s = Submission::Kill(k.clone());
                let from = self.origin_of(s.key(&g));
                self.pool.requeue(&g, s, from, fork + 1);
            }
            for pk in &b.samaritan_reports {
                let s = Submission::Samaritan(pk.clone());
                let from = self.origin_of(s.key(&g));
                self.pool.requeue(&g, s, from, fork + 1);
            }
        }
        let mut st = self
            .chain
            .state_at(fork)
            .cloned()
            .ok_or(SimError::Reorg {
                height: h,
                source: ReorgError::TooDeep {
                    depth,
                    max: self.env.params.consensus.reorg_max_depth,
                },
            })?;
        let mut branch = Vec::new();
        for height in fork + 1..=h {
            let block = self.produce(&st, height)?;
            st = crate::consensus::apply_block(&self.env, &st, &block)
                .map_err(|violation| SimError::Invalid {
                    height,
                    miner: String::new(),
                    violation,
                })?
                .0;
            for t in &block.transactions {
                let mut one = BTreeSet::new();
                one.insert(t.txid(&g));
                self.pool.remove(&one);
            }
            for a in &mut self.agents {
                if let Some(m) = a.miner() {
                    m.on_block(&block);
                }
            }
            branch.push(block);
        }
        let included: BTreeSet<Digest32> = branch.iter().flat_map(|b| self.included(b)).collect();
        self.chain
            .reorg(fork, branch)
            .map_err(|source| SimError::Reorg { height: h, source })?;
        self.pool.remove(&included);
        self.reorgs.push(Reorg {
            height: h,
            fork,
            abandoned: abandoned.len() as u64,
        });
        Ok(())
    }

    fn origin_of(&self, key: Digest32) -> usize {
        self.origins.get(&key).copied().unwrap_or(usize::MAX)
    }

    pub fn report(&self) -> Report {
        let st = self.chain.state();
        let mut mining = vec![0u64; self.agents.len()];
        for (_, e) in self.chain.events() {
            let (m, amount) = match e {
                Event::Coinbase { miner, income, .. } => (miner, *income),
                Event::FeeShare { miner, amount } => (miner, *amount),
                _ => continue,
            };
            if let Some(&i) = self.owners.get(m) {
                mining[i] += amount;
            }
        }
        let detail = self.config.report.events;
        let events = self
            .chain
            .events()
            .iter()
            .filter(|(_, e)| match detail {
                EventDetail::None => false,
                EventDetail::Notable => !matches!(e, Event::Coinbase { .. } | Event::FeeShare { .. }),
                EventDetail::All => true,
            })
            .map(|(h, e)| (*h, e.to_string()))
            .collect();
        let agents = self
            .agents
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let v = View {
                    env: &self.env,
                    st,
                    h: self.chain.height() + 1,
                    pool: &self.pool,
                    me: i,
                    directory: &self.directory,
                };
                AgentReport {
                    name: a.name().to_string(),
                    kind: a.kind(),
                    initial: self.initial[i],
                    final_balance: balance(st, &a.addresses()),
                    mining_income: mining[i],
                    notes: a.outcomes(&v),
                }
            })
            .collect();
        Report {
            scenario: self.config.name.clone(),
            seed: self.config.seed,
            height: self.chain.height(),
            tip_hash: self.chain.tip_hash(),
            agents,
            events,
            rejections: self.rejections.clone(),
            reorgs: self.reorgs.clone(),
            supply: st.supply.clone(),
            epochs: st.epochs.spans(),
            killed_at: st.canary.killed_at,
            mempool_left: self.pool.len(),
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            config: self.config.clone(),
            blocks: self.chain.blocks().to_vec(),
        }
    }
}

fn balance(st: &crate::ledger::ChainState, addrs: &[Address]) -> u64 {
    addrs.iter().map(|a| st.balance_of(a)).sum()
}

/// Run `config` to completion.
pub fn run(config: ScenarioConfig) -> Result<(Report, Snapshot), SimError> {
    let mut sim = Sim::new(config)?;
    sim.run()?;
    Ok((sim.report(), sim.snapshot()))
}
