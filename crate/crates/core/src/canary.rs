//! Two entities racing for the canary bounty and the quantum loot.
//!
//! Each entity can claim the bounty from `t_bounty` and the loot from
//! `t_loot`. Killing the canary starts a window of `w` time units after which
//! the loot is gone. An entity playing Early claims the bounty at
//! `t_bounty`; one playing Late waits until `max(t_bounty, t_loot - w)`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EntityTimeline {
    pub t_bounty: i64,
    pub t_loot: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("bounty time {t_bounty} is not before loot time {t_loot}")]
    BountyNotFirst { t_bounty: i64, t_loot: i64 },
    #[error("waiting time must be non-negative")]
    NegativeWait,
}

impl EntityTimeline {
    pub fn new(t_bounty: i64, t_loot: i64) -> Result<Self, GameError> {
        if t_bounty >= t_loot {
            return Err(GameError::BountyNotFirst { t_bounty, t_loot });
        }
        Ok(Self { t_bounty, t_loot })
    }

    /// When Late claims the bounty: `t_loot - w`, or `t_bounty` if later.
    pub fn late_claim(&self, w: i64) -> i64 {
        self.t_bounty.max(self.t_loot - w)
    }

    /// Both strategies claim at the same time.
    pub fn degenerate(&self, w: i64) -> bool {
        self.t_bounty >= self.t_loot - w
    }

    pub fn claim(&self, s: Strategy, w: i64) -> i64 {
        match s {
            Strategy::Early => self.t_bounty,
            Strategy::Late => self.late_claim(w),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Early,
    Late,
}

impl Strategy {
    pub const BOTH: [Strategy; 2] = [Strategy::Early, Strategy::Late];

    fn letter(self) -> char {
        match self {
            Strategy::Early => 'E',
            Strategy::Late => 'L',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GameSpec {
    pub faster: EntityTimeline,
    pub slower: EntityTimeline,
    pub w: i64,
    pub b: u64,
    pub l: u64,
}

impl GameSpec {
    /// Orders the entities so the faster one claims the bounty first.
    pub fn new(a: EntityTimeline, c: EntityTimeline, w: i64, b: u64, l: u64) -> Result<Self, GameError> {
        if w < 0 {
            return Err(GameError::NegativeWait);
        }
        let (faster, slower) = if c.t_bounty < a.t_bounty { (c, a) } else { (a, c) };
        Ok(Self {
            faster,
            slower,
            w,
            b,
            l,
        })
    }

    /// From raw times, checking each entity.
    pub fn from_times(t_b_f: i64, t_l_f: i64, t_b_s: i64, t_l_s: i64, w: i64) -> Result<Self, GameError> {
        Self::new(EntityTimeline::new(t_b_f, t_l_f)?, EntityTimeline::new(t_b_s, t_l_s)?, w, 1, 1)
    }

    pub fn with_values(self, b: u64, l: u64) -> Self {
        Self { b, l, ..self }
    }

    pub fn with_w(self, w: i64) -> Self {
        Self { w, ..self }
    }

    pub fn degenerate(&self) -> bool {
        self.faster.degenerate(self.w) || self.slower.degenerate(self.w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    Faster,
    Slower,
}

/// Who got what in one play.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Outcome {
    pub kill_time: i64,
    pub bounty: Player,
    pub loot: Option<Player>,
}

/// Symbolic share of one entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Share {
    pub bounty: bool,
    pub loot: bool,
}

impl Share {
    pub fn value(&self, b: u64, l: u64) -> u64 {
        (if self.bounty { b } else { 0 }) + (if self.loot { l } else { 0 })
    }
}

impl fmt::Display for Share {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.bounty, self.loot) {
            (false, false) => f.write_str("0"),
            (true, false) => f.write_str("b"),
            (false, true) => f.write_str("l"),
            (true, true) => f.write_str("b+l"),
        }
    }
}

impl Outcome {
    pub fn share(&self, p: Player) -> Share {
        Share {
            bounty: self.bounty == p,
            loot: self.loot == Some(p),
        }
    }
}

/// Play one strategy profile. Ties go to the faster entity, and the loot
/// deadline is inclusive.
pub fn resolve(game: &GameSpec, s_f: Strategy, s_s: Strategy) -> Outcome {
    let c_f = game.faster.claim(s_f, game.w);
    let c_s = game.slower.claim(s_s, game.w);
    let (kill_time, bounty) = if c_f <= c_s {
        (c_f, Player::Faster)
    } else {
        (c_s, Player::Slower)
    };
    let deadline = kill_time + game.w;
    let f_ok = game.faster.t_loot <= deadline;
    let s_ok = game.slower.t_loot <= deadline;
    let loot = match (f_ok, s_ok) {
        (true, true) if game.slower.t_loot < game.faster.t_loot => Some(Player::Slower),
        (true, _) => Some(Player::Faster),
        (false, true) => Some(Player::Slower),
        (false, false) => None,
    };
    Outcome {
        kill_time,
        bounty,
        loot,
    }
}

pub fn payoff(game: &GameSpec, s_f: Strategy, s_s: Strategy) -> (u64, u64) {
    let o = resolve(game, s_f, s_s);
    (
        o.share(Player::Faster).value(game.b, game.l),
        o.share(Player::Slower).value(game.b, game.l),
    )
}

fn idx(s: Strategy) -> usize {
    match s {
        Strategy::Early => 0,
        Strategy::Late => 1,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayoffMatrix {
    /// `outcomes[f][s]`, Early first.
    pub outcomes: [[Outcome; 2]; 2],
    pub payoffs: [[(u64, u64); 2]; 2],
    /// Weak pure Nash equilibria, in row-major order.
    pub equilibria: Vec<(Strategy, Strategy)>,
}

impl PayoffMatrix {
    pub fn cell(&self, s_f: Strategy, s_s: Strategy) -> (Share, Share) {
        let o = &self.outcomes[idx(s_f)][idx(s_s)];
        (o.share(Player::Faster), o.share(Player::Slower))
    }

    pub fn is_equilibrium(&self, s_f: Strategy, s_s: Strategy) -> bool {
        self.equilibria.contains(&(s_f, s_s))
    }

    /// The symbolic shares, to compare against the scenario groups.
    fn shape(&self) -> [[(Share, Share); 2]; 2] {
        let c = |f, s| self.cell(f, s);
        [
            [c(Strategy::Early, Strategy::Early), c(Strategy::Early, Strategy::Late)],
            [c(Strategy::Late, Strategy::Early), c(Strategy::Late, Strategy::Late)],
        ]
    }
}

pub fn payoff_matrix(game: &GameSpec) -> PayoffMatrix {
    let mut outcomes = [[resolve(game, Strategy::Early, Strategy::Early); 2]; 2];
    let mut payoffs = [[(0, 0); 2]; 2];
    for f in Strategy::BOTH {
        for s in Strategy::BOTH {
            outcomes[idx(f)][idx(s)] = resolve(game, f, s);
            payoffs[idx(f)][idx(s)] = payoff(game, f, s);
        }
    }
    let mut equilibria = Vec::new();
    for f in Strategy::BOTH {
        for s in Strategy::BOTH {
            let (pf, ps) = payoffs[idx(f)][idx(s)];
            let f_stays = Strategy::BOTH.iter().all(|&d| payoffs[idx(d)][idx(s)].0 <= pf);
            let s_stays = Strategy::BOTH.iter().all(|&d| payoffs[idx(f)][idx(d)].1 <= ps);
            if f_stays && s_stays {
                equilibria.push((f, s));
            }
        }
    }
    PayoffMatrix {
        outcomes,
        payoffs,
        equilibria,
    }
}

/// Event markers, in the order the timelines list them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Marker {
    /// Faster entity can claim the bounty.
    FasterBounty,
    /// Faster entity's Late claim.
    FasterLate,
    /// Faster entity can claim the loot.
    FasterLoot,
    SlowerBounty,
    SlowerLate,
    SlowerLoot,
}

impl Marker {
    pub fn symbol(self) -> char {
        match self {
            Marker::FasterBounty => '◖',
            Marker::FasterLate => '●',
            Marker::FasterLoot => '◗',
            Marker::SlowerBounty => '≪',
            Marker::SlowerLate => '⤓',
            Marker::SlowerLoot => '≫',
        }
    }
}

/// The seven orderings of two non-degenerate entities.
pub const TIMELINES: [&str; 7] = ["◖≪⤓≫●◗", "◖≪⤓●≫◗", "◖≪●⤓◗≫", "◖≪●◗⤓≫", "◖●≪⤓◗≫", "◖●≪◗⤓≫", "◖●◗≪⤓≫"];

/// Scenario group of each timeline.
pub const TIMELINE_GROUP: [u8; 7] = [1, 1, 2, 2, 3, 3, 3];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ScenarioClass {
    Degenerate,
    Classified {
        /// 1-based timeline number, when the ordering matches one.
        timeline: Option<u8>,
        pattern: String,
        /// Scenario group 1, 2 or 3 by payoff matrix; `None` if it matches none.
        group: Option<u8>,
    },
}

impl ScenarioClass {
    pub fn timeline(&self) -> Option<u8> {
        match self {
            ScenarioClass::Classified { timeline, .. } => *timeline,
            ScenarioClass::Degenerate => None,
        }
    }

    pub fn group(&self) -> Option<u8> {
        match self {
            ScenarioClass::Classified { group, .. } => *group,
            ScenarioClass::Degenerate => None,
        }
    }
}

impl fmt::Display for ScenarioClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioClass::Degenerate => f.write_str("degenerate"),
            ScenarioClass::Classified {
                timeline,
                pattern,
                group,
            } => {
                match timeline {
                    Some(t) => write!(f, "TL{t} {pattern}")?,
                    None => write!(f, "TL? {pattern}")?,
                }
                match group {
                    Some(g) => write!(f, " scenario {g}"),
                    None => write!(f, " scenario ?"),
                }
            }
        }
    }
}

pub fn markers(game: &GameSpec) -> [(Marker, i64); 6] {
    let w = game.w;
    [
        (Marker::FasterBounty, game.faster.t_bounty),
        (Marker::FasterLate, game.faster.t_loot - w),
        (Marker::FasterLoot, game.faster.t_loot),
        (Marker::SlowerBounty, game.slower.t_bounty),
        (Marker::SlowerLate, game.slower.t_loot - w),
        (Marker::SlowerLoot, game.slower.t_loot),
    ]
}

/// All orderings of the markers consistent with their times; tied markers
/// may appear in any order.
fn orderings(game: &GameSpec) -> Vec<String> {
    let mut m = markers(game).to_vec();
    m.sort_by_key(|&(_, t)| t);
    let mut groups: Vec<Vec<Marker>> = Vec::new();
    let mut last = None;
    for (mk, t) in m {
        if last == Some(t) {
            groups.last_mut().expect("open group").push(mk);
        } else {
            groups.push(vec![mk]);
        }
        last = Some(t);
    }
    let mut out = vec![String::new()];
    for g in groups {
        let perms = permutations(&g);
        out = out
            .iter()
            .flat_map(|prefix| {
                perms.iter().map(move |p| {
                    let mut s = prefix.clone();
                    s.extend(p.iter().map(|m| m.symbol()));
                    s
                })
            })
            .collect();
    }
    out
}

fn permutations(items: &[Marker]) -> Vec<Vec<Marker>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn group_of(m: &PayoffMatrix) -> Option<u8> {
    let s = |bounty, loot| Share { bounty, loot };
    let z = s(false, false);
    let b = s(true, false);
    let bl = s(true, true);
    let shape = m.shape();
    let groups = [
        (1, [[(b, z), (b, z)], [(z, b), (z, bl)]]),
        (2, [[(b, z), (b, z)], [(z, b), (bl, z)]]),
        (3, [[(b, z), (b, z)], [(bl, z), (bl, z)]]),
    ];
    groups.iter().find(|(_, g)| *g == shape).map(|(n, _)| *n)
}

pub fn classify_timeline(game: &GameSpec) -> ScenarioClass {
    if game.degenerate() {
        return ScenarioClass::Degenerate;
    }
    let orders = orderings(game);
    let group = group_of(&payoff_matrix(game));
    // Tied markers may fit two timelines; take the one the payoffs agree with.
    let fits: Vec<usize> = (0..TIMELINES.len())
        .filter(|&i| orders.iter().any(|o| o == TIMELINES[i]))
        .collect();
    let timeline = fits
        .iter()
        .find(|&&i| Some(TIMELINE_GROUP[i]) == group)
        .or(fits.first())
        .map(|&i| i as u8 + 1);
    let pattern = match timeline {
        Some(t) => TIMELINES[t as usize - 1].to_string(),
        None => orders[0].clone(),
    };
    ScenarioClass::Classified {
        timeline,
        pattern,
        group,
    }
}

fn dedup(classes: impl IntoIterator<Item = ScenarioClass>) -> Vec<ScenarioClass> {
    let mut out: Vec<ScenarioClass> = Vec::new();
    for c in classes {
        if out.last() != Some(&c) {
            out.push(c);
        }
    }
    out
}

/// Classes met as `w` runs through `w_values`, repeats collapsed.
pub fn sweep_w(game: &GameSpec, w_values: impl IntoIterator<Item = i64>) -> Vec<ScenarioClass> {
    dedup(w_values.into_iter().map(|w| classify_timeline(&game.with_w(w))))
}

/// Bounty times under bounty `bounty`, for times given at bounty `base`: the
/// time to build a bounty-capable machine shrinks in proportion.
pub fn invest(game: &GameSpec, base: u64, bounty: u64) -> GameSpec {
    let scale = |t: i64| (t as i128 * base as i128).div_euclid(bounty.max(1) as i128) as i64;
    let mut g = *game;
    g.faster.t_bounty = scale(game.faster.t_bounty).min(game.faster.t_loot - 1);
    g.slower.t_bounty = scale(game.slower.t_bounty).min(game.slower.t_loot - 1);
    g.b = bounty;
    if g.slower.t_bounty < g.faster.t_bounty {
        std::mem::swap(&mut g.faster, &mut g.slower);
    }
    g
}

/// Classes met as the bounty grows from `game.b` through `bounties`.
pub fn sweep_bounty(game: &GameSpec, bounties: impl IntoIterator<Item = u64>) -> Vec<ScenarioClass> {
    let base = game.b;
    dedup(bounties.into_iter().map(|b| classify_timeline(&invest(game, base, b))))
}

/// One instance of each timeline, bounty times first.
pub fn canonical(timeline: u8) -> GameSpec {
    let (t_b_f, t_l_f, t_b_s, t_l_s, w) = match timeline {
        1 => (0, 11, 1, 7, 3),
        2 => (0, 8, 1, 7, 3),
        3 => (0, 7, 1, 8, 3),
        4 => (0, 5, 1, 9, 3),
        5 => (0, 4, 2, 6, 3),
        6 => (0, 4, 2, 8, 3),
        7 => (0, 4, 5, 9, 3),
        _ => panic!("timelines are numbered 1 to 7"),
    };
    GameSpec::from_times(t_b_f, t_l_f, t_b_s, t_l_s, w).expect("canonical games are well formed")
}

fn render_game(out: &mut String, game: &GameSpec) {
    let class = classify_timeline(game);
    let m = payoff_matrix(game);
    out.push_str(&format!(
        "{class} (t_b_f={} t_l_f={} t_b_s={} t_l_s={} w={})\n",
        game.faster.t_bounty, game.faster.t_loot, game.slower.t_bounty, game.slower.t_loot, game.w
    ));
    for f in Strategy::BOTH {
        for s in Strategy::BOTH {
            let (a, c) = m.cell(f, s);
            let mark = if m.is_equilibrium(f, s) { " *" } else { "" };
            out.push_str(&format!("  {}{} ({a}, {c}){mark}\n", f.letter(), s.letter()));
        }
    }
}

/// Payoff matrices of the canonical timelines; `*` marks pure equilibria.
pub fn table() -> String {
    let mut out = String::new();
    for t in 1..=7 {
        if t > 1 {
            out.push('\n');
        }
        render_game(&mut out, &canonical(t));
    }
    out
}

/// One game's matrix in the table format.
pub fn render(game: &GameSpec) -> String {
    let mut out = String::new();
    render_game(&mut out, game);
    out
}

/// Render a class trajectory as `TL5 -> TL3 -> TL4`.
pub fn trajectory(classes: &[ScenarioClass]) -> String {
    classes
        .iter()
        .map(|c| match c {
            ScenarioClass::Degenerate => "degenerate".to_string(),
            ScenarioClass::Classified {
                timeline: Some(t), ..
            } => format!("TL{t}"),
            ScenarioClass::Classified { pattern, .. } => pattern.clone(),
        })
        .collect::<Vec<_>>()
        .join(" -> ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use Strategy::*;

    #[test]
    fn canonical_instances_order_as_named() {
        for t in 1..=7u8 {
            let c = classify_timeline(&canonical(t));
            assert_eq!(c.timeline(), Some(t));
            assert_eq!(c.group(), Some(TIMELINE_GROUP[t as usize - 1]));
        }
    }

    #[test]
    fn scenario_one_late_late() {
        // Tie between the slower loot and the faster late claim.
        let g = GameSpec::from_times(0, 12, 1, 9, 3).unwrap();
        let o = resolve(&g, Late, Late);
        assert_eq!(o.kill_time, 6);
        assert_eq!((o.share(Player::Faster).to_string(), o.share(Player::Slower).to_string()), ("0".into(), "b+l".into()));
        assert_eq!(classify_timeline(&g).timeline(), Some(1));
    }

    #[test]
    fn scenario_three_late_early() {
        let m = payoff_matrix(&canonical(5));
        let (f, s) = m.cell(Late, Early);
        assert_eq!((f.to_string(), s.to_string()), ("b+l".into(), "0".into()));
        assert_eq!(m.equilibria, vec![(Late, Early), (Late, Late)]);
    }

    #[test]
    fn equilibria_by_group() {
        assert_eq!(payoff_matrix(&canonical(1)).equilibria, vec![(Early, Early), (Early, Late)]);
        assert_eq!(payoff_matrix(&canonical(3)).equilibria, vec![(Early, Early)]);
        assert_eq!(payoff_matrix(&canonical(7)).equilibria, vec![(Late, Early), (Late, Late)]);
    }

    #[test]
    fn degenerate_cells_coincide() {
        let g = GameSpec::from_times(0, 4, 1, 5, 6).unwrap();
        assert_eq!(classify_timeline(&g), ScenarioClass::Degenerate);
        let m = payoff_matrix(&g);
        let first = m.cell(Early, Early);
        for f in Strategy::BOTH {
            for s in Strategy::BOTH {
                assert_eq!(m.cell(f, s), first);
            }
        }
        assert_eq!(resolve(&g, Late, Late).bounty, Player::Faster);
    }

    #[test]
    fn relabels_by_bounty_time() {
        let a = EntityTimeline::new(3, 10).unwrap();
        let c = EntityTimeline::new(1, 12).unwrap();
        let g = GameSpec::new(a, c, 2, 1, 1).unwrap();
        assert_eq!(g.faster, c);
        assert!(EntityTimeline::new(5, 5).is_err());
    }

    #[test]
    fn label_swap_keeps_class() {
        let g = canonical(4);
        let swapped = GameSpec::new(g.slower, g.faster, g.w, g.b, g.l).unwrap();
        assert_eq!(classify_timeline(&swapped), classify_timeline(&g));
    }

    #[test]
    fn seventh_timeline_is_scenario_three() {
        let g = GameSpec::from_times(0, 30, 50, 90, 20).unwrap();
        let c = classify_timeline(&g);
        assert_eq!((c.timeline(), c.group()), (Some(7), Some(3)));
    }
}
