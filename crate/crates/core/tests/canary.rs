mod common;

use proptest::prelude::*;
use proptest::strategy::Strategy as _;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fawkes::canary::{
    canonical, classify_timeline, payoff_matrix, resolve, EntityTimeline, GameSpec, Player, ScenarioClass, Strategy,
};

fn arb_game() -> impl proptest::strategy::Strategy<Value = GameSpec> {
    (0i64..60, 1i64..60, 0i64..60, 1i64..60, 0i64..60, 1u64..1000, 1u64..1000).prop_map(
        |(tb1, dl1, tb2, dl2, w, b, l)| {
            let a = EntityTimeline::new(tb1, tb1 + dl1).unwrap();
            let c = EntityTimeline::new(tb2, tb2 + dl2).unwrap();
            GameSpec::new(a, c, w, b, l).unwrap()
        },
    )
}

#[test]
fn golden_table() {
    common::canary_table().unwrap();
}

#[test]
fn golden_lines_per_timeline() {
    for t in 1..=7u8 {
        let block = common::GOLDEN_TABLE.split("\n\n").nth(t as usize - 1).unwrap();
        assert!(block.starts_with(&format!("TL{t} ")));
        assert_eq!(format!("{block}\n").trim_end(), fawkes::canary::render(&canonical(t)).trim_end());
    }
}

#[test]
fn sweep_arrows() {
    common::sweeps().unwrap();
}

#[test]
fn late_claimed_loot_is_exclusive() {
    // Winner-take-all: the earlier loot time wins even if both qualify.
    let g = GameSpec::from_times(0, 8, 1, 7, 10).unwrap();
    assert_eq!(resolve(&g, Strategy::Early, Strategy::Early).loot, Some(Player::Slower));
}

#[test]
fn equilibria_never_award_loot_in_first_two_groups() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut counts = [0usize; 3];
    let mut tries = 0;
    while counts.iter().any(|&c| c < 1_000) {
        tries += 1;
        assert!(tries < 2_000_000, "sampler stalled at {counts:?}");
        let tb1 = rng.gen_range(0..100);
        let tb2 = rng.gen_range(0..100);
        let g = GameSpec::from_times(tb1, tb1 + rng.gen_range(1..100), tb2, tb2 + rng.gen_range(1..100), rng.gen_range(0..100))
            .unwrap()
            .with_values(rng.gen_range(1..1_000), rng.gen_range(1..1_000));
        let Some(group) = classify_timeline(&g).group() else { continue };
        let slot = group as usize - 1;
        if counts[slot] >= 1_000 {
            continue;
        }
        counts[slot] += 1;
        let m = payoff_matrix(&g);
        assert!(!m.equilibria.is_empty());
        if group <= 2 {
            for &(f, s) in &m.equilibria {
                assert!(resolve(&g, f, s).loot.is_none(), "{g:?} {f:?}{s:?}");
            }
        } else {
            assert!(m.equilibria.iter().all(|p| p.0 == Strategy::Late));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn one_bounty_winner_and_valid_loot(g in arb_game()) {
        for f in Strategy::BOTH {
            for s in Strategy::BOTH {
                let o = resolve(&g, f, s);
                let c_f = g.faster.claim(f, g.w);
                let c_s = g.slower.claim(s, g.w);
                prop_assert_eq!(o.kill_time, c_f.min(c_s));
                let winner_claim = match o.bounty { Player::Faster => c_f, Player::Slower => c_s };
                prop_assert_eq!(winner_claim, o.kill_time);
                let shares = [o.share(Player::Faster), o.share(Player::Slower)];
                prop_assert_eq!(shares.iter().filter(|x| x.bounty).count(), 1);
                prop_assert!(shares.iter().filter(|x| x.loot).count() <= 1);
                if let Some(p) = o.loot {
                    let t_l = match p { Player::Faster => g.faster.t_loot, Player::Slower => g.slower.t_loot };
                    prop_assert!(t_l <= o.kill_time + g.w);
                }
            }
        }
    }

    #[test]
    fn argmax_invariant_under_scaling(g in arb_game(), k in 1u64..50) {
        let scaled = g.with_values(g.b * k, g.l * k);
        prop_assert_eq!(payoff_matrix(&g).equilibria, payoff_matrix(&scaled).equilibria);
    }

    #[test]
    fn late_never_claims_before_early(g in arb_game()) {
        for e in [g.faster, g.slower] {
            prop_assert!(e.claim(Strategy::Late, g.w) >= e.claim(Strategy::Early, g.w));
        }
    }

    #[test]
    fn label_swap_keeps_class(g in arb_game()) {
        let swapped = GameSpec::new(g.slower, g.faster, g.w, g.b, g.l).unwrap();
        if g.slower.t_bounty != g.faster.t_bounty {
            prop_assert_eq!(classify_timeline(&swapped), classify_timeline(&g));
        }
    }

    #[test]
    fn non_degenerate_games_fit_a_timeline(g in arb_game()) {
        match classify_timeline(&g) {
            ScenarioClass::Degenerate => prop_assert!(g.degenerate()),
            c => prop_assert!(c.timeline().is_some(), "{}", c),
        }
    }
}
