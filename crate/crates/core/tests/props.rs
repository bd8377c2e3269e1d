use pmt_core::analytics::stats::{fisher_ci, p_value, pearson};
use pmt_core::analytics::{format_mmss, normalize_column, parse_mmss};
use pmt_core::{ClientCommand, ClockConfig, Content, SessionPlan, VTime, VirtualClock};
use pmt_core::engine::Engine;
use proptest::prelude::*;

proptest! {
    #[test]
    fn clock_round_trips(minute in 390u32..=1350) {
        let c = VirtualClock::new(ClockConfig::default()).unwrap();
        let real = c.to_real(VTime(minute)).unwrap();
        prop_assert_eq!(c.to_virtual(real as i64).unwrap(), VTime(minute));
        prop_assert_eq!(real, u64::from(minute - 390) * 3_000);
    }

    #[test]
    fn clock_is_monotone(a in 0i64..2_880_000, b in 0i64..2_880_000) {
        let c = VirtualClock::new(ClockConfig::default()).unwrap();
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(c.to_virtual(lo).unwrap() <= c.to_virtual(hi).unwrap());
    }

    #[test]
    fn fisher_interval_brackets_r(r in -0.999f64..0.999, n in 4usize..200) {
        let ci = fisher_ci(r, n, 0.95).unwrap();
        prop_assert!(-1.0 < ci.low && ci.low <= r && r <= ci.high && ci.high < 1.0);
        let wider = fisher_ci(r, n, 0.99).unwrap();
        prop_assert!(wider.low <= ci.low && ci.high <= wider.high);
        let more = fisher_ci(r, n + 10, 0.95).unwrap();
        prop_assert!(more.high - more.low <= ci.high - ci.low + 1e-12);
    }

    #[test]
    fn p_value_is_symmetric_and_bounded(r in -0.999f64..0.999, n in 3usize..200) {
        let p = p_value(r, n).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p - p_value(-r, n).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn pearson_ignores_positive_affine_maps(
        pts in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..30),
        a in 0.1f64..10.0,
        b in -50.0f64..50.0,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        if let Ok(r) = pearson(&x, &y) {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
            let x2: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            prop_assert!((pearson(&x2, &y).unwrap() - r).abs() < 1e-9);
            let y2: Vec<f64> = y.iter().map(|v| -v).collect();
            prop_assert!((pearson(&x, &y2).unwrap() + r).abs() < 1e-9);
        }
    }

    #[test]
    fn normalization_spans_unit_interval(v in prop::collection::vec(0i64..3600, 1..20)) {
        let n = normalize_column(&v).unwrap();
        let (lo, hi) = (*v.iter().min().unwrap(), *v.iter().max().unwrap());
        for (x, y) in v.iter().zip(&n) {
            prop_assert!((0.0..=1.0).contains(y));
            if lo != hi {
                prop_assert!((y - (x - lo) as f64 / (hi - lo) as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mmss_round_trips(secs in 0u64..6000) {
        prop_assert_eq!(parse_mmss(&format_mmss(secs)).unwrap(), secs as i64);
    }

    #[test]
    fn plan_sizes_hold_for_any_seed(seed in any::<u64>()) {
        let content = Content::defaults().unwrap();
        for (s, n) in [(5, 7), (6, 8), (7, 9), (8, 10)] {
            let plan = SessionPlan::build(s, &content, seed).unwrap();
            prop_assert_eq!(plan.tasks().len(), n);
            let mut times: Vec<u32> = plan.tasks().iter().filter_map(|t| t.designated_time).map(|d| d.minutes()).collect();
            times.sort_unstable();
            prop_assert!(times.windows(2).all(|w| w[1] - w[0] >= 60));
        }
    }
}

fn command(pick: u8, arg: usize, world: &[String]) -> ClientCommand {
    let name = world[arg % world.len()].clone();
    match pick % 6 {
        0 => ClientCommand::Move { to: name },
        1 => ClientCommand::Interact { object: name, action: None },
        2 => ClientCommand::SelectChoice { choice: name },
        3 => ClientCommand::StartDistractor { point: name },
        4 => ClientCommand::StopDistractor {},
        _ => ClientCommand::Interact { object: name.clone(), action: Some(name) },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn achievements_only_grow(seed in 0u64..1000, steps in prop::collection::vec((any::<u8>(), any::<usize>(), 0u64..20_000), 1..200)) {
        let content = Content::defaults().unwrap();
        let plan = SessionPlan::build(5 + (seed % 4) as u8, &content, seed).unwrap();
        let mut names: Vec<String> = plan.world.location_ids().to_vec();
        for t in plan.tasks() {
            names.push(t.target_object.clone());
            names.push(t.target_action.clone());
        }
        names.extend(plan.world.distractor_points().map(|d| d.id.clone()));
        let (mut e, _) = Engine::start(plan).unwrap();
        e.handle_command(&ClientCommand::AckBriefing {}).unwrap();
        let mut last = 0;
        for (pick, arg, wait) in steps {
            let _ = e.handle_command(&command(pick, arg, &names));
            e.tick(wait);
            let now = e.achieved_count();
            prop_assert!(now >= last);
            last = now;
            for o in e.outcomes() {
                prop_assert!(!o.achieved || o.executed_at.is_some());
            }
        }
        if let Some(rates) = e.rates() {
            let total = rates.total.unwrap();
            prop_assert!(total.achieved <= total.total);
        }
    }
}
