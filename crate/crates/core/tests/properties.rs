use std::collections::{BTreeSet, HashMap};

use betolo::experiments::synth::{random_in_ball, rng_from_seed};
use betolo::experiments::{
    absolute_loss_subgradient, kt_engine, preprocess, run_regression, synthesize_regression, ColumnSpec,
    RawTable, RegressionExample, RegressionSynth,
};
use betolo::oracle::{product_potential_from_scratch, FullTreeSnapshot, Round};
use betolo::side_info::{
    context_bits, context_from_bits, enumerate_suffix_trees, markov_context, validate_suffix_tree,
};
use betolo::{
    kt_bet_fraction, lambert_w, log_kt_potential, log_kt_potential_ratio, one_dim_kt_olo, product_dual_bound,
    Addition, Bettor, BinaryQuantizer, CoinBettingOlo, CtwBettor, KtBettor, Mixture, OloEngine, PerStateOgd,
    ProductKtBettor, Quantized, SideChannel, StateDriven, SuffixTree, Symbol,
};
use proptest::prelude::*;
use rand::Rng;

fn stream(seed: u64, rounds: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = rng_from_seed(seed);
    (0..rounds).map(|_| random_in_ball(&mut rng, dim)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn symbols() -> impl Strategy<Value = Vec<Symbol>> {
    prop::collection::vec(prop::bool::ANY, 0..12)
        .prop_map(|bs| bs.into_iter().map(|b| if b { Symbol::Plus } else { Symbol::Minus }).collect())
}

/// Plays a state-driven bettor with explicit states, returning actions.
fn play_states<B: Bettor + StateDriven>(
    e: &mut CoinBettingOlo<B>,
    grads: &[Vec<f64>],
    states: &[usize],
) -> Vec<Vec<f64>> {
    grads
        .iter()
        .zip(states)
        .map(|(g, &h)| {
            let a = e.action_in_state(h).unwrap();
            e.update(g).unwrap();
            a
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn kt_potential_is_even(t in 0u64..2000, frac in 0.0f64..=1.0) {
        let x = frac * t as f64;
        let a = log_kt_potential(t, x).unwrap().value();
        let b = log_kt_potential(t, -x).unwrap().value();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn kt_ratio_is_the_potential_difference(t in 0u64..=100, frac in 0.0f64..=1.0, step in -1.0f64..=1.0) {
        let x = frac * t as f64;
        let y = (x + step).abs();
        prop_assume!(y <= t as f64 + 1.0);
        let r = log_kt_potential_ratio(t, x, y).unwrap();
        let d = log_kt_potential(t + 1, y).unwrap().value() - log_kt_potential(t, x).unwrap().value();
        prop_assert!((r - d).abs() < 1e-12, "{} vs {}", r, d);
    }

    #[test]
    fn kt_bet_is_a_fraction(t in 1u64..10_000, frac in -1.0f64..=1.0) {
        let x = frac * (t - 1) as f64;
        let b = kt_bet_fraction(t, x).unwrap().value();
        prop_assert!(b.abs() < 1.0);
        prop_assert_eq!(b, x / t as f64);
    }

    #[test]
    fn kt_potential_is_midpoint_convex(t in 0u64..200, frac in -1.0f64..=1.0, g1 in -1.0f64..=1.0, g2 in -1.0f64..=1.0) {
        let x = frac * t as f64;
        let f = |g: f64| log_kt_potential(t + 1, x + g).unwrap().exp();
        let m = f(0.5 * (g1 + g2));
        prop_assert!(m <= 0.5 * (f(g1) + f(g2)) * (1.0 + 1e-12));
    }

    #[test]
    fn lambert_inverts_and_is_bracketed(e in -8.0f64..12.0) {
        let x = 10f64.powf(e);
        let w = lambert_w(x).unwrap();
        prop_assert!((w * w.exp() - x).abs() <= 1e-12 * x.max(1.0));
        let l = x.ln_1p();
        prop_assert!(0.6321 * l <= w && w <= l);
    }

    #[test]
    fn ledger_replays_from_the_action_log(seed: u64, rounds in 1usize..200, dim in 1usize..6) {
        let grads = stream(seed, rounds, dim);
        let mut e = CoinBettingOlo::new(KtBettor::new(dim), 1.5).unwrap();
        let mut w = 1.5;
        for g in &grads {
            let a = e.action();
            e.update(g).unwrap();
            w += dot(g, &a);
            prop_assert!((e.wealth() - w).abs() <= 1e-12 * w.abs().max(1.0));
            prop_assert!(e.wealth() > 0.0);
        }
        let lp = log_kt_potential(rounds as u64, norm(&grads.iter().fold(vec![0.0; dim], |mut s, g| {
            s.iter_mut().zip(g).for_each(|(a, b)| *a += b);
            s
        }))).unwrap().value();
        prop_assert!(e.log_wealth() - 1.5f64.ln() >= lp - 1e-9);
    }

    #[test]
    fn one_dim_engine_equals_vector_engine(seed: u64, rounds in 1usize..200) {
        let grads = stream(seed, rounds, 1);
        let scalars: Vec<f64> = grads.iter().map(|g| g[0]).collect();
        let (actions, trace) = one_dim_kt_olo(&scalars, 1.0).unwrap();
        let mut e = CoinBettingOlo::new(KtBettor::new(1), 1.0).unwrap();
        for (i, g) in grads.iter().enumerate() {
            prop_assert_eq!(e.action()[0], actions[i]);
            e.update(g).unwrap();
            prop_assert_eq!(e.wealth(), trace[i + 1]);
        }
    }

    #[test]
    fn sign_flip_leaves_wealth_unchanged(seed: u64, rounds in 1usize..100) {
        let grads = stream(seed, rounds, 1);
        let a: Vec<f64> = grads.iter().map(|g| g[0]).collect();
        let b: Vec<f64> = a.iter().map(|x| -x).collect();
        prop_assert_eq!(one_dim_kt_olo(&a, 1.0).unwrap().1, one_dim_kt_olo(&b, 1.0).unwrap().1);
    }

    #[test]
    fn actions_scale_with_initial_wealth(seed: u64, rounds in 1usize..100, c in 0.1f64..10.0) {
        let grads = stream(seed, rounds, 3);
        let mut a = CoinBettingOlo::new(KtBettor::new(3), 1.0).unwrap();
        let mut b = CoinBettingOlo::new(KtBettor::new(3), c).unwrap();
        for g in &grads {
            let wa = a.action();
            let wb = b.action();
            for (x, y) in wa.iter().zip(&wb) {
                prop_assert!((c * x - y).abs() <= 1e-12 * (1.0 + y.abs()));
            }
            a.update(g).unwrap();
            b.update(g).unwrap();
        }
    }

    #[test]
    fn quantizer_outputs_a_sign(g in prop::collection::vec(-1.0f64..1.0, 3), f in prop::collection::vec(-1.0f64..1.0, 3)) {
        prop_assume!(norm(&f) > 1e-6);
        let q = BinaryQuantizer::direction(f.clone()).unwrap();
        let s = q.quantize(&g).unwrap();
        let expect = if dot(&f, &g) >= 0.0 { Symbol::Plus } else { Symbol::Minus };
        prop_assert_eq!(s, expect);
    }

    #[test]
    fn context_bits_round_trip(ctx in symbols()) {
        prop_assert_eq!(context_from_bits(context_bits(&ctx), ctx.len()), ctx);
    }

    #[test]
    fn every_context_has_one_leaf(ctx in prop::collection::vec(prop::bool::ANY, 3..8)) {
        let ctx: Vec<Symbol> = ctx.into_iter().map(|b| if b { Symbol::Plus } else { Symbol::Minus }).collect();
        for d in 0..=3 {
            for tree in enumerate_suffix_trees(d).unwrap() {
                let leaf = tree.match_suffix(&ctx).unwrap();
                let hits = tree.leaves().iter().filter(|l| ctx.ends_with(l)).count();
                prop_assert_eq!(hits, 1);
                prop_assert!(ctx.ends_with(&tree.leaves()[leaf]));
            }
        }
    }

    #[test]
    fn markov_context_matches_the_perfect_tree(omega in symbols(), d in 0usize..5, extra in 0usize..3) {
        let t = omega.len() + 1 - extra.min(omega.len());
        let ctx = markov_context(&omega, t, d);
        prop_assert_eq!(ctx.len(), d);
        let tree = SuffixTree::perfect(d).unwrap();
        let leaf = tree.match_suffix(&ctx).unwrap();
        prop_assert_eq!(&tree.leaves()[leaf], &ctx);
    }

    #[test]
    fn suffix_tree_text_round_trips(d in 0usize..=3, pick: prop::sample::Index) {
        let trees = enumerate_suffix_trees(d).unwrap();
        let t = &trees[pick.index(trees.len())];
        let back = SuffixTree::parse(&t.to_text()).unwrap();
        prop_assert_eq!(back.leaves(), t.leaves());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn product_potential_matches_from_scratch(seed: u64, s in 1usize..9) {
        let grads = stream(seed, 100, 3);
        let mut rng = rng_from_seed(seed ^ 9);
        let states: Vec<usize> = (0..100).map(|_| rng.random_range(0..s)).collect();
        let mut e = CoinBettingOlo::new(ProductKtBettor::new(s, 3).unwrap(), 1.0).unwrap();
        play_states(&mut e, &grads, &states);
        let scratch = product_potential_from_scratch(&grads, &states, s).unwrap();
        prop_assert!((e.log_potential() - scratch).abs() < 1e-9);
        prop_assert!(e.log_wealth() >= scratch - 1e-9);
        let table = e.bettor().table();
        prop_assert_eq!(table.total_count(), 100);
        for k in 0..s {
            prop_assert!(table.stat(k).sum_norm() <= table.stat(k).count as f64 + 1e-12);
        }
    }

    #[test]
    fn product_state_isolation(seed: u64) {
        let grads = stream(seed, 60, 2);
        let states: Vec<usize> = (0..60).map(|i| (i * 7 + seed as usize) % 3).collect();
        // reverse the order of state 0's rounds, keep the others in place
        let idx: Vec<usize> = (0..60).filter(|&i| states[i] == 0).collect();
        let mut permuted = grads.clone();
        for (a, b) in idx.iter().zip(idx.iter().rev()) {
            permuted[*a] = grads[*b].clone();
        }
        let run = |gs: &[Vec<f64>]| {
            let mut e = CoinBettingOlo::new(ProductKtBettor::new(3, 2).unwrap(), 1.0).unwrap();
            play_states(&mut e, gs, &states);
            e.log_potential()
        };
        prop_assert!((run(&grads) - run(&permuted)).abs() < 1e-12);
    }

    #[test]
    fn single_state_reproduces_kt(seed: u64, rounds in 1usize..150) {
        let grads = stream(seed, rounds, 3);
        let mut kt = CoinBettingOlo::new(KtBettor::new(3), 1.0).unwrap();
        let mut ps = CoinBettingOlo::new(ProductKtBettor::new(1, 3).unwrap(), 1.0).unwrap();
        let mut p4 = CoinBettingOlo::new(ProductKtBettor::new(4, 3).unwrap(), 1.0).unwrap();
        for g in &grads {
            let a = kt.action();
            prop_assert_eq!(&ps.action_in_state(0).unwrap(), &a);
            prop_assert_eq!(&p4.action_in_state(2).unwrap(), &a);
            kt.update(g).unwrap();
            ps.update(g).unwrap();
            p4.update(g).unwrap();
            prop_assert_eq!(kt.wealth(), ps.wealth());
            prop_assert_eq!(kt.wealth(), p4.wealth());
        }
    }

    #[test]
    fn product_regret_within_dual_bound(seed: u64, s in 1usize..5, c in prop::collection::vec(0.0f64..5.0, 4)) {
        let grads = stream(seed, 200, 2);
        let mut rng = rng_from_seed(seed ^ 11);
        let states: Vec<usize> = (0..200).map(|_| rng.random_range(0..s)).collect();
        let mut e = CoinBettingOlo::new(ProductKtBettor::new(s, 2).unwrap(), 1.0).unwrap();
        play_states(&mut e, &grads, &states);
        let pairs = e.bettor().table().counts_and_norms();
        let comp: f64 = pairs.iter().zip(&c).map(|((_, f), ck)| ck * f).sum();
        let regret = comp - (e.wealth() - 1.0);
        let per: Vec<(u64, f64)> = pairs.iter().zip(&c).map(|((t, _), ck)| (*t, *ck)).collect();
        let bound = product_dual_bound(&per, 1.0).unwrap();
        prop_assert!(regret <= bound + 1e-9, "regret {} bound {}", regret, bound);
    }

    #[test]
    fn mixture_posterior_is_a_distribution(seed: u64, m in 1usize..5) {
        let mut rng = rng_from_seed(seed);
        let parts: Vec<_> = (0..m)
            .map(|k| Quantized::new(ProductKtBettor::new(2, 2).unwrap(),
                SideChannel::new(BinaryQuantizer::axis(2, k % 2).unwrap(), 1).unwrap()).unwrap())
            .collect();
        let mut e = CoinBettingOlo::new(Mixture::uniform(parts).unwrap(), 1.0).unwrap();
        for _ in 0..100 {
            let g = random_in_ball(&mut rng, 2);
            e.action();
            e.update(&g).unwrap();
            let p = e.bettor().posterior();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(e.log_wealth() >= e.log_potential() - 1e-9);
        }
    }

    #[test]
    fn identical_components_match_one(seed: u64, m in 1usize..4) {
        let grads = stream(seed, 100, 2);
        let part = || Quantized::new(ProductKtBettor::new(2, 2).unwrap(),
            SideChannel::new(BinaryQuantizer::axis(2, 0).unwrap(), 1).unwrap()).unwrap();
        let mut mix = CoinBettingOlo::new(Mixture::uniform((0..m).map(|_| part()).collect()).unwrap(), 1.0).unwrap();
        let mut one = CoinBettingOlo::new(part(), 1.0).unwrap();
        for g in &grads {
            let a = mix.action();
            let b = one.action();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
            }
            mix.update(g).unwrap();
            one.update(g).unwrap();
        }
    }

    #[test]
    fn addition_dominates_each_engine(seed: u64) {
        let grads = stream(seed, 200, 2);
        let ctw = |axis| Box::new(CoinBettingOlo::new(
            Quantized::new(CtwBettor::new(2, 2).unwrap(),
                SideChannel::new(BinaryQuantizer::axis(2, axis).unwrap(), 2).unwrap()).unwrap(), 1.0).unwrap()) as Box<dyn OloEngine>;
        let mut add = Addition::new(vec![ctw(0), ctw(1), Box::new(kt_engine(2, 1.0).unwrap())]).unwrap();
        let mut solo = [ctw(0), ctw(1), Box::new(kt_engine(2, 1.0).unwrap()) as Box<dyn OloEngine>];
        let mut total = 0.0;
        let mut each = [0.0; 3];
        for g in &grads {
            let a = add.action().unwrap();
            let mut sum = vec![0.0; 2];
            for (k, e) in solo.iter_mut().enumerate() {
                let w = e.action().unwrap();
                each[k] += dot(g, &w);
                sum.iter_mut().zip(&w).for_each(|(s, x)| *s += x);
                e.update(g).unwrap();
            }
            for (x, y) in a.iter().zip(&sum) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
            }
            total += dot(g, &a);
            add.update(g).unwrap();
        }
        for r in each {
            prop_assert!(total >= r - 2.0 - 1e-9);
        }
    }

    #[test]
    fn ctw_depth_zero_is_kt(seed: u64, rounds in 1usize..200) {
        let grads = stream(seed, rounds, 3);
        let mut kt = CoinBettingOlo::new(KtBettor::new(3), 1.0).unwrap();
        let mut ctw = CoinBettingOlo::new(CtwBettor::new(0, 3).unwrap(), 1.0).unwrap();
        for g in &grads {
            prop_assert_eq!(kt.action(), ctw.action());
            kt.update(g).unwrap();
            ctw.update(g).unwrap();
            prop_assert_eq!(kt.wealth(), ctw.wealth());
        }
    }

    #[test]
    fn ctw_wealth_bound_and_lazy_storage(seed: u64, depth in 1usize..=6) {
        let grads = stream(seed, 300, 2);
        let mut rng = rng_from_seed(seed ^ 5);
        let mut e = CoinBettingOlo::new(CtwBettor::new(depth, 2).unwrap(), 1.0).unwrap();
        for g in &grads {
            let state = rng.random_range(0..1usize << depth);
            e.action_in_state(state).unwrap();
            let before: HashMap<u64, _> = e.bettor().tree().nodes().map(|(k, n)| (k, n.clone())).collect();
            e.update(g).unwrap();
            // only the active path changed
            let touched: BTreeSet<u64> = (0..=depth)
                .map(|d| betolo::ContextTree::key(d, state as u64))
                .collect();
            for (k, n) in e.bettor().tree().nodes() {
                if !touched.contains(&k) {
                    prop_assert_eq!(before.get(&k), Some(n));
                }
            }
        }
        prop_assert!(e.bettor().tree().node_count() <= (depth + 1) * 300);
        let lp = e.bettor().tree().log_potential().unwrap();
        prop_assert!((lp - e.log_potential()).abs() < 1e-8);
        prop_assert!(e.log_wealth() >= lp - 1e-9);
    }

    #[test]
    fn ctw_is_deterministic(seed: u64) {
        let grads = stream(seed, 200, 2);
        let run = || {
            let mut e = CoinBettingOlo::new(Quantized::new(CtwBettor::new(3, 2).unwrap(),
                SideChannel::new(BinaryQuantizer::axis(2, 1).unwrap(), 3).unwrap()).unwrap(), 1.0).unwrap();
            grads.iter().map(|g| { let a = e.action(); e.update(g).unwrap(); (a, e.wealth()) }).collect::<Vec<_>>()
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn snapshot_internal_nodes_sum_children(seed: u64, depth in 0usize..5) {
        let grads = stream(seed, 150, 2);
        let q = BinaryQuantizer::axis(2, 0).unwrap();
        let mut omega = Vec::new();
        let mut history = Vec::new();
        for (i, g) in grads.iter().enumerate() {
            history.push(Round { context: markov_context(&omega, i + 1, depth), gradient: g.clone() });
            omega.push(q.quantize(g).unwrap());
        }
        let snap = FullTreeSnapshot::from_history(&history, depth).unwrap();
        let (sum, count) = snap.max_child_sum_defect();
        prop_assert!(sum < 1e-12);
        prop_assert_eq!(count, 0);
    }

    #[test]
    fn regression_traces_are_sane(seed: u64, markov: bool) {
        let kind = if markov {
            RegressionSynth::MarkovSign { dim: 3, order: 2, flip: 0.8 }
        } else {
            RegressionSynth::Iid { dim: 4, noise: 0.1 }
        };
        let data = synthesize_regression(&kind, 300, seed).unwrap();
        prop_assert_eq!(&data, &synthesize_regression(&kind, 300, seed).unwrap());
        for ex in &data {
            prop_assert!((norm(&ex.x) - 1.0).abs() < 1e-9);
        }
        let dim = data[0].x.len();
        let mut engine = CoinBettingOlo::new(
            Quantized::new(CtwBettor::new(2, dim).unwrap(),
                SideChannel::new(BinaryQuantizer::axis(dim, dim - 1).unwrap(), 2).unwrap()).unwrap(), 1.0).unwrap();
        let rows = run_regression(&mut engine, &data).unwrap();
        let mut prev = 0.0;
        for r in &rows {
            prop_assert!(r.cum_loss >= prev && r.cum_loss.is_finite());
            prev = r.cum_loss;
        }
    }

    #[test]
    fn fed_gradients_stay_in_the_ball(
        w in prop::collection::vec(-10.0f64..10.0, 3),
        x in prop::collection::vec(-1.0f64..1.0, 3),
        y in -5.0f64..5.0,
    ) {
        let n = norm(&x).max(1.0);
        let x: Vec<f64> = x.iter().map(|v| v / n).collect();
        let g = absolute_loss_subgradient(&w, &x, y);
        prop_assert!((norm(&g) - norm(&x)).abs() < 1e-15);
    }

    #[test]
    fn preprocessed_rows_have_unit_norm(rows in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 3), 1..20)) {
        let mut csv = String::from("a,b,y\n");
        for r in &rows {
            csv.push_str(&format!("{},{},{}\n", r[0], r[1], r[2]));
        }
        let table = RawTable::from_reader(csv.as_bytes()).unwrap();
        let spec = ColumnSpec { target: "y".into(), ..Default::default() };
        let ex: Vec<RegressionExample> = preprocess(&table, &spec).unwrap();
        for e in ex {
            prop_assert!((norm(&e.x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ogd_with_zero_step_stays_put(seed: u64) {
        let grads = stream(seed, 50, 2);
        let mut e = PerStateOgd::new(2, 2, 0.0).unwrap();
        for (i, g) in grads.iter().enumerate() {
            e.set_state(i % 2).unwrap();
            prop_assert_eq!(e.action().unwrap(), vec![0.0, 0.0]);
            e.update(g).unwrap();
        }
    }
}

/// Among all sets of strings of length at most 2, exactly the enumerated
/// trees are accepted.
#[test]
fn validation_accepts_exactly_the_enumerated_trees() {
    let mut strings: Vec<Vec<Symbol>> = vec![vec![]];
    for len in 1..=2 {
        for bits in 0..(1u64 << len) {
            strings.push(context_from_bits(bits, len));
        }
    }
    let expected: BTreeSet<BTreeSet<Vec<Symbol>>> = (0..=2)
        .flat_map(|d| enumerate_suffix_trees(d).unwrap())
        .map(|t| t.leaves().iter().cloned().collect())
        .collect();
    let mut accepted = BTreeSet::new();
    for mask in 1u32..(1 << strings.len()) {
        let set: Vec<Vec<Symbol>> = (0..strings.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| strings[i].clone())
            .collect();
        if validate_suffix_tree(&set).is_ok() {
            accepted.insert(set.into_iter().collect::<BTreeSet<_>>());
        }
    }
    assert_eq!(accepted, expected);
}
