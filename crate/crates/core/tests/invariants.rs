//! Property tests for the cross-module invariants.

use banditlab::env::{ArmDistribution, EnvironmentSpec};
use banditlab::policies::adversarial::{exp3_probs, exp4_probs};
use banditlab::policies::contextual::{wls_fit, RidgeState};
use banditlab::policies::extended::mp_ts_select;
use banditlab::policies::nonstationary::{kalman_idle, kalman_update, DiscountedStats, KalmanArm, PageHinkley, WindowBuffer};
use banditlab::policies::sampling::{PosteriorBank, PriorSpec};
use banditlab::policies::ucb::{bayes_ucb_index, kl_ucb_upper, moss_index, ucb1_index, ucb_tuned_index};
use banditlab::regret::{self, bootstrap_interval, IntervalMethod, StatisticalRegret};
use banditlab::{ArmId, ArmStats, PullLog, RngStream};
use proptest::prelude::*;

fn env(ps: &[f64]) -> banditlab::env::Environment {
    EnvironmentSpec::Stochastic {
        arms: ps.iter().map(|&p| ArmDistribution::bernoulli(p)).collect(),
    }
    .build()
    .unwrap()
}

fn log_of(plays: &[(usize, bool)]) -> PullLog {
    let mut log = PullLog::new();
    for &(arm, win) in plays {
        log.record_arms(vec![ArmId(arm)], vec![if win { 1.0 } else { 0.0 }], None)
            .unwrap();
    }
    log
}

fn normalized(p: &[f64]) -> bool {
    (p.iter().sum::<f64>() - 1.0).abs() < 1e-12 && p.iter().all(|&x| (0.0..=1.0 + 1e-12).contains(&x))
}

proptest! {
    #[test]
    fn exp3_probabilities_sum_to_one(w in prop::collection::vec(1e-9f64..1e9, 2..20), gamma in 0.0f64..=1.0) {
        let p = exp3_probs(&w, gamma);
        prop_assert!(normalized(&p));
        prop_assert!(p.iter().all(|&x| x >= gamma / w.len() as f64 - 1e-15));
    }

    #[test]
    fn exp4_probabilities_sum_to_one(
        k in 2usize..8,
        raw in prop::collection::vec(prop::collection::vec(0.01f64..1.0, 8), 1..6),
        w in prop::collection::vec(1e-6f64..1e6, 6),
        gamma in 0.0f64..=1.0,
    ) {
        let advice: Vec<Vec<f64>> = raw
            .iter()
            .map(|row| {
                let s: f64 = row[..k].iter().sum();
                row[..k].iter().map(|x| x / s).collect()
            })
            .collect();
        let p = exp4_probs(&w[..advice.len()], &advice, gamma);
        prop_assert!(normalized(&p));
    }

    #[test]
    fn optimistic_indices_dominate_the_mean(
        wins in 0u64..500,
        extra in 1u64..500,
        t_extra in 0u64..100_000,
    ) {
        let n = wins + extra;
        let t = n + t_extra + 1;
        let mean = wins as f64 / n as f64;
        prop_assert!(ucb1_index(mean, n, t) >= mean);
        prop_assert!(kl_ucb_upper(mean, n, t, 0.0) >= mean);
        prop_assert!(kl_ucb_upper(mean, n, t, 0.0) <= 1.0);
        prop_assert!(moss_index(mean, n, t, 3) >= mean);
        let rewards: Vec<f64> = (0..n).map(|i| if i < wins { 1.0 } else { 0.0 }).collect();
        let stats = ArmStats::from_rewards(&rewards).unwrap();
        prop_assert!(ucb_tuned_index(&stats, t) >= stats.mean());
        let (a, b) = (1.0 + wins as f64, 1.0 + (n - wins) as f64);
        prop_assert!(bayes_ucb_index(a, b, t.max(2)) >= a / (a + b) - 1e-9);
    }

    #[test]
    fn mp_ts_picks_distinct_arms(m in 1usize..6, seed in any::<u64>()) {
        let bank = PosteriorBank::new(6, PriorSpec::default()).unwrap();
        let mut rng = RngStream::new(seed, 0);
        let d = mp_ts_select(&bank, m, &mut rng).unwrap();
        let mut arms: Vec<usize> = d.arms.iter().map(|a| a.0).collect();
        arms.sort_unstable();
        arms.dedup();
        prop_assert_eq!(arms.len(), m);
    }

    #[test]
    fn regret_series_are_monotone(plays in prop::collection::vec((0usize..3, any::<bool>()), 1..300)) {
        let e = env(&[0.8, 0.5, 0.3]);
        let log = log_of(&plays);
        let ee = regret::expected_expected_regret(&log, &e).unwrap();
        let sub = regret::suboptimal_plays(&log, &e).unwrap();
        prop_assert_eq!(ee.len(), plays.len());
        prop_assert!(ee.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(sub.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(sub.windows(2).all(|w| w[1] - w[0] <= 1));
    }

    #[test]
    fn deterministic_arms_make_ee_equal_ep(plays in prop::collection::vec(0usize..3, 1..200)) {
        let e = EnvironmentSpec::Adversarial { rewards: vec![vec![1.0, 0.25, 0.0]; plays.len()] }
            .build()
            .unwrap();
        let mut log = PullLog::new();
        for &a in &plays {
            log.record_arms(vec![ArmId(a)], vec![[1.0, 0.25, 0.0][a]], None).unwrap();
        }
        let ee = regret::expected_expected_regret(&log, &e).unwrap();
        let ep = regret::expected_payoff_regret(&log, &e).unwrap();
        prop_assert_eq!(ee, ep);
    }

    #[test]
    fn statistical_interval_is_ordered(plays in prop::collection::vec((0usize..2, any::<bool>()), 4..200), seed in any::<u64>()) {
        let log = log_of(&plays);
        let mut rng = RngStream::new(seed, 2);
        for method in [IntervalMethod::Parametric, IntervalMethod::Bootstrap { resamples: 200 }] {
            if let StatisticalRegret::Defined { lo, hi } =
                regret::statistical_regret(&log, 2, 0.9, method, &mut rng).unwrap()
            {
                prop_assert!(lo.iter().zip(&hi).all(|(l, h)| l <= h));
            }
        }
    }

    #[test]
    fn bootstrap_of_a_constant_is_a_point(x in -5.0f64..5.0, n in 1usize..50, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 2);
        let (lo, hi) = bootstrap_interval(&vec![x; n], 0.9, 500, &mut rng).unwrap();
        prop_assert_eq!(lo, hi);
        prop_assert!((lo - x).abs() <= 1e-12 * x.abs().max(1.0));
    }

    #[test]
    fn kalman_variance_reaches_its_fixed_point(ob in 0.01f64..2.0, tr in 1e-4f64..0.5, x in 0.0f64..1.0) {
        let mut a = KalmanArm { mu: 0.5, var: 0.25 };
        for _ in 0..5_000 {
            a = kalman_update(a, x, ob, tr);
        }
        let prior = (tr + (tr * tr + 4.0 * tr * ob).sqrt()) / 2.0;
        prop_assert!((a.var + tr - prior).abs() < 1e-9);
    }

    #[test]
    fn kalman_variance_shrinks_without_drift(ob in 0.01f64..2.0, var in 0.01f64..1.0) {
        let mut a = KalmanArm { mu: 0.0, var };
        for _ in 0..50 {
            let next = kalman_update(a, 1.0, ob, 0.0);
            prop_assert!(next.var < a.var);
            a = next;
        }
    }

    #[test]
    fn idle_kalman_arms_grow_uncertain(var in 0.0f64..1.0, tr in 0.0f64..0.5) {
        let a = KalmanArm { mu: 0.3, var };
        let b = kalman_idle(a, tr);
        prop_assert!(b.var >= a.var);
        prop_assert_eq!(b.mu, a.mu);
    }

    #[test]
    fn page_hinkley_is_scale_covariant(
        xs in prop::collection::vec(0.0f64..1.0, 10..400),
        e in -30i32..30,
        delta in 0.0f64..0.1,
        lambda in 0.05f64..5.0,
    ) {
        let s = 2f64.powi(e);
        let mut p = PageHinkley::new(delta, lambda).unwrap();
        let mut q = PageHinkley::new(delta * s, lambda * s).unwrap();
        for &x in &xs {
            prop_assert_eq!(p.update(x), q.update(x * s));
        }
    }

    #[test]
    fn ridge_incremental_matches_batch(
        rows in prop::collection::vec((prop::collection::vec(-1.0f64..1.0, 4), -3.0f64..3.0, 0.1f64..2.0), 1..120),
        lambda in 0.1f64..5.0,
    ) {
        let mut s = RidgeState::new(4, lambda).unwrap();
        for (x, y, w) in &rows {
            s.update_weighted(x, *y, *w).unwrap();
        }
        let batch = wls_fit(&rows, 4, lambda).unwrap().theta();
        // Independent solve of (λI + Σ w x xᵀ) θ = Σ w y x.
        let mut a = nalgebra::DMatrix::<f64>::identity(4, 4) * lambda;
        let mut b = nalgebra::DVector::<f64>::zeros(4);
        for (x, y, w) in &rows {
            let v = nalgebra::DVector::from_column_slice(x);
            a += &v * v.transpose() * *w;
            b += v * (*w * *y);
        }
        let direct = a.lu().solve(&b).unwrap();
        let inc = s.theta();
        for i in 0..4 {
            prop_assert!((inc[i] - batch[i]).abs() <= 1e-8);
            prop_assert!((inc[i] - direct[i]).abs() <= 1e-8);
        }
    }

    #[test]
    fn window_never_holds_stale_entries(tau in 1usize..50, steps in 1usize..3_000) {
        let mut w = WindowBuffer::new(2, Some(tau)).unwrap();
        for t in 1..=steps {
            w.push(t % 2, t as f64);
            prop_assert_eq!(w.len(), t.min(tau));
            let (_, oldest) = w.oldest().unwrap();
            prop_assert!(oldest as usize + tau > t);
            prop_assert_eq!((w.count(0) + w.count(1)) as usize, w.len());
        }
    }

    #[test]
    fn discounted_counts_stay_below_the_geometric_limit(gamma in 0.5f64..0.999, arms in prop::collection::vec(0usize..3, 1..2_000)) {
        let mut d = DiscountedStats::new(3, gamma).unwrap();
        for &a in &arms {
            d.push(a, 1.0);
            prop_assert!(d.total() <= 1.0 / (1.0 - gamma) + 1e-9);
            prop_assert!(d.count(a) <= d.total() + 1e-12);
        }
    }
}
