use nalgebra::{DMatrix, DVector};
use nsglb::estimators::{
    score, solve_penalized_mle, weighted_reward_sum, DiscountedState, SlidingWindowState, WeightedHistory,
};
use nsglb::linalg::{mahalanobis_norm, min_eigenvalue};
use nsglb::LinkFunction;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_action(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    let a = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
    let n = a.norm();
    if n > 1.0 {
        a / n
    } else {
        a
    }
}

fn bernoulli_reward(rng: &mut ChaCha8Rng, a: &DVector<f64>, theta: &DVector<f64>) -> f64 {
    if rng.random::<f64>() < LinkFunction::Logistic.evaluate(a.dot(theta)) {
        1.0
    } else {
        0.0
    }
}

fn residual_ok<H: WeightedHistory<f64>>(h: &H, link: LinkFunction, lambda: f64, theta: &DVector<f64>) -> bool {
    let scale = weighted_reward_sum(h).norm().max(1.0);
    score(theta, h, link, lambda).norm() <= 1e-10 * scale
}

#[test]
fn score_residual_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..1000 {
        let d = rng.random_range(1..=5);
        let n = rng.random_range(0..=50);
        let lambda = rng.random_range(0.05..3.0);
        let link = if case % 4 == 3 { LinkFunction::Identity } else { LinkFunction::Logistic };
        let theta_star = DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0));
        let mut sw = SlidingWindowState::new(d, Some(rng.random_range(1..=60)), lambda, 1.0).unwrap();
        let mut disc = DiscountedState::new(d, rng.random_range(0.5..0.999), lambda, 1.0).unwrap();
        for _ in 0..n {
            let a = random_action(&mut rng, d);
            let x = bernoulli_reward(&mut rng, &a, &theta_star);
            sw.push(a.clone(), x).unwrap();
            disc.push(a, x).unwrap();
        }
        let fit = solve_penalized_mle(&sw, link, lambda, None).unwrap();
        assert!(residual_ok(&sw, link, lambda, &fit.theta), "sw case {case}");
        let fit = solve_penalized_mle(&disc, link, lambda, None).unwrap();
        assert!(residual_ok(&disc, link, lambda, &fit.theta), "discounted case {case}");
    }
}

#[test]
fn newton_from_random_starts_agrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let d = rng.random_range(1..=5);
        let theta_star = DVector::from_fn(d, |_, _| rng.random_range(-1.5..1.5));
        let mut disc = DiscountedState::new(d, 0.9, 1.0, 1.0).unwrap();
        for _ in 0..rng.random_range(1..=50) {
            let a = random_action(&mut rng, d);
            let x = bernoulli_reward(&mut rng, &a, &theta_star);
            disc.push(a, x).unwrap();
        }
        let reference = solve_penalized_mle(&disc, LinkFunction::Logistic, 0.5, None).unwrap().theta;
        for _ in 0..5 {
            let start = DVector::from_fn(d, |_, _| rng.random_range(-10.0..10.0));
            let fit = solve_penalized_mle(&disc, LinkFunction::Logistic, 0.5, Some(&start)).unwrap();
            assert!((fit.theta - &reference).amax() <= 1e-8);
        }
    }
}

#[test]
fn forgetting_limits_agree_with_unwindowed_mle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..50 {
        let d = rng.random_range(1..=4);
        let n = rng.random_range(1..=50);
        let theta_star = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let mut full = SlidingWindowState::new(d, None, 1.0, 1.0).unwrap();
        let mut sw = SlidingWindowState::new(d, Some(n), 1.0, 1.0).unwrap();
        let mut disc = DiscountedState::new(d, 1.0 - 1e-12, 1.0, 1.0).unwrap();
        for _ in 0..n {
            let a = random_action(&mut rng, d);
            let x = bernoulli_reward(&mut rng, &a, &theta_star);
            full.push(a.clone(), x).unwrap();
            sw.push(a.clone(), x).unwrap();
            disc.push(a, x).unwrap();
        }
        let reference = solve_penalized_mle(&full, LinkFunction::Logistic, 1.0, None).unwrap().theta;
        let a = solve_penalized_mle(&sw, LinkFunction::Logistic, 1.0, None).unwrap().theta;
        let b = solve_penalized_mle(&disc, LinkFunction::Logistic, 1.0, None).unwrap().theta;
        assert!((a - &reference).amax() <= 1e-6);
        assert!((b - &reference).amax() <= 1e-6);
    }
}

#[test]
fn eviction_equals_fresh_fit_on_retained_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let theta_star = DVector::from_vec(vec![0.7, -0.4, 0.2]);
    let mut sw = SlidingWindowState::new(3, Some(25), 2.0, 1.0).unwrap();
    for round in 0..200 {
        let a = random_action(&mut rng, 3);
        let x = bernoulli_reward(&mut rng, &a, &theta_star);
        sw.push(a, x).unwrap();
        if round % 20 == 19 {
            let mut fresh = SlidingWindowState::new(3, Some(25), 2.0, 1.0).unwrap();
            for o in sw.buffer() {
                fresh.push(o.action.clone(), o.reward).unwrap();
            }
            let a = solve_penalized_mle(&sw, LinkFunction::Logistic, 1.0, None).unwrap().theta;
            let b = solve_penalized_mle(&fresh, LinkFunction::Logistic, 1.0, None).unwrap().theta;
            assert_eq!(a, b);
        }
    }
}

#[test]
fn matrix_recursions_match_batch_after_500_updates() {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    let d = 3;
    let (tau, gamma, reg) = (40usize, 0.985, 1.0 / 0.2);
    let mut sw = SlidingWindowState::new(d, Some(tau), reg, 1.0).unwrap();
    let mut disc = DiscountedState::new(d, gamma, reg, 1.0).unwrap();
    let mut pushed = Vec::new();
    for _ in 0..500 {
        let a = random_action(&mut rng, d);
        pushed.push(a.clone());
        sw.push(a.clone(), 1.0).unwrap();
        disc.push(a, 0.0).unwrap();
    }
    let t = pushed.len();
    let mut v = DMatrix::identity(d, d) * reg;
    for a in &pushed[t - tau..] {
        v += a * a.transpose();
    }
    let mut w = DMatrix::identity(d, d) * reg;
    let mut wt = w.clone();
    for (s, a) in pushed.iter().enumerate() {
        let age = (t - 1 - s) as i32;
        w += a * a.transpose() * gamma.powi(age);
        wt += a * a.transpose() * gamma.powi(2 * age);
    }
    assert!((sw.gram() - v).amax() <= 1e-9);
    assert!((disc.w() - w).amax() <= 1e-9);
    assert!((disc.w_tilde() - wt).amax() <= 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn discounted_matrices_ordered(
        seed in any::<u64>(),
        gamma in 0.5f64..0.999,
        reg in 0.1f64..10.0,
        n in 1usize..120,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut disc = DiscountedState::new(2, gamma, reg, 1.0).unwrap();
        for _ in 0..n {
            disc.push(random_action(&mut rng, 2), 1.0).unwrap();
            prop_assert!(min_eigenvalue(&(disc.w() - disc.w_tilde())) >= -1e-9);
            prop_assert!(min_eigenvalue(disc.w_tilde()) >= reg - 1e-9);
        }
        let probe = random_action(&mut rng, 2);
        let a = mahalanobis_norm(&probe, disc.w()).unwrap();
        let b = mahalanobis_norm(&probe, disc.w_tilde()).unwrap();
        prop_assert!(a <= b + 1e-12);
    }

    #[test]
    fn window_gram_tracks_buffer(seed in any::<u64>(), tau in 1usize..30, n in 0usize..100) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sw = SlidingWindowState::new(3, Some(tau), 1.0, 1.0).unwrap();
        for _ in 0..n {
            sw.push(random_action(&mut rng, 3), 0.0).unwrap();
        }
        prop_assert!(sw.len() <= tau);
        prop_assert!((sw.gram() - sw.batch_gram()).amax() <= 1e-9);
        prop_assert!(min_eigenvalue(sw.gram()) >= 1.0 - 1e-9);
    }
}
