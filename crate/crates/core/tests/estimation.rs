use cvqkd_core::finite_size::{
    asymptotic_key_rate, delta_aep, epsilon_budget, key_length, pe_moments, AttackClass, SecurityBudget,
};
use cvqkd_core::{Execution, MemoryParams, SystemModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn fig2(tau: f64) -> SystemModel {
    SystemModel::new(3.0, 0.1, 0.01, 0.6, 0.015, MemoryParams::symmetric(tau, 1.0)).unwrap()
}

/// Empirical per-sample variances of `x^2`, `y^2`, `xy` over `samples`
/// correlated Gaussian pairs, scaled to standard deviations of sums over
/// `2n` components.
fn monte_carlo_stds(sa2: f64, sb2: f64, c: f64, samples: usize, two_n: f64, seed: u64) -> [f64; 3] {
    let chunks: Vec<u64> = (0..20).collect();
    let per_chunk = samples / chunks.len();
    let terms = Execution::Parallel.map(&chunks, |&k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k));
        let (a, b) = (sa2.sqrt(), c / sa2.sqrt());
        let resid = (sb2 - b * b).sqrt();
        (0..per_chunk)
            .map(|_| {
                let z1: f64 = StandardNormal.sample(&mut rng);
                let z2: f64 = StandardNormal.sample(&mut rng);
                let x = a * z1;
                let y = b * z1 + resid * z2;
                [x * x, y * y, x * y]
            })
            .collect::<Vec<_>>()
    });
    let terms: Vec<[f64; 3]> = terms.into_iter().flatten().collect();
    let m = terms.len() as f64;
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mean = terms.iter().map(|t| t[k]).sum::<f64>() / m;
        let var = terms.iter().map(|t| (t[k] - mean).powi(2)).sum::<f64>() / (m - 1.0);
        *o = (two_n * var).sqrt();
    }
    out
}

#[test]
fn moment_stds_match_monte_carlo() {
    let pm = pe_moments(&fig2(0.5)).unwrap();
    let n = 1e9;
    let st = pm.statistics(n);
    let mc = monte_carlo_stds(pm.sigma_a2, pm.sigma_b2, pm.c_ab, 200_000, 2.0 * n, 7);
    for (emp, model) in mc.iter().zip([st.std_norm_x2, st.std_norm_y2, st.std_inner_xy]) {
        assert!((emp / model - 1.0).abs() < 0.05, "{emp} vs {model}");
    }
}

#[test]
fn individual_finite_rate_gap_shrinks_with_n() {
    let m = fig2(0.1);
    let asym = asymptotic_key_rate(&m, AttackClass::Individual, 0.98, Execution::Sequential).unwrap().rate;
    let gaps: Vec<f64> = [1e7, 1e9, 1e11]
        .iter()
        .map(|&n| {
            let b = SecurityBudget { n, ..Default::default() };
            asym - key_length(&m, AttackClass::Individual, &b, Execution::Sequential).unwrap().rate
        })
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] > 0.0, "{gaps:?}");
    assert!(gaps[0] / gaps[1] >= 2.5 && gaps[1] / gaps[2] >= 2.5, "{gaps:?}");
}

#[test]
fn penalty_per_mode_at_default_budget() {
    let b = SecurityBudget::default();
    let i = epsilon_budget(AttackClass::Individual, &b, 3.0).unwrap();
    let c = epsilon_budget(AttackClass::Coherent, &b, 3.0).unwrap();
    let n = b.modes();
    assert!((delta_aep(n, b.d, i.eps_sm, i.eps) / n - 0.007_147).abs() < 1e-5);
    assert!((delta_aep(n, b.d, c.eps_sm, c.eps) / n - 0.028_665).abs() < 1e-5);
}

#[test]
fn delta_decreasing_in_smoothing_below_half_eps() {
    for eps in [1e-6, 1e-42] {
        let vals: Vec<f64> = (1..=500)
            .map(|k| delta_aep(2e9, 5.0, eps * k as f64 / 1000.0, eps))
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]), "eps = {eps}");
    }
}
