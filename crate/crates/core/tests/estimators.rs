use std::collections::HashSet;

use svarm::games::{ShoeGame, SougGame};
use svarm::{
    build_ptilde, exact_calculation, exact_shapley, harmonic, seeded_rng, stratified_min_budget, stratified_svarm,
    stratified_svarm_plus, svarm, svarm_warmup, warmup_budget, warmup_negative, warmup_positive, Algorithm,
    BudgetedGame, SignedEstimates, SizeLaw, StratumTable,
};

#[derive(Default, Clone, Copy)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn var(&self) -> f64 {
        self.m2 / (self.n - 1) as f64
    }

    fn se(&self) -> f64 {
        (self.var() / self.n as f64).sqrt()
    }
}

const RUNS: u64 = 4000;

#[test]
fn sampling_estimators_are_unbiased() {
    let n = 6;
    let game = SougGame::generate(&mut seeded_rng(2024), n, 50).unwrap();
    let truth = exact_shapley(&game).unwrap();
    for algo in [
        Algorithm::Svarm,
        Algorithm::StratifiedSvarm,
        Algorithm::StratifiedSvarmUniform,
        Algorithm::ApproShapley,
    ] {
        let mut per_player = vec![Moments::default(); n];
        for run in 0..RUNS {
            let mut metered = BudgetedGame::with_limit(&game, 60);
            let phi = algo.run(&mut metered, 60, &mut seeded_rng(run)).unwrap();
            for (m, v) in per_player.iter_mut().zip(phi.iter()) {
                m.push(*v);
            }
        }
        for (i, m) in per_player.iter().enumerate() {
            let z = (m.mean - truth[i]) / m.se();
            assert!(z.abs() < 4.0, "{algo} player {i}: mean {} vs {} (z = {z:.2})", m.mean, truth[i]);
        }
    }
}

#[test]
fn svarm_positive_counters_follow_binomial_mean() {
    let n = 6;
    let budget = 60;
    let t_bar = (budget - 2 * n) as f64;
    let game = ShoeGame::new(n as usize).unwrap();
    let mut counts = vec![Moments::default(); n as usize];
    for run in 0..RUNS {
        let mut metered = BudgetedGame::with_limit(&game, budget);
        let out = svarm(&mut metered, budget, &mut seeded_rng(run)).unwrap();
        for (m, &c) in counts.iter_mut().zip(&out.estimates.c_plus) {
            m.push((c - 1) as f64);
        }
    }
    let expected = t_bar / (2.0 * harmonic(n as usize).unwrap());
    for (i, m) in counts.iter().enumerate() {
        assert!((m.mean - expected).abs() < 3.0 * m.se(), "player {i}: {} vs {expected}", m.mean);
    }
}

/// Counts main-loop updates per stratum by replaying the evaluations made
/// after the exact border pass and both warm-ups.
#[test]
fn stratified_counters_follow_size_law() {
    let n = 6;
    let budget = 60u64;
    let w = stratified_min_budget(n);
    let t_bar = (budget - w) as f64;
    let ptilde = build_ptilde(n).unwrap();
    let game = SougGame::generate(&mut seeded_rng(5), n, 20).unwrap();
    let mut plus = vec![Moments::default(); n * n];
    let mut minus = vec![Moments::default(); n * n];
    for run in 0..RUNS {
        let mut metered = BudgetedGame::with_limit(&game, budget).traced();
        stratified_svarm(&mut metered, budget, &mut seeded_rng(run), SizeLaw::Tailored).unwrap();
        let trace = metered.take_trace().unwrap();
        assert_eq!(trace.len() as u64, budget);
        let mut replay = StratumTable::new(n);
        for &(a, v) in &trace[w as usize..] {
            replay.update(a, v);
        }
        for i in 0..n {
            for l in 0..n {
                plus[i * n + l].push(replay.c_plus(i, l) as f64);
                let preset = if l == 0 { 1.0 } else { 0.0 };
                minus[i * n + l].push(replay.c_minus(i, l) as f64 - preset);
            }
        }
    }
    let bound = t_bar / (2.0 * n as f64 * (n as f64).ln());
    for i in 0..n {
        for l in 1..=n - 3 {
            let m = &plus[i * n + l];
            let expected = t_bar * (l + 1) as f64 / n as f64 * ptilde.prob(l + 1);
            assert!((m.mean - expected).abs() < 3.0 * m.se().max(1e-9), "+({i},{l}): {} vs {expected}", m.mean);
            assert!(m.mean >= bound - 3.0 * m.se());
        }
        for l in 2..=n - 2 {
            let m = &minus[i * n + l];
            let expected = t_bar * (n - l) as f64 / n as f64 * ptilde.prob(l);
            assert!((m.mean - expected).abs() < 3.0 * m.se().max(1e-9), "-({i},{l}): {} vs {expected}", m.mean);
            assert!(m.mean >= bound - 3.0 * m.se());
        }
    }
}

#[test]
fn svarm_variance_halves_when_budget_doubles() {
    let n = 6;
    let game = SougGame::generate(&mut seeded_rng(2024), n, 50).unwrap();
    let variances = |budget: u64| -> Vec<f64> {
        let mut m = vec![Moments::default(); n];
        for run in 0..RUNS {
            let mut metered = BudgetedGame::with_limit(&game, budget);
            let phi = Algorithm::Svarm.run(&mut metered, budget, &mut seeded_rng(run ^ 0xabc)).unwrap();
            m.iter_mut().zip(phi.iter()).for_each(|(m, v)| m.push(*v));
        }
        m.iter().map(Moments::var).collect()
    };
    let (short, long) = (variances(60), variances(108));
    let ratio = short.iter().zip(&long).map(|(s, l)| l / s).sum::<f64>() / n as f64;
    assert!((0.35..=0.65).contains(&ratio), "variance ratio {ratio}");
}

#[test]
fn evaluation_counts_match_documented_costs() {
    for n in 4..=12usize {
        let game = SougGame::generate(&mut seeded_rng(n as u64), n, 30).unwrap();
        let mut rng = seeded_rng(77);

        let mut b = BudgetedGame::unlimited(&game);
        svarm_warmup(&mut b, &mut rng, &mut SignedEstimates::new(n)).unwrap();
        assert_eq!(b.spent() + b.free_calls(), 2 * n as u64);

        let mut b = BudgetedGame::unlimited(&game);
        let mut table = StratumTable::new(n);
        exact_calculation(&mut b, &mut table).unwrap();
        assert_eq!(b.spent(), 2 * n as u64 + 1);
        warmup_positive(&mut b, &mut rng, &mut table).unwrap();
        assert_eq!(b.spent(), 2 * n as u64 + 1 + warmup_budget(n));
        warmup_negative(&mut b, &mut rng, &mut table).unwrap();
        assert_eq!(b.spent(), stratified_min_budget(n));
        let expected_warmup: u64 = (2..=n - 2).map(|s| n.div_ceil(s) as u64).sum();
        assert_eq!(warmup_budget(n), expected_warmup);

        for budget in [stratified_min_budget(n), 300, 1001] {
            for algo in Algorithm::ALL {
                if algo == Algorithm::Exact || budget < algo.min_budget(n) {
                    continue;
                }
                let mut b = BudgetedGame::with_limit(&game, budget);
                algo.run(&mut b, budget, &mut rng).unwrap();
                let used = b.spent() + b.free_calls();
                match algo {
                    Algorithm::Svarm => assert!(used <= budget && used + 1 >= budget, "{algo} n={n} T={budget}"),
                    Algorithm::StratifiedSvarmPlus | Algorithm::StratifiedSvarmPlusUniform => {
                        let all = (1u64 << n) - 1;
                        assert_eq!(b.spent(), budget.min(all), "{algo} n={n} T={budget}");
                    }
                    _ => assert_eq!(b.spent(), budget, "{algo} n={n} T={budget}"),
                }
            }
        }
    }
}

#[test]
fn plus_variant_exhausts_shoe_exactly() {
    let n = 10;
    let game = ShoeGame::new(n).unwrap();
    let budget = 1 << n;
    let mut b = BudgetedGame::with_limit(&game, budget).traced();
    let out = stratified_svarm_plus(&mut b, budget, &mut seeded_rng(3), SizeLaw::Tailored).unwrap();
    assert_eq!(out.unspent, 1);
    assert!(out.shapley.iter().all(|v| (v - 0.5).abs() < 1e-9));
    let mut seen = HashSet::new();
    for (a, _) in b.trace().unwrap() {
        assert!(seen.insert(a.bits()), "{a:?} evaluated twice");
    }
    assert_eq!(seen.len(), (1 << n) - 1);
}

#[test]
fn runs_are_reproducible() {
    let game = SougGame::generate(&mut seeded_rng(1), 9, 40).unwrap();
    for algo in Algorithm::ALL {
        let budget = algo.min_budget(9).max(700);
        let once = |seed| {
            let mut b = BudgetedGame::with_limit(&game, budget);
            algo.run(&mut b, budget, &mut seeded_rng(seed)).unwrap()
        };
        assert_eq!(once(10), once(10), "{algo}");
        if algo != Algorithm::Exact {
            assert_ne!(once(10), once(11), "{algo}");
        }
    }
}
