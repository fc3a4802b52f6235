mod common;

use common::{corpus, CutOracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robustflow::robust::{
    cold_scenario_throughput, cold_scenario_throughput_two_phase, robust_throughput_with_caps,
};
use robustflow::{
    enumerate_scenarios, robust_throughput, worst_scenario_subgradient, RobustOptions,
    ThroughputModel,
};

#[test]
fn warm_values_match_cold_solves() {
    for inst in corpus() {
        let model = ThroughputModel::new(&inst.net, &inst.demands).unwrap();
        let caps = inst.net.capacities();
        for q in 1..=2.min(inst.net.n_edges()) {
            let rep =
                robust_throughput(&inst.net, &inst.demands, q, &RobustOptions::default()).unwrap();
            assert_eq!(
                rep.records.len(),
                enumerate_scenarios(caps.len(), q).count()
            );
            for r in &rep.records {
                let (cold, _) =
                    cold_scenario_throughput_two_phase(&model, &caps, &r.scenario).unwrap();
                let (primal, _) = cold_scenario_throughput(&model, &caps, &r.scenario).unwrap();
                let warm = r.value.expect("throughput scenarios are always feasible");
                assert!(
                    (warm - cold).abs() < 1e-7,
                    "{} {:?}: {warm} vs {cold}",
                    inst.name,
                    r.scenario
                );
                assert!((primal - cold).abs() < 1e-7);
            }
        }
    }
}

#[test]
fn single_pair_values_match_min_cut() {
    for inst in corpus() {
        let Some((s, t, dem)) = inst.single_pair() else {
            continue;
        };
        for q in 0..=2.min(inst.net.n_edges()) {
            let rep =
                robust_throughput(&inst.net, &inst.demands, q, &RobustOptions::default()).unwrap();
            let oracle = CutOracle::new(&inst.net, s, t, dem, q);
            let want = oracle.value(&vec![0.0; inst.net.n_edges()]);
            assert!((rep.worst_value - want).abs() < 1e-9, "{} q={q}", inst.name);
        }
    }
}

#[test]
fn worst_value_is_monotone_in_q() {
    for inst in corpus() {
        let mut prev = f64::INFINITY;
        for q in 0..=3.min(inst.net.n_edges()) {
            let v = robust_throughput(&inst.net, &inst.demands, q, &RobustOptions::default())
                .unwrap()
                .worst_value;
            assert!(v <= prev + 1e-9, "{} q={q}", inst.name);
            prev = v;
        }
    }
}

#[test]
fn exactly_q_equals_up_to_q() {
    for inst in corpus() {
        for q in 1..=2.min(inst.net.n_edges()) {
            let up_to = (0..=q)
                .map(|k| {
                    robust_throughput(&inst.net, &inst.demands, k, &RobustOptions::default())
                        .unwrap()
                        .worst_value
                })
                .fold(f64::INFINITY, f64::min);
            let exact = robust_throughput(&inst.net, &inst.demands, q, &RobustOptions::default())
                .unwrap()
                .worst_value;
            assert!((up_to - exact).abs() < 1e-9, "{} q={q}", inst.name);
        }
    }
}

#[test]
fn subgradient_inequality_holds_on_random_capacities() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for inst in corpus() {
        let model = ThroughputModel::new(&inst.net, &inst.demands).unwrap();
        let caps = inst.net.capacities();
        let q = 1.min(caps.len() - 1);
        let rep = robust_throughput_with_caps(&model, &caps, q, &RobustOptions::default()).unwrap();
        let g = worst_scenario_subgradient(&rep, &caps).unwrap();
        let f0 = rep.min_form_value();
        for _ in 0..100 {
            let other: Vec<f64> = caps.iter().map(|b| b * rng.gen_range(0.2..3.0)).collect();
            let f1 = robust_throughput_with_caps(&model, &other, q, &RobustOptions::default())
                .unwrap()
                .min_form_value();
            let lin: f64 = g
                .iter()
                .zip(other.iter().zip(&caps))
                .map(|(g, (a, b))| g * (a - b))
                .sum();
            assert!(f1 >= f0 + lin - 1e-7, "{}: {f1} < {f0} + {lin}", inst.name);
        }
    }
}

#[test]
fn reports_are_deterministic_across_workers() {
    for inst in corpus().into_iter().skip(10) {
        let q = 2.min(inst.net.n_edges());
        let base =
            robust_throughput(&inst.net, &inst.demands, q, &RobustOptions::default()).unwrap();
        for workers in [1, 2, 3] {
            let opts = RobustOptions {
                workers: Some(workers),
                ..RobustOptions::default()
            };
            let rep = robust_throughput(&inst.net, &inst.demands, q, &opts).unwrap();
            assert_eq!(rep.worst_value.to_bits(), base.worst_value.to_bits());
            assert_eq!(rep.worst_scenario, base.worst_scenario);
            assert_eq!(rep.pivots_total, base.pivots_total);
            let a: Vec<_> = rep
                .records
                .iter()
                .map(|r| (r.scenario.clone(), r.value.map(f64::to_bits)))
                .collect();
            let b: Vec<_> = base
                .records
                .iter()
                .map(|r| (r.scenario.clone(), r.value.map(f64::to_bits)))
                .collect();
            assert_eq!(a, b);
        }
    }
}

#[test]
fn worst_scenario_is_first_minimizer() {
    for inst in corpus() {
        let rep =
            robust_throughput(&inst.net, &inst.demands, 1, &RobustOptions::default()).unwrap();
        let first = rep
            .records
            .iter()
            .find(|r| r.value.unwrap() <= rep.worst_value + 1e-9)
            .unwrap();
        assert_eq!(first.scenario, rep.worst_scenario, "{}", inst.name);
    }
}
