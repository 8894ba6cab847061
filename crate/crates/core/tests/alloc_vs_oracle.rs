use rand::Rng;
use snkf_core::alloc::{self, AllocationProblem, Constraint, Objective};
use snkf_core::{oracle, rng};

fn instance(seed: u64, objective: Objective, max_m: usize) -> AllocationProblem {
    let mut r = rng::stream(seed, 0, rng::purpose::PARAMETERS);
    let m = r.gen_range(1..=max_m);
    let kappa: Vec<f64> = (0..m).map(|_| r.gen_range(0.2..3.0)).collect();
    let rho: Vec<f64> = (0..m).map(|_| r.gen_range(-2.0..2.0)).collect();
    let tau: Vec<f64> = (0..m).map(|_| r.gen_range(0.1..2.0)).collect();
    let sn2 = r.gen_range(0.1..2.0);
    let constraint = if objective.is_power_objective() {
        let avail: f64 = rho.iter().zip(&tau).map(|(p, t)| p * p / t).sum();
        let y = r.gen_range(0.5..2.0);
        Constraint::Target {
            x: r.gen_range(0.05..0.95) * avail * y,
            y,
        }
    } else {
        Constraint::Budget(r.gen_range(0.1..10.0))
    };
    AllocationProblem::new(objective, kappa, rho, tau, sn2, constraint).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn p1_matches_multistart() {
    for seed in 0..60 {
        let p = instance(seed, Objective::MinPowerMac, 5);
        let s = alloc::solve_p1(&p).unwrap();
        let o = oracle::p1_multistart(&p, seed).unwrap();
        assert!(
            rel(s.total_power, o.value) < 1e-3,
            "seed {seed}: {} vs {}",
            s.total_power,
            o.value
        );
        assert!(
            s.total_power <= o.value * (1.0 + 1e-9),
            "seed {seed}: oracle beat solver"
        );
        let Constraint::Target { x, y } = p.constraint else {
            unreachable!()
        };
        assert!(rel(s.constraint_value, x / y) < 1e-8);
        assert!(rel(s.total_power, s.lambda * p.sigma_n2 * x) < 1e-8);
    }
}

#[test]
fn p2_matches_multistart() {
    for seed in 0..60 {
        let p = instance(seed, Objective::MinCovarianceMac, 5);
        let s = alloc::solve_p2(&p).unwrap();
        let o = oracle::p2_multistart(&p, seed).unwrap();
        assert!(rel(s.snr, o.value) < 1e-3, "seed {seed}");
        assert!(
            s.snr >= o.value * (1.0 - 1e-9),
            "seed {seed}: oracle beat solver"
        );
        assert!(rel(s.total_power, p.budget().unwrap()) < 1e-10);
    }
}

#[test]
fn p3_p4_match_enumeration() {
    for seed in 0..100 {
        for obj in [Objective::MinPowerOrth, Objective::MinCovarianceOrth] {
            let p = instance(seed, obj, 6);
            let s = alloc::solve(&p).unwrap();
            let o = oracle::orth_enumerate(&p).unwrap();
            let got = if obj.is_power_objective() {
                s.total_power
            } else {
                s.snr
            };
            assert!(
                rel(got, o.value) < 1e-3,
                "seed {seed} {obj:?}: {got} vs {}",
                o.value
            );
            let order = s.order.clone().unwrap();
            let m1 = s.m1.unwrap();
            for (k, &i) in order.iter().enumerate() {
                assert_eq!(
                    s.alphas_sq[i] > 0.0,
                    k < m1,
                    "seed {seed}: active set not a prefix"
                );
            }
            assert_eq!(
                alloc::m1_conditions(&p, &order, m1),
                [true; 3],
                "seed {seed}"
            );
        }
    }
}
