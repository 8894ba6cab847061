use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snkf_core::kalman::{mac_snr, orth_snr, riccati_step_mac, riccati_step_orth, Scheme};
use snkf_core::model::{transmit_power, NoiseModel, Sensor, SensorSet, SystemModel};
use snkf_core::vecext::*;

fn m1(x: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, x)
}

struct Instance {
    model: SystemModel,
    sensors: SensorSet,
    h: Vec<f64>,
    alphas: Vec<f64>,
    noise: NoiseModel,
    p: f64,
}

fn instance(r: &mut ChaCha8Rng) -> Instance {
    let m = r.gen_range(1..=5);
    let sensors: Vec<Sensor> = (0..m)
        .map(|_| Sensor::new(r.gen_range(-2.0..2.0), r.gen_range(0.01..3.0)))
        .collect();
    Instance {
        model: SystemModel::new(r.gen_range(-0.99..0.99), r.gen_range(0.1..3.0)).unwrap(),
        sensors: SensorSet::new(sensors).unwrap(),
        h: (0..m).map(|_| r.gen_range(0.0..2.0)).collect(),
        alphas: (0..m).map(|_| r.gen_range(-2.0..2.0)).collect(),
        noise: NoiseModel::new(r.gen_range(0.01..3.0)).unwrap(),
        p: r.gen_range(0.01..10.0),
    }
}

fn embed(inst: &Instance) -> (VectorSystem, StepMatrices) {
    let sys = VectorSystem::new(
        m1(inst.model.a),
        m1(inst.model.sigma_w2),
        inst.sensors
            .iter()
            .map(|s| VectorSensor {
                c: m1(s.c),
                r: m1(s.sigma_v2),
            })
            .collect(),
        m1(inst.noise.sigma_n2),
    )
    .unwrap();
    let step = StepMatrices {
        h: inst.h.iter().map(|&h| m1(h)).collect(),
        alpha: inst.alphas.iter().map(|&a| m1(a)).collect(),
    };
    (sys, step)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn scalar_embedding_is_exact() {
    let mut r = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..1000 {
        let inst = instance(&mut r);
        let (sys, step) = embed(&inst);
        let p = m1(inst.p);

        let sigma = sys.state_covariance().unwrap();
        assert!(close(
            sigma[(0, 0)],
            inst.model.stationary_state_variance().unwrap()
        ));

        for (i, s) in inst.sensors.iter().enumerate() {
            let v =
                vector_transmit_power(&step.alpha[i], &sys.sensors[i].c, &sigma, &sys.sensors[i].r);
            assert!(close(
                v,
                transmit_power(inst.alphas[i], s, &inst.model).unwrap()
            ));
        }

        let d = mac_snr(&inst.alphas, &inst.h, &inst.sensors, &inst.noise).unwrap();
        let scalar =
            riccati_step_mac(inst.p, d.c_bar.unwrap(), d.r_bar.unwrap(), &inst.model).unwrap();
        let vector = vector_riccati_step_mac(&p, &sys, &step).unwrap()[(0, 0)];
        assert!(close(vector, scalar), "mac {vector} vs {scalar}");

        let so = orth_snr(&inst.alphas, &inst.h, &inst.sensors, &inst.noise)
            .unwrap()
            .snr;
        let scalar = riccati_step_orth(inst.p, so, &inst.model);
        let vector = vector_riccati_step_orth(&p, &sys, &step).unwrap()[(0, 0)];
        assert!(close(vector, scalar), "orth {vector} vs {scalar}");

        let layout = MimoLayout {
            c: inst
                .sensors
                .iter()
                .map(|s| DVector::from_element(1, s.c))
                .collect(),
            sigma_v2: inst.sensors.iter().map(|s| s.sigma_v2).collect(),
            h: inst.h.iter().map(|&h| vec![h]).collect(),
            alphas: inst.alphas.clone(),
            sigma_n2: inst.noise.sigma_n2,
        };
        assert!(close(mimo_scalar_snr(&layout).unwrap(), so));

        let ev = evaluate_p5_p6(&p, &sys, &step, f64::INFINITY, Scheme::Orthogonal).unwrap();
        let power: f64 = inst
            .alphas
            .iter()
            .zip(&inst.sensors)
            .map(|(&a, s)| transmit_power(a, s, &inst.model).unwrap())
            .sum();
        assert!(close(ev.trace, scalar) && close(ev.power, power));
    }
}

#[test]
fn stacked_mimo_matches_closed_form() {
    let mut r = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..200 {
        let m = r.gen_range(1..=4);
        let l = r.gen_range(1..=4);
        let layout = MimoLayout {
            c: (0..m)
                .map(|_| DVector::from_element(1, r.gen_range(-2.0..2.0)))
                .collect(),
            sigma_v2: (0..m).map(|_| r.gen_range(0.0..2.0)).collect(),
            h: (0..m)
                .map(|_| (0..l).map(|_| r.gen_range(-2.0..2.0)).collect())
                .collect(),
            alphas: (0..m).map(|_| r.gen_range(-2.0..2.0)).collect(),
            sigma_n2: r.gen_range(0.05..2.0),
        };
        let (c, rr) = mimo_to_vector(&layout).unwrap();
        assert_eq!(c.shape(), (m * l, 1));
        let stacked = information(&c, &rr).unwrap()[(0, 0)];
        let closed = mimo_scalar_snr(&layout).unwrap();
        assert!((stacked - closed).abs() <= 1e-10 * closed.max(1.0));
    }
}

#[test]
fn second_antenna_doubles_snr_only_without_sensor_noise() {
    let layout = |l: usize, v: f64| MimoLayout {
        c: vec![DVector::from_element(1, 1.0)],
        sigma_v2: vec![v],
        h: vec![vec![0.8; l]],
        alphas: vec![1.2],
        sigma_n2: 0.5,
    };
    let snr = |l, v| {
        let (c, r) = mimo_to_vector(&layout(l, v)).unwrap();
        information(&c, &r).unwrap()[(0, 0)]
    };
    assert!((snr(2, 0.0) - 2.0 * snr(1, 0.0)).abs() < 1e-12);
    assert!(snr(2, 1.0) < 2.0 * snr(1, 1.0));
}

#[test]
fn covariances_stay_symmetric_and_psd() {
    let mut r = ChaCha8Rng::seed_from_u64(22);
    let n = 3;
    let a = DMatrix::from_fn(n, n, |_, _| r.gen_range(-1.0..1.0));
    let a = &a * (0.95 / spectral_radius(&a));
    let q = DMatrix::identity(n, n) * 0.1;
    let sensors = (0..2)
        .map(|_| VectorSensor {
            c: DMatrix::from_fn(2, n, |_, _| r.gen_range(-1.0..1.0)),
            r: DMatrix::identity(2, 2) * 1e-6,
        })
        .collect();
    let sys = VectorSystem::new(a, q, sensors, DMatrix::identity(2, 2) * 1e-6).unwrap();
    let mut p = [DMatrix::identity(n, n), DMatrix::identity(n, n)];
    for _ in 0..10_000 {
        let step = StepMatrices {
            h: (0..2)
                .map(|_| DMatrix::from_fn(2, 2, |_, _| r.gen_range(-3.0..3.0)))
                .collect(),
            alpha: (0..2)
                .map(|_| DMatrix::from_fn(2, 2, |_, _| r.gen_range(-3.0..3.0)))
                .collect(),
        };
        for (pk, scheme) in p.iter_mut().zip([Scheme::MultiAccess, Scheme::Orthogonal]) {
            *pk = vector_riccati_step(pk, &sys, &step, scheme).unwrap();
            let norm = pk.norm();
            assert!((&*pk - pk.transpose()).norm() <= 1e-12 * norm);
            assert!(pk.clone().symmetric_eigenvalues().min() >= -1e-10 * norm);
        }
    }
}
