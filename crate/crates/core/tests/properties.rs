mod common;

use common::*;
use pmech_core::bounds::{compute_bounds, evaluate_bounds, BoundsConfig};
use pmech_core::extension::extend_efrl;
use pmech_core::mechanism::{Arithmetic, Mechanism};
use pmech_core::oracle::estimate_h_eps;
use pmech_core::perfect_privacy::g0;
use pmech_core::prob::{JointPmf, LogBase, TripletPmf, Var};
use pmech_core::synthesis::synthesize_frl;
use proptest::prelude::*;

const BITS: LogBase = LogBase::BITS;

fn joint_strategy(max_x: usize, max_y: usize) -> impl Strategy<Value = JointPmf> {
    (2..=max_x, 2..=max_y).prop_flat_map(|(nx, ny)| {
        prop::collection::vec(0.01f64..1.0, nx * ny).prop_map(move |w| {
            let s: f64 = w.iter().sum();
            JointPmf::new(nx, ny, w.iter().map(|v| v / s).collect()).unwrap()
        })
    })
}

fn triplet_strategy() -> impl Strategy<Value = TripletPmf> {
    (2..=3usize, 2..=3usize, 2..=4usize).prop_flat_map(|(nx, ny, nu)| {
        prop::collection::vec(0.0f64..1.0, nx * ny * nu).prop_map(move |w| {
            let s: f64 = w.iter().sum::<f64>() + 1e-9;
            let mut p: Vec<f64> = w.iter().map(|v| v / s).collect();
            let fix = 1.0 - p.iter().sum::<f64>();
            p[0] += fix;
            TripletPmf::new(nx, ny, nu, p).unwrap()
        })
    })
}

fn no_g0() -> BoundsConfig {
    BoundsConfig {
        with_g0: false,
        ..BoundsConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chain_rule_and_key_identity(t in triplet_strategy()) {
        let hxyu = t.joint_entropy(&[Var::X, Var::Y, Var::U], BITS);
        let chain = t.joint_entropy(&[Var::X], BITS)
            + t.conditional_entropy(&[Var::Y], &[Var::X], BITS)
            + t.conditional_entropy(&[Var::U], &[Var::X, Var::Y], BITS);
        prop_assert!((hxyu - chain).abs() < 1e-9);
        let ms = Measures::of(&t);
        let lib = t.mutual_information(&[Var::U], &[Var::X], BITS);
        prop_assert!((lib - ms.i_ux).abs() < 1e-9);
        let cmi = t.conditional_mutual_information(&[Var::X], &[Var::U], &[Var::Y], BITS);
        prop_assert!((cmi - ms.i_xu_given_y).abs() < 1e-9);
        prop_assert!(ms.key_residual() < 1e-9);
    }

    #[test]
    fn entropies_invariant_under_relabeling(j in joint_strategy(4, 4), shift in 0usize..4) {
        let (nx, ny) = (j.x_size(), j.y_size());
        let p: Vec<f64> = (0..nx)
            .flat_map(|x| {
                let j = &j;
                (0..ny).map(move |y| j.get((x + shift) % nx, (y + 1) % ny))
            })
            .collect();
        let k = JointPmf::new(nx, ny, p).unwrap();
        prop_assert!((j.mutual_information(BITS) - k.mutual_information(BITS)).abs() < 1e-12);
        prop_assert!((j.h_x_given_y(BITS) - k.h_x_given_y(BITS)).abs() < 1e-12);
        let (a, b) = (
            compute_bounds(&j, 0.0, &no_g0()).unwrap(),
            compute_bounds(&k, 0.0, &no_g0()).unwrap(),
        );
        prop_assert!((a.l2 - b.l2).abs() < 1e-12);
    }

    #[test]
    fn bounds_match_reference_and_sandwich(j in joint_strategy(5, 5), frac in 0.0f64..0.99) {
        let eps = frac * mi(&j);
        let r = compute_bounds(&j, eps, &no_g0()).unwrap();
        prop_assert!((r.u1 - u1(&j, eps)).abs() < 1e-12);
        prop_assert!((r.l1 - l1(&j, eps)).abs() < 1e-12);
        prop_assert!((r.l2 - l2(&j, eps)).abs() < 1e-12);
        prop_assert!(r.max_lower_bound() <= r.u1 + 1e-9);
        if let (Some(l4), Some(rep)) = (r.l4, r.l4_argmin.as_ref()) {
            let (b4, _) = l4_l5(&j, eps, rep);
            prop_assert!((l4 - b4).abs() < 1e-12);
        }
    }

    #[test]
    fn bounds_grow_with_epsilon(j in joint_strategy(4, 4), a in 0.0f64..0.98, b in 0.0f64..0.98) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let i = mi(&j);
        let (rl, rh) = (
            compute_bounds(&j, lo * i, &no_g0()).unwrap(),
            compute_bounds(&j, hi * i, &no_g0()).unwrap(),
        );
        prop_assert!(rl.u1 <= rh.u1 + 1e-12);
        prop_assert!(rl.l1 <= rh.l1 + 1e-12);
        prop_assert!(rl.l2 <= rh.l2 + 1e-12);
    }

    #[test]
    fn l3_interpolates_between_g0_and_h_y(j in joint_strategy(3, 4)) {
        let r0 = compute_bounds(&j, 0.0, &BoundsConfig::default()).unwrap();
        let g = g0(&j, BITS).unwrap().value;
        prop_assert!((r0.l3.unwrap() - g).abs() < 1e-12);
        let near = evaluate_bounds(&j, mi(&j), &BoundsConfig::default()).unwrap();
        prop_assert!((near.l3.unwrap() - h(&py(&j))).abs() < 1e-9);
        prop_assert!(g <= h_y_given_x(&j) + 1e-9);
    }

    #[test]
    fn efrl_leaks_exactly_epsilon(j in joint_strategy(4, 4), frac in 0.0f64..0.99) {
        let eps = frac * mi(&j);
        let m = extend_efrl(&j, eps, BITS).unwrap().mechanism;
        let ms = Measures::of(&m.induced);
        prop_assert!((ms.i_ux - eps).abs() < 1e-9);
        prop_assert!(ms.h_y_given_ux < 1e-9);
        prop_assert!(m.check_kernel(&j, 1e-9).is_ok());
    }

    #[test]
    fn mechanism_json_roundtrip(j in joint_strategy(3, 3)) {
        let m = synthesize_frl(&j, None, Arithmetic::Float).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: Mechanism = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.u_size, m.u_size);
        prop_assert!(back.induced.as_slice().iter().zip(m.induced.as_slice()).all(|(a, b)| a == b));
        let r = evaluate_bounds(&j, 0.0, &no_g0()).unwrap();
        let rt: pmech_core::BoundsReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        prop_assert_eq!(rt.l1, r.l1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn oracle_kernels_are_feasible(j in joint_strategy(3, 2), frac in 0.0f64..0.95, seed in 0u64..1000) {
        let eps = frac * mi(&j);
        let est = estimate_h_eps(&j, eps, 4, 2000, seed, BITS).unwrap();
        let m = est.mechanism(&j).unwrap();
        let ms = Measures::of(&m.induced);
        prop_assert!(ms.i_ux <= eps + 1e-9);
        prop_assert!((ms.i_yu - est.value).abs() < 1e-9);
        prop_assert!(est.value <= u1(&j, eps) + 1e-9);
    }

    #[test]
    fn g0_witness_is_markov(j in joint_strategy(3, 4)) {
        let w = g0(&j, BITS).unwrap().witness;
        // P_{U|Y} from the decomposition: P(u|y) = w_u v_u(y) / P_Y(y)
        let pyv = py(&j);
        let (nx, ny, nu) = (j.x_size(), j.y_size(), w.weights.len());
        let mut p = vec![0.0; nx * ny * nu];
        for x in 0..nx {
            for y in 0..ny {
                for u in 0..nu {
                    p[(x * ny + y) * nu + u] = j.get(x, y) * w.weights[u] * w.pmfs[u][y] / pyv[y];
                }
            }
        }
        let t = TripletPmf::with_tolerance(nx, ny, nu, p, 1e-7).unwrap();
        let ms = Measures::of(&t);
        prop_assert!(ms.i_xu_given_y.abs() < 1e-9);
        prop_assert!(ms.i_ux.abs() < 1e-7);
    }
}
