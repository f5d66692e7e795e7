use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use proptest::prelude::*;

use vring::freq::{gamma, head_to_tail, ChainModel, EgoGains, HumanLink};
use vring::stability::boundaries::{
    homogeneous_ring_boundaries, k_grid, plant_boundaries, point_residual, string_family,
    BoundaryCurve, BoundaryKind, Plane,
};
use vring::stability::roots::{find_roots, Rect, RootOptions};
use vring::stability::{
    gamma_limits, p_omega, p_zero, plant_factors, plant_stable, string_verdict,
};

fn richardson(f: impl Fn(f64) -> f64) -> f64 {
    let (a, b, c) = (f(1e-2), f(5e-3), f(2.5e-3));
    let (r1, r2) = ((4.0 * b - a) / 3.0, (4.0 * c - b) / 3.0);
    (16.0 * r2 - r1) / 15.0
}

fn models() -> Vec<ChainModel> {
    let h = HumanLink::default();
    let mut out = Vec::new();
    for n in 0..5 {
        out.push(ChainModel::acc(EgoGains::default(), h, n));
        out.push(ChainModel::atc(EgoGains::default(), h, n));
        out.push(ChainModel::atc(
            EgoGains {
                alpha: 0.9,
                beta: 0.2,
                beta_b: 0.35,
                ..EgoGains::default()
            },
            h,
            n,
        ));
    }
    out
}

#[test]
fn p_zero_is_the_limit_of_p() {
    for cfg in models() {
        let limit = richardson(|w| p_omega(&cfg, w).unwrap());
        let exact = p_zero(&cfg);
        assert!(
            (limit - exact).abs() < 1e-6,
            "n={} {:?}: {limit} vs {exact}",
            cfg.n,
            cfg.ego_kind
        );
    }
}

#[test]
fn gamma_limits_match_extrapolation() {
    let h = HumanLink::default();
    for n in [1, 3, 10] {
        let (a, b) = gamma_limits(&h, n);
        let g = |w: f64| gamma(&h, n, Complex64::new(0.0, w)).unwrap();
        let ea = richardson(|w| (g(w).re - 1.0) / (w * w));
        let eb = richardson(|w| g(w).im / w);
        assert!(
            (ea - a).abs() < 1e-6 * (1.0 + a.abs()),
            "n={n}: {ea} vs {a}"
        );
        assert!(
            (eb - b).abs() < 1e-6 * (1.0 + b.abs()),
            "n={n}: {eb} vs {b}"
        );
    }
}

/// Brute-force verdict: plant roots plus `|G(iω)| < 1` on a 1e-3 grid up to 2π.
fn brute_force(cfg: &ChainModel) -> bool {
    plant_stable(cfg).unwrap()
        && (1..=(TAU / 1e-3) as usize).all(|k| {
            head_to_tail(cfg, Complex64::new(0.0, k as f64 * 1e-3)).is_ok_and(|g| g.norm() < 1.0)
        })
}

/// One chart cell away in some gain direction the brute-force verdict flips.
fn near_boundary(cfg: &ChainModel, verdict: bool) -> bool {
    let d = 0.02;
    let e = cfg.ego;
    [
        (d, 0.0, 0.0),
        (-d, 0.0, 0.0),
        (0.0, d, 0.0),
        (0.0, -d, 0.0),
        (0.0, 0.0, d),
        (0.0, 0.0, -d),
    ]
    .iter()
    .any(|&(da, db, dbb)| {
        brute_force(&cfg.with_gains(e.alpha + da, e.beta + db, (e.beta_b + dbb).max(0.0)))
            != verdict
    })
}

fn gain_point() -> impl Strategy<Value = ChainModel> {
    (
        0.0f64..1.2,
        0.0f64..1.5,
        0.0f64..0.5,
        0usize..5,
        any::<bool>(),
    )
        .prop_map(|(alpha, beta, beta_b, n, atc)| {
            let ego = EgoGains {
                alpha,
                beta,
                beta_b,
                ..EgoGains::default()
            };
            if atc {
                ChainModel::atc(ego, HumanLink::default(), n)
            } else {
                ChainModel::acc(ego, HumanLink::default(), n)
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn verdict_matches_dense_scan(cfg in gain_point()) {
        let v = string_verdict(&cfg, TAU, 2000).unwrap();
        let expected = brute_force(&cfg);
        prop_assert!(v.string_stable == expected || near_boundary(&cfg, expected), "{cfg:?}: {v:?}");
    }

    #[test]
    fn string_stability_implies_plant_stability(cfg in gain_point()) {
        let v = string_verdict(&cfg, TAU, 400).unwrap();
        prop_assert!(!v.string_stable || v.plant_stable);
    }
}

#[test]
fn zero_backward_gain_reduces_atc_to_acc() {
    let omegas: Vec<f64> = (1..=100).map(|i| 0.05 * i as f64).collect();
    let ks = k_grid(24);
    for n in 0..5 {
        let ego = EgoGains {
            beta_b: 0.0,
            ..EgoGains::default()
        };
        let acc = ChainModel::acc(ego, HumanLink::default(), n);
        let atc = ChainModel::atc(ego, HumanLink::default(), n);
        let same = |a: &[BoundaryCurve], b: &[BoundaryCurve]| {
            assert_eq!(a.len(), b.len());
            for (ca, cb) in a.iter().zip(b) {
                assert_eq!(ca.points.len(), cb.points.len());
                for (p, q) in ca.points.iter().zip(&cb.points) {
                    assert!((p.x - q.x).abs() < 1e-12 && (p.y - q.y).abs() < 1e-12);
                }
            }
        };
        same(
            &string_family(&acc, Plane::BetaAlpha, &omegas, &ks).unwrap(),
            &string_family(&atc, Plane::BetaAlpha, &omegas, &ks).unwrap(),
        );
        same(
            &plant_boundaries(&acc, Plane::BetaAlpha, &omegas, (0.0, 3.0)).unwrap(),
            &plant_boundaries(&atc, Plane::BetaAlpha, &omegas, (0.0, 3.0)).unwrap(),
        );
    }
}

#[test]
fn human_ego_is_a_relabeled_acc_ego() {
    let h = HumanLink::default();
    let relabeled = EgoGains {
        alpha: h.alpha_h,
        beta: h.beta_h,
        beta_b: 0.0,
        kappa: h.kappa_h,
        sigma: h.tau,
    };
    for n in 0..4 {
        let (hv, acc) = (ChainModel::human(h, n), ChainModel::acc(relabeled, h, n));
        for k in 1..50 {
            let s = Complex64::new(-0.2 + 0.01 * k as f64, 0.1 * k as f64);
            assert_eq!(
                head_to_tail(&hv, s).unwrap(),
                head_to_tail(&acc, s).unwrap()
            );
        }
        assert_eq!(
            plant_factors(&acc)[0].eval(Complex64::new(0.3, 1.1)),
            plant_factors(&hv)[0].eval(Complex64::new(0.3, 1.1))
        );
    }
}

fn in_window(p: &(f64, f64)) -> bool {
    (0.0..=3.0).contains(&p.0) && (0.0..=2.0).contains(&p.1)
}

fn points(curves: &[BoundaryCurve]) -> Vec<(f64, f64)> {
    curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| (p.x, p.y)))
        .filter(in_window)
        .collect()
}

fn directed(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    a.iter()
        .map(|p| {
            b.iter()
                .map(|q| (p.0 - q.0).hypot(p.1 - q.1))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

#[test]
fn long_rings_approach_the_string_boundary() {
    let h = HumanLink::default();
    let omegas: Vec<f64> = (1..=150).map(|i| 0.02 * i as f64).collect();
    let relabeled = EgoGains {
        alpha: h.alpha_h,
        beta: h.beta_h,
        beta_b: 0.0,
        kappa: h.kappa_h,
        sigma: h.tau,
    };
    let link = ChainModel::acc(relabeled, h, 0);
    let family = points(&string_family(&link, Plane::BetaAlpha, &omegas, &k_grid(360)).unwrap());
    let distances: Vec<f64> = [10, 50, 200]
        .iter()
        .map(|&n| {
            directed(
                &family,
                &points(&homogeneous_ring_boundaries(&h, n, &omegas)),
            )
        })
        .collect();
    assert!(distances.windows(2).all(|d| d[1] < d[0]), "{distances:?}");
    assert!(distances[2] < 0.25 * distances[0], "{distances:?}");
}

#[test]
fn plant_boundary_gains_have_an_imaginary_root_pair() {
    let base = ChainModel::atc(EgoGains::default(), HumanLink::default(), 3);
    let omegas = [0.7, 1.3, 2.0, FRAC_PI_2 / 0.6];
    for curve in plant_boundaries(&base, Plane::BetaAlpha, &omegas, (0.0, 3.0)).unwrap() {
        if curve.kind == BoundaryKind::PlantS0 {
            continue;
        }
        for p in &curve.points {
            let cfg = Plane::BetaAlpha.apply(&base, p.x, p.y);
            let factor = plant_factors(&cfg)
                .into_iter()
                .find(|f| match curve.kind {
                    BoundaryKind::PlantVehicle => f.name() == "vehicle",
                    _ => f.name() == "virtual-ring",
                })
                .unwrap();
            let rect = Rect::new(-0.05, 0.05, p.param - 0.05, p.param + 0.05).unwrap();
            let found = find_roots(&|s| factor.eval(s), rect, &RootOptions::default()).unwrap();
            assert!(
                found
                    .roots
                    .iter()
                    .any(|r| (r - Complex64::new(0.0, p.param)).norm() < 1e-6),
                "{:?} at Ω = {}: {:?}",
                curve.kind,
                p.param,
                found.roots
            );
        }
    }
}

#[test]
fn beta_betab_boundary_points_satisfy_their_definitions() {
    let omegas: Vec<f64> = (1..=200).map(|i| TAU * i as f64 / 200.0).collect();
    for n in 1..5 {
        let cfg = ChainModel::atc(
            EgoGains {
                alpha: 0.1,
                ..EgoGains::default()
            },
            HumanLink::default(),
            n,
        );
        let mut curves = plant_boundaries(&cfg, Plane::BetaBetaB, &omegas, (0.0, 3.0)).unwrap();
        curves.extend(string_family(&cfg, Plane::BetaBetaB, &omegas, &k_grid(36)).unwrap());
        for c in &curves {
            for p in &c.points {
                let r = point_residual(&cfg, Plane::BetaBetaB, c.kind, p).unwrap();
                assert!(r < 1e-8, "{:?} n={n} {p:?}: {r}", c.kind);
            }
        }
    }
}
