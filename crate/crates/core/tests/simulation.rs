use vring::energy::{
    cumulative_energy, energy_sweep, total_energy, EnergyParams, GainRange, SweepTemplate,
};
use vring::freq::{head_to_tail, ChainModel, EgoGains, HumanLink};
use vring::model::{AutomatedGains, ChainConfig, HumanGains};
use vring::parallel::Execution;
use vring::simulator::{
    build_equilibrium, perturbation_response, simulate, Integrator, LeadProfile, SimSettings,
    Trajectory,
};
use vring::Error;

use num_complex::Complex64;

const V_STAR: f64 = 25.0;

fn chains() -> Vec<ChainConfig> {
    let h = HumanGains::default();
    let g = AutomatedGains::default();
    vec![
        ChainConfig::human_platoon(11, h, V_STAR),
        ChainConfig::acc_platoon(10, g, h, V_STAR),
        ChainConfig::atc_platoon(10, g, h, V_STAR).unwrap(),
    ]
}

fn run(chain: &ChainConfig, lead: &LeadProfile, settings: &SimSettings) -> Trajectory {
    simulate(chain, &build_equilibrium(chain).unwrap(), lead, settings).unwrap()
}

#[test]
fn equilibrium_is_a_fixed_point() {
    for chain in chains() {
        let traj = run(&chain, &LeadProfile::cruise(), &SimSettings::default());
        for v in &traj.speed {
            let dev = v.iter().map(|x| (x - V_STAR).abs()).fold(0.0, f64::max);
            assert!(dev <= 1e-9, "speed deviation {dev}");
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let chain = &chains()[2];
    let a = run(chain, &LeadProfile::default(), &SimSettings::default());
    let b = run(chain, &LeadProfile::default(), &SimSettings::default());
    assert_eq!(a, b);
}

#[test]
fn realized_acceleration_respects_limits_and_matches_speed() {
    for chain in chains() {
        let traj = run(&chain, &LeadProfile::default(), &SimSettings::default());
        for (p, v) in chain.vehicles.iter().enumerate() {
            for (k, &a) in traj.accel[p].iter().enumerate() {
                assert!(a >= -v.limits.a_min && a <= v.limits.a_max);
                if k + 1 < traj.time.len() && traj.speed[p][k + 1] > 0.0 {
                    let dv = (traj.speed[p][k + 1] - traj.speed[p][k]) / 0.01;
                    assert!(
                        (dv - a).abs() < 1e-6,
                        "vehicle {} step {k}: {dv} vs {a}",
                        v.index
                    );
                }
            }
        }
    }
}

fn final_positions(integrator: Integrator, dt: f64) -> Vec<f64> {
    let chain = ChainConfig::acc_platoon(3, AutomatedGains::default(), HumanGains::default(), 20.0);
    let lead = LeadProfile::Sinusoid {
        amplitude: 1.0,
        omega: 0.5,
    };
    let settings = SimSettings {
        dt,
        tf: 20.0,
        integrator,
        ..SimSettings::default()
    };
    let traj = run(&chain, &lead, &settings);
    traj.position.iter().map(|p| *p.last().unwrap()).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn euler_converges_at_first_order() {
    let (a, b, c) = (
        final_positions(Integrator::Euler, 0.02),
        final_positions(Integrator::Euler, 0.01),
        final_positions(Integrator::Euler, 0.005),
    );
    let ratio = max_diff(&a, &b) / max_diff(&b, &c);
    assert!((1.7..2.3).contains(&ratio), "ratio {ratio}");
}

#[test]
fn rk4_lag_converges_at_second_order() {
    // The lead's acceleration jumps at t = 0, which caps the global order at two.
    let (a, b, c) = (
        final_positions(Integrator::Rk4Lag, 0.04),
        final_positions(Integrator::Rk4Lag, 0.02),
        final_positions(Integrator::Rk4Lag, 0.01),
    );
    let ratio = max_diff(&a, &b) / max_diff(&b, &c);
    assert!((3.4..4.6).contains(&ratio), "ratio {ratio}");
    let euler = max_diff(
        &final_positions(Integrator::Euler, 0.02),
        &final_positions(Integrator::Euler, 0.01),
    );
    assert!(max_diff(&b, &c) < euler, "{} vs {euler}", max_diff(&b, &c));
}

#[test]
fn collision_aborts_the_run() {
    let gains = AutomatedGains {
        alpha: 0.01,
        beta: 0.01,
        beta_b: 0.0,
        sigma: 0.6,
    };
    let chain = ChainConfig::acc_platoon(0, gains, HumanGains::default(), V_STAR);
    let lead = LeadProfile::Segments {
        segments: vec![vring::simulator::AccelSegment {
            t_start: 0.0,
            t_end: 3.5,
            accel: -7.0,
        }],
    };
    let err = simulate(
        &chain,
        &build_equilibrium(&chain).unwrap(),
        &lead,
        &SimSettings::default(),
    )
    .unwrap_err();
    match err {
        Error::Collision {
            follower,
            leader,
            headway,
            ..
        } => {
            assert_eq!((follower, leader), (0, 1));
            assert!(headway <= 0.0);
        }
        other => panic!("expected a collision, got {other}"),
    }
}

#[test]
fn human_chain_amplifies_near_the_peak() {
    let chain = ChainConfig::human_platoon(3, HumanGains::default(), 15.0);
    let model = vring::freq::chain_model(&chain, None, None).unwrap();
    let (peak, w) = (1..400)
        .map(|k| {
            let w = 0.005 * k as f64;
            (
                head_to_tail(&model, Complex64::new(0.0, w)).unwrap().norm(),
                w,
            )
        })
        .fold((0.0, 0.0), |best, x| if x.0 > best.0 { x } else { best });
    assert!(peak > 1.0, "peak {peak} at {w}");
    let settings = SimSettings {
        tf: 200.0,
        ..SimSettings::default()
    };
    let r = perturbation_response(&chain, 0.1, w, &settings).unwrap();
    assert!(r.ratio > 1.0, "{r:?}");
    assert!(
        (r.ratio - peak).abs() / peak < 0.03,
        "{} vs {peak}",
        r.ratio
    );
}

#[test]
fn response_ratio_converges_with_amplitude() {
    let chain = ChainConfig::acc_platoon(2, AutomatedGains::default(), HumanGains::default(), 15.0);
    let settings = SimSettings {
        tf: 150.0,
        ..SimSettings::default()
    };
    let model = vring::freq::chain_model(&chain, None, None).unwrap();
    let w = 0.5;
    let exact = head_to_tail(&model, Complex64::new(0.0, w)).unwrap().norm();
    let errs: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&a| {
            (perturbation_response(&chain, a, w, &settings)
                .unwrap()
                .ratio
                - exact)
                .abs()
                / exact
        })
        .collect();
    assert!(errs.iter().all(|&e| e < 0.03), "{errs:?}");
    assert!(errs[2] <= errs[0] + 1e-4, "{errs:?}");
}

#[test]
fn acc_alone_ratio_matches_link_magnitude() {
    let chain = ChainConfig::acc_platoon(0, AutomatedGains::default(), HumanGains::default(), 15.0);
    let settings = SimSettings {
        tf: 150.0,
        ..SimSettings::default()
    };
    let r = perturbation_response(&chain, 0.1, 0.5, &settings).unwrap();
    let model = ChainModel::acc(EgoGains::default(), HumanLink::default(), 0);
    let exact = head_to_tail(&model, Complex64::new(0.0, 0.5))
        .unwrap()
        .norm();
    assert!(
        (r.ratio - exact).abs() / exact < 0.03,
        "{} vs {exact}",
        r.ratio
    );
}

#[test]
fn energy_is_monotone_in_time() {
    for chain in chains() {
        let traj = run(&chain, &LeadProfile::default(), &SimSettings::default());
        for v in &chain.vehicles {
            let w = cumulative_energy(&traj, v.index, &EnergyParams::default()).unwrap();
            assert!(w.windows(2).all(|p| p[1] >= p[0]));
            assert!(w.iter().all(|&x| x >= 0.0));
        }
    }
}

#[test]
fn cruise_energy_scales_with_duration_and_vanishes_at_rest() {
    let params = EnergyParams::default();
    let chain = ChainConfig::acc_platoon(2, AutomatedGains::default(), HumanGains::default(), 20.0);
    let short = SimSettings {
        tf: 10.0,
        ..SimSettings::default()
    };
    let long = SimSettings {
        tf: 20.0,
        ..SimSettings::default()
    };
    let w1 = total_energy(&run(&chain, &LeadProfile::cruise(), &short), 0, &params).unwrap();
    let w2 = total_energy(&run(&chain, &LeadProfile::cruise(), &long), 0, &params).unwrap();
    assert!((w1 - 43.62).abs() < 1e-9, "{w1}");
    assert!((w2 - 2.0 * w1).abs() < 1e-9);
    let stopped =
        ChainConfig::acc_platoon(2, AutomatedGains::default(), HumanGains::default(), 0.0);
    let w0 = total_energy(&run(&stopped, &LeadProfile::cruise(), &short), 0, &params).unwrap();
    assert_eq!(w0, 0.0);
}

#[test]
fn energy_converges_in_the_time_step() {
    let chain = &chains()[2];
    let params = EnergyParams::default();
    let coarse = total_energy(
        &run(chain, &LeadProfile::default(), &SimSettings::default()),
        0,
        &params,
    )
    .unwrap();
    let fine = SimSettings {
        dt: 0.005,
        ..SimSettings::default()
    };
    let fine = total_energy(&run(chain, &LeadProfile::default(), &fine), 0, &params).unwrap();
    assert!(((coarse - fine) / fine).abs() < 1e-3, "{coarse} vs {fine}");
}

fn template(n: usize) -> SweepTemplate {
    SweepTemplate {
        chain: ChainConfig::atc_platoon(
            n,
            AutomatedGains::default(),
            HumanGains::default(),
            V_STAR,
        )
        .unwrap(),
        lead: LeadProfile::default(),
        settings: SimSettings::default(),
        params: EnergyParams::default(),
    }
}

#[test]
fn single_cell_sweep_equals_a_direct_run() {
    let t = template(10);
    let grid = energy_sweep(
        &t,
        &GainRange::single(0.5),
        &GainRange::single(0.2),
        Execution::Sequential,
    )
    .unwrap();
    let traj = run(&t.chain, &t.lead, &t.settings);
    assert_eq!(
        grid.ego[0][0],
        Some(total_energy(&traj, 0, &t.params).unwrap())
    );
    assert_eq!(
        grid.tail[0][0],
        Some(total_energy(&traj, -10, &t.params).unwrap())
    );
}

#[test]
fn backward_gain_lowers_ego_energy() {
    let t = template(10);
    let (w0, _) = t.run(0.5, 0.0).unwrap().unwrap();
    let (w2, _) = t.run(0.5, 0.2).unwrap().unwrap();
    assert!(w2 < w0, "{w2} vs {w0}");
}

#[test]
fn parallel_sweep_matches_sequential() {
    let t = template(4);
    let beta = GainRange {
        start: 0.4,
        end: 0.6,
        step: 0.1,
    };
    let beta_b = GainRange {
        start: 0.0,
        end: 0.2,
        step: 0.1,
    };
    let seq = energy_sweep(&t, &beta, &beta_b, Execution::Sequential).unwrap();
    let par = energy_sweep(&t, &beta, &beta_b, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
    assert!(seq
        .ego
        .iter()
        .flatten()
        .all(|c| c.is_some_and(|w| w >= 0.0)));
}
