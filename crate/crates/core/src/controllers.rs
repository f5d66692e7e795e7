//! Acceleration commands of every control law, as pure functions of the
//! current observations. The response delay is applied by the simulator.

use crate::error::{Error, Result};
use crate::model::{
    speed_policy, AccelLimits, ControlKind, ControllerSpec, HumanGains, RangePolicy,
};

/// What a vehicle sees of one of its neighbours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborObservation {
    pub index: i32,
    /// Present only for links that carry position information.
    pub headway: Option<f64>,
    pub speed: f64,
}

/// Everything a control law may consume at one instant.
///
/// `forward` and `backward` are aligned with the corresponding link lists of
/// the controller.
#[derive(Debug, Clone, Copy)]
pub struct Observations<'a> {
    pub own_speed: f64,
    /// Vehicle directly ahead, with headway.
    pub ahead: Option<NeighborObservation>,
    pub forward: &'a [f64],
    pub backward: &'a [f64],
}

pub fn saturate(u: f64, limits: &AccelLimits) -> f64 {
    u.max(-limits.a_min).min(limits.a_max)
}

/// Optimal velocity model with range-rate term.
pub fn hdm_accel(gains: &HumanGains, policy: &RangePolicy, h: f64, h_dot: f64, v: f64) -> f64 {
    gains.alpha_h * (policy.eval(h) - v) + gains.beta_h * h_dot
}

fn linked_speeds(links: &[crate::model::Link], speeds: &[f64], own: f64, v_max: f64) -> f64 {
    links
        .iter()
        .zip(speeds)
        .map(|(l, &v)| l.gain * (speed_policy(v, v_max) - own))
        .sum()
}

pub fn cc_accel(spec: &ControllerSpec, v0: f64) -> f64 {
    spec.beta * (spec.v_ref.unwrap_or(v0) - v0)
}

pub fn acc_accel(spec: &ControllerSpec, policy: &RangePolicy, h: f64, v1: f64, v0: f64) -> f64 {
    spec.alpha * (policy.eval(h) - v0) + spec.beta * (speed_policy(v1, policy.v_max) - v0)
}

/// `speeds` holds `v_2 ... v_M` in the order of `spec.forward`; `v1` feeds `spec.beta`.
pub fn ccc_accel(
    spec: &ControllerSpec,
    policy: &RangePolicy,
    h1: f64,
    v1: f64,
    v0: f64,
    speeds: &[f64],
) -> f64 {
    acc_accel(spec, policy, h1, v1, v0) + linked_speeds(&spec.forward, speeds, v0, policy.v_max)
}

/// `backward` holds the speeds of the connected vehicles behind, in the order of `spec.backward`.
pub fn tc_accel(spec: &ControllerSpec, v_max: f64, v0: f64, backward: &[f64]) -> f64 {
    cc_accel(spec, v0) + linked_speeds(&spec.backward, backward, v0, v_max)
}

/// Single-link ATC.
pub fn atc_accel(
    spec: &ControllerSpec,
    policy: &RangePolicy,
    h1: f64,
    v1: f64,
    v0: f64,
    v_back: Option<f64>,
) -> Result<f64> {
    let v_back = v_back
        .ok_or_else(|| Error::Config("ATC without an observation of the vehicle behind".into()))?;
    if spec.backward.len() != 1 {
        return Err(Error::Config(
            "ATC responds to exactly one connected vehicle behind".into(),
        ));
    }
    Ok(acc_accel(spec, policy, h1, v1, v0)
        + linked_speeds(&spec.backward, &[v_back], v0, policy.v_max))
}

pub fn ctc_accel(
    spec: &ControllerSpec,
    policy: &RangePolicy,
    h1: f64,
    v1: f64,
    v0: f64,
    forward: &[f64],
    backward: &[f64],
) -> f64 {
    ccc_accel(spec, policy, h1, v1, v0, forward)
        + linked_speeds(&spec.backward, backward, v0, policy.v_max)
}

impl ControllerSpec {
    /// Commanded acceleration for the given observations.
    pub fn command(&self, policy: &RangePolicy, obs: &Observations<'_>) -> Result<f64> {
        let v0 = obs.own_speed;
        if obs.forward.len() != self.forward.len() || obs.backward.len() != self.backward.len() {
            return Err(Error::Config(
                "observations do not match the controller links".into(),
            ));
        }
        let ahead = || {
            obs.ahead
                .and_then(|a| a.headway.map(|h| (h, a.speed)))
                .ok_or_else(|| {
                    Error::Config(format!(
                        "{:?} needs the headway and speed of the vehicle ahead",
                        self.kind
                    ))
                })
        };
        Ok(match self.kind {
            ControlKind::Cc => cc_accel(self, v0),
            ControlKind::Tc => tc_accel(self, policy.v_max, v0, obs.backward),
            ControlKind::Acc => {
                let (h, v1) = ahead()?;
                acc_accel(self, policy, h, v1, v0)
            }
            ControlKind::Ccc => {
                let (h, v1) = ahead()?;
                ccc_accel(self, policy, h, v1, v0, obs.forward)
            }
            ControlKind::Atc => {
                let (h, v1) = ahead()?;
                atc_accel(self, policy, h, v1, v0, obs.backward.first().copied())?
            }
            ControlKind::Ctc => {
                let (h, v1) = ahead()?;
                ctc_accel(self, policy, h, v1, v0, obs.forward, obs.backward)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Link;

    #[test]
    fn saturation_examples() {
        let lim = AccelLimits::default();
        assert_eq!(saturate(-10.0, &lim), -7.0);
        assert_eq!(saturate(2.0, &lim), 2.0);
        assert_eq!(saturate(5.0, &lim), 3.0);
    }

    #[test]
    fn hdm_examples() {
        let g = HumanGains::default();
        let p = RangePolicy::human();
        let h_star = p.invert(20.0).unwrap();
        assert!(hdm_accel(&g, &p, h_star, 0.0, 20.0).abs() < 1e-12);
        // V_H(30) = 30·(1 − 0.25) = 22.5
        let independent = 0.1 * (30.0 * (1.0 - ((55.0f64 - 30.0) / 50.0).powi(2)) - 20.0);
        let u = hdm_accel(&g, &p, 30.0, 0.0, 20.0);
        assert!((u - 0.25).abs() < 1e-12 && (u - independent).abs() < 1e-12);
        let zero_alpha = HumanGains { alpha_h: 0.0, ..g };
        assert!((hdm_accel(&zero_alpha, &p, 12.0, 1.5, 20.0) - 0.6 * 1.5).abs() < 1e-12);
    }

    #[test]
    fn acc_examples() {
        let spec = ControllerSpec::acc(0.4, 0.5, 0.6);
        let p = RangePolicy::automated();
        let h = p.invert(18.0).unwrap();
        assert!(acc_accel(&spec, &p, h, 18.0, 18.0).abs() < 1e-12);
        assert!((acc_accel(&spec, &p, 30.0, 20.0, 20.0) + 2.0).abs() < 1e-12);
        let clamped = acc_accel(&spec, &p, 30.0, 40.0, 20.0);
        assert!((clamped - (0.4 * (15.0 - 20.0) + 0.5 * (30.0 - 20.0))).abs() < 1e-12);
    }

    #[test]
    fn atc_examples() {
        let p = RangePolicy::automated();
        let atc = ControllerSpec::atc(0.4, 0.5, 0.2, -10, 0.6);
        assert!((atc_accel(&atc, &p, 30.0, 15.0, 15.0, Some(10.0)).unwrap() + 1.0).abs() < 1e-12);
        let h = p.invert(15.0).unwrap();
        assert!(
            atc_accel(&atc, &p, h, 15.0, 15.0, Some(15.0))
                .unwrap()
                .abs()
                < 1e-12
        );
        assert!(matches!(
            atc_accel(&atc, &p, h, 15.0, 15.0, None),
            Err(Error::Config(_))
        ));
        let no_back = ControllerSpec::atc(0.4, 0.5, 0.0, -10, 0.6);
        let acc = ControllerSpec::acc(0.4, 0.5, 0.6);
        assert_eq!(
            atc_accel(&no_back, &p, 27.0, 16.0, 14.0, Some(9.0)).unwrap(),
            acc_accel(&acc, &p, 27.0, 16.0, 14.0)
        );
    }

    #[test]
    fn cc_and_tc() {
        let cc = ControllerSpec::cc(0.5, 25.0, 0.6);
        assert!((cc_accel(&cc, 20.0) - 2.5).abs() < 1e-12);
        let tc = ControllerSpec::tc(
            0.5,
            25.0,
            vec![Link {
                index: -3,
                gain: 0.2,
            }],
            0.6,
        );
        assert!((tc_accel(&tc, 30.0, 20.0, &[18.0]) - (2.5 - 0.4)).abs() < 1e-12);
    }

    #[test]
    fn command_dispatch_matches_direct_laws() {
        let p = RangePolicy::automated();
        let ctc = ControllerSpec::ctc(
            0.3,
            0.4,
            vec![Link {
                index: 2,
                gain: 0.1,
            }],
            vec![Link {
                index: -4,
                gain: 0.2,
            }],
            0.6,
        );
        let obs = Observations {
            own_speed: 17.0,
            ahead: Some(NeighborObservation {
                index: 1,
                headway: Some(24.0),
                speed: 18.0,
            }),
            forward: &[19.0],
            backward: &[16.0],
        };
        let direct = ctc_accel(&ctc, &p, 24.0, 18.0, 17.0, &[19.0], &[16.0]);
        assert_eq!(ctc.command(&p, &obs).unwrap(), direct);
        let missing = Observations { ahead: None, ..obs };
        assert!(ctc.command(&p, &missing).is_err());
    }
}
