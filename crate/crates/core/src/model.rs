//! Domain types shared by the simulator, the frequency-domain analysis and the
//! stability charts: acceleration limits, range and speed policies, driver and
//! controller descriptions, and the vehicle chain itself.
//!
//! Vehicles are indexed in the direction of motion. The ego vehicle has index
//! `0`, vehicles behind it carry negative indices and vehicles ahead carry
//! positive ones.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical vehicle length used throughout the reference scenarios, m.
pub const VEHICLE_LENGTH: f64 = 5.0;

/// Acceleration capability and braking limit of a vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccelLimits {
    /// Braking limit as a positive magnitude, m/s².
    pub a_min: f64,
    /// Acceleration limit, m/s².
    pub a_max: f64,
}

impl AccelLimits {
    pub fn new(a_min: f64, a_max: f64) -> Result<Self> {
        let limits = Self { a_min, a_max };
        limits.validate()?;
        Ok(limits)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a_min > 0.0 && self.a_max > 0.0) {
            return Err(Error::Config(format!(
                "acceleration limits must be positive (a_min = {}, a_max = {})",
                self.a_min, self.a_max
            )));
        }
        Ok(())
    }
}

impl Default for AccelLimits {
    fn default() -> Self {
        Self {
            a_min: 7.0,
            a_max: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    /// `F(h) = v_max (h - h_st) / (h_go - h_st)`
    Linear,
    /// `F(h) = v_max (1 - ((h_go - h) / (h_go - h_st))²)`
    QuadraticConcave,
}

/// Headway-dependent desired speed, clamped to `[0, v_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangePolicy {
    pub kind: PolicyKind,
    /// Standstill headway, m.
    pub h_st: f64,
    /// Free-flow headway, m.
    pub h_go: f64,
    /// Speed limit, m/s.
    pub v_max: f64,
}

/// Range-policy gradient at an equilibrium headway.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gradient {
    /// dV/dh, 1/s.
    pub value: f64,
    /// The headway sits at or beyond a saturation point of the policy, so the
    /// linearization around it is degenerate.
    pub saturated: bool,
}

impl RangePolicy {
    pub fn new(kind: PolicyKind, h_st: f64, h_go: f64, v_max: f64) -> Result<Self> {
        let policy = Self {
            kind,
            h_st,
            h_go,
            v_max,
        };
        policy.validate()?;
        Ok(policy)
    }

    /// Quadratic policy of the reference human drivers.
    pub fn human() -> Self {
        Self {
            kind: PolicyKind::QuadraticConcave,
            h_st: 5.0,
            h_go: 55.0,
            v_max: 30.0,
        }
    }

    /// Linear policy of the reference automated vehicles.
    pub fn automated() -> Self {
        Self {
            kind: PolicyKind::Linear,
            h_st: 5.0,
            h_go: 55.0,
            v_max: 30.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h_st > 0.0 && self.h_st < self.h_go && self.v_max > 0.0) {
            return Err(Error::Config(format!(
                "range policy requires 0 < h_st < h_go and v_max > 0 (h_st = {}, h_go = {}, v_max = {})",
                self.h_st, self.h_go, self.v_max
            )));
        }
        Ok(())
    }

    fn unclamped(&self, h: f64) -> f64 {
        let span = self.h_go - self.h_st;
        match self.kind {
            PolicyKind::Linear => self.v_max * (h - self.h_st) / span,
            PolicyKind::QuadraticConcave => {
                // The parabola turns over beyond h_go; the clamp below hides that branch.
                let x = ((self.h_go - h) / span).max(0.0);
                self.v_max * (1.0 - x * x)
            }
        }
    }

    /// Desired speed at headway `h`.
    pub fn eval(&self, h: f64) -> f64 {
        self.unclamped(h).max(0.0).min(self.v_max)
    }

    /// Smallest headway whose desired speed equals `v`.
    pub fn invert(&self, v: f64) -> Result<f64> {
        if !(0.0..=self.v_max).contains(&v) {
            return Err(Error::Domain(format!(
                "speed {v} outside [0, {}] cannot be inverted by the range policy",
                self.v_max
            )));
        }
        let span = self.h_go - self.h_st;
        let h = match self.kind {
            PolicyKind::Linear => self.h_st + span * v / self.v_max,
            PolicyKind::QuadraticConcave => self.h_go - span * (1.0 - v / self.v_max).sqrt(),
        };
        Ok(h.clamp(self.h_st, self.h_go))
    }

    /// Gradient of the policy at `h_star`.
    pub fn kappa_at(&self, h_star: f64) -> Gradient {
        if !(h_star > self.h_st && h_star < self.h_go) {
            return Gradient {
                value: 0.0,
                saturated: true,
            };
        }
        let span = self.h_go - self.h_st;
        let value = match self.kind {
            PolicyKind::Linear => self.v_max / span,
            PolicyKind::QuadraticConcave => 2.0 * self.v_max * (self.h_go - h_star) / (span * span),
        };
        Gradient {
            value,
            saturated: false,
        }
    }
}

/// Follow the speed ahead, or the speed limit, whichever is smaller.
pub fn speed_policy(v: f64, v_max: f64) -> f64 {
    v.min(v_max)
}

/// Optimal-velocity human driver parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanGains {
    /// Headway gain, 1/s.
    pub alpha_h: f64,
    /// Speed-difference gain, 1/s.
    pub beta_h: f64,
    /// Driver plus vehicle response delay, s.
    pub tau: f64,
}

impl HumanGains {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_h >= 0.0 && self.beta_h >= 0.0 && self.tau >= 0.0) {
            return Err(Error::Config(format!(
                "human gains must be non-negative (alpha_h = {}, beta_h = {}, tau = {})",
                self.alpha_h, self.beta_h, self.tau
            )));
        }
        Ok(())
    }
}

impl Default for HumanGains {
    fn default() -> Self {
        Self {
            alpha_h: 0.1,
            beta_h: 0.6,
            tau: 0.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ControlKind {
    /// Cruise control: track `v_ref`.
    Cc,
    /// Adaptive cruise control: headway and speed of the vehicle ahead.
    Acc,
    /// Connected cruise control: ACC plus speeds of further vehicles ahead.
    Ccc,
    /// Traffic control: cruise control plus speeds of connected vehicles behind.
    Tc,
    /// Adaptive traffic control: ACC plus speeds of connected vehicles behind.
    Atc,
    /// Connected traffic control: CCC plus speeds of connected vehicles behind.
    Ctc,
}

impl ControlKind {
    /// Whether the law contains the headway term and the response to the vehicle directly ahead.
    pub fn follows_leader(self) -> bool {
        matches!(self, Self::Acc | Self::Ccc | Self::Atc | Self::Ctc)
    }

    pub fn tracks_reference(self) -> bool {
        matches!(self, Self::Cc | Self::Tc)
    }

    pub fn has_backward(self) -> bool {
        matches!(self, Self::Tc | Self::Atc | Self::Ctc)
    }

    pub fn has_multi_forward(self) -> bool {
        matches!(self, Self::Ccc | Self::Ctc)
    }
}

/// A speed feedback link to another vehicle in the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Link {
    /// Absolute index of the observed vehicle.
    pub index: i32,
    /// Speed gain, 1/s.
    pub gain: f64,
}

/// Control law of an automated vehicle.
///
/// `beta` is the gain on the speed of the vehicle directly ahead for the
/// leader-following laws and the gain on `v_ref` for CC and TC. `forward`
/// holds the additional CCC/CTC links to vehicles two or more positions ahead,
/// `backward` the links to connected vehicles behind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSpec {
    pub kind: ControlKind,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forward: Vec<Link>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub backward: Vec<Link>,
    /// Feedback delay, s.
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_ref: Option<f64>,
}

impl ControllerSpec {
    pub fn cc(beta: f64, v_ref: f64, sigma: f64) -> Self {
        Self {
            kind: ControlKind::Cc,
            alpha: 0.0,
            beta,
            forward: Vec::new(),
            backward: Vec::new(),
            sigma,
            v_ref: Some(v_ref),
        }
    }

    pub fn acc(alpha: f64, beta: f64, sigma: f64) -> Self {
        Self {
            kind: ControlKind::Acc,
            alpha,
            beta,
            forward: Vec::new(),
            backward: Vec::new(),
            sigma,
            v_ref: None,
        }
    }

    /// ATC with a single connected vehicle behind at index `back`.
    pub fn atc(alpha: f64, beta: f64, beta_b: f64, back: i32, sigma: f64) -> Self {
        Self {
            kind: ControlKind::Atc,
            alpha,
            beta,
            forward: Vec::new(),
            backward: vec![Link {
                index: back,
                gain: beta_b,
            }],
            sigma,
            v_ref: None,
        }
    }

    pub fn ccc(alpha: f64, beta: f64, forward: Vec<Link>, sigma: f64) -> Self {
        Self {
            kind: ControlKind::Ccc,
            alpha,
            beta,
            forward,
            backward: Vec::new(),
            sigma,
            v_ref: None,
        }
    }

    pub fn tc(beta: f64, v_ref: f64, backward: Vec<Link>, sigma: f64) -> Self {
        Self {
            kind: ControlKind::Tc,
            alpha: 0.0,
            beta,
            forward: Vec::new(),
            backward,
            sigma,
            v_ref: Some(v_ref),
        }
    }

    pub fn ctc(alpha: f64, beta: f64, forward: Vec<Link>, backward: Vec<Link>, sigma: f64) -> Self {
        Self {
            kind: ControlKind::Ctc,
            alpha,
            beta,
            forward,
            backward,
            sigma,
            v_ref: None,
        }
    }

    /// Sum of backward gains, the `β_B` of single-link ATC.
    pub fn beta_back(&self) -> f64 {
        self.backward.iter().map(|l| l.gain).sum()
    }

    /// Checks gain signs and that the link sets match the law, for a vehicle at `own`.
    pub fn validate(&self, own: i32) -> Result<()> {
        let bad = |msg: String| {
            Err(Error::Config(format!(
                "vehicle {own} ({:?}): {msg}",
                self.kind
            )))
        };
        let gains_ok = self.alpha >= 0.0
            && self.beta >= 0.0
            && self.sigma >= 0.0
            && self
                .forward
                .iter()
                .chain(&self.backward)
                .all(|l| l.gain >= 0.0);
        if !gains_ok {
            return bad("gains and delay must be non-negative".into());
        }
        if !self.kind.follows_leader() && self.alpha != 0.0 {
            return bad("no headway term without a vehicle ahead (alpha must be 0)".into());
        }
        if self.kind.tracks_reference() != self.v_ref.is_some() {
            return bad("v_ref is required for CC/TC and not allowed otherwise".into());
        }
        if !self.kind.has_multi_forward() && !self.forward.is_empty() {
            return bad("additional forward links are only allowed for CCC/CTC".into());
        }
        if let Some(l) = self.forward.iter().find(|l| l.index <= own + 1) {
            return bad(format!(
                "forward link {} must lie at least two vehicles ahead",
                l.index
            ));
        }
        if !self.kind.has_backward() && !self.backward.is_empty() {
            return bad("backward links are only allowed for TC/ATC/CTC".into());
        }
        if self.kind == ControlKind::Atc && self.backward.len() != 1 {
            return bad("ATC responds to exactly one connected vehicle behind".into());
        }
        if let Some(l) = self.backward.iter().find(|l| l.index >= own) {
            return bad(format!(
                "backward link {} must lie behind the vehicle",
                l.index
            ));
        }
        Ok(())
    }
}

/// Who produces the acceleration command of a vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Driver {
    /// Open-loop head vehicle driven by the lead profile.
    Lead,
    Human(HumanGains),
    Automated(ControllerSpec),
}

impl Driver {
    pub fn delay(&self) -> f64 {
        match self {
            Driver::Lead => 0.0,
            Driver::Human(g) => g.tau,
            Driver::Automated(c) => c.sigma,
        }
    }

    /// Short label used in CSV headers.
    pub fn label(&self) -> &'static str {
        match self {
            Driver::Lead => "LEAD",
            Driver::Human(_) => "HV",
            Driver::Automated(c) => match c.kind {
                ControlKind::Cc => "CC",
                ControlKind::Acc => "ACC",
                ControlKind::Ccc => "CCC",
                ControlKind::Tc => "TC",
                ControlKind::Atc => "ATC",
                ControlKind::Ctc => "CTC",
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSpec {
    pub index: i32,
    pub length: f64,
    pub limits: AccelLimits,
    pub policy: RangePolicy,
    pub driver: Driver,
    #[serde(default)]
    pub connected: bool,
}

impl VehicleSpec {
    pub fn lead(index: i32) -> Self {
        Self {
            index,
            length: VEHICLE_LENGTH,
            limits: AccelLimits::default(),
            policy: RangePolicy::automated(),
            driver: Driver::Lead,
            connected: false,
        }
    }

    pub fn human(index: i32, gains: HumanGains) -> Self {
        Self {
            index,
            length: VEHICLE_LENGTH,
            limits: AccelLimits::default(),
            policy: RangePolicy::human(),
            driver: Driver::Human(gains),
            connected: false,
        }
    }

    pub fn automated(index: i32, controller: ControllerSpec) -> Self {
        Self {
            index,
            length: VEHICLE_LENGTH,
            limits: AccelLimits::default(),
            policy: RangePolicy::automated(),
            driver: Driver::Automated(controller),
            connected: true,
        }
    }

    pub fn delay(&self) -> f64 {
        self.driver.delay()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    #[default]
    Straight,
    /// The top vehicle follows the bottom one around a closed road.
    Ring,
}

/// Gains of the reference automated vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomatedGains {
    pub alpha: f64,
    pub beta: f64,
    pub beta_b: f64,
    pub sigma: f64,
}

impl Default for AutomatedGains {
    fn default() -> Self {
        Self {
            alpha: 0.4,
            beta: 0.5,
            beta_b: 0.2,
            sigma: 0.6,
        }
    }
}

/// Ordered vehicle chain, lowest index first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub vehicles: Vec<VehicleSpec>,
    #[serde(default)]
    pub topology: Topology,
    /// Equilibrium speed, m/s.
    pub v_star: f64,
}

impl ChainConfig {
    /// Lead vehicle at index 1 followed by `followers` identical human drivers
    /// (indices `0, -1, ..., 1 - followers`).
    pub fn human_platoon(followers: usize, human: HumanGains, v_star: f64) -> Self {
        let mut vehicles: Vec<_> = (0..followers)
            .rev()
            .map(|k| VehicleSpec::human(-(k as i32), human))
            .collect();
        vehicles.push(VehicleSpec::lead(1));
        Self {
            vehicles,
            topology: Topology::Straight,
            v_star,
        }
    }

    /// Lead at 1, ego at 0 running `controller`, `n` human drivers behind it.
    pub fn ego_platoon(
        n: usize,
        controller: ControllerSpec,
        human: HumanGains,
        v_star: f64,
    ) -> Self {
        let mut vehicles: Vec<_> = (1..=n)
            .rev()
            .map(|k| VehicleSpec::human(-(k as i32), human))
            .collect();
        vehicles.push(VehicleSpec::automated(0, controller));
        vehicles.push(VehicleSpec::lead(1));
        Self {
            vehicles,
            topology: Topology::Straight,
            v_star,
        }
    }

    /// ACC ego followed by `n` human drivers.
    pub fn acc_platoon(n: usize, gains: AutomatedGains, human: HumanGains, v_star: f64) -> Self {
        Self::ego_platoon(
            n,
            ControllerSpec::acc(gains.alpha, gains.beta, gains.sigma),
            human,
            v_star,
        )
    }

    /// ATC ego responding to the connected human driver at index `-n`.
    pub fn atc_platoon(
        n: usize,
        gains: AutomatedGains,
        human: HumanGains,
        v_star: f64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config(
                "ATC needs at least one vehicle behind the ego".into(),
            ));
        }
        let back = -(n as i32);
        let controller =
            ControllerSpec::atc(gains.alpha, gains.beta, gains.beta_b, back, gains.sigma);
        let mut chain = Self::ego_platoon(n, controller, human, v_star);
        chain.vehicles[0].connected = true;
        Ok(chain)
    }

    pub fn position_of(&self, index: i32) -> Option<usize> {
        let first = self.vehicles.first()?.index;
        let pos = index.checked_sub(first)?;
        usize::try_from(pos)
            .ok()
            .filter(|&p| p < self.vehicles.len())
    }

    pub fn vehicle(&self, index: i32) -> Option<&VehicleSpec> {
        self.position_of(index).map(|p| &self.vehicles[p])
    }

    pub fn bottom_index(&self) -> i32 {
        self.vehicles.first().map_or(0, |v| v.index)
    }

    pub fn top_index(&self) -> i32 {
        self.vehicles.last().map_or(0, |v| v.index)
    }

    /// Index of the vehicle physically ahead of `index`, honouring the ring closure.
    pub fn ahead_of(&self, index: i32) -> Option<i32> {
        if index < self.top_index() {
            Some(index + 1)
        } else if self.topology == Topology::Ring {
            Some(self.bottom_index())
        } else {
            None
        }
    }

    /// Maps an index that may run past the top of a ring back into the chain.
    pub fn resolve(&self, index: i32) -> Option<i32> {
        let (lo, hi) = (self.bottom_index(), self.top_index());
        if (lo..=hi).contains(&index) {
            Some(index)
        } else if self.topology == Topology::Ring && index > hi {
            let count = hi - lo + 1;
            Some(lo + (index - lo).rem_euclid(count))
        } else {
            None
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.vehicles.len() < 2 {
            return Err(Error::Config("a chain needs at least two vehicles".into()));
        }
        for pair in self.vehicles.windows(2) {
            if pair[1].index != pair[0].index + 1 {
                return Err(Error::Config(format!(
                    "vehicle indices must be contiguous and increasing ({} followed by {})",
                    pair[0].index, pair[1].index
                )));
            }
        }
        if self.position_of(0).is_none() {
            return Err(Error::Config(
                "the chain has no ego vehicle (index 0)".into(),
            ));
        }
        let top = self.top_index();
        for v in &self.vehicles {
            if !(v.length > 0.0) {
                return Err(Error::Config(format!(
                    "vehicle {} has non-positive length",
                    v.index
                )));
            }
            v.limits.validate()?;
            v.policy.validate()?;
            match &v.driver {
                Driver::Lead => {
                    if v.index != top || self.topology == Topology::Ring {
                        return Err(Error::Config(format!(
                            "vehicle {}: only the top vehicle of a straight chain can be the open-loop lead",
                            v.index
                        )));
                    }
                }
                Driver::Human(g) => {
                    g.validate()?;
                    if self.ahead_of(v.index).is_none() {
                        return Err(Error::Config(format!(
                            "human driver {} has no vehicle ahead",
                            v.index
                        )));
                    }
                }
                Driver::Automated(c) => {
                    c.validate(v.index)?;
                    if c.kind.follows_leader() && self.ahead_of(v.index).is_none() {
                        return Err(Error::Config(format!(
                            "vehicle {} has no vehicle ahead to follow",
                            v.index
                        )));
                    }
                    for link in c.forward.iter().chain(&c.backward) {
                        if self.resolve(link.index).is_none() {
                            return Err(Error::Config(format!(
                                "vehicle {} links to missing vehicle {}",
                                v.index, link.index
                            )));
                        }
                    }
                }
            }
        }
        if !(self.v_star >= 0.0) {
            return Err(Error::Domain(format!(
                "equilibrium speed {} must be non-negative",
                self.v_star
            )));
        }
        Ok(())
    }
}

/// Uniform flow: every vehicle at `v_star` with its own constant headway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumState {
    pub v_star: f64,
    /// Headway of each vehicle to the one ahead, in chain order. The open-loop
    /// lead of a straight chain has no vehicle ahead and carries `f64::INFINITY`.
    pub headways: Vec<f64>,
    /// Rear-bumper positions at t = 0, in chain order.
    pub positions: Vec<f64>,
    /// Circumference of the road for ring chains.
    pub ring_length: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bisect_invert(p: &RangePolicy, v: f64) -> f64 {
        let (mut lo, mut hi) = (p.h_st, p.h_go);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if p.eval(mid) < v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn range_policy_examples() {
        let lin = RangePolicy::automated();
        let quad = RangePolicy::human();
        assert_eq!(lin.eval(5.0), 0.0);
        assert!((lin.eval(30.0) - 15.0).abs() < 1e-12);
        assert_eq!(quad.eval(100.0), 30.0);
        assert_eq!(quad.eval(0.0), 0.0);
        assert_eq!(lin.eval(-3.0), 0.0);
    }

    #[test]
    fn invert_examples() {
        let lin = RangePolicy::automated();
        let quad = RangePolicy::human();
        assert!((lin.invert(15.0).unwrap() - 30.0).abs() < 1e-12);
        assert!((lin.invert(15.0).unwrap() - bisect_invert(&lin, 15.0)).abs() < 1e-9);
        let h = quad.invert(15.0).unwrap();
        assert!((h - 19.644660940672622).abs() < 1e-9, "{h}");
        assert!((h - bisect_invert(&quad, 15.0)).abs() < 1e-9);
        assert_eq!(quad.invert(0.0).unwrap(), 5.0);
        assert_eq!(lin.invert(0.0).unwrap(), 5.0);
        assert_eq!(quad.invert(30.0).unwrap(), 55.0);
        assert!(matches!(lin.invert(31.0), Err(Error::Domain(_))));
        assert!(matches!(lin.invert(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn speed_policy_clamps() {
        assert_eq!(speed_policy(35.0, 30.0), 30.0);
        assert_eq!(speed_policy(25.0, 30.0), 25.0);
        assert_eq!(speed_policy(30.0, 30.0), 30.0);
    }

    #[test]
    fn kappa_examples() {
        let lin = RangePolicy::automated();
        let quad = RangePolicy::human();
        for h in [6.0, 20.0, 54.0] {
            let g = lin.kappa_at(h);
            assert!((g.value - 0.6).abs() < 1e-12 && !g.saturated);
        }
        // 2·30·(55 − h)/2500 = 0.7
        let h = 55.0 - 0.7 * 2500.0 / 60.0;
        assert!((quad.kappa_at(h).value - 0.7).abs() < 1e-12);
        assert!((h - 25.8333333).abs() < 1e-6);
        assert!(quad.kappa_at(55.0 - 1e-9).value < 1e-9);
        let sat = quad.kappa_at(55.0);
        assert!(sat.saturated && sat.value == 0.0);
        assert!(lin.kappa_at(4.0).saturated);
    }

    #[test]
    fn invalid_policy_rejected() {
        assert!(RangePolicy::new(PolicyKind::Linear, 10.0, 5.0, 30.0).is_err());
        assert!(RangePolicy::new(PolicyKind::Linear, 5.0, 55.0, 0.0).is_err());
        assert!(AccelLimits::new(0.0, 3.0).is_err());
    }

    #[test]
    fn controller_link_consistency() {
        assert!(ControllerSpec::acc(0.4, 0.5, 0.6).validate(0).is_ok());
        assert!(ControllerSpec::atc(0.4, 0.5, 0.2, -3, 0.6)
            .validate(0)
            .is_ok());
        let mut bad = ControllerSpec::acc(0.4, 0.5, 0.6);
        bad.backward.push(Link {
            index: -1,
            gain: 0.1,
        });
        assert!(bad.validate(0).is_err());
        let mut atc = ControllerSpec::atc(0.4, 0.5, 0.2, -3, 0.6);
        atc.backward.push(Link {
            index: -2,
            gain: 0.1,
        });
        assert!(atc.validate(0).is_err());
        let mut cc = ControllerSpec::cc(0.5, 20.0, 0.6);
        cc.alpha = 0.1;
        assert!(cc.validate(0).is_err());
        assert!(ControllerSpec::atc(0.4, 0.5, 0.2, 1, 0.6)
            .validate(0)
            .is_err());
        let ccc = ControllerSpec::ccc(
            0.4,
            0.3,
            vec![Link {
                index: 1,
                gain: 0.2,
            }],
            0.6,
        );
        assert!(ccc.validate(0).is_err());
    }

    #[test]
    fn platoon_constructors_validate() {
        let h = HumanGains::default();
        let chain = ChainConfig::human_platoon(11, h, 20.0);
        chain.validate().unwrap();
        assert_eq!(chain.bottom_index(), -10);
        assert_eq!(chain.top_index(), 1);
        let atc = ChainConfig::atc_platoon(10, AutomatedGains::default(), h, 20.0).unwrap();
        atc.validate().unwrap();
        assert!(atc.vehicles[0].connected);
        assert_eq!(atc.vehicles.len(), 12);
        let mut broken = atc.clone();
        broken.vehicles.remove(3);
        assert!(broken.validate().is_err());
    }

    #[test]
    fn ring_resolution_wraps() {
        let h = HumanGains::default();
        let mut ring = ChainConfig::human_platoon(4, h, 10.0);
        ring.vehicles.pop();
        ring.topology = Topology::Ring;
        ring.validate().unwrap();
        assert_eq!(ring.ahead_of(0), Some(-3));
        assert_eq!(ring.resolve(1), Some(-3));
        assert_eq!(ring.resolve(2), Some(-2));
    }
}
