//! Fixed-step integration of the delayed, saturated double-integrator chain.
//!
//! Every follower evaluates its control law on the current state; the command
//! is stored on the step grid and applied `delay` seconds later through the
//! saturation. The open-loop lead follows its profile analytically.

use serde::{Deserialize, Serialize};

use crate::controllers::{hdm_accel, saturate, NeighborObservation, Observations};
use crate::error::{Error, Result};
use crate::model::{ChainConfig, Driver, EquilibriumState, Topology};

/// Constant acceleration over `[t_start, t_end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccelSegment {
    pub t_start: f64,
    pub t_end: f64,
    pub accel: f64,
}

/// Motion of the open-loop head vehicle relative to its equilibrium cruise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LeadProfile {
    /// Piecewise-constant acceleration; zero outside the segments.
    Segments { segments: Vec<AccelSegment> },
    /// Speed `v* + amplitude·sin(omega·t)`.
    Sinusoid { amplitude: f64, omega: f64 },
}

impl Default for LeadProfile {
    /// Brake at 1 m/s² for 10 s, accelerate at 0.5 m/s² for 20 s, then cruise.
    fn default() -> Self {
        LeadProfile::Segments {
            segments: vec![
                AccelSegment {
                    t_start: 0.0,
                    t_end: 10.0,
                    accel: -1.0,
                },
                AccelSegment {
                    t_start: 10.0,
                    t_end: 30.0,
                    accel: 0.5,
                },
            ],
        }
    }
}

impl LeadProfile {
    pub fn cruise() -> Self {
        LeadProfile::Segments {
            segments: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LeadProfile::Segments { segments } => {
                let mut last_end = f64::NEG_INFINITY;
                for seg in segments {
                    if !(seg.t_end > seg.t_start) || !seg.accel.is_finite() {
                        return Err(Error::Config(format!("invalid lead segment {seg:?}")));
                    }
                    if seg.t_start < last_end {
                        return Err(Error::Config(
                            "lead segments must be ordered and non-overlapping".into(),
                        ));
                    }
                    last_end = seg.t_end;
                }
                Ok(())
            }
            LeadProfile::Sinusoid { amplitude, omega } => {
                if !(amplitude.is_finite() && *omega > 0.0) {
                    return Err(Error::Config(
                        "sinusoidal lead needs a finite amplitude and omega > 0".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Acceleration at time `t` (profile time starts at 0).
    pub fn accel(&self, t: f64) -> f64 {
        match self {
            LeadProfile::Segments { segments } => segments
                .iter()
                .find(|s| t >= s.t_start && t < s.t_end)
                .map_or(0.0, |s| s.accel),
            LeadProfile::Sinusoid { amplitude, omega } => amplitude * omega * (omega * t).cos(),
        }
    }

    /// Speed and displacement offsets relative to cruising at constant speed since t = 0.
    pub fn offsets(&self, t: f64) -> (f64, f64) {
        match self {
            LeadProfile::Segments { segments } => {
                let (mut dv, mut ds) = (0.0, 0.0);
                let mut cursor = 0.0f64;
                for seg in segments {
                    let start = seg.t_start.max(0.0);
                    if start >= t {
                        break;
                    }
                    // Cruise at the current offset until the segment starts.
                    ds += dv * (start - cursor).max(0.0);
                    let end = seg.t_end.min(t).max(start);
                    let span = end - start;
                    ds += dv * span + 0.5 * seg.accel * span * span;
                    dv += seg.accel * span;
                    cursor = end;
                }
                ds += dv * (t - cursor).max(0.0);
                (dv, ds)
            }
            LeadProfile::Sinusoid { amplitude, omega } => (
                amplitude * (omega * t).sin(),
                amplitude * (1.0 - (omega * t).cos()) / omega,
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    /// Explicit Euler; delays must be integer multiples of the step.
    #[default]
    Euler,
    /// Classical RK4 with cubic interpolation of the command history.
    Rk4Lag,
}

/// Initial speed offset of one vehicle, for ring studies without a lead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedKick {
    pub index: i32,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    pub dt: f64,
    pub t0: f64,
    pub tf: f64,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kick: Option<SpeedKick>,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t0: 0.0,
            tf: 60.0,
            integrator: Integrator::Euler,
            kick: None,
        }
    }
}

impl SimSettings {
    pub fn steps(&self) -> usize {
        ((self.tf - self.t0) / self.dt).round() as usize
    }

    fn validate(&self, chain: &ChainConfig) -> Result<()> {
        if !(self.dt > 0.0 && self.tf > self.t0) {
            return Err(Error::Config(format!(
                "time step must be positive and the horizon non-empty (dt = {}, [{}, {}])",
                self.dt, self.t0, self.tf
            )));
        }
        for v in &chain.vehicles {
            let delay = v.delay();
            let ratio = delay / self.dt;
            let aligned = (ratio - ratio.round()).abs() < 1e-9 * ratio.max(1.0);
            match self.integrator {
                Integrator::Euler if !aligned => {
                    return Err(Error::Config(format!(
                        "delay not multiple of dt: vehicle {} has delay {delay} s, dt = {} s",
                        v.index, self.dt
                    )));
                }
                Integrator::Rk4Lag => {
                    if !aligned {
                        log::warn!(
                            "vehicle {} delay {delay} s is not a multiple of dt = {}",
                            v.index,
                            self.dt
                        );
                    }
                    if !matches!(v.driver, Driver::Lead) && delay < self.dt {
                        return Err(Error::Config(format!(
                            "rk4-lag needs delays of at least one step (vehicle {} has {delay} s)",
                            v.index
                        )));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Time histories of a whole chain.
///
/// Per-vehicle arrays are in chain order (lowest index first) and have the
/// length of `time`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub time: Vec<f64>,
    pub indices: Vec<i32>,
    pub labels: Vec<String>,
    pub lengths: Vec<f64>,
    pub ring_length: Option<f64>,
    pub position: Vec<Vec<f64>>,
    pub speed: Vec<Vec<f64>>,
    /// Commanded acceleration `u_n(t)`.
    pub command: Vec<Vec<f64>>,
    /// Realized acceleration `sat(u_n(t - delay))`.
    pub accel: Vec<Vec<f64>>,
    /// Steps at which some speed was floored at zero.
    pub speed_floor_events: usize,
    /// Steps at which some realized acceleration sat on a limit.
    pub saturation_events: usize,
}

impl Trajectory {
    pub fn slot(&self, index: i32) -> Option<usize> {
        self.indices.iter().position(|&i| i == index)
    }

    pub fn speed_of(&self, index: i32) -> Option<&[f64]> {
        self.slot(index).map(|p| self.speed[p].as_slice())
    }

    pub fn accel_of(&self, index: i32) -> Option<&[f64]> {
        self.slot(index).map(|p| self.accel[p].as_slice())
    }

    pub fn min_speed(&self, index: i32) -> Option<f64> {
        self.speed_of(index)
            .map(|v| v.iter().copied().fold(f64::INFINITY, f64::min))
    }

    pub fn max_speed(&self, index: i32) -> Option<f64> {
        self.speed_of(index)
            .map(|v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    /// Headway history of the vehicle at chain slot `p`; `None` for the head of a straight chain.
    pub fn headway(&self, p: usize) -> Option<Vec<f64>> {
        let (ahead, wrap) = if p + 1 < self.indices.len() {
            (p + 1, 0.0)
        } else {
            (0, self.ring_length?)
        };
        Some(
            self.position[ahead]
                .iter()
                .zip(&self.position[p])
                .map(|(sa, s)| sa + wrap - s - self.lengths[p])
                .collect(),
        )
    }

    pub fn min_headway(&self, p: usize) -> Option<f64> {
        self.headway(p)
            .map(|h| h.into_iter().fold(f64::INFINITY, f64::min))
    }

    pub fn index_of_tail(&self) -> i32 {
        self.indices[0]
    }

    pub fn index_of_head(&self) -> i32 {
        *self.indices.last().expect("non-empty trajectory")
    }
}

/// Uniform flow at `chain.v_star`, stacked rear to front from position 0.
pub fn build_equilibrium(chain: &ChainConfig) -> Result<EquilibriumState> {
    chain.validate()?;
    let v_star = chain.v_star;
    let mut headways = Vec::with_capacity(chain.vehicles.len());
    for v in &chain.vehicles {
        if matches!(v.driver, Driver::Lead) {
            headways.push(f64::INFINITY);
            continue;
        }
        if v_star > v.policy.v_max {
            return Err(Error::Domain(format!(
                "equilibrium speed {v_star} exceeds the speed limit {} of vehicle {}",
                v.policy.v_max, v.index
            )));
        }
        headways.push(v.policy.invert(v_star)?);
    }
    let mut positions = Vec::with_capacity(chain.vehicles.len());
    let mut s = 0.0;
    for (v, h) in chain.vehicles.iter().zip(&headways) {
        positions.push(s);
        s += v.length + h;
    }
    let ring_length = (chain.topology == Topology::Ring).then_some(s);
    Ok(EquilibriumState {
        v_star,
        headways,
        positions,
        ring_length,
    })
}

/// Where a vehicle reads its neighbours from.
struct Plan {
    ahead: Option<(usize, f64)>,
    forward: Vec<(usize, f64)>,
    backward: Vec<usize>,
    delay: f64,
    delay_steps: usize,
}

struct Chain<'a> {
    config: &'a ChainConfig,
    plans: Vec<Plan>,
    lead_slot: Option<usize>,
}

impl<'a> Chain<'a> {
    fn new(config: &'a ChainConfig, eq: &EquilibriumState, dt: f64) -> Result<Self> {
        let count = config.vehicles.len() as i32;
        let ring = eq.ring_length.unwrap_or(0.0);
        // Slot of `index` and the position offset needed when it wraps around the ring.
        let locate = |index: i32| -> Option<(usize, f64)> {
            let resolved = config.resolve(index)?;
            let laps = (index - resolved) / count;
            Some((config.position_of(resolved)?, laps as f64 * ring))
        };
        let mut plans = Vec::with_capacity(config.vehicles.len());
        for v in &config.vehicles {
            let ahead = config.ahead_of(v.index).and_then(|_| locate(v.index + 1));
            let (forward, backward) = match &v.driver {
                Driver::Automated(c) => {
                    let fwd = c
                        .forward
                        .iter()
                        .map(|l| {
                            locate(l.index).ok_or_else(|| {
                                Error::Config(format!("missing vehicle {}", l.index))
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let bwd = c
                        .backward
                        .iter()
                        .map(|l| {
                            config.position_of(l.index).ok_or_else(|| {
                                Error::Config(format!("missing vehicle {}", l.index))
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    (fwd, bwd)
                }
                _ => (Vec::new(), Vec::new()),
            };
            let delay = v.delay();
            plans.push(Plan {
                ahead,
                forward,
                backward,
                delay,
                delay_steps: (delay / dt).round() as usize,
            });
        }
        let lead_slot = config
            .vehicles
            .iter()
            .position(|v| matches!(v.driver, Driver::Lead));
        Ok(Self {
            config,
            plans,
            lead_slot,
        })
    }

    fn headway(&self, p: usize, s: &[f64]) -> Option<f64> {
        self.plans[p]
            .ahead
            .map(|(a, wrap)| s[a] + wrap - s[p] - self.config.vehicles[p].length)
    }

    fn commands(&self, s: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        let mut fwd = Vec::new();
        let mut bwd = Vec::new();
        for (p, spec) in self.config.vehicles.iter().enumerate() {
            let plan = &self.plans[p];
            out[p] = match &spec.driver {
                Driver::Lead => 0.0,
                Driver::Human(g) => {
                    let (a, _) = plan
                        .ahead
                        .expect("validated human driver has a vehicle ahead");
                    let h = self.headway(p, s).unwrap_or_default();
                    hdm_accel(g, &spec.policy, h, v[a] - v[p], v[p])
                }
                Driver::Automated(c) => {
                    fwd.clear();
                    fwd.extend(plan.forward.iter().map(|&(q, _)| v[q]));
                    bwd.clear();
                    bwd.extend(plan.backward.iter().map(|&q| v[q]));
                    let ahead = plan.ahead.map(|(a, _)| NeighborObservation {
                        index: self.config.vehicles[a].index,
                        headway: self.headway(p, s),
                        speed: v[a],
                    });
                    let obs = Observations {
                        own_speed: v[p],
                        ahead,
                        forward: &fwd,
                        backward: &bwd,
                    };
                    c.command(&spec.policy, &obs)?
                }
            };
        }
        Ok(())
    }

    fn check_headways(&self, t: f64, s: &[f64]) -> Result<()> {
        for p in 0..self.plans.len() {
            if let Some(h) = self.headway(p, s) {
                if h <= 0.0 {
                    let (a, _) = self.plans[p]
                        .ahead
                        .expect("headway implies a vehicle ahead");
                    return Err(Error::Collision {
                        time: t,
                        follower: self.config.vehicles[p].index,
                        leader: self.config.vehicles[a].index,
                        headway: h,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Cubic Lagrange interpolation of the command history at fractional step `x`,
/// using only samples up to `latest`. Samples before step 0 equal `before`.
fn interpolate(history: &[f64], before: f64, x: f64, latest: usize) -> f64 {
    let sample = |j: i64| if j < 0 { before } else { history[j as usize] };
    let nearest = x.round();
    if (x - nearest).abs() < 1e-9 {
        return sample(nearest as i64);
    }
    let base = x.floor() as i64;
    let first = (base - 1).min(latest as i64 - 3);
    let nodes = [first, first + 1, first + 2, first + 3];
    let mut acc = 0.0;
    for (i, &ni) in nodes.iter().enumerate() {
        let mut w = 1.0;
        for (j, &nj) in nodes.iter().enumerate() {
            if i != j {
                w *= (x - nj as f64) / (ni - nj) as f64;
            }
        }
        acc += w * sample(ni);
    }
    acc
}

/// Integrates the chain from its equilibrium over the settings' horizon.
pub fn simulate(
    chain: &ChainConfig,
    eq: &EquilibriumState,
    lead: &LeadProfile,
    settings: &SimSettings,
) -> Result<Trajectory> {
    chain.validate()?;
    settings.validate(chain)?;
    lead.validate()?;
    if eq.positions.len() != chain.vehicles.len() {
        return Err(Error::Config("equilibrium does not match the chain".into()));
    }
    let dt = settings.dt;
    let steps = settings.steps();
    let n = chain.vehicles.len();
    let net = Chain::new(chain, eq, dt)?;

    let mut s = eq.positions.clone();
    let mut v = vec![eq.v_star; n];

    // Constant history on [-delay, 0]: the command the equilibrium state produces.
    let mut before = vec![0.0; n];
    net.commands(&s, &v, &mut before)?;

    if let Some(kick) = settings.kick {
        let p = chain
            .position_of(kick.index)
            .ok_or_else(|| Error::Config(format!("kick targets missing vehicle {}", kick.index)))?;
        v[p] = (v[p] + kick.delta).max(0.0);
    }

    let lead_s0 = net.lead_slot.map(|p| eq.positions[p]);
    let lead_state = |t: f64| -> (f64, f64, f64) {
        let rel = t - settings.t0;
        let (dv, ds) = lead.offsets(rel);
        (
            lead_s0.unwrap_or(0.0) + eq.v_star * rel + ds,
            eq.v_star + dv,
            lead.accel(rel),
        )
    };
    if let LeadProfile::Segments { .. } = lead {
        // The profile must not drive the head vehicle backwards.
        let mut k = 0;
        while k <= steps {
            if lead_state(settings.t0 + k as f64 * dt).1 < -1e-9 {
                return Err(Error::Config(
                    "lead profile drives the head vehicle below zero speed".into(),
                ));
            }
            k += 1;
        }
    }

    let mut traj = Trajectory {
        time: Vec::with_capacity(steps + 1),
        indices: chain.vehicles.iter().map(|v| v.index).collect(),
        labels: chain
            .vehicles
            .iter()
            .map(|v| v.driver.label().to_string())
            .collect(),
        lengths: chain.vehicles.iter().map(|v| v.length).collect(),
        ring_length: eq.ring_length,
        position: vec![Vec::with_capacity(steps + 1); n],
        speed: vec![Vec::with_capacity(steps + 1); n],
        command: vec![Vec::with_capacity(steps + 1); n],
        accel: vec![Vec::with_capacity(steps + 1); n],
        speed_floor_events: 0,
        saturation_events: 0,
    };

    let mut u = vec![0.0; n];
    let mut a = vec![0.0; n];
    let mut floor_logged = false;

    let limits: Vec<_> = chain.vehicles.iter().map(|v| v.limits).collect();
    let realized = |p: usize, raw: f64, sat_hit: &mut bool| -> f64 {
        let r = saturate(raw, &limits[p]);
        if r != raw {
            *sat_hit = true;
        }
        r
    };

    for k in 0..=steps {
        let t = settings.t0 + k as f64 * dt;
        if let Some(p) = net.lead_slot {
            let (ls, lv, _) = lead_state(t);
            s[p] = ls;
            v[p] = lv;
        }
        net.commands(&s, &v, &mut u)?;
        let mut sat_hit = false;
        for p in 0..n {
            traj.command[p].push(u[p]);
            a[p] = if Some(p) == net.lead_slot {
                lead_state(t).2
            } else {
                let d = net.plans[p].delay_steps;
                let raw = match settings.integrator {
                    Integrator::Euler => {
                        if k >= d {
                            traj.command[p][k - d]
                        } else {
                            before[p]
                        }
                    }
                    Integrator::Rk4Lag => {
                        let x = k as f64 - net.plans[p].delay / dt;
                        interpolate(&traj.command[p], before[p], x, k)
                    }
                };
                realized(p, raw, &mut sat_hit)
            };
            traj.position[p].push(s[p]);
            traj.speed[p].push(v[p]);
            traj.accel[p].push(a[p]);
        }
        traj.time.push(t);
        if sat_hit {
            traj.saturation_events += 1;
        }
        if k == steps {
            break;
        }

        let mut floored = false;
        for p in 0..n {
            if Some(p) == net.lead_slot {
                continue;
            }
            let (ds, dv) = match settings.integrator {
                Integrator::Euler => (dt * v[p], dt * a[p]),
                Integrator::Rk4Lag => {
                    let x = k as f64 - net.plans[p].delay / dt;
                    let mut ignore = false;
                    let a_half = realized(
                        p,
                        interpolate(&traj.command[p], before[p], x + 0.5, k),
                        &mut ignore,
                    );
                    let a_full = realized(
                        p,
                        interpolate(&traj.command[p], before[p], x + 1.0, k),
                        &mut ignore,
                    );
                    let v2 = v[p] + 0.5 * dt * a[p];
                    let v3 = v[p] + 0.5 * dt * a_half;
                    let v4 = v[p] + dt * a_half;
                    (
                        dt / 6.0 * (v[p] + 2.0 * v2 + 2.0 * v3 + v4),
                        dt / 6.0 * (a[p] + 4.0 * a_half + a_full),
                    )
                }
            };
            s[p] += ds;
            v[p] += dv;
            if v[p] < 0.0 {
                v[p] = 0.0;
                floored = true;
            }
        }
        if floored {
            traj.speed_floor_events += 1;
            if !floor_logged {
                log::warn!("speed floored at zero at t = {:.2} s", t + dt);
                floor_logged = true;
            }
        }
        if let Some(p) = net.lead_slot {
            let (ls, lv, _) = lead_state(t + dt);
            s[p] = ls;
            v[p] = lv;
        }
        net.check_headways(t + dt, &s)?;
    }
    Ok(traj)
}

/// Steady-state speed amplitude ratio between the tail and the head vehicle
/// under a small sinusoidal lead perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseRatio {
    pub omega: f64,
    pub ratio: f64,
    pub head_amplitude: f64,
    pub tail_amplitude: f64,
}

/// Amplitude of the `omega` component of `signal` sampled on `time`, by least
/// squares over a whole number of periods at the end of the record.
pub fn harmonic_amplitude(time: &[f64], signal: &[f64], omega: f64, window: f64) -> Option<f64> {
    let t_end = *time.last()?;
    let period = 2.0 * std::f64::consts::PI / omega;
    let periods = (window / period).floor();
    if periods < 1.0 {
        return None;
    }
    let t_start = t_end - periods * period;
    let start = time.iter().position(|&t| t >= t_start - 1e-12)?;
    // Normal equations for [1, sin, cos].
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for (t, y) in time[start..].iter().zip(&signal[start..]) {
        let basis = [1.0, (omega * t).sin(), (omega * t).cos()];
        for i in 0..3 {
            rhs[i] += basis[i] * y;
            for j in 0..3 {
                m[i][j] += basis[i] * basis[j];
            }
        }
    }
    let coeffs = solve3(m, rhs)?;
    Some(coeffs[1].hypot(coeffs[2]))
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / m[row][row];
    }
    Some(x)
}

/// Drives the head with `v* + amplitude·sin(omega t)` and measures the
/// tail/head amplitude ratio over the last quarter of the horizon.
pub fn perturbation_response(
    chain: &ChainConfig,
    amplitude: f64,
    omega: f64,
    settings: &SimSettings,
) -> Result<ResponseRatio> {
    if !(amplitude > 0.0) {
        return Err(Error::Domain(
            "perturbation amplitude must be positive".into(),
        ));
    }
    if !(omega > 0.0) {
        return Err(Error::Domain(
            "perturbation frequency must be positive".into(),
        ));
    }
    let eq = build_equilibrium(chain)?;
    let lead = LeadProfile::Sinusoid { amplitude, omega };
    let traj = simulate(chain, &eq, &lead, settings)?;
    if traj.saturation_events > 0 {
        let p = (0..traj.indices.len())
            .find(|&p| {
                let lim = chain.vehicles[p].limits;
                traj.accel[p]
                    .iter()
                    .any(|&a| a <= -lim.a_min || a >= lim.a_max)
            })
            .unwrap_or(0);
        let k = traj.accel[p]
            .iter()
            .position(|&a| {
                let lim = chain.vehicles[p].limits;
                a <= -lim.a_min || a >= lim.a_max
            })
            .unwrap_or(0);
        return Err(Error::Saturated {
            time: traj.time[k],
            index: traj.indices[p],
        });
    }
    let window = 0.25 * (settings.tf - settings.t0);
    let amp = |index: i32| {
        let speed = traj.speed_of(index).expect("index from the trajectory");
        harmonic_amplitude(&traj.time, speed, omega, window).ok_or_else(|| {
            Error::Domain("horizon too short for one full period in its last quarter".into())
        })
    };
    let head_amplitude = amp(traj.index_of_head())?;
    let tail_amplitude = amp(traj.index_of_tail())?;
    Ok(ResponseRatio {
        omega,
        ratio: tail_amplitude / head_amplitude,
        head_amplitude,
        tail_amplitude,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AutomatedGains, HumanGains};

    #[test]
    fn lead_offsets_follow_reference_profile() {
        let lead = LeadProfile::default();
        let (dv, _) = lead.offsets(10.0);
        assert!((dv + 10.0).abs() < 1e-12);
        let (dv, ds) = lead.offsets(30.0);
        assert!(dv.abs() < 1e-12);
        // −50 m over the braking phase, then −200 + 100 while recovering
        assert!((ds - (-50.0 - 200.0 + 100.0)).abs() < 1e-9, "{ds}");
        let (dv, ds2) = lead.offsets(40.0);
        assert!(dv.abs() < 1e-12 && (ds2 - ds).abs() < 1e-9);
    }

    #[test]
    fn overlapping_segments_rejected() {
        let lead = LeadProfile::Segments {
            segments: vec![
                AccelSegment {
                    t_start: 0.0,
                    t_end: 5.0,
                    accel: 1.0,
                },
                AccelSegment {
                    t_start: 4.0,
                    t_end: 6.0,
                    accel: 1.0,
                },
            ],
        };
        assert!(lead.validate().is_err());
    }

    #[test]
    fn equilibrium_headways() {
        let h = HumanGains::default();
        let acc = ChainConfig::acc_platoon(0, AutomatedGains::default(), h, 15.0);
        let eq = build_equilibrium(&acc).unwrap();
        assert!((eq.headways[0] - 30.0).abs() < 1e-12);
        let mixed = ChainConfig::acc_platoon(3, AutomatedGains::default(), h, 15.0);
        let eq = build_equilibrium(&mixed).unwrap();
        for hw in &eq.headways[..3] {
            assert!((hw - 19.644660940672622).abs() < 1e-9);
        }
        assert!((eq.headways[3] - 30.0).abs() < 1e-12);
        assert!(eq.headways[4].is_infinite());
        let stopped = ChainConfig::human_platoon(4, h, 0.0);
        let eq = build_equilibrium(&stopped).unwrap();
        assert!(eq.headways[..4].iter().all(|&x| x == 5.0));
        let too_fast = ChainConfig::human_platoon(4, h, 31.0);
        assert!(matches!(
            build_equilibrium(&too_fast),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn interpolation_is_exact_for_cubics() {
        let f = |x: f64| 0.5 * x * x * x - x * x + 3.0;
        let hist: Vec<f64> = (0..10).map(|j| f(j as f64)).collect();
        for x in [2.5, 3.25, 8.5, 8.9] {
            assert!((interpolate(&hist, 0.0, x, 9) - f(x)).abs() < 1e-9, "{x}");
        }
    }

    #[test]
    fn misaligned_delay_rejected_for_euler() {
        let h = HumanGains {
            tau: 0.805,
            ..HumanGains::default()
        };
        let chain = ChainConfig::human_platoon(2, h, 20.0);
        let eq = build_equilibrium(&chain).unwrap();
        let err = simulate(
            &chain,
            &eq,
            &LeadProfile::default(),
            &SimSettings::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("delay not multiple of dt"));
    }

    #[test]
    fn zero_amplitude_is_an_error() {
        let chain =
            ChainConfig::acc_platoon(0, AutomatedGains::default(), HumanGains::default(), 20.0);
        assert!(perturbation_response(&chain, 0.0, 0.5, &SimSettings::default()).is_err());
    }

    #[test]
    fn harmonic_fit_recovers_amplitude() {
        let time: Vec<f64> = (0..=4000).map(|k| k as f64 * 0.01).collect();
        let sig: Vec<f64> = time
            .iter()
            .map(|t| 3.0 + 0.7 * (1.3 * t + 0.4).sin())
            .collect();
        let a = harmonic_amplitude(&time, &sig, 1.3, 10.0).unwrap();
        assert!((a - 0.7).abs() < 1e-6, "{a}");
    }
}
