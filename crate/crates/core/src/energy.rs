//! Energy per unit mass spent on traction, and gain-grid energy sweeps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChainConfig, Driver};
use crate::parallel::{map_indexed, Execution};
use crate::simulator::{build_equilibrium, simulate, LeadProfile, SimSettings, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyParams {
    /// Rolling resistance, m/s².
    pub a_r: f64,
    /// Air drag coefficient, 1/m.
    pub c_r: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            a_r: 0.0981,
            c_r: 0.0003,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        if self.a_r >= 0.0 && self.c_r >= 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "resistance coefficients must be non-negative: {self:?}"
            )))
        }
    }
}

/// Resistance deceleration `a_r + c_r v²`.
pub fn resistance(v: f64, params: &EnergyParams) -> f64 {
    params.a_r + params.c_r * v * v
}

/// Running integral of `v·max(0, v̇ + p(v))` over the trajectory (trapezoidal), J/kg.
pub fn cumulative_energy(traj: &Trajectory, index: i32, params: &EnergyParams) -> Result<Vec<f64>> {
    let p = traj
        .slot(index)
        .ok_or_else(|| Error::Domain(format!("vehicle {index} is not in the trajectory")))?;
    let power: Vec<f64> = traj.speed[p]
        .iter()
        .zip(&traj.accel[p])
        .map(|(&v, &a)| v * (a + resistance(v, params)).max(0.0))
        .collect();
    let mut out = Vec::with_capacity(power.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..power.len() {
        acc += 0.5 * (power[k] + power[k - 1]) * (traj.time[k] - traj.time[k - 1]);
        out.push(acc);
    }
    Ok(out)
}

/// Total energy `w_n(t_f)`.
pub fn total_energy(traj: &Trajectory, index: i32, params: &EnergyParams) -> Result<f64> {
    Ok(*cumulative_energy(traj, index, params)?
        .last()
        .unwrap_or(&0.0))
}

/// Closed, evenly spaced axis `start, start + step, ..., end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainRange {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl GainRange {
    pub fn single(value: f64) -> Self {
        Self {
            start: value,
            end: value,
            step: 1.0,
        }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.start.is_finite() && self.end >= self.start && self.step > 0.0) {
            return Err(Error::Config(format!(
                "empty or invalid gain range {self:?}"
            )));
        }
        let count = ((self.end - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count)
            .map(|i| self.start + i as f64 * self.step)
            .collect())
    }
}

/// Energy of the ego and of the connected vehicle behind it over a (β, β_B) grid.
///
/// Matrices are indexed `[i_beta][i_beta_b]`; `None` marks a cell whose run collided.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyGrid {
    pub beta: Vec<f64>,
    pub beta_b: Vec<f64>,
    pub ego: Vec<Vec<Option<f64>>>,
    pub tail: Vec<Vec<Option<f64>>>,
    /// Index of the connected vehicle behind the ego.
    pub tail_index: i32,
}

impl EnergyGrid {
    pub fn invalid_cells(&self) -> usize {
        self.ego.iter().flatten().filter(|c| c.is_none()).count()
    }
}

/// Everything except the swept gains: a chain with an ATC ego at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTemplate {
    pub chain: ChainConfig,
    pub lead: LeadProfile,
    pub settings: SimSettings,
    pub params: EnergyParams,
}

impl SweepTemplate {
    fn tail_index(&self) -> Result<i32> {
        let ego = self.ego_spec()?;
        Ok(ego
            .backward
            .first()
            .map_or(self.chain.bottom_index(), |l| l.index))
    }

    fn ego_spec(&self) -> Result<&crate::model::ControllerSpec> {
        match self.chain.vehicle(0).map(|v| &v.driver) {
            Some(Driver::Automated(c)) => Ok(c),
            _ => Err(Error::Config(
                "energy sweeps need an automated ego at index 0".into(),
            )),
        }
    }

    /// Copy of the chain with the ego's β and β_B replaced.
    pub fn with_gains(&self, beta: f64, beta_b: f64) -> Result<ChainConfig> {
        let mut chain = self.chain.clone();
        let p = chain.position_of(0).expect("ego present");
        if let Driver::Automated(c) = &mut chain.vehicles[p].driver {
            c.beta = beta;
            if let Some(link) = c.backward.first_mut() {
                link.gain = beta_b;
            } else if beta_b != 0.0 {
                return Err(Error::Config(
                    "ego has no backward link to carry β_B".into(),
                ));
            }
        }
        Ok(chain)
    }

    /// Final energies of the ego and the tail; `None` on collision.
    pub fn run(&self, beta: f64, beta_b: f64) -> Result<Option<(f64, f64)>> {
        let chain = self.with_gains(beta, beta_b)?;
        let eq = build_equilibrium(&chain)?;
        match simulate(&chain, &eq, &self.lead, &self.settings) {
            Ok(traj) => Ok(Some((
                total_energy(&traj, 0, &self.params)?,
                total_energy(&traj, self.tail_index()?, &self.params)?,
            ))),
            Err(Error::Collision { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

/// One simulation per grid point, evaluated under `exec`; output order is deterministic.
pub fn energy_sweep(
    template: &SweepTemplate,
    beta: &GainRange,
    beta_b: &GainRange,
    exec: Execution,
) -> Result<EnergyGrid> {
    template.params.validate()?;
    template.ego_spec()?;
    let betas = beta.values()?;
    let beta_bs = beta_b.values()?;
    let cols = beta_bs.len();
    let cells = map_indexed(betas.len() * cols, exec, |i| {
        template.run(betas[i / cols], beta_bs[i % cols])
    });
    let mut ego = vec![Vec::with_capacity(cols); betas.len()];
    let mut tail = vec![Vec::with_capacity(cols); betas.len()];
    for (i, cell) in cells.into_iter().enumerate() {
        let cell = cell?;
        ego[i / cols].push(cell.map(|c| c.0));
        tail[i / cols].push(cell.map(|c| c.1));
    }
    Ok(EnergyGrid {
        beta: betas,
        beta_b: beta_bs,
        ego,
        tail,
        tail_index: template.tail_index()?,
    })
}

/// Relative saving `(w_ref - w) / w_ref`.
pub fn relative_saving(reference: f64, value: f64) -> f64 {
    (reference - value) / reference
}
