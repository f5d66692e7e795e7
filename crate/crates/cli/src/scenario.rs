//! Scenario files: one JSON document describing a chain, its lead profile,
//! simulation settings, energy parameters and analysis options.
//!
//! ```json
//! {
//!   "schema": 1,
//!   "chain": { "platoon": { "ego": "atc", "n": 10, "v_star": 25.0 } },
//!   "lead": { "type": "segments", "segments": [
//!     { "t_start": 0.0, "t_end": 10.0, "accel": -1.0 },
//!     { "t_start": 10.0, "t_end": 30.0, "accel": 0.5 } ] },
//!   "sim": { "dt": 0.01, "t0": 0.0, "tf": 60.0, "integrator": "euler" },
//!   "energy": { "a_r": 0.0981, "c_r": 0.0003 },
//!   "sweep": { "beta": { "start": 0.3, "end": 1.0, "step": 0.05 },
//!              "beta_b": { "start": 0.0, "end": 0.4, "step": 0.01 } },
//!   "analysis": { "kappa": 0.6, "kappa_h": 0.7, "plane": "beta-alpha" }
//! }
//! ```
//!
//! Every section except `chain` is optional. `chain` is either a `platoon`
//! (lead, ego at index 0 and `n` identical human drivers behind it) or an
//! explicit `vehicles` chain. In `analysis`, `kappa` and `kappa_h` set to
//! `null` take the range-policy gradients at the equilibrium instead. Unknown
//! keys are rejected.

use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use vring::energy::{EnergyParams, GainRange, SweepTemplate};
use vring::freq::{chain_model, ChainModel};
use vring::model::{AutomatedGains, ChainConfig, ControllerSpec, Driver, HumanGains, Link};
use vring::simulator::{LeadProfile, SimSettings};
use vring::stability::boundaries::Plane;
use vring::stability::chart::ChartSpec;
use vring::stability::roots::Rect;
use vring::{Error, Result};

pub const SCENARIO_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EgoChoice {
    Hv,
    Acc,
    Atc,
    Tc,
}

/// Lead at index 1, ego at 0, human drivers at `-1..=-n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatoonSpec {
    pub ego: EgoChoice,
    pub n: usize,
    #[serde(default = "default_v_star")]
    pub v_star: f64,
    #[serde(default)]
    pub human: HumanGains,
    #[serde(default)]
    pub gains: AutomatedGains,
}

fn default_v_star() -> f64 {
    25.0
}

impl PlatoonSpec {
    pub fn build(&self) -> Result<ChainConfig> {
        let g = self.gains;
        match self.ego {
            EgoChoice::Hv => Ok(ChainConfig::human_platoon(
                self.n + 1,
                self.human,
                self.v_star,
            )),
            EgoChoice::Acc => Ok(ChainConfig::acc_platoon(self.n, g, self.human, self.v_star)),
            EgoChoice::Atc => ChainConfig::atc_platoon(self.n, g, self.human, self.v_star),
            EgoChoice::Tc => {
                if self.n == 0 {
                    return Err(Error::Config(
                        "TC needs at least one vehicle behind the ego".into(),
                    ));
                }
                let back = vec![Link {
                    index: -(self.n as i32),
                    gain: g.beta_b,
                }];
                let controller = ControllerSpec::tc(g.beta, self.v_star, back, g.sigma);
                let mut chain =
                    ChainConfig::ego_platoon(self.n, controller, self.human, self.v_star);
                chain.vehicles[0].connected = true;
                Ok(chain)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChainSection {
    Platoon(PlatoonSpec),
    Vehicles(ChainConfig),
}

/// Gain grid of energy sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub beta: GainRange,
    pub beta_b: GainRange,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            beta: GainRange {
                start: 0.3,
                end: 1.0,
                step: 0.05,
            },
            beta_b: GainRange {
                start: 0.0,
                end: 0.4,
                step: 0.01,
            },
        }
    }
}

/// Frequency-domain options: linearization gradients, chart window, root rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default = "default_kappa")]
    pub kappa: Option<f64>,
    #[serde(default = "default_kappa_h")]
    pub kappa_h: Option<f64>,
    #[serde(default = "default_plane")]
    pub plane: Plane,
    /// Defaults to `[0, 3]`.
    #[serde(default)]
    pub x_range: Option<(f64, f64)>,
    /// Defaults to `[0, 2]` for α and `[0, 1.5]` for β_B.
    #[serde(default)]
    pub y_range: Option<(f64, f64)>,
    /// Fixed α of the (β, β_B) plane.
    #[serde(default = "default_small_alpha")]
    pub small_alpha: f64,
    #[serde(default = "default_resolution")]
    pub resolution: (usize, usize),
    #[serde(default = "default_omega_max")]
    pub omega_max: f64,
    #[serde(default = "default_scan_points")]
    pub scan_points: usize,
    #[serde(default = "default_k_count")]
    pub k_count: usize,
    #[serde(default = "default_curve_samples")]
    pub curve_samples: usize,
    #[serde(default = "Rect::default_search")]
    pub roots_rect: Rect,
    #[serde(default = "default_freq_points")]
    pub freq_points: usize,
}

fn default_kappa() -> Option<f64> {
    Some(0.6)
}
fn default_kappa_h() -> Option<f64> {
    Some(0.7)
}
fn default_plane() -> Plane {
    Plane::BetaAlpha
}
fn default_small_alpha() -> f64 {
    0.1
}
fn default_resolution() -> (usize, usize) {
    (100, 100)
}
fn default_omega_max() -> f64 {
    TAU
}
fn default_scan_points() -> usize {
    2000
}
fn default_k_count() -> usize {
    720
}
fn default_curve_samples() -> usize {
    400
}
fn default_freq_points() -> usize {
    1001
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            kappa: default_kappa(),
            kappa_h: default_kappa_h(),
            plane: default_plane(),
            x_range: None,
            y_range: None,
            small_alpha: default_small_alpha(),
            resolution: default_resolution(),
            omega_max: default_omega_max(),
            scan_points: default_scan_points(),
            k_count: default_k_count(),
            curve_samples: default_curve_samples(),
            roots_rect: Rect::default_search(),
            freq_points: default_freq_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default = "default_schema")]
    pub schema: u32,
    pub chain: ChainSection,
    #[serde(default)]
    pub lead: LeadProfile,
    #[serde(default)]
    pub sim: SimSettings,
    #[serde(default)]
    pub energy: EnergyParams,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

fn default_schema() -> u32 {
    SCENARIO_SCHEMA
}

impl ScenarioFile {
    pub fn platoon(ego: EgoChoice, n: usize) -> Self {
        Self {
            schema: SCENARIO_SCHEMA,
            chain: ChainSection::Platoon(PlatoonSpec {
                ego,
                n,
                v_star: default_v_star(),
                human: HumanGains::default(),
                gains: AutomatedGains::default(),
            }),
            lead: LeadProfile::default(),
            sim: SimSettings::default(),
            energy: EnergyParams::default(),
            sweep: SweepSection::default(),
            analysis: AnalysisSection::default(),
        }
    }

    /// Parses and validates; errors name the offending field, line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::Config(format!("field `{path}`: {inner}"))
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCENARIO_SCHEMA {
            return Err(Error::Config(format!(
                "unsupported scenario schema {}",
                self.schema
            )));
        }
        self.to_chain()?.validate()?;
        self.lead.validate()?;
        self.energy.validate()?;
        self.sweep.beta.values()?;
        self.sweep.beta_b.values()?;
        let a = &self.analysis;
        if !(a.omega_max > 0.0) || a.scan_points < 4 || a.freq_points < 2 {
            return Err(Error::Config(
                "analysis needs omega_max > 0, scan_points ≥ 4 and freq_points ≥ 2".into(),
            ));
        }
        Ok(())
    }

    /// Canonical serialization: every field explicit, fixed key order.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// SHA-256 of the compact canonical serialization.
    pub fn hash(&self) -> String {
        let compact = serde_json::to_string(self).expect("scenario serializes");
        format!("{:x}", Sha256::digest(compact.as_bytes()))
    }

    pub fn to_chain(&self) -> Result<ChainConfig> {
        match &self.chain {
            ChainSection::Platoon(p) => p.build(),
            ChainSection::Vehicles(c) => Ok(c.clone()),
        }
    }

    /// Human drivers behind the ego.
    pub fn followers(&self) -> Result<usize> {
        Ok(usize::try_from(-self.to_chain()?.bottom_index()).unwrap_or(0))
    }

    pub fn set_followers(&mut self, n: usize) -> Result<()> {
        match &mut self.chain {
            ChainSection::Platoon(p) => {
                p.n = n;
                Ok(())
            }
            ChainSection::Vehicles(_) => {
                Err(Error::Config("--n-followers needs a platoon chain".into()))
            }
        }
    }

    pub fn model(&self) -> Result<ChainModel> {
        chain_model(
            &self.to_chain()?,
            self.analysis.kappa,
            self.analysis.kappa_h,
        )
    }

    pub fn sweep_template(&self) -> Result<SweepTemplate> {
        Ok(SweepTemplate {
            chain: self.to_chain()?,
            lead: self.lead.clone(),
            settings: self.sim.clone(),
            params: self.energy,
        })
    }

    pub fn chart_spec(&self) -> Result<ChartSpec> {
        let a = &self.analysis;
        let chain = self.to_chain()?;
        let mut model = chain_model(&chain, a.kappa, a.kappa_h)?;
        // Reference-tracking egos have no headway term and keep α = 0.
        let follows_leader = chain
            .vehicle(0)
            .is_none_or(|v| !matches!(&v.driver, Driver::Automated(c) if !c.kind.follows_leader()));
        let y_default = match a.plane {
            Plane::BetaAlpha => (0.0, 2.0),
            Plane::BetaBetaB => {
                if follows_leader {
                    model.ego.alpha = a.small_alpha;
                }
                (0.0, 1.5)
            }
        };
        let mut spec = ChartSpec::new(
            a.plane,
            model,
            a.x_range.unwrap_or((0.0, 3.0)),
            a.y_range.unwrap_or(y_default),
            a.resolution,
        );
        spec.omega_max = a.omega_max;
        spec.scan_points = a.scan_points;
        spec.k_count = a.k_count;
        spec.curve_samples = a.curve_samples;
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_takes_defaults() {
        let s =
            ScenarioFile::from_json(r#"{"chain": {"platoon": {"ego": "atc", "n": 10}}}"#).unwrap();
        assert_eq!(s, ScenarioFile::platoon(EgoChoice::Atc, 10));
        assert_eq!(s.sim.dt, 0.01);
        assert_eq!(s.energy.a_r, 0.0981);
        let model = s.model().unwrap();
        assert_eq!(model.n, 10);
        assert_eq!((model.ego.kappa, model.human.kappa_h), (0.6, 0.7));
    }

    #[test]
    fn unknown_keys_are_rejected_with_the_path() {
        let err = ScenarioFile::from_json(
            r#"{"chain": {"platoon": {"ego": "acc", "n": 2, "speed": 3}}}"#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("chain.platoon"), "{msg}");
        assert!(msg.contains("speed"), "{msg}");
        assert!(msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn null_gradients_come_from_the_equilibrium() {
        let mut s = ScenarioFile::platoon(EgoChoice::Acc, 3);
        s.analysis.kappa = None;
        s.analysis.kappa_h = None;
        let model = s.model().unwrap();
        // Linear policy: v_max / (h_go − h_st); quadratic at v* = 25: 2·30·(55 − h*)/2500.
        assert!((model.ego.kappa - 0.6).abs() < 1e-12);
        let h = 55.0 - 50.0 * (1.0f64 - 25.0 / 30.0).sqrt();
        assert!((model.human.kappa_h - 60.0 * (55.0 - h) / 2500.0).abs() < 1e-12);
    }

    #[test]
    fn hash_tracks_content() {
        let a = ScenarioFile::platoon(EgoChoice::Hv, 10);
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.sim.tf = 30.0;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
