//! Linearized link models and transfer functions of chains, evaluated in the
//! complex plane.
//!
//! State of vehicle n is `[s̃_n, ṽ_n]` (position and speed perturbations). Every
//! link has the form `c (sI − a − a_d e^{−s d})⁻¹ b e^{−s d} [1/s, 1]ᵀ`, which
//! reduces to `(b1 s + b0) / (s² e^{s d} + k1 s + k0)` with self row `[−k0, −k1]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChainConfig, ControlKind, ControllerSpec, Driver, HumanGains, VehicleSpec};

type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkKind {
    Hv,
    Acc,
    Atc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub kind: LinkKind,
    pub a: Mat2,
    pub a_self_delayed: Mat2,
    pub b_forward: Mat2,
    pub b_backward: Mat2,
    pub delay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

fn gain_rows(k0: f64, k1: f64, b0: f64, b1: f64, bb: f64) -> (Mat2, Mat2, Mat2) {
    (
        [[0.0, 0.0], [-k0, -k1]],
        [[0.0, 0.0], [b0, b1]],
        [[0.0, 0.0], [0.0, bb]],
    )
}

impl LinearModel {
    const A: Mat2 = [[0.0, 1.0], [0.0, 0.0]];

    pub fn human(gains: &HumanGains, kappa_h: f64) -> Self {
        let (ad, bf, bb) = gain_rows(
            gains.alpha_h * kappa_h,
            gains.alpha_h + gains.beta_h,
            gains.alpha_h * kappa_h,
            gains.beta_h,
            0.0,
        );
        Self {
            kind: LinkKind::Hv,
            a: Self::A,
            a_self_delayed: ad,
            b_forward: bf,
            b_backward: bb,
            delay: gains.tau,
        }
    }

    /// CC and TC linearize as their headway-free ATC counterparts; CCC and CTC are not supported.
    pub fn controller(spec: &ControllerSpec, kappa: f64) -> Result<Self> {
        let alpha = if spec.kind.follows_leader() {
            spec.alpha
        } else {
            0.0
        };
        let beta_b = spec.beta_back();
        let kind = match spec.kind {
            ControlKind::Acc | ControlKind::Cc => LinkKind::Acc,
            ControlKind::Atc | ControlKind::Tc => LinkKind::Atc,
            ControlKind::Ccc | ControlKind::Ctc => {
                return Err(Error::Config(format!("no link model for {:?}", spec.kind)));
            }
        };
        if spec.kind == ControlKind::Atc && spec.backward.len() != 1 {
            return Err(Error::Config("ATC needs exactly one backward link".into()));
        }
        let (ad, bf, bb) = gain_rows(
            alpha * kappa,
            alpha + spec.beta + beta_b,
            alpha * kappa,
            spec.beta,
            beta_b,
        );
        Ok(Self {
            kind,
            a: Self::A,
            a_self_delayed: ad,
            b_forward: bf,
            b_backward: bb,
            delay: spec.sigma,
        })
    }
}

/// Coefficient matrices for a human driver or an automated controller.
pub fn linearize(driver: &LinearizeInput<'_>, kappa: f64) -> Result<LinearModel> {
    match driver {
        LinearizeInput::Human(g) => Ok(LinearModel::human(g, kappa)),
        LinearizeInput::Controller(c) => LinearModel::controller(c, kappa),
    }
}

#[derive(Debug, Clone, Copy)]
pub enum LinearizeInput<'a> {
    Human(&'a HumanGains),
    Controller(&'a ControllerSpec),
}

fn near_pole(num: Complex64, den: Complex64) -> bool {
    let d = den.norm();
    d < 1e-300 || d < 1e-10 * num.norm()
}

/// Ratio with pole detection; `s` is the evaluation point reported on failure.
fn ratio(num: Complex64, den: Complex64, s: Complex64) -> Result<Complex64> {
    if near_pole(num, den) {
        Err(Error::Pole { s })
    } else {
        Ok(num / den)
    }
}

/// `(b1 s + b0) / (s² e^{s d} + k1 s + k0)` with the analytic value at s = 0.
fn rational(b0: f64, b1: f64, k0: f64, k1: f64, delay: f64, s: Complex64) -> Result<Complex64> {
    if s == Complex64::new(0.0, 0.0) {
        return if k0 != 0.0 {
            Ok(Complex64::new(b0 / k0, 0.0))
        } else if b0 == 0.0 && k1 != 0.0 {
            Ok(Complex64::new(b1 / k1, 0.0))
        } else {
            Err(Error::Pole { s })
        };
    }
    let num = s * b1 + b0;
    let den = s * s * (s * delay).exp() + s * k1 + k0;
    ratio(num, den, s)
}

/// Matrix-based evaluation of a link transfer function.
pub fn link_tf_generic(model: &LinearModel, s: Complex64, which: Direction) -> Result<Complex64> {
    let b = match which {
        Direction::Forward => &model.b_forward,
        Direction::Backward => &model.b_backward,
    };
    if s == Complex64::new(0.0, 0.0) {
        let (k0, k1) = (-model.a_self_delayed[1][0], -model.a_self_delayed[1][1]);
        return rational(b[1][0], b[1][1], k0, k1, model.delay, s);
    }
    let e = (-s * model.delay).exp();
    let one = Complex64::new(1.0, 0.0);
    // M = sI − a − a_d e^{−s d}
    let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let diag = if i == j { s } else { Complex64::new(0.0, 0.0) };
            m[i][j] = diag - model.a[i][j] - e * model.a_self_delayed[i][j];
        }
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    // c = [0, 1] picks the second row of M⁻¹.
    let row = [-m[1][0], m[0][0]];
    let input = [one / s, one];
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..2 {
        let bk: Complex64 = (0..2).map(|j| input[j] * b[k][j]).sum();
        acc += row[k] * bk * e;
    }
    ratio(acc, det, s)
}

/// Gains of one link, in the notation of the automated vehicle; human links map
/// `(α_H, β_H, κ_H, τ)` onto `(alpha, beta, kappa, delay)` with no backward gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkGains {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub beta_b: f64,
    pub kappa: f64,
    pub delay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TfKind {
    Hv,
    Acc,
    AtcForward,
    AtcBackward,
}

/// Direct rational-exponential form of a link transfer function.
pub fn closed_form_tf(kind: TfKind, g: &LinkGains, s: Complex64) -> Result<Complex64> {
    let ak = g.alpha * g.kappa;
    match kind {
        TfKind::Hv | TfKind::Acc => rational(ak, g.beta, ak, g.alpha + g.beta, g.delay, s),
        TfKind::AtcForward => rational(ak, g.beta, ak, g.alpha + g.beta + g.beta_b, g.delay, s),
        TfKind::AtcBackward => rational(0.0, g.beta_b, ak, g.alpha + g.beta + g.beta_b, g.delay, s),
    }
}

/// Human link parameters used in frequency-domain analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanLink {
    pub alpha_h: f64,
    pub beta_h: f64,
    pub kappa_h: f64,
    pub tau: f64,
}

impl Default for HumanLink {
    fn default() -> Self {
        Self {
            alpha_h: 0.1,
            beta_h: 0.6,
            kappa_h: 0.7,
            tau: 0.8,
        }
    }
}

impl HumanLink {
    pub fn gains(&self) -> LinkGains {
        LinkGains {
            alpha: self.alpha_h,
            beta: self.beta_h,
            beta_b: 0.0,
            kappa: self.kappa_h,
            delay: self.tau,
        }
    }

    pub fn tf(&self, s: Complex64) -> Result<Complex64> {
        closed_form_tf(TfKind::Hv, &self.gains(), s)
    }
}

/// `Γ(s) = T_H(s)^N`.
pub fn gamma(human: &HumanLink, n: usize, s: Complex64) -> Result<Complex64> {
    if n == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    Ok(human.tf(s)?.powu(n as u32))
}

/// Product of heterogeneous human links.
pub fn gamma_product(links: &[HumanLink], s: Complex64) -> Result<Complex64> {
    links
        .iter()
        .try_fold(Complex64::new(1.0, 0.0), |acc, l| Ok(acc * l.tf(s)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EgoKind {
    /// The ego is one more human driver (homogeneous human chain of N + 1 links).
    Human,
    Acc,
    Atc,
}

/// Gains of the automated ego.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgoGains {
    pub alpha: f64,
    pub beta: f64,
    pub beta_b: f64,
    pub kappa: f64,
    pub sigma: f64,
}

impl Default for EgoGains {
    fn default() -> Self {
        Self {
            alpha: 0.4,
            beta: 0.5,
            beta_b: 0.2,
            kappa: 0.6,
            sigma: 0.6,
        }
    }
}

impl EgoGains {
    pub fn link(&self) -> LinkGains {
        LinkGains {
            alpha: self.alpha,
            beta: self.beta,
            beta_b: self.beta_b,
            kappa: self.kappa,
            delay: self.sigma,
        }
    }
}

/// An ego vehicle followed by `n` identical human drivers, the last of which
/// is connected for ATC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainModel {
    pub ego_kind: EgoKind,
    pub ego: EgoGains,
    pub human: HumanLink,
    pub n: usize,
}

impl ChainModel {
    pub fn acc(ego: EgoGains, human: HumanLink, n: usize) -> Self {
        Self {
            ego_kind: EgoKind::Acc,
            ego: EgoGains { beta_b: 0.0, ..ego },
            human,
            n,
        }
    }

    pub fn atc(ego: EgoGains, human: HumanLink, n: usize) -> Self {
        Self {
            ego_kind: EgoKind::Atc,
            ego,
            human,
            n,
        }
    }

    pub fn human(human: HumanLink, n: usize) -> Self {
        Self {
            ego_kind: EgoKind::Human,
            ego: EgoGains {
                alpha: human.alpha_h,
                beta: human.beta_h,
                beta_b: 0.0,
                kappa: human.kappa_h,
                sigma: human.tau,
            },
            human,
            n,
        }
    }

    /// Effective backward gain (zero unless ATC).
    pub fn beta_b(&self) -> f64 {
        match self.ego_kind {
            EgoKind::Atc => self.ego.beta_b,
            _ => 0.0,
        }
    }

    pub fn with_gains(&self, alpha: f64, beta: f64, beta_b: f64) -> Self {
        Self {
            ego: EgoGains {
                alpha,
                beta,
                beta_b,
                ..self.ego
            },
            ..*self
        }
    }
}

/// Policy gradient of `vehicle` at the chain's equilibrium speed.
pub fn equilibrium_kappa(chain: &ChainConfig, vehicle: &VehicleSpec) -> Result<f64> {
    Ok(vehicle
        .policy
        .kappa_at(vehicle.policy.invert(chain.v_star)?)
        .value)
}

/// Linearization of a platoon (ego at index 0, identical human drivers
/// behind it). `kappa` and `kappa_h` override the equilibrium gradients.
pub fn chain_model(
    chain: &ChainConfig,
    kappa: Option<f64>,
    kappa_h: Option<f64>,
) -> Result<ChainModel> {
    chain.validate()?;
    let ego = chain
        .vehicle(0)
        .ok_or_else(|| Error::Config("the chain has no ego vehicle".into()))?;
    let n = usize::try_from(-chain.bottom_index()).unwrap_or(0);
    let mut humans = chain.vehicles.iter().filter(|v| v.index < 0);
    let human = match humans.next() {
        Some(first) => {
            let Driver::Human(g) = first.driver else {
                return Err(Error::Config(format!(
                    "vehicle {} behind the ego is not a human driver",
                    first.index
                )));
            };
            if humans.any(|v| v.driver != first.driver || v.policy != first.policy) {
                return Err(Error::Config(
                    "human drivers behind the ego must be identical".into(),
                ));
            }
            HumanLink {
                alpha_h: g.alpha_h,
                beta_h: g.beta_h,
                kappa_h: kappa_h.map_or_else(|| equilibrium_kappa(chain, first), Ok)?,
                tau: g.tau,
            }
        }
        None => HumanLink {
            kappa_h: kappa_h.unwrap_or(HumanLink::default().kappa_h),
            ..HumanLink::default()
        },
    };
    match &ego.driver {
        Driver::Lead => Err(Error::Config("the ego cannot be the open-loop lead".into())),
        Driver::Human(g) => {
            let own = HumanLink {
                alpha_h: g.alpha_h,
                beta_h: g.beta_h,
                tau: g.tau,
                ..human
            };
            if n > 0 && own != human {
                return Err(Error::Config(
                    "a human ego must match the drivers behind it".into(),
                ));
            }
            Ok(ChainModel::human(own, n))
        }
        Driver::Automated(c) => {
            let kappa = kappa.map_or_else(|| equilibrium_kappa(chain, ego), Ok)?;
            let alpha = if c.kind.follows_leader() {
                c.alpha
            } else {
                0.0
            };
            let gains = EgoGains {
                alpha,
                beta: c.beta,
                beta_b: c.beta_back(),
                kappa,
                sigma: c.sigma,
            };
            match c.kind {
                ControlKind::Acc | ControlKind::Cc => Ok(ChainModel::acc(gains, human, n)),
                ControlKind::Atc | ControlKind::Tc => {
                    if c.backward.len() != 1 || c.backward[0].index != chain.bottom_index() {
                        return Err(Error::Config(
                            "the backward link must reach the last vehicle of the chain".into(),
                        ));
                    }
                    Ok(ChainModel::atc(gains, human, n))
                }
                ControlKind::Ccc | ControlKind::Ctc => {
                    Err(Error::Config(format!("no chain model for {:?}", c.kind)))
                }
            }
        }
    }
}

/// Head-to-tail transfer function from the vehicle ahead of the ego to the last human.
pub fn head_to_tail(cfg: &ChainModel, s: Complex64) -> Result<Complex64> {
    let g = gamma(&cfg.human, cfg.n, s)?;
    match cfg.ego_kind {
        EgoKind::Human => Ok(cfg.human.tf(s)? * g),
        EgoKind::Acc => Ok(closed_form_tf(TfKind::Acc, &cfg.ego.link(), s)? * g),
        EgoKind::Atc => {
            let link = cfg.ego.link();
            let tf = closed_form_tf(TfKind::AtcForward, &link, s)?;
            let tb = closed_form_tf(TfKind::AtcBackward, &link, s)?;
            ratio(tf * g, Complex64::new(1.0, 0.0) - tb * g, s)
        }
    }
}

/// Characteristic function `G(s) − 1` of the chain closed into a ring.
pub fn ring_char(cfg: &ChainModel, s: Complex64) -> Result<Complex64> {
    Ok(head_to_tail(cfg, s)? - 1.0)
}

/// One evaluated point of a frequency response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferEval {
    pub s: Complex64,
    pub value: Complex64,
}

impl TransferEval {
    pub fn magnitude(&self) -> f64 {
        self.value.norm()
    }
}

/// `G(iω)` over `omegas`; points on a pole are skipped.
pub fn frequency_response(cfg: &ChainModel, omegas: &[f64]) -> Vec<TransferEval> {
    omegas
        .iter()
        .filter_map(|&w| {
            let s = Complex64::new(0.0, w);
            match head_to_tail(cfg, s) {
                Ok(value) => Some(TransferEval { s, value }),
                Err(e) => {
                    log::warn!("skipping ω = {w}: {e}");
                    None
                }
            }
        })
        .collect()
}

/// `n` evenly spaced frequencies on `[0, omega_max]`.
pub fn omega_grid(omega_max: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.0];
    }
    (0..n)
        .map(|k| omega_max * k as f64 / (n - 1) as f64)
        .collect()
}
