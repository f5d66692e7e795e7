//! Plant and string stability of an ego vehicle followed by human drivers,
//! boundary curves in gain planes, and stability charts.

pub mod boundaries;
pub mod chart;
pub mod roots;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freq::{gamma, ChainModel, EgoKind, HumanLink};
use roots::{find_roots, winding_number, Rect, RootOptions};

pub use boundaries::{BoundaryCurve, BoundaryKind, BoundaryPoint, Plane};
pub use chart::{build_chart, CellClass, ChartSpec, StabilityChart};

/// Effective ego gains `(α, β, β_B, κ, σ)` for the analysis.
fn ego_params(cfg: &ChainModel) -> (f64, f64, f64, f64, f64) {
    let e = &cfg.ego;
    (e.alpha, e.beta, cfg.beta_b(), e.kappa, e.sigma)
}

/// `P(ω)` from `Γ(iω) = gr + i·gi`, `c = cos ωσ`, `s = sin ωσ`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn p_from_parts(
    alpha: f64,
    beta: f64,
    beta_b: f64,
    kappa: f64,
    w: f64,
    gr: f64,
    gi: f64,
    c: f64,
    s: f64,
) -> f64 {
    let ak = alpha * kappa;
    let x = alpha + beta + (1.0 - gr) * beta_b;
    let g2 = gr * gr + gi * gi;
    w * w - 2.0 * ak * c - 2.0 * beta_b * w * gi * c
        + ak * ak * (1.0 - g2) / (w * w)
        + 2.0 * ak * beta_b * gi / w
        + beta_b * beta_b * gi * gi
        - 2.0 * x * w * s
        + x * x
        - beta * beta * g2
}

/// `P(ω)`, positive exactly where `|G(iω)| < 1`.
pub fn p_omega(cfg: &ChainModel, w: f64) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::Domain(format!("P(ω) needs ω > 0, got {w}")));
    }
    let (alpha, beta, beta_b, kappa, sigma) = ego_params(cfg);
    let g = gamma(&cfg.human, cfg.n, Complex64::new(0.0, w))?;
    Ok(p_from_parts(
        alpha,
        beta,
        beta_b,
        kappa,
        w,
        g.re,
        g.im,
        (w * sigma).cos(),
        (w * sigma).sin(),
    ))
}

/// Limits `(Γ_R − 1)/ω²` and `Γ_I/ω` as ω → 0.
pub fn gamma_limits(human: &HumanLink, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let HumanLink {
        alpha_h,
        beta_h,
        kappa_h,
        ..
    } = *human;
    let a = nf * (2.0 * kappa_h - 2.0 * beta_h - (nf + 1.0) * alpha_h)
        / (2.0 * alpha_h * kappa_h * kappa_h);
    let b = -nf / kappa_h;
    (a, b)
}

/// Closed-form `lim_{ω→0} P(ω)`.
pub fn p_zero(cfg: &ChainModel) -> f64 {
    let (alpha, beta, beta_b, kappa, _) = ego_params(cfg);
    let h = &cfg.human;
    let nf = cfg.n as f64;
    let human_term = if cfg.n == 0 {
        0.0
    } else {
        nf * (alpha * kappa * kappa / (h.alpha_h * h.kappa_h * h.kappa_h))
            * (h.alpha_h + 2.0 * h.beta_h - 2.0 * h.kappa_h)
    };
    let back_term = if cfg.n == 0 {
        0.0
    } else {
        2.0 * nf * (kappa / h.kappa_h) * beta_b
    };
    alpha * (alpha + 2.0 * beta - 2.0 * kappa + human_term - back_term)
}

/// `lim_{ω→0} P(ω)/ω²` for a controller without headway feedback (α = 0),
/// where `P(0)` vanishes identically.
pub fn q_zero(cfg: &ChainModel) -> f64 {
    let (_, beta, beta_b, _, sigma) = ego_params(cfg);
    let (a, b) = gamma_limits(&cfg.human, cfg.n);
    let t = 1.0 - beta_b * b;
    t * t - beta * beta * b * b - 2.0 * beta * sigma - 2.0 * a * beta * (beta_b + beta)
}

/// A quasi-polynomial factor of the closed-loop characteristic equation,
/// normalised to retarded form (leading term `s^k` without exponential).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlantFactor {
    /// `s² + (k1 s + k0) e^{−sσ}`, or `s + k1 e^{−sσ}` once the root at 0 is cancelled (`k0 = 0`).
    Vehicle {
        k0: f64,
        k1: f64,
        delay: f64,
    },
    Human(HumanLink),
    /// Ego vehicle closed through `n` humans and its backward link.
    VirtualRing {
        k0: f64,
        k1: f64,
        beta_b: f64,
        delay: f64,
        human: HumanLink,
        n: usize,
    },
}

fn retarded(k0: f64, k1: f64, delay: f64, s: Complex64) -> Complex64 {
    if k0 == 0.0 {
        s + k1 * (-s * delay).exp()
    } else {
        s * s + (s * k1 + k0) * (-s * delay).exp()
    }
}

fn human_retarded(h: &HumanLink, s: Complex64) -> Complex64 {
    s * s + (s * (h.alpha_h + h.beta_h) + h.alpha_h * h.kappa_h) * (-s * h.tau).exp()
}

/// Smallest `r` with `r² > (k1 r + k0) e` (or `r > k1 e` when `k0 = 0`).
fn retarded_radius(k0: f64, k1: f64, e: f64) -> f64 {
    if k0 == 0.0 {
        k1.abs() * e
    } else {
        0.5 * (k1.abs() * e + (k1 * k1 * e * e + 4.0 * k0.abs() * e).sqrt())
    }
}

impl PlantFactor {
    pub fn eval(&self, s: Complex64) -> Complex64 {
        match self {
            PlantFactor::Vehicle { k0, k1, delay } => retarded(*k0, *k1, *delay, s),
            PlantFactor::Human(h) => human_retarded(h, s),
            PlantFactor::VirtualRing {
                k0,
                k1,
                beta_b,
                delay,
                human,
                n,
            } => {
                let num_h =
                    (s * human.beta_h + human.alpha_h * human.kappa_h) * (-s * human.tau).exp();
                let coupling = num_h.powu(*n as u32) * (-s * delay).exp() * *beta_b;
                let lh = human_retarded(human, s).powu(*n as u32);
                if *k0 == 0.0 {
                    retarded(0.0, *k1, *delay, s) * lh - coupling
                } else {
                    retarded(*k0, *k1, *delay, s) * lh - coupling * s
                }
            }
        }
    }

    /// Radius beyond which no zero with `Re s ≥ −shift` exists.
    pub fn radius(&self, shift: f64) -> Result<f64> {
        match self {
            PlantFactor::Vehicle { k0, k1, delay } => {
                Ok(retarded_radius(*k0, *k1, (shift * delay).exp()))
            }
            PlantFactor::Human(h) => Ok(retarded_radius(
                h.alpha_h * h.kappa_h,
                h.alpha_h + h.beta_h,
                (shift * h.tau).exp(),
            )),
            PlantFactor::VirtualRing {
                k0,
                k1,
                beta_b,
                delay,
                human,
                n,
            } => {
                let ev = (shift * delay).exp();
                let eh = (shift * human.tau).exp();
                let (c0, c1) = (human.alpha_h * human.kappa_h, human.alpha_h + human.beta_h);
                let low_v = |r: f64| {
                    if *k0 == 0.0 {
                        r - k1.abs() * ev
                    } else {
                        r * r - (k1.abs() * r + k0.abs()) * ev
                    }
                };
                let low_h = |r: f64| r * r - (c1 * r + c0) * eh;
                let upper = |r: f64| {
                    let lin = if *k0 == 0.0 { 1.0 } else { r };
                    beta_b.abs() * lin * ev * ((human.beta_h * r + c0) * eh).powi(*n as i32)
                };
                let mut r = retarded_radius(*k0, *k1, ev)
                    .max(retarded_radius(c0, c1, eh))
                    .max(1e-3)
                    * 1.01;
                // Both bounds are polynomial in r; the lower one has higher degree.
                while r < 1e6 {
                    let lv = low_v(r);
                    let lh = low_h(r);
                    if lv > 0.0 && lh > 0.0 && lv * lh.powi(*n as i32) > upper(r) {
                        let r2 = 2.0 * r;
                        if low_v(r2) * low_h(r2).powi(*n as i32) > upper(r2) {
                            return Ok(r);
                        }
                    }
                    r *= 1.1;
                }
                Err(Error::NonConvergence(
                    "no root bound for the virtual ring".into(),
                ))
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PlantFactor::Vehicle { .. } => "vehicle",
            PlantFactor::Human(_) => "human",
            PlantFactor::VirtualRing { .. } => "virtual-ring",
        }
    }
}

/// Factors whose zeros make up the plant characteristic roots.
pub fn plant_factors(cfg: &ChainModel) -> Vec<PlantFactor> {
    let (alpha, beta, beta_b, kappa, sigma) = ego_params(cfg);
    let k0 = alpha * kappa;
    let mut out = Vec::with_capacity(3);
    match cfg.ego_kind {
        EgoKind::Human => out.push(PlantFactor::Human(cfg.human)),
        EgoKind::Acc | EgoKind::Atc => {
            out.push(PlantFactor::Vehicle {
                k0,
                k1: alpha + beta + beta_b,
                delay: sigma,
            });
            if cfg.n > 0 {
                out.push(PlantFactor::Human(cfg.human));
            }
            if cfg.ego_kind == EgoKind::Atc && cfg.n > 0 && beta_b != 0.0 {
                out.push(PlantFactor::VirtualRing {
                    k0,
                    k1: alpha + beta + beta_b,
                    beta_b,
                    delay: sigma,
                    human: cfg.human,
                    n: cfg.n,
                });
            }
        }
    }
    out
}

const SHIFTS: [f64; 4] = [1e-7, 2.3e-7, 5.9e-7, 1.3e-6];

/// Number of zeros with `Re s > −shift` (retrying slightly different shifts
/// if a zero sits on the contour).
pub fn unstable_count(factor: &PlantFactor) -> Result<i64> {
    let mut last = None;
    for shift in SHIFTS {
        let r = factor.radius(shift)? * 1.05 + 0.1;
        let rect = Rect {
            re_min: -shift,
            re_max: r,
            im_min: -r,
            im_max: r,
        };
        match winding_number(&|s| factor.eval(s), &rect, 64) {
            Ok(n) => return Ok(n),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::NonConvergence("root count failed".into())))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantVerdict {
    pub stable: bool,
    pub rightmost_root: Option<Complex64>,
}

/// Plant stability: no characteristic root in the closed right half-plane.
/// Roots on the imaginary axis count as unstable.
pub fn plant_stable(cfg: &ChainModel) -> Result<bool> {
    for f in plant_factors(cfg) {
        if unstable_count(&f)? > 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Plant verdict together with the rightmost root found in `Re s ≥ left`.
pub fn plant_verdict(cfg: &ChainModel, left: f64) -> Result<PlantVerdict> {
    let stable = plant_stable(cfg)?;
    let mut rightmost: Option<Complex64> = None;
    for f in plant_factors(cfg) {
        let r = f.radius(-left)? * 1.05 + 0.1;
        // Upper half-plane only; roots come in conjugate pairs.
        let rect = Rect {
            re_min: left + 1.7e-7,
            re_max: r,
            im_min: -1.3e-7,
            im_max: r,
        };
        let found = find_roots(&|s| f.eval(s), rect, &RootOptions::default())?;
        if let Some(root) = found.rightmost() {
            if rightmost.map_or(true, |best| root.re > best.re) {
                rightmost = Some(root);
            }
        }
    }
    Ok(PlantVerdict {
        stable,
        rightmost_root: rightmost,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub plant_stable: bool,
    pub string_stable: bool,
    pub rightmost_root: Option<Complex64>,
    pub worst_omega: f64,
    /// Minimum of `P` over the scan (or of the low-frequency limit when smaller).
    pub worst_margin: f64,
}

/// Frequency samples of the string scan: logarithmic near zero plus uniform.
pub fn scan_frequencies(omega_max: f64, count: usize) -> Vec<f64> {
    let half = (count / 2).max(2);
    let lo = (1e-3f64).min(omega_max / 10.0);
    let mut w: Vec<f64> = (0..half)
        .map(|k| lo * (omega_max / lo).powf(k as f64 / (half - 1) as f64))
        .chain((1..=count - half).map(|k| omega_max * k as f64 / (count - half) as f64))
        .collect();
    w.sort_by(f64::total_cmp);
    w.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    w
}

/// Precomputed frequency data for one human chain and ego delay, shared by
/// every gain point of a chart.
#[derive(Debug, Clone)]
pub struct FrequencyGrid {
    pub omega: Vec<f64>,
    gamma: Vec<Complex64>,
    trig: Vec<(f64, f64)>,
    human: HumanLink,
    n: usize,
    sigma: f64,
}

impl FrequencyGrid {
    pub fn new(cfg: &ChainModel, omega_max: f64, count: usize) -> Result<Self> {
        let omega = scan_frequencies(omega_max, count);
        let gamma = omega
            .iter()
            .map(|&w| gamma(&cfg.human, cfg.n, Complex64::new(0.0, w)))
            .collect::<Result<Vec<_>>>()?;
        let sigma = cfg.ego.sigma;
        let trig = omega
            .iter()
            .map(|&w| ((w * sigma).cos(), (w * sigma).sin()))
            .collect();
        Ok(Self {
            omega,
            gamma,
            trig,
            human: cfg.human,
            n: cfg.n,
            sigma,
        })
    }

    fn matches(&self, cfg: &ChainModel) -> bool {
        self.human == cfg.human && self.n == cfg.n && self.sigma == cfg.ego.sigma
    }

    /// Minimum of `P` over the grid with 10× refinement around local minima; `(ω, P)`.
    pub fn min_p(&self, cfg: &ChainModel) -> Result<(f64, f64)> {
        let (alpha, beta, beta_b, kappa, _) = ego_params(cfg);
        let p: Vec<f64> = self
            .omega
            .iter()
            .zip(&self.gamma)
            .zip(&self.trig)
            .map(|((&w, g), &(c, s))| p_from_parts(alpha, beta, beta_b, kappa, w, g.re, g.im, c, s))
            .collect();
        let mut worst = (self.omega[0], p[0]);
        for i in 0..p.len() {
            if p[i] < worst.1 {
                worst = (self.omega[i], p[i]);
            }
        }
        for i in 0..p.len() {
            let left = if i > 0 { p[i - 1] } else { f64::INFINITY };
            let right = p.get(i + 1).copied().unwrap_or(f64::INFINITY);
            if p[i] <= left && p[i] <= right {
                let lo = if i > 0 {
                    self.omega[i - 1]
                } else {
                    0.5 * self.omega[0]
                };
                let hi = self.omega.get(i + 1).copied().unwrap_or(self.omega[i]);
                for k in 1..20 {
                    let w = lo + (hi - lo) * k as f64 / 20.0;
                    let v = p_omega(cfg, w)?;
                    if v < worst.1 {
                        worst = (w, v);
                    }
                }
            }
        }
        Ok(worst)
    }
}

/// Low-frequency margin: `P(0)`, or `lim P/ω²` when the ego ignores headway.
pub fn low_frequency_margin(cfg: &ChainModel) -> f64 {
    if cfg.ego.alpha == 0.0 && cfg.ego_kind != EgoKind::Human {
        q_zero(cfg)
    } else {
        p_zero(cfg)
    }
}

fn string_from(cfg: &ChainModel, grid: &FrequencyGrid, plant: bool) -> Result<(bool, f64, f64)> {
    let low = low_frequency_margin(cfg);
    let (w, p) = grid.min_p(cfg)?;
    let stable = plant && low > 0.0 && p > 0.0;
    Ok(if low <= p {
        (stable, 0.0, low)
    } else {
        (stable, w, p)
    })
}

/// Plant and string verdict over `(0, omega_max]` with `count` scan points.
pub fn string_verdict(cfg: &ChainModel, omega_max: f64, count: usize) -> Result<StabilityVerdict> {
    let grid = FrequencyGrid::new(cfg, omega_max, count)?;
    let plant = plant_verdict(cfg, -3.0)?;
    let (string_stable, worst_omega, worst_margin) = string_from(cfg, &grid, plant.stable)?;
    Ok(StabilityVerdict {
        plant_stable: plant.stable,
        string_stable,
        rightmost_root: plant.rightmost_root,
        worst_omega,
        worst_margin,
    })
}

/// Verdict on a shared grid without locating roots (chart cells).
pub fn quick_verdict(cfg: &ChainModel, grid: &FrequencyGrid) -> Result<(bool, bool)> {
    if !grid.matches(cfg) {
        return Err(Error::Config(
            "frequency grid built for a different chain".into(),
        ));
    }
    let plant = plant_stable(cfg)?;
    let (string, _, _) = string_from(cfg, grid, plant)?;
    Ok((plant, string))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq::{head_to_tail, EgoGains};

    fn direct_p(cfg: &ChainModel, w: f64) -> f64 {
        let (alpha, beta, beta_b, kappa, sigma) = ego_params(cfg);
        let s = Complex64::new(0.0, w);
        let g = gamma(&cfg.human, cfg.n, s).unwrap();
        let den = s * s * (s * sigma).exp() + s * (alpha + beta + beta_b) + alpha * kappa
            - s * beta_b * g;
        let num = (s * beta + alpha * kappa) * g;
        (den.norm_sqr() - num.norm_sqr()) / (w * w)
    }

    #[test]
    fn p_matches_magnitude_definition() {
        let h = HumanLink::default();
        for cfg in [
            ChainModel::atc(EgoGains::default(), h, 3),
            ChainModel::acc(
                EgoGains {
                    alpha: 0.7,
                    beta: 1.1,
                    ..EgoGains::default()
                },
                h,
                2,
            ),
            ChainModel::human(h, 4),
        ] {
            for w in [0.01, 0.3, 1.7, 5.0] {
                let p = p_omega(&cfg, w).unwrap();
                let d = direct_p(&cfg, w);
                assert!((p - d).abs() < 1e-9 * (1.0 + d.abs()), "{p} {d}");
                let g = head_to_tail(&cfg, Complex64::new(0.0, w)).unwrap().norm();
                assert_eq!(p > 0.0, g < 1.0);
            }
        }
    }

    #[test]
    fn p_zero_acc_reference() {
        let cfg = ChainModel::acc(EgoGains::default(), HumanLink::default(), 0);
        assert!((p_zero(&cfg) - 0.08).abs() < 1e-15);
        let flat = ChainModel::acc(
            EgoGains {
                alpha: 0.0,
                ..EgoGains::default()
            },
            HumanLink::default(),
            3,
        );
        assert_eq!(p_zero(&flat), 0.0);
    }

    #[test]
    fn acc_zero_delay_quadratic_is_stable() {
        let cfg = ChainModel::acc(
            EgoGains {
                sigma: 0.0,
                ..EgoGains::default()
            },
            HumanLink::default(),
            0,
        );
        let v = plant_verdict(&cfg, -3.0).unwrap();
        assert!(v.stable);
        let r = v.rightmost_root.unwrap();
        assert!(
            (r.re + 0.45).abs() < 1e-9 && (r.im.abs() - 0.19364916731037085).abs() < 1e-9,
            "{r}"
        );
    }

    #[test]
    fn negative_alpha_is_plant_unstable() {
        let cfg = ChainModel::acc(
            EgoGains {
                alpha: -0.1,
                ..EgoGains::default()
            },
            HumanLink::default(),
            0,
        );
        assert!(!plant_stable(&cfg).unwrap());
    }

    #[test]
    fn large_beta_is_plant_unstable() {
        let cfg = ChainModel::acc(
            EgoGains {
                beta: 4.0,
                ..EgoGains::default()
            },
            HumanLink::default(),
            0,
        );
        let v = plant_verdict(&cfg, -3.0).unwrap();
        assert!(!v.stable);
        let r = v.rightmost_root.unwrap();
        assert!(r.re > 0.0 && r.im.abs() > 0.1);
    }

    #[test]
    fn table_gains_acc_alone_are_string_stable() {
        let cfg = ChainModel::acc(EgoGains::default(), HumanLink::default(), 0);
        let v = string_verdict(&cfg, std::f64::consts::TAU, 2000).unwrap();
        assert!(v.plant_stable);
        assert!(v.string_stable, "{v:?}");
    }

    #[test]
    fn human_link_is_string_unstable() {
        let cfg = ChainModel::human(HumanLink::default(), 0);
        let v = string_verdict(&cfg, std::f64::consts::TAU, 2000).unwrap();
        assert!(v.plant_stable && !v.string_stable);
    }
}
