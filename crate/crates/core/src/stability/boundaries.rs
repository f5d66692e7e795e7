//! Parametric stability boundaries in the `(β, α)` and `(β, β_B)` gain planes.
//!
//! String boundaries are traced through `G(iω) = e^{−iK}`, which is linear in
//! any two of the ego gains; the resulting 2×2 real system is solved in closed
//! form. Plant boundaries follow from a characteristic root at `s = iΩ`.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freq::{gamma, head_to_tail, ChainModel, EgoKind, HumanLink};
use crate::stability::gamma_limits;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Plane {
    /// x = β, y = α, β_B fixed.
    BetaAlpha,
    /// x = β, y = β_B, α fixed.
    BetaBetaB,
}

impl Plane {
    pub fn y_name(&self) -> &'static str {
        match self {
            Plane::BetaAlpha => "alpha",
            Plane::BetaBetaB => "beta_b",
        }
    }

    /// Copy of `cfg` with the gains of the point `(x, y)`.
    pub fn apply(&self, cfg: &ChainModel, x: f64, y: f64) -> ChainModel {
        match self {
            Plane::BetaAlpha => cfg.with_gains(y, x, cfg.ego.beta_b),
            Plane::BetaBetaB => cfg.with_gains(cfg.ego.alpha, x, y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    /// Characteristic root at s = 0.
    PlantS0,
    /// Root pair ±iΩ of the ego's own control loop.
    PlantVehicle,
    /// Root pair ±iΩ of the virtual ring closed by the backward link.
    PlantRing,
    StringOmega0,
    /// `G(iω) = e^{−iK}` for one K.
    StringOmegaK,
    /// Lower envelope of the K family.
    Envelope,
    /// `G(iω) = 1` (the chain closed into a ring).
    Ring,
}

impl BoundaryKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryKind::PlantS0 => "plant-s0",
            BoundaryKind::PlantVehicle => "plant-vehicle",
            BoundaryKind::PlantRing => "plant-ring",
            BoundaryKind::StringOmega0 => "string-omega0",
            BoundaryKind::StringOmegaK => "string-omegaK",
            BoundaryKind::Envelope => "envelope",
            BoundaryKind::Ring => "ring",
        }
    }

    pub fn is_plant(&self) -> bool {
        matches!(
            self,
            BoundaryKind::PlantS0 | BoundaryKind::PlantVehicle | BoundaryKind::PlantRing
        )
    }
}

/// One sample: frequency parameter (Ω or ω; 0 for the ω = 0 lines) and gain-plane point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub param: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub kind: BoundaryKind,
    /// K for the string family, k for homogeneous rings.
    pub k: Option<f64>,
    pub points: Vec<BoundaryPoint>,
    /// Parameter values dropped as singular.
    pub skipped: Vec<f64>,
}

impl BoundaryCurve {
    fn new(kind: BoundaryKind, k: Option<f64>) -> Self {
        Self {
            kind,
            k,
            points: Vec::new(),
            skipped: Vec::new(),
        }
    }

    fn line(kind: BoundaryKind, a: (f64, f64), b: (f64, f64), param: f64) -> Self {
        let mut c = Self::new(kind, None);
        c.points.push(BoundaryPoint {
            param,
            x: a.0,
            y: a.1,
        });
        c.points.push(BoundaryPoint {
            param,
            x: b.0,
            y: b.1,
        });
        c
    }

    /// Runs of consecutive points not interrupted by a skipped sample.
    pub fn segments(&self) -> Vec<&[BoundaryPoint]> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..self.points.len() {
            let (a, b) = (self.points[i - 1].param, self.points[i].param);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            if self.skipped.iter().any(|&p| p > lo && p < hi) {
                out.push(&self.points[start..i]);
                start = i;
            }
        }
        if start < self.points.len() {
            out.push(&self.points[start..]);
        }
        out
    }
}

/// Samples dropped when `|det| < SINGULAR · |numerator|`.
const SINGULAR: f64 = 1e-9;

/// Solves `a1 x + a2 y = c` for real `x, y`.
fn solve_real(a1: Complex64, a2: Complex64, c: Complex64) -> Option<(f64, f64)> {
    let det = a1.re * a2.im - a2.re * a1.im;
    let nx = c.re * a2.im - a2.re * c.im;
    let ny = a1.re * c.im - c.re * a1.im;
    if !(det.abs() > SINGULAR * nx.abs().max(ny.abs())) || det == 0.0 {
        return None;
    }
    Some((nx / det, ny / det))
}

fn check_kind(cfg: &ChainModel) -> Result<()> {
    if cfg.ego_kind == EgoKind::Human {
        return Err(Error::Config(
            "gain-plane boundaries need an automated ego".into(),
        ));
    }
    Ok(())
}

/// Point of the plane where `G(iω) = e^{−iK}`, given `Γ(iω)`.
pub fn string_point(
    cfg: &ChainModel,
    plane: Plane,
    w: f64,
    k: f64,
    g: Complex64,
) -> Option<(f64, f64)> {
    let s = Complex64::new(0.0, w);
    let e = Complex64::from_polar(1.0, -k);
    let lead = -w * w * Complex64::from_polar(1.0, w * cfg.ego.sigma);
    let kappa = cfg.ego.kappa;
    let one = Complex64::new(1.0, 0.0);
    match plane {
        Plane::BetaAlpha => {
            let beta_b = cfg.beta_b();
            let a_alpha = g * kappa - e * (s + kappa);
            let a_beta = s * (g - e);
            let c = e * (lead + s * beta_b * (one - g));
            solve_real(a_alpha, a_beta, c).map(|(alpha, beta)| (beta, alpha))
        }
        Plane::BetaBetaB => {
            let alpha = cfg.ego.alpha;
            let a_beta = s * (g - e);
            let a_back = -e * s * (one - g);
            let c = e * (lead + s * alpha + alpha * kappa) - g * (alpha * kappa);
            solve_real(a_beta, a_back, c)
        }
    }
}

/// Explicit `(β, α)` string point of an ACC vehicle alone (Γ ≡ 1).
pub fn acc_alone_string_point(kappa: f64, sigma: f64, w: f64, k: f64) -> Option<(f64, f64)> {
    let den = w * k.sin() - 2.0 * kappa * (1.0 - k.cos());
    let na = w * w * ((w * sigma - k).cos() - (w * sigma).cos());
    let nb = w * w * (w * sigma).cos() + kappa * w * ((w * sigma - k).sin() - (w * sigma).sin());
    if !(den.abs() > SINGULAR * na.abs().max(nb.abs())) {
        return None;
    }
    Some((nb / den, na / den))
}

/// Explicit `(β, α)` point where `T(iω)Γ = 1` for an ACC vehicle and a given `Γ`.
pub fn acc_ring_point(kappa: f64, sigma: f64, w: f64, gr: f64, gi: f64) -> Option<(f64, f64)> {
    let (c, s) = ((w * sigma).cos(), (w * sigma).sin());
    let den = w * gi - kappa * ((1.0 - gr).powi(2) + gi * gi);
    let na = w * w * (gi * s - (1.0 - gr) * c);
    let nb = w * w * c - kappa * w * (gi * c + (1.0 - gr) * s);
    if !(den.abs() > SINGULAR * na.abs().max(nb.abs())) {
        return None;
    }
    Some((nb / den, na / den))
}

/// Smallest positive `x` with `x tan x = 2`.
fn peak_argument() -> f64 {
    let (mut lo, mut hi) = (0.0f64, FRAC_PI_2 - 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * mid.tan() < 2.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Frequencies `Ω ∈ (0, π/(2σ)]` with `Ω² cos(Ωσ) = target`: one root on
/// each monotone branch around the peak at `Ωσ tan(Ωσ) = 2`.
pub fn omega_star(target: f64, sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return if target > 0.0 {
            vec![target.sqrt()]
        } else {
            Vec::new()
        };
    }
    let f = |w: f64| w * w * (w * sigma).cos() - target;
    let peak = peak_argument() / sigma;
    let end = FRAC_PI_2 / sigma;
    let peak_value = peak * peak * (peak * sigma).cos();
    if target > peak_value {
        return Vec::new();
    }
    let mut out = Vec::new();
    if target > 0.0 {
        out.push(bisect(f, 0.0, peak));
    }
    if target == 0.0 {
        out.push(end);
    } else if target > 0.0 {
        out.push(bisect(f, peak, end));
    }
    out
}

/// Plant stability boundaries for the plane, sampled at `omegas`.
pub fn plant_boundaries(
    cfg: &ChainModel,
    plane: Plane,
    omegas: &[f64],
    x_range: (f64, f64),
) -> Result<Vec<BoundaryCurve>> {
    check_kind(cfg)?;
    let EgoGainsView {
        alpha,
        beta_b,
        kappa,
        sigma,
    } = view(cfg);
    let mut out = Vec::new();
    let atc_ring = cfg.ego_kind == EgoKind::Atc && cfg.n > 0;
    match plane {
        Plane::BetaAlpha => {
            out.push(BoundaryCurve::line(
                BoundaryKind::PlantS0,
                (x_range.0, 0.0),
                (x_range.1, 0.0),
                0.0,
            ));
            let mut vehicle = BoundaryCurve::new(BoundaryKind::PlantVehicle, None);
            for &w in omegas {
                let a = w * w * (w * sigma).cos() / kappa;
                let b = w * (w * sigma).sin() - a - beta_b;
                vehicle.points.push(BoundaryPoint {
                    param: w,
                    x: b,
                    y: a,
                });
            }
            out.push(vehicle);
            if atc_ring && beta_b != 0.0 {
                let mut ring = BoundaryCurve::new(BoundaryKind::PlantRing, None);
                for &w in omegas {
                    let g = gamma(&cfg.human, cfg.n, Complex64::new(0.0, w))?;
                    let a = (w * w * (w * sigma).cos() - w * g.im * beta_b) / kappa;
                    let b = w * (w * sigma).sin() - a - (1.0 - g.re) * beta_b;
                    ring.points.push(BoundaryPoint {
                        param: w,
                        x: b,
                        y: a,
                    });
                }
                out.push(ring);
            }
        }
        Plane::BetaBetaB => {
            if alpha == 0.0 {
                log::info!("every point of the (β, β_B) plane has a root at s = 0 when α = 0; using the reduced characteristic");
            }
            for w in omega_star(alpha * kappa, sigma) {
                let offset = w * (w * sigma).sin() - alpha;
                out.push(BoundaryCurve::line(
                    BoundaryKind::PlantVehicle,
                    (x_range.0, offset - x_range.0),
                    (x_range.1, offset - x_range.1),
                    w,
                ));
            }
            if atc_ring {
                let mut ring = BoundaryCurve::new(BoundaryKind::PlantRing, None);
                for &w in omegas {
                    let g = gamma(&cfg.human, cfg.n, Complex64::new(0.0, w))?;
                    let num = w * w * (w * sigma).cos() - alpha * kappa;
                    let den = w * g.im;
                    if !(den.abs() > SINGULAR * num.abs()) {
                        log::debug!("plant ring boundary: singular sample at Ω = {w}");
                        ring.skipped.push(w);
                        continue;
                    }
                    let bb = num / den;
                    let b = w * (w * sigma).sin() - alpha - (1.0 - g.re) * bb;
                    ring.points.push(BoundaryPoint {
                        param: w,
                        x: b,
                        y: bb,
                    });
                }
                out.push(ring);
            }
        }
    }
    Ok(out)
}

struct EgoGainsView {
    alpha: f64,
    beta_b: f64,
    kappa: f64,
    sigma: f64,
}

fn view(cfg: &ChainModel) -> EgoGainsView {
    EgoGainsView {
        alpha: cfg.ego.alpha,
        beta_b: cfg.beta_b(),
        kappa: cfg.ego.kappa,
        sigma: cfg.ego.sigma,
    }
}

/// The ω = 0 string boundaries as straight lines (or, for α = 0 in the
/// `(β, β_B)` plane, the curve where the low-frequency limit vanishes).
pub fn omega0_boundaries(
    cfg: &ChainModel,
    plane: Plane,
    x_range: (f64, f64),
    samples: usize,
) -> Result<Vec<BoundaryCurve>> {
    check_kind(cfg)?;
    let EgoGainsView {
        alpha,
        beta_b,
        kappa,
        ..
    } = view(cfg);
    let h = &cfg.human;
    let nf = cfg.n as f64;
    let c_h = h.alpha_h + 2.0 * h.beta_h - 2.0 * h.kappa_h;
    let human_factor = if cfg.n == 0 {
        0.0
    } else {
        nf * kappa * kappa / (h.alpha_h * h.kappa_h * h.kappa_h) * c_h
    };
    let mut out = Vec::new();
    match plane {
        Plane::BetaAlpha => {
            out.push(BoundaryCurve::line(
                BoundaryKind::StringOmega0,
                (x_range.0, 0.0),
                (x_range.1, 0.0),
                0.0,
            ));
            let den = 1.0 + human_factor;
            let back = if cfg.n == 0 {
                0.0
            } else {
                nf * (kappa / h.kappa_h) * beta_b
            };
            if den.abs() > SINGULAR {
                let line = |b: f64| 2.0 * (kappa - b + back) / den;
                out.push(BoundaryCurve::line(
                    BoundaryKind::StringOmega0,
                    (x_range.0, line(x_range.0)),
                    (x_range.1, line(x_range.1)),
                    0.0,
                ));
            }
        }
        Plane::BetaBetaB => {
            if alpha == 0.0 {
                // Low-frequency limit is quadratic in β_B for each β.
                let (a, b) = gamma_limits(h, cfg.n);
                let mut lower = BoundaryCurve::new(BoundaryKind::StringOmega0, None);
                let mut upper = BoundaryCurve::new(BoundaryKind::StringOmega0, None);
                for i in 0..samples.max(2) {
                    let beta = x_range.0
                        + (x_range.1 - x_range.0) * i as f64 / (samples.max(2) - 1) as f64;
                    let qa = b * b;
                    let qb = -(2.0 * b + 2.0 * a * beta);
                    let qc = 1.0
                        - beta * beta * b * b
                        - 2.0 * beta * cfg.ego.sigma
                        - 2.0 * a * beta * beta;
                    if qa == 0.0 {
                        if qb != 0.0 {
                            lower.points.push(BoundaryPoint {
                                param: 0.0,
                                x: beta,
                                y: -qc / qb,
                            });
                        }
                        continue;
                    }
                    let disc = qb * qb - 4.0 * qa * qc;
                    if disc < 0.0 {
                        continue;
                    }
                    let r = disc.sqrt();
                    lower.points.push(BoundaryPoint {
                        param: 0.0,
                        x: beta,
                        y: (-qb - r) / (2.0 * qa),
                    });
                    upper.points.push(BoundaryPoint {
                        param: 0.0,
                        x: beta,
                        y: (-qb + r) / (2.0 * qa),
                    });
                }
                out.extend([lower, upper].into_iter().filter(|c| !c.points.is_empty()));
            } else if cfg.n == 0 {
                let b = kappa - 0.5 * alpha;
                out.push(BoundaryCurve::line(
                    BoundaryKind::StringOmega0,
                    (b, -1e3),
                    (b, 1e3),
                    0.0,
                ));
            } else {
                let line = |b: f64| {
                    h.kappa_h / (2.0 * nf * kappa)
                        * (alpha + 2.0 * b - 2.0 * kappa + alpha * human_factor)
                };
                out.push(BoundaryCurve::line(
                    BoundaryKind::StringOmega0,
                    (x_range.0, line(x_range.0)),
                    (x_range.1, line(x_range.1)),
                    0.0,
                ));
            }
        }
    }
    Ok(out)
}

/// K values `0, Δ, 2Δ, …` with `Δ = 2π / count`.
pub fn k_grid(count: usize) -> Vec<f64> {
    (0..count).map(|i| TAU * i as f64 / count as f64).collect()
}

/// The ω > 0 string boundary family, one curve per K.
pub fn string_family(
    cfg: &ChainModel,
    plane: Plane,
    omegas: &[f64],
    ks: &[f64],
) -> Result<Vec<BoundaryCurve>> {
    check_kind(cfg)?;
    let gammas = omegas
        .iter()
        .map(|&w| gamma(&cfg.human, cfg.n, Complex64::new(0.0, w)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ks
        .iter()
        .map(|&k| {
            let mut c = BoundaryCurve::new(BoundaryKind::StringOmegaK, Some(k));
            for (&w, &g) in omegas.iter().zip(&gammas) {
                match string_point(cfg, plane, w, k, g) {
                    Some((x, y)) => c.points.push(BoundaryPoint { param: w, x, y }),
                    None => c.skipped.push(w),
                }
            }
            c
        })
        .collect())
}

/// Ring boundary of the chain closed on itself: the K = 0 member of the family.
/// ACC uses its explicit formula; ATC solves the general system.
pub fn ring_boundaries(cfg: &ChainModel, plane: Plane, omegas: &[f64]) -> Result<BoundaryCurve> {
    check_kind(cfg)?;
    let mut c = BoundaryCurve::new(BoundaryKind::Ring, Some(0.0));
    for &w in omegas {
        let g = gamma(&cfg.human, cfg.n, Complex64::new(0.0, w))?;
        let p = if cfg.ego_kind == EgoKind::Acc && plane == Plane::BetaAlpha {
            acc_ring_point(cfg.ego.kappa, cfg.ego.sigma, w, g.re, g.im)
        } else {
            string_point(cfg, plane, w, 0.0, g)
        };
        match p {
            Some((x, y)) => c.points.push(BoundaryPoint { param: w, x, y }),
            None => c.skipped.push(w),
        }
    }
    Ok(c)
}

/// Boundaries of a ring of `n + 1` identical human drivers in the `(β_H, α_H)`
/// plane, one curve per `k = 0..=n`, from `T_H(iω) Γ_k = 1` with
/// `Γ_k = e^{i 2kπ/(n+1)}`. The k = 0 curve is the s = 0 root and stays empty.
pub fn homogeneous_ring_boundaries(
    human: &HumanLink,
    n: usize,
    omegas: &[f64],
) -> Vec<BoundaryCurve> {
    (0..=n)
        .map(|k| {
            let phase = TAU * k as f64 / (n + 1) as f64;
            let mut c = BoundaryCurve::new(BoundaryKind::Ring, Some(k as f64));
            for &w in omegas {
                match acc_ring_point(human.kappa_h, human.tau, w, phase.cos(), phase.sin()) {
                    Some((x, y)) if k > 0 => c.points.push(BoundaryPoint { param: w, x, y }),
                    _ => c.skipped.push(w),
                }
            }
            c
        })
        .collect()
}

/// Per-bin minimum of the family above `floor(x)`; bins are the intervals of `edges`.
pub fn envelope<F: Fn(f64) -> f64>(
    curves: &[BoundaryCurve],
    edges: &[f64],
    floor: F,
) -> BoundaryCurve {
    let bins = edges.len().saturating_sub(1);
    let mut best: Vec<Option<BoundaryPoint>> = vec![None; bins];
    for p in curves
        .iter()
        .filter(|c| c.kind == BoundaryKind::StringOmegaK)
        .flat_map(|c| &c.points)
    {
        if !(p.y > floor(p.x)) {
            continue;
        }
        let Some(i) = edges.windows(2).position(|e| p.x >= e[0] && p.x < e[1]) else {
            continue;
        };
        if best[i].map_or(true, |b| p.y < b.y) {
            best[i] = Some(*p);
        }
    }
    let mut c = BoundaryCurve::new(BoundaryKind::Envelope, None);
    c.points = best.into_iter().flatten().collect();
    c
}

/// Defining residual of a boundary point: characteristic value at `iΩ` for
/// plant curves, `||G(iω)| − 1|` for string curves, `|G(iω) − 1|` for rings.
pub fn point_residual(
    cfg: &ChainModel,
    plane: Plane,
    kind: BoundaryKind,
    p: &BoundaryPoint,
) -> Result<f64> {
    let at = plane.apply(cfg, p.x, p.y);
    let s = Complex64::new(0.0, p.param);
    let (alpha, beta, beta_b, kappa, sigma) = (
        at.ego.alpha,
        at.ego.beta,
        at.beta_b(),
        at.ego.kappa,
        at.ego.sigma,
    );
    let d_b = s * s * (s * sigma).exp() + s * (alpha + beta + beta_b) + alpha * kappa;
    match kind {
        BoundaryKind::PlantS0 => Ok((alpha * kappa).abs()),
        BoundaryKind::PlantVehicle => Ok(d_b.norm()),
        BoundaryKind::PlantRing => {
            let g = gamma(&at.human, at.n, s)?;
            Ok((d_b - s * beta_b * g).norm())
        }
        BoundaryKind::StringOmegaK | BoundaryKind::Envelope => {
            Ok((head_to_tail(&at, s)?.norm() - 1.0).abs())
        }
        BoundaryKind::Ring => Ok((head_to_tail(&at, s)? - 1.0).norm()),
        BoundaryKind::StringOmega0 => Ok(crate::stability::low_frequency_margin(&at).abs()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq::EgoGains;

    fn omegas() -> Vec<f64> {
        (1..=200).map(|i| TAU * i as f64 / 200.0).collect()
    }

    #[test]
    fn quarter_period_plant_point() {
        let cfg = ChainModel::acc(EgoGains::default(), HumanLink::default(), 0);
        let w = FRAC_PI_2 / 0.6;
        let curves = plant_boundaries(&cfg, Plane::BetaAlpha, &[w], (0.0, 3.0)).unwrap();
        let p = curves[1].points[0];
        assert!(
            (p.x - 2.6179938779914944).abs() < 1e-12 && p.y.abs() < 1e-12,
            "{p:?}"
        );
    }

    #[test]
    fn atc_without_backward_gain_matches_acc() {
        let h = HumanLink::default();
        let acc = ChainModel::acc(EgoGains::default(), h, 2);
        let atc0 = ChainModel::atc(
            EgoGains {
                beta_b: 0.0,
                ..EgoGains::default()
            },
            h,
            2,
        );
        let ks = k_grid(8);
        let a = string_family(&acc, Plane::BetaAlpha, &omegas(), &ks).unwrap();
        let b = string_family(&atc0, Plane::BetaAlpha, &omegas(), &ks).unwrap();
        for (ca, cb) in a.iter().zip(&b) {
            for (pa, pb) in ca.points.iter().zip(&cb.points) {
                assert!((pa.x - pb.x).abs() < 1e-9 && (pa.y - pb.y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn acc_alone_general_solution_matches_explicit() {
        let cfg = ChainModel::acc(EgoGains::default(), HumanLink::default(), 0);
        for k in [0.3, 1.0, 2.5, 4.0] {
            for w in [0.2, 1.3, 3.7] {
                let general =
                    string_point(&cfg, Plane::BetaAlpha, w, k, Complex64::new(1.0, 0.0)).unwrap();
                let explicit = acc_alone_string_point(0.6, 0.6, w, k).unwrap();
                assert!(
                    (general.0 - explicit.0).abs() < 1e-9 && (general.1 - explicit.1).abs() < 1e-9
                );
            }
        }
    }

    #[test]
    fn omega_star_roots() {
        let sigma = 0.6;
        let roots = omega_star(0.4 * 0.6, sigma);
        assert_eq!(roots.len(), 2);
        for w in &roots {
            assert!((w * w * (w * sigma).cos() - 0.24).abs() < 1e-12);
        }
        assert!(omega_star(100.0, sigma).is_empty());
        assert_eq!(omega_star(0.0, sigma), vec![FRAC_PI_2 / sigma]);
    }

    #[test]
    fn omega0_line_reference_point() {
        let cfg = ChainModel::acc(EgoGains::default(), HumanLink::default(), 0);
        let lines = omega0_boundaries(&cfg, Plane::BetaAlpha, (0.5, 1.5), 2).unwrap();
        let p = lines[1].points[0];
        assert!((p.x - 0.5).abs() < 1e-15 && (p.y - 0.2).abs() < 1e-15);
    }

    #[test]
    fn residuals_vanish() {
        let h = HumanLink::default();
        let cfg = ChainModel::atc(EgoGains::default(), h, 3);
        for plane in [Plane::BetaAlpha, Plane::BetaBetaB] {
            let mut curves = plant_boundaries(&cfg, plane, &omegas(), (0.0, 3.0)).unwrap();
            curves.extend(string_family(&cfg, plane, &omegas(), &k_grid(12)).unwrap());
            for c in curves.iter().filter(|c| c.kind != BoundaryKind::PlantS0) {
                for p in &c.points {
                    let r = point_residual(&cfg, plane, c.kind, p).unwrap();
                    assert!(r < 1e-8, "{:?} {p:?} residual {r}", c.kind);
                }
            }
        }
    }
}
