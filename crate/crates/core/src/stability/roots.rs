//! Root counting and root finding for analytic functions on rectangles, by the
//! argument principle and recursive bisection.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let r = Self {
            re_min,
            re_max,
            im_min,
            im_max,
        };
        if !(re_max > re_min && im_max > im_min)
            || ![re_min, re_max, im_min, im_max]
                .iter()
                .all(|v| v.is_finite())
        {
            return Err(Error::Domain(format!("degenerate rectangle {r:?}")));
        }
        Ok(r)
    }

    /// Root-search region of the stability charts: Re ∈ [−3, 1], Im ∈ [0, 2π].
    pub fn default_search() -> Self {
        Self {
            re_min: -3.0,
            re_max: 1.0,
            im_min: 0.0,
            im_max: 2.0 * std::f64::consts::PI,
        }
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(
            0.5 * (self.re_min + self.re_max),
            0.5 * (self.im_min + self.im_max),
        )
    }

    pub fn contains(&self, s: Complex64, margin: f64) -> bool {
        s.re >= self.re_min - margin
            && s.re <= self.re_max + margin
            && s.im >= self.im_min - margin
            && s.im <= self.im_max + margin
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    /// Splits across the longer side at `fraction` of its length.
    fn split(&self, fraction: f64) -> (Rect, Rect) {
        if self.width() >= self.height() {
            let cut = self.re_min + fraction * self.width();
            (
                Rect {
                    re_max: cut,
                    ..*self
                },
                Rect {
                    re_min: cut,
                    ..*self
                },
            )
        } else {
            let cut = self.im_min + fraction * self.height();
            (
                Rect {
                    im_max: cut,
                    ..*self
                },
                Rect {
                    im_min: cut,
                    ..*self
                },
            )
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Newton stops once `|f| < tol`.
    pub tol: f64,
    pub max_depth: usize,
    /// Rectangles smaller than this are not split further.
    pub min_size: f64,
    pub samples_per_edge: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_depth: 48,
            min_size: 1e-9,
            samples_per_edge: 64,
        }
    }
}

/// Roots found in a region; `uncovered` lists sub-rectangles that could not be resolved.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RootSearch {
    /// Repeated according to multiplicity.
    pub roots: Vec<Complex64>,
    pub uncovered: Vec<Rect>,
}

impl RootSearch {
    pub fn is_complete(&self) -> bool {
        self.uncovered.is_empty()
    }

    pub fn rightmost(&self) -> Option<Complex64> {
        self.roots
            .iter()
            .copied()
            .max_by(|a, b| a.re.total_cmp(&b.re))
    }
}

const MAX_STEP: f64 = std::f64::consts::FRAC_PI_4;

fn sample<F: Fn(Complex64) -> Complex64>(f: &F, s: Complex64) -> Result<Complex64> {
    let v = f(s);
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite value at s = {s}")));
    }
    if v.norm() == 0.0 {
        return Err(Error::Domain(format!("zero on the contour at s = {s}")));
    }
    Ok(v)
}

fn edge_phase<F: Fn(Complex64) -> Complex64>(
    f: &F,
    a: Complex64,
    b: Complex64,
    fa: Complex64,
    fb: Complex64,
    depth: usize,
) -> Result<f64> {
    let d = (fb / fa).arg();
    if d.abs() < MAX_STEP {
        return Ok(d);
    }
    if depth == 0 || (b - a).norm() < 1e-14 * (1.0 + a.norm()) {
        return Err(Error::NonConvergence(format!(
            "phase unresolved near s = {a}"
        )));
    }
    let m = 0.5 * (a + b);
    let fm = sample(f, m)?;
    Ok(edge_phase(f, a, m, fa, fm, depth - 1)? + edge_phase(f, m, b, fm, fb, depth - 1)?)
}

/// Number of zeros of `f` inside `rect` (argument principle).
///
/// Fails when a zero lies on, or numerically too close to, the contour.
pub fn winding_number<F: Fn(Complex64) -> Complex64>(
    f: &F,
    rect: &Rect,
    samples_per_edge: usize,
) -> Result<i64> {
    let c = rect.corners();
    let n = samples_per_edge.max(4);
    let mut total = 0.0;
    let mut prev_s = c[0];
    let mut prev_f = sample(f, prev_s)?;
    for e in 0..4 {
        let (a, b) = (c[e], c[(e + 1) % 4]);
        for k in 1..=n {
            let s = a + (b - a) * (k as f64 / n as f64);
            let fs = sample(f, s)?;
            total += edge_phase(f, prev_s, s, prev_f, fs, 40)?;
            prev_s = s;
            prev_f = fs;
        }
    }
    let turns = total / std::f64::consts::TAU;
    let rounded = turns.round();
    if (turns - rounded).abs() > 0.05 {
        return Err(Error::NonConvergence(format!(
            "winding number {turns} is not an integer"
        )));
    }
    Ok(rounded as i64)
}

fn derivative<F: Fn(Complex64) -> Complex64>(f: &F, s: Complex64) -> Complex64 {
    let h = 1e-6 * (1.0 + s.norm());
    (f(s + h) - f(s - h)) / (2.0 * h)
}

/// Damped Newton iteration for a root of multiplicity `m`; stops once `|f| < tol`
/// or a full step no longer moves the iterate.
pub fn newton<F: Fn(Complex64) -> Complex64>(
    f: &F,
    start: Complex64,
    m: usize,
    tol: f64,
) -> Option<Complex64> {
    let mut s = start;
    let mut fs = f(s);
    for _ in 0..100 {
        if fs.norm() < tol {
            return Some(s);
        }
        let d = derivative(f, s);
        if d.norm() == 0.0 || !d.re.is_finite() {
            return None;
        }
        let step = fs / d * m as f64;
        let mut lambda = 1.0;
        loop {
            let cand = s - step * lambda;
            let fc = f(cand);
            if fc.norm() < fs.norm() || lambda < 1e-6 {
                s = cand;
                fs = fc;
                break;
            }
            lambda *= 0.5;
        }
        // Converged in the argument; |f| may stay large where the function is steep.
        if (step * lambda).norm() < 1e-14 * (1.0 + s.norm()) {
            return (lambda == 1.0 || fs.norm() < tol.sqrt()).then_some(s);
        }
    }
    (fs.norm() < tol).then_some(s)
}

/// Cut positions tried in turn when a split lands on a zero.
const CUTS: [f64; 4] = [0.5 + 0.0123, 0.5 - 0.0371, 0.5 + 0.0617, 0.5 - 0.0893];

/// All zeros of `f` inside `rect`.
pub fn find_roots<F: Fn(Complex64) -> Complex64>(
    f: &F,
    rect: Rect,
    opts: &RootOptions,
) -> Result<RootSearch> {
    let count = winding_number(f, &rect, opts.samples_per_edge)?;
    let mut out = RootSearch::default();
    if count > 0 {
        refine(f, rect, count as usize, opts.max_depth, opts, &mut out);
    }
    Ok(out)
}

fn refine<F: Fn(Complex64) -> Complex64>(
    f: &F,
    rect: Rect,
    count: usize,
    depth: usize,
    opts: &RootOptions,
    out: &mut RootSearch,
) {
    let small = rect.width().max(rect.height()) < opts.min_size;
    if count == 1 || small {
        let margin = 1e-9 * (1.0 + rect.center().norm());
        if let Some(root) = newton(f, rect.center(), count, opts.tol) {
            if rect.contains(root, margin) {
                out.roots.extend(std::iter::repeat(root).take(count));
                return;
            }
        }
        if small {
            // Accept the centre of a tiny rectangle as the cluster location.
            out.roots
                .extend(std::iter::repeat(rect.center()).take(count));
            return;
        }
    } else if let Some(root) = newton(f, rect.center(), count, opts.tol) {
        // A multiple root cannot be separated by bisection; confirm it holds every zero of the rectangle.
        let h = 1e-5 * (1.0 + root.norm());
        let tiny = Rect {
            re_min: root.re - h,
            re_max: root.re + h * 1.0123,
            im_min: root.im - h * 0.9871,
            im_max: root.im + h,
        };
        if rect.contains(root, 0.0)
            && winding_number(f, &tiny, opts.samples_per_edge).ok() == Some(count as i64)
        {
            out.roots.extend(std::iter::repeat(root).take(count));
            return;
        }
    }
    if depth == 0 {
        out.uncovered.push(rect);
        return;
    }
    for cut in CUTS {
        let (a, b) = rect.split(cut);
        let (Ok(na), Ok(nb)) = (
            winding_number(f, &a, opts.samples_per_edge),
            winding_number(f, &b, opts.samples_per_edge),
        ) else {
            continue;
        };
        if na < 0 || nb < 0 || (na + nb) as usize != count {
            continue;
        }
        if na > 0 {
            refine(f, a, na as usize, depth - 1, opts, out);
        }
        if nb > 0 {
            refine(f, b, nb as usize, depth - 1, opts, out);
        }
        return;
    }
    out.uncovered.push(rect);
}
