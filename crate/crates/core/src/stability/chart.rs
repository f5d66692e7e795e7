//! Gain-plane stability charts: per-cell classification plus boundary curves.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freq::ChainModel;
use crate::parallel::{map_indexed, Execution};
use crate::stability::boundaries::{
    envelope, k_grid, omega0_boundaries, plant_boundaries, ring_boundaries, string_family,
    BoundaryCurve, BoundaryKind, Plane,
};
use crate::stability::{quick_verdict, FrequencyGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellClass {
    PlantUnstable = 0,
    StringUnstable = 1,
    StringStable = 2,
    /// Verdict could not be established (root on a contour, pole on the scan).
    Indeterminate = 3,
}

impl CellClass {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub plane: Plane,
    /// Fixed gains and human chain; the plane's two gains are overwritten per cell.
    pub model: ChainModel,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    /// Cells along x and y.
    pub resolution: (usize, usize),
    #[serde(default = "default_omega_max")]
    pub omega_max: f64,
    #[serde(default = "default_scan_points")]
    pub scan_points: usize,
    /// Number of K values of the string family.
    #[serde(default = "default_k_count")]
    pub k_count: usize,
    /// Frequency samples per boundary curve.
    #[serde(default = "default_curve_samples")]
    pub curve_samples: usize,
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

impl ChartSpec {
    pub fn new(
        plane: Plane,
        model: ChainModel,
        x_range: (f64, f64),
        y_range: (f64, f64),
        resolution: (usize, usize),
    ) -> Self {
        Self {
            plane,
            model,
            x_range,
            y_range,
            resolution,
            omega_max: default_omega_max(),
            scan_points: default_scan_points(),
            k_count: default_k_count(),
            curve_samples: default_curve_samples(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.1 > r.0;
        if !ok(self.x_range) || !ok(self.y_range) {
            return Err(Error::Config(
                "chart ranges must have positive extent".into(),
            ));
        }
        if self.resolution.0 == 0 || self.resolution.1 == 0 {
            return Err(Error::Config(
                "chart resolution must be at least 1×1".into(),
            ));
        }
        if !(self.omega_max > 0.0) || self.scan_points < 4 {
            return Err(Error::Config(
                "frequency scan needs ω_max > 0 and at least 4 points".into(),
            ));
        }
        Ok(())
    }

    pub fn x_centers(&self) -> Vec<f64> {
        centers(self.x_range, self.resolution.0)
    }

    pub fn y_centers(&self) -> Vec<f64> {
        centers(self.y_range, self.resolution.1)
    }

    fn curve_omegas(&self) -> Vec<f64> {
        let n = self.curve_samples.max(2);
        (1..=n)
            .map(|i| self.omega_max * i as f64 / n as f64)
            .collect()
    }
}

fn centers(range: (f64, f64), n: usize) -> Vec<f64> {
    let d = (range.1 - range.0) / n as f64;
    (0..n).map(|i| range.0 + (i as f64 + 0.5) * d).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityChart {
    pub plane: Plane,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Indexed `[iy][ix]`.
    pub cells: Vec<Vec<CellClass>>,
    pub curves: Vec<BoundaryCurve>,
    pub cell_area: f64,
}

impl StabilityChart {
    pub fn count(&self, class: CellClass) -> usize {
        self.cells.iter().flatten().filter(|&&c| c == class).count()
    }

    pub fn string_stable_area(&self) -> f64 {
        self.count(CellClass::StringStable) as f64 * self.cell_area
    }

    pub fn class_at(&self, ix: usize, iy: usize) -> CellClass {
        self.cells[iy][ix]
    }
}

/// Classifies one gain point on a shared frequency grid.
pub fn classify(model: &ChainModel, grid: &FrequencyGrid) -> CellClass {
    match quick_verdict(model, grid) {
        Ok((false, _)) => CellClass::PlantUnstable,
        Ok((true, false)) => CellClass::StringUnstable,
        Ok((true, true)) => CellClass::StringStable,
        Err(e) => {
            log::debug!("indeterminate cell: {e}");
            CellClass::Indeterminate
        }
    }
}

/// Cell classification only.
pub fn classify_cells(spec: &ChartSpec, exec: Execution) -> Result<Vec<Vec<CellClass>>> {
    spec.validate()?;
    let grid = FrequencyGrid::new(&spec.model, spec.omega_max, spec.scan_points)?;
    let xs = spec.x_centers();
    let ys = spec.y_centers();
    let nx = xs.len();
    let flat = map_indexed(nx * ys.len(), exec, |i| {
        let model = spec.plane.apply(&spec.model, xs[i % nx], ys[i / nx]);
        classify(&model, &grid)
    });
    Ok(flat.chunks(nx).map(<[CellClass]>::to_vec).collect())
}

/// Classification plus plant, ω = 0, ω > 0 (per K), envelope and ring boundaries.
pub fn build_chart(spec: &ChartSpec, exec: Execution) -> Result<StabilityChart> {
    let cells = classify_cells(spec, exec)?;
    let xs = spec.x_centers();
    let ys = spec.y_centers();
    let omegas = spec.curve_omegas();
    let mut curves = plant_boundaries(&spec.model, spec.plane, &omegas, spec.x_range)?;
    curves.extend(omega0_boundaries(
        &spec.model,
        spec.plane,
        spec.x_range,
        spec.curve_samples,
    )?);
    let family = string_family(
        &spec.model,
        spec.plane,
        &omegas,
        &k_grid(spec.k_count.max(1)),
    )?;

    // Envelope above the lowest string-stable cell of each column.
    let dx = (spec.x_range.1 - spec.x_range.0) / xs.len() as f64;
    let dy = (spec.y_range.1 - spec.y_range.0) / ys.len() as f64;
    let edges: Vec<f64> = (0..=xs.len())
        .map(|i| spec.x_range.0 + i as f64 * dx)
        .collect();
    let bottoms: Vec<Option<f64>> = (0..xs.len())
        .map(|ix| {
            (0..ys.len())
                .find(|&iy| cells[iy][ix] == CellClass::StringStable)
                .map(|iy| ys[iy] - dy)
        })
        .collect();
    let floor = |x: f64| {
        let ix =
            (((x - spec.x_range.0) / dx).floor() as isize).clamp(0, xs.len() as isize - 1) as usize;
        bottoms[ix].unwrap_or(f64::INFINITY)
    };
    let env = envelope(&family, &edges, floor);

    // Keep family samples near the visible window.
    let (wx, wy) = (
        spec.x_range.1 - spec.x_range.0,
        spec.y_range.1 - spec.y_range.0,
    );
    let visible = |x: f64, y: f64| {
        x >= spec.x_range.0 - wx
            && x <= spec.x_range.1 + wx
            && y >= spec.y_range.0 - wy
            && y <= spec.y_range.1 + wy
    };
    for mut c in family {
        c.points.retain(|p| visible(p.x, p.y));
        if !c.points.is_empty() {
            curves.push(c);
        }
    }
    curves.push(env);
    curves.push(ring_boundaries(&spec.model, spec.plane, &omegas)?);
    debug_assert!(curves
        .iter()
        .all(|c| c.points.iter().all(|p| p.x.is_finite() && p.y.is_finite())));
    Ok(StabilityChart {
        plane: spec.plane,
        x: xs,
        y: ys,
        cells,
        curves,
        cell_area: dx * dy,
    })
}

/// Whether any curve of `kind` is attached.
pub fn has_curve(chart: &StabilityChart, kind: BoundaryKind) -> bool {
    chart
        .curves
        .iter()
        .any(|c| c.kind == kind && !c.points.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq::{EgoGains, HumanLink};

    #[test]
    fn acc_alone_sides_of_the_omega0_line() {
        let model = ChainModel::acc(EgoGains::default(), HumanLink::default(), 0);
        let grid = FrequencyGrid::new(&model, TAU, 2000).unwrap();
        // α = 2(κ − β) = 0.2 at β = 0.5
        let above = classify(&model.with_gains(0.21, 0.5, 0.0), &grid);
        let below = classify(&model.with_gains(0.19, 0.5, 0.0), &grid);
        assert_eq!(above, CellClass::StringStable);
        assert_eq!(below, CellClass::StringUnstable);
    }

    #[test]
    fn small_chart_has_all_parts() {
        let model = ChainModel::acc(EgoGains::default(), HumanLink::default(), 0);
        let mut spec = ChartSpec::new(Plane::BetaAlpha, model, (0.0, 2.0), (-0.2, 1.0), (12, 8));
        spec.k_count = 24;
        spec.curve_samples = 100;
        let chart = build_chart(&spec, Execution::Sequential).unwrap();
        assert_eq!(chart.cells.len(), 8);
        assert_eq!(chart.cells[0].len(), 12);
        assert!(chart.count(CellClass::StringStable) > 0);
        assert!(chart.count(CellClass::PlantUnstable) > 0);
        for kind in [
            BoundaryKind::PlantS0,
            BoundaryKind::PlantVehicle,
            BoundaryKind::StringOmega0,
            BoundaryKind::StringOmegaK,
        ] {
            assert!(has_curve(&chart, kind), "{kind:?}");
        }
        let par = build_chart(&spec, Execution::Parallel).unwrap();
        assert_eq!(par.cells, chart.cells);
    }
}
