//! Subcommand implementations. Every output file is written once, atomically.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use vring::energy::{energy_sweep, relative_saving, EnergyGrid};
use vring::export::{
    energy_grid_json, write_chart_cells, write_curves, write_energy_grid, write_frequency_response,
    write_trajectory, EnergyField, Provenance, SCHEMA_VERSION,
};
use vring::freq::{frequency_response, omega_grid};
use vring::parallel::{map_indexed, Execution};
use vring::simulator::{build_equilibrium, simulate, Trajectory};
use vring::stability::boundaries::Plane;
use vring::stability::chart::{build_chart, CellClass};
use vring::stability::plant_factors;
use vring::stability::roots::{find_roots, Rect, RootOptions};
use vring::{Error, Result};

use crate::plot::render_chart;
use crate::scenario::ScenarioFile;

/// Process exit code for an error: 1 input, 2 collision, 3 numerical failure.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Collision { .. } => 2,
        Error::NonConvergence(_) | Error::Pole { .. } => 3,
        Error::Domain(_) | Error::Config(_) | Error::Saturated { .. } | Error::Io(_) => 1,
    }
}

/// Writes `path` through a temporary file in the same directory.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(w)?;
        Ok(())
    })
}

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

fn provenance(scenario: &ScenarioFile) -> Provenance {
    Provenance {
        scenario_hash: scenario.hash(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VehicleSummary {
    pub index: i32,
    pub kind: String,
    pub min_speed: f64,
    pub max_speed: f64,
    /// Absent for the open-loop lead.
    pub min_headway: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub schema: u32,
    pub scenario_hash: String,
    pub collision: bool,
    pub collision_detail: Option<String>,
    pub speed_floor_events: usize,
    pub saturation_events: usize,
    /// Highest index first.
    pub vehicles: Vec<VehicleSummary>,
}

pub fn summarize(traj: &Trajectory, hash: String) -> SimulationSummary {
    let vehicles = (0..traj.indices.len())
        .rev()
        .map(|p| {
            let speed = &traj.speed[p];
            VehicleSummary {
                index: traj.indices[p],
                kind: traj.labels[p].clone(),
                min_speed: speed.iter().copied().fold(f64::INFINITY, f64::min),
                max_speed: speed.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                min_headway: traj.min_headway(p).filter(|h| h.is_finite()),
            }
        })
        .collect();
    SimulationSummary {
        schema: SCHEMA_VERSION,
        scenario_hash: hash,
        collision: false,
        collision_detail: None,
        speed_floor_events: traj.speed_floor_events,
        saturation_events: traj.saturation_events,
        vehicles,
    }
}

/// `trajectory.csv` and `summary.json`; on collision only the summary is written
/// and the collision error is returned.
pub fn cmd_simulate(scenario: &ScenarioFile, out: &Path) -> Result<SimulationSummary> {
    prepare(out)?;
    let meta = provenance(scenario);
    let chain = scenario.to_chain()?;
    let eq = build_equilibrium(&chain)?;
    match simulate(&chain, &eq, &scenario.lead, &scenario.sim) {
        Ok(traj) => {
            write_atomic(&out.join("trajectory.csv"), |w| {
                write_trajectory(w, &traj, &meta)
            })?;
            let summary = summarize(&traj, meta.scenario_hash);
            write_json(&out.join("summary.json"), &summary)?;
            Ok(summary)
        }
        Err(e @ Error::Collision { .. }) => {
            let summary = SimulationSummary {
                schema: SCHEMA_VERSION,
                scenario_hash: meta.scenario_hash,
                collision: true,
                collision_detail: Some(e.to_string()),
                speed_floor_events: 0,
                saturation_events: 0,
                vehicles: Vec::new(),
            };
            write_json(&out.join("summary.json"), &summary)?;
            Err(e)
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SavingsRow {
    pub n: usize,
    pub ego_acc: f64,
    pub ego_atc: f64,
    pub ego_saving: f64,
    pub chv_acc: f64,
    pub chv_atc: f64,
    pub chv_saving: f64,
}

/// Savings of each β_B column relative to the β_B = 0 column, per β row.
fn column_savings(grid: &EnergyGrid) -> Result<serde_json::Value> {
    if grid.beta_b.first() != Some(&0.0) {
        return Err(Error::Config(
            "savings need the β_B range to start at 0".into(),
        ));
    }
    let table = |m: &Vec<Vec<Option<f64>>>| -> Vec<Vec<Option<f64>>> {
        m.iter()
            .map(|row| {
                row.iter()
                    .map(|c| Some(relative_saving(row[0]?, (*c)?)))
                    .collect()
            })
            .collect()
    };
    Ok(json!({
        "beta": grid.beta,
        "beta_b": grid.beta_b,
        "ego": table(&grid.ego),
        "tail": table(&grid.tail),
    }))
}

/// ATC (scenario gains) against the same ego with β_B = 0, for each follower count.
pub fn savings_by_n(
    scenario: &ScenarioFile,
    ns: &[usize],
    exec: Execution,
) -> Result<Vec<SavingsRow>> {
    let rows = map_indexed(ns.len(), exec, |i| -> Result<SavingsRow> {
        let n = ns[i];
        let mut s = scenario.clone();
        s.set_followers(n)?;
        let template = s.sweep_template()?;
        let ego = template
            .chain
            .vehicle(0)
            .and_then(|v| match &v.driver {
                vring::model::Driver::Automated(c) => Some((c.beta, c.beta_back())),
                _ => None,
            })
            .ok_or_else(|| Error::Config("savings need an automated ego".into()))?;
        let collided = || Error::Config(format!("N = {n}: the run collided"));
        let acc = template.run(ego.0, 0.0)?.ok_or_else(collided)?;
        let atc = template.run(ego.0, ego.1)?.ok_or_else(collided)?;
        Ok(SavingsRow {
            n,
            ego_acc: acc.0,
            ego_atc: atc.0,
            ego_saving: relative_saving(acc.0, atc.0),
            chv_acc: acc.1,
            chv_atc: atc.1,
            chv_saving: relative_saving(acc.1, atc.1),
        })
    });
    rows.into_iter().collect()
}

pub struct EnergyOutcome {
    pub grid: EnergyGrid,
    pub by_n: Option<Vec<SavingsRow>>,
}

/// Energy grid CSVs, grid JSON, savings JSON and, with `ns`, the savings table over N.
pub fn cmd_energy(
    scenario: &ScenarioFile,
    ns: Option<&[usize]>,
    out: &Path,
    exec: Execution,
) -> Result<EnergyOutcome> {
    prepare(out)?;
    let meta = provenance(scenario);
    let template = scenario.sweep_template()?;
    let grid = energy_sweep(
        &template,
        &scenario.sweep.beta,
        &scenario.sweep.beta_b,
        exec,
    )?;
    if grid.invalid_cells() > 0 {
        log::warn!(
            "{} grid cells collided and are left empty",
            grid.invalid_cells()
        );
    }
    write_atomic(&out.join("energy_ego.csv"), |w| {
        write_energy_grid(w, &grid, EnergyField::Ego, &meta)
    })?;
    write_atomic(&out.join("energy_tail.csv"), |w| {
        write_energy_grid(w, &grid, EnergyField::Tail, &meta)
    })?;
    write_json(
        &out.join("energy.json"),
        &energy_grid_json(&grid, scenario.followers()?, &meta),
    )?;
    let mut savings = json!({
        "schema": SCHEMA_VERSION,
        "scenario_hash": meta.scenario_hash,
        "columns": column_savings(&grid).ok(),
    });
    let by_n = match ns {
        Some(ns) => {
            let rows = savings_by_n(scenario, ns, exec)?;
            write_atomic(&out.join("savings_by_n.csv"), |w| {
                writeln!(
                    w,
                    "# schema={SCHEMA_VERSION} table=savings-by-n scenario={}",
                    meta.scenario_hash
                )?;
                let mut csv = csv::Writer::from_writer(w);
                for r in &rows {
                    csv.serialize(r)?;
                }
                csv.flush()?;
                Ok(())
            })?;
            savings["by_n"] = serde_json::to_value(&rows).expect("rows serialize");
            Some(rows)
        }
        None => None,
    };
    write_json(&out.join("savings.json"), &savings)?;
    Ok(EnergyOutcome { grid, by_n })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartSummary {
    pub schema: u32,
    pub scenario_hash: String,
    pub plane: Plane,
    pub resolution: (usize, usize),
    pub plant_unstable: usize,
    pub string_unstable: usize,
    pub string_stable: usize,
    pub indeterminate: usize,
    pub string_stable_area: f64,
}

/// `chart.csv`, `curves.csv`, `chart.json` and optionally `chart.svg`.
pub fn cmd_chart(
    scenario: &ScenarioFile,
    out: &Path,
    svg: bool,
    exec: Execution,
) -> Result<ChartSummary> {
    prepare(out)?;
    let meta = provenance(scenario);
    let spec = scenario.chart_spec()?;
    let chart = build_chart(&spec, exec)?;
    write_atomic(&out.join("chart.csv"), |w| {
        write_chart_cells(w, &chart, &meta)
    })?;
    write_atomic(&out.join("curves.csv"), |w| {
        write_curves(w, &chart.curves, chart.plane.y_name(), &meta)
    })?;
    let summary = ChartSummary {
        schema: SCHEMA_VERSION,
        scenario_hash: meta.scenario_hash.clone(),
        plane: chart.plane,
        resolution: spec.resolution,
        plant_unstable: chart.count(CellClass::PlantUnstable),
        string_unstable: chart.count(CellClass::StringUnstable),
        string_stable: chart.count(CellClass::StringStable),
        indeterminate: chart.count(CellClass::Indeterminate),
        string_stable_area: chart.string_stable_area(),
    };
    write_json(&out.join("chart.json"), &summary)?;
    if svg {
        let doc = render_chart(&chart);
        write_atomic(&out.join("chart.svg"), |w| Ok(w.write_all(doc.as_bytes())?))?;
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorRoots {
    pub factor: String,
    /// `[re, im]` pairs; the conjugates of complex roots are implied.
    pub roots: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootsReport {
    pub schema: u32,
    pub scenario_hash: String,
    pub rect: Rect,
    pub factors: Vec<FactorRoots>,
    pub rightmost: Option<[f64; 2]>,
    pub all_left: bool,
}

/// Characteristic roots of every plant factor inside `rect`.
pub fn cmd_roots(scenario: &ScenarioFile, out: &Path) -> Result<RootsReport> {
    prepare(out)?;
    let rect = scenario.analysis.roots_rect;
    // A rectangle starting on the real axis is mirrored so real roots stay off the contour.
    let search = if rect.im_min == 0.0 {
        Rect {
            im_min: -rect.im_max,
            ..rect
        }
    } else {
        rect
    };
    let model = scenario.model()?;
    let mut factors = Vec::new();
    let mut all: Vec<Complex64> = Vec::new();
    for f in plant_factors(&model) {
        let mut found = find_roots(&|s| f.eval(s), search, &RootOptions::default())?;
        if search != rect {
            found.roots.retain(|r| r.im >= -1e-9);
        }
        if !found.is_complete() {
            return Err(Error::NonConvergence(format!(
                "{} roots unresolved in {} sub-rectangles",
                f.name(),
                found.uncovered.len()
            )));
        }
        all.extend(&found.roots);
        factors.push(FactorRoots {
            factor: f.name().to_string(),
            roots: found.roots.iter().map(|r| [r.re, r.im]).collect(),
        });
    }
    let rightmost = all.iter().copied().max_by(|a, b| a.re.total_cmp(&b.re));
    let report = RootsReport {
        schema: SCHEMA_VERSION,
        scenario_hash: scenario.hash(),
        rect,
        factors,
        rightmost: rightmost.map(|r| [r.re, r.im]),
        all_left: all.iter().all(|r| r.re < 0.0),
    };
    write_json(&out.join("roots.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreqSummary {
    pub schema: u32,
    pub scenario_hash: String,
    pub max_abs: f64,
    pub omega_at_max: f64,
    pub points: usize,
}

/// `freqresp.csv` of `G(iω)` on `[0, ω_max]`.
pub fn cmd_freqresp(scenario: &ScenarioFile, out: &Path) -> Result<FreqSummary> {
    prepare(out)?;
    let meta = provenance(scenario);
    let a = &scenario.analysis;
    let model = scenario.model()?;
    let evals = frequency_response(&model, &omega_grid(a.omega_max, a.freq_points));
    write_atomic(&out.join("freqresp.csv"), |w| {
        write_frequency_response(w, &evals, &meta)
    })?;
    let peak = evals
        .iter()
        .filter(|e| e.s.im > 0.0)
        .max_by(|x, y| x.magnitude().total_cmp(&y.magnitude()));
    let summary = FreqSummary {
        schema: SCHEMA_VERSION,
        scenario_hash: meta.scenario_hash,
        max_abs: peak.map_or(f64::NAN, |e| e.magnitude()),
        omega_at_max: peak.map_or(f64::NAN, |e| e.s.im),
        points: evals.len(),
    };
    write_json(&out.join("freqresp.json"), &summary)?;
    Ok(summary)
}

/// Output directory default: `out/<command>`.
pub fn default_out(command: &str) -> PathBuf {
    PathBuf::from("out").join(command)
}
