//! CSV and JSON writers for trajectories, energy grids, charts and frequency responses.
//!
//! Every CSV starts with one `#` line carrying the schema version, the table
//! kind and the hash of the scenario that produced it.

use std::io::Write;

use serde::Serialize;

use crate::energy::EnergyGrid;
use crate::error::Result;
use crate::freq::TransferEval;
use crate::simulator::Trajectory;
use crate::stability::boundaries::BoundaryCurve;
use crate::stability::chart::StabilityChart;

pub const SCHEMA_VERSION: u32 = 1;

/// Identifies the input a table was produced from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub scenario_hash: String,
}

fn preamble<W: Write>(
    w: &mut W,
    table: &str,
    meta: &Provenance,
    extra: &[(&str, String)],
) -> Result<()> {
    write!(
        w,
        "# schema={SCHEMA_VERSION} table={table} scenario={}",
        meta.scenario_hash
    )?;
    for (k, v) in extra {
        write!(w, " {k}={v}")?;
    }
    writeln!(w)?;
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Columns `t`, then `s_n, v_n, u_n, a_n` per vehicle, highest index first.
pub fn write_trajectory<W: Write>(mut w: W, traj: &Trajectory, meta: &Provenance) -> Result<()> {
    let order: Vec<usize> = (0..traj.indices.len()).rev().collect();
    let vehicles = order
        .iter()
        .map(|&p| format!("{}:{}", traj.indices[p], traj.labels[p]))
        .collect::<Vec<_>>()
        .join(",");
    preamble(&mut w, "trajectory", meta, &[("vehicles", vehicles)])?;
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    for &p in &order {
        let n = traj.indices[p];
        header.extend(["s", "v", "u", "a"].iter().map(|q| format!("{q}_{n}")));
    }
    out.write_record(&header)?;
    for k in 0..traj.time.len() {
        let mut row = Vec::with_capacity(header.len());
        row.push(num(traj.time[k]));
        for &p in &order {
            row.push(num(traj.position[p][k]));
            row.push(num(traj.speed[p][k]));
            row.push(num(traj.command[p][k]));
            row.push(num(traj.accel[p][k]));
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyField {
    Ego,
    Tail,
}

/// Matrix with β down the rows and β_B across the columns; collided cells are empty.
pub fn write_energy_grid<W: Write>(
    mut w: W,
    grid: &EnergyGrid,
    field: EnergyField,
    meta: &Provenance,
) -> Result<()> {
    let (name, data) = match field {
        EnergyField::Ego => ("energy-ego", &grid.ego),
        EnergyField::Tail => ("energy-tail", &grid.tail),
    };
    preamble(&mut w, name, meta, &[("tail", grid.tail_index.to_string())])?;
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["beta\\beta_b".to_string()];
    header.extend(grid.beta_b.iter().copied().map(num));
    out.write_record(&header)?;
    for (beta, row) in grid.beta.iter().zip(data) {
        let mut rec = vec![num(*beta)];
        rec.extend(row.iter().copied().map(opt));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyGridDocument<'a> {
    pub schema: u32,
    pub scenario_hash: &'a str,
    /// Human drivers behind the ego.
    pub n: usize,
    pub resolution: (usize, usize),
    pub grid: &'a EnergyGrid,
}

pub fn energy_grid_json(grid: &EnergyGrid, n: usize, meta: &Provenance) -> serde_json::Value {
    let doc = EnergyGridDocument {
        schema: SCHEMA_VERSION,
        scenario_hash: &meta.scenario_hash,
        n,
        resolution: (grid.beta.len(), grid.beta_b.len()),
        grid,
    };
    serde_json::to_value(doc).expect("energy grid serializes")
}

/// One row per cell: `x, y, class`.
pub fn write_chart_cells<W: Write>(
    mut w: W,
    chart: &StabilityChart,
    meta: &Provenance,
) -> Result<()> {
    preamble(
        &mut w,
        "chart",
        meta,
        &[
            ("plane", format!("beta,{}", chart.plane.y_name())),
            ("cell_area", num(chart.cell_area)),
        ],
    )?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["beta", chart.plane.y_name(), "class"])?;
    for (iy, y) in chart.y.iter().enumerate() {
        for (ix, x) in chart.x.iter().enumerate() {
            out.write_record([num(*x), num(*y), chart.class_at(ix, iy).code().to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Polylines as rows `curve, kind, k, segment, param, x, y`.
pub fn write_curves<W: Write>(
    mut w: W,
    curves: &[BoundaryCurve],
    y_name: &str,
    meta: &Provenance,
) -> Result<()> {
    preamble(&mut w, "curves", meta, &[])?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["curve", "kind", "k", "segment", "param", "beta", y_name])?;
    for (ci, c) in curves.iter().enumerate() {
        for (si, seg) in c.segments().iter().enumerate() {
            for p in *seg {
                out.write_record([
                    ci.to_string(),
                    c.kind.as_str().to_string(),
                    opt(c.k),
                    si.to_string(),
                    num(p.param),
                    num(p.x),
                    num(p.y),
                ])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Rows `omega, re, im, abs`.
pub fn write_frequency_response<W: Write>(
    mut w: W,
    evals: &[TransferEval],
    meta: &Provenance,
) -> Result<()> {
    preamble(&mut w, "freqresp", meta, &[])?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["omega", "re", "im", "abs"])?;
    for e in evals {
        out.write_record([
            num(e.s.im),
            num(e.value.re),
            num(e.value.im),
            num(e.magnitude()),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq::{frequency_response, ChainModel, EgoGains, HumanLink};

    fn meta() -> Provenance {
        Provenance {
            scenario_hash: "abc".into(),
        }
    }

    #[test]
    fn frequency_response_table() {
        let model = ChainModel::acc(EgoGains::default(), HumanLink::default(), 0);
        let evals = frequency_response(&model, &[0.0, 1.0]);
        let mut buf = Vec::new();
        write_frequency_response(&mut buf, &evals, &meta()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "# schema=1 table=freqresp scenario=abc");
        assert_eq!(lines[1], "omega,re,im,abs");
        assert_eq!(lines[2], "0,1,0,1");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn energy_matrix_layout() {
        let grid = EnergyGrid {
            beta: vec![0.5, 0.55],
            beta_b: vec![0.0, 0.01, 0.02],
            ego: vec![
                vec![Some(1.0), None, Some(3.0)],
                vec![Some(4.0), Some(5.0), Some(6.0)],
            ],
            tail: vec![vec![None; 3]; 2],
            tail_index: -10,
        };
        let mut buf = Vec::new();
        write_energy_grid(&mut buf, &grid, EnergyField::Ego, &meta()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[1], "beta\\beta_b,0,0.01,0.02");
        assert_eq!(lines[2], "0.5,1,,3");
        let json = energy_grid_json(&grid, 10, &meta());
        assert_eq!(json["resolution"], serde_json::json!([2, 3]));
        assert_eq!(json["grid"]["ego"][0][1], serde_json::Value::Null);
    }
}
