//! Minimal SVG rendering of stability charts: shaded cells, boundary polylines, axes.

use svg::node::element::{Group, Line, Polyline, Rectangle, Text};
use svg::Document;

use vring::stability::boundaries::BoundaryKind;
use vring::stability::chart::{CellClass, StabilityChart};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 50.0;

fn fill(class: CellClass) -> &'static str {
    match class {
        CellClass::PlantUnstable => "#ffffff",
        CellClass::StringUnstable => "#d9d9d9",
        CellClass::StringStable => "#8fbc8f",
        CellClass::Indeterminate => "#f4a582",
    }
}

fn stroke(kind: BoundaryKind) -> (&'static str, f64) {
    match kind {
        BoundaryKind::PlantS0 | BoundaryKind::PlantVehicle | BoundaryKind::PlantRing => {
            ("#000000", 1.5)
        }
        BoundaryKind::StringOmega0 => ("#1f4e9c", 1.5),
        BoundaryKind::StringOmegaK => ("#9ab3d5", 0.3),
        BoundaryKind::Envelope => ("#1f4e9c", 2.0),
        BoundaryKind::Ring => ("#b2182b", 1.0),
    }
}

fn edges(centers: &[f64]) -> (f64, f64, f64) {
    let d = if centers.len() > 1 {
        centers[1] - centers[0]
    } else {
        1.0
    };
    (
        centers[0] - 0.5 * d,
        centers[centers.len() - 1] + 0.5 * d,
        d,
    )
}

pub fn render_chart(chart: &StabilityChart) -> String {
    let (x0, x1, dx) = edges(&chart.x);
    let (y0, y1, dy) = edges(&chart.y);
    let (pw, ph) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * ph;

    let mut cells = Group::new()
        .set("id", "cells")
        .set("shape-rendering", "crispEdges");
    for (iy, y) in chart.y.iter().enumerate() {
        for (ix, x) in chart.x.iter().enumerate() {
            let class = chart.class_at(ix, iy);
            cells = cells.add(
                Rectangle::new()
                    .set("x", px(x - 0.5 * dx))
                    .set("y", py(y + 0.5 * dy))
                    .set("width", pw * dx / (x1 - x0))
                    .set("height", ph * dy / (y1 - y0))
                    .set("fill", fill(class))
                    .set("class", format!("cell-{}", class.code())),
            );
        }
    }

    let inside = |x: f64, y: f64| x >= x0 && x <= x1 && y >= y0 && y <= y1;
    let mut lines: Vec<Polyline> = Vec::new();
    for c in &chart.curves {
        let (color, width) = stroke(c.kind);
        let mut flush = |run: &mut Vec<String>| {
            if run.len() > 1 {
                lines.push(
                    Polyline::new()
                        .set("points", run.join(" "))
                        .set("stroke", color)
                        .set("stroke-width", width)
                        .set("class", c.kind.as_str()),
                );
            }
            run.clear();
        };
        for seg in c.segments() {
            // Split at window exits so off-chart excursions are not drawn.
            let mut run = Vec::new();
            for p in seg {
                if inside(p.x, p.y) {
                    run.push(format!("{:.2},{:.2}", px(p.x), py(p.y)));
                } else {
                    flush(&mut run);
                }
            }
            flush(&mut run);
        }
    }
    let curves = lines.into_iter().fold(
        Group::new().set("id", "curves").set("fill", "none"),
        Group::add,
    );

    let axis = |a: (f64, f64), b: (f64, f64)| {
        Line::new()
            .set("x1", a.0)
            .set("y1", a.1)
            .set("x2", b.0)
            .set("y2", b.1)
            .set("stroke", "#000000")
    };
    let label = |x: f64, y: f64, anchor: &str, text: String| {
        Text::new(text)
            .set("x", x)
            .set("y", y)
            .set("font-size", 12)
            .set("font-family", "sans-serif")
            .set("text-anchor", anchor.to_string())
    };
    let axes = Group::new()
        .set("id", "axes")
        .add(axis(
            (MARGIN, HEIGHT - MARGIN),
            (WIDTH - MARGIN, HEIGHT - MARGIN),
        ))
        .add(axis((MARGIN, HEIGHT - MARGIN), (MARGIN, MARGIN)))
        .add(label(
            MARGIN,
            HEIGHT - MARGIN + 16.0,
            "middle",
            format!("{x0:.2}"),
        ))
        .add(label(
            WIDTH - MARGIN,
            HEIGHT - MARGIN + 16.0,
            "middle",
            format!("{x1:.2}"),
        ))
        .add(label(
            WIDTH / 2.0,
            HEIGHT - 12.0,
            "middle",
            "beta [1/s]".into(),
        ))
        .add(label(
            MARGIN - 6.0,
            HEIGHT - MARGIN,
            "end",
            format!("{y0:.2}"),
        ))
        .add(label(MARGIN - 6.0, MARGIN + 4.0, "end", format!("{y1:.2}")))
        .add(label(
            14.0,
            HEIGHT / 2.0,
            "middle",
            format!("{} [1/s]", chart.plane.y_name()),
        ));

    Document::new()
        .set("viewBox", (0, 0, WIDTH, HEIGHT))
        .set("width", WIDTH)
        .set("height", HEIGHT)
        .add(cells)
        .add(curves)
        .add(axes)
        .to_string()
}
