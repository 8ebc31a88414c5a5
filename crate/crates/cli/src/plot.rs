use std::ops::Range;
use std::path::Path;

use plotters::coord::ranged1d::{AsRangedCoord, Ranged, ValueFormatter};
use plotters::prelude::*;

use crate::args::PlotArgs;
use crate::output::{CliError, CliResult};

/// A CSV file loaded column-wise.
#[derive(Debug)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> CliResult<Table> {
        let name = path.display();
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| CliError::usage(format!("--input: cannot read {name}: {e}")))?;
        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| CliError::usage(format!("--input: {name}: {e}")))?
            .iter()
            .map(|h| h.trim().to_owned())
            .collect();
        let mut columns = vec![Vec::new(); headers.len()];
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| CliError::usage(format!("--input: {name}: {e}")))?;
            for (col, cell) in columns.iter_mut().zip(record.iter()) {
                let v = cell.trim().parse::<f64>().map_err(|_| {
                    CliError::usage(format!(
                        "--input: {name} row {}: `{cell}` is not a number",
                        line + 2
                    ))
                })?;
                col.push(v);
            }
        }
        Ok(Table { headers, columns })
    }

    pub fn column(&self, name: &str) -> CliResult<&[f64]> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| {
                CliError::usage(format!(
                    "column `{name}` not found (available: {})",
                    self.headers.join(", ")
                ))
            })
    }
}

struct Curve {
    label: String,
    points: Vec<(f64, f64)>,
}

fn curves(table: &Table, args: &PlotArgs) -> CliResult<Vec<Curve>> {
    let x = table.column(&args.x)?;
    let groups: Vec<(Option<f64>, Vec<usize>)> = match &args.group_by {
        None => vec![(None, (0..x.len()).collect())],
        Some(name) => {
            let key = table.column(name)?;
            let mut groups: Vec<(Option<f64>, Vec<usize>)> = Vec::new();
            for (i, k) in key.iter().enumerate() {
                match groups.iter_mut().find(|(g, _)| *g == Some(*k)) {
                    Some((_, rows)) => rows.push(i),
                    None => groups.push((Some(*k), vec![i])),
                }
            }
            groups
        }
    };
    let mut out = Vec::new();
    for name in &args.y {
        let y = table.column(name)?;
        for (key, rows) in &groups {
            let label = match (key, &args.group_by) {
                (Some(k), Some(g)) => format!("{name} ({g} = {k})"),
                _ => name.clone(),
            };
            let points = rows
                .iter()
                .map(|&i| (x[i], y[i]))
                .filter(|(x, y)| x.is_finite() && y.is_finite() && (!args.log_x || *x > 0.0))
                .collect();
            out.push(Curve { label, points });
        }
    }
    Ok(out)
}

fn padded(lo: f64, hi: f64) -> Range<f64> {
    let span = hi - lo;
    let pad = if span > 0.0 {
        0.03 * span
    } else {
        0.5 * lo.abs().max(1.0)
    };
    (lo - pad)..(hi + pad)
}

fn draw<X>(
    area: &DrawingArea<SVGBackend<'_>, plotters::coord::Shift>,
    x_range: X,
    y_range: Range<f64>,
    args: &PlotArgs,
    curves: &[Curve],
) -> Result<(), String>
where
    X: AsRangedCoord<Value = f64>,
    X::CoordDescType: Ranged<ValueType = f64> + ValueFormatter<f64>,
{
    area.fill(&WHITE).map_err(|e| e.to_string())?;
    let mut builder = ChartBuilder::on(area);
    builder
        .margin(16)
        .x_label_area_size(48)
        .y_label_area_size(72);
    if let Some(title) = &args.title {
        builder.caption(title, ("sans-serif", 20));
    }
    let mut chart = builder
        .build_cartesian_2d(x_range, y_range)
        .map_err(|e| e.to_string())?;
    chart
        .configure_mesh()
        .x_desc(args.x_label.clone().unwrap_or_else(|| args.x.clone()))
        .y_desc(args.y_label.clone().unwrap_or_else(|| args.y.join(", ")))
        .draw()
        .map_err(|e| e.to_string())?;
    for (k, curve) in curves.iter().enumerate() {
        let color = Palette99::pick(k).to_rgba();
        chart
            .draw_series(LineSeries::new(
                curve.points.iter().copied(),
                color.stroke_width(1),
            ))
            .map_err(|e| e.to_string())?
            .label(curve.label.clone())
            .legend(move |(x, y)| PathElement::new([(x, y), (x + 18, y)], color.stroke_width(2)));
    }
    if curves.len() > 1 {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.85))
            .border_style(BLACK)
            .draw()
            .map_err(|e| e.to_string())?;
    }
    area.present().map_err(|e| e.to_string())?;
    Ok(())
}

/// Renders the requested columns to an SVG document.
pub fn render(table: &Table, args: &PlotArgs) -> CliResult<String> {
    let curves = curves(table, args)?;
    let all = || curves.iter().flat_map(|c| c.points.iter());
    if all().next().is_none() {
        return Err(CliError::usage(
            "nothing to plot: no finite points (log-x drops x <= 0)",
        ));
    }
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in all() {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let y_range = padded(y0, y1);
    let mut svg = String::new();
    {
        let area = SVGBackend::with_string(&mut svg, (args.width, args.height)).into_drawing_area();
        let result = if args.log_x {
            let hi = if x1 > x0 { x1 } else { x0 * 10.0 };
            draw(&area, (x0..hi).log_scale(), y_range, args, &curves)
        } else {
            draw(&area, padded(x0, x1), y_range, args, &curves)
        };
        result.map_err(|e| CliError::usage(format!("plot rendering failed: {e}")))?;
    }
    Ok(svg)
}
