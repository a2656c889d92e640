//! SVG line charts drawn from result rows alone: one chart per metric, offered
//! load on the x axis, one line per scheme, seeds averaged.

use std::collections::BTreeMap;
use std::path::Path;

use plotters::prelude::*;

use crate::output::Row;
use crate::runner::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Throughput,
    EncodedFraction,
    DeliveryRatio,
    MeanDelay,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Throughput,
        Metric::EncodedFraction,
        Metric::DeliveryRatio,
        Metric::MeanDelay,
    ];

    pub fn file_stem(self) -> &'static str {
        match self {
            Metric::Throughput => "throughput",
            Metric::EncodedFraction => "encoded_fraction",
            Metric::DeliveryRatio => "delivery_ratio",
            Metric::MeanDelay => "mean_delay",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::Throughput => "Throughput (kb/s)",
            Metric::EncodedFraction => "Encoded transmissions (fraction)",
            Metric::DeliveryRatio => "Packet delivery ratio",
            Metric::MeanDelay => "Mean end-to-end delay (s)",
        }
    }

    fn value(self, r: &Row) -> Option<f64> {
        match self {
            Metric::Throughput => Some(r.throughput_kbps),
            Metric::EncodedFraction => Some(r.encoded_frac),
            Metric::DeliveryRatio => Some(r.pdr),
            Metric::MeanDelay => r.mean_delay_s,
        }
    }
}

/// Per scheme, `(offered_kbps, mean metric)` points in ascending load order.
/// Rows without a value (no delay measured) are left out of the mean.
pub fn series(rows: &[Row], metric: Metric) -> BTreeMap<String, Vec<(f64, f64)>> {
    let mut sums: BTreeMap<&str, BTreeMap<u64, (f64, usize)>> = BTreeMap::new();
    for r in rows {
        let Some(v) = metric.value(r) else { continue };
        // offered load is non-negative, so bit order is numeric order
        let e = sums
            .entry(&r.scheme)
            .or_default()
            .entry(r.offered_kbps.to_bits())
            .or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    sums.into_iter()
        .map(|(scheme, pts)| {
            let points = pts
                .into_iter()
                .map(|(x, (sum, n))| (f64::from_bits(x), sum / n as f64))
                .collect();
            (scheme.to_string(), points)
        })
        .collect()
}

fn color(i: usize) -> RGBColor {
    const PALETTE: [RGBColor; 4] = [
        RGBColor(31, 119, 180),
        RGBColor(214, 39, 40),
        RGBColor(44, 160, 44),
        RGBColor(148, 103, 189),
    ];
    PALETTE[i % PALETTE.len()]
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

/// Draws one chart to `path`.
pub fn draw(rows: &[Row], metric: Metric, path: &Path) -> Result<(), RunError> {
    let err = |e: &dyn std::fmt::Display| RunError::Chart {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let data = series(rows, metric);
    let points = data.values().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, 0.0f64, f64::MIN);
    for &(x, y) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        (x0, x1, y1) = (0.0, 1.0, 1.0);
    }
    let (x0, x1) = padded(x0, x1);
    let (_, y1) = padded(y0, y1);

    let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(metric.label(), ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(|e| err(&e))?;
    chart
        .configure_mesh()
        .x_desc("Offered load (kb/s)")
        .y_desc(metric.label())
        .draw()
        .map_err(|e| err(&e))?;
    for (i, (scheme, pts)) in data.iter().enumerate() {
        let c = color(i);
        chart
            .draw_series(LineSeries::new(pts.iter().copied(), c.stroke_width(2)))
            .map_err(|e| err(&e))?
            .label(scheme.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], c.stroke_width(2)));
        chart
            .draw_series(pts.iter().map(|&p| Circle::new(p, 3, c.filled())))
            .map_err(|e| err(&e))?;
    }
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE.mix(0.8))
        .draw()
        .map_err(|e| err(&e))?;
    root.present().map_err(|e| err(&e))?;
    Ok(())
}

/// One `<metric>.svg` per metric in `dir`.
pub fn write_charts(rows: &[Row], dir: &Path) -> Result<(), RunError> {
    for m in Metric::ALL {
        draw(rows, m, &dir.join(format!("{}.svg", m.file_stem())))?;
    }
    Ok(())
}
