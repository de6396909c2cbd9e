//! Self-contained SVG rendering of experiment summaries: one median line
//! per method with order-statistic bands, gaps where the median is
//! infinite, and band tops clipped to the frame when unbounded.

use super::{ExperimentRecord, Method, SummaryRow};

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 660.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 460.0;

fn color(method: Method) -> &'static str {
    match method {
        Method::Coreset => "#d62728",
        Method::Uniform => "#1f77b4",
    }
}

struct Scale {
    k_min: f64,
    k_max: f64,
    y_min: f64,
    y_max: f64,
    log_y: bool,
}

impl Scale {
    fn x(&self, k: f64) -> f64 {
        if self.k_max == self.k_min {
            0.5 * (LEFT + RIGHT)
        } else {
            LEFT + (RIGHT - LEFT) * (k - self.k_min) / (self.k_max - self.k_min)
        }
    }

    fn y(&self, v: f64) -> f64 {
        if !v.is_finite() {
            return TOP;
        }
        let (value, lo, hi) = if self.log_y {
            (v.ln(), self.y_min.ln(), self.y_max.ln())
        } else {
            (v, self.y_min, self.y_max)
        };
        if hi == lo {
            return 0.5 * (TOP + BOTTOM);
        }
        let t = ((value - lo) / (hi - lo)).clamp(0.0, 1.0);
        BOTTOM - (BOTTOM - TOP) * t
    }
}

/// Render a summary as a line chart with shaded bands (linear y axis).
pub fn emit_plot(summary: &[SummaryRow], records: &[ExperimentRecord]) -> String {
    emit_plot_scaled(summary, records, false)
}

/// Same chart with an optional logarithmic ratio axis.
pub fn emit_plot_scaled(
    summary: &[SummaryRow],
    records: &[ExperimentRecord],
    log_y: bool,
) -> String {
    assert!(!summary.is_empty(), "plot needs a nonempty summary");
    let k_min = summary.iter().map(|r| r.k).min().unwrap() as f64;
    let k_max = summary.iter().map(|r| r.k).max().unwrap() as f64;
    let finite: Vec<f64> = summary
        .iter()
        .flat_map(|r| [r.median, r.lo, r.hi])
        .filter(|v| v.is_finite())
        .collect();
    let mut y_min = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let mut y_max = finite.iter().copied().fold(1.0f64, f64::max);
    if !y_min.is_finite() {
        y_min = 1.0;
        y_max = 2.0;
    }
    let pad = 0.05 * (y_max - y_min).max(0.02);
    y_min = (y_min - pad).max(if log_y { 1e-3 } else { f64::NEG_INFINITY });
    y_max += pad;
    let scale = Scale {
        k_min,
        k_max,
        y_min,
        y_max,
        log_y,
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#444\"/>\n",
        RIGHT - LEFT,
        BOTTOM - TOP
    ));

    // Axis ticks.
    let mut ks: Vec<usize> = summary.iter().map(|r| r.k).collect();
    ks.sort_unstable();
    ks.dedup();
    let stride = ks.len().div_ceil(13).max(1);
    for (idx, &k) in ks.iter().enumerate() {
        if idx % stride != 0 && idx + 1 != ks.len() {
            continue;
        }
        let x = scale.x(k as f64);
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{BOTTOM}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#444\"/>\n",
            BOTTOM + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">{k}</text>\n",
            BOTTOM + 20.0
        ));
    }
    for t in 0..=4 {
        let frac = t as f64 / 4.0;
        let value = if log_y {
            (y_min.ln() + frac * (y_max.ln() - y_min.ln())).exp()
        } else {
            y_min + frac * (y_max - y_min)
        };
        let y = scale.y(value);
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{LEFT}\" y2=\"{y:.2}\" stroke=\"#444\"/>\n",
            LEFT - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{value:.3}</text>\n",
            LEFT - 9.0,
            y + 4.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\">reduced size k</text>\n",
        0.5 * (LEFT + RIGHT),
        BOTTOM + 42.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{:.2}\" font-size=\"13\" transform=\"rotate(-90 18 {:.2})\" text-anchor=\"middle\">approximation ratio</text>\n",
        0.5 * (TOP + BOTTOM),
        0.5 * (TOP + BOTTOM)
    ));

    let mut methods: Vec<Method> = summary.iter().map(|r| r.method).collect();
    methods.sort();
    methods.dedup();

    for &method in &methods {
        let mut rows: Vec<&SummaryRow> = summary.iter().filter(|r| r.method == method).collect();
        rows.sort_by_key(|r| r.k);

        // Bands over contiguous runs with a finite lower edge; unbounded
        // tops are clipped to the frame.
        let mut run: Vec<&SummaryRow> = Vec::new();
        let flush_band = |run: &mut Vec<&SummaryRow>, svg: &mut String| {
            if run.len() >= 2 {
                let mut points = String::new();
                for r in run.iter() {
                    points.push_str(&format!("{:.2},{:.2} ", scale.x(r.k as f64), scale.y(r.hi)));
                }
                for r in run.iter().rev() {
                    points.push_str(&format!("{:.2},{:.2} ", scale.x(r.k as f64), scale.y(r.lo)));
                }
                svg.push_str(&format!(
                    "<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.18\" stroke=\"none\"/>\n",
                    points.trim_end(),
                    color(method)
                ));
            }
            run.clear();
        };
        for r in &rows {
            if r.lo.is_finite() {
                run.push(r);
            } else {
                flush_band(&mut run, &mut svg);
            }
        }
        flush_band(&mut run, &mut svg);

        // Median polyline with gaps at infinite medians.
        let mut segment: Vec<String> = Vec::new();
        let flush_line = |segment: &mut Vec<String>, svg: &mut String| {
            if segment.len() >= 2 {
                svg.push_str(&format!(
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                    segment.join(" "),
                    color(method)
                ));
            } else if segment.len() == 1 {
                let (x, y) = segment[0].split_once(',').unwrap();
                svg.push_str(&format!(
                    "<circle cx=\"{x}\" cy=\"{y}\" r=\"3\" fill=\"{}\"/>\n",
                    color(method)
                ));
            }
            segment.clear();
        };
        for r in &rows {
            if r.median.is_finite() {
                segment.push(format!(
                    "{:.2},{:.2}",
                    scale.x(r.k as f64),
                    scale.y(r.median)
                ));
            } else {
                flush_line(&mut segment, &mut svg);
            }
        }
        flush_line(&mut segment, &mut svg);
    }

    // Legend with record counts.
    for (slot, &method) in methods.iter().enumerate() {
        let count = records.iter().filter(|r| r.method == method).count();
        let y = TOP + 18.0 + 22.0 * slot as f64;
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{}\" stroke-width=\"3\"/>\n",
            RIGHT + 14.0,
            RIGHT + 44.0,
            color(method)
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\">{method} ({count} records)</text>\n",
            RIGHT + 50.0,
            y + 4.0
        ));
    }

    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_summary() -> (Vec<SummaryRow>, Vec<ExperimentRecord>) {
        let summary = vec![
            SummaryRow {
                method: Method::Coreset,
                k: 50,
                median: 1.2,
                lo: 1.1,
                hi: 1.4,
                feasible_frac: 1.0,
            },
            SummaryRow {
                method: Method::Coreset,
                k: 100,
                median: 1.05,
                lo: 1.02,
                hi: 1.1,
                feasible_frac: 1.0,
            },
            SummaryRow {
                method: Method::Uniform,
                k: 50,
                median: f64::INFINITY,
                lo: 2.0,
                hi: f64::INFINITY,
                feasible_frac: 0.3,
            },
            SummaryRow {
                method: Method::Uniform,
                k: 100,
                median: 1.5,
                lo: 1.3,
                hi: f64::INFINITY,
                feasible_frac: 0.8,
            },
        ];
        let mut records = Vec::new();
        for row in &summary {
            for rep in 0..4usize {
                records.push(ExperimentRecord {
                    method: row.method,
                    k: row.k,
                    rep,
                    seed: rep as u64,
                    feasible: true,
                    ratio: 1.0,
                    runtime_ms: 0.0,
                    k_actual: row.k,
                });
            }
        }
        (summary, records)
    }

    #[test]
    fn single_point_renders_marker_and_band() {
        let summary = vec![SummaryRow {
            method: Method::Coreset,
            k: 50,
            median: 1.2,
            lo: 1.1,
            hi: 1.3,
            feasible_frac: 1.0,
        }];
        let records = vec![ExperimentRecord {
            method: Method::Coreset,
            k: 50,
            rep: 0,
            seed: 0,
            feasible: true,
            ratio: 1.2,
            runtime_ms: 0.0,
            k_actual: 50,
        }];
        let svg = emit_plot(&summary, &records);
        assert!(svg.contains("<circle"));
        assert!(svg.contains("coreset (1 records)"));
    }

    #[test]
    fn legend_counts_match_records() {
        let (summary, records) = sample_summary();
        let svg = emit_plot(&summary, &records);
        assert!(svg.contains("coreset (8 records)"));
        assert!(svg.contains("uniform (8 records)"));
    }

    #[test]
    fn gap_rendering_matches_golden_fixture() {
        let (summary, records) = sample_summary();
        let svg = emit_plot(&summary, &records);
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("tests/golden/plot_small.svg");
        if !path.exists() {
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            std::fs::write(&path, &svg).unwrap();
        }
        let golden = std::fs::read_to_string(&path).unwrap();
        assert_eq!(svg, golden, "SVG output deviates from the golden fixture");
        // The infinite uniform median at k=50 splits the blue line: the
        // remaining finite point renders as a circle marker.
        assert!(svg.contains("<circle"));
    }

    #[test]
    fn log_axis_stays_finite() {
        let (summary, records) = sample_summary();
        let svg = emit_plot_scaled(&summary, &records, true);
        assert!(!svg.contains("NaN"));
        assert!(svg.contains("</svg>"));
    }
}
