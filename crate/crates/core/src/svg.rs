//! Self-contained SVG heatmaps of a [`SweepGrid`].

use std::fmt::Write as _;

use crate::grid::SweepGrid;
use crate::viridis::VIRIDIS;

const CELL_AREA: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const BAR_WIDTH: f64 = 18.0;
const MASK_FILL: &str = "#d0d0d0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColorScale {
    #[default]
    Linear,
    /// log10 of the value; non-positive values are drawn with the lowest color.
    Log,
}

struct Range {
    lo: f64,
    hi: f64,
    scale: ColorScale,
}

impl Range {
    fn of(grid: &SweepGrid, scale: ColorScale) -> Self {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in grid.values.iter().flatten() {
            let t = match scale {
                ColorScale::Linear => *v,
                ColorScale::Log if *v > 0.0 => v.log10(),
                ColorScale::Log => continue,
            };
            lo = lo.min(t);
            hi = hi.max(t);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi <= lo {
            hi = lo + 1.0;
        }
        Self { lo, hi, scale }
    }

    fn color(&self, v: f64) -> [u8; 3] {
        let t = match self.scale {
            ColorScale::Linear => v,
            ColorScale::Log if v > 0.0 => v.log10(),
            ColorScale::Log => self.lo,
        };
        let u = ((t - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0);
        VIRIDIS[(u * 255.0).round() as usize]
    }

    fn label(&self, u: f64) -> String {
        let t = self.lo + u * (self.hi - self.lo);
        match self.scale {
            ColorScale::Linear => format!("{t:.3}"),
            ColorScale::Log => format!("1e{t:.1}"),
        }
    }
}

fn hex([r, g, b]: [u8; 3]) -> String {
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Position of an axis value in cell units (cell centers at `i + 0.5`).
fn locate(values: &[f64], v: f64) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => 0.5,
        n => {
            let j = values
                .windows(2)
                .position(|w| (w[0] <= v && v <= w[1]) || (w[1] <= v && v <= w[0]))
                .unwrap_or(if (v - values[0]).abs() < (v - values[n - 1]).abs() {
                    0
                } else {
                    n - 2
                });
            let (a, b) = (values[j], values[j + 1]);
            let t = if b == a { 0.0 } else { (v - a) / (b - a) };
            j as f64 + t + 0.5
        }
    }
}

/// Renders the grid with rows running bottom to top and the overlay as markers.
pub fn render(grid: &SweepGrid, scale: ColorScale) -> String {
    let (nr, nc) = grid.shape();
    let cw = CELL_AREA / nc.max(1) as f64;
    let ch = CELL_AREA / nr.max(1) as f64;
    let range = Range::of(grid, scale);
    let width = MARGIN_LEFT + CELL_AREA + 30.0 + BAR_WIDTH + 70.0;
    let height = MARGIN_TOP + CELL_AREA + MARGIN_BOTTOM;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{} ({})</text>"#,
        MARGIN_LEFT + CELL_AREA / 2.0,
        escape(&grid.title),
        escape(&grid.quantity)
    );

    for i in 0..nr {
        let y = MARGIN_TOP + (nr - 1 - i) as f64 * ch;
        for j in 0..nc {
            let x = MARGIN_LEFT + j as f64 * cw;
            let fill = match grid.get(i, j) {
                Some(v) => hex(range.color(v)),
                None => MASK_FILL.to_string(),
            };
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                cw + 0.05,
                ch + 0.05
            );
        }
    }

    if !grid.overlay.is_empty() {
        let _ = writeln!(s, r#"<g fill="none" stroke="white" stroke-width="1.5">"#);
        for &(cx, ry) in &grid.overlay {
            let x = MARGIN_LEFT + locate(&grid.cols.values, cx) * cw;
            let y = MARGIN_TOP + CELL_AREA - locate(&grid.rows.values, ry) * ch;
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2"/>"#);
        }
        let _ = writeln!(s, "</g>");
    }

    // axes: first, middle and last tick
    let ticks = |n: usize| -> Vec<usize> {
        let mut t = vec![0, n / 2, n.saturating_sub(1)];
        t.dedup();
        t
    };
    for j in ticks(nc) {
        let x = MARGIN_LEFT + (j as f64 + 0.5) * cw;
        let label = grid
            .cols
            .labels
            .as_ref()
            .map_or_else(|| format!("{:.3}", grid.cols.values[j]), |l| l[j].clone());
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            MARGIN_TOP + CELL_AREA + 15.0,
            escape(&label)
        );
    }
    for i in ticks(nr) {
        let y = MARGIN_TOP + CELL_AREA - (i as f64 + 0.5) * ch;
        let label = grid
            .rows
            .labels
            .as_ref()
            .map_or_else(|| format!("{:.3}", grid.rows.values[i]), |l| l[i].clone());
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y:.2}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            MARGIN_LEFT - 6.0,
            escape(&label)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + CELL_AREA / 2.0,
        MARGIN_TOP + CELL_AREA + 40.0,
        escape(&grid.cols.name)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        MARGIN_TOP + CELL_AREA / 2.0,
        escape(&grid.rows.name)
    );

    // colorbar
    let bx = MARGIN_LEFT + CELL_AREA + 30.0;
    let steps = 64;
    for k in 0..steps {
        let u = k as f64 / (steps - 1) as f64;
        let y = MARGIN_TOP + CELL_AREA * (1.0 - (k + 1) as f64 / steps as f64);
        let c = VIRIDIS[(u * 255.0).round() as usize];
        let _ = writeln!(
            s,
            r#"<rect x="{bx}" y="{y:.2}" width="{BAR_WIDTH}" height="{:.2}" fill="{}"/>"#,
            CELL_AREA / steps as f64 + 0.05,
            hex(c)
        );
    }
    for u in [0.0, 0.5, 1.0] {
        let y = MARGIN_TOP + CELL_AREA * (1.0 - u);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y:.2}" dominant-baseline="middle">{}</text>"#,
            bx + BAR_WIDTH + 4.0,
            range.label(u)
        );
    }
    s.push_str("</svg>\n");
    s
}
