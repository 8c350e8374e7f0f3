//! Minimal hand-rolled SVG plots (optional `--plots` output). Report
//! correctness never depends on these.

use crate::error::Result;
use crate::grid::Field;
use std::fmt::Write as _;
use std::path::Path;

const W: f64 = 720.0;
const H: f64 = 480.0;
const MARGIN: f64 = 50.0;

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let fx = (x - self.x_min) / (self.x_max - self.x_min);
        let fy = (y - self.y_min) / (self.y_max - self.y_min);
        (
            MARGIN + fx * (W - 2.0 * MARGIN),
            H - MARGIN - fy * (H - 2.0 * MARGIN),
        )
    }
}

fn open_svg() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    )
}

fn axes(s: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (x0, y0) = f.map(f.x_min, f.y_min);
    let (x1, y1) = f.map(f.x_max, f.y_max);
    let _ = write!(
        s,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"{}\" font-size=\"12\">{x_label}</text>\n\
         <text x=\"8\" y=\"{}\" font-size=\"12\">{y_label}</text>\n\
         <text x=\"{x0}\" y=\"{}\" font-size=\"10\">{:.3}</text>\n\
         <text x=\"{}\" y=\"{}\" font-size=\"10\">{:.3}</text>\n\
         <text x=\"10\" y=\"{y0}\" font-size=\"10\">{:.3}</text>\n\
         <text x=\"10\" y=\"{}\" font-size=\"10\">{:.3}</text>\n",
        (x0 + x1) / 2.0,
        H - 12.0,
        (y0 + y1) / 2.0,
        y0 + 16.0,
        f.x_min,
        x1 - 30.0,
        y0 + 16.0,
        f.x_max,
        f.y_min,
        y1 - 4.0,
        f.y_max,
    );
}

fn polyline(s: &mut String, f: &Frame, pts: &[(f64, f64)], color: &str) {
    let mut path = String::new();
    for (x, y) in pts {
        let (px, py) = f.map(*x, *y);
        let _ = write!(path, "{px:.2},{py:.2} ");
    }
    let _ = write!(
        s,
        "<polyline points=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n"
    );
}

/// 1-D solution plot: obstacle, solution, and the contact set strip.
pub fn plot_profile(path: &Path, u: &Field, phi: &Field, mask: &[bool]) -> Result<()> {
    let grid = u.grid;
    let xs: Vec<f64> = (0..grid.node_count()).map(|i| grid.position(i)[0]).collect();
    let y_max = u.max().max(phi.max()) * 1.1 + 1e-12;
    let y_min = phi.min().min(0.0) * 1.1 - 1e-12;
    let f = Frame {
        x_min: xs[0],
        x_max: *xs.last().unwrap(),
        y_min,
        y_max,
    };
    let mut s = open_svg();
    // contact strip
    for (i, &c) in mask.iter().enumerate() {
        if c {
            let (px, py) = f.map(xs[i], 0.0);
            let _ = write!(
                s,
                "<rect x=\"{:.2}\" y=\"{py}\" width=\"1.4\" height=\"6\" fill=\"#cc8800\"/>\n",
                px - 0.7
            );
        }
    }
    polyline(
        &mut s,
        &f,
        &xs.iter().zip(&phi.values).map(|(x, y)| (*x, *y)).collect::<Vec<_>>(),
        "#888888",
    );
    polyline(
        &mut s,
        &f,
        &xs.iter().zip(&u.values).map(|(x, y)| (*x, *y)).collect::<Vec<_>>(),
        "#1155cc",
    );
    axes(&mut s, &f, "x", "u, phi");
    s.push_str("</svg>\n");
    std::fs::write(path, s)?;
    Ok(())
}

/// Log-log growth fit: sup-ball samples and the fitted line.
pub fn plot_loglog(path: &Path, samples: &[(f64, f64)], slope: f64, c0: f64) -> Result<()> {
    if samples.len() < 2 {
        return Ok(());
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|(r, d)| (r.ln(), d.ln())).collect();
    let x_min = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x_max = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let y_min = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let y_max = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let f = Frame {
        x_min: x_min - 0.2,
        x_max: x_max + 0.2,
        y_min: y_min - 0.2,
        y_max: y_max + 0.2,
    };
    let mut s = open_svg();
    let line: Vec<(f64, f64)> = [x_min, x_max]
        .iter()
        .map(|x| (*x, c0.ln() + slope * x))
        .collect();
    polyline(&mut s, &f, &line, "#cc3333");
    for (x, y) in &pts {
        let (px, py) = f.map(*x, *y);
        let _ = write!(
            s,
            "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"3\" fill=\"#1155cc\"/>\n"
        );
    }
    axes(&mut s, &f, "log r", "log sup gap");
    let _ = write!(
        s,
        "<text x=\"{}\" y=\"{}\" font-size=\"12\">slope = {slope:.4}</text>\n",
        MARGIN + 10.0,
        MARGIN + 14.0
    );
    s.push_str("</svg>\n");
    std::fs::write(path, s)?;
    Ok(())
}

/// 2-D contact map, downsampled to at most 256 cells per axis.
pub fn plot_contact_map(path: &Path, grid: crate::grid::Grid, mask: &[bool]) -> Result<()> {
    let n = grid.nodes_per_axis;
    let stride = (n / 256).max(1);
    let cells = n / stride;
    let cell_px = (W.min(H) - 2.0 * MARGIN) / cells as f64;
    let mut s = open_svg();
    for cy in 0..cells {
        for cx in 0..cells {
            let mut any = false;
            'probe: for oy in 0..stride {
                for ox in 0..stride {
                    let ix = cx * stride + ox;
                    let iy = cy * stride + oy;
                    if ix < n && iy < n && mask[iy * n + ix] {
                        any = true;
                        break 'probe;
                    }
                }
            }
            if any {
                let _ = write!(
                    s,
                    "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{cell_px:.2}\" height=\"{cell_px:.2}\" fill=\"#cc8800\"/>\n",
                    MARGIN + cx as f64 * cell_px,
                    H - MARGIN - (cy as f64 + 1.0) * cell_px,
                );
            }
        }
    }
    let _ = write!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>\n",
        H - MARGIN - cells as f64 * cell_px,
        cells as f64 * cell_px,
        cells as f64 * cell_px,
    );
    s.push_str("</svg>\n");
    std::fs::write(path, s)?;
    Ok(())
}
