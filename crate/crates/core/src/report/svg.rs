use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::analysis::{read_grid_csv, Grid};
use crate::error::{Error, Result};

/// Colour ramp for [`render_heatmap`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColorScale {
    /// Blue for low values through to red for high ones, over `[0, 1]`.
    Accuracy,
    /// Pale yellow for low values through to dark blue for high ones,
    /// stretched over the finite range of the data.
    Likelihood,
}

impl FromStr for ColorScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "accuracy" => Ok(Self::Accuracy),
            "likelihood" => Ok(Self::Likelihood),
            other => Err(Error::Config(format!("unknown colour scale {other:?} (accuracy|likelihood)"))),
        }
    }
}

type Rgb = [u8; 3];

impl ColorScale {
    fn stops(self) -> (Rgb, Rgb) {
        match self {
            Self::Accuracy => ([33, 102, 172], [178, 24, 43]),
            Self::Likelihood => ([255, 255, 204], [8, 29, 88]),
        }
    }

    /// Colour at `t` in `[0, 1]`.
    pub fn color(self, t: f64) -> Rgb {
        let (lo, hi) = self.stops();
        let t = t.clamp(0.0, 1.0);
        std::array::from_fn(|i| (lo[i] as f64 + (hi[i] as f64 - lo[i] as f64) * t).round() as u8)
    }
}

/// Rec. 709 luma of an sRGB colour.
pub fn luma(c: Rgb) -> f64 {
    0.2126 * c[0] as f64 + 0.7152 * c[1] as f64 + 0.0722 * c[2] as f64
}

const CELL_W: usize = 56;
const CELL_H: usize = 32;
const LEFT: usize = 120;
const TOP: usize = 56;
const MISSING: &str = "#d9d9d9";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn label(v: f64) -> String {
    if !v.is_finite() {
        "\u{2013}".to_string()
    } else if v == v.round() && v.abs() < 1e9 {
        format!("{v:.0}")
    } else if v.abs() >= 0.001 {
        format!("{v:.3}")
    } else {
        format!("{v:.1e}")
    }
}

/// Standalone SVG of `grid`: one rectangle and one value label per cell,
/// row and column labels, and a title.
pub fn render_heatmap(grid: &Grid, scale: ColorScale, title: &str) -> Result<String> {
    if grid.rows() == 0 || grid.cols() == 0 {
        return Err(Error::MalformedMatrix("nothing to render".into()));
    }
    let (lo, hi) = match scale {
        ColorScale::Accuracy => (0.0, 1.0),
        ColorScale::Likelihood => {
            let finite = grid.values.iter().copied().filter(|v| v.is_finite());
            let lo = finite.clone().fold(f64::INFINITY, f64::min);
            let hi = finite.fold(f64::NEG_INFINITY, f64::max);
            if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) }
        }
    };
    let span = if hi > lo { hi - lo } else { 1.0 };
    let width = LEFT + grid.cols() * CELL_W + 16;
    let height = TOP + grid.rows() * CELL_H + 16;
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    )
    .unwrap();
    writeln!(svg, r##"<rect width="{width}" height="{height}" fill="#ffffff"/>"##).unwrap();
    writeln!(svg, r#"<text x="{}" y="18" font-size="14" text-anchor="middle">{}</text>"#, width / 2, escape(title)).unwrap();
    writeln!(svg, r#"<text x="8" y="{}" font-size="11" font-style="italic">{}</text>"#, TOP - 8, escape(&grid.corner)).unwrap();
    for (c, l) in grid.col_labels.iter().enumerate() {
        let x = LEFT + c * CELL_W + CELL_W / 2;
        writeln!(svg, r#"<text class="axis" x="{x}" y="{}" font-size="11" text-anchor="middle">{}</text>"#, TOP - 8, escape(l)).unwrap();
    }
    for (r, l) in grid.row_labels.iter().enumerate() {
        let y = TOP + r * CELL_H + CELL_H / 2 + 4;
        writeln!(svg, r#"<text class="axis" x="{}" y="{y}" font-size="11" text-anchor="end">{}</text>"#, LEFT - 6, escape(l)).unwrap();
    }
    for r in 0..grid.rows() {
        for c in 0..grid.cols() {
            let v = grid.get(r, c);
            let (x, y) = (LEFT + c * CELL_W, TOP + r * CELL_H);
            let (fill, ink) = if v.is_finite() {
                let rgb = scale.color((v - lo) / span);
                let ink = if luma(rgb) < 128.0 { "#ffffff" } else { "#000000" };
                (format!("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2]), ink)
            } else {
                (MISSING.to_string(), "#000000")
            };
            writeln!(svg, r##"<rect class="cell" x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="{fill}" stroke="#ffffff"/>"##).unwrap();
            writeln!(
                svg,
                r#"<text class="value" x="{}" y="{}" font-size="10" text-anchor="middle" fill="{ink}">{}</text>"#,
                x + CELL_W / 2,
                y + CELL_H / 2 + 4,
                label(v)
            )
            .unwrap();
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Render a matrix CSV file to an SVG file.
pub fn render_heatmap_file(matrix: &Path, scale: ColorScale, out: &Path) -> Result<()> {
    let grid = read_grid_csv(matrix)?;
    let title = matrix.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let svg = render_heatmap(&grid, scale, &title)?;
    std::fs::write(out, svg).map_err(|e| Error::io(out, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fills(svg: &str) -> Vec<Rgb> {
        svg.lines()
            .filter(|l| l.contains(r#"class="cell""#))
            .map(|l| {
                let hex = &l[l.find("fill=\"#").unwrap() + 7..][..6];
                std::array::from_fn(|i| u8::from_str_radix(&hex[i * 2..i * 2 + 2], 16).unwrap())
            })
            .collect()
    }

    #[test]
    fn two_by_two_structure() {
        let g = Grid::class_matrix(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let svg = render_heatmap(&g, ColorScale::Accuracy, "t").unwrap();
        assert_eq!(svg.matches(r#"class="cell""#).count(), 4);
        assert_eq!(svg.matches(r#"class="value""#).count(), 4);
        for v in ["0.100", "0.200", "0.300", "0.400"] {
            assert!(svg.contains(&format!(">{v}</text>")));
        }
    }

    #[test]
    fn luminance_tracks_value() {
        let vals: Vec<f64> = (0..10).map(|i| i as f64 / 9.0).collect();
        let g = Grid::new("r", vec!["a".into()], (0..10).map(|i| i.to_string()).collect(), vals).unwrap();
        for scale in [ColorScale::Accuracy, ColorScale::Likelihood] {
            let lum: Vec<f64> = fills(&render_heatmap(&g, scale, "m").unwrap()).into_iter().map(luma).collect();
            assert!(lum.windows(2).all(|w| w[1] <= w[0]), "{scale:?}: {lum:?}");
            assert!(lum[0] > lum[9]);
        }
        let red_high = ColorScale::Accuracy.color(1.0);
        assert!(red_high[0] > red_high[2]);
        let blue_low = ColorScale::Accuracy.color(0.0);
        assert!(blue_low[2] > blue_low[0]);
    }

    #[test]
    fn family_axes() {
        let fams: Vec<String> = crate::perturb::Family::ALL.iter().map(|f| f.name().to_string()).collect();
        let g = Grid::new("family", fams.clone(), (1..=10).map(|l| l.to_string()).collect(), vec![0.5; 120]).unwrap();
        let svg = render_heatmap(&g, ColorScale::Accuracy, "heatmap").unwrap();
        assert_eq!(svg.matches(r#"class="cell""#).count(), 120);
        for f in fams {
            assert!(svg.contains(&format!(">{f}</text>")));
        }
        assert_eq!(svg.matches(r#"class="axis""#).count(), 22);
    }

    #[test]
    fn infinite_diagonal_is_grey() {
        let g = Grid::class_matrix(2, vec![f64::INFINITY, 0.5, 0.25, f64::INFINITY]).unwrap();
        let svg = render_heatmap(&g, ColorScale::Likelihood, "d").unwrap();
        assert_eq!(svg.matches(MISSING).count(), 2);
    }

    #[test]
    fn bad_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(&p, "x,0\n0,zz\n").unwrap();
        assert!(matches!(render_heatmap_file(&p, ColorScale::Accuracy, &dir.path().join("o.svg")), Err(Error::MalformedMatrix(_))));
    }
}
