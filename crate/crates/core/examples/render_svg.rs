//! Render a matrix CSV as an SVG heatmap. Without arguments, renders a
//! small made-up likelihood matrix.
//!
//! cargo run --release --example render_svg -- [matrix.csv] [accuracy|likelihood]

mod support;

use mlm_core::analysis::{read_grid_csv, Grid};
use mlm_core::report::{render_heatmap, ColorScale};

fn main() {
    let mut args = std::env::args().skip(1);
    let grid = match args.next() {
        Some(p) => read_grid_csv(p.as_ref()).unwrap(),
        None => {
            let values: Vec<f64> = (0..16)
                .map(|i| if i % 5 == 0 { f64::INFINITY } else { ((i * 7) % 11) as f64 / 10.0 })
                .collect();
            Grid::class_matrix(4, values).unwrap()
        }
    };
    let scale: ColorScale = args.next().map_or(ColorScale::Likelihood, |s| s.parse().unwrap());
    let svg = render_heatmap(&grid, scale, "example").unwrap();
    let out = support::scratch_dir().join("render_svg.svg");
    std::fs::write(&out, &svg).unwrap();
    println!("{} cells, {} bytes; wrote {}", grid.rows() * grid.cols(), svg.len(), out.display());
}
