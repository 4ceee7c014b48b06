//! Every corruption family at every level for one test digit, written as a
//! PGM contact sheet (rows are families, columns are levels 1 to 10).
//!
//! cargo run --release --example perturb_gallery -- [sample_id] [schedule.toml]

mod support;

use std::io::Write;

use mlm_core::data::Split;
use mlm_core::perturb::{regenerate_image, Family, Level, Schedule};

const CELL: usize = 30;

fn main() {
    let mut args = std::env::args().skip(1);
    let id: u64 = args.next().map_or(0, |a| a.parse().expect("sample id"));
    let schedule = args.next().map_or_else(Schedule::linear, |p| Schedule::read(p.as_ref()).unwrap());
    let test = support::load(Split::Test);
    let image = &test.images[id as usize];

    let (w, h) = (CELL * 11, CELL * Family::ALL.len());
    let mut sheet = vec![255u8; w * h];
    let mut blit = |img: &mlm_core::data::ImageTensor, row: usize, col: usize| {
        for y in 0..28 {
            for x in 0..28 {
                let v = (255.0 * (1.0 - img.get(y, x))).round() as u8;
                sheet[(row * CELL + 1 + y) * w + col * CELL + 1 + x] = v;
            }
        }
    };
    for (row, &family) in Family::ALL.iter().enumerate() {
        blit(image, row, 0);
        let mut means = Vec::new();
        for level in Level::all() {
            let severity = schedule.severity(family, level).unwrap();
            let img = regenerate_image(image, family, level, severity, 0, id).unwrap();
            means.push(format!("{:.2}", img.mean()));
            blit(&img, row, level.get() as usize);
        }
        println!("{:<16} mean ink {}", family.name(), means.join(" "));
    }
    let path = support::scratch_dir().join(format!("gallery_{id}.pgm"));
    let mut f = std::fs::File::create(&path).unwrap();
    write!(f, "P5\n{w} {h}\n255\n").unwrap();
    f.write_all(&sheet).unwrap();
    println!("label {}; wrote {}", test.labels[id as usize], path.display());
}
