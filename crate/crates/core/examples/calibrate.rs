//! Fit per-level severities so accuracy falls linearly from level 1 to 10,
//! then print the schedule and the accuracy each level reached.
//!
//! cargo run --release --example calibrate -- [family ...]

mod support;

use mlm_core::data::Split;
use mlm_core::perturb::{calibrate_schedule, CalibrationTargets, Family};

fn main() {
    let families: Vec<Family> = std::env::args().skip(1).map(|a| a.parse().expect("family name")).collect();
    let families = if families.is_empty() { vec![Family::Brightness, Family::Fog, Family::GaussianNoise] } else { families };
    let params = support::model();
    let test = support::load(Split::Test);
    let targets = CalibrationTargets { subset_size: 1000, ..CalibrationTargets::default() };
    let cal = calibrate_schedule(&params, &test, &targets, &families, 0).unwrap();
    println!("clean subset accuracy {:.4}; {} evaluations", cal.clean_accuracy, cal.evaluations);
    for f in &families {
        let sev = cal.schedule.levels(*f).unwrap();
        let acc = &cal.achieved[f];
        println!("{}", f.name());
        for (p, (s, a)) in sev.iter().zip(acc).enumerate() {
            println!("  level {:>2}  severity {s:.4}  accuracy {a:.3}", p + 1);
        }
    }
    print!("{}", cal.schedule.to_toml());
}
