//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when a hard criterion fails.
//!
//! MNIST is read from `$MNIST_DIR`, falling back to `data/mnist` in the
//! workspace root. Work files go under cargo's per-target temp directory.

#[path = "common/mod.rs"]
mod common;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use mlm_core::analysis::{mlm, nearest_distance_matrix, read_grid_csv, stability, confusion_matrix, LikelihoodMatrix, Provenance};
use mlm_core::clustering::{lloyd, Centroids, KMeansOptions};
use mlm_core::data::{read_records, ImageTensor, PredictionRecord};
use mlm_core::perturb::{kernels::corrupt, max_severity, Family};
use mlm_core::report::{run_pipeline, sha256_file, PipelineSummary, RunConfig, MANIFEST_NAME, PARTIAL_SUFFIX};
use mlm_core::rng::{derive_seed, seeded_rng, unit_f64, below};

struct Verdict {
    id: u32,
    name: &'static str,
    pass: bool,
    soft: bool,
    detail: String,
}

fn verdict(id: u32, name: &'static str, pass: bool, detail: String) -> Verdict {
    Verdict { id, name, pass, soft: false, detail }
}

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn mnist_dir() -> PathBuf {
    std::env::var_os("MNIST_DIR").map(PathBuf::from).unwrap_or_else(|| workspace().join("data/mnist"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run_config(file: &str, out: PathBuf) -> mlm_core::Result<RunConfig> {
    let text = std::fs::read_to_string(workspace().join("configs").join(file)).map_err(|e| mlm_core::Error::Config(format!("{file}: {e}")))?;
    let mut cfg = RunConfig::from_toml(&text)?;
    cfg.data.dir = mnist_dir();
    cfg.output_dir = out;
    Ok(cfg)
}

fn likelihood_files(dir: &Path) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map(|it| it.filter_map(|e| e.ok().map(|e| e.path())).collect())
        .unwrap_or_default();
    out.retain(|p| {
        let name = p.file_name().unwrap().to_string_lossy();
        name.starts_with("mlm_") && name.ends_with(".csv") && name != "mlm_std.csv"
    });
    out.sort();
    out
}

fn expected_artifacts(per_family: bool) -> Vec<String> {
    let mut names: Vec<String> = [
        "config.toml", "model.ckpt", "train_log.csv", "predictions_train.jsonl", "predictions_clean.jsonl",
        "centroids.csv", "centroids_init.csv", "misclustered.csv", "confusion_clean.csv", "distance_clean.csv",
        "distance_clean_argmin.csv", "mlm_clean.csv", "mlm_clean.svg", "calibration.csv", "schedule.toml",
        "predictions_perturbed.jsonl", "accuracy_heatmap.csv", "accuracy_heatmap.svg", "mlm_mean.csv", "mlm_std.csv",
        MANIFEST_NAME,
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for p in 1..=10 {
        names.push(format!("mlm_level_{p:02}.csv"));
        names.push(format!("distance_level_{p:02}.csv"));
        if per_family {
            for f in Family::ALL {
                names.push(format!("mlm_{f}_level_{p:02}.csv"));
            }
        }
    }
    names
}

/// Missing artifacts, leftover partial files, and manifest entries whose
/// hash does not match the file on disk.
fn bundle_problems(dir: &Path, per_family: bool, summary: &PipelineSummary) -> Vec<String> {
    let mut problems: Vec<String> = expected_artifacts(per_family).into_iter().filter(|n| !dir.join(n).is_file()).map(|n| format!("missing {n}")).collect();
    for e in std::fs::read_dir(dir).into_iter().flatten().flatten() {
        let name = e.file_name().to_string_lossy().into_owned();
        if name.ends_with(PARTIAL_SUFFIX) {
            problems.push(format!("leftover {name}"));
        }
    }
    for entry in &summary.manifest.files {
        match sha256_file(&dir.join(&entry.path)) {
            Ok((_, h)) if h == entry.sha256 => {}
            _ => problems.push(format!("hash mismatch {}", entry.path)),
        }
    }
    problems
}

fn brute_distance(records: &[PredictionRecord], mus: &[Vec<f64>]) -> Vec<f64> {
    let n = mus.len();
    let mut d = vec![f64::INFINITY; n * n];
    for y in 0..n {
        for c in 0..n {
            if c == y {
                continue;
            }
            for r in records.iter().filter(|r| r.true_label as usize == y) {
                let v = r.softmax.iter().zip(&mus[c]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                if v < d[y * n + c] {
                    d[y * n + c] = v;
                }
            }
        }
    }
    d
}

fn brute_likelihood(d: &[f64], n: usize) -> Vec<f64> {
    let mut l = vec![0.0; n * n];
    for y in 0..n {
        let total: f64 = (0..n).filter(|&c| c != y).map(|c| 1.0 / d[y * n + c]).sum();
        for c in (0..n).filter(|&c| c != y) {
            l[y * n + c] = (1.0 / d[y * n + c]) / total;
        }
    }
    l
}

fn random_simplex(rng: &mut mlm_core::rng::Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - unit_f64(rng)).ln()).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

fn oracle_lloyd(points: &[Vec<f64>], init: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut mus = init.to_vec();
    let mut last: Option<Vec<usize>> = None;
    for _ in 0..300 {
        let assign: Vec<usize> = points
            .iter()
            .map(|p| {
                let d: Vec<f64> = mus.iter().map(|m| p.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum()).collect();
                (0..d.len()).fold(0, |best, c| if d[c] < d[best] { c } else { best })
            })
            .collect();
        for c in 0..mus.len() {
            let members: Vec<&Vec<f64>> = points.iter().zip(&assign).filter(|(_, &a)| a == c).map(|(p, _)| p).collect();
            if members.is_empty() {
                mus[c] = init[c].clone();
            } else {
                mus[c] = (0..points[0].len()).map(|i| members.iter().map(|m| m[i]).sum::<f64>() / members.len() as f64).collect();
            }
        }
        if last.as_ref() == Some(&assign) {
            return (mus, assign);
        }
        last = Some(assign);
    }
    (mus, last.unwrap())
}

fn criterion_5() -> Verdict {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    let mut time = |label: &str, f: &dyn Fn(u64) -> bool| {
        for seed in 0..100 {
            let t = Instant::now();
            let ok = f(seed);
            worst = worst.max(t.elapsed().as_secs_f64());
            if !ok {
                failures.push(format!("{label} seed {seed}"));
            }
        }
    };

    time("distance/likelihood", &|seed| {
        let mut rng = seeded_rng(derive_seed(seed, &[0xacc5]));
        let n_rec = 10 + below(&mut rng, 91) as usize;
        let mus: Vec<Vec<f64>> = (0..10).map(|_| random_simplex(&mut rng, 10)).collect();
        let records: Vec<PredictionRecord> = (0..n_rec)
            .map(|i| PredictionRecord::new(i as u64, (if i < 10 { i } else { below(&mut rng, 10) as usize }) as u8, random_simplex(&mut rng, 10), None))
            .collect();
        let d = nearest_distance_matrix(&records, &Centroids::from_rows(&mus).unwrap(), Provenance::CleanTest).unwrap();
        let want = brute_distance(&records, &mus);
        let same_d = (0..10).all(|y| (0..10).all(|c| d.get(y, c) == want[y * 10 + c]));
        let l = mlm(&d).unwrap();
        let want_l = brute_likelihood(&want, 10);
        same_d && (0..10).all(|y| (0..10).all(|c| l.get(y, c) == want_l[y * 10 + c]))
    });

    time("k-means", &|seed| {
        let mut rng = seeded_rng(derive_seed(seed, &[0xb10b]));
        let corners = [[0.9, 0.05, 0.05], [0.05, 0.9, 0.05], [0.05, 0.05, 0.9]];
        let points: Vec<Vec<f64>> = (0..150)
            .map(|i| {
                let c = corners[i % 3];
                let raw: Vec<f64> = c.iter().map(|v| (v + 0.08 * (unit_f64(&mut rng) - 0.5)).max(1e-3)).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|v| v / s).collect()
            })
            .collect();
        let init: Vec<Vec<f64>> = (0..3).map(|_| random_simplex(&mut rng, 3)).collect();
        let flat: Vec<f64> = points.iter().flatten().copied().collect();
        let got = match lloyd(&flat, &Centroids::from_rows(&init).unwrap(), KMeansOptions { reseed_empty: true, tol: 0.0, max_iters: 300 }) {
            Ok(o) => o,
            Err(_) => return false,
        };
        let (mus, assign) = oracle_lloyd(&points, &init);
        got.assignments == assign && (0..3).all(|c| got.centroids.get(c) == mus[c].as_slice())
    });

    time("stability", &|seed| {
        let mut rng = seeded_rng(derive_seed(seed, &[0x57ab]));
        let n = 10;
        let levels: Vec<Vec<f64>> = (0..10)
            .map(|_| {
                let mut v = vec![0.0; n * n];
                for y in 0..n {
                    let row = random_simplex(&mut rng, n - 1);
                    for (k, c) in (0..n).filter(|&c| c != y).enumerate() {
                        v[y * n + c] = row[k];
                    }
                }
                v
            })
            .collect();
        let matrices: Vec<LikelihoodMatrix> =
            levels.iter().enumerate().map(|(p, v)| LikelihoodMatrix::from_values(n, v.clone(), Provenance::Level(p as u32 + 1), 1e-9).unwrap()).collect();
        let stats = stability(&matrices).unwrap();
        (0..n * n).all(|i| {
            let mean = levels.iter().map(|l| l[i]).sum::<f64>() / 10.0;
            let var = levels.iter().map(|l| (l[i] - mean).powi(2)).sum::<f64>() / 10.0;
            (stats.mean.as_slice()[i] - mean).abs() <= 1e-12 && (stats.std[i] - var.sqrt()).abs() <= 1e-12
        })
    });

    let pass = failures.is_empty() && worst < 1.0;
    let detail = if failures.is_empty() {
        format!("300 fixtures agree; slowest {worst:.4}s")
    } else {
        format!("disagreements: {}", failures.join(", "))
    };
    verdict(5, "oracle equivalence", pass, detail)
}

fn criterion_6() -> Verdict {
    let checks = common::gradient_check(2024, 64, 1e-5);
    let worst = checks.iter().map(common::GradientCheck::relative_error).fold(0.0, f64::max);
    let nonzero = checks.iter().filter(|c| c.analytic != 0.0).count();
    verdict(6, "gradient check", worst <= 1e-4 && checks.len() >= 50, format!("{} coordinates ({nonzero} nonzero), worst relative error {worst:.2e}", checks.len()))
}

fn criterion_7() -> Verdict {
    let mut rng = seeded_rng(derive_seed(7, &[0x7e57]));
    let digits = common::toy_digits(500, 7, mlm_core::data::Split::Test);
    let images: Vec<ImageTensor> = digits
        .images
        .iter()
        .cloned()
        .chain((0..500).map(|_| ImageTensor::new(28, 28, (0..784).map(|_| unit_f64(&mut rng)).collect()).unwrap()))
        .collect();
    let mut problems = Vec::new();
    for (i, image) in images.iter().enumerate() {
        for f in Family::ALL {
            let seed = derive_seed(i as u64, &[f.index() as u64]);
            if corrupt(image, f, 0.0, seed).unwrap().pixels() != image.pixels() {
                problems.push(format!("{f} severity 0 changed image {i}"));
            }
            let severity = unit_f64(&mut rng) * max_severity(f);
            let a = corrupt(image, f, severity, seed).unwrap();
            if a.pixels().iter().any(|v| !(0.0..=1.0).contains(v)) {
                problems.push(format!("{f} left [0,1] on image {i}"));
            }
            if f.is_stochastic() && i % 10 == 0 {
                let b = corrupt(image, f, severity, seed).unwrap();
                if a.pixels().iter().zip(b.pixels()).any(|(x, y)| x.to_bits() != y.to_bits()) {
                    problems.push(format!("{f} not reproducible on image {i}"));
                }
            }
        }
    }
    problems.truncate(5);
    let detail = if problems.is_empty() { format!("{} images x 12 families", images.len()) } else { problems.join("; ") };
    verdict(7, "perturbation identities and determinism", problems.is_empty(), detail)
}

fn check_likelihoods(dir: &Path) -> (usize, Vec<String>) {
    let files = likelihood_files(dir);
    let mut bad = Vec::new();
    for p in &files {
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        let grid = match read_grid_csv(p) {
            Ok(g) => g,
            Err(e) => {
                bad.push(format!("{name}: {e}"));
                continue;
            }
        };
        for y in 0..grid.rows() {
            let row = grid.row(y);
            let off: f64 = row.iter().enumerate().filter(|&(c, _)| c != y).map(|(_, v)| v).sum();
            if row[y] != 0.0 || (off - 1.0).abs() > 1e-9 || row.iter().any(|v| !(0.0..=1.0).contains(v)) {
                bad.push(format!("{name} row {y}"));
            }
        }
    }
    (files.len(), bad)
}

fn full_run_criteria(out: &mut Vec<Verdict>) -> Option<(f64, u64)> {
    let dir = scratch("full");
    let cfg = match run_config("full.toml", dir.clone()) {
        Ok(c) => c,
        Err(e) => {
            for (id, name) in [(1, "training reproduction"), (2, "centroid displacement"), (3, "calibration decay"), (4, "likelihood invariants")] {
                out.push(verdict(id, name, false, format!("config: {e}")));
            }
            return None;
        }
    };
    let t = Instant::now();
    let summary = match run_pipeline(&cfg) {
        Ok(s) => s,
        Err(e) => {
            for (id, name) in [(1, "training reproduction"), (2, "centroid displacement"), (3, "calibration decay"), (4, "likelihood invariants")] {
                out.push(verdict(id, name, false, format!("full run failed: {e}")));
            }
            return None;
        }
    };
    let total = t.elapsed().as_secs_f64();
    let train_s = summary.stage_seconds.iter().find(|(n, _)| *n == "train").map_or(f64::NAN, |s| s.1);
    out.push(verdict(
        1,
        "training reproduction",
        summary.test_accuracy >= 0.975 && train_s <= 1800.0,
        format!("test accuracy {:.4} after {} epochs; training took {train_s:.0}s", summary.test_accuracy, cfg.train.epochs),
    ));

    let disp = match mlm_core::clustering::read_centroids_csv(&dir.join("centroids.csv")) {
        Ok((_, _, d)) => d,
        Err(_) => vec![f64::NAN; 10],
    };
    let max = disp.iter().cloned().fold(0.0, f64::max);
    let tiny = disp.iter().filter(|&&d| d <= 1e-8).count();
    out.push(verdict(2, "centroid displacement", max <= 1e-3 && tiny >= 6 && disp.len() == 10, format!("max {max:.3e}; {tiny} classes at most 1e-8")));

    let means = summary.level_mean_accuracy;
    let mut upticks = Vec::new();
    if let Ok(grid) = read_grid_csv(&dir.join("accuracy_heatmap.csv")) {
        for r in 0..grid.rows() {
            let row = grid.row(r);
            for p in 1..row.len() {
                if row[p] > row[p - 1] + 0.02 {
                    upticks.push(format!("{} level {}", grid.row_labels[r], p + 1));
                }
            }
        }
    } else {
        upticks.push("accuracy_heatmap.csv unreadable".into());
    }
    let monotone = means.windows(2).all(|w| w[1] <= w[0]);
    out.push(verdict(
        3,
        "calibration decay",
        means[0] >= 0.95 && (0.40..=0.60).contains(&means[9]) && monotone && upticks.is_empty(),
        format!(
            "level means {}{}{}",
            means.iter().map(|m| format!("{m:.3}")).collect::<Vec<_>>().join(" "),
            if monotone { "" } else { "; mean increases" },
            if upticks.is_empty() { String::new() } else { format!("; upticks over 2 points: {}", upticks.join(", ")) }
        ),
    ));

    let (count, bad) = check_likelihoods(&dir);
    out.push(verdict(4, "likelihood invariants", bad.is_empty() && count >= 12, format!("{count} matrices checked{}", if bad.is_empty() { String::new() } else { format!("; violations: {}", bad.join(", ")) })));

    let soft = match read_records(&dir.join("predictions_clean.jsonl")).and_then(|r| confusion_matrix(&r)) {
        Ok(cm) => {
            let off = cm.off_diagonal();
            let fewest = (0..10).min_by_key(|&c| (off[c], c)).unwrap();
            let most = (0..10).max_by_key(|&c| (off[c], std::cmp::Reverse(c))).unwrap();
            Verdict {
                id: 8,
                name: "confusion qualitative echo",
                pass: fewest == 0 && most == 8,
                soft: true,
                detail: format!("off-diagonal counts {off:?}; fewest digit {fewest}, most digit {most}"),
            }
        }
        Err(e) => Verdict { id: 8, name: "confusion qualitative echo", pass: false, soft: true, detail: e.to_string() },
    };
    out.push(soft);

    let problems = bundle_problems(&dir, true, &summary);
    if !problems.is_empty() {
        log::warn!("full bundle problems: {problems:?}");
        return Some((f64::INFINITY, summary.predictions));
    }
    Some((total, summary.predictions))
}

fn desk_run(dir: &Path) -> Result<(f64, PipelineSummary, Vec<String>), String> {
    let _ = std::fs::remove_dir_all(dir);
    let cfg = run_config("desk.toml", dir.to_path_buf()).map_err(|e| e.to_string())?;
    let t = Instant::now();
    let summary = run_pipeline(&cfg).map_err(|e| e.to_string())?;
    let took = t.elapsed().as_secs_f64();
    let problems = bundle_problems(dir, cfg.report.per_family, &summary);
    Ok((took, summary, problems))
}

fn criterion_9(full: Option<(f64, u64)>) -> Verdict {
    let mut notes = Vec::new();
    let mut pass = true;
    match full {
        Some((secs, predictions)) => {
            pass &= secs <= 7200.0 && predictions == 1_210_000;
            notes.push(format!("full run {predictions} predictions in {secs:.0}s"));
        }
        None => {
            pass = false;
            notes.push("full run unavailable".into());
        }
    }
    let dir = scratch("desk");
    let first = desk_run(&dir);
    let second = desk_run(&dir);
    match (first, second) {
        (Ok((t1, s1, p1)), Ok((t2, s2, p2))) => {
            let same = s1.manifest_sha256 == s2.manifest_sha256;
            pass &= t1 <= 600.0 && t2 <= 600.0 && p1.is_empty() && p2.is_empty() && same;
            notes.push(format!("desk runs {t1:.0}s and {t2:.0}s, manifest {}", if same { "identical" } else { "differs" }));
            if !p1.is_empty() || !p2.is_empty() {
                notes.push(format!("bundle problems {p1:?} {p2:?}"));
            }
        }
        (a, b) => {
            pass = false;
            notes.push(format!("desk run failed: {:?} {:?}", a.err(), b.err()));
        }
    }
    verdict(9, "sweep feasibility", pass, notes.join("; "))
}

fn main() -> ExitCode {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).is_test(true).try_init();
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut verdicts = vec![criterion_5(), criterion_6(), criterion_7()];
    let full = full_run_criteria(&mut verdicts);
    verdicts.push(criterion_9(full));
    verdicts.sort_by_key(|v| v.id);

    let mut hard_failures = 0;
    for v in &verdicts {
        let tag = match (v.pass, v.soft) {
            (true, _) => "PASS",
            (false, true) => "WARN",
            (false, false) => "FAIL",
        };
        println!("{tag} criterion {} ({}): {}", v.id, v.name, v.detail);
        if !v.pass && !v.soft {
            hard_failures += 1;
        }
    }
    if hard_failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{hard_failures} criteria failed");
        ExitCode::FAILURE
    }
}
