//! The corruption kernels.
//!
//! Every family is driven by one scalar severity `s >= 0`, and `s = 0` is
//! the identity. Outputs are clamped to `[0, 1]`. Convolutions read
//! outside the frame with clamp-to-edge addressing.
//!
//! | family        | severity knob                 | transform                               |
//! |---------------|-------------------------------|-----------------------------------------|
//! | Brightness    | offset `b`                    | `v + b`                                 |
//! | Contrast      | `s = 1 - c`                   | `(v - mean) * c + mean`                 |
//! | DefocusBlur   | disk radius (px)              | anti-aliased disk average               |
//! | Fog           | fog strength `f`              | `v + f * (1 - v) * plasma`              |
//! | Frost         | blend weight `w`              | `(1 - w) * v + w * frost`               |
//! | GaussianNoise | `sigma`                       | `v + N(0, sigma)`                       |
//! | ImpulseNoise  | corruption rate `r`           | salt or pepper with probability `r`     |
//! | MotionBlur    | streak length (px)            | line average at a seeded angle          |
//! | Pixelation    | `s = k - 1`, block size `k`   | block average, nearest upsample         |
//! | ShotNoise     | `s = 1 / lambda`              | `Poisson(v * lambda) / lambda`          |
//! | Snow          | streak gain `a`               | `v + a * snow`                          |
//! | ZoomBlur      | `s = max zoom - 1`            | mean of 8 centred zooms in `[1, 1 + s]` |

use rand_distr::{Distribution, Poisson, StandardNormal};

use super::texture;
use super::Family;
use crate::data::ImageTensor;
use crate::error::{Error, Result};
use crate::rng;

/// Largest severity the calibrator may assign to each family. At these
/// values every family destroys almost all digit information.
pub fn max_severity(family: Family) -> f64 {
    match family {
        Family::Brightness => 1.0,
        Family::Contrast => 1.0,
        Family::DefocusBlur => 10.0,
        Family::Fog => 6.0,
        Family::Frost => 1.0,
        Family::GaussianNoise => 3.0,
        Family::ImpulseNoise => 1.0,
        Family::MotionBlur => 28.0,
        Family::Pixelation => 27.0,
        Family::ShotNoise => 20.0,
        Family::Snow => 6.0,
        Family::ZoomBlur => 4.0,
    }
}

/// Apply `family` at `severity` with the per-image stream `seed`.
pub fn corrupt(image: &ImageTensor, family: Family, severity: f64, seed: u64) -> Result<ImageTensor> {
    if !(severity >= 0.0 && severity <= max_severity(family)) {
        return Err(Error::BadSeverity {
            family: family.name().to_owned(),
            value: severity,
        });
    }
    if severity == 0.0 {
        return Ok(image.clone());
    }
    let (h, w) = (image.height(), image.width());
    let mut r = rng::seeded_rng(seed);
    let px = image.pixels();
    let out: Vec<f64> = match family {
        Family::Brightness => px.iter().map(|v| v + severity).collect(),
        Family::Contrast => {
            let mean = image.mean();
            let c = 1.0 - severity;
            px.iter().map(|v| (v - mean) * c + mean).collect()
        }
        Family::DefocusBlur => defocus(image, severity),
        Family::Fog => {
            let fog = texture::plasma(h.max(w), 2.0, &mut r);
            let side = h.max(w);
            (0..h * w)
                .map(|i| {
                    let v = px[i];
                    v + severity * (1.0 - v) * fog[(i / w) * side + i % w]
                })
                .collect()
        }
        Family::Frost => {
            let side = h.max(w);
            let frost = texture::frost(side, &mut r);
            (0..h * w)
                .map(|i| (1.0 - severity) * px[i] + severity * frost[(i / w) * side + i % w])
                .collect()
        }
        Family::GaussianNoise => px
            .iter()
            .map(|v| {
                let n: f64 = StandardNormal.sample(&mut r);
                v + severity * n
            })
            .collect(),
        Family::ImpulseNoise => px
            .iter()
            .map(|&v| {
                // Two draws per pixel whatever the rate, so the corrupted set
                // grows monotonically with the rate for a fixed seed.
                let (hit, salt) = (rng::unit_f64(&mut r), rng::unit_f64(&mut r));
                if hit < severity {
                    if salt < 0.5 {
                        0.0
                    } else {
                        1.0
                    }
                } else {
                    v
                }
            })
            .collect(),
        Family::MotionBlur => {
            let angle = rng::unit_f64(&mut r) * std::f64::consts::PI;
            line_blur(image, severity, angle)
        }
        Family::Pixelation => pixelate(image, 1.0 + severity),
        Family::ShotNoise => {
            let lambda = 1.0 / severity;
            px.iter()
                .map(|&v| {
                    let mean = v * lambda;
                    if mean <= 0.0 {
                        return 0.0;
                    }
                    let k: f64 = Poisson::new(mean).expect("positive finite mean").sample(&mut r);
                    k / lambda
                })
                .collect()
        }
        Family::Snow => {
            let side = h.max(w);
            let snow = texture::snow(side, &mut r);
            (0..h * w)
                .map(|i| px[i] + severity * snow[(i / w) * side + i % w])
                .collect()
        }
        Family::ZoomBlur => zoom_blur(image, severity),
    };
    Ok(ImageTensor::from_clamped(h, w, out))
}

/// Bilinear sample with clamp-to-edge addressing.
fn bilinear(image: &ImageTensor, y: f64, x: f64) -> f64 {
    let (y0, x0) = (y.floor(), x.floor());
    let (fy, fx) = (y - y0, x - x0);
    let (y0, x0) = (y0 as isize, x0 as isize);
    let top = image.get_clamped(y0, x0) * (1.0 - fx) + image.get_clamped(y0, x0 + 1) * fx;
    let bottom = image.get_clamped(y0 + 1, x0) * (1.0 - fx) + image.get_clamped(y0 + 1, x0 + 1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Disk kernel with a one-pixel linear rim: weight
/// `clamp(radius + 0.5 - distance, 0, 1)`.
fn defocus(image: &ImageTensor, radius: f64) -> Vec<f64> {
    let reach = (radius + 0.5).ceil() as isize;
    let mut taps = Vec::new();
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            let d = ((dy * dy + dx * dx) as f64).sqrt();
            let wgt = (radius + 0.5 - d).clamp(0.0, 1.0);
            if wgt > 0.0 {
                taps.push((dy, dx, wgt));
            }
        }
    }
    let total: f64 = taps.iter().map(|t| t.2).sum();
    convolve(image, &taps, total)
}

fn convolve(image: &ImageTensor, taps: &[(isize, isize, f64)], total: f64) -> Vec<f64> {
    let (h, w) = (image.height(), image.width());
    let mut out = Vec::with_capacity(h * w);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let acc: f64 = taps
                .iter()
                .map(|&(dy, dx, wgt)| wgt * image.get_clamped(y + dy, x + dx))
                .sum();
            out.push(acc / total);
        }
    }
    out
}

/// Mean of bilinear samples along a centred segment of `length` pixels.
fn line_blur(image: &ImageTensor, length: f64, angle: f64) -> Vec<f64> {
    let (h, w) = (image.height(), image.width());
    let taps = (length.ceil() as usize + 1).max(2);
    let (sy, sx) = (angle.sin(), angle.cos());
    let offsets: Vec<f64> = (0..taps)
        .map(|k| -length / 2.0 + length * k as f64 / (taps - 1) as f64)
        .collect();
    let mut out = Vec::with_capacity(h * w);
    for y in 0..h {
        for x in 0..w {
            let acc: f64 = offsets
                .iter()
                .map(|t| bilinear(image, y as f64 + t * sy, x as f64 + t * sx))
                .sum();
            out.push(acc / taps as f64);
        }
    }
    out
}

/// Average over blocks of (possibly fractional) side `block`, weighting
/// each source pixel by its overlap with the block, then upsample by
/// nearest neighbour. `block = 1` reproduces the input.
fn pixelate(image: &ImageTensor, block: f64) -> Vec<f64> {
    let (h, w) = (image.height(), image.width());
    let cells = |n: usize| (n as f64 / block).ceil() as usize;
    let (ch, cw) = (cells(h), cells(w));
    // overlap[c] lists (pixel, weight) for cell c along one axis.
    let overlap = |n: usize, count: usize| -> Vec<Vec<(usize, f64)>> {
        (0..count)
            .map(|c| {
                let (lo, hi) = (c as f64 * block, ((c + 1) as f64 * block).min(n as f64));
                (lo.floor() as usize..(hi.ceil() as usize).min(n))
                    .map(|p| (p, (hi.min(p as f64 + 1.0) - lo.max(p as f64)).max(0.0)))
                    .filter(|&(_, wgt)| wgt > 0.0)
                    .collect()
            })
            .collect()
    };
    let (rows, cols) = (overlap(h, ch), overlap(w, cw));
    let mut cell_values = vec![0.0; ch * cw];
    for (cy, row_taps) in rows.iter().enumerate() {
        for (cx, col_taps) in cols.iter().enumerate() {
            let mut acc = 0.0;
            let mut area = 0.0;
            for &(py, wy) in row_taps {
                for &(px, wx) in col_taps {
                    acc += wy * wx * image.get(py, px);
                    area += wy * wx;
                }
            }
            cell_values[cy * cw + cx] = acc / area;
        }
    }
    let cell_of = |p: usize, count: usize| ((p as f64 / block).floor() as usize).min(count - 1);
    (0..h)
        .flat_map(|y| (0..w).map(move |x| (y, x)))
        .map(|(y, x)| cell_values[cell_of(y, ch) * cw + cell_of(x, cw)])
        .collect()
}

/// Mean of the image zoomed about its centre by factors evenly spaced in
/// `[1, 1 + extent]`.
fn zoom_blur(image: &ImageTensor, extent: f64) -> Vec<f64> {
    const STEPS: usize = 8;
    let (h, w) = (image.height(), image.width());
    let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
    let mut acc = vec![0.0; h * w];
    for k in 0..STEPS {
        let zoom = 1.0 + extent * k as f64 / (STEPS - 1) as f64;
        for y in 0..h {
            for x in 0..w {
                let sy = cy + (y as f64 - cy) / zoom;
                let sx = cx + (x as f64 - cx) / zoom;
                acc[y * w + x] += bilinear(image, sy, sx);
            }
        }
    }
    acc.into_iter().map(|v| v / STEPS as f64).collect()
}
