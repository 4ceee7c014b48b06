//! Procedural textures for the fog, frost and snow kernels. Each texture
//! is a `side x side` field in `[0, 1]` drawn from the caller's stream.

use crate::rng::{self, Rng};

/// Diamond-square plasma fractal on the next `2^k + 1` grid, min-max
/// normalized and cropped to `side x side`. `decay` divides the
/// displacement amplitude at every subdivision.
pub fn plasma(side: usize, decay: f64, rng: &mut Rng) -> Vec<f64> {
    let mut n = 1;
    while n + 1 < side {
        n *= 2;
    }
    let size = n + 1;
    let mut grid = vec![0.0f64; size * size];
    let at = |y: usize, x: usize| y * size + x;
    let mut amp = 1.0;
    let jitter = |rng: &mut Rng, amp: f64| (rng::unit_f64(rng) - 0.5) * amp;
    for &(y, x) in &[(0, 0), (0, n), (n, 0), (n, n)] {
        grid[at(y, x)] = jitter(rng, amp);
    }
    let mut step = n;
    while step > 1 {
        let half = step / 2;
        amp /= decay;
        // Diamond step: square centres.
        for y in (half..n).step_by(step) {
            for x in (half..n).step_by(step) {
                let mean = (grid[at(y - half, x - half)]
                    + grid[at(y - half, x + half)]
                    + grid[at(y + half, x - half)]
                    + grid[at(y + half, x + half)])
                    / 4.0;
                grid[at(y, x)] = mean + jitter(rng, amp);
            }
        }
        // Square step: edge midpoints, averaging the in-bounds neighbours.
        for y in (0..size).step_by(half) {
            let x0 = if (y / half) % 2 == 0 { half } else { 0 };
            for x in (x0..size).step_by(step) {
                let mut sum = 0.0;
                let mut count = 0.0;
                if y >= half {
                    sum += grid[at(y - half, x)];
                    count += 1.0;
                }
                if y + half < size {
                    sum += grid[at(y + half, x)];
                    count += 1.0;
                }
                if x >= half {
                    sum += grid[at(y, x - half)];
                    count += 1.0;
                }
                if x + half < size {
                    sum += grid[at(y, x + half)];
                    count += 1.0;
                }
                grid[at(y, x)] = sum / count + jitter(rng, amp);
            }
        }
        step = half;
    }
    let mut out: Vec<f64> = (0..side)
        .flat_map(|y| (0..side).map(move |x| (y, x)))
        .map(|(y, x)| grid[at(y, x)])
        .collect();
    normalize(&mut out);
    out
}

/// Min-max rescale into `[0, 1]`; a constant field becomes all zeros.
fn normalize(field: &mut [f64]) {
    let (lo, hi) = field
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    for v in field.iter_mut() {
        *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
    }
}

/// Deposit `value` at a fractional position with bilinear weights.
fn splat(field: &mut [f64], side: usize, y: f64, x: f64, value: f64) {
    let (y0, x0) = (y.floor(), x.floor());
    let (fy, fx) = (y - y0, x - x0);
    for (dy, wy) in [(0.0, 1.0 - fy), (1.0, fy)] {
        for (dx, wx) in [(0.0, 1.0 - fx), (1.0, fx)] {
            let (yy, xx) = (y0 + dy, x0 + dx);
            if yy >= 0.0 && xx >= 0.0 && (yy as usize) < side && (xx as usize) < side {
                field[yy as usize * side + xx as usize] += value * wy * wx;
            }
        }
    }
}

fn needle(field: &mut [f64], side: usize, (y, x): (f64, f64), angle: f64, length: f64, value: f64) {
    let steps = (length * 2.0).ceil().max(1.0) as usize;
    for k in 0..=steps {
        let t = length * k as f64 / steps as f64;
        splat(field, side, y + t * angle.sin(), x + t * angle.cos(), value);
    }
}

/// Ice-crystal texture: needles radiating from a few nucleation points,
/// each with two side branches, over a faint plasma haze.
pub fn frost(side: usize, rng: &mut Rng) -> Vec<f64> {
    let mut field = vec![0.0; side * side];
    let s = side as f64;
    let seeds = 4 + rng::below(rng, 4) as usize;
    for _ in 0..seeds {
        let origin = (rng::unit_f64(rng) * s, rng::unit_f64(rng) * s);
        let arms = 4 + rng::below(rng, 4) as usize;
        for _ in 0..arms {
            let angle = rng::unit_f64(rng) * std::f64::consts::TAU;
            let length = s * (0.15 + 0.35 * rng::unit_f64(rng));
            let value = 0.35 + 0.35 * rng::unit_f64(rng);
            needle(&mut field, side, origin, angle, length, value);
            for sign in [-1.0, 1.0] {
                let t = length * (0.3 + 0.4 * rng::unit_f64(rng));
                let branch_origin = (origin.0 + t * angle.sin(), origin.1 + t * angle.cos());
                let branch_angle = angle + sign * std::f64::consts::FRAC_PI_3;
                needle(&mut field, side, branch_origin, branch_angle, length * 0.4, value * 0.8);
            }
        }
    }
    let haze = plasma(side, 2.0, rng);
    for (v, h) in field.iter_mut().zip(haze) {
        *v = (*v + 0.3 * h).min(1.0);
    }
    field
}

/// Falling-snow texture: sparse flakes smeared along one wind direction.
pub fn snow(side: usize, rng: &mut Rng) -> Vec<f64> {
    let mut flakes = vec![0.0; side * side];
    for v in flakes.iter_mut() {
        // Fixed draw count per pixel.
        let (u, w) = (rng::unit_f64(rng), rng::unit_f64(rng));
        if u < 0.07 {
            *v = 0.5 + 0.5 * w;
        }
    }
    let angle = std::f64::consts::FRAC_PI_2 + (rng::unit_f64(rng) - 0.5) * 1.2;
    let length = 3.0 + 3.0 * rng::unit_f64(rng);
    let mut streaks = vec![0.0; side * side];
    let taps = 7;
    for y in 0..side {
        for x in 0..side {
            let v = flakes[y * side + x];
            if v == 0.0 {
                continue;
            }
            for k in 0..taps {
                let t = length * k as f64 / (taps - 1) as f64;
                splat(&mut streaks, side, y as f64 + t * angle.sin(), x as f64 + t * angle.cos(), v);
            }
        }
    }
    for v in streaks.iter_mut() {
        *v = v.min(1.0);
    }
    streaks
}
