//! Structured-light depth sensor simulation: noise, dropout, disparity
//! quantization, hole filling and normal estimation.

use std::collections::VecDeque;

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::frame::{DepthFrame, Frame, NormalMap, INVALID_DEPTH};

/// Zero disables the corresponding stage; all-zero parameters are the identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseParams {
    /// `(a0, a1, a2)` of `sigma_z(z) = a0 + a1 z + a2 z^2`, meters.
    pub axial: [f64; 3],
    /// Standard deviation of the sampling offset, pixels.
    pub lateral_sigma: f64,
    /// Pixels whose incidence angle exceeds `pi/2 - grazing_dropout` are dropped. Radians.
    pub grazing_dropout: f64,
    /// Drops pixels hidden from a projector offset by `baseline` along camera +x.
    pub shadow_dropout: bool,
    /// Projector-camera baseline, meters.
    pub baseline: f64,
    /// Disparity resolution, pixels.
    pub disparity_step: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            axial: [0.0, 0.0, 0.00285],
            lateral_sigma: 0.5,
            grazing_dropout: 10f64.to_radians(),
            shadow_dropout: false,
            baseline: 0.075,
            disparity_step: 0.125,
        }
    }
}

impl NoiseParams {
    pub fn zero() -> Self {
        Self {
            axial: [0.0; 3],
            lateral_sigma: 0.0,
            grazing_dropout: 0.0,
            shadow_dropout: false,
            baseline: 0.0,
            disparity_step: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let non_negative = |v: f64| v.is_finite() && v >= 0.0;
        if !self.axial.iter().all(|&a| non_negative(a)) {
            return Err(Error::Parameter(format!("axial coefficients must be non-negative, got {:?}", self.axial)));
        }
        if !non_negative(self.lateral_sigma) || !non_negative(self.baseline) || !non_negative(self.disparity_step) {
            return Err(Error::Parameter("lateral sigma, baseline and disparity step must be non-negative".into()));
        }
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&self.grazing_dropout) {
            return Err(Error::Parameter(format!("grazing dropout {} outside [0, pi/2)", self.grazing_dropout)));
        }
        if self.shadow_dropout && self.baseline == 0.0 {
            return Err(Error::Parameter("shadow dropout needs a positive baseline".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn axial_sigma(&self, z: f64) -> f64 {
        let [a0, a1, a2] = self.axial;
        a0 + a1 * z + a2 * z * z
    }

    fn quantizes(&self) -> bool {
        self.baseline > 0.0 && self.disparity_step > 0.0
    }

    /// Snaps `z` to the nearest depth whose disparity `f b / z` is a multiple
    /// of the disparity step; `None` when that disparity is zero.
    pub fn quantize(&self, z: f64, focal: f64) -> Option<f64> {
        let fb = focal * self.baseline;
        let steps = (fb / z / self.disparity_step).round();
        (steps > 0.0).then(|| fb / (steps * self.disparity_step))
    }
}

/// Pixels a projector at `+baseline` along camera x cannot see: scanning a
/// row right to left, a pixel is shadowed when a pixel to its right lands
/// at or left of it in the projector image.
fn shadow_mask(frame: &DepthFrame, k: &CameraIntrinsics, baseline: f64) -> Vec<bool> {
    let (w, h) = frame.dims();
    let mut shadowed = vec![false; w * h];
    for y in 0..h {
        let mut min_up = f64::INFINITY;
        for x in (0..w).rev() {
            let z = *frame.get(x, y);
            if z <= 0.0 {
                continue;
            }
            let up = x as f64 - k.fx * baseline / z;
            if up >= min_up {
                shadowed[y * w + x] = true;
            } else {
                min_up = up;
            }
        }
    }
    shadowed
}

/// Corrupts `frame` per pixel: grazing and shadow dropout, lateral jitter of
/// the sampling location, axial Gaussian noise, then disparity quantization.
/// `normals` must be registered to `frame`; pixels without a normal are
/// never dropped for grazing.
pub fn add_noise(
    frame: &DepthFrame,
    normals: &NormalMap,
    k: &CameraIntrinsics,
    params: &NoiseParams,
    seed: u64,
) -> Result<DepthFrame> {
    params.validate()?;
    k.validate()?;
    if normals.dims() != frame.dims() {
        return Err(Error::MissingNormals);
    }
    frame.ensure_dims(k.dims())?;
    let (w, h) = frame.dims();
    let cos_limit = (std::f64::consts::FRAC_PI_2 - params.grazing_dropout).cos();
    let shadow = params.shadow_dropout.then(|| shadow_mask(frame, k, params.baseline));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = frame.clone();
    for y in 0..h {
        for x in 0..w {
            let z = *frame.get(x, y);
            if z <= 0.0 {
                continue;
            }
            if params.grazing_dropout > 0.0 {
                if let Some(n) = normals.get(x, y) {
                    let view = k.ray(x as f64, y as f64).normalize();
                    if n.dot(&view).abs() < cos_limit {
                        out.set(x, y, INVALID_DEPTH);
                        continue;
                    }
                }
            }
            if shadow.as_ref().is_some_and(|s| s[y * w + x]) {
                out.set(x, y, INVALID_DEPTH);
                continue;
            }
            let mut z = z;
            if params.lateral_sigma > 0.0 {
                let dx: f64 = rng.sample::<f64, _>(StandardNormal) * params.lateral_sigma;
                let dy: f64 = rng.sample::<f64, _>(StandardNormal) * params.lateral_sigma;
                let sx = (x as f64 + dx).round().clamp(0.0, (w - 1) as f64) as usize;
                let sy = (y as f64 + dy).round().clamp(0.0, (h - 1) as f64) as usize;
                z = *frame.get(sx, sy);
                if z <= 0.0 {
                    out.set(x, y, INVALID_DEPTH);
                    continue;
                }
            }
            let sigma = params.axial_sigma(z);
            if sigma > 0.0 {
                z += rng.sample::<f64, _>(StandardNormal) * sigma;
            }
            if params.quantizes() && z > 0.0 {
                z = params.quantize(z, k.fx).unwrap_or(INVALID_DEPTH);
            }
            out.set(x, y, if z > 0.0 { z } else { INVALID_DEPTH });
        }
    }
    Ok(out)
}

/// Sweeps stop once no unknown changes by more than this many meters.
const INPAINT_TOLERANCE: f64 = 1e-10;
const INPAINT_MAX_SWEEPS: usize = 50_000;
/// Floor on the neighbourhood depth variance, m^2.
const INPAINT_MIN_VARIANCE: f64 = 1e-4;

/// Fills invalid pixels so that each is a convex combination of its
/// `kernel x kernel` neighbours. Valid neighbours are weighted by their
/// similarity to the mean of the valid neighbourhood, invalid neighbours by
/// one. Valid pixels are hard constraints and are returned unchanged.
pub fn inpaint(frame: &DepthFrame, kernel: usize) -> Result<DepthFrame> {
    if kernel < 3 || kernel.is_multiple_of(2) {
        return Err(Error::Parameter(format!("kernel size must be odd and at least 3, got {kernel}")));
    }
    if frame.valid_count() == 0 {
        return Err(Error::AllInvalid);
    }
    let (w, h) = frame.dims();
    let r = (kernel / 2) as isize;
    let unknown: Vec<usize> = (0..w * h).filter(|&i| frame.data()[i] <= 0.0).collect();
    if unknown.is_empty() {
        return Ok(frame.clone());
    }
    let mut slot = vec![usize::MAX; w * h];
    for (u, &i) in unknown.iter().enumerate() {
        slot[i] = u;
    }

    // Row u: x_u = (rhs_u + sum w_uv x_v) / total_u over unknown neighbours v.
    let mut rhs = vec![0.0; unknown.len()];
    let mut total = vec![0.0; unknown.len()];
    let mut links: Vec<Vec<(usize, f64)>> = vec![Vec::new(); unknown.len()];
    let mut valid = Vec::with_capacity(kernel * kernel);
    for (u, &i) in unknown.iter().enumerate() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        valid.clear();
        for dy in -r..=r {
            for dx in -r..=r {
                let (nx, ny) = (x + dx, y + dy);
                if (dx, dy) == (0, 0) || nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                let z = frame.data()[j];
                if z > 0.0 {
                    valid.push(z);
                } else {
                    links[u].push((slot[j], 1.0));
                    total[u] += 1.0;
                }
            }
        }
        if !valid.is_empty() {
            let n = valid.len() as f64;
            let mean = valid.iter().sum::<f64>() / n;
            let var = (valid.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / n).max(INPAINT_MIN_VARIANCE);
            for &z in &valid {
                let weight = (-(z - mean).powi(2) / (2.0 * var)).exp();
                rhs[u] += weight * z;
                total[u] += weight;
            }
        }
    }

    let x = gauss_seidel(frame, &unknown, &rhs, &total, &links);
    let mut out = frame.clone();
    for (&i, v) in unknown.iter().zip(x) {
        out.data_mut()[i] = v;
    }
    Ok(out)
}

/// Starts from a breadth-first fill (each unknown takes the mean of already
/// known 4-neighbours) so every iterate stays within the valid range.
fn gauss_seidel(
    frame: &DepthFrame,
    unknown: &[usize],
    rhs: &[f64],
    total: &[f64],
    links: &[Vec<(usize, f64)>],
) -> Vec<f64> {
    let (w, h) = frame.dims();
    let mut value: Vec<f64> = frame.data().to_vec();
    let mut known: Vec<bool> = value.iter().map(|&z| z > 0.0).collect();
    let neighbours = |i: usize| {
        let (x, y) = (i % w, i / w);
        [
            (x > 0).then(|| i - 1),
            (x + 1 < w).then(|| i + 1),
            (y > 0).then(|| i - w),
            (y + 1 < h).then(|| i + w),
        ]
        .into_iter()
        .flatten()
    };
    let mut queue: VecDeque<usize> = unknown
        .iter()
        .copied()
        .filter(|&i| neighbours(i).any(|j| known[j]))
        .collect();
    let mut queued: Vec<bool> = vec![false; w * h];
    for &i in &queue {
        queued[i] = true;
    }
    while let Some(i) = queue.pop_front() {
        let (sum, n) = neighbours(i).filter(|&j| known[j]).fold((0.0, 0), |(s, n), j| (s + value[j], n + 1));
        value[i] = sum / n as f64;
        known[i] = true;
        for j in neighbours(i) {
            if !known[j] && !queued[j] {
                queued[j] = true;
                queue.push_back(j);
            }
        }
    }

    let mut x: Vec<f64> = unknown.iter().map(|&i| value[i]).collect();
    for _ in 0..INPAINT_MAX_SWEEPS {
        let mut change: f64 = 0.0;
        for u in 0..x.len() {
            let mut acc = rhs[u];
            for &(v, weight) in &links[u] {
                acc += weight * x[v];
            }
            let next = acc / total[u];
            change = change.max((next - x[u]).abs());
            x[u] = next;
        }
        if change <= INPAINT_TOLERANCE {
            break;
        }
    }
    x
}

/// Inverse depth at `(x, y)` if valid.
#[inline]
fn inv_depth(frame: &DepthFrame, x: isize, y: isize) -> Option<f64> {
    let (w, h) = frame.dims();
    if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
        return None;
    }
    let z = *frame.get(x as usize, y as usize);
    (z > 0.0).then(|| 1.0 / z)
}

/// Pixel offsets `(a, b)` whose difference `P(b) - P(a)` gives the tangent
/// along one axis. Central differences are preferred; where inverse depth is
/// not locally affine the one-sided difference with the smaller residual wins.
fn tangent_offsets(frame: &DepthFrame, x: isize, y: isize, (sx, sy): (isize, isize)) -> Option<(isize, isize)> {
    let at = |k: isize| inv_depth(frame, x + k * sx, y + k * sy);
    let c = at(0)?;
    let residual = |a: Option<f64>, b: Option<f64>, m: f64| match (a, b) {
        (Some(a), Some(b)) => (a - 2.0 * m + b).abs(),
        _ => f64::INFINITY,
    };
    let (p1, m1) = (at(1), at(-1));
    let mut best: Option<((isize, isize), f64)> = None;
    let mut consider = |offsets: (isize, isize), ok: bool, r: f64| {
        if ok && best.is_none_or(|(_, b)| r < b) {
            best = Some((offsets, r));
        }
    };
    consider((-1, 1), p1.is_some() && m1.is_some(), residual(p1, m1, c));
    if let Some(p1v) = p1 {
        consider((0, 1), true, residual(Some(c), at(2), p1v));
    }
    if let Some(m1v) = m1 {
        consider((-1, 0), true, residual(Some(c), at(-2), m1v));
    }
    best.map(|(o, _)| o)
}

/// Per-pixel unit normals in the camera frame, oriented toward the camera.
/// Undefined at invalid pixels and at pixels lacking a valid neighbour
/// along either image axis.
pub fn estimate_normals(frame: &DepthFrame, k: &CameraIntrinsics) -> Result<NormalMap> {
    k.validate()?;
    let (w, h) = frame.dims();
    let point = |x: isize, y: isize| -> Point3<f64> {
        k.back_project(x as f64, y as f64, *frame.get(x as usize, y as usize))
    };
    Ok(Frame::from_fn(w, h, |x, y| {
        let (x, y) = (x as isize, y as isize);
        let (ax, bx) = tangent_offsets(frame, x, y, (1, 0))?;
        let (ay, by) = tangent_offsets(frame, x, y, (0, 1))?;
        let tx = point(x + bx, y) - point(x + ax, y);
        let ty = point(x, y + by) - point(x, y + ay);
        let n = tx.cross(&ty);
        let norm = n.norm();
        if !(norm > 0.0) {
            return None;
        }
        let n: Vector3<f64> = n / norm;
        Some(if n.dot(&point(x, y).coords) > 0.0 { -n } else { n })
    }))
}
