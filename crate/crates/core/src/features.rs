//! Depth / height / angle-with-gravity encoding of depth frames.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::camera::{CameraIntrinsics, CameraPose};
use crate::error::{Error, Result};
use crate::frame::{DepthFrame, Frame, LabelFrame};
use crate::image_io::encode_preview_png;
use crate::render::RenderScene;
use crate::sensor::estimate_normals;

/// Fill for pixels without a depth measurement.
pub const FILL_DEPTH: f64 = 0.0;
pub const FILL_HEIGHT: f64 = 0.0;
/// Also used for valid pixels whose normal is undefined.
pub const FILL_ANGLE: f64 = 90.0;

/// Three registered channels: depth (m), height above the floor (m) and
/// angle between the camera-facing surface normal and world up (degrees).
#[derive(Clone, Debug, PartialEq)]
pub struct DhaFrame {
    pub depth: DepthFrame,
    pub height: Frame<f64>,
    pub angle: Frame<f64>,
}

impl DhaFrame {
    pub fn dims(&self) -> (usize, usize) {
        self.depth.dims()
    }
}

pub fn encode_dha(frame: &DepthFrame, pose: &CameraPose, k: &CameraIntrinsics, floor_height: f64) -> Result<DhaFrame> {
    k.validate()?;
    frame.ensure_dims(k.dims())?;
    let normals = estimate_normals(frame, k)?;
    let up = pose.gravity_up();
    let (w, h) = frame.dims();
    let mut height = Frame::filled(w, h, FILL_HEIGHT);
    let mut angle = Frame::filled(w, h, FILL_ANGLE);
    for y in 0..h {
        for x in 0..w {
            let z = *frame.get(x, y);
            if z <= 0.0 {
                continue;
            }
            let world = pose.to_world(&k.back_project(x as f64, y as f64, z));
            height.set(x, y, world.z - floor_height);
            if let Some(n) = normals.get(x, y) {
                let cos = pose.direction_to_world(n).dot(&up).clamp(-1.0, 1.0);
                angle.set(x, y, cos.acos().to_degrees());
            }
        }
    }
    Ok(DhaFrame {
        depth: frame.clone(),
        height,
        angle,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct DhaHeader {
    width: usize,
    height: usize,
    channels: Vec<String>,
    units: Vec<String>,
    dtype: String,
}

impl DhaHeader {
    fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            channels: vec!["depth".into(), "height".into(), "angle".into()],
            units: vec!["m".into(), "m".into(), "deg".into()],
            dtype: "f32le".into(),
        }
    }
}

/// Layout: u32 LE header length, JSON header, then the depth, height and
/// angle planes as row-major f32 LE.
pub fn write_dha<W: Write>(dha: &DhaFrame, mut w: W) -> Result<()> {
    let (width, height) = dha.dims();
    let header = serde_json::to_vec(&DhaHeader::new(width, height))?;
    let len = u32::try_from(header.len()).map_err(|_| Error::Format("DHA header too long".into()))?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(width * height * 12);
    for plane in [&dha.depth, &dha.height, &dha.angle] {
        for &v in plane.data() {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_dha<R: Read>(mut r: R) -> Result<DhaFrame> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut header = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut header)?;
    let header: DhaHeader = serde_json::from_slice(&header)?;
    if header != DhaHeader::new(header.width, header.height) {
        return Err(Error::Format(format!("unsupported DHA header {header:?}")));
    }
    let n = header.width * header.height;
    let mut body = vec![0u8; n * 12];
    r.read_exact(&mut body)?;
    let mut planes = body
        .chunks_exact(n * 4)
        .map(|plane| {
            let values = plane
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
                .collect();
            Frame::from_vec(header.width, header.height, values)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter();
    let mut next = || planes.next().expect("three planes");
    Ok(DhaFrame {
        depth: next(),
        height: next(),
        angle: next(),
    })
}

/// Writes `<stem>_depth.png`, `<stem>_height.png` and `<stem>_angle.png`
/// into `dir`, mapping depth `[0, max_depth]`, height `[-0.5, 3.5]` m and
/// angle `[0, 180]` degrees onto 16-bit gray.
pub fn write_dha_previews(dir: &Path, stem: &str, dha: &DhaFrame, max_depth: f64) -> Result<()> {
    for (name, plane, lo, hi) in [
        ("depth", &dha.depth, 0.0, max_depth),
        ("height", &dha.height, -0.5, 3.5),
        ("angle", &dha.angle, 0.0, 180.0),
    ] {
        let file = std::fs::File::create(dir.join(format!("{stem}_{name}.png")))?;
        let mut w = std::io::BufWriter::new(file);
        encode_preview_png(plane, lo, hi, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

/// Largest channel disagreement over world points seen from both views.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub matched: usize,
    pub max_angle_diff: f64,
    pub max_height_diff: f64,
}

/// World points closer than this are treated as the same surface point.
pub const MATCH_RADIUS: f64 = 0.01;

/// A pixel qualifies for matching when its 3x3 neighbourhood is valid, shares
/// its label and has locally affine inverse depth, so its normal is not
/// blended across a crease or silhouette.
fn smooth_pixel(depth: &DepthFrame, labels: &LabelFrame, x: usize, y: usize) -> bool {
    let (w, h) = depth.dims();
    if x == 0 || y == 0 || x + 1 >= w || y + 1 >= h {
        return false;
    }
    let label = *labels.get(x, y);
    for ny in y - 1..=y + 1 {
        for nx in x - 1..=x + 1 {
            if *depth.get(nx, ny) <= 0.0 || *labels.get(nx, ny) != label {
                return false;
            }
        }
    }
    let iz = |x: usize, y: usize| 1.0 / depth.get(x, y);
    let c = iz(x, y);
    let tol = 1e-9 + 1e-6 * c;
    (iz(x - 1, y) - 2.0 * c + iz(x + 1, y)).abs() <= tol && (iz(x, y - 1) - 2.0 * c + iz(x, y + 1)).abs() <= tol
}

struct View {
    points: Vec<(Point3<f64>, usize)>,
    labels: LabelFrame,
    dha: DhaFrame,
}

/// Pixels whose whole neighbourhood within [`MATCH_RADIUS`] (measured on a
/// fronto-parallel surface at the pixel's depth) is smooth. Any surface point
/// within the radius then lies on the same plane, so matches never straddle
/// an edge.
fn matchable(depth: &DepthFrame, labels: &LabelFrame, k: &CameraIntrinsics) -> Vec<bool> {
    let (w, h) = depth.dims();
    // Summed-area table of non-smooth pixels.
    let mut rough = vec![0u32; (w + 1) * (h + 1)];
    for y in 0..h {
        for x in 0..w {
            let r = u32::from(!smooth_pixel(depth, labels, x, y));
            rough[(y + 1) * (w + 1) + x + 1] = r + rough[y * (w + 1) + x + 1] + rough[(y + 1) * (w + 1) + x] - rough[y * (w + 1) + x];
        }
    }
    let f = k.fx.max(k.fy);
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let z = *depth.get(x, y);
            if z <= 0.0 {
                continue;
            }
            let r = (MATCH_RADIUS * f / z).ceil() as usize + 1;
            if x < r || y < r || x + r >= w || y + r >= h {
                continue;
            }
            let (x0, y0, x1, y1) = (x - r, y - r, x + r + 1, y + r + 1);
            let count = rough[y1 * (w + 1) + x1] + rough[y0 * (w + 1) + x0] - rough[y0 * (w + 1) + x1] - rough[y1 * (w + 1) + x0];
            out[y * w + x] = count == 0;
        }
    }
    out
}

fn view(scene: &RenderScene, pose: &CameraPose, k: &CameraIntrinsics) -> Result<View> {
    let (depth, labels) = scene.render(pose, k)?;
    let dha = encode_dha(&depth, pose, k, 0.0)?;
    let (w, h) = depth.dims();
    let ok = matchable(&depth, &labels, k);
    let mut points = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if ok[y * w + x] {
                let p = pose.to_world(&k.back_project(x as f64, y as f64, *depth.get(x, y)));
                points.push((p, y * w + x));
            }
        }
    }
    Ok(View { points, labels, dha })
}

fn cell(p: &Point3<f64>) -> (i64, i64, i64) {
    let c = |v: f64| (v / MATCH_RADIUS).floor() as i64;
    (c(p.x), c(p.y), c(p.z))
}

/// Renders the scene from both poses (floor at height 0), matches
/// same-label pixels away from edges whose world points lie within
/// [`MATCH_RADIUS`], and
/// reports the largest height and angle differences.
pub fn dha_viewpoint_invariance_check(
    scene: &RenderScene,
    poses: [&CameraPose; 2],
    k: &CameraIntrinsics,
) -> Result<InvarianceReport> {
    let a = view(scene, poses[0], k)?;
    let b = view(scene, poses[1], k)?;
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (j, (p, _)) in b.points.iter().enumerate() {
        grid.entry(cell(p)).or_default().push(j);
    }
    let mut report = InvarianceReport {
        matched: 0,
        max_angle_diff: 0.0,
        max_height_diff: 0.0,
    };
    for (p, ia) in &a.points {
        let (cx, cy, cz) = cell(p);
        let mut best: Option<(f64, usize)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    for &j in grid.get(&(cx + dx, cy + dy, cz + dz)).into_iter().flatten() {
                        let (q, ib) = &b.points[j];
                        let d = (p - q).norm();
                        if d <= MATCH_RADIUS
                            && a.labels.data()[*ia] == b.labels.data()[*ib]
                            && best.is_none_or(|(bd, _)| d < bd)
                        {
                            best = Some((d, *ib));
                        }
                    }
                }
            }
        }
        if let Some((_, ib)) = best {
            report.matched += 1;
            let da = (a.dha.angle.data()[*ia] - b.dha.angle.data()[ib]).abs();
            let dh = (a.dha.height.data()[*ia] - b.dha.height.data()[ib]).abs();
            report.max_angle_diff = report.max_angle_diff.max(da);
            report.max_height_diff = report.max_height_diff.max(dh);
        }
    }
    if report.matched == 0 {
        return Err(Error::NoOverlap);
    }
    Ok(report)
}
