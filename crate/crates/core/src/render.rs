//! Software rasterizer producing planar depth and per-pixel class labels,
//! plus viewpoint sampling over a layout.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::{Point2, Point3, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{CameraIntrinsics, CameraPose};
use crate::error::{Error, Result};
use crate::frame::{DepthFrame, Frame, LabelFrame, INVALID_DEPTH};
use crate::mesh::{scene_meshes, MeshLibrary, TriMesh};
use crate::scene::{ClassId, ClassTaxonomy, SceneLayout};

/// Geometry ready for rendering together with the label conventions.
#[derive(Clone, Debug)]
pub struct RenderScene {
    pub meshes: Vec<TriMesh>,
    pub background: ClassId,
    /// Classes that never count as visible objects.
    pub structural: Vec<ClassId>,
}

impl RenderScene {
    pub fn new(layout: &SceneLayout, taxonomy: &ClassTaxonomy, library: &MeshLibrary) -> Result<Self> {
        Ok(Self {
            meshes: scene_meshes(layout, taxonomy, library)?,
            background: taxonomy.background(),
            structural: taxonomy.structural(),
        })
    }

    pub fn render(&self, pose: &CameraPose, k: &CameraIntrinsics) -> Result<(DepthFrame, LabelFrame)> {
        rasterize(&self.meshes, pose, k, self.background)
    }

    /// Distinct non-structural classes in `labels`.
    pub fn visible_classes(&self, labels: &LabelFrame) -> BTreeSet<ClassId> {
        labels.data().iter().copied().filter(|c| !self.structural.contains(c)).collect()
    }
}

#[derive(Clone, Copy)]
struct Vertex {
    screen: Point2<f64>,
    inv_z: f64,
}

/// Clips a camera-frame triangle to `z >= near`; yields 0, 3 or 4 vertices.
fn clip_near(tri: [Point3<f64>; 3], near: f64, out: &mut Vec<Point3<f64>>) {
    out.clear();
    for i in 0..3 {
        let (a, b) = (tri[i], tri[(i + 1) % 3]);
        let (ina, inb) = (a.z >= near, b.z >= near);
        if ina {
            out.push(a);
        }
        if ina != inb {
            let t = (near - a.z) / (b.z - a.z);
            let mut p = a + (b - a) * t;
            p.z = near;
            out.push(p);
        }
    }
}

#[inline]
fn edge(a: Point2<f64>, b: Point2<f64>, p: Point2<f64>) -> f64 {
    (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
}

struct Target<'a> {
    k: &'a CameraIntrinsics,
    depth: Vec<f64>,
    label: Vec<ClassId>,
}

impl Target<'_> {
    /// Fills pixels whose centers lie inside or on the triangle; depth is
    /// interpolated as 1/z, which is affine in screen space.
    fn fill(&mut self, v: [Vertex; 3], class: ClassId) {
        let area = edge(v[0].screen, v[1].screen, v[2].screen);
        if !(area.abs() > 1e-12) {
            return;
        }
        let (w, h) = (self.k.width as f64, self.k.height as f64);
        let min = v.iter().fold(Vector2::repeat(f64::INFINITY), |m, p| m.inf(&p.screen.coords));
        let max = v.iter().fold(Vector2::repeat(f64::NEG_INFINITY), |m, p| m.sup(&p.screen.coords));
        if max.x < 0.0 || max.y < 0.0 || min.x > w - 1.0 || min.y > h - 1.0 {
            return;
        }
        let x0 = min.x.max(0.0).ceil() as usize;
        let y0 = min.y.max(0.0).ceil() as usize;
        let x1 = max.x.min(w - 1.0).floor() as usize;
        let y1 = max.y.min(h - 1.0).floor() as usize;
        let inv_area = 1.0 / area;
        for y in y0..=y1 {
            for x in x0..=x1 {
                let p = Point2::new(x as f64, y as f64);
                let b0 = edge(v[1].screen, v[2].screen, p) * inv_area;
                let b1 = edge(v[2].screen, v[0].screen, p) * inv_area;
                let b2 = edge(v[0].screen, v[1].screen, p) * inv_area;
                if b0 < 0.0 || b1 < 0.0 || b2 < 0.0 {
                    continue;
                }
                let inv_z = b0 * v[0].inv_z + b1 * v[1].inv_z + b2 * v[2].inv_z;
                let z = (1.0 / inv_z).max(self.k.near);
                let i = y * self.k.width + x;
                if z <= self.k.far && z < self.depth[i] {
                    self.depth[i] = z;
                    self.label[i] = class;
                }
            }
        }
    }
}

/// Renders planar depth and labels. Pixels with no surface in `[near, far]`
/// get depth [`INVALID_DEPTH`] and label `background`.
pub fn rasterize(
    meshes: &[TriMesh],
    pose: &CameraPose,
    k: &CameraIntrinsics,
    background: ClassId,
) -> Result<(DepthFrame, LabelFrame)> {
    k.validate()?;
    let n = k.width * k.height;
    let mut target = Target {
        k,
        depth: vec![f64::INFINITY; n],
        label: vec![background; n],
    };
    let mut cam = Vec::new();
    let mut poly = Vec::with_capacity(4);
    for mesh in meshes {
        cam.clear();
        cam.extend(mesh.vertices().iter().map(|p| pose.to_camera(p)));
        for (tri, &class) in mesh.triangles().iter().zip(mesh.classes()) {
            clip_near(tri.map(|i| cam[i as usize]), k.near, &mut poly);
            if poly.len() < 3 {
                continue;
            }
            let vertex = |p: &Point3<f64>| Vertex {
                screen: k.project(p),
                inv_z: 1.0 / p.z,
            };
            let first = vertex(&poly[0]);
            for j in 1..poly.len() - 1 {
                target.fill([first, vertex(&poly[j]), vertex(&poly[j + 1])], class);
            }
        }
    }
    let depth = target
        .depth
        .into_iter()
        .map(|z| if z.is_finite() { z } else { INVALID_DEPTH })
        .collect();
    Ok((
        Frame::from_vec(k.width, k.height, depth)?,
        Frame::from_vec(k.width, k.height, target.label)?,
    ))
}

/// Random viewpoint distribution and acceptance rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ViewpointSampler {
    pub min_visible_classes: usize,
    /// Camera height range in meters.
    pub height: [f64; 2],
    /// Pitch range in degrees; positive looks up.
    pub pitch_deg: [f64; 2],
    /// Minimum clearance from walls and object footprints in meters.
    pub clearance: f64,
    /// Trial budget per requested pose; exhausting it is an error.
    pub trials_per_pose: usize,
}

impl Default for ViewpointSampler {
    fn default() -> Self {
        Self {
            min_visible_classes: 2,
            height: [1.0, 1.8],
            pitch_deg: [-30.0, 10.0],
            clearance: 0.1,
            trials_per_pose: 1000,
        }
    }
}

impl ViewpointSampler {
    pub fn validate(&self) -> Result<()> {
        let ordered = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
        if !ordered(self.height) || !ordered(self.pitch_deg) {
            return Err(Error::Parameter("viewpoint ranges must be finite and ordered".into()));
        }
        if self.pitch_deg[0] <= -90.0 || self.pitch_deg[1] >= 90.0 {
            return Err(Error::Parameter("pitch must stay within (-90, 90) degrees".into()));
        }
        if self.trials_per_pose == 0 || !(self.clearance >= 0.0) {
            return Err(Error::Parameter("trials_per_pose must be positive and clearance non-negative".into()));
        }
        Ok(())
    }

    fn in_free_space(&self, layout: &SceneLayout, p: Point3<f64>) -> bool {
        let c = self.clearance;
        let (w, d) = (layout.room.width(), layout.room.depth());
        if p.x < c || p.y < c || p.x > w - c || p.y > d - c {
            return false;
        }
        let xy = Vector2::new(p.x, p.y);
        !layout
            .objects
            .iter()
            .any(|o| p.z <= o.top_height() + c && o.footprint_contains(xy, c))
    }

    fn propose(&self, layout: &SceneLayout, rng: &mut ChaCha8Rng) -> Option<CameraPose> {
        let uniform = |rng: &mut ChaCha8Rng, r: [f64; 2]| r[0] + (r[1] - r[0]) * rng.random::<f64>();
        let p = Point3::new(
            rng.random::<f64>() * layout.room.width(),
            rng.random::<f64>() * layout.room.depth(),
            uniform(rng, self.height),
        );
        let yaw = uniform(rng, [-PI, PI]);
        let pitch = uniform(rng, self.pitch_deg).to_radians();
        self.in_free_space(layout, p).then(|| CameraPose::look(p, yaw, pitch))
    }
}

const SAMPLE_BATCH: usize = 32;

/// Rejection-samples `count` poses whose render shows at least
/// `min_visible_classes` non-structural classes. Deterministic for a seed.
pub fn sample_viewpoints(
    layout: &SceneLayout,
    scene: &RenderScene,
    k: &CameraIntrinsics,
    count: usize,
    sampler: &ViewpointSampler,
    seed: u64,
) -> Result<Vec<CameraPose>> {
    if count == 0 {
        return Err(Error::Parameter("viewpoint count must be at least 1".into()));
    }
    sampler.validate()?;
    k.validate()?;
    let budget = sampler.trials_per_pose.saturating_mul(count);
    let failure = |accepted: usize, trials: usize| Error::ViewpointSampling {
        requested: count,
        accepted,
        trials,
        min_visible: sampler.min_visible_classes,
    };
    let available: BTreeSet<ClassId> = layout
        .objects
        .iter()
        .map(|o| o.class)
        .filter(|c| !scene.structural.contains(c))
        .collect();
    if available.len() < sampler.min_visible_classes {
        return Err(failure(0, 0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut poses = Vec::with_capacity(count);
    let mut trials = 0;
    while poses.len() < count {
        if trials >= budget {
            return Err(failure(poses.len(), trials));
        }
        let batch: Vec<Option<CameraPose>> = (0..SAMPLE_BATCH.min(budget - trials))
            .map(|_| sampler.propose(layout, &mut rng))
            .collect();
        let verdicts: Vec<Result<bool>> = batch
            .par_iter()
            .map(|cand| match cand {
                None => Ok(false),
                Some(_) if sampler.min_visible_classes == 0 => Ok(true),
                Some(pose) => {
                    let (_, labels) = scene.render(pose, k)?;
                    Ok(scene.visible_classes(&labels).len() >= sampler.min_visible_classes)
                }
            })
            .collect();
        for (cand, verdict) in batch.into_iter().zip(verdicts) {
            if poses.len() == count {
                break;
            }
            trials += 1;
            if verdict? {
                poses.push(cand.expect("accepted poses exist"));
            }
        }
    }
    Ok(poses)
}

/// One frame pair per pose, in order.
pub fn render_trajectory(
    scene: &RenderScene,
    poses: &[CameraPose],
    k: &CameraIntrinsics,
) -> Result<Vec<(DepthFrame, LabelFrame)>> {
    if poses.is_empty() {
        return Err(Error::EmptyInput("trajectory has no poses"));
    }
    poses.par_iter().map(|p| scene.render(p, k)).collect()
}

/// `count` poses evenly spaced on a horizontal circle, all looking at `target`.
pub fn orbit(target: Point3<f64>, radius: f64, height: f64, count: usize) -> Result<Vec<CameraPose>> {
    if !(radius > 0.0) {
        return Err(Error::Parameter(format!("orbit radius must be positive, got {radius}")));
    }
    (0..count)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / count as f64;
            let eye = Point3::new(target.x + radius * a.cos(), target.y + radius * a.sin(), height);
            CameraPose::look_at(eye, target)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::default()
    }

    fn wall(z: f64, class: u16) -> TriMesh {
        let p = |x: f64, y: f64| Point3::new(x, y, z);
        TriMesh::quad([p(-50.0, -50.0), p(50.0, -50.0), p(50.0, 50.0), p(-50.0, 50.0)], ClassId(class))
    }

    fn identity() -> CameraPose {
        CameraPose::new(nalgebra::Matrix3::identity(), nalgebra::Vector3::zeros()).unwrap()
    }

    #[test]
    fn plane_fills_frame() {
        let (depth, labels) = rasterize(&[wall(2.0, 7)], &identity(), &k(), ClassId(0)).unwrap();
        assert!(depth.data().iter().all(|&d| (d - 2.0).abs() < 1e-12));
        assert!(labels.data().iter().all(|&c| c == ClassId(7)));
    }

    #[test]
    fn empty_scene_is_background() {
        let (depth, labels) = rasterize(&[], &identity(), &k(), ClassId(0)).unwrap();
        assert_eq!(depth.valid_count(), 0);
        assert!(labels.data().iter().all(|&c| c == ClassId(0)));
    }

    #[test]
    fn nearer_quad_wins() {
        for order in [[1.0, 2.0], [2.0, 1.0]] {
            let meshes = [wall(order[0], order[0] as u16), wall(order[1], order[1] as u16)];
            let (depth, labels) = rasterize(&meshes, &identity(), &k(), ClassId(0)).unwrap();
            assert!(depth.data().iter().all(|&d| (d - 1.0).abs() < 1e-12));
            assert!(labels.data().iter().all(|&c| c == ClassId(1)));
        }
    }

    #[test]
    fn beyond_far_is_invalid() {
        let (depth, _) = rasterize(&[wall(9.0, 1)], &identity(), &k(), ClassId(0)).unwrap();
        assert_eq!(depth.valid_count(), 0);
    }

    #[test]
    fn near_clipping_keeps_visible_part() {
        let tri = TriMesh::new(
            vec![Point3::new(0.0, 0.0, 0.1), Point3::new(-5.0, 1.0, 5.0), Point3::new(5.0, 1.0, 5.0)],
            vec![[0, 1, 2]],
            vec![ClassId(3)],
        )
        .unwrap();
        let (depth, labels) = rasterize(&[tri], &identity(), &k(), ClassId(0)).unwrap();
        assert!(depth.valid_count() > 0);
        for (&d, &c) in depth.data().iter().zip(labels.data()) {
            assert_eq!(d == 0.0, c == ClassId(0));
            assert!(d == 0.0 || (k().near..=k().far).contains(&d));
        }
    }

    #[test]
    fn viewpoints_empty_room_fail() {
        let (mut layout, _) = presets::bedroom();
        layout.objects.clear();
        let scene = RenderScene::new(&layout, &ClassTaxonomy::indoor(), &MeshLibrary::new()).unwrap();
        let sampler = ViewpointSampler {
            min_visible_classes: 1,
            ..Default::default()
        };
        let err = sample_viewpoints(&layout, &scene, &k(), 3, &sampler, 1).unwrap_err();
        assert!(matches!(err, Error::ViewpointSampling { .. }));
    }

    #[test]
    fn viewpoints_zero_min_always_accept() {
        let (layout, _) = presets::bedroom();
        let scene = RenderScene::new(&layout, &ClassTaxonomy::indoor(), &MeshLibrary::new()).unwrap();
        let sampler = ViewpointSampler {
            min_visible_classes: 0,
            ..Default::default()
        };
        let poses = sample_viewpoints(&layout, &scene, &k(), 4, &sampler, 1).unwrap();
        assert_eq!(poses.len(), 4);
    }
}
