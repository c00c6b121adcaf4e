use nalgebra::{Point3, Vector3};
use proptest::prelude::*;

use roomsynth::camera::{CameraIntrinsics, CameraPose};
use roomsynth::frame::{DepthFrame, Frame, NormalMap};
use roomsynth::mesh::TriMesh;
use roomsynth::render::rasterize;
use roomsynth::scene::ClassId;
use roomsynth::sensor::{add_noise, estimate_normals, inpaint, NoiseParams};

fn intrinsics(width: usize, height: usize, f: f64) -> CameraIntrinsics {
    CameraIntrinsics {
        width,
        height,
        fx: f,
        fy: f,
        cx: (width as f64 - 1.0) / 2.0,
        cy: (height as f64 - 1.0) / 2.0,
        near: 0.4,
        far: 8.0,
    }
}

/// Large quad through `center` with world-frame unit normal `n`.
fn plane(center: Point3<f64>, n: Vector3<f64>) -> TriMesh {
    let t1 = n.cross(&Vector3::z()).try_normalize(1e-9).unwrap_or(Vector3::y());
    let t2 = n.cross(&t1);
    let c = |a: f64, b: f64| center + t1 * a + t2 * b;
    TriMesh::quad([c(-30.0, -30.0), c(30.0, -30.0), c(30.0, 30.0), c(-30.0, 30.0)], ClassId(1))
}

fn looking_along_x() -> CameraPose {
    CameraPose::look(Point3::origin(), 0.0, 0.0)
}

#[test]
fn axial_noise_std_matches_quadratic_model() {
    let k = intrinsics(512, 256, 285.0);
    let clean = Frame::filled(512, 256, 2.0);
    let normals: NormalMap = Frame::filled(512, 256, Some(Vector3::new(0.0, 0.0, -1.0)));
    let params = NoiseParams {
        axial: [0.0, 0.0, 0.00285],
        ..NoiseParams::zero()
    };
    let noisy = add_noise(&clean, &normals, &k, &params, 99).unwrap();
    let n = noisy.len() as f64;
    let mean = noisy.data().iter().sum::<f64>() / n;
    let std = (noisy.data().iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(noisy.len() >= 100_000);
    assert!((std - 0.0114).abs() <= 0.03 * 0.0114, "std {std}");
    assert!((mean - 2.0).abs() < 1e-3);
}

#[test]
fn grazing_plane_is_dropped() {
    // Narrow field of view keeps every ray within a degree of 85° incidence.
    let k = intrinsics(64, 64, 3000.0);
    let a = 85f64.to_radians();
    let mesh = plane(Point3::new(3.0, 0.0, 0.0), Vector3::new(-a.cos(), a.sin(), 0.0));
    let (clean, _) = rasterize(&[mesh], &looking_along_x(), &k, ClassId(0)).unwrap();
    assert_eq!(clean.invalid_count(), 0);
    let normals = estimate_normals(&clean, &k).unwrap();
    let params = NoiseParams {
        grazing_dropout: 10f64.to_radians(),
        ..NoiseParams::zero()
    };
    let noisy = add_noise(&clean, &normals, &k, &params, 1).unwrap();
    assert!(noisy.invalid_count() as f64 >= 0.99 * noisy.len() as f64, "{} dropped", noisy.invalid_count());
}

#[test]
fn tilted_plane_normals_match_geometry() {
    let k = CameraIntrinsics::default();
    let a = 45f64.to_radians();
    let n_world = Vector3::new(-a.cos(), a.sin(), 0.0);
    let pose = looking_along_x();
    let (depth, _) = rasterize(&[plane(Point3::new(2.5, 0.0, 0.0), n_world)], &pose, &k, ClassId(0)).unwrap();
    let normals = estimate_normals(&depth, &k).unwrap();
    let n_cam = pose.rotation() * n_world;
    let mut checked = 0;
    for n in normals.data().iter().flatten() {
        let angle = n.dot(&n_cam).abs().min(1.0).acos().to_degrees();
        assert!(angle <= 1.0, "normal off by {angle} degrees");
        checked += 1;
    }
    assert!(checked > depth.len() / 2);
    // Unit length and oriented toward the camera.
    for (y, x) in [(120, 160), (10, 10), (200, 300)] {
        let n = normals.get(x, y).unwrap();
        let p = k.back_project(x as f64, y as f64, *depth.get(x, y));
        assert!((n.norm() - 1.0).abs() < 1e-12);
        assert!(n.dot(&p.coords) < 0.0);
    }
}

#[test]
fn stripe_across_ramp_respects_bounds() {
    let mut frame = Frame::from_fn(40, 30, |x, _| 1.0 + 0.05 * x as f64);
    for y in 0..30 {
        for x in 10..14 {
            frame.set(x, y, 0.0);
        }
    }
    let filled = inpaint(&frame, 3).unwrap();
    for y in 0..30 {
        for x in 10..14 {
            let v = *filled.get(x, y);
            assert!((1.0 + 0.05 * 9.0..=1.0 + 0.05 * 14.0).contains(&v), "({x}, {y}) = {v}");
        }
    }
}

fn frame_with_holes(width: usize, height: usize, values: &[f64], holes: &[bool]) -> DepthFrame {
    Frame::from_fn(width, height, |x, y| {
        let i = y * width + x;
        if holes[i % holes.len()] {
            0.0
        } else {
            values[i % values.len()]
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inpaint_keeps_constraints_and_bounds(
        values in proptest::collection::vec(0.5..6.0f64, 1..50),
        holes in proptest::collection::vec(proptest::bool::weighted(0.4), 1..97),
        kernel in prop_oneof![Just(3usize), Just(5), Just(7)],
    ) {
        let frame = frame_with_holes(17, 11, &values, &holes);
        prop_assume!(frame.valid_count() > 0);
        let filled = inpaint(&frame, kernel).unwrap();
        let valid: Vec<f64> = frame.data().iter().copied().filter(|&d| d > 0.0).collect();
        let lo = valid.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = valid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(filled.invalid_count(), 0);
        for (&a, &b) in frame.data().iter().zip(filled.data()) {
            if a > 0.0 {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            } else {
                prop_assert!(b >= lo - 1e-9 && b <= hi + 1e-9);
            }
        }
        prop_assert_eq!(inpaint(&filled, kernel).unwrap(), filled);
    }

    #[test]
    fn quantized_depth_lies_on_disparity_grid(z in 0.5..7.5f64, seed in 0u64..1000) {
        let k = intrinsics(24, 16, 285.0);
        let clean = Frame::filled(24, 16, z);
        let normals: NormalMap = Frame::filled(24, 16, Some(Vector3::new(0.0, 0.0, -1.0)));
        let params = NoiseParams::default();
        let noisy = add_noise(&clean, &normals, &k, &params, seed).unwrap();
        for &d in noisy.data().iter().filter(|&&d| d > 0.0) {
            let steps = k.fx * params.baseline / d / params.disparity_step;
            prop_assert!((steps - steps.round()).abs() < 1e-9 * steps.max(1.0), "{}", steps);
        }
        prop_assert_eq!(add_noise(&clean, &normals, &k, &params, seed).unwrap(), noisy);
    }

    #[test]
    fn zero_noise_is_bitwise_identity(values in proptest::collection::vec(0.0..8.0f64, 1..40), seed in 0u64..100) {
        let k = intrinsics(13, 9, 100.0);
        let clean = frame_with_holes(13, 9, &values, &[false]);
        let normals = estimate_normals(&clean, &k).unwrap();
        let out = add_noise(&clean, &normals, &k, &NoiseParams::zero(), seed).unwrap();
        prop_assert!(out.data().iter().zip(clean.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
