use std::f64::consts::PI;

use nalgebra::Point3;
use proptest::prelude::*;

use roomsynth::camera::{CameraIntrinsics, CameraPose};
use roomsynth::features::{dha_viewpoint_invariance_check, encode_dha, read_dha, write_dha};
use roomsynth::presets;
use roomsynth::render::RenderScene;
use roomsynth::scene::ClassTaxonomy;

fn scene() -> RenderScene {
    let (layout, _) = presets::furnished_bedroom();
    RenderScene::new(&layout, &ClassTaxonomy::indoor(), &Default::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn channels_well_formed_from_any_view(
        x in 0.6..3.9f64, y in 0.6..3.4f64, z in 1.0..1.8f64,
        yaw in -PI..PI, pitch in -0.5..0.17f64,
    ) {
        let k = CameraIntrinsics { width: 80, height: 60, fx: 71.25, fy: 71.25, cx: 40.0, cy: 30.0, ..CameraIntrinsics::default() };
        let pose = CameraPose::look(Point3::new(x, y, z), yaw, pitch);
        let (depth, _) = scene().render(&pose, &k).unwrap();
        let dha = encode_dha(&depth, &pose, &k, 0.0).unwrap();
        prop_assert_eq!(&dha.depth, &depth);
        prop_assert!(dha.angle.data().iter().all(|a| (0.0..=180.0).contains(a)));
        // The room spans heights [0, 2.6].
        for (&h, &d) in dha.height.data().iter().zip(depth.data()) {
            prop_assert!(d == 0.0 || (-1e-6..=2.6 + 1e-6).contains(&h));
        }
        let mut buf = Vec::new();
        write_dha(&dha, &mut buf).unwrap();
        prop_assert_eq!(read_dha(buf.as_slice()).unwrap().angle, dha.angle.map(|&a| a as f32 as f64));
    }
}

#[test]
fn height_and_angle_agree_across_views() {
    let s = scene();
    let k = CameraIntrinsics::default();
    let a = CameraPose::look(Point3::new(0.8, 2.0, 1.5), -0.4, -0.45);
    let b = CameraPose::look(Point3::new(2.2, 3.2, 1.2), -1.3, -0.35);
    let report = dha_viewpoint_invariance_check(&s, [&a, &b], &k).unwrap();
    assert!(report.matched > 100, "{report:?}");
    assert!(report.max_angle_diff <= 2.0, "{report:?}");
    assert!(report.max_height_diff <= 0.02, "{report:?}");
}
