use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use roomsynth::features::read_dha;
use roomsynth::image_io::{read_depth_png, read_label_png};
use roomsynth::pipeline::{frame_name, generate_dataset, Manifest, PipelineConfig, FRAME_DIRS};
use roomsynth::priors::class_frequency;
use roomsynth::scene::ClassTaxonomy;

fn config(out: &Path, frames: usize) -> PipelineConfig {
    let mut c = PipelineConfig::new(11);
    c.frames = frames;
    c.output = out.to_path_buf();
    c
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn single_frame_artifacts_share_dims() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = generate_dataset(&config(tmp.path(), 1)).unwrap();
    assert_eq!(manifest.frames, 1);
    let name = frame_name(0);
    let dims = (manifest.width, manifest.height);
    for dir in ["depth_clean", "depth_noisy", "depth_inpainted"] {
        let f = read_depth_png(&tmp.path().join(dir).join(format!("{name}.png"))).unwrap();
        assert_eq!(f.dims(), dims, "{dir}");
    }
    assert_eq!(read_label_png(&tmp.path().join("labels").join(format!("{name}.png"))).unwrap().dims(), dims);
    let dha = read_dha(fs::File::open(tmp.path().join("dha").join(format!("{name}.bin"))).unwrap()).unwrap();
    assert_eq!(dha.dims(), dims);
    let inpainted = read_depth_png(&tmp.path().join("depth_inpainted").join(format!("{name}.png"))).unwrap();
    assert_eq!(inpainted.invalid_count(), 0);
    let on_disk: Manifest = serde_json::from_slice(&fs::read(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(on_disk, manifest);
    assert_eq!(fs::read_to_string(tmp.path().join("poses.txt")).unwrap().lines().filter(|l| !l.starts_with('#')).count(), 1);
}

#[test]
fn reruns_are_bit_identical_across_worker_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = generate_dataset(&config(a.path(), 3)).unwrap();
    let mut c = config(b.path(), 3);
    c.workers = Some(1);
    let mb = generate_dataset(&c).unwrap();
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    assert_eq!(ta.len(), tb.len());
    for ((na, da), (nb, db)) in ta.iter().zip(&tb) {
        assert_eq!(na, nb);
        // The manifest embeds the config hash, which covers `output` and `workers`.
        if na != "manifest.json" {
            assert!(da == db, "{na} differs");
        }
    }
    assert_ne!(ma.config_hash, mb.config_hash);
    assert_eq!(Manifest { config_hash: String::new(), ..ma }, Manifest { config_hash: String::new(), ..mb });
}

#[test]
fn fifty_frames_cover_four_object_classes() {
    let tmp = tempfile::tempdir().unwrap();
    generate_dataset(&config(tmp.path(), 50)).unwrap();
    let taxonomy = ClassTaxonomy::indoor();
    let frames: Vec<_> = (0..50)
        .map(|i| read_label_png(&tmp.path().join("labels").join(format!("{}.png", frame_name(i)))).unwrap())
        .collect();
    let freq = class_frequency(&frames, &taxonomy).unwrap();
    let structural: BTreeSet<_> = taxonomy.structural().into_iter().collect();
    let objects = taxonomy
        .iter()
        .filter(|(id, _)| !structural.contains(id) && *id != taxonomy.background() && freq[id.index()] > 0.0)
        .count();
    assert!(objects >= 4, "only {objects} object classes visible");
    for dir in FRAME_DIRS {
        assert_eq!(fs::read_dir(tmp.path().join(dir)).unwrap().count(), 50, "{dir}");
    }
}

#[test]
fn stage_errors_name_the_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = config(tmp.path(), 2);
    c.viewpoints.min_visible_classes = 40;
    let err = generate_dataset(&c).unwrap_err();
    assert!(err.to_string().contains("viewpoints"), "{err}");
}
