//! End-to-end dataset generation: arrange, sample viewpoints, render,
//! corrupt, inpaint and encode.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annealer::{anneal, anneal_hierarchical, AnnealSchedule};
use crate::camera::{format_trajectory, CameraIntrinsics, CameraPose};
use crate::energy::ConstraintSet;
use crate::error::{Error, Result};
use crate::features::{encode_dha, write_dha, write_dha_previews};
use crate::image_io::{write_depth_png, write_label_png};
use crate::mesh::{load_obj, MeshLibrary, ObjManifest};
use crate::presets;
use crate::render::{sample_viewpoints, RenderScene, ViewpointSampler};
use crate::scene::{ClassTaxonomy, SceneLayout};
use crate::seed::derive_seed;
use crate::sensor::{add_noise, estimate_normals, inpaint, NoiseParams};

/// An OBJ file and the group-to-class mapping for its faces.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeshSource {
    pub path: PathBuf,
    #[serde(flatten)]
    pub manifest: ObjManifest,
}

/// Every output is a function of this value. Relative paths resolve against
/// the directory of the file the config was loaded from.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub seed: u64,
    #[serde(default = "default_frames")]
    pub frames: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Taxonomy JSON; the built-in indoor taxonomy when absent.
    #[serde(default)]
    pub taxonomy: Option<PathBuf>,
    /// Constraint JSON; the preset's constraints when absent.
    #[serde(default)]
    pub constraints: Option<PathBuf>,
    /// Layout JSON; `preset` is used when absent.
    #[serde(default)]
    pub layout: Option<PathBuf>,
    #[serde(default = "default_preset")]
    pub preset: String,
    #[serde(default = "default_true")]
    pub arrange: bool,
    #[serde(default)]
    pub hierarchical: bool,
    #[serde(default)]
    pub schedule: AnnealSchedule,
    #[serde(default)]
    pub intrinsics: CameraIntrinsics,
    #[serde(default)]
    pub viewpoints: ViewpointSampler,
    #[serde(default)]
    pub noise: NoiseParams,
    #[serde(default = "default_kernel")]
    pub inpaint_kernel: usize,
    #[serde(default)]
    pub meshes: BTreeMap<String, MeshSource>,
    #[serde(default)]
    pub previews: bool,
    /// Worker threads; all available cores when absent.
    #[serde(default)]
    pub workers: Option<usize>,
}

fn default_frames() -> usize {
    10
}
fn default_output() -> PathBuf {
    PathBuf::from("dataset")
}
fn default_preset() -> String {
    "furnished_bedroom".into()
}
fn default_true() -> bool {
    true
}
fn default_kernel() -> usize {
    3
}

impl PipelineConfig {
    pub fn new(seed: u64) -> Self {
        serde_json::from_value(serde_json::json!({ "seed": seed })).expect("defaults deserialize")
    }

    /// Parses `path` and resolves its relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut config: Self = serde_json::from_reader(BufReader::new(fs::File::open(path)?))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.output);
        for p in [&mut self.taxonomy, &mut self.constraints, &mut self.layout].into_iter().flatten() {
            join(p);
        }
        for m in self.meshes.values_mut() {
            join(&mut m.path);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::Parameter("frames must be at least 1".into()));
        }
        if self.layout.is_none() && presets::by_name(&self.preset).is_none() {
            return Err(Error::Parameter(format!(
                "unknown preset `{}` (expected one of {:?})",
                self.preset,
                presets::NAMES
            )));
        }
        let files = [&self.taxonomy, &self.constraints, &self.layout].into_iter().flatten();
        for path in files.chain(self.meshes.values().map(|m| &m.path)) {
            if !path.is_file() {
                return Err(Error::Parameter(format!("referenced file {} does not exist", path.display())));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::Parameter("workers must be positive".into()));
        }
        self.schedule.validate()?;
        self.intrinsics.validate()?;
        self.viewpoints.validate()?;
        self.noise.validate()?;
        if self.inpaint_kernel < 3 || self.inpaint_kernel.is_multiple_of(2) {
            return Err(Error::Parameter(format!("inpaint kernel must be odd and >= 3, got {}", self.inpaint_kernel)));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(fs::File::open(path)?))?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Taxonomy, constraints, layout and meshes named by a config.
pub struct SceneInputs {
    pub taxonomy: ClassTaxonomy,
    pub constraints: ConstraintSet,
    pub layout: SceneLayout,
    pub library: MeshLibrary,
}

impl SceneInputs {
    pub fn load(config: &PipelineConfig) -> Result<Self> {
        let taxonomy = match &config.taxonomy {
            Some(p) => read_json(p)?,
            None => ClassTaxonomy::indoor(),
        };
        let preset = presets::by_name(&config.preset);
        let constraints = match (&config.constraints, &preset) {
            (Some(p), _) => read_json(p)?,
            (None, Some((_, c))) => c.clone(),
            (None, None) => ConstraintSet::indoor_defaults(&taxonomy),
        };
        let layout: SceneLayout = match (&config.layout, preset) {
            (Some(p), _) => read_json(p)?,
            (None, Some((l, _))) => l,
            (None, None) => return Err(Error::Parameter(format!("unknown preset `{}`", config.preset))),
        };
        layout.validate()?;
        constraints.validate(&taxonomy)?;
        let library = load_mesh_library(&config.meshes, &taxonomy)?;
        Ok(Self {
            taxonomy,
            constraints,
            layout,
            library,
        })
    }
}

pub fn load_mesh_library(sources: &BTreeMap<String, MeshSource>, taxonomy: &ClassTaxonomy) -> Result<MeshLibrary> {
    let mut library = MeshLibrary::new();
    for (key, source) in sources {
        let reader = BufReader::new(fs::File::open(&source.path)?);
        library.insert(key.clone(), load_obj(reader, &source.manifest, taxonomy)?);
    }
    Ok(library)
}

/// Seed of the noise stream for frame `i`.
pub fn noise_seed(seed: u64, i: usize) -> u64 {
    derive_seed(seed, STREAM_NOISE + i as u64)
}

/// Summary written to `manifest.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub frames: usize,
    pub seed: u64,
    pub config_hash: String,
    pub width: usize,
    pub height: usize,
    pub directories: Vec<String>,
    pub layout_energy: f64,
    pub layout_infeasible: bool,
    /// Labelled pixels per class name over all frames.
    pub label_pixels: BTreeMap<String, u64>,
}

pub const FRAME_DIRS: [&str; 5] = ["depth_clean", "depth_noisy", "depth_inpainted", "labels", "dha"];

/// Zero-padded frame file stem.
pub fn frame_name(i: usize) -> String {
    format!("{i:06}")
}

const STREAM_ARRANGE: u64 = 1;
const STREAM_VIEWPOINTS: u64 = 2;
const STREAM_NOISE: u64 = 1 << 32;

fn stage<T>(stage: &'static str, frame: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage,
        frame,
        source: Box::new(e),
    })
}

fn process_frame(
    config: &PipelineConfig,
    scene: &RenderScene,
    pose: &CameraPose,
    i: usize,
    classes: usize,
) -> Result<Vec<u64>> {
    let k = &config.intrinsics;
    let out = &config.output;
    let name = frame_name(i);
    let (clean, labels) = stage("render", i, scene.render(pose, k))?;
    let normals = stage("normals", i, estimate_normals(&clean, k))?;
    let noisy = stage("noise", i, add_noise(&clean, &normals, k, &config.noise, noise_seed(config.seed, i)))?;
    let filled = stage("inpaint", i, inpaint(&noisy, config.inpaint_kernel))?;
    let dha = stage("encode", i, encode_dha(&filled, pose, k, 0.0))?;
    stage("write", i, (|| {
        write_depth_png(&out.join("depth_clean").join(format!("{name}.png")), &clean)?;
        write_depth_png(&out.join("depth_noisy").join(format!("{name}.png")), &noisy)?;
        write_depth_png(&out.join("depth_inpainted").join(format!("{name}.png")), &filled)?;
        write_label_png(&out.join("labels").join(format!("{name}.png")), &labels)?;
        let mut w = BufWriter::new(fs::File::create(out.join("dha").join(format!("{name}.bin")))?);
        write_dha(&dha, &mut w)?;
        w.flush()?;
        if config.previews {
            write_dha_previews(&out.join("dha"), &name, &dha, k.far)?;
        }
        Ok(())
    })())?;
    let mut counts = vec![0u64; classes];
    for c in labels.data() {
        counts[c.index()] += 1;
    }
    Ok(counts)
}

/// Writes the dataset described by `config` and returns its manifest.
/// Output depends only on `config` and the files it references.
pub fn generate_dataset(config: &PipelineConfig) -> Result<Manifest> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Parameter(format!("worker pool: {e}")))?;
    pool.install(|| generate_in_pool(config))
}

fn generate_in_pool(config: &PipelineConfig) -> Result<Manifest> {
    let inputs = SceneInputs::load(config)?;
    let mut layout = inputs.layout.clone();
    let mut energy = crate::energy::total_energy(&layout, &inputs.constraints);
    let mut infeasible = false;
    if config.arrange {
        let seed = derive_seed(config.seed, STREAM_ARRANGE);
        let result = if config.hierarchical {
            anneal_hierarchical(&layout, &inputs.constraints, &config.schedule, seed)
        } else {
            anneal(&layout, &inputs.constraints, &config.schedule, seed)
        };
        let result = stage("arrange", 0, result)?;
        layout = result.best_layout;
        energy = result.best_energy;
        infeasible = result.infeasible;
    }
    let scene = RenderScene::new(&layout, &inputs.taxonomy, &inputs.library)?;
    let k = &config.intrinsics;
    let poses = stage(
        "viewpoints",
        0,
        sample_viewpoints(&layout, &scene, k, config.frames, &config.viewpoints, derive_seed(config.seed, STREAM_VIEWPOINTS)),
    )?;

    let out = &config.output;
    for dir in FRAME_DIRS {
        fs::create_dir_all(out.join(dir))?;
    }
    write_json(&out.join("layout.json"), &layout)?;
    fs::write(out.join("poses.txt"), format_trajectory(&poses))?;

    let counts = poses
        .par_iter()
        .enumerate()
        .map(|(i, pose)| process_frame(config, &scene, pose, i, inputs.taxonomy.len()))
        .collect::<Result<Vec<_>>>()?;
    let mut label_pixels = BTreeMap::new();
    for (id, name) in inputs.taxonomy.iter() {
        if id == inputs.taxonomy.background() {
            continue;
        }
        let n: u64 = counts.iter().map(|c| c[id.index()]).sum();
        label_pixels.insert(name.to_string(), n);
    }
    let manifest = Manifest {
        frames: poses.len(),
        seed: config.seed,
        config_hash: config.hash(),
        width: k.width,
        height: k.height,
        directories: FRAME_DIRS.iter().map(|s| s.to_string()).collect(),
        layout_energy: energy.total,
        layout_infeasible: infeasible,
        label_pixels,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}
