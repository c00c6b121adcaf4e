//! Python bindings. Structured values cross the boundary as JSON-compatible
//! dicts and lists; frames come back as flat row-major lists.

use std::path::PathBuf;

use nalgebra::Point3;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use roomsynth::annealer::{anneal as anneal_flat, anneal_hierarchical, scatter_objects, AnnealSchedule};
use roomsynth::camera::{CameraIntrinsics, CameraPose};
use roomsynth::energy::{total_energy as energy_of, ConstraintSet};
use roomsynth::error::Error;
use roomsynth::frame::Frame;
use roomsynth::metrics::{ConfusionMatrix, EvalReport};
use roomsynth::pipeline::{generate_dataset, PipelineConfig};
use roomsynth::presets;
use roomsynth::render::RenderScene;
use roomsynth::scene::{ClassId, ClassTaxonomy, SceneLayout};
use roomsynth::sensor::{add_noise, estimate_normals, inpaint, NoiseParams};

pyo3::create_exception!(roomsynth_py, RoomsynthError, pyo3::exceptions::PyException);

fn py_err(e: Error) -> PyErr {
    RoomsynthError::new_err(format!("{}: {e}", e.kind()))
}

fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn from_py<T: serde::de::DeserializeOwned>(py: Python<'_>, value: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = py.import("json")?.call_method1("dumps", (value,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn scene(py: Python<'_>, layout: &Bound<'_, PyAny>, constraints: Option<&Bound<'_, PyAny>>) -> PyResult<(SceneLayout, ConstraintSet)> {
    let layout: SceneLayout = from_py(py, layout)?;
    layout.validate().map_err(py_err)?;
    let constraints = match constraints {
        Some(c) => from_py(py, c)?,
        None => ConstraintSet::indoor_defaults(&ClassTaxonomy::indoor()),
    };
    Ok((layout, constraints))
}

/// Names of the built-in scenes.
#[pyfunction]
fn preset_names() -> Vec<&'static str> {
    presets::NAMES.to_vec()
}

/// `(layout, constraints)` of a built-in scene.
#[pyfunction]
fn preset(py: Python<'_>, name: &str) -> PyResult<(Py<PyAny>, Py<PyAny>)> {
    let (layout, constraints) =
        presets::by_name(name).ok_or_else(|| PyValueError::new_err(format!("unknown preset `{name}`")))?;
    Ok((to_py(py, &layout)?, to_py(py, &constraints)?))
}

/// Energy breakdown of a layout; indoor default constraints when none are given.
#[pyfunction]
#[pyo3(signature = (layout, constraints=None))]
fn total_energy(py: Python<'_>, layout: &Bound<'_, PyAny>, constraints: Option<&Bound<'_, PyAny>>) -> PyResult<Py<PyAny>> {
    let (layout, constraints) = scene(py, layout, constraints)?;
    to_py(py, &energy_of(&layout, &constraints))
}

/// Anneals a layout and returns the annealing result as a dict.
#[pyfunction]
#[pyo3(signature = (layout, seed, constraints=None, max_iterations=None, hierarchical=false, scatter=false))]
fn anneal(
    py: Python<'_>,
    layout: &Bound<'_, PyAny>,
    seed: u64,
    constraints: Option<&Bound<'_, PyAny>>,
    max_iterations: Option<usize>,
    hierarchical: bool,
    scatter: bool,
) -> PyResult<Py<PyAny>> {
    let (mut layout, constraints) = scene(py, layout, constraints)?;
    let mut schedule = AnnealSchedule::default();
    if let Some(m) = max_iterations {
        schedule.max_iterations = m;
    }
    if scatter {
        layout = scatter_objects(&layout, seed);
    }
    let result = py
        .detach(|| {
            if hierarchical {
                anneal_hierarchical(&layout, &constraints, &schedule, seed)
            } else {
                anneal_flat(&layout, &constraints, &schedule, seed)
            }
        })
        .map_err(py_err)?;
    to_py(py, &result)
}

/// Renders a layout from a camera at `position` looking along `yaw`/`pitch`
/// (radians). Returns a dict with `width`, `height`, `depth` and `labels`.
#[pyfunction]
#[pyo3(signature = (layout, position, yaw, pitch, intrinsics=None))]
fn render(
    py: Python<'_>,
    layout: &Bound<'_, PyAny>,
    position: [f64; 3],
    yaw: f64,
    pitch: f64,
    intrinsics: Option<&Bound<'_, PyAny>>,
) -> PyResult<Py<PyAny>> {
    let layout: SceneLayout = from_py(py, layout)?;
    let k: CameraIntrinsics = match intrinsics {
        Some(k) => from_py(py, k)?,
        None => CameraIntrinsics::default(),
    };
    let pose = CameraPose::look(Point3::from(position), yaw, pitch);
    let (depth, labels) = py
        .detach(|| {
            let scene = RenderScene::new(&layout, &ClassTaxonomy::indoor(), &Default::default())?;
            scene.render(&pose, &k)
        })
        .map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("width", depth.width())?;
    out.set_item("height", depth.height())?;
    out.set_item("depth", depth.data().to_vec())?;
    out.set_item("labels", labels.data().iter().map(|c| c.0).collect::<Vec<_>>())?;
    Ok(out.into_any().unbind())
}

/// Applies sensor noise then inpaints. Returns `(noisy, inpainted)` flat lists.
#[pyfunction]
#[pyo3(signature = (depth, width, height, seed, params=None, kernel=3, intrinsics=None))]
#[allow(clippy::too_many_arguments)]
fn corrupt(
    py: Python<'_>,
    depth: Vec<f64>,
    width: usize,
    height: usize,
    seed: u64,
    params: Option<&Bound<'_, PyAny>>,
    kernel: usize,
    intrinsics: Option<&Bound<'_, PyAny>>,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let params: NoiseParams = match params {
        Some(p) => from_py(py, p)?,
        None => NoiseParams::default(),
    };
    let k: CameraIntrinsics = match intrinsics {
        Some(k) => from_py(py, k)?,
        None => CameraIntrinsics::default(),
    };
    py.detach(|| {
        let clean = Frame::from_vec(width, height, depth)?;
        let normals = estimate_normals(&clean, &k)?;
        let noisy = add_noise(&clean, &normals, &k, &params, seed)?;
        let filled = inpaint(&noisy, kernel)?;
        Ok((noisy.into_vec(), filled.into_vec()))
    })
    .map_err(py_err)
}

/// Global, mean-class and per-class accuracy of flat label lists.
#[pyfunction]
fn evaluate(py: Python<'_>, gt: Vec<u16>, pred: Vec<u16>, width: usize, height: usize) -> PyResult<Py<PyAny>> {
    let taxonomy = ClassTaxonomy::indoor();
    let frame = |ids: Vec<u16>| Frame::from_vec(width, height, ids.into_iter().map(ClassId).collect());
    let report = (|| {
        let mut m = ConfusionMatrix::for_taxonomy(&taxonomy);
        m.accumulate(&frame(gt)?, &frame(pred)?)?;
        EvalReport::new(&m, &taxonomy)
    })()
    .map_err(py_err)?;
    to_py(py, &report)
}

/// Runs the full pipeline from a config file; returns the manifest.
#[pyfunction]
#[pyo3(signature = (config_path, output=None, frames=None))]
fn generate(py: Python<'_>, config_path: PathBuf, output: Option<PathBuf>, frames: Option<usize>) -> PyResult<Py<PyAny>> {
    let mut config = PipelineConfig::load(&config_path).map_err(py_err)?;
    if let Some(o) = output {
        config.output = o;
    }
    if let Some(f) = frames {
        config.frames = f;
    }
    let manifest = py.detach(|| generate_dataset(&config)).map_err(py_err)?;
    to_py(py, &manifest)
}

#[pymodule]
fn roomsynth_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RoomsynthError", m.py().get_type::<RoomsynthError>())?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add_function(wrap_pyfunction!(preset, m)?)?;
    m.add_function(wrap_pyfunction!(total_energy, m)?)?;
    m.add_function(wrap_pyfunction!(anneal, m)?)?;
    m.add_function(wrap_pyfunction!(render, m)?)?;
    m.add_function(wrap_pyfunction!(corrupt, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    Ok(())
}
