use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid taxonomy: {0}")]
    Taxonomy(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid layout: {0}")]
    Layout(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("obj parse error at line {line}: {message}")]
    Obj { line: usize, message: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("no labelled pixels")]
    NoLabelledPixels,

    #[error("viewpoint sampling failed: {accepted} of {requested} poses accepted after {trials} trials (need at least {min_visible} visible object classes)")]
    ViewpointSampling {
        requested: usize,
        accepted: usize,
        trials: usize,
        min_visible: usize,
    },

    #[error("depth frame has no valid pixels")]
    AllInvalid,

    #[error("normals missing or not registered to depth frame")]
    MissingNormals,

    #[error("views share no common surface points")]
    NoOverlap,

    #[error("png: {0}")]
    Png(String),

    #[error("format: {0}")]
    Format(String),

    #[error("stage `{stage}` failed at frame {frame}: {source}")]
    Stage {
        stage: &'static str,
        frame: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Taxonomy(_) => "taxonomy",
            Error::Geometry(_) => "geometry",
            Error::Layout(_) => "layout",
            Error::Parameter(_) => "parameter",
            Error::Obj { .. } => "obj",
            Error::EmptyInput(_) => "empty_input",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NoLabelledPixels => "no_labelled_pixels",
            Error::ViewpointSampling { .. } => "viewpoint_sampling",
            Error::AllInvalid => "all_invalid",
            Error::MissingNormals => "missing_normals",
            Error::NoOverlap => "no_overlap",
            Error::Png(_) => "png",
            Error::Format(_) => "format",
            Error::Stage { .. } => "stage",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
