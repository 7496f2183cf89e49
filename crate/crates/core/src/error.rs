use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Datapath node at which an overflow was detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    /// `k * d1(n - l)`
    KProduct,
    /// accumulator `p`
    P,
    /// `m2 * p(n)`
    M2Product,
    /// accumulator `q`
    Q,
    /// `m1 * p(n)`
    M1Product,
    /// accumulator `s`
    S,
}

impl std::fmt::Display for Node {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Node::KProduct => "k*d1",
            Node::P => "p",
            Node::M2Product => "m2*p",
            Node::Q => "q",
            Node::M1Product => "m1*p",
            Node::S => "s",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} out of range")]
    ParamRange(&'static str),

    #[error("invalid parameter literal {literal:?}: expected k,l,m1,m2")]
    ParamSyntax { literal: String },

    #[error("input sample {value} at index {index} does not fit the 14-bit bus")]
    InputRange { index: usize, value: i64 },

    #[error("overflow at {node} (sample {index}) exceeds {bits}-bit accumulator")]
    Overflow { index: usize, node: Node, bits: u32 },

    #[error("domain error: {0}")]
    Domain(&'static str),

    #[error("length mismatch: {left} vs {right} samples")]
    LengthMismatch { left: usize, right: usize },

    #[error("no samples")]
    NoSamples,

    #[error("{}: line {line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("zero reference peak")]
    ZeroReferencePeak,

    #[error("degenerate fit: {0}")]
    DegenerateFit(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
