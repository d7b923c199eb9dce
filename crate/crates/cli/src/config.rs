//! On-disk run configuration. Relative paths resolve against the directory of
//! the file that mentions them.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use quasidiff::boundary::ParameterFile;
use quasidiff::potential::{ComplexValue, PotentialFile};
use quasidiff::Sign;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Spectrum,
    Resolvent,
    Green,
    Converge,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Resolvent => "resolvent",
            Command::Green => "green",
            Command::Converge => "converge",
            Command::Verify => "verify",
        }
    }
}

/// Either a path to a separate file or the same content inline.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Path(String),
    Inline(T),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub threads: Option<usize>,
    pub out: Option<String>,
    pub operator: Option<OperatorSection>,
    pub extension: Option<ExtensionSection>,
    pub spectrum: Option<SpectrumSection>,
    pub resolvent: Option<ResolventSection>,
    pub green: Option<GreenSection>,
    pub converge: Option<ConvergeSection>,
    pub verify: Option<VerifySection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    pub order: usize,
    pub potential: Option<Source<PotentialFile>>,
    /// `Q ≡ 0` on this interval when no potential is given.
    pub interval: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcKind {
    Periodic,
    Antiperiodic,
    Dirichlet,
    Matrices,
    Parameter,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSection {
    pub alpha: ComplexValue,
    pub beta: ComplexValue,
    pub gamma: ComplexValue,
    pub delta: ComplexValue,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionSection {
    pub kind: BcKind,
    /// Rows of `α` and `β` for `kind = "matrices"`.
    pub alpha: Option<Vec<Vec<ComplexValue>>>,
    pub beta: Option<Vec<Vec<ComplexValue>>>,
    pub parameter: Option<Source<ParameterFile>>,
    pub sign: Option<Sign>,
    #[serde(default)]
    pub self_adjoint: bool,
    pub coefficients: Option<CoefficientSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectSection {
    pub re: [f64; 2],
    pub im: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    pub window: Option<[f64; 2]>,
    pub rectangle: Option<RectSection>,
    pub samples: Option<usize>,
    pub tol_eig: Option<f64>,
    pub tol: Option<f64>,
    pub file: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventSection {
    pub lambda: ComplexValue,
    pub load: Source<PotentialFile>,
    pub nodes: Option<usize>,
    pub tol: Option<f64>,
    pub file: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenSection {
    pub lambda: ComplexValue,
    pub nodes: Option<usize>,
    pub tol: Option<f64>,
    pub file: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSection {
    pub family: Source<FamilyFile>,
    pub lambda: ComplexValue,
    pub nodes: Option<usize>,
    pub window: Option<[f64; 2]>,
    pub tol: Option<f64>,
    pub file: Option<String>,
    pub levin_file: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Delta,
    Oscillating,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyFile {
    pub kind: FamilyKind,
    pub eps: Vec<f64>,
    pub interval: Option<[f64; 2]>,
    pub center: Option<f64>,
    pub strength: Option<ComplexValue>,
    pub base: Option<Source<PotentialFile>>,
    pub amplitude: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub seed: Option<u64>,
    pub pairs: Option<usize>,
    pub orders: Option<Vec<usize>>,
    pub file: Option<String>,
}

/// Parsed TOML of type `T` from `path`, errors tagged with `field`.
pub fn read_toml<T: serde::de::DeserializeOwned>(path: &Path, field: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::validation(field, format!("cannot read {}: {e}", path.display()))
    })?;
    toml::from_str(&text).map_err(|e| CliError::validation(field, format!("{}: {e}", path.display())))
}

/// Loads a [`Source`], returning the content and the directory that its own
/// relative paths resolve against.
pub fn resolve<T: serde::de::DeserializeOwned + Clone>(
    src: &Source<T>,
    base: &Path,
    field: &str,
) -> Result<(T, PathBuf), CliError> {
    match src {
        Source::Inline(v) => Ok((v.clone(), base.to_path_buf())),
        Source::Path(p) => {
            let path = base.join(p);
            let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
            Ok((read_toml(&path, field)?, dir))
        }
    }
}
