//! Experiment configuration.
//!
//! A configuration is a TOML document; see `configs/` and the README for the
//! full grammar. Every field except `experiment` has a default, and the
//! command line can override the experiment, seed, radii and output
//! directory.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use convdom_core::{GroupKind, TiledGroup, Transversal, WindowShape};
use serde::{Deserialize, Serialize};

use crate::error::{RunError, RunResult};
use crate::preset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Norms,
    MultiplyCheck,
    Invert,
    Spectral,
    Folner,
    Overlap,
    Intertwine,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Norms => "norms",
            Experiment::MultiplyCheck => "multiply-check",
            Experiment::Invert => "invert",
            Experiment::Spectral => "spectral",
            Experiment::Folner => "folner",
            Experiment::Overlap => "overlap",
            Experiment::Intertwine => "intertwine",
        }
    }

    fn needs_operator(self) -> bool {
        matches!(self, Experiment::Norms | Experiment::Invert | Experiment::Spectral)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupName {
    #[serde(rename = "Z^d", alias = "Z", alias = "lattice")]
    Lattice,
    #[serde(rename = "heisenberg")]
    Heisenberg,
    #[serde(rename = "ZxS3")]
    ZxS3,
    #[serde(rename = "Rd_grid", alias = "grid")]
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransversalName {
    Fixed,
    Alternating,
}

/// `[group]` table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub kind: GroupName,
    pub d: Option<usize>,
    pub q: Option<u32>,
    pub transversal: Option<TransversalName>,
}

impl GroupSpec {
    pub fn build(&self) -> RunResult<TiledGroup> {
        let invalid = |s: &str| RunError::Validation(s.to_string());
        match self.kind {
            GroupName::Lattice => {
                if self.q.is_some() || self.transversal.is_some() {
                    return Err(invalid("Z^d takes only d"));
                }
                Ok(TiledGroup::lattice(self.d.unwrap_or(1))?)
            }
            GroupName::Heisenberg => {
                if self.d.is_some_and(|d| d != 3) || self.q.is_some() || self.transversal.is_some() {
                    return Err(invalid("heisenberg takes no parameters"));
                }
                Ok(TiledGroup::heisenberg())
            }
            GroupName::ZxS3 => {
                if self.d.is_some() || self.q.is_some() {
                    return Err(invalid("ZxS3 takes only transversal"));
                }
                Ok(TiledGroup::z_x_s3(match self.transversal.unwrap_or(TransversalName::Fixed) {
                    TransversalName::Fixed => Transversal::Fixed,
                    TransversalName::Alternating => Transversal::Alternating,
                }))
            }
            GroupName::Grid => {
                if self.transversal.is_some() {
                    return Err(invalid("Rd_grid takes d and q"));
                }
                let q = self.q.ok_or_else(|| invalid("Rd_grid needs q"))?;
                if q == 0 {
                    return Err(invalid("q must be at least 1"));
                }
                Ok(TiledGroup::grid(self.d.unwrap_or(1), q)?)
            }
        }
    }

    pub fn of(group: &TiledGroup) -> Self {
        let mut spec = GroupSpec { kind: GroupName::Lattice, d: None, q: None, transversal: None };
        match group.kind() {
            GroupKind::Lattice { dim } => spec.d = Some(dim),
            GroupKind::Heisenberg => spec.kind = GroupName::Heisenberg,
            GroupKind::ZxS3 { transversal } => {
                spec.kind = GroupName::ZxS3;
                spec.transversal = Some(match transversal {
                    Transversal::Fixed => TransversalName::Fixed,
                    Transversal::Alternating => TransversalName::Alternating,
                });
            }
            GroupKind::Grid { dim, q } => {
                spec.kind = GroupName::Grid;
                spec.d = Some(dim);
                spec.q = Some(q);
            }
        }
        spec
    }
}

/// One-line form used in file headers: `Z^d d=2`, `heisenberg`,
/// `ZxS3 transversal=fixed`, `Rd_grid d=1 q=4`.
impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            GroupName::Lattice => write!(f, "Z^d d={}", self.d.unwrap_or(1)),
            GroupName::Heisenberg => write!(f, "heisenberg"),
            GroupName::ZxS3 => {
                let t = match self.transversal.unwrap_or(TransversalName::Fixed) {
                    TransversalName::Fixed => "fixed",
                    TransversalName::Alternating => "alternating",
                };
                write!(f, "ZxS3 transversal={t}")
            }
            GroupName::Grid => write!(f, "Rd_grid d={} q={}", self.d.unwrap_or(1), self.q.unwrap_or(1)),
        }
    }
}

impl FromStr for GroupSpec {
    type Err = RunError;

    fn from_str(s: &str) -> RunResult<Self> {
        let bad = || RunError::Parse(format!("group line {s:?}"));
        let mut words = s.split_whitespace();
        let kind = match words.next().ok_or_else(bad)? {
            "Z^d" => GroupName::Lattice,
            "heisenberg" => GroupName::Heisenberg,
            "ZxS3" => GroupName::ZxS3,
            "Rd_grid" => GroupName::Grid,
            _ => return Err(bad()),
        };
        let mut spec = GroupSpec { kind, d: None, q: None, transversal: None };
        for w in words {
            let (k, v) = w.split_once('=').ok_or_else(bad)?;
            match k {
                "d" => spec.d = Some(v.parse().map_err(|_| bad())?),
                "q" => spec.q = Some(v.parse().map_err(|_| bad())?),
                "transversal" => {
                    spec.transversal = Some(match v {
                        "fixed" => TransversalName::Fixed,
                        "alternating" => TransversalName::Alternating,
                        _ => return Err(bad()),
                    })
                }
                _ => return Err(bad()),
            }
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeName {
    Box,
    Ball,
}

impl From<ShapeName> for WindowShape {
    fn from(s: ShapeName) -> Self {
        match s {
            ShapeName::Box => WindowShape::Box,
            ShapeName::Ball => WindowShape::Ball,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    /// Defaults to `ball` for the Heisenberg group and `box` otherwise.
    pub shape: Option<ShapeName>,
    #[serde(default)]
    pub radii: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    /// `c · m·I`: a multiple of the identity kernel, so `c·λ_l` on diagonal `l`.
    #[default]
    Identity,
    /// Every kernel value equal to `c`.
    Constant,
}

/// One constant diagonal of an explicit operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagonalSpec {
    pub label: String,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    #[serde(default)]
    pub kind: BlockKind,
    /// Binary block file; overrides `re`, `im` and `kind`.
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub preset: Option<String>,
    #[serde(default)]
    pub diagonals: Vec<DiagonalSpec>,
    /// Matrix file; its window must contain every configured window.
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Largest accepted finite-section residual.
    pub residual: f64,
    /// Largest final aggregate increment for a stable verdict.
    pub stability: f64,
    /// Relative tolerance of oracle comparisons.
    pub relative: f64,
    /// Følner epsilons.
    pub epsilon: Vec<f64>,
    /// Largest Følner search radius.
    pub folner_radius: usize,
    /// Powers used by the spectral experiment.
    pub n_max: usize,
    /// Random cases for multiply-check and overlap.
    pub cases: usize,
    pub power_tol: f64,
    pub power_iter: usize,
    /// Sections with more unknowns are solved iteratively.
    pub dense_limit: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-8,
            stability: 0.02,
            relative: 1e-12,
            epsilon: vec![0.2, 0.1],
            folner_radius: 400,
            n_max: 32,
            cases: 200,
            power_tol: 1e-12,
            power_iter: 100_000,
            dense_limit: 1200,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    pub group: Option<GroupSpec>,
    #[serde(default)]
    pub window: WindowSpec,
    pub operator: Option<OperatorSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base: PathBuf,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            seed: 0,
            group: None,
            window: WindowSpec::default(),
            operator: None,
            tolerances: Tolerances::default(),
            output: OutputSpec::default(),
            base: PathBuf::from("."),
        }
    }

    pub fn parse(text: &str) -> RunResult<Self> {
        toml::from_str(text).map_err(|e| RunError::Parse(e.message().to_string()))
    }

    pub fn load(path: &Path) -> RunResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Parse(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    /// The configured group, else the default group of the preset, else `ℤ`.
    pub fn group(&self) -> RunResult<TiledGroup> {
        if let Some(g) = &self.group {
            return g.build();
        }
        let preset = self.operator.as_ref().and_then(|o| o.preset.as_deref());
        match preset.map(preset::lookup).transpose()?.and_then(|p| p.default_group) {
            Some(g) => Ok(g),
            None => Ok(TiledGroup::lattice(1)?),
        }
    }

    pub fn shape(&self, group: &TiledGroup) -> WindowShape {
        match self.window.shape {
            Some(s) => s.into(),
            None if matches!(group.kind(), GroupKind::Heisenberg) => WindowShape::Ball,
            None => WindowShape::Box,
        }
    }

    pub fn validate(&self) -> RunResult<()> {
        let invalid = |s: String| Err(RunError::Validation(s));
        let group = self.group()?;
        let r = &self.window.radii;
        if r.is_empty() && self.experiment != Experiment::Folner {
            return invalid("window.radii is empty".into());
        }
        if !r.windows(2).all(|w| w[0] < w[1]) {
            return invalid(format!("window.radii must be increasing, got {r:?}"));
        }
        if self.experiment == Experiment::Invert && r.len() < 3 {
            return invalid("invert needs at least three radii".into());
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("residual", t.residual),
            ("stability", t.stability),
            ("relative", t.relative),
            ("power_tol", t.power_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("tolerances.{name} must be positive, got {v}"));
            }
        }
        if t.epsilon.is_empty() || t.epsilon.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return invalid(format!("tolerances.epsilon must be positive, got {:?}", t.epsilon));
        }
        for (name, v) in [("n_max", t.n_max), ("cases", t.cases), ("power_iter", t.power_iter), ("folner_radius", t.folner_radius)] {
            if v == 0 {
                return invalid(format!("tolerances.{name} must be at least 1"));
            }
        }
        match &self.operator {
            None if self.experiment.needs_operator() => {
                return invalid(format!("{} needs an [operator]", self.experiment.name()));
            }
            None => {}
            Some(op) => {
                let given = op.preset.is_some() as u8 + !op.diagonals.is_empty() as u8 + op.file.is_some() as u8;
                if given != 1 {
                    return invalid("[operator] needs exactly one of preset, diagonals, file".into());
                }
                if let Some(p) = &op.preset {
                    preset::lookup(p)?.check_group(&group)?;
                }
                for d in &op.diagonals {
                    group.parse_label(&d.label)?;
                    if !(d.re.is_finite() && d.im.is_finite()) {
                        return invalid(format!("diagonal {} has a non-finite coefficient", d.label));
                    }
                }
            }
        }
        Ok(())
    }
}
