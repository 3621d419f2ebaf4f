//! Run configuration: a TOML file with one block per ingredient.
//!
//! Every block rejects unknown keys. Task-specific requirements are checked
//! after parsing and reported as `file:line: message`, anchored at the block
//! that is incomplete or, for an absent block, at the `task` key or line 1.

use std::ops::Range;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::eigen::{EigenOptions, ExponentPair};
use crate::error::{Error, Result};
use crate::geometry::{Field, Grid};
use crate::operators::{Coef, LinearOp, OperatorSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Eigen,
    Curve,
    Solve,
    MpCheck,
    AmpScan,
    SmallDomain,
    Isolation,
    VerifyFucik,
    VerifyScalar,
}

impl Task {
    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Eigen => "eigen",
            Task::Curve => "curve",
            Task::Solve => "solve",
            Task::MpCheck => "mp-check",
            Task::AmpScan => "amp-scan",
            Task::SmallDomain => "small-domain",
            Task::Isolation => "isolation",
            Task::VerifyFucik => "verify-fucik",
            Task::VerifyScalar => "verify-scalar",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub extents: Vec<[f64; 2]>,
    pub n: Vec<usize>,
}

impl GridBlock {
    pub fn build(&self) -> Result<Arc<Grid>> {
        let ext: Vec<(f64, f64)> = self.extents.iter().map(|e| (e[0], e[1])).collect();
        Grid::uniform(&ext, &self.n)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorsBlock {
    pub f1: OperatorSpec,
    pub f2: OperatorSpec,
}

fn unit() -> Coef {
    Coef::Const(1.0)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsBlock {
    #[serde(default = "unit")]
    pub tau1: Coef,
    #[serde(default = "unit")]
    pub tau2: Coef,
}

impl Default for WeightsBlock {
    fn default() -> Self {
        WeightsBlock {
            tau1: unit(),
            tau2: unit(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsBlock {
    pub p: f64,
    pub q: f64,
}

impl ExponentsBlock {
    pub fn pair(&self) -> Result<ExponentPair> {
        ExponentPair::new(self.p, self.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    /// Damped Picard, then Newton on failure.
    #[default]
    Auto,
    Picard,
    Newton,
    /// Monotone iteration for data of one sign.
    Monotone,
    /// Monotone iteration from the explicit subsolution (`pq < 1`).
    Sublinear,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametersBlock {
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    /// Explicit diagonal samples.
    pub lambdas: Option<Vec<f64>>,
    /// `[lo, hi]` for sampled ranges.
    pub lambda_range: Option<[f64; 2]>,
    pub samples: Option<usize>,
    /// Relative offsets above the negative principal value.
    pub deltas: Option<Vec<f64>>,
    #[serde(default)]
    pub method: SolveMethod,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataBlock {
    pub f1: Coef,
    pub f2: Coef,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesBlock {
    pub eigen_tol: Option<f64>,
    pub eigen_max_iter: Option<usize>,
    pub solve_tol: Option<f64>,
    pub solve_max_iter: Option<usize>,
}

impl TolerancesBlock {
    pub fn eigen_options(&self) -> EigenOptions {
        let mut o = EigenOptions::default();
        if let Some(t) = self.eigen_tol {
            o.tol = t;
        }
        if let Some(m) = self.eigen_max_iter {
            o.max_iter = m;
        }
        o
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryBlock {
    #[serde(default = "default_battery")]
    pub count: usize,
    #[serde(default = "one")]
    pub amplitude: f64,
}

impl Default for BatteryBlock {
    fn default() -> Self {
        BatteryBlock {
            count: default_battery(),
            amplitude: 1.0,
        }
    }
}

fn default_battery() -> usize {
    16
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmallDomainBlock {
    pub n: Option<usize>,
    pub battery: Option<usize>,
    pub amplitude: Option<f64>,
    pub length_range: Option<[f64; 2]>,
    pub weight_length: Option<f64>,
    pub weight_range: Option<[f64; 2]>,
    pub bisections: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsolationBlock {
    pub starts: Option<usize>,
    pub sweeps: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FucikBlock {
    pub kappa: f64,
    /// Base operator; the Laplacian when absent.
    pub base: Option<LinearOp>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarBlock {
    pub operator: OperatorSpec,
    #[serde(default = "unit")]
    pub weight: Coef,
    pub expected_plus: Option<f64>,
    pub expected_minus: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Option<Spanned<Task>>,
    pub output: Option<String>,
    pub grid: Option<Spanned<GridBlock>>,
    pub operators: Option<Spanned<OperatorsBlock>>,
    pub weights: Option<Spanned<WeightsBlock>>,
    pub exponents: Option<Spanned<ExponentsBlock>>,
    pub parameters: Option<Spanned<ParametersBlock>>,
    pub data: Option<Spanned<DataBlock>>,
    pub tolerances: Option<Spanned<TolerancesBlock>>,
    pub battery: Option<Spanned<BatteryBlock>>,
    pub small_domain: Option<Spanned<SmallDomainBlock>>,
    pub isolation: Option<Spanned<IsolationBlock>>,
    pub fucik: Option<Spanned<FucikBlock>>,
    pub scalar: Option<Spanned<ScalarBlock>>,
}

/// A parsed config together with its source, for line-anchored messages.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: String,
    pub source: String,
    pub config: RunConfig,
}

fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

impl LoadedConfig {
    pub fn parse(path: &str, source: String) -> Result<Self> {
        match toml::from_str::<RunConfig>(&source) {
            Ok(config) => Ok(LoadedConfig {
                path: path.into(),
                source,
                config,
            }),
            Err(e) => {
                let line = e.span().map(|s| line_of(&source, s.start)).unwrap_or(1);
                Err(Error::Config(format!("{path}:{line}: {}", e.message().trim())))
            }
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let source = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}:1: cannot read config: {e}", path.display())))?;
        LoadedConfig::parse(&path.display().to_string(), source)
    }

    pub fn error_at(&self, span: Option<Range<usize>>, msg: impl std::fmt::Display) -> Error {
        let line = span.map(|s| line_of(&self.source, s.start)).unwrap_or(1);
        Error::Config(format!("{}:{line}: {msg}", self.path))
    }

    fn absent(&self, block: &str, task: Task) -> Error {
        let span = self.config.task.as_ref().map(|t| t.span());
        self.error_at(span, format!("task `{}` requires a [{block}] block", task.as_str()))
    }

    /// Checks the task in the file, if any, against the requested one.
    pub fn check_task(&self, task: Task) -> Result<()> {
        match &self.config.task {
            Some(t) if *t.get_ref() != task => Err(self.error_at(
                Some(t.span()),
                format!("config is for task `{}`, not `{}`", t.get_ref().as_str(), task.as_str()),
            )),
            _ => Ok(()),
        }
    }

    pub fn grid(&self, task: Task) -> Result<Arc<Grid>> {
        let g = self.config.grid.as_ref().ok_or_else(|| self.absent("grid", task))?;
        g.get_ref()
            .build()
            .map_err(|e| self.error_at(Some(g.span()), e))
    }

    pub fn operators(&self, task: Task) -> Result<&OperatorsBlock> {
        self.config
            .operators
            .as_ref()
            .map(|o| o.get_ref())
            .ok_or_else(|| self.absent("operators", task))
    }

    pub fn exponents(&self, task: Task) -> Result<ExponentPair> {
        let e = self
            .config
            .exponents
            .as_ref()
            .ok_or_else(|| self.absent("exponents", task))?;
        e.get_ref().pair().map_err(|err| self.error_at(Some(e.span()), err))
    }

    /// Weight fields, defaulting to 1.
    pub fn weights(&self, grid: &Arc<Grid>) -> Result<(Field, Field)> {
        let (w, span) = match &self.config.weights {
            Some(w) => (w.get_ref().clone(), Some(w.span())),
            None => (WeightsBlock::default(), None),
        };
        let f = |c: &Coef| -> Result<Field> {
            Field::from_values(grid, c.sample(grid)?)
        };
        Ok((
            f(&w.tau1).map_err(|e| self.error_at(span.clone(), e))?,
            f(&w.tau2).map_err(|e| self.error_at(span.clone(), e))?,
        ))
    }

    pub fn weight_coefs(&self) -> (Coef, Coef) {
        let w = self
            .config
            .weights
            .as_ref()
            .map(|w| w.get_ref().clone())
            .unwrap_or_default();
        (w.tau1, w.tau2)
    }

    pub fn parameters(&self, task: Task) -> Result<&Spanned<ParametersBlock>> {
        self.config
            .parameters
            .as_ref()
            .ok_or_else(|| self.absent("parameters", task))
    }

    /// A required scalar parameter.
    pub fn param(&self, task: Task, name: &str, value: impl Fn(&ParametersBlock) -> Option<f64>) -> Result<f64> {
        let p = self.parameters(task)?;
        value(p.get_ref()).ok_or_else(|| {
            self.error_at(
                Some(p.span()),
                format!("task `{}` requires parameters.{name}", task.as_str()),
            )
        })
    }

    /// Diagonal samples from `lambdas`, or `samples` log-spaced points of
    /// `lambda_range`.
    pub fn lambda_samples(&self, task: Task) -> Result<Vec<f64>> {
        let p = self.parameters(task)?;
        let b = p.get_ref();
        if let Some(l) = &b.lambdas {
            if l.is_empty() {
                return Err(self.error_at(Some(p.span()), "parameters.lambdas is empty"));
            }
            return Ok(l.clone());
        }
        match (b.lambda_range, b.samples) {
            (Some([lo, hi]), Some(n)) if lo > 0.0 && hi > lo && n >= 2 => Ok((0..n)
                .map(|k| (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (n - 1) as f64).exp())
                .collect()),
            (Some(_), Some(_)) => Err(self.error_at(
                Some(p.span()),
                "parameters.lambda_range needs 0 < lo < hi and samples >= 2",
            )),
            _ => Err(self.error_at(
                Some(p.span()),
                format!(
                    "task `{}` requires parameters.lambdas or parameters.lambda_range with samples",
                    task.as_str()
                ),
            )),
        }
    }

    pub fn data(&self, task: Task, grid: &Arc<Grid>) -> Result<(Field, Field)> {
        let d = self.config.data.as_ref().ok_or_else(|| self.absent("data", task))?;
        let f = |c: &Coef| -> Result<Field> { Field::from_values(grid, c.sample(grid)?) };
        Ok((
            f(&d.get_ref().f1).map_err(|e| self.error_at(Some(d.span()), e))?,
            f(&d.get_ref().f2).map_err(|e| self.error_at(Some(d.span()), e))?,
        ))
    }

    pub fn tolerances(&self) -> TolerancesBlock {
        self.config
            .tolerances
            .as_ref()
            .map(|t| t.get_ref().clone())
            .unwrap_or_default()
    }

    pub fn battery(&self) -> BatteryBlock {
        self.config
            .battery
            .as_ref()
            .map(|b| b.get_ref().clone())
            .unwrap_or_default()
    }

    pub fn fucik(&self, task: Task) -> Result<&Spanned<FucikBlock>> {
        self.config.fucik.as_ref().ok_or_else(|| self.absent("fucik", task))
    }

    pub fn scalar(&self, task: Task) -> Result<&Spanned<ScalarBlock>> {
        self.config.scalar.as_ref().ok_or_else(|| self.absent("scalar", task))
    }
}
