use std::path::{Path, PathBuf};

use gskor_core::constraints::{make_band_pair, make_rho_pair, ConstraintFunction, ConstraintPair, Profile};
use gskor_core::gexp::{FamilySpec, VolatilityBounds};
use gskor_core::gsde::{Coefficient, PicardOptions, SDECoefficients};
use gskor_core::io::read_path_file;
use gskor_core::{SampledPath, TimeGrid};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Issue};

/// Everything a `simulate` or `expect` run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub horizon: f64,
    pub steps: usize,
    pub sigma2_min: f64,
    pub sigma2_max: f64,
    pub family: FamilySpec,
    pub paths: usize,
    pub seed: u64,
    pub x0: f64,
    pub constraints: ConstraintSpec,
    pub coefficients: CoefficientsSpec,
    pub picard: PicardOptions,
    pub p: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            steps: 4096,
            sigma2_min: 0.25,
            sigma2_max: 1.0,
            family: FamilySpec::Constant { m: 5 },
            paths: 100,
            seed: 0,
            x0: 0.0,
            constraints: ConstraintSpec::Band {
                alpha: Series::Value(-1.0),
                beta: Series::Value(1.0),
            },
            coefficients: CoefficientsSpec::default(),
            picard: PicardOptions::default(),
            p: 2.0,
        }
    }
}

/// A constant, or a `t,value` CSV file on the run grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Series {
    Value(f64),
    File(PathBuf),
}

impl Series {
    fn constant(&self) -> Option<f64> {
        match self {
            Series::Value(v) => Some(*v),
            Series::File(_) => None,
        }
    }

    /// Relative file names are taken from `base`.
    pub fn resolve(&self, grid: &TimeGrid, base: &Path) -> Result<SampledPath, CliError> {
        match self {
            Series::Value(v) => Ok(SampledPath::constant(*grid, *v)?),
            Series::File(p) => {
                let full = base.join(p);
                let path = read_path_file(&full)?;
                let g = path.grid();
                let tol = 1e-9 * grid.horizon().max(1.0);
                if g.steps() != grid.steps() || (g.horizon() - grid.horizon()).abs() > tol {
                    return Err(CliError::Input(format!(
                        "{}: grid ({}, {}) does not match the run grid ({}, {})",
                        full.display(),
                        g.horizon(),
                        g.steps(),
                        grid.horizon(),
                        grid.steps()
                    )));
                }
                Ok(SampledPath::new(*grid, path.into_values())?)
            }
        }
    }
}

/// Constraint pair `r = p(x) − α_t`, `l = p(x) − β_t` for a profile `p`, or
/// a one-sided or absent constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConstraintSpec {
    Band { alpha: Series, beta: Series },
    Rho { alpha: Series, beta: Series },
    Cubic { alpha: Series, beta: Series },
    Lower { alpha: Series },
    Upper { beta: Series },
    Unconstrained,
}

impl ConstraintSpec {
    pub fn build(&self, grid: &TimeGrid, base: &Path) -> Result<ConstraintPair, CliError> {
        let pair = match self {
            ConstraintSpec::Band { alpha, beta } => {
                make_band_pair(alpha.resolve(grid, base)?, beta.resolve(grid, base)?)?
            }
            ConstraintSpec::Rho { alpha, beta } => make_rho_pair(alpha.resolve(grid, base)?, beta.resolve(grid, base)?)?,
            ConstraintSpec::Cubic { alpha, beta } => ConstraintPair::from_functions(
                ConstraintFunction::shifted(Profile::Cubic, alpha.resolve(grid, base)?)?,
                ConstraintFunction::shifted(Profile::Cubic, beta.resolve(grid, base)?)?,
            )?,
            ConstraintSpec::Lower { alpha } => ConstraintPair::one_sided_lower(alpha.resolve(grid, base)?)?,
            ConstraintSpec::Upper { beta } => ConstraintPair::one_sided_upper(beta.resolve(grid, base)?)?,
            ConstraintSpec::Unconstrained => ConstraintPair::unconstrained(*grid)?,
        };
        Ok(pair)
    }

    fn validate(&self, pointer: &str, issues: &mut Vec<Issue>) {
        let (alpha, beta) = match self {
            ConstraintSpec::Band { alpha, beta }
            | ConstraintSpec::Rho { alpha, beta }
            | ConstraintSpec::Cubic { alpha, beta } => (Some(alpha), Some(beta)),
            ConstraintSpec::Lower { alpha } => (Some(alpha), None),
            ConstraintSpec::Upper { beta } => (None, Some(beta)),
            ConstraintSpec::Unconstrained => (None, None),
        };
        for (name, s) in [("alpha", alpha), ("beta", beta)] {
            if let Some(v) = s.and_then(Series::constant) {
                if !v.is_finite() {
                    issues.push(Issue::new(format!("{pointer}/{name}"), "must be finite"));
                }
            }
        }
        if let (Some(a), Some(b)) = (alpha.and_then(Series::constant), beta.and_then(Series::constant)) {
            if !(a < b) {
                issues.push(Issue::new(
                    format!("{pointer}/beta"),
                    format!("beta ({b}) must exceed alpha ({a})"),
                ));
            }
        }
    }
}

/// A built-in coefficient, named by `id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    Zero,
    Constant { value: f64 },
    /// `a x + b`
    Affine { a: f64, b: f64 },
    /// `a sin(w x)`
    Sine { a: f64, w: f64 },
    /// `a t + b`
    TimeLinear { a: f64, b: f64 },
}

impl CoefficientSpec {
    pub fn build(&self) -> Coefficient {
        match *self {
            CoefficientSpec::Zero => Coefficient::Zero,
            CoefficientSpec::Constant { value } => Coefficient::Constant(value),
            CoefficientSpec::Affine { a, b } => Coefficient::Affine { a, b },
            CoefficientSpec::Sine { a, w } => Coefficient::Sine { a, w },
            CoefficientSpec::TimeLinear { a, b } => Coefficient::TimeLinear { a, b },
        }
    }

    /// Lipschitz constant in the state variable.
    pub fn lipschitz(&self) -> f64 {
        match *self {
            CoefficientSpec::Affine { a, .. } => a.abs(),
            CoefficientSpec::Sine { a, w } => (a * w).abs(),
            _ => 0.0,
        }
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            CoefficientSpec::Zero => vec![],
            CoefficientSpec::Constant { value } => vec![("value", value)],
            CoefficientSpec::Affine { a, b } | CoefficientSpec::TimeLinear { a, b } => vec![("a", a), ("b", b)],
            CoefficientSpec::Sine { a, w } => vec![("a", a), ("w", w)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoefficientsSpec {
    pub f: CoefficientSpec,
    pub h: CoefficientSpec,
    pub g: CoefficientSpec,
    /// Overrides the constant derived from the built-ins.
    pub lipschitz: Option<f64>,
}

impl Default for CoefficientsSpec {
    fn default() -> Self {
        Self {
            f: CoefficientSpec::Zero,
            h: CoefficientSpec::Zero,
            g: CoefficientSpec::Constant { value: 1.0 },
            lipschitz: None,
        }
    }
}

impl CoefficientsSpec {
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
            .unwrap_or_else(|| self.f.lipschitz() + self.h.lipschitz() + self.g.lipschitz())
    }

    pub fn build(&self, horizon: f64) -> Result<SDECoefficients, CliError> {
        Ok(SDECoefficients::new(
            self.f.build(),
            self.h.build(),
            self.g.build(),
            self.lipschitz(),
            horizon,
        )?)
    }
}

impl RunConfig {
    pub fn grid(&self) -> Result<TimeGrid, CliError> {
        Ok(TimeGrid::new(self.horizon, self.steps)?)
    }

    pub fn bounds(&self) -> Result<VolatilityBounds, CliError> {
        Ok(VolatilityBounds::new(self.sigma2_min, self.sigma2_max)?)
    }

    /// Every problem with the configuration, each tagged with a JSON pointer.
    pub fn validate(&self) -> Vec<Issue> {
        let mut issues = Vec::new();
        let mut need = |ok: bool, pointer: &str, msg: String| {
            if !ok {
                issues.push(Issue::new(pointer, msg));
            }
        };
        need(
            self.horizon.is_finite() && self.horizon > 0.0,
            "/horizon",
            format!("must be positive and finite, got {}", self.horizon),
        );
        need(self.steps >= 1, "/steps", "must be at least 1".into());
        need(
            self.sigma2_min.is_finite() && self.sigma2_min >= 0.0,
            "/sigma2_min",
            format!("must be nonnegative and finite, got {}", self.sigma2_min),
        );
        need(
            self.sigma2_max.is_finite(),
            "/sigma2_max",
            format!("must be finite, got {}", self.sigma2_max),
        );
        need(
            self.sigma2_min <= self.sigma2_max,
            "/sigma2_max",
            format!(
                "sigma2_min ({}) must not exceed sigma2_max ({})",
                self.sigma2_min, self.sigma2_max
            ),
        );
        match self.family {
            FamilySpec::Constant { m } => need(m >= 2, "/family/m", format!("must be at least 2, got {m}")),
            FamilySpec::BangBang { switches } => need(
                switches >= 1 && switches < self.steps.max(1),
                "/family/switches",
                format!("must lie in 1..{}, got {switches}", self.steps),
            ),
        }
        need(self.paths >= 2, "/paths", format!("must be at least 2, got {}", self.paths));
        need(self.x0.is_finite(), "/x0", "must be finite".into());
        need(
            self.picard.tol.is_finite() && self.picard.tol > 0.0,
            "/picard/tol",
            format!("must be positive, got {}", self.picard.tol),
        );
        need(self.picard.max_iter >= 2, "/picard/max_iter", "must be at least 2".into());
        need(self.p >= 1.0, "/p", format!("must be at least 1, got {}", self.p));
        for (name, c) in [("f", &self.coefficients.f), ("h", &self.coefficients.h), ("g", &self.coefficients.g)] {
            for (param, v) in c.params() {
                need(v.is_finite(), &format!("/coefficients/{name}/{param}"), "must be finite".into());
            }
        }
        if let Some(l) = self.coefficients.lipschitz {
            need(
                l.is_finite() && l >= 0.0,
                "/coefficients/lipschitz",
                format!("must be nonnegative, got {l}"),
            );
        }
        self.constraints.validate("/constraints", &mut issues);
        issues
    }
}

/// JSON pointer for the location `serde_path_to_error` reports.
fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { .. } | Segment::Unknown => {}
        }
    }
    out
}

/// Deserializes JSON, reporting the location of the first error.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| CliError::Parse {
        pointer: pointer(e.path()),
        message: e.inner().to_string(),
    })
}

/// Parses and validates a run configuration; omitted keys take defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = parse_json(text)?;
    let issues = cfg.validate();
    if issues.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::Validation(issues))
    }
}
