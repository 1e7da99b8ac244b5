//! Run configuration files.
//!
//! A config is a JSON object; every key is optional and unknown keys are
//! rejected. The schema lives in `schema/run-config.schema.json`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::counterexample::CounterexampleConfig;
use crate::error::{Error, Result};
use crate::evolution::StepperConfig;
use crate::geometry::{make_disk, make_rounded_triangle, ClosedCurve, RoundedTriangleSpec};
use crate::mobility::MobilityLaw;
use crate::solver::SolverConfig;

pub const SCHEMA: &str = include_str!("../schema/run-config.schema.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ShapeSpec {
    Disk {
        radius: f64,
    },
    /// The sharp equilateral triangle with base `[-a, a]` on `y = 0`.
    Triangle {
        a: f64,
    },
    RoundedTriangle {
        a: f64,
        fillet: f64,
    },
}

impl Default for ShapeSpec {
    fn default() -> Self {
        ShapeSpec::RoundedTriangle { a: 1.0, fillet: 0.02 }
    }
}

impl ShapeSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("shape.{name} must be positive, got {v}")))
            }
        };
        match *self {
            ShapeSpec::Disk { radius } => positive("radius", radius),
            ShapeSpec::Triangle { a } => positive("a", a),
            ShapeSpec::RoundedTriangle { a, fillet } => {
                positive("a", a)?;
                positive("fillet", fillet)?;
                let max = a / 3f64.sqrt();
                if fillet >= max {
                    return Err(Error::Config(format!(
                        "shape.fillet must be below a/sqrt(3) = {max}, got {fillet}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn build(&self, marker_count: usize) -> Result<ClosedCurve> {
        self.validate()?;
        match *self {
            ShapeSpec::Disk { radius } => make_disk(radius, marker_count),
            ShapeSpec::Triangle { a } => {
                make_rounded_triangle(&RoundedTriangleSpec::new(a, 0.0, marker_count)?)
            }
            ShapeSpec::RoundedTriangle { a, fillet } => {
                make_rounded_triangle(&RoundedTriangleSpec::new(a, fillet, marker_count)?)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
    /// Number of SVG snapshots written by `evolve`.
    pub snapshots: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            snapshots: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub shape: ShapeSpec,
    pub law: String,
    #[serde(rename = "N")]
    pub marker_count: usize,
    pub dt_max: f64,
    pub cfl: f64,
    pub resample_every: usize,
    pub t_end: f64,
    pub output_every: Option<f64>,
    /// Explicit counterexample pair `[x0, x1]`.
    pub pair: Option<[f64; 2]>,
    pub slope_window: Option<f64>,
    pub solver: SolverConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let stepper = StepperConfig::default();
        Self {
            shape: ShapeSpec::default(),
            law: "p2".into(),
            marker_count: stepper.marker_count,
            dt_max: stepper.dt_max,
            cfl: stepper.cfl,
            resample_every: stepper.resample_every,
            t_end: stepper.t_end,
            output_every: stepper.output_every,
            pair: None,
            slope_window: None,
            solver: stepper.solver,
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn build_curve(&self) -> Result<ClosedCurve> {
        self.shape.build(self.marker_count)
    }

    pub fn stepper(&self) -> StepperConfig {
        StepperConfig {
            dt_max: self.dt_max,
            cfl: self.cfl,
            resample_every: self.resample_every,
            marker_count: self.marker_count,
            solver: self.solver.clone(),
            t_end: self.t_end,
            output_every: self.output_every,
        }
    }

    pub fn law(&self) -> Result<MobilityLaw> {
        MobilityLaw::parse(&self.law).map_err(|e| Error::Config(format!("law: {e}")))
    }

    /// Checks every field; the message names the first offending one.
    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        self.law()?;
        self.stepper().validate()?;
        if let Some([x0, x1]) = self.pair {
            if !(0.0 <= x0 && x0 < x1 && x1.is_finite()) {
                return Err(Error::Config(format!(
                    "pair must satisfy 0 <= x0 < x1, got [{x0}, {x1}]"
                )));
            }
        }
        if let Some(w) = self.slope_window {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Config(format!("slope_window must be positive, got {w}")));
            }
        }
        if self.output.snapshots == 0 {
            return Err(Error::Config("output.snapshots must be at least 1".into()));
        }
        Ok(())
    }

    pub fn counterexample(&self) -> Result<CounterexampleConfig> {
        let (a, fillet) = match self.shape {
            ShapeSpec::RoundedTriangle { a, fillet } => (a, fillet),
            ref other => {
                return Err(Error::Config(format!(
                    "shape: counterexample needs a rounded-triangle, got {other:?}"
                )))
            }
        };
        Ok(CounterexampleConfig {
            a,
            fillet,
            stepper: self.stepper(),
            pair: self.pair.map(|[x0, x1]| (x0, x1)),
            slope_window: self.slope_window,
        })
    }
}
