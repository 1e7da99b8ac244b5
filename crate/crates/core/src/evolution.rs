//! Front-tracking time integration of the free boundary.
//!
//! Each step solves the torsion problem on the current marker curve,
//! normalizes it to unit volume, evaluates `V = F(|Du|)` at the markers and
//! moves every marker along its outward normal by forward Euler. Markers are
//! redistributed uniformly in arclength every `resample_every` steps.

use std::fmt;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{resample_uniform, ClosedCurve, Point2};
use crate::mobility::MobilityLaw;
use crate::solver::{solve_torsion, NormalizedField, SolverConfig, TorsionSolution};

/// Velocity floor in the time-step rule.
pub const VELOCITY_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt_max: f64,
    pub cfl: f64,
    /// Resample every this many steps; 0 disables resampling.
    pub resample_every: usize,
    pub marker_count: usize,
    pub solver: SolverConfig,
    pub t_end: f64,
    /// Snapshot spacing; `None` keeps every step.
    pub output_every: Option<f64>,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            dt_max: 1e-3,
            cfl: 0.4,
            resample_every: 5,
            marker_count: 512,
            solver: SolverConfig::default(),
            t_end: 0.05,
            output_every: None,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(Error::Config(format!(
                "dt_max must be positive, got {}",
                self.dt_max
            )));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if self.marker_count < crate::geometry::MIN_MARKERS {
            return Err(Error::Config(format!(
                "N must be at least {}, got {}",
                crate::geometry::MIN_MARKERS,
                self.marker_count
            )));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!(
                "t_end must be non-negative, got {}",
                self.t_end
            )));
        }
        if let Some(dt) = self.output_every {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Config(format!("output_every must be positive, got {dt}")));
            }
        }
        self.solver.validate()
    }
}

/// The free boundary at one instant together with the field it carries.
#[derive(Clone, Debug)]
pub struct EvolutionState {
    pub t: f64,
    pub step: usize,
    pub solution: TorsionSolution,
    pub field: NormalizedField,
    /// `F(|Du|)` at every marker.
    pub velocity: Vec<f64>,
}

impl EvolutionState {
    pub fn new(curve: ClosedCurve, law: &MobilityLaw, solver: &SolverConfig) -> Result<Self> {
        Self::at(curve, 0.0, 0, law, solver)
    }

    fn at(curve: ClosedCurve, t: f64, step: usize, law: &MobilityLaw, solver: &SolverConfig) -> Result<Self> {
        let solution = solve_torsion(&curve, solver)?;
        let field = solution.normalize();
        let velocity = field
            .boundary_gradient
            .iter()
            .map(|&g| law.velocity(g))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            t,
            step,
            solution,
            field,
            velocity,
        })
    }

    pub fn curve(&self) -> &ClosedCurve {
        self.solution.curve()
    }

    pub fn normals(&self) -> &[Point2] {
        self.solution.outward_normals()
    }

    /// Step size the CFL rule allows, before any output-time clamping.
    pub fn stable_dt(&self, cfg: &StepperConfig) -> f64 {
        let vmax = self.velocity.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        cfg.dt_max
            .min(cfg.cfl * self.curve().min_spacing() / vmax.max(VELOCITY_FLOOR))
    }
}

/// One forward Euler step with the CFL-limited time step.
pub fn step(state: &EvolutionState, law: &MobilityLaw, cfg: &StepperConfig) -> Result<EvolutionState> {
    step_with_dt(state, law, cfg, state.stable_dt(cfg))
}

fn step_with_dt(
    state: &EvolutionState,
    law: &MobilityLaw,
    cfg: &StepperConfig,
    dt: f64,
) -> Result<EvolutionState> {
    let t = state.t + dt;
    let step = state.step + 1;
    let moved: Vec<Point2> = state
        .curve()
        .markers()
        .iter()
        .zip(state.normals())
        .zip(&state.velocity)
        .map(|((&p, &n), &v)| p + n * (v * dt))
        .collect();
    let topology = |e: Error| match e {
        Error::InvalidDomain(detail) => Error::TopologyChange { step, t, detail },
        other => other,
    };
    let mut curve = ClosedCurve::new(moved).map_err(topology)?;
    if cfg.resample_every > 0 && step % cfg.resample_every == 0 {
        curve = resample_uniform(&curve, cfg.marker_count).map_err(topology)?;
    }
    EvolutionState::at(curve, t, step, law, &cfg.solver)
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub snapshots: Vec<EvolutionState>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&EvolutionState> {
        self.snapshots.last()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }
}

/// A run that stopped early. The last valid state is kept for inspection;
/// it is `None` when the initial state itself could not be built.
#[derive(Debug)]
pub struct EvolutionFailure {
    pub error: Error,
    pub last_state: Option<Box<EvolutionState>>,
    pub trajectory: Trajectory,
}

impl fmt::Display for EvolutionFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.last_state {
            Some(s) => write!(
                f,
                "evolution stopped after step {} (t = {:.6e}): {}",
                s.step, s.t, self.error
            ),
            None => write!(f, "evolution could not start: {}", self.error),
        }
    }
}

impl std::error::Error for EvolutionFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Integrates from `t = 0` to `cfg.t_end`, keeping a snapshot at `t = 0` and
/// at every output time (every step when `output_every` is `None`).
pub fn run(
    initial: ClosedCurve,
    law: &MobilityLaw,
    cfg: &StepperConfig,
) -> std::result::Result<Trajectory, Box<EvolutionFailure>> {
    let mut trajectory = Trajectory::default();
    let outcome = run_observed(initial, law, cfg, |s| trajectory.snapshots.push(s.clone()));
    match outcome {
        Ok(_) => Ok(trajectory),
        Err(RunError::Setup(error)) => Err(Box::new(EvolutionFailure {
            error,
            last_state: None,
            trajectory,
        })),
        Err(RunError::Step { error, last_state }) => Err(Box::new(EvolutionFailure {
            error,
            last_state: Some(last_state),
            trajectory,
        })),
    }
}

#[derive(Debug)]
pub enum RunError {
    /// The initial state could not be built.
    Setup(Error),
    Step {
        error: Error,
        last_state: Box<EvolutionState>,
    },
}

impl RunError {
    pub fn error(&self) -> &Error {
        match self {
            RunError::Setup(e) => e,
            RunError::Step { error, .. } => error,
        }
    }
}

/// Like [`run`], but hands each snapshot to `observe` instead of storing it.
/// Returns the final state.
pub fn run_observed(
    initial: ClosedCurve,
    law: &MobilityLaw,
    cfg: &StepperConfig,
    mut observe: impl FnMut(&EvolutionState),
) -> std::result::Result<EvolutionState, RunError> {
    cfg.validate().map_err(RunError::Setup)?;
    let mut state = EvolutionState::new(initial, law, &cfg.solver).map_err(RunError::Setup)?;
    observe(&state);

    let t_end = cfg.t_end;
    let eps = 1e-12 * t_end.max(1.0);
    let mut next_output = cfg.output_every.unwrap_or(f64::INFINITY);
    info!(
        "evolving {} markers with law `{}` to t = {t_end}",
        state.curve().len(),
        law.name()
    );
    while state.t < t_end - eps {
        let target = next_output.min(t_end);
        let mut dt = state.stable_dt(cfg);
        if state.t + dt >= target - eps {
            dt = target - state.t;
        }
        let next = step_with_dt(&state, law, cfg, dt).map_err(|error| RunError::Step {
            error,
            last_state: Box::new(state.clone()),
        })?;
        state = next;
        debug!("step {} t = {:.6e} dt = {dt:.3e}", state.step, state.t);
        let at_output = cfg.output_every.is_none() || (state.t - target).abs() <= eps;
        if at_output {
            if (state.t - target).abs() <= eps {
                state.t = target;
            }
            observe(&state);
            while next_output <= state.t + eps {
                next_output += cfg.output_every.unwrap_or(f64::INFINITY);
            }
        }
    }
    Ok(state)
}
