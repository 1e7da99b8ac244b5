//! Convexity breaking on a rounded equilateral triangle.
//!
//! The flat bottom edge of the rounded triangle sits on `y = 0`. Along it the
//! exact edge velocity `V(x)` is strictly convex near the corners, so for a
//! pair `x0 < x1` the lower boundary graph `g(x, t)` develops a positive
//! midpoint gap `G(t) = g(xm, t) - (g(x0, t) + g(x1, t))/2 ≈ Δ t` with
//! `Δ = (V(x0) + V(x1))/2 - V(xm)`. The pipeline evolves the curve and
//! certifies the loss of convexity three ways: the gap itself, the
//! curvature/turning test, and the chord midpoint falling outside the curve.

use std::path::Path;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, format_sci, measure, render_svg, SvgCurve, TimeSeriesRow};
use crate::error::{Error, Result};
use crate::evolution::{run_observed, EvolutionState, RunError, StepperConfig};
use crate::exact::{
    find_nonconvex_pair_in, EdgeVelocityProfile, NonconvexPair, TriangleOracle, PAIR_GRID_POINTS,
};
use crate::geometry::{
    default_convexity_tol, extract_graph_height, is_convex, make_rounded_triangle, ClosedCurve, Point2,
    RoundedTriangleSpec,
};
use crate::mobility::{check_assumption, default_probes, AssumptionReport, MobilityLaw};

/// Left end of the pair scan, as a fraction of `a`.
pub const PAIR_SCAN_LO: f64 = 0.02;
/// Right end of the pair scan, as a fraction of `a`, before the flat-edge cap.
pub const PAIR_SCAN_HI: f64 = 0.98;
/// The scan stops this many fillet radii short of the end of the flat edge.
pub const PAIR_FILLET_MARGIN: f64 = 3.0;
/// Width of the scan window, as a fraction of `a`, ending at the usable end
/// of the flat edge. Wider pairs pick up the O(t^2) distortion of the graph
/// much sooner and lose the sign of the gap within a typical run.
pub const PAIR_WINDOW: f64 = 0.2;
/// Gap tolerance is this multiple of the measured `t = 0` noise.
pub const NOISE_FACTOR: f64 = 10.0;
/// Certificates are sampled on this many equal steps of `(0, t_end]`,
/// unless the stepper config sets its own output spacing.
pub const SAMPLE_COUNT: usize = 200;
/// The slope is fitted while the fastest marker has travelled at most this
/// fraction of the pair width.
pub const SLOPE_WINDOW_TRAVEL: f64 = 0.3;
/// Fewest samples the slope fit uses.
pub const SLOPE_MIN_SAMPLES: usize = 3;

/// Everything fixed before time stepping starts.
#[derive(Clone, Debug, Serialize)]
pub struct Plan {
    pub law: String,
    pub a: f64,
    pub fillet: f64,
    pub marker_count: usize,
    pub flat_half_width: f64,
    pub pair: NonconvexPair,
    /// Exact gap rate `Δ` of the sharp triangle.
    pub gap_rate: f64,
    #[serde(skip)]
    pub spec: RoundedTriangleSpec,
    #[serde(skip)]
    pub assumption: AssumptionReport,
}

impl Plan {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.pair.x0 + self.pair.x1)
    }
}

/// Selects the pair and builds the initial curve.
///
/// With `pair = None` the pair maximizes the exact midpoint gap inside a
/// window of width [`PAIR_WINDOW`] that ends [`PAIR_FILLET_MARGIN`] fillet
/// radii short of the end of the flat edge. An explicit pair is taken as
/// given but must still sit on the flat edge and have a positive gap.
pub fn plan(
    law: &MobilityLaw,
    a: f64,
    fillet: f64,
    marker_count: usize,
    pair: Option<(f64, f64)>,
) -> Result<(Plan, ClosedCurve)> {
    let assumption = check_assumption(law, f64::MIN_POSITIVE, &default_probes())?;
    if !assumption.satisfied {
        return Err(Error::InvalidLaw(format!(
            "law `{}` does not satisfy lim inf F''/F' > 0 as r -> 0 (inf ratio {:.3e})",
            law.name(),
            assumption.inf_ratio
        )));
    }
    let spec = RoundedTriangleSpec::new(a, fillet, marker_count)?;
    let flat = spec.flat_half_width();
    let profile = EdgeVelocityProfile::new(TriangleOracle::new(a)?, law.clone());

    let pair = match pair {
        Some((x0, x1)) => {
            if !(0.0 <= x0 && x0 < x1) {
                return Err(Error::InvalidArgument(format!(
                    "pair must satisfy 0 <= x0 < x1, got ({x0}, {x1})"
                )));
            }
            if !(x1 < flat) {
                return Err(Error::FilletTooLarge { flat_end: flat, x1 });
            }
            let gap = profile.midpoint_gap(x0, x1)?;
            if !(gap > 0.0) {
                return Err(Error::SearchFailure(format!(
                    "pair ({x0}, {x1}) has midpoint gap {gap:.3e} <= 0"
                )));
            }
            NonconvexPair {
                x0,
                x1,
                gap,
                convex_interval: None,
            }
        }
        None => {
            let hi = (PAIR_SCAN_HI * a).min(flat - PAIR_FILLET_MARGIN * fillet);
            let lo = (PAIR_SCAN_LO * a).max(hi - PAIR_WINDOW * a);
            if !(hi > lo) {
                return Err(Error::FilletTooLarge {
                    flat_end: flat,
                    x1: hi,
                });
            }
            find_nonconvex_pair_in(&profile, lo, hi, PAIR_GRID_POINTS)?
        }
    };

    let curve = make_rounded_triangle(&spec)?;
    check_flat_bottom(&curve, pair.x1)?;
    let plan = Plan {
        law: law.name().to_string(),
        a,
        fillet,
        marker_count,
        flat_half_width: flat,
        gap_rate: pair.gap,
        pair,
        spec,
        assumption,
    };
    Ok((plan, curve))
}

/// The curve lies in `y >= 0` and touches `y = 0` on `[-x1, x1]`.
fn check_flat_bottom(curve: &ClosedCurve, x1: f64) -> Result<()> {
    let min_y = curve.markers().iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    if min_y < 0.0 {
        return Err(Error::InvalidDomain(format!("initial curve dips to y = {min_y}")));
    }
    for x in [-x1, 0.0, x1] {
        let g = extract_graph_height(curve, x)?;
        if g != 0.0 {
            return Err(Error::InvalidDomain(format!(
                "initial bottom edge not flat at x = {x}: height {g}"
            )));
        }
    }
    Ok(())
}

/// Lower-boundary heights at `x0`, the midpoint and `x1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapSample {
    pub t: f64,
    pub g0: f64,
    pub g_mid: f64,
    pub g1: f64,
}

impl GapSample {
    pub fn at(curve: &ClosedCurve, t: f64, x0: f64, x1: f64) -> Result<Self> {
        Ok(Self {
            t,
            g0: extract_graph_height(curve, x0)?,
            g_mid: extract_graph_height(curve, 0.5 * (x0 + x1))?,
            g1: extract_graph_height(curve, x1)?,
        })
    }

    pub fn gap(&self) -> f64 {
        self.g_mid - 0.5 * (self.g0 + self.g1)
    }

    /// Midpoint of the chord between the two flanking boundary points.
    pub fn chord_midpoint(&self, x0: f64, x1: f64) -> Point2 {
        Point2::new(0.5 * (x0 + x1), 0.5 * (self.g0 + self.g1))
    }
}

#[derive(Clone, Debug, Default)]
pub struct GapSeries {
    pub samples: Vec<GapSample>,
    /// Set when extraction failed at some snapshot; the series stops there.
    pub truncated: Option<String>,
}

pub fn gap_series<'a>(
    curves: impl IntoIterator<Item = (f64, &'a ClosedCurve)>,
    x0: f64,
    x1: f64,
) -> GapSeries {
    let mut series = GapSeries::default();
    for (t, curve) in curves {
        match GapSample::at(curve, t, x0, x1) {
            Ok(s) => series.samples.push(s),
            Err(e) => {
                series.truncated = Some(format!("graph extraction failed at t = {t:.6e}: {e}"));
                break;
            }
        }
    }
    series
}

/// The three certificates at one sampled time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateSample {
    pub t: f64,
    #[serde(rename = "G")]
    pub gap: f64,
    pub min_curvature: f64,
    /// Minimum over lower-boundary markers with `x0 <= x <= x1`.
    pub min_curvature_pair: f64,
    pub convex: bool,
    pub chord_outside: bool,
}

impl CertificateSample {
    pub fn measure(curve: &ClosedCurve, sample: &GapSample, x0: f64, x1: f64) -> Self {
        let kappa = curve.signed_curvatures();
        let min_curvature = kappa.iter().copied().fold(f64::INFINITY, f64::min);
        // Lower boundary: below the chord's level plus the gap, which the
        // upper boundary never reaches near the pair.
        let ceiling = sample.g_mid.max(sample.g0).max(sample.g1) + 0.5 * (x1 - x0);
        let min_curvature_pair = curve
            .markers()
            .iter()
            .zip(&kappa)
            .filter(|(p, _)| x0 <= p.x && p.x <= x1 && p.y <= ceiling)
            .map(|(_, &k)| k)
            .fold(f64::INFINITY, f64::min);
        Self {
            t: sample.t,
            gap: sample.gap(),
            min_curvature,
            min_curvature_pair,
            convex: is_convex(curve, default_convexity_tol(curve)),
            chord_outside: !curve.contains(sample.chord_midpoint(x0, x1)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Broken,
    NotBroken,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    /// Start of the range on which all three certificates hold.
    pub t_star: Option<f64>,
    /// Start of the terminal range where `G > tolerance`.
    pub gap_from: Option<f64>,
    /// Start of the terminal range where the convexity test fails.
    pub nonconvex_from: Option<f64>,
    /// Start of the terminal range where the chord midpoint is outside.
    pub chord_outside_from: Option<f64>,
    /// All three ranges start at the same sample.
    pub agree: bool,
    pub gap_tolerance: f64,
}

/// Start of the longest run of `t > 0` samples satisfying `pred` that
/// reaches the last sample.
fn terminal_range_start(
    samples: &[CertificateSample],
    pred: impl Fn(&CertificateSample) -> bool,
) -> Option<f64> {
    let mut start = None;
    for s in samples.iter().rev() {
        if s.t <= 0.0 || !pred(s) {
            break;
        }
        start = Some(s.t);
    }
    start
}

pub fn certify(samples: &[CertificateSample], gap_tolerance: f64) -> Verdict {
    let gap_from = terminal_range_start(samples, |s| s.gap > gap_tolerance);
    let nonconvex_from = terminal_range_start(samples, |s| !s.convex);
    let chord_outside_from = terminal_range_start(samples, |s| s.chord_outside);
    let starts = [gap_from, nonconvex_from, chord_outside_from];
    let (status, t_star) = match starts {
        [Some(a), Some(b), Some(c)] => (VerdictStatus::Broken, Some(a.max(b).max(c))),
        [None, None, None] => (VerdictStatus::NotBroken, None),
        _ => (VerdictStatus::Inconclusive, None),
    };
    Verdict {
        status,
        t_star,
        gap_from,
        nonconvex_from,
        chord_outside_from,
        agree: gap_from == nonconvex_from && nonconvex_from == chord_outside_from,
        gap_tolerance,
    }
}

/// Least-squares slope of `G(t) = s t` over samples with `0 < t <= window`.
pub fn fit_slope(samples: &[CertificateSample], window: f64) -> Option<f64> {
    let (num, den) = samples
        .iter()
        .filter(|s| s.t > 0.0 && s.t <= window)
        .fold((0.0, 0.0), |(n, d), s| (n + s.t * s.gap, d + s.t * s.t));
    (den > 0.0).then(|| num / den)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CounterexampleConfig {
    pub a: f64,
    pub fillet: f64,
    pub stepper: StepperConfig,
    /// Explicit `(x0, x1)`; `None` scans for the best pair.
    pub pair: Option<(f64, f64)>,
    /// Upper end of the slope-fit window; `None` derives it from the pair
    /// width and the initial speed (see [`SLOPE_WINDOW_TRAVEL`]).
    pub slope_window: Option<f64>,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            fillet: 0.02,
            stepper: StepperConfig {
                marker_count: 800,
                dt_max: 2e-4,
                t_end: 0.02,
                ..StepperConfig::default()
            },
            pair: None,
            slope_window: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationStage {
    /// A vertical line missed the lower boundary.
    Extraction,
    /// The time stepper failed (solver or topology).
    Evolution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub stage: TruncationStage,
    pub reason: String,
    /// Whether the underlying error is numerical rather than bad input.
    pub numerical: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BreakingReport {
    #[serde(flatten)]
    pub plan: Plan,
    pub dt_max: f64,
    pub t_end: f64,
    pub steps: usize,
    /// `t = 0` graph-extraction noise the gap tolerance is built from.
    pub noise: f64,
    pub slope_window: f64,
    pub fitted_slope: Option<f64>,
    pub slope_relative_error: Option<f64>,
    pub verdict: Verdict,
    pub series: Vec<CertificateSample>,
    /// Most markers whose non-positive flux was floored in any one sample.
    /// Nonzero values flag under-resolved corners.
    pub max_floored_flux: usize,
    /// Why the run ended before `t_end`, if it did.
    pub truncated: Option<Truncation>,
    #[serde(skip)]
    pub rows: Vec<TimeSeriesRow>,
    #[serde(skip)]
    pub curves: Vec<(f64, ClosedCurve)>,
}

impl BreakingReport {
    /// Every sample with `t > 0` whose gap clears the tolerance.
    pub fn gap_positive_after_noise(&self) -> bool {
        self.series
            .iter()
            .filter(|s| s.t > 0.0)
            .all(|s| s.gap > self.verdict.gap_tolerance)
    }

    pub fn gap_csv(&self) -> String {
        let mut out = String::from("t,G,min_curvature,convex_flag\n");
        for s in &self.series {
            out.push_str(&format!(
                "{},{},{},{}\n",
                format_sci(s.t),
                format_sci(s.gap),
                format_sci(s.min_curvature),
                u8::from(s.convex)
            ));
        }
        out
    }

    /// Indices of the curves drawn as SVG: start, `t*`, and a few in between.
    pub fn selected_snapshots(&self) -> Vec<usize> {
        let n = self.curves.len();
        if n == 0 {
            return Vec::new();
        }
        let mut picks: Vec<usize> = (0..=4).map(|k| k * (n - 1) / 4).collect();
        if let Some(ts) = self.verdict.t_star {
            if let Some(i) = self.curves.iter().position(|(t, _)| *t == ts) {
                picks.push(i);
            }
        }
        picks.sort_unstable();
        picks.dedup();
        picks
    }

    /// `report.json`, `gap.csv`, `series.csv` and `overlay_<k>.svg`.
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        diagnostics::write_json(&out_dir.join("report.json"), self)?;
        diagnostics::write_text(&out_dir.join("gap.csv"), &self.gap_csv())?;
        diagnostics::write_series_csv(&out_dir.join("series.csv"), &self.rows)?;
        let Some((_, initial)) = self.curves.first() else {
            return Ok(());
        };
        let (x0, x1) = (self.plan.pair.x0, self.plan.pair.x1);
        for (k, idx) in self.selected_snapshots().into_iter().enumerate() {
            let (t, curve) = &self.curves[idx];
            let convex = is_convex(curve, default_convexity_tol(curve));
            let chord = GapSample::at(curve, *t, x0, x1)
                .map(|s| vec![(Point2::new(x0, s.g0), Point2::new(x1, s.g1), "#d62728")])
                .unwrap_or_default();
            let svg = render_svg(
                &[
                    SvgCurve {
                        curve: initial,
                        stroke: "#999999",
                        label: "t = 0".into(),
                        show_hull: false,
                    },
                    SvgCurve {
                        curve,
                        stroke: "#1f77b4",
                        label: format!("t = {}", format_sci(*t)),
                        show_hull: !convex,
                    },
                ],
                &chord,
            );
            diagnostics::write_text(&out_dir.join(format!("overlay_{k:02}.svg")), &svg)?;
        }
        Ok(())
    }
}

/// Plans, evolves and certifies. Numerical failures during stepping end
/// the series early (recorded in `truncated`) rather than aborting.
pub fn run_counterexample(law: &MobilityLaw, cfg: &CounterexampleConfig) -> Result<BreakingReport> {
    cfg.stepper.validate()?;
    let mut stepper = cfg.stepper.clone();
    if stepper.output_every.is_none() && stepper.t_end > 0.0 {
        stepper.output_every = Some(stepper.t_end / SAMPLE_COUNT as f64);
    }
    let (plan, curve) = plan(law, cfg.a, cfg.fillet, stepper.marker_count, cfg.pair)?;
    let (x0, x1) = (plan.pair.x0, plan.pair.x1);
    info!(
        "pair ({x0:.4}, {x1:.4}), exact gap rate {:.4e}, flat edge |x| <= {:.4}",
        plan.gap_rate, plan.flat_half_width
    );

    let mut series = Vec::new();
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    let mut truncated = None;
    let mut noise = 0.0;
    let mut initial_speed = 0.0;
    let mut max_floored_flux = 0;
    let mut steps = 0;
    let outcome = run_observed(curve, law, &stepper, |state: &EvolutionState| {
        if truncated.is_some() {
            return;
        }
        let c = state.curve();
        match GapSample::at(c, state.t, x0, x1) {
            Ok(sample) => {
                if state.t == 0.0 {
                    initial_speed = state.velocity.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                    noise = [sample.gap(), sample.g0, sample.g_mid, sample.g1]
                        .iter()
                        .fold(0.0_f64, |m, v| m.max(v.abs()));
                }
                max_floored_flux = max_floored_flux.max(state.solution.diagnostics().floored_flux);
                let cert = CertificateSample::measure(c, &sample, x0, x1);
                let mut row = measure(state);
                row.gap = Some(cert.gap);
                rows.push(row);
                series.push(cert);
                curves.push((state.t, c.clone()));
                steps = state.step;
            }
            Err(e) => {
                truncated = Some(Truncation {
                    stage: TruncationStage::Extraction,
                    reason: format!("graph extraction failed at t = {:.6e}: {e}", state.t),
                    numerical: false,
                })
            }
        }
    });
    match outcome {
        Ok(_) => {}
        Err(RunError::Setup(e)) => return Err(e),
        Err(RunError::Step { error, last_state }) => {
            warn!("evolution stopped after step {}: {error}", last_state.step);
            truncated.get_or_insert(Truncation {
                stage: TruncationStage::Evolution,
                reason: format!(
                    "evolution stopped after step {} (t = {:.6e}): {error}",
                    last_state.step, last_state.t
                ),
                numerical: error.is_numerical(),
            });
        }
    }

    if max_floored_flux > 0 {
        warn!("up to {max_floored_flux} non-positive marker fluxes were floored per sample");
    }
    // A perfectly flat edge gives zero noise; keep the tolerance above round-off.
    let noise = noise.max(64.0 * f64::EPSILON * cfg.a);
    let verdict = certify(&series, NOISE_FACTOR * noise);
    let slope_window = cfg.slope_window.unwrap_or_else(|| {
        let travel = SLOPE_WINDOW_TRAVEL * (x1 - x0) / initial_speed.max(f64::MIN_POSITIVE);
        let min_samples = series
            .iter()
            .filter(|s| s.t > 0.0)
            .nth(SLOPE_MIN_SAMPLES - 1)
            .map_or(0.0, |s| s.t);
        travel.max(min_samples).min(stepper.t_end)
    });
    let fitted_slope = fit_slope(&series, slope_window);
    let slope_relative_error = fitted_slope.map(|s| (s - plan.gap_rate).abs() / plan.gap_rate);
    info!(
        "verdict {:?}, t* = {:?}, fitted slope {:?} vs {:.4e}",
        verdict.status, verdict.t_star, fitted_slope, plan.gap_rate
    );
    Ok(BreakingReport {
        plan,
        dt_max: stepper.dt_max,
        t_end: stepper.t_end,
        steps,
        noise,
        slope_window,
        fitted_slope,
        slope_relative_error,
        verdict,
        series,
        max_floored_flux,
        truncated,
        rows,
        curves,
    })
}
