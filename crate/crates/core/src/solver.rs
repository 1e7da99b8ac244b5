//! Torsion solver: `-Δw = 1` in the domain bounded by a marker curve, `w = 0`
//! on the curve.
//!
//! The solution is split as `w = w_p + h` with the particular solution
//! `w_p = -|x - x_c|^2 / 4` centred at the polygon centroid `x_c`, and a
//! harmonic completion
//!
//! ```text
//! h(x) = c_0 + Σ_j α_j ln|x - s_j|,     Σ_j α_j = 0,
//! ```
//!
//! with sources `s_j` pushed outside the curve along the outward normals.
//! Collocation at the markers gives a dense square system (one extra row for
//! the zero-charge constraint, one extra column for `c_0`). The constraint
//! removes the dependence on the length unit inside the logarithm, which
//! otherwise makes the system singular whenever the source curve has unit
//! logarithmic capacity.
//!
//! Boundary fluxes come from differentiating the representation at the
//! markers; the mass `M = ∫ w` is integrated exactly over the marker polygon
//! by the divergence theorem.

use log::debug;
use serde::{Deserialize, Serialize};

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::error::{Error, Result};
use crate::geometry::{ClosedCurve, Point2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MassMethod {
    /// Exact integration of the representation over the marker polygon.
    #[default]
    Boundary,
    /// Cell-centre quadrature on an axis-aligned grid with 4x4 subsampling of
    /// cells cut by the boundary.
    Grid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Source layers; layer `k` sits at `(k + 1) * offset_factor` local spacings.
    pub sources_per_marker: usize,
    pub offset_factor: f64,
    /// Singular values below `svd_cutoff * σ_max` are dropped.
    pub svd_cutoff: f64,
    /// Grid cell size in units of the minimum marker spacing (grid mass only).
    pub mass_grid_factor: f64,
    pub mass_method: MassMethod,
    /// Square systems are solved by LU when the 1-norm condition estimate
    /// stays below this; otherwise by truncated SVD.
    pub lu_condition_limit: f64,
    /// Largest accepted `|w|` at edge midpoints, relative to the largest
    /// boundary value of the particular solution.
    pub residual_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            sources_per_marker: 1,
            offset_factor: 1.5,
            svd_cutoff: 1e-12,
            mass_grid_factor: 1.0,
            mass_method: MassMethod::Boundary,
            lu_condition_limit: 1e10,
            residual_tolerance: 1e-2,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, msg: String| Err(Error::Config(format!("solver.{field}: {msg}")));
        if self.sources_per_marker == 0 || self.sources_per_marker > 4 {
            return fail(
                "sources_per_marker",
                format!("must be in 1..=4, got {}", self.sources_per_marker),
            );
        }
        if !(self.offset_factor > 0.0 && self.offset_factor.is_finite()) {
            return fail(
                "offset_factor",
                format!("must be positive, got {}", self.offset_factor),
            );
        }
        if !(self.svd_cutoff >= 0.0 && self.svd_cutoff < 1.0) {
            return fail(
                "svd_cutoff",
                format!("must be in [0, 1), got {}", self.svd_cutoff),
            );
        }
        if !(self.mass_grid_factor > 0.0 && self.mass_grid_factor.is_finite()) {
            return fail(
                "mass_grid_factor",
                format!("must be positive, got {}", self.mass_grid_factor),
            );
        }
        if !(self.lu_condition_limit >= 1.0) {
            return fail(
                "lu_condition_limit",
                format!("must be at least 1, got {}", self.lu_condition_limit),
            );
        }
        if !(self.residual_tolerance > 0.0) {
            return fail(
                "residual_tolerance",
                format!("must be positive, got {}", self.residual_tolerance),
            );
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearSolve {
    Lu,
    TruncatedSvd,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverDiagnostics {
    pub method: LinearSolve,
    /// 1-norm estimate for LU, `σ_max / σ_min` for SVD.
    pub condition_estimate: f64,
    pub truncated_singular_values: usize,
    /// Max `|w|` at edge midpoints relative to the largest boundary value of `w_p`.
    pub boundary_residual: f64,
    /// Markers whose computed flux was not positive and got floored.
    pub floored_flux: usize,
}

#[derive(Clone, Debug)]
pub struct TorsionSolution {
    curve: ClosedCurve,
    center: Point2,
    sources: Vec<Point2>,
    charges: Vec<f64>,
    constant: f64,
    /// `-Δw`; 1 except under the [`scaled`](Self::scaled) hook.
    source: f64,
    normals: Vec<Point2>,
    boundary_flux: Vec<f64>,
    mass: f64,
    diagnostics: SolverDiagnostics,
}

/// The normalized droplet field `u = w / M`: `-Δu = λ`, `∫u = 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalizedField {
    pub lambda: f64,
    /// `|Du|` at every marker.
    pub boundary_gradient: Vec<f64>,
}

impl TorsionSolution {
    pub fn curve(&self) -> &ClosedCurve {
        &self.curve
    }

    /// `|∂w/∂n|` at every marker.
    pub fn boundary_flux(&self) -> &[f64] {
        &self.boundary_flux
    }

    pub fn outward_normals(&self) -> &[Point2] {
        &self.normals
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn diagnostics(&self) -> &SolverDiagnostics {
        &self.diagnostics
    }

    pub fn sources(&self) -> &[Point2] {
        &self.sources
    }

    /// Evaluates the representation anywhere, without a domain check.
    pub fn eval_unchecked(&self, p: Point2) -> f64 {
        let d = p - self.center;
        let harmonic: f64 = self
            .sources
            .iter()
            .zip(&self.charges)
            .map(|(&s, &q)| q * 0.5 * (p - s).norm_squared().ln())
            .sum();
        -0.25 * self.source * d.norm_squared() + self.constant + harmonic
    }

    pub fn gradient_unchecked(&self, p: Point2) -> Point2 {
        let mut g = (p - self.center) * (-0.5 * self.source);
        for (&s, &q) in self.sources.iter().zip(&self.charges) {
            let r = p - s;
            g += r * (q / r.norm_squared());
        }
        g
    }

    pub fn interior_eval(&self, p: Point2) -> Result<f64> {
        if !self.curve.contains(p) {
            return Err(Error::OutOfDomain(format!(
                "({}, {}) is not inside the curve",
                p.x, p.y
            )));
        }
        Ok(self.eval_unchecked(p))
    }

    /// `|Δ_h w(p) + 1|` by the five-point stencil.
    pub fn pde_residual(&self, p: Point2, h: f64) -> f64 {
        let w = |dx: f64, dy: f64| self.eval_unchecked(Point2::new(p.x + dx, p.y + dy));
        let lap = (w(h, 0.0) + w(-h, 0.0) + w(0.0, h) + w(0.0, -h) - 4.0 * w(0.0, 0.0)) / (h * h);
        (lap + self.source).abs()
    }

    /// Test hook: the same representation scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> TorsionSolution {
        let mut s = self.clone();
        s.charges.iter_mut().for_each(|q| *q *= factor);
        s.constant *= factor;
        s.source *= factor;
        s.boundary_flux.iter_mut().for_each(|f| *f *= factor);
        s.mass *= factor;
        s
    }

    /// Mass by grid quadrature, independent of the boundary formula.
    pub fn grid_mass(&self, grid_factor: f64) -> f64 {
        grid_mass(self, self.curve.min_spacing() * grid_factor)
    }

    pub fn normalize(&self) -> NormalizedField {
        normalize(self)
    }
}

pub fn normalize(sol: &TorsionSolution) -> NormalizedField {
    let m = sol.mass();
    NormalizedField {
        lambda: sol.source / m,
        boundary_gradient: sol.boundary_flux().iter().map(|f| f / m).collect(),
    }
}

pub fn solve_torsion(curve: &ClosedCurve, config: &SolverConfig) -> Result<TorsionSolution> {
    config.validate()?;
    if let Some((i, j)) = curve.first_self_intersection() {
        return Err(Error::InvalidDomain(format!(
            "curve self-intersects: edges {i} and {j} cross"
        )));
    }
    let markers = curve.markers();
    let n = markers.len();
    let normals = curve.outward_normals();
    let spacing = curve.local_spacing();
    let center = curve.centroid();

    let sources: Vec<Point2> = (0..config.sources_per_marker)
        .flat_map(|layer| {
            let scale = (layer + 1) as f64 * config.offset_factor;
            markers
                .iter()
                .zip(&normals)
                .zip(&spacing)
                .map(move |((&p, &nv), &h)| p + nv * (scale * h))
        })
        .collect();
    let m = sources.len();

    // Rows: n collocation conditions, then Σα = 0. Columns: m charges, then c_0.
    let system = Mat::<f64>::from_fn(n + 1, m + 1, |i, j| match (i < n, j < m) {
        (true, true) => 0.5 * (markers[i] - sources[j]).norm_squared().ln(),
        (true, false) => 1.0,
        (false, true) => 1.0,
        (false, false) => 0.0,
    });
    let rhs = Mat::<f64>::from_fn(n + 1, 1, |i, _| {
        if i < n {
            0.25 * (markers[i] - center).norm_squared()
        } else {
            0.0
        }
    });

    let (coeffs, method, condition, truncated) = if n == m {
        let lu = system.partial_piv_lu();
        let condition = one_norm_condition(&system, &lu);
        if condition <= config.lu_condition_limit {
            (lu.solve(&rhs), LinearSolve::Lu, condition, 0)
        } else {
            debug!("LU condition estimate {condition:.3e}; switching to truncated SVD");
            truncated_svd_solve(&system, &rhs, config.svd_cutoff)?
        }
    } else {
        truncated_svd_solve(&system, &rhs, config.svd_cutoff)?
    };

    let charges: Vec<f64> = (0..m).map(|j| coeffs[(j, 0)]).collect();
    let constant = coeffs[(m, 0)];

    let mut sol = TorsionSolution {
        curve: curve.clone(),
        center,
        sources,
        charges,
        constant,
        source: 1.0,
        normals,
        boundary_flux: Vec::new(),
        mass: 0.0,
        diagnostics: SolverDiagnostics {
            method,
            condition_estimate: condition,
            truncated_singular_values: truncated,
            boundary_residual: 0.0,
            floored_flux: 0,
        },
    };

    let scale = markers
        .iter()
        .map(|&p| 0.25 * (p - center).norm_squared())
        .fold(0.0, f64::max);
    let residual = curve
        .edges()
        .map(|(a, b)| sol.eval_unchecked(a.lerp(b, 0.5)).abs())
        .fold(0.0, f64::max)
        / scale;
    sol.diagnostics.boundary_residual = residual;
    if !(residual <= config.residual_tolerance) {
        return Err(Error::IllConditioned {
            condition,
            residual,
            tolerance: config.residual_tolerance,
            truncated,
        });
    }

    let mut flux: Vec<f64> = markers
        .iter()
        .zip(&sol.normals)
        .map(|(&p, &nv)| -sol.gradient_unchecked(p).dot(nv))
        .collect();
    let floor = f64::EPSILON * flux.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut floored = 0;
    let mut worst = (0, f64::INFINITY);
    for (i, f) in flux.iter_mut().enumerate() {
        if !(*f > floor) {
            if *f < worst.1 {
                worst = (i, *f);
            }
            *f = floor;
            floored += 1;
        }
    }
    if floored > 0 {
        debug!(
            "{floored} non-positive fluxes floored to {floor:.3e} (most negative {:.3e} at marker {})",
            worst.1, worst.0
        );
    }
    sol.boundary_flux = flux;
    sol.diagnostics.floored_flux = floored;

    sol.mass = match config.mass_method {
        MassMethod::Boundary => boundary_mass(&sol),
        MassMethod::Grid => grid_mass(&sol, curve.min_spacing() * config.mass_grid_factor),
    };
    if !(sol.mass > 0.0) {
        return Err(Error::IllConditioned {
            condition,
            residual,
            tolerance: config.residual_tolerance,
            truncated,
        });
    }
    Ok(sol)
}

/// Hager's estimate of `‖A‖₁ ‖A⁻¹‖₁`.
fn one_norm_condition(a: &Mat<f64>, lu: &faer::linalg::solvers::PartialPivLu<f64>) -> f64 {
    let n = a.nrows();
    let norm_a = (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut x = Mat::<f64>::from_fn(n, 1, |_, _| 1.0 / n as f64);
    let mut estimate = 0.0;
    let mut last_index = usize::MAX;
    for _ in 0..5 {
        let y = lu.solve(&x);
        estimate = (0..n).map(|i| y[(i, 0)].abs()).sum::<f64>();
        let sign = Mat::<f64>::from_fn(n, 1, |i, _| if y[(i, 0)] >= 0.0 { 1.0 } else { -1.0 });
        let z = lu.solve_transpose(&sign);
        let (j, zmax) = (0..n)
            .map(|i| (i, z[(i, 0)].abs()))
            .fold((0, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
        let ztx: f64 = (0..n).map(|i| z[(i, 0)] * x[(i, 0)]).sum();
        if zmax <= ztx || j == last_index {
            break;
        }
        last_index = j;
        x = Mat::<f64>::from_fn(n, 1, |i, _| if i == j { 1.0 } else { 0.0 });
    }
    if !estimate.is_finite() {
        return f64::INFINITY;
    }
    norm_a * estimate
}

fn truncated_svd_solve(
    a: &Mat<f64>,
    b: &Mat<f64>,
    cutoff: f64,
) -> Result<(Mat<f64>, LinearSolve, f64, usize)> {
    let svd = a.thin_svd().map_err(|_| Error::IllConditioned {
        condition: f64::INFINITY,
        residual: f64::NAN,
        tolerance: 0.0,
        truncated: 0,
    })?;
    let u = svd.U();
    let v = svd.V();
    let s = svd.S().column_vector();
    let k = s.nrows();
    let s_max = (0..k).map(|i| s[i]).fold(0.0, f64::max);
    let s_min = (0..k).map(|i| s[i]).fold(f64::INFINITY, f64::min);
    let mut truncated = 0;
    let mut coeffs = Mat::<f64>::zeros(a.ncols(), 1);
    for i in 0..k {
        if s[i] <= cutoff * s_max {
            truncated += 1;
            continue;
        }
        let proj: f64 = (0..a.nrows()).map(|r| u[(r, i)] * b[(r, 0)]).sum::<f64>() / s[i];
        for r in 0..a.ncols() {
            coeffs[(r, 0)] += v[(r, i)] * proj;
        }
    }
    Ok((coeffs, LinearSolve::TruncatedSvd, s_max / s_min, truncated))
}

/// `∫_Ω w` over the marker polygon, exactly for the representation:
/// the particular part from polygon moments, `c_0` times the area, and each
/// logarithm through `ln|x - s| = div((x - s)(2 ln|x - s| - 1)/4)`.
fn boundary_mass(sol: &TorsionSolution) -> f64 {
    let curve = &sol.curve;
    let c = sol.center;
    let area = curve.signed_area();

    // Polar second moment about the centroid.
    let mut polar = 0.0;
    for (p, q) in curve.edges() {
        let (p, q) = (p - c, q - c);
        let w = p.cross(q);
        polar += w * (p.x * p.x + p.x * q.x + q.x * q.x + p.y * p.y + p.y * q.y + q.y * q.y);
    }
    polar /= 12.0;

    let edges: Vec<(Point2, Point2, f64, Point2, Point2)> = curve
        .edges()
        .map(|(p, q)| {
            let len = p.distance(q);
            let t = (q - p) * (1.0 / len);
            (p, q, len, t, t.rot_cw())
        })
        .collect();

    let mut harmonic = 0.0;
    for (&s, &charge) in sol.sources.iter().zip(&sol.charges) {
        let mut integral = 0.0;
        for &(p, q, len, t, nrm) in &edges {
            let d = (p - s).dot(nrm);
            if d == 0.0 {
                continue;
            }
            let t1 = (p - s).dot(t);
            let t2 = (q - s).dot(t);
            let log_integral = segment_log_antiderivative(t2, d) - segment_log_antiderivative(t1, d);
            integral += 0.25 * d * (2.0 * log_integral - len);
        }
        harmonic += charge * integral;
    }
    -0.25 * sol.source * polar + sol.constant * area + harmonic
}

/// Antiderivative of `ln sqrt(τ² + d²)` in `τ`.
fn segment_log_antiderivative(tau: f64, d: f64) -> f64 {
    let r2 = tau * tau + d * d;
    0.5 * tau * r2.ln() - tau + d * (tau / d).atan()
}

fn grid_mass(sol: &TorsionSolution, cell: f64) -> f64 {
    let curve = &sol.curve;
    let (lo, hi) = curve.bounding_box();
    let nx = ((hi.x - lo.x) / cell).ceil() as usize + 1;
    let ny = ((hi.y - lo.y) / cell).ceil() as usize + 1;
    let origin = lo - Point2::new(0.5 * cell, 0.5 * cell);

    // Cells touched by an edge (plus a one-cell margin) get subsampled.
    let mut cut = vec![false; nx * ny];
    let index =
        |v: f64, o: f64, len: usize| -> usize { (((v - o) / cell).floor().max(0.0) as usize).min(len - 1) };
    for (p, q) in curve.edges() {
        let (i0, i1) = (
            index(p.x.min(q.x), origin.x, nx),
            index(p.x.max(q.x), origin.x, nx),
        );
        let (j0, j1) = (
            index(p.y.min(q.y), origin.y, ny),
            index(p.y.max(q.y), origin.y, ny),
        );
        for j in j0.saturating_sub(1)..=(j1 + 1).min(ny - 1) {
            for i in i0.saturating_sub(1)..=(i1 + 1).min(nx - 1) {
                cut[j * nx + i] = true;
            }
        }
    }

    let sub = 4;
    let mut total = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            let corner = origin + Point2::new(i as f64 * cell, j as f64 * cell);
            if cut[j * nx + i] {
                let h = cell / sub as f64;
                for sj in 0..sub {
                    for si in 0..sub {
                        let p = corner + Point2::new((si as f64 + 0.5) * h, (sj as f64 + 0.5) * h);
                        if curve.contains(p) {
                            total += sol.eval_unchecked(p) * h * h;
                        }
                    }
                }
            } else {
                let p = corner + Point2::new(0.5 * cell, 0.5 * cell);
                if curve.contains(p) {
                    total += sol.eval_unchecked(p) * cell * cell;
                }
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::DiskOracle;
    use crate::geometry::{make_disk, make_rounded_triangle, translate, RoundedTriangleSpec};

    #[test]
    fn log_antiderivative_matches_quadrature() {
        let d = 0.3;
        let exact = segment_log_antiderivative(1.2, d) - segment_log_antiderivative(-0.4, d);
        let q = crate::quadrature::integrate(|t| 0.5 * (t * t + d * d).ln(), -0.4, 1.2, 40);
        assert!((exact - q).abs() < 1e-12);
    }

    #[test]
    fn disk_solution_matches_oracle() {
        let curve = make_disk(1.0, 256).unwrap();
        let sol = solve_torsion(&curve, &SolverConfig::default()).unwrap();
        let oracle = DiskOracle::new(1.0).unwrap();
        for f in sol.boundary_flux() {
            assert!(
                (f - oracle.boundary_flux).abs() / oracle.boundary_flux <= 1e-4,
                "{f}"
            );
        }
        assert!((sol.mass() - oracle.mass).abs() <= 1e-4);
        assert!((sol.interior_eval(Point2::ORIGIN).unwrap() - 0.25).abs() <= 1e-4);
        assert!((sol.interior_eval(Point2::new(0.5, 0.0)).unwrap() - 3.0 / 16.0).abs() <= 1e-4);
        assert_eq!(sol.diagnostics().method, LinearSolve::Lu);
    }

    #[test]
    fn interior_eval_rejects_outside_points() {
        let curve = make_disk(1.0, 64).unwrap();
        let sol = solve_torsion(&curve, &SolverConfig::default()).unwrap();
        assert!(matches!(
            sol.interior_eval(Point2::new(2.0, 0.0)),
            Err(Error::OutOfDomain(_))
        ));
    }

    #[test]
    fn translation_invariance() {
        let curve = make_disk(1.0, 256).unwrap();
        let shifted = translate(&curve, Point2::new(5.0, 7.0));
        let cfg = SolverConfig::default();
        let a = solve_torsion(&curve, &cfg).unwrap();
        let b = solve_torsion(&shifted, &cfg).unwrap();
        assert!((a.mass() - b.mass()).abs() <= 1e-10);
        for (fa, fb) in a.boundary_flux().iter().zip(b.boundary_flux()) {
            assert!((fa - fb).abs() <= 1e-10);
        }
    }

    #[test]
    fn normalize_is_scale_invariant() {
        let curve = make_disk(1.0, 128).unwrap();
        let sol = solve_torsion(&curve, &SolverConfig::default()).unwrap();
        let a = sol.normalize();
        let b = sol.scaled(2.0).normalize();
        assert!((a.lambda - 8.0 / std::f64::consts::PI).abs() < 1e-3);
        assert!((a.lambda - b.lambda).abs() < 1e-12 * a.lambda);
        for (x, y) in a.boundary_gradient.iter().zip(&b.boundary_gradient) {
            assert!((x - y).abs() <= 1e-12 * x.abs());
        }
    }

    #[test]
    fn svd_route_agrees_with_lu() {
        let curve = make_disk(1.0, 96).unwrap();
        let lu = solve_torsion(&curve, &SolverConfig::default()).unwrap();
        let cfg = SolverConfig {
            lu_condition_limit: 1.0,
            ..SolverConfig::default()
        };
        let svd = solve_torsion(&curve, &cfg).unwrap();
        assert_eq!(svd.diagnostics().method, LinearSolve::TruncatedSvd);
        assert!((lu.mass() - svd.mass()).abs() < 1e-9);
        let two_layers = SolverConfig {
            sources_per_marker: 2,
            ..SolverConfig::default()
        };
        let wide = solve_torsion(&curve, &two_layers).unwrap();
        assert!((wide.mass() - std::f64::consts::PI / 8.0).abs() < 1e-5);
    }

    #[test]
    fn grid_mass_agrees_with_boundary_mass() {
        let spec = RoundedTriangleSpec::new(1.0, 0.1, 300).unwrap();
        let curve = make_rounded_triangle(&spec).unwrap();
        let sol = solve_torsion(&curve, &SolverConfig::default()).unwrap();
        let grid = sol.grid_mass(1.0);
        assert!(
            (grid - sol.mass()).abs() <= 2e-3 * sol.mass(),
            "{grid} vs {}",
            sol.mass()
        );
    }

    #[test]
    fn pde_residual_small() {
        let curve = make_disk(1.0, 128).unwrap();
        let sol = solve_torsion(&curve, &SolverConfig::default()).unwrap();
        for p in [Point2::new(0.1, 0.2), Point2::new(-0.5, 0.3)] {
            assert!(sol.pde_residual(p, 1e-3) < 1e-5);
        }
    }

    #[test]
    fn config_validation_names_field() {
        let cfg = SolverConfig {
            offset_factor: 0.0,
            ..SolverConfig::default()
        };
        let err = solve_torsion(&make_disk(1.0, 32).unwrap(), &cfg).unwrap_err();
        assert!(err.to_string().contains("offset_factor"));
    }
}
