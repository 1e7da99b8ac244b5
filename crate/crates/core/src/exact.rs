//! Closed-form torsion solutions used as oracles.
//!
//! The equilateral triangle `D` of side `2a` sits on the x-axis with vertices
//! `(-a, 0)`, `(a, 0)` and `(0, a*sqrt(3))`. On it
//!
//! ```text
//! v(x, y) = c y ((y - a sqrt(3))^2 - 3 x^2),   c = 5 / (3 a^5)
//! ```
//!
//! solves `-Δv = 4 a c sqrt(3)` with `v = 0` on `∂D` and unit integral, so it
//! is already the normalized droplet profile. On the bottom edge the normal
//! derivative is `v_y(x, 0) = 3c (a^2 - x^2)`, which drives the edge velocity
//! `V(x) = F(3c(a^2 - x^2))`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{triangle_vertices, Point2};
use crate::mobility::MobilityLaw;
use crate::quadrature::gauss_legendre;

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TriangleOracle {
    pub a: f64,
    pub c: f64,
    /// Source constant `4 a c sqrt(3)`.
    pub lambda0: f64,
}

impl TriangleOracle {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "half side length must be positive, got {a}"
            )));
        }
        let c = 5.0 / (3.0 * a.powi(5));
        Ok(Self {
            a,
            c,
            lambda0: 4.0 * a * c * SQRT3,
        })
    }

    pub fn vertices(&self) -> [Point2; 3] {
        triangle_vertices(self.a)
    }

    pub fn centroid(&self) -> Point2 {
        Point2::new(0.0, self.a * SQRT3 / 3.0)
    }

    /// Closed triangle membership with an absolute slack `eps`.
    pub fn contains(&self, p: Point2, eps: f64) -> bool {
        p.y >= -eps && SQRT3 * p.x.abs() <= self.a * SQRT3 - p.y + eps
    }

    pub fn value(&self, p: Point2) -> f64 {
        let s = p.y - self.a * SQRT3;
        self.c * p.y * (s * s - 3.0 * p.x * p.x)
    }

    pub fn gradient(&self, p: Point2) -> Point2 {
        let s = p.y - self.a * SQRT3;
        let vx = -6.0 * self.c * p.x * p.y;
        let vy = self.c * (s * s - 3.0 * p.x * p.x) + 2.0 * self.c * p.y * s;
        Point2::new(vx, vy)
    }

    /// `|∂v/∂y|` on the bottom edge, `3c(a^2 - x^2)`.
    pub fn edge_gradient(&self, x: f64) -> f64 {
        3.0 * self.c * (self.a * self.a - x * x)
    }

    /// `|Δ_h v(p) + 4ac sqrt(3)|` with the five-point stencil of step `h`.
    pub fn laplacian_residual(&self, p: Point2, h: f64) -> f64 {
        let v = |dx: f64, dy: f64| self.value(Point2::new(p.x + dx, p.y + dy));
        let lap = (v(h, 0.0) + v(-h, 0.0) + v(0.0, h) + v(0.0, -h) - 4.0 * v(0.0, 0.0)) / (h * h);
        (lap + self.lambda0).abs()
    }

    /// `∫_D v` by a tensor Gauss rule; exact up to rounding since `v` is cubic.
    pub fn integral(&self) -> f64 {
        let (nodes, weights) = gauss_legendre(6);
        let height = self.a * SQRT3;
        let mut total = 0.0;
        for (&ty, &wy) in nodes.iter().zip(&weights) {
            let y = 0.5 * height * (ty + 1.0);
            let half_width = self.a - y / SQRT3;
            let inner: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(&tx, &wx)| wx * self.value(Point2::new(half_width * tx, y)))
                .sum();
            total += wy * inner * half_width;
        }
        total * 0.5 * height
    }

    /// Boundary values, integral and Laplacian of `v`, sampled.
    pub fn check_identities(&self, boundary_samples: usize) -> IdentityCheck {
        let [p0, p1, p2] = self.vertices();
        let edges = [(p0, p1), (p1, p2), (p2, p0)];
        let boundary_max_abs = (0..boundary_samples)
            .map(|k| {
                let s = 3.0 * k as f64 / boundary_samples as f64;
                let (a, b) = edges[(s as usize).min(2)];
                self.value(a.lerp(b, s - s.floor())).abs()
            })
            .fold(0.0, f64::max);
        let g = self.centroid();
        let h = 1e-3 * self.a;
        // Centroid plus points halfway towards each vertex and edge midpoint.
        let probes =
            [p0, p1, p2, p0.lerp(p1, 0.5), p1.lerp(p2, 0.5), p2.lerp(p0, 0.5)].map(|q| g.lerp(q, 0.5));
        let laplacian_rel_error = std::iter::once(g)
            .chain(probes)
            .map(|p| self.laplacian_residual(p, h) / self.lambda0)
            .fold(0.0, f64::max);
        IdentityCheck {
            a: self.a,
            integral: self.integral(),
            boundary_max_abs,
            interior_max: self.value(g),
            laplacian_rel_error,
        }
    }

    /// `c * 3a^5 / 5`, which the choice of `c` makes equal to one.
    pub fn closed_form_integral(&self) -> f64 {
        self.c * 3.0 * self.a.powi(5) / 5.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub a: f64,
    /// Quadrature value of `∫_D v`; should be one.
    pub integral: f64,
    pub boundary_max_abs: f64,
    /// `v` at the centroid, where it peaks.
    pub interior_max: f64,
    /// Largest `|Δ_h v + 4ac sqrt(3)| / (4ac sqrt(3))` over the probes.
    pub laplacian_rel_error: f64,
}

/// Largest half side length `a` satisfying the corner smallness condition
/// `36 c^2 x^2 >= 12 c / gamma` for `|x| >= a/2`, i.e. `a^3 <= 5 gamma / 4`.
pub fn choose_a(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "gamma must be positive and finite, got {gamma}"
        )));
    }
    Ok((1.25 * gamma).cbrt())
}

/// Radial torsion solution on the disk of radius `R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiskOracle {
    pub radius: f64,
    /// `∫ w = π R^4 / 8` for `w = (R^2 - r^2)/4`.
    pub mass: f64,
    /// `|∇w|` on the boundary, `R/2`.
    pub boundary_flux: f64,
    /// `1/M`.
    pub lambda: f64,
    /// `|Du|` on the boundary after normalization, `4/(π R^3)`.
    pub normalized_gradient: f64,
}

impl DiskOracle {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "disk radius must be positive, got {radius}"
            )));
        }
        let mass = PI * radius.powi(4) / 8.0;
        Ok(Self {
            radius,
            mass,
            boundary_flux: radius / 2.0,
            lambda: 1.0 / mass,
            normalized_gradient: (radius / 2.0) / mass,
        })
    }

    /// `w(r) = (R^2 - r^2) / 4`.
    pub fn value(&self, r: f64) -> f64 {
        (self.radius * self.radius - r * r) / 4.0
    }

    /// Radius at which `F(4/(π R^3)) = 0`, given the root `r0` of `F`.
    pub fn stationary_radius(root: f64) -> f64 {
        (4.0 / (PI * root)).cbrt()
    }
}

/// Edge velocity `V(x) = F(3c(a^2 - x^2))` along the bottom edge of `D`.
#[derive(Clone, Debug)]
pub struct EdgeVelocityProfile {
    pub oracle: TriangleOracle,
    pub law: MobilityLaw,
}

impl EdgeVelocityProfile {
    pub fn new(oracle: TriangleOracle, law: MobilityLaw) -> Self {
        Self { oracle, law }
    }

    fn argument(&self, x: f64) -> Result<f64> {
        let a = self.oracle.a;
        if !(x.abs() < a) {
            return Err(Error::OutOfDomain(format!(
                "edge velocity needs |x| < a = {a}, got x = {x}"
            )));
        }
        Ok(self.oracle.edge_gradient(x))
    }

    pub fn velocity(&self, x: f64) -> Result<f64> {
        self.law.velocity(self.argument(x)?)
    }

    /// `V''(x) = 36 c^2 x^2 F''(g) - 6 c F'(g)` with `g = 3c(a^2 - x^2)`.
    pub fn velocity_second_derivative(&self, x: f64) -> Result<f64> {
        let g = self.argument(x)?;
        let f = self.law.eval(g)?;
        let c = self.oracle.c;
        Ok(36.0 * c * c * x * x * f.second - 6.0 * c * f.first)
    }

    pub fn midpoint_gap(&self, x0: f64, x1: f64) -> Result<f64> {
        let mid = self.velocity(0.5 * (x0 + x1))?;
        Ok(0.5 * (self.velocity(x0)? + self.velocity(x1)?) - mid)
    }
}

/// Outcome of the midpoint-gap scan along the bottom edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NonconvexPair {
    pub x0: f64,
    pub x1: f64,
    /// `(V(x0) + V(x1))/2 - V((x0 + x1)/2)`.
    pub gap: f64,
    /// Longest run of scan points on which `V'' > 0`, if any.
    pub convex_interval: Option<(f64, f64)>,
}

pub const PAIR_GRID_POINTS: usize = 400;

/// Scans all ordered pairs of a 400-point grid on `[0.02a, 0.98a]`.
pub fn find_nonconvex_pair(profile: &EdgeVelocityProfile) -> Result<NonconvexPair> {
    let a = profile.oracle.a;
    find_nonconvex_pair_in(profile, 0.02 * a, 0.98 * a, PAIR_GRID_POINTS)
}

/// Maximizes the midpoint gap over all pairs `x0 < x1` of a uniform grid of
/// `points` nodes on `[lo, hi]`. A grid of `2n - 1` nodes contains the grid
/// of `n` nodes, so refining that way never lowers the best gap.
pub fn find_nonconvex_pair_in(
    profile: &EdgeVelocityProfile,
    lo: f64,
    hi: f64,
    points: usize,
) -> Result<NonconvexPair> {
    let a = profile.oracle.a;
    if !(0.0 < lo && lo < hi && hi < a) {
        return Err(Error::InvalidArgument(format!(
            "scan window must satisfy 0 < lo < hi < a, got [{lo}, {hi}] with a = {a}"
        )));
    }
    if points < 3 {
        return Err(Error::InvalidArgument(format!(
            "scan needs at least 3 points, got {points}"
        )));
    }
    let step = (hi - lo) / (points - 1) as f64;
    let grid: Vec<f64> = (0..points).map(|k| lo + k as f64 * step).collect();
    let v: Vec<f64> = grid.iter().map(|&x| profile.velocity(x)).collect::<Result<_>>()?;

    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..points {
        for j in (i + 1)..points {
            let mid = if (i + j) % 2 == 0 {
                v[(i + j) / 2]
            } else {
                profile.velocity(0.5 * (grid[i] + grid[j]))?
            };
            let gap = 0.5 * (v[i] + v[j]) - mid;
            if best.map_or(true, |(_, _, g)| gap > g) {
                best = Some((i, j, gap));
            }
        }
    }
    let (i, j, gap) = best.expect("at least one pair");
    if !(gap > 0.0) {
        return Err(Error::SearchFailure(format!(
            "no pair with positive midpoint gap on [{lo}, {hi}] for law `{}` (best {gap:.3e})",
            profile.law.name()
        )));
    }

    let mut convex_interval: Option<(f64, f64)> = None;
    let mut run_start: Option<usize> = None;
    for k in 0..=points {
        let positive = k < points && profile.velocity_second_derivative(grid[k])? > 0.0;
        match (positive, run_start) {
            (true, None) => run_start = Some(k),
            (false, Some(s)) => {
                let (x_lo, x_hi) = (grid[s], grid[k - 1]);
                if convex_interval.map_or(true, |(l, h)| x_hi - x_lo > h - l) {
                    convex_interval = Some((x_lo, x_hi));
                }
                run_start = None;
            }
            _ => {}
        }
    }

    Ok(NonconvexPair {
        x0: grid[i],
        x1: grid[j],
        gap,
        convex_interval,
    })
}
