//! Mobility laws `F`, mapping the contact-line gradient `|Du|` to the outward
//! normal velocity of the free boundary.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// `(F, F', F'')` at one argument.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LawValues {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

type CustomFn = Arc<dyn Fn(f64) -> LawValues + Send + Sync>;

#[derive(Clone)]
enum LawKind {
    /// `F(r) = r^p - 1`.
    PowerMinusOne(f64),
    /// `F(r) = r`.
    Identity,
    /// `F = 0`; not a valid mobility law, used to exercise transport plumbing.
    Zero,
    Custom(CustomFn),
}

#[derive(Clone)]
pub struct MobilityLaw {
    name: String,
    kind: LawKind,
}

impl fmt::Debug for MobilityLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MobilityLaw").field("name", &self.name).finish()
    }
}

impl MobilityLaw {
    pub fn power_minus_one(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidLaw(format!(
                "power law exponent must exceed 1, got {p}"
            )));
        }
        let name = if p == p.trunc() && p < 100.0 {
            format!("p{}", p as u32)
        } else {
            format!("p:{p}")
        };
        Ok(Self {
            name,
            kind: LawKind::PowerMinusOne(p),
        })
    }

    pub fn identity() -> Self {
        Self {
            name: "linear".into(),
            kind: LawKind::Identity,
        }
    }

    pub fn zero() -> Self {
        Self {
            name: "zero".into(),
            kind: LawKind::Zero,
        }
    }

    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> LawValues + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            kind: LawKind::Custom(Arc::new(f)),
        }
    }

    /// Parses `p2`, `p3`, `p:<exponent>`, `linear` or `zero`.
    pub fn parse(spec: &str) -> Result<Self> {
        match spec.trim() {
            "p2" => Self::power_minus_one(2.0),
            "p3" => Self::power_minus_one(3.0),
            "linear" => Ok(Self::identity()),
            "zero" => Ok(Self::zero()),
            other => {
                let exponent = other
                    .strip_prefix("p:")
                    .and_then(|e| e.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::InvalidLaw(format!(
                            "unknown law `{other}` (expected p2, p3, p:<value> or linear)"
                        ))
                    })?;
                Self::power_minus_one(exponent)
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, r: f64) -> Result<LawValues> {
        if !(r > 0.0) {
            return Err(Error::OutOfDomain(format!(
                "mobility law `{}` is defined for r > 0, got {r}",
                self.name
            )));
        }
        Ok(self.eval_unchecked(r))
    }

    fn eval_unchecked(&self, r: f64) -> LawValues {
        match &self.kind {
            LawKind::PowerMinusOne(p) => LawValues {
                value: r.powf(*p) - 1.0,
                first: p * r.powf(p - 1.0),
                second: p * (p - 1.0) * r.powf(p - 2.0),
            },
            LawKind::Identity => LawValues {
                value: r,
                first: 1.0,
                second: 0.0,
            },
            LawKind::Zero => LawValues {
                value: 0.0,
                first: 0.0,
                second: 0.0,
            },
            LawKind::Custom(f) => f(r),
        }
    }

    pub fn velocity(&self, r: f64) -> Result<f64> {
        self.eval(r).map(|v| v.value)
    }

    /// Closed-form `F''/F'` where one is known.
    pub fn closed_form_ratio(&self, r: f64) -> Option<f64> {
        match &self.kind {
            LawKind::PowerMinusOne(p) => Some((p - 1.0) / r),
            LawKind::Identity => Some(0.0),
            _ => None,
        }
    }

    /// Sampled check that `F' > 0` on a log grid over `[1e-6, 1e3]` and that
    /// `F'` agrees with central differences of `F`.
    pub fn validate(&self) -> Result<()> {
        for r in log_grid(1e-6, 1e3, 10) {
            let v = self.eval_unchecked(r);
            if !(v.first > 0.0) {
                return Err(Error::InvalidLaw(format!(
                    "`{}` has F'({r:.3e}) = {} <= 0",
                    self.name, v.first
                )));
            }
            let h = 1e-4 * r;
            let (up, down) = (self.eval_unchecked(r + h).value, self.eval_unchecked(r - h).value);
            let fd = (up - down) / (2.0 * h);
            // Relative agreement plus the cancellation error of the difference itself.
            let tol = 1e-5 * v.first.abs() + 10.0 * f64::EPSILON * (up.abs() + down.abs()) / (2.0 * h);
            if (fd - v.first).abs() > tol {
                return Err(Error::InvalidLaw(format!(
                    "`{}`: F' = {} disagrees with finite difference {fd} at r = {r:.3e}",
                    self.name, v.first
                )));
            }
        }
        Ok(())
    }
}

/// `per_decade` log-spaced points from `lo` to `hi` inclusive, ascending.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).round() as usize;
    (0..=n)
        .map(|k| lo * 10f64.powf(decades * k as f64 / n as f64))
        .collect()
}

/// Default probes: `1e-1` down to `1e-6`, five per decade, decreasing.
pub fn default_probes() -> Vec<f64> {
    let mut g = log_grid(1e-6, 1e-1, 5);
    g.reverse();
    g
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssumptionReport {
    pub satisfied: bool,
    /// Infimum of `F''/F'` over all probes.
    pub inf_ratio: f64,
    /// `(r, F''(r)/F'(r))` in probe order.
    pub ratios: Vec<(f64, f64)>,
}

/// Heuristic certificate for `lim inf_{r -> 0+} F''(r)/F'(r) >= gamma`.
///
/// The limit is judged on the last decade of probes (those within a factor
/// 10 of the smallest): every ratio there must reach `gamma`, and the
/// ratios must not decrease as `r` decreases.
pub fn check_assumption(law: &MobilityLaw, gamma: f64, probes: &[f64]) -> Result<AssumptionReport> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if probes.is_empty() || probes.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidArgument(
            "probe radii must be a non-empty list of positive values".into(),
        ));
    }
    let mut ratios = Vec::with_capacity(probes.len());
    for &r in probes {
        let v = law.eval(r)?;
        if !(v.first > 0.0) {
            return Err(Error::InvalidLaw(format!(
                "`{}` has F'({r:.3e}) = {} <= 0",
                law.name(),
                v.first
            )));
        }
        ratios.push((r, v.second / v.first));
    }
    let inf_ratio = ratios.iter().map(|&(_, q)| q).fold(f64::INFINITY, f64::min);

    let r_min = probes.iter().copied().fold(f64::INFINITY, f64::min);
    let mut tail: Vec<(f64, f64)> = ratios
        .iter()
        .copied()
        .filter(|&(r, _)| r <= 10.0 * r_min)
        .collect();
    tail.sort_by(|a, b| b.0.total_cmp(&a.0));
    let reaches = tail.iter().all(|&(_, q)| q >= gamma);
    let monotone = tail.windows(2).all(|w| w[1].1 >= w[0].1 * (1.0 - 1e-12));

    Ok(AssumptionReport {
        satisfied: reaches && monotone,
        inf_ratio,
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_values() {
        let p2 = MobilityLaw::parse("p2").unwrap();
        assert_eq!(
            p2.eval(2.0).unwrap(),
            LawValues {
                value: 3.0,
                first: 4.0,
                second: 2.0
            }
        );
        let p3 = MobilityLaw::parse("p3").unwrap();
        assert_eq!(
            p3.eval(1.0).unwrap(),
            LawValues {
                value: 0.0,
                first: 3.0,
                second: 6.0
            }
        );
        let r = 4.0 / std::f64::consts::PI;
        assert!((p3.velocity(r).unwrap() - (64.0 / std::f64::consts::PI.powi(3) - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn eval_rejects_non_positive_argument() {
        let p2 = MobilityLaw::parse("p2").unwrap();
        assert!(matches!(p2.eval(0.0), Err(Error::OutOfDomain(_))));
        assert!(matches!(p2.eval(-1.0), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn parse_variants() {
        assert_eq!(MobilityLaw::parse("p:2.5").unwrap().name(), "p:2.5");
        assert_eq!(MobilityLaw::parse("p:4").unwrap().name(), "p4");
        assert!(MobilityLaw::parse("p:1").is_err());
        assert!(MobilityLaw::parse("cubic").is_err());
    }

    #[test]
    fn validate_catches_bad_laws() {
        MobilityLaw::parse("p2").unwrap().validate().unwrap();
        MobilityLaw::identity().validate().unwrap();
        assert!(MobilityLaw::zero().validate().is_err());
        let inconsistent = MobilityLaw::custom("bad", |r| LawValues {
            value: r * r,
            first: 3.0 * r,
            second: 2.0,
        });
        assert!(inconsistent.validate().is_err());
    }

    #[test]
    fn assumption_for_power_laws_and_linear() {
        let probes = default_probes();
        for (spec, p) in [("p2", 2.0), ("p3", 3.0)] {
            let law = MobilityLaw::parse(spec).unwrap();
            let rep = check_assumption(&law, 1.0, &probes).unwrap();
            assert!(rep.satisfied);
            for &(r, q) in &rep.ratios {
                let exact = (p - 1.0) / r;
                assert!((q - exact).abs() <= 1e-10 * exact);
            }
        }
        let lin = check_assumption(&MobilityLaw::identity(), 1e-3, &probes).unwrap();
        assert!(!lin.satisfied);
        assert_eq!(lin.inf_ratio, 0.0);
    }

    #[test]
    fn assumption_rejects_decreasing_derivative() {
        let law = MobilityLaw::custom("decreasing", |r| LawValues {
            value: -r,
            first: -1.0,
            second: 0.0,
        });
        assert!(matches!(
            check_assumption(&law, 1.0, &default_probes()),
            Err(Error::InvalidLaw(_))
        ));
    }

    #[test]
    fn default_probes_span_five_decades() {
        let p = default_probes();
        assert!((p[0] - 1e-1).abs() < 1e-15);
        assert!((p[p.len() - 1] - 1e-6).abs() < 1e-20);
        assert!(p.windows(2).all(|w| w[1] < w[0]));
    }
}
