//! Per-snapshot measurements and the CSV / SVG writers.
//!
//! All numbers are written as `%.12e` (C style, signed two-digit exponent).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::EvolutionState;
use crate::exact::EdgeVelocityProfile;
use crate::geometry::{convex_hull, default_convexity_tol, is_convex, ClosedCurve, Point2};
use crate::solver::TorsionSolution;

pub const SERIES_HEADER: &str = "t,area,lambda,min_flux,max_flux,min_curv,convex,G";
pub const FLUX_HEADER: &str = "s,x,y,flux,normalized_gradient";
pub const CURVE_HEADER: &str = "x,y";
pub const EDGE_PROFILE_HEADER: &str = "x,V,V2";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesRow {
    pub t: f64,
    pub area: f64,
    pub lambda: f64,
    /// Extremes of the normalized boundary gradient `|Du|`.
    pub min_flux: f64,
    pub max_flux: f64,
    pub min_curv: f64,
    pub convex: bool,
    #[serde(rename = "G")]
    pub gap: Option<f64>,
}

pub fn measure(state: &EvolutionState) -> TimeSeriesRow {
    let curve = state.curve();
    let grad = &state.field.boundary_gradient;
    TimeSeriesRow {
        t: state.t,
        area: curve.signed_area(),
        lambda: state.field.lambda,
        min_flux: grad.iter().copied().fold(f64::INFINITY, f64::min),
        max_flux: grad.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min_curv: curve
            .signed_curvatures()
            .into_iter()
            .fold(f64::INFINITY, f64::min),
        convex: is_convex(curve, default_convexity_tol(curve)),
        gap: None,
    }
}

/// `printf("%.12e")`.
pub fn format_sci(x: f64) -> String {
    let s = format!("{x:.12e}");
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let (sign, digits) = match exp.strip_prefix('-') {
                Some(d) => ('-', d),
                None => ('+', exp),
            };
            format!("{mantissa}e{sign}{digits:0>2}")
        }
        None => s,
    }
}

fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "refusing to write non-finite {what}"
        )))
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn series_csv(rows: &[TimeSeriesRow]) -> Result<String> {
    let mut out = String::from(SERIES_HEADER);
    out.push('\n');
    let mut last_t = f64::NEG_INFINITY;
    for row in rows {
        if !(row.t > last_t) {
            return Err(Error::InvalidArgument(format!(
                "series times must increase strictly, got {} after {last_t}",
                row.t
            )));
        }
        last_t = row.t;
        ensure_finite(
            &[
                row.t,
                row.area,
                row.lambda,
                row.min_flux,
                row.max_flux,
                row.min_curv,
            ],
            "series value",
        )?;
        if let Some(g) = row.gap {
            ensure_finite(&[g], "gap")?;
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            format_sci(row.t),
            format_sci(row.area),
            format_sci(row.lambda),
            format_sci(row.min_flux),
            format_sci(row.max_flux),
            format_sci(row.min_curv),
            row.convex,
            row.gap.map(format_sci).unwrap_or_default()
        );
    }
    Ok(out)
}

pub fn parse_series_csv(text: &str) -> Result<Vec<TimeSeriesRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(SERIES_HEADER) {
        return Err(Error::InvalidArgument("series CSV header mismatch".into()));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(Error::InvalidArgument(format!(
                    "series row {} has {} fields",
                    i + 1,
                    f.len()
                )));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidArgument(format!("series row {}: bad number `{s}`", i + 1)))
            };
            Ok(TimeSeriesRow {
                t: num(f[0])?,
                area: num(f[1])?,
                lambda: num(f[2])?,
                min_flux: num(f[3])?,
                max_flux: num(f[4])?,
                min_curv: num(f[5])?,
                convex: f[6].parse().map_err(|_| {
                    Error::InvalidArgument(format!("series row {}: bad flag `{}`", i + 1, f[6]))
                })?,
                gap: if f[7].is_empty() { None } else { Some(num(f[7])?) },
            })
        })
        .collect()
}

pub fn write_series_csv(path: &Path, rows: &[TimeSeriesRow]) -> Result<()> {
    write_file(path, &series_csv(rows)?)
}

pub fn read_series_csv(path: &Path) -> Result<Vec<TimeSeriesRow>> {
    parse_series_csv(&read_file(path)?)
}

pub fn curve_csv(curve: &ClosedCurve) -> Result<String> {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for p in curve.markers() {
        ensure_finite(&[p.x, p.y], "marker")?;
        let _ = writeln!(out, "{},{}", format_sci(p.x), format_sci(p.y));
    }
    Ok(out)
}

pub fn write_curve_csv(path: &Path, curve: &ClosedCurve) -> Result<()> {
    write_file(path, &curve_csv(curve)?)
}

pub fn read_curve_csv(path: &Path) -> Result<Vec<Point2>> {
    let text = read_file(path)?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(CURVE_HEADER) {
        return Err(Error::InvalidArgument(format!(
            "{}: expected header `{CURVE_HEADER}`",
            path.display()
        )));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let (x, y) = line.split_once(',').ok_or_else(|| {
                Error::InvalidArgument(format!("{}: malformed row `{line}`", path.display()))
            })?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidArgument(format!("{}: bad number `{s}`", path.display())))
            };
            Ok(Point2::new(parse(x)?, parse(y)?))
        })
        .collect()
}

/// Columns `s,x,y,flux,normalized_gradient` per marker.
pub fn flux_csv(solution: &TorsionSolution) -> Result<String> {
    let field = solution.normalize();
    let s = solution.curve().arclength();
    let mut out = String::from(FLUX_HEADER);
    out.push('\n');
    for (i, p) in solution.curve().markers().iter().enumerate() {
        let vals = [
            s[i],
            p.x,
            p.y,
            solution.boundary_flux()[i],
            field.boundary_gradient[i],
        ];
        ensure_finite(&vals, "flux row")?;
        let _ = writeln!(
            out,
            "{}",
            vals.iter().map(|&v| format_sci(v)).collect::<Vec<_>>().join(",")
        );
    }
    Ok(out)
}

/// Columns `x,V,V2` (`V2` is `V''`) on `samples` points across `(-a, a)`.
pub fn edge_profile_csv(profile: &EdgeVelocityProfile, samples: usize) -> Result<String> {
    let a = profile.oracle.a;
    let mut out = String::from(EDGE_PROFILE_HEADER);
    out.push('\n');
    for k in 0..samples {
        // Open interval: endpoints at ±a are excluded.
        let x = -a + 2.0 * a * (k as f64 + 0.5) / samples as f64;
        let v = profile.velocity(x)?;
        let v2 = profile.velocity_second_derivative(x)?;
        ensure_finite(&[x, v, v2], "edge profile")?;
        let _ = writeln!(out, "{},{},{}", format_sci(x), format_sci(v), format_sci(v2));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct SvgCurve<'a> {
    pub curve: &'a ClosedCurve,
    pub stroke: &'a str,
    pub label: String,
    /// Draw the convex hull as a dashed outline.
    pub show_hull: bool,
}

/// One `<path>` per curve, y axis pointing up, viewBox fitted to the data.
pub fn render_svg(curves: &[SvgCurve<'_>], segments: &[(Point2, Point2, &str)]) -> String {
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for c in curves {
        let (l, h) = c.curve.bounding_box();
        lo = Point2::new(lo.x.min(l.x), lo.y.min(l.y));
        hi = Point2::new(hi.x.max(h.x), hi.y.max(h.y));
    }
    if !lo.is_finite() {
        lo = Point2::new(-1.0, -1.0);
        hi = Point2::new(1.0, 1.0);
    }
    let span = (hi.x - lo.x).max(hi.y - lo.y).max(f64::MIN_POSITIVE);
    let margin = 0.05 * span;
    let stroke_width = 0.004 * span;
    let path = |pts: &[Point2]| {
        let mut d = String::new();
        for (i, p) in pts.iter().enumerate() {
            let _ = write!(d, "{}{:.6} {:.6} ", if i == 0 { "M" } else { "L" }, p.x, -p.y);
        }
        d.push('Z');
        d
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.6} {:.6} {:.6} {:.6}">"#,
        lo.x - margin,
        -hi.y - margin,
        hi.x - lo.x + 2.0 * margin,
        hi.y - lo.y + 2.0 * margin
    );
    for c in curves {
        let _ = writeln!(
            svg,
            r#"  <path d="{}" fill="none" stroke="{}" stroke-width="{stroke_width:.6}"><title>{}</title></path>"#,
            path(c.curve.markers()),
            c.stroke,
            c.label
        );
        if c.show_hull {
            let _ = writeln!(
                svg,
                r#"  <path d="{}" fill="none" stroke="{}" stroke-width="{:.6}" stroke-dasharray="{:.6}" opacity="0.6"/>"#,
                path(&convex_hull(c.curve.markers())),
                c.stroke,
                0.5 * stroke_width,
                4.0 * stroke_width
            );
        }
    }
    for (a, b, color) in segments {
        let _ = writeln!(
            svg,
            r#"  <line x1="{:.6}" y1="{:.6}" x2="{:.6}" y2="{:.6}" stroke="{color}" stroke-width="{stroke_width:.6}"/>"#,
            a.x, -a.y, b.x, -b.y
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// A curve to be written as an SVG snapshot.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub curve: ClosedCurve,
    pub convex: bool,
}

#[derive(Clone, Debug, Default)]
pub struct EmittedFiles {
    pub series: PathBuf,
    pub snapshots: Vec<PathBuf>,
}

/// Writes `series.csv` and one `snapshot_<k>.svg` per snapshot into `out_dir`.
pub fn emit(rows: &[TimeSeriesRow], snapshots: &[Snapshot], out_dir: &Path) -> Result<EmittedFiles> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let series = out_dir.join("series.csv");
    write_series_csv(&series, rows)?;
    let mut files = EmittedFiles {
        series,
        snapshots: Vec::new(),
    };
    for (k, snap) in snapshots.iter().enumerate() {
        let svg = render_svg(
            &[SvgCurve {
                curve: &snap.curve,
                stroke: "#1f77b4",
                label: format!("t = {}", format_sci(snap.t)),
                show_hull: !snap.convex,
            }],
            &[],
        );
        let path = out_dir.join(format!("snapshot_{k:04}.svg"));
        write_file(&path, &svg)?;
        files.snapshots.push(path);
    }
    Ok(files)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidArgument(format!("cannot serialize {}: {e}", path.display())))?;
    write_file(path, &(text + "\n"))
}

pub(crate) fn write_text(path: &Path, contents: &str) -> Result<()> {
    write_file(path, contents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::TriangleOracle;
    use crate::geometry::make_disk;
    use crate::mobility::MobilityLaw;
    use crate::solver::{solve_torsion, SolverConfig};

    fn row(t: f64) -> TimeSeriesRow {
        TimeSeriesRow {
            t,
            area: std::f64::consts::PI + t,
            lambda: 8.0 / std::f64::consts::PI,
            min_flux: 1.0 / 3.0,
            max_flux: 2.0 / 3.0,
            min_curv: -1e-7 * t,
            convex: t < 0.5,
            gap: if t > 0.0 { Some(0.1 * t) } else { None },
        }
    }

    #[test]
    fn c_style_scientific_format() {
        assert_eq!(format_sci(1.0), "1.000000000000e+00");
        assert_eq!(format_sci(-0.000123), "-1.230000000000e-04");
        assert_eq!(format_sci(6.02e23), "6.020000000000e+23");
        assert_eq!(format_sci(1e-300), "1.000000000000e-300");
    }

    #[test]
    fn empty_series_is_header_only() {
        assert_eq!(series_csv(&[]).unwrap(), format!("{SERIES_HEADER}\n"));
    }

    #[test]
    fn series_round_trip_is_stable() {
        let rows = vec![row(0.0), row(0.25), row(0.75)];
        let text = series_csv(&rows).unwrap();
        assert_eq!(text.lines().count(), 4);
        let parsed = parse_series_csv(&text).unwrap();
        assert_eq!(series_csv(&parsed).unwrap(), text);
        for (a, b) in rows.iter().zip(&parsed) {
            assert!((a.area - b.area).abs() <= 1e-12 * a.area);
            assert_eq!(a.convex, b.convex);
            assert_eq!(a.gap.is_some(), b.gap.is_some());
        }
    }

    #[test]
    fn series_rejects_non_finite_and_unordered_rows() {
        let mut bad = row(0.1);
        bad.lambda = f64::NAN;
        assert!(series_csv(&[bad]).is_err());
        assert!(series_csv(&[row(0.2), row(0.1)]).is_err());
    }

    #[test]
    fn measure_disk() {
        let law = MobilityLaw::parse("p2").unwrap();
        let state =
            EvolutionState::new(make_disk(1.0, 256).unwrap(), &law, &SolverConfig::default()).unwrap();
        let r = measure(&state);
        assert!((r.area - std::f64::consts::PI).abs() < 1e-3);
        assert!((r.lambda - 8.0 / std::f64::consts::PI).abs() < 1e-3);
        assert!(r.convex);
    }

    #[test]
    fn curve_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let c = make_disk(1.0, 32).unwrap();
        write_curve_csv(&path, &c).unwrap();
        let back = read_curve_csv(&path).unwrap();
        assert_eq!(back.len(), 32);
        for (a, b) in c.markers().iter().zip(&back) {
            assert!(a.distance(*b) < 1e-12);
        }
    }

    #[test]
    fn flux_and_profile_csv_shapes() {
        let c = make_disk(1.0, 64).unwrap();
        let sol = solve_torsion(&c, &SolverConfig::default()).unwrap();
        let text = flux_csv(&sol).unwrap();
        assert!(text.starts_with(FLUX_HEADER));
        assert_eq!(text.lines().count(), 65);
        let profile = EdgeVelocityProfile::new(
            TriangleOracle::new(1.0).unwrap(),
            MobilityLaw::parse("p2").unwrap(),
        );
        let text = edge_profile_csv(&profile, 11).unwrap();
        assert_eq!(text.lines().count(), 12);
    }

    #[test]
    fn emit_writes_files_and_hull_for_nonconvex() {
        let dir = tempfile::tempdir().unwrap();
        let c = make_disk(1.0, 32).unwrap();
        let files = emit(
            &[row(0.0), row(1.0)],
            &[Snapshot {
                t: 1.0,
                curve: c,
                convex: false,
            }],
            dir.path(),
        )
        .unwrap();
        assert_eq!(read_series_csv(&files.series).unwrap().len(), 2);
        let svg = std::fs::read_to_string(&files.snapshots[0]).unwrap();
        assert!(svg.contains("viewBox"));
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn emit_reports_unwritable_directory() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        std::fs::write(&file, "x").unwrap();
        let err = emit(&[], &[], &file.join("sub")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("plain"));
    }
}
