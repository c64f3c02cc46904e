//! Plain-text point files and the JSON verification report.
//!
//! Point files carry one point per line, `d+1` whitespace-separated
//! decimal coordinates, with an optional header `# sphdesign d=<d> n=<N>`.
//! Coordinates are written with 17 significant digits so a write/read
//! round trip is bit-exact for f64.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fundamental::{is_fundamental_system, RankReport};
use crate::geometry::{mesh_norm_estimate, mesh_ratio, separation_distance, PointSet};
use crate::optimizer::{certify, Route, Tolerances, Verdict};
use crate::quantities::design_quantities;
use crate::scalar::Scalar;
use crate::special::{dgs_lower_bound, SphereDim};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// The tolerance by which a row norm may deviate from 1 before the file is
/// rejected; rows within it are renormalized on read.
pub const NORM_TOLERANCE: f64 = 1e-8;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses the point-file text format. The header, when present, must agree
/// with the data; without it the dimension is inferred from the first row.
pub fn points_from_str(text: &str) -> Result<PointSet<f64>> {
    let mut declared: Option<(u32, usize)> = None;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(spec) = rest.strip_prefix("sphdesign") {
                let mut d = None;
                let mut n = None;
                for tok in spec.split_whitespace() {
                    if let Some(v) = tok.strip_prefix("d=") {
                        d = Some(v.parse::<u32>().map_err(|_| {
                            parse_err(lineno, format!("bad header dimension `{v}`"))
                        })?);
                    } else if let Some(v) = tok.strip_prefix("n=") {
                        n = Some(v.parse::<usize>().map_err(|_| {
                            parse_err(lineno, format!("bad header count `{v}`"))
                        })?);
                    } else {
                        return Err(parse_err(lineno, format!("bad header token `{tok}`")));
                    }
                }
                match (d, n) {
                    (Some(d), Some(n)) => declared = Some((d, n)),
                    _ => return Err(parse_err(lineno, "header needs both d= and n=")),
                }
            }
            continue;
        }
        let coords: Vec<f64> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| parse_err(lineno, format!("not a number: `{tok}`")))
            })
            .collect::<Result<_>>()?;
        for &c in &coords {
            if !c.is_finite() {
                return Err(parse_err(lineno, "non-finite coordinate"));
            }
        }
        rows.push((lineno, coords));
    }

    if rows.is_empty() {
        return Err(parse_err(0, "no data rows"));
    }
    let ambient = match declared {
        Some((d, _)) => d as usize + 1,
        None => rows[0].1.len(),
    };
    if ambient < 2 {
        return Err(parse_err(rows[0].0, "points need at least 2 coordinates"));
    }
    if let Some((_, n)) = declared {
        if n != rows.len() {
            return Err(parse_err(
                rows.last().unwrap().0,
                format!("header declares n={n} but file has {} rows", rows.len()),
            ));
        }
    }

    for (lineno, coords) in &rows {
        if coords.len() != ambient {
            return Err(parse_err(
                *lineno,
                format!("expected {ambient} coordinates, found {}", coords.len()),
            ));
        }
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(parse_err(
                *lineno,
                format!("row norm {norm:.6e} deviates from 1 by more than {NORM_TOLERANCE:e}"),
            ));
        }
    }

    let d = SphereDim::new((ambient - 1) as u32)?;
    let coords: Vec<Vec<f64>> = rows.into_iter().map(|(_, c)| c).collect();
    PointSet::from_coords(d, &coords)
}

/// Reads a point set from a file.
pub fn read_points(path: impl AsRef<Path>) -> Result<PointSet<f64>> {
    let text = fs::read_to_string(path)?;
    points_from_str(&text)
}

/// Renders a point set in the file format, 17 significant digits per
/// coordinate.
pub fn points_to_string(x: &PointSet<f64>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# sphdesign d={} n={}", x.dim().value(), x.len());
    for p in x.points() {
        let mut first = true;
        for c in p.iter() {
            if !first {
                out.push(' ');
            }
            let _ = write!(out, "{c:.16e}");
            first = false;
        }
        out.push('\n');
    }
    out
}

/// Writes a point set to a file.
pub fn write_points(path: impl AsRef<Path>, x: &PointSet<f64>) -> Result<()> {
    fs::write(path, points_to_string(x))?;
    Ok(())
}

/// One rank test in the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankSection {
    pub tested_degree: usize,
    pub required_rank: usize,
    pub numerical_rank: usize,
    pub is_fundamental: bool,
    pub ill_conditioned: bool,
    pub tolerance_used: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl RankSection {
    fn from_report<T: Scalar>(r: &RankReport<T>) -> Self {
        RankSection {
            tested_degree: r.tested_degree,
            required_rank: r.required_rank,
            numerical_rank: r.numerical_rank,
            is_fundamental: r.is_fundamental,
            ill_conditioned: r.ill_conditioned,
            tolerance_used: r.tolerance_used.to_f64(),
            reason: r.reason.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankSections {
    pub t: RankSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_plus_1: Option<RankSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToleranceSection {
    pub tol_stat: f64,
    pub tol_a: f64,
    pub tol_d: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<f64>,
}

/// The JSON verification report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub d: u32,
    pub t: usize,
    pub n: usize,
    pub a_value: f64,
    pub d_value: Option<f64>,
    pub weyl_residual_sq: f64,
    pub rank: RankSections,
    pub mesh_norm_estimate: f64,
    pub separation: Option<f64>,
    pub mesh_ratio: Option<f64>,
    pub dgs_lower_bound: u64,
    /// "certified_design" | "stationary_but_uncertified" | "not_design"
    /// | "insufficient_points"
    pub verdict: String,
    /// "variational" | "nonlinear" when a route certified.
    pub route: Option<String>,
    pub tolerances: ToleranceSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub tool_version: String,
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::CertifiedDesign => "certified_design",
        Verdict::StationaryButUncertified => "stationary_but_uncertified",
        Verdict::NotDesign => "not_design",
    }
}

fn route_str(r: Route) -> &'static str {
    match r {
        Route::Variational => "variational",
        Route::Nonlinear => "nonlinear",
    }
}

/// Builds the full report for a point set: quantities, rank tests,
/// geometry diagnostics, and the certification verdict. When
/// N < dim(P_t) no certification route exists and the verdict is
/// `insufficient_points`, with the raw quantities still reported.
pub fn build_report(
    x: &PointSet<f64>,
    t: usize,
    tolerances: &Tolerances<f64>,
    resolution: usize,
) -> Result<Report> {
    let q = design_quantities(x, t)?;
    let estimate = mesh_norm_estimate(x, resolution);
    let separation = separation_distance(x).ok();
    let ratio = mesh_ratio(x, resolution).ok();
    let dgs = dgs_lower_bound(x.dim(), t)?;

    let tol_section = ToleranceSection {
        tol_stat: tolerances.tol_stat,
        tol_a: tolerances.tol_a,
        tol_d: tolerances.tol_d,
        rank_tol: tolerances.rank_tol,
    };

    let (rank, verdict, route, note) = match certify(x, t, tolerances) {
        Ok(report) => (
            RankSections {
                t: RankSection::from_report(&report.rank_t),
                t_plus_1: report.rank_t_plus_1.as_ref().map(RankSection::from_report),
            },
            verdict_str(report.verdict).to_string(),
            report.route.map(|r| route_str(r).to_string()),
            report.note,
        ),
        Err(Error::InsufficientPoints { n, dim_pt }) => {
            let rank_tol = tolerances
                .rank_tol
                .unwrap_or_else(|| crate::fundamental::default_rank_tolerance::<f64>(x.len()));
            let rank_t = is_fundamental_system(x, t, rank_tol)?;
            (
                RankSections {
                    t: RankSection::from_report(&rank_t),
                    t_plus_1: None,
                },
                "insufficient_points".to_string(),
                None,
                Some(format!(
                    "no certification route: N = {n} < dim(P_t) = {dim_pt}"
                )),
            )
        }
        Err(e) => return Err(e),
    };

    Ok(Report {
        d: x.dim().value(),
        t,
        n: x.len(),
        a_value: q.a_value,
        d_value: q.d_value,
        weyl_residual_sq: q.weyl_residual_sq,
        rank,
        mesh_norm_estimate: estimate.lower_bound,
        separation,
        mesh_ratio: ratio,
        dgs_lower_bound: dgs,
        verdict,
        route,
        tolerances: tol_section,
        note,
        tool_version: TOOL_VERSION.to_string(),
    })
}

/// Does the report record a certified design with N >= dim(P_t)?
pub fn report_certified(report: &Report) -> bool {
    report.verdict == "certified_design"
}

/// Serializes with every real at 17 significant digits (`{:.16e}`),
/// exceeding serde_json's shortest-round-trip default.
struct FullPrecision;

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.8e}")
    }
}

/// JSON text of the report with all reals at 17 significant digits.
pub fn report_to_json(report: &Report) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision);
    report
        .serialize(&mut ser)
        .expect("report serialization cannot fail");
    String::from_utf8(buf).expect("serializer emits UTF-8")
}

/// Human-readable table form of the report.
pub fn report_to_table(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "d                   {}", report.d);
    let _ = writeln!(out, "t                   {}", report.t);
    let _ = writeln!(out, "n                   {}", report.n);
    let _ = writeln!(out, "a_value             {:.16e}", report.a_value);
    match report.d_value {
        Some(v) => {
            let _ = writeln!(out, "d_value             {v:.16e}");
        }
        None => {
            let _ = writeln!(out, "d_value             (needs N >= 2)");
        }
    }
    let _ = writeln!(out, "weyl_residual_sq    {:.16e}", report.weyl_residual_sq);
    let _ = writeln!(
        out,
        "rank(t={})           {}/{}{}",
        report.rank.t.tested_degree,
        report.rank.t.numerical_rank,
        report.rank.t.required_rank,
        if report.rank.t.is_fundamental {
            " fundamental"
        } else {
            ""
        }
    );
    if let Some(r1) = &report.rank.t_plus_1 {
        let _ = writeln!(
            out,
            "rank(t={})           {}/{}{}",
            r1.tested_degree,
            r1.numerical_rank,
            r1.required_rank,
            if r1.is_fundamental { " fundamental" } else { "" }
        );
    }
    let _ = writeln!(out, "mesh_norm_estimate  {:.6}", report.mesh_norm_estimate);
    if let Some(s) = report.separation {
        let _ = writeln!(out, "separation          {s:.6}");
    }
    if let Some(r) = report.mesh_ratio {
        let _ = writeln!(out, "mesh_ratio          {r:.6}");
    }
    let _ = writeln!(out, "dgs_lower_bound     {}", report.dgs_lower_bound);
    let _ = writeln!(out, "verdict             {}", report.verdict);
    let _ = writeln!(
        out,
        "route               {}",
        report.route.as_deref().unwrap_or("-")
    );
    if let Some(note) = &report.note {
        let _ = writeln!(out, "note                {note}");
    }
    let _ = writeln!(out, "tool_version        {}", report.tool_version);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{octahedron, random_uniform, tetrahedron};
    use crate::quantities::a_quantity;

    fn s2() -> SphereDim {
        SphereDim::new(2).unwrap()
    }

    #[test]
    fn round_trip_bit_exact() {
        let x = random_uniform::<f64>(s2(), 20, 7);
        let text = points_to_string(&x);
        let y = points_from_str(&text).unwrap();
        assert_eq!(x.len(), y.len());
        for (p, q) in x.points().iter().zip(y.points()) {
            for (a, b) in p.iter().zip(q.iter()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        let a0 = a_quantity(&x, 3).unwrap();
        let a1 = a_quantity(&y, 3).unwrap();
        assert!((a0 - a1).abs() < 1e-14);
    }

    #[test]
    fn parses_headerless_file() {
        let text = "1 0 0\n0 1 0\n0 0 1\n";
        let x = points_from_str(text).unwrap();
        assert_eq!(x.dim().value(), 2);
        assert_eq!(x.len(), 3);
    }

    #[test]
    fn header_mismatches_are_line_errors() {
        let text = "# sphdesign d=2 n=3\n1 0 0\n0 1 0\n";
        match points_from_str(text).unwrap_err() {
            Error::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("n=3"), "{message}");
            }
            e => panic!("unexpected error {e:?}"),
        }

        let text = "# sphdesign d=3 n=1\n1 0 0\n";
        match points_from_str(text).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected error {e:?}"),
        }
    }

    #[test]
    fn rejects_bad_rows_with_line_numbers() {
        let text = "1 0 0\n0 nope 0\n";
        match points_from_str(text).unwrap_err() {
            Error::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("nope"));
            }
            e => panic!("unexpected error {e:?}"),
        }

        // off-sphere beyond 1e-8
        let text = "1 0 0\n0 1.001 0\n";
        match points_from_str(text).unwrap_err() {
            Error::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("norm"), "{message}");
            }
            e => panic!("unexpected error {e:?}"),
        }

        let text = "1 0 0\n0 1 0 0\n";
        match points_from_str(text).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected error {e:?}"),
        }
    }

    #[test]
    fn renormalizes_within_tolerance() {
        let text = format!("{} 0 0\n0 1 0\n", 1.0 + 5e-9);
        let x = points_from_str(&text).unwrap();
        assert!((x.point(0).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn report_json_has_full_precision_reals() {
        let report = build_report(
            &tetrahedron::<f64>(),
            2,
            &Tolerances::default(),
            2_000,
        )
        .unwrap();
        assert_eq!(report.verdict, "insufficient_points");
        assert!(report.a_value < 1e-12);
        let json = report_to_json(&report);
        // every real appears in scientific notation with 16 fractional digits
        assert!(json.contains("\"a_value\":"), "{json}");
        let a_field = json
            .split("\"a_value\":")
            .nth(1)
            .unwrap()
            .split(',')
            .next()
            .unwrap();
        let mantissa = a_field.split('e').next().unwrap();
        let frac = mantissa.split('.').nth(1).unwrap_or("");
        assert_eq!(frac.len(), 16, "a_value = {a_field}");

        let parsed: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed.a_value.to_bits(), report.a_value.to_bits());
        assert_eq!(parsed.n, 4);
    }

    #[test]
    fn report_octahedron_t3_insufficient_but_zero_a() {
        let report = build_report(
            &octahedron::<f64>(),
            3,
            &Tolerances::default(),
            2_000,
        )
        .unwrap();
        assert_eq!(report.verdict, "insufficient_points");
        assert!(report.a_value < 1e-12);
        assert!(report.route.is_none());
        assert!(report.note.as_deref().unwrap().contains("16"));
        assert!((report.separation.unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn report_random_points_not_design() {
        let x = random_uniform::<f64>(s2(), 16, 3);
        let report = build_report(&x, 3, &Tolerances::default(), 2_000).unwrap();
        assert_eq!(report.verdict, "not_design");
        assert!(report.a_value > 1e-4);
        assert!(report.rank.t.is_fundamental);
        let table = report_to_table(&report);
        assert!(table.contains("not_design"));
    }
}
