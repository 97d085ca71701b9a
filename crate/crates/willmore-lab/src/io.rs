//! File formats: surface and coefficient JSON, field CSV, golden tables,
//! and the RFC 4180 CSV writer used by all experiment tables.
//!
//! All parsers take untrusted input and fail with `Error::Config` instead
//! of panicking.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::GoldenEntry;
use crate::sphere::{build_chart, synthesize, HarmonicCoeffs, ScalarField, SphereChart};
use crate::surface::{GeometryBundle, GraphSurface};

// ---------------------------------------------------------------------------
// CSV writing (RFC 4180: CRLF records, UTF-8, '.' decimal separator)

/// Format a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct CsvTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.header.len(), "row arity mismatch");
        self.rows.push(cells);
    }

    pub fn push_floats(&mut self, cells: &[f64]) {
        self.push_row(cells.iter().map(|v| fmt_f64(*v)).collect());
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        write_record(&mut out, &self.header)?;
        for row in &self.rows {
            write_record(&mut out, row)?;
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

fn write_record(out: &mut Vec<u8>, cells: &[String]) -> Result<()> {
    let mut first = true;
    for cell in cells {
        if !first {
            out.push(b',');
        }
        first = false;
        if cell.contains(',') || cell.contains('"') || cell.contains('\n') {
            write!(out, "\"{}\"", cell.replace('"', "\"\""))?;
        } else {
            out.extend_from_slice(cell.as_bytes());
        }
    }
    out.extend_from_slice(b"\r\n");
    Ok(())
}

// ---------------------------------------------------------------------------
// surface serialization: chart header + u coefficients

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChartJson {
    pub xi: [f64; 3],
    pub lambda: f64,
    pub band_limit: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurfaceJson {
    pub chart: ChartJson,
    /// real harmonic coefficients of u, index l^2 + l + m
    pub u_coeffs: Vec<f64>,
}

pub fn surface_to_json(surface: &GraphSurface) -> SurfaceJson {
    let chart = &surface.chart;
    let coeffs = crate::sphere::analyze(&surface.u);
    SurfaceJson {
        chart: ChartJson {
            xi: [chart.xi().x, chart.xi().y, chart.xi().z],
            lambda: chart.lambda(),
            band_limit: chart.band_limit(),
        },
        u_coeffs: coeffs.a,
    }
}

pub fn parse_surface_json(text: &str) -> Result<GraphSurface> {
    let raw: SurfaceJson =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("surface json: {e}")))?;
    surface_from_json(&raw)
}

pub fn surface_from_json(raw: &SurfaceJson) -> Result<GraphSurface> {
    if !raw.chart.lambda.is_finite() || raw.chart.lambda <= 0.0 {
        return Err(Error::Config(format!(
            "chart radius must be positive and finite, got {}",
            raw.chart.lambda
        )));
    }
    if raw.chart.xi.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("chart offset must be finite".into()));
    }
    // transform tables grow like L^3; keep parsed surfaces desk-sized
    if raw.chart.band_limit > 128 {
        return Err(Error::Config(format!(
            "band limit {} exceeds the surface-file cap of 128",
            raw.chart.band_limit
        )));
    }
    let l = raw.chart.band_limit;
    let expect = (l + 1) * (l + 1);
    if raw.u_coeffs.len() != expect {
        return Err(Error::Config(format!(
            "expected {} coefficients for band limit {l}, got {}",
            expect,
            raw.u_coeffs.len()
        )));
    }
    if raw.u_coeffs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("coefficients must be finite".into()));
    }
    let chart = build_chart(
        Vector3::new(raw.chart.xi[0], raw.chart.xi[1], raw.chart.xi[2]),
        raw.chart.lambda,
        l,
    )?;
    let coeffs = HarmonicCoeffs {
        band_limit: l,
        a: raw.u_coeffs.clone(),
    };
    let u = synthesize(&coeffs, &chart);
    Ok(GraphSurface::new(chart, u))
}

// ---------------------------------------------------------------------------
// harmonic coefficient JSON

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoeffsJson {
    pub band_limit: usize,
    pub values: Vec<f64>,
}

pub fn coeffs_to_json(coeffs: &HarmonicCoeffs) -> CoeffsJson {
    CoeffsJson {
        band_limit: coeffs.band_limit,
        values: coeffs.a.clone(),
    }
}

pub fn parse_coeffs_json(text: &str) -> Result<HarmonicCoeffs> {
    let raw: CoeffsJson =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("coeffs json: {e}")))?;
    let expect = (raw.band_limit + 1) * (raw.band_limit + 1);
    if raw.band_limit > 4096 {
        return Err(Error::Config(format!(
            "band limit {} too large",
            raw.band_limit
        )));
    }
    if raw.values.len() != expect {
        return Err(Error::Config(format!(
            "expected {expect} coefficients, got {}",
            raw.values.len()
        )));
    }
    if raw.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("coefficients must be finite".into()));
    }
    Ok(HarmonicCoeffs {
        band_limit: raw.band_limit,
        a: raw.values,
    })
}

// ---------------------------------------------------------------------------
// field CSV: theta,phi,value

pub fn field_to_csv(field: &ScalarField) -> String {
    let chart = &field.chart;
    let mut out = String::from("theta,phi,value\r\n");
    for i in 0..chart.n_theta() {
        for j in 0..chart.n_phi() {
            let n = chart.node(i, j);
            out.push_str(&format!(
                "{},{},{}\r\n",
                fmt_f64(chart.theta(i)),
                fmt_f64(chart.phi(j)),
                fmt_f64(field.values[n])
            ));
        }
    }
    out
}

/// Parse a `theta,phi,value` table; tolerates CRLF or LF and a header row.
pub fn parse_field_csv(text: &str) -> Result<Vec<(f64, f64, f64)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r').trim();
        if line.is_empty() {
            continue;
        }
        if lineno == 0 && line.to_ascii_lowercase().starts_with("theta") {
            continue;
        }
        let mut cells = line.split(',');
        let mut next = |what: &str| -> Result<f64> {
            let cell = cells
                .next()
                .ok_or_else(|| Error::Config(format!("line {}: missing {what}", lineno + 1)))?;
            cell.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("line {}: bad {what}: {e}", lineno + 1)))
        };
        let theta = next("theta")?;
        let phi = next("phi")?;
        let value = next("value")?;
        if cells.next().is_some() {
            return Err(Error::Config(format!(
                "line {}: expected exactly 3 columns",
                lineno + 1
            )));
        }
        if !(theta.is_finite() && phi.is_finite() && value.is_finite()) {
            return Err(Error::Config(format!(
                "line {}: non-finite entry",
                lineno + 1
            )));
        }
        out.push((theta, phi, value));
    }
    Ok(out)
}

/// Reattach parsed rows to a chart grid when the node count matches and the
/// angles agree with the grid to 1e-9.
pub fn field_from_rows(chart: &Arc<SphereChart>, rows: &[(f64, f64, f64)]) -> Result<ScalarField> {
    if rows.len() != chart.node_count() {
        return Err(Error::ChartMismatch(format!(
            "{} rows vs {} grid nodes",
            rows.len(),
            chart.node_count()
        )));
    }
    let mut values = vec![0.0; chart.node_count()];
    for (k, (theta, phi, value)) in rows.iter().enumerate() {
        let i = k / chart.n_phi();
        let j = k % chart.n_phi();
        if (theta - chart.theta(i)).abs() > 1e-9 || (phi - chart.phi(j)).abs() > 1e-9 {
            return Err(Error::ChartMismatch(format!(
                "row {k} angles ({theta}, {phi}) do not match the grid"
            )));
        }
        values[chart.node(i, j)] = *value;
    }
    Ok(ScalarField::new(chart.clone(), values))
}

// ---------------------------------------------------------------------------
// bundle CSV export: node, H, |hring|^2, dmu

pub fn bundle_to_csv(bundle: &GeometryBundle) -> CsvTable {
    let mut t = CsvTable::new("bundle", &["node", "mean_curvature", "tracefree_sq", "dmu"]);
    for n in 0..bundle.node_count() {
        t.push_row(vec![
            n.to_string(),
            fmt_f64(bundle.mean_h[n]),
            fmt_f64(bundle.tracefree_sq[n]),
            fmt_f64(bundle.dmu[n]),
        ]);
    }
    t
}

// ---------------------------------------------------------------------------
// golden table

pub fn golden_to_json(entries: &[GoldenEntry]) -> String {
    serde_json::to_string_pretty(entries).expect("golden table serializes")
}

pub fn parse_golden_json(text: &str) -> Result<Vec<GoldenEntry>> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("golden table: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assert_close;

    #[test]
    fn surface_json_round_trip() {
        let chart = build_chart(Vector3::new(0.1, 0.0, -0.2), 3.0, 12).unwrap();
        let u = ScalarField::from_fn(&chart, |x| 0.05 * x.z);
        let s = GraphSurface::new(chart, u);
        let json = serde_json::to_string(&surface_to_json(&s)).unwrap();
        let back = parse_surface_json(&json).unwrap();
        assert!(back.chart.same_grid(&s.chart));
        for (a, b) in back.u.values.iter().zip(&s.u.values) {
            assert_close!(*a, *b, 1e-12);
        }
    }

    #[test]
    fn surface_json_rejects_malformed() {
        assert!(parse_surface_json("").is_err());
        assert!(parse_surface_json("{}").is_err());
        assert!(parse_surface_json(
            r#"{"chart":{"xi":[0,0,0],"lambda":1.0,"band_limit":8},"u_coeffs":[1.0]}"#
        )
        .is_err());
        assert!(parse_surface_json(
            r#"{"chart":{"xi":[0,0,0],"lambda":-1.0,"band_limit":8},"u_coeffs":[]}"#
        )
        .is_err());
    }

    #[test]
    fn coeffs_json_round_trip() {
        let mut c = HarmonicCoeffs::zeros(8);
        c.set(3, -2, 0.7);
        let json = serde_json::to_string(&coeffs_to_json(&c)).unwrap();
        let back = parse_coeffs_json(&json).unwrap();
        assert_eq!(back, c);
        assert!(parse_coeffs_json(r#"{"band_limit":2,"values":[0,0]}"#).is_err());
    }

    #[test]
    fn field_csv_round_trip() {
        let chart = build_chart(Vector3::zeros(), 1.0, 8).unwrap();
        let f = ScalarField::from_fn(&chart, |x| x.z * x.z);
        let text = field_to_csv(&f);
        let rows = parse_field_csv(&text).unwrap();
        let back = field_from_rows(&chart, &rows).unwrap();
        for (a, b) in back.values.iter().zip(&f.values) {
            assert_close!(*a, *b, 1e-12);
        }
    }

    #[test]
    fn field_csv_rejects_malformed() {
        assert!(parse_field_csv("a,b,c\n1,2").is_err());
        assert!(parse_field_csv("1,2,3,4").is_err());
        assert!(parse_field_csv("1,2,nanx").is_err());
        assert!(parse_field_csv("theta,phi,value\n").unwrap().is_empty());
    }

    #[test]
    fn csv_writer_format() {
        let mut t = CsvTable::new("t", &["a", "b"]);
        t.push_floats(&[1.0, 0.1]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        t.write_to(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("a,b\r\n"));
        assert!(text.contains("1.0000000000000000e0"));
    }

    #[test]
    fn golden_round_trip() {
        let table = crate::oracles::golden_table();
        let text = golden_to_json(&table);
        let back = parse_golden_json(&text).unwrap();
        assert_eq!(back.len(), table.len());
        assert_eq!(back[0], table[0]);
    }
}
