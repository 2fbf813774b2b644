//! Shared report plumbing: least-squares fits, JSON wrapping and CSV rows.

use serde::Serialize;

/// Version stamp embedded in every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;

/// Least-squares line fit with its coefficient of determination.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares of `y` against `x`. Degenerate inputs (fewer than
/// two points, zero variance) return NaN slopes rather than panicking.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return LineFit { slope: f64::NAN, intercept: f64::NAN, r2: f64::NAN };
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return LineFit { slope: f64::NAN, intercept: my, r2: f64::NAN };
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    LineFit { slope, intercept, r2 }
}

/// Wrap a report payload with its kind, schema version and the full run
/// configuration for reproducibility.
pub fn wrap_json(
    kind: &str,
    config: serde_json::Value,
    payload: serde_json::Value,
) -> serde_json::Value {
    serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "config": config,
        "report": payload,
    })
}

/// Serialize any report type to pretty JSON.
pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}

/// One CSV line from preformatted fields.
pub fn csv_row(fields: &[String]) -> String {
    fields.join(",")
}
