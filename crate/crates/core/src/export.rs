//! Report files: JSON results and coverage, GeoJSON layouts.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::accessibility::{AccessibilityField, BinSpec, CoverageReport};
use crate::error::{Error, Result};
use crate::geodata::{write_file, Scenario};

/// Pretty-printed JSON with a trailing newline.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = to_json_string(value)?;
    write_file(path, |w| {
        std::io::Write::write_all(w, text.as_bytes()).map_err(|e| Error::io(path, e))
    })
}

/// Coverage as a bare array of `{label, lower_bound, population, share}`.
pub fn write_coverage(path: &Path, report: &CoverageReport) -> Result<()> {
    write_json(path, &report.bins)
}

pub fn write_accessibility(path: &Path, field: &AccessibilityField) -> Result<()> {
    write_file(path, |w| field.write_csv(w).map_err(|e| Error::io(path, e)))
}

/// Sites with `{id, status, opened}` and demand points with per-group
/// accessibility and bin label.
pub fn layout_geojson(
    scenario: &Scenario,
    open_sites: &BTreeSet<String>,
    fields: &BTreeMap<String, AccessibilityField>,
    bins: &BinSpec,
) -> Value {
    let point = |lon: f64, lat: f64| json!({"type": "Point", "coordinates": [lon, lat]});
    let mut features = Vec::new();
    for site in scenario.sites() {
        features.push(json!({
            "type": "Feature",
            "geometry": point(site.location.lon, site.location.lat),
            "properties": {
                "kind": "site",
                "id": site.id,
                "status": site.status.to_string(),
                "opened": open_sites.contains(&site.id),
                "capacity": site.capacity,
            },
        }));
    }
    for (i, d) in scenario.demands().iter().enumerate() {
        let mut props = Map::new();
        props.insert("kind".into(), json!("demand"));
        props.insert("id".into(), json!(d.id));
        for (group, field) in fields {
            let a = field.scores[i];
            props.insert(format!("A_{group}"), json!(a));
            props.insert(format!("bin_{group}"), json!(bins.bins()[bins.classify(a)].label));
        }
        features.push(json!({
            "type": "Feature",
            "geometry": point(d.location.lon, d.location.lat),
            "properties": props,
        }));
    }
    json!({"type": "FeatureCollection", "features": features})
}
