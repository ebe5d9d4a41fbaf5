use serde_json::Value;
use tropkern::{ExtReal, GridFunction, PointSet};

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// JSON result, optional CSV, and whether the run ended in a diagnosis.
pub struct Artifacts {
    pub json: Value,
    pub csv: Option<Table>,
    pub diagnosis: bool,
}

impl Artifacts {
    pub fn ok(json: Value) -> Self {
        Artifacts { json, csv: None, diagnosis: false }
    }

    pub fn with_csv(json: Value, csv: Table) -> Self {
        Artifacts { json, csv: Some(csv), diagnosis: false }
    }

    pub fn diagnosis(json: Value) -> Self {
        Artifacts { json, csv: None, diagnosis: true }
    }
}

fn coord_names(points: &PointSet) -> Vec<String> {
    let d = points.dim();
    if points.is_spacetime() {
        let space = d - 1;
        std::iter::once("t".to_string())
            .chain((0..space).map(|k| if space == 1 { "r".to_string() } else { format!("r{k}") }))
            .collect()
    } else if d == 1 {
        vec!["x".to_string()]
    } else {
        (0..d).map(|k| format!("x{k}")).collect()
    }
}

fn fmt(v: ExtReal) -> String {
    v.to_string()
}

/// Point coordinates followed by a `value` column.
pub fn function_table(f: &GridFunction) -> Table {
    let points = f.domain();
    let mut header = coord_names(points);
    header.push("value".into());
    let rows = points
        .iter()
        .zip(f.values())
        .map(|(p, &v)| p.iter().map(|c| c.to_string()).chain(std::iter::once(fmt(v))).collect())
        .collect();
    Table { header, rows }
}

/// Finite entries `(from, to, value)` of a gram on `points`.
pub fn pair_table(points: &PointSet, gram: &tropkern::Matrix) -> Table {
    let names = coord_names(points);
    let mut header: Vec<String> = names.iter().map(|n| format!("{n}_from")).collect();
    header.extend(names.iter().map(|n| format!("{n}_to")));
    header.push("value".into());
    let mut rows = Vec::new();
    for i in 0..points.len() {
        for j in 0..points.len() {
            let v = gram.get(i, j);
            if !v.is_finite() {
                continue;
            }
            let mut row: Vec<String> = points.point(i).iter().map(|c| c.to_string()).collect();
            row.extend(points.point(j).iter().map(|c| c.to_string()));
            row.push(fmt(v));
            rows.push(row);
        }
    }
    Table { header, rows }
}
