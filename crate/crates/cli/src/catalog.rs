use serde::Serialize;

use crate::experiments::CATALOG;
use crate::params::Params;

#[derive(Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub anchor: &'static str,
    pub params: Params,
}

pub fn entries() -> Vec<CatalogEntry> {
    CATALOG
        .iter()
        .map(|e| CatalogEntry {
            name: e.name,
            anchor: e.anchor,
            params: e.params(),
        })
        .collect()
}

/// One line per experiment, in catalog order.
pub fn text() -> String {
    let width = CATALOG.iter().map(|e| e.name.len()).max().unwrap_or(0);
    CATALOG
        .iter()
        .map(|e| format!("{:<width$}  {}\n", e.name, e.anchor))
        .collect()
}

pub fn json() -> String {
    let mut s = serde_json::to_string_pretty(&entries()).expect("catalog serializes");
    s.push('\n');
    s
}
