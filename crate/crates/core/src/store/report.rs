use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::manifest::ManifestEntry;
use crate::error::StoreError;

/// Corpus composition counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub total: usize,
    pub per_theme: BTreeMap<String, usize>,
    pub per_layout: BTreeMap<String, usize>,
    pub single: usize,
    pub multi: usize,
    /// Multi-subplot figures whose cells all share one chart type.
    pub same_type_combos: usize,
    /// Distinct cell-type sequences, order significant.
    pub distinct_combos_ordered: usize,
    /// Distinct cell-type sets with multiplicity, order ignored.
    pub distinct_combos_multiset: usize,
    /// Occurrences of each chart type over all cells.
    pub chart_type_histogram: BTreeMap<String, usize>,
}

pub fn distribution_report<'a>(
    entries: impl IntoIterator<Item = &'a ManifestEntry>,
) -> Result<DistributionReport, StoreError> {
    let mut r = DistributionReport {
        total: 0,
        per_theme: BTreeMap::new(),
        per_layout: BTreeMap::new(),
        single: 0,
        multi: 0,
        same_type_combos: 0,
        distinct_combos_ordered: 0,
        distinct_combos_multiset: 0,
        chart_type_histogram: BTreeMap::new(),
    };
    let mut ordered = BTreeSet::new();
    let mut multiset = BTreeSet::new();
    for e in entries {
        r.total += 1;
        *r.per_theme.entry(e.theme.name().to_string()).or_default() += 1;
        *r.per_layout.entry(e.layout.to_string()).or_default() += 1;
        if e.layout.is_single() {
            r.single += 1;
        } else {
            r.multi += 1;
            if e.cell_types.windows(2).all(|w| w[0] == w[1]) {
                r.same_type_combos += 1;
            }
        }
        for t in &e.cell_types {
            *r.chart_type_histogram.entry(t.as_str().to_string()).or_default() += 1;
        }
        ordered.insert(e.cell_types.clone());
        let mut sorted = e.cell_types.clone();
        sorted.sort();
        multiset.insert(sorted);
    }
    if r.total == 0 {
        return Err(StoreError::Domain("distribution report of an empty manifest".into()));
    }
    r.distinct_combos_ordered = ordered.len();
    r.distinct_combos_multiset = multiset.len();
    Ok(r)
}

/// Counts after a retention step, with the retained count rounded from the
/// logged drop fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetentionLog {
    pub input: usize,
    pub drop_fraction: f64,
}

impl RetentionLog {
    pub fn from_counts(input: usize, retained: usize) -> Self {
        let drop_fraction = if input == 0 { 0.0 } else { 1.0 - retained as f64 / input as f64 };
        Self { input, drop_fraction }
    }

    pub fn retained(&self) -> usize {
        (self.input as f64 * (1.0 - self.drop_fraction)).round() as usize
    }
}
