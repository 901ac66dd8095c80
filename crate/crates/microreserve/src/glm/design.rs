//! Categorical encoding and design-matrix assembly.
//!
//! All predictors enter the regressions as categorical levels (time
//! variables are capped integers, money variables are pre-binned), so the
//! design is one-hot with a declared reference level plus an intercept.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label given to levels merged for having fewer than `min_count` rows.
pub const OTHER_LEVEL: &str = "(other)";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    /// Distinct encoded levels; `levels[0]` is the reference.
    pub levels: Vec<String>,
    /// Raw label -> level index (covers labels merged into [`OTHER_LEVEL`]).
    level_map: BTreeMap<String, usize>,
}

impl Feature {
    pub fn n_columns(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }
}

/// Fitted categorical encoder; immutable and shareable after construction.
#[derive(Debug, Serialize, Deserialize)]
pub struct Encoder {
    pub features: Vec<Feature>,
    /// Labels unseen at fit time, mapped to the reference level.
    #[serde(skip)]
    unseen: AtomicU64,
}

impl Clone for Encoder {
    fn clone(&self) -> Self {
        Encoder {
            features: self.features.clone(),
            unseen: AtomicU64::new(self.unseen.load(Ordering::Relaxed)),
        }
    }
}

impl Encoder {
    /// Builds an encoder from one label column per feature. Levels with
    /// fewer than `min_count[f]` rows are merged into [`OTHER_LEVEL`]; the
    /// most frequent level (ties broken lexicographically) becomes the
    /// reference. Features that end up with a single level contribute no
    /// columns.
    pub fn fit(names: &[&str], columns: &[Vec<String>], min_count: &[u32]) -> Result<Encoder> {
        if names.len() != columns.len() || names.len() != min_count.len() {
            return Err(Error::Validation("encoder inputs are misaligned".to_string()));
        }
        let n = columns.first().map_or(0, |c| c.len());
        let mut features = Vec::with_capacity(names.len());
        for ((name, col), &min_c) in names.iter().zip(columns).zip(min_count) {
            if col.len() != n {
                return Err(Error::Validation(format!(
                    "feature {name} has {} rows, expected {n}",
                    col.len()
                )));
            }
            let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
            for label in col {
                *counts.entry(label.as_str()).or_insert(0) += 1;
            }
            let mut merged: BTreeMap<String, u64> = BTreeMap::new();
            let mut raw_to_level: BTreeMap<String, String> = BTreeMap::new();
            for (label, count) in &counts {
                let target = if *count < u64::from(min_c) {
                    OTHER_LEVEL.to_string()
                } else {
                    (*label).to_string()
                };
                *merged.entry(target.clone()).or_insert(0) += count;
                raw_to_level.insert((*label).to_string(), target);
            }
            // Most frequent first so the reference is the modal level.
            let mut ordered: Vec<(String, u64)> = merged.into_iter().collect();
            ordered.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            let levels: Vec<String> = ordered.into_iter().map(|(l, _)| l).collect();
            let index_of: BTreeMap<&str, usize> =
                levels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
            let mut level_map = BTreeMap::new();
            for (raw, target) in raw_to_level {
                level_map.insert(raw, index_of[target.as_str()]);
            }
            features.push(Feature { name: (*name).to_string(), levels, level_map });
        }
        Ok(Encoder { features, unseen: AtomicU64::new(0) })
    }

    /// Number of encoded predictor columns (excluding the intercept).
    pub fn n_columns(&self) -> usize {
        self.features.iter().map(Feature::n_columns).sum()
    }

    /// Column names in encoding order, excluding the intercept.
    pub fn column_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_columns());
        for f in &self.features {
            for level in &f.levels[1..] {
                names.push(format!("{}={}", f.name, level));
            }
        }
        names
    }

    /// Encodes one row of labels into `[1, one-hot...]`. Unseen labels map
    /// to the reference level and bump the warning counter.
    pub fn encode_row(&self, labels: &[&str]) -> Vec<f64> {
        debug_assert_eq!(labels.len(), self.features.len());
        let mut x = vec![0.0; self.n_columns() + 1];
        x[0] = 1.0;
        let mut offset = 1usize;
        for (f, label) in self.features.iter().zip(labels) {
            match f.level_map.get(*label) {
                Some(&idx) if idx > 0 => x[offset + idx - 1] = 1.0,
                Some(_) => {}
                None => {
                    self.unseen.fetch_add(1, Ordering::Relaxed);
                }
            }
            offset += f.n_columns();
        }
        x
    }

    pub fn unseen_level_count(&self) -> u64 {
        self.unseen.load(Ordering::Relaxed)
    }

    /// 1-based coefficient index (0 is the intercept) of the one-hot column
    /// for `label` of `feature`; `None` for the reference level or an
    /// unknown feature/label.
    pub fn coefficient_index(&self, feature: &str, label: &str) -> Option<usize> {
        let mut offset = 1usize;
        for f in &self.features {
            if f.name == feature {
                return match f.level_map.get(label) {
                    Some(&idx) if idx > 0 => Some(offset + idx - 1),
                    _ => None,
                };
            }
            offset += f.n_columns();
        }
        None
    }

    /// Assembles a weighted design matrix for the given label rows.
    pub fn design(
        &self,
        label_rows: &[Vec<String>],
        y: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<DesignMatrix> {
        if label_rows.len() != y.len() {
            return Err(Error::Validation("labels and responses differ in length".to_string()));
        }
        let p = self.n_columns() + 1;
        let mut x = Vec::with_capacity(label_rows.len() * p);
        for row in label_rows {
            let refs: Vec<&str> = row.iter().map(String::as_str).collect();
            x.extend_from_slice(&self.encode_row(&refs));
        }
        DesignMatrix::new(x, p, y, vec![1.0; label_rows.len()], class_names)
    }
}

/// Weighted design matrix. `x` is row-major `n x p` with a leading
/// intercept column of ones.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub x: Vec<f64>,
    pub n: usize,
    pub p: usize,
    /// Class labels in `0..class_names.len()`; class 0 is the reference.
    pub y: Vec<usize>,
    /// Row weights (collapsed duplicate rows carry their multiplicity).
    pub w: Vec<f64>,
    pub class_names: Vec<String>,
}

impl DesignMatrix {
    pub fn new(
        x: Vec<f64>,
        p: usize,
        y: Vec<usize>,
        w: Vec<f64>,
        class_names: Vec<String>,
    ) -> Result<DesignMatrix> {
        if p == 0 || !x.len().is_multiple_of(p) {
            return Err(Error::Validation("design storage is not n x p".to_string()));
        }
        let n = x.len() / p;
        if y.len() != n || w.len() != n {
            return Err(Error::Validation("responses or weights are misaligned".to_string()));
        }
        let k = class_names.len();
        if let Some(&bad) = y.iter().find(|&&c| c >= k) {
            return Err(Error::Validation(format!("class label {bad} out of range")));
        }
        Ok(DesignMatrix { x, n, p, y, w, class_names })
    }

    /// Intercept-only design from per-class counts.
    pub fn intercept_only(class_counts: &[f64], class_names: Vec<String>) -> Result<DesignMatrix> {
        let y: Vec<usize> = (0..class_counts.len()).collect();
        DesignMatrix::new(
            vec![1.0; class_counts.len()],
            1,
            y,
            class_counts.to_vec(),
            class_names,
        )
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn total_weight(&self) -> f64 {
        self.w.iter().sum()
    }

    /// Number of distinct observed classes.
    pub fn observed_classes(&self) -> usize {
        let mut seen = vec![false; self.class_names.len()];
        for (&c, &w) in self.y.iter().zip(&self.w) {
            if w > 0.0 {
                seen[c] = true;
            }
        }
        seen.iter().filter(|&&s| s).count()
    }

    /// Merges rows with identical predictors and response into weighted
    /// rows. One-hot predictors are bit-exact so grouping is safe. Worth
    /// calling when the number of distinct covariate patterns is far below
    /// the row count.
    pub fn collapse(&self) -> DesignMatrix {
        let mut groups: BTreeMap<(Vec<u64>, usize), f64> = BTreeMap::new();
        for i in 0..self.n {
            let bits: Vec<u64> = self.row(i).iter().map(|v| v.to_bits()).collect();
            *groups.entry((bits, self.y[i])).or_insert(0.0) += self.w[i];
        }
        let mut x = Vec::with_capacity(groups.len() * self.p);
        let mut y = Vec::with_capacity(groups.len());
        let mut w = Vec::with_capacity(groups.len());
        for ((bits, class), weight) in groups {
            x.extend(bits.into_iter().map(f64::from_bits));
            y.push(class);
            w.push(weight);
        }
        DesignMatrix { x, n: y.len(), p: self.p, y, w, class_names: self.class_names.clone() }
    }
}
