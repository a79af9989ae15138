//! Stratified train/validation/test splits with exact-proportional
//! per-class allocation (largest-remainder rounding, within one sample).

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::substream;

use super::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub ratios: (f64, f64, f64),
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { ratios: (0.8, 0.1, 0.1), stratified: true, seed: 42 }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), EvalError> {
        let (a, b, c) = self.ratios;
        if !(a > 0.0 && b > 0.0 && c > 0.0) {
            return Err(EvalError::InvalidSpec("all split ratios must be positive".into()));
        }
        if ((a + b + c) - 1.0).abs() > 1e-9 {
            return Err(EvalError::InvalidSpec(format!("split ratios must sum to 1, got {}", a + b + c)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Largest-remainder allocation of `m` items over three ratios; remainders
/// break ties toward the earlier split.
fn allocate(m: usize, ratios: (f64, f64, f64)) -> [usize; 3] {
    let targets = [m as f64 * ratios.0, m as f64 * ratios.1, m as f64 * ratios.2];
    let mut counts = [targets[0] as usize, targets[1] as usize, targets[2] as usize];
    let assigned: usize = counts.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| {
        let fi = targets[i] - counts[i] as f64;
        let fj = targets[j] - counts[j] as f64;
        fj.partial_cmp(&fi).unwrap().then(i.cmp(&j))
    });
    for &slot in order.iter().take(m - assigned) {
        counts[slot] += 1;
    }
    counts
}

/// Split sample indices by binary label. Per-class counts in every split
/// are within one of exact proportionality; splits are disjoint and
/// exhaustive; deterministic given the seed.
pub fn stratified_split(labels: &[u8], spec: &SplitSpec) -> Result<SplitIndices, EvalError> {
    spec.validate()?;
    let mut rng = substream(spec.seed, "split");
    let mut out = SplitIndices { train: Vec::new(), val: Vec::new(), test: Vec::new() };

    let groups: Vec<Vec<usize>> = if spec.stratified {
        let mut by_class = vec![Vec::new(), Vec::new()];
        for (i, &l) in labels.iter().enumerate() {
            by_class[(l == 1) as usize].push(i);
        }
        by_class.into_iter().filter(|g| !g.is_empty()).collect()
    } else {
        vec![(0..labels.len()).collect()]
    };

    for mut group in groups {
        let label = labels[group[0]];
        let counts = allocate(group.len(), spec.ratios);
        if spec.stratified && counts.contains(&0) {
            return Err(EvalError::ClassTooSmall { label, count: group.len() });
        }
        group.shuffle(&mut rng);
        out.train.extend(&group[..counts[0]]);
        out.val.extend(&group[counts[0]..counts[0] + counts[1]]);
        out.test.extend(&group[counts[0] + counts[1]..]);
    }
    out.train.sort_unstable();
    out.val.sort_unstable();
    out.test.sort_unstable();
    Ok(out)
}

/// Id-list wrapper over [`stratified_split`].
#[allow(clippy::type_complexity)]
pub fn split_ids(
    sample_ids: &[String],
    labels: &[u8],
    spec: &SplitSpec,
) -> Result<(Vec<String>, Vec<String>, Vec<String>), EvalError> {
    if sample_ids.len() != labels.len() {
        return Err(EvalError::LengthMismatch { left: sample_ids.len(), right: labels.len() });
    }
    let idx = stratified_split(labels, spec)?;
    let pick = |v: &[usize]| v.iter().map(|&i| sample_ids[i].clone()).collect();
    Ok((pick(&idx.train), pick(&idx.val), pick(&idx.test)))
}
