use serde::{Deserialize, Serialize};

use crate::franson::{DetectionEvent, Side};
use crate::io::first_decreasing;
use crate::{Error, Result};

/// One accepted A–B pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coincidence {
    pub index_a: usize,
    pub index_b: usize,
    /// `t_A − t_B`.
    pub delay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceSet {
    pub center: f64,
    pub half_width: f64,
    pub pairs: Vec<Coincidence>,
}

impl CoincidenceSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Pairs `t_A` with `t_B` whenever `|t_A − t_B − center| ≤ half_width`.
///
/// Every event is used at most once; candidates are accepted greedily in order
/// of increasing distance from the window center, ties broken by index, so the
/// result is deterministic. Pairs are returned sorted by A index.
pub fn pair_coincidences(a: &[f64], b: &[f64], center: f64, half_width: f64) -> Result<CoincidenceSet> {
    if !(half_width > 0.0) {
        return Err(Error::param("coincidence half width must be > 0"));
    }
    if let Some(index) = first_decreasing(a).or_else(|| first_decreasing(b)) {
        return Err(Error::Unsorted { index });
    }
    let mut cand: Vec<(f64, usize, usize)> = Vec::new();
    let mut lo = 0;
    for (i, &ta) in a.iter().enumerate() {
        while lo < b.len() && ta - b[lo] - center > half_width {
            lo += 1;
        }
        let mut j = lo;
        while j < b.len() && ta - b[j] - center >= -half_width {
            cand.push(((ta - b[j] - center).abs(), i, j));
            j += 1;
        }
    }
    cand.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in cand {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            pairs.push(Coincidence { index_a: i, index_b: j, delay: a[i] - b[j] });
        }
    }
    pairs.sort_by_key(|c| c.index_a);
    Ok(CoincidenceSet { center, half_width, pairs })
}

/// Coincidence counts `n[port_a − 1][port_b − 1]` between the two sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct JointCounts {
    pub n: [[u64; 2]; 2],
}

impl JointCounts {
    pub fn total(&self) -> u64 {
        self.n.iter().flatten().sum()
    }
}

/// Pairs port-resolved detections of both sides (ports ignored for pairing)
/// and counts coincidences per port combination.
pub fn joint_counts(events: &[DetectionEvent], center: f64, half_width: f64) -> Result<JointCounts> {
    let a: Vec<&DetectionEvent> = events.iter().filter(|e| e.side == Side::A).collect();
    let b: Vec<&DetectionEvent> = events.iter().filter(|e| e.side == Side::B).collect();
    let ta: Vec<f64> = a.iter().map(|e| e.time).collect();
    let tb: Vec<f64> = b.iter().map(|e| e.time).collect();
    let set = pair_coincidences(&ta, &tb, center, half_width)?;
    let mut counts = JointCounts::default();
    for c in &set.pairs {
        counts.n[a[c.index_a].port as usize - 1][b[c.index_b].port as usize - 1] += 1;
    }
    Ok(counts)
}
