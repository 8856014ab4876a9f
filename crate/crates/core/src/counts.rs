use serde::Serialize;

use crate::dependence::TwoByTwo;
use crate::error::{domain, Result};
use crate::model::{check_leaves, ProbVector};

/// Observed (or imputed) counts over leaf level combinations, optionally
/// crossed with the root, in the crate-wide cell order.
///
/// Counts are stored as `f64` so that E-step pseudo-counts and scaled
/// population tables share the type with integer data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountTable {
    leaves: usize,
    root_observed: bool,
    counts: Vec<f64>,
}

impl CountTable {
    pub fn new(leaves: usize, root_observed: bool, counts: Vec<f64>) -> Result<Self> {
        check_leaves(leaves)?;
        let want = 1usize << (leaves + usize::from(root_observed));
        if counts.len() != want {
            return domain(format!(
                "expected {want} cells for {leaves} leaves, got {}",
                counts.len()
            ));
        }
        if counts.iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
            return domain("counts must be finite and nonnegative");
        }
        Ok(Self {
            leaves,
            root_observed,
            counts,
        })
    }

    pub fn from_integers(leaves: usize, root_observed: bool, counts: &[u64]) -> Result<Self> {
        Self::new(
            leaves,
            root_observed,
            counts.iter().map(|&c| c as f64).collect(),
        )
    }

    /// Population pseudo-counts: every probability multiplied by `n`.
    pub fn from_probabilities(pi: &ProbVector, n: f64) -> Result<Self> {
        let leaves = pi.variables() - usize::from(pi.root_included());
        Self::new(
            leaves,
            pi.root_included(),
            pi.entries().iter().map(|x| x * n).collect(),
        )
    }

    pub fn leaves(&self) -> usize {
        self.leaves
    }

    pub fn root_observed(&self) -> bool {
        self.root_observed
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Drops the root, summing the two root levels of each leaf pattern.
    pub fn leaf_margin(&self) -> CountTable {
        if !self.root_observed {
            return self.clone();
        }
        let half = 1usize << self.leaves;
        let counts = (0..half)
            .map(|t| self.counts[t] + self.counts[t + half])
            .collect();
        CountTable {
            leaves: self.leaves,
            root_observed: false,
            counts,
        }
    }

    /// Two-way margin of variables `first` and `second` (0-based; the root,
    /// when present, is variable `Q`). `first` indexes the table rows.
    pub fn pair_margin(&self, first: usize, second: usize) -> Result<TwoByTwo> {
        let vars = self.leaves + usize::from(self.root_observed);
        if first == second || first >= vars || second >= vars {
            return domain(format!("invalid variable pair ({first}, {second})"));
        }
        let mut cells = [0.0; 4];
        for (t, &c) in self.counts.iter().enumerate() {
            let i = ((t >> first) & 1) | (((t >> second) & 1) << 1);
            cells[i] += c;
        }
        Ok(TwoByTwo::from_cells(cells))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_shape() {
        assert!(CountTable::new(2, false, vec![1.0; 8]).is_err());
        assert!(CountTable::new(2, true, vec![1.0; 8]).is_ok());
        assert!(CountTable::new(2, false, vec![1.0, -1.0, 0.0, 0.0]).is_err());
        assert!(CountTable::new(0, false, vec![1.0]).is_err());
    }

    #[test]
    fn margins() {
        // exact x32 table for Q = 2, alpha = 3
        let t = CountTable::from_integers(2, true, &[9, 3, 3, 1, 1, 3, 3, 9]).unwrap();
        assert_eq!(t.leaf_margin().counts(), &[10.0, 6.0, 6.0, 10.0]);
        let pair = t.pair_margin(0, 2).unwrap();
        assert_eq!(pair.cells(), [12.0, 4.0, 4.0, 12.0]);
        let leaves = t.pair_margin(0, 1).unwrap();
        assert_eq!(leaves.cells(), [10.0, 6.0, 6.0, 10.0]);
        assert!(t.pair_margin(1, 1).is_err());
        assert!(t.leaf_margin().pair_margin(0, 2).is_err());
    }
}
