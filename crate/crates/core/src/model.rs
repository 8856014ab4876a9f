//! Model parametrization and exact joint, marginal and conditional tables.
//!
//! Every table in this crate uses the same cell order: bit `q` of a cell
//! index (least significant first) holds the 0/1 level of leaf `q + 1`, and
//! when the root is part of the table it occupies the most significant bit.
//! For two leaves the order is `(a1 a2 l) = 000, 100, 010, 110, 001, ...`.

use serde::Serialize;

use crate::error::{domain, Error, Result};

/// Largest number of variables (leaves plus root) for which tables are built.
pub const MAX_VARIABLES: usize = 30;

/// Odds parameter from a leaf-root correlation, `(1 + rho) / (1 - rho)`.
pub fn rho_to_alpha(rho: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&rho) {
        return domain(format!("rho must lie in [0, 1), got {rho}"));
    }
    Ok((1.0 + rho) / (1.0 - rho))
}

/// Leaf-root correlation from the odds parameter, `(alpha - 1) / (alpha + 1)`.
pub fn alpha_to_rho(alpha: f64) -> Result<f64> {
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return domain(format!("alpha must lie in [1, inf), got {alpha}"));
    }
    Ok((alpha - 1.0) / (alpha + 1.0))
}

/// One member of the concentric-ring family: `Q` leaves sharing a single
/// dependence parameter with a common binary root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelSpec {
    leaves: usize,
    rho: f64,
    alpha: f64,
    normalizer: f64,
}

impl ModelSpec {
    pub fn from_rho(leaves: usize, rho: f64) -> Result<Self> {
        let alpha = rho_to_alpha(rho)?;
        Self::build(leaves, rho, alpha)
    }

    pub fn from_alpha(leaves: usize, alpha: f64) -> Result<Self> {
        let rho = alpha_to_rho(alpha)?;
        Self::build(leaves, rho, alpha)
    }

    fn build(leaves: usize, rho: f64, alpha: f64) -> Result<Self> {
        check_leaves(leaves)?;
        if !alpha.is_finite() {
            return domain("alpha is not finite");
        }
        let normalizer = 2.0 * (1.0 + alpha).powi(leaves as i32);
        Ok(Self {
            leaves,
            rho,
            alpha,
            normalizer,
        })
    }

    /// Number of leaves `Q`.
    pub fn leaves(&self) -> usize {
        self.leaves
    }

    /// Number of variables `p = Q + 1`.
    pub fn variables(&self) -> usize {
        self.leaves + 1
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Normalizing constant `c_Q = 2 (1 + alpha)^Q`.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// True for the degenerate independence member (`rho = 0`).
    pub fn is_independence(&self) -> bool {
        self.rho == 0.0
    }
}

pub(crate) fn check_leaves(leaves: usize) -> Result<()> {
    if leaves == 0 {
        return domain("the model needs at least one leaf");
    }
    check_variables(leaves + 1)
}

pub(crate) fn check_variables(variables: usize) -> Result<()> {
    if variables > MAX_VARIABLES {
        return Err(Error::Capacity {
            variables,
            max: MAX_VARIABLES,
        });
    }
    Ok(())
}

/// A probability vector over all level combinations of `variables` binary
/// variables, in the crate-wide cell order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbVector {
    variables: usize,
    entries: Vec<f64>,
    root_included: bool,
}

impl ProbVector {
    /// Wraps raw entries after checking length, sign and normalization.
    pub fn new(entries: Vec<f64>, root_included: bool) -> Result<Self> {
        let variables = log2_len(entries.len())?;
        check_variables(variables)?;
        if entries.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return domain("probabilities must be finite and nonnegative");
        }
        let total: f64 = entries.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return domain(format!("probabilities sum to {total}, not 1"));
        }
        Ok(Self {
            variables,
            entries,
            root_included,
        })
    }

    pub(crate) fn from_parts(entries: Vec<f64>, root_included: bool) -> Self {
        let variables = entries.len().trailing_zeros() as usize;
        Self {
            variables,
            entries,
            root_included,
        }
    }

    pub fn variables(&self) -> usize {
        self.variables
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }

    pub fn root_included(&self) -> bool {
        self.root_included
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries[index]
    }

    /// Largest `|pi[t] - pi[complement of t]|` over all cells.
    pub fn symmetry_defect(&self) -> f64 {
        let last = self.entries.len() - 1;
        self.entries
            .iter()
            .enumerate()
            .map(|(t, &x)| (x - self.entries[last - t]).abs())
            .fold(0.0, f64::max)
    }

    /// Probability that variable `var` (0-based) is at level 1.
    pub fn margin(&self, var: usize) -> f64 {
        let bit = 1usize << var;
        self.entries
            .iter()
            .enumerate()
            .filter(|(t, _)| t & bit != 0)
            .map(|(_, &x)| x)
            .sum()
    }
}

pub(crate) fn log2_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return domain(format!("length {len} is not a power of two >= 2"));
    }
    Ok(len.trailing_zeros() as usize)
}

/// Leaf statistics of one cell index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IndexStats {
    pub index: usize,
    /// Number of leaves at level 1.
    pub ones: u32,
    /// Sum of the leaves in -1/1 coding, `2 * ones - Q`.
    pub leaf_sum: i32,
}

/// Leaf statistics for index `t` of a table over `leaves` leaves. Indices of a
/// table that includes the root are accepted; the root bit is masked out.
pub fn index_stats(index: usize, leaves: usize) -> Result<IndexStats> {
    check_leaves(leaves)?;
    if index >= 1usize << (leaves + 1) {
        return domain(format!("index {index} out of range for {leaves} leaves"));
    }
    Ok(stats_unchecked(index, leaves))
}

#[inline]
pub(crate) fn stats_unchecked(index: usize, leaves: usize) -> IndexStats {
    let mask = (1usize << leaves) - 1;
    let ones = (index & mask).count_ones();
    IndexStats {
        index,
        ones,
        leaf_sum: 2 * ones as i32 - leaves as i32,
    }
}

/// Joint table evaluated cell by cell: `alpha^K / c_Q` for a strong root and
/// `alpha^(Q-K) / c_Q` for a weak one, `K` counting the leaves at level 1.
pub fn joint_vector_direct(spec: &ModelSpec) -> ProbVector {
    let q = spec.leaves();
    let half = 1usize << q;
    let powers = power_ladder(spec);
    let mut entries = vec![0.0; 2 * half];
    for t in 0..half {
        let k = (t.count_ones()) as usize;
        entries[t] = powers[q - k];
        entries[t + half] = powers[k];
    }
    ProbVector::from_parts(entries, true)
}

/// `alpha^k / c_Q` for `k = 0..=Q`.
fn power_ladder(spec: &ModelSpec) -> Vec<f64> {
    let q = spec.leaves();
    let alpha = spec.alpha();
    let c = spec.normalizer();
    if c.is_finite() && alpha.powi(q as i32).is_finite() {
        (0..=q).map(|k| alpha.powi(k as i32) / c).collect()
    } else {
        let log_alpha = alpha.ln();
        let log_c = std::f64::consts::LN_2 + q as f64 * alpha.ln_1p();
        (0..=q)
            .map(|k| (k as f64 * log_alpha - log_c).exp())
            .collect()
    }
}

/// Joint table from the star-graph product form in -1/1 coding,
/// `2^-p * prod_q (1 + rho * a_q * l)`.
pub fn joint_vector_product(spec: &ModelSpec) -> ProbVector {
    let q = spec.leaves();
    let p = spec.variables();
    let rho = spec.rho();
    let scale = 0.5f64.powi(p as i32);
    let agree = 1.0 + rho;
    let disagree = 1.0 - rho;
    let entries = (0..1usize << p)
        .map(|t| {
            let root = (t >> q) & 1;
            (0..q).fold(scale, |acc, bit| {
                if (t >> bit) & 1 == root {
                    acc * agree
                } else {
                    acc * disagree
                }
            })
        })
        .collect();
    ProbVector::from_parts(entries, true)
}

/// Joint table as `(w ⊗ … ⊗ w, v ⊗ … ⊗ v) / c_Q` with `v = (1, alpha)` and
/// `w = (alpha, 1)`, each power of order `Q`, expanded in place.
pub fn joint_vector_kron(spec: &ModelSpec) -> ProbVector {
    let q = spec.leaves();
    let half = 1usize << q;
    let alpha = spec.alpha();
    let c = spec.normalizer();
    let mut entries = vec![0.0; 2 * half];
    let (weak, strong) = entries.split_at_mut(half);
    if c.is_finite() && alpha.powi(q as i32).is_finite() {
        kron_power_into(weak, [alpha, 1.0]);
        kron_power_into(strong, [1.0, alpha]);
        entries.iter_mut().for_each(|x| *x /= c);
    } else {
        // c_Q overflows: fold (1 + alpha) into the factors.
        let f = [alpha / (1.0 + alpha), 1.0 / (1.0 + alpha)];
        kron_power_into(weak, f);
        kron_power_into(strong, [f[1], f[0]]);
        entries.iter_mut().for_each(|x| *x *= 0.5);
    }
    ProbVector::from_parts(entries, true)
}

/// Fills `out` (length `2^k`) with the k-fold Kronecker power of `factor`,
/// the first factor varying fastest.
fn kron_power_into(out: &mut [f64], factor: [f64; 2]) {
    out[0] = 1.0;
    let mut filled = 1;
    while filled < out.len() {
        for j in (0..filled).rev() {
            let x = out[j];
            out[2 * j] = x * factor[0];
            out[2 * j + 1] = x * factor[1];
        }
        filled *= 2;
    }
}

/// Exponents `e_t` with `pi[t] * c_Q = alpha^(e_t)`, over the full joint table.
///
/// The strong-root half (the last `2^Q` entries) is the integer ladder that
/// grows by appending a copy with every exponent raised by one.
pub fn integer_pattern(spec: &ModelSpec) -> Vec<u32> {
    let q = spec.leaves();
    let half = 1usize << q;
    let mut exps = vec![0u32; 2 * half];
    for t in 0..half {
        let k = t.count_ones();
        exps[t] = q as u32 - k;
        exps[t + half] = k;
    }
    exps
}

/// The joint table multiplied by `c_Q`, as exact integers. Requires an
/// integer `alpha`; fails with [`Error::Overflow`] once any cell or the total
/// exceeds `u64::MAX`.
pub fn integer_vector(spec: &ModelSpec) -> Result<Vec<u64>> {
    let alpha = spec.alpha();
    if alpha.fract() != 0.0 || alpha > u64::MAX as f64 {
        return domain(format!("alpha = {alpha} is not a representable integer"));
    }
    let base = alpha as u64;
    let q = spec.leaves() as u32;
    let ladder: Vec<u64> = (0..=q)
        .map(|k| {
            base.checked_pow(k)
                .ok_or_else(|| Error::Overflow(format!("{base}^{k} exceeds u64")))
        })
        .collect::<Result<_>>()?;
    let cells: Vec<u64> = integer_pattern(spec)
        .into_iter()
        .map(|e| ladder[e as usize])
        .collect();
    cells
        .iter()
        .try_fold(0u64, |acc, &x| acc.checked_add(x))
        .ok_or_else(|| Error::Overflow("the integer table total exceeds u64".to_string()))?;
    Ok(cells)
}

/// Leaf table after summing the root out: `(alpha^K + alpha^(Q-K)) / c_Q`.
pub fn marginal_leaves(spec: &ModelSpec) -> ProbVector {
    let q = spec.leaves();
    let powers = power_ladder(spec);
    let entries = (0..1usize << q)
        .map(|t| {
            let k = t.count_ones() as usize;
            powers[q - k] + powers[k]
        })
        .collect();
    ProbVector::from_parts(entries, false)
}

/// Conditional distribution of the root given all leaf levels, returned as
/// `(pi(L = 0 | a), pi(L = 1 | a))`.
pub fn conditional_root(spec: &ModelSpec, leaf_levels: &[bool]) -> Result<(f64, f64)> {
    if leaf_levels.len() != spec.leaves() {
        return domain(format!(
            "expected {} leaf levels, got {}",
            spec.leaves(),
            leaf_levels.len()
        ));
    }
    let ones = leaf_levels.iter().filter(|&&a| a).count() as i32;
    Ok(root_posterior(
        spec.alpha(),
        2 * ones - spec.leaves() as i32,
    ))
}

/// `(pi(L=0|a), pi(L=1|a))` from the leaf sum `s`: the strong level has
/// probability `1 / (1 + alpha^-s)`.
#[inline]
pub(crate) fn root_posterior(alpha: f64, leaf_sum: i32) -> (f64, f64) {
    let strong = 1.0 / (1.0 + alpha.powi(-leaf_sum));
    let weak = 1.0 / (1.0 + alpha.powi(leaf_sum));
    (weak, strong)
}

/// Sample size at which the rarest joint cell, of probability `1 / c_Q`, has
/// an expected count of one.
pub fn plan_sample_size(spec: &ModelSpec) -> Result<u64> {
    let c = spec.normalizer().ceil();
    if !(c < u64::MAX as f64) {
        return Err(Error::Overflow(format!("c_Q = {c} exceeds u64")));
    }
    Ok(c as u64)
}
