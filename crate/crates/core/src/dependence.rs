//! Two-by-two dependence measures, model correlation matrices and the
//! response/explanatory reversal analysis.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::model::{check_leaves, ModelSpec, ProbVector};

/// A 2×2 table of a response `A` (rows: miss, succeed) against an explanatory
/// variable `L` (columns: weak, strong). Cells are held in cell-index order
/// with `A` in the low bit: `[miss/weak, succeed/weak, miss/strong,
/// succeed/strong]`. Entries may be probabilities or counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoByTwo {
    cells: [f64; 4],
}

impl TwoByTwo {
    pub fn new(
        miss_weak: f64,
        succeed_weak: f64,
        miss_strong: f64,
        succeed_strong: f64,
    ) -> Result<Self> {
        let cells = [miss_weak, succeed_weak, miss_strong, succeed_strong];
        if cells.iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
            return domain("2x2 entries must be finite and nonnegative");
        }
        Ok(Self { cells })
    }

    pub(crate) fn from_cells(cells: [f64; 4]) -> Self {
        Self { cells }
    }

    pub fn cells(&self) -> [f64; 4] {
        self.cells
    }

    pub fn miss_weak(&self) -> f64 {
        self.cells[0]
    }

    pub fn succeed_weak(&self) -> f64 {
        self.cells[1]
    }

    pub fn miss_strong(&self) -> f64 {
        self.cells[2]
    }

    pub fn succeed_strong(&self) -> f64 {
        self.cells[3]
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().sum()
    }

    /// The same table scaled to sum to one.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.total();
        if n <= 0.0 {
            return domain("cannot normalize an empty 2x2 table");
        }
        Ok(Self::from_cells(self.cells.map(|c| c / n)))
    }

    /// Swaps the roles of response and explanatory variable.
    pub fn transposed(&self) -> Self {
        let [mw, sw, ms, ss] = self.cells;
        Self::from_cells([mw, ms, sw, ss])
    }
}

/// The seven standard measures of a 2×2 table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureSet {
    pub odds_given_strong: f64,
    pub odds_given_weak: f64,
    pub odds_ratio: f64,
    pub chance_given_strong: f64,
    pub chance_given_weak: f64,
    pub chance_difference: f64,
    pub relative_chance: f64,
}

pub const MEASURE_NAMES: [&str; 7] = [
    "odds_given_strong",
    "odds_given_weak",
    "odds_ratio",
    "chance_given_strong",
    "chance_given_weak",
    "chance_difference",
    "relative_chance",
];

fn ratio(measure: &'static str, num: f64, den: f64, reason: &'static str) -> Result<f64> {
    if den == 0.0 {
        Err(Error::Undefined { measure, reason })
    } else {
        Ok(num / den)
    }
}

/// Each measure separately, in [`MEASURE_NAMES`] order; a zero denominator
/// leaves that entry undefined without affecting the others.
pub fn each_measure(t: &TwoByTwo) -> [Result<f64>; 7] {
    let [mw, sw, ms, ss] = t.cells;
    let strong = ratio("chance_given_strong", ss, ms + ss, "empty strong column");
    let weak = ratio("chance_given_weak", sw, mw + sw, "empty weak column");
    let difference = match (&strong, &weak) {
        (Ok(s), Ok(w)) => Ok(s - w),
        _ => Err(Error::Undefined {
            measure: "chance_difference",
            reason: "a column of the table is empty",
        }),
    };
    let relative = match (&strong, &weak) {
        (Ok(s), Ok(w)) => ratio(
            "relative_chance",
            *s,
            *w,
            "zero chance of success given weak",
        ),
        _ => Err(Error::Undefined {
            measure: "relative_chance",
            reason: "a column of the table is empty",
        }),
    };
    [
        ratio("odds_given_strong", ss, ms, "no misses given strong"),
        ratio("odds_given_weak", sw, mw, "no misses given weak"),
        ratio("odds_ratio", ss * mw, ms * sw, "zero off-diagonal cell"),
        strong,
        weak,
        difference,
        relative,
    ]
}

/// All seven measures; fails on the first undefined one.
pub fn measures(t: &TwoByTwo) -> Result<MeasureSet> {
    let [a, b, c, d, e, f, g] = each_measure(t);
    Ok(MeasureSet {
        odds_given_strong: a?,
        odds_given_weak: b?,
        odds_ratio: c?,
        chance_given_strong: d?,
        chance_given_weak: e?,
        chance_difference: f?,
        relative_chance: g?,
    })
}

/// Cross-sum difference `((n00 + n11) - (n01 + n10)) / n`.
pub fn csd(t: &TwoByTwo) -> Result<f64> {
    let n = t.total();
    if !(n > 0.0) {
        return domain("cross-sum difference of an empty table");
    }
    let [mw, sw, ms, ss] = t.cells;
    Ok(((mw + ss) - (sw + ms)) / n)
}

/// Correlation matrix of the `p` variables in -1/1 coding, root last.
pub fn correlation_matrix(spec: &ModelSpec) -> Vec<Vec<f64>> {
    correlation_from_loadings(&vec![spec.rho(); spec.leaves()])
}

/// Correlation matrix of a latent-class star with leaf-specific correlations
/// `rho_q` to the root: `rho_q * rho_r` between leaves, `rho_q` to the root.
pub fn correlation_matrix_general(rhos: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_leaves(rhos.len())?;
    if let Some(r) = rhos.iter().find(|r| !(0.0..1.0).contains(*r)) {
        return domain(format!("each rho must lie in [0, 1), got {r}"));
    }
    Ok(correlation_from_loadings(rhos))
}

fn correlation_from_loadings(rhos: &[f64]) -> Vec<Vec<f64>> {
    let p = rhos.len() + 1;
    let loading = |i: usize| if i + 1 == p { 1.0 } else { rhos[i] };
    (0..p)
        .map(|i| {
            (0..p)
                .map(|j| if i == j { 1.0 } else { loading(i) * loading(j) })
                .collect()
        })
        .collect()
}

/// Conditional 2×2 slice of `pi` for `(response, explanatory)` given levels
/// for every other variable, renormalized to sum to one.
pub fn conditional_pair_table(
    pi: &ProbVector,
    response: usize,
    explanatory: usize,
    given: &[(usize, bool)],
) -> Result<TwoByTwo> {
    let p = pi.variables();
    if response == explanatory || response >= p || explanatory >= p {
        return domain(format!("invalid variable pair ({response}, {explanatory})"));
    }
    let mut base = 0usize;
    let mut seen = (1usize << response) | (1usize << explanatory);
    for &(var, level) in given {
        if var >= p || seen & (1 << var) != 0 {
            return domain(format!("variable {var} conditioned twice or out of range"));
        }
        seen |= 1 << var;
        if level {
            base |= 1 << var;
        }
    }
    if seen != (1usize << p) - 1 {
        return domain("conditioning must assign every variable outside the pair");
    }
    let cell = |a: usize, l: usize| pi.get(base | (a << response) | (l << explanatory));
    let slice = TwoByTwo::from_cells([cell(0, 0), cell(1, 0), cell(0, 1), cell(1, 1)]);
    if slice.total() <= 0.0 {
        return domain("conditioning event has zero probability");
    }
    slice.normalized()
}

/// Bivariate margin of `pi` for `(response, explanatory)`.
pub fn pair_margin(pi: &ProbVector, response: usize, explanatory: usize) -> Result<TwoByTwo> {
    let p = pi.variables();
    if response == explanatory || response >= p || explanatory >= p {
        return domain(format!("invalid variable pair ({response}, {explanatory})"));
    }
    let mut cells = [0.0; 4];
    for (t, &x) in pi.entries().iter().enumerate() {
        cells[((t >> response) & 1) | (((t >> explanatory) & 1) << 1)] += x;
    }
    Ok(TwoByTwo::from_cells(cells))
}

/// Dependence of a leaf on the root versus the root on a leaf, given a second
/// leaf. Index 0 of each pair is the conditioning leaf at miss, index 1 at
/// succeed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReversalReport {
    pub alpha: f64,
    pub leaves: usize,
    pub forward_odds_ratio: f64,
    pub forward_chance_difference: f64,
    pub forward_relative_chance: f64,
    pub reversed_odds_ratio: [f64; 2],
    pub reversed_relative_chance: [f64; 2],
    pub reversed_chance_difference: [f64; 2],
    /// `(1 + alpha^Q) / 2`: an even chance of a strong root relative to the
    /// chance of a strong root when every leaf misses.
    pub extreme_relative_chance: f64,
}

pub fn reversal_analysis(alpha: f64, leaves: usize) -> Result<ReversalReport> {
    let rho = crate::model::alpha_to_rho(alpha)?;
    check_leaves(leaves)?;
    let a2 = alpha * alpha;
    Ok(ReversalReport {
        alpha,
        leaves,
        forward_odds_ratio: a2,
        forward_chance_difference: rho,
        forward_relative_chance: alpha,
        reversed_odds_ratio: [a2, a2],
        reversed_relative_chance: [(1.0 + a2) / 2.0, 2.0 * a2 / (1.0 + a2)],
        reversed_chance_difference: [0.5 - 1.0 / (1.0 + a2), a2 / (1.0 + a2) - 0.5],
        extreme_relative_chance: (1.0 + alpha.powi(leaves as i32)) / 2.0,
    })
}
