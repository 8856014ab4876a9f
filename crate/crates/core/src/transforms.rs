//! Moment and interaction parametrizations of a probability vector.
//!
//! Each transform is a Kronecker product of 2×2 factors, one per variable,
//! applied with one in-place sweep per bit position. Factor `q` acts on bit
//! `q` of the cell index, so entry `I` of an interaction vector belongs to the
//! subset of variables whose bits are set in `I`.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::model::{log2_len, marginal_leaves, ModelSpec, ProbVector};

/// A 2×2 matrix `[[m00, m01], [m10, m11]]`, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaseMatrix(pub [[f64; 2]; 2]);

impl BaseMatrix {
    pub const IDENTITY: Self = Self([[1.0, 0.0], [0.0, 1.0]]);
    /// Baseline-coded raw moments.
    pub const RAW: Self = Self([[1.0, 1.0], [0.0, 1.0]]);
    pub const RAW_INV: Self = Self([[1.0, -1.0], [0.0, 1.0]]);
    /// Central moments of a variable with mean one half.
    pub const CENTRAL: Self = Self([[1.0, 1.0], [-0.5, 0.5]]);
    pub const CENTRAL_INV: Self = Self([[0.5, -1.0], [0.5, 1.0]]);
    /// Effect-coding contrast matrix.
    pub const EFFECT: Self = Self([[1.0, 1.0], [1.0, -1.0]]);
    pub const EFFECT_INV: Self = Self([[0.5, 0.5], [0.5, -0.5]]);

    /// Centering factor for a binary variable with `pr(level 1) = mean`: the
    /// second row holds the deviations `(0 - mean, 1 - mean)`.
    pub fn centering(mean: f64) -> Self {
        Self([[1.0, 1.0], [-mean, 1.0 - mean]])
    }

    /// Inverse of [`BaseMatrix::centering`]; the determinant is always one.
    pub fn centering_inv(mean: f64) -> Self {
        Self([[1.0 - mean, -1.0], [mean, 1.0]])
    }

    pub fn product(&self, rhs: &Self) -> Self {
        let (a, b) = (self.0, rhs.0);
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self(out)
    }
}

/// `(M_p ⊗ … ⊗ M_1) x` in place, where `factors[q]` acts on bit `q`.
pub fn kron_apply_in_place(factors: &[BaseMatrix], x: &mut [f64]) -> Result<()> {
    if x.len() != 1usize << factors.len() {
        return domain(format!(
            "vector of length {} does not match {} factors",
            x.len(),
            factors.len()
        ));
    }
    for (q, m) in factors.iter().enumerate() {
        let [[m00, m01], [m10, m11]] = m.0;
        let stride = 1usize << q;
        for block in x.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a, *b);
                *a = m00 * x0 + m01 * x1;
                *b = m10 * x0 + m11 * x1;
            }
        }
    }
    Ok(())
}

pub fn kron_apply(factors: &[BaseMatrix], x: &[f64]) -> Result<Vec<f64>> {
    let mut out = x.to_vec();
    kron_apply_in_place(factors, &mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionKind {
    RawMoment,
    CentralMoment,
    Loglinear,
    Linear,
}

/// Coefficients indexed by subsets of variables, in cell-index order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractionVector {
    variables: usize,
    kind: InteractionKind,
    root_included: bool,
    entries: Vec<f64>,
}

impl InteractionVector {
    pub fn new(kind: InteractionKind, entries: Vec<f64>, root_included: bool) -> Result<Self> {
        let variables = log2_len(entries.len())?;
        crate::model::check_variables(variables)?;
        if entries.iter().any(|x| !x.is_finite()) {
            return domain("interaction entries must be finite");
        }
        Ok(Self {
            variables,
            kind,
            root_included,
            entries,
        })
    }

    pub fn variables(&self) -> usize {
        self.variables
    }

    pub fn kind(&self) -> InteractionKind {
        self.kind
    }

    pub fn root_included(&self) -> bool {
        self.root_included
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, subset: usize) -> f64 {
        self.entries[subset]
    }
}

fn apply_same(m: BaseMatrix, pi: &[f64]) -> Vec<f64> {
    let p = pi.len().trailing_zeros() as usize;
    let mut out = pi.to_vec();
    kron_apply_in_place(&vec![m; p], &mut out).expect("length is a power of two");
    out
}

fn wrap(kind: InteractionKind, pi: &ProbVector, entries: Vec<f64>) -> InteractionVector {
    InteractionVector {
        variables: pi.variables(),
        kind,
        root_included: pi.root_included(),
        entries,
    }
}

/// Raw moments in 0/1 coding: entry `I` is the probability that every
/// variable in `I` is at level 1.
pub fn raw_moments(pi: &ProbVector) -> InteractionVector {
    wrap(
        InteractionKind::RawMoment,
        pi,
        apply_same(BaseMatrix::RAW, pi.entries()),
    )
}

const MARGIN_TOL: f64 = 1e-12;

/// Central moments in 0/1 coding. Every variable must have mean one half;
/// use [`central_moments_general`] otherwise.
pub fn central_moments(pi: &ProbVector) -> Result<InteractionVector> {
    for var in 0..pi.variables() {
        let m = pi.margin(var);
        if (m - 0.5).abs() > MARGIN_TOL {
            return domain(format!("variable {} has mean {m}, not 1/2", var + 1));
        }
    }
    Ok(wrap(
        InteractionKind::CentralMoment,
        pi,
        apply_same(BaseMatrix::CENTRAL, pi.entries()),
    ))
}

/// Central moments for arbitrary margins, each factor centered at its own
/// variable's mean.
pub fn central_moments_general(pi: &ProbVector) -> InteractionVector {
    let factors: Vec<_> = (0..pi.variables())
        .map(|v| BaseMatrix::centering(pi.margin(v)))
        .collect();
    let entries = kron_apply(&factors, pi.entries()).expect("length matches");
    wrap(InteractionKind::CentralMoment, pi, entries)
}

/// Central moments from raw moments through the factorwise product
/// `T B^-1` (means one half).
pub fn central_from_raw(m: &InteractionVector) -> Result<InteractionVector> {
    if m.kind != InteractionKind::RawMoment {
        return domain("central_from_raw expects raw moments");
    }
    let factor = BaseMatrix::CENTRAL.product(&BaseMatrix::RAW_INV);
    let mut entries = m.entries.clone();
    kron_apply_in_place(&vec![factor; m.variables], &mut entries)?;
    Ok(InteractionVector {
        kind: InteractionKind::CentralMoment,
        entries,
        ..*m
    })
}

/// Log-linear interactions `(E^-1 ⊗ … ⊗ E^-1) log pi`.
pub fn loglinear_interactions(pi: &ProbVector) -> Result<InteractionVector> {
    if let Some(t) = pi.entries().iter().position(|&x| x <= 0.0) {
        return domain(format!(
            "cell {t} has zero probability; log-linear terms undefined"
        ));
    }
    let logs: Vec<f64> = pi.entries().iter().map(|x| x.ln()).collect();
    Ok(wrap(
        InteractionKind::Loglinear,
        pi,
        apply_same(BaseMatrix::EFFECT_INV, &logs),
    ))
}

/// Linear interactions `(E ⊗ … ⊗ E) pi`.
pub fn linear_interactions(pi: &ProbVector) -> InteractionVector {
    wrap(
        InteractionKind::Linear,
        pi,
        apply_same(BaseMatrix::EFFECT, pi.entries()),
    )
}

/// Linear interactions of the leaf margin in closed form: `rho^|I|` for
/// subsets of even size, zero for odd.
pub fn leaf_linear_interactions(spec: &ModelSpec) -> InteractionVector {
    let rho = spec.rho();
    let entries = (0..1usize << spec.leaves())
        .map(|subset| {
            let k = subset.count_ones();
            if k % 2 == 0 {
                rho.powi(k as i32)
            } else {
                0.0
            }
        })
        .collect();
    InteractionVector {
        variables: spec.leaves(),
        kind: InteractionKind::Linear,
        root_included: false,
        entries,
    }
}

/// Log-linear interactions of the leaf margin, obtained from the closed-form
/// leaf linear interactions as `E^-1 log(E^-1 xi)`.
pub fn leaf_loglinear(spec: &ModelSpec) -> Result<InteractionVector> {
    let xi = leaf_linear_interactions(spec);
    let pi = apply_same(BaseMatrix::EFFECT_INV, xi.entries());
    if let Some(t) = pi.iter().position(|&x| x <= 0.0) {
        return Err(Error::Numerical(format!(
            "leaf cell {t} underflowed to zero"
        )));
    }
    let logs: Vec<f64> = pi.iter().map(|x| x.ln()).collect();
    Ok(InteractionVector {
        kind: InteractionKind::Loglinear,
        entries: apply_same(BaseMatrix::EFFECT_INV, &logs),
        ..xi
    })
}

/// Leaf log-linear interactions computed directly from the leaf margin.
pub fn leaf_loglinear_from_margin(spec: &ModelSpec) -> Result<InteractionVector> {
    loglinear_interactions(&marginal_leaves(spec))
}

/// Maps any interaction vector back to probabilities. Central moments are
/// inverted assuming means of one half.
pub fn inverse_transform(v: &InteractionVector) -> Result<ProbVector> {
    let entries = match v.kind {
        InteractionKind::RawMoment => apply_same(BaseMatrix::RAW_INV, &v.entries),
        InteractionKind::CentralMoment => apply_same(BaseMatrix::CENTRAL_INV, &v.entries),
        InteractionKind::Linear => apply_same(BaseMatrix::EFFECT_INV, &v.entries),
        InteractionKind::Loglinear => {
            let logs = apply_same(BaseMatrix::EFFECT, &v.entries);
            let pi: Vec<f64> = logs.into_iter().map(f64::exp).collect();
            let total: f64 = pi.iter().sum();
            if (total - 1.0).abs() > 1e-8 {
                return Err(Error::Inconsistent(format!(
                    "log-linear terms give probabilities summing to {total}"
                )));
            }
            pi
        }
    };
    Ok(ProbVector::from_parts(entries, v.root_included))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::joint_vector_direct;

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (i, (x, y)) in a.iter().zip(b).enumerate() {
            assert!((x - y).abs() <= tol, "entry {i}: {x} vs {y}");
        }
    }

    #[test]
    fn kernel_basics() {
        assert_eq!(
            kron_apply(&[BaseMatrix::EFFECT], &[1.0, 0.0]).unwrap(),
            vec![1.0, 1.0]
        );
        let x = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(
            kron_apply(&[BaseMatrix::IDENTITY; 2], &x).unwrap(),
            x.to_vec()
        );
        assert!(kron_apply(&[BaseMatrix::RAW; 3], &x).is_err());
    }

    #[test]
    fn kernel_factor_order() {
        // A distinct factor on bit 1 only touches pairs (t, t + 2).
        let swap = BaseMatrix([[0.0, 1.0], [1.0, 0.0]]);
        let out = kron_apply(&[BaseMatrix::IDENTITY, swap], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(out, vec![3.0, 4.0, 1.0, 2.0]);
    }

    #[test]
    fn base_inverses() {
        for (m, inv) in [
            (BaseMatrix::RAW, BaseMatrix::RAW_INV),
            (BaseMatrix::CENTRAL, BaseMatrix::CENTRAL_INV),
            (BaseMatrix::EFFECT, BaseMatrix::EFFECT_INV),
            (BaseMatrix::centering(0.3), BaseMatrix::centering_inv(0.3)),
        ] {
            assert_eq!(m.product(&inv), BaseMatrix::IDENTITY);
        }
        assert_eq!(BaseMatrix::centering(0.5), BaseMatrix::CENTRAL);
    }

    #[test]
    fn raw_moments_three_variables() {
        for alpha in [3.0, 9.0] {
            let s = ModelSpec::from_alpha(2, alpha).unwrap();
            let c2 = s.normalizer();
            let beta = (1.0 + alpha * alpha) / c2;
            let gamma = alpha * (1.0 + alpha) / c2;
            let delta = alpha * alpha / c2;
            let m = raw_moments(&joint_vector_direct(&s));
            close(
                m.entries(),
                &[1.0, 0.5, 0.5, beta, 0.5, gamma, gamma, delta],
                1e-15,
            );
        }
        let m = raw_moments(&joint_vector_direct(&ModelSpec::from_rho(1, 0.0).unwrap()));
        assert_eq!(m.entries(), &[1.0, 0.5, 0.5, 0.25]);
    }

    #[test]
    fn central_moments_three_variables() {
        let s = ModelSpec::from_rho(2, 0.5).unwrap();
        let mu = central_moments(&joint_vector_direct(&s)).unwrap();
        let g = 0.125;
        close(
            mu.entries(),
            &[1.0, 0.0, 0.0, 4.0 * g * g, 0.0, g, g, 0.0],
            1e-15,
        );
        let z =
            central_moments(&joint_vector_direct(&ModelSpec::from_rho(4, 0.0).unwrap())).unwrap();
        assert!(z.entries()[1..].iter().all(|x| x.abs() < 1e-17));
    }

    #[test]
    fn central_requires_half_means() {
        let pi = ProbVector::new(vec![0.4, 0.3, 0.2, 0.1], false).unwrap();
        assert!(central_moments(&pi).is_err());
        let mu = central_moments_general(&pi);
        // first-order central moments vanish for any margin
        assert!(mu.get(1).abs() < 1e-16 && mu.get(2).abs() < 1e-16);
        // covariance: E[A1 A2] - E[A1] E[A2] = 0.1 - 0.4 * 0.3
        assert!((mu.get(3) - (0.1 - 0.4 * 0.3)).abs() < 1e-15);
    }

    #[test]
    fn central_via_raw_agrees() {
        let pi = joint_vector_direct(&ModelSpec::from_alpha(2, 3.0).unwrap());
        let a = central_from_raw(&raw_moments(&pi)).unwrap();
        let b = central_moments(&pi).unwrap();
        close(a.entries(), b.entries(), 1e-13);
        let one = ProbVector::new(vec![0.5, 0.5], false).unwrap();
        assert_eq!(
            central_from_raw(&raw_moments(&one)).unwrap().entries(),
            &[1.0, 0.0]
        );
        assert!(central_from_raw(&linear_interactions(&one)).is_err());
    }

    #[test]
    fn loglinear_four_variables() {
        for alpha in [3.0f64, 9.0] {
            let s = ModelSpec::from_alpha(3, alpha).unwrap();
            let lam = loglinear_interactions(&joint_vector_direct(&s)).unwrap();
            let g = 0.5 * alpha.ln();
            let mut want = vec![0.0; 16];
            want[0] = 3.0 * g - s.normalizer().ln();
            for i in [9, 10, 12] {
                want[i] = g;
            }
            close(lam.entries(), &want, 1e-12);
        }
        let lam =
            loglinear_interactions(&joint_vector_direct(&ModelSpec::from_rho(1, 0.0).unwrap()))
                .unwrap();
        assert!(lam.entries()[1..].iter().all(|&x| x == 0.0));
        let bad = ProbVector::new(vec![0.5, 0.5, 0.0, 0.0], false).unwrap();
        assert!(loglinear_interactions(&bad).is_err());
    }

    #[test]
    fn linear_four_variables() {
        let rho = 0.6f64;
        let s = ModelSpec::from_rho(3, rho).unwrap();
        let xi = linear_interactions(&joint_vector_direct(&s));
        let r2 = rho * rho;
        let want = [
            1.0,
            0.0,
            0.0,
            r2,
            0.0,
            r2,
            r2,
            0.0,
            0.0,
            rho,
            rho,
            0.0,
            rho,
            0.0,
            0.0,
            rho * r2,
        ];
        close(xi.entries(), &want, 1e-15);
    }

    #[test]
    fn leaf_linear_closed_form() {
        let rho = 0.5;
        let s = ModelSpec::from_rho(3, rho).unwrap();
        let xi = leaf_linear_interactions(&s);
        close(
            xi.entries(),
            &[1.0, 0.0, 0.0, 0.25, 0.0, 0.25, 0.25, 0.0],
            0.0,
        );
        // equals both the transformed leaf margin and the no-root half of the full vector
        close(
            xi.entries(),
            linear_interactions(&marginal_leaves(&s)).entries(),
            1e-15,
        );
        close(
            xi.entries(),
            &linear_interactions(&joint_vector_direct(&s)).entries()[..8],
            1e-15,
        );
        let s4 = ModelSpec::from_rho(4, 0.5).unwrap();
        assert_eq!(leaf_linear_interactions(&s4).get(15), 0.0625);
        assert!((linear_interactions(&marginal_leaves(&s4)).get(15) - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn leaf_loglinear_patterns() {
        let s = ModelSpec::from_alpha(3, 3.0).unwrap();
        let lam = leaf_loglinear(&s).unwrap();
        for odd in [1, 2, 4, 7] {
            assert!(lam.get(odd).abs() < 1e-12);
        }
        assert!(lam.get(3) > 0.0);
        assert!((lam.get(3) - lam.get(5)).abs() < 1e-12 && (lam.get(3) - lam.get(6)).abs() < 1e-12);
        close(
            lam.entries(),
            leaf_loglinear_from_margin(&s).unwrap().entries(),
            1e-12,
        );

        for alpha in [2.0f64, 3.0, 9.0] {
            let s = ModelSpec::from_alpha(2, alpha).unwrap();
            let lam = leaf_loglinear(&s).unwrap();
            let a2 = alpha * alpha;
            let want = 0.25 * ((1.0 + a2).powi(2) / (4.0 * a2)).ln();
            assert!((lam.get(3) - want).abs() < 1e-12);
            assert!(lam.get(1).abs() < 1e-14 && lam.get(2).abs() < 1e-14);
        }
        let z = leaf_loglinear(&ModelSpec::from_rho(3, 0.0).unwrap()).unwrap();
        assert!(z.entries()[1..].iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn inverse_round_trips() {
        let pi = joint_vector_direct(&ModelSpec::from_alpha(3, 3.0).unwrap());
        let forward = [
            raw_moments(&pi),
            central_moments(&pi).unwrap(),
            loglinear_interactions(&pi).unwrap(),
            linear_interactions(&pi),
        ];
        for v in &forward {
            let back = inverse_transform(v).unwrap();
            close(back.entries(), pi.entries(), 1e-11);
            assert!(back.root_included());
        }
        let mut unit = vec![0.0; 8];
        unit[0] = 1.0;
        let v = InteractionVector::new(InteractionKind::Linear, unit, false).unwrap();
        assert_eq!(inverse_transform(&v).unwrap().entries(), &[0.125; 8]);
    }

    #[test]
    fn raw_listing_inverts_to_joint() {
        let alpha = 3.0;
        let c2 = 32.0;
        let m = vec![
            1.0,
            0.5,
            0.5,
            (1.0 + alpha * alpha) / c2,
            0.5,
            alpha * (1.0 + alpha) / c2,
            alpha * (1.0 + alpha) / c2,
            alpha * alpha / c2,
        ];
        let v = InteractionVector::new(InteractionKind::RawMoment, m, true).unwrap();
        let want: Vec<f64> = [9.0, 3.0, 3.0, 1.0, 1.0, 3.0, 3.0, 9.0]
            .iter()
            .map(|x| x / 32.0)
            .collect();
        close(inverse_transform(&v).unwrap().entries(), &want, 1e-15);
    }

    #[test]
    fn loglinear_inverse_detects_bad_normalizer() {
        let pi = joint_vector_direct(&ModelSpec::from_alpha(2, 3.0).unwrap());
        let lam = loglinear_interactions(&pi).unwrap();
        let mut shifted = lam.entries().to_vec();
        shifted[0] += 0.01;
        let v = InteractionVector::new(InteractionKind::Loglinear, shifted, true).unwrap();
        assert!(matches!(inverse_transform(&v), Err(Error::Inconsistent(_))));
    }
}
