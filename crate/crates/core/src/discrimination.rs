//! Discriminating two pure states under a uniform prior: the optimal
//! unambiguous measurement, the conclusive/error tradeoff and its inverse,
//! and an eigenvector-asymptotics witness for families of 2x2 operators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector};
use crate::quantum::{self, Povm, PureState};

/// Outcome labels of a three-outcome discrimination measurement.
pub const LABELS: [&str; 3] = ["0", "1", "?"];

fn check_unit(value: f64, name: &'static str) -> Result<()> {
    if !(0.0..=1.0).contains(&value) || !value.is_finite() {
        return Err(Error::OutOfRange {
            value,
            range: name,
        });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationBounds {
    pub tau: f64,
    /// Best zero-error conclusive probability, `1 - tau`.
    pub idp_qc_max: f64,
    /// Minimum error with no inconclusive answer, `(1 - sqrt(1 - tau^2)) / 2`.
    pub helstrom_qerr_min: f64,
}

pub fn discrimination_bounds(tau: f64) -> Result<DiscriminationBounds> {
    check_unit(tau, "tau in [0, 1]")?;
    Ok(DiscriminationBounds {
        tau,
        idp_qc_max: 1.0 - tau,
        helstrom_qerr_min: 0.5 * (1.0 - (1.0 - tau * tau).sqrt()),
    })
}

/// Unit vector in span{a, b} orthogonal to `b`.
fn perpendicular_in_span(a: &CVector, b: &CVector) -> CVector {
    let w = a - b * b.dotc(a);
    let n = w.norm();
    w / c(n, 0.0)
}

/// Zero-error measurement with outcomes `0`, `1`, `?` reaching the
/// conclusive rate `1 - tau` under a uniform prior:
/// `E_0 = |b⊥><b⊥| / (1 + tau)`, `E_1 = |a⊥><a⊥| / (1 + tau)`.
pub fn optimal_unambiguous_povm(psi0: &PureState, psi1: &PureState) -> Result<Povm> {
    let tau = quantum::overlap(psi0, psi1)?;
    if tau <= 1e-9 {
        return Err(Error::Validation("states are orthogonal".into()));
    }
    if tau >= 1.0 - 1e-9 {
        return Err(Error::Validation("states are parallel".into()));
    }
    let a = psi0.amplitudes();
    let b = psi1.amplitudes();
    let b_perp = perpendicular_in_span(a, b);
    let a_perp = perpendicular_in_span(b, a);
    let scale = 1.0 / (1.0 + tau);
    let e0 = linalg::outer(&b_perp).scale(scale);
    let e1 = linalg::outer(&a_perp).scale(scale);
    let dim = psi0.dim();
    let inconclusive = linalg::hermitian_part(&(linalg::identity(dim) - &e0 - &e1));
    Povm::new(
        psi0.dims().to_vec(),
        vec![e0, e1, inconclusive],
        LABELS.iter().map(|s| s.to_string()).collect(),
    )
}

/// Two-outcome minimum-error measurement: projectors onto the positive and
/// negative eigenspaces of `|psi0><psi0| - |psi1><psi1|`.
pub fn helstrom_povm(psi0: &PureState, psi1: &PureState) -> Result<Povm> {
    if psi0.dim() != psi1.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi0.dim(),
            got: psi1.dim(),
        });
    }
    let dim = psi0.dim();
    let diff = linalg::outer(psi0.amplitudes()) - linalg::outer(psi1.amplitudes());
    let e0 = linalg::spectral_map(&diff, |l| if l > 0.0 { 1.0 } else { 0.0 });
    let e1 = linalg::hermitian_part(&(linalg::identity(dim) - &e0));
    Povm::new(psi0.dims().to_vec(), vec![e0, e1], vec!["0".into(), "1".into()])
}

/// `(q_c, q_err)` of a three-outcome measurement `[E_0, E_1, E_?]` on a
/// uniformly chosen state of the pair.
pub fn discrimination_stats(m: &Povm, psi0: &PureState, psi1: &PureState) -> Result<(f64, f64)> {
    if m.len() != 3 {
        return Err(Error::InvalidPovm("expected outcomes 0, 1, ?".into()));
    }
    let p0 = m.probabilities_pure(psi0)?;
    let p1 = m.probabilities_pure(psi1)?;
    let q_c = 0.5 * (p0[0] + p0[1] + p1[0] + p1[1]);
    let q_err = 0.5 * (p0[1] + p1[0]);
    Ok((q_c, q_err))
}

/// Smallest error probability compatible with conclusive rate `q_c`:
/// `½(q_c − sqrt(q_c² − (q_c − 1 + tau)²))`, zero when `q_c ≤ 1 − tau`.
pub fn bc98_error_lower_bound(q_c: f64, tau: f64) -> Result<f64> {
    check_unit(q_c, "q_c in [0, 1]")?;
    check_unit(tau, "tau in [0, 1]")?;
    if q_c <= 1.0 - tau {
        return Ok(0.0);
    }
    let shift = q_c - 1.0 + tau;
    let inner = (q_c * q_c - shift * shift).max(0.0);
    Ok((0.5 * (q_c - inner.sqrt())).max(0.0))
}

/// Largest conclusive rate compatible with error `q_err`:
/// `min(1, 2 q_err + 1 − tau + 2 sqrt(q_err (1 − tau)))`.
pub fn conclusive_upper_bound(q_err: f64, tau: f64) -> Result<f64> {
    check_unit(q_err, "q_err in [0, 1]")?;
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::OutOfRange {
            value: tau,
            range: "tau in (0, 1)",
        });
    }
    Ok((2.0 * q_err + 1.0 - tau + 2.0 * (q_err * (1.0 - tau)).sqrt()).min(1.0))
}

/// One row of the bound table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub tau: f64,
    pub q_c: f64,
    pub q_err_lower: f64,
    pub q_c_upper: f64,
}

/// Tradeoff frontier for each tau: `steps + 1` conclusive rates from
/// `1 − tau` to 1, the minimum error at each, and the conclusive ceiling at
/// that error.
pub fn bound_table(taus: &[f64], steps: usize) -> Result<Vec<BoundRow>> {
    let steps = steps.max(1);
    let mut rows = Vec::with_capacity(taus.len() * (steps + 1));
    for &tau in taus {
        for i in 0..=steps {
            let q_c = (1.0 - tau) + tau * i as f64 / steps as f64;
            let q_err_lower = bc98_error_lower_bound(q_c, tau)?;
            rows.push(BoundRow {
                tau,
                q_c,
                q_err_lower,
                q_c_upper: conclusive_upper_bound(q_err_lower, tau)?,
            });
        }
    }
    Ok(rows)
}

pub fn bound_table_csv(rows: &[BoundRow]) -> String {
    let mut out = String::from("tau,q_c,q_err_lower,q_c_upper\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.tau, r.q_c, r.q_err_lower, r.q_c_upper));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenAsymptoticsReport {
    pub c_grid: Vec<f64>,
    /// `|<v0|w_c>|^2` for the dominant eigenvector `w_c`.
    pub overlap_sq: Vec<f64>,
    pub second_eigenvalue: Vec<f64>,
    /// `max_c c * max(|gamma_0^c|^2, lambda_c)`.
    pub fitted_kappa: f64,
}

/// Evaluates a family `c -> F_c` of PSD 2x2 operators with unit operator
/// norm on `c_grid`. When the top eigenvalue is degenerate the dominant
/// eigenvector is taken orthogonal to `v0`.
pub fn eigen_asymptotics_check(
    family: impl Fn(f64) -> CMatrix,
    v0: &PureState,
    c_grid: &[f64],
) -> Result<EigenAsymptoticsReport> {
    if v0.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: v0.dim(),
        });
    }
    if c_grid.is_empty() || c_grid.iter().any(|&c| !(c > 0.0)) || c_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation("grid must be positive and increasing".into()));
    }
    let v = v0.amplitudes();
    let mut overlap_sq = Vec::with_capacity(c_grid.len());
    let mut second = Vec::with_capacity(c_grid.len());
    for &cv in c_grid {
        let f = family(cv);
        if f.nrows() != 2 || f.ncols() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: f.nrows(),
            });
        }
        if linalg::hermiticity_defect(&f) > 1e-10 {
            return Err(Error::Validation(format!("F_{cv} is not Hermitian")));
        }
        let (values, vectors) = linalg::hermitian_eigen(&f);
        if values[0] < -1e-10 {
            return Err(Error::Validation(format!("F_{cv} is not PSD")));
        }
        if (values[1] - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "F_{cv} has operator norm {} instead of 1",
                values[1]
            )));
        }
        let top: CVector = if values[1] - values[0] < 1e-12 {
            
            CVector::from_vec(vec![-v[1].conj(), v[0].conj()])
        } else {
            vectors.column(1).into_owned()
        };
        overlap_sq.push(v.dotc(&top).norm_sqr());
        second.push(values[0].max(0.0));
    }
    let fitted_kappa = c_grid
        .iter()
        .zip(overlap_sq.iter().zip(&second))
        .map(|(cv, (g, l))| cv * g.max(*l))
        .fold(0.0, f64::max);
    Ok(EigenAsymptoticsReport {
        c_grid: c_grid.to_vec(),
        overlap_sq,
        second_eigenvalue: second,
        fitted_kappa,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use approx::assert_abs_diff_eq;

    fn pair_with_overlap(tau: f64) -> (PureState, PureState) {
        (
            PureState::from_real(&[1.0, 0.0]).unwrap(),
            PureState::from_real(&[tau, (1.0 - tau * tau).sqrt()]).unwrap(),
        )
    }

    #[test]
    fn bounds_marginals() {
        let b = discrimination_bounds(0.5).unwrap();
        assert_abs_diff_eq!(b.idp_qc_max, 0.5);
        assert_abs_diff_eq!(b.helstrom_qerr_min, (1.0 - 0.75f64.sqrt()) / 2.0);
        assert!(discrimination_bounds(1.2).is_err());
    }

    #[test]
    fn unambiguous_povm_examples() {
        for (tau, expect) in [(0.5, 0.5), (0.9, 0.1)] {
            let (a, b) = pair_with_overlap(tau);
            let m = optimal_unambiguous_povm(&a, &b).unwrap();
            let (q_c, q_err) = discrimination_stats(&m, &a, &b).unwrap();
            assert_abs_diff_eq!(q_c, expect, epsilon = 1e-9);
            assert!(q_err <= 1e-10);
        }
        let (a, _) = pair_with_overlap(0.5);
        let orth = PureState::from_real(&[0.0, 1.0]).unwrap();
        assert!(optimal_unambiguous_povm(&a, &orth).is_err());
        assert!(optimal_unambiguous_povm(&a, &a).is_err());
    }

    #[test]
    fn unambiguous_povm_in_higher_dimension() {
        let mut rng = random::seeded(11);
        let a = random::random_state(4, &mut rng);
        let b = random::random_state(4, &mut rng);
        let tau = quantum::overlap(&a, &b).unwrap();
        let m = optimal_unambiguous_povm(&a, &b).unwrap();
        let (q_c, q_err) = discrimination_stats(&m, &a, &b).unwrap();
        assert_abs_diff_eq!(q_c, 1.0 - tau, epsilon = 1e-9);
        assert!(q_err <= 1e-10);
    }

    #[test]
    fn bc98_examples() {
        assert_abs_diff_eq!(bc98_error_lower_bound(0.5, 0.5).unwrap(), 0.0);
        let v = bc98_error_lower_bound(1.0, 0.5).unwrap();
        assert_abs_diff_eq!(v, (1.0 - 0.75f64.sqrt()) / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.0670, epsilon = 1e-4);
        assert_abs_diff_eq!(bc98_error_lower_bound(1.0, 0.0).unwrap(), 0.0);
        assert!(bc98_error_lower_bound(0.51, 0.5).unwrap() > 0.0);
        assert_abs_diff_eq!(bc98_error_lower_bound(0.3, 0.5).unwrap(), 0.0);
        assert!(bc98_error_lower_bound(-0.1, 0.5).is_err());
    }

    #[test]
    fn conclusive_bound_examples() {
        assert_abs_diff_eq!(conclusive_upper_bound(0.0, 0.3).unwrap(), 0.7);
        let v = conclusive_upper_bound(0.01, 0.5).unwrap();
        assert_abs_diff_eq!(v, 0.52 + 2.0 * 0.005f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.6614, epsilon = 1e-4);
        assert_abs_diff_eq!(conclusive_upper_bound(0.4, 0.5).unwrap(), 1.0);
        assert!(conclusive_upper_bound(0.1, 0.0).is_err());
        assert!(conclusive_upper_bound(1.1, 0.5).is_err());
    }

    #[test]
    fn bound_table_is_consistent() {
        let rows = bound_table(&[0.2, 0.5, 0.8], 20).unwrap();
        assert_eq!(rows.len(), 63);
        for r in &rows {
            assert!(r.q_c_upper + 1e-9 >= r.q_c, "{r:?}");
        }
        assert!(bound_table_csv(&rows).starts_with("tau,q_c,q_err_lower,q_c_upper\n"));
    }

    #[test]
    fn eigen_asymptotics_families() {
        let v0 = PureState::basis(2, 0).unwrap();
        let grid = [1.0, 10.0, 100.0, 1000.0];
        let constant = |_c: f64| CMatrix::from_row_slice(2, 2, &[linalg::ZERO, linalg::ZERO, linalg::ZERO, linalg::ONE]);
        let r = eigen_asymptotics_check(constant, &v0, &grid).unwrap();
        assert_eq!(r.fitted_kappa, 0.0);

        let diagonal = |cv: f64| CMatrix::from_row_slice(2, 2, &[c(1.0 / cv, 0.0), linalg::ZERO, linalg::ZERO, linalg::ONE]);
        let r = eigen_asymptotics_check(diagonal, &v0, &grid).unwrap();
        for (k, cv) in grid.iter().enumerate() {
            assert_eq!(r.overlap_sq[k], 0.0);
            assert_abs_diff_eq!(r.second_eigenvalue[k], 1.0 / cv, epsilon = 1e-14);
        }

        let not_unit = |_c: f64| linalg::identity(2).scale(0.5);
        assert!(eigen_asymptotics_check(not_unit, &v0, &grid).is_err());
        let not_psd = |_c: f64| CMatrix::from_row_slice(2, 2, &[c(-0.5, 0.0), linalg::ZERO, linalg::ZERO, linalg::ONE]);
        assert!(eigen_asymptotics_check(not_psd, &v0, &grid).is_err());
        assert!(eigen_asymptotics_check(diagonal, &v0, &[10.0, 1.0]).is_err());
    }
}
