//! Non-negative least squares (Lawson-Hanson active set).

use nalgebra::{DMatrix, DVector};

/// `argmin ||A x - b||` subject to `x >= 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let (m, n) = a.shape();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let norm1 = (0..n).map(|j| a.column(j).abs().sum()).fold(0.0, f64::max);
    let tol = 10.0 * f64::EPSILON * norm1 * m.max(n) as f64;

    for _ in 0..3 * n.max(1) {
        let w = a.tr_mul(&(b - a * &x));
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].partial_cmp(&w[j]).expect("finite gradient"));
        let Some(j) = candidate else { break };
        passive[j] = true;

        for _ in 0..3 * n.max(1) {
            let z = solve_passive(a, b, &passive);
            if (0..n).all(|k| !passive[k] || z[k] > tol) {
                x = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for k in 0..n {
                if passive[k] && z[k] <= tol {
                    let denom = x[k] - z[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[k] / denom);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for k in 0..n {
                x[k] += alpha * (z[k] - x[k]);
                if passive[k] && x[k] <= tol {
                    passive[k] = false;
                    x[k] = 0.0;
                }
            }
        }
    }
    x
}

/// Unconstrained least squares on the passive columns; zeros elsewhere.
fn solve_passive(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let cols: Vec<usize> = (0..passive.len()).filter(|&j| passive[j]).collect();
    let mut out = DVector::zeros(passive.len());
    if cols.is_empty() {
        return out;
    }
    let sub = a.select_columns(&cols);
    let svd = sub.svd(true, true);
    let z = svd.solve(b, 1e-13).expect("SVD computed with U and V");
    for (i, &j) in cols.iter().enumerate() {
        out[j] = z[i];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Enumerates every support set; the feasible unconstrained solution with the
    /// smallest residual is the NNLS optimum.
    fn brute_force(a: &DMatrix<f64>, b: &DVector<f64>) -> f64 {
        let n = a.ncols();
        let mut best = b.norm();
        for mask in 1u32..(1 << n) {
            let passive: Vec<bool> = (0..n).map(|j| mask & (1 << j) != 0).collect();
            let z = solve_passive(a, b, &passive);
            if z.iter().all(|&v| v >= -1e-12) {
                best = best.min((a * z - b).norm());
            }
        }
        best
    }

    #[test]
    fn known_solution() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, -1.0, 0.0]);
        let x = nnls(&a, &b);
        assert!(x[1].abs() < 1e-14);
        assert!((x[0] - 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn matches_support_enumeration(vals in proptest::collection::vec(-1.0f64..1.0, 24), rhs in proptest::collection::vec(-1.0f64..1.0, 6)) {
            let a = DMatrix::from_row_slice(6, 4, &vals);
            let b = DVector::from_vec(rhs);
            let x = nnls(&a, &b);
            prop_assert!(x.iter().all(|&v| v >= 0.0));
            let r = (&a * &x - &b).norm();
            prop_assert!(r <= brute_force(&a, &b) + 1e-9);
        }
    }
}
