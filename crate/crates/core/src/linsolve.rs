//! Dense linear least squares with singular-value truncation and rank
//! diagnostics. Both identification steps and the amplitude solve realify
//! complex unknowns, so a single real solver path serves both fields.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Absolute singular-value floor, relative to the largest matrix entry.
const DEGENERATE_FLOOR: f64 = 1e-14;

/// An overdetermined real least-squares problem with labelled columns.
#[derive(Debug, Clone)]
pub struct LsqProblem {
    pub design: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub column_labels: Vec<String>,
}

/// Minimum-norm truncated-SVD solution with diagnostics.
#[derive(Debug, Clone)]
pub struct LsqSolution {
    pub x: DVector<f64>,
    /// ||design x - rhs||, recomputed from the solution.
    pub residual_norm: f64,
    /// Largest singular value over the smallest (untruncated); >= 1.
    pub condition_estimate: f64,
    /// Number of singular values kept after truncation.
    pub truncated_rank: usize,
}

/// Solve min ||design x - rhs|| by SVD, truncating singular values below
/// `rel_tol` times the largest one. Minimum-norm in the truncated space.
pub fn solve_lsq(problem: &LsqProblem, rel_tol: f64) -> Result<LsqSolution> {
    let design = &problem.design;
    let rhs = &problem.rhs;
    assert!(
        design.nrows() >= design.ncols(),
        "inhomogeneous solve needs rows >= cols"
    );
    assert_eq!(design.nrows(), rhs.len());
    assert!(rel_tol > 0.0 && rel_tol < 1.0);
    assert!(
        design.iter().all(|v| v.is_finite()) && rhs.iter().all(|v| v.is_finite()),
        "non-finite entries in the least-squares problem"
    );

    let max_entry = design.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    // Columns are equilibrated to unit norm before factoring, so truncation
    // and the minimum-norm choice act in response units rather than raw
    // coefficient units; the solution is mapped back afterwards.
    let scales: Vec<f64> = design
        .column_iter()
        .map(|c| {
            let n = c.norm();
            if n > 0.0 {
                n
            } else {
                1.0
            }
        })
        .collect();
    let mut scaled = design.clone();
    for (mut col, &s) in scaled.column_iter_mut().zip(&scales) {
        col /= s;
    }

    let svd = scaled.svd(true, true);
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().fold(0.0f64, |m, &s| m.max(s));
    let floor = DEGENERATE_FLOOR * max_entry;
    if sigma_max <= floor {
        return Err(Error::DegenerateSystem);
    }
    let sigma_min = sigma.iter().fold(f64::INFINITY, |m, &s| m.min(s));
    let condition_estimate = (sigma_max / sigma_min.max(1e-300)).max(1.0);

    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let cut = rel_tol * sigma_max;
    let mut x = DVector::zeros(design.ncols());
    let mut truncated_rank = 0;
    for (i, &s) in sigma.iter().enumerate() {
        if s >= cut && s > floor {
            let coeff = u.column(i).dot(rhs) / s;
            x.axpy(coeff, &v_t.row(i).transpose(), 1.0);
            truncated_rank += 1;
        }
    }
    for (xj, &s) in x.iter_mut().zip(&scales) {
        *xj /= s;
    }
    let residual_norm = (design * &x - rhs).norm();
    Ok(LsqSolution {
        x,
        residual_norm,
        condition_estimate,
        truncated_rank,
    })
}

/// Unit-norm minimizer of ||design x||: the right singular vector of the
/// smallest singular value, sign-fixed so the first nonzero entry is
/// positive. Accepts rows >= cols - 1.
pub fn solve_homogeneous(design: &DMatrix<f64>) -> (DVector<f64>, f64) {
    let (x, smallest, _, _) = solve_homogeneous_ranked(design, 1e-10);
    (x, smallest)
}

/// As [`solve_homogeneous`], additionally reporting the largest singular
/// value and the count of singular values at or above `rel_tol` times it.
pub(crate) fn solve_homogeneous_ranked(
    design: &DMatrix<f64>,
    rel_tol: f64,
) -> (DVector<f64>, f64, f64, usize) {
    let cols = design.ncols();
    assert!(design.nrows() + 1 >= cols, "need rows >= cols - 1");
    // Pad with zero rows so the thin SVD carries the full right basis.
    let padded = if design.nrows() < cols {
        let mut m = DMatrix::zeros(cols, cols);
        m.view_mut((0, 0), (design.nrows(), cols)).copy_from(design);
        m
    } else {
        design.clone()
    };
    let svd = padded.svd(false, true);
    let sigma = &svd.singular_values;
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut min_idx = 0;
    for (i, &s) in sigma.iter().enumerate() {
        if s < sigma[min_idx] {
            min_idx = i;
        }
    }
    let mut x = v_t.row(min_idx).transpose();
    if let Some(lead) = x.iter().find(|v| v.abs() > 1e-12) {
        if *lead < 0.0 {
            x = -x;
        }
    }
    let sigma_max = sigma.iter().fold(0.0f64, |m, &s| m.max(s));
    let rank = sigma.iter().filter(|&&s| s >= rel_tol * sigma_max).count();
    (x, sigma[min_idx], sigma_max, rank)
}
