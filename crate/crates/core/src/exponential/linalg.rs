//! Small dense matrix helpers for fiber maps.

use nalgebra::{DMatrix, Schur, SymmetricEigen, SVD};

use crate::{Error, Result};

/// Fiber maps with a larger 2-norm condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    SVD::new(a.clone(), false, false).singular_values.iter().copied().collect()
}

pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = singular_values(a);
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn check_conditioning(a: &DMatrix<f64>) -> Result<()> {
    let condition = condition_number(a);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    Ok(())
}

pub fn inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_conditioning(a)?;
    a.clone()
        .try_inverse()
        .ok_or(Error::IllConditioned { condition: f64::INFINITY })
}

pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.exp()
}

/// Polar decomposition `A = R · P` with `R` orthogonal and `P` symmetric
/// positive definite, from the SVD `A = U Σ Vᵀ`.
pub fn polar(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let svd = SVD::new(a.clone(), true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested Vᵀ");
    let sigma = DMatrix::from_diagonal(&svd.singular_values);
    let r = &u * &vt;
    let p = vt.transpose() * sigma * &vt;
    (r, symmetrize(&p))
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub fn skew_part(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a - a.transpose()) * 0.5
}

/// Principal logarithm of a symmetric positive definite matrix.
pub fn log_spd(p: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(symmetrize(p));
    if let Some(l) = eig.eigenvalues.iter().find(|l| !(**l > 0.0)) {
        return Err(Error::Parameter(format!(
            "matrix is not positive definite (eigenvalue {l})"
        )));
    }
    let logs = eig.eigenvalues.map(f64::ln);
    let v = &eig.eigenvectors;
    Ok(symmetrize(&(v * DMatrix::from_diagonal(&logs) * v.transpose())))
}

/// Skew-symmetric logarithm of a rotation `R ∈ SO(k)`, read off the real
/// Schur form: 2×2 rotation blocks give their angle, and eigenvalues `-1`
/// (which come in pairs) are paired into half-turns.
pub fn log_rotation(r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = r.nrows();
    if r.determinant() <= 0.0 {
        return Err(Error::Parameter("rotation logarithm needs det > 0".into()));
    }
    let (q, t) = Schur::new(r.clone()).unpack();
    let mut log = DMatrix::<f64>::zeros(k, k);
    let mut half_turns = Vec::new();
    let mut i = 0;
    while i < k {
        if i + 1 < k && t[(i + 1, i)].abs() > 1e-13 {
            let c = 0.5 * (t[(i, i)] + t[(i + 1, i + 1)]);
            let s = 0.5 * (t[(i + 1, i)] - t[(i, i + 1)]);
            let theta = s.atan2(c);
            log[(i + 1, i)] = theta;
            log[(i, i + 1)] = -theta;
            i += 2;
        } else {
            if t[(i, i)] < 0.0 {
                half_turns.push(i);
            }
            i += 1;
        }
    }
    if half_turns.len() % 2 != 0 {
        return Err(Error::Parameter("unpaired eigenvalue -1 in rotation".into()));
    }
    for pair in half_turns.chunks(2) {
        let (a, b) = (pair[0], pair[1]);
        log[(b, a)] = std::f64::consts::PI;
        log[(a, b)] = -std::f64::consts::PI;
    }
    let s = skew_part(&(&q * log * q.transpose()));
    let err = (expm(&s) - r).norm();
    if err > 1e-9 * (k as f64).sqrt() {
        return Err(Error::Parameter(format!(
            "rotation logarithm failed to reproduce the input (error {err:e})"
        )));
    }
    Ok(s)
}

/// `diag(-1, 1, ..., 1)`.
pub fn reflection(k: usize) -> DMatrix<f64> {
    let mut d = DMatrix::identity(k, k);
    d[(0, 0)] = -1.0;
    d
}

pub fn is_orthogonal(a: &DMatrix<f64>, tol: f64) -> bool {
    let k = a.nrows();
    (a.transpose() * a - DMatrix::identity(k, k)).norm() <= tol
}

pub fn rows(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect())
        .collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parameter("matrix must be square and non-empty".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}
