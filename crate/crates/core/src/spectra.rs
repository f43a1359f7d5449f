//! Dense generalized Hermitian eigensolver for operator pencils (S, M) with
//! Hermitian S and positive definite M, plus a posteriori verification.
//!
//! The pencil is reduced by the Cholesky factor of M to an ordinary
//! Hermitian problem, solved densely, and back-transformed. Everything is
//! deterministic: no randomized starts, fixed ordering.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// The eigenvalues and M-orthonormal eigenvectors of a pencil (S, M),
/// ascending, with relative residual norms |S v - lambda M v| / (|S| |v|)
/// recorded per pair.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Column i is the eigenvector of eigenvalues[i].
    pub eigenvectors: DMatrix<Complex64>,
    pub residual_norms: Vec<f64>,
}

/// Solves S v = lambda M v for Hermitian S and positive definite M.
/// Returns the `num_eigs` smallest pairs (all of them if `num_eigs` is 0 or
/// exceeds the dimension).
pub fn solve_pencil(
    s: &DMatrix<Complex64>,
    m: &DMatrix<Complex64>,
    num_eigs: usize,
) -> Result<Spectrum> {
    let n = s.nrows();
    if s.ncols() != n || m.nrows() != n || m.ncols() != n {
        return Err(Error::InvalidInput(
            "pencil matrices must be square and of equal size".into(),
        ));
    }
    if n == 0 {
        return Err(Error::InvalidInput("empty pencil".into()));
    }
    let herm_defect = |a: &DMatrix<Complex64>| -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                d = d.max((a[(i, j)] - a[(j, i)].conj()).norm());
            }
        }
        d
    };
    let scale_s = s.iter().map(|v| v.norm()).fold(0.0f64, f64::max).max(1e-300);
    let scale_m = m.iter().map(|v| v.norm()).fold(0.0f64, f64::max).max(1e-300);
    if herm_defect(s) > 1e-10 * scale_s {
        return Err(Error::InvalidInput("stiffness matrix is not Hermitian".into()));
    }
    if herm_defect(m) > 1e-10 * scale_m {
        return Err(Error::InvalidInput("mass matrix is not Hermitian".into()));
    }
    let chol = Cholesky::new(m.clone()).ok_or_else(|| {
        Error::MassDegenerate("mass matrix is not positive definite".into())
    })?;
    // A = L^-1 S L^-H, computed by two triangular solves.
    let l = chol.l();
    // nalgebra's complex Cholesky happily takes complex square roots of
    // negative pivots, so positive definiteness needs an explicit check.
    for i in 0..n {
        let d = l[(i, i)];
        if !(d.re > 0.0) || d.im.abs() > 1e-12 * d.re {
            return Err(Error::MassDegenerate(
                "mass matrix is not positive definite".into(),
            ));
        }
    }
    let mut a = s.clone();
    if !l.solve_lower_triangular_mut(&mut a) {
        return Err(Error::NumericalFailure("singular Cholesky factor".into()));
    }
    let mut at = a.adjoint();
    if !l.solve_lower_triangular_mut(&mut at) {
        return Err(Error::NumericalFailure("singular Cholesky factor".into()));
    }
    let a = at.adjoint();
    // enforce exact Hermitian symmetry before the eigensolve
    let a = (&a + a.adjoint()).scale(0.5);
    let eig = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let keep = if num_eigs == 0 { n } else { num_eigs.min(n) };
    let mut eigenvalues = Vec::with_capacity(keep);
    let mut eigenvectors = DMatrix::zeros(n, keep);
    for (col, &i) in order.iter().take(keep).enumerate() {
        eigenvalues.push(eig.eigenvalues[i]);
        // back-transform u -> v = L^-H u
        let mut v: DVector<Complex64> = eig.eigenvectors.column(i).into_owned();
        if !l.adjoint().solve_upper_triangular_mut(&mut v) {
            return Err(Error::NumericalFailure("singular Cholesky factor".into()));
        }
        // deterministic phase: make the largest-modulus entry real positive
        let (mut best, mut best_norm) = (Complex64::new(1.0, 0.0), -1.0);
        for x in v.iter() {
            if x.norm() > best_norm + 1e-15 {
                best_norm = x.norm();
                best = *x;
            }
        }
        if best_norm > 0.0 {
            let phase = best / best.norm();
            for x in v.iter_mut() {
                *x /= phase;
            }
        }
        // M-normalize
        let mv = m * &v;
        let nrm = v.dotc(&mv).re.max(0.0).sqrt();
        if nrm > 0.0 {
            for x in v.iter_mut() {
                *x /= nrm;
            }
        }
        eigenvectors.set_column(col, &v);
    }
    let residual_norms = residuals(s, m, &eigenvalues, &eigenvectors);
    for (i, &r) in residual_norms.iter().enumerate() {
        if r > 1e-8 {
            return Err(Error::NumericalFailure(format!(
                "eigenpair {} residual {:.3e} exceeds tolerance",
                i, r
            )));
        }
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        residual_norms,
    })
}

fn residuals(
    s: &DMatrix<Complex64>,
    m: &DMatrix<Complex64>,
    eigenvalues: &[f64],
    eigenvectors: &DMatrix<Complex64>,
) -> Vec<f64> {
    let s_scale = s.iter().map(|v| v.norm()).fold(0.0f64, f64::max).max(1.0);
    eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &lam)| {
            let v = eigenvectors.column(i);
            let r = s * v - (m * v).scale(lam);
            r.norm() / (s_scale * v.norm().max(1e-300))
        })
        .collect()
}

/// A posteriori verification of a computed spectrum: relative eigenpair
/// residuals and M-orthonormality defect. Returns the max of both.
pub fn verify_spectrum(
    s: &DMatrix<Complex64>,
    m: &DMatrix<Complex64>,
    spec: &Spectrum,
) -> f64 {
    let res = residuals(s, m, &spec.eigenvalues, &spec.eigenvectors)
        .into_iter()
        .fold(0.0f64, f64::max);
    let gram = spec.eigenvectors.adjoint() * m * &spec.eigenvectors;
    let k = gram.nrows();
    let mut ortho: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let expect = if i == j { 1.0 } else { 0.0 };
            ortho = ortho.max((gram[(i, j)] - expect).norm());
        }
    }
    res.max(ortho)
}
