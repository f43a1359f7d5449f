//! Twisted (magnetic) Laplacian pencils on cochains.
//!
//! In degree q the operator is the quadratic form of the twisted coboundary
//! D_a plus the codifferential part, both measured in the Whitney inner
//! products:
//!
//!   S = D_q^H M_{q+1} D_q + X^H M_{q-1}^{-1} X,   X = D_{q-1}^H M_q,
//!
//! paired with the mass matrix M_q. The generalized eigenvalues of (S, M_q)
//! approximate the spectrum of the connection Laplacian with connection
//! 1-form A when `a` is the edge integral (de Rham image) of A.

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;
use sprs::CsMat;

use crate::cup::twisted_coboundary;
use crate::error::{Error, Result};
use crate::forms::FormValue;
use crate::geometry::GeometricComplex;
use crate::simplicial::Cochain;
use crate::whitney::{de_rham, mass_matrix, whitney_eval, MassMatrix};

/// A generalized Hermitian eigenproblem S v = lambda M v on degree-q
/// cochains.
#[derive(Debug, Clone)]
pub struct OperatorPencil {
    pub degree: usize,
    pub stiffness: DMatrix<Complex64>,
    pub mass: DMatrix<Complex64>,
    pub description: String,
}

/// Densifies a sparse complex matrix.
pub fn to_dense(m: &CsMat<Complex64>) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(m.rows(), m.cols());
    for (row, vec) in m.outer_iterator().enumerate() {
        for (col, &v) in vec.iter() {
            out[(row, col)] = v;
        }
    }
    out
}

/// Edge cochain of a smooth 1-form given by its chart-coordinate
/// coefficients; this is the twisting cochain induced by a connection form.
pub fn cochain_from_smooth<F>(g: &GeometricComplex, coeffs: F, order: usize) -> Cochain
where
    F: Fn(&[f64]) -> Vec<Complex64>,
{
    de_rham(g, 1, 1, coeffs, order)
}

fn symmetrize(a: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let at = a.adjoint();
    (a + at).scale(0.5)
}

/// Degree-0 pencil: S = D_0^H M_1 D_0, M = M_0.
pub fn assemble_degree0(g: &GeometricComplex, a: &Cochain) -> Result<OperatorPencil> {
    let k = g.complex();
    let d0 = to_dense(&twisted_coboundary(k, a, 0)?);
    let m1 = to_dense(&mass_matrix(g, 1, 1)?.complex_mat());
    let m0 = to_dense(&mass_matrix(g, 0, 1)?.complex_mat());
    let s = symmetrize(d0.adjoint() * m1 * &d0);
    Ok(OperatorPencil {
        degree: 0,
        stiffness: s,
        mass: m0,
        description: "twisted Laplacian, degree 0".into(),
    })
}

/// Degree-q pencil with both the coboundary and codifferential terms. The
/// inverse of M_{q-1} never appears explicitly; the lower term is built from
/// a Cholesky solve.
pub fn assemble_general(g: &GeometricComplex, a: &Cochain, q: usize) -> Result<OperatorPencil> {
    if q == 0 {
        return assemble_degree0(g, a);
    }
    let k = g.complex();
    let n = g.dim();
    if q > n {
        return Err(Error::InvalidInput(format!(
            "degree {} exceeds dimension {}",
            q, n
        )));
    }
    let mq = to_dense(&mass_matrix(g, q, 1)?.complex_mat());
    let mut s = DMatrix::zeros(k.len(q), k.len(q));
    if q < n {
        let dq = to_dense(&twisted_coboundary(k, a, q)?);
        let mq1 = to_dense(&mass_matrix(g, q + 1, 1)?.complex_mat());
        s += dq.adjoint() * mq1 * &dq;
    }
    // lower term
    let dqm1 = to_dense(&twisted_coboundary(k, a, q - 1)?);
    let mqm1 = to_dense(&mass_matrix(g, q - 1, 1)?.complex_mat());
    let x = dqm1.adjoint() * &mq; // maps C^q -> C^{q-1}
    let chol = Cholesky::new(mqm1).ok_or_else(|| {
        Error::MassDegenerate("lower-degree mass matrix is not positive definite".into())
    })?;
    let y = chol.solve(&x);
    s += x.adjoint() * y;
    Ok(OperatorPencil {
        degree: q,
        stiffness: symmetrize(s),
        mass: mq,
        description: format!("twisted Laplacian, degree {}", q),
    })
}

/// Whitney-norm of D_a(R omega) - R(d omega + i A ^ omega): how far the
/// twisted coboundary is from commuting with sampling. `omega` and
/// `twisted_d_omega` give the chart-coordinate coefficients of the smooth
/// q-form and of its twisted exterior derivative.
pub fn commutation_defect<F, G>(
    g: &GeometricComplex,
    a: &Cochain,
    q: usize,
    omega: F,
    twisted_d_omega: G,
    order: usize,
) -> Result<f64>
where
    F: Fn(&[f64]) -> Vec<Complex64>,
    G: Fn(&[f64]) -> Vec<Complex64>,
{
    let k = g.complex();
    let r_omega = de_rham(g, q, 1, omega, order);
    let d = twisted_coboundary(k, a, q)?;
    let mut lhs = vec![Complex64::ZERO; k.len(q + 1)];
    for (row, vec) in d.outer_iterator().enumerate() {
        for (col, &v) in vec.iter() {
            lhs[row] += v * r_omega.values[col];
        }
    }
    let rhs = de_rham(g, q + 1, 1, twisted_d_omega, order);
    let diff = Cochain::scalar(
        q + 1,
        lhs.iter().zip(&rhs.values).map(|(x, y)| x - y).collect(),
    );
    let m = mass_matrix(g, q + 1, 1)?;
    Ok(m.norm(&diff))
}

/// Whitney-norm distance between W^K R^K omega and omega itself, measured by
/// quadrature of the pointwise metric norm: the sampling error of the
/// Whitney space for a given smooth form.
pub fn sampling_error<F>(g: &GeometricComplex, q: usize, omega: F, order: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> Vec<Complex64>,
{
    let r = de_rham(g, q, 1, &omega, order);
    // integrate |W R omega - omega|^2 over every top simplex via the
    // volume quadrature of the top degree
    let n = g.dim();
    let ncoef = crate::forms::combinations(n, q).len();
    let rule = crate::forms::simplex_quadrature(n, order);
    let mut acc = 0.0;
    for t in 0..g.num_tops() {
        let vol_scale = g.top(t).volume * crate::geometry::factorial(n);
        for (bary, w) in &rule.nodes {
            let x = g.chart_point(t, bary);
            let raw = omega(&x);
            let smooth = FormValue {
                dim: n,
                degree: q,
                coeffs: raw[..ncoef].to_vec(),
            };
            let wr = whitney_eval(g, &r, t, bary)?;
            acc += wr[0].sub(&smooth).norm().powi(2) * w * vol_scale;
        }
    }
    Ok(acc.max(0.0).sqrt())
}

/// M-norm of (R W - id) applied to every basis cochain would be zero by
/// construction; instead this measures the defect of the integrated product
/// rule on a pair of cochains, used as a mesh-quality diagnostic.
pub fn product_rule_defect(g: &GeometricComplex, a: &Cochain, b: &Cochain) -> Result<f64> {
    let k = g.complex();
    let (p, q) = (a.degree, b.degree);
    if p + q + 1 > g.dim() {
        return Err(Error::InvalidInput(
            "product rule defect needs deg a + deg b < dimension".into(),
        ));
    }
    // d^K(a cup b) - (d^K a cup b) - (-1)^p (a cup d^K b), in Whitney norm
    let ab = crate::cup::cup(k, a, b)?;
    let d_ab = apply(&k.coboundary_matrix_c(p + q)?, &ab.values);
    let da = Cochain::scalar(p + 1, apply(&k.coboundary_matrix_c(p)?, &a.values));
    let db = Cochain::scalar(q + 1, apply(&k.coboundary_matrix_c(q)?, &b.values));
    let t1 = crate::cup::cup(k, &da, b)?;
    let t2 = crate::cup::cup(k, a, &db)?;
    let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
    let diff = Cochain::scalar(
        p + q + 1,
        (0..d_ab.len())
            .map(|i| d_ab[i] - t1.values[i] - t2.values[i] * sign)
            .collect(),
    );
    let m = mass_matrix(g, p + q + 1, 1)?;
    Ok(m.norm(&diff))
}

fn apply(m: &CsMat<Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::ZERO; m.rows()];
    for (row, vec) in m.outer_iterator().enumerate() {
        for (col, &x) in vec.iter() {
            out[row] += x * v[col];
        }
    }
    out
}

/// Whitney mass matrices reused by callers that assemble several pencils.
pub fn pencil_masses(g: &GeometricComplex, q: usize) -> Result<(MassMatrix, MassMatrix)> {
    Ok((mass_matrix(g, q, 1)?, mass_matrix(g, q + 1, 1)?))
}

/// The constant twisting cochain alpha * (edge integrals of d theta) on the
/// circle preset: every edge of the cyclic orientation carries alpha * h.
pub fn circle_twist(g: &GeometricComplex, alpha: f64) -> Cochain {
    cochain_from_smooth(g, |_| vec![Complex64::new(alpha, 0.0)], 4)
}

/// The constant twisting cochain for A = alpha dx + beta dy on the torus
/// preset.
pub fn torus_twist(g: &GeometricComplex, alpha: f64, beta: f64) -> Cochain {
    cochain_from_smooth(
        g,
        |_| vec![Complex64::new(alpha, 0.0), Complex64::new(beta, 0.0)],
        4,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{preset_circle, preset_torus};
    use crate::spectra::{solve_pencil, verify_spectrum};
    use std::f64::consts::PI;

    /// Exact eigenvalues of the circle pencil with constant twist alpha:
    /// plane waves diagonalize every circulant factor.
    fn circle_pencil_oracle(n: usize, alpha: f64) -> Vec<f64> {
        let h = 2.0 * PI / n as f64;
        let mut eigs: Vec<f64> = (0..n)
            .map(|m| {
                let kh = 2.0 * PI * m as f64 / n as f64;
                let e = Complex64::new(0.0, kh).exp();
                let num = (e - 1.0 + Complex64::new(0.0, alpha * h) * (1.0 + e) / 2.0).norm_sqr()
                    / h;
                let den = (h / 6.0) * (4.0 + 2.0 * kh.cos());
                num / den
            })
            .collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        eigs
    }

    #[test]
    fn circle_degree0_matches_circulant_oracle() {
        for (n, alpha) in [(8usize, 0.0), (8, 0.3), (12, 0.45)] {
            let g = preset_circle(n).unwrap();
            let a = circle_twist(&g, alpha);
            let p = assemble_degree0(&g, &a).unwrap();
            let spec = solve_pencil(&p.stiffness, &p.mass, 0).unwrap();
            let oracle = circle_pencil_oracle(n, alpha);
            for (got, want) in spec.eigenvalues.iter().zip(&oracle) {
                assert!(
                    (got - want).abs() < 1e-9 * (1.0 + want.abs()),
                    "n={} alpha={}: {} vs {}",
                    n,
                    alpha,
                    got,
                    want
                );
            }
            assert!(verify_spectrum(&p.stiffness, &p.mass, &spec) < 1e-9);
        }
    }

    #[test]
    fn zero_twist_is_real_fem_pencil_with_constant_kernel() {
        let g = preset_torus(4).unwrap();
        let a = Cochain::zeros(g.complex(), 1, 1);
        let p = assemble_degree0(&g, &a).unwrap();
        assert!(p.stiffness.iter().all(|v| v.im.abs() < 1e-13));
        let spec = solve_pencil(&p.stiffness, &p.mass, 4).unwrap();
        // connected manifold: exactly one zero eigenvalue
        assert!(spec.eigenvalues[0].abs() < 1e-10);
        assert!(spec.eigenvalues[1] > 1e-3);
        // constants span the kernel
        let v = spec.eigenvectors.column(0);
        let mean = v.iter().sum::<Complex64>() / v.len() as f64;
        for x in v.iter() {
            assert!((x - mean).norm() < 1e-8);
        }
    }

    #[test]
    fn conjugation_symmetry_of_twist() {
        let g = preset_circle(10).unwrap();
        let a = circle_twist(&g, 0.4);
        let minus_a = Cochain::scalar(1, a.values.iter().map(|v| -v).collect());
        let p1 = assemble_degree0(&g, &a).unwrap();
        let p2 = assemble_degree0(&g, &minus_a).unwrap();
        // S(-a) = conj(S(a)): same spectrum
        let s1 = solve_pencil(&p1.stiffness, &p1.mass, 0).unwrap();
        let s2 = solve_pencil(&p2.stiffness, &p2.mass, 0).unwrap();
        for (x, y) in s1.eigenvalues.iter().zip(&s2.eigenvalues) {
            assert!((x - y).abs() < 1e-10);
        }
        for i in 0..p1.stiffness.nrows() {
            for j in 0..p1.stiffness.ncols() {
                assert!((p1.stiffness[(i, j)].conj() - p2.stiffness[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn circle_degree1_nonzero_spectrum_matches_degree0() {
        // On the circle the degree-1 operator only has the codifferential
        // term; its spectrum coincides with the degree-0 spectrum.
        let n = 10;
        let g = preset_circle(n).unwrap();
        let a = circle_twist(&g, 0.25);
        let p0 = assemble_degree0(&g, &a).unwrap();
        let p1 = assemble_general(&g, &a, 1).unwrap();
        let s0 = solve_pencil(&p0.stiffness, &p0.mass, 0).unwrap();
        let s1 = solve_pencil(&p1.stiffness, &p1.mass, 0).unwrap();
        for (x, y) in s0.eigenvalues.iter().zip(&s1.eigenvalues) {
            assert!((x - y).abs() < 1e-9 * (1.0 + x.abs()), "{} vs {}", x, y);
        }
    }

    #[test]
    fn torus_degree1_pencil_is_well_posed() {
        let g = preset_torus(3).unwrap();
        let a = torus_twist(&g, 0.4, 0.7);
        let p = assemble_general(&g, &a, 1).unwrap();
        let spec = solve_pencil(&p.stiffness, &p.mass, 6).unwrap();
        assert!(verify_spectrum(&p.stiffness, &p.mass, &spec) < 1e-8);
        // twisted with non-integral holonomy: no zero modes
        assert!(spec.eigenvalues[0] > 1e-6);
    }

    #[test]
    fn untwisted_commutation_is_exact_in_degree0() {
        // d^K R f = R df holds exactly (fundamental theorem edge by edge).
        let g = preset_circle(12).unwrap();
        let a = Cochain::zeros(g.complex(), 1, 1);
        let defect = commutation_defect(
            &g,
            &a,
            0,
            |x| vec![Complex64::new(x[0].cos(), 0.0)],
            |x| vec![Complex64::new(-x[0].sin(), 0.0)],
            12,
        )
        .unwrap();
        assert!(defect < 1e-12, "defect {}", defect);
    }

    #[test]
    fn twisted_commutation_defect_decays() {
        let alpha = 0.5;
        let mut prev = f64::INFINITY;
        for n in [8usize, 16, 32] {
            let g = preset_circle(n).unwrap();
            let a = circle_twist(&g, alpha);
            let defect = commutation_defect(
                &g,
                &a,
                0,
                |x| vec![Complex64::new(x[0].cos(), x[0].sin())],
                |x| {
                    let f = Complex64::new(x[0].cos(), x[0].sin());
                    let df = Complex64::new(-x[0].sin(), x[0].cos());
                    vec![df + Complex64::new(0.0, alpha) * f]
                },
                12,
            )
            .unwrap();
            assert!(defect < prev / 1.8, "n={} defect {} prev {}", n, defect, prev);
            prev = defect;
        }
    }

    #[test]
    fn sampling_error_first_order_for_one_forms() {
        let mut prev = f64::INFINITY;
        for n in [8usize, 16, 32] {
            let g = preset_circle(n).unwrap();
            let err = sampling_error(
                &g,
                1,
                |x| vec![Complex64::new((x[0]).sin(), 0.0)],
                10,
            )
            .unwrap();
            assert!(err < prev / 1.8, "n={} err {}", n, err);
            prev = err;
        }
    }

    #[test]
    fn leibniz_defect_zero_for_simplicial_cup() {
        // the simplicial product rule is exact; the diagnostic must be ~0
        let g = preset_torus(3).unwrap();
        let k = g.complex();
        let mut a = Cochain::zeros(k, 0, 1);
        for (i, v) in a.values.iter_mut().enumerate() {
            *v = Complex64::new((i as f64 * 0.3).sin(), 0.1);
        }
        let mut b = Cochain::zeros(k, 0, 1);
        for (i, v) in b.values.iter_mut().enumerate() {
            *v = Complex64::new((i as f64 * 0.7).cos(), -0.2);
        }
        let defect = product_rule_defect(&g, &a, &b).unwrap();
        assert!(defect < 1e-12);
    }
}
