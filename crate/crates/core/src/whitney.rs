//! Whitney map, de Rham map, exact polynomial integration over simplices and
//! Whitney mass matrices.
//!
//! Mass matrices are assembled in closed form from the barycentric moment
//! formula and the constant gradient Gram matrices, so they carry no
//! quadrature error.

use nalgebra::DMatrix;
use num_complex::Complex64;
use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};
use crate::forms::{combinations, simplex_quadrature, FormValue};
use crate::geometry::{factorial, GeometricComplex};
use crate::simplicial::Cochain;

/// The Gram matrix of the Whitney inner product in degree q. The scalar
/// matrix is stored; fiber-valued cochains use the Kronecker extension
/// `mat (x) Id(fiber_dim)`.
#[derive(Debug, Clone)]
pub struct MassMatrix {
    pub degree: usize,
    pub fiber_dim: usize,
    pub mat: CsMat<f64>,
}

impl MassMatrix {
    /// Kronecker-extended complex matrix acting on fiber-valued cochains.
    pub fn complex_mat(&self) -> CsMat<Complex64> {
        kron_identity(&self.mat.map(|&x| Complex64::new(x, 0.0)), self.fiber_dim)
    }

    /// Whitney norm of a cochain: sqrt(c^H M c), summed over fiber
    /// components.
    pub fn norm(&self, c: &Cochain) -> f64 {
        debug_assert_eq!(c.degree, self.degree);
        let nf = c.fiber_dim;
        let mut acc = 0.0;
        for (row, vec) in self.mat.outer_iterator().enumerate() {
            for (col, &m) in vec.iter() {
                for s in 0..nf {
                    acc += (c.values[row * nf + s].conj() * m * c.values[col * nf + s]).re;
                }
            }
        }
        acc.max(0.0).sqrt()
    }
}

/// `mat (x) Id(f)`: index layout (simplex, component) -> simplex * f + comp.
pub fn kron_identity(mat: &CsMat<Complex64>, f: usize) -> CsMat<Complex64> {
    if f == 1 {
        return mat.clone();
    }
    let mut tri = TriMat::new((mat.rows() * f, mat.cols() * f));
    for (row, vec) in mat.outer_iterator().enumerate() {
        for (col, &v) in vec.iter() {
            for s in 0..f {
                tri.add_triplet(row * f + s, col * f + s, v);
            }
        }
    }
    tri.to_csr()
}

/// Exact integral of the barycentric monomial prod mu_i^{k_i} over a top
/// simplex: vol * N! * prod(k_i!) / (N + sum k)!.
pub fn simplex_moment(g: &GeometricComplex, top: usize, exponents: &[u32]) -> f64 {
    let n = g.dim();
    debug_assert_eq!(exponents.len(), n + 1);
    let total: u32 = exponents.iter().sum();
    let num: f64 = exponents.iter().map(|&k| factorial(k as usize)).product();
    g.top(top).volume * factorial(n) * num / factorial(n + total as usize)
}

/// All q-faces of top simplex `t`, as (global q-index, local vertex
/// positions within the top simplex).
pub fn faces_of_top(g: &GeometricComplex, t: usize, q: usize) -> Vec<(usize, Vec<usize>)> {
    let k = g.complex();
    let tv = k.simplex(g.dim(), t).vertices().to_vec();
    combinations(tv.len(), q + 1)
        .into_iter()
        .map(|locals| {
            let verts: Vec<usize> = locals.iter().map(|&l| tv[l]).collect();
            let (gi, _) = k.index_of(&verts).expect("face of top simplex");
            (gi, locals)
        })
        .collect()
}

/// Value of the Whitney form of the q-face with local vertex positions
/// `locals` of top simplex `t`, at barycentric point `bary` (coefficients in
/// the chart of `t`).
pub fn whitney_basis(
    g: &GeometricComplex,
    t: usize,
    locals: &[usize],
    bary: &[f64],
) -> FormValue {
    let n = g.dim();
    let q = locals.len() - 1;
    let geom = g.top(t);
    let axis_subsets = combinations(n, q);
    let mut out = FormValue::zero(n, q);
    if q == 0 {
        out.coeffs[0] = Complex64::new(bary[locals[0]], 0.0);
        return out;
    }
    let qf = factorial(q);
    for (i, &li) in locals.iter().enumerate() {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let scale = qf * sign * bary[li];
        if scale == 0.0 {
            continue;
        }
        // wedge of the gradients of the other barycentric coordinates
        let others: Vec<usize> = locals
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &l)| l)
            .collect();
        for (si, subset) in axis_subsets.iter().enumerate() {
            let mut m = DMatrix::zeros(q, q);
            for (r, &l) in others.iter().enumerate() {
                for (c, &ax) in subset.iter().enumerate() {
                    m[(r, c)] = geom.grads[(l, ax)];
                }
            }
            out.coeffs[si] += Complex64::new(scale * m.determinant(), 0.0);
        }
    }
    out
}

/// Value of W^K c at a barycentric point of top simplex `t`, one FormValue
/// per fiber component.
pub fn whitney_eval(
    g: &GeometricComplex,
    c: &Cochain,
    t: usize,
    bary: &[f64],
) -> Result<Vec<FormValue>> {
    if bary.iter().any(|&l| l < -1e-12) || (bary.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput(
            "barycentric point outside simplex".into(),
        ));
    }
    let n = g.dim();
    let q = c.degree;
    let nf = c.fiber_dim;
    let mut out = vec![FormValue::zero(n, q); nf];
    for (gi, locals) in faces_of_top(g, t, q) {
        let w = whitney_basis(g, t, &locals, bary);
        for (s, val) in out.iter_mut().enumerate() {
            let coef = c.values[gi * nf + s];
            if coef != Complex64::ZERO {
                val.add_assign(&w.scale(coef));
            }
        }
    }
    Ok(out)
}

/// Whitney mass matrix of degree q, assembled in closed form per top
/// simplex.
pub fn mass_matrix(g: &GeometricComplex, q: usize, fiber_dim: usize) -> Result<MassMatrix> {
    let n = g.dim();
    if q > n {
        return Err(Error::InvalidInput(format!(
            "mass matrix degree {} exceeds dimension {}",
            q, n
        )));
    }
    let k = g.complex();
    let mut tri = TriMat::new((k.len(q), k.len(q)));
    let qf2 = factorial(q) * factorial(q);
    for t in 0..g.num_tops() {
        let geom = g.top(t);
        let faces = faces_of_top(g, t, q);
        // int mu_a mu_b over this top simplex
        let pair_moment = |a: usize, b: usize| -> f64 {
            let mut exps = vec![0u32; n + 1];
            exps[a] += 1;
            exps[b] += 1;
            simplex_moment(g, t, &exps)
        };
        for (gi, li) in &faces {
            for (gj, lj) in &faces {
                let mut entry = 0.0;
                for (a, &la) in li.iter().enumerate() {
                    let rows: Vec<usize> = li
                        .iter()
                        .enumerate()
                        .filter(|&(x, _)| x != a)
                        .map(|(_, &l)| l)
                        .collect();
                    for (b, &lb) in lj.iter().enumerate() {
                        let cols: Vec<usize> = lj
                            .iter()
                            .enumerate()
                            .filter(|&(x, _)| x != b)
                            .map(|(_, &l)| l)
                            .collect();
                        let mut m = DMatrix::zeros(q, q);
                        for (r, &lr) in rows.iter().enumerate() {
                            for (c, &lc) in cols.iter().enumerate() {
                                m[(r, c)] = geom.gram[(lr, lc)];
                            }
                        }
                        let det = if q == 0 { 1.0 } else { m.determinant() };
                        let sign = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
                        entry += sign * pair_moment(la, lb) * det;
                    }
                }
                tri.add_triplet(*gi, *gj, qf2 * entry);
            }
        }
    }
    let mat = tri.to_csr();
    // cheap sanity: diagonal must be strictly positive
    for i in 0..mat.rows() {
        let d = mat.get(i, i).copied().unwrap_or(0.0);
        if d <= 0.0 {
            return Err(Error::DegenerateMetric(format!(
                "mass matrix degree {} has non-positive diagonal at {}",
                q, i
            )));
        }
    }
    Ok(MassMatrix {
        degree: q,
        fiber_dim,
        mat,
    })
}

/// Integrates a form value (given as a function of chart points of the
/// owner top simplex) over the i-th q-simplex. `eval` receives the chart
/// point and the barycentric coordinates *of the owner top simplex*.
fn integrate_over_simplex<F>(
    g: &GeometricComplex,
    q: usize,
    i: usize,
    order: usize,
    mut eval: F,
) -> Vec<Complex64>
where
    F: FnMut(usize, &[f64], &[f64]) -> Vec<FormValue>,
{
    let n = g.dim();
    let t = g.owner(q, i);
    let locals = g.local_vertex_positions(q, i, t);
    let geom = g.top(t);
    // Edge vectors of the q-simplex in the chart.
    let edges: Vec<Vec<f64>> = (1..=q)
        .map(|k| {
            (0..n)
                .map(|d| geom.chart_coords[(locals[k], d)] - geom.chart_coords[(locals[0], d)])
                .collect()
        })
        .collect();
    let axis_subsets = combinations(n, q);
    // det of edge components on each axis subset (contraction pattern)
    let dets: Vec<f64> = axis_subsets
        .iter()
        .map(|s| {
            if q == 0 {
                1.0
            } else {
                let mut m = DMatrix::zeros(q, q);
                for (r, &ax) in s.iter().enumerate() {
                    for c in 0..q {
                        m[(r, c)] = edges[c][ax];
                    }
                }
                m.determinant()
            }
        })
        .collect();
    let rule = simplex_quadrature(q, order);
    let mut acc: Option<Vec<Complex64>> = None;
    for (qbary, w) in &rule.nodes {
        // barycentric point of the q-simplex -> barycentric of the top
        let mut tbary = vec![0.0; n + 1];
        for (r, &l) in locals.iter().enumerate() {
            tbary[l] = qbary[r];
        }
        let x = g.chart_point(t, &tbary);
        let vals = eval(t, &x, &tbary);
        let acc = acc.get_or_insert_with(|| vec![Complex64::ZERO; vals.len()]);
        for (s, fv) in vals.iter().enumerate() {
            let contraction: Complex64 = fv
                .coeffs
                .iter()
                .zip(&dets)
                .map(|(c, &d)| c * d)
                .sum();
            acc[s] += contraction * *w;
        }
    }
    acc.unwrap_or_default()
}

/// The de Rham map: integration of a (possibly fiber-valued) smooth q-form
/// over each q-simplex. Degree 0 is vertex evaluation. `f` receives a chart
/// point and returns, per fiber component, the coefficient array of the
/// form on the lexicographic axis subsets (component-major layout).
pub fn de_rham<F>(
    g: &GeometricComplex,
    q: usize,
    fiber_dim: usize,
    f: F,
    order: usize,
) -> Cochain
where
    F: Fn(&[f64]) -> Vec<Complex64>,
{
    let k = g.complex();
    let ncoef = combinations(g.dim(), q).len();
    let mut c = Cochain {
        degree: q,
        fiber_dim,
        values: vec![Complex64::ZERO; k.len(q) * fiber_dim],
    };
    if q == 0 {
        for i in 0..k.len(0) {
            let t = g.owner(0, i);
            let v = k.simplex(0, i).vertices()[0];
            let x = g.vertex_chart_coords(v, t);
            let vals = f(&x);
            for s in 0..fiber_dim {
                c.values[i * fiber_dim + s] = vals[s * ncoef];
            }
        }
        return c;
    }
    for i in 0..k.len(q) {
        let vals = integrate_over_simplex(g, q, i, order, |_, x, _| {
            let raw = f(x);
            (0..fiber_dim)
                .map(|s| FormValue {
                    dim: g.dim(),
                    degree: q,
                    coeffs: raw[s * ncoef..(s + 1) * ncoef].to_vec(),
                })
                .collect()
        });
        for s in 0..fiber_dim {
            c.values[i * fiber_dim + s] = vals[s];
        }
    }
    c
}

/// Integrates W^K c over each q-simplex (R^K applied to a Whitney image),
/// exactly (the integrand is polynomial of degree <= 1 on each simplex).
pub fn de_rham_of_whitney(g: &GeometricComplex, c: &Cochain) -> Cochain {
    let k = g.complex();
    let q = c.degree;
    let nf = c.fiber_dim;
    let mut out = Cochain {
        degree: q,
        fiber_dim: nf,
        values: vec![Complex64::ZERO; k.len(q) * nf],
    };
    for i in 0..k.len(q) {
        let vals = integrate_over_simplex(g, q, i, 2, |t, _, tbary| {
            whitney_eval(g, c, t, tbary).expect("interior point")
        });
        for s in 0..nf {
            out.values[i * nf + s] = vals[s];
        }
    }
    out
}

/// R^K of a form that is only defined per top simplex (such as pointwise
/// products of Whitney forms). `eval` receives the owner top index, the
/// chart point, and the barycentric coordinates of that top simplex, and
/// returns one FormValue of degree q per fiber component.
pub fn de_rham_per_top<F>(
    g: &GeometricComplex,
    q: usize,
    fiber_dim: usize,
    order: usize,
    mut eval: F,
) -> Cochain
where
    F: FnMut(usize, &[f64], &[f64]) -> Vec<FormValue>,
{
    let k = g.complex();
    let mut out = Cochain {
        degree: q,
        fiber_dim,
        values: vec![Complex64::ZERO; k.len(q) * fiber_dim],
    };
    for i in 0..k.len(q) {
        let vals = integrate_over_simplex(g, q, i, order, &mut eval);
        for s in 0..fiber_dim {
            out.values[i * fiber_dim + s] = vals[s];
        }
    }
    out
}

/// Max defect of R^K W^K c - c over basis cochains (Prop: R W = id).
pub fn rw_identity_check(g: &GeometricComplex, q: usize) -> f64 {
    let k = g.complex();
    let mut max_defect: f64 = 0.0;
    for i in 0..k.len(q) {
        let mut c = Cochain::zeros(k, q, 1);
        c.values[i] = Complex64::new(1.0, 0.0);
        let rw = de_rham_of_whitney(g, &c);
        for (j, v) in rw.values.iter().enumerate() {
            let expect = if j == i { 1.0 } else { 0.0 };
            max_defect = max_defect.max((v - expect).norm());
        }
    }
    max_defect
}

/// Max defect of R^K(d W^K c) - d^K c over basis cochains (the integrated
/// form of W d^K = d W^K).
pub fn stokes_check(g: &GeometricComplex, q: usize) -> Result<f64> {
    let k = g.complex();
    if q >= k.dim() {
        return Err(Error::InvalidInput(
            "stokes check needs q < dimension".into(),
        ));
    }
    let d = k.coboundary_matrix(q)?;
    let mut max_defect: f64 = 0.0;
    for i in 0..k.len(q) {
        let mut c = Cochain::zeros(k, q, 1);
        c.values[i] = Complex64::new(1.0, 0.0);
        // d(W^K c) is piecewise constant: (q+1)! * wedge of all dmu over
        // each contributing face; evaluate via quadrature of the exact
        // derivative using whitney_eval of the coboundary... simpler:
        // integrate dW directly with the constant-form formula.
        for rho in 0..k.len(q + 1) {
            let vals = integrate_over_simplex(g, q + 1, rho, 2, |t, _, _| {
                vec![d_whitney(g, &c, t)]
            });
            let expect = d.get(rho, i).copied().unwrap_or(0.0);
            max_defect = max_defect.max((vals[0] - expect).norm());
        }
    }
    Ok(max_defect)
}

/// The (constant) exterior derivative of W^K c on top simplex `t`:
/// d W(sigma) = (q+1)! dmu_0 ^ ... ^ dmu_q.
pub fn d_whitney(g: &GeometricComplex, c: &Cochain, t: usize) -> FormValue {
    let n = g.dim();
    let q = c.degree;
    let geom = g.top(t);
    let axis_subsets = combinations(n, q + 1);
    let mut out = FormValue::zero(n, q + 1);
    for (gi, locals) in faces_of_top(g, t, q) {
        let coef = c.values[gi];
        if coef == Complex64::ZERO {
            continue;
        }
        for (si, subset) in axis_subsets.iter().enumerate() {
            let mut m = DMatrix::zeros(q + 1, q + 1);
            for (r, &l) in locals.iter().enumerate() {
                for (cx, &ax) in subset.iter().enumerate() {
                    m[(r, cx)] = geom.grads[(l, ax)];
                }
            }
            out.coeffs[si] += coef * factorial(q + 1) * m.determinant();
        }
    }
    out
}
