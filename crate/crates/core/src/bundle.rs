//! Discretization of connection Laplacians on Hermitian vector bundles via
//! isometric embeddings into trivial bundles.
//!
//! A bundle is presented by a finite chart cover: per chart a partition
//! function psi_l (with sum psi_l^2 = 1) and a pointwise isometric frame
//! i_l into C^{m_l}. The embedding i = sum_l psi_l i_l into C^m
//! (m = sum m_l) turns the connection into nabla = i^* d i, and its
//! cochain-level counterpart is built from vertex averages:
//!
//!   (I c)_sigma = sum_l [avg_sigma psi_l] [avg_sigma i_l] c_sigma,
//!   nabla^K = I_1^H (d^K (x) Id_m) I_0,
//!
//! paired with the weighted mass matrices M~_q = I^H G_P I, where G_P is
//! the Whitney Gram matrix weighted pointwise by the projector P = i i^H.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forms::simplex_quadrature;
use crate::geometry::{factorial, GeometricComplex};
use crate::laplacian::OperatorPencil;
use crate::whitney::{de_rham, faces_of_top, whitney_basis};

/// One chart of the cover: a partition-of-unity factor and a frame map into
/// C^{ambient_dim}, both functions of the canonical (fundamental-domain)
/// chart coordinates. The frame must be defined wherever psi is nonzero on
/// the closed star of its support.
pub struct BundleChart {
    pub ambient_dim: usize,
    pub psi: Box<dyn Fn(&[f64]) -> f64>,
    /// ambient_dim x rank pointwise isometry.
    pub frame: Box<dyn Fn(&[f64]) -> DMatrix<Complex64>>,
}

/// A rank-r Hermitian bundle presented by an embedding into the trivial
/// C^m bundle.
pub struct EmbeddedBundle {
    pub rank: usize,
    pub charts: Vec<BundleChart>,
    /// Maps (possibly lifted) chart coordinates of the base presets to the
    /// canonical fundamental domain, so frames are single-valued.
    pub canonical: Box<dyn Fn(&[f64]) -> Vec<f64>>,
}

impl EmbeddedBundle {
    pub fn ambient_dim(&self) -> usize {
        self.charts.iter().map(|c| c.ambient_dim).sum()
    }

    /// The m x r embedding matrix i(x); accepts lifted coordinates.
    pub fn embed_at(&self, x: &[f64]) -> DMatrix<Complex64> {
        let xc = (self.canonical)(x);
        let m = self.ambient_dim();
        let mut out = DMatrix::zeros(m, self.rank);
        let mut row = 0;
        for chart in &self.charts {
            let p = (chart.psi)(&xc);
            if p != 0.0 {
                let f = (chart.frame)(&xc);
                for i in 0..chart.ambient_dim {
                    for j in 0..self.rank {
                        out[(row + i, j)] = f[(i, j)] * p;
                    }
                }
            }
            row += chart.ambient_dim;
        }
        out
    }

    /// The m x m projector P(x) = i(x) i(x)^H.
    pub fn projector_at(&self, x: &[f64]) -> DMatrix<Complex64> {
        let i = self.embed_at(x);
        &i * i.adjoint()
    }
}

/// Canonical coordinates of a vertex, read from its owner top chart.
fn vertex_canonical(g: &GeometricComplex, bundle: &EmbeddedBundle, v: usize) -> Vec<f64> {
    let k = g.complex();
    let (vi, _) = k.index_of(&[v]).expect("vertex in complex");
    let t = g.owner(0, vi);
    (bundle.canonical)(&g.vertex_chart_coords(v, t))
}

/// Per-simplex block of the cochain embedding I on degree q: the sum over
/// charts of (vertex average of psi_l) times (entrywise vertex average of
/// the frame), an m x r matrix.
pub fn embedding_block(
    g: &GeometricComplex,
    bundle: &EmbeddedBundle,
    q: usize,
    sigma: usize,
) -> DMatrix<Complex64> {
    let k = g.complex();
    let verts = k.simplex(q, sigma).vertices().to_vec();
    let coords: Vec<Vec<f64>> = verts
        .iter()
        .map(|&v| vertex_canonical(g, bundle, v))
        .collect();
    let m = bundle.ambient_dim();
    let mut out = DMatrix::zeros(m, bundle.rank);
    let nv = verts.len() as f64;
    let mut row = 0;
    for chart in &bundle.charts {
        let psi_avg: f64 = coords.iter().map(|x| (chart.psi)(x)).sum::<f64>() / nv;
        if psi_avg != 0.0 {
            let mut favg = DMatrix::zeros(chart.ambient_dim, bundle.rank);
            for x in &coords {
                favg += (chart.frame)(x);
            }
            favg /= Complex64::new(nv, 0.0);
            for i in 0..chart.ambient_dim {
                for j in 0..bundle.rank {
                    out[(row + i, j)] = favg[(i, j)] * psi_avg;
                }
            }
        }
        row += chart.ambient_dim;
    }
    out
}

/// Block-diagonal embedding matrix I_q: (len(q) * m) x (len(q) * r).
pub fn big_i(g: &GeometricComplex, bundle: &EmbeddedBundle, q: usize) -> DMatrix<Complex64> {
    let k = g.complex();
    let (m, r) = (bundle.ambient_dim(), bundle.rank);
    let mut out = DMatrix::zeros(k.len(q) * m, k.len(q) * r);
    for sigma in 0..k.len(q) {
        let b = embedding_block(g, bundle, q, sigma);
        for i in 0..m {
            for j in 0..r {
                out[(sigma * m + i, sigma * r + j)] = b[(i, j)];
            }
        }
    }
    out
}

/// Whitney Gram matrix on V-valued q-cochains weighted pointwise by the
/// projector P = i i^H:
/// G[(tau, t), (sigma, s)] = int P_ts(x) <W sigma, W tau>(x) dvol.
pub fn projector_weighted_gram(
    g: &GeometricComplex,
    bundle: &EmbeddedBundle,
    q: usize,
    order: usize,
) -> DMatrix<Complex64> {
    let k = g.complex();
    let n = g.dim();
    let m = bundle.ambient_dim();
    let rule = simplex_quadrature(n, order);
    let mut out = DMatrix::zeros(k.len(q) * m, k.len(q) * m);
    for t in 0..g.num_tops() {
        let vol_scale = g.top(t).volume * factorial(n);
        let faces = faces_of_top(g, t, q);
        for (bary, w) in &rule.nodes {
            let x = g.chart_point(t, bary);
            let p = bundle.projector_at(&x);
            let weight = w * vol_scale;
            let basis: Vec<_> = faces
                .iter()
                .map(|(_, locals)| whitney_basis(g, t, locals, bary))
                .collect();
            for (ai, (ga, _)) in faces.iter().enumerate() {
                for (bi, (gb, _)) in faces.iter().enumerate() {
                    // <W sigma_b, W tau_a> in the orthonormal chart
                    let pair = basis[bi].inner(&basis[ai]).re;
                    if pair == 0.0 {
                        continue;
                    }
                    for tc in 0..m {
                        for sc in 0..m {
                            out[(ga * m + tc, gb * m + sc)] +=
                                p[(tc, sc)] * pair * weight;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Weighted mass matrix M~_q = I_q^H G_P I_q on E-valued q-cochains.
pub fn weighted_mass(
    g: &GeometricComplex,
    bundle: &EmbeddedBundle,
    q: usize,
    order: usize,
) -> DMatrix<Complex64> {
    let i = big_i(g, bundle, q);
    let gp = projector_weighted_gram(g, bundle, q, order);
    let m = i.adjoint() * gp * &i;
    let mt = m.adjoint();
    (m + mt).scale(0.5)
}

/// The degree-0 connection pencil: S = (nabla^K)^H M~_1 nabla^K with
/// nabla^K = I_1^H (d^K (x) Id_m) I_0, paired with M~_0.
pub fn connection_pencil(
    g: &GeometricComplex,
    bundle: &EmbeddedBundle,
    order: usize,
) -> Result<OperatorPencil> {
    let k = g.complex();
    let m = bundle.ambient_dim();
    let i0 = big_i(g, bundle, 0);
    let i1 = big_i(g, bundle, 1);
    let d = crate::whitney::kron_identity(&k.coboundary_matrix_c(0)?, m);
    let mut dmat = DMatrix::zeros(k.len(1) * m, k.len(0) * m);
    for (row, vec) in d.outer_iterator().enumerate() {
        for (col, &v) in vec.iter() {
            dmat[(row, col)] = v;
        }
    }
    let nabla = i1.adjoint() * dmat * i0;
    let m1 = weighted_mass(g, bundle, 1, order);
    let m0 = weighted_mass(g, bundle, 0, order);
    let s = nabla.adjoint() * m1 * &nabla;
    let st = s.adjoint();
    Ok(OperatorPencil {
        degree: 0,
        stiffness: (s + st).scale(0.5),
        mass: m0,
        description: "connection Laplacian, degree 0".into(),
    })
}

/// Smallest eigenvalue of the weighted mass matrix M~_q: positivity is the
/// injectivity of the twisted Whitney map on degree-q cochains.
pub fn injectivity_margin(
    g: &GeometricComplex,
    bundle: &EmbeddedBundle,
    q: usize,
    order: usize,
) -> Result<f64> {
    let m = weighted_mass(g, bundle, q, order);
    let sym = (&m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::MassDegenerate(format!(
            "weighted mass matrix degree {} has min eigenvalue {:.3e}",
            q, min
        )));
    }
    Ok(min)
}

/// Max deviation of P^K = I I^H from being a projection in degree q:
/// the largest |mu^2 - mu| over eigenvalues mu of the per-simplex blocks.
/// Exact zero in degree 0, O(h^2) in higher degrees.
pub fn almost_projection_defect(
    g: &GeometricComplex,
    bundle: &EmbeddedBundle,
    q: usize,
) -> f64 {
    let k = g.complex();
    let mut defect: f64 = 0.0;
    for sigma in 0..k.len(q) {
        let b = embedding_block(g, bundle, q, sigma);
        let pk = &b * b.adjoint();
        let sym = (&pk + pk.adjoint()).scale(0.5);
        let eig = sym.symmetric_eigen();
        for mu in eig.eigenvalues.iter() {
            defect = defect.max((mu * mu - mu).abs());
        }
    }
    defect
}

/// Max componentwise defect of P^K R^K f - R^K (P f) for a smooth V-valued
/// q-form f (coefficients in component-major layout at canonical
/// coordinates). Exact in degree 0, where R^K is vertex evaluation.
pub fn projection_commutation_defect<F>(
    g: &GeometricComplex,
    bundle: &EmbeddedBundle,
    q: usize,
    f: F,
    order: usize,
) -> f64
where
    F: Fn(&[f64]) -> Vec<Complex64>,
{
    let k = g.complex();
    let m = bundle.ambient_dim();
    let canon = &bundle.canonical;
    let rf = de_rham(g, q, m, |x| f(&canon(x)), order);
    let ncoef = crate::forms::combinations(g.dim(), q).len();
    let rpf = de_rham(
        g,
        q,
        m,
        |x| {
            let xc = canon(x);
            let p = bundle.projector_at(&xc);
            let raw = f(&xc);
            // apply P to the fiber index for every form coefficient
            let mut out = vec![Complex64::ZERO; m * ncoef];
            for c in 0..ncoef {
                for i in 0..m {
                    for j in 0..m {
                        out[i * ncoef + c] += p[(i, j)] * raw[j * ncoef + c];
                    }
                }
            }
            out
        },
        order,
    );
    let mut defect: f64 = 0.0;
    for sigma in 0..k.len(q) {
        let b = embedding_block(g, bundle, q, sigma);
        let pk = &b * b.adjoint();
        for i in 0..m {
            let mut lhs = Complex64::ZERO;
            for j in 0..m {
                lhs += pk[(i, j)] * rf.values[sigma * m + j];
            }
            defect = defect.max((lhs - rpf.values[sigma * m + i]).norm());
        }
    }
    defect
}

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn wrap_circle(x: &[f64]) -> Vec<f64> {
    let mut t = x[0] % TWO_PI;
    if t < 0.0 {
        t += TWO_PI;
    }
    // lifted endpoint 2*pi maps to 0 up to roundoff
    if (t - TWO_PI).abs() < 1e-12 {
        t = 0.0;
    }
    vec![t]
}

/// C^1 smoothstep on [0, 1].
fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// The flat Hermitian line bundle over the circle preset with holonomy
/// e^{i theta_hol}, presented by two arc charts. Chart 1 covers
/// [0, 3 pi / 2], chart 2 covers [pi, 5 pi / 2] (wrapping through 0); the
/// frames differ by the constant transition e^{i theta_hol} on the second
/// overlap, and the squared partition functions interpolate by a C^1
/// smoothstep on the overlaps.
pub fn flat_line_bundle_circle(theta_hol: f64) -> EmbeddedBundle {
    let alpha = theta_hol / TWO_PI;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let pi = std::f64::consts::PI;
    // angle profile: psi1 = sin(w), psi2 = cos(w) on [0, pi/2];
    // psi1 = cos(v), psi2 = sin(v) on [pi, 3 pi / 2]
    let psi1 = move |x: &[f64]| -> f64 {
        let t = x[0];
        if t < half_pi {
            (half_pi * smoothstep(t / half_pi)).sin()
        } else if t <= pi {
            1.0
        } else if t < 1.5 * pi {
            (half_pi * smoothstep((t - pi) / half_pi)).cos()
        } else {
            0.0
        }
    };
    let psi2 = move |x: &[f64]| -> f64 {
        let t = x[0];
        if t < half_pi {
            (half_pi * smoothstep(t / half_pi)).cos()
        } else if t <= pi {
            0.0
        } else if t < 1.5 * pi {
            (half_pi * smoothstep((t - pi) / half_pi)).sin()
        } else {
            1.0
        }
    };
    let frame1 = move |x: &[f64]| -> DMatrix<Complex64> {
        DMatrix::from_element(1, 1, Complex64::new(0.0, alpha * x[0]).exp())
    };
    let frame2 = move |x: &[f64]| -> DMatrix<Complex64> {
        // branch [pi, 5 pi / 2]: lift angles below pi by a full turn
        let t = if x[0] < pi { x[0] + TWO_PI } else { x[0] };
        DMatrix::from_element(1, 1, Complex64::new(0.0, alpha * t).exp())
    };
    EmbeddedBundle {
        rank: 1,
        charts: vec![
            BundleChart {
                ambient_dim: 1,
                psi: Box::new(psi1),
                frame: Box::new(frame1),
            },
            BundleChart {
                ambient_dim: 1,
                psi: Box::new(psi2),
                frame: Box::new(frame2),
            },
        ],
        canonical: Box::new(wrap_circle),
    }
}

/// A trivial line bundle over the circle presented by a single global
/// chart with unit-modulus frame e^{i phase(theta)}. The induced connection
/// form is phase'(theta) d theta; used to cross-check the bundle pipeline
/// against the twisted-coboundary pipeline.
pub fn gauged_trivial_circle_bundle<F>(phase: F) -> EmbeddedBundle
where
    F: Fn(f64) -> f64 + 'static,
{
    EmbeddedBundle {
        rank: 1,
        charts: vec![BundleChart {
            ambient_dim: 1,
            psi: Box::new(|_| 1.0),
            frame: Box::new(move |x| {
                DMatrix::from_element(1, 1, Complex64::new(0.0, phase(x[0])).exp())
            }),
        }],
        canonical: Box::new(wrap_circle),
    }
}
