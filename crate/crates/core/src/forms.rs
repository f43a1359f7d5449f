//! Pointwise values of differential forms in chart coordinates, the wedge
//! product on such values, and quadrature rules on reference simplices.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Lexicographically ordered q-subsets of {0, .., dim-1}.
pub fn combinations(dim: usize, q: usize) -> Vec<Vec<usize>> {
    if q > dim {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, dim: usize, q: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == q {
            out.push(cur.clone());
            return;
        }
        for i in start..dim {
            cur.push(i);
            rec(i + 1, dim, q, cur, out);
            cur.pop();
        }
    }
    rec(0, dim, q, &mut cur, &mut out);
    out
}

/// The value of a degree-q form at a point: coefficients on dx_S for the
/// lexicographically ordered q-subsets S of the chart axes.
#[derive(Debug, Clone, PartialEq)]
pub struct FormValue {
    pub dim: usize,
    pub degree: usize,
    pub coeffs: Vec<Complex64>,
}

impl FormValue {
    pub fn zero(dim: usize, degree: usize) -> FormValue {
        let n = combinations(dim, degree).len();
        FormValue {
            dim,
            degree,
            coeffs: vec![Complex64::ZERO; n],
        }
    }

    pub fn scalar(dim: usize, value: Complex64) -> FormValue {
        FormValue {
            dim,
            degree: 0,
            coeffs: vec![value],
        }
    }

    pub fn scale(&self, s: Complex64) -> FormValue {
        FormValue {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &FormValue) {
        debug_assert_eq!(self.degree, other.degree);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
    }

    pub fn sub(&self, other: &FormValue) -> FormValue {
        debug_assert_eq!(self.degree, other.degree);
        FormValue {
            dim: self.dim,
            degree: self.degree,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Pointwise metric norm in an orthonormal chart: Euclidean norm of the
    /// coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Pointwise inner product <self, other> (conjugate-linear in `other`).
    pub fn inner(&self, other: &FormValue) -> Complex64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    /// Wedge product of two form values in the same chart.
    pub fn wedge(&self, other: &FormValue) -> Result<FormValue> {
        let (p, q, dim) = (self.degree, other.degree, self.dim);
        if p + q > dim {
            return Err(Error::InvalidInput(format!(
                "wedge degree overflow: {} + {} > {}",
                p, q, dim
            )));
        }
        let subs_p = combinations(dim, p);
        let subs_q = combinations(dim, q);
        let subs_r = combinations(dim, p + q);
        let index_of = |s: &[usize]| subs_r.iter().position(|t| t == s).unwrap();
        let mut out = FormValue::zero(dim, p + q);
        for (ia, sa) in subs_p.iter().enumerate() {
            if self.coeffs[ia] == Complex64::ZERO {
                continue;
            }
            'outer: for (ib, sb) in subs_q.iter().enumerate() {
                for v in sb {
                    if sa.contains(v) {
                        continue 'outer;
                    }
                }
                let (merged, sign) = merge_with_sign(sa, sb);
                out.coeffs[index_of(&merged)] +=
                    self.coeffs[ia] * other.coeffs[ib] * sign as f64;
            }
        }
        Ok(out)
    }
}

/// Merges two disjoint sorted index sets, returning the sorted union and the
/// sign of the shuffle permutation from (a, b) concatenated to sorted order.
fn merge_with_sign(a: &[usize], b: &[usize]) -> (Vec<usize>, i32) {
    let mut merged: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
    let mut sign = 1;
    for i in 1..merged.len() {
        let mut j = i;
        while j > 0 && merged[j - 1] > merged[j] {
            merged.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    (merged, sign)
}

/// Gauss-Legendre nodes and weights on [0, 1], weights summing to 1.
/// Computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre_01(points: usize) -> Vec<(f64, f64)> {
    let n = points;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // initial guess on [-1, 1]
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((1.0 - x) / 2.0, w / 2.0));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

/// Legendre polynomial P_n and derivative at x.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// A quadrature rule on the reference q-simplex, stored in barycentric
/// coordinates. Weights sum to 1/q! (the reference volume); the rule is
/// exact for polynomials of total degree <= `order`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub dim: usize,
    pub order: usize,
    /// (barycentric coordinates of length dim+1, reference weight)
    pub nodes: Vec<(Vec<f64>, f64)>,
}

/// Quadrature on the reference simplex of dimension `dim`, exact for
/// polynomials of total degree `order`. Built from tensor Gauss-Legendre
/// rules through the Duffy transform.
pub fn simplex_quadrature(dim: usize, order: usize) -> QuadratureRule {
    let nodes = match dim {
        0 => vec![(vec![1.0], 1.0)],
        1 => gauss_legendre_01(order / 2 + 1)
            .into_iter()
            .map(|(x, w)| (vec![1.0 - x, x], w))
            .collect(),
        2 => {
            // x = u, y = v (1 - u); Jacobian (1 - u). With p-point Gauss in
            // each direction the rule is exact for total degree 2p - 2.
            let p = order / 2 + 1;
            let g = gauss_legendre_01(p);
            let mut nodes = Vec::with_capacity(p * p);
            for &(u, wu) in &g {
                for &(v, wv) in &g {
                    let x = u;
                    let y = v * (1.0 - u);
                    nodes.push((vec![1.0 - x - y, x, y], wu * wv * (1.0 - u)));
                }
            }
            nodes
        }
        _ => {
            // Recursive Duffy for higher dimensions (not exercised by the
            // presets but kept total).
            let p = order / 2 + 1;
            let g = gauss_legendre_01(p);
            let lower = simplex_quadrature(dim - 1, order);
            let mut nodes = Vec::new();
            for &(u, wu) in &g {
                for (lb, lw) in &lower.nodes {
                    let mut bary = vec![0.0; dim + 1];
                    bary[dim] = u;
                    for (i, &l) in lb.iter().enumerate() {
                        bary[i] = l * (1.0 - u);
                    }
                    nodes.push((bary, wu * lw * (1.0 - u).powi(dim as i32 - 1)));
                }
            }
            nodes
        }
    };
    QuadratureRule { dim, order, nodes }
}
