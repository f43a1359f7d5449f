//! Piecewise-flat metric realization of simplicial complexes, preset
//! refinement families for the flat circle and torus, and mesh reporting.
//!
//! Every top simplex owns one affine chart copy; smooth fields (connection
//! forms, frames, partitions of unity) are evaluated as functions of the
//! chart coordinates and must be periodic where the preset wraps.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::simplicial::{build_complex, SimplicialComplex};

const VOLUME_TOL: f64 = 1e-14;

/// Per-top-simplex metric data. Rows follow the canonical (sorted) vertex
/// order of the simplex.
#[derive(Debug, Clone)]
pub struct TopGeometry {
    /// (N+1) x N chart coordinates of the vertices.
    pub chart_coords: DMatrix<f64>,
    /// (N+1) x N barycentric gradients, row i = grad mu_i (constant on the
    /// simplex).
    pub grads: DMatrix<f64>,
    /// (N+1) x (N+1) Gram matrix G^{ij} = <grad mu_i, grad mu_j>.
    pub gram: DMatrix<f64>,
    pub volume: f64,
    pub diameter: f64,
}

/// A simplicial complex together with a piecewise-flat metric.
#[derive(Debug, Clone)]
pub struct GeometricComplex {
    complex: SimplicialComplex,
    tops: Vec<TopGeometry>,
    /// Length of each edge, indexed by canonical edge index.
    edge_lengths: Vec<f64>,
    /// owners[q][i]: lowest-index top-simplex coface of the i-th q-simplex.
    owners: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshReport {
    /// Maximum simplex diameter.
    pub h: f64,
    /// Minimum of vol / diam^N over top simplices.
    pub min_fullness: f64,
    /// Simplex counts per degree.
    pub counts: Vec<usize>,
}

fn top_geometry_from_coords(coords: DMatrix<f64>) -> Result<TopGeometry> {
    let n = coords.ncols();
    let nv = coords.nrows();
    debug_assert_eq!(nv, n + 1);
    // Edge-vector matrix: column k = x_{k+1} - x_0.
    let mut e = DMatrix::zeros(n, n);
    for k in 0..n {
        for d in 0..n {
            e[(d, k)] = coords[(k + 1, d)] - coords[(0, d)];
        }
    }
    let det = e.determinant();
    let volume = det.abs() / factorial(n);
    if volume <= VOLUME_TOL {
        return Err(Error::DegenerateMetric(format!(
            "simplex volume {:.3e} below tolerance",
            volume
        )));
    }
    let e_inv = e
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateMetric("singular edge-vector matrix".into()))?;
    // grad mu_{k+1} = row k of E^{-1}; grad mu_0 = -sum of the others.
    let mut grads = DMatrix::zeros(n + 1, n);
    for k in 0..n {
        for d in 0..n {
            grads[(k + 1, d)] = e_inv[(k, d)];
            grads[(0, d)] -= e_inv[(k, d)];
        }
    }
    let gram = &grads * grads.transpose();
    let mut diameter: f64 = 0.0;
    for i in 0..nv {
        for j in (i + 1)..nv {
            let d2: f64 = (0..n)
                .map(|d| (coords[(i, d)] - coords[(j, d)]).powi(2))
                .sum();
            diameter = diameter.max(d2.sqrt());
        }
    }
    Ok(TopGeometry {
        chart_coords: coords,
        grads,
        gram,
        volume,
        diameter,
    })
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn compute_owners(complex: &SimplicialComplex) -> Vec<Vec<usize>> {
    (0..=complex.dim())
        .map(|q| {
            (0..complex.len(q))
                .map(|i| complex.top_cofaces(q, i)[0])
                .collect()
        })
        .collect()
}

/// Realizes a complex from intrinsic edge lengths. Volumes come from the
/// Gram matrices of edge vectors (equivalent to the Cayley-Menger form);
/// each top simplex is laid out isometrically in its own chart via Cholesky.
pub fn realize(
    complex: SimplicialComplex,
    edge_lengths: &HashMap<(usize, usize), f64>,
) -> Result<GeometricComplex> {
    let n = complex.dim();
    let length = |u: usize, v: usize| -> Result<f64> {
        let key = if u < v { (u, v) } else { (v, u) };
        edge_lengths
            .get(&key)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("missing edge length for {:?}", key)))
    };
    let mut tops = Vec::with_capacity(complex.len(n));
    for t in complex.simplices(n) {
        let vs = t.vertices();
        // Gram of edge vectors x_k - x_0 from the law of cosines.
        let mut b = DMatrix::zeros(n, n);
        for k in 1..=n {
            for l in 1..=n {
                let d0k = length(vs[0], vs[k])?;
                let d0l = length(vs[0], vs[l])?;
                let dkl = if k == l { 0.0 } else { length(vs[k], vs[l])? };
                b[(k - 1, l - 1)] = 0.5 * (d0k * d0k + d0l * d0l - dkl * dkl);
            }
        }
        let chol = b.clone().cholesky().ok_or_else(|| {
            Error::DegenerateMetric(format!(
                "edge lengths of simplex {:?} violate non-degeneracy",
                vs
            ))
        })?;
        let l = chol.l();
        let mut coords = DMatrix::zeros(n + 1, n);
        for k in 1..=n {
            for d in 0..n {
                coords[(k, d)] = l[(k - 1, d)];
            }
        }
        tops.push(top_geometry_from_coords(coords)?);
    }
    finish(complex, tops)
}

/// Builds a geometric complex from explicit per-top-simplex chart
/// coordinates (rows in canonical vertex order).
pub fn from_charts(
    complex: SimplicialComplex,
    charts: Vec<DMatrix<f64>>,
) -> Result<GeometricComplex> {
    if charts.len() != complex.len(complex.dim()) {
        return Err(Error::InvalidInput(
            "one chart per top simplex required".into(),
        ));
    }
    let tops = charts
        .into_iter()
        .map(top_geometry_from_coords)
        .collect::<Result<Vec<_>>>()?;
    finish(complex, tops)
}

fn finish(complex: SimplicialComplex, tops: Vec<TopGeometry>) -> Result<GeometricComplex> {
    let owners = compute_owners(&complex);
    let mut edge_lengths = vec![0.0; complex.len(1)];
    for (ei, lens) in edge_lengths.iter_mut().enumerate() {
        let t = owners[1][ei];
        let geom = &tops[t];
        let tv = complex.simplex(complex.dim(), t).vertices();
        let ev = complex.simplex(1, ei).vertices();
        let li: Vec<usize> = ev
            .iter()
            .map(|v| tv.iter().position(|w| w == v).unwrap())
            .collect();
        let d2: f64 = (0..complex.dim())
            .map(|d| (geom.chart_coords[(li[0], d)] - geom.chart_coords[(li[1], d)]).powi(2))
            .sum();
        *lens = d2.sqrt();
    }
    Ok(GeometricComplex {
        complex,
        tops,
        edge_lengths,
        owners,
    })
}

impl GeometricComplex {
    pub fn complex(&self) -> &SimplicialComplex {
        &self.complex
    }

    pub fn dim(&self) -> usize {
        self.complex.dim()
    }

    pub fn top(&self, t: usize) -> &TopGeometry {
        &self.tops[t]
    }

    pub fn num_tops(&self) -> usize {
        self.tops.len()
    }

    pub fn edge_length(&self, edge_index: usize) -> f64 {
        self.edge_lengths[edge_index]
    }

    /// Lowest-index top coface of the i-th q-simplex (the deterministic
    /// owner used for chart evaluation).
    pub fn owner(&self, q: usize, i: usize) -> usize {
        self.owners[q][i]
    }

    /// Chart coordinates of a point given in barycentric coordinates of a
    /// top simplex.
    pub fn chart_point(&self, t: usize, bary: &[f64]) -> Vec<f64> {
        let geom = &self.tops[t];
        let n = self.dim();
        let mut x = vec![0.0; n];
        for (i, &lam) in bary.iter().enumerate() {
            for d in 0..n {
                x[d] += lam * geom.chart_coords[(i, d)];
            }
        }
        x
    }

    /// Local positions (within the canonical vertex list of top simplex `t`)
    /// of the vertices of the i-th q-simplex. The q-simplex must be a face
    /// of `t`.
    pub fn local_vertex_positions(&self, q: usize, i: usize, t: usize) -> Vec<usize> {
        let tv = self.complex.simplex(self.dim(), t).vertices();
        self.complex
            .simplex(q, i)
            .vertices()
            .iter()
            .map(|v| tv.iter().position(|w| w == v).expect("face of top simplex"))
            .collect()
    }

    /// Chart coordinates of a vertex as seen from top simplex `t`.
    pub fn vertex_chart_coords(&self, vertex_id: usize, t: usize) -> Vec<f64> {
        let tv = self.complex.simplex(self.dim(), t).vertices();
        let p = tv
            .iter()
            .position(|&w| w == vertex_id)
            .expect("vertex of top simplex");
        (0..self.dim())
            .map(|d| self.tops[t].chart_coords[(p, d)])
            .collect()
    }

    pub fn mesh_report(&self) -> MeshReport {
        let n = self.dim();
        let mut h: f64 = 0.0;
        let mut min_fullness = f64::INFINITY;
        for geom in &self.tops {
            h = h.max(geom.diameter);
            min_fullness = min_fullness.min(geom.volume / geom.diameter.powi(n as i32));
        }
        MeshReport {
            h,
            min_fullness,
            counts: (0..=n).map(|q| self.complex.len(q)).collect(),
        }
    }

    pub fn total_volume(&self) -> f64 {
        self.tops.iter().map(|t| t.volume).sum()
    }
}

/// Uniform triangulation of the circle of circumference 2*pi on `n`
/// vertices. The chart coordinate is arc length theta in [0, 2*pi]; smooth
/// fields must be 2*pi-periodic. The edge [0, n-1] lifts vertex 0 to 2*pi.
pub fn preset_circle(n: usize) -> Result<GeometricComplex> {
    if n < 3 {
        return Err(Error::InvalidInput("circle preset needs n >= 3".into()));
    }
    let tops: Vec<Vec<usize>> = (0..n).map(|j| vec![j, (j + 1) % n]).collect();
    let complex = build_complex(&tops)?;
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let theta = |j: usize| j as f64 * h;
    let charts = complex
        .simplices(1)
        .iter()
        .map(|e| {
            let v = e.vertices();
            let (a, b) = if v[0] == 0 && v[1] == n - 1 {
                // wrapped edge: lift vertex 0 to 2*pi
                (2.0 * std::f64::consts::PI, theta(n - 1))
            } else {
                (theta(v[0]), theta(v[1]))
            };
            DMatrix::from_row_slice(2, 1, &[a, b])
        })
        .collect();
    from_charts(complex, charts)
}

/// Uniform triangulation of the unit flat torus R^2/Z^2: an n x n grid of
/// squares, each split along the same diagonal. Chart coordinates are planar
/// (x, y) in [0, 1]^2 with periodic wrap; each triangle is assigned the
/// lifted chart copy containing it. Smooth fields must be 1-periodic in
/// both coordinates.
pub fn preset_torus(n: usize) -> Result<GeometricComplex> {
    if n < 3 {
        return Err(Error::InvalidInput("torus preset needs n >= 3".into()));
    }
    let id = |i: usize, j: usize| (i % n) * n + (j % n);
    let step = 1.0 / n as f64;
    let mut tops = Vec::new();
    // Per top simplex: map vertex id -> lifted coordinates.
    let mut lifts: Vec<HashMap<usize, [f64; 2]>> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let corner = |di: usize, dj: usize| {
                (
                    id(i + di, j + dj),
                    [(i + di) as f64 * step, (j + dj) as f64 * step],
                )
            };
            let (a, ca) = corner(0, 0);
            let (b, cb) = corner(1, 0);
            let (c, cc) = corner(0, 1);
            let (d, cd) = corner(1, 1);
            tops.push(vec![a, b, d]);
            lifts.push(HashMap::from([(a, ca), (b, cb), (d, cd)]));
            tops.push(vec![a, d, c]);
            lifts.push(HashMap::from([(a, ca), (d, cd), (c, cc)]));
        }
    }
    let complex = build_complex(&tops)?;
    // build_complex sorts the top simplices; rebuild the chart list in the
    // canonical top ordering by matching vertex sets.
    let mut by_verts: HashMap<Vec<usize>, HashMap<usize, [f64; 2]>> = HashMap::new();
    for (t, lift) in tops.iter().zip(lifts) {
        let mut key = t.clone();
        key.sort_unstable();
        by_verts.insert(key, lift);
    }
    let charts = complex
        .simplices(2)
        .iter()
        .map(|s| {
            let lift = &by_verts[&s.vertices().to_vec()];
            let mut m = DMatrix::zeros(3, 2);
            for (r, v) in s.vertices().iter().enumerate() {
                let c = lift[v];
                m[(r, 0)] = c[0];
                m[(r, 1)] = c[1];
            }
            m
        })
        .collect();
    from_charts(complex, charts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn realize_single_edge() {
        let complex = build_complex(&[vec![0, 1]]).unwrap();
        let h = 0.7;
        let g = realize(complex, &HashMap::from([((0, 1), h)])).unwrap();
        let top = g.top(0);
        assert!((top.volume - h).abs() < 1e-14);
        let expected = [1.0 / (h * h), -1.0 / (h * h)];
        assert!((top.gram[(0, 0)] - expected[0]).abs() < 1e-12);
        assert!((top.gram[(0, 1)] - expected[1]).abs() < 1e-12);
        assert!((top.gram[(1, 1)] - expected[0]).abs() < 1e-12);
    }

    #[test]
    fn realize_equilateral_triangle() {
        let complex = build_complex(&[vec![0, 1, 2]]).unwrap();
        let lens = HashMap::from([((0, 1), 1.0), ((0, 2), 1.0), ((1, 2), 1.0)]);
        let g = realize(complex, &lens).unwrap();
        assert!((g.top(0).volume - 3f64.sqrt() / 4.0).abs() < 1e-14);
    }

    #[test]
    fn realize_right_triangle_gradients_brute_force() {
        // Place legs 1,1 in the plane: (0,0), (1,0), (0,1). Barycentric
        // gradients solved directly: mu_1 = x, mu_2 = y, mu_0 = 1 - x - y.
        let complex = build_complex(&[vec![0, 1, 2]]).unwrap();
        let lens = HashMap::from([
            ((0, 1), 1.0),
            ((0, 2), 1.0),
            ((1, 2), 2f64.sqrt()),
        ]);
        let g = realize(complex, &lens).unwrap();
        let top = g.top(0);
        assert!((top.volume - 0.5).abs() < 1e-14);
        // Gram is basis-independent: <grad mu_i, grad mu_j>.
        let expect = [
            [2.0, -1.0, -1.0],
            [-1.0, 1.0, 0.0],
            [-1.0, 0.0, 1.0],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (top.gram[(i, j)] - expect[i][j]).abs() < 1e-12,
                    "gram[{},{}] = {}",
                    i,
                    j,
                    top.gram[(i, j)]
                );
            }
        }
    }

    #[test]
    fn degenerate_edge_lengths_rejected() {
        let complex = build_complex(&[vec![0, 1, 2]]).unwrap();
        let lens = HashMap::from([((0, 1), 1.0), ((0, 2), 1.0), ((1, 2), 2.0)]);
        assert!(matches!(
            realize(complex, &lens),
            Err(Error::DegenerateMetric(_))
        ));
    }

    #[test]
    fn circle_preset_basics() {
        assert!(preset_circle(2).is_err());
        let g = preset_circle(3).unwrap();
        for e in 0..3 {
            assert!((g.edge_length(e) - 2.0 * PI / 3.0).abs() < 1e-14);
        }
        let g6 = preset_circle(6).unwrap();
        let r = g6.mesh_report();
        assert!((r.h - PI / 3.0).abs() < 1e-14);
        assert!((g6.total_volume() - 2.0 * PI).abs() < 1e-12);
        let g64 = preset_circle(64).unwrap();
        assert!((g64.mesh_report().h - 2.0 * PI / 64.0).abs() < 1e-14);
    }

    #[test]
    fn circle_fullness_is_one() {
        let r = preset_circle(8).unwrap().mesh_report();
        assert!((r.h - PI / 4.0).abs() < 1e-14);
        assert!((r.min_fullness - 1.0).abs() < 1e-14);
    }

    #[test]
    fn torus_preset_counts_and_area() {
        assert!(preset_torus(2).is_err());
        let g = preset_torus(3).unwrap();
        let r = g.mesh_report();
        assert_eq!(r.counts, vec![9, 27, 18]);
        // Euler characteristic of the torus.
        assert_eq!(9 + 18 - 27, 0);
        assert!((g.total_volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn torus_mesh_report() {
        let g = preset_torus(8).unwrap();
        let r = g.mesh_report();
        assert!((r.h - 2f64.sqrt() / 8.0).abs() < 1e-14);
        // vol / diam^2 = (h^2/2) / (2 h^2) = 1/4 for every triangle.
        assert!((r.min_fullness - 0.25).abs() < 1e-12);
        let r4 = preset_torus(4).unwrap().mesh_report();
        assert!((r4.min_fullness - r.min_fullness).abs() < 1e-12);
    }

    #[test]
    fn gradient_row_sums_vanish() {
        for g in [preset_circle(8).unwrap(), preset_torus(4).unwrap()] {
            for t in 0..g.num_tops() {
                let geom = g.top(t);
                for d in 0..g.dim() {
                    let s: f64 = (0..=g.dim()).map(|i| geom.grads[(i, d)]).sum();
                    assert!(s.abs() < 1e-12);
                }
                // Gram consistent with the law of cosines: check via
                // grads * coords identities instead; mu_i(x_j) = delta_ij
                // implies grads . (x_j - x_i) relations already used.
                assert!(geom.volume > 0.0);
            }
        }
    }

    #[test]
    fn preset_h_scales_exactly() {
        for n in [4usize, 8, 16] {
            let rc = preset_circle(n).unwrap().mesh_report();
            assert!((rc.h - 2.0 * PI / n as f64).abs() < 1e-13);
            let rt = preset_torus(n).unwrap().mesh_report();
            assert!((rt.h - 2f64.sqrt() / n as f64).abs() < 1e-13);
        }
    }
}
