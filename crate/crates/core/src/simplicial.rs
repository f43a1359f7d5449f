//! Oriented abstract simplicial complexes, canonical simplex ordering,
//! coboundary matrices and orientation bookkeeping.
//!
//! All cochain-level operators in this crate are expressed in the canonical
//! basis fixed here: each simplex is stored with strictly increasing vertex
//! ids and the simplex lists of every degree are sorted lexicographically.

use std::collections::{BTreeSet, HashMap};

use num_complex::Complex64;
use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};

/// A simplex in canonical form: strictly increasing vertex ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Simplex {
    vertices: Vec<usize>,
}

impl Simplex {
    /// Canonicalizes an arbitrary vertex sequence. Returns the sorted simplex
    /// together with the sign of the permutation taking the input order to
    /// the canonical order.
    pub fn from_vertices(vertices: &[usize]) -> Result<(Simplex, i32)> {
        if vertices.is_empty() {
            return Err(Error::InvalidInput("empty vertex sequence".into()));
        }
        let mut v = vertices.to_vec();
        let sign = sort_with_parity(&mut v);
        if v.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(format!(
                "duplicate vertex in simplex {:?}",
                vertices
            )));
        }
        Ok((Simplex { vertices: v }, sign))
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    /// The `i`-th face (omit vertex `i`); its incidence sign is `(-1)^i`.
    pub fn face(&self, i: usize) -> Simplex {
        let mut v = self.vertices.clone();
        v.remove(i);
        Simplex { vertices: v }
    }
}

/// Sorts in place, returning the parity (+1/-1) of the sorting permutation.
fn sort_with_parity(v: &mut [usize]) -> i32 {
    // Insertion sort with transposition count; simplex dimensions are tiny.
    let mut sign = 1;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    sign
}

/// Sign of the permutation taking `sequence` to the canonical order of
/// `simplex`. Errors unless the sequence is a permutation of its vertices.
pub fn relative_orientation(sequence: &[usize], simplex: &Simplex) -> Result<i32> {
    let (canon, sign) = Simplex::from_vertices(sequence)?;
    if canon != *simplex {
        return Err(Error::InvalidInput(format!(
            "{:?} is not a permutation of {:?}",
            sequence,
            simplex.vertices()
        )));
    }
    Ok(sign)
}

/// A finite oriented simplicial complex, closed under faces, with stable
/// canonical numbering of the simplices of every degree.
#[derive(Debug, Clone)]
pub struct SimplicialComplex {
    dim: usize,
    /// simplices[q] is sorted lexicographically and duplicate-free.
    simplices: Vec<Vec<Simplex>>,
    /// index[q] maps a canonical vertex list to its position in simplices[q].
    index: Vec<HashMap<Vec<usize>, usize>>,
    /// cofaces[q][i]: list of (index of (q+1)-coface, incidence sign).
    cofaces: Vec<Vec<Vec<(usize, i32)>>>,
}

/// Builds the face closure of a list of equi-dimensional top simplices.
///
/// Simplex numbering is a pure function of the input: identical input lists
/// produce identical indices.
pub fn build_complex(top_simplices: &[Vec<usize>]) -> Result<SimplicialComplex> {
    if top_simplices.is_empty() {
        return Err(Error::InvalidInput("no top simplices given".into()));
    }
    let n = top_simplices[0].len();
    if n == 0 {
        return Err(Error::InvalidInput("empty top simplex".into()));
    }
    for t in top_simplices {
        if t.len() != n {
            return Err(Error::InvalidInput(
                "top simplices must all have the same dimension".into(),
            ));
        }
    }
    let dim = n - 1;

    let mut sets: Vec<BTreeSet<Simplex>> = vec![BTreeSet::new(); dim + 1];
    for t in top_simplices {
        let (top, _) = Simplex::from_vertices(t)?;
        // Every subset of the vertex set is a face.
        let verts = top.vertices().to_vec();
        for mask in 1u32..(1 << verts.len()) {
            let sub: Vec<usize> = (0..verts.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| verts[i])
                .collect();
            sets[sub.len() - 1].insert(Simplex { vertices: sub });
        }
    }

    let simplices: Vec<Vec<Simplex>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
    let index: Vec<HashMap<Vec<usize>, usize>> = simplices
        .iter()
        .map(|list| {
            list.iter()
                .enumerate()
                .map(|(i, s)| (s.vertices().to_vec(), i))
                .collect()
        })
        .collect();

    let mut cofaces: Vec<Vec<Vec<(usize, i32)>>> = (0..=dim)
        .map(|q| vec![Vec::new(); simplices[q].len()])
        .collect();
    for q in 1..=dim {
        for (ti, tau) in simplices[q].iter().enumerate() {
            for i in 0..=q {
                let f = tau.face(i);
                let fi = index[q - 1][f.vertices()];
                let sign = if i % 2 == 0 { 1 } else { -1 };
                cofaces[q - 1][fi].push((ti, sign));
            }
        }
    }

    Ok(SimplicialComplex {
        dim,
        simplices,
        index,
        cofaces,
    })
}

impl SimplicialComplex {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of q-simplices.
    pub fn len(&self, q: usize) -> usize {
        self.simplices.get(q).map_or(0, |v| v.len())
    }

    pub fn simplices(&self, q: usize) -> &[Simplex] {
        &self.simplices[q]
    }

    pub fn simplex(&self, q: usize, i: usize) -> &Simplex {
        &self.simplices[q][i]
    }

    /// Canonical index of a simplex given by any vertex order; the sign is
    /// the relative orientation of the given order.
    pub fn index_of(&self, vertices: &[usize]) -> Option<(usize, i32)> {
        let (s, sign) = Simplex::from_vertices(vertices).ok()?;
        let q = s.dim();
        self.index
            .get(q)
            .and_then(|m| m.get(s.vertices()))
            .map(|&i| (i, sign))
    }

    pub fn contains(&self, s: &Simplex) -> bool {
        self.index
            .get(s.dim())
            .is_some_and(|m| m.contains_key(s.vertices()))
    }

    /// Cofaces of the `i`-th q-simplex with incidence signs.
    pub fn cofaces(&self, q: usize, i: usize) -> &[(usize, i32)] {
        &self.cofaces[q][i]
    }

    /// Indices of the top-simplex cofaces of the `i`-th q-simplex, ascending.
    pub fn top_cofaces(&self, q: usize, i: usize) -> Vec<usize> {
        if q == self.dim {
            return vec![i];
        }
        let mut cur = vec![i];
        for qq in q..self.dim {
            let mut next = BTreeSet::new();
            for &c in &cur {
                for &(t, _) in &self.cofaces[qq][c] {
                    next.insert(t);
                }
            }
            cur = next.into_iter().collect();
        }
        cur
    }

    /// The signed coboundary matrix C^q -> C^{q+1}. Rows are indexed by
    /// (q+1)-simplices; the entry for (tau, sigma) is the incidence sign of
    /// sigma as a face of tau.
    pub fn coboundary_matrix(&self, q: usize) -> Result<CsMat<f64>> {
        if q >= self.dim {
            return Err(Error::InvalidInput(format!(
                "coboundary degree {} out of range for dimension {}",
                q, self.dim
            )));
        }
        let mut tri = TriMat::new((self.len(q + 1), self.len(q)));
        for (ti, tau) in self.simplices[q + 1].iter().enumerate() {
            for i in 0..=(q + 1) {
                let f = tau.face(i);
                let fi = self.index[q][f.vertices()];
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                tri.add_triplet(ti, fi, sign);
            }
        }
        Ok(tri.to_csr())
    }

    /// Complex-valued coboundary, as used by the twisted operators.
    pub fn coboundary_matrix_c(&self, q: usize) -> Result<CsMat<Complex64>> {
        Ok(self
            .coboundary_matrix(q)?
            .map(|&x| Complex64::new(x, 0.0)))
    }

    /// All simplices containing `sigma`, together with all their faces.
    pub fn closed_star(&self, sigma: &Simplex) -> Result<Vec<Simplex>> {
        if !self.contains(sigma) {
            return Err(Error::InvalidInput(format!(
                "simplex {:?} not in complex",
                sigma.vertices()
            )));
        }
        let mut out = BTreeSet::new();
        for q in sigma.dim()..=self.dim {
            for s in &self.simplices[q] {
                let sv = s.vertices();
                if sigma.vertices().iter().all(|v| sv.contains(v)) {
                    // s contains sigma: add s and all its faces.
                    for mask in 1u32..(1 << sv.len()) {
                        let sub: Vec<usize> = (0..sv.len())
                            .filter(|i| mask & (1 << i) != 0)
                            .map(|i| sv[i])
                            .collect();
                        out.insert(Simplex { vertices: sub });
                    }
                }
            }
        }
        Ok(out.into_iter().collect())
    }
}

/// A complex-coefficient cochain indexed by the canonical q-simplices,
/// optionally fiber-valued. The value slot of simplex `i`, component `s`
/// is `values[i * fiber_dim + s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cochain {
    pub degree: usize,
    pub fiber_dim: usize,
    pub values: Vec<Complex64>,
}

impl Cochain {
    pub fn zeros(complex: &SimplicialComplex, degree: usize, fiber_dim: usize) -> Cochain {
        Cochain {
            degree,
            fiber_dim,
            values: vec![Complex64::new(0.0, 0.0); complex.len(degree) * fiber_dim],
        }
    }

    pub fn scalar(degree: usize, values: Vec<Complex64>) -> Cochain {
        Cochain {
            degree,
            fiber_dim: 1,
            values,
        }
    }

    pub fn num_simplices(&self) -> usize {
        self.values.len() / self.fiber_dim
    }

    /// Evaluation on an arbitrarily ordered simplex: the value picks up the
    /// relative orientation sign.
    pub fn eval(
        &self,
        complex: &SimplicialComplex,
        vertices: &[usize],
        component: usize,
    ) -> Result<Complex64> {
        let (i, sign) = complex
            .index_of(vertices)
            .ok_or_else(|| Error::InvalidInput(format!("simplex {:?} not in complex", vertices)))?;
        Ok(self.values[i * self.fiber_dim + component] * sign as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_triangle_closure() {
        let k = build_complex(&[vec![0, 1, 2]]).unwrap();
        assert_eq!(k.len(0), 3);
        assert_eq!(k.len(1), 3);
        assert_eq!(k.len(2), 1);
    }

    #[test]
    fn circle_complex_counts() {
        let k = build_complex(&[vec![0, 1], vec![1, 2], vec![2, 0]]).unwrap();
        assert_eq!(k.len(0), 3);
        assert_eq!(k.len(1), 3);
    }

    #[test]
    fn two_triangles_enumerated_by_hand() {
        // Face closure of [[0,1,2],[0,2,3]]: vertices {0,1,2,3}, edges
        // {01,02,12,03,23}, triangles {012,023}.
        let k = build_complex(&[vec![0, 1, 2], vec![0, 2, 3]]).unwrap();
        assert_eq!(k.len(0), 4);
        assert_eq!(k.len(1), 5);
        assert_eq!(k.len(2), 2);
        let edges: Vec<_> = k.simplices(1).iter().map(|s| s.vertices().to_vec()).collect();
        assert_eq!(
            edges,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![2, 3]]
        );
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(build_complex(&[]).is_err());
        assert!(build_complex(&[vec![0, 0, 1]]).is_err());
    }

    #[test]
    fn circle_incidence_rows() {
        let k = build_complex(&[vec![0, 1], vec![1, 2], vec![2, 0]]).unwrap();
        let d0 = k.coboundary_matrix(0).unwrap();
        for row in d0.outer_iterator() {
            let vals: Vec<f64> = row.iter().map(|(_, &v)| v).collect();
            let mut sorted = vals.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(sorted, vec![-1.0, 1.0]);
        }
    }

    #[test]
    fn triangle_coboundary_row_alternating_signs() {
        let k = build_complex(&[vec![0, 1, 2]]).unwrap();
        let d1 = k.coboundary_matrix(1).unwrap();
        // Row for [0,1,2]: +1 on [1,2], -1 on [0,2], +1 on [0,1].
        let get = |verts: &[usize]| {
            let (i, _) = k.index_of(verts).unwrap();
            *d1.get(0, i).unwrap()
        };
        assert_eq!(get(&[1, 2]), 1.0);
        assert_eq!(get(&[0, 2]), -1.0);
        assert_eq!(get(&[0, 1]), 1.0);
    }

    #[test]
    fn dd_zero_exactly() {
        for tops in [
            vec![vec![0, 1, 2]],
            vec![vec![0, 1, 2], vec![0, 2, 3], vec![1, 2, 3]],
        ] {
            let k = build_complex(&tops).unwrap();
            let d0 = k.coboundary_matrix(0).unwrap();
            let d1 = k.coboundary_matrix(1).unwrap();
            let dd = &d1 * &d0;
            assert!(dd.iter().all(|(&v, _)| v == 0.0));
        }
    }

    #[test]
    fn coboundary_out_of_range() {
        let k = build_complex(&[vec![0, 1, 2]]).unwrap();
        assert!(k.coboundary_matrix(2).is_err());
    }

    #[test]
    fn closed_star_path_graph() {
        let k = build_complex(&[vec![0, 1], vec![1, 2]]).unwrap();
        let (v1, _) = Simplex::from_vertices(&[1]).unwrap();
        let star = k.closed_star(&v1).unwrap();
        let verts: Vec<Vec<usize>> = star.iter().map(|s| s.vertices().to_vec()).collect();
        assert_eq!(
            verts,
            vec![vec![0], vec![0, 1], vec![1], vec![1, 2], vec![2]]
        );
    }

    #[test]
    fn closed_star_of_top_simplex_is_its_faces() {
        let k = build_complex(&[vec![0, 1, 2], vec![0, 2, 3]]).unwrap();
        let (t, _) = Simplex::from_vertices(&[0, 1, 2]).unwrap();
        let star = k.closed_star(&t).unwrap();
        assert_eq!(star.len(), 7); // 3 vertices + 3 edges + 1 triangle
    }

    #[test]
    fn closed_star_vertex_whole_complex() {
        let k = build_complex(&[vec![0, 1, 2], vec![0, 2, 3]]).unwrap();
        let (v0, _) = Simplex::from_vertices(&[0]).unwrap();
        let star = k.closed_star(&v0).unwrap();
        assert_eq!(star.len(), 4 + 5 + 2);
    }

    #[test]
    fn closed_star_missing_simplex_errors() {
        let k = build_complex(&[vec![0, 1]]).unwrap();
        let (s, _) = Simplex::from_vertices(&[5]).unwrap();
        assert!(k.closed_star(&s).is_err());
    }

    #[test]
    fn relative_orientation_cases() {
        let (s, _) = Simplex::from_vertices(&[0, 1]).unwrap();
        assert_eq!(relative_orientation(&[1, 0], &s).unwrap(), -1);
        let (t, _) = Simplex::from_vertices(&[0, 1, 2]).unwrap();
        assert_eq!(relative_orientation(&[0, 1, 2], &t).unwrap(), 1);
        assert_eq!(relative_orientation(&[2, 0, 1], &t).unwrap(), 1);
        assert!(relative_orientation(&[0, 1, 3], &t).is_err());
    }

    #[test]
    fn deterministic_numbering() {
        let tops = vec![vec![3, 1, 0], vec![2, 0, 3]];
        let a = build_complex(&tops).unwrap();
        let b = build_complex(&tops).unwrap();
        for q in 0..=a.dim() {
            assert_eq!(a.simplices(q), b.simplices(q));
        }
    }

    #[test]
    fn cochain_orientation_contract() {
        let k = build_complex(&[vec![0, 1, 2]]).unwrap();
        let mut c = Cochain::zeros(&k, 1, 1);
        let (i, _) = k.index_of(&[0, 1]).unwrap();
        c.values[i] = Complex64::new(2.0, 0.0);
        assert_eq!(c.eval(&k, &[0, 1], 0).unwrap(), Complex64::new(2.0, 0.0));
        assert_eq!(c.eval(&k, &[1, 0], 0).unwrap(), Complex64::new(-2.0, 0.0));
    }
}
