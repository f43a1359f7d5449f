//! The graded-commutative non-associative cup product on simplicial
//! cochains, cup-multiplication operators, and the twisted coboundary.
//!
//! Two oriented simplices have a nonzero product only when they meet at
//! precisely one vertex and jointly span a simplex of the complex; the
//! coefficient is p! q! / (p+q+1)!. The sign convention: reorder the first
//! factor so the shared vertex is last, the second so it is first,
//! concatenate, and compare to the canonical order of the spanned simplex.
//! This is the unique convention (up to the global sign fixed by the
//! vertex-times-edge case) consistent with the Whitney-wedge identity
//! a cup b = R(Wa ^ Wb), which `wedge_consistency_check` enforces.

use num_complex::Complex64;
use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};
use crate::forms::combinations;
use crate::geometry::{factorial, GeometricComplex};
use crate::simplicial::{Cochain, SimplicialComplex};
use crate::whitney::{de_rham_per_top, whitney_eval};

/// The cup-multiplication operator c -> cup(a, c) for a fixed cochain `a`
/// of degree p, acting on degree-q cochains.
#[derive(Debug, Clone)]
pub struct CupOperator {
    pub base_degree: usize,
    pub source_degree: usize,
    pub matrix: CsMat<Complex64>,
}

/// Enumerates, for every (p+q)-simplex tau, the splittings into a p-simplex
/// and a q-simplex meeting at exactly one vertex, with the sign and
/// coefficient of the product. Calls `emit(tau, sigma1, sigma2, signed
/// coefficient)` with canonical indices.
fn for_each_cup_term<F>(k: &SimplicialComplex, p: usize, q: usize, mut emit: F) -> Result<()>
where
    F: FnMut(usize, usize, usize, f64),
{
    if p + q > k.dim() {
        return Err(Error::InvalidInput(format!(
            "cup degree overflow: {} + {} > {}",
            p,
            q,
            k.dim()
        )));
    }
    let coef = factorial(p) * factorial(q) / factorial(p + q + 1);
    let r = p + q;
    for (ti, tau) in k.simplices(r).iter().enumerate() {
        let tv = tau.vertices();
        // choose the shared vertex, then p of the remaining r vertices for
        // sigma1 (the rest go to sigma2)
        for shared in 0..=r {
            let rest: Vec<usize> = (0..=r).filter(|&i| i != shared).collect();
            for pick in combinations(r, p) {
                // sigma1 vertices: shared + rest[pick], sigma2: shared + others
                let s1_rest: Vec<usize> = pick.iter().map(|&x| rest[x]).collect();
                let s2_rest: Vec<usize> = rest
                    .iter()
                    .filter(|x| !s1_rest.contains(x))
                    .copied()
                    .collect();
                // Both pieces are sorted position lists; insert the shared
                // vertex in sorted position to obtain canonical orders.
                let canon = |mut positions: Vec<usize>| -> Vec<usize> {
                    positions.push(shared);
                    positions.sort_unstable();
                    positions
                };
                let s1 = canon(s1_rest.clone());
                let s2 = canon(s2_rest.clone());
                let s1_verts: Vec<usize> = s1.iter().map(|&i| tv[i]).collect();
                let s2_verts: Vec<usize> = s2.iter().map(|&i| tv[i]).collect();
                let Some((i1, _)) = k.index_of(&s1_verts) else {
                    continue;
                };
                let Some((i2, _)) = k.index_of(&s2_verts) else {
                    continue;
                };
                // sign s1: move the shared vertex to the end of sigma1
                let pos1 = s1.iter().position(|&x| x == shared).unwrap();
                let sg1 = if (p - pos1) % 2 == 0 { 1.0 } else { -1.0 };
                // sign s2: move the shared vertex to the front of sigma2
                let pos2 = s2.iter().position(|&x| x == shared).unwrap();
                let sg2 = if pos2 % 2 == 0 { 1.0 } else { -1.0 };
                // sign s3: parity of the concatenated sequence vs tau's
                // canonical order. The sequence is (sigma1 minus shared, in
                // order), shared, (sigma2 minus shared, in order), as
                // positions into tau's canonical vertex list.
                let mut seq: Vec<usize> = s1
                    .iter()
                    .filter(|&&x| x != shared)
                    .copied()
                    .collect();
                seq.push(shared);
                seq.extend(s2.iter().filter(|&&x| x != shared));
                let sg3 = permutation_parity(&seq);
                emit(ti, i1, i2, sg1 * sg2 * sg3 * coef);
            }
        }
    }
    Ok(())
}

/// Parity of a permutation of 0..n given as a position list.
fn permutation_parity(seq: &[usize]) -> f64 {
    let mut v = seq.to_vec();
    let mut sign = 1.0;
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

/// Cup product of two scalar cochains.
pub fn cup(k: &SimplicialComplex, c1: &Cochain, c2: &Cochain) -> Result<Cochain> {
    let (p, q) = (c1.degree, c2.degree);
    let mut out = Cochain::zeros(k, p + q, 1);
    for_each_cup_term(k, p, q, |tau, s1, s2, w| {
        out.values[tau] += c1.values[s1] * c2.values[s2] * w;
    })?;
    Ok(out)
}

/// Matrix of c -> cup(a, c) on degree-q cochains.
pub fn cup_operator(k: &SimplicialComplex, a: &Cochain, q: usize) -> Result<CupOperator> {
    let p = a.degree;
    let mut tri = TriMat::new((k.len(p + q), k.len(q)));
    for_each_cup_term(k, p, q, |tau, s1, s2, w| {
        let v = a.values[s1] * w;
        if v != Complex64::ZERO {
            tri.add_triplet(tau, s2, v);
        }
    })?;
    Ok(CupOperator {
        base_degree: p,
        source_degree: q,
        matrix: tri.to_csr(),
    })
}

/// The twisted coboundary D_{a,q} = d^K + i (a cup .) on degree-q cochains,
/// for a 1-cochain `a`.
pub fn twisted_coboundary(
    k: &SimplicialComplex,
    a: &Cochain,
    q: usize,
) -> Result<CsMat<Complex64>> {
    if a.degree != 1 {
        return Err(Error::InvalidInput("twisting cochain must have degree 1".into()));
    }
    if q >= k.dim() {
        return Err(Error::InvalidInput(format!(
            "twisted coboundary degree {} out of range",
            q
        )));
    }
    let d = k.coboundary_matrix_c(q)?;
    let cup_a = cup_operator(k, a, q)?.matrix;
    let i_cup = cup_a.map(|v| Complex64::new(0.0, 1.0) * v);
    Ok(&d + &i_cup)
}

/// Componentwise max defect of cup(a, b) - R^K(W^K a ^ W^K b), evaluated by
/// quadrature exact for the polynomial integrand.
pub fn wedge_consistency_check(
    g: &GeometricComplex,
    a: &Cochain,
    b: &Cochain,
    order: usize,
) -> Result<f64> {
    let k = g.complex();
    let lhs = cup(k, a, b)?;
    let rhs = de_rham_of_wedge(g, a, b, order)?;
    let mut max_defect: f64 = 0.0;
    for (l, r) in lhs.values.iter().zip(&rhs.values) {
        max_defect = max_defect.max((l - r).norm());
    }
    Ok(max_defect)
}

/// R^K(W^K a ^ W^K b) as a cochain of degree deg(a) + deg(b).
pub fn de_rham_of_wedge(
    g: &GeometricComplex,
    a: &Cochain,
    b: &Cochain,
    order: usize,
) -> Result<Cochain> {
    let (p, q) = (a.degree, b.degree);
    if p + q > g.dim() {
        return Err(Error::InvalidInput("wedge degree overflow".into()));
    }
    // The wedge of two Whitney images is only defined per top simplex, so
    // both factors are re-evaluated at each quadrature point of the owner.
    Ok(de_rham_per_top(g, p + q, 1, order, |t, _x, tbary| {
        let wa = whitney_eval(g, a, t, tbary).expect("interior point");
        let wb = whitney_eval(g, b, t, tbary).expect("interior point");
        vec![wa[0].wedge(&wb[0]).expect("degree checked")]
    }))
}
