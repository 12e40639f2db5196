//! Linearized polynomials and F_q-linear maps in matrix form.
//!
//! A [`LinearizedPoly`] of q-degree `d` is `sum_{i<d} a_i x^(q^i)` with
//! coefficients in `F_{q^d}`, read as a map of `F_{q^d}` to itself. Every
//! F_q-linear endomorphism of `F_{q^d}` has exactly one such form, so the
//! polynomial is also the canonical representation of the map.
//!
//! [`LinearMapMatrix`] holds a map between F_q-spaces as a matrix over `F_q`
//! in two fixed bases ([`QBasis`]): column `j` is the coordinate vector of
//! the image of domain basis vector `j`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{FieldElement, FieldTower};
use crate::fp::{self, SpanSolver};
use crate::linsets::{Ambient, SubspaceQ};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearizedPoly {
    tower: Arc<FieldTower>,
    degree: u32,
    coeffs: Vec<FieldElement>,
}

impl LinearizedPoly {
    /// `coeffs[i]` is the coefficient of `x^(q^i)`; missing entries are zero.
    pub fn new(tower: &Arc<FieldTower>, degree: u32, coeffs: Vec<FieldElement>) -> Result<Self> {
        if degree == 0 || !tower.q_degree().is_multiple_of(degree) {
            return Err(Error::DegreeMismatch { degree, of: tower.q_degree() });
        }
        if coeffs.len() > degree as usize {
            return Err(Error::InvalidParameters(format!(
                "{} coefficients for a q-degree {degree} polynomial",
                coeffs.len()
            )));
        }
        for &c in &coeffs {
            if !tower.in_subfield_q(c, degree)? {
                return Err(Error::NotInSubfield { degree: degree * tower.h() });
            }
        }
        let mut coeffs = coeffs;
        coeffs.resize(degree as usize, FieldElement::ZERO);
        Ok(LinearizedPoly { tower: Arc::clone(tower), degree, coeffs })
    }

    pub fn zero(tower: &Arc<FieldTower>, degree: u32) -> Result<Self> {
        Self::new(tower, degree, Vec::new())
    }

    pub fn identity(tower: &Arc<FieldTower>, degree: u32) -> Result<Self> {
        Self::monomial(tower, degree, 0, FieldElement::ONE)
    }

    /// `c x^(q^k)`.
    pub fn monomial(tower: &Arc<FieldTower>, degree: u32, k: u32, c: FieldElement) -> Result<Self> {
        let mut coeffs = vec![FieldElement::ZERO; degree as usize];
        if degree > 0 {
            coeffs[(k % degree) as usize] = c;
        }
        Self::new(tower, degree, coeffs)
    }

    /// The unique q-polynomial agreeing with the F_q-linear map `f` on `F_{q^d}`.
    ///
    /// `f` is only sampled on a basis; linearity is the caller's promise.
    pub fn from_fn<F>(tower: &Arc<FieldTower>, degree: u32, f: F) -> Result<Self>
    where
        F: Fn(FieldElement) -> FieldElement,
    {
        let basis = QBasis::powers(tower, degree)?;
        let ys: Vec<FieldElement> = basis.elements().iter().map(|&x| f(x)).collect();
        Self::interpolate(tower, degree, basis.elements(), &ys)
    }

    /// Solves the Moore system `sum_k a_k x_j^(q^k) = y_j` for an F_q-basis
    /// `xs` of `F_{q^d}`.
    pub fn interpolate(
        tower: &Arc<FieldTower>,
        degree: u32,
        xs: &[FieldElement],
        ys: &[FieldElement],
    ) -> Result<Self> {
        if xs.len() != degree as usize || ys.len() != xs.len() {
            return Err(Error::InvalidParameters("interpolation needs one value per basis element".into()));
        }
        let rows: Vec<Vec<FieldElement>> = xs
            .iter()
            .map(|&x| (0..degree).map(|k| tower.frobenius(x, k as i64)).collect())
            .collect();
        let coeffs = field_solve(tower, rows, ys.to_vec()).ok_or(Error::DependentBasis)?;
        Self::new(tower, degree, coeffs)
    }

    pub fn tower(&self) -> &Arc<FieldTower> {
        &self.tower
    }

    /// The q-degree `d` of the field `F_{q^d}` this polynomial acts on.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Evaluates without checking that `x` lies in the domain.
    pub fn apply(&self, x: FieldElement) -> FieldElement {
        let t = &self.tower;
        self.coeffs.iter().enumerate().fold(FieldElement::ZERO, |acc, (i, &a)| {
            if a.is_zero() {
                acc
            } else {
                t.add(acc, t.mul(a, t.frobenius(x, i as i64)))
            }
        })
    }

    pub fn eval(&self, x: FieldElement) -> Result<FieldElement> {
        if !self.tower.in_subfield_q(x, self.degree)? {
            return Err(Error::NotInSubfield { degree: self.degree * self.tower.h() });
        }
        Ok(self.apply(x))
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.degree != other.degree || *self.tower != *other.tower {
            return Err(Error::DegreeMismatch { degree: other.degree, of: self.degree });
        }
        Ok(())
    }

    /// `x -> self(other(x))`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let t = &self.tower;
        let d = self.degree as usize;
        let mut out = vec![FieldElement::ZERO; d];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                let term = t.mul(a, t.frobenius(b, i as i64));
                out[(i + j) % d] = t.add(out[(i + j) % d], term);
            }
        }
        Self::new(&self.tower, self.degree, out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let t = &self.tower;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| t.add(a, b)).collect();
        Self::new(&self.tower, self.degree, coeffs)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(self.tower.neg(FieldElement::ONE))?)
    }

    /// `x -> c * self(x)`.
    pub fn scale(&self, c: FieldElement) -> Result<Self> {
        let t = &self.tower;
        let coeffs = self.coeffs.iter().map(|&a| t.mul(c, a)).collect();
        Self::new(&self.tower, self.degree, coeffs)
    }

    /// The adjoint under the trace form: `Tr(x f(y)) = Tr(f^(x) y)`.
    pub fn adjoint(&self) -> Self {
        let t = &self.tower;
        let d = self.degree as usize;
        let coeffs = (0..d).map(|i| t.frobenius(self.coeffs[(d - i) % d], i as i64)).collect();
        LinearizedPoly { tower: Arc::clone(&self.tower), degree: self.degree, coeffs }
    }

    /// Images of the F_p-frame of the domain, as digit vectors.
    fn frame_images(&self) -> (Vec<FieldElement>, Vec<Vec<u8>>) {
        let frame = self.tower.frame_q(self.degree).expect("degree divides the ambient degree");
        let images = frame.elements().iter().map(|&b| self.tower.digits(self.apply(b))).collect();
        (frame.elements().to_vec(), images)
    }

    /// F_q-dimension of the image.
    pub fn rank(&self) -> u32 {
        let (_, images) = self.frame_images();
        fp::rank(self.tower.p(), self.tower.degree() as usize, &images) as u32 / self.tower.h()
    }

    /// `{x in F_{q^d} : f(x) = 0}` as a subspace of `V(1, q^d)`.
    pub fn kernel(&self) -> SubspaceQ {
        let t = &self.tower;
        let (frame, images) = self.frame_images();
        let vectors: Vec<Vec<FieldElement>> = fp::kernel(t.p(), t.degree() as usize, &images)
            .into_iter()
            .map(|c| {
                let x = c.iter().zip(&frame).fold(FieldElement::ZERO, |acc, (&ci, &b)| {
                    t.add(acc, t.mul(t.scalar(ci as u32), b))
                });
                vec![x]
            })
            .collect();
        let ambient = Ambient::new(1, self.degree, self.degree).expect("valid ambient");
        SubspaceQ::span(&self.tower, ambient, &vectors).expect("kernel vectors lie in the domain")
    }

    pub fn to_matrix(&self, domain: &QBasis, codomain: &QBasis) -> Result<LinearMapMatrix> {
        LinearMapMatrix::from_map(|x| self.apply(x), domain, codomain)
    }
}

/// Names the basis a matrix is written in.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisTag {
    /// Powers `1, g, ..., g^(d-1)` of the generator of `F_{q^d}`.
    Powers { q_degree: u32 },
    /// `F_{q^d} x F_{q^d}` with `Powers` in each factor.
    ProductPowers { q_degree: u32 },
    /// Standard basis of `F_q^k`.
    Standard { dim: u32 },
    Custom(String),
}

/// An F_q-basis of an F_q-subspace of the ambient field, with a coordinate solver.
#[derive(Clone, Debug)]
pub struct QBasis {
    tower: Arc<FieldTower>,
    elements: Vec<FieldElement>,
    tag: BasisTag,
    solver: SpanSolver,
}

impl QBasis {
    pub fn new(tower: &Arc<FieldTower>, elements: Vec<FieldElement>, tag: BasisTag) -> Result<Self> {
        let frame = tower.base_frame();
        let fp_basis: Vec<Vec<u8>> = elements
            .iter()
            .flat_map(|&b| frame.elements().iter().map(move |&phi| (b, phi)))
            .map(|(b, phi)| tower.digits(tower.mul(b, phi)))
            .collect();
        let solver = SpanSolver::new(tower.p(), tower.degree() as usize, &fp_basis)
            .ok_or(Error::DependentBasis)?;
        Ok(QBasis { tower: Arc::clone(tower), elements, tag, solver })
    }

    /// `1, g, ..., g^(d-1)` for the generator `g` of `F_{q^d}`.
    pub fn powers(tower: &Arc<FieldTower>, d: u32) -> Result<Self> {
        let g = tower.subfield_generator_q(d)?;
        let elements = std::iter::successors(Some(FieldElement::ONE), |&x| Some(tower.mul(x, g)))
            .take(d as usize)
            .collect();
        Self::new(tower, elements, BasisTag::Powers { q_degree: d })
    }

    pub fn elements(&self) -> &[FieldElement] {
        &self.elements
    }

    pub fn tag(&self) -> &BasisTag {
        &self.tag
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// F_p-coordinates: `h` digits per basis element, each block the base-frame
    /// coordinates of the F_q-coefficient.
    pub fn coords_fp(&self, x: FieldElement) -> Option<Vec<u8>> {
        self.solver.solve(&self.tower.digits(x))
    }

    /// F_q-coordinates.
    pub fn coords(&self, x: FieldElement) -> Option<Vec<FieldElement>> {
        let c = self.coords_fp(x)?;
        let frame = self.tower.base_frame();
        Some(c.chunks(self.tower.h() as usize).map(|blk| frame.element(&self.tower, blk)).collect())
    }

    pub fn combine(&self, coords: &[FieldElement]) -> FieldElement {
        let t = &self.tower;
        coords.iter().zip(&self.elements).fold(FieldElement::ZERO, |acc, (&c, &b)| t.add(acc, t.mul(c, b)))
    }
}

/// An `m x n` matrix over `F_q`, with entries stored as field elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearMapMatrix {
    tower: Arc<FieldTower>,
    rows: usize,
    cols: usize,
    entries: Vec<FieldElement>,
    domain: BasisTag,
    codomain: BasisTag,
}

impl LinearMapMatrix {
    pub fn new(
        tower: &Arc<FieldTower>,
        rows: usize,
        cols: usize,
        entries: Vec<FieldElement>,
        domain: BasisTag,
        codomain: BasisTag,
    ) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!("{} entries for a {rows}x{cols} matrix", entries.len())));
        }
        for &e in &entries {
            if !tower.in_subfield_q(e, 1)? {
                return Err(Error::NotInSubfield { degree: tower.h() });
            }
        }
        Ok(LinearMapMatrix { tower: Arc::clone(tower), rows, cols, entries, domain, codomain })
    }

    pub fn from_map<F>(f: F, domain: &QBasis, codomain: &QBasis) -> Result<Self>
    where
        F: Fn(FieldElement) -> FieldElement,
    {
        let (m, n) = (codomain.len(), domain.len());
        let mut entries = vec![FieldElement::ZERO; m * n];
        for (j, &b) in domain.elements().iter().enumerate() {
            let col = codomain
                .coords(f(b))
                .ok_or_else(|| Error::InvalidParameters("image lies outside the codomain span".into()))?;
            for (i, c) in col.into_iter().enumerate() {
                entries[i * n + j] = c;
            }
        }
        Self::new(&domain.tower, m, n, entries, domain.tag.clone(), codomain.tag.clone())
    }

    pub fn identity(tower: &Arc<FieldTower>, n: usize, tag: BasisTag) -> Self {
        let mut entries = vec![FieldElement::ZERO; n * n];
        for i in 0..n {
            entries[i * n + i] = FieldElement::ONE;
        }
        LinearMapMatrix { tower: Arc::clone(tower), rows: n, cols: n, entries, domain: tag.clone(), codomain: tag }
    }

    pub fn tower(&self) -> &Arc<FieldTower> {
        &self.tower
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> FieldElement {
        self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[FieldElement] {
        &self.entries
    }

    pub fn domain_tag(&self) -> &BasisTag {
        &self.domain
    }

    pub fn codomain_tag(&self) -> &BasisTag {
        &self.codomain
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn rank(&self) -> usize {
        let rows = (0..self.rows).map(|i| self.entries[i * self.cols..(i + 1) * self.cols].to_vec()).collect();
        field_rank(&self.tower, rows)
    }

    /// `self * other`, the matrix of `self o other`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let t = &self.tower;
        let mut entries = vec![FieldElement::ZERO; self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let e = &mut entries[i * other.cols + j];
                    *e = t.add(*e, t.mul(a, other.get(k, j)));
                }
            }
        }
        Ok(LinearMapMatrix {
            tower: Arc::clone(t),
            rows: self.rows,
            cols: other.cols,
            entries,
            domain: other.domain.clone(),
            codomain: self.codomain.clone(),
        })
    }

    pub fn transpose(&self) -> Self {
        let entries = (0..self.cols)
            .flat_map(|j| (0..self.rows).map(move |i| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        LinearMapMatrix {
            tower: Arc::clone(&self.tower),
            rows: self.cols,
            cols: self.rows,
            entries,
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
        }
    }

    /// Row-major entries, each as `h` base-frame digits.
    pub fn to_fp(&self) -> Vec<u8> {
        let frame = self.tower.base_frame();
        self.entries.iter().flat_map(|&e| frame.coords(&self.tower, e)).collect()
    }
}

/// Rank of a matrix over the ambient field.
pub fn field_rank(t: &FieldTower, mut rows: Vec<Vec<FieldElement>>) -> usize {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for col in 0..ncols {
        let Some(pr) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pr);
        let inv = t.inv(rows[rank][col]);
        let pivot: Vec<FieldElement> = rows[rank].iter().map(|&x| t.mul(x, inv)).collect();
        for r in rows.iter_mut().skip(rank + 1) {
            let c = r[col];
            if !c.is_zero() {
                for (x, &y) in r.iter_mut().zip(&pivot) {
                    *x = t.sub(*x, t.mul(c, y));
                }
            }
        }
        rows[rank] = pivot;
        rank += 1;
    }
    rank
}

/// Solves the square system `a x = b` over the ambient field; `None` if singular.
pub fn field_solve(t: &FieldTower, mut a: Vec<Vec<FieldElement>>, mut b: Vec<FieldElement>) -> Option<Vec<FieldElement>> {
    let n = a.len();
    for col in 0..n {
        let pr = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pr);
        b.swap(col, pr);
        let inv = t.inv(a[col][col]);
        for x in a[col].iter_mut() {
            *x = t.mul(*x, inv);
        }
        b[col] = t.mul(b[col], inv);
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let c = a[r][col];
            let pivot_row = a[col].clone();
            for (x, &y) in a[r].iter_mut().zip(&pivot_row) {
                *x = t.sub(*x, t.mul(c, y));
            }
            b[r] = t.sub(b[r], t.mul(c, b[col]));
        }
    }
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tower(p: u32, h: u32, d: u32) -> Arc<FieldTower> {
        Arc::new(FieldTower::over(p, h, d, &[1, d]).unwrap())
    }

    #[test]
    fn identity_and_zero() {
        let t = tower(2, 1, 4);
        let id = LinearizedPoly::identity(&t, 4).unwrap();
        let zero = LinearizedPoly::zero(&t, 4).unwrap();
        let basis = QBasis::powers(&t, 4).unwrap();
        assert_eq!(id.to_matrix(&basis, &basis).unwrap(), LinearMapMatrix::identity(&t, 4, basis.tag().clone()));
        assert!(zero.to_matrix(&basis, &basis).unwrap().is_zero());
        assert_eq!(id.kernel().dim(), 0);
        assert_eq!(zero.kernel().dim(), 4);
        assert_eq!(id.adjoint(), id);
    }

    #[test]
    fn frobenius_on_f4_is_an_involution() {
        let t = tower(2, 1, 2);
        let f = LinearizedPoly::monomial(&t, 2, 1, FieldElement::ONE).unwrap();
        let b = QBasis::powers(&t, 2).unwrap();
        let m = f.to_matrix(&b, &b).unwrap();
        // basis {1, a}: 1 -> 1, a -> a^2 = a + 1
        let one = FieldElement::ONE;
        let zero = FieldElement::ZERO;
        assert_eq!(m.entries(), &[one, one, zero, one]);
        assert_eq!(m.mul(&m).unwrap(), LinearMapMatrix::identity(&t, 2, b.tag().clone()));
    }

    #[test]
    fn fixed_field_kernel() {
        for (p, h, d) in [(2, 1, 4), (3, 1, 3), (2, 2, 3)] {
            let t = tower(p, h, d);
            let f = LinearizedPoly::new(&t, d, vec![t.neg(FieldElement::ONE), FieldElement::ONE]).unwrap();
            let k = f.kernel();
            assert_eq!(k.dim(), 1);
            assert_eq!(f.rank(), d - 1);
        }
    }

    #[test]
    fn eval_rejects_outside_domain() {
        let t = Arc::new(FieldTower::over(2, 1, 4, &[2, 4]).unwrap());
        let f = LinearizedPoly::identity(&t, 2).unwrap();
        assert!(f.eval(t.mu()).is_err());
        assert!(LinearizedPoly::new(&t, 2, vec![t.mu()]).is_err());
        let g = LinearizedPoly::identity(&t, 4).unwrap();
        assert!(f.compose(&g).is_err());
    }

    #[test]
    fn exhaustive_compose_on_f64() {
        let t = tower(2, 1, 6);
        let f = LinearizedPoly::new(&t, 6, vec![t.mu(), FieldElement::ZERO, t.pow(t.mu(), 7)]).unwrap();
        let g = LinearizedPoly::new(&t, 6, vec![FieldElement::ONE, t.pow(t.mu(), 11), FieldElement::ZERO, t.mu()]).unwrap();
        let fg = f.compose(&g).unwrap();
        for i in 0..64 {
            let x = t.element(i).unwrap();
            assert_eq!(fg.apply(x), f.apply(g.apply(x)));
        }
        let x2 = LinearizedPoly::monomial(&t, 6, 2, FieldElement::ONE).unwrap();
        let x1 = LinearizedPoly::monomial(&t, 6, 1, FieldElement::ONE).unwrap();
        assert_eq!(x1.compose(&x1).unwrap(), x2);
    }

    #[test]
    fn adjoint_trace_identity_on_f16() {
        let t = tower(2, 1, 4);
        let f = LinearizedPoly::new(&t, 4, vec![t.mu(), t.pow(t.mu(), 3), FieldElement::ONE, t.pow(t.mu(), 9)]).unwrap();
        let fa = f.adjoint();
        assert_eq!(fa.adjoint(), f);
        for x in 0..16 {
            for y in 0..16 {
                let (x, y) = (t.element(x).unwrap(), t.element(y).unwrap());
                let lhs = t.relative_trace(t.mul(x, f.apply(y)), 4, 1).unwrap();
                let rhs = t.relative_trace(t.mul(fa.apply(x), y), 4, 1).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn interpolation_recovers_polynomial() {
        let t = tower(3, 1, 4);
        let f = LinearizedPoly::new(&t, 4, vec![FieldElement::ZERO, t.mu(), FieldElement::ONE, t.pow(t.mu(), 5)]).unwrap();
        let g = LinearizedPoly::from_fn(&t, 4, |x| f.apply(x)).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn composition_matrix_is_product() {
        let t = tower(3, 1, 3);
        let b = QBasis::powers(&t, 3).unwrap();
        let f = LinearizedPoly::new(&t, 3, vec![t.mu(), FieldElement::ONE]).unwrap();
        let g = LinearizedPoly::new(&t, 3, vec![FieldElement::ZERO, t.pow(t.mu(), 4), t.mu()]).unwrap();
        let lhs = f.compose(&g).unwrap().to_matrix(&b, &b).unwrap();
        let rhs = f.to_matrix(&b, &b).unwrap().mul(&g.to_matrix(&b, &b).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
        assert_eq!(lhs.rank() as u32 + f.compose(&g).unwrap().kernel().dim(), 3);
    }

    #[test]
    fn qbasis_rejects_dependent_elements() {
        let t = tower(2, 2, 2);
        let g = t.subfield_generator_q(1).unwrap();
        assert_eq!(QBasis::new(&t, vec![FieldElement::ONE, g], BasisTag::Custom("x".into())).unwrap_err(), Error::DependentBasis);
    }
}
