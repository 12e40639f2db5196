//! F_q-subspaces of `V(r, q^n)` and the linear sets they define.
//!
//! A vector space `V(r, q^n)` is realized as `s` slots, each holding an
//! element of `F_{q^e}` with `n | e`, so that `r = s e / n`. This covers the
//! field model (`s = 1`, `V = F_{q^{rn}}`), plain tuples (`e = n`) and mixed
//! forms such as `F_{q^{2n}} x F_{q^{2n}}`. Points of the projective space
//! are the `F_{q^n}`-lines of `V`.
//!
//! A [`SubspaceQ`] stores its F_p-span in reduced echelon form over the
//! slot frames, so equal subspaces compare (and serialize) equal.

use std::collections::{BTreeMap, HashMap};
use std::ops::ControlFlow;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{FieldElement, FieldTower, Frame};
use crate::fp::{self, Echelon};

/// Shape of `V(r, q^n)`: `slots` copies of `F_{q^slot_degree}` over `F_{q^scalar_degree}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ambient {
    slots: u32,
    slot_degree: u32,
    scalar_degree: u32,
}

impl Ambient {
    pub fn new(slots: u32, slot_degree: u32, scalar_degree: u32) -> Result<Self> {
        if slots == 0 || slot_degree == 0 || scalar_degree == 0 {
            return Err(Error::InvalidParameters("ambient degrees must be positive".into()));
        }
        if !slot_degree.is_multiple_of(scalar_degree) {
            return Err(Error::DegreeMismatch { degree: scalar_degree, of: slot_degree });
        }
        Ok(Ambient { slots, slot_degree, scalar_degree })
    }

    /// `V(r, q^n)` as `r`-tuples over `F_{q^n}`.
    pub fn tuples(r: u32, n: u32) -> Result<Self> {
        Self::new(r, n, n)
    }

    /// `V(r, q^n)` as the field `F_{q^{rn}}`.
    pub fn field(r: u32, n: u32) -> Result<Self> {
        Self::new(1, r * n, n)
    }

    pub fn slots(&self) -> u32 {
        self.slots
    }

    pub fn slot_degree(&self) -> u32 {
        self.slot_degree
    }

    /// `n`: points are `F_{q^n}`-lines.
    pub fn n(&self) -> u32 {
        self.scalar_degree
    }

    /// `r = dim_{F_{q^n}} V`.
    pub fn r(&self) -> u32 {
        self.slots * self.slot_degree / self.scalar_degree
    }

    /// `dim_{F_q} V = rn`.
    pub fn q_dim(&self) -> u32 {
        self.slots * self.slot_degree
    }

    /// The largest rank a scattered subspace can have, `floor(rn/2)`.
    pub fn scattered_bound(&self) -> u32 {
        self.q_dim() / 2
    }

    /// The same vectors read over a smaller scalar field `F_{q^n'}`.
    pub fn with_scalar_degree(&self, n: u32) -> Result<Self> {
        Self::new(self.slots, self.slot_degree, n)
    }
}

/// Point statistics of a linear set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightReport {
    /// F_q-dimension of the defining subspace.
    pub rank: u32,
    pub points: u64,
    /// weight -> number of points
    pub histogram: BTreeMap<u32, u64>,
    pub max_weight: u32,
    /// A representative of a heaviest point, when that weight exceeds 1.
    #[serde(skip)]
    pub witness: Option<Vec<FieldElement>>,
}

impl WeightReport {
    pub fn is_scattered(&self) -> bool {
        self.max_weight <= 1
    }
}

#[derive(Clone, Debug)]
pub struct SubspaceQ {
    tower: Arc<FieldTower>,
    ambient: Ambient,
    frame: Frame,
    ech: Echelon,
}

impl PartialEq for SubspaceQ {
    fn eq(&self, other: &Self) -> bool {
        self.ambient == other.ambient && self.ech == other.ech && *self.tower == *other.tower
    }
}

impl Eq for SubspaceQ {}

impl SubspaceQ {
    fn empty(tower: &Arc<FieldTower>, ambient: Ambient) -> Result<Self> {
        if !tower.q_degree().is_multiple_of(ambient.slot_degree) {
            return Err(Error::DegreeMismatch { degree: ambient.slot_degree, of: tower.q_degree() });
        }
        let frame = tower.frame_q(ambient.slot_degree)?;
        let width = (ambient.q_dim() * tower.h()) as usize;
        Ok(SubspaceQ { tower: Arc::clone(tower), ambient, frame, ech: Echelon::new(tower.p(), width) })
    }

    /// The F_q-span of `vectors`.
    pub fn span(tower: &Arc<FieldTower>, ambient: Ambient, vectors: &[Vec<FieldElement>]) -> Result<Self> {
        let mut u = Self::empty(tower, ambient)?;
        for v in vectors {
            u.insert(v)?;
        }
        Ok(u)
    }

    /// `{ f(x) : x in F_{q^d} }` for an F_q-linear `f`.
    pub fn image<F>(tower: &Arc<FieldTower>, ambient: Ambient, domain_q_degree: u32, f: F) -> Result<Self>
    where
        F: Fn(FieldElement) -> Vec<FieldElement>,
    {
        let frame = tower.frame_q(domain_q_degree)?;
        let vectors: Vec<_> = frame.elements().iter().map(|&x| f(x)).collect();
        Self::span(tower, ambient, &vectors)
    }

    /// Rebuilds a subspace from echelon rows, rejecting anything that is not
    /// a canonical F_q-closed span.
    pub fn from_rows(tower: &Arc<FieldTower>, ambient: Ambient, rows: Vec<Vec<u8>>) -> Result<Self> {
        let mut u = Self::empty(tower, ambient)?;
        let width = u.ech.ncols();
        for r in &rows {
            if r.len() != width || r.iter().any(|&d| d as u32 >= tower.p()) {
                return Err(Error::Malformed("basis row has the wrong length or digits".into()));
            }
        }
        u.ech = Echelon::from_rows(tower.p(), width, rows.iter().cloned());
        if u.ech.rows() != rows.as_slice() {
            return Err(Error::Malformed("basis is not in reduced echelon form".into()));
        }
        let closed = u.basis_vectors().iter().all(|v| {
            tower.base_frame().elements().iter().all(|&phi| {
                let scaled: Vec<_> = v.iter().map(|&x| tower.mul(phi, x)).collect();
                u.ech.contains(&u.coords(&scaled).expect("scaled vector stays in the ambient"))
            })
        });
        if !closed {
            return Err(Error::Malformed("basis does not span an F_q-subspace".into()));
        }
        Ok(u)
    }

    fn insert(&mut self, v: &[FieldElement]) -> Result<()> {
        for &phi in self.tower.base_frame().elements() {
            let scaled: Vec<_> = v.iter().map(|&x| self.tower.mul(phi, x)).collect();
            let c = self.coords(&scaled)?;
            self.ech.insert(c);
        }
        Ok(())
    }

    pub fn tower(&self) -> &Arc<FieldTower> {
        &self.tower
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    /// F_q-dimension, the rank of the linear set.
    pub fn dim(&self) -> u32 {
        self.ech.rank() as u32 / self.tower.h()
    }

    pub fn echelon(&self) -> &Echelon {
        &self.ech
    }

    /// F_p-coordinates of a vector of `V`.
    pub fn coords(&self, v: &[FieldElement]) -> Result<Vec<u8>> {
        if v.len() != self.ambient.slots as usize {
            return Err(Error::AmbientMismatch(format!(
                "vector has {} slots, expected {}",
                v.len(),
                self.ambient.slots
            )));
        }
        let mut out = Vec::with_capacity(self.ech.ncols());
        for &x in v {
            if !self.tower.in_subfield_q(x, self.ambient.slot_degree)? {
                return Err(Error::NotInSubfield { degree: self.ambient.slot_degree * self.tower.h() });
            }
            out.extend(self.frame.coords(&self.tower, x));
        }
        Ok(out)
    }

    pub fn vector(&self, coords: &[u8]) -> Vec<FieldElement> {
        coords
            .chunks(self.frame.degree() as usize)
            .map(|c| self.frame.element(&self.tower, c))
            .collect()
    }

    /// The echelon rows as vectors; an F_p-basis of the subspace.
    pub fn basis_vectors(&self) -> Vec<Vec<FieldElement>> {
        self.ech.rows().iter().map(|r| self.vector(r)).collect()
    }

    /// An F_q-basis, chosen greedily from the echelon rows.
    pub fn q_basis(&self) -> Vec<Vec<FieldElement>> {
        let mut acc = Self::empty(&self.tower, self.ambient).expect("ambient already validated");
        let mut out = Vec::new();
        for v in self.basis_vectors() {
            let c = self.coords(&v).expect("own vectors are valid");
            if !acc.ech.contains(&c) {
                acc.insert(&v).expect("own vectors are valid");
                out.push(v);
            }
        }
        out
    }

    pub fn contains(&self, v: &[FieldElement]) -> Result<bool> {
        Ok(self.ech.contains(&self.coords(v)?))
    }

    /// `dim_{F_q} { l in F_{q^n} : l v in U }`.
    pub fn weight(&self, v: &[FieldElement]) -> Result<u32> {
        if v.iter().all(|x| x.is_zero()) {
            return Err(Error::ZeroVector);
        }
        self.coords(v)?;
        Ok(self.weight_unchecked(v))
    }

    fn weight_unchecked(&self, v: &[FieldElement]) -> u32 {
        let t = &self.tower;
        let scalars = t.frame_q(self.ambient.n()).expect("n divides the slot degree");
        let residues: Vec<Vec<u8>> = scalars
            .elements()
            .iter()
            .map(|&l| {
                let lv: Vec<_> = v.iter().map(|&x| t.mul(l, x)).collect();
                let mut c = self.coords(&lv).expect("scalar multiple stays in V");
                self.ech.reduce(&mut c);
                c
            })
            .collect();
        let rank = fp::rank(t.p(), self.ech.ncols(), &residues) as u32;
        (scalars.degree() - rank) / t.h()
    }

    /// Calls `f` on each of the `q^k - 1` nonzero vectors of the subspace.
    pub fn for_each_nonzero<F>(&self, mut f: F)
    where
        F: FnMut(&[FieldElement]) -> ControlFlow<()>,
    {
        let t = &self.tower;
        let basis = self.basis_vectors();
        let p = t.p() as u8;
        let mut digits = vec![0u8; basis.len()];
        let mut cur = vec![FieldElement::ZERO; self.ambient.slots as usize];
        let add = |cur: &mut Vec<FieldElement>, b: &[FieldElement]| {
            for (x, &y) in cur.iter_mut().zip(b) {
                *x = t.add(*x, y);
            }
        };
        loop {
            // Mixed-radix increment; a digit wrapping from p-1 to 0 also adds
            // its basis vector once, since p b = 0.
            let mut j = 0;
            while j < digits.len() && digits[j] == p - 1 {
                digits[j] = 0;
                add(&mut cur, &basis[j]);
                j += 1;
            }
            if j == digits.len() {
                return;
            }
            digits[j] += 1;
            add(&mut cur, &basis[j]);
            if f(&cur).is_break() {
                return;
            }
        }
    }

    /// Normal form of the `F_{q^n}`-line through `v`: two vectors get the same
    /// key exactly when one is an `F_{q^n}^*`-multiple of the other.
    fn point_key(&self, v: &[FieldElement]) -> (usize, Vec<FieldElement>) {
        let t = &self.tower;
        let j = v.iter().position(|x| !x.is_zero()).expect("nonzero vector");
        let inv = t.inv(v[j]);
        let mut key = Vec::with_capacity(v.len() - j);
        key.push(t.mul(t.frobenius(v[j], self.ambient.n() as i64), inv));
        key.extend(v[j + 1..].iter().map(|&x| t.mul(x, inv)));
        (j, key)
    }

    /// Enumerates the points of `L_U` with their weights.
    ///
    /// Each weight is computed by a linear solve and cross-checked against
    /// the number of vectors of `U` on that point, which must be `q^w - 1`.
    pub fn linear_set_points(&self) -> Result<WeightReport> {
        if self.ech.rank() == 0 {
            return Err(Error::ZeroSubspace);
        }
        let q = self.tower.q();
        let mut index: HashMap<(usize, Vec<FieldElement>), usize> = HashMap::new();
        let mut buckets: Vec<(Vec<FieldElement>, u64)> = Vec::new();
        self.for_each_nonzero(|v| {
            let next = buckets.len();
            let slot = *index.entry(self.point_key(v)).or_insert(next);
            if slot == next {
                buckets.push((v.to_vec(), 0));
            }
            buckets[slot].1 += 1;
            ControlFlow::Continue(())
        });
        let mut histogram = BTreeMap::new();
        let mut witness: Option<(u32, Vec<FieldElement>)> = None;
        let mut total = 0u64;
        for (rep, count) in buckets.iter() {
            let w = self.weight_unchecked(rep);
            if q.pow(w) - 1 != *count {
                return Err(Error::Internal(format!("point with weight {w} carries {count} vectors")));
            }
            total += count;
            *histogram.entry(w).or_insert(0) += 1;
            if w > 1 && witness.as_ref().is_none_or(|(best, _)| w > *best) {
                witness = Some((w, rep.clone()));
            }
        }
        let rank = self.dim();
        if total != q.pow(rank) - 1 {
            return Err(Error::Internal("point weights do not account for every vector".into()));
        }
        Ok(WeightReport {
            rank,
            points: buckets.len() as u64,
            max_weight: *histogram.keys().last().expect("nonempty"),
            histogram,
            witness: witness.map(|(_, v)| v),
        })
    }

    /// `None` if scattered; otherwise a vector on a point of weight at least 2.
    ///
    /// Stops at the first point seen `q` times.
    pub fn scattered_witness(&self) -> Option<Vec<FieldElement>> {
        let q = self.tower.q();
        let mut counts: HashMap<(usize, Vec<FieldElement>), u64> = HashMap::new();
        let mut witness = None;
        self.for_each_nonzero(|v| {
            let c = counts.entry(self.point_key(v)).or_insert(0);
            *c += 1;
            if *c >= q {
                witness = Some(v.to_vec());
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        });
        if let Some(w) = &witness {
            assert!(self.weight_unchecked(w) >= 2, "witness point must have weight at least 2");
        }
        witness
    }

    pub fn is_scattered(&self) -> bool {
        self.scattered_witness().is_none()
    }

    /// Fails if a scattered subspace beats the `rn/2` rank bound, which
    /// would contradict a theorem.
    pub fn assert_rank_bound(&self) -> Result<()> {
        if self.dim() > self.ambient.scattered_bound() && self.is_scattered() {
            return Err(Error::Internal(format!(
                "scattered subspace of rank {} exceeds rn/2 = {}",
                self.dim(),
                self.ambient.scattered_bound()
            )));
        }
        Ok(())
    }

    /// The same vectors, with points taken over `F_{q^new_n}`.
    pub fn rescatter_view(&self, new_n: u32) -> Result<Self> {
        if new_n == 0 || !self.ambient.n().is_multiple_of(new_n) {
            return Err(Error::DegreeMismatch { degree: new_n, of: self.ambient.n() });
        }
        let mut u = self.clone();
        u.ambient = self.ambient.with_scalar_degree(new_n)?;
        Ok(u)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.ambient != other.ambient || *self.tower != *other.tower {
            return Err(Error::AmbientMismatch(format!("{:?} vs {:?}", self.ambient, other.ambient)));
        }
        Ok(())
    }

    pub fn sum(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut u = self.clone();
        for r in other.ech.rows() {
            u.ech.insert(r.clone());
        }
        Ok(u)
    }

    /// Zassenhaus: the rows `(u | u)` and `(w | 0)` reduce to `(0 | x)` exactly for `x` in the intersection.
    pub fn intersect(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let width = self.ech.ncols();
        let mut z = Echelon::new(self.tower.p(), 2 * width);
        for r in self.ech.rows() {
            z.insert([r.as_slice(), r.as_slice()].concat());
        }
        for r in other.ech.rows() {
            let mut row = r.clone();
            row.resize(2 * width, 0);
            z.insert(row);
        }
        let mut u = Self::empty(&self.tower, self.ambient)?;
        u.ech = Echelon::from_rows(
            self.tower.p(),
            width,
            z.rows().iter().zip(z.pivots()).filter(|(_, &piv)| piv >= width).map(|(r, _)| r[width..].to_vec()),
        );
        Ok(u)
    }

    /// `U1 (+) U2` inside `V1 (+) V2`; both factors must share slot and scalar degrees.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if *self.tower != *other.tower
            || self.ambient.slot_degree != other.ambient.slot_degree
            || self.ambient.n() != other.ambient.n()
        {
            return Err(Error::AmbientMismatch(format!("{:?} vs {:?}", self.ambient, other.ambient)));
        }
        let ambient = Ambient::new(
            self.ambient.slots + other.ambient.slots,
            self.ambient.slot_degree,
            self.ambient.n(),
        )?;
        let mut u = Self::empty(&self.tower, ambient)?;
        let (w1, w2) = (self.ech.ncols(), other.ech.ncols());
        let left = self.ech.rows().iter().map(|r| [r.as_slice(), &vec![0; w2]].concat());
        let right = other.ech.rows().iter().map(|r| [&vec![0; w1], r.as_slice()].concat());
        u.ech = Echelon::from_rows(self.tower.p(), w1 + w2, left.chain(right));
        Ok(u)
    }
}
