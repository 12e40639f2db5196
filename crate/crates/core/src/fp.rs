//! Linear algebra over a prime field `F_p`, on vectors of digits `0..p`.
//!
//! Every F_q-structure in the crate is reduced to this layer: an element of
//! `F_{p^M}` is a length-`M` digit vector, a subspace is a reduced row
//! echelon form, and ranks and kernels are computed here.

/// `a^-1 mod p` for prime `p` and `a != 0`.
pub fn inv_mod(a: u8, p: u32) -> u8 {
    debug_assert!(!(a as u32).is_multiple_of(p));
    let mut base = a as u64 % p as u64;
    let mut e = p as u64 - 2;
    let mut acc = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p as u64;
        }
        base = base * base % p as u64;
        e >>= 1;
    }
    acc as u8
}

/// `dst += c * src` coordinatewise.
#[inline]
pub fn axpy(dst: &mut [u8], src: &[u8], c: u8, p: u32) {
    if c == 0 {
        return;
    }
    if p == 2 {
        for (d, s) in dst.iter_mut().zip(src) {
            *d ^= *s;
        }
    } else {
        let c = c as u32;
        for (d, s) in dst.iter_mut().zip(src) {
            *d = ((*d as u32 + c * *s as u32) % p) as u8;
        }
    }
}

#[inline]
pub fn scale(v: &mut [u8], c: u8, p: u32) {
    if p == 2 {
        return;
    }
    for x in v.iter_mut() {
        *x = (*x as u32 * c as u32 % p) as u8;
    }
}

#[inline]
pub fn neg(c: u8, p: u32) -> u8 {
    ((p - c as u32 % p) % p) as u8
}

/// A subspace of `F_p^ncols` held in reduced row echelon form.
///
/// Rows are sorted by pivot column, each pivot entry is 1, and every other
/// row is zero in that column. The form is unique, so two spans are equal
/// exactly when their `Echelon`s compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Echelon {
    p: u32,
    ncols: usize,
    rows: Vec<Vec<u8>>,
    pivots: Vec<usize>,
}

impl Echelon {
    pub fn new(p: u32, ncols: usize) -> Self {
        Echelon { p, ncols, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn from_rows<I>(p: u32, ncols: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = Vec<u8>>,
    {
        let mut e = Echelon::new(p, ncols);
        for r in rows {
            e.insert(r);
        }
        e
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Clears the pivot columns of `v`; the result is the canonical
    /// representative of `v` modulo this subspace.
    pub fn reduce(&self, v: &mut [u8]) {
        for (row, &piv) in self.rows.iter().zip(&self.pivots) {
            let c = v[piv];
            if c != 0 {
                axpy(v, row, neg(c, self.p), self.p);
            }
        }
    }

    /// Adds `v` to the span. Returns false when `v` was already in it.
    pub fn insert(&mut self, mut v: Vec<u8>) -> bool {
        assert_eq!(v.len(), self.ncols, "row length");
        self.reduce(&mut v);
        let Some(piv) = v.iter().position(|&x| x != 0) else {
            return false;
        };
        let inv = inv_mod(v[piv], self.p);
        scale(&mut v, inv, self.p);
        for row in self.rows.iter_mut() {
            let c = row[piv];
            if c != 0 {
                axpy(row, &v, neg(c, self.p), self.p);
            }
        }
        let pos = self.pivots.partition_point(|&q| q < piv);
        self.pivots.insert(pos, piv);
        self.rows.insert(pos, v);
        true
    }

    pub fn contains(&self, v: &[u8]) -> bool {
        let mut w = v.to_vec();
        self.reduce(&mut w);
        w.iter().all(|&x| x == 0)
    }

    /// Coordinates of `v` with respect to the echelon rows, if `v` is in the span.
    pub fn coefficients(&self, v: &[u8]) -> Option<Vec<u8>> {
        if !self.contains(v) {
            return None;
        }
        Some(self.pivots.iter().map(|&q| v[q]).collect())
    }

    pub fn combine(&self, coeffs: &[u8]) -> Vec<u8> {
        let mut out = vec![0u8; self.ncols];
        for (row, &c) in self.rows.iter().zip(coeffs) {
            axpy(&mut out, row, c, self.p);
        }
        out
    }

    /// Number of vectors in the span, `p^rank`, if it fits.
    pub fn size(&self) -> Option<u128> {
        (self.p as u128).checked_pow(self.rows.len() as u32)
    }
}

/// Rank of a list of vectors.
pub fn rank(p: u32, ncols: usize, rows: &[Vec<u8>]) -> usize {
    Echelon::from_rows(p, ncols, rows.iter().cloned()).rank()
}

/// Rank over `F_2` of rows packed as bit masks. Clobbers `rows`.
pub fn rank_bits(rows: &mut [u64]) -> usize {
    let mut rank = 0;
    for i in 0..rows.len() {
        let pivot = rows[i];
        if pivot == 0 {
            continue;
        }
        rank += 1;
        let low = pivot & pivot.wrapping_neg();
        for r in rows[i + 1..].iter_mut() {
            if *r & low != 0 {
                *r ^= pivot;
            }
        }
    }
    rank
}

/// Basis of `{c : sum_j c_j * images[j] = 0}`.
pub fn kernel(p: u32, width: usize, images: &[Vec<u8>]) -> Vec<Vec<u8>> {
    let k = images.len();
    let mut ech = Echelon::new(p, width + k);
    for (j, img) in images.iter().enumerate() {
        let mut row = img.clone();
        row.resize(width + k, 0);
        row[width + j] = 1;
        ech.insert(row);
    }
    ech.rows
        .iter()
        .zip(&ech.pivots)
        .filter(|(_, &piv)| piv >= width)
        .map(|(row, _)| row[width..].to_vec())
        .collect()
}

/// Solves for coordinates with respect to a fixed independent family.
#[derive(Clone, Debug)]
pub struct SpanSolver {
    p: u32,
    width: usize,
    len: usize,
    ech: Echelon,
}

impl SpanSolver {
    /// Returns `None` if `basis` is linearly dependent.
    pub fn new(p: u32, width: usize, basis: &[Vec<u8>]) -> Option<Self> {
        let len = basis.len();
        let mut ech = Echelon::new(p, width + len);
        for (j, b) in basis.iter().enumerate() {
            let mut row = b.clone();
            row.resize(width + len, 0);
            row[width + j] = 1;
            ech.insert(row);
        }
        if ech.pivots.iter().any(|&q| q >= width) {
            return None;
        }
        Some(SpanSolver { p, width, len, ech })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Coefficients `c` with `v = sum_j c_j * basis[j]`, or `None` if `v` is
    /// outside the span.
    pub fn solve(&self, v: &[u8]) -> Option<Vec<u8>> {
        let mut w = v.to_vec();
        w.resize(self.width + self.len, 0);
        self.ech.reduce(&mut w);
        if w[..self.width].iter().any(|&x| x != 0) {
            return None;
        }
        Some(w[self.width..].iter().map(|&x| neg(x, self.p)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echelon_is_canonical() {
        // (1,0,1) = (1,2,0) + (0,1,1) and (0,2,2) = 2*(0,1,1): same span.
        let a = Echelon::from_rows(3, 3, vec![vec![1, 2, 0], vec![0, 1, 1]]);
        let b = Echelon::from_rows(3, 3, vec![vec![1, 0, 1], vec![0, 2, 2], vec![1, 0, 1]]);
        assert_eq!(a, b);
        assert_eq!(a.rows(), &[vec![1, 0, 1], vec![0, 1, 1]]);
        let c = Echelon::from_rows(3, 3, vec![vec![1, 0, 0], vec![0, 1, 1]]);
        assert_ne!(a, c);
    }

    #[test]
    fn kernel_of_rank_deficient_map() {
        // images of e0,e1,e2 in F_2^2: (1,0),(0,1),(1,1) -> kernel spanned by (1,1,1)
        let k = kernel(2, 2, &[vec![1, 0], vec![0, 1], vec![1, 1]]);
        assert_eq!(k, vec![vec![1, 1, 1]]);
    }

    #[test]
    fn solver_recovers_coefficients() {
        let basis = vec![vec![1, 1, 0], vec![0, 2, 1]];
        let s = SpanSolver::new(5, 3, &basis).unwrap();
        let v = vec![3, (3 + 2 * 4) % 5, 4];
        assert_eq!(s.solve(&v), Some(vec![3, 4]));
        assert_eq!(s.solve(&[0, 0, 1]), None);
        assert!(SpanSolver::new(2, 2, &[vec![1, 1], vec![1, 1]]).is_none());
    }

    #[test]
    fn bit_rank_matches_generic() {
        let rows = [0b1011u64, 0b0110, 0b1101, 0b0000];
        let generic: Vec<Vec<u8>> =
            rows.iter().map(|r| (0..4).map(|i| ((r >> i) & 1) as u8).collect()).collect();
        let mut packed = rows;
        assert_eq!(rank_bits(&mut packed), rank(2, 4, &generic));
    }
}
