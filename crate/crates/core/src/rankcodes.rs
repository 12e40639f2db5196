//! F_q-linear rank-metric codes.
//!
//! A [`RankCode`] is an F_q-subspace of `F_q^{m x n}`. Codewords are stored
//! as F_p-vectors of length `m n h`: entry `(i, j)` occupies the `h` digits
//! starting at `(i n + j) h`, holding its coordinates in the base frame of
//! `F_q`. The code itself is the reduced echelon form of its F_p-span, so
//! equal codes compare equal.
//!
//! Codes are built from scattered subspaces (`C_{U,G} = { G o tau_v }`),
//! from q-polynomials (`S_f`, generalized Gabidulin codes) or from explicit
//! formulas. Minimum distance is found by an exhaustive parallel scan, or
//! bounded from above by sampling.

use std::cmp::Ordering;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructions::{binomial, MonomialParams, PlaneConstructionParams};
use crate::error::{Error, Result};
use crate::fields::{gcd, FieldElement, FieldTower};
use crate::fp::{self, Echelon, SpanSolver};
use crate::linmaps::{field_rank, BasisTag, LinearMapMatrix, LinearizedPoly, QBasis};
use crate::linsets::{Ambient, SubspaceQ};

/// Default cap on the number of codewords an exhaustive scan may visit.
pub const DEFAULT_BUDGET: u128 = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    FromSubspace,
    Sheekey,
    Gabidulin,
    ExplicitFv,
    Restriction,
    Transpose,
    Derived,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerificationStatus {
    /// The minimum distance was computed over every nonzero codeword.
    Exhaustive,
    /// The minimum distance is what a theorem promises; nothing was scanned.
    TheoremCited,
    /// Only an upper bound on the distance is known, from random codewords.
    Sampled,
    /// Neither computed nor covered by a theorem whose hypotheses were checked.
    Unverified,
}

/// `(m, n, q; d)` with the F_q-dimension.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeParams {
    pub m: usize,
    pub n: usize,
    pub p: u32,
    pub h: u32,
    pub dim: u32,
    pub d: Option<u32>,
    pub status: VerificationStatus,
}

#[derive(Clone, Debug)]
pub struct RankCode {
    tower: Arc<FieldTower>,
    m: usize,
    n: usize,
    ech: Echelon,
    provenance: Provenance,
    domain: BasisTag,
    codomain: BasisTag,
    cited_d: Option<u32>,
    sampled_bound: Option<u32>,
    d_min: OnceLock<u32>,
}

impl PartialEq for RankCode {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m && self.n == other.n && self.ech == other.ech && *self.tower == *other.tower
    }
}

impl Eq for RankCode {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanMode {
    Exhaustive { budget: u128 },
    Sample { count: u64, seed: u64 },
}

impl ScanMode {
    pub fn exhaustive() -> Self {
        ScanMode::Exhaustive { budget: DEFAULT_BUDGET }
    }
}

/// Outcome of a distance scan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceReport {
    /// Exact distance, or an upper bound when `exact` is false.
    pub d: u32,
    pub exact: bool,
    pub examined: u128,
    /// A codeword of rank `d`, as F_p digits.
    pub witness: Vec<u8>,
    /// Index `sum c_j p^j` of the witness over the echelon rows (exhaustive only).
    pub witness_index: Option<u128>,
}

impl RankCode {
    /// The F_q-span of `generators`, each given as `m n h` F_p digits.
    pub fn from_generators(
        tower: &Arc<FieldTower>,
        m: usize,
        n: usize,
        generators: impl IntoIterator<Item = Vec<u8>>,
        provenance: Provenance,
        domain: BasisTag,
        codomain: BasisTag,
    ) -> Result<Self> {
        let h = tower.h() as usize;
        let width = m * n * h;
        let frame = tower.base_frame();
        let mut ech = Echelon::new(tower.p(), width);
        for g in generators {
            if g.len() != width {
                return Err(Error::ShapeMismatch(format!("codeword of length {} in a {m}x{n} code", g.len())));
            }
            if h == 1 {
                ech.insert(g);
                continue;
            }
            let entries: Vec<FieldElement> = g.chunks(h).map(|c| frame.element(tower, c)).collect();
            for &phi in frame.elements() {
                let scaled = entries.iter().flat_map(|&e| frame.coords(tower, tower.mul(phi, e))).collect();
                ech.insert(scaled);
            }
        }
        Ok(RankCode {
            tower: Arc::clone(tower),
            m,
            n,
            ech,
            provenance,
            domain,
            codomain,
            cited_d: None,
            sampled_bound: None,
            d_min: OnceLock::new(),
        })
    }

    pub fn from_matrices(tower: &Arc<FieldTower>, mats: &[LinearMapMatrix], provenance: Provenance) -> Result<Self> {
        let first = mats.first().ok_or_else(|| Error::ShapeMismatch("no generators".into()))?;
        let (m, n) = (first.rows(), first.cols());
        if mats.iter().any(|a| a.rows() != m || a.cols() != n) {
            return Err(Error::ShapeMismatch("generators have different shapes".into()));
        }
        Self::from_generators(
            tower,
            m,
            n,
            mats.iter().map(|a| a.to_fp()),
            provenance,
            first.domain_tag().clone(),
            first.codomain_tag().clone(),
        )
    }

    /// Attaches the distance a theorem guarantees.
    pub fn cite_distance(mut self, d: u32) -> Self {
        self.cited_d = Some(d);
        self
    }

    pub fn tower(&self) -> &Arc<FieldTower> {
        &self.tower
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> u32 {
        self.ech.rank() as u32 / self.tower.h()
    }

    pub fn echelon(&self) -> &Echelon {
        &self.ech
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn domain_tag(&self) -> &BasisTag {
        &self.domain
    }

    pub fn codomain_tag(&self) -> &BasisTag {
        &self.codomain
    }

    pub fn status(&self) -> VerificationStatus {
        if self.d_min.get().is_some() {
            VerificationStatus::Exhaustive
        } else if self.cited_d.is_some() {
            VerificationStatus::TheoremCited
        } else if self.sampled_bound.is_some() {
            VerificationStatus::Sampled
        } else {
            VerificationStatus::Unverified
        }
    }

    /// Exact distance from an exhaustive scan, if one has run.
    pub fn d_min(&self) -> Option<u32> {
        self.d_min.get().copied()
    }

    pub fn cited_distance(&self) -> Option<u32> {
        self.cited_d
    }

    pub fn sampled_bound(&self) -> Option<u32> {
        self.sampled_bound
    }

    /// The distance to reason with: exhaustive if known, else theorem-cited.
    pub fn distance(&self) -> Option<u32> {
        self.d_min().or(self.cited_d)
    }

    pub fn params(&self) -> CodeParams {
        CodeParams {
            m: self.m,
            n: self.n,
            p: self.tower.p(),
            h: self.tower.h(),
            dim: self.dim(),
            d: self.distance(),
            status: self.status(),
        }
    }

    /// Restores an exhaustive result read back from disk, after checking it
    /// against the witness rank.
    pub(crate) fn restore_exhaustive(&self, d: u32) {
        let _ = self.d_min.set(d);
    }

    pub(crate) fn record_sampled_bound(&mut self, d: u32) {
        self.sampled_bound = Some(self.sampled_bound.map_or(d, |b| b.min(d)));
    }

    /// An F_q-basis of the code, picked greedily from the echelon rows.
    pub fn q_generators(&self) -> Vec<Vec<u8>> {
        if self.tower.h() == 1 {
            return self.ech.rows().to_vec();
        }
        let mut acc = RankCode::from_generators(
            &self.tower,
            self.m,
            self.n,
            std::iter::empty(),
            self.provenance,
            self.domain.clone(),
            self.codomain.clone(),
        )
        .expect("empty code");
        let mut out = Vec::new();
        for r in self.ech.rows() {
            if !acc.ech.contains(r) {
                acc = RankCode::from_generators(
                    &self.tower,
                    self.m,
                    self.n,
                    acc.ech.rows().iter().cloned().chain([r.clone()]),
                    self.provenance,
                    self.domain.clone(),
                    self.codomain.clone(),
                )
                .expect("shape preserved");
                out.push(r.clone());
            }
        }
        out
    }

    pub fn matrix(&self, digits: &[u8]) -> LinearMapMatrix {
        let frame = self.tower.base_frame();
        let h = self.tower.h() as usize;
        let entries = digits.chunks(h).map(|c| frame.element(&self.tower, c)).collect();
        LinearMapMatrix::new(&self.tower, self.m, self.n, entries, self.domain.clone(), self.codomain.clone())
            .expect("entries lie in F_q")
    }

    pub fn contains(&self, digits: &[u8]) -> bool {
        digits.len() == self.ech.ncols() && self.ech.contains(digits)
    }

    /// Rank over `F_q` of a codeword given as F_p digits.
    pub fn codeword_rank(&self, digits: &[u8]) -> u32 {
        let (p, h) = (self.tower.p(), self.tower.h() as usize);
        if h == 1 {
            let mut buf = digits.to_vec();
            return small_rank(p, self.m, self.n, &mut buf);
        }
        let frame = self.tower.base_frame();
        let rows = digits
            .chunks(self.n * h)
            .map(|row| row.chunks(h).map(|c| frame.element(&self.tower, c)).collect())
            .collect();
        field_rank(&self.tower, rows) as u32
    }

    /// Minimum rank over nonzero codewords.
    ///
    /// An exhaustive result is cached in the code; a sampled one is recorded
    /// only as an upper bound.
    pub fn min_rank_distance(&mut self, mode: ScanMode) -> Result<DistanceReport> {
        if self.ech.rank() == 0 {
            return Err(Error::InvalidParameters("the zero code has no minimum distance".into()));
        }
        let report = match mode {
            ScanMode::Exhaustive { budget } => {
                let needed = (self.tower.p() as u128)
                    .checked_pow(self.ech.rank() as u32)
                    .unwrap_or(u128::MAX);
                if needed > budget {
                    return Err(Error::BudgetExceeded { needed, budget });
                }
                let r = if self.tower.p() == 2 && self.tower.h() == 1 && self.n <= 64 {
                    self.scan_binary()
                } else {
                    self.scan_generic()
                };
                let _ = self.d_min.set(r.d);
                r
            }
            ScanMode::Sample { count, seed } => {
                let r = self.sample(count, seed);
                self.record_sampled_bound(r.d);
                r
            }
        };
        Ok(report)
    }

    fn split(&self) -> (usize, usize) {
        let k = self.ech.rank();
        let p = self.tower.p() as usize;
        let mut outer = 0;
        while outer < k && p.pow(outer as u32) < 256 {
            outer += 1;
        }
        (k - outer, outer)
    }

    fn scan_binary(&self) -> DistanceReport {
        let (inner, outer) = self.split();
        let pack = |digits: &[u8]| -> Vec<u64> {
            digits
                .chunks(self.n)
                .map(|row| row.iter().enumerate().fold(0u64, |acc, (j, &b)| acc | ((b as u64) << j)))
                .collect()
        };
        let gens: Vec<Vec<u64>> = self.ech.rows().iter().map(|r| pack(r)).collect();
        let best = (0u64..1 << outer)
            .into_par_iter()
            .map(|o| {
                let mut cur = vec![0u64; self.m];
                for b in 0..outer {
                    if o >> b & 1 == 1 {
                        xor(&mut cur, &gens[inner + b]);
                    }
                }
                let mut best = (u32::MAX, u128::MAX);
                let mut scratch = vec![0u64; self.m];
                for s in 0u64..1 << inner {
                    if s > 0 {
                        xor(&mut cur, &gens[s.trailing_zeros() as usize]);
                    }
                    let index = ((o as u128) << inner) | (s ^ (s >> 1)) as u128;
                    if index == 0 {
                        continue;
                    }
                    scratch.copy_from_slice(&cur);
                    let r = fp::rank_bits(&mut scratch) as u32;
                    if (r, index) < best {
                        best = (r, index);
                    }
                }
                best
            })
            .reduce(|| (u32::MAX, u128::MAX), |a, b| a.min(b));
        self.report(best, 1u128 << self.ech.rank())
    }

    fn scan_generic(&self) -> DistanceReport {
        let (inner, outer) = self.split();
        let p = self.tower.p();
        let gens = self.ech.rows();
        let width = self.ech.ncols();
        let pu = p as u128;
        let best = (0..(p as u64).pow(outer as u32))
            .into_par_iter()
            .map(|o| {
                let mut cur = vec![0u8; width];
                let mut v = o;
                for b in 0..outer {
                    fp::axpy(&mut cur, &gens[inner + b], (v % p as u64) as u8, p);
                    v /= p as u64;
                }
                let base_index = o as u128 * pu.pow(inner as u32);
                let mut best = (u32::MAX, u128::MAX);
                let mut digits = vec![0u8; inner];
                let mut index = 0u128;
                loop {
                    let full = base_index + index;
                    if full != 0 {
                        let r = self.codeword_rank(&cur);
                        if (r, full) < best {
                            best = (r, full);
                        }
                    }
                    let mut j = 0;
                    while j < inner && digits[j] as u32 == p - 1 {
                        digits[j] = 0;
                        fp::axpy(&mut cur, &gens[j], 1, p);
                        j += 1;
                    }
                    if j == inner {
                        break;
                    }
                    digits[j] += 1;
                    fp::axpy(&mut cur, &gens[j], 1, p);
                    index += 1;
                }
                best
            })
            .reduce(|| (u32::MAX, u128::MAX), |a, b| a.min(b));
        self.report(best, pu.pow(self.ech.rank() as u32))
    }

    fn combine_index(&self, mut index: u128) -> Vec<u8> {
        let p = self.tower.p();
        let mut coeffs = Vec::with_capacity(self.ech.rank());
        for _ in 0..self.ech.rank() {
            coeffs.push((index % p as u128) as u8);
            index /= p as u128;
        }
        self.ech.combine(&coeffs)
    }

    fn report(&self, best: (u32, u128), total: u128) -> DistanceReport {
        DistanceReport {
            d: best.0,
            exact: true,
            examined: total - 1,
            witness: self.combine_index(best.1),
            witness_index: Some(best.1),
        }
    }

    fn sample(&self, count: u64, seed: u64) -> DistanceReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = self.tower.p();
        let mut best: Option<(u32, Vec<u8>)> = None;
        for _ in 0..count {
            let coeffs: Vec<u8> = loop {
                let c: Vec<u8> = (0..self.ech.rank()).map(|_| rng.gen_range(0..p) as u8).collect();
                if c.iter().any(|&x| x != 0) {
                    break c;
                }
            };
            let w = self.ech.combine(&coeffs);
            let r = self.codeword_rank(&w);
            if best.as_ref().is_none_or(|(b, _)| r < *b) {
                best = Some((r, w));
            }
        }
        let (d, witness) = best.unwrap_or((u32::MAX, Vec::new()));
        DistanceReport { d, exact: false, examined: count as u128, witness, witness_index: None }
    }

    /// `dim <= max(m, n) (min(m, n) - d + 1)`, compared on exponents of q.
    pub fn singleton_exponent(&self, d: u32) -> u32 {
        let (lo, hi) = (self.m.min(self.n) as u32, self.m.max(self.n) as u32);
        hi * (lo + 1).saturating_sub(d)
    }

    /// Whether the code meets the Singleton bound with its known distance.
    pub fn is_mrd(&self) -> Result<bool> {
        let d = self.distance().ok_or(Error::DistanceUnknown)?;
        let bound = self.singleton_exponent(d);
        if self.dim() > bound {
            return Err(Error::Internal(format!("dimension {} exceeds the Singleton bound {bound}", self.dim())));
        }
        Ok(self.dim() == bound)
    }

    /// Every codeword transposed.
    pub fn transpose(&self) -> RankCode {
        let h = self.tower.h() as usize;
        let rows = self.ech.rows().iter().map(|r| {
            let mut out = vec![0u8; r.len()];
            for i in 0..self.m {
                for j in 0..self.n {
                    let src = (i * self.n + j) * h;
                    let dst = (j * self.m + i) * h;
                    out[dst..dst + h].copy_from_slice(&r[src..src + h]);
                }
            }
            out
        });
        let mut c = RankCode::from_generators(
            &self.tower,
            self.n,
            self.m,
            rows,
            Provenance::Transpose,
            self.codomain.clone(),
            self.domain.clone(),
        )
        .expect("transpose keeps the entry count");
        c.cited_d = self.cited_d;
        if let Some(d) = self.d_min() {
            let _ = c.d_min.set(d);
        }
        c
    }
}

fn xor(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

/// Rank of an `m x n` matrix over `F_p`, row-major, in place.
fn small_rank(p: u32, m: usize, n: usize, a: &mut [u8]) -> u32 {
    let mut rank = 0;
    for col in 0..n {
        let Some(pr) = (rank..m).find(|&r| a[r * n + col] != 0) else {
            continue;
        };
        if pr != rank {
            for j in 0..n {
                a.swap(pr * n + j, rank * n + j);
            }
        }
        let inv = fp::inv_mod(a[rank * n + col], p);
        for r in rank + 1..m {
            let c = a[r * n + col];
            if c == 0 {
                continue;
            }
            let f = fp::neg((c as u32 * inv as u32 % p) as u8, p);
            let (head, tail) = a.split_at_mut(r * n);
            fp::axpy(&mut tail[..n], &head[rank * n..rank * n + n], f, p);
        }
        rank += 1;
    }
    rank as u32
}

/// Equal F_q-spans.
pub fn codes_equal(a: &RankCode, b: &RankCode) -> Result<bool> {
    if a.m != b.m || a.n != b.n || *a.tower != *b.tower {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} over F_{}^{} vs {}x{} over F_{}^{}",
            a.m,
            a.n,
            a.tower.p(),
            a.tower.h(),
            b.m,
            b.n,
            b.tower.p(),
            b.tower.h()
        )));
    }
    Ok(a.ech == b.ech)
}

/// An F_q-linear map `G : V -> F_q^m`, held as the images of the unit F_p
/// coordinate vectors of `V` (each image is `m h` base-frame digits).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelMap {
    p: u32,
    h: u32,
    out_dim: usize,
    images: Vec<Vec<u8>>,
}

impl KernelMap {
    /// Projection onto the canonical F_q-complement of `U` along `U`.
    ///
    /// The complement is grown from the unit coordinate vectors in
    /// increasing order, each added with its F_q-multiples when new.
    pub fn complement_projection(u: &SubspaceQ) -> Result<Self> {
        let width = u.echelon().ncols();
        let units = (0..width).map(|k| unit(width, k));
        Self::complement_projection_from(u, units)
    }

    /// Projection onto the complement grown from `candidates`.
    pub fn complement_projection_from(u: &SubspaceQ, candidates: impl IntoIterator<Item = Vec<u8>>) -> Result<Self> {
        let t = u.tower();
        let width = u.echelon().ncols();
        let mut acc = u.echelon().clone();
        let mut comp: Vec<Vec<FieldElement>> = Vec::new();
        for c in candidates {
            if acc.rank() == width {
                break;
            }
            if acc.contains(&c) {
                continue;
            }
            let v = u.vector(&c);
            for &phi in t.base_frame().elements() {
                acc.insert(u.coords(&scale(t, phi, &v))?);
            }
            comp.push(v);
        }
        if acc.rank() != width {
            return Err(Error::InvalidParameters("candidates do not complete U to V".into()));
        }
        let mut basis: Vec<Vec<u8>> = u.echelon().rows().to_vec();
        for v in &comp {
            for &phi in t.base_frame().elements() {
                basis.push(u.coords(&scale(t, phi, v))?);
            }
        }
        let solver = SpanSolver::new(t.p(), width, &basis).ok_or(Error::DependentBasis)?;
        let offset = u.echelon().rank();
        let images = (0..width)
            .map(|k| solver.solve(&unit(width, k)).expect("basis spans V")[offset..].to_vec())
            .collect();
        Ok(KernelMap { p: t.p(), h: t.h(), out_dim: comp.len(), images })
    }

    /// `G` given pointwise; `f` returns the `out_dim` F_q-coordinates of `G(v)`.
    ///
    /// Fails unless `G` is F_q-linear, onto, and has kernel exactly `U`.
    pub fn from_fn<F>(u: &SubspaceQ, out_dim: usize, f: F) -> Result<Self>
    where
        F: Fn(&[FieldElement]) -> Vec<FieldElement>,
    {
        let t = u.tower();
        let frame = t.base_frame();
        let width = u.echelon().ncols();
        let encode = |v: &[FieldElement]| -> Result<Vec<u8>> {
            let out = f(v);
            if out.len() != out_dim {
                return Err(Error::ShapeMismatch(format!("G returned {} coordinates", out.len())));
            }
            let mut digits = Vec::with_capacity(out_dim * t.h() as usize);
            for x in out {
                if !t.in_subfield_q(x, 1)? {
                    return Err(Error::NotInSubfield { degree: t.h() });
                }
                digits.extend(frame.coords(t, x));
            }
            Ok(digits)
        };
        let mut images = Vec::with_capacity(width);
        for k in 0..width {
            let v = u.vector(&unit(width, k));
            let img = encode(&v)?;
            for &phi in frame.elements() {
                let lhs = encode(&scale(t, phi, &v))?;
                let rhs: Vec<u8> = img.chunks(t.h() as usize).flat_map(|c| {
                    frame.coords(t, t.mul(phi, frame.element(t, c)))
                }).collect();
                if lhs != rhs {
                    return Err(Error::InvalidParameters("G is not F_q-linear".into()));
                }
            }
            images.push(img);
        }
        let g = KernelMap { p: t.p(), h: t.h(), out_dim, images };
        g.check_kernel(u)?;
        Ok(g)
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn apply(&self, coords: &[u8]) -> Vec<u8> {
        let mut out = vec![0u8; self.out_dim * self.h as usize];
        for (img, &c) in self.images.iter().zip(coords) {
            fp::axpy(&mut out, img, c, self.p);
        }
        out
    }

    fn check_kernel(&self, u: &SubspaceQ) -> Result<()> {
        let rank = fp::rank(self.p, self.out_dim * self.h as usize, &self.images);
        let kills_u = u.echelon().rows().iter().all(|r| self.apply(r).iter().all(|&d| d == 0));
        let width = u.echelon().ncols();
        if !kills_u || rank != self.out_dim * self.h as usize || rank + u.echelon().rank() != width {
            return Err(Error::InvalidParameters("ker G is not U".into()));
        }
        Ok(())
    }
}

fn unit(width: usize, k: usize) -> Vec<u8> {
    let mut e = vec![0u8; width];
    e[k] = 1;
    e
}

fn scale(t: &FieldTower, c: FieldElement, v: &[FieldElement]) -> Vec<FieldElement> {
    v.iter().map(|&x| t.mul(c, x)).collect()
}

/// `G o tau_v` as an `m x n` matrix: column `j` is `G(b_j v)` for the domain basis `b`.
fn codeword(u: &SubspaceQ, g: &KernelMap, domain: &QBasis, v: &[FieldElement]) -> Result<Vec<u8>> {
    let t = u.tower();
    let h = t.h() as usize;
    let n = domain.len();
    let m = g.out_dim;
    let mut out = vec![0u8; m * n * h];
    for (j, &b) in domain.elements().iter().enumerate() {
        let col = g.apply(&u.coords(&scale(t, b, v))?);
        for i in 0..m {
            let dst = (i * n + j) * h;
            out[dst..dst + h].copy_from_slice(&col[i * h..(i + 1) * h]);
        }
    }
    Ok(out)
}

/// Checks the shape conditions for `C_{U,G}` and returns `(m, max weight)`.
fn subspace_code_shape(u: &SubspaceQ) -> Result<(usize, u32)> {
    let amb = u.ambient();
    let rn = amb.q_dim();
    if !rn.is_multiple_of(2) || u.dim() != rn / 2 {
        return Err(Error::InvalidParameters(format!("U has rank {}, but rn/2 = {}", u.dim(), rn as f64 / 2.0)));
    }
    let i = u.linear_set_points()?.max_weight;
    if i >= amb.n() {
        return Err(Error::InvalidParameters(format!(
            "U has a point of weight n = {}, so v -> G o tau_v is not injective",
            amb.n()
        )));
    }
    Ok(((rn / 2) as usize, i))
}

/// `C_{U,G} = { G o tau_v : v in V }` with the default `G` and domain basis.
pub fn code_from_subspace(u: &SubspaceQ) -> Result<RankCode> {
    code_from_subspace_with(u, None, None)
}

/// `C_{U,G}` with an explicit `G` and/or domain basis of `F_{q^n}`.
///
/// The default `G` is [`KernelMap::complement_projection`]; the default
/// domain basis is the powers of the generator of `F_{q^n}`.
pub fn code_from_subspace_with(u: &SubspaceQ, g: Option<&KernelMap>, domain: Option<&QBasis>) -> Result<RankCode> {
    let (m, i) = subspace_code_shape(u)?;
    let t = u.tower();
    let n = u.ambient().n();
    let default_g;
    let g = match g {
        Some(g) => {
            g.check_kernel(u)?;
            g
        }
        None => {
            default_g = KernelMap::complement_projection(u)?;
            &default_g
        }
    };
    if g.out_dim != m {
        return Err(Error::ShapeMismatch(format!("G maps onto F_q^{}, expected {m}", g.out_dim)));
    }
    let default_domain;
    let domain = match domain {
        Some(b) => b,
        None => {
            default_domain = QBasis::powers(t, n)?;
            &default_domain
        }
    };
    if domain.len() != n as usize || domain.elements().iter().any(|&b| !t.in_subfield_q(b, n).unwrap_or(false)) {
        return Err(Error::InvalidParameters("domain basis is not a basis of F_{q^n}".into()));
    }
    let width = u.echelon().ncols();
    let gens = (0..width)
        .map(|k| codeword(u, g, domain, &u.vector(&unit(width, k))))
        .collect::<Result<Vec<_>>>()?;
    let code = RankCode::from_generators(
        t,
        m,
        n as usize,
        gens,
        Provenance::FromSubspace,
        domain.tag().clone(),
        BasisTag::Standard { dim: m as u32 },
    )?;
    if code.dim() != u.ambient().q_dim() {
        return Err(Error::Internal("v -> G o tau_v is not injective".into()));
    }
    Ok(code.cite_distance(n - i))
}

/// A verified `H` with `H (G o tau_v) = G' o tau_v` for every `v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceWitness {
    pub h: LinearMapMatrix,
    /// Number of nonzero `v` on which the identity was checked.
    pub verified: u64,
}

/// `H = G'_1 o G_1^(-1)`, where `G_1` is `G` restricted to a complement of `U`.
pub fn equivalence_witness_for_g_change(u: &SubspaceQ, g: &KernelMap, g_bar: &KernelMap) -> Result<EquivalenceWitness> {
    g.check_kernel(u)?;
    g_bar.check_kernel(u)?;
    if g.out_dim != g_bar.out_dim {
        return Err(Error::ShapeMismatch("G and G' have different codomains".into()));
    }
    let t = u.tower();
    let frame = t.base_frame();
    let (m, h) = (g.out_dim, t.h() as usize);
    let width = u.echelon().ncols();
    // Preimages under G of the F_p-basis of F_q^m.
    let images: Vec<Vec<u8>> = (0..width).map(|k| g.apply(&unit(width, k))).collect();
    let solver_rows = {
        let mut e = Echelon::new(t.p(), m * h + width);
        for (k, img) in images.iter().enumerate() {
            let mut row = img.clone();
            row.resize(m * h + width, 0);
            row[m * h + k] = 1;
            e.insert(row);
        }
        e
    };
    let preimage = |target: &[u8]| -> Vec<u8> {
        let mut w = target.to_vec();
        w.resize(m * h + width, 0);
        solver_rows.reduce(&mut w);
        debug_assert!(w[..m * h].iter().all(|&d| d == 0));
        w[m * h..].iter().map(|&d| fp::neg(d, t.p())).collect()
    };
    let one = frame.coords(t, FieldElement::ONE);
    let mut entries = vec![FieldElement::ZERO; m * m];
    for col in 0..m {
        let mut e = vec![0u8; m * h];
        e[col * h..(col + 1) * h].copy_from_slice(&one);
        let img = g_bar.apply(&preimage(&e));
        for row in 0..m {
            entries[row * m + col] = frame.element(t, &img[row * h..(row + 1) * h]);
        }
    }
    let tag = BasisTag::Standard { dim: m as u32 };
    let hm = LinearMapMatrix::new(t, m, m, entries, tag.clone(), tag)?;

    let n = u.ambient().n();
    let domain = QBasis::powers(t, n)?;
    let mut verified = 0u64;
    let mut failure = None;
    let vbasis: Vec<Vec<FieldElement>> = (0..width).map(|k| u.vector(&unit(width, k))).collect();
    let ambient_space = SubspaceQ::span(t, u.ambient(), &vbasis)?;
    ambient_space.for_each_nonzero(|v| {
        let a = codeword(u, g, &domain, v).expect("v lies in V");
        let b = codeword(u, g_bar, &domain, v).expect("v lies in V");
        let mat = |d: &[u8]| {
            let e = d.chunks(h).map(|c| frame.element(t, c)).collect();
            LinearMapMatrix::new(t, m, n as usize, e, domain.tag().clone(), BasisTag::Standard { dim: m as u32 })
                .expect("entries in F_q")
        };
        if hm.mul(&mat(&a)).expect("shapes agree").entries() != mat(&b).entries() {
            failure = Some(v.to_vec());
            return std::ops::ControlFlow::Break(());
        }
        verified += 1;
        std::ops::ControlFlow::Continue(())
    });
    if let Some(v) = failure {
        return Err(Error::Internal(format!("H fails on v = {v:?}")));
    }
    Ok(EquivalenceWitness { h: hm, verified })
}

/// The restriction of every codeword map from `F_{q^N}` to the subfield `F_{q^n}`.
///
/// The code must be written in the powers basis of `F_{q^N}`; the result is
/// written in the powers basis of `F_{q^n}`.
pub fn restriction_code(c: &RankCode, n: u32) -> Result<RankCode> {
    let big = match c.domain {
        BasisTag::Powers { q_degree } => q_degree,
        ref other => {
            return Err(Error::InvalidParameters(format!("restriction needs a powers domain basis, not {other:?}")))
        }
    };
    if n == 0 || big % n != 0 {
        return Err(Error::DegreeMismatch { degree: n, of: big });
    }
    let t = &c.tower;
    let big_basis = QBasis::powers(t, big)?;
    let small = QBasis::powers(t, n)?;
    // Column j: coordinates of the j-th small basis element in the big basis.
    let r_entries: Vec<Vec<FieldElement>> = small
        .elements()
        .iter()
        .map(|&x| big_basis.coords(x).expect("subfield element"))
        .collect();
    let rmat = LinearMapMatrix::new(
        t,
        big as usize,
        n as usize,
        (0..big as usize).flat_map(|k| r_entries.iter().map(move |col| col[k])).collect(),
        small.tag().clone(),
        big_basis.tag().clone(),
    )?;
    let gens = c
        .ech
        .rows()
        .iter()
        .map(|r| Ok(c.matrix(r).mul(&rmat)?.to_fp()))
        .collect::<Result<Vec<_>>>()?;
    RankCode::from_generators(
        t,
        c.m,
        n as usize,
        gens,
        Provenance::Restriction,
        small.tag().clone(),
        c.codomain.clone(),
    )
}

/// `S_f = { (x -> a x + b f(x)) restricted to F_{q^n} : a, b in F_{q^N} }`,
/// as `N x n` matrices, where `f` acts on `F_{q^N}`.
///
/// When `U_f = {(x, f(x))}` is scattered in `V(2N/n, q^n)` the distance
/// `n - 1` is cited from the theorem; otherwise the code is left unverified.
pub fn sheekey_code(f: &LinearizedPoly, n: u32) -> Result<RankCode> {
    let t = f.tower();
    let big = f.degree();
    if n == 0 || !big.is_multiple_of(n) || !(2 * big / n).is_multiple_of(2) {
        return Err(Error::InvalidParameters(format!("need F_{{q^{n}}} inside F_{{q^{big}}} with r = 2N/n even")));
    }
    let u_f = SubspaceQ::image(t, Ambient::new(2, big, n)?, big, |x| vec![x, f.apply(x)])?;
    let domain = QBasis::powers(t, n)?;
    let codomain = QBasis::powers(t, big)?;
    let frame = t.frame_q(big)?;
    let mut gens = Vec::new();
    for &a in frame.elements() {
        gens.push(LinearMapMatrix::from_map(|x| t.mul(a, x), &domain, &codomain)?);
    }
    for &b in frame.elements() {
        gens.push(LinearMapMatrix::from_map(|x| t.mul(b, f.apply(x)), &domain, &codomain)?);
    }
    let code = RankCode::from_matrices(t, &gens, Provenance::Sheekey)?;
    Ok(if u_f.is_scattered() { code.cite_distance(n - 1) } else { code })
}

/// The q-polynomial `f` with `U = { (x, f(x)) : x in F_{q^N} }`.
pub fn graph_polynomial(u: &SubspaceQ) -> Result<LinearizedPoly> {
    let amb = u.ambient();
    let big = amb.slot_degree();
    if amb.slots() != 2 || u.dim() != big {
        return Err(Error::InvalidParameters("U is not a graph inside F_{q^N} x F_{q^N}".into()));
    }
    let t = u.tower();
    let (xs, ys): (Vec<_>, Vec<_>) = u.q_basis().into_iter().map(|v| (v[0], v[1])).unzip();
    let f = LinearizedPoly::interpolate(t, big, &xs, &ys)
        .map_err(|_| Error::InvalidParameters("U projects onto the first slot with a kernel".into()))?;
    if SubspaceQ::image(t, amb, big, |x| vec![x, f.apply(x)])? != *u {
        return Err(Error::Internal("interpolated f does not reproduce U".into()));
    }
    Ok(f)
}

/// The generalized Gabidulin code `{ a_0 x + a_1 x^(q^s) + ... + a_(k-1) x^(q^(s(k-1))) }`
/// on `F_{q^n}`, as `n x n` matrices in the powers basis.
pub fn gabidulin(tower: &Arc<FieldTower>, n: u32, k: u32, s: u32) -> Result<RankCode> {
    if k == 0 || k >= n {
        return Err(Error::InvalidParameters(format!("k = {k} must satisfy 0 < k < n = {n}")));
    }
    if gcd(n as u64, s as u64) != 1 {
        return Err(Error::InvalidParameters(format!("gcd(n, s) = gcd({n}, {s}) must be 1")));
    }
    let basis = QBasis::powers(tower, n)?;
    let frame = tower.frame_q(n)?;
    let mut gens = Vec::new();
    for j in 0..k {
        for &a in frame.elements() {
            let f = |x| tower.mul(a, tower.frobenius(x, (s * j) as i64));
            gens.push(LinearMapMatrix::from_map(f, &basis, &basis)?);
        }
    }
    Ok(RankCode::from_matrices(tower, &gens, Provenance::Gabidulin)?.cite_distance(n - k + 1))
}

/// Domain basis `(x, y) -> x w + y` of `F_{q^t} x F_{q^t}`: `w g^j` then `g^j`.
pub fn product_basis(tower: &Arc<FieldTower>, t: u32, omega: FieldElement) -> Result<QBasis> {
    let small = QBasis::powers(tower, t)?;
    let elements = small
        .elements()
        .iter()
        .map(|&g| tower.mul(omega, g))
        .chain(small.elements().iter().copied())
        .collect();
    QBasis::new(tower, elements, BasisTag::ProductPowers { q_degree: t })
}

/// Input for the explicit `F_v` codes.
#[derive(Clone, Copy, Debug)]
pub enum FvSource<'a> {
    Monomial(&'a MonomialParams),
    Plane(&'a PlaneConstructionParams),
}

fn fv_shape(src: FvSource<'_>) -> (u32, u32) {
    match src {
        FvSource::Monomial(p) => (p.t, p.r),
        FvSource::Plane(p) => (p.t, 3),
    }
}

/// `F_v(x, y)` for `v = w v0 + v1`, from the closed formula of the source.
pub fn fv_eval(
    tower: &FieldTower,
    src: FvSource<'_>,
    v0: FieldElement,
    v1: FieldElement,
    x: FieldElement,
    y: FieldElement,
) -> FieldElement {
    let fr = |x: FieldElement, k: u32| tower.frobenius(x, k as i64);
    let (m, add, sub) = (|a, b| tower.mul(a, b), |a, b| tower.add(a, b), |a, b| tower.sub(a, b));
    match src {
        FvSource::Monomial(p) => {
            let (a, i) = (p.a, p.i);
            // x^(q^i) a (A0^(q^i) v0^(q^i) + v1^(q^i)) - x A1 v0 + y^(q^i) a v0^(q^i) - y v1
            let t1 = m(m(fr(x, i), a), add(m(fr(p.a0, i), fr(v0, i)), fr(v1, i)));
            let t3 = m(m(fr(y, i), a), fr(v0, i));
            sub(sub(add(t1, t3), m(m(x, p.a1), v0)), m(y, v1))
        }
        FvSource::Plane(p) => {
            let (a, b, i, j) = (p.a, p.b, p.i, 2 * p.t + p.i);
            let a0i = fr(p.a0, i);
            // x^(q^i)(a A0^(q^i) v0^(q^i) + a v1^(q^i) + b A0^(q^i) v0^(q^(2t+i)) + b v1^(q^(2t+i)))
            //   + y^(q^i)(a v0^(q^i) + b v0^(q^(2t+i))) - x A1 v0 - y v1
            let cx = add(
                add(m(m(a, a0i), fr(v0, i)), m(a, fr(v1, i))),
                add(m(m(b, a0i), fr(v0, j)), m(b, fr(v1, j))),
            );
            let cy = add(m(a, fr(v0, i)), m(b, fr(v0, j)));
            sub(sub(add(m(fr(x, i), cx), m(fr(y, i), cy)), m(m(x, p.a1), v0)), m(y, v1))
        }
    }
}

/// `{ F_v : v = w v0 + v1 }` with `F_v : F_{q^t} x F_{q^t} -> F_{q^{rt}}` given
/// by the closed formulas, as `rt x 2t` matrices.
pub fn explicit_fv_code(tower: &Arc<FieldTower>, src: FvSource<'_>) -> Result<RankCode> {
    let (t, r) = fv_shape(src);
    let small = QBasis::powers(tower, t)?;
    let codomain = QBasis::powers(tower, r * t)?;
    let frame = tower.frame_q(r * t)?;
    let domain_tag = BasisTag::ProductPowers { q_degree: t };
    let column = |v0, v1, x, y| codomain.coords(fv_eval(tower, src, v0, v1, x, y));
    let mut gens = Vec::new();
    let zero = FieldElement::ZERO;
    let vs = frame.elements().iter().map(|&e| (e, zero)).chain(frame.elements().iter().map(|&e| (zero, e)));
    for (v0, v1) in vs {
        let cols: Vec<Vec<FieldElement>> = small
            .elements()
            .iter()
            .map(|&g| (g, zero))
            .chain(small.elements().iter().map(|&g| (zero, g)))
            .map(|(x, y)| column(v0, v1, x, y).ok_or_else(|| Error::Internal("F_v leaves F_{q^rt}".into())))
            .collect::<Result<_>>()?;
        let (rows, ncols) = ((r * t) as usize, (2 * t) as usize);
        let entries = (0..rows).flat_map(|i| cols.iter().map(move |c| c[i])).collect();
        gens.push(LinearMapMatrix::new(tower, rows, ncols, entries, domain_tag.clone(), codomain.tag().clone())?);
    }
    Ok(RankCode::from_matrices(tower, &gens, Provenance::ExplicitFv)?.cite_distance(2 * t - 1))
}

/// `G(x w + y) = f(x) - y` on `V = F_{q^{2rt}}`, coordinates in the powers
/// basis of `F_{q^{rt}}`.
pub fn fv_kernel_map(u: &SubspaceQ, src: FvSource<'_>) -> Result<KernelMap> {
    let t = u.tower();
    let (tt, r) = fv_shape(src);
    let omega = match src {
        FvSource::Monomial(p) => p.omega,
        FvSource::Plane(p) => p.omega,
    };
    let rt = r * tt;
    let f = |x: FieldElement| match src {
        FvSource::Monomial(p) => t.mul(p.a, t.frobenius(x, p.i as i64)),
        FvSource::Plane(p) => binomial(t, p.t, p.i, p.a, p.b, x),
    };
    let half = QBasis::powers(t, rt)?;
    let split = product_basis(t, rt, omega)?;
    KernelMap::from_fn(u, rt as usize, |v| {
        let c = split.coords(v[0]).expect("v lies in F_{q^2rt}");
        let (xc, yc) = c.split_at(rt as usize);
        let x = half.combine(xc);
        let y = half.combine(yc);
        half.coords(t.sub(f(x), y)).expect("f(x) - y lies in F_{q^rt}")
    })
}

/// `U = { x + w f(x) : x in F_{q^N} }` recovered from `U` of rank `N` in `F_{q^{2N}}`.
#[derive(Clone, Debug)]
pub struct OmegaF {
    pub omega: FieldElement,
    pub f: LinearizedPoly,
    /// Candidates for `w` examined, the accepted one included.
    pub examined: u64,
}

pub fn recover_omega_f(u: &SubspaceQ) -> Result<OmegaF> {
    let amb = u.ambient();
    if amb.slots() != 1 || !amb.slot_degree().is_multiple_of(2) {
        return Err(Error::InvalidParameters("U must live in a field F_{q^{rn}} with rn even".into()));
    }
    let big = amb.slot_degree();
    let half = big / 2;
    if u.dim() != half {
        return Err(Error::InvalidParameters(format!("U has rank {}, expected {half}", u.dim())));
    }
    let t = u.tower();
    let half_frame = t.frame_q(half)?;
    let mut examined = 0u64;
    for w in t.subfield_elements_q(big)? {
        if t.in_subfield_q(w, half)? {
            continue;
        }
        examined += 1;
        let mut ech = u.echelon().clone();
        let full = half_frame.elements().iter().all(|&b| ech.insert(u.coords(&[t.mul(w, b)]).expect("in V")));
        if !full {
            continue;
        }
        let split = product_basis(t, half, w)?;
        let hb = QBasis::powers(t, half)?;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for v in u.q_basis() {
            let c = split.coords(v[0]).expect("v lies in F_{q^2N}");
            let (yc, xc) = c.split_at(half as usize);
            xs.push(hb.combine(xc));
            ys.push(hb.combine(yc));
        }
        let f = LinearizedPoly::interpolate(t, half, &xs, &ys)?;
        let back = SubspaceQ::image(t, amb, half, |x| vec![t.add(x, t.mul(w, f.apply(x)))])?;
        if back != *u {
            return Err(Error::Internal("reconstructed subspace differs from U".into()));
        }
        return Ok(OmegaF { omega: w, f, examined });
    }
    Err(Error::Internal("every w meets U, contradicting the counting argument".into()))
}

impl PartialOrd for DistanceReport {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.d.cmp(&other.d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tower(p: u32, h: u32, d: u32) -> Arc<FieldTower> {
        Arc::new(FieldTower::over(p, h, d, &[1, d]).unwrap())
    }

    #[test]
    fn full_matrix_space_has_distance_one() {
        let t = tower(2, 1, 3);
        let gens = (0..6).map(|k| unit(6, k));
        let mut c = RankCode::from_generators(&t, 2, 3, gens, Provenance::Derived, BasisTag::Standard { dim: 3 }, BasisTag::Standard { dim: 2 }).unwrap();
        let r = c.min_rank_distance(ScanMode::exhaustive()).unwrap();
        assert_eq!(r.d, 1);
        assert!(c.is_mrd().unwrap());
        assert_eq!(c.status(), VerificationStatus::Exhaustive);
    }

    #[test]
    fn single_invertible_matrix_is_not_mrd() {
        let t = tower(2, 1, 2);
        let mut c = RankCode::from_generators(&t, 2, 2, [vec![1, 0, 0, 1]], Provenance::Derived, BasisTag::Standard { dim: 2 }, BasisTag::Standard { dim: 2 }).unwrap();
        assert_eq!(c.is_mrd().unwrap_err(), Error::DistanceUnknown);
        assert_eq!(c.min_rank_distance(ScanMode::exhaustive()).unwrap().d, 2);
        assert!(!c.is_mrd().unwrap());
    }

    #[test]
    fn scalar_maps_have_full_distance() {
        for (p, n) in [(2, 4), (3, 3)] {
            let t = tower(p, 1, n);
            let mut c = gabidulin(&t, n, 1, 1).unwrap();
            assert_eq!(c.min_rank_distance(ScanMode::exhaustive()).unwrap().d, n);
            assert!(c.is_mrd().unwrap());
        }
    }

    #[test]
    fn gabidulin_preconditions() {
        let t = tower(2, 1, 4);
        assert!(gabidulin(&t, 4, 4, 1).is_err());
        assert!(gabidulin(&t, 4, 2, 2).is_err());
    }

    #[test]
    fn small_rank_matches_echelon() {
        let rows = [[1u8, 2, 0], [2, 1, 0], [0, 0, 1]];
        let mut flat: Vec<u8> = rows.iter().flatten().copied().collect();
        let generic = fp::rank(3, 3, &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>());
        assert_eq!(small_rank(3, 3, 3, &mut flat) as usize, generic);
    }

    #[test]
    fn generic_scan_agrees_with_binary_scan() {
        let t = tower(2, 1, 4);
        let c = gabidulin(&t, 4, 2, 1).unwrap();
        assert_eq!(c.scan_binary(), c.scan_generic());
    }

    #[test]
    fn budget_is_enforced() {
        let t = tower(2, 1, 4);
        let mut c = gabidulin(&t, 4, 2, 1).unwrap();
        let e = c.min_rank_distance(ScanMode::Exhaustive { budget: 100 }).unwrap_err();
        assert_eq!(e, Error::BudgetExceeded { needed: 256, budget: 100 });
    }

    #[test]
    fn sampling_only_bounds() {
        let t = tower(2, 1, 4);
        let mut c = gabidulin(&t, 4, 2, 1).unwrap();
        let r = c.min_rank_distance(ScanMode::Sample { count: 50, seed: 7 }).unwrap();
        assert!(!r.exact && r.d >= 3);
        assert_eq!(c.status(), VerificationStatus::TheoremCited);
        assert_eq!(c.d_min(), None);
    }

    #[test]
    fn transpose_is_an_involution() {
        let t = tower(3, 1, 3);
        let c = gabidulin(&t, 3, 2, 1).unwrap();
        let tt = c.transpose().transpose();
        assert!(codes_equal(&c, &tt).unwrap());
        assert_eq!(c.transpose().dim(), c.dim());
    }

    #[test]
    fn over_f4_entries() {
        let t = tower(2, 2, 3);
        let mut c = gabidulin(&t, 3, 2, 1).unwrap();
        assert_eq!(c.dim(), 6);
        assert_eq!(c.min_rank_distance(ScanMode::exhaustive()).unwrap().d, 2);
        assert!(c.is_mrd().unwrap());
        assert_eq!(c.q_generators().len(), 6);
    }

    #[test]
    fn kernel_map_rejects_wrong_kernel() {
        let t = tower(2, 1, 3);
        let u = SubspaceQ::image(&t, Ambient::tuples(2, 3).unwrap(), 3, |x| vec![x, t.frobenius(x, 1)]).unwrap();
        let w = SubspaceQ::image(&t, Ambient::tuples(2, 3).unwrap(), 3, |x| vec![x, FieldElement::ZERO]).unwrap();
        let g = KernelMap::complement_projection(&w).unwrap();
        assert!(code_from_subspace_with(&u, Some(&g), None).is_err());
    }
}
