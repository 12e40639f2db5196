//! Finite field towers.
//!
//! A [`FieldTower`] is a single ambient field `F_{p^M}` together with the
//! lattice of its subfields. Every field used by a construction is realized
//! inside one ambient field, as the Frobenius-fixed subset
//! `F_{p^d} = { x : x^{p^d} = x }` for `d | M`, so elements of different
//! subfields can be mixed freely without embedding maps.
//!
//! The ambient field is `F_p[x] / (f)` where `f` is the smallest monic
//! irreducible polynomial of degree `M`, with polynomials ordered by the
//! integer `sum c_i p^i` of their coefficients. Elements are ordered the
//! same way, and the distinguished primitive element `mu` is the least
//! element of multiplicative order `p^M - 1`. Equal inputs therefore always
//! produce identical towers.
//!
//! The tower also fixes a base field `F_q`, `q = p^h`. Degrees are in
//! p-units (`F_{p^d}`) for [`FieldTower::in_subfield`] and
//! [`FieldTower::subfield_generator`], and in q-units (`F_{q^d}`) for the
//! Frobenius `x -> x^{q^k}`, norms and traces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fp::Echelon;

/// An element of the ambient field of some [`FieldTower`].
///
/// Stored as the packed integer `sum c_i p^i` of its coordinates in the
/// polynomial basis; the derived `Ord` is the canonical element order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldElement(u64);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    pub fn index(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// Serializable description of a tower; enough to rebuild it exactly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerDescriptor {
    pub format: String,
    pub p: u32,
    pub h: u32,
    #[serde(rename = "M")]
    pub m: u32,
    pub modulus: Vec<u8>,
    pub declared_degrees: Vec<u32>,
}

pub const TOWER_FORMAT: &str = "scattered-mrd/tower/v1";

/// An F_p-basis of a subfield in reduced echelon form.
///
/// The coordinates of `x` are its digits at the pivot positions, which makes
/// this the canonical way to turn subfield elements into F_p-vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    degree: u32,
    elements: Vec<FieldElement>,
    pivots: Vec<usize>,
}

impl Frame {
    /// Degree over `F_p`.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn elements(&self) -> &[FieldElement] {
        &self.elements
    }

    pub fn coords(&self, tower: &FieldTower, x: FieldElement) -> Vec<u8> {
        let d = tower.digits(x);
        self.pivots.iter().map(|&i| d[i]).collect()
    }

    pub fn element(&self, tower: &FieldTower, coords: &[u8]) -> FieldElement {
        let mut acc = FieldElement::ZERO;
        for (&c, &e) in coords.iter().zip(&self.elements) {
            if c != 0 {
                acc = tower.add(acc, tower.mul(tower.scalar(c as u32), e));
            }
        }
        acc
    }
}

#[derive(Clone, Debug)]
pub struct FieldTower {
    p: u32,
    h: u32,
    m: u32,
    size: u64,
    modulus: Vec<u8>,
    declared: Vec<u32>,
    mu: FieldElement,
    /// Distinct primes dividing `p^M - 1`.
    order_primes: Vec<u64>,
    /// `x^(M+j) mod f` for `j < M`, packed.
    reduction: Vec<u64>,
    /// `frob[k][j] = (x^j)^(p^k)`.
    frob: Vec<Vec<FieldElement>>,
    frob_digits: Vec<Vec<Vec<u8>>>,
    base_frame: Frame,
}

impl PartialEq for FieldTower {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.h == other.h && self.m == other.m && self.modulus == other.modulus
    }
}

impl Eq for FieldTower {}

impl FieldTower {
    /// `F_{p^m}` with base field `F_p`.
    pub fn new(p: u32, m: u32, declared_degrees: &[u32]) -> Result<Self> {
        Self::with_base(p, 1, m, declared_degrees)
    }

    /// `F_{q^q_degree}` with `q = p^h`; declared degrees are given in q-units.
    pub fn over(p: u32, h: u32, q_degree: u32, declared_q_degrees: &[u32]) -> Result<Self> {
        let declared: Vec<u32> = declared_q_degrees.iter().map(|d| d * h).collect();
        Self::with_base(p, h, h * q_degree, &declared)
    }

    /// `F_{p^m}` with base field `F_{p^h}`; all degrees in p-units.
    pub fn with_base(p: u32, h: u32, m: u32, declared_degrees: &[u32]) -> Result<Self> {
        if !is_prime(p as u64) {
            return Err(Error::NotPrime(p as u64));
        }
        if p > 255 {
            return Err(Error::Unsupported(format!("p = {p} (characteristic must be below 256)")));
        }
        if m == 0 || h == 0 {
            return Err(Error::InvalidParameters("extension degrees must be positive".into()));
        }
        if !m.is_multiple_of(h) {
            return Err(Error::DegreeMismatch { degree: h, of: m });
        }
        let size = (p as u64)
            .checked_pow(m)
            .filter(|&s| s <= 1 << 62)
            .ok_or_else(|| Error::Unsupported(format!("{p}^{m} exceeds 2^62")))?;
        let mut declared: Vec<u32> = declared_degrees.to_vec();
        for &d in &declared {
            if d == 0 || !m.is_multiple_of(d) {
                return Err(Error::DegreeMismatch { degree: d, of: m });
            }
        }
        declared.sort_unstable();
        declared.dedup();

        let modulus = smallest_irreducible(p, m);
        let mut tower = FieldTower {
            p,
            h,
            m,
            size,
            reduction: Vec::new(),
            modulus,
            declared,
            mu: FieldElement::ONE,
            order_primes: prime_factors(size - 1),
            frob: Vec::new(),
            frob_digits: Vec::new(),
            base_frame: Frame { degree: 0, elements: vec![], pivots: vec![] },
        };
        tower.reduction = (0..m)
            .map(|j| {
                let mut poly = vec![0u32; (m + j + 1) as usize];
                poly[(m + j) as usize] = 1;
                let r = poly::rem(&poly, &tower.modulus_u32(), p);
                tower.pack(&r).0
            })
            .collect();
        tower.build_frobenius();
        tower.mu = (1..size)
            .map(FieldElement)
            .find(|&a| tower.is_primitive(a))
            .expect("a finite field has a primitive element");
        tower.base_frame = tower.frame(h)?;
        Ok(tower)
    }

    /// Rebuilds a tower from its description, rejecting any mismatch.
    pub fn from_descriptor(d: &TowerDescriptor) -> Result<Self> {
        if d.format != TOWER_FORMAT {
            return Err(Error::Malformed(format!("unknown tower format {:?}", d.format)));
        }
        let t = Self::with_base(d.p, d.h, d.m, &d.declared_degrees)?;
        if t.modulus != d.modulus {
            return Err(Error::Malformed("modulus is not the canonical one for these parameters".into()));
        }
        Ok(t)
    }

    pub fn descriptor(&self) -> TowerDescriptor {
        TowerDescriptor {
            format: TOWER_FORMAT.to_string(),
            p: self.p,
            h: self.h,
            m: self.m,
            modulus: self.modulus.clone(),
            declared_degrees: self.declared.clone(),
        }
    }

    fn build_frobenius(&mut self) {
        let m = self.m as usize;
        let basis: Vec<FieldElement> = (0..m).map(|j| self.x_pow(j as u32)).collect();
        let mut frob = vec![basis.clone()];
        for k in 1..m {
            let prev: &Vec<FieldElement> = &frob[k - 1];
            let next = prev.iter().map(|&e| self.pow(e, self.p as u128)).collect();
            frob.push(next);
        }
        self.frob_digits = frob
            .iter()
            .map(|row| row.iter().map(|&e| self.digits(e)).collect())
            .collect();
        self.frob = frob;
    }

    fn x_pow(&self, j: u32) -> FieldElement {
        // For M = 1 the modulus is x itself, so x reduces to 0.
        let x = if self.m == 1 { FieldElement::ZERO } else { FieldElement(self.p as u64) };
        self.pow(x, j as u128)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// `h` with `q = p^h`.
    pub fn h(&self) -> u32 {
        self.h
    }

    pub fn q(&self) -> u64 {
        (self.p as u64).pow(self.h)
    }

    /// Degree `M` of the ambient field over `F_p`.
    pub fn degree(&self) -> u32 {
        self.m
    }

    /// Degree of the ambient field over `F_q`.
    pub fn q_degree(&self) -> u32 {
        self.m / self.h
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn modulus(&self) -> &[u8] {
        &self.modulus
    }

    pub fn declared_degrees(&self) -> &[u32] {
        &self.declared
    }

    /// The distinguished primitive element of the ambient field.
    pub fn mu(&self) -> FieldElement {
        self.mu
    }

    fn modulus_u32(&self) -> Vec<u32> {
        self.modulus.iter().map(|&c| c as u32).collect()
    }

    fn pack(&self, digits: &[u32]) -> FieldElement {
        let p = self.p as u64;
        let mut acc = 0u64;
        for &d in digits.iter().rev() {
            acc = acc * p + (d as u64 % p);
        }
        FieldElement(acc)
    }

    /// Coordinates in the polynomial basis, lowest degree first.
    pub fn digits(&self, a: FieldElement) -> Vec<u8> {
        let mut out = vec![0u8; self.m as usize];
        self.write_digits(a, &mut out);
        out
    }

    pub(crate) fn write_digits(&self, a: FieldElement, out: &mut [u8]) {
        let mut v = a.0;
        if self.p == 2 {
            for d in out.iter_mut() {
                *d = (v & 1) as u8;
                v >>= 1;
            }
        } else {
            let p = self.p as u64;
            for d in out.iter_mut() {
                *d = (v % p) as u8;
                v /= p;
            }
        }
    }

    pub fn from_digits(&self, digits: &[u8]) -> FieldElement {
        assert!(digits.len() <= self.m as usize, "too many digits");
        if self.p == 2 {
            let mut acc = 0u64;
            for (i, &d) in digits.iter().enumerate() {
                acc |= ((d & 1) as u64) << i;
            }
            FieldElement(acc)
        } else {
            let v: Vec<u32> = digits.iter().map(|&d| d as u32).collect();
            self.pack(&v)
        }
    }

    /// The element with packed index `index`.
    pub fn element(&self, index: u64) -> Result<FieldElement> {
        if index >= self.size {
            return Err(Error::Malformed(format!("element index {index} out of range")));
        }
        Ok(FieldElement(index))
    }

    /// The prime-field element `c * 1`.
    pub fn scalar(&self, c: u32) -> FieldElement {
        FieldElement((c % self.p) as u64)
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if self.p == 2 {
            return FieldElement(a.0 ^ b.0);
        }
        let p = self.p as u64;
        let (mut x, mut y) = (a.0, b.0);
        let (mut acc, mut place) = (0u64, 1u64);
        while x != 0 || y != 0 {
            acc += ((x % p + y % p) % p) * place;
            x /= p;
            y /= p;
            place = place.wrapping_mul(p);
        }
        FieldElement(acc)
    }

    pub fn neg(&self, a: FieldElement) -> FieldElement {
        if self.p == 2 {
            return a;
        }
        let p = self.p as u64;
        let mut x = a.0;
        let (mut acc, mut place) = (0u64, 1u64);
        while x != 0 {
            acc += ((p - x % p) % p) * place;
            x /= p;
            place = place.wrapping_mul(p);
        }
        FieldElement(acc)
    }

    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.0 == 0 || b.0 == 0 {
            return FieldElement::ZERO;
        }
        if self.p == 2 {
            return self.mul_binary(a.0, b.0);
        }
        self.mul_odd(a, b)
    }

    fn mul_binary(&self, a: u64, b: u64) -> FieldElement {
        let m = self.m;
        let mut prod: u128 = 0;
        let (mut x, a) = (b, a as u128);
        let mut shift = 0;
        while x != 0 {
            let tz = x.trailing_zeros();
            shift += tz;
            x >>= tz;
            prod ^= a << shift;
            x >>= 1;
            shift += 1;
        }
        let mask = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
        let mut res = (prod as u64) & mask;
        let mut high = prod >> m;
        let mut j = 0;
        while high != 0 {
            if high & 1 == 1 {
                res ^= self.reduction[j];
            }
            high >>= 1;
            j += 1;
        }
        FieldElement(res)
    }

    fn mul_odd(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let m = self.m as usize;
        let p = self.p as u64;
        let mut da = [0u8; 64];
        let mut db = [0u8; 64];
        self.write_digits(a, &mut da[..m]);
        self.write_digits(b, &mut db[..m]);
        let mut conv = [0u64; 128];
        for i in 0..m {
            if da[i] == 0 {
                continue;
            }
            for j in 0..m {
                conv[i + j] += da[i] as u64 * db[j] as u64;
            }
        }
        for k in (m..2 * m - 1).rev() {
            let c = conv[k] % p;
            if c == 0 {
                continue;
            }
            // x^m = -(c_0 + ... + c_{m-1} x^{m-1})
            for i in 0..m {
                conv[k - m + i] += c * ((p - self.modulus[i] as u64) % p);
            }
        }
        let mut acc = 0u64;
        for k in (0..m).rev() {
            acc = acc * p + conv[k] % p;
        }
        FieldElement(acc)
    }

    pub fn pow(&self, a: FieldElement, mut e: u128) -> FieldElement {
        let mut base = a;
        let mut acc = FieldElement::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse.
    ///
    /// # Panics
    ///
    /// Panics on zero, like integer division.
    pub fn inv(&self, a: FieldElement) -> FieldElement {
        assert!(!a.is_zero(), "inverse of zero in F_{}^{}", self.p, self.m);
        self.pow(a, self.size as u128 - 2)
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.mul(a, self.inv(b))
    }

    /// `a^(p^k)`, with `k` taken modulo `M`.
    pub fn frobenius_p(&self, a: FieldElement, k: i64) -> FieldElement {
        let k = k.rem_euclid(self.m as i64) as usize;
        if k == 0 || a.0 < self.p as u64 {
            return a;
        }
        let row = &self.frob[k];
        if self.p == 2 {
            let mut acc = 0u64;
            let mut v = a.0;
            let mut j = 0;
            while v != 0 {
                if v & 1 == 1 {
                    acc ^= row[j].0;
                }
                v >>= 1;
                j += 1;
            }
            return FieldElement(acc);
        }
        let m = self.m as usize;
        let mut da = [0u8; 64];
        self.write_digits(a, &mut da[..m]);
        let mut acc = [0u32; 64];
        for (j, &c) in da[..m].iter().enumerate() {
            if c == 0 {
                continue;
            }
            for (s, &d) in acc.iter_mut().zip(&self.frob_digits[k][j]) {
                *s += c as u32 * d as u32;
            }
        }
        let digits: Vec<u32> = acc[..m].to_vec();
        self.pack(&digits)
    }

    /// `a^(q^k)`, with `k` taken modulo the q-degree of the ambient field.
    pub fn frobenius(&self, a: FieldElement, k: i64) -> FieldElement {
        self.frobenius_p(a, k * self.h as i64)
    }

    fn check_divides(&self, d: u32) -> Result<()> {
        if d == 0 || !self.m.is_multiple_of(d) {
            return Err(Error::DegreeMismatch { degree: d, of: self.m });
        }
        Ok(())
    }

    /// `x^(p^d) == x`, i.e. `x` lies in `F_{p^d}`.
    pub fn in_subfield(&self, x: FieldElement, d: u32) -> Result<bool> {
        self.check_divides(d)?;
        Ok(self.frobenius_p(x, d as i64) == x)
    }

    /// Same as [`in_subfield`](Self::in_subfield) with `d` in q-units.
    pub fn in_subfield_q(&self, x: FieldElement, d: u32) -> Result<bool> {
        self.in_subfield(x, d * self.h)
    }

    /// `mu^((p^M - 1) / (p^d - 1))`, a primitive element of `F_{p^d}`.
    pub fn subfield_generator(&self, d: u32) -> Result<FieldElement> {
        self.check_divides(d)?;
        let big = self.size as u128 - 1;
        let small = (self.p as u128).pow(d) - 1;
        Ok(self.pow(self.mu, big / small))
    }

    /// Generator of `F_{q^d}^*`, `d` in q-units.
    pub fn subfield_generator_q(&self, d: u32) -> Result<FieldElement> {
        self.subfield_generator(d * self.h)
    }

    /// Relative norm `N_{q^n/q^k}(x) = x^(1 + q^k + ... + q^(n-k))`.
    pub fn relative_norm(&self, x: FieldElement, n_deg: u32, h_deg: u32) -> Result<FieldElement> {
        self.check_relative(x, n_deg, h_deg)?;
        let mut acc = FieldElement::ONE;
        for j in 0..n_deg / h_deg {
            acc = self.mul(acc, self.frobenius(x, (h_deg * j) as i64));
        }
        Ok(acc)
    }

    /// Relative trace `Tr_{q^n/q^k}(x) = x + x^(q^k) + ... + x^(q^(n-k))`.
    pub fn relative_trace(&self, x: FieldElement, n_deg: u32, h_deg: u32) -> Result<FieldElement> {
        self.check_relative(x, n_deg, h_deg)?;
        let mut acc = FieldElement::ZERO;
        for j in 0..n_deg / h_deg {
            acc = self.add(acc, self.frobenius(x, (h_deg * j) as i64));
        }
        Ok(acc)
    }

    fn check_relative(&self, x: FieldElement, n_deg: u32, h_deg: u32) -> Result<()> {
        if h_deg == 0 || !n_deg.is_multiple_of(h_deg) {
            return Err(Error::DegreeMismatch { degree: h_deg, of: n_deg });
        }
        if !self.in_subfield_q(x, n_deg)? {
            return Err(Error::NotInSubfield { degree: n_deg * self.h });
        }
        Ok(())
    }

    fn is_primitive(&self, a: FieldElement) -> bool {
        if a.is_zero() {
            return false;
        }
        let n = self.size - 1;
        self.order_primes.iter().all(|&l| self.pow(a, (n / l) as u128) != FieldElement::ONE)
    }

    /// Multiplicative order of a nonzero element.
    pub fn multiplicative_order(&self, a: FieldElement) -> u64 {
        assert!(!a.is_zero(), "zero has no multiplicative order");
        let mut n = self.size - 1;
        for &l in &self.order_primes {
            while n.is_multiple_of(l) && self.pow(a, (n / l) as u128) == FieldElement::ONE {
                n /= l;
            }
        }
        n
    }

    /// The reduced-echelon F_p-basis of `F_{p^d}`.
    pub fn frame(&self, d: u32) -> Result<Frame> {
        let gen = self.subfield_generator(d)?;
        let mut ech = Echelon::new(self.p, self.m as usize);
        let mut power = FieldElement::ONE;
        for _ in 0..d {
            ech.insert(self.digits(power));
            power = self.mul(power, gen);
        }
        debug_assert_eq!(ech.rank(), d as usize);
        Ok(Frame {
            degree: d,
            elements: ech.rows().iter().map(|r| self.from_digits(r)).collect(),
            pivots: ech.pivots().to_vec(),
        })
    }

    /// Frame of `F_{q^d}`, `d` in q-units.
    pub fn frame_q(&self, d: u32) -> Result<Frame> {
        self.frame(d * self.h)
    }

    /// The frame of the base field `F_q`.
    pub fn base_frame(&self) -> &Frame {
        &self.base_frame
    }

    /// All elements of `F_{p^d}` in canonical order.
    pub fn subfield_elements(&self, d: u32) -> Result<Vec<FieldElement>> {
        let frame = self.frame(d)?;
        let count = (self.p as u64).pow(d);
        let mut out: Vec<FieldElement> = (0..count)
            .map(|idx| {
                let mut c = Vec::with_capacity(d as usize);
                let mut v = idx;
                for _ in 0..d {
                    c.push((v % self.p as u64) as u8);
                    v /= self.p as u64;
                }
                frame.element(self, &c)
            })
            .collect();
        out.sort_unstable();
        Ok(out)
    }

    /// All elements of `F_{q^d}` in canonical order, `d` in q-units.
    pub fn subfield_elements_q(&self, d: u32) -> Result<Vec<FieldElement>> {
        self.subfield_elements(d * self.h)
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn smallest_irreducible(p: u32, m: u32) -> Vec<u8> {
    let total = (p as u64).pow(m);
    for low in 0..total {
        let mut coeffs = Vec::with_capacity(m as usize + 1);
        let mut v = low;
        for _ in 0..m {
            coeffs.push((v % p as u64) as u32);
            v /= p as u64;
        }
        coeffs.push(1);
        if m > 1 && coeffs[0] == 0 {
            continue;
        }
        if poly::is_irreducible(&coeffs, p) {
            return coeffs.into_iter().map(|c| c as u8).collect();
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

/// Dense polynomials over `F_p`, lowest degree first. Only what the
/// irreducibility test needs.
mod poly {
    pub fn trim(a: &mut Vec<u32>) {
        while a.last() == Some(&0) {
            a.pop();
        }
    }

    pub fn rem(a: &[u32], f: &[u32], p: u32) -> Vec<u32> {
        let mut r: Vec<u32> = a.iter().map(|&c| c % p).collect();
        trim(&mut r);
        let mut f = f.to_vec();
        trim(&mut f);
        let df = f.len() - 1;
        let lead_inv = crate::fp::inv_mod(f[df] as u8, p) as u32;
        while r.len() > df {
            let dr = r.len() - 1;
            let c = r[dr] * lead_inv % p;
            for i in 0..=df {
                r[dr - df + i] = (r[dr - df + i] + (p - c) * f[i]) % p;
            }
            trim(&mut r);
        }
        r
    }

    pub fn mul_mod(a: &[u32], b: &[u32], f: &[u32], p: u32) -> Vec<u32> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut c = vec![0u32; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                c[i + j] = (c[i + j] + x * y) % p;
            }
        }
        rem(&c, f, p)
    }

    pub fn pow_mod(a: &[u32], mut e: u64, f: &[u32], p: u32) -> Vec<u32> {
        let mut base = rem(a, f, p);
        let mut acc = vec![1u32];
        while e > 0 {
            if e & 1 == 1 {
                acc = mul_mod(&acc, &base, f, p);
            }
            base = mul_mod(&base, &base, f, p);
            e >>= 1;
        }
        acc
    }

    pub fn gcd(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        trim(&mut a);
        trim(&mut b);
        while !b.is_empty() {
            let r = rem(&a, &b, p);
            a = b;
            b = r;
        }
        a
    }

    fn sub(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let n = a.len().max(b.len());
        let mut out: Vec<u32> = (0..n)
            .map(|i| {
                let x = a.get(i).copied().unwrap_or(0);
                let y = b.get(i).copied().unwrap_or(0);
                (x + p - y % p) % p
            })
            .collect();
        trim(&mut out);
        out
    }

    /// Rabin's test: `f | x^(p^n) - x` and `gcd(f, x^(p^(n/l)) - x) = 1`
    /// for every prime `l | n`.
    pub fn is_irreducible(f: &[u32], p: u32) -> bool {
        let n = f.len() - 1;
        if n <= 1 {
            return n == 1;
        }
        let x = vec![0, 1];
        let mut frob = Vec::with_capacity(n + 1);
        let mut cur = rem(&x, f, p);
        frob.push(cur.clone());
        for _ in 0..n {
            cur = pow_mod(&cur, p as u64, f, p);
            frob.push(cur.clone());
        }
        if !sub(&frob[n], &x, p).is_empty() {
            return false;
        }
        super::prime_factors(n as u64).into_iter().all(|l| {
            let g = gcd(&sub(&frob[n / l as usize], &x, p), f, p);
            g.len() == 1
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_field_of_order_two() {
        let t = FieldTower::new(2, 1, &[1]).unwrap();
        assert_eq!(t.modulus(), &[0, 1]);
        assert_eq!(t.size(), 2);
        assert_eq!(t.mu(), FieldElement::ONE);
        assert_eq!(t.mul(FieldElement::ONE, FieldElement::ONE), FieldElement::ONE);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(FieldTower::new(4, 2, &[1]).unwrap_err(), Error::NotPrime(4));
        assert_eq!(
            FieldTower::new(2, 4, &[3]).unwrap_err(),
            Error::DegreeMismatch { degree: 3, of: 4 }
        );
        let t = FieldTower::new(2, 4, &[1, 2, 4]).unwrap();
        assert!(t.subfield_generator(3).is_err());
        assert!(t.in_subfield(t.mu(), 3).is_err());
    }

    #[test]
    fn frobenius_fixes_subfields() {
        let t = FieldTower::new(3, 4, &[1, 2, 4]).unwrap();
        let g = t.subfield_generator(2).unwrap();
        assert!(t.in_subfield(g, 2).unwrap());
        assert!(!t.in_subfield(t.mu(), 2).unwrap());
        assert_eq!(t.frobenius_p(t.mu(), 4), t.mu());
        assert_eq!(t.frobenius_p(t.mu(), 1), t.pow(t.mu(), 3));
    }

    #[test]
    fn norm_rejects_outside_elements() {
        let t = FieldTower::new(2, 6, &[1, 2, 3, 6]).unwrap();
        assert!(t.relative_norm(t.mu(), 3, 1).is_err());
        assert!(t.relative_norm(FieldElement::ONE, 3, 2).is_err());
        assert_eq!(t.relative_norm(FieldElement::ZERO, 6, 2).unwrap(), FieldElement::ZERO);
    }

    #[test]
    fn descriptor_roundtrip() {
        let t = FieldTower::over(2, 2, 3, &[1, 3]).unwrap();
        let d = t.descriptor();
        assert_eq!(d.declared_degrees, vec![2, 6]);
        assert_eq!(FieldTower::from_descriptor(&d).unwrap(), t);
        let mut bad = d.clone();
        bad.modulus[0] ^= 1;
        assert!(FieldTower::from_descriptor(&bad).is_err());
    }

    /// Smallest monic irreducible by trial division against every monic
    /// polynomial of degree at most M/2.
    fn oracle_modulus(p: u32, m: u32) -> Vec<u8> {
        let to_poly = |idx: u64, deg: u32| -> Vec<u32> {
            let mut v: Vec<u32> = (0..deg).map(|i| (idx / (p as u64).pow(i) % p as u64) as u32).collect();
            v.push(1);
            v
        };
        let divides = |g: &[u32], f: &[u32]| poly::rem(f, g, p).is_empty();
        for low in 0..(p as u64).pow(m) {
            let f = to_poly(low, m);
            if m > 1 && f[0] == 0 {
                continue;
            }
            let reducible = (1..=m / 2)
                .any(|d| (0..(p as u64).pow(d)).any(|g| divides(&to_poly(g, d), &f)));
            if !reducible {
                return f.into_iter().map(|c| c as u8).collect();
            }
        }
        unreachable!()
    }

    #[test]
    fn canonical_moduli() {
        assert_eq!(FieldTower::new(2, 4, &[1, 2, 4]).unwrap().modulus(), &[1, 1, 0, 0, 1]);
        assert_eq!(FieldTower::new(3, 2, &[1, 2]).unwrap().modulus(), &[1, 0, 1]);
        for (p, m) in [(2, 2), (2, 3), (2, 4), (2, 6), (2, 8), (3, 2), (3, 3), (3, 4), (5, 2), (5, 3), (7, 2)] {
            let t = FieldTower::new(p, m, &[]).unwrap();
            assert_eq!(t.modulus(), oracle_modulus(p, m).as_slice(), "p={p} M={m}");
        }
    }

    #[test]
    fn mu_is_least_primitive() {
        for (p, m) in [(2, 4), (2, 6), (3, 2), (3, 4), (5, 2)] {
            let t = FieldTower::new(p, m, &[]).unwrap();
            let n = t.size() - 1;
            let order = |a: FieldElement| {
                let mut x = a;
                let mut k = 1;
                while x != FieldElement::ONE {
                    x = t.mul(x, a);
                    k += 1;
                }
                k
            };
            assert_eq!(order(t.mu()), n);
            assert_eq!(t.multiplicative_order(t.mu()), n);
            assert!((1..t.mu().index()).all(|i| order(FieldElement(i)) < n));
        }
    }

    #[test]
    fn subfield_generator_orders() {
        let t = FieldTower::new(2, 4, &[1, 2, 4]).unwrap();
        assert_eq!(t.subfield_generator(4).unwrap(), t.mu());
        assert_eq!(t.subfield_generator(2).unwrap(), t.pow(t.mu(), 5));
        assert_eq!(t.multiplicative_order(t.subfield_generator(2).unwrap()), 3);
        assert_eq!(t.multiplicative_order(t.subfield_generator(1).unwrap()), 1);
        let t = FieldTower::new(5, 2, &[1, 2]).unwrap();
        assert_eq!(t.multiplicative_order(t.subfield_generator(1).unwrap()), 4);
    }

    #[test]
    fn norm_over_f4() {
        let t = FieldTower::new(2, 2, &[1, 2]).unwrap();
        let a = t.subfield_generator(2).unwrap();
        assert_eq!(t.mul(a, t.mul(a, a)), FieldElement::ONE);
        assert_eq!(t.relative_norm(a, 2, 1).unwrap(), FieldElement::ONE);
        assert_eq!(t.relative_norm(FieldElement::ONE, 2, 1).unwrap(), FieldElement::ONE);
    }

    #[test]
    fn subfield_counts_are_exact() {
        for (p, m) in [(2, 12), (3, 6), (5, 4)] {
            let t = FieldTower::new(p, m, &[]).unwrap();
            for d in (1..=m).filter(|d| m % d == 0) {
                let count = (0..t.size()).filter(|&i| t.in_subfield(FieldElement(i), d).unwrap()).count();
                assert_eq!(count as u64, (p as u64).pow(d));
                assert_eq!(t.subfield_elements(d).unwrap().len() as u64, (p as u64).pow(d));
            }
        }
    }

    #[test]
    fn norm_is_multiplicative_and_lands_in_subfield() {
        for (p, h, nq, hq) in [(2, 1, 6, 2), (2, 2, 3, 1), (3, 1, 4, 2), (3, 2, 2, 1)] {
            let t = FieldTower::over(p, h, nq, &[hq, nq]).unwrap();
            let els = t.subfield_elements_q(nq).unwrap();
            let norms: Vec<_> = els.iter().map(|&x| t.relative_norm(x, nq, hq).unwrap()).collect();
            for (i, &x) in els.iter().enumerate() {
                assert!(t.in_subfield_q(norms[i], hq).unwrap());
                if x.is_zero() {
                    continue;
                }
                let e = (t.q().pow(nq) - 1) / (t.q().pow(hq) - 1);
                assert_eq!(norms[i], t.pow(x, e as u128));
                for (j, &y) in els.iter().enumerate() {
                    assert_eq!(t.relative_norm(t.mul(x, y), nq, hq).unwrap(), t.mul(norms[i], norms[j]));
                }
            }
        }
    }

    #[test]
    fn towers_are_deterministic() {
        let a = FieldTower::over(3, 1, 4, &[1, 2, 4]).unwrap();
        let b = FieldTower::over(3, 1, 4, &[4, 2, 1]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mu(), b.mu());
        assert_eq!(a.descriptor(), b.descriptor());
    }

    #[test]
    fn frames_are_subfield_bases() {
        let t = FieldTower::over(2, 2, 3, &[1, 3]).unwrap();
        let f = t.base_frame();
        assert_eq!(f.elements().len(), 2);
        for x in t.subfield_elements_q(1).unwrap() {
            let c = f.coords(&t, x);
            assert_eq!(f.element(&t, &c), x);
        }
    }
}
