//! Builders for scattered subspaces.
//!
//! The central one is the rank-`3t` scattered subspace of `PG(2, q^{2t})`
//! given by `U = { w x + a x^(q^i) + b x^(q^(2t+i)) : x in F_{q^{3t}} }`.
//! Its coefficients are found in three searches:
//!
//! 1. a non-scattered binomial `f = a' x^(q^i) + b' x^(q^(2t+i))` on
//!    `PG(1, q^{3t})` ([`find_nonscattered_binomial`]);
//! 2. a shift `c` with `c f(x)/x` outside `F_{q^t}` for every `x != 0`
//!    ([`find_shift_c`]);
//! 3. `a = c a'`, `b = c b'`, after which `U` is scattered.
//!
//! Every search scans candidates in canonical element order and records
//! what it looked at in a [`SearchTrace`]. Every builder checks its output
//! exhaustively before returning it.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{gcd, FieldElement, FieldTower};
use crate::linmaps::LinearizedPoly;
use crate::linsets::{Ambient, SubspaceQ};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub label: String,
    /// Candidates looked at, the accepted one included.
    pub examined: u64,
    /// Accepted values: element indices or plain integers, per label.
    pub accepted: Vec<u64>,
}

/// Ordered log of the searches behind a construction.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub steps: Vec<TraceStep>,
}

impl SearchTrace {
    fn push(&mut self, label: &str, examined: u64, accepted: Vec<u64>) {
        self.steps.push(TraceStep { label: label.to_string(), examined, accepted });
    }

    fn extend(&mut self, other: SearchTrace) {
        self.steps.extend(other.steps);
    }
}

/// Parameters of the plane construction. `E` is the element type: field
/// elements in memory, coefficient vectors on disk.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaneConstructionParams<E = FieldElement> {
    pub t: u32,
    pub i: u32,
    pub a_bar: E,
    pub b_bar: E,
    pub lambda_bar: E,
    pub x0: E,
    pub c: E,
    pub a: E,
    pub b: E,
    pub omega: E,
    pub a0: E,
    pub a1: E,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonomialVariant {
    Ex1,
    Ex2,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialParams<E = FieldElement> {
    pub variant: MonomialVariant,
    pub t: u32,
    pub r: u32,
    pub i: u32,
    pub a: E,
    pub omega: E,
    pub a0: E,
    pub a1: E,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoregulusParams<E = FieldElement> {
    pub n: u32,
    pub t_pairs: u32,
    pub s: u32,
    pub beta: E,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WExampleParams<E = FieldElement> {
    pub n: u32,
    pub h_exp: u32,
    pub omega: E,
    pub a_1: E,
    pub a_h: E,
    /// Coefficients of `g` over `F_{q^{2n}}`, `g_coeffs[k]` at `z^(q^k)`.
    pub g_coeffs: Vec<E>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Params<E = FieldElement> {
    Plane(PlaneConstructionParams<E>),
    Monomial(MonomialParams<E>),
    Pseudoregulus(PseudoregulusParams<E>),
    WExample(WExampleParams<E>),
}

impl<E> Params<E> {
    /// Converts every element, e.g. to and from coefficient vectors.
    pub fn try_map<F, R, Err>(self, mut f: F) -> std::result::Result<Params<R>, Err>
    where
        F: FnMut(E) -> std::result::Result<R, Err>,
    {
        Ok(match self {
            Params::Plane(p) => Params::Plane(PlaneConstructionParams {
                t: p.t,
                i: p.i,
                a_bar: f(p.a_bar)?,
                b_bar: f(p.b_bar)?,
                lambda_bar: f(p.lambda_bar)?,
                x0: f(p.x0)?,
                c: f(p.c)?,
                a: f(p.a)?,
                b: f(p.b)?,
                omega: f(p.omega)?,
                a0: f(p.a0)?,
                a1: f(p.a1)?,
            }),
            Params::Monomial(p) => Params::Monomial(MonomialParams {
                variant: p.variant,
                t: p.t,
                r: p.r,
                i: p.i,
                a: f(p.a)?,
                omega: f(p.omega)?,
                a0: f(p.a0)?,
                a1: f(p.a1)?,
            }),
            Params::Pseudoregulus(p) => Params::Pseudoregulus(PseudoregulusParams {
                n: p.n,
                t_pairs: p.t_pairs,
                s: p.s,
                beta: f(p.beta)?,
            }),
            Params::WExample(p) => Params::WExample(WExampleParams {
                n: p.n,
                h_exp: p.h_exp,
                omega: f(p.omega)?,
                a_1: f(p.a_1)?,
                a_h: f(p.a_h)?,
                g_coeffs: p.g_coeffs.into_iter().map(&mut f).collect::<std::result::Result<_, _>>()?,
            }),
        })
    }
}

/// A verified scattered subspace with the data that produced it.
#[derive(Clone, Debug)]
pub struct Construction {
    pub tower: Arc<FieldTower>,
    pub subspace: SubspaceQ,
    pub params: Params,
    pub trace: SearchTrace,
}

fn q_divisors(list: &[u32]) -> Vec<u32> {
    let mut v = list.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// `F_{q^{6t}}` with the subfields the plane construction touches.
pub fn plane_tower(p: u32, h: u32, t: u32) -> Result<Arc<FieldTower>> {
    if t < 2 {
        return Err(Error::InvalidParameters(format!("t = {t}, but t must be at least 2")));
    }
    let declared = q_divisors(&[1, 3, t, 2 * t, 3 * t, 6 * t]);
    Ok(Arc::new(FieldTower::over(p, h, 6 * t, &declared)?))
}

fn check_plane_inputs(tower: &FieldTower, t: u32, i: u32) -> Result<()> {
    if t < 2 {
        return Err(Error::InvalidParameters(format!("t = {t}, but t must be at least 2")));
    }
    if i == 0 || i >= 3 * t {
        return Err(Error::InvalidParameters(format!("i = {i} outside 1..={}", 3 * t - 1)));
    }
    if !tower.q_degree().is_multiple_of(3 * t) {
        return Err(Error::DegreeMismatch { degree: 3 * t, of: tower.q_degree() });
    }
    Ok(())
}

fn require_coprime(i: u32, t: u32) -> Result<()> {
    if gcd(i as u64, t as u64) != 1 {
        return Err(Error::InvalidParameters(format!("gcd(i, t) = gcd({i}, {t}) must be 1")));
    }
    Ok(())
}

fn require_in(tower: &FieldTower, x: FieldElement, d: u32) -> Result<()> {
    if !tower.in_subfield_q(x, d)? {
        return Err(Error::NotInSubfield { degree: d * tower.h() });
    }
    Ok(())
}

/// `(x - x^(q^i))(x^(q^t) - x^(q^(t+i)))(x^(q^2t) - x^(q^(2t+i)))
///  + (x^(q^(2t+i)) - x)(x^(q^i) - x^(q^t))(x^(q^(t+i)) - x^(q^2t))`.
///
/// Outside `F_{q^3}` its zeros are exactly the `l` with `N(alpha_l) = -1`.
pub fn g_eval(tower: &FieldTower, t: u32, i: u32, x: FieldElement) -> Result<FieldElement> {
    require_coprime(i, t)?;
    require_in(tower, x, 3 * t)?;
    let fr = |k: u32| tower.frobenius(x, k as i64);
    let d = |a: FieldElement, b: FieldElement| tower.sub(a, b);
    let m3 = |a, b, c| tower.mul(tower.mul(a, b), c);
    let first = m3(d(x, fr(i)), d(fr(t), fr(t + i)), d(fr(2 * t), fr(2 * t + i)));
    let second = m3(d(fr(2 * t + i), x), d(fr(i), fr(t)), d(fr(t + i), fr(2 * t)));
    Ok(tower.add(first, second))
}

/// `(l - l^(q^i)) / (l^(q^(2t+i)) - l)`, or `None` where the denominator vanishes.
pub fn alpha_lambda(tower: &FieldTower, t: u32, i: u32, l: FieldElement) -> Option<FieldElement> {
    let den = tower.sub(tower.frobenius(l, (2 * t + i) as i64), l);
    if den.is_zero() {
        return None;
    }
    Some(tower.div(tower.sub(l, tower.frobenius(l, i as i64)), den))
}

/// `a x^(q^i) + b x^(q^(2t+i))`.
pub fn binomial(tower: &FieldTower, t: u32, i: u32, a: FieldElement, b: FieldElement, x: FieldElement) -> FieldElement {
    tower.add(
        tower.mul(a, tower.frobenius(x, i as i64)),
        tower.mul(b, tower.frobenius(x, (2 * t + i) as i64)),
    )
}

fn norm_3t(tower: &FieldTower, t: u32, x: FieldElement) -> FieldElement {
    tower.relative_norm(x, 3 * t, t).expect("element of F_{q^3t}")
}

/// `N(b) != -N(a)` over `F_{q^3t} / F_{q^t}`.
pub fn cond1(tower: &FieldTower, t: u32, a: FieldElement, b: FieldElement) -> bool {
    norm_3t(tower, t, b) != tower.neg(norm_3t(tower, t, a))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonscatteredBinomial {
    pub i: u32,
    pub a: FieldElement,
    pub b: FieldElement,
    /// `lambda_bar` outside `F_q` with `f(lambda_bar x0) = lambda_bar f(x0)`.
    pub lambda_bar: FieldElement,
    pub x0: FieldElement,
    pub trace: SearchTrace,
}

/// Finds `a, b` satisfying `cond1` for which `L_f` is not scattered, with a
/// certificate point.
pub fn find_nonscattered_binomial(tower: &FieldTower, t: u32, i: u32) -> Result<NonscatteredBinomial> {
    check_plane_inputs(tower, t, i)?;
    let elems = tower.subfield_elements_q(3 * t)?;
    let nonzero = || elems.iter().copied().filter(|x| !x.is_zero());
    let minus_one = tower.neg(FieldElement::ONE);
    let a = FieldElement::ONE;
    let mut trace = SearchTrace::default();
    let d = gcd(i as u64, t as u64) as u32;

    let (b, lambda_bar, x0) = if d > 1 {
        // f is F_{q^d}-linear, so every point already has weight >= d.
        let (k, b) = nonzero()
            .enumerate()
            .find(|&(_, b)| norm_3t(tower, t, b) != minus_one)
            .ok_or_else(|| Error::Internal("no b with N(b) != -1".into()))?;
        trace.push("b", k as u64 + 1, vec![b.index()]);
        let lambda_bar = tower.subfield_generator_q(d)?;
        trace.push("lambda_bar", 1, vec![lambda_bar.index()]);
        (b, lambda_bar, FieldElement::ONE)
    } else {
        let mut examined = 0;
        let mut found = None;
        for &l in &elems {
            if tower.in_subfield_q(l, 3)? {
                continue;
            }
            examined += 1;
            if !g_eval(tower, t, i, l)?.is_zero() {
                found = Some(l);
                break;
            }
        }
        let lambda_bar = found.ok_or_else(|| {
            Error::Internal("g vanishes on all of F_{q^3t} \\ F_{q^3}, contradicting its degree".into())
        })?;
        trace.push("lambda_bar", examined, vec![lambda_bar.index()]);
        let alpha = alpha_lambda(tower, t, i, lambda_bar).expect("lambda_bar lies outside F_{q^3}");
        let target = norm_3t(tower, t, alpha);
        let (k, b) = nonzero()
            .enumerate()
            .find(|&(_, b)| norm_3t(tower, t, b) == target)
            .ok_or_else(|| Error::Internal("relative norm is not surjective".into()))?;
        trace.push("b", k as u64 + 1, vec![b.index()]);
        let rhs = tower.mul(tower.div(a, b), alpha);
        let (k, x0) = nonzero()
            .enumerate()
            .find(|&(_, x)| tower.frobenius(x, (2 * t + i) as i64) == tower.mul(rhs, tower.frobenius(x, i as i64)))
            .ok_or_else(|| Error::Internal("x^(q^(2t+i) - q^i) = (a/b) alpha has no solution".into()))?;
        trace.push("x0", k as u64 + 1, vec![x0.index()]);
        (b, lambda_bar, x0)
    };

    let f = |x| binomial(tower, t, i, a, b, x);
    if !cond1(tower, t, a, b)
        || tower.in_subfield_q(lambda_bar, 1)?
        || x0.is_zero()
        || f(tower.mul(lambda_bar, x0)) != tower.mul(lambda_bar, f(x0))
    {
        return Err(Error::Internal("non-scattered binomial certificate does not check".into()));
    }
    Ok(NonscatteredBinomial { i, a, b, lambda_bar, x0, trace })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftC {
    pub c: FieldElement,
    /// `c = mu^(-d)`, `mu` the generator of `F_{q^3t}`.
    pub d: u64,
    /// `|Im g_1 ∩ G_k|` for every coset `G_k = mu^k F_{q^t}^*` that meets `Im g_1`.
    pub coset_sizes: Vec<u64>,
    pub trace: SearchTrace,
}

/// Finds `c` with `c f(x)/x` outside `F_{q^t}` for every nonzero `x`.
pub fn find_shift_c(tower: &FieldTower, t: u32, i: u32, a: FieldElement, b: FieldElement) -> Result<ShiftC> {
    check_plane_inputs(tower, t, i)?;
    require_coprime(i, t)?;
    for x in [a, b] {
        require_in(tower, x, 3 * t)?;
        if x.is_zero() {
            return Err(Error::InvalidParameters("a and b must be nonzero".into()));
        }
    }
    if !cond1(tower, t, a, b) {
        return Err(Error::InvalidParameters("N(a) = -N(b), so 0 lies in the image of f(x)/x".into()));
    }
    let elems = tower.subfield_elements_q(3 * t)?;
    let image: HashSet<FieldElement> = elems
        .iter()
        .filter(|x| !x.is_zero())
        .map(|&x| tower.div(binomial(tower, t, i, a, b, x), x))
        .collect();
    // y and z share a coset of F_{q^t}^* iff y^(q^t - 1) = z^(q^t - 1).
    let coset_key = |y: FieldElement| tower.div(tower.frobenius(y, t as i64), y);
    let mut cosets: HashMap<FieldElement, u64> = HashMap::new();
    for &y in &image {
        *cosets.entry(coset_key(y)).or_insert(0) += 1;
    }
    let mu = tower.subfield_generator_q(3 * t)?;
    let q = tower.q();
    let count = q.pow(2 * t) + q.pow(t) + 1;
    let mut power = FieldElement::ONE;
    let mut found = None;
    for d in 0..count {
        if !cosets.contains_key(&coset_key(power)) {
            found = Some(d);
            break;
        }
        power = tower.mul(power, mu);
    }
    let d = found.ok_or_else(|| Error::Internal("Im f(x)/x meets every coset of F_{q^t}^*".into()))?;
    let c = tower.inv(power);
    let mut trace = SearchTrace::default();
    trace.push("coset_d", d + 1, vec![d]);

    let ct = |x: FieldElement| tower.in_subfield_q(tower.mul(c, x), t).expect("t divides the ambient degree");
    if image.iter().any(|&y| ct(y)) {
        return Err(Error::Internal("shifted image still meets F_{q^t}".into()));
    }
    let mut coset_sizes: Vec<u64> = cosets.into_values().collect();
    coset_sizes.sort_unstable();
    Ok(ShiftC { c, d, coset_sizes, trace })
}

/// `w` generating `F_{q^{2t}}` over `F_{q^t}`, with `w^2 = w A0 + A1`.
pub fn omega_data(tower: &FieldTower, t: u32) -> Result<(FieldElement, FieldElement, FieldElement)> {
    let omega = tower.subfield_generator_q(2 * t)?;
    let conj = tower.frobenius(omega, t as i64);
    let a0 = tower.add(omega, conj);
    let a1 = tower.neg(tower.mul(omega, conj));
    let ok = !tower.in_subfield_q(omega, t)?
        && tower.in_subfield_q(a0, t)?
        && tower.in_subfield_q(a1, t)?
        && tower.mul(omega, omega) == tower.add(tower.mul(omega, a0), a1);
    if !ok {
        return Err(Error::Internal("w^2 = w A0 + A1 fails".into()));
    }
    Ok((omega, a0, a1))
}

fn verify_scattered(u: &SubspaceQ, rank: u32) -> Result<()> {
    if u.dim() != rank {
        return Err(Error::Internal(format!("built subspace has rank {}, expected {rank}", u.dim())));
    }
    if let Some(w) = u.scattered_witness() {
        return Err(Error::Internal(format!("built subspace is not scattered; witness {w:?}")));
    }
    u.assert_rank_bound()
}

/// Least `i` in `1..limit` passing `ok`.
fn least_i(limit: u32, ok: impl Fn(u32) -> bool) -> Option<u32> {
    (1..limit).find(|&i| ok(i))
}

/// The rank-`3t` scattered subspace of `PG(2, q^{2t})`, realized in `F_{q^{6t}}`.
pub fn build_scattered_plane(p: u32, h: u32, t: u32, i: Option<u32>) -> Result<Construction> {
    let tower = plane_tower(p, h, t)?;
    let coprime = |i: u32| gcd(i as u64, 2 * t as u64) == 1;
    let i = match i {
        Some(i) if !coprime(i) => {
            return Err(Error::InvalidParameters(format!("gcd(i, 2t) = gcd({i}, {}) must be 1", 2 * t)));
        }
        Some(i) => i,
        None => least_i(3 * t, coprime).expect("i = 1 always qualifies"),
    };
    check_plane_inputs(&tower, t, i)?;
    let bin = find_nonscattered_binomial(&tower, t, i)?;
    let shift = find_shift_c(&tower, t, i, bin.a, bin.b)?;
    let (a, b) = (tower.mul(shift.c, bin.a), tower.mul(shift.c, bin.b));
    let (omega, a0, a1) = omega_data(&tower, t)?;

    let elems = tower.subfield_elements_q(3 * t)?;
    if elems
        .iter()
        .filter(|x| !x.is_zero())
        .any(|&x| tower.in_subfield_q(tower.div(binomial(&tower, t, i, a, b, x), x), t).unwrap_or(true))
    {
        return Err(Error::Internal("f(x)/x lies in F_{q^t} for some x".into()));
    }
    let ambient = Ambient::field(3, 2 * t)?;
    let u = SubspaceQ::image(&tower, ambient, 3 * t, |x| {
        vec![tower.add(tower.mul(omega, x), binomial(&tower, t, i, a, b, x))]
    })?;
    verify_scattered(&u, 3 * t)?;

    let mut trace = bin.trace;
    trace.extend(shift.trace);
    let params = PlaneConstructionParams {
        t,
        i,
        a_bar: bin.a,
        b_bar: bin.b,
        lambda_bar: bin.lambda_bar,
        x0: bin.x0,
        c: shift.c,
        a,
        b,
        omega,
        a0,
        a1,
    };
    Ok(Construction { tower, subspace: u, params: Params::Plane(params), trace })
}

/// `F_{q^{2rt}}` with the subfields the monomial examples touch.
pub fn monomial_tower(p: u32, h: u32, t: u32, r: u32) -> Result<Arc<FieldTower>> {
    let declared = q_divisors(&[1, r, t, 2 * t, r * t, 2 * r * t]);
    Ok(Arc::new(FieldTower::over(p, h, 2 * r * t, &declared)?))
}

/// `{ w x + a x^(q^i) : x in F_{q^{rt}} }` in `V(r, q^{2t}) = F_{q^{2rt}}`.
pub fn build_monomial_family(
    p: u32,
    h: u32,
    t: u32,
    r: u32,
    i: Option<u32>,
    variant: MonomialVariant,
) -> Result<Construction> {
    if r.is_multiple_of(2) || r < 3 {
        return Err(Error::InvalidParameters(format!("r = {r} must be odd and at least 3")));
    }
    if t < 2 {
        return Err(Error::InvalidParameters(format!("t = {t}, but t must be at least 2")));
    }
    let g = |a: u32, b: u32| gcd(a as u64, b as u64) as u32;
    let q = (p as u64).pow(h);
    let valid_i: Box<dyn Fn(u32) -> bool> = match variant {
        MonomialVariant::Ex1 => {
            if g(t, r) != 1 {
                return Err(Error::InvalidParameters(format!("gcd(t, r) = gcd({t}, {r}) must be 1")));
            }
            Box::new(move |i| g(i, 2 * t) == 1 && g(i, r * t) == r)
        }
        MonomialVariant::Ex2 => {
            if q % r as u64 != 1 {
                return Err(Error::InvalidParameters(format!("q = {q} is not 1 mod r = {r}")));
            }
            Box::new(move |i| g(i, 2 * t) == 1 && g(i, r * t) == 1)
        }
    };
    let i = match i {
        Some(i) if i == 0 || i >= r * t || !valid_i(i) => {
            return Err(Error::InvalidParameters(format!("i = {i} violates the gcd conditions")));
        }
        Some(i) => i,
        None => least_i(r * t, &valid_i)
            .ok_or_else(|| Error::InvalidParameters("no i satisfies the gcd conditions".into()))?,
    };
    let tower = monomial_tower(p, h, t, r)?;
    let norm_ok = |a: FieldElement| -> bool {
        match variant {
            MonomialVariant::Ex1 => {
                let n = tower.relative_norm(a, r * t, r).expect("a in F_{q^rt}");
                !tower.in_subfield_q(n, 1).expect("1 divides everything")
            }
            MonomialVariant::Ex2 => {
                let n = tower.relative_norm(a, r * t, 1).expect("a in F_{q^rt}");
                tower.pow(n, ((q - 1) / r as u64) as u128) != FieldElement::ONE
            }
        }
    };
    let elems = tower.subfield_elements_q(r * t)?;
    let (k, a) = elems
        .iter()
        .copied()
        .filter(|x| !x.is_zero())
        .enumerate()
        .find(|&(_, a)| norm_ok(a))
        .ok_or_else(|| Error::InvalidParameters("no a satisfies the norm condition".into()))?;
    let mut trace = SearchTrace::default();
    trace.push("a", k as u64 + 1, vec![a.index()]);
    let (omega, a0, a1) = omega_data(&tower, t)?;
    let u = SubspaceQ::image(&tower, Ambient::field(r, 2 * t)?, r * t, |x| {
        vec![tower.add(tower.mul(omega, x), tower.mul(a, tower.frobenius(x, i as i64)))]
    })?;
    verify_scattered(&u, r * t)?;
    let params = MonomialParams { variant, t, r, i, a, omega, a0, a1 };
    Ok(Construction { tower, subspace: u, params: Params::Monomial(params), trace })
}

/// `{ (x, x^(q^s)) : x in F_{q^{tn}} }` in `V(2t, q^n)`.
pub fn build_pseudoregulus(p: u32, h: u32, n: u32, t_pairs: u32, s: u32) -> Result<Construction> {
    if n < 2 || t_pairs == 0 {
        return Err(Error::InvalidParameters(format!("n = {n} must be at least 2 and t positive")));
    }
    if gcd(s as u64, n as u64) != 1 {
        return Err(Error::InvalidParameters(format!("gcd(s, n) = gcd({s}, {n}) must be 1")));
    }
    let e = t_pairs * n;
    let tower = Arc::new(FieldTower::over(p, h, e, &q_divisors(&[1, n, e]))?);
    let beta = FieldElement::ONE;
    let u = SubspaceQ::image(&tower, Ambient::new(2, e, n)?, e, |x| {
        vec![x, tower.mul(beta, tower.frobenius(x, s as i64))]
    })?;
    verify_scattered(&u, e)?;
    let params = PseudoregulusParams { n, t_pairs, s, beta };
    Ok(Construction { tower, subspace: u, params: Params::Pseudoregulus(params), trace: SearchTrace::default() })
}

/// `W = { (x + w y, x^q + w y^(q^h)) : x, y in F_{q^n} }` in `F_{q^{2n}}^2 = V(4, q^n)`,
/// with the q-polynomial `g` over `F_{q^{2n}}` whose graph is `W`.
pub fn build_w_example(p: u32, h: u32, n: u32, h_exp: u32) -> Result<Construction> {
    if n < 5 {
        return Err(Error::InvalidParameters(format!("n = {n}, but n must be at least 5")));
    }
    if h_exp <= 1 || h_exp + 1 >= n || gcd(h_exp as u64, n as u64) != 1 {
        return Err(Error::InvalidParameters(format!(
            "h = {h_exp} must satisfy 1 < h < n - 1 and gcd(h, n) = 1"
        )));
    }
    let tower = Arc::new(FieldTower::over(p, h, 2 * n, &[h, n * h, 2 * n * h])?);
    let t = &tower;
    let omega = t.subfield_generator_q(2 * n)?;
    let ambient = Ambient::new(2, 2 * n, n)?;
    let frame = t.frame_q(n)?;
    let mut vectors = Vec::new();
    for &x in frame.elements() {
        vectors.push(vec![x, t.frobenius(x, 1)]);
        vectors.push(vec![t.mul(omega, x), t.mul(omega, t.frobenius(x, h_exp as i64))]);
    }
    let w = SubspaceQ::span(t, ambient, &vectors)?;

    let fr = |k: u32| t.frobenius(omega, k as i64);
    let a_1 = t.div(fr(n + 1), t.sub(fr(n + 1), fr(1)));
    // w^(q^h - 1) - w^(q^(h+n) - 1)
    let a_h = t.inv(t.sub(t.div(fr(h_exp), omega), t.div(fr(h_exp + n), omega)));
    let mut g_coeffs = vec![FieldElement::ZERO; 2 * n as usize];
    g_coeffs[1] = a_1;
    g_coeffs[h_exp as usize] = a_h;
    g_coeffs[(n + 1) as usize] = t.sub(FieldElement::ONE, a_1);
    g_coeffs[(n + h_exp) as usize] = t.neg(a_h);
    let g = LinearizedPoly::new(t, 2 * n, g_coeffs.clone())?;
    let u_g = SubspaceQ::image(t, ambient, 2 * n, |z| vec![z, g.apply(z)])?;
    if u_g != w {
        return Err(Error::Internal("the printed g does not have W as its graph".into()));
    }
    if t.subfield_elements_q(n)?.into_iter().any(|z| g.apply(z) != t.frobenius(z, 1)) {
        return Err(Error::Internal("g does not restrict to z^q on F_{q^n}".into()));
    }
    verify_scattered(&w, 2 * n)?;
    let params = WExampleParams { n, h_exp, omega, a_1, a_h, g_coeffs };
    Ok(Construction { tower, subspace: w, params: Params::WExample(params), trace: SearchTrace::default() })
}

/// Re-runs a construction and checks that it retraces `trace` step for step.
pub fn replay<F>(build: F, trace: &SearchTrace) -> Result<Construction>
where
    F: FnOnce() -> Result<Construction>,
{
    let c = build()?;
    if c.trace != *trace {
        return Err(Error::Internal(format!(
            "replay diverged: recorded {:?}, rebuilt {:?}",
            trace.steps, c.trace.steps
        )));
    }
    Ok(c)
}

/// A q-polynomial `f = c1 x^q + c2 x^(q^2)` on `F_{q^4}` whose graph is scattered
/// in `PG(3, q^2)` but not in `PG(1, q^4)`; the first such pair in canonical order.
pub fn find_fine_not_coarse(p: u32, h: u32) -> Result<(SubspaceQ, LinearizedPoly)> {
    let tower = Arc::new(FieldTower::over(p, h, 4, &[1, 2, 4])?);
    let t = &tower;
    let elems = t.subfield_elements_q(4)?;
    for &c1 in &elems {
        for &c2 in &elems {
            let f = LinearizedPoly::new(t, 4, vec![FieldElement::ZERO, c1, c2])?;
            let u = SubspaceQ::image(t, Ambient::tuples(2, 4)?, 4, |x| vec![x, f.apply(x)])?;
            if !u.is_scattered() && u.rescatter_view(2)?.is_scattered() {
                return Ok((u, f));
            }
        }
    }
    Err(Error::SearchFailed("no binomial c1 x^q + c2 x^(q^2) separates the two views".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_below_two_is_rejected() {
        assert!(matches!(build_scattered_plane(2, 1, 1, None), Err(Error::InvalidParameters(_))));
        let tower = plane_tower(2, 1, 2).unwrap();
        assert!(find_nonscattered_binomial(&tower, 1, 1).is_err());
        assert!(find_nonscattered_binomial(&tower, 2, 6).is_err());
    }

    #[test]
    fn g_vanishes_on_base_field() {
        let tower = plane_tower(3, 1, 2).unwrap();
        for x in tower.subfield_elements_q(1).unwrap() {
            assert!(g_eval(&tower, 2, 1, x).unwrap().is_zero());
        }
        assert!(g_eval(&tower, 2, 2, FieldElement::ONE).is_err());
    }

    #[test]
    fn non_coprime_case_uses_subfield_witness() {
        let tower = plane_tower(2, 1, 2).unwrap();
        let r = find_nonscattered_binomial(&tower, 2, 2).unwrap();
        assert!(tower.in_subfield_q(r.lambda_bar, 2).unwrap());
        assert!(!tower.in_subfield_q(r.lambda_bar, 1).unwrap());
        assert!(cond1(&tower, 2, r.a, r.b));
    }

    #[test]
    fn shift_rejects_bad_norms() {
        let tower = plane_tower(2, 1, 2).unwrap();
        // q = 2: -1 = 1, so N(b) = N(a) = 1 violates cond1.
        let one = FieldElement::ONE;
        assert!(matches!(find_shift_c(&tower, 2, 1, one, one), Err(Error::InvalidParameters(_))));
    }

    #[test]
    fn omega_relation() {
        let tower = plane_tower(3, 1, 2).unwrap();
        let (w, a0, a1) = omega_data(&tower, 2).unwrap();
        assert_eq!(tower.mul(w, w), tower.add(tower.mul(w, a0), a1));
    }

    #[test]
    fn monomial_rejects_bad_i() {
        let e = build_monomial_family(2, 1, 2, 3, Some(1), MonomialVariant::Ex1).unwrap_err();
        assert!(matches!(e, Error::InvalidParameters(_)));
        let e = build_monomial_family(2, 1, 2, 3, None, MonomialVariant::Ex2).unwrap_err();
        assert!(matches!(e, Error::InvalidParameters(_)));
    }

    #[test]
    fn pseudoregulus_checks() {
        let c = build_pseudoregulus(2, 1, 3, 1, 1).unwrap();
        assert_eq!(c.subspace.linear_set_points().unwrap().points, 7);
        assert!(build_pseudoregulus(2, 1, 4, 1, 2).is_err());
    }

    #[test]
    fn w_example_rejects_small_n() {
        assert!(build_w_example(2, 1, 4, 2).is_err());
        assert!(build_w_example(2, 1, 5, 1).is_err());
        assert!(build_w_example(2, 1, 6, 3).is_err());
    }

    #[test]
    fn replay_detects_divergence() {
        let c = build_scattered_plane(2, 1, 2, None).unwrap();
        assert!(replay(|| build_scattered_plane(2, 1, 2, None), &c.trace).is_ok());
        let mut bad = c.trace.clone();
        bad.steps[0].examined += 1;
        assert!(replay(|| build_scattered_plane(2, 1, 2, None), &bad).is_err());
    }
}
