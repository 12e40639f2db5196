//! On-disk records.
//!
//! JSON records carry a `format` tag and the tower they live in, so every
//! record can be read back without outside context. Field elements are
//! written as their coefficient sequences `[c_0, ..., c_(M-1)]` over `F_p`.
//!
//! Codes can also be exported as plain text, one codeword per block:
//!
//! ```text
//! # scattered-mrd matrices v1
//! tower p=2 h=1 M=12 modulus=1,1,0,0,1,0,1,0,0,0,0,0,1 declared=1,2,3,4,6,12
//! shape m=6 n=4 q=2
//! codewords 12
//!
//! codeword 0
//! 1 0 0 0
//! ...
//! ```
//!
//! Entries are F_q elements written as integers `sum d_l p^l` over the
//! base-frame digits `d_l`; for `h = 1` that is the plain residue. The
//! codewords listed are the code's canonical F_q-basis. Every line ends in
//! `\n`, blocks are separated by one empty line, and there is no trailing
//! empty line.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constructions::{Construction, Params, SearchTrace};
use crate::error::{Error, Result};
use crate::fields::{FieldElement, FieldTower, TowerDescriptor};
use crate::linmaps::{BasisTag, LinearMapMatrix, LinearizedPoly};
use crate::linsets::{Ambient, SubspaceQ, WeightReport};
use crate::rankcodes::{Provenance, RankCode, ScanMode, VerificationStatus, DEFAULT_BUDGET};

pub const SUBSPACE_FORMAT: &str = "scattered-mrd/subspace/v1";
pub const CONSTRUCTION_FORMAT: &str = "scattered-mrd/construction/v1";
pub const CODE_FORMAT: &str = "scattered-mrd/code/v1";
pub const POLY_FORMAT: &str = "scattered-mrd/qpoly/v1";
pub const MATRIX_FORMAT: &str = "scattered-mrd/matrix/v1";
pub const MATRICES_HEADER: &str = "# scattered-mrd matrices v1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmbientRecord {
    pub r: u32,
    pub n: u32,
    pub p: u32,
    pub h: u32,
    pub slots: u32,
    pub slot_degree: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubspaceBody {
    pub ambient: AmbientRecord,
    /// Reduced echelon rows over `F_p`.
    pub basis: Vec<Vec<u8>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubspaceRecord {
    pub format: String,
    pub tower: TowerDescriptor,
    #[serde(flatten)]
    pub body: SubspaceBody,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionRecord {
    pub format: String,
    pub tower: TowerDescriptor,
    pub params: Params<Vec<u8>>,
    pub subspace: SubspaceBody,
    pub trace: SearchTrace,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightRecord {
    pub count: u64,
    pub rank: u32,
    pub histogram: BTreeMap<u32, u64>,
    pub max_weight: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<Vec<u8>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyRecord {
    pub format: String,
    pub tower: TowerDescriptor,
    pub base_q_degree: u32,
    /// `coeffs[i]` multiplies `x^(q^i)`.
    pub coeffs: Vec<Vec<u8>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub format: String,
    pub tower: TowerDescriptor,
    pub m: usize,
    pub n: usize,
    pub q: u64,
    /// Row-major, `h` base-frame digits per entry.
    pub entries: Vec<u8>,
    pub domain_basis: BasisTag,
    pub codomain_basis: BasisTag,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeRecord {
    pub format: String,
    pub tower: TowerDescriptor,
    pub m: usize,
    pub n: usize,
    pub p: u32,
    pub h: u32,
    pub dim: u32,
    /// F_q-basis, each an `m x n` row-major matrix of packed entries.
    pub generators: Vec<Vec<Vec<u64>>>,
    pub provenance: Provenance,
    pub verification_status: VerificationStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_min: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorem_cited_d: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampled_upper_bound: Option<u32>,
    pub domain_basis: BasisTag,
    pub codomain_basis: BasisTag,
}

pub fn element_to_coeffs(t: &FieldTower, x: FieldElement) -> Vec<u8> {
    t.digits(x)
}

pub fn coeffs_to_element(t: &FieldTower, c: &[u8]) -> Result<FieldElement> {
    if c.len() != t.degree() as usize || c.iter().any(|&d| d as u32 >= t.p()) {
        return Err(Error::Malformed(format!(
            "element needs {} coefficients below {}, got {c:?}",
            t.degree(),
            t.p()
        )));
    }
    Ok(t.from_digits(c))
}

fn ambient_record(t: &FieldTower, a: Ambient) -> AmbientRecord {
    AmbientRecord { r: a.r(), n: a.n(), p: t.p(), h: t.h(), slots: a.slots(), slot_degree: a.slot_degree() }
}

pub fn subspace_body(u: &SubspaceQ) -> SubspaceBody {
    SubspaceBody { ambient: ambient_record(u.tower(), u.ambient()), basis: u.echelon().rows().to_vec() }
}

fn subspace_from_body(t: &Arc<FieldTower>, b: &SubspaceBody) -> Result<SubspaceQ> {
    let a = &b.ambient;
    if a.p != t.p() || a.h != t.h() {
        return Err(Error::Malformed("subspace and tower disagree on q".into()));
    }
    let amb = Ambient::new(a.slots, a.slot_degree, a.n)?;
    if amb.r() != a.r {
        return Err(Error::Malformed(format!("r = {} does not match the slot layout", a.r)));
    }
    SubspaceQ::from_rows(t, amb, b.basis.clone())
}

fn tower_from(d: &TowerDescriptor) -> Result<Arc<FieldTower>> {
    Ok(Arc::new(FieldTower::from_descriptor(d)?))
}

fn check_format(found: &str, want: &str) -> Result<()> {
    if found != want {
        return Err(Error::Malformed(format!("expected format {want:?}, found {found:?}")));
    }
    Ok(())
}

pub fn subspace_record(u: &SubspaceQ) -> SubspaceRecord {
    SubspaceRecord { format: SUBSPACE_FORMAT.into(), tower: u.tower().descriptor(), body: subspace_body(u) }
}

pub fn subspace_from_record(r: &SubspaceRecord) -> Result<SubspaceQ> {
    check_format(&r.format, SUBSPACE_FORMAT)?;
    subspace_from_body(&tower_from(&r.tower)?, &r.body)
}

pub fn weight_record(t: &FieldTower, w: &WeightReport) -> WeightRecord {
    WeightRecord {
        count: w.points,
        rank: w.rank,
        histogram: w.histogram.clone(),
        max_weight: w.max_weight,
        witness: w.witness.as_ref().map(|v| v.iter().map(|&x| t.digits(x)).collect()),
    }
}

pub fn construction_record(c: &Construction) -> ConstructionRecord {
    let t = &c.tower;
    let params = c
        .params
        .clone()
        .try_map(|x| Ok::<_, Error>(element_to_coeffs(t, x)))
        .expect("encoding cannot fail");
    ConstructionRecord {
        format: CONSTRUCTION_FORMAT.into(),
        tower: t.descriptor(),
        params,
        subspace: subspace_body(&c.subspace),
        trace: c.trace.clone(),
    }
}

pub fn construction_from_record(r: &ConstructionRecord) -> Result<Construction> {
    check_format(&r.format, CONSTRUCTION_FORMAT)?;
    let tower = tower_from(&r.tower)?;
    let params = r.params.clone().try_map(|c| coeffs_to_element(&tower, &c))?;
    let subspace = subspace_from_body(&tower, &r.subspace)?;
    Ok(Construction { tower, subspace, params, trace: r.trace.clone() })
}

pub fn poly_record(f: &LinearizedPoly) -> PolyRecord {
    let t = f.tower();
    PolyRecord {
        format: POLY_FORMAT.into(),
        tower: t.descriptor(),
        base_q_degree: f.degree(),
        coeffs: f.coeffs().iter().map(|&c| element_to_coeffs(t, c)).collect(),
    }
}

pub fn poly_from_record(r: &PolyRecord) -> Result<LinearizedPoly> {
    check_format(&r.format, POLY_FORMAT)?;
    let t = tower_from(&r.tower)?;
    let coeffs = r.coeffs.iter().map(|c| coeffs_to_element(&t, c)).collect::<Result<_>>()?;
    LinearizedPoly::new(&t, r.base_q_degree, coeffs)
}

pub fn matrix_record(a: &LinearMapMatrix) -> MatrixRecord {
    MatrixRecord {
        format: MATRIX_FORMAT.into(),
        tower: a.tower().descriptor(),
        m: a.rows(),
        n: a.cols(),
        q: a.tower().q(),
        entries: a.to_fp(),
        domain_basis: a.domain_tag().clone(),
        codomain_basis: a.codomain_tag().clone(),
    }
}

pub fn matrix_from_record(r: &MatrixRecord) -> Result<LinearMapMatrix> {
    check_format(&r.format, MATRIX_FORMAT)?;
    let t = tower_from(&r.tower)?;
    let h = t.h() as usize;
    if r.q != t.q() || r.entries.len() != r.m * r.n * h || r.entries.iter().any(|&d| d as u32 >= t.p()) {
        return Err(Error::Malformed(format!("{} digits do not fit a {}x{} matrix over F_{}", r.entries.len(), r.m, r.n, r.q)));
    }
    let frame = t.base_frame();
    let entries = r.entries.chunks(h).map(|c| frame.element(&t, c)).collect();
    LinearMapMatrix::new(&t, r.m, r.n, entries, r.domain_basis.clone(), r.codomain_basis.clone())
}

fn pack_entry(p: u32, digits: &[u8]) -> u64 {
    digits.iter().rev().fold(0u64, |acc, &d| acc * p as u64 + d as u64)
}

fn unpack_entry(p: u32, h: u32, mut v: u64) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(h as usize);
    for _ in 0..h {
        out.push((v % p as u64) as u8);
        v /= p as u64;
    }
    if v != 0 {
        return Err(Error::Malformed("matrix entry outside F_q".into()));
    }
    Ok(out)
}

fn generator_matrix(c: &RankCode, g: &[u8]) -> Vec<Vec<u64>> {
    let (p, h) = (c.tower().p(), c.tower().h() as usize);
    g.chunks(c.n() * h).map(|row| row.chunks(h).map(|e| pack_entry(p, e)).collect()).collect()
}

fn generator_digits(t: &FieldTower, m: usize, n: usize, g: &[Vec<u64>]) -> Result<Vec<u8>> {
    if g.len() != m || g.iter().any(|row| row.len() != n) {
        return Err(Error::Malformed(format!("generator is not {m}x{n}")));
    }
    let mut out = Vec::with_capacity(m * n * t.h() as usize);
    for &v in g.iter().flatten() {
        out.extend(unpack_entry(t.p(), t.h(), v)?);
    }
    Ok(out)
}

pub fn code_record(c: &RankCode) -> CodeRecord {
    let t = c.tower();
    CodeRecord {
        format: CODE_FORMAT.into(),
        tower: t.descriptor(),
        m: c.m(),
        n: c.n(),
        p: t.p(),
        h: t.h(),
        dim: c.dim(),
        generators: c.q_generators().iter().map(|g| generator_matrix(c, g)).collect(),
        provenance: c.provenance(),
        verification_status: c.status(),
        d_min: c.d_min(),
        theorem_cited_d: c.cited_distance(),
        sampled_upper_bound: c.sampled_bound(),
        domain_basis: c.domain_tag().clone(),
        codomain_basis: c.codomain_tag().clone(),
    }
}

/// Reads a code back. A recorded exhaustive distance is trusted only after
/// a fresh scan confirms it; when the scan would exceed the default budget
/// the claim is dropped.
pub fn code_from_record(r: &CodeRecord) -> Result<RankCode> {
    check_format(&r.format, CODE_FORMAT)?;
    let tower = tower_from(&r.tower)?;
    if (r.p, r.h) != (tower.p(), tower.h()) {
        return Err(Error::Malformed("code and tower disagree on q".into()));
    }
    let gens = r
        .generators
        .iter()
        .map(|g| generator_digits(&tower, r.m, r.n, g))
        .collect::<Result<Vec<_>>>()?;
    let mut code = RankCode::from_generators(
        &tower,
        r.m,
        r.n,
        gens,
        r.provenance,
        r.domain_basis.clone(),
        r.codomain_basis.clone(),
    )?;
    if code.dim() != r.dim {
        return Err(Error::Malformed(format!("generators span dimension {}, record says {}", code.dim(), r.dim)));
    }
    if let Some(d) = r.theorem_cited_d {
        code = code.cite_distance(d);
    }
    if let Some(b) = r.sampled_upper_bound {
        code.record_sampled_bound(b);
    }
    if let Some(d) = r.d_min {
        match code.clone().min_rank_distance(ScanMode::Exhaustive { budget: DEFAULT_BUDGET }) {
            Ok(rep) if rep.d == d => code.restore_exhaustive(d),
            Ok(rep) => {
                return Err(Error::Malformed(format!("recorded d_min {d}, but the code has distance {}", rep.d)));
            }
            Err(Error::BudgetExceeded { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(code)
}

/// The byte-exact text export.
pub fn export_matrices(c: &RankCode) -> String {
    let t = c.tower();
    let join = |v: &[String]| v.join(",");
    let modulus: Vec<String> = t.modulus().iter().map(u8::to_string).collect();
    let declared: Vec<String> = t.declared_degrees().iter().map(u32::to_string).collect();
    let gens = c.q_generators();
    let mut out = String::new();
    out.push_str(MATRICES_HEADER);
    out.push('\n');
    out.push_str(&format!(
        "tower p={} h={} M={} modulus={} declared={}\n",
        t.p(),
        t.h(),
        t.degree(),
        join(&modulus),
        join(&declared)
    ));
    out.push_str(&format!("shape m={} n={} q={}\n", c.m(), c.n(), t.q()));
    out.push_str(&format!("codewords {}\n", gens.len()));
    for (k, g) in gens.iter().enumerate() {
        out.push_str(&format!("\ncodeword {k}\n"));
        for row in generator_matrix(c, g) {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
    }
    out
}

fn field<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    line.split_whitespace()
        .find_map(|w| w.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| Error::Malformed(format!("missing {key}= in {line:?}")))
}

fn num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Malformed(format!("not a number: {s:?}")))
}

fn list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(num).collect()
}

/// Parses [`export_matrices`] output. The result has provenance `derived`
/// and no distance information.
pub fn import_matrices(text: &str) -> Result<RankCode> {
    let mut lines = text.lines();
    let mut next = |what: &str| lines.next().ok_or_else(|| Error::Malformed(format!("missing {what}")));
    if next("header")? != MATRICES_HEADER {
        return Err(Error::Malformed("not a scattered-mrd matrices v1 file".into()));
    }
    let tl = next("tower line")?;
    if !tl.starts_with("tower ") {
        return Err(Error::Malformed("expected the tower line".into()));
    }
    let descriptor = TowerDescriptor {
        format: crate::fields::TOWER_FORMAT.into(),
        p: num(field(tl, "p")?)?,
        h: num(field(tl, "h")?)?,
        m: num(field(tl, "M")?)?,
        modulus: list(field(tl, "modulus")?)?,
        declared_degrees: list(field(tl, "declared")?)?,
    };
    let tower = tower_from(&descriptor)?;
    let sl = next("shape line")?;
    let (m, n): (usize, usize) = (num(field(sl, "m")?)?, num(field(sl, "n")?)?);
    if num::<u64>(field(sl, "q")?)? != tower.q() {
        return Err(Error::Malformed("shape line disagrees with the tower on q".into()));
    }
    let count: usize = next("codeword count")?
        .strip_prefix("codewords ")
        .ok_or_else(|| Error::Malformed("expected codewords <count>".into()))
        .and_then(num)?;
    let mut gens = Vec::with_capacity(count);
    for k in 0..count {
        if !next("block separator")?.is_empty() || next("codeword label")? != format!("codeword {k}") {
            return Err(Error::Malformed(format!("codeword {k} block is malformed")));
        }
        let rows = (0..m)
            .map(|_| next("matrix row")?.split(' ').map(num).collect::<Result<Vec<u64>>>())
            .collect::<Result<Vec<_>>>()?;
        gens.push(generator_digits(&tower, m, n, &rows)?);
    }
    if next("end").is_ok() {
        return Err(Error::Malformed("trailing content after the last codeword".into()));
    }
    let tag = |d| BasisTag::Standard { dim: d as u32 };
    let code = RankCode::from_generators(&tower, m, n, gens, Provenance::Derived, tag(n), tag(m))?;
    if code.dim() as usize != count {
        return Err(Error::Malformed("exported codewords are dependent".into()));
    }
    Ok(code)
}
