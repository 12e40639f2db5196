use std::sync::Arc;

use scattered_mrd::constructions::{
    build_monomial_family, build_pseudoregulus, build_scattered_plane, build_w_example, find_fine_not_coarse,
    find_nonscattered_binomial, monomial_tower, plane_tower, MonomialVariant, Params,
};
use scattered_mrd::rankcodes::{
    code_from_subspace, code_from_subspace_with, codes_equal, equivalence_witness_for_g_change, gabidulin,
    graph_polynomial, recover_omega_f, restriction_code, sheekey_code, KernelMap, Provenance, RankCode, ScanMode,
    VerificationStatus,
};
use scattered_mrd::{Ambient, BasisTag, Error, FieldElement, FieldTower, LinearMapMatrix, LinearizedPoly, QBasis, SubspaceQ};

fn tower(p: u32, h: u32, d: u32) -> Arc<FieldTower> {
    Arc::new(FieldTower::over(p, h, d, &[1, d]).unwrap())
}

fn graph(t: &Arc<FieldTower>, n: u32, k: i64) -> SubspaceQ {
    SubspaceQ::image(t, Ambient::tuples(2, n).unwrap(), n, |x| vec![x, t.frobenius(x, k)]).unwrap()
}

fn exact_d(c: &mut RankCode) -> u32 {
    c.min_rank_distance(ScanMode::exhaustive()).unwrap().d
}

// fields

#[test]
fn tower_moduli() {
    assert_eq!(FieldTower::new(2, 1, &[1]).unwrap().size(), 2);
    assert_eq!(FieldTower::new(2, 4, &[1, 2, 4]).unwrap().modulus(), &[1, 1, 0, 0, 1]);
    assert_eq!(FieldTower::new(3, 2, &[1, 2]).unwrap().modulus(), &[1, 0, 1]);
}

#[test]
fn subfield_generators() {
    let t = FieldTower::new(2, 4, &[1, 2, 4]).unwrap();
    assert_eq!(t.subfield_generator(4).unwrap(), t.mu());
    assert_eq!(t.multiplicative_order(t.subfield_generator(2).unwrap()), 3);
    let t3 = FieldTower::new(3, 2, &[1, 2]).unwrap();
    assert_eq!(t3.multiplicative_order(t3.subfield_generator(1).unwrap()), 2);
    assert!(t.in_subfield(FieldElement::ZERO, 2).unwrap());
    assert!(!t.in_subfield(t.mu(), 2).unwrap());
    assert!(t.in_subfield(t.subfield_generator(2).unwrap(), 2).unwrap());
    assert!(t.in_subfield(t.mu(), 3).is_err());
}

#[test]
fn norms_and_frobenius() {
    let t = FieldTower::over(2, 1, 2, &[1, 2]).unwrap();
    assert_eq!(t.relative_norm(FieldElement::ZERO, 2, 1).unwrap(), FieldElement::ZERO);
    assert_eq!(t.relative_norm(FieldElement::ONE, 2, 1).unwrap(), FieldElement::ONE);
    let a = t.mu();
    assert_eq!(t.mul(a, t.mul(a, a)), FieldElement::ONE);
    assert_eq!(t.relative_norm(a, 2, 1).unwrap(), FieldElement::ONE);
    let big = FieldTower::over(3, 2, 3, &[1, 3]).unwrap();
    for x in big.subfield_elements(6).unwrap() {
        assert_eq!(big.frobenius(x, 0), x);
        assert_eq!(big.frobenius(x, 3), x);
    }
}

// linmaps

#[test]
fn eval_examples() {
    let t = tower(2, 1, 4);
    let id = LinearizedPoly::identity(&t, 4).unwrap();
    let fq = LinearizedPoly::monomial(&t, 4, 1, FieldElement::ONE).unwrap();
    let elems = t.subfield_elements_q(4).unwrap();
    for &x in &elems {
        assert_eq!(id.eval(x).unwrap(), x);
        for &l in &elems {
            assert_eq!(fq.eval(t.mul(l, x)).unwrap(), t.mul(t.frobenius(l, 1), fq.eval(x).unwrap()));
        }
    }
}

#[test]
fn nonscattered_witness_is_semilinear_fixed() {
    let t = plane_tower(2, 1, 2).unwrap();
    let w = find_nonscattered_binomial(&t, 2, 1).unwrap();
    let f = |x| scattered_mrd::constructions::binomial(&t, 2, w.i, w.a, w.b, x);
    assert_eq!(f(t.mul(w.lambda_bar, w.x0)), t.mul(w.lambda_bar, f(w.x0)));
    assert!(!t.in_subfield_q(w.lambda_bar, 1).unwrap());
}

#[test]
fn compose_examples() {
    let t = tower(2, 1, 6);
    let fq = LinearizedPoly::monomial(&t, 6, 1, FieldElement::ONE).unwrap();
    let fq2 = LinearizedPoly::monomial(&t, 6, 2, FieldElement::ONE).unwrap();
    assert_eq!(fq.compose(&fq).unwrap(), fq2);
    assert_eq!(fq.compose(&LinearizedPoly::identity(&t, 6).unwrap()).unwrap(), fq);
    let other = tower(2, 1, 3);
    let g = LinearizedPoly::identity(&other, 3).unwrap();
    assert!(fq.compose(&g).is_err());
}

#[test]
fn frobenius_matrix_on_f4() {
    let t = tower(2, 1, 2);
    let b = QBasis::powers(&t, 2).unwrap();
    let fq = LinearizedPoly::monomial(&t, 2, 1, FieldElement::ONE).unwrap();
    let m = fq.to_matrix(&b, &b).unwrap();
    // 1 -> 1, a -> a^2 = a + 1
    assert_eq!(m.entries(), &[FieldElement::ONE, FieldElement::ONE, FieldElement::ZERO, FieldElement::ONE]);
    assert_eq!(m.mul(&m).unwrap(), LinearMapMatrix::identity(&t, 2, BasisTag::Powers { q_degree: 2 }));
    assert!(LinearizedPoly::zero(&t, 2).unwrap().to_matrix(&b, &b).unwrap().is_zero());
}

#[test]
fn kernel_examples() {
    let t = tower(3, 1, 4);
    assert_eq!(LinearizedPoly::identity(&t, 4).unwrap().kernel().dim(), 0);
    let f = LinearizedPoly::monomial(&t, 4, 1, FieldElement::ONE)
        .unwrap()
        .sub(&LinearizedPoly::identity(&t, 4).unwrap())
        .unwrap();
    let k = f.kernel();
    assert_eq!(k.dim(), 1);
    assert!(k.contains(&[FieldElement::ONE]).unwrap());
    assert_eq!(f.rank() + k.dim(), 4);
}

#[test]
fn plane_binomial_is_injective() {
    let c = build_scattered_plane(2, 1, 2, None).unwrap();
    let Params::Plane(p) = &c.params else { panic!("plane params") };
    let t = &c.tower;
    let f = LinearizedPoly::from_fn(t, 6, |x| scattered_mrd::constructions::binomial(t, 2, p.i, p.a, p.b, x)).unwrap();
    assert_eq!(f.kernel().dim(), 0);
}

#[test]
fn adjoint_trace_form() {
    let t = tower(2, 1, 4);
    let id = LinearizedPoly::identity(&t, 4).unwrap();
    assert_eq!(id.adjoint(), id);
    let e = t.subfield_elements_q(4).unwrap();
    let f = LinearizedPoly::new(&t, 4, vec![e[3], e[7], FieldElement::ZERO, e[12]]).unwrap();
    let fa = f.adjoint();
    assert_eq!(fa.adjoint(), f);
    let tr = |x| t.relative_trace(x, 4, 1).unwrap();
    for &x in &e {
        for &y in &e {
            assert_eq!(tr(t.mul(x, f.apply(y))), tr(t.mul(fa.apply(x), y)));
        }
    }
}

// linsets

#[test]
fn weight_examples() {
    let t8 = tower(2, 1, 3);
    let u = graph(&t8, 3, 1);
    let one = FieldElement::ONE;
    assert_eq!(u.weight(&[one, one]).unwrap(), 1);
    assert_eq!(u.weight(&[FieldElement::ZERO, one]).unwrap(), 0);
    assert!(u.weight(&[FieldElement::ZERO, FieldElement::ZERO]).is_err());
    let t16 = tower(2, 1, 4);
    let w = graph(&t16, 4, 2);
    assert_eq!(w.weight(&[one, one]).unwrap(), 2);
    assert!(!w.is_scattered());
    let v = w.scattered_witness().unwrap();
    assert!(w.weight(&v).unwrap() >= 2);
}

#[test]
fn point_counts() {
    for (p, pts) in [(2u32, 63u64), (3, 364)] {
        let c = build_scattered_plane(p, 1, 2, None).unwrap();
        let r = c.subspace.linear_set_points().unwrap();
        assert_eq!((r.rank, r.points, r.max_weight), (6, pts, 1));
    }
    let t = tower(2, 1, 2);
    let line = SubspaceQ::image(&t, Ambient::tuples(1, 2).unwrap(), 2, |x| vec![x]).unwrap();
    let r = line.linear_set_points().unwrap();
    assert_eq!((r.points, r.max_weight), (1, 2));
    let zero = SubspaceQ::span(&t, Ambient::tuples(1, 2).unwrap(), &[]).unwrap();
    assert!(zero.linear_set_points().is_err());
}

#[test]
fn pseudoregulus_is_scattered() {
    for n in [3, 4, 5] {
        assert!(graph(&tower(2, 1, n), n, 1).is_scattered());
    }
}

#[test]
fn rescatter_examples() {
    let t = tower(2, 1, 4);
    let u = graph(&t, 4, 1);
    assert!(u.is_scattered());
    let fine = u.rescatter_view(2).unwrap();
    assert_eq!(fine.ambient().r(), 4);
    assert!(fine.is_scattered());
    assert_eq!(u.rescatter_view(4).unwrap(), u);
    assert!(u.rescatter_view(3).is_err());

    let (coarse, _) = find_fine_not_coarse(2, 1).unwrap();
    assert!(!coarse.is_scattered());
    assert!(coarse.rescatter_view(2).unwrap().is_scattered());
}

#[test]
fn lattice_examples() {
    let t = tower(2, 1, 3);
    let u = graph(&t, 3, 1);
    assert_eq!(u.intersect(&u).unwrap(), u);
    let amb = Ambient::tuples(2, 3).unwrap();
    let x_axis = SubspaceQ::image(&t, amb, 3, |x| vec![x, FieldElement::ZERO]).unwrap();
    let y_axis = SubspaceQ::image(&t, amb, 3, |x| vec![FieldElement::ZERO, x]).unwrap();
    let all = x_axis.sum(&y_axis).unwrap();
    assert_eq!(all.dim(), 6);
    assert_eq!(x_axis.intersect(&y_axis).unwrap().dim(), 0);
    assert!(u.sum(&graph(&tower(2, 1, 4), 4, 1)).is_err());
}

#[test]
fn direct_sum_of_baer_subgeometries() {
    let t = tower(2, 1, 2);
    let units = |r: usize| -> Vec<Vec<FieldElement>> {
        (0..r).map(|k| (0..r).map(|j| if j == k { FieldElement::ONE } else { FieldElement::ZERO }).collect()).collect()
    };
    let u1 = SubspaceQ::span(&t, Ambient::tuples(2, 2).unwrap(), &units(2)).unwrap();
    let u2 = SubspaceQ::span(&t, Ambient::tuples(3, 2).unwrap(), &units(3)).unwrap();
    assert!(u1.is_scattered() && u2.is_scattered());
    assert_eq!(u1.dim(), u1.ambient().scattered_bound());
    assert_eq!(u2.dim(), u2.ambient().scattered_bound());
    let s = u1.direct_sum(&u2).unwrap();
    assert_eq!(s.ambient().r(), 5);
    assert_eq!(s.dim(), 5);
    assert_eq!(s.dim(), s.ambient().scattered_bound());
    let r = s.linear_set_points().unwrap();
    assert_eq!((r.points, r.max_weight), (31, 1));
}

// constructions

#[test]
fn builders_respect_rank_bound() {
    let outputs = [
        build_scattered_plane(2, 1, 2, None).unwrap().subspace,
        build_monomial_family(2, 1, 2, 3, Some(3), MonomialVariant::Ex1).unwrap().subspace,
        build_pseudoregulus(2, 1, 3, 1, 1).unwrap().subspace,
        build_pseudoregulus(2, 1, 5, 2, 1).unwrap().subspace,
        build_w_example(2, 1, 5, 2).unwrap().subspace,
    ];
    for u in &outputs {
        u.assert_rank_bound().unwrap();
        assert_eq!(u.dim(), u.ambient().scattered_bound());
        assert!(u.is_scattered());
    }
    assert_eq!(outputs[2].linear_set_points().unwrap().points, 7);
    assert!(build_pseudoregulus(2, 1, 4, 1, 2).is_err());
}

// rankcodes

#[test]
fn code_from_graph_equals_gabidulin() {
    for n in [3u32, 4] {
        let t = tower(2, 1, n);
        let u = graph(&t, n, 1);
        let b = QBasis::powers(&t, n).unwrap();
        let g = KernelMap::from_fn(&u, n as usize, |v| {
            b.coords(t.sub(t.frobenius(v[0], 1), v[1])).unwrap()
        })
        .unwrap();
        let c = code_from_subspace_with(&u, Some(&g), None).unwrap();
        assert_eq!((c.m(), c.n(), c.dim()), (n as usize, n as usize, 2 * n));
        assert!(codes_equal(&c, &gabidulin(&t, n, 2, 1).unwrap()).unwrap());
    }
}

#[test]
fn plane_code_meets_singleton() {
    let c = build_scattered_plane(2, 1, 2, None).unwrap();
    let mut code = code_from_subspace(&c.subspace).unwrap();
    assert_eq!((code.m(), code.n(), code.dim()), (6, 4, 12));
    assert_eq!(code.singleton_exponent(3), 12);
    assert_eq!(code.status(), VerificationStatus::TheoremCited);
    assert_eq!(exact_d(&mut code), 3);
    assert!(code.is_mrd().unwrap());
}

#[test]
fn distance_is_n_minus_max_weight() {
    let t = tower(2, 1, 4);
    for k in [1, 2, 3] {
        let u = graph(&t, 4, k);
        let i = u.linear_set_points().unwrap().max_weight;
        let mut c = code_from_subspace(&u).unwrap();
        assert_eq!(c.cited_distance(), Some(4 - i));
        assert_eq!(exact_d(&mut c), 4 - i);
        assert_eq!(c.is_mrd().unwrap(), u.is_scattered());
    }
    let (coarse, _) = find_fine_not_coarse(2, 1).unwrap();
    let i = coarse.linear_set_points().unwrap().max_weight;
    let mut c = code_from_subspace(&coarse).unwrap();
    assert_eq!(exact_d(&mut c), 4 - i);
    assert!(!c.is_mrd().unwrap());
}

#[test]
fn code_from_subspace_preconditions() {
    let t = tower(2, 1, 3);
    let amb = Ambient::tuples(2, 3).unwrap();
    let small = SubspaceQ::span(&t, amb, &[vec![FieldElement::ONE, FieldElement::ZERO]]).unwrap();
    assert!(code_from_subspace(&small).is_err());
    let axis = SubspaceQ::image(&t, amb, 3, |x| vec![x, FieldElement::ZERO]).unwrap();
    assert!(code_from_subspace(&axis).is_err());
}

#[test]
fn recover_omega_f_examples() {
    let t = tower(2, 1, 8);
    let half = SubspaceQ::image(&t, Ambient::field(2, 4).unwrap(), 4, |x| vec![x]).unwrap();
    let of = recover_omega_f(&half).unwrap();
    assert!(of.f.is_zero());
    assert!(!t.in_subfield_q(of.omega, 4).unwrap());
    let bad = SubspaceQ::span(&t, Ambient::field(2, 4).unwrap(), &[vec![FieldElement::ONE]]).unwrap();
    assert!(recover_omega_f(&bad).is_err());
}

#[test]
fn g_change_by_matrix() {
    let t = tower(2, 1, 3);
    let u = graph(&t, 3, 1);
    let g = KernelMap::complement_projection(&u).unwrap();
    // M = upper unitriangular on F_2^3
    let m = |c: &[u8]| vec![c[0] ^ c[1], c[1] ^ c[2], c[2]];
    let to_el = |d: u8| if d == 1 { FieldElement::ONE } else { FieldElement::ZERO };
    let g_bar = KernelMap::from_fn(&u, 3, |v| {
        let coords = u.coords(v).unwrap_or_else(|_| unreachable!());
        m(&g.apply(&coords)).into_iter().map(to_el).collect()
    })
    .unwrap();
    let w = equivalence_witness_for_g_change(&u, &g, &g_bar).unwrap();
    let one = FieldElement::ONE;
    let zero = FieldElement::ZERO;
    assert_eq!(w.h.entries(), &[one, one, zero, zero, one, one, zero, zero, one]);
    assert_eq!(w.verified, 63);

    let axis = SubspaceQ::image(&t, Ambient::tuples(2, 3).unwrap(), 3, |x| vec![x, FieldElement::ZERO]).unwrap();
    let wrong = KernelMap::complement_projection(&axis).unwrap();
    assert!(equivalence_witness_for_g_change(&u, &g, &wrong).is_err());
    assert!(code_from_subspace_with(&u, Some(&wrong), None).is_err());
}

#[test]
fn sheekey_of_frobenius_is_gabidulin() {
    for n in [3u32, 4, 5] {
        let t = tower(2, 1, n);
        let f = LinearizedPoly::monomial(&t, n, 1, FieldElement::ONE).unwrap();
        let mut s = sheekey_code(&f, n).unwrap();
        assert_eq!(s.provenance(), Provenance::Sheekey);
        assert_eq!(s.cited_distance(), Some(n - 1));
        assert!(codes_equal(&s, &gabidulin(&t, n, 2, 1).unwrap()).unwrap());
        assert_eq!(exact_d(&mut s), n - 1);
        assert!(s.is_mrd().unwrap());
    }
}

#[test]
fn sheekey_of_nonscattered_graph_is_unverified() {
    let t = tower(2, 1, 4);
    let f = LinearizedPoly::monomial(&t, 4, 2, FieldElement::ONE).unwrap();
    let s = sheekey_code(&f, 4).unwrap();
    assert_eq!(s.status(), VerificationStatus::Unverified);
    assert_eq!(graph_polynomial(&graph(&t, 4, 2)).unwrap(), f);
}

#[test]
fn restriction_examples() {
    let t = tower(2, 1, 4);
    let c = gabidulin(&t, 4, 2, 1).unwrap();
    assert!(codes_equal(&restriction_code(&c, 4).unwrap(), &c).unwrap());
    assert!(restriction_code(&c, 3).is_err());

    // coarse U_f in V(2, q^4) against fine U_f in V(4, q^2)
    let u = graph(&t, 4, 1);
    let coarse = code_from_subspace(&u).unwrap();
    let fine = code_from_subspace(&u.rescatter_view(2).unwrap()).unwrap();
    assert!(codes_equal(&restriction_code(&coarse, 2).unwrap(), &fine).unwrap());

    let (nonsc, _) = find_fine_not_coarse(2, 1).unwrap();
    let i = nonsc.linear_set_points().unwrap().max_weight;
    let mut d = code_from_subspace(&nonsc).unwrap();
    assert_eq!(exact_d(&mut d), 4 - i);
    assert!(4 - i < 3);
    let mut restricted = restriction_code(&d, 2).unwrap();
    let mut c = code_from_subspace(&nonsc.rescatter_view(2).unwrap()).unwrap();
    assert!(codes_equal(&restricted, &c).unwrap());
    assert_eq!(exact_d(&mut c), 1);
    assert!(c.is_mrd().unwrap());
    assert_eq!(exact_d(&mut restricted), 1);
}

#[test]
fn gabidulin_examples() {
    let t = tower(2, 1, 4);
    let mut g421 = gabidulin(&t, 4, 2, 1).unwrap();
    let mut g423 = gabidulin(&t, 4, 2, 3).unwrap();
    assert_eq!(g421.dim(), 8);
    assert_eq!(exact_d(&mut g421), 3);
    assert_eq!(exact_d(&mut g423), 3);
    // {a x + b x^q} against {a x + b x^(q^3)}: x^q is not in the second span
    assert!(!codes_equal(&g421, &g423).unwrap());

    let t5 = tower(2, 1, 5);
    let mut g522 = gabidulin(&t5, 5, 2, 2).unwrap();
    assert_eq!(exact_d(&mut g522), 4);
    assert!(g522.is_mrd().unwrap());

    let mut g411 = gabidulin(&t, 4, 1, 1).unwrap();
    assert_eq!(exact_d(&mut g411), 4);
}

#[test]
fn is_mrd_examples() {
    let t = tower(2, 1, 2);
    let tag = BasisTag::Standard { dim: 2 };
    let mut single =
        RankCode::from_generators(&t, 2, 2, [vec![1, 0, 0, 1]], Provenance::Derived, tag.clone(), tag).unwrap();
    assert_eq!(single.is_mrd(), Err(Error::DistanceUnknown));
    assert_eq!(exact_d(&mut single), 2);
    assert!(!single.is_mrd().unwrap());
}

#[test]
fn codes_equal_examples() {
    let t = tower(2, 1, 4);
    let c = gabidulin(&t, 4, 2, 1).unwrap();
    let mut gens = c.q_generators();
    gens.reverse();
    let tag = BasisTag::Powers { q_degree: 4 };
    let permuted = RankCode::from_generators(&t, 4, 4, gens, Provenance::Derived, tag.clone(), tag).unwrap();
    assert!(codes_equal(&c, &permuted).unwrap());
    let other_shape = gabidulin(&tower(2, 1, 3), 3, 2, 1).unwrap();
    assert!(codes_equal(&c, &other_shape).is_err());
}

#[test]
fn transpose_examples() {
    let t = tower(2, 1, 4);
    let c = gabidulin(&t, 4, 2, 1).unwrap();
    let mut tr = c.transpose();
    assert_eq!(tr.dim(), c.dim());
    assert!(codes_equal(&tr.transpose(), &c).unwrap());
    assert_eq!(exact_d(&mut tr), 3);
    assert!(tr.is_mrd().unwrap());
}

#[test]
fn monomial_codes_are_mrd() {
    let c = build_monomial_family(2, 1, 2, 3, Some(3), MonomialVariant::Ex1).unwrap();
    assert_eq!(c.tower, monomial_tower(2, 1, 2, 3).unwrap());
    let mut code = code_from_subspace(&c.subspace).unwrap();
    assert_eq!((code.m(), code.n(), code.dim()), (6, 4, 12));
    assert_eq!(exact_d(&mut code), 3);
    assert!(code.is_mrd().unwrap());
}
