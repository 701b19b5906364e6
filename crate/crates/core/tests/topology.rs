use nerve_core::complex::{contractibility_certificate, flag_complex, homology, join, Certificate, SimplicialComplex};
use nerve_core::isotropy::{build_space, SpaceConfig, Subgroup};
use nerve_core::lattice::enumerate_intermediate;
use nerve_core::liealg::Family::*;
use proptest::prelude::*;

fn torus_quotient(n: usize) -> SimplicialComplex {
    let s = build_space(&SpaceConfig::new(SpecialUnitary, n, Subgroup::MaximalTorus)).unwrap();
    flag_complex(&enumerate_intermediate(&s).unwrap())
}

#[test]
fn partition_lattices() {
    let x3 = torus_quotient(3);
    assert_eq!((x3.vertex_count, x3.facets.len()), (3, 3));
    assert_eq!(homology(&x3).unwrap().betti, vec![2]);

    let h4 = homology(&torus_quotient(4)).unwrap();
    assert_eq!(h4.betti, vec![0, 6]);
    assert!(h4.torsion_free());

    let x5 = torus_quotient(5);
    assert_eq!(x5.vertex_count, 50);
    let h5 = homology(&x5).unwrap();
    assert_eq!(h5.betti, vec![0, 0, 24]);
    assert_eq!(h5.euler_defect(), 0);
}

#[test]
fn product_space_is_a_suspended_join() {
    let cfg = SpaceConfig { ambient: vec![(SpecialUnitary, 3), (SpecialUnitary, 3)], q_scale: 0.5, subgroup: Subgroup::MaximalTorus };
    let s = build_space(&cfg).unwrap();
    let direct = homology(&flag_complex(&enumerate_intermediate(&s).unwrap())).unwrap();
    let x = torus_quotient(3);
    let joined = homology(&join(&join(&x, &x), &SimplicialComplex::points(2))).unwrap();
    assert_eq!(direct.betti, vec![0, 0, 4]);
    assert_eq!(direct.betti, joined.betti);
    let empty = SimplicialComplex::empty();
    assert_eq!(contractibility_certificate(&empty, &homology(&empty).unwrap(), None), Certificate::NonContractible(-1));
}

fn small_complex() -> impl Strategy<Value = SimplicialComplex> {
    prop::collection::vec(prop::collection::vec(0usize..6, 1..4), 1..6).prop_map(|facets| SimplicialComplex::new(0, facets))
}

fn reduced(h: &nerve_core::complex::HomologyProfile, q: i64) -> usize {
    h.betti_at(q)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn milnor_join_formula(x in small_complex(), y in small_complex()) {
        let hx = homology(&x).unwrap();
        let hy = homology(&y).unwrap();
        prop_assume!(hx.torsion_free() && hy.torsion_free());
        let hj = homology(&join(&x, &y)).unwrap();
        prop_assert_eq!(hj.euler_defect(), 0);
        let top = x.dimension() + y.dimension() + 2;
        for q in 0..=top {
            let mut expected = 0;
            for i in -1..=q {
                expected += reduced(&hx, i) * reduced(&hy, q - 1 - i);
            }
            prop_assert_eq!(reduced(&hj, q), expected, "degree {}", q);
        }
    }

    #[test]
    fn euler_characteristic(x in small_complex()) {
        prop_assert_eq!(homology(&x).unwrap().euler_defect(), 0);
    }
}
