use nerve_core::flags::*;
use nerve_core::isotropy::{build_space, HomogeneousSpace, SpaceConfig, Subgroup};
use nerve_core::lattice::{enumerate_intermediate, SubalgebraPoset};
use nerve_core::liealg::Family;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random strict order on `n` elements: random edges `i < j` along the
/// natural order, transitively closed.
fn random_poset(n: usize, edges: &[bool]) -> FlagPoset {
    let mut lt = vec![vec![false; n]; n];
    let mut e = edges.iter().cycle();
    for i in 0..n {
        for j in i + 1..n {
            lt[i][j] = *e.next().unwrap();
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if lt[i][k] && lt[k][j] {
                    lt[i][j] = true;
                }
            }
        }
    }
    FlagPoset::from_relation(lt)
}

/// All flags, top included as an optional last element.
fn all_flags(p: &FlagPoset) -> Vec<Flag> {
    let mut out = Vec::new();
    let mut stack: Vec<Vec<usize>> = (0..=p.top()).map(|k| vec![k]).collect();
    while let Some(f) = stack.pop() {
        let last = *f.last().unwrap();
        for k in 0..=p.top() {
            if p.lt(last, k) {
                let mut g = f.clone();
                g.push(k);
                stack.push(g);
            }
        }
        out.push(Flag(f));
    }
    out.sort();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn order_matches_moves(n in 1usize..=6, edges in proptest::collection::vec(any::<bool>(), 1..21)) {
        let p = random_poset(n, &edges);
        let flags = all_flags(&p);
        for a in &flags {
            for b in &flags {
                prop_assert_eq!(flag_leq(&p, a, b).unwrap(), flag_leq_oracle(&p, a, b).unwrap(), "{:?} {:?}", a, b);
            }
        }
    }

    #[test]
    fn product_is_upper_bound(n in 1usize..=7, edges in proptest::collection::vec(any::<bool>(), 1..28)) {
        let p = random_poset(n, &edges);
        let flags = all_flags(&p);
        for a in flags.iter().step_by(3) {
            for b in &flags {
                let ab = flag_product(&p, a, b).unwrap();
                p.validate(&ab).unwrap();
                prop_assert!(flag_leq(&p, a, &ab).unwrap(), "{:?} {:?} -> {:?}", a, b, ab);
                prop_assert!(flag_leq(&p, b, &ab).unwrap(), "{:?} {:?} -> {:?}", a, b, ab);
                prop_assert_eq!(&ab, &flag_product(&p, b, a).unwrap());
                if flag_leq(&p, a, b).unwrap() {
                    prop_assert_eq!(&ab, b);
                }
            }
        }
    }

    #[test]
    fn equal_height_comparable_flags_nest(n in 1usize..=6, edges in proptest::collection::vec(any::<bool>(), 1..21)) {
        let p = random_poset(n, &edges);
        let flags = all_flags(&p);
        for a in &flags {
            for b in &flags {
                if a.maximum() == b.maximum() && flag_leq(&p, a, b).unwrap() {
                    prop_assert!(b.0.iter().all(|k| a.contains(*k)));
                }
            }
        }
    }
}

fn sample_butterfly(s: &HomogeneousSpace, p: &SubalgebraPoset, phi: &Flag, rng: &mut ChaCha8Rng) -> Option<SymEndo> {
    let top = p.len();
    let kr = phi.maximum();
    if phi.len() == 1 {
        return if kr == top { None } else { sample_disk(s, &p.nodes[kr].summands, rng) };
    }
    let raw: Vec<f64> = (0..phi.len() - 1).map(|_| rng.gen_range(0.05..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
    if kr == top {
        return Some(butterfly_point(p, phi, &weights, 0.0, None));
    }
    let disk = sample_disk(s, &p.nodes[kr].summands, rng)?;
    let kappa = rng.gen_range(0.05..0.95);
    Some(butterfly_point(p, phi, &weights, kappa, Some(&disk)))
}

fn member(s: &HomogeneousSpace, p: &SubalgebraPoset, a: &SymEndo, phi: &Flag) -> bool {
    butterfly_decompose(s, p, a, phi).unwrap() != Butterfly::NotMember
}

#[test]
fn butterflies_intersect_along_products() {
    let s = build_space(&SpaceConfig::new(Family::SpecialUnitary, 4, Subgroup::MaximalTorus)).unwrap();
    let p = enumerate_intermediate(&s).unwrap();
    let fp = FlagPoset::from_subalgebras(&p);
    let flags = all_flags(&fp);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut both = 0;
    for (i, phi) in flags.iter().enumerate() {
        for psi in flags.iter().skip(i % 5).step_by(5) {
            let prod = flag_product(&fp, phi, psi).unwrap();
            if let Some(a) = sample_butterfly(&s, &p, &prod, &mut rng) {
                assert!(member(&s, &p, &a, &prod), "{prod:?}");
                assert!(member(&s, &p, &a, phi) && member(&s, &p, &a, psi), "{phi:?} {psi:?} -> {prod:?}");
                both += 1;
            }
            if let Some(a) = sample_butterfly(&s, &p, phi, &mut rng) {
                assert!(member(&s, &p, &a, phi), "{phi:?}");
                if member(&s, &p, &a, psi) {
                    assert!(member(&s, &p, &a, &prod), "{phi:?} {psi:?} -> {prod:?}");
                }
            }
        }
    }
    assert!(both > 100);
}

#[test]
fn graev_roundtrip_on_flag_simplices() {
    let s = build_space(&SpaceConfig::new(Family::SpecialUnitary, 4, Subgroup::MaximalTorus)).unwrap();
    let p = enumerate_intermediate(&s).unwrap();
    let dims = &s.structure().dims;
    let fp = FlagPoset::from_subalgebras(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for phi in all_flags(&fp).into_iter().filter(|f| f.len() > 1) {
        let a = sample_butterfly(&s, &p, &phi, &mut rng).unwrap();
        let v = graev_inverse(dims, &a).unwrap();
        let norm: f64 = v.iter().zip(dims).map(|(x, &d)| d as f64 * x * x).sum();
        assert!((norm - 1.0).abs() < 1e-10);
        let back = graev_map(dims, &v).unwrap();
        for (x, y) in back.a.iter().zip(&a.a) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
