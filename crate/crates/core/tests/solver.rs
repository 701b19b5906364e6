use nerve_core::curvature::{curvature_report, ricci_matrix, scalar_curvature, two_summand_discriminant};
use nerve_core::isotropy::{build_space, HomogeneousSpace, SpaceConfig, StructureData, Subgroup};
use nerve_core::lattice::cartan_of_m0;
use nerve_core::liealg::Family::*;
use nerve_core::solver::*;

fn su3_t2() -> HomogeneousSpace {
    build_space(&SpaceConfig::new(SpecialUnitary, 3, Subgroup::MaximalTorus)).unwrap()
}

fn grad_sq(data: &StructureData, u: f64, v: f64) -> f64 {
    let x = [u.exp(), v.exp(), (-u - v).exp()];
    curvature_report(data, &x).unwrap().grad_norm_sq
}

/// Critical points of `sc` on the volume-one slice of SU(3)/T²: local minima
/// of `‖grad‖²` on a grid, sharpened by repeated grid zooming.
fn grid_oracle(data: &StructureData) -> Vec<[f64; 3]> {
    let step = 0.02;
    let m = 150i32;
    let at = |i: i32, j: i32| grad_sq(data, i as f64 * step, j as f64 * step);
    let mut found: Vec<[f64; 3]> = Vec::new();
    for i in -m + 1..m {
        for j in -m + 1..m {
            let c = at(i, j);
            let is_min = (-1..=1).all(|a| (-1..=1).all(|b| (a == 0 && b == 0) || at(i + a, j + b) > c));
            if !is_min || c > 1.0 {
                continue;
            }
            let (mut u, mut v, mut h) = (i as f64 * step, j as f64 * step, step);
            for _ in 0..60 {
                let mut best = (grad_sq(data, u, v), u, v);
                for a in -2..=2 {
                    for b in -2..=2 {
                        let (uu, vv) = (u + a as f64 * h / 2.0, v + b as f64 * h / 2.0);
                        let g = grad_sq(data, uu, vv);
                        if g < best.0 {
                            best = (g, uu, vv);
                        }
                    }
                }
                (u, v) = (best.1, best.2);
                h *= 0.6;
            }
            let x = [u.exp(), v.exp(), (-u - v).exp()];
            if grad_sq(data, u, v) < 1e-16 && !found.iter().any(|f| close(f, &x, 1e-7)) {
                found.push(x);
            }
        }
    }
    found
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
}

#[test]
fn su3_t2_solutions_match_grid_oracle() {
    let s = su3_t2();
    let sols = find_einstein(&s, &SolverOptions::default()).unwrap();
    assert_eq!(sols.len(), 4);
    let oracle = grid_oracle(s.structure());
    assert_eq!(oracle.len(), 4, "{oracle:?}");
    for o in &oracle {
        assert!(sols.iter().any(|sol| close(&sol.x.x, o, 1e-6)), "{o:?}");
    }
    for sol in &sols {
        assert!(sol.residual < 1e-9);
        assert!((sol.x.volume(&[2, 2, 2]) - 1.0).abs() < 1e-10);
        assert!((sol.lambda - sol.sc / 6.0).abs() < 1e-8);
    }
    // One normal metric and one orbit of three Kähler–Einstein metrics.
    let orbits: Vec<usize> = sols.iter().map(|s| s.orbit).collect();
    assert_eq!(orbits, vec![0, 1, 1, 1]);
    assert!(sols[0].augmented_coindex >= 1);
    for ke in &sols[1..] {
        let mut x = ke.x.x.clone();
        x.sort_by(f64::total_cmp);
        assert!((x[2] / x[0] - 2.0).abs() < 1e-9 && (x[1] / x[0] - 1.0).abs() < 1e-9);
    }
}

#[test]
fn solutions_reverify_independently() {
    let s = su3_t2();
    for sol in find_einstein(&s, &SolverOptions::default()).unwrap() {
        let ric = ricci_matrix(&s, &sol.x.x).unwrap();
        let dev = (0..ric.nrows()).flat_map(|i| (0..ric.ncols()).map(move |j| (i, j))).map(|(i, j)| (ric[(i, j)] - if i == j { sol.lambda } else { 0.0 }).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-9, "{dev}");
        assert!(fd_grad_norm_sq(s.structure(), &sol.x.x).unwrap() < 1e-14);
        let h = hessian(s.structure(), &sol.x.x).unwrap();
        assert!((&h - h.transpose()).norm() <= 1e-4 * h.norm());
    }
}

#[test]
fn search_is_deterministic() {
    let s = build_space(&SpaceConfig::new(SpecialUnitary, 4, Subgroup::MaximalTorus)).unwrap();
    let opts = SolverOptions { seed: 11, directions: Some(12), ..SolverOptions::default() };
    let a = find_einstein(&s, &opts).unwrap();
    let b = find_einstein(&s, &SolverOptions { threads: Some(1), ..opts.clone() }).unwrap();
    assert_eq!(a, b);
    assert!(!a.is_empty());
}

#[test]
fn product_of_spheres() {
    let cfg = SpaceConfig { ambient: vec![(SpecialUnitary, 2), (SpecialUnitary, 2)], q_scale: 0.5, subgroup: Subgroup::MaximalTorus };
    let s = build_space(&cfg).unwrap();
    let sols = find_einstein(&s, &SolverOptions::default()).unwrap();
    assert_eq!(sols.len(), 1);
    assert!(close(&sols[0].x.x, &[1.0, 1.0], 1e-9));
}

#[test]
fn aloff_wallach_refined_search() {
    let s = build_space(&SpaceConfig::new(SpecialUnitary, 3, Subgroup::TorusSlope(vec![1, 1]))).unwrap();
    assert!(!s.multiplicity_free());
    let r = s.refined_by(&cartan_of_m0(&s)).unwrap();
    assert!(r.multiplicity_free());
    let sols = find_einstein(&r, &SolverOptions::default()).unwrap();
    assert!(!sols.is_empty());
    for sol in &sols {
        let ric = ricci_matrix(&r, &sol.x.x).unwrap();
        for i in 0..ric.nrows() {
            for j in 0..ric.ncols() {
                let want = if i == j { sol.lambda } else { 0.0 };
                assert!((ric[(i, j)] - want).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn two_summand_existence_follows_discriminant() {
    let cfgs = [
        SpaceConfig::blocks(Symplectic, 2, &[(Unitary, 1), (Symplectic, 1)]),
        SpaceConfig::blocks(Symplectic, 3, &[(Unitary, 1), (Symplectic, 2)]),
        SpaceConfig::blocks(SpecialOrthogonal, 5, &[(Unitary, 2)]),
        SpaceConfig::blocks(SpecialOrthogonal, 7, &[(Unitary, 3)]),
    ];
    for cfg in cfgs {
        let s = build_space(&cfg).unwrap();
        let d = two_summand_discriminant(&s).unwrap();
        let sols = find_einstein(&s, &SolverOptions::default()).unwrap();
        assert_eq!(d >= 0.0, !sols.is_empty(), "{} D = {d}", s.label());
    }
    // Hand-made constants with a negative discriminant.
    let data = StructureData::new(vec![1, 1], vec![10.0, 1.0], vec![0.0, 0.0], {
        let mut t = vec![0.0; 8];
        for idx in [(0, 1, 1), (1, 0, 1), (1, 1, 0)] {
            t[idx.0 * 4 + idx.1 * 2 + idx.2] = 1.0;
        }
        t
    });
    assert!(two_summand_discriminant(&data).unwrap() < 0.0);
    assert!(find_einstein_structure(&data, &[], &SolverOptions::default()).unwrap().is_empty());
    assert!(scalar_curvature(&data, &[1.0, 1.0]).is_ok());
}
