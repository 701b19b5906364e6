//! Flags of intermediate subalgebras, their partial order and product,
//! canonical endomorphisms, `k`-disks, butterflies and the Graev map.
//!
//! Endomorphisms are summand-diagonal: one eigenvalue per summand, zero on
//! `h`. This is all of `Sym_g^H` in the multiplicity-free case.

use std::collections::{HashSet, VecDeque};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::isotropy::HomogeneousSpace;
use crate::lattice::{Generated, SubalgebraPoset};

const EIG_TOL: f64 = 1e-10;
const COMM_TOL: f64 = 1e-9;

/// A finite poset extended by a top element, with a join operation
/// (least upper bound, or the top when there is none).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlagPoset {
    n: usize,
    /// Strict order among the `n` proper elements.
    lt: Vec<Vec<bool>>,
    join: Vec<Vec<usize>>,
}

impl FlagPoset {
    /// From a strict order relation on `n` elements. The relation is
    /// assumed irreflexive and transitive.
    pub fn from_relation(lt: Vec<Vec<bool>>) -> Self {
        let n = lt.len();
        let mut join = vec![vec![n; n]; n];
        for a in 0..n {
            for b in 0..n {
                let le = |x: usize, y: usize| x == y || lt[x][y];
                let uppers: Vec<usize> = (0..n).filter(|&u| le(a, u) && le(b, u)).collect();
                if let Some(&u) = uppers.iter().find(|&&u| uppers.iter().all(|&w| le(u, w))) {
                    join[a][b] = u;
                }
            }
        }
        FlagPoset { n, lt, join }
    }

    /// The intermediate subalgebras with `⟨k₁, k₂⟩` as join.
    pub fn from_subalgebras(p: &SubalgebraPoset) -> Self {
        let n = p.len();
        let lt = (0..n).map(|a| (0..n).map(|b| p.lt(a, b)).collect()).collect();
        let join = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| match p.generate(a, b) {
                        Generated::Node(c) => c,
                        Generated::Top => n,
                    })
                    .collect()
            })
            .collect();
        FlagPoset { n, lt, join }
    }

    /// Number of proper elements; the top is element `len()`.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn top(&self) -> usize {
        self.n
    }

    /// Strict order, top included.
    pub fn lt(&self, a: usize, b: usize) -> bool {
        if a == b {
            return false;
        }
        if b == self.n {
            return true;
        }
        a != self.n && self.lt[a][b]
    }

    pub fn le(&self, a: usize, b: usize) -> bool {
        a == b || self.lt(a, b)
    }

    pub fn join(&self, a: usize, b: usize) -> usize {
        if a == self.n || b == self.n {
            self.n
        } else {
            self.join[a][b]
        }
    }

    /// Checks that `f` is a non-empty strictly increasing chain.
    pub fn validate(&self, f: &Flag) -> Result<()> {
        if f.0.is_empty() {
            return Err(Error::InvalidFlag("empty flag".into()));
        }
        if let Some(&bad) = f.0.iter().find(|&&k| k > self.n) {
            return Err(Error::FlagNotInPoset(bad));
        }
        for w in f.0.windows(2) {
            if !self.lt(w[0], w[1]) {
                return Err(Error::InvalidFlag(format!("{} is not below {}", w[0], w[1])));
            }
        }
        Ok(())
    }
}

/// `k₁ < … < k_r`, by element index; the poset's top stands for `g`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Flag(pub Vec<usize>);

impl Flag {
    pub fn new(elems: Vec<usize>) -> Self {
        Flag(elems)
    }

    pub fn maximum(&self) -> usize {
        *self.0.last().expect("flags are non-empty")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.0.contains(&k)
    }
}

/// The partial order on flags: `φ ≤ ψ` iff `max φ ≤ max ψ` and every
/// member of `ψ` missing from `φ` lies strictly above `max φ`.
pub fn flag_leq(p: &FlagPoset, phi: &Flag, psi: &Flag) -> Result<bool> {
    p.validate(phi)?;
    p.validate(psi)?;
    let m = phi.maximum();
    Ok(p.le(m, psi.maximum()) && psi.0.iter().all(|&k| phi.contains(k) || p.lt(m, k)))
}

/// The same order, decided by searching sequences of elementary moves:
/// adding a new maximum, or removing a non-maximal member.
pub fn flag_leq_oracle(p: &FlagPoset, phi: &Flag, psi: &Flag) -> Result<bool> {
    p.validate(phi)?;
    p.validate(psi)?;
    let mut seen: HashSet<Flag> = HashSet::from([phi.clone()]);
    let mut queue = VecDeque::from([phi.clone()]);
    while let Some(f) = queue.pop_front() {
        if &f == psi {
            return Ok(true);
        }
        let mut next = Vec::new();
        for k in 0..=p.top() {
            if p.lt(f.maximum(), k) {
                let mut g = f.0.clone();
                g.push(k);
                next.push(Flag(g));
            }
        }
        for i in 0..f.len() - 1 {
            let mut g = f.0.clone();
            g.remove(i);
            next.push(Flag(g));
        }
        for g in next {
            if seen.insert(g.clone()) {
                queue.push_back(g);
            }
        }
    }
    Ok(false)
}

/// Product `φψ` of two flags.
pub fn flag_product(p: &FlagPoset, phi: &Flag, psi: &Flag) -> Result<Flag> {
    p.validate(phi)?;
    p.validate(psi)?;
    let common: Vec<usize> = phi.0.iter().copied().filter(|&k| psi.contains(k)).collect();
    let tail = |a: &Flag, b: &Flag| a.0.iter().position(|&k| p.lt(b.maximum(), k)).map(|i| a.0[i..].to_vec());
    let mut out = common;
    if let Some(t) = tail(phi, psi) {
        out.extend(t);
    } else if let Some(t) = tail(psi, phi) {
        out.extend(t);
    } else {
        let k = p.join(phi.maximum(), psi.maximum());
        if !out.contains(&k) {
            out.push(k);
        }
    }
    Ok(Flag(out))
}

/// A summand-diagonal endomorphism: eigenvalue `a_i` on `m_i`, zero on `h`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymEndo {
    pub a: Vec<f64>,
}

impl SymEndo {
    pub fn trace(&self, dims: &[usize]) -> f64 {
        self.a.iter().zip(dims).map(|(a, &d)| d as f64 * a).sum()
    }

    pub fn norm_sq(&self, dims: &[usize]) -> f64 {
        self.a.iter().zip(dims).map(|(a, &d)| d as f64 * a * a).sum()
    }

    pub fn min(&self) -> f64 {
        self.a.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Eigenvalues on all of g, ascending, with `dim h` zeros.
    pub fn spectrum(&self, dims: &[usize], dim_h: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim_h];
        for (a, &d) in self.a.iter().zip(dims) {
            out.extend(std::iter::repeat_n(*a, d));
        }
        out.sort_by(f64::total_cmp);
        out
    }

    fn combine(parts: &[(f64, &SymEndo)]) -> SymEndo {
        let l = parts[0].1.a.len();
        let mut a = vec![0.0; l];
        for (w, e) in parts {
            for i in 0..l {
                a[i] += w * e.a[i];
            }
        }
        SymEndo { a }
    }
}

/// `A^k = (Id_g − Id_k)/(dim g − dim k)`.
pub fn canonical_endo(p: &SubalgebraPoset, k: usize) -> SymEndo {
    let node = &p.nodes[k];
    let w = 1.0 / (p.dim_g - node.dim) as f64;
    SymEndo { a: (0..p.ell).map(|i| if node.summands.contains(&i) { 0.0 } else { w }).collect() }
}

/// The Graev map `Gr(v) = (Id − v/λ(v))/n` for a unit trace-free `v`,
/// where `λ(v)` is the smallest eigenvalue and `n = dim m`.
pub fn graev_map(dims: &[usize], v: &[f64]) -> Result<SymEndo> {
    let e = SymEndo { a: v.to_vec() };
    let norm = e.norm_sq(dims).sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotUnitVector(norm));
    }
    let n: usize = dims.iter().sum();
    if e.trace(dims).abs() > 1e-10 * n as f64 {
        return Err(Error::InvalidConfig(format!("tangent vector has trace {:.3e}", e.trace(dims))));
    }
    let lambda = e.min();
    Ok(SymEndo { a: v.iter().map(|vi| (1.0 - vi / lambda) / n as f64).collect() })
}

/// Inverse of [`graev_map`]: `(A − Id/n)/√(‖A‖² − 1/n)`.
pub fn graev_inverse(dims: &[usize], a: &SymEndo) -> Result<Vec<f64>> {
    let n = dims.iter().sum::<usize>() as f64;
    if a.min() < -EIG_TOL {
        return Err(Error::NotInSphereB(format!("negative eigenvalue {:.3e}", a.min())));
    }
    if (a.trace(dims) - 1.0).abs() > 1e-9 {
        return Err(Error::NotInSphereB(format!("trace {}", a.trace(dims))));
    }
    if a.min() > 1e-9 {
        return Err(Error::NotInSphereB("trivial kernel on m".into()));
    }
    let s = (a.norm_sq(dims) - 1.0 / n).sqrt();
    Ok(a.a.iter().map(|ai| (ai - 1.0 / n) / s).collect())
}

/// Membership of `A` in the disk `D(k)`: `A ≥ 0`, `k ⊆ ker A`, `tr A = 1`
/// and `[A, ad(k)] = 0`. `k = None` stands for `g`, whose disk is empty.
pub fn disk_membership(space: &HomogeneousSpace, a: &SymEndo, k: Option<&[usize]>) -> bool {
    let Some(k) = k else { return false };
    let dims = &space.structure().dims;
    if a.min() < -EIG_TOL || (a.trace(dims) - 1.0).abs() > COMM_TOL {
        return false;
    }
    if k.iter().any(|&i| a.a[i].abs() > COMM_TOL) {
        return false;
    }
    commutator_defect(space, a, k) <= COMM_TOL
}

/// Largest entry of `[A|_m, ad(e_α)|_m]` over basis vectors `e_α` of `m_k`.
pub fn commutator_defect(space: &HomogeneousSpace, a: &SymEndo, k: &[usize]) -> f64 {
    let off = space.m_offset();
    let n = space.dim_m();
    let mut val = vec![0.0; n];
    for s in space.summands() {
        for c in s.columns.clone() {
            val[c] = a.a[s.index];
        }
    }
    let mut worst = 0.0f64;
    for &i in k {
        for alpha in space.summands()[i].columns.clone() {
            for b in 0..n {
                for c in 0..n {
                    if val[b] != val[c] {
                        let e = ((val[c] - val[b]) * space.adapted(off + alpha, off + b, off + c)).abs();
                        worst = worst.max(e);
                    }
                }
            }
        }
    }
    worst
}

/// Random element of `D(k)`: eigenvalues are forced equal on summands
/// linked through `m_k`, and zero on `k` and everything linked to it.
pub fn sample_disk(space: &HomogeneousSpace, k: &[usize], rng: &mut impl Rng) -> Option<SymEndo> {
    let data = space.structure();
    let l = data.ell();
    let mut parent: Vec<usize> = (0..l).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    let zero = l; // pseudo-class for the kernel
    parent.push(zero);
    for &i in k {
        let r = find(&mut parent, i);
        parent[r] = find(&mut parent, zero);
    }
    for &i in k {
        for j in 0..l {
            for m in 0..l {
                if data.t(i, j, m) > crate::EPS_STRUCT {
                    let (rj, rm) = (find(&mut parent, j), find(&mut parent, m));
                    if rj != rm {
                        let z = find(&mut parent, zero);
                        if rm == z {
                            parent[rj] = rm;
                        } else {
                            parent[rm] = rj;
                        }
                    }
                }
            }
        }
    }
    let z = find(&mut parent, zero);
    let mut weight = vec![0.0; l + 1];
    for c in 0..l {
        let r = find(&mut parent, c);
        if r != z && weight[r] == 0.0 {
            weight[r] = rng.gen_range(0.0..1.0) + 1e-3;
        }
    }
    let raw: Vec<f64> = (0..l).map(|c| weight[find(&mut parent, c)]).collect();
    let tr: f64 = raw.iter().zip(&data.dims).map(|(a, &d)| a * d as f64).sum();
    if tr <= 0.0 {
        return None;
    }
    Some(SymEndo { a: raw.iter().map(|a| a / tr).collect() })
}

/// How an endomorphism sits in the butterfly of a flag.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Butterfly {
    /// `A ∈ D(max φ)`.
    InDisk,
    /// `A = (1 − κ) Σ λ_i A^{k_i} + κ A'` with `A' ∈ D(k_r)` (absent when `κ = 0`).
    Join { weights: Vec<f64>, kappa: f64, disk_part: Option<SymEndo> },
    NotMember,
}

/// Decomposes `A` along the butterfly `B[φ]` by reading its eigenvalues on
/// the layers `k_j ⊖ k_{j−1}`.
pub fn butterfly_decompose(space: &HomogeneousSpace, p: &SubalgebraPoset, a: &SymEndo, phi: &Flag) -> Result<Butterfly> {
    let fp = FlagPoset::from_subalgebras(p);
    fp.validate(phi).map_err(|e| match e {
        Error::FlagNotInPoset(k) => Error::InvalidFlag(format!("element {k} is not a node")),
        other => other,
    })?;
    let dims = &space.structure().dims;
    let top = fp.top();
    let set = |k: usize| -> Option<&[usize]> { (k != top).then(|| p.nodes[k].summands.as_slice()) };
    if phi.len() == 1 {
        return Ok(if disk_membership(space, a, set(phi.maximum())) { Butterfly::InDisk } else { Butterfly::NotMember });
    }
    if a.min() < -EIG_TOL || (a.trace(dims) - 1.0).abs() > COMM_TOL {
        return Ok(Butterfly::NotMember);
    }
    let r = phi.len();
    let dim_of = |k: usize| if k == top { p.dim_g } else { p.nodes[k].dim };
    let w: Vec<f64> = phi.0[..r - 1].iter().map(|&k| 1.0 / (p.dim_g - dim_of(k)) as f64).collect();
    // Layer values: zero on k_1, constant on each k_j ⊖ k_{j-1}.
    let mut layer_val = Vec::with_capacity(r);
    let mut prev: &[usize] = &[];
    for (j, &k) in phi.0.iter().enumerate() {
        let inside: Vec<usize> = match set(k) {
            Some(s) => s.iter().copied().filter(|i| !prev.contains(i)).collect(),
            None => (0..p.ell).filter(|i| !prev.contains(i)).collect(),
        };
        let vals: Vec<f64> = inside.iter().map(|&i| a.a[i]).collect();
        let v0 = vals.first().copied().unwrap_or(0.0);
        if vals.iter().any(|v| (v - v0).abs() > COMM_TOL) {
            return Ok(Butterfly::NotMember);
        }
        if j == 0 && v0.abs() > COMM_TOL {
            return Ok(Butterfly::NotMember);
        }
        layer_val.push(if j == 0 { 0.0 } else { v0 });
        if let Some(s) = set(k) {
            prev = s;
        }
    }
    let mu: Vec<f64> = (1..r).map(|j| (layer_val[j] - layer_val[j - 1]) / w[j - 1]).collect();
    if mu.iter().any(|&m| m < -COMM_TOL) {
        return Ok(Butterfly::NotMember);
    }
    let mu: Vec<f64> = mu.into_iter().map(|m| m.max(0.0)).collect();
    let total: f64 = mu.iter().sum();
    let kappa = 1.0 - total;
    let mut residual = a.clone();
    for (j, &k) in phi.0[..r - 1].iter().enumerate() {
        let ak = canonical_endo(p, k);
        for i in 0..p.ell {
            residual.a[i] -= mu[j] * ak.a[i];
        }
    }
    let kmax = phi.maximum();
    if kappa.abs() <= COMM_TOL {
        if residual.a.iter().any(|v| v.abs() > COMM_TOL) {
            return Ok(Butterfly::NotMember);
        }
        let weights = mu.iter().map(|m| m / total).collect();
        return Ok(Butterfly::Join { weights, kappa: 0.0, disk_part: None });
    }
    if kappa < 0.0 || kmax == top {
        return Ok(Butterfly::NotMember);
    }
    let disk = SymEndo { a: residual.a.iter().map(|v| v / kappa).collect() };
    if !disk_membership(space, &disk, set(kmax)) {
        return Ok(Butterfly::NotMember);
    }
    if total <= COMM_TOL {
        return Ok(Butterfly::InDisk);
    }
    let weights = mu.iter().map(|m| m / total).collect();
    Ok(Butterfly::Join { weights, kappa, disk_part: Some(disk) })
}

/// `A = (1 − κ) Σ λ_i A^{k_i} + κ A'`.
pub fn butterfly_point(p: &SubalgebraPoset, phi: &Flag, weights: &[f64], kappa: f64, disk: Option<&SymEndo>) -> SymEndo {
    let ends: Vec<SymEndo> = phi.0[..phi.len() - 1].iter().map(|&k| canonical_endo(p, k)).collect();
    let mut parts: Vec<(f64, &SymEndo)> = ends.iter().zip(weights).map(|(e, &w)| ((1.0 - kappa) * w, e)).collect();
    if let Some(d) = disk {
        parts.push((kappa, d));
    }
    if parts.is_empty() {
        return SymEndo { a: vec![0.0; p.ell] };
    }
    SymEndo::combine(&parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isotropy::{build_space, SpaceConfig, Subgroup};
    use crate::lattice::enumerate_intermediate;
    use crate::liealg::Family::*;

    fn chain(n: usize) -> FlagPoset {
        FlagPoset::from_relation((0..n).map(|a| (0..n).map(|b| a < b).collect()).collect())
    }

    /// Named nodes of the SU(4)/SU(2) example.
    fn su4_su2() -> (FlagPoset, [usize; 5]) {
        let (u2, su3, u3, sp2, su2su2) = (0, 1, 2, 3, 4);
        let mut lt = vec![vec![false; 5]; 5];
        for (a, b) in [(u2, su3), (su3, u3), (u2, u3), (u2, sp2), (su2su2, sp2)] {
            lt[a][b] = true;
        }
        (FlagPoset::from_relation(lt), [u2, su3, u3, sp2, su2su2])
    }

    #[test]
    fn chain_example() {
        let p = chain(6);
        let phi = Flag(vec![0, 1, 2, 3]);
        let psi = Flag(vec![1, 4, 5]);
        assert!(flag_leq(&p, &phi, &psi).unwrap());
        assert!(flag_leq_oracle(&p, &phi, &psi).unwrap());
        assert!(!flag_leq(&p, &psi, &phi).unwrap());
    }

    #[test]
    fn su4_su2_examples() {
        let (p, [u2, su3, u3, sp2, su2su2]) = su4_su2();
        let phi = Flag(vec![u2, su3]);
        let phit = Flag(vec![su3, u3]);
        assert!(flag_leq(&p, &phi, &phit).unwrap());
        assert!(!flag_leq(&p, &phit, &phi).unwrap());
        assert_eq!(flag_product(&p, &phi, &phit).unwrap(), phit);
        let psi = Flag(vec![u2, sp2]);
        let psit = Flag(vec![su2su2]);
        assert!(!flag_leq(&p, &psi, &psit).unwrap());
        assert!(!flag_leq(&p, &psit, &psi).unwrap());
        assert_eq!(flag_product(&p, &psi, &psit).unwrap(), Flag(vec![sp2]));
        assert_eq!(flag_product(&p, &phi, &phi).unwrap(), phi);
    }

    #[test]
    fn invalid_flags() {
        let p = chain(3);
        assert_eq!(flag_leq(&p, &Flag(vec![0, 7]), &Flag(vec![0])), Err(Error::FlagNotInPoset(7)));
        assert!(matches!(flag_leq(&p, &Flag(vec![2, 1]), &Flag(vec![0])), Err(Error::InvalidFlag(_))));
        assert!(matches!(flag_leq(&p, &Flag(vec![]), &Flag(vec![0])), Err(Error::InvalidFlag(_))));
        // The top may close a flag.
        assert!(flag_leq(&p, &Flag(vec![0, 3]), &Flag(vec![3])).unwrap());
    }

    #[test]
    fn canonical_endomorphisms() {
        let s = build_space(&SpaceConfig::new(SpecialUnitary, 3, Subgroup::MaximalTorus)).unwrap();
        let p = enumerate_intermediate(&s).unwrap();
        let dims = &s.structure().dims;
        for k in 0..p.len() {
            let a = canonical_endo(&p, k);
            assert!((a.trace(dims) - 1.0).abs() < 1e-15);
            let mut sorted = a.a.clone();
            sorted.sort_by(f64::total_cmp);
            assert_eq!(sorted, vec![0.0, 0.25, 0.25]);
            assert!(disk_membership(&s, &a, Some(&p.nodes[k].summands)));
        }
        // so(3) inside so(4).
        let t = build_space(&SpaceConfig::blocks(SpecialOrthogonal, 4, &[(SpecialOrthogonal, 3)])).unwrap();
        let pt = crate::lattice::SubalgebraPoset::clone(&enumerate_intermediate(&t).unwrap());
        assert!(pt.is_empty());
        let spec = SymEndo { a: vec![1.0 / 3.0] }.spectrum(&[3], 3);
        assert_eq!(spec, vec![0.0, 0.0, 0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
    }

    #[test]
    fn disk_needs_equivariance() {
        let s = build_space(&SpaceConfig::new(SpecialUnitary, 3, Subgroup::MaximalTorus)).unwrap();
        let p = enumerate_intermediate(&s).unwrap();
        let k = &p.nodes[0].summands;
        let others: Vec<usize> = (0..3).filter(|i| !k.contains(i)).collect();
        let mut a = SymEndo { a: vec![0.0; 3] };
        a.a[others[0]] = 0.15;
        a.a[others[1]] = 0.35;
        assert!((a.trace(&s.structure().dims) - 1.0).abs() < 1e-12);
        assert!(!disk_membership(&s, &a, Some(k)));
        assert!(commutator_defect(&s, &a, k) > 1e-3);
        // Kernel condition.
        let mut b = SymEndo { a: vec![1.0 / 6.0; 3] };
        assert!(!disk_membership(&s, &b, Some(k)));
        b.a[k[0]] = 0.0;
        b.a[others[0]] = 0.25;
        b.a[others[1]] = 0.25;
        assert!(disk_membership(&s, &b, Some(k)));
        assert!(!disk_membership(&s, &b, None));
    }

    #[test]
    fn graev_two_summands() {
        let v = [-(0.5f64).sqrt(), (0.5f64).sqrt()];
        let a = graev_map(&[1, 1], &v).unwrap();
        assert!((a.a[0]).abs() < 1e-15 && (a.a[1] - 1.0).abs() < 1e-15);
        let back = graev_inverse(&[1, 1], &a).unwrap();
        assert!((back[0] - v[0]).abs() < 1e-12 && (back[1] - v[1]).abs() < 1e-12);
        assert!(matches!(graev_map(&[1, 1], &[1.0, 1.0]), Err(Error::NotUnitVector(_))));
        assert!(matches!(graev_inverse(&[1, 1], &SymEndo { a: vec![0.5, 0.5] }), Err(Error::NotInSphereB(_))));
        assert!(matches!(graev_inverse(&[1, 1], &SymEndo { a: vec![-0.5, 1.5] }), Err(Error::NotInSphereB(_))));
    }

    #[test]
    fn butterfly_vertices_and_edges() {
        let s = build_space(&SpaceConfig::new(SpecialUnitary, 4, Subgroup::MaximalTorus)).unwrap();
        let p = enumerate_intermediate(&s).unwrap();
        let k1 = (0..p.len()).find(|&k| p.nodes[k].summands.len() == 1).unwrap();
        let k2 = (0..p.len()).find(|&k| p.lt(k1, k) && p.nodes[k].summands.len() == 3).unwrap();
        let phi = Flag(vec![k1, k2]);
        let a1 = canonical_endo(&p, k1);
        match butterfly_decompose(&s, &p, &a1, &phi).unwrap() {
            Butterfly::Join { weights, kappa, .. } => {
                assert!((weights[0] - 1.0).abs() < 1e-12 && kappa.abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        let a2 = canonical_endo(&p, k2);
        let mid = SymEndo::combine(&[(0.5, &a1), (0.5, &a2)]);
        match butterfly_decompose(&s, &p, &mid, &phi).unwrap() {
            Butterfly::Join { weights, kappa, disk_part } => {
                assert!((kappa - 0.5).abs() < 1e-12 && (weights[0] - 1.0).abs() < 1e-12);
                assert_eq!(disk_part.unwrap(), a2);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(butterfly_decompose(&s, &p, &a2, &phi).unwrap(), Butterfly::InDisk);
        let mut neg = a1.clone();
        let j = (0..6).find(|&i| neg.a[i] > 0.0).unwrap();
        let l = (0..6).rev().find(|&i| neg.a[i] > 0.0).unwrap();
        neg.a[j] -= 1.0;
        neg.a[l] += 1.0;
        assert_eq!(butterfly_decompose(&s, &p, &neg, &phi).unwrap(), Butterfly::NotMember);
        assert!(matches!(butterfly_decompose(&s, &p, &a1, &Flag(vec![k2, k1])), Err(Error::InvalidFlag(_))));
    }
}
