//! Intermediate subalgebras `h < k < g` of the form `k = h ⊕ m_I`.
//!
//! In the multiplicity-free case every `Ad(H)`-invariant subspace of `m` is
//! a sum of summands, so the intermediate subalgebras are exactly the index
//! sets closed under the bracket. Closure is read off the `[ijk]` tensor: a
//! set `I` is closed when `[ijk] = 0` for all `i, j ∈ I` and `k ∉ I`.

use std::collections::{BTreeSet, HashSet, VecDeque};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::isotropy::HomogeneousSpace;
use crate::liealg::bracket;
use crate::linalg;
use crate::EPS_STRUCT;

/// Default cap on the number of summands.
pub const DEFAULT_MAX_SUMMANDS: usize = 22;

/// `k = h ⊕ m_I` for a closed index set `I`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Subalgebra {
    pub id: usize,
    pub summands: Vec<usize>,
    #[serde(skip)]
    pub mask: u64,
    pub dim: usize,
    pub toral: bool,
    pub minimal: bool,
}

/// Result of generating a subalgebra from two nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Generated {
    Node(usize),
    Top,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeOptions {
    pub max_summands: usize,
    /// Refuse spaces whose isotropy algebra has a larger normalizer.
    pub require_self_normalizing: bool,
}

impl Default for LatticeOptions {
    fn default() -> Self {
        LatticeOptions { max_summands: DEFAULT_MAX_SUMMANDS, require_self_normalizing: true }
    }
}

/// The intermediate subalgebras ordered by inclusion; `h` and `g` excluded.
#[derive(Debug, Clone, Serialize)]
pub struct SubalgebraPoset {
    pub nodes: Vec<Subalgebra>,
    pub ell: usize,
    pub dim_h: usize,
    pub dim_g: usize,
    pub torus_adjoined: bool,
    /// `generates[i * ℓ + j]`: summands met by `[m_i, m_j]`.
    #[serde(skip)]
    generates: Vec<u64>,
}

impl SubalgebraPoset {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `k_a ⊆ k_b`.
    pub fn leq(&self, a: usize, b: usize) -> bool {
        let (ma, mb) = (self.nodes[a].mask, self.nodes[b].mask);
        ma & !mb == 0
    }

    pub fn lt(&self, a: usize, b: usize) -> bool {
        a != b && self.leq(a, b)
    }

    /// Inclusion relation as a dense boolean matrix.
    pub fn leq_matrix(&self) -> Vec<Vec<bool>> {
        (0..self.len()).map(|a| (0..self.len()).map(|b| self.leq(a, b)).collect()).collect()
    }

    pub fn node_by_mask(&self, mask: u64) -> Option<usize> {
        self.nodes.iter().position(|n| n.mask == mask)
    }

    /// Smallest closed index set containing `mask`.
    pub fn closure(&self, mask: u64) -> u64 {
        closure_of(mask, &self.generates, self.ell)
    }

    /// Subalgebra generated by two nodes.
    pub fn generate(&self, a: usize, b: usize) -> Generated {
        let full = full_mask(self.ell);
        let m = self.closure(self.nodes[a].mask | self.nodes[b].mask);
        if m == full {
            return Generated::Top;
        }
        Generated::Node(self.node_by_mask(m).expect("closed sets are nodes"))
    }
}

fn full_mask(ell: usize) -> u64 {
    if ell == 64 {
        u64::MAX
    } else {
        (1u64 << ell) - 1
    }
}

fn indices(mask: u64) -> Vec<usize> {
    (0..64).filter(|&i| mask >> i & 1 == 1).collect()
}

fn closure_of(mut mask: u64, generates: &[u64], ell: usize) -> u64 {
    loop {
        let mut next = mask;
        for i in indices(mask) {
            for j in indices(mask) {
                next |= generates[i * ell + j];
            }
        }
        if next == mask {
            return mask;
        }
        mask = next;
    }
}

/// Enumerates the intermediate subalgebras with default options.
pub fn enumerate_intermediate(space: &HomogeneousSpace) -> Result<SubalgebraPoset> {
    enumerate_with(space, &LatticeOptions::default())
}

pub fn enumerate_with(space: &HomogeneousSpace, opts: &LatticeOptions) -> Result<SubalgebraPoset> {
    let data = space.structure();
    let ell = data.ell();
    let cap = opts.max_summands.min(64);
    if ell > cap {
        return Err(Error::TooManySummands { ell, cap });
    }
    if !data.multiplicity_free {
        let pairs: Vec<String> = data.equivalent.iter().map(|(i, j)| format!("m_{} ≅ m_{}", i + 1, j + 1)).collect();
        return Err(Error::MultiplicityNotFree(pairs.join(", ")));
    }
    if opts.require_self_normalizing && !space.m0_index().is_empty() {
        let extra = space.m0_index().iter().map(|&i| data.dims[i]).sum();
        return Err(Error::NotSelfNormalizing(extra));
    }

    let mut generates = vec![0u64; ell * ell];
    for i in 0..ell {
        for j in 0..ell {
            for k in 0..ell {
                if data.t(i, j, k) > EPS_STRUCT {
                    generates[i * ell + j] |= 1 << k;
                }
            }
        }
    }

    // Closed sets form a closure system: every closed set is reached from a
    // smaller one by adjoining one index and closing.
    let full = full_mask(ell);
    let mut seen: HashSet<u64> = HashSet::new();
    let mut queue = VecDeque::from([0u64]);
    seen.insert(0);
    while let Some(c) = queue.pop_front() {
        for i in 0..ell {
            if c >> i & 1 == 1 {
                continue;
            }
            let next = closure_of(c | 1 << i, &generates, ell);
            if seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    let mut masks: Vec<u64> = seen.into_iter().filter(|&m| m != 0 && m != full).collect();
    let dim_of = |m: u64| space.dim_h() + indices(m).iter().map(|&i| data.dims[i]).sum::<usize>();
    masks.sort_by_key(|&m| (dim_of(m), indices(m)));

    let mut nodes: Vec<Subalgebra> = masks
        .iter()
        .enumerate()
        .map(|(id, &m)| {
            let idx = indices(m);
            let toral = idx.iter().all(|&i| idx.iter().all(|&j| space.pair_bracket_norm(i, j) < EPS_STRUCT));
            Subalgebra { id, summands: idx, mask: m, dim: dim_of(m), toral, minimal: false }
        })
        .collect();
    for a in 0..nodes.len() {
        let ma = nodes[a].mask;
        nodes[a].minimal = !masks.iter().any(|&mb| mb != ma && mb & !ma == 0);
    }

    Ok(SubalgebraPoset {
        nodes,
        ell,
        dim_h: space.dim_h(),
        dim_g: space.dim_g(),
        torus_adjoined: space.adjoined_torus_dim() > 0,
        generates,
    })
}

/// Orthonormal basis (g-coordinates) of a maximal abelian subalgebra of `m_0`.
///
/// Standard basis vectors of g are projected to `m_0` and taken greedily in
/// index order while they commute with the ones already chosen; the span is
/// then completed through its centralizer in `m_0`.
pub fn cartan_of_m0(space: &HomogeneousSpace) -> DMatrix<f64> {
    let g = space.algebra();
    let d = g.dim();
    let m0_cols: Vec<DMatrix<f64>> = space.m0_index().iter().map(|&i| space.summand_basis(i)).collect();
    if m0_cols.is_empty() {
        return DMatrix::zeros(d, 0);
    }
    let m0 = DMatrix::from_columns(&m0_cols.iter().flat_map(|m| m.column_iter().map(|c| c.into_owned()).collect::<Vec<_>>()).collect::<Vec<_>>());
    let commutes = |x: &DVector<f64>, y: &DVector<f64>| {
        let z = bracket(g, x.as_slice(), y.as_slice()).expect("dimensions match");
        z.iter().map(|v| v * v).sum::<f64>().sqrt() < EPS_STRUCT
    };

    let mut chosen: Vec<DVector<f64>> = Vec::new();
    let try_add = |chosen: &mut Vec<DVector<f64>>, mut v: DVector<f64>| {
        for c in chosen.iter() {
            let p = c.dot(&v);
            v -= c * p;
        }
        let n = v.norm();
        if n < 1e-8 {
            return;
        }
        v /= n;
        if chosen.iter().all(|c| commutes(c, &v)) {
            chosen.push(v);
        }
    };
    for a in 0..d {
        let v = &m0 * m0.row(a).transpose();
        try_add(&mut chosen, v);
    }
    loop {
        // Centralizer of the chosen span inside m_0, minus the span itself.
        let k = m0.ncols();
        let mut gram = DMatrix::zeros(k, k);
        for c in &chosen {
            let mut op = DMatrix::zeros(d, k);
            for col in 0..k {
                let z = bracket(g, m0.column(col).as_slice(), c.as_slice()).expect("dimensions match");
                op.set_column(col, &DVector::from_vec(z));
            }
            gram += op.transpose() * op;
        }
        let null = linalg::null_space_of_gram(&gram, 1e-12);
        let before = chosen.len();
        for col in 0..null.ncols() {
            let v = &m0 * null.column(col);
            try_add(&mut chosen, v);
            if chosen.len() > before {
                break;
            }
        }
        if chosen.len() == before {
            break;
        }
    }
    DMatrix::from_columns(&chosen)
}

/// `G/AH` where `a` is a maximal abelian subalgebra of `m_0`; the input is
/// returned unchanged when `m_0 = 0`.
pub fn adjoin_maximal_torus(space: &HomogeneousSpace) -> Result<HomogeneousSpace> {
    if space.m0_index().is_empty() {
        return Ok(space.clone());
    }
    let a = cartan_of_m0(space);
    let h = space.h_basis();
    let mut cols: Vec<DVector<f64>> = h.column_iter().map(|c| c.into_owned()).collect();
    cols.extend(a.column_iter().map(|c| c.into_owned()));
    let ha = linalg::orthonormal_span(&DMatrix::from_columns(&cols), 1e-12);
    let mut out = HomogeneousSpace::from_subalgebra(space.algebra_arc(), &ha, format!("{} + T^{}", space.label(), a.ncols()))?;
    out.adjoined = space.adjoined_torus_dim() + a.ncols();
    Ok(out)
}

/// Index sets of the nodes, for comparisons across enumerations.
pub fn node_sets(poset: &SubalgebraPoset) -> BTreeSet<Vec<usize>> {
    poset.nodes.iter().map(|n| n.summands.clone()).collect()
}
