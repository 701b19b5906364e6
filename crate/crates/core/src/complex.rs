//! Abstract simplicial complexes, order complexes of finite posets, joins,
//! and reduced integral homology.
//!
//! Homology is computed from the augmented chain complex, so the empty
//! complex has `H̃_{-1} = ℤ`. Boundary matrices are first reduced sparsely
//! on unit pivots; whatever is left goes through a dense Smith normal form
//! over arbitrary-precision integers.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Default cap on the total number of faces.
pub const DEFAULT_MAX_FACES: usize = 2_000_000;

/// A finite simplicial complex given by its facets.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SimplicialComplex {
    pub vertex_count: usize,
    /// Sorted vertex lists, pairwise non-contained, sorted lexicographically.
    pub facets: Vec<Vec<usize>>,
}

impl SimplicialComplex {
    /// Canonicalizes the facet list: sorts vertices, drops faces contained
    /// in others and sorts the result.
    pub fn new(vertex_count: usize, facets: Vec<Vec<usize>>) -> Self {
        let mut fs: Vec<Vec<usize>> = facets
            .into_iter()
            .map(|mut f| {
                f.sort_unstable();
                f.dedup();
                f
            })
            .filter(|f| !f.is_empty())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        fs.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        let mut kept: Vec<Vec<usize>> = Vec::new();
        for f in fs {
            if !kept.iter().any(|k| is_subset(&f, k)) {
                kept.push(f);
            }
        }
        kept.sort();
        let vertex_count = kept.iter().flatten().map(|&v| v + 1).max().unwrap_or(0).max(vertex_count);
        SimplicialComplex { vertex_count, facets: kept }
    }

    /// The void complex (no faces at all, not even vertices).
    pub fn empty() -> Self {
        SimplicialComplex { vertex_count: 0, facets: Vec::new() }
    }

    /// `k` isolated points.
    pub fn points(k: usize) -> Self {
        Self::new(k, (0..k).map(|v| vec![v]).collect())
    }

    /// The boundary of a full simplex on `k + 2` vertices, a `k`-sphere.
    pub fn sphere(k: usize) -> Self {
        let n = k + 2;
        Self::new(n, (0..n).map(|skip| (0..n).filter(|&v| v != skip).collect()).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.facets.is_empty()
    }

    /// Largest face dimension; `-1` for the empty complex.
    pub fn dimension(&self) -> i64 {
        self.facets.iter().map(|f| f.len() as i64 - 1).max().unwrap_or(-1)
    }

    /// Number of faces in each dimension `0..=dim`.
    pub fn face_counts(&self) -> Vec<usize> {
        let faces = self.faces_by_dim(usize::MAX).expect("no cap");
        faces.iter().map(Vec::len).collect()
    }

    /// Vertices contained in every facet.
    pub fn cone_points(&self) -> Vec<usize> {
        let Some(first) = self.facets.first() else {
            return Vec::new();
        };
        first.iter().copied().filter(|v| self.facets.iter().all(|f| f.binary_search(v).is_ok())).collect()
    }

    /// All faces grouped by dimension, each list sorted.
    fn faces_by_dim(&self, cap: usize) -> Result<Vec<Vec<Vec<usize>>>> {
        let dim = self.dimension();
        if dim < 0 {
            return Ok(Vec::new());
        }
        if let Some(f) = self.facets.iter().find(|f| f.len() >= 63 || (1usize << f.len()) - 1 > cap) {
            let faces = if f.len() >= 63 { usize::MAX } else { (1usize << f.len()) - 1 };
            return Err(Error::ComplexTooLarge { faces, cap });
        }
        let mut sets: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); dim as usize + 1];
        let mut count = 0usize;
        for f in &self.facets {
            let k = f.len();
            for mask in 1u64..(1u64 << k) {
                let face: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).map(|i| f[i]).collect();
                if sets[face.len() - 1].insert(face) {
                    count += 1;
                    if count > cap {
                        return Err(Error::ComplexTooLarge { faces: count, cap });
                    }
                }
            }
        }
        Ok(sets.into_iter().map(|s| s.into_iter().collect()).collect())
    }

    /// Plain-text facet list: one facet per line, space-separated vertices.
    pub fn to_facet_list(&self) -> String {
        let mut out = String::new();
        for f in &self.facets {
            let line: Vec<String> = f.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    /// Inverse of [`Self::to_facet_list`]; blank lines and `#` comments are skipped.
    pub fn from_facet_list(text: &str) -> Result<Self> {
        let mut facets = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f = line
                .split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|_| Error::InvalidConfig(format!("bad vertex `{t}` in facet list"))))
                .collect::<Result<Vec<_>>>()?;
            facets.push(f);
        }
        Ok(Self::new(0, facets))
    }
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    a.len() <= b.len() && a.iter().all(|x| b.binary_search(x).is_ok())
}

/// Order complex of a finite poset given by its strict order relation:
/// vertices are the elements, faces the chains.
pub fn order_complex(n: usize, lt: impl Fn(usize, usize) -> bool) -> SimplicialComplex {
    let mut facets = Vec::new();
    let mut chain = Vec::new();
    fn extend(n: usize, lt: &dyn Fn(usize, usize) -> bool, chain: &mut Vec<usize>, facets: &mut Vec<Vec<usize>>) {
        let top = *chain.last().expect("non-empty chain");
        // Covers of `top`.
        let ups: Vec<usize> = (0..n).filter(|&u| lt(top, u) && !(0..n).any(|w| lt(top, w) && lt(w, u))).collect();
        if ups.is_empty() {
            facets.push(chain.clone());
            return;
        }
        for u in ups {
            chain.push(u);
            extend(n, lt, chain, facets);
            chain.pop();
        }
    }
    for v in 0..n {
        if (0..n).any(|w| lt(w, v)) {
            continue;
        }
        chain.push(v);
        extend(n, &lt, &mut chain, &mut facets);
        chain.pop();
    }
    SimplicialComplex::new(n, facets)
}

/// Flag complex `Δ_{G/H}` of the intermediate subalgebras.
pub fn flag_complex(poset: &crate::lattice::SubalgebraPoset) -> SimplicialComplex {
    order_complex(poset.len(), |a, b| poset.lt(a, b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Combine {
    Join,
    Cone,
    Suspension,
}

/// `X ∗ Y`; the vertices of `Y` are shifted past those of `X`.
pub fn join(x: &SimplicialComplex, y: &SimplicialComplex) -> SimplicialComplex {
    if x.is_empty() {
        return y.clone();
    }
    if y.is_empty() {
        return x.clone();
    }
    let off = x.vertex_count;
    let mut facets = Vec::with_capacity(x.facets.len() * y.facets.len());
    for a in &x.facets {
        for b in &y.facets {
            let mut f = a.clone();
            f.extend(b.iter().map(|v| v + off));
            facets.push(f);
        }
    }
    SimplicialComplex::new(off + y.vertex_count, facets)
}

/// Join, cone or suspension; `y` is only read for the join.
pub fn combine(op: Combine, x: &SimplicialComplex, y: Option<&SimplicialComplex>) -> Result<SimplicialComplex> {
    match op {
        Combine::Join => {
            let y = y.ok_or_else(|| Error::InvalidConfig("join needs a second complex".into()))?;
            Ok(join(x, y))
        }
        Combine::Cone => Ok(join(x, &SimplicialComplex::points(1))),
        Combine::Suspension => Ok(join(x, &SimplicialComplex::points(2))),
    }
}

fn serialize_factors<S: Serializer>(v: &[BigInt], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|b| b.to_string()))
}

/// Torsion of `H̃_q`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Torsion {
    pub degree: i64,
    /// Invariant factors larger than one, each dividing the next.
    #[serde(serialize_with = "serialize_factors")]
    pub factors: Vec<BigInt>,
}

/// Reduced integral homology.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HomologyProfile {
    /// `β̃_{-1}`; one exactly for the empty complex.
    pub betti_minus_one: usize,
    /// `β̃_q` for `q = 0..=dim`.
    pub betti: Vec<usize>,
    pub torsion: Vec<Torsion>,
    /// Face counts per dimension.
    pub faces: Vec<usize>,
}

impl HomologyProfile {
    /// `β̃_q` for any `q ≥ -1`.
    pub fn betti_at(&self, q: i64) -> usize {
        match q {
            -1 => self.betti_minus_one,
            q if q >= 0 => self.betti.get(q as usize).copied().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn torsion_free(&self) -> bool {
        self.torsion.is_empty()
    }

    /// Least degree with nonzero reduced homology.
    pub fn first_nonzero(&self) -> Option<i64> {
        let top = self.betti.len() as i64;
        (-1..top).find(|&q| self.betti_at(q) > 0 || self.torsion.iter().any(|t| t.degree == q))
    }

    /// `Σ (-1)^q #faces_q - (-1 + Σ (-1)^q β̃_q)`; zero when consistent.
    pub fn euler_defect(&self) -> i64 {
        let sign = |q: usize| if q.is_multiple_of(2) { 1i64 } else { -1 };
        let chi: i64 = self.faces.iter().enumerate().map(|(q, &c)| sign(q) * c as i64).sum();
        let reduced: i64 = self.betti.iter().enumerate().map(|(q, &b)| sign(q) * b as i64).sum::<i64>() - self.betti_minus_one as i64;
        chi - 1 - reduced
    }
}

/// Reduced homology with the default face cap.
pub fn homology(x: &SimplicialComplex) -> Result<HomologyProfile> {
    homology_capped(x, DEFAULT_MAX_FACES)
}

pub fn homology_capped(x: &SimplicialComplex, cap: usize) -> Result<HomologyProfile> {
    let faces = x.faces_by_dim(cap)?;
    let counts: Vec<usize> = faces.iter().map(Vec::len).collect();
    if faces.is_empty() {
        return Ok(HomologyProfile { betti_minus_one: 1, betti: Vec::new(), torsion: Vec::new(), faces: counts });
    }
    let top = faces.len();
    // ranks[q] = rank of ∂_q : C_q → C_{q-1}, with ∂_0 the augmentation (rank 1).
    let mut ranks = vec![0usize; top + 1];
    let mut torsion = Vec::new();
    ranks[0] = 1;
    for q in 1..top {
        let index: HashMap<&[usize], usize> = faces[q - 1].iter().enumerate().map(|(i, f)| (f.as_slice(), i)).collect();
        let columns: Vec<Vec<(usize, i64)>> = faces[q]
            .iter()
            .map(|f| {
                let mut col: Vec<(usize, i64)> = (0..f.len())
                    .map(|skip| {
                        let face: Vec<usize> = f.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
                        (index[face.as_slice()], if skip % 2 == 0 { 1 } else { -1 })
                    })
                    .collect();
                col.sort_unstable();
                col
            })
            .collect();
        let (rank, factors) = integer_rank(faces[q - 1].len(), columns);
        ranks[q] = rank;
        if !factors.is_empty() {
            torsion.push(Torsion { degree: q as i64 - 1, factors });
        }
    }
    let betti = (0..top).map(|q| counts[q] - ranks[q] - ranks[q + 1]).collect();
    Ok(HomologyProfile { betti_minus_one: 0, betti, torsion, faces: counts })
}

/// Rank and nontrivial invariant factors of an integer matrix given by
/// sparse columns over `rows` rows.
fn integer_rank(rows: usize, columns: Vec<Vec<(usize, i64)>>) -> (usize, Vec<BigInt>) {
    let original = columns.clone();
    let mut cols: Vec<Option<Vec<(usize, i64)>>> = columns.into_iter().map(Some).collect();
    let mut row_cols: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); rows];
    for (c, col) in cols.iter().enumerate() {
        for &(r, _) in col.as_ref().expect("fresh") {
            row_cols[r].insert(c);
        }
    }
    let mut rank = 0;
    let mut overflow = false;
    // Unit-pivot elimination; a column is removed once it serves as a pivot.
    loop {
        let mut best: Option<(usize, usize, usize)> = None; // (cost, col, row)
        for (c, col) in cols.iter().enumerate() {
            let Some(col) = col else { continue };
            for &(r, v) in col {
                if v.abs() == 1 {
                    let cost = (col.len() - 1) * (row_cols[r].len() - 1);
                    if best.is_none_or(|b| cost < b.0) {
                        best = Some((cost, c, r));
                    }
                }
            }
            if matches!(best, Some((0, _, _))) {
                break;
            }
        }
        let Some((_, pc, pr)) = best else { break };
        let pivot = cols[pc].take().expect("live column");
        let pv = pivot.iter().find(|e| e.0 == pr).expect("pivot entry").1;
        for &(r, _) in &pivot {
            row_cols[r].remove(&pc);
        }
        let others: Vec<usize> = row_cols[pr].iter().copied().collect();
        for c in others {
            let col = cols[c].as_mut().expect("live column");
            let a = col.iter().find(|e| e.0 == pr).expect("entry in pivot row").1;
            // col -= a * pv * pivot  (pv = ±1 so the pivot-row entry cancels)
            let factor = a * pv;
            let mut merged: Vec<(usize, i64)> = Vec::with_capacity(col.len() + pivot.len());
            let (mut i, mut j) = (0, 0);
            while i < col.len() || j < pivot.len() {
                let take_col = j == pivot.len() || (i < col.len() && col[i].0 < pivot[j].0);
                let take_piv = i == col.len() || (j < pivot.len() && pivot[j].0 < col[i].0);
                if take_col {
                    merged.push(col[i]);
                    i += 1;
                } else if take_piv {
                    let (r, v) = pivot[j];
                    match v.checked_mul(factor).and_then(i64::checked_neg) {
                        Some(x) => merged.push((r, x)),
                        None => overflow = true,
                    }
                    row_cols[r].insert(c);
                    j += 1;
                } else {
                    let r = col[i].0;
                    match pivot[j].1.checked_mul(factor).and_then(|p| col[i].1.checked_sub(p)) {
                        Some(0) => {
                            row_cols[r].remove(&c);
                        }
                        Some(x) => merged.push((r, x)),
                        None => overflow = true,
                    }
                    i += 1;
                    j += 1;
                }
            }
            *col = merged;
        }
        rank += 1;
        if overflow {
            break;
        }
    }
    let (rank, rest) = if overflow {
        // Entries no longer fit in machine integers: start over densely.
        (0, original)
    } else {
        (rank, cols.into_iter().flatten().filter(|c| !c.is_empty()).collect())
    };
    if rest.is_empty() {
        return (rank, Vec::new());
    }
    let live_rows: Vec<usize> = {
        let mut s: BTreeSet<usize> = BTreeSet::new();
        for c in &rest {
            s.extend(c.iter().map(|e| e.0));
        }
        s.into_iter().collect()
    };
    let pos: HashMap<usize, usize> = live_rows.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let mut dense = vec![vec![BigInt::zero(); rest.len()]; live_rows.len()];
    for (c, col) in rest.iter().enumerate() {
        for &(r, v) in col {
            dense[pos[&r]][c] = BigInt::from(v);
        }
    }
    let diag = smith_diagonal(dense);
    let factors: Vec<BigInt> = diag.iter().filter(|d| !d.is_one()).cloned().collect();
    (rank + diag.len(), factors)
}

/// Nonzero diagonal of the Smith normal form, each entry dividing the next.
pub fn smith_diagonal(mut a: Vec<Vec<BigInt>>) -> Vec<BigInt> {
    let m = a.len();
    let n = if m == 0 { 0 } else { a[0].len() };
    let mut diag = Vec::new();
    let mut t = 0;
    while t < m.min(n) {
        // Smallest nonzero entry of the remaining block.
        let mut best: Option<(usize, usize)> = None;
        for i in t..m {
            for j in t..n {
                if !a[i][j].is_zero() && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((bi, bj)) = best else { break };
        a.swap(t, bi);
        for row in a.iter_mut() {
            row.swap(t, bj);
        }
        loop {
            let p = a[t][t].clone();
            let mut changed = false;
            for i in t + 1..m {
                if !a[i][t].is_zero() {
                    let q = a[i][t].div_floor(&p);
                    for j in t..n {
                        let v = &q * &a[t][j];
                        a[i][j] -= v;
                    }
                    if !a[i][t].is_zero() {
                        changed = true;
                    }
                }
            }
            for j in t + 1..n {
                if !a[t][j].is_zero() {
                    let q = a[t][j].div_floor(&p);
                    for i in t..m {
                        let v = &q * &a[i][t];
                        a[i][j] -= v;
                    }
                    if !a[t][j].is_zero() {
                        changed = true;
                    }
                }
            }
            if !changed {
                // Enforce divisibility of the rest by the pivot.
                let bad = (t + 1..m).find(|&i| (t + 1..n).any(|j| !(&a[i][j] % &p).is_zero()));
                match bad {
                    Some(i) => {
                        for j in t..n {
                            let v = a[i][j].clone();
                            a[t][j] += v;
                        }
                    }
                    None => break,
                }
            }
            // Move the smallest entry of row/column t onto the pivot.
            let mut bi = t;
            let mut bj = t;
            for i in t..m {
                if !a[i][t].is_zero() && (a[bi][bj].is_zero() || a[i][t].abs() < a[bi][bj].abs()) {
                    bi = i;
                    bj = t;
                }
            }
            for j in t..n {
                if !a[t][j].is_zero() && (a[bi][bj].is_zero() || a[t][j].abs() < a[bi][bj].abs()) {
                    bi = t;
                    bj = j;
                }
            }
            a.swap(t, bi);
            for row in a.iter_mut() {
                row.swap(t, bj);
            }
        }
        diag.push(a[t][t].abs());
        t += 1;
    }
    diag
}

/// Why a complex is known to be contractible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConeWitness {
    /// A poset element comparable to every other element.
    ComparableElement(usize),
    /// A vertex lying in every facet.
    ConeVertex(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Certificate {
    Contractible(ConeWitness),
    NonContractible(i64),
    Inconclusive,
}

/// Three-way contractibility verdict. `comparable[a][b]` (if given) is the
/// order relation of the poset whose order complex is `x`.
pub fn contractibility_certificate(x: &SimplicialComplex, h: &HomologyProfile, comparable: Option<&[Vec<bool>]>) -> Certificate {
    if let Some(rel) = comparable {
        let n = rel.len();
        if n > 0 {
            if let Some(a) = (0..n).find(|&a| (0..n).all(|b| rel[a][b] || rel[b][a])) {
                return Certificate::Contractible(ConeWitness::ComparableElement(a));
            }
        }
    }
    if let Some(&v) = x.cone_points().first() {
        return Certificate::Contractible(ConeWitness::ConeVertex(v));
    }
    match h.first_nonzero() {
        Some(q) => Certificate::NonContractible(q),
        None => Certificate::Inconclusive,
    }
}
