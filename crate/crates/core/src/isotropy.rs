//! Isotropy data of `G/H`: the reductive complement `m = h^⊥`, its
//! decomposition into irreducible summands and the structure constants
//! `d_i`, `b_i`, `c_i` and `[ijk]`.
//!
//! The decomposition is numeric. The Casimir operator of the acting algebra
//! splits `m` into eigenspaces; each eigenspace is refined by the eigenspaces
//! of a generic symmetric intertwiner until every piece has a
//! one-dimensional symmetric commutant. Equivalent pieces are detected by
//! computing intertwiner spaces.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liealg::{self, build_product, killing_gram, Family, LieAlgebraRep};
use crate::linalg::{self, cluster, sym_eigen_sorted, symmetric_commutant};
use crate::EPS_STRUCT;

/// One block of a block-diagonal subgroup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub family: Family,
    pub n: usize,
}

impl Block {
    pub fn new(family: Family, n: usize) -> Self {
        Block { family, n }
    }
}

/// Subgroup descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Subgroup {
    /// Consecutive diagonal blocks, one list per ambient factor. In `su(n)`
    /// the blocks are intersected with the traceless matrices.
    BlockProduct(Vec<Vec<Block>>),
    /// Circle with the given integer slope in the concatenated maximal-torus
    /// coordinates of all factors.
    TorusSlope(Vec<i64>),
    MaximalTorus,
    Trivial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceConfig {
    pub ambient: Vec<(Family, usize)>,
    pub q_scale: f64,
    pub subgroup: Subgroup,
}

impl SpaceConfig {
    pub fn new(family: Family, n: usize, subgroup: Subgroup) -> Self {
        SpaceConfig { ambient: vec![(family, n)], q_scale: 0.5, subgroup }
    }

    pub fn blocks(family: Family, n: usize, blocks: &[(Family, usize)]) -> Self {
        let b = blocks.iter().map(|&(f, k)| Block::new(f, k)).collect();
        Self::new(family, n, Subgroup::BlockProduct(vec![b]))
    }

    pub fn with_q_scale(mut self, q: f64) -> Self {
        self.q_scale = q;
        self
    }

    /// Human-readable name such as `SU(3)/T^2`.
    pub fn label(&self) -> String {
        let groups: Vec<String> =
            self.ambient.iter().map(|(f, n)| format!("{}({})", f.group_name(), n)).collect();
        let g = if groups.len() == 1 { groups[0].clone() } else { format!("({})", groups.join("x")) };
        let h = match &self.subgroup {
            Subgroup::Trivial => "{e}".to_string(),
            Subgroup::MaximalTorus => {
                let r: usize = self.ambient.iter().map(|(f, n)| f.torus_rank(*n)).sum();
                format!("T^{r}")
            }
            Subgroup::TorusSlope(s) => {
                let s: Vec<String> = s.iter().map(|v| v.to_string()).collect();
                format!("S1_{{{}}}", s.join(","))
            }
            Subgroup::BlockProduct(per) => {
                let parts: Vec<String> = per
                    .iter()
                    .map(|bl| {
                        let v: Vec<String> =
                            bl.iter().map(|b| format!("{}({})", b.family.group_name(), b.n)).collect();
                        if v.is_empty() { "1".to_string() } else { v.join("x") }
                    })
                    .collect();
                if parts.len() == 1 { parts[0].clone() } else { format!("({})", parts.join(")x(")) }
            }
        };
        format!("{g}/{h}")
    }
}

/// One irreducible summand `m_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summand {
    pub index: usize,
    pub d: usize,
    pub b: f64,
    pub c: f64,
    /// Columns of the m-basis spanning this summand.
    pub columns: Range<usize>,
    /// Equivalence class of the summand as a representation of the acting algebra.
    pub isotype: usize,
}

/// The numbers needed by the curvature formulas.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureData {
    pub dims: Vec<usize>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    /// `[ijk]`, row-major `ℓ × ℓ × ℓ`.
    pub triple: Vec<f64>,
    pub multiplicity_free: bool,
    /// Pairs of equivalent summands.
    pub equivalent: Vec<(usize, usize)>,
}

impl StructureData {
    /// Structure data from raw numbers; the tensor is symmetrized.
    pub fn new(dims: Vec<usize>, b: Vec<f64>, c: Vec<f64>, triple: Vec<f64>) -> Self {
        let l = dims.len();
        assert_eq!(b.len(), l);
        assert_eq!(c.len(), l);
        assert_eq!(triple.len(), l * l * l);
        StructureData { dims, b, c, triple, multiplicity_free: true, equivalent: Vec::new() }
    }

    pub fn ell(&self) -> usize {
        self.dims.len()
    }

    /// `dim m`.
    pub fn n(&self) -> usize {
        self.dims.iter().sum()
    }

    #[inline]
    pub fn t(&self, i: usize, j: usize, k: usize) -> f64 {
        let l = self.dims.len();
        self.triple[(i * l + j) * l + k]
    }

    /// `[I J K]` for index sets.
    pub fn t_sets(&self, i: &[usize], j: &[usize], k: &[usize]) -> f64 {
        let mut s = 0.0;
        for &a in i {
            for &b in j {
                for &c in k {
                    s += self.t(a, b, c);
                }
            }
        }
        s
    }

    /// `b_{G/H} = Σ d_i b_i`.
    pub fn b_total(&self) -> f64 {
        self.dims.iter().zip(&self.b).map(|(&d, &b)| d as f64 * b).sum()
    }

    /// `d_i b_i - 2 d_i c_i - Σ_{jk} [ijk]` per summand.
    pub fn identity_residuals(&self) -> Vec<f64> {
        let l = self.ell();
        (0..l)
            .map(|i| {
                let d = self.dims[i] as f64;
                let s: f64 = (0..l).flat_map(|j| (0..l).map(move |k| (j, k))).map(|(j, k)| self.t(i, j, k)).sum();
                d * self.b[i] - 2.0 * d * self.c[i] - s
            })
            .collect()
    }

    /// `d_i b_i - ½ Σ_{jk} [ijk]` per summand.
    pub fn positivity_margins(&self) -> Vec<f64> {
        let l = self.ell();
        (0..l)
            .map(|i| {
                let s: f64 = (0..l).flat_map(|j| (0..l).map(move |k| (j, k))).map(|(j, k)| self.t(i, j, k)).sum();
                self.dims[i] as f64 * self.b[i] - 0.5 * s
            })
            .collect()
    }
}

impl AsRef<StructureData> for StructureData {
    fn as_ref(&self) -> &StructureData {
        self
    }
}

/// `G/H` with its decomposition and structure constants.
#[derive(Clone)]
pub struct HomogeneousSpace {
    g: Arc<LieAlgebraRep>,
    label: String,
    config: Option<SpaceConfig>,
    /// Orthonormal frame of g: h first, then the summands in order.
    frame: DMatrix<f64>,
    h_dim: usize,
    /// Extra algebra (inside m) whose action was used to refine the decomposition.
    acting_extra: usize,
    summands: Vec<Summand>,
    data: StructureData,
    m0: Vec<usize>,
    /// Dimension of a torus of the normalizer absorbed into `h`.
    pub(crate) adjoined: usize,
    /// Bracket tensor in the adapted frame, row-major.
    adapted: Vec<f64>,
    /// `Σ |[e_α, e_β]|²` over `α ∈ m_i`, `β ∈ m_j`, all target directions.
    pair_norm: Vec<f64>,
}

impl fmt::Debug for HomogeneousSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HomogeneousSpace")
            .field("label", &self.label)
            .field("dim_g", &self.g.dim())
            .field("dim_h", &self.h_dim)
            .field("summands", &self.summands)
            .finish()
    }
}

impl AsRef<StructureData> for HomogeneousSpace {
    fn as_ref(&self) -> &StructureData {
        &self.data
    }
}

/// Builds `G/H` from a configuration.
pub fn build_space(cfg: &SpaceConfig) -> Result<HomogeneousSpace> {
    let g = Arc::new(build_product(&cfg.ambient, cfg.q_scale)?);
    let gens = subgroup_generators(&g, &cfg.subgroup)?;
    let d = g.dim();
    let mut cols = DMatrix::zeros(d, gens.len());
    for (k, m) in gens.iter().enumerate() {
        let coords = g.coords_of(m);
        let back = g.matrix_of(&coords);
        if (back - m).amax() > 1e-9 {
            return Err(Error::InvalidConfig("subgroup generator does not lie in the ambient algebra".into()));
        }
        cols.set_column(k, &DVector::from_vec(coords));
    }
    let h = linalg::orthonormal_span(&cols, 1e-12);
    let mut space = HomogeneousSpace::from_subalgebra(g, &h, cfg.label())?;
    space.config = Some(cfg.clone());
    Ok(space)
}

/// `[ijk]` as a row-major `ℓ³` array.
pub fn structure_tensor(space: &HomogeneousSpace) -> &[f64] {
    &space.data.triple
}

/// Per-summand constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummandConstants {
    pub d: Vec<usize>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub b_total: f64,
}

pub fn summand_constants(space: &HomogeneousSpace) -> SummandConstants {
    let s = &space.data;
    SummandConstants { d: s.dims.clone(), b: s.b.clone(), c: s.c.clone(), b_total: s.b_total() }
}

impl HomogeneousSpace {
    /// `G/H` for an explicit orthonormal basis of `h` (columns, g-coordinates).
    pub fn from_subalgebra(g: Arc<LieAlgebraRep>, h: &DMatrix<f64>, label: String) -> Result<Self> {
        Self::assemble(g, h, None, label)
    }

    /// The same `G/H`, decomposed with respect to `h ⊕ a` where `a ⊂ m` is an
    /// abelian subalgebra commuting with `h` (columns, g-coordinates).
    pub fn refined_by(&self, a: &DMatrix<f64>) -> Result<Self> {
        let mut s = Self::assemble(self.g.clone(), &self.h_basis(), Some(a), format!("{} [refined]", self.label))?;
        s.config = self.config.clone();
        Ok(s)
    }

    fn assemble(g: Arc<LieAlgebraRep>, h: &DMatrix<f64>, extra: Option<&DMatrix<f64>>, label: String) -> Result<Self> {
        let d = g.dim();
        let h_dim = h.ncols();
        if h_dim >= d {
            return Err(Error::DegenerateSpace);
        }
        let ads: Vec<DMatrix<f64>> = (0..d)
            .map(|a| {
                let mut e = vec![0.0; d];
                e[a] = 1.0;
                g.ad_matrix(&e)
            })
            .collect();
        let ad_of = |x: &[f64]| -> DMatrix<f64> {
            let mut m = DMatrix::zeros(d, d);
            for (a, &v) in x.iter().enumerate() {
                if v != 0.0 {
                    m += &ads[a] * v;
                }
            }
            m
        };
        let proj_out_h = DMatrix::identity(d, d) - h * h.transpose();
        let h_ads: Vec<DMatrix<f64>> = (0..h_dim).map(|k| ad_of(h.column(k).as_slice())).collect();
        let mut defect = 0.0f64;
        for (i, adz) in h_ads.iter().enumerate() {
            let out = &proj_out_h * adz * h;
            for j in 0..h_dim {
                if j != i {
                    defect = defect.max(out.column(j).amax());
                }
            }
        }
        if defect > EPS_STRUCT {
            return Err(Error::NotASubalgebra(defect));
        }
        let ideal = largest_ideal(&ads, h);
        if ideal > 0 {
            return Err(Error::NotEffective(ideal));
        }

        let mut acting: Vec<DMatrix<f64>> = h_ads.clone();
        if let Some(a) = extra {
            for k in 0..a.ncols() {
                acting.push(ad_of(a.column(k).as_slice()));
            }
        }
        let m_basis = linalg::complement(h, d);
        let nm = m_basis.ncols();
        let restrict = |ad: &DMatrix<f64>| m_basis.transpose() * ad * &m_basis;
        let r_act: Vec<DMatrix<f64>> = acting.iter().map(restrict).collect();
        let r_h: Vec<DMatrix<f64>> = h_ads.iter().map(restrict).collect();

        // Decompose m under the acting algebra.
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1507);
        let mut pieces: Vec<DMatrix<f64>> = Vec::new();
        let mut classes: Vec<usize> = Vec::new();
        let mut equivalent = Vec::new();
        let mut next_class = 0;
        let casimir = neg_sum_squares(&r_act, nm);
        let (vals, vecs) = sym_eigen_sorted(&casimir);
        let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for run in cluster(&vals, 1e-7 * scale) {
            let u = vecs.columns(run.start, run.len()).into_owned();
            let gens: Vec<DMatrix<f64>> = r_act.iter().map(|r| u.transpose() * r * &u).collect();
            let all_zero = gens.iter().all(|r| r.amax() < 1e-12);
            let local = if all_zero {
                // Trivial action: split along the standard directions of g.
                let embedded = &m_basis * &u;
                let mut standard = DMatrix::zeros(run.len(), d);
                for k in 0..d {
                    standard.set_column(k, &embedded.row(k).transpose());
                }
                let echelon = greedy_orthonormal(&standard, run.len());
                (0..run.len()).map(|k| &u * echelon.column(k)).map(|c| DMatrix::from_column_slice(nm, 1, c.as_slice())).collect::<Vec<_>>()
            } else {
                split_irreducible(&gens, run.len(), &mut rng).into_iter().map(|p| &u * p).collect()
            };
            let first = pieces.len();
            let comm_dim = if all_zero { run.len() * (run.len() + 1) / 2 } else { symmetric_commutant(&gens, run.len()).len() };
            for p in local {
                pieces.push(p);
                classes.push(usize::MAX);
            }
            let count = pieces.len() - first;
            if comm_dim == count {
                for c in classes.iter_mut().skip(first) {
                    *c = next_class;
                    next_class += 1;
                }
            } else {
                for i in first..pieces.len() {
                    if classes[i] != usize::MAX {
                        continue;
                    }
                    classes[i] = next_class;
                    let ri: Vec<DMatrix<f64>> = r_act.iter().map(|r| pieces[i].transpose() * r * &pieces[i]).collect();
                    for j in i + 1..pieces.len() {
                        if classes[j] != usize::MAX || pieces[j].ncols() != pieces[i].ncols() {
                            continue;
                        }
                        let rj: Vec<DMatrix<f64>> = r_act.iter().map(|r| pieces[j].transpose() * r * &pieces[j]).collect();
                        let equiv = if ri.is_empty() { true } else { linalg::intertwiner_dim(&ri, &rj) > 0 };
                        if equiv {
                            classes[j] = next_class;
                        }
                    }
                    next_class += 1;
                }
            }
        }

        // Constants per piece.
        let kill = killing_gram(&g);
        let kill_m = m_basis.transpose() * &kill * &m_basis;
        let cas_h = neg_sum_squares(&r_h, nm);
        struct Piece {
            basis: DMatrix<f64>,
            b: f64,
            c: f64,
            class: usize,
            key: Vec<f64>,
        }
        let mut ps: Vec<Piece> = pieces
            .into_iter()
            .zip(classes)
            .map(|(p, class)| {
                let k = p.ncols() as f64;
                let c = (p.transpose() * &cas_h * &p).trace() / k;
                let b = (p.transpose() * &kill_m * &p).trace() / k;
                let emb = &m_basis * &p;
                let key = (0..d).map(|r| emb.row(r).norm_squared()).collect();
                let c = if c.abs() < 1e-12 { 0.0 } else { c };
                let b = if b.abs() < 1e-12 { 0.0 } else { b };
                Piece { basis: p, b, c, class, key }
            })
            .collect();
        ps.sort_by(|x, y| {
            let cx = (x.c * 1e6).round() as i64;
            let cy = (y.c * 1e6).round() as i64;
            cx.cmp(&cy).then(x.basis.ncols().cmp(&y.basis.ncols())).then_with(|| {
                for (a, b) in x.key.iter().zip(&y.key) {
                    let (a, b) = ((a * 1e6).round() as i64, (b * 1e6).round() as i64);
                    if a != b {
                        return b.cmp(&a);
                    }
                }
                std::cmp::Ordering::Equal
            })
        });
        // Renumber classes in summand order.
        let mut remap = std::collections::BTreeMap::new();
        for p in &ps {
            let n = remap.len();
            remap.entry(p.class).or_insert(n);
        }

        let mut frame = DMatrix::zeros(d, d);
        frame.columns_mut(0, h_dim).copy_from(h);
        let mut summands = Vec::new();
        let mut col = 0;
        for (i, p) in ps.iter().enumerate() {
            let emb = &m_basis * &p.basis;
            frame.columns_mut(h_dim + col, p.basis.ncols()).copy_from(&emb);
            summands.push(Summand {
                index: i,
                d: p.basis.ncols(),
                b: p.b,
                c: p.c,
                columns: col..col + p.basis.ncols(),
                isotype: remap[&p.class],
            });
            col += p.basis.ncols();
        }
        for i in 0..summands.len() {
            for j in i + 1..summands.len() {
                if summands[i].isotype == summands[j].isotype {
                    equivalent.push((i, j));
                }
            }
        }

        let adapted = transform_tensor(g.bracket_tensor(), &frame);
        let l = summands.len();
        let mut triple = vec![0.0; l * l * l];
        let mut pair_norm = vec![0.0; l * l];
        let owner: Vec<usize> = summands.iter().flat_map(|s| std::iter::repeat_n(s.index, s.d)).collect();
        for a in 0..nm {
            for b in 0..nm {
                let base = ((h_dim + a) * d + (h_dim + b)) * d;
                let row = &adapted[base..base + d];
                let (i, j) = (owner[a], owner[b]);
                let mut tot = 0.0;
                for (c, &v) in row.iter().enumerate() {
                    let v2 = v * v;
                    tot += v2;
                    if c >= h_dim {
                        triple[(i * l + j) * l + owner[c - h_dim]] += v2;
                    }
                }
                pair_norm[i * l + j] += tot;
            }
        }
        for v in triple.iter_mut().chain(pair_norm.iter_mut()) {
            if *v < 1e-13 {
                *v = 0.0;
            }
        }
        let m0 = summands.iter().filter(|s| s.c.abs() < EPS_STRUCT).map(|s| s.index).collect();
        let data = StructureData {
            dims: summands.iter().map(|s| s.d).collect(),
            b: summands.iter().map(|s| s.b).collect(),
            c: summands.iter().map(|s| s.c).collect(),
            triple,
            multiplicity_free: equivalent.is_empty(),
            equivalent,
        };
        Ok(HomogeneousSpace {
            g,
            label,
            config: None,
            frame,
            h_dim,
            acting_extra: extra.map_or(0, |a| a.ncols()),
            summands,
            data,
            m0,
            adjoined: 0,
            adapted,
            pair_norm,
        })
    }

    pub fn algebra(&self) -> &LieAlgebraRep {
        &self.g
    }

    pub fn algebra_arc(&self) -> Arc<LieAlgebraRep> {
        self.g.clone()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn config(&self) -> Option<&SpaceConfig> {
        self.config.as_ref()
    }

    pub fn dim_g(&self) -> usize {
        self.g.dim()
    }

    pub fn dim_h(&self) -> usize {
        self.h_dim
    }

    pub fn dim_m(&self) -> usize {
        self.g.dim() - self.h_dim
    }

    /// Number of summands `ℓ`.
    pub fn ell(&self) -> usize {
        self.summands.len()
    }

    pub fn summands(&self) -> &[Summand] {
        &self.summands
    }

    pub fn structure(&self) -> &StructureData {
        &self.data
    }

    pub fn multiplicity_free(&self) -> bool {
        self.data.multiplicity_free
    }

    /// Dimension of the extra algebra used to refine the decomposition
    /// (zero for the plain isotropy decomposition).
    pub fn refinement_dim(&self) -> usize {
        self.acting_extra
    }

    /// Dimension of the normalizer torus absorbed into `h` by
    /// [`crate::lattice::adjoin_maximal_torus`] (zero otherwise).
    pub fn adjoined_torus_dim(&self) -> usize {
        self.adjoined
    }

    /// Summands on which `h` acts trivially.
    pub fn m0_index(&self) -> &[usize] {
        &self.m0
    }

    pub fn h_basis(&self) -> DMatrix<f64> {
        self.frame.columns(0, self.h_dim).into_owned()
    }

    pub fn m_basis(&self) -> DMatrix<f64> {
        self.frame.columns(self.h_dim, self.dim_m()).into_owned()
    }

    /// Orthonormal basis of `m_i` in g-coordinates.
    pub fn summand_basis(&self, i: usize) -> DMatrix<f64> {
        let s = &self.summands[i];
        self.frame.columns(self.h_dim + s.columns.start, s.d).into_owned()
    }

    /// Orthonormal frame of g adapted to `h ⊕ m_1 ⊕ … ⊕ m_ℓ`.
    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    /// Bracket coefficient in the adapted frame.
    #[inline]
    pub fn adapted(&self, a: usize, b: usize, c: usize) -> f64 {
        let d = self.g.dim();
        self.adapted[(a * d + b) * d + c]
    }

    /// Frame index of the first vector of `m`.
    pub fn m_offset(&self) -> usize {
        self.h_dim
    }

    /// `Σ |[e_α, e_β]|²` over the bases of `m_i` and `m_j`.
    pub fn pair_bracket_norm(&self, i: usize, j: usize) -> f64 {
        self.pair_norm[i * self.ell() + j]
    }

    /// Largest defect of `[h, m_i] ⊆ m_i` over all summands.
    pub fn invariance_defect(&self) -> f64 {
        let d = self.g.dim();
        let mut worst = 0.0f64;
        for s in &self.summands {
            for z in 0..self.h_dim {
                for a in s.columns.clone() {
                    for c in 0..d {
                        let inside = c >= self.h_dim && s.columns.contains(&(c - self.h_dim));
                        if !inside {
                            worst = worst.max(self.adapted(z, self.h_dim + a, c).abs());
                        }
                    }
                }
            }
        }
        worst
    }
}

fn neg_sum_squares(rs: &[DMatrix<f64>], n: usize) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(n, n);
    for r in rs {
        c -= r * r;
    }
    c
}

/// Picks an orthonormal basis of the column space of `standard` (rows = the
/// subspace, columns = projections of standard basis vectors), preferring
/// earlier standard directions.
fn greedy_orthonormal(standard: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let n = standard.nrows();
    let mut out: Vec<DVector<f64>> = Vec::new();
    for j in 0..standard.ncols() {
        if out.len() == k {
            break;
        }
        let mut v = standard.column(j).into_owned();
        for _ in 0..2 {
            for u in &out {
                let p = u.dot(&v);
                v -= u * p;
            }
        }
        let nv = v.norm();
        if nv > 1e-6 {
            out.push(v / nv);
        }
    }
    let mut m = DMatrix::zeros(n, out.len());
    for (i, v) in out.iter().enumerate() {
        m.set_column(i, v);
    }
    m
}

/// Splits an invariant subspace (given by restricted generators) into
/// irreducible pieces; returns orthonormal bases in local coordinates.
fn split_irreducible(gens: &[DMatrix<f64>], n: usize, rng: &mut ChaCha8Rng) -> Vec<DMatrix<f64>> {
    let comm = symmetric_commutant(gens, n);
    if comm.len() <= 1 {
        return vec![DMatrix::identity(n, n)];
    }
    let mut s = DMatrix::zeros(n, n);
    for c in &comm {
        s += c * rng.gen_range(1.0..2.0);
    }
    let (vals, vecs) = sym_eigen_sorted(&s);
    let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut out = Vec::new();
    for run in cluster(&vals, 1e-7 * scale) {
        let u = vecs.columns(run.start, run.len()).into_owned();
        if run.len() == n {
            // Degenerate draw; try again.
            return split_irreducible(gens, n, rng);
        }
        let sub: Vec<DMatrix<f64>> = gens.iter().map(|r| u.transpose() * r * &u).collect();
        for p in split_irreducible(&sub, run.len(), rng) {
            out.push(&u * p);
        }
    }
    out
}

/// Dimension of the largest ideal of g contained in `h`.
fn largest_ideal(ads: &[DMatrix<f64>], h: &DMatrix<f64>) -> usize {
    let d = h.nrows();
    let mut ideal = h.clone();
    loop {
        let r = ideal.ncols();
        if r == 0 {
            return 0;
        }
        let proj = DMatrix::identity(d, d) - &ideal * ideal.transpose();
        let mut gram = DMatrix::zeros(r, r);
        for ad in ads {
            let m = &proj * ad * &ideal;
            gram += m.transpose() * m;
        }
        let null = linalg::null_space_of_gram(&gram, 1e-12);
        if null.ncols() == r {
            return r;
        }
        ideal = &ideal * null;
    }
}

/// `C'[a][b][c] = Σ C[x][y][z] W_xa W_yb W_zc` for an orthogonal frame `W`.
fn transform_tensor(c: &[f64], w: &DMatrix<f64>) -> Vec<f64> {
    let d = w.nrows();
    // Step 1: contract the last index.
    let c1 = DMatrix::from_row_slice(d * d, d, c) * w; // [(x,y)][c]
    // Step 2: contract the middle index.
    let mut c2 = vec![0.0; d * d * d]; // [x][b][c]
    for x in 0..d {
        let block = c1.rows(x * d, d); // [y][c]
        let t = w.transpose() * block; // [b][c]
        for b in 0..d {
            for cc in 0..d {
                c2[(x * d + b) * d + cc] = t[(b, cc)];
            }
        }
    }
    // Step 3: contract the first index.
    let m2 = DMatrix::from_row_slice(d, d * d, &c2);
    let out = w.transpose() * m2;
    let mut v = vec![0.0; d * d * d];
    for a in 0..d {
        for k in 0..d * d {
            let x = out[(a, k)];
            v[a * d * d + k] = if x.abs() < 1e-14 { 0.0 } else { x };
        }
    }
    v
}

/// Spanning matrices (realified, full size) of the subgroup's Lie algebra.
fn subgroup_generators(g: &LieAlgebraRep, sub: &Subgroup) -> Result<Vec<DMatrix<f64>>> {
    let size = g.matrix_size();
    let place = |f: &liealg::Factor, m: DMatrix<f64>| {
        let mut full = DMatrix::zeros(size, size);
        full.view_mut((f.block_start, f.block_start), (f.block_size, f.block_size)).copy_from(&m);
        full
    };
    let mut out = Vec::new();
    match sub {
        Subgroup::Trivial => {}
        Subgroup::MaximalTorus => {
            for f in g.factors() {
                for t in torus_generators(f.family, f.n) {
                    out.push(place(f, t));
                }
            }
        }
        Subgroup::TorusSlope(slope) => {
            let total: usize = g.factors().iter().map(|f| f.family.torus_rank(f.n)).sum();
            if slope.len() != total {
                return Err(Error::InvalidConfig(format!(
                    "slope has {} entries, maximal torus has rank {total}",
                    slope.len()
                )));
            }
            if slope.iter().all(|&s| s == 0) {
                return Err(Error::InvalidConfig("slope vector is zero".into()));
            }
            let mut full = DMatrix::zeros(size, size);
            let mut k = 0;
            for f in g.factors() {
                for t in torus_generators(f.family, f.n) {
                    full += place(f, t) * slope[k] as f64;
                    k += 1;
                }
            }
            out.push(full);
        }
        Subgroup::BlockProduct(per) => {
            if per.len() != g.factors().len() {
                return Err(Error::InvalidConfig(format!(
                    "{} block lists for {} ambient factors",
                    per.len(),
                    g.factors().len()
                )));
            }
            for (f, blocks) in g.factors().iter().zip(per) {
                for m in block_generators(f.family, f.n, blocks)? {
                    out.push(place(f, m));
                }
            }
        }
    }
    Ok(out)
}

fn unit(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] = 1.0;
    m
}

/// Standard generators of the maximal torus, in the factor's realified size.
pub fn torus_generators(family: Family, n: usize) -> Vec<DMatrix<f64>> {
    let z = DMatrix::zeros(n, n);
    match family {
        Family::SpecialUnitary => (0..n - 1)
            .map(|j| liealg::realify(&z, &(unit(n, j, j) - unit(n, n - 1, n - 1))))
            .collect(),
        Family::Unitary => (0..n).map(|j| liealg::realify(&z, &unit(n, j, j))).collect(),
        Family::SpecialOrthogonal => (0..n / 2).map(|t| unit(n, 2 * t, 2 * t + 1) - unit(n, 2 * t + 1, 2 * t)).collect(),
        Family::Symplectic => (0..n).map(|j| liealg::quaternionic(&z, &unit(n, j, j), &z, &z)).collect(),
    }
}

/// Complex generators `(re, im)` of `u(k)` or `su(k)`.
fn unitary_parts(k: usize, special: bool) -> Vec<(DMatrix<f64>, DMatrix<f64>)> {
    let z = DMatrix::zeros(k, k);
    let mut v = Vec::new();
    if special {
        for j in 1..k {
            v.push((z.clone(), unit(k, j - 1, j - 1) - unit(k, j, j)));
        }
    } else {
        for j in 0..k {
            v.push((z.clone(), unit(k, j, j)));
        }
    }
    for i in 0..k {
        for j in i + 1..k {
            v.push((unit(k, i, j) - unit(k, j, i), z.clone()));
            v.push((z.clone(), unit(k, i, j) + unit(k, j, i)));
        }
    }
    v
}

fn embed(m: &DMatrix<f64>, n: usize, p: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n, n);
    out.view_mut((p, p), (m.nrows(), m.ncols())).copy_from(m);
    out
}

fn block_generators(family: Family, n: usize, blocks: &[Block]) -> Result<Vec<DMatrix<f64>>> {
    let bad = |b: &Block| {
        Error::InvalidConfig(format!("block {}({}) is not supported inside {}({})", b.family, b.n, family, n))
    };
    let mut out = Vec::new();
    let mut p = 0usize;
    match family {
        Family::SpecialOrthogonal => {
            for b in blocks {
                match b.family {
                    Family::SpecialOrthogonal => {
                        if p + b.n > n {
                            return Err(overflow(family, n));
                        }
                        for i in 0..b.n {
                            for j in i + 1..b.n {
                                out.push(unit(n, p + i, p + j) - unit(n, p + j, p + i));
                            }
                        }
                        p += b.n;
                    }
                    Family::Unitary | Family::SpecialUnitary => {
                        if b.n == 0 || p + 2 * b.n > n {
                            return Err(overflow(family, n));
                        }
                        let special = b.family == Family::SpecialUnitary;
                        for (re, im) in unitary_parts(b.n, special) {
                            out.push(embed(&liealg::realify(&re, &im), n, p));
                        }
                        p += 2 * b.n;
                    }
                    _ => return Err(bad(b)),
                }
            }
        }
        Family::SpecialUnitary | Family::Unitary => {
            let mut parts = Vec::new();
            for b in blocks {
                let special = match b.family {
                    Family::Unitary => false,
                    Family::SpecialUnitary => true,
                    _ => return Err(bad(b)),
                };
                if b.n == 0 || p + b.n > n {
                    return Err(overflow(family, n));
                }
                for (re, im) in unitary_parts(b.n, special) {
                    parts.push((embed(&re, n, p), embed(&im, n, p)));
                }
                p += b.n;
            }
            if family == Family::SpecialUnitary {
                // Intersect with the traceless matrices.
                let traced: Vec<usize> = (0..parts.len()).filter(|&k| parts[k].1.trace().abs() > 1e-12).collect();
                if let Some(&first) = traced.first() {
                    let (t0, im0) = (parts[first].1.trace(), parts[first].1.clone());
                    for &k in &traced[1..] {
                        let t = parts[k].1.trace();
                        parts[k].1 = &parts[k].1 - &im0 * (t / t0);
                    }
                    parts.remove(first);
                }
            }
            for (re, im) in parts {
                out.push(liealg::realify(&re, &im));
            }
        }
        Family::Symplectic => {
            let z = DMatrix::zeros(n, n);
            for b in blocks {
                if b.n == 0 || p + b.n > n {
                    return Err(overflow(family, n));
                }
                match b.family {
                    Family::Symplectic => {
                        for (re, im) in unitary_parts(b.n, false) {
                            out.push(liealg::quaternionic(&embed(&re, n, p), &embed(&im, n, p), &z, &z));
                        }
                        for i in 0..b.n {
                            for j in i..b.n {
                                let s = if i == j { unit(n, p + i, p + i) } else { unit(n, p + i, p + j) + unit(n, p + j, p + i) };
                                out.push(liealg::quaternionic(&z, &z, &s, &z));
                                out.push(liealg::quaternionic(&z, &z, &z, &s));
                            }
                        }
                    }
                    Family::Unitary | Family::SpecialUnitary => {
                        let special = b.family == Family::SpecialUnitary;
                        for (re, im) in unitary_parts(b.n, special) {
                            out.push(liealg::quaternionic(&embed(&re, n, p), &embed(&im, n, p), &z, &z));
                        }
                    }
                    _ => return Err(bad(b)),
                }
                p += b.n;
            }
        }
    }
    Ok(out)
}

fn overflow(family: Family, n: usize) -> Error {
    Error::InvalidConfig(format!("block sizes exceed the rank of {}({})", family, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Family::*;

    fn su3_t2() -> HomogeneousSpace {
        build_space(&SpaceConfig::new(SpecialUnitary, 3, Subgroup::MaximalTorus)).unwrap()
    }

    #[test]
    fn su3_torus_root_spaces() {
        let s = su3_t2();
        assert_eq!(s.ell(), 3);
        assert!(s.summands().iter().all(|x| x.d == 2 && x.c > 0.0));
        assert!(s.m0_index().is_empty());
        assert!(s.multiplicity_free());
        let t = s.structure();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let distinct = i != j && j != k && i != k;
                    assert_eq!(t.t(i, j, k) > 1e-9, distinct);
                    assert!((t.t(i, j, k) - t.t(j, i, k)).abs() < 1e-12);
                    assert!((t.t(i, j, k) - t.t(k, j, i)).abs() < 1e-12);
                }
            }
        }
        for r in t.identity_residuals() {
            assert!(r.abs() < 1e-10);
        }
        assert!(s.invariance_defect() < 1e-9);
    }

    #[test]
    fn so8_torus_root_planes() {
        let s = build_space(&SpaceConfig::new(SpecialOrthogonal, 8, Subgroup::MaximalTorus)).unwrap();
        assert_eq!(s.ell(), 12);
        assert!(s.summands().iter().all(|x| x.d == 2));
        assert!(s.multiplicity_free());
        for r in s.structure().identity_residuals() {
            assert!(r.abs() < 1e-10);
        }
    }

    #[test]
    fn so5_so3_has_equivalent_summands() {
        let s = build_space(&SpaceConfig::blocks(SpecialOrthogonal, 5, &[(SpecialOrthogonal, 3)])).unwrap();
        let dims: Vec<usize> = s.summands().iter().map(|x| x.d).collect();
        assert_eq!(dims, vec![1, 3, 3]);
        assert_eq!(s.m0_index(), &[0]);
        assert!(!s.multiplicity_free());
        assert_eq!(s.structure().equivalent, vec![(1, 2)]);
    }

    #[test]
    fn so4_so3_irreducible() {
        let s = build_space(&SpaceConfig::blocks(SpecialOrthogonal, 4, &[(SpecialOrthogonal, 3)])).unwrap();
        assert_eq!(s.ell(), 1);
        assert_eq!(s.summands()[0].d, 3);
    }

    #[test]
    fn torus_quotient_is_flat() {
        let cfg = SpaceConfig { ambient: vec![(Unitary, 1), (Unitary, 1)], q_scale: 0.5, subgroup: Subgroup::Trivial };
        let s = build_space(&cfg).unwrap();
        assert_eq!(s.ell(), 2);
        assert!(!s.multiplicity_free());
        assert!(s.structure().triple.iter().all(|&v| v == 0.0));
        assert!(s.summands().iter().all(|x| x.b == 0.0 && x.c == 0.0));
    }

    #[test]
    fn block_family_constants() {
        // SO(8)/U(2)xSO(4): n = 4, n1 = 2, n2 = 2.
        let s = build_space(&SpaceConfig::blocks(SpecialOrthogonal, 8, &[(Unitary, 2), (SpecialOrthogonal, 4)])).unwrap();
        let dims: Vec<usize> = s.summands().iter().map(|x| x.d).collect();
        assert_eq!(dims, vec![2, 16]);
        for x in s.summands() {
            assert!((x.b - 12.0).abs() < 1e-10);
        }
        assert!((s.structure().t(0, 1, 1) - 16.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_subgroups() {
        let full = SpaceConfig::blocks(SpecialUnitary, 3, &[(SpecialUnitary, 3)]);
        assert!(matches!(build_space(&full), Err(Error::DegenerateSpace)));
        let ideal = SpaceConfig {
            ambient: vec![(SpecialUnitary, 2), (SpecialUnitary, 2)],
            q_scale: 0.5,
            subgroup: Subgroup::BlockProduct(vec![vec![Block::new(SpecialUnitary, 2)], vec![]]),
        };
        assert!(matches!(build_space(&ideal), Err(Error::NotEffective(3))));
        let too_big = SpaceConfig::blocks(SpecialOrthogonal, 4, &[(SpecialOrthogonal, 5)]);
        assert!(matches!(build_space(&too_big), Err(Error::InvalidConfig(_))));
        let slope = SpaceConfig::new(SpecialUnitary, 3, Subgroup::TorusSlope(vec![0, 0]));
        assert!(matches!(build_space(&slope), Err(Error::InvalidConfig(_))));
        let center = SpaceConfig::blocks(Unitary, 2, &[(Unitary, 2)]);
        assert!(build_space(&center).is_err());
    }

    #[test]
    fn subalgebra_check() {
        let g = Arc::new(build_product(&[(SpecialUnitary, 3)], 0.5).unwrap());
        let mut h = DMatrix::zeros(8, 2);
        h[(2, 0)] = 1.0;
        h[(3, 1)] = 1.0;
        assert!(matches!(HomogeneousSpace::from_subalgebra(g, &h, "x".into()), Err(Error::NotASubalgebra(_))));
    }

    #[test]
    fn q_scale_covariance() {
        let a = su3_t2();
        let b = build_space(&SpaceConfig::new(SpecialUnitary, 3, Subgroup::MaximalTorus).with_q_scale(1.5)).unwrap();
        let r = 1.5 / 0.5;
        for (x, y) in a.structure().b.iter().zip(&b.structure().b) {
            assert!((x / r - y).abs() < 1e-10);
        }
        for (x, y) in a.structure().triple.iter().zip(&b.structure().triple) {
            assert!((x / r - y).abs() < 1e-10);
        }
        assert!(b.structure().identity_residuals().iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn labels() {
        assert_eq!(SpaceConfig::new(SpecialUnitary, 3, Subgroup::MaximalTorus).label(), "SU(3)/T^2");
        let c = SpaceConfig::blocks(SpecialOrthogonal, 10, &[(Unitary, 2), (SpecialOrthogonal, 6)]);
        assert_eq!(c.label(), "SO(10)/U(2)xSO(6)");
    }
}
