//! Compact classical matrix Lie algebras with the inner product
//! `Q(X, Y) = -qScale * tr(XY)` on the defining representation.
//!
//! Complex and quaternionic matrices are realified once; every basis element
//! is stored as a real skew-symmetric matrix. Products of several classical
//! factors are supported and realized block-diagonally.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::EPS_STRUCT;

/// Classical compact family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "su")]
    SpecialUnitary,
    #[serde(rename = "so")]
    SpecialOrthogonal,
    #[serde(rename = "sp")]
    Symplectic,
    #[serde(rename = "u")]
    Unitary,
}

impl Family {
    pub fn min_rank(self) -> usize {
        match self {
            Family::SpecialUnitary => 2,
            Family::SpecialOrthogonal => 3,
            Family::Symplectic | Family::Unitary => 1,
        }
    }

    pub fn dim(self, n: usize) -> usize {
        match self {
            Family::SpecialUnitary => n * n - 1,
            Family::SpecialOrthogonal => n * (n - 1) / 2,
            Family::Symplectic => n * (2 * n + 1),
            Family::Unitary => n * n,
        }
    }

    /// Size of the realified defining representation.
    pub fn real_size(self, n: usize) -> usize {
        match self {
            Family::SpecialOrthogonal => n,
            Family::SpecialUnitary | Family::Unitary => 2 * n,
            Family::Symplectic => 4 * n,
        }
    }

    /// Ratio between the real trace of a realified matrix and the trace on
    /// the defining representation.
    fn trace_factor(self) -> f64 {
        match self {
            Family::SpecialOrthogonal => 1.0,
            _ => 2.0,
        }
    }

    /// Rank of the maximal torus.
    pub fn torus_rank(self, n: usize) -> usize {
        match self {
            Family::SpecialUnitary => n - 1,
            Family::SpecialOrthogonal => n / 2,
            Family::Symplectic | Family::Unitary => n,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Family::SpecialUnitary => "su",
            Family::SpecialOrthogonal => "so",
            Family::Symplectic => "sp",
            Family::Unitary => "u",
        }
    }

    pub fn group_name(self) -> &'static str {
        match self {
            Family::SpecialUnitary => "SU",
            Family::SpecialOrthogonal => "SO",
            Family::Symplectic => "Sp",
            Family::Unitary => "U",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "su" => Ok(Family::SpecialUnitary),
            "so" => Ok(Family::SpecialOrthogonal),
            "sp" => Ok(Family::Symplectic),
            "u" => Ok(Family::Unitary),
            _ => Err(Error::UnsupportedFamily(s.to_string())),
        }
    }
}

/// One simple (or unitary) factor of a product algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub family: Family,
    pub n: usize,
    /// First basis index belonging to this factor.
    pub offset: usize,
    pub dim: usize,
    /// First row/column of this factor's block in the realified matrices.
    pub block_start: usize,
    pub block_size: usize,
}

/// A compact Lie algebra with a Q-orthonormal basis and its bracket tensor.
#[derive(Debug, Clone)]
pub struct LieAlgebraRep {
    factors: Vec<Factor>,
    q_scale: f64,
    dim: usize,
    size: usize,
    basis: Vec<DMatrix<f64>>,
    /// Row `a` holds the coefficients turning a matrix into `Q(M, e_a)`.
    dual: DMatrix<f64>,
    bracket: Vec<f64>,
}

/// Builds `family(n)` with `Q = -q_scale * tr`.
pub fn build_algebra(family: Family, n: usize, q_scale: f64) -> Result<LieAlgebraRep> {
    build_product(&[(family, n)], q_scale)
}

/// Builds the direct sum of the given classical factors.
pub fn build_product(factors: &[(Family, usize)], q_scale: f64) -> Result<LieAlgebraRep> {
    if factors.is_empty() {
        return Err(Error::InvalidConfig("no ambient factors".into()));
    }
    if !(q_scale > 0.0 && q_scale.is_finite()) {
        return Err(Error::InvalidConfig(format!("qScale must be positive, got {q_scale}")));
    }
    for &(family, n) in factors {
        if n < family.min_rank() {
            return Err(Error::RankOutOfRange { family: family.to_string(), n });
        }
    }
    let size: usize = factors.iter().map(|&(f, n)| f.real_size(n)).sum();
    let mut layout = Vec::new();
    let mut basis = Vec::new();
    let mut block_start = 0;
    for &(family, n) in factors {
        let block_size = family.real_size(n);
        let offset = basis.len();
        for m in standard_matrices(family, n) {
            let q = -q_scale * (&m * &m).trace() / family.trace_factor();
            let mut full = DMatrix::zeros(size, size);
            full.view_mut((block_start, block_start), (block_size, block_size))
                .copy_from(&(m / q.sqrt()));
            basis.push(full);
        }
        layout.push(Factor {
            family,
            n,
            offset,
            dim: basis.len() - offset,
            block_start,
            block_size,
        });
        block_start += block_size;
    }
    let dim = basis.len();
    let mut dual = DMatrix::zeros(dim, size * size);
    for f in &layout {
        let w = q_scale / f.family.trace_factor();
        for a in f.offset..f.offset + f.dim {
            for (k, v) in basis[a].iter().enumerate() {
                dual[(a, k)] = w * v;
            }
        }
    }
    let mut alg = LieAlgebraRep {
        factors: layout,
        q_scale,
        dim,
        size,
        basis,
        dual,
        bracket: vec![0.0; dim * dim * dim],
    };
    for a in 0..dim {
        for b in (a + 1)..dim {
            let comm = &alg.basis[a] * &alg.basis[b] - &alg.basis[b] * &alg.basis[a];
            let coords = alg.coords_of(&comm);
            for (c, &v) in coords.iter().enumerate() {
                let v = if v.abs() < 1e-14 { 0.0 } else { v };
                alg.bracket[(a * dim + b) * dim + c] = v;
                alg.bracket[(b * dim + a) * dim + c] = -v;
            }
        }
    }
    Ok(alg)
}

impl LieAlgebraRep {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn q_scale(&self) -> f64 {
        self.q_scale
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Family of a simple (single-factor) algebra.
    pub fn family(&self) -> Family {
        self.factors[0].family
    }

    pub fn rank_parameter(&self) -> usize {
        self.factors[0].n
    }

    pub fn basis(&self) -> &[DMatrix<f64>] {
        &self.basis
    }

    /// Size of the realified matrices.
    pub fn matrix_size(&self) -> usize {
        self.size
    }

    /// `C[a][b][c]`, the coefficient of `e_c` in `[e_a, e_b]`.
    #[inline]
    pub fn structure(&self, a: usize, b: usize, c: usize) -> f64 {
        self.bracket[(a * self.dim + b) * self.dim + c]
    }

    pub fn bracket_tensor(&self) -> &[f64] {
        &self.bracket
    }

    /// `Q(X, Y)` for matrices in the realified representation.
    pub fn q(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        self.factors
            .iter()
            .map(|f| {
                let (s, k) = (f.block_start, f.block_size);
                let xs = x.view((s, s), (k, k));
                let ys = y.view((s, s), (k, k));
                -self.q_scale * (xs * ys).trace() / f.family.trace_factor()
            })
            .sum()
    }

    /// Coordinates `Q(M, e_a)` of a skew matrix in the orthonormal basis.
    pub fn coords_of(&self, m: &DMatrix<f64>) -> Vec<f64> {
        let flat = nalgebra::DVector::from_column_slice(m.as_slice());
        (&self.dual * flat).iter().copied().collect()
    }

    pub fn matrix_of(&self, coords: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for (c, e) in coords.iter().zip(&self.basis) {
            if *c != 0.0 {
                m += e * *c;
            }
        }
        m
    }

    /// Matrix of `ad(x)` on coordinates: column `b` is `[x, e_b]`.
    pub fn ad_matrix(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim;
        let mut ad = DMatrix::zeros(d, d);
        for (a, &xa) in x.iter().enumerate() {
            if xa == 0.0 {
                continue;
            }
            for b in 0..d {
                let row = &self.bracket[(a * d + b) * d..(a * d + b + 1) * d];
                for (c, &v) in row.iter().enumerate() {
                    ad[(c, b)] += xa * v;
                }
            }
        }
        ad
    }

    /// Largest Jacobi-identity defect over basis triples.
    pub fn jacobi_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in a + 1..d {
                for c in b + 1..d {
                    for e in 0..d {
                        let mut s = 0.0;
                        for f in 0..d {
                            s += self.structure(b, c, f) * self.structure(a, f, e)
                                + self.structure(c, a, f) * self.structure(b, f, e)
                                + self.structure(a, b, f) * self.structure(c, f, e);
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}

/// `[X, Y]` on coefficient vectors.
pub fn bracket(alg: &LieAlgebraRep, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let d = alg.dim;
    for v in [x, y] {
        if v.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: v.len() });
        }
    }
    let mut out = vec![0.0; d];
    for (a, &xa) in x.iter().enumerate() {
        if xa == 0.0 {
            continue;
        }
        for (b, &yb) in y.iter().enumerate() {
            if yb == 0.0 {
                continue;
            }
            let row = &alg.bracket[(a * d + b) * d..(a * d + b + 1) * d];
            for (o, &v) in out.iter_mut().zip(row) {
                *o += xa * yb * v;
            }
        }
    }
    Ok(out)
}

/// Gram matrix of `B(X, Y) = -tr(ad X ad Y)` on the orthonormal basis.
pub fn killing_gram(alg: &LieAlgebraRep) -> DMatrix<f64> {
    let d = alg.dim;
    let rows = DMatrix::from_row_slice(d, d * d, &alg.bracket);
    let k = &rows * rows.transpose();
    k.map(|v| if v.abs() < EPS_STRUCT * 1e-3 { 0.0 } else { v })
}

fn unit(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] = 1.0;
    m
}

/// Realification `A + iB -> [[A, -B], [B, A]]`.
pub(crate) fn realify(re: &DMatrix<f64>, im: &DMatrix<f64>) -> DMatrix<f64> {
    let n = re.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(re);
    m.view_mut((n, n), (n, n)).copy_from(re);
    m.view_mut((0, n), (n, n)).copy_from(&(-im));
    m.view_mut((n, 0), (n, n)).copy_from(im);
    m
}

/// Quaternionic skew-Hermitian matrix `A + jB` as the realified complex
/// matrix `[[A, -conj B], [B, conj A]]`.
pub(crate) fn quaternionic(
    a_re: &DMatrix<f64>,
    a_im: &DMatrix<f64>,
    b_re: &DMatrix<f64>,
    b_im: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = a_re.nrows();
    let mut re = DMatrix::zeros(2 * n, 2 * n);
    let mut im = DMatrix::zeros(2 * n, 2 * n);
    re.view_mut((0, 0), (n, n)).copy_from(a_re);
    im.view_mut((0, 0), (n, n)).copy_from(a_im);
    re.view_mut((n, n), (n, n)).copy_from(a_re);
    im.view_mut((n, n), (n, n)).copy_from(&(-a_im));
    re.view_mut((n, 0), (n, n)).copy_from(b_re);
    im.view_mut((n, 0), (n, n)).copy_from(b_im);
    re.view_mut((0, n), (n, n)).copy_from(&(-b_re));
    im.view_mut((0, n), (n, n)).copy_from(b_im);
    realify(&re, &im)
}

/// Q-orthogonal standard matrices of `family(n)`; torus generators first.
pub(crate) fn standard_matrices(family: Family, n: usize) -> Vec<DMatrix<f64>> {
    let zero = DMatrix::zeros(n, n);
    let mut out = Vec::new();
    match family {
        Family::SpecialOrthogonal => {
            let skew = |i: usize, j: usize| unit(n, i, j) - unit(n, j, i);
            for t in 0..n / 2 {
                out.push(skew(2 * t, 2 * t + 1));
            }
            for i in 0..n {
                for j in i + 1..n {
                    if !(i % 2 == 0 && j == i + 1) {
                        out.push(skew(i, j));
                    }
                }
            }
        }
        Family::SpecialUnitary | Family::Unitary => {
            if family == Family::Unitary {
                for j in 0..n {
                    out.push(realify(&zero, &unit(n, j, j)));
                }
            } else {
                for j in 1..n {
                    let mut d = DMatrix::zeros(n, n);
                    for i in 0..j {
                        d[(i, i)] = 1.0;
                    }
                    d[(j, j)] = -(j as f64);
                    out.push(realify(&zero, &d));
                }
            }
            for i in 0..n {
                for j in i + 1..n {
                    out.push(realify(&(unit(n, i, j) - unit(n, j, i)), &zero));
                    out.push(realify(&zero, &(unit(n, i, j) + unit(n, j, i))));
                }
            }
        }
        Family::Symplectic => {
            for j in 0..n {
                out.push(quaternionic(&zero, &unit(n, j, j), &zero, &zero));
            }
            for i in 0..n {
                for j in i + 1..n {
                    out.push(quaternionic(&(unit(n, i, j) - unit(n, j, i)), &zero, &zero, &zero));
                    out.push(quaternionic(&zero, &(unit(n, i, j) + unit(n, j, i)), &zero, &zero));
                }
            }
            for j in 0..n {
                out.push(quaternionic(&zero, &zero, &unit(n, j, j), &zero));
                out.push(quaternionic(&zero, &zero, &zero, &unit(n, j, j)));
            }
            for i in 0..n {
                for j in i + 1..n {
                    let s = unit(n, i, j) + unit(n, j, i);
                    out.push(quaternionic(&zero, &zero, &s, &zero));
                    out.push(quaternionic(&zero, &zero, &zero, &s));
                }
            }
        }
    }
    out
}
