//! Small dense linear-algebra helpers shared by the numeric modules.

use std::ops::Range;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigen-decomposition of a symmetric matrix with ascending eigenvalues and
/// sign-normalized eigenvectors (largest component positive).
pub fn sym_eigen_sorted(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = (m + m.transpose()) * 0.5;
    let (values, vectors) = eigen_checked(&sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let vals = order.iter().map(|&i| values[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        let mut col = vectors.column(i).into_owned();
        normalize_sign(&mut col);
        vecs.set_column(k, &col);
    }
    (vals, vecs)
}

/// The implicit QR eigen-solver occasionally returns a wrong eigenvector on
/// highly degenerate spectra. Residuals are checked, and on failure the
/// decomposition is redone as an SVD of the positively shifted matrix, whose
/// singular vectors are then eigenvectors.
fn eigen_checked(sym: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = sym.nrows();
    let eig = SymmetricEigen::new(sym.clone());
    let scale = sym.amax().max(1.0);
    let residual = sym * &eig.eigenvectors - &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues);
    if residual.amax() <= 1e-9 * scale {
        return (eig.eigenvalues, eig.eigenvectors);
    }
    let shift = sym.norm() + 1.0;
    let shifted = sym + DMatrix::identity(n, n) * shift;
    let svd = shifted.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    (svd.singular_values.map(|s| s - shift), u)
}

/// Flips `v` so that its largest-magnitude entry (first one on ties) is positive.
pub fn normalize_sign(v: &mut DVector<f64>) {
    let mut best = 0usize;
    for i in 0..v.len() {
        if v[i].abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if !v.is_empty() && v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Splits sorted values into runs whose consecutive gaps are below `tol`.
pub fn cluster(vals: &[f64], tol: f64) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=vals.len() {
        if i == vals.len() || (vals[i] - vals[i - 1]).abs() > tol {
            if i > start {
                out.push(start..i);
            }
            start = i;
        }
    }
    out
}

/// Orthonormal basis of the null space of a positive semi-definite Gram
/// matrix `AᵀA`; eigenvalues below `tol * max(1, λ_max)` count as zero.
pub fn null_space_of_gram(gram: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen_sorted(gram);
    let scale = vals.last().copied().unwrap_or(0.0).max(1.0);
    let k = vals.iter().take_while(|&&v| v < tol * scale).count();
    vecs.columns(0, k).into_owned()
}

/// Orthonormal basis of the column span of `a`.
pub fn orthonormal_span(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    if a.ncols() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let gram = a * a.transpose();
    let (vals, vecs) = sym_eigen_sorted(&gram);
    let scale = vals.last().copied().unwrap_or(0.0).max(1.0);
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > tol * scale).collect();
    let mut out = DMatrix::zeros(a.nrows(), keep.len());
    for (k, &i) in keep.iter().rev().enumerate() {
        out.set_column(k, &vecs.column(i));
    }
    out
}

/// Orthonormal basis of the orthogonal complement of the orthonormal columns `basis`.
pub fn complement(basis: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let proj = DMatrix::identity(n, n) - basis * basis.transpose();
    let (vals, vecs) = sym_eigen_sorted(&proj);
    let keep: Vec<usize> = (0..n).filter(|&i| vals[i] > 0.5).collect();
    let mut out = DMatrix::zeros(n, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        out.set_column(k, &vecs.column(i));
    }
    out
}

/// Vectorizes the upper triangle of a symmetric matrix isometrically
/// (off-diagonal entries weighted by √2).
pub fn sym_to_vec(s: &DMatrix<f64>) -> Vec<f64> {
    let n = s.nrows();
    let mut v = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        v.push(s[(i, i)]);
        for j in i + 1..n {
            v.push(s[(i, j)] * std::f64::consts::SQRT_2);
        }
    }
    v
}

pub fn vec_to_sym(v: &[f64], n: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        s[(i, i)] = v[k];
        k += 1;
        for j in i + 1..n {
            let x = v[k] / std::f64::consts::SQRT_2;
            s[(i, j)] = x;
            s[(j, i)] = x;
            k += 1;
        }
    }
    s
}

/// Orthonormal basis (as symmetric matrices) of the symmetric matrices
/// commuting with every generator in `gens`.
pub fn symmetric_commutant(gens: &[DMatrix<f64>], n: usize) -> Vec<DMatrix<f64>> {
    let unknowns = n * (n + 1) / 2;
    let mut gram = DMatrix::<f64>::zeros(unknowns, unknowns);
    let mut col = DMatrix::<f64>::zeros(unknowns, unknowns);
    for r in gens {
        // Column u of the operator S -> [S, R] applied to the u-th basis matrix.
        for u in 0..unknowns {
            let mut e = vec![0.0; unknowns];
            e[u] = 1.0;
            let s = vec_to_sym(&e, n);
            let c = &s * r - r * &s;
            col.set_column(u, &DVector::from_vec(sym_to_vec(&c)));
        }
        gram += col.transpose() * &col;
    }
    let null = null_space_of_gram(&gram, 1e-10);
    (0..null.ncols())
        .map(|k| vec_to_sym(null.column(k).as_slice(), n))
        .collect()
}

/// Dimension of the space of intertwiners `T` with `T A_k = B_k T` for all k.
pub fn intertwiner_dim(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> usize {
    let (p, q) = (a[0].nrows(), b[0].nrows());
    let unknowns = p * q;
    let mut gram = DMatrix::<f64>::zeros(unknowns, unknowns);
    let mut col = DMatrix::<f64>::zeros(q * p, unknowns);
    for (ak, bk) in a.iter().zip(b) {
        for u in 0..unknowns {
            let mut t = DMatrix::<f64>::zeros(q, p);
            t[(u % q, u / q)] = 1.0;
            let c = &t * ak - bk * &t;
            col.set_column(u, &DVector::from_column_slice(c.as_slice()));
        }
        gram += col.transpose() * &col;
    }
    null_space_of_gram(&gram, 1e-10).ncols()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sym_vec_roundtrip() {
        let s = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0]);
        let v = sym_to_vec(&s);
        assert_eq!(vec_to_sym(&v, 3), s);
        let norm: f64 = v.iter().map(|x| x * x).sum();
        assert!((norm - s.norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn commutant_of_rotation() {
        // Rotation generator in the plane plus a fixed line: commutant is
        // spanned by the identity on the plane and the projector on the line.
        let mut r = DMatrix::zeros(3, 3);
        r[(0, 1)] = -1.0;
        r[(1, 0)] = 1.0;
        assert_eq!(symmetric_commutant(&[r.clone()], 3).len(), 2);
        assert_eq!(intertwiner_dim(&[r.clone()], &[r]), 3);
    }

    #[test]
    fn cluster_runs() {
        let r = cluster(&[0.0, 1e-9, 1.0, 1.0, 2.5], 1e-6);
        assert_eq!(r, vec![0..2, 2..4, 4..5]);
    }

    #[test]
    fn complement_dimension() {
        let b = orthonormal_span(&DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 0.0]), 1e-12);
        let c = complement(&b, 3);
        assert_eq!(c.ncols(), 2);
        assert!((b.transpose() * c).amax() < 1e-12);
    }
}
