//! Curvature of diagonal invariant metrics `g = Σ x_i Q|_{m_i}`.
//!
//! Everything here only needs the structure constants, so the functions take
//! any `AsRef<StructureData>`: a built space or hand-made constants.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::isotropy::{HomogeneousSpace, StructureData};
use crate::lattice::SubalgebraPoset;
use crate::liealg::killing_gram;

/// Positive summand scalings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metric {
    pub x: Vec<f64>,
}

impl Metric {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::NonPositiveMetric);
        }
        Ok(Metric { x })
    }

    /// The background metric `Q`.
    pub fn unit(ell: usize) -> Self {
        Metric { x: vec![1.0; ell] }
    }

    pub fn volume(&self, dims: &[usize]) -> f64 {
        self.x.iter().zip(dims).map(|(x, &d)| d as f64 * x.ln()).sum::<f64>().exp()
    }

    /// Rescaled to volume one.
    pub fn normalized(&self, dims: &[usize]) -> Self {
        let n: usize = dims.iter().sum();
        let log_vol: f64 = self.x.iter().zip(dims).map(|(x, &d)| d as f64 * x.ln()).sum();
        let s = (-log_vol / n as f64).exp();
        Metric { x: self.x.iter().map(|x| x * s).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureReport {
    pub sc: f64,
    pub r: Vec<f64>,
    /// `Σ d_i (r_i − sc/n)²`.
    pub grad_norm_sq: f64,
    pub n: usize,
}

fn check(data: &StructureData, x: &[f64]) -> Result<()> {
    if x.len() != data.ell() {
        return Err(Error::DimensionMismatch { expected: data.ell(), got: x.len() });
    }
    if x.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::NonPositiveMetric);
    }
    Ok(())
}

/// `sc = ½ Σ d_i b_i / x_i − ¼ Σ [ijk] x_k / (x_i x_j)`.
pub fn scalar_curvature(space: &impl AsRef<StructureData>, x: &[f64]) -> Result<f64> {
    let data = space.as_ref();
    check(data, x)?;
    let l = data.ell();
    let mut sc = 0.0;
    for i in 0..l {
        sc += 0.5 * data.dims[i] as f64 * data.b[i] / x[i];
    }
    for i in 0..l {
        for j in 0..l {
            for k in 0..l {
                let t = data.t(i, j, k);
                if t != 0.0 {
                    sc -= 0.25 * t * x[k] / (x[i] * x[j]);
                }
            }
        }
    }
    Ok(sc)
}

/// Ricci eigenvalues `r_i` on each summand.
pub fn ricci_eigenvalues(space: &impl AsRef<StructureData>, x: &[f64]) -> Result<Vec<f64>> {
    let data = space.as_ref();
    if !data.multiplicity_free {
        let pairs: Vec<String> = data.equivalent.iter().map(|(i, j)| format!("m_{} ≅ m_{}", i + 1, j + 1)).collect();
        return Err(Error::MultiplicityNotFree(pairs.join(", ")));
    }
    ricci_diagonal(data, x)
}

/// The summand-diagonal part of the Ricci tensor, without the
/// multiplicity check.
pub fn ricci_diagonal(space: &impl AsRef<StructureData>, x: &[f64]) -> Result<Vec<f64>> {
    let data = space.as_ref();
    check(data, x)?;
    let l = data.ell();
    Ok((0..l)
        .map(|i| {
            let d = data.dims[i] as f64;
            let mut r = data.b[i] / (2.0 * x[i]);
            for j in 0..l {
                for k in 0..l {
                    let t = data.t(i, j, k);
                    if t != 0.0 {
                        r += t / (4.0 * d) * x[i] / (x[j] * x[k]) - t / (2.0 * d) * x[j] / (x[i] * x[k]);
                    }
                }
            }
            r
        })
        .collect())
}

pub fn curvature_report(space: &impl AsRef<StructureData>, x: &[f64]) -> Result<CurvatureReport> {
    let data = space.as_ref();
    let r = ricci_eigenvalues(data, x)?;
    let sc = scalar_curvature(data, x)?;
    let n = data.n();
    let mean = sc / n as f64;
    let grad_norm_sq = data.dims.iter().zip(&r).map(|(&d, ri)| d as f64 * (ri - mean).powi(2)).sum();
    Ok(CurvatureReport { sc, r, grad_norm_sq, n })
}

/// `L²` gradient of `sc` on volume-one metrics, in log coordinates:
/// `d/ds sc(x e^{s w}) = Σ d_i w_i grad_i` for trace-free `w`.
pub fn scalar_gradient(space: &impl AsRef<StructureData>, x: &[f64]) -> Result<Vec<f64>> {
    let data = space.as_ref();
    let r = ricci_diagonal(data, x)?;
    let mean = scalar_curvature(data, x)? / data.n() as f64;
    Ok(r.iter().map(|ri| -(ri - mean)).collect())
}

/// Ricci endomorphism on `m` in a `g`-orthonormal frame, computed directly
/// from the bracket of the adapted frame.
pub fn ricci_matrix(space: &HomogeneousSpace, x: &[f64]) -> Result<DMatrix<f64>> {
    check(space.structure(), x)?;
    let off = space.m_offset();
    let n = space.dim_m();
    let mut xs = vec![0.0; n];
    for s in space.summands() {
        for a in s.columns.clone() {
            xs[a] = x[s.index];
        }
    }
    let frame = space.frame();
    let kill = frame.transpose() * killing_gram(space.algebra()) * frame;
    let c = |a: usize, b: usize, g: usize| space.adapted(off + a, off + b, off + g);
    let mut ric = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let mut v = 0.5 * kill[(off + a, off + b)];
            for j in 0..n {
                for g in 0..n {
                    v -= 0.5 * c(a, j, g) * c(b, j, g) * xs[g] / xs[j];
                }
            }
            for i in 0..n {
                for j in 0..n {
                    v += 0.25 * c(i, j, a) * c(i, j, b) * xs[a] * xs[b] / (xs[i] * xs[j]);
                }
            }
            v /= (xs[a] * xs[b]).sqrt();
            ric[(a, b)] = v;
            ric[(b, a)] = v;
        }
    }
    Ok(ric)
}

/// `γ_v(t)`: `x_i = e^{t v_i}`.
pub fn geodesic_metric(v: &[f64], t: f64) -> Metric {
    Metric { x: v.iter().map(|vi| (t * vi).exp()).collect() }
}

/// `L²` norm `(Σ d_i v_i²)^{1/2}`.
pub fn l2_norm(dims: &[usize], v: &[f64]) -> f64 {
    dims.iter().zip(v).map(|(&d, x)| d as f64 * x * x).sum::<f64>().sqrt()
}

/// Canonical unit direction of the subalgebra `h ⊕ m_I`: `v_1 < 0` on the
/// summands in `I`, `v_2 > 0` on the rest.
///
/// # Panics
/// If `I` is empty or contains every summand.
pub fn canonical_direction(dims: &[usize], in_k: &[usize]) -> Vec<f64> {
    let (v1, v2) = canonical_values(dims, in_k);
    (0..dims.len()).map(|i| if in_k.contains(&i) { v1 } else { v2 }).collect()
}

fn canonical_values(dims: &[usize], in_k: &[usize]) -> (f64, f64) {
    let n: usize = dims.iter().sum();
    let dk: usize = in_k.iter().map(|&i| dims[i]).sum();
    assert!(dk > 0 && dk < n, "canonical direction needs 0 < dim m_k < dim m");
    let (n, dk) = (n as f64, dk as f64);
    let dp = n - dk;
    (-(dp / (dk * n)).sqrt(), (dk / (dp * n)).sqrt())
}

/// `c_{G/H}`: the largest smallest-eigenvalue of a unit trace-free direction,
/// `−√(d_min / (n (n − d_min)))`. `None` when `ℓ = 1`.
pub fn c_gh(dims: &[usize]) -> Option<f64> {
    if dims.len() < 2 {
        return None;
    }
    let n = dims.iter().sum::<usize>() as f64;
    let dmin = *dims.iter().min().expect("non-empty") as f64;
    Some(-(dmin / (n * (n - dmin))).sqrt())
}

/// `a_k = Σ_{j ∈ I} d_j c_j + ¼ [III]`.
pub fn toral_invariant(space: &impl AsRef<StructureData>, in_k: &[usize]) -> f64 {
    let data = space.as_ref();
    let dc: f64 = in_k.iter().map(|&j| data.dims[j] as f64 * data.c[j]).sum();
    dc + 0.25 * data.t_sets(in_k, in_k, in_k)
}

/// `n_{G/H}`: the least `a_k` over non-toral nodes.
pub fn n_gh(space: &impl AsRef<StructureData>, poset: &SubalgebraPoset) -> Option<f64> {
    poset.nodes.iter().filter(|k| !k.toral).map(|k| toral_invariant(space, &k.summands)).min_by(f64::total_cmp)
}

/// Scalar curvature along a canonical geodesic, with the coefficients of
/// `sc = a₁ e^{−t v₁} + a₂ e^{−t v₂} − ¼ [I₁I₂I₂] e^{t (v₁ − 2 v₂)}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanonicalCurve {
    pub v1: f64,
    pub v2: f64,
    pub a1: f64,
    pub a2: f64,
    pub t122: f64,
    /// `(t, sc(γ_{v^k}(t)))`.
    pub curve: Vec<(f64, f64)>,
}

impl CanonicalCurve {
    /// The closed form evaluated at `t`.
    pub fn closed_form(&self, t: f64) -> f64 {
        self.a1 * (-t * self.v1).exp() + self.a2 * (-t * self.v2).exp() - 0.25 * self.t122 * (t * (self.v1 - 2.0 * self.v2)).exp()
    }

    /// The lower bound `a₁ e^{−t v₁}`.
    pub fn lower_bound(&self, t: f64) -> f64 {
        self.a1 * (-t * self.v1).exp()
    }
}

pub fn canonical_asymptotics(space: &impl AsRef<StructureData>, in_k: &[usize], t_grid: &[f64]) -> Result<CanonicalCurve> {
    let data = space.as_ref();
    let (v1, v2) = canonical_values(&data.dims, in_k);
    let rest: Vec<usize> = (0..data.ell()).filter(|i| !in_k.contains(i)).collect();
    let db = |set: &[usize]| set.iter().map(|&j| data.dims[j] as f64 * data.b[j]).sum::<f64>();
    let t122 = data.t_sets(in_k, &rest, &rest);
    let a1 = 0.5 * (db(in_k) - 0.5 * data.t_sets(in_k, in_k, in_k) - t122);
    let a2 = 0.5 * (db(&rest) - 0.5 * data.t_sets(&rest, &rest, &rest));
    let v = canonical_direction(&data.dims, in_k);
    let curve = t_grid
        .iter()
        .map(|&t| Ok((t, scalar_curvature(data, &geodesic_metric(&v, t).x)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CanonicalCurve { v1, v2, a1, a2, t122, curve })
}

/// Discriminant deciding existence of an invariant Einstein metric on a
/// two-summand space with `[112] = 0`:
/// `D = (b₂ − [222]/2d₂)² − 4 (b₁ − [111]/2d₁ − [122]/d₁) [122] (1/2d₁ + 1/d₂)`.
/// The summand closed under the bracket is taken as `m₁`.
pub fn two_summand_discriminant(space: &impl AsRef<StructureData>) -> Result<f64> {
    let data = space.as_ref();
    if data.ell() != 2 {
        return Err(Error::NotTwoSummand(data.ell()));
    }
    let tol = crate::EPS_STRUCT * (1.0 + data.triple.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    let (p, q) = if data.t(0, 0, 1) <= tol {
        (0, 1)
    } else if data.t(1, 1, 0) <= tol {
        (1, 0)
    } else {
        return Err(Error::WrongStructure(format!("[112] = {:.6} and [122] = {:.6} are both nonzero", data.t(0, 0, 1), data.t(0, 1, 1))));
    };
    let (d1, d2) = (data.dims[p] as f64, data.dims[q] as f64);
    let (b1, b2) = (data.b[p], data.b[q]);
    let t111 = data.t(p, p, p);
    let t222 = data.t(q, q, q);
    let t122 = data.t(p, q, q);
    Ok((b2 - t222 / (2.0 * d2)).powi(2) - 4.0 * (b1 - t111 / (2.0 * d1) - t122 / d1) * t122 * (1.0 / (2.0 * d1) + 1.0 / d2))
}

/// CSV of `t, sc, r_1..r_ℓ` along `γ_v`.
pub fn curve_csv(space: &impl AsRef<StructureData>, v: &[f64], t_grid: &[f64]) -> Result<String> {
    let data = space.as_ref();
    let mut out = String::from("t,sc");
    for i in 1..=data.ell() {
        let _ = write!(out, ",r_{i}");
    }
    out.push('\n');
    for &t in t_grid {
        let x = geodesic_metric(v, t).x;
        let sc = scalar_curvature(data, &x)?;
        let r = ricci_diagonal(data, &x)?;
        let _ = write!(out, "{t},{sc}");
        for ri in r {
            let _ = write!(out, ",{ri}");
        }
        out.push('\n');
    }
    Ok(out)
}
