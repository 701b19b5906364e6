//! Invariant Einstein metrics as critical points of the scalar curvature on
//! volume-one diagonal metrics.
//!
//! All iterations run in log coordinates `y = ln x`, where the volume-one
//! constraint is the hyperplane `Σ d_i y_i = 0` and `L²` geodesics are
//! straight lines.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::{canonical_direction, geodesic_metric, l2_norm, ricci_diagonal, ricci_eigenvalues, scalar_curvature, Metric};
use crate::error::{Error, Result};
use crate::isotropy::{HomogeneousSpace, StructureData};
use crate::lattice::{enumerate_with, LatticeOptions};

/// Entries below this count as a collapse.
const COLLAPSE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowOptions {
    pub t_max: f64,
    /// Local error tolerance of the embedded pair.
    pub tol: f64,
    pub grad_tol: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { t_max: 50.0, tol: 1e-10, grad_tol: 1e-14, h_min: 1e-12, max_steps: 200_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    Converged,
    StepFloor,
    TimeLimit,
    StepLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowPoint {
    pub t: f64,
    pub x: Vec<f64>,
    pub sc: f64,
    pub grad_norm_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub points: Vec<FlowPoint>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn last(&self) -> &FlowPoint {
        self.points.last().expect("trajectories start with x0")
    }
}

/// `y ↦ (sc, −2(r_i − sc/n))`.
fn flow_field(data: &StructureData, y: &[f64]) -> Result<(f64, Vec<f64>, f64)> {
    let x: Vec<f64> = y.iter().map(|v| v.exp()).collect();
    let r = ricci_diagonal(data, &x)?;
    let sc = scalar_curvature(data, &x)?;
    let mean = sc / data.n() as f64;
    let g2 = data.dims.iter().zip(&r).map(|(&d, ri)| d as f64 * (ri - mean).powi(2)).sum();
    Ok((sc, r.iter().map(|ri| -2.0 * (ri - mean)).collect(), g2))
}

fn renormalize(dims: &[usize], y: &mut [f64]) {
    let n: usize = dims.iter().sum();
    let s: f64 = y.iter().zip(dims).map(|(v, &d)| d as f64 * v).sum::<f64>() / n as f64;
    for v in y.iter_mut() {
        *v -= s;
    }
}

// Dormand–Prince 5(4).
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Volume-normalized Ricci flow `dx_i/dt = −2 x_i (r_i − sc/n)`.
///
/// Steps that would decrease `sc` beyond round-off are rejected like steps
/// with too large an error estimate.
pub fn ricci_flow(space: &impl AsRef<StructureData>, x0: &[f64], opts: &FlowOptions) -> Result<Trajectory> {
    let data = space.as_ref();
    Metric::new(x0.to_vec())?;
    if x0.len() != data.ell() {
        return Err(Error::DimensionMismatch { expected: data.ell(), got: x0.len() });
    }
    let l = data.ell();
    let mut y: Vec<f64> = x0.iter().map(|v| v.ln()).collect();
    renormalize(&data.dims, &mut y);
    let (mut sc, mut f, mut g2) = flow_field(data, &y)?;
    let mut t = 0.0;
    let mut points = vec![FlowPoint { t, x: y.iter().map(|v| v.exp()).collect(), sc, grad_norm_sq: g2 }];
    let mut h = 1e-2 / (1.0 + g2.sqrt());
    for _ in 0..opts.max_steps {
        if g2 < opts.grad_tol {
            return Ok(Trajectory { points, termination: Termination::Converged });
        }
        if t >= opts.t_max {
            return Ok(Trajectory { points, termination: Termination::TimeLimit });
        }
        if h < opts.h_min {
            let x = &points.last().expect("non-empty").x;
            if let Some((i, &v)) = x.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).filter(|(_, &v)| v < 1e-6) {
                return Err(Error::BlowUp { t, summand: i, value: v });
            }
            return Ok(Trajectory { points, termination: Termination::StepFloor });
        }
        let h_step = h.min(opts.t_max - t);
        let mut k: Vec<Vec<f64>> = vec![f.clone()];
        let mut failed = false;
        for s in 1..7 {
            let ys: Vec<f64> = (0..l).map(|i| y[i] + h_step * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>()).collect();
            match flow_field(data, &ys) {
                Ok((_, fs, _)) => k.push(fs),
                Err(_) => {
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            h *= 0.25;
            continue;
        }
        let mut y_new: Vec<f64> = (0..l).map(|i| y[i] + h_step * (0..7).map(|j| B5[j] * k[j][i]).sum::<f64>()).collect();
        let err = (0..l)
            .map(|i| {
                let e = h_step * (0..7).map(|j| (B5[j] - B4[j]) * k[j][i]).sum::<f64>();
                (e / (opts.tol * (1.0 + y[i].abs().max(y_new[i].abs())))).abs()
            })
            .fold(0.0f64, f64::max);
        renormalize(&data.dims, &mut y_new);
        let (sc_new, f_new, g2_new) = flow_field(data, &y_new)?;
        let monotone = sc_new >= sc - 1e-12 * (1.0 + sc.abs());
        if err <= 1.0 && monotone {
            t += h_step;
            y = y_new;
            sc = sc_new;
            f = f_new;
            g2 = g2_new;
            let x: Vec<f64> = y.iter().map(|v| v.exp()).collect();
            if let Some((i, &v)) = x.iter().enumerate().find(|(_, &v)| v < COLLAPSE) {
                return Err(Error::BlowUp { t, summand: i, value: v });
            }
            points.push(FlowPoint { t, x, sc, grad_norm_sq: g2 });
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = h_step * grow;
        } else {
            let shrink = if err > 1.0 { (0.9 * err.powf(-0.2)).clamp(0.1, 0.5) } else { 0.5 };
            h = h_step * shrink;
        }
    }
    Ok(Trajectory { points, termination: Termination::StepLimit })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EinsteinSolution {
    /// Volume-one metric.
    pub x: Metric,
    /// Einstein constant.
    pub lambda: f64,
    pub sc: f64,
    /// `max_i |r_i − λ|`.
    pub residual: f64,
    pub grad_norm_sq: f64,
    pub coindex: usize,
    pub augmented_coindex: usize,
    /// Index of the orbit under summand symmetries, in order of discovery.
    pub orbit: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Log coordinates beyond this bound count as divergence.
    pub y_bound: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { max_iter: 50, tol: 1e-12, y_bound: 25.0 }
    }
}

/// `F(y) = (r_1 − sc/n, …, r_{ℓ−1} − sc/n, Σ d_i y_i)`. The last Ricci
/// equation follows from the others.
fn newton_system(data: &StructureData, y: &[f64]) -> Result<(DVector<f64>, f64)> {
    let x: Vec<f64> = y.iter().map(|v| v.exp()).collect();
    let r = ricci_diagonal(data, &x)?;
    let mean = scalar_curvature(data, &x)? / data.n() as f64;
    let l = data.ell();
    let mut f = DVector::zeros(l);
    for i in 0..l - 1 {
        f[i] = r[i] - mean;
    }
    f[l - 1] = y.iter().zip(&data.dims).map(|(v, &d)| d as f64 * v).sum();
    let res = r.iter().map(|ri| (ri - mean).abs()).fold(0.0, f64::max);
    Ok((f, res))
}

fn trivial_solution(data: &StructureData) -> Result<EinsteinSolution> {
    let x = vec![1.0; data.ell()];
    let sc = scalar_curvature(data, &x)?;
    let lambda = sc / data.n() as f64;
    let r = ricci_diagonal(data, &x)?;
    let residual = r.iter().map(|ri| (ri - lambda).abs()).fold(0.0, f64::max);
    Ok(EinsteinSolution { x: Metric { x }, lambda, sc, residual, grad_norm_sq: 0.0, coindex: 0, augmented_coindex: 0, orbit: 0 })
}

/// Flat structure: every metric is Einstein with `λ = 0`.
pub fn is_flat(data: &StructureData) -> bool {
    data.b.iter().all(|b| b.abs() < crate::EPS_STRUCT) && data.triple.iter().all(|t| t.abs() < crate::EPS_STRUCT)
}

/// Damped Newton iteration on the Einstein equations with a volume-one
/// constraint. Coindices are left at zero; see [`coindex`].
pub fn newton_refine(space: &impl AsRef<StructureData>, x0: &[f64]) -> Result<EinsteinSolution> {
    newton_with(space.as_ref(), x0, &NewtonOptions::default())
}

pub fn newton_with(data: &StructureData, x0: &[f64], opts: &NewtonOptions) -> Result<EinsteinSolution> {
    if x0.len() != data.ell() {
        return Err(Error::DimensionMismatch { expected: data.ell(), got: x0.len() });
    }
    Metric::new(x0.to_vec())?;
    let l = data.ell();
    if l == 1 || is_flat(data) {
        return trivial_solution(data);
    }
    if !data.multiplicity_free {
        ricci_eigenvalues(data, x0)?;
    }
    let mut y: Vec<f64> = x0.iter().map(|v| v.ln()).collect();
    renormalize(&data.dims, &mut y);
    let (mut f, mut res) = newton_system(data, &y)?;
    if y.iter().any(|v| v.abs() >= opts.y_bound) {
        return Err(Error::NoConvergence { iterations: 0, residual: res });
    }
    let scale = |y: &[f64]| -> Result<f64> {
        let x: Vec<f64> = y.iter().map(|v| v.exp()).collect();
        Ok(1.0 + (scalar_curvature(data, &x)? / data.n() as f64).abs())
    };
    for _ in 0..opts.max_iter {
        if res <= opts.tol * scale(&y)? {
            return finish(data, &y);
        }
        let h = 1e-6;
        let mut jac = DMatrix::zeros(l, l);
        for j in 0..l {
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[j] += h;
            ym[j] -= h;
            let fp = newton_system(data, &yp)?.0;
            let fm = newton_system(data, &ym)?.0;
            jac.set_column(j, &((fp - fm) / (2.0 * h)));
        }
        let svd = jac.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > 1e-13 * smax) {
            return Err(Error::SingularJacobian { condition: if smin > 0.0 { smax / smin } else { f64::INFINITY } });
        }
        let step = svd.solve(&(-&f), 0.0).map_err(|_| Error::SingularJacobian { condition: smax / smin })?;
        let norm0 = f.norm();
        let mut alpha = 1.0;
        let mut accepted = false;
        while alpha > 1e-6 {
            let yt: Vec<f64> = (0..l).map(|i| y[i] + alpha * step[i]).collect();
            if yt.iter().all(|v| v.abs() < opts.y_bound) {
                if let Ok((ft, rt)) = newton_system(data, &yt) {
                    if ft.norm() < (1.0 - 1e-4 * alpha) * norm0 || ft.norm() < 1e-14 {
                        y = yt;
                        f = ft;
                        res = rt;
                        accepted = true;
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence { iterations: opts.max_iter, residual: res });
        }
    }
    if res <= opts.tol * scale(&y)? {
        return finish(data, &y);
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, residual: res })
}

fn finish(data: &StructureData, y: &[f64]) -> Result<EinsteinSolution> {
    let x = Metric { x: y.iter().map(|v| v.exp()).collect() }.normalized(&data.dims);
    let sc = scalar_curvature(data, &x.x)?;
    let lambda = sc / data.n() as f64;
    let r = ricci_eigenvalues(data, &x.x)?;
    let residual = r.iter().map(|ri| (ri - lambda).abs()).fold(0.0, f64::max);
    let grad_norm_sq = fd_grad_norm_sq(data, &x.x)?;
    Ok(EinsteinSolution { x, lambda, sc, residual, grad_norm_sq, coindex: 0, augmented_coindex: 0, orbit: 0 })
}

/// An `L²`-orthonormal basis of the trace-free directions, as log-coordinate
/// vectors.
pub fn tangent_basis(dims: &[usize]) -> Vec<Vec<f64>> {
    let l = dims.len();
    let sq: Vec<f64> = dims.iter().map(|&d| (d as f64).sqrt()).collect();
    let s = DMatrix::from_column_slice(l, 1, &sq).normalize();
    let comp = crate::linalg::complement(&s, l);
    (0..comp.ncols()).map(|c| (0..l).map(|i| comp[(i, c)] / sq[i]).collect()).collect()
}

/// `‖grad sc‖²` from central differences of `sc` alone.
pub fn fd_grad_norm_sq(data: &StructureData, x: &[f64]) -> Result<f64> {
    let h = 1e-5;
    let mut total = 0.0;
    for e in tangent_basis(&data.dims) {
        let p = scalar_curvature(data, &shift(x, &e, h))?;
        let m = scalar_curvature(data, &shift(x, &e, -h))?;
        total += ((p - m) / (2.0 * h)).powi(2);
    }
    Ok(total)
}

fn shift(x: &[f64], w: &[f64], s: f64) -> Vec<f64> {
    x.iter().zip(w).map(|(xi, wi)| xi * (s * wi).exp()).collect()
}

/// Hessian of `sc` on the trace-free tangent space in an `L²`-orthonormal
/// basis, by central differences of the exact gradient. Not symmetrized.
pub fn hessian(data: &StructureData, x: &[f64]) -> Result<DMatrix<f64>> {
    let basis = tangent_basis(&data.dims);
    let k = basis.len();
    let h = 1e-5;
    let grad = |y: &[f64]| -> Result<Vec<f64>> {
        let r = ricci_diagonal(data, y)?;
        let mean = scalar_curvature(data, y)? / data.n() as f64;
        Ok(basis.iter().map(|e| (0..y.len()).map(|i| -(data.dims[i] as f64) * e[i] * (r[i] - mean)).sum()).collect())
    };
    let mut hs = DMatrix::zeros(k, k);
    for (a, e) in basis.iter().enumerate() {
        let gp = grad(&shift(x, e, h))?;
        let gm = grad(&shift(x, e, -h))?;
        for b in 0..k {
            hs[(b, a)] = (gp[b] - gm[b]) / (2.0 * h);
        }
    }
    Ok(hs)
}

/// `(m, m*)`: counts of Hessian eigenvalues above `τ` and above `−τ`, with
/// `τ = 1e−5 · max |eigenvalue|`.
pub fn coindex(space: &impl AsRef<StructureData>, sol: &EinsteinSolution) -> Result<(usize, usize)> {
    let data = space.as_ref();
    if data.ell() < 2 {
        return Ok((0, 0));
    }
    let hs = hessian(data, &sol.x.x)?;
    let (eig, _) = crate::linalg::sym_eigen_sorted(&((&hs + hs.transpose()) * 0.5));
    let scale = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        return Ok((0, 0));
    }
    let tau = 1e-5 * scale;
    Ok((eig.iter().filter(|&&v| v > tau).count(), eig.iter().filter(|&&v| v > -tau).count()))
}

/// Permutations of summands preserving `d_i`, `b_i`, `c_i` and `[ijk]`.
pub fn summand_symmetries(data: &StructureData, cap: usize) -> Vec<Vec<usize>> {
    let l = data.ell();
    let tol = 1e-9 * (1.0 + data.triple.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    let same = |i: usize, j: usize| data.dims[i] == data.dims[j] && (data.b[i] - data.b[j]).abs() < tol && (data.c[i] - data.c[j]).abs() < tol;
    let mut out = Vec::new();
    let mut perm = Vec::with_capacity(l);
    let mut used = vec![false; l];
    fn rec(
        data: &StructureData,
        same: &dyn Fn(usize, usize) -> bool,
        tol: f64,
        perm: &mut Vec<usize>,
        used: &mut [bool],
        out: &mut Vec<Vec<usize>>,
        cap: usize,
    ) {
        if out.len() >= cap {
            return;
        }
        let i = perm.len();
        if i == data.ell() {
            out.push(perm.clone());
            return;
        }
        for j in 0..data.ell() {
            if used[j] || !same(i, j) {
                continue;
            }
            perm.push(j);
            let ok = (0..=i).all(|a| (0..=i).all(|b| (data.t(a, b, i) - data.t(perm[a], perm[b], j)).abs() < tol));
            if ok {
                used[j] = true;
                rec(data, same, tol, perm, used, out, cap);
                used[j] = false;
            }
            perm.pop();
        }
    }
    rec(data, &same, tol, &mut perm, &mut used, &mut out, cap);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverOptions {
    pub seed: u64,
    pub t_ladder: Vec<f64>,
    /// Sampled directions; `None` means `2ℓ²`.
    pub directions: Option<usize>,
    pub flow: FlowOptions,
    pub newton: NewtonOptions,
    /// Solutions closer than this in `x` are merged.
    pub dedupe_tol: f64,
    /// Worker threads; `None` uses the global pool. Results do not depend
    /// on it, so it is left out of serialized reports.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            seed: 0,
            t_ladder: vec![0.5, 1.0, 2.0, 4.0],
            directions: None,
            flow: FlowOptions { t_max: 20.0, ..FlowOptions::default() },
            newton: NewtonOptions::default(),
            dedupe_tol: 1e-6,
            threads: None,
        }
    }
}

/// Unit trace-free directions from a seeded Gaussian sample.
pub fn sample_directions(dims: &[usize], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let basis = tangent_basis(dims);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let coef: Vec<f64> = basis.iter().map(|_| StandardNormal.sample(&mut rng)).collect();
            let mut v = vec![0.0; dims.len()];
            for (c, e) in coef.iter().zip(&basis) {
                for i in 0..v.len() {
                    v[i] += c * e[i];
                }
            }
            let n = l2_norm(dims, &v);
            v.iter().map(|x| x / n).collect()
        })
        .collect()
}

/// Canonical directions of the intermediate subalgebras, when the lattice
/// can be enumerated.
pub fn lattice_directions(space: &HomogeneousSpace) -> Vec<Vec<f64>> {
    let opts = LatticeOptions { require_self_normalizing: false, ..LatticeOptions::default() };
    match enumerate_with(space, &opts) {
        Ok(p) => p.nodes.iter().map(|k| canonical_direction(&space.structure().dims, &k.summands)).collect(),
        Err(_) => Vec::new(),
    }
}

/// Multistart search over the given space, with the canonical directions
/// of its intermediate subalgebras added to the sampled ones.
pub fn find_einstein(space: &HomogeneousSpace, opts: &SolverOptions) -> Result<Vec<EinsteinSolution>> {
    let extra = if space.ell() > 1 { lattice_directions(space) } else { Vec::new() };
    find_einstein_structure(space.structure(), &extra, opts)
}

/// Multistart search from `γ_v(t)` over sampled and supplied directions and
/// the `t`-ladder: Newton from each start and from the endpoint of the flow.
/// Solutions are deduplicated in `x` and labelled by symmetry orbit.
pub fn find_einstein_structure(data: &StructureData, extra_dirs: &[Vec<f64>], opts: &SolverOptions) -> Result<Vec<EinsteinSolution>> {
    let l = data.ell();
    if l == 1 || is_flat(data) {
        return Ok(vec![trivial_solution(data)?]);
    }
    if !data.multiplicity_free {
        ricci_eigenvalues(data, &vec![1.0; l])?;
    }
    let count = opts.directions.unwrap_or(2 * l * l);
    let mut dirs = sample_directions(&data.dims, count, opts.seed);
    dirs.extend(extra_dirs.iter().cloned());
    let mut starts = vec![vec![1.0; l]];
    for v in &dirs {
        for &t in &opts.t_ladder {
            starts.push(geodesic_metric(v, t).x);
        }
    }
    let attempt = |x0: &Vec<f64>| -> Vec<EinsteinSolution> {
        let mut found = Vec::new();
        if let Ok(s) = newton_with(data, x0, &opts.newton) {
            found.push(s);
        }
        if let Ok(traj) = ricci_flow(data, x0, &opts.flow) {
            if let Ok(s) = newton_with(data, &traj.last().x, &opts.newton) {
                found.push(s);
            }
        }
        found
    };
    let run = || -> Vec<Vec<EinsteinSolution>> { starts.par_iter().map(attempt).collect() };
    let batches = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map(|pool| pool.install(run))
            .unwrap_or_else(|_| run()),
        None => run(),
    };
    let mut all: Vec<EinsteinSolution> = batches.into_iter().flatten().filter(|s| s.residual < 1e-9 && s.grad_norm_sq < 1e-14).collect();
    all.sort_by(|a, b| a.sc.total_cmp(&b.sc).then_with(|| cmp_vec(&a.x.x, &b.x.x)));
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(u, v)| (u - v).abs() <= opts.dedupe_tol * (1.0 + u.abs()));
    let mut unique: Vec<EinsteinSolution> = Vec::new();
    for s in all {
        if !unique.iter().any(|u| close(&u.x.x, &s.x.x)) {
            unique.push(s);
        }
    }
    let syms = summand_symmetries(data, 5040);
    let mut orbits = 0;
    for i in 0..unique.len() {
        let x = unique[i].x.x.clone();
        let prior = (0..i).find(|&j| {
            let y = &unique[j].x.x;
            syms.iter().any(|p| close(&p.iter().map(|&k| y[k]).collect::<Vec<_>>(), &x))
        });
        unique[i].orbit = match prior {
            Some(j) => unique[j].orbit,
            None => {
                orbits += 1;
                orbits - 1
            }
        };
        let (m, ms) = coindex(data, &unique[i])?;
        unique[i].coindex = m;
        unique[i].augmented_coindex = ms;
    }
    Ok(unique)
}

fn cmp_vec(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter().zip(b).map(|(u, v)| u.total_cmp(v)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isotropy::{build_space, SpaceConfig, Subgroup};
    use crate::liealg::Family::*;

    fn su3_t2() -> HomogeneousSpace {
        build_space(&SpaceConfig::new(SpecialUnitary, 3, Subgroup::MaximalTorus)).unwrap()
    }

    #[test]
    fn newton_from_normal_metric() {
        let s = su3_t2();
        let sol = newton_refine(&s, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(sol.x.x, vec![1.0, 1.0, 1.0]);
        assert!(sol.residual < 1e-12);
        assert!((sol.lambda - sol.sc / 6.0).abs() < 1e-15);
    }

    #[test]
    fn newton_finds_kahler_einstein() {
        let s = su3_t2();
        let sol = newton_refine(&s, &[1.0, 1.1, 1.9]).unwrap();
        let x = &sol.x.x;
        assert!((x[2] / x[0] - 2.0).abs() < 1e-9 && (x[1] / x[0] - 1.0).abs() < 1e-9, "{x:?}");
        assert!(sol.residual < 1e-9);
    }

    #[test]
    fn newton_far_out_fails() {
        let s = su3_t2();
        let v = canonical_direction(&[2, 2, 2], &[0]);
        let x0 = geodesic_metric(&v, 60.0).x;
        assert!(matches!(newton_refine(&s, &x0), Err(Error::NoConvergence { .. } | Error::SingularJacobian { .. })));
    }

    #[test]
    fn irreducible_returns_q() {
        let s = build_space(&SpaceConfig::blocks(SpecialOrthogonal, 4, &[(SpecialOrthogonal, 3)])).unwrap();
        let sols = find_einstein(&s, &SolverOptions::default()).unwrap();
        assert_eq!(sols.len(), 1);
        assert_eq!(sols[0].x.x, vec![1.0]);
        assert_eq!(coindex(&s, &sols[0]).unwrap(), (0, 0));
    }

    #[test]
    fn flow_converges_to_local_maximum() {
        let s = build_space(&SpaceConfig::blocks(Symplectic, 2, &[(Unitary, 1), (Symplectic, 1)])).unwrap();
        let top = 2f64.powf(2.0 / 3.0);
        let traj = ricci_flow(&s, &[top * 1.001, 0.5 * top], &FlowOptions::default()).unwrap();
        assert_eq!(traj.termination, Termination::Converged);
        let x = &traj.last().x;
        assert!((x[0] / x[1] - 2.0).abs() < 1e-6, "{x:?}");
        assert!(traj.last().grad_norm_sq < 1e-14);
    }

    #[test]
    fn flow_leaving_a_minimum_collapses() {
        let s = su3_t2();
        assert!(matches!(ricci_flow(&s, &[1.001, 0.999, 1.0], &FlowOptions::default()), Err(Error::BlowUp { .. })));
    }

    #[test]
    fn flat_torus_is_stationary() {
        let cfg = SpaceConfig { ambient: vec![(Unitary, 1), (Unitary, 1)], q_scale: 0.5, subgroup: Subgroup::Trivial };
        let s = build_space(&cfg).unwrap();
        let x0 = vec![2.0; s.ell()];
        let traj = ricci_flow(&s, &x0, &FlowOptions::default()).unwrap();
        assert_eq!(traj.termination, Termination::Converged);
        assert_eq!(traj.last().sc, 0.0);
        let sols = find_einstein(&s, &SolverOptions::default()).unwrap();
        assert_eq!(sols.len(), 1);
        assert!(sols[0].x.x.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn flow_at_critical_point_is_stationary() {
        let s = su3_t2();
        let traj = ricci_flow(&s, &[1.0, 1.0, 1.0], &FlowOptions::default()).unwrap();
        assert_eq!(traj.termination, Termination::Converged);
        assert_eq!(traj.points.len(), 1);
    }

    #[test]
    fn flow_increases_sc_and_keeps_volume() {
        let s = su3_t2();
        let x0 = [1.0, 1.3, 0.8];
        let opts = FlowOptions { t_max: 0.2, ..FlowOptions::default() };
        let traj = match ricci_flow(&s, &x0, &opts) {
            Ok(t) => t,
            Err(e) => panic!("{e}"),
        };
        for w in traj.points.windows(2) {
            assert!(w[1].sc >= w[0].sc - 1e-12 * (1.0 + w[0].sc.abs()));
        }
        for p in &traj.points {
            let v = Metric { x: p.x.clone() }.volume(&[2, 2, 2]);
            assert!((v - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn hessian_is_symmetric_and_coindex_counts() {
        let s = su3_t2();
        let sol = newton_refine(&s, &[1.0, 1.0, 1.0]).unwrap();
        let h = hessian(s.structure(), &sol.x.x).unwrap();
        assert!((&h - h.transpose()).norm() <= 1e-4 * h.norm());
        let (m, ms) = coindex(&s, &sol).unwrap();
        assert!(ms >= 1 && m <= ms && ms <= 2);
    }

    #[test]
    fn su3_symmetries() {
        let s = su3_t2();
        assert_eq!(summand_symmetries(s.structure(), 100).len(), 6);
    }
}
