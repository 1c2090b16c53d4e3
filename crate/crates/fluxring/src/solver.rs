//! Ground-state eigensolvers: a dense path for small dimensions and a
//! Lanczos iteration with full reorthogonalization and deflation above the
//! threshold, plus total-spin measurement of eigenvectors.
//!
//! All linear algebra runs sequentially: results must be bit-reproducible for
//! a fixed seed, and the target dimensions do not pay for threads.

use crate::basis::{apply_s_plus, enumerate_basis, FockBasis};
use crate::hamiltonian::{build_hamiltonian, SparseHermitian};
use crate::model::{FluxAssignment, RingModel, Sector};
use crate::{FluxRingError, Result};
use faer::linalg::solvers::SelfAdjointEigen;
use faer::{c64, Mat, Side};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Once;

static SEQ: Once = Once::new();

fn ensure_sequential() {
    SEQ.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Method {
    Dense,
    Lanczos,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Dense => write!(f, "dense"),
            Method::Lanczos => write!(f, "lanczos"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverOpts {
    /// Dimensions up to this use the dense path.
    pub dense_threshold: usize,
    /// Ground-space membership: within `degeneracy_tol_factor * max(1, |E0|)`
    /// of the minimum.
    pub degeneracy_tol_factor: f64,
    /// Convergence target: residual <= `residual_tol * (1 + |E|)`.
    pub residual_tol: f64,
    /// Lanczos basis cap per restart cycle.
    pub max_lanczos_dim: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for SolverOpts {
    fn default() -> Self {
        Self {
            dense_threshold: 2000,
            degeneracy_tol_factor: 1e-8,
            residual_tol: 1e-9,
            max_lanczos_dim: 300,
            max_restarts: 30,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    /// Ascending. All eigenvalues on the dense path, the lowest k on Lanczos.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal basis of the ground eigenspace, as far as it is visible
    /// among the computed eigenpairs.
    pub ground_vectors: Vec<Vec<Complex64>>,
    /// Count of computed eigenvalues within the degeneracy tolerance of the
    /// minimum. On the Lanczos path this is a lower bound if it equals k.
    pub degeneracy: usize,
    pub method: Method,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn scale(a: &mut [Complex64], s: f64) {
    for x in a.iter_mut() {
        *x *= s;
    }
}

fn axpy(y: &mut [Complex64], a: Complex64, x: &[Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn project_out(w: &mut [Complex64], basis_vecs: &[Vec<Complex64>]) {
    for v in basis_vecs {
        let c = dot(v, w);
        axpy(w, -c, v);
    }
}

fn csr_to_dense(h: &SparseHermitian) -> Mat<c64> {
    let n = h.dim;
    let mut a = Mat::<c64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = c64::new(h.diag[i], 0.0);
        for k in h.row_ptr[i]..h.row_ptr[i + 1] {
            let v = h.values[k];
            a[(i, h.col_idx[k])] = c64::new(v.re, v.im);
        }
    }
    a
}

fn self_adjoint(a: &Mat<c64>) -> Result<SelfAdjointEigen<c64>> {
    ensure_sequential();
    a.self_adjoint_eigen(Side::Lower)
        .map_err(|e| FluxRingError::DenseSolver(format!("{e:?}")))
}

/// All eigenvalues of the matrix, ascending.
pub fn dense_spectrum(h: &SparseHermitian) -> Result<Vec<f64>> {
    let evd = self_adjoint(&csr_to_dense(h))?;
    let n = h.dim;
    let mut evs: Vec<f64> = (0..n).map(|i| evd.S()[i].re).collect();
    evs.sort_by(f64::total_cmp);
    Ok(evs)
}

/// All eigenpairs, ascending by eigenvalue.
pub fn dense_eigenpairs(h: &SparseHermitian) -> Result<(Vec<f64>, Vec<Vec<Complex64>>)> {
    let evd = self_adjoint(&csr_to_dense(h))?;
    let n = h.dim;
    let mut order: Vec<usize> = (0..n).collect();
    let raw: Vec<f64> = (0..n).map(|i| evd.S()[i].re).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
    let u = evd.U();
    let mut evs = Vec::with_capacity(n);
    let mut vecs = Vec::with_capacity(n);
    for &k in &order {
        evs.push(raw[k]);
        let col: Vec<Complex64> = (0..n)
            .map(|i| {
                let z = u[(i, k)];
                Complex64::new(z.re, z.im)
            })
            .collect();
        vecs.push(col);
    }
    Ok((evs, vecs))
}

fn random_unit_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let nn = norm(&v);
    scale(&mut v, 1.0 / nn);
    v
}

/// Lowest eigenvalue of the real symmetric tridiagonal (alphas, betas),
/// with its eigenvector.
fn tridiag_lowest(alphas: &[f64], betas: &[f64]) -> Result<(f64, Vec<f64>)> {
    let m = alphas.len();
    if m == 1 {
        return Ok((alphas[0], vec![1.0]));
    }
    let mut t = Mat::<c64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = c64::new(alphas[i], 0.0);
        if i + 1 < m {
            t[(i + 1, i)] = c64::new(betas[i], 0.0);
            t[(i, i + 1)] = c64::new(betas[i], 0.0);
        }
    }
    let evd = self_adjoint(&t)?;
    let mut kmin = 0usize;
    let mut vmin = f64::INFINITY;
    for k in 0..m {
        let s = evd.S()[k].re;
        if s < vmin {
            vmin = s;
            kmin = k;
        }
    }
    let u = evd.U();
    // The tridiagonal is real; strip the arbitrary global phase.
    let mut col: Vec<Complex64> = (0..m)
        .map(|i| {
            let z = u[(i, kmin)];
            Complex64::new(z.re, z.im)
        })
        .collect();
    let lead = col
        .iter()
        .cloned()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        .unwrap();
    let phase = lead / lead.norm();
    let real: Vec<f64> = col
        .iter_mut()
        .map(|z| {
            *z *= phase.conj();
            z.re
        })
        .collect();
    Ok((vmin, real))
}

fn rayleigh(h: &SparseHermitian, v: &[Complex64]) -> f64 {
    let mut hv = vec![Complex64::new(0.0, 0.0); v.len()];
    h.matvec(v, &mut hv);
    dot(v, &hv).re
}

/// One deflated Lanczos run: lowest eigenpair of H restricted to the
/// orthogonal complement of `deflate`.
fn lanczos_lowest(
    h: &SparseHermitian,
    deflate: &[Vec<Complex64>],
    opts: &SolverOpts,
    run_index: usize,
) -> Result<(f64, Vec<Complex64>)> {
    let n = h.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(
        opts.seed ^ (run_index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
    );
    let m_cap = opts.max_lanczos_dim.min(n).max(2);
    let mut start = {
        let mut v = random_unit_vector(n, &mut rng);
        project_out(&mut v, deflate);
        let nn = norm(&v);
        if nn < 1e-12 {
            return Err(FluxRingError::NoConvergence {
                residual: f64::INFINITY,
                target: opts.residual_tol,
                restarts: 0,
            });
        }
        scale(&mut v, 1.0 / nn);
        v
    };
    let mut best_res = f64::INFINITY;
    let check_every = 4usize;
    for _restart in 0..=opts.max_restarts {
        let mut vs: Vec<Vec<Complex64>> = vec![start.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut w = vec![Complex64::new(0.0, 0.0); n];
        loop {
            let j = alphas.len();
            h.matvec(&vs[j], &mut w);
            let alpha = dot(&vs[j], &w).re;
            alphas.push(alpha);
            axpy(&mut w, Complex64::new(-alpha, 0.0), &vs[j]);
            if j > 0 {
                axpy(&mut w, Complex64::new(-betas[j - 1], 0.0), &vs[j - 1]);
            }
            // Full reorthogonalization, two passes, including the deflated
            // directions so converged eigenvectors cannot reenter.
            for _ in 0..2 {
                project_out(&mut w, &vs);
                project_out(&mut w, deflate);
            }
            let beta = norm(&w);
            let basis_full = j + 1 == m_cap;
            let breakdown = beta < 1e-13;
            if breakdown || basis_full || (j + 1) % check_every == 0 {
                let (theta, s) = tridiag_lowest(&alphas, &betas)?;
                let res_est = beta * s[j].abs();
                if res_est <= opts.residual_tol * (1.0 + theta.abs()) || breakdown || basis_full {
                    let mut y = vec![Complex64::new(0.0, 0.0); n];
                    for (coef, v) in s.iter().zip(&vs) {
                        axpy(&mut y, Complex64::new(*coef, 0.0), v);
                    }
                    project_out(&mut y, deflate);
                    let ny = norm(&y);
                    if ny < 1e-12 {
                        start = random_unit_vector(n, &mut rng);
                        project_out(&mut start, deflate);
                        let nn = norm(&start);
                        scale(&mut start, 1.0 / nn);
                        break;
                    }
                    scale(&mut y, 1.0 / ny);
                    let theta_y = rayleigh(h, &y);
                    let res = h.residual(theta_y, &y);
                    best_res = best_res.min(res);
                    if res <= opts.residual_tol * (1.0 + theta_y.abs()) {
                        return Ok((theta_y, y));
                    }
                    if breakdown {
                        // Invariant subspace reached without convergence:
                        // restart from a fresh random direction.
                        start = random_unit_vector(n, &mut rng);
                        project_out(&mut start, deflate);
                        let nn = norm(&start);
                        scale(&mut start, 1.0 / nn);
                    } else {
                        start = y;
                    }
                    break;
                }
            }
            betas.push(beta);
            let mut q = w.clone();
            scale(&mut q, 1.0 / beta);
            vs.push(q);
        }
    }
    Err(FluxRingError::NoConvergence {
        residual: best_res,
        target: opts.residual_tol,
        restarts: opts.max_restarts,
    })
}

/// Lowest-k eigenpairs. Dense when dim <= opts.dense_threshold, Lanczos with
/// deflation otherwise. Ground-vector residuals are verified against the
/// residual tolerance on both paths.
pub fn ground_state(h: &SparseHermitian, k: usize, opts: &SolverOpts) -> Result<SpectrumResult> {
    if h.dim == 0 {
        return Err(FluxRingError::EmptySector);
    }
    if k < 1 || k > h.dim {
        return Err(FluxRingError::InvalidConfig(format!(
            "requested {k} eigenpairs from a dimension-{} matrix",
            h.dim
        )));
    }
    if h.dim <= opts.dense_threshold {
        let evd = self_adjoint(&csr_to_dense(h))?;
        let n = h.dim;
        let raw: Vec<f64> = (0..n).map(|i| evd.S()[i].re).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
        let evs: Vec<f64> = order.iter().map(|&k| raw[k]).collect();
        let e0 = evs[0];
        let tol = opts.degeneracy_tol_factor * e0.abs().max(1.0);
        let degeneracy = evs.iter().take_while(|&&e| e - e0 <= tol).count();
        let u = evd.U();
        let ground_vectors: Vec<Vec<Complex64>> = order[..degeneracy]
            .iter()
            .map(|&k| {
                (0..n)
                    .map(|i| {
                        let z = u[(i, k)];
                        Complex64::new(z.re, z.im)
                    })
                    .collect()
            })
            .collect();
        for (e, v) in evs.iter().zip(&ground_vectors) {
            let r = h.residual(*e, v);
            if r > opts.residual_tol * (1.0 + e.abs()) {
                return Err(FluxRingError::NoConvergence {
                    residual: r,
                    target: opts.residual_tol * (1.0 + e.abs()),
                    restarts: 0,
                });
            }
        }
        return Ok(SpectrumResult {
            eigenvalues: evs,
            ground_vectors,
            degeneracy,
            method: Method::Dense,
        });
    }
    let mut found: Vec<(f64, Vec<Complex64>)> = Vec::new();
    for run in 0..k {
        let deflate: Vec<Vec<Complex64>> = found.iter().map(|(_, v)| v.clone()).collect();
        let (e, v) = lanczos_lowest(h, &deflate, opts, run)?;
        found.push((e, v));
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    let e0 = found[0].0;
    let tol = opts.degeneracy_tol_factor * e0.abs().max(1.0);
    let degeneracy = found.iter().take_while(|(e, _)| e - e0 <= tol).count();
    Ok(SpectrumResult {
        eigenvalues: found.iter().map(|(e, _)| *e).collect(),
        ground_vectors: found[..degeneracy].iter().map(|(_, v)| v.clone()).collect(),
        degeneracy,
        method: Method::Lanczos,
    })
}

/// Total-spin content of one normalized vector.
#[derive(Clone, Copy, Debug)]
pub struct SpinMeasurement {
    /// Expectation of the total-spin Casimir, S(S+1) for a pure-spin state.
    pub s_squared: f64,
    /// The half-integer S when `s_squared` matches S(S+1) within 1e-6,
    /// None for a mixed-spin vector.
    pub s: Option<f64>,
}

const SPIN_PURITY_TOL: f64 = 1e-6;

fn s_z(sector: &Sector) -> f64 {
    sector.s_z_twice() as f64 / 2.0
}

/// Squared norms are computed by applying the spin-raising operator, so the
/// identity S^2 = S^- S^+ + S^z (S^z + 1) holds exactly in exact arithmetic.
fn s_plus_image(vector: &[Complex64], basis: &FockBasis) -> Result<Option<Vec<Complex64>>> {
    let sec = &basis.sector;
    if sec.n_down == 0 || sec.n_up == sec.length {
        return Ok(None);
    }
    let target_sector = Sector::new(
        sec.length,
        sec.n_up + 1,
        sec.n_down - 1,
        sec.projected_sites,
    )?;
    let target = enumerate_basis(&target_sector)?;
    Ok(Some(apply_s_plus(vector, basis, &target)?))
}

pub fn total_spin_of(
    vectors: &[Vec<Complex64>],
    basis: &FockBasis,
) -> Result<Vec<SpinMeasurement>> {
    let sz = s_z(&basis.sector);
    let mut out = Vec::with_capacity(vectors.len());
    for v in vectors {
        if v.len() != basis.dim() {
            return Err(FluxRingError::DimensionMismatch {
                got: v.len(),
                expected: basis.dim(),
            });
        }
        let nv = norm(v);
        if (nv - 1.0).abs() > 1e-8 {
            return Err(FluxRingError::NotNormalized((nv - 1.0).abs()));
        }
        let raised_sq = match s_plus_image(v, basis)? {
            Some(img) => img.iter().map(|c| c.norm_sqr()).sum::<f64>(),
            None => 0.0,
        };
        let s_squared = raised_sq + sz * (sz + 1.0);
        let s_exact = 0.5 * (-1.0 + (1.0 + 4.0 * s_squared).sqrt());
        let s_round = (2.0 * s_exact).round() / 2.0;
        let s = ((s_squared - s_round * (s_round + 1.0)).abs() <= SPIN_PURITY_TOL)
            .then_some(s_round);
        out.push(SpinMeasurement { s_squared, s });
    }
    Ok(out)
}

/// Eigenvalues of the total-spin Casimir restricted to the span of the given
/// orthonormal vectors. Used to resolve spin inside a degenerate cluster,
/// where individual eigenvectors may mix spins.
pub fn spin_casimir_spectrum(vectors: &[Vec<Complex64>], basis: &FockBasis) -> Result<Vec<f64>> {
    let k = vectors.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    let sz = s_z(&basis.sector);
    let images: Vec<Option<Vec<Complex64>>> = vectors
        .iter()
        .map(|v| s_plus_image(v, basis))
        .collect::<Result<_>>()?;
    let mut g = Mat::<c64>::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            let raise = match (&images[a], &images[b]) {
                (Some(ia), Some(ib)) => dot(ia, ib),
                _ => Complex64::new(0.0, 0.0),
            };
            let overlap = dot(&vectors[a], &vectors[b]);
            let val = raise + overlap * (sz * (sz + 1.0));
            g[(a, b)] = c64::new(val.re, val.im);
        }
    }
    let evd = self_adjoint(&g)?;
    let mut evs: Vec<f64> = (0..k).map(|i| evd.S()[i].re).collect();
    evs.sort_by(f64::total_cmp);
    Ok(evs)
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct SzEnergy {
    pub s_z_twice: i64,
    pub n_up: usize,
    pub n_down: usize,
    pub energy: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct SpinLevel {
    /// Twice the total spin, so half-integers stay exact.
    pub s_twice: i64,
    /// Lowest eigenvalue whose eigenspace contains total spin S.
    pub energy: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct SpinResolvedReport {
    pub by_sz: Vec<SzEnergy>,
    pub by_s: Vec<SpinLevel>,
}

/// Ground energy per S^z sector and the spin-resolved levels E(S).
///
/// E(S) is extracted in the S^z = S sector: eigenvalues are walked upward in
/// degenerate clusters and the first cluster whose Casimir spectrum contains
/// S(S+1) supplies the value. Dense diagonalization only; errors above the
/// dense threshold.
pub fn spin_resolved_energies(
    model: &RingModel,
    gauge: &FluxAssignment,
    n_e: usize,
    opts: &SolverOpts,
) -> Result<SpinResolvedReport> {
    let l = model.length;
    if n_e > 2 * l {
        return Err(FluxRingError::SectorTooLarge {
            n_up: n_e,
            n_down: 0,
            ring_len: l,
        });
    }
    let mask = model.projection_mask();
    let lo = n_e.saturating_sub(l);
    let hi = n_e.min(l);
    let mut by_sz = Vec::new();
    for n_up in lo..=hi {
        let n_down = n_e - n_up;
        let sector = Sector::new(l, n_up, n_down, mask)?;
        let basis = match enumerate_basis(&sector) {
            Ok(b) => b,
            Err(FluxRingError::EmptySector) => continue,
            Err(e) => return Err(e),
        };
        let h = build_hamiltonian(model, gauge, &basis)?;
        let spec = ground_state(&h, 1, opts)?;
        by_sz.push(SzEnergy {
            s_z_twice: sector.s_z_twice(),
            n_up,
            n_down,
            energy: spec.eigenvalues[0],
        });
    }
    if by_sz.is_empty() {
        return Err(FluxRingError::EmptySector);
    }

    let mut by_s = Vec::new();
    let s_twice_min = (n_e % 2) as i64;
    for s_twice in (s_twice_min..=(2 * hi as i64 - n_e as i64)).step_by(2) {
        let n_up = ((n_e as i64 + s_twice) / 2) as usize;
        let n_down = n_e - n_up;
        let sector = Sector::new(l, n_up, n_down, mask)?;
        let basis = match enumerate_basis(&sector) {
            Ok(b) => b,
            Err(FluxRingError::EmptySector) => continue,
            Err(e) => return Err(e),
        };
        let h = build_hamiltonian(model, gauge, &basis)?;
        if h.dim > opts.dense_threshold {
            return Err(FluxRingError::DenseCapExceeded {
                dim: h.dim,
                cap: opts.dense_threshold,
            });
        }
        let (evs, vecs) = dense_eigenpairs(&h)?;
        let target = (s_twice as f64 / 2.0) * (s_twice as f64 / 2.0 + 1.0);
        let cluster_tol = opts.degeneracy_tol_factor * evs[0].abs().max(1.0);
        let mut i = 0usize;
        let mut energy = None;
        while i < evs.len() {
            let mut j = i + 1;
            while j < evs.len() && evs[j] - evs[i] <= cluster_tol {
                j += 1;
            }
            let casimir = spin_casimir_spectrum(&vecs[i..j], &basis)?;
            if casimir
                .iter()
                .any(|&c| (c - target).abs() <= SPIN_PURITY_TOL.max(cluster_tol * 10.0))
            {
                energy = Some(evs[i]);
                break;
            }
            i = j;
        }
        if let Some(e) = energy {
            by_s.push(SpinLevel { s_twice, energy: e });
        }
    }
    Ok(SpinResolvedReport { by_sz, by_s })
}
