//! Eigenframes along loops, discrete Wilson-loop Berry phases, the
//! classicalization map `psi_n = (q_n + i p_n) / sqrt(2 hbar)`, action-angle
//! coordinates in the instantaneous eigenbasis and the angle-averaged Hannay
//! one-form.
//!
//! Sign convention: `gamma_k = i oint <E_k|dE_k>`. With this convention the
//! lower spin level on the equator of the field sphere picks up `-pi`, and the
//! Hannay angle of the classicalized system is `Delta theta_k = -gamma_k`.
//!
//! Two-level states are ordered `(psi_1, psi_2)` with component 1 the spin-down
//! state `|->` and component 2 the spin-up state `|+>`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{HolonomyError, Result};
use crate::manifold::{closed_line_integral, CovectorField, LoopSpec, QuadratureResult};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

type HamiltonianFn = dyn Fn(&[f64]) -> CMatrix + Send + Sync;

/// A Hermitian matrix family `H(X)` on parameter space.
#[derive(Clone)]
pub struct HamiltonianFamily {
    dim: usize,
    eval: Arc<HamiltonianFn>,
    hermiticity_tol: f64,
}

impl std::fmt::Debug for HamiltonianFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HamiltonianFamily")
            .field("dim", &self.dim)
            .field("hermiticity_tol", &self.hermiticity_tol)
            .finish_non_exhaustive()
    }
}

impl HamiltonianFamily {
    pub fn new(dim: usize, eval: impl Fn(&[f64]) -> CMatrix + Send + Sync + 'static) -> Self {
        Self {
            dim,
            eval: Arc::new(eval),
            hermiticity_tol: 1e-10,
        }
    }

    pub fn with_hermiticity_tol(mut self, tol: f64) -> Self {
        self.hermiticity_tol = tol;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Evaluates `H(x)` and checks shape and Hermiticity. `sample` only labels errors.
    pub fn evaluate(&self, x: &[f64], sample: usize) -> Result<CMatrix> {
        let h = (self.eval)(x);
        if h.nrows() != self.dim || h.ncols() != self.dim {
            return Err(HolonomyError::DimensionMismatch {
                expected: self.dim,
                got: h.nrows(),
            });
        }
        let deviation = (&h - h.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if !(deviation <= self.hermiticity_tol) {
            return Err(HolonomyError::HermiticityViolation { sample, deviation });
        }
        Ok(h)
    }
}

/// Eigenvalues in ascending order and the matching eigenvectors as columns.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = h.clone().symmetric_eigen();
    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (energies, vectors)
}

fn min_adjacent_gap(energies: &[f64]) -> Option<(usize, f64)> {
    energies
        .windows(2)
        .enumerate()
        .map(|(k, w)| (k, w[1] - w[0]))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Gauge-aligned eigen-decompositions along a loop.
#[derive(Debug, Clone)]
pub struct EigenFrame {
    loop_spec: LoopSpec,
    energies: Vec<Vec<f64>>,
    vectors: Vec<CMatrix>,
    min_gap: f64,
}

impl EigenFrame {
    pub fn loop_spec(&self) -> &LoopSpec {
        &self.loop_spec
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.nrows())
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn energies(&self, j: usize) -> &[f64] {
        &self.energies[j]
    }

    /// Eigenvectors at sample `j`, one per column.
    pub fn vectors(&self, j: usize) -> &CMatrix {
        &self.vectors[j]
    }

    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    /// Copy with eigenvector `(j, k)` multiplied by `exp(i phase(j, k))`.
    pub fn regauged(&self, mut phase: impl FnMut(usize, usize) -> f64) -> Self {
        let mut out = self.clone();
        for (j, v) in out.vectors.iter_mut().enumerate() {
            for k in 0..v.ncols() {
                let u = Complex64::from_polar(1.0, phase(j, k));
                v.column_mut(k).apply(|z| *z *= u);
            }
        }
        out
    }
}

/// Diagonalizes the family at every loop sample and aligns phases to the
/// previous sample. `gap_tol = None` uses `1e-9 * max|E|`.
pub fn eigenframe_along_loop(
    family: &HamiltonianFamily,
    loop_spec: &LoopSpec,
    gap_tol: Option<f64>,
) -> Result<EigenFrame> {
    let decomps: Vec<(Vec<f64>, CMatrix)> = (0..loop_spec.len())
        .into_par_iter()
        .map(|j| family.evaluate(loop_spec.point(j), j).map(|h| hermitian_eigen(&h)))
        .collect::<Result<_>>()?;

    let scale = decomps
        .iter()
        .flat_map(|(e, _)| e.iter())
        .fold(0.0f64, |m, e| m.max(e.abs()));
    let tol = gap_tol.unwrap_or(1e-9 * scale);
    let mut min_gap = f64::INFINITY;
    for (j, (e, _)) in decomps.iter().enumerate() {
        if let Some((k, gap)) = min_adjacent_gap(e) {
            if !(gap >= tol) || gap == 0.0 {
                return Err(HolonomyError::GapTooSmall { sample: j, level: k });
            }
            min_gap = min_gap.min(gap);
        }
    }

    // Alignment is a sequential pass: each sample is phased against the previous one.
    let (energies, mut vectors): (Vec<_>, Vec<_>) = decomps.into_iter().unzip();
    for j in 1..vectors.len() {
        let (head, tail) = vectors.split_at_mut(j);
        let prev = &head[j - 1];
        let cur = &mut tail[0];
        for k in 0..cur.ncols() {
            let ov = prev.column(k).dotc(&cur.column(k));
            let mag = ov.norm();
            if mag < 0.5 {
                return Err(HolonomyError::InvalidParameter(format!(
                    "loop under-sampled at sample {j}: overlap {mag:.3} for level {k}"
                )));
            }
            cur.column_mut(k).apply(|z| *z *= ov.conj() / mag);
        }
    }

    Ok(EigenFrame {
        loop_spec: loop_spec.clone(),
        energies,
        vectors,
        min_gap,
    })
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Berry phase and Hannay angle of one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricPhase {
    pub berry: f64,
    pub hannay: f64,
}

/// Discrete Wilson loop `gamma_k = -Im log prod_j <v_j|v_{j+1}> <v_M|v_0>`.
///
/// For a loop made of `c` identical base cycles the holonomy of each cycle is
/// reduced to `(-pi, pi]` and the cycle values are summed.
pub fn berry_and_hannay(frame: &EigenFrame, k: usize) -> Result<GeometricPhase> {
    let n = frame.dim();
    if k >= n {
        return Err(HolonomyError::InvalidParameter(format!("level {k} out of range for dimension {n}")));
    }
    let m = frame.len() - 1;
    let cycles = frame.loop_spec.cycles();
    let segments = if cycles > 1 && m % cycles == 0 { cycles } else { 1 };
    let seg = m / segments;
    let mut berry = 0.0;
    for s in 0..segments {
        let (start, end) = (s * seg, (s + 1) * seg);
        let mut prod = Complex64::new(1.0, 0.0);
        for j in start..end {
            prod *= frame.vectors[j].column(k).dotc(&frame.vectors[j + 1].column(k));
            prod /= prod.norm();
        }
        prod *= frame.vectors[end].column(k).dotc(&frame.vectors[start].column(k));
        berry += wrap_angle(-prod.arg());
    }
    Ok(GeometricPhase { berry, hannay: -berry })
}

/// Closed-form spin Hannay angles
/// `Delta theta_1 = -oint (B2 dB1 - B1 dB2) / (2B(B + B3))` and
/// `Delta theta_2 = -oint (B2 dB1 - B1 dB2) / (2B(B - B3))`.
pub fn spin_hannay_closed_form(b_loop: &LoopSpec, level: usize) -> Result<QuadratureResult> {
    let sign = match level {
        1 => 1.0,
        2 => -1.0,
        _ => return Err(HolonomyError::InvalidParameter(format!("spin level must be 1 or 2, got {level}"))),
    };
    if b_loop.dim() != 3 {
        return Err(HolonomyError::DimensionMismatch {
            expected: 3,
            got: b_loop.dim(),
        });
    }
    let mut coeffs = CovectorField::zeros(3, b_loop.len());
    for j in 0..b_loop.len() {
        let b = b_loop.point(j);
        let mag = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
        let denom_base = mag + sign * b[2];
        if !(mag > 0.0) || denom_base <= 1e-6 * mag {
            return Err(HolonomyError::PoleProximity { sample: j });
        }
        let denom = 2.0 * mag * denom_base;
        let c = coeffs.at_mut(j);
        c[0] = -b[1] / denom;
        c[1] = b[0] / denom;
    }
    closed_line_integral(&coeffs, b_loop)
}

/// Canonical coordinates of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Classicalized {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    /// `sum (p_n^2 + q_n^2)`, equal to `2 hbar` for a normalized state.
    pub energy_check: f64,
}

/// `q_n = sqrt(2 hbar) Re psi_n`, `p_n = sqrt(2 hbar) Im psi_n`.
pub fn classicalize(psi: &CVector, hbar: f64) -> Classicalized {
    let s = (2.0 * hbar).sqrt();
    let q: Vec<f64> = psi.iter().map(|z| s * z.re).collect();
    let p: Vec<f64> = psi.iter().map(|z| s * z.im).collect();
    let energy_check = q.iter().chain(&p).map(|v| v * v).sum();
    Classicalized { q, p, energy_check }
}

/// Point on the Poincare sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesVector(pub [f64; 3]);

impl StokesVector {
    /// `h(S; B) = -mu S . B`.
    pub fn energy(&self, mu: f64, b: [f64; 3]) -> f64 {
        -mu * (self.0[0] * b[0] + self.0[1] * b[1] + self.0[2] * b[2])
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|s| s * s).sum()
    }
}

/// Stokes vector of a normalized two-level state `psi_1 |-> + psi_2 |+>`.
pub fn stokes_vector(psi: &CVector, hbar: f64) -> Result<StokesVector> {
    if psi.len() != 2 {
        return Err(HolonomyError::DimensionMismatch { expected: 2, got: psi.len() });
    }
    let norm = psi.norm();
    if !((norm - 1.0).abs() < 1e-10) {
        return Err(HolonomyError::NotNormalized { norm });
    }
    let c = classicalize(psi, hbar);
    let (q1, q2, p1, p2) = (c.q[0], c.q[1], c.p[0], c.p[1]);
    Ok(StokesVector([
        (q1 * q2 + p1 * p2) / hbar,
        (p1 * q2 - p2 * q1) / hbar,
        (p2 * p2 + q2 * q2 - p1 * p1 - q1 * q1) / (2.0 * hbar),
    ]))
}

/// Action-angle coordinates in an instantaneous eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionAngle {
    pub actions: Vec<f64>,
    pub angles: Vec<f64>,
}

fn unitarity_deviation(basis: &CMatrix) -> f64 {
    let n = basis.ncols();
    let gram = basis.adjoint() * basis;
    (gram - CMatrix::identity(n, n)).iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

fn check_unitary(basis: &CMatrix) -> Result<()> {
    let deviation = unitarity_deviation(basis);
    if !(deviation <= 1e-10) || !basis.is_square() {
        return Err(HolonomyError::NotUnitary { deviation });
    }
    Ok(())
}

/// `psi'_k = <E_k|psi>`, `I_k = hbar |psi'_k|^2`, `theta_k = -arg psi'_k mod 2 pi`.
pub fn action_angle_transform(psi: &CVector, basis: &CMatrix, hbar: f64) -> Result<ActionAngle> {
    check_unitary(basis)?;
    if psi.len() != basis.nrows() {
        return Err(HolonomyError::DimensionMismatch {
            expected: basis.nrows(),
            got: psi.len(),
        });
    }
    let amplitudes = basis.adjoint() * psi;
    Ok(ActionAngle {
        actions: amplitudes.iter().map(|a| hbar * a.norm_sqr()).collect(),
        angles: amplitudes.iter().map(|a| (-a.arg()).rem_euclid(2.0 * PI)).collect(),
    })
}

/// Inverse canonical map `(theta, I) -> (q, p)`:
///
/// ```text
/// q_n = sum_k sqrt(2 I_k) [cos th_k Re C_kn + sin th_k Im C_kn]
/// p_n = sum_k sqrt(2 I_k) [cos th_k Im C_kn - sin th_k Re C_kn]
/// ```
///
/// where `C_kn` is component `n` of eigenvector `k` (column `k` of `basis`).
pub fn reconstruct(aa: &ActionAngle, basis: &CMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    check_unitary(basis)?;
    let n = basis.nrows();
    if aa.actions.len() != n || aa.angles.len() != n {
        return Err(HolonomyError::DimensionMismatch {
            expected: n,
            got: aa.actions.len(),
        });
    }
    let mut q = vec![0.0; n];
    let mut p = vec![0.0; n];
    canonical_coordinates(basis, &aa.actions, &aa.angles, &mut q, &mut p);
    Ok((q, p))
}

fn canonical_coordinates(basis: &CMatrix, actions: &[f64], angles: &[f64], q: &mut [f64], p: &mut [f64]) {
    let n = basis.nrows();
    q.iter_mut().for_each(|v| *v = 0.0);
    p.iter_mut().for_each(|v| *v = 0.0);
    for k in 0..n {
        let amp = (2.0 * actions[k]).sqrt();
        if amp == 0.0 {
            continue;
        }
        let (s, c) = angles[k].sin_cos();
        for row in 0..n {
            let ckn = basis[(row, k)];
            q[row] += amp * (c * ckn.re + s * ckn.im);
            p[row] += amp * (c * ckn.im - s * ckn.re);
        }
    }
}

const THETA_GRID: usize = 8;
const MAX_THETA_GRID_DIM: usize = 6;

/// Eigenbasis at `x` with each vector phased so that component `refs[k]` is
/// real and positive. `refs = None` picks the largest component of each vector.
fn fixed_gauge_basis(
    family: &HamiltonianFamily,
    x: &[f64],
    refs: Option<&[usize]>,
) -> Result<(CMatrix, Vec<usize>)> {
    let h = family.evaluate(x, 0)?;
    let (energies, mut basis) = hermitian_eigen(&h);
    let scale = energies.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    if let Some((k, gap)) = min_adjacent_gap(&energies) {
        if !(gap > 1e-9 * scale) {
            return Err(HolonomyError::GapTooSmall { sample: 0, level: k });
        }
    }
    let n = basis.ncols();
    let refs: Vec<usize> = match refs {
        Some(r) => r.to_vec(),
        None => (0..n)
            .map(|k| {
                let col = basis.column(k);
                (0..col.len()).max_by(|&a, &b| col[a].norm().total_cmp(&col[b].norm())).unwrap_or(0)
            })
            .collect(),
    };
    for k in 0..n {
        let c = basis[(refs[k], k)];
        let mag = c.norm();
        if mag == 0.0 {
            return Err(HolonomyError::InvalidParameter("gauge reference component vanishes".into()));
        }
        basis.column_mut(k).apply(|z| *z *= c.conj() / mag);
    }
    Ok((basis, refs))
}

/// Angle-averaged Hannay one-form `<p . d_X q>_theta` evaluated on the
/// direction `dx` at the parameter point `x`.
///
/// The average uses a uniform grid of 8 points per angle, which is exact for the
/// quadratic trigonometric integrand. The parameter derivative of
/// `F(h) = <p(X) . q(X + h dx)>_theta` is a central difference refined by
/// Ridders' extrapolation. Eigenvectors are taken in the gauge where the
/// largest component at `x` is real and positive. The grid grows as `8^N`, so
/// `N` is limited to 6.
pub fn theta_averaged_one_form(family: &HamiltonianFamily, actions: &[f64], x: &[f64], dx: &[f64]) -> Result<f64> {
    let n = family.dim();
    if actions.len() != n {
        return Err(HolonomyError::DimensionMismatch { expected: n, got: actions.len() });
    }
    if dx.len() != x.len() {
        return Err(HolonomyError::DimensionMismatch { expected: x.len(), got: dx.len() });
    }
    if n > MAX_THETA_GRID_DIM {
        return Err(HolonomyError::InvalidParameter(format!(
            "angle grid average supports at most {MAX_THETA_GRID_DIM} levels, got {n}"
        )));
    }
    if actions.iter().any(|a| !(*a >= 0.0)) {
        return Err(HolonomyError::InvalidParameter("actions must be nonnegative".into()));
    }
    let dx_norm = dx.iter().map(|v| v * v).sum::<f64>().sqrt();
    if dx_norm == 0.0 {
        return Ok(0.0);
    }
    let x_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (c0, refs) = fixed_gauge_basis(family, x, None)?;

    let total_points = THETA_GRID.pow(n as u32);
    let grid = |idx: usize, angles: &mut [f64]| {
        let mut rem = idx;
        for a in angles.iter_mut() {
            *a = 2.0 * PI * (rem % THETA_GRID) as f64 / THETA_GRID as f64;
            rem /= THETA_GRID;
        }
    };
    let mut angles = vec![0.0; n];
    let (mut q, mut p) = (vec![0.0; n], vec![0.0; n]);
    let mut p0 = Vec::with_capacity(total_points * n);
    for idx in 0..total_points {
        grid(idx, &mut angles);
        canonical_coordinates(&c0, actions, &angles, &mut q, &mut p);
        p0.extend_from_slice(&p);
    }
    let overlap = |h: f64| -> Result<f64> {
        let xh: Vec<f64> = x.iter().zip(dx).map(|(a, d)| a + h * d / dx_norm).collect();
        let (ch, _) = fixed_gauge_basis(family, &xh, Some(&refs))?;
        let mut angles = vec![0.0; n];
        let (mut q, mut p) = (vec![0.0; n], vec![0.0; n]);
        let mut acc = 0.0;
        for idx in 0..total_points {
            grid(idx, &mut angles);
            canonical_coordinates(&ch, actions, &angles, &mut q, &mut p);
            acc += p0[idx * n..(idx + 1) * n].iter().zip(&q).map(|(a, b)| a * b).sum::<f64>();
        }
        Ok(acc / total_points as f64)
    };

    let mut h0 = 1e-2 * x_norm.max(1.0);
    loop {
        match ridders(&overlap, h0) {
            Err(HolonomyError::GapTooSmall { .. }) if h0 > 1e-8 * x_norm.max(1.0) => h0 /= 8.0,
            other => return other.map(|d| d * dx_norm),
        }
    }
}

/// Ridders' polynomial extrapolation of central differences of `f` at 0.
fn ridders(f: &impl Fn(f64) -> Result<f64>, h0: f64) -> Result<f64> {
    const SHRINK: f64 = 1.4;
    const TABLE: usize = 10;
    let shrink_sq = SHRINK * SHRINK;
    let mut a = [[0.0f64; TABLE]; TABLE];
    let mut h = h0;
    a[0][0] = (f(h)? - f(-h)?) / (2.0 * h);
    let (mut best, mut err) = (a[0][0], f64::INFINITY);
    for i in 1..TABLE {
        h /= SHRINK;
        a[0][i] = (f(h)? - f(-h)?) / (2.0 * h);
        let mut fac = shrink_sq;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= shrink_sq;
            let e = (a[j][i] - a[j - 1][i]).abs().max((a[j][i] - a[j - 1][i - 1]).abs());
            if e <= err {
                err = e;
                best = a[j][i];
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= 2.0 * err {
            break;
        }
    }
    Ok(best)
}
