//! Closed parameter loops, the standard periodic parameter family and
//! closed-curve quadrature.
//!
//! A [`LoopSpec`] stores `M + 1` uniform samples of a closed curve, the last
//! one being an exact copy of the first. Tangent vectors are obtained by
//! spectral differentiation of the periodic samples, so the composite
//! trapezoid rule used by [`closed_line_integral`] keeps its spectral accuracy
//! for smooth loops.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{HolonomyError, Result};

pub const MIN_SAMPLES: usize = 16;
pub const DEFAULT_SAMPLES: usize = 4096;
const CLOSURE_TOL: f64 = 1e-12;

/// A uniformly sampled closed curve in parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopSpec {
    dim: usize,
    period: f64,
    cycles: usize,
    times: Vec<f64>,
    points: Vec<f64>,
    velocities: Vec<f64>,
}

/// Value of a closed line integral together with a resolution-halving error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
}

impl QuadratureResult {
    pub fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            error_estimate: self.error_estimate * factor.abs(),
        }
    }

    pub fn plus(self, other: Self) -> Self {
        Self {
            value: self.value + other.value,
            error_estimate: self.error_estimate + other.error_estimate,
        }
    }
}

/// One covector per loop sample, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CovectorField {
    dim: usize,
    data: Vec<f64>,
}

impl CovectorField {
    pub fn zeros(dim: usize, samples: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * samples],
        }
    }

    /// Builds a field by evaluating `f(j)` for every sample index.
    pub fn from_fn(dim: usize, samples: usize, mut f: impl FnMut(usize) -> Vec<f64>) -> Result<Self> {
        let mut data = Vec::with_capacity(dim * samples);
        for j in 0..samples {
            let c = f(j);
            if c.len() != dim {
                return Err(HolonomyError::DimensionMismatch {
                    expected: dim,
                    got: c.len(),
                });
            }
            data.extend_from_slice(&c);
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn at(&self, j: usize) -> &[f64] {
        &self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn at_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &CovectorField) -> Result<Self> {
        if self.dim != other.dim || self.data.len() != other.data.len() {
            return Err(HolonomyError::LengthMismatch {
                expected: self.data.len(),
                got: other.data.len(),
            });
        }
        Ok(Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + factor * b)
                .collect(),
        })
    }
}

impl LoopSpec {
    /// Samples `f` uniformly on `[0, period]` (make_loop).
    ///
    /// `n_samples` is the number of distinct samples `M`; the stored loop has
    /// `M + 1` points with `x_M` set equal to `x_0` once closure is verified.
    pub fn from_fn<F>(f: F, period: f64, n_samples: usize, cycles: usize) -> Result<Self>
    where
        F: Fn(f64) -> Vec<f64>,
    {
        if n_samples < MIN_SAMPLES {
            return Err(HolonomyError::TooFewSamples {
                got: n_samples,
                min: MIN_SAMPLES,
            });
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(HolonomyError::InvalidParameter(format!(
                "loop period must be positive, got {period}"
            )));
        }
        if cycles == 0 {
            return Err(HolonomyError::InvalidParameter("cycles must be >= 1".into()));
        }
        let first = f(0.0);
        let last = f(period);
        let dim = first.len();
        if dim == 0 {
            return Err(HolonomyError::InvalidParameter("loop dimension must be >= 1".into()));
        }
        if last.len() != dim {
            return Err(HolonomyError::DimensionMismatch {
                expected: dim,
                got: last.len(),
            });
        }
        let deviation = relative_deviation(&first, &last);
        if !(deviation <= CLOSURE_TOL) {
            return Err(HolonomyError::NotClosed { deviation });
        }

        let dt = period / n_samples as f64;
        let mut times = Vec::with_capacity(n_samples + 1);
        let mut points = Vec::with_capacity((n_samples + 1) * dim);
        for j in 0..n_samples {
            let t = j as f64 * dt;
            let x = if j == 0 { first.clone() } else { f(t) };
            if x.len() != dim {
                return Err(HolonomyError::DimensionMismatch {
                    expected: dim,
                    got: x.len(),
                });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(HolonomyError::InvalidParameter(format!(
                    "loop map is not finite at t = {t}"
                )));
            }
            times.push(t);
            points.extend_from_slice(&x);
        }
        times.push(period);
        points.extend_from_slice(&first);
        Self::from_samples(dim, period, cycles, times, points)
    }

    fn from_samples(
        dim: usize,
        period: f64,
        cycles: usize,
        times: Vec<f64>,
        points: Vec<f64>,
    ) -> Result<Self> {
        let m = times.len() - 1;
        let mut velocities = vec![0.0; points.len()];
        let mut column = vec![0.0; m];
        for d in 0..dim {
            for j in 0..m {
                column[j] = points[j * dim + d];
            }
            let deriv = spectral_derivative(&column, period);
            for j in 0..m {
                velocities[j * dim + d] = deriv[j];
            }
            velocities[m * dim + d] = deriv[0];
        }
        Ok(Self {
            dim,
            period,
            cycles,
            times,
            points,
            velocities,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Number of base cycles traversed in one period.
    pub fn cycles(&self) -> usize {
        self.cycles
    }

    /// Number of stored samples, including the closing one.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of uniform intervals `M`.
    pub fn intervals(&self) -> usize {
        self.times.len() - 1
    }

    pub fn step(&self) -> f64 {
        self.period / self.intervals() as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        self.times[j]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.dim..(j + 1) * self.dim]
    }

    /// Tangent `dx/dt` at sample `j`.
    pub fn velocity(&self, j: usize) -> &[f64] {
        &self.velocities[j * self.dim..(j + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.dim)
    }

    /// Position at an arbitrary time by cubic Hermite interpolation of the
    /// samples and their spectral tangents. `t` is taken modulo the period.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out);
        out
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let m = self.intervals();
        let h = self.step();
        let tau = t.rem_euclid(self.period);
        let mut j = (tau / h).floor() as usize;
        if j >= m {
            j = m - 1;
        }
        let s = (tau - j as f64 * h) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let (x0, x1) = (self.point(j), self.point(j + 1));
        let (v0, v1) = (self.velocity(j), self.velocity(j + 1));
        for d in 0..self.dim {
            out[d] = h00 * x0[d] + h10 * h * v0[d] + h01 * x1[d] + h11 * h * v1[d];
        }
    }

    /// The same curve traversed backwards.
    pub fn reversed(&self) -> Self {
        let m = self.intervals();
        let mut points = Vec::with_capacity(self.points.len());
        let mut velocities = Vec::with_capacity(self.velocities.len());
        for j in 0..=m {
            points.extend_from_slice(self.point(m - j));
            velocities.extend(self.velocity(m - j).iter().map(|v| -v));
        }
        Self {
            dim: self.dim,
            period: self.period,
            cycles: self.cycles,
            times: self.times.clone(),
            points,
            velocities,
        }
    }

    /// Concatenates the coordinates of two loops sampled on the same time grid.
    pub fn concat(&self, other: &LoopSpec) -> Result<Self> {
        if self.len() != other.len() {
            return Err(HolonomyError::LengthMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        if (self.period - other.period).abs() > 1e-12 * self.period {
            return Err(HolonomyError::InvalidParameter(format!(
                "loops have different periods: {} vs {}",
                self.period, other.period
            )));
        }
        let dim = self.dim + other.dim;
        let mut points = Vec::with_capacity(dim * self.len());
        let mut velocities = Vec::with_capacity(dim * self.len());
        for j in 0..self.len() {
            points.extend_from_slice(self.point(j));
            points.extend_from_slice(other.point(j));
            velocities.extend_from_slice(self.velocity(j));
            velocities.extend_from_slice(other.velocity(j));
        }
        Ok(Self {
            dim,
            period: self.period,
            cycles: 1,
            times: self.times.clone(),
            points,
            velocities,
        })
    }

    /// Stride-2 subsample with its own spectral tangents, or `None` for odd `M`.
    pub fn half_resolution(&self) -> Option<Self> {
        let m = self.intervals();
        if m % 2 != 0 || m / 2 < 2 {
            return None;
        }
        let times: Vec<f64> = self.times.iter().step_by(2).copied().collect();
        let mut points = Vec::with_capacity(times.len() * self.dim);
        for j in (0..=m).step_by(2) {
            points.extend_from_slice(self.point(j));
        }
        Self::from_samples(self.dim, self.period, self.cycles, times, points).ok()
    }
}

fn relative_deviation(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if diff == 0.0 {
        0.0
    } else if scale == 0.0 {
        f64::INFINITY
    } else {
        diff / scale
    }
}

/// Derivative of a uniformly sampled periodic signal by FFT.
pub fn spectral_derivative(values: &[f64], period: f64) -> Vec<f64> {
    let m = values.len();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(m);
    let inverse = planner.plan_fft_inverse(m);
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward.process(&mut buf);
    let base = 2.0 * PI / period;
    for (idx, c) in buf.iter_mut().enumerate() {
        let k = if 2 * idx < m {
            idx as f64
        } else if 2 * idx == m {
            0.0
        } else {
            idx as f64 - m as f64
        };
        *c *= Complex64::new(0.0, k * base);
    }
    inverse.process(&mut buf);
    buf.iter().map(|c| c.re / m as f64).collect()
}

/// Composite trapezoid value of the closed line integral of `c(x) . dx`.
pub fn closed_line_integral(coefficients: &CovectorField, loop_spec: &LoopSpec) -> Result<QuadratureResult> {
    if coefficients.len() != loop_spec.len() {
        return Err(HolonomyError::LengthMismatch {
            expected: loop_spec.len(),
            got: coefficients.len(),
        });
    }
    if coefficients.dim() != loop_spec.dim() {
        return Err(HolonomyError::DimensionMismatch {
            expected: loop_spec.dim(),
            got: coefficients.dim(),
        });
    }
    let m = loop_spec.intervals();
    let full = trapezoid_sum(coefficients, loop_spec, 1, m) * loop_spec.step();
    let half = match loop_spec.half_resolution() {
        Some(coarse) => {
            let mut sum = 0.0;
            for (jc, j) in (0..m).step_by(2).enumerate() {
                sum += dot(coefficients.at(j), coarse.velocity(jc));
            }
            sum * coarse.step()
        }
        None => trapezoid_sum(coefficients, loop_spec, 2, m) * loop_spec.step() * 2.0,
    };
    Ok(QuadratureResult {
        value: full,
        error_estimate: (full - half).abs(),
    })
}

fn trapezoid_sum(c: &CovectorField, l: &LoopSpec, stride: usize, m: usize) -> f64 {
    (0..m).step_by(stride).map(|j| dot(c.at(j), l.velocity(j))).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Trapezoid rule for a periodic scalar integrand over `[0, period]`.
pub fn periodic_trapezoid(f: impl Fn(f64) -> f64, period: f64, n_samples: usize) -> QuadratureResult {
    let h = period / n_samples as f64;
    let values: Vec<f64> = (0..n_samples).map(|j| f(j as f64 * h)).collect();
    let full: f64 = values.iter().sum::<f64>() * h;
    let half: f64 = values.iter().step_by(2).sum::<f64>() * 2.0 * h;
    QuadratureResult {
        value: full,
        error_estimate: (full - half).abs(),
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The periodic parameter family of the coupled oscillator hybrid:
///
/// ```text
/// X_i = A_i mu_i (1 + eps cos(w_i t)),  Y_i = -A_i eps sin(w_i t),  Z_i = A_i/mu_i (1 - eps cos(w_i t))
/// ```
///
/// with `w_i = ratio.i * base_rate`, so both triples share the period `2 pi / base_rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StandardLoopParams {
    pub a1: f64,
    pub a2: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub base_rate: f64,
    /// Reduced integer pair `(n1, n2)` with `omega_i = n_i * base_rate`.
    pub ratio: (u32, u32),
    pub epsilon: f64,
    pub k: f64,
    pub j_action: f64,
    pub hbar: f64,
    pub n_level: u32,
}

impl Default for StandardLoopParams {
    /// Figure parameters: `eps = sqrt(3)/2`, `A1/A2 = 1e8`, `J/hbar = 1e13`.
    fn default() -> Self {
        Self {
            a1: 1e8,
            a2: 1.0,
            mu1: 1.0,
            mu2: 1.0,
            base_rate: 1.0,
            ratio: (1, 1),
            epsilon: 3f64.sqrt() / 2.0,
            k: 0.0,
            j_action: 1e13,
            hbar: 1.0,
            n_level: 0,
        }
    }
}

impl StandardLoopParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("a1", self.a1),
            ("a2", self.a2),
            ("mu1", self.mu1),
            ("mu2", self.mu2),
            ("base_rate", self.base_rate),
            ("hbar", self.hbar),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(HolonomyError::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(HolonomyError::InvalidParameter(format!(
                "epsilon must lie in [0, 1), got {}",
                self.epsilon
            )));
        }
        if !(self.k >= 0.0) || !self.k.is_finite() {
            return Err(HolonomyError::InvalidParameter(format!("k must be >= 0, got {}", self.k)));
        }
        if !(self.j_action >= 0.0) || !self.j_action.is_finite() {
            return Err(HolonomyError::InvalidParameter(format!(
                "j_action must be >= 0, got {}",
                self.j_action
            )));
        }
        let (n1, n2) = self.ratio;
        if n1 == 0 || n2 == 0 {
            return Err(HolonomyError::InvalidParameter("frequency ratio entries must be >= 1".into()));
        }
        if gcd(n1, n2) != 1 {
            return Err(HolonomyError::InvalidParameter(format!(
                "frequency ratio ({n1}, {n2}) is not reduced"
            )));
        }
        Ok(())
    }

    /// Reduces `(n1, n2)` by their gcd.
    pub fn with_ratio(mut self, n1: u32, n2: u32) -> Self {
        let g = gcd(n1, n2).max(1);
        self.ratio = (n1 / g, n2 / g);
        self
    }

    pub fn omega1(&self) -> f64 {
        self.ratio.0 as f64 * self.base_rate
    }

    pub fn omega2(&self) -> f64 {
        self.ratio.1 as f64 * self.base_rate
    }

    /// Common period `T = 2 pi n1 / omega1 = 2 pi n2 / omega2`.
    pub fn common_period(&self) -> f64 {
        2.0 * PI / self.base_rate
    }

    pub fn cycles1(&self) -> usize {
        self.ratio.0 as usize
    }

    pub fn cycles2(&self) -> usize {
        self.ratio.1 as usize
    }

    /// Dimensionless coupling `D = K / sqrt(2 mu1 mu2 A1 A2 (1 - eps^2))`.
    pub fn d_coupling(&self) -> f64 {
        self.k / self.k_scale()
    }

    /// `K / D`.
    pub fn k_scale(&self) -> f64 {
        (2.0 * self.mu1 * self.mu2 * self.a1 * self.a2 * (1.0 - self.epsilon * self.epsilon)).sqrt()
    }

    /// `1 - eps^2 - 2 D^2 (1 + eps)^2`.
    pub fn elliptic_margin(&self) -> f64 {
        let d = self.d_coupling();
        let e = self.epsilon;
        1.0 - e * e - 2.0 * d * d * (1.0 + e) * (1.0 + e)
    }

    pub fn check_elliptic(&self) -> Result<()> {
        self.validate()?;
        let margin = self.elliptic_margin();
        if !(margin > 0.0) {
            return Err(HolonomyError::EllipticViolation { sample: None, margin });
        }
        Ok(())
    }

    pub fn x1_triple(&self, t: f64) -> [f64; 3] {
        triple(self.a1, self.mu1, self.epsilon, self.omega1() * t)
    }

    pub fn x2_triple(&self, t: f64) -> [f64; 3] {
        triple(self.a2, self.mu2, self.epsilon, self.omega2() * t)
    }
}

fn triple(a: f64, mu: f64, eps: f64, phase: f64) -> [f64; 3] {
    let (s, c) = phase.sin_cos();
    [a * mu * (1.0 + eps * c), -a * eps * s, a / mu * (1.0 - eps * c)]
}

/// Loops of `X_1 = (X1, Y1, Z1)` and `X_2 = (X2, Y2, Z2)` over the common period.
pub fn standard_parameter_loops(p: &StandardLoopParams, n_samples: usize) -> Result<(LoopSpec, LoopSpec)> {
    p.validate()?;
    let period = p.common_period();
    let l1 = LoopSpec::from_fn(|t| p.x1_triple(t).to_vec(), period, n_samples, p.cycles1())?;
    let l2 = LoopSpec::from_fn(|t| p.x2_triple(t).to_vec(), period, n_samples, p.cycles2())?;
    Ok((l1, l2))
}

/// Single-cycle loops of each triple over its own period `2 pi / omega_i`.
pub fn subsystem_parameter_loops(p: &StandardLoopParams, n_samples: usize) -> Result<(LoopSpec, LoopSpec)> {
    p.validate()?;
    let l1 = LoopSpec::from_fn(|t| p.x1_triple(t).to_vec(), 2.0 * PI / p.omega1(), n_samples, 1)?;
    let l2 = LoopSpec::from_fn(|t| p.x2_triple(t).to_vec(), 2.0 * PI / p.omega2(), n_samples, 1)?;
    Ok((l1, l2))
}
