//! Closed-form model zoo: spin in a magnetic field, the generalized harmonic
//! oscillator (GHO), the two hybrid models and the normal-mode split of two
//! coupled quantum GHOs.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HolonomyError, Result};
use crate::manifold::{standard_parameter_loops, LoopSpec, StandardLoopParams};
use crate::quantum_geometry::{CMatrix, CVector, HamiltonianFamily};

/// `H = -mu sigma . B` in the `(|->, |+>)` basis.
pub fn spin_hamiltonian(b: [f64; 3], mu: f64) -> CMatrix {
    let c = |re: f64, im: f64| Complex64::new(-mu * re, -mu * im);
    CMatrix::from_row_slice(2, 2, &[c(-b[2], 0.0), c(b[0], b[1]), c(b[0], -b[1]), c(b[2], 0.0)])
}

/// Spin family on field space `X = (B1, B2, B3)`.
pub fn spin_family(mu: f64) -> HamiltonianFamily {
    HamiltonianFamily::new(2, move |x| spin_hamiltonian([x[0], x[1], x[2]], mu))
}

/// Field loop on a cone of half-angle `theta` around `B3`, traversed
/// counter-clockwise `cycles` times over the unit period.
pub fn spin_cone_loop(theta: f64, b: f64, n_samples: usize, cycles: usize) -> Result<LoopSpec> {
    let (st, ct) = theta.sin_cos();
    let w = 2.0 * PI * cycles as f64;
    LoopSpec::from_fn(
        move |t| {
            let (s, c) = (w * t).sin_cos();
            vec![b * st * c, b * st * s, b * ct]
        },
        1.0,
        n_samples,
        cycles,
    )
}

/// A spin of moment `mu` driven around a field loop.
#[derive(Debug, Clone)]
pub struct SpinFieldModel {
    pub mu: f64,
    pub b_loop: LoopSpec,
}

impl SpinFieldModel {
    pub fn new(mu: f64, b_loop: LoopSpec) -> Result<Self> {
        if b_loop.dim() != 3 {
            return Err(HolonomyError::DimensionMismatch {
                expected: 3,
                got: b_loop.dim(),
            });
        }
        if b_loop.points().any(|b| b.iter().all(|v| *v == 0.0)) {
            return Err(HolonomyError::ZeroField);
        }
        Ok(Self { mu, b_loop })
    }

    pub fn family(&self) -> HamiltonianFamily {
        spin_family(self.mu)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinLevel {
    pub energy: f64,
    pub state: CVector,
}

/// Closed-form eigenpairs of `-mu sigma . B`, lower level first:
///
/// ```text
/// |E1> = sqrt((B+B3)/2B) |+> + (B1 + i B2)/sqrt(2B(B+B3)) |->,   E1 = -mu B
/// |E2> = -sqrt((B-B3)/2B) |+> + (B1 + i B2)/sqrt(2B(B-B3)) |->,  E2 = +mu B
/// ```
///
/// written as `e^{i phi} sqrt((B -+ B3)/2B)` for the `|->` amplitudes. On the
/// `B3` axis `phi` is taken from the limit `B1 -> 0+`, i.e. `phi = 0`.
pub fn spin_eigensystem(b: [f64; 3], mu: f64) -> Result<[SpinLevel; 2]> {
    let mag = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
    if !(mag > 0.0) {
        return Err(HolonomyError::ZeroField);
    }
    let phase = Complex64::from_polar(1.0, b[1].atan2(b[0]));
    let up = ((mag + b[2]) / (2.0 * mag)).max(0.0).sqrt();
    let down = ((mag - b[2]) / (2.0 * mag)).max(0.0).sqrt();
    let e1 = CVector::from_vec(vec![phase * down, Complex64::new(up, 0.0)]);
    let e2 = CVector::from_vec(vec![phase * up, Complex64::new(-down, 0.0)]);
    Ok([
        SpinLevel {
            energy: -mu * mag,
            state: e1,
        },
        SpinLevel {
            energy: mu * mag,
            state: e2,
        },
    ])
}

/// Total field seen by the spin when coupled to the oscillator coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveSpinField {
    pub b_tot: f64,
    pub theta: f64,
    pub e_plus: f64,
    pub e_minus: f64,
}

/// `B_tot = sqrt(B^2 + lambda^2 Q^2)`, `cos Theta = lambda Q / B_tot`, `E_pm = pm mu B_tot`.
pub fn spin_oscillator_effective(b: f64, lambda: f64, q: f64, mu: f64) -> Result<EffectiveSpinField> {
    if !(b > 0.0) {
        return Err(HolonomyError::ZeroField);
    }
    let b_tot = b.hypot(lambda * q);
    let theta = (lambda * q / b_tot).clamp(-1.0, 1.0).acos();
    Ok(EffectiveSpinField {
        b_tot,
        theta,
        e_plus: mu * b_tot,
        e_minus: -mu * b_tot,
    })
}

/// Second-order weak-coupling expansion `B + lambda^2 Q^2 / (2B)`.
pub fn weak_coupling_b_tot(b: f64, lambda: f64, q: f64) -> f64 {
    b + lambda * lambda * q * q / (2.0 * b)
}

/// `H_1 = -mu sigma . B - mu lambda sigma_3 Q` with `B = B (cos phi, sin phi, 0)`.
pub fn spin_oscillator_hamiltonian(b: f64, phi: f64, lambda: f64, q: f64, mu: f64) -> CMatrix {
    spin_hamiltonian([b * phi.cos(), b * phi.sin(), lambda * q], mu)
}

/// Parameters `(X, Y, Z)` of `H = (X q^2 + Y (pq + qp) + Z p^2) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhoTriple {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl GhoTriple {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    /// `X Z - Y^2`.
    pub fn discriminant(&self) -> f64 {
        self.x * self.z - self.y * self.y
    }

    /// `omega = sqrt(X Z - Y^2)`; fails unless `Z > 0` and the triple is elliptic.
    pub fn omega(&self) -> Result<f64> {
        let disc = self.discriminant();
        if !(disc > 0.0) || !(self.z > 0.0) {
            return Err(HolonomyError::EllipticViolation {
                sample: None,
                margin: disc,
            });
        }
        Ok(disc.sqrt())
    }
}

/// Born-Oppenheimer level `E_n = (n + 1/2) hbar omega - Z1 K^2 Q^2 / (2 omega^2)`.
pub fn gho_effective_energy(x1: GhoTriple, k: f64, q: f64, n: u32, hbar: f64) -> Result<f64> {
    let w = x1.omega()?;
    Ok((n as f64 + 0.5) * hbar * w - x1.z * k * k * q * q / (2.0 * w * w))
}

/// Normal modes of two bilinearly coupled GHOs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalModeSplit {
    pub beta: f64,
    pub sin_sq_beta: f64,
    pub cos_sq_beta: f64,
    pub omega1: f64,
    pub omega2: f64,
}

/// Mixing angle and normal frequencies
///
/// ```text
/// R = sqrt((w1^2 - w2^2)^2 + 4 K^2 Z1 Z2)
/// sin^2 beta = (w2^2 - w1^2 + R) / 2R,  cos^2 beta = (w1^2 - w2^2 + R) / 2R
/// Omega_{1,2}^2 = (w1^2 + w2^2 +- R) / 2
/// ```
///
/// The smaller branch is evaluated through `Omega_1^2 Omega_2^2 = w1^2 w2^2 - K^2 Z1 Z2`
/// so that widely separated frequencies keep full precision.
pub fn normal_mode_split(x1: GhoTriple, x2: GhoTriple, k: f64) -> Result<NormalModeSplit> {
    let w1 = x1.omega()?;
    let w2 = x2.omega()?;
    let (w1s, w2s) = (w1 * w1, w2 * w2);
    let coupling = k * k * x1.z * x2.z;
    let delta = w1s - w2s;
    let r = (delta * delta + 4.0 * coupling).sqrt();
    let (sin_sq, cos_sq) = if r == 0.0 {
        (0.0, 1.0)
    } else if delta >= 0.0 {
        let s = 2.0 * coupling / (r * (r + delta));
        (s, 1.0 - s)
    } else {
        let c = 2.0 * coupling / (r * (r - delta));
        (1.0 - c, c)
    };
    let omega1_sq = (w1s + w2s + r) / 2.0;
    let product = w1s * w2s - coupling;
    let omega2_sq = product / omega1_sq;
    if !(omega2_sq > 0.0) {
        return Err(HolonomyError::ModeCollapse {
            sample: None,
            omega2_sq,
        });
    }
    Ok(NormalModeSplit {
        beta: sin_sq.sqrt().atan2(cos_sq.sqrt()),
        sin_sq_beta: sin_sq,
        cos_sq_beta: cos_sq,
        omega1: omega1_sq.sqrt(),
        omega2: omega2_sq.sqrt(),
    })
}

/// Spin-1/2 in a rotating field coupled through `sigma_3` to a classical GHO.
///
/// The field azimuth loop is embedded in the plane as `(B cos phi, B sin phi)`
/// so that it closes; `dphi = (B1 dB2 - B2 dB1) / B^2`.
#[derive(Debug, Clone)]
pub struct SpinOscillatorHybrid {
    pub mu: f64,
    pub lambda: f64,
    pub b_magnitude: f64,
    pub phi_loop: LoopSpec,
    pub x_loop: LoopSpec,
    pub i_plus: f64,
    pub i_minus: f64,
    pub j_action: f64,
}

impl SpinOscillatorHybrid {
    /// Field azimuth `phi(t)` sampled into a planar loop of radius `b`.
    pub fn azimuth_loop(phi: impl Fn(f64) -> f64, b: f64, period: f64, n_samples: usize, cycles: usize) -> Result<LoopSpec> {
        LoopSpec::from_fn(
            |t| {
                let (s, c) = phi(t).sin_cos();
                vec![b * c, b * s]
            },
            period,
            n_samples,
            cycles,
        )
    }

    /// The concatenated loop `(B1, B2, X, Y, Z)`.
    pub fn combined_loop(&self) -> Result<LoopSpec> {
        if self.phi_loop.dim() != 2 {
            return Err(HolonomyError::DimensionMismatch {
                expected: 2,
                got: self.phi_loop.dim(),
            });
        }
        if self.x_loop.dim() != 3 {
            return Err(HolonomyError::DimensionMismatch {
                expected: 3,
                got: self.x_loop.dim(),
            });
        }
        self.phi_loop.concat(&self.x_loop)
    }

    /// `Omega^2 = [X + mu lambda^2 (I+ - I-)/B] Z - Y^2`.
    pub fn omega_sq(&self, t: GhoTriple) -> f64 {
        (t.x + self.mu * self.lambda * self.lambda * (self.i_plus - self.i_minus) / self.b_magnitude) * t.z - t.y * t.y
    }
}

/// Quantum GHO coupled to a classical GHO on the standard parameter loops.
#[derive(Debug, Clone)]
pub struct CoupledGhoHybrid {
    pub params: StandardLoopParams,
    pub x1_loop: LoopSpec,
    pub x2_loop: LoopSpec,
}

impl CoupledGhoHybrid {
    pub fn new(params: StandardLoopParams, n_samples: usize) -> Result<Self> {
        params.check_elliptic()?;
        let (x1_loop, x2_loop) = standard_parameter_loops(&params, n_samples)?;
        Ok(Self {
            params,
            x1_loop,
            x2_loop,
        })
    }

    /// Uses caller-supplied loops sampled on a shared time grid.
    pub fn with_loops(params: StandardLoopParams, x1_loop: LoopSpec, x2_loop: LoopSpec) -> Result<Self> {
        params.check_elliptic()?;
        Ok(Self {
            params,
            x1_loop,
            x2_loop,
        })
    }

    /// `Omega^2 = (omega^2 X2 - Z1 K^2) Z2 / omega^2 - Y2^2`.
    pub fn omega_sq(&self, x1: GhoTriple, x2: GhoTriple) -> f64 {
        effective_classical_omega_sq(x1, x2, self.params.k)
    }
}

/// Squared frequency of the classical oscillator after Born-Oppenheimer
/// elimination of the quantum one, `X2 Z2 - K^2 Z1 Z2 / omega^2 - Y2^2`.
pub fn effective_classical_omega_sq(x1: GhoTriple, x2: GhoTriple, k: f64) -> f64 {
    let w_sq = x1.discriminant();
    x2.x * x2.z - k * k * x1.z * x2.z / w_sq - x2.y * x2.y
}
