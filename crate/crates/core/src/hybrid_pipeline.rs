//! Unified one-forms of the quantum-classical hybrid models and the phases
//! read off from them.
//!
//! A hybrid one-form `A(I, J; X)` is stored as its first-order jet at an
//! operating point of the actions: the value `e`, one covector field `c_k`
//! per quantum action and one covector field `d` for the classical action.
//! Berry phases are `gamma_k = oint c_k`, the Hannay angle is
//! `Delta phi = -oint d`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{HolonomyError, Result};
use crate::manifold::{
    closed_line_integral, periodic_trapezoid, CovectorField, LoopSpec, QuadratureResult, StandardLoopParams,
};
use crate::models::{
    effective_classical_omega_sq, normal_mode_split, CoupledGhoHybrid, GhoTriple, SpinOscillatorHybrid,
};

/// Largest `lambda Q / B` accepted by [`spin_oscillator_one_form`].
pub const WEAK_COUPLING_LIMIT: f64 = 0.3;

/// Jet of a hybrid one-form at an operating point of the actions.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOneForm {
    /// Value of `A` at the operating point.
    pub constant: CovectorField,
    /// `dA/dI_k`.
    pub action_coeffs: Vec<CovectorField>,
    /// `dA/dJ`.
    pub classical_coeff: CovectorField,
}

impl LinearOneForm {
    pub fn len(&self) -> usize {
        self.constant.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constant.is_empty()
    }
}

/// Phases extracted from a [`LinearOneForm`].
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormPhases {
    pub gamma: Vec<QuadratureResult>,
    pub delta_phi: QuadratureResult,
    /// `oint A` at the operating point, for diagnostics.
    pub constant: QuadratureResult,
}

/// `gamma_k = oint c_k . dx`, `Delta phi = -oint d . dx`.
pub fn phases_from_one_form(a: &LinearOneForm, loop_spec: &LoopSpec) -> Result<OneFormPhases> {
    let gamma = a
        .action_coeffs
        .iter()
        .map(|c| closed_line_integral(c, loop_spec))
        .collect::<Result<Vec<_>>>()?;
    let delta_phi = closed_line_integral(&a.classical_coeff, loop_spec)?.scaled(-1.0);
    let constant = closed_line_integral(&a.constant, loop_spec)?;
    Ok(OneFormPhases {
        gamma,
        delta_phi,
        constant,
    })
}

/// One-form of the spin-oscillator hybrid on the loop `(B1, B2, X, Y, Z)`:
///
/// ```text
/// dA/dI_+- = -dphi/2 -+ mu lambda^2 Z^2 J / (4 Omega^3 B) d(Y/Z)
/// dA/dJ    = -(Y / 2Z) d(Z/Omega)
/// ```
///
/// with `Omega^2 = [X + mu lambda^2 (I+ - I-)/B] Z - Y^2`.
pub fn spin_oscillator_one_form(m: &SpinOscillatorHybrid) -> Result<LinearOneForm> {
    let lp = m.combined_loop()?;
    let n = lp.len();
    let b = m.b_magnitude;
    if !(b > 0.0) {
        return Err(HolonomyError::ZeroField);
    }
    let shift = m.mu * m.lambda * m.lambda * (m.i_plus - m.i_minus) / b;
    let coupling = m.mu * m.lambda * m.lambda * m.j_action / (4.0 * b);

    let mut c_plus = CovectorField::zeros(5, n);
    let mut c_minus = CovectorField::zeros(5, n);
    let mut d = CovectorField::zeros(5, n);
    let mut e = CovectorField::zeros(5, n);
    for j in 0..n {
        let x = lp.point(j);
        let (b1, b2) = (x[0], x[1]);
        let t = GhoTriple::from_slice(&x[2..5]);
        let om_sq = m.omega_sq(t);
        if !(om_sq > 0.0) {
            return Err(HolonomyError::OmegaImaginary {
                sample: j,
                omega_sq: om_sq,
            });
        }
        let om = om_sq.sqrt();
        let amplitude = (2.0 * t.z * m.j_action / om).sqrt();
        let ratio = m.lambda.abs() * amplitude / b;
        if ratio > WEAK_COUPLING_LIMIT {
            return Err(HolonomyError::WeakCouplingViolated {
                ratio,
                limit: WEAK_COUPLING_LIMIT,
            });
        }

        let r_sq = b1 * b1 + b2 * b2;
        let dphi = [-b2 / r_sq, b1 / r_sq, 0.0, 0.0, 0.0];
        let d_y_over_z = [0.0, 0.0, 0.0, 1.0 / t.z, -t.y / (t.z * t.z)];
        // dOmega^2 = Z dX - 2Y dY + (X + shift) dZ
        let d_om_sq = [0.0, 0.0, t.z, -2.0 * t.y, t.x + shift];
        let mut d_z_over_om = [0.0; 5];
        for k in 0..5 {
            d_z_over_om[k] = -t.z * d_om_sq[k] / (2.0 * om * om_sq);
        }
        d_z_over_om[4] += 1.0 / om;

        let w = coupling * t.z * t.z / (om * om_sq);
        let jw = -t.y / (2.0 * t.z);
        let (cp, cm, dd, ee) = (c_plus.at_mut(j), c_minus.at_mut(j), d.at_mut(j), e.at_mut(j));
        for k in 0..5 {
            cp[k] = -0.5 * dphi[k] - w * d_y_over_z[k];
            cm[k] = -0.5 * dphi[k] + w * d_y_over_z[k];
            dd[k] = jw * d_z_over_om[k];
            ee[k] = -0.5 * (m.i_plus + m.i_minus) * dphi[k] + m.j_action * dd[k];
        }
    }
    Ok(LinearOneForm {
        constant: e,
        action_coeffs: vec![c_plus, c_minus],
        classical_coeff: d,
    })
}

/// `Omega(t)` of the coupled-GHO hybrid at every loop sample.
pub fn coupled_gho_omega(m: &CoupledGhoHybrid) -> Result<Vec<f64>> {
    if m.x1_loop.len() != m.x2_loop.len() {
        return Err(HolonomyError::LengthMismatch {
            expected: m.x1_loop.len(),
            got: m.x2_loop.len(),
        });
    }
    (0..m.x1_loop.len())
        .map(|j| {
            let x1 = GhoTriple::from_slice(m.x1_loop.point(j));
            let x2 = GhoTriple::from_slice(m.x2_loop.point(j));
            sample_omega(x1, x2, m.params.k, j)
        })
        .collect()
}

fn sample_omega(x1: GhoTriple, x2: GhoTriple, k: f64, j: usize) -> Result<f64> {
    let w_sq = x1.discriminant();
    if !(w_sq > 0.0) {
        return Err(HolonomyError::EllipticViolation {
            sample: Some(j),
            margin: w_sq,
        });
    }
    let om_sq = effective_classical_omega_sq(x1, x2, k);
    if !(om_sq > 0.0) {
        return Err(HolonomyError::EllipticViolation {
            sample: Some(j),
            margin: om_sq / (x2.x * x2.z),
        });
    }
    Ok(om_sq.sqrt())
}

/// One-form of the coupled-GHO hybrid on the loop `(X1, Y1, Z1, X2, Y2, Z2)`,
///
/// ```text
/// A = sum_n I_n [(2n+1) Z1/(4 w) + K^2 Z1^2 Z2 J/(2 hbar w^4 Omega)] d(Y1/Z1)
///     - (Y2 J / 2 Z2) d(Z2/Omega)
/// ```
///
/// expanded around `I = hbar e_n` (`n = params.n_level`) and `J = params.j_action`.
/// Levels `0..=n_level` get a coefficient field.
pub fn coupled_gho_one_form(m: &CoupledGhoHybrid) -> Result<LinearOneForm> {
    let p = &m.params;
    let omegas = coupled_gho_omega(m)?;
    let n = omegas.len();
    let levels = p.n_level as usize + 1;
    let k_sq = p.k * p.k;

    let mut cs = vec![CovectorField::zeros(6, n); levels];
    let mut d = CovectorField::zeros(6, n);
    let mut e = CovectorField::zeros(6, n);
    for (j, &om) in omegas.iter().enumerate() {
        let x1 = GhoTriple::from_slice(m.x1_loop.point(j));
        let x2 = GhoTriple::from_slice(m.x2_loop.point(j));
        let w_sq = x1.discriminant();
        let w = w_sq.sqrt();
        let w4 = w_sq * w_sq;
        let om_sq = om * om;

        let dg1 = [0.0, 1.0 / x1.z, -x1.y / (x1.z * x1.z), 0.0, 0.0, 0.0];
        // d(Z1 / w^2)
        let dz1w = [-x1.z * x1.z / w4, 2.0 * x1.y * x1.z / w4, -x1.y * x1.y / w4];
        let mut d_om_sq = [0.0; 6];
        for k in 0..3 {
            d_om_sq[k] = -k_sq * x2.z * dz1w[k];
        }
        d_om_sq[3] = x2.z;
        d_om_sq[4] = -2.0 * x2.y;
        d_om_sq[5] = x2.x - k_sq * x1.z / w_sq;
        let mut d_z2_om = [0.0; 6];
        for k in 0..6 {
            d_z2_om[k] = -x2.z * d_om_sq[k] / (2.0 * om * om_sq);
        }
        d_z2_om[5] += 1.0 / om;

        let light = x1.z / (4.0 * w);
        let cross = k_sq * x1.z * x1.z * x2.z / (2.0 * w4 * om);
        let heavy = -x2.y / (2.0 * x2.z);
        for (level, c) in cs.iter_mut().enumerate() {
            let coeff = (2 * level + 1) as f64 * light + cross * p.j_action / p.hbar;
            let cj = c.at_mut(j);
            for k in 0..6 {
                cj[k] = coeff * dg1[k];
            }
        }
        let dd = d.at_mut(j);
        for k in 0..6 {
            dd[k] = cross * dg1[k] + heavy * d_z2_om[k];
        }
        let op = p.hbar * ((2 * p.n_level + 1) as f64 * light + cross * p.j_action / p.hbar);
        let ee = e.at_mut(j);
        for k in 0..6 {
            ee[k] = op * dg1[k] + p.j_action * heavy * d_z2_om[k];
        }
    }
    Ok(LinearOneForm {
        constant: e,
        action_coeffs: cs,
        classical_coeff: d,
    })
}

/// The concatenated `(X1, X2)` loop the coupled-GHO one-form lives on.
pub fn coupled_gho_loop(m: &CoupledGhoHybrid) -> Result<LoopSpec> {
    m.x1_loop.concat(&m.x2_loop)
}

/// Integration ranges used by [`standard_loop_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// `K = 0`: each subsystem over its own period.
    Subsystem,
    /// The common period `2 pi / base_rate`.
    Common,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Subsystem => "subsystem",
            Branch::Common => "common",
        }
    }
}

/// Phases of the coupled-GHO hybrid on the standard loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridPhaseReport {
    /// `gamma_n = gamma_n0 + gamma_I` for `n = 0..=n_level`.
    pub gamma: BTreeMap<u32, f64>,
    pub delta_phi: f64,
    /// `gamma_n0` of level `n_level`.
    pub gamma_0_part: f64,
    pub gamma_i_part: f64,
    pub delta_phi_0_part: f64,
    pub delta_phi_i_part: f64,
    pub gamma_i_approx: f64,
    pub delta_phi_i_approx: f64,
    pub elliptic_margin: f64,
    pub quadrature_error: f64,
    pub branch: Branch,
}

impl HybridPhaseReport {
    /// `gamma` of the operating level.
    pub fn gamma_n(&self) -> f64 {
        self.gamma_0_part + self.gamma_i_part
    }
}

/// `gamma_n0 = (2n+1)(1 - sqrt(1-eps^2)) T w1 / (4 sqrt(1-eps^2))` for `T w1 = 2 pi cycles1`.
pub fn uncoupled_gho_phase(n: u32, epsilon: f64, cycles1: usize) -> f64 {
    let s = (1.0 - epsilon * epsilon).sqrt();
    (2 * n + 1) as f64 * (1.0 - s) * 2.0 * PI * cycles1 as f64 / (4.0 * s)
}

/// Report with the branch picked from `K`: [`Branch::Subsystem`] at `K = 0`.
pub fn standard_loop_report(p: &StandardLoopParams, n_samples: usize) -> Result<HybridPhaseReport> {
    let branch = if p.k == 0.0 { Branch::Subsystem } else { Branch::Common };
    standard_loop_report_on(p, n_samples, branch)
}

/// Closed-form `gamma_n0` and trapezoid quadrature of the `Delta phi_0`,
/// `gamma_I`, `Delta phi_I` time-domain integrands on the standard loop.
pub fn standard_loop_report_on(p: &StandardLoopParams, n_samples: usize, branch: Branch) -> Result<HybridPhaseReport> {
    p.check_elliptic()?;
    if n_samples < crate::manifold::MIN_SAMPLES {
        return Err(HolonomyError::TooFewSamples {
            got: n_samples,
            min: crate::manifold::MIN_SAMPLES,
        });
    }
    if branch == Branch::Subsystem && p.k != 0.0 {
        return Err(HolonomyError::InvalidParameter(
            "the subsystem branch requires K = 0".into(),
        ));
    }
    let eps = p.epsilon;
    let s = (1.0 - eps * eps).sqrt();
    let (w1, w2) = (p.omega1(), p.omega2());
    let (t1, t2, cycles1) = match branch {
        Branch::Subsystem => (2.0 * PI / w1, 2.0 * PI / w2, 1),
        Branch::Common => (p.common_period(), p.common_period(), p.cycles1()),
    };
    let d = p.d_coupling();
    let d_sq = d * d;
    let (a1, a2, mu1) = (p.a1, p.a2, p.mu1);
    let margin = |c1: f64, c2: f64| 1.0 - eps * eps - 2.0 * d_sq * (1.0 - eps * c1) * (1.0 - eps * c2);

    let gamma_00_quad = periodic_trapezoid(
        |t| {
            let c1 = (w1 * t).cos();
            eps * w1 * (eps - c1) / (4.0 * s * (1.0 - eps * c1))
        },
        t1,
        n_samples,
    );
    let gamma_0 = uncoupled_gho_phase(p.n_level, eps, cycles1);

    let dphi0 = periodic_trapezoid(
        |t| {
            let (s1, c1) = (w1 * t).sin_cos();
            let (s2, c2) = (w2 * t).sin_cos();
            let m = margin(c1, c2);
            let om = a2 * m.sqrt();
            let dm = -2.0 * d_sq * (eps * w1 * s1 * (1.0 - eps * c2) + (1.0 - eps * c1) * eps * w2 * s2);
            let dom = a2 * dm / (2.0 * m.sqrt());
            -a2 * eps * eps * w2 * s2 * s2 / (2.0 * om * (1.0 - eps * c2)) + a2 * eps * s2 * dom / (2.0 * om * om)
        },
        t2,
        n_samples,
    );

    let (gamma_i, dphi_i) = if p.k == 0.0 {
        let zero = QuadratureResult {
            value: 0.0,
            error_estimate: 0.0,
        };
        (zero, zero)
    } else {
        let k_sq = p.k * p.k;
        let jr = p.j_action / p.hbar;
        // K^2 Z1^2 Z2 J / (2 hbar w^4 Omega) d(Y1/Z1)/dt from the raw triples.
        let gi = periodic_trapezoid(
            |t| {
                let [x1, y1, z1] = p.x1_triple(t);
                let x2 = GhoTriple::from_slice(&p.x2_triple(t));
                let w_sq = x1 * z1 - y1 * y1;
                let om = effective_classical_omega_sq(GhoTriple::new(x1, y1, z1), x2, p.k).sqrt();
                let c1 = (w1 * t).cos();
                let dg1 = mu1 * eps * w1 * (eps - c1) / ((1.0 - eps * c1) * (1.0 - eps * c1));
                k_sq * z1 * z1 * x2.z * jr / (2.0 * w_sq * w_sq * om) * dg1
            },
            t1,
            n_samples,
        );
        // The same integrand per unit J/hbar in the reduced coupling D.
        let di = periodic_trapezoid(
            |t| {
                let c1 = (w1 * t).cos();
                let c2 = (w2 * t).cos();
                -d_sq * a2 * eps * w1 * (eps - c1) * (1.0 - eps * c2) / (a1 * (1.0 - eps * eps) * margin(c1, c2).sqrt())
            },
            t1,
            n_samples,
        );
        (gi, di)
    };

    let tw1 = 2.0 * PI * cycles1 as f64;
    let s3 = (1.0 - eps * eps).powf(1.5);
    let dphi_i_approx = -eps * eps * a2 * d_sq * tw1 / (a1 * s3);
    let gamma_i_approx = -p.j_action / p.hbar * dphi_i_approx;

    let gamma_0_check = gamma_00_quad.value * (2 * p.n_level + 1) as f64;
    let quadrature_error = gamma_00_quad.error_estimate
        + (gamma_0_check - gamma_0).abs()
        + dphi0.error_estimate
        + gamma_i.error_estimate
        + dphi_i.error_estimate;

    let gamma = (0..=p.n_level)
        .map(|level| (level, uncoupled_gho_phase(level, eps, cycles1) + gamma_i.value))
        .collect();

    Ok(HybridPhaseReport {
        gamma,
        delta_phi: dphi0.value + dphi_i.value,
        gamma_0_part: gamma_0,
        gamma_i_part: gamma_i.value,
        delta_phi_0_part: dphi0.value,
        delta_phi_i_part: dphi_i.value,
        gamma_i_approx,
        delta_phi_i_approx: dphi_i_approx,
        elliptic_margin: p.elliptic_margin(),
        quadrature_error,
        branch,
    })
}

/// `D_max = sqrt((1 - eps^2)/2) / (1 + eps)` and `K_max = D_max sqrt(2 mu1 mu2 A1 A2 (1 - eps^2))`.
pub fn elliptic_bound(p: &StandardLoopParams) -> (f64, f64) {
    let e = p.epsilon;
    let d_max = ((1.0 - e * e) / 2.0).sqrt() / (1.0 + e);
    (d_max, d_max * p.k_scale())
}

fn check_pair(x1_loop: &LoopSpec, x2_loop: &LoopSpec) -> Result<LoopSpec> {
    for l in [x1_loop, x2_loop] {
        if l.dim() != 3 {
            return Err(HolonomyError::DimensionMismatch { expected: 3, got: l.dim() });
        }
    }
    x1_loop.concat(x2_loop)
}

fn d_ratio(t: GhoTriple) -> [f64; 3] {
    [0.0, 1.0 / t.z, -t.y / (t.z * t.z)]
}

/// Berry phase of the coupled quantum oscillators in the normal-mode state `(m, n)`:
///
/// ```text
/// oint Z1/4 [(2m+1) cos^2 b / W1 + (2n+1) sin^2 b / W2] d(Y1/Z1)
///    + Z2/4 [(2m+1) sin^2 b / W1 + (2n+1) cos^2 b / W2] d(Y2/Z2)
/// ```
pub fn full_quantum_phase(x1_loop: &LoopSpec, x2_loop: &LoopSpec, k: f64, m: u32, n: u32) -> Result<QuadratureResult> {
    let lp = check_pair(x1_loop, x2_loop)?;
    let (fm, fnn) = ((2 * m + 1) as f64, (2 * n + 1) as f64);
    let mut c = CovectorField::zeros(6, lp.len());
    for j in 0..lp.len() {
        let x = lp.point(j);
        let (t1, t2) = (GhoTriple::from_slice(&x[0..3]), GhoTriple::from_slice(&x[3..6]));
        let split = normal_mode_split(t1, t2, k).map_err(|e| match e {
            HolonomyError::ModeCollapse { omega2_sq, .. } => HolonomyError::ModeCollapse {
                sample: Some(j),
                omega2_sq,
            },
            HolonomyError::EllipticViolation { margin, .. } => HolonomyError::EllipticViolation {
                sample: Some(j),
                margin,
            },
            other => other,
        })?;
        let f1 = t1.z / 4.0 * (fm * split.cos_sq_beta / split.omega1 + fnn * split.sin_sq_beta / split.omega2);
        let f2 = t2.z / 4.0 * (fm * split.sin_sq_beta / split.omega1 + fnn * split.cos_sq_beta / split.omega2);
        let (g1, g2) = (d_ratio(t1), d_ratio(t2));
        let cj = c.at_mut(j);
        for i in 0..3 {
            cj[i] = f1 * g1[i];
            cj[3 + i] = f2 * g2[i];
        }
    }
    closed_line_integral(&c, &lp)
}

/// Born-Oppenheimer phase split into its `d(Y1/Z1)` (light) and `d(Y2/Z2)` (heavy) parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoPhase {
    pub light: QuadratureResult,
    pub heavy: QuadratureResult,
}

impl BoPhase {
    pub fn total(&self) -> f64 {
        self.light.value + self.heavy.value
    }
}

/// Born-Oppenheimer phase, `m` the heavy (classical-like) and `n` the light quantum number:
///
/// ```text
/// oint [(2n+1) Z1/(4w) + (2m+1) K^2 Z1^2 Z2/(4 w^4 Omega)] d(Y1/Z1) + (2m+1) Z2/(4 Omega) d(Y2/Z2)
/// ```
pub fn bo_full_quantum_phase(x1_loop: &LoopSpec, x2_loop: &LoopSpec, k: f64, m: u32, n: u32) -> Result<BoPhase> {
    let lp = check_pair(x1_loop, x2_loop)?;
    let (fm, fnn) = ((2 * m + 1) as f64, (2 * n + 1) as f64);
    let mut light = CovectorField::zeros(6, lp.len());
    let mut heavy = CovectorField::zeros(6, lp.len());
    for j in 0..lp.len() {
        let x = lp.point(j);
        let (t1, t2) = (GhoTriple::from_slice(&x[0..3]), GhoTriple::from_slice(&x[3..6]));
        let om = sample_omega(t1, t2, k, j)?;
        let w_sq = t1.discriminant();
        let w = w_sq.sqrt();
        let f1 = fnn * t1.z / (4.0 * w) + fm * k * k * t1.z * t1.z * t2.z / (4.0 * w_sq * w_sq * om);
        let f2 = fm * t2.z / (4.0 * om);
        let (g1, g2) = (d_ratio(t1), d_ratio(t2));
        let (lj, hj) = (light.at_mut(j), heavy.at_mut(j));
        for i in 0..3 {
            lj[i] = f1 * g1[i];
            hj[3 + i] = f2 * g2[i];
        }
    }
    Ok(BoPhase {
        light: closed_line_integral(&light, &lp)?,
        heavy: closed_line_integral(&heavy, &lp)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::standard_parameter_loops;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn spin_hybrid(lambda: f64, j: f64, eps: f64, n: usize) -> SpinOscillatorHybrid {
        let phi_loop = SpinOscillatorHybrid::azimuth_loop(|t| 2.0 * PI * t, 1.0, 1.0, n, 1).unwrap();
        let x_loop = LoopSpec::from_fn(
            |t| {
                let (s, c) = (2.0 * PI * t).sin_cos();
                vec![2.0 * (1.0 + eps * c), -2.0 * eps * s, 2.0 * (1.0 - eps * c)]
            },
            1.0,
            n,
            1,
        )
        .unwrap();
        SpinOscillatorHybrid {
            mu: 1.0,
            lambda,
            b_magnitude: 1.0,
            phi_loop,
            x_loop,
            i_plus: 0.5,
            i_minus: 0.5,
            j_action: j,
        }
    }

    #[test]
    fn winding_form() {
        let lp = LoopSpec::from_fn(|t| vec![(2.0 * PI * t).cos(), (2.0 * PI * t).sin()], 1.0, 256, 1).unwrap();
        let n = lp.len();
        let c = CovectorField::from_fn(2, n, |j| {
            let x = lp.point(j);
            vec![-x[1], x[0]]
        })
        .unwrap();
        let a = LinearOneForm {
            constant: c.clone(),
            action_coeffs: vec![c],
            classical_coeff: CovectorField::zeros(2, n),
        };
        let ph = phases_from_one_form(&a, &lp).unwrap();
        assert!((ph.gamma[0].value - 2.0 * PI).abs() < 1e-12);
        assert_eq!(ph.delta_phi.value, 0.0);
    }

    #[test]
    fn mismatched_lengths() {
        let lp = LoopSpec::from_fn(|t| vec![(2.0 * PI * t).cos(), (2.0 * PI * t).sin()], 1.0, 64, 1).unwrap();
        let c = CovectorField::zeros(2, 10);
        let a = LinearOneForm {
            constant: c.clone(),
            action_coeffs: vec![],
            classical_coeff: c,
        };
        let err = phases_from_one_form(&a, &lp).unwrap_err();
        assert_eq!(err.kind(), "LengthMismatch");
    }

    #[test]
    fn spin_oscillator_uncoupled() {
        let eps = 0.5;
        let m = spin_hybrid(0.0, 1.0, eps, 1024);
        let a = spin_oscillator_one_form(&m).unwrap();
        let ph = phases_from_one_form(&a, &m.combined_loop().unwrap()).unwrap();
        assert!((ph.gamma[0].value + PI).abs() < 1e-12);
        assert!((ph.gamma[1].value + PI).abs() < 1e-12);
        // Time-domain oint (Y/2Z) d(Z/w) with w = 2 sqrt(1 - eps^2) constant.
        let w = 2.0 * (1.0 - eps * eps).sqrt();
        let expect = periodic_trapezoid(
            |t| {
                let (s, c) = (2.0 * PI * t).sin_cos();
                let (y, z) = (-2.0 * eps * s, 2.0 * (1.0 - eps * c));
                let dz = 2.0 * eps * 2.0 * PI * s;
                y / (2.0 * z) * dz / w
            },
            1.0,
            4096,
        );
        assert!(rel(ph.delta_phi.value, expect.value) < 1e-10);
    }

    #[test]
    fn spin_oscillator_zero_action() {
        let m = spin_hybrid(0.05, 0.0, 0.5, 512);
        let ph = phases_from_one_form(&spin_oscillator_one_form(&m).unwrap(), &m.combined_loop().unwrap()).unwrap();
        assert!((ph.gamma[0].value + PI).abs() < 1e-12);
        assert!((ph.gamma[1].value + PI).abs() < 1e-12);
    }

    #[test]
    fn spin_oscillator_constant_triple() {
        let m = spin_hybrid(0.05, 1.0, 0.0, 512);
        let ph = phases_from_one_form(&spin_oscillator_one_form(&m).unwrap(), &m.combined_loop().unwrap()).unwrap();
        assert!(ph.delta_phi.value.abs() < 1e-12);
        assert!((ph.gamma[0].value + PI).abs() < 1e-12);
        assert!((ph.gamma[1].value + PI).abs() < 1e-12);
    }

    #[test]
    fn spin_oscillator_coupling_splits_levels() {
        let m = spin_hybrid(0.05, 1.0, 0.5, 1024);
        let ph = phases_from_one_form(&spin_oscillator_one_form(&m).unwrap(), &m.combined_loop().unwrap()).unwrap();
        let (gp, gm) = (ph.gamma[0].value + PI, ph.gamma[1].value + PI);
        assert!(gp.abs() > 1e-8);
        assert!((gp + gm).abs() < 1e-12);
    }

    #[test]
    fn spin_oscillator_errors() {
        let m = spin_hybrid(1.0, 10.0, 0.5, 256);
        assert_eq!(spin_oscillator_one_form(&m).unwrap_err().kind(), "WeakCouplingViolated");
        let mut m = spin_hybrid(0.1, 1e-3, 0.5, 256);
        m.i_minus = 1e4;
        assert_eq!(spin_oscillator_one_form(&m).unwrap_err().kind(), "OmegaImaginary");
    }

    fn params(eps: f64, ratio: (u32, u32), d: f64) -> StandardLoopParams {
        let mut p = StandardLoopParams {
            epsilon: eps,
            ..Default::default()
        }
        .with_ratio(ratio.0, ratio.1);
        p.k = d * p.k_scale();
        p
    }

    #[test]
    fn report_reference_values() {
        let p = params(3f64.sqrt() / 2.0, (1, 1), 0.0);
        let r = standard_loop_report(&p, 4096).unwrap();
        assert_eq!(r.branch, Branch::Subsystem);
        assert!((r.gamma_0_part - PI / 2.0).abs() < 1e-12);
        assert!((r.delta_phi_0_part + PI).abs() < 1e-9);
        assert_eq!(r.gamma_i_part, 0.0);
        assert!(r.quadrature_error < 1e-9);
    }

    #[test]
    fn coupling_antisymmetry() {
        for d in [1e-4, 0.05, 0.15] {
            let p = params(3f64.sqrt() / 2.0, (2, 1), d);
            let r = standard_loop_report(&p, 4096).unwrap();
            let hbar_over_j = p.hbar / p.j_action;
            assert!(rel(r.delta_phi_i_part, -hbar_over_j * r.gamma_i_part) < 1e-12);
            assert!(r.gamma_i_part > 0.0);
            assert_eq!(r.gamma[&0], r.gamma_0_part + r.gamma_i_part);
        }
    }

    #[test]
    fn one_form_route_matches_report() {
        for (ratio, d) in [((1, 1), 0.0), ((2, 1), 0.1), ((1, 2), 0.17), ((3, 2), 0.05)] {
            let mut p = params(3f64.sqrt() / 2.0, ratio, d);
            p.n_level = 1;
            let m = CoupledGhoHybrid::new(p, 4096).unwrap();
            let ph = phases_from_one_form(&coupled_gho_one_form(&m).unwrap(), &coupled_gho_loop(&m).unwrap()).unwrap();
            let r = standard_loop_report_on(&p, 4096, Branch::Common).unwrap();
            for level in 0..=1 {
                assert!(rel(ph.gamma[level].value, r.gamma[&(level as u32)]) < 1e-9, "{ratio:?} {d}");
            }
            assert!(rel(ph.delta_phi.value, r.delta_phi) < 1e-9, "{ratio:?} {d}");
        }
    }

    #[test]
    fn uncoupled_one_form_coefficient() {
        let p = params(0.5, (1, 1), 0.0);
        let m = CoupledGhoHybrid::new(p, 64).unwrap();
        let a = coupled_gho_one_form(&m).unwrap();
        for j in 0..m.x1_loop.len() {
            let x1 = GhoTriple::from_slice(m.x1_loop.point(j));
            let w = x1.discriminant().sqrt();
            let c = a.action_coeffs[0].at(j);
            assert!(rel(c[1], x1.z / (4.0 * w) / x1.z) < 1e-14);
            assert_eq!(&c[3..], &[0.0; 3]);
        }
    }

    #[test]
    fn frozen_loop_has_no_phase() {
        let mut p = params(0.0, (1, 1), 0.3);
        p.n_level = 2;
        let m = CoupledGhoHybrid::new(p, 128).unwrap();
        let ph = phases_from_one_form(&coupled_gho_one_form(&m).unwrap(), &coupled_gho_loop(&m).unwrap()).unwrap();
        for g in &ph.gamma {
            assert_eq!(g.value, 0.0);
        }
        assert_eq!(ph.delta_phi.value, 0.0);
    }

    #[test]
    fn omega_two_expressions() {
        let eps = 3f64.sqrt() / 2.0;
        let (d_max, _) = elliptic_bound(&params(eps, (2, 1), 0.0));
        let p = params(eps, (2, 1), 0.5 * d_max);
        let m = CoupledGhoHybrid::new(p, 512).unwrap();
        let om = coupled_gho_omega(&m).unwrap();
        let d = p.d_coupling();
        for (j, o) in om.iter().enumerate() {
            let t = m.x1_loop.time(j);
            let (c1, c2) = ((p.omega1() * t).cos(), (p.omega2() * t).cos());
            let expect = p.a2 * (1.0 - eps * eps - 2.0 * d * d * (1.0 - eps * c1) * (1.0 - eps * c2)).sqrt();
            assert!(rel(*o, expect) < 1e-12);
        }
    }

    #[test]
    fn bound_values() {
        let (d0, _) = elliptic_bound(&params(0.0, (1, 1), 0.0));
        assert!((d0 - 0.5f64.sqrt()).abs() < 1e-15);
        let p = params(3f64.sqrt() / 2.0, (1, 1), 0.0);
        let (d, k) = elliptic_bound(&p);
        assert!((d - 0.18947).abs() < 1e-5);
        assert!(rel(k, d * p.k_scale()) < 1e-15);
        assert!(elliptic_bound(&params(0.999999, (1, 1), 0.0)).0 < 1e-3);
    }

    #[test]
    fn beyond_bound_is_an_error() {
        let eps = 3f64.sqrt() / 2.0;
        let (d_max, _) = elliptic_bound(&params(eps, (1, 1), 0.0));
        let p = params(eps, (1, 1), 1.01 * d_max);
        assert_eq!(standard_loop_report(&p, 256).unwrap_err().kind(), "EllipticViolation");
        let (l1, l2) = standard_parameter_loops(&p, 256).unwrap();
        let err = CoupledGhoHybrid::with_loops(p, l1.clone(), l2.clone()).unwrap_err();
        assert_eq!(err.kind(), "EllipticViolation");
        let err = bo_full_quantum_phase(&l1, &l2, p.k * 10.0, 0, 0).unwrap_err();
        assert!(matches!(err, HolonomyError::EllipticViolation { sample: Some(_), .. }));
    }

    fn gho_loops(eps: f64, ratio: (u32, u32), n: usize) -> (StandardLoopParams, LoopSpec, LoopSpec) {
        let mut p = params(eps, ratio, 0.0);
        p.a1 = 3.0;
        let (l1, l2) = standard_parameter_loops(&p, n).unwrap();
        (p, l1, l2)
    }

    #[test]
    fn full_quantum_decouples() {
        let (p, l1, l2) = gho_loops(0.6, (2, 1), 1024);
        for (m, n) in [(0, 0), (1, 2), (3, 0)] {
            let g = full_quantum_phase(&l1, &l2, 0.0, m, n).unwrap().value;
            let expect = uncoupled_gho_phase(m, p.epsilon, p.cycles1()) + uncoupled_gho_phase(n, p.epsilon, p.cycles2());
            assert!(rel(g, expect) < 1e-10);
            let bo = bo_full_quantum_phase(&l1, &l2, 0.0, n, m).unwrap();
            assert!(rel(bo.total(), g) < 1e-12);
        }
    }

    #[test]
    fn full_quantum_swap() {
        let (_, l1, l2) = gho_loops(0.5, (3, 2), 512);
        let g12 = full_quantum_phase(&l1, &l2, 0.4, 1, 2).unwrap().value;
        let g21 = full_quantum_phase(&l2, &l1, 0.4, 1, 2).unwrap().value;
        assert!(rel(g12, g21) < 1e-10);
    }

    #[test]
    fn full_quantum_frozen() {
        let (_, l1, l2) = gho_loops(0.0, (1, 1), 64);
        assert_eq!(full_quantum_phase(&l1, &l2, 0.5, 1, 1).unwrap().value, 0.0);
    }

    #[test]
    fn mode_collapse() {
        let (_, l1, l2) = gho_loops(0.5, (1, 1), 64);
        let err = full_quantum_phase(&l1, &l2, 100.0, 0, 0).unwrap_err();
        assert!(matches!(err, HolonomyError::ModeCollapse { sample: Some(_), .. }));
    }

    #[test]
    fn bo_matches_hybrid() {
        let eps = 3f64.sqrt() / 2.0;
        let (d_max, _) = elliptic_bound(&params(eps, (2, 1), 0.0));
        for m_level in [0u32, 3] {
            let mut p = params(eps, (2, 1), 0.4 * d_max);
            p.a1 = 50.0;
            p.k = 0.4 * d_max * p.k_scale();
            p.hbar = 0.7;
            p.j_action = (m_level as f64 + 0.5) * p.hbar;
            p.n_level = 1;
            let hybrid = CoupledGhoHybrid::new(p, 2048).unwrap();
            let ph = phases_from_one_form(&coupled_gho_one_form(&hybrid).unwrap(), &coupled_gho_loop(&hybrid).unwrap()).unwrap();
            let bo = bo_full_quantum_phase(&hybrid.x1_loop, &hybrid.x2_loop, p.k, m_level, 1).unwrap();
            assert!(rel(bo.light.value, ph.gamma[1].value) < 1e-9);

            let next = bo_full_quantum_phase(&hybrid.x1_loop, &hybrid.x2_loop, p.k, m_level + 1, 1).unwrap();
            let dm = -(next.total() - bo.total());
            assert!(rel(dm, ph.delta_phi.value) < 1e-9, "{dm} {}", ph.delta_phi.value);
        }
    }
}
