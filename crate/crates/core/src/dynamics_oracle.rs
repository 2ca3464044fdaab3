//! Time-domain oracles: driven Schrodinger propagation with geometric-phase
//! extraction, and the driven classical GHO with Hannay-angle extraction.
//!
//! Both integrators are the classical fixed-step RK4 scheme. Parameters are
//! read from the loop by Hermite interpolation at the dilated time
//! `t / slowness`. Units have `hbar = 1` for the quantum propagator.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{HolonomyError, Result};
use crate::manifold::LoopSpec;
use crate::models::GhoTriple;
use crate::quantum_geometry::{hermitian_eigen, wrap_angle, CMatrix, CVector, HamiltonianFamily};

pub const DEFAULT_STEPS_PER_SAMPLE: usize = 32;
/// Final-level fidelity below which a propagation counts as non-adiabatic.
pub const ADIABATIC_FIDELITY: f64 = 0.99;
/// Largest `|E| h` allowed in the quantum stepper.
const MAX_PHASE_STEP: f64 = 0.01;
/// Largest `Omega h` allowed in the classical stepper.
const MAX_ANGLE_STEP: f64 = 0.05;

/// Result of [`propagate_quantum`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumPropagation {
    pub psi_final: CVector,
    /// `int E_k dt` along the instantaneous level.
    pub dynamical_phase: f64,
    /// Accumulated `| ||psi|| - 1 |` removed by per-step renormalization.
    pub norm_drift: f64,
    pub slowness: f64,
    pub level: usize,
    /// `|<E_k(X(T))|psi_final>|^2`.
    pub fidelity: f64,
    /// State and accumulated dynamical phase at every cycle boundary, starting with `t = 0`.
    pub cycle_marks: Vec<(CVector, f64)>,
}

/// Integrates `i psi' = H(X(t / slowness)) psi` once around the loop starting in level `k`.
pub fn propagate_quantum(
    family: &HamiltonianFamily,
    loop_spec: &LoopSpec,
    k: usize,
    slowness: f64,
    steps_per_sample: usize,
) -> Result<QuantumPropagation> {
    if !(slowness > 0.0) || steps_per_sample == 0 {
        return Err(HolonomyError::InvalidParameter(format!(
            "slowness must be positive and steps_per_sample >= 1 (got {slowness}, {steps_per_sample})"
        )));
    }
    let dim = family.dim();
    if k >= dim {
        return Err(HolonomyError::InvalidParameter(format!("level {k} out of range for dimension {dim}")));
    }
    let m = loop_spec.intervals();

    let mut e_max = 0.0f64;
    let mut e_scale_checked = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let h = family.evaluate(loop_spec.point(j), j)?;
        let (e, v) = hermitian_eigen(&h);
        e_max = e.iter().fold(e_max, |a, x| a.max(x.abs()));
        e_scale_checked.push((e, v));
    }
    let tol = 1e-9 * e_max;
    for (j, (e, _)) in e_scale_checked.iter().enumerate() {
        for l in 0..dim.saturating_sub(1) {
            if !(e[l + 1] - e[l] > tol) {
                return Err(HolonomyError::GapTooSmall { sample: j, level: l });
            }
        }
    }

    let dt_sample = loop_spec.step() * slowness;
    let sub = steps_per_sample.max((e_max * dt_sample / MAX_PHASE_STEP).ceil() as usize);
    let ds = loop_spec.step() / sub as f64;
    let h = ds * slowness;

    let cycles = loop_spec.cycles();
    let per_cycle = if cycles > 1 && m % cycles == 0 { m / cycles } else { m };

    let psi0: CVector = e_scale_checked[0].1.column(k).into_owned();
    let mut psi = psi0.clone();
    let mut dynamical = 0.0;
    let mut norm_drift = 0.0;
    let mut marks = vec![(psi0, 0.0)];
    let mut x = vec![0.0; loop_spec.dim()];
    let minus_i = Complex64::new(0.0, -1.0);

    let mut h_start = family.evaluate(loop_spec.point(0), 0)?;
    let mut e_start = e_scale_checked[0].0[k];
    for j in 0..m {
        let t0 = loop_spec.time(j);
        for i in 0..sub {
            let s_mid = t0 + (i as f64 + 0.5) * ds;
            loop_spec.eval_into(s_mid, &mut x);
            let h_mid = family.evaluate(&x, j)?;
            let h_end = if i + 1 == sub {
                family.evaluate(loop_spec.point(j + 1), j + 1)?
            } else {
                loop_spec.eval_into(t0 + (i + 1) as f64 * ds, &mut x);
                family.evaluate(&x, j)?
            };

            let f = |hm: &CMatrix, v: &CVector| -> CVector { (hm * v) * minus_i };
            let k1 = f(&h_start, &psi);
            let k2 = f(&h_mid, &(&psi + &k1 * Complex64::from(h / 2.0)));
            let k3 = f(&h_mid, &(&psi + &k2 * Complex64::from(h / 2.0)));
            let k4 = f(&h_end, &(&psi + &k3 * Complex64::from(h)));
            psi += (k1 + k2 * Complex64::from(2.0) + k3 * Complex64::from(2.0) + k4) * Complex64::from(h / 6.0);
            let norm = psi.norm();
            norm_drift += (norm - 1.0).abs();
            psi.unscale_mut(norm);

            let e_end = if i + 1 == sub {
                e_scale_checked[j + 1].0[k]
            } else {
                hermitian_eigen(&h_end).0[k]
            };
            dynamical += 0.5 * (e_start + e_end) * h;
            e_start = e_end;
            h_start = h_end;
        }
        if (j + 1) % per_cycle == 0 {
            marks.push((psi.clone(), dynamical));
        }
    }

    let final_vec = e_scale_checked[m].1.column(k);
    let fidelity = final_vec.dotc(&psi).norm_sqr();
    if fidelity < ADIABATIC_FIDELITY {
        return Err(HolonomyError::NonAdiabatic { fidelity });
    }
    Ok(QuantumPropagation {
        psi_final: psi,
        dynamical_phase: dynamical,
        norm_drift,
        slowness,
        level: k,
        fidelity,
        cycle_marks: marks,
    })
}

/// `gamma = arg<initial|psi_final> + int E dt`, accumulated cycle by cycle so
/// that phases of multi-cycle loops are not folded into one `(-pi, pi]` window.
pub fn extract_geometric_phase(prop: &QuantumPropagation, initial_state: &CVector) -> Result<f64> {
    let overlap = initial_state.dotc(&prop.psi_final).norm();
    if !(overlap > 0.9) {
        return Err(HolonomyError::OverlapTooSmall { overlap });
    }
    if prop.cycle_marks.len() <= 2 {
        let total = initial_state.dotc(&prop.psi_final).arg();
        return Ok(wrap_angle(total + prop.dynamical_phase));
    }
    let mut gamma = 0.0;
    for w in prop.cycle_marks.windows(2) {
        let (a, da) = (&w[0].0, w[0].1);
        let (b, db) = (&w[1].0, w[1].1);
        gamma += wrap_angle(a.dotc(b).arg() + (db - da));
    }
    Ok(gamma)
}

/// Trajectory of the driven classical GHO, sampled at the loop samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalTrajectory {
    pub times: Vec<f64>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub action: Vec<f64>,
    /// Unwound angle `phi(t)`.
    pub angle: Vec<f64>,
    /// `int Omega dt` over the whole run.
    pub dynamical_angle: f64,
    pub slowness: f64,
}

impl ClassicalTrajectory {
    /// `max |J(t)/J(0) - 1|`.
    pub fn max_action_drift(&self) -> f64 {
        let j0 = self.action[0];
        self.action.iter().fold(0.0f64, |m, j| m.max((j / j0 - 1.0).abs()))
    }
}

fn action_angle(t: GhoTriple, q: f64, p: f64) -> (f64, f64) {
    let om = t.discriminant().sqrt();
    let u = t.z * p + t.y * q;
    let action = (om * om * q * q + u * u) / (2.0 * t.z * om);
    (action, (-u / om).atan2(q))
}

fn elliptic_triple(x: &[f64], sample: usize) -> Result<GhoTriple> {
    let t = GhoTriple::from_slice(x);
    let disc = t.discriminant();
    if !(disc > 0.0) || !(t.z > 0.0) {
        return Err(HolonomyError::EllipticViolation {
            sample: Some(sample),
            margin: disc,
        });
    }
    Ok(t)
}

/// Integrates `Q' = YQ + ZP`, `P' = -XQ - YP` once around the loop.
pub fn propagate_classical(
    x2_loop: &LoopSpec,
    initial: (f64, f64),
    slowness: f64,
    steps_per_sample: usize,
) -> Result<ClassicalTrajectory> {
    if x2_loop.dim() != 3 {
        return Err(HolonomyError::DimensionMismatch {
            expected: 3,
            got: x2_loop.dim(),
        });
    }
    if !(slowness > 0.0) || steps_per_sample == 0 {
        return Err(HolonomyError::InvalidParameter(format!(
            "slowness must be positive and steps_per_sample >= 1 (got {slowness}, {steps_per_sample})"
        )));
    }
    let m = x2_loop.intervals();
    let mut om_max = 0.0f64;
    for j in 0..=m {
        let t = elliptic_triple(x2_loop.point(j), j)?;
        om_max = om_max.max(t.discriminant().sqrt());
    }
    let sub = steps_per_sample.max((om_max * x2_loop.step() * slowness / MAX_ANGLE_STEP).ceil() as usize);
    let ds = x2_loop.step() / sub as f64;
    let h = ds * slowness;

    let (mut q, mut p) = initial;
    let start = elliptic_triple(x2_loop.point(0), 0)?;
    let (j0, phi0) = action_angle(start, q, p);
    let mut traj = ClassicalTrajectory {
        times: vec![0.0],
        q: vec![q],
        p: vec![p],
        action: vec![j0],
        angle: vec![phi0],
        dynamical_angle: 0.0,
        slowness,
    };
    let mut phi = phi0;
    let mut raw_prev = phi0;
    let mut t_start = start;
    let mut x = [0.0; 3];
    let rhs = |t: GhoTriple, q: f64, p: f64| (t.y * q + t.z * p, -t.x * q - t.y * p);

    for j in 0..m {
        let s0 = x2_loop.time(j);
        for i in 0..sub {
            x2_loop.eval_into(s0 + (i as f64 + 0.5) * ds, &mut x);
            let t_mid = elliptic_triple(&x, j)?;
            let t_end = if i + 1 == sub {
                GhoTriple::from_slice(x2_loop.point(j + 1))
            } else {
                x2_loop.eval_into(s0 + (i + 1) as f64 * ds, &mut x);
                elliptic_triple(&x, j)?
            };
            let (a1, b1) = rhs(t_start, q, p);
            let (a2, b2) = rhs(t_mid, q + 0.5 * h * a1, p + 0.5 * h * b1);
            let (a3, b3) = rhs(t_mid, q + 0.5 * h * a2, p + 0.5 * h * b2);
            let (a4, b4) = rhs(t_end, q + h * a3, p + h * b3);
            q += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            p += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);

            traj.dynamical_angle += 0.5 * h * (t_start.discriminant().sqrt() + t_end.discriminant().sqrt());
            let (_, raw) = action_angle(t_end, q, p);
            let mut step = raw - raw_prev;
            step -= 2.0 * PI * (step / (2.0 * PI)).round();
            phi += step;
            raw_prev = raw;
            t_start = t_end;
        }
        let (action, _) = action_angle(t_start, q, p);
        traj.times.push(x2_loop.time(j + 1) * slowness);
        traj.q.push(q);
        traj.p.push(p);
        traj.action.push(action);
        traj.angle.push(phi);
    }
    Ok(traj)
}

/// `Delta phi = phi(T) - phi(0) - int Omega dt`.
pub fn extract_hannay_angle(traj: &ClassicalTrajectory) -> f64 {
    traj.angle[traj.angle.len() - 1] - traj.angle[0] - traj.dynamical_angle
}
