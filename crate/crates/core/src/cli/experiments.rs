use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics_oracle::{extract_geometric_phase, extract_hannay_angle, propagate_classical, propagate_quantum};
use crate::error::{HolonomyError, Result};
use crate::hybrid_pipeline::{
    bo_full_quantum_phase, coupled_gho_loop, Branch, coupled_gho_one_form, elliptic_bound, full_quantum_phase,
    phases_from_one_form, spin_oscillator_one_form, standard_loop_report,
};
use crate::manifold::{standard_parameter_loops, subsystem_parameter_loops, LoopSpec, StandardLoopParams};
use crate::models::{spin_cone_loop, spin_family, CoupledGhoHybrid, SpinOscillatorHybrid};
use crate::quantum_geometry::{berry_and_hannay, eigenframe_along_loop, spin_hannay_closed_form, wrap_angle};

use super::config::{Experiment, ExperimentConfig};
use super::output::{Cell, Series, Table};

fn branch_label(p: &StandardLoopParams) -> Cell {
    let b = if p.k == 0.0 { Branch::Subsystem } else { Branch::Common };
    Cell::Text(b.as_str().into())
}

fn ratio_label(p: &StandardLoopParams) -> Cell {
    Cell::Text(format!("{}/{}", p.ratio.0, p.ratio.1))
}

pub fn header(e: Experiment) -> Vec<&'static str> {
    match e {
        Experiment::SpinBerry => vec![
            "theta",
            "b",
            "cycles",
            "gamma_1",
            "gamma_2",
            "hannay_1_closed",
            "hannay_2_closed",
            "hannay_1_exact",
            "hannay_2_exact",
            "regauge_residual",
            "min_gap",
            "error",
        ],
        Experiment::GhoUncoupled => vec![
            "epsilon",
            "ratio",
            "n",
            "gamma_n0_closed",
            "gamma_n0_one_form",
            "delta_phi_0",
            "correspondence_residual",
            "quadrature_error",
            "error",
        ],
        Experiment::HybridSpinOsc => vec![
            "lambda",
            "j_action",
            "epsilon",
            "gamma_plus",
            "gamma_minus",
            "delta_phi",
            "quadrature_error",
            "error",
        ],
        Experiment::HybridGho => vec![
            "ratio",
            "branch",
            "epsilon",
            "j_action",
            "k",
            "d",
            "n",
            "gamma_n",
            "gamma_0",
            "gamma_i",
            "delta_phi",
            "delta_phi_0",
            "delta_phi_i",
            "gamma_i_approx",
            "delta_phi_i_approx",
            "elliptic_margin",
            "quadrature_error",
            "error",
        ],
        Experiment::FullQuantum => vec![
            "epsilon",
            "k",
            "d",
            "light",
            "heavy",
            "gamma_full",
            "gamma_bo",
            "bo_light_part",
            "bo_heavy_part",
            "quadrature_error",
            "error",
        ],
        Experiment::OracleQuantum => vec![
            "slowness",
            "theta",
            "gamma_numeric",
            "gamma_wilson",
            "abs_error",
            "norm_drift",
            "fidelity",
            "error",
        ],
        Experiment::OracleClassical => vec![
            "slowness",
            "epsilon",
            "delta_phi_numeric",
            "delta_phi_quadrature",
            "abs_error",
            "action_drift",
            "error",
        ],
        Experiment::Fig1 => vec![
            "ratio",
            "branch",
            "k",
            "d",
            "gamma_0",
            "gamma_00",
            "gamma_i",
            "gamma_i_approx",
            "elliptic_margin",
            "quadrature_error",
            "error",
        ],
        Experiment::Fig2 => vec![
            "ratio",
            "branch",
            "k",
            "d",
            "delta_phi_i",
            "delta_phi_i_approx",
            "delta_phi_0",
            "elliptic_margin",
            "quadrature_error",
            "error",
        ],
    }
}

/// Identifying columns kept on rows whose evaluation failed.
fn keys(c: &ExperimentConfig) -> Vec<Cell> {
    let p = &c.standard;
    match c.experiment {
        Experiment::SpinBerry => vec![c.spin.theta.into(), c.spin.b.into(), Cell::Int(c.spin.cycles as i64)],
        Experiment::GhoUncoupled => vec![p.epsilon.into(), ratio_label(p), Cell::Int(p.n_level as i64)],
        Experiment::HybridSpinOsc => vec![c.spin_osc.lambda.into(), c.spin_osc.j_action.into(), c.spin_osc.epsilon.into()],
        Experiment::HybridGho => vec![
            ratio_label(p),
            branch_label(p),
            p.epsilon.into(),
            p.j_action.into(),
            p.k.into(),
            p.d_coupling().into(),
            Cell::Int(p.n_level as i64),
        ],
        Experiment::FullQuantum => vec![
            p.epsilon.into(),
            p.k.into(),
            p.d_coupling().into(),
            Cell::Int(c.full_quantum.light as i64),
            Cell::Int(c.full_quantum.heavy as i64),
        ],
        Experiment::OracleQuantum => vec![c.numerics.slowness.into(), c.spin.theta.into()],
        Experiment::OracleClassical => vec![c.numerics.slowness.into(), p.epsilon.into()],
        Experiment::Fig1 | Experiment::Fig2 => vec![ratio_label(p), branch_label(p), p.k.into(), p.d_coupling().into()],
    }
}

fn evaluate(idx: usize, c: &ExperimentConfig) -> Result<Vec<Cell>> {
    let n = c.numerics.n_samples;
    let p = &c.standard;
    match c.experiment {
        Experiment::SpinBerry => {
            let s = &c.spin;
            let lp = spin_cone_loop(s.theta, s.b, n, s.cycles)?;
            let frame = eigenframe_along_loop(&spin_family(s.mu), &lp, None)?;
            let g1 = berry_and_hannay(&frame, 0)?.berry;
            let g2 = berry_and_hannay(&frame, 1)?.berry;
            let mut rng = ChaCha8Rng::seed_from_u64(c.seed.wrapping_add(idx as u64));
            let regauged = frame.regauged(|_, _| rng.random_range(-PI..PI));
            let r1 = berry_and_hannay(&regauged, 0)?.berry;
            let r2 = berry_and_hannay(&regauged, 1)?.berry;
            let residual = wrap_angle(r1 - g1).abs() + wrap_angle(r2 - g2).abs();
            let cyc = s.cycles as f64;
            let cos = s.theta.cos();
            Ok(vec![
                g1.into(),
                g2.into(),
                spin_hannay_closed_form(&lp, 1)?.value.into(),
                spin_hannay_closed_form(&lp, 2)?.value.into(),
                (cyc * PI * (1.0 - cos)).into(),
                (cyc * PI * (1.0 + cos)).into(),
                residual.into(),
                frame.min_gap().into(),
            ])
        }
        Experiment::GhoUncoupled => {
            let mut q = *p;
            q.k = 0.0;
            let m = CoupledGhoHybrid::new(q, n)?;
            let ph = phases_from_one_form(&coupled_gho_one_form(&m)?, &coupled_gho_loop(&m)?)?;
            let level = q.n_level as usize;
            let g = ph.gamma[level].value;
            let closed = crate::hybrid_pipeline::uncoupled_gho_phase(q.n_level, q.epsilon, q.cycles1());
            let dphi = ph.delta_phi.value;
            let corr = (g + (level as f64 + 0.5) * q.omega1() / q.omega2() * dphi).abs() / g.abs();
            Ok(vec![
                closed.into(),
                g.into(),
                dphi.into(),
                corr.into(),
                (ph.gamma[level].error_estimate + ph.delta_phi.error_estimate).into(),
            ])
        }
        Experiment::HybridSpinOsc => {
            let s = &c.spin_osc;
            let m = spin_osc_model(s.mu, s.lambda, s.b, (s.i_plus, s.i_minus, s.j_action), (s.a, s.mu_osc, s.epsilon), n)?;
            let ph = phases_from_one_form(&spin_oscillator_one_form(&m)?, &m.combined_loop()?)?;
            let err = ph.gamma[0].error_estimate + ph.gamma[1].error_estimate + ph.delta_phi.error_estimate;
            Ok(vec![
                ph.gamma[0].value.into(),
                ph.gamma[1].value.into(),
                ph.delta_phi.value.into(),
                err.into(),
            ])
        }
        Experiment::HybridGho => {
            let r = standard_loop_report(p, n)?;
            Ok(vec![
                r.gamma_n().into(),
                r.gamma_0_part.into(),
                r.gamma_i_part.into(),
                r.delta_phi.into(),
                r.delta_phi_0_part.into(),
                r.delta_phi_i_part.into(),
                r.gamma_i_approx.into(),
                r.delta_phi_i_approx.into(),
                r.elliptic_margin.into(),
                r.quadrature_error.into(),
            ])
        }
        Experiment::FullQuantum => {
            let (l1, l2) = standard_parameter_loops(p, n)?;
            let fq = &c.full_quantum;
            let full = full_quantum_phase(&l1, &l2, p.k, fq.light, fq.heavy)?;
            let bo = bo_full_quantum_phase(&l1, &l2, p.k, fq.heavy, fq.light)?;
            Ok(vec![
                full.value.into(),
                bo.total().into(),
                bo.light.value.into(),
                bo.heavy.value.into(),
                (full.error_estimate + bo.light.error_estimate + bo.heavy.error_estimate).into(),
            ])
        }
        Experiment::OracleQuantum => {
            let s = &c.spin;
            let lp = spin_cone_loop(s.theta, s.b, n, s.cycles)?;
            let fam = spin_family(s.mu);
            let wilson = berry_and_hannay(&eigenframe_along_loop(&fam, &lp, None)?, 0)?.berry;
            let prop = propagate_quantum(&fam, &lp, 0, c.numerics.slowness, c.numerics.steps_per_sample)?;
            let gamma = extract_geometric_phase(&prop, &prop.cycle_marks[0].0)?;
            Ok(vec![
                gamma.into(),
                wilson.into(),
                wrap_angle(gamma - wilson).abs().into(),
                prop.norm_drift.into(),
                prop.fidelity.into(),
            ])
        }
        Experiment::OracleClassical => {
            let mut q = *p;
            q.k = 0.0;
            let lp = subsystem_parameter_loops(&q, n)?.1;
            let traj = propagate_classical(&lp, c.initial, c.numerics.slowness, c.numerics.steps_per_sample)?;
            let numeric = extract_hannay_angle(&traj);
            let quad = standard_loop_report(&q, n)?.delta_phi_0_part;
            Ok(vec![
                numeric.into(),
                quad.into(),
                (numeric - quad).abs().into(),
                traj.max_action_drift().into(),
            ])
        }
        Experiment::Fig1 => {
            let r = standard_loop_report(p, n)?;
            Ok(vec![
                r.gamma_n().into(),
                r.gamma_0_part.into(),
                r.gamma_i_part.into(),
                r.gamma_i_approx.into(),
                r.elliptic_margin.into(),
                r.quadrature_error.into(),
            ])
        }
        Experiment::Fig2 => {
            let r = standard_loop_report(p, n)?;
            Ok(vec![
                r.delta_phi_i_part.into(),
                r.delta_phi_i_approx.into(),
                r.delta_phi_0_part.into(),
                r.elliptic_margin.into(),
                r.quadrature_error.into(),
            ])
        }
    }
}

/// Number of leading key columns that [`evaluate`] does not repeat.
fn evaluated_offset(e: Experiment) -> usize {
    match e {
        Experiment::SpinBerry | Experiment::GhoUncoupled | Experiment::HybridSpinOsc => 3,
        Experiment::HybridGho => 7,
        Experiment::FullQuantum => 5,
        Experiment::OracleQuantum | Experiment::OracleClassical => 2,
        Experiment::Fig1 | Experiment::Fig2 => 4,
    }
}

/// Spin-oscillator hybrid with the azimuth `2 pi t` and a standard-form triple on a unit period.
pub fn spin_osc_model(
    mu: f64,
    lambda: f64,
    b: f64,
    (i_plus, i_minus, j_action): (f64, f64, f64),
    (a, mu_osc, eps): (f64, f64, f64),
    n: usize,
) -> Result<SpinOscillatorHybrid> {
    let phi_loop = SpinOscillatorHybrid::azimuth_loop(|t| 2.0 * PI * t, b, 1.0, n, 1)?;
    let x_loop = LoopSpec::from_fn(
        |t| {
            let (s, c) = (2.0 * PI * t).sin_cos();
            vec![a * mu_osc * (1.0 + eps * c), -a * eps * s, a / mu_osc * (1.0 - eps * c)]
        },
        1.0,
        n,
        1,
    )?;
    Ok(SpinOscillatorHybrid {
        mu,
        lambda,
        b_magnitude: b,
        phi_loop,
        x_loop,
        i_plus,
        i_minus,
        j_action,
    })
}

/// Configurations of every sweep point, in output order.
pub fn points(c: &ExperimentConfig) -> Vec<ExperimentConfig> {
    match c.experiment {
        Experiment::Fig1 | Experiment::Fig2 => {
            let mut out = Vec::new();
            for &(n1, n2) in &c.ratios {
                let mut base = c.clone();
                base.standard = c.standard.with_ratio(n1, n2);
                base.standard.n_level = 0;
                let (_, k_max) = elliptic_bound(&base.standard);
                let mut zero = base.clone();
                zero.standard.k = 0.0;
                out.push(zero);
                let count = c.numerics.fig_points;
                let (lo, hi) = ((1e-6 * k_max).ln(), (0.95 * k_max).ln());
                for i in 0..count {
                    let mut pt = base.clone();
                    pt.standard.k = (lo + (hi - lo) * i as f64 / (count - 1) as f64).exp();
                    out.push(pt);
                }
            }
            out
        }
        _ => match &c.sweep {
            Some(s) => s.values().into_iter().map(|v| c.with_value(&s.parameter, v)).collect(),
            None => vec![c.clone()],
        },
    }
}

/// Evaluates every point in parallel; rows come back in grid order.
pub fn run_table(c: &ExperimentConfig) -> Table {
    let mut table = Table::new(header(c.experiment));
    let pts = points(c);
    let rows: Vec<Vec<Cell>> = pts
        .par_iter()
        .enumerate()
        .map(|(i, pt)| {
            let lead = keys(pt);
            match evaluate(i, pt) {
                Ok(vals) => {
                    let mut row = lead;
                    row.truncate(evaluated_offset(c.experiment));
                    row.extend(vals);
                    row.push(Cell::Empty);
                    row
                }
                Err(e) => table.error_row(lead, error_text(&e)),
            }
        })
        .collect();
    table.rows = rows;
    table
}

fn error_text(e: &HolonomyError) -> String {
    format!("{}: {}", e.kind(), e)
}

/// Chart of the main quantity against the swept parameter.
pub fn chart(c: &ExperimentConfig, t: &Table) -> String {
    let col = |name: &str| t.column(name).expect("known column");
    let values = |i: usize, row: &[Cell]| row[i].as_f64();
    match c.experiment {
        Experiment::Fig1 | Experiment::Fig2 => {
            let (y_name, label) = if c.experiment == Experiment::Fig1 {
                ("gamma_0", "log10 gamma_0")
            } else {
                ("delta_phi_i", "log10 |delta_phi_I|")
            };
            let (ik, iy, ir) = (col("k"), col(y_name), col("ratio"));
            let series: Vec<Series> = c
                .ratios
                .iter()
                .map(|&(a, b)| {
                    let r = c.standard.with_ratio(a, b).ratio;
                    let label_r = format!("{}/{}", r.0, r.1);
                    let points = t
                        .rows
                        .iter()
                        .filter(|row| matches!(&row[ir], Cell::Text(s) if *s == label_r))
                        .filter_map(|row| Some((values(ik, row)?, values(iy, row)?)))
                        .filter(|(k, _)| *k > 0.0)
                        .map(|(k, y)| (k.log10(), y.abs().log10()))
                        .collect();
                    Series {
                        label: format!("w1/w2 = {label_r}"),
                        points,
                    }
                })
                .collect();
            super::output::line_chart(c.experiment.name(), "log10 K", label, &series)
        }
        e => {
            let x_name = c.sweep.as_ref().map(|s| s.parameter.as_str()).unwrap_or(t.header[0]);
            let y_name = match e {
                Experiment::SpinBerry => "gamma_1",
                Experiment::GhoUncoupled => "gamma_n0_one_form",
                Experiment::HybridSpinOsc => "gamma_plus",
                Experiment::HybridGho => "gamma_n",
                Experiment::FullQuantum => "gamma_full",
                Experiment::OracleQuantum => "abs_error",
                _ => "delta_phi_numeric",
            };
            let (ix, iy) = (col(x_name), col(y_name));
            let points = t.rows.iter().filter_map(|row| Some((values(ix, row)?, values(iy, row)?))).collect();
            super::output::line_chart(
                e.name(),
                x_name,
                y_name,
                &[Series {
                    label: y_name.to_string(),
                    points,
                }],
            )
        }
    }
}
