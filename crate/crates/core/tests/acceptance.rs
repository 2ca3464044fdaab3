//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use holonomy::cli::{run_config, Experiment, ExperimentConfig};
use holonomy::dynamics_oracle::{extract_geometric_phase, extract_hannay_angle, propagate_classical, propagate_quantum};
use holonomy::hybrid_pipeline::{
    bo_full_quantum_phase, coupled_gho_loop, coupled_gho_one_form, elliptic_bound, full_quantum_phase,
    phases_from_one_form, standard_loop_report, standard_loop_report_on, Branch,
};
use holonomy::manifold::{periodic_trapezoid, standard_parameter_loops, subsystem_parameter_loops};
use holonomy::models::{spin_cone_loop, spin_family, CoupledGhoHybrid};
use holonomy::quantum_geometry::{
    berry_and_hannay, eigenframe_along_loop, spin_hannay_closed_form, theta_averaged_one_form, wrap_angle,
    GeometricPhase, HamiltonianFamily,
};
use holonomy::{LoopSpec, StandardLoopParams};

type Outcome = Result<String, String>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", ")
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(d: Duration, limit_s: f64, what: &str) -> Result<(), String> {
    ensure(d.as_secs_f64() < limit_s, || format!("{what} took {:.2} s (limit {limit_s} s)", d.as_secs_f64()))
}

fn e(err: holonomy::HolonomyError) -> String {
    format!("{}: {err}", err.kind())
}

fn sqrt3_2() -> f64 {
    3f64.sqrt() / 2.0
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

fn wilson(lp: &LoopSpec) -> Result<[GeometricPhase; 2], String> {
    let frame = eigenframe_along_loop(&spin_family(1.0), lp, None).map_err(e)?;
    Ok([berry_and_hannay(&frame, 0).map_err(e)?, berry_and_hannay(&frame, 1).map_err(e)?])
}

fn c1_equator() -> Outcome {
    let t0 = Instant::now();
    let lp = spin_cone_loop(PI / 2.0, 1.0, 4096, 1).map_err(e)?;
    let [lower, upper] = wilson(&lp)?;
    let elapsed = t0.elapsed();
    for g in [lower, upper] {
        ensure((g.berry.abs() - PI).abs() < 1e-6, || format!("|gamma| = {}", g.berry.abs()))?;
    }
    within(elapsed, 1.0, "equator")?;
    Ok(format!(
        "gamma = ({:.10}, {:.10}), {:.3} s",
        lower.berry,
        upper.berry,
        elapsed.as_secs_f64()
    ))
}

fn c2_cones() -> Outcome {
    let mut worst: f64 = 0.0;
    for theta in [PI / 6.0, PI / 3.0, PI / 2.0, 2.0 * PI / 3.0] {
        let lp = spin_cone_loop(theta, 1.0, 4096, 1).map_err(e)?;
        let phases = wilson(&lp)?;
        let exact = [PI * (1.0 - theta.cos()), PI * (1.0 + theta.cos())];
        for level in 0..2 {
            let closed = spin_hannay_closed_form(&lp, level + 1).map_err(e)?.value;
            let vs_wilson = wrap_angle(closed + phases[level].berry).abs();
            let vs_exact = (closed - exact[level]).abs();
            ensure(vs_wilson < 1e-6 && vs_exact < 1e-6, || {
                format!("theta {theta:.4} level {}: closed {closed}, -gamma {}, exact {}", level + 1, -phases[level].berry, exact[level])
            })?;
            worst = worst.max(vs_wilson).max(vs_exact);
        }
    }
    Ok(format!("max deviation {worst:.2e}"))
}

/// `sum_k I_k (-Im <E_k| d E_k>)` from first-order perturbation theory in the
/// gauge where component `r_k = argmax |E_k|` is real and positive. Levels
/// are ordered by ascending energy.
fn connection_oracle(h: &DMatrix<Complex64>, dh: &DMatrix<Complex64>, actions: &[f64]) -> f64 {
    let n = h.nrows();
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut total = 0.0;
    for (level, &k) in order.iter().enumerate() {
        let ek = eig.eigenvectors.column(k);
        let r = (0..n).max_by(|&a, &b| ek[a].norm().total_cmp(&ek[b].norm())).unwrap();
        let phase = ek[r].conj() / ek[r].norm();
        let ek = ek.map(|z| z * phase);
        let dh_ek = dh * &ek;
        let mut s = Complex64::new(0.0, 0.0);
        for l in (0..n).filter(|&l| l != k) {
            let el = eig.eigenvectors.column(l);
            let cl = el.dotc(&dh_ek) / (eig.eigenvalues[k] - eig.eigenvalues[l]);
            s += el[r] * cl;
        }
        total += actions[level] * s.im / ek[r].re;
    }
    total
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&a + a.adjoint()).map(|z| z * 0.5)
}

/// `-mu sigma . B` in the `(|->, |+>)` basis.
fn pauli_field(b: &[f64]) -> DMatrix<Complex64> {
    let c = Complex64::new;
    DMatrix::from_row_slice(2, 2, &[c(b[2], 0.0), c(-b[0], -b[1]), c(-b[0], b[1]), c(-b[2], 0.0)])
}

fn c3_one_form_identity() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20240229);
    let mut worst: f64 = 0.0;
    let mut draw = |rng: &mut ChaCha8Rng, n: usize, family: &HamiltonianFamily, h: &dyn Fn(&[f64]) -> DMatrix<Complex64>, dh: &dyn Fn(&[f64]) -> DMatrix<Complex64>| -> Result<(), String> {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dx: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let actions: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..2.0)).collect();
        let got = theta_averaged_one_form(family, &actions, &x, &dx).map_err(e)?;
        let expect = connection_oracle(&h(&x), &dh(&dx), &actions);
        let r = rel(got, expect);
        ensure(r < 1e-7, || format!("N={n} B={x:?}: {got} vs {expect} (rel {r:.2e})"))?;
        worst = worst.max(r);
        Ok(())
    };
    let spin = spin_family(1.0);
    for _ in 0..100 {
        draw(&mut rng, 2, &spin, &pauli_field, &pauli_field)?;
    }
    for _ in 0..20 {
        let gens: Vec<DMatrix<Complex64>> = (0..4).map(|_| random_hermitian(&mut rng, 3)).collect();
        let linear = |g: &[DMatrix<Complex64>], x: &[f64]| {
            &g[0] * Complex64::from(x[0]) + &g[1] * Complex64::from(x[1]) + &g[2] * Complex64::from(x[2])
        };
        let g = gens.clone();
        let family = HamiltonianFamily::new(3, move |x| &g[3] + linear(&g, x));
        draw(&mut rng, 3, &family, &|x| &gens[3] + linear(&gens, x), &|d| linear(&gens, d))?;
    }
    let elapsed = t0.elapsed();
    within(elapsed, 10.0, "120 draws")?;
    Ok(format!("max rel {worst:.2e}, {:.2} s", elapsed.as_secs_f64()))
}

fn c4_sign_relation() -> Outcome {
    let mut count = 0;
    let mut loops = Vec::new();
    for theta in [PI / 6.0, PI / 3.0, PI / 2.0, 2.0 * PI / 3.0] {
        loops.push(spin_cone_loop(theta, 1.0, 1024, 1).map_err(e)?);
    }
    loops.push(spin_cone_loop(PI / 3.0, 1.5, 1024, 3).map_err(e)?);
    loops.push(
        LoopSpec::from_fn(
            |t| {
                let w = 2.0 * PI * t;
                vec![0.4 + w.cos(), 0.8 * (2.0 * w).sin(), 0.3 + 0.5 * w.sin()]
            },
            1.0,
            1024,
            1,
        )
        .map_err(e)?,
    );
    for lp in &loops {
        for g in wilson(lp)? {
            ensure(g.hannay.to_bits() == (-g.berry).to_bits(), || format!("{} vs {}", g.hannay, g.berry))?;
            count += 1;
        }
    }
    Ok(format!("{count} pairs bit-exact"))
}

fn gamma_00_closed(eps: f64) -> f64 {
    let s = (1.0 - eps * eps).sqrt();
    (1.0 - s) * 2.0 * PI / (4.0 * s)
}

fn c5_uncoupled_gho() -> Outcome {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for eps in [0.1, 0.5, sqrt3_2()] {
        let p = params(eps, (1, 1), 0.0);
        let m = CoupledGhoHybrid::new(p, 4096).map_err(e)?;
        let ph = phases_from_one_form(&coupled_gho_one_form(&m).map_err(e)?, &coupled_gho_loop(&m).map_err(e)?).map_err(e)?;
        let report = standard_loop_report(&p, 4096).map_err(e)?;
        let closed = gamma_00_closed(eps);
        for (what, v) in [("one-form", ph.gamma[0].value), ("report", report.gamma[&0])] {
            let r = rel(v, closed);
            ensure(r < 1e-9, || format!("eps {eps} {what}: {v} vs {closed}"))?;
            worst = worst.max(r);
        }
    }
    let at = standard_loop_report(&params(sqrt3_2(), (1, 1), 0.0), 4096).map_err(e)?.gamma[&0];
    ensure(rel(at, PI / 2.0) < 1e-9, || format!("gamma_00(sqrt3/2) = {at}"))?;
    let elapsed = t0.elapsed();
    within(elapsed, 1.0, "uncoupled")?;
    Ok(format!("max rel {worst:.2e}, gamma_00 = {at:.12}, {:.3} s", elapsed.as_secs_f64()))
}

fn c6_correspondence() -> Outcome {
    let mut worst: f64 = 0.0;
    for eps in [0.5, sqrt3_2()] {
        for ratio in [(1, 1), (2, 1), (3, 2)] {
            let mut p = params(eps, ratio, 0.0);
            p.n_level = 2;
            let r = standard_loop_report_on(&p, 4096, Branch::Common).map_err(e)?;
            let w = p.omega1() / p.omega2();
            for n in 0..=2u32 {
                let expect = -(n as f64 + 0.5) * w * r.delta_phi_0_part;
                let dev = rel(r.gamma[&n], expect);
                ensure(dev < 1e-9, || format!("eps {eps} {ratio:?} n {n}: {} vs {expect}", r.gamma[&n]))?;
                worst = worst.max(dev);
            }
        }
    }
    Ok(format!("max rel {worst:.2e}"))
}

fn c7_coupling_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for ratio in [(1, 1), (2, 1), (1, 2)] {
        let base = params(sqrt3_2(), ratio, 0.0);
        let (_, k_max) = elliptic_bound(&base);
        for i in 1..=50 {
            let mut p = base;
            p.k = 0.95 * k_max * i as f64 / 50.0;
            let r = standard_loop_report(&p, 4096).map_err(e)?;
            let expect = -p.j_action / p.hbar * r.delta_phi_i_part;
            let dev = rel(r.gamma_i_part, expect);
            ensure(dev < 1e-12, || format!("{ratio:?} K = {}: {} vs {expect} (rel {dev:.2e})", p.k, r.gamma_i_part))?;
            worst = worst.max(dev);
        }
    }
    Ok(format!("150 points, max rel {worst:.2e}"))
}

fn c8_weak_coupling() -> Outcome {
    let (d_max, _) = elliptic_bound(&params(sqrt3_2(), (2, 1), 0.0));
    let mut devs = Vec::new();
    for h in 0..4 {
        let d = 0.1 * d_max / 2f64.powi(h);
        let r = standard_loop_report(&params(sqrt3_2(), (2, 1), d), 4096).map_err(e)?;
        devs.push((r.gamma_i_part / r.gamma_i_approx - 1.0).abs());
    }
    ensure(devs[0] <= 0.05, || format!("deviation {:.3e} at 0.1 D_max", devs[0]))?;
    ensure(devs.windows(2).all(|w| w[1] < w[0]), || format!("not decreasing: {}", sci(&devs)))?;
    Ok(format!("|ratio - 1| = {}", sci(&devs)))
}

fn c9_elliptic_bound() -> Outcome {
    let eps = sqrt3_2();
    let base = params(eps, (1, 1), 0.0);
    let (d_max, _) = elliptic_bound(&base);
    // Bisection on the smallest margin over the sampled loop.
    let sampled_margin = |d: f64| {
        (0..4096)
            .map(|j| {
                let c = (2.0 * PI * j as f64 / 4096.0).cos();
                1.0 - eps * eps - 2.0 * d * d * (1.0 - eps * c) * (1.0 - eps * c)
            })
            .fold(f64::INFINITY, f64::min)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if sampled_margin(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ensure((d_max - 0.18947).abs() < 1e-5, || format!("D_max = {d_max}"))?;
    ensure((d_max - lo).abs() < 1e-12, || format!("D_max = {d_max}, bisection {lo}"))?;

    let below = standard_loop_report(&params(eps, (1, 1), 0.999 * d_max), 4096).map_err(e)?;
    let finite = [below.gamma_n(), below.delta_phi, below.gamma_i_approx, below.delta_phi_i_approx];
    ensure(finite.iter().all(|v| v.is_finite()), || format!("non-finite below the bound: {finite:?}"))?;
    for ratio in [(1, 1), (2, 1), (1, 2)] {
        for f in [1.0001, 1.1, 2.0] {
            let p = params(eps, ratio, f * d_max);
            let kinds = [
                standard_loop_report(&p, 1024).err().map(|x| x.kind()),
                CoupledGhoHybrid::new(p, 1024).err().map(|x| x.kind()),
            ];
            ensure(kinds.iter().all(|k| *k == Some("EllipticViolation")), || format!("{ratio:?} {f}: {kinds:?}"))?;
        }
    }
    Ok(format!("D_max = {d_max:.8}"))
}

fn c10_full_quantum() -> Outcome {
    // (a) K = 0.
    let mut p = params(0.6, (2, 1), 0.0);
    p.a1 = 3.0;
    let (l1, l2) = standard_parameter_loops(&p, 2048).map_err(e)?;
    let s = (1.0 - p.epsilon * p.epsilon).sqrt();
    let gho = |level: u32, cycles: usize| (2 * level + 1) as f64 * (1.0 - s) * 2.0 * PI * cycles as f64 / (4.0 * s);
    let mut worst_a: f64 = 0.0;
    for (m, n) in [(0, 0), (1, 0), (0, 2), (3, 1)] {
        let g = full_quantum_phase(&l1, &l2, 0.0, m, n).map_err(e)?.value;
        let expect = gho(m, p.cycles1()) + gho(n, p.cycles2());
        let dev = rel(g, expect);
        ensure(dev < 1e-10, || format!("(a) ({m},{n}): {g} vs {expect}"))?;
        worst_a = worst_a.max(dev);
    }

    // (b), (c) against the hybrid at J = (m + 1/2) hbar.
    let eps = sqrt3_2();
    let (d_max, _) = elliptic_bound(&params(eps, (2, 1), 0.0));
    let (mut worst_b, mut worst_c): (f64, f64) = (0.0, 0.0);
    for m_level in [0u32, 1, 3] {
        let mut p = params(eps, (2, 1), 0.0);
        p.a1 = 50.0;
        p.k = 0.4 * d_max * p.k_scale();
        p.hbar = 0.7;
        p.j_action = (m_level as f64 + 0.5) * p.hbar;
        p.n_level = 1;
        let hybrid = CoupledGhoHybrid::new(p, 2048).map_err(e)?;
        let ph = phases_from_one_form(&coupled_gho_one_form(&hybrid).map_err(e)?, &coupled_gho_loop(&hybrid).map_err(e)?)
            .map_err(e)?;
        let bo = bo_full_quantum_phase(&hybrid.x1_loop, &hybrid.x2_loop, p.k, m_level, 1).map_err(e)?;
        let dev_b = rel(bo.light.value, ph.gamma[1].value);
        ensure(dev_b < 1e-9, || format!("(b) m {m_level}: {} vs {}", bo.light.value, ph.gamma[1].value))?;
        let next = bo_full_quantum_phase(&hybrid.x1_loop, &hybrid.x2_loop, p.k, m_level + 1, 1).map_err(e)?;
        let dm = -(next.total() - bo.total());
        let dev_c = rel(dm, ph.delta_phi.value);
        ensure(dev_c < 1e-9, || format!("(c) m {m_level}: {dm} vs {}", ph.delta_phi.value))?;
        worst_b = worst_b.max(dev_b);
        worst_c = worst_c.max(dev_c);
    }
    Ok(format!("(a) {worst_a:.1e} (b) {worst_b:.1e} (c) {worst_c:.1e}"))
}

fn c11_quantum_oracle() -> Outcome {
    let fam = spin_family(1.0);
    let mut lines = Vec::new();
    for (name, theta) in [("equator", PI / 2.0), ("cone pi/3", PI / 3.0)] {
        let t0 = Instant::now();
        let lp = spin_cone_loop(theta, 1.0, 512, 1).map_err(e)?;
        let target = wilson(&lp)?[0].berry;
        let mut errs = Vec::new();
        for s in [1e3, 2e3, 4e3, 8e3] {
            let prop = propagate_quantum(&fam, &lp, 0, s, 32).map_err(e)?;
            let g = extract_geometric_phase(&prop, &prop.cycle_marks[0].0).map_err(e)?;
            errs.push(wrap_angle(g - target).abs());
        }
        let elapsed = t0.elapsed();
        ensure(errs[0] < 0.01, || format!("{name}: error {:.3e} at slowness 1e3", errs[0]))?;
        ensure(errs.windows(2).all(|w| w[1] < w[0]), || format!("{name}: not decreasing {}", sci(&errs)))?;
        within(elapsed, 30.0, name)?;
        lines.push(format!("{name} [{}] {:.1} s", sci(&errs), elapsed.as_secs_f64()));
    }
    Ok(lines.join("; "))
}

fn c12_classical_oracle() -> Outcome {
    let t0 = Instant::now();
    let mut lines = Vec::new();
    for eps in [0.3, sqrt3_2()] {
        let p = params(eps, (1, 1), 0.0);
        let lp = subsystem_parameter_loops(&p, 2048).map_err(e)?.1;
        let traj = propagate_classical(&lp, (1.0, 0.0), 1e3, 8).map_err(e)?;
        let got = extract_hannay_angle(&traj);
        // -oint (Y/2Z) d(Z/Omega) at constant Omega = sqrt(1 - eps^2) over one period.
        let s = (1.0 - eps * eps).sqrt();
        let expect = periodic_trapezoid(
            |t| {
                let (sn, c) = t.sin_cos();
                -eps * eps * sn * sn / (2.0 * s * (1.0 - eps * c))
            },
            2.0 * PI,
            4096,
        )
        .value;
        let dev = rel(got, expect);
        let drift = traj.max_action_drift();
        ensure(dev < 0.02, || format!("eps {eps}: {got} vs {expect}"))?;
        ensure(drift <= 5e-3, || format!("eps {eps}: action drift {drift:.3e}"))?;
        lines.push(format!("eps {eps:.3}: rel {dev:.1e} drift {drift:.1e}"));
    }
    let elapsed = t0.elapsed();
    within(elapsed, 60.0, "classical oracle")?;
    Ok(format!("{}; {:.1} s", lines.join(", "), elapsed.as_secs_f64()))
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn read(path: &Path) -> Result<Self, String> {
        let mut r = csv::Reader::from_path(path).map_err(|x| x.to_string())?;
        let header = r.headers().map_err(|x| x.to_string())?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
            .collect::<Result<_, _>>()
            .map_err(|x| x.to_string())?;
        Ok(Self { header, rows })
    }

    fn col(&self, name: &str) -> usize {
        self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("missing column {name}"))
    }

    fn num(&self, row: &[String], name: &str) -> f64 {
        row[self.col(name)].parse().unwrap_or(f64::NAN)
    }

    fn by_ratio(&self) -> Vec<(String, Vec<&Vec<String>>)> {
        let c = self.col("ratio");
        let mut out: Vec<(String, Vec<&Vec<String>>)> = Vec::new();
        for row in &self.rows {
            match out.iter_mut().find(|(r, _)| *r == row[c]) {
                Some((_, rows)) => rows.push(row),
                None => out.push((row[c].clone(), vec![row])),
            }
        }
        out
    }
}

fn run_into(experiment: Experiment, dir: &Path) -> Result<PathBuf, String> {
    let mut cfg = ExperimentConfig::new(experiment);
    cfg.output.directory = dir.to_path_buf();
    let out = run_config(&cfg, true).map_err(|x| x.record())?;
    ensure(out.failures() == 0, || format!("{} failed rows", out.failures()))?;
    Ok(dir.join(format!("{}.csv", experiment.name())))
}

fn c13_figures() -> Outcome {
    let t0 = Instant::now();
    let tmp = tempfile::tempdir().map_err(|x| x.to_string())?;
    let fig1 = Csv::read(&run_into(Experiment::Fig1, tmp.path())?)?;
    let fig2 = Csv::read(&run_into(Experiment::Fig2, tmp.path())?)?;
    let elapsed = t0.elapsed();

    let mut smallest: f64 = 0.0;
    for (ratio, rows) in fig1.by_ratio() {
        let coupled: Vec<_> = rows.iter().filter(|r| fig1.num(r, "k") > 0.0).collect();
        ensure(coupled.len() >= 2, || format!("fig1 {ratio}: too few coupled rows"))?;
        let gamma_00 = fig1.num(coupled[0], "gamma_00");
        let dev = |r: &Vec<String>| (fig1.num(r, "gamma_0") - gamma_00).abs() / gamma_00;
        let devs: Vec<f64> = coupled.iter().map(|r| dev(r)).collect();
        ensure(devs.windows(2).all(|w| w[0] < w[1]), || format!("fig1 {ratio}: gamma_0 - gamma_00 not shrinking as K -> 0"))?;
        ensure(devs[0] < 1e-6, || format!("fig1 {ratio}: gamma_0 at smallest K off by {:.2e}", devs[0]))?;
        for r in rows.iter().filter(|r| fig1.num(r, "k") == 0.0) {
            let (g0, g00) = (fig1.num(r, "gamma_0"), fig1.num(r, "gamma_00"));
            ensure(rel(g0, g00) < 1e-9, || format!("fig1 {ratio}: K = 0 row {g0} vs {g00}"))?;
        }
        smallest = smallest.max(devs[0]);
        let gi: Vec<f64> = coupled.iter().map(|r| fig1.num(r, "gamma_i")).collect();
        ensure(gi.windows(2).all(|w| w[1] > w[0]), || format!("fig1 {ratio}: gamma_I not strictly increasing"))?;
        let last = fig1.num(coupled[coupled.len() - 1], "gamma_0");
        ensure(last > 10.0 * gamma_00, || format!("fig1 {ratio}: gamma_0 = {last} at 0.95 K_max"))?;
    }
    let mut max_ratio: f64 = 0.0;
    for (ratio, rows) in fig2.by_ratio() {
        for r in rows.iter().filter(|r| fig2.num(r, "k") > 0.0) {
            let (di, d0) = (fig2.num(r, "delta_phi_i"), fig2.num(r, "delta_phi_0"));
            ensure(di < 0.0, || format!("fig2 {ratio}: delta_phi_I = {di}"))?;
            max_ratio = max_ratio.max((di / d0).abs());
        }
    }
    ensure(max_ratio < 1e-2, || format!("fig2: |dphi_I / dphi_0| reaches {max_ratio:.3e}"))?;
    within(elapsed, 120.0, "figure sweeps")?;
    Ok(format!(
        "gamma_0/gamma_00 - 1 at smallest K {smallest:.1e}, max |dphi_I/dphi_0| {max_ratio:.2e}, {:.2} s",
        elapsed.as_secs_f64()
    ))
}

fn c14_determinism() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|x| x.to_string())?
        .filter_map(|d| d.ok().map(|d| d.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    ensure(!paths.is_empty(), || "no configs found".into())?;
    let tmp = tempfile::tempdir().map_err(|x| x.to_string())?;
    for path in &paths {
        let mut csvs = Vec::new();
        for run in 0..2 {
            let mut cfg = ExperimentConfig::from_path(path).map_err(|x| x.record())?;
            cfg.output.directory = tmp.path().join(format!("{run}"));
            run_config(&cfg, true).map_err(|x| x.record())?;
            let csv_path = cfg.output.directory.join(format!("{}.csv", cfg.experiment.name()));
            csvs.push(std::fs::read(csv_path).map_err(|x| x.to_string())?);
        }
        ensure(csvs[0] == csvs[1], || format!("{} differs between runs", path.display()))?;
    }
    Ok(format!("{} configs bit-identical", paths.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 14] = [
        ("spin solid angle", c1_equator),
        ("closed form vs Wilson loop", c2_cones),
        ("one-form identity", c3_one_form_identity),
        ("sign relation", c4_sign_relation),
        ("uncoupled GHO", c5_uncoupled_gho),
        ("uncoupled correspondence", c6_correspondence),
        ("coupling identity", c7_coupling_identity),
        ("weak-coupling approximations", c8_weak_coupling),
        ("elliptic bound", c9_elliptic_bound),
        ("full-quantum consistency", c10_full_quantum),
        ("quantum dynamics oracle", c11_quantum_oracle),
        ("classical dynamics oracle", c12_classical_oracle),
        ("figure reproduction", c13_figures),
        ("determinism", c14_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
