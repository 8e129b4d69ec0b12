//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use perdec_core::certificate::{
    run_problem, verify_certificate, zero_component, CertifiedOutput, MeanChoice, RunOptions,
};
use perdec_core::decomp::{decompose_oracle, decompose_vector, OperatorFamily};
use perdec_core::ergodic::{
    cesaro_average, jdlg_split, kernel_power_collapse, mean_ergodic_projection, power_bounded_verdict, MeanMethod,
};
use perdec_core::grid::{continuity_defect, decompose_grid_function, grid_difference_defect, GridMean};
use perdec_core::io::{
    parse_problem, FamilyPayload, GridFunctionJson, Payload, ProblemFile, SemigroupPayload, ToleranceOverrides,
};
use perdec_core::linalg::{c, matrix_exp, op_norm, spectrum, CVector, Matrix};
use perdec_core::onepar::{
    growth_bound, periodic_spectrum_check, peripheral_smt_check, semigroup_decompose, SemigroupSpec,
};
use perdec_core::periods::{reduce_periods, PeriodSpec, UnitTable};
use perdec_core::samples;
use perdec_core::Error;
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn vec_of(values: &[f64]) -> CVector {
    CVector::from_iterator(values.len(), values.iter().map(|&v| c(v, 0.0)))
}

fn kernel_equality() -> Outcome {
    let mut rng = samples::rng(0x0001);
    let (mut worst_sum, mut worst_inv, mut worst_gap) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..1000 {
        let n_ops = rng.random_range(1..=4);
        let dim = rng.random_range(2..=16);
        let sample = samples::random_commuting_family(&mut rng, n_ops, dim, 0.05, i % 2 == 1);
        let family = OperatorFamily::new(sample.ops).map_err(|e| format!("family {i}: {e}"))?;
        let x = &sample.x;
        let scale = x.norm();
        let r = decompose_vector(&family, x, 1e-10, MeanMethod::Algebraic).map_err(|e| format!("family {i}: {e}"))?;
        check(r.accepted, || format!("family {i} rejected"))?;
        let inv = r.invariance_defects.iter().cloned().fold(0.0, f64::max);
        check(r.sum_residual <= 1e-10 * scale && inv <= 1e-10 * scale, || {
            format!("family {i}: sum {:e}, invariance {inv:e}", r.sum_residual)
        })?;
        let oracle = decompose_oracle(&family, x, 1e-8).map_err(|e| format!("family {i} oracle: {e}"))?;
        let gap = (oracle.sum_residual - r.sum_residual).abs();
        check(oracle.sum_residual <= 1e-8 * scale && gap <= 1e-8 * scale, || {
            format!("family {i}: oracle residual {:e}", oracle.sum_residual)
        })?;
        worst_sum = worst_sum.max(r.sum_residual / scale);
        worst_inv = worst_inv.max(inv / scale);
        worst_gap = worst_gap.max(gap / scale);
    }
    Ok(format!(
        "1000 families; max sum residual {worst_sum:.1e}·‖x‖, invariance {worst_inv:.1e}·‖x‖, oracle gap {worst_gap:.1e}·‖x‖"
    ))
}

fn kernel_powers() -> Outcome {
    let mut rng = samples::rng(0x0002);
    let mut worst = 0.0f64;
    for i in 0..500 {
        let dim = rng.random_range(2..=16);
        let t = samples::random_power_bounded(&mut rng, dim, 0.05);
        for n in 2..=4 {
            let k = kernel_power_collapse(&t, n, 1e-6).map_err(|e| format!("operator {i}: {e}"))?;
            check(k.collapsed, || {
                format!(
                    "operator {i}, n = {n}: dims ({}, {}), distance {:e}",
                    k.dim_ker_pow, k.dim_ker, k.distance
                )
            })?;
            worst = worst.max(k.distance);
        }
    }
    let jordan = Matrix::from_real_rows(2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
    let k = kernel_power_collapse(&jordan, 2, 1e-6).map_err(|e| e.to_string())?;
    check((k.dim_ker_pow, k.dim_ker, k.collapsed) == (2, 1, false), || {
        format!(
            "Jordan block: dims ({}, {}), collapsed {}",
            k.dim_ker_pow, k.dim_ker, k.collapsed
        )
    })?;
    let v = power_bounded_verdict(&jordan).map_err(|e| e.to_string())?;
    check(!v.bounded, || "Jordan block judged power-bounded".into())?;
    for &(n, norm) in &v.samples {
        check(norm >= n as f64 / 2.0, || format!("‖T^{n}‖ = {norm} < {n}/2"))?;
    }
    let (n_max, norm_max) = *v.samples.last().unwrap();
    Ok(format!(
        "500 operators collapse for n = 2, 3, 4 (max distance {worst:.1e}); Jordan block dims (2, 1), ‖T^{n_max}‖ = {norm_max:.0}"
    ))
}

fn grid_suite() -> Outcome {
    let mut rng = samples::rng(0x0003);
    let shifts = [4i64, 6, 10];
    let (mut worst_defect, mut worst_exact, mut worst_ratio) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..200 {
        let (f, _) = samples::random_grid_sum(&mut rng, 60, &shifts);
        let defect = grid_difference_defect(&f);
        check(defect <= 1e-12, || format!("sum {i}: difference defect {defect:e}"))?;
        let r = decompose_grid_function(&f, 1e-12, GridMean::Exact).map_err(|e| format!("sum {i}: {e}"))?;
        let inv = r.invariance_defects.iter().cloned().fold(0.0, f64::max);
        check(r.accepted && r.sum_residual <= 1e-12 && inv <= 1e-12, || {
            format!("sum {i}: sum residual {:e}, invariance {inv:e}", r.sum_residual)
        })?;
        let ratio = continuity_defect(&f, &r, 1);
        check(ratio <= 8.0, || format!("sum {i}: continuity ratio {ratio}"))?;
        worst_defect = worst_defect.max(defect);
        worst_exact = worst_exact.max(r.sum_residual.max(inv));
        worst_ratio = worst_ratio.max(ratio);
    }
    let mut min_noise = f64::INFINITY;
    for i in 0..200 {
        let f = samples::random_noise_grid(&mut rng, 60, &shifts);
        let defect = grid_difference_defect(&f);
        check(defect > 0.05, || format!("noise {i}: defect {defect}"))?;
        let rejected = matches!(
            decompose_grid_function(&f, 1e-12, GridMean::Exact),
            Err(Error::PreconditionViolation { .. })
        );
        check(rejected, || format!("noise {i} not rejected"))?;
        min_noise = min_noise.min(defect);
    }
    Ok(format!(
        "200 sums: defect ≤ {worst_defect:.1e}, exactness {worst_exact:.1e}, continuity ratio ≤ {worst_ratio:.2}; 200 noise rejected (min defect {min_noise:.2})"
    ))
}

fn cesaro_convergence() -> Outcome {
    let mut rng = samples::rng(0x0004);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let dim = rng.random_range(2..=8);
        let t = samples::random_unitary_with_gap(&mut rng, dim, 0.1);
        let alg = mean_ergodic_projection(&t, MeanMethod::Algebraic).map_err(|e| format!("unitary {i}: {e}"))?;
        for n in [100usize, 1_000, 10_000] {
            let avg = cesaro_average(&t, n).map_err(|e| e.to_string())?;
            let err = op_norm(&(avg - alg.projection.as_mat()));
            let bound = 2.0 / (n as f64 * 0.1);
            check(err <= bound, || {
                format!("unitary {i}, N = {n}: error {err:e} > {bound:e}")
            })?;
            worst = worst.max(err * n as f64 * 0.1 / 2.0);
        }
    }
    Ok(format!(
        "20 unitaries, N ∈ {{1e2, 1e3, 1e4}}; max error / bound = {worst:.3}"
    ))
}

fn brute_lcm(a: &PeriodSpec, b: &PeriodSpec) -> (i128, i128) {
    // over the common denominator L both periods are integers; the least
    // common multiple is the least integer multiple of both
    let l = a.q as i128 * b.q as i128;
    let (x, y) = (a.p as i128 * (l / a.q as i128), b.p as i128 * (l / b.q as i128));
    let mut m = x;
    while m % y != 0 {
        m += x;
    }
    let (mut num, mut den) = (m, l);
    let mut d = 2;
    while d <= den {
        while num % d == 0 && den % d == 0 {
            num /= d;
            den /= d;
        }
        d += 1;
    }
    (num, den)
}

fn one_parameter() -> Outcome {
    let a = Matrix::diag(&[c(0.0, 2.0 * PI), c(0.0, 2f64.sqrt() * PI)]).unwrap();
    let sg = SemigroupSpec::new(a, UnitTable::default()).map_err(|e| e.to_string())?;
    let times = [PeriodSpec::rational(1, 1), PeriodSpec::new(1, 1, "sqrt2")];
    let out = semigroup_decompose(&sg, &times, &vec_of(&[1.0, 1.0]), 1e-10).map_err(|e| e.to_string())?;
    let err = (&out.result.components[0] - vec_of(&[1.0, 0.0]))
        .norm()
        .max((&out.result.components[1] - vec_of(&[0.0, 1.0])).norm());
    check(out.result.accepted && err <= 1e-10, || {
        format!("incommensurable instance error {err:e}")
    })?;

    let plan = reduce_periods(&[PeriodSpec::rational(2, 3), PeriodSpec::rational(1, 2)]).map_err(|e| e.to_string())?;
    let class = &plan.classes[0];
    check(
        plan.classes.len() == 1 && class.common == PeriodSpec::rational(2, 1) && class.multipliers == [3, 4],
        || format!("(2/3, 1/2) reduced to {} with {:?}", class.common, class.multipliers),
    )?;

    let mut rng = samples::rng(0x0005);
    for i in 0..200 {
        let a = PeriodSpec::rational(rng.random_range(1..=60), rng.random_range(1..=60));
        let b = PeriodSpec::rational(rng.random_range(1..=60), rng.random_range(1..=60));
        let plan = reduce_periods(&[a.clone(), b.clone()]).map_err(|e| e.to_string())?;
        let (num, den) = brute_lcm(&a, &b);
        let k = &plan.classes[0];
        let ok = k.common.p as i128 == num
            && k.common.q as i128 == den
            && k.multipliers[0] as i128 * a.p as i128 * den == num * a.q as i128
            && k.multipliers[1] as i128 * b.p as i128 * den == num * b.q as i128;
        check(ok, || {
            format!(
                "pair {i} ({a}, {b}): got {} {:?}, oracle {num}/{den}",
                k.common, k.multipliers
            )
        })?;
    }
    Ok(format!(
        "incommensurable split error {err:.1e}; (2/3, 1/2) → 2 with (3, 4); 200 rational pairs match"
    ))
}

fn spectral_identities() -> Outcome {
    let mut rng = samples::rng(0x0006);
    let (mut worst_growth, mut worst_lattice, mut worst_smt) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..100 {
        let dim = rng.random_range(1..=8);
        let a = samples::random_generator(&mut rng, dim);
        let t: f64 = rng.random_range(0.5..3.0);
        let omega = growth_bound(&a).map_err(|e| e.to_string())?;
        let r = spectrum(&matrix_exp(&a, t).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?
            .spectral_radius();
        let gap = (omega - r.ln() / t).abs();
        check(gap <= 1e-8, || format!("generator {i}: growth identity gap {gap:e}"))?;
        worst_growth = worst_growth.max(gap);

        let smt = peripheral_smt_check(&a, t, 1e-8).map_err(|e| e.to_string())?;
        check(smt.pass, || {
            format!("generator {i}: peripheral Hausdorff distance {:e}", smt.hausdorff)
        })?;
        worst_smt = worst_smt.max(smt.hausdorff);

        let alpha: f64 = rng.random_range(0.5..3.0);
        let p = samples::random_periodic_generator(&mut rng, dim, alpha);
        let rep = periodic_spectrum_check(&p, alpha, 1e-8).map_err(|e| format!("periodic generator {i}: {e}"))?;
        check(rep.pass, || {
            format!("periodic generator {i}: off lattice {:?}", rep.off_lattice)
        })?;
        worst_lattice = worst_lattice.max(rep.max_lattice_distance);
    }
    Ok(format!(
        "100 generators: growth gap ≤ {worst_growth:.1e}, lattice distance ≤ {worst_lattice:.1e}, peripheral Hausdorff ≤ {worst_smt:.1e}"
    ))
}

fn jdlg() -> Outcome {
    let mut rng = samples::rng(0x0007);
    let mut worst_ratio = 0.0f64;
    let (mut max_kappa, mut max_floor) = (0.0f64, 0.0f64);
    for i in 0..100 {
        let dim = rng.random_range(2..=16);
        let t = samples::random_power_bounded(&mut rng, dim, 0.05);
        let s = jdlg_split(&t).map_err(|e| format!("operator {i}: {e}"))?;
        check(s.reversible.dim() + s.stable.dim() == dim, || {
            format!("operator {i}: dims {} + {} ≠ {dim}", s.reversible.dim(), s.stable.dim())
        })?;
        if s.stable.dim() > 0 {
            let y = s.stable.project(&samples::random_vector(&mut rng, dim));
            let mut z = y.clone();
            for _ in 0..256 {
                z = t.as_mat() * z;
            }
            let ratio = z.norm() / y.norm();
            let power_bound = power_bounded_verdict(&t).map_err(|e| e.to_string())?.empirical_bound;
            let floor = s.rounding_floor(256, dim, op_norm(t.as_mat()), power_bound);
            let bound = s.decay_bound(256) + floor;
            check(ratio <= bound, || {
                format!(
                    "operator {i}: ‖T²⁵⁶y‖/‖y‖ = {ratio:e} > {:e} + rounding {floor:e} (κ = {}, ‖Q‖ = {})",
                    s.decay_bound(256),
                    s.kappa,
                    s.projection_norm
                )
            })?;
            worst_ratio = worst_ratio.max(ratio / bound);
            max_kappa = max_kappa.max(s.kappa);
            max_floor = max_floor.max(floor);
        }
        let u = samples::random_unitary_with_gap(&mut rng, dim, 0.05);
        let su = jdlg_split(&u).map_err(|e| format!("unitary {i}: {e}"))?;
        check(su.stable.dim() == 0, || {
            format!("unitary {i}: stable part of dim {}", su.stable.dim())
        })?;
    }
    Ok(format!(
        "100 operators: dims add up, unitary stable parts trivial, decay/bound ≤ {worst_ratio:.1e} (max κ {max_kappa:.1e}, max rounding floor {max_floor:.1e})"
    ))
}

fn reparse(problem: &ProblemFile) -> ProblemFile {
    parse_problem(&problem.to_json()).expect("emitted problems parse")
}

fn round_trip(out: &CertifiedOutput) -> CertifiedOutput {
    serde_json::from_str(&serde_json::to_string(out).unwrap()).expect("certificates parse")
}

fn rejected(out: &CertifiedOutput, problem: &ProblemFile, x: Option<&CVector>) -> bool {
    match verify_certificate(out, problem, x) {
        Ok(v) => !v.verified,
        Err(Error::Tamper) => true,
        Err(_) => false,
    }
}

fn mutations(out: &CertifiedOutput) -> Vec<(&'static str, CertifiedOutput)> {
    let mut list = Vec::new();
    let mut m = out.clone();
    m.certificate.accepted = !m.certificate.accepted;
    list.push(("accepted flag", m));
    let mut m = out.clone();
    m.certificate.defects.difference += 1e-6 * (1.0 + m.certificate.defects.difference);
    list.push(("difference defect", m));
    let mut m = out.clone();
    m.certificate.input_digest = format!("{}0", &m.certificate.input_digest[1..]);
    list.push(("digest", m));
    if let Some(first) = out.components.first() {
        let norms: Vec<f64> = out.components.iter().map(|v| v.to_vector().unwrap().norm()).collect();
        let (largest, &size) = norms.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        if size > 0.0 {
            let mut m = out.clone();
            m.components[largest] = zero_component(first.re.len());
            list.push(("zeroed component", m));
        }
        let mut m = out.clone();
        m.certificate.defects.invariance[0] += 1e-6;
        list.push(("invariance defect", m));
        let mut m = out.clone();
        m.certificate.defects.sum_residual = m.certificate.defects.sum_residual.map(|s| s + 1e-6);
        list.push(("sum residual", m));
    }
    list
}

fn certificate_audit() -> Outcome {
    let mut rng = samples::rng(0x0008);
    let mut cases: Vec<(ProblemFile, Option<CVector>, RunOptions)> = Vec::new();
    let none = ToleranceOverrides::default();
    for i in 0..40 {
        let (n_ops, dim) = (rng.random_range(1..=3), rng.random_range(2..=8));
        let s = samples::random_commuting_family(&mut rng, n_ops, dim, 0.05, i % 2 == 0);
        let x = if i % 5 == 4 {
            // off the kernel: rejected certificate
            samples::random_vector(&mut rng, s.x.len())
        } else {
            s.x
        };
        let p = ProblemFile::new(Payload::OperatorFamily(FamilyPayload { ops: s.ops }), none.clone()).unwrap();
        let opts = RunOptions {
            oracle: i % 3 == 0,
            ..RunOptions::default()
        };
        cases.push((p, Some(x), opts));
    }
    for i in 0..20 {
        let f = if i % 2 == 0 {
            samples::random_grid_sum(&mut rng, 60, &[4, 6, 10]).0
        } else {
            samples::random_noise_grid(&mut rng, 60, &[4, 6, 10])
        };
        let p = ProblemFile::new(Payload::GridFunction(GridFunctionJson::from(&f)), none.clone()).unwrap();
        // every orbit length (15, 10, 6) divides 60, so this window is exact
        let mean = if i % 4 == 0 {
            MeanChoice::Cesaro { window: 60 }
        } else {
            MeanChoice::Exact
        };
        cases.push((
            p,
            None,
            RunOptions {
                mean,
                ..RunOptions::default()
            },
        ));
    }
    let semigroups = [
        (
            vec![0.0, 2.0],
            vec![PeriodSpec::rational(1, 1), PeriodSpec::new(1, 1, "sqrt2")],
            vec![1.0, 1.0],
        ),
        (
            vec![3.0, 4.0],
            vec![PeriodSpec::rational(2, 3), PeriodSpec::rational(1, 2)],
            vec![0.5, -2.0],
        ),
        (
            vec![2.0, 2f64.sqrt()],
            vec![PeriodSpec::rational(1, 1), PeriodSpec::new(1, 1, "sqrt2")],
            vec![1.0, 1.0],
        ),
    ];
    for (freqs, times, x) in semigroups {
        let d: Vec<_> = freqs.iter().map(|&w| c(0.0, w * PI)).collect();
        let payload = SemigroupPayload {
            generator: Matrix::diag(&d).unwrap(),
            units: Default::default(),
            times,
        };
        let p = ProblemFile::new(Payload::Semigroup(payload), none.clone()).unwrap();
        cases.push((p, Some(vec_of(&x)), RunOptions::default()));
    }

    let (mut emitted, mut accepted, mut mutants) = (0, 0, 0);
    for (i, (problem, x, opts)) in cases.iter().enumerate() {
        let out = run_problem(problem, x.as_ref(), opts).map_err(|e| format!("case {i}: {e}"))?;
        let out = round_trip(&out);
        let problem = reparse(problem);
        let v = verify_certificate(&out, &problem, x.as_ref()).map_err(|e| format!("case {i}: {e}"))?;
        check(v.verified, || format!("case {i}: {:?}", v.mismatches))?;
        emitted += 1;
        accepted += out.certificate.accepted as usize;
        for (what, m) in mutations(&out) {
            check(rejected(&m, &problem, x.as_ref()), || {
                format!("case {i}: mutated {what} accepted")
            })?;
            mutants += 1;
        }
        if let Some(x) = x {
            let mut moved = x.clone();
            moved[0] += c(1e-9, 0.0);
            check(rejected(&out, &problem, Some(&moved)), || {
                format!("case {i}: perturbed input accepted")
            })?;
            mutants += 1;
        }
    }
    Ok(format!(
        "{emitted}/{emitted} certificates re-verify ({accepted} accepted, {} rejected); {mutants}/{mutants} mutations caught",
        emitted - accepted
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("kernel equality for commuting families", kernel_equality),
        ("kernel powers collapse", kernel_powers),
        ("shift decomposition on Z_60", grid_suite),
        ("Cesaro convergence rate", cesaro_convergence),
        ("one-parameter semigroups", one_parameter),
        ("spectral identities", spectral_identities),
        ("reversible/stable split", jdlg),
        ("certificate audit", certificate_audit),
    ];
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = format!("{}", k + 1);
        if filter.as_ref().is_some_and(|f| f != &id) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {id} ({name}): {detail} [{secs:.1}s]"),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {id} ({name}): {detail} [{secs:.1}s]");
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criterion(s) failed");
        ExitCode::FAILURE
    }
}
