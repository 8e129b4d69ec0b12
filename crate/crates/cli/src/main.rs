//! `perdec`: compute and certify periodic decompositions from JSON problem files.
//!
//! Exit codes: 0 when the result is accepted, 2 when it is rejected or the
//! mathematics fails (precondition, hypothesis, verification), 1 on usage,
//! I/O or schema errors.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use perdec_core::decomp::DEFAULT_TOL;
use perdec_core::ergodic::{
    jdlg_split, kernel_power_collapse, mean_ergodic_projection, power_bounded_verdict, MeanMethod,
};
use perdec_core::grid::grid_difference_defect;
use perdec_core::io::{
    parse_json, parse_periods, parse_problem_as, parse_vector, FamilyPayload, GridFunctionJson, SemigroupPayload,
    ToleranceOverrides, VectorJson,
};
use perdec_core::onepar::{
    aap_orbit_diagnostic, default_h_grid, default_t_grid, norm_continuity_defect, periodic_spectrum_check,
    peripheral_smt_check,
};
use perdec_core::{
    difference_defect, reduce_periods, run_problem, samples, verify_certificate, CVector, CertifiedOutput, Error,
    MeanChoice, OperatorFamily, Payload, ProblemFile, ProblemKind, RunOptions, SemigroupSpec,
};

/// Fixed default so that `generate` is reproducible without flags.
const DEFAULT_SEED: u64 = 0x5EED;

#[derive(Parser)]
#[command(
    name = "perdec",
    version,
    about = "Periodic decompositions with recomputable certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose x for a commuting operator family
    Decompose(DecomposeArgs),
    /// Decompose a function on Z_N under shift actions
    GridDecompose(GridArgs),
    /// Decompose x for a one-parameter semigroup at given times
    SgDecompose(SgDecomposeArgs),
    /// Report the difference-equation defect of x
    Check(CheckArgs),
    /// Reduce periods to common periods per unit tag
    ReducePeriods(ReduceArgs),
    /// Power-boundedness, mean ergodic projections and JdLG splits of each operator
    Diagnose(DiagnoseArgs),
    /// Growth bound, spectral mapping, periodicity and orbit diagnostics of a semigroup
    SgDiagnose(SgDiagnoseArgs),
    /// Recompute a certificate from its inputs
    VerifyCertificate(VerifyArgs),
    /// Write a seeded random problem that satisfies the difference equation
    Generate(GenerateArgs),
}

#[derive(Args)]
struct Common {
    /// Acceptance tolerance (overrides the problem file)
    #[arg(long, env = "PERDEC_TOL")]
    tol: Option<f64>,
    /// Write the machine-readable result to this path
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    problem: PathBuf,
    x: PathBuf,
    /// Invariant mean: `exact` or `cesaro:N`
    #[arg(long, default_value = "exact")]
    mean: MeanChoice,
    /// Use the least-squares oracle instead of the inclusion-exclusion formula
    #[arg(long)]
    oracle: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct GridArgs {
    problem: PathBuf,
    #[arg(long, default_value = "exact")]
    mean: MeanChoice,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SgDecomposeArgs {
    problem: PathBuf,
    x: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CheckArgs {
    problem: PathBuf,
    /// Input vector (not needed for grid functions)
    x: Option<PathBuf>,
    /// Problem kind when the file holds a bare payload
    #[arg(long, value_enum, default_value = "family")]
    kind: KindArg,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ReduceArgs {
    /// JSON list of periods, inline or as a file path
    periods: String,
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    problem: PathBuf,
    /// Largest subspace distance for which ker(T-I)^n and ker(T-I) count as equal
    #[arg(long, default_value_t = 1e-6)]
    collapse_tol: f64,
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct SgDiagnoseArgs {
    problem: PathBuf,
    /// Vector for the orbit (AAP) diagnostic
    #[arg(long)]
    x: Option<PathBuf>,
    /// Candidate period for the periodic-spectrum check
    #[arg(long)]
    alpha: Option<f64>,
    /// Time for the spectral mapping check
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Step of the discrete orbit
    #[arg(long, default_value_t = 1.0)]
    t_step: f64,
    #[arg(long, default_value_t = 50.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 8)]
    resolution: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    certificate: PathBuf,
    problem: PathBuf,
    x: Option<PathBuf>,
    /// Problem kind when the file holds a bare payload
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(value_enum)]
    kind: KindArg,
    /// Directory for `problem.json` (and `x.json`)
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Dimension, or N for grid functions
    #[arg(long, default_value_t = 6)]
    dim: usize,
    /// Number of operators, shifts or times
    #[arg(long, default_value_t = 2)]
    count: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Family,
    Grid,
    Semigroup,
}

impl From<KindArg> for ProblemKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Family => ProblemKind::OperatorFamily,
            KindArg::Grid => ProblemKind::GridFunction,
            KindArg::Semigroup => ProblemKind::Semigroup,
        }
    }
}

/// Failures mapped to exit codes.
enum Failure {
    Usage(String),
    Rejected(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) => Failure::Usage(e.to_string()),
            _ => Failure::Rejected(e.to_string()),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Rejected(m) => f.write_str(m),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Option<PathBuf>, value: &T) -> Result<(), Failure> {
    if let Some(path) = path {
        let text = serde_json::to_string_pretty(value).expect("results serialize");
        fs::write(path, text + "\n").map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn load_problem(path: &Path, kind: ProblemKind) -> Result<ProblemFile, Failure> {
    parse_problem_as(&read(path)?, kind).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_vector(path: &Path) -> Result<CVector, Failure> {
    parse_vector(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Flag or `PERDEC_TOL`, then the problem file, then the default.
fn resolve_tol(flag: Option<f64>, problem: &ProblemFile) -> Result<f64, Failure> {
    let tol = flag.or(problem.tolerances.tol).unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Failure::Usage(format!(
            "tolerance must be positive and finite, got {tol}"
        )));
    }
    Ok(tol)
}

fn report_certified(out: &CertifiedOutput) {
    let c = &out.certificate;
    let d = &c.defects;
    println!("kind: {:?}", c.kind);
    println!("method: {:?}, mean: {}", c.method, c.mean);
    println!("tol: {:e}, input norm: {:e}", c.tol, c.input_norm);
    println!("difference defect: {:e}", d.difference);
    if let Some(r) = d.sum_residual {
        println!("sum residual: {r:e}");
    }
    for (j, v) in d.invariance.iter().enumerate() {
        println!("invariance defect [{j}]: {v:e}");
    }
    if let Some(v) = d.commutation {
        println!("commutation defect: {v:e}");
    }
    if let Some(v) = d.projection_product {
        println!("projection product defect: {v:e}");
    }
    println!("components: {}", out.components.len());
    println!("input digest: {}", c.input_digest);
    println!("{}", if c.accepted { "ACCEPTED" } else { "REJECTED" });
}

fn certify(problem: &ProblemFile, x: Option<&CVector>, opts: RunOptions, json_out: &Option<PathBuf>) -> Outcome {
    let out = run_problem(problem, x, &opts)?;
    report_certified(&out);
    write_json(json_out, &out)?;
    Ok(out.certificate.accepted)
}

fn decompose(a: DecomposeArgs) -> Outcome {
    let problem = load_problem(&a.problem, ProblemKind::OperatorFamily)?;
    let x = load_vector(&a.x)?;
    let opts = RunOptions {
        tol: resolve_tol(a.common.tol, &problem)?,
        mean: a.mean,
        oracle: a.oracle,
    };
    certify(&problem, Some(&x), opts, &a.common.json_out)
}

fn grid_decompose(a: GridArgs) -> Outcome {
    let problem = load_problem(&a.problem, ProblemKind::GridFunction)?;
    let opts = RunOptions {
        tol: resolve_tol(a.common.tol, &problem)?,
        mean: a.mean,
        oracle: false,
    };
    certify(&problem, None, opts, &a.common.json_out)
}

fn sg_decompose(a: SgDecomposeArgs) -> Outcome {
    let problem = load_problem(&a.problem, ProblemKind::Semigroup)?;
    let x = load_vector(&a.x)?;
    let opts = RunOptions {
        tol: resolve_tol(a.common.tol, &problem)?,
        mean: MeanChoice::Exact,
        oracle: false,
    };
    certify(&problem, Some(&x), opts, &a.common.json_out)
}

fn semigroup_family(p: &SemigroupPayload) -> Result<OperatorFamily, Failure> {
    let sg = SemigroupSpec::new(p.generator.clone(), p.unit_table()?)?;
    let ops = p.times.iter().map(|t| sg.at_period(t)).collect::<Result<Vec<_>, _>>()?;
    Ok(OperatorFamily::new(ops)?)
}

fn check(a: CheckArgs) -> Outcome {
    let problem = load_problem(&a.problem, a.kind.into())?;
    let tol = resolve_tol(a.common.tol, &problem)?;
    let x = a.x.as_deref().map(load_vector).transpose()?;
    let need_x = || {
        x.as_ref()
            .ok_or_else(|| Failure::Usage("this problem kind needs an input vector".into()))
    };
    let (defect, bound) = match &problem.payload {
        Payload::OperatorFamily(p) => {
            let x = need_x()?;
            (
                difference_defect(&OperatorFamily::new(p.ops.clone())?, x)?,
                tol * x.norm(),
            )
        }
        Payload::Semigroup(p) => {
            let x = need_x()?;
            (difference_defect(&semigroup_family(p)?, x)?, tol * x.norm())
        }
        Payload::GridFunction(g) => (grid_difference_defect(&g.to_grid()?), tol),
    };
    let pass = defect <= bound;
    println!("difference defect: {defect:e}");
    println!("bound: {bound:e}");
    println!("{}", if pass { "PASS" } else { "FAIL" });
    write_json(
        &a.common.json_out,
        &json!({"difference_defect": defect, "bound": bound, "pass": pass}),
    )?;
    Ok(pass)
}

fn reduce(a: ReduceArgs) -> Outcome {
    let text = if a.periods.trim_start().starts_with('[') {
        a.periods.clone()
    } else {
        read(Path::new(&a.periods))?
    };
    let times = parse_periods(&text)?;
    let plan = reduce_periods(&times)?;
    for k in &plan.classes {
        let members: Vec<String> = k.members.iter().map(|&i| times[i].to_string()).collect();
        let multipliers: Vec<String> = k.multipliers.iter().map(u64::to_string).collect();
        println!(
            "tag {}: s = {}, times [{}], multipliers [{}]",
            k.tag,
            k.common,
            members.join(", "),
            multipliers.join(", ")
        );
    }
    write_json(&a.json_out, &plan)?;
    Ok(true)
}

fn diagnose(a: DiagnoseArgs) -> Outcome {
    let problem = load_problem(&a.problem, ProblemKind::OperatorFamily)?;
    let Payload::OperatorFamily(p) = &problem.payload else {
        unreachable!("kind checked on load")
    };
    let mut all_bounded = true;
    let mut reports = Vec::new();
    for (j, t) in p.ops.iter().enumerate() {
        let verdict = power_bounded_verdict(t)?;
        all_bounded &= verdict.bounded;
        println!("operator {j}:");
        println!(
            "  power-bounded: {} (spectral radius {:e}, peripheral defect {}, max sampled norm {:e})",
            verdict.bounded, verdict.spectral_radius, verdict.peripheral_defect, verdict.empirical_bound
        );
        let collapse: Vec<_> = (2..=4)
            .map(|n| kernel_power_collapse(t, n, a.collapse_tol).map(|c| (n, c)))
            .collect::<Result<_, _>>()?;
        for (n, c) in &collapse {
            println!(
                "  ker(T-I)^{n}: dim {} vs ker(T-I): dim {} ({})",
                c.dim_ker_pow,
                c.dim_ker,
                if c.collapsed { "collapsed" } else { "not collapsed" }
            );
        }
        let mut entry = json!({"verdict": verdict, "kernel_powers": collapse.iter().map(|(n, c)| json!({"n": n, "report": c})).collect::<Vec<_>>()});
        if verdict.bounded {
            match mean_ergodic_projection(t, MeanMethod::Algebraic) {
                Ok(r) => {
                    println!(
                        "  mean ergodic projection: rank {}, idempotency {:e}, zero element {:e}",
                        r.range.dim(),
                        r.idempotency_defect,
                        r.zero_element_defect
                    );
                    entry["projection"] = json!({
                        "rank": r.range.dim(),
                        "idempotency_defect": r.idempotency_defect,
                        "zero_element_defect": r.zero_element_defect,
                        "kernel_distance": r.kernel_distance,
                    });
                }
                Err(e) => println!("  mean ergodic projection: {e}"),
            }
            match jdlg_split(t) {
                Ok(s) => {
                    println!(
                        "  JdLG split: reversible {}, stable {} (stable radius {:e}, kappa {:e})",
                        s.reversible.dim(),
                        s.stable.dim(),
                        s.stable_radius,
                        s.kappa
                    );
                    entry["jdlg"] = json!({
                        "reversible_dim": s.reversible.dim(),
                        "stable_dim": s.stable.dim(),
                        "stable_radius": s.stable_radius,
                        "kappa": s.kappa,
                    });
                }
                Err(e) => println!("  JdLG split: {e}"),
            }
        }
        reports.push(entry);
    }
    println!(
        "{}",
        if all_bounded {
            "ALL POWER-BOUNDED"
        } else {
            "NOT POWER-BOUNDED"
        }
    );
    write_json(
        &a.json_out,
        &json!({"operators": reports, "all_power_bounded": all_bounded}),
    )?;
    Ok(all_bounded)
}

fn sg_diagnose(a: SgDiagnoseArgs) -> Outcome {
    let problem = load_problem(&a.problem, ProblemKind::Semigroup)?;
    let Payload::Semigroup(p) = &problem.payload else {
        unreachable!("kind checked on load")
    };
    let sg = SemigroupSpec::new(p.generator.clone(), p.unit_table()?)?;
    println!("growth bound: {:e}", sg.growth_bound);
    println!("bounded: {}", sg.bounded);
    let smt = peripheral_smt_check(sg.generator(), a.t, a.tol)?;
    println!(
        "spectral mapping at t = {}: Hausdorff distance {:e} ({})",
        a.t,
        smt.hausdorff,
        pass_word(smt.pass)
    );
    let mut ok = smt.pass;
    let mut out = json!({"semigroup": sg, "smt": smt});
    if let Some(alpha) = a.alpha {
        let per = periodic_spectrum_check(sg.generator(), alpha, a.tol)?;
        println!(
            "periodic with period {alpha}: defect {:e} ({})",
            per.periodicity_defect,
            pass_word(per.pass)
        );
        ok &= per.pass;
        out["periodic"] = serde_json::to_value(&per).expect("reports serialize");
    }
    if sg.bounded {
        let cont = norm_continuity_defect(&sg, &default_t_grid(), &default_h_grid())?;
        if let Some(last) = cont.last() {
            println!("norm continuity defect at t = {}: {:e}", last.t, last.defect);
        }
        out["norm_continuity"] = serde_json::to_value(&cont).expect("reports serialize");
    }
    if let Some(path) = &a.x {
        let x = load_vector(path)?;
        let aap = aap_orbit_diagnostic(&sg, &x, a.t_step, a.horizon, a.eps, a.resolution)?;
        match (aap.discrete_net, aap.continuous_net) {
            (Some(d), Some(c)) => println!("orbit eps-net sizes: discrete {d}, continuous {c}"),
            _ => println!("orbit unbounded (max norm {:e})", aap.max_orbit_norm),
        }
        out["aap"] = serde_json::to_value(&aap).expect("reports serialize");
    }
    println!("{}", if ok { "PASS" } else { "FAIL" });
    write_json(&a.json_out, &out)?;
    Ok(ok)
}

fn pass_word(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

fn verify(a: VerifyArgs) -> Outcome {
    let cert_value = parse_json(&read(&a.certificate)?)?;
    let output: CertifiedOutput = perdec_core::io::from_value_at(&cert_value, "")?;
    let kind = a.kind.map(ProblemKind::from).unwrap_or(output.certificate.kind);
    let problem = load_problem(&a.problem, kind)?;
    let x = a.x.as_deref().map(load_vector).transpose()?;
    let v = verify_certificate(&output, &problem, x.as_ref())?;
    for m in &v.mismatches {
        println!("mismatch: {m}");
    }
    println!("{}", if v.verified { "VERIFIED" } else { "NOT VERIFIED" });
    Ok(v.verified)
}

fn generate(a: GenerateArgs) -> Outcome {
    if a.dim == 0 || a.count == 0 {
        return Err(Failure::Usage("--dim and --count must be positive".into()));
    }
    let mut rng = samples::rng(a.seed);
    let (payload, x) = match a.kind {
        KindArg::Family => {
            let s = samples::random_commuting_family(&mut rng, a.count, a.dim, 0.1, a.dim >= 3);
            (Payload::OperatorFamily(FamilyPayload { ops: s.ops }), Some(s.x))
        }
        KindArg::Grid => {
            let shifts = samples::random_shifts(&mut rng, a.dim, a.count);
            let (f, _) = samples::random_grid_sum(&mut rng, a.dim, &shifts);
            (Payload::GridFunction(GridFunctionJson::from(&f)), None)
        }
        KindArg::Semigroup => {
            let alpha = 1.0;
            let generator = samples::random_periodic_generator(&mut rng, a.dim, alpha);
            let times = (1..=a.count as i64)
                .map(|k| perdec_core::PeriodSpec::rational(k, 1))
                .collect();
            let x = samples::random_vector(&mut rng, a.dim);
            let payload = SemigroupPayload {
                generator,
                units: Default::default(),
                times,
            };
            (Payload::Semigroup(payload), Some(x))
        }
    };
    let problem = ProblemFile::new(payload, ToleranceOverrides::default())?;
    fs::create_dir_all(&a.out_dir)
        .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", a.out_dir.display())))?;
    let problem_path = a.out_dir.join("problem.json");
    fs::write(&problem_path, problem.to_json() + "\n")
        .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", problem_path.display())))?;
    println!("wrote {}", problem_path.display());
    if let Some(x) = x {
        let x_path = a.out_dir.join("x.json");
        write_json(&Some(x_path.clone()), &VectorJson::from(&x))?;
        println!("wrote {}", x_path.display());
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version go to stdout with success; everything else is a usage error
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Decompose(a) => decompose(a),
        Command::GridDecompose(a) => grid_decompose(a),
        Command::SgDecompose(a) => sg_decompose(a),
        Command::Check(a) => check(a),
        Command::ReducePeriods(a) => reduce(a),
        Command::Diagnose(a) => diagnose(a),
        Command::SgDiagnose(a) => sg_diagnose(a),
        Command::VerifyCertificate(a) => verify(a),
        Command::Generate(a) => generate(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Failure::Rejected(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
