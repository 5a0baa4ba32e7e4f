use std::fs;
use std::io::Write;
use std::path::Path;

use alphari::{
    alpha_divergence, alpha_information, alpha_integration, check_optimality, solve, support_report, sweep,
    Error, ExtReal, Integration, OptimalityReport, Problem, Regime, SweepEntry,
};

use crate::files::{labels, read_problem, read_rule, SolutionFile};
use crate::{CliError, Command, SolverArgs, THREADS_ENV};

/// Shortest round-trip rendering, switching to exponent form for very small
/// or very large magnitudes.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn ext(x: ExtReal) -> String {
    match x {
        ExtReal::Finite(v) => num(v),
        other => other.to_string(),
    }
}

/// Tolerance on the unit mass of vectors given on the command line.
const VECTOR_MASS_TOL: f64 = 1e-9;

pub(crate) fn execute(
    command: Command,
    out: &mut dyn Write,
    warnings: &mut Vec<String>,
) -> Result<i32, CliError> {
    match command {
        Command::Solve {
            problem,
            out: path,
            solver,
        } => cmd_solve(&problem, path.as_deref(), &solver, out, warnings),
        Command::Check {
            problem,
            rule,
            alpha_override,
            tol,
        } => cmd_check(&problem, &rule, alpha_override, tol, out, warnings),
        Command::Sweep {
            problem,
            alphas,
            csv,
            solver,
        } => cmd_sweep(&problem, &alphas, csv.as_deref(), &solver, out, warnings),
        Command::Divergence { p, m, alpha } => cmd_divergence(&p, &m, alpha, out),
        Command::Info {
            problem,
            rule,
            alpha_override,
        } => cmd_info(&problem, &rule, alpha_override, out, warnings),
    }
}

fn load(path: &Path, alpha_override: Option<f64>, warnings: &mut Vec<String>) -> Result<Problem, CliError> {
    let problem = read_problem(path, warnings)?;
    match alpha_override {
        Some(alpha) => Ok(problem.with_alpha(alpha)?),
        None => Ok(problem),
    }
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Input(format!("{}: cannot write file: {e}", path.display()))),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Failed(format!("cannot write output: {e}"))),
    }
}

fn cmd_solve(
    path: &Path,
    out_path: Option<&Path>,
    args: &SolverArgs,
    out: &mut dyn Write,
    warnings: &mut Vec<String>,
) -> Result<i32, CliError> {
    let problem = load(path, args.alpha_override, warnings)?;
    let config = args.config();
    config.validate()?;
    let solution = solve(&problem, &config)?;
    let support = support_report(&solution.rule, &problem);
    let file = SolutionFile::new(&problem, &solution, &support, &config);
    emit(&file.to_json(), out_path, out)?;
    if solution.converged {
        Ok(0)
    } else {
        warnings.push(format!(
            "solution is not certified: support gap {}, statewise gap {}",
            solution.certificate.support_gap, solution.certificate.statewise_gap
        ));
        Ok(2)
    }
}

fn cmd_check(
    problem_path: &Path,
    rule_path: &Path,
    alpha_override: Option<f64>,
    tol: f64,
    out: &mut dyn Write,
    warnings: &mut Vec<String>,
) -> Result<i32, CliError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CliError::Input(format!(
            "invalid tol: must be positive, got {tol}"
        )));
    }
    let problem = load(problem_path, alpha_override, warnings)?;
    let rule = read_rule(rule_path)?;
    let report = match check_optimality(&rule, &problem, tol) {
        Ok(report) => report,
        Err(Error::InfiniteInformation) => {
            let text = "result: fail\nreason: the rule has infinite information (empty common support)\n";
            emit(text, None, out)?;
            return Ok(2);
        }
        Err(e) => {
            return Err(match e {
                Error::InvalidInput { .. } => CliError::Input(format!("{}: {e}", rule_path.display())),
                other => other.into(),
            })
        }
    };
    let text = render_report(&report, &problem);
    emit(&text, None, out)?;
    Ok(if report.overall { 0 } else { 2 })
}

fn render_report(report: &OptimalityReport, problem: &Problem) -> String {
    let actions = problem.action_labels();
    let mut s = String::new();
    let verdict = if report.overall { "pass" } else { "fail" };
    s += &format!("result: {verdict}\n");
    s += &format!("alpha: {}\n", num(problem.alpha()));
    s += &format!("q: {}\n", num(problem.params().q()));
    s += &format!("regime: {}\n", regime_name(Regime::for_alpha(problem.alpha())));
    s += &format!("extremum kind: {}\n", extremum_name(report));
    s += &format!("extremum: {}\n", ext(report.extremum));
    s += "action\treference\tcondition2\n";
    for (a, label) in actions.iter().enumerate() {
        s += &format!(
            "{label}\t{}\t{}\n",
            num(report.reference[a]),
            ext(report.condition2_values[a])
        );
    }
    for (label, lambda) in problem.state_labels().iter().zip(&report.lambdas) {
        s += &format!("lambda[{label}]: {}\n", num(*lambda));
    }
    if !report.infinite_excluded.is_empty() {
        s += &format!(
            "ranked as -infinite: {}\n",
            labels(&report.infinite_excluded, actions).join(",")
        );
    }
    s += &format!("statewise gap: {}\n", num(report.statewise_gap));
    match report.worst_action {
        Some(a) => s += &format!("support gap: {} at {}\n", ext(report.support_gap), actions[a]),
        None => s += &format!("support gap: {}\n", ext(report.support_gap)),
    }
    s += &format!("tolerance: {}\n", num(report.tolerance));
    s
}

fn regime_name(regime: Regime) -> &'static str {
    match regime {
        Regime::Cutoff => "cutoff",
        Regime::FullSupport => "full-support",
        Regime::CommonSupport => "common-support",
    }
}

fn extremum_name(report: &OptimalityReport) -> &'static str {
    match report.extremum_kind {
        alphari::ExtremumKind::Max => "max",
        alphari::ExtremumKind::Min => "min",
    }
}

fn sweep_threads() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Input(format!(
                "invalid {THREADS_ENV}: expected a positive integer, got `{raw}`"
            ))),
        },
    }
}

fn cmd_sweep(
    path: &Path,
    alphas: &[f64],
    csv_path: Option<&Path>,
    args: &SolverArgs,
    out: &mut dyn Write,
    warnings: &mut Vec<String>,
) -> Result<i32, CliError> {
    if args.alpha_override.is_some() {
        return Err(CliError::Input(
            "--alpha-override cannot be combined with --alphas".into(),
        ));
    }
    if let Some(bad) = alphas.iter().find(|a| !a.is_finite()) {
        return Err(CliError::Input(format!("invalid alphas: {bad} is not finite")));
    }
    let problem = load(path, None, warnings)?;
    let config = args.config();
    config.validate()?;
    let entries = match sweep_threads()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Failed(format!("cannot start thread pool: {e}")))?
            .install(|| sweep(&problem, alphas, &config)),
        None => sweep(&problem, alphas, &config),
    };
    let text = sweep_csv(&problem, &entries)?;
    emit(&text, csv_path, out)?;
    let failed = entries
        .iter()
        .filter(|e| !matches!(&e.outcome, Ok((sol, _)) if sol.converged))
        .count();
    if failed > 0 {
        warnings.push(format!(
            "{failed} of {} alphas did not produce a certified solution",
            entries.len()
        ));
        Ok(2)
    } else {
        Ok(0)
    }
}

/// Renders sweep results; supports are written as `{a,b}`.
pub(crate) fn sweep_csv(problem: &Problem, entries: &[SweepEntry]) -> Result<String, CliError> {
    let actions = problem.action_labels();
    let states = problem.state_labels();
    let mut header = vec!["alpha".to_string(), "q_alpha".into(), "regime".into()];
    header.extend(actions.iter().map(|a| format!("m_{a}")));
    for s in states {
        header.extend(actions.iter().map(|a| format!("P_{s}_{a}")));
    }
    header.push("S_m".into());
    header.extend(states.iter().map(|s| format!("S_{s}")));
    header.extend(["objective".into(), "information".into(), "status".into()]);

    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Failed(format!("cannot write CSV: {e}"));
    writer.write_record(&header).map_err(csv_err)?;
    let set = |indices: &[usize]| format!("{{{}}}", labels(indices, actions).join(","));
    for entry in entries {
        let q = (3.0 + entry.alpha) / 2.0;
        let mut record = vec![
            num(entry.alpha),
            num(q),
            regime_name(Regime::for_alpha(entry.alpha)).to_string(),
        ];
        match &entry.outcome {
            Ok((sol, support)) => {
                record.extend(sol.reference.mass().iter().map(|&v| num(v)));
                for row in sol.rule.rows() {
                    record.extend(row.iter().map(|&v| num(v)));
                }
                record.push(set(&support.s_m));
                record.extend(support.s_theta.iter().map(|s| set(s)));
                record.push(num(sol.objective));
                record.push(ext(sol.information));
                record.push(if sol.converged { "certified" } else { "uncertified" }.into());
            }
            Err(e) => {
                record.resize(header.len() - 1, String::new());
                record.push(format!("error: {e}"));
            }
        }
        writer.write_record(&record).map_err(csv_err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Failed(format!("cannot write CSV: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV fields are UTF-8"))
}

fn parse_vector(field: &str, raw: &str) -> Result<Vec<f64>, CliError> {
    let values = raw
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Input(format!("invalid {field}: {e}")))?;
    if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(CliError::Input(format!(
            "invalid {field}: entries must be finite and nonnegative, found {bad}"
        )));
    }
    let total: f64 = values.iter().sum();
    if (total - 1.0).abs() > VECTOR_MASS_TOL {
        return Err(CliError::Input(format!(
            "invalid {field}: entries sum to {total}, not 1"
        )));
    }
    Ok(values)
}

fn cmd_divergence(p: &str, m: &str, alpha: f64, out: &mut dyn Write) -> Result<i32, CliError> {
    if !alpha.is_finite() {
        return Err(CliError::Input(format!("invalid alpha: {alpha} is not finite")));
    }
    let p = parse_vector("p", p)?;
    let m = parse_vector("m", m)?;
    if p.len() != m.len() {
        return Err(CliError::Input(format!(
            "invalid m: has {} entries but p has {}",
            m.len(),
            p.len()
        )));
    }
    emit(&format!("{}\n", ext(alpha_divergence(&p, &m, alpha))), None, out)?;
    Ok(0)
}

fn cmd_info(
    problem_path: &Path,
    rule_path: &Path,
    alpha_override: Option<f64>,
    out: &mut dyn Write,
    warnings: &mut Vec<String>,
) -> Result<i32, CliError> {
    let problem = load(problem_path, alpha_override, warnings)?;
    let rule = read_rule(rule_path)?;
    if rule.n_states() != problem.n_states() || rule.n_actions() != problem.n_actions() {
        return Err(CliError::Input(format!(
            "{}: invalid rule: is {}x{} but the problem has {} states and {} actions",
            rule_path.display(),
            rule.n_states(),
            rule.n_actions(),
            problem.n_states(),
            problem.n_actions()
        )));
    }
    let info: ExtReal = alpha_information(&rule, problem.prior(), problem.alpha());
    let mut s = format!("alpha: {}\ninformation: {}\n", num(problem.alpha()), ext(info));
    match alpha_integration(&rule, problem.prior(), problem.alpha()) {
        Integration::Finite(m) => {
            s += "action\treference\n";
            for (label, w) in problem.action_labels().iter().zip(m.mass()) {
                s += &format!("{label}\t{}\n", num(*w));
            }
        }
        Integration::InfiniteInformation => s += "reference: none (empty common support)\n",
    }
    emit(&s, None, out)?;
    Ok(0)
}
