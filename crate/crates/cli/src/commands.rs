use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use statanon::composition::{best_bound, compose_general, compose_support, default_j_star, MarginalSpec};
use statanon::dataio::{
    default_threshold_grid, exposure_report, load_csv, load_csv_inferred, write_csv, SettingName,
    SimulationConfig, TableSchema, DEFAULT_LOG_GRID_POINTS,
};
use statanon::estimation::{lecam_hard_pair, simulate_estimators};
use statanon::exposure::ExposureCurve;
use statanon::protocol::{audit, coverage, run_protocol, PolicyMode};
use statanon::{empirical_distribution, exposure_exact, BoundCertificate, CategoricalTable, DiscreteDistribution, Rational};

use crate::{Format, RuleArg, TableArgs, ThresholdArgs};

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
    /// A certificate did not hold where it must; indicates a bug.
    Soundness(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Soundness(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(e) | Failure::Data(e) => write!(f, "{e:#}"),
            Failure::Soundness(s) => write!(f, "soundness violation: {s}"),
        }
    }
}

impl From<statanon::Error> for Failure {
    fn from(e: statanon::Error) -> Self {
        use statanon::Error as E;
        match e {
            E::InvalidParameter { .. } | E::UnknownColumn(_) | E::EmptyColumnSet => Failure::Usage(e.into()),
            _ => Failure::Data(e.into()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Data(e.into())
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(anyhow::anyhow!(msg.into()))
}

fn parse_rational(s: &str) -> Result<Rational> {
    Rational::from_str(s.trim()).map_err(|e| usage(format!("cannot read {s:?} as a threshold: {e}")))
}

fn load_table(args: &TableArgs) -> Result<(CategoricalTable, Vec<usize>)> {
    let table = match &args.schema {
        Some(s) => load_csv(&args.input, &TableSchema::from_json_file(s)?)?,
        None => load_csv_inferred(&args.input)?,
    };
    let cols = if args.columns.is_empty() {
        (0..table.n_cols()).collect()
    } else {
        table.column_indices(&args.columns)?
    };
    Ok((table, cols))
}

fn thresholds(args: &ThresholdArgs, n: usize) -> Result<Option<Vec<Rational>>> {
    if !args.t.is_empty() {
        return args.t.iter().map(|s| parse_rational(s)).collect::<Result<_>>().map(Some);
    }
    if !args.k.is_empty() {
        return args
            .k
            .iter()
            .map(|&k| Ok(Rational::ratio(k, n as u64)?))
            .collect::<Result<_>>()
            .map(Some);
    }
    Ok(None)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn analyze(table_args: &TableArgs, t_args: &ThresholdArgs, out_dir: &Path, format: Format) -> Result<()> {
    let (table, cols) = load_table(table_args)?;
    let grid = match thresholds(t_args, table.n_rows())? {
        Some(g) => g,
        None => {
            let joint = ExposureCurve::new(&empirical_distribution(&table, &cols)?);
            default_threshold_grid(&joint, table.n_rows(), DEFAULT_LOG_GRID_POINTS)?
        }
    };
    let report = exposure_report(&table, &cols, &grid)?;
    match format {
        Format::Csv => {
            let mut w = create(out_dir, "curves.csv")?;
            report.write_csv(&mut w)?;
            w.flush()?;
        }
        Format::Json => write_json(out_dir, "curves.json", &report)?,
    }
    println!("rows: {}", table.n_rows());
    for &j in &cols {
        let d = empirical_distribution(&table, &[j])?;
        println!("column {}: {} values", table.column(j).name, d.len());
    }
    println!("grid points: {}", grid.len());
    let violations = report.bound_violations();
    println!("bound below joint exposure at: {} points", violations.len());
    if !violations.is_empty() {
        return Err(Failure::Soundness(format!("bound below joint exposure at t = {violations:?}")));
    }
    if !report.certificates_verify() {
        return Err(Failure::Soundness("an embedded certificate does not recompute".into()));
    }
    Ok(())
}

pub fn simulate(
    config_path: &Path,
    seed: Option<u64>,
    budget: Option<f64>,
    runs: Option<usize>,
    out_dir: &Path,
) -> Result<()> {
    let mut doc = SimulationConfig::from_json_file(config_path)?;
    if let Some(s) = seed {
        doc.seed = s;
    }
    if let Some(b) = budget {
        doc.policy.budget = b;
    }
    let base = config_path.parent().unwrap_or(Path::new("."));
    let config = doc.to_protocol_config(base)?;

    if let Some(runs) = runs.or(doc.runs) {
        if doc.setting != SettingName::Statistical {
            return Err(usage("batches of runs apply to the statistical setting"));
        }
        let summary = coverage(&config, (0..runs as u64).map(|i| config.seed.wrapping_add(i)))?;
        write_json(out_dir, "coverage.json", &summary)?;
        println!("runs: {}", summary.runs);
        println!("certificate held: {} ({:.3})", summary.held, summary.fraction);
        return Ok(());
    }

    let outcome = run_protocol(&config)?;
    let report = audit(&outcome);
    let mut w = create(out_dir, "released.csv")?;
    write_csv(&outcome.released, &mut w)?;
    w.flush()?;
    write_json(out_dir, "decision.json", &outcome.decision)?;
    write_json(out_dir, "audit.json", &report)?;
    for (name, tr) in [("round1.log", &outcome.round_one), ("round2.log", &outcome.round_two)] {
        let mut w = create(out_dir, name)?;
        w.write_all(tr.to_lines().as_bytes())?;
        w.flush()?;
    }
    println!("released columns: [{}]", outcome.decision.column_names.join(", "));
    println!("certified bound: {}", outcome.certified_bound);
    println!("realized exposure: {}", outcome.realized_exposure);
    println!("certificate held: {}", outcome.certificate_holds);
    if !report.all_hold() {
        return Err(Failure::Soundness(format!("audit failed: {:?}", report.failures())));
    }
    if outcome.decision.policy.mode == PolicyMode::Fixed && !outcome.certificate_holds {
        return Err(Failure::Soundness("realized exposure exceeds the certified bound".into()));
    }
    Ok(())
}

fn parse_dist(spec: &str) -> Result<DiscreteDistribution> {
    if let Some(m) = spec.strip_prefix("uniform:") {
        let m: usize = m.parse().map_err(|_| usage(format!("bad support size in {spec:?}")))?;
        return Ok(DiscreteDistribution::uniform(m)?);
    }
    let probs = spec
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| usage(format!("bad probability {p:?}"))))
        .collect::<Result<Vec<_>>>()?;
    DiscreteDistribution::from_probs(&probs).map_err(|e| Failure::Usage(e.into()))
}

#[allow(clippy::too_many_arguments)]
pub fn fig3(
    trials: usize,
    n_users: u64,
    dist: &str,
    k_min: u64,
    k_max: u64,
    seed: u64,
    out_dir: &Path,
    format: Format,
) -> Result<()> {
    let dist = parse_dist(dist)?;
    if k_min > k_max {
        return Err(usage("k_min exceeds k_max"));
    }
    let grid: Vec<u64> = (k_min..=k_max).collect();
    let summary = simulate_estimators(&dist, n_users, &grid, trials, seed)?;
    match format {
        Format::Csv => {
            let mut w = create(out_dir, "fig3.csv")?;
            summary.write_csv(&mut w)?;
            w.flush()?;
        }
        Format::Json => write_json(out_dir, "fig3.json", &summary)?,
    }
    println!(
        "statistical-exposure estimator has smaller spread at {} of {} k values",
        summary.lower_variance_count(),
        grid.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct BoundAnswer {
    target: Option<Rational>,
    reported_bound: f64,
    joint_exposure: Rational,
    #[serde(skip_serializing_if = "Option::is_none")]
    within_budget: Option<bool>,
    certificate: BoundCertificate,
}

#[allow(clippy::too_many_arguments)]
pub fn bounds(
    table_args: &TableArgs,
    t_args: &ThresholdArgs,
    rule: RuleArg,
    column_t: &[String],
    c: Option<&str>,
    j_star: Option<usize>,
    budget: Option<f64>,
    out_dir: Option<&Path>,
) -> Result<()> {
    let (table, cols) = load_table(table_args)?;
    let curves: Vec<ExposureCurve> = cols
        .iter()
        .map(|&j| empirical_distribution(&table, &[j]).map(|d| ExposureCurve::new(&d)))
        .collect::<std::result::Result<_, _>>()?;
    let joint = empirical_distribution(&table, &cols)?;
    let names: Vec<String> = cols.iter().map(|&j| table.column(j).name.clone()).collect();

    let mut answers = Vec::new();
    let mut answer = |target: Option<Rational>, cert: BoundCertificate| -> Result<()> {
        let cert = cert.with_columns(names.clone());
        let joint_exposure = exposure_exact(&joint, &cert.joint_threshold)?;
        if joint_exposure > cert.bound || target.as_ref().is_some_and(|t| t > &cert.joint_threshold) {
            return Err(Failure::Soundness(format!(
                "joint exposure {joint_exposure} exceeds bound {} at {}",
                cert.bound, cert.joint_threshold
            )));
        }
        answers.push(BoundAnswer {
            target,
            reported_bound: cert.reported_bound(),
            joint_exposure,
            within_budget: budget.map(|b| cert.reported_bound() <= b),
            certificate: cert,
        });
        Ok(())
    };

    match rule {
        RuleArg::Best => {
            let targets = thresholds(t_args, table.n_rows())?
                .ok_or_else(|| usage("--t or -k is required with --rule best"))?;
            let refs: Vec<&ExposureCurve> = curves.iter().collect();
            for t in targets {
                let cert = best_bound(&refs, &t)?;
                answer(Some(t), cert)?;
            }
        }
        RuleArg::Support | RuleArg::General => {
            if column_t.len() != cols.len() {
                return Err(usage(format!(
                    "--column-t needs {} thresholds, one per column",
                    cols.len()
                )));
            }
            let ts = column_t.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
            let marginals: Vec<MarginalSpec<'_>> =
                curves.iter().zip(ts).map(|(c, t)| MarginalSpec::new(c, t)).collect();
            let cert = if rule == RuleArg::Support {
                compose_support(&marginals, j_star.unwrap_or_else(|| default_j_star(&marginals)))?
            } else {
                let c = parse_rational(c.ok_or_else(|| usage("--c is required with --rule general"))?)?;
                compose_general(&marginals, &c)?
            };
            answer(None, cert)?;
        }
    }

    match out_dir {
        Some(dir) => write_json(dir, "certificates.json", &answers)?,
        None => println!("{}", serde_json::to_string_pretty(&answers)?),
    }
    Ok(())
}

#[derive(Serialize)]
struct LeCamReport {
    s: u64,
    n: u64,
    epsilon: Rational,
    q: Rational,
    p0: Vec<Rational>,
    p1: Vec<Rational>,
    exposure_p0: Rational,
    exposure_p1: Rational,
    gap: Rational,
    kl: f64,
    kl_bound: f64,
    kl_bound_epsilon: f64,
}

pub fn lecam(s: u64, n: u64, format: Format, out_dir: Option<&Path>) -> Result<()> {
    let pair = lecam_hard_pair(s, n)?;
    let mut buf = Vec::new();
    match format {
        Format::Json => {
            let report = LeCamReport {
                s,
                n,
                epsilon: pair.epsilon.clone(),
                q: pair.q.clone(),
                exposure_p0: pair.exposure_p0(),
                exposure_p1: pair.exposure_p1(),
                gap: pair.exposure_gap(),
                kl: pair.kl_divergence(),
                kl_bound: pair.kl_bound(),
                kl_bound_epsilon: pair.kl_bound_epsilon(),
                p0: pair.p0_masses,
                p1: pair.p1_masses,
            };
            serde_json::to_writer_pretty(&mut buf, &report)?;
            buf.push(b'\n');
        }
        Format::Csv => {
            writeln!(buf, "value,p0,p1")?;
            for (i, (a, b)) in pair.p0_masses.iter().zip(&pair.p1_masses).enumerate() {
                let label = if i + 1 == pair.p0_masses.len() { "rest".to_string() } else { format!("atom{i}") };
                writeln!(buf, "{label},{a},{b}")?;
            }
        }
    }
    match out_dir {
        Some(dir) => {
            let name = if format == Format::Json { "lecam.json" } else { "lecam.csv" };
            let mut w = create(dir, name)?;
            w.write_all(&buf)?;
            w.flush()?;
        }
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}
