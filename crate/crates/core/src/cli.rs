//! The `tricorr` command line.
//!
//! Exit status is 0 on success, 2 on invalid input or arguments, 3 when the
//! rate optimizer diverges and 1 on I/O failures.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{
    decomposition_from_joint, load_distribution, median_of, run_experiment, run_experiment_with_points, simulate_sweep,
    write_rows, BenchError, ExperimentSpec, Format, ModelTag, Source, Unit,
};
use crate::codesim::{CodeError, Method};
use crate::probcore::JointDist;
use crate::ratereg::{
    adversarial_frontier, collab_corner_points, reduce_cardinality, wyner_ci, AuxDecomposition, OptimizerConfig,
    RateError, Roles,
};

#[derive(Debug, Parser)]
#[command(
    name = "tricorr",
    version,
    about = "Public/private correlation costs of tripartite distributions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Entropies, mutual informations and Markov checks.
    Info {
        #[command(flatten)]
        dist: DistArgs,
        #[command(flatten)]
        common: Common,
        /// Markov chain to check, as groups separated by `-`, e.g. `X-Z-Y`
        /// or `X,Y-U-Z`. Repeatable.
        #[arg(long)]
        chain: Vec<String>,
    },
    /// Wyner common information of X:Y and of X:Y:Z. The witness of the
    /// last one is dumped in the distribution format.
    Wyner {
        #[command(flatten)]
        dist: DistArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Corner points and λ-frontier points of a rate region.
    Region {
        #[command(flatten)]
        dist: DistArgs,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = ModelArg::Collab)]
        model: ModelArg,
        #[arg(long, value_delimiter = ',')]
        lambda: Vec<f64>,
        /// Writes the alpha (collaborative) or key-cost (adversarial)
        /// witness here, in the distribution format.
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Builds and scores codes over a sweep of block lengths.
    Simulate {
        #[command(flatten)]
        dist: DistArgs,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = ModelArg::Collab)]
        model: ModelArg,
        /// Block lengths, ascending.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Typicality slack; `max(0.05, n^(-1/3))` when omitted.
        #[arg(long)]
        delta: Option<f64>,
        /// Codes per block length, with seeds `seed, seed+1, ...`.
        #[arg(long, default_value_t = 1)]
        reps: u64,
        /// Decomposition to code with (JSON with variables X, Y, Z, U and
        /// optionally V). Defaults to the optimizer's alpha corner
        /// (collaborative) or key-cost point (adversarial).
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Shrinks the auxiliary alphabets of a decomposition.
    Reduce {
        /// JSON joint over X, Y, Z, U and optionally V.
        #[arg(long)]
        dist: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = ModelArg::Collab)]
        model: ModelArg,
    },
    /// Runs a full experiment and writes its table.
    Bench {
        #[command(flatten)]
        dist: DistArgs,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = ModelArg::Collab)]
        model: ModelArg,
        #[arg(long, value_delimiter = ',')]
        lambda: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 1)]
        reps: u64,
        /// Adds a wall-clock `runtimeMs` column.
        #[arg(long)]
        timing: bool,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct DistArgs {
    /// JSON distribution file.
    #[arg(long)]
    dist: Option<PathBuf>,
    /// Built-in distribution id, e.g. `example2` or `random(3,2,2,2)`.
    #[arg(long)]
    builtin: Option<String>,
}

impl DistArgs {
    fn source(&self) -> Source {
        match (&self.dist, &self.builtin) {
            (Some(p), _) => Source::File(p.clone()),
            (None, Some(id)) => Source::Builtin(id.clone()),
            (None, None) => unreachable!("clap requires one source"),
        }
    }
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, value_enum, default_value_t = UnitArg::Nats)]
    unit: UnitArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    restarts: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

impl Common {
    fn unit(&self) -> Unit {
        match self.unit {
            UnitArg::Nats => Unit::Nats,
            UnitArg::Bits => Unit::Bits,
        }
    }

    fn format(&self) -> Format {
        match self.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }

    fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            restarts: self.restarts,
            seed: self.seed,
            ..OptimizerConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Collab,
    Adversarial,
}

impl ModelArg {
    fn tag(self) -> ModelTag {
        match self {
            ModelArg::Collab => ModelTag::Collab,
            ModelArg::Adversarial => ModelTag::Adversarial,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum UnitArg {
    Nats,
    Bits,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Runs the command line with `std::env::args_os`-style arguments
/// (program name first), writing to the given streams. Returns the exit
/// status.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return 2;
            }
            let _ = write!(out, "{}", e.render());
            return 0;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            exit_code(&e)
        }
    }
}

fn is_divergence(e: &RateError) -> bool {
    matches!(e, RateError::OptimizerDiverged { .. })
}

fn exit_code(e: &anyhow::Error) -> i32 {
    for cause in e.chain() {
        if let Some(r) = cause.downcast_ref::<RateError>() {
            if is_divergence(r) {
                return 3;
            }
        }
        if let Some(CodeError::Rate(r)) = cause.downcast_ref::<CodeError>() {
            if is_divergence(r) {
                return 3;
            }
        }
        match cause.downcast_ref::<BenchError>() {
            Some(BenchError::Rate(r)) | Some(BenchError::Code(CodeError::Rate(r))) if is_divergence(r) => return 3,
            Some(BenchError::Io { .. }) => return 1,
            _ => {}
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 1;
        }
    }
    2
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn joint_label(vars: &[String]) -> String {
    vars.join(",")
}

fn dispatch(command: Command, out: &mut dyn Write) -> anyhow::Result<()> {
    match command {
        Command::Info { dist, common, chain } => {
            let j = load_distribution(&dist.source())?;
            let text = info(&j, &chain, common.unit())?;
            emit(&text, common.out.as_deref(), out)
        }
        Command::Wyner { dist, common } => {
            let j = load_distribution(&dist.source())?;
            wyner(&j, &common, out)
        }
        Command::Region {
            dist,
            common,
            model,
            lambda,
            witness_out,
        } => {
            let mut spec = ExperimentSpec::new(dist.source(), model.tag());
            spec.lambdas = lambda;
            spec.unit = common.unit();
            spec.restarts = common.restarts;
            spec.optimizer_seed = common.seed;
            let (rows, points) = run_experiment_with_points(&spec)?;
            if let Some(p) = &witness_out {
                let target = if spec.model == ModelTag::Collab { "alpha" } else { "key" };
                let w = &points
                    .iter()
                    .find(|np| np.name == target)
                    .expect("corner present")
                    .point
                    .witness;
                std::fs::write(p, w.joint.to_json_string() + "\n")
                    .with_context(|| format!("writing {}", p.display()))?;
            }
            let mut text = String::new();
            for r in &rows {
                match r.lambda {
                    Some(l) => writeln!(text, "lambda {l} {:.4} {:.4}", r.rp, r.rk)?,
                    None => writeln!(text, "{} {:.4} {:.4}", r.point, r.rp, r.rk)?,
                }
            }
            out.write_all(text.as_bytes())?;
            if let Some(p) = &common.out {
                let mut buf = Vec::new();
                write_rows(&rows, common.format(), &mut buf)?;
                std::fs::write(p, buf).with_context(|| format!("writing {}", p.display()))?;
            }
            Ok(())
        }
        Command::Simulate {
            dist,
            common,
            model,
            n,
            delta,
            reps,
            witness,
        } => {
            let j = load_distribution(&dist.source())?;
            let aux = match witness {
                Some(p) => {
                    let wj = load_distribution(&Source::File(p))?;
                    decomposition_from_joint(wj, model.tag().model())?
                }
                None => optimizer_witness(&j, model, &common)?,
            };
            simulate(&j, &aux, &n, delta, reps, &common, out)
        }
        Command::Reduce { dist, common, model } => {
            let j = load_distribution(&Source::File(dist))?;
            let aux = decomposition_from_joint(j, model.tag().model())?;
            reduce(&aux, &common, out)
        }
        Command::Bench {
            dist,
            common,
            model,
            lambda,
            n,
            delta,
            reps,
            timing,
        } => {
            if reps == 0 {
                bail!("--reps must be at least 1");
            }
            let spec = ExperimentSpec {
                lambdas: lambda,
                ns: n,
                seeds: (common.seed..common.seed + reps).collect(),
                unit: common.unit(),
                delta,
                restarts: common.restarts,
                optimizer_seed: common.seed,
                output: common.out.clone(),
                format: common.format(),
                timing,
                ..ExperimentSpec::new(dist.source(), model.tag())
            };
            let rows = run_experiment(&spec)?;
            if common.out.is_none() {
                write_rows(&rows, spec.format, out)?;
            }
            Ok(())
        }
    }
}

/// Splits `A,B-C-D` into groups.
fn parse_chain(s: &str) -> anyhow::Result<Vec<Vec<String>>> {
    let groups: Vec<Vec<String>> = s
        .split('-')
        .map(|g| {
            g.split(',')
                .map(|v| v.trim().to_string())
                .filter(|v| !v.is_empty())
                .collect()
        })
        .collect();
    if groups.len() != 3 || groups.iter().any(|g: &Vec<String>| g.is_empty()) {
        bail!("chain `{s}` must have three nonempty groups, e.g. X-Z-Y");
    }
    Ok(groups)
}

fn info(j: &JointDist, chains: &[String], unit: Unit) -> anyhow::Result<String> {
    let vars = j.variables().to_vec();
    let mut t = String::new();
    writeln!(t, "unit {}", if unit == Unit::Bits { "bits" } else { "nats" })?;
    for v in &vars {
        writeln!(t, "H({v}) {:.6}", unit.convert(j.entropy(&[v])?))?;
    }
    writeln!(t, "H({}) {:.6}", joint_label(&vars), unit.convert(j.entropy(&vars)?))?;
    if vars.len() > 1 {
        for (i, v) in vars.iter().enumerate() {
            let rest: Vec<String> = vars
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != i)
                .map(|(_, w)| w.clone())
                .collect();
            writeln!(
                t,
                "H({v}|{}) {:.6}",
                joint_label(&rest),
                unit.convert(j.conditional_entropy(&[v.clone()], &rest)?)
            )?;
        }
        for a in 0..vars.len() {
            for b in a + 1..vars.len() {
                let (x, y) = (&vars[a], &vars[b]);
                writeln!(t, "I({x};{y}) {:.6}", unit.convert(j.mutual_information(&[x], &[y])?))?;
                for (c, z) in vars.iter().enumerate() {
                    if c != a && c != b {
                        let cmi = j.conditional_mutual_information(&[x], &[y], &[z])?;
                        writeln!(t, "I({x};{y}|{z}) {:.6}", unit.convert(cmi))?;
                    }
                }
            }
        }
    }
    for c in chains {
        let g = parse_chain(c)?;
        let cmi = j.conditional_mutual_information(&g[0], &g[2], &g[1])?;
        let holds = cmi <= 1e-9;
        writeln!(
            t,
            "markov {} {} I={:.6}",
            c.trim(),
            if holds { "holds" } else { "fails" },
            unit.convert(cmi)
        )?;
    }
    Ok(t)
}

fn wyner(j: &JointDist, common: &Common, out: &mut dyn Write) -> anyhow::Result<()> {
    let vars = j.variables();
    if vars.len() < 2 {
        bail!("Wyner common information needs at least two variables");
    }
    let cfg = common.optimizer();
    let unit = common.unit();
    let mut cases = vec![vars[..2].to_vec()];
    if vars.len() >= 3 {
        cases.push(vars[..3].to_vec());
    }
    let mut last = None;
    for names in cases {
        let groups: Vec<Vec<String>> = names.iter().map(|v| vec![v.clone()]).collect();
        let (c, w) = wyner_ci(j, &groups, &cfg)?;
        writeln!(out, "C({}) {:.4} |W|={}", names.join(":"), unit.convert(c), w.u_card())?;
        last = Some(w);
    }
    let w = last.expect("at least one case");
    let json = w.joint.to_json_string() + "\n";
    match &common.out {
        Some(p) => std::fs::write(p, json).with_context(|| format!("writing {}", p.display()))?,
        None => out.write_all(json.as_bytes())?,
    }
    Ok(())
}

fn optimizer_witness(j: &JointDist, model: ModelArg, common: &Common) -> anyhow::Result<AuxDecomposition> {
    let roles = Roles::first_three(j)?;
    let cfg = common.optimizer();
    Ok(match model {
        ModelArg::Collab => collab_corner_points(j, &roles, &cfg)?.0.witness,
        ModelArg::Adversarial => {
            let f = adversarial_frontier(j, &roles, &[1.0], &cfg)?;
            f.points.last().expect("nonempty envelope").witness.clone()
        }
    })
}

fn simulate(
    j: &JointDist,
    aux: &AuxDecomposition,
    ns: &[usize],
    delta: Option<f64>,
    reps: u64,
    common: &Common,
    out: &mut dyn Write,
) -> anyhow::Result<()> {
    if reps == 0 {
        bail!("--reps must be at least 1");
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) || ns.contains(&0) {
        bail!("--n must list positive block lengths in ascending order");
    }
    if let Some(d) = delta {
        if !(d.is_finite() && d > 0.0) {
            bail!("--delta must be positive");
        }
    }
    let seeds: Vec<u64> = (common.seed..common.seed + reps).collect();
    let sweep = simulate_sweep(j, aux, ns, &seeds, delta, Default::default())?;
    let unit = common.unit();
    let mut buf = Vec::new();
    match common.format() {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(["n", "delta", "reps", "rp", "rk", "median_l1", "max_stderr", "method"])?;
            for s in &sweep {
                let rp = median_of(s.runs.iter().map(|r| r.public_rate));
                let rk = median_of(s.runs.iter().map(|r| r.private_rate));
                let stderr = s
                    .runs
                    .iter()
                    .filter_map(|r| r.stderr)
                    .fold(None, |m: Option<f64>, e| Some(m.map_or(e, |m| m.max(e))));
                w.write_record([
                    s.n.to_string(),
                    s.delta.to_string(),
                    s.runs.len().to_string(),
                    unit.convert(rp).to_string(),
                    unit.convert(rk).to_string(),
                    s.median_l1.to_string(),
                    stderr.map(|e| e.to_string()).unwrap_or_default(),
                    methods(s.runs.iter().map(|r| r.method)),
                ])?;
            }
            w.flush()?;
        }
        Format::Json => {
            for s in &sweep {
                let runs: Vec<serde_json::Value> = s
                    .runs
                    .iter()
                    .map(|r| {
                        serde_json::json!({
                            "seed": r.seed,
                            "rp": unit.convert(r.public_rate),
                            "rk": unit.convert(r.private_rate),
                            "l1": r.l1,
                            "stderr": r.stderr,
                            "method": r.method.to_string(),
                        })
                    })
                    .collect();
                let line = serde_json::json!({"n": s.n, "delta": s.delta, "medianL1": s.median_l1, "runs": runs});
                serde_json::to_writer(&mut buf, &line)?;
                buf.push(b'\n');
            }
        }
    }
    emit(std::str::from_utf8(&buf)?, common.out.as_deref(), out)
}

fn methods(ms: impl Iterator<Item = Method>) -> String {
    let mut seen: Vec<Method> = Vec::new();
    for m in ms {
        if !seen.contains(&m) {
            seen.push(m);
        }
    }
    match seen.as_slice() {
        [m] => m.to_string(),
        _ => "mixed".into(),
    }
}

fn reduce(aux: &AuxDecomposition, common: &Common, out: &mut dyn Write) -> anyhow::Result<()> {
    let unit = common.unit();
    let reduced = reduce_cardinality(aux)?;
    let (rp0, rk0) = aux.rates()?;
    let (rp1, rk1) = reduced.rates()?;
    let mut t = String::new();
    writeln!(t, "model {}", aux.model)?;
    writeln!(
        t,
        "before |U|={} |V|={} rp {:.6} rk {:.6}",
        aux.u_card(),
        aux.v_card(),
        unit.convert(rp0),
        unit.convert(rk0)
    )?;
    writeln!(
        t,
        "after |U|={} |V|={} rp {:.6} rk {:.6}",
        reduced.u_card(),
        reduced.v_card(),
        unit.convert(rp1),
        unit.convert(rk1)
    )?;
    out.write_all(t.as_bytes())?;
    let json = reduced.joint.to_json_string() + "\n";
    match &common.out {
        Some(p) => std::fs::write(p, json).with_context(|| format!("writing {}", p.display()))?,
        None => out.write_all(json.as_bytes())?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("tricorr").chain(args.iter().copied());
        let code = run_cli(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn info_on_xor() {
        let (code, out, _) = run(&["info", "--builtin", "xor3", "--chain", "X-Z-Y"]);
        assert_eq!(code, 0);
        assert!(out.contains("H(Z|X,Y) 0.000000"));
        assert!(out.contains(&format!("H(X,Y,Z) {:.6}", 2.0 * 2f64.ln())));
        assert!(out.contains("markov X-Z-Y fails"));
    }

    #[test]
    fn bits_are_nats_over_ln2() {
        let (_, out, _) = run(&["info", "--builtin", "xor3", "--unit", "bits"]);
        assert!(out.contains("H(X,Y,Z) 2.000000"));
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(&["info"]).0, 2);
        assert_eq!(run(&["info", "--builtin", "xor3", "--dist", "f.json"]).0, 2);
        assert_eq!(run(&["info", "--builtin", "nope"]).0, 2);
        assert_eq!(run(&["info", "--builtin", "xor3", "--chain", "X-Y"]).0, 2);
        assert_eq!(run(&["frobnicate"]).0, 2);
    }

    #[test]
    fn missing_file_exits_1() {
        let (code, _, err) = run(&["info", "--dist", "/nonexistent/d.json"]);
        assert_eq!(code, 1);
        assert!(err.contains("/nonexistent/d.json"));
    }

    #[test]
    fn divergence_maps_to_3() {
        let e = anyhow::Error::from(BenchError::Rate(RateError::OptimizerDiverged { best_violation: 1.0 }));
        assert_eq!(exit_code(&e), 3);
        let e = anyhow::Error::from(RateError::OptimizerDiverged { best_violation: 1.0 });
        assert_eq!(exit_code(&e), 3);
        let e = anyhow::Error::from(BenchError::BadParams("x".into()));
        assert_eq!(exit_code(&e), 2);
    }

    #[test]
    fn chains_parse() {
        assert_eq!(
            parse_chain("X,Y-U-Z").unwrap(),
            vec![vec!["X".to_string(), "Y".into()], vec!["U".into()], vec!["Z".into()]]
        );
        assert!(parse_chain("X--Z").is_err());
    }
}
