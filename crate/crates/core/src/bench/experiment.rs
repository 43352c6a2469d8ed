//! The experiment harness: corner points, λ-frontier points and simulated
//! code distances for one distribution, as a deterministic table.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use super::builtins::example_distributions;
use super::{BenchError, Result};
use crate::codesim::{
    build_adversarial_code, build_split_source_code, default_delta, evaluate_adversarial, evaluate_synthesis,
    EvalConfig, Method,
};
use crate::exec::Exec;
use crate::probcore::JointDist;
use crate::ratereg::{
    adversarial_frontier, collab_corner_points, collab_frontier, AuxDecomposition, Model, OptimizerConfig, RatePoint,
    Roles,
};

/// Where a distribution comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Builtin(String),
    File(PathBuf),
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Builtin(id) => f.write_str(id),
            Source::File(p) => write!(f, "{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelTag {
    Collab,
    Adversarial,
}

impl ModelTag {
    pub fn model(self) -> Model {
        match self {
            ModelTag::Collab => Model::Collaborative,
            ModelTag::Adversarial => Model::Adversarial,
        }
    }
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelTag::Collab => "collab",
            ModelTag::Adversarial => "adversarial",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Unit {
    #[default]
    Nats,
    Bits,
}

impl Unit {
    /// Converts a rate given in nats.
    pub fn convert(self, nats: f64) -> f64 {
        match self {
            Unit::Nats => nats,
            Unit::Bits => nats / std::f64::consts::LN_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    /// One JSON object per line.
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub source: Source,
    pub model: ModelTag,
    /// Scalarization weights of extra frontier points; may be empty.
    pub lambdas: Vec<f64>,
    /// Block lengths to simulate, ascending; empty for rates only.
    pub ns: Vec<usize>,
    pub seeds: Vec<u64>,
    pub unit: Unit,
    /// Typicality slack of the codes; `default_delta(n)` when absent.
    pub delta: Option<f64>,
    pub restarts: usize,
    /// Seed of the rate optimizer.
    pub optimizer_seed: u64,
    pub output: Option<PathBuf>,
    pub format: Format,
    /// Adds a wall-clock `runtimeMs` column, which makes output
    /// nondeterministic.
    pub timing: bool,
    pub exec: Exec,
}

impl ExperimentSpec {
    pub fn new(source: Source, model: ModelTag) -> Self {
        Self {
            source,
            model,
            lambdas: Vec::new(),
            ns: Vec::new(),
            seeds: vec![0],
            unit: Unit::Nats,
            delta: None,
            restarts: OptimizerConfig::default().restarts,
            optimizer_seed: 0,
            output: None,
            format: Format::Csv,
            timing: false,
            exec: Exec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(BenchError::BadParams("at least one seed is required".into()));
        }
        if self.ns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(BenchError::BadParams("block lengths must be strictly ascending".into()));
        }
        if self.ns.contains(&0) {
            return Err(BenchError::BadParams("block lengths must be positive".into()));
        }
        if let Some(d) = self.delta {
            if !(d.is_finite() && d > 0.0) {
                return Err(BenchError::BadParams(format!("delta must be positive, got {d}")));
            }
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(BenchError::BadParams(format!("lambda must be nonnegative, got {l}")));
        }
        if self.restarts == 0 {
            return Err(BenchError::BadParams("restarts must be at least 1".into()));
        }
        Ok(())
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            restarts: self.restarts,
            seed: self.optimizer_seed,
            exec: self.exec,
            ..OptimizerConfig::default()
        }
    }
}

/// One line of the output table. Rate rows leave `n`, `seed` and `l1`
/// empty; simulation rows carry the realized code rates.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Row {
    pub distribution: String,
    pub model: String,
    /// `alpha`, `beta`, `min_rp`, `key` or `lambda`.
    pub point: String,
    pub lambda: Option<f64>,
    pub rp: f64,
    pub rk: f64,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub l1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
}

pub fn load_distribution(source: &Source) -> Result<JointDist> {
    match source {
        Source::Builtin(id) => example_distributions(id),
        Source::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            Ok(JointDist::from_json_str(&text)?)
        }
    }
}

/// One simulated code: its realized rates and distance.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub seed: u64,
    pub public_rate: f64,
    pub private_rate: f64,
    pub l1: f64,
    pub method: Method,
    pub stderr: Option<f64>,
}

/// All seeds at one block length.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary {
    pub n: usize,
    pub delta: f64,
    pub runs: Vec<SimRun>,
    pub median_l1: f64,
}

/// Median, averaging the middle pair for even counts; NaN when empty.
pub fn median_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = xs.into_iter().collect();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.is_empty() {
        f64::NAN
    } else if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

fn simulate_one(j: &JointDist, aux: &AuxDecomposition, n: usize, delta: f64, seed: u64, exec: Exec) -> Result<SimRun> {
    let cfg = EvalConfig {
        seed,
        exec,
        ..EvalConfig::default()
    };
    let (public_rate, private_rate, est) = match aux.model {
        Model::Adversarial => {
            let code = build_adversarial_code(j, aux, n, delta, seed)?;
            let eval = evaluate_adversarial(&code, j, &cfg)?;
            (code.public_rate(), code.private_rate(), eval.l1_charlie)
        }
        _ => {
            let code = build_split_source_code(j, aux, n, delta, seed)?;
            let est = evaluate_synthesis(&code, j, &cfg)?;
            (code.public_rate(), code.private_rate(), est)
        }
    };
    Ok(SimRun {
        seed,
        public_rate,
        private_rate,
        l1: est.l1,
        method: est.method,
        stderr: est.stderr,
    })
}

/// Builds and scores one code per `(n, seed)` from the decomposition:
/// the split-source code for a collaborative witness (synthesis distance)
/// or the secrecy formation code for an adversarial one (distance of
/// Charlie's simulation). Runs in parallel; results are in input order.
pub fn simulate_sweep(
    j: &JointDist,
    aux: &AuxDecomposition,
    ns: &[usize],
    seeds: &[u64],
    delta: Option<f64>,
    exec: Exec,
) -> Result<Vec<SimSummary>> {
    let tasks: Vec<(usize, u64)> = ns.iter().flat_map(|&n| seeds.iter().map(move |&s| (n, s))).collect();
    let delta_of = |n: usize| delta.unwrap_or_else(|| default_delta(n));
    let runs = exec.map_slice(&tasks, |&(n, s)| simulate_one(j, aux, n, delta_of(n), s, exec));
    let mut runs = runs.into_iter();
    ns.iter()
        .map(|&n| {
            let runs = runs.by_ref().take(seeds.len()).collect::<Result<Vec<_>>>()?;
            let l1s: Vec<f64> = runs.iter().map(|r| r.l1).collect();
            Ok(SimSummary {
                n,
                delta: delta_of(n),
                median_l1: median_of(l1s),
                runs,
            })
        })
        .collect()
}

/// A rate point with its row name (`alpha`, `beta`, `min_rp`, `key` or
/// `lambda`) and its λ for frontier points.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedPoint {
    pub name: String,
    pub lambda: Option<f64>,
    pub point: RatePoint,
}

/// The corner points of the spec's model plus one frontier point per λ.
/// For the adversarial model the corners are the ends of the envelope:
/// least public rate and least private rate.
pub fn rate_points(j: &JointDist, spec: &ExperimentSpec) -> Result<Vec<NamedPoint>> {
    let roles = Roles::first_three(j)?;
    let cfg = spec.optimizer();
    let named = |name: &str, lambda: Option<f64>, point: RatePoint| NamedPoint {
        name: name.to_string(),
        lambda,
        point,
    };
    let mut points = Vec::new();
    match spec.model {
        ModelTag::Collab => {
            let (alpha, beta) = collab_corner_points(j, &roles, &cfg)?;
            points.push(named("alpha", None, alpha));
            points.push(named("beta", None, beta));
            if !spec.lambdas.is_empty() {
                let f = collab_frontier(j, &roles, &spec.lambdas, &cfg)?;
                points.extend(f.by_lambda.into_iter().map(|(l, p)| named("lambda", Some(l), p)));
            }
        }
        ModelTag::Adversarial => {
            let lambdas = if spec.lambdas.is_empty() {
                vec![1.0]
            } else {
                spec.lambdas.clone()
            };
            let f = adversarial_frontier(j, &roles, &lambdas, &cfg)?;
            points.push(named("min_rp", None, f.points[0].clone()));
            points.push(named("key", None, f.points[f.points.len() - 1].clone()));
            if !spec.lambdas.is_empty() {
                points.extend(f.by_lambda.into_iter().map(|(l, p)| named("lambda", Some(l), p)));
            }
        }
    }
    Ok(points)
}

/// Runs the experiment, writes the table to `spec.output` when set, and
/// returns it. Without `timing` the output depends only on the spec.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<Row>> {
    Ok(run_experiment_with_points(spec)?.0)
}

/// [`run_experiment`], also returning the rate points with their witnesses.
pub fn run_experiment_with_points(spec: &ExperimentSpec) -> Result<(Vec<Row>, Vec<NamedPoint>)> {
    spec.validate()?;
    let j = load_distribution(&spec.source)?;
    let start = Instant::now();
    let points = rate_points(&j, spec)?;
    let rate_ms = start.elapsed().as_secs_f64() * 1e3;

    let name = spec.source.to_string();
    let model = spec.model.to_string();
    let mut rows = Vec::new();
    for np in &points {
        let p = &np.point;
        let (rp, rk) = p.witness.rates()?;
        if (rp - p.rp).abs() > 1e-9 || (rk - p.rk).abs() > 1e-9 {
            return Err(BenchError::Output(format!("{} does not match its witness", np.name)));
        }
        rows.push(Row {
            distribution: name.clone(),
            model: model.clone(),
            point: np.name.clone(),
            lambda: np.lambda,
            rp: spec.unit.convert(rp),
            rk: spec.unit.convert(rk),
            n: None,
            seed: None,
            l1: None,
            runtime_ms: spec.timing.then_some(rate_ms),
        });
    }

    if !spec.ns.is_empty() {
        let target = match spec.model {
            ModelTag::Collab => "alpha",
            ModelTag::Adversarial => "key",
        };
        let witness = &points
            .iter()
            .find(|p| p.name == target)
            .expect("corner present")
            .point
            .witness;
        for s in simulate_sweep(&j, witness, &spec.ns, &spec.seeds, spec.delta, spec.exec)? {
            for r in s.runs {
                rows.push(Row {
                    distribution: name.clone(),
                    model: model.clone(),
                    point: target.to_string(),
                    lambda: None,
                    rp: spec.unit.convert(r.public_rate),
                    rk: spec.unit.convert(r.private_rate),
                    n: Some(s.n),
                    seed: Some(r.seed),
                    l1: Some(r.l1),
                    runtime_ms: spec.timing.then(|| start.elapsed().as_secs_f64() * 1e3),
                });
            }
        }
    }

    if let Some(path) = &spec.output {
        let file = std::fs::File::create(path).map_err(|e| BenchError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut w = std::io::BufWriter::new(file);
        write_rows(&rows, spec.format, &mut w)?;
        w.flush().map_err(|e| BenchError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
    }
    Ok((rows, points))
}

const COLUMNS: [&str; 9] = [
    "distribution",
    "model",
    "point",
    "lambda",
    "rp",
    "rk",
    "n",
    "seed",
    "l1",
];

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// CSV with a header row, or JSON lines. `runtimeMs` appears only when the
/// rows carry it.
pub fn write_rows<W: Write>(rows: &[Row], format: Format, out: W) -> Result<()> {
    let err = |e: &dyn fmt::Display| BenchError::Output(e.to_string());
    let timed = rows.iter().any(|r| r.runtime_ms.is_some());
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let mut header: Vec<&str> = COLUMNS.to_vec();
            if timed {
                header.push("runtimeMs");
            }
            w.write_record(&header).map_err(|e| err(&e))?;
            for r in rows {
                let mut rec = vec![
                    r.distribution.clone(),
                    r.model.clone(),
                    r.point.clone(),
                    cell(r.lambda),
                    r.rp.to_string(),
                    r.rk.to_string(),
                    cell(r.n),
                    cell(r.seed),
                    cell(r.l1),
                ];
                if timed {
                    rec.push(cell(r.runtime_ms));
                }
                w.write_record(&rec).map_err(|e| err(&e))?;
            }
            w.flush().map_err(|e| err(&e))?;
        }
        Format::Json => {
            let mut out = out;
            for r in rows {
                serde_json::to_writer(&mut out, r).map_err(|e| err(&e))?;
                out.write_all(b"\n").map_err(|e| err(&e))?;
            }
            out.flush().map_err(|e| err(&e))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(point: &str) -> Row {
        Row {
            distribution: "x, \"y\"".into(),
            model: "collab".into(),
            point: point.into(),
            lambda: None,
            rp: 0.5,
            rk: 0.25,
            n: Some(4),
            seed: None,
            l1: Some(0.125),
            runtime_ms: None,
        }
    }

    #[test]
    fn csv_quotes_and_leaves_missing_cells_empty() {
        let mut buf = Vec::new();
        write_rows(&[row("alpha")], Format::Csv, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(
            s,
            "distribution,model,point,lambda,rp,rk,n,seed,l1\n\"x, \"\"y\"\"\",collab,alpha,,0.5,0.25,4,,0.125\n"
        );
    }

    #[test]
    fn json_lines_omit_runtime_unless_timed() {
        let mut buf = Vec::new();
        let mut timed = row("beta");
        timed.runtime_ms = Some(3.0);
        write_rows(&[row("alpha"), timed], Format::Json, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(!lines[0].contains("runtimeMs"));
        assert!(lines[1].contains("\"runtimeMs\":3.0"));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = ExperimentSpec::new(Source::Builtin("xor3".into()), ModelTag::Collab);
        s.ns = vec![8, 4];
        assert!(matches!(s.validate(), Err(BenchError::BadParams(_))));
        s.ns = vec![4, 8];
        s.seeds.clear();
        assert!(matches!(s.validate(), Err(BenchError::BadParams(_))));
    }

    #[test]
    fn medians() {
        assert_eq!(median_of([3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median_of([4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn bits_divide_by_ln2() {
        assert!((Unit::Bits.convert(2f64.ln()) - 1.0).abs() < 1e-15);
        assert_eq!(Unit::Nats.convert(0.3), 0.3);
    }
}
