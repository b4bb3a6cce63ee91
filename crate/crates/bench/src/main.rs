use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use submax_bench::{
    compare, exact_for, parse_instance, rows_to_csv, run_report, summaries_to_csv, Alg,
    HarnessError, Result, Row, RunConfig,
};
use submax_core::instance::{Family, MatroidGen};
use submax_core::oracle::self_check_submodular;
use submax_core::report::ThresholdTrace;
use submax_core::{gen_instance, GeneratorSpec, Instance};

#[derive(Parser)]
#[command(name = "submax", version, about = "Constrained submodular maximization benchmarks")]
struct Cli {
    /// Seed for generation and randomized algorithms.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file.
    Gen(GenArgs),
    /// Run one algorithm on one instance.
    Run {
        /// Instance file, or `-` for stdin.
        instance: PathBuf,
        #[command(flatten)]
        alg: AlgArgs,
    },
    /// Run several algorithms over a set of instances and aggregate.
    Compare {
        /// Instance files; alternatively use the generator options.
        instances: Vec<PathBuf>,
        #[command(flatten)]
        alg: AlgArgs,
        #[command(flatten)]
        generator: GenArgs,
        /// Generated instances per size.
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Emit the per-run rows instead of the summary.
        #[arg(long)]
        rows: bool,
    },
    /// Brute-force optimum of a small instance, as JSON.
    Exact { instance: PathBuf },
    /// Randomized submodularity and monotonicity check, as JSON.
    Selfcheck {
        instance: PathBuf,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
}

#[derive(Args)]
struct AlgArgs {
    /// Algorithm id; repeat for `compare`.
    #[arg(long = "alg", value_parser = parse_alg)]
    algs: Vec<Alg>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Gradient samples per step (curv-cg).
    #[arg(long, default_value_t = 64)]
    samples: usize,
    /// Attach the brute-force optimum and ratio.
    #[arg(long)]
    exact: bool,
    /// Record wall-clock time; output is then no longer reproducible.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    /// Ground set size; comma-separated sizes for `compare`.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long)]
    universe: Option<usize>,
    #[arg(long)]
    density: Option<f64>,
    /// Target total curvature (curvature-mix).
    #[arg(long)]
    kappa: Option<f64>,
    /// Cardinality bound.
    #[arg(long)]
    k: Option<usize>,
    /// Cardinality bound as a fraction of n (at least 1).
    #[arg(long, conflicts_with = "k")]
    k_frac: Option<f64>,
    /// Number of knapsack rows.
    #[arg(long, default_value_t = 0)]
    knapsacks: usize,
    /// Uniform matroid of the given rank.
    #[arg(long)]
    uniform: Vec<usize>,
    /// Random partition matroid, `PARTS:CAP`.
    #[arg(long, value_parser = parse_partition)]
    partition: Vec<(usize, usize)>,
    /// Random graphic matroid on the given number of vertices.
    #[arg(long)]
    graphic: Vec<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Coverage,
    Facility,
    Modular,
    CurvatureMix,
}

fn parse_alg(s: &str) -> std::result::Result<Alg, String> {
    s.parse().map_err(|e: HarnessError| e.to_string())
}

fn parse_partition(s: &str) -> std::result::Result<(usize, usize), String> {
    let (parts, cap) = s.split_once(':').ok_or("expected PARTS:CAP")?;
    Ok((
        parts.parse().map_err(|_| "bad part count")?,
        cap.parse().map_err(|_| "bad capacity")?,
    ))
}

impl GenArgs {
    fn spec(&self, n: usize) -> Result<GeneratorSpec> {
        let family = match self.family {
            Some(FamilyArg::Coverage) => Family::Coverage,
            Some(FamilyArg::Facility) => Family::Facility,
            Some(FamilyArg::Modular) => Family::Modular,
            Some(FamilyArg::CurvatureMix) => Family::CurvatureMix,
            None => return Err(HarnessError::Usage("--family is required".into())),
        };
        let cardinality = self
            .k
            .or_else(|| self.k_frac.map(|f| ((n as f64 * f).floor() as usize).max(1)));
        let mut matroids: Vec<MatroidGen> =
            self.uniform.iter().map(|&k| MatroidGen::Uniform { k }).collect();
        matroids.extend(
            self.partition
                .iter()
                .map(|&(parts, cap)| MatroidGen::Partition { parts, cap }),
        );
        matroids.extend(self.graphic.iter().map(|&vertices| MatroidGen::Graphic { vertices }));
        Ok(GeneratorSpec {
            universe: self.universe,
            density: self.density,
            kappa: self.kappa,
            cardinality,
            knapsacks: self.knapsacks,
            matroids,
            ..GeneratorSpec::new(family, n)
        })
    }
}

impl AlgArgs {
    fn configs(&self, seed: u64) -> Vec<RunConfig> {
        self.algs
            .iter()
            .map(|&alg| RunConfig {
                alg,
                eps: self.eps,
                seed,
                samples: self.samples,
                exact: self.exact,
                timing: self.timing,
            })
            .collect()
    }
}

fn read_instance(path: &Path) -> Result<Instance> {
    let text = if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        s
    } else {
        fs::read_to_string(path)?
    };
    parse_instance(&text)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct RunJson<'a> {
    #[serde(flatten)]
    row: &'a Row,
    params: &'a std::collections::BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<&'a ThresholdTrace>,
}

fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Gen(args) => {
            let [n] = args.n[..] else {
                return Err(HarnessError::Usage("gen needs exactly one --n".into()));
            };
            let inst = gen_instance(&args.spec(n)?, cli.seed)?;
            Ok(inst.to_json() + "\n")
        }
        Command::Run { instance, alg } => {
            let configs = alg.configs(cli.seed);
            let [config] = &configs[..] else {
                return Err(HarnessError::Usage("run needs exactly one --alg".into()));
            };
            let inst = read_instance(instance)?;
            let (row, report) = run_report(&inst, config)?;
            Ok(match cli.format {
                Format::Csv => rows_to_csv(std::slice::from_ref(&row))?,
                Format::Json => to_json(&RunJson {
                    row: &row,
                    params: &report.params,
                    trace: report.trace.as_ref(),
                }),
            })
        }
        Command::Compare {
            instances,
            alg,
            generator,
            count,
            rows,
        } => {
            let mut insts = instances
                .iter()
                .map(|p| read_instance(p))
                .collect::<Result<Vec<_>>>()?;
            if generator.family.is_some() {
                for &n in &generator.n {
                    let spec = generator.spec(n)?;
                    for i in 0..*count {
                        insts.push(gen_instance(&spec, cli.seed.wrapping_add(i))?);
                    }
                }
            }
            let (all, summary) = compare(&insts, &alg.configs(cli.seed))?;
            Ok(match (cli.format, rows) {
                (Format::Csv, true) => rows_to_csv(&all)?,
                (Format::Csv, false) => summaries_to_csv(&summary)?,
                (Format::Json, true) => to_json(&all),
                (Format::Json, false) => to_json(&summary),
            })
        }
        Command::Exact { instance } => Ok(to_json(&exact_for(&read_instance(instance)?)?)),
        Command::Selfcheck { instance, trials } => {
            let inst = read_instance(instance)?;
            let report = self_check_submodular(&inst.oracle()?, *trials, cli.seed);
            if !report.passed {
                return Err(HarnessError::Verification(to_json(&report)));
            }
            Ok(to_json(&report))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(text) => {
            let written = match &cli.out {
                Some(path) => fs::write(path, text),
                None => io::stdout().write_all(text.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
