use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use spectral_multiplicity::circle::{CirclePoint, GeneratorAllocator};
use spectral_multiplicity::markov::{
    coupling_from_markov, inclusion_exclusion_identity, markov_from_coupling, project_markov,
    random_coupling, random_coupling_onto, random_space, Coupling, FactorStructure,
};
use spectral_multiplicity::measure::{
    generic_measure, relation_scan, AtomicMeasure, DEFAULT_RELATION_CAP,
};
use spectral_multiplicity::permgroup::{
    closure, gltw_subgroup, krot_subgroup, sym_krot_subgroup, Perm, PermSubgroup,
};
use spectral_multiplicity::spectral::{
    self, check_krot, check_sym_krot, check_translate_singularity, check_vproste, cs_criterion,
    fock_multiplicity_set, girsanov_step, matrix_oracle, minimal_m_for_cs,
    nonsimple_counterexample, Caps, DEFAULT_MATRIX_CAP, DEFAULT_TUPLE_CAP,
};
use spectral_multiplicity::suite::{run_criterion, run_suite, SuiteConfig, CRITERIA};
use spectral_multiplicity::{Error, Result};

#[derive(Parser)]
#[command(
    name = "specmult",
    version,
    about = "Exact spectral multiplicity checks for tensor powers of atomic spectral models"
)]
struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long, global = true, default_value_t = DEFAULT_TUPLE_CAP)]
    tuple_cap: u64,
    #[arg(long, global = true, default_value_t = DEFAULT_MATRIX_CAP)]
    matrix_cap: u64,
    /// Seed for randomized inputs; recorded in every report.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

/// Where a measure comes from: a JSON file, or `d` fresh generic atoms.
#[derive(Args)]
struct MeasureSource {
    /// Measure file in the atomic-measure JSON format.
    #[arg(long, conflicts_with = "atoms")]
    measure: Option<PathBuf>,
    /// Number of generic atoms, when no file is given.
    #[arg(long)]
    atoms: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Multiplicity function of the n-th tensor power on G-invariant tensors.
    Multiplicity {
        #[command(flatten)]
        source: MeasureSource,
        #[arg(long)]
        n: usize,
        /// trivial | symmetric | krot:K,M | sym-krot:K,M | gltw:N,M | gens:IMAGES|IMAGES..
        #[arg(long, default_value = "trivial")]
        group: GroupSpec,
        /// Cross-check against projection ranks.
        #[arg(long)]
        oracle: bool,
    },
    /// Generic multiplicity of the m-th tensor power of the k-th convolution power.
    Krot(KrotArgs),
    /// Generic multiplicity of the m-th symmetric power of the k-th convolution power.
    SymKrot(KrotArgs),
    /// Multiplicity set of the symmetric Fock space of the k-th convolution power.
    FockSet {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        max_m: usize,
        #[arg(long)]
        atoms: usize,
    },
    /// Compare (m!)^n (k!)^m with (mk)!.
    CsCriterion {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        n: u64,
    },
    /// Smallest m with a_m > 1.
    CsMinM {
        #[arg(long)]
        k: u64,
        #[arg(long, default_value_t = 20)]
        m_cap: u64,
    },
    /// Singularity of the n-th convolution power and a translate of the m-th.
    TranslateSingular {
        #[command(flatten)]
        source: MeasureSource,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Translation point, e.g. `1/2 * g7`; a fresh generator by default.
        #[arg(long)]
        a: Option<CirclePoint>,
    },
    /// Two-orbit fiber in the symmetric square of sigma + sigma * delta_a.
    Nonsimple {
        #[command(flatten)]
        source: MeasureSource,
        #[arg(long)]
        a: Option<CirclePoint>,
    },
    /// From multiplicity q at level n to q^2 at level 2n.
    Girsanov {
        /// Defaults to the eight-atom measure with two product relations.
        #[command(flatten)]
        source: MeasureSource,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// Level-by-level simplicity of symmetric powers up to k.
    Vproste {
        #[command(flatten)]
        source: MeasureSource,
        #[arg(long)]
        k: usize,
    },
    /// Signed products of at most `degree` atoms that are torsion.
    Relations {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, default_value_t = 3)]
        degree: usize,
    },
    /// Couplings and Markov operators of finite spaces.
    #[command(subcommand)]
    Markov(MarkovCommand),
    /// Run the acceptance battery.
    Suite {
        /// Run a single criterion.
        #[arg(long)]
        only: Option<u8>,
    },
}

#[derive(Args)]
struct KrotArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    m: usize,
    /// Number of generic atoms; defaults to mk + 2.
    #[arg(long)]
    atoms: Option<usize>,
}

#[derive(Subcommand)]
enum MarkovCommand {
    /// Coupling -> operator -> coupling, exactly.
    RoundTrip {
        /// Coupling JSON file; a seeded random coupling otherwise.
        #[arg(long)]
        coupling: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        rows: usize,
        #[arg(long, default_value_t = 3)]
        cols: usize,
    },
    /// Projection of a Markov operator onto factors of a product space.
    LmKk {
        /// Component sizes, e.g. `2,3`.
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        /// Selected components; all selectors when omitted.
        #[arg(long, value_delimiter = ',')]
        selector: Option<Vec<usize>>,
        #[arg(long, default_value_t = 2)]
        rows: usize,
    },
    /// Inclusion-exclusion over a product of finite spaces.
    InclExcl {
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        /// Uniform component measures instead of seeded random ones.
        #[arg(long)]
        uniform: bool,
    },
}

#[derive(Clone)]
enum GroupSpec {
    Trivial,
    Symmetric,
    Krot(usize, usize),
    SymKrot(usize, usize),
    Gltw(usize, usize),
    Gens(Vec<Vec<usize>>),
}

fn pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or("expected two comma-separated integers")?;
    Ok((
        a.trim().parse().map_err(|e| format!("{e}"))?,
        b.trim().parse().map_err(|e| format!("{e}"))?,
    ))
}

impl FromStr for GroupSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "trivial" => Ok(GroupSpec::Trivial),
            "symmetric" => Ok(GroupSpec::Symmetric),
            "krot" => pair(rest).map(|(k, m)| GroupSpec::Krot(k, m)),
            "sym-krot" => pair(rest).map(|(k, m)| GroupSpec::SymKrot(k, m)),
            "gltw" => pair(rest).map(|(n, m)| GroupSpec::Gltw(n, m)),
            "gens" => rest
                .split('|')
                .map(|p| {
                    p.split(',')
                        .map(|x| x.trim().parse::<usize>().map_err(|e| format!("{e}")))
                        .collect()
                })
                .collect::<std::result::Result<_, _>>()
                .map(GroupSpec::Gens),
            _ => Err(format!("unknown group `{s}`")),
        }
    }
}

impl GroupSpec {
    fn build(&self, n: usize, caps: &Caps) -> Result<PermSubgroup> {
        let cap = caps.degree_cap;
        match self {
            GroupSpec::Trivial => Ok(PermSubgroup::trivial(n)),
            GroupSpec::Symmetric => PermSubgroup::symmetric(n, cap),
            GroupSpec::Krot(k, m) => krot_subgroup(*k, *m, cap),
            GroupSpec::SymKrot(k, m) => sym_krot_subgroup(*k, *m, cap),
            GroupSpec::Gltw(a, b) => gltw_subgroup(*a, *b, cap),
            GroupSpec::Gens(images) => {
                let gens = images
                    .iter()
                    .cloned()
                    .map(Perm::new)
                    .collect::<Result<Vec<_>>>()?;
                closure(n, &gens, cap)
            }
        }
    }
}

fn read_measure(path: &Path) -> Result<AtomicMeasure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
    AtomicMeasure::from_json(&text)
}

impl MeasureSource {
    fn load(&self, default_atoms: usize) -> Result<AtomicMeasure> {
        match &self.measure {
            Some(path) => read_measure(path),
            None => generic_measure(
                self.atoms.unwrap_or(default_atoms),
                &mut GeneratorAllocator::new(),
            ),
        }
    }
}

/// A check's verdict and its serializable report.
struct Outcome {
    passed: bool,
    report: Value,
    table: Option<String>,
}

impl Outcome {
    fn new(passed: bool, report: impl Serialize) -> Result<Self> {
        Ok(Outcome {
            passed,
            report: serde_json::to_value(report)?,
            table: None,
        })
    }

    fn with_table(mut self, table: String) -> Self {
        self.table = Some(table);
        self
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Multiplicity { .. } => "multiplicity",
        Command::Krot(_) => "krot",
        Command::SymKrot(_) => "sym-krot",
        Command::FockSet { .. } => "fock-set",
        Command::CsCriterion { .. } => "cs-criterion",
        Command::CsMinM { .. } => "cs-min-m",
        Command::TranslateSingular { .. } => "translate-singular",
        Command::Nonsimple { .. } => "nonsimple",
        Command::Girsanov { .. } => "girsanov",
        Command::Vproste { .. } => "vproste",
        Command::Relations { .. } => "relations",
        Command::Markov(MarkovCommand::RoundTrip { .. }) => "markov round-trip",
        Command::Markov(MarkovCommand::LmKk { .. }) => "markov lm-kk",
        Command::Markov(MarkovCommand::InclExcl { .. }) => "markov incl-excl",
        Command::Suite { .. } => "suite",
    }
}

fn fresh_or(a: &Option<CirclePoint>, sigma: &AtomicMeasure) -> CirclePoint {
    a.clone().unwrap_or_else(|| sigma.fresh_allocator().fresh())
}

fn set_text(values: impl IntoIterator<Item = u64>) -> String {
    format!("{{{}}}", values.into_iter().join(", "))
}

fn run(cli: &Cli, caps: &Caps) -> Result<Outcome> {
    match &cli.command {
        Command::Multiplicity {
            source,
            n,
            group,
            oracle,
        } => {
            let sigma = source.load(2)?;
            let g = group.build(*n, caps)?;
            let report = spectral::multiplicity(&sigma, *n, &g, caps)?;
            let table = report.to_table();
            if *oracle {
                let ranks = matrix_oracle(&sigma, *n, &g, caps)?;
                let agree = ranks == report;
                let out =
                    Outcome::new(agree, json!({ "counting": report, "oracle_agrees": agree }))?;
                Ok(out.with_table(format!("{table}oracle agrees {agree}\n")))
            } else {
                Ok(Outcome::new(true, &report)?.with_table(table))
            }
        }
        Command::Krot(a) | Command::SymKrot(a) => {
            let d = a.atoms.unwrap_or(a.k * a.m + 2);
            let r = if matches!(cli.command, Command::Krot(_)) {
                check_krot(a.k, a.m, d, caps)?
            } else {
                check_sym_krot(a.k, a.m, d, caps)?
            };
            Outcome::new(r.passed, r)
        }
        Command::FockSet { k, max_m, atoms } => {
            let r = fock_multiplicity_set(*k, *max_m, *atoms, caps)?;
            let text = format!(
                "{}\nlevels disjoint {}\n",
                set_text(r.multiplicities.iter().copied()),
                r.levels_disjoint
            );
            Ok(Outcome::new(r.passed, r)?.with_table(text))
        }
        Command::CsCriterion { k, m, n } => {
            let r = cs_criterion(*k, *m, *n)?;
            let text = format!(
                "(m!)^n (k!)^m = {}  (mk)! = {}  holds {}\n",
                r.lhs, r.rhs, r.holds
            );
            Ok(Outcome::new(true, r)?.with_table(text))
        }
        Command::CsMinM { k, m_cap } => {
            let r = minimal_m_for_cs(*k, *m_cap)?;
            let text = format!("m={}, sequence {}\n", r.m, r.sequence.iter().join(", "));
            Ok(Outcome::new(true, r)?.with_table(text))
        }
        Command::TranslateSingular { source, n, m, a } => {
            let sigma = source.load(4)?;
            let a = fresh_or(a, &sigma);
            let singular = check_translate_singularity(&sigma, *n, *m, &a, caps)?;
            Outcome::new(
                true,
                json!({ "n": n, "m": m, "a": a, "singular": singular }),
            )
        }
        Command::Nonsimple { source, a } => {
            let sigma = source.load(2)?;
            let a = fresh_or(a, &sigma);
            let r = nonsimple_counterexample(&sigma, &a, caps)?;
            Outcome::new(r.passed, r)
        }
        Command::Girsanov { source, n } => {
            let sigma = if source.measure.is_none() && source.atoms.is_none() {
                spectral_multiplicity::suite::two_relation_measure()
            } else {
                source.load(4)?
            };
            let r = girsanov_step(&sigma, *n, caps)?;
            Outcome::new(r.passed, r)
        }
        Command::Vproste { source, k } => {
            let sigma = source.load(4)?;
            let r = check_vproste(&sigma, *k, caps)?;
            Outcome::new(r.passed, r)
        }
        Command::Relations { measure, degree } => {
            let sigma = read_measure(measure)?;
            let found = relation_scan(&sigma, *degree, caps.tuple_cap.min(DEFAULT_RELATION_CAP))?;
            let text = if found.is_empty() {
                "no relations\n".to_string()
            } else {
                found.iter().map(|r| format!("{r}\n")).collect()
            };
            let rendered: Vec<String> = found.iter().map(ToString::to_string).collect();
            Ok(
                Outcome::new(true, json!({ "degree": degree, "relations": rendered }))?
                    .with_table(text),
            )
        }
        Command::Markov(m) => run_markov(m, cli.seed, caps),
        Command::Suite { only } => {
            let config = SuiteConfig {
                seed: cli.seed,
                caps: *caps,
            };
            match only {
                Some(id) => {
                    if !CRITERIA.iter().any(|(i, _)| i == id) {
                        return Err(Error::InvalidParameter(format!("no criterion {id}")));
                    }
                    let r = run_criterion(*id, &config);
                    let line = format!("[{}] {:>2} {}\n", verdict(r.passed), r.id, r.name);
                    Ok(Outcome::new(r.passed, r)?.with_table(line))
                }
                None => {
                    let r = run_suite(&config);
                    let text: String = r
                        .criteria
                        .iter()
                        .map(|c| format!("[{}] {:>2} {}\n", verdict(c.passed), c.id, c.name))
                        .collect();
                    Ok(Outcome::new(r.passed, r)?.with_table(text))
                }
            }
        }
    }
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

fn run_markov(cmd: &MarkovCommand, seed: u64, caps: &Caps) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match cmd {
        MarkovCommand::RoundTrip {
            coupling,
            rows,
            cols,
        } => {
            let lambda = match coupling {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| {
                        Error::InvalidParameter(format!("cannot read {}: {e}", path.display()))
                    })?;
                    Coupling::from_json(&text)?
                }
                None => random_coupling(&mut rng, *rows, *cols, 6),
            };
            let phi = markov_from_coupling(&lambda);
            let back = coupling_from_markov(&phi);
            let exact = back == lambda && markov_from_coupling(&back) == phi;
            Outcome::new(
                exact,
                json!({
                    "coupling": lambda.to_json_value(),
                    "operator": phi.to_json_value(),
                    "round_trip_exact": exact,
                }),
            )
        }
        MarkovCommand::LmKk {
            dims,
            selector,
            rows,
        } => {
            let components = dims
                .iter()
                .map(|&d| {
                    if d == 0 {
                        return Err(Error::InvalidParameter(
                            "component sizes must be positive".into(),
                        ));
                    }
                    Ok(random_space(&mut rng, d, 4))
                })
                .collect::<Result<Vec<_>>>()?;
            let factor = FactorStructure::new(components)?;
            if factor.size() as u64 > caps.matrix_cap {
                return Err(Error::MatrixCap {
                    needed: factor.size() as u128,
                    cap: caps.matrix_cap,
                });
            }
            if *rows == 0 {
                return Err(Error::InvalidParameter("rows must be positive".into()));
            }
            let lambda = random_coupling_onto(&mut rng, *rows, &factor.product_space(), 5);
            let phi = markov_from_coupling(&lambda);
            let n = dims.len();
            let selectors: Vec<Vec<usize>> = match selector {
                Some(s) => vec![s.clone()],
                None => (0..=n).flat_map(|l| (0..n).combinations(l)).collect(),
            };
            let mut rows_out = Vec::new();
            let mut passed = true;
            for sel in selectors {
                let check = project_markov(&phi, &factor, &sel)?;
                passed &= check.agree;
                rows_out.push(json!({ "selector": sel, "agree": check.agree }));
            }
            Outcome::new(
                passed,
                json!({ "dims": dims, "coupling": lambda.to_json_value(), "selectors": rows_out }),
            )
        }
        MarkovCommand::InclExcl { dims, uniform } => {
            let factor = if *uniform {
                FactorStructure::uniform(dims)?
            } else {
                let components = dims
                    .iter()
                    .map(|&d| {
                        if d == 0 {
                            Err(Error::InvalidParameter(
                                "component sizes must be positive".into(),
                            ))
                        } else {
                            Ok(random_space(&mut rng, d, 4))
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                FactorStructure::new(components)?
            };
            let r = inclusion_exclusion_identity(&factor, caps.matrix_cap)?;
            Outcome::new(r.passed, r)
        }
    }
}

/// Flattens a JSON report into `path = value` lines.
fn flatten(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let p = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&p, x, out);
            }
        }
        Value::Array(items) if items.iter().any(|x| x.is_object() || x.is_array()) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        _ => {
            out.push_str(prefix);
            out.push_str(" = ");
            out.push_str(&v.to_string());
            out.push('\n');
        }
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|()| out.flush());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let caps = Caps {
        tuple_cap: cli.tuple_cap,
        matrix_cap: cli.matrix_cap,
        ..Caps::default()
    };
    let name = command_name(&cli.command);
    match run(&cli, &caps) {
        Ok(outcome) => {
            match cli.format {
                Format::Json => {
                    let envelope = json!({
                        "command": name,
                        "seed": cli.seed,
                        "caps": caps,
                        "passed": outcome.passed,
                        "report": outcome.report,
                    });
                    emit(&format!(
                        "{}\n",
                        serde_json::to_string_pretty(&envelope).expect("report serializes")
                    ));
                }
                Format::Table => {
                    let body = outcome.table.unwrap_or_else(|| {
                        let mut s = String::new();
                        flatten("", &outcome.report, &mut s);
                        s
                    });
                    emit(&format!(
                        "{body}seed {}  {}\n",
                        cli.seed,
                        verdict(outcome.passed)
                    ));
                }
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
