use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tai::formula::{free_vars_ordered, Formula, ParseOptions};
use tai::gen::{self, BodyClass, HeaderFragment};
use tai::laws::{self, Law, LawConfig};
use tai::rewrite::RewriteOptions;
use tai::structure::{format_tuple, parse_structure, FiniteStructure, Relation};
use tai::translate;
use tai::{DerivedKind, Error, Evaluator, DEFAULT_MAX_STEPS};

#[derive(Parser)]
#[command(
    name = "tai",
    version,
    about = "First-order logic with temporally accessible iteration"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a query and print the relation it defines.
    Eval(QueryArgs),
    /// Translate a query into a temporal-free formula.
    Translate {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, value_enum)]
        to: Target,
        /// Evaluate input and output on the structure and print MATCH or MISMATCH.
        #[arg(long)]
        check: bool,
    },
    /// Run a seeded property suite.
    Check {
        /// Law name, or `all`.
        #[arg(long)]
        law: String,
        #[command(flatten)]
        fuzz: FuzzArgs,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: usize,
        #[arg(long, value_enum, hide = true)]
        mutant: Option<Mutant>,
    },
    /// Generate structure and formula pairs.
    Fuzz {
        #[command(flatten)]
        fuzz: FuzzArgs,
        /// Directory for `NNN.structure` / `NNN.formula` files; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    structure: PathBuf,
    #[arg(
        long,
        conflicts_with = "query_file",
        required_unless_present = "query_file"
    )]
    query: Option<String>,
    #[arg(long)]
    query_file: Option<PathBuf>,
    /// Column order for the free variables, e.g. `z1,z2`.
    #[arg(long, value_delimiter = ',')]
    vars: Option<Vec<String>>,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    max_steps: usize,
    #[arg(long, value_enum, default_value_t = Format::Tuples)]
    format: Format,
}

#[derive(Args)]
struct FuzzArgs {
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    max_domain: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Pfp,
    Lfp,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Tuples,
    Counts,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mutant {
    /// Expand derived headers with `F` and `G` exchanged.
    SwapFg,
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

fn io_error(path: &std::path::Path, e: std::io::Error) -> Failure {
    Error::Io(format!("{}: {e}", path.display())).into()
}

struct Loaded {
    structure: FiniteStructure,
    formula: Formula,
    vars: Vec<String>,
}

impl QueryArgs {
    fn load(&self) -> Result<Loaded, Failure> {
        let text = fs::read_to_string(&self.structure).map_err(|e| io_error(&self.structure, e))?;
        let structure = parse_structure(&text)?;
        let query = match (&self.query, &self.query_file) {
            (Some(q), _) => q.clone(),
            (None, Some(p)) => fs::read_to_string(p).map_err(|e| io_error(p, e))?,
            (None, None) => unreachable!("clap requires one of them"),
        };
        // Translated output names auxiliary symbols with the reserved
        // prefix; accepting it here lets such output be evaluated again.
        let formula = ParseOptions::with_signature(structure.signature())
            .allow_reserved(true)
            .parse(&query)?;
        let vars = self
            .vars
            .clone()
            .unwrap_or_else(|| free_vars_ordered(&formula));
        Ok(Loaded {
            structure,
            formula,
            vars,
        })
    }
}

fn print_relation(r: &Relation, format: Format) {
    match format {
        Format::Tuples => {
            for t in r.iter() {
                println!("{}", format_tuple(t));
            }
        }
        Format::Counts => println!("{}", r.len()),
    }
}

fn cmd_eval(args: &QueryArgs) -> Result<(), Failure> {
    let l = args.load()?;
    let ev = Evaluator::new(&l.structure).with_max_steps(args.max_steps);
    let r = ev.query(&l.formula, &l.vars)?;
    print_relation(&r, args.format);
    Ok(())
}

fn cmd_translate(args: &QueryArgs, to: Target, check: bool) -> Result<(), Failure> {
    let l = args.load()?;
    let ev = Evaluator::new(&l.structure).with_max_steps(args.max_steps);
    let got = match to {
        Target::Pfp => {
            let g = translate::translate_to_pfp(&l.formula)?;
            println!("{g}");
            if check {
                Some(ev.query(&g, &l.vars)?)
            } else {
                None
            }
        }
        Target::Lfp => {
            let (g, aux) = translate::translate_monotone_to_lfp(&l.formula)?;
            println!("{g}");
            let aug = translate::augment_structure(&l.structure, &aux, args.max_steps)?;
            for name in aux.names() {
                let r = aug.relation(name).expect("augmented");
                println!("rel {name}/{} = {}", r.arity(), r.to_block());
            }
            if check {
                Some(translate::eval_with_aux(&l.structure, &g, &l.vars, &aux)?)
            } else {
                None
            }
        }
    };
    if let Some(got) = got {
        let want = ev.query(&l.formula, &l.vars)?;
        println!("{}", if got == want { "MATCH" } else { "MISMATCH" });
    }
    Ok(())
}

fn cmd_check(
    law: &str,
    fuzz: &FuzzArgs,
    max_steps: usize,
    mutant: Option<Mutant>,
) -> Result<(), Failure> {
    let selected: Vec<Law> = if law == "all" {
        Law::ALL.to_vec()
    } else {
        let l = Law::from_name(law).ok_or_else(|| Failure {
            code: 2,
            message: format!(
                "unknown law `{law}`; expected one of: all, {}",
                Law::ALL.map(Law::name).join(", ")
            ),
        })?;
        vec![l]
    };
    let cfg = LawConfig {
        count: fuzz.count,
        seed: fuzz.seed,
        max_domain: fuzz.max_domain,
        max_steps,
        rewrite: RewriteOptions {
            swap_eventually_always: matches!(mutant, Some(Mutant::SwapFg)),
        },
    };
    let mut failed = false;
    for l in selected {
        let report = laws::run(l, &cfg);
        println!("{report}");
        failed |= !report.ok();
    }
    if failed {
        return Err(Failure {
            code: 4,
            message: "law violated".into(),
        });
    }
    Ok(())
}

/// One generated instance: a structure and a query that type-checks on it.
fn fuzz_instance(rng: &mut gen::Rng8, max_domain: usize) -> (FiniteStructure, Formula) {
    use rand::Rng;
    let s = gen::structure(rng, max_domain);
    let f = match rng.gen_range(0..3) {
        0 => {
            let class = [
                BodyClass::Positive,
                BodyClass::Negative,
                BodyClass::Arbitrary,
            ][rng.gen_range(0..3)];
            let sys = gen::system(rng, class);
            let kind = DerivedKind::ALL[rng.gen_range(0..DerivedKind::ALL.len())];
            let kind = match (kind, class) {
                (DerivedKind::Lfp, BodyClass::Positive)
                | (DerivedKind::OpMu | DerivedKind::OpNu, BodyClass::Negative) => kind,
                (DerivedKind::Lfp | DerivedKind::OpMu | DerivedKind::OpNu, _) => DerivedKind::Ifp,
                _ => kind,
            };
            gen::derived_query(kind, sys).0
        }
        1 => {
            let sys = gen::simultaneous_system(rng);
            let h = gen::header(rng, &sys, HeaderFragment::Full, 3);
            gen::iteration_query(h, sys).0
        }
        _ => {
            let sys = gen::system(rng, BodyClass::Arbitrary);
            let h = gen::header(rng, &sys, HeaderFragment::EventuallyAlways, 3);
            gen::iteration_query(h, sys).0
        }
    };
    (s, f)
}

fn cmd_fuzz(fuzz: &FuzzArgs, out: Option<&std::path::Path>) -> Result<(), Failure> {
    let mut rng = gen::rng(fuzz.seed);
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    for i in 0..fuzz.count {
        let (s, f) = fuzz_instance(&mut rng, fuzz.max_domain);
        match out {
            Some(dir) => {
                let sp = dir.join(format!("{i:03}.structure"));
                fs::write(&sp, s.to_string()).map_err(|e| io_error(&sp, e))?;
                let fp = dir.join(format!("{i:03}.formula"));
                fs::write(&fp, format!("{f}\n")).map_err(|e| io_error(&fp, e))?;
            }
            None => {
                println!("# instance {i}");
                print!("{s}");
                println!("# query: {f}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Eval(q) => cmd_eval(q),
        Command::Translate { query, to, check } => cmd_translate(query, *to, *check),
        Command::Check {
            law,
            fuzz,
            max_steps,
            mutant,
        } => cmd_check(law, fuzz, *max_steps, *mutant),
        Command::Fuzz { fuzz, out } => cmd_fuzz(fuzz, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if f.code != 4 {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
