use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use teamsem::evaluator::{EvalConfig, EvalError, Evaluator, Outcome};
use teamsem::lre::{eval_lre, LreConfig, LreError, LreResult, LreSentence};
use teamsem::oracle::{
    check_equivalence, instances, run_suite, OracleError, Side, SuiteConfig, SuiteReport,
    EQUIVALENCE_SUITES, INVARIANT_SUITES,
};
use teamsem::quantifiers::Registry;
use teamsem::structures::{encode_model, model_to_word, parse_model, word_to_model, Element, Model};
use teamsem::syntax::{Formula, Var, Vocabulary};
use teamsem::teams::Team;
use teamsem::transforms::{
    eliminate_dependence_atoms, star_translate, translate_ty, wrap_ty, ElimOptions, TyParams,
};

#[derive(Parser, Debug)]
#[command(name = "teamsem", version)]
#[command(about = "Team semantics workbench for dependence logic and its relatives")]
struct Cli {
    #[command(flatten)]
    opts: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// Fresh elements tried for each `I` (and for `eval-lre`).
    #[arg(long, global = true, default_value_t = 2)]
    max_bloat: usize,
    /// Largest domain in verification sweeps.
    #[arg(long, global = true, default_value_t = 3)]
    max_size: usize,
    /// Memoize subteam results.
    #[arg(long, global = true, default_value_t = true, action = ArgAction::Set)]
    memo: bool,
    /// Print the witnesses found during evaluation.
    #[arg(long, global = true)]
    trace: bool,
    /// TOML file with additional quantifiers.
    #[arg(long, global = true, value_name = "FILE")]
    quantifiers: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FormulaArg {
    #[arg(long, conflicts_with = "formula_file")]
    formula: Option<String>,
    #[arg(long, value_name = "FILE")]
    formula_file: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a formula on a model and team.
    Eval {
        #[arg(long)]
        model: PathBuf,
        /// Defaults to the team containing only the empty assignment.
        #[arg(long)]
        team: Option<PathBuf>,
        #[command(flatten)]
        formula: FormulaArg,
    },
    /// Evaluate an `lre { ... }` sentence.
    EvalLre {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, conflicts_with = "sentence_file")]
        sentence: Option<String>,
        #[arg(long, value_name = "FILE")]
        sentence_file: Option<PathBuf>,
    },
    /// Apply a translation pass and print the result.
    Translate {
        #[arg(long, value_enum)]
        pass: Pass,
        #[command(flatten)]
        formula: FormulaArg,
        /// Relation symbols, e.g. `P/1,E/2`.
        #[arg(long, default_value = "")]
        vocab: String,
        /// With `--pass ty`, emit the wrapped sentence.
        #[arg(long)]
        wrap: bool,
        /// With `--pass dep-elim`, also rewrite unary dependence atoms.
        #[arg(long)]
        unary: bool,
    },
    /// Print the binary encoding of a model.
    Encode {
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated elements; defaults to the domain order.
        #[arg(long)]
        order: Option<String>,
        /// Comma-separated relation symbols; defaults to name order.
        #[arg(long)]
        symbols: Option<String>,
    },
    /// Convert between a string and its word model.
    Word {
        #[arg(conflicts_with = "model", required_unless_present = "model")]
        word: Option<String>,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Letters of the alphabet; defaults to those of the word.
        #[arg(long)]
        alphabet: Option<String>,
    },
    /// Check two formulas, or a named suite, for equivalence.
    Equiv {
        #[arg(long, conflicts_with_all = ["lhs", "rhs"], required_unless_present_all = ["lhs", "rhs"])]
        suite: Option<String>,
        #[arg(long, requires = "rhs")]
        lhs: Option<String>,
        #[arg(long, requires = "lhs")]
        rhs: Option<String>,
        #[arg(long, default_value = "")]
        vocab: String,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        report: ReportFormat,
    },
    /// Run invariant suites; all of them when no suite is named.
    EnumCheck {
        #[arg(long)]
        suite: Option<String>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        report: ReportFormat,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Pass {
    Ty,
    Star,
    DepElim,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ReportFormat {
    Text,
    Lines,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Yes,
    No,
    Unknown,
}

impl Verdict {
    fn code(self) -> u8 {
        match self {
            Verdict::Yes => 0,
            Verdict::No => 1,
            Verdict::Unknown => 3,
        }
    }
}

/// Failures that mean "no answer within the caps" rather than bad input.
fn is_cap(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        matches!(e.downcast_ref::<EvalError>(), Some(EvalError::CapExceeded(_)))
            || matches!(e.downcast_ref::<LreError>(), Some(LreError::CapExceeded(_)))
            || matches!(
                e.downcast_ref::<OracleError>(),
                Some(OracleError::Eval(EvalError::CapExceeded(_)) | OracleError::CapExceeded { .. })
            )
            || matches!(e.downcast_ref::<OracleError>(), Some(OracleError::OnInstance { error, .. })
                if matches!(**error, OracleError::Eval(EvalError::CapExceeded(_))))
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(v) => ExitCode::from(v.code()),
        Err(e) if is_cap(&e) => {
            println!("unknown");
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn registry(opts: &GlobalOpts) -> Result<Registry> {
    let mut reg = Registry::builtin();
    if let Some(path) = &opts.quantifiers {
        reg.load_toml(&read(path)?)
            .with_context(|| format!("loading {}", path.display()))?;
    }
    Ok(reg)
}

fn eval_config(opts: &GlobalOpts) -> EvalConfig {
    EvalConfig {
        memo: opts.memo,
        trace: opts.trace,
        ..EvalConfig::default()
    }
    .with_budget(opts.max_bloat)
}

fn formula_text(arg: &FormulaArg) -> Result<String> {
    match (&arg.formula, &arg.formula_file) {
        (Some(f), _) => Ok(f.clone()),
        (None, Some(path)) => Ok(read(path)?.trim().to_string()),
        (None, None) => bail!("one of --formula or --formula-file is required"),
    }
}

fn parse(text: &str, vocab: &Vocabulary, reg: &Registry) -> Result<Formula> {
    teamsem::syntax::Parser::new(vocab, reg)
        .parse(text)
        .with_context(|| format!("parsing `{text}`"))
}

fn load_model(path: &Path) -> Result<Model> {
    parse_model(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn split_list(text: &str) -> Vec<&str> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn run(cli: &Cli) -> Result<Verdict> {
    let opts = &cli.opts;
    match &cli.command {
        Command::Eval {
            model,
            team,
            formula,
        } => {
            // Parse every input before evaluating anything.
            let reg = registry(opts)?;
            let model = load_model(model)?;
            let team = match team {
                Some(path) => {
                    Team::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))?
                }
                None => Team::unit(),
            };
            let phi = parse(&formula_text(formula)?, model.vocab(), &reg)?;
            let report = Evaluator::new(reg, eval_config(opts)).team(&model, &team, &phi)?;
            for line in &report.trace {
                println!("# {line}");
            }
            println!("{}", outcome_word(report.outcome));
            if let Some(k) = report.least_bloat {
                println!("least bloat: {k}");
            }
            Ok(match report.outcome {
                Outcome::True => Verdict::Yes,
                Outcome::False => Verdict::No,
                Outcome::Unknown => Verdict::Unknown,
            })
        }
        Command::EvalLre {
            model,
            sentence,
            sentence_file,
        } => {
            let reg = registry(opts)?;
            let model = load_model(model)?;
            let text = match (sentence, sentence_file) {
                (Some(s), _) => s.clone(),
                (None, Some(path)) => read(path)?,
                (None, None) => bail!("one of --sentence or --sentence-file is required"),
            };
            let sentence = LreSentence::parse(&text, model.vocab(), &reg)?;
            let cfg = LreConfig {
                budget: opts.max_bloat,
                ..LreConfig::default()
            };
            match eval_lre(&model, &sentence, &cfg, &reg)? {
                LreResult::Sat {
                    bloat_size,
                    witness,
                } => {
                    println!("sat");
                    println!("least bloat: {bloat_size}");
                    for (name, rel) in &witness {
                        let tuples: Vec<String> = rel
                            .iter()
                            .map(|t| {
                                let parts: Vec<String> = t.iter().map(Element::to_string).collect();
                                format!("({})", parts.join(","))
                            })
                            .collect();
                        println!("{name}: {}", tuples.join(" "));
                    }
                    Ok(Verdict::Yes)
                }
                LreResult::UnsatWithinBudget => {
                    println!("unknown: no witness with at most {} fresh elements", opts.max_bloat);
                    Ok(Verdict::Unknown)
                }
            }
        }
        Command::Translate {
            pass,
            formula,
            vocab,
            wrap,
            unary,
        } => {
            let reg = registry(opts)?;
            let mut vocab = Vocabulary::parse(vocab)?;
            let params = TyParams::default();
            if *pass == Pass::Ty && !vocab.contains(&params.symbol) {
                vocab.insert(&params.symbol, 1)?;
            }
            let phi = parse(&formula_text(formula)?, &vocab, &reg)?;
            match pass {
                Pass::Ty => {
                    let out = if *wrap {
                        wrap_ty(&phi, &params)?
                    } else {
                        translate_ty(&phi, &params)?
                    };
                    println!(
                        "# pass: ty{} symbol={} y={} v={} u={} u'={}",
                        if *wrap { " (wrapped)" } else { "" },
                        params.symbol,
                        params.y,
                        params.v,
                        params.u,
                        params.u_prime
                    );
                    println!("{out}");
                }
                Pass::Star => {
                    let t = star_translate(&phi, &reg)?;
                    println!("# pass: star");
                    println!("# clean: {}", t.clean);
                    for w in &t.warnings {
                        println!("# warning: {w}");
                    }
                    println!("{}", t.output);
                }
                Pass::DepElim => {
                    let out = eliminate_dependence_atoms(&phi, ElimOptions { unary: *unary });
                    println!("# pass: dep-elim unary={unary}");
                    println!("{out}");
                }
            }
            Ok(Verdict::Yes)
        }
        Command::Encode {
            model,
            order,
            symbols,
        } => {
            let model = load_model(model)?;
            let order: Vec<Element> = match order {
                Some(text) => split_list(text)
                    .into_iter()
                    .map(|t| {
                        t.parse::<u32>()
                            .map(Element::Base)
                            .map_err(|_| anyhow!("`{t}` is not an element index"))
                    })
                    .collect::<Result<_>>()?,
                None => model.domain().to_vec(),
            };
            let symbols: Vec<&str> = match symbols {
                Some(text) => split_list(text),
                None => model.vocab().iter().map(|(s, _)| s).collect(),
            };
            println!("{}", encode_model(&model, &order, &symbols)?);
            Ok(Verdict::Yes)
        }
        Command::Word {
            word,
            model,
            alphabet,
        } => {
            let letters = |fallback: &str| -> Vec<char> {
                let mut cs: Vec<char> = alphabet.as_deref().unwrap_or(fallback).chars().collect();
                cs.sort();
                cs.dedup();
                cs
            };
            if let Some(word) = word {
                println!("{}", word_to_model(word, &letters(word))?);
                return Ok(Verdict::Yes);
            }
            let path = model.as_ref().expect("clap requires a word or a model");
            if alphabet.is_none() {
                bail!("--alphabet is required with --model");
            }
            match model_to_word(&load_model(path)?, &letters("")) {
                Some(w) => {
                    println!("{w}");
                    Ok(Verdict::Yes)
                }
                None => {
                    println!("not a word model");
                    Ok(Verdict::No)
                }
            }
        }
        Command::Equiv {
            suite,
            lhs,
            rhs,
            vocab,
            report,
        } => {
            if let Some(name) = suite {
                if !EQUIVALENCE_SUITES.contains(&name.as_str()) {
                    bail!(
                        "`{name}` is not an equivalence suite (expected one of {})",
                        EQUIVALENCE_SUITES.join(", ")
                    );
                }
                return run_named(&[name.as_str()], opts, *report);
            }
            let (lhs, rhs) = (lhs.as_deref().expect("clap"), rhs.as_deref().expect("clap"));
            let reg = registry(opts)?;
            let vocab = Vocabulary::parse(vocab)?;
            let (l, r) = (parse(lhs, &vocab, &reg)?, parse(rhs, &vocab, &reg)?);
            let mut vars: Vec<Var> = l.free_vars().union(&r.free_vars()).cloned().collect();
            vars.sort();
            let insts = instances(&vocab, &vars, opts.max_size)?;
            let ev = Evaluator::new(reg, eval_config(opts));
            let res = check_equivalence(&Side::Team(l), &Side::Team(r), insts, &ev)?;
            let failures = res.counterexample.is_some() as usize;
            match report {
                ReportFormat::Text => println!("{res}"),
                ReportFormat::Lines => {
                    println!("checked={} counterexamples={failures}", res.checked);
                    if let Some(c) = &res.counterexample {
                        for line in c.to_string().lines() {
                            println!("detail: {line}");
                        }
                    }
                }
            }
            Ok(match &res.counterexample {
                None => Verdict::Yes,
                Some(c) if c.lhs_value == Outcome::Unknown || c.rhs_value == Outcome::Unknown => {
                    Verdict::Unknown
                }
                Some(_) => Verdict::No,
            })
        }
        Command::EnumCheck { suite, report } => {
            let names: Vec<&str> = match suite {
                Some(name) if INVARIANT_SUITES.contains(&name.as_str()) => vec![name.as_str()],
                Some(name) => bail!(
                    "`{name}` is not an invariant suite (expected one of {})",
                    INVARIANT_SUITES.join(", ")
                ),
                None => INVARIANT_SUITES.to_vec(),
            };
            run_named(&names, opts, *report)
        }
    }
}

fn outcome_word(o: Outcome) -> &'static str {
    match o {
        Outcome::True => "true",
        Outcome::False => "false",
        Outcome::Unknown => "unknown",
    }
}

fn run_named(names: &[&str], opts: &GlobalOpts, format: ReportFormat) -> Result<Verdict> {
    let cfg = SuiteConfig {
        max_size: opts.max_size,
        budget: opts.max_bloat,
        memo: opts.memo,
    };
    let mut verdict = Verdict::Yes;
    for name in names {
        let r = run_suite(name, &cfg)?;
        print_suite(&r, format);
        if !r.passed() {
            verdict = Verdict::No;
        }
    }
    Ok(verdict)
}

fn print_suite(r: &SuiteReport, format: ReportFormat) {
    match format {
        ReportFormat::Text => println!("{r}"),
        ReportFormat::Lines => {
            println!(
                "suite={} checked={} counterexamples={} status={}",
                r.name,
                r.checked,
                r.failures(),
                if r.passed() { "pass" } else { "fail" }
            );
            for line in r.to_string().lines().skip(1) {
                println!("detail: {line}");
            }
        }
    }
}
