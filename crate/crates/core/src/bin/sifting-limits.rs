use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use sifting_limits::dde_oracle::{solve_j, DEFAULT_TOL};
use sifting_limits::main_term::{LinearWeight, QuadratureRule};
use sifting_limits::optimizer::{table2_row, Optimizer, DEFAULT_U_TOL, KAPPA_RANGE};
use sifting_limits::output::{EvalKind, Format, OutputRecord, Params, Row};
use sifting_limits::{ChainParameters, Error, SieveEvaluator};

/// Sieve functions, main terms and sifting limits of the linear-weight
/// lower-bound sieve in dimensions 2 to 10.
#[derive(Debug, Parser)]
#[command(name = "sifting-limits", version)]
struct Cli {
    /// Truncation order N of every power series.
    #[arg(long, global = true, default_value_t = ChainParameters::DEFAULT_TRUNCATION)]
    truncation: usize,
    /// Index of the last circle in each chain.
    #[arg(long, global = true, default_value_t = ChainParameters::DEFAULT_NU_MAX)]
    circles: usize,
    /// Gauss–Legendre nodes per panel.
    #[arg(long, global = true, default_value_t = sifting_limits::main_term::DEFAULT_PANEL_ORDER)]
    panel_order: usize,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    /// Leave the timing field out, making output byte-for-byte reproducible.
    #[arg(long, global = true)]
    no_timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    J,
    Jprime,
    MainTerm,
}

fn kappa_arg() -> clap::builder::RangedI64ValueParser<u32> {
    clap::value_parser!(u32).range(*KAPPA_RANGE.start() as i64..=*KAPPA_RANGE.end() as i64)
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate j, j' or the main term at one point.
    Eval {
        #[arg(value_enum)]
        kind: KindArg,
        #[arg(long, value_parser = kappa_arg())]
        kappa: u32,
        #[arg(long, allow_negative_numbers = true)]
        u: f64,
        /// Shift of P(w) = w + a for the main term; optimized when omitted.
        #[arg(long)]
        a: Option<f64>,
        /// Also report the difference from the method-of-steps solution.
        #[arg(long)]
        oracle: bool,
    },
    /// Re-evaluate the published rows and search for the limits.
    Table2 {
        #[arg(long, value_parser = kappa_arg())]
        kappa: Option<u32>,
        #[arg(long, default_value_t = DEFAULT_U_TOL)]
        u_tol: f64,
    },
    /// Smallest u with a certified positive main term, and beta = 2u + 1.
    FindBeta {
        #[arg(long, value_parser = kappa_arg())]
        kappa: u32,
        #[arg(long, default_value_t = DEFAULT_U_TOL)]
        u_tol: f64,
    },
}

enum Failure {
    Library(Error),
    Reproduction(Box<OutputRecord>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::Library(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) | Error::InvalidParameter(_) | Error::Format(_) => 2,
        Error::PrecisionFault { .. }
        | Error::NoCrossing { .. }
        | Error::Tolerance { .. }
        | Error::Quadrature { .. } => 3,
    }
}

fn run(cli: &Cli, command_line: String) -> Result<OutputRecord, Failure> {
    let params = ChainParameters::new(cli.truncation, cli.circles)?;
    let rule = QuadratureRule::new(cli.panel_order)?;
    let mut record = OutputRecord {
        command: command_line,
        params: Params {
            kappa: None,
            truncation: cli.truncation,
            nu_max: cli.circles,
            panel_order: cli.panel_order,
            u_tol: None,
        },
        rows: Vec::new(),
        timing_ms: None,
    };

    match cli.command {
        Command::Eval { kind, kappa, u, a, oracle } => {
            record.params.kappa = Some(vec![kappa]);
            record.rows.push(eval_row(kind, kappa, u, a, oracle, params, rule)?);
        }
        Command::FindBeta { kappa, u_tol } => {
            record.params.kappa = Some(vec![kappa]);
            record.params.u_tol = Some(u_tol);
            let row = Optimizer::new(kappa, params, rule)?.find_beta(u_tol)?;
            record.rows.push(Row::Limit(row.into()));
        }
        Command::Table2 { kappa, u_tol } => {
            let kappas: Vec<u32> = match kappa {
                Some(k) => vec![k],
                None => KAPPA_RANGE.collect(),
            };
            record.params.kappa = Some(kappas.clone());
            record.params.u_tol = Some(u_tol);
            let rows = std::thread::scope(|scope| {
                let handles: Vec<_> = kappas
                    .iter()
                    .map(|&k| {
                        let (params, rule) = (params.clone(), rule.clone());
                        scope.spawn(move || table2_row(k, params, rule, u_tol))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("table row worker panicked"))
                    .collect::<Result<Vec<_>, _>>()
            })?;
            let failed = rows.iter().any(|r| !r.reproduced());
            record.rows = rows.iter().map(Row::table2).collect();
            if failed {
                return Err(Failure::Reproduction(Box::new(record)));
            }
        }
    }
    Ok(record)
}

fn eval_row(
    kind: KindArg,
    kappa: u32,
    u: f64,
    a: Option<f64>,
    oracle: bool,
    params: ChainParameters,
    rule: QuadratureRule,
) -> Result<Row, Error> {
    if !u.is_finite() {
        return Err(Error::Domain(format!("u = {u} is not finite")));
    }
    let (kind, a, value, bound, oracle_delta) = match kind {
        KindArg::J | KindArg::Jprime => {
            let ev = SieveEvaluator::new(kappa, params)?;
            let prime = matches!(kind, KindArg::Jprime);
            let v = if prime { ev.eval_j_prime(u)? } else { ev.eval_j(u)? };
            let delta = if oracle {
                let sol = solve_j(kappa, u.max(1.0), DEFAULT_TOL)?;
                let reference = if prime { sol.j_prime(u)? } else { sol.j(u)? };
                Some(v.value_f64() - reference)
            } else {
                None
            };
            let kind = if prime { EvalKind::Jprime } else { EvalKind::J };
            (kind, None, v.value_f64(), v.bound, delta)
        }
        KindArg::MainTerm => {
            let opt = Optimizer::new(kappa, params, rule)?;
            let row = match a {
                Some(a) => opt.evaluate(u, LinearWeight::new(a)?.a())?,
                None => opt.optimize(u)?.0,
            };
            (EvalKind::MainTerm, Some(row.a), row.i_tilde, row.err, None)
        }
    };
    Ok(Row::Eval { kind, kappa, u, a, value, bound, oracle_delta })
}

fn main() -> ExitCode {
    let started = Instant::now();
    let cli = Cli::parse();
    let command_line = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    let format = match cli.format {
        FormatArg::Text => Format::Text,
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    let timing = |mut record: OutputRecord| {
        if !cli.no_timing {
            record.timing_ms = Some(started.elapsed().as_secs_f64() * 1e3);
        }
        record
    };
    let emit = |record: &OutputRecord| match record.render(format) {
        Ok(text) => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            true
        }
        Err(e) => {
            eprintln!("error: {e}");
            false
        }
    };

    match run(&cli, command_line) {
        Ok(record) => {
            if emit(&timing(record)) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(Failure::Reproduction(record)) => {
            emit(&timing(*record));
            eprintln!("error: a published row did not reproduce with I > err");
            ExitCode::from(4)
        }
        Err(Failure::Library(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
