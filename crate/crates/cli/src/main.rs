use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use embedgame::classical::{
    dependent_part, entropy_report, is_trivial_primitive, DependentPartMap, EntropyReport,
    Primitive, PrimitiveJson,
};
use embedgame::discrimination::{bound_table, bound_table_csv};
use embedgame::embedding::{
    check_correct, classify_embedding, find_comparison_pair, ComparisonPair,
    EmbeddingClassification, EmbeddingJson, RegularEmbedding,
};
use embedgame::game::{
    always_same_strategy, coherent_optimal_comparison, evaluate_strategy, game_csv,
    game_csv_header, gap_certificate, helstrom_product_strategy, separable_product_strategy,
    separable_search, simulate_protocol, ComparisonStates, ComparisonStrategy, GameConfig,
    GameRow, GapCertificate, PayoffReport, TAU_DOMAIN,
};
use embedgame::quantum::PureState;
use serde::Serialize;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "embedgame", version, about = "Primitive analysis, embeddings and the state-comparison game")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Args)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum StrategyName {
    Coherent,
    Product,
    Helstrom,
    Blind,
}

#[derive(Subcommand)]
enum Command {
    /// Entropies, dependent parts and the triviality verdict of a primitive.
    Primitive {
        path: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Regular embedding of a primitive with its classification.
    Embed {
        path: PathBuf,
        /// Phase table, rows separated by ';', e.g. "0,0;0,pi".
        #[arg(long)]
        phases: Option<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Error/conclusive tradeoff table.
    Bounds {
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.3, 0.5, 0.7, 0.9])]
        tau: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Payoffs of comparison strategies over a tau grid.
    Game {
        #[arg(long, value_delimiter = ',', required = true)]
        tau: Vec<f64>,
        /// Penalty; defaults to the certificate value for each tau.
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, default_value_t = 64)]
        m: usize,
        /// Monte Carlo trials per strategy; 0 reports analytic values only.
        #[arg(long, default_value_t = 0)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', value_enum, default_values_t = vec![StrategyName::Coherent, StrategyName::Product])]
        strategies: Vec<StrategyName>,
        #[command(flatten)]
        output: Output,
    },
    /// Gap certificates plus separable search for each tau.
    Certify {
        #[arg(long, value_delimiter = ',', required = true)]
        tau: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
}

enum Failure {
    Usage(String),
    Certificate,
}

impl From<embedgame::Error> for Failure {
    fn from(e: embedgame::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn emit(output: &Output, text: &str) -> Result<(), Failure> {
    match &output.out {
        Some(path) => fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_primitive(path: &PathBuf) -> Result<Primitive, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok(Primitive::from_json_str(&text)?)
}

fn check_grid(taus: &[f64]) -> Result<(), Failure> {
    if taus.is_empty() {
        return Err(usage("empty tau grid"));
    }
    for &t in taus {
        if !(TAU_DOMAIN.0..=TAU_DOMAIN.1).contains(&t) {
            return Err(usage(format!(
                "tau = {t} outside [{}, {}]",
                TAU_DOMAIN.0, TAU_DOMAIN.1
            )));
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| usage(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct PrimitiveReport {
    primitive: PrimitiveJson,
    entropies: EntropyReport,
    dependent_part_x: DependentPartMap,
    dependent_part_y: DependentPartMap,
    trivial: bool,
}

fn cmd_primitive(path: &PathBuf, output: &Output) -> Result<(), Failure> {
    let p = read_primitive(path)?;
    let report = PrimitiveReport {
        primitive: p.to_json(),
        entropies: entropy_report(&p),
        dependent_part_x: dependent_part(&p),
        dependent_part_y: dependent_part(&p.transposed()),
        trivial: is_trivial_primitive(&p)?,
    };
    let text = match output.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&report)?,
        Format::Text | Format::Csv => {
            let e = &report.entropies;
            format!(
                "H(X) = {}\nH(Y) = {}\nH(X|Y) = {}\nH(Y|X) = {}\nI(X;Y) = {}\nH(X↘Y|Y) = {}\nH(Y↘X|X) = {}\nclasses of X↘Y: {}\nclasses of Y↘X: {}\nverdict: {}\n",
                e.H_X,
                e.H_Y,
                e.H_X_given_Y,
                e.H_Y_given_X,
                e.I_XY,
                e.H_dep_XY_given_Y,
                e.H_dep_YX_given_X,
                report.dependent_part_x.class_count(),
                report.dependent_part_y.class_count(),
                if report.trivial { "trivial" } else { "non-trivial" }
            )
        }
    };
    emit(output, &text)
}

fn parse_phases(spec: &str) -> Result<Vec<Vec<f64>>, Failure> {
    spec.split(';')
        .map(|row| {
            row.split(',')
                .map(|tok| {
                    let t = tok.trim();
                    let (sign, body) = match t.strip_prefix('-') {
                        Some(rest) => (-1.0, rest),
                        None => (1.0, t),
                    };
                    let value = match body {
                        "pi" => std::f64::consts::PI,
                        other => other
                            .parse::<f64>()
                            .map_err(|_| usage(format!("bad phase {t:?}")))?,
                    };
                    Ok(sign * value)
                })
                .collect()
        })
        .collect()
}

#[derive(Serialize)]
struct EmbedReport {
    embedding: EmbeddingJson,
    correct: bool,
    classification: EmbeddingClassification,
    comparison_pair: Option<ComparisonPair>,
}

fn cmd_embed(path: &PathBuf, phases: Option<&str>, output: &Output) -> Result<(), Failure> {
    let p = read_primitive(path)?;
    let phases = match phases {
        Some(s) => parse_phases(s)?,
        None => vec![vec![0.0; p.y_len()]; p.x_len()],
    };
    let e = RegularEmbedding::with_phases(&p, phases)?;
    let report = EmbedReport {
        embedding: e.to_json(),
        correct: check_correct(&e, &p)?,
        classification: classify_embedding(&e)?,
        comparison_pair: find_comparison_pair(&e).ok(),
    };
    let text = match output.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&report)?,
        Format::Text | Format::Csv => {
            let pair = match report.comparison_pair {
                Some(pair) => format!("x{} vs x{}, tau = {}", pair.x0, pair.x1, pair.tau),
                None => "none".into(),
            };
            format!(
                "correct: {}\nS(X↘Y|B) = {}\nS(Y↘X|A) = {}\nverdict: {:?}\ncomparison pair: {pair}\n",
                report.correct,
                report.classification.s_dep_xy_given_b,
                report.classification.s_dep_yx_given_a,
                report.classification.verdict
            )
        }
    };
    emit(output, &text)
}

fn cmd_bounds(taus: &[f64], steps: usize, output: &Output) -> Result<(), Failure> {
    if taus.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(usage("tau must lie in (0, 1)"));
    }
    if steps == 0 {
        return Err(usage("steps must be positive"));
    }
    let rows = bound_table(taus, steps)?;
    let text = match output.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&rows)?,
        _ => bound_table_csv(&rows),
    };
    emit(output, &text)
}

/// Embedding with uniform `X` over `{0, 1}` whose Bob states are the
/// canonical pair at overlap `tau`.
fn canonical_embedding(st: &ComparisonStates) -> Result<RegularEmbedding, Failure> {
    let p = Primitive::from_table(vec![
        vec![0.5, 0.0],
        vec![0.5 * st.tau * st.tau, 0.5 * (1.0 - st.tau * st.tau)],
    ])?;
    Ok(RegularEmbedding::from_states(
        &p,
        vec![st.psi(0).clone(), st.psi(1).clone()],
    )?)
}

fn build_strategy(name: StrategyName, st: &ComparisonStates) -> Result<ComparisonStrategy, Failure> {
    let (a, b): (&PureState, &PureState) = (st.psi(0), st.psi(1));
    Ok(match name {
        StrategyName::Coherent => coherent_optimal_comparison(a, b)?,
        StrategyName::Product => separable_product_strategy(a, b)?,
        StrategyName::Helstrom => helstrom_product_strategy(a, b)?,
        StrategyName::Blind => always_same_strategy(st.local_dim())?,
    })
}

struct GameArgs<'a> {
    taus: &'a [f64],
    c: Option<f64>,
    m: usize,
    trials: u64,
    seed: u64,
    strategies: &'a [StrategyName],
}

#[derive(Serialize)]
struct ScanRow {
    #[serde(flatten)]
    row: GameRow,
    strategy: String,
    k: f64,
    f_tau: f64,
    c_star: f64,
    version: &'static str,
}

fn cmd_game(args: GameArgs<'_>, output: &Output) -> Result<(), Failure> {
    check_grid(args.taus)?;
    if let Some(c) = args.c {
        if !(c > 0.0 && c.is_finite()) {
            return Err(usage(format!("c = {c} must be positive")));
        }
    }
    if args.strategies.is_empty() {
        return Err(usage("no strategies selected"));
    }
    let mut rows = Vec::new();
    for &tau in args.taus {
        let cert = gap_certificate(tau)?;
        let c = args.c.unwrap_or(cert.c_star);
        let st = ComparisonStates::canonical(tau)?;
        for &name in args.strategies {
            let s = build_strategy(name, &st)?;
            let mut push = |report: PayoffReport| {
                rows.push(ScanRow {
                    row: GameRow {
                        tau,
                        c,
                        strategy_kind: s.kind.name().into(),
                        report,
                        seed: args.seed,
                    },
                    strategy: s.label.clone(),
                    k: cert.k,
                    f_tau: cert.f_tau,
                    c_star: cert.c_star,
                    version: VERSION,
                })
            };
            push(evaluate_strategy(&s, &st, c)?);
            if args.trials > 0 {
                let e = canonical_embedding(&st)?;
                let cfg = GameConfig {
                    x0: 0,
                    x1: 1,
                    tau,
                    c,
                    m: args.m,
                    seed: args.seed,
                    trials: args.trials,
                };
                push(simulate_protocol(&e, &cfg, &s)?);
            }
        }
    }
    let text = match output.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&rows)?,
        _ => {
            let mut out = format!("{},k,f_tau,c_star,strategy\n", game_csv_header());
            for r in &rows {
                let line = game_csv(std::slice::from_ref(&r.row));
                let body = line.lines().nth(1).expect("one data row");
                out.push_str(&format!("{body},{},{},{},{}\n", r.k, r.f_tau, r.c_star, r.strategy));
            }
            out
        }
    };
    emit(output, &text)
}

#[derive(Serialize)]
struct CertifyEntry {
    tau: f64,
    certificate: GapCertificate,
    search_best: PayoffReport,
    search_pass: bool,
    pass: bool,
}

#[derive(Serialize)]
struct CertifyReport {
    seed: u64,
    budget: usize,
    version: &'static str,
    results: Vec<CertifyEntry>,
    all_pass: bool,
}

fn cmd_certify(taus: &[f64], budget: usize, seed: u64, output: &Output) -> Result<(), Failure> {
    check_grid(taus)?;
    if budget == 0 {
        return Err(usage("budget must be positive"));
    }
    let mut results = Vec::new();
    for &tau in taus {
        let certificate = gap_certificate(tau)?;
        let search = separable_search(tau, certificate.c_star, budget, seed)?;
        let search_pass = search.best.payoff <= certificate.threshold;
        results.push(CertifyEntry {
            tau,
            pass: certificate.verified && search_pass,
            certificate,
            search_best: search.best,
            search_pass,
        });
    }
    let all_pass = results.iter().all(|r| r.pass);
    let report = CertifyReport {
        seed,
        budget,
        version: VERSION,
        results,
        all_pass,
    };
    let text = match output.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&report)?,
        _ => {
            let mut out = String::from(
                "tau,k,f_tau,c_star,b0,b1,b2_max,threshold,verified,search_best,search_pass,seed,version\n",
            );
            for r in &report.results {
                let c = &r.certificate;
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    r.tau,
                    c.k,
                    c.f_tau,
                    c.c_star,
                    c.b0,
                    c.b1,
                    c.b2_max,
                    c.threshold,
                    c.verified,
                    r.search_best.payoff,
                    r.search_pass,
                    seed,
                    VERSION
                ));
            }
            out
        }
    };
    emit(output, &text)?;
    for r in &report.results {
        eprintln!(
            "tau {}: certificate {}, search best {:.6} vs p_max - f {:.6}",
            r.tau,
            if r.certificate.verified { "verified" } else { "NOT verified" },
            r.search_best.payoff,
            r.certificate.threshold
        );
    }
    if all_pass {
        Ok(())
    } else {
        Err(Failure::Certificate)
    }
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("EMBEDGAME_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| usage(format!("EMBEDGAME_THREADS={v:?} is not a positive integer")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Primitive { path, output } => cmd_primitive(&path, &output),
        Command::Embed {
            path,
            phases,
            output,
        } => cmd_embed(&path, phases.as_deref(), &output),
        Command::Bounds { tau, steps, output } => cmd_bounds(&tau, steps, &output),
        Command::Game {
            tau,
            c,
            m,
            trials,
            seed,
            strategies,
            output,
        } => cmd_game(
            GameArgs {
                taus: &tau,
                c,
                m,
                trials,
                seed,
                strategies: &strategies,
            },
            &output,
        ),
        Command::Certify {
            tau,
            budget,
            seed,
            output,
        } => cmd_certify(&tau, budget, seed, &output),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Certificate) => {
            eprintln!("error: certification failed");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
