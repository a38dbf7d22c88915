//! Command-line reports for star-network scenarios: inequality values,
//! brute-force classical bounds, certificate verification, Bell
//! correspondence, visibility sweeps, and the raw encoding tables.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use starlocal::algebra::{build_realization_with_cap, DEFAULT_DIM_CAP};
use starlocal::classical::{enumerate_valid_strategies, eta_max};
use starlocal::correlations::{bipartite_bell_value, delta_value, werner_delta};
use starlocal::encoding::EncodingTable;
use starlocal::error::Error as LibError;
use starlocal::verification::{gamma_probe, self_test_report, Tolerances};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

const SCHEMA_VERSION: &str = "v1";
const DIM_CAP_ENV: &str = "STARLOCAL_DIM_CAP";

const EXIT_OK: u8 = 0;
const EXIT_VALIDATION: u8 = 2;
const EXIT_RESOURCE: u8 = 3;
const EXIT_BAD_FLAGS: u8 = 4;

#[derive(Parser)]
#[command(name = "starlocal", version, about = "Star-network n-locality toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Scenario report: correlators, inequality value, certificate battery
    Report(ScenarioArgs),
    /// Brute-force classical bound with strategy census and witness
    #[command(name = "classical-bound")]
    ClassicalBound(ScenarioArgs),
    /// Certificate verification; exits 2 when any check fails
    Verify(ScenarioArgs),
    /// Per-source two-party Bell values and the correspondence gap
    Bell(ScenarioArgs),
    /// Visibility sweep of the inequality value (plot data)
    Sweep(ScenarioArgs),
    /// Encoding table: labels, sign grid, constraints, Gram matrix
    Encoding(ScenarioArgs),
}

impl Cmd {
    fn args(&self) -> &ScenarioArgs {
        match self {
            Cmd::Report(a)
            | Cmd::ClassicalBound(a)
            | Cmd::Verify(a)
            | Cmd::Bell(a)
            | Cmd::Sweep(a)
            | Cmd::Encoding(a) => a,
        }
    }
}

#[derive(Args)]
struct ScenarioArgs {
    /// Number of central-party inputs (edge parties get 2^(m-1))
    #[arg(long, default_value_t = 3)]
    m: usize,

    /// Number of edge parties / independent sources
    #[arg(long, default_value_t = 1)]
    n: usize,

    /// Seed for randomized probes
    #[arg(long, default_value_t = 7)]
    seed: u64,

    /// Randomized probe trials (verify)
    #[arg(long, default_value_t = 100)]
    trials: usize,

    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Serialize)]
struct ConfigEcho {
    m: usize,
    n: usize,
    seed: u64,
    trials: usize,
    dim_cap: usize,
}

#[derive(Serialize)]
struct Envelope<T: Serialize> {
    schema_version: &'static str,
    tool_version: &'static str,
    command: &'static str,
    config: ConfigEcho,
    tolerances: Tolerances,
    #[serde(flatten)]
    body: T,
}

fn envelope<T: Serialize>(command: &'static str, config: ConfigEcho, body: T) -> Envelope<T> {
    Envelope {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        tolerances: Tolerances::default(),
        body,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_BAD_FLAGS,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                LibError::Resource(_) => EXIT_RESOURCE,
                _ => EXIT_BAD_FLAGS,
            };
            ExitCode::from(code)
        }
    }
}

fn dim_cap() -> usize {
    std::env::var(DIM_CAP_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_DIM_CAP)
}

fn run(cli: &Cli) -> Result<u8, LibError> {
    let args = cli.command.args();
    let cap = dim_cap();
    let config = ConfigEcho {
        m: args.m,
        n: args.n,
        seed: args.seed,
        trials: args.trials,
        dim_cap: cap,
    };

    if args.format == Format::Csv && !matches!(cli.command, Cmd::Sweep(_)) {
        return Err(LibError::Domain(
            "csv output is only available for sweep".into(),
        ));
    }

    let (output, code) = match &cli.command {
        Cmd::Report(a) => (cmd_report(a, config, cap)?, EXIT_OK),
        Cmd::ClassicalBound(a) => (cmd_classical_bound(a, config)?, EXIT_OK),
        Cmd::Verify(a) => cmd_verify(a, config, cap)?,
        Cmd::Bell(a) => (cmd_bell(a, config, cap)?, EXIT_OK),
        Cmd::Sweep(a) => (cmd_sweep(a, config, cap)?, EXIT_OK),
        Cmd::Encoding(a) => (cmd_encoding(a)?, EXIT_OK),
    };

    if let Some(path) = &args.out {
        let mut f = std::fs::File::create(path)
            .map_err(|e| LibError::Domain(format!("cannot write {}: {e}", path.display())))?;
        f.write_all(output.as_bytes())
            .map_err(|e| LibError::Domain(format!("cannot write {}: {e}", path.display())))?;
    } else {
        print!("{output}");
    }
    Ok(code)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    s.push('\n');
    s
}

fn sign_grid(table: &EncodingTable) -> String {
    let mut out = String::new();
    for i in 0..table.m() {
        out.push_str(&format!("  i={:<2} ", i + 1));
        for x in 0..table.n_inputs() {
            out.push(if table.sign(i, x) == 1 { '+' } else { '-' });
            out.push(' ');
        }
        out.push('\n');
    }
    out
}

fn constraint_grid(table: &EncodingTable) -> String {
    let mut out = String::new();
    for l in 0..table.n_constraints() {
        out.push_str(&format!("  s={} ", table.constraints()[l]));
        for x in 0..table.n_inputs() {
            out.push(if table.constraint_sign(l, x) == 1 { '+' } else { '-' });
            out.push(' ');
        }
        out.push('\n');
    }
    out
}

fn cmd_report(args: &ScenarioArgs, config: ConfigEcho, cap: usize) -> Result<String, LibError> {
    let table = EncodingTable::new(args.m)?;
    let real = build_realization_with_cap(args.n, args.m, cap)?;
    let scenario = delta_value(&real, &table)?;
    let verification = self_test_report(&real, &table)?;

    #[derive(Serialize)]
    struct Body {
        scenario: starlocal::ScenarioValue,
        verification: starlocal::VerificationReport,
    }

    match args.format {
        Format::Json => Ok(to_json(&envelope(
            "report",
            config,
            Body {
                scenario,
                verification,
            },
        ))),
        Format::Text => {
            let mut out = String::new();
            out.push_str(&format!(
                "star-network scenario: m = {}, n = {} (starlocal {})\n",
                args.m,
                args.n,
                env!("CARGO_PKG_VERSION")
            ));
            out.push_str("signed combinations (rows = central inputs):\n");
            out.push_str(&sign_grid(&table));
            if table.n_constraints() > 0 {
                out.push_str("vanishing combinations (rows = constraints):\n");
                out.push_str(&constraint_grid(&table));
            }
            for (i, c) in scenario.correlators.iter().enumerate() {
                out.push_str(&format!("correlator {}: {:.8}\n", i + 1, c));
            }
            out.push_str(&format!(
                "delta = {:.8}   classical bound = {}   quantum optimum = {:.8}\n",
                scenario.delta, scenario.classical_bound, scenario.quantum_opt
            ));
            let status = if verification.is_optimal() { "PASS" } else { "FAIL" };
            out.push_str(&format!(
                "verification: {status} (gram {:.3e}, constraints {:.3e}, max sos residual {:.3e}, gap {:.3e})\n",
                verification.gram_error,
                verification.constraint_error,
                verification
                    .sos_residuals
                    .iter()
                    .cloned()
                    .fold(0.0, f64::max),
                verification.correspondence_gap,
            ));
            Ok(out)
        }
        Format::Csv => unreachable!("rejected earlier"),
    }
}

fn cmd_classical_bound(args: &ScenarioArgs, config: ConfigEcho) -> Result<String, LibError> {
    let table = EncodingTable::new(args.m)?;
    let strategies = enumerate_valid_strategies(&table)?;
    let (eta, witness) = eta_max(&table)?;

    #[derive(Serialize)]
    struct Body {
        eta_max: i64,
        strategy_count: usize,
        witness: String,
    }
    let body = Body {
        eta_max: eta,
        strategy_count: strategies.len(),
        witness: witness.to_string(),
    };

    match args.format {
        Format::Json => Ok(to_json(&envelope("classical-bound", config, body))),
        Format::Text => Ok(format!(
            "classical bound for m = {}: eta_max = {} over {} valid strategies\nwitness: {}\n",
            args.m, body.eta_max, body.strategy_count, body.witness
        )),
        Format::Csv => unreachable!("rejected earlier"),
    }
}

fn cmd_verify(
    args: &ScenarioArgs,
    config: ConfigEcho,
    cap: usize,
) -> Result<(String, u8), LibError> {
    let table = EncodingTable::new(args.m)?;
    let real = build_realization_with_cap(args.n, args.m, cap)?;
    let report = self_test_report(&real, &table)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let probe_min = gamma_probe(&real, &table, args.trials, &mut rng)?;
    let failures = report.failures();
    let passed = failures.is_empty() && probe_min >= -1e-9;

    #[derive(Serialize)]
    struct Body {
        passed: bool,
        probe_min: f64,
        failures: Vec<String>,
        report: starlocal::VerificationReport,
    }
    let body = Body {
        passed,
        probe_min,
        failures,
        report,
    };

    let code = if passed { EXIT_OK } else { EXIT_VALIDATION };
    let out = match args.format {
        Format::Json => to_json(&envelope("verify", config, body)),
        Format::Text => {
            let mut out = String::new();
            out.push_str(&format!(
                "verification of the canonical realization, m = {}, n = {}\n",
                args.m, args.n
            ));
            out.push_str(&format!(
                "probe minimum over {} randomized trials: {:.3e}\n",
                args.trials, body.probe_min
            ));
            if body.passed {
                out.push_str("all checks passed\n");
            } else {
                for f in &body.failures {
                    out.push_str(&format!("FAILED: {f}\n"));
                }
            }
            out
        }
        Format::Csv => unreachable!("rejected earlier"),
    };
    Ok((out, code))
}

fn cmd_bell(args: &ScenarioArgs, config: ConfigEcho, cap: usize) -> Result<String, LibError> {
    let table = EncodingTable::new(args.m)?;
    let real = build_realization_with_cap(args.n, args.m, cap)?;
    let values: Vec<f64> = (0..args.n)
        .map(|k| bipartite_bell_value(&real, &table, k))
        .collect::<Result<_, _>>()?;
    let delta = delta_value(&real, &table)?.delta;
    let product: f64 = values.iter().product();
    let product_root = product.signum() * product.abs().powf(1.0 / args.n as f64);

    #[derive(Serialize)]
    struct Body {
        bell_values: Vec<f64>,
        classical_bound: f64,
        quantum_opt: f64,
        delta: f64,
        product_root: f64,
        correspondence_gap: f64,
    }
    let body = Body {
        bell_values: values,
        classical_bound: (1u64 << (args.m - 1)) as f64,
        quantum_opt: (1u64 << (args.m - 1)) as f64 * (args.m as f64).sqrt(),
        delta,
        product_root,
        correspondence_gap: product_root - delta,
    };

    match args.format {
        Format::Json => Ok(to_json(&envelope("bell", config, body))),
        Format::Text => {
            let mut out = String::new();
            for (k, b) in body.bell_values.iter().enumerate() {
                out.push_str(&format!("source {}: bell value {:.8}\n", k + 1, b));
            }
            out.push_str(&format!(
                "bound = {}   optimum = {:.8}   delta = {:.8}   gap = {:.3e}\n",
                body.classical_bound, body.quantum_opt, body.delta, body.correspondence_gap
            ));
            Ok(out)
        }
        Format::Csv => unreachable!("rejected earlier"),
    }
}

fn cmd_sweep(args: &ScenarioArgs, config: ConfigEcho, cap: usize) -> Result<String, LibError> {
    let table = EncodingTable::new(args.m)?;
    let real = build_realization_with_cap(args.n, args.m, cap)?;
    let bound = (1u64 << (args.m - 1)) as f64;

    let mut rows = Vec::with_capacity(101);
    let mut v_star_grid = None;
    for step in 0..=100 {
        let v = step as f64 / 100.0;
        let delta = werner_delta(&real, &table, v)?.delta;
        let violates = delta > bound + 1e-12;
        if violates && v_star_grid.is_none() {
            v_star_grid = Some(v);
        }
        rows.push((v, delta, violates));
    }
    let v_star_analytic = 1.0 / (args.m as f64).sqrt();

    match args.format {
        Format::Csv => {
            let mut out = String::from("v,delta,bound,violates\n");
            for (v, delta, violates) in &rows {
                out.push_str(&format!(
                    "{v:.2},{delta:.9},{bound:.9},{}\n",
                    u8::from(*violates)
                ));
            }
            Ok(out)
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Row {
                v: f64,
                delta: f64,
                violates: bool,
            }
            #[derive(Serialize)]
            struct Body {
                classical_bound: f64,
                v_star_analytic: f64,
                v_star_grid: Option<f64>,
                rows: Vec<Row>,
            }
            let body = Body {
                classical_bound: bound,
                v_star_analytic,
                v_star_grid,
                rows: rows
                    .into_iter()
                    .map(|(v, delta, violates)| Row { v, delta, violates })
                    .collect(),
            };
            Ok(to_json(&envelope("sweep", config, body)))
        }
        Format::Text => {
            let mut out = String::new();
            out.push_str(&format!(
                "visibility sweep, m = {}, n = {}: delta(v) crosses the bound {} at v* = {:.5}\n",
                args.m, args.n, bound, v_star_analytic
            ));
            if let Some(v) = v_star_grid {
                out.push_str(&format!("first violating grid point: v = {v:.2}\n"));
            }
            for (v, delta, violates) in rows.iter().step_by(10) {
                out.push_str(&format!(
                    "  v = {v:.2}  delta = {delta:.6}{}\n",
                    if *violates { "  violates" } else { "" }
                ));
            }
            Ok(out)
        }
    }
}

fn cmd_encoding(args: &ScenarioArgs) -> Result<String, LibError> {
    let table = EncodingTable::new(args.m)?;
    match args.format {
        // the bare canonical object, not an envelope
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&table.canonical())
                .expect("canonical table serialization cannot fail");
            s.push('\n');
            Ok(s)
        }
        Format::Text => {
            let mut out = String::new();
            out.push_str(&format!(
                "encoding for m = {}: {} inputs, {} constraints\n",
                args.m,
                table.n_inputs(),
                table.n_constraints()
            ));
            out.push_str("labels: ");
            for s in table.strings() {
                out.push_str(&format!("{s} "));
            }
            out.push('\n');
            out.push_str("signed combinations (rows = central inputs):\n");
            out.push_str(&sign_grid(&table));
            if table.n_constraints() > 0 {
                out.push_str("vanishing combinations (rows = constraints):\n");
                out.push_str(&constraint_grid(&table));
            }
            out.push_str("gram matrix (anticommutator values):\n");
            for j in 0..table.n_inputs() {
                out.push_str("  ");
                for j2 in 0..table.n_inputs() {
                    out.push_str(&format!("{:>6} ", table.predicted_gram(j, j2)?.to_string()));
                }
                out.push('\n');
            }
            Ok(out)
        }
        Format::Csv => unreachable!("rejected earlier"),
    }
}
