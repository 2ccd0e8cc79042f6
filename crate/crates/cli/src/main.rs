//! `forrlab`: runs each verification experiment from a seed and writes CSV or
//! JSON results.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use forrlab::{ChallengeLaw, Workers};

use commands::ExperimentConfig;
use output::{emit, Artifact, Format};

const AFTER_HELP: &str = "\
Every flag can also be set through an environment variable named FORRLAB_<FLAG>,
for example FORRLAB_SEED=7 or FORRLAB_WORKERS=4. Command-line flags win.

Exit status: 0 success, 1 a --check gate failed, 2 invalid configuration,
3 a size cap was exceeded, 4 an output file could not be written.";

#[derive(Parser)]
#[command(
    name = "forrlab",
    version,
    about = "Seeded experiments on Forrelation states and their security hybrids"
)]
#[command(after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Number of qubits (input bits of f and g)
    #[arg(long, env = "FORRLAB_N")]
    n: Option<usize>,
    /// Key length; the ensemble has 2^kappa keys
    #[arg(long, env = "FORRLAB_KAPPA")]
    kappa: Option<usize>,
    /// Correlation strength; defaults to 1/(100 n)
    #[arg(long, env = "FORRLAB_EPSILON")]
    epsilon: Option<f64>,
    /// Sample, run, seed or game count, depending on the command
    #[arg(long, env = "FORRLAB_TRIALS")]
    trials: Option<usize>,
    /// Master seed; every random choice derives from it
    #[arg(long, env = "FORRLAB_SEED")]
    seed: u64,
    /// Output file, replaced atomically; stdout when absent
    #[arg(long, env = "FORRLAB_OUT")]
    out: Option<PathBuf>,
    /// Output format; each command has its own default
    #[arg(long, value_enum, env = "FORRLAB_FORMAT")]
    format: Option<Format>,
    /// Worker threads; results do not depend on this
    #[arg(long, default_value_t = 1, env = "FORRLAB_WORKERS")]
    workers: usize,
    /// Use the shortened walk length 40 ln N / epsilon
    #[arg(long, env = "FORRLAB_FAST")]
    fast: bool,
    /// Evaluate the acceptance gate and exit 1 if it fails
    #[arg(long, env = "FORRLAB_CHECK")]
    check: bool,
}

#[derive(Args, Debug)]
struct HybridArgs {
    #[command(flatten)]
    common: Common,
    /// First challenge law: H0..H4 or tau
    #[arg(long, default_value = "H0", env = "FORRLAB_HYBRID_A")]
    hybrid_a: ChallengeLaw,
    /// Second challenge law: H0..H4 or tau
    #[arg(long, default_value = "H4", env = "FORRLAB_HYBRID_B")]
    hybrid_b: ChallengeLaw,
    /// overlap-bruteforce, swap-test or coin-flip
    #[arg(
        long,
        default_value = "overlap-bruteforce",
        env = "FORRLAB_DISTINGUISHER"
    )]
    distinguisher: String,
}

#[derive(Args, Debug)]
struct BatteryArgs {
    #[command(flatten)]
    common: Common,
    /// Smallest n of the sweep; the sweep runs n-min..=n
    #[arg(long, env = "FORRLAB_N_MIN")]
    n_min: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mean forrelation of pairs drawn from F_n
    #[command(long_about = "Mean forrelation of pairs drawn from F_n.\n\n\
        Defaults: --n 8, --trials 10000. Gate: the 99% interval contains sqrt(eps) and no bias was truncated.\n\n\
        CSV columns (default): n, epsilon, trials, mean_forr, ci_low, ci_high, trunc_rate, seed.\n\
        trunc_rate is the fraction of trials whose f had a clamped bias. JSON holds the same fields.")]
    ForrStats(Common),

    /// Polarizing walk: linear relation, polarization and rounded moments
    #[command(
        long_about = "Runs --trials independent polarizing walks (default 200 at --n 6, paper step count; \
        --fast uses 40 ln N / eps steps).\n\n\
        JSON fields (default): n, epsilon, m, profile, seed, runs, linear_relation_holds, relation_rate, \
        max_residual, min_abs, mean_sq_deficit, polarization_bound, polarization_holds, clamps_fired, \
        moment_max_gap, moment_halfwidth, moments_match. CSV has the same columns.\n\n\
        Gate: relation holds on at least 99% of runs with residual below 1e-9, mean deficit at most \
        3 exp(-m eps / 32), and rounded pairs match direct samples on every first and second moment."
    )]
    WalkVerify(Common),

    /// Exact comparison of sigma_A with tau_A for one oracle
    #[command(
        long_about = "Builds the keyed ensemble for oracle seed --seed (defaults --n 8, --kappa 4) and \
        compares sigma_A with tau_A.\n\n\
        JSON fields (default): seed, n, kappa, epsilon, threshold_holds, offdiag_max_gap, diag_max_gap, td, \
        tvd_diag, tvd_formula, matches. CSV has the same columns.\n\n\
        Gate (only when threshold_holds): off-diagonal gap below 1e-10, exact diagonal, |td - tvd_formula| < 1e-8."
    )]
    Lemma55(Common),

    /// Seed-averaged Fourier-square uniformity against key length
    #[command(
        long_about = "Averages sum_i |2^-n - E_k fhat_k(i)^2| over --trials oracles (default 20) for each \
        kappa in 2..=--kappa (default 10) at --n (default 10).\n\n\
        CSV columns (default): n, kappa, seeds, mean_value, sd, master_seed.\n\
        JSON: {rows, slope, intercept} with the fit of log2 mean_value against kappa.\n\n\
        Gate: slope within -0.5 +/- 0.15."
    )]
    FourierUniformity(Common),

    /// Acceptance rates of a distinguisher on two challenge laws
    #[command(
        long_about = "Runs --distinguisher on --trials challenges (default 500) from each of --hybrid-a \
        and --hybrid-b, at --n 10, --kappa 4 by default.\n\n\
        CSV columns (default): hybrid_a, hybrid_b, distinguisher, n, kappa, trials, p_a, p_b, advantage, ci, seed.\n\
        advantage is p_a - p_b; ci is the 99% Hoeffding half-width. JSON holds the same fields.\n\n\
        Gates for H0 vs H4: overlap-bruteforce needs |advantage| >= 0.9; swap-test must be consistent with \
        2^-(kappa+1) (1 - 2^-n). coin-flip must be consistent with 0."
    )]
    HybridAdvantage(HybridArgs),

    /// Shifted-Forrelation game with the brute-force honest statistic
    #[command(
        long_about = "Plays --trials games per side (default 500) at --n 12, --kappa 4, computing \
        max_k |forr(f_k, g_k h)| for h from H_kappa and for uniform h.\n\n\
        JSON fields (default): n, kappa, epsilon, games, seed, mean_hkappa, mean_uniform, sqrt_epsilon, \
        mean_rel_gap, threshold, classifier_error, separated, mean_within_20pct. CSV has the same columns.\n\n\
        Gate: classifier error below 0.1 and mean_hkappa within 20% of sqrt(eps)."
    )]
    ShiftedGame(Common),

    /// Advantage of a random quadratic test battery against F_n
    #[command(
        long_about = "For each n in --n-min..=--n (default just --n 10) draws 64 random degree-2 tests \
        with L12 = 4 and estimates each test's advantage with --trials samples (default 100000).\n\n\
        CSV columns: n, epsilon, trials, tests, l12, max_advantage, scale, ratio, seed, where scale is \
        l12 ln N / sqrt N and ratio is max_advantage / scale.\n\
        JSON (default): {rows, slope, intercept}; each row also lists per_test {gap, advantage, ci}.\n\n\
        Gate: at least three n values and a slope of log2 max_advantage against n within -0.5 +/- 0.15."
    )]
    LowdegBattery(BatteryArgs),

    /// Single-query B decisions against brute-force witness search
    #[command(
        long_about = "Evaluates all 4096 strings of length 12, 100 random machines and two depth-2 \
        nested machines with one B query each and by brute force.\n\n\
        JSON fields (default): seed, strings, machines, agreements, agreement_rate, accepted, max_depth, \
        depth_bound_holds, nested_cases, passed. CSV has the same columns.\n\n\
        Gate: every decision agrees and the recursion depth bound holds."
    )]
    OracleDemo(Common),
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Cap(String),
    Io(std::io::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Cap(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Cap(m) => write!(f, "cap exceeded: {m}"),
            CliError::Io(e) => write!(f, "output error: {e}"),
        }
    }
}

struct Defaults {
    n: usize,
    kappa: usize,
    trials: usize,
    min_trials: usize,
}

fn build_config(c: &Common, d: Defaults) -> Result<ExperimentConfig, CliError> {
    let n = c.n.unwrap_or(d.n);
    let kappa = c.kappa.unwrap_or(d.kappa);
    let trials = c.trials.unwrap_or(d.trials);
    if n == 0 {
        return Err(CliError::Config("--n must be at least 1".into()));
    }
    if trials < d.min_trials {
        return Err(CliError::Config(format!(
            "--trials must be at least {}",
            d.min_trials
        )));
    }
    if c.workers == 0 {
        return Err(CliError::Config("--workers must be at least 1".into()));
    }
    if let Some(e) = c.epsilon {
        if !(e > 0.0 && e <= 1.0) {
            return Err(CliError::Config(format!(
                "--epsilon must lie in (0, 1], got {e}"
            )));
        }
    }
    Ok(ExperimentConfig {
        n,
        n_min: n,
        kappa,
        epsilon: c.epsilon,
        trials,
        seed: c.seed,
        workers: Workers(c.workers),
        fast: c.fast,
        hybrid_a: ChallengeLaw::Hybrid(0),
        hybrid_b: ChallengeLaw::Hybrid(4),
        distinguisher: String::new(),
    })
}

type Runner = fn(&ExperimentConfig) -> Result<Artifact, CliError>;

fn plan(command: &Command) -> Result<(&Common, ExperimentConfig, Runner), CliError> {
    let d = |n, kappa, trials, min_trials| Defaults {
        n,
        kappa,
        trials,
        min_trials,
    };
    Ok(match command {
        Command::ForrStats(c) => (
            c,
            build_config(c, d(8, 0, 10_000, 2))?,
            commands::forr_stats,
        ),
        Command::WalkVerify(c) => (c, build_config(c, d(6, 0, 200, 1))?, commands::walk_verify),
        Command::Lemma55(c) => (c, build_config(c, d(8, 4, 1, 0))?, commands::lemma55),
        Command::FourierUniformity(c) => {
            let mut cfg = build_config(c, d(10, 10, 20, 1))?;
            if cfg.kappa < 2 {
                return Err(CliError::Config(
                    "--kappa must be at least 2 for the sweep".into(),
                ));
            }
            cfg.kappa = cfg.kappa.min(cfg.n);
            (c, cfg, commands::fourier_uniformity)
        }
        Command::HybridAdvantage(h) => {
            let mut cfg = build_config(&h.common, d(10, 4, 500, 100))?;
            cfg.hybrid_a = h.hybrid_a;
            cfg.hybrid_b = h.hybrid_b;
            cfg.distinguisher = h.distinguisher.clone();
            (&h.common, cfg, commands::hybrid_advantage)
        }
        Command::ShiftedGame(c) => (
            c,
            build_config(c, d(12, 4, 500, 1))?,
            commands::shifted_game,
        ),
        Command::LowdegBattery(b) => {
            let mut cfg = build_config(&b.common, d(10, 0, 100_000, 2))?;
            cfg.n_min = b.n_min.unwrap_or(cfg.n);
            if cfg.n_min == 0 || cfg.n_min > cfg.n {
                return Err(CliError::Config("--n-min must lie in 1..=n".into()));
            }
            (&b.common, cfg, commands::lowdeg_battery)
        }
        Command::OracleDemo(c) => (c, build_config(c, d(1, 0, 1, 0))?, commands::oracle_demo),
    })
}

fn run(cli: &Cli) -> Result<Option<bool>, CliError> {
    let (common, cfg, runner) = plan(&cli.command)?;
    let artifact = runner(&cfg)?;
    let bytes = match common.format.unwrap_or(artifact.default_format) {
        Format::Csv => &artifact.csv,
        Format::Json => &artifact.json,
    };
    emit(bytes, common.out.as_deref())?;
    if !common.check {
        return Ok(None);
    }
    let verdict = match artifact.check.passed {
        Some(true) => "check passed",
        Some(false) => "check FAILED",
        None => "no check",
    };
    eprintln!("{verdict}: {}", artifact.check.summary);
    Ok(artifact.check.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Some(false)) => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("forrlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("forrlab").chain(args.iter().copied()))
            .expect("valid arguments")
    }

    fn artifact(args: &[&str]) -> Result<Artifact, CliError> {
        let cli = parse(args);
        let (_, cfg, runner) = plan(&cli.command)?;
        runner(&cfg)
    }

    fn exit_code(args: &[&str]) -> u8 {
        match Cli::try_parse_from(std::iter::once("forrlab").chain(args.iter().copied())) {
            Err(e) => e.exit_code() as u8,
            Ok(cli) => match run(&cli) {
                Ok(Some(false)) => 1,
                Ok(_) => 0,
                Err(e) => e.exit_code(),
            },
        }
    }

    #[test]
    fn argument_errors_exit_with_2() {
        assert_eq!(exit_code(&["lemma55"]), 2, "missing seed");
        assert_eq!(exit_code(&["lemma55", "--seed", "1", "--n", "0"]), 2);
        assert_eq!(
            exit_code(&["forr-stats", "--seed", "1", "--epsilon", "1.5"]),
            2
        );
        assert_eq!(
            exit_code(&["hybrid-advantage", "--seed", "1", "--trials", "50"]),
            2
        );
        assert_eq!(
            exit_code(&[
                "hybrid-advantage",
                "--seed",
                "1",
                "--n",
                "4",
                "--kappa",
                "2",
                "--distinguisher",
                "psychic"
            ]),
            2
        );
        assert_eq!(
            exit_code(&["hybrid-advantage", "--seed", "1", "--hybrid-a", "H9"]),
            2
        );
        assert_eq!(
            exit_code(&["lowdeg-battery", "--seed", "1", "--n", "6", "--n-min", "7"]),
            2
        );
        assert_eq!(
            exit_code(&["forr-stats", "--seed", "1", "--workers", "0"]),
            2
        );
    }

    #[test]
    fn oversized_inputs_exit_with_3() {
        assert_eq!(
            exit_code(&["lemma55", "--seed", "1", "--n", "13", "--kappa", "2"]),
            3
        );
        assert!(matches!(
            artifact(&["lemma55", "--seed", "1", "--n", "13", "--kappa", "2"]),
            Err(CliError::Cap(_))
        ));
    }

    #[test]
    fn unwritable_output_exits_with_4() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("missing").join("out.json");
        let out = out.to_str().unwrap();
        assert_eq!(
            exit_code(&["lemma55", "--seed", "1", "--n", "4", "--kappa", "2", "--out", out]),
            4
        );
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("result.csv");
        std::fs::write(&path, b"stale").unwrap();
        output::write_atomic(&path, b"fresh\n").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"fresh\n");
        let names: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names, vec![std::ffi::OsString::from("result.csv")]);
    }

    #[test]
    fn repeated_runs_are_byte_identical() {
        let args = [
            "shifted-game",
            "--seed",
            "9",
            "--n",
            "5",
            "--kappa",
            "2",
            "--trials",
            "20",
        ];
        let a = artifact(&args).unwrap();
        let b = artifact(&[&args[..], &["--workers", "3"]].concat()).unwrap();
        assert_eq!(a.csv, b.csv);
        assert_eq!(a.json, b.json);
    }

    #[test]
    fn csv_headers_match_documented_columns() {
        let a = artifact(&["forr-stats", "--seed", "2", "--n", "5", "--trials", "500"]).unwrap();
        let text = String::from_utf8(a.csv).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "n,epsilon,trials,mean_forr,ci_low,ci_high,trunc_rate,seed"
        );
        assert_eq!(text.lines().count(), 2);

        let h = artifact(&[
            "hybrid-advantage",
            "--seed",
            "2",
            "--n",
            "4",
            "--kappa",
            "2",
            "--trials",
            "100",
        ])
        .unwrap();
        let header = String::from_utf8(h.csv)
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string();
        assert_eq!(
            header,
            "hybrid_a,hybrid_b,distinguisher,n,kappa,trials,p_a,p_b,advantage,ci,seed"
        );
    }

    #[test]
    fn sweep_json_carries_fit() {
        let a = artifact(&[
            "fourier-uniformity",
            "--seed",
            "3",
            "--n",
            "6",
            "--kappa",
            "5",
            "--trials",
            "4",
        ])
        .unwrap();
        let v: serde_json::Value = serde_json::from_slice(&a.json).unwrap();
        assert_eq!(v["rows"].as_array().unwrap().len(), 4);
        assert!(v["slope"].as_f64().unwrap() < 0.0);
    }

    #[test]
    fn gates_report_verdicts() {
        let ok = artifact(&["forr-stats", "--seed", "4", "--n", "6", "--trials", "4000"]).unwrap();
        assert_eq!(ok.check.passed, Some(true), "{}", ok.check.summary);
        let coin = artifact(&[
            "hybrid-advantage",
            "--seed",
            "4",
            "--n",
            "4",
            "--kappa",
            "2",
            "--distinguisher",
            "coin",
        ])
        .unwrap();
        assert_eq!(coin.check.passed, Some(true), "{}", coin.check.summary);
        let open = artifact(&[
            "hybrid-advantage",
            "--seed",
            "4",
            "--n",
            "4",
            "--kappa",
            "2",
            "--trials",
            "100",
            "--hybrid-b",
            "H2",
        ])
        .unwrap();
        assert_eq!(open.check.passed, None);
        let one_point = artifact(&[
            "lowdeg-battery",
            "--seed",
            "4",
            "--n",
            "5",
            "--trials",
            "200",
        ])
        .unwrap();
        assert_eq!(one_point.check.passed, Some(false));
    }

    #[test]
    fn oracle_demo_passes() {
        let a = artifact(&["oracle-demo", "--seed", "3"]).unwrap();
        assert_eq!(a.check.passed, Some(true), "{}", a.check.summary);
    }
}
