use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use irrev::barriers::{self, RankMode, ThetaChoice};
use irrev::diagonal::{monomial_subrank_power, DEFAULT_NODE_BUDGET};
use irrev::entropy::{rho_grid_oracle, rho_upper};
use irrev::{io as tio, linalg, Error, RhoOptions, Table, Tensor, Theta};

mod output;

use output::{real, reals, Format, Record};

/// Largest oracle disagreement tolerated by `rho --oracle`.
const ORACLE_TOLERANCE: f64 = 1e-3;

#[derive(Parser, Debug)]
#[command(name = "irrev", version, about = "Irreversibility lower bounds and matrix multiplication barriers")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    /// Significant digits for reals.
    #[arg(long, global = true, default_value_t = 6, value_parser = clap::value_parser!(u8).range(2..=17))]
    precision: u8,
    /// Frank–Wolfe duality-gap tolerance.
    #[arg(long, global = true, default_value_t = 1e-10, value_parser = positive_real)]
    tol: f64,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Node budget for free-diagonal search.
    #[arg(long, global = true, default_value_t = DEFAULT_NODE_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
    node_budget: u64,
    /// Iteration budget for the optimizer.
    #[arg(long, global = true, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    iter_budget: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a named tensor family in the JSON tensor format.
    Gen {
        #[arg(value_enum)]
        family: Family,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        a: Option<usize>,
        #[arg(long)]
        b: Option<usize>,
        #[arg(long)]
        c: Option<usize>,
        #[arg(long)]
        q: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Irreversibility lower bound and barrier report for a tensor file.
    Irr {
        /// Tensor file, or `-` for stdin.
        path: String,
        /// Leg weights `t1,t2,t3` summing to 1.
        #[arg(long, value_parser = parse_theta, conflicts_with = "search_theta")]
        theta: Option<Theta>,
        /// Minimize the support functional over the weights.
        #[arg(long)]
        search_theta: bool,
    },
    /// Barrier tables for the standard families.
    Table {
        #[arg(value_enum)]
        which: Which,
        #[arg(long)]
        qmax: Option<u32>,
        #[arg(long)]
        mmax: Option<u32>,
        /// Rank assumption for the laser table.
        #[arg(long, value_enum)]
        assume_rank: Option<AssumeRank>,
    },
    /// Support functional of a tensor file, optionally checked against the grid oracle.
    Rho {
        path: String,
        #[arg(long, value_parser = parse_theta)]
        theta: Option<Theta>,
        #[arg(long)]
        oracle: bool,
        /// Grid resolution for the oracle.
        #[arg(long, default_value_t = 120, value_parser = clap::value_parser!(u64).range(1..=100_000_000))]
        resolution: u64,
    },
    /// Largest free diagonal in a Kronecker power of the support.
    Diag {
        path: String,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=16))]
        power: u32,
        /// Overrides --node-budget.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        budget: Option<u64>,
    },
    /// Exact flattening ranks and a randomized balancedness check.
    Flatrank {
        path: String,
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..=10_000))]
        trials: u64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Family {
    Unit,
    Matmul,
    Cw,
    #[value(name = "CW")]
    BigCw,
    Tn,
    W,
    Z3,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Which {
    Cw,
    #[value(name = "CW")]
    BigCw,
    Tn,
    Laser,
    Better,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AssumeRank {
    Flattening,
    Conjectured,
}

fn positive_real(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() && x > 0.0 => Ok(x),
        _ => Err(format!("expected a positive real, got {s:?}")),
    }
}

fn parse_theta(s: &str) -> Result<Theta, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let [t1, t2, t3] = parts[..] else {
        return Err(format!("theta needs three comma-separated weights, got {s:?}"));
    };
    Theta::new(t1, t2, t3).map_err(|e| e.to_string())
}

/// A failure with its process exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) | Error::Parse(_) => 2,
            Error::Degenerate(_) => 3,
            Error::ResourceLimit(_) | Error::BudgetExceeded { .. } => 5,
        };
        let message = match &e {
            Error::BudgetExceeded { best } => format!("{e}; best value so far {}", best.value),
            _ => e.to_string(),
        };
        Failure { code, message }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn read_input(path: &str) -> CliResult<String> {
    if path == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| Failure::usage(format!("{path}: {e}")))
    }
}

/// Parses a tensor file and names it by the hash of its canonical form, so
/// equal tensors get equal ids however they were written.
fn load(path: &str) -> CliResult<(Tensor, String)> {
    let t = tio::read_tensor(&read_input(path)?)?;
    let digest = Sha256::digest(tio::write_tensor(&t).as_bytes());
    Ok((t, format!("sha256:{}", hex::encode(digest))))
}

fn need(v: Option<usize>, flag: &str, family: &str) -> CliResult<usize> {
    v.ok_or_else(|| Failure::usage(format!("family {family} needs --{flag}")))
}

impl Global {
    fn rho_options(&self) -> RhoOptions {
        RhoOptions {
            tol: self.tol,
            max_iter: self.iter_budget,
        }
    }

    fn precision(&self) -> usize {
        usize::from(self.precision)
    }
}

fn run(cli: Cli) -> CliResult<String> {
    let g = &cli.global;
    let p = g.precision();
    match cli.command {
        Command::Gen { family, n, a, b, c, q, m, out } => {
            let t = match family {
                Family::Unit => Tensor::unit(need(n, "n", "unit")?)?,
                Family::Matmul => Tensor::matmul(need(a, "a", "matmul")?, need(b, "b", "matmul")?, need(c, "c", "matmul")?)?,
                Family::Cw => Tensor::cw(need(q, "q", "cw")?)?,
                Family::BigCw => Tensor::big_cw(need(q, "q", "CW")?)?,
                Family::Tn => Tensor::reduced_polymul(need(m, "m", "tn")?)?,
                Family::W => Tensor::w_state(),
                Family::Z3 => Tensor::group_z3(),
            };
            let text = tio::write_tensor(&t);
            match out {
                Some(path) => {
                    fs::write(&path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
                    Ok(String::new())
                }
                None => Ok(text),
            }
        }
        Command::Irr { path, theta, search_theta } => {
            let (t, id) = load(&path)?;
            let choice = match (theta, search_theta) {
                (_, true) => ThetaChoice::Search,
                (Some(th), false) => ThetaChoice::Fixed(th),
                (None, false) => ThetaChoice::default(),
            };
            let report = barriers::irr_lower(&t, choice, &g.rho_options())?.with_id(id);
            let mut r = Record::new(&report);
            r.row("tensor_id", report.tensor_id.clone())
                .row("flattening_ranks", join(&report.flattening_ranks))
                .row("theta", reals(&report.theta_used.weights(), p))
                .row("rho", real(report.rho.value, p))
                .row("residual", real(report.rho.residual, p))
                .row("iterations", report.rho.iterations.to_string())
                .row("irr_lb", real(report.irr_lb, p))
                .row("barrier_basic", real(report.barrier_basic, p))
                .row("barrier_laser", report.barrier_laser.map_or("-".into(), |x| real(x, p)))
                .row("notes", report.notes.clone());
            Ok(r.render(g.format, p))
        }
        Command::Table { which, qmax, mmax, assume_rank } => table(g, which, qmax, mmax, assume_rank),
        Command::Rho { path, theta, oracle, resolution } => {
            let (t, id) = load(&path)?;
            let theta = theta.unwrap_or_default();
            let support = t.support();
            let rho = rho_upper(&support, theta, &g.rho_options())?;
            let grid = if oracle {
                let res = usize::try_from(resolution).map_err(|_| Failure::usage("resolution too large"))?;
                Some(rho_grid_oracle(&support, theta, res)?)
            } else {
                None
            };
            #[derive(Serialize)]
            struct RhoReport<'a> {
                tensor_id: &'a str,
                theta: Theta,
                #[serde(flatten)]
                rho: &'a irrev::RhoResult,
                #[serde(skip_serializing_if = "Option::is_none")]
                oracle: Option<f64>,
            }
            let mut r = Record::new(RhoReport { tensor_id: &id, theta, rho: &rho, oracle: grid });
            r.row("tensor_id", id.clone())
                .row("theta", reals(&theta.weights(), p))
                .row("rho", real(rho.value, p))
                .row("zeta", real(rho.zeta(), p))
                .row("residual", real(rho.residual, p))
                .row("iterations", rho.iterations.to_string());
            if let Some(v) = grid {
                r.row("oracle", real(v, p)).row("oracle_diff", real(rho.value - v, p));
            }
            if g.format == Format::Text {
                for (pt, &m) in rho.argmax.points().iter().zip(rho.argmax.probs()) {
                    if m > 0.0 {
                        r.row(&format!("p[{},{},{}]", pt[0], pt[1], pt[2]), real(m, p));
                    }
                }
            }
            let text = r.render(g.format, p);
            match grid {
                Some(v) if (rho.value - v).abs() > ORACLE_TOLERANCE => {
                    print!("{text}");
                    Err(Failure {
                        code: 4,
                        message: format!(
                            "oracle mismatch: optimizer {} vs grid {} (tolerance {ORACLE_TOLERANCE})",
                            rho.value, v
                        ),
                    })
                }
                _ => Ok(text),
            }
        }
        Command::Diag { path, power, budget } => {
            let (t, id) = load(&path)?;
            let found = monomial_subrank_power(&t, power, budget.unwrap_or(g.node_budget))?;
            #[derive(Serialize)]
            struct DiagReport<'a> {
                tensor_id: &'a str,
                #[serde(flatten)]
                found: &'a irrev::PowerDiagonal,
            }
            let mut r = Record::new(DiagReport { tensor_id: &id, found: &found });
            r.row("tensor_id", id.clone())
                .row("power", found.power.to_string())
                .row("size", found.size.to_string())
                .row("rate", real(found.per_copy_rate, p))
                .row("exact", found.exact.to_string())
                .row("nodes", found.nodes.to_string())
                .row(
                    "witness",
                    found
                        .witness
                        .points
                        .iter()
                        .map(|q| format!("({},{},{})", q[0], q[1], q[2]))
                        .collect::<Vec<_>>()
                        .join(" "),
                );
            Ok(r.render(g.format, p))
        }
        Command::Flatrank { path, trials } => {
            let (t, id) = load(&path)?;
            let ranks = linalg::flattening_ranks(&t);
            let dims = t.dims();
            let balanced = if dims[0] == dims[1] && dims[1] == dims[2] {
                Some(linalg::is_balanced(&t, trials as usize, g.seed)?)
            } else {
                None
            };
            #[derive(Serialize)]
            struct RankReport<'a> {
                tensor_id: &'a str,
                dims: [usize; 3],
                flattening_ranks: [usize; 3],
                balanced: Option<bool>,
            }
            let mut r = Record::new(RankReport { tensor_id: &id, dims, flattening_ranks: ranks, balanced });
            r.row("tensor_id", id.clone())
                .row("dims", join(&dims))
                .row("flattening_ranks", join(&ranks))
                .row("balanced", balanced.map_or("-".into(), |b| b.to_string()));
            Ok(r.render(g.format, p))
        }
    }
}

fn table(g: &Global, which: Which, qmax: Option<u32>, mmax: Option<u32>, assume_rank: Option<AssumeRank>) -> CliResult<String> {
    let uses_m = matches!(which, Which::Tn);
    if uses_m && qmax.is_some() {
        return Err(Failure::usage("the tn table takes --mmax, not --qmax"));
    }
    if !uses_m && mmax.is_some() {
        return Err(Failure::usage("only the tn table takes --mmax"));
    }
    if assume_rank.is_some() && !matches!(which, Which::Laser) {
        return Err(Failure::usage("--assume-rank applies to the laser table only"));
    }
    let bounded = |v: Option<u32>, default: u32, lo: u32, hi: u32, flag: &str| -> CliResult<u32> {
        let v = v.unwrap_or(default);
        if (lo..=hi).contains(&v) {
            Ok(v)
        } else {
            Err(Failure::usage(format!("--{flag} must lie in {lo}..={hi}, got {v}")))
        }
    };
    let opts = g.rho_options();
    let t: Table = match which {
        Which::Cw => barriers::barrier_cw_table(bounded(qmax, 7, 2, 10_000, "qmax")?)?,
        Which::BigCw => barriers::barrier_big_cw_table(bounded(qmax, 6, 1, 60, "qmax")?, &opts)?,
        Which::Tn => barriers::barrier_tn_table(bounded(mmax, 7, 2, 24, "mmax")?, &opts)?,
        Which::Laser => {
            let mode = match assume_rank.unwrap_or(AssumeRank::Flattening) {
                AssumeRank::Flattening => RankMode::Flattening,
                AssumeRank::Conjectured => RankMode::Conjectured,
            };
            barriers::barrier_laser_table(bounded(qmax, 7, 2, 10_000, "qmax")?, mode)?
        }
        Which::Better => barriers::barrier_better_table(bounded(qmax, 12, 2, 10_000, "qmax")?)?,
    };
    Ok(render_table(&t, g.format, g.precision()))
}

fn render_table(t: &Table, format: Format, p: usize) -> String {
    match format {
        Format::Json => output::json(&serde_json::to_value(t).expect("tables serialize"), p),
        Format::Csv => {
            let mut out = String::from("param,value\n");
            for row in &t.rows {
                out.push_str(&format!("{},{}\n", row.param, real(row.value, p)));
            }
            out
        }
        Format::Text => {
            let has_check = t.rows.iter().any(|r| r.check.is_some());
            let has_n = t.rows.iter().any(|r| r.intro_n.is_some());
            let mut header = vec!["param", "value"];
            if has_check {
                header.push("check");
            }
            if has_n {
                header.push("n");
            }
            let mut lines = vec![header.iter().map(|s| s.to_string()).collect::<Vec<_>>()];
            for row in &t.rows {
                let mut cells = vec![row.param.to_string(), real(row.value, p)];
                if has_check {
                    cells.push(row.check.map_or("-".into(), |x| real(x, p)));
                }
                if has_n {
                    cells.push(row.intro_n.map_or("-".into(), |n| n.to_string()));
                }
                lines.push(cells);
            }
            let widths: Vec<usize> = (0..header.len())
                .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
                .collect();
            let mut out = String::new();
            for l in &lines {
                let cells: Vec<String> = l.iter().zip(&widths).map(|(s, &w)| format!("{s:>w$}")).collect();
                out.push_str(cells.join("  ").trim_end());
                out.push('\n');
            }
            if let Some(best) = t.argmin() {
                out.push_str(&format!("min {} at {}\n", real(best.value, p), best.param));
            }
            out
        }
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            let mut stdout = io::stdout().lock();
            if stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
