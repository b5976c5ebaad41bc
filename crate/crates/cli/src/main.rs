use clap::{Args, Parser, Subcommand};
use esseen_core::bounds::{end_to_end_bound, esseen_rhs};
use esseen_core::charfun::{lemma3_sweep, lemma4_sweep, ChfExpr, Lemma3Sweep, Lemma4Sweep};
use esseen_core::convolution::{normalized_summand, sum_iid, ConvolveOptions};
use esseen_core::dist::{DiscreteDist, DistSpec, Family, MomentSummary};
use esseen_core::experiments::{constant_scan, rate_experiment};
use esseen_core::kernel::{build_kernel, Kernel};
use esseen_core::kolmogorov::kolmogorov_vs_normal;
use esseen_core::normal::NORMAL_DENSITY_MAX;
use esseen_core::report::{json_envelope, render_rate, write_text, ReportFormat};
use esseen_core::{LabConfig, LabError, Result};
use serde::Serialize;
use serde_json::Value;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "esseen-lab", version, about = "Exact Berry-Esseen experiments on finite-support laws")]
struct Cli {
    /// JSON config file; falls back to $ESSEEN_LAB_CONFIG
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (a directory for `kernel`); stdout when omitted
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value = "json", value_parser = ["csv", "json", "svg"])]
    format: String,
    /// Worker threads; results do not depend on this
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Reserved: every computation is deterministic
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Inspect a single distribution
    Dist {
        #[command(subcommand)]
        action: DistAction,
    },
    /// Exact law of Y_1 + ... + Y_n
    Convolve {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long, default_value_t = 1)]
        n: u64,
        /// Standardize Y and divide the sum by √n
        #[arg(long)]
        standardize: bool,
        /// Drop atoms lighter than this (at most 1e-9)
        #[arg(long)]
        prune_tol: Option<f64>,
    },
    /// Exact Kolmogorov distance of the standardized sum to N(0, 1)
    Kolmogorov {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long, default_value_t = 1)]
        n: u64,
        /// Use the raw sum Y_1 + ... + Y_n
        #[arg(long)]
        no_standardize: bool,
    },
    /// Remainder sweeps for one summand and for the normalized sum
    ChfCheck {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long, default_value_t = 16)]
        n: u64,
        #[arg(long, default_value_t = 1000)]
        points: usize,
        #[arg(long)]
        c_small: Option<f64>,
    },
    /// Build the smoothing kernel and report or dump it
    Kernel,
    /// Esseen smoothing bound for the normalized sum
    SmoothBound {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long, default_value_t = 1)]
        n: u64,
        #[arg(long, conflicts_with = "auto_eps")]
        eps: Option<f64>,
        /// ε = ρ³/c_small with the summand-level calibration
        #[arg(long)]
        auto_eps: bool,
        #[arg(long)]
        c_small: Option<f64>,
    },
    /// Distance against n with a log-log rate fit
    Rate {
        #[command(flatten)]
        law: LawArgs,
        /// Comma-separated, increasing
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u64>,
    },
    /// Empirical Berry-Esseen constant over families and n
    ConstantScan {
        /// Repeatable; defaults to rademacher, centered_bernoulli:0.3, two_point:-2:1
        #[arg(long)]
        family: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u64>,
    },
}

#[derive(Subcommand, Debug)]
enum DistAction {
    /// Atoms and moments
    Show {
        #[command(flatten)]
        law: LawArgs,
    },
}

#[derive(Args, Debug)]
struct LawArgs {
    /// rademacher | centered_bernoulli:P | two_point:X1:X2 | uniform_lattice:M
    #[arg(long, conflicts_with = "spec")]
    family: Option<String>,
    /// Distribution spec as JSON text, or @path to a JSON file
    #[arg(long)]
    spec: Option<String>,
}

impl LawArgs {
    fn spec(&self) -> Result<DistSpec> {
        match (&self.family, &self.spec) {
            (Some(f), None) => Ok(DistSpec::Family(f.parse::<Family>()?)),
            (None, Some(s)) => {
                let text = match s.strip_prefix('@') {
                    Some(path) => std::fs::read_to_string(path).map_err(|e| LabError::Io(format!("{path}: {e}")))?,
                    None => s.clone(),
                };
                DistSpec::from_json(&text)
            }
            _ => Err(LabError::BadParam("give exactly one of --family or --spec".into())),
        }
    }
}

#[derive(Serialize)]
struct LawOut<'a> {
    label: String,
    moments: MomentSummary,
    pruned_mass: f64,
    atoms: Vec<[f64; 2]>,
    #[serde(skip)]
    dist: &'a DiscreteDist,
}

impl<'a> LawOut<'a> {
    fn new(label: String, dist: &'a DiscreteDist) -> Self {
        Self {
            label,
            moments: dist.moments(),
            pruned_mass: dist.pruned_mass(),
            atoms: dist.atoms().map(|(x, p)| [x, p]).collect(),
            dist,
        }
    }

    fn csv(&self) -> String {
        let mut s = String::from("x,p\n");
        for (x, p) in self.dist.atoms() {
            let _ = writeln!(s, "{x:e},{p:e}");
        }
        s
    }
}

#[derive(Serialize)]
struct ChfCheckOut {
    n: u64,
    summand: Lemma3Sweep,
    sum: Lemma4Sweep,
}

struct Ctx {
    cfg: LabConfig,
    format: ReportFormat,
    out: Option<PathBuf>,
}

impl Ctx {
    fn config_echo(&self) -> Value {
        serde_json::to_value(&self.cfg).unwrap_or(Value::Null)
    }

    fn json<T: Serialize>(&self, value: &T) -> Result<String> {
        if self.format != ReportFormat::Json {
            return Err(LabError::BadParam("this command only writes json".into()));
        }
        json_envelope(value, &self.config_echo())
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(p) => write_text(p, text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn convolve_opts(&self) -> Result<ConvolveOptions> {
        let opts = ConvolveOptions::with_prune_tol(self.cfg.prune_tol);
        opts.validate()?;
        Ok(opts)
    }

    fn kernel(&self) -> Result<Kernel> {
        build_kernel(&self.cfg.kernel)
    }
}

/// Law of (Y_1 + ... + Y_n)/√n for standardized Y, or the raw sum.
fn sum_law(spec: &DistSpec, n: u64, standardize: bool, opts: &ConvolveOptions) -> Result<DiscreteDist> {
    let y = spec.build()?;
    let x = if standardize { normalized_summand(&y, n)? } else { y };
    if n == 0 {
        return Err(LabError::BadParam("n must be at least 1".into()));
    }
    sum_iid(&x, n, opts)
}

fn summands(spec: &DistSpec, n: u64) -> Result<Vec<DiscreteDist>> {
    let n_usize = usize::try_from(n).map_err(|_| LabError::BadParam("n too large".into()))?;
    Ok(vec![normalized_summand(&spec.build()?, n)?; n_usize])
}

fn kernel_tables(k: &Kernel, dir: &Path, ctx: &Ctx) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| LabError::Io(format!("{}: {e}", dir.display())))?;
    let table = |xs: &mut dyn Iterator<Item = (f64, f64)>| {
        let mut s = String::from("x,value\n");
        for (x, v) in xs {
            let _ = writeln!(s, "{x:e},{v:e}");
        }
        s
    };
    let psi = table(&mut (0..k.psi.len()).map(|i| (k.psi.x(i), k.psi.vals[i])));
    let phi = table(&mut (0..k.phi.len()).map(|i| (k.phi.x(i), k.phi.vals[i])));
    let f = table(&mut (0..k.f_table.len()).map(|i| (k.f_table.x(i), k.f_table.vals[i])));
    write_text(&dir.join("psi.csv"), &psi)?;
    write_text(&dir.join("phi.csv"), &phi)?;
    write_text(&dir.join("f.csv"), &f)?;
    write_text(&dir.join("summary.json"), &json_envelope(&k.summary(), &ctx.config_echo())?)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(LabError::BadParam("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| LabError::BadParam(e.to_string()))?;
    }
    let mut ctx = Ctx {
        cfg: LabConfig::load(cli.config.as_deref())?,
        format: cli.format.parse()?,
        out: cli.out,
    };
    ctx.cfg.bounds.validate()?;
    match cli.command {
        Command::Dist {
            action: DistAction::Show { law },
        } => {
            let spec = law.spec()?;
            let d = spec.build()?;
            let out = LawOut::new(spec.label(), &d);
            let text = match ctx.format {
                ReportFormat::Csv => out.csv(),
                _ => ctx.json(&out)?,
            };
            ctx.emit(&text)
        }
        Command::Convolve {
            law,
            n,
            standardize,
            prune_tol,
        } => {
            if let Some(p) = prune_tol {
                ctx.cfg.prune_tol = p;
            }
            let spec = law.spec()?;
            let d = sum_law(&spec, n, standardize, &ctx.convolve_opts()?)?;
            let out = LawOut::new(format!("{} x {n}", spec.label()), &d);
            let text = match ctx.format {
                ReportFormat::Csv => out.csv(),
                _ => ctx.json(&out)?,
            };
            ctx.emit(&text)
        }
        Command::Kolmogorov { law, n, no_standardize } => {
            let d = sum_law(&law.spec()?, n, !no_standardize, &ctx.convolve_opts()?)?;
            let text = ctx.json(&kolmogorov_vs_normal(&d))?;
            ctx.emit(&text)
        }
        Command::ChfCheck { law, n, points, c_small } => {
            if let Some(c) = c_small {
                ctx.cfg.bounds.c_small = c;
            }
            ctx.cfg.bounds.validate()?;
            let ds = summands(&law.spec()?, n)?;
            let out = ChfCheckOut {
                n,
                summand: lemma3_sweep(&ds[0], points)?,
                sum: lemma4_sweep(&ds, ctx.cfg.bounds.c_small, points)?,
            };
            let text = ctx.json(&out)?;
            ctx.emit(&text)
        }
        Command::Kernel => {
            let k = ctx.kernel()?;
            match ctx.out.clone() {
                Some(dir) => kernel_tables(&k, &dir, &ctx),
                None => {
                    let text = ctx.json(&k.summary())?;
                    ctx.emit(&text)
                }
            }
        }
        Command::SmoothBound {
            law,
            n,
            eps,
            auto_eps,
            c_small,
        } => {
            if let Some(c) = c_small {
                ctx.cfg.bounds.c_small = c;
            }
            if let Some(e) = eps {
                ctx.cfg.bounds.eps = Some(e);
            }
            if auto_eps {
                ctx.cfg.bounds.eps = None;
            }
            ctx.cfg.bounds.validate()?;
            let k = ctx.kernel()?;
            let ds = summands(&law.spec()?, n)?;
            let report = match ctx.cfg.bounds.eps {
                Some(e) if !auto_eps => {
                    let x = ChfExpr::DiscreteAtoms(sum_iid(&ds[0], n, &ctx.convolve_opts()?)?);
                    esseen_rhs(&x, NORMAL_DENSITY_MAX, e, &k, &ctx.cfg.bounds)?
                }
                _ => end_to_end_bound(&ds, &k, &ctx.cfg.bounds)?,
            };
            let text = ctx.json(&report)?;
            ctx.emit(&text)
        }
        Command::Rate { law, n } => {
            let exp = rate_experiment(&law.spec()?, &n)?;
            let text = render_rate(&exp, ctx.format, &ctx.config_echo())?;
            ctx.emit(&text)
        }
        Command::ConstantScan { family, n } => {
            let names = if family.is_empty() {
                vec!["rademacher".to_string(), "centered_bernoulli:0.3".into(), "two_point:-2:1".into()]
            } else {
                family
            };
            let specs = names
                .iter()
                .map(|f| f.parse::<Family>().map(DistSpec::Family))
                .collect::<Result<Vec<_>>>()?;
            let text = ctx.json(&constant_scan(&specs, &n)?)?;
            ctx.emit(&text)
        }
    }
}

fn exit_code(e: &LabError) -> u8 {
    match e {
        LabError::Io(_) => 4,
        e if e.is_numerical() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("esseen-lab: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
