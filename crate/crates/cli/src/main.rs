//! cusplab: seeded experiments on the space of unimodular lattices.
//!
//! Every run requires an explicit --seed (reruns are bit-reproducible with a
//! single thread). Reports go to stdout or --out, as CSV (default) or JSON.

use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cusplab_core::dani::{dani_forward, PsiFunction};
use cusplab_core::experiment::bc::{bc_count_all, bc_variance_probe};
use cusplab_core::experiment::khinchin::khinchin;
use cusplab_core::experiment::loglaw::loglaw_all;
use cusplab_core::experiment::mixing::mixing_probe;
use cusplab_core::experiment::skriganov::skriganov;
use cusplab_core::experiment::ExperimentConfig;
use cusplab_core::roots::{chamber_tail_integral, roots_table};
use cusplab_core::siegel::{
    siegel_mc, siegel_pair_mc, tail_distribution, SamplerMode, SamplerSpec, TailEstimate,
};

#[derive(Parser)]
#[command(
    name = "cusplab",
    about = "Seeded lattice-dynamics experiments: hitting counts, logarithm laws, \
             summation-formula Monte Carlo, approximation-function transforms",
    after_help = "CSV schemas per subcommand:\n\
      bc-count:     t,hits,expected,ratio,residual,sampler,replicate\n\
      bc-variance:  window_start,window_end,expected,variance,ratio,ratio_shuffled,sampler\n\
      loglaw:       t,running_max,sampler,replicate\n\
      khinchin:     sample,alpha,count,final_decade_increment,sampler\n\
      skriganov:    lattice,q,radius,count,monotone,stagnant,sampler\n\
      mixing-probe: t,correlation,std_err,sampler\n\
      roots table:  i,k_i,weight_norm_sq,ratio (plus a closed-form exponent row)\n\
      roots integral: z,j,log_j\n\
      siegel:       statistic,radius,mean,std_err,samples,sampler\n\
      tail:         z,phi_hat,ci,upper_bound,lower_bound,scored,sampler\n\
      dani:         t,r,lambda,L,extrapolated"
)]
struct Cli {
    /// Master seed; mandatory, never wall-clock defaulted
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<String>,

    /// Report format
    #[arg(long, global = true, default_value = "csv")]
    format: Format,

    /// Worker threads for the Monte-Carlo subcommands
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// JSON file mirroring the experiment configuration; explicit flags override
    #[arg(long, global = true)]
    config: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, clap::ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Hitting counts S_N vs expected tail sums E_N along a diagonal orbit
    BcCount(BcArgs),
    /// Second-moment probe: Var(S) / E(S) over windows, with shuffled control
    BcVariance(VarArgs),
    /// Running maxima of the height vs log t; slope targets 1/k
    Loglaw(OrbitArgs),
    /// Witness-count growth for random alpha (m = n = 1)
    Khinchin(KhinchinArgs),
    /// Multiplicative witness counts across a radius ladder
    Skriganov(SkriganovArgs),
    /// Correlation decay of a smooth observable (exploratory)
    MixingProbe(MixingArgs),
    /// Root-system tables and the Weyl-chamber tail integral
    Roots(RootsArgs),
    /// Primitive-vector (and pair) counting Monte Carlo
    Siegel(SiegelArgs),
    /// Empirical tail of the height function with the analytic envelope
    Tail(TailArgs),
    /// Tabulate the approximation-function transform as (t, r, lambda, L)
    Dani(DaniArgs),
}

#[derive(Args)]
struct BcArgs {
    #[arg(long)]
    dim: Option<usize>,
    /// flow shorthand m:n
    #[arg(long)]
    flow: Option<String>,
    /// rate spec: zero | const:RHO | linear:SLOPE | log:COEFF
    #[arg(long)]
    rate: Option<String>,
    /// psi spec, e.g. power_log:c=1,a=1,q=0,x0=1 (used when --rate is absent)
    #[arg(long)]
    psi: Option<String>,
    #[arg(long)]
    horizon: Option<u64>,
    /// independent seed replicates
    #[arg(long)]
    replicates: Option<u32>,
    /// CSV produced by `cusplab tail` to use as the tail model
    #[arg(long)]
    tail_from: Option<String>,
}

#[derive(Args)]
struct VarArgs {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    flow: Option<String>,
    #[arg(long)]
    rate: Option<String>,
    #[arg(long)]
    psi: Option<String>,
    #[arg(long)]
    horizon: Option<u64>,
    /// number of random start lattices
    #[arg(long)]
    samples: Option<u64>,
    /// comma-separated windows like 1:100,100:1000
    #[arg(long)]
    windows: Option<String>,
}

#[derive(Args)]
struct OrbitArgs {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    flow: Option<String>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    replicates: Option<u32>,
}

#[derive(Args)]
struct KhinchinArgs {
    #[arg(long)]
    psi: Option<String>,
    #[arg(long)]
    qmax: Option<f64>,
    #[arg(long)]
    samples: Option<u64>,
}

#[derive(Args)]
struct SkriganovArgs {
    #[arg(long)]
    dim: Option<usize>,
    /// comma-separated log exponents, e.g. 0.5,2
    #[arg(long)]
    q: Option<String>,
    /// comma-separated radius ladder, e.g. 100,1000,10000
    #[arg(long)]
    ladder: Option<String>,
    #[arg(long)]
    samples: Option<u64>,
}

#[derive(Args)]
struct MixingArgs {
    #[arg(long)]
    samples: Option<u64>,
    /// comma-separated lags, e.g. 0,1,2,4,8
    #[arg(long)]
    times: Option<String>,
}

#[derive(Args)]
struct RootsArgs {
    #[command(subcommand)]
    what: RootsCommand,
}

#[derive(Subcommand)]
enum RootsCommand {
    /// Print (i, k_i, ||omega_i||^2, k_i/||omega_i||) and the exponent
    Table {
        #[arg(long)]
        n: usize,
    },
    /// Tabulate the chamber tail integral J(z)
    Integral {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 20.0)]
        zmax: f64,
        #[arg(long, default_value_t = 0.5)]
        step: f64,
    },
}

#[derive(Args)]
struct SiegelArgs {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    radius: f64,
    #[arg(long)]
    samples: Option<u64>,
    /// also count ordered primitive pairs
    #[arg(long)]
    pairs: bool,
    /// sampler mode override (exact2 is k = 2 only)
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Args)]
struct TailArgs {
    #[arg(long)]
    dim: Option<usize>,
    /// grid as start:stop:step
    #[arg(long, default_value = "0:3:0.25")]
    zgrid: String,
    #[arg(long)]
    samples: Option<u64>,
}

#[derive(Args)]
struct DaniArgs {
    /// psi spec, e.g. power_log:c=1,a=1,q=2,x0=2
    #[arg(long)]
    psi: String,
    #[arg(long, default_value_t = 1)]
    m: u32,
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// tabulate over [t0, t0 + span]
    #[arg(long, default_value_t = 40.0)]
    span: f64,
    #[arg(long, default_value_t = 0.25)]
    step: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad number {t:?}")))
        .collect()
}

fn parse_windows(s: &str) -> Result<Vec<(u64, u64)>, String> {
    s.split(',')
        .map(|w| {
            let (a, b) = w.split_once(':').ok_or_else(|| format!("bad window {w:?}"))?;
            Ok((
                a.trim().parse().map_err(|_| format!("bad window start {a:?}"))?,
                b.trim().parse().map_err(|_| format!("bad window end {b:?}"))?,
            ))
        })
        .collect()
}

fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("grid must be start:stop:step, got {s:?}"));
    }
    let start: f64 = parts[0].parse().map_err(|_| "bad grid start".to_string())?;
    let stop: f64 = parts[1].parse().map_err(|_| "bad grid stop".to_string())?;
    let step: f64 = parts[2].parse().map_err(|_| "bad grid step".to_string())?;
    if step <= 0.0 || stop < start {
        return Err("grid needs step > 0 and stop >= start".into());
    }
    let mut out = Vec::new();
    let mut i = 0u32;
    loop {
        let z = start + step * i as f64;
        if z > stop + 1e-12 {
            break;
        }
        out.push(z);
        i += 1;
    }
    Ok(out)
}

/// Base config: the --config file when present, defaults otherwise; the
/// mandatory seed comes from the flag or the file.
fn base_config(cli: &Cli, subcommand: &str) -> Result<ExperimentConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
            serde_json::from_str::<ExperimentConfig>(&text)
                .map_err(|e| format!("{path}: {e}"))?
        }
        None => {
            let seed = cli.seed.ok_or("--seed is mandatory (no wall-clock default)")?;
            ExperimentConfig::new(subcommand, seed)
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.subcommand = subcommand.to_string();
    cfg.threads = cli.threads;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn emit(cli: &Cli, csv: String, json: String) -> Result<(), String> {
    let body = match cli.format {
        Format::Csv => csv,
        Format::Json => json,
    };
    match &cli.out {
        Some(path) => fs::write(path, body).map_err(|e| format!("{path}: {e}")),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn read_tail_csv(path: &str) -> Result<TailEstimate, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    let mut z = Vec::new();
    let mut phi = Vec::new();
    let mut sampler = String::from("lookup");
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 8 {
            return Err(format!("{path}:{}: expected 8 columns", i + 1));
        }
        z.push(cols[0].parse::<f64>().map_err(|_| "bad z".to_string())?);
        phi.push(cols[1].parse::<f64>().map_err(|_| "bad phi".to_string())?);
        sampler = cols[6].to_string();
    }
    let n = z.len();
    Ok(TailEstimate {
        dim: 2,
        sampler,
        norm: "sup".into(),
        z,
        phi_hat: phi,
        ci: vec![0.0; n],
        upper: vec![0.0; n],
        lower: vec![0.0; n],
        scored: vec![true; n],
        samples: 0,
    })
}

fn run(cli: Cli) -> Result<(), String> {
    let err = |e: cusplab_core::Error| e.to_string();
    match &cli.command {
        Command::BcCount(a) => {
            let mut cfg = base_config(&cli, "bc-count")?;
            if let Some(d) = a.dim {
                cfg.dim = d;
            }
            cfg.flow = a.flow.clone().or(cfg.flow);
            cfg.rate = a.rate.clone().or(cfg.rate);
            cfg.psi = a.psi.clone().or(cfg.psi);
            if let Some(h) = a.horizon {
                cfg.horizon = h;
            }
            if let Some(r) = a.replicates {
                cfg.seeds = r;
            }
            let tail = match &a.tail_from {
                Some(p) => Some(read_tail_csv(p)?),
                None => None,
            };
            let reports = bc_count_all(&cfg, tail.as_ref()).map_err(err)?;
            let mut csv = String::new();
            for (i, rep) in reports.iter().enumerate() {
                let body = rep.to_csv();
                csv.push_str(if i == 0 { &body } else { body.split_once('\n').unwrap().1 });
            }
            for rep in &reports {
                eprintln!(
                    "replicate {}: final ratio {:.4} (decade range [{:.4}, {:.4}]){}",
                    rep.replicate,
                    rep.final_ratio,
                    rep.final_decade_min,
                    rep.final_decade_max,
                    if rep.convergent_regime {
                        " [convergent regime: finite total count expected]"
                    } else {
                        ""
                    }
                );
            }
            emit(&cli, csv, serde_json::to_string_pretty(&reports).unwrap())
        }
        Command::BcVariance(a) => {
            let mut cfg = base_config(&cli, "bc-variance")?;
            if let Some(d) = a.dim {
                cfg.dim = d;
            }
            cfg.flow = a.flow.clone().or(cfg.flow);
            cfg.rate = a.rate.clone().or(cfg.rate);
            cfg.psi = a.psi.clone().or(cfg.psi);
            if let Some(h) = a.horizon {
                cfg.horizon = h;
            } else if cfg.horizon == 10_000 {
                cfg.horizon = 1000;
            }
            if let Some(s) = a.samples {
                cfg.samples = s;
            }
            if let Some(w) = &a.windows {
                cfg.windows = Some(parse_windows(w)?);
            }
            let rep = bc_variance_probe(&cfg).map_err(err)?;
            emit(&cli, rep.to_csv(), serde_json::to_string_pretty(&rep).unwrap())
        }
        Command::Loglaw(a) => {
            let mut cfg = base_config(&cli, "loglaw")?;
            if let Some(d) = a.dim {
                cfg.dim = d;
            }
            cfg.flow = a.flow.clone().or(cfg.flow);
            if let Some(h) = a.horizon {
                cfg.horizon = h;
            } else if cfg.horizon == 10_000 {
                cfg.horizon = 100_000;
            }
            if let Some(r) = a.replicates {
                cfg.seeds = r;
            }
            let reports = loglaw_all(&cfg).map_err(err)?;
            let mut csv = String::new();
            for (i, rep) in reports.iter().enumerate() {
                let body = rep.to_csv();
                csv.push_str(if i == 0 { &body } else { body.split_once('\n').unwrap().1 });
            }
            for rep in &reports {
                eprintln!(
                    "replicate {}: slope {:.4} (target {})",
                    rep.replicate, rep.slope, rep.target
                );
            }
            emit(&cli, csv, serde_json::to_string_pretty(&reports).unwrap())
        }
        Command::Khinchin(a) => {
            let mut cfg = base_config(&cli, "khinchin")?;
            cfg.psi = a.psi.clone().or(cfg.psi);
            cfg.qmax = a.qmax.or(cfg.qmax);
            if let Some(s) = a.samples {
                cfg.samples = s;
            }
            let rep = khinchin(&cfg).map_err(err)?;
            eprintln!(
                "mean count {:.3} vs predicted {:.3}; final-decade increment {:.3}",
                rep.mean_count, rep.predicted_mean, rep.mean_final_increment
            );
            emit(&cli, rep.to_csv(), serde_json::to_string_pretty(&rep).unwrap())
        }
        Command::Skriganov(a) => {
            let mut cfg = base_config(&cli, "skriganov")?;
            if let Some(d) = a.dim {
                cfg.dim = d;
            }
            if let Some(q) = &a.q {
                cfg.q_exponents = Some(parse_list(q)?);
            }
            if let Some(l) = &a.ladder {
                cfg.ladder = Some(parse_list(l)?);
            }
            if let Some(s) = a.samples {
                cfg.samples = s;
            }
            let rep = skriganov(&cfg).map_err(err)?;
            for (i, q) in rep.q_exponents.iter().enumerate() {
                eprintln!(
                    "q = {q}: monotone growth in {:.0}% of lattices, stagnant in {:.0}% \
                     (medians per rung: {:?})",
                    100.0 * rep.frac_monotone[i],
                    100.0 * rep.frac_stagnant[i],
                    rep.median_counts[i]
                );
            }
            emit(&cli, rep.to_csv(), serde_json::to_string_pretty(&rep).unwrap())
        }
        Command::MixingProbe(a) => {
            let mut cfg = base_config(&cli, "mixing-probe")?;
            if let Some(s) = a.samples {
                cfg.samples = s;
            } else if cfg.samples == 200 {
                cfg.samples = 100_000;
            }
            if let Some(t) = &a.times {
                cfg.times = Some(parse_list(t)?);
            }
            let rep = mixing_probe(&cfg).map_err(err)?;
            eprintln!(
                "qualitative probe; fitted decay rate: {}",
                rep.decay_rate.map_or("unresolved".into(), |r| format!("{r:.3}"))
            );
            emit(&cli, rep.to_csv(), serde_json::to_string_pretty(&rep).unwrap())
        }
        Command::Roots(a) => {
            // deterministic computation, but the seed contract is uniform
            let _ = base_config(&cli, "roots")?;
            match a.what {
            RootsCommand::Table { n } => {
                let (rows, k) = roots_table(n).map_err(err)?;
                let mut csv = String::from("i,k_i,weight_norm_sq,ratio\n");
                for (i, ki, w2, ratio) in &rows {
                    csv.push_str(&format!("{i},{ki},{w2},{ratio}\n"));
                }
                csv.push_str(&format!("exponent,,,{k}\n"));
                let json = serde_json::json!({ "n": n, "rows": rows, "exponent": k });
                emit(&cli, csv, serde_json::to_string_pretty(&json).unwrap())
            }
            RootsCommand::Integral { n, zmax, step } => {
                let mut csv = String::from("z,j,log_j\n");
                let mut rows = Vec::new();
                let mut z = 0.0;
                while z <= zmax + 1e-12 {
                    let j = chamber_tail_integral(n, z).map_err(err)?;
                    csv.push_str(&format!("{z},{j},{}\n", j.ln()));
                    rows.push((z, j));
                    z += step;
                }
                let json = serde_json::json!({ "n": n, "rows": rows });
                emit(&cli, csv, serde_json::to_string_pretty(&json).unwrap())
            }
        }},
        Command::Siegel(a) => {
            let cfg = base_config(&cli, "siegel")?;
            let dim = a.dim.unwrap_or(cfg.dim);
            let samples = a.samples.unwrap_or(100_000);
            let spec = match a.mode.as_deref() {
                None => SamplerSpec::auto(dim, cfg.seed),
                Some("exact2") => SamplerSpec::with_mode(dim, SamplerMode::Exact2, cfg.seed),
                Some("surrogate") => {
                    SamplerSpec::with_mode(dim, SamplerMode::OrbitSurrogate, cfg.seed)
                }
                Some(other) => return Err(format!("unknown sampler mode {other:?}")),
            }
            .map_err(err)?;
            let mut csv = String::from("statistic,radius,mean,std_err,samples,sampler\n");
            let mut reports = Vec::new();
            let est = siegel_mc(spec, a.radius, samples, cli.threads).map_err(err)?;
            csv.push_str(&format!(
                "primitive_count,{},{},{},{},{}\n",
                a.radius, est.mean, est.std_err, est.samples, est.sampler
            ));
            eprintln!(
                "primitive count mean {:.5} (expected {:.5} for Haar)",
                est.mean,
                (2.0 * a.radius).powi(dim as i32) * cusplab_core::siegel::siegel_constant(dim)
            );
            reports.push(("primitive_count", est));
            if a.pairs {
                let est = siegel_pair_mc(spec, a.radius, samples, cli.threads).map_err(err)?;
                csv.push_str(&format!(
                    "primitive_pairs,{},{},{},{},{}\n",
                    a.radius, est.mean, est.std_err, est.samples, est.sampler
                ));
                reports.push(("primitive_pairs", est));
            }
            emit(&cli, csv, serde_json::to_string_pretty(&reports).unwrap())
        }
        Command::Tail(a) => {
            let cfg = base_config(&cli, "tail")?;
            let dim = a.dim.unwrap_or(cfg.dim);
            let samples = a.samples.unwrap_or(100_000);
            let grid = parse_grid(&a.zgrid)?;
            let spec = SamplerSpec::auto(dim, cfg.seed).map_err(err)?;
            let est = tail_distribution(spec, &grid, samples, cli.threads).map_err(err)?;
            emit(&cli, est.to_csv(), serde_json::to_string_pretty(&est).unwrap())
        }
        Command::Dani(a) => {
            // seed not used, but keep the interface uniform and reproducible
            let _ = base_config(&cli, "dani")?;
            let psi = PsiFunction::parse(&a.psi).map_err(err)?;
            let rate = dani_forward(&psi, a.m, a.n).map_err(err)?;
            let mut csv = String::from("t,r,lambda,L,extrapolated\n");
            let mut rows = Vec::new();
            let mut i = 0u32;
            loop {
                let t = rate.t0() + a.step * i as f64;
                if t > rate.t0() + a.span + 1e-12 {
                    break;
                }
                let pt = rate.eval_detailed(t, a.m, a.n).map_err(err)?;
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    pt.t, pt.r, pt.lambda, pt.big_l, pt.extrapolated
                ));
                rows.push(serde_json::json!({
                    "t": pt.t, "r": pt.r, "lambda": pt.lambda, "L": pt.big_l,
                    "extrapolated": pt.extrapolated,
                }));
                i += 1;
            }
            let json = serde_json::json!({
                "psi": psi.spec_string(), "m": a.m, "n": a.n, "t0": rate.t0(), "rows": rows,
            });
            emit(&cli, csv, serde_json::to_string_pretty(&json).unwrap())
        }
    }
}
