//! Command-line front end: argument parsing, dispatch and output.
//!
//! Every subcommand computes its rows in full, then a single writer emits
//! them as CSV (header line first) or JSON lines (a `meta` object first).
//! Rows come out in canonical order whatever the thread count.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::census::{self, WorkBudget};
use crate::counts::{self, ProgressionSpec};
use crate::error::Error;
use crate::factorizer::{self, ProductReach};
use crate::field::{primes_between, FieldCtx};
use crate::fourier;
use crate::poly::falling_product_poly;
use crate::union::{self, RegimeConstants};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

const SCHEMAS: &str = "\
CSV columns (JSON lines carry the same fields, after one {\"meta\": ...} line):
  erdos          p,card,p_minus_2,ok
  census         p,l,n,card,ratio,deviation
  product        p,l,n,card,card_t,product_card,binomial_floor
  quotient       p,l,n,card,card_t,quotient_card
  images         p,j,start,step,length,image,j_interval,cs_bound,ok
  intersect      p,j,k,start,step,length,intersection,j_interval,ok
  langweil       p,j,k,observed,reference,bound,satisfied
  expsum         p,j,k,b1,b2,magnitude,bound,satisfied
  dft            p,start,step,length,l1,inversion_ok
  fourier-bound  p,j,k,start,step,length,observed,reference,bound,satisfied
  union-check    source,a,b,n,union,bound,holds
  bounds         p,kappa,eps1,eps2,delta,n,m                      (without --n)
                 p,n,regime,k,q,main_term,error_term,recommended_kind,recommended
  represent      p,a,method,factors,max_factor,verified
  reach          p,bound,m,card,covers
  embed          p,n,m,witnesses,holds

Exit codes: 0 success, 1 a checked inequality or certificate failed,
2 usage error, 3 work budget exceeded.";

#[derive(Debug, Parser, Serialize)]
#[command(name = "factlab", version, about = "Factorial residues modulo a prime", after_help = SCHEMAS)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct GlobalArgs {
    /// Worker threads (default: all cores)
    #[arg(long, global = true, env = "FACTLAB_THREADS", value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write to this file instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for every sampled progression, frequency or family
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Maximum number of residue multiplications for product-type work
    #[arg(long, global = true, default_value_t = WorkBudget::default().0)]
    pub budget: u64,
    /// Emit rows in canonical order (they always are; kept for scripts)
    #[arg(long, global = true)]
    pub sort: bool,
    /// Leave the wall time out of the JSON meta line
    #[arg(long, global = true)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Pairs {
    /// Every unordered pair, equal ones included
    All,
    Distinct,
    Equal,
}

/// `LO:HI`, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Span {
    pub lo: u64,
    pub hi: u64,
}

impl FromStr for Span {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (lo, hi) = s.split_once(':').ok_or("expected LO:HI")?;
        let lo = lo.trim().parse::<u64>().map_err(|e| format!("bad LO: {e}"))?;
        let hi = hi.trim().parse::<u64>().map_err(|e| format!("bad HI: {e}"))?;
        if hi < lo {
            return Err(format!("empty range {lo}:{hi}"));
        }
        Ok(Span { lo, hi })
    }
}

/// `L:N`, the window `L+1 .. L+N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Window {
    pub l: u64,
    pub n: u64,
}

impl FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (l, n) = s.split_once(':').ok_or("expected L:N")?;
        Ok(Window {
            l: l.trim().parse().map_err(|e| format!("bad L: {e}"))?,
            n: n.trim().parse().map_err(|e| format!("bad N: {e}"))?,
        })
    }
}

/// `START:STEP:LENGTH`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Progression {
    pub start: u64,
    pub step: u64,
    pub length: u64,
}

impl FromStr for Progression {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, step, length] = parts[..] else {
            return Err("expected START:STEP:LENGTH".into());
        };
        let num = |v: &str| v.trim().parse::<u64>().map_err(|e| format!("bad number {v:?}: {e}"));
        Ok(Progression {
            start: num(start)?,
            step: num(step)?,
            length: num(length)?,
        })
    }
}

#[derive(Debug, Args, Serialize)]
pub struct PrimeArgs {
    /// Primes, comma separated
    #[arg(long = "p", value_delimiter = ',')]
    pub primes: Vec<u64>,
    /// Every prime in LO:HI
    #[arg(long)]
    pub range: Option<Span>,
}

impl PrimeArgs {
    fn resolve(&self) -> Result<Vec<u64>, CliError> {
        let mut out = self.primes.clone();
        if let Some(r) = self.range {
            out.extend(primes_between(r.lo, r.hi));
        }
        out.sort_unstable();
        out.dedup();
        if out.is_empty() {
            return Err(CliError::Usage("give --p or a --range containing a prime".into()));
        }
        Ok(out)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ProgressionArgs {
    /// Explicit progressions START:STEP:LENGTH (repeatable)
    #[arg(long = "interval")]
    pub intervals: Vec<Progression>,
    /// Random progressions per prime, drawn from --seed
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// |A(p)| < p - 2 for every prime in a range
    Erdos {
        #[arg(long)]
        range: Span,
    },
    /// |A(p)| or |A(L, N)| and the density |A|/p
    Census {
        #[command(flatten)]
        primes: PrimeArgs,
        #[arg(long)]
        window: Option<Window>,
    },
    /// |A(L, N) · A(L', N')|
    Product {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        window: Window,
        /// Second factor (default: same window)
        #[arg(long)]
        window2: Option<Window>,
    },
    /// |A(L, N) / A(L', N')|
    Quotient {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        window: Window,
        #[arg(long)]
        window2: Option<Window>,
    },
    /// |P_j(I)| against |I|^2 / (|I| + J_I(P_j, P_j))
    Images {
        #[arg(long)]
        p: u64,
        #[arg(long, value_delimiter = ',', default_values_t = [3, 5, 7])]
        j: Vec<u64>,
        #[command(flatten)]
        progressions: ProgressionArgs,
    },
    /// |P_j(I) ∩ P_k(I)| against J_I(P_j, P_k), j < k
    Intersect {
        #[arg(long)]
        p: u64,
        #[arg(long, value_delimiter = ',', default_values_t = [3, 5, 7])]
        j: Vec<u64>,
        #[command(flatten)]
        progressions: ProgressionArgs,
    },
    /// |J(P_j, P_k) - p| against (d-1)(d-2) sqrt(p) + d - 1
    Langweil {
        #[command(flatten)]
        primes: PrimeArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [3, 5, 7])]
        j: Vec<u64>,
        #[arg(long, value_enum, default_value_t = Pairs::All)]
        pairs: Pairs,
    },
    /// Exponential sums over phi(P_j, P_k) = 0 against 2 d^2 sqrt(p)
    Expsum {
        #[command(flatten)]
        primes: PrimeArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [3, 5, 7])]
        j: Vec<u64>,
        #[arg(long, value_enum, default_value_t = Pairs::All)]
        pairs: Pairs,
        /// Fixed frequency B1,B2
        #[arg(long, value_delimiter = ',', num_args = 2)]
        b: Option<Vec<u64>>,
        /// Random nonzero frequencies per pair (ignored with --b)
        #[arg(long, default_value_t = 100)]
        samples: u64,
    },
    /// l1 norm of a progression's spectrum and an inversion sweep
    Dft {
        #[arg(long)]
        p: u64,
        #[command(flatten)]
        progressions: ProgressionArgs,
    },
    /// J_I(P_j, P_k) against (|I|^2/p^2) J with error (S_1^2/p^2) 2 d^2 sqrt(p)
    FourierBound {
        #[arg(long)]
        p: u64,
        #[arg(long, value_delimiter = ',', default_values_t = [3, 5, 7])]
        j: Vec<u64>,
        #[arg(long, value_enum, default_value_t = Pairs::All)]
        pairs: Pairs,
        #[command(flatten)]
        progressions: ProgressionArgs,
    },
    /// Union lower bound on the family Y_1..Y_M, or on random families
    UnionCheck {
        #[arg(long, requires_all = ["n", "m"])]
        p: Option<u64>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        m: Option<u64>,
        /// Number of random families, drawn from --seed
        #[arg(long)]
        random: Option<u64>,
    },
    /// Exponents for the |A(p)A(p)| bound, or the short-interval regime of N
    Bounds {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        n: Option<u64>,
        /// c,c1,c2,c3,c4,c5 (missing ones are 1)
        #[arg(long, value_delimiter = ',')]
        constants: Vec<f64>,
    },
    /// Factorial-product certificates for residues
    Represent {
        #[arg(long)]
        p: u64,
        #[arg(long, value_delimiter = ',')]
        a: Vec<u64>,
        /// Every nonzero residue
        #[arg(long)]
        all: bool,
        /// Random nonzero residues, drawn from --seed
        #[arg(long)]
        samples: Option<u64>,
        /// Use the bounded search with at most K factors (default: three-factorial construction)
        #[arg(long)]
        k: Option<usize>,
        /// Largest factorial argument for the bounded search (default ceil(p^(6/7 + 0.05)))
        #[arg(long)]
        bound: Option<u64>,
    },
    /// Sizes of S_1 ⊆ ... ⊆ S_k, products of at most m factorials of arguments <= B
    Reach {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        bound: Option<u64>,
        #[arg(long, default_value_t = 7)]
        k: usize,
    },
    /// P_j(y) = (y+j)! (p-1-y)! inside A·A for j <= M and odd y <= 2N - M
    Embed {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        m: u64,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("output: {0}")]
    Io(#[from] io::Error),
    #[error("output: {0}")]
    Csv(#[from] csv::Error),
    #[error("output: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(Error::Budget { .. }) => EXIT_BUDGET,
            CliError::Lib(Error::Inconsistency(_) | Error::NotRepresentable { .. }) => EXIT_CHECK_FAILED,
            CliError::Lib(_) | CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => EXIT_CHECK_FAILED,
        }
    }
}

/// Parses the process arguments, runs, and returns the exit code.
pub fn run() -> i32 {
    match Cli::try_parse() {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

pub fn execute(cli: &Cli) -> i32 {
    let started = Instant::now();
    let result = install_pool(cli.global.threads).and_then(|pool| match pool {
        Some(pool) => pool.install(|| dispatch(&cli.command, &cli.global)),
        None => dispatch(&cli.command, &cli.global),
    });
    let outcome = result.and_then(|table| {
        write_output(cli, &table, started)?;
        Ok(table.failed)
    });
    match outcome {
        Ok(false) => EXIT_OK,
        Ok(true) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("factlab: {e}");
            e.exit_code()
        }
    }
}

fn install_pool(threads: Option<u64>) -> Result<Option<rayon::ThreadPool>, CliError> {
    threads
        .map(|n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n as usize)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))
        })
        .transpose()
}

/// Rows of one run, already serialized per field, plus whether any check failed.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<serde_json::Value>>,
    failed: bool,
}

impl Table {
    fn from_rows<T: Serialize>(rows: &[T], failed: bool) -> Result<Self, CliError> {
        let mut header = Vec::new();
        let mut out = Vec::with_capacity(rows.len());
        for row in rows {
            let serde_json::Value::Object(map) = serde_json::to_value(row)? else {
                unreachable!("rows are structs");
            };
            if header.is_empty() {
                header = map.keys().cloned().collect();
            }
            out.push(map.into_iter().map(|(_, v)| v).collect());
        }
        Ok(Table {
            header,
            rows: out,
            failed,
        })
    }
}

fn write_output(cli: &Cli, table: &Table, started: Instant) -> Result<(), CliError> {
    let mut sink: Box<dyn Write> = match &cli.global.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match cli.global.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut sink);
            if !table.header.is_empty() {
                w.write_record(&table.header)?;
            }
            for row in &table.rows {
                w.write_record(row.iter().map(csv_field))?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut meta = serde_json::json!({
                "version": env!("CARGO_PKG_VERSION"),
                "config": cli,
            });
            if !cli.global.no_timing {
                meta["wall_time_ms"] = serde_json::json!(started.elapsed().as_secs_f64() * 1e3);
            }
            serde_json::to_writer(&mut sink, &serde_json::json!({ "meta": meta }))?;
            writeln!(sink)?;
            for row in &table.rows {
                let obj: serde_json::Map<_, _> = table.header.iter().cloned().zip(row.iter().cloned()).collect();
                serde_json::to_writer(&mut sink, &obj)?;
                writeln!(sink)?;
            }
        }
    }
    sink.flush()?;
    Ok(())
}

fn csv_field(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::Null => String::new(),
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn field(p: u64) -> Result<FieldCtx, CliError> {
    Ok(FieldCtx::new(p)?)
}

fn rng(global: &GlobalArgs) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(global.seed)
}

/// Uniform start and length, nonzero step.
pub fn sample_progression(ctx: &FieldCtx, rng: &mut impl Rng) -> ProgressionSpec {
    let p = ctx.p();
    let start = rng.gen_range(0..p);
    let step = rng.gen_range(1..p);
    let length = rng.gen_range(1..=p);
    ProgressionSpec::new(ctx, start, step, length).expect("sampled within range")
}

fn progressions(ctx: &FieldCtx, args: &ProgressionArgs, rng: &mut impl Rng) -> Result<Vec<ProgressionSpec>, CliError> {
    let mut out = args
        .intervals
        .iter()
        .map(|s| ProgressionSpec::new(ctx, s.start, s.step, s.length))
        .collect::<Result<Vec<_>, _>>()?;
    for _ in 0..args.samples.unwrap_or(0) {
        out.push(sample_progression(ctx, rng));
    }
    if out.is_empty() {
        return Err(CliError::Usage("give --interval or --samples".into()));
    }
    Ok(out)
}

fn pair_list(js: &[u64], pairs: Pairs) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    for (i, &j) in js.iter().enumerate() {
        for &k in &js[i..] {
            let keep = match pairs {
                Pairs::All => true,
                Pairs::Distinct => j != k,
                Pairs::Equal => j == k,
            };
            if keep {
                out.push((j, k));
            }
        }
    }
    out
}

#[derive(Serialize)]
struct ErdosRow {
    p: u64,
    card: u64,
    p_minus_2: u64,
    ok: bool,
}

#[derive(Serialize)]
struct CensusRow {
    p: u64,
    l: u64,
    n: u64,
    card: u64,
    ratio: f64,
    deviation: f64,
}

#[derive(Serialize)]
struct ProductRow {
    p: u64,
    l: u64,
    n: u64,
    card: u64,
    card_t: u64,
    product_card: u64,
    binomial_floor: u64,
}

#[derive(Serialize)]
struct QuotientRow {
    p: u64,
    l: u64,
    n: u64,
    card: u64,
    card_t: u64,
    quotient_card: u64,
}

#[derive(Serialize)]
struct ImageRow {
    p: u64,
    j: u64,
    start: u64,
    step: u64,
    length: u64,
    image: u64,
    j_interval: u64,
    cs_bound: f64,
    ok: bool,
}

#[derive(Serialize)]
struct IntersectRow {
    p: u64,
    j: u64,
    k: u64,
    start: u64,
    step: u64,
    length: u64,
    intersection: u64,
    j_interval: u64,
    ok: bool,
}

#[derive(Serialize)]
struct LangWeilRow {
    p: u64,
    j: u64,
    k: u64,
    observed: u64,
    reference: u64,
    bound: f64,
    satisfied: bool,
}

#[derive(Serialize)]
struct ExpSumRow {
    p: u64,
    j: u64,
    k: u64,
    b1: u64,
    b2: u64,
    magnitude: f64,
    bound: f64,
    satisfied: bool,
}

#[derive(Serialize)]
struct DftRow {
    p: u64,
    start: u64,
    step: u64,
    length: u64,
    l1: f64,
    inversion_ok: bool,
}

#[derive(Serialize)]
struct FourierRow {
    p: u64,
    j: u64,
    k: u64,
    start: u64,
    step: u64,
    length: u64,
    observed: u64,
    reference: f64,
    bound: f64,
    satisfied: bool,
}

#[derive(Serialize)]
struct UnionRow {
    source: String,
    a: u64,
    b: u64,
    n: u64,
    union: u64,
    bound: Option<f64>,
    holds: bool,
}

#[derive(Serialize)]
struct ExponentRow {
    p: u64,
    kappa: f64,
    eps1: f64,
    eps2: f64,
    delta: f64,
    n: u64,
    m: u64,
}

#[derive(Serialize)]
struct RegimeRow {
    p: u64,
    n: u64,
    regime: u8,
    k: f64,
    q: f64,
    main_term: f64,
    error_term: Option<f64>,
    recommended_kind: Option<&'static str>,
    recommended: Option<f64>,
}

#[derive(Serialize)]
struct RepresentRow {
    p: u64,
    a: u64,
    method: String,
    factors: String,
    max_factor: u64,
    verified: bool,
}

#[derive(Serialize)]
struct ReachRow {
    p: u64,
    bound: u64,
    m: usize,
    card: u64,
    covers: bool,
}

#[derive(Serialize)]
struct EmbedRow {
    p: u64,
    n: u64,
    m: u64,
    witnesses: u64,
    holds: bool,
}

fn dispatch(command: &Command, global: &GlobalArgs) -> Result<Table, CliError> {
    let budget = WorkBudget(global.budget);
    match command {
        Command::Erdos { range } => {
            let rows: Vec<ErdosRow> = census::erdos_records(range.lo, range.hi)?
                .into_iter()
                .map(|r| ErdosRow {
                    p: r.p,
                    card: r.card,
                    p_minus_2: r.p - 2,
                    ok: r.ok(),
                })
                .collect();
            let failed = rows.iter().any(|r| !r.ok);
            Table::from_rows(&rows, failed)
        }
        Command::Census { primes, window } => {
            let primes = primes.resolve()?;
            let rows = primes
                .par_iter()
                .map(|&p| {
                    let ctx = field(p)?;
                    let (l, n, card) = match window {
                        Some(w) => (w.l, w.n, census::factorial_set(&ctx, w.l, w.n)?.len()),
                        None => (0, p - 1, census::factorial_residue_count(&ctx)),
                    };
                    let ratio = card as f64 / p as f64;
                    Ok(CensusRow {
                        p,
                        l,
                        n,
                        card,
                        ratio,
                        deviation: ratio - (1.0 - (-1.0f64).exp()),
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Table::from_rows(&rows, false)
        }
        Command::Product { p, window, window2 } | Command::Quotient { p, window, window2 } => {
            let ctx = field(*p)?;
            let s = census::factorial_set(&ctx, window.l, window.n)?;
            let t = match window2 {
                Some(w) => census::factorial_set(&ctx, w.l, w.n)?,
                None => s.clone(),
            };
            if matches!(command, Command::Product { .. }) {
                let product_card = census::product_set_card(&ctx, &s, &t, budget)?;
                let row = ProductRow {
                    p: *p,
                    l: window.l,
                    n: window.n,
                    card: s.len(),
                    card_t: t.len(),
                    product_card,
                    binomial_floor: union::binomial_link(product_card),
                };
                Table::from_rows(&[row], false)
            } else {
                let row = QuotientRow {
                    p: *p,
                    l: window.l,
                    n: window.n,
                    card: s.len(),
                    card_t: t.len(),
                    quotient_card: census::quotient_set_card(&ctx, &s, &t, budget)?,
                };
                Table::from_rows(&[row], false)
            }
        }
        Command::Images { p, j, progressions: args } => {
            let ctx = field(*p)?;
            let progs = progressions(&ctx, args, &mut rng(global))?;
            let mut rows = Vec::new();
            for &jj in j {
                let poly = falling_product_poly(&ctx, jj)?;
                for prog in &progs {
                    let image = counts::image_count(&ctx, &poly, prog)?;
                    let j_interval = counts::count_interval(&ctx, &poly, &poly, prog)?;
                    let len = prog.len() as u128;
                    rows.push(ImageRow {
                        p: *p,
                        j: jj,
                        start: prog.start(),
                        step: prog.step(),
                        length: prog.len(),
                        image,
                        j_interval,
                        cs_bound: (len * len) as f64 / (len + j_interval as u128) as f64,
                        ok: image as u128 * (len + j_interval as u128) >= len * len,
                    });
                }
            }
            let failed = rows.iter().any(|r| !r.ok);
            Table::from_rows(&rows, failed)
        }
        Command::Intersect { p, j, progressions: args } => {
            let ctx = field(*p)?;
            let progs = progressions(&ctx, args, &mut rng(global))?;
            let mut rows = Vec::new();
            for (jj, kk) in pair_list(j, Pairs::Distinct) {
                let pj = falling_product_poly(&ctx, jj)?;
                let pk = falling_product_poly(&ctx, kk)?;
                for prog in &progs {
                    let intersection = counts::intersection_count(&ctx, &pj, &pk, prog)?;
                    let j_interval = counts::count_interval(&ctx, &pj, &pk, prog)?;
                    rows.push(IntersectRow {
                        p: *p,
                        j: jj,
                        k: kk,
                        start: prog.start(),
                        step: prog.step(),
                        length: prog.len(),
                        intersection,
                        j_interval,
                        ok: intersection <= j_interval,
                    });
                }
            }
            let failed = rows.iter().any(|r| !r.ok);
            Table::from_rows(&rows, failed)
        }
        Command::Langweil { primes, j, pairs } => {
            let primes = primes.resolve()?;
            let pairs = pair_list(j, *pairs);
            let rows = primes
                .par_iter()
                .map(|&p| {
                    let ctx = field(p)?;
                    pairs
                        .iter()
                        .map(|&(jj, kk)| {
                            let r = counts::langweil_report(
                                &ctx,
                                &falling_product_poly(&ctx, jj)?,
                                &falling_product_poly(&ctx, kk)?,
                            )?;
                            Ok(LangWeilRow {
                                p,
                                j: jj,
                                k: kk,
                                observed: r.observed as u64,
                                reference: r.reference as u64,
                                bound: r.bound,
                                satisfied: r.satisfied,
                            })
                        })
                        .collect::<Result<Vec<_>, CliError>>()
                })
                .collect::<Result<Vec<_>, CliError>>()?
                .into_iter()
                .flatten()
                .collect::<Vec<_>>();
            let failed = rows.iter().any(|r| !r.satisfied);
            Table::from_rows(&rows, failed)
        }
        Command::Expsum {
            primes,
            j,
            pairs,
            b,
            samples,
        } => {
            let primes = primes.resolve()?;
            let mut rng = rng(global);
            let mut rows = Vec::new();
            for p in primes {
                let ctx = field(p)?;
                for (jj, kk) in pair_list(j, *pairs) {
                    let pj = falling_product_poly(&ctx, jj)?;
                    let pk = falling_product_poly(&ctx, kk)?;
                    let freqs: Vec<(u64, u64)> = match b {
                        Some(b) => vec![(b[0], b[1])],
                        None => (0..*samples).map(|_| sample_frequency(p, &mut rng)).collect(),
                    };
                    let part = freqs
                        .par_iter()
                        .map(|&(b1, b2)| {
                            let r = counts::exp_sum_check(&ctx, &pj, &pk, b1, b2)?;
                            Ok(ExpSumRow {
                                p,
                                j: jj,
                                k: kk,
                                b1: ctx.reduce(b1),
                                b2: ctx.reduce(b2),
                                magnitude: r.observed,
                                bound: r.bound,
                                satisfied: r.satisfied,
                            })
                        })
                        .collect::<Result<Vec<_>, CliError>>()?;
                    rows.extend(part);
                }
            }
            let failed = rows.iter().any(|r| !r.satisfied);
            Table::from_rows(&rows, failed)
        }
        Command::Dft { p, progressions: args } => {
            let ctx = field(*p)?;
            let progs = progressions(&ctx, args, &mut rng(global))?;
            let rows: Vec<DftRow> = progs
                .par_iter()
                .map(|prog| DftRow {
                    p: *p,
                    start: prog.start(),
                    step: prog.step(),
                    length: prog.len(),
                    l1: fourier::spectrum(&ctx, prog).l1,
                    inversion_ok: fourier::inversion_sweep(&ctx, prog),
                })
                .collect();
            let failed = rows.iter().any(|r| !r.inversion_ok);
            Table::from_rows(&rows, failed)
        }
        Command::FourierBound {
            p,
            j,
            pairs,
            progressions: args,
        } => {
            let ctx = field(*p)?;
            let progs = progressions(&ctx, args, &mut rng(global))?;
            let mut rows = Vec::new();
            for (jj, kk) in pair_list(j, *pairs) {
                let pj = falling_product_poly(&ctx, jj)?;
                let pk = falling_product_poly(&ctx, kk)?;
                let part = progs
                    .par_iter()
                    .map(|prog| {
                        let r = fourier::fourier_error_bound(&ctx, &pj, &pk, prog)?;
                        Ok(FourierRow {
                            p: *p,
                            j: jj,
                            k: kk,
                            start: prog.start(),
                            step: prog.step(),
                            length: prog.len(),
                            observed: r.observed as u64,
                            reference: r.reference,
                            bound: r.bound,
                            satisfied: r.satisfied,
                        })
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                rows.extend(part);
            }
            let failed = rows.iter().any(|r| !r.satisfied);
            Table::from_rows(&rows, failed)
        }
        Command::UnionCheck { p, n, m, random } => {
            let mut rows = Vec::new();
            if let (Some(p), Some(n), Some(m)) = (p, n, m) {
                let ctx = field(*p)?;
                let report = census::embedding_check(&ctx, *n, *m)?;
                rows.push(union_row(format!("Y:p={p},N={n},M={m}"), &report.y_sets)?);
            }
            let mut rng = rng(global);
            for i in 0..random.unwrap_or(0) {
                rows.push(union_row(format!("random:{i}"), &random_family(&mut rng))?);
            }
            if rows.is_empty() {
                return Err(CliError::Usage("give --p/--n/--m or --random".into()));
            }
            let failed = rows.iter().any(|r| !r.holds);
            Table::from_rows(&rows, failed)
        }
        Command::Bounds { p, n, constants } => match n {
            None => {
                let t = union::theorem1_params(*p)?;
                let row = ExponentRow {
                    p: *p,
                    kappa: t.exponents.kappa,
                    eps1: t.exponents.eps1,
                    eps2: t.exponents.eps2,
                    delta: t.exponents.delta,
                    n: t.n,
                    m: t.m,
                };
                Table::from_rows(&[row], false)
            }
            Some(n) => {
                let consts = RegimeConstants::from_slice(constants)?;
                let t = union::theorem2_bound(*p, *n, &consts)?;
                let (kind, value) = match t.recommended {
                    Some(union::Recommendation::R(v)) => (Some("R"), Some(v)),
                    Some(union::Recommendation::M(v)) => (Some("M"), Some(v)),
                    None => (None, None),
                };
                let row = RegimeRow {
                    p: *p,
                    n: *n,
                    regime: t.regime,
                    k: t.k,
                    q: t.q,
                    main_term: t.main_term,
                    error_term: t.error_term,
                    recommended_kind: kind,
                    recommended: value,
                };
                Table::from_rows(&[row], false)
            }
        },
        Command::Represent {
            p,
            a,
            all,
            samples,
            k,
            bound,
        } => {
            let ctx = field(*p)?;
            let mut targets = a.iter().map(|&v| ctx.residue(v)).collect::<Result<Vec<_>, _>>()?;
            if *all {
                targets.extend((1..*p).map(|v| ctx.residue(v).expect("below p")));
            }
            let mut rng = rng(global);
            for _ in 0..samples.unwrap_or(0) {
                targets.push(ctx.residue(rng.gen_range(1..*p)).expect("below p"));
            }
            if targets.is_empty() {
                return Err(CliError::Usage("give --a, --all or --samples".into()));
            }
            let reach = match k {
                Some(k) => Some(ProductReach::new(
                    &ctx,
                    bound.unwrap_or_else(|| factorizer::seven_factor_bound(*p)),
                    *k,
                    budget,
                )?),
                None => None,
            };
            let rows = targets
                .par_iter()
                .map(|&a| {
                    let (method, cert) = match &reach {
                        Some(r) => (format!("search:k={},B={}", r.levels().len(), r.bound()), r.represent(&ctx, a)?),
                        None => {
                            let cert = factorizer::three_factorial(&ctx, a)?;
                            let branch = if cert.factors()[2] == 1 { "wilson" } else { "wilson-signed" };
                            (branch.to_string(), cert)
                        }
                    };
                    Ok(RepresentRow {
                        p: *p,
                        a: a.value(),
                        method,
                        factors: cert.factors().iter().map(u64::to_string).collect::<Vec<_>>().join(" "),
                        max_factor: cert.bound(),
                        verified: cert.verify(),
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let failed = rows.iter().any(|r| !r.verified);
            Table::from_rows(&rows, failed)
        }
        Command::Reach { p, bound, k } => {
            let ctx = field(*p)?;
            let bound = bound.unwrap_or_else(|| factorizer::seven_factor_bound(*p));
            let levels = factorizer::bounded_product_reach(&ctx, bound, *k, budget)?;
            let rows: Vec<ReachRow> = levels
                .iter()
                .enumerate()
                .map(|(i, s)| ReachRow {
                    p: *p,
                    bound,
                    m: i + 1,
                    card: s.len(),
                    covers: s.len() == p - 1,
                })
                .collect();
            Table::from_rows(&rows, false)
        }
        Command::Embed { p, n, m } => {
            let ctx = field(*p)?;
            let report = census::embedding_check(&ctx, *n, *m)?;
            let row = EmbedRow {
                p: *p,
                n: *n,
                m: *m,
                witnesses: report.witnesses,
                holds: report.holds,
            };
            Table::from_rows(&[row], !report.holds)
        }
    }
}

fn sample_frequency(p: u64, rng: &mut impl Rng) -> (u64, u64) {
    loop {
        let (b1, b2) = (rng.gen_range(0..p), rng.gen_range(0..p));
        if b1 != 0 || b2 != 0 {
            return (b1, b2);
        }
    }
}

/// Between 2 and 16 sparse random subsets of a small field, resampled
/// until the smallest set is at least the largest pairwise intersection
/// and some pair meets.
fn random_family(rng: &mut impl Rng) -> Vec<crate::census::ResidueSet> {
    loop {
        let p = [53u64, 97, 251, 1009][rng.gen_range(0..4)];
        let n = rng.gen_range(2..=16);
        let density = rng.gen_range(0.02..0.6);
        let family: Vec<_> = (0..n)
            .map(|_| {
                let mut values: Vec<u64> = (0..p).filter(|_| rng.gen_bool(density)).collect();
                if values.is_empty() {
                    values.push(rng.gen_range(0..p));
                }
                crate::census::ResidueSet::from_values(p, values).expect("below p")
            })
            .collect();
        if union::verify_family(&family).is_ok_and(|r| r.applicable()) {
            return family;
        }
    }
}

fn union_row(source: String, sets: &[crate::census::ResidueSet]) -> Result<UnionRow, CliError> {
    let r = union::verify_family(sets)?;
    Ok(UnionRow {
        source,
        a: r.a,
        b: r.b,
        n: r.n,
        union: r.union,
        bound: r.bound,
        holds: r.holds(),
    })
}
