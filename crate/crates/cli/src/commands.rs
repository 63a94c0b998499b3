use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, ValueEnum};
use muhankel::dual_catalog::{DualCatalog, GroupKind, LabelSubset};
use muhankel::fredholm::{
    fourier_samples, index_formula, numerical_index, winding_number, IndexReport,
    DEFAULT_RANK_TOLERANCE,
};
use muhankel::inverse_recovery::{
    self, penalty_registry, recover_bandlimited, stability_scan, tikhonov_recover,
    SpectralDataFile, DEFAULT_PENALTY,
};
use muhankel::operator_assembly::{self, to_dense, write_dense_csv, BlockOperator, DenseHeader};
use muhankel::spectral_analysis::{
    criterion_registry, factor_two_ladder, schatten_series_scan, series_registry, spectrum_with,
    CriterionContext,
};
use muhankel::symbol_space::{
    hankel_coefficients, hankel_symbol_from_fourier, max_entry_error, random_partial_matching,
    random_symbol as random_symbol_of, Symbol, SymbolFile,
};
use muhankel::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::{num, OutDir};
use crate::{parse, Common, Format};

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    All,
    Nonnegative,
}

impl From<Subset> for LabelSubset {
    fn from(s: Subset) -> Self {
        match s {
            Subset::All => LabelSubset::All,
            Subset::Nonnegative => LabelSubset::NonNegative,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct CatalogArgs {
    /// su2, su2:int, torus:<d>, products like su2*torus:1, or group JSON.
    #[arg(long)]
    pub group: String,
    /// Casimir cutoff Λ.
    #[arg(long)]
    pub cutoff: f64,
    #[arg(long, value_enum, default_value_t = Subset::All)]
    pub subset: Subset,
}

#[derive(Args, Debug, Serialize)]
pub struct RandomSymbolArgs {
    #[arg(long)]
    pub group: String,
    /// Domain cutoff (and codomain cutoff unless given separately).
    #[arg(long)]
    pub cutoff: f64,
    #[arg(long)]
    pub codomain_cutoff: Option<f64>,
    /// Probability that a block is present.
    #[arg(long, default_value_t = 0.5)]
    pub density: f64,
    /// Pair each codomain label with at most one domain label.
    #[arg(long)]
    pub matching: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct FourierSymbolArgs {
    /// Coefficients as k:re[:im], comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub coeffs: String,
    /// Casimir cutoff Λ = N² on the circle labels 0..=N.
    #[arg(long)]
    pub cutoff: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct OperatorArgs {
    /// Symbol JSON file.
    #[arg(long)]
    pub symbol: PathBuf,
    /// Codomain weight: power-law exponent s or a weight JSON file.
    #[arg(long, default_value = "0")]
    pub mu: String,
    /// Domain weight: power-law exponent s or a weight JSON file.
    #[arg(long, default_value = "0")]
    pub nu: String,
}

#[derive(Args, Debug, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub op: OperatorArgs,
    /// Schatten exponents, comma separated.
    #[arg(long, default_value = "1,2")]
    pub p: String,
    /// Codomain decay exponent of the symbol class.
    #[arg(long, default_value_t = 2.0)]
    pub m: f64,
    /// Domain decay exponent of the symbol class.
    #[arg(long, default_value_t = 2.0)]
    pub n: f64,
    #[arg(long, default_value_t = 2.0)]
    pub carleson_t: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct ScanArgs {
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value = "su2:int")]
    pub group: String,
    /// Spin at the first rung; each further rung doubles it.
    #[arg(long, default_value_t = 64)]
    pub l_start: u32,
    #[arg(long, default_value_t = 4)]
    pub rungs: u32,
    /// criterion or exact.
    #[arg(long, default_value = "criterion")]
    pub series: String,
}

#[derive(Args, Debug, Serialize)]
pub struct IndexArgs {
    #[command(flatten)]
    pub op: OperatorArgs,
    /// Relative rank tolerance.
    #[arg(long, default_value_t = DEFAULT_RANK_TOLERANCE)]
    pub tolerance: f64,
    /// Circle samples for the winding number.
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct RecoverArgs {
    /// Spectral data JSON file.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "0")]
    pub mu: String,
    #[arg(long, default_value = "0")]
    pub nu: String,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value = DEFAULT_PENALTY)]
    pub penalty: String,
    /// Reference symbol for reporting the entrywise error.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub op: OperatorArgs,
    /// Noise levels δ, comma separated.
    #[arg(long, default_value = "1e-4,3e-4,1e-3,3e-3,1e-2")]
    pub delta_grid: String,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value = DEFAULT_PENALTY)]
    pub penalty: String,
}

fn config<T: Serialize>(common: &Common, args: &T) -> Value {
    json!({ "common": common, "args": args })
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

/// Weight specs that name files count as inputs.
fn weight_inputs(specs: &[&str]) -> Vec<String> {
    specs
        .iter()
        .filter(|s| s.trim().parse::<f64>().is_err())
        .map(|s| s.to_string())
        .collect()
}

fn load_symbol(path: &Path) -> Result<Symbol> {
    let file: SymbolFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    file.into_symbol()
}

fn load_operator(args: &OperatorArgs) -> Result<BlockOperator> {
    let sym = load_symbol(&args.symbol)?;
    operator_assembly::assemble(sym, parse::weight(&args.mu)?, parse::weight(&args.nu)?)
}

fn operator_inputs(args: &OperatorArgs) -> Vec<String> {
    let mut inputs = vec![path_string(&args.symbol)];
    inputs.extend(weight_inputs(&[&args.mu, &args.nu]));
    inputs
}

fn index_cell(index: &[i64]) -> String {
    index
        .iter()
        .map(i64::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn catalog(common: &Common, args: &CatalogArgs) -> Result<()> {
    let group = parse::group(&args.group)?;
    let cat = DualCatalog::enumerate_subset(group, args.cutoff, args.subset.into())?;
    let mut out = OutDir::create(&common.out_dir)?;
    match common.format {
        Format::Json => out.json("catalog.json", &cat.to_file())?,
        Format::Csv => out.csv(
            "catalog.csv",
            &["position", "index", "dim", "casimir", "offset"],
            cat.labels().iter().enumerate().map(|(pos, l)| {
                vec![
                    pos.to_string(),
                    index_cell(l.index()),
                    l.dim().to_string(),
                    num(l.casimir()),
                    cat.offset(pos).0.to_string(),
                ]
            }),
        )?,
    }
    println!("{} labels, dense dimension {}", cat.len(), cat.dense_dim());
    out.finish("catalog", vec![], common.seed, config(common, args))
}

pub fn random_symbol(common: &Common, args: &RandomSymbolArgs) -> Result<()> {
    let group = parse::group(&args.group)?;
    let dom = Arc::new(DualCatalog::enumerate(group.clone(), args.cutoff)?);
    let cod = match args.codomain_cutoff {
        Some(c) => Arc::new(DualCatalog::enumerate(group, c)?),
        None => Arc::clone(&dom),
    };
    let sym = if args.matching {
        random_partial_matching(dom, cod, args.density, common.seed)?
    } else {
        random_symbol_of(dom, cod, args.density, common.seed)?
    };
    let mut out = OutDir::create(&common.out_dir)?;
    out.json("symbol.json", &sym.to_file())?;
    println!("{} blocks", sym.len());
    out.finish("random-symbol", vec![], common.seed, config(common, args))
}

pub fn fourier_symbol(common: &Common, args: &FourierSymbolArgs) -> Result<()> {
    let coeffs = parse::fourier(&args.coeffs)?;
    let cat = Arc::new(DualCatalog::enumerate_subset(
        GroupKind::torus(1),
        args.cutoff,
        LabelSubset::NonNegative,
    )?);
    let sym = hankel_symbol_from_fourier(&coeffs, Arc::clone(&cat), cat)?;
    let mut out = OutDir::create(&common.out_dir)?;
    out.json("symbol.json", &sym.to_file())?;
    println!("{} blocks on {} circle labels", sym.len(), sym.domain().len());
    out.finish("fourier-symbol", vec![], common.seed, config(common, args))
}

pub fn assemble(common: &Common, args: &OperatorArgs) -> Result<()> {
    let op = load_operator(args)?;
    let dense = to_dense(&op)?;
    let header = DenseHeader::for_operator(&op);
    let mut out = OutDir::create(&common.out_dir)?;
    match common.format {
        Format::Csv => {
            out.json("dense_header.json", &header)?;
            write_dense_csv(&dense, out.raw("dense.csv")?)?;
        }
        Format::Json => {
            let rows = |part: fn(&num_complex::Complex64) -> f64| -> Vec<Vec<f64>> {
                dense.row_iter().map(|r| r.iter().map(part).collect()).collect()
            };
            out.json(
                "dense.json",
                &json!({ "header": header, "re": rows(|z| z.re), "im": rows(|z| z.im) }),
            )?;
        }
    }
    println!("{} x {} dense operator", dense.nrows(), dense.ncols());
    out.finish("assemble", operator_inputs(args), common.seed, config(common, args))
}

pub fn spectrum(common: &Common, args: &SpectrumArgs) -> Result<()> {
    let op = load_operator(&args.op)?;
    let ps = parse::reals(&args.p)?;
    let report = spectrum_with(&op, &ps)?;
    let ctx = CriterionContext {
        op: &op,
        m: args.m,
        n: args.n,
        carleson_t: args.carleson_t,
        operator_norm: report.operator_norm,
    };
    let verdicts = criterion_registry()
        .iter()
        .map(|c| c.evaluate(&ctx))
        .collect::<Result<Vec<_>>>()?;

    let mut out = OutDir::create(&common.out_dir)?;
    out.json("spectrum.json", &json!({ "report": report, "criteria": verdicts }))?;
    out.csv(
        "singular_values.csv",
        &["k", "singular_value"],
        report
            .singular_values
            .iter()
            .enumerate()
            .map(|(k, s)| vec![k.to_string(), num(*s)]),
    )?;

    println!("operator norm {}", report.operator_norm);
    for e in &report.schatten {
        println!("S_{} norm {}  (block series {})", e.p, e.norm, e.criterion_series);
    }
    for v in &verdicts {
        let mark = if v.satisfied { "yes" } else { "no" };
        println!("{:<17} {mark:<3}  {}", v.name, v.detail);
    }
    out.finish("spectrum", operator_inputs(&args.op), common.seed, config(common, args))
}

pub fn schatten_scan(common: &Common, args: &ScanArgs) -> Result<()> {
    let group = parse::group(&args.group)?;
    let registry = series_registry();
    let kind = registry.get(&args.series)?;
    let ladder = factor_two_ladder(args.l_start, args.rungs);
    let scan = schatten_series_scan(&group, args.alpha, args.p, &ladder, kind)?;

    let mut out = OutDir::create(&common.out_dir)?;
    out.json("scan.json", &scan)?;
    out.csv(
        "partial_sums.csv",
        &["cutoff", "max_spin", "partial_sum", "exact_schatten_norm"],
        scan.rungs.iter().map(|r| {
            vec![
                num(r.cutoff),
                num(r.max_spin),
                num(r.partial_sum),
                r.exact_schatten_norm.map(num).unwrap_or_default(),
            ]
        }),
    )?;
    for r in &scan.rungs {
        println!("l <= {:>5}: partial sum {}", r.max_spin, r.partial_sum);
    }
    println!(
        "{}: {}",
        scan.verdict.name,
        if scan.verdict.satisfied { "converges" } else { "diverges" }
    );
    out.finish("schatten-scan", vec![], common.seed, config(common, args))
}

#[derive(Serialize)]
struct CircleCheck {
    samples: usize,
    winding_number: Option<i64>,
    winding_error: Option<String>,
    minus_winding: Option<i64>,
    numerical_index: i64,
    agrees: Option<bool>,
}

#[derive(Serialize)]
struct IndexOutput {
    #[serde(flatten)]
    report: IndexReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    circle: Option<CircleCheck>,
}

pub fn index(common: &Common, args: &IndexArgs) -> Result<()> {
    let op = load_operator(&args.op)?;
    let formula = index_formula(&op);
    let numerical = match numerical_index(&op, args.tolerance) {
        Ok(n) => n,
        Err(num_err) => {
            let f = formula?;
            eprintln!("numerical index unavailable: {num_err}");
            println!("formula index {}", f.index);
            let mut out = OutDir::create(&common.out_dir)?;
            out.json("formula_index.json", &f)?;
            return out.finish("index", operator_inputs(&args.op), common.seed, config(common, args));
        }
    };
    let report = IndexReport::new(formula, numerical);

    let circle = hankel_coefficients(op.symbol())
        .filter(|c| !c.is_empty())
        .map(|coeffs| {
            let scale: f64 = coeffs.values().map(|z| z.norm()).sum();
            let samples = fourier_samples(&coeffs, args.samples);
            let wind = winding_number(&samples, 1e-9 * scale);
            let w = wind.as_ref().ok().copied();
            CircleCheck {
                samples: args.samples,
                winding_number: w,
                winding_error: wind.err().map(|e| e.to_string()),
                minus_winding: w.map(|w| -w),
                numerical_index: report.numerical_index,
                agrees: w.map(|w| -w == report.numerical_index),
            }
        });

    match (&report.formula_index, &report.formula_error) {
        (Some(i), _) => println!("formula index {i} ({} contributing pairs)", report.contributing_pairs.len()),
        (None, Some(e)) => println!("formula index inapplicable: {e}"),
        (None, None) => unreachable!("formula result carries either a value or an error"),
    }
    for p in &report.contributing_pairs {
        println!("  pi [{}]  rho [{}]  d_pi*d_rho {}", index_cell(&p.pi), index_cell(&p.rho), p.weight);
    }
    println!(
        "numerical index {} (kernel {}, cokernel {}, tolerance {:e})",
        report.numerical_index,
        report.numerical_kernel_dim,
        report.numerical_cokernel_dim,
        report.rank_tolerance
    );
    if let Some(c) = &circle {
        match (c.winding_number, &c.winding_error) {
            (Some(w), _) => println!(
                "winding number {w}; -wind {} vs numerical index {}: {}",
                -w,
                c.numerical_index,
                if c.agrees == Some(true) { "agree" } else { "differ" }
            ),
            (None, Some(e)) => println!("winding number unavailable: {e}"),
            (None, None) => {}
        }
    }

    let mut out = OutDir::create(&common.out_dir)?;
    if common.format == Format::Csv {
        out.csv(
            "contributing_pairs.csv",
            &["pi", "rho", "weight"],
            report
                .contributing_pairs
                .iter()
                .map(|p| vec![index_cell(&p.pi), index_cell(&p.rho), p.weight.to_string()]),
        )?;
    }
    out.json("index.json", &IndexOutput { report, circle })?;
    out.finish("index", operator_inputs(&args.op), common.seed, config(common, args))
}

pub fn forward(common: &Common, args: &OperatorArgs) -> Result<()> {
    let op = load_operator(args)?;
    let data = inverse_recovery::forward(&op)?;
    let mut out = OutDir::create(&common.out_dir)?;
    let file = data.to_file();
    if common.format == Format::Csv {
        let attribution = file.attribution.clone().unwrap_or_default();
        out.csv(
            "triples.csv",
            &["k", "s", "pi", "rho"],
            file.triples.iter().zip(attribution).enumerate().map(|(k, (t, a))| {
                let (pi, rho) = a.map_or((String::new(), String::new()), |b| {
                    (index_cell(&b.pi), index_cell(&b.rho))
                });
                vec![k.to_string(), num(t.s), pi, rho]
            }),
        )?;
    }
    out.json("spectral_data.json", &file)?;
    let unattributed = data.attribution().iter().filter(|a| a.is_none()).count();
    println!("{} triples, {unattributed} unattributed", data.len());
    out.finish("forward", operator_inputs(args), common.seed, config(common, args))
}

#[derive(Serialize)]
struct RecoverySummary<'a> {
    alpha: f64,
    penalty: &'a str,
    triples: usize,
    blocks: usize,
    max_entry_error: Option<f64>,
}

pub fn recover(common: &Common, args: &RecoverArgs) -> Result<()> {
    let file: SpectralDataFile = serde_json::from_str(&fs::read_to_string(&args.data)?)?;
    let data = file.into_data()?;
    let mu = parse::weight(&args.mu)?;
    let nu = parse::weight(&args.nu)?;
    let registry = penalty_registry();
    let penalty = registry.get(&args.penalty)?;
    let rec = if args.alpha == 0.0 {
        recover_bandlimited(&data, &mu, &nu)?
    } else {
        tikhonov_recover(&data, &mu, &nu, args.alpha, penalty)?
    };
    let mut inputs = vec![path_string(&args.data)];
    inputs.extend(weight_inputs(&[&args.mu, &args.nu]));
    let max_entry_error = match &args.truth {
        Some(path) => {
            inputs.push(path_string(path));
            let truth = load_symbol(path)?;
            if truth.domain() != rec.domain() || truth.codomain() != rec.codomain() {
                return Err(Error::InvalidParameter(
                    "reference symbol lives on different catalogs".into(),
                ));
            }
            Some(max_entry_error(&rec, &truth)?)
        }
        None => None,
    };

    let mut out = OutDir::create(&common.out_dir)?;
    out.json("recovered_symbol.json", &rec.to_file())?;
    out.json(
        "recovery.json",
        &RecoverySummary {
            alpha: args.alpha,
            penalty: penalty.name(),
            triples: data.len(),
            blocks: rec.len(),
            max_entry_error,
        },
    )?;
    println!("recovered {} blocks from {} triples", rec.len(), data.len());
    if let Some(e) = max_entry_error {
        println!("max entry error {e:e}");
    }
    out.finish("recover", inputs, common.seed, config(common, args))
}

pub fn stability(common: &Common, args: &StabilityArgs) -> Result<()> {
    let truth = load_symbol(&args.op.symbol)?;
    let mu = parse::weight(&args.op.mu)?;
    let nu = parse::weight(&args.op.nu)?;
    let deltas = parse::reals(&args.delta_grid)?;
    let registry = penalty_registry();
    let penalty = registry.get(&args.penalty)?;
    let scan = stability_scan(&truth, &mu, &nu, &deltas, args.trials, common.seed, penalty)?;

    let mut out = OutDir::create(&common.out_dir)?;
    out.csv(
        "stability.csv",
        &["delta", "alpha", "mean_error", "std_error"],
        scan.rows
            .iter()
            .map(|r| vec![num(r.delta), num(r.alpha), num(r.mean_error), num(r.std_error)]),
    )?;
    out.json("stability.json", &scan)?;
    for r in &scan.rows {
        println!("delta {:<8e} mean error {:.6e} (std {:.2e})", r.delta, r.mean_error, r.std_error);
    }
    match scan.slope {
        Some(s) => println!("log-log slope {s:.4}"),
        None => println!("log-log slope unavailable (need two positive deltas)"),
    }
    out.finish("stability", operator_inputs(&args.op), common.seed, config(common, args))
}
