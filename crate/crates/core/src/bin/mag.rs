use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mag_core::bench::{
    blob_layout, generate_synthetic, perturbed_queries, run_benchmark, run_scaling_study, verify_suite, write_csv,
    BenchConfig, ScalingConfig, ScalingRow, SyntheticKind, SyntheticSpec, VerifyConfig,
};
use mag_core::index::{build_stage1, build_stage2, load_index, materialize, save_index, KnnMode};
use mag_core::io::{read_fvecs, write_fvecs};
use mag_core::oracle::{compute_ground_truth, GroundTruth};
use mag_core::stats::{compute_stats, StatsReport, DEFAULT_CLUSTERS};
use mag_core::{Dataset, EntryPolicy, Error, MetricKind, Result, SearchParams, Searcher};

#[derive(Parser)]
#[command(name = "mag", version, about = "Maximum inner product search over metric-amphibious graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Data-topology indicators and a tuning hint.
    Stats(StatsArgs),
    /// Exact top-k ground truth by exhaustive scan.
    Gt(GtArgs),
    /// Build an index file.
    Build(BuildArgs),
    /// Query an index; one CSV row per query.
    Search(SearchArgs),
    /// Recall / throughput sweep over pool sizes.
    Bench(BenchArgs),
    /// Distance computations at matched recall across dataset sizes.
    Scale(ScaleArgs),
    /// Structural and statistical self-checks.
    Verify(VerifyArgs),
    /// Write a synthetic dataset.
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum MetricArg {
    Ip,
    L2,
}

impl From<MetricArg> for MetricKind {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Ip => MetricKind::InnerProduct,
            MetricArg::L2 => MetricKind::Euclidean,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum KnnArg {
    Exact,
    Nndescent,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum EntryArg {
    Random,
    Medoid,
}

impl From<EntryArg> for EntryPolicy {
    fn from(e: EntryArg) -> Self {
        match e {
            EntryArg::Random => EntryPolicy::RandomSeeded,
            EntryArg::Medoid => EntryPolicy::FixedMedoid,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum KindArg {
    Gaussian,
    Blobs,
    Heavy,
}

#[derive(Args, Serialize)]
struct StatsArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CLUSTERS)]
    clusters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print JSON instead of CSV.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Serialize)]
struct GtArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value_t = 100)]
    k: usize,
    #[arg(long, value_enum, default_value = "ip")]
    metric: MetricArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct BuildArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Candidate neighbours per node for stage 1.
    #[arg(long = "K", default_value_t = 64)]
    k: usize,
    /// Euclidean edges kept per node.
    #[arg(long = "K1", default_value_t = 32)]
    k1: usize,
    /// Dominator edges kept per node.
    #[arg(long = "K2", default_value_t = 32)]
    k2: usize,
    /// Stage-2 search pool size.
    #[arg(long, default_value_t = 100)]
    ls: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "nndescent")]
    knn: KnnArg,
    /// NN-descent rounds.
    #[arg(long, default_value_t = KnnMode::DEFAULT_ITERS)]
    iters: usize,
}

#[derive(Args, Serialize)]
struct LoadArgs {
    #[arg(long)]
    index: PathBuf,
    /// Vectors the index was built from.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    /// Maximum out-degree at load time.
    #[arg(long = "R", default_value_t = 32)]
    r: usize,
    /// Share of the out-degree given to dominator edges.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Euclidean expansions before switching to inner product.
    #[arg(long, default_value_t = 0)]
    m: usize,
    #[arg(long, default_value_t = 100)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "random")]
    entry: EntryArg,
}

#[derive(Args, Serialize)]
struct SearchArgs {
    #[command(flatten)]
    #[serde(flatten)]
    load: LoadArgs,
    #[arg(long, default_value_t = 200)]
    ls: usize,
    /// `ip` runs the metric-switch search; `l2` plain Euclidean search.
    #[arg(long, value_enum, default_value = "ip")]
    metric: MetricArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct BenchArgs {
    #[command(flatten)]
    #[serde(flatten)]
    load: LoadArgs,
    /// Ground truth (ivecs) for the query file.
    #[arg(long)]
    gt: PathBuf,
    /// Comma-separated pool sizes.
    #[arg(long, value_delimiter = ',', default_value = "100,200,400")]
    ls: Vec<usize>,
    /// Query-loop workers; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ScaleArgs {
    #[arg(long, value_delimiter = ',', default_value = "1000,4000,16000,64000")]
    ns: Vec<usize>,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "K", default_value_t = 32)]
    k: usize,
    #[arg(long = "K1", default_value_t = 24)]
    k1: usize,
    #[arg(long = "K2", default_value_t = 24)]
    k2: usize,
    #[arg(long = "build-ls", default_value_t = 64)]
    build_ls: usize,
    #[arg(long, value_enum, default_value = "nndescent")]
    knn: KnnArg,
    #[arg(long = "R", default_value_t = 32)]
    r: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    m: usize,
    #[arg(long, default_value_t = 10)]
    k_results: usize,
    #[arg(long, default_value_t = 100)]
    queries: usize,
    #[arg(long, default_value_t = 0.95)]
    target: f64,
    #[arg(long, default_value_t = 4096)]
    max_ls: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    /// Dataset to check; without it a Gaussian set of `--n` x `--dim` is used.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Prebuilt index to validate against the data.
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    queries: usize,
    #[arg(long = "ndg-limit", default_value_t = 1000)]
    ndg_limit: usize,
}

#[derive(Args, Serialize)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    kind: KindArg,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 16)]
    clusters: usize,
    #[arg(long = "center-scale", default_value_t = 1.0)]
    center_scale: f32,
    #[arg(long, default_value_t = 0.1)]
    spread: f32,
    #[arg(long = "outlier-fraction", default_value_t = 0.0)]
    outlier_fraction: f32,
    #[arg(long = "outlier-norm", default_value_t = 20.0)]
    outlier_norm: f32,
    #[arg(long = "background-fraction", default_value_t = 0.0)]
    background_fraction: f32,
    #[arg(long = "sigma-log", default_value_t = 0.5)]
    sigma_log: f32,
    /// Also write this many jittered copies of non-outlier rows as queries.
    #[arg(long = "num-queries", default_value_t = 0)]
    num_queries: usize,
    #[arg(long = "queries-out")]
    queries_out: Option<PathBuf>,
    #[arg(long = "query-noise", default_value_t = 0.05)]
    query_noise: f32,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn echo<C: Serialize>(config: &C) -> String {
    serde_json::to_string(config).unwrap_or_default()
}

fn knn_mode(k: KnnArg, iters: usize) -> KnnMode {
    match k {
        KnnArg::Exact => KnnMode::Exact,
        KnnArg::Nndescent => KnnMode::NnDescent { iters },
    }
}

fn stats(a: &StatsArgs) -> Result<()> {
    let data = read_fvecs(&a.data)?;
    let report = compute_stats(&data, a.clusters, a.seed)?;
    let mut out = output(None)?;
    if a.json {
        let v = serde_json::json!({ "report": report, "hint": report.tuning_hint() });
        writeln!(out, "{v}")?;
    } else {
        writeln!(out, "# {}", echo(a))?;
        writeln!(out, "{}", StatsReport::CSV_HEADER)?;
        writeln!(out, "{}", report.to_csv_row())?;
    }
    out.flush()?;
    Ok(())
}

fn gt(a: &GtArgs) -> Result<()> {
    let data = read_fvecs(&a.data)?;
    let queries = read_fvecs(&a.queries)?;
    compute_ground_truth(&data, &queries, a.k, a.metric.into())?.write_ivecs(&a.out)
}

fn build(a: &BuildArgs) -> Result<()> {
    let data = read_fvecs(&a.data)?;
    let s1 = build_stage1(&data, a.k, a.k1, knn_mode(a.knn, a.iters), a.seed)?;
    let index = build_stage2(&s1, &data, a.k2, a.ls, a.seed)?;
    save_index(&index, &a.out)?;
    eprintln!("wrote {} nodes to {}", index.len(), a.out.display());
    Ok(())
}

fn load(a: &LoadArgs) -> Result<(Dataset, Dataset, mag_core::SearchGraph)> {
    let index = load_index(&a.index)?;
    let data = read_fvecs(&a.data)?;
    if data.len() != index.len() || data.dim() != index.dim() {
        return Err(Error::Usage(format!(
            "index is {}x{} but data file is {}x{}",
            index.len(),
            index.dim(),
            data.len(),
            data.dim()
        )));
    }
    let queries = read_fvecs(&a.queries)?;
    let graph = materialize(&index, a.r, a.alpha)?;
    Ok((data, queries, graph))
}

fn search(a: &SearchArgs) -> Result<()> {
    let (data, queries, graph) = load(&a.load)?;
    let s = Searcher::new(&graph, &data)?;
    let base = SearchParams {
        pool_size: a.ls,
        k: a.load.k,
        switch_steps: a.load.m,
        seed: a.load.seed,
        entry: a.load.entry.into(),
    };
    let mut scratch = s.scratch();
    let mut out = output(a.out.as_deref())?;
    writeln!(out, "# {}", echo(a))?;
    writeln!(out, "query,dist_comps,hops,ids")?;
    for (i, q) in queries.rows().enumerate() {
        let p = base.for_query(i);
        let r = match a.metric {
            MetricArg::Ip => s.anms(q, &p, &mut scratch)?,
            MetricArg::L2 => s.greedy(q, &p, MetricKind::Euclidean, &mut scratch)?,
        };
        let ids: Vec<String> = r.ids.iter().map(|id| id.to_string()).collect();
        writeln!(out, "{i},{},{},{}", r.stats.dist_comps, r.stats.hops, ids.join(" "))?;
    }
    out.flush()?;
    Ok(())
}

fn bench(a: &BenchArgs) -> Result<()> {
    let (data, queries, graph) = load(&a.load)?;
    let gt = GroundTruth::read_ivecs(&a.gt, MetricKind::InnerProduct)?;
    let cfg = BenchConfig {
        ls: a.ls.clone(),
        r: a.load.r,
        alpha: a.load.alpha,
        m: a.load.m,
        k: a.load.k,
        threads: a.threads,
        reps: a.reps,
        seed: a.load.seed,
        entry: a.load.entry.into(),
    };
    let records = run_benchmark(&graph, &data, &queries, &gt, &cfg)?;
    let mut out = output(a.out.as_deref())?;
    write_csv(&mut out, a, &records)?;
    out.flush()?;
    Ok(())
}

fn scale(a: &ScaleArgs) -> Result<()> {
    let cfg = ScalingConfig {
        ns: a.ns.clone(),
        dim: a.dim,
        seed: a.seed,
        k: a.k,
        k1: a.k1,
        k2: a.k2,
        build_pool: a.build_ls,
        knn: knn_mode(a.knn, KnnMode::DEFAULT_ITERS),
        r: a.r,
        alpha: a.alpha,
        m: a.m,
        topk: a.k_results,
        queries: a.queries,
        target: a.target,
        max_ls: a.max_ls,
    };
    let rows = run_scaling_study(&cfg)?;
    let mut out = output(a.out.as_deref())?;
    writeln!(out, "# {}", echo(a))?;
    writeln!(out, "{}", ScalingRow::CSV_HEADER)?;
    for r in &rows {
        writeln!(out, "{}", r.to_csv_row())?;
    }
    out.flush()?;
    Ok(())
}

fn verify(a: &VerifyArgs) -> Result<bool> {
    let data = match &a.data {
        Some(p) => read_fvecs(p)?,
        None => generate_synthetic(&SyntheticSpec::new(SyntheticKind::GaussianIid, a.n, a.dim, a.seed))?,
    };
    let index = a.index.as_ref().map(load_index).transpose()?;
    let cfg = VerifyConfig { seed: a.seed, queries: a.queries, ndg_limit: a.ndg_limit, ..VerifyConfig::default() };
    let report = verify_suite(&data, index.as_ref(), &cfg)?;
    print!("{}", report.to_table());
    let ok = report.passed();
    println!("{}", if ok { "all checks passed" } else { "some checks FAILED" });
    Ok(ok)
}

fn gen(a: &GenArgs) -> Result<()> {
    let kind = match a.kind {
        KindArg::Gaussian => SyntheticKind::GaussianIid,
        KindArg::Blobs => SyntheticKind::ClusteredBlobs {
            clusters: a.clusters,
            center_scale: a.center_scale,
            spread: a.spread,
            outlier_fraction: a.outlier_fraction,
            outlier_norm: a.outlier_norm,
            background_fraction: a.background_fraction,
        },
        KindArg::Heavy => SyntheticKind::HeavyNormTail { sigma_log: a.sigma_log },
    };
    let data = generate_synthetic(&SyntheticSpec::new(kind, a.n, a.dim, a.seed))?;
    write_fvecs(&data, &a.out)?;
    if a.num_queries > 0 {
        let path = a
            .queries_out
            .as_ref()
            .ok_or_else(|| Error::Usage("--num-queries needs --queries-out".into()))?;
        let outliers = match a.kind {
            KindArg::Blobs => blob_layout(a.n, a.outlier_fraction, a.background_fraction)?.0,
            _ => 0,
        };
        let q = perturbed_queries(&data, 0..a.n - outliers, a.num_queries, a.query_noise, a.seed ^ 0x5eed)?;
        write_fvecs(&q, path)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Stats(a) => stats(a).map(|_| true),
        Command::Gt(a) => gt(a).map(|_| true),
        Command::Build(a) => build(a).map(|_| true),
        Command::Search(a) => search(a).map(|_| true),
        Command::Bench(a) => bench(a).map(|_| true),
        Command::Scale(a) => scale(a).map(|_| true),
        Command::Verify(a) => verify(a),
        Command::Gen(a) => gen(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ Error::Usage(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
