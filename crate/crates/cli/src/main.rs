use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ramlt_core::adaptation::AdaptationConfig;
use ramlt_core::diagnostics::{autocorrelation_time, rrmse, ErrorChannels};
use ramlt_core::driver::{run_render_with, trace_csv, Budget, RenderConfig, RenderOptions, StrategyKind};
use ramlt_core::image_io::Image;
use ramlt_core::mutations::Perturbation;
use ramlt_core::scene::SceneModel;

#[derive(Parser)]
#[command(
    name = "ramlt",
    version,
    about = "Metropolis light transport with regionally adaptive kernels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a scene file
    Render(Box<RenderArgs>),
    /// Print the rRMSE of an image against a reference
    Compare(CompareArgs),
    /// Autocorrelation time and effective sample size of each CSV column
    Diagnose(DiagnoseArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Fixed,
    Global,
    RaGrid,
    RaQuadtree,
}

#[derive(Clone, Copy, ValueEnum)]
enum PerturbationArg {
    Lens,
    MultiChain,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "ra-quadtree")]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value = "lens")]
    perturbation: PerturbationArg,
    /// Mutation budget; accepts forms like 1e6
    #[arg(long, default_value = "1e6", value_parser = parse_count)]
    mutations: u64,
    /// Wall-clock budget in seconds, replacing the mutation budget
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, default_value_t = 1)]
    chains: usize,
    /// Visits per adaptation batch (L)
    #[arg(long, default_value_t = 10)]
    batch: u64,
    #[arg(long, default_value_t = 1.0)]
    gamma_max: f64,
    #[arg(long, default_value_t = 5.0)]
    gamma_scale: f64,
    /// Target acceptance probability
    #[arg(long, default_value_t = 0.5)]
    alpha_star: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    lambda_init: f64,
    #[arg(long, default_value_t = -30.0, allow_negative_numbers = true)]
    lambda_min: f64,
    /// Ratio of the secondary to the primary kernel scale (multi-chain)
    #[arg(long, default_value_t = 1.0)]
    sigma_ratio: f64,
    #[arg(long, default_value_t = 20)]
    n_top: usize,
    #[arg(long, default_value_t = 50)]
    n_bottom: usize,
    #[arg(long, default_value = "5000", value_parser = parse_count)]
    m_split: u64,
    #[arg(long, default_value = "1e7", value_parser = parse_count)]
    m_refine: u64,
    /// Samples for the normalization estimate
    #[arg(long, default_value = "1e5", value_parser = parse_count)]
    b_samples: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
    #[arg(long, default_value_t = 20)]
    max_vertices: usize,
    /// Probability of a perturbation when one applies
    #[arg(long, default_value_t = 0.5)]
    perturb_prob: f64,
    /// Mutations between metrics rows
    #[arg(long, default_value = "1e6", value_parser = parse_count)]
    log_interval: u64,
    /// Reference image for the rrmse column of the metrics
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Tonemapped preview
    #[arg(long)]
    png: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    exposure: f64,
    /// Metrics CSV [default: <output>.metrics.csv]
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Adaptation trace CSV
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Partition leaf dump
    #[arg(long)]
    partition_dump: Option<PathBuf>,
    /// Run manifest [default: <output>.manifest]
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// CSV of the luminance of chain 0's state, one row per stride
    #[arg(long)]
    chain_trace: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    chain_trace_stride: u64,
}

#[derive(Args)]
struct CompareArgs {
    image: PathBuf,
    reference: PathBuf,
    #[arg(long, default_value_t = ramlt_core::diagnostics::DEFAULT_EPSILON)]
    epsilon: f64,
    /// Average over RGB channels instead of luminance
    #[arg(long)]
    rgb: bool,
    /// Per-pixel relative error as PFM
    #[arg(long)]
    error_map: Option<PathBuf>,
    /// False-colour error map as PNG
    #[arg(long)]
    error_png: Option<PathBuf>,
    /// Relative error shown as full red
    #[arg(long, default_value_t = 1.0)]
    full_scale: f64,
}

#[derive(Args)]
struct DiagnoseArgs {
    trace: PathBuf,
    /// Only this column
    #[arg(long)]
    column: Option<String>,
}

fn parse_count(s: &str) -> std::result::Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a count"))?;
    if v.is_nan() || v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
        return Err(format!("`{s}` is not a non-negative integer"));
    }
    Ok(v as u64)
}

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write(path: &Path, text: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

impl RenderArgs {
    fn config(&self) -> Result<RenderConfig> {
        let budget = match self.time_limit {
            Some(t) if t > 0.0 && t.is_finite() => Budget::WallClock(Duration::from_secs_f64(t)),
            Some(t) => bail!("time limit {t} must be positive"),
            None => Budget::Mutations(self.mutations),
        };
        Ok(RenderConfig {
            strategy: match self.strategy {
                StrategyArg::Fixed => StrategyKind::Fixed,
                StrategyArg::Global => StrategyKind::Global,
                StrategyArg::RaGrid => StrategyKind::RaGrid,
                StrategyArg::RaQuadtree => StrategyKind::RaQuadtree,
            },
            perturbation: match self.perturbation {
                PerturbationArg::Lens => Perturbation::Lens,
                PerturbationArg::MultiChain => Perturbation::MultiChain,
            },
            budget,
            chains: self.chains,
            adaptation: AdaptationConfig {
                batch: self.batch,
                gamma_max: self.gamma_max,
                gamma_scale: self.gamma_scale,
                alpha_star: self.alpha_star,
                lambda_init: self.lambda_init,
                lambda_min: self.lambda_min,
            },
            sigma_ratio: self.sigma_ratio,
            n_top: self.n_top,
            n_bottom: self.n_bottom,
            m_split: self.m_split,
            m_refine: self.m_refine,
            b_samples: self.b_samples,
            seed: self.seed,
            width: self.width,
            height: self.height,
            max_vertices: self.max_vertices,
            perturb_prob: self.perturb_prob,
            log_interval: self.log_interval,
            record_trace: self.trace.is_some(),
        })
    }
}

fn manifest(args: &RenderArgs, c: &RenderConfig) -> String {
    let mut s = String::new();
    let budget = match c.budget {
        Budget::Mutations(m) => format!("mutations={m}"),
        Budget::WallClock(d) => format!("time_limit={}", d.as_secs_f64()),
    };
    let a = &c.adaptation;
    let perturbation = match c.perturbation {
        Perturbation::Lens => "lens",
        Perturbation::MultiChain => "multi-chain",
    };
    for line in [
        format!("version={}", env!("CARGO_PKG_VERSION")),
        format!("scene={}", args.scene.display()),
        format!("output={}", args.output.display()),
        format!("strategy={}", c.strategy.name()),
        format!("perturbation={perturbation}"),
        budget,
        format!("chains={}", c.chains),
        format!("batch={}", a.batch),
        format!("gamma_max={}", a.gamma_max),
        format!("gamma_scale={}", a.gamma_scale),
        format!("alpha_star={}", a.alpha_star),
        format!("lambda_init={}", a.lambda_init),
        format!("lambda_min={}", a.lambda_min),
        format!("sigma_ratio={}", c.sigma_ratio),
        format!("n_top={}", c.n_top),
        format!("n_bottom={}", c.n_bottom),
        format!("m_split={}", c.m_split),
        format!("m_refine={}", c.m_refine),
        format!("b_samples={}", c.b_samples),
        format!("seed={}", c.seed),
        format!("width={}", c.width),
        format!("height={}", c.height),
        format!("max_vertices={}", c.max_vertices),
        format!("perturb_prob={}", c.perturb_prob),
        format!("log_interval={}", c.log_interval),
    ] {
        let _ = writeln!(s, "{line}");
    }
    s
}

fn render(args: RenderArgs) -> Result<()> {
    let config = args.config()?;
    let scene = SceneModel::load(&args.scene)?;
    let reference = args.reference.as_ref().map(Image::read_pfm).transpose()?;
    let options = RenderOptions {
        reference,
        series_stride: args.chain_trace.as_ref().map(|_| args.chain_trace_stride.max(1)),
    };
    write(
        &args
            .manifest
            .clone()
            .unwrap_or_else(|| with_suffix(&args.output, ".manifest")),
        manifest(&args, &config),
    )?;
    let out = run_render_with(&scene, &config, &options)?;

    out.image.write_pfm(&args.output)?;
    if let Some(p) = &args.png {
        out.image.write_png(p, args.exposure)?;
    }
    let metrics = args
        .metrics
        .clone()
        .unwrap_or_else(|| with_suffix(&args.output, ".metrics.csv"));
    write(&metrics, out.log.to_csv())?;
    if let Some(p) = &args.trace {
        write(p, trace_csv(&out.trace))?;
    }
    if let Some(p) = &args.partition_dump {
        write(p, out.controller.partition().dump())?;
    }
    if let Some(p) = &args.chain_trace {
        let mut s = String::from("luminance\n");
        for v in &out.series {
            let _ = writeln!(s, "{v}");
        }
        write(p, s)?;
    }
    eprintln!(
        "{} mutations in {:.2}s, b = {:.6} ± {:.6}, perturbation acceptance {:.4}",
        out.mutations,
        out.elapsed.as_secs_f64(),
        out.b.value,
        out.b.std_error,
        out.tally.mean_perturb_acceptance()
    );
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    let image = Image::read_pfm(&args.image)?;
    let reference = Image::read_pfm(&args.reference)?;
    let channels = if args.rgb {
        ErrorChannels::Rgb
    } else {
        ErrorChannels::Luminance
    };
    let report = rrmse(&image, &reference, args.epsilon, channels)?;
    if let Some(p) = &args.error_map {
        report.as_image().write_pfm(p)?;
    }
    if let Some(p) = &args.error_png {
        report
            .false_color(args.full_scale)
            .save(p)
            .with_context(|| format!("writing {}", p.display()))?;
    }
    println!("{:.4}", report.rrmse);
    Ok(())
}

fn diagnose(args: DiagnoseArgs) -> Result<()> {
    let mut reader =
        csv::Reader::from_path(&args.trace).with_context(|| format!("reading {}", args.trace.display()))?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        bail!("{}: no columns", args.trace.display());
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: row {}", args.trace.display(), row + 2))?;
        for (i, field) in rec.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .with_context(|| format!("{}: row {}: `{field}` is not a number", args.trace.display(), row + 2))?;
            columns[i].push(v);
        }
    }
    let mut printed = false;
    for (name, series) in headers.iter().zip(&columns) {
        if args.column.as_ref().is_some_and(|c| c != name) {
            continue;
        }
        let d = autocorrelation_time(series).with_context(|| format!("column `{name}`"))?;
        println!("{name} tau={:.4} neff={:.1}", d.tau, d.n_eff);
        printed = true;
    }
    if !printed {
        bail!("no matching column");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Render(a) => render(*a),
        Command::Compare(a) => compare(a),
        Command::Diagnose(a) => diagnose(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
