use std::path::{Path, PathBuf};
use std::process::ExitCode;

use absynth::eval::LandmarkMatch;
use absynth::llm::BackendConfig;
use absynth::pipeline::{self, RunConfig, GALLERY_FILE, MANIFEST_FILE, SPECS_FILE};
use absynth::record::Scenario;
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "absynth", version, about = "Generate, gate and score abstract-image instruction data")]
struct Cli {
    /// Validate inputs and print what would happen without writing files.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate images, instruction records and a gate report.
    Gen(GenArgs),
    /// Score a prediction file against a gold manifest.
    Eval(EvalArgs),
    /// Dataset statistics for a manifest.
    Stats(StatsArgs),
    /// Write a static HTML page showing each image with its questions.
    Gallery(GalleryArgs),
    /// Re-derive every answer in a generated directory from its specs.
    Verify(VerifyArgs),
    /// Draw a stratified sample of records for manual review.
    Review(ReviewArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Scenario to generate; repeat for several.
    #[arg(long, value_parser = parse_scenario)]
    scenario: Vec<Scenario>,
    /// Generate every scenario.
    #[arg(long, conflicts_with = "scenario")]
    all: bool,
    /// Accepted images per selected scenario.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// TOML run config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// TOML backend config enabling answer voting through a chat endpoint.
    #[arg(long)]
    backend: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// Directory for score_report.json and score_report.txt.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 2 when more predictions than this are missing.
    #[arg(long)]
    max_missing: Option<usize>,
    /// Score routes by forward greedy matching instead of LCS.
    #[arg(long)]
    greedy: bool,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Directory for stats.json and stats.txt.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GalleryArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Defaults to index.html beside the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Directory written by `gen`.
    #[arg(long)]
    dir: PathBuf,
}

#[derive(Args)]
struct ReviewArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to review.jsonl beside the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse()
}

fn parent_of(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn run_config(args: &GenArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &args.backend {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        cfg.backend = Some(BackendConfig::from_toml(&text)?);
    }
    let selected: Vec<Scenario> = if args.all { Scenario::ALL.to_vec() } else { args.scenario.clone() };
    if !selected.is_empty() {
        let count = args.count.unwrap_or(10);
        cfg.counts = selected.into_iter().map(|s| (s, count)).collect();
    } else if let Some(count) = args.count {
        cfg.counts.values_mut().for_each(|c| *c = count);
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out.clone_from(out);
    }
    if let Some(jobs) = args.jobs {
        cfg.jobs = jobs;
    }
    if cfg.counts.is_empty() {
        bail!("nothing to generate: pass --scenario, --all or a config with [counts]");
    }
    cfg.check()?;
    Ok(cfg)
}

fn gen(args: &GenArgs, dry_run: bool) -> Result<ExitCode> {
    let cfg = run_config(args)?;
    if dry_run {
        println!("config ok; would write to {}", cfg.out.display());
        for (sc, n) in &cfg.counts {
            println!("  {sc}: {n} images");
        }
        return Ok(ExitCode::SUCCESS);
    }
    let out = pipeline::generate(&cfg)?;
    out.write(&cfg.out)?;
    print!("{}", out.summary_table());
    println!("{} records written to {}", out.manifest.records.len(), cfg.out.join(MANIFEST_FILE).display());
    Ok(ExitCode::SUCCESS)
}

fn eval(args: &EvalArgs, dry_run: bool) -> Result<ExitCode> {
    let mode = if args.greedy { LandmarkMatch::Greedy } else { LandmarkMatch::Lcs };
    let report = pipeline::eval_files(&args.gold, &args.pred, mode)?;
    print!("{}", report.to_table());
    if !dry_run {
        let dir = args.out.clone().unwrap_or_else(|| parent_of(&args.pred));
        write_file(&dir.join("score_report.json"), serde_json::to_string_pretty(&report)?)?;
        write_file(&dir.join("score_report.txt"), report.to_table())?;
    }
    if let Some(limit) = args.max_missing {
        if report.missing > limit {
            eprintln!("{} predictions missing, limit is {limit}", report.missing);
            return Ok(ExitCode::from(2));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn stats(args: &StatsArgs, dry_run: bool) -> Result<ExitCode> {
    let stats = pipeline::stats_file(&args.manifest)?;
    print!("{}", stats.to_table());
    if !dry_run {
        let dir = args.out.clone().unwrap_or_else(|| parent_of(&args.manifest));
        write_file(&dir.join("stats.json"), serde_json::to_string_pretty(&stats)?)?;
        write_file(&dir.join("stats.txt"), stats.to_table())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn gallery(args: &GalleryArgs, dry_run: bool) -> Result<ExitCode> {
    let manifest = pipeline::load_manifest(&args.manifest)?;
    let html = pipeline::gallery_html(&manifest);
    let path = args.out.clone().unwrap_or_else(|| parent_of(&args.manifest).join(GALLERY_FILE));
    if !dry_run {
        write_file(&path, html)?;
    }
    println!("gallery of {} records: {}", manifest.records.len(), path.display());
    Ok(ExitCode::SUCCESS)
}

fn verify(args: &VerifyArgs) -> Result<ExitCode> {
    let manifest = pipeline::load_manifest(&args.dir.join(MANIFEST_FILE))?;
    let specs = pipeline::load_specs(&args.dir.join(SPECS_FILE))?;
    if let Err(e) = manifest.check() {
        bail!("manifest invalid: {e}");
    }
    let report = pipeline::verify_manifest(&manifest, &specs);
    println!("{}/{} records verified", report.ok, report.checked);
    for (id, reason) in &report.failures {
        println!("  {id}: {reason}");
    }
    Ok(if report.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn review(args: &ReviewArgs, dry_run: bool) -> Result<ExitCode> {
    let manifest = pipeline::load_manifest(&args.manifest)?;
    let sample = pipeline::review_sample(&manifest, args.fraction, args.seed)?;
    let path = args.out.clone().unwrap_or_else(|| parent_of(&args.manifest).join("review.jsonl"));
    if !dry_run {
        let mut text = String::new();
        for r in &sample {
            text.push_str(&serde_json::to_string(r)?);
            text.push('\n');
        }
        write_file(&path, text)?;
    }
    println!("{} of {} records sampled for review: {}", sample.len(), manifest.records.len(), path.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => gen(a, cli.dry_run),
        Command::Eval(a) => eval(a, cli.dry_run),
        Command::Stats(a) => stats(a, cli.dry_run),
        Command::Gallery(a) => gallery(a, cli.dry_run),
        Command::Verify(a) => verify(a),
        Command::Review(a) => review(a, cli.dry_run),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
