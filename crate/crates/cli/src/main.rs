//! `t2v-refine`: refine one prompt, process a batch file, or summarize
//! batch results.
//!
//! Exit codes: 0 accepted (or command succeeded), 2 round budget exhausted
//! without acceptance, 1 error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use refiner_core::domain::UserPrompt;
use refiner_core::harness::{refine_one, run_batch, AppConfig, BackendSource, StatsReport};
use refiner_core::orchestrator::{trace_json, TraceVerbosity};

#[derive(Parser)]
#[command(name = "t2v-refine", version, about = "Scenario-aware prompt refinement for text-to-video generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Refine a single prompt and print the final prompt.
    Refine {
        #[arg(long)]
        prompt: String,
        /// Write the trace JSON here.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Refine every record of a JSONL file of {"id", "prompt"} lines.
    Batch {
        #[arg(long)]
        input: PathBuf,
        /// Result file; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        workers: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Summarize a JSONL file of batch results.
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON config with backend, pipeline and agents sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base URL of an OpenAI-style API, or scripted:<fixture.json>.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    max_rounds: Option<u32>,
    /// Minimum words per evidence chunk.
    #[arg(long)]
    chunk_threshold: Option<usize>,
    #[arg(long)]
    verbosity: Option<TraceVerbosity>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

impl RunArgs {
    fn load(&self) -> Result<(AppConfig, BackendSource)> {
        let mut config = match &self.config {
            Some(path) => AppConfig::load(path)?,
            None => AppConfig::default(),
        };
        if let Some(n) = self.max_rounds {
            config.pipeline.max_rounds = n;
        }
        if let Some(n) = self.chunk_threshold {
            config.pipeline.chunker.min_words_per_chunk = n;
        }
        if let Some(v) = self.verbosity {
            config.pipeline.trace_verbosity = v;
        }
        config.validate()?;
        let source = match &self.backend {
            Some(flag) => BackendSource::from_flag(flag, &mut config.backend)?,
            None => BackendSource::http(&config.backend)?,
        };
        Ok((config, source))
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

fn cmd_refine(prompt: &str, trace_path: Option<&Path>, run: &RunArgs) -> Result<u8> {
    let (config, source) = run.load()?;
    let prompt = UserPrompt::new(prompt)?;
    match refine_one(&prompt, None, &source, &config) {
        Ok(trace) => {
            if let Some(path) = trace_path {
                write_json(path, &trace_json(&trace, config.pipeline.trace_verbosity))?;
            }
            println!("{}", trace.final_prompt.text());
            let s = trace.summary();
            for r in &s.rounds {
                log::info!("round {}: coverage {:.3} contradiction {:.3}", r.round, r.coverage, r.contradiction);
            }
            if trace.accepted {
                Ok(0)
            } else {
                eprintln!("not accepted after {} rounds", trace.rounds_used);
                Ok(2)
            }
        }
        Err(failure) => {
            if let Some(path) = trace_path {
                write_json(path, &serde_json::to_value(&*failure.partial)?)?;
            }
            Err(failure.into())
        }
    }
}

fn cmd_batch(input: &Path, output: Option<&Path>, workers: usize, run: &RunArgs) -> Result<u8> {
    if workers == 0 {
        bail!("--workers must be at least 1");
    }
    let text = fs::read_to_string(input).with_context(|| format!("cannot read {}", input.display()))?;
    let (config, source) = run.load()?;
    let results = run_batch(&text, &source, &config, workers);
    let mut out = String::new();
    for r in &results {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    match output {
        Some(path) => fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))?,
        None => io::stdout().lock().write_all(out.as_bytes())?,
    }
    let failed = results.iter().filter(|r| r.error.is_some()).count();
    log::info!("{} records, {failed} errors", results.len());
    Ok(0)
}

fn cmd_stats(input: &Path, format: Format) -> Result<u8> {
    let text = fs::read_to_string(input).with_context(|| format!("cannot read {}", input.display()))?;
    let report = StatsReport::from_jsonl(&text)?;
    match format {
        Format::Text => println!("{report}"),
        Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Refine { prompt, trace, run } => cmd_refine(prompt, trace.as_deref(), run),
        Command::Batch {
            input,
            output,
            workers,
            run,
        } => cmd_batch(input, output.as_deref(), *workers, run),
        Command::Stats { input, format } => cmd_stats(input, *format),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
