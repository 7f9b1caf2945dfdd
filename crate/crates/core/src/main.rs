use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use triggernet::dump::{write_records, RevisionReader};
use triggernet::factoid::extract_internal_links;
use triggernet::ngd;
use triggernet::pipeline::{
    self, build_provider, load_timeline, network_stage, parse_config_file, report, rffr_stage,
    score_stage, timeline_stage, OutputDir, PipelineConfig, PipelineError, RevisionSource,
};
use triggernet::rffr::read_cross_csv;

#[derive(Parser)]
#[command(
    name = "triggernet",
    version,
    about = "Factoid triggering networks from wiki revision histories"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stream a dump into NDJSON revision records (`revisions.ndjson`).
    Ingest {
        #[command(flatten)]
        source: DumpArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the factoids of one revision (the last by default), one per line.
    Factoids {
        #[command(flatten)]
        source: DumpArgs,
        /// Revision id to inspect.
        #[arg(long)]
        revision: Option<u64>,
    },
    /// Per-revision factoid counts and quadrant shares.
    Timeline {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value = "by_revision")]
        quadrant_mode: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Revision-window factoid pairs (RFFR) and their cross product.
    Rffr {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = triggernet::rffr::DEFAULT_WINDOW)]
        window: usize,
        /// on: skip repeat users inside a window; off: allow them.
        #[arg(long, default_value = "on")]
        window_dedup: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Score an `rffr_cross.csv` with NGD, writing `rffrg.csv`.
    Score {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        provider: ProviderArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Threshold an `rffrg.csv` and export the network.
    Network {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = ngd::DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = triggernet::network::DEFAULT_STRENGTH_CAP)]
        strength_cap: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run every stage end to end.
    Run(RunArgs),
    /// Summarize one or more `summary.json` files.
    Report {
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct DumpArgs {
    #[arg(long)]
    dump: PathBuf,
    /// Page to select; the first page when omitted.
    #[arg(long)]
    title: Option<String>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SourceArgs {
    #[arg(long)]
    dump: Option<PathBuf>,
    /// NDJSON records from `ingest` instead of a dump.
    #[arg(long)]
    records: Option<PathBuf>,
    #[arg(long, requires = "dump")]
    title: Option<String>,
}

impl SourceArgs {
    fn source(&self) -> RevisionSource {
        match (&self.dump, &self.records) {
            (Some(path), _) => RevisionSource::Dump {
                path: path.clone(),
                title: self.title.clone(),
            },
            (None, Some(path)) => RevisionSource::Records(path.clone()),
            (None, None) => unreachable!("clap enforces one source"),
        }
    }
}

#[derive(Args)]
struct ProviderArgs {
    /// corpus or web.
    #[arg(long, default_value = "corpus")]
    provider: String,
    #[arg(long)]
    corpus_dir: Option<PathBuf>,
    #[arg(long)]
    endpoint: Option<String>,
    /// Environment variable holding the web API key.
    #[arg(long)]
    api_key_env: Option<String>,
    /// Web requests per second.
    #[arg(long)]
    rate_limit: Option<f64>,
    #[arg(long)]
    words_multiplier: Option<f64>,
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl ProviderArgs {
    fn settings(&self) -> HashMap<String, String> {
        let mut s = HashMap::new();
        s.insert("provider".into(), self.provider.clone());
        insert(
            &mut s,
            "corpus_dir",
            self.corpus_dir.as_ref().map(|p| p.display()),
        );
        insert(&mut s, "endpoint", self.endpoint.as_ref());
        insert(&mut s, "api_key_env", self.api_key_env.as_ref());
        insert(&mut s, "rate_limit", self.rate_limit);
        insert(&mut s, "words_multiplier", self.words_multiplier);
        s
    }
}

/// Flags of `run`; each overrides the same key from `--config`.
#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` file with defaults for the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dump: Option<PathBuf>,
    #[arg(long)]
    title: Option<String>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    window_dedup: Option<String>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    quadrant_mode: Option<String>,
    #[arg(long)]
    provider: Option<String>,
    #[arg(long)]
    corpus_dir: Option<PathBuf>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    api_key_env: Option<String>,
    #[arg(long)]
    rate_limit: Option<f64>,
    #[arg(long)]
    words_multiplier: Option<f64>,
    #[arg(long)]
    strength_cap: Option<f64>,
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

fn insert(s: &mut HashMap<String, String>, key: &str, value: Option<impl ToString>) {
    if let Some(v) = value {
        s.insert(key.to_owned(), v.to_string());
    }
}

impl RunArgs {
    fn config(&self) -> Result<PipelineConfig, PipelineError> {
        let mut s = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    PipelineError::Config(format!("config {}: {e}", path.display()))
                })?;
                parse_config_file(&text)?
            }
            None => HashMap::new(),
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        insert(&mut s, "dump", path(&self.dump));
        insert(&mut s, "title", self.title.as_ref());
        insert(&mut s, "window", self.window);
        insert(&mut s, "window_dedup", self.window_dedup.as_ref());
        insert(&mut s, "threshold", self.threshold);
        insert(&mut s, "quadrant_mode", self.quadrant_mode.as_ref());
        insert(&mut s, "provider", self.provider.as_ref());
        insert(&mut s, "corpus_dir", path(&self.corpus_dir));
        insert(&mut s, "endpoint", self.endpoint.as_ref());
        insert(&mut s, "api_key_env", self.api_key_env.as_ref());
        insert(&mut s, "rate_limit", self.rate_limit);
        insert(&mut s, "words_multiplier", self.words_multiplier);
        insert(&mut s, "strength_cap", self.strength_cap);
        insert(&mut s, "cache", path(&self.cache));
        insert(&mut s, "out", path(&self.out));
        insert(&mut s, "jobs", self.jobs);
        PipelineConfig::from_settings(&s)
    }
}

fn input_err(
    stage: &'static str,
    e: impl std::error::Error + Send + Sync + 'static,
) -> PipelineError {
    PipelineError::Input {
        stage,
        source: Box::new(e),
    }
}

fn open(path: &Path, stage: &'static str) -> Result<BufReader<File>, PipelineError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| input_err(stage, e))
}

fn dedup_flag(raw: &str) -> Result<bool, PipelineError> {
    match raw {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(PipelineError::Config(format!(
            "invalid --window-dedup {other:?} (on|off)"
        ))),
    }
}

fn execute(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Ingest { source, out } => {
            std::fs::create_dir_all(&out).map_err(|e| input_err("ingest", e))?;
            let target = out.join("revisions.ndjson");
            let partial = out.join("revisions.ndjson.partial");
            let mut w = BufWriter::new(File::create(&partial).map_err(|e| input_err("ingest", e))?);
            let reader =
                RevisionReader::new(open(&source.dump, "ingest")?, source.title.as_deref());
            let mut count = 0usize;
            for rev in reader {
                let rev = rev.map_err(|e| input_err("ingest", e))?;
                write_records(&mut w, std::iter::once(&rev)).map_err(|e| input_err("ingest", e))?;
                count += 1;
            }
            w.flush().map_err(|e| input_err("ingest", e))?;
            std::fs::rename(&partial, &target).map_err(|e| input_err("ingest", e))?;
            log::info!("wrote {count} revisions to {}", target.display());
        }
        Command::Factoids { source, revision } => {
            let reader =
                RevisionReader::new(open(&source.dump, "ingest")?, source.title.as_deref());
            let mut chosen = None;
            for rev in reader {
                let rev = rev.map_err(|e| input_err("ingest", e))?;
                match revision {
                    Some(id) if rev.revision_id == id => chosen = Some(rev),
                    Some(_) => {}
                    // keep the chronologically last revision
                    None => {
                        let later = chosen.as_ref().is_none_or(|c: &triggernet::Revision| {
                            (rev.timestamp, rev.revision_id) > (c.timestamp, c.revision_id)
                        });
                        if later {
                            chosen = Some(rev);
                        }
                    }
                }
            }
            let rev = chosen.ok_or_else(|| {
                PipelineError::Config(format!(
                    "revision {} not found",
                    revision.unwrap_or_default()
                ))
            })?;
            let links: BTreeSet<_> = extract_internal_links(&rev.text);
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            for f in links {
                writeln!(w, "{}", f.as_str()).map_err(|e| input_err("factoids", e))?;
            }
        }
        Command::Timeline {
            source,
            quadrant_mode,
            out,
        } => {
            let mode = quadrant_mode.parse().map_err(PipelineError::Config)?;
            let loaded = load_timeline(&source.source())?;
            let mut dir = OutputDir::create(&out)?;
            timeline_stage(&mut dir, &loaded, mode)?;
            dir.commit()?;
        }
        Command::Rffr {
            source,
            window,
            window_dedup,
            out,
        } => {
            if window == 0 {
                return Err(PipelineError::Config("window must be at least 1".into()));
            }
            let window = triggernet::WindowConfig {
                size: window,
                distinct_users: dedup_flag(&window_dedup)?,
            };
            let loaded = load_timeline(&source.source())?;
            let mut dir = OutputDir::create(&out)?;
            rffr_stage(&mut dir, &loaded, window)?;
            dir.commit()?;
        }
        Command::Score {
            input,
            provider,
            out,
        } => {
            if provider.jobs == 0 {
                return Err(PipelineError::Config("jobs must be at least 1".into()));
            }
            let mut settings = provider.settings();
            settings.insert("dump".into(), String::new());
            let config = PipelineConfig::from_settings(&settings)?;
            let hits = build_provider(&config.provider).map_err(|e| match e {
                ngd::ProviderError::Config(msg) => PipelineError::Config(msg),
                other => PipelineError::Provider {
                    stage: "score",
                    source: Box::new(other),
                },
            })?;
            let pairs =
                read_cross_csv(open(&input, "score")?).map_err(|e| input_err("score", e))?;
            let mut dir = OutputDir::create(&out)?;
            let (_, queries) = score_stage(
                &mut dir,
                &pairs,
                hits.as_ref(),
                provider.cache.as_deref(),
                provider.jobs,
            )?;
            dir.commit()?;
            log::info!("{queries} provider queries");
        }
        Command::Network {
            input,
            threshold,
            strength_cap,
            out,
        } => {
            if threshold.is_nan() || threshold < 0.0 || strength_cap.is_nan() || strength_cap <= 0.0
            {
                return Err(PipelineError::Config(
                    "threshold must be non-negative and strength cap positive".into(),
                ));
            }
            let scores = ngd::read_rffrg_csv(open(&input, "network")?)
                .map_err(|e| input_err("network", e))?;
            let mut dir = OutputDir::create(&out)?;
            network_stage(&mut dir, &scores, threshold, strength_cap)?;
            dir.commit()?;
        }
        Command::Run(args) => {
            let config = args.config()?;
            let outcome = pipeline::run(&config)?;
            log::info!(
                "{} provider queries; outputs in {}",
                outcome.provider_queries,
                outcome.out_dir.display()
            );
            print!("{}", report(std::slice::from_ref(&outcome.summary)));
        }
        Command::Report { summaries } => {
            let loaded = summaries
                .iter()
                .map(|p| pipeline::read_summary(p))
                .collect::<Result<Vec<_>, _>>()?;
            print!("{}", report(&loaded));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
