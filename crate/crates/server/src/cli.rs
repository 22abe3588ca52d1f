//! The `harmonia` command line.
//!
//! Results go to standard output as JSON. Failures print one JSON line
//! `{"error": kind, "message": ...}` to standard error and exit with 1 (usage),
//! 2 (bad input data) or 3 (internal).

use std::ffi::OsString;
use std::fs;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use harmonia::corpus::{decode_all, generate_planted_corpus, list_images, match_planted, CorpusManifest, PlantedCorpusConfig};
use harmonia::evaluation::{precision_recall, DifferenceReport, PairFixtures, QueryFixtures};
use harmonia::miner::GroupDistance;
use harmonia::{
    default_partition, extract_descriptor, load_partition, mine, open_image, predict_preference, Catalog, CatalogFilter,
    ColorDistanceTable, ExtractConfig, KnowledgeBase, Look, MinerConfig, Partition, Role, Store, UserProfile, Viewer,
};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::api::{self, AppState};

#[derive(Debug, Parser)]
#[command(name = "harmonia", version, about = "Fuzzy color harmony and look preference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct PartitionArg {
    /// Partition JSON file; the built-in 92-color partition when omitted.
    #[arg(long)]
    partition: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the fuzzy dominant color descriptor of an image.
    Extract {
        image: PathBuf,
        #[command(flatten)]
        partition: PartitionArg,
        #[arg(long, default_value_t = 0.05)]
        min_share: f64,
        #[arg(long, default_value_t = 8)]
        max_dominant: usize,
    },
    /// Mine harmonious palettes from a directory of images.
    Mine {
        dir: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        threshold: f64,
        /// Smallest group promoted to a palette.
        #[arg(long, default_value_t = 100)]
        min_size: usize,
        #[arg(long, default_value_t = 0.1)]
        min_weight: f64,
        /// Compare against group mean descriptors instead of every member.
        #[arg(long)]
        centroid: bool,
        /// Knowledge base output file.
        #[arg(long, default_value = "kb.json")]
        out: PathBuf,
        /// Ground-truth manifest from gen-corpus; adds a recovery report.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Include per-image latency in the stats (output is no longer reproducible).
        #[arg(long)]
        timings: bool,
        #[command(flatten)]
        partition: PartitionArg,
    },
    /// Predict the preference score of a look.
    Score {
        #[arg(long)]
        look: PathBuf,
        #[arg(long, conflicts_with = "guest", required_unless_present = "guest")]
        user: Option<PathBuf>,
        #[arg(long)]
        guest: bool,
        #[arg(long)]
        kb: PathBuf,
        #[command(flatten)]
        partition: PartitionArg,
    },
    /// Rank catalog items as additions to an anchor look.
    Rank {
        #[arg(long)]
        anchor: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        kb: PathBuf,
        /// Scores for a guest when omitted.
        #[arg(long)]
        user: Option<PathBuf>,
        #[arg(long)]
        role: Option<Role>,
        #[arg(long)]
        label: Option<String>,
        #[arg(long)]
        limit: Option<usize>,
        #[command(flatten)]
        partition: PartitionArg,
    },
    /// Evaluation metrics.
    Eval {
        #[command(subcommand)]
        metric: EvalCommand,
    },
    /// Write a synthetic corpus with planted palettes and a manifest.
    GenCorpus {
        #[arg(long, default_value_t = 8)]
        palettes: usize,
        #[arg(long, default_value_t = 500)]
        images: usize,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        size: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        /// Only allow this browser origin; any origin when omitted.
        #[arg(long)]
        cors_origin: Option<String>,
        #[command(flatten)]
        partition: PartitionArg,
    },
}

#[derive(Debug, Subcommand)]
enum EvalCommand {
    /// Mean precision, mean recall and their ratio over query results.
    Pr {
        #[arg(long)]
        fixtures: PathBuf,
        /// Print a text table instead of JSON.
        #[arg(long)]
        table: bool,
    },
    /// Average difference between real and predicted preference.
    Diff {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        table: bool,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Internal(String),
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn line(&self) -> String {
        let (kind, message) = match self {
            Failure::Usage(m) => ("usage", m),
            Failure::Data(m) => ("data", m),
            Failure::Internal(m) => ("internal", m),
        };
        serde_json::json!({ "error": kind, "message": message }).to_string()
    }
}

impl From<harmonia::Error> for Failure {
    fn from(e: harmonia::Error) -> Self {
        match &e {
            harmonia::Error::Io(io) if io.kind() != std::io::ErrorKind::NotFound => Failure::Internal(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| Failure::Internal(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

fn load(arg: &PartitionArg) -> CliResult<Partition> {
    match &arg.partition {
        Some(p) => Ok(load_partition(p)?),
        None => Ok(default_partition()),
    }
}

fn load_kb(path: &Path, partition: &Partition) -> CliResult<KnowledgeBase> {
    let kb: KnowledgeBase = read_json(path)?;
    kb.validate_ids(partition)?;
    Ok(kb)
}

/// Parse `args` (program name first), run the command and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let message = e.to_string().lines().filter(|l| !l.trim().is_empty()).collect::<Vec<_>>().join(" ");
            return report(Failure::Usage(message));
        }
    };
    match execute(cli.command) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(f) => report(f),
    }
}

fn report(f: Failure) -> i32 {
    eprintln!("{}", f.line());
    f.exit_code()
}

fn execute(command: Command) -> CliResult<String> {
    match command {
        Command::Extract {
            image,
            partition,
            min_share,
            max_dominant,
        } => {
            let partition = load(&partition)?;
            let cfg = ExtractConfig {
                min_share,
                max_dominant,
                ..ExtractConfig::default()
            };
            let d = extract_descriptor(&open_image(&image)?, &partition, &cfg)?;
            Ok(to_json(&d))
        }
        Command::Mine {
            dir,
            threshold,
            min_size,
            min_weight,
            centroid,
            out,
            manifest,
            timings,
            partition,
        } => {
            let partition = load(&partition)?;
            let table = ColorDistanceTable::new(&partition);
            let cfg = MinerConfig {
                threshold,
                min_group_size: min_size,
                min_palette_weight: min_weight,
                group_distance: if centroid { GroupDistance::Centroid } else { GroupDistance::Exact },
                ..MinerConfig::default()
            };
            cfg.validate()?;
            let planted = manifest.map(|m| read_json::<CorpusManifest>(&m)).transpose()?;
            let outcome = mine(decode_all(list_images(&dir)?), &partition, &table, &cfg, &ExtractConfig::default())?;
            write_file(&out, &to_json(&outcome.knowledge_base()))?;

            let mut report = serde_json::to_value(&outcome.stats).expect("serializable");
            if !timings {
                report.as_object_mut().expect("stats object").remove("latency");
            }
            report["kb"] = serde_json::json!(out);
            if let Some(m) = planted {
                let descriptors: Vec<_> = m.palettes.iter().map(|p| p.descriptor()).collect();
                let matches = match_planted(&descriptors, &outcome.palettes, &table);
                let recovered = matches.iter().filter(|r| r.similarity >= 0.8).count();
                report["recovery"] = serde_json::json!({
                    "planted": descriptors.len(),
                    "recovered": recovered,
                    "matches": matches,
                });
            }
            Ok(to_json(&report))
        }
        Command::Score {
            look,
            user,
            guest: _,
            kb,
            partition,
        } => {
            let partition = load(&partition)?;
            let table = ColorDistanceTable::new(&partition);
            let look: Look = read_json(&look)?;
            let kb = load_kb(&kb, &partition)?;
            let profile: Option<UserProfile> = user.map(|u| read_json(&u)).transpose()?;
            let viewer = profile.as_ref().map_or(Viewer::Guest, Viewer::Registered);
            Ok(to_json(&predict_preference(&look, viewer, &kb, &table)?))
        }
        Command::Rank {
            anchor,
            catalog,
            kb,
            user,
            role,
            label,
            limit,
            partition,
        } => {
            let partition = load(&partition)?;
            let table = ColorDistanceTable::new(&partition);
            let anchor: Look = read_json(&anchor)?;
            let catalog: Catalog = read_json(&catalog)?;
            catalog.validate()?;
            let kb = load_kb(&kb, &partition)?;
            let profile: Option<UserProfile> = user.map(|u| read_json(&u)).transpose()?;
            let viewer = profile.as_ref().map_or(Viewer::Guest, Viewer::Registered);
            let filter = CatalogFilter { role, label };
            let items = catalog.items.into_iter().filter(|i| filter.matches(i)).collect();
            let mut ranked = api::rank_items(&anchor, items, viewer, &kb, &table)?;
            if let Some(n) = limit {
                ranked.truncate(n);
            }
            Ok(to_json(&ranked))
        }
        Command::Eval { metric } => match metric {
            EvalCommand::Pr { fixtures, table } => {
                let f: QueryFixtures = read_json(&fixtures)?;
                let pr = precision_recall(&f.queries)?;
                Ok(if table { pr.table(&f.queries) } else { to_json(&pr) })
            }
            EvalCommand::Diff { pairs, table } => {
                let f: PairFixtures = read_json(&pairs)?;
                let d = DifferenceReport::compute(&f.pairs)?;
                Ok(if table { d.table(&f.pairs) } else { to_json(&d) })
            }
        },
        Command::GenCorpus {
            palettes,
            images,
            noise,
            seed,
            size,
            out,
        } => {
            let partition = default_partition();
            let table = ColorDistanceTable::new(&partition);
            let cfg = PlantedCorpusConfig {
                palettes,
                images,
                noise,
                seed,
                width: size,
                height: size,
                ..PlantedCorpusConfig::default()
            };
            let corpus = generate_planted_corpus(&partition, &table, &cfg)?;
            corpus.write_to(&out).map_err(|e| match e {
                harmonia::Error::Io(io) => Failure::Internal(format!("{}: {io}", out.display())),
                other => other.into(),
            })?;
            Ok(to_json(&serde_json::json!({
                "out": out,
                "images": images,
                "palettes": corpus.manifest.palettes,
            })))
        }
        Command::Serve {
            store,
            port,
            bind,
            cors_origin,
            partition,
        } => {
            let partition = load(&partition)?;
            let store = Store::open(&store)?;
            let mut state = AppState::new(partition, store)?;
            if let Some(origin) = cors_origin {
                let value = origin
                    .parse()
                    .map_err(|_| Failure::Usage(format!("invalid CORS origin {origin:?}")))?;
                state = state.with_cors_origin(value);
            }
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Internal(e.to_string()))?;
            runtime
                .block_on(api::serve(state, SocketAddr::new(bind, port)))
                .map_err(|e| Failure::Internal(format!("serve on {bind}:{port}: {e}")))?;
            Ok(String::new())
        }
    }
}
