use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use urbanform::config::PipelineConfig;
use urbanform::pipeline::Pipeline;
use urbanform::synthetic::{planted_city, random_rectangles, toy, PlantedLayout};
use urbanform::{io, Result};

#[derive(Parser)]
#[command(name = "urbanform", version, about = "Urban form types and taxonomy from building footprints")]
struct Cli {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log debug messages.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest buildings and compute the morphological tessellation.
    Tessellate,
    /// Contiguity, street network, blocks and cell links.
    Graph,
    /// Primary characters per cell.
    Characters,
    /// Contextual statistics over each cell's neighbourhood.
    Context,
    /// Gaussian mixture clustering with BIC selection.
    Cluster {
        /// Fit exactly this many components.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Ward taxonomy of the cluster centroids.
    Taxonomy,
    /// Association of the labels with reference categories.
    Validate {
        #[arg(long)]
        categories: Option<PathBuf>,
    },
    /// All stages in order.
    Pipeline,
    /// Write a synthetic input set with a config.
    Generate {
        #[arg(long, value_enum, default_value_t = Kind::Planted)]
        kind: Kind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Building count for `random`.
        #[arg(long, default_value_t = 1000)]
        n: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Planted,
    Random,
    Toy,
}

fn init_logging(verbose: bool) {
    let level = if verbose { log::LevelFilter::Debug } else { log::LevelFilter::Info };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format(|buf, record| {
            let line = serde_json::json!({
                "level": record.level().as_str(),
                "target": record.target(),
                "message": record.args().to_string(),
            });
            writeln!(buf, "{line}")
        })
        .init();
}

fn generate(kind: Kind, out: &Path, seed: u64, n: usize) -> Result<()> {
    io::ensure_dir(out)?;
    let mut config = PipelineConfig::default();
    config.input.buildings = "buildings.geojson".into();
    let (buildings, streets, truth) = match kind {
        Kind::Planted => {
            let city = planted_city(PlantedLayout::default(), seed);
            let names = city.tissue_names();
            let truth: Vec<[String; 2]> =
                city.buildings.buildings.iter().zip(names).map(|(b, t)| [b.id.clone(), t.to_string()]).collect();
            (city.buildings, city.streets, Some(truth))
        }
        Kind::Random => (random_rectangles(n, seed), Vec::new(), None),
        Kind::Toy => {
            let (b, s) = toy();
            config.clustering.k = Some(1);
            (b, s, None)
        }
    };
    io::write_buildings(&out.join("buildings.geojson"), &buildings)?;
    if !streets.is_empty() {
        io::write_lines(&out.join("streets.geojson"), &streets)?;
        config.input.streets = Some("streets.geojson".into());
    }
    if let Some(rows) = truth {
        io::write_rows(&out.join("categories.csv"), &["id", "tissue"], rows)?;
        config.input.categories = Some("categories.csv".into());
    }
    io::write_text(&out.join("config.toml"), &config.to_toml())?;
    log::info!("wrote {} buildings to {}", buildings.len(), out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Command::Generate { kind, out, seed, n } = &cli.command {
        return generate(*kind, out, *seed, *n);
    }
    let config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => {
            let c = PipelineConfig::default();
            c.validate()?;
            c
        }
    };
    let pipeline = Pipeline::new(config);
    match cli.command {
        Command::Tessellate => pipeline.tessellate(),
        Command::Graph => pipeline.graph(),
        Command::Characters => pipeline.characters(),
        Command::Context => pipeline.context(),
        Command::Cluster { k } => pipeline.cluster(k),
        Command::Taxonomy => pipeline.taxonomy(),
        Command::Validate { categories } => pipeline.validate(categories.as_deref()),
        Command::Pipeline => pipeline.run(),
        Command::Generate { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::error!("cannot set up {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
