//! Command-line front end: generate instances, build indices, answer
//! watershed queries, and benchmark the three designs.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O, 4 validation, 5 unknown reach.
//! Every command is deterministic given its inputs and flags, and every
//! output file is written atomically.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use headwater::grid::{partition_from_raster, read_raster, write_raster, write_wkt, GridError};
use headwater::lrg::{build_lrg, LrgError, LrgIndex};
use headwater::mns::mns_label;
use headwater::models::{compare_models, generate, ModelError, SyntheticSpec};
use headwater::network::{normalize, read_network, write_network, NetworkError, ReachId, StreamTree};
use headwater::sw::{stitch_watershed, QueryError};
use headwater::MnsLabels;

#[derive(Parser)]
#[command(name = "headwater", version, about = "Watershed delineation over stream networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic stream network and catchment raster
    Gen(GenArgs),
    /// Build a layered dissolve index from a network and raster
    Build(BuildArgs),
    /// Delineate one reach's watershed from a stored index
    Query(QueryArgs),
    /// Compare baseline, indexed, and fully precomputed designs
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Number of reaches
    #[arg(long)]
    n: u64,
    /// Grid dimensions as WxH; defaults to a square with headroom
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(u32, u32)>,
    /// Random seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Child-count weights as count:weight pairs, e.g. 1:0.8,2:0.2
    #[arg(long, value_parser = parse_branching)]
    branching: Option<Branching>,
    /// Target mean leaves per internal slab, echoed in the summary
    #[arg(long)]
    nu: Option<f64>,
    /// Output network file
    #[arg(long, default_value = "network.tsv")]
    network: PathBuf,
    /// Output raster file
    #[arg(long, default_value = "raster.txt")]
    raster: PathBuf,
}

#[derive(Args)]
struct BuildArgs {
    /// Input network file
    #[arg(long)]
    network: PathBuf,
    /// Input raster file
    #[arg(long)]
    raster: PathBuf,
    /// Grouping base, at least 2
    #[arg(long, default_value_t = 2)]
    b: u32,
    /// Output index file
    #[arg(long)]
    index: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    /// Input index file
    #[arg(long)]
    index: PathBuf,
    /// Reach to delineate
    #[arg(long)]
    reach: u64,
    /// Output boundary file (one POLYGON per line)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Input network file
    #[arg(long)]
    network: PathBuf,
    /// Input raster file
    #[arg(long)]
    raster: PathBuf,
    /// Grouping bases, comma separated
    #[arg(long, value_delimiter = ',', default_value = "2")]
    b: Vec<u32>,
    /// Report stem; writes <out>.txt and <out>.csv
    #[arg(long)]
    out: PathBuf,
    /// Which report form to print on stdout
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Table,
    Csv,
}

fn parse_grid(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s
        .split_once('x')
        .ok_or_else(|| format!("expected WxH, got `{s}`"))?;
    let w: u32 = w.parse().map_err(|_| format!("bad width `{w}`"))?;
    let h: u32 = h.parse().map_err(|_| format!("bad height `{h}`"))?;
    Ok((w, h))
}

// Wrapped so clap takes the whole list as one value; a bare Vec field
// means one element per occurrence to the derive macro.
#[derive(Clone, Debug)]
struct Branching(Vec<(u32, f64)>);

fn parse_branching(s: &str) -> Result<Branching, String> {
    let mut pairs = Vec::new();
    for part in s.split(',') {
        let (k, w) = part
            .split_once(':')
            .ok_or_else(|| format!("expected count:weight, got `{part}`"))?;
        let k: u32 = k.parse().map_err(|_| format!("bad child count `{k}`"))?;
        let w: f64 = w.parse().map_err(|_| format!("bad weight `{w}`"))?;
        if !w.is_finite() || w < 0.0 {
            return Err(format!("weight `{w}` must be finite and nonnegative"));
        }
        pairs.push((k, w));
    }
    if pairs.iter().map(|&(_, w)| w).sum::<f64>() <= 0.0 {
        return Err("weights must not all be zero".to_string());
    }
    Ok(Branching(pairs))
}

/// A failed command: what to print and which exit code to use.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(tag: &str, detail: impl std::fmt::Display) -> Self {
        Failure { code: 2, message: format!("{tag}: {detail}") }
    }
    fn io(detail: impl std::fmt::Display) -> Self {
        Failure { code: 3, message: format!("Io: {detail}") }
    }
    fn validation(tag: &str, detail: impl std::fmt::Display) -> Self {
        Failure { code: 4, message: format!("{tag}: {detail}") }
    }
    fn unknown_reach(detail: impl std::fmt::Display) -> Self {
        Failure { code: 5, message: format!("UnknownReach: {detail}") }
    }
}

fn network_failure(e: NetworkError) -> Failure {
    let tag = match &e {
        NetworkError::Empty => "Empty",
        NetworkError::DuplicateReach(_) => "DuplicateReach",
        NetworkError::DanglingDownstream { .. } => "DanglingDownstream",
        NetworkError::CycleDetected(_) => "CycleDetected",
        NetworkError::MultipleRoots(_) => "MultipleRoots",
        NetworkError::UnknownReach(_) => "UnknownReach",
        NetworkError::Parse { .. } => "Parse",
        NetworkError::Io(_) => return Failure::io(e),
    };
    Failure::validation(tag, e)
}

fn grid_failure(e: GridError) -> Failure {
    let tag = match &e {
        GridError::EmptyInput => "EmptyInput",
        GridError::MissingCatchment { .. } => "MissingCatchment",
        GridError::UnknownOwner { .. } => "UnknownOwner",
        GridError::Parse { .. } => "Parse",
        GridError::Io(_) => return Failure::io(e),
    };
    Failure::validation(tag, e)
}

fn lrg_failure(e: LrgError) -> Failure {
    let tag = match &e {
        LrgError::InvalidBase(_) => return Failure::usage("InvalidBase", e),
        LrgError::MissingCatchment { .. } => "MissingCatchment",
        LrgError::UnknownOwner { .. } => "UnknownOwner",
        LrgError::OverlappingCatchments { .. } => "OverlappingCatchments",
        LrgError::Parse { .. } => "Parse",
        LrgError::Io(_) => return Failure::io(e),
    };
    Failure::validation(tag, e)
}

fn model_failure(e: ModelError) -> Failure {
    match e {
        ModelError::GridTooSmall { .. } => Failure::usage("GridTooSmall", e),
        ModelError::NoBases => Failure::usage("NoBases", e),
        ModelError::Index(inner) => lrg_failure(inner),
        ModelError::Query(inner) => query_failure(inner),
    }
}

fn query_failure(e: QueryError) -> Failure {
    match &e {
        QueryError::UnknownReach(_) => Failure::unknown_reach(e),
    }
}

fn require_inputs(paths: &[&Path]) -> Result<(), Failure> {
    for p in paths {
        if !p.is_file() {
            return Err(Failure::io(format!("input file not found: {}", p.display())));
        }
    }
    Ok(())
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let tmp = path.with_extension("tmp");
    let write = |p: &Path| -> std::io::Result<()> {
        let mut f = std::fs::File::create(p)?;
        f.write_all(bytes)?;
        f.sync_all()
    };
    write(&tmp)
        .and_then(|()| std::fs::rename(&tmp, path))
        .map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn load_instance(
    network: &Path,
    raster: &Path,
) -> Result<
    (
        StreamTree,
        MnsLabels,
        std::collections::BTreeMap<ReachId, headwater::CellCatchment>,
    ),
    Failure,
> {
    let raw = read_network(network).map_err(network_failure)?;
    let tree = normalize(&raw).map_err(network_failure)?;
    let labels = mns_label(&tree);
    let grid = read_raster(raster).map_err(grid_failure)?;
    let catchments = partition_from_raster(&grid, &tree).map_err(grid_failure)?;
    Ok((tree, labels, catchments))
}

fn cmd_gen(args: GenArgs) -> Result<(), Failure> {
    if args.n == 0 {
        return Err(Failure::usage("InvalidFlag", "--n must be at least 1"));
    }
    let mut spec = SyntheticSpec {
        n: args.n,
        seed: args.seed,
        bandwidth_hint: args.nu,
        ..SyntheticSpec::default()
    };
    if let Some((w, h)) = args.grid {
        spec.grid_width = w;
        spec.grid_height = h;
    }
    if let Some(Branching(pairs)) = args.branching {
        spec.branching = pairs;
    }
    let (tree, raster) = generate(&spec).map_err(model_failure)?;
    write_network(&tree, &args.network).map_err(network_failure)?;
    write_raster(&raster, &args.raster).map_err(grid_failure)?;
    println!("wrote network: {} ({} reaches)", args.network.display(), tree.len());
    println!(
        "wrote raster: {} ({}x{}, {} cells)",
        args.raster.display(),
        raster.width(),
        raster.height(),
        raster.cell_count()
    );
    if let Some(nu) = args.nu {
        println!("bandwidth hint: {nu:.2}");
    }
    Ok(())
}

fn cmd_build(args: BuildArgs) -> Result<(), Failure> {
    require_inputs(&[&args.network, &args.raster])?;
    let (_, labels, catchments) = load_instance(&args.network, &args.raster)?;
    let index = build_lrg(&labels, &catchments, args.b).map_err(lrg_failure)?;
    index.save(&args.index).map_err(lrg_failure)?;
    let stored = index.storage_stats();
    let ledger = index.ledger();
    println!(
        "layers: {} (top level {}, base {})",
        index.layer_count(),
        index.top_level(),
        index.base()
    );
    println!("stored: {} polygons, {} nodes", stored.polygons, stored.nodes);
    println!(
        "build ledger: {} polygon operands, {} node operands",
        ledger.operands, ledger.operand_nodes
    );
    println!("wrote index: {}", args.index.display());
    Ok(())
}

fn cmd_query(args: QueryArgs) -> Result<(), Failure> {
    require_inputs(&[&args.index])?;
    let index = LrgIndex::load(&args.index).map_err(lrg_failure)?;
    let reach = ReachId::new(args.reach)
        .ok_or_else(|| Failure::unknown_reach("reach ids start at 1, got 0"))?;
    let result = stitch_watershed(&index, reach).map_err(query_failure)?;
    write_wkt(&args.out, &result.boundary)
        .map_err(|e| Failure::io(format!("{}: {e}", args.out.display())))?;
    println!(
        "merged: {} polygons, {} nodes",
        result.merged_polygons, result.merged_nodes
    );
    println!("area: {} cells", result.area());
    println!("wrote boundary: {}", args.out.display());
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    if args.b.is_empty() {
        return Err(Failure::usage("NoBases", "--b needs at least one base"));
    }
    if let Some(bad) = args.b.iter().find(|&&b| b < 2) {
        return Err(Failure::usage("InvalidBase", format!("base {bad} is below 2")));
    }
    require_inputs(&[&args.network, &args.raster])?;
    let (tree, labels, catchments) = load_instance(&args.network, &args.raster)?;
    let report = compare_models(&tree, &labels, &catchments, &args.b).map_err(model_failure)?;
    let table = report.to_table();
    let csv = report.to_csv();
    atomic_write(&args.out.with_extension("txt"), table.as_bytes())?;
    atomic_write(&args.out.with_extension("csv"), csv.as_bytes())?;
    match args.format {
        Format::Table => print!("{table}"),
        Format::Csv => print!("{csv}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Build(args) => cmd_build(args),
        Command::Query(args) => cmd_query(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
