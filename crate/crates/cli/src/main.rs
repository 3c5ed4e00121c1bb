//! `selfrep`: exact spectra, replica iterations, block renormalization and
//! the experiment suite from the command line.
//!
//! Exit codes: 0 success, 1 a suite tolerance failed, 2 usage or input error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use selfrep::blockrg::{cbrg, naive_brg, CbrgConfig, RGReport};
use selfrep::experiments::{
    laplacian_modes, laplacian_modes_2d, lattice_eigenstates, overlap_with_constant,
    polynomial_waveset, run_suite, summary_csv, trajectory_csv, SuiteConfig,
};
use selfrep::lattice::{parse_potential, BoundaryCondition, LatticeKind, LatticeSpec};
use selfrep::replica::{
    format_vectors, format_waveset, iterate_to_fixed_point, parse_waveset, Geometry, InnerProduct,
    WaveSet,
};

#[derive(Parser)]
#[command(name = "selfrep", version, about = "Self-replicating functions and block renormalization on lattice Laplacians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lowest eigenvalues of a lattice Laplacian by dense diagonalization.
    Exact(ExactArgs),
    /// Iterate the replica transformation on a set of functions.
    Replica(ReplicaArgs),
    /// Two-block variational estimate of a chain ground state.
    Brg(BrgArgs),
    /// Hierarchical merge-and-truncate renormalization of a chain.
    Cbrg(CbrgArgs),
    /// Run every experiment and check its tolerances.
    Suite(SuiteArgs),
}

#[derive(Args)]
struct OutArgs {
    /// Directory for output files; nothing is written when unset.
    #[arg(short = 'o', long = "out", env = "SELFREP_OUT_DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct LatticeSource {
    /// Chain with this many sites.
    #[arg(long)]
    chain: Option<usize>,
    /// Rectangular grid, written NXxNY.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    /// Lattice description file (key=value lines).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct LatticeArgs {
    #[command(flatten)]
    source: LatticeSource,
    /// Boundary condition: free or fixed [default: free, or the config file's].
    #[arg(long)]
    bc: Option<BoundaryCondition>,
    /// On-site potential file, one value per line.
    #[arg(long)]
    potential: Option<PathBuf>,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Number of eigenpairs.
    #[arg(short = 'm', default_value_t = 1)]
    m: usize,
    /// Also dump the eigenvectors (needs an output directory).
    #[arg(long)]
    vectors: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
#[group(id = "replica_source", required = true, multiple = false)]
struct ReplicaSource {
    #[arg(long)]
    chain: Option<usize>,
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Orthonormalized monomials up to this degree.
    #[arg(long)]
    poly: Option<usize>,
    /// Wave-set dump file.
    #[arg(long)]
    waveset: Option<PathBuf>,
}

#[derive(Args)]
struct ReplicaArgs {
    #[command(flatten)]
    source: ReplicaSource,
    #[arg(long)]
    bc: Option<BoundaryCondition>,
    /// Number of lowest eigenstates taken from the lattice.
    #[arg(short = 'm', default_value_t = 1)]
    m: usize,
    /// Samples for --poly.
    #[arg(short = 'n', default_value_t = 256)]
    n: usize,
    /// Use midpoint samples of the continuum modes instead of lattice eigenvectors.
    #[arg(long)]
    sampled: bool,
    #[arg(long, default_value_t = 1)]
    iters: usize,
    /// Stop once consecutive subspaces are closer than this.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Inner product: l2, sobolev or sobolev:<weight> [default: l2, or the wave-set file's].
    #[arg(long)]
    ip: Option<InnerProduct>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct BrgArgs {
    /// Sites per block.
    #[arg(long)]
    block: usize,
    #[arg(long, default_value = "fixed")]
    bc: BoundaryCondition,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct CbrgArgs {
    /// Sites per level-1 block.
    #[arg(long)]
    block: usize,
    /// States kept per block.
    #[arg(long)]
    kept: usize,
    /// Number of pairwise merges.
    #[arg(long)]
    levels: usize,
    #[arg(long, default_value = "fixed")]
    bc: BoundaryCondition,
    /// Boundary condition at the cuts between blocks.
    #[arg(long, default_value = "free")]
    block_bc: BoundaryCondition,
    #[arg(long)]
    potential: Option<PathBuf>,
    /// Dump the kept states of every level (needs an output directory).
    #[arg(long)]
    states: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SuiteArgs {
    /// Override every 1D resolution.
    #[arg(long = "n")]
    n: Option<usize>,
    /// Include the unstable 2D triangle-pattern experiment.
    #[arg(long)]
    pascal: bool,
    #[command(flatten)]
    out: OutArgs,
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NXxNY, got {s:?}"))?;
    let nx = a.trim().parse().map_err(|_| format!("bad grid width {a:?}"))?;
    let ny = b.trim().parse().map_err(|_| format!("bad grid height {b:?}"))?;
    Ok((nx, ny))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_out(out: &Option<PathBuf>, file: &str, contents: &str) -> Result<()> {
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(file);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn load_potential(path: &Option<PathBuf>) -> Result<Option<Vec<f64>>> {
    match path {
        Some(p) => Ok(Some(
            parse_potential(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        )),
        None => Ok(None),
    }
}

fn lattice_spec(
    chain: Option<usize>,
    grid: Option<(usize, usize)>,
    config: &Option<PathBuf>,
    bc: Option<BoundaryCondition>,
    potential: &Option<PathBuf>,
) -> Result<LatticeSpec> {
    let default_bc = bc.unwrap_or(BoundaryCondition::Free);
    let mut spec = if let Some(n) = chain {
        LatticeSpec::chain(n, default_bc)
    } else if let Some((nx, ny)) = grid {
        LatticeSpec::grid(nx, ny, default_bc)
    } else if let Some(path) = config {
        let base = path.parent().unwrap_or(Path::new("."));
        let mut spec = LatticeSpec::from_config_str(&read(path)?, base)
            .with_context(|| format!("parsing {}", path.display()))?;
        if let Some(bc) = bc {
            spec.bc = bc;
        }
        spec
    } else {
        bail!("no lattice given");
    };
    if let Some(v) = load_potential(potential)? {
        spec = spec.with_potential(v);
    }
    Ok(spec)
}

fn dump_geometry(spec: &LatticeSpec) -> Geometry {
    match spec.kind {
        LatticeKind::Grid2D { nx, ny } if nx == ny => Geometry::Square(nx),
        _ => Geometry::Interval(spec.sites()),
    }
}

fn cmd_exact(args: ExactArgs) -> Result<()> {
    let l = &args.lattice;
    let spec = lattice_spec(l.source.chain, l.source.grid, &l.source.config, l.bc, &l.potential)?;
    if args.vectors && args.out.out.is_none() {
        bail!("--vectors needs an output directory (-o or SELFREP_OUT_DIR)");
    }
    let header = format!("# selfrep exact {} m={}", spec.describe(), args.m);
    let spectrum = spec.build()?.lowest(args.m)?;
    let mut table = format!("{header}\nindex,eigenvalue\n");
    for (i, e) in spectrum.eigenvalues.iter().enumerate() {
        let _ = writeln!(table, "{i},{e:.16e}");
    }
    print!("{table}");
    write_out(&args.out.out, "exact.csv", &table)?;
    if args.vectors {
        let dump = format_vectors(
            dump_geometry(&spec),
            InnerProduct::L2,
            &spectrum.vectors(),
            &[header.trim_start_matches("# ").to_string()],
        );
        write_out(&args.out.out, "eigenvectors.dat", &dump)?;
    }
    Ok(())
}

fn replica_source(args: &ReplicaArgs) -> Result<(String, WaveSet)> {
    let src = &args.source;
    let ip = args.ip.unwrap_or(InnerProduct::L2);
    if let Some(degree) = src.poly {
        let ws = polynomial_waveset(degree, args.n)?;
        let ws = WaveSet::orthonormalize(ws.geometry(), ip, ws.functions())?;
        return Ok((format!("source=poly degree={degree} n={}", args.n), ws));
    }
    if let Some(path) = &src.waveset {
        let ws = parse_waveset(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
        let ws = match args.ip {
            Some(ip) if ip != ws.ip() => WaveSet::orthonormalize(ws.geometry(), ip, ws.functions())?,
            _ => ws,
        };
        return Ok((format!("source=waveset file={}", path.display()), ws));
    }
    let spec = lattice_spec(src.chain, src.grid, &src.config, args.bc, &None)?;
    let ws = if args.sampled {
        match spec.kind {
            LatticeKind::Chain { n } => laplacian_modes(spec.bc, n, args.m, ip)?,
            LatticeKind::Grid2D { nx, ny } if nx == ny => laplacian_modes_2d(spec.bc, nx, args.m, ip)?,
            _ => bail!("--sampled needs a chain or a square grid"),
        }
    } else {
        lattice_eigenstates(&spec, args.m, ip)?
    };
    let states = if args.sampled { "sampled" } else { "eigenvectors" };
    Ok((format!("source=lattice {} m={} states={states}", spec.describe(), args.m), ws))
}

fn cmd_replica(args: ReplicaArgs) -> Result<()> {
    let (source, ws) = replica_source(&args)?;
    let header = format!(
        "selfrep replica {source} geometry={} side={} ip={} iters={} tol={:e}",
        ws.geometry().name(),
        ws.geometry().side(),
        ws.ip(),
        args.iters,
        args.tol
    );
    let run = iterate_to_fixed_point(&ws, args.iters, args.tol)?;
    let trajectory = trajectory_csv(&header, &run);

    let last = run.last();
    let mut metrics = format!("# {header}\nmetric,value\n");
    let _ = writeln!(metrics, "iterations_run,{}", run.records.len());
    let _ = writeln!(metrics, "converged,{}", u8::from(run.converged));
    let _ = writeln!(metrics, "final_subspace_distance,{:.16e}", last.subspace_distance);
    for (f, &o) in run.final_set().functions().iter().zip(&last.origin) {
        let _ = writeln!(metrics, "overlap_with_constant_{},{:.16e}", o + 1, overlap_with_constant(f));
    }
    print!("{trajectory}");
    for line in metrics.lines().skip(2) {
        println!("# {}", line.replacen(',', "=", 1));
    }
    write_out(&args.out.out, "trajectory.csv", &trajectory)?;
    write_out(&args.out.out, "metrics.csv", &metrics)?;
    write_out(&args.out.out, "initial.dat", &format_waveset(&ws, std::slice::from_ref(&header)))?;
    write_out(&args.out.out, "final.dat", &format_waveset(run.final_set(), &[header]))?;
    Ok(())
}

fn cmd_brg(args: BrgArgs) -> Result<()> {
    let report = naive_brg(args.block, args.bc)?;
    emit_report(&report, &args.out.out)
}

fn emit_report(report: &RGReport, out: &Option<PathBuf>) -> Result<()> {
    let text = report.to_text();
    print!("{text}");
    write_out(out, "report.txt", &text)
}

fn cmd_cbrg(args: CbrgArgs) -> Result<()> {
    if args.states && args.out.out.is_none() {
        bail!("--states needs an output directory (-o or SELFREP_OUT_DIR)");
    }
    let config = CbrgConfig {
        block_sites: args.block,
        kept_states: args.kept,
        levels: args.levels,
        bc: args.bc,
        block_bc: args.block_bc,
        potential: load_potential(&args.potential)?,
        record_states: args.states,
    };
    let report = cbrg(&config)?;
    emit_report(&report, &args.out.out)?;
    if args.states {
        let total = config.total_sites();
        for level in &report.levels {
            let Some(states) = &level.states else { continue };
            let mut vectors = Vec::new();
            for (block, kept) in level.blocks.iter().zip(states) {
                for s in kept {
                    let mut full = nalgebra::DVector::zeros(total);
                    full.rows_mut(block.lo, s.len()).copy_from(s);
                    vectors.push(full);
                }
            }
            let dump = format_vectors(
                Geometry::Interval(total),
                InnerProduct::L2,
                &vectors,
                &[format!("method=cbrg {} level={}", config.describe(), level.level)],
            );
            write_out(&args.out.out, &format!("level_{}.dat", level.level), &dump)?;
        }
    }
    Ok(())
}

/// Returns whether every check passed.
fn cmd_suite(args: SuiteArgs) -> Result<bool> {
    let mut config = SuiteConfig {
        pascal: args.pascal,
        out_dir: args.out.out.clone(),
        ..SuiteConfig::default()
    };
    if let Some(n) = args.n {
        config = config.with_resolution(n);
    }
    let results = run_suite(&config)?;
    print!("{}", summary_csv(&config, &results));
    let mut ok = true;
    for r in &results {
        for c in r.failures() {
            ok = false;
            eprintln!("FAIL {}/{}: {:.16e} not {}", r.name, c.metric, c.value, c.criterion);
        }
    }
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Exact(a) => cmd_exact(a).map(|_| true),
        Command::Replica(a) => cmd_replica(a).map(|_| true),
        Command::Brg(a) => cmd_brg(a).map(|_| true),
        Command::Cbrg(a) => cmd_cbrg(a).map(|_| true),
        Command::Suite(a) => cmd_suite(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
