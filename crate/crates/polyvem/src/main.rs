//! Command-line driver. Exit codes: 0 success, 1 I/O failure, 2 usage or
//! input error, 3 inadmissible geometry, 4 solver failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use polyvem::io::{load_mesh, save_mesh, write_dofs, write_matrix, write_mesh, FileError};
use polyvem::jitter::{self, jittered_study};
use polyvem::report::{format_table, write_csv, write_json};
use polyvem::ThreadedAssembly;
use polyvem_core::geometry::{analyze_mesh, assign_patches, GeometryError, PatchSet};
use polyvem_core::harness::{
    broken_h1_error, convergence_study, energy_error, interpolate, mean_eoc, robustness_study, CutRule,
    HarnessError, StudyConfig,
};
use polyvem_core::mesh::{fixture, gen_cut_cartesian, gen_uniform_quad, Axis, Cut, FixtureKind};
use polyvem_core::system::{assemble_with, element_contribution, SystemError};
use polyvem_core::{ConvergenceRow, GeometryConfig, ManufacturedCase, Mesh, MeshError, MeshFamily, Stabilization};

#[derive(Parser, Debug)]
#[command(name = "polyvem", version, about = "Lowest-order nonconforming VEM for the Poisson problem on polygonal meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate or inspect meshes.
    #[command(subcommand)]
    Mesh(MeshCommand),
    /// Print counts, h and the cell area range of a mesh file.
    Meshinfo { path: PathBuf },
    /// Classify elements, suggest patches and audit patch overlap (JSON).
    Check(CheckArgs),
    /// Assemble and solve one problem.
    Solve(SolveArgs),
    /// Convergence table over mesh levels (CSV).
    Converge(ConvergeArgs),
}

#[derive(Subcommand, Debug)]
enum MeshCommand {
    /// Write a generated mesh and print its summary.
    Gen {
        kind: GenKind,
        #[command(flatten)]
        params: GenParams,
        /// Output file; the mesh goes to stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print counts, h and the cell area range of a mesh file.
    Info { path: PathBuf },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GenKind {
    /// n x n unit-square grid.
    Uniform,
    /// Grid with one row (or column) of slivers of thickness `eps`.
    Cut,
    Hourglass,
    Bump,
    Cracklike,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AxisArg {
    X,
    Y,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::X => Axis::X,
            AxisArg::Y => Axis::Y,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct GenParams {
    /// Cells per side.
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Sliver thickness of cut meshes; defaults to 1/n^2.
    #[arg(long)]
    eps: Option<f64>,
    /// Cut direction: `y` stacks slivers along the bottom edge.
    #[arg(long, value_enum, default_value_t = AxisArg::Y)]
    axis: AxisArg,
    /// Random interior vertex displacement, relative to the shortest
    /// incident face (seeded by POLYVEM_SEED).
    #[arg(long)]
    jitter: Option<f64>,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Source {
    /// Mesh file.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Generated mesh instead of a file.
    #[arg(long, value_enum)]
    gen: Option<GenKind>,
}

#[derive(Args, Debug)]
struct MeshArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    params: GenParams,
}

#[derive(Args, Debug, Default)]
struct GeometryArgs {
    /// Height threshold (default 0.1).
    #[arg(long)]
    gamma1: Option<f64>,
    /// Patch diameter factor (default 4).
    #[arg(long)]
    gamma2: Option<f64>,
    /// Overlap bound (default 25).
    #[arg(long)]
    gamma3: Option<usize>,
    /// Chunkiness trigger h_F / sqrt|K| (default 4).
    #[arg(long)]
    chunkiness: Option<f64>,
    /// Largest number of pieces per face, a power of two (default 4).
    #[arg(long)]
    max_partition: Option<usize>,
    /// Hourglass witness distance relative to h_K (default 0.2).
    #[arg(long)]
    hourglass_dist: Option<f64>,
    /// Largest face count of an isotropic element (default 24).
    #[arg(long)]
    max_faces: Option<usize>,
    /// Largest number of cells in a patch (default 4).
    #[arg(long)]
    max_patch_cells: Option<usize>,
}

impl GeometryArgs {
    fn config(&self) -> Result<GeometryConfig, CliError> {
        let d = GeometryConfig::default();
        let cfg = GeometryConfig {
            gamma1: self.gamma1.unwrap_or(d.gamma1),
            gamma2: self.gamma2.unwrap_or(d.gamma2),
            gamma3: self.gamma3.unwrap_or(d.gamma3),
            chunkiness_threshold: self.chunkiness.unwrap_or(d.chunkiness_threshold),
            max_partition: self.max_partition.unwrap_or(d.max_partition),
            hourglass_dist_factor: self.hourglass_dist.unwrap_or(d.hourglass_dist_factor),
            max_faces: self.max_faces.unwrap_or(d.max_faces),
            max_patch_cells: self.max_patch_cells.unwrap_or(d.max_patch_cells),
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    mesh: MeshArgs,
    #[command(flatten)]
    geometry: GeometryArgs,
    /// JSON output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// Relative residual tolerance of the CG solver.
    #[arg(long, default_value_t = 1e-11)]
    tol: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iter: usize,
    /// Assembly threads (0: one per core).
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl SolverArgs {
    fn strategy(&self) -> ThreadedAssembly {
        match self.threads {
            0 => ThreadedAssembly::available(),
            t => ThreadedAssembly::new(t),
        }
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    mesh: MeshArgs,
    #[command(flatten)]
    geometry: GeometryArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Manufactured case: `sinsin` or `linear`.
    #[arg(long, default_value = "sinsin")]
    case: String,
    /// Stabilization: `patch` or `original`.
    #[arg(long, default_value = "patch")]
    stab: String,
    /// DoF output file (`face value` lines).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Dump the unreduced global matrix as `row col value` lines.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Print the local matrix and load of this element.
    #[arg(long)]
    dump_local: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FamilyArg {
    /// Uniform grids.
    Uniform,
    /// Cut grids with eps = 1/n^2, or `--eps` when given.
    Cut,
    /// Randomly perturbed uniform grids.
    Jitter,
}

#[derive(Args, Debug)]
struct ConvergeArgs {
    #[arg(long, value_enum, default_value_t = FamilyArg::Uniform)]
    family: FamilyArg,
    /// Cells per side at each level (at least three levels).
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
    levels: Vec<usize>,
    /// Fixed sliver thickness for the cut family.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, value_enum, default_value_t = AxisArg::Y)]
    axis: AxisArg,
    /// Vertex displacement of the jitter family.
    #[arg(long, default_value_t = 0.3)]
    jitter: f64,
    #[arg(long, default_value = "sinsin")]
    case: String,
    /// `patch`, `original` or `both`.
    #[arg(long, default_value = "patch")]
    stab: String,
    /// Instead of levels, sweep the sliver thickness at this fixed n.
    #[arg(long)]
    robustness: Option<usize>,
    /// Thicknesses of the robustness sweep.
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4")]
    offsets: Vec<f64>,
    #[command(flatten)]
    geometry: GeometryArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// CSV output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Geometry(String),
    Solver(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Io(_) => 1,
            Self::Usage(_) => 2,
            Self::Geometry(_) => 3,
            Self::Solver(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Geometry(m) | Self::Solver(m) | Self::Io(m) => m,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<MeshError> for CliError {
    fn from(e: MeshError) -> Self {
        Self::Usage(e.to_string())
    }
}

impl From<FileError> for CliError {
    fn from(e: FileError) -> Self {
        match e {
            FileError::Io(e) => Self::Io(e.to_string()),
            other => Self::Usage(other.to_string()),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::InvalidConfig(_) | GeometryError::Mesh(_) => Self::Usage(e.to_string()),
            other => Self::Geometry(other.to_string()),
        }
    }
}

impl From<SystemError> for CliError {
    fn from(e: SystemError) -> Self {
        match e {
            SystemError::Solve(_) => Self::Solver(e.to_string()),
            SystemError::PatchMissing(_) | SystemError::Local { .. } => Self::Geometry(e.to_string()),
            other => Self::Usage(other.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Geometry(g) => g.into(),
            HarnessError::System(s) => s.into(),
            other => Self::Usage(other.to_string()),
        }
    }
}

fn generate(kind: GenKind, p: &GenParams) -> Result<Mesh, CliError> {
    let mesh = match kind {
        GenKind::Uniform => gen_uniform_quad(p.n)?,
        GenKind::Cut => {
            let offset = p.eps.unwrap_or(CutRule::HSquared.offset(p.n));
            gen_cut_cartesian(p.n, Cut { axis: p.axis.into(), offset })?.mesh
        }
        GenKind::Hourglass => fixture(FixtureKind::Hourglass).mesh,
        GenKind::Bump => fixture(FixtureKind::Bump).mesh,
        GenKind::Cracklike => fixture(FixtureKind::Cracklike).mesh,
    };
    match p.jitter {
        Some(amp) => Ok(jitter::jitter_mesh(&mesh, amp, jitter::seed_from_env())?),
        None => Ok(mesh),
    }
}

fn load(args: &MeshArgs) -> Result<Mesh, CliError> {
    match (&args.source.mesh, args.source.gen) {
        (Some(path), _) => Ok(load_mesh(path)?),
        (None, Some(kind)) => generate(kind, &args.params),
        (None, None) => Err(CliError::Usage("one of --mesh or --gen is required".into())),
    }
}

fn summary(mesh: &Mesh) -> String {
    format!(
        "cells {}\nfaces {}\ninterior_faces {}\nh {:.6e}\nmin_area {:.6e}\nmax_area {:.6e}\n",
        mesh.num_cells(),
        mesh.num_faces(),
        mesh.num_interior_faces(),
        mesh.h(),
        mesh.min_cell_area(),
        mesh.max_cell_area()
    )
}

/// File when given, stdout otherwise.
fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn parse_case(s: &str) -> Result<ManufacturedCase, CliError> {
    s.parse().map_err(|e: HarnessError| CliError::Usage(e.to_string()))
}

fn parse_kinds(s: &str) -> Result<Vec<Stabilization>, CliError> {
    match s {
        "both" => Ok(vec![Stabilization::Patch, Stabilization::Original]),
        other => Ok(vec![other.parse().map_err(|e: polyvem_core::system::UnknownStabilization| CliError::Usage(e.to_string()))?]),
    }
}

fn cmd_mesh_gen(kind: GenKind, params: &GenParams, output: &Option<PathBuf>) -> Result<(), CliError> {
    let mesh = generate(kind, params)?;
    match output {
        Some(path) => {
            save_mesh(&mesh, path)?;
            print!("{}", summary(&mesh));
        }
        None => {
            write_mesh(&mesh, io::stdout().lock())?;
            eprint!("{}", summary(&mesh));
        }
    }
    Ok(())
}

fn cmd_check(args: &CheckArgs) -> Result<(), CliError> {
    let cfg = args.geometry.config()?;
    let mesh = load(&args.mesh)?;
    let report = analyze_mesh(&mesh, &cfg);
    let mut out = sink(&args.output)?;
    write_json(&report, &mut out)?;
    out.flush()?;
    let aniso: Vec<usize> = report.anisotropic_cells().collect();
    eprintln!("cells {}, anisotropic {}, admissible {}", mesh.num_cells(), aniso.len(), report.admissible);
    if let Some(audit) = &report.overlap {
        eprintln!("overlap max {} (bound {})", audit.max_count, audit.gamma3);
    }
    if report.admissible {
        Ok(())
    } else {
        let failed: Vec<String> = report.failed_cells().map(|c| c.to_string()).collect();
        Err(CliError::Geometry(format!("no admissible patch for cells {}", failed.join(", "))))
    }
}

fn cmd_solve(args: &SolveArgs) -> Result<(), CliError> {
    let cfg = args.geometry.config()?;
    let case = parse_case(&args.case)?;
    let kind: Stabilization = args.stab.parse().map_err(|e: polyvem_core::system::UnknownStabilization| CliError::Usage(e.to_string()))?;
    let mesh = load(&args.mesh)?;
    let report = analyze_mesh(&mesh, &cfg);
    if !report.admissible {
        let failed: Vec<String> = report.failed_cells().map(|c| c.to_string()).collect();
        return Err(CliError::Geometry(format!("inadmissible mesh: no patch for cells {}", failed.join(", "))));
    }
    let patches = match kind {
        Stabilization::Patch => assign_patches(&mesh, &cfg)?,
        Stabilization::Original => PatchSet::singletons(&mesh),
    };
    if let Some(k) = args.dump_local {
        if k >= mesh.num_cells() {
            return Err(CliError::Usage(format!("element {k} out of range")));
        }
        let c = element_contribution(&mesh, &patches, k, kind, &case.f)?;
        println!("element {k} dofs {:?}", c.dofs);
        for i in 0..c.matrix.nrows() {
            let row: Vec<String> = (0..c.matrix.ncols()).map(|j| format!("{:>12.5e}", c.matrix[(i, j)])).collect();
            println!("{}", row.join(" "));
        }
        println!("load {:?}", c.load);
    }
    let strategy = args.solver.strategy();
    let sys = assemble_with(&mesh, &patches, kind, &case.f, &strategy)?;
    if let Some(path) = &args.matrix {
        let mut w = BufWriter::new(File::create(path)?);
        write_matrix(&sys.a, &mut w)?;
        w.flush()?;
    }
    let sol = sys.apply_dirichlet(&mesh, &case.u).solve_cg(args.solver.tol, args.solver.max_iter)?;
    if let Some(path) = &args.output {
        let mut w = BufWriter::new(File::create(path)?);
        write_dofs(&sol.dofs, &mut w)?;
        w.flush()?;
    }
    let chi_i = interpolate(&mesh, &case.u);
    let energy = energy_error(&sys, kind, &chi_i, &sol.dofs)?;
    let h1 = broken_h1_error(&mesh, &case.grad, &sol.dofs)?;
    let max_dof = chi_i.iter().zip(&sol.dofs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("case {} stab {kind}", case.name);
    println!("ndof {}", mesh.num_faces());
    println!("iterations {}", sol.iterations);
    println!("residual {:.3e}", sol.residual);
    println!("energy_err {energy:.6e}");
    println!("h1proj_err {h1:.6e}");
    println!("max_dof_err {max_dof:.6e}");
    Ok(())
}

fn cmd_converge(args: &ConvergeArgs) -> Result<(), CliError> {
    let case = parse_case(&args.case)?;
    let kinds = parse_kinds(&args.stab)?;
    let cfg = StudyConfig { geometry: args.geometry.config()?, tol: args.solver.tol, max_iter: args.solver.max_iter };
    let strategy = args.solver.strategy();
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    if let Some(n) = args.robustness {
        rows = robustness_study(n, &args.offsets, &case, &kinds, &cfg, &strategy)?;
    } else {
        if args.levels.len() < 3 {
            return Err(CliError::Usage(format!("a convergence study needs at least 3 levels, got {}", args.levels.len())));
        }
        for &kind in &kinds {
            let part = match args.family {
                FamilyArg::Uniform => convergence_study(&MeshFamily::Uniform, &args.levels, &case, kind, &cfg, &strategy)?,
                FamilyArg::Cut => {
                    let rule = args.eps.map_or(CutRule::HSquared, CutRule::Fixed);
                    let family = MeshFamily::Cut { axis: args.axis.into(), rule };
                    convergence_study(&family, &args.levels, &case, kind, &cfg, &strategy)?
                }
                FamilyArg::Jitter => {
                    jittered_study(&args.levels, args.jitter, jitter::seed_from_env(), &case, kind, &cfg, &strategy)?
                }
            };
            rows.extend(part);
        }
    }
    let mut out = sink(&args.output)?;
    write_csv(&rows, &mut out)?;
    out.flush()?;
    drop(out);
    let mut text = format_table(&rows);
    for kind in kinds {
        let of_kind: Vec<ConvergenceRow> = rows.iter().filter(|r| r.stab_kind == kind).cloned().collect();
        match mean_eoc(&of_kind) {
            Some(m) => text += &format!("mean eoc {kind}: {m:.4}\n"),
            None => text += &format!("mean eoc {kind}: n/a\n"),
        }
    }
    if args.output.is_some() {
        print!("{text}");
    } else {
        eprint!("{text}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Mesh(MeshCommand::Gen { kind, params, output }) => cmd_mesh_gen(kind, &params, &output),
        Command::Mesh(MeshCommand::Info { path }) | Command::Meshinfo { path } => {
            print!("{}", summary(&load_mesh(&path)?));
            Ok(())
        }
        Command::Check(args) => cmd_check(&args),
        Command::Solve(args) => cmd_solve(&args),
        Command::Converge(args) => cmd_converge(&args),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
