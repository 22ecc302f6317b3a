//! Command-line entry point: problem files and catalog examples feeding the
//! verification suites, solvers, action integrals, and n-plectic checks.
//! Exit codes: 0 pass, 1 suite failure, 2 input error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::alternating::{AlternatingForm, MultiIndex};
use crate::bundle::{BundleShape, HamiltonVolterraFunction};
use crate::charts::{ChartedDomain, DiffConfig, FormField};
use crate::equations::{action, full_suite, hv_residual, Quadrature};
use crate::error::{Error, Result};
use crate::nplectic::{check_nplectic, degeneracy_scan, HamiltonianForm, NPlecticManifold};
use crate::problem::{coordinate_names, domain_from, CompiledExpr, ProblemFile};
use crate::report::ResidualReport;
use crate::sections::{AnalyticSection, ScalarField, SectionLike};
use crate::solvers::{find_example, solve_laplace, solve_ode, ExampleSpec, SolverKind, SorParams};

#[derive(Parser)]
#[command(
    name = "multisym",
    version,
    about = "verification toolkit for covariant Hamiltonian field equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the residual suites against a tolerance and report pass/fail.
    Verify(CommonArgs),
    /// Produce a numeric section with the example's solver and check it.
    Solve(CommonArgs),
    /// Integrate the localized action of a section over a box.
    Action(ActionArgs),
    /// Evaluate the residual suites and emit the full per-node reports.
    Residuals(CommonArgs),
    /// Pointwise checks on user-specified manifolds.
    Nplectic {
        #[command(subcommand)]
        command: NplecticCommand,
    },
    /// List the built-in examples.
    Catalog {
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

#[derive(Subcommand)]
enum NplecticCommand {
    /// Verify closedness and non-degeneracy at sampled points.
    Check(CommonArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Problem file (see the README for the format).
    #[arg(long)]
    file: Option<PathBuf>,
    /// Built-in example name (see `catalog`).
    #[arg(long)]
    example: Option<String>,
    /// Sample nodes (verification) or grid nodes per axis (solvers).
    #[arg(long)]
    grid: Option<usize>,
    /// Integrator step for ODE solves.
    #[arg(long)]
    step: Option<f64>,
    /// Pass tolerance for residual suites.
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for all randomized sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for JSON/CSV reports.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Restrict report files to one format.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct ActionArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Integration box as flattened bounds `lo1,hi1[,lo2,hi2,...]`.
    #[arg(long = "V", allow_hyphen_values = true)]
    v_box: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Entry point used by `main` and the CLI tests.
pub fn run<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version with success exits
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Verify(args) => run_verify(&args, true),
        Command::Residuals(args) => run_verify(&args, false),
        Command::Solve(args) => run_solve(&args),
        Command::Action(args) => run_action(&args),
        Command::Nplectic {
            command: NplecticCommand::Check(args),
        } => run_nplectic_check(&args),
        Command::Catalog { format } => run_catalog(format),
    }
}

/// A verification task: a Hamiltonian, a section, and a sample box.
struct Task {
    title: String,
    hv: HamiltonVolterraFunction<f64>,
    section: Box<dyn SectionLike<f64>>,
    sample_box: ChartedDomain<f64>,
    tol: f64,
    grid: usize,
    seed: u64,
}

fn tasks_from(args: &CommonArgs) -> Result<Vec<Task>> {
    let tol = args.tol.unwrap_or(1e-6);
    let grid = args.grid.unwrap_or(5);
    let seed = args.seed.unwrap_or(0);
    if let Some(name) = &args.example {
        let ex = find_example(name)?;
        let hv_template = ex.hamiltonian();
        return Ok(ex
            .exact_sections()
            .into_iter()
            .map(|(sec_name, section)| Task {
                title: format!("{}-{}", ex.name, sec_name),
                hv: hv_template.clone(),
                section: Box::new(section),
                sample_box: ex.verify_box(),
                tol,
                grid,
                seed,
            })
            .collect());
    }
    let path = args
        .file
        .as_ref()
        .ok_or_else(|| Error::Config("pass --example NAME or --file PATH".into()))?;
    let file = load_problem(path)?;
    let shape = shape_from(&file)?;
    let hv = hamiltonian_from(&file, shape)?;
    let domain = domain_from(&file, shape.n)?;
    let section = section_from(&file, shape, domain.clone())?;
    let sample_box = match file.get_f64_list("verify", "box")? {
        Some(flat) => bounds_from_flat(&flat, shape.n)?,
        None => domain.clone(),
    };
    let title = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "problem".into());
    Ok(vec![Task {
        title,
        hv,
        section: Box::new(section),
        sample_box,
        tol: args.tol.or(file.get_f64("verify", "tol")?).unwrap_or(1e-6),
        grid: args.grid.or(file.get_usize("verify", "grid")?).unwrap_or(5),
        seed: args.seed.or(file.get_u64("verify", "seed")?).unwrap_or(0),
    }])
}

fn run_verify(args: &CommonArgs, gate: bool) -> Result<i32> {
    let cfg = DiffConfig::default();
    let mut all_pass = true;
    for task in tasks_from(args)? {
        let mut report = ResidualReport::new(task.title.clone());
        report.set_config("tol", task.tol);
        report.set_config("grid", task.grid);
        report.set_config("seed", task.seed);
        for x in sample_lattice(&task.sample_box, task.grid) {
            let point = full_suite(&task.hv, task.section.as_ref(), &x, &cfg)?;
            for row in &point.rows {
                report.record(&row.x, &row.equation, row.value);
            }
        }
        report.finish();
        let pass = report.passes(task.tol);
        all_pass &= pass;
        if gate {
            println!(
                "{}: max residual {:.3e} over {} nodes [{}]",
                task.title,
                report.max_l_inf(),
                report.nodes,
                if pass { "pass" } else { "FAIL" }
            );
        } else {
            println!("{}: {} nodes", task.title, report.nodes);
            for e in &report.equations {
                println!("  {}  l_inf {:.6e}  l_2 {:.6e}", e.equation, e.l_inf, e.l_2);
            }
        }
        write_report(&report, args)?;
    }
    Ok(if !gate || all_pass { 0 } else { 1 })
}

fn run_solve(args: &CommonArgs) -> Result<i32> {
    let name = args
        .example
        .as_deref()
        .ok_or_else(|| Error::Config("`solve` needs --example NAME".into()))?;
    let ex = find_example(name)?;
    let hv = ex.hamiltonian();
    let cfg = DiffConfig::default();
    let vb = ex.verify_box();
    let (section, pass_tol) = match ex.solver {
        SolverKind::Ode => {
            let step = args.step.unwrap_or(1e-3);
            let (q0, p0) = initial_values(&ex)?;
            let (lo, hi) = vb.bounds()[0];
            (
                solve_ode(&hv, &q0, &p0, (lo, hi), step)?,
                args.tol.unwrap_or(1e-6),
            )
        }
        SolverKind::Laplace => {
            let nodes = args.grid.unwrap_or(65);
            let boundary = ex
                .exact
                .first()
                .ok_or_else(|| Error::Config("example has no boundary data".into()))?;
            let q = boundary.q[0].clone();
            let h = 1.0 / (nodes - 1) as f64;
            (
                solve_laplace(&vb, nodes, &move |x: &[f64]| q(x), SorParams::default())?,
                args.tol.unwrap_or(5.0 * h * h),
            )
        }
        SolverKind::None => {
            return Err(Error::Config(format!("example `{name}` has no solver")));
        }
    };

    let mut report = ResidualReport::new(format!("solve-{name}"));
    report.set_config("tol", pass_tol);
    for idx in section.interior_nodes(2) {
        let x = section.node_point(&idx);
        let (r, s) = hv_residual(&hv, &section, &x, &cfg)?;
        for (a, v) in r.iter().enumerate() {
            report.record(&x, &format!("R{}", a + 1), *v);
        }
        for a in 0..ex.shape.fibre {
            for mu in 0..ex.shape.n {
                report.record(
                    &x,
                    &format!("S{}_{}", a + 1, mu + 1),
                    s[a * ex.shape.n + mu],
                );
            }
        }
    }
    report.finish();
    let pass = report.passes(pass_tol);
    println!(
        "solve {name}: {} nodes, max residual {:.3e} (tol {:.3e}) [{}]",
        report.nodes,
        report.max_l_inf(),
        pass_tol,
        if pass { "pass" } else { "FAIL" }
    );
    write_report(&report, args)?;
    if let Some(dir) = &args.out_dir {
        write_solution_csv(&section, &ex, dir, name)?;
    }
    Ok(if pass { 0 } else { 1 })
}

fn run_action(args: &ActionArgs) -> Result<i32> {
    let common = &args.common;
    let cfg = DiffConfig::default();
    let task = tasks_from(common)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::Config("no section to integrate".into()))?;
    let n = task.section.shape().n;
    let v_box = match &args.v_box {
        Some(raw) => {
            let flat: Vec<f64> = raw
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("--V: `{p}` is not a number")))
                })
                .collect::<Result<_>>()?;
            bounds_from_flat(&flat, n)?
        }
        None => task.sample_box.clone(),
    };
    let cells = common.grid.unwrap_or(if n == 1 { 512 } else { 64 });
    let value = action(
        &task.hv,
        task.section.as_ref(),
        &v_box,
        Quadrature::Midpoint,
        cells,
        &cfg,
    )?;
    println!(
        "action[{}] over {:?} = {value:.12e}",
        task.title,
        v_box.bounds()
    );
    Ok(0)
}

fn run_nplectic_check(args: &CommonArgs) -> Result<i32> {
    let path = args
        .file
        .as_ref()
        .ok_or_else(|| Error::Config("`nplectic check` needs --file PATH".into()))?;
    let file = load_problem(path)?;
    let dim = file
        .get_usize("manifold", "dim")?
        .ok_or_else(|| Error::Config("missing `dim` in [manifold]".into()))?;
    let degree = file
        .get_usize("manifold", "n")?
        .ok_or_else(|| Error::Config("missing `n` in [manifold]".into()))?;
    let names: Vec<String> = (0..dim).map(|i| format!("x{}", i + 1)).collect();

    let bounds = if file.has_section("domain") {
        domain_from(&file, dim)?
    } else {
        ChartedDomain::new(vec![(-1.0, 1.0); dim])?
    };
    let omega = form_field_from(&file, "manifold", "omega", dim, degree + 1, &names, &bounds)?;
    let manifold = NPlecticManifold::new(degree, omega)?;

    let samples = args.grid.unwrap_or(20);
    let seed = args.seed.unwrap_or(0);
    let tol = args.tol.unwrap_or(1e-6);
    let cfg = DiffConfig::default();
    let points = sample_random(&bounds, samples, seed, &cfg);
    let check = check_nplectic(&manifold, &points, tol, &cfg)?;
    println!(
        "nplectic check: dim {} degree {} | min rank {} ({}) | dω max {:.3e}",
        check.dim,
        check.degree,
        check.min_rank,
        if check.nondegenerate {
            "full"
        } else {
            "deficient"
        },
        check.closedness
    );

    let mut scan_json = None;
    if let Some(k) = file.get_usize("hform", "k")? {
        if k == 0 || k > degree {
            return Err(Error::Config(format!(
                "[hform] k = {k}: expected 1..={degree}"
            )));
        }
        let h_field = form_field_from(&file, "hform", "H", dim, degree - k, &names, &bounds)?;
        let h = HamiltonianForm::new(h_field);
        let scan = degeneracy_scan(&manifold, &h, &points[0], &cfg)?;
        println!(
            "degeneracy at {:?}: dH max {:.3e} ({}), contraction kernel dim {}",
            points[0],
            scan.dh_max,
            if scan.dh_vanishes {
                "vanishes"
            } else {
                "nonzero"
            },
            scan.kernel_dim
        );
        scan_json = Some(scan);
    }

    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir)?;
        let mut doc =
            serde_json::to_value(&check).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        if let Some(scan) = scan_json {
            doc["degeneracy"] =
                serde_json::to_value(&scan).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        }
        doc["timestamp"] = serde_json::Value::String(now_stamp());
        std::fs::write(
            dir.join("nplectic-check.json"),
            serde_json::to_string_pretty(&doc)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?,
        )?;
    }
    Ok(if check.nondegenerate && check.closedness < tol {
        0
    } else {
        1
    })
}

fn run_catalog(format: Option<Format>) -> Result<i32> {
    let cat = crate::solvers::catalog();
    if format == Some(Format::Json) {
        let entries: Vec<BTreeMap<&str, serde_json::Value>> = cat
            .iter()
            .map(|ex| {
                BTreeMap::from([
                    ("name", ex.name.into()),
                    ("n", ex.shape.n.into()),
                    ("N", ex.shape.fibre.into()),
                    ("hamiltonian", ex.h_expression.into()),
                    ("solver", format!("{:?}", ex.solver).to_lowercase().into()),
                    ("non_paper", ex.non_paper.into()),
                    (
                        "sections",
                        ex.exact
                            .iter()
                            .map(|s| serde_json::Value::String(s.name.into()))
                            .collect::<Vec<_>>()
                            .into(),
                    ),
                ])
            })
            .collect();
        println!(
            "{}",
            serde_json::to_string_pretty(&entries)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?
        );
        return Ok(0);
    }
    for ex in &cat {
        println!(
            "{:16} (n={}, N={})  H = {:24}  solver: {:?}{}",
            ex.name,
            ex.shape.n,
            ex.shape.fibre,
            ex.h_expression,
            ex.solver,
            if ex.non_paper { "  [stress case]" } else { "" }
        );
        for s in &ex.exact {
            println!("    section `{}`", s.name);
        }
    }
    Ok(0)
}

// ---- problem-file builders -------------------------------------------------

fn load_problem(path: &Path) -> Result<ProblemFile> {
    let text = std::fs::read_to_string(path)?;
    ProblemFile::parse(&text)
}

fn shape_from(file: &ProblemFile) -> Result<BundleShape> {
    let n = file
        .get_usize("shape", "n")?
        .ok_or_else(|| Error::Config("missing `n` in [shape]".into()))?;
    let fibre = file
        .get_usize("shape", "N")?
        .ok_or_else(|| Error::Config("missing `N` in [shape]".into()))?;
    BundleShape::new(n, fibre)
}

fn hamiltonian_from(
    file: &ProblemFile,
    shape: BundleShape,
) -> Result<HamiltonVolterraFunction<f64>> {
    let text = file.require("hamiltonian", "H")?;
    let names = coordinate_names(&shape, false);
    let compiled = Arc::new(CompiledExpr::compile(text, &names)?);
    Ok(HamiltonVolterraFunction::new(shape, move |z: &[f64]| {
        compiled.eval(z).unwrap_or(f64::NAN)
    }))
}

fn section_from(
    file: &ProblemFile,
    shape: BundleShape,
    domain: ChartedDomain<f64>,
) -> Result<AnalyticSection<f64>> {
    let base_names: Vec<String> = (0..shape.n).map(|mu| format!("x{}", mu + 1)).collect();
    let compile = |key: &str| -> Result<ScalarField<f64>> {
        let text = file.require("section", key)?;
        let compiled = Arc::new(CompiledExpr::compile(text, &base_names)?);
        Ok(Arc::new(move |x: &[f64]| {
            compiled.eval(x).unwrap_or(f64::NAN)
        }))
    };
    let mut q = Vec::with_capacity(shape.fibre);
    for a in 0..shape.fibre {
        q.push(compile(&format!("q{}", a + 1))?);
    }
    let mut pmom = Vec::with_capacity(shape.fibre * shape.n);
    for a in 0..shape.fibre {
        for mu in 0..shape.n {
            pmom.push(compile(&format!("p{}_{}", a + 1, mu + 1))?);
        }
    }
    AnalyticSection::new(shape, domain, q, pmom)
}

/// Collect form components `prefix_i_j_... = expr` (1-based strictly
/// increasing indices) into a form field of the given degree.
fn form_field_from(
    file: &ProblemFile,
    section: &str,
    prefix: &str,
    dim: usize,
    degree: usize,
    names: &[String],
    base: &ChartedDomain<f64>,
) -> Result<FormField<f64>> {
    let mut comps: Vec<(Vec<usize>, Arc<CompiledExpr>)> = Vec::new();
    for entry in file.section(section).unwrap_or(&[]) {
        let rest = if degree == 0 {
            if entry.key != prefix {
                continue;
            }
            Vec::new()
        } else {
            let Some(tail) = entry.key.strip_prefix(&format!("{prefix}_")) else {
                continue;
            };
            let mut idx = Vec::new();
            for part in tail.split('_') {
                let i: usize = part.parse().map_err(|_| {
                    Error::Config(format!("[{section}] {}: bad index `{part}`", entry.key))
                })?;
                if i < 1 || i > dim {
                    return Err(Error::Config(format!(
                        "[{section}] {}: index {i} outside 1..={dim}",
                        entry.key
                    )));
                }
                idx.push(i - 1);
            }
            if idx.len() != degree || idx.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config(format!(
                    "[{section}] {}: expected {degree} strictly increasing indices",
                    entry.key
                )));
            }
            idx
        };
        comps.push((rest, Arc::new(CompiledExpr::compile(&entry.value, names)?)));
    }
    if comps.is_empty() {
        return Err(Error::Config(format!(
            "no `{prefix}` components found in [{section}]"
        )));
    }
    // validate the indices once so the closure can't fail structurally
    for (idx, _) in &comps {
        if !idx.is_empty() {
            MultiIndex::new(idx.clone(), dim)?;
        }
    }
    Ok(FormField::new(base.clone(), degree, move |x: &[f64]| {
        let mut form = AlternatingForm::zero(dim, degree);
        for (idx, expr) in &comps {
            form.set_coeff(idx, expr.eval(x).unwrap_or(f64::NAN));
        }
        form
    }))
}

// ---- shared helpers --------------------------------------------------------

fn bounds_from_flat(flat: &[f64], n: usize) -> Result<ChartedDomain<f64>> {
    if flat.len() != 2 * n {
        return Err(Error::Config(format!(
            "expected {} comma-separated bounds, got {}",
            2 * n,
            flat.len()
        )));
    }
    ChartedDomain::new(flat.chunks(2).map(|c| (c[0], c[1])).collect())
}

/// Uniform lattice strictly inside a box: per axis, `grid` points at the
/// cell centers of a `grid`-cell split.
fn sample_lattice(v_box: &ChartedDomain<f64>, grid: usize) -> Vec<Vec<f64>> {
    let n = v_box.dim();
    let total = grid.pow(n as u32);
    let mut out = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rest = flat;
        let mut x = Vec::with_capacity(n);
        for axis in 0..n {
            let i = rest % grid;
            rest /= grid;
            let (lo, hi) = v_box.bounds()[axis];
            x.push(lo + (i as f64 + 0.5) * (hi - lo) / grid as f64);
        }
        out.push(x);
    }
    out
}

/// Seeded uniform samples with stencil clearance from the bounds.
fn sample_random(
    bounds: &ChartedDomain<f64>,
    count: usize,
    seed: u64,
    cfg: &DiffConfig<f64>,
) -> Vec<Vec<f64>> {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            bounds
                .bounds()
                .iter()
                .map(|&(lo, hi)| {
                    let margin = 4.0 * cfg.step_at(lo.abs().max(hi.abs()));
                    lo + margin + (hi - lo - 2.0 * margin) * rng.gen::<f64>()
                })
                .collect()
        })
        .collect()
}

fn now_stamp() -> String {
    use std::time::{SystemTime, UNIX_EPOCH};
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    secs.to_string()
}

fn write_report(report: &ResidualReport, args: &CommonArgs) -> Result<()> {
    let Some(dir) = &args.out_dir else {
        return Ok(());
    };
    std::fs::create_dir_all(dir)?;
    let base = dir.join(&report.title);
    if args.format != Some(Format::Csv) {
        let mut doc: serde_json::Value = serde_json::from_str(&report.to_json()?)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        doc["timestamp"] = serde_json::Value::String(now_stamp());
        std::fs::write(
            base.with_extension("json"),
            serde_json::to_string_pretty(&doc)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?,
        )?;
    }
    if args.format != Some(Format::Json) {
        std::fs::write(base.with_extension("csv"), report.to_csv())?;
    }
    Ok(())
}

fn write_solution_csv(
    section: &crate::sections::DiscreteSection<f64>,
    ex: &ExampleSpec,
    dir: &Path,
    name: &str,
) -> Result<()> {
    use std::fmt::Write as _;
    std::fs::create_dir_all(dir)?;
    let mut comp_names = Vec::new();
    for a in 0..ex.shape.fibre {
        comp_names.push(format!("q{}", a + 1));
    }
    for a in 0..ex.shape.fibre {
        for mu in 0..ex.shape.n {
            comp_names.push(format!("p{}_{}", a + 1, mu + 1));
        }
    }
    let mut csv = String::new();
    for mu in 0..ex.shape.n {
        let _ = write!(csv, "x{},", mu + 1);
    }
    csv.push_str("equation,value\n");
    for idx in section.interior_nodes(0) {
        let x = section.node_point(&idx);
        for (c, comp_name) in comp_names.iter().enumerate() {
            for v in &x {
                let _ = write!(csv, "{v},");
            }
            let _ = writeln!(csv, "{comp_name},{}", section.component_at(c, &idx));
        }
    }
    std::fs::write(dir.join(format!("solution-{name}.csv")), csv)?;
    Ok(())
}

fn initial_values(ex: &ExampleSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    let exact = ex
        .exact
        .first()
        .ok_or_else(|| Error::Config("example has no initial data".into()))?;
    let vb = ex.verify_box();
    let x0: Vec<f64> = vb.bounds().iter().map(|&(lo, _)| lo).collect();
    let q0 = exact.q.iter().map(|f| f(&x0)).collect();
    let p0 = exact.pmom.iter().map(|f| f(&x0)).collect();
    Ok((q0, p0))
}
