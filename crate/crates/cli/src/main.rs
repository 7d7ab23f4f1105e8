//! Command line front end for the discretised harmonic oscillator toolkit.
//!
//! Exit codes: 0 success, 1 invalid input, 2 requested coefficient outside
//! the stored tables, 3 numerical failure, 4 verification failure.

mod verify;

use clap::{Parser, Subcommand, ValueEnum};
use dho_core::derivation::{derivation_certificate, derive_through, Unknown};
use dho_core::experiments::{
    convergence_experiment, reference_eigenvalue, sset_omega, ExperimentConfig,
};
use dho_core::export::{convergence_records, float_value, OutputFormat, RecordSet};
use dho_core::solver::{
    mathieu_characteristic, select_dimension, DimensionMode, MathieuFamily, MathieuMethod,
    MathieuQuery,
};
use dho_core::tables::eigenvalue_series_value;
use dho_core::wavefunction::{assemble_eigenvector, Normalization};
use dho_core::{Error, Result};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "dho",
    version,
    about = "Discretised harmonic oscillator toolkit: asymptotic series, exact tables, reference solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalue of one state, by truncated series or matrix solve.
    Eig {
        /// State index.
        #[arg(long)]
        n: u64,
        /// Series truncation order.
        #[arg(long)]
        order: u32,
        /// Lattice frequency.
        #[arg(long)]
        omega: f64,
        /// Potential displacement in [-1/2, 1/2].
        #[arg(long, default_value_t = 0.0)]
        x0: f64,
        #[arg(long, value_enum, default_value_t = EigMethod::Series)]
        method: EigMethod,
        /// Record output instead of the bare value.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Asymptotic eigenvector sampled on the integer grid.
    Vec {
        /// State index.
        #[arg(long)]
        n: u64,
        /// Series truncation order.
        #[arg(long)]
        order: u32,
        /// Lattice frequency.
        #[arg(long)]
        omega: f64,
        /// Potential displacement in [-1/2, 1/2].
        #[arg(long, default_value_t = 0.0)]
        x0: f64,
        /// Grid half-width; tail rule when absent.
        #[arg(long)]
        j0: Option<u32>,
        #[arg(long, value_enum, default_value_t = NormalizeArg::Euclidean)]
        normalize: NormalizeArg,
    },
    /// Mathieu characteristic value a_r(q) or b_r(q).
    Mathieu {
        /// Characteristic order r.
        #[arg(long)]
        order: u32,
        /// Mathieu parameter q > 0.
        #[arg(long)]
        q: f64,
        /// Floquet exponent in [0, 1]; fixed by order parity when absent.
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long, value_enum, default_value_t = FamilyArg::A)]
        family: FamilyArg,
        #[arg(long, value_enum, default_value_t = MathieuMethodArg::Asymptotic)]
        method: MathieuMethodArg,
    },
    /// Norm-convergence experiment over an omega grid.
    Converge {
        /// Comma-separated state list, e.g. 0,1,2.
        #[arg(long)]
        n: String,
        /// Comma-separated truncation orders, e.g. 1,2,3.
        #[arg(long)]
        orders: String,
        /// Geometric grid START:STOP:POINTS with START > STOP > 0.
        #[arg(long)]
        omega_grid: String,
        /// Potential displacement in [-1/2, 1/2].
        #[arg(long, default_value_t = 0.0)]
        x0: f64,
        /// Output file; .json extension switches the format, else CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-derive the series coefficients order by order, from scratch.
    Derive {
        /// State index.
        #[arg(long)]
        n: u64,
        /// Highest order to derive.
        #[arg(long)]
        max_order: u32,
        /// Write the full equation-by-equation certificate as JSON.
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Run a self-check suite; any failure exits with code 4.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
    },
    /// Lattice frequency of a superconducting single-electron transistor.
    Sset {
        /// Charging energy.
        #[arg(long)]
        ec: f64,
        /// Josephson energy, same units.
        #[arg(long)]
        ej: f64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EigMethod {
    Series,
    Matrix,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizeArg {
    Euclidean,
    Lowest,
}

impl From<NormalizeArg> for Normalization {
    fn from(n: NormalizeArg) -> Self {
        match n {
            NormalizeArg::Euclidean => Normalization::UnitEuclidean,
            NormalizeArg::Lowest => Normalization::UnitLowestTerm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    A,
    B,
}

#[derive(Clone, Copy, ValueEnum)]
enum MathieuMethodArg {
    Asymptotic,
    Matrix,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Identities,
    Residuals,
    Tables,
    All,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    // Clap reserves exit code 2 for usage errors; here 2 means a request
    // outside the stored tables, so usage errors are remapped to 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = init_thread_pool() {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// DHO_THREADS caps the worker count; unset means one worker per core.
fn init_thread_pool() -> Result<()> {
    let Ok(raw) = std::env::var("DHO_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&t| t >= 1)
        .ok_or_else(|| Error::invalid(format!("DHO_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Numerical(format!("thread pool: {e}")))
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Eig {
            n,
            order,
            omega,
            x0,
            method,
            format,
            out,
        } => cmd_eig(n, order, omega, x0, method, format, out),
        Command::Vec {
            n,
            order,
            omega,
            x0,
            j0,
            normalize,
        } => cmd_vec(n, order, omega, x0, j0, normalize),
        Command::Mathieu {
            order,
            q,
            nu,
            family,
            method,
        } => cmd_mathieu(order, q, nu, family, method),
        Command::Converge {
            n,
            orders,
            omega_grid,
            x0,
            out,
        } => cmd_converge(&n, &orders, &omega_grid, x0, &out),
        Command::Derive {
            n,
            max_order,
            certificate,
        } => cmd_derive(n, max_order, certificate),
        Command::Verify { suite } => match suite {
            SuiteArg::Identities => verify::run(&[verify::Suite::Identities]),
            SuiteArg::Residuals => verify::run(&[verify::Suite::Residuals]),
            SuiteArg::Tables => verify::run(&[verify::Suite::Tables]),
            SuiteArg::All => verify::run(&[
                verify::Suite::Tables,
                verify::Suite::Identities,
                verify::Suite::Residuals,
            ]),
        },
        Command::Sset { ec, ej } => {
            println!("{}", sset_omega(ec, ej)?);
            Ok(())
        }
    }
}

fn cmd_eig(
    n: u64,
    order: u32,
    omega: f64,
    x0: f64,
    method: EigMethod,
    format: Option<FormatArg>,
    out: Option<PathBuf>,
) -> Result<()> {
    let lambda = match method {
        EigMethod::Series => eigenvalue_series_value(n, order, omega)?,
        EigMethod::Matrix => reference_eigenvalue(n, omega, x0)?,
    };
    if format.is_none() && out.is_none() {
        println!("{lambda}");
        return Ok(());
    }
    let method_name = match method {
        EigMethod::Series => "series",
        EigMethod::Matrix => "matrix",
    };
    let mut set = RecordSet::new(&["n", "order", "omega", "x0", "method", "lambda"])
        .meta("kind", json!("eigenvalue"));
    set.push_row(vec![
        json!(n),
        json!(order),
        float_value(omega),
        float_value(x0),
        json!(method_name),
        float_value(lambda),
    ]);
    emit(&set.render(format.map_or(OutputFormat::Csv, Into::into)), out.as_deref())
}

fn cmd_vec(
    n: u64,
    order: u32,
    omega: f64,
    x0: f64,
    j0: Option<u32>,
    normalize: NormalizeArg,
) -> Result<()> {
    let j0 = match j0 {
        Some(v) => v,
        None => select_dimension(omega, n, DimensionMode::Tail)?,
    };
    let name = match normalize {
        NormalizeArg::Euclidean => "euclidean",
        NormalizeArg::Lowest => "lowest",
    };
    let wf = assemble_eigenvector(n, order, omega, x0, j0, normalize.into())?;
    let mut text = format!(
        "# n={n} m={order} omega={omega} x0={x0} j0={j0} normalization={name}\nj,x,psi\n"
    );
    for (j, value) in wf.grid().zip(wf.values()) {
        text.push_str(&format!("{j},{},{value}\n", j as f64 - x0));
    }
    print!("{text}");
    Ok(())
}

fn cmd_mathieu(
    order: u32,
    q: f64,
    nu: Option<f64>,
    family: FamilyArg,
    method: MathieuMethodArg,
) -> Result<()> {
    let fam = match family {
        FamilyArg::A => MathieuFamily::A,
        FamilyArg::B => MathieuFamily::B,
    };
    let query = match nu {
        Some(v) => MathieuQuery::with_nu(order, q, v, fam)?,
        None => MathieuQuery::new(order, q, fam)?,
    };
    let m = match method {
        MathieuMethodArg::Asymptotic => MathieuMethod::Asymptotic,
        MathieuMethodArg::Matrix => MathieuMethod::Matrix,
    };
    let a = mathieu_characteristic(&query, m)?;
    let mut set = RecordSet::new(&["order", "q", "nu", "family", "method", "a"]);
    set.push_row(vec![
        json!(order),
        float_value(q),
        float_value(query.nu()),
        json!(match family {
            FamilyArg::A => "a",
            FamilyArg::B => "b",
        }),
        json!(match method {
            MathieuMethodArg::Asymptotic => "asymptotic",
            MathieuMethodArg::Matrix => "matrix",
        }),
        float_value(a),
    ]);
    print!("{}", set.to_csv());
    Ok(())
}

fn cmd_converge(n: &str, orders: &str, omega_grid: &str, x0: f64, out: &Path) -> Result<()> {
    let n_values: Vec<u64> = parse_list(n)?;
    let m_values: Vec<u32> = parse_list(orders)?;
    let grid = parse_omega_grid(omega_grid)?;
    let config = ExperimentConfig::new(n_values.clone(), m_values.clone(), grid, x0);
    let records = convergence_experiment(&config)?;
    let mut set = convergence_records(&records);
    set.metadata = vec![
        ("kind".into(), json!("convergence")),
        ("n".into(), json!(n_values)),
        ("orders".into(), json!(m_values)),
        ("omega_grid".into(), json!(omega_grid)),
        ("x0".into(), float_value(x0)),
    ];
    let format = match out.extension().and_then(|e| e.to_str()) {
        Some("json") => OutputFormat::Json,
        _ => OutputFormat::Csv,
    };
    std::fs::write(out, set.render(format))?;
    println!("wrote {} records to {}", records.len(), out.display());
    Ok(())
}

fn cmd_derive(n: u64, max_order: u32, certificate: Option<PathBuf>) -> Result<()> {
    let (state, solutions) = derive_through(n, max_order)?;
    let mut text = format!("state n = {n}, derived through order {max_order}\n");
    for m in 0..=max_order {
        let lambda = state
            .binding(&Unknown::Lambda { m })
            .expect("derived orders bind their eigenvalue term");
        text.push_str(&format!("lambda({m}) = {lambda}\n"));
    }
    let determined: usize = solutions.iter().map(|s| s.pinned.len()).sum();
    text.push_str(&format!("coefficients determined: {determined}\n"));
    print!("{text}");
    if let Some(path) = certificate {
        let cert = derivation_certificate(n, max_order)?;
        let body = serde_json::to_string_pretty(&cert).expect("certificates are plain data");
        std::fs::write(&path, body + "\n")?;
        println!("certificate written to {}", path.display());
    }
    Ok(())
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn parse_list<T: FromStr>(raw: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(|piece| {
            piece
                .trim()
                .parse::<T>()
                .map_err(|_| Error::invalid(format!("bad list entry '{piece}' in '{raw}'")))
        })
        .collect()
}

/// START:STOP:POINTS, geometric and strictly decreasing.
fn parse_omega_grid(raw: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = raw.split(':').collect();
    let [start, stop, points] = parts.as_slice() else {
        return Err(Error::invalid(format!(
            "omega grid must be START:STOP:POINTS, got '{raw}'"
        )));
    };
    let start: f64 = start
        .parse()
        .map_err(|_| Error::invalid(format!("bad grid start '{start}'")))?;
    let stop: f64 = stop
        .parse()
        .map_err(|_| Error::invalid(format!("bad grid stop '{stop}'")))?;
    let points: usize = points
        .parse()
        .map_err(|_| Error::invalid(format!("bad grid point count '{points}'")))?;
    if !(start.is_finite() && stop.is_finite() && stop > 0.0 && start > stop) {
        return Err(Error::invalid(
            "omega grid needs START > STOP > 0 (slope fits read the grid downwards)",
        ));
    }
    if points < 2 {
        return Err(Error::invalid("omega grid needs at least 2 points"));
    }
    let ratio = (stop / start).powf(1.0 / (points - 1) as f64);
    let mut grid: Vec<f64> = (0..points)
        .map(|i| start * ratio.powi(i as i32))
        .collect();
    grid[points - 1] = stop;
    Ok(grid)
}
