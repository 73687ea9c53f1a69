//! Command-line front end. `biphoton <report|sweep|hom|schmidt|solve-filter>`.
//!
//! Every command reads an optional JSON [`RunConfig`], applies flag overrides and
//! writes one table as CSV (with `#` header lines echoing the resolved config) or JSON.
//! Errors go to stderr as JSON; the exit code is 2 for configuration problems and 3
//! for numerical failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::analytic::{closed_form_report, hom_dip_analytic, thermal_schmidt_coefficients};
use crate::config::{LoadedJsa, OutputFormat, RunConfig};
use crate::error::{Error, Result};
use crate::filter::SpectralFilter;
use crate::jsa::{
    discretize, discretize_resolving, linspace, DoubleGaussianJsa, GridSpec, GriddedJsa,
};
use crate::quadrature::{self, BeamSplitter, Source};
use crate::schmidt::{decompose, mode_projection_herald, write_modes_csv, SchmidtDecomposition};
use crate::sweep::{self, Target};

#[derive(Debug, Parser)]
#[command(
    name = "biphoton",
    version,
    about = "Heralded single-photon purity, heralding rate, Schmidt modes and HOM dips"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Minimum quadrature nodes per axis
    #[arg(long, global = true)]
    pub nodes: Option<usize>,
    /// Quadrature window half-width in marginal standard deviations
    #[arg(long, global = true)]
    pub extent: Option<f64>,
    /// Points per axis of the Schmidt grid
    #[arg(long, global = true)]
    pub grid_n: Option<usize>,
    /// Output file (stdout if omitted)
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Put an identical filter on the heralded photon as well
    #[arg(long, global = true)]
    pub two_filters: bool,
    /// Leave the timestamp out of the output header
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// 𝒮, 𝒫, K, g⁽²⁾ and V from the closed forms and from quadrature
    Report,
    /// Purity and heralding probability over filter width and source shape
    Sweep {
        #[arg(long, value_enum, default_value = "tradeoff")]
        kind: SweepKind,
    },
    /// HOM coincidence probability against delay
    Hom {
        #[arg(long, allow_negative_numbers = true)]
        tau_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        tau_max: Option<f64>,
        #[arg(long)]
        n_delays: Option<usize>,
        #[arg(long)]
        reflectance: Option<f64>,
    },
    /// Schmidt coefficients and mode functions from the SVD of the gridded JSA
    Schmidt {
        /// Number of mode functions to export
        #[arg(long)]
        modes: Option<usize>,
        /// Herald by projecting the idler onto this Schmidt mode
        #[arg(long)]
        project_mode: Option<usize>,
    },
    /// Widest Gaussian herald filter reaching a target purity or visibility
    #[command(group(clap::ArgGroup::new("target").required(true).args(["target_purity", "target_visibility"])))]
    SolveFilter {
        #[arg(long)]
        target_purity: Option<f64>,
        #[arg(long)]
        target_visibility: Option<f64>,
        #[arg(long, default_value_t = sweep::DEFAULT_TOLERANCE)]
        tol: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    Aspect,
    Orientation,
    Tradeoff,
}

/// One output cell.
#[derive(Clone, Debug, PartialEq)]
enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:.11e}"),
            Cell::Int(n) => n.to_string(),
            Cell::Text(t) => t.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(n) => json!(n),
            Cell::Text(t) => json!(t),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

#[derive(Debug, Default)]
struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
    /// Extra JSON members, and a companion CSV written next to the main output.
    extra: Map<String, Value>,
    companion: Option<Vec<u8>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            ..Default::default()
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Resolved inputs shared by all commands.
struct Context {
    config: RunConfig,
    base: PathBuf,
    timestamp: bool,
    two_filters: bool,
}

impl Context {
    fn jsa(&self) -> Result<LoadedJsa> {
        match &self.config.jsa {
            Some(spec) => spec.load(&self.base),
            None => Err(Error::Config(
                "this command needs a \"jsa\" block in the config".into(),
            )),
        }
    }

    fn analytic(&self, what: &str) -> Result<DoubleGaussianJsa> {
        match self.jsa()? {
            LoadedJsa::Analytic(j) => Ok(j),
            LoadedJsa::Gridded(_) => Err(Error::Config(format!(
                "{what} needs an analytic double-Gaussian source"
            ))),
        }
    }

    fn filter(&self) -> Result<Option<SpectralFilter>> {
        self.config.filter.as_ref().map(|f| f.build()).transpose()
    }

    fn heralded_filter(&self) -> Result<Option<SpectralFilter>> {
        match (&self.config.heralded_filter, self.two_filters) {
            (Some(f), _) => f.build().map(Some),
            (None, true) => self.filter(),
            (None, false) => Ok(None),
        }
    }
}

fn source(jsa: &LoadedJsa) -> Source<'_> {
    match jsa {
        LoadedJsa::Analytic(j) => Source::Analytic(j),
        LoadedJsa::Gridded(g) => Source::Gridded(g),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let report = json!({ "error": { "kind": e.kind(), "message": e.to_string(), "exit_code": e.exit_code() } });
            eprintln!("{report}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let c = &cli.common;
    let (mut config, base) = match &c.config {
        Some(p) => (
            RunConfig::from_file(p)?,
            p.parent().map(Path::to_path_buf).unwrap_or_default(),
        ),
        None => (RunConfig::default(), PathBuf::from(".")),
    };
    if let Some(n) = c.nodes {
        config.quadrature.n_nodes = n;
        config.quadrature.max_nodes = config.quadrature.max_nodes.max(n);
    }
    if let Some(x) = c.extent {
        config.quadrature.half_extent = x;
    }
    if let Some(n) = c.grid_n {
        config.grid.n_points = Some(n);
    }
    if let Some(p) = &c.output {
        config.output.path = Some(p.clone());
    }
    if let Some(f) = c.format {
        config.output.format = f;
    }
    if let Command::Hom {
        tau_min,
        tau_max,
        n_delays,
        reflectance,
    } = &cli.command
    {
        config.hom.tau_min = tau_min.or(config.hom.tau_min);
        config.hom.tau_max = tau_max.or(config.hom.tau_max);
        config.hom.n_delays = n_delays.unwrap_or(config.hom.n_delays);
        config.hom.reflectance = reflectance.unwrap_or(config.hom.reflectance);
    }
    if let Command::Schmidt { modes: Some(n), .. } = &cli.command {
        config.schmidt.n_modes = *n;
    }
    config.quadrature.validate()?;
    let ctx = Context {
        config,
        base,
        timestamp: !c.no_timestamp,
        two_filters: c.two_filters,
    };

    let (name, table) = match &cli.command {
        Command::Report => ("report", cmd_report(&ctx)?),
        Command::Sweep { kind } => ("sweep", cmd_sweep(&ctx, *kind)?),
        Command::Hom { .. } => ("hom", cmd_hom(&ctx)?),
        Command::Schmidt { project_mode, .. } => ("schmidt", cmd_schmidt(&ctx, *project_mode)?),
        Command::SolveFilter {
            target_purity,
            target_visibility,
            tol,
        } => {
            let target = match (target_purity, target_visibility) {
                (Some(p), _) => Target::Purity(*p),
                (None, Some(v)) => Target::Visibility(*v),
                (None, None) => {
                    return Err(Error::Config(
                        "give --target-purity or --target-visibility".into(),
                    ))
                }
            };
            ("solve-filter", cmd_solve_filter(&ctx, target, *tol)?)
        }
    };
    emit(&ctx, name, table)
}

fn unix_time() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn emit(ctx: &Context, command: &str, table: Table) -> Result<()> {
    let mut out: Vec<u8> = Vec::new();
    let config_line = ctx.config.to_json_line();
    match ctx.config.output.format {
        OutputFormat::Csv => {
            writeln!(out, "# biphoton {} {command}", env!("CARGO_PKG_VERSION"))?;
            writeln!(out, "# config: {config_line}")?;
            if ctx.timestamp {
                writeln!(out, "# generated_unix: {}", unix_time())?;
            }
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&table.columns)?;
            for row in &table.rows {
                w.write_record(row.iter().map(Cell::csv))?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|r| {
                    Value::Object(
                        table
                            .columns
                            .iter()
                            .map(|c| c.to_string())
                            .zip(r.iter().map(Cell::json))
                            .collect(),
                    )
                })
                .collect();
            let mut doc = Map::new();
            doc.insert("command".into(), json!(command));
            doc.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
            doc.insert("config".into(), serde_json::to_value(&ctx.config)?);
            if ctx.timestamp {
                doc.insert("generated_unix".into(), json!(unix_time()));
            }
            doc.insert("rows".into(), Value::Array(rows));
            doc.extend(table.extra);
            serde_json::to_writer_pretty(&mut out, &Value::Object(doc))?;
            out.push(b'\n');
        }
    }
    match &ctx.config.output.path {
        Some(path) => {
            std::fs::write(path, &out)?;
            if let (Some(bytes), OutputFormat::Csv) = (&table.companion, ctx.config.output.format) {
                std::fs::write(path.with_extension("modes.csv"), bytes)?;
            }
        }
        None => std::io::stdout().write_all(&out)?,
    }
    Ok(())
}

fn cmd_report(ctx: &Context) -> Result<Table> {
    let loaded = ctx.jsa()?;
    let src = source(&loaded);
    let spec = &ctx.config.quadrature;
    let filter = ctx.filter()?;
    let heralded = ctx.heralded_filter()?;
    let analytic = match &loaded {
        LoadedJsa::Analytic(j) => Some(*j),
        LoadedJsa::Gridded(_) => None,
    };
    let mut t = Table::new(&["quantity", "closed_form", "quadrature", "discrepancy"]);
    let mut row = |name: &str, cf: Option<f64>, q: f64| {
        let d = cf.map(|c| (c - q).abs());
        t.push(vec![Cell::Text(name.into()), cf.into(), q.into(), d.into()]);
    };

    let p = quadrature::unfiltered_purity(src, spec)?;
    let bare = analytic.map(|j| closed_form_report(&j, None));
    row("unfiltered_purity", bare.map(|r| r.unfiltered_purity), p);
    row("schmidt_number", bare.map(|r| r.schmidt_number), 1.0 / p);
    row("g2", bare.map(|r| r.g2), 1.0 + p);

    if let Some(f) = &filter {
        let gaussian = analytic
            .zip(f.as_gaussian())
            .map(|(j, g)| closed_form_report(&j, Some(g)));
        let h = quadrature::heralding(src, f, spec)?;
        row("success", gaussian.map(|r| r.success), h.success);
        row("purity", gaussian.map(|r| r.purity), h.purity);
        let v = crate::analytic::visibility(h.purity, BeamSplitter::balanced());
        row("visibility_5050", gaussian.map(|r| r.visibility_5050), v);
        if let Some(hf) = &heralded {
            let h2 = quadrature::two_filter_quantities(src, f, hf, spec)?;
            row("success_two_filter", None, h2.success);
            row("purity_two_filter", None, h2.purity);
            row(
                "visibility_5050_two_filter",
                None,
                crate::analytic::visibility(h2.purity, BeamSplitter::balanced()),
            );
        }
    }
    Ok(t)
}

fn cmd_sweep(ctx: &Context, kind: SweepKind) -> Result<Table> {
    let s = &ctx.config.sweep;
    let widths = s
        .filter_widths
        .clone()
        .unwrap_or_else(sweep::default_filter_widths);
    let grid_table = |g: sweep::SweepGrid| {
        let mut t = Table::new(&[
            if kind == SweepKind::Aspect {
                "aspect_ratio"
            } else {
                "theta1"
            },
            "sigma_f_over_sigma1",
            "purity",
            "success",
            "visibility",
        ]);
        for (i, x) in g.axis1.iter().enumerate() {
            for (j, y) in g.axis2.iter().enumerate() {
                let p = g.purity[i][j];
                let v = crate::analytic::visibility(p, BeamSplitter::balanced());
                t.push(vec![
                    (*x).into(),
                    (*y).into(),
                    p.into(),
                    g.success[i][j].into(),
                    v.into(),
                ]);
            }
        }
        t
    };
    match kind {
        SweepKind::Aspect => {
            let ratios = s
                .aspect_ratios
                .clone()
                .unwrap_or_else(sweep::default_aspect_ratios);
            let t1 = s.theta1.map_or(std::f64::consts::FRAC_PI_4, |a| a.0);
            let t2 = s.theta2.map_or(-std::f64::consts::FRAC_PI_4, |a| a.0);
            Ok(grid_table(sweep::sweep_aspect_ratio(
                t1, t2, &ratios, &widths,
            )?))
        }
        SweepKind::Orientation => {
            let thetas = match &s.orientations {
                Some(v) => v.iter().map(|a| a.0).collect(),
                None => sweep::default_orientations(),
            };
            Ok(grid_table(sweep::sweep_orientation(
                s.ratio.unwrap_or(5.0),
                &thetas,
                &widths,
            )?))
        }
        SweepKind::Tradeoff => {
            let jsa = ctx.analytic("a trade-off sweep")?;
            let absolute: Vec<f64> = widths.iter().map(|w| w * jsa.sigma1).collect();
            let pts =
                sweep::tradeoff_curve(&jsa, &absolute, ctx.two_filters, &ctx.config.quadrature)?;
            let mut t = Table::new(&[
                "sigma_f",
                "sigma_f_over_sigma1",
                "success",
                "purity",
                "visibility",
            ]);
            for (p, rel) in pts.iter().zip(&widths) {
                t.push(vec![
                    p.sigma_f.into(),
                    (*rel).into(),
                    p.success.into(),
                    p.purity.into(),
                    p.visibility.into(),
                ]);
            }
            Ok(t)
        }
    }
}

fn cmd_hom(ctx: &Context) -> Result<Table> {
    let loaded = ctx.jsa()?;
    let h = &ctx.config.hom;
    let bs = BeamSplitter::with_reflectance(h.reflectance)?;
    let filter = ctx.filter()?.unwrap_or(SpectralFilter::Open);
    let default_half = match &loaded {
        LoadedJsa::Analytic(j) => 6.0 * j.intensity_precision().a.sqrt(),
        LoadedJsa::Gridded(g) => 0.25 * std::f64::consts::PI / g.signal_step(),
    };
    let lo = h.tau_min.unwrap_or(-default_half);
    let hi = h.tau_max.unwrap_or(default_half);
    if !(hi > lo) || h.n_delays < 2 {
        return Err(Error::Config(
            "HOM delay range needs tau_max > tau_min and at least two delays".into(),
        ));
    }
    let delays = linspace(lo, hi, h.n_delays);
    let curve = quadrature::hom_dip(
        source(&loaded),
        &filter,
        &filter,
        bs,
        &delays,
        &ctx.config.quadrature,
    )?;
    let overlay = match (&loaded, filter.as_gaussian()) {
        (LoadedJsa::Analytic(j), Some(g)) => Some((*j, crate::analytic::closed_form_purity(j, g))),
        (LoadedJsa::Analytic(j), None) if filter == SpectralFilter::Open => {
            Some((*j, closed_form_report(j, None).unfiltered_purity))
        }
        _ => None,
    };
    let v = curve.visibility();
    let mut t = Table::new(&["delay", "coincidence", "analytic_coincidence", "visibility"]);
    for (tau, c) in curve.delays.iter().zip(&curve.coincidences) {
        let a = overlay.map(|(j, p)| hom_dip_analytic(&j, p, bs, *tau));
        t.push(vec![(*tau).into(), (*c).into(), a.into(), v.into()]);
    }
    t.extra.insert("fwhm".into(), json!(curve.fwhm()));
    Ok(t)
}

fn schmidt_grid(ctx: &Context, loaded: LoadedJsa) -> Result<GriddedJsa> {
    let g = &ctx.config.grid;
    match loaded {
        LoadedJsa::Gridded(grid) => Ok(grid),
        LoadedJsa::Analytic(jsa) => match g.n_points {
            Some(n) => discretize(
                &jsa,
                GridSpec {
                    half_extent: g.half_extent,
                    n_points: n,
                },
            ),
            None => {
                let f = ctx.filter()?;
                let hf = ctx.heralded_filter()?;
                discretize_resolving(&jsa, f.as_ref(), hf.as_ref(), g.max_points)
            }
        },
    }
}

fn mode_json(d: &SchmidtDecomposition, n: usize) -> Value {
    let part = |v: Vec<num_complex::Complex64>| {
        (
            v.iter().map(|z| z.re).collect::<Vec<_>>(),
            v.iter().map(|z| z.im).collect::<Vec<_>>(),
        )
    };
    let modes: Vec<Value> = (0..n.min(d.n_modes()))
        .map(|mu| {
            let (sr, si) = part(d.signal_mode(mu));
            let (ir, ii) = part(d.idler_mode(mu));
            json!({ "mu": mu, "p_mu": d.coefficients()[mu], "signal_re": sr, "signal_im": si, "idler_re": ir, "idler_im": ii })
        })
        .collect();
    json!({ "signal_grid": d.signal_grid(), "idler_grid": d.idler_grid(), "modes": modes })
}

fn cmd_schmidt(ctx: &Context, project_mode: Option<usize>) -> Result<Table> {
    let loaded = ctx.jsa()?;
    let k_closed = match &loaded {
        LoadedJsa::Analytic(j) => Some(crate::analytic::schmidt_number(j)),
        LoadedJsa::Gridded(_) => None,
    };
    let grid = schmidt_grid(ctx, loaded)?;
    let d = decompose(&grid, ctx.config.schmidt.rel_threshold)?;

    if let Some(a) = project_mode {
        let proj = mode_projection_herald(&d, a)?;
        let mut t = Table::new(&["quantity", "value"]);
        t.push(vec![
            Cell::Text("mode_index".into()),
            Cell::Int(proj.mode_index),
        ]);
        t.push(vec![Cell::Text("success".into()), proj.success.into()]);
        t.push(vec![Cell::Text("purity".into()), proj.purity.into()]);
        let heralded: Vec<Value> = proj
            .heralded_mode
            .iter()
            .map(|z| json!([z.re, z.im]))
            .collect();
        t.extra.insert(
            "heralded_mode".into(),
            json!({ "omega": d.signal_grid(), "amplitude": heralded }),
        );
        return Ok(t);
    }

    let k = k_closed.unwrap_or_else(|| d.schmidt_number());
    let thermal = thermal_schmidt_coefficients(k, d.n_modes())?;
    let mut t = Table::new(&["mu", "p_mu", "thermal_p_mu"]);
    for (mu, p) in d.coefficients().iter().enumerate() {
        let th = if k_closed.is_some() {
            Cell::Num(thermal[mu])
        } else {
            Cell::Empty
        };
        t.push(vec![Cell::Int(mu), (*p).into(), th]);
    }
    let n = ctx.config.schmidt.n_modes;
    t.extra
        .insert("schmidt_number".into(), json!(d.schmidt_number()));
    t.extra.insert("mode_functions".into(), mode_json(&d, n));
    let mut buf = Vec::new();
    write_modes_csv(&d, n, &mut buf)?;
    t.companion = Some(buf);
    Ok(t)
}

fn cmd_solve_filter(ctx: &Context, target: Target, tol: f64) -> Result<Table> {
    let jsa = ctx.analytic("solve-filter")?;
    let s = sweep::solve_filter_for_target(&jsa, target, tol)?;
    let (kind, value) = match target {
        Target::Purity(p) => ("purity", p),
        Target::Visibility(v) => ("visibility", v),
    };
    let mut t = Table::new(&[
        "target_kind",
        "target",
        "sigma_f",
        "sigma_f_over_sigma1",
        "purity",
        "success",
        "visibility",
        "monotone",
    ]);
    t.push(vec![
        Cell::Text(kind.into()),
        value.into(),
        s.sigma_f.into(),
        (s.sigma_f / jsa.sigma1).into(),
        s.purity.into(),
        s.success.into(),
        s.visibility.into(),
        Cell::Text(s.monotone.to_string()),
    ]);
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn csv_cells_keep_twelve_digits() {
        assert_eq!(Cell::Num(0.1234567890123456).csv(), "1.23456789012e-1");
        assert_eq!(Cell::Num(-2.0).csv(), "-2.00000000000e0");
        assert_eq!(Cell::Empty.csv(), "");
    }
}
