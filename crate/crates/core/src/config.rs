//! JSON run configuration for the command-line front end.
//!
//! ```json
//! {
//!   "jsa": { "sigma1": 6.0, "sigma2": 0.7, "theta1": "pi/4", "theta2": 0.97 },
//!   "filter": { "center": 0.0, "width": 0.72 },
//!   "quadrature": { "n_nodes": 200 },
//!   "output": { "format": "csv" }
//! }
//! ```
//!
//! The source is one of `{sigma1, sigma2, theta1, theta2}`,
//! `{pulse_duration_ps, pm_bandwidth_radps, pump_angle, pm_angle}` or
//! `{tabulated: "path.csv"}`. Angles are numbers in radians or strings such as
//! `"pi/4"`, `"-3*pi/8"` or `"0.25pi"`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::filter::SpectralFilter;
use crate::jsa::{DoubleGaussianJsa, GriddedJsa, SourcePhysicalParams};
use crate::quadrature::QuadratureSpec;
use crate::schmidt::DEFAULT_REL_THRESHOLD;

/// An angle in radians, parsed from a number or a multiple of π.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Angle(pub f64);

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Parses `"1.2"`, `"pi"`, `"-pi/4"`, `"3*pi/8"`, `"0.25pi"` or `"π/2"`.
pub fn parse_angle(text: &str) -> Result<f64> {
    let bad = || Error::Config(format!("cannot parse angle {text:?}"));
    let s: String = text
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect::<String>()
        .to_lowercase()
        .replace('π', "pi");
    if let Ok(x) = s.parse::<f64>() {
        return Ok(x);
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().map_err(|_| bad())?),
        None => (s.as_str(), 1.0),
    };
    let coef = num.strip_suffix("pi").ok_or_else(bad)?;
    let coef = coef.strip_suffix('*').unwrap_or(coef);
    let c = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    if den == 0.0 {
        return Err(bad());
    }
    Ok(c * std::f64::consts::PI / den)
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(Angle(x)),
            Raw::Text(t) => parse_angle(&t).map(Angle).map_err(serde::de::Error::custom),
        }
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticSource {
    pub sigma1: f64,
    pub sigma2: f64,
    pub theta1: Angle,
    pub theta2: Angle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalSource {
    pub pulse_duration_ps: f64,
    pub pm_bandwidth_radps: f64,
    pub pump_angle: Angle,
    pub pm_angle: Angle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulatedSource {
    pub tabulated: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsaSpec {
    Analytic(AnalyticSource),
    Physical(PhysicalSource),
    Tabulated(TabulatedSource),
}

/// A source ready for computation.
#[derive(Clone, Debug)]
pub enum LoadedJsa {
    Analytic(DoubleGaussianJsa),
    Gridded(GriddedJsa),
}

impl JsaSpec {
    /// Builds the source. Relative tabulated paths resolve against `base`.
    pub fn load(&self, base: &Path) -> Result<LoadedJsa> {
        match self {
            JsaSpec::Analytic(a) => Ok(LoadedJsa::Analytic(DoubleGaussianJsa::new(
                a.sigma1, a.sigma2, a.theta1.0, a.theta2.0,
            )?)),
            JsaSpec::Physical(p) => Ok(LoadedJsa::Analytic(
                SourcePhysicalParams {
                    pulse_duration: p.pulse_duration_ps,
                    pump_angle: p.pump_angle.0,
                    pm_bandwidth: p.pm_bandwidth_radps,
                    pm_angle: p.pm_angle.0,
                }
                .to_jsa()?,
            )),
            JsaSpec::Tabulated(t) => {
                let path = if t.tabulated.is_absolute() {
                    t.tabulated.clone()
                } else {
                    base.join(&t.tabulated)
                };
                let file = std::fs::File::open(&path).map_err(|e| {
                    Error::Config(format!("cannot open tabulated JSA {}: {e}", path.display()))
                })?;
                Ok(LoadedJsa::Gridded(read_tabulated_jsa(file)?))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianFilterSpec {
    #[serde(default)]
    pub center: f64,
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulatedFilterSpec {
    pub grid: Vec<f64>,
    pub transmission: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FilterSpec {
    Gaussian(GaussianFilterSpec),
    Tabulated(TabulatedFilterSpec),
}

impl FilterSpec {
    pub fn build(&self) -> Result<SpectralFilter> {
        match self {
            FilterSpec::Gaussian(g) => SpectralFilter::gaussian(g.center, g.width),
            FilterSpec::Tabulated(t) => {
                SpectralFilter::tabulated(t.grid.clone(), t.transmission.clone())
            }
        }
    }
}

/// Discretization for the Schmidt route. Without `n_points` the grid is sized to
/// resolve the source and filters, up to `max_points` per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSettings {
    pub n_points: Option<usize>,
    pub half_extent: f64,
    pub max_points: usize,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self {
            n_points: None,
            half_extent: 8.0,
            max_points: 2048,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomSettings {
    pub tau_min: Option<f64>,
    pub tau_max: Option<f64>,
    pub n_delays: usize,
    pub reflectance: f64,
}

impl Default for HomSettings {
    fn default() -> Self {
        Self {
            tau_min: None,
            tau_max: None,
            n_delays: 201,
            reflectance: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchmidtSettings {
    /// Number of mode functions to export.
    pub n_modes: usize,
    pub rel_threshold: f64,
}

impl Default for SchmidtSettings {
    fn default() -> Self {
        Self {
            n_modes: 10,
            rel_threshold: DEFAULT_REL_THRESHOLD,
        }
    }
}

/// Sweep axes. Filter widths are σ_f/σ₁; unset axes use the library defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub filter_widths: Option<Vec<f64>>,
    pub aspect_ratios: Option<Vec<f64>>,
    pub orientations: Option<Vec<Angle>>,
    pub theta1: Option<Angle>,
    pub theta2: Option<Angle>,
    pub ratio: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    pub path: Option<PathBuf>,
    pub format: OutputFormat,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub jsa: Option<JsaSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heralded_filter: Option<FilterSpec>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub grid: GridSettings,
    #[serde(default)]
    pub hom: HomSettings,
    #[serde(default)]
    pub schmidt: SchmidtSettings,
    #[serde(default)]
    pub sweep: SweepSettings,
    #[serde(default)]
    pub output: OutputSettings,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Reads a JSA tabulated as CSV rows `omega_signal, omega_idler, re, im`.
///
/// Rows may come in any order but must cover a full rectangular grid with uniform
/// spacing along each axis. The amplitude is renormalized on the grid.
pub fn read_tabulated_jsa<R: std::io::Read>(reader: R) -> Result<GriddedJsa> {
    #[derive(Deserialize)]
    struct Row {
        omega_signal: f64,
        omega_idler: f64,
        re: f64,
        im: f64,
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut cells = BTreeMap::new();
    let key = |x: f64| x.to_bits();
    let mut rows = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let r = row.map_err(|e| Error::Config(format!("tabulated JSA: {e}")))?;
        rows.push(r);
    }
    let mut signal: Vec<f64> = rows.iter().map(|r| r.omega_signal).collect();
    let mut idler: Vec<f64> = rows.iter().map(|r| r.omega_idler).collect();
    for axis in [&mut signal, &mut idler] {
        axis.sort_by(f64::total_cmp);
        axis.dedup();
    }
    let (ns, ni) = (signal.len(), idler.len());
    if ns * ni != rows.len() {
        return Err(Error::Config(format!(
            "tabulated JSA has {} rows, expected a full {ns}×{ni} grid",
            rows.len()
        )));
    }
    let si: BTreeMap<u64, usize> = signal
        .iter()
        .enumerate()
        .map(|(i, &x)| (key(x), i))
        .collect();
    let ii: BTreeMap<u64, usize> = idler
        .iter()
        .enumerate()
        .map(|(i, &x)| (key(x), i))
        .collect();
    for r in &rows {
        let pos = (si[&key(r.omega_signal)], ii[&key(r.omega_idler)]);
        if cells.insert(pos, Complex64::new(r.re, r.im)).is_some() {
            return Err(Error::Config(format!(
                "tabulated JSA repeats the point ({}, {})",
                r.omega_signal, r.omega_idler
            )));
        }
    }
    let amplitudes = DMatrix::from_fn(ns, ni, |i, j| cells[&(i, j)]);
    GriddedJsa::new(signal, idler, amplitudes)?.normalized()
}

/// Writes a gridded JSA in the format [`read_tabulated_jsa`] accepts.
pub fn write_tabulated_jsa<W: std::io::Write>(g: &GriddedJsa, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["omega_signal", "omega_idler", "re", "im"])?;
    for (i, s) in g.signal_grid().iter().enumerate() {
        for (j, t) in g.idler_grid().iter().enumerate() {
            let z = g.amplitudes()[(i, j)];
            w.write_record([s, t, &z.re, &z.im].map(|x| format!("{x:.16e}")))?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jsa::{discretize, GridSpec};
    use std::f64::consts::PI;

    #[test]
    fn angles() {
        let cases = [
            ("0.97", 0.97),
            ("pi", PI),
            ("pi/4", PI / 4.0),
            ("-pi/4", -PI / 4.0),
            ("3*pi/8", 3.0 * PI / 8.0),
            ("0.25pi", PI / 4.0),
            (" π / 2 ", PI / 2.0),
            ("-0.5*PI", -PI / 2.0),
        ];
        for (text, expect) in cases {
            assert!(
                (parse_angle(text).unwrap() - expect).abs() < 1e-15,
                "{text}"
            );
        }
        for bad in ["", "pie", "pi/0", "2*", "x*pi"] {
            assert!(parse_angle(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn analytic_config() {
        let c = RunConfig::from_json(
            r#"{"jsa": {"sigma1": 6.0, "sigma2": 0.7, "theta1": "pi/4", "theta2": 0.97},
                "filter": {"width": 0.72}, "quadrature": {"n_nodes": 100}}"#,
        )
        .unwrap();
        let LoadedJsa::Analytic(jsa) = c.jsa.as_ref().unwrap().load(Path::new(".")).unwrap() else {
            panic!()
        };
        assert_eq!(jsa, DoubleGaussianJsa::ktp_waveguide());
        assert_eq!(
            c.filter.unwrap().build().unwrap(),
            SpectralFilter::gaussian(0.0, 0.72).unwrap()
        );
        assert_eq!(c.quadrature.n_nodes, 100);
        assert_eq!(
            c.quadrature.half_extent,
            QuadratureSpec::default().half_extent
        );
        assert_eq!(c.output.format, OutputFormat::Csv);
    }

    #[test]
    fn physical_config() {
        let c = RunConfig::from_json(
            r#"{"jsa": {"pulse_duration_ps": 0.5, "pm_bandwidth_radps": 1.0, "pump_angle": "pi/4", "pm_angle": "-pi/4"}}"#,
        )
        .unwrap();
        let LoadedJsa::Analytic(jsa) = c.jsa.unwrap().load(Path::new(".")).unwrap() else {
            panic!()
        };
        assert!((jsa.sigma1 - 2.0 / 2f64.ln().sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rejects_mixed_or_unknown_fields() {
        for bad in [
            r#"{"jsa": {"sigma1": 1, "sigma2": 2, "theta1": 0.1, "theta2": 1, "tabulated": "x.csv"}}"#,
            r#"{"jsa": {"sigma1": 1}}"#,
            r#"{"jsa": {"sigma1": 1, "sigma2": 2, "theta1": "pie", "theta2": 1}}"#,
            r#"{"filter": {"width": 1, "extra": 2}}"#,
            r#"{"output": {"format": "xml"}}"#,
        ] {
            assert!(
                matches!(RunConfig::from_json(bad), Err(Error::Config(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn tabulated_round_trip() {
        let jsa = DoubleGaussianJsa::new(1.0, 3.0, 0.5, -0.7).unwrap();
        let g = discretize(
            &jsa,
            GridSpec {
                half_extent: 6.0,
                n_points: 64,
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        write_tabulated_jsa(&g, &mut buf).unwrap();
        // Row order does not matter.
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines[1..].reverse();
        let back = read_tabulated_jsa(lines.join("\n").as_bytes()).unwrap();
        assert_eq!(back.signal_grid().len(), 64);
        assert!((back.amplitudes() - g.amplitudes()).norm() < 1e-12);
    }

    #[test]
    fn tabulated_rejects_holes() {
        let text = "omega_signal,omega_idler,re,im\n0,0,1,0\n0,1,1,0\n1,0,1,0\n";
        assert!(matches!(
            read_tabulated_jsa(text.as_bytes()),
            Err(Error::Config(_))
        ));
        let text = "omega_signal,omega_idler,re,im\n0,0,1,0\n0,0,1,0\n1,0,1,0\n1,1,1,0\n";
        assert!(read_tabulated_jsa(text.as_bytes()).is_err());
    }
}
