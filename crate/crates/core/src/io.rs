//! Data ingestion and results serialization: CSV tables with strict headers,
//! a compact binary draws format, JSON configs with unknown-key rejection,
//! and the result bundle written by every subcommand.
//!
//! CSV conventions: UTF-8, '.' decimal separator, newline-terminated rows.
//! Floats are written with the shortest representation that round-trips
//! exactly, so rereading a metrics file reproduces the numbers bit for bit.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::exposure::Schedule;
use crate::linalg::mat::Mat;
use crate::sim::{KlBenchRow, MetricRow, ReplicateDetail};

// --- CSV primitives -----------------------------------------------------------

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = std::fs::File::open(path)?;
    let mut lines = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            lines.push(line);
        }
    }
    Ok(lines)
}

fn header_index(header: &str, path: &Path, required: &[&str]) -> Result<Vec<usize>> {
    let cols: Vec<&str> = header.split(',').map(|c| c.trim()).collect();
    required
        .iter()
        .map(|want| {
            cols.iter().position(|c| c == want).ok_or_else(|| Error::MissingColumn {
                column: want.to_string(),
                path: path.display().to_string(),
            })
        })
        .collect()
}

fn parse_field(field: &str, path: &Path, row: usize, column: &str) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::BadNumeric {
        path: path.display().to_string(),
        row,
        column: column.to_string(),
    })?;
    if !v.is_finite() {
        return Err(Error::BadNumeric {
            path: path.display().to_string(),
            row,
            column: column.to_string(),
        });
    }
    Ok(v)
}

// --- typed tables ---------------------------------------------------------------

/// Locations plus per-site values read from a spatial CSV.
#[derive(Debug, Clone)]
pub struct SpatialTable {
    pub ids: Vec<String>,
    pub sites: Vec<[f64; 2]>,
    /// 0-based time index when the file carries a `t` column.
    pub t: Option<Vec<usize>>,
    pub values: Vec<f64>,
}

/// Reads a measurement file with columns `site_id,x,y[,t],w`.
pub fn read_exposure_csv(path: &Path) -> Result<SpatialTable> {
    let lines = read_lines(path)?;
    if lines.is_empty() {
        return Err(Error::EmptyInput("exposure csv"));
    }
    let has_t = lines[0].split(',').any(|c| c.trim() == "t");
    let wanted: Vec<&str> = if has_t {
        vec!["site_id", "x", "y", "t", "w"]
    } else {
        vec!["site_id", "x", "y", "w"]
    };
    let idx = header_index(&lines[0], path, &wanted)?;
    let mut out = SpatialTable {
        ids: Vec::new(),
        sites: Vec::new(),
        t: if has_t { Some(Vec::new()) } else { None },
        values: Vec::new(),
    };
    for (row, line) in lines.iter().enumerate().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let get = |j: usize| -> &str { fields.get(idx[j]).map(|s| *s).unwrap_or("") };
        out.ids.push(get(0).trim().to_string());
        let x = parse_field(get(1), path, row, "x")?;
        let y = parse_field(get(2), path, row, "y")?;
        out.sites.push([x, y]);
        if has_t {
            let tv = parse_field(get(3), path, row, "t")?;
            if tv < 1.0 || tv.fract() != 0.0 {
                return Err(Error::BadNumeric {
                    path: path.display().to_string(),
                    row,
                    column: "t".into(),
                });
            }
            out.t.as_mut().expect("has t").push(tv as usize - 1);
            out.values.push(parse_field(get(4), path, row, "w")?);
        } else {
            out.values.push(parse_field(get(3), path, row, "w")?);
        }
    }
    Ok(out)
}

/// Writes a measurement table back out in the same format.
pub fn write_exposure_csv(path: &Path, table: &SpatialTable) -> Result<()> {
    let mut f = BufWriter::new(std::fs::File::create(path)?);
    if let Some(t) = &table.t {
        writeln!(f, "site_id,x,y,t,w")?;
        for i in 0..table.ids.len() {
            writeln!(
                f,
                "{},{},{},{},{}",
                table.ids[i],
                table.sites[i][0],
                table.sites[i][1],
                t[i] + 1,
                table.values[i]
            )?;
        }
    } else {
        writeln!(f, "site_id,x,y,w")?;
        for i in 0..table.ids.len() {
            writeln!(
                f,
                "{},{},{},{}",
                table.ids[i], table.sites[i][0], table.sites[i][1], table.values[i]
            )?;
        }
    }
    Ok(())
}

/// Health data: `id,x,y,y_outcome` plus any number of covariate columns.
#[derive(Debug, Clone)]
pub struct HealthTable {
    pub ids: Vec<String>,
    pub sites: Vec<[f64; 2]>,
    pub y: Vec<f64>,
    pub z: Mat,
    pub z_names: Vec<String>,
}

pub fn read_health_csv(path: &Path) -> Result<HealthTable> {
    let lines = read_lines(path)?;
    if lines.is_empty() {
        return Err(Error::EmptyInput("health csv"));
    }
    let idx = header_index(&lines[0], path, &["id", "x", "y", "y_outcome"])?;
    let header: Vec<String> = lines[0].split(',').map(|c| c.trim().to_string()).collect();
    let z_cols: Vec<usize> = (0..header.len()).filter(|j| !idx.contains(j)).collect();
    let z_names: Vec<String> = z_cols.iter().map(|&j| header[j].clone()).collect();
    let n = lines.len() - 1;
    let mut out = HealthTable {
        ids: Vec::with_capacity(n),
        sites: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        z: Mat::zeros(n, z_cols.len()),
        z_names,
    };
    for (row, line) in lines.iter().enumerate().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let get = |j: usize| -> &str { fields.get(j).map(|s| *s).unwrap_or("") };
        out.ids.push(get(idx[0]).trim().to_string());
        let x = parse_field(get(idx[1]), path, row, "x")?;
        let y = parse_field(get(idx[2]), path, row, "y")?;
        out.sites.push([x, y]);
        out.y.push(parse_field(get(idx[3]), path, row, "y_outcome")?);
        for (c, &j) in z_cols.iter().enumerate() {
            let v = parse_field(get(j), path, row, &out.z_names[c].clone())?;
            out.z.set(row - 1, c, v);
        }
    }
    Ok(out)
}

/// Subject exposure windows: `subject_id,t_start,t_end` with inclusive
/// 1-based endpoints.
pub fn read_windows_csv(path: &Path) -> Result<Vec<(String, i64, i64)>> {
    let lines = read_lines(path)?;
    if lines.is_empty() {
        return Err(Error::EmptyInput("windows csv"));
    }
    let idx = header_index(&lines[0], path, &["subject_id", "t_start", "t_end"])?;
    let mut out = Vec::new();
    for (row, line) in lines.iter().enumerate().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let get = |j: usize| -> &str { fields.get(idx[j]).map(|s| *s).unwrap_or("") };
        let start = parse_field(get(1), path, row, "t_start")? as i64;
        let end = parse_field(get(2), path, row, "t_end")? as i64;
        out.push((get(0).trim().to_string(), start, end));
    }
    Ok(out)
}

/// Draw matrices: header of column labels, one row per kept draw.
pub fn write_draws_csv(path: &Path, labels: &[String], draws: &Mat) -> Result<()> {
    let mut f = BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{}", labels.join(","))?;
    for r in 0..draws.nrows() {
        let row: Vec<String> = draws.row(r).iter().map(|v| format!("{v}")).collect();
        writeln!(f, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_draws_csv(path: &Path) -> Result<(Vec<String>, Mat)> {
    let lines = read_lines(path)?;
    if lines.len() < 2 {
        return Err(Error::EmptyInput("draws csv"));
    }
    let labels: Vec<String> = lines[0].split(',').map(|c| c.trim().to_string()).collect();
    let ncols = labels.len();
    let mut m = Mat::zeros(lines.len() - 1, ncols);
    for (row, line) in lines.iter().enumerate().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != ncols {
            return Err(Error::Parse(format!(
                "{}: row {row} has {} fields, expected {ncols}",
                path.display(),
                fields.len()
            )));
        }
        for (c, field) in fields.iter().enumerate() {
            m.set(row - 1, c, parse_field(field, path, row, &labels[c])?);
        }
    }
    Ok((labels, m))
}

const DRAWS_MAGIC: &[u8; 8] = b"SMVNDRW1";

/// Binary draws: magic, u64 rows, u64 cols, little-endian f64 values row by
/// row.
pub fn write_draws_bin(path: &Path, draws: &Mat) -> Result<()> {
    let mut f = BufWriter::new(std::fs::File::create(path)?);
    f.write_all(DRAWS_MAGIC)?;
    f.write_all(&(draws.nrows() as u64).to_le_bytes())?;
    f.write_all(&(draws.ncols() as u64).to_le_bytes())?;
    for v in draws.data() {
        f.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_draws_bin(path: &Path) -> Result<Mat> {
    let mut f = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic)?;
    if &magic != DRAWS_MAGIC {
        return Err(Error::Parse(format!(
            "{}: not a draws file (bad magic)",
            path.display()
        )));
    }
    let mut buf8 = [0u8; 8];
    f.read_exact(&mut buf8)?;
    let rows = u64::from_le_bytes(buf8) as usize;
    f.read_exact(&mut buf8)?;
    let cols = u64::from_le_bytes(buf8) as usize;
    let mut m = Mat::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            f.read_exact(&mut buf8)?;
            m.set(r, c, f64::from_le_bytes(buf8));
        }
    }
    Ok(m)
}

/// Reads draws from either format, sniffing the binary magic.
pub fn read_draws_any(path: &Path) -> Result<Mat> {
    let mut f = std::fs::File::open(path)?;
    let mut magic = [0u8; 8];
    let is_bin = f.read_exact(&mut magic).is_ok() && &magic == DRAWS_MAGIC;
    drop(f);
    if is_bin {
        read_draws_bin(path)
    } else {
        Ok(read_draws_csv(path)?.1)
    }
}

// --- results bundle --------------------------------------------------------------

/// Everything a subcommand emits: the metrics table, a free-form summary, and
/// the echoed configuration it ran under.
#[derive(Debug, Clone)]
pub struct ResultBundle {
    pub metrics: Vec<MetricRow>,
    pub details: Vec<ReplicateDetail>,
    pub summary: serde_json::Value,
    pub config_echo: serde_json::Value,
}

/// FNV-1a 64 over the canonical JSON encoding (serde_json sorts map keys).
pub fn config_hash(config: &serde_json::Value) -> String {
    let text = serde_json::to_string(config).expect("serializable config");
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricRow]) -> Result<()> {
    let mut f = BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "method,bias,rmse,ci_len,coverage_pct,time_s")?;
    for r in rows {
        writeln!(
            f,
            "{},{},{},{},{},{}",
            r.method, r.bias, r.rmse, r.ci_len, r.coverage_pct, r.time_s
        )?;
    }
    Ok(())
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricRow>> {
    let lines = read_lines(path)?;
    if lines.is_empty() {
        return Err(Error::EmptyInput("metrics csv"));
    }
    let idx = header_index(
        &lines[0],
        path,
        &["method", "bias", "rmse", "ci_len", "coverage_pct", "time_s"],
    )?;
    let mut out = Vec::new();
    for (row, line) in lines.iter().enumerate().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let get = |j: usize| -> &str { fields.get(idx[j]).map(|s| *s).unwrap_or("") };
        out.push(MetricRow {
            method: get(0).trim().to_string(),
            bias: parse_field(get(1), path, row, "bias")?,
            rmse: parse_field(get(2), path, row, "rmse")?,
            ci_len: parse_field(get(3), path, row, "ci_len")?,
            coverage_pct: parse_field(get(4), path, row, "coverage_pct")?,
            time_s: parse_field(get(5), path, row, "time_s")?,
            failed: 0,
        });
    }
    Ok(out)
}

pub fn write_details_csv(path: &Path, rows: &[ReplicateDetail]) -> Result<()> {
    let mut f = BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        f,
        "replicate,method,estimate,lo95,hi95,covered,seconds,error"
    )?;
    for r in rows {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{}",
            r.replicate,
            r.method,
            r.estimate,
            r.lo95,
            r.hi95,
            r.covered,
            r.seconds,
            r.error.as_deref().unwrap_or("")
        )?;
    }
    Ok(())
}

pub fn write_kl_bench_csv(path: &Path, rows: &[KlBenchRow]) -> Result<()> {
    let mut f = BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "n,k,kl_mean,sample_time_mean_s,build_time_s")?;
    for r in rows {
        writeln!(
            f,
            "{},{},{},{},{}",
            r.n, r.k, r.kl_mean, r.sample_time_mean_s, r.build_time_s
        )?;
    }
    Ok(())
}

/// Writes metrics.csv, details.csv, summary.json, and config.echo.json into
/// `dir`, stamping the config hash into the summary.
pub fn write_results(bundle: &ResultBundle, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_metrics_csv(&dir.join("metrics.csv"), &bundle.metrics)?;
    if !bundle.details.is_empty() {
        write_details_csv(&dir.join("details.csv"), &bundle.details)?;
    }
    let mut summary = bundle.summary.clone();
    if let serde_json::Value::Object(map) = &mut summary {
        map.insert(
            "config_hash".into(),
            serde_json::Value::String(config_hash(&bundle.config_echo)),
        );
        map.insert(
            "software_version".into(),
            serde_json::Value::String(env!("CARGO_PKG_VERSION").into()),
        );
    }
    std::fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("serializable summary"),
    )?;
    std::fs::write(
        dir.join("config.echo.json"),
        serde_json::to_string_pretty(&bundle.config_echo).expect("serializable config"),
    )?;
    Ok(())
}

// --- configuration ---------------------------------------------------------------

/// Grid layout: explicit points or a regular lattice.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub points: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub nx: Option<usize>,
    #[serde(default)]
    pub ny: Option<usize>,
    #[serde(default)]
    pub x_range: Option<(f64, f64)>,
    #[serde(default)]
    pub y_range: Option<(f64, f64)>,
}

impl GridSpec {
    pub fn resolve(&self) -> Result<Vec<[f64; 2]>> {
        if let Some(pts) = &self.points {
            if pts.is_empty() {
                return Err(Error::Validation("grid.points is empty".into()));
            }
            return Ok(pts.clone());
        }
        let nx = self.nx.unwrap_or(5);
        let ny = self.ny.unwrap_or(5);
        if nx == 0 || ny == 0 {
            return Err(Error::Validation("grid dimensions must be positive".into()));
        }
        Ok(crate::exposure::regular_grid(
            nx,
            ny,
            self.x_range.unwrap_or((0.0, 2.0)),
            self.y_range.unwrap_or((0.0, 2.0)),
        ))
    }
}

fn default_schema_version() -> u32 {
    1
}

/// JSON configuration for exposure-model fits. Unknown keys are rejected;
/// numeric fields are validated against module preconditions at parse time.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExposureConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default = "ExposureConfig::default_sigma_k")]
    pub sigma_k: f64,
    /// Mean prior: (mean, variance); mean defaults to the data average.
    #[serde(default)]
    pub mu_prior: Option<(f64, f64)>,
    #[serde(default = "ExposureConfig::default_ig")]
    pub sigma2_g_prior: (f64, f64),
    #[serde(default = "ExposureConfig::default_ig")]
    pub sigma2_w_prior: (f64, f64),
    #[serde(default = "ExposureConfig::default_schedule")]
    pub schedule: Schedule,
    #[serde(default = "ExposureConfig::default_spline_df")]
    pub spline_df: usize,
}

impl ExposureConfig {
    fn default_sigma_k() -> f64 {
        0.4
    }

    fn default_ig() -> (f64, f64) {
        (0.01, 0.01)
    }

    fn default_schedule() -> Schedule {
        Schedule {
            burn_in: 10_000,
            kept: 1_000,
            thin: 5,
        }
    }

    fn default_spline_df() -> usize {
        14
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_k > 0.0) {
            return Err(Error::Validation(format!(
                "sigma_k must be positive, got {}",
                self.sigma_k
            )));
        }
        for (name, (a, b)) in [
            ("sigma2_g_prior", self.sigma2_g_prior),
            ("sigma2_w_prior", self.sigma2_w_prior),
        ] {
            if !(a > 0.0 && b > 0.0) {
                return Err(Error::Validation(format!("{name} must be positive")));
            }
        }
        if self.schedule.kept == 0 || self.schedule.thin == 0 {
            return Err(Error::Validation("schedule kept/thin must be positive".into()));
        }
        if self.spline_df == 0 {
            return Err(Error::Validation("spline_df must be positive".into()));
        }
        Ok(())
    }
}

impl Default for ExposureConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

/// Parses an exposure config from a JSON file, filling defaults and
/// validating preconditions. An empty file means all defaults.
pub fn parse_exposure_config(path: &Path) -> Result<ExposureConfig> {
    let text = std::fs::read_to_string(path)?;
    let text = if text.trim().is_empty() { "{}" } else { &text };
    let cfg: ExposureConfig =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmpdir(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("sparsemvn-io-{name}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn exposure_csv_round_trip_is_byte_identical() {
        let dir = tmpdir("exposure");
        let path = dir.join("w.csv");
        let table = SpatialTable {
            ids: vec!["a".into(), "b".into(), "c".into()],
            sites: vec![[0.1, 0.2], [1.5, 0.25], [0.7, 1.9]],
            t: None,
            values: vec![3.25, 2.875, 3.0625e-3],
        };
        write_exposure_csv(&path, &table).unwrap();
        let bytes1 = std::fs::read(&path).unwrap();
        let reread = read_exposure_csv(&path).unwrap();
        assert_eq!(reread.ids, table.ids);
        assert_eq!(reread.sites, table.sites);
        assert_eq!(reread.values, table.values);
        write_exposure_csv(&path, &reread).unwrap();
        let bytes2 = std::fs::read(&path).unwrap();
        assert_eq!(bytes1, bytes2);
    }

    #[test]
    fn exposure_csv_bad_numeric_reports_row() {
        let dir = tmpdir("badnum");
        let path = dir.join("w.csv");
        std::fs::write(&path, "site_id,x,y,w\ns1,0.0,0.0,1.0\ns2,0.5,0.5,NA\n").unwrap();
        match read_exposure_csv(&path) {
            Err(Error::BadNumeric { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "w");
            }
            other => panic!("expected BadNumeric, got {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_reported() {
        let dir = tmpdir("missing");
        let path = dir.join("w.csv");
        std::fs::write(&path, "site_id,x,w\ns1,0.0,1.0\n").unwrap();
        match read_exposure_csv(&path) {
            Err(Error::MissingColumn { column, .. }) => assert_eq!(column, "y"),
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    #[test]
    fn metrics_round_trip_is_lossless() {
        let dir = tmpdir("metrics");
        let path = dir.join("metrics.csv");
        let rows = vec![MetricRow {
            method: "sparse:5".into(),
            bias: -0.004_673_211_872_312_1,
            rmse: 0.065_123_456_789_012_34,
            ci_len: 0.282,
            coverage_pct: 96.0,
            time_s: 105.437_219,
            failed: 0,
        }];
        write_metrics_csv(&path, &rows).unwrap();
        let reread = read_metrics_csv(&path).unwrap();
        assert_eq!(reread[0].bias.to_bits(), rows[0].bias.to_bits());
        assert_eq!(reread[0].rmse.to_bits(), rows[0].rmse.to_bits());
        assert_eq!(reread[0].time_s.to_bits(), rows[0].time_s.to_bits());
        // header-only when there are no methods
        write_metrics_csv(&path, &[]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "method,bias,rmse,ci_len,coverage_pct,time_s\n");
    }

    #[test]
    fn draws_formats_round_trip() {
        let dir = tmpdir("draws");
        let m = Mat::from_rows(&[vec![1.0, 2.5, -0.125], vec![0.333_333, 4.0, 5.0]]);
        let csv = dir.join("d.csv");
        write_draws_csv(&csv, &["a".into(), "b".into(), "c".into()], &m).unwrap();
        let (labels, back) = read_draws_csv(&csv).unwrap();
        assert_eq!(labels, vec!["a", "b", "c"]);
        assert_eq!(back.data(), m.data());
        let bin = dir.join("d.bin");
        write_draws_bin(&bin, &m).unwrap();
        let back = read_draws_bin(&bin).unwrap();
        assert_eq!(back.data(), m.data());
        assert_eq!(read_draws_any(&bin).unwrap().data(), m.data());
        assert_eq!(read_draws_any(&csv).unwrap().data(), m.data());
    }

    #[test]
    fn config_defaults_and_unknown_keys() {
        let dir = tmpdir("config");
        let path = dir.join("cfg.json");
        std::fs::write(&path, "").unwrap();
        let cfg = parse_exposure_config(&path).unwrap();
        assert_eq!(cfg.schema_version, 1);
        assert_eq!(cfg.schedule.burn_in, 10_000);
        assert_eq!(cfg.schedule.kept, 1_000);
        assert_eq!(cfg.schedule.thin, 5);
        assert_eq!(cfg.spline_df, 14);

        std::fs::write(&path, r#"{"sigma_k": -1.0}"#).unwrap();
        assert!(matches!(
            parse_exposure_config(&path),
            Err(Error::Validation(_))
        ));

        std::fs::write(&path, r#"{"bogus_key": 1}"#).unwrap();
        assert!(matches!(parse_exposure_config(&path), Err(Error::Parse(_))));
    }

    #[test]
    fn results_bundle_hash_is_self_consistent() {
        let dir = tmpdir("bundle");
        let config = serde_json::json!({"seed": 7, "methods": ["plugin"]});
        let bundle = ResultBundle {
            metrics: vec![],
            details: vec![],
            summary: serde_json::json!({"seed": 7}),
            config_echo: config.clone(),
        };
        write_results(&bundle, &dir).unwrap();
        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap())
                .unwrap();
        let echoed: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join("config.echo.json")).unwrap())
                .unwrap();
        assert_eq!(
            summary["config_hash"].as_str().unwrap(),
            config_hash(&echoed)
        );
    }

    #[test]
    fn grid_spec_resolution() {
        let spec: GridSpec = serde_json::from_str(r#"{"nx": 2, "ny": 2}"#).unwrap();
        assert_eq!(spec.resolve().unwrap().len(), 4);
        let spec: GridSpec = serde_json::from_str(r#"{"points": [[0.1, 0.3]]}"#).unwrap();
        assert_eq!(spec.resolve().unwrap(), vec![[0.1, 0.3]]);
    }
}
