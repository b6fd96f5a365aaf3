//! File formats: curve tables, the on-disk curve cache, trajectories,
//! measurement records and certificates.
//!
//! Every file starts with a block of `# key: value` comment lines. Floats
//! are written with Rust's shortest round-trip formatting, so a table read
//! back from disk is bit-identical to the one that was written.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::certify::{exact_lower, DepthCertificate, MeasurementRecord, TableProvider};
use crate::curves::{
    analytic_bound, compute_curve_with, CurveGrid, CurvePoint, CurveTable, SharedTable,
};
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::spin::Spin;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable that overrides the curve cache directory.
pub const CACHE_DIR_ENV: &str = "SPINSQUEEZE_CACHE_DIR";

pub const CURVE_COLUMNS: [&str; 5] = ["two_j", "mu", "x", "f", "slope"];

pub const TRAJECTORY_COLUMNS: [&str; 9] = [
    "t",
    "mean_jx",
    "mean_jy",
    "mean_jz",
    "var_jx",
    "var_jy",
    "var_jz",
    "min_transverse_var",
    "optimal_angle",
];

pub const FRONTIER_COLUMNS: [&str; 5] = ["t", "x", "scaled_min_var", "envelope", "excess"];

/// First 16 hex digits of the SHA-256 of `bytes`.
pub fn short_hash(bytes: &[u8]) -> String {
    hex::encode(&Sha256::digest(bytes)[..8])
}

/// Hash of a configuration's canonical JSON form.
pub fn config_hash<T: Serialize + ?Sized>(config: &T) -> Result<String> {
    Ok(short_hash(&serde_json::to_vec(config)?))
}

/// The metadata comment block.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Header {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub timestamp: Option<String>,
    pub extra: Vec<(String, String)>,
}

impl Header {
    pub fn new<T: Serialize + ?Sized>(command: &str, config: &T) -> Result<Header> {
        Ok(Header {
            command: command.to_string(),
            version: VERSION.to_string(),
            config_hash: config_hash(config)?,
            timestamp: None,
            extra: Vec::new(),
        })
    }

    pub fn stamped(mut self) -> Header {
        self.timestamp =
            Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
        self
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Header {
        self.extra.push((key.to_string(), value.to_string()));
        self
    }

    pub fn lines(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# spinsqueeze {}", self.version);
        let _ = writeln!(s, "# command: {}", self.command);
        let _ = writeln!(s, "# config_hash: {}", self.config_hash);
        if let Some(ts) = &self.timestamp {
            let _ = writeln!(s, "# timestamp: {ts}");
        }
        for (k, v) in &self.extra {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s
    }

    /// Key/value view for formats without comments.
    pub fn as_map(&self) -> Vec<(String, String)> {
        let mut m = vec![
            ("version".to_string(), self.version.clone()),
            ("command".to_string(), self.command.clone()),
            ("config_hash".to_string(), self.config_hash.clone()),
        ];
        if let Some(ts) = &self.timestamp {
            m.push(("timestamp".to_string(), ts.clone()));
        }
        m.extend(self.extra.iter().cloned());
        m
    }
}

/// `# key: value` pairs from the leading comment block.
pub fn read_header_fields(text: &str) -> Vec<(String, String)> {
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| {
            let (k, v) = l.trim_start_matches('#').split_once(':')?;
            Some((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn malformed(path: &Path, reason: impl ToString) -> Error {
    Error::Malformed {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    malformed(path, e)
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

// ---------------------------------------------------------------------------
// Curve tables.

pub fn write_curve_csv<W: Write>(table: &CurveTable, header: &Header, mut out: W) -> Result<()> {
    let header = header.clone().with("valid_from", fmt_f64(table.valid_from));
    out.write_all(header.lines().as_bytes())?;
    let mut w = csv::Writer::from_writer(out);
    let path = Path::new("<output>");
    w.write_record(CURVE_COLUMNS)
        .map_err(|e| csv_error(path, e))?;
    let two_j = table.spin.two_j().to_string();
    for p in &table.points {
        w.write_record([
            &two_j,
            &fmt_f64(p.mu),
            &fmt_f64(p.x),
            &fmt_f64(p.f),
            &fmt_f64(p.slope),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn curve_csv_string(table: &CurveTable, header: &Header) -> Result<String> {
    let mut buf = Vec::new();
    write_curve_csv(table, header, &mut buf)?;
    String::from_utf8(buf).map_err(|e| malformed(Path::new("<output>"), e))
}

/// Parses a curve CSV. `path` is used only in error messages.
pub fn read_curve_csv<R: Read>(mut input: R, path: &Path) -> Result<CurveTable> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let fields = read_header_fields(&text);
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let cols = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if cols.iter().ne(CURVE_COLUMNS) {
        return Err(malformed(
            path,
            format!("expected header {}", CURVE_COLUMNS.join(",")),
        ));
    }
    let mut spin: Option<Spin> = None;
    let mut points = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = i + 1;
        let two_j: u32 = row[0]
            .parse()
            .map_err(|_| malformed(path, format!("row {line}: bad two_j `{}`", &row[0])))?;
        let s = match spin {
            None => *spin.insert(Spin::new(two_j)?),
            Some(s) if s.two_j() == two_j => s,
            Some(s) => {
                return Err(malformed(
                    path,
                    format!("row {line}: two_j {two_j} != {}", s.two_j()),
                ))
            }
        };
        let num = |k: usize| -> Result<f64> {
            row[k].parse::<f64>().map_err(|_| {
                malformed(
                    path,
                    format!("row {line}: bad {} `{}`", CURVE_COLUMNS[k], &row[k]),
                )
            })
        };
        let p = CurvePoint {
            mu: num(1)?,
            x: num(2)?,
            f: num(3)?,
            slope: num(4)?,
            ground_energy: 0.0,
        }
        .with_energy(s);
        if let Some(prev) = points.last() {
            let prev: &CurvePoint = prev;
            if p.x.is_nan() || p.x <= prev.x {
                return Err(malformed(path, format!("row {line}: x not increasing")));
            }
        }
        points.push(p);
    }
    let spin = spin.ok_or_else(|| malformed(path, "no rows"))?;
    let valid_from = match fields.iter().find(|(k, _)| k == "valid_from") {
        Some((_, v)) => v
            .parse()
            .map_err(|_| malformed(path, format!("bad valid_from `{v}`")))?,
        None => points[0].x,
    };
    Ok(CurveTable {
        spin,
        points,
        valid_from,
    })
}

/// Cache key for a grid, tied to the library version.
pub fn grid_hash(grid: &CurveGrid) -> String {
    short_hash(format!("{VERSION}|{}", grid.key()).as_bytes())
}

/// Curve tables persisted as `curve_{two_j}_{gridhash}.csv` files. Writes go
/// through a temporary file in the same directory and an atomic rename, so
/// concurrent processes never see a partial table.
pub struct CurveCache {
    dir: PathBuf,
    grid: CurveGrid,
    execution: Execution,
    memo: Mutex<HashMap<Spin, SharedTable>>,
}

impl CurveCache {
    pub fn new(dir: impl Into<PathBuf>, grid: CurveGrid) -> CurveCache {
        CurveCache {
            dir: dir.into(),
            grid,
            execution: Execution::default(),
            memo: Mutex::new(HashMap::new()),
        }
    }

    /// `explicit`, else the environment override, else a directory under the
    /// system temp dir.
    pub fn resolve_dir(explicit: Option<&Path>) -> PathBuf {
        if let Some(p) = explicit {
            return p.to_path_buf();
        }
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(p) if !p.is_empty() => PathBuf::from(p),
            _ => std::env::temp_dir().join("spinsqueeze-cache"),
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> CurveCache {
        self.execution = execution;
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn grid(&self) -> &CurveGrid {
        &self.grid
    }

    pub fn path_for(&self, spin: Spin) -> PathBuf {
        self.dir.join(format!(
            "curve_{}_{}.csv",
            spin.two_j(),
            grid_hash(&self.grid)
        ))
    }

    fn header(&self) -> Header {
        Header {
            command: "curve-cache".into(),
            version: VERSION.into(),
            config_hash: grid_hash(&self.grid),
            timestamp: None,
            extra: vec![("grid".into(), self.grid.key())],
        }
    }

    /// The cached table, or `None` if absent. A file that does not parse or
    /// belongs to another spin is treated as absent.
    pub fn load(&self, spin: Spin) -> Result<Option<CurveTable>> {
        let path = self.path_for(spin);
        let file = match fs::File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        match read_curve_csv(file, &path) {
            Ok(t) if t.spin == spin => Ok(Some(t)),
            _ => Ok(None),
        }
    }

    /// Writes `table` atomically and returns the table as read back from the
    /// written bytes.
    pub fn store(&self, table: &CurveTable) -> Result<CurveTable> {
        let path = self.path_for(table.spin);
        let text = curve_csv_string(table, &self.header())?;
        fs::create_dir_all(&self.dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(text.as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path).map_err(|e| Error::Io(e.error))?;
        read_curve_csv(text.as_bytes(), &path)
    }

    /// Cached table or a fresh computation (which is then cached).
    pub fn get_or_compute(&self, spin: Spin) -> Result<SharedTable> {
        if let Some(t) = self.memo.lock().expect("curve memo poisoned").get(&spin) {
            return Ok(t.clone());
        }
        let table = match self.load(spin)? {
            Some(t) => t,
            None => {
                let fresh = compute_curve_with(spin, &self.grid, self.execution)?;
                self.store(&fresh)?
            }
        };
        let t = SharedTable::new(table);
        self.memo
            .lock()
            .expect("curve memo poisoned")
            .entry(spin)
            .or_insert(t.clone());
        Ok(t)
    }
}

impl TableProvider for CurveCache {
    fn table(&self, spin: Spin) -> Result<SharedTable> {
        self.get_or_compute(spin)
    }
}

// ---------------------------------------------------------------------------
// Trajectories.

pub fn write_trajectory_csv<W: Write>(
    traj: &Trajectory,
    header: &Header,
    footer: &[(String, String)],
    mut out: W,
) -> Result<()> {
    out.write_all(header.lines().as_bytes())?;
    let path = Path::new("<output>");
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(TRAJECTORY_COLUMNS)
            .map_err(|e| csv_error(path, e))?;
        for s in &traj.samples {
            let m = &s.moments;
            let row = [
                s.t,
                m.mean_jx,
                m.mean_jy,
                m.mean_jz,
                m.var_jx,
                m.var_jy,
                m.var_jz,
                s.min_transverse_variance,
                s.optimal_angle,
            ];
            w.write_record(row.iter().map(|v| fmt_f64(*v)))
                .map_err(|e| csv_error(path, e))?;
        }
        w.flush()?;
    }
    for (k, v) in footer {
        writeln!(out, "# {k}: {v}")?;
    }
    Ok(())
}

/// A trajectory sample placed against the optimal frontier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrontierRow {
    pub t: f64,
    /// ⟨Jz⟩/J
    pub x: f64,
    /// Minimal transverse variance / J.
    pub scaled_min_var: f64,
    /// Certified lower bound on F_J at x.
    pub envelope: f64,
    pub excess: f64,
}

/// Compares every sample with the lower envelope of F_J. Where the exact
/// table does not apply (half-integer spin left of its edge) the closed-form
/// bound is used instead.
pub fn frontier_comparison(
    traj: &Trajectory,
    tables: &dyn TableProvider,
) -> Result<Vec<FrontierRow>> {
    let spin = traj.spin;
    let j = spin.j();
    traj.samples
        .iter()
        .map(|s| {
            let x = (s.moments.mean_jz / j).clamp(-1.0, 1.0);
            let envelope = match exact_lower(spin, x, tables) {
                Ok(l) => l.value,
                Err(Error::Regime { .. }) => analytic_bound(spin, x)?,
                Err(e) => return Err(e),
            };
            let scaled = s.min_transverse_variance / j;
            Ok(FrontierRow {
                t: s.t,
                x,
                scaled_min_var: scaled,
                envelope,
                excess: scaled - envelope,
            })
        })
        .collect()
}

pub fn write_frontier_csv<W: Write>(
    rows: &[FrontierRow],
    header: &Header,
    mut out: W,
) -> Result<()> {
    out.write_all(header.lines().as_bytes())?;
    let path = Path::new("<output>");
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FRONTIER_COLUMNS)
        .map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.write_record(
            [r.t, r.x, r.scaled_min_var, r.envelope, r.excess]
                .iter()
                .map(|v| fmt_f64(*v)),
        )
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Records and certificates.

/// Records from one file; `array` is false when the file held a single object.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordSet {
    pub records: Vec<MeasurementRecord>,
    pub array: bool,
}

/// Parses a JSON record file holding one object or an array of objects and
/// validates each record. Errors name the offending field (and the array
/// index for arrays).
pub fn parse_records(text: &str, path: &Path) -> Result<RecordSet> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| malformed(path, e))?;
    let (items, indexed) = match value {
        serde_json::Value::Array(a) => (a, true),
        v @ serde_json::Value::Object(_) => (vec![v], false),
        _ => return Err(malformed(path, "expected an object or an array of objects")),
    };
    if items.is_empty() {
        return Err(malformed(path, "no records"));
    }
    let prefix = |i: usize| {
        if indexed {
            format!("[{i}].")
        } else {
            String::new()
        }
    };
    let records = items
        .into_iter()
        .enumerate()
        .map(|(i, item)| {
            let rec: MeasurementRecord = serde_json::from_value(item).map_err(|e| {
                malformed(
                    path,
                    format!(
                        "{}{e}",
                        if indexed {
                            format!("record {i}: ")
                        } else {
                            String::new()
                        }
                    ),
                )
            })?;
            rec.validate().map_err(|e| match e {
                Error::InvalidRecord { field, reason } => Error::InvalidRecord {
                    field: format!("{}{field}", prefix(i)),
                    reason,
                },
                other => other,
            })?;
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RecordSet {
        records,
        array: indexed,
    })
}

pub fn read_records(path: &Path) -> Result<RecordSet> {
    let text = fs::read_to_string(path)?;
    parse_records(&text, path)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructuredFormat {
    #[default]
    Toml,
    Json,
}

/// Serializes a report. TOML output starts with the header comment block;
/// JSON carries the same fields under a top-level `metadata` object.
/// `many` wraps the items in an array named `key`.
pub fn structured_report<T: Serialize>(
    items: &[T],
    many: bool,
    key: &str,
    header: &Header,
    format: StructuredFormat,
) -> Result<String> {
    match format {
        StructuredFormat::Toml => {
            let toml_err = |e: &dyn std::fmt::Display| Error::InvalidInput(format!("toml: {e}"));
            let text = if many {
                let mut t = toml::Table::new();
                t.insert(
                    key.to_string(),
                    toml::Value::try_from(items).map_err(|e| toml_err(&e))?,
                );
                toml::to_string(&t).map_err(|e| toml_err(&e))?
            } else {
                toml::to_string(single(items, key)?).map_err(|e| toml_err(&e))?
            };
            Ok(format!("{}{text}", header.lines()))
        }
        StructuredFormat::Json => {
            let meta: serde_json::Map<String, serde_json::Value> = header
                .as_map()
                .into_iter()
                .map(|(k, v)| (k, serde_json::Value::String(v)))
                .collect();
            let mut obj = serde_json::Map::new();
            obj.insert("metadata".into(), serde_json::Value::Object(meta));
            if many {
                obj.insert(key.to_string(), serde_json::to_value(items)?);
            } else {
                match serde_json::to_value(single(items, key)?)? {
                    serde_json::Value::Object(m) => obj.extend(m),
                    other => {
                        obj.insert(key.to_string(), other);
                    }
                }
            }
            let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(obj))?;
            s.push('\n');
            Ok(s)
        }
    }
}

fn single<'a, T>(items: &'a [T], key: &str) -> Result<&'a T> {
    match items {
        [one] => Ok(one),
        _ => Err(Error::InvalidInput(format!("expected exactly one {key}"))),
    }
}

pub fn certificates_report(
    certs: &[DepthCertificate],
    many: bool,
    header: &Header,
    format: StructuredFormat,
) -> Result<String> {
    structured_report(certs, many, "certificate", header, format)
}
