//! Small CSV helpers shared by the file-facing parts of each module.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use csv::StringRecord;

use crate::error::{Error, Result};

pub type Writer = csv::Writer<BufWriter<File>>;

/// Creates `path`, making missing parent directories.
pub fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::write(dir, e))?;
    }
    File::create(path).map_err(|e| Error::write(path, e))
}

pub fn writer(path: &Path) -> Result<Writer> {
    let f = create(path)?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

pub fn row<I, T>(w: &mut Writer, path: &Path, fields: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[u8]>,
{
    w.write_record(fields).map_err(|e| Error::csv(path, e))
}

pub fn finish(mut w: Writer, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::write(path, e))
}

/// Shortest round-trip representation; deterministic across platforms.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        // avoid "-0"
        "0".to_string()
    } else {
        format!("{v}")
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// A headed CSV file loaded in memory.
pub struct Table {
    pub headers: StringRecord,
    pub rows: Vec<StringRecord>,
    path: std::path::PathBuf,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::read(path, e))?;
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(f);
        let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
        let rows = rdr
            .records()
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::csv(path, e))?;
        Ok(Table {
            headers,
            rows,
            path: path.to_path_buf(),
        })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Invalid(format!("{}: missing column {name:?}", self.path.display())))
    }

    pub fn f64_at(&self, rec: &StringRecord, col: usize) -> Result<f64> {
        rec[col].parse::<f64>().map_err(|_| self.bad(rec, col))
    }

    pub fn opt_f64_at(&self, rec: &StringRecord, col: usize) -> Result<Option<f64>> {
        if rec[col].is_empty() {
            Ok(None)
        } else {
            self.f64_at(rec, col).map(Some)
        }
    }

    pub fn i64_at(&self, rec: &StringRecord, col: usize) -> Result<i64> {
        rec[col].parse::<i64>().map_err(|_| self.bad(rec, col))
    }

    fn bad(&self, rec: &StringRecord, col: usize) -> Error {
        Error::Invalid(format!(
            "{}: line {}: cannot parse {:?} in column {}",
            self.path.display(),
            rec.position().map(|p| p.line()).unwrap_or(0),
            &rec[col],
            self.headers.get(col).unwrap_or("?"),
        ))
    }
}

/// Data records of a headed CSV file, header skipped.
pub fn records(path: &Path) -> Result<Vec<Result<StringRecord>>> {
    let t = Table::read(path)?;
    Ok(t.rows.into_iter().map(Ok).collect())
}

pub fn parse_u64(rec: &StringRecord, col: usize, path: &Path) -> Result<u64> {
    rec.get(col)
        .and_then(|s| s.parse::<u64>().ok())
        .ok_or_else(|| Error::Invalid(format!("{}: bad integer in column {col}", path.display())))
}
