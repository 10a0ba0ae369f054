use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::CliError;

/// Writes artifacts named `<prefix>_<stem>.<ext>` (or `<stem>.<ext>` with an
/// empty prefix) into one directory.
pub struct Artifacts {
    dir: PathBuf,
    prefix: String,
    pub written: Vec<PathBuf>,
}

pub type CsvOut = csv::Writer<BufWriter<File>>;

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output(format!("{}: {e}", path.display()))
}

impl Artifacts {
    pub fn new(dir: &Path, prefix: &str) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        Ok(Artifacts { dir: dir.to_path_buf(), prefix: prefix.to_string(), written: Vec::new() })
    }

    fn path(&mut self, stem: &str, ext: &str) -> PathBuf {
        let name = if self.prefix.is_empty() { format!("{stem}.{ext}") } else { format!("{}_{stem}.{ext}", self.prefix) };
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    /// A CSV file whose first line is `# generated_unix=<seconds>`; the rest
    /// is written by the caller, header row first.
    pub fn raw_csv(&mut self, stem: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
        let path = self.path(stem, "csv");
        let file = File::create(&path).map_err(|e| io_error(&path, e))?;
        let mut out = BufWriter::new(file);
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        writeln!(out, "# generated_unix={now}").map_err(|e| io_error(&path, e))?;
        Ok((path, out))
    }

    pub fn csv(&mut self, stem: &str, header: &[&str]) -> Result<CsvOut, CliError> {
        let (path, out) = self.raw_csv(stem)?;
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(header).map_err(|e| io_error(&path, e))?;
        Ok(w)
    }

    pub fn json<T: Serialize>(&mut self, stem: &str, value: &T) -> Result<(), CliError> {
        let path = self.path(stem, "json");
        let mut text = serde_json::to_string_pretty(value).map_err(|e| io_error(&path, e))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| io_error(&path, e))
    }
}

pub fn row<I, S>(w: &mut CsvOut, fields: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(fields).map_err(|e| CliError::Output(e.to_string()))
}

pub fn finish(mut w: CsvOut) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::Output(e.to_string()))
}

pub fn finish_raw(mut out: BufWriter<File>) -> Result<(), CliError> {
    out.flush().map_err(|e| CliError::Output(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

/// CSV body without the generated-at line.
fn csv_body(text: &str) -> &str {
    match text.split_once('\n') {
        Some((first, rest)) if first.starts_with("# generated_unix=") => rest,
        _ => text,
    }
}

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::new(dir.path(), "x").unwrap();
        let mut w = a.csv("table", &["s", "v"]).unwrap();
        row(&mut w, ["2", "0.5"]).unwrap();
        finish(w).unwrap();
        let text = std::fs::read_to_string(dir.path().join("x_table.csv")).unwrap();
        assert!(text.starts_with("# generated_unix="));
        assert_eq!(csv_body(&text), "s,v\n2,0.5\n");
        assert!(!text.contains('\r'));
        assert_eq!(a.written.len(), 1);
    }
}
