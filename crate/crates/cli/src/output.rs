//! All-or-nothing output files.
//!
//! Files are staged as temporaries inside the output directory and renamed
//! into place only once every file of a run has been written. If any step
//! fails, the files already renamed are removed again.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::CliError;

pub struct OutputSet {
    dir: PathBuf,
    staged: Vec<(PathBuf, NamedTempFile)>,
}

impl OutputSet {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(OutputSet {
            dir: dir.to_path_buf(),
            staged: Vec::new(),
        })
    }

    pub fn stage(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let target = self.dir.join(name);
        let mut tmp = tempfile::Builder::new()
            .prefix(&format!(".{name}."))
            .tempfile_in(&self.dir)
            .map_err(|e| CliError::io(&self.dir, e))?;
        tmp.write_all(bytes)
            .and_then(|_| tmp.as_file().sync_all())
            .map_err(|e| CliError::io(tmp.path(), e))?;
        self.staged.push((target.clone(), tmp));
        Ok(target)
    }

    /// Renames every staged file into place; on failure leaves none behind.
    pub fn commit(self) -> Result<Vec<PathBuf>, CliError> {
        let mut done: Vec<PathBuf> = Vec::new();
        for (target, tmp) in self.staged {
            if let Err(e) = tmp.persist(&target) {
                for p in &done {
                    let _ = fs::remove_file(p);
                }
                return Err(CliError::io(&target, e.error));
            }
            done.push(target);
        }
        Ok(done)
    }
}

/// RFC 4180 CSV with LF line endings.
pub fn csv_bytes<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>, CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Runtime(format!("csv buffer: {e}")))
}

pub fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}
