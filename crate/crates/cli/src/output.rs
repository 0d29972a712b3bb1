//! Run directories and JSON documents.

use std::fs::File;
use std::io::{BufWriter, ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

const MAX_RUNS: usize = 1_000_000;

/// Creates `<root>/<prefix>-NNN` with the first unused `NNN`. Existing
/// directories are never reused.
pub fn create_run_dir(root: &Path, prefix: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
    for i in 0..MAX_RUNS {
        let dir = root.join(format!("{prefix}-{i:03}"));
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e).with_context(|| format!("creating {}", dir.display())),
        }
    }
    bail!("{} already holds {MAX_RUNS} `{prefix}` directories", root.display())
}

pub fn tool_info() -> Value {
    json!({
        "name": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
    })
}

/// The only nondeterministic field of a manifest.
pub fn generated_stamp(started: Instant) -> Value {
    json!({
        "timestamp": chrono::Utc::now().to_rfc3339(),
        "wall_clock_seconds": started.elapsed().as_secs_f64(),
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn existing_run_dirs_are_skipped() {
        let root = tempfile::tempdir().unwrap();
        let a = create_run_dir(root.path(), "run").unwrap();
        let b = create_run_dir(root.path(), "run").unwrap();
        assert_eq!(a.file_name().unwrap(), "run-000");
        assert_eq!(b.file_name().unwrap(), "run-001");
    }
}
