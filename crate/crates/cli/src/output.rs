//! Result destination and the JSON metadata sidecar.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use ptvar::Result;
use serde_json::Value;

pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Writes `body` to `output` (or stdout) and, for file output, the metadata
/// next to it.
pub fn emit(output: Option<&Path>, body: &str, metadata: Value) -> Result<()> {
    match output {
        Some(path) => {
            let mut out = BufWriter::new(File::create(path)?);
            out.write_all(body.as_bytes())?;
            out.flush()?;
            let mut meta = BufWriter::new(File::create(sidecar_path(path))?);
            serde_json::to_writer_pretty(&mut meta, &metadata).map_err(io::Error::other)?;
            meta.write_all(b"\n")?;
            meta.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(body.as_bytes())?;
            lock.flush()?;
        }
    }
    Ok(())
}

/// Full-precision field; empty for a missing value.
pub fn field(x: Option<f64>) -> String {
    x.map(ptvar::experiments::io::format_f64).unwrap_or_default()
}
