//! File formats and persistence: trials and draws CSV, run manifests, and
//! atomic writes.

mod draws;
mod manifest;
mod trials;

pub use draws::{draws_csv, load_draws, parse_draws, DRAWS_HEADER};
pub use manifest::{sha256_hex, FileEntry, Manifest, MANIFEST_FILE};
pub use trials::{
    load_trials, parse_trials, trials_csv, LoadedTrials, RejectedRow, ValidationReport,
    MAX_REJECT_FRACTION, MAX_SCENARIO_ID, TRIALS_HEADER,
};

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

/// Creates `dir` if needed and checks that a file can be written there.
pub fn ensure_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(format!(".write-probe{}", std::process::id()));
    fs::write(&probe, b"").map_err(|e| Error::io(dir, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(dir, e))?;
    Ok(())
}
