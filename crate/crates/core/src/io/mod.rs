//! CSV exchange formats: the canonical daily series, the Oxford-Man realized
//! library export, forecast files and report tables.
//!
//! Every writer goes through a temporary file in the target directory that is
//! renamed into place, so readers never see a partial file.

mod canonical;
mod forecasts;
mod omi;
mod table;

pub use canonical::{read_canonical, read_canonical_from, write_canonical, write_canonical_to, CANONICAL_HEADER};
pub use forecasts::{read_forecasts, read_forecasts_from, write_forecasts, write_forecasts_to, FORECAST_HEADER};
pub use omi::{find_symbol, parse_omi_csv, parse_omi_from, OmiImport};
pub use table::Table;

use std::io::Write;
use std::path::Path;

use crate::error::Result;

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes through a sibling temporary file renamed over `path` on success.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    // temporary files are created owner-only; reports should be readable like any other output
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut buf)?;
        buf.flush()?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
