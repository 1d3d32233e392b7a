//! File formats, JSON reporting, and a threaded compression driver on
//! top of `rnnpress-core`. The `rnnpress` binary in this crate is a thin
//! shell over these modules.

pub mod container;
pub mod parallel;
pub mod report;
pub mod seqfile;

use std::io::Write as _;
use std::path::Path;

/// Writes `bytes` to `path` through a temp file in the same directory,
/// then renames. Readers either see the old file or the complete new
/// one, never a partial write.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    // Temp files are created 0600; give the destination normal file perms.
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
