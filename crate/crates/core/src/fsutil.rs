//! Sibling lock files and atomic temp-file-then-rename writes.
//!
//! Both the learner profile store and the sync pipeline use the same
//! discipline: a lock file created with `O_EXCL` next to the guarded
//! resource, considered stale once its modification time is older than a
//! configured threshold.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime};

/// Default age after which a lock file is considered abandoned.
pub const DEFAULT_STALE_AFTER: Duration = Duration::from_secs(10);

/// An exclusively created lock file, removed on drop.
#[derive(Debug)]
pub struct FileLock {
    path: PathBuf,
}

/// Result of a non-blocking lock attempt.
#[derive(Debug)]
pub enum LockAttempt {
    Acquired(FileLock),
    /// Another holder owns a lock younger than the stale threshold.
    Held,
}

impl FileLock {
    /// Tries once to create `path`. A lock older than `stale_after` is
    /// broken and the creation retried a single time.
    pub fn try_acquire(path: impl AsRef<Path>, stale_after: Duration) -> io::Result<LockAttempt> {
        let path = path.as_ref();
        match Self::create(path) {
            Ok(lock) => return Ok(LockAttempt::Acquired(lock)),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {}
            Err(e) => return Err(e),
        }
        if !is_stale(path, stale_after) {
            return Ok(LockAttempt::Held);
        }
        match fs::remove_file(path) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(e),
        }
        match Self::create(path) {
            Ok(lock) => Ok(LockAttempt::Acquired(lock)),
            // Someone else broke it first and won the race.
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Ok(LockAttempt::Held),
            Err(e) => Err(e),
        }
    }

    fn create(path: &Path) -> io::Result<Self> {
        let mut file = OpenOptions::new().write(true).create_new(true).open(path)?;
        // Holder pid aids debugging of stuck locks; contents are never parsed.
        let _ = writeln!(file, "{}", std::process::id());
        Ok(Self {
            path: path.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl Drop for FileLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn is_stale(path: &Path, stale_after: Duration) -> bool {
    let Ok(meta) = fs::metadata(path) else {
        // Vanished between our attempt and now: treat as breakable.
        return true;
    };
    let Ok(modified) = meta.modified() else {
        return false;
    };
    SystemTime::now()
        .duration_since(modified)
        .map(|age| age >= stale_after)
        .unwrap_or(false)
}

/// The lock file path guarding `target`: `<target>.lock` in the same directory.
pub fn sibling_lock_path(target: &Path) -> PathBuf {
    let mut name = target
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".lock");
    target.with_file_name(name)
}

/// Writes `bytes` to a temporary file next to `path`, syncs it, then renames
/// it over `path`. Readers observe either the old or the new contents.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let file_name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".tmp.{}", std::process::id()));
    let tmp = dir.join(tmp_name);

    let result = (|| {
        let mut file = File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}
