use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use super::DataError;

const LOCK_NAME: &str = ".csabench.lock";

/// Exclusive writer lock on a directory, released on drop. The lock file
/// holds the owner's pid; on Linux a lock whose owner has exited is taken
/// over, so a killed writer does not block the next one.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

fn owner_is_gone(path: &Path) -> bool {
    if !cfg!(target_os = "linux") {
        return false;
    }
    match fs::read_to_string(path).ok().and_then(|s| s.trim().parse::<u32>().ok()) {
        Some(pid) => !Path::new(&format!("/proc/{pid}")).exists(),
        None => false,
    }
}

impl DirLock {
    pub fn acquire(dir: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = dir.as_ref().join(LOCK_NAME);
        for attempt in 0..2 {
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(mut f) => {
                    let _ = writeln!(f, "{}", std::process::id());
                    return Ok(Self { path });
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    if attempt == 0 && owner_is_gone(&path) {
                        let _ = fs::remove_file(&path);
                        continue;
                    }
                    return Err(DataError::Locked(dir.as_ref().to_path_buf()));
                }
                Err(e) => return Err(DataError::Io { path, source: e }),
            }
        }
        Err(DataError::Locked(dir.as_ref().to_path_buf()))
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_writer_is_refused_until_release() {
        let dir = tempfile::tempdir().unwrap();
        let a = DirLock::acquire(dir.path()).unwrap();
        assert!(matches!(DirLock::acquire(dir.path()), Err(DataError::Locked(_))));
        drop(a);
        DirLock::acquire(dir.path()).unwrap();
    }

    #[cfg(target_os = "linux")]
    #[test]
    fn stale_lock_is_taken_over() {
        let dir = tempfile::tempdir().unwrap();
        let mut child = std::process::Command::new("true").spawn().unwrap();
        let pid = child.id();
        child.wait().unwrap();
        fs::write(dir.path().join(LOCK_NAME), format!("{pid}\n")).unwrap();
        DirLock::acquire(dir.path()).unwrap();
    }
}
