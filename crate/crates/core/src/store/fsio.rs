use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

/// Simulated power loss: the mutating filesystem operation numbered
/// `crash_at_op` (0-based) is cut short and every later operation fails.
/// A cut-short write leaves half of its bytes behind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaultPlan {
    pub crash_at_op: u64,
}

pub(crate) struct Fs {
    fsync: bool,
    fault: Option<FaultPlan>,
    ops: AtomicU64,
    dead: AtomicBool,
}

fn crashed() -> io::Error {
    io::Error::other("injected crash")
}

impl Fs {
    pub(crate) fn new(fsync: bool, fault: Option<FaultPlan>) -> Self {
        Self {
            fsync,
            fault,
            ops: AtomicU64::new(0),
            dead: AtomicBool::new(false),
        }
    }

    pub(crate) fn ops(&self) -> u64 {
        self.ops.load(Ordering::SeqCst)
    }

    /// Returns `Ok(true)` when this operation is the one that crashes.
    fn tick(&self) -> io::Result<bool> {
        if self.dead.load(Ordering::SeqCst) {
            return Err(crashed());
        }
        let n = self.ops.fetch_add(1, Ordering::SeqCst);
        if self.fault.is_some_and(|f| f.crash_at_op == n) {
            self.dead.store(true, Ordering::SeqCst);
            return Ok(true);
        }
        Ok(false)
    }

    fn write_bytes(&self, mut file: File, bytes: &[u8]) -> io::Result<()> {
        if self.tick()? {
            file.write_all(&bytes[..bytes.len() / 2])?;
            return Err(crashed());
        }
        file.write_all(bytes)?;
        if self.fsync {
            file.sync_all()?;
        }
        Ok(())
    }

    pub(crate) fn write_new(&self, path: &Path, bytes: &[u8]) -> io::Result<()> {
        self.write_bytes(File::create(path)?, bytes)
    }

    pub(crate) fn append(&self, path: &Path, bytes: &[u8]) -> io::Result<()> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        self.write_bytes(file, bytes)
    }

    pub(crate) fn truncate(&self, path: &Path, len: u64) -> io::Result<()> {
        if self.tick()? {
            return Err(crashed());
        }
        let file = OpenOptions::new().write(true).open(path)?;
        file.set_len(len)?;
        if self.fsync {
            file.sync_all()?;
        }
        Ok(())
    }

    pub(crate) fn rename(&self, from: &Path, to: &Path) -> io::Result<()> {
        if self.tick()? {
            return Err(crashed());
        }
        fs::rename(from, to)?;
        if let Some(parent) = to.parent() {
            self.sync_dir(parent)?;
        }
        Ok(())
    }

    /// Writes through a temporary sibling so readers see old or new bytes only.
    pub(crate) fn write_atomic(&self, path: &Path, bytes: &[u8]) -> io::Result<()> {
        let tmp = tmp_path(path);
        self.write_new(&tmp, bytes)?;
        self.rename(&tmp, path)
    }

    pub(crate) fn create_dir_all(&self, path: &Path) -> io::Result<()> {
        if path.is_dir() {
            return Ok(());
        }
        if self.tick()? {
            return Err(crashed());
        }
        fs::create_dir_all(path)
    }

    pub(crate) fn remove_file(&self, path: &Path) -> io::Result<()> {
        if !path.exists() {
            return Ok(());
        }
        if self.tick()? {
            return Err(crashed());
        }
        fs::remove_file(path)
    }

    pub(crate) fn remove_dir_all(&self, path: &Path) -> io::Result<()> {
        if !path.exists() {
            return Ok(());
        }
        if self.tick()? {
            return Err(crashed());
        }
        fs::remove_dir_all(path)
    }

    fn sync_dir(&self, path: &Path) -> io::Result<()> {
        if self.fsync {
            File::open(path)?.sync_all()?;
        }
        Ok(())
    }
}

pub(crate) fn tmp_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}
