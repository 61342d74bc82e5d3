//! Atomic file emission: write to a sibling temp file, then rename.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use fnls::domain::snapshot::{write_field, PayloadKind};
use fnls::domain::Field;
use serde::Serialize;

use crate::Failure;

fn io(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| io(&tmp, e))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(|e| io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_vec_pretty(value).map_err(|e| io(path, e))?;
    text.push(b'\n');
    write_atomic(path, &text)
}

pub fn write_snapshot(path: &Path, field: &Field, kind: PayloadKind) -> Result<(), Failure> {
    let mut buf = Vec::new();
    write_field(&mut buf, field, kind).map_err(|e| io(path, e))?;
    write_atomic(path, &buf)
}

/// Output directory plus file name.
pub struct OutDir(pub PathBuf);

impl OutDir {
    pub fn file(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}
