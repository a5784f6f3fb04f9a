//! Artifact writing: atomic JSON/CSV output.

use std::fs;
use std::io::Write;
use std::path::Path;

/// Writes `bytes` to `dir/name` via a temp file and rename, so a failed run
/// never leaves a partial artifact behind.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, dir.join(name))
}

/// CSV assembly with a fixed header; floats use the shortest round-trip
/// decimal form (no locale).
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &str) -> Csv {
        Csv { buf: format!("{header}\n") }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf.into_bytes()
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}
