//! Report files: JSON and CSV with fixed real formatting, the manifest, and
//! the per-directory lock.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::config_error;

/// Reals with 17 significant digits; non-finite values as strings.
pub fn real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

struct RealFormatter;

impl serde_json::ser::Formatter for RealFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format!("{value:.16e}").as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

/// Pretty JSON with every real as `{:.16e}`. Non-finite reals become
/// `null`; reports carry a status field that says what happened.
pub fn to_json<T: Serialize>(value: &T) -> anyhow::Result<Vec<u8>> {
    // Round-trip through a value so non-finite reals are mapped before the
    // custom formatter sees them.
    let v = serde_json::to_value(value)?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, PrettyReals::default());
    v.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

/// Two-space indentation plus [`RealFormatter`] for floats.
#[derive(Default)]
struct PrettyReals {
    pretty: serde_json::ser::PrettyFormatter<'static>,
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            serde_json::ser::Formatter::$name(&mut self.pretty, w $(, $arg)*)
        })*
    };
}

impl serde_json::ser::Formatter for PrettyReals {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        RealFormatter.write_f64(w, value)
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        RealFormatter.write_f32(w, value)
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        end_object_key(),
        begin_object_value(),
        end_object_value(),
    );
}

pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("csv: {e}"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files written to an output directory, recorded for the manifest.
pub struct OutDir {
    pub root: PathBuf,
    pub files: Vec<FileEntry>,
    lock: PathBuf,
}

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

pub const LOCK_FILE: &str = ".wgr.lock";

impl OutDir {
    /// Creates the directory and takes its lock.
    pub fn open(root: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        let lock = root.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                return Err(config_error(format!(
                    "{} is locked by another run (remove {} if stale)",
                    root.display(),
                    lock.display()
                )));
            }
            Err(e) => return Err(e).with_context(|| format!("locking {}", root.display())),
        }
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
            lock,
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> anyhow::Result<PathBuf> {
        let path = self.root.join(name);
        let mut f = File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        f.write_all(bytes)?;
        self.files.retain(|e| e.path != name);
        self.files.push(FileEntry {
            path: name.into(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(path)
    }
}

impl Drop for OutDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

/// Writes `bytes` to `out`, or to stdout when `out` is `None`.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, bytes).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}
