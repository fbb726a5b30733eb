//! Output formatting shared by the serializers: 17-significant-digit
//! floats (exact f64 round trip) and atomic file writes.

use std::fs;
use std::io;
use std::path::Path;

/// Formats with 17 significant digits so parsing the text recovers the
/// exact f64 bit pattern.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    format!("{x:.16e}")
}

/// Writes `content` to `path` via a temp file in the same directory plus
/// rename, so readers never observe a partial file.
pub fn atomic_write(path: &Path, content: &str) -> io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp_path = std::path::PathBuf::from(tmp);
    fs::write(&tmp_path, content)?;
    fs::rename(&tmp_path, path)?;
    Ok(())
}
