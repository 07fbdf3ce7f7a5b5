//! `manifest.jsonl`: one JSON video record per line, in video-index order.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use simaug_core::genmodel::VideoRecord;

use super::{line_err, FormatError};

pub fn write_manifest(path: &Path, records: &[VideoRecord]) -> Result<(), FormatError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| FormatError::Invalid(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

/// Records in file order; video ids must be unique.
pub fn read_manifest(path: &Path) -> Result<Vec<VideoRecord>, FormatError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut records: Vec<VideoRecord> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: VideoRecord =
            serde_json::from_str(&line).map_err(|e| line_err(i + 1, e.to_string()))?;
        if !seen.insert(r.video_id.clone()) {
            return Err(line_err(
                i + 1,
                format!("duplicate video id {}", r.video_id),
            ));
        }
        records.push(r);
    }
    Ok(records)
}
