//! Line-oriented syndrome files: `shot_id;v1,v2,...;L`.
//!
//! Vertex ids are written as bare integers; a leading `v` is accepted on read.
//! `L` is the true logical flip, `0` or `1`. Blank lines and `#` comments are
//! skipped.

use std::io::{BufRead, Write};

use super::DefectSet;
use crate::error::{Error, Result};

pub fn format_line(set: &DefectSet) -> String {
    let ids: Vec<String> = set.defects.iter().map(u32::to_string).collect();
    format!("{};{};{}", set.shot_id, ids.join(","), u8::from(set.true_logical_flip))
}

pub fn parse_line(line: &str, line_no: usize) -> Result<DefectSet> {
    let err = |msg: String| Error::Parse { line: line_no, msg };
    let parts: Vec<&str> = line.trim().split(';').collect();
    let [shot, ids, flip] = parts[..] else {
        return Err(err(format!("expected 3 ';'-separated fields, got {}", parts.len())));
    };
    let shot_id = shot
        .trim()
        .parse()
        .map_err(|e| err(format!("bad shot id {shot:?}: {e}")))?;
    let mut defects = Vec::new();
    for tok in ids.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let digits = tok.strip_prefix('v').unwrap_or(tok);
        defects.push(digits.parse().map_err(|e| err(format!("bad vertex {tok:?}: {e}")))?);
    }
    let true_logical_flip = match flip.trim() {
        "0" => false,
        "1" => true,
        other => return Err(err(format!("logical flag must be 0 or 1, got {other:?}"))),
    };
    let set = DefectSet::new(shot_id, defects, true_logical_flip);
    if set.defects.windows(2).any(|w| w[0] >= w[1]) {
        return Err(err("vertex ids must be strictly increasing".into()));
    }
    Ok(set)
}

pub fn write_all<'a, W: Write>(mut out: W, sets: impl IntoIterator<Item = &'a DefectSet>) -> std::io::Result<()> {
    for set in sets {
        writeln!(out, "{}", format_line(set))?;
    }
    out.flush()
}

/// Parse every shot of a syndrome file.
pub fn read_all<R: BufRead>(input: R) -> Result<Vec<DefectSet>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<syndrome input>", e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push(parse_line(trimmed, i + 1)?);
    }
    Ok(out)
}
