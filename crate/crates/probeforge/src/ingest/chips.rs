//! Newline-delimited JSON chip tables.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::domain::{Chip, ChipTable};
use crate::error::{Error, Result};

/// Reads one chip object per line. Blank lines are skipped and unknown keys
/// ignored; parse failures carry the 1-based line number.
pub fn load_chip_table(path: &Path) -> Result<ChipTable> {
    let read_err = |source| Error::Read {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(read_err)?);
    let mut chips = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(read_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let chip: Chip = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        chips.push(chip);
    }
    ChipTable::new(chips)
}

pub fn save_chip_table(table: &ChipTable, path: &Path) -> Result<()> {
    let write_err = |source| Error::Write {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(write_err)?);
    for chip in table.chips() {
        let line = serde_json::to_string(chip).expect("chip serializes");
        writeln!(w, "{line}").map_err(write_err)?;
    }
    w.flush().map_err(write_err)
}
