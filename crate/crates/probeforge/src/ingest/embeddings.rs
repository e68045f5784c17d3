//! Binary embedding matrices.
//!
//! Layout (all little-endian):
//!
//! ```text
//! offset 0   4 bytes   magic "EMB1"
//! offset 4   u32       dim
//! offset 8   u64       count
//! offset 16  f32 x count*dim, row-major
//! ```
//!
//! The companion index is UTF-8 text with one chip id per line; line `i`
//! names row `i`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::domain::{EmbeddingSet, FmDescriptor};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"EMB1";
const HEADER_LEN: usize = 16;

pub fn load_embeddings(data_path: &Path, index_path: &Path, fm: &FmDescriptor) -> Result<EmbeddingSet> {
    let mut bytes = Vec::new();
    File::open(data_path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| Error::Read {
            path: data_path.to_path_buf(),
            source,
        })?;
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::Format(format!("{}: magic mismatch", data_path.display())));
    }
    let dim = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let count = usize::try_from(count).map_err(|_| Error::Format("row count overflows".into()))?;

    let chip_ids = read_index(index_path)?;
    if chip_ids.len() != count {
        return Err(Error::Format(format!(
            "index/header mismatch: header has {count} rows, index has {} ids",
            chip_ids.len()
        )));
    }
    if dim != fm.dim {
        return Err(Error::DimensionMismatch {
            expected: fm.dim,
            found: dim,
        });
    }
    let payload = &bytes[HEADER_LEN..];
    let expected = count
        .checked_mul(dim)
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| Error::Format("matrix size overflows".into()))?;
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "{}: payload is {} bytes, header implies {expected}",
            data_path.display(),
            payload.len()
        )));
    }
    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        let row = i / dim.max(1);
        return Err(Error::NonFinite(format!("embedding row {row} ({})", chip_ids[row])));
    }
    EmbeddingSet::new(fm.clone(), chip_ids, data)
}

fn read_index(path: &Path) -> Result<Vec<String>> {
    let read_err = |source| Error::Read {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(read_err)?);
    reader
        .lines()
        .map(|l| l.map_err(read_err))
        .collect()
}

pub fn save_embeddings(emb: &EmbeddingSet, data_path: &Path, index_path: &Path) -> Result<()> {
    let write = |path: &Path, body: &mut dyn FnMut(&mut BufWriter<File>) -> std::io::Result<()>| {
        let to_err = |source| Error::Write {
            path: path.to_path_buf(),
            source,
        };
        let mut w = BufWriter::new(File::create(path).map_err(to_err)?);
        body(&mut w).and_then(|_| w.flush()).map_err(to_err)
    };
    let dim = u32::try_from(emb.dim()).map_err(|_| Error::Format("dimension exceeds u32".into()))?;
    write(data_path, &mut |w| {
        w.write_all(MAGIC)?;
        w.write_all(&dim.to_le_bytes())?;
        w.write_all(&(emb.rows() as u64).to_le_bytes())?;
        for v in emb.data() {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    })?;
    write(index_path, &mut |w| {
        for id in emb.chip_ids() {
            writeln!(w, "{id}")?;
        }
        Ok(())
    })
}
