//! Versioned little-endian binary model format:
//!
//! ```text
//! magic "NCCM" | version u32 | kind u8 | dim u32 | count u64 | count × f64
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{CompositionModel, ModelKind};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"NCCM";
pub const FORMAT_VERSION: u32 = 1;

pub fn serialize_model<W: Write>(model: &CompositionModel, sink: W) -> Result<()> {
    let mut out = BufWriter::new(sink);
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&[model.kind().code()])?;
    out.write_all(&(model.dim() as u32).to_le_bytes())?;
    let flat = model.flat_params();
    out.write_all(&(flat.len() as u64).to_le_bytes())?;
    for v in flat {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|_| Error::ModelFormat("truncated model file".into()))?;
    Ok(buf)
}

/// Reads a model; with `expected` set, any other kind is a kind-mismatch error.
pub fn deserialize_model<R: Read>(source: R, expected: Option<ModelKind>) -> Result<CompositionModel> {
    let mut r = BufReader::new(source);
    if &read_array::<4, _>(&mut r)? != MAGIC {
        return Err(Error::ModelFormat("bad magic; not a model file".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let [code] = read_array::<1, _>(&mut r)?;
    let kind = ModelKind::from_code(code).ok_or_else(|| Error::ModelFormat(format!("unknown kind code {code}")))?;
    if let Some(want) = expected {
        if want != kind {
            return Err(Error::KindMismatch {
                expected: want.to_string(),
                found: kind.to_string(),
            });
        }
    }
    let dim = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let count = u64::from_le_bytes(read_array(&mut r)?) as usize;
    if dim == 0 || count != kind.param_count(dim) {
        return Err(Error::ModelFormat(format!(
            "{kind} model of dimension {dim} needs {} parameters, file has {count}",
            kind.param_count(dim)
        )));
    }
    let mut flat = Vec::with_capacity(count);
    for _ in 0..count {
        flat.push(f64::from_le_bytes(read_array(&mut r)?));
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::ModelFormat("trailing bytes after parameters".into()));
    }
    CompositionModel::from_flat(kind, dim, &flat)
}

pub fn write_model_file(model: &CompositionModel, path: &Path) -> Result<()> {
    serialize_model(model, File::create(path)?)
}

pub fn read_model_file(path: &Path, expected: Option<ModelKind>) -> Result<CompositionModel> {
    let file = File::open(path).map_err(|_| Error::MissingResource(path.to_path_buf()))?;
    deserialize_model(file, expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::init_model;

    #[test]
    fn kind_mismatch_on_read() {
        let m = init_model(ModelKind::Matrix, 3, 1).unwrap();
        let mut buf = Vec::new();
        serialize_model(&m, &mut buf).unwrap();
        assert_eq!(deserialize_model(&buf[..], None).unwrap(), m);
        assert!(matches!(
            deserialize_model(&buf[..], Some(ModelKind::FullAdd)),
            Err(Error::KindMismatch { .. })
        ));
    }

    #[test]
    fn rejects_corrupt_files() {
        let m = init_model(ModelKind::Add, 2, 1).unwrap();
        let mut buf = Vec::new();
        serialize_model(&m, &mut buf).unwrap();
        let mut bad_version = buf.clone();
        bad_version[4] = 9;
        assert!(matches!(deserialize_model(&bad_version[..], None), Err(Error::ModelFormat(_))));
        assert!(deserialize_model(&buf[..buf.len() - 1], None).is_err());
        let mut extra = buf.clone();
        extra.push(0);
        assert!(deserialize_model(&extra[..], None).is_err());
        assert!(deserialize_model(&b"XXXX"[..], None).is_err());
        // wrong parameter count for the declared kind
        let mut wrong = buf.clone();
        wrong[13] = 3;
        assert!(deserialize_model(&wrong[..], None).is_err());
    }
}
