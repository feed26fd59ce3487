//! Single-file binary checkpoint of a toy field.
//!
//! Layout (little endian): magic `SFXF`, format version `u32`, JSON metadata length `u64`,
//! JSON metadata (field config and branch domains), parameter count `u64`, then the
//! parameters as `f64`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::toy::{Branch, ToyFieldConfig, ToyHashField};
use super::FieldError;
use crate::geometry::Aabb;

pub const MAGIC: &[u8; 4] = b"SFXF";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Meta {
    config: ToyFieldConfig,
    domains: Vec<Aabb>,
}

pub fn checkpoint_bytes(field: &ToyHashField) -> Vec<u8> {
    let meta = Meta {
        config: field.config,
        domains: field.branches.iter().map(|b| b.domain).collect(),
    };
    let json = serde_json::to_vec(&meta).expect("checkpoint metadata serializes");
    let mut out = Vec::with_capacity(24 + json.len() + 8 * field.params.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&(field.params.len() as u64).to_le_bytes());
    for v in &field.params {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn save_checkpoint(field: &ToyHashField, path: &Path) -> Result<(), FieldError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&checkpoint_bytes(field))?;
    Ok(())
}

fn bad(msg: impl Into<String>) -> FieldError {
    FieldError::Checkpoint(msg.into())
}

fn take<'a>(bytes: &mut &'a [u8], n: usize) -> Result<&'a [u8], FieldError> {
    if bytes.len() < n {
        return Err(bad("truncated checkpoint"));
    }
    let (head, rest) = bytes.split_at(n);
    *bytes = rest;
    Ok(head)
}

fn take_u64(bytes: &mut &[u8]) -> Result<u64, FieldError> {
    Ok(u64::from_le_bytes(take(bytes, 8)?.try_into().unwrap()))
}

pub fn parse_checkpoint(mut bytes: &[u8]) -> Result<ToyHashField, FieldError> {
    let b = &mut bytes;
    if take(b, 4)? != MAGIC {
        return Err(bad("not a field checkpoint"));
    }
    let version = u32::from_le_bytes(take(b, 4)?.try_into().unwrap());
    if version != VERSION {
        return Err(bad(format!("unsupported checkpoint version {version}")));
    }
    let meta_len = take_u64(b)? as usize;
    let meta: Meta = serde_json::from_slice(take(b, meta_len)?).map_err(|e| bad(e.to_string()))?;
    let n = take_u64(b)? as usize;
    if b.len() != n.checked_mul(8).ok_or_else(|| bad("bad parameter count"))? {
        return Err(bad("parameter block has the wrong size"));
    }
    let params = b.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let branches = meta
        .domains
        .into_iter()
        .map(Branch::new)
        .collect::<Result<Vec<_>, _>>()?;
    ToyHashField::from_parts(meta.config, branches, params)
}

pub fn load_checkpoint(path: &Path) -> Result<ToyHashField, FieldError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    parse_checkpoint(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets::FocusArea;
    use crate::geometry::Vec3;
    use crate::field::RadianceField;

    #[test]
    fn round_trip_is_exact() {
        let f = ToyHashField::new(
            ToyFieldConfig::default(),
            &Aabb::new([-1.0; 3], [1.0; 3]),
            &[FocusArea::new([0.1, 0.2, 0.3], 0.25)],
            11,
        )
        .unwrap();
        let bytes = checkpoint_bytes(&f);
        let g = parse_checkpoint(&bytes).unwrap();
        assert_eq!(f, g);
        let p = Vec3::new(0.1, 0.2, 0.25);
        assert_eq!(f.query(&p, &Vec3::z()), g.query(&p, &Vec3::z()));
        assert_eq!(checkpoint_bytes(&g), bytes);
    }

    #[test]
    fn rejects_corruption() {
        let f = ToyHashField::new(ToyFieldConfig::default(), &Aabb::new([-1.0; 3], [1.0; 3]), &[], 1).unwrap();
        let mut bytes = checkpoint_bytes(&f);
        assert!(parse_checkpoint(&bytes[..bytes.len() - 1]).is_err());
        bytes[4] = 9;
        assert!(matches!(parse_checkpoint(&bytes), Err(FieldError::Checkpoint(_))));
        assert!(parse_checkpoint(b"nope").is_err());
    }
}
