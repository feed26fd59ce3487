//! Colored point clouds and their binary little-endian PLY encoding.
//!
//! Positions are stored as 32-bit floats and colors as `round(c * 255)`, so a
//! round trip is exact for positions already representable in `f32`.

use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use super::AssetError;
use crate::assets::image::quantize;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CloudPoint {
    pub position: [f64; 3],
    pub color: [f64; 3],
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<CloudPoint>,
}

impl PointCloud {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_positions(positions: impl IntoIterator<Item = [f64; 3]>) -> Self {
        Self {
            points: positions
                .into_iter()
                .map(|position| CloudPoint {
                    position,
                    color: [0.0; 3],
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, position: [f64; 3], color: [f64; 3]) {
        self.points.push(CloudPoint { position, color });
    }

    pub fn positions(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        self.points.iter().map(|p| p.position)
    }
}

const HEADER_PROPERTIES: &str = "property float x\nproperty float y\nproperty float z\n\
property uchar red\nproperty uchar green\nproperty uchar blue\n";

pub fn ply_bytes(cloud: &PointCloud) -> Vec<u8> {
    let mut out = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\n{HEADER_PROPERTIES}end_header\n",
        cloud.len()
    )
    .into_bytes();
    out.reserve(cloud.len() * 15);
    for p in &cloud.points {
        for v in p.position {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out.extend(p.color.iter().map(|&c| quantize(c)));
    }
    out
}

pub fn write_ply(cloud: &PointCloud, path: &Path) -> Result<(), AssetError> {
    fs::write(path, ply_bytes(cloud))?;
    Ok(())
}

/// Reads the vertex layout written by [`write_ply`].
pub fn read_ply(path: &Path) -> Result<PointCloud, AssetError> {
    let mut reader = BufReader::new(fs::File::open(path)?);
    let mut line = String::new();
    let mut header = Vec::new();
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Err(AssetError::Parse("PLY header not terminated".into()));
        }
        let l = line.trim_end().to_string();
        if l == "end_header" {
            break;
        }
        header.push(l);
    }
    if header.first().map(String::as_str) != Some("ply") {
        return Err(AssetError::Parse("missing ply magic".into()));
    }
    if !header.iter().any(|l| l == "format binary_little_endian 1.0") {
        return Err(AssetError::Parse("only binary_little_endian 1.0 is supported".into()));
    }
    let count: usize = header
        .iter()
        .find_map(|l| l.strip_prefix("element vertex "))
        .ok_or_else(|| AssetError::Parse("missing vertex element".into()))?
        .trim()
        .parse()
        .map_err(|e| AssetError::Parse(format!("vertex count: {e}")))?;
    let props: Vec<&str> = header
        .iter()
        .filter(|l| l.starts_with("property "))
        .map(String::as_str)
        .collect();
    let expected: Vec<&str> = HEADER_PROPERTIES.lines().collect();
    if props != expected {
        return Err(AssetError::Parse(format!("unsupported vertex properties {props:?}")));
    }
    let mut body = Vec::with_capacity(count * 15);
    reader.read_to_end(&mut body)?;
    if body.len() != count * 15 {
        return Err(AssetError::Parse(format!(
            "expected {} body bytes, found {}",
            count * 15,
            body.len()
        )));
    }
    let points = body
        .chunks_exact(15)
        .map(|rec| {
            let f = |k: usize| f32::from_le_bytes(rec[4 * k..4 * k + 4].try_into().unwrap()) as f64;
            CloudPoint {
                position: [f(0), f(1), f(2)],
                color: [
                    rec[12] as f64 / 255.0,
                    rec[13] as f64 / 255.0,
                    rec[14] as f64 / 255.0,
                ],
            }
        })
        .collect();
    Ok(PointCloud { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_cloud_has_zero_vertices() {
        let bytes = ply_bytes(&PointCloud::new());
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.contains("element vertex 0\n"));
        assert!(text.ends_with("end_header\n"));
    }

    #[test]
    fn single_red_point_quantizes_endpoints() {
        let mut c = PointCloud::new();
        c.push([1.0, 2.0, 3.0], [1.0, 0.0, 0.0]);
        let bytes = ply_bytes(&c);
        let body = &bytes[bytes.len() - 15..];
        assert_eq!(f32::from_le_bytes(body[0..4].try_into().unwrap()), 1.0);
        assert_eq!(f32::from_le_bytes(body[8..12].try_into().unwrap()), 3.0);
        assert_eq!(&body[12..], &[255, 0, 0]);
        assert!(String::from_utf8_lossy(&bytes).contains("element vertex 1\n"));
    }

    #[test]
    fn ten_thousand_random_points_round_trip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut c = PointCloud::new();
        for _ in 0..10_000 {
            let pos = [(); 3].map(|_| rng.random_range(-100.0f32..100.0) as f64);
            let col = [(); 3].map(|_| rng.random::<f64>());
            c.push(pos, col);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ply");
        write_ply(&c, &path).unwrap();
        let back = read_ply(&path).unwrap();
        assert_eq!(back.len(), c.len());
        for (a, b) in c.points.iter().zip(&back.points) {
            for k in 0..3 {
                assert_eq!(a.position[k].to_bits(), b.position[k].to_bits());
                assert!((a.color[k] - b.color[k]).abs() <= 0.5 / 255.0 + 1e-12);
            }
        }
    }

    #[test]
    fn rejects_foreign_layouts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.ply");
        fs::write(&path, "ply\nformat ascii 1.0\nelement vertex 0\nend_header\n").unwrap();
        assert!(matches!(read_ply(&path), Err(AssetError::Parse(_))));
        fs::write(&path, "ply\nformat binary_little_endian 1.0\nelement vertex 2\n").unwrap();
        assert!(read_ply(&path).is_err());
    }

    proptest! {
        #[test]
        fn write_read_preserves_f32_positions(
            pts in proptest::collection::vec((any::<f32>(), any::<f32>(), any::<f32>(), 0.0f64..=1.0), 0..50)
        ) {
            let mut c = PointCloud::new();
            for (x, y, z, g) in &pts {
                prop_assume!(x.is_finite() && y.is_finite() && z.is_finite());
                c.push([*x as f64, *y as f64, *z as f64], [*g, 1.0 - *g, 0.5]);
            }
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("p.ply");
            write_ply(&c, &path).unwrap();
            let back = read_ply(&path).unwrap();
            prop_assert_eq!(back.len(), c.len());
            for (a, b) in c.points.iter().zip(&back.points) {
                prop_assert_eq!(a.position, b.position);
                for k in 0..3 {
                    prop_assert!((a.color[k] - b.color[k]).abs() <= 1.0 / 255.0);
                }
            }
        }
    }
}
