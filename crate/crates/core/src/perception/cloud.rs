//! Colored point clouds and the ASCII PCD subset.
//!
//! `rgb` is stored the usual PCD way: the 24-bit integer `r<<16 | g<<8 | b`
//! reinterpreted as the bits of an `f32`. Integer-typed (`U`/`I`) rgb fields
//! are accepted on read.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub position: Vector3<f64>,
    pub rgb: [u8; 3],
}

impl Point {
    pub fn new(position: Vector3<f64>, rgb: [u8; 3]) -> Self {
        Self { position, rgb }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point>,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> Vec<Vector3<f64>> {
        self.points.iter().map(|p| p.position).collect()
    }

    pub fn validate(&self) -> Result<()> {
        match self.points.iter().position(|p| p.position.iter().any(|v| !v.is_finite())) {
            Some(i) => Err(Error::invalid(format!("point {i} has non-finite coordinates"))),
            None => Ok(()),
        }
    }

    pub fn subset(&self, indices: &[usize]) -> PointCloud {
        PointCloud::new(indices.iter().map(|&i| self.points[i]).collect())
    }
}

pub fn pack_rgb(rgb: [u8; 3]) -> f32 {
    f32::from_bits(((rgb[0] as u32) << 16) | ((rgb[1] as u32) << 8) | rgb[2] as u32)
}

pub fn unpack_rgb_bits(bits: u32) -> [u8; 3] {
    [(bits >> 16) as u8, (bits >> 8) as u8, bits as u8]
}

#[derive(Clone, Debug)]
struct Field {
    name: String,
    size: usize,
    kind: char,
    count: usize,
}

/// Parses an ASCII PCD document.
pub fn parse_pcd(text: &str) -> Result<PointCloud> {
    let mut fields: Vec<Field> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut sizes: Vec<usize> = Vec::new();
    let mut kinds: Vec<char> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut declared_points: Option<usize> = None;
    let mut width: Option<usize> = None;
    let mut height: Option<usize> = None;
    let mut lines = text.lines().enumerate();
    let mut data_line = None;
    for (i, raw) in lines.by_ref() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or_default().to_ascii_uppercase();
        let rest: Vec<&str> = parts.collect();
        let parse_usize = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(line_no, format!("`{s}` is not a non-negative integer")))
        };
        match key.as_str() {
            "VERSION" | "VIEWPOINT" => {}
            "FIELDS" => names = rest.iter().map(|s| s.to_string()).collect(),
            "SIZE" => sizes = rest.iter().map(|s| parse_usize(s)).collect::<Result<_>>()?,
            "TYPE" => {
                kinds = rest
                    .iter()
                    .map(|s| match *s {
                        "F" | "U" | "I" => Ok(s.chars().next().unwrap_or('F')),
                        other => Err(Error::parse(line_no, format!("unknown field type `{other}`"))),
                    })
                    .collect::<Result<_>>()?
            }
            "COUNT" => counts = rest.iter().map(|s| parse_usize(s)).collect::<Result<_>>()?,
            "WIDTH" => width = Some(parse_usize(rest.first().copied().unwrap_or(""))?),
            "HEIGHT" => height = Some(parse_usize(rest.first().copied().unwrap_or(""))?),
            "POINTS" => declared_points = Some(parse_usize(rest.first().copied().unwrap_or(""))?),
            "DATA" => {
                if rest.first().map(|s| s.to_ascii_lowercase()) != Some("ascii".into()) {
                    return Err(Error::parse(line_no, "only DATA ascii is supported"));
                }
                data_line = Some(line_no);
                break;
            }
            other => return Err(Error::parse(line_no, format!("unknown header keyword `{other}`"))),
        }
    }
    let data_line = data_line.ok_or_else(|| Error::parse(0, "missing DATA line"))?;
    if counts.is_empty() {
        counts = vec![1; names.len()];
    }
    if sizes.len() != names.len() || kinds.len() != names.len() || counts.len() != names.len() {
        return Err(Error::parse(data_line, "FIELDS, SIZE, TYPE and COUNT lengths differ"));
    }
    for (i, name) in names.iter().enumerate() {
        fields.push(Field {
            name: name.clone(),
            size: sizes[i],
            kind: kinds[i],
            count: counts[i],
        });
    }
    let locate = |name: &str| {
        let mut col = 0;
        for f in &fields {
            if f.name == name {
                return Some((col, f.clone()));
            }
            col += f.count;
        }
        None
    };
    let mut xyz = Vec::new();
    for axis in ["x", "y", "z"] {
        let (col, f) = locate(axis).ok_or_else(|| Error::parse(data_line, format!("FIELDS lacks `{axis}`")))?;
        if f.kind != 'F' {
            return Err(Error::parse(data_line, format!("field `{axis}` must be floating point")));
        }
        xyz.push(col);
    }
    let rgb = locate("rgb").or_else(|| locate("rgba"));
    let columns: usize = fields.iter().map(|f| f.count).sum();
    let expected = declared_points.or(match (width, height) {
        (Some(w), Some(h)) => Some(w * h),
        _ => None,
    });
    let mut points = Vec::with_capacity(expected.unwrap_or(0));
    for (i, raw) in lines {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let vals: Vec<&str> = line.split_whitespace().collect();
        if vals.len() != columns {
            return Err(Error::parse(
                line_no,
                format!("expected {columns} values, found {}", vals.len()),
            ));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::parse(line_no, format!("`{s}` is not a number")))
        };
        let position = Vector3::new(num(vals[xyz[0]])?, num(vals[xyz[1]])?, num(vals[xyz[2]])?);
        if position.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(line_no, "non-finite coordinate"));
        }
        let color = match &rgb {
            None => [255, 255, 255],
            Some((col, f)) => {
                let s = vals[*col];
                let bits = match f.kind {
                    'F' if f.size == 4 => s
                        .parse::<f32>()
                        .map_err(|_| Error::parse(line_no, format!("`{s}` is not a packed rgb float")))?
                        .to_bits(),
                    'F' => (s
                        .parse::<f64>()
                        .map_err(|_| Error::parse(line_no, format!("`{s}` is not a packed rgb float")))?
                        as f32)
                        .to_bits(),
                    _ => s
                        .parse::<i64>()
                        .map_err(|_| Error::parse(line_no, format!("`{s}` is not a packed rgb integer")))?
                        as u32,
                };
                unpack_rgb_bits(bits)
            }
        };
        points.push(Point { position, rgb: color });
    }
    if let Some(n) = expected {
        if n != points.len() {
            return Err(Error::parse(
                data_line,
                format!("header declares {n} points, data has {}", points.len()),
            ));
        }
    }
    Ok(PointCloud { points })
}

/// Writes `x y z` as 8-byte floats (shortest round-trip text) and packed `rgb`.
pub fn format_pcd(cloud: &PointCloud) -> String {
    let n = cloud.len();
    let mut out = String::with_capacity(64 * n + 256);
    out.push_str("# .PCD v0.7 - Point Cloud Data file format\n");
    out.push_str("VERSION .7\nFIELDS x y z rgb\nSIZE 8 8 8 4\nTYPE F F F F\nCOUNT 1 1 1 1\n");
    let _ = writeln!(out, "WIDTH {n}\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS {n}\nDATA ascii");
    for p in &cloud.points {
        let _ = writeln!(
            out,
            "{} {} {} {:e}",
            p.position.x,
            p.position.y,
            p.position.z,
            pack_rgb(p.rgb)
        );
    }
    out
}

pub fn load_pcd(path: impl AsRef<Path>) -> Result<PointCloud> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
    parse_pcd(&text)
}

pub fn save_pcd(path: impl AsRef<Path>, cloud: &PointCloud) -> Result<()> {
    crate::io::write_text(path, &format_pcd(cloud))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_round_trip() {
        let cloud = PointCloud::new(vec![Point::new(Vector3::new(0.1, -0.2, 1.0 / 3.0), [0, 0, 1])]);
        assert_eq!(parse_pcd(&format_pcd(&cloud)).unwrap(), cloud);
    }

    #[test]
    fn missing_z_is_parse_error() {
        let text = "VERSION .7\nFIELDS x y rgb\nSIZE 4 4 4\nTYPE F F F\nCOUNT 1 1 1\nWIDTH 1\nHEIGHT 1\nPOINTS 1\nDATA ascii\n0 0 0\n";
        assert!(matches!(parse_pcd(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn bad_row_reports_line() {
        let text = "VERSION .7\nFIELDS x y z\nSIZE 4 4 4\nTYPE F F F\nCOUNT 1 1 1\nWIDTH 2\nHEIGHT 1\nPOINTS 2\nDATA ascii\n0 0 0\n0 x 0\n";
        assert!(matches!(parse_pcd(text), Err(Error::Parse { line: 11, .. })));
    }

    #[test]
    fn integer_rgb_accepted() {
        let text = "VERSION .7\nFIELDS x y z rgb\nSIZE 4 4 4 4\nTYPE F F F U\nCOUNT 1 1 1 1\nWIDTH 1\nHEIGHT 1\nPOINTS 1\nDATA ascii\n1 2 3 16711935\n";
        assert_eq!(parse_pcd(text).unwrap().points[0].rgb, [255, 0, 255]);
    }

    #[test]
    fn packed_rgb_matches_convention() {
        // (255, 0, 0) packs to 0x00ff0000
        assert_eq!(pack_rgb([255, 0, 0]).to_bits(), 0x00ff_0000);
        assert_eq!(unpack_rgb_bits(0x0012_3456), [0x12, 0x34, 0x56]);
    }
}
