//! ASCII PLY point clouds: `element vertex` with float x, y, z properties.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::cloud::{Point3, PointCloud};
use crate::error::{Error, Result};

pub fn write_ply(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "ply")?;
    writeln!(out, "format ascii 1.0")?;
    writeln!(out, "element vertex {}", cloud.len())?;
    writeln!(out, "property float x")?;
    writeln!(out, "property float y")?;
    writeln!(out, "property float z")?;
    writeln!(out, "end_header")?;
    for p in cloud.points() {
        writeln!(out, "{} {} {}", p.x, p.y, p.z)?;
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_ply(path: &Path) -> Result<PointCloud> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();

    if lines.next().map(str::trim) != Some("ply") {
        return Err(Error::Format(format!("{}: missing ply magic", path.display())));
    }

    let mut vertex_count: Option<usize> = None;
    let mut properties: Vec<String> = Vec::new();
    let mut in_vertex_element = false;
    for line in lines.by_ref() {
        let line = line.trim();
        if line == "end_header" {
            break;
        }
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("format") => {
                if parts.next() != Some("ascii") {
                    return Err(Error::Format("only ascii PLY is supported".into()));
                }
            }
            Some("comment") | Some("obj_info") => {}
            Some("element") => {
                let name = parts.next().unwrap_or("");
                in_vertex_element = name == "vertex";
                if in_vertex_element {
                    let count = parts
                        .next()
                        .and_then(|c| c.parse().ok())
                        .ok_or_else(|| Error::Format("bad vertex count".into()))?;
                    vertex_count = Some(count);
                }
            }
            Some("property") => {
                if in_vertex_element {
                    let _ty = parts.next();
                    if let Some(name) = parts.next() {
                        properties.push(name.to_string());
                    }
                }
            }
            Some(other) => {
                return Err(Error::Format(format!("unexpected header line {other:?}")));
            }
            None => {}
        }
    }

    let count = vertex_count.ok_or_else(|| Error::Format("no vertex element".into()))?;
    let ix = properties.iter().position(|p| p == "x");
    let iy = properties.iter().position(|p| p == "y");
    let iz = properties.iter().position(|p| p == "z");
    let (ix, iy, iz) = match (ix, iy, iz) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(Error::Format("vertex element lacks x/y/z properties".into())),
    };

    let mut points = Vec::with_capacity(count);
    for line in lines {
        if points.len() == count {
            break;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < properties.len() {
            return Err(Error::Format(format!(
                "vertex row has {} fields, header declares {}",
                fields.len(),
                properties.len()
            )));
        }
        let parse = |i: usize| -> Result<f64> {
            fields[i]
                .parse()
                .map_err(|_| Error::Format(format!("bad float {:?}", fields[i])))
        };
        points.push(Point3::new(parse(ix)?, parse(iy)?, parse(iz)?));
    }
    if points.len() != count {
        return Err(Error::Format(format!(
            "expected {count} vertices, file holds {}",
            points.len()
        )));
    }
    Ok(PointCloud::new(points, "file"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ply");
        let cloud = PointCloud::new(
            vec![
                Point3::new(0.1, -2.25, 19.312345678),
                Point3::new(1e-12, 0.0, 5.0),
            ],
            "sensor",
        );
        write_ply(&path, &cloud).unwrap();
        let back = read_ply(&path).unwrap();
        assert_eq!(back.points(), cloud.points());
    }

    #[test]
    fn reads_extra_properties_by_name() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("extra.ply");
        std::fs::write(
            &path,
            "ply\nformat ascii 1.0\ncomment from another tool\nelement vertex 1\n\
             property float nx\nproperty float x\nproperty float y\nproperty float z\n\
             end_header\n9.0 1.0 2.0 3.0\n",
        )
        .unwrap();
        let cloud = read_ply(&path).unwrap();
        assert_eq!(cloud.points()[0], Point3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn rejects_binary_and_truncated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ply");
        std::fs::write(&path, "ply\nformat binary_little_endian 1.0\nend_header\n").unwrap();
        assert!(read_ply(&path).is_err());
        std::fs::write(
            &path,
            "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 2 3\n",
        )
        .unwrap();
        assert!(read_ply(&path).is_err());
    }
}
