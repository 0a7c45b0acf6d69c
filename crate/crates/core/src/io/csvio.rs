//! CSV point clouds (`x_mm,y_mm,z_mm`) and the stitch manifest: one row per
//! contact holding the frame path, reference-frame path, twelve rigid
//! transform numbers (row-major rotation then translation) and the contact
//! depth in millimetres.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::cloud::{Point3, PointCloud, RigidTransform};
use crate::error::{Error, Result};

pub fn write_cloud_csv(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "x_mm,y_mm,z_mm")?;
    for p in cloud.points() {
        writeln!(out, "{},{},{}", p.x, p.y, p.z)?;
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_cloud_csv(path: &Path) -> Result<PointCloud> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next().map(str::trim) {
        Some("x_mm,y_mm,z_mm") => {}
        other => {
            return Err(Error::Format(format!(
                "{}: expected header x_mm,y_mm,z_mm, got {other:?}",
                path.display()
            )))
        }
    }
    let mut points = Vec::new();
    for (ln, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse()
                    .map_err(|_| Error::Format(format!("row {}: bad float {f:?}", ln + 2)))
            })
            .collect::<Result<_>>()?;
        if vals.len() != 3 {
            return Err(Error::Format(format!(
                "row {}: expected 3 columns, got {}",
                ln + 2,
                vals.len()
            )));
        }
        points.push(Point3::new(vals[0], vals[1], vals[2]));
    }
    Ok(PointCloud::new(points, "file"))
}

/// One contact of a multi-touch recording.
#[derive(Debug, Clone)]
pub struct ManifestRow {
    pub frame: PathBuf,
    pub rest: PathBuf,
    pub pose: RigidTransform,
    pub depth_mm: f64,
}

const MANIFEST_HEADER: &str =
    "frame,g0,r00,r01,r02,r10,r11,r12,r20,r21,r22,tx,ty,tz,depth_mm";

pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "{MANIFEST_HEADER}")?;
    for row in rows {
        let r = &row.pose.rotation;
        let t = &row.pose.translation;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.frame.display(),
            row.rest.display(),
            r[0][0],
            r[0][1],
            r[0][2],
            r[1][0],
            r[1][1],
            r[1][2],
            r[2][0],
            r[2][1],
            r[2][2],
            t[0],
            t[1],
            t[2],
            row.depth_mm
        )?;
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next().map(str::trim) {
        Some(h) if h == MANIFEST_HEADER => {}
        other => {
            return Err(Error::Format(format!(
                "{}: bad manifest header {other:?}",
                path.display()
            )))
        }
    }
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 15 {
            return Err(Error::Format(format!(
                "row {}: expected 15 columns, got {}",
                ln + 2,
                fields.len()
            )));
        }
        let nums: Vec<f64> = fields[2..]
            .iter()
            .map(|f| {
                f.parse()
                    .map_err(|_| Error::Format(format!("row {}: bad number {f:?}", ln + 2)))
            })
            .collect::<Result<_>>()?;
        let pose = RigidTransform {
            rotation: [
                [nums[0], nums[1], nums[2]],
                [nums[3], nums[4], nums[5]],
                [nums[6], nums[7], nums[8]],
            ],
            translation: [nums[9], nums[10], nums[11]],
        };
        pose.validate()?;
        rows.push(ManifestRow {
            frame: PathBuf::from(fields[0]),
            rest: PathBuf::from(fields[1]),
            pose,
            depth_mm: nums[12],
        });
    }
    Ok(rows)
}
