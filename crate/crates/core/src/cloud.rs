//! Point clouds: contact-cluster extraction, reconstruction-quality metrics
//! and multi-contact fusion.

use crate::error::{Error, Result};
use crate::kdtree::KdTree;

/// A point in millimetres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dist(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    fn coords(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// List of 3D points tagged with the coordinate frame they live in.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
    frame: String,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>, frame: impl Into<String>) -> Self {
        Self {
            points,
            frame: frame.into(),
        }
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn frame(&self) -> &str {
        &self.frame
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Option<Point3> {
        if self.points.is_empty() {
            return None;
        }
        let n = self.points.len() as f64;
        let (mut x, mut y, mut z) = (0.0, 0.0, 0.0);
        for p in &self.points {
            x += p.x;
            y += p.y;
            z += p.z;
        }
        Some(Point3::new(x / n, y / n, z / n))
    }
}

/// Rotation + translation placing one contact's cloud into the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: [0.0, 0.0, 0.0],
        }
    }

    pub fn translation_only(t: [f64; 3]) -> Self {
        Self {
            rotation: RigidTransform::identity().rotation,
            translation: t,
        }
    }

    /// Rotation about the z axis by `yaw` radians plus a translation.
    pub fn yaw_translation(yaw: f64, t: [f64; 3]) -> Self {
        let (s, c) = yaw.sin_cos();
        Self {
            rotation: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
            translation: t,
        }
    }

    /// Orthonormality (R^T R = I within 1e-9) and determinant +1.
    pub fn validate(&self) -> Result<()> {
        let r = &self.rotation;
        for i in 0..3 {
            for j in 0..3 {
                let mut dot = 0.0;
                for row in r {
                    dot += row[i] * row[j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                if (dot - expect).abs() > 1e-9 {
                    return Err(Error::InvalidTransform(format!(
                        "R^T R [{i}][{j}] = {dot}, expected {expect}"
                    )));
                }
            }
        }
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        if (det - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidTransform(format!("determinant {det} != +1")));
        }
        Ok(())
    }

    pub fn apply(&self, p: &Point3) -> Point3 {
        let r = &self.rotation;
        let t = &self.translation;
        Point3::new(
            r[0][0] * p.x + r[0][1] * p.y + r[0][2] * p.z + t[0],
            r[1][0] * p.x + r[1][1] * p.y + r[1][2] * p.z + t[1],
            r[2][0] * p.x + r[2][1] * p.y + r[2][2] * p.z + t[2],
        )
    }

    pub fn inverse(&self) -> Self {
        let r = &self.rotation;
        let t = &self.translation;
        let rt = [
            [r[0][0], r[1][0], r[2][0]],
            [r[0][1], r[1][1], r[2][1]],
            [r[0][2], r[1][2], r[2][2]],
        ];
        let ti = [
            -(rt[0][0] * t[0] + rt[0][1] * t[1] + rt[0][2] * t[2]),
            -(rt[1][0] * t[0] + rt[1][1] * t[1] + rt[1][2] * t[2]),
            -(rt[2][0] * t[0] + rt[2][1] * t[1] + rt[2][2] * t[2]),
        ];
        Self {
            rotation: rt,
            translation: ti,
        }
    }
}

/// Reconstruction quality summary against a ground-truth cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub me_mm: f64,
    pub chamfer_mm: f64,
    pub sd_percent: f64,
    pub h_max_mm: f64,
}

/// Extract the contact region: 1-D k-means (k = 2) on per-point depth with
/// deterministic min/max seeding; the cluster with the larger mean depth is
/// returned.
pub fn extract_contact_cluster(cloud: &PointCloud, depths: &[f64]) -> Result<PointCloud> {
    if depths.len() != cloud.len() {
        return Err(Error::shape(
            format!("{} depths", cloud.len()),
            format!("{}", depths.len()),
        ));
    }
    let indices = extract_contact_indices(depths)?;
    let points = indices.iter().map(|&i| cloud.points[i]).collect();
    Ok(PointCloud::new(points, cloud.frame.clone()))
}

/// Indices of the deeper k-means cluster, ascending.
pub fn extract_contact_indices(depths: &[f64]) -> Result<Vec<usize>> {
    if depths.is_empty() {
        return Err(Error::EmptyInput("cluster extraction needs points".into()));
    }
    if depths.len() == 1 {
        return Ok(vec![0]);
    }
    let lo = depths.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = depths.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Err(Error::DegenerateCluster);
    }

    // Lloyd iterations from min/max seeds until the assignment is stable
    let mut c0 = lo;
    let mut c1 = hi;
    let mut assign = vec![false; depths.len()]; // true = deeper cluster
    for _ in 0..100 {
        let mut changed = false;
        for (i, &d) in depths.iter().enumerate() {
            // distance tie goes to the shallow cluster
            let to_deep = (d - c1).abs() < (d - c0).abs();
            if assign[i] != to_deep {
                assign[i] = to_deep;
                changed = true;
            }
        }
        let (mut s0, mut n0, mut s1, mut n1) = (0.0, 0usize, 0.0, 0usize);
        for (i, &d) in depths.iter().enumerate() {
            if assign[i] {
                s1 += d;
                n1 += 1;
            } else {
                s0 += d;
                n0 += 1;
            }
        }
        if n0 > 0 {
            c0 = s0 / n0 as f64;
        }
        if n1 > 0 {
            c1 = s1 / n1 as f64;
        }
        if !changed {
            break;
        }
    }

    // one empty cluster is permitted; return the nonempty one
    let deeper: Vec<usize> = (0..depths.len()).filter(|&i| assign[i]).collect();
    if deeper.is_empty() {
        Ok((0..depths.len()).collect())
    } else {
        Ok(deeper)
    }
}

/// One-directional mean nearest-neighbor distance from `recon` to `truth`.
pub fn mean_error(recon: &PointCloud, truth: &PointCloud) -> Result<f64> {
    if recon.is_empty() || truth.is_empty() {
        return Err(Error::EmptyInput("mean error needs non-empty clouds".into()));
    }
    Ok(directed_mean_distance(recon, truth))
}

/// Symmetric sum of the two directed mean nearest-neighbor distances.
pub fn chamfer_distance(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput(
            "chamfer distance needs non-empty clouds".into(),
        ));
    }
    Ok(directed_mean_distance(a, b) + directed_mean_distance(b, a))
}

fn directed_mean_distance(from: &PointCloud, to: &PointCloud) -> f64 {
    let tree = KdTree::build(to.points.iter().map(Point3::coords).collect());
    let mut sum = 0.0;
    for p in &from.points {
        let (_, d2) = tree.nearest(&p.coords()).expect("non-empty target");
        sum += d2.sqrt();
    }
    sum / from.points.len() as f64
}

/// Similarity degree in percent: 100 * (1 - d_cd / h_max). Negative when the
/// Chamfer distance exceeds the maximum contact depth.
pub fn similarity_degree(d_cd: f64, h_max: f64) -> Result<f64> {
    if !h_max.is_finite() || h_max <= 0.0 {
        return Err(Error::Domain(format!("h_max {h_max} must be > 0")));
    }
    Ok(100.0 * (1.0 - d_cd / h_max))
}

/// Full evaluation of a reconstruction against ground truth.
pub fn evaluate(recon: &PointCloud, truth: &PointCloud, h_max: f64) -> Result<EvalReport> {
    let me = mean_error(recon, truth)?;
    let cd = chamfer_distance(recon, truth)?;
    let sd = similarity_degree(cd, h_max)?;
    Ok(EvalReport {
        me_mm: me,
        chamfer_mm: cd,
        sd_percent: sd,
        h_max_mm: h_max,
    })
}

/// Map each cloud by its rigid transform into the world frame and
/// concatenate in input order.
pub fn stitch(clouds: &[PointCloud], poses: &[RigidTransform]) -> Result<PointCloud> {
    if clouds.len() != poses.len() {
        return Err(Error::shape(
            format!("{} poses", clouds.len()),
            format!("{}", poses.len()),
        ));
    }
    for pose in poses {
        pose.validate()?;
    }
    let mut points = Vec::with_capacity(clouds.iter().map(PointCloud::len).sum());
    for (cloud, pose) in clouds.iter().zip(poses) {
        points.extend(cloud.points.iter().map(|p| pose.apply(p)));
    }
    Ok(PointCloud::new(points, "world"))
}

/// Replace each point's z by the mean z of all points (itself included)
/// within `radius` in the x-y plane. The spatial index changes nothing about
/// the result: neighbor sums run in ascending point order.
pub fn smooth_z(cloud: &PointCloud, radius: f64) -> Result<PointCloud> {
    if !radius.is_finite() || radius <= 0.0 {
        return Err(Error::Domain(format!("radius {radius} must be > 0")));
    }
    let xy: Vec<[f64; 2]> = cloud.points.iter().map(|p| [p.x, p.y]).collect();
    let tree = KdTree::build(xy.clone());
    let points = cloud
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let neighbors = tree.within_radius(&xy[i], radius);
            let sum: f64 = neighbors.iter().map(|&j| cloud.points[j].z).sum();
            Point3::new(p.x, p.y, sum / neighbors.len() as f64)
        })
        .collect();
    Ok(PointCloud::new(points, cloud.frame.clone()))
}
