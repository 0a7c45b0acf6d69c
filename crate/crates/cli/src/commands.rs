//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use tacshade_core::cloud::{self, PointCloud};
use tacshade_core::error::{Error, Result};
use tacshade_core::field::{CircularMask, GreyscaleField, RasterImage};
use tacshade_core::io;
use tacshade_core::pipeline::{self, Reconstruction};
use tacshade_core::sfs::SensorGeometry;
use tacshade_core::sim::{
    self, ContactPrimitive, FrameMeta, PinLattice, PrimitiveKind, RenderParams,
};
use tacshade_core::PipelineConfig;

use crate::{
    EvaluateArgs, GreyArgs, PrimitiveName, ReconstructArgs, SimulateArgs, SmoothOrder, StitchArgs,
};

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn read_cloud(path: &Path) -> Result<PointCloud> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("ply") => io::read_ply(path),
        Some("csv") => io::read_cloud_csv(path),
        other => Err(Error::Format(format!(
            "unsupported cloud extension {other:?} for {}",
            path.display()
        ))),
    }
}

fn run_reconstruction(
    frame_path: &Path,
    rest_path: &Path,
    cfg: &PipelineConfig,
) -> Result<(Reconstruction, u128)> {
    let frame = io::read_image(frame_path)?;
    let rest = io::read_image(rest_path)?;
    let start = Instant::now();
    let rec = pipeline::reconstruct(&frame, &rest, cfg)?;
    Ok((rec, start.elapsed().as_millis()))
}

pub fn reconstruct(args: ReconstructArgs) -> Result<()> {
    let mut cfg = args.config.resolve()?;
    if let Some(depth) = args.depth {
        cfg.alpha_from_depth = Some(depth);
    }
    ensure_dir(&args.out)?;
    let (rec, wall_ms) = run_reconstruction(&args.frame, &args.g0, &cfg)?;
    io::write_ply(&args.out.join("cloud.ply"), &rec.lifted.cloud)?;
    io::write_height_grid(&args.out.join("height.tshf"), &rec.height_mm)?;
    // contact region for single-object evaluation; skipped when nothing deformed
    if rec.max_depth_mm() > 0.0 {
        let contact = cloud::extract_contact_cluster(&rec.lifted.cloud, &rec.lifted.depths)?;
        io::write_ply(&args.out.join("contact.ply"), &contact)?;
    }
    println!(
        "max_depth_mm={:.4} points={} skipped={} wall_ms={}",
        rec.max_depth_mm(),
        rec.lifted.cloud.len(),
        rec.lifted.skipped,
        wall_ms
    );
    Ok(())
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let recon = read_cloud(&args.recon)?;
    let truth = read_cloud(&args.truth)?;
    let report = cloud::evaluate(&recon, &truth, args.h_max)?;
    println!("ME_mm    {:.4}", report.me_mm);
    println!("d_CD_mm  {:.4}", report.chamfer_mm);
    println!("SD_pct   {:.4}", report.sd_percent);
    println!("h_max_mm {:.4}", report.h_max_mm);
    if let Some(json_path) = args.json {
        let value = serde_json::json!({
            "me_mm": report.me_mm,
            "chamfer_mm": report.chamfer_mm,
            "sd_percent": report.sd_percent,
            "h_max_mm": report.h_max_mm,
        });
        fs::write(json_path, serde_json::to_string_pretty(&value).unwrap())?;
    }
    Ok(())
}

pub fn stitch(args: StitchArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let threads = args.config.thread_count();
    let rows = io::read_manifest(&args.manifest)?;
    if rows.is_empty() {
        return Err(Error::EmptyInput(format!(
            "manifest {} has no rows",
            args.manifest.display()
        )));
    }
    // resolve relative row paths against the manifest location
    let base = args
        .manifest
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let resolve = |p: &PathBuf| -> PathBuf {
        if p.is_absolute() {
            p.clone()
        } else {
            base.join(p)
        }
    };
    for (i, row) in rows.iter().enumerate() {
        for path in [resolve(&row.frame), resolve(&row.rest)] {
            if !path.exists() {
                return Err(Error::Io(std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("row {i}: missing file {}", path.display()),
                )));
            }
        }
    }
    ensure_dir(&args.out)?;

    // reconstruct rows (optionally in parallel), keep manifest order
    type RowResult = Result<(PointCloud, u128)>;
    let mut results: Vec<Option<RowResult>> = Vec::new();
    results.resize_with(rows.len(), || None);
    let worker = |row: &io::ManifestRow| -> Result<(PointCloud, u128)> {
        let mut row_cfg = cfg.clone();
        if row.depth_mm > 0.0 {
            row_cfg.alpha_from_depth = Some(row.depth_mm);
        }
        let (rec, wall_ms) = run_reconstruction(&resolve(&row.frame), &resolve(&row.rest), &row_cfg)?;
        let contact = cloud::extract_contact_cluster(&rec.lifted.cloud, &rec.lifted.depths)?;
        let contact = if args.smooth_order == SmoothOrder::Before {
            cloud::smooth_z(&contact, cfg.smooth_radius)?
        } else {
            contact
        };
        Ok((contact, wall_ms))
    };
    if threads <= 1 || rows.len() == 1 {
        for (i, row) in rows.iter().enumerate() {
            results[i] = Some(worker(row));
        }
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots: Vec<std::sync::Mutex<Option<RowResult>>> =
            (0..rows.len()).map(|_| std::sync::Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..threads.min(rows.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= rows.len() {
                        break;
                    }
                    *slots[i].lock().unwrap() = Some(worker(&rows[i]));
                });
            }
        });
        for (i, slot) in slots.into_iter().enumerate() {
            results[i] = slot.into_inner().unwrap();
        }
    }

    let mut clouds = Vec::with_capacity(rows.len());
    for (i, result) in results.into_iter().enumerate() {
        match result.expect("every row processed") {
            Ok((contact, wall_ms)) => {
                println!("row={} points={} wall_ms={}", i, contact.len(), wall_ms);
                clouds.push(contact);
            }
            Err(err) => {
                return Err(match err {
                    Error::Io(e) => Error::Io(std::io::Error::new(
                        e.kind(),
                        format!("row {i}: {e}"),
                    )),
                    other => Error::Format(format!("row {i}: {other}")),
                });
            }
        }
    }

    let poses: Vec<_> = rows.iter().map(|r| r.pose).collect();
    let fused = cloud::stitch(&clouds, &poses)?;
    let fused = if args.smooth_order == SmoothOrder::After {
        cloud::smooth_z(&fused, cfg.smooth_radius)?
    } else {
        fused
    };
    io::write_ply(&args.out.join("fused.ply"), &fused)?;
    println!("fused_points={}", fused.len());
    Ok(())
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let kind = match (args.kind, args.size.as_deref()) {
        (PrimitiveName::Sphere, None) => PrimitiveKind::Sphere { radius_mm: 8.0 },
        (PrimitiveName::Sphere, Some([r])) => PrimitiveKind::Sphere { radius_mm: *r },
        (PrimitiveName::Box, None) => PrimitiveKind::Box {
            len_x_mm: 10.0,
            len_y_mm: 6.0,
        },
        (PrimitiveName::Box, Some([lx, ly])) => PrimitiveKind::Box {
            len_x_mm: *lx,
            len_y_mm: *ly,
        },
        (PrimitiveName::Cylinder, None) => PrimitiveKind::Cylinder { radius_mm: 6.0 },
        (PrimitiveName::Cylinder, Some([r])) => PrimitiveKind::Cylinder { radius_mm: *r },
        (PrimitiveName::Crescent, None) => PrimitiveKind::Crescent {
            outer_radius_mm: 8.0,
            inner_radius_mm: 5.0,
            inner_offset_mm: 4.0,
        },
        (PrimitiveName::Crescent, Some([outer, inner, offset])) => PrimitiveKind::Crescent {
            outer_radius_mm: *outer,
            inner_radius_mm: *inner,
            inner_offset_mm: *offset,
        },
        (kind, Some(dims)) => {
            return Err(Error::Domain(format!(
                "--size takes {} value(s) for {kind:?}, got {}",
                match kind {
                    PrimitiveName::Sphere | PrimitiveName::Cylinder => "1",
                    PrimitiveName::Box => "2",
                    PrimitiveName::Crescent => "3",
                },
                dims.len()
            )))
        }
    };

    let (cx, cy, fr) = match args.field.as_deref() {
        Some([cx, cy, r]) => (*cx, *cy, *r),
        Some(_) => return Err(Error::Domain("--field takes CX,CY,R".into())),
        None => {
            let cx = (args.width - 1) as f64 / 2.0;
            let cy = (args.height - 1) as f64 / 2.0;
            (cx, cy, cx.min(cy) * 0.92)
        }
    };
    let field = CircularMask::new(cx, cy, fr)?;
    let lattice = PinLattice::new(args.pitch, args.pin_radius, field, true)?;
    let geom = SensorGeometry::new(args.radius_mm, field, 1.0, None)?;
    let primitive = ContactPrimitive {
        kind,
        pose_x_mm: args.pos[0],
        pose_y_mm: args.pos[1],
        yaw_rad: args.yaw,
        indent_depth_mm: args.depth,
    };
    let params = RenderParams {
        kappa: args.kappa,
        saturation_depth_mm: args.saturation,
    };

    let truth = sim::indent_height(&primitive, &geom, args.width, args.height, args.skirt)?;
    let meta = FrameMeta {
        primitive: primitive.clone(),
        lattice_pitch_px: args.pitch,
        lattice_pin_radius_px: args.pin_radius,
        field_center_u: cx,
        field_center_v: cy,
        field_radius_px: fr,
        kappa: args.kappa,
        skirt_sigma_px: args.skirt,
        saturation_depth_mm: args.saturation,
        sensor_radius_mm: args.radius_mm,
        pixel_pitch_mm: geom.pixel_pitch_mm,
        alpha: geom.alpha,
        width: args.width,
        height: args.height,
    };
    let frame = sim::render_deformed_frame(&lattice, &truth, &params, Some(meta.clone()))?;
    let rest = sim::render_rest_frame(&lattice, args.width, args.height)?;

    ensure_dir(&args.out)?;
    io::write_pgm(&args.out.join("frame.pgm"), &frame.image)?;
    io::write_pgm(&args.out.join("rest.pgm"), &rest)?;
    io::write_height_grid(&args.out.join("truth.tshf"), &frame.truth_height)?;
    // ground-truth contact cloud, extracted the same way reconstructions are
    let lifted = tacshade_core::sfs::lift_to_hemisphere(&frame.truth_height, &geom);
    let truth_cloud = if frame.truth_height.max_value() > 0.0 {
        cloud::extract_contact_cluster(&lifted.cloud, &lifted.depths)?
    } else {
        PointCloud::new(Vec::new(), "sensor")
    };
    io::write_ply(&args.out.join("truth.ply"), &truth_cloud)?;
    fs::write(
        args.out.join("meta.json"),
        serde_json::to_string_pretty(&meta).unwrap(),
    )?;
    println!(
        "frame={} truth_max_mm={:.4}",
        args.out.join("frame.pgm").display(),
        frame.truth_height.max_value()
    );
    Ok(())
}

/// Min-max scale a field into an 8-bit image for visual inspection.
fn to_view(field: &GreyscaleField) -> RasterImage {
    let (lo, hi) = field.min_max();
    let span = if hi > lo { hi - lo } else { 1.0 };
    let data: Vec<u8> = field
        .data()
        .iter()
        .map(|&x| (255.0 * (x - lo) / span).round().clamp(0.0, 255.0) as u8)
        .collect();
    RasterImage::new(field.width(), field.height(), data).expect("dimensions preserved")
}

pub fn grey(args: GreyArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    ensure_dir(&args.out)?;
    let (rec, _) = run_reconstruction(&args.frame, &args.g0, &cfg)?;

    io::write_pgm(
        &args.out.join("binary.pgm"),
        &rec.frame_stages.binary.to_raster(),
    )?;
    let stages = [
        ("ratio", &rec.frame_stages.ratio),
        ("smoothed", &rec.frame_stages.smoothed),
        ("rest_smoothed", &rec.rest_stages.smoothed),
        ("delta", &rec.delta),
        ("shape_weighted", &rec.shape_weighted),
        ("normalized", &rec.normalized),
    ];
    for (name, field) in stages {
        io::write_greyscale_grid(&args.out.join(format!("{name}.tsgf")), field)?;
        io::write_pgm(&args.out.join(format!("{name}.pgm")), &to_view(field))?;
    }
    println!("stages_written={}", args.out.display());
    Ok(())
}
