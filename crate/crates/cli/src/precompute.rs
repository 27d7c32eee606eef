//! Per-object asset cache.
//!
//! Each object gets `<cache_dir>/<name>/` holding `grid.sdf`, `sq.json`,
//! `pc{32,128,512}.json`, `entry.json` and a `fingerprint` of the mesh bytes
//! and build parameters. `<cache_dir>/assets.json` indexes every object that
//! is cached. Files are only written when their bytes change, so a rerun
//! with an up-to-date cache leaves every file untouched.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use geograsp::mesh::{oriented_bounding_box, read_mesh, MeshFormat};
use geograsp::representation::{AssetEntry, AssetIndex, PointCloudFile, POINT_CLOUD_SIZES};
use geograsp::sdf::{GridSpec, SdfGrid};
use geograsp::superquadric::{fit_superquadric, FitConfig, PARAMETER_COUNT};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::commands::{json_bytes, write_if_changed};
use crate::error::CliError;
use crate::manifest::{CorpusManifest, ObjectEntry};
use crate::PrecomputeArgs;

const FINGERPRINT_VERSION: u32 = 1;
pub const INDEX_FILE: &str = "assets.json";

enum Outcome {
    Built { entry: AssetEntry, seconds: f64 },
    UpToDate { entry: AssetEntry },
    Failed(CliError),
}

pub fn run(args: &PrecomputeArgs) -> Result<ExitCode, CliError> {
    let manifest = CorpusManifest::load(&args.manifest)?;
    let spec = GridSpec::cube(args.grid.dims, args.grid.bounds);
    spec.validate()
        .map_err(|e| CliError::Invocation(e.to_string()))?;
    let fit = FitConfig {
        lambda: args.lambda,
        seed: args.seed,
        ..FitConfig::default()
    };
    fit.validate()
        .map_err(|e| CliError::Invocation(e.to_string()))?;
    if args.points < PARAMETER_COUNT {
        return Err(CliError::Invocation(format!(
            "--points must be at least {PARAMETER_COUNT}"
        )));
    }
    let cache_dir = args.out.clone().unwrap_or(manifest.cache_dir.clone());
    fs::create_dir_all(&cache_dir).map_err(CliError::io(&cache_dir))?;

    let mut objects = manifest.objects.clone();
    objects.sort_by(|a, b| a.name.cmp(&b.name));
    let outcomes: Vec<Outcome> = objects
        .par_iter()
        .map(|object| process(object, &cache_dir, &spec, &fit, args))
        .collect();

    let mut index = AssetIndex::default();
    let (mut built, mut fresh, mut failed) = (0, 0, 0);
    for (object, outcome) in objects.iter().zip(outcomes) {
        let mass = object
            .mass
            .map(|m| format!(" (mass {m} kg)"))
            .unwrap_or_default();
        match outcome {
            Outcome::Built { entry, seconds } => {
                println!("{}: built in {seconds:.2} s{mass}", object.name);
                index.objects.insert(object.name.clone(), entry);
                built += 1;
            }
            Outcome::UpToDate { entry } => {
                println!("{}: up to date{mass}", object.name);
                index.objects.insert(object.name.clone(), entry);
                fresh += 1;
            }
            Outcome::Failed(err) => {
                println!("{}: failed: {err}", object.name);
                failed += 1;
            }
        }
    }
    let index_path = cache_dir.join(INDEX_FILE);
    let mut text = index.to_json().into_bytes();
    text.push(b'\n');
    write_if_changed(&index_path, &text)?;
    println!("summary: {built} built, {fresh} up to date, {failed} failed");
    Ok(if failed > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn process(
    object: &ObjectEntry,
    cache_dir: &Path,
    spec: &GridSpec,
    fit: &FitConfig,
    args: &PrecomputeArgs,
) -> Outcome {
    let start = Instant::now();
    match build(object, cache_dir, spec, fit, args) {
        Ok((entry, true)) => Outcome::Built {
            entry,
            seconds: start.elapsed().as_secs_f64(),
        },
        Ok((entry, false)) => Outcome::UpToDate { entry },
        Err(err) => Outcome::Failed(err),
    }
}

/// Returns the index entry and whether anything was rebuilt.
fn build(
    object: &ObjectEntry,
    cache_dir: &Path,
    spec: &GridSpec,
    fit: &FitConfig,
    args: &PrecomputeArgs,
) -> Result<(AssetEntry, bool), CliError> {
    let mesh_path = &object.mesh;
    let mesh_bytes = fs::read(mesh_path).map_err(CliError::io(mesh_path))?;
    let fingerprint = fingerprint(&mesh_bytes, args);
    let dir = cache_dir.join(&object.name);
    let fingerprint_path = dir.join("fingerprint");
    let entry_path = dir.join("entry.json");

    if !args.force {
        if let Some(entry) = cached_entry(&fingerprint_path, &entry_path, &fingerprint, cache_dir) {
            return Ok((entry, false));
        }
    }

    let mesh_error = |source| CliError::Mesh {
        path: mesh_path.clone(),
        source,
    };
    let format = MeshFormat::from_path(mesh_path).map_err(mesh_error)?;
    let mesh = read_mesh(mesh_bytes.as_slice(), format).map_err(mesh_error)?;
    fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    let relative = |file: &str| PathBuf::from(&object.name).join(file);

    let grid = SdfGrid::build(&mesh, *spec)?;
    let mut grid_bytes = Vec::with_capacity(grid.values().len() * 4 + 64);
    grid.write_to(&mut grid_bytes)?;
    if SdfGrid::from_bytes(&grid_bytes)? != grid {
        return Err(CliError::Integrity(format!(
            "{}: grid does not reload",
            object.name
        )));
    }
    write_if_changed(&cache_dir.join(relative("grid.sdf")), &grid_bytes)?;

    let samples = mesh.sample_surface(args.points, args.seed).points;
    let sq = fit_superquadric(&samples, Some(&grid), fit)?;
    write_if_changed(
        &cache_dir.join(relative("sq.json")),
        &json_bytes(&sq.record()),
    )?;

    let mut pc = std::collections::BTreeMap::new();
    for n in POINT_CLOUD_SIZES {
        let file = PointCloudFile::new(args.seed, &mesh.sample_surface(n, args.seed).points);
        let path = relative(&format!("pc{n}.json"));
        write_if_changed(&cache_dir.join(&path), &json_bytes(&file))?;
        pc.insert(n, path);
    }

    let entry = AssetEntry {
        mesh: fs::canonicalize(mesh_path).map_err(CliError::io(mesh_path))?,
        sdf: Some(relative("grid.sdf")),
        sq: Some(relative("sq.json")),
        obb: Some(oriented_bounding_box(&mesh)),
        com: Some(mesh.center_of_mass().position.coords.into()),
        pc,
    };
    write_if_changed(&entry_path, &json_bytes(&entry))?;
    write_if_changed(&fingerprint_path, format!("{fingerprint}\n").as_bytes())?;
    Ok((entry, true))
}

/// The stored entry, when the fingerprint matches and every file it names
/// is present.
fn cached_entry(
    fingerprint_path: &Path,
    entry_path: &Path,
    fingerprint: &str,
    cache_dir: &Path,
) -> Option<AssetEntry> {
    let stored = fs::read_to_string(fingerprint_path).ok()?;
    if stored.trim() != fingerprint {
        return None;
    }
    let entry: AssetEntry = serde_json::from_slice(&fs::read(entry_path).ok()?).ok()?;
    let files = entry.sdf.iter().chain(&entry.sq).chain(entry.pc.values());
    let complete = entry.mesh.is_file() && files.into_iter().all(|p| cache_dir.join(p).is_file());
    complete.then_some(entry)
}

fn fingerprint(mesh_bytes: &[u8], args: &PrecomputeArgs) -> String {
    let mut hasher = Sha256::new();
    hasher.update(
        format!(
            "version {FINGERPRINT_VERSION}\ndims {}\nbounds {:?}\nlambda {:?}\nseed {}\npoints {}\n",
            args.grid.dims, args.grid.bounds, args.lambda, args.seed, args.points
        )
        .as_bytes(),
    );
    hasher.update(mesh_bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
