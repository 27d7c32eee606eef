//! Single-input subcommands. Reports go to stdout as TOML; `--out` files
//! are JSON.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use geograsp::mesh::{
    load_mesh, oriented_bounding_box, ComMethod, OrientedBoundingBox, TriangleMesh,
};
use geograsp::representation::PointCloudFile;
use geograsp::reward::{evaluate_trace, DistanceMode, RewardConfig};
use geograsp::sdf::{load_grid, GridSpec, SdfGrid};
use geograsp::superquadric::{fit_superquadric, FitConfig, FitRecord, PARAMETER_COUNT};
use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::{BenchArgs, FitArgs, MeshArgs, RewardArgs, SampleArgs};

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("plain data serializes");
    bytes.push(b'\n');
    bytes
}

/// Writes `bytes` unless the file already holds exactly them. Returns
/// whether the file was written.
pub fn write_if_changed(path: &Path, bytes: &[u8]) -> Result<bool, CliError> {
    if fs::read(path).is_ok_and(|existing| existing == bytes) {
        return Ok(false);
    }
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(CliError::io(parent))?;
    }
    fs::write(path, bytes).map_err(CliError::io(path))?;
    Ok(true)
}

fn print_toml<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = toml::to_string(value)
        .map_err(|e| CliError::Integrity(format!("report serialization: {e}")))?;
    print!("{text}");
    Ok(())
}

fn mesh(path: &Path) -> Result<TriangleMesh, CliError> {
    load_mesh(path).map_err(|source| CliError::Mesh {
        path: path.to_path_buf(),
        source,
    })
}

fn invocation(err: impl std::fmt::Display) -> CliError {
    CliError::Invocation(err.to_string())
}

#[derive(Debug, Serialize)]
struct FitReport {
    mesh: PathBuf,
    lambda: f64,
    seed: u64,
    points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    reg_loss_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    data_loss_ratio: Option<f64>,
    fit: FitRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    unregularized: Option<FitRecord>,
}

pub fn fit_sq(args: &FitArgs) -> Result<ExitCode, CliError> {
    let config = FitConfig {
        lambda: args.lambda,
        seed: args.seed,
        ..FitConfig::default()
    };
    config.validate().map_err(invocation)?;
    if args.points < PARAMETER_COUNT {
        return Err(invocation(format!(
            "--points must be at least {PARAMETER_COUNT}"
        )));
    }
    let spec = GridSpec::cube(args.grid.dims, args.grid.bounds);
    spec.validate().map_err(invocation)?;

    let start = Instant::now();
    let mesh = mesh(&args.mesh)?;
    let points = mesh.sample_surface(args.points, args.seed).points;
    let grid = if args.lambda > 0.0 || args.compare {
        Some(SdfGrid::build(&mesh, spec)?)
    } else {
        None
    };
    let fit = fit_superquadric(&points, grid.as_ref(), &config)?;
    let unregularized = if args.compare {
        let plain = FitConfig {
            lambda: 0.0,
            ..config
        };
        Some(fit_superquadric(&points, grid.as_ref(), &plain)?)
    } else {
        None
    };
    let reg_loss_ratio = unregularized
        .as_ref()
        .and_then(|u| Some(fit.reg_loss? / u.reg_loss?));
    let report = FitReport {
        mesh: args.mesh.clone(),
        lambda: args.lambda,
        seed: args.seed,
        points: args.points,
        reg_loss_ratio,
        data_loss_ratio: unregularized.as_ref().map(|u| fit.data_loss / u.data_loss),
        fit: fit.record(),
        unregularized: unregularized.map(|u| u.record()),
    };
    if let Some(out) = &args.out {
        write_if_changed(out, &json_bytes(&report))?;
    }
    print_toml(&report)?;
    println!("# fitted in {:.2} s", start.elapsed().as_secs_f64());
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Serialize)]
struct ObbReport {
    com: [f64; 3],
    com_method: ComMethod,
    obb: OrientedBoundingBox,
}

pub fn obb(args: &MeshArgs) -> Result<ExitCode, CliError> {
    let mesh = mesh(&args.mesh)?;
    let com = mesh.center_of_mass();
    let report = ObbReport {
        com: com.position.coords.into(),
        com_method: com.method,
        obb: oriented_bounding_box(&mesh),
    };
    if let Some(out) = &args.out {
        write_if_changed(out, &json_bytes(&report))?;
    }
    print_toml(&report)?;
    Ok(ExitCode::SUCCESS)
}

pub fn sample_pc(args: &SampleArgs) -> Result<ExitCode, CliError> {
    let mesh = mesh(&args.mesh)?;
    let file = PointCloudFile::new(
        args.seed,
        &mesh.sample_surface(args.points, args.seed).points,
    );
    let bytes = json_bytes(&file);
    match &args.out {
        Some(out) => {
            write_if_changed(out, &bytes)?;
        }
        None => io::stdout()
            .write_all(&bytes)
            .map_err(CliError::io(Path::new("<stdout>")))?,
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Serialize)]
struct BenchReport {
    grid: PathBuf,
    dims: [usize; 3],
    points: usize,
    repeats: usize,
    seed: u64,
    threads: usize,
    min_ms: f64,
    median_ms: f64,
    points_per_second: f64,
    /// SHA-256 prefix of the returned distances, little-endian f64.
    checksum: String,
}

pub fn bench_query(args: &BenchArgs) -> Result<ExitCode, CliError> {
    if args.repeats == 0 {
        return Err(invocation("--repeats must be at least 1"));
    }
    let grid = load_grid(&args.grid)?;
    let (lo, hi) = grid.bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let points: Vec<Point3<f64>> = (0..args.points)
        .map(|_| {
            Point3::from(
                lo.coords
                    .zip_map(&hi.coords, |a, b| rng.random_range(a..=b)),
            )
        })
        .collect();

    let distances = grid.query(&points);
    let mut times: Vec<Duration> = (0..args.repeats)
        .map(|_| {
            let start = Instant::now();
            let values = grid.query(&points);
            let elapsed = start.elapsed();
            debug_assert_eq!(values.len(), points.len());
            elapsed
        })
        .collect();
    times.sort();
    let median = times[times.len() / 2];

    let mut hasher = Sha256::new();
    for d in &distances {
        hasher.update(d.to_le_bytes());
    }
    let checksum: String = hasher.finalize()[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    let points_per_second = if args.points == 0 || median.is_zero() {
        0.0
    } else {
        args.points as f64 / median.as_secs_f64()
    };
    print_toml(&BenchReport {
        grid: args.grid.clone(),
        dims: grid.dims(),
        points: args.points,
        repeats: args.repeats,
        seed: args.seed,
        threads: rayon::current_num_threads(),
        min_ms: times[0].as_secs_f64() * 1e3,
        median_ms: median.as_secs_f64() * 1e3,
        points_per_second,
        checksum,
    })?;
    Ok(ExitCode::SUCCESS)
}

pub fn reward_eval(args: &RewardArgs) -> Result<ExitCode, CliError> {
    let defaults = RewardConfig::default();
    let config = RewardConfig {
        c1: args.c1.unwrap_or(defaults.c1),
        c2: args.c2.unwrap_or(defaults.c2),
        c3: args.c3.unwrap_or(defaults.c3),
        eps_h: args.eps_h.unwrap_or(defaults.eps_h),
        eps_sdf: args.eps_sdf.unwrap_or(defaults.eps_sdf),
        h_bar: args.h_bar.unwrap_or(defaults.h_bar),
        distance_mode: if args.signed {
            DistanceMode::Signed
        } else {
            DistanceMode::Clamped
        },
    };
    config.validate().map_err(invocation)?;

    let input: Box<dyn Read> = if args.trace.as_os_str() == "-" {
        Box::new(io::stdin().lock())
    } else {
        Box::new(fs::File::open(&args.trace).map_err(CliError::io(&args.trace))?)
    };
    match &args.out {
        Some(out) => {
            let mut bytes = Vec::new();
            let rows = evaluate_trace(input, &mut bytes, &config)?;
            write_if_changed(out, &bytes)?;
            println!("rows = {rows}");
        }
        None => {
            evaluate_trace(input, io::stdout().lock(), &config)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
