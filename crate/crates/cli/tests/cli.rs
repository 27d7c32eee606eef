use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use geograsp::mesh::primitives::{cuboid, hemispherical_bowl, unit_cube};
use geograsp::mesh::{save_obj, TriangleMesh};
use geograsp::representation::{build_observation, AssetIndex, ObjectPose, ObservationKind};
use geograsp::sdf::{GridSpec, SdfGrid};
use nalgebra::{Isometry3, Point3, UnitQuaternion, Vector3};
use tempfile::TempDir;

fn geograsp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geograsp"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn write_mesh(dir: &Path, name: &str, mesh: &TriangleMesh) -> PathBuf {
    let path = dir.join(name);
    save_obj(mesh, &path).unwrap();
    path
}

/// Bytes of every file below `dir`, keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<PathBuf, (Vec<u8>, std::time::SystemTime)> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let meta = fs::metadata(&path).unwrap();
                files.insert(
                    path.strip_prefix(dir).unwrap().to_path_buf(),
                    (fs::read(&path).unwrap(), meta.modified().unwrap()),
                );
            }
        }
    }
    files
}

fn cube_corpus() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_mesh(dir.path(), "cube.obj", &unit_cube());
    fs::write(
        dir.path().join("corpus.toml"),
        "cache_dir = \"cache\"\n\n[[objects]]\nname = \"cube\"\nmesh = \"cube.obj\"\nmass = 0.5\n",
    )
    .unwrap();
    dir
}

const SMALL_GRID: [&str; 6] = ["--dims", "40", "--bounds", "0.6", "--points", "300"];

fn precompute(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["precompute-sdf", "corpus.toml"];
    args.extend(SMALL_GRID);
    args.extend(extra);
    geograsp(&args, dir)
}

#[test]
fn precompute_builds_once_and_reruns_are_idempotent() {
    let dir = cube_corpus();
    let first = precompute(dir.path(), &[]);
    assert!(first.status.success(), "{}", stderr(&first));
    assert!(stdout(&first).contains("summary: 1 built, 0 up to date, 0 failed"));
    let cache = dir.path().join("cache");
    let built = snapshot(&cache);
    for file in [
        "assets.json",
        "cube/grid.sdf",
        "cube/sq.json",
        "cube/pc32.json",
        "cube/pc128.json",
        "cube/pc512.json",
    ] {
        assert!(built.contains_key(Path::new(file)), "missing {file}");
    }

    let second = precompute(dir.path(), &[]);
    assert!(second.status.success());
    assert!(stdout(&second).contains("cube: up to date"));
    assert!(stdout(&second).contains("summary: 0 built, 1 up to date, 0 failed"));
    assert_eq!(snapshot(&cache), built, "cache hit must not touch any file");

    let forced = precompute(dir.path(), &["--force"]);
    assert!(stdout(&forced).contains("summary: 1 built"));
    let rebuilt = snapshot(&cache);
    assert_eq!(rebuilt.len(), built.len());
    for (path, (bytes, _)) in &built {
        assert_eq!(
            &rebuilt[path].0,
            bytes,
            "{} differs after a forced rebuild",
            path.display()
        );
    }

    // Changing a build parameter invalidates the cache.
    let reseeded = precompute(dir.path(), &["--seed", "3"]);
    assert!(stdout(&reseeded).contains("summary: 1 built"));
}

#[test]
fn precomputed_assets_load_into_observations() {
    let dir = cube_corpus();
    assert!(precompute(dir.path(), &[]).status.success());
    let cache = dir.path().join("cache");
    let index = AssetIndex::load(cache.join("assets.json")).unwrap();
    let assets = index.objects["cube"].load_assets(&cache).unwrap();

    let grid = assets.grid().unwrap();
    assert_eq!(grid.dims(), [40, 40, 40]);
    assert!(grid.query_point(&Point3::origin()) < 0.0);
    let [e1, e2] = assets.sq.unwrap().exponents();
    assert!(e1 <= 0.35 && e2 <= 0.35, "cube exponents {e1} {e2}");

    let pose = ObjectPose::from(Isometry3::from_parts(
        Vector3::new(0.1, 0.0, 0.3).into(),
        UnitQuaternion::from_euler_angles(0.0, 0.0, 0.4),
    ));
    for kind in ObservationKind::ALL {
        let obs = build_observation(&assets, &pose, kind);
        if kind == ObservationKind::Sdf {
            assert!(obs.is_err());
        } else {
            assert_eq!(obs.unwrap().values.len(), kind.dim(), "{kind}");
        }
    }
}

#[test]
fn precompute_isolates_failing_objects() {
    let dir = cube_corpus();
    fs::write(
        dir.path().join("corpus.toml"),
        "cache_dir = \"cache\"\n\n[[objects]]\nname = \"ghost\"\nmesh = \"ghost.obj\"\n\n\
         [[objects]]\nname = \"cube\"\nmesh = \"cube.obj\"\n",
    )
    .unwrap();
    let out = precompute(dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("ghost: failed"), "{text}");
    assert!(text.contains("cube: built"), "{text}");
    // Lines are ordered by object name.
    assert!(text.find("cube:").unwrap() < text.find("ghost:").unwrap());
    let index = AssetIndex::load(dir.path().join("cache/assets.json")).unwrap();
    assert_eq!(index.objects.keys().collect::<Vec<_>>(), ["cube"]);
}

#[test]
fn precompute_default_grid_file_size() {
    let dir = tempfile::tempdir().unwrap();
    write_mesh(
        dir.path(),
        "box.obj",
        &cuboid(Vector3::new(0.1, 0.06, 0.04), Point3::origin()),
    );
    fs::write(
        dir.path().join("corpus.toml"),
        "cache_dir = \"cache\"\n[[objects]]\nname = \"box\"\nmesh = \"box.obj\"\n",
    )
    .unwrap();
    let out = geograsp(
        &["precompute-sdf", "corpus.toml", "--points", "300"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let path = dir.path().join("cache/box/grid.sdf");
    assert_eq!(fs::metadata(&path).unwrap().len(), 32_000_064);
    let grid = SdfGrid::load(&path).unwrap();
    assert_eq!(grid.dims(), [200, 200, 200]);
}

#[test]
fn invalid_invocations_exit_with_two() {
    let dir = cube_corpus();
    fs::write(
        dir.path().join("dup.toml"),
        "cache_dir = \"c\"\n[[objects]]\nname = \"a\"\nmesh = \"cube.obj\"\n[[objects]]\nname = \"a\"\nmesh = \"cube.obj\"\n",
    )
    .unwrap();
    let dup = geograsp(&["precompute-sdf", "dup.toml"], dir.path());
    assert_eq!(dup.status.code(), Some(2));
    assert!(stderr(&dup).contains("duplicate object name"));
    assert_eq!(
        geograsp(&["precompute-sdf", "missing.toml"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        geograsp(
            &["precompute-sdf", "corpus.toml", "--dims", "1"],
            dir.path()
        )
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        geograsp(&["fit-sq", "cube.obj", "--lambda", "-1"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        geograsp(&["bench-query"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(geograsp(&["teleport"], dir.path()).status.code(), Some(2));
    assert_eq!(
        geograsp(&["obb", "cube.obj", "--jobs", "0"], dir.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn fit_sq_cube_is_boxy() {
    let dir = cube_corpus();
    let args = [
        "fit-sq", "cube.obj", "--dims", "61", "--bounds", "0.6", "--points", "500", "--out",
        "fit.json",
    ];
    let out = geograsp(&args, dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("fit.json")).unwrap()).unwrap();
    let exponents = report["fit"]["exponents"].as_array().unwrap();
    assert!(
        exponents.iter().all(|e| e.as_f64().unwrap() <= 0.35),
        "{exponents:?}"
    );
    for a in report["fit"]["scale"].as_array().unwrap() {
        assert!((a.as_f64().unwrap() - 0.5).abs() < 0.025);
    }
    // The stdout report is TOML carrying the same fit.
    let printed: toml::Table = stdout(&out).parse().unwrap();
    assert_eq!(printed["fit"]["exponents"].as_array().unwrap().len(), 2);
}

#[test]
fn fit_sq_regularizer_shrinks_bowl_overhang() {
    let dir = tempfile::tempdir().unwrap();
    write_mesh(
        dir.path(),
        "bowl.obj",
        &hemispherical_bowl(0.08, 0.01, 16, 48),
    );
    let args = [
        "fit-sq",
        "bowl.obj",
        "--compare",
        "--dims",
        "121",
        "--bounds",
        "0.15",
    ];
    let out = geograsp(&args, dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let printed: toml::Table = stdout(&out).parse().unwrap();
    let ratio = printed["reg_loss_ratio"].as_float().unwrap();
    assert!(ratio <= 0.7, "reg_loss ratio {ratio}");
    assert!(printed["unregularized"]["reg_loss"].as_float().unwrap() > 0.0);
}

#[test]
fn fit_sq_rejects_invalid_mesh() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.obj"), "v 0 0\nf 1 2 3\n").unwrap();
    let out = geograsp(&["fit-sq", "bad.obj", "--lambda", "0"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).starts_with("error: bad.obj:"),
        "{}",
        stderr(&out)
    );
    let missing = geograsp(&["fit-sq", "none.obj"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
}

fn bench(dir: &Path, points: &str, seed: &str) -> toml::Table {
    let out = geograsp(
        &[
            "bench-query",
            "grid.sdf",
            "--points",
            points,
            "--repeats",
            "5",
            "--seed",
            seed,
        ],
        dir,
    );
    assert!(out.status.success(), "{}", stderr(&out));
    stdout(&out).parse().unwrap()
}

#[test]
fn bench_query_reports_latency_and_checksum() {
    let dir = tempfile::tempdir().unwrap();
    SdfGrid::build(&unit_cube(), GridSpec::cube(32, 0.6))
        .unwrap()
        .save(dir.path().join("grid.sdf"))
        .unwrap();

    let full = bench(dir.path(), "81920", "1");
    assert_eq!(full["points"].as_integer(), Some(81_920));
    assert!(full["median_ms"].as_float().unwrap() >= full["min_ms"].as_float().unwrap());
    assert!(full["points_per_second"].as_float().unwrap() > 0.0);
    assert_eq!(
        bench(dir.path(), "81920", "1")["checksum"],
        full["checksum"]
    );
    assert_ne!(
        bench(dir.path(), "81920", "2")["checksum"],
        full["checksum"]
    );

    let empty = bench(dir.path(), "0", "1");
    assert_eq!(empty["points"].as_integer(), Some(0));
    assert_eq!(empty["points_per_second"].as_float(), Some(0.0));
    assert!(empty["median_ms"].as_float().unwrap() < 1.0);

    let missing = geograsp(&["bench-query", "nope.sdf"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn reward_eval_annotates_traces() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("trace.csv"),
        "step,delta_h,d1,d2,d3,d4,d5\n0,0.2,0,0,0,0,0\n",
    )
    .unwrap();
    let out = geograsp(&["reward-eval", "trace.csv"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("step,delta_h,d1,d2,d3,d4,d5,r_sdf,lift,total,success")
    );
    let row: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|f| f.parse().unwrap())
        .collect();
    assert!((row[9] - 5065.0).abs() < 1e-9);
    assert_eq!(row[10], 1.0);

    let ablated = geograsp(
        &["reward-eval", "trace.csv", "--c3", "0", "--out", "out.csv"],
        dir.path(),
    );
    assert!(ablated.status.success());
    let written = fs::read_to_string(dir.path().join("out.csv")).unwrap();
    let total: f64 = written
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(9)
        .unwrap()
        .parse()
        .unwrap();
    assert!((total - 5025.0).abs() < 1e-9);

    fs::write(dir.path().join("empty.csv"), "").unwrap();
    let empty = geograsp(&["reward-eval", "empty.csv"], dir.path());
    assert!(empty.status.success());
    assert!(empty.stdout.is_empty());

    fs::write(
        dir.path().join("short.csv"),
        "0,0,0,0,0,0,0\n1,0.1,0,0,0,0\n",
    )
    .unwrap();
    let short = geograsp(&["reward-eval", "short.csv"], dir.path());
    assert_eq!(short.status.code(), Some(1));
    assert!(stderr(&short).contains("line 2"), "{}", stderr(&short));

    let bad_config = geograsp(&["reward-eval", "trace.csv", "--eps-sdf", "0"], dir.path());
    assert_eq!(bad_config.status.code(), Some(2));
}

#[test]
fn obb_and_sample_pc() {
    let dir = tempfile::tempdir().unwrap();
    let pose = Isometry3::from_parts(
        Vector3::new(0.1, -0.2, 0.05).into(),
        UnitQuaternion::from_euler_angles(0.3, 0.5, -0.2),
    );
    let mesh = cuboid(Vector3::new(0.3, 0.2, 0.1), Point3::origin()).transformed(&pose);
    write_mesh(dir.path(), "box.obj", &mesh);

    let out = geograsp(&["obb", "box.obj", "--out", "obb.json"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let printed: toml::Table = stdout(&out).parse().unwrap();
    let extent: Vec<f64> = printed["obb"]["extent"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_float().unwrap())
        .collect();
    for (got, want) in extent.iter().zip([0.3, 0.2, 0.1]) {
        assert!((got - want).abs() < 1e-9, "{extent:?}");
    }
    let com: Vec<f64> = printed["com"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_float().unwrap())
        .collect();
    assert!(
        (Point3::new(com[0], com[1], com[2]) - Point3::from(pose.translation.vector)).norm()
            < 1e-12
    );
    assert!(dir.path().join("obb.json").is_file());

    let a = geograsp(
        &["sample-pc", "box.obj", "--points", "128", "--seed", "9"],
        dir.path(),
    );
    let b = geograsp(
        &["sample-pc", "box.obj", "--points", "128", "--seed", "9"],
        dir.path(),
    );
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let file: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(file["seed"], 9);
    assert_eq!(file["points"].as_array().unwrap().len(), 128);
}
