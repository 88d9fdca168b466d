mod common;

use std::process::Command;

use common::fixture;
use uvforge::cli;

fn run(args: &[&str]) -> i32 {
    cli::main(std::iter::once("uvforge").chain(args.iter().copied()))
}

fn path_str(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn texture_happy_path() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = fixture("cube.obj");
    let code = run(&[
        "texture",
        "--mesh",
        path_str(&mesh),
        "--prompt",
        "wooden crate",
        "--backend",
        "mock",
        "--atlas-res",
        "128",
        "--view-res",
        "128",
        "--out",
        path_str(dir.path()),
    ]);
    assert_eq!(code, 0);
    assert!(dir.path().join("texture.png").is_file());
    let trace: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("trace.json")).unwrap())
            .unwrap();
    assert_eq!(trace["config"]["atlas_resolution"], 128);
    assert_eq!(trace["config"]["total_viewpoints"], 6);
}

#[test]
fn config_file_and_flags_are_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"atlas_resolution": 64, "view_resolution": 64, "seed": 3, "total_viewpoints": 4}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let code = run(&[
        "texture",
        "--mesh",
        path_str(&fixture("cube.obj")),
        "--prompt",
        "p",
        "--config",
        path_str(&cfg),
        "--seed",
        "8",
        "--per-iter",
        "1",
        "--no-position-map",
        "--debug",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0);
    let trace: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("trace.json")).unwrap()).unwrap();
    let c = &trace["config"];
    assert_eq!(
        (c["atlas_resolution"].as_u64(), c["seed"].as_u64()),
        (Some(64), Some(8))
    );
    assert_eq!(c["viewpoints_per_iteration"], 1);
    assert_eq!(c["total_viewpoints"], 4);
    assert_eq!(c["use_position_map"], false);
    assert_eq!(trace["requests"].as_array().unwrap().len(), 6);
    assert!(out.join("debug").is_dir());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["texture", "--prompt", "x"]), 1);
    assert_eq!(
        run(&["texture", "--mesh", "m.obj", "--prompt", "x", "--bogus"]),
        1
    );
    assert_eq!(run(&["frobnicate"]), 1);
    assert_eq!(run(&[]), 1);
    assert_eq!(
        run(&["texture", "--mesh", path_str(&fixture("cube.obj"))]),
        1
    );
    assert_eq!(
        run(&[
            "texture",
            "--mesh",
            path_str(&fixture("cube.obj")),
            "--prompt",
            "x",
            "--atlas-res",
            "300"
        ]),
        1
    );
    assert_eq!(
        run(&[
            "texture",
            "--mesh",
            path_str(&fixture("cube.obj")),
            "--prompt",
            "x",
            "--views",
            "5"
        ]),
        1
    );
    assert_eq!(
        run(&[
            "texture",
            "--mesh",
            path_str(&fixture("cube.obj")),
            "--prompt",
            "x",
            "--backend",
            "dalle"
        ]),
        1
    );
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["inspect", "--mesh", "/no/such/mesh.obj"]), 2);
    assert_eq!(
        run(&["inspect", "--mesh", path_str(&fixture("cube-no-vt.obj"))]),
        2
    );
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let endpoint = format!("http://127.0.0.1:{port}");
    let code = run(&[
        "texture",
        "--mesh",
        path_str(&fixture("cube.obj")),
        "--prompt",
        "x",
        "--backend",
        "http",
        "--endpoint",
        &endpoint,
        "--retries",
        "1",
        "--atlas-res",
        "64",
        "--view-res",
        "64",
        "--out",
        path_str(dir.path()),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn preview_writes_one_image_per_view() {
    let dir = tempfile::tempdir().unwrap();
    let tex = dir.path().join("tex.png");
    uvforge::io::write_rgb_png(&tex, &uvforge::core::Grid::filled(32, 32, [0.8, 0.2, 0.1]))
        .unwrap();
    let out = dir.path().join("views");
    let code = run(&[
        "preview",
        "--mesh",
        path_str(&fixture("cube.obj")),
        "--texture",
        path_str(&tex),
        "--size",
        "64",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code, 0);
    let mut names: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 20);
    assert_eq!(names[0], "view_000.png");
    assert_eq!(names[19], "view_019.png");
    let img = image::open(out.join("view_000.png")).unwrap().to_rgb8();
    assert_eq!(img.dimensions(), (64, 64));
    assert_eq!(img.get_pixel(32, 32).0, [204, 51, 26]);
    assert_eq!(img.get_pixel(0, 0).0, [0, 0, 0]);
}

#[test]
fn posmap_and_depth_commands() {
    let dir = tempfile::tempdir().unwrap();
    let pm = dir.path().join("pm.png");
    assert_eq!(
        run(&[
            "posmap",
            "--mesh",
            path_str(&fixture("cube.obj")),
            "--res",
            "64",
            "--out",
            path_str(&pm)
        ]),
        0
    );
    let img = image::open(&pm).unwrap();
    assert_eq!(img.color(), image::ColorType::Rgb16);
    assert_eq!((img.width(), img.height()), (64, 64));

    let d = dir.path().join("d.png");
    let code = run(&[
        "depth",
        "--mesh",
        path_str(&fixture("cube.obj")),
        "--azimuth",
        "-30",
        "--elevation",
        "20",
        "--size",
        "48",
        "--out",
        path_str(&d),
    ]);
    assert_eq!(code, 0);
    let img = image::open(&d).unwrap();
    assert_eq!(img.color(), image::ColorType::L16);
    assert_eq!(img.to_luma16().get_pixel(0, 0).0, [0]);
    assert!(img.to_luma16().get_pixel(24, 24).0[0] > 0);
}

#[test]
fn binary_reports_exit_codes_and_synopsis() {
    let exe = env!("CARGO_BIN_EXE_uvforge");
    let out = Command::new(exe)
        .args(["texture", "--prompt", "x"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("--mesh") && stderr.contains("Usage"),
        "{stderr}"
    );

    let out = Command::new(exe)
        .args(["inspect", "--mesh"])
        .arg(fixture("cube.obj"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["faces"], 12);
    assert_eq!(report["charts"], 6);

    let out = Command::new(exe).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn endpoint_falls_back_to_environment() {
    let exe = env!("CARGO_BIN_EXE_uvforge");
    let dir = tempfile::tempdir().unwrap();
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let base = [
        "texture",
        "--prompt",
        "x",
        "--backend",
        "http",
        "--atlas-res",
        "64",
        "--view-res",
        "64",
        "--retries",
        "1",
    ];
    let out = Command::new(exe)
        .args(base)
        .arg("--mesh")
        .arg(fixture("cube.obj"))
        .arg("--out")
        .arg(dir.path())
        .env_remove(cli::ENDPOINT_ENV)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(1),
        "no endpoint anywhere is a usage error"
    );
    let out = Command::new(exe)
        .args(base)
        .arg("--mesh")
        .arg(fixture("cube.obj"))
        .arg("--out")
        .arg(dir.path())
        .env(cli::ENDPOINT_ENV, format!("http://127.0.0.1:{port}"))
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
