use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::process::{Command, Output, Stdio};

use gridscape_core::export::{read_report_document, read_scene_document, write_csv};
use gridscape_testkit::{fixtures, glb};

fn gridscape(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridscape"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn assert_error(o: &Output, code: i32, needle: &str) {
    assert_eq!(o.status.code(), Some(code), "stderr: {}", stderr(o));
    let err = stderr(o);
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines.len(), 1, "{err}");
    assert!(lines[0].starts_with("error: "), "{err}");
    assert!(lines[0].contains(needle), "{err}");
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn scene_writes_75000_bar_instances() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    std::fs::write(&csv, fixtures::numeric_csv(300, 250, 7)).unwrap();
    let glb_path = dir.path().join("out.glb");
    let o = gridscape(&["scene", "--in", p(&csv), "--gltf", p(&glb_path)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("75000 bars"));
    let bytes = std::fs::read(&glb_path).unwrap();
    let doc = glb::parse(&bytes).unwrap();
    assert_eq!(glb::kind_instance_count(&doc, "bars_"), 75_000);
    assert_eq!(glb::kind_instance_count(&doc, "tiles_"), 75_000);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("g.csv");
    let mut rng = fixtures::rng(11);
    std::fs::write(&csv, write_csv(&fixtures::random_grid(&mut rng, 20, 20))).unwrap();
    let run = |tag: &str| {
        let (g, d, r) = (
            dir.path().join(format!("{tag}.glb")),
            dir.path().join(format!("{tag}.json")),
            dir.path().join(format!("{tag}.csv")),
        );
        let o = gridscape(&[
            "scene",
            "--in",
            p(&csv),
            "--normalize",
            "per-format",
            "--gltf",
            p(&g),
            "--scene-doc",
            p(&d),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let o = gridscape(&["anomalies", "--in", p(&csv), "--report", p(&r), "--z", "2"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        [g, d, r].map(|f| std::fs::read(f).unwrap())
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn scene_document_and_surface() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    std::fs::write(&csv, fixtures::numeric_csv(6, 9, 3)).unwrap();
    let doc = dir.path().join("s.json");
    let o = gridscape(&[
        "scene",
        "--in",
        p(&csv),
        "--mode",
        "surface",
        "--range",
        "1,1:4,5",
        "--hmax",
        "3",
        "--pitch",
        "0.5",
        "--signed",
        "--scene-doc",
        p(&doc),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("12 surface patches"), "{}", stdout(&o));
    let scene = read_scene_document(&std::fs::read(&doc).unwrap()).unwrap();
    assert_eq!(scene.config.cell_pitch, 0.5);
    assert_eq!(scene.config.policy.height_max, 3.0);
    assert!(scene.config.policy.signed_baseline);
    assert_eq!(scene.range.to_string(), "1,1:4,5");
}

#[test]
fn anomaly_reports() {
    let dir = tempfile::tempdir().unwrap();
    let clean = dir.path().join("clean.csv");
    std::fs::write(&clean, write_csv(&fixtures::smooth_series_grid(8, 600))).unwrap();
    let o = gridscape(&["anomalies", "--in", p(&clean)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "row,col,detector,score,context\n");

    let fx = fixtures::anomaly_fixture(10, 400, 3, 1, 60, 5);
    let dirty = dir.path().join("dirty.csv");
    std::fs::write(&dirty, write_csv(&fx.grid)).unwrap();
    let report = dir.path().join("r.json");
    let o = gridscape(&[
        "anomalies",
        "--in",
        p(&dirty),
        "--report",
        p(&report),
        "--report-format",
        "doc",
        "--axis",
        "rows",
        "--detectors",
        "fins,tabs",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = read_report_document(&std::fs::read(&report).unwrap()).unwrap();
    let mut fins: Vec<_> = r
        .flags
        .iter()
        .filter(|f| f.detector.as_str() == "fin")
        .map(|f| f.addr)
        .collect();
    fins.sort();
    let mut spikes = fx.spikes.clone();
    spikes.sort();
    assert_eq!(fins, spikes);
    assert!(r.flags.iter().all(|f| f.detector.as_str() != "discontinuity"));
}

#[test]
fn ingest_census() {
    let xlsx = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/fixtures/styled.xlsx");
    let o = gridscape(&["ingest", "--in", xlsx]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("grid 6 x 6\nview 0,0:5,5 (6 x 6, 36 cells)\n"), "{out}");
    assert!(out.contains("category percent 1\n"), "{out}");
    let o = gridscape(&["ingest", "--in", xlsx, "--sheet", "Nope"]);
    assert_error(&o, 1, "Nope");
}

#[test]
fn error_paths() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("small.csv");
    std::fs::write(&csv, "1,2\n3,4\n").unwrap();
    let out = dir.path().join("o.glb");

    let o = gridscape(&["scene", "--in", "missing.csv", "--gltf", p(&out)]);
    assert_error(&o, 1, "missing.csv");
    assert_error(
        &gridscape(&["scene", "--in", p(&csv), "--range", "0,0:5,5", "--gltf", p(&out)]),
        1,
        "out of bounds",
    );
    assert_error(
        &gridscape(&["scene", "--in", p(&csv), "--gltf", p(&out), "--max-instances", "3"]),
        1,
        "",
    );
    assert_error(&gridscape(&["scene", "--in", p(&csv)]), 2, "--gltf");
    assert_error(
        &gridscape(&["scene", "--in", p(&csv), "--range", "5,5:1,1", "--gltf", p(&out)]),
        2,
        "range",
    );
    assert_error(
        &gridscape(&["scene", "--in", p(&csv), "--mode", "voxels", "--gltf", p(&out)]),
        2,
        "voxels",
    );
    assert_error(
        &gridscape(&["scene", "--in", p(&csv), "--pitch", "0", "--gltf", p(&out)]),
        2,
        "pitch",
    );
    assert_error(&gridscape(&["anomalies", "--in", p(&csv), "--tab-run", "1"]), 2, "");
    assert_error(
        &gridscape(&["anomalies", "--in", p(&csv), "--detectors", "nope"]),
        2,
        "nope",
    );
    assert_error(&gridscape(&["frobnicate"]), 2, "frobnicate");
    assert_error(&gridscape(&[]), 2, "");
    assert!(!out.exists());

    let o = gridscape(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("anomalies"));
}

#[test]
fn serve_answers_http() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    std::fs::write(&csv, "1,2\n3,4\n").unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_gridscape"))
        .args(["serve", "--port", "0", "--in", p(&csv)])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(child.stdout.take().unwrap()).lines();
    let session = lines.next().unwrap().unwrap();
    let id = session.strip_prefix("session ").unwrap().to_string();
    let listening = lines.next().unwrap().unwrap();
    let addr = listening.strip_prefix("listening on http://").unwrap().to_string();

    let mut stream = std::net::TcpStream::connect(&addr).unwrap();
    write!(
        stream,
        "GET /sessions/{id}/snapshot HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n"
    )
    .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains(r#""type":"snapshot","revision":0"#), "{response}");
}
