use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dtr_cli::snapshot::SnapshotDump;
use dtr_core::sim::TrackDefinition;
use tempfile::TempDir;

fn dtr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dtr")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn track_path(name: &str) -> String {
    format!("{}/../../tracks/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

/// The single run directory a command created under `out`.
fn only_run(out: &Path) -> PathBuf {
    let dirs: Vec<PathBuf> = fs::read_dir(out).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs.into_iter().next().unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn svg_doc(text: &str) -> roxmltree::Document<'_> {
    roxmltree::Document::parse(text).expect("well-formed SVG")
}

fn count(doc: &roxmltree::Document, tag: &str) -> usize {
    doc.descendants().filter(|n| n.has_tag_name(tag)).count()
}

fn snapshot(out: &Path, track: &str, extra: &[&str]) -> (PathBuf, SnapshotDump) {
    let o = out.to_str().unwrap();
    let mut args = vec!["snapshot", "--track", track, "--out", o];
    args.extend_from_slice(extra);
    let res = dtr(&args);
    assert!(res.status.success(), "{}", stderr(&res));
    let dir = fs::read_dir(out).unwrap().map(|e| e.unwrap().path()).max_by_key(|p| fs::metadata(p).unwrap().modified().unwrap()).unwrap();
    let file = dir.join("snapshot.json");
    let dump = serde_json::from_str(&fs::read_to_string(&file).unwrap()).unwrap();
    (file, dump)
}

#[test]
fn race_oval_writes_five_laps() {
    let tmp = TempDir::new().unwrap();
    let res = dtr(&["race", "--track", &track_path("oval"), "--controller", "dtr", "--laps", "5", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", stderr(&res));
    let dir = only_run(tmp.path());

    let (header, rows) = csv_rows(&dir.join("laps.csv"));
    assert_eq!(header, ["lap", "lap_time_s"]);
    assert_eq!(rows.len(), 5);
    let (header, traj) = csv_rows(&dir.join("trajectory.csv"));
    assert_eq!(header, ["t", "x", "y", "theta", "v", "steer", "speed_cmd"]);
    let (header, lat) = csv_rows(&dir.join("latency.csv"));
    assert_eq!(header, ["cycle", "latency_s"]);
    assert_eq!(lat.len() + 1, traj.len());
    let (header, summary) = csv_rows(&dir.join("summary.csv"));
    assert_eq!(header, ["mean_lap_s", "std_lap_s", "mean_latency_s", "std_latency_s", "collisions", "trap_entries"]);
    assert_eq!(summary[0][4], "0");

    // Floats carry at least nine significant digits.
    for field in traj[1..4].iter().flatten() {
        let mantissa = field.split('e').next().unwrap().replace(['-', '.'], "");
        assert!(mantissa.len() >= 9, "{field}");
    }
    assert!(stdout(&res).contains("mean lap"));
}

#[test]
fn ftg_on_trap_collides_or_enters_the_trap() {
    let tmp = TempDir::new().unwrap();
    let res = dtr(&["race", "--track", "trap", "--controller", "ftg", "--out", tmp.path().to_str().unwrap()]);
    let (_, summary) = csv_rows(&only_run(tmp.path()).join("summary.csv"));
    let trap_entries: usize = summary[0][5].parse().unwrap();
    assert!(res.status.code() == Some(2) || trap_entries > 0, "{}", stdout(&res));
}

#[test]
fn unknown_controller_lists_valid_ids() {
    let tmp = TempDir::new().unwrap();
    let res = dtr(&["race", "--track", "oval", "--controller", "mpc", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    let err = stderr(&res);
    assert!(err.contains("dtr") && err.contains("ftg"), "{err}");
}

#[test]
fn config_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().to_str().unwrap();
    let res = dtr(&["race", "--track", "oval", "--set", "control.k_lx=1", "--out", out]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("k_lx"));
    let res = dtr(&["race", "--track", "oval", "--laps", "0", "--out", out]);
    assert_eq!(res.status.code(), Some(1));
    let res = dtr(&["race", "--track", "/nonexistent/oval.json", "--out", out]);
    assert_eq!(res.status.code(), Some(1));

    let mut doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(track_path("oval")).unwrap()).unwrap();
    doc["finish_line"]["b"] = doc["finish_line"]["a"].clone();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, doc.to_string()).unwrap();
    let res = dtr(&["race", "--track", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("finish_line"), "{}", stderr(&res));
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 1);
}

#[test]
fn config_file_and_overrides_compose() {
    let tmp = TempDir::new().unwrap();
    let file = tmp.path().join("cfg.json");
    fs::write(&file, r#"{"vehicle": {"v_max": 3.0}, "sim": {"max_time": 2.0}}"#).unwrap();
    let out = tmp.path().join("runs");
    let res = dtr(&[
        "race", "--track", "oval", "--config", file.to_str().unwrap(), "--set", "sim.max_time=1.5", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(3), "{}", stderr(&res));
    let dir = only_run(&out);
    let used: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("config.json")).unwrap()).unwrap();
    assert_eq!(used["vehicle"]["v_max"], 3.0);
    assert_eq!(used["sim"]["max_time"], 1.5);
    let (_, traj) = csv_rows(&dir.join("trajectory.csv"));
    assert_eq!(traj.len(), 61);
}

#[test]
fn compare_writes_two_rows() {
    let tmp = TempDir::new().unwrap();
    let res = dtr(&["compare", "--track", "oval", "--laps", "1", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", stderr(&res));
    let dir = only_run(tmp.path());
    let (header, rows) = csv_rows(&dir.join("comparison.csv"));
    assert_eq!(header, ["controller", "mean_lap_s", "std_lap_s", "mean_latency_s", "collisions", "trap_entries"]);
    assert_eq!(rows.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(), ["dtr", "ftg"]);
    assert!(dir.join("dtr/laps.csv").exists() && dir.join("ftg/laps.csv").exists());
    assert!(stdout(&res).contains("ratio"));
}

#[test]
fn compare_flushes_results_when_a_controller_fails() {
    let tmp = TempDir::new().unwrap();
    let res = dtr(&["compare", "--track", "trap", "--laps", "1", "--out", tmp.path().to_str().unwrap()]);
    let dir = only_run(tmp.path());
    let (_, rows) = csv_rows(&dir.join("comparison.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][4], "1", "ftg is expected to crash in the dead end");
    assert_eq!(res.status.code(), Some(2));
    assert!(dir.join("ftg/trajectory.csv").exists());
}

#[test]
fn render_track_only_has_two_closed_paths() {
    let tmp = TempDir::new().unwrap();
    let res = dtr(&["render", "--track", "oval", "--out", tmp.path().to_str().unwrap()]);
    assert!(res.status.success(), "{}", stderr(&res));
    let text = fs::read_to_string(only_run(tmp.path()).join("render.svg")).unwrap();
    let doc = svg_doc(&text);
    let paths: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("path")).collect();
    assert_eq!(paths.len(), 2);
    assert!(paths.iter().all(|p| p.attribute("d").unwrap().trim_end().ends_with('Z')));
    assert_eq!(count(&doc, "polyline"), 0);

    // The viewBox is the track bounds grown by 5% per side.
    let track = TrackDefinition::load(track_path("oval")).unwrap();
    let (lo, hi) = track.bounds();
    let vb: Vec<f64> = doc.root_element().attribute("viewBox").unwrap().split(' ').map(|v| v.parse().unwrap()).collect();
    assert!((vb[2] - 1.1 * (hi.x - lo.x)).abs() < 1e-3);
    assert!((vb[3] - 1.1 * (hi.y - lo.y)).abs() < 1e-3);
}

#[test]
fn render_with_trajectory_adds_one_polyline() {
    let tmp = TempDir::new().unwrap();
    let runs = tmp.path().join("runs");
    let res = dtr(&["race", "--track", "oval", "--laps", "1", "--out", runs.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    let traj = only_run(&runs).join("trajectory.csv");
    let renders = tmp.path().join("renders");
    let res = dtr(&["render", "--track", "oval", "--trajectory", traj.to_str().unwrap(), "--out", renders.to_str().unwrap()]);
    assert!(res.status.success(), "{}", stderr(&res));
    let text = fs::read_to_string(only_run(&renders).join("render.svg")).unwrap();
    let doc = svg_doc(&text);
    assert_eq!(count(&doc, "path"), 2);
    assert_eq!(count(&doc, "polyline"), 1);
}

#[test]
fn render_rejects_bad_inputs() {
    let tmp = TempDir::new().unwrap();
    let junk = tmp.path().join("junk.csv");
    fs::write(&junk, "a,b\n1,2\n").unwrap();
    let out = tmp.path().join("renders");
    let res = dtr(&["render", "--track", "oval", "--trajectory", junk.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    let res = dtr(&["render", "--track", "oval", "--dump", junk.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn dashed_triangles_iff_some_were_filtered() {
    let tmp = TempDir::new().unwrap();
    for (track, extra) in [("trap", vec![]), ("corridor", vec!["--set", "centerline.area_min=0", "--set", "centerline.pointedness_min=1", "--set", "centerline.require_two_classes=false"])] {
        let snaps = tmp.path().join(format!("snap-{track}"));
        let (file, dump) = snapshot(&snaps, track, &extra);
        let filtered = dump.trace.verdicts.iter().any(|v| !v.retained);
        let renders = tmp.path().join(format!("render-{track}"));
        let res = dtr(&["render", "--track", track, "--dump", file.to_str().unwrap(), "--out", renders.to_str().unwrap()]);
        assert!(res.status.success(), "{}", stderr(&res));
        let text = fs::read_to_string(only_run(&renders).join("render.svg")).unwrap();
        let doc = svg_doc(&text);
        let dashed = doc.descendants().any(|n| n.attribute("stroke-dasharray").is_some());
        assert_eq!(dashed, filtered, "{track}");
        assert_eq!(count(&doc, "polyline"), usize::from(dump.trace.path.is_some()));
    }
}

#[test]
fn snapshot_round_trips_through_render_on_every_track() {
    let tmp = TempDir::new().unwrap();
    for name in ["corridor", "oval", "trap", "gp"] {
        let (file, dump) = snapshot(&tmp.path().join(name), name, &[]);
        assert_eq!(dump.track, name);
        assert!(dump.trace.triangulation.source.iter().all(|&i| i < dump.trace.points.len()));
        let res = dtr(&["render", "--track", name, "--dump", file.to_str().unwrap(), "--out", tmp.path().join(format!("r-{name}")).to_str().unwrap()]);
        assert!(res.status.success(), "{name}: {}", stderr(&res));
    }
}

#[test]
fn snapshot_corridor_centerline_on_axis() {
    let tmp = TempDir::new().unwrap();
    let (_, dump) = snapshot(tmp.path(), "corridor", &[]);
    let path = dump.trace.path.as_ref().expect("centerline");
    for p in dump.centerline_world() {
        assert!(p.y.abs() < 0.1, "{p:?}");
    }
    assert!(path.total_length() > 3.0);
}

#[test]
fn snapshot_two_class_rule_changes_retained_set() {
    let tmp = TempDir::new().unwrap();
    let (_, with) = snapshot(&tmp.path().join("a"), "trap", &[]);
    let (_, without) = snapshot(&tmp.path().join("b"), "trap", &["--set", "centerline.require_two_classes=false"]);
    let retained = |d: &SnapshotDump| d.trace.verdicts.iter().map(|v| v.retained).collect::<Vec<_>>();
    assert_eq!(with.trace.triangulation, without.trace.triangulation);
    assert_ne!(retained(&with), retained(&without));
}

#[test]
fn snapshot_pose_errors() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().to_str().unwrap();
    let res = dtr(&["snapshot", "--track", "oval", "--pose", "1,2", "--out", out]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("Usage"), "{}", stderr(&res));
    let res = dtr(&["snapshot", "--track", "oval", "--pose", "0,0,0", "--out", out]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("outside"));
    let (_, dump) = snapshot(tmp.path(), "oval", &["--pose", "-2,-4,0.1"]);
    assert_eq!(dump.pose.theta, 0.1);
}

#[test]
fn bench_reports_percentiles() {
    let tmp = TempDir::new().unwrap();
    let res = dtr(&["bench", "--track", "oval", "--cycles", "1000", "--out", tmp.path().to_str().unwrap()]);
    assert!(res.status.success(), "{}", stderr(&res));
    let text = stdout(&res);
    let line = text.lines().find(|l| l.starts_with("median")).expect("median line");
    let median = line.split_whitespace().nth(1).unwrap();
    assert_eq!(median.split('.').nth(1).map(str::len), Some(3), "{line}");
    assert!(line.contains("p95") && line.contains("p99"));
    let dir = only_run(tmp.path());
    let (header, rows) = csv_rows(&dir.join("bench.csv"));
    assert_eq!(header, ["cycle", "latency_s"]);
    assert_eq!(rows.len(), 1000);
    let (_, summary) = csv_rows(&dir.join("bench_summary.csv"));
    assert_eq!(summary[0][0], "1000");

    let res = dtr(&["bench", "--track", "oval", "--cycles", "99", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
}
