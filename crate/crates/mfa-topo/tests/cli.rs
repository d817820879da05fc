use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_mfa-topo");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Last CSV record printed by an extraction, keyed by column name.
fn row(o: &Output) -> std::collections::HashMap<String, String> {
    let text = stdout(o);
    let mut lines = text.lines().filter(|l| !l.is_empty());
    let head: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let last = lines.next_back().unwrap();
    head.into_iter().zip(last.split(',').map(String::from)).collect()
}

fn sinc_model(dir: &Path) {
    let o = run(dir, &["synth", "--field", "sinc", "--output", "sinc.csv"]);
    assert_eq!(code(&o), 0, "{o:?}");
    let o = run(dir, &["fit", "--input", "sinc.csv", "--degree", "4", "--spans", "27x27", "--output", "sinc.json"]);
    assert_eq!(code(&o), 0, "{o:?}");
    assert!(stdout(&o).starts_with("rms "));
}

#[test]
fn sinc_contour_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    sinc_model(d);
    let o = run(d, &["contour", "--model", "sinc.json", "--isovalue", "0.33", "--k", "4", "--output", "g.json", "--metrics", "m.json", "--segments", "s.csv"]);
    assert_eq!(code(&o), 0, "{o:?}");
    let r = row(&o);
    assert_eq!((r["loops"].as_str(), r["components"].as_str()), ("40", "60"));
    assert!(r["e_max"].parse::<f64>().unwrap() <= 1e-10);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("m.json")).unwrap()).unwrap();
    assert_eq!(m["loops"], 40);
    assert!(fs::read_to_string(d.join("s.csv")).unwrap().lines().count() > 2000);

    let o = run(d, &["metrics", "--graph", "g.json", "--kind", "contour", "--model", "sinc.json", "--isovalue", "0.33"]);
    assert_eq!(code(&o), 0, "{o:?}");
    let stored = row(&o);
    assert_eq!(stored["e_max"], r["e_max"]);
    assert_eq!(stored["loops"], "40");
}

#[test]
fn sweep_over_step_divisors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    sinc_model(d);
    let o = run(d, &["sweep", "--kind", "contour", "--model", "sinc.json", "--isovalue", "0.79", "--k-list", "2,4,8", "--output", "sweep.csv"]);
    assert_eq!(code(&o), 0, "{o:?}");
    let text = fs::read_to_string(d.join("sweep.csv")).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<mfa_topo::io::MetricsRow> = r.deserialize().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    for row in &rows[1..] {
        assert_eq!((row.loops, row.components), (28, 32));
    }
    assert_eq!(rows.iter().map(|r| r.step_divisor.unwrap()).collect::<Vec<_>>(), [2.0, 4.0, 8.0]);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    sinc_model(d);
    for t in ["1", "3"] {
        let out = format!("g{t}.json");
        let o = run(d, &["--threads", t, "contour", "--model", "sinc.json", "--isovalue", "0.79", "--output", &out]);
        assert_eq!(code(&o), 0, "{o:?}");
    }
    assert_eq!(fs::read(d.join("g1.json")).unwrap(), fs::read(d.join("g3.json")).unwrap());
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    sinc_model(d);
    fs::write(d.join("run.toml"), "model = \"sinc.json\"\nisovalue = 0.79\nk = 8\n").unwrap();
    let r = row(&run(d, &["--config", "run.toml", "contour"]));
    assert_eq!((r["level"].as_str(), r["step_divisor"].as_str(), r["loops"].as_str()), ("0.79", "8.0", "28"));
    let r = row(&run(d, &["--config", "run.toml", "contour", "--isovalue", "0.33"]));
    assert_eq!((r["level"].as_str(), r["loops"].as_str()), ("0.33", "40"));
    fs::write(d.join("bad.toml"), "isovalu = 1\n").unwrap();
    assert_eq!(code(&run(d, &["--config", "bad.toml", "contour"])), 3);
}

#[test]
fn gaussian_pair_jacobi_and_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for (field, out) in [("gaussian_pair_f", "f"), ("gaussian_pair_g", "g")] {
        assert_eq!(code(&run(d, &["synth", "--field", field, "--output", &format!("{out}.csv")])), 0);
        let o = run(d, &["fit", "--input", &format!("{out}.csv"), "--spans", "17x11", "--output", &format!("{out}.json")]);
        assert_eq!(code(&o), 0, "{o:?}");
    }
    let o = run(d, &["jacobi", "--model", "f.json", "--model-g", "g.json", "--k", "4"]);
    assert_eq!(code(&o), 0, "{o:?}");
    let r = row(&o);
    assert_eq!((r["loops"].as_str(), r["components"].as_str()), ("0", "2"));
    let o = run(d, &["baseline", "--kind", "jacobi", "--model", "f.json", "--model-g", "g.json", "--ratio", "4"]);
    assert_eq!(code(&o), 0, "{o:?}");
    let b = row(&o);
    assert_eq!(b["method"], "baseline");
    assert!(b["e_max"].parse::<f64>().unwrap() > 1e6 * r["e_max"].parse::<f64>().unwrap());
    assert_eq!(code(&run(d, &["jacobi", "--model", "f.json"])), 2);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("g.csv"), "3,3\n0,0,0\n0,1,0\n0,0,0\n").unwrap();
    assert_eq!(code(&run(d, &["fit", "--input", "g.csv", "--degree", "0", "--spans", "1x1", "--output", "m.json"])), 2);
    assert_eq!(code(&run(d, &["fit", "--input", "g.csv", "--spans", "1by1", "--output", "m.json"])), 2);
    assert_eq!(code(&run(d, &["frobnicate"])), 2);
    assert_eq!(code(&run(d, &["synth", "--field", "nope", "--output", "x.csv"])), 2);
    assert_eq!(code(&run(d, &["--threads", "0", "synth", "--field", "sinc", "--output", "x.csv"])), 2);
    assert_eq!(code(&run(d, &["--help"])), 0);
}

#[test]
fn missing_input_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["fit", "--input", "absent.csv", "--spans", "2x2", "--output", "m.json"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent.csv"));
}

#[test]
fn bad_parameters_exit_2_and_order_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = run(d, &["synth", "--field", "gaussian_mixture", "--nx", "41", "--ny", "41", "--output", "gm.csv"]);
    assert_eq!(code(&o), 0, "{o:?}");
    assert_eq!(code(&run(d, &["fit", "--input", "gm.csv", "--degree", "2", "--spans", "6x6", "--output", "q.json"])), 0);
    let o = run(d, &["ridge-valley", "--model", "q.json"]);
    assert_eq!(code(&o), 4, "{o:?}");
    assert_eq!(code(&run(d, &["contour", "--model", "q.json", "--isovalue", "0.5", "--k", "3"])), 2);
    assert_eq!(code(&run(d, &["contour", "--model", "q.json", "--isovalue", "0.5", "--gamma", "0.5"])), 2);
    assert_eq!(code(&run(d, &["contour", "--model", "q.json"])), 2);
    assert_eq!(code(&run(d, &["sweep", "--kind", "contour", "--model", "q.json", "--isovalue", "0.5", "--k-list", "4", "--epsilon-list", "1e-8"])), 2);
}
