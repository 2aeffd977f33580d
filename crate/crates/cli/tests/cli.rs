use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn hdmi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdmi"))
        .args(args)
        .env_remove("HDMI_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// 60 rows: outcome `y`, `signal = y^2`-ish, two noise columns, a binary
/// label, a three-valued column and a constant one.
fn fixture(dir: &TempDir) -> PathBuf {
    let mut s = String::from("y,signal,noise1,noise2,label,three,flat\n");
    for i in 0..60 {
        let t = i as f64 / 59.0 * 4.0 - 2.0;
        let n1 = ((i * 37 % 61) as f64 / 61.0) - 0.5;
        let n2 = ((i * 11 % 13) as f64 / 13.0) - 0.5;
        s.push_str(&format!("{t},{},{n1},{n2},{},{},1\n", t * t + 0.1 * n1, (i % 2), i % 3));
    }
    let p = dir.path().join("data.csv");
    fs::write(&p, s).unwrap();
    p
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap()
}

#[test]
fn screen_writes_one_row_per_feature() {
    let dir = TempDir::new().unwrap();
    let data = fixture(&dir);
    let out = dir.path().join("scores.csv");
    let json = dir.path().join("scores.json");
    let o = hdmi(&[
        "screen",
        "--input",
        path_str(&data),
        "--outcome-col",
        "y",
        "--output",
        path_str(&out),
        "--json",
        path_str(&json),
        "--workers",
        "2",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,name,score,raw,n_used,flag");
    assert_eq!(lines.len(), 1 + 6);
    assert!(text.contains(",flat,0,0,60,constant"));
    assert!(read(&json).contains("\"method\": \"fftkde\""));
    assert!(dir.path().join("scores.csv.timing.json").exists());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("screen: 6 features"));
}

#[test]
fn screen_results_are_reproducible_across_worker_counts() {
    let dir = TempDir::new().unwrap();
    let data = fixture(&dir);
    let mut outputs = Vec::new();
    for (w, method) in [("1", "knn"), ("3", "knn"), ("1", "fftkde"), ("4", "fftkde")] {
        let out = dir.path().join(format!("s{w}{method}.csv"));
        let o = hdmi(&[
            "screen", "--input", path_str(&data), "--outcome-col", "y", "--method", method, "--workers", w,
            "--seed", "5", "--output", path_str(&out),
        ]);
        assert_eq!(code(&o), 0);
        outputs.push(read(&out));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[2], outputs[3]);
}

#[test]
fn unknown_method_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let data = fixture(&dir);
    let out = dir.path().join("x.csv");
    let o = hdmi(&["screen", "--input", path_str(&data), "--outcome-col", "y", "--method", "magic", "--output", path_str(&out)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("possible values"));
    assert_eq!(code(&hdmi(&["frobnicate"])), 1);
    assert_eq!(code(&hdmi(&["--help"])), 0);
}

#[test]
fn three_valued_binary_outcome_is_data_error() {
    let dir = TempDir::new().unwrap();
    let data = fixture(&dir);
    let out = dir.path().join("x.csv");
    let o = hdmi(&[
        "screen", "--input", path_str(&data), "--outcome-col", "three", "--outcome-type", "binary", "--output",
        path_str(&out),
    ]);
    assert_eq!(code(&o), 2);
    let ok = hdmi(&[
        "screen", "--input", path_str(&data), "--outcome-col", "label", "--outcome-type", "binary", "--output",
        path_str(&out),
    ]);
    assert_eq!(code(&ok), 0);
}

#[test]
fn missing_input_is_data_error() {
    let o = hdmi(&["screen", "--input", "/nonexistent/data.csv", "--outcome-col", "y", "--output", "/tmp/never.csv"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("hdmi: error:"));
}

fn design(dir: &TempDir) -> PathBuf {
    let mut s = String::new();
    let cols = 30;
    s.push_str(&(0..cols).map(|j| format!("x{j}")).collect::<Vec<_>>().join(","));
    s.push('\n');
    let mut state: u64 = 12345;
    for _ in 0..200 {
        let row: Vec<String> = (0..cols)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                format!("{}", (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
            })
            .collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    let p = dir.path().join("design.csv");
    fs::write(&p, s).unwrap();
    p
}

#[test]
fn simulate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let data = design(&dir);
    let mut files = Vec::new();
    for run in 0..2 {
        let y = dir.path().join(format!("y{run}.csv"));
        let t = dir.path().join(format!("t{run}.csv"));
        let o = hdmi(&[
            "simulate", "--input", path_str(&data), "--p-true", "10", "--mode", "nonlinear", "--outcome", "continuous",
            "--seed", "7", "--output", path_str(&y), "--truth", path_str(&t),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        files.push((read(&y), read(&t)));
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0].0.lines().count(), 201);
    assert_eq!(files[0].1.lines().count(), 11);
}

#[test]
fn simulate_screen_evaluate_pipeline() {
    let dir = TempDir::new().unwrap();
    let data = design(&dir);
    let y = dir.path().join("y.csv");
    let t = dir.path().join("truth.csv");
    let s = dir.path().join("scores.csv");
    let e = dir.path().join("eval.csv");
    let o = hdmi(&[
        "simulate", "--input", path_str(&data), "--p-true", "3", "--snr-scaling", "per-observation", "--seed", "1",
        "--output", path_str(&y), "--truth", path_str(&t),
    ]);
    assert_eq!(code(&o), 0);
    let o = hdmi(&[
        "screen", "--input", path_str(&data), "--outcome-file", path_str(&y), "--method", "pearson", "--output",
        path_str(&s),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = hdmi(&["evaluate", "--scores", path_str(&s), "--truth", path_str(&t), "--output", path_str(&e)]);
    assert_eq!(code(&o), 0);
    let text = read(&e);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let auc: f64 = row[0].parse().unwrap();
    assert!(auc > 0.8, "AUROC {auc}");
    assert_eq!(row[2], "3");
}

#[test]
fn evaluate_perfect_ranking_and_single_class() {
    let dir = TempDir::new().unwrap();
    let scores = dir.path().join("scores.csv");
    fs::write(
        &scores,
        "index,name,score,raw,n_used,flag\n0,a,0.9,0.9,10,ok\n1,b,0.8,0.8,10,ok\n2,c,0.1,0.1,10,ok\n3,d,0.05,0.05,10,ok\n",
    )
    .unwrap();
    let truth = dir.path().join("truth.csv");
    fs::write(&truth, "index,name,beta\n0,a,1.2\n1,b,0.7\n").unwrap();
    let out = dir.path().join("eval.csv");
    let o = hdmi(&["evaluate", "--scores", path_str(&scores), "--truth", path_str(&truth), "--output", path_str(&out)]);
    assert_eq!(code(&o), 0);
    assert!(read(&out).lines().nth(1).unwrap().starts_with("1,4,2,2,2,0,0"));

    let all = dir.path().join("all.csv");
    fs::write(&all, "index,name,beta\n0,a,1\n1,b,1\n2,c,1\n3,d,1\n").unwrap();
    let o = hdmi(&["evaluate", "--scores", path_str(&scores), "--truth", path_str(&all), "--output", path_str(&out)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn convert_then_screen_binary_matches_csv() {
    let dir = TempDir::new().unwrap();
    let data = fixture(&dir);
    let bin = dir.path().join("data.hdmi");
    let o = hdmi(&["convert", "--input", path_str(&data), "--output", path_str(&bin)]);
    assert_eq!(code(&o), 0);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (input, out) in [(&data, &a), (&bin, &b)] {
        let o = hdmi(&["screen", "--input", path_str(input), "--outcome-col", "y", "--method", "binning", "--output", path_str(out)]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(read(&a), read(&b));
}

#[test]
fn bench_reports_cells_and_rejects_zero_replications() {
    let dir = TempDir::new().unwrap();
    let data = fixture(&dir);
    let out = dir.path().join("bench.csv");
    let o = hdmi(&[
        "bench", "--input", path_str(&data), "--outcome-col", "y", "--methods", "pearson,binning", "--fractions",
        "0.5,1", "--replications", "2", "--output", path_str(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out);
    assert_eq!(text.lines().count(), 1 + 4);
    assert!(text.starts_with("method,fraction,features,mean_seconds,ci_half_width,R"));

    let o = hdmi(&[
        "bench", "--input", path_str(&data), "--outcome-col", "y", "--replications", "0", "--output", path_str(&out),
    ]);
    assert_eq!(code(&o), 1);
    let o = hdmi(&[
        "bench", "--input", path_str(&data), "--outcome-col", "y", "--fractions", "1.5", "--output", path_str(&out),
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn workers_default_from_environment() {
    let dir = TempDir::new().unwrap();
    let data = fixture(&dir);
    let out = dir.path().join("s.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_hdmi"))
        .args(["screen", "--input", path_str(&data), "--outcome-col", "y", "--method", "pearson", "--output", path_str(&out)])
        .env("HDMI_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("2 workers"));
}
