//! End-to-end checks of the binary: exit codes, output schemas, byte
//! determinism, and the sieve cache lifecycle.

use std::process::{Command, Output};

use divisum::empirical::{shifted_convolution_sum, triple_convolution_sum};
use divisum::arith::DivisorParams;

fn divisum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divisum"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf8 stderr")
}

#[test]
fn constant_json_is_deterministic_and_names_the_special_factor() {
    let args = ["constant", "--h", "1", "--k", "2", "--l", "2", "--m", "2", "--prime-cutoff", "2000"];
    let first = divisum(&args);
    assert!(first.status.success(), "{}", stderr(&first));
    let text = stdout(&first);
    assert!(text.starts_with('{') && text.ends_with("}\n"));
    for field in ["\"nabla\":", "\"error_bound\":", "\"prime_cutoff\":2000", "\"factors\":[{\"p\":2,"] {
        assert!(text.contains(field), "missing {field} in {text}");
    }
    // the lone special factor at h=1 approaches 11/16
    let num: f64 = text.split("\"value_num\":\"").nth(1).unwrap().split('"').next().unwrap().parse().unwrap();
    let den: f64 = text.split("\"value_den\":\"").nth(1).unwrap().split('"').next().unwrap().parse().unwrap();
    assert!((num / den - 11.0 / 16.0).abs() < 1e-12);

    let again = divisum(&args);
    assert_eq!(first.stdout, again.stdout, "rerun changed bytes");
}

#[test]
fn thread_count_does_not_change_bytes() {
    let base = ["triple", "--h", "1", "--k", "2", "--l", "2", "--m", "2",
        "--x-grid", "100,1000", "--prime-cutoff", "500"];
    let mut one = base.to_vec();
    one.extend(["--threads", "1"]);
    let mut two = base.to_vec();
    two.extend(["--threads", "2"]);
    let a = divisum(&one);
    let b = divisum(&two);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn constant_rejects_zero_shift() {
    let out = divisum(&["constant", "--h", "0", "--k", "2", "--l", "2", "--m", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("h must be >= 1"), "{}", stderr(&out));
}

#[test]
fn triple_grid_below_shift_is_rejected() {
    let out = divisum(&["triple", "--h", "10", "--k", "2", "--l", "2", "--m", "2", "--x-grid", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn triple_rows_match_library_sums() {
    let out = divisum(&["triple", "--h", "1", "--k", "2", "--l", "2", "--m", "2",
        "--x-grid", "100,1000", "--prime-cutoff", "500"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,h,k,l,m,sum,main_term,ratio"));
    let params = DivisorParams::new(2, 2, 2, 1).unwrap();
    for (line, x) in lines.zip([100u64, 1000]) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 8);
        assert_eq!(cols[0], x.to_string());
        let want = triple_convolution_sum(&params, x).unwrap();
        assert_eq!(cols[5], want.to_string(), "sum at x={x}");
        let ratio: f64 = cols[7].parse().unwrap();
        assert!(ratio.is_finite() && ratio > 0.0);
    }
}

#[test]
fn shifted_row_matches_library_and_carries_main_term() {
    let out = divisum(&["shifted", "--h", "1", "--k", "2", "--l", "2", "--x", "1e4"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let row = text.lines().nth(1).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    let want = shifted_convolution_sum(2, 2, 1, 10_000).unwrap();
    assert_eq!(cols[4], want.to_string());
    let ratio: f64 = cols[6].parse().unwrap();
    assert!((0.5..1.5).contains(&ratio));
}

#[test]
fn additive_small_total() {
    let out = divisum(&["additive", "--x", "4"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let row = stdout(&out).lines().nth(1).unwrap().to_string();
    assert!(row.starts_with("4,8,"), "{row}");
}

#[test]
fn lcm_series_emits_exact_rationals() {
    let csv = divisum(&["lcm-series", "--h", "1", "--k", "2", "--l", "2", "--m", "2", "--x", "2"]);
    assert!(csv.status.success(), "{}", stderr(&csv));
    assert_eq!(stdout(&csv).lines().nth(1), Some("1,2,2,2,2,3,1"));
    let json = divisum(&["lcm-series", "--h", "1", "--k", "2", "--l", "2", "--m", "2", "--x", "2",
        "--format", "json"]);
    assert!(stdout(&json).contains("\"numerator\":\"3\",\"denominator\":\"1\""));
}

#[test]
fn expectations_rows_stay_close_to_closed_forms() {
    let out = divisum(&["expectations", "--p", "2,3", "--h", "2", "--k", "2", "--l", "2", "--m", "2",
        "--x", "1e4"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "p,h,k,l,m,x,empirical,closed_form,rel_error");
    assert_eq!(lines.len(), 3);
    for line in &lines[1..] {
        let rel: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(rel < 0.05, "{line}");
    }
}

#[test]
fn verify_suites_pass_on_healthy_data() {
    let cpsi = divisum(&["verify", "c-psi", "--h-max", "6", "--kl-max", "3"]);
    assert!(cpsi.status.success(), "{}", stderr(&cpsi));
    assert!(stdout(&cpsi).starts_with("PASS c-psi:"));
    let integral = divisum(&["verify", "integral", "--r", "4", "--x", "10"]);
    assert!(integral.status.success(), "{}", stderr(&integral));
    assert!(stdout(&integral).contains("PASS integral"));
}

#[test]
fn verify_expectations_reports_threshold_breach() {
    let out = divisum(&["verify", "expectations", "--p", "3", "--x", "1e4", "--tol", "1e-9"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL expectations:"));
    assert!(stderr(&out).contains("worst rel_error"));
}

#[test]
fn sieve_cache_builds_reuses_and_invalidates() {
    let dir = tempfile::tempdir().unwrap();
    let dir_arg = dir.path().to_str().unwrap();
    let args = ["sieve-cache", "--k", "2", "--x", "4000", "--cache-dir", dir_arg];
    let built = divisum(&args);
    assert!(built.status.success(), "{}", stderr(&built));
    assert!(stdout(&built).starts_with("built d_2 table"));
    let path = dir.path().join("dk2-1-4000.dktb");
    assert!(path.exists());

    let reused = divisum(&args);
    assert!(stdout(&reused).starts_with("cached d_2 table"), "{}", stdout(&reused));

    let mut bytes = std::fs::read(&path).unwrap();
    bytes[4] = 99; // clobber the format version
    std::fs::write(&path, &bytes).unwrap();
    let rebuilt = divisum(&args);
    assert!(stdout(&rebuilt).starts_with("built d_2 table"), "{}", stdout(&rebuilt));

    let mut f = std::fs::File::open(&path).unwrap();
    let (k, table) = divisum::sieve::read_dktb(&mut f).unwrap();
    assert_eq!(k, 2);
    assert_eq!(table.get(6), 4);
    assert_eq!(table.values.len(), 4000);
}

#[test]
fn out_flag_redirects_everything() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nabla.json");
    let args = ["constant", "--h", "2", "--k", "2", "--l", "2", "--m", "2",
        "--prime-cutoff", "1000", "--out", path.to_str().unwrap()];
    let redirected = divisum(&args);
    assert!(redirected.status.success(), "{}", stderr(&redirected));
    assert!(redirected.stdout.is_empty());
    let from_file = std::fs::read(&path).unwrap();
    let direct = divisum(&args[..args.len() - 2]);
    assert_eq!(from_file, direct.stdout);
}
