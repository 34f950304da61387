use std::path::PathBuf;
use std::process::{Command, Output};

fn program(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/programs").join(format!("{name}.pcf"))
}

fn memgoi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memgoi")).args(args).env_remove("MSIAM_SEED").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("memgoi-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn values<'a>(report: &'a str, key: &str) -> Vec<&'a str> {
    report.lines().filter_map(|l| l.strip_prefix(key)?.strip_prefix(": ")).collect()
}

#[test]
fn coin_agrees_on_all_engines() {
    let coin = program("coin");
    let o = memgoi(&["--engine", "all", "--backend", "quantum", "--horizon", "200", coin.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let ps = values(&out, "probability");
    assert_eq!(ps.len(), 3, "{out}");
    for p in ps {
        assert!(p.parse::<f64>().unwrap() >= 1.0 - 1e-9, "{out}");
    }
    assert_eq!(values(&out, "engine"), vec!["pcf", "net", "msiam"]);
    assert_eq!(values(&out, "agree"), vec!["true"]);
    for d in out.lines().filter_map(|l| l.strip_prefix("delta ")) {
        let v: f64 = d.rsplit(": ").next().unwrap().parse().unwrap();
        assert!(v < 1e-9, "{out}");
    }
}

#[test]
fn bell_distribution_table() {
    let o = memgoi(&["--engine", "net", program("bell").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(values(&out, "outcomes"), vec!["2"]);
    let rows: Vec<(f64, &str)> = out
        .lines()
        .filter(|l| l.starts_with("  "))
        .map(|l| {
            let mut it = l.split_whitespace();
            (it.next().unwrap().parse().unwrap(), it.next().unwrap())
        })
        .collect();
    let mut names: Vec<&str> = rows.iter().map(|r| r.1).collect();
    names.sort();
    assert_eq!(names, vec!["00", "11"]);
    assert!(rows.iter().all(|(p, _)| (p - 0.5).abs() < 1e-9));
    assert!(rows[0].0 >= rows[1].0);
}

#[test]
fn reports_are_deterministic() {
    let p = program("coins_pair");
    let args = ["--check-diamond", "8", p.to_str().unwrap()];
    assert_eq!(memgoi(&args).stdout, memgoi(&args).stdout);
}

#[test]
fn backend_comes_from_the_header_unless_given() {
    let p = program("max");
    let out = stdout(&memgoi(&["--engine", "pcf", p.to_str().unwrap()]));
    assert_eq!(values(&out, "backend"), vec!["int"]);
    let plain = scratch("plain.pcf", "H new");
    let out = stdout(&memgoi(&["--engine", "pcf", plain.to_str().unwrap()]));
    assert_eq!(values(&out, "backend"), vec!["quantum"]);
    let o = memgoi(&["--engine", "pcf", "--backend", "prob", plain.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "H is an unbound variable without the quantum gates");
}

#[test]
fn ill_typed_programs_exit_with_3() {
    let p = scratch("dup.pcf", "-- backend: int\n(\\x. <x, x>) new");
    let o = memgoi(&[p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("type error"));
    assert!(o.stdout.is_empty());
}

#[test]
fn parse_errors_and_missing_files_exit_with_2() {
    let p = scratch("broken.pcf", "(\\x. ");
    assert_eq!(memgoi(&[p.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(memgoi(&["/nonexistent/program.pcf"]).status.code(), Some(2));
    assert_eq!(memgoi(&["--horizon", "0", p.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(memgoi(&["--tol", "-1", p.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn disagreement_beyond_tol_exits_with_4() {
    let coin = program("coin");
    let o = memgoi(&["--tol", "1e-30", "--horizon", "40", coin.to_str().unwrap()]);
    let out = stdout(&o);
    let worst = out
        .lines()
        .filter_map(|l| l.strip_prefix("delta "))
        .map(|d| d.rsplit(": ").next().unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    if worst > 1e-30 {
        assert_eq!(values(&out, "agree"), vec!["false"]);
        assert_eq!(o.status.code(), Some(4));
    } else {
        assert_eq!(o.status.code(), Some(0));
    }
}

#[test]
fn diamond_check_uses_the_seed() {
    let p = program("dup");
    let o = Command::new(env!("CARGO_BIN_EXE_memgoi"))
        .args(["--engine", "msiam", "--check-diamond", "12", p.to_str().unwrap()])
        .env("MSIAM_SEED", "41")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(values(&out, "diamond seed"), vec!["41"]);
    assert!(out.contains("diamond msiam: pass"), "{out}");

    let o = Command::new(env!("CARGO_BIN_EXE_memgoi"))
        .args(["--check-diamond", "3", p.to_str().unwrap()])
        .env("MSIAM_SEED", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn custom_gates_and_dumps() {
    let gates = scratch("gates.txt", "# Pauli Y\nY2, 1, 0, -i, i, 0\n");
    let p = scratch("y.pcf", "-- backend: quantum\nY2 new");
    let o = memgoi(&["--gates", gates.to_str().unwrap(), "--dump-net", "--trace", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("sync[Y2]"), "{out}");
    assert!(out.contains("link"), "{out}");
    assert!(out.contains("  1.000000000000  1"), "{out}");

    let bad = scratch("bad_gates.txt", "Q, 1, 1, 1, 1, 1\n");
    assert_eq!(memgoi(&["--gates", bad.to_str().unwrap(), p.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn divergent_programs_report_truncation() {
    let o = memgoi(&["--engine", "pcf", "--horizon", "3", "--fuel", "500", program("omega").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(values(&out, "truncated"), vec!["true"]);
    assert_eq!(values(&out, "probability"), vec!["0.000000000000"]);
    assert_eq!(values(&out, "outcomes"), vec!["0"]);
}
