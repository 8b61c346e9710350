use std::io::Write;
use std::process::{Command, Output};

fn odss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odss")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn graph_file() -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "# small test graph").unwrap();
    for line in ["0 1 0.5", "1 2 0.5", "0 2 0.3", "2 3 0.9", "3 0 0.2", "1 3 0.7"] {
        writeln!(f, "{line}").unwrap();
    }
    f.flush().unwrap();
    f
}

#[test]
fn bench_query_writes_csv() {
    let o = odss(&["bench-query", "--method", "odss", "--n", "2000", "--mu", "3", "--repeats", "50", "--seed", "9"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("method,n,mu,metric,value,seed"));
    let rows: Vec<_> = lines.collect();
    assert!(!rows.is_empty());
    for row in rows {
        let fields: Vec<_> = row.split(',').collect();
        assert_eq!(fields.len(), 6);
        assert_eq!(fields[0], "odss");
        assert_eq!(fields[1], "2000");
        assert_eq!(fields[5], "9");
        assert!(fields[4].parse::<f64>().is_ok());
    }
    assert!(!text.contains('\r'));
}

#[test]
fn bench_update_and_tradeoff() {
    let o = odss(&["bench-update", "--method", "hybrid", "--n", "500", "--updates", "20"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("update_ns"));

    let o = odss(&[
        "tradeoff", "--method", "naive,odss,basic", "--n", "500", "--repeats", "5", "--updates", "10", "--jobs", "2",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let methods: Vec<_> = text.lines().skip(1).map(|l| l.split(',').next().unwrap().to_string()).collect();
    let first_odss = methods.iter().position(|m| m == "odss").unwrap();
    assert!(methods[..first_odss].iter().all(|m| m == "naive"));
    assert!(text.lines().any(|l| l.starts_with("odss,") && l.contains(",update_ns,")));
    assert!(!text.lines().any(|l| l.starts_with("basic,") && l.contains(",update_ns,")));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("err.csv");
    let o = odss(&[
        "error-test", "--n", "200", "--mu", "2", "--repeats", "2000", "--updates", "50", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let records = odss::harness::read_csv(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].metric, "max_abs_error");
    assert!(records[0].value > 0.0 && records[0].value < 0.1);
}

#[test]
fn graph_dumps_are_deterministic() {
    let g = graph_file();
    let path = g.path().to_str().unwrap();
    for cmd in ["world", "rrset"] {
        let a = odss(&[cmd, "--graph", path, "--count", "50", "--seed", "4"]);
        let b = odss(&[cmd, "--graph", path, "--count", "50", "--seed", "4"]);
        let c = odss(&[cmd, "--graph", path, "--count", "50", "--seed", "5"]);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout);
        assert_ne!(a.stdout, c.stdout);
        assert_eq!(stdout(&a).lines().count(), 50);
    }
    let rr = odss(&["rrset", "--graph", path, "--count", "20", "--scale", "out_sum_1"]);
    for line in stdout(&rr).lines() {
        let ids: Vec<u32> = line.split(' ').map(|t| t.parse().unwrap()).collect();
        assert!(!ids.is_empty() && ids.iter().all(|&v| v < 4));
    }
    let world = odss(&["world", "--graph", path, "--count", "5", "--format", "csv"]);
    assert!(stdout(&world).starts_with("sample,u,v\n"));
}

#[test]
fn exit_codes() {
    assert_eq!(odss(&["--version"]).status.code(), Some(0));
    assert_eq!(odss(&["bench-query", "--dist", "cauchy"]).status.code(), Some(1));
    assert_eq!(odss(&["rrset"]).status.code(), Some(1));
    let o = odss(&["rrset", "--graph", "/does/not/exist"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}
