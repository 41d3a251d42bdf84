use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_valley-shuttle")).args(args).current_dir(cwd).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const SMALL: &str = "kind = \"transfer-sweep\"\nseed = 5\nn = 3\n[transfer]\nepsilon0 = [500.0]\nt0 = [100.0, 150.0]\ntau_tot = [10.0]\n";

#[test]
fn successful_sweep_exits_zero_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let a = cli(&["transfer-sweep", "--config", &cfg, "--out", "a", "--jobs", "1"], dir.path());
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = cli(&["transfer-sweep", "--config", &cfg, "--out", "b", "--jobs", "3"], dir.path());
    assert_eq!(b.status.code(), Some(0));
    let ra = std::fs::read(dir.path().join("a/records.csv")).unwrap();
    assert_eq!(ra, std::fs::read(dir.path().join("b/records.csv")).unwrap());
    assert_eq!(String::from_utf8(ra).unwrap().lines().count(), 7);

    let s = cli(&["summarize", "a/records.csv", "--out", "s.csv"], dir.path());
    assert_eq!(s.status.code(), Some(0), "{}", String::from_utf8_lossy(&s.stderr));
    let table = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    cli(&["transfer-sweep", "--config", &cfg, "--out", "a"], dir.path());
    cli(&["transfer-sweep", "--config", &cfg, "--out", "b", "--seed", "6"], dir.path());
    let (a, b) = (
        std::fs::read(dir.path().join("a/records.csv")).unwrap(),
        std::fs::read(dir.path().join("b/records.csv")).unwrap(),
    );
    assert_ne!(a, b);
    let summary = std::fs::read_to_string(dir.path().join("b/summary.json")).unwrap();
    assert!(summary.contains("\"seed\": 6"));
}

#[test]
fn failed_records_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "kind = \"leakage-2d\"\nn = 2\n[shuttle]\nt0 = [5.0]\ndistance_um = 0.2\n");
    let o = cli(&["leakage-2d", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let text = std::fs::read_to_string(dir.path().join("o/records.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn bad_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "kind = \"transfer-sweep\"\n[transfer]\nsigma = 1\n");
    let o = cli(&["transfer-sweep", "--config", &bad], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let cfg = write(dir.path(), "c.toml", SMALL);
    assert_eq!(cli(&["moving-sweep", "--config", &cfg], dir.path()).status.code(), Some(2));
    assert_eq!(cli(&["transfer-sweep", "--preset", "nope"], dir.path()).status.code(), Some(2));

    let rows = write(dir.path(), "r.csv", "point,realization,seed,fidelity,success,error\n0,0,1,x,1,\n");
    let s = cli(&["summarize", &rows], dir.path());
    assert_eq!(s.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&s.stderr).contains(":2:"));
}
