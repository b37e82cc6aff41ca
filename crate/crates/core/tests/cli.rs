use std::path::Path;
use std::process::Command;

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_astm-bench"))
}

fn strip_wall_time(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            let mut fields: Vec<&str> = line.split(',').collect();
            if fields.len() == 12 {
                fields[8] = "-";
            }
            fields.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn write_manifest(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("m.json");
    std::fs::write(
        &path,
        r#"{"id":"cli","family":"euclidean","p":9,"gammas":[0.5,0.2],"accuracies":[0.1],
            "solvers":["pdastm","pdastm-warm","stm","sinkhorn","sinkhorn-log"],"repetitions":2,"seed":4}"#,
    )
    .unwrap();
    path
}

#[test]
fn run_is_deterministic_and_report_rebuilds_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(dir.path());
    let mut csvs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let status = bench().arg("run").arg(&manifest).arg("--out").arg(&out).status().unwrap();
        assert!(status.success());
        assert!(out.join("walltime_p9_acc0.1.svg").exists());
        assert!(out.join("summary.csv").exists());
        csvs.push(std::fs::read_to_string(out.join("records.csv")).unwrap());
    }
    assert_eq!(strip_wall_time(&csvs[0]), strip_wall_time(&csvs[1]));
    assert_eq!(csvs[0].lines().count(), 1 + 5 * 2 * 2);

    let a = dir.path().join("a");
    std::fs::remove_file(a.join("walltime_p9_acc0.1.svg")).unwrap();
    let status = bench().arg("report").arg(&a).args(["--format", "svg"]).status().unwrap();
    assert!(status.success());
    assert!(a.join("walltime_p9_acc0.1.svg").exists());
}

#[test]
fn seed_flag_overrides_manifest_seed() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(dir.path());
    let out = dir.path().join("s");
    let status = bench().arg("run").arg(&manifest).args(["--seed", "77", "--format", "csv", "--out"]).arg(&out).status().unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out.join("records.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| {
        let seed = l.split(',').nth(5).unwrap();
        seed == "77" || seed == "78"
    }));
}

#[test]
fn gen_writes_a_loadable_instance() {
    let dir = tempfile::tempdir().unwrap();
    let output = bench()
        .args(["gen", "--family", "exp-euclidean", "--p", "16", "--gamma", "0.2", "--seed", "3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let manifest = String::from_utf8(output.stdout).unwrap();
    let inst = astm::oracles::io::read_instance(Path::new(manifest.trim())).unwrap();
    assert_eq!(inst.p(), 16);
    assert_eq!(inst.gamma(), 0.2);
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"id":"x","family":"euclidean","p":10,"gammas":[0.1],"accuracies":[0.1],"solvers":["pdastm"]}"#).unwrap();
    let output = bench().arg("run").arg(&path).output().unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("perfect square"));
    assert!(!bench().args(["run", "missing.json", "--format", "pdf"]).status().unwrap().success());
}
