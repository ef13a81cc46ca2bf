use std::path::Path;
use std::process::{Command, Output};

fn amie(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amie")).args(args).current_dir(cwd).output().expect("spawn amie")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&amie(&["no-latent", "--bogus"], dir.path())), 1);
    assert_eq!(code(&amie(&["no-latent", "--alpha", "2"], dir.path())), 1);
    assert_eq!(code(&amie(&["inducing-count", "--format", "xml"], dir.path())), 1);
    assert_eq!(code(&amie(&["--help"], dir.path())), 0);
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = amie(&["explain", "--data", "absent.csv"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent.csv"));
}

#[test]
fn gen_then_explain() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = amie(&["gen", "--nodes", "12", "--density", "1.5", "--samples", "2000", "--seed", "4", "--out", "w"], p);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for model in ["logreg", "oracle"] {
        let o = amie(&["explain", "--data", "w/data.csv", "--net", "w/net.txt", "--model", model, "--out", "r"], p);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(p.join(format!("r/report_{model}.json"))).unwrap()).unwrap();
        assert_eq!(report["features"].as_array().unwrap().len(), 11);
    }
    let lr: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p.join("r/model_logreg.json")).unwrap()).unwrap();
    assert_eq!(lr["coefficients"].as_array().unwrap().len(), 11);

    // the oracle without the network is a usage error
    assert_eq!(code(&amie(&["explain", "--data", "w/data.csv", "--model", "oracle"], p)), 1);
}

#[test]
fn config_file_with_flag_override_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("run.conf"), "# small grid\nnodes = 12\ndensity = 1\nlatents = 0,2\nreplicates = 3\n")
        .unwrap();
    let o = amie(&["inducing-count", "--config", "run.conf", "--replicates", "5", "--out", "out"], p);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let path = p.join("out/inducing-count.json");
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let cells = v["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 2);
    assert!(cells.iter().all(|c| c["replicates"] == 5));

    assert_eq!(code(&amie(&["check", "out/inducing-count.json"], p)), 0);
    v["cells"][1]["dags_with_path"] = serde_json::json!(99);
    std::fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(code(&amie(&["check", "out/inducing-count.json"], p)), 3);

    std::fs::write(p.join("bad.conf"), "colour = red\n").unwrap();
    assert_eq!(code(&amie(&["inducing-count", "--config", "bad.conf"], p)), 1);
}

#[test]
fn grid_run_writes_csv_and_clears_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let args: Vec<&str> =
        "no-latent --nodes 10 --density 1 --replicates 2 --samples 600 --model logreg --format csv --out g"
            .split(' ')
            .collect();
    let o = amie(&args, p);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(p.join("g/no-latent_summary.csv")).unwrap();
    assert!(summary.starts_with("nodes,density,latents,model"));
    assert_eq!(summary.lines().count(), 2);
    assert!(!p.join("g/no-latent.checkpoint.jsonl").exists());
}
