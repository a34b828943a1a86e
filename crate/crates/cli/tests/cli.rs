use std::path::Path;
use std::process::{Command, Output};

fn rmsched(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmsched")).current_dir(dir).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn gen_tiny(dir: &Path) {
    let out = rmsched(dir, &["gen", "--orders", "5", "--machines", "2", "--configs", "2", "--seed", "9", "--out", "i.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn solve_validate_gantt_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen_tiny(d);
    let out = rmsched(d, &["solve", "i.json", "--mp-gap", "0", "--out", "s.json", "--log", "log.csv"]);
    assert_eq!(code(&out), 0);
    let oracle = rmsched(d, &["solve", "i.json", "--method", "oracle", "--out", "o.json"]);
    assert_eq!(code(&oracle), 0);
    let makespan = |f: &str| -> u64 {
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join(f)).unwrap()).unwrap();
        v["makespan"].as_u64().unwrap()
    };
    assert_eq!(makespan("s.json"), makespan("o.json"));
    let log = std::fs::read_to_string(d.join("log.csv")).unwrap();
    assert!(log.starts_with("iter,mp_obj,max_sp,ub,lb,wall_ms\n1,"));

    assert_eq!(code(&rmsched(d, &["validate", "i.json", "s.json"])), 0);
    assert_eq!(code(&rmsched(d, &["gantt", "i.json", "s.json", "--out", "g.svg"])), 0);
    assert!(std::fs::read_to_string(d.join("g.svg")).unwrap().starts_with("<svg"));
    assert_eq!(code(&rmsched(d, &["export-lp", "i.json", "--out", "m.lp", "--mip-start", "m.sol"])), 0);
    assert!(std::fs::read_to_string(d.join("m.lp")).unwrap().contains("Minimize"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&rmsched(d, &["solve", "missing.json"])), 1);
    assert_eq!(code(&rmsched(d, &["gen", "--orders", "0"])), 1);
    assert_eq!(code(&rmsched(d, &["frobnicate"])), 1);
    assert_eq!(code(&rmsched(d, &["--help"])), 0);

    std::fs::write(d.join("bad.json"), r#"{"orders": [], "machines": [], "batch_slots": 1, "x": 0}"#).unwrap();
    assert_eq!(code(&rmsched(d, &["validate", "bad.json"])), 1);

    assert_eq!(code(&rmsched(d, &["gen", "--orders", "12", "--out", "big.json"])), 0);
    let refused = rmsched(d, &["solve", "big.json", "--method", "oracle"]);
    assert_eq!(code(&refused), 3);
    assert!(String::from_utf8_lossy(&refused.stderr).contains("at most 7"));

    // A schedule whose stated makespan is wrong.
    gen_tiny(d);
    assert_eq!(code(&rmsched(d, &["solve", "i.json", "--method", "warmstart", "--out", "w.json"])), 0);
    let text = std::fs::read_to_string(d.join("w.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["makespan"] = serde_json::json!(1);
    std::fs::write(d.join("w.json"), v.to_string()).unwrap();
    assert_eq!(code(&rmsched(d, &["validate", "i.json", "w.json"])), 1);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("cfg.json"), r#"{"orders": 4, "machines": 1, "configs": 2, "gen": {"seed": 3}}"#).unwrap();
    assert_eq!(code(&rmsched(d, &["gen", "--config", "cfg.json", "--out", "a.json"])), 0);
    assert_eq!(code(&rmsched(d, &["gen", "--orders", "4", "--machines", "1", "--configs", "2", "--seed", "3", "--out", "b.json"])), 0);
    assert_eq!(std::fs::read(d.join("a.json")).unwrap(), std::fs::read(d.join("b.json")).unwrap());
    assert_eq!(code(&rmsched(d, &["gen", "--config", "cfg.json", "--orders", "6", "--out", "c.json"])), 0);
    let c: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("c.json")).unwrap()).unwrap();
    assert_eq!(c["orders"].as_array().unwrap().len(), 6);
    std::fs::write(d.join("bad.json"), r#"{"colour": 1}"#).unwrap();
    assert_eq!(code(&rmsched(d, &["gen", "--config", "bad.json"])), 1);
}

#[test]
fn bench_and_sweep_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen_tiny(d);
    let out = rmsched(d, &["bench", "i.json", "--methods", "lbbd,warmstart,oracle", "--mp-gap", "0", "--out", "b.csv"]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(d.join("b.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "instance,size,method,best_lb,best_obj,obj,gap,rpd,wall_ms,proven_optimal,error");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("i,5-2-2,oracle,") && lines[3].contains(",0.00,0.00,"));

    let args = ["sweep", "--axis", "reconfig", "--levels", "0.5,1", "--replications", "2", "--orders", "5", "--machines", "2", "--configs", "2", "--mp-gap", "0"];
    let first = rmsched(d, &args);
    assert_eq!(code(&first), 0);
    let text = String::from_utf8(first.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert_eq!(text, String::from_utf8(rmsched(d, &args).stdout).unwrap());
}
