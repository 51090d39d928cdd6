use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn layerflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_layerflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn path(name: &str) -> String {
    fixture(name).to_str().unwrap().to_owned()
}

#[test]
fn validate_ok_fixture() {
    let out = layerflow(&["validate", &path("valid_2step.yaml")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["class"], "ok");
}

#[test]
fn validate_reports_logic_error() {
    let out = layerflow(&["validate", &path("dangling_ref.yaml")]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["class"], "YAML_LOGIC_INVALID");
    assert_eq!(v["rule"], "dangling-ref");
    assert_eq!(v["location"]["agent"], "coder_1");
}

#[test]
fn validate_reads_fenced_text_and_forced_kind() {
    let out = layerflow(&["validate", &path("policy_output.txt")]);
    assert_eq!(out.status.code(), Some(0));
    // the same text read as bare YAML is not a topology
    let out = layerflow(&["validate", "--as", "yaml", &path("policy_output.txt")]);
    assert_eq!(out.status.code(), Some(1));
    assert_ne!(json(&out)["class"], "ok");
}

#[test]
fn validate_missing_file_is_usage_error() {
    let out = layerflow(&["validate", "/nonexistent/topology.yaml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn score_matches_density_oracle() {
    let out = layerflow(&["score", &path("valid_2step.yaml"), "--difficulty", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    // |V| = 2, |E| = 1, s = 2, N_max = 4
    let oracle = ((-2.0f64 / 4.0).exp() + 2.0 * (-1.0f64 / (2.0 * 1.5)).exp() + (1.0 - 2.0 / 2.0)).exp();
    let got = v["s_complex"].as_f64().unwrap();
    assert!((got - oracle).abs() <= 1e-12 * oracle, "{got} vs {oracle}");
    assert_eq!(v["n_max"], 4);
    assert_eq!(v["v_count"], 2);
}

#[test]
fn score_with_cost() {
    let out = layerflow(&[
        "score",
        &path("valid_2step.yaml"),
        "--message-tokens",
        "100",
        "--prev-nodes",
        "3",
    ]);
    let v = json(&out);
    // 100 * (2 + 2*3 + 2*1)
    assert_eq!(v["cost"]["total"], 1000);
}

#[test]
fn score_of_invalid_topology_exits_one() {
    let out = layerflow(&["score", &path("dangling_ref.yaml")]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["class"], "YAML_LOGIC_INVALID");
}

#[test]
fn grpo_adv_example() {
    let out = layerflow(&["grpo", "adv", "--returns", "[1,2,3,4]"]);
    assert_eq!(out.status.code(), Some(0));
    let got: Vec<f64> = serde_json::from_slice(&out.stdout).unwrap();
    let want = [-1.341641, -0.447214, 0.447214, 1.341641];
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 5e-7, "{got:?}");
    }
}

#[test]
fn grpo_adv_floats_have_17_significant_digits() {
    let out = layerflow(&["grpo", "adv", "--returns", "[1,2,3,4]"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.trim(),
        "[-1.3416407864998738,-0.44721359549995793,0.44721359549995793,1.3416407864998738]"
    );
}

#[test]
fn grpo_adv_rejects_bad_input() {
    assert_eq!(layerflow(&["grpo", "adv", "--returns", "[1]"]).status.code(), Some(2));
    assert_eq!(layerflow(&["grpo", "adv", "--returns", "oops"]).status.code(), Some(2));
}

#[test]
fn grpo_surrogate_kl_case() {
    let out = layerflow(&["grpo", "surrogate", &path("surrogate_kl.json")]);
    assert_eq!(out.status.code(), Some(0));
    let j = json(&out)["objective"].as_f64().unwrap();
    assert!((j - -0.1).abs() < 1e-12);
}

#[test]
fn reward_composition() {
    let out = layerflow(&["reward", &path("reward_wa_pass.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let rewards: Vec<f64> = serde_json::from_value(v["rewards"].clone()).unwrap();
    assert!((rewards[0] - 11.355902).abs() < 5e-6);
    assert!((rewards[1] - (1.5 + 8.837054)).abs() < 5e-6);
    let ret = v["return"].as_f64().unwrap();
    assert!((ret - (rewards[0] + rewards[1])).abs() < 1e-12);
}

#[test]
fn reward_penalties_from_stdin() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_layerflow"))
        .args(["reward", "-"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    use std::io::Write;
    child
        .stdin
        .take()
        .unwrap()
        .write_all(br#"{"turns":[{"yaml_error":"NO_YAML_FOUND"},{"yaml_error":"YAML_LOGIC_INVALID"}]}"#)
        .unwrap();
    let out = child.wait_with_output().unwrap();
    let v = json(&out);
    assert_eq!(v["rewards"], serde_json::json!([-2, -0.5]));
    assert_eq!(v["return"], serde_json::json!(-2.5));
}

#[test]
fn pure_commands_are_byte_identical() {
    let cases: [&[&str]; 4] = [
        &["validate", &path("dangling_ref.yaml")],
        &["score", &path("valid_2step.yaml")],
        &["reward", &path("reward_wa_pass.json")],
        &["grpo", "adv", "--returns", "[0.5, 1.5, -2, 7]"],
    ];
    for args in cases {
        let a = layerflow(args);
        let b = layerflow(args);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        json(&a);
    }
}

#[test]
fn corpus_filter_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.jsonl");
    let accepted = dir.path().join("out.jsonl");
    let ok = "difficulty: 1\nsteps:\n- step: 1\n  agents:\n  - {id: a, role: planner, ref: []}\n- step: 2\n  agents:\n  - {id: b, role: coder, ref: [a]}\n";
    let lines = [
        serde_json::json!({"id": "r1", "problem_id": "p", "difficulty": 1, "turn": 1, "yaml": ok}),
        serde_json::json!({"id": "r2", "problem_id": "p", "difficulty": 1, "turn": 1, "yaml": "steps: [\n"}),
        serde_json::json!({"id": "r3", "problem_id": "q", "difficulty": 1, "turn": 1, "yaml": ok}),
    ];
    let text: String = lines.iter().map(|l| format!("{l}\n")).collect();
    std::fs::write(&input, text).unwrap();

    let out = layerflow(&["corpus", "filter", input.to_str().unwrap(), accepted.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["accepted"], 1);
    assert_eq!(report["rejected"]["syntax"], 1);
    assert_eq!(report["rejected"]["duplicate"], 1);
    assert_eq!(report["rejected"]["logic"], 0);
    let kept = std::fs::read_to_string(&accepted).unwrap();
    assert_eq!(kept.lines().count(), 1);

    let stats = layerflow(&["corpus", "stats", accepted.to_str().unwrap()]);
    assert_eq!(stats.status.code(), Some(0));
    let v = json(&stats);
    assert_eq!(v["1"]["nodes"]["histogram"]["2"], 1);
}

#[test]
fn corpus_stats_of_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.jsonl");
    std::fs::write(&input, "").unwrap();
    let out = layerflow(&["corpus", "stats", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "{}");
}

#[test]
fn run_scripted_episode_with_local_executor() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("traj.jsonl");
    let script = format!("scripted:{}", path("script_pass.json"));
    let args = [
        "run",
        "--problem",
        &path("echo_problem.json"),
        "--config",
        &path("scripted_run.toml"),
        "--policy",
        &script,
        "--out",
        traj.to_str().unwrap(),
    ];
    let out = layerflow(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&traj).unwrap();
    let line: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(line["status"], "PASSED");
    let turns = line["trajectory"]["turns"].as_array().unwrap();
    assert_eq!(turns.len(), 2);
    assert_eq!(turns[0]["outcome"]["verdict"], "WRONG_ANSWER");
    assert_eq!(turns[1]["outcome"]["verdict"], "PASSED");

    // appends rather than overwrites
    assert_eq!(layerflow(&args).status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&traj).unwrap().lines().count(), 2);
}

#[test]
fn run_prose_policy_never_calls_sandbox() {
    let script = format!("scripted:{}", path("script_prose.json"));
    let out = layerflow(&[
        "run",
        "--problem",
        &path("echo_problem.json"),
        "--config",
        &path("scripted_run.toml"),
        "--policy",
        &script,
        "--sandbox",
        "scripted",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["status"], "EXHAUSTED");
    assert_eq!(v["trajectory"]["rewards"], serde_json::json!([-2, -2]));
    assert_eq!(v["sandbox_calls"], 0);
}

#[test]
fn run_exhausted_script_is_adapter_failure() {
    let dir = tempfile::tempdir().unwrap();
    let script_path = dir.path().join("short.json");
    std::fs::write(&script_path, "[\"no yaml\"]").unwrap();
    let script = format!("scripted:{}", script_path.display());
    let out = layerflow(&[
        "run",
        "--problem",
        &path("echo_problem.json"),
        "--config",
        &path("scripted_run.toml"),
        "--policy",
        &script,
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["error"]["kind"], "POLICY");
}

#[test]
fn run_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "max_turns = 0\n").unwrap();
    let out = layerflow(&[
        "run",
        "--problem",
        &path("echo_problem.json"),
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = layerflow(&[
        "run",
        "--problem",
        &path("echo_problem.json"),
        "--policy",
        "sometimes",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(layerflow(&["frobnicate"]).status.code(), Some(2));
}
