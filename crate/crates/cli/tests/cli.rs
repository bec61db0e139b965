//! End-to-end runs of the `iterprior` binary.

use std::path::Path;
use std::process::{Command, Output};

fn iterprior(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iterprior"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn sim_run(out: &Path, task: &str, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--task", task, "--out", p(out)];
    args.extend_from_slice(extra);
    iterprior(&args)
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn tasks_lists_all_sixteen() {
    let o = iterprior(&["tasks"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 17, "{text}");
    let lifespan = text.lines().find(|l| l.starts_with("lifespan-male ")).unwrap();
    assert!(lifespan.contains("U[1, h]"), "{lifespan}");
    assert!(lifespan.contains("150"), "{lifespan}");
}

#[test]
fn task_files_extend_the_listing() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("extra.toml");
    std::fs::write(
        &file,
        r#"
[[task]]
name = "bus-wait"
hypothesis_kind = "scalar"
hypothesis_bounds = [0.0, 60.0]
response_schema = "one-number"
system_prompt = "Answer with a number."
user_templates = ["You have waited {probe} minutes. How long in total?"]
likelihood = { family = "uniform", lower = 0.0, integer = false }
seed_rule = { rule = "max-value", t_max = 60.0 }
"#,
    )
    .unwrap();
    let o = iterprior(&["tasks", "--task-file", p(&file)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("bus-wait"));
    let out = dir.path().join("run");
    let o = iterprior(&[
        "run",
        "--task-file",
        p(&file),
        "--task",
        "bus-wait",
        "--chains",
        "10",
        "--iters",
        "3",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn unknown_task_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = sim_run(&dir.path().join("r"), "no-such-task", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no-such-task"));
}

#[test]
fn missing_credential_stops_before_anything_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let o = Command::new(env!("CARGO_BIN_EXE_iterprior"))
        .args(["run", "--task", "coin-flips", "--agent", "llm", "--out", p(&out)])
        .args(["--api-key-env", "ITERPRIOR_CLI_TEST_UNSET_KEY"])
        .env_remove("ITERPRIOR_CLI_TEST_UNSET_KEY")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ITERPRIOR_CLI_TEST_UNSET_KEY"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn unreachable_endpoint_fails_every_chain() {
    let dir = tempfile::tempdir().unwrap();
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        format!(
            "task = \"coin-flips\"\nagent = \"llm\"\nchains = 3\niters = 2\n\n[llm]\nendpoint = \"http://127.0.0.1:{port}/v1\"\nmax_retries = 0\napi_key_env = \"ITERPRIOR_CLI_TEST_KEY\"\n"
        ),
    )
    .unwrap();
    let out = dir.path().join("r");
    let o = Command::new(env!("CARGO_BIN_EXE_iterprior"))
        .args(["run", "--config", p(&config), "--out", p(&out)])
        .env("ITERPRIOR_CLI_TEST_KEY", "sk-test")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("all 3 chains failed"), "{}", stderr(&o));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["error"].as_str().unwrap().contains("127.0.0.1"));
    assert!(manifest["finished_at"].is_string());
}

#[test]
fn simulated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--agent", "sim", "--chains", "50", "--iters", "12", "--seed", "7"];
    let a = sim_run(&dir.path().join("a"), "coin-flips", &args);
    let b = sim_run(
        &dir.path().join("b"),
        "coin-flips",
        &[&args[..], &["--parallel", "1"]].concat(),
    );
    assert!(a.status.success(), "{}", stderr(&a));
    assert!(b.status.success(), "{}", stderr(&b));
    let ra = std::fs::read(dir.path().join("a/records.jsonl")).unwrap();
    let rb = std::fs::read(dir.path().join("b/records.jsonl")).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(ra.iter().filter(|&&c| c == b'\n').count(), 50 * 13);
}

#[test]
fn run_writes_manifest_and_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let o = sim_run(
        &out,
        "lifespan-male",
        &["--chains", "30", "--iters", "6", "--sim-prior", "beta:2,5"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("30/30 chains"));
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["task"]["name"], "lifespan-male");
    assert_eq!(m["task"]["likelihood"]["family"], "uniform");
    assert_eq!(m["agent"]["kind"], "sim");
    assert_eq!(m["agent"]["prior"]["family"], "beta");
    assert_eq!(m["ensemble"]["n_chains"], 30);
    assert_eq!(m["chains_failed"], 0);
    let c: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("convergence.json")).unwrap()).unwrap();
    assert_eq!(c["tests"].as_array().unwrap().len(), 5);
    assert_eq!(c["final_iteration"], 6);
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "task = \"coin-flips\"\nchains = 5\niters = 3\nseed = 11\n").unwrap();
    let out = dir.path().join("r");
    let o = iterprior(&["run", "--config", p(&config), "--chains", "8", "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["ensemble"]["n_chains"], 8);
    assert_eq!(m["ensemble"]["n_iterations"], 3);
    assert_eq!(m["ensemble"]["base_seed"], 11);

    std::fs::write(&config, "task = \"coin-flips\"\nchians = 5\n").unwrap();
    let o = iterprior(&["run", "--config", p(&config), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn a_single_iteration_notes_missing_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let o = sim_run(&out, "coin-flips", &["--chains", "5", "--iters", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let c: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("convergence.json")).unwrap()).unwrap();
    assert!(c["error"].is_string());
}

#[test]
fn scalar_prior_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("r");
    assert!(sim_run(&run, "movie-grosses", &["--chains", "40", "--iters", "4"])
        .status
        .success());
    let before = snapshot(&run);
    let out = dir.path().join("prior");
    let o = iterprior(&["prior", "--in", p(&run), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(snapshot(&run), before);

    let csv = std::fs::read_to_string(out.join("prior.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "center,mass");
    assert_eq!(lines.len(), 101);
    let total: f64 = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9);

    let svg = std::fs::read_to_string(out.join("prior.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    assert!(doc.descendants().any(|n| n.has_tag_name("polyline")));

    let s: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["chains_used"], 40);
    assert_eq!(s["iteration"], 4);
    assert!(s["median"].as_f64().unwrap() > 0.0);
}

#[test]
fn causal_prior_is_a_square_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("r");
    assert!(sim_run(&run, "causal-preventive", &["--chains", "25", "--iters", "3"])
        .status
        .success());
    let out = dir.path().join("prior");
    let o = iterprior(&[
        "prior",
        "--in",
        p(&run),
        "--out",
        p(&out),
        "--iteration",
        "2",
        "--bandwidth",
        "0.05",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("prior.csv")).unwrap();
    assert_eq!(csv.lines().count(), 101);
    assert!(csv.lines().all(|l| l.split(',').count() == 101));
    let svg = std::fs::read_to_string(out.join("prior.svg")).unwrap();
    roxmltree::Document::parse(&svg).unwrap();
    let s: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert!(s["density_mean"]["w0"].is_number());
    assert_eq!(s["iteration"], 2);
}

#[test]
fn prior_refuses_to_write_into_its_input() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("r");
    assert!(sim_run(&run, "coin-flips", &["--chains", "5", "--iters", "2"])
        .status
        .success());
    let o = iterprior(&["prior", "--in", p(&run), "--out", p(&run)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!run.join("prior.csv").exists());
}

fn write_judgments(path: &Path, rows: &[&str]) {
    let mut text = String::from("direction,n_c_plus,n_c_minus,k_plus,k_minus,judged_w0,judged_w1\n");
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

const JUDGMENTS: [&str; 6] = [
    "generative,8,8,6,2,0.25,0.6",
    "generative,16,16,4,4,0.3,0.05",
    "generative,32,32,30,0,0.05,0.9",
    "preventive,8,8,2,6,0.75,0.7",
    "preventive,16,16,16,16,0.95,0.05",
    "preventive,32,32,10,28,0.85,0.6",
];

fn fit_rows(dir: &Path) -> Vec<serde_json::Value> {
    serde_json::from_slice::<Vec<serde_json::Value>>(&std::fs::read(dir.join("fit.json")).unwrap()).unwrap()
}

#[test]
fn zero_alpha_sparse_strong_fits_like_uniform() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("j.csv");
    write_judgments(&file, &JUDGMENTS);
    let out = dir.path().join("fit");
    let o = iterprior(&["fit", "--judgments", p(&file), "--alpha", "0", "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = fit_rows(&out);
    assert_eq!(rows.len(), 6);
    for dir_name in ["generative", "preventive", "both"] {
        let pick = |prior: &str| {
            rows.iter()
                .find(|r| r["prior"] == prior && r["direction"] == dir_name)
                .unwrap()
                .clone()
        };
        let (u, s) = (pick("uniform"), pick("sparse-strong"));
        for k in ["pearson", "rmsd"] {
            let d = (u[k].as_f64().unwrap() - s[k].as_f64().unwrap()).abs();
            assert!(d < 1e-12, "{dir_name} {k}: {d}");
        }
    }
    let bins = std::fs::read_to_string(out.join("bins-uniform-both.csv")).unwrap();
    assert_eq!(bins.lines().count(), 14);
}

#[test]
fn fit_accepts_an_empirical_prior() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("r");
    assert!(sim_run(&run, "causal-generative", &["--chains", "25", "--iters", "3"])
        .status
        .success());
    let prior_out = dir.path().join("prior");
    assert!(iterprior(&["prior", "--in", p(&run), "--out", p(&prior_out)])
        .status
        .success());
    let file = dir.path().join("j.csv");
    write_judgments(&file, &JUDGMENTS);
    let out = dir.path().join("fit");
    let from_dir = format!("empirical:{}", p(&run));
    let from_csv = format!("empirical:{}", p(&prior_out.join("prior.csv")));
    let o = iterprior(&[
        "fit",
        "--judgments",
        p(&file),
        "--direction",
        "generative",
        "--prior",
        &from_dir,
        "--prior",
        &from_csv,
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = fit_rows(&out);
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["items"] == 3 && r["direction"] == "generative"));
    let d = (rows[0]["rmsd"].as_f64().unwrap() - rows[1]["rmsd"].as_f64().unwrap()).abs();
    assert!(d < 1e-9, "{d}");
}

#[test]
fn malformed_judgment_row_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("j.csv");
    write_judgments(&file, &[JUDGMENTS[0], JUDGMENTS[1], "generative,8,8,6,2,0.25,lots"]);
    let o = iterprior(&["fit", "--judgments", p(&file)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("j.csv:4"), "{}", stderr(&o));
}

#[test]
fn bad_flags_exit_with_two() {
    assert_eq!(iterprior(&["run", "--chains", "many"]).status.code(), Some(2));
    assert_eq!(
        iterprior(&["fit", "--judgments", "x.csv", "--prior", "cauchy"])
            .status
            .code(),
        Some(2)
    );
}
