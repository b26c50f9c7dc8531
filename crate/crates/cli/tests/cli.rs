use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ltlcoord"));
    c.env_remove("LTLCOORD_LOG");
    c
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/team5.scenario")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn summary_value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}\t")))
        .unwrap_or_else(|| panic!("no {key} in\n{text}"))
        .to_string()
}

fn single_agent(formula: &str, position: &str) -> String {
    format!(
        r#"
dimension = 2
seed = 3

[integrator]
t_end = 20.0

[barrier]
mu_col = 0.1
mu_con = 0.1

[[point]]
id = "c"
position = [4.0, 0.0]

[[agent]]
position = {position}
radius = 1.0
d_con = 4.0
inertia = 1.0
mu_c = 1.0
mu = 2.0
mu_a = 0.1
formula = "{formula}"
labels = {{ c = ["a"] }}
"#
    )
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn plan_prints_five_plans() {
    let o = bin()
        .args(["plan", "--scenario"])
        .arg(fixture())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 5);
    assert!(text.contains("agent 1: ((c1,{r1})(c3,{g1})(c4,{m1})(c2,{b1}))^w"));
}

#[test]
fn plan_single_point_recurrence() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(
        dir.path(),
        "one.scenario",
        &single_agent("G F a", "[0.0, 0.0]"),
    );
    let o = bin()
        .args(["plan", "--scenario"])
        .arg(&s)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("agent 1: ((c,{a}))^w"));
    let tsv = std::fs::read_to_string(dir.path().join("plans.tsv")).unwrap();
    assert_eq!(
        tsv,
        "agent\tformula\tindex\tpart\tpoint\tservices\n1\tG F a\t1\tsuffix\tc\ta\n"
    );
}

#[test]
fn infeasible_formula_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(
        dir.path(),
        "f.scenario",
        &single_agent("false", "[0.0, 0.0]"),
    );
    let o = bin().args(["plan", "--scenario"]).arg(&s).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("agent 1: infeasible"));
    let out = dir.path().join("run");
    let o = bin()
        .args(["run", "--scenario"])
        .arg(&s)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn overlapping_agents_rejected_with_pair() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = single_agent("G F a", "[0.0, 0.0]");
    text.push_str(
        r#"
[[agent]]
position = [1.5, 0.0]
radius = 1.0
d_con = 4.0
inertia = 1.0
mu_c = 1.0
mu = 2.0
mu_a = 0.1
formula = "true"
"#,
    );
    let s = write(dir.path(), "o.scenario", &text);
    let o = bin().args(["plan", "--scenario"]).arg(&s).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("agents 1 and 2"), "{}", stderr(&o));
}

#[test]
fn run_exports_and_check_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(
        dir.path(),
        "one.scenario",
        &single_agent("G F a", "[0.0, 0.0]"),
    );
    let out = dir.path().join("run");
    let o = bin()
        .args(["run", "--scenario"])
        .arg(&s)
        .arg("--out")
        .arg(&out)
        .args(["--t-end", "30", "--h", "0.01"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    for f in [
        "scenario.toml",
        "plans.tsv",
        "trajectory.tsv",
        "events.tsv",
        "monitor.tsv",
        "lyapunov.tsv",
        "edges.tsv",
        "summary.tsv",
    ] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let traj = std::fs::read_to_string(out.join("trajectory.tsv")).unwrap();
    assert_eq!(
        traj.lines().next().unwrap(),
        "t\tagent\tx1\tx2\tv1\tv2\ta_hat\tmode\ts\tgoal"
    );
    // one sample every 0.5 s, including t = 0 and t = 30
    assert_eq!(traj.lines().count(), 1 + 61);
    let resolved = std::fs::read_to_string(out.join("scenario.toml")).unwrap();
    assert!(resolved.contains("t_end = 30.0") && resolved.contains("h = 0.01"));
    // a one-point cycle is re-achieved on every step once the agent sits on it
    assert!(summary_value(&stdout(&o), "goal_order").starts_with("1,1"));

    let c = bin().arg("check").arg("--out").arg(&out).output().unwrap();
    assert!(c.status.success(), "{}", stderr(&c));
    assert_eq!(
        stdout(&c),
        std::fs::read_to_string(out.join("summary.tsv"))
            .unwrap()
            .replacen("key\tvalue\n", "", 1)
    );

    let summary = out.join("summary.tsv");
    let tampered = std::fs::read_to_string(&summary)
        .unwrap()
        .replace("collision_free\ttrue", "collision_free\tfalse");
    std::fs::write(&summary, tampered).unwrap();
    let c = bin().arg("check").arg("--out").arg(&out).output().unwrap();
    assert_eq!(c.status.code(), Some(4));
    assert!(stderr(&c).contains("collision_free"));
}

#[test]
fn zero_horizon_gives_initial_sample_and_inconclusive_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = bin()
        .args(["run", "--scenario"])
        .arg(fixture())
        .arg("--out")
        .arg(&out)
        .args(["--t-end", "0"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    for k in 1..=5 {
        assert!(summary_value(&text, &format!("agent_{k}_status")).starts_with("inconclusive"));
    }
    assert_eq!(summary_value(&text, "goal_order"), "");
    let traj = std::fs::read_to_string(out.join("trajectory.tsv")).unwrap();
    assert_eq!(traj.lines().count(), 1 + 5);
    let events = std::fs::read_to_string(out.join("events.tsv")).unwrap();
    assert_eq!(events.lines().count(), 1);
}

#[test]
fn doubled_step_keeps_event_order() {
    let dir = tempfile::tempdir().unwrap();
    let order = |h: &str| {
        let out = dir.path().join(h);
        let o = bin()
            .args(["run", "--scenario"])
            .arg(fixture())
            .arg("--out")
            .arg(&out)
            .args(["--h", h])
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        summary_value(&stdout(&o), "goal_order")
    };
    let base = order("0.005");
    assert_eq!(base, "1,2,3,4,5");
    assert_eq!(order("0.01"), base);
}

#[test]
fn batch_runs_each_seed() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(
        dir.path(),
        "one.scenario",
        &single_agent("G F a", "[0.0, 0.0]"),
    );
    let out = dir.path().join("batch");
    let o = bin()
        .args(["batch", "--scenario"])
        .arg(&s)
        .arg("--scenario")
        .arg(fixture())
        .arg("--out")
        .arg(&out)
        .args(["--runs", "2", "--seed", "10", "--t-end", "5", "--jobs", "2"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}\n{}", stdout(&o), stderr(&o));
    for name in ["one-seed10", "one-seed11", "team5-seed10", "team5-seed11"] {
        let summary = out.join(name).join("summary.tsv");
        assert!(summary.is_file(), "{name}");
        assert!(stdout(&o).contains(&format!("{name}\tok")));
    }
    let s10 = std::fs::read_to_string(out.join("team5-seed10/scenario.toml")).unwrap();
    assert!(s10.contains("seed = 10"));
}

#[test]
fn log_level_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(
        dir.path(),
        "one.scenario",
        &single_agent("G F a", "[0.0, 0.0]"),
    );
    let o = bin()
        .env("LTLCOORD_LOG", "info")
        .args(["run", "--scenario"])
        .arg(&s)
        .arg("--out")
        .arg(dir.path().join("run"))
        .args(["--t-end", "1"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(stderr(&o).contains("simulated 1 s"), "{}", stderr(&o));
    let quiet = bin()
        .args(["run", "--scenario"])
        .arg(&s)
        .arg("--out")
        .arg(dir.path().join("run2"))
        .args(["--t-end", "1"])
        .output()
        .unwrap();
    assert!(!stderr(&quiet).contains("simulated"));
}
