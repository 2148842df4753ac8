//! End-to-end runs of the `osc-logic` binary.

use std::path::Path;
use std::process::{Command, Output};

use osc_logic_cli::{emit_netlist, parse_netlist};
use proptest::prelude::*;
use tempfile::TempDir;

const REGISTER: &str = "\
[osc R]
[osc k]
[edge R k]
rho = RHO
gamma = GAMMA
directed = true
[sim]
tau_end = 1500
";

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_osc-logic"));
    cmd.env_remove("OSC_LOGIC_SEED");
    cmd
}

fn write(dir: &TempDir, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn register(dir: &TempDir, rho: f64, gamma: f64) -> std::path::PathBuf {
    let text = REGISTER
        .replace("RHO", &rho.to_string())
        .replace("GAMMA", &gamma.to_string());
    write(dir, "register.net", &text)
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn psi_of(report: &str, node: &str) -> f64 {
    let key = format!("psi_{node} = ");
    let line = report.lines().find(|l| l.contains(&key)).expect("node in report");
    let rest = &line[line.find(&key).unwrap() + key.len()..];
    rest.split_whitespace().next().unwrap().parse().unwrap()
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

#[test]
fn register_follows_reference_when_gamma_dominates() {
    let dir = TempDir::new().unwrap();
    let net = register(&dir, 0.05, 0.1);
    for engine in ["full", "phase"] {
        let out = bin()
            .args(["simulate"])
            .arg(&net)
            .args(["--engine", engine])
            .output()
            .unwrap();
        let report = stdout(&out);
        assert_eq!(out.status.code(), Some(0), "{report}");
        assert!(report.starts_with("seed = 42\n"));
        assert!(angle_gap(psi_of(&report, "k"), 0.0) < 0.05, "{engine}: {report}");
    }
}

#[test]
fn register_inverts_when_rho_dominates() {
    let dir = TempDir::new().unwrap();
    let net = register(&dir, 0.1, 0.05);
    for engine in ["full", "phase"] {
        let out = bin()
            .args(["simulate"])
            .arg(&net)
            .args(["--engine", engine])
            .output()
            .unwrap();
        let report = stdout(&out);
        assert_eq!(out.status.code(), Some(0), "{report}");
        // full-state offset from pi is about 0.1 rad here
        assert!(
            angle_gap(psi_of(&report, "k"), std::f64::consts::PI) < 0.15,
            "{engine}: {report}"
        );
    }
}

#[test]
fn malformed_netlists_exit_2() {
    let dir = TempDir::new().unwrap();
    for (i, text) in [
        "[osc a\n",
        "[osc a]\nbeta = 1\n",
        "[osc a]\n[edge a b]\ngamma = 0.1\n",
        "[osc a]\nalpha = inf\n",
    ]
    .iter()
    .enumerate()
    {
        let net = write(&dir, &format!("bad{i}.net"), text);
        for cmd in ["simulate", "reduce"] {
            let out = bin().arg(cmd).arg(&net).output().unwrap();
            assert_eq!(out.status.code(), Some(2), "{cmd} {text:?}");
            assert!(String::from_utf8_lossy(&out.stderr).contains("line"), "{text:?}");
        }
    }
    let out = bin().args(["truth-table", "--gate", "xor"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_file_is_an_io_error() {
    let out = bin().args(["simulate", "/nonexistent/net"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn quenched_oscillator_exits_1() {
    // opposing drives add up to pure damping of 4 gamma_d, well above alpha
    let dir = TempDir::new().unwrap();
    let text = "[osc a]\n[drive a]\ngamma_d = 0.5\n[drive a]\npsi_d = 3.141592653589793\ngamma_d = 0.5\n[sim]\ntau_end = 300\n";
    let net = write(&dir, "dead.net", text);
    let out = bin().arg("simulate").arg(&net).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not oscillating"));
}

#[test]
fn truth_tables_pass_in_both_engines() {
    for gate in ["not", "and", "or"] {
        for engine in ["full", "phase"] {
            let out = bin()
                .args(["truth-table", "--gate", gate, "--engine", engine])
                .output()
                .unwrap();
            let report = stdout(&out);
            assert_eq!(out.status.code(), Some(0), "{gate}/{engine}: {report}");
            let rows = if gate == "not" { "2/2" } else { "4/4" };
            assert!(report.contains(&format!("{rows} rows correct")), "{report}");
        }
    }
}

#[test]
fn stability_examples() {
    let run = |args: &[&str]| {
        let out = bin().arg("stability").args(args).output().unwrap();
        (out.status.code(), stdout(&out))
    };
    let (code, report) = run(&["--gate", "or", "--target-eq", "0,0,0"]);
    assert_eq!(code, Some(0), "{report}");
    assert!(report.contains("class       stable"));
    let eig_line = report.lines().find(|l| l.contains("eigenvalues")).unwrap();
    assert!(eig_line
        .split_whitespace()
        .skip(1)
        .all(|e| e.trim_end_matches(',').starts_with('-')));

    let (code, report) = run(&["--gate", "not", "--target-eq", "0,pi"]);
    assert_eq!(code, Some(0), "{report}");
    assert!(report.contains("liapunov    pass"));

    let (code, report) = run(&[
        "--gate",
        "register",
        "--target-eq",
        "0",
        "--rho",
        "0.1",
        "--gamma",
        "0.05",
    ]);
    assert_eq!(code, Some(0), "{report}");
    assert!(report.contains("class       unstable"));

    // a point with no predicted stability
    let (code, _) = run(&["--gate", "not", "--target-eq", "0,0"]);
    assert_eq!(code, Some(1));
    let (code, _) = run(&["--gate", "not", "--target-eq", "0,banana"]);
    assert_eq!(code, Some(2));
}

#[test]
fn stability_csv_has_report_columns() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("eq.csv");
    let out = bin()
        .args(["stability", "--gate", "and", "--target-eq", "pi,pi,pi", "--csv"])
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("psi_0,psi_1,psi_2,eig_real_0,eig_real_1,eig_real_2,class,liapunov_pass")
    );
    assert!(lines.next().unwrap().ends_with(",stable,true"));
}

fn simulate_csv(net: &Path, csv: &Path, seed: Option<&str>) -> String {
    let mut cmd = bin();
    if let Some(s) = seed {
        cmd.env("OSC_LOGIC_SEED", s);
    }
    let out = cmd.arg("simulate").arg(net).arg("--csv").arg(csv).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    stdout(&out)
}

#[test]
fn csv_output_is_deterministic_and_seed_is_overridable() {
    let dir = TempDir::new().unwrap();
    let net = register(&dir, 0.05, 0.1);
    let (a, b, c) = (
        dir.path().join("a.csv"),
        dir.path().join("b.csv"),
        dir.path().join("c.csv"),
    );
    simulate_csv(&net, &a, None);
    simulate_csv(&net, &b, None);
    let bytes_a = std::fs::read(&a).unwrap();
    assert_eq!(bytes_a, std::fs::read(&b).unwrap());
    assert!(String::from_utf8_lossy(&bytes_a).starts_with("tau,"));

    let report = simulate_csv(&net, &c, Some("7"));
    assert!(report.starts_with("seed = 7\n"));
    assert_ne!(bytes_a, std::fs::read(&c).unwrap());

    let out = bin()
        .env("OSC_LOGIC_SEED", "x")
        .arg("simulate")
        .arg(&net)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn truth_table_csv_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let mut files = Vec::new();
    for name in ["t1.csv", "t2.csv"] {
        let path = dir.path().join(name);
        let out = bin()
            .args(["truth-table", "--gate", "not", "--csv"])
            .arg(&path)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        files.push(std::fs::read(path).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert!(String::from_utf8_lossy(&files[0]).starts_with("ref,in1,in2,expected,observed,psi_i,psi_j,psi_k,locked\n"));
}

#[test]
fn csv_values_reread_identically() {
    let dir = TempDir::new().unwrap();
    let net = register(&dir, 0.05, 0.1);
    let path = dir.path().join("traj.csv");
    simulate_csv(&net, &path, None);
    let text = std::fs::read_to_string(&path).unwrap();
    let traj = osc_logic::integrator::Trajectory::read_csv(text.as_bytes()).unwrap();
    let mut again = Vec::new();
    traj.write_csv(&mut again).unwrap();
    assert_eq!(text.as_bytes(), again.as_slice());
}

#[test]
fn reduce_prints_register_equation() {
    let dir = TempDir::new().unwrap();
    let net = register(&dir, 0.05, 0.1);
    let out = bin().arg("reduce").arg(&net).output().unwrap();
    let report = stdout(&out);
    assert_eq!(out.status.code(), Some(0));
    assert!(report.contains("d psi_R/dtau = 0    (reference)"), "{report}");
    let line = report.lines().find(|l| l.starts_with("d psi_k")).unwrap();
    let total: f64 = line.split_whitespace().filter_map(|w| w.parse::<f64>().ok()).sum();
    assert!((total - (0.05 - 0.1)).abs() < 1e-9, "{line}");
}

fn arb_number() -> impl Strategy<Value = f64> {
    prop_oneof![(-1e3..1e3f64), (0.0..1.0f64), Just(0.0), Just(std::f64::consts::PI)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn emit_then_parse_is_identity(
        alphas in prop::collection::vec(0.001..2.0f64, 1..5),
        edges in prop::collection::vec((0usize..5, 0usize..5, arb_number(), arb_number(), any::<bool>()), 0..6),
        drives in prop::collection::vec((0usize..5, arb_number(), arb_number()), 0..4),
        tau_end in 1.0..1e4f64,
        h in 1e-4..0.1f64,
        seed in any::<u64>(),
    ) {
        let n = alphas.len();
        let mut text = String::new();
        for (i, a) in alphas.iter().enumerate() {
            text += &format!("[osc n{i}]\nalpha = {a}\n");
        }
        for (f, t, rho, gamma, directed) in &edges {
            let (f, t) = (f % n, t % n);
            if f == t {
                continue;
            }
            text += &format!("[edge n{f} n{t}]\nrho = {rho}\ngamma = {gamma}\ndirected = {directed}\n");
        }
        for (t, psi, g) in &drives {
            text += &format!("# drive\n[drive n{}]\npsi_d = {psi}\ngamma_d = {g}\n", t % n);
        }
        text += &format!("[sim]\ntau_end = {tau_end}\nh = {h}\nseed = {seed}\n");
        // some random topologies are rejected by the network rules; those are skipped
        if let Ok((spec, sim)) = parse_netlist(&text) {
            let (again, sim2) = parse_netlist(&emit_netlist(&spec, &sim)).unwrap();
            prop_assert_eq!(spec, again);
            prop_assert_eq!(sim, sim2);
        }
    }
}
