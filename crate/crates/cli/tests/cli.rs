use std::path::PathBuf;
use std::process::{Command, Output};

use caplab::unitary::{gate_to_json, BipartiteGate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn caplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_caplab")).args(args).output().expect("binary runs")
}

fn caplab_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_caplab")).args(args).env(key, value).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", stdout(o)))
}

fn scratch_file(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("caplab-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn h2(p: f64) -> f64 {
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

#[test]
fn capacity_of_swap() {
    let o = caplab(&["capacity", "--gate", "swap", "--which", "e_u_psi", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert!((v["capacities"]["e_u_psi"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(v["gate_descriptor"], "swap");
    assert_eq!(v["config_echo"]["restarts"], 20);
    assert!(v["wall_time_ms"].is_u64());
    assert!(v["inequalities"].as_array().unwrap().is_empty());
}

#[test]
#[allow(clippy::approx_constant)]
fn capacity_of_zz_matches_binary_entropy() {
    let o = caplab(&["capacity", "--gate", "zz:0.3927", "--which", "e_u_psi", "--json"]);
    let got = json(&o)["capacities"]["e_u_psi"].as_f64().unwrap();
    assert!((got - h2(0.3927f64.cos().powi(2))).abs() < 1e-9);
    assert!((got - 0.60088).abs() < 1e-5);
}

#[test]
fn identity_capacities_are_zero() {
    let o = caplab(&["capacity", "--gate", "identity", "--which", "all", "--restarts", "4", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let caps = json(&o)["capacities"].as_object().unwrap().clone();
    assert_eq!(caps.len(), 9);
    for (name, v) in caps {
        assert!(v.as_f64().unwrap().abs() < 1e-6, "{name} = {v}");
    }
}

#[test]
fn capacity_csv_output() {
    let o = caplab(&["capacity", "--gate", "cnot", "--which", "e_u_psi,e_u", "--restarts", "4", "--csv"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "name,value");
    assert_eq!(lines.len(), 3);
    let value: f64 = lines.iter().find_map(|l| l.strip_prefix("e_u_psi,")).unwrap().parse().unwrap();
    assert!((value - 1.0).abs() < 1e-12);
}

#[test]
fn sweep_csv_has_header_and_rows() {
    let o = caplab(&["sweep", "--steps", "1", "--csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, vec!["alpha,e_u_psi,delta_e_u,ratio", lines[1]]);
    assert!(lines[1].starts_with("0.05,"));
}

#[test]
fn sweep_ratio_shape() {
    let o = caplab(&["sweep", "--alpha-min", "0.1", "--steps", "6", "--csv", "--restarts", "8"]);
    let text = stdout(&o);
    let ratios: Vec<f64> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ratios.len(), 6);
    let last = *ratios.last().unwrap();
    assert!((last - 1.0).abs() < 1e-3, "{last}");
    assert!(ratios[0] > last);
    for w in ratios.windows(2) {
        assert!(w[1] <= w[0] + 1e-3, "{ratios:?}");
    }
}

#[test]
fn sweep_rejects_bad_ranges() {
    for args in [
        ["sweep", "--alpha-min", "0.5", "--alpha-max", "0.2"],
        ["sweep", "--alpha-min", "0.0", "--alpha-max", "0.2"],
        ["sweep", "--alpha-min", "0.1", "--alpha-max", "1.0"],
    ] {
        assert_eq!(caplab(&args).status.code(), Some(2), "{args:?}");
    }
    assert_eq!(caplab(&["sweep", "--steps", "0"]).status.code(), Some(2));
}

#[test]
fn verify_builtins_hold() {
    for gate in ["swap", "identity", "cnot"] {
        let o = caplab(&["verify", "--gate", gate, "--restarts", "8", "--json"]);
        let v = json(&o);
        assert_eq!(o.status.code(), Some(0), "{gate}: {}", stdout(&o));
        for i in v["inequalities"].as_array().unwrap() {
            let (lhs, rhs, tol) =
                (i["lhs"].as_f64().unwrap(), i["rhs"].as_f64().unwrap(), i["tolerance"].as_f64().unwrap());
            assert_eq!(i["holds"].as_bool().unwrap(), lhs <= rhs + tol);
            assert!(i["holds"].as_bool().unwrap(), "{gate}: {i}");
        }
        if gate == "identity" {
            for (name, value) in v["capacities"].as_object().unwrap() {
                assert!(value.as_f64().unwrap().abs() < 1e-6, "{name} = {value}");
            }
        }
    }
}

#[test]
fn verify_random_gates_hold() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..20 {
        let gate = BipartiteGate::random(2, 2, &mut rng);
        let path = scratch_file(&format!("random-{k}.json"), &gate_to_json(&gate));
        let o = caplab(&["verify", "--gate", path.to_str().unwrap(), "--restarts", "8"]);
        assert_eq!(o.status.code(), Some(0), "gate {k}:\n{}", stdout(&o));
    }
}

#[test]
fn decompose_builtins() {
    let v = json(&caplab(&["decompose", "--gate", "cnot", "--json"]));
    let alphas: Vec<f64> = v["alphas"].as_array().unwrap().iter().map(|a| a.as_f64().unwrap()).collect();
    let expected = [std::f64::consts::FRAC_PI_4, 0.0, 0.0];
    assert!(alphas.iter().zip(expected).all(|(a, e)| (a - e).abs() < 1e-9), "{alphas:?}");
    assert!(v["reconstruction_residual"].as_f64().unwrap() < 1e-9);

    let v = json(&caplab(&["decompose", "--gate", "swap", "--json"]));
    for a in v["alphas"].as_array().unwrap() {
        assert!((a.as_f64().unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-9);
    }
    let v = json(&caplab(&["decompose", "--gate", "identity", "--json"]));
    for a in v["alphas"].as_array().unwrap() {
        assert!(a.as_f64().unwrap().abs() < 1e-9);
    }
    let text = stdout(&caplab(&["decompose", "--gate", "cz"]));
    assert!(text.contains("reconstruction residual"));
}

#[test]
fn decompose_rejects_qutrit_gates() {
    let path = scratch_file("swap3.json", &gate_to_json(&BipartiteGate::swap(3)));
    assert_eq!(caplab(&["decompose", "--gate", path.to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn bad_inputs_map_to_exit_codes() {
    let malformed = scratch_file("malformed.json", "{ not json");
    assert_eq!(caplab(&["capacity", "--gate", malformed.to_str().unwrap()]).status.code(), Some(2));
    let wrong_shape = scratch_file("shape.json", r#"{"d_a": 2, "d_b": 2, "matrix": [[[1, 0]]]}"#);
    assert_eq!(caplab(&["capacity", "--gate", wrong_shape.to_str().unwrap()]).status.code(), Some(2));

    let rows: Vec<String> = (0..4)
        .map(|i| format!("[{}]", (0..4).map(|j| if i == j { "[2,0]" } else { "[0,0]" }).collect::<Vec<_>>().join(",")))
        .collect();
    let scaled = scratch_file("scaled.json", &format!(r#"{{"d_a": 2, "d_b": 2, "matrix": [{}]}}"#, rows.join(",")));
    let o = caplab(&["verify", "--gate", scaled.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));

    assert_eq!(caplab(&["capacity", "--gate", "nonesuch"]).status.code(), Some(2));
    assert_eq!(caplab(&["capacity", "--gate", "zz:x"]).status.code(), Some(2));
    assert_eq!(caplab(&["capacity", "--gate", "swap", "--restarts", "0"]).status.code(), Some(2));
    assert_eq!(caplab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(caplab_env(&["capacity", "--gate", "swap"], "CAPLAB_THREADS", "zero").status.code(), Some(2));
}

#[test]
fn output_is_reproducible() {
    let args = ["capacity", "--gate", "zz:0.3", "--which", "e_u,delta_e_u", "--restarts", "6", "--seed", "9"];
    let a = caplab(&args);
    let b = caplab(&args);
    assert_eq!(a.stdout, b.stdout);
    let c = caplab_env(&args, "CAPLAB_THREADS", "1");
    assert_eq!(a.stdout, c.stdout);

    let mut json_args = args.to_vec();
    json_args.push("--json");
    let mut x = json(&caplab(&json_args));
    let mut y = json(&caplab_env(&json_args, "CAPLAB_THREADS", "2"));
    x["wall_time_ms"] = Value::Null;
    y["wall_time_ms"] = Value::Null;
    assert_eq!(x, y);

    let s1 = caplab(&["sweep", "--steps", "3", "--csv", "--restarts", "4"]);
    let s2 = caplab(&["sweep", "--steps", "3", "--csv", "--restarts", "4"]);
    assert_eq!(s1.stdout, s2.stdout);
}
