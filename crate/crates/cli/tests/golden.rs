//! End-to-end check of the command-line tool against committed reports.
//!
//! Every fixture command must reproduce its golden report byte-for-byte, the
//! spin-chain generator must regenerate the committed instance byte-for-byte,
//! and canonical serialization must be idempotent. One summary verdict line
//! is printed for the whole suite.

use std::path::{Path, PathBuf};
use std::process::Command;

use qlebesgue_cli::instance;

struct Failure {
    name: String,
    detail: String,
}

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn run_tool(args: &[&str]) -> (Vec<u8>, Vec<u8>, i32) {
    let output = Command::new(env!("CARGO_BIN_EXE_qlebesgue"))
        .args(args)
        .current_dir(manifest_dir())
        .output()
        .expect("tool launches");
    (
        output.stdout,
        output.stderr,
        output.status.code().unwrap_or(-1),
    )
}

fn golden_case(failures: &mut Vec<Failure>, name: &str, args: &[&str], golden: &str) {
    let (stdout, stderr, code) = run_tool(args);
    if code != 0 {
        failures.push(Failure {
            name: name.into(),
            detail: format!(
                "exit {code}, stderr: {}",
                String::from_utf8_lossy(&stderr)
            ),
        });
        return;
    }
    let want = std::fs::read(manifest_dir().join(golden)).expect("golden file exists");
    if stdout != want {
        failures.push(Failure {
            name: name.into(),
            detail: format!("output differs from {golden}"),
        });
    }
}

fn exit_code_case(failures: &mut Vec<Failure>, name: &str, args: &[&str], expect: i32) {
    let (_, stderr, code) = run_tool(args);
    if code != expect {
        failures.push(Failure {
            name: name.into(),
            detail: format!(
                "expected exit {expect}, got {code}; stderr: {}",
                String::from_utf8_lossy(&stderr)
            ),
        });
    }
}

fn regeneration_case(failures: &mut Vec<Failure>) {
    let dir = tempfile::tempdir().expect("temp dir");
    let out = dir.path().join("chain.json");
    let out_str = out.to_str().expect("utf8 temp path");
    let (_, stderr, code) = run_tool(&[
        "spinchain", out_str, "--sites", "2", "--coupling", "ising", "--beta", "1.0", "--seed",
        "7",
    ]);
    if code != 0 {
        failures.push(Failure {
            name: "spinchain regeneration".into(),
            detail: format!(
                "exit {code}, stderr: {}",
                String::from_utf8_lossy(&stderr)
            ),
        });
        return;
    }
    let generated = std::fs::read(&out).expect("generated file exists");
    let committed =
        std::fs::read(manifest_dir().join("fixtures/spinchain_l2.json")).expect("fixture exists");
    if generated != committed {
        failures.push(Failure {
            name: "spinchain regeneration".into(),
            detail: "generated instance differs from the committed fixture".into(),
        });
    }
}

fn round_trip_case(failures: &mut Vec<Failure>, fixture: &str, expect_identical: bool) {
    let path = manifest_dir().join(fixture);
    let parsed = match instance::parse_file(&path) {
        Ok(f) => f,
        Err(e) => {
            failures.push(Failure {
                name: format!("round trip {fixture}"),
                detail: format!("parse failed: {e:?}"),
            });
            return;
        }
    };
    let first = instance::to_canonical_json(&parsed).expect("serializes");
    if expect_identical {
        let original = std::fs::read_to_string(&path).expect("fixture readable");
        if first != original {
            failures.push(Failure {
                name: format!("round trip {fixture}"),
                detail: "canonical serialization differs from the file".into(),
            });
            return;
        }
    }
    let reparsed: instance::InstanceFile =
        serde_json::from_str(&first).expect("canonical output parses");
    let second = instance::to_canonical_json(&reparsed).expect("serializes again");
    if first != second {
        failures.push(Failure {
            name: format!("round trip {fixture}"),
            detail: "serialization is not idempotent".into(),
        });
    }
}

fn check_path(p: &str) -> &str {
    assert!(
        Path::new(env!("CARGO_MANIFEST_DIR")).join(p).exists(),
        "missing fixture {p}"
    );
    p
}

fn main() {
    let mut failures = Vec::new();

    let atoms = check_path("fixtures/classical_three_atom.json");
    let m2 = check_path("fixtures/m2_pair.json");
    let chain = check_path("fixtures/spinchain_l2.json");

    golden_case(
        &mut failures,
        "three-atom info",
        &["--output", "json", "info", atoms],
        "fixtures/golden/three_atom_info.json",
    );
    golden_case(
        &mut failures,
        "three-atom decompose",
        &[
            "--output", "json", "decompose", atoms, "--mu", "mu", "--lambda", "lambda",
        ],
        "fixtures/golden/three_atom_decompose.json",
    );
    golden_case(
        &mut failures,
        "m2 decompose",
        &[
            "--output", "json", "decompose", m2, "--mu", "mu", "--lambda", "lambda",
        ],
        "fixtures/golden/m2_decompose.json",
    );
    golden_case(
        &mut failures,
        "m2 derivative",
        &[
            "--output", "json", "derivative", m2, "--mu", "mu", "--lambda", "lambda",
        ],
        "fixtures/golden/m2_derivative.json",
    );
    golden_case(
        &mut failures,
        "m2 kms",
        &["--output", "json", "kms", m2, "--lambda", "lambda"],
        "fixtures/golden/m2_kms.json",
    );
    golden_case(
        &mut failures,
        "spin-chain info",
        &["--output", "json", "info", chain],
        "fixtures/golden/spinchain_info.json",
    );
    golden_case(
        &mut failures,
        "spin-chain kms",
        &["--output", "json", "kms", chain, "--lambda", "lambda"],
        "fixtures/golden/spinchain_kms.json",
    );

    regeneration_case(&mut failures);
    round_trip_case(&mut failures, "fixtures/spinchain_l2.json", true);
    round_trip_case(&mut failures, "fixtures/classical_three_atom.json", false);
    round_trip_case(&mut failures, "fixtures/m2_pair.json", false);

    // Exit-code policy: a non-AC pair is a negative mathematical verdict,
    // a missing state or unparsable file is an input error.
    exit_code_case(
        &mut failures,
        "derivative of a singular pair exits 1",
        &[
            "derivative", atoms, "--mu", "mu", "--lambda", "lambda",
        ],
        1,
    );
    exit_code_case(
        &mut failures,
        "unknown state exits 2",
        &["decompose", atoms, "--mu", "mu", "--lambda", "nope"],
        2,
    );
    exit_code_case(
        &mut failures,
        "missing dynamics exits 2",
        &["kms", atoms, "--lambda", "lambda"],
        2,
    );
    exit_code_case(
        &mut failures,
        "oversized chain exits 2",
        &["spinchain", "/dev/null", "--sites", "7"],
        2,
    );

    let total = 15;
    if failures.is_empty() {
        println!("criterion 9 cli-golden-reports: PASS ({total}/{total} checks byte-exact or at expected exit codes)");
    } else {
        println!(
            "criterion 9 cli-golden-reports: FAIL ({}/{total} checks failed)",
            failures.len()
        );
        for f in &failures {
            println!("  {}: {}", f.name, f.detail);
        }
        std::process::exit(1);
    }
}
