//! End-to-end runs of the `largen` binary.

use std::process::{Command, Output};

fn largen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_largen")).args(args).output().expect("spawn largen")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const MANIFEST: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/manifests/oracle_checks.txt");

#[test]
fn verify_shipped_manifest() {
    let o = largen(&["verify", MANIFEST]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(!stdout(&o).contains("MISMATCH"));
}

#[test]
fn verify_reports_wrong_claims() {
    let dir = std::env::temp_dir().join(format!("largen-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.txt");
    std::fs::write(&path, "CHECK W{Tr[x1 x2]} | W{Tr[y1 y2]} == 3*hbar^2*g^2 @ N=2,c=1\n").unwrap();
    let o = largen(&["verify", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("MISMATCH line 1"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn product_text() {
    let o = largen(&["product", "W{Tr[x1 x2]}", "W{Tr[y1 y2]}"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("2*hbar^2*g^2*W{}"), "{text}");
    assert!(text.contains("eps*hbar*g*W{Tr[x1 y1]}"), "{text}");
}

#[test]
fn product_json_round_trips() {
    let o = largen(&["--json", "product", "W{Tr[x1 x2 x3]}", "W{Tr[y1] Tr[y2 y3]}"]);
    assert_eq!(o.status.code(), Some(0));
    let s = largen::serial::from_json(&stdout(&o)).unwrap();
    let direct = largen::algebra::Algebra::matrix()
        .product(
            &largen::syntax::parse_series("W{Tr[x1 x2 x3]}").unwrap(),
            &largen::syntax::parse_series("W{Tr[y1] Tr[y2 y3]}").unwrap(),
        )
        .unwrap();
    assert_eq!(s, direct);
}

#[test]
fn reruns_are_byte_identical() {
    for args in [
        vec!["verify", MANIFEST],
        vec!["--mode", "kernel", "--json", "product", "W{Tr[x1 ~x2] Tr[x3]}", "W{Tr[y1 y2 y3]}"],
        vec!["genus-table", "W{Tr[x1 x2 x3] Tr[x4 x5 x6]}", "W{Tr[y1 y2 y3] Tr[y4 y5 y6]}"],
    ] {
        assert_eq!(largen(&args).stdout, largen(&args).stdout, "{args:?}");
    }
}

#[test]
fn transport_warns_on_stderr() {
    let o = largen(&["transport", "W{Tr[x1 x2]}"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("eps^-1*hbar*F*W{}"));
    assert!(stderr(&o).contains("negative eps power -1"));
}

#[test]
fn usage_errors_exit_2() {
    let dup = largen(&["product", "W{Tr[x1]}", "W{Tr[x1]}"]);
    assert_eq!(dup.status.code(), Some(2));
    assert!(stderr(&dup).contains("labels must be unique"));
    let bad = largen(&["product", "W{Tr[x1]", "W{}"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("line 1, column"));
    assert_eq!(largen(&["bogus"]).status.code(), Some(2));
    assert_eq!(largen(&["--help"]).status.code(), Some(0));
}

#[test]
fn colored_moment() {
    let o = largen(&["--colors", "2", "moment", "W{Tr[x1@1 x2@2]}", "W{Tr[y1@1 y2@2]}"]);
    assert_eq!(stdout(&o).trim(), "hbar^2*s1*s2*g^2*W{}");
    let out_of_range = largen(&["--colors", "1", "moment", "W{Tr[x1@2]}", "W{Tr[y1@1]}"]);
    assert_eq!(out_of_range.status.code(), Some(2));
}

#[test]
fn scaling_table() {
    let o = largen(&["scaling", "W{Tr[x1 x2 x3 x4]}"]);
    assert!(stdout(&o).contains("W{Tr[x1 x2 x3 x4]}\t1\t4\t2\t3\t1"), "{}", stdout(&o));
}

#[test]
fn file_arguments() {
    let dir = std::env::temp_dir().join(format!("largen-arg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("a.txt");
    std::fs::write(&path, "W{Tr[x1]}\n").unwrap();
    let arg = format!("@{}", path.display());
    let o = largen(&["moment", &arg, "W{Tr[y1]}"]);
    assert_eq!(stdout(&o).trim(), "hbar*g*W{}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn connected_kernel_mode() {
    let o = largen(&["--mode", "kernel", "connected", "W{Tr[a1]}", "W{Tr[b1 b2]}", "W{Tr[c1]}"]);
    assert_eq!(
        stdout(&o).trim(),
        "eps*hbar^2*K(a1,b1)*K(b2,c1)*W{} + eps*hbar^2*K(a1,b2)*K(b1,c1)*W{}"
    );
}
