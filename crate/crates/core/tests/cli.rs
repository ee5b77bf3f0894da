use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_covquant"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn workdir() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

fn path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

#[test]
fn system_build_writes_descriptor_and_rejects_bad_grids() {
    let d = workdir();
    let o = run(
        d.path(),
        &["system", "build", "--kind", "finite", "--N", "5", "--out", "sys.json"],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(
        std::fs::read_to_string(path(d.path(), "sys.json")).unwrap().trim(),
        r#"{"kind":"finite","N":5,"d":5}"#
    );
    let o = run(
        d.path(),
        &[
            "system", "build", "--kind", "planar", "--M", "40", "--L", "6", "--h", "0.07", "--out", "p.json",
        ],
    );
    assert_eq!(code(&o), 2);
    assert!(!path(d.path(), "p.json").exists());
    assert_eq!(
        code(&run(
            d.path(),
            &["system", "build", "--kind", "finite", "--N", "1", "--out", "x.json"]
        )),
        2
    );
    assert_eq!(
        code(&run(
            d.path(),
            &["system", "build", "--kind", "planar", "--out", "x.json"]
        )),
        2
    );
    assert_eq!(code(&run(d.path(), &["no-such-command"])), 2);
}

#[test]
fn quantize_one_is_identity() {
    let d = workdir();
    run(
        d.path(),
        &["system", "build", "--kind", "finite", "--N", "3", "--out", "s.json"],
    );
    run(
        d.path(),
        &[
            "kernel", "build", "--kind", "random", "--dim", "3", "--seed", "9", "--out", "k.json",
        ],
    );
    let o = run(
        d.path(),
        &[
            "quantize",
            "--system",
            "s.json",
            "--kernel",
            "k.json",
            "--function",
            "one",
            "--out",
            "g.json",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("trace: 3.0000"));
    let g: covquant::operator::Operator =
        serde_json::from_str(&std::fs::read_to_string(path(d.path(), "g.json")).unwrap()).unwrap();
    assert!(g.max_abs_diff(&covquant::operator::Operator::identity(3)) < 1e-12);
    // poly-qp is planar only
    let o = run(
        d.path(),
        &[
            "quantize",
            "--system",
            "s.json",
            "--kernel",
            "k.json",
            "--function",
            "poly-qp:2,0,1",
            "--out",
            "g.json",
        ],
    );
    assert_eq!(code(&o), 3);
}

#[test]
fn povm_recover_round_trip_and_noncovariant_rejection() {
    let d = workdir();
    run(
        d.path(),
        &["system", "build", "--kind", "finite", "--N", "4", "--out", "s.json"],
    );
    run(
        d.path(),
        &[
            "kernel", "build", "--kind", "random", "--dim", "4", "--seed", "2", "--out", "k.json",
        ],
    );
    assert_eq!(
        code(&run(
            d.path(),
            &["povm", "build", "--system", "s.json", "--kernel", "k.json", "--out", "e.json"]
        )),
        0
    );
    let o = run(
        d.path(),
        &["recover", "--system", "s.json", "--input", "e.json", "--out", "r.json"],
    );
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("max_deviation:"));
    let read = |n: &str| -> covquant::operator::Operator {
        serde_json::from_str(&std::fs::read_to_string(path(d.path(), n)).unwrap()).unwrap()
    };
    assert!(read("r.json").max_abs_diff(&read("k.json")) < 1e-9);

    // swap two effects: still a POVM, no longer covariant
    let mut povm: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path(d.path(), "e.json")).unwrap()).unwrap();
    povm["effects"].as_array_mut().unwrap().swap(0, 5);
    std::fs::write(path(d.path(), "bad.json"), povm.to_string()).unwrap();
    let o = run(
        d.path(),
        &[
            "recover", "--system", "s.json", "--input", "bad.json", "--out", "r2.json",
        ],
    );
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!path(d.path(), "r2.json").exists());
}

#[test]
fn sampling_is_deterministic_per_seed() {
    let d = workdir();
    run(
        d.path(),
        &["system", "build", "--kind", "finite", "--N", "3", "--out", "s.json"],
    );
    run(
        d.path(),
        &[
            "kernel", "build", "--kind", "random", "--dim", "3", "--seed", "1", "--out", "k.json",
        ],
    );
    run(
        d.path(),
        &[
            "kernel", "build", "--kind", "random", "--dim", "3", "--seed", "4", "--out", "rho.json",
        ],
    );
    run(
        d.path(),
        &[
            "povm", "build", "--system", "s.json", "--kernel", "k.json", "--out", "e.json",
        ],
    );
    let args = |out: &'static str| {
        [
            "sample", "--povm", "e.json", "--state", "rho.json", "--shots", "100000", "--seed", "42", "--out", out,
        ]
    };
    assert_eq!(code(&run(d.path(), &args("a.csv"))), 0);
    assert_eq!(code(&run(d.path(), &args("b.csv"))), 0);
    let a = std::fs::read_to_string(path(d.path(), "a.csv")).unwrap();
    assert_eq!(a, std::fs::read_to_string(path(d.path(), "b.csv")).unwrap());
    assert!(a.starts_with("label,count\n\"0,0\","));
    let total: u64 = a
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 100_000);
    assert_eq!(
        code(&run(
            d.path(),
            &["sample", "--povm", "e.json", "--state", "rho.json", "--shots", "0", "--out", "c.csv"]
        )),
        2
    );
}

#[test]
fn verify_finite_passes_and_corrupted_kernel_fails() {
    let d = workdir();
    run(
        d.path(),
        &["system", "build", "--kind", "finite", "--N", "5", "--out", "s.json"],
    );
    let o = run(
        d.path(),
        &[
            "verify",
            "--system",
            "s.json",
            "--suite",
            "finite-exact",
            "--random-kernels",
            "5",
            "--seed",
            "3",
            "--out",
            "rep.json",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path(d.path(), "rep.json")).unwrap()).unwrap();
    assert_eq!(rep["pass"], true);
    assert_eq!(rep["environment"]["seed"], 3);
    for r in rep["records"].as_array().unwrap() {
        assert!(r["residual"].as_f64().unwrap() <= 1e-10, "{r}");
    }

    run(
        d.path(),
        &["kernel", "build", "--kind", "vacuum", "--dim", "5", "--out", "k.json"],
    );
    let mut k: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path(d.path(), "k.json")).unwrap()).unwrap();
    k["data"][0][0][0] = serde_json::json!(0.9);
    std::fs::write(path(d.path(), "bad.json"), k.to_string()).unwrap();
    let o = run(
        d.path(),
        &[
            "verify",
            "--system",
            "s.json",
            "--kernel",
            "bad.json",
            "--suite",
            "finite-exact",
            "--out",
            "rep2.json",
        ],
    );
    assert_eq!(code(&o), 1);
    let rep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path(d.path(), "rep2.json")).unwrap()).unwrap();
    assert_eq!(rep["pass"], false);
    assert_eq!(rep["records"][0]["id"], "kernel-gate[0]");
    assert_eq!(rep["records"][0]["pass"], false);

    let o = run(
        d.path(),
        &[
            "verify",
            "--system",
            "s.json",
            "--suite",
            "planar-quadrature",
            "--out",
            "rep3.json",
        ],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn tolerance_overrides_are_applied() {
    let d = workdir();
    run(
        d.path(),
        &["system", "build", "--kind", "finite", "--N", "2", "--out", "s.json"],
    );
    std::fs::write(
        path(d.path(), "k.json"),
        r#"{"dim":2,"data":[[[0.5000005,0],[0,0]],[[0,0],[0.5000005,0]]]}"#,
    )
    .unwrap();
    let args = |extra: &[&'static str]| {
        let mut v = vec![
            "verify",
            "--system",
            "s.json",
            "--kernel",
            "k.json",
            "--suite",
            "finite-exact",
            "--out",
            "r.json",
        ];
        v.extend_from_slice(extra);
        v
    };
    // trace 1 + 1e-6 fails the default gate but passes a looser one; the
    // POVM normalization check still catches it
    let gate = |extra: &[&'static str]| {
        assert_eq!(code(&run(d.path(), &args(extra))), 1);
        let rep: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(path(d.path(), "r.json")).unwrap()).unwrap();
        (
            rep["records"][0]["pass"].as_bool().unwrap(),
            rep["environment"]["tolerances"]["trace"].as_f64().unwrap(),
        )
    };
    assert_eq!(gate(&[]), (false, 1e-9));
    std::fs::write(path(d.path(), "tol.json"), r#"{"trace": 1e-5}"#).unwrap();
    assert_eq!(gate(&["--tol-overrides", "tol.json"]), (true, 1e-5));
}
