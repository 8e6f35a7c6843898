use std::process::Command;

fn kfiou(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_kfiou")).args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn iou_modes() {
    assert_eq!(kfiou(&["iou", "0,0,2,2,0", "1,0,2,2,0"]).1, "0.333333\n");
    assert_eq!(kfiou(&["iou", "--mode", "kfiou", "-3,-1,4,2,-30", "-3,-1,4,2,-30"]).1, "0.333333\n");
    let (code, out, _) = kfiou(&["iou", "--3d", "0,0,0,4,2,2,0", "0,0,0,4,2,2,0", "--all"]);
    assert_eq!(code, 0);
    assert!(out.contains("exact 1.000000"), "{out}");
}

#[test]
fn usage_errors_exit_two_with_empty_stdout() {
    for args in [
        &["iou", "0,0,2,2"][..],
        &["iou", "0,0,-2,2,0", "0,0,2,2,0"],
        &["loss", "0,0,2,2,0", "0,0,2,2,0", "--kf-form", "cubic"],
        &["evar", "--n", "0"],
        &["nonsense"],
    ] {
        let (code, out, err) = kfiou(args);
        assert_eq!(code, 2, "{args:?}: {err}");
        assert!(out.is_empty(), "{args:?}");
        assert!(!err.is_empty(), "{args:?}");
    }
}

#[test]
fn evar_is_byte_identical_across_threads() {
    let a = kfiou(&["evar", "--seed", "9", "--n", "500", "--threads", "1"]);
    let b = kfiou(&["evar", "--seed", "9", "--n", "500", "--threads", "3"]);
    let c = std::process::Command::new(env!("CARGO_BIN_EXE_kfiou"))
        .args(["evar", "--seed", "9", "--n", "500"])
        .env("KFIOU_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
    assert_eq!(a.1.as_bytes(), &c.stdout[..]);
}

#[test]
fn evar_writes_report_and_samples() {
    let dir = std::env::temp_dir().join(format!("kfiou-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (report, samples) = (dir.join("report.csv"), dir.join("samples.csv"));
    let (code, _, err) = kfiou(&[
        "evar",
        "--n",
        "50",
        "-o",
        report.to_str().unwrap(),
        "--samples",
        samples.to_str().unwrap(),
        "--assert-order",
    ]);
    assert_eq!(code, 0, "{err}");
    let r = std::fs::read_to_string(&report).unwrap();
    assert!(r.contains("method,emean,evar,n"));
    let s = std::fs::read_to_string(&samples).unwrap();
    assert_eq!(s.lines().filter(|l| !l.starts_with('#')).count(), 51);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn loss_reads_config_file() {
    let dir = std::env::temp_dir().join(format!("kfiou-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("loss.toml");
    std::fs::write(&cfg, "kf_form = \"linear\"\n").unwrap();
    let (code, out, err) =
        kfiou(&["loss", "0,0,4,2,0", "0,0,4,2,0", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["kf_loss"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12, "{out}");
    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    assert_eq!(kfiou(&["loss", "0,0,4,2,0", "0,0,4,2,0", "--config", cfg.to_str().unwrap()]).0, 2);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sweeps_and_selftest() {
    let (code, out, _) = kfiou(&["sweep", "angle", "--range", "0:90:30"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 5);
    let (code, out, _) = kfiou(&["sweep", "deviation", "--devs", "0,5", "--n", "100"]);
    assert_eq!(code, 0, "{out}");
    let (code, out, _) = kfiou(&["selftest", "--suite", "closed-form"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("PASS closed-form"), "{out}");
}
