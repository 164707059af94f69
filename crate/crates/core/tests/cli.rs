use std::path::Path;
use std::process::{Command, Output};

fn nirfuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nirfuse"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scene() -> &'static str {
    concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/scene128.png")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).trim().to_string()
}

#[test]
fn synth_fuse_metrics_round() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = format!("{}/pair_", s(dir.path()));
    let out = nirfuse(&[
        "synth",
        "--clean",
        scene(),
        "--sigma",
        "0.1",
        "--brightness",
        "0.2",
        "--erase-rect",
        "88,64,16,16",
        "--seed",
        "7",
        "--out-prefix",
        &prefix,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in ["vci", "ngi", "clean"] {
        assert!(dir.path().join(format!("pair_{name}.png")).exists());
    }

    let fused = dir.path().join("fused.png");
    let stages = dir.path().join("stages");
    let out = nirfuse(&[
        "fuse",
        "--vci",
        &format!("{prefix}vci.png"),
        "--ngi",
        &format!("{prefix}ngi.png"),
        "--out",
        s(&fused),
        "--dump-intermediates",
        s(&stages),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(fused.exists());
    assert_eq!(std::fs::read_dir(&stages).unwrap().count(), 4);

    let psnr = |a: &str| -> f64 {
        let out = nirfuse(&["metrics", "--a", a, "--b", &format!("{prefix}clean.png")]);
        assert!(out.status.success());
        stdout(&out).parse().unwrap()
    };
    let noisy = psnr(&format!("{prefix}vci.png"));
    let fused_db = psnr(s(&fused));
    assert!(fused_db > noisy + 6.0, "{fused_db} vs {noisy}");
}

#[test]
fn metrics_of_identical_images_is_capped() {
    let out = nirfuse(&["metrics", "--a", scene(), "--b", scene()]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "99.0000");
}

#[test]
fn config_file_is_applied_and_dumps_next_to_output() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = format!("{}/p_", s(dir.path()));
    assert!(
        nirfuse(&["synth", "--clean", scene(), "--out-prefix", &prefix])
            .status
            .success()
    );
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(
        &cfg,
        "mu_c = 0.3\ndump_intermediates = true\n[detail_solver]\nouter_iters = 5\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    std::fs::create_dir(&out_dir).unwrap();
    let out = nirfuse(&[
        "fuse",
        "--vci",
        &format!("{prefix}vci.png"),
        "--ngi",
        &format!("{prefix}ngi.png"),
        "--out",
        s(&out_dir.join("f.png")),
        "--config",
        s(&cfg),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(std::fs::read_dir(&out_dir).unwrap().count(), 5);
}

#[test]
fn unknown_config_key_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "mu_q = 1.0\n").unwrap();
    let out = nirfuse(&[
        "fuse",
        "--vci",
        scene(),
        "--ngi",
        scene(),
        "--out",
        s(&dir.path().join("f.png")),
        "--config",
        s(&cfg),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error:") && err.contains("mu_q"), "{err}");
    assert!(!dir.path().join("f.png").exists());
}

#[test]
fn missing_input_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = nirfuse(&[
        "fuse",
        "--vci",
        s(&dir.path().join("none.png")),
        "--ngi",
        scene(),
        "--out",
        s(&dir.path().join("f.png")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn bad_arguments_fail() {
    assert!(!nirfuse(&[
        "synth",
        "--clean",
        scene(),
        "--erase-rect",
        "1,2,3",
        "--out-prefix",
        "x"
    ])
    .status
    .success());
    assert!(!nirfuse(&["frobnicate"]).status.success());
}
