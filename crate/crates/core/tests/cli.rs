use pwt_core::cli::run_args;
use std::path::{Path, PathBuf};

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut v = vec!["pwt"];
    v.extend_from_slice(args);
    run_args(v)
}

/// Data rows of an artifact CSV (metadata and header skipped).
fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

fn out_dir(tmp: &tempfile::TempDir, name: &str) -> PathBuf {
    tmp.path().join(name)
}

#[test]
fn check_pwt_verdicts() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out_dir(&tmp, "a");
    let (code, out, _) = run(&["check-pwt", "--config", &config("chebyshev.toml"), "--out", o.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.starts_with("PWT: yes, T = 1.5707963"), "{out}");
    assert!(o.join("verdict.json").exists() && o.join("spectrum.csv").exists());
    let o = out_dir(&tmp, "b");
    let (code, out, _) = run(&["check-pwt", "--config", &config("legendre.toml"), "--out", o.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out, "PWT: no (no commensurate T within eps_spec)");
}

#[test]
fn correlate_reflects_at_transfer_time() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out_dir(&tmp, "c");
    let (code, out, err) = run(&["--config", &config("bump_light_cone.toml"), "--out", o.to_str().unwrap(), "--svg"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("correlate:"));
    let rows = csv_rows(&o.join("correlate.csv"));
    let text = std::fs::read_to_string(o.join("correlate.csv")).unwrap();
    let period: f64 = text.lines().find_map(|l| l.strip_prefix("# transfer_time ")).unwrap().parse().unwrap();
    let at = |t: f64| -> Vec<&Vec<f64>> { rows.iter().filter(|r| (r[1] - t).abs() <= 1e-12 * period).collect() };
    let (r0, rt) = (at(0.0), at(period));
    assert_eq!(r0.len(), 129);
    assert_eq!(rt.len(), 129);
    let n = r0.len();
    for i in 0..n {
        let (a, b) = (rt[i], r0[n - 1 - i]);
        assert!((a[0] + b[0]).abs() < 1e-12);
        assert!((a[2] - b[2]).abs() <= 1e-9 && (a[3] - b[3]).abs() <= 1e-9, "x = {}", a[0]);
    }
    for f in ["correlate_re.svg", "correlate_abs.svg"] {
        let s = std::fs::read_to_string(o.join(f)).unwrap();
        assert!(s.starts_with("<?xml") && s.trim_end().ends_with("</svg>"));
    }
}

#[test]
fn outputs_are_deterministic_and_stamped() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (out_dir(&tmp, "x"), out_dir(&tmp, "y"));
    for d in [&a, &b] {
        let (code, _, err) = run(&["correlate", "--config", &config("chebyshev.toml"), "--out", d.to_str().unwrap(), "--modes", "32"]);
        assert_eq!(code, 0, "{err}");
    }
    let fa = std::fs::read(a.join("correlate.csv")).unwrap();
    assert_eq!(fa, std::fs::read(b.join("correlate.csv")).unwrap());
    let text = String::from_utf8(fa).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# pwt-core "));
    let hash = lines.next().unwrap().strip_prefix("# config-sha256 ").unwrap().to_string();
    assert_eq!(hash.len(), 64);
    let json = std::fs::read_to_string(a.join("correlate.json")).unwrap();
    assert!(json.contains(&hash));
    // A different override changes the hash.
    let c = out_dir(&tmp, "z");
    run(&["correlate", "--config", &config("chebyshev.toml"), "--out", c.to_str().unwrap(), "--modes", "16"]);
    let other = std::fs::read_to_string(c.join("correlate.csv")).unwrap();
    assert!(!other.contains(&hash));
}

#[test]
fn invert_writes_reconstruction() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out_dir(&tmp, "i");
    let (code, out, err) = run(&["--config", &config("invert_synthetic.toml"), "--out", o.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("round-trip max error"), "{out}");
    let k = csv_rows(&o.join("k_recovered.csv"));
    let mid = k.len() / 2;
    assert!(k[mid][0].abs() < 1e-12 && (k[mid][1] - 1.0).abs() < 1e-12);
    assert!(o.join("roundtrip.json").exists() && o.join("qhat.csv").exists() && o.join("invert.json").exists());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&["--bogus"]).0, 1);
    assert_eq!(run(&["spectrum"]).0, 1);
    assert_eq!(run(&["spectrum", "--config", "/nonexistent.toml"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);

    // Malformed target CSV is an input error.
    let bad = tmp.path().join("bad.csv");
    std::fs::write(&bad, "n,E\n0,0\n1,oops\n").unwrap();
    let cfg = tmp.path().join("inv.toml");
    std::fs::write(&cfg, format!("[model]\nv = {{ kind = \"constant\", value = 1.0 }}\n[invert]\ntarget = {:?}\nbasis_size = 1\n", bad.to_str().unwrap())).unwrap();
    let o = out_dir(&tmp, "e");
    let (code, _, err) = run(&["invert", "--config", cfg.to_str().unwrap(), "--out", o.to_str().unwrap()]);
    assert_eq!(code, 1, "{err}");

    // 1/v not integrable: the coordinate map diverges, a numerical failure.
    let cfg = tmp.path().join("div.toml");
    std::fs::write(&cfg, "[model]\nv = { kind = \"power\", amplitude = 1.0, alpha = 1.0 }\n").unwrap();
    let (code, _, err) = run(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", o.to_str().unwrap()]);
    assert_eq!(code, 2, "{err}");

    // Even grid counts are rejected as usage errors.
    let (code, _, _) = run(&["check-pwt", "--config", &config("chebyshev.toml"), "--grid", "100", "--out", o.to_str().unwrap()]);
    assert_eq!(code, 1);
}

#[test]
fn spectrum_and_wkb_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let o = out_dir(&tmp, "s");
    let (code, out, err) = run(&["spectrum", "--config", &config("bump_wkb.toml"), "--out", o.to_str().unwrap(), "--n-max", "60", "--svg"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("Weyl gap"));
    assert_eq!(csv_rows(&o.join("spectrum.csv")).len(), 61);
    assert!(o.join("spectrum.svg").exists());
    let o = out_dir(&tmp, "w");
    let (code, out, err) = run(&["--config", &config("bump_wkb.toml"), "--out", o.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("moments exclude PWT"), "{out}");
    assert_eq!(csv_rows(&o.join("wkb.csv")).len(), 201);
}
