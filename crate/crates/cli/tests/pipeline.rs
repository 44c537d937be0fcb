mod common;

use std::path::Path;
use std::process::{Command, Output};

use ppl_cli::pipeline::{Manifest, StageStatus};
use ppl_cli::{AnalysisConfig, Pipeline, STAGES};
use ppl_core::geometry::{NodeSet, Triangulation};

fn ppl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppl")).args(args).env("PPL_LOG", "warn").output().unwrap()
}

fn manifest(dir: &Path) -> Manifest {
    serde_json::from_slice(&std::fs::read(dir.join("run/manifest.json")).unwrap()).unwrap()
}

#[test]
fn full_run_then_resume() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::small_config(dir.path());
    let cfg = cfg.to_str().unwrap();

    let out = ppl(&["run", "--config", cfg, "--threads", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(dir.path());
    let names: Vec<&str> = m.stages.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, STAGES);
    assert!(m.stages.iter().all(|s| s.status == StageStatus::Computed));
    for s in &m.stages {
        let d = dir.path().join("run").join(&s.name);
        assert!(d.join("stage.json").exists(), "{}", s.name);
        for f in &s.files {
            assert!(d.join(f).exists(), "{}/{f}", s.name);
        }
    }
    let fit_before = std::fs::read(dir.path().join("run/fit/fit.json")).unwrap();

    let out = ppl(&["run", "--config", cfg, "--resume"]);
    assert!(out.status.success());
    let m = manifest(dir.path());
    assert_eq!(m.stages.len(), 9);
    assert!(m.stages.iter().all(|s| s.status == StageStatus::Cached));
    assert_eq!(std::fs::read(dir.path().join("run/fit/fit.json")).unwrap(), fit_before);

    // a single stage without --resume recomputes only that stage
    let out = ppl(&["fit", "--config", cfg]);
    assert!(out.status.success());
    let m = manifest(dir.path());
    let fit = m.stages.iter().find(|s| s.name == "fit").unwrap();
    assert_eq!(fit.status, StageStatus::Computed);
    assert_eq!(m.stages.iter().find(|s| s.name == "cross-validate").unwrap().status, StageStatus::Cached);
    assert_eq!(std::fs::read(dir.path().join("run/fit/fit.json")).unwrap(), fit_before);

    // different seed: resuming the same directory is refused as a config error
    let out = ppl(&["run", "--config", cfg, "--resume", "--seed", "99"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("refusing to resume"));
}

#[test]
fn changed_input_invalidates_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = common::small_config(dir.path());
    let cfg = AnalysisConfig::load(&cfg_path).unwrap();
    Pipeline::new(cfg.clone(), false).unwrap().threshold(true).unwrap();

    let status = |p: &Pipeline, name: &str| p.manifest().stages.iter().find(|s| s.name == name).unwrap().status;

    let mut p = Pipeline::new(cfg.clone(), true).unwrap();
    p.threshold(true).unwrap();
    p.sample(true).unwrap();
    assert_eq!(status(&p, "threshold"), StageStatus::Cached);
    assert_eq!(status(&p, "extract"), StageStatus::Cached);

    common::write_sample(dir.path(), 400, 12);
    let mut p = Pipeline::new(cfg, true).unwrap();
    p.threshold(true).unwrap();
    assert_eq!(status(&p, "threshold"), StageStatus::Computed);
    assert_eq!(status(&p, "extract"), StageStatus::Computed);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::small_config(dir.path());
    let text = std::fs::read_to_string(&cfg).unwrap();

    let out = ppl(&["density", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, text.replace("zeta = 0.5", "zeta = 1.5")).unwrap();
    let out = ppl(&["density", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("threshold.zeta"));

    std::fs::write(dir.path().join("broken.csv"), "direction,season,hs\n10,20,abc\n").unwrap();
    let broken = dir.path().join("broken.toml");
    std::fs::write(&broken, text.replace("peaks.csv", "broken.csv")).unwrap();
    let out = ppl(&["extract-peaks", "--config", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("extract"));

    let out = ppl(&["density", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn subcommands_write_their_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::small_config(dir.path());
    let cfg = cfg.to_str().unwrap();
    let out_dir = dir.path().join("elsewhere");
    let o = out_dir.to_str().unwrap();
    for cmd in ["quantiles", "simulate", "tailplot"] {
        let out = ppl(&[cmd, "--config", cfg, "--out", o]);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let p = out_dir.join("predict");
    for f in ["quantiles.csv", "quantiles.json", "simulated.csv", "tail_all.csv", "tail_octants.json"] {
        assert!(p.join(f).exists(), "{f}");
    }
    // partial predictions are not stamped as a complete stage
    assert!(!p.join("stage.json").exists());
    let sim = std::fs::read_to_string(p.join("simulated.csv")).unwrap();
    assert!(sim.starts_with("direction,"));
    assert_eq!(sim.lines().count(), 1 + 5 * 400);
}

#[test]
fn exported_node_set_round_trips_through_the_loader() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = common::studio_config(dir.path(), 300);
    let mut p = Pipeline::new(AnalysisConfig::load(&cfg_path).unwrap(), false).unwrap();
    let tri = p.triangulation(true).unwrap().clone();
    let exported = dir.path().join("run/triangulate/nodes.json");

    let text = std::fs::read_to_string(&cfg_path).unwrap();
    let start = text.find("[nodes]").unwrap();
    let file_cfg = format!("{}[nodes]\nkind = \"file\"\npath = \"run/triangulate/nodes.json\"\n", &text[..start])
        .replace("output = \"run\"", "output = \"run2\"");
    let file_path = dir.path().join("from_file.toml");
    std::fs::write(&file_path, file_cfg).unwrap();
    let mut q = Pipeline::new(AnalysisConfig::load(&file_path).unwrap(), false).unwrap();
    assert_eq!(q.triangulation(true).unwrap(), &tri);

    let ns = NodeSet::from_json(&std::fs::read_to_string(exported).unwrap()).unwrap();
    assert_eq!(Triangulation::build_irregular_grid(&ns).unwrap(), tri);
    assert_eq!(tri.bin_count(), 12);
}
