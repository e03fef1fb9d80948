use std::path::Path;
use std::process::{Command, Output};

fn h2s(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_h2s")).args(args).current_dir(dir).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn staged_commands_produce_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let sim = h2s(&["simulate", "--scenario", "INTERSECTING", "--dim", "20", "--samples", "40", "--out", "data"], d);
    assert!(sim.status.success(), "{}", stderr(&sim));
    assert!(d.join("data/dataset.json").exists() && d.join("data/truth.json").exists());

    // downstream stages name the missing upstream step
    let early = h2s(&["embed", "--out", "out"], d);
    assert_eq!(early.status.code(), Some(2));
    assert!(stderr(&early).contains("h2s fit"), "{}", stderr(&early));

    for args in [
        vec!["fit", "--input", "data/dataset.json", "--out", "out"],
        vec!["embed", "--out", "out"],
        vec!["infer", "--resamples", "200", "--out", "out"],
        vec!["render", "--out", "out"],
    ] {
        let o = h2s(&args, d);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    }
    for f in [
        "model.json",
        "embedding.json",
        "inference.json",
        "scene.svg",
        "scene.json",
        "diagrams/values.svg",
        "diagrams/significance.svg",
        "diagrams/pairwise.svg",
    ] {
        assert!(d.join("out").join(f).exists(), "missing {f}");
    }
    let svg = std::fs::read_to_string(d.join("out/scene.svg")).unwrap();
    assert!(svg.contains("<!-- config-hash: "));

    // a repeated stage with unchanged inputs is a no-op
    let before = std::fs::metadata(d.join("out/model.json")).unwrap().modified().unwrap();
    let again = h2s(&["fit", "--input", "data/dataset.json", "--out", "out"], d);
    assert!(again.status.success());
    assert_eq!(std::fs::metadata(d.join("out/model.json")).unwrap().modified().unwrap(), before);
}

#[test]
fn run_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let config = r#"{
  "data": {"source": "scenario", "kind": "TOUCHING", "dim": 10, "samples": [30, 30], "radii": [1.0, 1.0],
           "centers": [[0.0], [2.0]], "distribution": "BALL", "seed": 3},
  "seed": 3,
  "inference": {"resamples": 200, "alpha_level": 0.05},
  "out": "result"
}"#;
    std::fs::write(d.join("run.json"), config).unwrap();
    let o = h2s(&["run", "--config", "run.json"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("result/manifest.json")).unwrap()).unwrap();
    assert!(manifest["config_hash"].is_string());
    assert!(!d.join("result/.h2s-staging").exists());
}

#[test]
fn invalid_input_is_reported_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.csv"), "label,x,y\na,1,2\na,3,oops\nb,1\n").unwrap();
    let o = h2s(&["fit", "--input", "bad.csv", "--out", "out"], d);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 3"), "{err}");
    assert!(!d.join("out/model.json").exists());
}

#[test]
fn embedding_dimension_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let o = h2s(&["embed", "--dim", "5", "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = h2s(
        &["bench", "--estimators", "ADAPTIVE,MEAN_D2C", "--n-grid", "4,16", "--p-grid", "50", "--reps", "5", "--out", "b.csv"],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let mut reader = csv::Reader::from_path(d.join("b.csv")).unwrap();
    assert_eq!(reader.records().count(), 2 * 3 * 2);
}
