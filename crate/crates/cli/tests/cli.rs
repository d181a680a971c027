use std::fs;
use std::path::Path;

use crossloss::io::{read_influence_jsonl, InfluenceLine};
use crossloss_cli::run_from;
use tempfile::TempDir;

fn run(args: &[&str]) -> anyhow::Result<String> {
    let mut argv = vec!["crossloss"];
    argv.extend_from_slice(args);
    run_from(argv)
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn small_mog(dir: &TempDir) -> (String, String) {
    let data = path(dir, "mog.csv");
    let model = path(dir, "dec.json");
    run(&["mog-gen", "--seed", "2", "--per-class", "8", "--out", &data]).unwrap();
    run(&["train-dec", "--seed", "2", "--data", &data, "--lr", "0.1", "--out", &model]).unwrap();
    (data, model)
}

fn small_skipgram(dir: &TempDir) -> (String, String, String) {
    let corpus = path(dir, "corpus.txt");
    let spec = path(dir, "spec.json");
    let model = path(dir, "sg");
    run(&["plant-corpus", "--seed", "4", "--sentences", "300", "--out", &corpus, "--spec-out", &spec]).unwrap();
    run(&["train-sg", "--seed", "4", "--corpus", &corpus, "--epochs", "2", "--out-dir", &model]).unwrap();
    (corpus, spec, model)
}

fn write_spec(dir: &TempDir, body: &str) -> String {
    let p = path(dir, "custom_spec.json");
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn randomized_commands_refuse_to_run_without_a_seed() {
    let dir = TempDir::new().unwrap();
    let err = run(&["mog-gen", "--out", &path(&dir, "mog.csv")]).unwrap_err();
    assert!(format!("{err:#}").contains("seed"), "{err:#}");
    assert!(!dir.path().join("mog.csv").exists());
}

#[test]
fn every_output_has_a_metadata_sidecar() {
    let dir = TempDir::new().unwrap();
    let (data, _) = small_mog(&dir);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(format!("{data}.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "mog-gen");
    assert_eq!(meta["seed"], 2);
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(meta["config"]["per_class"], 8);
}

#[test]
fn flags_override_the_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = path(&dir, "run.toml");
    let out = path(&dir, "mog.csv");
    fs::write(&cfg, format!("seed = 9\n\n[mog-gen]\nper_class = 4\nsigma = 0.5\nout = {out:?}\n")).unwrap();

    run(&["--config", &cfg, "mog-gen", "--per-class", "6"]).unwrap();
    let rows = fs::read_to_string(&out).unwrap().lines().count() - 1;
    assert_eq!(rows, 18);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(format!("{out}.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 9);
    assert_eq!(meta["config"]["sigma"], 0.5);

    fs::write(&cfg, "[mog-gen]\nper_clas = 4\n").unwrap();
    let err = run(&["--config", &cfg, "mog-gen", "--seed", "1", "--out", &out]).unwrap_err();
    assert!(format!("{err:#}").contains("per_clas"), "{err:#}");
}

#[test]
fn influence_top_writes_split_rankings() {
    let dir = TempDir::new().unwrap();
    let (data, model) = small_mog(&dir);
    let out = path(&dir, "scores.jsonl");
    run(&[
        "influence", "--seed", "2", "--train-loss", "dec", "--test-loss", "nll", "--model", &model, "--data", &data,
        "--test-points", "3", "--top", "4", "--out", &out,
    ])
    .unwrap();
    let lines: Vec<InfluenceLine> = read_influence_jsonl(fs::File::open(&out).unwrap(), &out).unwrap();
    assert_eq!(lines.len(), 24);
    let ranks: Vec<i64> = lines.iter().map(|l| l.rank).collect();
    assert_eq!(&ranks[..4], &[1, 2, 3, 4]);
    assert_eq!(&ranks[ranks.len() - 4..], &[-4, -3, -2, -1]);
    assert!(ranks[4..ranks.len() - 4].iter().all(|&r| r == 0));
    assert!(lines.windows(2).all(|w| w[0].score >= w[1].score));
    assert!(lines[0].score > 0.0 && lines.last().unwrap().score < 0.0);
}

#[test]
fn loo_audit_reports_both_thresholds() {
    let dir = TempDir::new().unwrap();
    let (data, _) = small_mog(&dir);
    let out = path(&dir, "audit.csv");
    run(&["loo-audit", "--seed", "2", "--data", &data, "--nll-steps", "300", "--out", &out]).unwrap();
    let summary = fs::read_to_string(&out).unwrap();
    let header = summary.lines().next().unwrap();
    assert_eq!(header, "pipeline,scope,count,fraction_above_0.6,fraction_above_0.8");
    for pipeline in ["cross_loss", "matched"] {
        assert!(summary.lines().any(|l| l.starts_with(&format!("{pipeline},all,"))), "{summary}");
    }
    let points = fs::read_to_string(Path::new(&out).with_extension("points.csv")).unwrap();
    assert_eq!(points.lines().next().unwrap(), "pipeline,test_id,class,r");
}

#[test]
fn out_of_vocabulary_words_are_listed_or_skipped() {
    let dir = TempDir::new().unwrap();
    let (_, spec, model) = small_skipgram(&dir);
    let text = fs::read_to_string(&spec).unwrap();
    let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
    value["X"].as_array_mut().unwrap().push("zzzunseen".into());
    value["A"].as_array_mut().unwrap().push("qqqmissing".into());
    let custom = write_spec(&dir, &value.to_string());

    let err = run(&["weat", "--model", &model, "--weat-spec", &custom]).unwrap_err();
    let msg = format!("{err:#}");
    assert!(msg.contains("zzzunseen") && msg.contains("qqqmissing"), "{msg}");

    let out = path(&dir, "weat.json");
    run(&["weat", "--model", &model, "--weat-spec", &custom, "--skip-oov", "--out", &out]).unwrap();
    let skipped: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let plain = path(&dir, "plain.json");
    run(&["weat", "--model", &model, "--weat-spec", &spec, "--out", &plain]).unwrap();
    let reference: serde_json::Value = serde_json::from_str(&fs::read_to_string(&plain).unwrap()).unwrap();
    assert_eq!(skipped["effect"], reference["effect"]);
}

#[test]
fn empty_target_set_is_rejected() {
    let dir = TempDir::new().unwrap();
    let (_, _, model) = small_skipgram(&dir);
    let custom = write_spec(&dir, r#"{"name": "bad", "X": [], "Y": ["he"], "A": ["career"], "B": ["family"]}"#);
    assert!(run(&["weat", "--model", &model, "--weat-spec", &custom]).is_err());
}

#[test]
fn overbias_rejects_mitigate_mode() {
    let dir = TempDir::new().unwrap();
    let (corpus, spec, model) = small_skipgram(&dir);
    let err = run(&[
        "overbias", "--seed", "4", "--model", &model, "--corpus", &corpus, "--weat-spec", &spec, "--mode", "mitigate",
        "--out-dir", &path(&dir, "o"),
    ])
    .unwrap_err();
    assert!(format!("{err:#}").contains("mitigate"));
}

#[test]
fn mitigate_writes_a_trajectory_and_a_loadable_model() {
    let dir = TempDir::new().unwrap();
    let (corpus, spec, model) = small_skipgram(&dir);
    let out = path(&dir, "mit");
    run(&[
        "mitigate", "--seed", "4", "--model", &model, "--corpus", &corpus, "--weat-spec", &spec, "--iterations", "2",
        "--depth", "200", "--k-amplify", "10", "--k-mitigate", "10", "--out-dir", &out,
    ])
    .unwrap();
    let traj = fs::read_to_string(dir.path().join("mit/trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next().unwrap(), "iteration,effect");
    assert!(traj.lines().count() >= 2);
    run(&["weat", "--model", &out, "--weat-spec", &spec]).unwrap();
}
