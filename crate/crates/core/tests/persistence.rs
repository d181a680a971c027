use std::fs;

use crossloss::data::{generate_mog, MogConfig};
use crossloss::influence::{rank_and_split, InfluenceRecord};
use crossloss::io::{
    influence_lines, load_embeddings, load_weat_spec, read_influence_jsonl, read_mog, save_embeddings, write_jsonl,
    write_mog,
};
use crossloss::models::SkipGramModel;
use crossloss::{Error, Vocab};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn trained_sized_tables_survive_a_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let vocab = Vocab::from_words((0..40).map(|i| format!("w{i}"))).unwrap();
    let model = SkipGramModel::<f64>::random_init(vocab.clone(), 16, &mut ChaCha8Rng::seed_from_u64(9));
    let path = dir.path().join("input.txt");
    save_embeddings(&path, &vocab, 16, model.input_table()).unwrap();
    let (v, d, t) = load_embeddings::<f64>(&path).unwrap();
    assert_eq!((v, d), (vocab.clone(), 16));
    assert_eq!(t, model.input_table());
    let bytes = fs::read(&path).unwrap();
    save_embeddings(&path, &vocab, 16, &t).unwrap();
    assert_eq!(fs::read(&path).unwrap(), bytes);
}

#[test]
fn truncated_embedding_file_reports_its_name() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    fs::write(&path, "2 3\nfoo 1 2 3\nbar 1 2\n").unwrap();
    match load_embeddings::<f64>(&path) {
        Err(Error::Parse { source_name, line, .. }) => {
            assert!(source_name.ends_with("bad.txt"));
            assert_eq!(line, 3);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn jsonl_reloads_into_identical_rankings() {
    let records: Vec<InfluenceRecord<f64>> =
        (0..25).map(|i| InfluenceRecord { sample_id: i, score: ((i * 7919) % 23) as f64 - 11.5 }).collect();
    let sets = rank_and_split(&records, 5, 5);
    let lines = influence_lines(&records, |i| format!("sentence {i}"), Some(&sets));
    let mut buf = Vec::new();
    write_jsonl(&mut buf, &lines).unwrap();
    let back = read_influence_jsonl(&buf[..], "mem").unwrap();
    assert_eq!(back, lines);
    let amp: Vec<usize> = back.iter().filter(|l| l.rank > 0).map(|l| l.sample_id).collect();
    let mit: Vec<(i64, usize)> = back.iter().filter(|l| l.rank < 0).map(|l| (-l.rank, l.sample_id)).collect();
    assert_eq!(amp, sets.amplifying);
    let mut mit = mit;
    mit.sort();
    assert_eq!(mit.into_iter().map(|(_, id)| id).collect::<Vec<_>>(), sets.mitigating);
}

#[test]
fn weat_spec_files() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    fs::write(&good, r#"{"name":"career","X":["john"],"Y":["amy"],"A":["office"],"B":["home"]}"#).unwrap();
    assert_eq!(load_weat_spec(&good).unwrap().name, "career");
    let empty = dir.path().join("empty.json");
    fs::write(&empty, r#"{"name":"career","X":[],"Y":["amy"],"A":["office"],"B":["home"]}"#).unwrap();
    assert!(load_weat_spec(&empty).is_err());
}

#[test]
fn mog_csv_round_trip_is_exact() {
    let points = generate_mog::<f64>(&MogConfig::defaults(4)).unwrap();
    let mut buf = Vec::new();
    write_mog(&mut buf, &points).unwrap();
    assert_eq!(read_mog::<f64, _>(&buf[..], "mem").unwrap(), points);
}
