//! On-disk formats.
//!
//! * Embeddings: line 1 `<vocab_size> <dim>`, then `<word> <f1> … <fd>` per
//!   word in id order, shortest round-trip decimals, LF line endings.
//! * Influence records: JSON Lines with `sample_id`, `score`, `text`, `rank`.
//! * WEAT specs: JSON with `name`, `X`, `Y`, `A`, `B`.
//! * MOG points: CSV `x,y,label`.
//! * Trajectories: CSV `iteration,effect`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::influence::{rank, InfluenceRecord, InfluenceSets};
use crate::models::LabeledPoint;
use crate::oracle::CorrelationReport;
use crate::scalar::Scalar;
use crate::vocab::Vocab;
use crate::weat::WeatSpec;

fn parse_err(source_name: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { source_name: source_name.to_string(), line, message: message.into() }
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_embeddings<T: Scalar, W: Write>(out: &mut W, vocab: &Vocab, dim: usize, table: &[T]) -> Result<()> {
    if table.len() != vocab.len() * dim {
        return Err(Error::LengthMismatch { context: "embedding table", expected: vocab.len() * dim, actual: table.len() });
    }
    writeln!(out, "{} {}", vocab.len(), dim)?;
    for (word, row) in vocab.words().iter().zip(table.chunks(dim.max(1))) {
        if word.is_empty() || word.contains(char::is_whitespace) {
            return Err(Error::InvalidConfig(format!("word {word:?} cannot be stored in the text format")));
        }
        write!(out, "{word}")?;
        for x in row {
            write!(out, " {x}")?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a table written by [`write_embeddings`]; `source_name` labels
/// diagnostics.
pub fn read_embeddings<T: Scalar, R: Read>(input: R, source_name: &str) -> Result<(Vocab, usize, Vec<T>)> {
    let mut lines = BufReader::new(input).lines();
    let header = lines.next().ok_or_else(|| parse_err(source_name, 1, "empty file"))??;
    let mut parts = header.split(' ');
    let mut field = |what: &str| -> Result<usize> {
        parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| parse_err(source_name, 1, format!("expected `<vocab_size> <dim>`, missing {what}")))
    };
    let (n, dim) = (field("vocab_size")?, field("dim")?);
    if parts.next().is_some() {
        return Err(parse_err(source_name, 1, "trailing fields in header"));
    }
    let mut words = Vec::with_capacity(n);
    let mut table = Vec::with_capacity(n * dim);
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line?;
        let mut parts = line.split(' ');
        let word = parts.next().filter(|w| !w.is_empty()).ok_or_else(|| parse_err(source_name, lineno, "missing word"))?;
        let mut count = 0;
        for p in parts {
            let x: T = p.parse().map_err(|_| parse_err(source_name, lineno, format!("bad number {p:?}")))?;
            table.push(x);
            count += 1;
        }
        if count != dim {
            return Err(parse_err(source_name, lineno, format!("expected {dim} values, found {count}")));
        }
        words.push(word.to_string());
    }
    if words.len() != n {
        return Err(parse_err(source_name, words.len() + 1, format!("header declares {n} words, found {}", words.len())));
    }
    let vocab = Vocab::from_words(words).map_err(|e| parse_err(source_name, 0, e.to_string()))?;
    Ok((vocab, dim, table))
}

pub fn save_embeddings<T: Scalar>(path: &Path, vocab: &Vocab, dim: usize, table: &[T]) -> Result<()> {
    let mut out = create(path)?;
    write_embeddings(&mut out, vocab, dim, table)?;
    out.flush()?;
    Ok(())
}

pub fn load_embeddings<T: Scalar>(path: &Path) -> Result<(Vocab, usize, Vec<T>)> {
    read_embeddings(File::open(path)?, &path.display().to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfluenceLine {
    pub sample_id: usize,
    pub score: f64,
    pub text: String,
    pub rank: i64,
}

/// One line per record, in descending score order (ties by id).
///
/// Without `sets`, `rank` is the 1-based position in that order. With sets,
/// amplifying samples get ranks `1..=|A|`, mitigating samples `-1..=-|M|`
/// (most extreme first) and every other sample 0.
pub fn influence_lines<T: Scalar>(
    records: &[InfluenceRecord<T>],
    text_of: impl Fn(usize) -> String,
    sets: Option<&InfluenceSets>,
) -> Vec<InfluenceLine> {
    rank(records)
        .iter()
        .enumerate()
        .map(|(pos, r)| {
            let rank = match sets {
                None => pos as i64 + 1,
                Some(s) => {
                    if let Some(i) = s.amplifying.iter().position(|&id| id == r.sample_id) {
                        i as i64 + 1
                    } else if let Some(i) = s.mitigating.iter().position(|&id| id == r.sample_id) {
                        -(i as i64 + 1)
                    } else {
                        0
                    }
                }
            };
            InfluenceLine { sample_id: r.sample_id, score: r.score.to_f64_lossy(), text: text_of(r.sample_id), rank }
        })
        .collect()
}

pub fn write_jsonl<S: Serialize, W: Write>(out: &mut W, items: &[S]) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut *out, item)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_influence_jsonl<R: Read>(input: R, source_name: &str) -> Result<Vec<InfluenceLine>> {
    BufReader::new(input)
        .lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.is_empty()))
        .map(|(i, line)| serde_json::from_str(&line?).map_err(|e| parse_err(source_name, i + 1, e.to_string())))
        .collect()
}

/// Parses and validates a WEAT spec (lower-cased, non-empty, disjoint).
pub fn read_weat_spec<R: Read>(input: R, source_name: &str) -> Result<WeatSpec> {
    let spec: WeatSpec =
        serde_json::from_reader(input).map_err(|e| parse_err(source_name, e.line(), e.to_string()))?;
    spec.normalized()
}

pub fn load_weat_spec(path: &Path) -> Result<WeatSpec> {
    read_weat_spec(File::open(path)?, &path.display().to_string())
}

#[derive(Serialize, Deserialize)]
struct MogRow<T> {
    x: T,
    y: T,
    label: usize,
}

pub fn write_mog<T: Scalar + Serialize, W: Write>(out: W, points: &[LabeledPoint<T>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        let [x, y] = p.x[..] else {
            return Err(Error::InvalidConfig(format!("CSV points must be 2-D, got {}-D", p.x.len())));
        };
        w.serialize(MogRow { x, y, label: p.label })?;
    }
    if points.is_empty() {
        w.write_record(["x", "y", "label"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_mog<T: Scalar + for<'de> Deserialize<'de>, R: Read>(input: R, source_name: &str) -> Result<Vec<LabeledPoint<T>>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x", "y", "label"] {
        return Err(parse_err(source_name, 1, "expected header `x,y,label`"));
    }
    r.deserialize::<MogRow<T>>()
        .enumerate()
        .map(|(i, row)| {
            let row = row.map_err(|e| parse_err(source_name, i + 2, e.to_string()))?;
            Ok(LabeledPoint::new(vec![row.x, row.y], row.label))
        })
        .collect()
}

/// `iteration,effect`, iteration 0 being the untouched model.
pub fn write_trajectory<T: Scalar, W: Write>(out: W, effects: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "effect"])?;
    for (i, e) in effects.iter().enumerate() {
        w.write_record([i.to_string(), e.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn threshold_column(t: f64) -> String {
    format!("fraction_above_{t}")
}

/// Summary rows `pipeline,scope,count,fraction_above_<t>…`; scope is `all`
/// or `class_<c>`.
pub fn write_correlation_summary<W: Write>(out: W, reports: &[&CorrelationReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let thresholds: Vec<f64> = reports.first().map(|r| r.fraction_above.iter().map(|&(t, _)| t).collect()).unwrap_or_default();
    let mut header = vec!["pipeline".to_string(), "scope".into(), "count".into()];
    header.extend(thresholds.iter().map(|&t| threshold_column(t)));
    w.write_record(&header)?;
    for r in reports {
        let mut row = vec![r.pipeline.clone(), "all".into(), r.per_test_point.len().to_string()];
        row.extend(r.fraction_above.iter().map(|&(_, f)| f.to_string()));
        w.write_record(&row)?;
        for c in &r.class_breakdown {
            let mut row = vec![r.pipeline.clone(), format!("class_{}", c.class), c.count.to_string()];
            row.extend(c.fraction_above.iter().map(|&(_, f)| f.to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Per-test-point rows `pipeline,test_id,class,r`.
pub fn write_correlation_points<W: Write>(out: W, reports: &[&CorrelationReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pipeline", "test_id", "class", "r"])?;
    for r in reports {
        for &(id, class, rho) in &r.per_test_point {
            w.write_record([r.pipeline.clone(), id.to_string(), class.to_string(), rho.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
