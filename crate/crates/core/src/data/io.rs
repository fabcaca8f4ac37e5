//! JSON Lines dataset files, one conversation per line:
//!
//! ```text
//! {"id": "...", "turns": [{"result": {"scores": [...], "relevant_index": 0},
//!                          "question": {"scores": [...], "relevant_index": -1}}]}
//! ```
//!
//! `relevant_index` is 0-based and `-1` marks an absent relevant candidate.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::types::{ConversationRecord, RankList};

#[derive(Serialize)]
struct WireList<'a> {
    scores: &'a [f64],
    relevant_index: i64,
}

#[derive(Serialize)]
struct WireTurn<'a> {
    result: WireList<'a>,
    question: WireList<'a>,
}

#[derive(Serialize)]
struct WireRecord<'a> {
    id: &'a str,
    turns: Vec<WireTurn<'a>>,
}

fn wire_list(list: &RankList) -> WireList<'_> {
    WireList {
        scores: list.scores(),
        relevant_index: list.relevant_rank().map_or(-1, |r| r as i64 - 1),
    }
}

fn wire_record(record: &ConversationRecord) -> WireRecord<'_> {
    WireRecord {
        id: record.id(),
        turns: record
            .turns()
            .iter()
            .map(|t| WireTurn {
                result: wire_list(&t.result_list),
                question: wire_list(&t.question_list),
            })
            .collect(),
    }
}

pub fn write_records<W: Write>(records: &[ConversationRecord], mut out: W) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, &wire_record(record)).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_records(records: &[ConversationRecord], path: impl AsRef<Path>) -> Result<()> {
    write_records(records, BufWriter::new(File::create(path)?))
}

struct LineCtx {
    line: usize,
}

impl LineCtx {
    fn err(&self, field: impl Into<String>, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            field: field.into(),
            message: message.into(),
        }
    }

    fn get<'a>(&self, obj: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a Value> {
        obj.get(key)
            .ok_or_else(|| self.err(join(path, key), "missing field"))
    }

    fn object<'a>(&self, v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
        v.as_object()
            .ok_or_else(|| self.err(path, "expected an object"))
    }

    fn rank_list(&self, v: &Value, path: &str) -> Result<RankList> {
        let obj = self.object(v, path)?;
        let scores_path = join(path, "scores");
        let scores = self
            .get(obj, path, "scores")?
            .as_array()
            .ok_or_else(|| self.err(&scores_path, "expected an array of numbers"))?
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.as_f64()
                    .ok_or_else(|| self.err(format!("{scores_path}[{i}]"), "expected a number"))
            })
            .collect::<Result<Vec<f64>>>()?;
        let index_path = join(path, "relevant_index");
        let index = self
            .get(obj, path, "relevant_index")?
            .as_i64()
            .ok_or_else(|| self.err(&index_path, "expected an integer"))?;
        let k = scores.len() as i64;
        if index < -1 || index >= k {
            return Err(self.err(index_path, format!("{index} is outside -1..{k}")));
        }
        let rank = (index >= 0).then(|| index as usize + 1);
        RankList::new(scores, rank).map_err(|e| self.err(scores_path, e.to_string()))
    }

    fn record(&self, text: &str) -> Result<ConversationRecord> {
        let v: Value = serde_json::from_str(text).map_err(|e| self.err("<json>", e.to_string()))?;
        let obj = self.object(&v, "<record>")?;
        let id = self
            .get(obj, "", "id")?
            .as_str()
            .ok_or_else(|| self.err("id", "expected a string"))?;
        let turns = self
            .get(obj, "", "turns")?
            .as_array()
            .ok_or_else(|| self.err("turns", "expected an array"))?;
        let mut pairs = Vec::with_capacity(turns.len());
        for (i, t) in turns.iter().enumerate() {
            let path = format!("turns[{i}]");
            let tobj = self.object(t, &path)?;
            let result = self.rank_list(self.get(tobj, &path, "result")?, &join(&path, "result"))?;
            let question = self.rank_list(self.get(tobj, &path, "question")?, &join(&path, "question"))?;
            pairs.push((result, question));
        }
        ConversationRecord::new(id, pairs).map_err(|e| self.err("turns", e.to_string()))
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_owned()
    } else {
        format!("{path}.{key}")
    }
}

pub fn read_records<R: BufRead>(input: R) -> Result<Vec<ConversationRecord>> {
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(LineCtx { line: i + 1 }.record(&line)?);
    }
    Ok(records)
}

pub fn load_run_file(path: impl AsRef<Path>) -> Result<Vec<ConversationRecord>> {
    read_records(BufReader::new(File::open(path)?))
}
