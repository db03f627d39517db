//! JSONL readers and writers.
//!
//! Records are decoded field by field rather than through serde derive so a
//! bad line reports both its line number and the offending key.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::Serialize;
use serde_json::{Map, Value};

use super::types::{majority_label, AccountRecord, CleanPair, Label, ReplyPair, Vote, ANNOTATORS};
use super::CorpusError;

const ACCOUNT_KEYS: [&str; 10] = [
    "account_id",
    "screen_name",
    "profile_text",
    "created_at",
    "snapshot_at",
    "total_posts",
    "followers_count",
    "following_count",
    "verified",
    "label",
];

const PAIR_KEYS: [&str; 8] = [
    "pair_id",
    "parent_text",
    "reply_text",
    "parent_author_id",
    "reply_author_id",
    "reply_created_at",
    "label",
    "annotator_votes",
];

const CLEAN_KEYS: [&str; 3] = ["pair_id", "parent_text", "reply_text"];

struct Line<'a> {
    no: usize,
    obj: &'a Map<String, Value>,
}

impl Line<'_> {
    fn err(&self, field: &str, message: impl Into<String>) -> CorpusError {
        CorpusError::Schema {
            line: self.no,
            field: field.to_string(),
            message: message.into(),
        }
    }

    fn get(&self, field: &str) -> Result<&Value, CorpusError> {
        self.obj.get(field).ok_or_else(|| self.err(field, "missing"))
    }

    fn string(&self, field: &str) -> Result<String, CorpusError> {
        self.get(field)?
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| self.err(field, "expected a string"))
    }

    fn non_empty(&self, field: &str) -> Result<String, CorpusError> {
        let s = self.string(field)?;
        if s.is_empty() {
            return Err(self.err(field, "must be non-empty"));
        }
        Ok(s)
    }

    fn count(&self, field: &str) -> Result<u64, CorpusError> {
        let v = self.get(field)?;
        if let Some(n) = v.as_u64() {
            return Ok(n);
        }
        match v.as_i64() {
            Some(n) => Err(self.err(field, format!("must be non-negative, got {n}"))),
            None => Err(self.err(field, "expected a non-negative integer")),
        }
    }

    fn boolean(&self, field: &str) -> Result<bool, CorpusError> {
        self.get(field)?
            .as_bool()
            .ok_or_else(|| self.err(field, "expected a boolean"))
    }

    fn timestamp(&self, field: &str) -> Result<DateTime<Utc>, CorpusError> {
        let s = self.string(field)?;
        DateTime::parse_from_rfc3339(&s)
            .map(|t| t.with_timezone(&Utc))
            .map_err(|e| self.err(field, format!("not an ISO-8601 timestamp with offset: {e}")))
    }

    fn label(&self, field: &str) -> Result<Label, CorpusError> {
        let s = self.string(field)?;
        Label::parse(&s).ok_or_else(|| self.err(field, format!("unknown label {s:?}")))
    }

    fn votes(&self, field: &str) -> Result<Vec<Vote>, CorpusError> {
        let arr = self
            .get(field)?
            .as_array()
            .ok_or_else(|| self.err(field, "expected an array"))?;
        if !(arr.is_empty() || arr.len() == ANNOTATORS) {
            return Err(self.err(field, format!("expected 0 or {ANNOTATORS} votes, got {}", arr.len())));
        }
        arr.iter()
            .map(|v| match v.as_str() {
                Some("general") => Ok(Vote::General),
                Some("zombie") => Ok(Vote::Zombie),
                _ => Err(self.err(field, format!("invalid vote {v}"))),
            })
            .collect()
    }

    fn exact_keys(&self, keys: &[&str]) -> Result<(), CorpusError> {
        for k in self.obj.keys() {
            if !keys.contains(&k.as_str()) {
                return Err(self.err(k, "unexpected key"));
            }
        }
        for k in keys {
            if !self.obj.contains_key(*k) {
                return Err(self.err(k, "missing"));
            }
        }
        Ok(())
    }
}

fn read_objects(
    path: &Path,
    mut each: impl FnMut(Line<'_>) -> Result<(), CorpusError>,
) -> Result<(), CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let no = i + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| CorpusError::Json {
            line: no,
            message: e.to_string(),
        })?;
        let obj = value.as_object().ok_or_else(|| CorpusError::Json {
            line: no,
            message: "expected a JSON object".into(),
        })?;
        each(Line { no, obj })?;
    }
    Ok(())
}

pub fn load_accounts(path: &Path) -> Result<Vec<AccountRecord>, CorpusError> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    read_objects(path, |l| {
        l.exact_keys(&ACCOUNT_KEYS)?;
        let rec = AccountRecord {
            account_id: l.non_empty("account_id")?,
            screen_name: l.string("screen_name")?,
            profile_text: l.string("profile_text")?,
            created_at: l.timestamp("created_at")?,
            snapshot_at: l.timestamp("snapshot_at")?,
            total_posts: l.count("total_posts")?,
            followers_count: l.count("followers_count")?,
            following_count: l.count("following_count")?,
            verified: l.boolean("verified")?,
            label: l.label("label")?,
        };
        if rec.created_at > rec.snapshot_at {
            return Err(l.err("created_at", "is later than snapshot_at"));
        }
        if !ids.insert(rec.account_id.clone()) {
            return Err(CorpusError::DuplicateId { line: l.no, id: rec.account_id });
        }
        out.push(rec);
        Ok(())
    })?;
    Ok(out)
}

pub fn load_pairs(path: &Path) -> Result<Vec<ReplyPair>, CorpusError> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    read_objects(path, |l| {
        l.exact_keys(&PAIR_KEYS)?;
        let pair = ReplyPair {
            pair_id: l.non_empty("pair_id")?,
            parent_text: l.non_empty("parent_text")?,
            reply_text: l.non_empty("reply_text")?,
            parent_author_id: l.string("parent_author_id")?,
            reply_author_id: l.string("reply_author_id")?,
            reply_created_at: l.timestamp("reply_created_at")?,
            label: l.label("label")?,
            annotator_votes: l.votes("annotator_votes")?,
        };
        if pair.annotator_votes.len() == ANNOTATORS && pair.label.is_labeled() {
            let implied = majority_label(&pair.annotator_votes);
            if implied != pair.label {
                return Err(CorpusError::MajorityVote {
                    line: l.no,
                    pair_id: pair.pair_id,
                    label: pair.label,
                    implied,
                });
            }
        }
        if !ids.insert(pair.pair_id.clone()) {
            return Err(CorpusError::DuplicateId { line: l.no, id: pair.pair_id });
        }
        out.push(pair);
        Ok(())
    })?;
    Ok(out)
}

pub fn load_clean_pairs(path: &Path) -> Result<Vec<CleanPair>, CorpusError> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    read_objects(path, |l| {
        l.exact_keys(&CLEAN_KEYS)?;
        let pair = CleanPair {
            pair_id: l.non_empty("pair_id")?,
            parent_text: l.non_empty("parent_text")?,
            reply_text: l.non_empty("reply_text")?,
        };
        if !ids.insert(pair.pair_id.clone()) {
            return Err(CorpusError::DuplicateId { line: l.no, id: pair.pair_id });
        }
        out.push(pair);
        Ok(())
    })?;
    Ok(out)
}

/// Writes one compact JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| CorpusError::Json {
            line: 0,
            message: e.to_string(),
        })?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_accounts(path: &Path, records: &[AccountRecord]) -> Result<(), CorpusError> {
    write_jsonl(path, records)
}

pub fn write_pairs(path: &Path, records: &[ReplyPair]) -> Result<(), CorpusError> {
    write_jsonl(path, records)
}

pub fn write_clean_pairs(path: &Path, records: &[CleanPair]) -> Result<(), CorpusError> {
    write_jsonl(path, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ACCOUNT: &str = r#"{"account_id":"a1","screen_name":"たろう","profile_text":"","created_at":"2020-01-01T00:00:00Z","snapshot_at":"2024-11-01T00:00:00Z","total_posts":10,"followers_count":5,"following_count":7,"verified":false,"label":"general"}"#;

    fn file_with(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    fn pair_line(votes: &str, label: &str) -> String {
        format!(
            r#"{{"pair_id":"p1","parent_text":"親","reply_text":"子","parent_author_id":"x","reply_author_id":"y","reply_created_at":"2024-07-12T03:00:00Z","label":"{label}","annotator_votes":{votes}}}"#
        )
    }

    #[test]
    fn empty_file_is_empty_list() {
        let f = file_with(&[]);
        assert!(load_accounts(f.path()).unwrap().is_empty());
        assert!(load_pairs(f.path()).unwrap().is_empty());
    }

    #[test]
    fn one_account_round_trips() {
        let f = file_with(&[ACCOUNT]);
        let recs = load_accounts(f.path()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].account_id, "a1");
        assert_eq!(recs[0].following_count, 7);
        assert_eq!(recs[0].label, Label::General);
        let out = tempfile::NamedTempFile::new().unwrap();
        write_accounts(out.path(), &recs).unwrap();
        let written = std::fs::read_to_string(out.path()).unwrap();
        let a: Value = serde_json::from_str(written.trim()).unwrap();
        let b: Value = serde_json::from_str(ACCOUNT).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn negative_counter_names_line_and_field() {
        let bad = ACCOUNT.replace("\"followers_count\":5", "\"followers_count\":-1");
        let f = file_with(&[&bad]);
        match load_accounts(f.path()) {
            Err(CorpusError::Schema { line, field, .. }) => {
                assert_eq!(line, 1);
                assert_eq!(field, "followers_count");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schema_errors() {
        let cases = [
            (ACCOUNT.replace("\"verified\":false", "\"verified\":\"no\""), "verified"),
            (ACCOUNT.replace("2020-01-01T00:00:00Z", "2020-01-01 00:00:00"), "created_at"),
            (ACCOUNT.replace("2020-01-01T00:00:00Z", "2025-01-01T00:00:00Z"), "created_at"),
            (ACCOUNT.replace("\"general\"", "\"bot\""), "label"),
            (ACCOUNT.replace(",\"verified\":false", ""), "verified"),
            (ACCOUNT.replace("{", "{\"extra\":1,"), "extra"),
        ];
        for (line, want) in cases {
            let f = file_with(&[ACCOUNT.replace("a1", "a0").as_str(), &line]);
            match load_accounts(f.path()) {
                Err(CorpusError::Schema { line, field, .. }) => {
                    assert_eq!((line, field.as_str()), (2, want))
                }
                other => panic!("{want}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn duplicate_account_rejected() {
        let f = file_with(&[ACCOUNT, ACCOUNT]);
        assert!(matches!(
            load_accounts(f.path()),
            Err(CorpusError::DuplicateId { line: 2, .. })
        ));
    }

    #[test]
    fn non_json_line() {
        let f = file_with(&["{not json"]);
        assert!(matches!(load_accounts(f.path()), Err(CorpusError::Json { line: 1, .. })));
    }

    #[test]
    fn offset_timestamps_normalize_to_utc() {
        let f = file_with(&[&ACCOUNT.replace("2020-01-01T00:00:00Z", "2020-01-01T09:00:00+09:00")]);
        let recs = load_accounts(f.path()).unwrap();
        assert_eq!(recs[0].created_at.to_rfc3339(), "2020-01-01T00:00:00+00:00");
    }

    #[test]
    fn majority_vote_enforced() {
        let tie = pair_line(r#"["zombie","zombie","general","general"]"#, "general");
        let f = file_with(&[&tie]);
        assert!(matches!(load_pairs(f.path()), Err(CorpusError::MajorityVote { line: 1, .. })));

        let unanimous = pair_line(r#"["general","general","general","general"]"#, "general");
        let f = file_with(&[&unanimous]);
        assert_eq!(load_pairs(f.path()).unwrap()[0].label, Label::General);

        let unannotated = pair_line("[]", "unlabeled");
        let f = file_with(&[&unannotated]);
        assert_eq!(load_pairs(f.path()).unwrap()[0].label, Label::Unlabeled);
    }

    #[test]
    fn vote_count_must_be_zero_or_four() {
        let f = file_with(&[&pair_line(r#"["zombie"]"#, "zombie")]);
        assert!(matches!(
            load_pairs(f.path()),
            Err(CorpusError::Schema { ref field, .. }) if field == "annotator_votes"
        ));
    }

    #[test]
    fn empty_reply_rejected() {
        let line = pair_line("[]", "general").replace("\"子\"", "\"\"");
        let f = file_with(&[&line]);
        assert!(matches!(
            load_pairs(f.path()),
            Err(CorpusError::Schema { ref field, .. }) if field == "reply_text"
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_accounts(Path::new("/nonexistent/accounts.jsonl")),
            Err(CorpusError::Io { .. })
        ));
    }
}
