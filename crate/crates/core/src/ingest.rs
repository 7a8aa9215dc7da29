//! Dump ingestion: stream line-delimited (optionally gzipped) records,
//! filter by field of study, and join papers with abstract and full-text
//! attachments by corpus id.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unreadable compression header: {0}")]
    BadCompression(String),
}

/// One line parse failure; the stream continues past it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: u64,
    pub message: String,
}

/// One dump line: an extracted corpus id plus the raw payload.
#[derive(Debug, Clone, PartialEq)]
pub struct DumpEntry {
    pub corpus_id: u64,
    pub payload: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Compression {
    None,
    Gzip,
}

impl Compression {
    /// Infer from a file name: `.gz` means gzip.
    pub fn infer(path: &Path) -> Compression {
        match path.extension().and_then(|e| e.to_str()) {
            Some("gz") => Compression::Gzip,
            _ => Compression::None,
        }
    }
}

fn extract_corpus_id(payload: &Value) -> Option<u64> {
    for key in ["corpusid", "corpus_id", "corpusId"] {
        if let Some(id) = payload.get(key).and_then(Value::as_u64) {
            return Some(id);
        }
    }
    None
}

/// Lazy, constant-memory iterator over dump entries. Each item is either
/// an entry or a counted per-line error with its line number.
pub struct EntryStream<R: BufRead> {
    reader: R,
    line_no: u64,
    buf: String,
    done: bool,
}

impl<R: BufRead> Iterator for EntryStream<R> {
    type Item = Result<DumpEntry, LineError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.done {
                return None;
            }
            self.buf.clear();
            self.line_no += 1;
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => {
                    self.done = true;
                    return None;
                }
                Ok(_) => {}
                Err(e) => {
                    self.done = true;
                    return Some(Err(LineError { line: self.line_no, message: e.to_string() }));
                }
            }
            let line = self.buf.trim();
            if line.is_empty() {
                continue;
            }
            return Some(match serde_json::from_str::<Value>(line) {
                Ok(payload) => match extract_corpus_id(&payload) {
                    Some(corpus_id) => Ok(DumpEntry { corpus_id, payload }),
                    None => Err(LineError {
                        line: self.line_no,
                        message: "missing or non-numeric corpus id".into(),
                    }),
                },
                Err(e) => Err(LineError { line: self.line_no, message: e.to_string() }),
            });
        }
    }
}

/// Stream entries from a byte source, decompressing on the fly for gzip.
pub fn stream_entries(
    source: impl Read + 'static,
    compression: Compression,
) -> Box<dyn Iterator<Item = Result<DumpEntry, LineError>>> {
    let reader: Box<dyn BufRead> = match compression {
        Compression::None => Box::new(BufReader::new(source)),
        Compression::Gzip => Box::new(BufReader::new(MultiGzDecoder::new(source))),
    };
    Box::new(EntryStream { reader, line_no: 0, buf: String::new(), done: false })
}

/// Stream a `.jsonl` or `.jsonl.gz` file.
pub fn stream_file(path: &Path) -> Result<Box<dyn Iterator<Item = Result<DumpEntry, LineError>>>, IngestError> {
    let file = File::open(path)?;
    Ok(stream_entries(file, Compression::infer(path)))
}

/// True iff any field-of-study category equals "Chemistry" exactly.
/// Accepts either the `s2fieldsofstudy` or `fields_of_study` key,
/// preferring the former; a missing list is false.
pub fn filter_chemistry(entry: &DumpEntry) -> bool {
    let list = entry
        .payload
        .get("s2fieldsofstudy")
        .or_else(|| entry.payload.get("fields_of_study"))
        .and_then(Value::as_array);
    match list {
        Some(items) => items
            .iter()
            .any(|f| f.get("category").and_then(Value::as_str) == Some("Chemistry")),
        None => false,
    }
}

/// Join statistics: matches, misses, and duplicate-id warnings per side.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct JoinStats {
    pub papers: u64,
    pub emitted: u64,
    pub matched_abstracts: u64,
    pub matched_fulltexts: u64,
    pub unmatched_papers: u64,
    pub duplicate_papers: u64,
    pub duplicate_abstracts: u64,
    pub duplicate_fulltexts: u64,
    pub line_errors: u64,
}

/// One joined record: the paper payload with optional attachments.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinedRecord {
    pub corpus_id: u64,
    pub paper: Value,
    pub abstract_payload: Option<Value>,
    pub fulltext_payload: Option<Value>,
}

/// Join papers with abstracts and full texts by corpus id. Inputs need
/// not be sorted; duplicates within one side are last-wins and counted.
/// With `require_fulltext`, papers lacking a full-text match are dropped
/// (and counted as unmatched). Output is ordered by corpus id.
pub fn join_by_corpus_id(
    papers: impl Iterator<Item = Result<DumpEntry, LineError>>,
    abstracts: impl Iterator<Item = Result<DumpEntry, LineError>>,
    fulltexts: impl Iterator<Item = Result<DumpEntry, LineError>>,
    require_fulltext: bool,
) -> (Vec<JoinedRecord>, JoinStats) {
    let mut stats = JoinStats::default();

    let mut paper_map: BTreeMap<u64, Value> = BTreeMap::new();
    for item in papers {
        match item {
            Ok(entry) => {
                stats.papers += 1;
                if paper_map.insert(entry.corpus_id, entry.payload).is_some() {
                    stats.duplicate_papers += 1;
                }
            }
            Err(_) => stats.line_errors += 1,
        }
    }

    // Attachment sides: keep only payloads whose id has a paper.
    let collect_side = |side: Box<dyn Iterator<Item = Result<DumpEntry, LineError>> + '_>,
                            dups: &mut u64,
                            errs: &mut u64|
     -> BTreeMap<u64, Value> {
        let mut map = BTreeMap::new();
        for item in side {
            match item {
                Ok(entry) => {
                    if paper_map.contains_key(&entry.corpus_id)
                        && map.insert(entry.corpus_id, entry.payload).is_some()
                    {
                        *dups += 1;
                    }
                }
                Err(_) => *errs += 1,
            }
        }
        map
    };

    let mut dup_abs = 0;
    let mut dup_full = 0;
    let mut errs = 0;
    let abstract_map = collect_side(Box::new(abstracts), &mut dup_abs, &mut errs);
    let fulltext_map = collect_side(Box::new(fulltexts), &mut dup_full, &mut errs);
    stats.duplicate_abstracts = dup_abs;
    stats.duplicate_fulltexts = dup_full;
    stats.line_errors += errs;

    let mut out = Vec::new();
    for (corpus_id, paper) in paper_map {
        let abstract_payload = abstract_map.get(&corpus_id).cloned();
        let fulltext_payload = fulltext_map.get(&corpus_id).cloned();
        if require_fulltext && fulltext_payload.is_none() {
            stats.unmatched_papers += 1;
            continue;
        }
        if abstract_payload.is_some() {
            stats.matched_abstracts += 1;
        }
        if fulltext_payload.is_some() {
            stats.matched_fulltexts += 1;
        }
        stats.emitted += 1;
        out.push(JoinedRecord { corpus_id, paper, abstract_payload, fulltext_payload });
    }
    (out, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::Compression as GzLevel;
    use std::io::Write;

    fn gz(lines: &[&str]) -> Vec<u8> {
        let mut enc = GzEncoder::new(Vec::new(), GzLevel::default());
        for line in lines {
            writeln!(enc, "{line}").unwrap();
        }
        enc.finish().unwrap()
    }

    fn entries(items: &[(u64, &str)]) -> Vec<Result<DumpEntry, LineError>> {
        items
            .iter()
            .map(|(id, body)| {
                Ok(DumpEntry { corpus_id: *id, payload: serde_json::from_str(body).unwrap() })
            })
            .collect()
    }

    #[test]
    fn gzip_stream_preserves_order() {
        let bytes = gz(&[
            r#"{"corpusid": 1, "title": "a"}"#,
            r#"{"corpusid": 2, "title": "b"}"#,
            r#"{"corpusid": 3, "title": "c"}"#,
        ]);
        let got: Vec<u64> = stream_entries(std::io::Cursor::new(bytes), Compression::Gzip)
            .map(|r| r.unwrap().corpus_id)
            .collect();
        assert_eq!(got, vec![1, 2, 3]);
    }

    #[test]
    fn corrupt_line_is_counted_not_fatal() {
        let mut lines: Vec<String> =
            (0..10).map(|i| format!(r#"{{"corpusid": {i}}}"#)).collect();
        lines[4] = "{not json".into();
        let body = lines.join("\n");
        let items: Vec<_> =
            stream_entries(std::io::Cursor::new(body.into_bytes()), Compression::None).collect();
        let ok = items.iter().filter(|r| r.is_ok()).count();
        let errs: Vec<&LineError> = items.iter().filter_map(|r| r.as_ref().err()).collect();
        assert_eq!(ok, 9);
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].line, 5, "error carries its line number");
    }

    #[test]
    fn empty_file_is_empty_iterator() {
        let items: Vec<_> =
            stream_entries(std::io::Cursor::new(Vec::new()), Compression::None).collect();
        assert!(items.is_empty());
    }

    #[test]
    fn streaming_is_lazy() {
        // After pulling one entry, the reader must not have consumed the
        // whole source.
        struct CountingReader<R: Read> {
            inner: R,
            read: std::rc::Rc<std::cell::Cell<usize>>,
        }
        impl<R: Read> Read for CountingReader<R> {
            fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
                let n = self.inner.read(buf)?;
                self.read.set(self.read.get() + n);
                Ok(n)
            }
        }

        let big_line = format!(r#"{{"corpusid": 1, "pad": "{}"}}"#, "x".repeat(64 * 1024));
        let body: String =
            std::iter::repeat_with(|| big_line.clone()).take(64).collect::<Vec<_>>().join("\n");
        let total = body.len();
        let read = std::rc::Rc::new(std::cell::Cell::new(0));
        let reader = CountingReader { inner: std::io::Cursor::new(body.into_bytes()), read: read.clone() };
        let mut stream = stream_entries(reader, Compression::None);
        let first = stream.next().unwrap().unwrap();
        assert_eq!(first.corpus_id, 1);
        assert!(
            read.get() < total / 2,
            "consumed {} of {total} bytes after one entry",
            read.get()
        );
    }

    #[test]
    fn chemistry_filter_is_exact_match() {
        let entry = |body: &str| DumpEntry { corpus_id: 1, payload: serde_json::from_str(body).unwrap() };
        assert!(filter_chemistry(&entry(
            r#"{"s2fieldsofstudy": [{"category": "Chemistry", "source": "s2"}]}"#
        )));
        assert!(!filter_chemistry(&entry(r#"{"s2fieldsofstudy": [{"category": "Biology"}]}"#)));
        assert!(!filter_chemistry(&entry(r#"{"s2fieldsofstudy": [{"category": "chemistry"}]}"#)));
        assert!(!filter_chemistry(&entry(r#"{"title": "no fields"}"#)));
        assert!(filter_chemistry(&entry(
            r#"{"fields_of_study": [{"category": "Chemistry"}]}"#
        )));
    }

    #[test]
    fn filter_is_pure() {
        let entry = DumpEntry {
            corpus_id: 9,
            payload: serde_json::json!({"s2fieldsofstudy": [{"category": "Chemistry"}]}),
        };
        assert_eq!(filter_chemistry(&entry), filter_chemistry(&entry));
    }

    #[test]
    fn join_requires_fulltext_when_asked() {
        let papers = entries(&[(1, r#"{"corpusid":1}"#), (2, r#"{"corpusid":2}"#)]);
        let fulls = entries(&[(2, r#"{"corpusid":2,"content":{}}"#)]);
        let (out, stats) =
            join_by_corpus_id(papers.into_iter(), std::iter::empty(), fulls.into_iter(), true);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].corpus_id, 2);
        assert_eq!(stats.unmatched_papers, 1);
        assert_eq!(stats.emitted, 1);
    }

    #[test]
    fn join_attaches_both_sides() {
        let papers = entries(&[(1, r#"{"corpusid":1}"#)]);
        let absts = entries(&[(1, r#"{"corpusid":1,"abstract":"text"}"#)]);
        let fulls = entries(&[(1, r#"{"corpusid":1,"content":{"text":"body"}}"#)]);
        let (out, stats) =
            join_by_corpus_id(papers.into_iter(), absts.into_iter(), fulls.into_iter(), true);
        assert_eq!(out.len(), 1);
        assert!(out[0].abstract_payload.is_some());
        assert!(out[0].fulltext_payload.is_some());
        assert_eq!(stats.matched_abstracts, 1);
    }

    #[test]
    fn duplicate_ids_are_last_wins_and_counted() {
        let papers = entries(&[
            (1, r#"{"corpusid":1,"v":"first"}"#),
            (1, r#"{"corpusid":1,"v":"second"}"#),
        ]);
        let (out, stats) =
            join_by_corpus_id(papers.into_iter(), std::iter::empty(), std::iter::empty(), false);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].paper["v"], "second");
        assert_eq!(stats.duplicate_papers, 1);
    }

    #[test]
    fn join_never_fabricates_ids() {
        let papers = entries(&[(5, r#"{"corpusid":5}"#)]);
        let absts = entries(&[(6, r#"{"corpusid":6}"#)]);
        let (out, _) =
            join_by_corpus_id(papers.into_iter(), absts.into_iter(), std::iter::empty(), false);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].corpus_id, 5);
        assert!(out[0].abstract_payload.is_none());
    }
}
