use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use opskb::ast::{parse_source, ParseOptions};
use opskb::corpus::{
    clean, corpus_stats, ingest, read_jsonl, strip_comments, write_jsonl, IngestOptions,
    ScriptRecord, Stage,
};
use opskb::relations::extract_occurrences;
use proptest::prelude::*;

fn comment_fixtures() -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/comments");
    let mut out: Vec<(String, String)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "js"))
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn call_names(id: &str, src: &str) -> BTreeMap<String, usize> {
    let tree = parse_source(id, src, &ParseOptions::default())
        .unwrap_or_else(|e| panic!("{id}: {e:?}\n{src}"));
    let mut m = BTreeMap::new();
    for o in extract_occurrences(&tree) {
        *m.entry(o.canonical_name).or_insert(0) += 1;
    }
    m
}

#[test]
fn stripping_keeps_call_names() {
    let fixtures = comment_fixtures();
    assert!(fixtures.len() >= 50, "only {} fixtures", fixtures.len());
    for (name, src) in &fixtures {
        let stripped = strip_comments(src);
        assert_ne!(&stripped, src, "{name}: every fixture has a real comment");
        let before = call_names(name, src);
        assert!(!before.is_empty(), "{name}");
        assert_eq!(call_names(name, &stripped), before, "{name}:\n{stripped}");
    }
}

#[test]
fn stripping_is_idempotent() {
    for (name, src) in comment_fixtures() {
        let once = strip_comments(&src);
        assert_eq!(strip_comments(&once), once, "{name}");
    }
}

#[test]
fn literal_contents_survive() {
    let fixtures: BTreeMap<_, _> = comment_fixtures().into_iter().collect();
    let keep = [
        ("url_in_string.js", "'https://example.com//tiles'"),
        ("block_in_string.js", "'/* not a comment */'"),
        ("regex_with_slashes.js", r"/\/\/.*$/"),
        (
            "template_multiline.js",
            "`line one // keep\n/* keep too */\nline three`",
        ),
        ("template_plain.js", "`//not/${'a'}/comment`"),
        ("string_with_star_slash.js", "var s = '*/'; var t = \"/*\";"),
    ];
    for (file, literal) in keep {
        let out = strip_comments(&fixtures[file]);
        assert!(out.contains(literal), "{file}: {out}");
    }
    let out = strip_comments(&fixtures["template_interp_comment.js"]);
    assert!(!out.contains("inside interpolation"), "{out}");
}

fn write(dir: &Path, rel: &str, bytes: &[u8]) {
    let p = dir.join(rel);
    fs::create_dir_all(p.parent().unwrap()).unwrap();
    fs::write(p, bytes).unwrap();
}

#[test]
fn ingest_walks_filters_and_sorts() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "b.js", b"print(1);");
    write(tmp.path(), "a/z.js", b"print(2);");
    write(tmp.path(), "a/notes.txt", b"ignored");
    write(tmp.path(), "big.js", &vec![b' '; 300]);
    write(tmp.path(), "latin1.js", b"var s = '\xe9';");
    let opts = IngestOptions {
        max_bytes: 200,
        ..IngestOptions::default()
    };
    let recs = ingest(tmp.path(), &opts).unwrap();
    let ids: Vec<&str> = recs.iter().map(|r| r.script_id.as_str()).collect();
    assert_eq!(ids, ["a/z.js", "b.js", "big.js", "latin1.js"]);
    let reasons: Vec<Option<&str>> = recs.iter().map(|r| r.reject_reason.as_deref()).collect();
    assert_eq!(reasons, [None, None, Some("oversize"), Some("encoding")]);
    for r in &recs {
        assert_eq!(r.byte_size, r.text.len() as u64);
    }
    let stats = corpus_stats(&recs);
    assert_eq!((stats.script_count, stats.rejected_count), (4, 2));
}

#[test]
fn dedup_rejects_later_copies() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "a.js", b"print(1);");
    write(tmp.path(), "b.js", b"print(1);");
    let plain = ingest(tmp.path(), &IngestOptions::default()).unwrap();
    assert!(plain.iter().all(|r| r.stage == Stage::Raw));
    let opts = IngestOptions {
        dedup: true,
        ..IngestOptions::default()
    };
    let recs = ingest(tmp.path(), &opts).unwrap();
    assert_eq!(recs[0].stage, Stage::Raw);
    assert_eq!(recs[1].reject_reason.as_deref(), Some("duplicate"));
}

#[test]
fn ingest_errors() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(ingest(&tmp.path().join("missing"), &IngestOptions::default()).is_err());
    let none = IngestOptions {
        extensions: vec![],
        ..IngestOptions::default()
    };
    assert!(ingest(tmp.path(), &none).is_err());
}

#[test]
fn clean_advances_raw_records_and_round_trips() {
    let mut rejected = ScriptRecord::new("r.js", "r.js", String::new());
    rejected.reject("oversize").unwrap();
    let recs = vec![
        ScriptRecord::new("a.js", "a.js", "var a = 1; // c\n".into()),
        rejected.clone(),
    ];
    let cleaned = clean(recs).unwrap();
    assert_eq!(cleaned[0].stage, Stage::Cleaned);
    assert_eq!(cleaned[0].text, "var a = 1;\n");
    assert_eq!(cleaned[0].byte_size, 11);
    assert_eq!(cleaned[1], rejected);

    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("c.jsonl");
    write_jsonl(&path, &cleaned).unwrap();
    let back: Vec<ScriptRecord> = read_jsonl(&path).unwrap();
    assert_eq!(back, cleaned);
}

proptest! {
    /// Code with no comment delimiters outside string literals is unchanged.
    #[test]
    fn comment_free_code_is_untouched(
        parts in proptest::collection::vec(("[a-z]{1,6}", "[a-z /*]{0,8}"), 1..6)
    ) {
        let src: String = parts
            .iter()
            .map(|(f, s)| format!("{f}('{s}');\n"))
            .collect();
        prop_assert_eq!(strip_comments(&src), src);
    }

    #[test]
    fn stripping_is_idempotent_on_generated_code(
        parts in proptest::collection::vec(("[a-z]{1,6}", "[a-z /*]{0,8}", "[a-z ]{0,8}"), 1..6)
    ) {
        let src: String = parts
            .iter()
            .map(|(f, s, c)| format!("{f}('{s}'); // {c}\n/* {c} */ {f}(1 / 2);\n"))
            .collect();
        let once = strip_comments(&src);
        prop_assert_eq!(strip_comments(&once), once.clone());
        let code_only: String = parts.iter().map(|(f, s, _)| format!("{f}('{s}');\n {f}(1 / 2);\n")).collect();
        prop_assert_eq!(once, code_only);
    }
}
