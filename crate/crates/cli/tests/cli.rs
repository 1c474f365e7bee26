use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const VIEWPOINTS: [&str; 3] = ["US", "UK", "RU"];

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            fs::copy(entry.path(), target).unwrap();
        }
    }
}

/// A scratch copy of a fixture project.
fn project(name: &str) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&fixture(name), dir.path());
    dir
}

fn narrmine(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_narrmine"))
        .arg("--root")
        .arg(root)
        .args(args)
        .output()
        .unwrap()
}

fn ok(root: &Path, args: &[&str]) -> String {
    let out = narrmine(root, args);
    assert!(
        out.status.success(),
        "narrmine {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Compares with a golden file, or rewrites it when NARRMINE_BLESS is set.
fn golden(path: &Path, actual: &str) {
    if std::env::var_os("NARRMINE_BLESS").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, actual).unwrap();
        return;
    }
    let expected = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "{} differs", path.display());
}

/// Ingests the Iraq corpus and mines every viewpoint; returns narrative ids.
fn mine_iraq(root: &Path) -> Vec<String> {
    ok(root, &["ingest", "corpus/manifest.jsonl"]);
    VIEWPOINTS
        .iter()
        .map(|v| ok(root, &["mine", "--event", "Iraq War", "--viewpoint", v]).trim().to_owned())
        .collect()
}

#[test]
fn ingest_reports_rejections() {
    let p = project("iraq-war");
    let out = ok(p.path(), &["ingest", "corpus/manifest.jsonl"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "accepted 15 documents (RU 5, UK 5, US 5), rejected 2");
    assert!(lines[1].contains("us-brief.txt: too short"), "{out}");
    assert!(lines[2].contains("uk-gulf.txt: excluded by \"gulf-war-1991\""), "{out}");
    assert!(p.path().join("corpus/documents.json").exists());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(p.path().join("reports/ingest.json")).unwrap()).unwrap();
    assert_eq!(report["rejections"].as_array().unwrap().len(), 2);
}

#[test]
fn mined_narratives_export_as_golden_json() {
    let p = project("iraq-war");
    let ids = mine_iraq(p.path());
    for (v, id) in VIEWPOINTS.iter().zip(&ids) {
        let json = ok(p.path(), &["export", "--narrative", id]);
        let expected = fs::read_to_string(fixture(&format!("iraq-war/golden/{}.json", v.to_lowercase()))).unwrap();
        assert_eq!(json.trim_end(), expected.trim_end(), "{v}");
        assert!(p.path().join(format!("reports/mine-{id}.json")).exists());
    }
    let dot = ok(p.path(), &["export", "--format", "dot", "--narrative", &ids[2]]);
    golden(&fixture("iraq-war/golden/ru.dot"), &dot);
}

#[test]
fn rerunning_the_pipeline_is_byte_identical() {
    let (a, b) = (project("iraq-war"), project("iraq-war"));
    assert_eq!(mine_iraq(a.path()), mine_iraq(b.path()));
    for file in ["store.json", "corpus/documents.json", "reports/ingest.json"] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
    for entry in fs::read_dir(a.path().join("reports")).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(
            fs::read(a.path().join("reports").join(&name)).unwrap(),
            fs::read(b.path().join("reports").join(&name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn mining_again_keeps_the_store_stable() {
    let p = project("iraq-war");
    let ids = mine_iraq(p.path());
    let before = fs::read(p.path().join("store.json")).unwrap();
    let again = ok(p.path(), &["mine", "--event", "Iraq War", "--viewpoint", "US"]);
    assert_eq!(again.trim(), ids[0]);
    assert_eq!(fs::read(p.path().join("store.json")).unwrap(), before);
}

#[test]
fn compare_prints_report_and_writes_both_formats() {
    let p = project("iraq-war");
    let ids = mine_iraq(p.path());
    let mut args = vec!["compare", "--flatten", "--narratives"];
    args.extend(ids.iter().map(String::as_str));
    let json: serde_json::Value = serde_json::from_str(&ok(p.path(), &args)).unwrap();
    let common = json["common"].as_array().unwrap();
    assert_eq!(common.len(), 2);
    let starts: std::collections::BTreeMap<&str, &str> = json["narratives"]
        .as_array()
        .unwrap()
        .iter()
        .map(|n| (n["viewpoint"].as_str().unwrap(), n["start_label"].as_str().unwrap()))
        .collect();
    assert_eq!(starts["US"], "September 11 Attacks");
    assert_eq!(starts["UK"], "British Forces Join Invasion of Iraq");
    assert_eq!(starts["RU"], "Powell Shows Test Tube at the UN");

    args.extend(["--format", "dot"]);
    let dot = ok(p.path(), &args);
    assert!(dot.starts_with("digraph"));
    let reports: Vec<String> = fs::read_dir(p.path().join("reports"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("compare"))
        .collect();
    assert_eq!(reports.len(), 2, "{reports:?}");
}

#[test]
fn bind_against_snapshot() {
    let p = project("fig1");
    let out = ok(p.path(), &["bind", "--narrative", "putin-address"]);
    assert_eq!(
        out.trim(),
        "putin-address: 8 events in 3 narratives: 4 direct, 1 indirect, 3 none; 0 ambiguous, 0 compound labels, 1 scope flags"
    );
    assert!(p.path().join("reports/bind-putin-address.json").exists());
    let dot = ok(p.path(), &["export", "--format", "dot", "--narrative", "putin-address"]);
    golden(&fixture("fig1/golden/putin-address.dot"), &dot);

    // binding twice replaces the earlier result
    let store = fs::read(p.path().join("store.json")).unwrap();
    ok(p.path(), &["bind", "--narrative", "putin-address"]);
    assert_eq!(fs::read(p.path().join("store.json")).unwrap(), store);
}

#[test]
fn export_does_not_touch_the_store() {
    let p = project("fig1");
    let before = fs::read(p.path().join("store.json")).unwrap();
    let out_file = p.path().join("out.json");
    let stdout = ok(
        p.path(),
        &["export", "--narrative", "putin-iraq-war", "--output", out_file.to_str().unwrap()],
    );
    assert!(stdout.is_empty());
    assert!(fs::read_to_string(&out_file).unwrap().contains("Colin Powell's UN Address"));
    assert_eq!(fs::read(p.path().join("store.json")).unwrap(), before);
}

#[test]
fn user_errors_exit_1() {
    let p = project("fig1");
    let out = narrmine(p.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("Usage:"));

    let out = narrmine(p.path(), &["export", "--narrative", "missing"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("missing"));

    let out = narrmine(p.path(), &["mine", "--event", "Iraq War", "--viewpoint", "RU", "--timespan", "2003"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("ingest"));

    fs::write(p.path().join("narrmine.toml"), "[mining]\ndepth = 3\n").unwrap();
    let out = narrmine(p.path(), &["cache", "stats"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr(&out).lines().count(), 1);
}

#[test]
fn help_exits_0() {
    let out = narrmine(Path::new("."), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("compare"));
}

#[test]
fn unscripted_prompts_exit_2() {
    let p = project("iraq-war");
    ok(p.path(), &["ingest", "corpus/manifest.jsonl"]);
    fs::write(p.path().join("mock_script.json"), r#"{"responses": []}"#).unwrap();
    let out = narrmine(p.path(), &["mine", "--event", "Iraq War", "--viewpoint", "US"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(!p.path().join("store.json").exists());
}

#[test]
fn unreachable_llm_exits_2() {
    let p = project("iraq-war");
    ok(p.path(), &["ingest", "corpus/manifest.jsonl"]);
    let config = fs::read_to_string(p.path().join("narrmine.toml")).unwrap().replace(
        "backend = \"mock\"\nscript = \"mock_script.json\"",
        "backend = \"http\"\nendpoint = \"http://127.0.0.1:9/v1/chat/completions\"\nmodel = \"m\"\nretries = 0\ntimeout_secs = 2",
    );
    fs::write(p.path().join("narrmine.toml"), config).unwrap();
    let out = narrmine(p.path(), &["mine", "--event", "Iraq War", "--viewpoint", "US"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn concurrent_commands_are_refused() {
    let p = project("fig1");
    fs::write(p.path().join(".narrmine.lock"), "1\n").unwrap();
    let out = narrmine(p.path(), &["export", "--narrative", "putin-address"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("another narrmine command"));
    fs::remove_file(p.path().join(".narrmine.lock")).unwrap();
    ok(p.path(), &["export", "--narrative", "putin-address"]);
    assert!(!p.path().join(".narrmine.lock").exists());
}

#[test]
fn cache_stats_and_clear() {
    let p = project("fig1");
    let llm = p.path().join("cache/llm");
    fs::create_dir_all(&llm).unwrap();
    fs::write(llm.join("abc.txt"), "hello").unwrap();
    fs::create_dir_all(p.path().join("cache/kg")).unwrap();
    fs::write(p.path().join("cache/kg/q.json"), "{}").unwrap();
    assert_eq!(ok(p.path(), &["cache", "stats"]), "llm: 1 entries, 5 bytes\nkg: 1 entries, 2 bytes\n");
    assert_eq!(ok(p.path(), &["cache", "clear"]), "cleared 1 llm entries and 1 kg entries\n");
    assert_eq!(ok(p.path(), &["cache", "stats"]), "llm: 0 entries, 0 bytes\nkg: 0 entries, 0 bytes\n");
}
