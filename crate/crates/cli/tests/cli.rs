use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use conation_core::evaluator::{synth_ground_truth, SynthParams};
use conation_core::features::{read_mfcc, write_mfcc};
use conation_core::hmm::sample_sequence;
use conation_core::registry::load_model;
use conation_core::trainer::TrainingConfig;
use tempfile::TempDir;

fn conation(home: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conation"))
        .args(args)
        .env("CONATION_HOME", home.join("profiles"))
        .current_dir(home)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_wav(path: &Path, samples: &[i16]) {
    let data: Vec<u8> = samples.iter().flat_map(|s| s.to_le_bytes()).collect();
    let mut b = Vec::new();
    b.extend_from_slice(b"RIFF");
    b.extend_from_slice(&(36 + data.len() as u32).to_le_bytes());
    b.extend_from_slice(b"WAVEfmt ");
    b.extend_from_slice(&16u32.to_le_bytes());
    b.extend_from_slice(&1u16.to_le_bytes());
    b.extend_from_slice(&1u16.to_le_bytes());
    b.extend_from_slice(&16_000u32.to_le_bytes());
    b.extend_from_slice(&32_000u32.to_le_bytes());
    b.extend_from_slice(&2u16.to_le_bytes());
    b.extend_from_slice(&16u16.to_le_bytes());
    b.extend_from_slice(b"data");
    b.extend_from_slice(&(data.len() as u32).to_le_bytes());
    b.extend_from_slice(&data);
    std::fs::write(path, b).unwrap();
}

fn tone(freq: f64, n: usize) -> Vec<i16> {
    (0..n).map(|i| (8000.0 * (2.0 * std::f64::consts::PI * freq * i as f64 / 16_000.0).sin()) as i16).collect()
}

/// Writes `n_train` training and `n_test` test files per synthetic word and
/// returns (train files, test files) per word.
fn synthetic_corpus(dir: &Path, words: usize, n_train: usize, n_test: usize) -> Vec<(Vec<String>, Vec<String>)> {
    let truth = synth_ground_truth(&SynthParams::new(words, 1, 1), &TrainingConfig::new(3, 4)).unwrap();
    let mut out = Vec::new();
    for (w, model) in truth.iter().enumerate() {
        let mut files = (Vec::new(), Vec::new());
        for k in 0..n_train + n_test {
            let name = format!("w{w}_{k}.mfcc");
            let seq = sample_sequence(model, 30, (w * 1000 + k) as u64).unwrap();
            write_mfcc(&seq, dir.join(&name)).unwrap();
            if k < n_train {
                files.0.push(name);
            } else {
                files.1.push(name);
            }
        }
        out.push(files);
    }
    out
}

fn train_word(home: &Path, word: &str, files: &[String], extra: &[&str]) {
    let mut args = vec!["train", "3", "4", "--word", word];
    args.extend(extra);
    args.extend(files.iter().map(String::as_str));
    let o = conation(home, &args);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn extract_feature_writes_mfcc_beside_input() {
    let dir = TempDir::new().unwrap();
    write_wav(&dir.path().join("a.wav"), &tone(440.0, 8000));
    let o = conation(dir.path(), &["extract-feature", "--dim", "13", "a.wav"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let seq = read_mfcc(dir.path().join("a.mfcc")).unwrap();
    assert_eq!((seq.len(), seq.dim()), (48, 13));
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn extract_feature_partial_failure() {
    let dir = TempDir::new().unwrap();
    write_wav(&dir.path().join("a.wav"), &tone(440.0, 8000));
    let o = conation(dir.path(), &["extract-feature", "a.wav", "b.wav"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(dir.path().join("a.mfcc").is_file());
    assert!(stderr(&o).contains("b.wav"));
}

#[test]
fn extract_feature_out_dir() {
    let dir = TempDir::new().unwrap();
    write_wav(&dir.path().join("a.wav"), &tone(300.0, 4000));
    let o = conation(dir.path(), &["extract-feature", "--out-dir", "feats", "--dim", "5", "a.wav"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read_mfcc(dir.path().join("feats/a.mfcc")).unwrap().dim(), 5);
}

#[test]
fn train_prints_xml_model() {
    let dir = TempDir::new().unwrap();
    let corpus = synthetic_corpus(dir.path(), 2, 3, 0);
    let mut args = vec!["train", "3", "4"];
    args.extend(corpus[0].0.iter().map(String::as_str));
    let o = conation(dir.path(), &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let xml = stdout(&o);
    assert!(xml.contains("<hmm"));
    std::fs::write(dir.path().join("word.xml"), &xml).unwrap();
    let model = load_model(dir.path().join("word.xml")).unwrap();
    assert_eq!((model.n_states(), model.dim()), (3, 4));
}

#[test]
fn train_argument_and_dimension_errors() {
    let dir = TempDir::new().unwrap();
    let corpus = synthetic_corpus(dir.path(), 2, 1, 0);
    let file = corpus[0].0[0].as_str();
    assert_eq!(conation(dir.path(), &["train", "0", "4", file]).status.code(), Some(2));
    assert_eq!(conation(dir.path(), &["train", "3", "4"]).status.code(), Some(2));
    let o = conation(dir.path(), &["train", "3", "13", file]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(file), "{}", stderr(&o));
}

#[test]
fn train_registers_into_named_profile() {
    let dir = TempDir::new().unwrap();
    let corpus = synthetic_corpus(dir.path(), 2, 3, 0);
    train_word(dir.path(), "save", &corpus[0].0, &["--profile", "alice"]);
    train_word(dir.path(), "exit", &corpus[1].0, &["--profile", "alice"]);
    assert!(dir.path().join("profiles/alice/hmms/models").is_file());
    let o = conation(dir.path(), &["registry", "list", "--profile", "alice"]);
    let words: Vec<String> = stdout(&o).lines().map(|l| l.split('\t').next().unwrap().to_string()).collect();
    assert_eq!(words, ["save", "exit"]);
    // default profile untouched
    assert_eq!(conation(dir.path(), &["registry", "list"]).status.code(), Some(1));
    // duplicate words are refused
    let mut args = vec!["train", "3", "4", "--word", "save", "--profile", "alice"];
    args.extend(corpus[0].0.iter().map(String::as_str));
    assert_eq!(conation(dir.path(), &args).status.code(), Some(1));
}

#[test]
fn recognise_closed_loop() {
    let dir = TempDir::new().unwrap();
    let corpus = synthetic_corpus(dir.path(), 3, 5, 2);
    for (w, word) in ["activate", "save", "exit"].iter().enumerate() {
        train_word(dir.path(), word, &corpus[w].0, &[]);
    }
    let test = &corpus[0].1[0];
    let o = conation(dir.path(), &["recognise", test]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o);
    let fields: Vec<&str> = line.trim_end().split('\t').collect();
    assert_eq!(fields[0], test);
    assert_eq!(fields[1], "activate");
    assert!(fields[2].parse::<f64>().unwrap().is_finite());

    let o = conation(dir.path(), &["recognise", "--threshold", "1e9", test]);
    assert_eq!(stdout(&o), format!("{test}\t<rejected>\n"));
    let o = conation(dir.path(), &["recognise", "--threshold", "-1e9", test, "missing.mfcc"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).lines().count(), 1);
    assert!(stderr(&o).contains("missing.mfcc"));
}

#[test]
fn recognise_usage_and_empty_registry() {
    let dir = TempDir::new().unwrap();
    assert_eq!(conation(dir.path(), &["recognise"]).status.code(), Some(2));
    let corpus = synthetic_corpus(dir.path(), 2, 0, 1);
    let test = corpus[0].1[0].as_str();
    assert_eq!(conation(dir.path(), &["recognise", test]).status.code(), Some(1));
    let o = conation(dir.path(), &["recognise", "--allow-empty", test]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), format!("{test}\t<rejected>\n"));
}

#[test]
fn recognise_interpret_threads_state() {
    let dir = TempDir::new().unwrap();
    let corpus = synthetic_corpus(dir.path(), 3, 5, 2);
    for (w, word) in ["Activate", "Save", "Deactivate"].iter().enumerate() {
        train_word(dir.path(), word, &corpus[w].0, &[]);
    }
    // Save before Activate is ignored; then Activate, Save, Deactivate
    let files = [&corpus[1].1[0], &corpus[0].1[0], &corpus[1].1[1], &corpus[2].1[0]];
    let mut args = vec!["recognise", "--interpret"];
    args.extend(files.iter().map(|s| s.as_str()));
    let o = conation(dir.path(), &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let events: Vec<serde_json::Value> =
        stdout(&o).lines().filter(|l| l.starts_with('{')).map(|l| serde_json::from_str(l).unwrap()).collect();
    let actions: Vec<&str> = events.iter().map(|e| e["action"].as_str().unwrap()).collect();
    assert_eq!(actions, ["mode:activate", "file:save", "mode:deactivate"]);
    assert_eq!(events[2]["mode_after"]["active"], false);
}

#[test]
fn recognise_custom_dispatch() {
    let dir = TempDir::new().unwrap();
    let corpus = synthetic_corpus(dir.path(), 2, 5, 1);
    train_word(dir.path(), "Activate", &corpus[0].0, &[]);
    train_word(dir.path(), "Save", &corpus[1].0, &[]);
    std::fs::write(dir.path().join("dispatch.conf"), "save\tcustom:save\n").unwrap();
    let (a, s) = (corpus[0].1[0].as_str(), corpus[1].1[0].as_str());
    let o = conation(dir.path(), &["recognise", "--interpret", "--dispatch", "dispatch.conf", a, s]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("\"action\":\"mode:activate\""), "{out}");
    assert!(out.contains("\"action\":\"custom:save\""), "{out}");
}

fn eval_fixture(dir: &Path) -> PathBuf {
    let corpus = synthetic_corpus(dir, 2, 5, 2);
    train_word(dir, "Activate", &corpus[0].0, &[]);
    train_word(dir, "Save", &corpus[1].0, &[]);
    let mut manifest = String::from("path,word,user,known\n");
    for (w, word) in ["Activate", "Save"].iter().enumerate() {
        for f in &corpus[w].1 {
            manifest.push_str(&format!("{f},{word},J,true\n"));
        }
    }
    let path = dir.join("manifest.csv");
    std::fs::write(&path, manifest).unwrap();
    path
}

#[test]
fn eval_markdown_and_csv() {
    let dir = TempDir::new().unwrap();
    eval_fixture(dir.path());
    let o = conation(dir.path(), &["eval", "manifest.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let md = stdout(&o);
    assert!(md.contains("| Commands | Number of Testing | Recognition Probability |"), "{md}");
    assert!(md.contains("| Activate | 2 | 100% |"), "{md}");
    let o = conation(dir.path(), &["eval", "--format", "csv", "manifest.csv"]);
    let csv = stdout(&o);
    assert!(csv.lines().any(|l| l == "Commands,Number of Testing,Recognition Probability"));
    assert!(csv.lines().any(|l| l == "J,100"));
}

#[test]
fn eval_missing_file_is_named() {
    let dir = TempDir::new().unwrap();
    eval_fixture(dir.path());
    std::fs::write(dir.path().join("bad.csv"), "path,word,user,known\nghost.mfcc,Save,J,true\n").unwrap();
    let o = conation(dir.path(), &["eval", "bad.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("ghost.mfcc"), "{}", stderr(&o));
}

#[test]
fn synth_report_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let args = ["synth", "--words", "10", "--train", "20", "--test", "20", "--seed", "7"];
    let a = conation(dir.path(), &args);
    assert!(a.status.success(), "{}", stderr(&a));
    let b = conation(dir.path(), &args);
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    // fixed-seed regression value
    assert!(text.contains("**Overall accuracy:** 100% (200/200)"), "{text}");
}

#[test]
fn synth_argument_errors() {
    let dir = TempDir::new().unwrap();
    assert_eq!(conation(dir.path(), &["synth", "--words", "1"]).status.code(), Some(2));
    assert_eq!(conation(dir.path(), &["synth", "--test", "0"]).status.code(), Some(2));
    assert_eq!(conation(dir.path(), &["synth", "--separation=-1"]).status.code(), Some(1));
    assert_eq!(conation(dir.path(), &["synth", "--transition-floor", "1.5"]).status.code(), Some(1));
}

#[test]
fn invalid_profile_name() {
    let dir = TempDir::new().unwrap();
    let o = conation(dir.path(), &["registry", "list", "--profile", "../escape"]);
    assert_eq!(o.status.code(), Some(1));
}
