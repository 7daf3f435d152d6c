//! End-to-end runs of the `sparsebm` binary.

use std::path::Path;
use std::process::{Command, Output};

fn sparsebm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparsebm")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn manifest(path: &Path) -> serde_json::Value {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    serde_json::from_str(&std::fs::read_to_string(s).unwrap()).unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(code(&sparsebm(&["--help"])), 0);
    assert_eq!(code(&sparsebm(&["--version"])), 0);
    assert_eq!(code(&sparsebm(&["eval", "--bogus"])), 1);
    assert_eq!(code(&sparsebm(&[])), 1);
    let o = sparsebm(&["eval", "--model", "/nonexistent/m", "--docs", "/nonexistent/d"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("/nonexistent/m"));
    assert_eq!(code(&sparsebm(&["--threads", "0", "synth", "-o", "/tmp/unused"])), 1);
}

#[test]
fn structure_learning_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = d.join("data");
    let o = sparsebm(&["synth", "--seed", "3", "--train", "300", "--test", "30", "-o", p(&data)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let train = data.join("train.bow");
    assert!(data.join("groups.txt").is_file());

    let skeleton = d.join("skeleton.txt");
    assert_eq!(code(&sparsebm(&["skeleton", "--corpus", p(&train), "-o", p(&skeleton)])), 0);
    let m = manifest(&skeleton);
    assert_eq!(m["command"], "skeleton");
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);

    let tree = d.join("tree.model");
    let o = sparsebm(&["train-sbm", "--corpus", p(&train), "--structure", p(&skeleton), "--epochs", "2", "-o", p(&tree)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let structure = d.join("structure.txt");
    let cmi = d.join("cmi.tsv");
    let o = sparsebm(&[
        "expand", "--skeleton", p(&skeleton), "--tree-model", p(&tree), "--corpus", p(&train),
        "--per-unit", "2", "--override", "0=3", "--cmi-tsv", p(&cmi), "-o", p(&structure),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(std::fs::read_to_string(&cmi).unwrap().starts_with("hidden\tvisible\tscore\n"));
    let o = sparsebm(&[
        "expand", "--skeleton", p(&skeleton), "--tree-model", p(&tree), "--corpus", p(&train),
        "--override", "zero=3", "-o", p(&structure),
    ]);
    assert_eq!(code(&o), 1);

    let sbm = d.join("sbm.model");
    let o = sparsebm(&["train-sbm", "--corpus", p(&train), "--structure", p(&structure), "--epochs", "2", "-o", p(&sbm)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let report = d.join("eval.tsv");
    let test = data.join("test.bow");
    let o = sparsebm(&["eval", "--model", p(&sbm), "--docs", p(&test), "--exact", "-o", p(&report)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&report).unwrap();
    assert_eq!(text.lines().next().unwrap(), "doc_id\tD\tlog_p\tper_word_ppl");
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 31);

    let o = sparsebm(&["eval", "--model", p(&sbm), "--docs", p(&test), "--schedule", "0-0.5:20,0.5-1:30", "--ais-runs", "4", "--sample", "5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("# documents\t5"));
    assert_eq!(code(&sparsebm(&["eval", "--model", p(&sbm), "--docs", p(&test), "--schedule", "fast"])), 1);

    let emb = d.join("emb.txt");
    let vocab = std::fs::read_to_string(data.join("train.bow.vocab")).unwrap();
    let lines: Vec<String> = vocab.lines().enumerate().map(|(i, w)| format!("{w} {} 1", i % 5)).collect();
    std::fs::write(&emb, lines.join("\n")).unwrap();
    let o = sparsebm(&["interpret", "--model", p(&sbm), "--corpus", p(&train), "--embeddings", p(&emb)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = String::from_utf8_lossy(&o.stdout).into_owned();
    assert!(out.starts_with("unit\tscore\tinsufficient\ttop_words\n"));
    assert!(out.contains("# interpretability\t"));
}

#[test]
fn pruning_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = d.join("data");
    assert_eq!(code(&sparsebm(&["synth", "--train", "200", "--test", "20", "-o", p(&data)])), 0);
    let train = data.join("train.bow");
    let rs = d.join("rs.model");
    let o = sparsebm(&["train-rs", "--corpus", p(&train), "--hidden", "4", "--epochs", "2", "-o", p(&rs)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let pruned = d.join("pruned.model");
    let o = sparsebm(&["prune", "--model", p(&rs), "--corpus", p(&train), "--target-fraction", "0.2", "-o", p(&pruned)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let log = std::fs::read_to_string(d.join("pruned.prune.tsv")).unwrap();
    assert_eq!(log.lines().next().unwrap(), "iter\tper_unit_count\tepochs");
    assert!(log.lines().last().unwrap().split('\t').nth(1) == Some("12"));
    assert_eq!(manifest(&pruned)["outputs"].as_array().unwrap().len(), 2);

    // pruning an SBM is a usage error
    let skeleton = d.join("sk.txt");
    assert_eq!(code(&sparsebm(&["skeleton", "--corpus", p(&train), "-o", p(&skeleton)])), 0);
    let tree = d.join("tree.model");
    assert_eq!(code(&sparsebm(&["train-sbm", "--corpus", p(&train), "--structure", p(&skeleton), "--epochs", "1", "-o", p(&tree)])), 0);
    assert_eq!(code(&sparsebm(&["prune", "--model", p(&tree), "--corpus", p(&train), "-o", p(&pruned)])), 1);
}

#[test]
fn prepare_selects_vocabulary_and_splits() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let docword = d.join("docword.txt");
    let vocab = d.join("vocab.txt");
    // 6 documents over 4 words; word 3 is rare
    std::fs::write(&docword, "6\n4\n11\n1 1 3\n1 2 1\n2 1 2\n2 4 1\n3 2 4\n4 1 1\n4 3 2\n5 2 2\n5 3 1\n6 1 1\n6 2 1\n").unwrap();
    std::fs::write(&vocab, "apple\nbanana\ncherry\ndate\n").unwrap();
    let out = d.join("prepared");
    let o = sparsebm(&[
        "prepare", "--docword", p(&docword), "--vocab", p(&vocab), "--vocab-size", "2", "--test", "2",
        "--validation", "1", "--seed", "4", "-o", p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(out.join("train.bow.vocab")).unwrap(), "apple\nbanana\n");
    let header = |name: &str| -> usize {
        std::fs::read_to_string(out.join(name)).unwrap().lines().next().unwrap().parse().unwrap()
    };
    assert_eq!(header("test.bow"), 2);
    assert_eq!(header("validation.bow"), 1);
    assert_eq!(header("train.bow"), 3);
    assert!(out.join("prepare.manifest.json").is_file());

    let o = sparsebm(&["prepare", "--docword", p(&docword), "--vocab", p(&vocab), "--test", "9", "-o", p(&out)]);
    assert_eq!(code(&o), 1);
    let o = sparsebm(&["prepare", "--docword", p(&docword), "--vocab", p(&vocab), "--method", "bm25", "--test", "1", "-o", p(&out)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn pipeline_validates_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("p.toml");
    std::fs::write(
        &config,
        "output_dir = \"out\"\n[corpus]\nsource = \"uci\"\ndocword = \"missing.txt\"\nvocab = \"vocab.txt\"\ntest = 1\n",
    )
    .unwrap();
    let o = sparsebm(&["pipeline", p(&config)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("missing.txt"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn pipeline_failures_name_the_stage_and_reruns_are_cached() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // vocabulary shorter than the docword header claims
    std::fs::write(d.join("docword.txt"), "2\n3\n2\n1 1 1\n2 3 1\n").unwrap();
    std::fs::write(d.join("vocab.txt"), "a\nb\n").unwrap();
    let config = d.join("bad.toml");
    std::fs::write(
        &config,
        "output_dir = \"bad\"\n[corpus]\nsource = \"uci\"\ndocword = \"docword.txt\"\nvocab = \"vocab.txt\"\ntest = 1\n",
    )
    .unwrap();
    let o = sparsebm(&["pipeline", p(&config)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("stage corpus failed"), "{}", stderr(&o));

    let config = d.join("good.toml");
    std::fs::write(
        &config,
        "output_dir = \"good\"\nseed = 2\n[corpus]\nsource = \"synthetic\"\ntrain = 200\ntest = 20\n\
         [train]\nepochs = 2\n[eval]\nmethod = \"exact\"\nmodels = [\"rs\", \"rs_sfc\"]\n",
    )
    .unwrap();
    let first = sparsebm(&["pipeline", p(&config)]);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let table = String::from_utf8_lossy(&first.stdout).into_owned();
    assert!(table.starts_with("model\thidden\tconnections\tperplexity\n"));
    assert!(table.contains("RS+\t") && table.contains("RS+ SFC\t") && !table.contains("SBM-SFC"));
    let model = d.join("good/rs.model");
    let stamp = std::fs::metadata(&model).unwrap().modified().unwrap();
    let second = sparsebm(&["-v", "pipeline", p(&config)]);
    assert_eq!(code(&second), 0);
    assert_eq!(String::from_utf8_lossy(&second.stdout), table);
    assert!(stderr(&second).contains("stage rs: cached"));
    assert_eq!(std::fs::metadata(&model).unwrap().modified().unwrap(), stamp);
}
