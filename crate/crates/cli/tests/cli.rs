//! End-to-end checks of the command-line surface: flag validation, output
//! schemas, and the documented examples.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn topicbp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topicbp"))
        .args(args)
        .output()
        .expect("spawn topicbp")
}

fn run_ok(args: &[&str]) -> String {
    let out = topicbp(args);
    assert!(
        out.status.success(),
        "expected success for {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn run_err(args: &[&str]) -> String {
    let out = topicbp(args);
    assert_eq!(
        out.status.code(),
        Some(1),
        "expected exit 1 for {args:?}: {}",
        String::from_utf8_lossy(&out.stdout)
    );
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn gen_corpus(dir: &Path, topics: usize, docs: usize, words: usize, seed: u64) {
    run_ok(&[
        "gen-synthetic",
        "--topics",
        &topics.to_string(),
        "--docs",
        &docs.to_string(),
        "--words",
        &words.to_string(),
        "--doc-len",
        "20",
        "--concentration",
        "0.3",
        "--seed",
        &seed.to_string(),
        "--out",
        dir.to_str().unwrap(),
    ]);
}

fn read_csv(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect()
}

#[test]
fn train_writes_schema_stable_outputs() {
    let dir = tempdir().unwrap();
    let data = dir.path().join("data");
    let out = dir.path().join("run");
    gen_corpus(&data, 3, 30, 18, 4);

    let stdout = run_ok(&[
        "train",
        "--topics",
        "3",
        "--iters",
        "40",
        "--report-every",
        "10",
        "--top-n",
        "4",
        "--seed",
        "2",
        "--docword",
        data.join("docword.txt").to_str().unwrap(),
        "--vocab",
        data.join("vocab.txt").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);

    // Banner, iteration lines, elapsed, then the top-word block.
    assert!(stdout.contains("*********************\nThe sBP Algorithm\n*********************"));
    assert!(stdout.contains("    Iteration 10 of 40:    "));
    assert!(stdout.contains("    Iteration 40 of 40:    "));
    assert!(stdout.contains("Elapsed time is "));
    assert!(stdout.contains(" seconds."));
    assert!(stdout.contains("Top 4 words in each of 3 topics by sBP"));

    // theta.csv: one row per document, rows sum to 1 as written.
    let theta = read_csv(&out.join("theta.csv"));
    assert_eq!(theta.len(), 30);
    for row in &theta {
        assert_eq!(row.len(), 3);
        let s: f64 = row.iter().sum();
        assert!((s - 1.0).abs() < 1e-5, "theta row sums to {s}");
    }
    // phi.csv: one row per word, topic columns sum to 1 as written.
    let phi = read_csv(&out.join("phi.csv"));
    assert_eq!(phi.len(), 18);
    for k in 0..3 {
        let s: f64 = phi.iter().map(|r| r[k]).sum();
        assert!((s - 1.0).abs() < 1e-5, "phi column {k} sums to {s}");
    }
    // topwords.txt: K lines of top_n space-separated terms.
    let topwords = fs::read_to_string(out.join("topwords.txt")).unwrap();
    let lines: Vec<&str> = topwords.lines().collect();
    assert_eq!(lines.len(), 3);
    for line in &lines {
        assert_eq!(line.split(' ').count(), 4);
    }
    // perplexity.log: one canonical line per report point.
    let log = fs::read_to_string(out.join("perplexity.log")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("Iteration 10 of 40: "));
    assert!(lines[3].starts_with("Iteration 40 of 40: "));
}

#[test]
fn rescoring_matches_the_final_log_line() {
    let dir = tempdir().unwrap();
    let data = dir.path().join("data");
    let out = dir.path().join("run");
    gen_corpus(&data, 2, 25, 12, 9);
    run_ok(&[
        "train",
        "--topics",
        "2",
        "--iters",
        "30",
        "--docword",
        data.join("docword.txt").to_str().unwrap(),
        "--vocab",
        data.join("vocab.txt").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let log = fs::read_to_string(out.join("perplexity.log")).unwrap();
    let reported: f64 = log
        .lines()
        .last()
        .unwrap()
        .rsplit(' ')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    let printed = run_ok(&[
        "perplexity",
        "--theta",
        out.join("theta.csv").to_str().unwrap(),
        "--phi",
        out.join("phi.csv").to_str().unwrap(),
        "--docword",
        data.join("docword.txt").to_str().unwrap(),
    ]);
    let rescored: f64 = printed.trim().parse().unwrap();
    // The saved theta is rounded to six decimals, so the re-scored value
    // can drift by roughly 1e-5 relative; exact agreement is not possible.
    assert!(
        (rescored - reported).abs() / reported < 1e-3,
        "{rescored} vs {reported}"
    );
}

#[test]
fn uniform_model_prints_vocabulary_size() {
    let dir = tempdir().unwrap();
    let theta = dir.path().join("theta.csv");
    let phi = dir.path().join("phi.csv");
    let docword = dir.path().join("docword.txt");
    fs::write(&theta, "0.500000,0.500000\n0.500000,0.500000\n").unwrap();
    fs::write(&phi, "0.25,0.25\n0.25,0.25\n0.25,0.25\n0.25,0.25\n").unwrap();
    fs::write(&docword, "2\n4\n3\n1 1 2\n1 3 1\n2 4 5\n").unwrap();
    let printed = run_ok(&[
        "perplexity",
        "--theta",
        theta.to_str().unwrap(),
        "--phi",
        phi.to_str().unwrap(),
        "--docword",
        docword.to_str().unwrap(),
    ]);
    assert_eq!(printed.trim(), "4.000000");
}

#[test]
fn mismatched_topic_counts_fail() {
    let dir = tempdir().unwrap();
    let theta = dir.path().join("theta.csv");
    let phi = dir.path().join("phi.csv");
    let docword = dir.path().join("docword.txt");
    fs::write(&theta, "0.5,0.5\n").unwrap();
    fs::write(&phi, "0.4,0.3,0.3\n").unwrap();
    fs::write(&docword, "1\n1\n1\n1 1 1\n").unwrap();
    let err = run_err(&[
        "perplexity",
        "--theta",
        theta.to_str().unwrap(),
        "--phi",
        phi.to_str().unwrap(),
        "--docword",
        docword.to_str().unwrap(),
    ]);
    assert!(err.contains("2 topics but phi has 3"), "{err}");
}

#[test]
fn invalid_flag_combinations_exit_one() {
    let dir = tempdir().unwrap();
    let data = dir.path().join("data");
    gen_corpus(&data, 2, 10, 10, 1);
    let docword = data.join("docword.txt");
    let vocab = data.join("vocab.txt");
    let out = dir.path().join("run");
    let base = [
        "train",
        "--topics",
        "2",
        "--docword",
        docword.to_str().unwrap(),
        "--vocab",
        vocab.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];

    let with = |extra: &[&str]| {
        let mut args = base.to_vec();
        args.extend_from_slice(extra);
        run_err(&args)
    };
    assert!(with(&["--algo", "gs", "--schedule", "async"]).contains("--schedule"));
    assert!(with(&["--algo", "vb", "--schedule", "sync"]).contains("--schedule"));
    assert!(with(&["--model", "atm"]).contains("--authors"));
    assert!(with(&["--model", "lalda"]).contains("--labels"));
    assert!(with(&["--model", "lalda", "--algo", "gs"]).contains("bp only"));
    assert!(with(&["--labels", "x"]).contains("--labels only applies"));
    assert!(with(&["--iters", "0"]).contains("--iters"));
    assert!(!out.exists(), "no partial outputs on validation failure");
}

#[test]
fn metadata_validation_failures_exit_one() {
    let dir = tempdir().unwrap();
    let data = dir.path().join("data");
    gen_corpus(&data, 2, 10, 10, 2);
    let out = dir.path().join("run");
    // One author line missing entirely.
    let authors = dir.path().join("authors.txt");
    fs::write(&authors, "1\n2\n1\n").unwrap();
    let err = run_err(&[
        "train",
        "--model",
        "atm",
        "--topics",
        "2",
        "--docword",
        data.join("docword.txt").to_str().unwrap(),
        "--vocab",
        data.join("vocab.txt").to_str().unwrap(),
        "--authors",
        authors.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        err.contains("3 lines") && err.contains("10 documents"),
        "{err}"
    );

    // A label beyond K.
    let labels = dir.path().join("labels.txt");
    fs::write(&labels, "1\n2\n3\n1\n2\n1\n2\n1\n2\n1\n").unwrap();
    let err = run_err(&[
        "train",
        "--model",
        "lalda",
        "--topics",
        "2",
        "--docword",
        data.join("docword.txt").to_str().unwrap(),
        "--vocab",
        data.join("vocab.txt").to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(err.contains("label 3"), "{err}");
}

#[test]
fn unwritable_out_dir_fails_without_partial_outputs() {
    let dir = tempdir().unwrap();
    let data = dir.path().join("data");
    gen_corpus(&data, 2, 10, 10, 5);
    // A file squatting on the output path makes directory creation fail
    // after training; nothing may be left behind.
    let out = dir.path().join("occupied");
    fs::write(&out, "not a directory").unwrap();
    run_err(&[
        "train",
        "--topics",
        "2",
        "--iters",
        "5",
        "--docword",
        data.join("docword.txt").to_str().unwrap(),
        "--vocab",
        data.join("vocab.txt").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(out.is_file(), "the squatting file must survive untouched");
}

#[test]
fn lalda_and_atm_write_their_outputs() {
    let dir = tempdir().unwrap();
    let data = dir.path().join("data");
    gen_corpus(&data, 2, 12, 10, 3);
    let labels = dir.path().join("labels.txt");
    fs::write(&labels, "1\n2\n\n1 2\n1\n2\n\n1\n2\n1 2\n1\n2\n").unwrap();
    let lalda_out = dir.path().join("lalda");
    run_ok(&[
        "train",
        "--model",
        "lalda",
        "--topics",
        "2",
        "--iters",
        "15",
        "--docword",
        data.join("docword.txt").to_str().unwrap(),
        "--vocab",
        data.join("vocab.txt").to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
        "--out",
        lalda_out.to_str().unwrap(),
    ]);
    assert!(lalda_out.join("theta.csv").exists());

    let authors = dir.path().join("authors.txt");
    fs::write(&authors, "1\n2\n3\n1 2\n2\n3\n1\n2 3\n1\n2\n3\n1\n").unwrap();
    let atm_out = dir.path().join("atm");
    run_ok(&[
        "train",
        "--model",
        "atm",
        "--topics",
        "2",
        "--iters",
        "15",
        "--docword",
        data.join("docword.txt").to_str().unwrap(),
        "--vocab",
        data.join("vocab.txt").to_str().unwrap(),
        "--authors",
        authors.to_str().unwrap(),
        "--out",
        atm_out.to_str().unwrap(),
    ]);
    // Author-topic runs write author_theta.csv (A x K) instead of theta.csv.
    assert!(atm_out.join("author_theta.csv").exists());
    assert!(!atm_out.join("theta.csv").exists());
    let author_theta = read_csv(&atm_out.join("author_theta.csv"));
    assert_eq!(author_theta.len(), 3);
}

#[test]
fn gen_synthetic_is_deterministic_and_validates() {
    let dir = tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    gen_corpus(&a, 2, 15, 10, 77);
    gen_corpus(&b, 2, 15, 10, 77);
    for name in ["docword.txt", "vocab.txt", "phi_true.csv"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name} differs between identical seeds"
        );
    }
    let err = run_err(&[
        "gen-synthetic",
        "--topics",
        "3",
        "--docs",
        "5",
        "--words",
        "2",
        "--doc-len",
        "5",
        "--out",
        dir.path().join("c").to_str().unwrap(),
    ]);
    assert!(err.contains("--words"), "{err}");
}

#[test]
fn pure_synthetic_corpus_splits_into_two_cooccurrence_blocks() {
    // With a tiny concentration every document draws from one topic and
    // every topic concentrates on its own vocabulary block, so the
    // document-word graph falls apart into one component per topic.
    let dir = tempdir().unwrap();
    let data = dir.path().join("data");
    run_ok(&[
        "gen-synthetic",
        "--topics",
        "2",
        "--docs",
        "200",
        "--words",
        "20",
        "--doc-len",
        "50",
        "--concentration",
        "0.0001",
        "--seed",
        "3",
        "--out",
        data.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(data.join("docword.txt")).unwrap();
    let mut lines = text.lines();
    let docs: usize = lines.next().unwrap().parse().unwrap();
    let words: usize = lines.next().unwrap().parse().unwrap();
    let _nnz: usize = lines.next().unwrap().parse().unwrap();

    // Union-find over document and word nodes.
    let mut parent: Vec<usize> = (0..docs + words).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut seen_words = std::collections::BTreeSet::new();
    for line in lines {
        let f: Vec<usize> = line
            .split_whitespace()
            .map(|x| x.parse().unwrap())
            .collect();
        let (d, w) = (f[0] - 1, docs + f[1] - 1);
        seen_words.insert(f[1] - 1);
        let (rd, rw) = (find(&mut parent, d), find(&mut parent, w));
        parent[rd] = rw;
    }
    let mut roots = std::collections::BTreeSet::new();
    for d in 0..docs {
        roots.insert(find(&mut parent, d));
    }
    assert_eq!(roots.len(), 2, "documents must split into two blocks");
    // The two components line up with the two vocabulary blocks.
    let mut block_roots = [None, None];
    for &w in &seen_words {
        let block = usize::from(w >= words / 2);
        let root = find(&mut parent, docs + w);
        match block_roots[block] {
            None => block_roots[block] = Some(root),
            Some(r) => assert_eq!(r, root, "words of block {block} split apart"),
        }
    }
    assert_ne!(block_roots[0], block_roots[1], "blocks merged");
}

#[test]
fn single_topic_synthetic_recovers_its_word_distribution() {
    let dir = tempdir().unwrap();
    let data = dir.path().join("data");
    run_ok(&[
        "gen-synthetic",
        "--topics",
        "1",
        "--docs",
        "60",
        "--words",
        "25",
        "--doc-len",
        "40",
        "--concentration",
        "1.0",
        "--seed",
        "6",
        "--out",
        data.to_str().unwrap(),
    ]);
    let out = dir.path().join("run");
    run_ok(&[
        "train",
        "--topics",
        "1",
        "--iters",
        "10",
        "--docword",
        data.join("docword.txt").to_str().unwrap(),
        "--vocab",
        data.join("vocab.txt").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let phi_true = read_csv(&data.join("phi_true.csv"));
    let phi = read_csv(&out.join("phi.csv"));
    let dot: f64 = phi.iter().zip(&phi_true).map(|(a, b)| a[0] * b[0]).sum();
    let na: f64 = phi.iter().map(|r| r[0] * r[0]).sum::<f64>().sqrt();
    let nb: f64 = phi_true.iter().map(|r| r[0] * r[0]).sum::<f64>().sqrt();
    assert!(dot / (na * nb) > 0.98, "cosine {}", dot / (na * nb));
}
