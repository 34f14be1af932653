use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn docclass(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_docclass"))
        .current_dir(dir)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn small_corpus(dir: &Path) -> PathBuf {
    let out = docclass(
        dir,
        &[
            "gen-corpus",
            "-o",
            "corpus",
            "--classes",
            "3",
            "--docs-per-class",
            "40",
            "--vocab-per-class",
            "60",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    dir.join("corpus")
}

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    let path = path.as_ref();
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn usage_errors_exit_1_and_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = docclass(
        d,
        &[
            "split",
            "-i",
            "v.jsonl",
            "--random-selection-pct",
            "140",
            "--train-out",
            "a",
            "--test-out",
            "b",
        ],
    );
    assert_eq!(code(&out), 1);
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    assert!(!d.join("a").exists() && !d.join("b").exists());

    assert_eq!(code(&docclass(d, &["frobnicate"])), 1);
    assert_eq!(code(&docclass(d, &[])), 1);
    assert_eq!(
        code(&docclass(d, &["gen-corpus", "-o", "c", "--overlap", "1.0"])),
        1
    );
    assert_eq!(
        code(&docclass(d, &["trainnb", "-i", "t", "-o", "m", "--alpha", "0"])),
        1
    );
    assert!(!d.join("c").exists());
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = docclass(d, &["trainnb", "-i", "missing.jsonl", "-o", "model.json"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.jsonl"));

    std::fs::write(
        d.join("bad.jsonl"),
        "{\"key\":\"/a/x\",\"label\":\"a\",\"text\":\"t\"}\nnot json\n",
    )
    .unwrap();
    let out = docclass(
        d,
        &["vectorize", "-i", "bad.jsonl", "-o", "v", "--dict", "dict.tsv"],
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("record 2"));
}

#[test]
fn help_and_version_on_every_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    for sub in [
        "seqdir",
        "vectorize",
        "split",
        "trainnb",
        "testnb",
        "report",
        "pipeline",
        "sweep",
        "bench",
        "gen-corpus",
    ] {
        let help = docclass(dir.path(), &[sub, "--help"]);
        assert_eq!(code(&help), 0, "{sub} --help");
        assert!(String::from_utf8_lossy(&help.stdout).contains("Usage"));
        let version = docclass(dir.path(), &[sub, "--version"]);
        assert_eq!(code(&version), 0, "{sub} --version");
        assert!(String::from_utf8_lossy(&version.stdout).contains(env!("CARGO_PKG_VERSION")));
    }
}

#[test]
fn gen_corpus_refuses_non_empty_output_without_force() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path());
    let args = ["gen-corpus", "-o", "corpus", "--docs-per-class", "2"];
    assert_eq!(code(&docclass(dir.path(), &args)), 2);
    let mut forced = args.to_vec();
    forced.push("--force");
    assert_eq!(code(&docclass(dir.path(), &forced)), 0);
    assert_eq!(
        std::fs::read_dir(dir.path().join("corpus/law")).unwrap().count(),
        2
    );
}

#[test]
fn pipeline_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path());
    let out = docclass(
        dir.path(),
        &[
            "pipeline",
            "-i",
            "./corpus",
            "--test-pct",
            "40",
            "--seed",
            "7",
            "--complement",
            "-o",
            "report.txt",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = String::from_utf8(read(dir.path().join("report.txt"))).unwrap();
    assert!(report.contains("# split: test_pct=40 seed=7 mode=bernoulli"));
    assert!(report.contains("# model: mode=complement alpha=1"));
    assert!(report.contains("Correctly Classified Instances"));
    assert!(dir.path().join("pipeline-work/model.json").exists());
}

const ARTIFACTS: [&str; 7] = [
    "corpus.jsonl",
    "dict.tsv",
    "vectors.jsonl",
    "train.jsonl",
    "test.jsonl",
    "model.json",
    "matrix.json",
];

#[test]
fn repeated_runs_and_worker_counts_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path());
    for (run, workers) in [("a", "1"), ("b", "1"), ("c", "3")] {
        let out = docclass(
            dir.path(),
            &[
                "pipeline",
                "-i",
                "corpus",
                "-o",
                &format!("{run}/report.txt"),
                "--workers",
                workers,
            ],
        );
        assert_eq!(code(&out), 0);
    }
    for name in ARTIFACTS
        .iter()
        .map(|a| format!("pipeline-work/{a}"))
        .chain(["report.txt".into()])
    {
        let a = read(dir.path().join("a").join(&name));
        assert_eq!(a, read(dir.path().join("b").join(&name)), "{name}");
        assert_eq!(a, read(dir.path().join("c").join(&name)), "{name}");
    }
}

#[test]
fn stage_commands_match_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_corpus(d);
    let steps: [&[&str]; 6] = [
        &[
            "pipeline",
            "-i",
            "corpus",
            "-o",
            "p/report.txt",
            "--work-dir",
            "p",
            "--seed",
            "3",
            "--test-pct",
            "30",
        ],
        &["seqdir", "-i", "corpus", "-o", "s/corpus.jsonl"],
        &[
            "vectorize",
            "-i",
            "s/corpus.jsonl",
            "-o",
            "s/vectors.jsonl",
            "--dict",
            "s/dict.tsv",
            "--workers",
            "2",
        ],
        &[
            "split",
            "-i",
            "s/vectors.jsonl",
            "--random-selection-pct",
            "30",
            "--seed",
            "3",
            "--train-out",
            "s/train.jsonl",
            "--test-out",
            "s/test.jsonl",
        ],
        &[
            "trainnb",
            "-i",
            "s/train.jsonl",
            "-o",
            "s/model.json",
            "--dict",
            "s/dict.tsv",
        ],
        &[
            "testnb",
            "-i",
            "s/test.jsonl",
            "-m",
            "s/model.json",
            "--matrix-out",
            "s/matrix.json",
            "-o",
            "s/report.txt",
        ],
    ];
    for args in steps {
        let out = docclass(d, args);
        assert_eq!(
            code(&out),
            0,
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for a in ARTIFACTS {
        assert_eq!(read(d.join("p").join(a)), read(d.join("s").join(a)), "{a}");
    }
    let report = String::from_utf8(read(d.join("s/report.txt"))).unwrap();
    let tail = |r: &str| r[r.find("=====").unwrap()..].to_owned();
    let pipeline_report = String::from_utf8(read(d.join("p/report.txt"))).unwrap();
    assert_eq!(tail(&report), tail(&pipeline_report));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_corpus(d);
    std::fs::write(
        d.join("run.cfg"),
        "# defaults\ntest_pct=30\nseed=7\ncomplement=true\n",
    )
    .unwrap();
    let out = docclass(
        d,
        &[
            "pipeline",
            "--config",
            "run.cfg",
            "-i",
            "corpus",
            "-o",
            "report.txt",
            "--seed",
            "9",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = String::from_utf8(read(d.join("report.txt"))).unwrap();
    assert!(
        report.contains("# split: test_pct=30 seed=9 mode=bernoulli"),
        "{report}"
    );
    assert!(report.contains("mode=complement"));

    std::fs::write(d.join("bad.cfg"), "no equals sign\n").unwrap();
    assert_eq!(
        code(&docclass(
            d,
            &["pipeline", "--config", "bad.cfg", "-i", "corpus", "-o", "r"]
        )),
        1
    );
}

#[test]
fn sweep_and_bench_emit_tables() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_corpus(d);
    let out = docclass(
        d,
        &[
            "sweep",
            "-i",
            "corpus",
            "--pcts",
            "10,40,100",
            "--csv",
            "sweep.csv",
        ],
    );
    assert_eq!(code(&out), 0);
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("Test set (%)") && table.contains("Accuracy (%)"));
    let csv = String::from_utf8(read(d.join("sweep.csv"))).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().last().unwrap().starts_with("100,") && csv.contains("empty"));

    let out = docclass(
        d,
        &[
            "bench",
            "-i",
            "corpus",
            "--workers",
            "1,2",
            "--reps",
            "2",
            "--csv",
            "bench.csv",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        String::from_utf8(read(d.join("bench.csv")))
            .unwrap()
            .lines()
            .count(),
        7
    );
}
