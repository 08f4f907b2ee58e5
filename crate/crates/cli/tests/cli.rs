use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn prover(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prover"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const FIXTURE: &str = "#statement\ttrivial\t⊢ True\n\
#statement\tstuck\t⊢ False\n\
⊢ True\ttrivial\tQED\n\
⊢ True\tsimp\t⊢ True ∧ True\n\
⊢ False\tsimp\t⊢ ¬True\n\
⊢ ¬True\tintro h\t⊢ False\n";

fn fixture_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("env.tsv"), FIXTURE).unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "out = \"out\"\n[environment]\nsource = \"scripted\"\npath = \"env.tsv\"\n",
    )
    .unwrap();
    dir
}

fn puzzle_dir(extra: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        format!(
            "seed = 5\nout = \"out\"\nparallelism = 2\n\
             [environment]\nsource = \"puzzles\"\nseed = 8\nnum_statements = 40\n\
             state_space_size = 200\nbranching = 4\nsolvable_fraction = 0.8\nmax_depth = 6\n\
             [search]\nmax_steps = 3\n{extra}"
        ),
    )
    .unwrap();
    dir
}

#[test]
fn codec_examples() {
    let dir = tempfile::tempdir().unwrap();
    let o = prover(dir.path(), &["codec", "6", "--levels", "3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().next(), Some("(2,3,6)"));

    let o = prover(dir.path(), &["codec", "7"]);
    assert_eq!(
        stdout(&o).lines().nth(1),
        Some("<num_box><|num-1-of-2|><|num-1-of-4|><|num-1-of-8|><|num-2-of-16|><|num-4-of-32|><|num-7-of-64|></num_box>")
    );

    let o = prover(
        dir.path(),
        &[
            "codec",
            "<num_box><|num-1-of-2|><|num-2-of-4|><|num-3-of-8|></num_box>",
        ],
    );
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().next(), Some("3"));

    let o = prover(dir.path(), &["codec", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    let o = prover(dir.path(), &["codec", "<num_box><|num-3-of-2|></num_box>"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn search_exit_status_and_outputs() {
    let dir = fixture_dir();
    let o = prover(dir.path(), &["search", "trivial", "--config", "run.toml"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(
        stdout(&o).starts_with("proved=true length=1"),
        "{}",
        stdout(&o)
    );
    assert!(dir.path().join("out/trivial.events.jsonl").exists());
    assert!(dir.path().join("out/trivial.tree.tsv").exists());

    let o = prover(dir.path(), &["search", "stuck", "--config", "run.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("proved=false"));

    let o = prover(dir.path(), &["search", "missing", "--config", "run.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn search_is_deterministic() {
    let dir = puzzle_dir("");
    let id = "puzzle-8-0003";
    prover(
        dir.path(),
        &["search", id, "--config", "run.toml", "--out", "a"],
    );
    prover(
        dir.path(),
        &["search", id, "--config", "run.toml", "--out", "b"],
    );
    let a = fs::read(dir.path().join(format!("a/{id}.events.jsonl"))).unwrap();
    let b = fs::read(dir.path().join(format!("b/{id}.events.jsonl"))).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn missing_config_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = prover(dir.path(), &["batch", "--config", "nope.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let o = prover(dir.path(), &["batch"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn batch_writes_results() {
    let dir = puzzle_dir("");
    let o = prover(dir.path(), &["batch", "--config", "run.toml"]);
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("out/results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 41);
    assert!(csv.starts_with("statement_id,proved,"));
    assert!(dir.path().join("out/prm_labels.tsv").exists());
}

#[test]
fn iterate_zero_writes_only_the_baseline() {
    let dir = puzzle_dir("");
    let o = prover(
        dir.path(),
        &["iterate", "--iterations", "0", "--config", "run.toml"],
    );
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("out/stats.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("0,"));
}

fn cumulative_solved(csv: &str) -> Vec<usize> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn iterate_is_monotone_and_resumable() {
    let extra = "[iterate]\ndiversity_per_tree = 1\nrefit_distance_critic = true\n";
    let full = puzzle_dir(extra);
    let o = prover(
        full.path(),
        &["iterate", "--iterations", "3", "--config", "run.toml"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let full_csv = fs::read_to_string(full.path().join("out/stats.csv")).unwrap();
    let solved = cumulative_solved(&full_csv);
    assert_eq!(solved.len(), 4);
    assert!(solved.windows(2).all(|w| w[1] >= w[0]), "{solved:?}");
    assert_eq!(stdout(&o), full_csv);

    let split = puzzle_dir(extra);
    let o = prover(
        split.path(),
        &["iterate", "--iterations", "1", "--config", "run.toml"],
    );
    assert!(o.status.success());
    let o = prover(
        split.path(),
        &[
            "iterate",
            "--iterations",
            "3",
            "--resume",
            "--config",
            "run.toml",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read_to_string(split.path().join("out/stats.csv")).unwrap(),
        full_csv
    );
    for name in [
        "checkpoint.json",
        "policy_records.jsonl",
        "distance_records.jsonl",
        "events/iteration-3.jsonl",
    ] {
        assert_eq!(
            fs::read(split.path().join("out").join(name)).unwrap(),
            fs::read(full.path().join("out").join(name)).unwrap(),
            "{name}"
        );
    }

    let o = prover(split.path(), &["stats", "--config", "run.toml"]);
    assert_eq!(stdout(&o), full_csv);

    let cp = split.path().join("out/checkpoint.json");
    let text = fs::read_to_string(&cp).unwrap();
    fs::write(&cp, text.replacen("puzzle-8", "puzzle-9", 1)).unwrap();
    let o = prover(
        split.path(),
        &[
            "iterate",
            "--iterations",
            "4",
            "--resume",
            "--config",
            "run.toml",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("checksum"));
}

#[test]
fn outputs_stay_under_the_output_directory() {
    let dir = puzzle_dir("");
    prover(
        dir.path(),
        &["iterate", "--iterations", "1", "--config", "run.toml"],
    );
    prover(dir.path(), &["batch", "--config", "run.toml"]);
    let mut names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["out", "run.toml"]);
}

#[test]
fn gen_puzzles_round_trips_through_search() {
    let dir = tempfile::tempdir().unwrap();
    let o = prover(
        dir.path(),
        &[
            "gen-puzzles",
            "--seed",
            "2",
            "--statements",
            "12",
            "--states",
            "80",
            "--out",
            "p",
        ],
    );
    assert!(o.status.success());
    assert!(stdout(&o).contains("statements=12"));
    fs::write(
        dir.path().join("run.toml"),
        "out = \"p\"\n[environment]\nsource = \"scripted\"\npath = \"p/puzzles.tsv\"\n[policy]\nkind = \"enumerate\"\n",
    )
    .unwrap();
    let o = prover(dir.path(), &["batch", "--config", "run.toml"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("proved="));
}

#[test]
fn trained_policy_and_critic_files_load() {
    let dir = puzzle_dir("[iterate]\nrefit_distance_critic = true\n");
    prover(
        dir.path(),
        &["iterate", "--iterations", "2", "--config", "run.toml"],
    );
    prover(dir.path(), &["batch", "--config", "run.toml"]);
    let cfg = fs::read_to_string(dir.path().join("run.toml")).unwrap();
    for extra in [
        "[policy]\nkind = \"tabular\"\nrecords = \"out/policy_records.jsonl\"\n[critic]\nkind = \"distance\"\nrecords = \"out/distance_records.jsonl\"\n",
        "[critic]\nkind = \"prm\"\nlabels = \"out/prm_labels.tsv\"\n",
    ] {
        fs::write(dir.path().join("trained.toml"), format!("{cfg}{extra}").replace("out = \"out\"", "out = \"t\"")).unwrap();
        let o = prover(dir.path(), &["batch", "--config", "trained.toml"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn config_fuzz_seeds_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/run_config");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let parsed = prover_cli::RunConfig::parse(&fs::read_to_string(&path).unwrap());
        assert_eq!(parsed.is_ok(), !name.starts_with("bad_"), "{name}");
        seen += 1;
    }
    assert!(seen >= 4);
}
