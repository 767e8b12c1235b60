use std::fs;
use std::process::{Command, Output};

fn rlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rlab")).args(args).env_remove("RLAB_KAPPA").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn colour_two_node_path_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("labels.txt");
    fs::write(&path, "# two nodes\n2\n3\n").unwrap();
    let o = rlab(&["colour", "--labels-file", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "node,label,colour,termination_round,limit\n0,2,0,52,60\n1,3,1,53,61\n");
}

#[test]
fn colour_rejects_duplicate_labels() {
    let o = rlab(&["colour", "--labels", "5,9,5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("more than once"));
}

#[test]
fn colour_random_cycle() {
    let o = rlab(&["colour", "--random", "1000", "--topology", "cycle", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let colours: Vec<u8> =
        out.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(colours.len(), 1000);
    for i in 0..1000 {
        assert_ne!(colours[i], colours[(i + 1) % 1000]);
    }
}

#[test]
fn canon_run_within_bound() {
    let o = rlab(&["rendezvous", "--algorithm", "canon", "--start-a", "-3", "--distance", "7", "--delay", "13"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "canon");
    assert_eq!(row[1], "7");
    assert_eq!(row[2], "13");
    assert!(row[4].parse::<u64>().unwrap() <= 4928);
    assert_eq!(row[5], "4928");
    assert_eq!(row[6], "true");
}

#[test]
fn known_d_small_labels() {
    let o = rlab(&["rendezvous", "--algorithm", "knownD", "--labels", "2,3", "--distance", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    // log*(3) = 2
    assert_eq!(row[5], (8 * 60 * 2 + 12).to_string());
    assert!(row[4].parse::<u64>().unwrap() <= 972);
}

#[test]
fn zero_distance_is_a_config_error() {
    let o = rlab(&["rendezvous", "--algorithm", "canon", "--distance", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = rlab(&["rendezvous", "--algorithm", "knownD", "--start-a", "4", "--start-b", "4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(rlab(&["rendezvous", "--algorithm", "teleport", "--distance", "1"]).status.code(), Some(2));
    assert_eq!(rlab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(rlab(&["rendezvous", "--algorithm", "canon", "--generator", "random", "--distance", "1"]).status.code(), Some(2));
}

#[test]
fn timeout_reports_a_repro_command_that_reproduces() {
    let args = [
        "rendezvous", "--algorithm", "knownD", "--generator", "huge4", "--seed", "3", "--start-a", "-2",
        "--distance", "9", "--orient-b", "-1", "--max-rounds", "3",
    ];
    let o = rlab(&args);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    let cmd = err.lines().find_map(|l| l.strip_prefix("reproduce: rlab ")).expect("repro line");
    let again = rlab(&cmd.split(' ').collect::<Vec<_>>());
    assert_eq!(again.status.code(), Some(1));
    assert_eq!(stdout(&again), stdout(&o));
}

#[test]
fn scenario_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.conf");
    fs::write(&path, "# canon run\nalgorithm = canon\nstart_a = 5\ndistance = 3\ndelay = 2\n").unwrap();
    let o = rlab(&["rendezvous", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("canon,3,2,"));
    let o = rlab(&["rendezvous", "--scenario", path.to_str().unwrap(), "--distance", "4"]);
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("canon,4,2,"));
    fs::write(&path, "algorithm=canon\ndistance=1\ncolour=blue\n").unwrap();
    assert_eq!(rlab(&["rendezvous", "--scenario", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn trace_file_has_one_row_per_round() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let o = rlab(&["rendezvous", "--algorithm", "canon", "--start-a", "0", "--distance", "1", "--trace", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let trace = fs::read_to_string(&path).unwrap();
    assert!(trace.starts_with("global_round,pos_a,pos_b,move_a,move_b\n"));
    let elapsed: usize = stdout(&o).lines().nth(1).unwrap().split(',').nth(4).unwrap().parse().unwrap();
    assert_eq!(trace.lines().count(), elapsed + 1);
}

#[test]
fn sweep_csv_is_byte_identical_across_runs() {
    let args = [
        "sweep", "--algorithm", "knownD", "--d", "1..4", "--delays", "0,3,17", "--generators", "random,huge4",
        "--trials", "3",
    ];
    let a = rlab(&args);
    let b = rlab(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let out = stdout(&a);
    assert_eq!(out.lines().next().unwrap(), "algorithm,D,delay,generator,orient_a,orient_b,trials,max_elapsed,bound,ok");
    assert_eq!(out.lines().count(), 1 + 4 * 3 * 2 * 2);
}

#[test]
fn sweep_failure_names_a_scenario() {
    let o = rlab(&["sweep", "--algorithm", "canon", "--d", "2", "--delays", "0", "--max-rounds", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("reproduce: rlab rendezvous --algorithm canon"));
}

#[test]
fn sweep_rejects_empty_ranges() {
    assert_eq!(rlab(&["sweep", "--algorithm", "canon", "--d", "5..2"]).status.code(), Some(2));
    assert_eq!(rlab(&["sweep", "--algorithm", "canon", "--d", "0..2"]).status.code(), Some(2));
}

#[test]
fn quick_verify_passes() {
    let o = rlab(&["verify", "--quick"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("criterion ")).count(), 9);
}

#[test]
fn verify_with_kappa_one_fails() {
    let o = Command::new(env!("CARGO_BIN_EXE_rlab"))
        .args(["verify", "--only", "5,8"])
        .env("RLAB_KAPPA", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("failed criteria"));
}

#[test]
fn verify_with_one_round_budget_fails_with_timeouts() {
    let o = rlab(&["verify", "--quick", "--only", "3", "--max-rounds", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("no meeting within 1 rounds"));
    assert!(out.contains("reproduce: rlab rendezvous"));
}

#[test]
fn bad_kappa_env_is_a_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_rlab"))
        .args(["verify", "--quick", "--only", "7"])
        .env("RLAB_KAPPA", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
