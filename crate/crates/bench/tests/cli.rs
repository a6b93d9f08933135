use std::fs;
use std::process::Command;

use svarm::games::{BridgeGame, ShoeGame, TableGame};
use svarm::{exact_shapley, stratified_svarm_plus_run, svarm_run, Game, SizeLaw};

const BENCH: &str = env!("CARGO_BIN_EXE_bench");

fn serve_command(game: &str) -> String {
    format!("'{BENCH}' serve --game {game}")
}

#[test]
fn stdio_bridge_reproduces_in_process_runs() {
    let remote = BridgeGame::spawn(&serve_command("shoe:n=8")).unwrap();
    let local = ShoeGame::new(8).unwrap();
    assert_eq!(remote.n(), 8);
    assert_eq!(svarm_run(&remote, 300, 7).unwrap(), svarm_run(&local, 300, 7).unwrap());
    assert_eq!(
        stratified_svarm_plus_run(&remote, 300, 7, SizeLaw::Tailored).unwrap(),
        stratified_svarm_plus_run(&local, 300, 7, SizeLaw::Tailored).unwrap()
    );
}

#[test]
fn served_table_matches_loaded_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("soug.txt");
    let mut rng = svarm::seeded_rng(4);
    let soug = svarm::games::SougGame::generate(&mut rng, 9, 30).unwrap();
    let table = TableGame::from_game(&soug).unwrap();
    svarm::games::save_table_game(&table, &path).unwrap();
    let remote = BridgeGame::spawn(&serve_command(&format!("table:{}", path.display()))).unwrap();
    for bits in 0..1u128 << 9 {
        let c = svarm::Coalition::from_bits(9, bits).unwrap();
        assert_eq!(remote.value(c).unwrap().to_bits(), table.value(c).unwrap().to_bits());
    }
    assert_eq!(exact_shapley(&remote).unwrap(), exact_shapley(&table).unwrap());
}

#[test]
fn cli_runs_against_a_bridged_game() {
    let dir = tempfile::tempdir().unwrap();
    let game = format!("bridge:cmd=\"{}\"", serve_command("shoe:n=6"));
    let out = Command::new(BENCH)
        .args(["--game", &game, "--algos", "svarm,s-svarm-plus", "--budgets", "10,40", "--reps", "3"])
        .args(["--threads", "2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("skipping svarm at T=10"));
    let runs = fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 2 * 3);
    assert!(dir.path().join("aggregate.csv").exists());
    assert!(dir.path().join("timings.csv").exists());
}

#[test]
fn cli_rejects_bad_input() {
    for args in [
        vec!["--game", "chess:n=3", "--budgets", "10"],
        vec!["--game", "shoe:n=5", "--budgets", "10"],
        vec!["--game", "shoe:n=6", "--budgets", "10", "--algos", "kernelshap"],
        vec!["--game", "shoe:n=6"],
    ] {
        let out = Command::new(BENCH).args(&args).arg("--out").arg(std::env::temp_dir()).output().unwrap();
        assert!(!out.status.success(), "{args:?}");
    }
}
