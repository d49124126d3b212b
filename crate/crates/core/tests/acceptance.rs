//! Runs the nine acceptance criteria and prints one line per criterion.
//!
//! Criteria listed in `KNOWN_SHORTFALLS` are reported as `FAIL` when they
//! miss their tolerance but do not fail this target; any other failure does.

use holodof::harness::acceptance::{run_all, KNOWN_SHORTFALLS};

fn main() {
    if std::env::args().any(|a| a == "--list") {
        for id in 1..=9 {
            println!("criterion_{id}: test");
        }
        return;
    }
    let results = run_all(|r| println!("{}", r.line()));
    let passed = results.iter().filter(|r| r.passed).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    let unexpected: Vec<u8> = results.iter().filter(|r| !r.expected()).map(|r| r.id).collect();
    for r in results.iter().filter(|r| r.passed && KNOWN_SHORTFALLS.contains(&r.id)) {
        println!("note: criterion {} now passes; update KNOWN_SHORTFALLS", r.id);
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
