//! Runs the twelve acceptance criteria at full budget and prints one line
//! per criterion. Exits non-zero if any fails.

use specden::verify::{run_criterion, Budget, CRITERIA};

fn main() {
    let seed = 20_240_601;
    let mut failed = 0;
    for &(id, ..) in CRITERIA.iter() {
        let r = run_criterion(id, Budget::Full, seed);
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {status} [{:6.2} s] {}: {}", r.id, r.seconds, r.name, r.detail);
        failed += (!r.passed) as u32;
    }
    println!("{} of {} criteria passed", CRITERIA.len() as u32 - failed, CRITERIA.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
