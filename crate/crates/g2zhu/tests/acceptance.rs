use std::process::ExitCode;
use std::time::Instant;

use g2zhu::verify::{run_criterion, Criterion, Grid, VerifyConfig};

fn main() -> ExitCode {
    let grid = Grid::standard();
    let cfg = VerifyConfig::default();
    let mut failed = 0;
    for c in Criterion::ALL {
        let start = Instant::now();
        let out = run_criterion(c, &grid, &cfg);
        let worst = out
            .reports
            .iter()
            .map(|r| format!("{}={:.1e}/{:.0e}", r.name, r.max_relative(), r.tolerance))
            .collect::<Vec<_>>()
            .join(" ");
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {:<15} {verdict} [{worst}] {:.1}s", c.number(), c.as_str(), start.elapsed().as_secs_f64());
        for r in out.reports.iter().filter(|r| !r.pass) {
            for e in &r.errors {
                println!("    {}: error {e}", r.name);
            }
            for e in r.entries.iter().filter(|e| !e.pass) {
                println!("    {}: {} relative {:.3e}", r.name, e.label, e.relative);
            }
        }
        if !out.pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", Criterion::ALL.len() - failed, Criterion::ALL.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
