//! Acceptance criteria, one pass/fail line each.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::Check;

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("canary payoff table", common::canary_table),
        ("sweep arrows", common::sweeps),
        ("delay fine", common::delay_fine),
        ("derivation algebra", || common::derivation(500, 4)),
        ("lifting round trips", || common::lifting(128, 256, 5)),
        ("EUF-LCMA demonstrations", || common::euf_lcma(100)),
        ("protocol scenario suite", common::scenario_suite),
        ("epoch mechanics", || common::epochs(common::get("epochs"))),
        ("ledger conservation", common::conservation),
        ("determinism", common::determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.2}s): {detail}", i + 1),
            Err(e) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.2}s): {e}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
