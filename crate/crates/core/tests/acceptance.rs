//! Acceptance suite at full size. Run with `--nocapture` to see the report:
//!
//! ```text
//! cargo test -p rdm-core --test acceptance -- --nocapture
//! ```

use rdm_core::verify::{run_all, Scale};

#[test]
fn acceptance_suite() {
    let outcomes = run_all(Scale::Full);
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| o.blocking && !o.passed)
        .map(|o| format!("{} {}", o.id, o.name))
        .collect();
    assert!(failed.is_empty(), "failed checks: {}", failed.join(", "));
}
