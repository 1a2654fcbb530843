use smectic_core::checks::{run_suite, Suite};

fn assert_suite(suite: Suite) {
    let out = run_suite(suite);
    for c in &out {
        println!("{} {}/{}: {}", if c.passed { "ok  " } else { "FAIL" }, c.suite, c.name, c.detail);
    }
    let failed: Vec<_> = out.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    assert!(failed.is_empty(), "failed checks in {suite}: {failed:?}");
}

#[test]
fn core_suite() {
    assert_suite(Suite::Core);
}

#[test]
fn energy_suite() {
    assert_suite(Suite::Energy);
}

#[test]
fn formulas_suite() {
    assert_suite(Suite::Formulas);
}

#[test]
fn profile_suite() {
    assert_suite(Suite::Profile);
}

#[test]
fn minimize_suite() {
    assert_suite(Suite::Minimize);
}

#[test]
fn diagnostics_suite() {
    assert_suite(Suite::Diagnostics);
}
