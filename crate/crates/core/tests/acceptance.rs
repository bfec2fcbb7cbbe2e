use hardy_blowup::reproduce::{run_criterion, CriterionReport, DEFAULT_SEED};

#[test]
fn acceptance_criteria() {
    let reports: Vec<CriterionReport> = (1..=10).map(|id| run_criterion(id, DEFAULT_SEED).unwrap()).collect();
    for r in &reports {
        println!("{}", r.summary_line());
        if !r.passed {
            println!("  measured: {}", serde_json::to_string(&r.measured).unwrap());
        }
    }
    let failed: Vec<u8> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
