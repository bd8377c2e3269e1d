use pmt_core::agents::run_program;
use pmt_core::record::Category;
use pmt_core::sweep::{run_sweep, SweepSpec};
use pmt_core::Content;

/// Every sweep cell equals the mean recomputed from that cell's individual
/// session records.
#[test]
fn cells_match_recomputation_from_records() {
    let content = Content::defaults().unwrap();
    let spec: SweepSpec = "retention:p=0.6..1.0:step0.2".parse().unwrap();
    let seeds = 3;
    let cells = run_sweep(&content, &spec, seeds).unwrap();
    assert_eq!(cells.len(), 3);
    for (cell, kind) in cells.iter().zip(spec.cells().unwrap()) {
        let mut records = Vec::new();
        for seed in 0..seeds {
            records.extend(run_program(&content, kind, seed).unwrap());
        }
        assert_eq!(cell.sessions, records.len());
        for c in Category::ALL {
            let fractions: Vec<f64> = records
                .iter()
                .filter_map(|r| {
                    let rate = r.rates?.get(c)?;
                    Some(f64::from(rate.achieved) / f64::from(rate.total))
                })
                .collect();
            let mean = fractions.iter().sum::<f64>() / fractions.len() as f64;
            assert!((cell.means[&c] - mean).abs() < 1e-12, "{} {c:?}", cell.policy);
        }
    }
    assert_eq!(cells[2].means[&Category::Total], 1.0);
}
