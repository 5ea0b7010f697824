//! Score orderings against a fault matrix with APFD and see why earlier
//! detection scores higher.
//!
//! ```bash
//! cargo run -p divprio --example evaluate_apfd
//! ```

use std::collections::HashSet;

use divprio::corpus::FaultMatrix;
use divprio::evaluation::apfd;
use divprio::prioritizer::{prioritize_random, PrioritizedOrder};
use divprio::{TestCase, TestSuite};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ids = ["t0", "t1", "t2", "t3", "t4", "t5"];
    let suite = TestSuite::new(
        Some("demo".into()),
        ids.iter().map(|id| TestCase::new(*id, &b""[..])).collect(),
    )?;
    let faults = FaultMatrix::new(
        vec![
            ("overflow".into(), set(&["t0", "t1"])),
            ("off_by_one".into(), set(&["t4"])),
            ("race".into(), set(&["t3", "t5"])),
        ],
        &suite,
    )?;

    let good = fixed_order(&["t4", "t3", "t0", "t1", "t2", "t5"]);
    let bad = fixed_order(&["t2", "t1", "t0", "t5", "t3", "t4"]);
    for (name, order) in [("fault-first", &good), ("fault-last", &bad)] {
        let result = apfd(order, &faults)?;
        println!("{name}: APFD {:.2}", result.apfd);
        for (fault, position) in &result.tf {
            println!("  {fault:<11} first detected at position {position}");
        }
    }

    // Random baseline for scale.
    let random = prioritize_random(&suite, 3)?;
    println!("random (seed 3): APFD {:.2}", apfd(&random, &faults)?.apfd);
    Ok(())
}

fn set(ids: &[&str]) -> HashSet<String> {
    ids.iter().map(|s| s.to_string()).collect()
}

fn fixed_order(ids: &[&str]) -> PrioritizedOrder {
    PrioritizedOrder {
        technique: "fixed".into(),
        params: Default::default(),
        seed: None,
        order: ids.iter().map(|s| s.to_string()).collect(),
        scores: vec![0.0; ids.len()],
        prep_seconds: 0.0,
        algo_seconds: 0.0,
    }
}
