//! The full experiment loop at a small scale: generate clustered corpora,
//! run every technique over several rounds, and print the three result
//! tables (VDA vs random, mean APFD, mean AMET).
//!
//! ```bash
//! cargo run --release -p divprio --example compare_techniques
//! ```

use divprio::evaluation::{
    amet_summary_csv, apfd_summary_csv, run_experiment, vda_table_csv, ExperimentConfig,
    Grouping,
};
use divprio::metrics::Lz4Compressor;
use divprio::prioritizer::{Technique, TechniqueParams};
use divprio::synth::{experiment_inputs, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // 8 rounds of 60 tests in 6 fault clusters; small enough to run in
    // seconds, structured enough for diversity to matter.
    let corpus = SynthConfig {
        tests: 60,
        clusters: 6,
        tokens_per_doc: 120,
        ..SynthConfig::default()
    };
    let inputs = experiment_inputs(&corpus, 8);
    let config = ExperimentConfig {
        techniques: Technique::ALL.to_vec(),
        seeds: vec![0],
        params: TechniqueParams::default(),
        bootstrap_replicates: 1000,
        bootstrap_seed: 0,
        significance_level: 0.05,
        grouping: Grouping::Pooled,
    };
    let report = run_experiment(&inputs, &config, &Lz4Compressor)?;

    println!("VDA vs random, per suite:\n{}", vda_table_csv(&report));
    println!("mean APFD with 95% CI:\n{}", apfd_summary_csv(&report));
    println!("mean AMET with 95% CI:\n{}", amet_summary_csv(&report));

    println!("pairwise comparisons against the random baseline:");
    for c in report
        .comparisons
        .iter()
        .filter(|c| c.technique_b == "RND" || c.technique_a == "RND")
    {
        println!(
            "  {} vs {}: VDA {:.3} ({}), p {:.4}{}",
            c.technique_a,
            c.technique_b,
            c.vda,
            c.magnitude,
            c.p_value,
            if c.significant { " *" } else { "" }
        );
    }
    Ok(())
}
