//! Generate a synthetic clustered corpus on disk and load it back through
//! the manifest and fault-matrix file formats.
//!
//! ```bash
//! cargo run -p divprio --example generate_corpus
//! ```

use divprio::corpus::{load_fault_matrix, load_suite, save_fault_matrix, save_suite};
use divprio::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (suite, faults) = generate(&SynthConfig {
        tests: 12,
        clusters: 3,
        tokens_per_doc: 24,
        ..SynthConfig::default()
    });

    let dir = tempfile::tempdir()?;
    let manifest = save_suite(&suite, dir.path())?;
    let faults_csv = dir.path().join("faults.csv");
    save_fault_matrix(&faults, &faults_csv)?;
    println!("manifest: {}", manifest.display());
    println!("faults:   {}", faults_csv.display());

    println!("\nmanifest contents:");
    print!("{}", std::fs::read_to_string(&manifest)?);
    println!("\nfault matrix contents:");
    print!("{}", std::fs::read_to_string(&faults_csv)?);

    // Round trip: ids, order, and bytes survive the disk format.
    let reloaded = load_suite(&manifest)?;
    let refaults = load_fault_matrix(&faults_csv, &reloaded)?;
    assert_eq!(reloaded.len(), suite.len());
    assert_eq!(refaults.m(), faults.m());
    for (a, b) in suite.cases().iter().zip(reloaded.cases()) {
        assert_eq!(a.id(), b.id());
        assert_eq!(a.source(), b.source());
    }
    println!(
        "\nround trip ok: {} tests, {} faults; first source starts {:?}",
        reloaded.len(),
        refaults.m(),
        String::from_utf8_lossy(&suite.cases()[0].source()[..14])
    );
    Ok(())
}
