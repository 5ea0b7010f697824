//! Compute the three pairwise distances by hand, then build a full
//! distance matrix, export it as CSV, and round-trip the binary cache.
//!
//! ```bash
//! cargo run -p divprio --example distance_metrics
//! ```

use divprio::corpus::{to_numeric_vector, to_shingle_set};
use divprio::metrics::{
    build_distance_matrix, cached_distance_matrix, jaccard_distance, manhattan, ncd,
    Lz4Compressor, Metric,
};
use divprio::{TestCase, TestSuite};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = TestCase::new("a", &b"assert_eq!(add(2, 2), 4);"[..]);
    let b = TestCase::new("b", &b"assert_eq!(add(2, 3), 5);"[..]);
    let c = TestCase::new("c", &b"let img = render(scene);"[..]);

    println!("pairwise distances:");
    for (x, y) in [(&a, &b), (&a, &c), (&b, &c)] {
        let mnh = manhattan(&to_numeric_vector(x), &to_numeric_vector(y));
        let jac = jaccard_distance(&to_shingle_set(x, 5), &to_shingle_set(y, 5))?;
        let ncd_v = ncd(x.source(), y.source(), &Lz4Compressor)?;
        println!(
            "  {} vs {}: manhattan {mnh:>5}, jaccard {jac:.3}, ncd {ncd_v:.3}",
            x.id(),
            y.id()
        );
    }

    let suite = TestSuite::new(Some("trio".into()), vec![a, b, c])?;
    let matrix = build_distance_matrix(&suite, Metric::Jaccard { k: 5 })?;
    println!("\njaccard matrix as CSV:\n{}", matrix.to_csv_string());

    // The binary cache is keyed by metric, parameters, and suite content;
    // the second call loads instead of recomputing.
    let dir = tempfile::tempdir()?;
    let cache = dir.path().join("jaccard.dpdmat");
    let (_, from_cache) = cached_distance_matrix(&suite, Metric::Jaccard { k: 5 }, &cache)?;
    assert!(!from_cache);
    let (reloaded, from_cache) =
        cached_distance_matrix(&suite, Metric::Jaccard { k: 5 }, &cache)?;
    assert!(from_cache);
    println!(
        "cache hit: {} ({} ids, metric {})",
        from_cache,
        reloaded.len(),
        reloaded.metric()
    );
    Ok(())
}
