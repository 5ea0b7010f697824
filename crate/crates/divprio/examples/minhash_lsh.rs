//! MinHash sketching end to end: estimated vs exact Jaccard, cumulative
//! signature merging, and banded index queries.
//!
//! ```bash
//! cargo run -p divprio --example minhash_lsh
//! ```

use divprio::corpus::to_shingle_set;
use divprio::lsh::{
    estimate_jaccard, merge_signatures, minhash_signature, LshConfig, LshIndex, MinHashSignature,
};
use divprio::TestCase;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let docs = [
        ("rot_matrix", "let r = rotation(theta); assert_close(r * v, expected);"),
        ("rot_matrix_inv", "let r = rotation(theta); assert_close(r.inverse() * r * v, v);"),
        ("http_get", "let resp = client.get(url).send(); assert_eq!(resp.status(), 200);"),
    ];

    // Estimation accuracy grows with the signature length; P=512 estimates
    // within a few hundredths.
    let accurate = LshConfig::new(512, 512, 1, 7)?;
    println!("estimated vs exact Jaccard similarity (P = 512):");
    for i in 0..docs.len() {
        for j in i + 1..docs.len() {
            let a = to_shingle_set(&TestCase::new(docs[i].0, docs[i].1.as_bytes()), 5);
            let b = to_shingle_set(&TestCase::new(docs[j].0, docs[j].1.as_bytes()), 5);
            let inter = a.intersection_len(&b);
            let exact = inter as f64 / (a.len() + b.len() - inter) as f64;
            let est = estimate_jaccard(
                &minhash_signature(&a, &accurate),
                &minhash_signature(&b, &accurate),
            )?;
            println!(
                "  {:<14} vs {:<14} exact {exact:.3} estimated {est:.3}",
                docs[i].0, docs[j].0
            );
        }
    }

    // The production configuration: 10 permutations in 10 bands of 1 row,
    // a ~0.1 similarity threshold, so queries return almost everything and
    // the leftover "distant set" is what prioritization feeds on.
    let config = LshConfig::default();
    println!(
        "\nbanded index at P={}, b={}, r={} (similarity threshold {:.2}):",
        config.permutations(),
        config.bands(),
        config.rows(),
        config.similarity_threshold()
    );
    let items: Vec<(String, MinHashSignature)> = docs
        .iter()
        .map(|(id, text)| {
            let set = to_shingle_set(&TestCase::new(*id, text.as_bytes()), 5);
            (id.to_string(), minhash_signature(&set, &config))
        })
        .collect();
    let index = LshIndex::build(items.clone(), config)?;

    let query = &items[0].1; // rot_matrix's own signature
    let candidates = index.query(query)?;
    let names: Vec<&str> = candidates.iter().map(|&i| index.ids()[i].as_str()).collect();
    println!("  query with rot_matrix's signature -> candidates {names:?}");

    // Merging signatures tracks the union of the underlying sets, which is
    // how the prioritizer maintains one sketch for everything chosen so far.
    let merged = merge_signatures(&items[0].1, &items[1].1)?;
    println!(
        "  estimated similarity of http_get to {{rot_matrix + rot_matrix_inv}}: {:.3}",
        estimate_jaccard(&items[2].1, &merged)?
    );
    Ok(())
}
