//! Order a small in-memory suite with every technique and print the
//! resulting permutations side by side.
//!
//! ```bash
//! cargo run -p divprio --example prioritize_suite
//! ```

use divprio::metrics::Lz4Compressor;
use divprio::prioritizer::{run_technique, Technique, TechniqueParams};
use divprio::{TestCase, TestSuite};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Three near-duplicate login tests, one checkout test, one parser test:
    // diversity-first orders should interleave the topics.
    let cases = vec![
        TestCase::new("login_ok", SOURCE_LOGIN_OK),
        TestCase::new("login_bad_password", SOURCE_LOGIN_BAD_PASSWORD),
        TestCase::new("login_locked_account", SOURCE_LOGIN_LOCKED),
        TestCase::new("checkout_total", SOURCE_CHECKOUT),
        TestCase::new("parse_config", SOURCE_PARSER),
    ];
    let suite = TestSuite::new(Some("demo".into()), cases)?;
    let params = TechniqueParams::default();

    println!("{:>8}  order", "technique");
    for technique in Technique::ALL {
        let order = run_technique(&suite, technique, &params, &Lz4Compressor, 7)?;
        println!("{:>8}  {}", technique.acronym(), order.order.join(" -> "));
    }
    println!();
    println!("Scores for NCD (the distance that won each step):");
    let order = run_technique(&suite, Technique::Ncd, &params, &Lz4Compressor, 7)?;
    for (id, score) in order.order.iter().zip(&order.scores) {
        println!("  {id:<22} {score:.3}");
    }
    Ok(())
}

const SOURCE_LOGIN_OK: &[u8] = b"
fn login_ok() {
    let session = Server::start();
    let user = session.register(\"ida\", \"hunter2\");
    assert!(session.login(\"ida\", \"hunter2\").is_ok());
    assert_eq!(user.failed_attempts(), 0);
}
";

const SOURCE_LOGIN_BAD_PASSWORD: &[u8] = b"
fn login_bad_password() {
    let session = Server::start();
    let user = session.register(\"ida\", \"hunter2\");
    assert!(session.login(\"ida\", \"wrong\").is_err());
    assert_eq!(user.failed_attempts(), 1);
}
";

const SOURCE_LOGIN_LOCKED: &[u8] = b"
fn login_locked_account() {
    let session = Server::start();
    let user = session.register(\"ida\", \"hunter2\");
    user.lock();
    assert!(session.login(\"ida\", \"hunter2\").is_err());
}
";

const SOURCE_CHECKOUT: &[u8] = b"
fn checkout_total() {
    let mut cart = Cart::new();
    cart.add(Item::book(), 2);
    cart.add(Item::pen(), 10);
    assert_eq!(cart.total_cents(), 2 * 1499 + 10 * 199);
}
";

const SOURCE_PARSER: &[u8] = b"
fn parse_config() {
    let text = \"retries = 3\\ntimeout_ms = 250\\n\";
    let config = Config::parse(text).unwrap();
    assert_eq!(config.retries, 3);
    assert_eq!(config.timeout_ms, 250);
}
";
