// scratch probe, not part of the deliverable
use dualgraph_core::linial::{chromatic_profile, ChromaticOutcome, SearchLimits};
use std::time::Instant;

fn main() {
    let start = Instant::now();
    let entries = chromatic_profile(1, 5, 10, &SearchLimits::default()).unwrap();
    for e in &entries {
        match &e.outcome {
            ChromaticOutcome::Exact { chi, .. } => println!(
                "m={}: v={} e={} chi={} (lower bound {})",
                e.m, e.vertices, e.edges, chi, e.lower_bound
            ),
            other => println!("m={}: {:?}", e.m, other),
        }
    }
    println!("total {:?}", start.elapsed());
}
