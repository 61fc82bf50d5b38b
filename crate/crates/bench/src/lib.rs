//! Shared workloads for the criterion benches.

use logiciot::randgen::{self, ProgramShape};
use logiciot::{format_program, parse_program, Program};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Sensor pipeline with `rules` threshold rules over one reading relation.
pub fn threshold_program(rules: usize) -> Program {
    let mut src = String::from("RELATION R (MAC, RSSI)\nRELATION ALARMS (MAC, RSSI)\n");
    for i in 0..rules {
        src.push_str(&format!(
            "RULE X{i} R.RSSI < {} AND R.RSSI[-1] >= -100\n{{\n    ALARMS(R.MAC, R.RSSI)\n}}\n",
            -35 - 5 * (i % 10) as i64
        ));
    }
    parse_program(&src).expect("threshold program parses")
}

/// Canonical source text of a seeded random program.
pub fn random_source(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    format_program(&randgen::program(&mut rng, &ProgramShape::default()))
}

/// RSSI readings drawn uniformly from -90..=-30.
pub fn readings(n: usize, seed: u64) -> Vec<f64> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-90i64..=-30) as f64).collect()
}
