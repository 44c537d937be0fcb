#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn write_sample(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = ppl_core::synth::storm_peak_sample(&mut rng, n);
    let path = dir.join("peaks.csv");
    s.write_csv(std::fs::File::create(&path).unwrap(), "hs").unwrap();
    path
}

/// A small directional configuration that runs the whole pipeline in seconds.
pub fn small_config(dir: &Path) -> PathBuf {
    write_sample(dir, 400, 11);
    let text = r#"
output = "run"

[data]
path = "peaks.csv"
covariates = ["direction"]
response = "hs"

[density]
w = [20.0]
resolution = [90]

[threshold]
zeta = 0.5
C = 60
w = [20.0]
resolution = [90]

[local]
C = 60
w = [20.0]
resolution = [90]

[nodes]
kind = "regular"
marginals = [[0.0, 90.0, 180.0, 270.0]]

[model]
max_evals = 2000

[cv]
G = 3
R = 2
S = 4
exponents = [0.0, 4.0]

[bootstrap]
B = 4

[predict]
probabilities = [0.9, 0.99]
simulation_multiplier = 5
band_multiplier = 2
strata = ["all", "octants"]
"#;
    let path = dir.join("analysis.toml");
    std::fs::write(&path, text).unwrap();
    path
}

/// Two-dimensional configuration with six irregular nodes.
pub fn studio_config(dir: &Path, n: usize) -> PathBuf {
    write_sample(dir, n, 5);
    let text = r#"
output = "run"

[data]
path = "peaks.csv"
covariates = ["direction", "season"]
response = "hs"

[density]
w = [25.0, 35.0]
resolution = [24, 24]

[threshold]
zeta = 0.5
C = 60
w = [25.0, 35.0]
resolution = [24, 24]

[local]
C = 60
w = [25.0, 35.0]
resolution = [24, 24]

[nodes]
kind = "irregular"
coordinates = [[30.0, 40.0], [150.0, 60.0], [270.0, 30.0], [90.0, 200.0], [210.0, 250.0], [330.0, 190.0]]
"#;
    let path = dir.join("studio.toml");
    std::fs::write(&path, text).unwrap();
    path
}
