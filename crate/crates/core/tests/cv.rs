use ppl_core::empirical::ConstantThreshold;
use ppl_core::geometry::{NodeSet, Triangulation};
use ppl_core::gp::{Case, FitOptions};
use ppl_core::par;
use ppl_core::synth;
use ppl_core::tuning::{cross_validate, jackknife_uncertainty, CVConfig, CVResult};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn four_nodes() -> Triangulation {
    let ns = NodeSet::from_vectors(&[vec![0.0], vec![90.0], vec![180.0], vec![270.0]]).unwrap();
    Triangulation::build_irregular_grid(&ns).unwrap()
}

fn config(seed: u64, replicates: usize) -> CVConfig {
    CVConfig {
        folds: 3,
        replicates,
        grid_size: 5,
        exponent_range: [-1.0, 5.0],
        case: Case::A,
        seed,
        fit: FitOptions { max_evals: 3000, ..FitOptions::default() },
    }
}

fn two_regime_cv(cfg: &CVConfig) -> CVResult {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let s = synth::two_regime_sample(&mut rng, 300);
    cross_validate(&s, &four_nodes(), &ConstantThreshold(0.0), cfg).unwrap()
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn deterministic_and_thread_count_independent() {
    let cfg = config(4, 3);
    let a = two_regime_cv(&cfg);
    let b = two_regime_cv(&cfg);
    assert_eq!(a, b);
    let one = par::with_threads(1, || two_regime_cv(&cfg));
    let three = par::with_threads(3, || two_regime_cv(&cfg));
    assert_eq!(bits(&one.mean), bits(&a.mean));
    assert_eq!(bits(&three.mean), bits(&a.mean));
    assert_eq!(one.per_replicate, three.per_replicate);
    assert_eq!((one.optimal, one.selected), (a.optimal, a.selected));
}

#[test]
fn stored_matrix_reproduces_summaries() {
    let cv = two_regime_cv(&config(9, 4));
    let r = cv.per_replicate.len();
    for l in 0..cv.grid.len() {
        let col: Vec<f64> = cv.per_replicate.iter().map(|row| row[l]).collect();
        let mean = col.iter().sum::<f64>() / r as f64;
        assert_eq!(mean.to_bits(), cv.mean[l].to_bits());
        assert_eq!(jackknife_uncertainty(&col).to_bits(), cv.uncertainty[l].to_bits());
        assert_eq!(cv.infinite_count[l], col.iter().filter(|v| v.is_infinite()).count());
    }
    let (o, s) = (cv.optimal, cv.selected);
    assert!(cv.mean[s] <= cv.mean[o] + cv.uncertainty[o]);
    assert!(cv.mean.iter().all(|&m| m >= cv.mean[o]));
    for (a, b) in cv.grid[s].components().iter().zip(cv.grid[o].components()) {
        assert!(*a >= b);
    }
}

#[test]
fn replicates_depend_only_on_their_own_seed() {
    let full = two_regime_cv(&config(30, 3));
    let tail = two_regime_cv(&config(31, 2));
    assert_eq!(full.per_replicate[1..], tail.per_replicate[..]);

    let mut rows = full.per_replicate.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    rows.shuffle(&mut rng);
    rows.reverse();
    for l in 0..full.grid.len() {
        let col: Vec<f64> = rows.iter().map(|row| row[l]).collect();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        if full.mean[l].is_finite() {
            assert!((mean - full.mean[l]).abs() <= 1e-12 * full.mean[l].abs().max(1.0));
            assert!((jackknife_uncertainty(&col) - full.uncertainty[l]).abs() <= 1e-9);
        } else {
            assert!(mean.is_infinite());
        }
    }
}

#[test]
fn stationary_data_gives_a_flat_profile_once_the_penalty_binds() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let s = synth::stationary_sample(&mut rng, 1, 600, 1.0, -0.2);
    let cfg = CVConfig { folds: 5, replicates: 5, grid_size: 7, ..config(1, 5) };
    let cv = cross_validate(&s, &four_nodes(), &ConstantThreshold(0.0), &cfg).unwrap();
    // slopes of order 1e-3 per degree only feel the penalty from about 10^3
    let stiff: Vec<usize> = (0..cv.grid.len()).filter(|&l| cv.exponents[l][0] >= 3.0).collect();
    assert_eq!(stiff.len(), 3);
    let means: Vec<f64> = stiff.iter().map(|&l| cv.mean[l]).collect();
    let spread = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - means.iter().cloned().fold(f64::INFINITY, f64::min);
    let u = stiff.iter().map(|&l| cv.uncertainty[l]).fold(0.0, f64::max);
    assert!(spread.is_finite() && spread <= u, "spread {spread} vs U {u}");
}
