use odflow::ingestion::largest_remainder_real;
use odflow::Marginals;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

/// Two independent uniform points of the `(n-1)`-simplex (normalised
/// exponential draws), scaled to `total_mass` and rounded by largest
/// remainder so both sum to it exactly.
pub fn sample_simplex_marginals(n: usize, total_mass: u64, seed: u64) -> Marginals {
    assert!(n >= 1, "need at least one zone");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = simplex_point(&mut rng, n, total_mass);
    let eta = simplex_point(&mut rng, n, total_mass);
    Marginals::new(gamma, eta).expect("both sides sum to total_mass")
}

fn simplex_point(rng: &mut impl Rng, n: usize, total_mass: u64) -> Vec<u64> {
    let draws: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    // Exp1 is positive with probability one; the fallback only guards a
    // pathological all-zero draw.
    largest_remainder_real(&draws, total_mass).unwrap_or_else(|| {
        let mut v = vec![0; n];
        v[0] = total_mass;
        v
    })
}
