use pivot_core::strata::cumulate;
use pivot_core::{ProbabilityVector, RandomSource};

/// A frame of `population` units summing to an integer, every `pi` in
/// `(0, 1)`. With `grid` the masses are multiples of `0.1`, so running
/// sums often land on integers and leave empty or phantom clusters.
pub fn random_frame(rng: &mut RandomSource, population: usize, grid: bool) -> ProbabilityVector {
    loop {
        if grid {
            let mut tenths: Vec<u32> = (0..population).map(|_| 1 + rng.below(9) as u32).collect();
            let excess = tenths.iter().sum::<u32>() % 10;
            let last = tenths[population - 1];
            if excess >= last || last - excess > 9 {
                continue;
            }
            tenths[population - 1] = last - excess;
            if tenths.iter().sum::<u32>() < 10 {
                continue;
            }
            let pi: Vec<f64> = tenths.iter().map(|&t| t as f64 / 10.0).collect();
            return cumulate(&pi).expect("grid frame");
        }
        let size = 1 + rng.below(population - 1);
        let weights: Vec<f64> = (0..population).map(|_| rng.uniform_between(0.05, 1.0)).collect();
        let total: f64 = weights.iter().sum();
        let pi: Vec<f64> = weights.iter().map(|w| w * size as f64 / total).collect();
        if pi.iter().all(|&p| p < 0.999) {
            if let Ok(pv) = cumulate(&pi) {
                return pv;
            }
        }
    }
}

pub const EIGHT: [f64; 8] = [0.2, 0.5, 0.3, 0.4, 0.9, 0.8, 0.5, 0.4];
