use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::math::{norm_cdf, norm_ppf};

/// Lower truncation points above this use exponential rejection instead of
/// the inverse CDF.
const TAIL_CUTOFF: f64 = 4.0;

/// Draw `Z ~ Normal(0, 1)` conditioned on `Z > a`.
pub fn sample_truncated_below<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    if a > TAIL_CUTOFF {
        // Robert (1995): shifted exponential proposal with the optimal rate.
        let rate = 0.5 * (a + libm::sqrt(a * a + 4.0));
        loop {
            let e: f64 = Exp1.sample(rng);
            let z = a + e / rate;
            let u = 1.0 - rng.random::<f64>();
            if libm::log(u) <= -0.5 * (z - rate) * (z - rate) {
                return z;
            }
        }
    }
    // Inverse CDF on the mirrored lower tail, where Φ keeps relative precision.
    let u = 1.0 - rng.random::<f64>();
    -norm_ppf(u * norm_cdf(-a))
}

/// Latent utility for one person-period row: `Normal(f, 1)` truncated to
/// `(0, ∞)` when the event happened and to `(-∞, 0)` otherwise. The result
/// always has the strict sign of the outcome.
pub fn sample_latent<R: Rng + ?Sized>(event: bool, f: f64, rng: &mut R) -> f64 {
    loop {
        let v = if event {
            f + sample_truncated_below(-f, rng)
        } else {
            f - sample_truncated_below(f, rng)
        };
        if (event && v > 0.0) || (!event && v < 0.0) {
            return v;
        }
    }
}
