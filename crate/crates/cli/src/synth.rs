//! Deterministic synthetic panel fixtures: lognormal monthly price
//! relatives around a slow sinusoidal drift, with Dirichlet-style
//! expenditure shares that wander slowly. The same seed always produces
//! the same bytes.

use inflatrim::month::Month;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::output::fmt_sig;

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub categories: usize,
    pub months: usize,
    pub seed: u64,
    /// Cross-category standard deviation of monthly log relatives.
    pub dispersion: f64,
    pub start: Month,
}

fn standard_normal(rng: &mut ChaCha12Rng) -> f64 {
    // Box-Muller on open intervals
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn gamma2(rng: &mut ChaCha12Rng) -> f64 {
    // shape-2 gamma as a sum of two exponentials
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = 1.0 - rng.gen::<f64>();
    -(u1.ln() + u2.ln())
}

/// Render the panel CSV for `spec`.
pub fn gen_synthetic(spec: &SynthSpec) -> String {
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let n = spec.categories;

    // Dirichlet-style shares from normalized gamma draws
    let raw: Vec<f64> = (0..n).map(|_| gamma2(&mut rng)).collect();
    let total_raw: f64 = raw.iter().sum();
    let mut log_share: Vec<f64> = raw.iter().map(|r| (r / total_raw).ln()).collect();

    let mut prices = vec![100.0_f64; n];
    let mut out = String::from("date,category_id,price_index,nominal_expenditure\n");
    for t in 0..spec.months {
        let date = spec.start.offset(t as i32);
        // slow sinusoidal drift in the common monthly log relative
        let mu = 0.0020 + 0.0015 * (2.0 * std::f64::consts::PI * t as f64 / 120.0).sin();
        if t > 0 {
            for p in prices.iter_mut() {
                let z = standard_normal(&mut rng);
                *p *= (mu + spec.dispersion * z).exp();
            }
            for ls in log_share.iter_mut() {
                *ls += 0.02 * standard_normal(&mut rng);
            }
        }
        let share_total: f64 = log_share.iter().map(|ls| ls.exp()).sum();
        let spending = 1000.0 * 1.003_f64.powi(t as i32);
        for c in 0..n {
            let expenditure = spending * log_share[c].exp() / share_total;
            out.push_str(&format!(
                "{date},cat{c:04},{},{}\n",
                fmt_sig(prices[c]),
                fmt_sig(expenditure)
            ));
        }
    }
    out
}

/// Render a deterministic tag file covering the food, energy, and
/// owner-occupied-housing vocabulary.
pub fn gen_tags(categories: usize) -> String {
    let mut out = String::from("category_id,tag\n");
    for c in 0..categories {
        if c % 5 == 0 {
            out.push_str(&format!("cat{c:04},food\n"));
        }
        if c % 5 == 2 {
            out.push_str(&format!("cat{c:04},energy\n"));
        }
        if c == 1 {
            out.push_str(&format!("cat{c:04},owner_occ_housing\n"));
        }
    }
    out
}
