//! Regenerates the synthetic fixtures in `data/`.
//!
//!     cargo run -p price-disclosure --example gen_fixtures -- crates/core/data
//!
//! Listing counts per source follow the market survey; price levels are drawn
//! from a three-component normal mixture above a fixed minimum. The minimum is
//! planted once in PriceGrabber and once in the product's largest source.

use std::path::PathBuf;

use price_disclosure::data::{Cents, PriceEntry, PriceList, Product, SOURCES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_140_601;

/// (weight, mean offset, sd) as fractions of the minimum price.
const MIXTURE: [(f64, f64, f64); 3] = [(0.5, 0.06, 0.02), (0.3, 0.15, 0.04), (0.2, 0.30, 0.08)];

fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn draw_price(rng: &mut impl Rng, min: f64) -> Cents {
    loop {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let &(_, mu, sd) = MIXTURE
            .iter()
            .find(|(w, _, _)| {
                acc += w;
                u < acc
            })
            .unwrap_or(&MIXTURE[2]);
        let price = min * (1.0 + mu + sd * standard_normal(rng));
        let cents = Cents::from_units(price);
        if cents.0 > Cents::from_units(min).0 + 50 {
            return cents;
        }
    }
}

fn main() {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "data".into()).into();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for product in Product::ALL {
        let manifest = product.manifest();
        let min = product.stated_minimum();
        let min_units = min.0 as f64 / 100.0;
        let largest = SOURCES
            .iter()
            .max_by_key(|s| (manifest.per_source_counts[**s], std::cmp::Reverse(**s)))
            .copied()
            .unwrap();
        let mut entries = Vec::new();
        for source in SOURCES {
            let count = manifest.per_source_counts[source];
            let mut prices: Vec<Cents> = (0..count).map(|_| draw_price(&mut rng, min_units)).collect();
            if source == "PriceGrabber" || source == largest {
                let slot = rng.random_range(0..count);
                prices[slot] = min;
            }
            entries.extend(prices.into_iter().map(|price| PriceEntry {
                source: source.to_string(),
                price,
            }));
        }
        let list = PriceList::new(product.name(), entries).unwrap();
        manifest.verify(&list).unwrap();
        let path = out.join(format!("{}.csv", product.name()));
        std::fs::write(&path, list.to_csv_string()).unwrap();
        println!("{} -> {} rows", path.display(), list.len());
    }
}
