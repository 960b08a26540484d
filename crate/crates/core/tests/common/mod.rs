//! Shared random-instance generators for the integration suites.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use isobubble::configuration::{Configuration, Interval, MassSpec};
use isobubble::density::{Density, QuadratureSettings};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

pub fn random_spec(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> MassSpec {
    MassSpec::new((0..n).map(|_| log_uniform(rng, lo, hi)).collect()).unwrap()
}

/// The density set the theorem is exercised over at desk scale.
pub fn theorem_densities() -> Vec<Density> {
    vec![
        Density::power(0.5).unwrap(),
        Density::power(1.0).unwrap(),
        Density::power(2.0).unwrap(),
        Density::power(3.0).unwrap(),
        Density::power_composite(1.0, 2.0).unwrap(),
    ]
}

/// Scattered multi-interval configuration with gaps on both sides; every
/// region id in 1..=n appears, some possibly several times.
pub fn random_scattered(rng: &mut impl Rng, density: Density, n: usize) -> Configuration {
    // A bag of region labels: each region once, plus extras.
    let mut labels: Vec<usize> = (1..=n).collect();
    let extras = rng.gen_range(0..=n);
    for _ in 0..extras {
        labels.push(rng.gen_range(1..=n));
    }
    labels.shuffle(rng);

    // Split the bag between sides, keeping at least one piece per side.
    let cut = rng.gen_range(1..labels.len().max(2)).min(labels.len() - 1);
    let (right_labels, left_labels) = labels.split_at(cut);

    let mut intervals = Vec::new();
    let mut cursor = if rng.gen_bool(0.5) {
        0.0
    } else {
        rng.gen_range(0.05..0.5)
    };
    for &r in right_labels {
        cursor += rng.gen_range(0.0..0.8);
        let w = rng.gen_range(0.05..1.2);
        intervals.push(Interval::new(cursor, cursor + w, r));
        cursor += w;
    }
    let mut cursor = if rng.gen_bool(0.5) {
        0.0
    } else {
        -rng.gen_range(0.05..0.5)
    };
    for &r in left_labels {
        cursor -= rng.gen_range(0.0..0.8);
        let w = rng.gen_range(0.05..1.2);
        intervals.push(Interval::new(cursor - w, cursor, r));
        cursor -= w;
    }
    Configuration::new(density, intervals).unwrap()
}

/// Condensed configuration whose per-side mass order is deliberately broken
/// somewhere, so a transposition applies. Returns the configuration and an
/// adjacent same-side pair violating the ordering.
pub fn random_misordered(
    rng: &mut impl Rng,
    density: Density,
    n: usize,
) -> (Configuration, (usize, usize)) {
    let quad = QuadratureSettings::default();
    loop {
        let mut order: Vec<usize> = (1..=n).collect();
        order.shuffle(rng);
        let masses: Vec<f64> = (0..n).map(|_| log_uniform(rng, 0.1, 5.0)).collect();
        // Stack at least two regions on the right, the rest left.
        let cut = rng.gen_range(2..=n.max(2)).min(n);
        let mut intervals = Vec::new();
        let mut cursor = 0.0f64;
        let mut right_slots = Vec::new();
        for &r in &order[..cut] {
            let next = density
                .invert_mass(cursor, masses[r - 1], isobubble::Direction::Right, &quad)
                .unwrap();
            intervals.push(Interval::new(cursor, next, r));
            right_slots.push(r);
            cursor = next;
        }
        let mut cursor = 0.0f64;
        for &r in &order[cut..] {
            let next = density
                .invert_mass(cursor, masses[r - 1], isobubble::Direction::Left, &quad)
                .unwrap();
            intervals.push(Interval::new(next, cursor, r));
            cursor = next;
        }
        // Find an adjacent right-side pair with the inner strictly heavier.
        let violating = right_slots
            .windows(2)
            .find(|w| masses[w[0] - 1] > masses[w[1] - 1] + 1e-9)
            .map(|w| (w[0], w[1]));
        if let Some(pair) = violating {
            let c = Configuration::new(density, intervals).unwrap();
            return (c, pair);
        }
    }
}

fn place_right(
    rng: &mut impl Rng,
    intervals: &mut Vec<Interval>,
    r: usize,
    cursor: &mut f64,
) {
    *cursor += rng.gen_range(0.0..0.5);
    let w = rng.gen_range(0.05..1.0);
    intervals.push(Interval::new(*cursor, *cursor + w, r));
    *cursor += w;
}

fn place_left(rng: &mut impl Rng, intervals: &mut Vec<Interval>, r: usize, cursor: &mut f64) {
    *cursor -= rng.gen_range(0.0..0.5);
    let w = rng.gen_range(0.05..1.0);
    intervals.push(Interval::new(*cursor - w, *cursor, r));
    *cursor -= w;
}

/// Messy instance for the fixpoint loop: scattered pieces, at least one
/// whole region per side, optionally one region straddling the origin.
pub fn random_messy(rng: &mut impl Rng, density: Density, n: usize) -> Configuration {
    assert!(n >= 3);
    let straddler = rng.gen_bool(0.5);
    let mut intervals = Vec::new();

    // Region 1 fully right, region 2 fully left, each possibly in two
    // pieces; region 3 may straddle; the rest scatter.
    let mut right_cursor = rng.gen_range(0.0..0.3);
    let mut left_cursor = -rng.gen_range(0.0..0.3);
    place_right(rng, &mut intervals, 1, &mut right_cursor);
    if rng.gen_bool(0.4) {
        place_right(rng, &mut intervals, 1, &mut right_cursor);
    }
    place_left(rng, &mut intervals, 2, &mut left_cursor);
    if rng.gen_bool(0.4) {
        place_left(rng, &mut intervals, 2, &mut left_cursor);
    }

    if straddler {
        // Region 3 crosses the origin between the two cursors' inner gap;
        // rebuild the inner space: simplest is to inject it right at zero.
        let wl = rng.gen_range(0.02..0.25);
        let wr = rng.gen_range(0.02..0.25);
        intervals.push(Interval::new(-wl, wr, 3));
        // Shift everything outward so nothing overlaps the straddler.
        for iv in intervals.iter_mut() {
            if iv.region != 3 {
                if iv.left >= 0.0 {
                    iv.left += wr;
                    iv.right += wr;
                } else {
                    iv.left -= wl;
                    iv.right -= wl;
                }
            }
        }
        right_cursor += wr;
        left_cursor -= wl;
    } else {
        place_right(rng, &mut intervals, 3, &mut right_cursor);
    }
    for r in 4..=n {
        if rng.gen_bool(0.5) {
            place_right(rng, &mut intervals, r, &mut right_cursor);
        } else {
            place_left(rng, &mut intervals, r, &mut left_cursor);
        }
    }
    Configuration::new(density, intervals).unwrap()
}
