//! Labeled multi-interval configurations and their functionals.
//!
//! A configuration is an ordered set of labeled intervals under a fixed
//! density. Total weighted perimeter sums `f` over the distinct endpoint
//! values (a point where two intervals meet is counted once); per-region
//! mass sums the weighted mass of each region's intervals.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::density::{Density, Direction, QuadratureSettings};
use crate::error::{Error, Result};

/// Region label; regions are numbered 1..=n.
pub type RegionId = usize;

/// Endpoints closer than this are treated as one perimeter point.
pub const ENDPOINT_MERGE_TOL: f64 = 1e-12;

/// Slack used when comparing per-interval masses for the condensed ordering.
pub const MASS_ORDER_TOL: f64 = 1e-9;

/// One labeled interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub left: f64,
    pub right: f64,
    pub region: RegionId,
}

impl Interval {
    pub fn new(left: f64, right: f64, region: RegionId) -> Interval {
        Interval {
            left,
            right,
            region,
        }
    }

    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    fn crosses_origin(&self) -> bool {
        self.left < -ENDPOINT_MERGE_TOL && self.right > ENDPOINT_MERGE_TOL
    }
}

/// A sorted list of n positive target masses M1 <= ... <= Mn.
///
/// Region i carries mass `masses()[i-1]`. Equal masses keep their input
/// order (stable sort), so index assignment is deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MassSpec {
    masses: Vec<f64>,
}

impl MassSpec {
    pub fn new(mut masses: Vec<f64>) -> Result<MassSpec> {
        if masses.is_empty() {
            return Err(Error::InvalidInput("mass spec must be nonempty".into()));
        }
        if masses.iter().any(|m| !m.is_finite() || *m <= 0.0) {
            return Err(Error::InvalidInput(
                "all masses must be finite and strictly positive".into(),
            ));
        }
        masses.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(MassSpec { masses })
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Mass of region `id` (1-based).
    pub fn mass_of(&self, id: RegionId) -> f64 {
        self.masses[id - 1]
    }
}

impl TryFrom<Vec<f64>> for MassSpec {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<MassSpec> {
        MassSpec::new(v)
    }
}

impl From<MassSpec> for Vec<f64> {
    fn from(s: MassSpec) -> Vec<f64> {
        s.masses
    }
}

/// Which side of the origin the largest region goes to in `build_standard`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    LargestRight,
    LargestLeft,
}

/// An ordered set of labeled intervals under a density.
///
/// Invariants enforced on construction: intervals sorted by left endpoint,
/// interiors pairwise disjoint (adjacent intervals may share one endpoint),
/// and region ids cover 1..=n.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    density: Density,
    intervals: Vec<Interval>,
    quad: QuadratureSettings,
}

#[derive(Serialize, Deserialize)]
struct RawConfiguration {
    density: Density,
    intervals: Vec<Interval>,
}

impl Serialize for Configuration {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawConfiguration {
            density: self.density,
            intervals: self.intervals.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Configuration {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawConfiguration::deserialize(d)?;
        Configuration::new(raw.density, raw.intervals).map_err(serde::de::Error::custom)
    }
}

impl Configuration {
    pub fn new(density: Density, mut intervals: Vec<Interval>) -> Result<Configuration> {
        density.validate()?;
        if intervals.is_empty() {
            return Err(Error::InvalidInput(
                "configuration must contain at least one interval".into(),
            ));
        }
        for iv in &intervals {
            if !iv.left.is_finite() || !iv.right.is_finite() {
                return Err(Error::InvalidInput("interval endpoints must be finite".into()));
            }
            if iv.left > iv.right {
                return Err(Error::InvalidInput(format!(
                    "interval [{}, {}] has left > right",
                    iv.left, iv.right
                )));
            }
            if iv.region == 0 {
                return Err(Error::InvalidInput("region ids start at 1".into()));
            }
        }
        intervals.sort_by(|a, b| (a.left, a.right).partial_cmp(&(b.left, b.right)).unwrap());
        for w in intervals.windows(2) {
            if w[1].left < w[0].right - ENDPOINT_MERGE_TOL {
                return Err(Error::InvalidInput(format!(
                    "intervals [{}, {}] and [{}, {}] overlap",
                    w[0].left, w[0].right, w[1].left, w[1].right
                )));
            }
        }
        let n = intervals.iter().map(|iv| iv.region).max().unwrap();
        let mut seen = vec![false; n + 1];
        for iv in &intervals {
            seen[iv.region] = true;
        }
        if let Some(missing) = (1..=n).find(|r| !seen[*r]) {
            return Err(Error::InvalidInput(format!(
                "region ids must cover 1..={n}; region {missing} is missing"
            )));
        }
        Ok(Configuration {
            density,
            intervals,
            quad: QuadratureSettings::default(),
        })
    }

    pub fn with_quadrature(mut self, quad: QuadratureSettings) -> Configuration {
        self.quad = quad;
        self
    }

    pub fn density(&self) -> Density {
        self.density
    }

    pub fn quadrature(&self) -> &QuadratureSettings {
        &self.quad
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    /// Number of regions (the largest region id).
    pub fn n_regions(&self) -> usize {
        self.intervals.iter().map(|iv| iv.region).max().unwrap_or(0)
    }

    pub fn region_intervals(&self, region: RegionId) -> Vec<Interval> {
        self.intervals
            .iter()
            .copied()
            .filter(|iv| iv.region == region)
            .collect()
    }

    /// Sorted endpoint values with shared endpoints merged.
    pub fn distinct_endpoints(&self) -> Vec<f64> {
        let mut values: Vec<f64> = self
            .intervals
            .iter()
            .flat_map(|iv| [iv.left, iv.right])
            .collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut out: Vec<f64> = Vec::with_capacity(values.len());
        for v in values {
            match out.last() {
                Some(last) if (v - last).abs() <= ENDPOINT_MERGE_TOL => {}
                _ => out.push(v),
            }
        }
        out
    }

    /// Leftmost endpoint of the whole configuration.
    pub fn leftmost(&self) -> f64 {
        self.intervals[0].left
    }

    /// Rightmost endpoint of the whole configuration.
    pub fn rightmost(&self) -> f64 {
        self.intervals
            .iter()
            .map(|iv| iv.right)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The endpoint of `region` furthest from the origin (signed).
    pub fn outermost_endpoint(&self, region: RegionId) -> Option<f64> {
        self.region_intervals(region)
            .iter()
            .flat_map(|iv| [iv.left, iv.right])
            .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
    }

    /// Total weighted perimeter: sum of f over distinct endpoint values.
    pub fn total_perimeter(&self) -> f64 {
        self.distinct_endpoints()
            .iter()
            .map(|&x| self.density.eval(x))
            .sum()
    }

    /// Weighted mass per region.
    pub fn region_masses(&self) -> Result<BTreeMap<RegionId, f64>> {
        let mut out = BTreeMap::new();
        for iv in &self.intervals {
            let m = self.density.mass(iv.left, iv.right, &self.quad)?;
            *out.entry(iv.region).or_insert(0.0) += m;
        }
        Ok(out)
    }

    /// Mirror image across the origin (same labels).
    pub fn reflected(&self) -> Configuration {
        let intervals = self
            .intervals
            .iter()
            .map(|iv| Interval::new(-iv.right, -iv.left, iv.region))
            .collect();
        let mut c = Configuration::new(self.density, intervals).expect("reflection is valid");
        c.quad = self.quad;
        c
    }

    /// Intervals with any origin-crossing interval split into a negative and
    /// a positive piece sharing the endpoint 0.
    pub(crate) fn split_at_origin(&self) -> Vec<Interval> {
        let mut out = Vec::with_capacity(self.intervals.len() + 1);
        for iv in &self.intervals {
            if iv.crosses_origin() {
                out.push(Interval::new(iv.left, 0.0, iv.region));
                out.push(Interval::new(0.0, iv.right, iv.region));
            } else {
                out.push(*iv);
            }
        }
        out
    }

    /// Instantaneous dP/dt when the listed endpoints move at speed 1/f in the
    /// given directions: sum of sign * (log f)'(x) over the subset.
    ///
    /// Positions must match existing endpoints; the origin is rejected
    /// because the formula is undefined there.
    pub fn stationarity_residual(&self, moving: &[(f64, Direction)]) -> Result<f64> {
        let endpoints = self.distinct_endpoints();
        let mut total = 0.0;
        for &(pos, dir) in moving {
            let matched = endpoints
                .iter()
                .find(|&&e| (e - pos).abs() <= ENDPOINT_MERGE_TOL)
                .copied()
                .ok_or_else(|| {
                    Error::InvalidInput(format!("{pos} is not an endpoint of the configuration"))
                })?;
            if matched == 0.0 && self.density.flags().vanishes_at_origin {
                return Err(Error::OriginSingularity { position: matched });
            }
            total += dir.signum() * self.density.log_deriv(matched)?;
        }
        Ok(total)
    }

    /// Structure flags plus all alternating and nested region pairs.
    pub fn classify(&self) -> StructureReport {
        let pieces = self.split_at_origin();
        let n = self.n_regions();

        let mut neg_count = vec![0usize; n + 1];
        let mut pos_count = vec![0usize; n + 1];
        for p in &pieces {
            if p.right <= ENDPOINT_MERGE_TOL {
                neg_count[p.region] += 1;
            } else {
                pos_count[p.region] += 1;
            }
        }

        let adjacent = pieces
            .windows(2)
            .all(|w| (w[1].left - w[0].right).abs() <= ENDPOINT_MERGE_TOL);
        let contains_origin = self.leftmost() <= ENDPOINT_MERGE_TOL
            && self.rightmost() >= -ENDPOINT_MERGE_TOL;
        let one_per_region_side = (1..=n).all(|r| neg_count[r] <= 1 && pos_count[r] <= 1);

        let sizes_grow_outward = self.sizes_grow_outward(&pieces);
        let condensed =
            adjacent && contains_origin && one_per_region_side && sizes_grow_outward;

        let mut interval_count = vec![0usize; n + 1];
        for iv in &self.intervals {
            interval_count[iv.region] += 1;
        }
        let one_interval_per_region = (1..=n).all(|r| interval_count[r] == 1);

        let origin_is_boundary = self
            .intervals
            .iter()
            .any(|iv| iv.left.abs() <= ENDPOINT_MERGE_TOL || iv.right.abs() <= ENDPOINT_MERGE_TOL);

        let standard = condensed
            && one_interval_per_region
            && origin_is_boundary
            && self.parity_sides_match();

        let (alternating_pairs, nested_pairs) = self.two_sided_pairs(&pieces);

        StructureReport {
            condensed,
            one_interval_per_region,
            origin_is_boundary,
            standard,
            alternating_pairs,
            nested_pairs,
        }
    }

    fn sizes_grow_outward(&self, pieces: &[Interval]) -> bool {
        let mut pos_masses = Vec::new();
        let mut neg_masses = Vec::new();
        for p in pieces {
            let m = match self.density.mass(p.left, p.right, &self.quad) {
                Ok(m) => m,
                Err(_) => return false,
            };
            if p.right <= ENDPOINT_MERGE_TOL {
                neg_masses.push((p.left, m));
            } else {
                pos_masses.push((p.left, m));
            }
        }
        pos_masses.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let pos_ok = pos_masses
            .windows(2)
            .all(|w| w[1].1 >= w[0].1 - MASS_ORDER_TOL);
        // Negative side grows leftward, i.e. masses decrease with left endpoint.
        neg_masses.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let neg_ok = neg_masses
            .windows(2)
            .all(|w| w[1].1 <= w[0].1 + MASS_ORDER_TOL);
        pos_ok && neg_ok
    }

    /// Whether sides alternate with the mass ranking, as in the standard
    /// configuration; equal masses may be permuted within their tie group.
    fn parity_sides_match(&self) -> bool {
        let n = self.n_regions();
        let mut ranked: Vec<(f64, i8)> = Vec::with_capacity(n);
        for r in 1..=n {
            let ivs = self.region_intervals(r);
            if ivs.len() != 1 || ivs[0].crosses_origin() {
                return false;
            }
            let side: i8 = if ivs[0].right <= ENDPOINT_MERGE_TOL {
                -1
            } else {
                1
            };
            let m = match self.density.mass(ivs[0].left, ivs[0].right, &self.quad) {
                Ok(m) => m,
                Err(_) => return false,
            };
            ranked.push((m, side));
        }
        ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        // Try both alternation phases; equal masses (within tolerance) form
        // tie groups whose required sides are compared as multisets.
        'phase: for phase in [1i8, -1i8] {
            let mut i = 0;
            while i < n {
                let mut j = i + 1;
                while j < n && ranked[j].0 - ranked[i].0 <= MASS_ORDER_TOL {
                    j += 1;
                }
                let mut need = 0i64; // sum of required sides in positions i..j
                let mut have = 0i64;
                for k in i..j {
                    need += if k % 2 == 0 { phase as i64 } else { -phase as i64 };
                    have += ranked[k].1 as i64;
                }
                if need != have {
                    continue 'phase;
                }
                i = j;
            }
            return true;
        }
        false
    }

    fn two_sided_pairs(
        &self,
        pieces: &[Interval],
    ) -> (Vec<(RegionId, RegionId)>, Vec<(RegionId, RegionId)>) {
        let n = self.n_regions();
        // Regions with exactly one strictly-negative and one strictly-positive
        // piece of positive width.
        let mut neg_piece: Vec<Option<Interval>> = vec![None; n + 1];
        let mut pos_piece: Vec<Option<Interval>> = vec![None; n + 1];
        let mut counts = vec![(0usize, 0usize); n + 1];
        for p in pieces {
            if p.width() <= ENDPOINT_MERGE_TOL {
                continue;
            }
            if p.right <= ENDPOINT_MERGE_TOL {
                counts[p.region].0 += 1;
                neg_piece[p.region] = Some(*p);
            } else if p.left >= -ENDPOINT_MERGE_TOL {
                counts[p.region].1 += 1;
                pos_piece[p.region] = Some(*p);
            }
        }
        let two_sided: Vec<RegionId> = (1..=n)
            .filter(|&r| counts[r] == (1, 1))
            .collect();

        let mut alternating = Vec::new();
        let mut nested = Vec::new();
        for (idx, &a) in two_sided.iter().enumerate() {
            for &b in &two_sided[idx + 1..] {
                let (an, ap) = (neg_piece[a].unwrap(), pos_piece[a].unwrap());
                let (bn, bp) = (neg_piece[b].unwrap(), pos_piece[b].unwrap());
                let a_first_neg = an.left < bn.left;
                let a_first_pos = ap.left < bp.left;
                if a_first_neg == a_first_pos {
                    alternating.push((a, b));
                } else {
                    nested.push((a, b));
                }
            }
        }
        (alternating, nested)
    }
}

/// Builds the standard configuration for the given masses: one interval per
/// region, sides chosen by index parity (the largest region on the side given
/// by `orient`), intervals stacked adjacent from the origin outward in
/// ascending mass order.
pub fn build_standard(
    spec: &MassSpec,
    density: Density,
    orient: Orientation,
    quad: &QuadratureSettings,
) -> Result<Configuration> {
    if !density.flags().vanishes_at_origin {
        return Err(Error::InvalidInput(
            "standard configuration requires a density vanishing at the origin".into(),
        ));
    }
    let n = spec.len();
    let largest = match orient {
        Orientation::LargestRight => Direction::Right,
        Orientation::LargestLeft => Direction::Left,
    };
    let mut intervals = Vec::with_capacity(n);
    let mut cursor_right = 0.0f64;
    let mut cursor_left = 0.0f64;
    for i in 1..=n {
        let side = if (n - i) % 2 == 0 {
            largest
        } else {
            largest.flipped()
        };
        let m = spec.mass_of(i);
        match side {
            Direction::Right => {
                let next = density.invert_mass(cursor_right, m, Direction::Right, quad)?;
                intervals.push(Interval::new(cursor_right, next, i));
                cursor_right = next;
            }
            Direction::Left => {
                let next = density.invert_mass(cursor_left, m, Direction::Left, quad)?;
                intervals.push(Interval::new(next, cursor_left, i));
                cursor_left = next;
            }
        }
    }
    Ok(Configuration::new(density, intervals)?.with_quadrature(*quad))
}

/// Structure flags and layout pairs reported by [`Configuration::classify`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureReport {
    pub condensed: bool,
    pub one_interval_per_region: bool,
    pub origin_is_boundary: bool,
    pub standard: bool,
    pub alternating_pairs: Vec<(RegionId, RegionId)>,
    pub nested_pairs: Vec<(RegionId, RegionId)>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn q() -> QuadratureSettings {
        QuadratureSettings::default()
    }

    fn abs_density() -> Density {
        Density::power(1.0).unwrap()
    }

    #[test]
    fn figure_one_perimeters() {
        let d = abs_density();
        let c = Configuration::new(
            d,
            vec![Interval::new(-2.0, 0.0, 1), Interval::new(0.0, 4.0, 1)],
        )
        .unwrap();
        // Shared origin endpoint counted once and contributes f(0) = 0.
        assert_relative_eq!(c.total_perimeter(), 6.0, epsilon = 1e-12);
        assert_relative_eq!(c.region_masses().unwrap()[&1], 10.0, epsilon = 1e-10);

        let single =
            Configuration::new(d, vec![Interval::new(0.0, 20.0f64.sqrt(), 1)]).unwrap();
        assert_relative_eq!(single.total_perimeter(), 20.0f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn two_region_perimeter() {
        let d = abs_density();
        let c = Configuration::new(
            d,
            vec![
                Interval::new(0.0, 2.0f64.sqrt(), 1),
                Interval::new(-2.0, 0.0, 2),
            ],
        )
        .unwrap();
        assert_relative_eq!(
            c.total_perimeter(),
            2.0f64.sqrt() + 2.0,
            epsilon = 1e-12
        );
        let masses = c.region_masses().unwrap();
        assert_relative_eq!(masses[&1], 1.0, epsilon = 1e-10);
        assert_relative_eq!(masses[&2], 2.0, epsilon = 1e-10);
    }

    #[test]
    fn region_mass_three_regions() {
        let d = abs_density();
        let c = Configuration::new(
            d,
            vec![
                Interval::new(0.0, 2.0f64.sqrt(), 1),
                Interval::new(2.0f64.sqrt(), 8.0f64.sqrt(), 3),
                Interval::new(-2.0, 0.0, 2),
            ],
        )
        .unwrap();
        let masses = c.region_masses().unwrap();
        assert_relative_eq!(masses[&1], 1.0, epsilon = 1e-10);
        assert_relative_eq!(masses[&2], 2.0, epsilon = 1e-10);
        assert_relative_eq!(masses[&3], 3.0, epsilon = 1e-10);
    }

    #[test]
    fn invariants_rejected() {
        let d = abs_density();
        assert!(Configuration::new(d, vec![]).is_err());
        assert!(Configuration::new(d, vec![Interval::new(2.0, 1.0, 1)]).is_err());
        // Overlap.
        assert!(Configuration::new(
            d,
            vec![Interval::new(0.0, 2.0, 1), Interval::new(1.0, 3.0, 2)]
        )
        .is_err());
        // Region 1 missing.
        assert!(Configuration::new(d, vec![Interval::new(0.0, 1.0, 2)]).is_err());
    }

    #[test]
    fn standard_two_masses() {
        let spec = MassSpec::new(vec![1.0, 2.0]).unwrap();
        let c = build_standard(&spec, abs_density(), Orientation::LargestLeft, &q()).unwrap();
        let ivs = c.intervals();
        assert_eq!(ivs.len(), 2);
        // Region 2 on the left: [-2, 0]; region 1 on the right: [0, sqrt 2].
        assert_relative_eq!(ivs[0].left, -2.0, epsilon = 1e-10);
        assert_eq!(ivs[0].region, 2);
        assert_relative_eq!(ivs[1].right, 2.0f64.sqrt(), epsilon = 1e-10);
        assert_eq!(ivs[1].region, 1);
        assert_relative_eq!(c.total_perimeter(), 2.0 + 2.0f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn standard_single_mass() {
        let spec = MassSpec::new(vec![10.0]).unwrap();
        let c = build_standard(&spec, abs_density(), Orientation::LargestRight, &q()).unwrap();
        assert_eq!(c.intervals().len(), 1);
        assert_relative_eq!(c.intervals()[0].left, 0.0, epsilon = 1e-12);
        assert_relative_eq!(c.intervals()[0].right, 20.0f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn standard_three_masses() {
        let spec = MassSpec::new(vec![1.0, 2.0, 3.0]).unwrap();
        let c = build_standard(&spec, abs_density(), Orientation::LargestRight, &q()).unwrap();
        assert_relative_eq!(
            c.total_perimeter(),
            2.0 + 3.0 * 2.0f64.sqrt(),
            epsilon = 1e-9
        );
        // Layout: [-2,0]:R2, [0,sqrt2]:R1, [sqrt2, sqrt8]:R3.
        let ivs = c.intervals();
        assert_eq!(ivs[0].region, 2);
        assert_eq!(ivs[1].region, 1);
        assert_eq!(ivs[2].region, 3);
        assert_relative_eq!(ivs[2].right, 8.0f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn standard_reflection_symmetry() {
        let spec = MassSpec::new(vec![0.4, 1.1, 2.7, 3.0]).unwrap();
        let d = Density::power(2.0).unwrap();
        let right = build_standard(&spec, d, Orientation::LargestRight, &q()).unwrap();
        let left = build_standard(&spec, d, Orientation::LargestLeft, &q()).unwrap();
        assert!((right.total_perimeter() - left.total_perimeter()).abs() <= 1e-12);
        let refl = left.reflected();
        for (a, b) in right.intervals().iter().zip(refl.intervals()) {
            assert_relative_eq!(a.left, b.left, epsilon = 1e-10);
            assert_relative_eq!(a.right, b.right, epsilon = 1e-10);
            assert_eq!(a.region, b.region);
        }
    }

    #[test]
    fn classify_standard() {
        let spec = MassSpec::new(vec![1.0, 2.0, 3.0]).unwrap();
        let c = build_standard(&spec, abs_density(), Orientation::LargestRight, &q()).unwrap();
        let rep = c.classify();
        assert!(rep.condensed);
        assert!(rep.one_interval_per_region);
        assert!(rep.origin_is_boundary);
        assert!(rep.standard);
        assert!(rep.alternating_pairs.is_empty());
        assert!(rep.nested_pairs.is_empty());
    }

    #[test]
    fn classify_alternating_and_nested() {
        let d = abs_density();
        // Alternating: A-, B-, A+, B+ (A = 1, B = 2).
        let alt = Configuration::new(
            d,
            vec![
                Interval::new(-3.0, -1.0, 1),
                Interval::new(-1.0, 0.0, 2),
                Interval::new(0.0, 1.0, 1),
                Interval::new(1.0, 2.0, 2),
            ],
        )
        .unwrap();
        let rep = alt.classify();
        assert_eq!(rep.alternating_pairs, vec![(1, 2)]);
        assert!(rep.nested_pairs.is_empty());
        assert!(!rep.standard);

        // Nested: A-, B-, B+, A+.
        let nest = Configuration::new(
            d,
            vec![
                Interval::new(-3.0, -1.0, 1),
                Interval::new(-1.0, 0.0, 2),
                Interval::new(0.0, 1.0, 2),
                Interval::new(1.0, 2.0, 1),
            ],
        )
        .unwrap();
        let rep = nest.classify();
        assert_eq!(rep.nested_pairs, vec![(1, 2)]);
        assert!(rep.alternating_pairs.is_empty());
    }

    #[test]
    fn classify_same_side_stack_not_standard() {
        let d = abs_density();
        let c = Configuration::new(
            d,
            vec![Interval::new(0.0, 1.0, 1), Interval::new(1.0, 2.0, 2)],
        )
        .unwrap();
        let rep = c.classify();
        assert!(rep.condensed);
        assert!(!rep.standard);
    }

    #[test]
    fn stationarity_examples() {
        let d = abs_density();
        let c = Configuration::new(d, vec![Interval::new(1.0, 2.0, 1)]).unwrap();
        let r = c
            .stationarity_residual(&[(1.0, Direction::Right), (2.0, Direction::Right)])
            .unwrap();
        assert_relative_eq!(r, 1.5, epsilon = 1e-12);

        // Symmetric pair moving right cancels.
        let sym = Configuration::new(d, vec![Interval::new(-1.5, 1.5, 1)]).unwrap();
        let r = sym
            .stationarity_residual(&[(-1.5, Direction::Right), (1.5, Direction::Right)])
            .unwrap();
        assert!(r.abs() <= 1e-14);

        // Mixed-side subset.
        let spec = MassSpec::new(vec![1.0, 2.0]).unwrap();
        let std2 = build_standard(&spec, d, Orientation::LargestLeft, &q()).unwrap();
        let r = std2
            .stationarity_residual(&[(-2.0, Direction::Right), (2.0f64.sqrt(), Direction::Right)])
            .unwrap();
        assert_relative_eq!(r, 1.0 / 2.0f64.sqrt() - 0.5, epsilon = 1e-10);

        // Origin is rejected.
        assert!(matches!(
            std2.stationarity_residual(&[(0.0, Direction::Right)]),
            Err(Error::OriginSingularity { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let spec = MassSpec::new(vec![1.0, 2.0]).unwrap();
        let c = build_standard(&spec, abs_density(), Orientation::LargestLeft, &q()).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"intervals\""));
        assert!(json.contains("\"region\":2"));
        let back: Configuration = serde_json::from_str(&json).unwrap();
        assert_eq!(back.intervals().len(), 2);
        // Deserialization revalidates.
        let bad = r#"{"density":{"family":"power","p":1.0},"intervals":[{"left":3.0,"right":1.0,"region":1}]}"#;
        assert!(serde_json::from_str::<Configuration>(bad).is_err());
    }

    #[test]
    fn region_masses_match_spec_after_build() {
        let spec = MassSpec::new(vec![0.3, 0.9, 2.2, 2.2, 5.0]).unwrap();
        for d in [
            Density::power(0.5).unwrap(),
            Density::power(3.0).unwrap(),
            Density::power_composite(1.0, 2.0).unwrap(),
        ] {
            let c = build_standard(&spec, d, Orientation::LargestRight, &q()).unwrap();
            let masses = c.region_masses().unwrap();
            for i in 1..=spec.len() {
                assert!((masses[&i] - spec.mass_of(i)).abs() <= 1e-8);
            }
            assert!(c.classify().standard);
        }
    }
}
