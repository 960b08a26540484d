//! Desk-scale verification that the standard configuration minimizes
//! perimeter.
//!
//! At an optimum each region is a single interval per side with masses
//! growing outward, so competitors are exactly the per-region side choices.
//! Reflection is quotiented out by pinning the largest region to the right,
//! leaving 2^(n-1) canonical assignments. Equal masses can make distinct
//! assignments realize the same geometry; those are detected by comparing
//! the unordered pair of per-side mass multisets and excluded from the gap.

use serde::{Deserialize, Serialize};

use crate::configuration::{Configuration, Interval, MassSpec, RegionId};
use crate::density::{Density, Direction, QuadratureSettings};
use crate::error::{Error, Result};
use crate::parallel_map;

/// Absolute perimeter gap below which two configurations are declared
/// simultaneously isoperimetric.
pub const BIFURCATION_TOL: f64 = 1e-9;

/// Per-region side choices (one interval per region at the optimum).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignAssignment {
    sides: Vec<Direction>,
}

impl SignAssignment {
    pub fn new(sides: Vec<Direction>) -> SignAssignment {
        SignAssignment { sides }
    }

    pub fn len(&self) -> usize {
        self.sides.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sides.is_empty()
    }

    /// Side of region `id` (1-based).
    pub fn side(&self, id: RegionId) -> Direction {
        self.sides[id - 1]
    }

    pub fn sides(&self) -> &[Direction] {
        &self.sides
    }

    pub fn reflected(&self) -> SignAssignment {
        SignAssignment {
            sides: self.sides.iter().map(|s| s.flipped()).collect(),
        }
    }

    /// The standard parity pattern with region n on the right.
    pub fn standard(n: usize) -> SignAssignment {
        SignAssignment {
            sides: (1..=n)
                .map(|i| {
                    if (n - i) % 2 == 0 {
                        Direction::Right
                    } else {
                        Direction::Left
                    }
                })
                .collect(),
        }
    }
}

/// All 2^(n-1) side assignments with region n pinned to the right.
pub fn enumerate_assignments(spec: &MassSpec) -> Result<Vec<SignAssignment>> {
    let n = spec.len();
    if n > 20 {
        return Err(Error::InvalidInput(format!(
            "enumeration over 2^(n-1) assignments is capped at n = 20 (got {n})"
        )));
    }
    let count = 1usize << (n - 1);
    let mut out = Vec::with_capacity(count);
    for bits in 0..count {
        let mut sides = Vec::with_capacity(n);
        for region in 1..n {
            let right = (bits >> (region - 1)) & 1 == 1;
            sides.push(if right {
                Direction::Right
            } else {
                Direction::Left
            });
        }
        sides.push(Direction::Right);
        out.push(SignAssignment { sides });
    }
    Ok(out)
}

/// The condensed configuration realizing an assignment: per side, intervals
/// stacked from the origin outward in ascending mass order.
pub fn realize(
    spec: &MassSpec,
    assignment: &SignAssignment,
    density: Density,
    quad: &QuadratureSettings,
) -> Result<Configuration> {
    realize_with_masses(spec.masses(), assignment, density, quad)
}

fn realize_with_masses(
    masses_by_region: &[f64],
    assignment: &SignAssignment,
    density: Density,
    quad: &QuadratureSettings,
) -> Result<Configuration> {
    let n = masses_by_region.len();
    if assignment.len() != n {
        return Err(Error::InvalidInput(format!(
            "assignment covers {} regions, expected {n}",
            assignment.len()
        )));
    }
    let mut pieces: Vec<(f64, RegionId, Direction)> = Vec::with_capacity(n);
    for i in 1..=n {
        pieces.push((masses_by_region[i - 1], i, assignment.side(i)));
    }
    stack_pieces(&pieces, density, quad)
}

/// Stack labeled pieces per side in ascending (mass, region) order.
fn stack_pieces(
    pieces: &[(f64, RegionId, Direction)],
    density: Density,
    quad: &QuadratureSettings,
) -> Result<Configuration> {
    let per_side = |dir: Direction| -> Vec<(f64, RegionId)> {
        let mut v: Vec<(f64, RegionId)> = pieces
            .iter()
            .filter(|(m, _, d)| *d == dir && *m > 0.0)
            .map(|(m, r, _)| (*m, *r))
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    };
    let right = per_side(Direction::Right);
    let left = per_side(Direction::Left);
    let mut intervals = Vec::with_capacity(right.len() + left.len());
    let mut cursor = 0.0f64;
    for &(m, r) in &right {
        let next = density.invert_mass(cursor, m, Direction::Right, quad)?;
        intervals.push(Interval::new(cursor, next, r));
        cursor = next;
    }
    cursor = 0.0;
    for &(m, r) in &left {
        let next = density.invert_mass(cursor, m, Direction::Left, quad)?;
        intervals.push(Interval::new(next, cursor, r));
        cursor = next;
    }
    Ok(Configuration::new(density, intervals)?.with_quadrature(*quad))
}

/// Unordered pair of per-side mass multisets; assignments with equal keys
/// realize the same geometry up to reflection and relabeling of equal
/// masses.
fn structure_key(spec: &MassSpec, assignment: &SignAssignment) -> (Vec<u64>, Vec<u64>) {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for i in 1..=spec.len() {
        let bits = spec.mass_of(i).to_bits();
        match assignment.side(i) {
            Direction::Left => left.push(bits),
            Direction::Right => right.push(bits),
        }
    }
    left.sort_unstable();
    right.sort_unstable();
    if left <= right {
        (left, right)
    } else {
        (right, left)
    }
}

/// One enumerated competitor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompetitorEntry {
    pub assignment: SignAssignment,
    pub perimeter: f64,
    /// Same geometry as the standard configuration (reflection or equal-mass
    /// relabeling); excluded from the gap.
    pub equivalent_to_standard: bool,
}

/// Result of one per-region cross-origin split optimization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitResult {
    pub assignment_index: usize,
    pub region: RegionId,
    /// Optimal fraction of the region's mass on the positive side.
    pub lambda: f64,
    pub lambda_perimeter: f64,
    /// min(P(0), P(1)).
    pub boundary_perimeter: f64,
    /// Smallest perimeter over interior probe points.
    pub interior_perimeter: f64,
    /// Optimum landed within 1e-4 of a boundary.
    pub collapsed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitCheck {
    pub results: Vec<SplitResult>,
    /// Every split collapsed to a boundary and interior probes sat strictly
    /// above it.
    pub all_collapsed: bool,
}

/// Standard-vs-competitors table for one mass spec.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub standard_perimeter: f64,
    pub competitor_table: Vec<CompetitorEntry>,
    /// Smallest perimeter excess over the standard among non-equivalent
    /// competitors; `None` when there is no competitor (n = 1).
    pub min_gap: Option<f64>,
    pub winner_is_standard: bool,
    pub split_check: Option<SplitCheck>,
    /// Whether the density satisfies the theorem hypotheses; when false the
    /// table is still computed but is not evidence about the theorem.
    pub hypotheses_ok: bool,
}

/// Computes the perimeter of every canonical assignment and checks that the
/// parity assignment strictly minimizes. With `split_depth > 0`, each region
/// of the `split_depth` best assignments additionally gets a continuous
/// cross-origin mass split optimized by golden-section search, which must
/// collapse to a boundary.
pub fn verify_theorem(
    spec: &MassSpec,
    density: Density,
    split_depth: usize,
    quad: &QuadratureSettings,
) -> Result<VerificationReport> {
    let assignments = enumerate_assignments(spec)?;
    let standard = SignAssignment::standard(spec.len());
    let std_key = structure_key(spec, &standard);

    let quad_copy = *quad;
    let spec_copy = spec.clone();
    let perimeters: Vec<Result<f64>> = parallel_map(assignments.clone(), move |a| {
        realize(&spec_copy, &a, density, &quad_copy).map(|c| c.total_perimeter())
    });

    let mut table = Vec::with_capacity(assignments.len());
    let mut standard_perimeter = None;
    for (a, p) in assignments.iter().zip(perimeters) {
        let perimeter = p?;
        let equivalent = structure_key(spec, a) == std_key;
        if *a == standard {
            standard_perimeter = Some(perimeter);
        }
        table.push(CompetitorEntry {
            assignment: a.clone(),
            perimeter,
            equivalent_to_standard: equivalent,
        });
    }
    let standard_perimeter = standard_perimeter.expect("standard assignment is enumerated");

    let min_gap = table
        .iter()
        .filter(|e| !e.equivalent_to_standard)
        .map(|e| e.perimeter - standard_perimeter)
        .min_by(|a, b| a.partial_cmp(b).unwrap());
    let winner_is_standard = min_gap.map_or(true, |g| g > 0.0);

    let split_check = if split_depth > 0 {
        Some(split_collapse_check(
            spec,
            density,
            &table,
            split_depth,
            quad,
        )?)
    } else {
        None
    };

    Ok(VerificationReport {
        standard_perimeter,
        competitor_table: table,
        min_gap,
        winner_is_standard,
        split_check,
        hypotheses_ok: density.satisfies_hypotheses(),
    })
}

fn split_collapse_check(
    spec: &MassSpec,
    density: Density,
    table: &[CompetitorEntry],
    split_depth: usize,
    quad: &QuadratureSettings,
) -> Result<SplitCheck> {
    // Indices of the best `split_depth` assignments by perimeter.
    let mut order: Vec<usize> = (0..table.len()).collect();
    order.sort_by(|&a, &b| table[a].perimeter.partial_cmp(&table[b].perimeter).unwrap());
    order.truncate(split_depth.min(table.len()));

    let mut results = Vec::new();
    for idx in order {
        let assignment = &table[idx].assignment;
        for region in 1..=spec.len() {
            let f = |lambda: f64| split_perimeter(spec, assignment, density, region, lambda, quad);
            let (lambda, lambda_perimeter) = golden_section_min(&f, 0.0, 1.0, 1e-6)?;
            let boundary_perimeter = f(0.0)?.min(f(1.0)?);
            let interior_perimeter = [0.25, 0.5, 0.75]
                .iter()
                .map(|&l| f(l))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            let collapsed = lambda.min(1.0 - lambda) <= 1e-4;
            results.push(SplitResult {
                assignment_index: idx,
                region,
                lambda,
                lambda_perimeter,
                boundary_perimeter,
                interior_perimeter,
                collapsed,
            });
        }
    }
    let all_collapsed = results
        .iter()
        .all(|r| r.collapsed && r.interior_perimeter > r.boundary_perimeter);
    Ok(SplitCheck {
        results,
        all_collapsed,
    })
}

/// Perimeter when region `region` places fraction `lambda` of its mass on
/// the positive side (the rest on the negative side), all regions condensed
/// per side in ascending piece-mass order.
fn split_perimeter(
    spec: &MassSpec,
    assignment: &SignAssignment,
    density: Density,
    region: RegionId,
    lambda: f64,
    quad: &QuadratureSettings,
) -> Result<f64> {
    let lambda = lambda.clamp(0.0, 1.0);
    let mut pieces: Vec<(f64, RegionId, Direction)> = Vec::with_capacity(spec.len() + 1);
    for i in 1..=spec.len() {
        let m = spec.mass_of(i);
        if i == region {
            pieces.push((lambda * m, i, Direction::Right));
            pieces.push(((1.0 - lambda) * m, i, Direction::Left));
        } else {
            pieces.push((m, i, assignment.side(i)));
        }
    }
    Ok(stack_pieces(&pieces, density, quad)?.total_perimeter())
}

/// Golden-section minimization on [a, b].
fn golden_section_min(
    f: &dyn Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INVPHI * (hi - lo);
    let mut x2 = lo + INVPHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INVPHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INVPHI * (hi - lo);
            f2 = f(x2)?;
        }
    }
    let xm = 0.5 * (lo + hi);
    Ok((xm, f(xm)?))
}

/// Inclusive linear grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        if self.steps == 0 || !(self.lo > 0.0) || !(self.hi >= self.lo) {
            return Err(Error::InvalidInput(format!(
                "invalid grid {}:{}:{}",
                self.lo, self.hi, self.steps
            )));
        }
        if self.steps == 1 {
            return Ok(vec![self.lo]);
        }
        let h = (self.hi - self.lo) / (self.steps - 1) as f64;
        Ok((0..self.steps).map(|i| self.lo + h * i as f64).collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BifurcationRow {
    pub m1: f64,
    pub standard_perimeter: f64,
    pub best_competitor_perimeter: f64,
    pub gap: f64,
}

/// Sweep report for the smallest mass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BifurcationReport {
    pub rows: Vec<BifurcationRow>,
    /// Grid values whose gap fell within [`BIFURCATION_TOL`] of zero.
    pub bifurcations: Vec<f64>,
    /// Largest grid prefix value below which every gap stayed positive.
    pub below_threshold_sup: Option<f64>,
    pub no_bifurcation_found: bool,
    /// False when the density violates the theorem hypotheses; rows are then
    /// reported but labeled non-authoritative.
    pub authoritative: bool,
}

/// Sweeps M1 over the grid with the tail masses fixed, recording the gap
/// between the best competitor and the standard configuration.
pub fn bifurcation_search(
    tail: &[f64],
    density: Density,
    grid: GridSpec,
    quad: &QuadratureSettings,
) -> Result<BifurcationReport> {
    if tail.is_empty() {
        return Err(Error::InvalidInput(
            "bifurcation sweep needs at least one tail mass".into(),
        ));
    }
    let points = grid.points()?;
    let tail_vec = tail.to_vec();
    let quad_copy = *quad;
    let rows: Vec<Result<BifurcationRow>> = parallel_map(points, move |m1| {
        let mut masses = tail_vec.clone();
        masses.push(m1);
        let spec = MassSpec::new(masses)?;
        let report = verify_theorem(&spec, density, 0, &quad_copy)?;
        let gap = report.min_gap.expect("n >= 2 always has a competitor");
        Ok(BifurcationRow {
            m1,
            standard_perimeter: report.standard_perimeter,
            best_competitor_perimeter: report.standard_perimeter + gap,
            gap,
        })
    });
    let rows: Vec<BifurcationRow> = rows.into_iter().collect::<Result<_>>()?;

    let bifurcations: Vec<f64> = rows
        .iter()
        .filter(|r| r.gap.abs() <= BIFURCATION_TOL)
        .map(|r| r.m1)
        .collect();
    let mut below_threshold_sup = None;
    for row in &rows {
        if row.gap.abs() <= BIFURCATION_TOL {
            break;
        }
        below_threshold_sup = Some(row.m1);
    }
    Ok(BifurcationReport {
        no_bifurcation_found: bifurcations.is_empty(),
        bifurcations,
        below_threshold_sup,
        authoritative: density.satisfies_hypotheses(),
        rows,
    })
}

/// Writes the sweep as CSV: `M1,standard_perimeter,best_competitor_perimeter,gap`.
pub fn write_bifurcation_csv<W: std::io::Write>(
    report: &BifurcationReport,
    w: &mut W,
) -> std::io::Result<()> {
    writeln!(w, "M1,standard_perimeter,best_competitor_perimeter,gap")?;
    for r in &report.rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.m1, r.standard_perimeter, r.best_competitor_perimeter, r.gap
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InflationRow {
    pub delta: f64,
    pub standard_perimeter: f64,
    pub competitor_perimeter: f64,
    pub delta_p_standard: f64,
    pub delta_p_competitor: f64,
    /// Leftmost endpoint of the standard realization.
    pub standard_leftmost: f64,
    /// Leftmost endpoint of the competitor realization.
    pub competitor_leftmost: f64,
    pub left_shifted: bool,
}

/// Mass-inflation experiment: grow the second-largest region in both the
/// standard and a competitor realization and compare perimeter growth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InflationTable {
    pub target: RegionId,
    pub competitor: SignAssignment,
    pub rows: Vec<InflationRow>,
    /// On every left-shifted row with positive delta, the competitor's
    /// perimeter grew strictly less than the standard's.
    pub mechanism_holds: bool,
}

/// Inflates the target mass by each delta in BOTH the standard and the
/// competitor realization (side assignments held fixed) and tabulates the
/// perimeter changes. The target must be the second-largest region; the
/// competitor defaults to the best nonstandard assignment.
pub fn inflation_experiment(
    spec: &MassSpec,
    density: Density,
    target: RegionId,
    competitor: Option<SignAssignment>,
    deltas: &[f64],
    quad: &QuadratureSettings,
) -> Result<InflationTable> {
    let n = spec.len();
    if n < 2 {
        return Err(Error::InvalidTarget(
            "inflation experiment needs at least two regions".into(),
        ));
    }
    if target != n - 1 {
        return Err(Error::InvalidTarget(format!(
            "target must be the second-largest region (id {}), got {target}",
            n - 1
        )));
    }
    if deltas.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::InvalidInput("deltas must be finite and >= 0".into()));
    }
    let competitor = match competitor {
        Some(c) => {
            if c.len() != n {
                return Err(Error::InvalidInput(format!(
                    "competitor assignment covers {} regions, expected {n}",
                    c.len()
                )));
            }
            c
        }
        None => {
            let report = verify_theorem(spec, density, 0, quad)?;
            report
                .competitor_table
                .iter()
                .filter(|e| !e.equivalent_to_standard)
                .min_by(|a, b| a.perimeter.partial_cmp(&b.perimeter).unwrap())
                .map(|e| e.assignment.clone())
                .ok_or_else(|| {
                    Error::InvalidTarget("no nonstandard competitor exists".into())
                })?
        }
    };
    let standard = SignAssignment::standard(n);

    let p0_std = realize(spec, &standard, density, quad)?.total_perimeter();
    let p0_comp = realize_with_masses(spec.masses(), &competitor, density, quad)?.total_perimeter();

    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let mut masses = spec.masses().to_vec();
        masses[target - 1] += delta;
        let std_c = realize_with_masses(&masses, &standard, density, quad)?;
        let comp_c = realize_with_masses(&masses, &competitor, density, quad)?;
        let p_std = std_c.total_perimeter();
        let p_comp = comp_c.total_perimeter();
        let a_star = std_c.leftmost();
        let b_star = comp_c.leftmost();
        // Left-shifted in the full sense: same orientation (largest region
        // right), with both extremes strictly left of the standard's.
        let left_shifted = competitor.side(n) == Direction::Right
            && b_star < a_star - 1e-12
            && comp_c.rightmost() < std_c.rightmost() - 1e-12;
        rows.push(InflationRow {
            delta,
            standard_perimeter: p_std,
            competitor_perimeter: p_comp,
            delta_p_standard: p_std - p0_std,
            delta_p_competitor: p_comp - p0_comp,
            standard_leftmost: a_star,
            competitor_leftmost: b_star,
            left_shifted,
        });
    }
    let mechanism_holds = rows
        .iter()
        .filter(|r| r.delta > 0.0 && r.left_shifted)
        .all(|r| r.delta_p_competitor < r.delta_p_standard + 1e-12);
    Ok(InflationTable {
        target,
        competitor,
        rows,
        mechanism_holds,
    })
}
