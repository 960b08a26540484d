//! Perimeter-reducing configuration rewrites.
//!
//! Each move returns a new configuration together with a [`MoveReport`]
//! certifying that per-region masses were preserved and total perimeter did
//! not increase. Final endpoints are always reconstructed through
//! `invert_mass` rather than taken from flowed coordinates, so the
//! certificates are quadrature-accurate.
//!
//! * `consolidate`: per side of the origin, merge each region's intervals
//!   and pack them adjacent from the origin outward, preserving the
//!   per-side order of outermost endpoints.
//! * `transpose`: exchange the slots of two single-interval regions (same
//!   side and adjacent, or across the origin) and restack the affected
//!   flanks.
//! * `eliminate_alternating`: run the two-sided inward siphon that removes
//!   at least one inner interval of an alternating pair.
//! * `merge_across_origin`: combine a region split across the origin into a
//!   single interval on the side selected by the first-variation sign.

use serde::{Deserialize, Serialize};

use crate::configuration::{
    Configuration, Interval, RegionId, ENDPOINT_MERGE_TOL, MASS_ORDER_TOL,
};
use crate::density::{Density, Direction, QuadratureSettings};
use crate::error::{Error, Result};

/// Certificate attached to every move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveReport {
    #[serde(rename = "move")]
    pub move_name: String,
    #[serde(rename = "before")]
    pub perimeter_before: f64,
    #[serde(rename = "after")]
    pub perimeter_after: f64,
    /// Max per-region |mass change|.
    pub mass_drift: f64,
    pub applied: bool,
}

fn make_report(
    name: &str,
    before: &Configuration,
    after: &Configuration,
    applied: bool,
) -> Result<MoveReport> {
    let mb = before.region_masses()?;
    let ma = after.region_masses()?;
    let mut drift = 0.0f64;
    for (r, m) in &mb {
        drift = drift.max((m - ma.get(r).copied().unwrap_or(0.0)).abs());
    }
    Ok(MoveReport {
        move_name: name.to_string(),
        perimeter_before: before.total_perimeter(),
        perimeter_after: after.total_perimeter(),
        mass_drift: drift,
        applied,
    })
}

fn unchanged(name: &str, c: &Configuration) -> Result<(Configuration, MoveReport)> {
    let report = make_report(name, c, c, false)?;
    Ok((c.clone(), report))
}

/// A run of mass along one side: either a labeled region piece or an
/// unlabeled gap whose mass the flows preserve.
#[derive(Debug, Clone, Copy)]
struct Piece {
    region: Option<RegionId>,
    mass: f64,
}

/// Pieces (with gaps) covering `[span_left, span_right]`, given the
/// split-view intervals lying inside the span, sorted by left endpoint.
fn pieces_with_gaps(
    d: Density,
    quad: &QuadratureSettings,
    items: &[Interval],
    span_left: f64,
    span_right: f64,
) -> Result<Vec<Piece>> {
    let mut out = Vec::new();
    let mut cursor = span_left;
    for iv in items {
        if iv.left > cursor + ENDPOINT_MERGE_TOL {
            out.push(Piece {
                region: None,
                mass: d.mass(cursor, iv.left, quad)?,
            });
        }
        out.push(Piece {
            region: Some(iv.region),
            mass: d.mass(iv.left, iv.right, quad)?,
        });
        cursor = iv.right;
    }
    if span_right > cursor + ENDPOINT_MERGE_TOL {
        out.push(Piece {
            region: None,
            mass: d.mass(cursor, span_right, quad)?,
        });
    }
    Ok(out)
}

/// Stack pieces left-to-right between two fixed anchors; the last positive
/// piece lands exactly on `right_anchor` so neighbours stay bit-identical.
fn stack_between(
    d: Density,
    quad: &QuadratureSettings,
    left_anchor: f64,
    right_anchor: f64,
    pieces: &[Piece],
) -> Result<Vec<Interval>> {
    let live: Vec<Piece> = pieces.iter().copied().filter(|p| p.mass > 0.0).collect();
    let mut out = Vec::new();
    let mut cursor = left_anchor;
    for (k, p) in live.iter().enumerate() {
        let next = if k + 1 == live.len() {
            right_anchor
        } else {
            d.invert_mass(cursor, p.mass, Direction::Right, quad)?
        };
        if let Some(r) = p.region {
            out.push(Interval::new(cursor, next.max(cursor), r));
        }
        cursor = next;
    }
    Ok(out)
}

/// Stack pieces away from `anchor` toward the open end of a flank.
fn stack_outward(
    d: Density,
    quad: &QuadratureSettings,
    anchor: f64,
    dir: Direction,
    pieces: &[Piece],
) -> Result<Vec<Interval>> {
    let mut out = Vec::new();
    let mut cursor = anchor;
    for p in pieces {
        if p.mass <= 0.0 {
            continue;
        }
        let next = d.invert_mass(cursor, p.mass, dir, quad)?;
        if let Some(r) = p.region {
            out.push(match dir {
                Direction::Right => Interval::new(cursor, next, r),
                Direction::Left => Interval::new(next, cursor, r),
            });
        }
        cursor = next;
    }
    Ok(out)
}

fn is_negative_piece(iv: &Interval) -> bool {
    iv.right <= ENDPOINT_MERGE_TOL
}

/// Per side of the origin, merge each region's intervals into one and pack
/// them adjacent from the origin outward, preserving the per-side order of
/// outermost endpoints. Gaps are removed; masses are preserved by
/// reconstruction. Returns `applied = false` on a fixed point.
pub fn consolidate(c: &Configuration) -> Result<(Configuration, MoveReport)> {
    if !c.density().flags().radially_increasing {
        return Err(Error::InvalidInput(
            "consolidate requires a radially increasing density".into(),
        ));
    }
    let d = c.density();
    let quad = c.quadrature();
    let pieces = c.split_at_origin();

    // Per-side totals and outermost endpoints per region.
    let n = c.n_regions();
    let mut pos_mass = vec![0.0f64; n + 1];
    let mut neg_mass = vec![0.0f64; n + 1];
    let mut pos_outer = vec![f64::NEG_INFINITY; n + 1];
    let mut neg_outer = vec![f64::INFINITY; n + 1];
    for p in &pieces {
        let m = d.mass(p.left, p.right, quad)?;
        if is_negative_piece(p) {
            neg_mass[p.region] += m;
            neg_outer[p.region] = neg_outer[p.region].min(p.left);
        } else {
            pos_mass[p.region] += m;
            pos_outer[p.region] = pos_outer[p.region].max(p.right);
        }
    }
    for r in 1..=n {
        if pos_mass[r] + neg_mass[r] <= 0.0 {
            return Err(Error::InvalidInput(format!("region {r} has zero mass")));
        }
    }

    // Order each side by outermost endpoint, innermost first.
    let mut pos_regions: Vec<RegionId> = (1..=n).filter(|&r| pos_mass[r] > 0.0).collect();
    pos_regions.sort_by(|a, b| pos_outer[*a].partial_cmp(&pos_outer[*b]).unwrap());
    let mut neg_regions: Vec<RegionId> = (1..=n).filter(|&r| neg_mass[r] > 0.0).collect();
    neg_regions.sort_by(|a, b| neg_outer[*b].partial_cmp(&neg_outer[*a]).unwrap());

    let mut intervals = Vec::with_capacity(pos_regions.len() + neg_regions.len());
    let pos_pieces: Vec<Piece> = pos_regions
        .iter()
        .map(|&r| Piece {
            region: Some(r),
            mass: pos_mass[r],
        })
        .collect();
    intervals.extend(stack_outward(d, quad, 0.0, Direction::Right, &pos_pieces)?);
    let neg_pieces: Vec<Piece> = neg_regions
        .iter()
        .map(|&r| Piece {
            region: Some(r),
            mass: neg_mass[r],
        })
        .collect();
    intervals.extend(stack_outward(d, quad, 0.0, Direction::Left, &neg_pieces)?);

    // A region holding the innermost slot on both sides straddles the
    // origin; emit it as a single crossing interval.
    if let (Some(&rp), Some(&rn)) = (pos_regions.first(), neg_regions.first()) {
        if rp == rn {
            let right = intervals
                .iter()
                .find(|iv| iv.region == rp && iv.left >= -ENDPOINT_MERGE_TOL)
                .map(|iv| iv.right)
                .unwrap();
            let left = intervals
                .iter()
                .find(|iv| iv.region == rn && iv.right <= ENDPOINT_MERGE_TOL)
                .map(|iv| iv.left)
                .unwrap();
            intervals.retain(|iv| iv.region != rp);
            intervals.push(Interval::new(left, right, rp));
        }
    }

    let after = Configuration::new(d, intervals)?.with_quadrature(*quad);
    let applied = !same_layout(c, &after);
    if !applied {
        return unchanged("consolidate", c);
    }
    let report = make_report("consolidate", c, &after, true)?;
    Ok((after, report))
}

fn same_layout(a: &Configuration, b: &Configuration) -> bool {
    a.intervals().len() == b.intervals().len()
        && a.intervals().iter().zip(b.intervals()).all(|(x, y)| {
            x.region == y.region
                && (x.left - y.left).abs() <= 1e-10
                && (x.right - y.right).abs() <= 1e-10
        })
}

/// Side of the origin an interval occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Neg,
    Pos,
}

fn side_of(iv: &Interval) -> Option<Side> {
    if iv.right <= ENDPOINT_MERGE_TOL {
        Some(Side::Neg)
    } else if iv.left >= -ENDPOINT_MERGE_TOL {
        Some(Side::Pos)
    } else {
        None // crosses the origin
    }
}

/// Exchange the positions of regions `i` and `j`, restacking all endpoints
/// outward of the swap on the affected side(s) so every region keeps its
/// mass. The swap is kept only if it does not increase perimeter (beyond the
/// certificate tolerance); otherwise the original configuration is returned
/// with `applied = false`.
pub fn transpose(
    c: &Configuration,
    i: RegionId,
    j: RegionId,
) -> Result<(Configuration, MoveReport)> {
    if i == j {
        return Err(Error::InvalidTarget("transpose needs two distinct regions".into()));
    }
    let iv_i = single_interval(c, i)?;
    let iv_j = single_interval(c, j)?;
    let side_i = side_of(&iv_i)
        .ok_or_else(|| Error::InvalidTarget(format!("region {i} crosses the origin")))?;
    let side_j = side_of(&iv_j)
        .ok_or_else(|| Error::InvalidTarget(format!("region {j} crosses the origin")))?;

    if side_i == side_j {
        let adjacent = (iv_i.right - iv_j.left).abs() <= ENDPOINT_MERGE_TOL
            || (iv_j.right - iv_i.left).abs() <= ENDPOINT_MERGE_TOL;
        if !adjacent {
            return Err(Error::InvalidTarget(
                "same-side transposition requires adjacent intervals".into(),
            ));
        }
    }

    let d = c.density();
    let quad = c.quadrature();
    let mass_i = d.mass(iv_i.left, iv_i.right, quad)?;
    let mass_j = d.mass(iv_j.left, iv_j.right, quad)?;

    let mut intervals: Vec<Interval> = Vec::new();
    let mut touched_sides = vec![side_i];
    if side_j != side_i {
        touched_sides.push(side_j);
    }

    for iv in c.intervals() {
        let keep = match side_of(iv) {
            Some(s) if touched_sides.contains(&s) => false,
            _ => true,
        };
        if keep {
            intervals.push(*iv);
        }
    }

    for &side in &touched_sides {
        // Intervals on this side, innermost first.
        let mut slots: Vec<Interval> = c
            .intervals()
            .iter()
            .copied()
            .filter(|iv| side_of(iv) == Some(side))
            .collect();
        match side {
            Side::Pos => slots.sort_by(|a, b| a.left.partial_cmp(&b.left).unwrap()),
            Side::Neg => slots.sort_by(|a, b| b.right.partial_cmp(&a.right).unwrap()),
        }
        let swap_at = slots
            .iter()
            .position(|iv| iv.region == i || iv.region == j)
            .expect("swapped region is on this side");
        // Untouched inner slots.
        intervals.extend_from_slice(&slots[..swap_at]);
        // Slots from the swap outward must be packed.
        for w in slots[swap_at..].windows(2) {
            let (inner_outer, outer_inner) = match side {
                Side::Pos => (w[0].right, w[1].left),
                Side::Neg => (w[0].left, w[1].right),
            };
            if (inner_outer - outer_inner).abs() > ENDPOINT_MERGE_TOL {
                return Err(Error::InvalidTarget(
                    "transpose requires packed intervals outward of the swap".into(),
                ));
            }
        }
        let (anchor, dir) = match side {
            Side::Pos => (slots[swap_at].left, Direction::Right),
            Side::Neg => (slots[swap_at].right, Direction::Left),
        };
        // Each slot keeps its own enclosed mass; the swapped slots exchange
        // both label and mass.
        let pieces: Vec<Piece> = slots[swap_at..]
            .iter()
            .map(|iv| -> Result<Piece> {
                Ok(if iv.region == i {
                    Piece {
                        region: Some(j),
                        mass: mass_j,
                    }
                } else if iv.region == j {
                    Piece {
                        region: Some(i),
                        mass: mass_i,
                    }
                } else {
                    Piece {
                        region: Some(iv.region),
                        mass: d.mass(iv.left, iv.right, quad)?,
                    }
                })
            })
            .collect::<Result<_>>()?;
        intervals.extend(stack_outward(d, quad, anchor, dir, &pieces)?);
    }

    let candidate = Configuration::new(d, intervals)?.with_quadrature(*quad);
    let before_p = c.total_perimeter();
    if candidate.total_perimeter() > before_p + 1e-9 {
        return unchanged("transpose", c);
    }
    let report = make_report("transpose", c, &candidate, true)?;
    Ok((candidate, report))
}

fn single_interval(c: &Configuration, r: RegionId) -> Result<Interval> {
    let ivs = c.region_intervals(r);
    if ivs.len() != 1 {
        return Err(Error::InvalidTarget(format!(
            "region {r} must occupy a single interval (has {})",
            ivs.len()
        )));
    }
    Ok(ivs[0])
}

/// Remove one inner interval of an alternating pair by the two-sided inward
/// siphon: the left block is dragged right and the right block left, both at
/// speed 1/f, until an inner interval's mass is exhausted; endpoints are then
/// reconstructed exactly. With `pair = None` the first alternating pair is
/// taken, and a configuration without one is returned unchanged.
pub fn eliminate_alternating(
    c: &Configuration,
    pair: Option<(RegionId, RegionId)>,
) -> Result<(Configuration, MoveReport)> {
    if !c.density().flags().radially_increasing {
        return Err(Error::InvalidInput(
            "alternating elimination requires a radially increasing density".into(),
        ));
    }
    let class = c.classify();
    let (x, y) = match pair {
        Some((px, py)) => *class
            .alternating_pairs
            .iter()
            .find(|&&(a, b)| (a, b) == (px, py) || (a, b) == (py, px))
            .ok_or_else(|| {
                Error::InvalidTarget(format!("regions {px} and {py} are not alternating"))
            })?,
        None => match class.alternating_pairs.first() {
            Some(&p) => p,
            None => return unchanged("eliminate_alternating", c),
        },
    };

    let d = c.density();
    let quad = c.quadrature();
    let split = c.split_at_origin();
    let piece_of = |r: RegionId, side: Side| -> Interval {
        split
            .iter()
            .copied()
            .find(|p| {
                p.region == r
                    && match side {
                        Side::Neg => is_negative_piece(p),
                        Side::Pos => !is_negative_piece(p),
                    }
            })
            .expect("alternating region has one piece per side")
    };

    // Order so the layout reads A-, B-, A+, B+ left to right.
    let (a, b) = if piece_of(x, Side::Neg).left < piece_of(y, Side::Neg).left {
        (x, y)
    } else {
        (y, x)
    };
    let a_neg = piece_of(a, Side::Neg);
    let b_neg = piece_of(b, Side::Neg);
    let a_pos = piece_of(a, Side::Pos);
    let b_pos = piece_of(b, Side::Pos);

    let m_b_neg = d.mass(b_neg.left, b_neg.right, quad)?;
    let m_a_pos = d.mass(a_pos.left, a_pos.right, quad)?;
    // The siphon transfers mass at unit rate; the first inner interval to
    // empty fixes the stopping time.
    let t_star = m_b_neg.min(m_a_pos);

    let window = |lo: f64, hi: f64| -> Vec<Interval> {
        split
            .iter()
            .copied()
            .filter(|p| p.left >= lo - ENDPOINT_MERGE_TOL && p.right <= hi + ENDPOINT_MERGE_TOL)
            .collect()
    };

    // Negative window [A-.left, B-.right]: A- gains, B- loses.
    let neg_items = window(a_neg.left, b_neg.right);
    let mut neg_pieces = pieces_with_gaps(d, quad, &neg_items, a_neg.left, b_neg.right)?;
    adjust_edge_masses(&mut neg_pieces, a, t_star, b, -t_star);

    // Positive window [A+.left, B+.right]: A+ loses, B+ gains.
    let pos_items = window(a_pos.left, b_pos.right);
    let mut pos_pieces = pieces_with_gaps(d, quad, &pos_items, a_pos.left, b_pos.right)?;
    adjust_edge_masses(&mut pos_pieces, a, -t_star, b, t_star);

    let mut intervals: Vec<Interval> = c
        .intervals()
        .iter()
        .copied()
        .filter(|iv| {
            let in_neg = iv.left >= a_neg.left - ENDPOINT_MERGE_TOL
                && iv.right <= b_neg.right + ENDPOINT_MERGE_TOL;
            let in_pos = iv.left >= a_pos.left - ENDPOINT_MERGE_TOL
                && iv.right <= b_pos.right + ENDPOINT_MERGE_TOL;
            !(in_neg || in_pos)
        })
        .collect();
    intervals.extend(stack_between(d, quad, a_neg.left, b_neg.right, &neg_pieces)?);
    intervals.extend(stack_between(d, quad, a_pos.left, b_pos.right, &pos_pieces)?);

    let after = Configuration::new(d, intervals)?.with_quadrature(*quad);
    let report = make_report("eliminate_alternating", c, &after, true)?;
    Ok((after, report))
}

/// Add `da` to the first piece of region `ra` and `db` to the last piece of
/// region `rb` in a window piece list.
fn adjust_edge_masses(pieces: &mut [Piece], ra: RegionId, da: f64, rb: RegionId, db: f64) {
    if let Some(p) = pieces.iter_mut().find(|p| p.region == Some(ra)) {
        p.mass += da;
    }
    if let Some(p) = pieces.iter_mut().rev().find(|p| p.region == Some(rb)) {
        p.mass = (p.mass + db).max(0.0);
    }
}

/// Combine a region split across the origin into a single interval on one
/// side. The drag direction is the one with nonpositive initial dP/dt (ties
/// go right); log-concavity keeps d2P/dt2 negative so perimeter decreases
/// all the way to the collision.
pub fn merge_across_origin(
    c: &Configuration,
    r: RegionId,
) -> Result<(Configuration, MoveReport)> {
    if !c.density().flags().log_concave {
        return Err(Error::LogConcavityRequired);
    }
    let d = c.density();
    let quad = c.quadrature();
    let split = c.split_at_origin();
    let pieces_r: Vec<Interval> = split.iter().copied().filter(|p| p.region == r).collect();
    if pieces_r.len() != 2 {
        return Err(Error::InvalidTarget(format!(
            "region {r} must consist of exactly two intervals (has {})",
            pieces_r.len()
        )));
    }
    let (neg, pos) = (pieces_r[0], pieces_r[1]);
    if !(is_negative_piece(&neg) && !is_negative_piece(&pos)) {
        return Err(Error::InvalidTarget(format!(
            "region {r} does not straddle the origin"
        )));
    }
    let r2 = neg.right;
    let r3 = pos.left;

    // Endpoints strictly outside [r2, r3] are the dragged set.
    let targeted: Vec<f64> = c
        .distinct_endpoints()
        .into_iter()
        .filter(|&v| v < r2 - ENDPOINT_MERGE_TOL || v > r3 + ENDPOINT_MERGE_TOL)
        .collect();
    let mut rate = 0.0;
    for &v in &targeted {
        rate += d.log_deriv(v)?;
    }
    let dir = if rate <= 0.0 {
        Direction::Right
    } else {
        Direction::Left
    };

    let m_neg = d.mass(neg.left, neg.right, quad)?;
    let m_pos = d.mass(pos.left, pos.right, quad)?;

    // Flank items in split view, innermost first.
    let mut neg_flank: Vec<Interval> = split
        .iter()
        .copied()
        .filter(|p| p.right <= r2 + ENDPOINT_MERGE_TOL)
        .collect();
    neg_flank.sort_by(|a, b| b.right.partial_cmp(&a.right).unwrap());
    let mut pos_flank: Vec<Interval> = split
        .iter()
        .copied()
        .filter(|p| p.left >= r3 - ENDPOINT_MERGE_TOL)
        .collect();
    pos_flank.sort_by(|a, b| a.left.partial_cmp(&b.left).unwrap());

    let flank_pieces = |items: &[Interval], anchor: f64, dir: Direction| -> Result<Vec<Piece>> {
        let mut out = Vec::new();
        let mut cursor = anchor;
        for iv in items {
            let (inner, outer) = match dir {
                Direction::Right => (iv.left, iv.right),
                Direction::Left => (iv.right, iv.left),
            };
            if (inner - cursor).abs() > ENDPOINT_MERGE_TOL {
                let (lo, hi) = if cursor < inner {
                    (cursor, inner)
                } else {
                    (inner, cursor)
                };
                out.push(Piece {
                    region: None,
                    mass: d.mass(lo, hi, quad)?,
                });
            }
            out.push(Piece {
                region: Some(iv.region),
                mass: d.mass(iv.left.min(iv.right), iv.left.max(iv.right), quad)?,
            });
            cursor = outer;
        }
        Ok(out)
    };

    let mut neg_pieces = flank_pieces(&neg_flank, r2, Direction::Left)?;
    let mut pos_pieces = flank_pieces(&pos_flank, r3, Direction::Right)?;
    debug_assert_eq!(neg_pieces.first().map(|p| p.region), Some(Some(r)));
    debug_assert_eq!(pos_pieces.first().map(|p| p.region), Some(Some(r)));
    match dir {
        Direction::Right => {
            // Negative piece drains into the positive one.
            neg_pieces[0].mass = 0.0;
            pos_pieces[0].mass = m_pos + m_neg;
        }
        Direction::Left => {
            neg_pieces[0].mass = m_neg + m_pos;
            pos_pieces[0].mass = 0.0;
        }
    }

    // Untouched intervals strictly inside [r2, r3].
    let mut intervals: Vec<Interval> = c
        .intervals()
        .iter()
        .copied()
        .filter(|iv| {
            iv.left >= r2 - ENDPOINT_MERGE_TOL
                && iv.right <= r3 + ENDPOINT_MERGE_TOL
                && iv.region != r
        })
        .collect();
    intervals.extend(stack_outward(d, quad, r2, Direction::Left, &neg_pieces)?);
    intervals.extend(stack_outward(d, quad, r3, Direction::Right, &pos_pieces)?);

    let after = Configuration::new(d, intervals)?.with_quadrature(*quad);
    let report = make_report("merge_across_origin", c, &after, true)?;
    Ok((after, report))
}

/// Innermost same-side adjacent pair whose masses violate the condensed
/// ordering (inner strictly heavier than outer).
fn order_violation(c: &Configuration) -> Result<Option<(RegionId, RegionId)>> {
    let masses = c.region_masses()?;
    for side in [Side::Pos, Side::Neg] {
        let mut slots: Vec<Interval> = c
            .intervals()
            .iter()
            .copied()
            .filter(|iv| side_of(iv) == Some(side))
            .collect();
        match side {
            Side::Pos => slots.sort_by(|a, b| a.left.partial_cmp(&b.left).unwrap()),
            Side::Neg => slots.sort_by(|a, b| b.right.partial_cmp(&a.right).unwrap()),
        }
        for w in slots.windows(2) {
            // Only single-interval regions can be transposed.
            if c.region_intervals(w[0].region).len() != 1
                || c.region_intervals(w[1].region).len() != 1
            {
                continue;
            }
            if masses[&w[0].region] > masses[&w[1].region] + MASS_ORDER_TOL {
                return Ok(Some((w[0].region, w[1].region)));
            }
        }
    }
    Ok(None)
}

/// A region with presence on both sides of the origin, if any.
fn straddling_region(c: &Configuration) -> Option<RegionId> {
    let split = c.split_at_origin();
    let n = c.n_regions();
    for r in 1..=n {
        let has_neg = split
            .iter()
            .any(|p| p.region == r && is_negative_piece(p) && p.width() > ENDPOINT_MERGE_TOL);
        let has_pos = split
            .iter()
            .any(|p| p.region == r && !is_negative_piece(p) && p.width() > ENDPOINT_MERGE_TOL);
        if has_neg && has_pos {
            return Some(r);
        }
    }
    None
}

/// Apply moves until none applies. On a log-concave, radially increasing
/// density the fixpoint has one interval per region with masses growing
/// outward from the origin on each side.
pub fn reduce_to_fixpoint(c: &Configuration) -> Result<(Configuration, Vec<MoveReport>)> {
    let mut current = c.clone();
    let mut reports = Vec::new();
    let log_concave = c.density().flags().log_concave;
    for _ in 0..10_000 {
        let (next, rep) = consolidate(&current)?;
        if rep.applied {
            reports.push(rep);
            current = next;
            continue;
        }
        if let Some((i, j)) = order_violation(&current)? {
            let (next, rep) = transpose(&current, i, j)?;
            if rep.applied {
                reports.push(rep);
                current = next;
                continue;
            }
        }
        if !current.classify().alternating_pairs.is_empty() {
            let (next, rep) = eliminate_alternating(&current, None)?;
            if rep.applied {
                reports.push(rep);
                current = next;
                continue;
            }
        }
        if log_concave {
            if let Some(r) = straddling_region(&current) {
                let (next, rep) = merge_across_origin(&current, r)?;
                if rep.applied {
                    reports.push(rep);
                    current = next;
                    continue;
                }
            }
        }
        return Ok((current, reports));
    }
    Err(Error::NonConvergence(
        "fixpoint loop did not terminate within 10000 moves".into(),
    ))
}
