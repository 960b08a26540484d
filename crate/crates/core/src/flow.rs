//! First-variation endpoint dynamics at speed 1/f.
//!
//! Moving an endpoint at velocity `direction / f(x)` changes the enclosed
//! mass of its interval at unit rate and the total perimeter at rate
//! `direction * (log f)'(x)`. The integrator is an embedded Dormand-Prince
//! 5(4) pair with adaptive steps; steps are clamped so that no unfrozen
//! endpoint enters the origin guard band and no endpoint overtakes a
//! neighbor by more than the collision tolerance. Stop events (interval
//! collapse, endpoint meeting, fixed horizon) are localized by bisection on
//! time over the bracketing step.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::configuration::{Configuration, RegionId, ENDPOINT_MERGE_TOL};
use crate::density::{Density, Direction, QuadratureSettings};
use crate::error::{Error, Result};

/// Integration tolerances and guards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowSettings {
    pub dt_init: f64,
    pub error_tol: f64,
    pub origin_guard: f64,
    pub collision_tol: f64,
    pub max_steps: u64,
    /// Trajectory log cap; older records are thinned uniformly beyond it.
    pub max_log_records: usize,
}

impl Default for FlowSettings {
    fn default() -> Self {
        FlowSettings {
            dt_init: 1e-3,
            error_tol: 1e-8,
            origin_guard: 1e-9,
            collision_tol: 1e-10,
            max_steps: 10_000_000,
            max_log_records: 100_000,
        }
    }
}

impl FlowSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_init > 0.0)
            || !(self.error_tol > 0.0)
            || !(self.origin_guard > 0.0)
            || !(self.collision_tol > 0.0)
            || self.max_steps == 0
            || self.max_log_records == 0
        {
            return Err(Error::InvalidInput(
                "flow settings must all be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One moving or frozen endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowEndpoint {
    pub position: f64,
    pub direction: Direction,
    pub frozen: bool,
}

/// An interval between two endpoint slots, carrying its region label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowInterval {
    pub left: usize,
    pub right: usize,
    pub region: RegionId,
}

/// A set of endpoints under flow, with interval structure for mass and
/// perimeter instrumentation.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    density: Density,
    quad: QuadratureSettings,
    endpoints: Vec<FlowEndpoint>,
    intervals: Vec<FlowInterval>,
    time: f64,
    dt_hint: Option<f64>,
}

impl FlowState {
    pub fn new(
        density: Density,
        quad: QuadratureSettings,
        endpoints: Vec<FlowEndpoint>,
        intervals: Vec<FlowInterval>,
    ) -> Result<FlowState> {
        if endpoints.is_empty() {
            return Err(Error::InvalidInput("flow needs at least one endpoint".into()));
        }
        for ep in &endpoints {
            if !ep.position.is_finite() {
                return Err(Error::InvalidInput("endpoint positions must be finite".into()));
            }
            if !ep.frozen && ep.position == 0.0 && density.flags().vanishes_at_origin {
                return Err(Error::OriginSingularity { position: 0.0 });
            }
        }
        for iv in &intervals {
            if iv.left >= endpoints.len() || iv.right >= endpoints.len() {
                return Err(Error::InvalidInput("interval endpoint index out of range".into()));
            }
            if endpoints[iv.left].position > endpoints[iv.right].position {
                return Err(Error::InvalidInput(
                    "interval endpoints out of order".into(),
                ));
            }
        }
        Ok(FlowState {
            density,
            quad,
            endpoints,
            intervals,
            time: 0.0,
            dt_hint: None,
        })
    }

    /// Builds a flow over a configuration's distinct endpoints. `select`
    /// maps an endpoint value to `Some(direction)` to move it or `None` to
    /// freeze it.
    pub fn from_configuration(
        c: &Configuration,
        select: impl Fn(f64) -> Option<Direction>,
    ) -> Result<FlowState> {
        let values = c.distinct_endpoints();
        let endpoints: Vec<FlowEndpoint> = values
            .iter()
            .map(|&v| match select(v) {
                Some(dir) => FlowEndpoint {
                    position: v,
                    direction: dir,
                    frozen: false,
                },
                None => FlowEndpoint {
                    position: v,
                    direction: Direction::Right,
                    frozen: true,
                },
            })
            .collect();
        let slot_of = |x: f64| -> Result<usize> {
            values
                .iter()
                .position(|&v| (v - x).abs() <= ENDPOINT_MERGE_TOL)
                .ok_or_else(|| Error::InvalidInput(format!("no endpoint slot for {x}")))
        };
        let mut intervals = Vec::with_capacity(c.intervals().len());
        for iv in c.intervals() {
            intervals.push(FlowInterval {
                left: slot_of(iv.left)?,
                right: slot_of(iv.right)?,
                region: iv.region,
            });
        }
        let mut s = FlowState::new(c.density(), *c.quadrature(), endpoints, intervals)?;
        s.quad = *c.quadrature();
        Ok(s)
    }

    pub fn density(&self) -> Density {
        self.density
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn endpoints(&self) -> &[FlowEndpoint] {
        &self.endpoints
    }

    pub fn intervals(&self) -> &[FlowInterval] {
        &self.intervals
    }

    pub fn positions(&self) -> Vec<f64> {
        self.endpoints.iter().map(|e| e.position).collect()
    }

    /// Weighted perimeter over distinct endpoint values.
    pub fn perimeter(&self) -> f64 {
        let mut values = self.positions();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut total = 0.0;
        let mut last = f64::NEG_INFINITY;
        for v in values {
            if (v - last).abs() > ENDPOINT_MERGE_TOL {
                total += self.density.eval(v);
                last = v;
            }
        }
        total
    }

    /// Mass currently enclosed by interval slot `i`.
    pub fn interval_mass(&self, i: usize) -> Result<f64> {
        let iv = &self.intervals[i];
        let (a, b) = (
            self.endpoints[iv.left].position,
            self.endpoints[iv.right].position,
        );
        if a >= b {
            return Ok(0.0);
        }
        self.density.mass(a, b, &self.quad)
    }

    /// Per-region enclosed masses.
    pub fn region_masses(&self) -> Result<BTreeMap<RegionId, f64>> {
        let mut out = BTreeMap::new();
        for (i, iv) in self.intervals.iter().enumerate() {
            *out.entry(iv.region).or_insert(0.0) += self.interval_mass(i)?;
        }
        Ok(out)
    }

    /// Instantaneous dP/dt: sum of direction * (log f)'(x) over unfrozen
    /// endpoints.
    pub fn perimeter_rate(&self) -> Result<f64> {
        let mut total = 0.0;
        for ep in &self.endpoints {
            if ep.frozen {
                continue;
            }
            if ep.position == 0.0 && self.density.flags().vanishes_at_origin {
                return Err(Error::OriginSingularity { position: 0.0 });
            }
            total += ep.direction.signum() * self.density.log_deriv(ep.position)?;
        }
        Ok(total)
    }

    /// Instantaneous d2P/dt2: sum of (f f'' - f'^2) / f^3 over unfrozen
    /// endpoints (independent of direction).
    pub fn perimeter_rate2(&self) -> Result<f64> {
        let mut total = 0.0;
        for ep in &self.endpoints {
            if ep.frozen {
                continue;
            }
            let x = ep.position;
            if x == 0.0 && self.density.flags().vanishes_at_origin {
                return Err(Error::OriginSingularity { position: 0.0 });
            }
            let f = self.density.eval(x);
            let df = self.density.deriv(x);
            let ddf = self.density.second_deriv(x);
            total += (f * ddf - df * df) / (f * f * f);
        }
        Ok(total)
    }

    fn derivatives(&self, positions: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; positions.len()];
        for (i, ep) in self.endpoints.iter().enumerate() {
            if ep.frozen {
                continue;
            }
            let f = self.density.eval(positions[i]);
            if f <= 0.0 {
                return Err(Error::OriginSingularity {
                    position: positions[i],
                });
            }
            out[i] = ep.direction.signum() / f;
        }
        Ok(out)
    }

    /// True when some unfrozen endpoint is pushing toward the origin from
    /// close by: the 1/f speed blowup there is what starves the step size,
    /// so the flow stops at the guard and callers finish by reconstruction.
    fn pinned_at_guard(&self, settings: &FlowSettings) -> bool {
        self.endpoints.iter().any(|ep| {
            if ep.frozen || ep.position * ep.direction.signum() >= 0.0 {
                return false;
            }
            let f = self.density.eval(ep.position);
            if f <= 0.0 {
                return true;
            }
            // Either the minimum step would already enter the band, or the
            // endpoint sits deep in the stiff neighborhood of the origin
            // where the error control starves dt.
            let min_move = 1e-15 / f;
            ep.position.abs() - settings.origin_guard <= 2.0 * min_move
                || ep.position.abs() <= 1e4 * settings.origin_guard
        })
    }

    /// One accepted adaptive step (or an exact landing on `t_limit`).
    fn try_advance(&mut self, settings: &FlowSettings, t_limit: Option<f64>) -> Result<StepKind> {
        let mut dt = self.dt_hint.unwrap_or(settings.dt_init);
        if let Some(limit) = t_limit {
            let remaining = limit - self.time;
            if remaining <= 1e-15 * limit.abs().max(1.0) {
                self.time = limit;
                return Ok(StepKind::AtLimit);
            }
            dt = dt.min(remaining);
        }
        loop {
            if dt < 1e-15 {
                if self.pinned_at_guard(settings) {
                    return Ok(StepKind::GuardStop);
                }
                return Err(Error::StepFailure {
                    time: self.time,
                    dt,
                });
            }
            match self.rk_step(dt)? {
                RkResult::Accept { positions, est } => {
                    if est > settings.error_tol {
                        let shrink =
                            (settings.error_tol / est).powf(0.2).clamp(0.1, 0.9);
                        dt *= 0.9 * shrink;
                        continue;
                    }
                    // Reject steps that enter the origin guard band, hop
                    // across it, or overtake a neighbor beyond the collision
                    // tolerance. Flows never cross the origin.
                    let guard_ok = self.endpoints.iter().zip(&positions).all(|(ep, &p)| {
                        ep.frozen
                            || (p.abs() >= settings.origin_guard && p * ep.position >= 0.0)
                    });
                    let order_ok = positions
                        .windows(2)
                        .all(|w| w[0] <= w[1] + settings.collision_tol);
                    if !(guard_ok && order_ok) {
                        dt *= 0.5;
                        continue;
                    }
                    for (ep, &p) in self.endpoints.iter_mut().zip(&positions) {
                        ep.position = p;
                    }
                    self.time += dt;
                    let grow = if est > 0.0 {
                        (settings.error_tol / est).powf(0.2).clamp(0.2, 5.0)
                    } else {
                        5.0
                    };
                    self.dt_hint = Some((0.9 * dt * grow).max(1e-14));
                    let landed = t_limit
                        .is_some_and(|l| (l - self.time).abs() <= 1e-15 * l.abs().max(1.0));
                    return Ok(if landed {
                        StepKind::AtLimit
                    } else {
                        StepKind::Advanced
                    });
                }
                RkResult::Reject { .. } => {
                    dt *= 0.5;
                }
            }
        }
    }

    /// One Dormand-Prince 5(4) stage evaluation over `dt`.
    fn rk_step(&self, dt: f64) -> Result<RkResult> {
        const A: [[f64; 6]; 6] = [
            [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
            [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
            [
                19372.0 / 6561.0,
                -25360.0 / 2187.0,
                64448.0 / 6561.0,
                -212.0 / 729.0,
                0.0,
                0.0,
            ],
            [
                9017.0 / 3168.0,
                -355.0 / 33.0,
                46732.0 / 5247.0,
                49.0 / 176.0,
                -5103.0 / 18656.0,
                0.0,
            ],
            [
                35.0 / 384.0,
                0.0,
                500.0 / 1113.0,
                125.0 / 192.0,
                -2187.0 / 6784.0,
                11.0 / 84.0,
            ],
        ];
        const B5: [f64; 7] = [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
            0.0,
        ];
        const B4: [f64; 7] = [
            5179.0 / 57600.0,
            0.0,
            7571.0 / 16695.0,
            393.0 / 640.0,
            -92097.0 / 339200.0,
            187.0 / 2100.0,
            1.0 / 40.0,
        ];

        let y0 = self.positions();
        let n = y0.len();
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
        k.push(self.derivatives(&y0)?);
        for stage in 0..6 {
            let mut y = y0.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[stage][j];
                if a != 0.0 {
                    for i in 0..n {
                        y[i] += dt * a * kj[i];
                    }
                }
            }
            // A trial stage can momentarily poke past the origin where the
            // speed blows up; treat that as a rejected step, not an error.
            match self.derivatives(&y) {
                Ok(d) => k.push(d),
                Err(Error::OriginSingularity { .. }) => return Ok(RkResult::Reject {}),
                Err(e) => return Err(e),
            }
        }
        let mut y5 = y0.clone();
        let mut err = 0.0f64;
        for i in 0..n {
            let mut v5 = 0.0;
            let mut v4 = 0.0;
            for (j, kj) in k.iter().enumerate() {
                v5 += B5[j] * kj[i];
                v4 += B4[j] * kj[i];
            }
            y5[i] = y0[i] + dt * v5;
            err = err.max((dt * (v5 - v4)).abs());
        }
        if !err.is_finite() {
            return Ok(RkResult::Reject {});
        }
        Ok(RkResult::Accept {
            positions: y5,
            est: err,
        })
    }
}

enum RkResult {
    Accept { positions: Vec<f64>, est: f64 },
    Reject {},
}

enum StepKind {
    Advanced,
    AtLimit,
    GuardStop,
}

/// Advances the flow by one accepted adaptive step.
pub fn step(state: &FlowState, settings: &FlowSettings) -> Result<FlowState> {
    settings.validate()?;
    let mut s = state.clone();
    match s.try_advance(settings, None)? {
        StepKind::GuardStop => Err(Error::StepFailure {
            time: s.time,
            dt: 0.0,
        }),
        _ => Ok(s),
    }
}

/// Stop predicate for [`run_until`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopCondition {
    /// Stop when some interval of the region shrinks to the collision
    /// tolerance.
    IntervalCollapse(RegionId),
    /// Stop when endpoints in slots i and j meet (within collision
    /// tolerance).
    EndpointMeets(usize, usize),
    /// Integrate to a fixed horizon.
    TimeReached(f64),
}

/// Why the flow stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EventReached,
    TimeReached,
    /// An unfrozen endpoint reached the origin guard band; callers finish by
    /// reconstruction.
    OriginGuard,
}

/// One logged instrument row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub positions: Vec<f64>,
    pub perimeter: f64,
    /// Region masses indexed 1..=n (position 0 holds region 1).
    pub region_masses: Vec<f64>,
}

/// Accepted-step instrument log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub records: Vec<TrajectoryRecord>,
    pub n_regions: usize,
    keep_every: u64,
    counter: u64,
    cap: usize,
}

impl TrajectoryLog {
    fn new(n_regions: usize, cap: usize) -> TrajectoryLog {
        TrajectoryLog {
            records: Vec::new(),
            n_regions,
            keep_every: 1,
            counter: 0,
            cap,
        }
    }

    fn push(&mut self, state: &FlowState) -> Result<()> {
        if self.counter % self.keep_every == 0 {
            let masses = state.region_masses()?;
            let region_masses = (1..=self.n_regions)
                .map(|r| masses.get(&r).copied().unwrap_or(0.0))
                .collect();
            self.records.push(TrajectoryRecord {
                t: state.time,
                positions: state.positions(),
                perimeter: state.perimeter(),
                region_masses,
            });
            if self.records.len() >= self.cap {
                // Uniform thinning: keep every other record, double stride.
                let mut i = 0;
                self.records.retain(|_| {
                    let keep = i % 2 == 0;
                    i += 1;
                    keep
                });
                self.keep_every *= 2;
            }
        }
        self.counter += 1;
        Ok(())
    }
}

/// Result of [`run_until`].
#[derive(Debug, Clone)]
pub struct FlowOutcome {
    pub state: FlowState,
    pub log: TrajectoryLog,
    pub reason: StopReason,
}

/// Integrates with event detection; logs instruments at each accepted step.
pub fn run_until(
    state: &FlowState,
    stop: StopCondition,
    settings: &FlowSettings,
) -> Result<FlowOutcome> {
    settings.validate()?;
    let n_regions = state
        .intervals
        .iter()
        .map(|iv| iv.region)
        .max()
        .unwrap_or(0);
    let mut log = TrajectoryLog::new(n_regions, settings.max_log_records);
    let mut s = state.clone();
    s.dt_hint = None;
    log.push(&s)?;

    let event = |st: &FlowState| -> Option<f64> {
        match stop {
            StopCondition::IntervalCollapse(region) => {
                let w = st
                    .intervals
                    .iter()
                    .filter(|iv| iv.region == region)
                    .map(|iv| st.endpoints[iv.right].position - st.endpoints[iv.left].position)
                    .fold(f64::INFINITY, f64::min);
                if w.is_finite() {
                    Some(w - settings.collision_tol)
                } else {
                    None
                }
            }
            StopCondition::EndpointMeets(i, j) => Some(
                (st.endpoints[i].position - st.endpoints[j].position).abs()
                    - settings.collision_tol,
            ),
            StopCondition::TimeReached(_) => None,
        }
    };

    if let StopCondition::IntervalCollapse(region) = stop {
        if !s.intervals.iter().any(|iv| iv.region == region) {
            return Err(Error::InvalidTarget(format!(
                "flow has no interval for region {region}"
            )));
        }
    }
    if let StopCondition::EndpointMeets(i, j) = stop {
        if i >= s.endpoints.len() || j >= s.endpoints.len() {
            return Err(Error::InvalidTarget("endpoint slot out of range".into()));
        }
    }
    if let Some(g0) = event(&s) {
        if g0 <= 0.0 {
            return Ok(FlowOutcome {
                state: s,
                log,
                reason: StopReason::EventReached,
            });
        }
    }

    let t_limit = match stop {
        StopCondition::TimeReached(t) => {
            if !(t >= 0.0) {
                return Err(Error::InvalidInput("flow horizon must be >= 0".into()));
            }
            if t <= s.time {
                return Ok(FlowOutcome {
                    state: s,
                    log,
                    reason: StopReason::TimeReached,
                });
            }
            Some(t)
        }
        _ => None,
    };

    let mut steps: u64 = 0;
    loop {
        steps += 1;
        if steps > settings.max_steps {
            return Err(Error::MaxStepsExceeded(settings.max_steps));
        }
        let before = s.clone();
        match s.try_advance(settings, t_limit)? {
            StepKind::GuardStop => {
                log.push(&s)?;
                return Ok(FlowOutcome {
                    state: s,
                    log,
                    reason: StopReason::OriginGuard,
                });
            }
            StepKind::AtLimit => {
                log.push(&s)?;
                return Ok(FlowOutcome {
                    state: s,
                    log,
                    reason: StopReason::TimeReached,
                });
            }
            StepKind::Advanced => {
                if let Some(g) = event(&s) {
                    if g <= 0.0 {
                        let s_event = localize_event(&before, s.time, &event, settings)?;
                        log.push(&s_event)?;
                        return Ok(FlowOutcome {
                            state: s_event,
                            log,
                            reason: StopReason::EventReached,
                        });
                    }
                }
                log.push(&s)?;
            }
        }
    }
}

/// Bisection on time over the bracketing step [state.time, t_hi].
fn localize_event(
    state: &FlowState,
    t_hi: f64,
    event: &dyn Fn(&FlowState) -> Option<f64>,
    settings: &FlowSettings,
) -> Result<FlowState> {
    let mut lo = state.time;
    let mut hi = t_hi;
    let mut best = integrate_to(state, hi, settings)?;
    while hi - lo > settings.collision_tol {
        let mid = 0.5 * (lo + hi);
        let s_mid = integrate_to(state, mid, settings)?;
        match event(&s_mid) {
            Some(g) if g <= 0.0 => {
                hi = mid;
                best = s_mid;
            }
            _ => lo = mid,
        }
    }
    Ok(best)
}

/// Re-integrates a saved state to an exact target time.
fn integrate_to(state: &FlowState, t_target: f64, settings: &FlowSettings) -> Result<FlowState> {
    let mut s = state.clone();
    let mut steps: u64 = 0;
    while s.time < t_target {
        steps += 1;
        if steps > settings.max_steps {
            return Err(Error::MaxStepsExceeded(settings.max_steps));
        }
        match s.try_advance(settings, Some(t_target))? {
            StepKind::AtLimit => break,
            StepKind::GuardStop => break,
            StepKind::Advanced => {}
        }
    }
    Ok(s)
}

/// Writes the trajectory as RFC-4180 CSV with a mandatory header row:
/// `t, endpoint_0..endpoint_k, perimeter, mass_region_1..mass_region_n`.
pub fn write_trajectory_csv<W: Write>(log: &TrajectoryLog, w: &mut W) -> io::Result<()> {
    let k = log.records.first().map_or(0, |r| r.positions.len());
    let mut header = vec!["t".to_string()];
    header.extend((0..k).map(|i| format!("endpoint_{i}")));
    header.push("perimeter".to_string());
    header.extend((1..=log.n_regions).map(|r| format!("mass_region_{r}")));
    writeln!(w, "{}", header.join(","))?;
    for rec in &log.records {
        let mut row = Vec::with_capacity(k + 2 + log.n_regions);
        row.push(format!("{}", rec.t));
        row.extend(rec.positions.iter().map(|p| format!("{p}")));
        row.push(format!("{}", rec.perimeter));
        row.extend(rec.region_masses.iter().map(|m| format!("{m}")));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configuration::Interval;
    use approx::assert_relative_eq;

    fn abs_density() -> Density {
        Density::power(1.0).unwrap()
    }

    fn single_endpoint(x0: f64) -> FlowState {
        FlowState::new(
            abs_density(),
            QuadratureSettings::default(),
            vec![FlowEndpoint {
                position: x0,
                direction: Direction::Right,
                frozen: false,
            }],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn single_endpoint_closed_form() {
        // dx/dt = 1/x  =>  x(t) = sqrt(x0^2 + 2t).
        let s = single_endpoint(1.0);
        let out = run_until(&s, StopCondition::TimeReached(1.5), &FlowSettings::default()).unwrap();
        assert_eq!(out.reason, StopReason::TimeReached);
        assert_relative_eq!(out.state.positions()[0], 2.0, epsilon = 1e-8);
    }

    #[test]
    fn mirrored_trajectory_reflects() {
        let settings = FlowSettings::default();
        let right = run_until(
            &single_endpoint(1.0),
            StopCondition::TimeReached(2.0),
            &settings,
        )
        .unwrap();
        let left = FlowState::new(
            abs_density(),
            QuadratureSettings::default(),
            vec![FlowEndpoint {
                position: -1.0,
                direction: Direction::Left,
                frozen: false,
            }],
            vec![],
        )
        .unwrap();
        let left = run_until(&left, StopCondition::TimeReached(2.0), &settings).unwrap();
        assert_relative_eq!(
            right.state.positions()[0],
            -left.state.positions()[0],
            epsilon = 1e-10
        );
    }

    #[test]
    fn interval_mass_is_conserved() {
        let c = Configuration::new(abs_density(), vec![Interval::new(1.0, 2.0, 1)]).unwrap();
        let s = FlowState::from_configuration(&c, |_| Some(Direction::Right)).unwrap();
        let m0 = s.interval_mass(0).unwrap();
        let out = run_until(&s, StopCondition::TimeReached(1.5), &FlowSettings::default()).unwrap();
        let m1 = out.state.interval_mass(0).unwrap();
        assert!((m1 - m0).abs() <= 1e-8, "mass drift {}", (m1 - m0).abs());
        // Closed-form endpoints at t = 1.5.
        let p = out.state.positions();
        assert_relative_eq!(p[0], 2.0, epsilon = 1e-6);
        assert_relative_eq!(p[1], 7.0f64.sqrt(), epsilon = 1e-6);
    }

    #[test]
    fn perimeter_rate_examples() {
        let c = Configuration::new(abs_density(), vec![Interval::new(1.0, 2.0, 1)]).unwrap();
        let s = FlowState::from_configuration(&c, |_| Some(Direction::Right)).unwrap();
        assert_relative_eq!(s.perimeter_rate().unwrap(), 1.5, epsilon = 1e-12);

        let c2 = Configuration::new(
            Density::power(2.0).unwrap(),
            vec![Interval::new(1.0, 2.0, 1)],
        )
        .unwrap();
        let s2 = FlowState::from_configuration(&c2, |_| Some(Direction::Right)).unwrap();
        assert_relative_eq!(s2.perimeter_rate().unwrap(), 3.0, epsilon = 1e-12);

        // Symmetric pair moving right: odd function cancels.
        let c3 = Configuration::new(abs_density(), vec![Interval::new(-1.5, 1.5, 1)]).unwrap();
        let s3 = FlowState::from_configuration(&c3, |_| Some(Direction::Right)).unwrap();
        assert!(s3.perimeter_rate().unwrap().abs() <= 1e-14);
    }

    #[test]
    fn perimeter_rate2_examples() {
        let c = Configuration::new(abs_density(), vec![Interval::new(1.5, 2.0, 1)]).unwrap();
        let s = FlowState::from_configuration(&c, |v| {
            if (v - 2.0).abs() < 1e-9 {
                Some(Direction::Right)
            } else {
                None
            }
        })
        .unwrap();
        // (f f'' - f'^2)/f^3 at x=2 under |x|: (0 - 1)/8.
        assert_relative_eq!(s.perimeter_rate2().unwrap(), -0.125, epsilon = 1e-14);

        // Log-convex control at x = 1: 2/e > 0.
        let lc = Configuration::new(
            Density::log_convex_control(),
            vec![Interval::new(0.0, 1.0, 1)],
        )
        .unwrap();
        let s2 = FlowState::from_configuration(&lc, |v| {
            if (v - 1.0).abs() < 1e-9 {
                Some(Direction::Right)
            } else {
                None
            }
        })
        .unwrap();
        assert_relative_eq!(
            s2.perimeter_rate2().unwrap(),
            2.0 / std::f64::consts::E,
            epsilon = 1e-9
        );
    }

    #[test]
    fn time_zero_is_identity() {
        let s = single_endpoint(1.0);
        let out = run_until(&s, StopCondition::TimeReached(0.0), &FlowSettings::default()).unwrap();
        assert_eq!(out.log.records.len(), 1);
        assert_eq!(out.state.positions()[0], 1.0);
    }

    #[test]
    fn endpoint_meets_event() {
        // Two endpoints converging: left one moves right, right one frozen.
        let s = FlowState::new(
            abs_density(),
            QuadratureSettings::default(),
            vec![
                FlowEndpoint {
                    position: 1.0,
                    direction: Direction::Right,
                    frozen: false,
                },
                FlowEndpoint {
                    position: 2.0,
                    direction: Direction::Right,
                    frozen: true,
                },
            ],
            vec![FlowInterval {
                left: 0,
                right: 1,
                region: 1,
            }],
        )
        .unwrap();
        let settings = FlowSettings::default();
        let out = run_until(&s, StopCondition::IntervalCollapse(1), &settings).unwrap();
        assert_eq!(out.reason, StopReason::EventReached);
        let width = out.state.positions()[1] - out.state.positions()[0];
        assert!(width <= 10.0 * settings.collision_tol, "width {width}");
        // Collapse time for dx/dt = 1/x from 1 to 2 is (4-1)/2.
        assert_relative_eq!(out.state.time(), 1.5, epsilon = 1e-6);
    }

    #[test]
    fn guard_stop_near_origin() {
        // Endpoint moving left toward the origin must stop at the guard.
        let s = FlowState::new(
            abs_density(),
            QuadratureSettings::default(),
            vec![FlowEndpoint {
                position: 0.5,
                direction: Direction::Left,
                frozen: false,
            }],
            vec![],
        )
        .unwrap();
        let out = run_until(&s, StopCondition::TimeReached(10.0), &FlowSettings::default()).unwrap();
        assert_eq!(out.reason, StopReason::OriginGuard);
        assert!(out.state.positions()[0] > 0.0);
        assert!(out.state.positions()[0] < 1e-6);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let c = Configuration::new(abs_density(), vec![Interval::new(1.0, 2.0, 1)]).unwrap();
        let s = FlowState::from_configuration(&c, |_| Some(Direction::Right)).unwrap();
        let out = run_until(&s, StopCondition::TimeReached(0.5), &FlowSettings::default()).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&out.log, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,endpoint_0,endpoint_1,perimeter,mass_region_1"
        );
        assert!(lines.count() >= 2);
    }
}
