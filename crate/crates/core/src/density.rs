//! Density families on the real line, weighted mass, and inverse-mass solving.
//!
//! A density is a nonnegative weight `f` on ℝ. The built-in families are
//! symmetric and radially increasing; the two power families vanish at the
//! origin and are log-concave away from it, while `LogConvexControl`
//! (`e^{x²}`) deliberately breaks log-concavity and serves as a negative
//! control in tests and experiments.
//!
//! Mass integrals use closed-form antiderivatives where they exist
//! (`|x|^p`, and `|x|^p (1+|x|)^q` with integer `q`) and adaptive Simpson
//! quadrature otherwise. Inverse mass solving brackets by doubling, bisects,
//! and polishes with Newton steps using `f` as the derivative of the mass map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Side of the axis a construction walks toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Right,
    Left,
}

impl Direction {
    /// +1.0 for `Right`, -1.0 for `Left`.
    pub fn signum(self) -> f64 {
        match self {
            Direction::Right => 1.0,
            Direction::Left => -1.0,
        }
    }

    pub fn flipped(self) -> Direction {
        match self {
            Direction::Right => Direction::Left,
            Direction::Left => Direction::Right,
        }
    }
}

/// Tolerances for adaptive quadrature and inverse-mass solving.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
    /// Bound on bracket doublings during inverse-mass root search.
    pub max_bracket_doublings: u32,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_depth: 60,
            max_bracket_doublings: 128,
        }
    }
}

impl QuadratureSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::InvalidInput(
                "quadrature tolerances must be positive".into(),
            ));
        }
        if self.max_depth < 10 {
            return Err(Error::InvalidInput(
                "quadrature max_depth must be at least 10".into(),
            ));
        }
        Ok(())
    }
}

/// Structural properties a density family declares about itself.
///
/// Flags are derived from the family, never user-set; `check_flags`
/// validates them numerically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityFlags {
    pub symmetric: bool,
    pub vanishes_at_origin: bool,
    pub radially_increasing: bool,
    pub log_concave: bool,
}

/// A built-in density family.
///
/// * `Power { p }`: `f(x) = |x|^p`, `p > 0`
/// * `PowerComposite { p, q }`: `f(x) = |x|^p (1+|x|)^q`, `p > 0`, `q ≥ 0`
/// * `LogConvexControl`: `f(x) = e^{x²}`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Density {
    Power { p: f64 },
    PowerComposite { p: f64, q: f64 },
    LogConvexControl,
}

impl Density {
    pub fn power(p: f64) -> Result<Density> {
        let d = Density::Power { p };
        d.validate()?;
        Ok(d)
    }

    pub fn power_composite(p: f64, q: f64) -> Result<Density> {
        let d = Density::PowerComposite { p, q };
        d.validate()?;
        Ok(d)
    }

    pub fn log_convex_control() -> Density {
        Density::LogConvexControl
    }

    /// Parameter sanity for values that arrived via deserialization.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Density::Power { p } => {
                if !(p > 0.0) || !p.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "power density needs p > 0, got {p}"
                    )));
                }
            }
            Density::PowerComposite { p, q } => {
                if !(p > 0.0) || !p.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "power_composite density needs p > 0, got {p}"
                    )));
                }
                if !(q >= 0.0) || !q.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "power_composite density needs q >= 0, got {q}"
                    )));
                }
            }
            Density::LogConvexControl => {}
        }
        Ok(())
    }

    pub fn flags(&self) -> DensityFlags {
        match self {
            Density::Power { .. } | Density::PowerComposite { .. } => DensityFlags {
                symmetric: true,
                vanishes_at_origin: true,
                radially_increasing: true,
                log_concave: true,
            },
            Density::LogConvexControl => DensityFlags {
                symmetric: true,
                vanishes_at_origin: false,
                radially_increasing: true,
                log_concave: false,
            },
        }
    }

    /// Whether the theorem hypotheses (symmetric, vanishing at the origin,
    /// radially increasing, log-concave) all hold.
    pub fn satisfies_hypotheses(&self) -> bool {
        let f = self.flags();
        f.symmetric && f.vanishes_at_origin && f.radially_increasing && f.log_concave
    }

    /// f(x).
    pub fn eval(&self, x: f64) -> f64 {
        let r = x.abs();
        match *self {
            Density::Power { p } => r.powf(p),
            Density::PowerComposite { p, q } => r.powf(p) * (1.0 + r).powf(q),
            Density::LogConvexControl => (x * x).exp(),
        }
    }

    /// f'(x). Not meaningful at x = 0 for the vanishing families.
    pub fn deriv(&self, x: f64) -> f64 {
        let r = x.abs();
        let s = if x < 0.0 { -1.0 } else { 1.0 };
        match *self {
            Density::Power { p } => s * p * r.powf(p - 1.0),
            Density::PowerComposite { p, q } => {
                // d/dr [r^p (1+r)^q] = r^{p-1} (1+r)^{q-1} (p(1+r) + q r)
                s * r.powf(p - 1.0) * (1.0 + r).powf(q - 1.0) * (p * (1.0 + r) + q * r)
            }
            Density::LogConvexControl => 2.0 * x * (x * x).exp(),
        }
    }

    /// f''(x) away from the origin (f is even, so f'' is even).
    pub fn second_deriv(&self, x: f64) -> f64 {
        let r = x.abs();
        match *self {
            Density::Power { p } => p * (p - 1.0) * r.powf(p - 2.0),
            Density::PowerComposite { p, q } => {
                let u = p * (1.0 + r) + q * r;
                r.powf(p - 2.0)
                    * (1.0 + r).powf(q - 2.0)
                    * ((p - 1.0) * (1.0 + r) * u + (q - 1.0) * r * u + (p + q) * r * (1.0 + r))
            }
            Density::LogConvexControl => (4.0 * x * x + 2.0) * (x * x).exp(),
        }
    }

    /// (log f)'(x) = f'(x)/f(x), in closed form per family.
    ///
    /// Errors with `OriginSingularity` at x = 0 for families with f(0) = 0.
    pub fn log_deriv(&self, x: f64) -> Result<f64> {
        match *self {
            Density::Power { p } => {
                if x == 0.0 {
                    return Err(Error::OriginSingularity { position: x });
                }
                Ok(p / x)
            }
            Density::PowerComposite { p, q } => {
                if x == 0.0 {
                    return Err(Error::OriginSingularity { position: x });
                }
                let s = if x < 0.0 { -1.0 } else { 1.0 };
                Ok(p / x + s * q / (1.0 + x.abs()))
            }
            Density::LogConvexControl => Ok(2.0 * x),
        }
    }

    /// Signed mass of [0, x] (negative for x < 0); symmetric densities make
    /// this an odd function of x.
    pub fn cumulative(&self, x: f64, quad: &QuadratureSettings) -> Result<f64> {
        let r = x.abs();
        let s = if x < 0.0 { -1.0 } else { 1.0 };
        match *self {
            Density::Power { p } => Ok(s * r.powf(p + 1.0) / (p + 1.0)),
            Density::PowerComposite { p, q } if is_small_integer(q) => {
                // Binomial expansion of (1+r)^q gives an exact antiderivative.
                let n = q as u32;
                let mut acc = 0.0;
                let mut binom = 1.0f64;
                for k in 0..=n {
                    let e = p + 1.0 + k as f64;
                    acc += binom * r.powf(e) / e;
                    binom = binom * (n - k) as f64 / (k + 1) as f64;
                }
                Ok(s * acc)
            }
            _ => Ok(s * adaptive_simpson(&|t| self.eval(t), 0.0, r, quad)?),
        }
    }

    /// Weighted mass of [a, b]. Requires a <= b.
    pub fn mass(&self, a: f64, b: f64, quad: &QuadratureSettings) -> Result<f64> {
        if !(a <= b) {
            return Err(Error::InvalidInput(format!(
                "mass needs a <= b, got [{a}, {b}]"
            )));
        }
        if a == b {
            return Ok(0.0);
        }
        let m = self.cumulative(b, quad)? - self.cumulative(a, quad)?;
        // Guard against quadrature round-off driving a tiny mass negative.
        Ok(m.max(0.0))
    }

    /// Solve for `b` with mass(a, b) = m (Right: b >= a) or
    /// mass(b, a) = m (Left: b <= a).
    ///
    /// Brackets by doubling an initial unit step, bisects the bracket down to
    /// 1e-12 in x, then polishes with at most five Newton steps using f as the
    /// derivative of the mass map.
    pub fn invert_mass(
        &self,
        a: f64,
        m: f64,
        direction: Direction,
        quad: &QuadratureSettings,
    ) -> Result<f64> {
        if !(m >= 0.0) || !m.is_finite() {
            return Err(Error::InvalidInput(format!(
                "invert_mass needs a finite mass >= 0, got {m}"
            )));
        }
        if m == 0.0 {
            return Ok(a);
        }
        let sign = direction.signum();
        let ca = self.cumulative(a, quad)?;
        // g(b) = signed mass between a and b minus the target; increasing in
        // the walk direction.
        let g = |b: f64| -> Result<f64> { Ok(sign * (self.cumulative(b, quad)? - ca) - m) };

        // Bracket by doubling.
        let mut step = 1.0f64;
        let mut lo = a;
        let mut hi = a + sign * step;
        let mut g_hi = g(hi)?;
        let mut doublings = 0;
        while g_hi < 0.0 {
            doublings += 1;
            if doublings > quad.max_bracket_doublings {
                return Err(Error::NonConvergence(format!(
                    "invert_mass bracket expansion exceeded {} doublings (a={a}, m={m})",
                    quad.max_bracket_doublings
                )));
            }
            lo = hi;
            step *= 2.0;
            hi = a + sign * step;
            g_hi = g(hi)?;
        }

        // Bisection to 1e-12 on x. `lo` and `hi` are in walk order, which for
        // Left means lo > hi numerically; midpoints work either way.
        if g(lo)? > 0.0 {
            // Only possible through round-off at m ~ 0; lo already overshoots.
            return Ok(lo);
        }
        let mut mid = 0.5 * (lo + hi);
        while (hi - lo).abs() > 1e-12 {
            if mid == lo || mid == hi {
                break;
            }
            if g(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            mid = 0.5 * (lo + hi);
        }

        // Newton polish; dM/db = f(b) along the walk direction.
        let tol = quad.abs_tol.max(quad.rel_tol * m);
        let mut b = mid;
        for _ in 0..5 {
            let res = g(b)?;
            if res.abs() <= tol {
                break;
            }
            let fb = self.eval(b);
            if fb <= 0.0 {
                break;
            }
            let next = b - sign * res / fb;
            // Keep the iterate inside the bracket.
            let (x0, x1) = if lo <= hi { (lo, hi) } else { (hi, lo) };
            b = next.clamp(x0, x1);
        }
        Ok(b)
    }

    /// Validate every declared flag on a symmetric sample grid avoiding x = 0.
    ///
    /// Errors with `FlagViolation` if a flag declared true fails numerically;
    /// otherwise returns the per-flag report (including observed failures of
    /// flags declared false, e.g. log-concavity under `LogConvexControl`).
    pub fn check_flags(&self, samples: usize) -> Result<FlagReport> {
        if samples < 100 {
            return Err(Error::InvalidInput(format!(
                "check_flags needs at least 100 samples, got {samples}"
            )));
        }
        let flags = self.flags();
        let half = samples / 2;
        // Log-spaced radii in [1e-3, 20], mirrored across the origin.
        let radii: Vec<f64> = (0..half)
            .map(|i| {
                let t = i as f64 / (half - 1) as f64;
                1e-3 * (20.0f64 / 1e-3).powf(t)
            })
            .collect();

        let mut checks = Vec::new();

        // Symmetry: f(x) = f(-x).
        {
            let mut worst = 0.0f64;
            let mut witness = None;
            for &r in &radii {
                let d = (self.eval(r) - self.eval(-r)).abs();
                let scale = 1.0 + self.eval(r).abs();
                if d / scale > worst {
                    worst = d / scale;
                    witness = Some(r);
                }
            }
            let observed = worst <= 1e-12;
            checks.push(FlagCheck {
                flag: "symmetric",
                declared: flags.symmetric,
                observed,
                worst_violation: worst,
                witness,
            });
        }

        // Zero at the origin: f(0) = 0 exactly when declared.
        {
            let f0 = self.eval(0.0);
            let observed = f0 == 0.0;
            checks.push(FlagCheck {
                flag: "vanishes_at_origin",
                declared: flags.vanishes_at_origin,
                observed,
                worst_violation: f0,
                witness: if observed { None } else { Some(0.0) },
            });
        }

        // Radially increasing: f'(x) >= 0 for x > 0.
        {
            let mut worst = 0.0f64;
            let mut witness = None;
            for &r in &radii {
                let v = -self.deriv(r);
                if v > worst {
                    worst = v;
                    witness = Some(r);
                }
            }
            let observed = worst <= 1e-12;
            checks.push(FlagCheck {
                flag: "radially_increasing",
                declared: flags.radially_increasing,
                observed,
                worst_violation: worst,
                witness,
            });
        }

        // Log-concavity: (log f)'' = (f f'' - f'^2)/f^2 < 0 for x != 0.
        {
            let mut worst = f64::NEG_INFINITY;
            let mut witness = None;
            for &r in &radii {
                let f = self.eval(r);
                let v = (f * self.second_deriv(r) - self.deriv(r).powi(2)) / (f * f);
                if v > worst {
                    worst = v;
                    witness = Some(r);
                }
            }
            let observed = worst < 0.0;
            checks.push(FlagCheck {
                flag: "log_concave",
                declared: flags.log_concave,
                observed,
                worst_violation: worst.max(0.0),
                witness: if observed { None } else { witness },
            });
        }

        for c in &checks {
            if c.declared && !c.observed {
                return Err(Error::FlagViolation {
                    flag: c.flag,
                    witness: c.witness.unwrap_or(f64::NAN),
                    magnitude: c.worst_violation,
                });
            }
        }
        let all_consistent = checks.iter().all(|c| c.declared == c.observed);
        Ok(FlagReport {
            checks,
            all_consistent,
        })
    }
}

/// Outcome of validating one declared flag.
#[derive(Debug, Clone, Serialize)]
pub struct FlagCheck {
    pub flag: &'static str,
    pub declared: bool,
    pub observed: bool,
    /// Worst violation magnitude seen on the grid (0 when the property holds).
    pub worst_violation: f64,
    /// Grid point realizing the worst violation, if any.
    pub witness: Option<f64>,
}

/// Full flag-validation report for a density.
#[derive(Debug, Clone, Serialize)]
pub struct FlagReport {
    pub checks: Vec<FlagCheck>,
    pub all_consistent: bool,
}

fn is_small_integer(q: f64) -> bool {
    q >= 0.0 && q <= 64.0 && q.fract() == 0.0
}

/// Adaptive Simpson quadrature of `f` over [a, b] with Richardson correction.
pub(crate) fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    quad: &QuadratureSettings,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let tol = quad.abs_tol.max(quad.rel_tol * whole.abs());
    simpson_rec(f, a, m, b, fa, fm, fb, whole, tol, quad.max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    m: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::NonConvergence(
            "adaptive Simpson exceeded max refinement depth".into(),
        ));
    }
    Ok(
        simpson_rec(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + simpson_rec(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?,
    )
}
