//! Characteristic-function exponents and the transforms defined on them.
//!
//! An infinitely divisible law with c.f. exp{-g(t)} is paired one-to-one with
//! its geometric version, the law with c.f. 1/(1+g(t)). This module holds the
//! parametric exponent family, both sides of that correspondence, geometric
//! compounding, and the exactness/admissibility checks built on them.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Tolerance for algebraic identities (round trips, scaling relations).
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Any denominator with modulus below this is treated as a pole.
pub const POLE_EPS: f64 = 1e-15;
/// Slack on minimum eigenvalues in positive-semidefiniteness checks.
pub const PSD_SLACK: f64 = 1e-8;
/// Largest admissible log-periodic perturbation amplitude.
pub const EPSILON_MAX: f64 = 0.1;
/// Residual below which a scaling relation is considered to hold exactly.
pub const ORDER_COLLAPSE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentKind {
    Stable,
    SemiStable,
    Gaussian,
}

/// Parametric exponent g(t) of a symmetric c.f.
///
/// Stable/Gaussian: g(t) = c|t|^alpha (alpha = 2 for Gaussian).
/// SemiStable: g(t) = c|t|^alpha (1 + eps cos(2 pi ln|t| / ln(1/b))), which
/// satisfies g(t) = a g(bt) with a b^alpha = 1 exactly (the cosine phase
/// shifts by one full period).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentDescriptor {
    kind: ExponentKind,
    alpha: f64,
    scale_c: f64,
    order_b: f64,
    multiplier_a: f64,
    epsilon: f64,
}

impl ExponentDescriptor {
    pub fn gaussian(scale_c: f64) -> Result<Self> {
        if !(scale_c.is_finite() && scale_c > 0.0) {
            return Err(Error::invalid("gaussian exponent requires c > 0"));
        }
        Ok(ExponentDescriptor {
            kind: ExponentKind::Gaussian,
            alpha: 2.0,
            scale_c,
            order_b: f64::NAN,
            multiplier_a: f64::NAN,
            epsilon: 0.0,
        })
    }

    pub fn stable(alpha: f64, scale_c: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(scale_c.is_finite() && scale_c > 0.0) {
            return Err(Error::invalid("stable exponent requires c > 0"));
        }
        Ok(ExponentDescriptor {
            kind: ExponentKind::Stable,
            alpha,
            scale_c,
            order_b: f64::NAN,
            multiplier_a: f64::NAN,
            epsilon: 0.0,
        })
    }

    /// Semi-stable exponent of order `order_b`; the multiplier a = b^{-alpha}
    /// is derived so that a b^alpha = 1 holds to machine precision.
    pub fn semi_stable(alpha: f64, order_b: f64, epsilon: f64, scale_c: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(scale_c.is_finite() && scale_c > 0.0) {
            return Err(Error::invalid("semi-stable exponent requires c > 0"));
        }
        if !(order_b.is_finite() && order_b > 0.0 && order_b < 1.0) {
            return Err(Error::invalid("semi-stable order requires 0 < b < 1"));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::invalid("perturbation amplitude must be >= 0"));
        }
        if epsilon > EPSILON_MAX {
            return Err(Error::invalid(format!(
                "perturbation amplitude {epsilon} exceeds admissible maximum {EPSILON_MAX}"
            )));
        }
        let multiplier_a = order_b.powf(-alpha);
        let d = ExponentDescriptor {
            kind: ExponentKind::SemiStable,
            alpha,
            scale_c,
            order_b,
            multiplier_a,
            epsilon,
        };
        d.check_order_relation()?;
        Ok(d)
    }

    /// Semi-stable exponent from the pair (a, b); the exponent alpha is the
    /// unique solution of a b^alpha = 1 and must land in (0, 2].
    pub fn semi_stable_from_pair(
        multiplier_a: f64,
        order_b: f64,
        epsilon: f64,
        scale_c: f64,
    ) -> Result<Self> {
        if !(multiplier_a.is_finite() && order_b.is_finite() && order_b > 0.0 && order_b < 1.0 && multiplier_a > 1.0)
        {
            return Err(Error::invalid("semi-stable pair requires 0 < b < 1 < a"));
        }
        let alpha = multiplier_a.ln() / (1.0 / order_b).ln();
        let mut d = ExponentDescriptor::semi_stable(alpha, order_b, epsilon, scale_c)?;
        d.multiplier_a = multiplier_a;
        d.check_order_relation()?;
        Ok(d)
    }

    fn check_order_relation(&self) -> Result<()> {
        let defect = (self.multiplier_a * self.order_b.powf(self.alpha) - 1.0).abs();
        if defect > ALGEBRAIC_TOL {
            return Err(Error::invalid(format!(
                "a b^alpha = 1 violated by {defect:.3e}"
            )));
        }
        if !(self.order_b < 1.0 && self.multiplier_a > 1.0) {
            return Err(Error::invalid("semi-stable requires 0 < b < 1 < a"));
        }
        Ok(())
    }

    pub fn kind(&self) -> ExponentKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scale_c(&self) -> f64 {
        self.scale_c
    }

    pub fn order_b(&self) -> Option<f64> {
        (self.kind == ExponentKind::SemiStable).then_some(self.order_b)
    }

    pub fn multiplier_a(&self) -> Option<f64> {
        (self.kind == ExponentKind::SemiStable).then_some(self.multiplier_a)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn label(&self) -> String {
        match self.kind {
            ExponentKind::Gaussian => format!("gaussian(c={})", self.scale_c),
            ExponentKind::Stable => format!("stable(alpha={},c={})", self.alpha, self.scale_c),
            ExponentKind::SemiStable => format!(
                "semistable(alpha={},b={},eps={},c={})",
                self.alpha, self.order_b, self.epsilon, self.scale_c
            ),
        }
    }

    /// g(t), forced to 0 at t = 0. Real and nonnegative for this symmetric
    /// family.
    pub fn eval_real(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::invalid("exponent argument must be finite"));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let at = t.abs();
        let base = self.scale_c * at.powf(self.alpha);
        Ok(match self.kind {
            ExponentKind::Gaussian | ExponentKind::Stable => base,
            ExponentKind::SemiStable => {
                let phase = 2.0 * std::f64::consts::PI * at.ln() / (1.0 / self.order_b).ln();
                base * (1.0 + self.epsilon * phase.cos())
            }
        })
    }

    /// Complex-valued view of the exponent, matching the c.f. algebra which
    /// is carried out in complex arithmetic throughout.
    pub fn eval(&self, t: f64) -> Result<Complex64> {
        self.eval_real(t).map(|g| Complex64::new(g, 0.0))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::invalid("exponent alpha must lie in (0, 2]"));
    }
    Ok(())
}

type EvalFn = dyn Fn(f64) -> Result<Complex64> + Send + Sync;

/// An evaluable characteristic function.
///
/// Evaluation is fallible so that poles and invalid arguments surface as
/// errors rather than infinities.
#[derive(Clone)]
pub struct CharFn {
    eval: Arc<EvalFn>,
    symmetric: bool,
    source: Option<ExponentDescriptor>,
}

impl std::fmt::Debug for CharFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CharFn")
            .field("symmetric", &self.symmetric)
            .field("source", &self.source)
            .finish()
    }
}

impl CharFn {
    pub fn from_fn(
        f: impl Fn(f64) -> Result<Complex64> + Send + Sync + 'static,
        symmetric: bool,
    ) -> Self {
        CharFn { eval: Arc::new(f), symmetric, source: None }
    }

    pub fn with_source(mut self, d: ExponentDescriptor) -> Self {
        self.source = Some(d);
        self
    }

    pub fn eval(&self, t: f64) -> Result<Complex64> {
        if !t.is_finite() {
            return Err(Error::invalid("c.f. argument must be finite"));
        }
        (self.eval)(t)
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn source(&self) -> Option<&ExponentDescriptor> {
        self.source.as_ref()
    }

    /// Verifies the CharFn contract on the given points: value 1 at t = 0,
    /// modulus at most 1 (plus tolerance), Hermitian symmetry, and realness
    /// when flagged symmetric.
    pub fn check_invariants_on(&self, points: &[f64]) -> Result<()> {
        for &t in points {
            let v = self.eval(t)?;
            if t == 0.0 && v != Complex64::new(1.0, 0.0) {
                return Err(Error::invalid(format!("c.f. value at 0 is {v}, not 1")));
            }
            if v.norm() > 1.0 + ALGEBRAIC_TOL {
                return Err(Error::invalid(format!("|c.f.({t})| = {} > 1", v.norm())));
            }
            let w = self.eval(-t)?;
            if (w - v.conj()).norm() > ALGEBRAIC_TOL {
                return Err(Error::invalid(format!("Hermitian symmetry violated at t = {t}")));
            }
            if self.symmetric && v.im.abs() > ALGEBRAIC_TOL {
                return Err(Error::invalid(format!("symmetric c.f. has Im = {} at t = {t}", v.im)));
            }
        }
        Ok(())
    }
}

/// Geometric version of the ID law with exponent g: t -> 1/(1 + g(t)).
pub fn gv_transform(desc: &ExponentDescriptor) -> CharFn {
    let d = *desc;
    CharFn::from_fn(
        move |t| {
            let g = d.eval_real(t)?;
            Ok(Complex64::new(1.0 / (1.0 + g), 0.0))
        },
        true,
    )
    .with_source(d)
}

/// ID law with exponent g: t -> exp{-g(t)}.
pub fn id_cf(desc: &ExponentDescriptor) -> CharFn {
    let d = *desc;
    CharFn::from_fn(
        move |t| {
            let g = d.eval_real(t)?;
            Ok(Complex64::new((-g).exp(), 0.0))
        },
        true,
    )
    .with_source(d)
}

/// Inverse of the geometric-version correspondence at a point:
/// g(t) = 1/phi(t) - 1.
pub fn gv_invert(phi: &CharFn, t: f64) -> Result<Complex64> {
    let v = phi.eval(t)?;
    if v.norm() < POLE_EPS {
        return Err(Error::Pole { t });
    }
    Ok(1.0 / v - 1.0)
}

/// C.f. of a geometric(p) random sum of i.i.d. summands with c.f. phi:
/// t -> p phi(t) / (1 - (1-p) phi(t)).
pub fn geometric_compound_cf(p: f64, phi: &CharFn) -> Result<CharFn> {
    if !(p.is_finite() && p > 0.0 && p <= 1.0) {
        return Err(Error::invalid("compounding probability must lie in (0, 1]"));
    }
    let inner = phi.clone();
    let symmetric = phi.is_symmetric();
    Ok(CharFn::from_fn(
        move |t| {
            let v = inner.eval(t)?;
            // p v / (1 - (1-p) v) = 1 exactly at a fixed point of the summand
            if v == Complex64::new(1.0, 0.0) {
                return Ok(v);
            }
            let den = 1.0 - (1.0 - p) * v;
            if den.norm() < POLE_EPS {
                return Err(Error::Pole { t });
            }
            Ok(p * v / den)
        },
        symmetric,
    ))
}

/// Exact c.f. of U_n: the geometric(1/n) sum of i.i.d. components with
/// c.f. exp{-g(t)/n}. Converges pointwise to 1/(1+g(t)).
pub fn un_cf(desc: &ExponentDescriptor, n: u64) -> Result<CharFn> {
    if n == 0 {
        return Err(Error::invalid("geometric sum index n must be >= 1"));
    }
    let d = *desc;
    let nf = n as f64;
    let component = CharFn::from_fn(
        move |t| {
            let g = d.eval_real(t)?;
            Ok(Complex64::new((-g / nf).exp(), 0.0))
        },
        true,
    );
    geometric_compound_cf(1.0 / nf, &component)
}

/// Sup over the grid of |phi(t) - p phi(ct)/(1 - q phi(ct))| for the GSS c.f.
/// phi(t) = 1/(1+|t|^alpha) and c = p^{1/alpha}. Mathematically zero.
pub fn gss_fixed_point_residual(alpha: f64, p: f64, grid: &GridSpec) -> Result<f64> {
    check_alpha(alpha)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid("GSS compounding probability must lie in (0, 1)"));
    }
    let q = 1.0 - p;
    let c = p.powf(1.0 / alpha);
    let phi = |t: f64| 1.0 / (1.0 + t.abs().powf(alpha));
    let mut worst = 0.0f64;
    for t in grid.points() {
        let inner = phi(c * t);
        let rhs = p * inner / (1.0 - q * inner);
        worst = worst.max((phi(t) - rhs).abs());
    }
    Ok(worst)
}

/// Sup over the grid of |g(t) - a g(bt)| for a semi-stable exponent. The
/// constructed family satisfies the relation exactly, so this is a float-
/// noise measurement.
pub fn semilaplace_scaling_residual(desc: &ExponentDescriptor, grid: &GridSpec) -> Result<f64> {
    let (a, b) = match (desc.multiplier_a(), desc.order_b()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::invalid("scaling residual requires a semi-stable exponent")),
    };
    let mut worst = 0.0f64;
    for t in grid.points_for_order(Some(b)) {
        let g = desc.eval_real(t)?;
        let gb = desc.eval_real(b * t)?;
        worst = worst.max((g - a * gb).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderCollapseReport {
    pub residual_b2: f64,
    pub collapses: bool,
}

/// Residual of the scaling relation at a *different* order b2 (with
/// a2 = b2^{-alpha}). For eps = 0 every order fits; for eps > 0 only orders
/// whose log-ratio to b1 divides the period do.
pub fn order_collapse_check(
    desc: &ExponentDescriptor,
    b2: f64,
    grid: &GridSpec,
) -> Result<OrderCollapseReport> {
    let b1 = desc
        .order_b()
        .ok_or_else(|| Error::invalid("order collapse check requires a semi-stable exponent"))?;
    if !(b2 > 0.0 && b2 < 1.0) {
        return Err(Error::invalid("alternative order requires 0 < b2 < 1"));
    }
    if b2 == b1 {
        return Err(Error::invalid("alternative order must differ from the exponent's order"));
    }
    let a2 = b2.powf(-desc.alpha());
    let mut worst = 0.0f64;
    for t in grid.points_for_order(Some(b1)) {
        let g = desc.eval_real(t)?;
        let gb = desc.eval_real(b2 * t)?;
        worst = worst.max((g - a2 * gb).abs());
    }
    Ok(OrderCollapseReport { residual_b2: worst, collapses: worst <= ORDER_COLLAPSE_TOL })
}

#[derive(Debug, Clone)]
pub struct GidCheckReport {
    /// (r, minimum eigenvalue of the Hermitian matrix for chi_r).
    pub min_eigenvalues: Vec<(f64, f64)>,
    pub pass: bool,
}

/// Necessary GID condition: for each r, chi_r(t) = exp{r (1 - 1/phi(t))} must
/// be positive semidefinite on the grid (Bochner). Builds the Hermitian
/// Toeplitz matrix [chi_r(t_i - t_j)] and reports its minimum eigenvalue;
/// pass requires every minimum eigenvalue >= -PSD_SLACK.
pub fn gid_necessary_check(
    phi: &CharFn,
    r_values: &[f64],
    grid: &GridSpec,
) -> Result<GidCheckReport> {
    if r_values.is_empty() {
        return Err(Error::invalid("at least one r value required"));
    }
    for &r in r_values {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::invalid("r values must be positive"));
        }
    }
    let n = grid.len();
    // 1 - 1/phi at the difference scale k*step, k = 0..n-1. The grid is
    // uniform, so t_i - t_j = (i - j) * step and the matrix is Toeplitz.
    // A merely tiny phi is fine (chi_r underflows to its limit 0); only an
    // exact zero of phi is a pole.
    let mut base = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * grid.step;
        let v = phi.eval(t)?;
        if v.norm() == 0.0 {
            return Err(Error::invalid(format!("pole of 1/phi at grid difference t = {t}")));
        }
        base.push(1.0 - 1.0 / v);
    }
    let mut min_eigenvalues = Vec::with_capacity(r_values.len());
    let mut pass = true;
    for &r in r_values {
        let row = base
            .iter()
            .map(|&z| {
                let chi = (r * z).exp();
                if chi.re.is_finite() && chi.im.is_finite() {
                    Ok(chi)
                } else {
                    Err(Error::invalid(format!("chi_{r} diverges near a zero of phi")))
                }
            })
            .collect::<Result<Vec<Complex64>>>()?;
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i >= j {
                row[i - j]
            } else {
                row[j - i].conj()
            }
        });
        let eigs = m.symmetric_eigenvalues();
        let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        pass &= min_eig >= -PSD_SLACK;
        min_eigenvalues.push((r, min_eig));
    }
    Ok(GidCheckReport { min_eigenvalues, pass })
}

#[derive(Debug, Clone)]
pub struct WitnessSearchOutcome {
    /// (r, grid description, minimum eigenvalue) for every probe.
    pub probes: Vec<(f64, String, f64)>,
    pub most_negative: f64,
    pub violation_found: bool,
}

/// Exploratory PSD-violation search over a set of r values and grids. The
/// outcome is recorded, not asserted: a finite double-precision grid may or
/// may not expose a violation even for laws known to fall outside GID.
pub fn gid_witness_search(
    phi: &CharFn,
    r_values: &[f64],
    grids: &[GridSpec],
) -> Result<WitnessSearchOutcome> {
    let mut probes = Vec::new();
    let mut most_negative = f64::INFINITY;
    for grid in grids {
        let report = gid_necessary_check(phi, r_values, grid)?;
        for (r, eig) in report.min_eigenvalues {
            most_negative = most_negative.min(eig);
            probes.push((
                r,
                format!("[{},{}] step {}", grid.t_min, grid.t_max, grid.step),
                eig,
            ));
        }
    }
    Ok(WitnessSearchOutcome {
        probes,
        most_negative,
        violation_found: most_negative < -PSD_SLACK,
    })
}
