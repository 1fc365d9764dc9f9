//! Cost-balanced robust risk and deviation.
//!
//! For a position `X` with paired cost rates `(g, l)`, the capital `x` is
//! chosen to minimise the worst-case expected cost of over- and
//! under-reserving,
//!
//! ```text
//! f(x) = sup_{Q in Q_rho} E_Q[ loss(X, x) ],    R = -argmin f,    RD = min f,
//! ```
//!
//! where the per-scenario loss depends on the [`LossKind`].

mod dual;
mod lp;

use std::fmt;
use std::str::FromStr;

pub use dual::dual_sup;
pub use lp::dual_sup_lp_oracle;

use crate::empirical::{sorted_lower_quantile, sorted_lower_tail_mean, Sample, WeightedMeasure};
use crate::error::{Error, Result};
use crate::riskmeasures::RiskMeasure;

/// Relative slope tolerance used to decide that `f` has stopped decreasing.
const SLOPE_TOL: f64 = 1e-12;
const MAX_BISECTIONS: usize = 400;

#[derive(Debug, Clone, PartialEq)]
enum Rates {
    Constant(f64),
    Series(Vec<f64>),
}

impl Rates {
    fn at(&self, i: usize) -> f64 {
        match self {
            Rates::Constant(v) => *v,
            Rates::Series(v) => v[i],
        }
    }

    fn mean(&self) -> f64 {
        match self {
            Rates::Constant(v) => *v,
            Rates::Series(v) => v.iter().sum::<f64>() / v.len() as f64,
        }
    }

    fn max(&self) -> f64 {
        match self {
            Rates::Constant(v) => *v,
            Rates::Series(v) => v.iter().copied().fold(0.0, f64::max),
        }
    }

    fn len(&self) -> Option<usize> {
        match self {
            Rates::Constant(_) => None,
            Rates::Series(v) => Some(v.len()),
        }
    }

    fn slice(&self, start: usize, end: usize) -> Rates {
        match self {
            Rates::Constant(v) => Rates::Constant(*v),
            Rates::Series(v) => Rates::Series(v[start..end].to_vec()),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let bad = match self {
            Rates::Constant(v) => !(v.is_finite() && *v >= 0.0),
            Rates::Series(v) => v.is_empty() || v.iter().any(|r| !(r.is_finite() && *r >= 0.0)),
        };
        if bad {
            return Err(Error::domain(format!(
                "{name} must be a non-empty set of finite, nonnegative rates"
            )));
        }
        Ok(())
    }
}

/// Paired overestimation (`g`) and underestimation (`l`) cost rates.
///
/// Either side may be a scalar that is broadcast to every scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct CostRates {
    g: Rates,
    l: Rates,
}

impl CostRates {
    pub fn constant(g: f64, l: f64) -> Result<Self> {
        Self::build(Rates::Constant(g), Rates::Constant(l))
    }

    pub fn series(g: Vec<f64>, l: Vec<f64>) -> Result<Self> {
        Error::check_len(g.len(), l.len())?;
        Self::build(Rates::Series(g), Rates::Series(l))
    }

    /// Per-scenario `g` with a constant `l`.
    pub fn with_constant_l(g: Vec<f64>, l: f64) -> Result<Self> {
        Self::build(Rates::Series(g), Rates::Constant(l))
    }

    /// Constant `g` with per-scenario `l`.
    pub fn with_constant_g(g: f64, l: Vec<f64>) -> Result<Self> {
        Self::build(Rates::Constant(g), Rates::Series(l))
    }

    fn build(g: Rates, l: Rates) -> Result<Self> {
        g.validate("g")?;
        l.validate("l")?;
        if !(g.mean() + l.mean() > 0.0) {
            return Err(Error::DegenerateCost);
        }
        Ok(Self { g, l })
    }

    pub fn g(&self, i: usize) -> f64 {
        self.g.at(i)
    }

    pub fn l(&self, i: usize) -> f64 {
        self.l.at(i)
    }

    pub fn mean_g(&self) -> f64 {
        self.g.mean()
    }

    pub fn mean_l(&self) -> f64 {
        self.l.mean()
    }

    /// Number of scenarios pinned by the rate series, `None` if both are scalars.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> Option<usize> {
        self.g.len().or(self.l.len())
    }

    /// Rates restricted to scenarios `start..end`.
    pub fn window(&self, start: usize, end: usize) -> Result<Self> {
        Self::build(self.g.slice(start, end), self.l.slice(start, end))
    }

    /// Checks that the rates can be paired with `n` scenarios.
    pub fn check_len(&self, n: usize) -> Result<()> {
        if let Some(m) = self.g.len() {
            Error::check_len(n, m)?;
        }
        if let Some(m) = self.l.len() {
            Error::check_len(n, m)?;
        }
        Ok(())
    }
}

/// Which capital loss functional is minimised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// `(X - x)^+ g + (X - x)^- l`
    Ours,
    /// `-x g + (X - x)^-`
    B,
    /// `-x g + (X - x)^- l`
    C,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [LossKind::Ours, LossKind::B, LossKind::C];

    /// Value and right derivative in `x` of one scenario's loss.
    #[inline]
    fn eval(self, xi: f64, g: f64, l: f64, x: f64) -> (f64, f64) {
        let up = (xi - x).max(0.0);
        let down = (x - xi).max(0.0);
        let below = xi <= x;
        match self {
            LossKind::Ours => (up * g + down * l, if below { l } else { -g }),
            LossKind::B => (-x * g + down, -g + if below { 1.0 } else { 0.0 }),
            LossKind::C => (-x * g + down * l, -g + if below { l } else { 0.0 }),
        }
    }

    /// Loss of one scenario with outcome `xi` at capital `x`.
    pub fn loss(self, xi: f64, g: f64, l: f64, x: f64) -> f64 {
        self.eval(xi, g, l, x).0
    }

    fn slope_bound(self, costs: &CostRates) -> f64 {
        match self {
            LossKind::Ours | LossKind::C => costs.g.max() + costs.l.max(),
            LossKind::B => costs.g.max() + 1.0,
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Ours => "OURS",
            LossKind::B => "B",
            LossKind::C => "C",
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "OURS" | "A" => Ok(LossKind::Ours),
            "B" => Ok(LossKind::B),
            "C" => Ok(LossKind::C),
            other => Err(Error::domain(format!("unknown loss kind {other:?}"))),
        }
    }
}

/// Optimal capital and the associated worst-case cost.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustResult {
    pub risk: f64,
    pub deviation: f64,
    pub minimizer: f64,
    pub argmax_measure: WeightedMeasure,
}

/// Per-scenario capital loss at reserve level `x`.
pub fn loss_profile(kind: LossKind, sample: &Sample, costs: &CostRates, x: f64) -> Result<Vec<f64>> {
    costs.check_len(sample.len())?;
    if !x.is_finite() {
        return Err(Error::domain("capital level must be finite"));
    }
    Ok(sample
        .iter()
        .enumerate()
        .map(|(i, &xi)| kind.eval(xi, costs.g(i), costs.l(i), x).0)
        .collect())
}

fn cost_level(costs: &CostRates) -> f64 {
    let g = costs.mean_g();
    g / (g + costs.mean_l())
}

/// Solution under the reference measure alone: minus the lower quantile of
/// `X` at level `E[g] / (E[g] + E[l])`.
pub fn closed_form_risk(sample: &Sample, costs: &CostRates) -> Result<f64> {
    costs.check_len(sample.len())?;
    let c = cost_level(costs);
    if c <= 0.0 {
        return Ok(-sample.min());
    }
    Ok(-sorted_lower_quantile(&sample.sorted(), c))
}

/// Minimum expected cost under the reference measure:
/// `E[g] * (E[X] - E[X | X in lower c-tail])`, where the tail carries exactly
/// probability `c` (the boundary atom is split).
pub fn closed_form_deviation(sample: &Sample, costs: &CostRates) -> Result<f64> {
    costs.check_len(sample.len())?;
    let c = cost_level(costs);
    if c <= 0.0 {
        return Ok(0.0);
    }
    let tail = sorted_lower_tail_mean(&sample.sorted(), c);
    Ok((costs.mean_g() * (sample.mean() - tail)).max(0.0))
}

struct Objective<'a> {
    kind: LossKind,
    x: &'a [f64],
    costs: &'a CostRates,
    spec: &'a RiskMeasure,
}

impl Objective<'_> {
    fn profile(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        self.x
            .iter()
            .enumerate()
            .map(|(i, &xi)| self.kind.eval(xi, self.costs.g(i), self.costs.l(i), t))
            .unzip()
    }

    fn value(&self, t: f64) -> f64 {
        dual::sup_with_weights(&self.profile(t).0, self.spec).0
    }

    fn right_derivative(&self, t: f64) -> f64 {
        let (loss, slope) = self.profile(t);
        dual::sup_right_derivative(&loss, &slope, self.spec)
    }

    fn result(&self, t: f64) -> RobustResult {
        let (value, weights) = dual::sup_with_weights(&self.profile(t).0, self.spec);
        RobustResult {
            // written as a difference so that a zero minimiser reports +0
            risk: 0.0 - t,
            deviation: value.max(0.0),
            minimizer: t,
            argmax_measure: WeightedMeasure::from_normalised(weights),
        }
    }
}

fn prepare<'a>(
    kind: LossKind,
    sample: &'a Sample,
    costs: &'a CostRates,
    spec: &'a RiskMeasure,
) -> Result<Objective<'a>> {
    costs.check_len(sample.len())?;
    dual::check_dual_spec(spec)?;
    Ok(Objective {
        kind,
        x: sample.values(),
        costs,
        spec,
    })
}

fn unique_sorted(sample: &Sample) -> Vec<f64> {
    let mut u = sample.sorted();
    u.dedup();
    u
}

/// Robust capital `R = -x*` and deviation `RD = f(x*)`, minimising the
/// worst-case expected loss over `x in [min X, max X]`.
///
/// `f` is convex, so the smallest minimiser is the smallest `x` at which the
/// right derivative is nonnegative. It is located first among the sample
/// points and then by bisection inside the bracketing gap, which resolves
/// interior minimisers (created by the sup over `Q`) to machine precision and
/// returns sample points exactly when they are optimal.
pub fn robust_risk(
    kind: LossKind,
    sample: &Sample,
    costs: &CostRates,
    spec: &RiskMeasure,
) -> Result<RobustResult> {
    let obj = prepare(kind, sample, costs, spec)?;
    let tol = SLOPE_TOL * kind.slope_bound(costs).max(f64::MIN_POSITIVE);
    let stops = |t: f64| obj.right_derivative(t) >= -tol;

    let u = unique_sorted(sample);
    let last = u.len() - 1;
    // the right end of the domain is always admissible
    let stops_at = |j: usize| j == last || stops(u[j]);
    if stops_at(0) {
        return Ok(obj.result(u[0]));
    }
    let (mut bad, mut good) = (0usize, last);
    while good - bad > 1 {
        let mid = bad + (good - bad) / 2;
        if stops_at(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }

    let mut lo = u[bad];
    let mut hi = u[good];
    if !stops(hi.next_down()) {
        return Ok(obj.result(hi));
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if stops(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(obj.result(hi))
}

/// Brute-force minimiser used to cross-check [`robust_risk`].
///
/// `f` is evaluated on `grid_size` equispaced points of `[min X, max X]`
/// together with every sample point; the best cell is then refined by
/// golden-section search, since minimisers need not sit on the grid.
pub fn worst_case_grid_oracle(
    kind: LossKind,
    sample: &Sample,
    costs: &CostRates,
    spec: &RiskMeasure,
    grid_size: usize,
) -> Result<RobustResult> {
    if grid_size < 2 {
        return Err(Error::domain("grid_size must be at least 2"));
    }
    let obj = prepare(kind, sample, costs, spec)?;
    let (lo, hi) = (sample.min(), sample.max());
    let mut pts = sample.sorted();
    let step = (hi - lo) / (grid_size - 1) as f64;
    pts.extend((0..grid_size).map(|k| if k + 1 == grid_size { hi } else { lo + step * k as f64 }));
    pts.sort_by(f64::total_cmp);
    pts.dedup();

    let vals: Vec<f64> = pts.iter().map(|&t| obj.value(t)).collect();
    let mut best = 0;
    for (k, v) in vals.iter().enumerate() {
        if *v < vals[best] {
            best = k;
        }
    }
    let (mut t, mut ft) = (pts[best], vals[best]);

    let mut a = pts[best.saturating_sub(1)];
    let mut b = pts[(best + 1).min(pts.len() - 1)];
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (obj.value(c), obj.value(d));
    for _ in 0..200 {
        if b - a <= 4.0 * f64::EPSILON * (a.abs() + b.abs()) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = obj.value(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = obj.value(d);
        }
    }
    for (x, fx) in [(c, fc), (d, fd)] {
        if fx < ft || (fx == ft && x < t) {
            t = x;
            ft = fx;
        }
    }
    Ok(obj.result(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riskmeasures::{self, RiskMeasure as M};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn s(v: &[f64]) -> Sample {
        Sample::from_slice(v).unwrap()
    }

    fn catalogue() -> Vec<M> {
        vec![
            M::El,
            M::Msd { beta: 1.0 },
            M::Es { alpha: 0.025 },
            M::Es { alpha: 0.3 },
            M::Evar { alpha: 0.00145 },
            M::Evar { alpha: 0.2 },
            M::Ml,
        ]
    }

    #[test]
    fn loss_profile_examples() {
        let c = CostRates::constant(0.5, 0.5).unwrap();
        assert_eq!(loss_profile(LossKind::Ours, &s(&[1., 1.]), &c, 1.0).unwrap(), vec![0., 0.]);
        assert_eq!(loss_profile(LossKind::Ours, &s(&[2.]), &c, 0.0).unwrap(), vec![1.0]);
        let c = CostRates::constant(0.01, 1.0).unwrap();
        // (X - x)^- is the nonnegative part max(x - X, 0)
        let b = loss_profile(LossKind::B, &s(&[0.]), &c, 3.0).unwrap();
        assert_abs_diff_eq!(b[0], -0.03 + 3.0, epsilon = 1e-15);
        let b = loss_profile(LossKind::B, &s(&[5.]), &c, 3.0).unwrap();
        assert_abs_diff_eq!(b[0], -0.03, epsilon = 1e-15);
    }

    #[test]
    fn loss_profile_dimension_mismatch() {
        let c = CostRates::series(vec![0.1; 3], vec![0.1; 3]).unwrap();
        assert!(matches!(
            loss_profile(LossKind::Ours, &s(&[1., 2.]), &c, 0.0),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn degenerate_costs_rejected() {
        assert!(matches!(CostRates::constant(0.0, 0.0), Err(Error::DegenerateCost)));
        assert!(CostRates::constant(-1.0, 1.0).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let x = s(&[3., -1., 4., 1., -5., 9., 2., -6.]);
        let c = CostRates::constant(0.25, 0.75).unwrap();
        assert_eq!(closed_form_risk(&x, &c).unwrap(), riskmeasures::var(&x, 0.25).unwrap());
        let c = CostRates::constant(0.0, 1.0).unwrap();
        assert_eq!(closed_form_risk(&x, &c).unwrap(), 6.0);
        assert_eq!(closed_form_deviation(&x, &c).unwrap(), 0.0);
        let c = CostRates::constant(1.0, 0.0).unwrap();
        assert_eq!(closed_form_risk(&x, &c).unwrap(), -9.0);

        let c = CostRates::constant(0.5, 0.5).unwrap();
        assert_abs_diff_eq!(closed_form_deviation(&s(&[-4., -2., 0., 2.]), &c).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(closed_form_deviation(&s(&[1.5; 4]), &c).unwrap(), 0.0);
    }

    #[test]
    fn robust_el_is_the_quantile() {
        let x = s(&[3., -1., 4., 1., -5., 9., 2., -6., 5., 3.5]);
        for alpha in [0.05, 0.1, 0.25, 0.3, 0.5, 0.9] {
            let c = CostRates::constant(alpha, 1.0 - alpha).unwrap();
            let r = robust_risk(LossKind::Ours, &x, &c, &M::El).unwrap();
            assert_eq!(r.risk, riskmeasures::var(&x, alpha).unwrap(), "alpha {alpha}");
            assert_eq!(r.minimizer, -r.risk);
        }
    }

    #[test]
    fn constant_sample() {
        let x = s(&[2.5; 5]);
        let c = CostRates::constant(0.3, 0.7).unwrap();
        for spec in catalogue() {
            let r = robust_risk(LossKind::Ours, &x, &c, &spec).unwrap();
            assert_eq!(r.risk, -2.5);
            assert_eq!(r.deviation, 0.0);
            let o = worst_case_grid_oracle(LossKind::Ours, &x, &c, &spec, 10).unwrap();
            assert_eq!(o, r);
        }
    }

    #[test]
    fn extreme_costs_pick_the_ends() {
        let x = s(&[3., -1., 4., 1., -5.]);
        for spec in catalogue() {
            let r = robust_risk(LossKind::Ours, &x, &CostRates::constant(0.0, 1.0).unwrap(), &spec).unwrap();
            assert_eq!(r.risk, 5.0);
            let r = robust_risk(LossKind::Ours, &x, &CostRates::constant(1.0, 0.0).unwrap(), &spec).unwrap();
            assert_eq!(r.risk, -4.0);
        }
    }

    #[test]
    fn ml_minimiser_can_be_interior() {
        // worst case of (X - x)^+ + (x - X)^+ is balanced at the midrange
        let x = s(&[0., 1., 10.]);
        let c = CostRates::constant(1.0, 1.0).unwrap();
        let r = robust_risk(LossKind::Ours, &x, &c, &M::Ml).unwrap();
        assert_abs_diff_eq!(r.minimizer, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.deviation, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn weighted_rates_give_a_weighted_quantile() {
        // with per-scenario rates the EL minimiser is the smallest x with
        // sum_{X_i <= x} (g_i + l_i) >= sum_i g_i
        let x = s(&[1., 2., 3., 4.]);
        let c = CostRates::series(vec![0.1, 0.1, 0.1, 0.5], vec![0.9, 0.9, 0.9, 0.5]).unwrap();
        let r = robust_risk(LossKind::Ours, &x, &c, &M::El).unwrap();
        // total g = 0.8; cumulative g + l = 1, 2, ...
        assert_eq!(r.minimizer, 1.0);
        let c = CostRates::series(vec![0.9, 0.9, 0.9, 0.9], vec![0.1, 0.1, 0.1, 0.1]).unwrap();
        let r = robust_risk(LossKind::Ours, &x, &c, &M::El).unwrap();
        assert_eq!(r.minimizer, 4.0);
    }

    #[test]
    fn kind_b_el_reduces_to_the_minimum() {
        let x = s(&[3., -1., 4., 1., -5.]);
        let c = CostRates::constant(0.0001, 0.0001).unwrap();
        let r = robust_risk(LossKind::B, &x, &c, &M::El).unwrap();
        assert_eq!(r.risk, 5.0);
    }

    #[test]
    fn kind_c_clamps_when_overestimation_dominates() {
        let x = s(&[3., -1., 4., 1., -5.]);
        let c = CostRates::constant(0.02, 0.01).unwrap();
        let r = robust_risk(LossKind::C, &x, &c, &M::El).unwrap();
        assert_eq!(r.minimizer, 4.0);
    }

    #[test]
    fn rejects_var() {
        let x = s(&[1., 2.]);
        let c = CostRates::constant(0.1, 0.9).unwrap();
        assert!(matches!(
            robust_risk(LossKind::Ours, &x, &c, &M::Var { alpha: 0.1 }),
            Err(Error::UnsupportedMeasure(_))
        ));
    }

    fn sample_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-5.0f64..5.0, 1..40)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn agrees_with_grid_oracle(v in sample_strategy(), g in 0.0f64..1.0, l in 0.01f64..1.0) {
            let x = Sample::new(v).unwrap();
            let c = CostRates::constant(g, l).unwrap();
            for kind in LossKind::ALL {
                for spec in catalogue() {
                    let r = robust_risk(kind, &x, &c, &spec).unwrap();
                    let o = worst_case_grid_oracle(kind, &x, &c, &spec, 50).unwrap();
                    prop_assert!(r.deviation <= o.deviation + 1e-9, "{kind} {spec}: {} vs {}", r.deviation, o.deviation);
                    prop_assert!((r.deviation - o.deviation).abs() <= 1e-9, "{kind} {spec}: {} vs {}", r.deviation, o.deviation);
                }
            }
        }

        #[test]
        fn el_matches_closed_form(v in sample_strategy(), g in 0.0f64..1.0, l in 0.01f64..1.0) {
            let x = Sample::new(v).unwrap();
            let c = CostRates::constant(g, l).unwrap();
            let r = robust_risk(LossKind::Ours, &x, &c, &M::El).unwrap();
            prop_assert_eq!(r.risk, closed_form_risk(&x, &c).unwrap());
            prop_assert!((r.deviation - closed_form_deviation(&x, &c).unwrap()).abs() <= 1e-10);
        }
    }
}
