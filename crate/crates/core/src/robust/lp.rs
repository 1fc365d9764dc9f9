//! Independent linear-programming evaluation of the dual sups, used only to
//! cross-check the closed forms in [`super::dual_sup`].

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};
use crate::riskmeasures::RiskMeasure;

const MAX_ATOMS: usize = 10_000;

/// Maximises `sum_i loss_i Q_i` over the explicit dual polytope of `spec`
/// with a generic simplex solver.
///
/// * ES(alpha): `0 <= Q_i <= 1 / (alpha N)`
/// * ML: `0 <= Q_i <= 1`
/// * EVaR(alpha): `a / N <= Q_i <= a (1 - alpha) / (alpha N)` with a free
///   scale `a >= 0`
///
/// together with `sum_i Q_i = 1`.
pub fn dual_sup_lp_oracle(loss: &[f64], spec: &RiskMeasure) -> Result<f64> {
    spec.validate()?;
    let n = loss.len();
    if n == 0 || n > MAX_ATOMS {
        return Err(Error::domain(format!("oracle supports 1..={MAX_ATOMS} atoms, got {n}")));
    }
    let nf = n as f64;
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let q: Vec<_> = match *spec {
        RiskMeasure::Es { alpha } => {
            let cap = 1.0 / (alpha * nf);
            loss.iter().map(|&c| lp.add_var(c, (0.0, cap))).collect()
        }
        RiskMeasure::Ml => loss.iter().map(|&c| lp.add_var(c, (0.0, 1.0))).collect(),
        RiskMeasure::Evar { alpha } if alpha <= 0.5 => {
            let r = (1.0 - alpha) / alpha;
            let q: Vec<_> = loss.iter().map(|&c| lp.add_var(c, (0.0, f64::INFINITY))).collect();
            let a = lp.add_var(0.0, (0.0, f64::INFINITY));
            for &qi in &q {
                lp.add_constraint([(qi, nf), (a, -1.0)], ComparisonOp::Ge, 0.0);
                lp.add_constraint([(qi, nf), (a, -r)], ComparisonOp::Le, 0.0);
            }
            q
        }
        _ => {
            return Err(Error::UnsupportedMeasure(format!(
                "LP oracle covers ES, EVaR and ML, not {spec}"
            )))
        }
    };
    let total: Vec<_> = q.iter().map(|&v| (v, 1.0)).collect();
    lp.add_constraint(&total, ComparisonOp::Eq, 1.0);
    let sol = lp
        .solve()
        .map_err(|e| Error::Infeasible(e.to_string()))?;
    Ok(sol.objective())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn small_examples() {
        assert_abs_diff_eq!(dual_sup_lp_oracle(&[0., 0., 4.], &RiskMeasure::Ml).unwrap(), 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            dual_sup_lp_oracle(&[1., 2., 3., 4.], &RiskMeasure::Es { alpha: 0.5 }).unwrap(),
            3.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn rejects_other_measures() {
        assert!(dual_sup_lp_oracle(&[1.0], &RiskMeasure::El).is_err());
        assert!(dual_sup_lp_oracle(&[1.0], &RiskMeasure::Msd { beta: 1.0 }).is_err());
    }
}
