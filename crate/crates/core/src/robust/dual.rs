//! Worst-case expectations `max_{Q in Q_rho} sum_i loss_i Q_i` over the dual
//! sets of the catalogued coherent measures, on `N` equally likely atoms.

use std::cmp::Ordering;

use crate::empirical::WeightedMeasure;
use crate::error::{Error, Result};
use crate::riskmeasures::RiskMeasure;

/// Worst-case expectation of `loss` over the dual set of `spec`, with an
/// attaining measure.
///
/// * EL: the reference measure itself.
/// * ES(alpha): `dQ/dP <= 1/alpha`; mass is poured onto the largest losses,
///   the last atom receiving the fractional remainder.
/// * ML: point mass on the largest loss.
/// * EVaR(alpha): `a <= dQ/dP <= a (1 - alpha) / alpha`; the optimum is a
///   two-level density, high on the losses above the threshold.
/// * MSD(beta): closed-form value `mean + beta * upper semideviation`, with
///   the attaining density `1 + beta (V - E[V])`.
///
/// Ties are resolved by scenario index so the returned measure is
/// deterministic.
pub fn dual_sup(loss: &[f64], spec: &RiskMeasure) -> Result<(f64, WeightedMeasure)> {
    check_dual_spec(spec)?;
    if loss.is_empty() {
        return Err(Error::domain("empty loss vector"));
    }
    let (value, weights) = sup_with_weights(loss, spec);
    Ok((value, WeightedMeasure::from_normalised(weights)))
}

pub(crate) fn check_dual_spec(spec: &RiskMeasure) -> Result<()> {
    spec.validate()?;
    match *spec {
        RiskMeasure::Var { .. } => Err(Error::UnsupportedMeasure(
            "VaR has no dual set".into(),
        )),
        RiskMeasure::Evar { alpha } if alpha > 0.5 => Err(Error::UnsupportedMeasure(format!(
            "EVaR({alpha}) is not coherent; its dual set is empty"
        ))),
        _ => Ok(()),
    }
}

/// Descending order of `loss`, ties broken by the secondary key (descending)
/// and then by index.
fn descending_order(loss: &[f64], secondary: Option<&[f64]>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..loss.len()).collect();
    idx.sort_by(|&i, &j| {
        loss[j].total_cmp(&loss[i]).then_with(|| match secondary {
            Some(s) => s[j].total_cmp(&s[i]),
            None => Ordering::Equal,
        })
    });
    idx
}

/// Number of atoms that receive the full density cap `1/alpha` and the
/// remaining probability for the next atom.
fn es_split(alpha: f64, n: usize) -> (usize, f64, f64) {
    let cap = 1.0 / (alpha * n as f64);
    if cap >= 1.0 {
        return (0, 1.0, 1.0);
    }
    let t = alpha * n as f64;
    let r = t.round();
    let full = if (t - r).abs() <= 1e-9 * t { r } else { t.floor() } as usize;
    let rest = (1.0 - full as f64 * cap).max(0.0);
    (full, cap, rest)
}

fn evar_ratio(alpha: f64) -> f64 {
    (1.0 - alpha) / alpha
}

pub(crate) fn sup_with_weights(loss: &[f64], spec: &RiskMeasure) -> (f64, Vec<f64>) {
    let n = loss.len();
    let nf = n as f64;
    match *spec {
        RiskMeasure::El => (loss.iter().sum::<f64>() / nf, vec![1.0 / nf; n]),
        RiskMeasure::Ml => {
            let top = descending_order(loss, None)[0];
            let mut w = vec![0.0; n];
            w[top] = 1.0;
            (loss[top], w)
        }
        RiskMeasure::Es { alpha } => {
            let order = descending_order(loss, None);
            let (full, cap, rest) = es_split(alpha, n);
            let mut w = vec![0.0; n];
            let mut value = 0.0;
            for &i in &order[..full] {
                w[i] = cap;
                value += cap * loss[i];
            }
            if full < n && rest > 0.0 {
                let i = order[full];
                w[i] = rest;
                value += rest * loss[i];
            }
            (value, w)
        }
        RiskMeasure::Evar { alpha } => {
            let order = descending_order(loss, None);
            let r = evar_ratio(alpha);
            let total: f64 = loss.iter().sum();
            let (mut best_k, mut best_v) = (0, total / nf);
            let mut top = 0.0;
            for (k, &i) in order.iter().enumerate() {
                top += loss[i];
                let kk = (k + 1) as f64;
                let v = (r * top + (total - top)) / (r * kk + nf - kk);
                if v > best_v {
                    best_v = v;
                    best_k = k + 1;
                }
            }
            let norm = r * best_k as f64 + (n - best_k) as f64;
            let mut w = vec![1.0 / norm; n];
            for &i in &order[..best_k] {
                w[i] = r / norm;
            }
            (best_v, w)
        }
        RiskMeasure::Msd { beta } => {
            let m = loss.iter().sum::<f64>() / nf;
            let upper: Vec<f64> = loss.iter().map(|&v| (v - m).max(0.0)).collect();
            let semi = (upper.iter().map(|u| u * u).sum::<f64>() / nf).sqrt();
            if semi == 0.0 {
                return (m, vec![1.0 / nf; n]);
            }
            let mean_v = upper.iter().sum::<f64>() / (nf * semi);
            let w = upper
                .iter()
                .map(|u| (1.0 + beta * (u / semi - mean_v)) / nf)
                .collect();
            (m + beta * semi, w)
        }
        RiskMeasure::Var { .. } => unreachable!("rejected by check_dual_spec"),
    }
}

/// Right derivative of `t -> sup_Q E_Q[loss + t * slope]` at `t = 0`, where
/// `slope` holds the right derivatives of the individual losses.
pub(crate) fn sup_right_derivative(loss: &[f64], slope: &[f64], spec: &RiskMeasure) -> f64 {
    let n = loss.len();
    let nf = n as f64;
    match *spec {
        RiskMeasure::El => slope.iter().sum::<f64>() / nf,
        RiskMeasure::Ml => slope[descending_order(loss, Some(slope))[0]],
        RiskMeasure::Es { alpha } => {
            let order = descending_order(loss, Some(slope));
            let (full, cap, rest) = es_split(alpha, n);
            let mut d: f64 = order[..full].iter().map(|&i| cap * slope[i]).sum();
            if full < n && rest > 0.0 {
                d += rest * slope[order[full]];
            }
            d
        }
        RiskMeasure::Evar { alpha } => {
            let order = descending_order(loss, Some(slope));
            let r = evar_ratio(alpha);
            let total: f64 = loss.iter().sum();
            let total_d: f64 = slope.iter().sum();
            let mut pieces = Vec::with_capacity(n + 1);
            pieces.push((total / nf, total_d / nf));
            let (mut top, mut top_d) = (0.0, 0.0);
            for (k, &i) in order.iter().enumerate() {
                top += loss[i];
                top_d += slope[i];
                let kk = (k + 1) as f64;
                let norm = r * kk + nf - kk;
                pieces.push(((r * top + total - top) / norm, (r * top_d + total_d - top_d) / norm));
            }
            let vmax = pieces.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
            let scale = loss.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let tie = 1e-13 * (scale + 1e-300);
            pieces
                .iter()
                .filter(|p| p.0 >= vmax - tie)
                .map(|p| p.1)
                .fold(f64::NEG_INFINITY, f64::max)
        }
        RiskMeasure::Msd { beta } => {
            let m = loss.iter().sum::<f64>() / nf;
            let dm = slope.iter().sum::<f64>() / nf;
            let upper: Vec<f64> = loss.iter().map(|&v| (v - m).max(0.0)).collect();
            let semi = (upper.iter().map(|u| u * u).sum::<f64>() / nf).sqrt();
            let dsemi = if semi > 0.0 {
                upper
                    .iter()
                    .zip(slope)
                    .map(|(u, s)| u * (s - dm))
                    .sum::<f64>()
                    / (nf * semi)
            } else {
                // all losses equal: the semideviation grows like |t| * sd((slope - dm)^+)
                (slope
                    .iter()
                    .map(|s| (s - dm).max(0.0).powi(2))
                    .sum::<f64>()
                    / nf)
                    .sqrt()
            };
            dm + beta * dsemi
        }
        RiskMeasure::Var { .. } => unreachable!("rejected by check_dual_spec"),
    }
}
