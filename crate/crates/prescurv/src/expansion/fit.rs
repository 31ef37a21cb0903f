//! Validation of the small-λ expansion: Γ(x₀, λ) is computed by quadrature
//! on a decreasing λ-grid, the predicted slots are subtracted stage by
//! stage, and the fitted coefficients and the empirical remainder order are
//! reported.

use super::slots::SlotEngine;
use super::{ExpansionError, slot_of};
use crate::bubbles::BubbleParams;
use crate::energy::{self, EnergyInput};
use crate::geometry::BallPoint;
use crate::quadrature::QuadratureSpec;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// One validated slot: the least-squares coefficient of λ^power
/// (·log(1/λ) when flagged) against the jet-route prediction.
#[derive(Debug, Clone, Serialize)]
pub struct SlotFit {
    pub power: usize,
    pub log_flag: bool,
    pub fitted: f64,
    pub predicted: Option<f64>,
    pub rel_deviation: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub xi: Vec<f64>,
    pub psi: f64,
    pub lambdas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub slots: Vec<SlotFit>,
    /// log–log slopes of the post-subtraction remainder between successive λ
    pub remainder_slopes: Vec<f64>,
    pub remainder_order: Option<f64>,
    /// true when the remainder fell below quadrature noise before slopes
    /// could be measured
    pub remainder_below_noise: bool,
}

/// Computes Γ on the λ-grid at x₀ = I(ξ), validates every implemented slot,
/// and measures the remainder order. Slope instability beyond 20% (on a
/// remainder that is clearly above noise) is an error.
pub fn expansion_validate(
    xi: &BallPoint,
    input: &EnergyInput,
    lambdas: &[f64],
    max_order: usize,
    spec: &QuadratureSpec,
) -> Result<FitReport, ExpansionError> {
    if !xi.is_on_sphere(1e-10) {
        return Err(ExpansionError::NotOnSphere);
    }
    let n = input.n.get();
    let engine = SlotEngine::new(&xi.coords, &input.k, &input.h, input.d, spec)?;
    let (a0, b0) = super::ab_constants(n, input.d, spec)?;
    let psi_v = a0 * input.k.eval(&xi.coords) - b0 * input.h.eval(xi);

    let mut gammas = Vec::with_capacity(lambdas.len());
    let mut gamma_errs = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let b = BubbleParams::new(input.n, input.d, engine.x0.clone(), l).unwrap();
        let g = energy::gamma(&b, input, spec).map_err(|e| match e {
            energy::EnergyError::Quadrature(q) => ExpansionError::Quadrature(q),
            _ => ExpansionError::NotOnSphere,
        })?;
        gammas.push(g.value);
        gamma_errs.push(g.error_estimate);
    }

    let p_max = {
        let by_cap = max_order_power(n, max_order);
        by_cap.min(engine.max_power())
    };

    let mut residual: Vec<f64> = gammas.iter().map(|g| g - psi_v).collect();
    let mut slots = Vec::new();
    for p in 1..=p_max {
        let slot = engine.gamma_slot(p)?;
        let has_log = engine.has_log(p);
        // stage design: the slot's own basis plus the next order as absorber
        let mut cols: Vec<(usize, bool)> = vec![(p, false)];
        if has_log {
            cols.push((p, true));
        }
        cols.push((p + 1, false));
        cols.push((p + 1, true));
        let coef = least_squares(lambdas, &residual, &cols);
        // plain part
        let fitted_plain = coef[0];
        slots.push(SlotFit {
            power: p,
            log_flag: false,
            fitted: fitted_plain,
            predicted: slot.plain,
            rel_deviation: slot.plain.map(|pr| rel_dev(fitted_plain, pr)),
        });
        if has_log {
            let fitted_log = coef[1];
            slots.push(SlotFit {
                power: p,
                log_flag: true,
                fitted: fitted_log,
                predicted: slot.log,
                rel_deviation: slot.log.map(|pr| rel_dev(fitted_log, pr)),
            });
        }
        // subtract this order: predicted where known, fitted otherwise
        let sub_plain = slot.plain.unwrap_or(fitted_plain);
        let sub_log = if has_log { slot.log.unwrap_or(coef[1]) } else { 0.0 };
        for (r, &l) in residual.iter_mut().zip(lambdas) {
            *r -= sub_plain * l.powi(p as i32);
            if has_log {
                *r -= sub_log * l.powi(p as i32) * (1.0 / l).ln();
            }
        }
    }

    // remainder order from successive slopes, ignoring noise-dominated points
    let mut slopes = Vec::new();
    let mut usable = Vec::new();
    for (i, (&r, &e)) in residual.iter().zip(&gamma_errs).enumerate() {
        if r.abs() > 10.0 * e.max(1e-14) {
            usable.push(i);
        }
    }
    for w in usable.windows(2) {
        let (i, j) = (w[0], w[1]);
        let s = (residual[j].abs() / residual[i].abs()).ln() / (lambdas[j] / lambdas[i]).ln();
        slopes.push(s);
    }
    let below_noise = slopes.len() < 2;
    let order = if below_noise {
        None
    } else {
        Some(slopes.iter().sum::<f64>() / slopes.len() as f64)
    };
    if let Some(mean) = order {
        let max_dev = slopes.iter().map(|s| (s - mean).abs()).fold(0.0f64, f64::max);
        if mean.abs() > 1e-9 && max_dev / mean.abs() > 0.2 {
            return Err(ExpansionError::FitUnstable(100.0 * max_dev / mean.abs()));
        }
    }
    Ok(FitReport {
        xi: xi.coords.clone(),
        psi: psi_v,
        lambdas: lambdas.to_vec(),
        gammas,
        slots,
        remainder_slopes: slopes,
        remainder_order: order,
        remainder_below_noise: below_noise,
    })
}

fn max_order_power(n: usize, max_order: usize) -> usize {
    // largest λ-power whose slot index stays within the cap
    let mut p_max = 0;
    for m in 1..=max_order {
        let (p, _) = slot_of(n, m);
        p_max = p_max.max(p);
    }
    p_max
}

fn rel_dev(fitted: f64, predicted: f64) -> f64 {
    if predicted == 0.0 {
        fitted.abs()
    } else {
        (fitted - predicted).abs() / predicted.abs()
    }
}

fn least_squares(lambdas: &[f64], values: &[f64], cols: &[(usize, bool)]) -> Vec<f64> {
    let rows = lambdas.len();
    let a = DMatrix::from_fn(rows, cols.len(), |i, j| {
        let (p, lg) = cols[j];
        let base = lambdas[i].powi(p as i32);
        if lg {
            base * (1.0 / lambdas[i]).ln()
        } else {
            base
        }
    });
    let b = DVector::from_iterator(rows, values.iter().copied());
    let svd = a.svd(true, true);
    let x = svd.solve(&b, 1e-14).unwrap_or_else(|_| DVector::zeros(cols.len()));
    x.iter().copied().collect()
}
