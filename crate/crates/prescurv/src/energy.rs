//! The perturbed energy functionals J^n_ε, the geometric part γ^n, the
//! reduced energy Γ in half-space and ball coordinates, and the exact
//! integral identities satisfied along the bubble family.

use crate::bubbles::{self, BubbleParams};
use crate::expansion;
use crate::fields::{PolyField, SphereFunction};
use crate::geometry::{invert_coords, norm_sq, Dimension};
use crate::quadrature::{
    integrate_ball, integrate_boundary_hyperplane, integrate_half_space, integrate_sphere,
    IntegralResult, QuadError, QuadratureSpec,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("D = 2/√3 is the degenerate value excluded by the two-dimensional theory")]
    DegenerateD,
    #[error("curvature data has wrong dimension")]
    DimensionMismatch,
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Problem data (n, D, ε, K, H). ε is carried for reporting but the reduced
/// energy concerns the ε → 0 regime.
#[derive(Debug, Clone)]
pub struct EnergyInput {
    pub n: Dimension,
    pub d: f64,
    pub eps: f64,
    pub k: PolyField,
    pub h: SphereFunction,
}

impl EnergyInput {
    pub fn new(n: Dimension, d: f64, eps: f64, k: PolyField, h: SphereFunction) -> Result<Self, EnergyError> {
        if k.dim() != n.get() || h.ambient.dim() != n.get() {
            return Err(EnergyError::DimensionMismatch);
        }
        if !(d > 1.0) {
            return Err(EnergyError::DegenerateD);
        }
        Ok(EnergyInput { n, d, eps, k, h })
    }
}

/// A candidate function on the ball: optional bubble plus an exact
/// polynomial, so values and gradients are closed-form.
#[derive(Debug, Clone)]
pub struct BallFunction {
    pub bubble: Option<BubbleParams>,
    pub poly: PolyField,
}

impl BallFunction {
    pub fn bubble(b: BubbleParams) -> Self {
        let n = b.n.get();
        BallFunction { bubble: Some(b), poly: PolyField::zero(n) }
    }

    pub fn poly(p: PolyField) -> Self {
        BallFunction { bubble: None, poly: p }
    }

    pub fn value(&self, q: &[f64]) -> f64 {
        let mut v = self.poly.eval(q);
        if let Some(b) = &self.bubble {
            v += bubbles::eval_v_ball(q, b);
        }
        v
    }

    pub fn gradient(&self, q: &[f64]) -> Vec<f64> {
        let mut g = self.poly.gradient_at(q);
        if let Some(b) = &self.bubble {
            for (gi, bi) in g.iter_mut().zip(bubbles::grad_v_ball(q, b)) {
                *gi += bi;
            }
        }
        g
    }
}

/// J^n_ε(u) by ball and sphere quadrature.
pub fn energy_j(u: &BallFunction, input: &EnergyInput, spec: &QuadratureSpec) -> Result<f64, EnergyError> {
    let n = input.n.get();
    let eps = input.eps;
    let dirichlet = integrate_ball(|q| norm_sq(&u.gradient(q)), n, spec)?.value;
    if n == 2 {
        let trace = integrate_sphere(|q| u.value(q), n, spec)?.value;
        let bulk = integrate_ball(|q| (1.0 + eps * input.k.eval(q)) * u.value(q).exp(), n, spec)?.value;
        let bdry = integrate_sphere(
            |q| (1.0 + eps * input.h.ambient.eval(q)) * (u.value(q) / 2.0).exp(),
            n,
            spec,
        )?
        .value;
        Ok(0.5 * dirichlet + 2.0 * trace + 2.0 * bulk - 4.0 * input.d * bdry)
    } else {
        let nf = n as f64;
        let p_star = 2.0 * nf / (nf - 2.0);
        let p_sharp = 2.0 * (nf - 1.0) / (nf - 2.0);
        let alpha = expansion::alpha_n(n);
        let beta = expansion::beta_n(n);
        let trace2 = integrate_sphere(|q| u.value(q) * u.value(q), n, spec)?.value;
        let bulk = integrate_ball(
            |q| (1.0 + eps * input.k.eval(q)) * u.value(q).abs().powf(p_star),
            n,
            spec,
        )?
        .value;
        let bdry = integrate_sphere(
            |q| (1.0 + eps * input.h.ambient.eval(q)) * u.value(q).abs().powf(p_sharp),
            n,
            spec,
        )?
        .value;
        Ok(0.5 * dirichlet + 0.5 * trace2 + alpha * bulk - alpha * beta * input.d * bdry)
    }
}

/// γ^n(u) = ∫_B K e^u − β₂ D ∫_S H e^{u/2} (n = 2), resp.
/// ∫_B K|u|^{2*} − β_n D ∫_S H|u|^{2#} (n ≥ 3).
pub fn gamma_ball_fn(u: &BallFunction, input: &EnergyInput, spec: &QuadratureSpec) -> Result<f64, EnergyError> {
    let n = input.n.get();
    let beta = expansion::beta_n(n);
    if n == 2 {
        let bulk = integrate_ball(|q| input.k.eval(q) * u.value(q).exp(), n, spec)?.value;
        let bdry = integrate_sphere(|q| input.h.ambient.eval(q) * (u.value(q) / 2.0).exp(), n, spec)?.value;
        Ok(bulk - beta * input.d * bdry)
    } else {
        let nf = n as f64;
        let bulk = integrate_ball(
            |q| input.k.eval(q) * u.value(q).abs().powf(2.0 * nf / (nf - 2.0)),
            n,
            spec,
        )?
        .value;
        let bdry = integrate_sphere(
            |q| input.h.ambient.eval(q) * u.value(q).abs().powf(2.0 * (nf - 1.0) / (nf - 2.0)),
            n,
            spec,
        )?
        .value;
        Ok(bulk - beta * input.d * bdry)
    }
}

/// Max deviation of J^n_0(V_{x₀,λ}) from its value at (0, 1) over a grid.
pub fn energy_constancy_check(
    input: &EnergyInput,
    grid: &[(Vec<f64>, f64)],
    spec: &QuadratureSpec,
) -> Result<f64, EnergyError> {
    let base_input = EnergyInput { eps: 0.0, ..input.clone() };
    let n = input.n;
    let reference = energy_j(
        &BallFunction::bubble(BubbleParams::new(n, input.d, vec![0.0; n.get() - 1], 1.0).unwrap()),
        &base_input,
        spec,
    )?;
    let mut worst: f64 = 0.0;
    for (x0, l) in grid {
        let b = BubbleParams::new(n, input.d, x0.clone(), *l).unwrap();
        let j = energy_j(&BallFunction::bubble(b), &base_input, spec)?;
        worst = worst.max((j - reference).abs());
    }
    Ok(worst)
}

/// Reduced energy Γ(x₀, λ) by the scaled half-space formula: the interior
/// integrand's denominator is |ȳ|²+(y_n+D)²−1 uniformly in λ.
pub fn gamma(b: &BubbleParams, input: &EnergyInput, spec: &QuadratureSpec) -> Result<IntegralResult, EnergyError> {
    let n = input.n.get();
    let nf = n as f64;
    let lam = expansion::lambda_n(n);
    let beta = expansion::beta_n(n);
    let l = b.lambda;
    let c2 = b.d * b.d - 1.0;
    let interior = integrate_half_space(
        |y| {
            let mut x = Vec::with_capacity(n);
            for i in 0..n - 1 {
                x.push(l * y[i] + b.x0[i]);
            }
            x.push(l * y[n - 1]);
            let q = invert_coords(&x);
            let d0 = norm_sq(&y[..n - 1]) + (y[n - 1] + b.d) * (y[n - 1] + b.d) - 1.0;
            input.k.eval(&q) / d0.powf(nf)
        },
        n,
        spec,
    )?;
    let boundary = integrate_boundary_hyperplane(
        |yb| {
            let mut x = Vec::with_capacity(n);
            for i in 0..n - 1 {
                x.push(l * yb[i] + b.x0[i]);
            }
            x.push(0.0);
            let q = invert_coords(&x);
            input.h.ambient.eval(&q) / (norm_sq(yb) + c2).powf(nf - 1.0)
        },
        n,
        spec,
    )?;
    let value = lam.powf(nf / 2.0) * interior.value - lam.powf((nf - 1.0) / 2.0) * beta * b.d * boundary.value;
    let err = lam.powf(nf / 2.0) * interior.error_estimate
        + lam.powf((nf - 1.0) / 2.0) * beta * b.d * boundary.error_estimate;
    Ok(IntegralResult {
        value,
        error_estimate: err,
        evaluations: interior.evaluations + boundary.evaluations,
    })
}

/// γ^n(V_{x₀,λ}) by ball/sphere quadrature; agrees with `gamma` by the
/// change of variables underlying the half-space formula.
pub fn gamma_ball(b: &BubbleParams, input: &EnergyInput, spec: &QuadratureSpec) -> Result<f64, EnergyError> {
    gamma_ball_fn(&BallFunction::bubble(b.clone()), input, spec)
}

/// ψ(south pole) = a(D)·K(0,…,0,−1) − b(D)·H(0,…,0,−1), the limit of Γ at
/// infinity.
pub fn psi_south_pole(input: &EnergyInput, spec: &QuadratureSpec) -> Result<f64, EnergyError> {
    let n = input.n.get();
    let (a, b) = expansion::ab_constants(n, input.d, spec)?;
    let mut sp = vec![0.0; n];
    sp[n - 1] = -1.0;
    Ok(a * input.k.eval(&sp) - b * input.h.ambient.eval(&sp))
}

/// Max of |Γ(x₀,λ) − ψ(south pole)| over sample points with |x₀| + λ = R.
pub fn gamma_limit_check(input: &EnergyInput, r: f64, spec: &QuadratureSpec) -> Result<f64, EnergyError> {
    let n = input.n.get();
    let psi_inf = psi_south_pole(input, spec)?;
    let mut worst: f64 = 0.0;
    // splits between the λ-direction and the |x₀|-direction
    for (fx, fl) in [(0.0, 1.0), (1.0 - 1.0 / r, 1.0 / r), (0.5, 0.5)] {
        let mut x0 = vec![0.0; n - 1];
        x0[0] = fx * r;
        let l = (fl * r).max(1e-6);
        let b = BubbleParams::new(input.n, input.d, x0, l).unwrap();
        let g = gamma(&b, input, spec)?;
        worst = worst.max((g.value - psi_inf).abs());
    }
    Ok(worst)
}

/// The Gauss–Bonnet pair for the two-dimensional bubble:
/// (∫_{S¹} e^{V/2} dσ, D∫_{S¹} e^{V/2} dσ − ∫_{B²} e^V dx).
/// The first value equals 2π/√(D²−1) (= 2π exactly when D = √2); the second
/// is the Gauss–Bonnet identity and equals 2π for every (x₀, λ, D).
pub fn gauss_bonnet_identities(b: &BubbleParams, spec: &QuadratureSpec) -> Result<(f64, f64), EnergyError> {
    assert_eq!(b.n.get(), 2, "Gauss–Bonnet identities are two-dimensional");
    let boundary = integrate_sphere(|q| (bubbles::eval_v_ball(q, b) / 2.0).exp(), 2, spec)?.value;
    let bulk = integrate_ball(|q| bubbles::eval_v_ball(q, b).exp(), 2, spec)?.value;
    Ok((boundary, b.d * boundary - bulk))
}

/// α_D = π(D/√(D²−1) − 2), the t²-coefficient of the reduced energy in the
/// two-dimensional case; vanishes exactly at the excluded value D = 2/√3.
pub fn alpha_d(d: f64) -> Result<f64, EnergyError> {
    let degenerate = 2.0 / 3.0f64.sqrt();
    if (d - degenerate).abs() < 1e-10 {
        return Err(EnergyError::DegenerateD);
    }
    Ok(std::f64::consts::PI * (d / (d * d - 1.0).sqrt() - 2.0))
}
