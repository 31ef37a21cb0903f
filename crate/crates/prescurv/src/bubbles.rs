//! The explicit solution families of the unperturbed problems on the
//! half-space and the ball, their residuals, and the linearization kernels.
//!
//! Half-space bubbles (denominator D = |x̄−x₀|² + (x_n+Dλ)² − λ²):
//!   n = 2:  U = 2 log(2λ/D)
//!   n ≥ 3:  U = (4n(n−1))^{(n−2)/4} λ^{(n−2)/2} D^{−(n−2)/2}
//!
//! On the ball the pullback V = U∘I − ρ (n=2) resp. (U/ρ)∘I (n≥3) collapses
//! to an elementary function of a single quadratic polynomial
//!   E(q) = |q̄|²+(q_n−1)² − 4 q̄·x₀ + (|x₀|² + λ²(D²−1))·(|q̄|²+(q_n+1)²)
//!          + 2Dλ(1−|q|²),
//! namely V = log(16λ²/E²) for n = 2 and V = (16n(n−1)λ²)^{(n−2)/4} E^{−(n−2)/2}
//! for n ≥ 3. All residual derivatives below are exact closed forms in E.

use crate::geometry::{norm_sq, Dimension, HalfSpacePoint};
use crate::jets::Jet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BubbleError {
    #[error("the boundary-to-interior curvature ratio must satisfy D > 1, got {0}")]
    BadD(f64),
    #[error("the concentration parameter must satisfy λ > 0, got {0}")]
    BadLambda(f64),
    #[error("x0 must have length n−1 = {expected}, got {got}")]
    BadCenter { expected: usize, got: usize },
}

/// Parameters (n, D, x₀, λ) of one bubble.
#[derive(Debug, Clone, PartialEq)]
pub struct BubbleParams {
    pub n: Dimension,
    pub d: f64,
    pub x0: Vec<f64>,
    pub lambda: f64,
}

impl BubbleParams {
    pub fn new(n: Dimension, d: f64, x0: Vec<f64>, lambda: f64) -> Result<Self, BubbleError> {
        if !(d > 1.0) {
            return Err(BubbleError::BadD(d));
        }
        if !(lambda > 0.0) {
            return Err(BubbleError::BadLambda(lambda));
        }
        if x0.len() != n.get() - 1 {
            return Err(BubbleError::BadCenter { expected: n.get() - 1, got: x0.len() });
        }
        Ok(BubbleParams { n, d, x0, lambda })
    }

    fn nn(&self) -> usize {
        self.n.get()
    }

    /// D(x) = |x̄−x₀|² + (x_n+Dλ)² − λ² on the half-space.
    pub fn denom(&self, x: &[f64]) -> f64 {
        let n = self.nn();
        let mut s = 0.0;
        for i in 0..n - 1 {
            let t = x[i] - self.x0[i];
            s += t * t;
        }
        let t = x[n - 1] + self.d * self.lambda;
        s + t * t - self.lambda * self.lambda
    }

    fn denom_jet(&self, x: &[f64], order: usize) -> Jet {
        let n = self.nn();
        // D(x+h) expanded in h: quadratic, exact
        let mut jet = Jet::constant(n, order, self.denom(x));
        for i in 0..n {
            let shift = if i < n - 1 { x[i] - self.x0[i] } else { x[n - 1] + self.d * self.lambda };
            let mut a = vec![0u8; n];
            a[i] = 1;
            jet.set_coeff(a.clone(), jet.coeff(&a) + 2.0 * shift);
            a[i] = 2;
            jet.set_coeff(a.clone(), jet.coeff(&a) + 1.0);
        }
        jet
    }
}

/// Half-space bubble value.
pub fn eval_u_halfspace(p: &HalfSpacePoint, b: &BubbleParams) -> f64 {
    let x = p.coords();
    let den = b.denom(&x);
    let n = b.nn();
    if n == 2 {
        2.0 * (2.0 * b.lambda / den).ln()
    } else {
        let a = (n as f64 - 2.0) / 2.0;
        let c = (4.0 * n as f64 * (n as f64 - 1.0)).powf((n as f64 - 2.0) / 4.0);
        c * b.lambda.powf(a) * den.powf(-a)
    }
}

/// The quadratic polynomial E(q) with V = log(16λ²/E²) resp.
/// (16n(n−1)λ²)^{(n−2)/4}E^{−(n−2)/2}; also returns (∇E, ΔE) when asked.
pub fn ball_quadratic(q: &[f64], b: &BubbleParams) -> f64 {
    let n = b.nn();
    let bar_sq: f64 = q[..n - 1].iter().map(|c| c * c).sum();
    let qn = q[n - 1];
    let q_plus = bar_sq + (qn + 1.0) * (qn + 1.0);
    let q_minus = bar_sq + (qn - 1.0) * (qn - 1.0);
    let dot: f64 = q[..n - 1].iter().zip(&b.x0).map(|(a, c)| a * c).sum();
    let x0_sq = norm_sq(&b.x0);
    let l = b.lambda;
    q_minus - 4.0 * dot + (x0_sq + l * l * (b.d * b.d - 1.0)) * q_plus + 2.0 * b.d * l * (1.0 - norm_sq(q))
}

fn ball_quadratic_grad(q: &[f64], b: &BubbleParams) -> (Vec<f64>, f64) {
    let n = b.nn();
    let l = b.lambda;
    let c_plus = norm_sq(&b.x0) + l * l * (b.d * b.d - 1.0);
    let mut grad = vec![0.0; n];
    for i in 0..n {
        let qi = q[i];
        // ∇Q⁻, ∇Q and −2q terms
        let shift_minus = if i == n - 1 { qi - 1.0 } else { qi };
        let shift_plus = if i == n - 1 { qi + 1.0 } else { qi };
        grad[i] = 2.0 * shift_minus + c_plus * 2.0 * shift_plus - 4.0 * b.d * l * qi;
        if i < n - 1 {
            grad[i] -= 4.0 * b.x0[i];
        }
    }
    let lap = 2.0 * n as f64 * (1.0 + c_plus) - 4.0 * b.d * l * n as f64;
    (grad, lap)
}

/// Ball bubble V at a closed-ball point (smooth across the south pole).
pub fn eval_v_ball(q: &[f64], b: &BubbleParams) -> f64 {
    let n = b.nn();
    let e = ball_quadratic(q, b);
    if n == 2 {
        (16.0 * b.lambda * b.lambda / (e * e)).ln()
    } else {
        let a = (n as f64 - 2.0) / 2.0;
        let c = (16.0 * n as f64 * (n as f64 - 1.0) * b.lambda * b.lambda).powf((n as f64 - 2.0) / 4.0);
        c * e.powf(-a)
    }
}

/// Exact gradient of V on the ball.
pub fn grad_v_ball(q: &[f64], b: &BubbleParams) -> Vec<f64> {
    let n = b.nn();
    let e = ball_quadratic(q, b);
    let (ge, _) = ball_quadratic_grad(q, b);
    if n == 2 {
        ge.iter().map(|g| -2.0 * g / e).collect()
    } else {
        let a = (n as f64 - 2.0) / 2.0;
        let v = eval_v_ball(q, b);
        // V = c E^{-a} ⟹ ∇V = −a V ∇E / E
        ge.iter().map(|g| -a * v * g / e).collect()
    }
}

/// Exact Laplacian of V on the ball.
pub fn laplacian_v_ball(q: &[f64], b: &BubbleParams) -> f64 {
    let n = b.nn();
    let e = ball_quadratic(q, b);
    let (ge, le) = ball_quadratic_grad(q, b);
    let g2 = norm_sq(&ge);
    if n == 2 {
        -2.0 * (le * e - g2) / (e * e)
    } else {
        let a = (n as f64 - 2.0) / 2.0;
        let v = eval_v_ball(q, b);
        v * (a * (a + 1.0) * g2 / (e * e) - a * le / e)
    }
}

/// Interior and boundary residuals of the unperturbed ball problems over a
/// deterministic sample set (tensor grid of interior points kept 1e-3 away
/// from the sphere, plus 64 boundary points), computed with the exact
/// closed-form derivatives above.
pub fn residual_unperturbed(b: &BubbleParams) -> (f64, f64) {
    let n = b.nn();
    let mut interior_max: f64 = 0.0;
    let points_per_axis: usize = if n == 2 { 20 } else { 12 };
    let mut idx = vec![0usize; n];
    let total = points_per_axis.pow(n as u32);
    for flat in 0..total {
        let mut rem = flat;
        for i in 0..n {
            idx[i] = rem % points_per_axis;
            rem /= points_per_axis;
        }
        let q: Vec<f64> = idx
            .iter()
            .map(|&k| -1.0 + (2.0 * k as f64 + 1.0) / points_per_axis as f64)
            .collect();
        let r = norm_sq(&q).sqrt();
        if r > 1.0 - 1e-3 {
            continue;
        }
        interior_max = interior_max.max(interior_residual(&q, b).abs());
    }
    let mut boundary_max: f64 = 0.0;
    for k in 0..64 {
        let q = boundary_sample(n, k, 64);
        boundary_max = boundary_max.max(boundary_residual(&q, b).abs());
    }
    (interior_max, boundary_max)
}

/// −ΔV + 2e^V for n = 2; −(4(n−1)/(n−2))ΔV + V^{(n+2)/(n−2)} for n ≥ 3.
pub fn interior_residual(q: &[f64], b: &BubbleParams) -> f64 {
    let n = b.nn();
    let lap = laplacian_v_ball(q, b);
    if n == 2 {
        -lap + 2.0 * eval_v_ball(q, b).exp()
    } else {
        let v = eval_v_ball(q, b);
        let nf = n as f64;
        -4.0 * (nf - 1.0) / (nf - 2.0) * lap + v.powf((nf + 2.0) / (nf - 2.0))
    }
}

/// ∂_νV + 2 − 2D e^{V/2} for n = 2;
/// (2/(n−2))∂_νV + V − (D/√(n(n−1))) V^{n/(n−2)} for n ≥ 3.
pub fn boundary_residual(q: &[f64], b: &BubbleParams) -> f64 {
    let n = b.nn();
    let grad = grad_v_ball(q, b);
    let dnu: f64 = grad.iter().zip(q).map(|(g, c)| g * c).sum();
    if n == 2 {
        let v = eval_v_ball(q, b);
        dnu + 2.0 - 2.0 * b.d * (v / 2.0).exp()
    } else {
        let v = eval_v_ball(q, b);
        let nf = n as f64;
        2.0 / (nf - 2.0) * dnu + v - b.d / (nf * (nf - 1.0)).sqrt() * v.powf(nf / (nf - 2.0))
    }
}

fn boundary_sample(n: usize, k: usize, total: usize) -> Vec<f64> {
    match n {
        2 => {
            let th = 2.0 * std::f64::consts::PI * k as f64 / total as f64;
            vec![th.cos(), th.sin()]
        }
        _ => {
            // deterministic spiral-type points on S^{n-1}
            let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
            let t = (k as f64 + 0.5) / total as f64;
            let phi = 2.0 * std::f64::consts::PI * ((k as f64 / golden) % 1.0);
            let cos_t = 1.0 - 2.0 * t;
            let sin_t = (1.0 - cos_t * cos_t).sqrt();
            match n {
                3 => vec![sin_t * phi.cos(), sin_t * phi.sin(), cos_t],
                4 => {
                    let psi = 2.0 * std::f64::consts::PI * ((k as f64 * golden * golden) % 1.0);
                    let c = psi.cos();
                    vec![sin_t * phi.cos() * c, sin_t * phi.sin() * c, sin_t * psi.sin(), cos_t]
                }
                _ => {
                    let psi = 2.0 * std::f64::consts::PI * ((k as f64 * golden * golden) % 1.0);
                    let chi = 2.0 * std::f64::consts::PI * ((k as f64 * golden * golden * golden) % 1.0);
                    let v = [
                        sin_t * phi.cos() * psi.cos(),
                        sin_t * phi.sin() * psi.cos(),
                        sin_t * psi.sin() * chi.cos(),
                        sin_t * psi.sin() * chi.sin(),
                        cos_t,
                    ];
                    let nrm = norm_sq(&v).sqrt();
                    v.iter().map(|c| c / nrm).collect()
                }
            }
        }
    }
}

/// Second-order jet of U_{x₀,λ} in x around a half-space point: exact values,
/// gradient, and Laplacian of the closed form by jet arithmetic.
fn u_jet(x: &[f64], b: &BubbleParams) -> Jet {
    let n = b.nn();
    let dj = b.denom_jet(x, 2);
    if n == 2 {
        // 2 log(2λ) − 2 log D: log-jet via log(c(1+u)) = log c + log(1+u)
        let c = dj.coeff(&vec![0; n]);
        let u = dj.scale(1.0 / c).sub(&Jet::constant(n, 2, 1.0));
        let mut logj = Jet::constant(n, 2, c.ln());
        logj = logj.add(&u).sub(&u.mul(&u).scale(0.5));
        Jet::constant(n, 2, (2.0 * b.lambda).ln() * 2.0).sub(&logj.scale(2.0))
    } else {
        let a = (n as f64 - 2.0) / 2.0;
        let c = (4.0 * n as f64 * (n as f64 - 1.0)).powf((n as f64 - 2.0) / 4.0);
        dj.powf(-a).scale(c * b.lambda.powf(a))
    }
}

/// The n kernel elements Z^i = ∂_{x₀,i} U (i < n) and Z^n = ∂_λ U, exact
/// closed forms evaluated at a half-space point.
pub fn kernel_elements(p: &HalfSpacePoint, b: &BubbleParams) -> Vec<f64> {
    kernel_jets(p, b, 0).iter().map(|j| j.coeff(&vec![0; b.nn()])).collect()
}

/// Jets (order `order`) of the kernel elements in x around p; order 2 gives
/// exact gradients and Laplacians for the linearized residuals.
pub fn kernel_jets(p: &HalfSpacePoint, b: &BubbleParams, order: usize) -> Vec<Jet> {
    let n = b.nn();
    let x = p.coords();
    let ord = order.max(0) + 2 * 0 + order; // jets at requested order
    let ord = ord.max(order);
    let dj = b.denom_jet(&x, ord);
    let dinv = dj.recip();
    let l = b.lambda;
    let mut out = Vec::with_capacity(n);
    if n == 2 {
        // ∂_{x₀}U = 4(x−x₀)/D
        let mut a_lin = Jet::constant(n, ord, 4.0 * (x[0] - b.x0[0]));
        a_lin.set_coeff(vec![1, 0], 4.0);
        out.push(a_lin.mul(&dinv));
        // ∂_λU = 2/λ − 2(2D(x_n+Dλ) − 2λ)/D
        let mut dldj = Jet::constant(n, ord, 2.0 * b.d * (x[1] + b.d * l) - 2.0 * l);
        dldj.set_coeff(vec![0, 1], 2.0 * b.d);
        out.push(Jet::constant(n, ord, 2.0 / l).sub(&dldj.scale(2.0).mul(&dinv)));
    } else {
        let a = (n as f64 - 2.0) / 2.0;
        let c = (4.0 * n as f64 * (n as f64 - 1.0)).powf((n as f64 - 2.0) / 4.0);
        let d_pow = dj.powf(-a - 1.0);
        for i in 0..n - 1 {
            // ∂_{x₀,i}U = 2aCλ^a (x_i−x₀,i) D^{−a−1}
            let mut lin = Jet::constant(n, ord, x[i] - b.x0[i]);
            let mut e = vec![0u8; n];
            e[i] = 1;
            lin.set_coeff(e, 1.0);
            out.push(lin.mul(&d_pow).scale(2.0 * a * c * l.powf(a)));
        }
        // ∂_λU = aCλ^{a−1}D^{−a} − aCλ^a (2D(x_n+Dλ)−2λ) D^{−a−1}
        let term1 = dj.powf(-a).scale(a * c * l.powf(a - 1.0));
        let mut dld = Jet::constant(n, ord, 2.0 * b.d * (x[n - 1] + b.d * l) - 2.0 * l);
        let mut e = vec![0u8; n];
        e[n - 1] = 1;
        dld.set_coeff(e, 2.0 * b.d);
        out.push(term1.sub(&dld.mul(&d_pow).scale(a * c * l.powf(a))));
    }
    out
}

/// Residuals of the linearized half-space problem for one kernel element:
/// interior −ΔZ·(4(n−1)/(n−2) for n≥3, 1 for n=2) + (nonlinearity)'(U)·Z and
/// the matching boundary identity at x_n = 0. Both vanish identically for
/// the exact kernels.
pub fn kernel_linearized_residual(p: &HalfSpacePoint, b: &BubbleParams, which: usize) -> (f64, f64) {
    let n = b.nn();
    let x = p.coords();
    let zj = &kernel_jets(p, b, 2)[which];
    let zero = vec![0u8; n];
    let z = zj.coeff(&zero);
    let mut lap = 0.0;
    for i in 0..n {
        let mut e = vec![0u8; n];
        e[i] = 2;
        lap += 2.0 * zj.coeff(&e);
    }
    let mut en = vec![0u8; n];
    en[n - 1] = 1;
    let dz_n = zj.coeff(&en);
    let u = eval_u_halfspace(p, b);
    if n == 2 {
        let interior = -lap + 2.0 * u.exp() * z;
        // ∂_ν = −∂_{x_n} on the boundary
        let boundary = if x[1] == 0.0 { -dz_n - b.d * (u / 2.0).exp() * z } else { 0.0 };
        (interior, boundary)
    } else {
        let nf = n as f64;
        let interior = -4.0 * (nf - 1.0) / (nf - 2.0) * lap + (nf + 2.0) / (nf - 2.0) * u.powf(4.0 / (nf - 2.0)) * z;
        let boundary = if x[n - 1] == 0.0 {
            -2.0 / (nf - 2.0) * dz_n - nf / ((nf - 2.0) * (nf * (nf - 1.0)).sqrt()) * b.d * u.powf(2.0 / (nf - 2.0)) * z
        } else {
            0.0
        };
        (interior, boundary)
    }
}

/// Exact gradient of U on the half-space (used by the energy functionals'
/// half-space checks and by tests).
pub fn grad_u_halfspace(p: &HalfSpacePoint, b: &BubbleParams) -> Vec<f64> {
    let n = b.nn();
    let j = u_jet(&p.coords(), b);
    (0..n)
        .map(|i| {
            let mut e = vec![0u8; n];
            e[i] = 1;
            j.coeff(&e)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{invert_coords, rho, Dimension};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn bubble(n: usize, d: f64, x0: Vec<f64>, l: f64) -> BubbleParams {
        BubbleParams::new(Dimension::new(n).unwrap(), d, x0, l).unwrap()
    }

    #[test]
    fn u_values() {
        let b = bubble(2, 2.0, vec![0.0], 1.0);
        let p = HalfSpacePoint::new(vec![0.0], 0.0).unwrap();
        assert!((eval_u_halfspace(&p, &b) - 2.0 * (2.0f64 / 3.0).ln()).abs() < 1e-14);
        let b3 = bubble(3, 2.0, vec![0.0, 0.0], 1.0);
        let p3 = HalfSpacePoint::new(vec![0.0, 0.0], 0.0).unwrap();
        let expect = 24.0f64.powf(0.25) / 3.0f64.sqrt();
        assert!((eval_u_halfspace(&p3, &b3) - expect).abs() < 1e-13);
    }

    #[test]
    fn translation_covariance() {
        let b0 = bubble(2, 1.5, vec![0.0], 0.7);
        let bs = bubble(2, 1.5, vec![0.4], 0.7);
        let p = HalfSpacePoint::new(vec![1.1], 0.3).unwrap();
        let ps = HalfSpacePoint::new(vec![1.5], 0.3).unwrap();
        assert_eq!(eval_u_halfspace(&p, &b0), eval_u_halfspace(&ps, &bs));
    }

    #[test]
    fn pullback_identity_2d() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = bubble(2, 2.0, vec![0.3], 0.8);
        for _ in 0..20 {
            let p = HalfSpacePoint::new(vec![rng.gen_range(-2.0..2.0)], rng.gen_range(0.0..2.0)).unwrap();
            let q = invert_coords(&p.coords());
            let v = eval_v_ball(&q, &b);
            let u = eval_u_halfspace(&p, &b);
            let r = rho(&p, Dimension::new(2).unwrap());
            assert!((v - (u - r)).abs() < 1e-12, "V∘I = U − ρ violated: {v} vs {}", u - r);
        }
    }

    #[test]
    fn pullback_identity_3d() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let b = bubble(3, 1.5, vec![0.2, -0.1], 1.3);
        for _ in 0..20 {
            let p = HalfSpacePoint::new(
                vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                rng.gen_range(0.0..2.0),
            )
            .unwrap();
            let q = invert_coords(&p.coords());
            let v = eval_v_ball(&q, &b);
            let u = eval_u_halfspace(&p, &b);
            let r = rho(&p, Dimension::new(3).unwrap());
            assert!((v * r - u).abs() < 1e-12 * u.abs().max(1.0), "(V∘I)·ρ = U violated");
        }
    }

    #[test]
    fn cross_evaluation_at_north_pole() {
        let b = bubble(2, 2.0, vec![0.0], 1.0);
        let np = [0.0, 1.0];
        let origin = HalfSpacePoint::new(vec![0.0], 0.0).unwrap();
        let r = rho(&origin, Dimension::new(2).unwrap());
        assert!((eval_v_ball(&np, &b) - (eval_u_halfspace(&origin, &b) - r)).abs() < 1e-13);
    }

    #[test]
    fn positivity_for_higher_dimensions() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 3..=5 {
            let b = bubble(n, 1.8, vec![0.1; n - 1], 0.9);
            for _ in 0..50 {
                let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
                assert!(eval_v_ball(&q, &b) > 0.0);
                let p = HalfSpacePoint::new((0..n - 1).map(|_| rng.gen_range(-2.0..2.0)).collect(), rng.gen_range(0.0..2.0)).unwrap();
                assert!(eval_u_halfspace(&p, &b) > 0.0);
            }
        }
    }

    #[test]
    fn scaling_structure() {
        // n=2: U_{x₀,λ}(x₀+λz̄, λz_n) − U_{0,1}(z) = −2 log λ, exactly
        let l = 0.37;
        let b = bubble(2, 2.2, vec![0.9], l);
        let b1 = bubble(2, 2.2, vec![0.0], 1.0);
        let z = [0.4, 1.3];
        let p = HalfSpacePoint::new(vec![0.9 + l * z[0]], l * z[1]).unwrap();
        let p1 = HalfSpacePoint::new(vec![z[0]], z[1]).unwrap();
        let diff = eval_u_halfspace(&p, &b) - eval_u_halfspace(&p1, &b1);
        assert!((diff + 2.0 * l.ln()).abs() < 1e-13);
        // n≥3: ratio λ^{-(n-2)/2}
        let b3 = bubble(4, 1.6, vec![0.2, -0.3, 0.0], l);
        let b31 = bubble(4, 1.6, vec![0.0, 0.0, 0.0], 1.0);
        let z4 = [0.5, -0.2, 0.1, 0.8];
        let p4 = HalfSpacePoint::new(
            vec![0.2 + l * z4[0], -0.3 + l * z4[1], 0.0 + l * z4[2]],
            l * z4[3],
        )
        .unwrap();
        let p41 = HalfSpacePoint::new(vec![z4[0], z4[1], z4[2]], z4[3]).unwrap();
        let ratio = eval_u_halfspace(&p4, &b3) / eval_u_halfspace(&p41, &b31);
        assert!((ratio - l.powf(-1.0)).abs() < 1e-12, "ratio {ratio}");
    }

    #[test]
    fn residuals_vanish_for_true_bubbles() {
        for (n, d, x0, l) in [
            (2usize, 2.0, vec![0.0], 1.0),
            (2, 1.3, vec![0.7], 0.4),
            (2, 3.0, vec![-1.2], 2.0),
            (3, 2.0, vec![0.0, 0.0], 1.0),
            (3, 1.5, vec![0.4, -0.2], 0.6),
            (3, 2.5, vec![-0.3, 0.8], 1.7),
        ] {
            let b = bubble(n, d, x0, l);
            let (ri, rb) = residual_unperturbed(&b);
            assert!(ri < 1e-9, "interior residual n={n}: {ri}");
            assert!(rb < 1e-9, "boundary residual n={n}: {rb}");
        }
    }

    #[test]
    fn corrupted_bubble_fails_boundary_condition() {
        let b = bubble(2, 2.0, vec![0.0], 1.0);
        let bad = bubble(2, 2.0, vec![0.0], 1.1);
        let mut worst: f64 = 0.0;
        for k in 0..64 {
            let th = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
            let q = [th.cos(), th.sin()];
            // boundary term evaluated with λ→1.1λ, interior solution unchanged
            let grad = grad_v_ball(&q, &b);
            let dnu: f64 = grad.iter().zip(&q).map(|(g, c)| g * c).sum();
            let v_bad = eval_v_ball(&q, &bad);
            worst = worst.max((dnu + 2.0 - 2.0 * b.d * (v_bad / 2.0).exp()).abs());
        }
        assert!(worst > 1e-3, "negative control too small: {worst}");
    }

    #[test]
    fn kernel_value_example() {
        // ∂_λU at the origin for x₀=0, λ=1, D=2 equals −2
        let b = bubble(2, 2.0, vec![0.0], 1.0);
        let p = HalfSpacePoint::new(vec![0.0], 0.0).unwrap();
        let z = kernel_elements(&p, &b);
        assert!((z[1] + 2.0).abs() < 1e-14, "Z² = {}", z[1]);
    }

    #[test]
    fn kernels_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in [2usize, 3] {
            let d = 1.9;
            let x0: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let l = 0.9;
            let b = bubble(n, d, x0.clone(), l);
            for _ in 0..50 {
                let p = HalfSpacePoint::new(
                    (0..n - 1).map(|_| rng.gen_range(-1.5..1.5)).collect(),
                    rng.gen_range(0.0..1.5),
                )
                .unwrap();
                let z = kernel_elements(&p, &b);
                let h = 1e-5;
                for i in 0..n - 1 {
                    let mut xp = x0.clone();
                    xp[i] += h;
                    let mut xm = x0.clone();
                    xm[i] -= h;
                    let fd = (eval_u_halfspace(&p, &bubble(n, d, xp, l))
                        - eval_u_halfspace(&p, &bubble(n, d, xm, l)))
                        / (2.0 * h);
                    assert!((z[i] - fd).abs() < 1e-6, "Z^{i} vs fd: {} {}", z[i], fd);
                }
                let fd_l = (eval_u_halfspace(&p, &bubble(n, d, x0.clone(), l + h))
                    - eval_u_halfspace(&p, &bubble(n, d, x0.clone(), l - h)))
                    / (2.0 * h);
                assert!((z[n - 1] - fd_l).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn kernels_solve_linearized_problem() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for n in [2usize, 3] {
            let b = bubble(n, 2.0, vec![0.2; n - 1], 1.1);
            for which in 0..n {
                for k in 0..50 {
                    let on_boundary = k % 2 == 0;
                    let p = HalfSpacePoint::new(
                        (0..n - 1).map(|_| rng.gen_range(-2.0..2.0)).collect(),
                        if on_boundary { 0.0 } else { rng.gen_range(0.05..2.0) },
                    )
                    .unwrap();
                    let (ri, rb) = kernel_linearized_residual(&p, &b, which);
                    assert!(ri.abs() < 1e-8, "interior linearized residual: {ri}");
                    assert!(rb.abs() < 1e-8, "boundary linearized residual: {rb}");
                }
            }
        }
    }
}
