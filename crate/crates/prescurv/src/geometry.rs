//! The inversion map between the upper half-space and the unit ball, and the
//! conformal factors ϱ and ρ attached to it.
//!
//! The inversion
//! I(x̄, x_n) = (2x̄, 1 − |x̄|² − x_n²) / (|x̄|² + (x_n+1)²)
//! is an involution exchanging R^n_+ and B^n; the same formula maps ball
//! points back to the half-space. It is conformal with
//! I*g = ϱ|dx|², ϱ(x̄,x_n) = 4/(|x̄|²+(x_n+1)²)².

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("point has wrong dimension: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("x_n must be nonnegative, got {0}")]
    NegativeHeight(f64),
    #[error("point lies outside the closed unit ball: |q| = {0}")]
    OutsideBall(f64),
    #[error("inversion is singular at the south pole")]
    SouthPoleSingular,
}

/// Ambient dimension n ≥ 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dimension(usize);

impl Dimension {
    pub fn new(n: usize) -> Result<Self, GeometryError> {
        if n < 2 {
            return Err(GeometryError::DimensionTooSmall(n));
        }
        Ok(Dimension(n))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// A point (x̄, x_n) of the closed upper half-space R^n_+.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpacePoint {
    pub bar: Vec<f64>,
    pub height: f64,
}

impl HalfSpacePoint {
    pub fn new(bar: Vec<f64>, height: f64) -> Result<Self, GeometryError> {
        if height < 0.0 || !height.is_finite() || bar.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::NegativeHeight(height));
        }
        Ok(HalfSpacePoint { bar, height })
    }

    pub fn dim(&self) -> usize {
        self.bar.len() + 1
    }

    /// Full coordinate vector (x̄, x_n).
    pub fn coords(&self) -> Vec<f64> {
        let mut v = self.bar.clone();
        v.push(self.height);
        v
    }

    /// |x̄|² + (x_n+1)², the denominator of the inversion.
    pub fn inv_denominator(&self) -> f64 {
        norm_sq(&self.bar) + (self.height + 1.0) * (self.height + 1.0)
    }
}

/// A point of the closed unit ball (|q| ≤ 1 up to 1e-12 slack).
#[derive(Debug, Clone, PartialEq)]
pub struct BallPoint {
    pub coords: Vec<f64>,
}

impl BallPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self, GeometryError> {
        let r = norm_sq(&coords).sqrt();
        if r > 1.0 + 1e-12 || !r.is_finite() {
            return Err(GeometryError::OutsideBall(r));
        }
        Ok(BallPoint { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm(&self) -> f64 {
        norm_sq(&self.coords).sqrt()
    }

    pub fn is_on_sphere(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    /// North pole (0, ..., 0, 1).
    pub fn north_pole(n: usize) -> Self {
        let mut c = vec![0.0; n];
        c[n - 1] = 1.0;
        BallPoint { coords: c }
    }

    /// South pole (0, ..., 0, -1), the singular point of the inverse map.
    pub fn south_pole(n: usize) -> Self {
        let mut c = vec![0.0; n];
        c[n - 1] = -1.0;
        BallPoint { coords: c }
    }
}

pub fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum()
}

/// Raw inversion formula on coordinates; defined wherever the denominator
/// |x̄|²+(x_n+1)² is positive. Involution: applying it twice is the identity.
pub fn invert_coords(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let bar_sq: f64 = x[..n - 1].iter().map(|c| c * c).sum();
    let xn = x[n - 1];
    let denom = bar_sq + (xn + 1.0) * (xn + 1.0);
    let mut out = Vec::with_capacity(n);
    for &c in &x[..n - 1] {
        out.push(2.0 * c / denom);
    }
    out.push((1.0 - bar_sq - xn * xn) / denom);
    out
}

/// The inversion I: R^n_+ → B^n.
pub fn inversion(p: &HalfSpacePoint) -> BallPoint {
    let coords = invert_coords(&p.coords());
    // The image can exceed |q| = 1 by a few ulps for boundary points.
    BallPoint { coords }
}

/// The inverse map I⁻¹ = I: B^n → R^n_+, singular at the south pole.
pub fn inversion_inverse(q: &BallPoint) -> Result<HalfSpacePoint, GeometryError> {
    let n = q.dim();
    let mut south = q.coords.clone();
    south[n - 1] += 1.0;
    if norm_sq(&south).sqrt() < 1e-12 {
        return Err(GeometryError::SouthPoleSingular);
    }
    let coords = invert_coords(&q.coords);
    let (bar, height) = coords.split_at(n - 1);
    // heights can come out as -0.0 or tiny negatives for sphere points
    Ok(HalfSpacePoint {
        bar: bar.to_vec(),
        height: height[0].max(0.0),
    })
}

/// Conformal factor ϱ(x̄,x_n) = 4/(|x̄|²+(x_n+1)²)² of the inversion.
pub fn conformal_factor(p: &HalfSpacePoint) -> f64 {
    let d = p.inv_denominator();
    4.0 / (d * d)
}

/// ρ = ϱ^{(n-2)/4} for n ≥ 3, log ϱ for n = 2.
pub fn rho(p: &HalfSpacePoint, n: Dimension) -> f64 {
    let v = conformal_factor(p);
    if n.get() == 2 {
        v.ln()
    } else {
        v.powf((n.get() as f64 - 2.0) / 4.0)
    }
}

/// Jacobian matrix of the inversion at p (rows indexed by image coordinates).
/// Conformality means J^T J = ϱ·Id, so the operator norm is √ϱ(p).
pub fn inversion_jacobian(p: &HalfSpacePoint) -> Vec<Vec<f64>> {
    let x = p.coords();
    let n = x.len();
    let bar_sq: f64 = x[..n - 1].iter().map(|c| c * c).sum();
    let xn = x[n - 1];
    let d = bar_sq + (xn + 1.0) * (xn + 1.0);
    let d2 = d * d;
    let mut jac = vec![vec![0.0; n]; n];
    // ∂_j of 2x_i/d for i < n-1
    for i in 0..n - 1 {
        for j in 0..n {
            let dd_j = if j < n - 1 { 2.0 * x[j] } else { 2.0 * (xn + 1.0) };
            let num = if i == j { 2.0 * d } else { 0.0 };
            jac[i][j] = (num - 2.0 * x[i] * dd_j) / d2;
        }
    }
    // last coordinate (1 - bar_sq - xn²)/d
    let num_n = 1.0 - bar_sq - xn * xn;
    for j in 0..n {
        let (dnum, dd_j) = if j < n - 1 {
            (-2.0 * x[j], 2.0 * x[j])
        } else {
            (-2.0 * xn, 2.0 * (xn + 1.0))
        };
        jac[n - 1][j] = (dnum * d - num_n * dd_j) / d2;
    }
    jac
}

/// Residuals of the conformal-factor PDE satisfied by ρ, evaluated with exact
/// closed-form derivatives. For n = 2: (Δρ, ∂_ν ρ − 2e^{ρ/2}) where the
/// boundary part is meaningful only at x_n = 0. For n ≥ 3:
/// (Δρ, (2/(n-2))∂_ν ρ − ρ^{n/(n-2)}).
pub fn rho_residual(p: &HalfSpacePoint, n: Dimension) -> (f64, f64) {
    let nn = n.get();
    let x = p.coords();
    let bar_sq: f64 = x[..nn - 1].iter().map(|c| c * c).sum();
    let xn = x[nn - 1];
    let s = bar_sq + (xn + 1.0) * (xn + 1.0);
    if nn == 2 {
        // ρ = log4 − 2 log s; Δρ = −2(Δs·s − |∇s|²)/s² with Δs = 4 (2D), |∇s|² = 4s
        let lap = -2.0 * (4.0 * s - 4.0 * s) / (s * s);
        // ∂_ν = −∂_{x_n}: ∂_{x_n}ρ = −2·2(x_n+1)/s
        let dnu = 4.0 * (xn + 1.0) / s;
        let rho_val = (4.0 / (s * s)).ln();
        (lap, dnu - 2.0 * (rho_val / 2.0).exp())
    } else {
        // ρ = 2^{(n-2)/2} s^{-(n-2)/2}
        let a = (nn as f64 - 2.0) / 2.0;
        let c = 2.0f64.powf(a);
        // ∇ρ = -a·c·s^{-a-1}∇s, Δρ = c[a(a+1)s^{-a-2}|∇s|² - a s^{-a-1}Δs]
        let grad_s_sq = 4.0 * s;
        let lap_s = 2.0 * nn as f64;
        let lap = c * (a * (a + 1.0) * s.powf(-a - 2.0) * grad_s_sq - a * s.powf(-a - 1.0) * lap_s);
        let d_n = -a * c * s.powf(-a - 1.0) * 2.0 * (xn + 1.0);
        let dnu = -d_n;
        let rho_val = c * s.powf(-a);
        let bres = 2.0 / (nn as f64 - 2.0) * dnu - rho_val.powf(nn as f64 / (nn as f64 - 2.0));
        (lap, bres)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn d(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn origin_maps_to_north_pole() {
        let p = HalfSpacePoint::new(vec![0.0], 0.0).unwrap();
        let q = inversion(&p);
        assert_eq!(q.coords, vec![0.0, 1.0]);
    }

    #[test]
    fn involution_in_two_dimensions() {
        let p = HalfSpacePoint::new(vec![0.3], 0.7).unwrap();
        let q = inversion(&p);
        let back = inversion_inverse(&q).unwrap();
        assert!((back.bar[0] - 0.3).abs() < 1e-14);
        assert!((back.height - 0.7).abs() < 1e-14);
    }

    #[test]
    fn far_points_approach_south_pole() {
        let p = HalfSpacePoint::new(vec![0.0], 1e6).unwrap();
        let q = inversion(&p);
        assert!((q.coords[1] + 1.0).abs() < 1e-5);
    }

    #[test]
    fn involution_on_random_points_all_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=5 {
            for _ in 0..100 {
                let bar: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let h = rng.gen_range(0.0..3.0);
                let p = HalfSpacePoint::new(bar.clone(), h).unwrap();
                let round = invert_coords(&invert_coords(&p.coords()));
                for (a, b) in round.iter().zip(p.coords()) {
                    assert!((a - b).abs() < 1e-12, "involution failed in n={n}");
                }
            }
        }
    }

    #[test]
    fn boundary_maps_to_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 2..=5 {
            for _ in 0..50 {
                let bar: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-4.0..4.0)).collect();
                let p = HalfSpacePoint::new(bar, 0.0).unwrap();
                let q = inversion(&p);
                assert!((q.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn round_trip_interior_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let q = BallPoint::new(v).unwrap();
            let p = inversion_inverse(&q).unwrap();
            let back = inversion(&p);
            for (a, b) in back.coords.iter().zip(&q.coords) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn north_pole_maps_to_origin() {
        let q = BallPoint::north_pole(3);
        let p = inversion_inverse(&q).unwrap();
        assert!(p.bar.iter().all(|c| c.abs() < 1e-15));
        assert!(p.height.abs() < 1e-15);
    }

    #[test]
    fn south_pole_is_singular() {
        let q = BallPoint::south_pole(4);
        assert_eq!(inversion_inverse(&q), Err(GeometryError::SouthPoleSingular));
    }

    #[test]
    fn conformal_factor_values() {
        let p0 = HalfSpacePoint::new(vec![0.0], 0.0).unwrap();
        assert!((conformal_factor(&p0) - 4.0).abs() < 1e-15);
        let p1 = HalfSpacePoint::new(vec![0.0], 1.0).unwrap();
        assert!((conformal_factor(&p1) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rho_values() {
        let p0 = HalfSpacePoint::new(vec![0.0], 0.0).unwrap();
        assert!((rho(&p0, d(2)) - 4.0f64.ln()).abs() < 1e-14);
        let p0_3 = HalfSpacePoint::new(vec![0.0, 0.0], 0.0).unwrap();
        assert!((rho(&p0_3, d(3)) - 2.0f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn jacobian_operator_norm_is_sqrt_conformal_factor() {
        // finite-difference check of J and J^T J = ϱ·Id
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let bar: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let h = rng.gen_range(0.1..2.0);
            let p = HalfSpacePoint::new(bar, h).unwrap();
            let jac = inversion_jacobian(&p);
            let x = p.coords();
            let eps = 1e-6;
            for j in 0..3 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += eps;
                xm[j] -= eps;
                let fp = invert_coords(&xp);
                let fm = invert_coords(&xm);
                for i in 0..3 {
                    let fd = (fp[i] - fm[i]) / (2.0 * eps);
                    assert!((fd - jac[i][j]).abs() < 1e-6, "J[{i}][{j}] mismatch");
                }
            }
            let rho_v = conformal_factor(&p);
            for a in 0..3 {
                for b in 0..3 {
                    let dot: f64 = (0..3).map(|i| jac[i][a] * jac[i][b]).sum();
                    let expect = if a == b { rho_v } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-10 * (1.0 + rho_v));
                }
            }
        }
    }

    #[test]
    fn rho_solves_its_boundary_problem() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=4 {
            for _ in 0..50 {
                let bar: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let interior = HalfSpacePoint::new(bar.clone(), rng.gen_range(0.1..3.0)).unwrap();
                let (lap, _) = rho_residual(&interior, d(n));
                assert!(lap.abs() < 1e-10, "interior rho residual n={n}: {lap}");
                let boundary = HalfSpacePoint::new(bar, 0.0).unwrap();
                let (_, bres) = rho_residual(&boundary, d(n));
                assert!(bres.abs() < 1e-10, "boundary rho residual n={n}: {bres}");
            }
        }
    }
}
