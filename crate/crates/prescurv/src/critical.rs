//! Critical points of ψ on the sphere, Morse classification, the Φ-cascade
//! at critical points, and the degree-based existence certificate.

use crate::energy::EnergyInput;
use crate::expansion::{self, ConstantsTable, ExpansionError};
use crate::fields::{rotation_to_north_pole, PolyField};
use crate::geometry::BallPoint;
use crate::quadrature::QuadratureSpec;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CriticalError {
    #[error("ψ is constant on the sphere; no critical-point structure")]
    ConstantPsi,
    #[error("D = 2/√3 is excluded by the two-dimensional theory")]
    DegenerateD,
    #[error("search incomplete: index parity sum {got} differs from χ(S^{{n-1}}) = {expected}")]
    SearchIncomplete { got: i64, expected: i64 },
    #[error("synthetic Morse data violates the Euler characteristic identity")]
    InconsistentInput,
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
}

/// A polished critical point of ψ with its Morse data and, after the
/// cascade, the first nonvanishing Φ_m.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalPoint {
    pub xi: Vec<f64>,
    pub psi_value: f64,
    pub grad_norm: f64,
    pub morse_index: usize,
    pub hessian_det: f64,
    pub degenerate: bool,
    pub first_phi: Option<(usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Exists,
    Inconclusive,
}

/// The existence certificate: which theorem case applied, the degree sum of
/// case (3), and the verdict.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub case: Option<u8>,
    pub points: Vec<CriticalPoint>,
    pub degree_sum: i64,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

/// Ambient polynomial whose restriction to the sphere is ψ.
fn psi_field(input: &EnergyInput, tab: &ConstantsTable) -> PolyField {
    input.k.scale(tab.a0).add(&input.h.ambient.scale(-tab.b0))
}

/// Deterministic dense seeds on S^{n-1}.
pub fn sphere_seeds(n: usize, count: usize) -> Vec<Vec<f64>> {
    let mut seeds = Vec::with_capacity(count);
    match n {
        2 => {
            for k in 0..count {
                let th = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                seeds.push(vec![th.cos(), th.sin()]);
            }
        }
        3 => {
            // Fibonacci sphere
            let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
            for k in 0..count {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = 2.0 * std::f64::consts::PI * (k as f64 / golden).fract();
                seeds.push(vec![r * phi.cos(), r * phi.sin(), z]);
            }
        }
        _ => {
            // Kronecker lattice through hyperspherical angles
            let alphas: [f64; 4] = [0.6180339887498949, 0.7548776662466927, 0.8191725133961644, 0.5436890126920763];
            for k in 0..count {
                let mut angles = Vec::with_capacity(n - 1);
                for j in 0..n - 1 {
                    let t = ((k as f64 + 0.5) * alphas[j]).fract();
                    let span = if j == n - 2 { 2.0 * std::f64::consts::PI } else { std::f64::consts::PI };
                    angles.push(t * span);
                }
                let (u, _) = crate::quadrature::direction_from_angles(&angles);
                seeds.push(u);
            }
        }
    }
    seeds
}

struct ReducedDerivatives {
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

fn reduced_derivatives(psi: &PolyField, xi: &[f64]) -> ReducedDerivatives {
    let n = xi.len();
    let rot = rotation_to_north_pole(xi);
    let grad_amb = psi.gradient_at(xi);
    let hess_amb = psi.hessian_at(xi);
    let radial: f64 = grad_amb.iter().zip(xi).map(|(g, x)| g * x).sum();
    let mut grad = DVector::zeros(n - 1);
    let mut hess = DMatrix::zeros(n - 1, n - 1);
    for i in 0..n - 1 {
        let ti: Vec<f64> = (0..n).map(|r| rot[r][i]).collect();
        grad[i] = ti.iter().zip(&grad_amb).map(|(a, b)| a * b).sum();
        for j in 0..n - 1 {
            let tj: Vec<f64> = (0..n).map(|r| rot[r][j]).collect();
            let mut v = 0.0;
            for a in 0..n {
                for b in 0..n {
                    v += ti[a] * hess_amb[a][b] * tj[b];
                }
            }
            hess[(i, j)] = v - if i == j { radial } else { 0.0 };
        }
    }
    ReducedDerivatives { grad, hess }
}

/// All critical points of ψ on S^{n-1}: dense seeding, projected Newton
/// polish to grad_norm below tolerance, deduplication, and the
/// Euler-characteristic completeness check.
pub fn find_critical_points(
    input: &EnergyInput,
    tab: &ConstantsTable,
) -> Result<Vec<CriticalPoint>, CriticalError> {
    let n = input.n.get();
    let psi = psi_field(input, tab);
    let seed_count = if n == 2 { 4096 } else { 8192 };
    let seeds = sphere_seeds(n, seed_count);
    // constancy check on the restriction
    let values: Vec<f64> = seeds.iter().map(|s| psi.eval(s)).collect();
    let vmax = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let vmin = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = vmax.abs().max(vmin.abs()).max(1e-300);
    if vmax - vmin < 1e-10 * scale.max(1.0) {
        return Err(CriticalError::ConstantPsi);
    }
    let grad_scale = seeds
        .iter()
        .map(|s| {
            let g = psi.gradient_at(s);
            let r: f64 = g.iter().zip(s).map(|(a, b)| a * b).sum();
            g.iter().zip(s).map(|(gi, xi)| gi - r * xi).map(|t| t * t).sum::<f64>().sqrt()
        })
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let tol = 1e-10 * grad_scale.max(1.0);
    let spacing = match n {
        2 => 2.0 * std::f64::consts::PI / seed_count as f64,
        _ => std::f64::consts::PI * (seed_count as f64).powf(-1.0 / (n as f64 - 1.0)),
    };

    let mut found: Vec<(Vec<f64>, f64)> = Vec::new();
    for seed in &seeds {
        let mut xi = seed.clone();
        let mut moved = 0.0;
        let mut ok = false;
        for _ in 0..60 {
            let rd = reduced_derivatives(&psi, &xi);
            let gnorm = rd.grad.norm();
            if gnorm < tol {
                ok = true;
                break;
            }
            let step = match rd.hess.clone().lu().solve(&(-&rd.grad)) {
                Some(s) => s,
                None => break,
            };
            let mut step = step;
            let max_step = 0.3;
            if step.norm() > max_step {
                step *= max_step / step.norm();
            }
            let rot = rotation_to_north_pole(&xi);
            let mut next: Vec<f64> = xi.clone();
            for r in 0..n {
                for i in 0..n - 1 {
                    next[r] += rot[r][i] * step[i];
                }
            }
            let nrm: f64 = next.iter().map(|c| c * c).sum::<f64>().sqrt();
            for c in next.iter_mut() {
                *c /= nrm;
            }
            moved += step.norm();
            // divergence trap: abandon seeds that wander too far
            if moved > 2.0 * spacing && step.norm() > 0.5 * spacing {
                // allow convergence from coarse lattices, but give up once a
                // seed keeps drifting
                if moved > 20.0 * spacing {
                    break;
                }
            }
            xi = next;
        }
        if !ok {
            continue;
        }
        if found.iter().all(|(p, _)| {
            let d2: f64 = p.iter().zip(&xi).map(|(a, b)| (a - b) * (a - b)).sum();
            d2.sqrt() > 1e-8
        }) {
            let v = psi.eval(&xi);
            found.push((xi, v));
        }
    }
    // deterministic ordering: by angle (n = 2) / lexicographic position
    found.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| *o != std::cmp::Ordering::Equal)
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut points = Vec::new();
    for (xi, v) in found {
        let rd = reduced_derivatives(&psi, &xi);
        let eig = rd.hess.clone().symmetric_eigen();
        let morse_index = eig.eigenvalues.iter().filter(|&&e| e < 0.0).count();
        let det: f64 = eig.eigenvalues.iter().product();
        let eig_scale = eig.eigenvalues.iter().map(|e| e.abs()).fold(0.0f64, f64::max).max(1e-300);
        let degenerate = det.abs() < 1e-8 * eig_scale.powi((n - 1) as i32);
        points.push(CriticalPoint {
            xi,
            psi_value: v,
            grad_norm: rd.grad.norm(),
            morse_index,
            hessian_det: det,
            degenerate,
            first_phi: None,
        });
    }
    // completeness proxy: Σ(−1)^ind = χ(S^{n-1})
    let expected = 1 - if n % 2 == 0 { 1 } else { -1 };
    let got: i64 = points.iter().map(|p| if p.morse_index % 2 == 0 { 1i64 } else { -1 }).sum();
    if got != expected {
        return Err(CriticalError::SearchIncomplete { got, expected });
    }
    Ok(points)
}

/// Evaluates Φ₁, Φ₂, … at a critical point until the first value that
/// clears the structural-zero tolerance; returns the augmented point.
pub fn phi_cascade(
    mut cp: CriticalPoint,
    input: &EnergyInput,
    max_order: usize,
    spec: &QuadratureSpec,
) -> Result<CriticalPoint, CriticalError> {
    let n = input.n.get();
    let xi = BallPoint::new(cp.xi.clone()).map_err(|_| CriticalError::ConstantPsi)?;
    let orders: Vec<usize> = if n == 2 {
        [1usize, 3, 4].into_iter().filter(|&m| m <= max_order).collect()
    } else {
        (1..=max_order).collect()
    };
    for m in orders {
        let value = if m == 1 {
            expansion::phi_1(&xi, input)?
        } else {
            match expansion::phi_m(&xi, m, input, max_order, spec) {
                Ok((v, _)) => v,
                Err(ExpansionError::UnsupportedOrder(_, _)) => break,
                Err(e) => return Err(e.into()),
            }
        };
        let scale = phi_scale(input, &xi, m);
        if value.abs() > 1e-8 * scale.max(1e-12) {
            cp.first_phi = Some((m, value));
            return Ok(cp);
        }
    }
    cp.first_phi = None;
    Ok(cp)
}

/// Magnitude scale of the Φ_m assembly, used to separate structural zeros
/// from cancellation noise: the largest term that enters the combination.
fn phi_scale(input: &EnergyInput, xi: &BallPoint, m: usize) -> f64 {
    // derivative magnitudes of K and H up to order m at ξ plus the ψ scale
    let mut s = 0.0f64;
    for field in [&input.k, &input.h.ambient] {
        for (alpha, c) in field.terms() {
            let deg: usize = alpha.iter().map(|&a| a as usize).sum();
            let _ = deg;
            s = s.max(c.abs());
        }
    }
    let grad_k: f64 = input.k.gradient_at(&xi.coords).iter().map(|g| g.abs()).fold(0.0, f64::max);
    s.max(grad_k) * (1.0 + input.d) * (m as f64 + 1.0) * 4.0 * std::f64::consts::PI
}

/// Report of the Euler–Poincaré degree computation on synthetic Morse data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DegreeReport {
    /// Σ_{f₁>0} (−1)^{ind}
    pub degree_sum: i64,
    /// 1 − degree_sum: the forced interior degree
    pub interior_sum: i64,
    /// both Euler–Poincaré routes agree
    pub consistency: bool,
}

/// The degree bookkeeping of the abstract critical-point proposition: checks
/// χ(S^{n-1}) = 1 − (−1)^n on the input, computes Σ_{f₁>0}(−1)^{ind}, and
/// cross-checks the doubled-manifold identity χ(S^n) = 1 + (−1)^n. Interior
/// critical points are forced exactly when 1 − Σ_{f₁>0}(−1)^{ind} ≠ 0.
pub fn punticrit_degree(points: &[(usize, i8)], n: usize) -> Result<DegreeReport, CriticalError> {
    let chi_boundary = 1 - if n % 2 == 0 { 1i64 } else { -1 };
    let total: i64 = points.iter().map(|&(ind, _)| sign_pow(ind)).sum();
    if total != chi_boundary {
        return Err(CriticalError::InconsistentInput);
    }
    let degree_sum: i64 = points.iter().filter(|&&(_, s)| s > 0).map(|&(ind, _)| sign_pow(ind)).sum();
    let interior_sum = 1 - degree_sum;
    // doubled manifold: indices shift by one where f₁ < 0
    let tilde_sum: i64 = points
        .iter()
        .map(|&(ind, s)| if s > 0 { sign_pow(ind) } else { -sign_pow(ind) })
        .sum();
    let chi_double = 1 + if n % 2 == 0 { 1i64 } else { -1 };
    let interior_from_double = (chi_double - tilde_sum) / 2;
    Ok(DegreeReport {
        degree_sum,
        interior_sum,
        consistency: interior_from_double == interior_sum,
    })
}

fn sign_pow(ind: usize) -> i64 {
    if ind % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Full certificate: cases (1)–(3) of the existence theorems.
pub fn certificate(
    input: &EnergyInput,
    tab: &ConstantsTable,
    spec: &QuadratureSpec,
    max_order: usize,
) -> Result<Certificate, CriticalError> {
    let n = input.n.get();
    if n == 2 && (input.d - 2.0 / 3.0f64.sqrt()).abs() < 1e-10 {
        return Err(CriticalError::DegenerateD);
    }
    let raw_points = find_critical_points(input, tab)?;
    let mut points = Vec::with_capacity(raw_points.len());
    for cp in raw_points {
        points.push(phi_cascade(cp, input, max_order, spec)?);
    }
    let mut notes = vec![
        "sign bridge: the theorem's {Φ_m(ξ) < 0} is the abstract proposition's {f₁(ξ) > 0} via f₁ = −(positive)·Φ_m".into(),
    ];

    let vmax = points.iter().map(|p| p.psi_value).fold(f64::NEG_INFINITY, f64::max);
    let vmin = points.iter().map(|p| p.psi_value).fold(f64::INFINITY, f64::min);
    let band = 1e-9 * (vmax - vmin).abs().max(1e-300);
    let maxima: Vec<&CriticalPoint> = points.iter().filter(|p| p.psi_value >= vmax - band).collect();
    let minima: Vec<&CriticalPoint> = points.iter().filter(|p| p.psi_value <= vmin + band).collect();

    // case (1): every global maximum has first Φ_m < 0
    let case1 = !maxima.is_empty()
        && maxima.iter().all(|p| matches!(p.first_phi, Some((_, v)) if v < 0.0));
    // case (2): every global minimum has first Φ_m > 0
    let case2 = !minima.is_empty()
        && minima.iter().all(|p| matches!(p.first_phi, Some((_, v)) if v > 0.0));
    // case (3): ψ Morse, every critical point has a first Φ_m ≠ 0, and the
    // degree sum over {Φ_m < 0} differs from 1
    let morse = points.iter().all(|p| !p.degenerate);
    if !morse {
        notes.push("ψ is not Morse at the stated tolerance; case (3) skipped".into());
    }
    let all_have_phi = points.iter().all(|p| p.first_phi.is_some());
    let degree_sum: i64 = points
        .iter()
        .filter(|p| matches!(p.first_phi, Some((_, v)) if v < 0.0))
        .map(|p| sign_pow(p.morse_index))
        .sum();
    let case3 = morse && all_have_phi && degree_sum != 1;

    let case = if case1 {
        Some(1)
    } else if case2 {
        Some(2)
    } else if case3 {
        Some(3)
    } else {
        None
    };
    if case.is_none() {
        notes.push("no hypothesis of the existence theorem is satisfied".into());
    }
    Ok(Certificate {
        case,
        points,
        degree_sum,
        verdict: if case.is_some() { Verdict::Exists } else { Verdict::Inconclusive },
        notes,
    })
}
