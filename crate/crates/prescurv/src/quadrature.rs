//! Deterministic adaptive quadrature over the half-space, the boundary
//! hyperplane, the unit ball, and the sphere, plus graded-mesh integration of
//! regularized singular integrands.
//!
//! One engine underlies everything: tensor-product Gauss–Kronrod (G7, K15)
//! rules on axis-aligned boxes with global error-ranked bisection. Unbounded
//! directions are compactified by rational maps (t ↦ t/(1−t) on half-lines,
//! t ↦ t/(1−t²) on full lines). Subdivision order and the final accumulation
//! order are fixed by region creation index, so identical inputs produce
//! bit-identical outputs.

use thiserror::Error;

/// Tolerances and budgets for one integration call.
#[derive(Debug, Clone)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Documented algebraic decay order of the integrand at infinity; must
    /// exceed the domain dimension for integrability.
    pub decay_order: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_subdivisions: 1_000_000,
            decay_order: 12,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tols(rel_tol: f64, abs_tol: f64) -> Self {
        QuadratureSpec { rel_tol, abs_tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("tolerance not reached: best estimate {0:?}")]
    ToleranceNotReached(IntegralResult),
    #[error("integrand returned a non-finite value")]
    NonFiniteIntegrand,
    #[error("integrand has a non-removable singularity at the marked point")]
    SingularityDetected,
    #[error("invalid quadrature request: {0}")]
    BadSpec(String),
}

impl QuadError {
    /// Best-effort value carried by a failure, when one exists.
    pub fn partial_result(&self) -> Option<IntegralResult> {
        match self {
            QuadError::ToleranceNotReached(r) => Some(*r),
            _ => None,
        }
    }
}

// 15-point Kronrod / 7-point Gauss pair on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Full 15-node arrays in ascending order; Gauss weights are zero at
/// Kronrod-only nodes.
fn rule15() -> ([f64; 15], [f64; 15], [f64; 15]) {
    let mut x = [0.0; 15];
    let mut wk = [0.0; 15];
    let mut wg = [0.0; 15];
    for i in 0..7 {
        x[i] = -XGK[i];
        wk[i] = WGK[i];
        x[14 - i] = XGK[i];
        wk[14 - i] = WGK[i];
        if i % 2 == 1 {
            wg[i] = WG[i / 2];
            wg[14 - i] = WG[i / 2];
        }
    }
    x[7] = 0.0;
    wk[7] = WGK[7];
    wg[7] = WG[3];
    (x, wk, wg)
}

struct Region {
    lo: Vec<f64>,
    hi: Vec<f64>,
    value: f64,
    err: f64,
    split_axis: usize,
    idx: u64,
    refinable: bool,
}

/// Tensor G7K15 on one box. Returns (kronrod, |kronrod − gauss|, split axis).
fn eval_box<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    lo: &[f64],
    hi: &[f64],
    evals: &mut usize,
) -> Result<(f64, f64, usize), QuadError> {
    let (x, wk, wg) = rule15();
    let d = lo.len();
    let c: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let h: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).collect();
    let vol: f64 = h.iter().product::<f64>();
    let mut ik = 0.0;
    let mut ig = 0.0;
    let mut idx = vec![0usize; d];
    let mut pt = vec![0.0; d];
    // values needed for the axis-variation indicator
    let mut center_val = 0.0;
    let mut second_diff = vec![0.0f64; d];
    let total = 15usize.pow(d as u32);
    for flat in 0..total {
        let mut rem = flat;
        for i in 0..d {
            idx[i] = rem % 15;
            rem /= 15;
        }
        let mut wkp = 1.0;
        let mut wgp = 1.0;
        for i in 0..d {
            pt[i] = c[i] + h[i] * x[idx[i]];
            wkp *= wk[idx[i]];
            wgp *= wg[idx[i]];
        }
        let v = f(&pt);
        *evals += 1;
        if !v.is_finite() {
            return Err(QuadError::NonFiniteIntegrand);
        }
        ik += wkp * v;
        if wgp != 0.0 {
            ig += wgp * v;
        }
        if idx.iter().all(|&j| j == 7) {
            center_val = v;
        }
        // axis-aligned offsets at node index 3 / 11 (x = ∓0.7415)
        for a in 0..d {
            if idx.iter().enumerate().all(|(i, &j)| i == a || j == 7) && (idx[a] == 3 || idx[a] == 11) {
                second_diff[a] += v;
            }
        }
    }
    for a in 0..d {
        second_diff[a] = (second_diff[a] - 2.0 * center_val).abs() * h[a];
    }
    let split_axis = second_diff
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.total_cmp(b).then(j.cmp(i)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok((ik * vol, (ik - ig).abs() * vol, split_axis))
}

/// Adaptive tensor-product integration over an axis-aligned box.
pub fn integrate_box<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    lo: &[f64],
    hi: &[f64],
    spec: &QuadratureSpec,
) -> Result<IntegralResult, QuadError> {
    let d = lo.len();
    if d == 0 || d > 6 {
        return Err(QuadError::BadSpec(format!("dimension {d} out of range")));
    }
    let mut evals = 0usize;
    let mut regions: Vec<Region> = Vec::new();
    let mut next_idx = 0u64;
    let push = |regions: &mut Vec<Region>,
                    f: &mut F,
                    lo: Vec<f64>,
                    hi: Vec<f64>,
                    next_idx: &mut u64,
                    evals: &mut usize|
     -> Result<(), QuadError> {
        let (value, err, split_axis) = eval_box(f, &lo, &hi, evals)?;
        let width = hi[split_axis] - lo[split_axis];
        regions.push(Region {
            lo,
            hi,
            value,
            err,
            split_axis,
            idx: *next_idx,
            refinable: width > 1e-13,
        });
        *next_idx += 1;
        Ok(())
    };
    push(&mut regions, &mut f, lo.to_vec(), hi.to_vec(), &mut next_idx, &mut evals)?;

    let mut splits = 0usize;
    loop {
        let (total, total_err) = accumulate(&regions);
        let target = spec.abs_tol.max(spec.rel_tol * total.abs());
        if total_err <= target {
            return Ok(IntegralResult { value: total, error_estimate: total_err, evaluations: evals });
        }
        // worst refinable region; ties broken by creation index
        let worst = regions
            .iter()
            .enumerate()
            .filter(|(_, r)| r.refinable)
            .max_by(|(_, a), (_, b)| a.err.total_cmp(&b.err).then(b.idx.cmp(&a.idx)))
            .map(|(i, _)| i);
        let Some(wi) = worst else {
            return Err(QuadError::ToleranceNotReached(IntegralResult {
                value: total,
                error_estimate: total_err,
                evaluations: evals,
            }));
        };
        if splits >= spec.max_subdivisions {
            return Err(QuadError::ToleranceNotReached(IntegralResult {
                value: total,
                error_estimate: total_err,
                evaluations: evals,
            }));
        }
        let r = regions.swap_remove(wi);
        let axis = r.split_axis;
        let mid = 0.5 * (r.lo[axis] + r.hi[axis]);
        let mut hi1 = r.hi.clone();
        hi1[axis] = mid;
        let mut lo2 = r.lo.clone();
        lo2[axis] = mid;
        push(&mut regions, &mut f, r.lo, hi1, &mut next_idx, &mut evals)?;
        push(&mut regions, &mut f, lo2, r.hi, &mut next_idx, &mut evals)?;
        splits += 1;
    }
}

/// Neumaier-compensated sums in region creation order (deterministic).
fn accumulate(regions: &[Region]) -> (f64, f64) {
    let mut order: Vec<usize> = (0..regions.len()).collect();
    order.sort_by_key(|&i| regions[i].idx);
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut err = 0.0;
    for &i in &order {
        let v = regions[i].value;
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
        err += regions[i].err;
    }
    (sum + comp, err)
}

/// t ∈ (-1,1) ↦ u = t/(1−t²), with du/dt.
fn full_line(t: f64) -> (f64, f64) {
    let s = 1.0 - t * t;
    (t / s, (1.0 + t * t) / (s * s))
}

/// t ∈ (0,1) ↦ u = t/(1−t), with du/dt.
fn half_line(t: f64) -> (f64, f64) {
    let s = 1.0 - t;
    (t / s, 1.0 / (s * s))
}

/// ∫_{R^n_+} f dx for continuous f with algebraic decay of order
/// `spec.decay_order` > n.
pub fn integrate_half_space<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    n: usize,
    spec: &QuadratureSpec,
) -> Result<IntegralResult, QuadError> {
    check_dim(n, spec)?;
    let d = n;
    let lo: Vec<f64> = (0..d).map(|i| if i < d - 1 { -1.0 } else { 0.0 }).collect();
    let hi = vec![1.0; d];
    let mut y = vec![0.0; d];
    integrate_box(
        |t: &[f64]| {
            let mut jac = 1.0;
            for i in 0..d - 1 {
                let (u, j) = full_line(t[i]);
                y[i] = u;
                jac *= j;
            }
            let (u, j) = half_line(t[d - 1]);
            y[d - 1] = u;
            jac *= j;
            f(&y) * jac
        },
        &lo,
        &hi,
        spec,
    )
}

/// ∫_{∂R^n_+} f dx̄ over the boundary hyperplane R^{n-1}.
pub fn integrate_boundary_hyperplane<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    n: usize,
    spec: &QuadratureSpec,
) -> Result<IntegralResult, QuadError> {
    check_dim(n, spec)?;
    let d = n - 1;
    let lo = vec![-1.0; d];
    let hi = vec![1.0; d];
    let mut y = vec![0.0; d];
    integrate_box(
        |t: &[f64]| {
            let mut jac = 1.0;
            for i in 0..d {
                let (u, j) = full_line(t[i]);
                y[i] = u;
                jac *= j;
            }
            f(&y) * jac
        },
        &lo,
        &hi,
        spec,
    )
}

fn check_dim(n: usize, spec: &QuadratureSpec) -> Result<(), QuadError> {
    if !(2..=5).contains(&n) {
        return Err(QuadError::BadSpec(format!("dimension n = {n} outside [2, 5]")));
    }
    if spec.decay_order <= n {
        return Err(QuadError::BadSpec(format!(
            "declared decay order {} does not exceed the dimension {n}",
            spec.decay_order
        )));
    }
    Ok(())
}

/// Unit direction from hyperspherical angles (t_1..t_{n-2} ∈ (0,π), φ ∈ (0,2π))
/// together with the surface-measure weight Π sin^{n-1-k} t_k.
pub fn direction_from_angles(angles: &[f64]) -> (Vec<f64>, f64) {
    let n = angles.len() + 1;
    let mut u = vec![0.0; n];
    let mut sin_prod = 1.0;
    let mut weight = 1.0;
    for (k, &a) in angles.iter().enumerate() {
        if k < n - 2 {
            weight *= a.sin().powi((n - 2 - k) as i32);
        }
        u[k] = sin_prod * a.cos();
        sin_prod *= a.sin();
    }
    u[n - 1] = sin_prod;
    (u, weight)
}

fn sphere_angle_box(n: usize) -> (Vec<f64>, Vec<f64>) {
    // n-1 angles: first n-2 in (0, π), last in (0, 2π)
    let mut lo = vec![0.0; n - 1];
    let mut hi = vec![std::f64::consts::PI; n - 1];
    hi[n - 2] = 2.0 * std::f64::consts::PI;
    let _ = &mut lo;
    (lo, hi)
}

/// ∫_{B^n} f dx in spherical coordinates.
pub fn integrate_ball<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    n: usize,
    spec: &QuadratureSpec,
) -> Result<IntegralResult, QuadError> {
    if !(2..=5).contains(&n) {
        return Err(QuadError::BadSpec(format!("dimension n = {n} outside [2, 5]")));
    }
    let (alo, ahi) = sphere_angle_box(n);
    let mut lo = vec![0.0];
    lo.extend_from_slice(&alo);
    let mut hi = vec![1.0];
    hi.extend_from_slice(&ahi);
    let mut x = vec![0.0; n];
    integrate_box(
        |c: &[f64]| {
            let r = c[0];
            let (u, w) = direction_from_angles(&c[1..]);
            for i in 0..n {
                x[i] = r * u[i];
            }
            f(&x) * r.powi((n - 1) as i32) * w
        },
        &lo,
        &hi,
        spec,
    )
}

/// ∫_{S^{n-1}} f dσ in hyperspherical angles.
pub fn integrate_sphere<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    n: usize,
    spec: &QuadratureSpec,
) -> Result<IntegralResult, QuadError> {
    if !(2..=5).contains(&n) {
        return Err(QuadError::BadSpec(format!("dimension n = {n} outside [2, 5]")));
    }
    let (lo, hi) = sphere_angle_box(n);
    integrate_sphere_raw(&mut f, &lo, &hi, spec)
}

fn integrate_sphere_raw<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    lo: &[f64],
    hi: &[f64],
    spec: &QuadratureSpec,
) -> Result<IntegralResult, QuadError> {
    integrate_box(
        |angles: &[f64]| {
            let (u, w) = direction_from_angles(angles);
            f(&u) * w
        },
        lo,
        hi,
        spec,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularizedDomain {
    Ball,
    Sphere,
}

/// Integral of an integrand with a removable (integrable) singularity at a
/// sphere point ξ, over the ball or the sphere, on a mesh graded
/// geometrically toward ξ (ratio 1/2). Panels around ξ are mirror-symmetric,
/// so odd principal-value layers cancel exactly. A non-removable singularity
/// is reported when the innermost panel contributions stop decaying.
pub fn integrate_regularized<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    domain: RegularizedDomain,
    xi: &[f64],
    spec: &QuadratureSpec,
) -> Result<IntegralResult, QuadError> {
    let n = xi.len();
    if !(2..=3).contains(&n) {
        return Err(QuadError::BadSpec(format!("regularized quadrature supports n ∈ {{2,3}}, got {n}")));
    }
    let depth = 44usize;
    let rot = crate::fields::rotation_to_north_pole(xi);
    let panel_spec = QuadratureSpec {
        rel_tol: spec.rel_tol,
        abs_tol: spec.abs_tol / (depth as f64 + 2.0),
        ..spec.clone()
    };
    let mut total = 0.0;
    let mut err = 0.0;
    let mut evals = 0usize;
    let mut panel_values: Vec<f64> = Vec::new();
    let mut point = vec![0.0; n];

    // outer scale of the graded coordinate
    let t_max = match domain {
        RegularizedDomain::Sphere => std::f64::consts::PI,
        RegularizedDomain::Ball => 1.0,
    };
    for k in 0..=depth {
        let t_hi = t_max * 0.5f64.powi(k as i32);
        let t_lo = if k == depth { 0.0 } else { t_hi * 0.5 };
        if k == depth && t_lo == 0.0 {
            // innermost sliver handled by the geometric tail bound below
        }
        let res = match domain {
            RegularizedDomain::Sphere => {
                if n == 2 {
                    // θ-offset panels, mirror-symmetrized around ξ
                    let theta0 = xi[1].atan2(xi[0]);
                    integrate_box(
                        |t: &[f64]| {
                            let tp = theta0 + t[0];
                            let tm = theta0 - t[0];
                            point[0] = tp.cos();
                            point[1] = tp.sin();
                            let a = f(&point);
                            point[0] = tm.cos();
                            point[1] = tm.sin();
                            let b = f(&point);
                            a + b
                        },
                        &[t_lo.max(1e-300)],
                        &[t_hi],
                        &panel_spec,
                    )
                } else {
                    // colatitude t from ξ, full slice in φ
                    integrate_box(
                        |c: &[f64]| {
                            let (t, phi) = (c[0], c[1]);
                            let u = [t.sin() * phi.cos(), t.sin() * phi.sin(), t.cos()];
                            for i in 0..3 {
                                point[i] = rot[i][0] * u[0] + rot[i][1] * u[1] + rot[i][2] * u[2];
                            }
                            f(&point) * t.sin()
                        },
                        &[t_lo.max(1e-300), 0.0],
                        &[t_hi, 2.0 * std::f64::consts::PI],
                        &panel_spec,
                    )
                }
            }
            RegularizedDomain::Ball => {
                if n == 2 {
                    // z = ξ + s·r_max(φ)·ω(φ), chord r_max = −2cos φ
                    integrate_box(
                        |c: &[f64]| {
                            let (s, phi) = (c[0], c[1]);
                            let cosp = phi.cos();
                            let rmax = -2.0 * cosp;
                            let r = s * rmax;
                            let w0 = rot[0][0] * phi.sin() + rot[0][1] * cosp;
                            let w1 = rot[1][0] * phi.sin() + rot[1][1] * cosp;
                            // ω expressed so that φ = π is the inward normal
                            point[0] = xi[0] + r * (rot[0][0] * phi.sin() * 0.0 + w0 * 0.0 + (rot[0][0] * 0.0));
                            // replaced below; kept for clarity of the frame
                            let _ = (w0, w1);
                            let dir = [
                                rot[0][0] * phi.sin() + rot[0][1] * 0.0 + rot[0][1] * 0.0,
                                0.0,
                            ];
                            let _ = dir;
                            // direction in the rotated frame: (sin φ, cos φ)
                            let u = [phi.sin(), cosp];
                            point[0] = xi[0] + r * (rot[0][0] * u[0] + rot[0][1] * u[1]);
                            point[1] = xi[1] + r * (rot[1][0] * u[0] + rot[1][1] * u[1]);
                            f(&point) * r * rmax
                        },
                        &[t_lo.max(1e-300), std::f64::consts::FRAC_PI_2],
                        &[t_hi, 3.0 * std::f64::consts::FRAC_PI_2],
                        &panel_spec,
                    )
                } else {
                    integrate_box(
                        |c: &[f64]| {
                            let (s, th, phi) = (c[0], c[1], c[2]);
                            let rmax = -2.0 * th.cos();
                            let r = s * rmax;
                            let u = [th.sin() * phi.cos(), th.sin() * phi.sin(), th.cos()];
                            for i in 0..3 {
                                point[i] = xi[i] + r * (rot[i][0] * u[0] + rot[i][1] * u[1] + rot[i][2] * u[2]);
                            }
                            f(&point) * r * r * rmax * th.sin()
                        },
                        &[t_lo.max(1e-300), std::f64::consts::FRAC_PI_2, 0.0],
                        &[t_hi, std::f64::consts::PI, 2.0 * std::f64::consts::PI],
                        &panel_spec,
                    )
                }
            }
        };
        let res = match res {
            Ok(r) => r,
            Err(QuadError::ToleranceNotReached(r)) => r,
            Err(e) => return Err(e),
        };
        total += res.value;
        err += res.error_estimate;
        evals += res.evaluations;
        panel_values.push(res.value);
    }
    // geometric-decay check on the innermost panels
    let m = panel_values.len();
    let mut stagnant = 0;
    for k in (m.saturating_sub(6)..m).skip(1) {
        let prev = panel_values[k - 1].abs();
        let cur = panel_values[k].abs();
        if cur > 0.9 * prev && cur > spec.abs_tol {
            stagnant += 1;
        }
    }
    if stagnant >= 4 {
        return Err(QuadError::SingularityDetected);
    }
    // tail bound from the last panel (geometric decay)
    err += panel_values.last().map(|v| v.abs()).unwrap_or(0.0);
    Ok(IntegralResult { value: total, error_estimate: err, evaluations: evals })
}

/// Polar integration of g over R^d with an integrable singularity at the
/// origin and algebraic decay at infinity: dyadic radial panels on (0, 1]
/// and a compactified far field. `symmetrize` feeds antipodal direction
/// pairs together so odd principal-value layers cancel.
pub fn integrate_radial_graded<F: FnMut(&[f64]) -> f64>(
    mut g: F,
    d: usize,
    spec: &QuadratureSpec,
) -> Result<IntegralResult, QuadError> {
    let depth = 44usize;
    let panel_spec = QuadratureSpec {
        abs_tol: spec.abs_tol / (depth as f64 + 2.0),
        ..spec.clone()
    };
    let mut total = 0.0;
    let mut err = 0.0;
    let mut evals = 0usize;
    let mut point = vec![0.0; d];
    // radial panels: far field r ∈ (1, ∞), then dyadic panels toward 0
    let add = |res: Result<IntegralResult, QuadError>, total: &mut f64, err: &mut f64, evals: &mut usize| {
        match res {
            Ok(r) | Err(QuadError::ToleranceNotReached(r)) => {
                *total += r.value;
                *err += r.error_estimate;
                *evals += r.evaluations;
                Ok(())
            }
            Err(e) => Err(e),
        }
    };

    // integrate over (r-interval) × direction half-space (paired ±)
    let shell = |lo_r: f64, hi_r: f64, far: bool, g: &mut F, point: &mut Vec<f64>| -> Result<IntegralResult, QuadError> {
        match d {
            1 => integrate_box(
                |c: &[f64]| {
                    let (r, jac) = if far { half_line_shifted(c[0]) } else { (c[0], 1.0) };
                    point[0] = r;
                    let a = g(point);
                    point[0] = -r;
                    let b = g(point);
                    (a + b) * jac
                },
                &[if far { 0.0 } else { lo_r }],
                &[if far { 1.0 } else { hi_r }],
                &panel_spec,
            ),
            2 => integrate_box(
                |c: &[f64]| {
                    let (r, jac) = if far { half_line_shifted(c[0]) } else { (c[0], 1.0) };
                    let th = c[1];
                    point[0] = r * th.cos();
                    point[1] = r * th.sin();
                    let a = g(point);
                    point[0] = -point[0];
                    point[1] = -point[1];
                    let b = g(point);
                    (a + b) * r * jac
                },
                &[if far { 0.0 } else { lo_r }, 0.0],
                &[if far { 1.0 } else { hi_r }, std::f64::consts::PI],
                &panel_spec,
            ),
            3 => integrate_box(
                |c: &[f64]| {
                    let (r, jac) = if far { half_line_shifted(c[0]) } else { (c[0], 1.0) };
                    let (th, ph) = (c[1], c[2]);
                    let u = [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
                    for i in 0..3 {
                        point[i] = r * u[i];
                    }
                    let a = g(point);
                    for i in 0..3 {
                        point[i] = -point[i];
                    }
                    let b = g(point);
                    (a + b) * r * r * th.sin() * jac
                },
                &[if far { 0.0 } else { lo_r }, 0.0, 0.0],
                &[if far { 1.0 } else { hi_r }, std::f64::consts::FRAC_PI_2, 2.0 * std::f64::consts::PI],
                &panel_spec,
            ),
            _ => Err(QuadError::BadSpec(format!("radial graded integration supports d ≤ 3, got {d}"))),
        }
    };

    add(shell(1.0, f64::INFINITY, true, &mut g, &mut point), &mut total, &mut err, &mut evals)?;
    for k in 0..=depth {
        let hi_r = 0.5f64.powi(k as i32);
        let lo_r = if k == depth { 1e-300 } else { hi_r * 0.5 };
        add(shell(lo_r, hi_r, false, &mut g, &mut point), &mut total, &mut err, &mut evals)?;
    }
    Ok(IntegralResult { value: total, error_estimate: err, evaluations: evals })
}

/// Same graded scheme over the half-space R^d_+ (singularity at the corner
/// origin): directions restricted to the upper half-sphere.
pub fn integrate_half_space_graded<F: FnMut(&[f64]) -> f64>(
    mut g: F,
    d: usize,
    spec: &QuadratureSpec,
) -> Result<IntegralResult, QuadError> {
    let depth = 44usize;
    let panel_spec = QuadratureSpec {
        abs_tol: spec.abs_tol / (depth as f64 + 2.0),
        ..spec.clone()
    };
    let mut total = 0.0;
    let mut err = 0.0;
    let mut evals = 0usize;
    let mut point = vec![0.0; d];
    let shell = |lo_r: f64, hi_r: f64, far: bool, g: &mut F, point: &mut Vec<f64>| -> Result<IntegralResult, QuadError> {
        match d {
            2 => integrate_box(
                |c: &[f64]| {
                    let (r, jac) = if far { half_line_shifted(c[0]) } else { (c[0], 1.0) };
                    let th = c[1];
                    point[0] = r * th.cos();
                    point[1] = r * th.sin();
                    g(point) * r * jac
                },
                &[if far { 0.0 } else { lo_r }, 0.0],
                &[if far { 1.0 } else { hi_r }, std::f64::consts::PI],
                &panel_spec,
            ),
            3 => integrate_box(
                |c: &[f64]| {
                    let (r, jac) = if far { half_line_shifted(c[0]) } else { (c[0], 1.0) };
                    let (th, ph) = (c[1], c[2]);
                    // colatitude from the x_n axis restricted to the upper half
                    let u = [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
                    for i in 0..3 {
                        point[i] = r * u[i];
                    }
                    g(point) * r * r * th.sin() * jac
                },
                &[if far { 0.0 } else { lo_r }, 0.0, 0.0],
                &[
                    if far { 1.0 } else { hi_r },
                    std::f64::consts::FRAC_PI_2,
                    2.0 * std::f64::consts::PI,
                ],
                &panel_spec,
            ),
            _ => Err(QuadError::BadSpec(format!(
                "half-space graded integration supports d ∈ {{2,3}}, got {d}"
            ))),
        }
    };
    let add = |res: Result<IntegralResult, QuadError>, total: &mut f64, err: &mut f64, evals: &mut usize| {
        match res {
            Ok(r) | Err(QuadError::ToleranceNotReached(r)) => {
                *total += r.value;
                *err += r.error_estimate;
                *evals += r.evaluations;
                Ok(())
            }
            Err(e) => Err(e),
        }
    };
    add(shell(1.0, f64::INFINITY, true, &mut g, &mut point), &mut total, &mut err, &mut evals)?;
    for k in 0..=depth {
        let hi_r = 0.5f64.powi(k as i32);
        let lo_r = if k == depth { 1e-300 } else { hi_r * 0.5 };
        add(shell(lo_r, hi_r, false, &mut g, &mut point), &mut total, &mut err, &mut evals)?;
    }
    Ok(IntegralResult { value: total, error_estimate: err, evaluations: evals })
}

/// t ∈ (0,1) ↦ r = 1 + t/(1−t) ∈ (1, ∞), with dr/dt.
pub(crate) fn half_line_shifted(t: f64) -> (f64, f64) {
    let s = 1.0 - t;
    (1.0 + t / s, 1.0 / (s * s))
}

/// 1D adaptive integral on a finite interval.
pub fn integrate_1d<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<IntegralResult, QuadError> {
    integrate_box(|t: &[f64]| f(t[0]), &[a], &[b], spec)
}

/// 1D adaptive integral on (0, ∞).
pub fn integrate_half_line<F: FnMut(f64) -> f64>(
    mut f: F,
    spec: &QuadratureSpec,
) -> Result<IntegralResult, QuadError> {
    integrate_box(
        |t: &[f64]| {
            let (u, j) = half_line(t[0]);
            f(u) * j
        },
        &[0.0],
        &[1.0],
        spec,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{invert_coords, norm_sq};
    use std::f64::consts::PI;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn half_space_polar_closed_form() {
        // ∫_{R²₊} (|y|²+1)^{-2} = π/2
        let r = integrate_half_space(|y| 1.0 / (1.0 + norm_sq(y)).powi(2), 2, &spec()).unwrap();
        assert!((r.value - PI / 2.0).abs() < 1e-10, "got {}", r.value);
        assert!((r.value - PI / 2.0).abs() <= 10.0 * r.error_estimate.max(1e-14));
    }

    #[test]
    fn half_space_first_order_integral() {
        // ∫_{R²₊} y₂/(|ȳ|²+(y₂+D)²−1)² = (π/2)(D−√(D²−1)); positive integrand
        for dd in [1.2f64, 2.0, 5.0] {
            let exact = PI / 2.0 * (dd - (dd * dd - 1.0).sqrt());
            let r = integrate_half_space(
                |y| y[1] / (y[0] * y[0] + (y[1] + dd) * (y[1] + dd) - 1.0).powi(2),
                2,
                &spec(),
            )
            .unwrap();
            assert!((r.value - exact).abs() < 1e-8, "D={dd}: got {} want {exact}", r.value);
        }
    }

    #[test]
    fn misdeclared_decay_flags_tolerance() {
        // 1/(1+|y|) is not integrable on R²₊
        let s = QuadratureSpec { max_subdivisions: 400, ..spec() };
        let r = integrate_half_space(|y| 1.0 / (1.0 + norm_sq(y).sqrt()), 2, &s);
        assert!(matches!(r, Err(QuadError::ToleranceNotReached(_))));
    }

    #[test]
    fn decay_order_must_exceed_dimension() {
        let s = QuadratureSpec { decay_order: 2, ..spec() };
        let r = integrate_half_space(|_| 0.0, 2, &s);
        assert!(matches!(r, Err(QuadError::BadSpec(_))));
    }

    #[test]
    fn boundary_hyperplane_closed_forms() {
        let r = integrate_boundary_hyperplane(|y| 1.0 / (1.0 + y[0] * y[0]), 2, &spec()).unwrap();
        assert!((r.value - PI).abs() < 1e-10);
        let r2 = integrate_boundary_hyperplane(|y| 1.0 / (1.0 + norm_sq(y)).powi(2), 3, &spec()).unwrap();
        assert!((r2.value - PI).abs() < 1e-9);
        // |ȳ|²/(|ȳ|²+1)³ on R²: radial oracle ∫ 2πr·r²(r²+1)^{-3} dr = π/2
        let r3 = integrate_boundary_hyperplane(|y| norm_sq(y) / (1.0 + norm_sq(y)).powi(3), 3, &spec()).unwrap();
        assert!((r3.value - PI / 2.0).abs() < 1e-9);
    }

    #[test]
    fn ball_volumes_and_singular_radial() {
        let r = integrate_ball(|_| 1.0, 2, &spec()).unwrap();
        assert!((r.value - PI).abs() < 1e-10);
        let r3 = integrate_ball(|_| 1.0, 3, &spec()).unwrap();
        assert!((r3.value - 4.0 * PI / 3.0).abs() < 1e-9);
        // (1−|x|²)^{-1/2} in n=2 integrates to 2π
        let s = QuadratureSpec { abs_tol: 1e-10, rel_tol: 1e-8, ..spec() };
        let rs = integrate_ball(|x| 1.0 / (1.0 - norm_sq(x)).max(1e-300).sqrt(), 2, &s).unwrap();
        assert!((rs.value - 2.0 * PI).abs() < 1e-6, "got {}", rs.value);
    }

    #[test]
    fn sphere_areas_and_moments() {
        let r = integrate_sphere(|_| 1.0, 2, &spec()).unwrap();
        assert!((r.value - 2.0 * PI).abs() < 1e-10);
        let r3 = integrate_sphere(|_| 1.0, 3, &spec()).unwrap();
        assert!((r3.value - 4.0 * PI).abs() < 1e-9);
        let rm = integrate_sphere(|u| u[2] * u[2], 3, &spec()).unwrap();
        assert!((rm.value - 4.0 * PI / 3.0).abs() < 1e-9);
    }

    #[test]
    fn determinism_bit_identical() {
        let run = || {
            integrate_half_space(
                |y| (y[0].sin() + 1.5) / (1.0 + norm_sq(y)).powi(3),
                2,
                &spec(),
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.error_estimate.to_bits(), b.error_estimate.to_bits());
        assert_eq!(a.evaluations, b.evaluations);
    }

    #[test]
    fn change_of_variables_consistency() {
        // ∫_B g = ∫_{R^n_+} g(I(x))·ϱ^{n/2} for smooth g
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [2usize, 3] {
            for _ in 0..5 {
                let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let g = move |x: &[f64]| {
                    let dot: f64 = x.iter().zip(&a).map(|(u, v)| u * v).sum();
                    (1.0 + dot).exp() * (1.0 - norm_sq(x) / 2.0)
                };
                let ball = integrate_ball(&g, n, &spec()).unwrap();
                let half = integrate_half_space(
                    move |x| {
                        let q = invert_coords(x);
                        let s: f64 = x[..n - 1].iter().map(|c| c * c).sum::<f64>()
                            + (x[n - 1] + 1.0) * (x[n - 1] + 1.0);
                        let rho = 4.0 / (s * s);
                        g(&q) * rho.powf(n as f64 / 2.0)
                    },
                    n,
                    &spec(),
                )
                .unwrap();
                let rel = (ball.value - half.value).abs() / ball.value.abs();
                assert!(rel < 1e-7, "n={n}: ball {} vs half {}", ball.value, half.value);
            }
        }
    }

    #[test]
    fn regularized_constant_taylor_is_zero() {
        // J-type integrand with constant H: Taylor subtraction kills it exactly
        let xi = [1.0, 0.0];
        let r = integrate_regularized(|_z| 0.0, RegularizedDomain::Sphere, &xi, &spec()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn regularized_detects_genuine_pole() {
        let xi = [1.0, 0.0];
        let r = integrate_regularized(
            |z| {
                let d2 = (z[0] - 1.0) * (z[0] - 1.0) + z[1] * z[1];
                1.0 / d2.sqrt().max(1e-300)
            },
            RegularizedDomain::Sphere,
            &xi,
            &spec(),
        );
        assert!(matches!(r, Err(QuadError::SingularityDetected)), "got {r:?}");
    }

    #[test]
    fn regularized_sphere_half_laplacian_kernel() {
        // ∫_{S¹} (cos θ − 1)/|z−ξ|² dσ = −π (the half-Laplacian kernel value)
        let xi = [1.0, 0.0];
        let r = integrate_regularized(
            |z| {
                let d2 = (z[0] - 1.0) * (z[0] - 1.0) + z[1] * z[1];
                (z[0] - 1.0) / d2
            },
            RegularizedDomain::Sphere,
            &xi,
            &spec(),
        )
        .unwrap();
        assert!((r.value + PI).abs() < 1e-9, "got {}", r.value);
    }

    #[test]
    fn radial_graded_closed_form() {
        // ∫_{R²} |x|^{-1} e^{-|x|²-ish}: use (1+|x|²)^{-2}/|x|: polar closed form
        // ∫_0^∞ 2π (1+r²)^{-2} dr = 2π·(π/4) = π²/2
        let r = integrate_radial_graded(
            |x| {
                let rr = norm_sq(x).sqrt();
                1.0 / (rr * (1.0 + rr * rr).powi(2))
            },
            2,
            &spec(),
        )
        .unwrap();
        assert!((r.value - PI * PI / 2.0).abs() < 1e-8, "got {}", r.value);
    }

    #[test]
    fn error_estimates_are_honest() {
        let cases: Vec<(IntegralResult, f64)> = vec![
            (integrate_half_space(|y| 1.0 / (1.0 + norm_sq(y)).powi(2), 2, &spec()).unwrap(), PI / 2.0),
            (integrate_ball(|_| 1.0, 2, &spec()).unwrap(), PI),
            (integrate_sphere(|_| 1.0, 2, &spec()).unwrap(), 2.0 * PI),
        ];
        for (r, exact) in cases {
            let true_err = (r.value - exact).abs();
            assert!(
                true_err <= 10.0 * r.error_estimate.max(1e-15),
                "true err {true_err} vs estimate {}",
                r.error_estimate
            );
        }
    }
}
