//! Gamma/Beta closed forms, sphere surface moments, and the small
//! combinatorial coefficients the expansion constants are assembled from.

/// Lanczos approximation (g = 7, 9 terms), accurate to ~1e-15 on the real line.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function on the real line (poles at 0, -1, -2, ... return NaN).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let s = (std::f64::consts::PI * x).sin();
        if s == 0.0 {
            return f64::NAN;
        }
        std::f64::consts::PI / (s * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = LANCZOS[0];
        let t = x + LANCZOS_G + 0.5;
        for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// Euler Beta function B(a, b) = Γ(a)Γ(b)/Γ(a+b), valid for non-pole
/// arguments of either sign (used with negative half-integer second
/// arguments for analytically-continued tail-subtracted integrals).
pub fn beta(a: f64, b: f64) -> f64 {
    gamma(a) * gamma(b) / gamma(a + b)
}

/// Double factorial with the conventions (-1)!! = 0!! = 1.
pub fn double_factorial(k: i64) -> f64 {
    if k <= 0 {
        1.0
    } else {
        let mut acc = 1.0;
        let mut j = k;
        while j > 0 {
            acc *= j as f64;
            j -= 2;
        }
        acc
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

/// n-th harmonic number H_n (H_0 = 0).
pub fn harmonic(n: usize) -> f64 {
    (1..=n).map(|j| 1.0 / j as f64).sum()
}

/// Surface measure of the unit sphere S^k in R^{k+1}: ω_k = 2π^{(k+1)/2}/Γ((k+1)/2).
pub fn sphere_area(k: usize) -> f64 {
    let h = (k as f64 + 1.0) / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / gamma(h)
}

/// Monomial moment over the full unit sphere S^{d-1} ⊂ R^d:
/// ∫_{S^{d-1}} u^α dσ = 2 ∏ Γ((α_i+1)/2) / Γ((|α|+d)/2) when all α_i are
/// even, and 0 otherwise.
pub fn sphere_moment(alpha: &[u8]) -> f64 {
    if alpha.iter().any(|&a| a % 2 == 1) {
        return 0.0;
    }
    let d = alpha.len() as f64;
    let total: u32 = alpha.iter().map(|&a| a as u32).sum();
    let mut num = 2.0;
    for &a in alpha {
        num *= gamma((a as f64 + 1.0) / 2.0);
    }
    num / gamma((total as f64 + d) / 2.0)
}

/// Monomial moment over the upper half-sphere {u ∈ S^{n-1} : u_n ≥ 0}:
/// nonzero iff the first n-1 exponents are all even, in which case it equals
/// ∏ Γ((α_i+1)/2) / Γ((|α|+n)/2) (the last exponent may be odd).
pub fn half_sphere_moment(alpha: &[u8]) -> f64 {
    let n = alpha.len();
    if alpha[..n - 1].iter().any(|&a| a % 2 == 1) {
        return 0.0;
    }
    let total: u32 = alpha.iter().map(|&a| a as u32).sum();
    let mut num = 1.0;
    for &a in alpha {
        num *= gamma((a as f64 + 1.0) / 2.0);
    }
    num / gamma((total as f64 + n as f64) / 2.0)
}

/// Spherical average coefficient of the even Taylor layer: the mean of
/// Σ_{|α|=2j} (x^α/α!) ∂^α f over S^{d-1} equals avg_layer(j, d)·Δ^j f·r^{2j},
/// with avg_layer(j, d) = (d-2)!! / ((2j)!!·(d+2j-2)!!).
pub fn avg_layer(j: usize, d: usize) -> f64 {
    double_factorial(d as i64 - 2) / (double_factorial(2 * j as i64) * double_factorial(d as i64 + 2 * j as i64 - 2))
}

/// Half-sphere moment ∫_{S^{n-1}_+} |ū|^{2i} u_n^k du = (ω_{n-2}/2)·B(i+(n-1)/2, (k+1)/2).
pub fn half_sphere_radial_moment(n: usize, i: usize, k: usize) -> f64 {
    0.5 * sphere_area(n - 2) * beta(i as f64 + (n as f64 - 1.0) / 2.0, (k as f64 + 1.0) / 2.0)
}
