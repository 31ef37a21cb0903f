//! Truncated multivariate Taylor series ("jets") with exact coefficient
//! arithmetic in f64.
//!
//! A `Jet` stores the coefficients c_α of Σ c_α x^α for |α| ≤ order. The
//! coefficient of x^α in the jet of a smooth function at a point is
//! ∂^α f / α!, which is exactly the normalization the Taylor-subtracted
//! integrals of the expansion need.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub nvars: usize,
    pub order: usize,
    terms: BTreeMap<Vec<u8>, f64>,
}

impl Jet {
    pub fn zero(nvars: usize, order: usize) -> Self {
        Jet { nvars, order, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, order: usize, c: f64) -> Self {
        let mut j = Jet::zero(nvars, order);
        if c != 0.0 {
            j.terms.insert(vec![0; nvars], c);
        }
        j
    }

    pub fn variable(nvars: usize, order: usize, i: usize) -> Self {
        let mut j = Jet::zero(nvars, order);
        if order >= 1 {
            let mut a = vec![0u8; nvars];
            a[i] = 1;
            j.terms.insert(a, 1.0);
        }
        j
    }

    pub fn coeff(&self, alpha: &[u8]) -> f64 {
        self.terms.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn set_coeff(&mut self, alpha: Vec<u8>, c: f64) {
        if c == 0.0 {
            self.terms.remove(&alpha);
        } else {
            self.terms.insert(alpha, c);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u8>, &f64)> {
        self.terms.iter()
    }

    /// Terms of exact total degree k.
    pub fn layer(&self, k: usize) -> Vec<(Vec<u8>, f64)> {
        self.terms
            .iter()
            .filter(|(a, _)| a.iter().map(|&x| x as usize).sum::<usize>() == k)
            .map(|(a, &c)| (a.clone(), c))
            .collect()
    }

    pub fn add(&self, other: &Jet) -> Jet {
        let mut out = self.clone();
        for (a, &c) in &other.terms {
            let v = out.coeff(a) + c;
            out.set_coeff(a.clone(), v);
        }
        out
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut out = Jet::zero(self.nvars, self.order);
        for (a, &c) in &self.terms {
            out.set_coeff(a.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let mut out = Jet::zero(self.nvars, self.order);
        for (a, &ca) in &self.terms {
            let da: usize = a.iter().map(|&x| x as usize).sum();
            for (b, &cb) in &other.terms {
                let db: usize = b.iter().map(|&x| x as usize).sum();
                if da + db > self.order {
                    continue;
                }
                let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                let v = out.coeff(&sum) + ca * cb;
                out.set_coeff(sum, v);
            }
        }
        out
    }

    pub fn powi(&self, k: usize) -> Jet {
        let mut out = Jet::constant(self.nvars, self.order, 1.0);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Reciprocal: requires a nonzero constant term. Computed as
    /// (1/c)·Σ (-u)^k with u = (self - c)/c.
    pub fn recip(&self) -> Jet {
        let c = self.coeff(&vec![0; self.nvars]);
        assert!(c != 0.0, "recip of a jet with zero constant term");
        let u = self.scale(1.0 / c).sub(&Jet::constant(self.nvars, self.order, 1.0));
        let mut out = Jet::constant(self.nvars, self.order, 1.0);
        let mut upow = Jet::constant(self.nvars, self.order, 1.0);
        for k in 1..=self.order {
            upow = upow.mul(&u);
            out = out.add(&upow.scale(if k % 2 == 0 { 1.0 } else { -1.0 }));
        }
        out.scale(1.0 / c)
    }

    /// Real power (1+u)^p of a jet with constant term c > 0, via the binomial
    /// series around its constant part.
    pub fn powf(&self, p: f64) -> Jet {
        let c = self.coeff(&vec![0; self.nvars]);
        assert!(c > 0.0, "powf of a jet with non-positive constant term");
        let u = self.scale(1.0 / c).sub(&Jet::constant(self.nvars, self.order, 1.0));
        let mut out = Jet::constant(self.nvars, self.order, 1.0);
        let mut upow = Jet::constant(self.nvars, self.order, 1.0);
        let mut binom = 1.0;
        for k in 1..=self.order {
            binom *= (p - (k as f64 - 1.0)) / k as f64;
            upow = upow.mul(&u);
            out = out.add(&upow.scale(binom));
        }
        out.scale(c.powf(p))
    }

    /// Formal partial derivative ∂_i (order bound kept as-is).
    pub fn partial(&self, i: usize) -> Jet {
        let mut out = Jet::zero(self.nvars, self.order);
        for (a, &c) in &self.terms {
            if a[i] == 0 {
                continue;
            }
            let mut b = a.clone();
            b[i] -= 1;
            let v = out.coeff(&b) + c * a[i] as f64;
            out.set_coeff(b, v);
        }
        out
    }

    /// Evaluate the truncated polynomial at a point (used in tests).
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (a, &c) in &self.terms {
            let mut m = c;
            for (i, &p) in a.iter().enumerate() {
                for _ in 0..p {
                    m *= x[i];
                }
            }
            acc += m;
        }
        acc
    }
}
