//! Exact rational arithmetic for phases that are rational multiples of pi.
//!
//! Diagonal gates here are exponentials of polynomials with rational
//! coefficients times pi. At d ~ 48 the raw exponents of e.g. the discrete
//! rotation gate at l = 3 reach ~1e13 rad, where f64 trig loses nine digits.
//! Reducing the rational part mod 2 in integer arithmetic before calling
//! sin/cos keeps every phase accurate to machine precision.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

/// Reduced fraction num/den with den > 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    num: i128,
    den: i128,
}

impl Ratio {
    pub fn new(num: i128, den: i128) -> Self {
        assert!(den != 0, "zero denominator");
        let sign = if den < 0 { -1 } else { 1 };
        let g = gcd(num, den);
        Ratio {
            num: sign * num / g,
            den: sign * den / g,
        }
    }

    pub fn zero() -> Self {
        Ratio { num: 0, den: 1 }
    }

    pub fn from_int(n: i128) -> Self {
        Ratio { num: n, den: 1 }
    }

    pub fn num(&self) -> i128 {
        self.num
    }

    pub fn den(&self) -> i128 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn add(&self, other: &Ratio) -> Ratio {
        Ratio::new(self.num * other.den + other.num * self.den, self.den * other.den)
    }

    pub fn sub(&self, other: &Ratio) -> Ratio {
        Ratio::new(self.num * other.den - other.num * self.den, self.den * other.den)
    }

    pub fn mul(&self, other: &Ratio) -> Ratio {
        Ratio::new(self.num * other.num, self.den * other.den)
    }

    pub fn mul_int(&self, n: i128) -> Ratio {
        Ratio::new(self.num * n, self.den)
    }

    pub fn neg(&self) -> Ratio {
        Ratio {
            num: -self.num,
            den: self.den,
        }
    }

    /// Reduce into [0, 2): exact representative of self mod 2.
    pub fn mod_two(&self) -> Ratio {
        let m = 2 * self.den;
        let r = self.num.rem_euclid(m);
        Ratio::new(r, self.den)
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// True if the value is an integer.
    pub fn is_integer(&self) -> bool {
        self.den == 1
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// e^{i pi r}, with r reduced mod 2 exactly before evaluating trig.
pub fn phase_pi(r: &Ratio) -> C64 {
    let m = r.mod_two();
    C64::from_polar(1.0, PI * m.to_f64())
}

/// Polynomial with rational coefficients, ascending powers: c0 + c1 x + ...
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatPoly {
    coeffs: Vec<Ratio>,
}

impl RatPoly {
    pub fn new(coeffs: Vec<Ratio>) -> Self {
        let mut c = coeffs;
        while c.len() > 1 && c.last().map(|r| r.is_zero()).unwrap_or(false) {
            c.pop();
        }
        if c.is_empty() {
            c.push(Ratio::zero());
        }
        RatPoly { coeffs: c }
    }

    pub fn zero() -> Self {
        RatPoly {
            coeffs: vec![Ratio::zero()],
        }
    }

    /// x^k with a rational coefficient.
    pub fn monomial(coeff: Ratio, k: usize) -> Self {
        let mut coeffs = vec![Ratio::zero(); k + 1];
        coeffs[k] = coeff;
        RatPoly::new(coeffs)
    }

    pub fn coeffs(&self) -> &[Ratio] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> Ratio {
        self.coeffs.get(k).copied().unwrap_or_else(Ratio::zero)
    }

    pub fn add(&self, other: &RatPoly) -> RatPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coeff(i).add(&other.coeff(i)));
        }
        RatPoly::new(out)
    }

    pub fn scale(&self, r: &Ratio) -> RatPoly {
        RatPoly::new(self.coeffs.iter().map(|c| c.mul(r)).collect())
    }

    /// Composition with the shift x -> x - k, expanded exactly.
    pub fn shift_arg(&self, k: i128) -> RatPoly {
        // Horner on (x - k): acc(x) <- acc(x) * (x - k) + c_j
        let mut acc = RatPoly::zero();
        for c in self.coeffs.iter().rev() {
            let mut shifted = vec![Ratio::zero(); acc.coeffs.len() + 1];
            for (i, a) in acc.coeffs.iter().enumerate() {
                shifted[i + 1] = shifted[i + 1].add(a);
                shifted[i] = shifted[i].add(&a.mul_int(-k));
            }
            let mut next = RatPoly::new(shifted);
            next.coeffs[0] = next.coeffs[0].add(c);
            acc = RatPoly::new(next.coeffs);
        }
        acc
    }

    pub fn sub(&self, other: &RatPoly) -> RatPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coeff(i).sub(&other.coeff(i)));
        }
        RatPoly::new(out)
    }

    /// Exact value at an integer argument, reduced mod 2 at every Horner step
    /// so numerators never overflow i128.
    pub fn eval_mod_two(&self, n: i128) -> Ratio {
        let mut acc = Ratio::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul_int(n).add(c).mod_two();
        }
        acc
    }

    /// Exact value at a rational argument, reduced mod 2 at every step.
    pub fn eval_ratio_mod_two(&self, x: &Ratio) -> Ratio {
        let mut acc = Ratio::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(c).mod_two();
        }
        acc
    }

    /// Plain f64 evaluation (no reduction); for small-degree diagnostics.
    pub fn eval_f64(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c.to_f64();
        }
        acc
    }
}

/// Exact binomial coefficient C(n, k) for small arguments.
pub fn binomial(n: i128, k: i128) -> i128 {
    if k < 0 || k > n {
        return 0;
    }
    let mut acc: i128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// The falling-factorial binomial C(x, i) = x(x-1)...(x-i+1)/i! expanded as a
/// polynomial in x with exact rational coefficients.
pub fn binomial_poly(i: usize) -> RatPoly {
    let mut poly = RatPoly::new(vec![Ratio::from_int(1)]);
    for j in 0..i {
        // multiply by (x - j)
        let mut coeffs = vec![Ratio::zero(); poly.coeffs.len() + 1];
        for (p, c) in poly.coeffs.iter().enumerate() {
            coeffs[p + 1] = coeffs[p + 1].add(c);
            coeffs[p] = coeffs[p].add(&c.mul_int(-(j as i128)));
        }
        poly = RatPoly::new(coeffs);
    }
    let mut fact: i128 = 1;
    for j in 1..=(i as i128) {
        fact *= j;
    }
    poly.scale(&Ratio::new(1, fact))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_normalizes() {
        let r = Ratio::new(2, -4);
        assert_eq!(r.num(), -1);
        assert_eq!(r.den(), 2);
    }

    #[test]
    fn mod_two_reduces() {
        assert_eq!(Ratio::new(7, 2).mod_two(), Ratio::new(3, 2));
        assert_eq!(Ratio::new(-1, 2).mod_two(), Ratio::new(3, 2));
        assert_eq!(Ratio::from_int(4).mod_two(), Ratio::zero());
    }

    #[test]
    fn phase_pi_exact_large() {
        // e^{i pi (2k + 1/2)} = i for any integer k, even astronomically large.
        let r = Ratio::new(4 * 10_000_000_000_001i128 + 1, 2);
        let z = phase_pi(&r);
        assert!((z - C64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn shift_arg_matches_direct() {
        // p(x) = x^3, p(x-2) at x=5 -> 27
        let p = RatPoly::monomial(Ratio::from_int(1), 3);
        let q = p.shift_arg(2);
        assert_eq!(q.eval_f64(5.0), 27.0);
        assert_eq!(q.coeff(0), Ratio::from_int(-8));
    }

    #[test]
    fn binomial_poly_at_integers() {
        let b3 = binomial_poly(3);
        for n in 0..10i128 {
            let direct = binomial(n, 3) as f64;
            assert!((b3.eval_f64(n as f64) - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn horner_mod_two_stays_small() {
        // n^16 / (16 * 4^16) at n = 200 would overflow without reduction.
        let p = RatPoly::monomial(Ratio::new(1, 16 * 4_294_967_296i128), 16);
        let v = p.eval_mod_two(200);
        assert!(v.to_f64() >= 0.0 && v.to_f64() < 2.0);
    }
}
