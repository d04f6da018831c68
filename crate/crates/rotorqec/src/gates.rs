//! Logical gates and stabilizers: the rotation-code gate zoo, the optimal
//! discrete-rotation polynomial construction, and logical-action checks.
//!
//! Diagonal gates are exponentials exp[i pi Q(n)] with Q a rational-coefficient
//! polynomial; phases are reduced mod 2 in exact integer arithmetic so that
//! high-order gates (n^16 exponents and the like) stay accurate to machine
//! precision at any desk-scale dimension.

use crate::codes::RotationCode;
use crate::fock::{make_sigma, Dim, Ket, Operator, MAX_DENSE_DIM};
use crate::ratio::{binomial_poly, phase_pi, RatPoly, Ratio};
use crate::{Result, RotorError};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Gate families of the rotation-code zoo.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    /// Z_N = exp[i pi n / N]
    Z,
    /// X_N = Sigma_N^- (number shift down; non-unitary)
    X,
    /// X'_N, the bin-swap gate (exact logical X)
    XPrime,
    /// S_N = exp[i pi n^2 / 2N^2]
    S,
    /// T_N = exp[i pi n^4 / 4N^4]
    T,
    /// T'_N = exp[i (pi/4)(2(n/N)^3 + (n/N)^2 - 2 n/N)]
    TPrime,
    /// R_N(phi_l) = exp[i phi_l (n/N)^{2^l}], phi_l = pi / 2^l
    Rl,
    /// R'_N(phi_l) = exp[i (pi/2^l) f'_l(n/N)], the lowest-degree construction
    RlPrime,
    /// P_N(phi) = exp[i (phi/2)(1 - Z_N)], arbitrary-angle rotation
    P,
    /// CROT_{NM} = exp[i pi n (x) n / NM], logical CZ
    Crot,
    /// CCROT_{NMO} = exp[i pi n (x) n (x) n / NMO], logical CCZ
    Ccrot,
    /// Number stabilizer S_Z = exp[i 2 pi n / N]
    StabZ,
    /// Phase stabilizer S_X = Sigma_{2N}^-
    StabX,
}

impl GateKind {
    pub fn mode_count(&self) -> usize {
        match self {
            GateKind::Crot => 2,
            GateKind::Ccrot => 3,
            _ => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateKind::Z => "Z",
            GateKind::X => "X",
            GateKind::XPrime => "XPrime",
            GateKind::S => "S",
            GateKind::T => "T",
            GateKind::TPrime => "TPrime",
            GateKind::Rl => "Rl",
            GateKind::RlPrime => "RlPrime",
            GateKind::P => "P",
            GateKind::Crot => "CROT",
            GateKind::Ccrot => "CCROT",
            GateKind::StabZ => "StabZ",
            GateKind::StabX => "StabX",
        }
    }
}

/// A fully parameterized gate: kind, rotation orders per mode, and the
/// discrete-rotation index l or continuous angle phi where applicable.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSpec {
    kind: GateKind,
    orders: Vec<u32>,
    ell: Option<u32>,
    phi: Option<f64>,
}

impl GateSpec {
    pub fn new(kind: GateKind, orders: &[u32], ell: Option<u32>, phi: Option<f64>) -> Result<Self> {
        if orders.len() != kind.mode_count() {
            return Err(RotorError::InvalidGateSpec(format!(
                "{} needs {} order(s), got {}",
                kind.name(),
                kind.mode_count(),
                orders.len()
            )));
        }
        if orders.contains(&0) {
            return Err(RotorError::InvalidGateSpec("orders must be positive".into()));
        }
        match kind {
            GateKind::Rl | GateKind::RlPrime => {
                let l = ell.ok_or_else(|| {
                    RotorError::InvalidGateSpec(format!("{} needs l >= 0", kind.name()))
                })?;
                if l > 4 {
                    return Err(RotorError::InvalidGateSpec(
                        "l > 4 exceeds the exact-arithmetic range at desk-scale dims".into(),
                    ));
                }
            }
            GateKind::P => {
                phi.ok_or_else(|| RotorError::InvalidGateSpec("P needs an angle phi".into()))?;
            }
            _ => {}
        }
        Ok(GateSpec {
            kind,
            orders: orders.to_vec(),
            ell,
            phi,
        })
    }

    pub fn z(n: u32) -> Self {
        GateSpec::new(GateKind::Z, &[n], None, None).unwrap()
    }
    pub fn x(n: u32) -> Self {
        GateSpec::new(GateKind::X, &[n], None, None).unwrap()
    }
    pub fn x_prime(n: u32) -> Self {
        GateSpec::new(GateKind::XPrime, &[n], None, None).unwrap()
    }
    pub fn s(n: u32) -> Self {
        GateSpec::new(GateKind::S, &[n], None, None).unwrap()
    }
    pub fn t(n: u32) -> Self {
        GateSpec::new(GateKind::T, &[n], None, None).unwrap()
    }
    pub fn t_prime(n: u32) -> Self {
        GateSpec::new(GateKind::TPrime, &[n], None, None).unwrap()
    }
    pub fn rl(n: u32, ell: u32) -> Result<Self> {
        GateSpec::new(GateKind::Rl, &[n], Some(ell), None)
    }
    pub fn rl_prime(n: u32, ell: u32) -> Result<Self> {
        GateSpec::new(GateKind::RlPrime, &[n], Some(ell), None)
    }
    pub fn p(n: u32, phi: f64) -> Self {
        GateSpec::new(GateKind::P, &[n], None, Some(phi)).unwrap()
    }
    pub fn crot(n: u32, m: u32) -> Self {
        GateSpec::new(GateKind::Crot, &[n, m], None, None).unwrap()
    }
    pub fn ccrot(n: u32, m: u32, o: u32) -> Self {
        GateSpec::new(GateKind::Ccrot, &[n, m, o], None, None).unwrap()
    }
    pub fn stab_z(n: u32) -> Self {
        GateSpec::new(GateKind::StabZ, &[n], None, None).unwrap()
    }
    pub fn stab_x(n: u32) -> Self {
        GateSpec::new(GateKind::StabX, &[n], None, None).unwrap()
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    pub fn order(&self) -> u32 {
        self.orders[0]
    }

    pub fn ell(&self) -> Option<u32> {
        self.ell
    }

    pub fn phi(&self) -> Option<f64> {
        self.phi
    }

    pub fn describe(&self) -> String {
        let orders: Vec<String> = self.orders.iter().map(|n| n.to_string()).collect();
        let mut s = format!("{}_{}", self.kind.name(), orders.join("x"));
        if let Some(l) = self.ell {
            s.push_str(&format!(" l={l}"));
        }
        if let Some(phi) = self.phi {
            s.push_str(&format!(" phi={phi:.4}"));
        }
        s
    }

    /// The exponent polynomial Q with gate = exp[i pi Q(n)], for diagonal
    /// single-mode kinds.
    pub fn diagonal_exponent(&self) -> Option<RatPoly> {
        let n = self.orders[0] as i128;
        let poly = match self.kind {
            GateKind::Z => RatPoly::monomial(Ratio::new(1, n), 1),
            GateKind::StabZ => RatPoly::monomial(Ratio::new(2, n), 1),
            GateKind::S => RatPoly::monomial(Ratio::new(1, 2 * n * n), 2),
            GateKind::T => RatPoly::monomial(Ratio::new(1, 4 * n * n * n * n), 4),
            GateKind::TPrime => RatPoly::new(vec![
                Ratio::zero(),
                Ratio::new(-1, 2 * n),
                Ratio::new(1, 4 * n * n),
                Ratio::new(1, 2 * n * n * n),
            ]),
            GateKind::Rl => {
                let l = self.ell.unwrap();
                let p = 1usize << l;
                let mut den: i128 = 1 << l;
                for _ in 0..p {
                    den *= n;
                }
                RatPoly::monomial(Ratio::new(1, den), p)
            }
            GateKind::RlPrime => {
                let l = self.ell.unwrap();
                let spec = appendix_b_polynomial(l);
                // f'_l(n/N) / 2^l, expanded in n
                let mut out = RatPoly::zero();
                let mut nk: i128 = 1;
                for (i, c) in spec.fprime().coeffs().iter().enumerate() {
                    if i > 0 {
                        nk *= n;
                    }
                    let scaled = c.mul(&Ratio::new(1, nk * (1 << l)));
                    out = out.add(&RatPoly::monomial(scaled, i));
                }
                out
            }
            _ => return None,
        };
        Some(poly)
    }
}

/// The satisfying polynomial for a discrete Z-rotation by pi/2^l:
/// f'_l(k) = sum_{i=1}^{l+1} (-2)^{i-1} C(k, i), of degree l+1.
/// The gate is exp[i (pi/2^l) f'_l(n/N)].
#[derive(Debug, Clone)]
pub struct PolynomialSpec {
    ell: u32,
    fprime: RatPoly,
}

impl PolynomialSpec {
    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn degree(&self) -> usize {
        self.fprime.degree()
    }

    /// Coefficients of f'_l(k), ascending powers of k.
    pub fn fprime(&self) -> &RatPoly {
        &self.fprime
    }

    /// Coefficients of f_l(x)/pi = f'_l(x)/2^l in x = n/N, ascending powers.
    pub fn gate_coeffs(&self) -> Vec<Ratio> {
        let scale = Ratio::new(1, 1 << self.ell);
        self.fprime.coeffs().iter().map(|c| c.mul(&scale)).collect()
    }

    /// Exact integer value f'_l(k).
    pub fn eval_int(&self, k: i128) -> i128 {
        let mut acc = 0i128;
        for i in 1..=(self.ell as i128 + 1) {
            let sign: i128 = (-2i128).pow((i - 1) as u32);
            acc += sign * crate::ratio::binomial(k, i);
        }
        acc
    }

    /// f'_l(k) mod 2^{l+1}, the rotation criterion (0 for even k, 1 for odd).
    pub fn eval_mod(&self, k: i128) -> i128 {
        let m = 1i128 << (self.ell + 1);
        self.eval_int(k).rem_euclid(m)
    }
}

/// Bin-swap permutation pairing grid slots (origin + 2t, origin + 2t + 1)
/// together with the off-grid offsets inside each bin:
/// |(origin + 2t)N + l> <-> |(origin + 2t + 1)N + l| for l in [0, N).
/// origin = 0 reproduces the bare bin-swap gate; an offset code's exact
/// logical X is the swap aligned to its own grid origin k0.
pub fn make_bin_swap(order: u32, origin: u32, d: Dim) -> Operator {
    let n = order as usize;
    let base = origin as usize * n;
    let dd = d.get();
    let mut g = Operator::zeros(d, format!("binswap_{order} origin={origin}"));
    for bin in 0..n {
        let mut t = 0usize;
        loop {
            let low = base + 2 * t * n + bin;
            let high = base + (2 * t + 1) * n + bin;
            if high >= dd {
                break;
            }
            g.set(low, high, C64::new(1.0, 0.0));
            g.set(high, low, C64::new(1.0, 0.0));
            t += 1;
        }
    }
    g
}

/// Expand f'_l(k) = sum_{i=1}^{l+1} (-2)^{i-1} C(k, i) as an exact
/// rational polynomial in k.
pub fn appendix_b_polynomial(ell: u32) -> PolynomialSpec {
    let mut poly = RatPoly::zero();
    for i in 1..=(ell as usize + 1) {
        let coeff = Ratio::from_int((-2i128).pow((i - 1) as u32));
        poly = poly.add(&binomial_poly(i).scale(&coeff));
    }
    PolynomialSpec { ell, fprime: poly }
}

/// Materialize a gate with the same per-mode dimension on every mode.
pub fn make_gate(spec: &GateSpec, d: Dim) -> Result<Operator> {
    let dims = vec![d; spec.kind().mode_count()];
    make_gate_with_dims(spec, &dims)
}

/// Materialize a gate with configurable per-mode dimensions.
pub fn make_gate_with_dims(spec: &GateSpec, dims: &[Dim]) -> Result<Operator> {
    if dims.len() != spec.kind().mode_count() {
        return Err(RotorError::InvalidGateSpec(format!(
            "{} needs {} mode dims, got {}",
            spec.kind().name(),
            spec.kind().mode_count(),
            dims.len()
        )));
    }
    let total: usize = dims.iter().map(|d| d.get()).product();
    if total > 1_000_000 {
        return Err(RotorError::MemoryGuard(format!(
            "total dimension {total} exceeds the 1e6 baseline guard"
        )));
    }
    if total > MAX_DENSE_DIM {
        return Err(RotorError::MemoryGuard(format!(
            "dense operator dimension {total} exceeds cap {MAX_DENSE_DIM}"
        )));
    }
    let label = spec.describe();
    match spec.kind() {
        GateKind::X => {
            let mut g = make_sigma(-(spec.order() as i64), dims[0])?;
            g.set_label(label);
            Ok(g)
        }
        GateKind::StabX => {
            let mut g = make_sigma(-2 * spec.order() as i64, dims[0])?;
            g.set_label(label);
            Ok(g)
        }
        GateKind::XPrime => {
            let mut g = make_bin_swap(spec.order(), 0, dims[0]);
            g.set_label(label);
            Ok(g)
        }
        GateKind::P => {
            let n = spec.order() as i128;
            let phi = spec.phi().unwrap();
            Ok(Operator::diagonal(dims[0], label, |lvl| {
                let z = phase_pi(&Ratio::new(lvl as i128, n));
                let w = C64::new(0.0, phi / 2.0) * (C64::new(1.0, 0.0) - z);
                w.exp()
            }))
        }
        GateKind::Crot => {
            let (n, m) = (spec.orders()[0] as i128, spec.orders()[1] as i128);
            let (d1, d2) = (dims[0].get(), dims[1].get());
            let dim = Dim::new(d1 * d2)?;
            Ok(Operator::diagonal(dim, label, |idx| {
                let n1 = idx / d2;
                let n2 = idx % d2;
                phase_pi(&Ratio::new((n1 * n2) as i128, n * m))
            }))
        }
        GateKind::Ccrot => {
            let (n, m, o) = (
                spec.orders()[0] as i128,
                spec.orders()[1] as i128,
                spec.orders()[2] as i128,
            );
            let (d2, d3) = (dims[1].get(), dims[2].get());
            let dim = Dim::new(dims[0].get() * d2 * d3)?;
            Ok(Operator::diagonal(dim, label, |idx| {
                let n3 = idx % d3;
                let n2 = (idx / d3) % d2;
                let n1 = idx / (d2 * d3);
                phase_pi(&Ratio::new((n1 * n2 * n3) as i128, n * m * o))
            }))
        }
        _ => {
            let poly = spec.diagonal_exponent().ok_or_else(|| {
                RotorError::InvalidGateSpec(format!("{} has no diagonal form", spec.kind().name()))
            })?;
            Ok(Operator::diagonal(dims[0], label, |lvl| {
                phase_pi(&poly.eval_mod_two(lvl as i128))
            }))
        }
    }
}

/// Logical action of a gate on a code: the logical-basis matrix
/// <a_L| G |b_L>, its deviation from the expected logical unitary (up to a
/// global phase), the leakage out of the codespace, and the isometry defect
/// (nonzero for the non-unitary X_N).
#[derive(Debug, Clone)]
pub struct LogicalActionReport {
    pub matrix: Vec<C64>,
    pub side: usize,
    pub expected: Option<Vec<C64>>,
    pub deviation: Option<f64>,
    pub leakage: f64,
    pub isometry_defect: f64,
}

impl LogicalActionReport {
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.matrix[r * self.side + c]
    }
}

/// Expected logical unitary for each gate kind (k0-even convention), as a
/// flattened matrix, when the gate family defines one.
pub fn expected_logical(spec: &GateSpec) -> Option<Vec<C64>> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    match spec.kind() {
        GateKind::Z => Some(vec![one, zero, zero, -one]),
        GateKind::X | GateKind::XPrime => Some(vec![zero, one, one, zero]),
        GateKind::S => Some(vec![one, zero, zero, C64::new(0.0, 1.0)]),
        GateKind::T | GateKind::TPrime => {
            Some(vec![one, zero, zero, C64::from_polar(1.0, PI / 4.0)])
        }
        GateKind::Rl | GateKind::RlPrime => {
            let l = spec.ell().unwrap();
            Some(vec![
                one,
                zero,
                zero,
                C64::from_polar(1.0, PI / (1u64 << l) as f64),
            ])
        }
        GateKind::P => Some(vec![one, zero, zero, C64::from_polar(1.0, spec.phi().unwrap())]),
        GateKind::StabZ => Some(vec![one, zero, zero, one]),
        GateKind::StabX => None,
        GateKind::Crot => {
            let mut m = vec![zero; 16];
            for i in 0..4 {
                m[i * 4 + i] = if i == 3 { -one } else { one };
            }
            Some(m)
        }
        GateKind::Ccrot => {
            let mut m = vec![zero; 64];
            for i in 0..8 {
                m[i * 8 + i] = if i == 7 { -one } else { one };
            }
            Some(m)
        }
    }
}

/// Deviation of `got` from `expected` minimized over a global phase.
pub fn deviation_up_to_phase(got: &[C64], expected: &[C64]) -> f64 {
    let overlap: C64 = got
        .iter()
        .zip(expected.iter())
        .map(|(g, e)| e.conj() * g)
        .sum();
    let phase = if overlap.norm() > 1e-14 {
        overlap / overlap.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    got.iter()
        .zip(expected.iter())
        .map(|(g, e)| (g - phase * e).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Compute the logical matrix and leakage of a gate on a code. Multi-mode
/// gates use the same code on every mode and require matching orders.
pub fn verify_logical_action(spec: &GateSpec, code: &RotationCode) -> Result<LogicalActionReport> {
    if spec.orders().iter().any(|&n| n != code.order()) {
        return Err(RotorError::InvalidGateSpec(format!(
            "gate orders {:?} do not match code order {}",
            spec.orders(),
            code.order()
        )));
    }
    let modes = spec.kind().mode_count();
    let cw = code.codewords()?;
    let gate = make_gate(spec, code.dim())?;

    // logical basis kets on the full (possibly tensor) space
    let basis_single = [&cw.zero, &cw.one];
    let side = 1usize << modes;
    let mut basis: Vec<Ket> = Vec::with_capacity(side);
    for idx in 0..side {
        let mut ket: Option<Ket> = None;
        for m in 0..modes {
            let bit = (idx >> (modes - 1 - m)) & 1;
            let factor = basis_single[bit];
            ket = Some(match ket {
                None => (*factor).clone(),
                Some(k) => k.kron(factor)?,
            });
        }
        basis.push(ket.unwrap());
    }

    let mut matrix = vec![C64::new(0.0, 0.0); side * side];
    let mut leakage_sq = 0.0f64;
    for (b, ket_b) in basis.iter().enumerate() {
        let image = gate.apply(ket_b);
        let mut in_space = 0.0f64;
        for (a, ket_a) in basis.iter().enumerate() {
            let amp = ket_a.inner(&image);
            matrix[a * side + b] = amp;
            in_space += amp.norm_sqr();
        }
        leakage_sq += (image.norm().powi(2) - in_space).max(0.0);
    }
    let leakage = leakage_sq.sqrt();

    let gdag_g = gate.adjoint().mul(&gate);
    let isometry_defect = gdag_g
        .sub(&Operator::identity(gate.dim()))
        .frobenius_norm();

    let expected = expected_logical(spec);
    let deviation = expected
        .as_ref()
        .map(|e| deviation_up_to_phase(&matrix, e));
    Ok(LogicalActionReport {
        matrix,
        side,
        expected,
        deviation,
        leakage,
        isometry_defect,
    })
}
