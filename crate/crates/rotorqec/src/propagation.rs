//! Error propagation through gates: for each gate the predicted propagated
//! error (global phase, output labels, nonlinear factor, extra term) is built
//! in closed form and checked against the directly materialized product
//! G * E on the safe subspace.
//!
//! For a diagonal gate exp[i pi Q(n)] the whole prediction follows from the
//! conjugation lemma: G E_k(theta) = e^{i pi (Q(n) - Q(n-k))} E_k(theta) G.
//! Splitting Q(n) - Q(n-k) = c0 + c1 n + H(n) gives the global phase
//! pi(c0 + c1 k Theta(k)), the rotated label theta + pi c1, and the nonlinear
//! factor exp[i pi H(n)]. All of c0, c1, H are exact rationals.

use crate::error_basis::{make_error, modular_error_labels, ErrorLabel};
use crate::fock::{projector_first, residual_on_safe_subspace_multi, Dim, Operator};
use crate::gates::{make_gate_with_dims, GateKind, GateSpec};
use crate::ratio::{phase_pi, RatPoly, Ratio};
use crate::{heaviside, Result, RotorError};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Nonlinear factor of a propagated error, stored as a recipe so predictions
/// stay dimension-free until materialized.
#[derive(Debug, Clone)]
enum ResidualKind {
    None,
    /// exp[i pi H(n)] on mode 0.
    DiagPoly(RatPoly),
    /// exp[i c e^{i pi n / N}] on mode 0 (the P-gate factor; c is complex).
    PhaseGateFactor { coeff: C64, order: u32 },
    /// exp[i pi r n (x) n] on modes 2 and 3 (the CCROT V_k factor).
    TailModes { ratio: Ratio },
}

/// Extra non-factorizable term (the projector tail of the X_N propagation).
#[derive(Debug, Clone)]
enum ExtraKind {
    /// phase * P_proj * E(label), added after the main term is multiplied by G.
    XTail {
        phase: C64,
        proj: usize,
        label: ErrorLabel,
    },
}

/// Fully evaluated propagation prediction:
/// G * E_in = global_phase * F * (sum of weighted out labels per mode) * G
///            (+ extra term).
#[derive(Debug, Clone)]
pub struct PropagationPrediction {
    spec: GateSpec,
    global_phase: C64,
    out_labels: Vec<Vec<(C64, ErrorLabel)>>,
    residual: ResidualKind,
    extra: Option<ExtraKind>,
}

impl PropagationPrediction {
    pub fn spec(&self) -> &GateSpec {
        &self.spec
    }

    pub fn global_phase(&self) -> C64 {
        self.global_phase
    }

    /// Weighted output labels, one list per mode.
    pub fn out_labels(&self) -> &[Vec<(C64, ErrorLabel)>] {
        &self.out_labels
    }

    pub fn has_residual_factor(&self) -> bool {
        !matches!(self.residual, ResidualKind::None)
    }

    pub fn has_extra_term(&self) -> bool {
        self.extra.is_some()
    }

    /// Degree of the nonlinear factor's generator polynomial (0 when absent).
    pub fn residual_degree(&self) -> usize {
        match &self.residual {
            ResidualKind::DiagPoly(p) => p.degree(),
            ResidualKind::None => 0,
            ResidualKind::PhaseGateFactor { .. } => usize::MAX, // transcendental
            ResidualKind::TailModes { .. } => 2,
        }
    }

    /// The nonlinear F-factor as an operator on the full space
    /// (identity when absent).
    pub fn residual_factor(&self, dims: &[Dim]) -> Result<Operator> {
        let total: usize = dims.iter().map(|d| d.get()).product();
        let full = Dim::new(total)?;
        match &self.residual {
            ResidualKind::None => Ok(Operator::identity(full)),
            ResidualKind::DiagPoly(h) => {
                let d0 = dims[0];
                let diag = Operator::diagonal(d0, "F", |n| phase_pi(&h.eval_mod_two(n as i128)));
                embed_mode0(&diag, dims)
            }
            ResidualKind::PhaseGateFactor { coeff, order } => {
                let n_i = *order as i128;
                let c = *coeff;
                let d0 = dims[0];
                let diag = Operator::diagonal(d0, "F_P", |lvl| {
                    let z = phase_pi(&Ratio::new(lvl as i128, n_i));
                    (C64::new(0.0, 1.0) * c * z).exp()
                });
                embed_mode0(&diag, dims)
            }
            ResidualKind::TailModes { ratio } => {
                // I (x) exp[i pi r n (x) n] on a three-mode space
                if dims.len() != 3 {
                    return Err(RotorError::Dimension(
                        "tail-mode factor needs three modes".into(),
                    ));
                }
                let (d2, d3) = (dims[1].get(), dims[2].get());
                let r = *ratio;
                Ok(Operator::diagonal(full, "I(x)V_k", move |idx| {
                    let n3 = idx % d3;
                    let n2 = (idx / d3) % d2;
                    phase_pi(&r.mul_int((n2 * n3) as i128))
                }))
            }
        }
    }

    /// Materialize phase * F * kron_m(sum_i w_i E(label_i)) on the full space.
    /// The extra term, when present, is handled by [`verify`].
    pub fn materialize(&self, dims: &[Dim]) -> Result<Operator> {
        if dims.len() != self.out_labels.len() {
            return Err(RotorError::Dimension(format!(
                "prediction has {} modes, got {} dims",
                self.out_labels.len(),
                dims.len()
            )));
        }
        let mut acc: Option<Operator> = None;
        for (mode, terms) in self.out_labels.iter().enumerate() {
            let d = dims[mode];
            let mut sum = Operator::zeros(d, "sum");
            for (w, label) in terms {
                sum = sum.add(&make_error(label, d)?.scale(*w));
            }
            acc = Some(match acc {
                None => sum,
                Some(a) => a.kron(&sum)?,
            });
        }
        let mut out = acc.unwrap();
        if self.has_residual_factor() {
            let f = self.residual_factor(dims)?;
            // every F here is diagonal
            out.scale_rows_by_diag(&f);
        }
        Ok(out.scale(self.global_phase))
    }

    fn extra_operator(&self, dims: &[Dim]) -> Result<Option<Operator>> {
        match &self.extra {
            None => Ok(None),
            Some(ExtraKind::XTail { phase, proj, label }) => {
                let d0 = dims[0];
                let p = projector_first((*proj).min(d0.get()), d0)?;
                let e = make_error(label, d0)?;
                let term = p.mul(&e).scale(*phase);
                Ok(Some(embed_mode0(&term, dims)?))
            }
        }
    }
}

fn embed_mode0(op: &Operator, dims: &[Dim]) -> Result<Operator> {
    let mut out = op.clone();
    for d in &dims[1..] {
        out = out.kron(&Operator::identity(*d))?;
    }
    Ok(out)
}

/// Brute-force conjugation G E G-dagger: the oracle against which every
/// closed-form prediction is checked (for unitary gates).
pub fn conjugate(g: &Operator, e: &Operator) -> Operator {
    g.mul(e).mul(&g.adjoint())
}

/// Closed-form propagation of per-mode input errors through a gate.
/// Single-mode gates take one label; CROT takes two (identity labels model
/// uncorrupted modes); CCROT takes the corrupted first mode's label.
pub fn predict(spec: &GateSpec, labels: &[ErrorLabel]) -> Result<PropagationPrediction> {
    let modes = spec.kind().mode_count();
    if labels.len() != modes {
        return Err(RotorError::InvalidGateSpec(format!(
            "{} needs {} input label(s), got {}",
            spec.kind().name(),
            modes,
            labels.len()
        )));
    }
    let n_order = spec.order() as i64;
    let label = labels[0];
    let k = label.k();
    let theta = label.theta();

    match spec.kind() {
        GateKind::X => {
            // X_N E_k(theta) = e^{i theta N} E_k(theta) X_N
            //                + e^{i theta (N-k) Theta(N-k)} P_k E_{k-N}(theta)
            let phase = C64::from_polar(1.0, theta * n_order as f64);
            let tail_phase = C64::from_polar(
                1.0,
                theta * (n_order - k) as f64 * heaviside(n_order - k),
            );
            Ok(PropagationPrediction {
                spec: spec.clone(),
                global_phase: phase,
                out_labels: vec![vec![(C64::new(1.0, 0.0), label)]],
                residual: ResidualKind::None,
                extra: Some(ExtraKind::XTail {
                    phase: tail_phase,
                    proj: k.max(0) as usize,
                    label: ErrorLabel::new(k - n_order, theta),
                }),
            })
        }
        GateKind::XPrime => {
            let n = n_order;
            let two_n = 2 * n;
            let kmod = k.rem_euclid(two_n); // non-negative remainder convention
            let mut terms: Vec<(C64, ErrorLabel)> = Vec::new();
            for l in 0..n {
                let x_l = if (kmod - n).max(0) <= l && l < kmod.min(n) {
                    two_n
                } else {
                    0
                };
                let k_plus = k - x_l;
                let k_minus = k + x_l;
                let p_plus =
                    n as f64 - k as f64 * heaviside(k) + k_plus as f64 * heaviside(k_plus);
                let p_minus =
                    -(n as f64) - k as f64 * heaviside(k) + k_minus as f64 * heaviside(k_minus);
                let w_plus = C64::from_polar(1.0, theta * p_plus);
                let w_minus = C64::from_polar(1.0, theta * p_minus);
                for (w, lab) in
                    modular_error_labels(&ErrorLabel::new(k_plus, theta), l, spec.order())
                {
                    terms.push((w_plus * w, lab));
                }
                for (w, lab) in
                    modular_error_labels(&ErrorLabel::new(k_minus, theta), l + n, spec.order())
                {
                    terms.push((w_minus * w, lab));
                }
            }
            Ok(PropagationPrediction {
                spec: spec.clone(),
                global_phase: C64::new(1.0, 0.0),
                out_labels: vec![terms],
                residual: ResidualKind::None,
                extra: None,
            })
        }
        GateKind::P => {
            // P_N(phi) E = exp[i (phi/2)(e^{-i pi k/N} - 1) Z_N] E P_N(phi)
            let phi = spec.phi().unwrap();
            let zk = phase_pi(&Ratio::new(-(k as i128), n_order as i128));
            let coeff = (zk - C64::new(1.0, 0.0)) * C64::new(phi / 2.0, 0.0);
            Ok(PropagationPrediction {
                spec: spec.clone(),
                global_phase: C64::new(1.0, 0.0),
                out_labels: vec![vec![(C64::new(1.0, 0.0), label)]],
                residual: ResidualKind::PhaseGateFactor {
                    coeff,
                    order: spec.order(),
                },
                extra: None,
            })
        }
        GateKind::Crot => {
            // two-error concatenation; a single error is the k2 = 0 case.
            // Concatenating the two single-mode propagations and merging the
            // rotation factors with the linear lemma gives the phase
            // exp[i pi k1 k2 (Theta(k2) - Theta(-k1)) / NM].
            let (k1, t1) = (labels[0].k(), labels[0].theta());
            let (k2, t2) = (labels[1].k(), labels[1].theta());
            let nm = (spec.orders()[0] as i128) * (spec.orders()[1] as i128);
            let steps = heaviside(k2) as i128 - heaviside(-k1) as i128;
            let phase = phase_pi(&Ratio::new((k1 as i128) * (k2 as i128) * steps, nm));
            let l1 = ErrorLabel::new(k1, t1)
                .rotated_by_pi_ratio(&Ratio::new(k2 as i128, nm));
            let l2 = ErrorLabel::new(k2, t2)
                .rotated_by_pi_ratio(&Ratio::new(k1 as i128, nm));
            Ok(PropagationPrediction {
                spec: spec.clone(),
                global_phase: phase,
                out_labels: vec![
                    vec![(C64::new(1.0, 0.0), l1)],
                    vec![(C64::new(1.0, 0.0), l2)],
                ],
                residual: ResidualKind::None,
                extra: None,
            })
        }
        GateKind::Ccrot => {
            if labels[1] != ErrorLabel::identity() || labels[2] != ErrorLabel::identity() {
                return Err(RotorError::InvalidGateSpec(
                    "CCROT prediction covers a single corrupted mode; concatenate by symmetry"
                        .into(),
                ));
            }
            let nmo = spec.orders().iter().map(|&x| x as i128).product::<i128>();
            Ok(PropagationPrediction {
                spec: spec.clone(),
                global_phase: C64::new(1.0, 0.0),
                out_labels: vec![
                    vec![(C64::new(1.0, 0.0), label)],
                    vec![(C64::new(1.0, 0.0), ErrorLabel::identity())],
                    vec![(C64::new(1.0, 0.0), ErrorLabel::identity())],
                ],
                residual: ResidualKind::TailModes {
                    ratio: Ratio::new(k as i128, nmo),
                },
                extra: None,
            })
        }
        _ => {
            // diagonal gates: exp[i pi Q(n)]
            let q = spec.diagonal_exponent().ok_or_else(|| {
                RotorError::InvalidGateSpec(format!(
                    "no propagation rule for {}",
                    spec.kind().name()
                ))
            })?;
            let diff = q.sub(&q.shift_arg(k as i128)); // Q(n) - Q(n - k)
            let c0 = diff.coeff(0);
            let c1 = diff.coeff(1);
            let mut h_coeffs = diff.coeffs().to_vec();
            if !h_coeffs.is_empty() {
                h_coeffs[0] = Ratio::zero();
            }
            if h_coeffs.len() > 1 {
                h_coeffs[1] = Ratio::zero();
            }
            let h = RatPoly::new(h_coeffs);
            // global phase pi (c0 + c1 k Theta(k))
            let phase_ratio = if k >= 0 {
                c0.add(&c1.mul_int(k as i128))
            } else {
                c0
            };
            let residual = if h.degree() >= 2 && h.coeffs().iter().any(|c| !c.is_zero()) {
                ResidualKind::DiagPoly(h)
            } else {
                ResidualKind::None
            };
            Ok(PropagationPrediction {
                spec: spec.clone(),
                global_phase: phase_pi(&phase_ratio),
                out_labels: vec![vec![(C64::new(1.0, 0.0), label.rotated_by_pi_ratio(&c1))]],
                residual,
                extra: None,
            })
        }
    }
}

/// Pad rule: |k| + N * (number of grid shifts in the gate) + 2.
pub fn default_pad(spec: &GateSpec, labels: &[ErrorLabel]) -> usize {
    let n = spec.order() as usize;
    let shifts = match spec.kind() {
        GateKind::X => 1,
        GateKind::StabX => 2,
        GateKind::XPrime => 2,
        _ => 0,
    };
    let kmax = labels.iter().map(|l| l.k().unsigned_abs() as usize).max().unwrap_or(0);
    kmax + n * shifts + 2
}

/// Residual of the propagation identity for `spec` with per-mode input
/// labels, at per-mode dimension `d`, compared on the safe subspace.
pub fn verify(spec: &GateSpec, labels: &[ErrorLabel], d: Dim, pad: usize) -> Result<f64> {
    let modes = spec.kind().mode_count();
    let dims = vec![d; modes];
    let mode_dims: Vec<usize> = dims.iter().map(|x| x.get()).collect();
    let gate = make_gate_with_dims(spec, &dims)?;

    // LHS: G * E_in
    let mut e_in: Option<Operator> = None;
    for (m, label) in labels.iter().enumerate() {
        let e = make_error(label, dims[m])?;
        e_in = Some(match e_in {
            None => e,
            Some(a) => a.kron(&e)?,
        });
    }
    let e_in = e_in.unwrap();
    let lhs = if gate.is_diagonal() {
        let mut m = e_in.clone();
        m.scale_rows_by_diag(&gate);
        m
    } else {
        gate.mul(&e_in)
    };

    // RHS: materialize(prediction) * G (+ extra)
    let pred = predict(spec, labels)?;
    let mut rhs = pred.materialize(&dims)?;
    if gate.is_diagonal() {
        rhs.scale_cols_by_diag(&gate);
    } else {
        rhs = rhs.mul(&gate);
    }
    if let Some(extra) = pred.extra_operator(&dims)? {
        rhs = rhs.add(&extra);
    }
    residual_on_safe_subspace_multi(&lhs, &rhs, &mode_dims, pad)
}

/// Residual of the Appendix A lemma
/// e^{i f(n)} E_k(theta) = e^{i [f(n) - f(n-k)]} E_k(theta) e^{i f(n)}
/// for a real-coefficient polynomial f (ascending coefficients).
pub fn verify_general_function(
    coeffs: &[f64],
    label: &ErrorLabel,
    d: Dim,
    pad: usize,
) -> Result<f64> {
    let eval = |x: f64| -> f64 {
        let mut acc = 0.0;
        for c in coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    };
    let k = label.k();
    let gate = Operator::diagonal(d, "exp(if(n))", |n| C64::from_polar(1.0, eval(n as f64)));
    let factor = Operator::diagonal(d, "exp(i(f(n)-f(n-k)))", |n| {
        C64::from_polar(1.0, eval(n as f64) - eval((n as i64 - k) as f64))
    });
    let e = make_error(label, d)?;
    let lhs = gate.mul(&e);
    let rhs = factor.mul(&e).mul(&gate);
    crate::fock::residual_on_safe_subspace(&lhs, &rhs, pad)
}

/// Residual of the linear lemma
/// e^{i phi n} E_k(theta) = e^{i phi k Theta(k)} E_k(theta + phi).
pub fn verify_linear_modification(phi: f64, label: &ErrorLabel, d: Dim, pad: usize) -> Result<f64> {
    let rot = crate::fock::make_rotation(phi, d);
    let e = make_error(label, d)?;
    let lhs = rot.mul(&e);
    let phase = C64::from_polar(1.0, phi * label.k() as f64 * heaviside(label.k()));
    let rhs = make_error(&ErrorLabel::new(label.k(), label.theta() + phi), d)?.scale(phase);
    crate::fock::residual_on_safe_subspace(&lhs, &rhs, pad)
}

// ---------------------------------------------------------------------------
// Qubit analogs
// ---------------------------------------------------------------------------

/// Qubit gates with error-propagation analogs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitGate {
    Z,
    X,
    S,
    T,
    Cz,
    Ccz,
}

impl QubitGate {
    pub fn mode_count(&self) -> usize {
        match self {
            QubitGate::Cz => 2,
            QubitGate::Ccz => 3,
            _ => 1,
        }
    }

    pub fn matrix(&self) -> Operator {
        let d2 = Dim::new(2).unwrap();
        match self {
            QubitGate::Z => Operator::diagonal(d2, "Z", |n| {
                if n == 1 {
                    C64::new(-1.0, 0.0)
                } else {
                    C64::new(1.0, 0.0)
                }
            }),
            QubitGate::X => {
                let mut x = Operator::zeros(d2, "X");
                x.set(0, 1, C64::new(1.0, 0.0));
                x.set(1, 0, C64::new(1.0, 0.0));
                x
            }
            QubitGate::S => Operator::diagonal(d2, "S", |n| {
                if n == 1 {
                    C64::new(0.0, 1.0)
                } else {
                    C64::new(1.0, 0.0)
                }
            }),
            QubitGate::T => Operator::diagonal(d2, "T", |n| {
                if n == 1 {
                    C64::from_polar(1.0, PI / 4.0)
                } else {
                    C64::new(1.0, 0.0)
                }
            }),
            QubitGate::Cz => {
                let d4 = Dim::new(4).unwrap();
                Operator::diagonal(d4, "CZ", |i| {
                    if i == 3 {
                        C64::new(-1.0, 0.0)
                    } else {
                        C64::new(1.0, 0.0)
                    }
                })
            }
            QubitGate::Ccz => {
                let d8 = Dim::new(8).unwrap();
                Operator::diagonal(d8, "CCZ", |i| {
                    if i == 7 {
                        C64::new(-1.0, 0.0)
                    } else {
                        C64::new(1.0, 0.0)
                    }
                })
            }
        }
    }
}

/// Exact residual of the qubit propagation identity (expected 0 to machine
/// precision; the qubit space has no truncation edge).
pub fn verify_qubit(gate: QubitGate, k: i64, theta: f64) -> Result<f64> {
    use crate::error_basis::make_qubit_error;
    let g = gate.matrix();
    let q = make_qubit_error(k, theta)?;
    let d2 = Dim::new(2).unwrap();
    let id2 = Operator::identity(d2);
    let (lhs, rhs) = match gate {
        QubitGate::Z => {
            let phase = C64::from_polar(1.0, k as f64 * PI);
            (g.mul(&q), q.scale(phase).mul(&g))
        }
        QubitGate::X => {
            let delta = if k == 0 { 1.0 } else { 0.0 };
            let phase = C64::from_polar(1.0, theta * delta);
            let out = make_qubit_error(-k, -theta)?;
            (g.mul(&q), out.scale(phase).mul(&g))
        }
        QubitGate::S => {
            let phase = C64::from_polar(1.0, k as f64 * PI / 2.0);
            (g.mul(&q), q.scale(phase).mul(&g))
        }
        QubitGate::T => {
            let phase = C64::from_polar(1.0, k as f64 * PI / 4.0);
            (g.mul(&q), q.scale(phase).mul(&g))
        }
        QubitGate::Cz => {
            let e_in = q.kron(&id2)?;
            let out = q.kron(&make_qubit_error(0, k as f64 * PI)?)?;
            (g.mul(&e_in), out.mul(&g))
        }
        QubitGate::Ccz => {
            let e_in = q.kron(&id2)?.kron(&id2)?;
            // e^{-i k pi N (x) N} on modes 2,3
            let v = Operator::diagonal(Dim::new(4).unwrap(), "V", |i| {
                if i == 3 {
                    C64::from_polar(1.0, -(k as f64) * PI)
                } else {
                    C64::new(1.0, 0.0)
                }
            });
            let out = q.kron(&v)?;
            (g.mul(&e_in), out.mul(&g))
        }
    };
    Ok(lhs.max_abs_diff(&rhs))
}

/// Bosonic prediction at N=1 restricted to the {|0>, |1>} subspace must match
/// the qubit prediction: compare the bosonic identity materialized at d = 2
/// per mode against the qubit-operator right-hand side. The shift gate's
/// identity needs the usual safe-subspace treatment (its k = +1 case routes
/// through the clipped top state), so that comparison skips the top column.
pub fn compare_qubit_restriction(kind: GateKind, k: i64, theta: f64) -> Result<f64> {
    use crate::error_basis::make_qubit_error;
    let d2 = Dim::new(2).unwrap();
    let spec = match kind {
        GateKind::Z => GateSpec::z(1),
        GateKind::X => GateSpec::x(1),
        GateKind::XPrime => GateSpec::x_prime(1),
        GateKind::S => GateSpec::s(1),
        GateKind::T => GateSpec::t(1),
        GateKind::Crot => GateSpec::crot(1, 1),
        GateKind::Ccrot => GateSpec::ccrot(1, 1, 1),
        _ => {
            return Err(RotorError::InvalidGateSpec(format!(
                "{} has no qubit analog",
                kind.name()
            )))
        }
    };
    let modes = spec.kind().mode_count();
    let dims = vec![d2; modes];
    let gate = make_gate_with_dims(&spec, &dims)?;
    let mut e_in = make_error(&ErrorLabel::new(k, theta), d2)?;
    for _ in 1..modes {
        e_in = e_in.kron(&Operator::identity(d2))?;
    }
    let lhs = gate.mul(&e_in);

    let qubit_gate = match kind {
        GateKind::Z => QubitGate::Z,
        GateKind::X | GateKind::XPrime => QubitGate::X,
        GateKind::S => QubitGate::S,
        GateKind::T => QubitGate::T,
        GateKind::Crot => QubitGate::Cz,
        GateKind::Ccrot => QubitGate::Ccz,
        _ => unreachable!(),
    };
    let rhs = match kind {
        GateKind::X => {
            // qubit analog of the shift gate is sigma_-, with the bosonic
            // X-spread formula: e^{i theta} Q_k(theta) sigma_-
            //                 + e^{i theta (1-k) Theta(1-k)} P_k Q_{k-1}(theta)
            let sm = make_qubit_error(-1, 0.0)?;
            let q = make_qubit_error(k, theta)?;
            let main = q.scale(C64::from_polar(1.0, theta)).mul(&sm);
            if k == 1 {
                let tail = projector_first(1, d2)?
                    .mul(&make_qubit_error(0, theta)?)
                    .scale(C64::from_polar(1.0, 0.0));
                main.add(&tail)
            } else {
                main
            }
        }
        GateKind::XPrime => {
            let delta = if k == 0 { 1.0 } else { 0.0 };
            let phase = C64::from_polar(1.0, theta * delta);
            make_qubit_error(-k, -theta)?
                .scale(phase)
                .mul(&qubit_gate.matrix())
        }
        GateKind::Z | GateKind::S | GateKind::T => {
            let angle = match kind {
                GateKind::Z => PI,
                GateKind::S => PI / 2.0,
                GateKind::T => PI / 4.0,
                _ => unreachable!(),
            };
            make_qubit_error(k, theta)?
                .scale(C64::from_polar(1.0, k as f64 * angle))
                .mul(&qubit_gate.matrix())
        }
        GateKind::Crot => {
            let q = make_qubit_error(k, theta)?;
            q.kron(&make_qubit_error(0, k as f64 * PI)?)?
                .mul(&qubit_gate.matrix())
        }
        GateKind::Ccrot => {
            let q = make_qubit_error(k, theta)?;
            let v = Operator::diagonal(Dim::new(4).unwrap(), "V", |i| {
                if i == 3 {
                    C64::from_polar(1.0, -(k as f64) * PI)
                } else {
                    C64::new(1.0, 0.0)
                }
            });
            q.kron(&v)?.mul(&qubit_gate.matrix())
        }
        _ => unreachable!(),
    };
    if kind == GateKind::X {
        crate::fock::residual_on_safe_subspace(&lhs, &rhs, 1)
    } else {
        Ok(lhs.max_abs_diff(&rhs))
    }
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

/// One verified propagation cell.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ReportRow {
    pub gate: String,
    pub n: u32,
    pub k: i64,
    pub theta: f64,
    pub d: usize,
    pub pad: usize,
    pub residual: f64,
}

/// Sweep configuration covering the full gate table.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub orders: Vec<u32>,
    pub ks: Vec<i64>,
    pub thetas: Vec<f64>,
    pub d_single: usize,
    pub d_crot: usize,
    pub d_ccrot: usize,
    pub ells: Vec<u32>,
    pub p_phis: Vec<f64>,
    pub gate_filter: Option<String>,
    /// Overrides the per-gate pad rule when set.
    pub pad_override: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            orders: vec![1, 2, 3, 4],
            ks: (-3..=3).collect(),
            thetas: default_theta_samples(),
            d_single: 48,
            d_crot: 16,
            d_ccrot: 12,
            ells: vec![0, 1, 2, 3],
            p_phis: vec![0.9],
            gate_filter: None,
            pad_override: None,
        }
    }
}

/// Eight theta samples including irrational multiples of pi, to avoid
/// accidental phase coincidences.
pub fn default_theta_samples() -> Vec<f64> {
    vec![
        0.0,
        0.1,
        -0.37,
        PI / std::f64::consts::SQRT_2,
        -PI / 5.0_f64.sqrt(),
        0.9,
        2.0,
        -2.6,
    ]
}

/// All gate specs of the comparison table for a given order.
pub fn table_gates(n: u32, ells: &[u32], p_phis: &[f64]) -> Vec<GateSpec> {
    let mut specs = vec![
        GateSpec::z(n),
        GateSpec::x(n),
        GateSpec::x_prime(n),
        GateSpec::s(n),
        GateSpec::t(n),
        GateSpec::t_prime(n),
    ];
    for &l in ells {
        specs.push(GateSpec::rl(n, l).unwrap());
        specs.push(GateSpec::rl_prime(n, l).unwrap());
    }
    for &phi in p_phis {
        specs.push(GateSpec::p(n, phi));
    }
    specs.push(GateSpec::crot(n, n));
    specs.push(GateSpec::ccrot(n, n, n));
    specs
}

/// Run the full verification sweep in parallel; rows come back in a
/// deterministic order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<ReportRow>> {
    let mut cells: Vec<(GateSpec, i64, f64)> = Vec::new();
    for &n in &cfg.orders {
        for spec in table_gates(n, &cfg.ells, &cfg.p_phis) {
            if let Some(filter) = &cfg.gate_filter {
                if !spec.kind().name().eq_ignore_ascii_case(filter) {
                    continue;
                }
            }
            for &k in &cfg.ks {
                for &theta in &cfg.thetas {
                    cells.push((spec.clone(), k, theta));
                }
            }
        }
    }
    let rows: Result<Vec<ReportRow>> = cells
        .par_iter()
        .map(|(spec, k, theta)| {
            let d = match spec.kind() {
                GateKind::Crot => cfg.d_crot,
                GateKind::Ccrot => cfg.d_ccrot,
                _ => cfg.d_single,
            };
            let dim = Dim::new(d)?;
            let modes = spec.kind().mode_count();
            let mut labels = vec![ErrorLabel::identity(); modes];
            labels[0] = ErrorLabel::new(*k, *theta);
            let pad = cfg.pad_override.unwrap_or_else(|| default_pad(spec, &labels));
            let residual = verify(spec, &labels, dim, pad)?;
            Ok(ReportRow {
                gate: spec.describe(),
                n: spec.order(),
                k: *k,
                theta: *theta,
                d,
                pad,
                residual,
            })
        })
        .collect();
    rows
}

/// CSV serialization of the report with a versioned header comment.
pub fn report_to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from("# rotorqec propagation report v1\ngate,n,k,theta,d,pad,residual\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:e}\n",
            r.gate, r.n, r.k, r.theta, r.d, r.pad, r.residual
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::residual_on_safe_subspace;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn conjugate_identity_cases() {
        let d = Dim::new(8).unwrap();
        let e = make_error(&ErrorLabel::new(-2, 0.4), d).unwrap();
        let id = Operator::identity(d);
        assert!(conjugate(&id, &e).max_abs_diff(&e) < 1e-14);
        // commuting diagonals
        let g = crate::fock::make_rotation(0.9, d);
        let ediag = crate::fock::make_rotation(-0.3, d);
        assert!(conjugate(&g, &ediag).max_abs_diff(&ediag) < 1e-12);
    }

    #[test]
    fn conjugate_z_phase() {
        // Z_2 E_3(0) Z_2^dag = e^{i 3 pi / 2} E_3(0) = -i E_3(0)
        let d = Dim::new(12).unwrap();
        let g = make_gate_with_dims(&GateSpec::z(2), &[d]).unwrap();
        let e = make_error(&ErrorLabel::new(3, 0.0), d).unwrap();
        let got = conjugate(&g, &e);
        let expect = e.scale(c(0.0, -1.0));
        assert!(residual_on_safe_subspace(&got, &expect, 0).unwrap() < 1e-12);
    }

    #[test]
    fn predict_z_global_phase() {
        let p = predict(&GateSpec::z(2), &[ErrorLabel::new(3, 0.7)]).unwrap();
        assert!((p.global_phase() - C64::from_polar(1.0, 3.0 * PI / 2.0)).norm() < 1e-14);
        assert_eq!(p.out_labels()[0].len(), 1);
        let (w, lab) = p.out_labels()[0][0];
        assert!((w - c(1.0, 0.0)).norm() < 1e-14);
        assert_eq!(lab.k(), 3);
        assert!((lab.theta() - 0.7).abs() < 1e-12);
        assert!(!p.has_residual_factor());
    }

    #[test]
    fn predict_s_example() {
        // S, N=2, k=2, theta=0: theta' = pi/2, phi_S = pi/2
        let p = predict(&GateSpec::s(2), &[ErrorLabel::new(2, 0.0)]).unwrap();
        assert!((p.global_phase() - C64::from_polar(1.0, PI / 2.0)).norm() < 1e-13);
        let (_, lab) = p.out_labels()[0][0];
        assert!((lab.theta() - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn predict_t_example() {
        // T, N=2, k=1, theta=0: theta' = pi/16, phi_T = 3 pi / 64,
        // F = exp[i (pi/64)(4 n^3 - 6 n^2)]
        let p = predict(&GateSpec::t(2), &[ErrorLabel::new(1, 0.0)]).unwrap();
        assert!((p.global_phase() - C64::from_polar(1.0, 3.0 * PI / 64.0)).norm() < 1e-13);
        let (_, lab) = p.out_labels()[0][0];
        assert!((lab.theta() - PI / 16.0).abs() < 1e-12);
        assert!(p.has_residual_factor());
        let f = p.residual_factor(&[Dim::new(6).unwrap()]).unwrap();
        for n in 0..6i64 {
            let expect = C64::from_polar(
                1.0,
                PI / 64.0 * (4.0 * (n as f64).powi(3) - 6.0 * (n as f64).powi(2)),
            );
            assert!((f.get(n as usize, n as usize) - expect).norm() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn predict_crot_example() {
        // CROT N=M=2, k=1 on mode 1: mode-2 label (0, pi/4), mode-1 unchanged
        let p = predict(
            &GateSpec::crot(2, 2),
            &[ErrorLabel::new(1, 0.3), ErrorLabel::identity()],
        )
        .unwrap();
        let (_, l1) = p.out_labels()[0][0];
        let (_, l2) = p.out_labels()[1][0];
        assert_eq!(l1.k(), 1);
        assert!((l1.theta() - 0.3).abs() < 1e-12);
        assert_eq!(l2.k(), 0);
        assert!((l2.theta() - PI / 4.0).abs() < 1e-12);
        assert!((p.global_phase() - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn t_prime_factor_is_s_power_when_integer() {
        // F'_N(k) = exp[i (3 pi k / 2 N^3) n^2] = (S_N)^{3k/N} when 3k/N is integer
        let n = 3u32;
        let k = 2i64;
        let p = predict(&GateSpec::t_prime(n), &[ErrorLabel::new(k, 0.0)]).unwrap();
        let d = Dim::new(14).unwrap();
        let f = p.residual_factor(&[d]).unwrap();
        for lvl in 0..14usize {
            let expect = C64::from_polar(
                1.0,
                3.0 * PI * k as f64 / (2.0 * (n as f64).powi(3)) * (lvl * lvl) as f64,
            );
            assert!((f.get(lvl, lvl) - expect).norm() < 1e-10);
        }
        // 3k/N = 2: compare with S_N squared
        let s = make_gate_with_dims(&GateSpec::s(n), &[d]).unwrap();
        let s2 = s.mul(&s);
        assert!(f.max_abs_diff(&s2) < 1e-10);
    }

    #[test]
    fn predictions_match_conjugation_oracle() {
        // for a unitary gate, G E = E' G is equivalent to E' = G E G-dagger,
        // so the materialized prediction must equal the brute-force
        // conjugation on the safe subspace
        let d = Dim::new(36).unwrap();
        let label = ErrorLabel::new(2, 0.55);
        for spec in [
            GateSpec::z(3),
            GateSpec::s(3),
            GateSpec::t(3),
            GateSpec::t_prime(3),
            GateSpec::rl(3, 2).unwrap(),
            GateSpec::rl_prime(3, 3).unwrap(),
            GateSpec::x_prime(3),
        ] {
            let gate = make_gate_with_dims(&spec, &[d]).unwrap();
            let e = make_error(&label, d).unwrap();
            let oracle = conjugate(&gate, &e);
            let pred = predict(&spec, &[label]).unwrap().materialize(&[d]).unwrap();
            let pad = default_pad(&spec, &[label]);
            let r = residual_on_safe_subspace_multi(&oracle, &pred, &[d.get()], pad).unwrap();
            assert!(r < 1e-10, "{}: residual {r}", spec.describe());
        }
        // two-mode: CROT with errors on both modes
        let d2 = Dim::new(12).unwrap();
        let labels = [ErrorLabel::new(1, -0.3), ErrorLabel::new(-2, 0.8)];
        let spec = GateSpec::crot(2, 3);
        let gate = make_gate_with_dims(&spec, &[d2, d2]).unwrap();
        let e = make_error(&labels[0], d2)
            .unwrap()
            .kron(&make_error(&labels[1], d2).unwrap())
            .unwrap();
        let oracle = conjugate(&gate, &e);
        let pred = predict(&spec, &labels).unwrap().materialize(&[d2, d2]).unwrap();
        let r = residual_on_safe_subspace_multi(&oracle, &pred, &[12, 12], 5).unwrap();
        assert!(r < 1e-11, "CROT conjugation oracle: {r}");
    }

    #[test]
    fn verify_single_mode_examples() {
        let d = Dim::new(30).unwrap();
        for k in [-2i64, 0, 1, 3] {
            let lab = ErrorLabel::new(k, 0.45);
            let r = verify(&GateSpec::z(3), &[lab], d, 6).unwrap();
            assert!(r < 1e-12, "Z k={k}: {r}");
        }
        let d40 = Dim::new(40).unwrap();
        let r = verify(&GateSpec::x(3), &[ErrorLabel::new(2, 0.7)], d40, 10).unwrap();
        assert!(r < 1e-10, "X spread with projector tail: {r}");
        let d48 = Dim::new(48).unwrap();
        let r = verify(&GateSpec::x_prime(2), &[ErrorLabel::new(3, 0.4)], d48, 12).unwrap();
        assert!(r < 1e-10, "XPrime spread: {r}");
    }

    #[test]
    fn verify_p_gate() {
        let d = Dim::new(36).unwrap();
        for k in [-3i64, -1, 0, 2] {
            let r = verify(&GateSpec::p(3, 0.9), &[ErrorLabel::new(k, 0.2)], d, 6).unwrap();
            assert!(r < 1e-11, "P k={k}: {r}");
        }
    }

    #[test]
    fn verify_crot_and_ccrot() {
        let d = Dim::new(16).unwrap();
        let r = verify(
            &GateSpec::crot(2, 2),
            &[ErrorLabel::new(1, 0.3), ErrorLabel::identity()],
            d,
            5,
        )
        .unwrap();
        assert!(r < 1e-12, "CROT single: {r}");
        // two-error concatenation (widetext formula)
        let r = verify(
            &GateSpec::crot(2, 3),
            &[ErrorLabel::new(-2, 0.9), ErrorLabel::new(1, -0.4)],
            d,
            6,
        )
        .unwrap();
        assert!(r < 1e-12, "CROT concatenated: {r}");
        let d12 = Dim::new(12).unwrap();
        let r = verify(
            &GateSpec::ccrot(2, 2, 2),
            &[
                ErrorLabel::new(2, -0.8),
                ErrorLabel::identity(),
                ErrorLabel::identity(),
            ],
            d12,
            4,
        )
        .unwrap();
        assert!(r < 1e-12, "CCROT: {r}");
    }

    #[test]
    fn crot_outputs_commute() {
        // the two single-mode CROT propagation outputs commute as operators
        let d = Dim::new(12).unwrap();
        let nm = Ratio::new(1, 4);
        let a1 = make_error(&ErrorLabel::new(2, 0.5), d).unwrap();
        let a2 = make_error(&ErrorLabel::identity().rotated_by_pi_ratio(&nm.mul_int(2)), d).unwrap();
        let b1 = make_error(&ErrorLabel::identity().rotated_by_pi_ratio(&nm.mul_int(-1)), d).unwrap();
        let b2 = make_error(&ErrorLabel::new(-1, 1.1), d).unwrap();
        let a = a1.kron(&a2).unwrap();
        let b = b1.kron(&b2).unwrap();
        let ab = a.mul(&b);
        let ba = b.mul(&a);
        assert!(ab.max_abs_diff(&ba) < 1e-12);
    }

    #[test]
    fn appendix_a_lemmas() {
        let d = Dim::new(30).unwrap();
        // f = 0
        let r = verify_general_function(&[0.0], &ErrorLabel::new(2, 0.3), d, 4).unwrap();
        assert!(r < 1e-14);
        // f(n) = pi n^2 / 8 (the S_2 generator), k = -2
        let r = verify_general_function(
            &[0.0, 0.0, PI / 8.0],
            &ErrorLabel::new(-2, 0.3),
            d,
            8,
        )
        .unwrap();
        assert!(r < 1e-11);
        // linear case reduces to the modification lemma
        let r = verify_linear_modification(0.9, &ErrorLabel::new(3, -0.7), d, 5).unwrap();
        assert!(r < 1e-12);
        let r = verify_linear_modification(-2.3, &ErrorLabel::new(-2, 1.9), d, 4).unwrap();
        assert!(r < 1e-12);
    }

    #[test]
    fn qubit_identities_machine_exact() {
        for k in [-1i64, 0, 1] {
            for theta in [0.0, 0.8, -2.4] {
                for gate in [
                    QubitGate::Z,
                    QubitGate::X,
                    QubitGate::S,
                    QubitGate::T,
                    QubitGate::Cz,
                    QubitGate::Ccz,
                ] {
                    let r = verify_qubit(gate, k, theta).unwrap();
                    assert!(r < 1e-14, "{gate:?} k={k} theta={theta}: {r}");
                }
            }
        }
    }

    #[test]
    fn qubit_restriction_matches() {
        for k in [-1i64, 0, 1] {
            for theta in [0.0, 0.2, -1.1] {
                for kind in [
                    GateKind::Z,
                    GateKind::X,
                    GateKind::XPrime,
                    GateKind::S,
                    GateKind::T,
                    GateKind::Crot,
                    GateKind::Ccrot,
                ] {
                    let r = compare_qubit_restriction(kind, k, theta).unwrap();
                    assert!(r < 1e-12, "{kind:?} k={k} theta={theta}: {r}");
                }
            }
        }
    }

    #[test]
    fn rl_nonlinear_order() {
        // induced nonlinear error is of order n^{2^l - 1} for R_l, n^l for R'_l
        let p = predict(&GateSpec::rl(2, 2).unwrap(), &[ErrorLabel::new(1, 0.0)]).unwrap();
        assert_eq!(p.residual_degree(), 3);
        let p = predict(&GateSpec::rl_prime(2, 2).unwrap(), &[ErrorLabel::new(1, 0.0)]).unwrap();
        assert_eq!(p.residual_degree(), 2);
    }

    #[test]
    fn quick_sweep_slice() {
        let cfg = SweepConfig {
            orders: vec![2],
            ks: vec![-1, 0, 2],
            thetas: vec![0.0, 0.9],
            d_single: 32,
            d_crot: 10,
            d_ccrot: 8,
            ells: vec![1],
            p_phis: vec![0.5],
            gate_filter: None,
            pad_override: None,
        };
        let rows = run_sweep(&cfg).unwrap();
        assert!(!rows.is_empty());
        for row in &rows {
            assert!(row.residual < 1e-9, "{} k={} theta={}: {}", row.gate, row.k, row.theta, row.residual);
        }
    }

    #[test]
    fn sweep_filter_restricts_gates() {
        let cfg = SweepConfig {
            orders: vec![1],
            ks: vec![0],
            thetas: vec![0.3],
            d_single: 16,
            d_crot: 8,
            d_ccrot: 6,
            ells: vec![0],
            p_phis: vec![0.5],
            gate_filter: Some("CROT".into()),
            pad_override: None,
        };
        let rows = run_sweep(&cfg).unwrap();
        assert!(!rows.is_empty());
        assert!(rows.iter().all(|r| r.gate.starts_with("CROT")));
    }
}
