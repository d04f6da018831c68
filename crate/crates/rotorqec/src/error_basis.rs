//! The rotation-code error basis E_k(theta), its qubit analog Q_k(theta),
//! and the modular-projected errors used by the bin-swap propagation formula.
//!
//! E_k(theta) is a k-fold number shift combined with a rotation by theta:
//! loss-like for k < 0 (rotation applied after the down-shift), gain-like for
//! k >= 0 (rotation applied before the up-shift).

use crate::fock::{make_rotation, make_sigma, Dim, Operator};
use crate::ratio::{phase_pi, Ratio};
use crate::{heaviside, wrap_angle, Result, RotorError};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Label (k, theta) indexing a basis error. theta is canonicalized into
/// [-pi, pi) at construction, never silently inside operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorLabel {
    k: i64,
    theta: f64,
}

impl ErrorLabel {
    pub fn new(k: i64, theta: f64) -> ErrorLabel {
        ErrorLabel {
            k,
            theta: wrap_angle(theta),
        }
    }

    pub fn identity() -> ErrorLabel {
        ErrorLabel { k: 0, theta: 0.0 }
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Label with theta shifted by an exact rational multiple of pi; the
    /// rational part is reduced mod 2 before touching floats.
    pub fn rotated_by_pi_ratio(&self, r: &Ratio) -> ErrorLabel {
        ErrorLabel::new(self.k, self.theta + PI * r.mod_two().to_f64())
    }
}

impl std::fmt::Display for ErrorLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "E_{}({:.6})", self.k, self.theta)
    }
}

/// Materialize E_k(theta) at dimension d.
pub fn make_error(label: &ErrorLabel, d: Dim) -> Result<Operator> {
    let k = label.k;
    if k.unsigned_abs() as usize >= d.get() {
        return Err(RotorError::Dimension(format!(
            "error shift |{k}| >= dimension {}",
            d.get()
        )));
    }
    let rot = make_rotation(label.theta, d);
    let mut op = if k < 0 {
        rot.mul(&make_sigma(k, d)?)
    } else {
        make_sigma(k, d)?.mul(&rot)
    };
    op.set_label(format!("{label}"));
    Ok(op)
}

/// Qubit analog: sigma_- for k = -1, e^{i theta N} for k = 0, sigma_+ for
/// k = +1, with N = |1><1|. Raising/lowering are labeled so they raise and
/// lower the numeric state label, opposite to the usual qubit convention.
pub fn make_qubit_error(k: i64, theta: f64) -> Result<Operator> {
    let d2 = Dim::new(2)?;
    let mut op = Operator::zeros(d2, format!("Q_{k}({theta:.4})"));
    match k {
        -1 => op.set(0, 1, C64::new(1.0, 0.0)),
        0 => {
            op.set(0, 0, C64::new(1.0, 0.0));
            op.set(1, 1, C64::from_polar(1.0, theta));
        }
        1 => op.set(1, 0, C64::new(1.0, 0.0)),
        _ => {
            return Err(RotorError::Dimension(format!(
                "qubit error shift must be in {{-1,0,1}}, got {k}"
            )))
        }
    }
    Ok(op)
}

/// E_k(theta) projected onto Fock states congruent to m mod 2N
/// (projector form of the modular error).
pub fn make_modular_error(label: &ErrorLabel, m: usize, order: u32, d: Dim) -> Result<Operator> {
    let two_n = 2 * order as usize;
    if m >= two_n {
        return Err(RotorError::Dimension(format!(
            "modular index {m} out of range 0..{two_n}"
        )));
    }
    let err = make_error(label, d)?;
    let proj = Operator::diagonal(d, format!("Pi_{m}^mod{two_n}"), |n| {
        if n % two_n == m {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let mut out = proj.mul(&err);
    out.set_label(format!("Etilde_{}^{}({:.4})", label.k, m, label.theta));
    Ok(out)
}

/// Fourier form of the modular error:
/// (1/2N) sum_j e^{-i (pi j / N)(m - k Theta(k))} E_k(theta + pi j / N).
/// Must agree with the projector form.
pub fn make_modular_error_fourier(
    label: &ErrorLabel,
    m: usize,
    order: u32,
    d: Dim,
) -> Result<Operator> {
    let two_n = 2 * order as usize;
    if m >= two_n {
        return Err(RotorError::Dimension(format!(
            "modular index {m} out of range 0..{two_n}"
        )));
    }
    let n_i = order as i128;
    let shift_weight = label.k as i128 * heaviside(label.k) as i128;
    let mut out = Operator::zeros(d, "Etilde (Fourier)");
    for j in 0..two_n as i128 {
        // e^{-i pi j (m - k Theta(k)) / N}
        let w = phase_pi(&Ratio::new(-j * (m as i128 - shift_weight), n_i));
        let rotated = label.rotated_by_pi_ratio(&Ratio::new(j, n_i));
        let term = make_error(&rotated, d)?;
        out = out.add(&term.scale(w / C64::new(two_n as f64, 0.0)));
    }
    Ok(out)
}

/// Weighted decomposition of the modular error into plain basis errors, per
/// the Fourier form. Used by the bin-swap propagation prediction.
pub fn modular_error_labels(
    label: &ErrorLabel,
    m: i64,
    order: u32,
) -> Vec<(C64, ErrorLabel)> {
    let two_n = 2 * order as i128;
    let n_i = order as i128;
    let shift_weight = label.k as i128 * heaviside(label.k) as i128;
    let mut terms = Vec::with_capacity(two_n as usize);
    for j in 0..two_n {
        let w = phase_pi(&Ratio::new(-j * (m as i128 - shift_weight), n_i))
            / C64::new(two_n as f64, 0.0);
        terms.push((w, label.rotated_by_pi_ratio(&Ratio::new(j, n_i))));
    }
    terms
}

/// Numerical rank of the set {vec(E_k(theta_j))} for k in [-K, K] and a
/// uniform theta grid of G points; expect d^2 once the set is large enough.
pub fn basis_span_rank(theta_grid_size: usize, k_max: i64, d: Dim) -> Result<usize> {
    let dd = d.get();
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for k in -k_max..=k_max {
        for j in 0..theta_grid_size {
            let theta = -PI + 2.0 * PI * j as f64 / theta_grid_size as f64;
            let e = make_error(&ErrorLabel::new(k, theta), d)?;
            rows.push(e.entries().to_vec());
        }
    }
    let _ = dd;
    Ok(crate::fock::numerical_rank(&mut rows, 1e-9))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::residual_on_safe_subspace;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_label() {
        let d = Dim::new(4).unwrap();
        let e = make_error(&ErrorLabel::new(0, 0.0), d).unwrap();
        assert!(e.max_abs_diff(&Operator::identity(d)) < 1e-15);
    }

    #[test]
    fn gain_one_d2() {
        let e = make_error(&ErrorLabel::new(1, 0.0), Dim::new(2).unwrap()).unwrap();
        assert_eq!(e.get(1, 0), c(1.0, 0.0));
        assert_eq!(e.get(0, 0), c(0.0, 0.0));
        assert_eq!(e.get(0, 1), c(0.0, 0.0));
        assert_eq!(e.get(1, 1), c(0.0, 0.0));
    }

    #[test]
    fn loss_with_rotation_d3() {
        // explicit 3x3 product: e^{i pi n/2} Sigma_1^-
        let d = Dim::new(3).unwrap();
        let e = make_error(&ErrorLabel::new(-1, PI / 2.0), d).unwrap();
        let expect = make_rotation(PI / 2.0, d).mul(&make_sigma(-1, d).unwrap());
        assert!(e.max_abs_diff(&expect) < 1e-15);
        // entries: |0><1| phase e^{0}, |1><2| phase e^{i pi/2}
        assert!((e.get(0, 1) - c(1.0, 0.0)).norm() < 1e-15);
        assert!((e.get(1, 2) - c(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn shift_too_large_rejected() {
        assert!(make_error(&ErrorLabel::new(5, 0.0), Dim::new(4).unwrap()).is_err());
    }

    #[test]
    fn qubit_errors() {
        let sm = make_qubit_error(-1, 0.7).unwrap();
        assert_eq!(sm.get(0, 1), c(1.0, 0.0));
        let id = make_qubit_error(0, 0.0).unwrap();
        assert!(id.max_abs_diff(&Operator::identity(Dim::new(2).unwrap())) < 1e-15);
        // k=0, theta=pi -> Z
        let z = make_qubit_error(0, PI).unwrap();
        assert!((z.get(1, 1) - c(-1.0, 0.0)).norm() < 1e-12);
        assert!(make_qubit_error(2, 0.0).is_err());
    }

    #[test]
    fn qubit_matches_bosonic_restriction() {
        // Q_k(theta) has the same matrix elements as E_k(theta) on {|0>,|1>}
        let d2 = Dim::new(2).unwrap();
        for k in [-1i64, 0, 1] {
            for theta in [0.0, 0.4, -1.3] {
                let q = make_qubit_error(k, theta).unwrap();
                let e = make_error(&ErrorLabel::new(k, theta), d2).unwrap();
                assert!(q.max_abs_diff(&e) < 1e-14, "k={k} theta={theta}");
            }
        }
    }

    #[test]
    fn modular_projector_even_states() {
        // label (0,0), m=0, N=1: projector onto even Fock states
        let d = Dim::new(6).unwrap();
        let e = make_modular_error(&ErrorLabel::identity(), 0, 1, d).unwrap();
        for n in 0..6 {
            let expect = if n % 2 == 0 { 1.0 } else { 0.0 };
            assert!((e.get(n, n) - c(expect, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn modular_fourier_matches_projector() {
        let d = Dim::new(24).unwrap();
        let label = ErrorLabel::new(1, 0.3);
        let a = make_modular_error(&label, 2, 2, d).unwrap();
        let b = make_modular_error_fourier(&label, 2, 2, d).unwrap();
        assert!(residual_on_safe_subspace(&a, &b, 3).unwrap() < 1e-10);
        // and a loss-side case
        let label = ErrorLabel::new(-2, -0.9);
        let a = make_modular_error(&label, 3, 2, d).unwrap();
        let b = make_modular_error_fourier(&label, 3, 2, d).unwrap();
        assert!(residual_on_safe_subspace(&a, &b, 4).unwrap() < 1e-10);
    }

    #[test]
    fn modular_resolution_of_identity() {
        // sum_m Etilde(theta)_k^m = E_k(theta)
        let d = Dim::new(24).unwrap();
        let label = ErrorLabel::new(1, 0.3);
        let mut acc = Operator::zeros(d, "sum");
        for m in 0..4 {
            acc = acc.add(&make_modular_error(&label, m, 2, d).unwrap());
        }
        let full = make_error(&label, d).unwrap();
        assert!(residual_on_safe_subspace(&acc, &full, 0).unwrap() < 1e-12);
    }

    #[test]
    fn adjoint_label_relation() {
        // E_k(theta)^dag = E_{-k}(-theta) exactly: the adjoint of the
        // rotation-right (gain) form is the rotation-left (loss) form, so no
        // compensating phase appears under this basis convention.
        let d = Dim::new(10).unwrap();
        for k in [-3i64, -1, 0, 2, 3] {
            for theta in [0.0, 0.8, -2.1] {
                let e = make_error(&ErrorLabel::new(k, theta), d).unwrap();
                let lhs = e.adjoint();
                let rhs = make_error(&ErrorLabel::new(-k, -theta), d).unwrap();
                assert!(lhs.max_abs_diff(&rhs) < 1e-12, "k={k} theta={theta}");
                // moving the rotation to the other side of the shift costs
                // exactly e^{i theta k}; check that bookkeeping too
                if k > 0 {
                    let moved = make_sigma(-k, d)
                        .unwrap()
                        .mul(&make_rotation(-theta, d))
                        .scale(C64::from_polar(1.0, theta * k as f64));
                    assert!(lhs.max_abs_diff(&moved) < 1e-12, "k={k} theta={theta}");
                }
            }
        }
    }

    #[test]
    fn span_rank_examples() {
        assert_eq!(basis_span_rank(4, 1, Dim::new(2).unwrap()).unwrap(), 4);
        assert_eq!(basis_span_rank(8, 2, Dim::new(3).unwrap()).unwrap(), 9);
        assert_eq!(basis_span_rank(1, 0, Dim::new(2).unwrap()).unwrap(), 1);
    }
}
