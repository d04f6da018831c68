//! Rotation-code codewords, amplitude profiles (ideal, cat, binomial,
//! custom), offset codes, and the codespace projector.
//!
//! A code of order N lives on the Fock grid {kN : k >= k0}. Codewords are
//! indexed by grid slots relative to the offset: |0_L> occupies slots
//! k0 + t for even t, |1_L> for odd t, which keeps the offset identity
//! |0'_N> = Sigma^+_{k0 N} |0_N> amplitude-exact for every k0.

use crate::fock::{Dim, Ket, Operator};
use crate::{Result, RotorError};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Amplitudes f_{kN} on the Fock grid, indexed by grid slot relative to the
/// code offset. Values are stored unnormalized; codeword construction
/// normalizes each parity class separately so |0_L| and |1_L| are unit.
#[derive(Debug, Clone)]
pub struct AmplitudeProfile {
    order: u32,
    values: Vec<C64>,
    provenance: String,
}

impl AmplitudeProfile {
    pub fn custom(order: u32, values: Vec<C64>, provenance: impl Into<String>) -> Result<Self> {
        if order == 0 {
            return Err(RotorError::InvalidProfile("order must be >= 1".into()));
        }
        if values.len() < 2 {
            return Err(RotorError::InvalidProfile(
                "profile needs at least 2 grid points (one per codeword)".into(),
            ));
        }
        Ok(AmplitudeProfile {
            order,
            values,
            provenance: provenance.into(),
        })
    }

    /// Constant amplitudes on the first M grid points: the finite-M stand-in
    /// for the non-normalizable ideal phase code.
    pub fn ideal(order: u32, grid_points: usize) -> Result<Self> {
        if grid_points < 2 {
            return Err(RotorError::InvalidProfile(
                "ideal profile needs M >= 2 grid points".into(),
            ));
        }
        AmplitudeProfile::custom(
            order,
            vec![C64::new(1.0, 0.0); grid_points],
            format!("ideal M={grid_points}"),
        )
    }

    /// Cat-code amplitudes f_{kN} ~ alpha^{kN} / sqrt((kN)!), the Fock-grid
    /// restriction of the rotated-coherent-state superposition.
    pub fn cat(order: u32, alpha: C64, d: Dim) -> Result<Self> {
        let n = order as usize;
        let mag = alpha.norm();
        if mag <= 0.0 {
            return Err(RotorError::InvalidProfile("cat code needs alpha != 0".into()));
        }
        let mean = mag * mag;
        // grid points that fit under the truncation with the 2N guard
        let top_level = d.get().saturating_sub(2 * n + 1);
        let grid_points = top_level / n + 1;
        if grid_points < 2 {
            return Err(RotorError::ProfileExceedsDim(format!(
                "dimension {} too small for an order-{order} cat code",
                d.get()
            )));
        }
        // ln n! via direct summation (desk-scale n)
        let top_fock = (grid_points - 1) * n;
        let mut ln_fact = vec![0.0f64; top_fock + 1];
        for m in 1..=top_fock {
            ln_fact[m] = ln_fact[m - 1] + (m as f64).ln();
        }
        // Poisson(|alpha|^2) tail mass beyond the truncated grid
        let tail = poisson_tail(mean, top_fock);
        if tail > 1e-8 {
            return Err(RotorError::ProfileExceedsDim(format!(
                "truncation captures only {:.3e} tail of the coherent weight (> 1e-8)",
                tail
            )));
        }
        let arg = alpha.arg();
        let values: Vec<C64> = (0..grid_points)
            .map(|t| {
                let level = t * n;
                let ln_mag = level as f64 * mag.ln() - 0.5 * ln_fact[level];
                C64::from_polar(ln_mag.exp(), arg * level as f64)
            })
            .collect();
        AmplitudeProfile::custom(order, values, format!("cat alpha={alpha}"))
    }

    /// Binomial-code amplitudes f_{kN} ~ sqrt(C(K, k)), k = 0..K.
    /// Amplitudes sourced from the standard literature; the source paper
    /// cites binomial codes without defining them.
    pub fn binomial(order: u32, big_k: usize, d: Dim) -> Result<Self> {
        let n = order as usize;
        if big_k < 1 {
            return Err(RotorError::InvalidProfile("binomial needs K >= 1".into()));
        }
        let top = big_k * n;
        if top + 2 * n >= d.get() {
            return Err(RotorError::ProfileExceedsDim(format!(
                "binomial K={big_k} grid exceeds dimension {}",
                d.get()
            )));
        }
        let values: Vec<C64> = (0..=big_k)
            .map(|t| {
                let b = crate::ratio::binomial(big_k as i128, t as i128) as f64;
                C64::new(b.sqrt(), 0.0)
            })
            .collect();
        AmplitudeProfile::custom(order, values, format!("binomial (external) K={big_k}"))
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn grid_points(&self) -> usize {
        self.values.len()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Export as CSV (columns: grid index k, Re f, Im f).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# rotorqec profile csv v1\nk,re,im\n");
        for (k, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", k, v.re, v.im));
        }
        out
    }

    /// Import from the CSV written by [`AmplitudeProfile::to_csv`].
    pub fn from_csv(order: u32, text: &str) -> Result<Self> {
        let mut values: Vec<(usize, C64)> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("k,") {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(RotorError::InvalidProfile(format!(
                    "bad profile csv line: {line}"
                )));
            }
            let k: usize = parts[0]
                .trim()
                .parse()
                .map_err(|_| RotorError::InvalidProfile(format!("bad index: {line}")))?;
            let re: f64 = parts[1]
                .trim()
                .parse()
                .map_err(|_| RotorError::InvalidProfile(format!("bad re: {line}")))?;
            let im: f64 = parts[2]
                .trim()
                .parse()
                .map_err(|_| RotorError::InvalidProfile(format!("bad im: {line}")))?;
            values.push((k, C64::new(re, im)));
        }
        values.sort_by_key(|(k, _)| *k);
        for (expect, (k, _)) in values.iter().enumerate() {
            if *k != expect {
                return Err(RotorError::InvalidProfile(format!(
                    "profile csv indices not contiguous at {k}"
                )));
            }
        }
        AmplitudeProfile::custom(order, values.into_iter().map(|(_, v)| v).collect(), "csv import")
    }
}

/// Order-N rotation code on the Fock grid {kN : k >= k0}.
#[derive(Debug, Clone)]
pub struct RotationCode {
    order: u32,
    offset: u32,
    profile: AmplitudeProfile,
    dim: Dim,
}

/// The four codewords, all unit norm.
#[derive(Debug, Clone)]
pub struct Codewords {
    pub zero: Ket,
    pub one: Ket,
    pub plus: Ket,
    pub minus: Ket,
}

impl RotationCode {
    /// Validates that the profile support plus a 2N guard band fits under the
    /// truncation: gain errors up to N and the stabilizer's 2N shift must not
    /// clip.
    pub fn new(order: u32, offset: u32, profile: AmplitudeProfile, dim: Dim) -> Result<Self> {
        if order == 0 {
            return Err(RotorError::InvalidProfile("order must be >= 1".into()));
        }
        if profile.order() != order {
            return Err(RotorError::InvalidProfile(format!(
                "profile order {} != code order {order}",
                profile.order()
            )));
        }
        let n = order as usize;
        let top_slot = offset as usize + profile.grid_points() - 1;
        let top_level = top_slot * n;
        let guard = 2 * n;
        if top_level + guard >= dim.get() {
            return Err(RotorError::ProfileExceedsDim(format!(
                "top grid level {top_level} + guard {guard} >= dimension {}",
                dim.get()
            )));
        }
        Ok(RotationCode {
            order,
            offset,
            profile,
            dim,
        })
    }

    /// Ideal code helper with automatic dimension sizing.
    pub fn ideal(order: u32, grid_points: usize, offset: u32) -> Result<Self> {
        let n = order as usize;
        let top = (offset as usize + grid_points - 1) * n;
        let dim = Dim::new(top + 2 * n + 2)?;
        RotationCode::new(order, offset, AmplitudeProfile::ideal(order, grid_points)?, dim)
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn offset(&self) -> u32 {
        self.offset
    }

    pub fn profile(&self) -> &AmplitudeProfile {
        &self.profile
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    /// Absolute Fock level of grid slot t (relative to the offset).
    pub fn level(&self, t: usize) -> usize {
        (self.offset as usize + t) * self.order as usize
    }

    /// Build |0_L>, |1_L>, |+_L>, |-_L>, each unit norm.
    pub fn codewords(&self) -> Result<Codewords> {
        let d = self.dim;
        let mut zero = Ket::zeros(d);
        let mut one = Ket::zeros(d);
        for (t, f) in self.profile.values().iter().enumerate() {
            let level = self.level(t);
            if t % 2 == 0 {
                zero.amplitudes_mut()[level] = *f;
            } else {
                one.amplitudes_mut()[level] = *f;
            }
        }
        let zero = zero.normalized().map_err(|_| {
            RotorError::InvalidProfile("zero codeword has no support".into())
        })?;
        let one = one.normalized().map_err(|_| {
            RotorError::InvalidProfile("one codeword has no support".into())
        })?;
        let half = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let plus = zero.add(&one).scale(half);
        let minus = zero.sub(&one).scale(half);
        Ok(Codewords {
            zero,
            one,
            plus,
            minus,
        })
    }

    /// alpha |+_L> + beta |-_L>
    pub fn logical_state(&self, alpha: C64, beta: C64) -> Result<Ket> {
        let cw = self.codewords()?;
        cw.plus.scale(alpha).add(&cw.minus.scale(beta)).normalized()
    }

    /// Codespace projector |0><0| + |1><1|.
    pub fn codespace_projector(&self) -> Result<Operator> {
        let cw = self.codewords()?;
        let d = self.dim.get();
        let mut p = Operator::zeros(self.dim, "P_L");
        for r in 0..d {
            for c in 0..d {
                let v = cw.zero.amplitudes()[r] * cw.zero.amplitudes()[c].conj()
                    + cw.one.amplitudes()[r] * cw.one.amplitudes()[c].conj();
                if v != C64::new(0.0, 0.0) {
                    p.set(r, c, v);
                }
            }
        }
        Ok(p)
    }

    /// Normalized grid weights |f_{kN}|^2 at absolute grid index k0 + t.
    pub fn grid_weights(&self) -> Vec<(usize, f64)> {
        let total: f64 = self.profile.values().iter().map(|f| f.norm_sqr()).sum();
        self.profile
            .values()
            .iter()
            .enumerate()
            .map(|(t, f)| (self.offset as usize + t, f.norm_sqr() / total))
            .collect()
    }

    /// The codespace expectation <e^{i (phi N + pi) n-hat}> evaluated over the
    /// grid-index distribution: sum_m w_m e^{i(phi N + pi) m} with m the
    /// absolute grid index. Zero exactly when the one-shift KL sum cancels.
    pub fn phase_expectation(&self, phi: f64) -> C64 {
        let x = phi * self.order as f64 + PI;
        self.grid_weights()
            .iter()
            .map(|(m, w)| C64::from_polar(*w, x * *m as f64))
            .sum()
    }
}

fn poisson_tail(mean: f64, through: usize) -> f64 {
    // 1 - sum_{n<=through} e^-mean mean^n / n!, accumulated in log space
    let mut term = (-mean).exp();
    let mut cum = term;
    for n in 1..=through {
        term *= mean / n as f64;
        cum += term;
    }
    (1.0 - cum).max(0.0)
}
