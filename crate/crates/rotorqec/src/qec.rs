//! Explicit error correction: syndrome extraction, channel-prior-aware
//! estimators, the recovery operator, the direct and teleportation schemes,
//! and deterministic seeded Monte Carlo sweeps.
//!
//! Syndromes are unit-complex eigenphases: lambda_Z = e^{2 pi i m / N} from
//! the number stabilizer and lambda_X = e^{2 i N theta} from the phase
//! stabilizer. Estimators resolve the mod-N (shift) and mod-pi/N (phase)
//! ambiguities using the channel prior, and the recovery is the basis error
//! E_{2N - m_est}(-theta_est), which also undoes the 2N loss introduced by
//! applying the phase stabilizer.

use crate::codes::RotationCode;
use crate::error_basis::{make_error, ErrorLabel};
use crate::fock::{Dim, Ket, MultiKet, Operator};
use crate::gates::{make_gate, GateSpec};
use crate::ratio::{phase_pi, Ratio};
use crate::{heaviside, wrap_angle, Result, RotorError};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Unit-complex stabilizer eigenphases with per-stabilizer trustworthiness
/// ("eigness" = how close the state is to an eigenstate, in [0, 1]).
#[derive(Debug, Clone, Copy)]
pub struct Syndrome {
    pub lambda_z: C64,
    pub lambda_x: C64,
    pub eigness_z: f64,
    pub eigness_x: f64,
}

/// Channel-prior kinds steering the shift estimator's branch choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PriorKind {
    GainOnly,
    LossOnly,
    Symmetric,
    /// Approximate phase code: any branch with m_est - 2N >= -k0 N works.
    PhaseCodeAny,
}

impl PriorKind {
    pub fn name(&self) -> &'static str {
        match self {
            PriorKind::GainOnly => "gain",
            PriorKind::LossOnly => "loss",
            PriorKind::Symmetric => "symmetric",
            PriorKind::PhaseCodeAny => "any",
        }
    }
}

/// Channel prior with optional physical rates for Monte Carlo sampling:
/// |k| ~ Poisson(loss_rate), theta ~ wrapped Normal(0, dephasing).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChannelPrior {
    pub kind: PriorKind,
    pub loss_rate: f64,
    pub dephasing: f64,
}

impl ChannelPrior {
    pub fn new(kind: PriorKind, loss_rate: f64, dephasing: f64) -> Result<Self> {
        if loss_rate < 0.0 || dephasing < 0.0 {
            return Err(RotorError::Config("rates must be non-negative".into()));
        }
        Ok(ChannelPrior {
            kind,
            loss_rate,
            dephasing,
        })
    }

    pub fn symmetric(loss_rate: f64, dephasing: f64) -> Self {
        ChannelPrior::new(PriorKind::Symmetric, loss_rate, dephasing).unwrap()
    }

    /// Mutually correctable shift set for an order-N code under this prior
    /// (N integers, none equivalent mod N, arranged per the channel bias).
    pub fn correctable_shifts(&self, order: u32) -> Vec<i64> {
        let n = order as i64;
        match self.kind {
            PriorKind::GainOnly => (0..n).collect(),
            PriorKind::LossOnly => (-(n - 1)..=0).collect(),
            // integers in (-N/2, N/2], matching the Arg branch
            PriorKind::Symmetric | PriorKind::PhaseCodeAny => {
                ((-n + 2).div_euclid(2)..=n.div_euclid(2)).collect()
            }
        }
    }
}

/// Shift/phase recovery choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryPlan {
    pub m_est: i64,
    pub theta_est: f64,
}

impl RecoveryPlan {
    /// The offset constraint for approximate phase codes:
    /// m_est - 2N >= -k0 N.
    pub fn satisfies_offset_constraint(&self, order: u32, offset: u32) -> bool {
        self.m_est - 2 * order as i64 >= -(offset as i64) * order as i64
    }
}

/// A corrupted state with its analytic global phase e^{i theta m Theta(-m)}
/// bookkept separately (fidelities are phase-insensitive).
#[derive(Debug, Clone)]
pub struct CorruptedState {
    pub state: Ket,
    pub analytic_phase: C64,
}

/// Normalized E_label |psi> for a logical state of the code.
pub fn corrupt(code: &RotationCode, label: &ErrorLabel, psi: &Ket) -> Result<CorruptedState> {
    let e = make_error(label, code.dim())?;
    let raw = e.apply(psi);
    if raw.norm() < 1e-12 {
        return Err(RotorError::InformationDestroyed(format!(
            "{label} annihilates the state"
        )));
    }
    let m = label.k();
    let analytic_phase = C64::from_polar(1.0, label.theta() * m as f64 * heaviside(-m));
    Ok(CorruptedState {
        state: raw.normalized()?,
        analytic_phase,
    })
}

/// Arg with branch (-pi, pi].
fn arg_branch(z: C64) -> f64 {
    let a = z.arg();
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Read both stabilizer eigenphases from expectation values.
pub fn extract_syndrome(code: &RotationCode, state: &Ket) -> Result<Syndrome> {
    let d = code.dim();
    let sz = make_gate(&GateSpec::stab_z(code.order()), d)?;
    let sx = make_gate(&GateSpec::stab_x(code.order()), d)?;
    let norm_sq = state.norm().powi(2);

    let sz_state = sz.apply(state);
    let z_exp = state.inner(&sz_state);
    let eigness_z = if norm_sq > 0.0 { z_exp.norm() / norm_sq } else { 0.0 };
    let lambda_z = if z_exp.norm() > 1e-14 {
        z_exp / z_exp.norm()
    } else {
        C64::new(1.0, 0.0)
    };

    let sx_state = sx.apply(state);
    let x_exp = state.inner(&sx_state);
    let denom = state.norm() * sx_state.norm();
    let eigness_x = if denom > 1e-14 { x_exp.norm() / denom } else { 0.0 };
    let lambda_x = if x_exp.norm() > 1e-14 {
        x_exp / x_exp.norm()
    } else {
        C64::new(1.0, 0.0)
    };

    Ok(Syndrome {
        lambda_z,
        lambda_x,
        eigness_z,
        eigness_x,
    })
}

/// Estimate the shift m from lambda_Z: the naive estimator
/// m-bar = (N / 2 pi) Arg(lambda_Z) is accurate only mod N; the prior picks
/// the branch.
pub fn estimate_shift(lambda_z: C64, prior: &ChannelPrior, order: u32, offset: u32) -> i64 {
    let n = order as i64;
    let m_bar = order as f64 * arg_branch(lambda_z) / (2.0 * PI);
    let rounded = m_bar.round() as i64;
    let residue = rounded.rem_euclid(n); // in [0, N)
    match prior.kind {
        PriorKind::GainOnly => residue,
        PriorKind::LossOnly => {
            if residue == 0 {
                0
            } else {
                residue - n
            }
        }
        PriorKind::Symmetric => {
            // representative in (-N/2, N/2]
            if 2 * residue > n {
                residue - n
            } else {
                residue
            }
        }
        PriorKind::PhaseCodeAny => {
            // smallest m_est with m_est - 2N >= -k0 N
            let base = (2 - offset as i64) * n;
            base + (residue - base).rem_euclid(n)
        }
    }
}

/// Estimate the rotation angle theta from lambda_X. The naive estimator
/// theta-bar = Arg(lambda_X) / 2N is accurate mod pi/N; of the two
/// candidates {theta-bar, theta-bar - pi/N} the one minimizing |theta_est|
/// is returned (the decreasing-probability rule, applied under every prior).
pub fn estimate_phase(lambda_x: C64, _prior: &ChannelPrior, order: u32) -> f64 {
    let n = order as f64;
    let theta_bar = arg_branch(lambda_x) / (2.0 * n);
    let alt = theta_bar - PI / n;
    if alt.abs() < theta_bar.abs() {
        alt
    } else {
        theta_bar
    }
}

/// The recovery operator R = E_{2N - m_est}(-theta_est).
pub fn make_recovery(plan: &RecoveryPlan, order: u32, d: Dim) -> Result<Operator> {
    let shift = 2 * order as i64 - plan.m_est;
    make_error(&ErrorLabel::new(shift, -plan.theta_est), d)
}

/// Outcome of one direct-scheme run.
#[derive(Debug, Clone)]
pub struct DirectOutcome {
    pub fidelity: f64,
    pub syndrome: Syndrome,
    pub plan: RecoveryPlan,
}

/// Default generic logical amplitudes used when no state is specified.
pub fn default_logical_amplitudes() -> (C64, C64) {
    (C64::new(0.6, 0.0), C64::from_polar(0.8, PI / 5.0))
}

/// Direct stabilizer scheme: corrupt, read both syndromes, apply both
/// stabilizers as operators (the phase stabilizer performs its 2N
/// down-shift), estimate, recover, and report |<psi|psi_out>|^2.
pub fn run_direct(
    code: &RotationCode,
    label: &ErrorLabel,
    prior: &ChannelPrior,
) -> Result<DirectOutcome> {
    let (alpha, beta) = default_logical_amplitudes();
    run_direct_with_state(code, label, prior, alpha, beta)
}

pub fn run_direct_with_state(
    code: &RotationCode,
    label: &ErrorLabel,
    prior: &ChannelPrior,
    alpha: C64,
    beta: C64,
) -> Result<DirectOutcome> {
    let d = code.dim();
    let psi = code.logical_state(alpha, beta)?;
    let corrupted = corrupt(code, label, &psi)?;
    let syndrome = extract_syndrome(code, &corrupted.state)?;
    let plan = RecoveryPlan {
        m_est: estimate_shift(syndrome.lambda_z, prior, code.order(), code.offset()),
        theta_est: estimate_phase(syndrome.lambda_x, prior, code.order()),
    };
    let sz = make_gate(&GateSpec::stab_z(code.order()), d)?;
    let sx = make_gate(&GateSpec::stab_x(code.order()), d)?;
    let after_sz = sz.apply(&corrupted.state);
    let after_sx = sx.apply(&after_sz);
    if after_sx.norm() < 1e-12 {
        return Err(RotorError::InformationDestroyed(
            "phase stabilizer annihilated the state (support below 2N)".into(),
        ));
    }
    let after_sx = after_sx.normalized()?;
    let recovery = make_recovery(&plan, code.order(), d)?;
    let out = recovery.apply(&after_sx);
    if out.norm() < 1e-12 {
        return Err(RotorError::InformationDestroyed(
            "recovery annihilated the state".into(),
        ));
    }
    let out = out.normalized()?;
    let fidelity = psi.inner(&out).norm_sqr();
    Ok(DirectOutcome {
        fidelity,
        syndrome,
        plan,
    })
}

// ---------------------------------------------------------------------------
// Measurement models
// ---------------------------------------------------------------------------

/// Distribution of a modular-number measurement (n mod N) on one mode.
pub fn modular_number_distribution(state: &MultiKet, mode: usize, order: u32) -> Vec<f64> {
    let n = order as usize;
    let dims = state.dims().to_vec();
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len() - 1).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let total_norm = state.norm().powi(2);
    let mut dist = vec![0.0f64; n];
    for (idx, amp) in state.amplitudes().iter().enumerate() {
        let nm = (idx / strides[mode]) % dims[mode];
        dist[nm % n] += amp.norm_sqr();
    }
    if total_norm > 0.0 {
        for p in dist.iter_mut() {
            *p /= total_norm;
        }
    }
    dist
}

/// Projective measurement of n mod N on one mode (nondestructive): samples a
/// sector by the Born rule, zeroes the rest, renormalizes.
pub fn measure_modular_number(
    state: &MultiKet,
    mode: usize,
    order: u32,
    rng: &mut impl Rng,
) -> Result<(usize, MultiKet, f64)> {
    let dist = modular_number_distribution(state, mode, order);
    let sector = sample_index(&dist, rng);
    let prob = dist[sector];
    let n = order as usize;
    let dims = state.dims().to_vec();
    let mode_dim = dims[mode];
    let proj = Operator::diagonal(Dim::new(mode_dim)?, "sector", |lvl| {
        if lvl % n == sector {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let mut post = state.clone();
    post.apply_on_mode(&proj, mode);
    post.normalize_in_place()?;
    Ok((sector, post, prob))
}

/// Canonical-phase POVM grid over [-pi, pi): G uniform points, projectors
/// |phi_j><phi_j| / G with |phi_j> the truncated London state. Resolves the
/// identity exactly once G >= mode dimension.
pub fn phase_grid(total_points: usize) -> Vec<f64> {
    (0..total_points)
        .map(|j| -PI + 2.0 * PI * j as f64 / total_points as f64)
        .collect()
}

/// Fine-grained phase distribution on one mode (probabilities over the grid).
pub fn phase_distribution(state: &MultiKet, mode: usize, grid: &[f64]) -> Vec<f64> {
    let g = grid.len() as f64;
    let norm_sq = state.norm().powi(2);
    grid.iter()
        .map(|&phi| {
            let bra: Vec<C64> = (0..state.dims()[mode])
                .map(|n| C64::from_polar(1.0, phi * n as f64))
                .collect();
            let reduced = state.project_mode(mode, &bra);
            reduced.norm().powi(2) / g / norm_sq
        })
        .collect()
}

/// Modular phase distribution: outcomes reduced into [-pi/N, pi/N), with the
/// probabilities of the N fine preimages summed per window point.
pub fn modular_phase_distribution(
    state: &MultiKet,
    mode: usize,
    order: u32,
    grid_per_window: usize,
) -> Vec<(f64, f64)> {
    let total = phase_grid_size(state.dims()[mode], order, grid_per_window);
    let grid = phase_grid(total);
    let fine = phase_distribution(state, mode, &grid);
    let window = total / (order as usize);
    let mut out: Vec<(f64, f64)> = (0..window)
        .map(|j| {
            let phi = reduce_modular(grid[j], order);
            (phi, 0.0)
        })
        .collect();
    for (j, p) in fine.iter().enumerate() {
        out[j % window].1 += p;
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

fn reduce_modular(phi: f64, order: u32) -> f64 {
    wrap_angle(phi * order as f64) / order as f64
}

/// Total grid size: grid_per_window points per pi/N half-window across the
/// 2N half-windows of [-pi, pi), grown to cover the mode dimension (POVM
/// completeness needs G >= d), staying a multiple of 2N.
fn phase_grid_size(mode_dim: usize, order: u32, grid_per_window: usize) -> usize {
    let n = order as usize;
    let mut total = grid_per_window * 2 * n;
    while total < mode_dim {
        total += 2 * n;
    }
    total
}

/// Destructive modular-phase measurement on one mode: samples a fine
/// canonical-phase outcome, reduces it into [-pi/N, pi/N), and removes the
/// mode. For states supported on a single mod-N Fock sector the N fine
/// preimages give the same post-state up to a global phase, so the fine
/// projection is exact; the returned probability is the modular outcome's
/// (preimages summed).
pub fn measure_modular_phase(
    state: &MultiKet,
    mode: usize,
    order: u32,
    grid_per_window: usize,
    rng: &mut impl Rng,
) -> Result<(f64, MultiKet, f64)> {
    let total = phase_grid_size(state.dims()[mode], order, grid_per_window);
    let grid = phase_grid(total);
    let fine = phase_distribution(state, mode, &grid);
    let j = sample_index(&fine, rng);
    let window = total / order as usize;
    let modular_prob: f64 = fine.iter().skip(j % window).step_by(window).sum();
    let phi_hat = reduce_modular(grid[j], order);
    let bra: Vec<C64> = (0..state.dims()[mode])
        .map(|n| C64::from_polar(1.0, grid[j] * n as f64))
        .collect();
    let mut post = state.project_mode(mode, &bra);
    post.normalize_in_place()?;
    Ok((phi_hat, post, modular_prob))
}

fn sample_index(dist: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = dist.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    dist.len() - 1
}

// ---------------------------------------------------------------------------
// Teleportation scheme
// ---------------------------------------------------------------------------

/// Outcome of one teleportation-based correction run.
#[derive(Debug, Clone)]
pub struct TeleportOutcome {
    pub fidelity: f64,
    pub s1: u8,
    pub s2: u8,
    pub m_est: i64,
    pub theta_est: f64,
    pub phi1: f64,
    pub phi2: f64,
}

/// Teleportation-based correction: two encoded plus states are consumed
/// through two CROT gates; both destructive phase measurements yield the
/// syndromes (the second is effectively a modular number measurement), and
/// the teleported output needs only the logical frame correction
/// X-bar^{s2} Z-bar^{s1} -- the physical error never reaches mode 3.
pub fn run_teleport(
    code: &RotationCode,
    label: &ErrorLabel,
    prior: &ChannelPrior,
    grid_per_window: usize,
    rng: &mut impl Rng,
) -> Result<TeleportOutcome> {
    let (alpha, beta) = default_logical_amplitudes();
    run_teleport_with_state(code, label, prior, grid_per_window, rng, alpha, beta)
}

/// Input state with the error applied, entangled with the two plus-state
/// ancillas through both CROT gates.
fn teleport_prepared_state(code: &RotationCode, label: &ErrorLabel, alpha: C64, beta: C64) -> Result<(Ket, MultiKet)> {
    let n_i = code.order() as i128;
    let d = code.dim();
    let cw = code.codewords()?;
    let psi = code.logical_state(alpha, beta)?;
    let mut state = MultiKet::product(&[&psi, &cw.plus, &cw.plus])?;
    let err = make_error(label, d)?;
    state.apply_on_mode(&err, 0);
    if state.norm() < 1e-12 {
        return Err(RotorError::InformationDestroyed(format!(
            "{label} annihilates the input"
        )));
    }
    state.normalize_in_place()?;
    // CROT = exp[i pi n (x) n / N^2] between modes (0,1) then (1,2)
    let crot_phase = |na: usize, nb: usize| phase_pi(&Ratio::new((na * nb) as i128, n_i * n_i));
    state.apply_two_mode_phase(0, 1, crot_phase);
    state.apply_two_mode_phase(1, 2, crot_phase);
    Ok((psi, state))
}

/// (s1, theta_est) from the first phase outcome: peaks at theta mod 2pi/N
/// carry s1 = 0, peaks offset by pi/N carry s1 = 1.
fn decode_phase_outcome(phi1: f64, order: u32) -> (u8, f64) {
    let rho1 = wrap_angle(phi1 * order as f64); // in [-pi, pi)
    if rho1.abs() <= PI / 2.0 {
        (0u8, rho1 / order as f64)
    } else {
        (1u8, (rho1 - PI * rho1.signum()) / order as f64)
    }
}

/// (s2, m_est) from the second phase outcome: peaks sit at
/// phi2 = pi (m + s2 N) / N^2 mod 2pi/N, so the nearest integer of
/// phi2 N^2 / pi is m + s2 N mod 2N and the prior splits it.
fn decode_number_outcome(
    phi2: f64,
    prior: &ChannelPrior,
    order: u32,
    offset: u32,
) -> (u8, i64) {
    let x = phi2 * (order as f64).powi(2) / PI;
    let p_int = x.round() as i64;
    let residue_phase = C64::from_polar(1.0, 2.0 * PI * p_int as f64 / order as f64);
    let m_est = estimate_shift(residue_phase, prior, order, offset);
    let s2 = ((p_int - m_est).div_euclid(order as i64)).rem_euclid(2) as u8;
    (s2, m_est)
}

/// Frame-correct the single remaining mode and return the fidelity against
/// the ideal teleported state. The exact logical X is the bin swap aligned
/// to this code's grid origin.
fn correct_and_score(
    mut out: MultiKet,
    s1: u8,
    s2: u8,
    code: &RotationCode,
    psi: &Ket,
) -> Result<f64> {
    let d = code.dim();
    if s2 == 1 {
        let x_bar = crate::gates::make_bin_swap(code.order(), code.offset(), d);
        out.apply_on_mode(&x_bar, 0);
    }
    if s1 == 1 {
        let z_bar = make_gate(&GateSpec::z(code.order()), d)?;
        out.apply_on_mode(&z_bar, 0);
    }
    out.normalize_in_place()?;
    let out_ket = out.into_single()?;
    Ok(psi.inner(&out_ket).norm_sqr())
}

#[allow(clippy::too_many_arguments)]
pub fn run_teleport_with_state(
    code: &RotationCode,
    label: &ErrorLabel,
    prior: &ChannelPrior,
    grid_per_window: usize,
    rng: &mut impl Rng,
    alpha: C64,
    beta: C64,
) -> Result<TeleportOutcome> {
    let order = code.order();
    let (psi, state) = teleport_prepared_state(code, label, alpha, beta)?;

    let (phi1, state, _p1) = measure_modular_phase(&state, 0, order, grid_per_window, rng)?;
    let (s1, theta_est) = decode_phase_outcome(phi1, order);

    let (phi2, state, _p2) = measure_modular_phase(&state, 0, order, grid_per_window, rng)?;
    let (s2, m_est) = decode_number_outcome(phi2, prior, order, code.offset());

    let fidelity = correct_and_score(state, s1, s2, code, &psi)?;
    Ok(TeleportOutcome {
        fidelity,
        s1,
        s2,
        m_est,
        theta_est,
        phi1,
        phi2,
    })
}

/// Deterministic variant: enumerate the full two-measurement outcome tree
/// and return the exact expected fidelity (no sampling noise). Branches with
/// probability below `cutoff` are skipped and accounted as zero fidelity.
pub fn teleport_expected_fidelity(
    code: &RotationCode,
    label: &ErrorLabel,
    prior: &ChannelPrior,
    grid_per_window: usize,
    cutoff: f64,
) -> Result<f64> {
    let order = code.order();
    let (psi, state) = teleport_prepared_state(
        code,
        label,
        default_logical_amplitudes().0,
        default_logical_amplitudes().1,
    )?;
    let total1 = phase_grid_size(state.dims()[0], order, grid_per_window);
    let grid1 = phase_grid(total1);
    let dist1 = phase_distribution(&state, 0, &grid1);
    let mut expected = 0.0f64;
    for (j1, &p1) in dist1.iter().enumerate() {
        if p1 < cutoff {
            continue;
        }
        let bra1: Vec<C64> = (0..state.dims()[0])
            .map(|n| C64::from_polar(1.0, grid1[j1] * n as f64))
            .collect();
        let mut mid = state.project_mode(0, &bra1);
        mid.normalize_in_place()?;
        let (s1, _theta) = decode_phase_outcome(reduce_modular(grid1[j1], order), order);

        let total2 = phase_grid_size(mid.dims()[0], order, grid_per_window);
        let grid2 = phase_grid(total2);
        let dist2 = phase_distribution(&mid, 0, &grid2);
        for (j2, &p2) in dist2.iter().enumerate() {
            if p1 * p2 < cutoff {
                continue;
            }
            let bra2: Vec<C64> = (0..mid.dims()[0])
                .map(|n| C64::from_polar(1.0, grid2[j2] * n as f64))
                .collect();
            let mut post = mid.project_mode(0, &bra2);
            post.normalize_in_place()?;
            let (s2, _m) =
                decode_number_outcome(reduce_modular(grid2[j2], order), prior, order, code.offset());
            let fid = correct_and_score(post, s1, s2, code, &psi)?;
            expected += p1 * p2 * fid;
        }
    }
    Ok(expected)
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

/// Correction scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    Direct,
    Teleport,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Direct => "direct",
            Scheme::Teleport => "teleport",
        }
    }
}

/// One Monte Carlo trial.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub k: i64,
    pub theta: f64,
    pub lambda_z_arg: f64,
    pub lambda_x_arg: f64,
    pub m_est: i64,
    pub theta_est: f64,
    pub fidelity: f64,
    pub destroyed: bool,
}

/// Aggregate statistics over all trials. A trial counts as a logical error
/// when its fidelity falls below [`LOGICAL_ERROR_FIDELITY`].
#[derive(Debug, Clone, Serialize)]
pub struct McSummary {
    pub scheme: Scheme,
    pub prior: ChannelPrior,
    pub trials: u64,
    pub seed: u64,
    pub mean_fidelity: Option<f64>,
    pub min_fidelity: Option<f64>,
    pub max_fidelity: Option<f64>,
    pub median_fidelity: Option<f64>,
    pub logical_error_rate: Option<f64>,
    pub logical_error_threshold: f64,
    pub destroyed_count: u64,
}

pub const LOGICAL_ERROR_FIDELITY: f64 = 0.99;

/// Deterministic seeded Monte Carlo: per-trial RNG is a ChaCha8 stream keyed
/// by (seed, trial index), so serial and parallel runs agree bit-for-bit.
pub fn monte_carlo(
    code: &RotationCode,
    prior: &ChannelPrior,
    scheme: Scheme,
    trials: u64,
    seed: u64,
) -> Result<(Vec<TrialRecord>, McSummary)> {
    let records: Result<Vec<TrialRecord>> = (0..trials)
        .into_par_iter()
        .map(|trial| run_trial(code, prior, scheme, seed, trial))
        .collect();
    let records = records?;
    let summary = summarize(&records, scheme, prior, trials, seed);
    Ok((records, summary))
}

fn run_trial(
    code: &RotationCode,
    prior: &ChannelPrior,
    scheme: Scheme,
    seed: u64,
    trial: u64,
) -> Result<TrialRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial.wrapping_add(1));
    let label = sample_label(prior, &mut rng);
    match scheme {
        Scheme::Direct => match run_direct(code, &label, prior) {
            Ok(out) => Ok(TrialRecord {
                trial,
                k: label.k(),
                theta: label.theta(),
                lambda_z_arg: arg_branch(out.syndrome.lambda_z),
                lambda_x_arg: arg_branch(out.syndrome.lambda_x),
                m_est: out.plan.m_est,
                theta_est: out.plan.theta_est,
                fidelity: out.fidelity,
                destroyed: false,
            }),
            Err(RotorError::InformationDestroyed(_)) => Ok(destroyed_record(trial, &label)),
            Err(e) => Err(e),
        },
        Scheme::Teleport => match run_teleport(code, &label, prior, 64, &mut rng) {
            Ok(out) => Ok(TrialRecord {
                trial,
                k: label.k(),
                theta: label.theta(),
                lambda_z_arg: wrap_angle(2.0 * PI * out.m_est as f64 / code.order() as f64),
                lambda_x_arg: wrap_angle(2.0 * code.order() as f64 * out.theta_est),
                m_est: out.m_est,
                theta_est: out.theta_est,
                fidelity: out.fidelity,
                destroyed: false,
            }),
            Err(RotorError::InformationDestroyed(_)) => Ok(destroyed_record(trial, &label)),
            Err(e) => Err(e),
        },
    }
}

fn destroyed_record(trial: u64, label: &ErrorLabel) -> TrialRecord {
    TrialRecord {
        trial,
        k: label.k(),
        theta: label.theta(),
        lambda_z_arg: 0.0,
        lambda_x_arg: 0.0,
        m_est: 0,
        theta_est: 0.0,
        fidelity: 0.0,
        destroyed: true,
    }
}

/// Sample an error label from the prior: |k| ~ Poisson(loss_rate) with the
/// sign chosen by the prior kind, theta ~ Normal(0, dephasing) wrapped.
pub fn sample_label(prior: &ChannelPrior, rng: &mut impl Rng) -> ErrorLabel {
    let magnitude = sample_poisson(prior.loss_rate, rng);
    let k = match prior.kind {
        PriorKind::GainOnly => magnitude,
        PriorKind::LossOnly => -magnitude,
        PriorKind::Symmetric | PriorKind::PhaseCodeAny => {
            if magnitude == 0 {
                0
            } else if rng.random::<f64>() < 0.5 {
                -magnitude
            } else {
                magnitude
            }
        }
    };
    let theta = if prior.dephasing > 0.0 {
        wrap_angle(sample_normal(rng) * prior.dephasing)
    } else {
        0.0
    };
    ErrorLabel::new(k, theta)
}

fn sample_poisson(rate: f64, rng: &mut impl Rng) -> i64 {
    if rate <= 0.0 {
        return 0;
    }
    // Knuth's method; desk-scale rates
    let l = (-rate).exp();
    let mut k = 0i64;
    let mut p = 1.0f64;
    loop {
        p *= rng.random::<f64>();
        if p <= l {
            return k;
        }
        k += 1;
    }
}

fn sample_normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

fn summarize(
    records: &[TrialRecord],
    scheme: Scheme,
    prior: &ChannelPrior,
    trials: u64,
    seed: u64,
) -> McSummary {
    if records.is_empty() {
        return McSummary {
            scheme,
            prior: *prior,
            trials,
            seed,
            mean_fidelity: None,
            min_fidelity: None,
            max_fidelity: None,
            median_fidelity: None,
            logical_error_rate: None,
            logical_error_threshold: LOGICAL_ERROR_FIDELITY,
            destroyed_count: 0,
        };
    }
    let mut fids: Vec<f64> = records.iter().map(|r| r.fidelity).collect();
    fids.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mean = fids.iter().sum::<f64>() / fids.len() as f64;
    let errors = records
        .iter()
        .filter(|r| r.fidelity < LOGICAL_ERROR_FIDELITY)
        .count();
    McSummary {
        scheme,
        prior: *prior,
        trials,
        seed,
        mean_fidelity: Some(mean),
        min_fidelity: Some(fids[0]),
        max_fidelity: Some(fids[fids.len() - 1]),
        median_fidelity: Some(fids[fids.len() / 2]),
        logical_error_rate: Some(errors as f64 / records.len() as f64),
        logical_error_threshold: LOGICAL_ERROR_FIDELITY,
        destroyed_count: records.iter().filter(|r| r.destroyed).count() as u64,
    }
}

/// Per-trial CSV with a versioned header comment.
pub fn trials_to_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from(
        "# rotorqec trials csv v1\ntrial,k,theta,lambda_z_arg,lambda_x_arg,m_est,theta_est,fidelity,destroyed\n",
    );
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.trial,
            r.k,
            r.theta,
            r.lambda_z_arg,
            r.lambda_x_arg,
            r.m_est,
            r.theta_est,
            r.fidelity,
            r.destroyed
        ));
    }
    out
}
