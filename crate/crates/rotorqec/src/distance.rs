//! Knill-Laflamme blocks for error pairs, detectability maps over (k, theta),
//! and the number-phase distance trade-off d_n * d_theta = pi.
//!
//! A pair of basis errors is mutually detectable when the logical-basis
//! matrix of P_L E_a^dag E_b P_L is proportional to the identity. For
//! rotation codes the block vanishes identically when the shifts differ
//! off the mod-N lattice; shifts differing by exactly N produce the
//! undetectable logical-X-type block, and equal shifts reduce to the
//! codespace phase expectation.

use crate::codes::RotationCode;
use crate::error_basis::{make_error, ErrorLabel};
use crate::gates::{verify_logical_action, GateSpec};
use crate::{Result, RotorError};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Logical-basis 2x2 block of P_L E_a^dag E_b P_L with its best-fit
/// proportionality constant and the deviation from alpha * I.
#[derive(Debug, Clone)]
pub struct KLBlock {
    pub matrix: [C64; 4],
    pub alpha: C64,
    pub deviation: f64,
}

impl KLBlock {
    pub fn norm(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Compute the KL block for an error pair on a code. Entries are evaluated
/// as inner products of corrupted codewords, so no operator products are
/// materialized.
pub fn kl_block(code: &RotationCode, a: &ErrorLabel, b: &ErrorLabel) -> Result<KLBlock> {
    let d = code.dim();
    let cw = code.codewords()?;
    let ea = make_error(a, d)?;
    let eb = make_error(b, d)?;
    let a0 = ea.apply(&cw.zero);
    let a1 = ea.apply(&cw.one);
    let b0 = eb.apply(&cw.zero);
    let b1 = eb.apply(&cw.one);
    let matrix = [
        a0.inner(&b0),
        a0.inner(&b1),
        a1.inner(&b0),
        a1.inner(&b1),
    ];
    let alpha = (matrix[0] + matrix[3]) * C64::new(0.5, 0.0);
    let deviation = ((matrix[0] - alpha).norm_sqr()
        + matrix[1].norm_sqr()
        + matrix[2].norm_sqr()
        + (matrix[3] - alpha).norm_sqr())
    .sqrt();
    Ok(KLBlock {
        matrix,
        alpha,
        deviation,
    })
}

/// Max Hermiticity violation |alpha_ab - conj(alpha_ba)| over all same-shift
/// pairs in the given error set.
pub fn hermiticity_check(code: &RotationCode, errors: &[ErrorLabel]) -> Result<f64> {
    let mut worst = 0.0f64;
    for (i, a) in errors.iter().enumerate() {
        for b in errors.iter().skip(i) {
            if a.k() != b.k() {
                continue;
            }
            let ab = kl_block(code, a, b)?;
            let ba = kl_block(code, b, a)?;
            worst = worst.max((ab.alpha - ba.alpha.conj()).norm());
        }
    }
    Ok(worst)
}

/// Classification of a grid cell against the reference error (0, 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CellClass {
    /// KL-compatible: block proportional to the identity within tolerance.
    Compatible,
    /// Block is proportional to a logical unitary (clean logical action,
    /// undetectable as an error).
    Logical,
    /// On the window boundary (theta = +-pi/2N or k = +-N); excluded from
    /// correctable sets.
    Boundary,
    Incompatible,
}

/// One detectability-grid cell.
#[derive(Debug, Clone, Serialize)]
pub struct GridCell {
    pub k: i64,
    pub theta: f64,
    pub deviation: f64,
    pub block_norm: f64,
    pub class: CellClass,
}

/// Detectability map of basis errors against the reference (0, 0).
#[derive(Debug, Clone)]
pub struct DetectabilityGrid {
    pub order: u32,
    pub tol: f64,
    pub cells: Vec<GridCell>,
}

/// Residual of the best fit of `block` to c * U over logical unitaries
/// U in {X_L, Y_L, Z_L}, relative to the block norm.
fn logical_fit_residual(block: &KLBlock) -> f64 {
    let n = block.norm();
    if n < 1e-14 {
        return 1.0;
    }
    let x = [
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
    ];
    let y = [
        C64::new(0.0, 0.0),
        C64::new(0.0, -1.0),
        C64::new(0.0, 1.0),
        C64::new(0.0, 0.0),
    ];
    let z = [
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(-1.0, 0.0),
    ];
    let mut best = f64::INFINITY;
    for u in [x, y, z] {
        // optimal c = <U, B> / <U, U>
        let dot: C64 = u
            .iter()
            .zip(block.matrix.iter())
            .map(|(uu, bb)| uu.conj() * bb)
            .sum();
        let c = dot / C64::new(2.0, 0.0);
        let res: f64 = u
            .iter()
            .zip(block.matrix.iter())
            .map(|(uu, bb)| (bb - c * uu).norm_sqr())
            .sum::<f64>()
            .sqrt();
        best = best.min(res / n);
    }
    best
}

/// Evaluate the KL deviation of every (k, theta) cell against the reference
/// error (0, 0). The grid covers at least k in [-N, N] and
/// theta in [-pi/N, pi/N).
pub fn detectability_grid(
    code: &RotationCode,
    k_values: &[i64],
    theta_values: &[f64],
    tol: f64,
) -> Result<DetectabilityGrid> {
    let n = code.order() as i64;
    let reference = ErrorLabel::identity();
    let cells: Result<Vec<GridCell>> = k_values
        .par_iter()
        .flat_map(|&k| theta_values.par_iter().map(move |&theta| (k, theta)))
        .map(|(k, theta)| {
            let block = kl_block(code, &reference, &ErrorLabel::new(k, theta))?;
            let boundary_theta =
                (theta.abs() - PI / (2.0 * n as f64)).abs() < 1e-12;
            let boundary_k = k.abs() == n;
            let class = if boundary_theta || boundary_k {
                CellClass::Boundary
            } else if block.deviation < tol {
                CellClass::Compatible
            } else if logical_fit_residual(&block) < 1e-6 {
                CellClass::Logical
            } else {
                CellClass::Incompatible
            };
            Ok(GridCell {
                k,
                theta,
                deviation: block.deviation,
                block_norm: block.norm(),
                class,
            })
        })
        .collect();
    Ok(DetectabilityGrid {
        order: code.order(),
        tol,
        cells: cells?,
    })
}

/// Default grid: k in [-N, N], theta on a uniform grid of [-pi/N, pi/N).
pub fn default_grid_axes(order: u32, theta_points: usize) -> (Vec<i64>, Vec<f64>) {
    let n = order as i64;
    let ks = (-n..=n).collect();
    let w = PI / order as f64;
    let thetas = (0..theta_points)
        .map(|j| -w + 2.0 * w * j as f64 / theta_points as f64)
        .collect();
    (ks, thetas)
}

/// Grid CSV (heat-map table) with a versioned header comment.
pub fn grid_to_csv(grid: &DetectabilityGrid) -> String {
    let mut out = String::from("# rotorqec detectability grid v1\nk,theta,deviation,block_norm,class\n");
    for c in &grid.cells {
        out.push_str(&format!(
            "{},{},{:e},{:e},{:?}\n",
            c.k, c.theta, c.deviation, c.block_norm, c.class
        ));
    }
    out
}

/// One row of the number/phase trade-off table.
#[derive(Debug, Clone, Serialize)]
pub struct TradeoffRow {
    pub order: u32,
    pub grid_points: usize,
    pub d_n: i64,
    pub d_theta: f64,
    pub product: f64,
    pub deviation_from_pi: f64,
}

/// KL tolerance used when growing contiguous shift windows.
pub const TRADEOFF_KL_TOL: f64 = 1e-8;
/// Peak threshold on |phase_expectation| marking an undetectable phase
/// difference.
pub const PHASE_PEAK_THRESHOLD: f64 = 0.999;

/// d_n: size of the largest contiguous window of shifts within [-N, N] whose
/// pairs are all KL-compatible at theta = 0.
pub fn measure_shift_distance(code: &RotationCode) -> Result<i64> {
    let n = code.order() as i64;
    let mut best = 0i64;
    for start in -n..=n {
        let mut width = 0i64;
        'grow: for end in start..=n {
            // check the new member `end` against the existing window
            for j in start..end {
                let block = kl_block(
                    code,
                    &ErrorLabel::new(j, 0.0),
                    &ErrorLabel::new(end, 0.0),
                )?;
                if block.deviation > TRADEOFF_KL_TOL {
                    break 'grow;
                }
            }
            width = end - start + 1;
        }
        best = best.max(width);
    }
    Ok(best)
}

/// d_theta: the first positive phi on a pi/(64N) grid where
/// |phase_expectation| reaches the peak threshold (an undetectable phase
/// separation; exactly pi/N for ideal codes).
pub fn measure_phase_distance(code: &RotationCode, resolution_steps: usize) -> f64 {
    let n = code.order() as f64;
    let step = PI / (resolution_steps as f64 * n);
    let max_steps = (2.0 * PI / n / step).ceil() as usize;
    for j in 1..=max_steps {
        let phi = j as f64 * step;
        if code.phase_expectation(phi).norm() >= PHASE_PEAK_THRESHOLD {
            return phi;
        }
    }
    2.0 * PI / n
}

/// The (N, d_n, d_theta, product) table for ideal codes of the given orders,
/// at the reference pi/(64N) phase resolution.
pub fn verify_tradeoff(orders: &[u32], grid_points: usize) -> Result<Vec<TradeoffRow>> {
    orders
        .iter()
        .map(|&order| {
            let code = RotationCode::ideal(order, grid_points, 0)?;
            tradeoff_row(&code, grid_points, 64)
        })
        .collect()
}

/// Trade-off measurement for an arbitrary code. Approximate codes lose
/// detectability smoothly near pi/N, so resolving their sub-pi deficit needs
/// a finer phase grid than the ideal-code reference resolution.
pub fn tradeoff_row(
    code: &RotationCode,
    grid_points: usize,
    resolution_steps: usize,
) -> Result<TradeoffRow> {
    let d_n = measure_shift_distance(code)?;
    let d_theta = measure_phase_distance(code, resolution_steps);
    let product = d_n as f64 * d_theta;
    Ok(TradeoffRow {
        order: code.order(),
        grid_points,
        d_n,
        d_theta,
        product,
        deviation_from_pi: (product - PI).abs(),
    })
}

pub fn tradeoff_to_csv(rows: &[TradeoffRow]) -> String {
    let mut out =
        String::from("# rotorqec tradeoff table v1\nn,grid_points,d_n,d_theta,product,deviation_from_pi\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{:e}\n",
            r.order, r.grid_points, r.d_n, r.d_theta, r.product, r.deviation_from_pi
        ));
    }
    out
}

/// Report for the contrived code whose unnormalized amplitudes follow the
/// period-8 pattern 1, i, i, 1, -1, i, i, -1, ... For this code E_k and
/// E_{k+N} are mutually detectable, so the bare N-shift X_N cannot be a
/// logical operation.
#[derive(Debug, Clone)]
pub struct ContrivedReport {
    pub x_matrix_element: C64,
    pub n_shift_deviation: f64,
    pub n_shift_block_norm: f64,
    pub x_logical_deviation: f64,
}

/// The contrived-code amplitude pattern truncated at 8t + 1 grid points so
/// both parity classes of the KL sum complete whole periods.
pub fn contrived_profile_values(grid_points: usize) -> Vec<C64> {
    let pattern = [
        C64::new(1.0, 0.0),
        C64::new(0.0, 1.0),
        C64::new(0.0, 1.0),
        C64::new(1.0, 0.0),
        C64::new(-1.0, 0.0),
        C64::new(0.0, 1.0),
        C64::new(0.0, 1.0),
        C64::new(-1.0, 0.0),
    ];
    (0..grid_points).map(|t| pattern[t % 8]).collect()
}

pub fn contrived_code_check(order: u32) -> Result<ContrivedReport> {
    let grid_points = 17; // 2 periods + the closing point
    let values = contrived_profile_values(grid_points);
    let profile = crate::codes::AmplitudeProfile::custom(order, values, "contrived period-8")?;
    let n = order as usize;
    let dim = crate::fock::Dim::new((grid_points - 1) * n + 2 * n + 2)?;
    let code = RotationCode::new(order, 0, profile, dim)?;
    let cw = code.codewords()?;

    // <0_N| X_N |1_N>
    let x = crate::fock::make_sigma(-(order as i64), dim)?;
    let x_matrix_element = cw.zero.inner(&x.apply(&cw.one));

    let block = kl_block(
        &code,
        &ErrorLabel::identity(),
        &ErrorLabel::new(order as i64, 0.0),
    )?;

    let x_report = verify_logical_action(&GateSpec::x(order), &code)?;
    let x_logical_deviation = x_report.deviation.ok_or_else(|| {
        RotorError::InvalidGateSpec("X gate carries an expected logical action".into())
    })?;

    Ok(ContrivedReport {
        x_matrix_element,
        n_shift_deviation: block.deviation,
        n_shift_block_norm: block.norm(),
        x_logical_deviation,
    })
}
