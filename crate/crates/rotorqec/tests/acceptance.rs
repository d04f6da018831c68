//! Acceptance suite: every release-gating criterion as one test with a
//! printed pass line (run with `--nocapture` to see them; a failed assert
//! means the criterion is red).

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rotorqec::codes::RotationCode;
use rotorqec::distance::{kl_block, verify_tradeoff, contrived_code_check};
use rotorqec::error_basis::ErrorLabel;
use rotorqec::fock::Dim;
use rotorqec::gates::{appendix_b_polynomial, make_gate, GateSpec};
use rotorqec::propagation::{
    compare_qubit_restriction, run_sweep, verify_general_function, verify_linear_modification,
    QubitGate, SweepConfig, verify_qubit,
};
use rotorqec::qec::{
    monte_carlo, run_direct_with_state, teleport_expected_fidelity, trials_to_csv, ChannelPrior,
    PriorKind, Scheme,
};
use rotorqec::gates::GateKind;
use rotorqec::ratio::Ratio;
use std::f64::consts::PI;
use std::time::Instant;

#[test]
fn criterion_1_propagation_suite() {
    // every gate of the comparison table, N in {1,2,3,4}, k in [-3,3],
    // 8 theta samples, safe-subspace residual < 1e-9 at d = 48
    // (per-mode 16 / 12 for CROT / CCROT); runtime under two minutes
    let start = Instant::now();
    let cfg = SweepConfig::default();
    let rows = run_sweep(&cfg).expect("sweep must run");
    let tol = 1e-9;
    let worst = rows
        .iter()
        .max_by(|a, b| a.residual.partial_cmp(&b.residual).unwrap())
        .unwrap();
    assert!(
        worst.residual < tol,
        "worst cell {} N={} k={} theta={}: residual {:e}",
        worst.gate,
        worst.n,
        worst.k,
        worst.theta,
        worst.residual
    );
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 120.0,
        "sweep took {:.1}s (> 2 min)",
        elapsed.as_secs_f64()
    );
    println!(
        "criterion 1: PASS propagation sweep, {} cells, worst residual {:e} ({} at N={} k={} theta={:.3}), {:.1}s",
        rows.len(),
        worst.residual,
        worst.gate,
        worst.n,
        worst.k,
        worst.theta,
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_2_appendix_a_lemmas() {
    // both conjugation lemmas for 5 seeded random polynomials up to degree 4,
    // residual < 1e-10
    let d = Dim::new(40).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for poly_idx in 0..5 {
        // coefficients scaled so |f(n)| = O(pi) over the safe subspace
        let coeffs: Vec<f64> = (0..5)
            .map(|i| {
                let u: f64 = rng.random::<f64>() * 2.0 - 1.0;
                u * PI / (40.0f64).powi(i)
            })
            .collect();
        for k in [-3i64, -1, 0, 2, 3] {
            for theta in [0.0, 0.7, -1.9] {
                let label = ErrorLabel::new(k, theta);
                let pad = k.unsigned_abs() as usize + 2;
                let r = verify_general_function(&coeffs, &label, d, pad).unwrap();
                assert!(r < 1e-10, "poly {poly_idx} k={k} theta={theta}: {r:e}");
                worst = worst.max(r);
                let phi = rng.random::<f64>() * 4.0 - 2.0;
                let r = verify_linear_modification(phi, &label, d, pad).unwrap();
                assert!(r < 1e-10, "linear phi={phi} k={k}: {r:e}");
                worst = worst.max(r);
            }
        }
    }
    println!("criterion 2: PASS appendix-A lemmas, 5 random quartics, worst residual {worst:e}");
}

#[test]
fn criterion_3_appendix_b() {
    // R'_N(phi_l) phases on |kN>: 1 for even k, e^{i pi/2^l} for odd k,
    // within 1e-10 for l in {0,1,2,3}; l=2 coefficients exactly
    // (1/6)x^3 - (3/4)x^2 + (5/6)x as rationals
    for l in 0..=3u32 {
        for n in [1u32, 2, 3, 4] {
            let d = Dim::new(8 * n as usize + 1).unwrap();
            let gate = make_gate(&GateSpec::rl_prime(n, l).unwrap(), d).unwrap();
            for k in 0..8usize {
                let lvl = k * n as usize;
                let expect = if k % 2 == 0 {
                    C64::new(1.0, 0.0)
                } else {
                    C64::from_polar(1.0, PI / (1u64 << l) as f64)
                };
                let got = gate.get(lvl, lvl);
                assert!(
                    (got - expect).norm() < 1e-10,
                    "l={l} N={n} k={k}: {got} vs {expect}"
                );
            }
        }
    }
    let p2 = appendix_b_polynomial(2);
    let coeffs = p2.gate_coeffs();
    assert_eq!(p2.degree(), 3);
    assert_eq!(coeffs[1], Ratio::new(5, 6));
    assert_eq!(coeffs[2], Ratio::new(-3, 4));
    assert_eq!(coeffs[3], Ratio::new(1, 6));
    println!("criterion 3: PASS appendix-B discrete rotations, l in 0..4, f_2 coefficients exact");
}

#[test]
fn criterion_4_qubit_analogs() {
    // qubit propagation identities to machine precision and agreement of the
    // N=1 bosonic restriction
    let mut worst = 0.0f64;
    for k in [-1i64, 0, 1] {
        for theta in [0.0, 0.4, -1.3, 2.8] {
            for gate in [
                QubitGate::Z,
                QubitGate::X,
                QubitGate::S,
                QubitGate::T,
                QubitGate::Cz,
                QubitGate::Ccz,
            ] {
                let r = verify_qubit(gate, k, theta).unwrap();
                assert!(r < 1e-13, "{gate:?} k={k} theta={theta}: {r:e}");
                worst = worst.max(r);
            }
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
                assert!(r < 1e-12, "{kind:?} k={k} theta={theta}: {r:e}");
                worst = worst.max(r);
            }
        }
    }
    println!("criterion 4: PASS qubit analogs and N=1 restrictions, worst residual {worst:e}");
}

#[test]
fn criterion_5_direct_round_trip() {
    // ideal codes N in {2,3}, M=12, k0=3: every shift in each prior's
    // correctable set and 16 thetas inside (-pi/2N, pi/2N) recover with
    // fidelity >= 1 - 1e-6, and the logical errors m=N / theta=pi/N act as
    // X-bar / Z-bar instead of recovering
    let m_grid = 12usize;
    let (alpha, beta) = (C64::new(0.6, 0.0), C64::new(0.8, 0.0));
    for order in [2u32, 3] {
        let code = RotationCode::ideal(order, m_grid, 3).unwrap();
        let nf = order as f64;
        for kind in [PriorKind::GainOnly, PriorKind::LossOnly, PriorKind::Symmetric] {
            let prior = ChannelPrior::new(kind, 0.1, 0.1).unwrap();
            for m in prior.correctable_shifts(order) {
                for j in 0..16 {
                    let theta = (j as f64 + 0.5 - 8.0) * PI / (16.0 * nf);
                    let out = run_direct_with_state(
                        &code,
                        &ErrorLabel::new(m, theta),
                        &prior,
                        alpha,
                        beta,
                    )
                    .unwrap();
                    assert!(
                        out.fidelity >= 1.0 - 1e-6,
                        "N={order} {kind:?} m={m} theta={theta}: fidelity {}",
                        out.fidelity
                    );
                    assert_eq!(out.plan.m_est, m, "N={order} {kind:?} theta={theta}");
                    assert!(
                        (out.plan.theta_est - theta).abs() < 1e-9,
                        "N={order} m={m}: theta_est {} vs {theta}",
                        out.plan.theta_est
                    );
                }
            }
        }
        // logical errors: m = N acts as X-bar (up to the O(1/M) grid edge),
        // theta = pi/N acts exactly as Z-bar
        let sym = ChannelPrior::symmetric(0.1, 0.1);
        let psi = code.logical_state(alpha, beta).unwrap();
        let cw = code.codewords().unwrap();
        let out = run_direct_with_state(&code, &ErrorLabel::new(order as i64, 0.0), &sym, alpha, beta)
            .unwrap();
        let xbar = cw.plus.scale(alpha).sub(&cw.minus.scale(beta)).normalized().unwrap();
        let expect_x = psi.inner(&xbar).norm_sqr();
        assert!(
            (out.fidelity - expect_x).abs() < 3.0 / m_grid as f64,
            "N={order} m=N: fidelity {} vs <X> {}",
            out.fidelity,
            expect_x
        );
        assert!(out.fidelity < 0.5, "an undetected logical X must not look recovered");
        let out = run_direct_with_state(&code, &ErrorLabel::new(0, PI / nf), &sym, alpha, beta)
            .unwrap();
        let zbar = cw.minus.scale(alpha).add(&cw.plus.scale(beta)).normalized().unwrap();
        let expect_z = psi.inner(&zbar).norm_sqr();
        assert!(
            (out.fidelity - expect_z).abs() < 1e-6,
            "N={order} theta=pi/N: fidelity {} vs <Z> {}",
            out.fidelity,
            expect_z
        );
    }
    println!("criterion 5: PASS direct-scheme round trip, N in {{2,3}}, all priors, 16 thetas");
}

#[test]
fn criterion_6_teleportation_convergence() {
    // ideal N=2 codes at M in {6, 10}: noiseless and single-error cases reach
    // fidelity >= 1 - eps(M) with eps(10) < eps(6). The expected fidelity is
    // computed by exact enumeration of the two-measurement outcome tree, so
    // the comparison carries no sampling noise.
    let loss = ChannelPrior::new(PriorKind::LossOnly, 0.1, 0.1).unwrap();
    let gain = ChannelPrior::new(PriorKind::GainOnly, 0.1, 0.1).unwrap();
    let sym = ChannelPrior::symmetric(0.1, 0.1);
    let cases = [
        (ErrorLabel::identity(), sym),
        (ErrorLabel::new(-1, 0.0), loss),
        (ErrorLabel::new(1, 0.1), gain),
    ];
    let mut eps = Vec::new();
    for m_grid in [6usize, 10] {
        let code = RotationCode::ideal(2, m_grid, 1).unwrap();
        let mut min_expected = f64::INFINITY;
        for (label, prior) in &cases {
            let f = teleport_expected_fidelity(&code, label, prior, 64, 1e-12).unwrap();
            min_expected = min_expected.min(f);
        }
        assert!(
            min_expected >= 0.85,
            "M={m_grid}: worst-case expected fidelity {min_expected}"
        );
        eps.push(1.0 - min_expected);
    }
    assert!(
        eps[1] < eps[0],
        "monotone convergence violated: eps(6)={} eps(10)={}",
        eps[0],
        eps[1]
    );
    println!(
        "criterion 6: PASS teleportation convergence, eps(6)={:.5} > eps(10)={:.5} (exact outcome enumeration)",
        eps[0], eps[1]
    );
}

#[test]
fn criterion_7_distance_tradeoff() {
    // d_n * d_theta = pi exactly for ideal codes N in {1,2,3,4}; KL-zero law
    // below 1e-10; the N-shift block matches the cos X_L - sin Y_L form
    // within 1e-8
    let rows = verify_tradeoff(&[1, 2, 3, 4], 12).unwrap();
    for row in &rows {
        assert_eq!(row.d_n, row.order as i64, "N={}", row.order);
        assert!(
            (row.d_theta - PI / row.order as f64).abs() < 1e-12,
            "N={}: d_theta {}",
            row.order,
            row.d_theta
        );
        assert!(
            row.deviation_from_pi < 1e-9,
            "N={}: product {}",
            row.order,
            row.product
        );
    }

    // KL-zero law across codes and off-lattice pairs
    for code in [
        RotationCode::ideal(2, 12, 0).unwrap(),
        RotationCode::ideal(3, 10, 0).unwrap(),
    ] {
        let n = code.order() as i64;
        for j in -n..=n {
            for k in -n..=n {
                if (j - k).rem_euclid(n) == 0 {
                    continue;
                }
                let b = kl_block(&code, &ErrorLabel::new(j, 0.21), &ErrorLabel::new(k, -0.4))
                    .unwrap();
                assert!(b.deviation < 1e-10 && b.norm() < 1e-10, "j={j} k={k}");
            }
        }
    }

    // N-shift form at odd M (term counts align; see the module docs)
    let n = 2u32;
    let code = RotationCode::ideal(n, 13, 0).unwrap();
    for (j, theta, phi) in [(0i64, 0.0, 0.0), (1, 0.2, -0.3), (0, -0.45, 0.3)] {
        let b = kl_block(
            &code,
            &ErrorLabel::new(j, theta),
            &ErrorLabel::new(j + n as i64, phi),
        )
        .unwrap();
        let half = (phi - theta) * n as f64 / 2.0;
        let form = [
            C64::new(0.0, 0.0),
            C64::from_polar(1.0, half),
            C64::from_polar(1.0, -half),
            C64::new(0.0, 0.0),
        ];
        let dot: C64 = form
            .iter()
            .zip(b.matrix.iter())
            .map(|(f, m)| f.conj() * m)
            .sum();
        let scale = dot / C64::new(2.0, 0.0);
        let res: f64 = form
            .iter()
            .zip(b.matrix.iter())
            .map(|(f, m)| (m - scale * f).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(
            res / b.norm() < 1e-8,
            "j={j} theta={theta} phi={phi}: {res:e}"
        );
    }
    println!("criterion 7: PASS number-phase trade-off d_n * d_theta = pi, KL laws hold");
}

#[test]
fn criterion_8_contrived_code() {
    // the period-8 footnote code: <0|X_N|1> = 0 within 1e-10 and the
    // (k, k+N) pairs are mutually detectable at phi = 0
    let report = contrived_code_check(2).unwrap();
    assert!(
        report.x_matrix_element.norm() < 1e-10,
        "<0|X|1> = {}",
        report.x_matrix_element
    );
    assert!(report.n_shift_deviation < 1e-10);
    assert!(report.n_shift_block_norm < 1e-10);
    assert!(report.x_logical_deviation > 0.5);
    // a shifted pair (1, 1+N) as well
    let values = rotorqec::distance::contrived_profile_values(17);
    let profile = rotorqec::codes::AmplitudeProfile::custom(2, values, "contrived").unwrap();
    let code = RotationCode::new(2, 0, profile, Dim::new(40).unwrap()).unwrap();
    let b = kl_block(&code, &ErrorLabel::new(1, 0.0), &ErrorLabel::new(3, 0.0)).unwrap();
    assert!(b.deviation < 1e-10 && b.norm() < 1e-10, "pair (1,3): {}", b.norm());
    println!("criterion 8: PASS contrived-code footnote, N-shift pairs detectable");
}

#[test]
fn criterion_9_monte_carlo_determinism() {
    // identical seeds must produce byte-identical trial CSVs under serial
    // and parallel execution
    let code = RotationCode::ideal(2, 10, 3).unwrap();
    let prior = ChannelPrior::new(PriorKind::Symmetric, 0.2, 0.15).unwrap();
    let serial_pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let parallel_pool = rayon::ThreadPoolBuilder::new()
        .num_threads(8)
        .build()
        .unwrap();
    for scheme in [Scheme::Direct, Scheme::Teleport] {
        let code_t = if scheme == Scheme::Teleport {
            RotationCode::ideal(2, 8, 1).unwrap()
        } else {
            code.clone()
        };
        let trials = if scheme == Scheme::Teleport { 24 } else { 200 };
        let (serial, _) = serial_pool
            .install(|| monte_carlo(&code_t, &prior, scheme, trials, 99))
            .unwrap();
        let (parallel, _) = parallel_pool
            .install(|| monte_carlo(&code_t, &prior, scheme, trials, 99))
            .unwrap();
        let a = trials_to_csv(&serial);
        let b = trials_to_csv(&parallel);
        assert_eq!(a.len(), b.len(), "{scheme:?} CSV length");
        assert!(a == b, "{scheme:?} CSVs differ between serial and parallel runs");
    }
    println!("criterion 9: PASS Monte Carlo CSVs byte-identical across serial and parallel runs");
}
