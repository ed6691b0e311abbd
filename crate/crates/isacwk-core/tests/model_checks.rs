//! Scenario construction checks: precoder algebra, chirp structure,
//! constellation normalization, seed discipline.

use isacwk_core::error::Error;
use isacwk_core::metrics::from_db;
use isacwk_core::model::{
    generate_channel, generate_symbols, m_sequence_chirp, orthogonal_lfm_chirp, ChirpKind,
    Constellation, Scenario,
};
use num_complex::Complex64;
use std::f64::consts::PI;

fn scenario(n: usize, k: usize, l: usize, seed: u64) -> Scenario {
    Scenario::generate(n, k, l, Constellation::Qpsk, &ChirpKind::OrthogonalLfm, 10.0, seed)
        .unwrap()
}

#[test]
fn precoder_reaches_the_stored_symbols_exactly() {
    // The effective symbol matrix is scaled so that H x_comm = S holds with
    // x_comm on the unit sphere; that pair is the zero-interference anchor
    // the solver works against.
    for seed in [1, 2, 3, 17] {
        let sc = scenario(4, 2, 12, seed);
        let y = sc.h() * sc.x_comm().to_matrix();
        let mui: f64 = (y - sc.s()).iter().map(|z| z.norm_sqr()).sum();
        assert!(mui < 1e-20, "seed {seed}: residual MUI {mui:e}");
        assert!((sc.x_comm().norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn raw_and_effective_symbols_differ_by_the_precoder_scale() {
    let sc = scenario(3, 2, 10, 9);
    let raw = sc.s_raw();
    for (e, r) in sc.s().iter().zip(raw.iter()) {
        let back = e * Complex64::new(sc.zf_scale(), 0.0);
        assert!((back - r).norm() < 1e-12 * r.norm().max(1.0));
    }
}

#[test]
fn noise_floor_follows_the_requested_snr() {
    let snr_db = 7.0;
    let sc = Scenario::generate(
        4,
        2,
        16,
        Constellation::Qam16,
        &ChirpKind::OrthogonalLfm,
        snr_db,
        5,
    )
    .unwrap();
    let mean_sym_power: f64 =
        sc.s().iter().map(|z| z.norm_sqr()).sum::<f64>() / sc.s().len() as f64;
    let expected = mean_sym_power / from_db(snr_db);
    assert!((sc.noise_var() - expected).abs() <= 1e-12 * expected);
}

#[test]
fn channel_draws_are_seeded_and_k_by_n() {
    let a = generate_channel(2, 5, 77).unwrap();
    let b = generate_channel(2, 5, 77).unwrap();
    let c = generate_channel(2, 5, 78).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!((a.nrows(), a.ncols()), (2, 5));
    // CN(0,1) entries: unit variance per complex entry, checked loosely on a
    // larger draw.
    let big = generate_channel(40, 50, 3).unwrap();
    let var = big.iter().map(|z| z.norm_sqr()).sum::<f64>() / big.len() as f64;
    assert!((var - 1.0).abs() < 0.1, "entry variance {var}");
}

#[test]
fn more_users_than_antennas_is_rejected() {
    assert!(matches!(generate_channel(5, 4, 1), Err(Error::RankDeficient(_))));
    assert!(Scenario::generate(
        2,
        3,
        8,
        Constellation::Qpsk,
        &ChirpKind::OrthogonalLfm,
        10.0,
        1
    )
    .is_err());
}

#[test]
fn constellations_have_unit_average_energy() {
    for c in [
        Constellation::Qpsk,
        Constellation::Qam16,
        Constellation::Qam64,
        Constellation::Qam256,
    ] {
        let pts = c.points();
        assert_eq!(pts.len(), c.order());
        let mean: f64 = pts.iter().map(|z| z.norm_sqr()).sum::<f64>() / pts.len() as f64;
        assert!((mean - 1.0).abs() < 1e-12, "{c:?} mean energy {mean}");
    }
}

#[test]
fn symbol_draws_come_from_the_constellation() {
    let s = generate_symbols(Constellation::Qam64, 3, 50, 123);
    let pts = Constellation::Qam64.points();
    for z in s.iter() {
        assert!(
            pts.iter().any(|p| (p - z).norm() < 1e-12),
            "drawn symbol {z} not a constellation point"
        );
    }
}

#[test]
fn lfm_chirp_matches_the_phase_formula_and_rows_decorrelate() {
    let n = 4;
    let l = 16;
    let x0 = orthogonal_lfm_chirp(n, l);
    assert!((x0.norm() - 1.0).abs() < 1e-12);
    let amp = 1.0 / ((n * l) as f64).sqrt();
    // Direct double-loop evaluation of the chirp phases.
    for row in 0..n {
        let m = (row + 1) as f64;
        for t in 0..l {
            let tf = t as f64;
            let phase = 2.0 * PI * m * tf / l as f64 + PI * m * tf * tf / l as f64;
            let want = Complex64::from_polar(amp, phase);
            assert!((x0.get(row, t) - want).norm() < 1e-12);
        }
    }
    // Distinct rows are not orthogonal in the strict inner-product sense (the
    // quadratic phase turns the lag-zero product into a Gauss sum of magnitude
    // about sqrt(L)), but their normalized correlation decays like 1/sqrt(L).
    for a in 0..n {
        for b in (a + 1)..n {
            let dot: Complex64 = (0..l)
                .map(|t| x0.get(a, t) * x0.get(b, t).conj())
                .sum();
            let corr = dot.norm() * n as f64;
            assert!(corr <= 2.0 / (l as f64).sqrt(), "rows {a},{b} correlate: {corr}");
        }
    }
}

#[test]
fn m_sequence_chips_are_binary_and_balanced() {
    let x0 = m_sequence_chirp(2, 14, &[3, 1]).unwrap();
    assert!((x0.norm() - 1.0).abs() < 1e-12);
    let amp = 1.0 / 28.0_f64.sqrt();
    let mut plus = 0;
    for z in x0.vec() {
        assert!(z.im.abs() < 1e-15);
        assert!((z.re.abs() - amp).abs() < 1e-12);
        if z.re > 0.0 {
            plus += 1;
        }
    }
    // A period-7 maximal-length sequence carries three +1 chips (and four
    // -1), so four tiled periods give twelve.
    assert_eq!(plus, 12);
}

#[test]
fn non_primitive_taps_are_rejected() {
    // x^4 + x^2 + 1 factors, so its register cycles early.
    assert!(m_sequence_chirp(1, 15, &[4, 2]).is_err());
}

#[test]
fn scenario_is_deterministic_in_its_seed() {
    let a = scenario(3, 2, 9, 42);
    let b = scenario(3, 2, 9, 42);
    assert_eq!(a.h(), b.h());
    assert_eq!(a.s(), b.s());
    assert_eq!(a.x0().vec(), b.x0().vec());
    let c = scenario(3, 2, 9, 43);
    assert_ne!(a.h(), c.h());
}
