use nalgebra::DMatrix;
use proptest::prelude::*;
use sr_core::skewlin::{invariant_subspaces, orthogonally_similar, skew_normal_form, skew_spectrum, SkewSpectrum};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 128,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn random_skew() -> impl Strategy<Value = DMatrix<f64>> {
    (2usize..=12).prop_flat_map(|n| {
        prop::collection::vec(-2.0f64..2.0, n * n).prop_map(move |v| {
            let a = DMatrix::from_row_slice(n, n, &v);
            &a - a.transpose()
        })
    })
}

fn orthogonal(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| DMatrix::from_row_slice(n, n, &v).qr().q())
}

fn skew_and_rotation() -> impl Strategy<Value = (DMatrix<f64>, DMatrix<f64>)> {
    random_skew().prop_flat_map(|j| {
        let n = j.nrows();
        (Just(j), orthogonal(n))
    })
}

/// Magnitudes listed with multiplicity, from a complex eigensolver.
fn oracle_magnitudes(j: &DMatrix<f64>) -> Vec<f64> {
    let mut im: Vec<f64> = j.complex_eigenvalues().iter().map(|z| z.im.abs()).collect();
    im.sort_by(f64::total_cmp);
    im
}

fn listed(s: &SkewSpectrum) -> Vec<f64> {
    let mut out = vec![0.0; s.m0];
    for &(a, m) in &s.pairs {
        out.extend(std::iter::repeat_n(a, 2 * m));
    }
    out
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn spectrum_matches_complex_oracle(j in random_skew()) {
        let s = skew_spectrum(&j, 1e-7).unwrap();
        prop_assert_eq!(s.size(), j.nrows());
        let ours = listed(&s);
        let theirs = oracle_magnitudes(&j);
        for (a, b) in ours.iter().zip(&theirs) {
            prop_assert!((a - b).abs() <= 1e-9, "{:?} vs {:?}", ours, theirs);
        }
    }

    #[test]
    fn spectrum_is_conjugation_invariant((j, q) in skew_and_rotation()) {
        let k = &q * &j * q.transpose();
        let (a, b) = (skew_spectrum(&j, 1e-7).unwrap(), skew_spectrum(&k, 1e-7).unwrap());
        prop_assert_eq!(a.m0, b.m0);
        prop_assert_eq!(a.multiplicities(), b.multiplicities());
        for (x, y) in a.pairs.iter().zip(&b.pairs) {
            prop_assert!((x.0 - y.0).abs() <= 1e-10 * (1.0 + x.0));
        }
        prop_assert!(orthogonally_similar(&j, &k, 1e-7));
    }

    #[test]
    fn normal_form_round_trip(j in random_skew()) {
        let (o, jt) = skew_normal_form(&j, 1e-9).unwrap();
        let n = j.nrows();
        prop_assert!((o.transpose() * &jt * &o - &j).amax() <= 1e-10);
        prop_assert!((o.transpose() * &o - DMatrix::identity(n, n)).amax() <= 1e-12);
    }

    #[test]
    fn normal_form_recovers_blocks(
        alphas in prop::collection::vec(0.1f64..5.0, 1..5),
        zeros in 0usize..3,
        seed in prop::collection::vec(-1.0f64..1.0, 144),
    ) {
        let sp = SkewSpectrum { m0: zeros, pairs: {
            let mut a = alphas.clone();
            a.sort_by(f64::total_cmp);
            a.dedup_by(|x, y| (*x - *y).abs() < 1e-3);
            a.into_iter().map(|v| (v, 1)).collect()
        }, stratum_gap: 0.0 };
        let jt = sp.normal_matrix();
        let n = jt.nrows();
        let q = DMatrix::from_row_slice(n, n, &seed[..n * n]).qr().q();
        let j = &q * &jt * q.transpose();
        let (_, recovered) = skew_normal_form(&j, 1e-9).unwrap();
        prop_assert!((recovered - jt).amax() <= 1e-10);
    }

    #[test]
    fn projectors_are_complete(j in random_skew()) {
        let v = invariant_subspaces(&j, 1e-7).unwrap();
        let n = j.nrows();
        let mut sum = DMatrix::zeros(n, n);
        for b in &v {
            sum += b * b.transpose();
        }
        prop_assert!((sum - DMatrix::identity(n, n)).amax() <= 1e-10);
    }

    #[test]
    fn subspaces_follow_conjugation(
        alphas in prop::collection::vec(0.1f64..5.0, 2..4),
        seed in prop::collection::vec(-1.0f64..1.0, 64),
    ) {
        let mut a = alphas.clone();
        a.sort_by(f64::total_cmp);
        a.dedup_by(|x, y| (*x - *y).abs() < 1e-2);
        let sp = SkewSpectrum { m0: 1, pairs: a.into_iter().map(|v| (v, 1)).collect(), stratum_gap: 0.0 };
        let jt = sp.normal_matrix();
        let n = jt.nrows();
        let q = DMatrix::from_row_slice(n, n, &seed[..n * n]).qr().q();
        let j = &q * &jt * q.transpose();
        let v = invariant_subspaces(&j, 1e-7).unwrap();
        let coord = invariant_subspaces(&jt, 1e-7).unwrap();
        prop_assert_eq!(v.len(), coord.len());
        for (b, c) in v.iter().zip(&coord) {
            let expected = &q * c * c.transpose() * q.transpose();
            prop_assert!((b * b.transpose() - expected).amax() <= 1e-9);
        }
    }
}

#[test]
fn charlotte_blocks_in_frame_layout() {
    // D-frame order (∂y1, ∂y2, X1, X2): blocks couple 1↔3 and 2↔4
    let mut j = DMatrix::zeros(4, 4);
    j[(0, 2)] = 1.0;
    j[(2, 0)] = -1.0;
    j[(1, 3)] = 0.5;
    j[(3, 1)] = -0.5;
    let s = skew_spectrum(&j, 1e-7).unwrap();
    assert_eq!(s.m0, 0);
    assert_eq!(s.multiplicities(), vec![1, 1]);
    assert!((s.pairs[0].0 - 0.5).abs() < 1e-12 && (s.pairs[1].0 - 1.0).abs() < 1e-12);
    let (o, jt) = skew_normal_form(&j, 1e-9).unwrap();
    assert!((&o * &j * o.transpose() - &jt).amax() < 1e-12);
}
