use mdmd_core::wavelet::{besov_blocks, dwt_periodic, idwt_periodic, scale_energies, BesovSpec, WaveletFamily};
use mdmd_core::C64;
use proptest::prelude::*;

fn family() -> impl Strategy<Value = WaveletFamily> {
    prop_oneof![
        Just(WaveletFamily::haar()),
        Just(WaveletFamily::d4()),
        Just(WaveletFamily::named("d6").unwrap()),
        Just(WaveletFamily::named("d8").unwrap()),
    ]
}

/// `(signal, levels)` with a power-of-two length between 8 and 256.
fn signal() -> impl Strategy<Value = (Vec<C64>, usize)> {
    (3u32..=8).prop_flat_map(|p| {
        let n = 1usize << p;
        (
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| C64::new(a, b)), n),
            1..=(p as usize - 1),
        )
    })
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn perfect_reconstruction((x, levels) in signal(), fam in family()) {
        let back = idwt_periodic(&dwt_periodic(&x, &fam, levels).unwrap(), &fam).unwrap();
        prop_assert!(max_diff(&x, &back) < 1e-12);
    }

    #[test]
    fn parseval((x, levels) in signal(), fam in family()) {
        let total: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        let bands: f64 = scale_energies(&dwt_periodic(&x, &fam, levels).unwrap()).iter().sum();
        prop_assert!((total - bands).abs() <= 1e-10 * total.max(1e-300));
    }

    #[test]
    fn linearity((x, levels) in signal(), fam in family(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let y: Vec<C64> = x.iter().rev().map(|z| z * C64::new(0.3, -1.1)).collect();
        let (ca, cb) = (C64::new(a, 0.5), C64::new(b, -0.25));
        let mix: Vec<C64> = x.iter().zip(&y).map(|(u, v)| ca * u + cb * v).collect();
        let dx = dwt_periodic(&x, &fam, levels).unwrap();
        let dy = dwt_periodic(&y, &fam, levels).unwrap();
        let dm = dwt_periodic(&mix, &fam, levels).unwrap();
        for l in 0..levels {
            let expect: Vec<C64> = dx.details[l].iter().zip(&dy.details[l]).map(|(u, v)| ca * u + cb * v).collect();
            prop_assert!(max_diff(&expect, &dm.details[l]) < 1e-12);
        }
    }

    #[test]
    fn shift_covariance((x, levels) in signal(), fam in family()) {
        // shifting by 2^levels samples moves level l by 2^(levels - l) coefficients
        let n = x.len();
        let shift = 1usize << levels;
        let shifted: Vec<C64> = (0..n).map(|i| x[(i + shift) % n]).collect();
        let a = dwt_periodic(&x, &fam, levels).unwrap();
        let b = dwt_periodic(&shifted, &fam, levels).unwrap();
        for l in 1..=levels {
            let d = &a.details[l - 1];
            let step = 1usize << (levels - l);
            let rolled: Vec<C64> = (0..d.len()).map(|i| d[(i + step) % d.len()]).collect();
            prop_assert!(max_diff(&rolled, &b.details[l - 1]) < 1e-12);
        }
        let m = a.approximation.len();
        let rolled: Vec<C64> = (0..m).map(|i| a.approximation[(i + 1) % m]).collect();
        prop_assert!(max_diff(&rolled, &b.approximation) < 1e-12);
    }

    #[test]
    fn constants_have_no_detail((x, levels) in signal(), fam in family()) {
        let flat = vec![x[0]; x.len()];
        let coeffs = dwt_periodic(&flat, &fam, levels).unwrap();
        for d in &coeffs.details {
            prop_assert!(d.iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn besov_0_2_2_is_band_energy((x, levels) in signal(), fam in family()) {
        let coeffs = dwt_periodic(&x, &fam, levels).unwrap();
        let blocks = besov_blocks(&coeffs, &BesovSpec::new(0.0, 2.0, 2.0).unwrap()).unwrap();
        for (b, e) in blocks.iter().zip(scale_energies(&coeffs)) {
            prop_assert!((b - e).abs() <= 1e-12 * e.max(1.0));
        }
    }

    #[test]
    fn besov_blocks_scale_homogeneously((x, levels) in signal(), c in 0.1f64..10.0, alpha in 0.0f64..2.0) {
        let fam = WaveletFamily::d4();
        let spec = BesovSpec::new(alpha, 4.0, 2.0).unwrap();
        let scaled: Vec<C64> = x.iter().map(|z| z * c).collect();
        let a = besov_blocks(&dwt_periodic(&x, &fam, levels).unwrap(), &spec).unwrap();
        let b = besov_blocks(&dwt_periodic(&scaled, &fam, levels).unwrap(), &spec).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((v - c * c * u).abs() <= 1e-9 * v.abs().max(1e-12));
        }
    }
}
