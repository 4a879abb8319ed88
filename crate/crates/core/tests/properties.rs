use cardiosep::advisor::{damped_step, parse_response};
use cardiosep::metrics::bss_decompose;
use cardiosep::nmf::{LayerStack, alpha_divergence, normalize_stack, update_a_alpha, update_x_alpha};
use cardiosep::periodicity::{acf, assign_sources};
use cardiosep::signal::affine_shift;
use cardiosep::spectral::{extract_features, fundamental_frequency};
use cardiosep::{Band, Lambda2, Matrix, NonNegMatrix, Signal};
use proptest::prelude::*;

fn positive_matrix(rows: usize, cols: usize) -> impl Strategy<Value = NonNegMatrix<f64>> {
    prop::collection::vec(0.05f64..5.0, rows * cols)
        .prop_map(move |v| NonNegMatrix::try_new(Matrix::new(rows, cols, v).unwrap()).unwrap())
}

fn real_matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix<f64>> {
    prop::collection::vec(-100.0f64..100.0, rows * cols).prop_map(move |v| Matrix::new(rows, cols, v).unwrap())
}

fn product(a: &NonNegMatrix<f64>, x: &NonNegMatrix<f64>) -> NonNegMatrix<f64> {
    a.matmul(x).unwrap()
}

fn stack_product(stack: &LayerStack<f64>) -> Matrix<f64> {
    stack.model()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn auto_shift_is_nonnegative_and_invertible(y in real_matrix(3, 17), l1 in 0.1f64..10.0) {
        let shifted = affine_shift(&y, l1, Lambda2::Auto).unwrap();
        prop_assert!(shifted.as_slice().iter().all(|&v| v >= 0.0));
        let shift = cardiosep::AffineShift::resolve(&y, l1, Lambda2::Auto).unwrap();
        let back = shift.invert(shifted.as_matrix()).unwrap();
        let scale = y.as_slice().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(back.max_abs_diff(&y).unwrap() <= 1e-12 * scale);
    }

    #[test]
    fn divergence_is_nonnegative(
        y in positive_matrix(3, 4),
        q in positive_matrix(3, 4),
        alpha in prop::sample::select(vec![-1.0, 0.0, 0.5, 1.0, 2.0, 10.0]),
    ) {
        let d = alpha_divergence(&y, &q, alpha).unwrap();
        prop_assert!(d >= -1e-12, "{d}");
        prop_assert!(alpha_divergence(&y, &y, alpha).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn alternating_updates_do_not_increase_cost(
        a in positive_matrix(3, 3),
        x in positive_matrix(3, 8),
        y in positive_matrix(3, 8),
        alpha in prop::sample::select(vec![0.5, 1.0, 2.0]),
    ) {
        let (mut a, mut x) = (a, x);
        let mut prev = alpha_divergence(&y, &product(&a, &x), alpha).unwrap();
        for _ in 0..20 {
            x = update_x_alpha(&y, &a, &x, alpha).unwrap();
            let c = alpha_divergence(&y, &product(&a, &x), alpha).unwrap();
            prop_assert!(c <= prev + 1e-9, "x step {prev} -> {c}");
            a = update_a_alpha(&y, &a, &x, alpha).unwrap();
            let c2 = alpha_divergence(&y, &product(&a, &x), alpha).unwrap();
            prop_assert!(c2 <= c + 1e-9, "a step {c} -> {c2}");
            prev = c2;
        }
    }

    #[test]
    fn normalization_preserves_product(layers in 1usize..=4, seed in any::<u64>()) {
        let mut stack = LayerStack::<f64>::random(3, 2, 10, layers, seed).unwrap();
        let before = stack_product(&stack);
        let flagged = normalize_stack(&mut stack);
        prop_assert!(flagged.is_empty());
        let after = stack_product(&stack);
        prop_assert!(after.relative_distance(&before).unwrap() <= 1e-12);
        for layer in stack.layers() {
            for s in layer.as_matrix().col_sums() {
                prop_assert!((s - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn fundamental_is_amplitude_invariant(freq in 30.0f64..180.0, gain in 0.01f64..100.0) {
        let fs = 1000;
        let x: Vec<f64> = (0..2000).map(|t| (std::f64::consts::TAU * freq * t as f64 / 1000.0).sin()).collect();
        let band = Band::new(20.0, 200.0).unwrap();
        let base = fundamental_frequency(&Signal::new(x.clone(), fs).unwrap(), band).unwrap();
        let scaled = fundamental_frequency(&Signal::new(x.iter().map(|v| v * gain).collect(), fs).unwrap(), band).unwrap();
        prop_assert_eq!(base, scaled);
        prop_assert!((base - freq).abs() <= 0.5);
    }

    #[test]
    fn features_invariant_under_negation(x in prop::collection::vec(-10.0f64..10.0, 16..256)) {
        let band = Band::new(0.0, 50.0).unwrap();
        let a = extract_features(&Signal::new(x.clone(), 100).unwrap(), band).unwrap();
        let b = extract_features(&Signal::new(x.iter().map(|v| -v).collect(), 100).unwrap(), band).unwrap();
        let close = |p: f64, q: f64| (p - q).abs() <= 1e-9 * (1.0 + p.abs());
        prop_assert!(close(a.spectral_centroid, b.spectral_centroid));
        prop_assert!(close(a.rms_energy, b.rms_energy));
        prop_assert_eq!(a.zero_crossing_rate, b.zero_crossing_rate);
        prop_assert!(close(a.variance, b.variance));
        prop_assert_eq!(a.max_amplitude, b.max_amplitude);
        prop_assert!(close(a.fundamental_frequency, b.fundamental_frequency));
    }

    #[test]
    fn parse_response_is_total(text in ".{0,400}", nyquist in prop::option::of(1.0f64..5000.0)) {
        let s = parse_response(&text, nyquist);
        for v in [s.heart_f0, s.lung_f0].into_iter().flatten() {
            prop_assert!(v > 0.0 && v.is_finite());
            if let Some(n) = nyquist {
                prop_assert!(v < n);
            }
        }
    }

    #[test]
    fn parse_response_finds_embedded_markers(
        prefix in "[a-z ]{0,40}",
        h in 1.0f64..400.0,
        l in 1.0f64..400.0,
    ) {
        let text = format!("{prefix}\nHEART_F0: {h:.2} Hz\nlung_f0 : {l:.2} hz\n");
        let s = parse_response(&text, Some(500.0));
        prop_assert!((s.heart_f0.unwrap() - h).abs() <= 0.006);
        prop_assert!((s.lung_f0.unwrap() - l).abs() <= 0.006);
        prop_assert!(!s.diagnosis_note.contains("f0"));
    }

    #[test]
    fn heuristic_step_stays_in_band_and_is_bounded(
        current in 20.0f64..200.0,
        observed in 0.0f64..500.0,
    ) {
        let band = Band::new(20.0, 200.0).unwrap();
        let next = damped_step(current, observed, band);
        prop_assert!(band.contains(next));
        prop_assert!((next - current).abs() <= 0.5 * current + 1e-12);
        if (observed - current).abs() <= 0.5 * current && band.contains(observed) {
            prop_assert!((next - observed).abs() <= 1e-12);
        }
    }

    #[test]
    fn sir_bounds_sdr_and_decomposition_sums(
        r0 in prop::collection::vec(-1.0f64..1.0, 64),
        r1 in prop::collection::vec(-1.0f64..1.0, 64),
        est in prop::collection::vec(-1.0f64..1.0, 64),
    ) {
        let refs = [r0, r1];
        let d = bss_decompose(&est, &refs, 0).unwrap();
        prop_assert!(d.sir() >= d.sdr() - 1e-9);
        prop_assert!(d.sar() >= d.sdr() - 1e-9);
        let norm = est.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        let err = (0..64)
            .map(|t| (d.s_target[t] + d.e_interf[t] + d.e_artif[t] - est[t]).powi(2))
            .sum::<f64>()
            .sqrt();
        prop_assert!(err <= 1e-10 * norm.max(1.0));
    }

    #[test]
    fn acf_matches_direct_sum(x in prop::collection::vec(-5.0f64..5.0, 1..120)) {
        let n = x.len();
        let fast = acf(&x).unwrap();
        prop_assert_eq!(fast.len(), n);
        let scale = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
        for p in 0..n {
            let direct = (0..n - p).map(|t| x[t] * x[t + p]).sum::<f64>() / n as f64;
            prop_assert!((fast[p] - direct).abs() <= 1e-10 * (1.0 + scale));
        }
    }

    #[test]
    fn labeling_follows_row_permutation(heart_period in 60usize..120, lung_period in 300usize..500) {
        let t = 2000;
        let heart: Vec<f64> = (0..t)
            .map(|i| if i % heart_period < 5 { (i as f64 * 1.3).sin() } else { 0.0 })
            .collect();
        let lung: Vec<f64> = (0..t)
            .map(|i| {
                let tau = (i % lung_period) as f64 / lung_period as f64;
                if tau < 0.4 { (std::f64::consts::PI * tau / 0.4).sin().powi(2) * (i as f64 * 2.1).sin() } else { 0.0 }
            })
            .collect();
        let x = Matrix::from_rows(&[heart.clone(), lung.clone()]).unwrap();
        let swapped = Matrix::from_rows(&[lung, heart]).unwrap();
        let a = assign_sources(&x, 200).unwrap();
        let b = assign_sources(&swapped, 200).unwrap();
        prop_assert_eq!((a.heart, a.lung), (0, 1));
        prop_assert_eq!((b.heart, b.lung), (1, 0));
    }
}
