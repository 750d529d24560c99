use std::f64::consts::PI;

use linksim_core::fading::{rician_amplitude_moments, wrap_phase, RicianSpec};
use linksim_core::impairments::{clamp_to_arc, circular_distance, quantize_phase};
use linksim_core::link::{argmax_first, align_phases_single, snr_single_ris, RisPanel};
use linksim_core::montecarlo::wilson_interval;
use linksim_core::pathloss::{
    fit_ple, fit_ple_anchored, radar_range_ris_loss, ris_total_loss, PathLaw, PathLossSpec,
    PathLossValue,
};
use linksim_core::{sample_rician, ComplexCoefficient, SeededStream};
use proptest::prelude::*;

proptest! {
    #[test]
    fn wrapped_phase_is_canonical(p in -1e4f64..1e4) {
        let w = wrap_phase(p);
        prop_assert!((-PI..PI).contains(&w));
        prop_assert!(((p - w) / (2.0 * PI) - ((p - w) / (2.0 * PI)).round()).abs() < 1e-9);
    }

    #[test]
    fn unit_second_moment(k in 0.0f64..1e4) {
        let m = rician_amplitude_moments(&RicianSpec::new(k).unwrap()).unwrap();
        prop_assert!((m.mean * m.mean + m.variance - 1.0).abs() < 1e-9);
        prop_assert!(m.variance >= -1e-12);
    }

    #[test]
    fn radar_range_symmetric_and_monotone(f in 0.5f64..100.0, a in 1.0f64..500.0, b in 1.0f64..500.0) {
        let spec = PathLossSpec::radar_range(f, 3.0, 3.0).unwrap();
        let ab = radar_range_ris_loss(&spec, a, b).unwrap().loss_db();
        let ba = radar_range_ris_loss(&spec, b, a).unwrap().loss_db();
        prop_assert!((ab - ba).abs() < 1e-9);
        let further = radar_range_ris_loss(&spec, a * 1.01, b).unwrap().loss_db();
        prop_assert!(further > ab);
    }

    #[test]
    fn umi_monotone_in_distance(d in 10.0f64..1990.0, f in 2.0f64..6.0) {
        for law in [PathLaw::Umi3gppLos, PathLaw::Umi3gppNlos] {
            let spec = PathLossSpec::umi(law, f).unwrap();
            prop_assert!(spec.loss(d + 1.0).unwrap().loss_db() > spec.loss(d).unwrap().loss_db());
        }
    }

    #[test]
    fn total_loss_scales_with_square_of_count(db in 20.0f64..200.0, n in 1usize..2000) {
        let l = PathLossValue::from_db(db).unwrap();
        let total = ris_total_loss(&vec![l; n]).unwrap();
        prop_assert!((total.loss_db() - (db - 20.0 * (n as f64).log10())).abs() < 1e-8);
    }

    #[test]
    fn total_loss_never_worse_than_best_element(losses in prop::collection::vec(0.0f64..200.0, 1..50)) {
        let vals: Vec<_> = losses.iter().map(|&d| PathLossValue::from_db(d).unwrap()).collect();
        let best = losses.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(ris_total_loss(&vals).unwrap().loss_db() <= best + 1e-9);
    }

    #[test]
    fn fit_recovers_any_exponent(n in 1.0f64..6.0, pl0 in 0.0f64..100.0, offset in -20.0f64..20.0) {
        let samples: Vec<(f64, f64)> = (0..100)
            .map(|i| {
                let d = 10.0 * 10f64.powf(1.4 * i as f64 / 99.0);
                (d, pl0 + 10.0 * n * (d / 10.0).log10())
            })
            .collect();
        let fit = fit_ple(&samples, 10.0).unwrap();
        prop_assert!((fit.exponent - n).abs() < 1e-8);
        // A constant offset moves only the intercept.
        let shifted: Vec<_> = samples.iter().map(|&(d, l)| (d, l + offset)).collect();
        let fit2 = fit_ple(&shifted, 10.0).unwrap();
        prop_assert!((fit2.exponent - n).abs() < 1e-8);
        prop_assert!((fit2.pl0_db - fit.pl0_db - offset).abs() < 1e-8);
        let anchored = fit_ple_anchored(&samples, 10.0, pl0).unwrap();
        prop_assert!((anchored.exponent - n).abs() < 1e-8);
    }

    #[test]
    fn clamp_lands_in_arc(p in -PI..PI, lo in -179.0f64..0.0, width in 1.0f64..179.0) {
        let (lo, hi) = (lo.to_radians(), (lo + width).to_radians());
        let c = clamp_to_arc(p, lo, hi);
        prop_assert!(c >= lo && c <= hi);
        if p >= lo && p <= hi {
            prop_assert_eq!(c, p);
        } else {
            let other = if c == lo { hi } else { lo };
            prop_assert!(circular_distance(p, c) <= circular_distance(p, other) + 1e-12);
        }
    }

    #[test]
    fn quantization_error_bounded(p in -PI..PI, bits in 1u32..8) {
        let q = quantize_phase(p, bits);
        prop_assert!(circular_distance(p, q) <= PI / (1u32 << bits) as f64 + 1e-12);
    }

    #[test]
    fn argmax_dominates(values in prop::collection::vec(-1e6f64..1e6, 1..40)) {
        let k = argmax_first(values.iter().copied()).unwrap();
        prop_assert!(values.iter().all(|&v| v <= values[k]));
        prop_assert!(values[..k].iter().all(|&v| v < values[k]));
    }

    #[test]
    fn wilson_brackets_estimate(errors in 0u64..1000, extra in 0u64..100_000) {
        let n = errors + extra.max(1);
        let (lo, hi) = wilson_interval(errors, n);
        let p = errors as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }

    #[test]
    fn alignment_is_optimal(seed in 0u64..1000, n in 2usize..24, i in 0usize..24, delta in 0.01f64..3.0) {
        let spec = RicianSpec::new(3.0).unwrap();
        let a = sample_rician(&spec, SeededStream::new(seed, 0), n).unwrap();
        let b = sample_rician(&spec, SeededStream::new(seed, 1), n).unwrap();
        let panel = RisPanel::new(n).unwrap();
        let phases = align_phases_single(&a, &b);
        let best = snr_single_ris(&panel, &a, &b, PathLossValue::LOSSLESS, 1.0, 1.0, &phases).unwrap();
        let mut p = phases.clone();
        p[i % n] += delta;
        let worse = snr_single_ris(&panel, &a, &b, PathLossValue::LOSSLESS, 1.0, 1.0, &p).unwrap();
        prop_assert!(worse.snr_linear < best.snr_linear);
    }

    #[test]
    fn coefficient_invariants(amp in 0.0f64..10.0, phase in -100.0f64..100.0) {
        let c = ComplexCoefficient::new(amp, phase).unwrap();
        prop_assert!(c.amplitude >= 0.0 && (-PI..PI).contains(&c.phase));
        let back = ComplexCoefficient::from_complex(c.to_complex());
        prop_assert!((back.amplitude - amp).abs() < 1e-9);
    }
}
