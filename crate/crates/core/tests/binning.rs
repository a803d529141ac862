use mippdpg::binning::{bin_events, count_events, exact_binned_mean, IntensityKind, UnfoldedIntensity};
use mippdpg::io::{read_container, unfolded_from_container, unfolded_to_container, write_container};
use mippdpg::model::{build_block_model, BlockModelSpec};
use mippdpg::simulate::{integrated_intensity, Event, EventStream};
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smallest `k` with `t <= k / M`, by linear scan.
fn brute_bin(t: f64, m: usize) -> usize {
    (1..=m).find(|&k| t <= k as f64 / m as f64).unwrap() - 1
}

fn random_stream(count: usize, n: usize, l: usize, seed: u64) -> EventStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events: Vec<Event> = (0..count)
        .map(|_| Event {
            src: rng.gen_range(0..n),
            dst: rng.gen_range(0..n),
            layer: rng.gen_range(0..l),
            time: 1.0 - rng.gen::<f64>(),
        })
        .collect();
    // exact bin edges are the interesting case
    for (k, e) in events.iter_mut().take(50).enumerate() {
        e.time = ((k % 25) + 1) as f64 / 25.0;
    }
    EventStream::new(events, n, l, None).unwrap()
}

#[test]
fn ten_thousand_events_recount() {
    let (n, l, m) = (7, 3, 25);
    let s = random_stream(10_000, n, l, 3);
    let lam = bin_events::<f64>(&s, m).unwrap();
    assert_eq!(lam.data().dim(), (n * m, n * l));
    assert_eq!(lam.data().sum(), 25.0 * 10_000.0);
    let mut oracle = Array2::<f64>::zeros((n * m, n * l));
    for e in s.events() {
        oracle[[brute_bin(e.time, m) * n + e.src, e.layer * n + e.dst]] += m as f64;
    }
    assert_eq!(lam.data(), &oracle);
}

#[test]
fn coarsening_matches_direct_binning() {
    let s = random_stream(5_000, 4, 2, 9);
    let fine = count_events(&s, 30).unwrap();
    for factor in [2, 3, 5, 6] {
        assert_eq!(fine.coarsen(factor).unwrap(), count_events(&s, 30 / factor).unwrap());
    }
    assert!(fine.coarsen(7).is_err());
}

#[test]
fn exact_mean_is_product_of_binned_positions() {
    for spec in [BlockModelSpec::smooth_default(), BlockModelSpec::discontinuous_default()] {
        let model = build_block_model(&spec, 9, 3).unwrap();
        let m = 8;
        let (lam, xt) = exact_binned_mean::<f64>(&model, m).unwrap();
        assert_eq!(lam.kind(), IntensityKind::ExactMean);
        let prod = xt.data().dot(&model.layer_positions().t());
        let scale = lam.data().iter().fold(0.0f64, |a, x| a.max(x.abs()));
        for ((r, c), &v) in lam.data().indexed_iter() {
            assert!((v - prod[[r, c]]).abs() <= 1e-10 * scale);
            // and matches M times the integrated rate over the bin
            let (bm, i, l, j) = (r / 9, r % 9, c / 9, c % 9);
            let a = bm as f64 / m as f64;
            let b = (bm + 1) as f64 / m as f64;
            let direct = m as f64 * integrated_intensity(&model, i, j, l, a, b).unwrap();
            assert!((v - direct).abs() <= 1e-10 * scale, "({r}, {c}): {v} vs {direct}");
        }
    }
}

#[test]
fn out_of_window_times_are_data_errors() {
    let ev = |t| Event { src: 0, dst: 0, layer: 0, time: t };
    assert!(EventStream::new(vec![ev(0.0)], 1, 1, None).is_err());
    assert!(EventStream::new(vec![ev(1.5)], 1, 1, None).is_err());
    assert!(EventStream::new(vec![ev(1.0)], 1, 1, None).is_ok());
}

proptest! {
    #[test]
    fn container_round_trip_is_bit_exact(n in 1usize..5, m in 1usize..5, l in 1usize..4, seed in any::<u64>(), exact in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = Array2::from_shape_fn((n * m, n * l), |_| f64::from_bits(rng.gen::<u64>() >> 2));
        let kind = if exact { IntensityKind::ExactMean } else { IntensityKind::Empirical };
        let u = UnfoldedIntensity::new(data, n, m, l, kind).unwrap();
        let mut buf = Vec::new();
        write_container(&mut buf, &unfolded_to_container(&u)).unwrap();
        let back: UnfoldedIntensity<f64> = unfolded_from_container(&read_container(&buf[..]).unwrap()).unwrap();
        prop_assert_eq!(back.kind(), kind);
        prop_assert_eq!((back.n_nodes(), back.n_bins(), back.n_layers()), (n, m, l));
        let same = back.data().iter().zip(u.data().iter()).all(|(a, b)| a.to_bits() == b.to_bits());
        prop_assert!(same);
    }
}
