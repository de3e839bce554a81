//! Randomized invariants: parsing, file round trips, index maps, and the
//! small algebraic helpers that everything else leans on.

use num_complex::Complex;
use proptest::collection::vec;
use proptest::prelude::*;

use wipr::cli::{pair_axes, parse_float_list, parse_index_list};
use wipr::inversion::{read_csv, stopping_check, write_csv, IterationRecord, Mode};
use wipr::io::{read_data, read_model, write_data, write_model, ObservedData};
use wipr::model::{sq_slowness_to_velocity, velocity_to_sq_slowness};
use wipr::phase_retrieval::unit_phase;
use wipr::regularization::isotropic_shrink;
use wipr::Grid64;

proptest! {
    #[test]
    fn shrink_never_grows_and_kills_small_inputs(
        gx in -1e6f64..1e6,
        gz in -1e6f64..1e6,
        tau in 0.0f64..1e6,
    ) {
        let (ox, oz) = isotropic_shrink(gx, gz, tau);
        let r = gx.hypot(gz);
        let out = ox.hypot(oz);
        if r <= tau {
            prop_assert_eq!((ox, oz), (0.0, 0.0));
        } else {
            prop_assert!((out - (r - tau)).abs() <= 1e-12 * r.max(1.0));
            prop_assert!((ox * gz - oz * gx).abs() <= 1e-12 * r * r);
            prop_assert!(ox * gx >= 0.0 && oz * gz >= 0.0);
        }
        prop_assert!(out <= r * (1.0 + 1e-15));
    }

    #[test]
    fn unit_phase_lies_on_the_circle(re in -1e3f64..1e3, im in -1e3f64..1e3) {
        let z = Complex::new(re, im);
        let (p, zeroed) = unit_phase(z);
        prop_assert!((p.norm() - 1.0).abs() <= 1e-12);
        if z == Complex::new(0.0, 0.0) {
            prop_assert!(zeroed);
            prop_assert_eq!(p, Complex::new(1.0, 0.0));
        } else {
            prop_assert!(!zeroed);
            let back = z * p.conj();
            prop_assert!(back.re >= 0.0);
            prop_assert!(back.im.abs() <= 1e-9 * z.norm());
        }
    }

    #[test]
    fn comma_lists_of_indices_round_trip(xs in vec(0usize..10_000, 1..20)) {
        let text = xs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        prop_assert_eq!(parse_index_list(&text).unwrap(), xs);
    }

    #[test]
    fn index_ranges_are_inclusive_progressions(
        start in 0usize..500,
        step in 1usize..9,
        count in 0usize..40,
    ) {
        let stop = start + step * count;
        let parsed = parse_index_list(&format!("{start}:{step}:{stop}")).unwrap();
        let expected: Vec<usize> = (0..=count).map(|k| start + k * step).collect();
        prop_assert_eq!(parsed, expected);
    }

    #[test]
    fn float_lists_round_trip_exactly(xs in vec(-1e6f64..1e6, 1..20)) {
        let text = xs.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(",");
        prop_assert_eq!(parse_float_list(&text).unwrap(), xs);
    }

    #[test]
    fn grid_indexing_is_a_bijection(nx in 3usize..60, nz in 3usize..60) {
        let g = Grid64::new(nx, nz, 12.5).unwrap();
        for i in 0..g.n() {
            let (ix, iz) = g.coords(i);
            prop_assert!(ix < nx && iz < nz);
            prop_assert_eq!(g.idx(ix, iz), i);
        }
    }

    #[test]
    fn axis_pairing_follows_the_broadcast_rule(
        xs in vec(0usize..100, 1..8),
        zs in vec(0usize..100, 1..8),
    ) {
        let out = pair_axes(&xs, &zs);
        if xs.len() == zs.len() {
            let expected: Vec<(usize, usize)> =
                xs.iter().copied().zip(zs.iter().copied()).collect();
            prop_assert_eq!(out.unwrap(), expected);
        } else if zs.len() == 1 {
            prop_assert_eq!(out.unwrap(), xs.iter().map(|&x| (x, zs[0])).collect::<Vec<_>>());
        } else if xs.len() == 1 {
            prop_assert_eq!(out.unwrap(), zs.iter().map(|&z| (xs[0], z)).collect::<Vec<_>>());
        } else {
            prop_assert!(out.is_err());
        }
    }

    #[test]
    fn velocity_and_slowness_invert_each_other(mut v in vec(100.0f64..10_000.0, 9..60)) {
        let nz = v.len() / 3;
        v.truncate(3 * nz);
        let g = Grid64::new(3, nz, 5.0).unwrap();
        let m = velocity_to_sq_slowness(g, &v).unwrap();
        let back = sq_slowness_to_velocity(&m);
        for (a, b) in v.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }
    }

    #[test]
    fn stopping_is_exactly_a_conjunction(
        s in 0.0f64..2.0,
        d in 0.0f64..2.0,
        es in 0.0f64..2.0,
        ed in 0.0f64..2.0,
    ) {
        prop_assert_eq!(stopping_check(s, d, es, ed), s <= es && d <= ed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn model_files_round_trip_bitwise(
        nx in 3usize..10,
        nz in 3usize..10,
        seed in 0u64..1000,
    ) {
        let g = Grid64::new(nx, nz, 17.25).unwrap();
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            1e-8 + (state % 1_000_000) as f64 * 1e-12
        };
        let values: Vec<f64> = (0..g.n()).map(|_| next()).collect();
        let m = wipr::model::ModelField::new(g, values.clone()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.wmod");
        write_model(&path, &m).unwrap();
        let back: wipr::ModelField64 = read_model(&path).unwrap();
        prop_assert_eq!(back.grid(), g);
        prop_assert_eq!(back.values(), values.as_slice());
    }

    #[test]
    fn data_files_round_trip_bitwise(
        nf in 1usize..4,
        ns in 1usize..4,
        nr in 1usize..6,
        seed in 0u64..1000,
    ) {
        let mut state = seed.wrapping_mul(0x2545F4914F6CDD1D).wrapping_add(3);
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state % 2_000_001) as f64 * 1e-6 - 1.0
        };
        let frequencies: Vec<f64> = (0..nf).map(|k| 3.0 + k as f64 * 1.5).collect();
        let samples: Vec<Vec<Vec<Complex<f64>>>> = (0..nf)
            .map(|_| {
                (0..ns)
                    .map(|_| (0..nr).map(|_| Complex::new(next(), next())).collect())
                    .collect()
            })
            .collect();
        let data = ObservedData { frequencies: frequencies.clone(), n_sources: ns, n_receivers: nr, samples };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.wdat");
        write_data(&path, &data).unwrap();
        let back: ObservedData<f64> = read_data(&path, &frequencies).unwrap();
        prop_assert_eq!(back.samples, data.samples);
        prop_assert_eq!(back.n_sources, ns);
        prop_assert_eq!(back.n_receivers, nr);
    }

    #[test]
    fn iteration_logs_round_trip_through_csv(
        seed in 0u64..u64::MAX,
        n in 1usize..12,
        with_me in any::<bool>(),
    ) {
        let mut state = seed | 1;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state % 1_000_000_007) as f64 * 1e-5
        };
        let records: Vec<IterationRecord> = (1..=n)
            .map(|i| IterationRecord {
                iter: i,
                freq_batch: i / 3,
                mode: if i % 2 == 0 { Mode::Irwri } else { Mode::Wipr },
                data_residual: next(),
                source_residual: next(),
                model_error: if with_me { Some(next()) } else { None },
                lambda: next() + 1e-9,
                seconds: 0.0,
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.csv");
        write_csv(&path, seed, &records).unwrap();
        let (seed_back, back) = read_csv(&path).unwrap();
        prop_assert_eq!(seed_back, seed);
        prop_assert_eq!(back, records);
    }
}
