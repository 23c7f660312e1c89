//! Property tests of cross-module invariants, through the public API.

use macpir_core::channel::{draw_fading, transmit_mac, ChannelState};
use macpir_core::harness::{Command, ConfigLayer, Grid};
use macpir_core::lattice::{FieldVector, NestedLatticePair};
use macpir_core::partition::{partition, partition_differencing, partition_exact, PartitionMethod};
use macpir_core::pir::{alpha_opt, form_answer, gen_queries, make_transmit};
use macpir_core::rates::{r_eq, sum_capacity};
use macpir_core::rng::stream;
use macpir_core::spir::{nokey_round_trip, SphereCodebook};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn noiseless_channel_is_linear(
        g in prop::collection::vec(0.1f64..3.0, 2),
        a in prop::collection::vec(-5.0f64..5.0, 4),
        b in prop::collection::vec(-5.0f64..5.0, 4),
        c in -3.0f64..3.0,
    ) {
        let mut rng = stream(0, 0);
        let zero = [0.0; 4];
        let ya = transmit_mac(&[(g[0], &a), (g[1], &zero)], false, &mut rng).unwrap();
        let yb = transmit_mac(&[(g[0], &zero), (g[1], &b)], false, &mut rng).unwrap();
        let ca: Vec<f64> = a.iter().map(|x| c * x).collect();
        let y = transmit_mac(&[(g[0], &ca), (g[1], &b)], false, &mut rng).unwrap();
        for j in 0..4 {
            prop_assert!((y[j] - (c * ya[j] + yb[j])).abs() < 1e-9);
        }
    }

    #[test]
    fn scaled_group_two_never_gains_power(n_dbs in 2usize..10, seed in 0u64..10_000, p in 1.0f64..200.0) {
        let mut rng = stream(seed, 0);
        let h = draw_fading(n_dbs, &mut rng).unwrap();
        let w: Vec<f64> = h.iter().map(|x| x.abs()).collect();
        let part = partition(&w, PartitionMethod::Exact, &mut rng).unwrap();
        let state = ChannelState::new(h, p, part).unwrap();
        let scale = state.gain1() / state.gain2();
        prop_assert!(scale > 0.0 && scale <= 1.0);
        let pair = NestedLatticePair::for_power(p, 11, 8).unwrap();
        let msgs = vec![FieldVector::random(8, 11, &mut rng).unwrap(), FieldVector::random(8, 11, &mut rng).unwrap()];
        let (_, q2, _) = gen_queries(0, 2, &mut rng).unwrap();
        let ans = form_answer(&q2, &msgs, &pair).unwrap();
        let d = pair.sample_dither(&mut rng);
        let plain = make_transmit(&ans, &d, 1.0, &pair).unwrap();
        let scaled = make_transmit(&ans, &d, scale, &pair).unwrap();
        prop_assert!(scaled.power() <= plain.power() + 1e-12);
        // Points of the coarse Voronoi cube have per-coordinate magnitude at most √(3P).
        prop_assert!(plain.power() <= 3.0 * p * (1.0 + 1e-12));
    }

    #[test]
    fn exact_gain_is_monotone_and_dominates(w in prop::collection::vec(0.0f64..3.0, 2..12), extra in 0.0f64..3.0) {
        let base = partition_exact(&w).unwrap();
        let mut grown = w.clone();
        grown.push(extra);
        let bigger = partition_exact(&grown).unwrap();
        prop_assert!(bigger.gain1() >= base.gain1() - 1e-12);
        let kk = partition_differencing(&w).unwrap();
        prop_assert!(base.gain1() >= kk.gain1() - 1e-12 && kk.gain1() >= 0.0);
    }

    #[test]
    fn r_eq_matches_mmse_noise(h1 in 0.05f64..5.0, p in 0.01f64..1e4) {
        let (_, s2) = alpha_opt(p, h1).unwrap();
        let arg = p / s2;
        prop_assume!(arg > 1.0);
        let via_noise = 0.5 * arg.log2();
        prop_assert!((r_eq(h1, p) - via_noise).abs() <= 1e-12 * via_noise.max(1.0));
    }

    #[test]
    fn power_quadrupling_adds_one_bit(h1 in 0.5f64..3.0, p in 1e4f64..1e8) {
        let d = r_eq(h1, 4.0 * p) - r_eq(h1, p);
        prop_assert!(d <= 1.0 && d > 1.0 - 1e-3);
    }

    #[test]
    fn capacity_dominates_on_drawn_channels(n_dbs in 2usize..20, seed in 0u64..10_000, p in 0.01f64..1e3) {
        let mut rng = stream(seed, 1);
        let h = draw_fading(n_dbs, &mut rng).unwrap();
        let w: Vec<f64> = h.iter().map(|x| x.abs()).collect();
        for method in [PartitionMethod::Exact, PartitionMethod::Differencing, PartitionMethod::RandomHalf] {
            let part = partition(&w, method, &mut rng).unwrap();
            prop_assert!(sum_capacity(&h, p) >= r_eq(part.gain1(), p));
        }
    }

    #[test]
    fn answers_cancel_to_the_requested_message(
        m in 1usize..9,
        p in prop::sample::select(vec![5u64, 7, 11, 13]),
        seed in 0u64..10_000,
    ) {
        let mut rng = stream(seed, 2);
        let pair = NestedLatticePair::new(2, p, 1.0).unwrap();
        let msgs: Vec<FieldVector> = (0..m).map(|_| FieldVector::random(2, p, &mut rng).unwrap()).collect();
        let index = (seed as usize) % m;
        let (q1, q2, sign) = gen_queries(index, m, &mut rng).unwrap();
        let a1 = form_answer(&q1, &msgs, &pair).unwrap();
        let a2 = form_answer(&q2, &msgs, &pair).unwrap();
        let sum = a1.raw_combo().add(a2.raw_combo()).unwrap();
        let target = if sign { msgs[index].clone() } else { msgs[index].neg() };
        prop_assert_eq!(sum, target);
    }

    #[test]
    fn nokey_residual_is_scaled_noise(
        m in prop::sample::select(vec![2usize, 4, 8]),
        dim in 1usize..4,
        p in 2.0f64..50.0,
        seed in 0u64..10_000,
    ) {
        let cb = SphereCodebook::new(dim, p, m).unwrap();
        let mut rng = stream(seed, 3);
        let msgs: Vec<Vec<i64>> = (0..m).map(|_| cb.sample(&mut rng).unwrap()).collect();
        let out = nokey_round_trip(&msgs, seed as usize % m, &cb, true, &mut rng).unwrap();
        let half_root_m = (m as f64).sqrt() / 2.0;
        for (r, z) in out.residual.iter().zip(&out.noise) {
            prop_assert_eq!(r.to_bits(), (half_root_m * z).to_bits());
        }
    }

    #[test]
    fn config_echo_round_trips(
        seed in any::<u64>(),
        trials in 1u64..100_000,
        n_dbs in prop::collection::vec(2usize..100, 1..4),
        power in prop::collection::vec(0.001f64..1e4, 1..4),
        noise in any::<bool>(),
    ) {
        let layer = ConfigLayer {
            seed: Some(seed),
            trials: Some(trials),
            n_dbs: Some(Grid(n_dbs)),
            power: Some(Grid(power)),
            noise: Some(noise),
            ..Default::default()
        };
        for command in Command::ALL {
            let cfg = layer.clone().resolve(command).unwrap();
            let text = toml::to_string(&cfg.echo()).unwrap();
            let back = ConfigLayer::from_toml_str(&text).unwrap().resolve(command).unwrap();
            prop_assert_eq!(back.echo(), cfg.echo());
        }
    }
}
