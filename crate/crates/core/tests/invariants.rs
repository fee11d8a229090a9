//! Property tests for the structural invariants: conservation laws of the
//! learning machine, analysis estimator ranges, pairing invariances, and
//! bit-exact persistence.

use epsim_core::analysis::{chsh, count_coincidences, AnalysisConfig};
use epsim_core::dataset::{read_dataset_from, DatasetWriter, EventRecord, StationDataset};
use epsim_core::dlm::{closed_form_x, Channel, DlmBeamSplitter};
use epsim_core::eprb::{run_experiment, ExperimentConfig, SourceMode, StationConfig};
use epsim_core::message::PhaseMessage;
use proptest::prelude::*;

fn channels() -> impl Strategy<Value = Vec<Channel>> {
    proptest::collection::vec(
        prop_oneof![Just(Channel::C0), Just(Channel::C1)],
        0..400,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn probability_vector_is_preserved(
        alpha in 0.01f64..0.99,
        events in channels(),
        phases in proptest::collection::vec(-10.0f64..10.0, 0..400),
    ) {
        let mut bs = DlmBeamSplitter::new(alpha).unwrap();
        for (i, &ev) in events.iter().enumerate() {
            let psi = phases.get(i).copied().unwrap_or(0.0);
            bs.store_and_learn(ev, PhaseMessage::from_angle(psi));
            let [x0, x1] = bs.x();
            prop_assert!(x0 >= 0.0 && x1 >= 0.0);
            prop_assert!((x0 + x1 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn candidate_norms_sum_to_one(
        alpha in 0.01f64..0.99,
        events in channels(),
        phases in proptest::collection::vec(-10.0f64..10.0, 400),
    ) {
        let mut bs = DlmBeamSplitter::new(alpha).unwrap();
        for (i, &ev) in events.iter().enumerate() {
            bs.store_and_learn(ev, PhaseMessage::from_angle(phases[i]));
            let pair = bs.transform();
            prop_assert!((pair.w_norm_sq() + pair.z_norm_sq() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_tracks_recursion(
        alpha in 0.01f64..0.999,
        events in channels(),
    ) {
        let mut bs = DlmBeamSplitter::new(alpha).unwrap();
        for &ev in &events {
            bs.store_and_learn(ev, PhaseMessage::from_angle(0.0));
        }
        let closed = closed_form_x([0.5, 0.5], &events, alpha);
        prop_assert!((closed[0] - bs.x()[0]).abs() < 1e-12);
        prop_assert!((closed[1] - bs.x()[1]).abs() < 1e-12);
    }

    #[test]
    fn rotations_preserve_norm_and_invert(
        psi in -10.0f64..10.0,
        phi in -10.0f64..10.0,
    ) {
        let y = PhaseMessage::from_angle(psi);
        let r = y.rotated(phi);
        prop_assert!((r.norm_sq() - 1.0).abs() < 1e-12);
        let back = r.rotated(-phi);
        prop_assert!((back.y1() - y.y1()).abs() < 1e-12);
        prop_assert!((back.y2() - y.y2()).abs() < 1e-12);
    }

    #[test]
    fn estimator_ranges_hold(counts in proptest::collection::vec(0u64..500, 4)) {
        let mut d1 = empty_dataset(1, 1);
        let mut d2 = empty_dataset(2, 1);
        let mut n = 1u64;
        for (slot, &c) in counts.iter().enumerate() {
            let (x, y) = [(1, 1), (1, -1), (-1, 1), (-1, -1)][slot];
            for _ in 0..c {
                d1.records.push(record(n, 1, x, 0.5));
                d2.records.push(record(n, 1, y, 0.5));
                n += 1;
            }
        }
        prop_assume!(n > 1);
        let cfg = AnalysisConfig::new(0.01, 2.0).unwrap();
        let table = count_coincidences(&d1, &d2, &cfg).unwrap();
        let stats = table.stats(1, 1).unwrap();
        prop_assert!(stats.e.abs() <= 1.0 && stats.e1.abs() <= 1.0 && stats.e2.abs() <= 1.0);
        if let Some(rho) = stats.rho {
            prop_assert!(rho.abs() <= 1.0 + 1e-12);
        }
        let r = chsh(&table.e_matrix()).unwrap();
        prop_assert!(r.smax <= 4.0);
    }
}

fn record(n: u64, m: u32, x: i8, t: f64) -> EventRecord {
    EventRecord {
        n,
        m,
        x,
        t,
        gamma_deg: 0.0,
    }
}

fn empty_dataset(station: u8, settings: u32) -> StationDataset {
    StationDataset {
        station,
        angles_deg: (0..settings).map(|k| f64::from(k) * 15.0).collect(),
        t0: 1.0,
        d: 2.0,
        seed: 0,
        records: Vec::new(),
    }
}

fn experiment(seed: u64, events: u64) -> (StationDataset, StationDataset) {
    let cfg = ExperimentConfig {
        events,
        mode: SourceMode::SingletRandom,
        station1: StationConfig::new(vec![0.0, 30.0, 120.0], 1.0, 2.0).unwrap(),
        station2: StationConfig::new(vec![22.5, 67.5], 1.0, 2.0).unwrap(),
        seed,
    };
    run_experiment(&cfg).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn coincidences_monotone_in_window(seed in 0u64..5000) {
        let (d1, d2) = experiment(seed, 3000);
        let mut last = 0;
        for w in [0.001, 0.005, 0.02, 0.1, 0.5, 1.0, 2.5] {
            let cfg = AnalysisConfig::new(0.001, w).unwrap();
            let total = count_coincidences(&d1, &d2, &cfg).unwrap().total();
            prop_assert!(total >= last, "w={w}: {total} < {last}");
            last = total;
        }
        prop_assert_eq!(last, 3000); // W >= t0 counts every pair
    }

    #[test]
    fn shuffling_records_leaves_by_index_results_unchanged(
        seed in 0u64..5000,
        rotation in 1usize..999,
    ) {
        let (d1, d2) = experiment(seed, 1000);
        let cfg = AnalysisConfig::new(0.00025, 0.01).unwrap();
        let base = count_coincidences(&d1, &d2, &cfg).unwrap();

        let mut shuffled = d2.clone();
        let len = shuffled.records.len();
        shuffled.records.rotate_left(rotation % len);
        shuffled.records.reverse();
        let same = count_coincidences(&d1, &shuffled, &cfg).unwrap();
        prop_assert_eq!(base, same);
    }

    #[test]
    fn dataset_round_trip_is_bit_exact(seed in 0u64..5000) {
        let (d1, _) = experiment(seed, 500);
        let mut buf = Vec::new();
        let cfg = StationConfig {
            angles_deg: d1.angles_deg.clone(),
            t0: d1.t0,
            d: d1.d,
        };
        let mut w = DatasetWriter::new(&mut buf, d1.station, &cfg, d1.seed, 500, None).unwrap();
        for r in &d1.records {
            w.write_record(r).unwrap();
        }
        w.finish().unwrap();
        let back = read_dataset_from(buf.as_slice()).unwrap();
        prop_assert_eq!(&back, &d1);
        for (a, b) in d1.records.iter().zip(&back.records) {
            prop_assert_eq!(a.t.to_bits(), b.t.to_bits());
        }
    }

    #[test]
    fn replay_is_bit_identical(seed in 0u64..5000) {
        let (a1, a2) = experiment(seed, 400);
        let (b1, b2) = experiment(seed, 400);
        prop_assert_eq!(a1, b1);
        prop_assert_eq!(a2, b2);
    }
}
