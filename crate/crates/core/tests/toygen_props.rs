//! Property tests for the toy generator: determinism under batching,
//! conservation laws for every process, and validity of smeared events
//! across the parameter space.

use hepdesk_core::event::validate_event;
use hepdesk_core::kinematics::wrap_phi;
use hepdesk_core::toygen::{
    generate_truth, smear_detector, weight_events, DetectorParams, Process, ProcessParams,
};
use proptest::prelude::*;

fn any_process() -> impl Strategy<Value = Process> {
    prop_oneof![
        Just(Process::ZToMuMu),
        Just(Process::WToMuNu),
        Just(Process::Multijet),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn truth_is_transversely_balanced(process in any_process(), seed in 0u64..1_000_000) {
        let p = ProcessParams::defaults(process);
        for e in generate_truth(8, &p, seed).unwrap() {
            let mut sx = 0.0;
            let mut sy = 0.0;
            for t in &e.mc_truth {
                sx += t.pt * t.phi.cos();
                sy += t.pt * t.phi.sin();
            }
            prop_assert!(sx.hypot(sy) < 1e-9, "imbalance {}", sx.hypot(sy));
            prop_assert!(validate_event(&e).is_valid());
        }
    }

    #[test]
    fn truth_conserves_charge(process in any_process(), seed in 0u64..1_000_000) {
        let p = ProcessParams::defaults(process);
        for e in generate_truth(8, &p, seed).unwrap() {
            let total: i32 = e
                .mc_truth
                .iter()
                .map(|t| match t.pdg_id.0 {
                    13 => -1,          // mu-
                    -13 => 1,          // mu+
                    _ => 0,            // neutrinos, gluon-like partons
                })
                .sum();
            match process {
                Process::ZToMuMu | Process::Multijet => {
                    // Dimuon pairs are opposite-sign; multijet soft muons are
                    // single and unbalanced by construction.
                    if process == Process::ZToMuMu {
                        prop_assert_eq!(total, 0);
                    }
                }
                Process::WToMuNu => prop_assert_eq!(total.abs(), 1),
            }
        }
    }

    #[test]
    fn batching_does_not_change_events(
        process in any_process(),
        seed in 0u64..1_000_000,
        short in 1usize..10,
    ) {
        let p = ProcessParams::defaults(process);
        let long = generate_truth(10, &p, seed).unwrap();
        let prefix = generate_truth(short, &p, seed).unwrap();
        prop_assert_eq!(&long[..short], &prefix[..]);
    }

    #[test]
    fn smearing_is_deterministic_and_valid(
        seed in 0u64..1_000_000,
        eff in 0.5f64..1.0,
        pileup in 0.0f64..6.0,
        fake_rate in 0.0f64..1.5,
    ) {
        let p = ProcessParams::defaults(Process::ZToMuMu);
        let truth = generate_truth(5, &p, seed).unwrap();
        let d = DetectorParams {
            muon_efficiency: eff,
            pileup_mean: pileup,
            fake_soft_rate: fake_rate,
            seed,
            ..DetectorParams::default()
        };
        let a = smear_detector(&truth, &d).unwrap();
        let b = smear_detector(&truth, &d).unwrap();
        prop_assert_eq!(&a, &b);
        for e in &a {
            let report = validate_event(e);
            prop_assert!(report.is_valid(), "{:?}", report.violations);
            prop_assert!(!e.vertices.is_empty());
            // Stored MET is the recomputed PF imbalance.
            let (met, met_phi) = hepdesk_core::kinematics::met_from_objects(
                e.pf.iter().map(|o| (o.pt, o.phi)),
            );
            prop_assert!((e.meta.met_pt - met).abs() <= 1e-12 * met.max(1.0));
            if met > 1e-9 {
                prop_assert!(wrap_phi(e.meta.met_phi - met_phi).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn weights_require_positive_finite_scale(scale in prop::num::f64::ANY) {
        let p = ProcessParams::defaults(Process::WToMuNu);
        let events = generate_truth(2, &p, 1).unwrap();
        let out = weight_events(events.clone(), scale);
        if scale.is_finite() && scale > 0.0 {
            let w = out.unwrap();
            prop_assert_eq!(w.weight, scale);
            prop_assert_eq!(w.events, events);
        } else {
            prop_assert!(out.is_err());
        }
    }
}
