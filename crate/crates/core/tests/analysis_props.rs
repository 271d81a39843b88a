//! Property tests for selection and histogramming against brute-force
//! oracles: masks match a sequential re-evaluation, cutflows telescope,
//! weight is conserved through binning, and images conserve transverse
//! momentum.

use hepdesk_core::analysis::{
    apply_selection, eta_phi_image, evaluate_quantity, fill_histogram, multiplicity_histogram,
    normalize_to_unity, EvalContext, ObjectCollection, SelectionSpec,
};
use hepdesk_core::event::{Event, Muon};
use proptest::prelude::*;

fn muon(pt: f64, eta: f64, phi: f64) -> Muon {
    Muon {
        pt,
        pt_err: 0.0,
        eta,
        phi,
        charge: 1,
        sta_pt: pt,
        sta_eta: eta,
        sta_phi: phi,
        trk_iso03: 0.5,
        ecal_iso03: 0.0,
        hcal_iso03: 0.0,
    }
}

fn event_strategy() -> impl Strategy<Value = Event> {
    (
        prop::collection::vec((0.1f64..80.0, -2.4f64..2.4, -3.1f64..3.1), 0..5),
        0.0f64..120.0,
    )
        .prop_map(|(muons, met)| {
            let mut e = Event::empty(1);
            e.muons = muons.iter().map(|&(pt, eta, phi)| muon(pt, eta, phi)).collect();
            e.meta.met_pt = met;
            e
        })
}

const SPEC_TEXT: &str = "\
n_mu   reco_muon_count >= 1
mu_pt  leading_muon_pt > 25
met    met_pt > 30
iso    leading_muon_reliso < 0.1
";

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mask_matches_sequential_oracle(
        events in prop::collection::vec(event_strategy(), 0..40),
    ) {
        let spec = SelectionSpec::parse(SPEC_TEXT).unwrap();
        let ctx = EvalContext::default();
        let (mask, flow) = apply_selection(&events, &spec, 1.0, &ctx);

        // Oracle: evaluate every cut on every event, one at a time.
        let oracle: Vec<bool> = events
            .iter()
            .map(|e| {
                spec.cuts.iter().all(|cut| {
                    evaluate_quantity(e, &cut.quantity, &ctx)
                        .map(|v| cut.comparator.apply(v, cut.threshold))
                        .unwrap_or(false)
                })
            })
            .collect();
        prop_assert_eq!(&mask, &oracle);

        // Telescoping and final-count agreement.
        for pair in flow.rows.windows(2) {
            prop_assert_eq!(pair[0].events_passed, pair[1].events_in);
        }
        if let Some(last) = flow.rows.last() {
            prop_assert_eq!(last.events_passed as usize, mask.iter().filter(|&&m| m).count());
            prop_assert_eq!(flow.rows[0].events_in as usize, events.len());
        }
    }

    #[test]
    fn mask_commutes_with_event_reversal(
        events in prop::collection::vec(event_strategy(), 0..30),
    ) {
        let spec = SelectionSpec::parse(SPEC_TEXT).unwrap();
        let ctx = EvalContext::default();
        let (mask, _) = apply_selection(&events, &spec, 1.0, &ctx);
        let reversed: Vec<Event> = events.iter().rev().cloned().collect();
        let (mask_rev, _) = apply_selection(&reversed, &spec, 1.0, &ctx);
        let mut mask_back: Vec<bool> = mask_rev.clone();
        mask_back.reverse();
        prop_assert_eq!(mask, mask_back);
    }

    #[test]
    fn histograms_conserve_total_weight(
        values in prop::collection::vec(-50.0f64..150.0, 0..200),
        weights in prop::collection::vec(0.0f64..5.0, 200),
        n_bins in 1usize..30,
    ) {
        let weights = &weights[..values.len()];
        let edges: Vec<f64> = (0..=n_bins).map(|k| k as f64 * 100.0 / n_bins as f64).collect();
        let h = fill_histogram(&values, Some(weights), &edges).unwrap();
        let total: f64 = h.contents.iter().sum::<f64>() + h.underflow + h.overflow;
        let expected: f64 = weights.iter().sum();
        prop_assert!((total - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn filling_is_additive_over_concatenation(
        a in prop::collection::vec(0.0f64..10.0, 0..50),
        b in prop::collection::vec(0.0f64..10.0, 0..50),
    ) {
        let edges: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        let ha = fill_histogram(&a, None, &edges).unwrap();
        let hb = fill_histogram(&b, None, &edges).unwrap();
        let mut all = a.clone();
        all.extend_from_slice(&b);
        let hall = fill_histogram(&all, None, &edges).unwrap();
        for bin in 0..hall.n_bins() {
            let sum = ha.contents[bin] + hb.contents[bin];
            prop_assert!((hall.contents[bin] - sum).abs() <= 1e-12 * sum.max(1.0));
        }
    }

    #[test]
    fn normalization_is_idempotent(
        values in prop::collection::vec(0.0f64..10.0, 1..100),
    ) {
        let edges: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        let h = fill_histogram(&values, None, &edges).unwrap();
        let n1 = normalize_to_unity(&h).unwrap();
        prop_assert!((n1.area() - 1.0).abs() <= 1e-12);
        let n2 = normalize_to_unity(&n1).unwrap();
        for bin in 0..n1.n_bins() {
            prop_assert!((n1.contents[bin] - n2.contents[bin]).abs()
                <= 1e-12 * n1.contents[bin].max(1.0));
        }
    }

    #[test]
    fn images_conserve_in_range_pt(events in prop::collection::vec(event_strategy(), 1..10)) {
        let eta_range = (-4.0, 4.0);
        let phi_range = (-std::f64::consts::PI, std::f64::consts::PI);
        for e in &events {
            let img = eta_phi_image(e, ObjectCollection::Muons, 24, 24, eta_range, phi_range)
                .unwrap();
            let total: f64 = img.pixels.iter().sum();
            let expected: f64 = e
                .muons
                .iter()
                .filter(|m| {
                    m.eta >= eta_range.0
                        && m.eta <= eta_range.1
                        && m.phi >= phi_range.0
                        && m.phi <= phi_range.1
                })
                .map(|m| m.pt)
                .sum();
            prop_assert!((total - expected).abs() <= 1e-9 * expected.max(1e-12));
            // Pixel count never exceeds the number of contributing objects.
            let nonzero = img.pixels.iter().filter(|&&p| p > 0.0).count();
            prop_assert!(nonzero <= e.muons.len());
        }
    }

    #[test]
    fn multiplicities_count_every_event_once(
        events in prop::collection::vec(event_strategy(), 1..30),
        cutoff in 0.0f64..50.0,
    ) {
        let h = multiplicity_histogram(&events, ObjectCollection::Muons, cutoff).unwrap();
        let total: f64 = h.contents.iter().sum::<f64>() + h.underflow + h.overflow;
        prop_assert!((total - events.len() as f64).abs() <= 1e-12 * events.len() as f64);
        // Bin k holds the events with exactly k objects above the cutoff.
        for (k, &content) in h.contents.iter().enumerate() {
            let expected = events
                .iter()
                .filter(|e| e.muons.iter().filter(|m| m.pt > cutoff).count() == k)
                .count() as f64;
            prop_assert!((content - expected).abs() <= 1e-12 * expected.max(1.0));
        }
    }
}
