//! Property tests for the clustering: partition correctness, momentum
//! conservation per jet, ordering, and infrared/collinear behavior.

use hepdesk_core::jetclust::{cluster_antikt, ClusterConfig, Particle};
use hepdesk_core::kinematics::FourVector;
use proptest::prelude::*;

fn particle_strategy() -> impl Strategy<Value = Particle> {
    (0.5f64..300.0, -4.0f64..4.0, -3.1f64..3.1, 0.0f64..2.0).prop_map(|(pt, eta, phi, mass)| {
        Particle { pt, eta, phi, mass }
    })
}

fn config() -> ClusterConfig {
    ClusterConfig {
        r_param: 0.4,
        min_jet_pt: 0.0,
    }
}

/// Constituent multiset of each jet, sorted for comparison.
fn partitions(jets: &[hepdesk_core::jetclust::ProtoJet]) -> Vec<Vec<usize>> {
    let mut p: Vec<Vec<usize>> = jets.iter().map(|j| j.constituents.clone()).collect();
    p.sort();
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jets_partition_the_input(
        particles in prop::collection::vec(particle_strategy(), 1..40),
    ) {
        let jets = cluster_antikt(&particles, &config()).unwrap();
        let mut seen = vec![false; particles.len()];
        for jet in &jets {
            for &c in &jet.constituents {
                prop_assert!(!seen[c], "constituent {c} assigned twice");
                seen[c] = true;
            }
        }
        prop_assert!(seen.iter().all(|&s| s), "some particles were dropped");
    }

    #[test]
    fn jet_momentum_is_the_constituent_sum(
        particles in prop::collection::vec(particle_strategy(), 1..30),
    ) {
        let jets = cluster_antikt(&particles, &config()).unwrap();
        for jet in &jets {
            let mut sum = FourVector::new(0.0, 0.0, 0.0, 0.0);
            for &c in &jet.constituents {
                let p = &particles[c];
                sum = sum.add(&FourVector::from_pt_eta_phi_mass(p.pt, p.eta, p.phi, p.mass).unwrap());
            }
            let scale = sum.e.abs().max(1.0);
            prop_assert!((jet.p4.e - sum.e).abs() <= 1e-9 * scale);
            prop_assert!((jet.p4.px - sum.px).abs() <= 1e-9 * scale);
            prop_assert!((jet.p4.py - sum.py).abs() <= 1e-9 * scale);
            prop_assert!((jet.p4.pz - sum.pz).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn jets_come_out_pt_ordered_and_filtered(
        particles in prop::collection::vec(particle_strategy(), 1..30),
        min_pt in 0.0f64..20.0,
    ) {
        let cfg = ClusterConfig { r_param: 0.4, min_jet_pt: min_pt };
        let jets = cluster_antikt(&particles, &cfg).unwrap();
        for pair in jets.windows(2) {
            prop_assert!(pair[0].pt() >= pair[1].pt());
        }
        for jet in &jets {
            prop_assert!(jet.pt() >= min_pt);
        }
    }

    #[test]
    fn far_soft_radiation_does_not_reshape_hard_jets(
        particles in prop::collection::vec(
            // Particles confined to eta in [-1, 1], phi in [-1, 1].
            (0.5f64..300.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(pt, eta, phi)| Particle {
                pt, eta, phi, mass: 0.0,
            }),
            1..20,
        ),
        soft_pt in 1e-7f64..1e-5,
    ) {
        let base = cluster_antikt(&particles, &config()).unwrap();
        // Add soft radiation more than 2R away from every input: it cannot
        // join any existing jet, so the hard partition must be unchanged.
        let mut extended = particles.clone();
        extended.push(Particle { pt: soft_pt, eta: 3.5, phi: -3.0, mass: 0.0 });
        let with_soft = cluster_antikt(&extended, &config()).unwrap();

        let mut base_parts = partitions(&base);
        let mut soft_parts = partitions(&with_soft);
        // Drop the soft particle's own jet before comparing.
        soft_parts.retain(|c| c != &vec![particles.len()]);
        base_parts.sort();
        soft_parts.sort();
        prop_assert_eq!(base_parts, soft_parts);
    }

    #[test]
    fn collinear_splitting_preserves_the_leading_jet(
        particles in prop::collection::vec(particle_strategy(), 2..15),
        frac in 0.1f64..0.9,
    ) {
        let jets = cluster_antikt(&particles, &config()).unwrap();
        prop_assume!(!jets.is_empty());
        let lead = &jets[0];

        // Split the hardest constituent into two exactly collinear pieces at
        // the same (eta, phi). They recombine first (their pair distance is
        // exactly zero) into an aggregate with the same transverse momentum
        // and direction, so the rest of the sequence is unchanged.
        let hard = *lead.constituents.iter().max_by(|&&a, &&b| {
            particles[a].pt.partial_cmp(&particles[b].pt).unwrap()
        }).unwrap();
        let mut split = particles.clone();
        let original = split[hard];
        split[hard] = Particle { pt: original.pt * frac, mass: 0.0, ..original };
        split.push(Particle { pt: original.pt * (1.0 - frac), mass: 0.0, ..original });

        let jets_split = cluster_antikt(&split, &config()).unwrap();
        prop_assert!(!jets_split.is_empty());
        let lead_split = &jets_split[0];
        prop_assert!(
            (lead_split.pt() - lead.pt()).abs() <= 1e-9 * lead.pt(),
            "{} vs {}", lead_split.pt(), lead.pt()
        );
    }
}
