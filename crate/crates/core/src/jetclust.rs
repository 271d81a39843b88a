//! Sequential-recombination jet clustering with the anti-kt measure.
//!
//! Pairwise distance d_ij = min(pt_i^-2, pt_j^-2) * ΔR_ij^2 / R^2 and beam
//! distance d_iB = pt_i^-2. The smallest distance wins each round: a pair win
//! merges the two pseudojets with four-vector addition (E scheme), a beam win
//! promotes the pseudojet to a final jet. Ties are broken by a fixed total
//! order (distance, beam before pair, then slot indices), so clustering is
//! deterministic for any input.

use thiserror::Error;

use crate::event::PFObject;
use crate::kinematics::{delta_r, FourVector};

#[derive(Debug, Error)]
pub enum JetClustError {
    #[error("particle {index}: {message}")]
    Domain { index: usize, message: String },
    #[error("constituent index {index} out of range (collection has {len} entries)")]
    Index { index: usize, len: usize },
    #[error("cluster radius must be positive and finite, got {0}")]
    BadRadius(f64),
}

/// Massive clustering input in hadron-collider coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub pt: f64,
    pub eta: f64,
    pub phi: f64,
    pub mass: f64,
}

impl From<&PFObject> for Particle {
    fn from(o: &PFObject) -> Self {
        Particle {
            pt: o.pt,
            eta: o.eta,
            phi: o.phi,
            mass: o.mass,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterConfig {
    /// Radius parameter R of the anti-kt measure.
    pub r_param: f64,
    /// Jets below this pt are dropped from the output.
    pub min_jet_pt: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            r_param: 0.4,
            min_jet_pt: 0.0,
        }
    }
}

/// A final jet: the E-scheme four-vector sum of its constituents and the
/// input indices that went into it (sorted ascending).
#[derive(Debug, Clone, PartialEq)]
pub struct ProtoJet {
    pub p4: FourVector,
    pub constituents: Vec<usize>,
}

impl ProtoJet {
    pub fn pt(&self) -> f64 {
        self.p4.pt()
    }

    pub fn eta(&self) -> f64 {
        self.p4.eta()
    }

    pub fn phi(&self) -> f64 {
        self.p4.phi()
    }

    pub fn mass(&self) -> f64 {
        self.p4.rest_mass().unwrap_or(0.0)
    }
}

/// Summary observables of one jet over the particle-flow collection it was
/// clustered from.
#[derive(Debug, Clone, PartialEq)]
pub struct JetObservables {
    pub pt: f64,
    pub eta: f64,
    pub phi: f64,
    pub mass: f64,
    pub energy: f64,
    pub n_charged: i32,
    pub n_neutrals: i32,
    pub n_particles: i32,
    pub charge: i32,
}

struct Slot {
    p4: FourVector,
    eta: f64,
    phi: f64,
    pt2_inv: f64,
    constituents: Vec<usize>,
}

impl Slot {
    fn new(p4: FourVector, constituents: Vec<usize>) -> Self {
        let pt = p4.pt();
        Slot {
            eta: p4.eta(),
            phi: p4.phi(),
            pt2_inv: 1.0 / (pt * pt),
            p4,
            constituents,
        }
    }
}

/// Cluster the input into anti-kt jets. The output is sorted by decreasing
/// pt (ties: lower first-constituent index first) and partitions the input:
/// every index appears in exactly one jet before the `min_jet_pt` filter.
///
/// Errors on a non-finite radius or any particle with non-positive or
/// non-finite pt, non-finite eta/phi, or negative mass.
pub fn cluster_antikt(
    particles: &[Particle],
    cfg: &ClusterConfig,
) -> Result<Vec<ProtoJet>, JetClustError> {
    if !(cfg.r_param > 0.0 && cfg.r_param.is_finite()) {
        return Err(JetClustError::BadRadius(cfg.r_param));
    }
    for (index, p) in particles.iter().enumerate() {
        let fail = |message: String| JetClustError::Domain { index, message };
        if !(p.pt > 0.0 && p.pt.is_finite()) {
            return Err(fail(format!("pt must be positive and finite, got {}", p.pt)));
        }
        if !p.eta.is_finite() || !p.phi.is_finite() {
            return Err(fail(format!(
                "eta and phi must be finite, got eta {} phi {}",
                p.eta, p.phi
            )));
        }
        if !(p.mass >= 0.0 && p.mass.is_finite()) {
            return Err(fail(format!("mass must be >= 0 and finite, got {}", p.mass)));
        }
    }

    let r2_inv = 1.0 / (cfg.r_param * cfg.r_param);
    // Slots keep stable indices for the lifetime of the clustering; merged
    // pseudojets are appended with fresh indices so the tie-break order never
    // depends on removal history.
    let mut slots: Vec<Option<Slot>> = particles
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let p4 = FourVector::from_pt_eta_phi_mass(p.pt, p.eta, p.phi, p.mass)
                .expect("inputs validated above");
            Some(Slot::new(p4, vec![i]))
        })
        .collect();
    let mut active = slots.len();
    let mut jets: Vec<ProtoJet> = Vec::new();

    while active > 0 {
        // Best candidate under the total order (distance, beam < pair, i, j).
        // Scanning beams first and pairs in (i, j) order with a strict `<`
        // implements that order without materializing candidates.
        let mut best_dist = f64::INFINITY;
        let mut best: (usize, Option<usize>) = (usize::MAX, None);
        for (i, slot) in slots.iter().enumerate() {
            let Some(s) = slot else { continue };
            if s.pt2_inv < best_dist {
                best_dist = s.pt2_inv;
                best = (i, None);
            }
        }
        for (i, slot_i) in slots.iter().enumerate() {
            let Some(si) = slot_i else { continue };
            for (j, slot_j) in slots.iter().enumerate().skip(i + 1) {
                let Some(sj) = slot_j else { continue };
                let dr = delta_r(si.eta, si.phi, sj.eta, sj.phi);
                let dist = si.pt2_inv.min(sj.pt2_inv) * dr * dr * r2_inv;
                if dist < best_dist {
                    best_dist = dist;
                    best = (i, Some(j));
                }
            }
        }

        match best {
            (i, None) => {
                let s = slots[i].take().expect("selected slot is live");
                active -= 1;
                let mut constituents = s.constituents;
                constituents.sort_unstable();
                jets.push(ProtoJet {
                    p4: s.p4,
                    constituents,
                });
            }
            (i, Some(j)) => {
                let sj = slots[j].take().expect("selected slot is live");
                let si = slots[i].take().expect("selected slot is live");
                active -= 1;
                let mut constituents = si.constituents;
                constituents.extend(sj.constituents);
                slots.push(Some(Slot::new(si.p4.add(&sj.p4), constituents)));
            }
        }
    }

    jets.retain(|j| j.pt() >= cfg.min_jet_pt);
    jets.sort_by(|a, b| {
        b.pt()
            .partial_cmp(&a.pt())
            .expect("jet pt is never NaN")
            .then_with(|| a.constituents[0].cmp(&b.constituents[0]))
    });
    Ok(jets)
}

/// Compute per-jet observables by looking its constituents up in the
/// particle-flow collection the clustering inputs were taken from.
pub fn jet_observables(
    jet: &ProtoJet,
    pf: &[PFObject],
) -> Result<JetObservables, JetClustError> {
    let mut n_charged = 0;
    let mut charge = 0;
    for &index in &jet.constituents {
        let Some(o) = pf.get(index) else {
            return Err(JetClustError::Index {
                index,
                len: pf.len(),
            });
        };
        if o.charge != 0 {
            n_charged += 1;
            charge += o.charge;
        }
    }
    let n_particles = jet.constituents.len() as i32;
    Ok(JetObservables {
        pt: jet.pt(),
        eta: jet.eta(),
        phi: jet.phi(),
        mass: jet.mass(),
        energy: jet.p4.e,
        n_charged,
        n_neutrals: n_particles - n_charged,
        n_particles,
        charge,
    })
}
