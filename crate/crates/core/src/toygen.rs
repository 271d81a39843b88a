//! Seeded toy Monte Carlo: generator-level dimuon, muon-neutrino and multijet
//! events, plus a parameterized detector-response pass producing reco-level
//! events.
//!
//! Randomness contract: every event owns a ChaCha12 generator keyed by
//! `seed ^ domain` with the event index as the stream id, where `domain`
//! separates the truth and detector stages. Events are therefore independent
//! of batch size and of each other, and parallel generation reproduces the
//! serial stream bit for bit. Within one event the draw order is fixed and
//! documented next to each sampling site.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::event::{
    Event, EventMeta, Jet, McTruthParticle, Muon, PFObject, PdgId, Triggers, Vertex,
};
use crate::jetclust::{
    cluster_antikt, jet_observables, ClusterConfig, JetClustError, Particle, ProtoJet,
};
use crate::kinematics::{delta_r, met_from_objects, track_isolation, wrap_phi, FourVector};

pub use crate::kinematics::MUON_MASS;

/// Nominal collider energy used for the beam momentum fractions.
pub const SQRT_S: f64 = 8000.0;

/// Mean pt of muons embedded in multijet events.
const SOFT_MUON_PT_MEAN: f64 = 2.5;
/// Embedded muons sit within this angular distance of a jet axis.
const SOFT_MUON_CONE: f64 = 0.2;
/// Gaussian width of the beam spot along z, in cm.
const BEAM_Z_SIGMA: f64 = 5.0;
/// Smeared momenta keep at least this fraction of the original.
const MIN_SMEAR_FACTOR: f64 = 1e-6;
/// Line shapes are truncated this many widths away from the pole.
const LINE_SHAPE_CUT: f64 = 5.0;
/// Fixed MIP-like calorimeter deposits for muon candidates, in GeV.
const MUON_ECAL_DEPOSIT: f64 = 0.5;
const MUON_HCAL_DEPOSIT: f64 = 3.0;
/// Fake muons are drawn inside the nominal tracker acceptance.
const FAKE_MAX_ABS_ETA: f64 = 2.4;
/// Isolation cone radius used for reco leptons.
const ISO_CONE: f64 = 0.3;

const DOMAIN_TRUTH: u64 = 0x7452_7554_685f_4576;
const DOMAIN_SMEAR: u64 = 0x734d_6541_725f_4576;

#[derive(Debug, Error)]
pub enum ToyGenError {
    #[error("invalid parameter {name}: {message}")]
    Domain { name: String, message: String },
    #[error("config line {line}: {message}")]
    ConfigParse { line: usize, message: String },
}

fn domain_err(name: &str, message: impl Into<String>) -> ToyGenError {
    ToyGenError::Domain {
        name: name.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Process {
    ZToMuMu,
    WToMuNu,
    Multijet,
}

impl Process {
    pub fn as_str(&self) -> &'static str {
        match self {
            Process::ZToMuMu => "z-mumu",
            Process::WToMuNu => "w-munu",
            Process::Multijet => "multijet",
        }
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Process {
    type Err = ToyGenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "z-mumu" => Ok(Process::ZToMuMu),
            "w-munu" => Ok(Process::WToMuNu),
            "multijet" => Ok(Process::Multijet),
            other => Err(domain_err(
                "process",
                format!("unknown process {other:?} (expected z-mumu, w-munu or multijet)"),
            )),
        }
    }
}

/// Physics parameters of one toy process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessParams {
    pub process: Process,
    pub resonance_mass: f64,
    pub resonance_width: f64,
    /// Exponential mean of the resonance transverse kick, GeV.
    pub boson_pt_scale: f64,
    /// Rapidity window for bosons and angular window for multijet partons.
    pub max_abs_eta: f64,
    /// Exponential mean of the multijet falling pt spectrum, GeV.
    pub jet_spectrum_slope: f64,
    /// Probability that a multijet event embeds a non-isolated muon.
    pub soft_muon_prob: f64,
}

impl ProcessParams {
    pub fn defaults(process: Process) -> Self {
        let (resonance_mass, resonance_width) = match process {
            Process::WToMuNu => (80.379, 2.085),
            // The resonance is unused for multijet but kept valid.
            Process::ZToMuMu | Process::Multijet => (91.1876, 2.495),
        };
        ProcessParams {
            process,
            resonance_mass,
            resonance_width,
            boson_pt_scale: 10.0,
            max_abs_eta: 2.4,
            jet_spectrum_slope: 15.0,
            soft_muon_prob: 0.3,
        }
    }

    /// Overlay `key = value` lines onto the current values. `#` starts a
    /// comment; unknown keys are errors, and the process itself cannot be
    /// set from a config file.
    pub fn apply_config(&mut self, text: &str) -> Result<(), ToyGenError> {
        parse_config_lines(text, |key, value, line| match key {
            "resonance_mass" => set_f64(&mut self.resonance_mass, value, line),
            "resonance_width" => set_f64(&mut self.resonance_width, value, line),
            "boson_pt_scale" => set_f64(&mut self.boson_pt_scale, value, line),
            "max_abs_eta" => set_f64(&mut self.max_abs_eta, value, line),
            "jet_spectrum_slope" => set_f64(&mut self.jet_spectrum_slope, value, line),
            "soft_muon_prob" => set_f64(&mut self.soft_muon_prob, value, line),
            "process" => Err(ToyGenError::ConfigParse {
                line,
                message: "the process is selected on the command line, not in the config".into(),
            }),
            other => Err(ToyGenError::ConfigParse {
                line,
                message: format!("unknown key {other:?}"),
            }),
        })
    }

    pub fn validate(&self) -> Result<(), ToyGenError> {
        for (name, v) in [
            ("resonance_mass", self.resonance_mass),
            ("resonance_width", self.resonance_width),
            ("boson_pt_scale", self.boson_pt_scale),
            ("max_abs_eta", self.max_abs_eta),
            ("jet_spectrum_slope", self.jet_spectrum_slope),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain_err(name, format!("must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.soft_muon_prob) {
            return Err(domain_err(
                "soft_muon_prob",
                format!("must lie in [0, 1], got {}", self.soft_muon_prob),
            ));
        }
        Ok(())
    }
}

/// Detector-response parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    /// Track resolution: sigma(pt)/pt = sqrt(a^2 + (b pt)^2).
    pub track_res_a: f64,
    pub track_res_b: f64,
    /// Calorimeter stochastic term: sigma(E)/E = s/sqrt(E).
    pub calo_res_stoch: f64,
    pub muon_efficiency: f64,
    /// Mean count of fake low-pt muons per event.
    pub fake_soft_rate: f64,
    /// Exponential mean of fake muon pt, GeV.
    pub fake_pt_scale: f64,
    /// Mean count of pile-up vertices per event.
    pub pileup_mean: f64,
    pub seed: u64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            track_res_a: 0.01,
            track_res_b: 1e-4,
            calo_res_stoch: 0.5,
            muon_efficiency: 0.95,
            fake_soft_rate: 0.5,
            fake_pt_scale: 1.5,
            pileup_mean: 10.0,
            seed: 42,
        }
    }
}

impl DetectorParams {
    /// An exact pass-through detector: no smearing, full efficiency, no
    /// fakes, no pile-up.
    pub fn identity(seed: u64) -> Self {
        DetectorParams {
            track_res_a: 0.0,
            track_res_b: 0.0,
            calo_res_stoch: 0.0,
            muon_efficiency: 1.0,
            fake_soft_rate: 0.0,
            fake_pt_scale: 1.5,
            pileup_mean: 0.0,
            seed,
        }
    }

    pub fn apply_config(&mut self, text: &str) -> Result<(), ToyGenError> {
        parse_config_lines(text, |key, value, line| match key {
            "track_res_a" => set_f64(&mut self.track_res_a, value, line),
            "track_res_b" => set_f64(&mut self.track_res_b, value, line),
            "calo_res_stoch" => set_f64(&mut self.calo_res_stoch, value, line),
            "muon_efficiency" => set_f64(&mut self.muon_efficiency, value, line),
            "fake_soft_rate" => set_f64(&mut self.fake_soft_rate, value, line),
            "fake_pt_scale" => set_f64(&mut self.fake_pt_scale, value, line),
            "pileup_mean" => set_f64(&mut self.pileup_mean, value, line),
            "seed" => match value.parse::<u64>() {
                Ok(v) => {
                    self.seed = v;
                    Ok(())
                }
                Err(e) => Err(ToyGenError::ConfigParse {
                    line,
                    message: format!("seed must be a non-negative integer: {e}"),
                }),
            },
            other => Err(ToyGenError::ConfigParse {
                line,
                message: format!("unknown key {other:?}"),
            }),
        })
    }

    pub fn validate(&self) -> Result<(), ToyGenError> {
        for (name, v) in [
            ("track_res_a", self.track_res_a),
            ("track_res_b", self.track_res_b),
            ("calo_res_stoch", self.calo_res_stoch),
            ("fake_soft_rate", self.fake_soft_rate),
            ("pileup_mean", self.pileup_mean),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(domain_err(name, format!("must be >= 0, got {v}")));
            }
        }
        if !(self.fake_pt_scale > 0.0 && self.fake_pt_scale.is_finite()) {
            return Err(domain_err(
                "fake_pt_scale",
                format!("must be positive, got {}", self.fake_pt_scale),
            ));
        }
        if !(0.0..=1.0).contains(&self.muon_efficiency) {
            return Err(domain_err(
                "muon_efficiency",
                format!("must lie in [0, 1], got {}", self.muon_efficiency),
            ));
        }
        Ok(())
    }
}

/// A sample of events carrying one scalar weight, applied per event when
/// histogramming.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEvents {
    pub events: Vec<Event>,
    pub weight: f64,
}

/// Attach a per-sample weight. Errors unless `scale` is positive and finite.
pub fn weight_events(events: Vec<Event>, scale: f64) -> Result<WeightedEvents, ToyGenError> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(domain_err("scale", format!("must be positive, got {scale}")));
    }
    Ok(WeightedEvents {
        events,
        weight: scale,
    })
}

fn parse_config_lines(
    text: &str,
    mut set: impl FnMut(&str, &str, usize) -> Result<(), ToyGenError>,
) -> Result<(), ToyGenError> {
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = raw.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((key, value)) = stripped.split_once('=') else {
            return Err(ToyGenError::ConfigParse {
                line,
                message: format!("expected `key = value`, got {stripped:?}"),
            });
        };
        set(key.trim(), value.trim(), line)?;
    }
    Ok(())
}

fn set_f64(slot: &mut f64, value: &str, line: usize) -> Result<(), ToyGenError> {
    match value.parse::<f64>() {
        Ok(v) => {
            *slot = v;
            Ok(())
        }
        Err(e) => Err(ToyGenError::ConfigParse {
            line,
            message: format!("expected a number, got {value:?}: {e}"),
        }),
    }
}

// ---------------------------------------------------------------------------
// Sampling primitives
// ---------------------------------------------------------------------------

fn event_rng(seed: u64, domain: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ domain);
    rng.set_stream(index);
    rng
}

/// Inverse-CDF draw from a Cauchy line shape truncated at ±`LINE_SHAPE_CUT`
/// widths. The median of the sample is exactly `center`: u = 0.5 maps to a
/// zero tangent argument.
fn sample_truncated_cauchy(rng: &mut ChaCha12Rng, center: f64, gamma: f64) -> f64 {
    let theta_max = LINE_SHAPE_CUT.atan();
    let u: f64 = rng.random();
    center + gamma * (theta_max * (2.0 * u - 1.0)).tan()
}

/// Exponential draw with the given mean, rejecting the measure-zero exact 0.
fn sample_exp(rng: &mut ChaCha12Rng, mean: f64) -> f64 {
    let exp = Exp::new(1.0 / mean).expect("mean validated positive");
    loop {
        let v = exp.sample(rng);
        if v > 0.0 {
            return v;
        }
    }
}

fn sample_poisson(rng: &mut ChaCha12Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("mean is positive and finite").sample(rng) as u64
}

fn sample_std_normal(rng: &mut ChaCha12Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn sample_uniform(rng: &mut ChaCha12Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

// ---------------------------------------------------------------------------
// Relativistic helpers
// ---------------------------------------------------------------------------

/// Boost from the frame where `p` is measured into the lab, for a frame
/// moving with velocity (bx, by, bz) in the lab.
fn boost(p: &FourVector, bx: f64, by: f64, bz: f64) -> FourVector {
    let b2 = bx * bx + by * by + bz * bz;
    if b2 == 0.0 {
        return *p;
    }
    let gamma = 1.0 / (1.0 - b2).sqrt();
    let bp = bx * p.px + by * p.py + bz * p.pz;
    let k = (gamma - 1.0) / b2 * bp + gamma * p.e;
    FourVector::new(
        gamma * (p.e + bp),
        p.px + k * bx,
        p.py + k * by,
        p.pz + k * bz,
    )
}

/// Isotropic two-body decay in the parent rest frame; returns the daughter
/// four-vectors, the first with mass `m1` along the sampled direction.
fn two_body_decay(m: f64, m1: f64, m2: f64, cos_star: f64, phi_star: f64) -> (FourVector, FourVector) {
    let e1 = (m * m + m1 * m1 - m2 * m2) / (2.0 * m);
    let p = (e1 * e1 - m1 * m1).max(0.0).sqrt();
    let sin_star = (1.0 - cos_star * cos_star).max(0.0).sqrt();
    let (px, py, pz) = (
        p * sin_star * phi_star.cos(),
        p * sin_star * phi_star.sin(),
        p * cos_star,
    );
    (
        FourVector::new(e1, px, py, pz),
        FourVector::new(m - e1, -px, -py, -pz),
    )
}

fn boson_four_vector(m: f64, pt: f64, phi: f64, y: f64) -> FourVector {
    let mt = (m * m + pt * pt).sqrt();
    FourVector::new(mt * y.cosh(), pt * phi.cos(), pt * phi.sin(), mt * y.sinh())
}

/// Beam momentum fractions for a system of transverse mass `mt` at rapidity
/// `y`, clamped into the physical range.
fn beam_fractions(m: f64, pt: f64, y: f64) -> (f64, f64) {
    let mt = (m * m + pt * pt).sqrt() / SQRT_S;
    ((mt * y.exp()).min(1.0), (mt * (-y).exp()).min(1.0))
}

fn truth_from_p4(
    p4: &FourVector,
    mass: f64,
    pdg: i32,
    ids: (i32, i32),
    fractions: (f64, f64),
) -> McTruthParticle {
    McTruthParticle {
        pt: p4.pt(),
        eta: p4.eta(),
        phi: p4.phi(),
        mass,
        mothers_first: -1,
        mothers_second: -1,
        id_1: ids.0,
        id_2: ids.1,
        x_1: fractions.0,
        x_2: fractions.1,
        pdg_id: PdgId(pdg),
        status: 1,
        y: p4.rapidity(),
    }
}

/// Residual transverse momentum of the stored truth record, from the stored
/// (pt, phi) pairs so the balance survives the float round trip.
fn stored_pt_sum(particles: &[McTruthParticle]) -> (f64, f64) {
    let mut px = crate::util::CompensatedSum::new();
    let mut py = crate::util::CompensatedSum::new();
    for t in particles {
        px.add(t.pt * t.phi.cos());
        py.add(t.pt * t.phi.sin());
    }
    (px.total(), py.total())
}

/// Append a massless balancing parton cancelling the current transverse sum;
/// skipped when the record is already balanced to well below numerical noise.
fn push_balancing_parton(
    particles: &mut Vec<McTruthParticle>,
    eta: f64,
    ids: (i32, i32),
    fractions: (f64, f64),
) {
    let (sx, sy) = stored_pt_sum(particles);
    let pt = sx.hypot(sy);
    if pt < 1e-9 {
        return;
    }
    let phi = (-sy).atan2(-sx);
    let p4 = FourVector::from_pt_eta_phi_mass(pt, eta, phi, 0.0).expect("finite balancer");
    particles.push(truth_from_p4(&p4, 0.0, 21, ids, fractions));
}

// ---------------------------------------------------------------------------
// Truth generation
// ---------------------------------------------------------------------------

/// Generate `n` generator-level events. Reco collections are left empty;
/// `fMET_PT`/`fMET_Phi` hold the truth neutrino transverse sum. Deterministic
/// in (n, params, seed) and parallelism-independent.
pub fn generate_truth(n: usize, p: &ProcessParams, seed: u64) -> Result<Vec<Event>, ToyGenError> {
    p.validate()?;
    Ok((0..n)
        .into_par_iter()
        .map(|i| generate_one(p, seed, i))
        .collect())
}

fn generate_one(p: &ProcessParams, seed: u64, index: usize) -> Event {
    let mut rng = event_rng(seed, DOMAIN_TRUTH, index as u64);
    let mut e = Event::empty(index as i64 + 1);

    match p.process {
        Process::ZToMuMu => {
            // Draw order: mass, kick, boson phi, boson rapidity, cos*, phi*.
            let m = sample_truncated_cauchy(&mut rng, p.resonance_mass, p.resonance_width);
            let kick = sample_exp(&mut rng, p.boson_pt_scale);
            let phi_b = sample_uniform(&mut rng, -PI, PI);
            let y_b = sample_uniform(&mut rng, -p.max_abs_eta, p.max_abs_eta);
            let cos_star = sample_uniform(&mut rng, -1.0, 1.0);
            let phi_star = sample_uniform(&mut rng, -PI, PI);

            let (mu_minus, mu_plus) = two_body_decay(m, MUON_MASS, MUON_MASS, cos_star, phi_star);
            let boson = boson_four_vector(m, kick, phi_b, y_b);
            let (bx, by, bz) = (boson.px / boson.e, boson.py / boson.e, boson.pz / boson.e);
            let mu_minus = boost(&mu_minus, bx, by, bz);
            let mu_plus = boost(&mu_plus, bx, by, bz);

            let ids = (2, -2);
            let fr = beam_fractions(m, kick, y_b);
            e.mc_truth.push(truth_from_p4(&mu_minus, MUON_MASS, 13, ids, fr));
            e.mc_truth.push(truth_from_p4(&mu_plus, MUON_MASS, -13, ids, fr));
            push_balancing_parton(&mut e.mc_truth, -y_b, ids, fr);
        }
        Process::WToMuNu => {
            // Draw order: charge, mass, kick, boson phi, boson rapidity,
            // cos*, phi*.
            let w_plus = rng.random_bool(0.5);
            let m = sample_truncated_cauchy(&mut rng, p.resonance_mass, p.resonance_width);
            let kick = sample_exp(&mut rng, p.boson_pt_scale);
            let phi_b = sample_uniform(&mut rng, -PI, PI);
            let y_b = sample_uniform(&mut rng, -p.max_abs_eta, p.max_abs_eta);
            let cos_star = sample_uniform(&mut rng, -1.0, 1.0);
            let phi_star = sample_uniform(&mut rng, -PI, PI);

            let (mu, nu) = two_body_decay(m, MUON_MASS, 0.0, cos_star, phi_star);
            let boson = boson_four_vector(m, kick, phi_b, y_b);
            let (bx, by, bz) = (boson.px / boson.e, boson.py / boson.e, boson.pz / boson.e);
            let mu = boost(&mu, bx, by, bz);
            let nu = boost(&nu, bx, by, bz);

            // W+ -> mu+ nu_mu, W- -> mu- nubar_mu.
            let (mu_pdg, nu_pdg, ids) = if w_plus {
                (-13, 14, (2, -1))
            } else {
                (13, -14, (1, -2))
            };
            let fr = beam_fractions(m, kick, y_b);
            e.mc_truth.push(truth_from_p4(&mu, MUON_MASS, mu_pdg, ids, fr));
            e.mc_truth.push(truth_from_p4(&nu, 0.0, nu_pdg, ids, fr));
            push_balancing_parton(&mut e.mc_truth, -y_b, ids, fr);

            let nu_rec = &e.mc_truth[1];
            e.meta.met_pt = nu_rec.pt;
            e.meta.met_phi = nu_rec.phi;
        }
        Process::Multijet => {
            // Draw order: parton count, per free parton (pt, eta, phi),
            // soft-muon gate and if embedded (parton pick, radius, angle,
            // pt, sign), balancer eta.
            let ids = (21, 21);
            let fr = (-1.0, -1.0);
            let n_partons = 2 + sample_poisson(&mut rng, 4.0) as usize;
            let n_free = n_partons - 1;
            for _ in 0..n_free {
                let pt = sample_exp(&mut rng, p.jet_spectrum_slope);
                let eta = sample_uniform(&mut rng, -p.max_abs_eta, p.max_abs_eta);
                let phi = sample_uniform(&mut rng, -PI, PI);
                let p4 = FourVector::from_pt_eta_phi_mass(pt, eta, phi, 0.0)
                    .expect("sampled parton is physical");
                e.mc_truth.push(truth_from_p4(&p4, 0.0, 21, ids, fr));
            }
            if rng.random::<f64>() < p.soft_muon_prob {
                let host = rng.random_range(0..n_free);
                let r = SOFT_MUON_CONE * rng.random::<f64>().sqrt();
                let alpha = sample_uniform(&mut rng, 0.0, TAU);
                let pt = sample_exp(&mut rng, SOFT_MUON_PT_MEAN);
                let pdg = if rng.random_bool(0.5) { 13 } else { -13 };
                let eta = e.mc_truth[host].eta + r * alpha.cos();
                let phi = wrap_phi(e.mc_truth[host].phi + r * alpha.sin());
                let p4 = FourVector::from_pt_eta_phi_mass(pt, eta, phi, MUON_MASS)
                    .expect("sampled muon is physical");
                e.mc_truth.push(truth_from_p4(&p4, MUON_MASS, pdg, ids, fr));
            }
            let eta_bal = sample_uniform(&mut rng, -p.max_abs_eta, p.max_abs_eta);
            push_balancing_parton(&mut e.mc_truth, eta_bal, ids, fr);
        }
    }
    e
}

// ---------------------------------------------------------------------------
// Detector response
// ---------------------------------------------------------------------------

/// Apply the parameterized detector response to truth events: smeared PF
/// candidates and reco muons, recomputed MET, fake muons, pile-up vertices
/// and trigger flags. Truth collections are retained untouched. The event
/// stream id is the position in the input slice.
pub fn smear_detector(truth: &[Event], d: &DetectorParams) -> Result<Vec<Event>, ToyGenError> {
    d.validate()?;
    Ok(truth
        .par_iter()
        .enumerate()
        .map(|(i, e)| smear_one(e, d, i as u64))
        .collect())
}

fn smear_one(truth: &Event, d: &DetectorParams, index: u64) -> Event {
    let mut rng = event_rng(d.seed, DOMAIN_SMEAR, index);

    // Draw order: beam-spot z; per truth particle (neutrinos draw nothing):
    // muons (efficiency u, resolution z), hadrons (resolution z, charge
    // sign); fakes (count, then pt/eta/phi/charge/iso triplet each);
    // pile-up (count, then z and track count each).
    let z0 = BEAM_Z_SIGMA * sample_std_normal(&mut rng);

    let mut pf: Vec<PFObject> = Vec::new();
    // (pf index, relative resolution) of each detected truth muon.
    let mut detected_muons: Vec<(usize, f64)> = Vec::new();

    for t in &truth.mc_truth {
        if t.pdg_id.is_neutrino() {
            continue;
        }
        if t.pdg_id.is_muon() {
            let u: f64 = rng.random();
            let z = sample_std_normal(&mut rng);
            let sigma_rel =
                (d.track_res_a.powi(2) + (d.track_res_b * t.pt).powi(2)).sqrt();
            if u >= d.muon_efficiency {
                continue;
            }
            let factor = (1.0 + sigma_rel * z).max(MIN_SMEAR_FACTOR);
            let pt = t.pt * factor;
            let p4 = FourVector::from_pt_eta_phi_mass(pt, t.eta, t.phi, MUON_MASS)
                .expect("smeared muon is physical");
            detected_muons.push((pf.len(), sigma_rel));
            pf.push(PFObject {
                pt,
                eta: t.eta,
                phi: t.phi,
                energy: p4.e,
                charge: if t.pdg_id.0 > 0 { -1 } else { 1 },
                mass: MUON_MASS,
                pf_type: t.pdg_id,
                ecal_e: MUON_ECAL_DEPOSIT.min(p4.e),
                hcal_e: MUON_HCAL_DEPOSIT.min(p4.e),
                ndof: 12,
                chi2: 12.0,
                pv_id: 0,
                vx: 0.0,
                vy: 0.0,
                vz: z0,
                jet_num: -1,
            });
        } else {
            // Hadronic deposits measure with the calorimeter and come out
            // as single charged-pion candidates of random sign.
            let z = sample_std_normal(&mut rng);
            let positive = rng.random_bool(0.5);
            let e_truth = t.pt * t.eta.cosh();
            let sigma_rel = if e_truth > 0.0 {
                d.calo_res_stoch / e_truth.sqrt()
            } else {
                0.0
            };
            let factor = (1.0 + sigma_rel * z).max(MIN_SMEAR_FACTOR);
            let pt = t.pt * factor;
            let energy = pt * t.eta.cosh();
            pf.push(PFObject {
                pt,
                eta: t.eta,
                phi: t.phi,
                energy,
                charge: if positive { 1 } else { -1 },
                mass: 0.0,
                pf_type: PdgId(if positive { 211 } else { -211 }),
                ecal_e: 0.3 * energy,
                hcal_e: 0.7 * energy,
                ndof: 12,
                chi2: 12.0,
                pv_id: 0,
                vx: 0.0,
                vy: 0.0,
                vz: z0,
                jet_num: -1,
            });
        }
    }

    let mut muons: Vec<Muon> = detected_muons
        .iter()
        .map(|&(k, sigma_rel)| {
            let o = &pf[k];
            Muon {
                pt: o.pt,
                pt_err: sigma_rel * o.pt,
                eta: o.eta,
                phi: o.phi,
                charge: o.charge,
                sta_pt: o.pt,
                sta_eta: o.eta,
                sta_phi: o.phi,
                trk_iso03: track_isolation(o.eta, o.phi, &pf, ISO_CONE, 0.0),
                ecal_iso03: calo_isolation(o.eta, o.phi, &pf, |x| x.ecal_e),
                hcal_iso03: calo_isolation(o.eta, o.phi, &pf, |x| x.hcal_e),
            }
        })
        .collect();

    let n_fakes = sample_poisson(&mut rng, d.fake_soft_rate);
    for _ in 0..n_fakes {
        let pt = sample_exp(&mut rng, d.fake_pt_scale);
        let eta = sample_uniform(&mut rng, -FAKE_MAX_ABS_ETA, FAKE_MAX_ABS_ETA);
        let phi = sample_uniform(&mut rng, -PI, PI);
        let charge = if rng.random_bool(0.5) { 1 } else { -1 };
        let trk_iso03 = 5.0 + sample_exp(&mut rng, 5.0);
        let ecal_iso03 = 2.0 + sample_exp(&mut rng, 2.0);
        let hcal_iso03 = 1.0 + sample_exp(&mut rng, 1.0);
        let sigma_rel = (d.track_res_a.powi(2) + (d.track_res_b * pt).powi(2)).sqrt();
        muons.push(Muon {
            pt,
            pt_err: sigma_rel * pt,
            eta,
            phi,
            charge,
            sta_pt: pt,
            sta_eta: eta,
            sta_phi: phi,
            trk_iso03,
            ecal_iso03,
            hcal_iso03,
        });
    }

    let n_pf_tracks = pf.iter().filter(|o| o.charge != 0).count() as i32;
    let mut vertices = vec![Vertex {
        n_tracks_fit: n_pf_tracks,
        ndof: (2 * n_pf_tracks - 3).max(0),
        chi2: f64::from((2 * n_pf_tracks - 3).max(0)),
        x: 0.0,
        y: 0.0,
        z: z0,
    }];
    let n_pileup = sample_poisson(&mut rng, d.pileup_mean);
    for _ in 0..n_pileup {
        let z = BEAM_Z_SIGMA * sample_std_normal(&mut rng);
        let n_tracks = 2 + sample_poisson(&mut rng, 8.0) as i32;
        vertices.push(Vertex {
            n_tracks_fit: n_tracks,
            ndof: (2 * n_tracks - 3).max(0),
            chi2: f64::from((2 * n_tracks - 3).max(0)),
            x: 0.0,
            y: 0.0,
            z,
        });
    }

    let (met_pt, met_phi) = met_from_objects(pf.iter().map(|o| (o.pt, o.phi)));

    let mut muon_pts: Vec<f64> = muons.iter().map(|m| m.pt).collect();
    muon_pts.sort_by(|a, b| b.partial_cmp(a).expect("pt is never NaN"));
    let ht: f64 = pf
        .iter()
        .filter(|o| !o.pf_type.is_muon())
        .map(|o| o.pt)
        .sum();
    let triggers = Triggers {
        mu24: muon_pts.first().is_some_and(|&pt| pt > 24.0),
        mu17_mu8: muon_pts.len() >= 2 && muon_pts[0] > 17.0 && muon_pts[1] > 8.0,
        met120_v: met_pt > 120.0,
        ele27: false,
        ht350: ht > 350.0,
    };

    Event {
        meta: EventMeta {
            met_pt,
            met_eta: 0.0,
            met_phi,
            triggers,
            ..truth.meta.clone()
        },
        pf,
        electrons: Vec::new(),
        muons,
        taus: Vec::new(),
        vertices,
        photons: Vec::new(),
        mc_truth: truth.mc_truth.clone(),
        jets: Vec::new(),
    }
}

fn calo_isolation(
    seed_eta: f64,
    seed_phi: f64,
    pf: &[PFObject],
    deposit: impl Fn(&PFObject) -> f64,
) -> f64 {
    let mut sum = crate::util::CompensatedSum::new();
    for o in pf {
        let dr = delta_r(seed_eta, seed_phi, o.eta, o.phi);
        if dr > 0.0 && dr < ISO_CONE {
            sum.add(deposit(o));
        }
    }
    sum.total()
}

// ---------------------------------------------------------------------------
// Reco jets
// ---------------------------------------------------------------------------

/// Cluster each event's non-muon PF candidates into jets, fill the jet
/// collection and link PF objects back via `jet_num`. PF entries with
/// non-positive pt are left unclustered.
pub fn build_reco_jets(events: &mut [Event], cfg: &ClusterConfig) -> Result<(), JetClustError> {
    for e in events.iter_mut() {
        build_jets_for_event(e, cfg)?;
    }
    Ok(())
}

fn build_jets_for_event(e: &mut Event, cfg: &ClusterConfig) -> Result<(), JetClustError> {
    let mut index_map: Vec<usize> = Vec::new();
    let mut inputs: Vec<Particle> = Vec::new();
    for (k, o) in e.pf.iter().enumerate() {
        if !o.pf_type.is_muon() && o.pt > 0.0 && o.eta.is_finite() {
            index_map.push(k);
            inputs.push(Particle::from(o));
        }
    }
    let proto = cluster_antikt(&inputs, cfg)?;

    for o in &mut e.pf {
        o.jet_num = -1;
    }
    let mut jets = Vec::with_capacity(proto.len());
    for (num, pj) in proto.iter().enumerate() {
        // Constituent indices come back in the filtered space; index_map is
        // increasing, so the mapped list stays sorted.
        let constituents: Vec<usize> = pj.constituents.iter().map(|&c| index_map[c]).collect();
        let mapped = ProtoJet {
            p4: pj.p4,
            constituents: constituents.clone(),
        };
        let obs = jet_observables(&mapped, &e.pf).expect("constituents index event PF");

        let (mut ch_em, mut neu_em, mut ch_had, mut neu_had) = (0.0, 0.0, 0.0, 0.0);
        let mut dr2 = 0.0;
        for &k in &constituents {
            let o = &e.pf[k];
            if o.charge != 0 {
                ch_em += o.ecal_e;
                ch_had += o.hcal_e;
            } else {
                neu_em += o.ecal_e;
                neu_had += o.hcal_e;
            }
            let dr = delta_r(o.eta, o.phi, obs.eta, obs.phi);
            dr2 += dr * dr;
            e.pf[k].jet_num = num as i32;
        }
        dr2 /= constituents.len() as f64;

        // Generator match: nearest truth parton within the jet radius.
        let mut matched: Option<(usize, f64)> = None;
        for (ti, t) in e.mc_truth.iter().enumerate() {
            if t.pdg_id.is_muon() || t.pdg_id.is_neutrino() {
                continue;
            }
            let dr = delta_r(t.eta, t.phi, obs.eta, obs.phi);
            if dr < cfg.r_param && matched.is_none_or(|(_, best)| dr < best) {
                matched = Some((ti, dr));
            }
        }
        let (mc_flavor, gen_pt, gen_eta, gen_phi, gen_mass, flavor_match_pt, match_idx) =
            match matched {
                Some((ti, _)) => {
                    let t = &e.mc_truth[ti];
                    (t.pdg_id.0, t.pt, t.eta, t.phi, t.mass, t.pt, ti as i32)
                }
                None => (0, 0.0, 0.0, 0.0, 0.0, 0.0, -1),
            };

        jets.push(Jet {
            pt: obs.pt,
            eta: obs.eta,
            phi: obs.phi,
            charge: obs.charge,
            mass: obs.mass,
            d0: 0.0,
            dz: 0.0,
            n_charged: obs.n_charged,
            n_neutrals: obs.n_neutrals,
            n_particles: obs.n_particles,
            beta: 1.0,
            beta_star: 0.0,
            dr2_mean: dr2,
            area: PI * cfg.r_param * cfg.r_param,
            energy: obs.energy,
            ch_em_energy: ch_em,
            neu_em_energy: neu_em,
            ch_had_energy: ch_had,
            neu_had_energy: neu_had,
            mc_flavor,
            gen_pt,
            gen_eta,
            gen_phi,
            gen_mass,
            flavor_match_pt,
            id_quality: 2,
            num: num as i32,
            match_idx,
            jec: 1.0,
        });
    }
    e.jets = jets;
    Ok(())
}
