//! Cut-based selection with cutflow accounting, weighted histogramming,
//! data/MC comparison, object multiplicities and the η–φ image encoder.
//!
//! Scalar observables are addressed through a string registry (see
//! [`QUANTITY_IDS`]); selections are ordered lists of `name quantity
//! comparator threshold` cuts evaluated per event. Histogram bins are
//! left-closed/right-open with the last bin closed on both sides.

// Range guards negate the comparison directly (`!(lo < hi)`) so that NaN
// bounds fail validation instead of slipping past a positive check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::event::Event;
use crate::kinematics::{invariant_mass, met_from_objects, relative_isolation, FourVector, MUON_MASS};
use crate::util::CompensatedSum;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("unknown quantity id {id:?}")]
    UnknownQuantity { id: String },
    #[error("selection spec line {line}: {message}")]
    SpecParse { line: usize, message: String },
    #[error("bad histogram edges: {message}")]
    BadEdges { message: String },
    #[error("histogram has no in-range weight to normalize")]
    EmptyHistogram,
    #[error("histogram binnings do not match")]
    BinningMismatch,
    #[error("got {values} values but {weights} weights")]
    WeightMismatch { values: usize, weights: usize },
    #[error("{message}")]
    BadArgument { message: String },
}

fn bad_edges(message: impl Into<String>) -> AnalysisError {
    AnalysisError::BadEdges {
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// Quantity registry
// ---------------------------------------------------------------------------

/// Fixed quantity ids; `trigger:<flag>` additionally addresses any trigger
/// column (e.g. `trigger:HLT_Mu24`).
pub const QUANTITY_IDS: &[&str] = &[
    "pf_count",
    "reco_muon_count",
    "reco_electron_count",
    "tau_count",
    "photon_count",
    "vertex_count",
    "jet_count",
    "mc_truth_count",
    "leading_muon_pt",
    "leading_muon_eta",
    "leading_muon_abs_eta",
    "leading_muon_phi",
    "leading_muon_reliso",
    "leading_muon_trk_iso03",
    "leading_jet_pt",
    "met_pt",
    "met_phi",
    "dimuon_mass",
];

/// A scalar per-event observable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Quantity {
    PfCount,
    RecoMuonCount,
    RecoElectronCount,
    TauCount,
    PhotonCount,
    VertexCount,
    JetCount,
    McTruthCount,
    LeadingMuonPt,
    LeadingMuonEta,
    LeadingMuonAbsEta,
    LeadingMuonPhi,
    LeadingMuonRelIso,
    LeadingMuonTrkIso03,
    LeadingJetPt,
    MetPt,
    MetPhi,
    DimuonMass,
    /// Trigger flag as 0/1, addressed by column name.
    Trigger(String),
}

impl Quantity {
    pub fn parse(id: &str) -> Result<Self, AnalysisError> {
        if let Some(flag) = id.strip_prefix("trigger:") {
            if crate::event::TRIGGER_NAMES.contains(&flag) {
                return Ok(Quantity::Trigger(flag.to_string()));
            }
            return Err(AnalysisError::UnknownQuantity { id: id.to_string() });
        }
        Ok(match id {
            "pf_count" => Quantity::PfCount,
            "reco_muon_count" => Quantity::RecoMuonCount,
            "reco_electron_count" => Quantity::RecoElectronCount,
            "tau_count" => Quantity::TauCount,
            "photon_count" => Quantity::PhotonCount,
            "vertex_count" => Quantity::VertexCount,
            "jet_count" => Quantity::JetCount,
            "mc_truth_count" => Quantity::McTruthCount,
            "leading_muon_pt" => Quantity::LeadingMuonPt,
            "leading_muon_eta" => Quantity::LeadingMuonEta,
            "leading_muon_abs_eta" => Quantity::LeadingMuonAbsEta,
            "leading_muon_phi" => Quantity::LeadingMuonPhi,
            "leading_muon_reliso" => Quantity::LeadingMuonRelIso,
            "leading_muon_trk_iso03" => Quantity::LeadingMuonTrkIso03,
            "leading_jet_pt" => Quantity::LeadingJetPt,
            "met_pt" => Quantity::MetPt,
            "met_phi" => Quantity::MetPhi,
            "dimuon_mass" => Quantity::DimuonMass,
            other => {
                return Err(AnalysisError::UnknownQuantity {
                    id: other.to_string(),
                })
            }
        })
    }

    pub fn id(&self) -> String {
        match self {
            Quantity::PfCount => "pf_count".into(),
            Quantity::RecoMuonCount => "reco_muon_count".into(),
            Quantity::RecoElectronCount => "reco_electron_count".into(),
            Quantity::TauCount => "tau_count".into(),
            Quantity::PhotonCount => "photon_count".into(),
            Quantity::VertexCount => "vertex_count".into(),
            Quantity::JetCount => "jet_count".into(),
            Quantity::McTruthCount => "mc_truth_count".into(),
            Quantity::LeadingMuonPt => "leading_muon_pt".into(),
            Quantity::LeadingMuonEta => "leading_muon_eta".into(),
            Quantity::LeadingMuonAbsEta => "leading_muon_abs_eta".into(),
            Quantity::LeadingMuonPhi => "leading_muon_phi".into(),
            Quantity::LeadingMuonRelIso => "leading_muon_reliso".into(),
            Quantity::LeadingMuonTrkIso03 => "leading_muon_trk_iso03".into(),
            Quantity::LeadingJetPt => "leading_jet_pt".into(),
            Quantity::MetPt => "met_pt".into(),
            Quantity::MetPhi => "met_phi".into(),
            Quantity::DimuonMass => "dimuon_mass".into(),
            Quantity::Trigger(flag) => format!("trigger:{flag}"),
        }
    }
}

/// Where MET comes from when evaluating `met_pt`/`met_phi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MetSource {
    /// The stored `fMET_*` metadata.
    #[default]
    Stored,
    /// Recomputed from the PF collection on the fly.
    Recomputed,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EvalContext {
    pub met: MetSource,
}

/// Index of the highest-pt object; ties keep the earliest.
fn leading_index<T>(items: &[T], pt: impl Fn(&T) -> f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, item) in items.iter().enumerate() {
        let v = pt(item);
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Indices of the two highest-pt objects in decreasing order.
fn leading_pair<T>(items: &[T], pt: impl Fn(&T) -> f64 + Copy) -> Option<(usize, usize)> {
    if items.len() < 2 {
        return None;
    }
    let first = leading_index(items, pt)?;
    let mut second: Option<(usize, f64)> = None;
    for (i, item) in items.iter().enumerate() {
        if i == first {
            continue;
        }
        let v = pt(item);
        if second.is_none_or(|(_, b)| v > b) {
            second = Some((i, v));
        }
    }
    second.map(|(i, _)| (first, i))
}

/// Evaluate one observable; `None` means the quantity is absent for this
/// event (e.g. no muons for a leading-muon id). Counts are never absent.
pub fn evaluate_quantity(e: &Event, q: &Quantity, ctx: &EvalContext) -> Option<f64> {
    match q {
        Quantity::PfCount => Some(e.pf.len() as f64),
        Quantity::RecoMuonCount => Some(e.muons.len() as f64),
        Quantity::RecoElectronCount => Some(e.electrons.len() as f64),
        Quantity::TauCount => Some(e.taus.len() as f64),
        Quantity::PhotonCount => Some(e.photons.len() as f64),
        Quantity::VertexCount => Some(e.vertices.len() as f64),
        Quantity::JetCount => Some(e.jets.len() as f64),
        Quantity::McTruthCount => Some(e.mc_truth.len() as f64),
        Quantity::LeadingMuonPt => leading_muon(e).map(|m| m.pt),
        Quantity::LeadingMuonEta => leading_muon(e).map(|m| m.eta),
        Quantity::LeadingMuonAbsEta => leading_muon(e).map(|m| m.eta.abs()),
        Quantity::LeadingMuonPhi => leading_muon(e).map(|m| m.phi),
        Quantity::LeadingMuonRelIso => {
            let m = leading_muon(e)?;
            relative_isolation(m.trk_iso03, m.pt).ok()
        }
        Quantity::LeadingMuonTrkIso03 => leading_muon(e).map(|m| m.trk_iso03),
        Quantity::LeadingJetPt => {
            leading_index(&e.jets, |j| j.pt).map(|i| e.jets[i].pt)
        }
        Quantity::MetPt => Some(met_of(e, ctx).0),
        Quantity::MetPhi => Some(met_of(e, ctx).1),
        Quantity::DimuonMass => {
            let (a, b) = leading_pair(&e.muons, |m| m.pt)?;
            let p1 = muon_p4(&e.muons[a])?;
            let p2 = muon_p4(&e.muons[b])?;
            invariant_mass(&p1, &p2).ok()
        }
        Quantity::Trigger(flag) => e.meta.triggers.get(flag).map(f64::from),
    }
}

fn leading_muon(e: &Event) -> Option<&crate::event::Muon> {
    leading_index(&e.muons, |m| m.pt).map(|i| &e.muons[i])
}

fn muon_p4(m: &crate::event::Muon) -> Option<FourVector> {
    FourVector::from_pt_eta_phi_mass(m.pt, m.eta, m.phi, MUON_MASS).ok()
}

fn met_of(e: &Event, ctx: &EvalContext) -> (f64, f64) {
    match ctx.met {
        MetSource::Stored => (e.meta.met_pt, e.meta.met_phi),
        MetSource::Recomputed => met_from_objects(e.pf.iter().map(|o| (o.pt, o.phi))),
    }
}

// ---------------------------------------------------------------------------
// Selection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl Comparator {
    pub fn apply(&self, value: f64, threshold: f64) -> bool {
        match self {
            Comparator::Lt => value < threshold,
            Comparator::Le => value <= threshold,
            Comparator::Gt => value > threshold,
            Comparator::Ge => value >= threshold,
            // Exact equality; meant for integer-valued counts and flags.
            Comparator::Eq => value == threshold,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
            Comparator::Eq => "==",
        }
    }
}

impl FromStr for Comparator {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "<" => Ok(Comparator::Lt),
            "<=" => Ok(Comparator::Le),
            ">" => Ok(Comparator::Gt),
            ">=" => Ok(Comparator::Ge),
            "==" => Ok(Comparator::Eq),
            other => Err(AnalysisError::BadArgument {
                message: format!("unknown comparator {other:?} (expected <, <=, >, >= or ==)"),
            }),
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub name: String,
    pub quantity: Quantity,
    pub comparator: Comparator,
    pub threshold: f64,
}

/// An ordered selection. Events must satisfy every cut; an absent quantity
/// fails its cut.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SelectionSpec {
    pub cuts: Vec<Cut>,
}

impl SelectionSpec {
    /// Parse the plain-text format: one `name quantity comparator threshold`
    /// per line, `#` comments, blank lines ignored. Cut names must be unique.
    pub fn parse(text: &str) -> Result<Self, AnalysisError> {
        let mut cuts: Vec<Cut> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = raw.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = stripped.split_whitespace().collect();
            let [name, quantity, comparator, threshold] = tokens[..] else {
                return Err(AnalysisError::SpecParse {
                    line,
                    message: format!(
                        "expected `name quantity comparator threshold`, got {} token(s)",
                        tokens.len()
                    ),
                });
            };
            if cuts.iter().any(|c| c.name == name) {
                return Err(AnalysisError::SpecParse {
                    line,
                    message: format!("duplicate cut name {name:?}"),
                });
            }
            let quantity = Quantity::parse(quantity).map_err(|e| AnalysisError::SpecParse {
                line,
                message: e.to_string(),
            })?;
            let comparator =
                Comparator::from_str(comparator).map_err(|e| AnalysisError::SpecParse {
                    line,
                    message: e.to_string(),
                })?;
            let threshold = threshold.parse::<f64>().map_err(|e| AnalysisError::SpecParse {
                line,
                message: format!("bad threshold {threshold:?}: {e}"),
            })?;
            cuts.push(Cut {
                name: name.to_string(),
                quantity,
                comparator,
                threshold,
            });
        }
        Ok(SelectionSpec { cuts })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutflowRow {
    pub name: String,
    pub events_in: u64,
    pub events_passed: u64,
    pub weighted_in: f64,
    pub weighted_passed: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Cutflow {
    pub rows: Vec<CutflowRow>,
}

impl Cutflow {
    /// Fixed-width text table; deterministic for byte-stable CLI output.
    pub fn format_table(&self) -> String {
        let mut out = String::new();
        let name_w = self
            .rows
            .iter()
            .map(|r| r.name.len())
            .chain(std::iter::once("cut".len()))
            .max()
            .unwrap_or(3);
        out.push_str(&format!(
            "{:<name_w$}  {:>12}  {:>12}  {:>10}  {:>14}  {:>14}\n",
            "cut", "events_in", "passed", "efficiency", "weighted_in", "weighted_pass"
        ));
        for r in &self.rows {
            let eff = if r.events_in > 0 {
                format!("{:.4}", r.events_passed as f64 / r.events_in as f64)
            } else {
                "-".to_string()
            };
            out.push_str(&format!(
                "{:<name_w$}  {:>12}  {:>12}  {:>10}  {:>14.6}  {:>14.6}\n",
                r.name, r.events_in, r.events_passed, eff, r.weighted_in, r.weighted_passed
            ));
        }
        out
    }
}

/// Apply the cuts in order. Returns the per-event pass mask over the whole
/// selection and the telescoping cutflow (`passed` of each cut equals `in`
/// of the next). `weight` scales the weighted columns; pass 1.0 for
/// unweighted samples.
pub fn apply_selection(
    events: &[Event],
    spec: &SelectionSpec,
    weight: f64,
    ctx: &EvalContext,
) -> (Vec<bool>, Cutflow) {
    let mut alive = vec![true; events.len()];
    let mut rows = Vec::with_capacity(spec.cuts.len());
    for cut in &spec.cuts {
        let events_in = alive.iter().filter(|&&a| a).count() as u64;
        let next: Vec<bool> = events
            .par_iter()
            .zip(alive.par_iter())
            .map(|(e, &a)| {
                a && evaluate_quantity(e, &cut.quantity, ctx)
                    .is_some_and(|v| cut.comparator.apply(v, cut.threshold))
            })
            .collect();
        alive = next;
        let events_passed = alive.iter().filter(|&&a| a).count() as u64;
        rows.push(CutflowRow {
            name: cut.name.clone(),
            events_in,
            events_passed,
            weighted_in: weight * events_in as f64,
            weighted_passed: weight * events_passed as f64,
        });
    }
    (alive, Cutflow { rows })
}

// ---------------------------------------------------------------------------
// Histogramming
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram1D {
    /// n+1 strictly ascending bin edges.
    pub edges: Vec<f64>,
    /// Weighted sums per bin.
    pub contents: Vec<f64>,
    /// Sum of squared weights per bin.
    pub sumw2: Vec<f64>,
    pub underflow: f64,
    pub overflow: f64,
}

impl Histogram1D {
    pub fn n_bins(&self) -> usize {
        self.contents.len()
    }

    pub fn bin_width(&self, bin: usize) -> f64 {
        self.edges[bin + 1] - self.edges[bin]
    }

    pub fn bin_center(&self, bin: usize) -> f64 {
        0.5 * (self.edges[bin] + self.edges[bin + 1])
    }

    /// In-range integral Σ content · width.
    pub fn area(&self) -> f64 {
        let mut area = CompensatedSum::new();
        for (bin, c) in self.contents.iter().enumerate() {
            area.add(c * self.bin_width(bin));
        }
        area.total()
    }

    /// First bin holding the maximum content; `None` when all bins are zero.
    pub fn max_bin(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &c) in self.contents.iter().enumerate() {
            if c > 0.0 && best.is_none_or(|(_, b)| c > b) {
                best = Some((i, c));
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Uniform edges from `lo` to `hi` with exact endpoints.
pub fn linear_edges(n_bins: usize, lo: f64, hi: f64) -> Result<Vec<f64>, AnalysisError> {
    if n_bins == 0 {
        return Err(bad_edges("need at least one bin"));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(bad_edges(format!("invalid range [{lo}, {hi})")));
    }
    let n = n_bins as f64;
    Ok((0..=n_bins)
        .map(|k| (lo * (n - k as f64) + hi * k as f64) / n)
        .collect())
}

fn check_edges(edges: &[f64]) -> Result<(), AnalysisError> {
    if edges.len() < 2 {
        return Err(bad_edges("need at least 2 edges"));
    }
    if edges.iter().any(|e| !e.is_finite()) {
        return Err(bad_edges("edges must be finite"));
    }
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad_edges("edges must be strictly ascending"));
    }
    Ok(())
}

/// Fill a weighted histogram. Bins are left-closed/right-open; a value on
/// the last edge lands in the last bin. Out-of-range values accumulate in
/// underflow/overflow (NaN counts as overflow), so total weight is conserved.
pub fn fill_histogram(
    values: &[f64],
    weights: Option<&[f64]>,
    edges: &[f64],
) -> Result<Histogram1D, AnalysisError> {
    check_edges(edges)?;
    if let Some(w) = weights {
        if w.len() != values.len() {
            return Err(AnalysisError::WeightMismatch {
                values: values.len(),
                weights: w.len(),
            });
        }
    }
    let n_bins = edges.len() - 1;
    let mut contents = vec![CompensatedSum::new(); n_bins];
    let mut sumw2 = vec![CompensatedSum::new(); n_bins];
    let mut underflow = CompensatedSum::new();
    let mut overflow = CompensatedSum::new();

    for (i, &x) in values.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        if x.is_nan() || x > edges[n_bins] {
            overflow.add(w);
        } else if x < edges[0] {
            underflow.add(w);
        } else {
            // partition_point finds the first edge > x; x == last edge is
            // clamped into the final (closed) bin.
            let bin = edges.partition_point(|&e| e <= x).min(n_bins) - 1;
            contents[bin].add(w);
            sumw2[bin].add(w * w);
        }
    }

    Ok(Histogram1D {
        edges: edges.to_vec(),
        contents: contents.iter().map(CompensatedSum::total).collect(),
        sumw2: sumw2.iter().map(CompensatedSum::total).collect(),
        underflow: underflow.total(),
        overflow: overflow.total(),
    })
}

/// Scale so the in-range area is exactly 1. Under/overflow and sumw2 scale
/// consistently (sumw2 by the squared factor). Idempotent within 1e-12.
pub fn normalize_to_unity(h: &Histogram1D) -> Result<Histogram1D, AnalysisError> {
    let area = h.area();
    if !(area > 0.0) {
        return Err(AnalysisError::EmptyHistogram);
    }
    let s = 1.0 / area;
    Ok(Histogram1D {
        edges: h.edges.clone(),
        contents: h.contents.iter().map(|c| c * s).collect(),
        sumw2: h.sumw2.iter().map(|v| v * s * s).collect(),
        underflow: h.underflow * s,
        overflow: h.overflow * s,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// Weighted sum of the MC inputs, per bin.
    pub stacked: Histogram1D,
    /// Per-bin data/MC; `None` where the stacked MC is zero.
    pub ratio: Vec<Option<f64>>,
    /// Pearson χ² over bins with positive MC.
    pub chi2: f64,
    /// Number of bins entering χ².
    pub ndf: usize,
}

/// Stack weighted MC histograms and compare data against the total.
pub fn compare_data_mc(
    data: &Histogram1D,
    mc: &[(Histogram1D, f64)],
) -> Result<ComparisonReport, AnalysisError> {
    for (h, _) in mc {
        if h.edges != data.edges {
            return Err(AnalysisError::BinningMismatch);
        }
    }
    let n = data.n_bins();
    let mut stacked = Histogram1D {
        edges: data.edges.clone(),
        contents: vec![0.0; n],
        sumw2: vec![0.0; n],
        underflow: 0.0,
        overflow: 0.0,
    };
    for (h, w) in mc {
        for bin in 0..n {
            stacked.contents[bin] += w * h.contents[bin];
            stacked.sumw2[bin] += w * w * h.sumw2[bin];
        }
        stacked.underflow += w * h.underflow;
        stacked.overflow += w * h.overflow;
    }
    let mut ratio = Vec::with_capacity(n);
    let mut chi2 = 0.0;
    let mut ndf = 0;
    for bin in 0..n {
        let m = stacked.contents[bin];
        if m > 0.0 {
            ratio.push(Some(data.contents[bin] / m));
            let d = data.contents[bin] - m;
            chi2 += d * d / m;
            ndf += 1;
        } else {
            ratio.push(None);
        }
    }
    Ok(ComparisonReport {
        stacked,
        ratio,
        chi2,
        ndf,
    })
}

// ---------------------------------------------------------------------------
// Collections, multiplicities and images
// ---------------------------------------------------------------------------

/// Object collections addressable from multiplicity and image encoders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectCollection {
    Pf,
    Muons,
    Electrons,
    Taus,
    Photons,
    Jets,
    McTruth,
}

impl FromStr for ObjectCollection {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pf" => Ok(ObjectCollection::Pf),
            "muons" => Ok(ObjectCollection::Muons),
            "electrons" => Ok(ObjectCollection::Electrons),
            "taus" => Ok(ObjectCollection::Taus),
            "photons" => Ok(ObjectCollection::Photons),
            "jets" => Ok(ObjectCollection::Jets),
            "mctruth" => Ok(ObjectCollection::McTruth),
            other => Err(AnalysisError::BadArgument {
                message: format!(
                    "unknown collection {other:?} (expected pf, muons, electrons, taus, photons, jets or mctruth)"
                ),
            }),
        }
    }
}

impl ObjectCollection {
    pub fn as_str(&self) -> &'static str {
        match self {
            ObjectCollection::Pf => "pf",
            ObjectCollection::Muons => "muons",
            ObjectCollection::Electrons => "electrons",
            ObjectCollection::Taus => "taus",
            ObjectCollection::Photons => "photons",
            ObjectCollection::Jets => "jets",
            ObjectCollection::McTruth => "mctruth",
        }
    }
}

/// (pt, eta, phi) triples of one collection.
fn collection_kinematics(e: &Event, c: ObjectCollection) -> Vec<(f64, f64, f64)> {
    match c {
        ObjectCollection::Pf => e.pf.iter().map(|o| (o.pt, o.eta, o.phi)).collect(),
        ObjectCollection::Muons => e.muons.iter().map(|o| (o.pt, o.eta, o.phi)).collect(),
        ObjectCollection::Electrons => {
            e.electrons.iter().map(|o| (o.pt, o.eta, o.phi)).collect()
        }
        ObjectCollection::Taus => e.taus.iter().map(|o| (o.pt, o.eta, o.phi)).collect(),
        ObjectCollection::Photons => e.photons.iter().map(|o| (o.pt, o.eta, o.phi)).collect(),
        ObjectCollection::Jets => e.jets.iter().map(|o| (o.pt, o.eta, o.phi)).collect(),
        ObjectCollection::McTruth => e.mc_truth.iter().map(|o| (o.pt, o.eta, o.phi)).collect(),
    }
}

/// Histogram of per-event object counts above a pt cutoff (strictly
/// greater), binned on integer-centered unit bins.
pub fn multiplicity_histogram(
    events: &[Event],
    collection: ObjectCollection,
    pt_cutoff: f64,
) -> Result<Histogram1D, AnalysisError> {
    if !(pt_cutoff >= 0.0) {
        return Err(AnalysisError::BadArgument {
            message: format!("pt cutoff must be >= 0, got {pt_cutoff}"),
        });
    }
    let counts: Vec<f64> = events
        .iter()
        .map(|e| {
            collection_kinematics(e, collection)
                .iter()
                .filter(|(pt, _, _)| *pt > pt_cutoff)
                .count() as f64
        })
        .collect();
    let max = counts.iter().fold(0.0f64, |a, &b| a.max(b)) as usize;
    let edges: Vec<f64> = (0..=max + 1).map(|k| k as f64 - 0.5).collect();
    fill_histogram(&counts, None, &edges)
}

/// An η–φ grid of summed transverse momenta; pixel (i_eta, i_phi) is stored
/// at `i_eta * n_phi + i_phi` with both axes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaPhiImage {
    pub n_eta: usize,
    pub n_phi: usize,
    pub eta_range: (f64, f64),
    pub phi_range: (f64, f64),
    pub pixels: Vec<f64>,
}

impl EtaPhiImage {
    pub fn pixel(&self, i_eta: usize, i_phi: usize) -> f64 {
        self.pixels[i_eta * self.n_phi + i_phi]
    }
}

fn grid_index(x: f64, range: (f64, f64), n: usize) -> Option<usize> {
    if !(x >= range.0 && x <= range.1) {
        return None;
    }
    let i = ((x - range.0) / (range.1 - range.0) * n as f64) as usize;
    Some(i.min(n - 1))
}

/// Rasterize one event's collection onto an η–φ grid, summing pt per pixel.
/// Objects outside either range are excluded; the pixel sum equals the pt
/// sum of the included objects.
pub fn eta_phi_image(
    e: &Event,
    collection: ObjectCollection,
    n_eta: usize,
    n_phi: usize,
    eta_range: (f64, f64),
    phi_range: (f64, f64),
) -> Result<EtaPhiImage, AnalysisError> {
    if n_eta == 0 || n_phi == 0 {
        return Err(AnalysisError::BadArgument {
            message: "image dimensions must be positive".into(),
        });
    }
    for (name, (lo, hi)) in [("eta", eta_range), ("phi", phi_range)] {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(AnalysisError::BadArgument {
                message: format!("invalid {name} range [{lo}, {hi}]"),
            });
        }
    }
    let mut pixels = vec![0.0; n_eta * n_phi];
    for (pt, eta, phi) in collection_kinematics(e, collection) {
        let (Some(i_eta), Some(i_phi)) = (
            grid_index(eta, eta_range, n_eta),
            grid_index(phi, phi_range, n_phi),
        ) else {
            continue;
        };
        pixels[i_eta * n_phi + i_phi] += pt;
    }
    Ok(EtaPhiImage {
        n_eta,
        n_phi,
        eta_range,
        phi_range,
        pixels,
    })
}

// ---------------------------------------------------------------------------
// Text, JSON and image encodings
// ---------------------------------------------------------------------------

/// CSV rows `edge_lo,edge_hi,content,sumw2`; under/overflow are not rows
/// (they live in the JSON encoding).
pub fn histogram_to_csv(h: &Histogram1D) -> String {
    let mut out = String::from("edge_lo,edge_hi,content,sumw2\n");
    for bin in 0..h.n_bins() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            h.edges[bin],
            h.edges[bin + 1],
            h.contents[bin],
            h.sumw2[bin]
        ));
    }
    out
}

pub fn histogram_to_json(h: &Histogram1D) -> Value {
    json!({
        "edges": h.edges,
        "contents": h.contents,
        "sumw2": h.sumw2,
        "underflow": h.underflow,
        "overflow": h.overflow,
    })
}

/// Raw unnormalized grid: one CSV row per η bin (ascending), φ bins as
/// columns (ascending), preceded by a `#` metadata line.
pub fn image_to_csv(img: &EtaPhiImage) -> String {
    let mut out = format!(
        "# n_eta={} n_phi={} eta_range=[{},{}] phi_range=[{},{}]\n",
        img.n_eta, img.n_phi, img.eta_range.0, img.eta_range.1, img.phi_range.0, img.phi_range.1
    );
    for i_eta in 0..img.n_eta {
        let row: Vec<String> = (0..img.n_phi)
            .map(|i_phi| img.pixel(i_eta, i_phi).to_string())
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// 16-bit binary PGM (P5), max-normalized per image. x runs over η bins,
/// y over φ bins with the highest-φ row first, so the beam axis is
/// horizontal.
pub fn image_to_pgm(img: &EtaPhiImage) -> Vec<u8> {
    let max = img.pixels.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut out = format!("P5\n{} {}\n65535\n", img.n_eta, img.n_phi).into_bytes();
    for i_phi in (0..img.n_phi).rev() {
        for i_eta in 0..img.n_eta {
            let v = if max > 0.0 {
                (img.pixel(i_eta, i_phi) / max * 65535.0).round() as u16
            } else {
                0
            };
            out.extend_from_slice(&v.to_be_bytes());
        }
    }
    out
}

fn svg_f(x: f64) -> String {
    format!("{x:.2}")
}

const SVG_W: f64 = 800.0;
const SVG_H: f64 = 500.0;
const SVG_ML: f64 = 70.0;
const SVG_MR: f64 = 20.0;
const SVG_MT: f64 = 30.0;
const SVG_MB: f64 = 50.0;

struct SvgFrame {
    x_lo: f64,
    x_hi: f64,
    y_hi: f64,
}

impl SvgFrame {
    fn x(&self, v: f64) -> f64 {
        SVG_ML + (v - self.x_lo) / (self.x_hi - self.x_lo) * (SVG_W - SVG_ML - SVG_MR)
    }

    fn y(&self, v: f64) -> f64 {
        let h = SVG_H - SVG_MT - SVG_MB;
        SVG_H - SVG_MB - (v / self.y_hi).clamp(0.0, 1.0) * h
    }
}

fn svg_open(title: &str) -> String {
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<text x=\"{tx}\" y=\"20\" font-family=\"monospace\" font-size=\"14\" ",
            "text-anchor=\"middle\">{title}</text>\n"
        ),
        w = SVG_W,
        h = SVG_H,
        tx = SVG_W / 2.0,
        title = title
    )
}

fn svg_axes(f: &SvgFrame, x_label: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        svg_f(SVG_ML),
        svg_f(SVG_H - SVG_MB),
        svg_f(SVG_W - SVG_MR),
        svg_f(SVG_H - SVG_MB)
    ));
    out.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        svg_f(SVG_ML),
        svg_f(SVG_MT),
        svg_f(SVG_ML),
        svg_f(SVG_H - SVG_MB)
    ));
    for (v, anchor) in [(f.x_lo, "start"), (f.x_hi, "end")] {
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"{anchor}\">{}</text>\n",
            svg_f(f.x(v)),
            svg_f(SVG_H - SVG_MB + 18.0),
            v
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
        svg_f(SVG_ML - 6.0),
        svg_f(f.y(f.y_hi) + 4.0),
        f.y_hi
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">{x_label}</text>\n",
        svg_f((SVG_ML + SVG_W - SVG_MR) / 2.0),
        svg_f(SVG_H - 12.0)
    ));
    out
}

fn hist_bars(h: &Histogram1D, f: &SvgFrame, fill: &str) -> String {
    let mut out = String::new();
    for bin in 0..h.n_bins() {
        let c = h.contents[bin];
        if c <= 0.0 {
            continue;
        }
        let x0 = f.x(h.edges[bin]);
        let x1 = f.x(h.edges[bin + 1]);
        let y = f.y(c);
        out.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{fill}\" stroke=\"black\" stroke-width=\"0.5\"/>\n",
            svg_f(x0),
            svg_f(y),
            svg_f(x1 - x0),
            svg_f(SVG_H - SVG_MB - y)
        ));
    }
    out
}

/// Render one histogram as a standalone SVG bar chart.
pub fn histogram_to_svg(h: &Histogram1D, title: &str, x_label: &str) -> String {
    let y_hi = h.contents.iter().fold(0.0f64, |a, &b| a.max(b)).max(1e-12) * 1.1;
    let f = SvgFrame {
        x_lo: h.edges[0],
        x_hi: h.edges[h.n_bins()],
        y_hi,
    };
    let mut out = svg_open(title);
    out.push_str(&hist_bars(h, &f, "#7fa8d9"));
    out.push_str(&svg_axes(&f, x_label));
    out.push_str("</svg>\n");
    out
}

/// Render a data/MC overlay: stacked MC as filled bars, data as markers.
pub fn comparison_to_svg(
    data: &Histogram1D,
    report: &ComparisonReport,
    title: &str,
    x_label: &str,
) -> String {
    let peak = report
        .stacked
        .contents
        .iter()
        .chain(data.contents.iter())
        .fold(0.0f64, |a, &b| a.max(b));
    let f = SvgFrame {
        x_lo: data.edges[0],
        x_hi: data.edges[data.n_bins()],
        y_hi: peak.max(1e-12) * 1.15,
    };
    let mut out = svg_open(title);
    out.push_str(&hist_bars(&report.stacked, &f, "#d9b87f"));
    for bin in 0..data.n_bins() {
        let c = data.contents[bin];
        let cx = f.x(data.bin_center(bin));
        let cy = f.y(c);
        out.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"black\"/>\n",
            svg_f(cx),
            svg_f(cy)
        ));
        let err = data.sumw2[bin].sqrt();
        if err > 0.0 {
            out.push_str(&format!(
                "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>\n",
                svg_f(f.y(c + err)),
                svg_f(f.y((c - err).max(0.0))),
                x = svg_f(cx)
            ));
        }
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\">chi2/ndf = {}/{}</text>\n",
        svg_f(SVG_ML + 10.0),
        svg_f(SVG_MT + 15.0),
        svg_f(report.chi2),
        report.ndf
    ));
    out.push_str(&svg_axes(&f, x_label));
    out.push_str("</svg>\n");
    out
}
