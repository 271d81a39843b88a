//! Event-record types, the columnar event table, and schema validation.
//!
//! An [`Event`] is the typed in-memory view of one collision: scalar metadata
//! plus ragged per-object collections. An [`EventTable`] is the columnar view
//! of a batch of events, keyed by the file-facing variable names
//! (`vecMuon_PT`, `nPF`, `fMET_PT`, ...). Column names follow the convention
//! prefix ∈ {`n`, `f`, `vec`} + object infix + `_` + suffix, except a small
//! whitelist of bare metadata names (`nEvent`, `runNum`, `evtNum`,
//! `lumisection` and the `HLT_*` trigger flags).
//!
//! Charge-like fields are float-typed in tables and files (matching the
//! published schema) but small integers on the typed structs; the conversion
//! happens only in [`table_from_events`] / [`events_from_table`] and is exact.

use std::f64::consts::PI;
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EventModelError {
    #[error("event {index} is invalid: {first}")]
    InvalidEvent {
        index: usize,
        first: String,
        report: ValidationReport,
    },
    #[error("schema error in column {column}: {message}")]
    Schema { column: String, message: String },
    #[error("tau raw-isolation values must be present on every tau or on none")]
    MixedTauRawIso,
}

/// PDG Monte Carlo particle numbering; e.g. 13 = μ⁻, −13 = μ⁺. Zero is not a
/// valid code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PdgId(pub i32);

impl PdgId {
    /// True for any neutrino or antineutrino flavour.
    pub fn is_neutrino(&self) -> bool {
        matches!(self.0.abs(), 12 | 14 | 16)
    }

    pub fn is_muon(&self) -> bool {
        self.0.abs() == 13
    }
}

/// One particle-flow candidate. Positions in cm, momenta/energies in GeV.
#[derive(Debug, Clone, PartialEq)]
pub struct PFObject {
    pub pt: f64,
    pub eta: f64,
    pub phi: f64,
    pub energy: f64,
    pub charge: i32,
    pub mass: f64,
    pub pf_type: PdgId,
    pub ecal_e: f64,
    pub hcal_e: f64,
    pub ndof: i32,
    pub chi2: f64,
    /// Primary-vertex index; −1 when unassociated.
    pub pv_id: i32,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    /// Index of the jet this object belongs to; −1 when unclustered.
    pub jet_num: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Muon {
    pub pt: f64,
    pub pt_err: f64,
    pub eta: f64,
    pub phi: f64,
    pub charge: i32,
    pub sta_pt: f64,
    pub sta_eta: f64,
    pub sta_phi: f64,
    pub trk_iso03: f64,
    pub ecal_iso03: f64,
    pub hcal_iso03: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Electron {
    pub pt: f64,
    pub eta: f64,
    pub phi: f64,
    pub charge: i32,
    pub trk_iso03: f64,
    pub ecal_iso03: f64,
    pub hcal_iso03: f64,
    pub d0: f64,
    pub dz: f64,
}

/// Raw tau isolation discriminants; stored only when the optional columns are
/// present in the source table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauRawIso {
    pub iso3_hits: f64,
    pub mva3_old_dm_wo_lt: f64,
    pub mva3_new_dm_wo_lt: f64,
    pub mva3_new_dm_w_lt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tau {
    pub pt: f64,
    pub eta: f64,
    pub phi: f64,
    pub charge: i32,
    pub raw_iso: Option<TauRawIso>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Photon {
    pub pt: f64,
    pub eta: f64,
    pub phi: f64,
    pub hovere: f64,
    pub sthovere: f64,
    pub has_pixel_seed: bool,
    pub is_conv: bool,
    pub pass_electron_veto: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub n_tracks_fit: i32,
    pub ndof: i32,
    pub chi2: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McTruthParticle {
    pub pt: f64,
    pub eta: f64,
    pub phi: f64,
    pub mass: f64,
    /// Mother vertex ids; −1 when absent.
    pub mothers_first: i32,
    pub mothers_second: i32,
    /// Flavour codes of the incoming partons.
    pub id_1: i32,
    pub id_2: i32,
    /// Beam momentum fractions in [0, 1]; −1.0 when unset.
    pub x_1: f64,
    pub x_2: f64,
    pub pdg_id: PdgId,
    pub status: i32,
    /// Rapidity.
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub pt: f64,
    pub eta: f64,
    pub phi: f64,
    pub charge: i32,
    pub mass: f64,
    pub d0: f64,
    pub dz: f64,
    pub n_charged: i32,
    pub n_neutrals: i32,
    pub n_particles: i32,
    pub beta: f64,
    pub beta_star: f64,
    pub dr2_mean: f64,
    pub area: f64,
    pub energy: f64,
    pub ch_em_energy: f64,
    pub neu_em_energy: f64,
    pub ch_had_energy: f64,
    pub neu_had_energy: f64,
    pub mc_flavor: i32,
    pub gen_pt: f64,
    pub gen_eta: f64,
    pub gen_phi: f64,
    pub gen_mass: f64,
    pub flavor_match_pt: f64,
    /// 0 = no quality, 1 = loose, 2 = tight.
    pub id_quality: i32,
    /// Jet index in decreasing-pt order.
    pub num: i32,
    /// Matched generator-level index; −1 when unmatched.
    pub match_idx: i32,
    /// Jet energy correction factor; always positive.
    pub jec: f64,
}

/// Trigger flag names in canonical column order.
pub const TRIGGER_NAMES: [&str; 5] = [
    "HLT_Mu17_Mu8",
    "HLT_Mu24",
    "HLT_MET120_v",
    "HLT_Ele27",
    "HLT_HT350",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Triggers {
    pub mu17_mu8: bool,
    pub mu24: bool,
    pub met120_v: bool,
    pub ele27: bool,
    pub ht350: bool,
}

impl Triggers {
    pub fn get(&self, name: &str) -> Option<bool> {
        match name {
            "HLT_Mu17_Mu8" => Some(self.mu17_mu8),
            "HLT_Mu24" => Some(self.mu24),
            "HLT_MET120_v" => Some(self.met120_v),
            "HLT_Ele27" => Some(self.ele27),
            "HLT_HT350" => Some(self.ht350),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventMeta {
    /// 1-based index within the batch.
    pub n_event: i64,
    pub run_num: i64,
    pub evt_num: i64,
    pub lumisection: f64,
    pub met_pt: f64,
    /// Stored verbatim; a pseudo-rapidity for a transverse quantity is not
    /// derivable and is never computed from.
    pub met_eta: f64,
    pub met_phi: f64,
    pub triggers: Triggers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub meta: EventMeta,
    pub pf: Vec<PFObject>,
    pub electrons: Vec<Electron>,
    pub muons: Vec<Muon>,
    pub taus: Vec<Tau>,
    pub vertices: Vec<Vertex>,
    pub photons: Vec<Photon>,
    pub mc_truth: Vec<McTruthParticle>,
    pub jets: Vec<Jet>,
}

impl Event {
    /// An event with empty collections, defaulted metadata and the given
    /// 1-based index.
    pub fn empty(n_event: i64) -> Self {
        Event {
            meta: EventMeta {
                n_event,
                run_num: 1,
                evt_num: n_event,
                lumisection: 1.0,
                met_pt: 0.0,
                met_eta: 0.0,
                met_phi: 0.0,
                triggers: Triggers::default(),
            },
            pf: Vec::new(),
            electrons: Vec::new(),
            muons: Vec::new(),
            taus: Vec::new(),
            vertices: Vec::new(),
            photons: Vec::new(),
            mc_truth: Vec::new(),
            jets: Vec::new(),
        }
    }
}

// ---------------------------------------------------------------------------
// Columnar table
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Int,
    Float,
    Bool,
    IntList,
    FloatList,
    BoolList,
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ColumnKind::Int => "Int",
            ColumnKind::Float => "Float",
            ColumnKind::Bool => "Bool",
            ColumnKind::IntList => "IntList",
            ColumnKind::FloatList => "FloatList",
            ColumnKind::BoolList => "BoolList",
        };
        f.write_str(s)
    }
}

/// One column of an [`EventTable`]: a scalar per event or a ragged array per
/// event.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Int(Vec<i64>),
    Float(Vec<f64>),
    Bool(Vec<bool>),
    IntList(Vec<Vec<i64>>),
    FloatList(Vec<Vec<f64>>),
    BoolList(Vec<Vec<bool>>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Int(v) => v.len(),
            Column::Float(v) => v.len(),
            Column::Bool(v) => v.len(),
            Column::IntList(v) => v.len(),
            Column::FloatList(v) => v.len(),
            Column::BoolList(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ColumnKind {
        match self {
            Column::Int(_) => ColumnKind::Int,
            Column::Float(_) => ColumnKind::Float,
            Column::Bool(_) => ColumnKind::Bool,
            Column::IntList(_) => ColumnKind::IntList,
            Column::FloatList(_) => ColumnKind::FloatList,
            Column::BoolList(_) => ColumnKind::BoolList,
        }
    }

    /// Ragged length at the given row; None for scalar columns.
    pub fn row_len(&self, row: usize) -> Option<usize> {
        match self {
            Column::IntList(v) => Some(v[row].len()),
            Column::FloatList(v) => Some(v[row].len()),
            Column::BoolList(v) => Some(v[row].len()),
            _ => None,
        }
    }
}

/// Columnar batch of events; iteration order of `columns` is the canonical
/// column order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventTable {
    pub columns: IndexMap<String, Column>,
    pub n_rows: usize,
}

impl EventTable {
    pub fn new(n_rows: usize) -> Self {
        EventTable {
            columns: IndexMap::new(),
            n_rows,
        }
    }

    pub fn get(&self, name: &str) -> Option<&Column> {
        self.columns.get(name)
    }

    pub fn insert(&mut self, name: impl Into<String>, column: Column) {
        self.columns.insert(name.into(), column);
    }
}

// ---------------------------------------------------------------------------
// Schema registry
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct ColumnSpec {
    pub name: &'static str,
    pub kind: ColumnKind,
    pub required: bool,
    /// Float-typed in tables/files but integer-valued (converted exactly on
    /// the typed structs).
    pub int_valued: bool,
}

const fn req(name: &'static str, kind: ColumnKind) -> ColumnSpec {
    ColumnSpec {
        name,
        kind,
        required: true,
        int_valued: false,
    }
}

const fn req_int_as_float(name: &'static str) -> ColumnSpec {
    ColumnSpec {
        name,
        kind: ColumnKind::FloatList,
        required: true,
        int_valued: true,
    }
}

const fn opt(name: &'static str, kind: ColumnKind) -> ColumnSpec {
    ColumnSpec {
        name,
        kind,
        required: false,
        int_valued: false,
    }
}

use ColumnKind::{Bool, BoolList, Float, FloatList, Int, IntList};

/// The full column registry in canonical order: event metadata first, then
/// per-object blocks (count column followed by the object's arrays).
pub const SCHEMA: &[ColumnSpec] = &[
    req("nEvent", Int),
    req("runNum", Int),
    req("evtNum", Int),
    req("lumisection", Float),
    req("fMET_PT", Float),
    req("fMET_Eta", Float),
    req("fMET_Phi", Float),
    req("HLT_Mu17_Mu8", Bool),
    req("HLT_Mu24", Bool),
    req("HLT_MET120_v", Bool),
    req("HLT_Ele27", Bool),
    req("HLT_HT350", Bool),
    // Particle flow
    req("nPF", Int),
    req("vecPF_PT", FloatList),
    req("vecPF_Eta", FloatList),
    req("vecPF_Phi", FloatList),
    req("vecPF_E", FloatList),
    req_int_as_float("vecPF_Q"),
    req("vecPF_Mass", FloatList),
    req("vecPF_PfType", IntList),
    req("vecPF_EcalE", FloatList),
    req("vecPF_HcalE", FloatList),
    req_int_as_float("vecPF_ndof"),
    req("vecPF_Chi2", FloatList),
    req("vecPF_pvId", IntList),
    req("vecPF_X", FloatList),
    req("vecPF_Y", FloatList),
    req("vecPF_Z", FloatList),
    req("vecPF_JetNum", IntList),
    // Electrons
    req("nEle", Int),
    req("vecEle_PT", FloatList),
    req("vecEle_Eta", FloatList),
    req("vecEle_Phi", FloatList),
    req_int_as_float("vecEle_Q"),
    req("vecEle_TrkIso03", FloatList),
    req("vecEle_EcalIso03", FloatList),
    req("vecEle_HcalIso03", FloatList),
    req("vecEle_D0", FloatList),
    req("vecEle_Dz", FloatList),
    // Muons
    req("nMuon", Int),
    req("vecMuon_PT", FloatList),
    req("vecMuon_Eta", FloatList),
    req("vecMuon_Phi", FloatList),
    req("vecMuon_PTErr", FloatList),
    req_int_as_float("vecMuon_Q"),
    req("vecMuon_StaPt", FloatList),
    req("vecMuon_StaEta", FloatList),
    req("vecMuon_StaPhi", FloatList),
    req("vecMuon_TrkIso03", FloatList),
    req("vecMuon_EcalIso03", FloatList),
    req("vecMuon_HcalIso03", FloatList),
    // Taus
    req("nTau", Int),
    req("vecTau_PT", FloatList),
    req("vecTau_Eta", FloatList),
    req("vecTau_Phi", FloatList),
    req_int_as_float("vecTau_Q"),
    opt("vecTau_RawIso3Hits", FloatList),
    opt("vecTau_RawIsoMVA3oldDMwoLT", FloatList),
    opt("vecTau_RawIsoMVA3newDMwoLT", FloatList),
    opt("vecTau_RawIsoMVA3newDMwLT", FloatList),
    // Vertices
    req("nVertex", Int),
    req("vecVertex_nTracksfit", IntList),
    req_int_as_float("vecVertex_ndof"),
    req("vecVertex_Chi2", FloatList),
    req("vecVertex_X", FloatList),
    req("vecVertex_Y", FloatList),
    req("vecVertex_Z", FloatList),
    // Photons
    req("nPhoton", Int),
    req("vecPhoton_PT", FloatList),
    req("vecPhoton_Eta", FloatList),
    req("vecPhoton_Phi", FloatList),
    req("vecPhoton_Hovere", FloatList),
    req("vecPhoton_Sthovere", FloatList),
    req("vecPhoton_HasPixelSeed", BoolList),
    req("vecPhoton_IsConv", BoolList),
    req("vecPhoton_PassElectronVeto", BoolList),
    // Monte Carlo truth
    req("nMctruth", Int),
    req("vecMctruth_PT", FloatList),
    req("vecMctruth_Eta", FloatList),
    req("vecMctruth_Phi", FloatList),
    req("vecMctruth_Mass", FloatList),
    req("vecMctruth_Mothers.first", IntList),
    req("vecMctruth_Mothers.second", IntList),
    req("vecMctruth_Id_1", IntList),
    req("vecMctruth_Id_2", IntList),
    req("vecMctruth_X_1", FloatList),
    req("vecMctruth_X_2", FloatList),
    req_int_as_float("vecMctruth_PdgId"),
    req("vecMctruth_Status", IntList),
    req("vecMctruth_Y", FloatList),
    // Jets
    req("nJets", Int),
    req("vecJet_PT", FloatList),
    req("vecJet_Eta", FloatList),
    req("vecJet_Phi", FloatList),
    req_int_as_float("vecJet_Q"),
    req("vecJet_Mass", FloatList),
    req("vecJet_D0", FloatList),
    req("vecJet_Dz", FloatList),
    req("vecJet_nCharged", IntList),
    req("vecJet_nNeutrals", IntList),
    req("vecJet_nParticles", IntList),
    req("vecJet_Beta", FloatList),
    req("vecJet_BetaStar", FloatList),
    req("vecJet_dR2Mean", FloatList),
    req("vecJet_Area", FloatList),
    req("vecJet_Energy", FloatList),
    req("vecJet_chEmEnergy", FloatList),
    req("vecJet_neuEmEnergy", FloatList),
    req("vecJet_chHadEnergy", FloatList),
    req("vecJet_neuHadEnergy", FloatList),
    req("vecJet_mcFlavor", IntList),
    req("vecJet_GenPT", FloatList),
    req("vecJet_GenEta", FloatList),
    req("vecJet_GenPhi", FloatList),
    req("vecJet_GenMass", FloatList),
    req("vecJet_flavorMatchPT", FloatList),
    req("vecJet_ID", IntList),
    req("vecJet_Num", IntList),
    req("vecJet_MatchIdx", IntList),
    req("vecJet_JEC", FloatList),
];

/// Object infix → count column name. The jet count is the plural `nJets`.
pub const OBJECTS: &[(&str, &str)] = &[
    ("PF", "nPF"),
    ("Ele", "nEle"),
    ("Muon", "nMuon"),
    ("Tau", "nTau"),
    ("Vertex", "nVertex"),
    ("Photon", "nPhoton"),
    ("Mctruth", "nMctruth"),
    ("Jet", "nJets"),
];

/// Bare metadata names exempt from the prefix+object+suffix convention.
pub const BARE_META: [&str; 9] = [
    "nEvent",
    "runNum",
    "evtNum",
    "lumisection",
    "HLT_Mu17_Mu8",
    "HLT_Mu24",
    "HLT_MET120_v",
    "HLT_Ele27",
    "HLT_HT350",
];

const TAU_RAW_ISO_COLUMNS: [&str; 4] = [
    "vecTau_RawIso3Hits",
    "vecTau_RawIsoMVA3oldDMwoLT",
    "vecTau_RawIsoMVA3newDMwoLT",
    "vecTau_RawIsoMVA3newDMwLT",
];

pub fn schema_column(name: &str) -> Option<&'static ColumnSpec> {
    SCHEMA.iter().find(|c| c.name == name)
}

/// Result of parsing a column name against the naming convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParsedName<'a> {
    /// Whitelisted bare metadata name.
    Bare(&'a str),
    /// `n<Object>` count column.
    Count { object: &'a str },
    /// `f<Object>_<Suffix>` scalar.
    Scalar { object: &'a str, suffix: &'a str },
    /// `vec<Object>_<Suffix>` ragged array.
    Array { object: &'a str, suffix: &'a str },
}

fn valid_object(object: &str) -> bool {
    object
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_uppercase())
}

/// Parse a column name; `None` means the name violates the convention.
pub fn parse_column_name(name: &str) -> Option<ParsedName<'_>> {
    if BARE_META.contains(&name) {
        return Some(ParsedName::Bare(name));
    }
    if let Some(rest) = name.strip_prefix("vec") {
        let (object, suffix) = rest.split_once('_')?;
        if valid_object(object) && !suffix.is_empty() {
            return Some(ParsedName::Array { object, suffix });
        }
        return None;
    }
    if let Some(rest) = name.strip_prefix('f') {
        let (object, suffix) = rest.split_once('_')?;
        if valid_object(object) && !suffix.is_empty() {
            return Some(ParsedName::Scalar { object, suffix });
        }
        return None;
    }
    if let Some(object) = name.strip_prefix('n') {
        if valid_object(object) && !object.contains('_') {
            return Some(ParsedName::Count { object });
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// A violated invariant with the path of the offending field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Validation outcome; an empty violation list means the event is valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Table-level violation; `column` names the offending column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableViolation {
    pub column: String,
    pub message: String,
}

impl fmt::Display for TableViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.column, self.message)
    }
}

#[derive(Debug, Clone, Default)]
pub struct TableReport {
    pub violations: Vec<TableViolation>,
    pub warnings: Vec<String>,
}

impl TableReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check every structural invariant of one event. Validation never aborts: the
/// report lists all violations, and an empty report means valid.
pub fn validate_event(e: &Event) -> ValidationReport {
    let mut out = Vec::new();
    let mut check = |ok: bool, path: String, message: String| {
        if !ok {
            out.push(Violation { path, message });
        }
    };

    check(
        e.meta.n_event >= 1,
        "meta.n_event".into(),
        format!("must be >= 1, got {}", e.meta.n_event),
    );
    check(
        e.meta.met_pt >= 0.0,
        "meta.met_pt".into(),
        format!("must be >= 0, got {}", e.meta.met_pt),
    );

    let n_jets = e.jets.len() as i32;
    let n_vertices = e.vertices.len() as i32;
    for (i, o) in e.pf.iter().enumerate() {
        let p = |field: &str| format!("pf[{i}].{field}");
        check(o.pt >= 0.0, p("pt"), format!("must be >= 0, got {}", o.pt));
        check(
            o.energy >= 0.0,
            p("energy"),
            format!("must be >= 0, got {}", o.energy),
        );
        check(
            o.ecal_e >= 0.0,
            p("ecal_e"),
            format!("must be >= 0, got {}", o.ecal_e),
        );
        check(
            o.hcal_e >= 0.0,
            p("hcal_e"),
            format!("must be >= 0, got {}", o.hcal_e),
        );
        check(
            (-PI..=PI).contains(&o.phi),
            p("phi"),
            format!("must lie in [-pi, pi], got {}", o.phi),
        );
        check(
            o.eta.abs() <= 10.0,
            p("eta"),
            format!("|eta| must be <= 10, got {}", o.eta),
        );
        check(
            (-1..=1).contains(&o.charge),
            p("charge"),
            format!("must be in {{-1, 0, 1}}, got {}", o.charge),
        );
        check(
            o.pf_type.0 != 0,
            p("pf_type"),
            "pdg code must be nonzero".into(),
        );
        check(
            o.ndof >= 0,
            p("ndof"),
            format!("must be >= 0, got {}", o.ndof),
        );
        check(
            o.jet_num >= -1 && o.jet_num < n_jets,
            p("jet_num"),
            format!("must be in [-1, {n_jets}), got {}", o.jet_num),
        );
        check(
            o.pv_id >= -1 && o.pv_id < n_vertices,
            p("pv_id"),
            format!("must be in [-1, {n_vertices}), got {}", o.pv_id),
        );
    }

    for (i, m) in e.muons.iter().enumerate() {
        let p = |field: &str| format!("muons[{i}].{field}");
        check(
            m.charge == 1 || m.charge == -1,
            p("charge"),
            format!("must be +1 or -1, got {}", m.charge),
        );
        check(m.pt >= 0.0, p("pt"), format!("must be >= 0, got {}", m.pt));
        for (field, v) in [
            ("trk_iso03", m.trk_iso03),
            ("ecal_iso03", m.ecal_iso03),
            ("hcal_iso03", m.hcal_iso03),
        ] {
            check(v >= 0.0, p(field), format!("must be >= 0, got {v}"));
        }
    }

    for (i, el) in e.electrons.iter().enumerate() {
        let p = |field: &str| format!("electrons[{i}].{field}");
        check(
            el.charge == 1 || el.charge == -1,
            p("charge"),
            format!("must be +1 or -1, got {}", el.charge),
        );
        check(
            el.pt >= 0.0,
            p("pt"),
            format!("must be >= 0, got {}", el.pt),
        );
    }

    for (i, tau) in e.taus.iter().enumerate() {
        let p = |field: &str| format!("taus[{i}].{field}");
        check(
            tau.charge == 1 || tau.charge == -1,
            p("charge"),
            format!("must be +1 or -1, got {}", tau.charge),
        );
        check(
            tau.pt >= 0.0,
            p("pt"),
            format!("must be >= 0, got {}", tau.pt),
        );
    }

    for (i, ph) in e.photons.iter().enumerate() {
        let p = |field: &str| format!("photons[{i}].{field}");
        check(
            ph.pt >= 0.0,
            p("pt"),
            format!("must be >= 0, got {}", ph.pt),
        );
        check(
            ph.hovere >= 0.0,
            p("hovere"),
            format!("must be >= 0, got {}", ph.hovere),
        );
    }

    for (i, v) in e.vertices.iter().enumerate() {
        check(
            v.n_tracks_fit >= 0,
            format!("vertices[{i}].n_tracks_fit"),
            format!("must be >= 0, got {}", v.n_tracks_fit),
        );
    }

    for (i, t) in e.mc_truth.iter().enumerate() {
        let p = |field: &str| format!("mc_truth[{i}].{field}");
        check(t.pt >= 0.0, p("pt"), format!("must be >= 0, got {}", t.pt));
        check(
            t.pdg_id.0 != 0,
            p("pdg_id"),
            "pdg code must be nonzero".into(),
        );
        for (field, x) in [("x_1", t.x_1), ("x_2", t.x_2)] {
            check(
                x == -1.0 || (0.0..=1.0).contains(&x),
                p(field),
                format!("must lie in [0, 1] or be the unset sentinel -1, got {x}"),
            );
        }
    }

    for (i, j) in e.jets.iter().enumerate() {
        let p = |field: &str| format!("jets[{i}].{field}");
        check(
            j.n_charged >= 0 && j.n_neutrals >= 0,
            p("n_charged"),
            format!(
                "counts must be >= 0, got charged {} neutrals {}",
                j.n_charged, j.n_neutrals
            ),
        );
        check(
            j.n_particles == j.n_charged + j.n_neutrals,
            p("n_particles"),
            format!(
                "must equal n_charged + n_neutrals = {}, got {}",
                j.n_charged + j.n_neutrals,
                j.n_particles
            ),
        );
        check(
            (0..=2).contains(&j.id_quality),
            p("id_quality"),
            format!("must be 0, 1 or 2, got {}", j.id_quality),
        );
        check(
            j.jec > 0.0,
            p("jec"),
            format!("must be > 0, got {}", j.jec),
        );
    }

    ValidationReport { violations: out }
}

/// Check table-level invariants: name convention, schema presence and types,
/// per-row count consistency, and integer-validity of float-typed integer
/// columns. Unknown but well-formed columns produce warnings, never errors.
pub fn validate_table(t: &EventTable) -> TableReport {
    let mut report = TableReport::default();

    for (name, col) in &t.columns {
        if col.len() != t.n_rows {
            report.violations.push(TableViolation {
                column: name.clone(),
                message: format!("has {} entries, table has {} rows", col.len(), t.n_rows),
            });
        }
        if parse_column_name(name).is_none() {
            report.violations.push(TableViolation {
                column: name.clone(),
                message: "does not follow the naming convention (prefix n/f/vec + object + _ + suffix)"
                    .into(),
            });
            continue;
        }
        match schema_column(name) {
            Some(spec) => {
                if col.kind() != spec.kind {
                    report.violations.push(TableViolation {
                        column: name.clone(),
                        message: format!("expected kind {}, got {}", spec.kind, col.kind()),
                    });
                } else if spec.int_valued {
                    if let Column::FloatList(rows) = col {
                        'rows: for (row, values) in rows.iter().enumerate() {
                            for &v in values {
                                if v.fract() != 0.0 || v.abs() > f64::from(i32::MAX) {
                                    report.violations.push(TableViolation {
                                        column: name.clone(),
                                        message: format!(
                                            "row {row}: value {v} is not an exact small integer"
                                        ),
                                    });
                                    break 'rows;
                                }
                            }
                        }
                    }
                }
            }
            None => report
                .warnings
                .push(format!("unknown column {name} (accepted, not validated)")),
        }
    }

    for spec in SCHEMA.iter().filter(|s| s.required) {
        if !t.columns.contains_key(spec.name) {
            report.violations.push(TableViolation {
                column: spec.name.to_string(),
                message: "required column is missing".into(),
            });
        }
    }

    let present_raw_iso = TAU_RAW_ISO_COLUMNS
        .iter()
        .filter(|c| t.columns.contains_key(**c))
        .count();
    if present_raw_iso != 0 && present_raw_iso != TAU_RAW_ISO_COLUMNS.len() {
        report.violations.push(TableViolation {
            column: TAU_RAW_ISO_COLUMNS[0].to_string(),
            message: "tau raw-isolation columns must appear together or not at all".into(),
        });
    }

    for (object, count_name) in OBJECTS {
        let Some(Column::Int(counts)) = t.get(count_name) else {
            continue;
        };
        if counts.len() != t.n_rows {
            continue;
        }
        if let Some(row) = counts.iter().position(|&c| c < 0) {
            report.violations.push(TableViolation {
                column: count_name.to_string(),
                message: format!("row {row}: negative object count"),
            });
            continue;
        }
        let prefix = format!("vec{object}_");
        for (name, col) in &t.columns {
            if !name.starts_with(&prefix) || col.len() != t.n_rows {
                continue;
            }
            for (row, &count) in counts.iter().enumerate() {
                let Some(len) = col.row_len(row) else { break };
                if len as i64 != count {
                    report.violations.push(TableViolation {
                        column: name.clone(),
                        message: format!(
                            "row {row}: length {len} disagrees with {count_name} = {count}"
                        ),
                    });
                    break;
                }
            }
        }
    }

    report
}

// ---------------------------------------------------------------------------
// Event <-> table conversion
// ---------------------------------------------------------------------------

/// Transpose events into the columnar representation. Every event must be
/// individually valid; the output holds the full required column set (plus the
/// tau raw-isolation columns when every tau carries them).
pub fn table_from_events(events: &[Event]) -> Result<EventTable, EventModelError> {
    for (index, e) in events.iter().enumerate() {
        let report = validate_event(e);
        if let Some(first) = report.violations.first() {
            return Err(EventModelError::InvalidEvent {
                index,
                first: first.to_string(),
                report,
            });
        }
    }

    let mut saw_some = false;
    let mut saw_none = false;
    for tau in events.iter().flat_map(|e| &e.taus) {
        match tau.raw_iso {
            Some(_) => saw_some = true,
            None => saw_none = true,
        }
    }
    if saw_some && saw_none {
        return Err(EventModelError::MixedTauRawIso);
    }
    let with_raw_iso = saw_some;

    let mut t = EventTable::new(events.len());
    let ints = |f: fn(&Event) -> i64| Column::Int(events.iter().map(f).collect());
    let floats = |f: fn(&Event) -> f64| Column::Float(events.iter().map(f).collect());
    let bools = |f: fn(&Event) -> bool| Column::Bool(events.iter().map(f).collect());

    t.insert("nEvent", ints(|e| e.meta.n_event));
    t.insert("runNum", ints(|e| e.meta.run_num));
    t.insert("evtNum", ints(|e| e.meta.evt_num));
    t.insert("lumisection", floats(|e| e.meta.lumisection));
    t.insert("fMET_PT", floats(|e| e.meta.met_pt));
    t.insert("fMET_Eta", floats(|e| e.meta.met_eta));
    t.insert("fMET_Phi", floats(|e| e.meta.met_phi));
    t.insert("HLT_Mu17_Mu8", bools(|e| e.meta.triggers.mu17_mu8));
    t.insert("HLT_Mu24", bools(|e| e.meta.triggers.mu24));
    t.insert("HLT_MET120_v", bools(|e| e.meta.triggers.met120_v));
    t.insert("HLT_Ele27", bools(|e| e.meta.triggers.ele27));
    t.insert("HLT_HT350", bools(|e| e.meta.triggers.ht350));

    macro_rules! list {
        ($collection:ident, $map:expr) => {
            Column::FloatList(
                events
                    .iter()
                    .map(|e| e.$collection.iter().map($map).collect())
                    .collect(),
            )
        };
    }
    macro_rules! ilist {
        ($collection:ident, $map:expr) => {
            Column::IntList(
                events
                    .iter()
                    .map(|e| e.$collection.iter().map($map).collect())
                    .collect(),
            )
        };
    }
    macro_rules! blist {
        ($collection:ident, $map:expr) => {
            Column::BoolList(
                events
                    .iter()
                    .map(|e| e.$collection.iter().map($map).collect())
                    .collect(),
            )
        };
    }

    t.insert("nPF", ints(|e| e.pf.len() as i64));
    t.insert("vecPF_PT", list!(pf, |o| o.pt));
    t.insert("vecPF_Eta", list!(pf, |o| o.eta));
    t.insert("vecPF_Phi", list!(pf, |o| o.phi));
    t.insert("vecPF_E", list!(pf, |o| o.energy));
    t.insert("vecPF_Q", list!(pf, |o| f64::from(o.charge)));
    t.insert("vecPF_Mass", list!(pf, |o| o.mass));
    t.insert("vecPF_PfType", ilist!(pf, |o| i64::from(o.pf_type.0)));
    t.insert("vecPF_EcalE", list!(pf, |o| o.ecal_e));
    t.insert("vecPF_HcalE", list!(pf, |o| o.hcal_e));
    t.insert("vecPF_ndof", list!(pf, |o| f64::from(o.ndof)));
    t.insert("vecPF_Chi2", list!(pf, |o| o.chi2));
    t.insert("vecPF_pvId", ilist!(pf, |o| i64::from(o.pv_id)));
    t.insert("vecPF_X", list!(pf, |o| o.vx));
    t.insert("vecPF_Y", list!(pf, |o| o.vy));
    t.insert("vecPF_Z", list!(pf, |o| o.vz));
    t.insert("vecPF_JetNum", ilist!(pf, |o| i64::from(o.jet_num)));

    t.insert("nEle", ints(|e| e.electrons.len() as i64));
    t.insert("vecEle_PT", list!(electrons, |o| o.pt));
    t.insert("vecEle_Eta", list!(electrons, |o| o.eta));
    t.insert("vecEle_Phi", list!(electrons, |o| o.phi));
    t.insert("vecEle_Q", list!(electrons, |o| f64::from(o.charge)));
    t.insert("vecEle_TrkIso03", list!(electrons, |o| o.trk_iso03));
    t.insert("vecEle_EcalIso03", list!(electrons, |o| o.ecal_iso03));
    t.insert("vecEle_HcalIso03", list!(electrons, |o| o.hcal_iso03));
    t.insert("vecEle_D0", list!(electrons, |o| o.d0));
    t.insert("vecEle_Dz", list!(electrons, |o| o.dz));

    t.insert("nMuon", ints(|e| e.muons.len() as i64));
    t.insert("vecMuon_PT", list!(muons, |o| o.pt));
    t.insert("vecMuon_Eta", list!(muons, |o| o.eta));
    t.insert("vecMuon_Phi", list!(muons, |o| o.phi));
    t.insert("vecMuon_PTErr", list!(muons, |o| o.pt_err));
    t.insert("vecMuon_Q", list!(muons, |o| f64::from(o.charge)));
    t.insert("vecMuon_StaPt", list!(muons, |o| o.sta_pt));
    t.insert("vecMuon_StaEta", list!(muons, |o| o.sta_eta));
    t.insert("vecMuon_StaPhi", list!(muons, |o| o.sta_phi));
    t.insert("vecMuon_TrkIso03", list!(muons, |o| o.trk_iso03));
    t.insert("vecMuon_EcalIso03", list!(muons, |o| o.ecal_iso03));
    t.insert("vecMuon_HcalIso03", list!(muons, |o| o.hcal_iso03));

    t.insert("nTau", ints(|e| e.taus.len() as i64));
    t.insert("vecTau_PT", list!(taus, |o| o.pt));
    t.insert("vecTau_Eta", list!(taus, |o| o.eta));
    t.insert("vecTau_Phi", list!(taus, |o| o.phi));
    t.insert("vecTau_Q", list!(taus, |o| f64::from(o.charge)));
    if with_raw_iso {
        let raw = |f: fn(&TauRawIso) -> f64| {
            Column::FloatList(
                events
                    .iter()
                    .map(|e| {
                        e.taus
                            .iter()
                            .map(|tau| f(tau.raw_iso.as_ref().expect("checked above")))
                            .collect()
                    })
                    .collect(),
            )
        };
        t.insert("vecTau_RawIso3Hits", raw(|r| r.iso3_hits));
        t.insert("vecTau_RawIsoMVA3oldDMwoLT", raw(|r| r.mva3_old_dm_wo_lt));
        t.insert("vecTau_RawIsoMVA3newDMwoLT", raw(|r| r.mva3_new_dm_wo_lt));
        t.insert("vecTau_RawIsoMVA3newDMwLT", raw(|r| r.mva3_new_dm_w_lt));
    }

    t.insert("nVertex", ints(|e| e.vertices.len() as i64));
    t.insert(
        "vecVertex_nTracksfit",
        ilist!(vertices, |o| i64::from(o.n_tracks_fit)),
    );
    t.insert("vecVertex_ndof", list!(vertices, |o| f64::from(o.ndof)));
    t.insert("vecVertex_Chi2", list!(vertices, |o| o.chi2));
    t.insert("vecVertex_X", list!(vertices, |o| o.x));
    t.insert("vecVertex_Y", list!(vertices, |o| o.y));
    t.insert("vecVertex_Z", list!(vertices, |o| o.z));

    t.insert("nPhoton", ints(|e| e.photons.len() as i64));
    t.insert("vecPhoton_PT", list!(photons, |o| o.pt));
    t.insert("vecPhoton_Eta", list!(photons, |o| o.eta));
    t.insert("vecPhoton_Phi", list!(photons, |o| o.phi));
    t.insert("vecPhoton_Hovere", list!(photons, |o| o.hovere));
    t.insert("vecPhoton_Sthovere", list!(photons, |o| o.sthovere));
    t.insert("vecPhoton_HasPixelSeed", blist!(photons, |o| o.has_pixel_seed));
    t.insert("vecPhoton_IsConv", blist!(photons, |o| o.is_conv));
    t.insert(
        "vecPhoton_PassElectronVeto",
        blist!(photons, |o| o.pass_electron_veto),
    );

    t.insert("nMctruth", ints(|e| e.mc_truth.len() as i64));
    t.insert("vecMctruth_PT", list!(mc_truth, |o| o.pt));
    t.insert("vecMctruth_Eta", list!(mc_truth, |o| o.eta));
    t.insert("vecMctruth_Phi", list!(mc_truth, |o| o.phi));
    t.insert("vecMctruth_Mass", list!(mc_truth, |o| o.mass));
    t.insert(
        "vecMctruth_Mothers.first",
        ilist!(mc_truth, |o| i64::from(o.mothers_first)),
    );
    t.insert(
        "vecMctruth_Mothers.second",
        ilist!(mc_truth, |o| i64::from(o.mothers_second)),
    );
    t.insert("vecMctruth_Id_1", ilist!(mc_truth, |o| i64::from(o.id_1)));
    t.insert("vecMctruth_Id_2", ilist!(mc_truth, |o| i64::from(o.id_2)));
    t.insert("vecMctruth_X_1", list!(mc_truth, |o| o.x_1));
    t.insert("vecMctruth_X_2", list!(mc_truth, |o| o.x_2));
    t.insert("vecMctruth_PdgId", list!(mc_truth, |o| f64::from(o.pdg_id.0)));
    t.insert("vecMctruth_Status", ilist!(mc_truth, |o| i64::from(o.status)));
    t.insert("vecMctruth_Y", list!(mc_truth, |o| o.y));

    t.insert("nJets", ints(|e| e.jets.len() as i64));
    t.insert("vecJet_PT", list!(jets, |o| o.pt));
    t.insert("vecJet_Eta", list!(jets, |o| o.eta));
    t.insert("vecJet_Phi", list!(jets, |o| o.phi));
    t.insert("vecJet_Q", list!(jets, |o| f64::from(o.charge)));
    t.insert("vecJet_Mass", list!(jets, |o| o.mass));
    t.insert("vecJet_D0", list!(jets, |o| o.d0));
    t.insert("vecJet_Dz", list!(jets, |o| o.dz));
    t.insert("vecJet_nCharged", ilist!(jets, |o| i64::from(o.n_charged)));
    t.insert("vecJet_nNeutrals", ilist!(jets, |o| i64::from(o.n_neutrals)));
    t.insert("vecJet_nParticles", ilist!(jets, |o| i64::from(o.n_particles)));
    t.insert("vecJet_Beta", list!(jets, |o| o.beta));
    t.insert("vecJet_BetaStar", list!(jets, |o| o.beta_star));
    t.insert("vecJet_dR2Mean", list!(jets, |o| o.dr2_mean));
    t.insert("vecJet_Area", list!(jets, |o| o.area));
    t.insert("vecJet_Energy", list!(jets, |o| o.energy));
    t.insert("vecJet_chEmEnergy", list!(jets, |o| o.ch_em_energy));
    t.insert("vecJet_neuEmEnergy", list!(jets, |o| o.neu_em_energy));
    t.insert("vecJet_chHadEnergy", list!(jets, |o| o.ch_had_energy));
    t.insert("vecJet_neuHadEnergy", list!(jets, |o| o.neu_had_energy));
    t.insert("vecJet_mcFlavor", ilist!(jets, |o| i64::from(o.mc_flavor)));
    t.insert("vecJet_GenPT", list!(jets, |o| o.gen_pt));
    t.insert("vecJet_GenEta", list!(jets, |o| o.gen_eta));
    t.insert("vecJet_GenPhi", list!(jets, |o| o.gen_phi));
    t.insert("vecJet_GenMass", list!(jets, |o| o.gen_mass));
    t.insert("vecJet_flavorMatchPT", list!(jets, |o| o.flavor_match_pt));
    t.insert("vecJet_ID", ilist!(jets, |o| i64::from(o.id_quality)));
    t.insert("vecJet_Num", ilist!(jets, |o| i64::from(o.num)));
    t.insert("vecJet_MatchIdx", ilist!(jets, |o| i64::from(o.match_idx)));
    t.insert("vecJet_JEC", list!(jets, |o| o.jec));

    Ok(t)
}

fn schema_err(column: &str, message: impl Into<String>) -> EventModelError {
    EventModelError::Schema {
        column: column.to_string(),
        message: message.into(),
    }
}

struct TableReader<'a> {
    t: &'a EventTable,
}

impl<'a> TableReader<'a> {
    fn ints(&self, name: &str) -> &'a [i64] {
        match self.t.get(name) {
            Some(Column::Int(v)) => v,
            _ => unreachable!("validated: {name}"),
        }
    }

    fn floats(&self, name: &str) -> &'a [f64] {
        match self.t.get(name) {
            Some(Column::Float(v)) => v,
            _ => unreachable!("validated: {name}"),
        }
    }

    fn bools(&self, name: &str) -> &'a [bool] {
        match self.t.get(name) {
            Some(Column::Bool(v)) => v,
            _ => unreachable!("validated: {name}"),
        }
    }

    fn float_list(&self, name: &str) -> &'a [Vec<f64>] {
        match self.t.get(name) {
            Some(Column::FloatList(v)) => v,
            _ => unreachable!("validated: {name}"),
        }
    }

    fn int_list(&self, name: &str) -> &'a [Vec<i64>] {
        match self.t.get(name) {
            Some(Column::IntList(v)) => v,
            _ => unreachable!("validated: {name}"),
        }
    }

    fn bool_list(&self, name: &str) -> &'a [Vec<bool>] {
        match self.t.get(name) {
            Some(Column::BoolList(v)) => v,
            _ => unreachable!("validated: {name}"),
        }
    }
}

fn small_int(column: &str, v: i64) -> Result<i32, EventModelError> {
    i32::try_from(v).map_err(|_| schema_err(column, format!("value {v} exceeds 32-bit range")))
}

/// Rebuild typed events from a columnar table. The first failed schema check
/// is reported with the offending column name; the result is the exact inverse
/// of [`table_from_events`].
pub fn events_from_table(t: &EventTable) -> Result<Vec<Event>, EventModelError> {
    let report = validate_table(t);
    if let Some(v) = report.violations.first() {
        return Err(schema_err(&v.column, v.message.clone()));
    }

    let r = TableReader { t };
    let with_raw_iso = t.columns.contains_key("vecTau_RawIso3Hits");
    let mut events = Vec::with_capacity(t.n_rows);

    for row in 0..t.n_rows {
        let meta = EventMeta {
            n_event: r.ints("nEvent")[row],
            run_num: r.ints("runNum")[row],
            evt_num: r.ints("evtNum")[row],
            lumisection: r.floats("lumisection")[row],
            met_pt: r.floats("fMET_PT")[row],
            met_eta: r.floats("fMET_Eta")[row],
            met_phi: r.floats("fMET_Phi")[row],
            triggers: Triggers {
                mu17_mu8: r.bools("HLT_Mu17_Mu8")[row],
                mu24: r.bools("HLT_Mu24")[row],
                met120_v: r.bools("HLT_MET120_v")[row],
                ele27: r.bools("HLT_Ele27")[row],
                ht350: r.bools("HLT_HT350")[row],
            },
        };

        let n_pf = r.ints("nPF")[row] as usize;
        let mut pf = Vec::with_capacity(n_pf);
        for i in 0..n_pf {
            pf.push(PFObject {
                pt: r.float_list("vecPF_PT")[row][i],
                eta: r.float_list("vecPF_Eta")[row][i],
                phi: r.float_list("vecPF_Phi")[row][i],
                energy: r.float_list("vecPF_E")[row][i],
                charge: r.float_list("vecPF_Q")[row][i] as i32,
                mass: r.float_list("vecPF_Mass")[row][i],
                pf_type: PdgId(small_int("vecPF_PfType", r.int_list("vecPF_PfType")[row][i])?),
                ecal_e: r.float_list("vecPF_EcalE")[row][i],
                hcal_e: r.float_list("vecPF_HcalE")[row][i],
                ndof: r.float_list("vecPF_ndof")[row][i] as i32,
                chi2: r.float_list("vecPF_Chi2")[row][i],
                pv_id: small_int("vecPF_pvId", r.int_list("vecPF_pvId")[row][i])?,
                vx: r.float_list("vecPF_X")[row][i],
                vy: r.float_list("vecPF_Y")[row][i],
                vz: r.float_list("vecPF_Z")[row][i],
                jet_num: small_int("vecPF_JetNum", r.int_list("vecPF_JetNum")[row][i])?,
            });
        }

        let n_ele = r.ints("nEle")[row] as usize;
        let mut electrons = Vec::with_capacity(n_ele);
        for i in 0..n_ele {
            electrons.push(Electron {
                pt: r.float_list("vecEle_PT")[row][i],
                eta: r.float_list("vecEle_Eta")[row][i],
                phi: r.float_list("vecEle_Phi")[row][i],
                charge: r.float_list("vecEle_Q")[row][i] as i32,
                trk_iso03: r.float_list("vecEle_TrkIso03")[row][i],
                ecal_iso03: r.float_list("vecEle_EcalIso03")[row][i],
                hcal_iso03: r.float_list("vecEle_HcalIso03")[row][i],
                d0: r.float_list("vecEle_D0")[row][i],
                dz: r.float_list("vecEle_Dz")[row][i],
            });
        }

        let n_muon = r.ints("nMuon")[row] as usize;
        let mut muons = Vec::with_capacity(n_muon);
        for i in 0..n_muon {
            muons.push(Muon {
                pt: r.float_list("vecMuon_PT")[row][i],
                eta: r.float_list("vecMuon_Eta")[row][i],
                phi: r.float_list("vecMuon_Phi")[row][i],
                pt_err: r.float_list("vecMuon_PTErr")[row][i],
                charge: r.float_list("vecMuon_Q")[row][i] as i32,
                sta_pt: r.float_list("vecMuon_StaPt")[row][i],
                sta_eta: r.float_list("vecMuon_StaEta")[row][i],
                sta_phi: r.float_list("vecMuon_StaPhi")[row][i],
                trk_iso03: r.float_list("vecMuon_TrkIso03")[row][i],
                ecal_iso03: r.float_list("vecMuon_EcalIso03")[row][i],
                hcal_iso03: r.float_list("vecMuon_HcalIso03")[row][i],
            });
        }

        let n_tau = r.ints("nTau")[row] as usize;
        let mut taus = Vec::with_capacity(n_tau);
        for i in 0..n_tau {
            let raw_iso = if with_raw_iso {
                Some(TauRawIso {
                    iso3_hits: r.float_list("vecTau_RawIso3Hits")[row][i],
                    mva3_old_dm_wo_lt: r.float_list("vecTau_RawIsoMVA3oldDMwoLT")[row][i],
                    mva3_new_dm_wo_lt: r.float_list("vecTau_RawIsoMVA3newDMwoLT")[row][i],
                    mva3_new_dm_w_lt: r.float_list("vecTau_RawIsoMVA3newDMwLT")[row][i],
                })
            } else {
                None
            };
            taus.push(Tau {
                pt: r.float_list("vecTau_PT")[row][i],
                eta: r.float_list("vecTau_Eta")[row][i],
                phi: r.float_list("vecTau_Phi")[row][i],
                charge: r.float_list("vecTau_Q")[row][i] as i32,
                raw_iso,
            });
        }

        let n_vtx = r.ints("nVertex")[row] as usize;
        let mut vertices = Vec::with_capacity(n_vtx);
        for i in 0..n_vtx {
            vertices.push(Vertex {
                n_tracks_fit: small_int(
                    "vecVertex_nTracksfit",
                    r.int_list("vecVertex_nTracksfit")[row][i],
                )?,
                ndof: r.float_list("vecVertex_ndof")[row][i] as i32,
                chi2: r.float_list("vecVertex_Chi2")[row][i],
                x: r.float_list("vecVertex_X")[row][i],
                y: r.float_list("vecVertex_Y")[row][i],
                z: r.float_list("vecVertex_Z")[row][i],
            });
        }

        let n_photon = r.ints("nPhoton")[row] as usize;
        let mut photons = Vec::with_capacity(n_photon);
        for i in 0..n_photon {
            photons.push(Photon {
                pt: r.float_list("vecPhoton_PT")[row][i],
                eta: r.float_list("vecPhoton_Eta")[row][i],
                phi: r.float_list("vecPhoton_Phi")[row][i],
                hovere: r.float_list("vecPhoton_Hovere")[row][i],
                sthovere: r.float_list("vecPhoton_Sthovere")[row][i],
                has_pixel_seed: r.bool_list("vecPhoton_HasPixelSeed")[row][i],
                is_conv: r.bool_list("vecPhoton_IsConv")[row][i],
                pass_electron_veto: r.bool_list("vecPhoton_PassElectronVeto")[row][i],
            });
        }

        let n_truth = r.ints("nMctruth")[row] as usize;
        let mut mc_truth = Vec::with_capacity(n_truth);
        for i in 0..n_truth {
            mc_truth.push(McTruthParticle {
                pt: r.float_list("vecMctruth_PT")[row][i],
                eta: r.float_list("vecMctruth_Eta")[row][i],
                phi: r.float_list("vecMctruth_Phi")[row][i],
                mass: r.float_list("vecMctruth_Mass")[row][i],
                mothers_first: small_int(
                    "vecMctruth_Mothers.first",
                    r.int_list("vecMctruth_Mothers.first")[row][i],
                )?,
                mothers_second: small_int(
                    "vecMctruth_Mothers.second",
                    r.int_list("vecMctruth_Mothers.second")[row][i],
                )?,
                id_1: small_int("vecMctruth_Id_1", r.int_list("vecMctruth_Id_1")[row][i])?,
                id_2: small_int("vecMctruth_Id_2", r.int_list("vecMctruth_Id_2")[row][i])?,
                x_1: r.float_list("vecMctruth_X_1")[row][i],
                x_2: r.float_list("vecMctruth_X_2")[row][i],
                pdg_id: PdgId(r.float_list("vecMctruth_PdgId")[row][i] as i32),
                status: small_int("vecMctruth_Status", r.int_list("vecMctruth_Status")[row][i])?,
                y: r.float_list("vecMctruth_Y")[row][i],
            });
        }

        let n_jets = r.ints("nJets")[row] as usize;
        let mut jets = Vec::with_capacity(n_jets);
        for i in 0..n_jets {
            jets.push(Jet {
                pt: r.float_list("vecJet_PT")[row][i],
                eta: r.float_list("vecJet_Eta")[row][i],
                phi: r.float_list("vecJet_Phi")[row][i],
                charge: r.float_list("vecJet_Q")[row][i] as i32,
                mass: r.float_list("vecJet_Mass")[row][i],
                d0: r.float_list("vecJet_D0")[row][i],
                dz: r.float_list("vecJet_Dz")[row][i],
                n_charged: small_int("vecJet_nCharged", r.int_list("vecJet_nCharged")[row][i])?,
                n_neutrals: small_int("vecJet_nNeutrals", r.int_list("vecJet_nNeutrals")[row][i])?,
                n_particles: small_int(
                    "vecJet_nParticles",
                    r.int_list("vecJet_nParticles")[row][i],
                )?,
                beta: r.float_list("vecJet_Beta")[row][i],
                beta_star: r.float_list("vecJet_BetaStar")[row][i],
                dr2_mean: r.float_list("vecJet_dR2Mean")[row][i],
                area: r.float_list("vecJet_Area")[row][i],
                energy: r.float_list("vecJet_Energy")[row][i],
                ch_em_energy: r.float_list("vecJet_chEmEnergy")[row][i],
                neu_em_energy: r.float_list("vecJet_neuEmEnergy")[row][i],
                ch_had_energy: r.float_list("vecJet_chHadEnergy")[row][i],
                neu_had_energy: r.float_list("vecJet_neuHadEnergy")[row][i],
                mc_flavor: small_int("vecJet_mcFlavor", r.int_list("vecJet_mcFlavor")[row][i])?,
                gen_pt: r.float_list("vecJet_GenPT")[row][i],
                gen_eta: r.float_list("vecJet_GenEta")[row][i],
                gen_phi: r.float_list("vecJet_GenPhi")[row][i],
                gen_mass: r.float_list("vecJet_GenMass")[row][i],
                flavor_match_pt: r.float_list("vecJet_flavorMatchPT")[row][i],
                id_quality: small_int("vecJet_ID", r.int_list("vecJet_ID")[row][i])?,
                num: small_int("vecJet_Num", r.int_list("vecJet_Num")[row][i])?,
                match_idx: small_int("vecJet_MatchIdx", r.int_list("vecJet_MatchIdx")[row][i])?,
                jec: r.float_list("vecJet_JEC")[row][i],
            });
        }

        events.push(Event {
            meta,
            pf,
            electrons,
            muons,
            taus,
            vertices,
            photons,
            mc_truth,
            jets,
        });
    }

    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_muon(pt: f64, charge: i32) -> Muon {
        Muon {
            pt,
            pt_err: 0.01 * pt,
            eta: 0.4,
            phi: -1.2,
            charge,
            sta_pt: pt,
            sta_eta: 0.4,
            sta_phi: -1.2,
            trk_iso03: 0.5,
            ecal_iso03: 0.2,
            hcal_iso03: 0.1,
        }
    }

    fn sample_pf(pt: f64) -> PFObject {
        PFObject {
            pt,
            eta: -0.3,
            phi: 2.0,
            energy: pt * 0.3f64.cosh(),
            charge: 1,
            mass: 0.0,
            pf_type: PdgId(211),
            ecal_e: 0.3 * pt,
            hcal_e: 0.7 * pt,
            ndof: 12,
            chi2: 12.0,
            pv_id: -1,
            vx: 0.0,
            vy: 0.0,
            vz: 1.5,
            jet_num: -1,
        }
    }

    fn full_event(n_event: i64) -> Event {
        let mut e = Event::empty(n_event);
        e.pf = vec![sample_pf(10.0), sample_pf(4.0)];
        e.muons = vec![sample_muon(25.0, -1), sample_muon(18.0, 1)];
        e.electrons = vec![Electron {
            pt: 30.0,
            eta: 1.0,
            phi: 0.1,
            charge: -1,
            trk_iso03: 0.0,
            ecal_iso03: 0.0,
            hcal_iso03: 0.0,
            d0: 0.01,
            dz: 0.05,
        }];
        e.taus = vec![Tau {
            pt: 20.0,
            eta: -1.5,
            phi: 2.2,
            charge: 1,
            raw_iso: Some(TauRawIso {
                iso3_hits: 1.0,
                mva3_old_dm_wo_lt: 0.5,
                mva3_new_dm_wo_lt: 0.6,
                mva3_new_dm_w_lt: 0.7,
            }),
        }];
        e.photons = vec![Photon {
            pt: 12.0,
            eta: 0.2,
            phi: -2.8,
            hovere: 0.02,
            sthovere: 0.01,
            has_pixel_seed: false,
            is_conv: true,
            pass_electron_veto: true,
        }];
        e.vertices = vec![Vertex {
            n_tracks_fit: 11,
            ndof: 19,
            chi2: 18.5,
            x: 0.0,
            y: 0.0,
            z: -2.2,
        }];
        e.mc_truth = vec![McTruthParticle {
            pt: 45.0,
            eta: 0.3,
            phi: 1.0,
            mass: 0.105,
            mothers_first: -1,
            mothers_second: -1,
            id_1: 2,
            id_2: -2,
            x_1: 0.05,
            x_2: 0.02,
            pdg_id: PdgId(13),
            status: 1,
            y: 0.3,
        }];
        e.jets = vec![Jet {
            pt: 35.0,
            eta: -0.3,
            phi: 2.0,
            charge: 1,
            mass: 5.0,
            d0: 0.0,
            dz: 0.0,
            n_charged: 2,
            n_neutrals: 0,
            n_particles: 2,
            beta: 1.0,
            beta_star: 0.0,
            dr2_mean: 0.01,
            area: 0.5,
            energy: 40.0,
            ch_em_energy: 10.0,
            neu_em_energy: 0.0,
            ch_had_energy: 30.0,
            neu_had_energy: 0.0,
            mc_flavor: 21,
            gen_pt: 34.0,
            gen_eta: -0.3,
            gen_phi: 2.0,
            gen_mass: 4.5,
            flavor_match_pt: 34.0,
            id_quality: 2,
            num: 0,
            match_idx: 0,
            jec: 1.0,
        }];
        e.pf[0].jet_num = 0;
        e.pf[1].jet_num = 0;
        e.meta.met_pt = 12.0;
        e.meta.met_phi = -0.7;
        e.meta.triggers.mu24 = true;
        e
    }

    #[test]
    fn empty_event_is_valid() {
        assert!(validate_event(&Event::empty(1)).is_valid());
    }

    #[test]
    fn consistent_event_is_valid() {
        let report = validate_event(&full_event(1));
        assert!(report.is_valid(), "{:?}", report.violations);
    }

    #[test]
    fn violations_carry_paths() {
        let mut e = full_event(1);
        e.muons[1].charge = 0;
        e.pf[0].jet_num = 7;
        e.jets[0].n_particles = 5;
        e.mc_truth[0].x_1 = 1.4;
        e.meta.met_pt = -1.0;
        let report = validate_event(&e);
        let paths: Vec<&str> = report.violations.iter().map(|v| v.path.as_str()).collect();
        assert!(paths.contains(&"muons[1].charge"));
        assert!(paths.contains(&"pf[0].jet_num"));
        assert!(paths.contains(&"jets[0].n_particles"));
        assert!(paths.contains(&"mc_truth[0].x_1"));
        assert!(paths.contains(&"meta.met_pt"));
    }

    #[test]
    fn name_parsing_covers_all_shapes() {
        assert_eq!(
            parse_column_name("vecMuon_PT"),
            Some(ParsedName::Array {
                object: "Muon",
                suffix: "PT"
            })
        );
        assert_eq!(
            parse_column_name("vecMctruth_Mothers.first"),
            Some(ParsedName::Array {
                object: "Mctruth",
                suffix: "Mothers.first"
            })
        );
        assert_eq!(
            parse_column_name("fMET_PT"),
            Some(ParsedName::Scalar {
                object: "MET",
                suffix: "PT"
            })
        );
        assert_eq!(parse_column_name("nPF"), Some(ParsedName::Count { object: "PF" }));
        assert_eq!(parse_column_name("nJets"), Some(ParsedName::Count { object: "Jets" }));
        assert_eq!(parse_column_name("nEvent"), Some(ParsedName::Bare("nEvent")));
        assert_eq!(parse_column_name("HLT_Mu24"), Some(ParsedName::Bare("HLT_Mu24")));
        assert_eq!(parse_column_name("garbage"), None);
        assert_eq!(parse_column_name("vec_X"), None);
        assert_eq!(parse_column_name("vecmuon_pt"), None);
        assert_eq!(parse_column_name("run_number"), None);
    }

    #[test]
    fn every_schema_name_parses() {
        for spec in SCHEMA {
            assert!(
                parse_column_name(spec.name).is_some(),
                "{} must parse",
                spec.name
            );
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let events = vec![full_event(1), full_event(2), Event::empty(3)];
        // Raw-iso presence must be homogeneous across the batch.
        let mut events = events;
        events[2].taus = vec![];
        let t = table_from_events(&events).unwrap();
        assert_eq!(t.n_rows, 3);
        let back = events_from_table(&t).unwrap();
        assert_eq!(back, events);
    }

    #[test]
    fn table_column_set_matches_schema() {
        let t = table_from_events(&[full_event(1)]).unwrap();
        let expected: Vec<&str> = SCHEMA.iter().map(|s| s.name).collect();
        let got: Vec<&str> = t.columns.keys().map(|s| s.as_str()).collect();
        assert_eq!(got, expected);

        // Without raw-iso taus the four optional columns are omitted.
        let t = table_from_events(&[Event::empty(1)]).unwrap();
        assert!(!t.columns.contains_key("vecTau_RawIso3Hits"));
        assert_eq!(t.columns.len(), SCHEMA.len() - 4);
    }

    #[test]
    fn object_count_columns_track_collection_sizes() {
        let sizes = [1046usize, 1820, 1524];
        let events: Vec<Event> = sizes
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let mut e = Event::empty(i as i64 + 1);
                e.pf = (0..n).map(|k| sample_pf(1.0 + k as f64 * 0.01)).collect();
                e
            })
            .collect();
        let t = table_from_events(&events).unwrap();
        assert_eq!(
            t.get("nPF"),
            Some(&Column::Int(vec![1046, 1820, 1524]))
        );
    }

    #[test]
    fn mixed_raw_iso_is_rejected() {
        let mut with = full_event(1);
        let mut without = full_event(2);
        without.taus[0].raw_iso = None;
        let err = table_from_events(&[with.clone(), without]).unwrap_err();
        assert!(matches!(err, EventModelError::MixedTauRawIso));
        with.muons[0].charge = 2;
        assert!(matches!(
            table_from_events(&[with]).unwrap_err(),
            EventModelError::InvalidEvent { index: 0, .. }
        ));
    }

    #[test]
    fn missing_column_is_named() {
        let mut t = table_from_events(&[full_event(1)]).unwrap();
        t.columns.shift_remove("vecMuon_Eta");
        match events_from_table(&t).unwrap_err() {
            EventModelError::Schema { column, .. } => assert_eq!(column, "vecMuon_Eta"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn count_mismatch_names_first_offending_column() {
        let mut t = table_from_events(&[full_event(1)]).unwrap();
        if let Some(Column::Int(v)) = t.columns.get_mut("nMuon") {
            v[0] = 3; // the arrays hold 2 entries
        }
        let report = validate_table(&t);
        assert!(report
            .violations
            .iter()
            .any(|v| v.column == "vecMuon_PT" && v.message.contains("nMuon")));
    }

    #[test]
    fn unknown_columns_warn_but_pass() {
        let mut t = table_from_events(&[full_event(1)]).unwrap();
        t.insert("vecMuon_Undocumented", Column::FloatList(vec![vec![1.0, 2.0]]));
        let report = validate_table(&t);
        assert!(report.is_valid(), "{:?}", report.violations);
        assert!(report.warnings.iter().any(|w| w.contains("vecMuon_Undocumented")));

        t.insert("no-convention", Column::Float(vec![0.0]));
        assert!(!validate_table(&t).is_valid());
    }

    #[test]
    fn non_integral_charge_is_a_violation() {
        let mut t = table_from_events(&[full_event(1)]).unwrap();
        if let Some(Column::FloatList(v)) = t.columns.get_mut("vecMuon_Q") {
            v[0][0] = -0.5;
        }
        let report = validate_table(&t);
        assert!(report
            .violations
            .iter()
            .any(|v| v.column == "vecMuon_Q"));
    }

    #[test]
    fn empty_batch_produces_full_empty_table() {
        let t = table_from_events(&[]).unwrap();
        assert_eq!(t.n_rows, 0);
        assert_eq!(t.columns.len(), SCHEMA.len() - 4);
        assert!(events_from_table(&t).unwrap().is_empty());
    }
}
