//! Four-vector algebra and derived collider observables.
//!
//! Angle conventions: θ is the polar angle from the +z (beam) axis, η is the
//! pseudo-rapidity −ln tan(θ/2), φ the azimuth in (−π, π]. Components follow
//! the standard convention `px = pt·cos φ`, `py = pt·sin φ`, `pz = pt·sinh η`;
//! all rotationally invariant results (masses, ΔR, MET magnitude) are
//! independent of that choice.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use thiserror::Error;

use crate::event::PFObject;
use crate::util::CompensatedSum;

#[derive(Debug, Error)]
pub enum KinematicsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-physical four-vector: Minkowski norm² = {norm_sq} GeV² is below tolerance")]
    NonPhysical { norm_sq: f64 },
}

pub type Result<T> = std::result::Result<T, KinematicsError>;

/// Absolute slack (GeV²) tolerated on Minkowski norms of constructed particles.
pub const NORM_EPS: f64 = 1e-6;

/// Muon rest mass in GeV, used wherever muon four-vectors are rebuilt from
/// (pt, eta, phi).
pub const MUON_MASS: f64 = 0.105;

/// Energy-momentum four-vector `(E, px, py, pz)` in GeV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourVector {
    pub e: f64,
    pub px: f64,
    pub py: f64,
    pub pz: f64,
}

/// A vector in the transverse (x, y) plane, in GeV.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TransverseVector {
    pub ex: f64,
    pub ey: f64,
}

impl TransverseVector {
    pub fn magnitude(&self) -> f64 {
        self.ex.hypot(self.ey)
    }

    /// Azimuth in (−π, π]; exactly 0.0 for the zero vector.
    pub fn phi(&self) -> f64 {
        if self.magnitude() == 0.0 {
            return 0.0;
        }
        let phi = self.ey.atan2(self.ex);
        if phi == -PI {
            PI
        } else {
            phi
        }
    }
}

/// Pseudo-rapidity η = −ln tan(θ/2) for θ ∈ (0, π).
///
/// The representable right angle maps to exactly 0; elsewhere the
/// numerically stable equivalent asinh(cot θ) is used.
pub fn eta_from_theta(theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < PI) {
        return Err(KinematicsError::Domain(format!(
            "theta must lie in (0, pi), got {theta}"
        )));
    }
    if theta == FRAC_PI_2 {
        return Ok(0.0);
    }
    Ok((theta.cos() / theta.sin()).asinh())
}

/// Inverse of [`eta_from_theta`]: θ = 2·atan(e^{−η}).
pub fn theta_from_eta(eta: f64) -> f64 {
    2.0 * (-eta).exp().atan()
}

/// Wrap an azimuthal difference into (−π, π].
pub fn wrap_phi(dphi: f64) -> f64 {
    let mut d = dphi % TAU;
    if d > PI {
        d -= TAU;
    } else if d <= -PI {
        d += TAU;
    }
    d
}

/// Angular distance √(Δη² + Δφ²) with Δφ wrapped into (−π, π].
pub fn delta_r(eta1: f64, phi1: f64, eta2: f64, phi2: f64) -> f64 {
    let deta = eta1 - eta2;
    let dphi = wrap_phi(phi1 - phi2);
    deta.hypot(dphi)
}

impl FourVector {
    pub fn new(e: f64, px: f64, py: f64, pz: f64) -> Self {
        Self { e, px, py, pz }
    }

    /// Build a physical four-vector from transverse momentum, pseudo-rapidity,
    /// azimuth and rest mass; E = √((pt·cosh η)² + m²).
    pub fn from_pt_eta_phi_mass(pt: f64, eta: f64, phi: f64, mass: f64) -> Result<Self> {
        if pt < 0.0 || pt.is_nan() {
            return Err(KinematicsError::Domain(format!(
                "pt must be non-negative, got {pt}"
            )));
        }
        if mass < 0.0 || mass.is_nan() {
            return Err(KinematicsError::Domain(format!(
                "mass must be non-negative, got {mass}"
            )));
        }
        let p = pt * eta.cosh();
        Ok(Self {
            e: p.hypot(mass),
            px: pt * phi.cos(),
            py: pt * phi.sin(),
            pz: pt * eta.sinh(),
        })
    }

    pub fn pt(&self) -> f64 {
        self.px.hypot(self.py)
    }

    /// Azimuth in (−π, π]; 0.0 for vanishing transverse momentum.
    pub fn phi(&self) -> f64 {
        if self.px == 0.0 && self.py == 0.0 {
            return 0.0;
        }
        self.py.atan2(self.px)
    }

    /// Pseudo-rapidity; ±∞ along the beam axis, 0.0 for the null direction.
    pub fn eta(&self) -> f64 {
        let pt = self.pt();
        if pt == 0.0 {
            return if self.pz == 0.0 {
                0.0
            } else {
                f64::INFINITY.copysign(self.pz)
            };
        }
        (self.pz / pt).asinh()
    }

    /// Rapidity y = ½·ln((E+pz)/(E−pz)).
    pub fn rapidity(&self) -> f64 {
        0.5 * ((self.e + self.pz) / (self.e - self.pz)).ln()
    }

    pub fn add(&self, other: &FourVector) -> FourVector {
        FourVector {
            e: self.e + other.e,
            px: self.px + other.px,
            py: self.py + other.py,
            pz: self.pz + other.pz,
        }
    }

    /// Minkowski norm E² − px² − py² − pz² (GeV²).
    pub fn minkowski_norm_sq(&self) -> f64 {
        self.e * self.e - (self.px * self.px + self.py * self.py + self.pz * self.pz)
    }

    /// Rest mass √(max(0, norm²)).
    ///
    /// Negative norms within the numerical slack (NORM_EPS plus a
    /// scale-dependent rounding allowance) clamp to zero; anything beyond is
    /// an error rather than a silent clamp.
    pub fn rest_mass(&self) -> Result<f64> {
        let n = self.minkowski_norm_sq();
        if n >= 0.0 {
            return Ok(n.sqrt());
        }
        let scale =
            self.e * self.e + self.px * self.px + self.py * self.py + self.pz * self.pz;
        if n >= -(NORM_EPS + 16.0 * f64::EPSILON * scale) {
            Ok(0.0)
        } else {
            Err(KinematicsError::NonPhysical { norm_sq: n })
        }
    }
}

impl std::ops::Add for FourVector {
    type Output = FourVector;

    fn add(self, rhs: FourVector) -> FourVector {
        FourVector::add(&self, &rhs)
    }
}

/// Invariant mass of a two-particle system: the rest mass of a + b.
pub fn invariant_mass(a: &FourVector, b: &FourVector) -> Result<f64> {
    a.add(b).rest_mass()
}

/// Missing transverse energy: magnitude and azimuth of −Σ(pt·cos φ, pt·sin φ).
///
/// Returns (0.0, 0.0) for an exactly balanced (or empty) set; the azimuth is
/// 0.0 by convention whenever the magnitude vanishes.
pub fn met_from_objects(objects: impl IntoIterator<Item = (f64, f64)>) -> (f64, f64) {
    let mut sx = CompensatedSum::new();
    let mut sy = CompensatedSum::new();
    for (pt, phi) in objects {
        sx.add(pt * phi.cos());
        sy.add(pt * phi.sin());
    }
    let miss = TransverseVector {
        ex: -sx.total(),
        ey: -sy.total(),
    };
    (miss.magnitude(), miss.phi())
}

/// Scalar pt sum of charged PF objects inside the cone: counts objects with
/// `0 < ΔR(seed, obj) < cone_r`, nonzero charge and `pt ≥ min_pt`. The seed
/// itself (ΔR = 0) never contributes.
pub fn track_isolation(
    seed_eta: f64,
    seed_phi: f64,
    pf: &[PFObject],
    cone_r: f64,
    min_pt: f64,
) -> f64 {
    debug_assert!(cone_r > 0.0, "cone_r must be positive");
    let mut sum = CompensatedSum::new();
    for obj in pf {
        if obj.charge == 0 || obj.pt < min_pt {
            continue;
        }
        let dr = delta_r(seed_eta, seed_phi, obj.eta, obj.phi);
        if dr > 0.0 && dr < cone_r {
            sum.add(obj.pt);
        }
    }
    sum.total()
}

/// Isolation sum divided by the lepton pt.
pub fn relative_isolation(iso: f64, lepton_pt: f64) -> Result<f64> {
    if lepton_pt <= 0.0 || lepton_pt.is_nan() {
        return Err(KinematicsError::Domain(format!(
            "lepton pt must be positive, got {lepton_pt}"
        )));
    }
    Ok(iso / lepton_pt)
}
