//! Well geometry, drive parameters and the side-band wavenumbers shared by
//! both driven models.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::principal_complex_sqrt;

/// Static potential: infinite wall at `x = 0`, flat well on `[0, a)`,
/// barrier of height `v0` on `[a, b]`, free region beyond `b`.
///
/// All quantities are in atomic units; `mass` and `hbar` default to one but
/// are carried explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WellGeometry {
    pub v0: f64,
    pub a: f64,
    pub b: f64,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "one")]
    pub hbar: f64,
}

fn one() -> f64 {
    1.0
}

impl WellGeometry {
    pub fn new(v0: f64, a: f64, b: f64) -> Result<Self> {
        Self::with_units(v0, a, b, 1.0, 1.0)
    }

    pub fn with_units(v0: f64, a: f64, b: f64, mass: f64, hbar: f64) -> Result<Self> {
        let g = WellGeometry { v0, a, b, mass, hbar };
        g.validate()?;
        Ok(g)
    }

    /// The geometry used throughout the numerical study: `V0 = 10, a = 1, b = 2`.
    pub fn reference() -> Self {
        WellGeometry { v0: 10.0, a: 1.0, b: 2.0, mass: 1.0, hbar: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.v0, self.a, self.b, self.mass, self.hbar].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidGeometry("all parameters must be finite".into()));
        }
        if self.v0 <= 0.0 {
            return Err(Error::InvalidGeometry(format!("v0 must be > 0, got {}", self.v0)));
        }
        if !(0.0 < self.a && self.a < self.b) {
            return Err(Error::InvalidGeometry(format!(
                "need 0 < a < b, got a = {}, b = {}",
                self.a, self.b
            )));
        }
        if self.mass <= 0.0 || self.hbar <= 0.0 {
            return Err(Error::InvalidGeometry("mass and hbar must be > 0".into()));
        }
        Ok(())
    }

    /// Barrier thickness `b - a`.
    pub fn barrier_width(&self) -> f64 {
        self.b - self.a
    }

    /// `sqrt(2 m E) / hbar` on the principal branch.
    pub fn wavenumber(&self, energy: Complex64) -> Complex64 {
        principal_complex_sqrt(2.0 * self.mass * energy) / self.hbar
    }

    /// `sqrt(2 m (V0 - E)) / hbar` on the principal branch.
    pub fn decay_constant(&self, energy: Complex64) -> Complex64 {
        principal_complex_sqrt(2.0 * self.mass * (self.v0 - energy)) / self.hbar
    }
}

/// Which part of the potential oscillates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    /// Barrier height `V0 + V1 cos(wt)`.
    A,
    /// Well bottom `V1 cos(wt)` on `[0, a)`.
    B,
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Model::A => f.write_str("A"),
            Model::B => f.write_str("B"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    pub v1: f64,
    pub omega: f64,
    pub model: Model,
    pub n_sidebands: usize,
}

impl DriveSpec {
    pub fn new(v1: f64, omega: f64, model: Model, n_sidebands: usize) -> Self {
        DriveSpec { v1, omega, model, n_sidebands }
    }

    /// Drive with the default truncation `N = ceil(V1 / hbar w) + 1`.
    pub fn with_default_sidebands(geom: &WellGeometry, v1: f64, omega: f64, model: Model) -> Self {
        let alpha = v1 / (geom.hbar * omega);
        DriveSpec { v1, omega, model, n_sidebands: default_sidebands(alpha) }
    }

    /// `alpha = V1 / (hbar w)`, the Bessel argument of the side-band expansion.
    pub fn alpha(&self, geom: &WellGeometry) -> f64 {
        self.v1 / (geom.hbar * self.omega)
    }

    /// Photon energy `hbar w`.
    pub fn quantum(&self, geom: &WellGeometry) -> f64 {
        geom.hbar * self.omega
    }

    /// Checks `0 <= V1 < V0`, `w > 0` and `N >= ceil(V1 / hbar w)`.
    ///
    /// `allow_strong` skips the amplitude bound and the truncation floor so
    /// sweeps can probe the edge of the validity window.
    pub fn validate(&self, geom: &WellGeometry, allow_strong: bool) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidDrive(format!("omega must be > 0, got {}", self.omega)));
        }
        if !(self.v1 >= 0.0 && self.v1.is_finite()) {
            return Err(Error::InvalidDrive(format!("v1 must be >= 0, got {}", self.v1)));
        }
        if allow_strong {
            return Ok(());
        }
        if self.v1 >= geom.v0 {
            return Err(Error::InvalidDrive(format!(
                "v1 = {} must stay below v0 = {}",
                self.v1, geom.v0
            )));
        }
        let floor = self.alpha(geom).ceil() as usize;
        if self.n_sidebands < floor {
            return Err(Error::InvalidDrive(format!(
                "n_sidebands = {} is below ceil(V1 / hbar w) = {floor}",
                self.n_sidebands
            )));
        }
        Ok(())
    }
}

pub fn default_sidebands(alpha: f64) -> usize {
    alpha.abs().ceil() as usize + 1
}

/// Wavenumbers of every side-band channel at a trial quasienergy.
#[derive(Debug, Clone, PartialEq)]
pub struct SidebandKinematics {
    pub epsilon: Complex64,
    n_sidebands: usize,
    k: Vec<Complex64>,
    q: Vec<Complex64>,
}

impl SidebandKinematics {
    pub fn n_sidebands(&self) -> usize {
        self.n_sidebands
    }

    /// `k_n = sqrt(2m (eps + n hbar w)) / hbar`, `|n| <= N`.
    #[inline]
    pub fn k(&self, n: i64) -> Complex64 {
        self.k[(n + self.n_sidebands as i64) as usize]
    }

    /// `q_l = sqrt(2m (V0 - eps - l hbar w)) / hbar`, `|l| <= N`.
    #[inline]
    pub fn q(&self, l: i64) -> Complex64 {
        self.q[(l + self.n_sidebands as i64) as usize]
    }

    pub fn orders(&self) -> std::ops::RangeInclusive<i64> {
        let n = self.n_sidebands as i64;
        -n..=n
    }

    /// True when some `k_n` or `q_l` sits exactly on its branch point.
    pub fn touches_branch_point(&self) -> bool {
        self.k.iter().chain(&self.q).any(|z| *z == Complex64::new(0.0, 0.0))
    }
}

pub fn sideband_kinematics(
    geom: &WellGeometry,
    drive: &DriveSpec,
    epsilon: Complex64,
) -> SidebandKinematics {
    let n = drive.n_sidebands as i64;
    let quantum = drive.quantum(geom);
    let k = (-n..=n).map(|j| geom.wavenumber(epsilon + j as f64 * quantum)).collect();
    let q = (-n..=n).map(|j| geom.decay_constant(epsilon + j as f64 * quantum)).collect();
    SidebandKinematics { epsilon, n_sidebands: drive.n_sidebands, k, q }
}

/// Maps a quasienergy into the first Floquet zone `Re in [0, hbar w)`.
///
/// Returns the reduced energy and the zone index `z` with
/// `eps = eps' + z * quantum`; the imaginary part is untouched.
pub fn zone_reduce(epsilon: Complex64, quantum: f64) -> (Complex64, i64) {
    let mut z = (epsilon.re / quantum).floor();
    let mut re = epsilon.re - z * quantum;
    // rounding can leave re == quantum or a tiny negative
    if re >= quantum {
        re -= quantum;
        z += 1.0;
    } else if re < 0.0 {
        re += quantum;
        z -= 1.0;
    }
    (Complex64::new(re, epsilon.im), z as i64)
}
