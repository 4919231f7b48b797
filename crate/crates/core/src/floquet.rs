//! Truncated side-band systems of both driven models, the residuals whose
//! zeros are Floquet quasienergies, and the full coefficient sets at a root.
//!
//! Barrier amplitudes are stored referenced to the barrier edges,
//! `alpha_l = a_l e^{q_l b}` and `beta_l = b_l e^{-q_l a}`, so the barrier
//! wavefunction reads `alpha_l e^{q_l (x - b)} + beta_l e^{-q_l (x - a)}` and
//! every factor stays bounded for `Re q_l >= 0`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::potential::{sideband_kinematics, DriveSpec, Model, SidebandKinematics, WellGeometry};
use crate::rootfind::{find_root, RootConfig};
use crate::special::BesselTable;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Side-band orders `l != 0` in the order used by every coefficient family.
pub fn side_orders(n_sidebands: usize) -> Vec<i64> {
    let n = n_sidebands as i64;
    (-n..=n).filter(|&l| l != 0).collect()
}

struct Setup {
    geom: WellGeometry,
    kin: SidebandKinematics,
    bessel: BesselTable,
}

impl Setup {
    fn new(geom: &WellGeometry, drive: &DriveSpec, epsilon: Complex64) -> Result<Self> {
        let mut kin = sideband_kinematics(geom, drive, epsilon);
        if kin.touches_branch_point() {
            kin = sideband_kinematics(geom, drive, epsilon + 1e-14 * geom.v0);
        }
        let bessel = BesselTable::for_sidebands(drive.alpha(geom), drive.n_sidebands)?;
        Ok(Setup { geom: *geom, kin, bessel })
    }

    fn n(&self) -> i64 {
        self.kin.n_sidebands() as i64
    }

    fn j(&self, n: i64) -> f64 {
        self.bessel.get(n)
    }

    fn width(&self) -> f64 {
        self.geom.barrier_width()
    }

    /// `e^{-q_l (b - a)}`
    fn across(&self, l: i64) -> Complex64 {
        (-self.kin.q(l) * self.width()).exp()
    }

    fn trig(&self, n: i64) -> (Complex64, Complex64) {
        let ka = self.kin.k(n) * self.geom.a;
        (ka.sin(), ka.cos())
    }

    /// `A^±_{n,l}` with sign `s = ±1`.
    fn a_pm(&self, n: i64, l: i64, s: f64) -> Complex64 {
        let (sin, cos) = self.trig(n);
        cos + s * self.kin.q(l) / self.kin.k(n) * sin
    }

    /// `B^±_{n,l}` with sign `s = ±1`.
    fn b_pm(&self, n: i64, l: i64, s: f64) -> Complex64 {
        ONE + s * I * self.kin.q(l) / self.kin.k(n)
    }

    /// Row weight taming the growth of `sin`, `cos` in closed channels.
    fn well_weight(&self, n: i64) -> f64 {
        (-(self.kin.k(n).im.abs()) * self.geom.a).exp()
    }
}

/// Off-band barrier amplitudes of model A as linear functions of `a_0`, `b_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingCoefficients {
    pub n_sidebands: usize,
    /// `f_la`, indexed like [`side_orders`].
    pub a_of_a0: Vec<Complex64>,
    /// `f_lb`
    pub a_of_b0: Vec<Complex64>,
    /// `g_la`
    pub b_of_a0: Vec<Complex64>,
    /// `g_lb`
    pub b_of_b0: Vec<Complex64>,
    pub condition_estimate: f64,
    scaled: ScaledFamilies,
}

/// Edge-referenced solutions for `alpha_0 = 1` and for `beta_0 = 1`.
#[derive(Debug, Clone, PartialEq)]
struct ScaledFamilies {
    up_a: Vec<Complex64>,
    down_a: Vec<Complex64>,
    up_b: Vec<Complex64>,
    down_b: Vec<Complex64>,
}

fn solve_families(s: &Setup, epsilon: Complex64, want_condition: bool) -> Result<(ScaledFamilies, f64)> {
    let side = side_orders(s.kin.n_sidebands());
    let m = side.len();
    let mut mat = DMatrix::from_element(2 * m, 2 * m, ZERO);
    let mut rhs_a = DVector::from_element(2 * m, ZERO);
    let mut rhs_b = DVector::from_element(2 * m, ZERO);
    let across0 = s.across(0);

    for (i, &n) in side.iter().enumerate() {
        let w = s.well_weight(n);
        for (j, &l) in side.iter().enumerate() {
            let jn = s.j(n - l);
            if jn == 0.0 {
                continue;
            }
            let across = s.across(l);
            mat[(i, j)] = w * s.a_pm(n, l, -1.0) * across * jn;
            mat[(i, m + j)] = w * s.a_pm(n, l, 1.0) * jn;
            mat[(m + i, j)] = s.b_pm(n, l, 1.0) * jn;
            mat[(m + i, m + j)] = s.b_pm(n, l, -1.0) * across * jn;
        }
        let jn = s.j(n);
        rhs_a[i] = -w * s.a_pm(n, 0, -1.0) * across0 * jn;
        rhs_a[m + i] = -s.b_pm(n, 0, 1.0) * jn;
        rhs_b[i] = -w * s.a_pm(n, 0, 1.0) * jn;
        rhs_b[m + i] = -s.b_pm(n, 0, -1.0) * across0 * jn;
    }

    let (x, cond) = solve_dense(mat, &[rhs_a, rhs_b], want_condition)
        .ok_or(Error::SingularMatrix { epsilon })?;
    let fam = ScaledFamilies {
        up_a: x[0].rows(0, m).iter().copied().collect(),
        down_a: x[0].rows(m, m).iter().copied().collect(),
        up_b: x[1].rows(0, m).iter().copied().collect(),
        down_b: x[1].rows(m, m).iter().copied().collect(),
    };
    Ok((fam, cond))
}

/// Solves the off-band matching equations of model A for unit `a_0` and
/// unit `b_0`.
pub fn matching_coefficients_a(
    geom: &WellGeometry,
    drive: &DriveSpec,
    epsilon: Complex64,
) -> Result<MatchingCoefficients> {
    let s = Setup::new(geom, drive, epsilon)?;
    let (scaled, cond) = solve_families(&s, epsilon, true)?;
    let side = side_orders(drive.n_sidebands);
    let q0 = s.kin.q(0);
    let (a, b) = (geom.a, geom.b);
    let map = |fam: &[Complex64], f: &dyn Fn(Complex64) -> Complex64| -> Vec<Complex64> {
        fam.iter().zip(&side).map(|(v, &l)| v * f(s.kin.q(l))).collect()
    };
    Ok(MatchingCoefficients {
        n_sidebands: drive.n_sidebands,
        a_of_a0: map(&scaled.up_a, &|ql| ((q0 - ql) * b).exp()),
        b_of_a0: map(&scaled.down_a, &|ql| (ql * a + q0 * b).exp()),
        a_of_b0: map(&scaled.up_b, &|ql| (-ql * b - q0 * a).exp()),
        b_of_b0: map(&scaled.down_b, &|ql| ((ql - q0) * a).exp()),
        condition_estimate: cond,
        scaled,
    })
}

/// The eight coupling sums `F_1 .. F_8`; all equal one without drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FCoefficients {
    pub f: [Complex64; 8],
}

impl FCoefficients {
    /// `F_i` with the one-based index used in the matching equations.
    pub fn get(&self, i: usize) -> Complex64 {
        self.f[i - 1]
    }
}

fn f_from_families(s: &Setup, fam: &ScaledFamilies) -> FCoefficients {
    let q0 = s.kin.q(0);
    let grow = s.across(0).inv();
    let mut sums = [ZERO; 8];
    for (j, &l) in side_orders(s.kin.n_sidebands()).iter().enumerate() {
        let jl = s.j(-l);
        if jl == 0.0 {
            continue;
        }
        let e = s.across(l);
        let r = s.kin.q(l) / q0;
        let (ua, da, ub, db) = (fam.up_a[j], fam.down_a[j], fam.up_b[j], fam.down_b[j]);
        sums[0] += (ua * e + da) * jl;
        sums[1] += (ub * e + db) * jl;
        sums[2] += r * (ua * e - da) * jl;
        sums[3] -= r * (ub * e - db) * jl;
        sums[4] += (ua + da * e) * jl;
        sums[5] += (ub + db * e) * jl;
        sums[6] += r * (ua - da * e) * jl;
        sums[7] -= r * (ub - db * e) * jl;
    }
    for i in [0, 2, 5, 7] {
        sums[i] *= grow;
    }
    let j0 = s.j(0);
    FCoefficients { f: sums.map(|v| v + j0) }
}

/// Evaluates `F_1 .. F_8` from a matching solution at the same trial energy.
pub fn f_coefficients(
    geom: &WellGeometry,
    drive: &DriveSpec,
    epsilon: Complex64,
    mc: &MatchingCoefficients,
) -> Result<FCoefficients> {
    let s = Setup::new(geom, drive, epsilon)?;
    if mc.n_sidebands != drive.n_sidebands {
        return Err(Error::MismatchedParameters("matching solution has a different truncation".into()));
    }
    Ok(f_from_families(&s, &mc.scaled))
}

struct ModelAParts {
    f: FCoefficients,
    ratio: Complex64,
    value: Complex64,
}

fn residual_a_parts(s: &Setup, epsilon: Complex64) -> Result<(ModelAParts, ScaledFamilies)> {
    let (fam, _) = solve_families(s, epsilon, false)?;
    let f = f_from_families(s, &fam);
    let [f1, f2, f3, f4, f5, f6, f7, f8] = f.f;
    let k0 = s.kin.k(0);
    let q0 = s.kin.q(0);
    let (sin, cos) = s.trig(0);
    let den = f7 * q0 - I * f5 * k0;
    if cos.norm() == 0.0 || den.norm() == 0.0 {
        return Err(Error::Pole { at: epsilon });
    }
    let tan = sin / cos;
    let ratio = (f8 * q0 + I * f6 * k0) / den;
    let decay = s.across(0) * s.across(0);
    let value = f4 * q0 / k0 * tan + f2 - ratio * (f3 * q0 / k0 * tan - f1) * decay;
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(Error::Pole { at: epsilon });
    }
    Ok((ModelAParts { f, ratio, value }, fam))
}

/// Quantization function of model A; reduces to the static residual at
/// `V1 = 0`.
pub fn residual_a(geom: &WellGeometry, drive: &DriveSpec, epsilon: Complex64) -> Result<Complex64> {
    let s = Setup::new(geom, drive, epsilon)?;
    residual_a_parts(&s, epsilon).map(|(p, _)| p.value)
}

/// Well amplitudes `C_n = A'_n / A'_0` of model B.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBCoefficients {
    /// Indexed by `n + N`; the central entry is exactly one.
    pub c: Vec<Complex64>,
    pub condition_estimate: f64,
}

impl ModelBCoefficients {
    pub fn get(&self, n: i64) -> Complex64 {
        let half = (self.c.len() / 2) as i64;
        self.c[(n + half) as usize]
    }
}

/// Matching bracket of model B for channel `l` and well band `n`, without the
/// Bessel factor, multiplied by `e^{-q_l (b - a)}` when `scaled`.
fn model_b_bracket(s: &Setup, l: i64, n: i64, scaled: bool) -> Complex64 {
    let k = s.kin.k(n);
    let ql = s.kin.q(l);
    let kl = s.kin.k(l);
    let (sin, cos) = s.trig(n);
    let r = (kl + I * ql) / (kl - I * ql);
    let minus = k * cos - ql * sin;
    let plus = k * cos + ql * sin;
    let e = s.across(l);
    if scaled {
        minus * e * e - r * plus
    } else {
        minus * e - r * plus / e
    }
}

fn solve_model_b(s: &Setup, epsilon: Complex64, want_condition: bool) -> Result<ModelBCoefficients> {
    let n_sb = s.n();
    let side = side_orders(s.kin.n_sidebands());
    let m = side.len();
    let mut mat = DMatrix::from_element(m, m, ZERO);
    let mut rhs = DVector::from_element(m, ZERO);
    for (i, &l) in side.iter().enumerate() {
        for (j, &n) in side.iter().enumerate() {
            let jn = s.j(l - n);
            if jn != 0.0 {
                mat[(i, j)] = model_b_bracket(s, l, n, true) * jn * s.well_weight(n);
            }
        }
        rhs[i] = -model_b_bracket(s, l, 0, true) * s.j(l);
    }
    let (x, cond) = solve_dense(mat, &[rhs], want_condition).ok_or(Error::SingularMatrix { epsilon })?;
    let mut c = vec![ZERO; 2 * n_sb as usize + 1];
    c[n_sb as usize] = ONE;
    for (j, &n) in side.iter().enumerate() {
        c[(n + n_sb) as usize] = x[0][j] * s.well_weight(n);
    }
    Ok(ModelBCoefficients { c, condition_estimate: cond })
}

/// Solves the off-central rows of model B for `C_n`.
pub fn model_b_coefficients(
    geom: &WellGeometry,
    drive: &DriveSpec,
    epsilon: Complex64,
) -> Result<ModelBCoefficients> {
    let s = Setup::new(geom, drive, epsilon)?;
    solve_model_b(&s, epsilon, true)
}

fn residual_b_with(s: &Setup, c: &ModelBCoefficients) -> Complex64 {
    s.kin
        .orders()
        .map(|n| model_b_bracket(s, 0, n, false) * s.j(-n) * c.get(n))
        .sum()
}

/// Central-band condition of model B after eliminating `A'_{n != 0}`.
pub fn residual_b(geom: &WellGeometry, drive: &DriveSpec, epsilon: Complex64) -> Result<Complex64> {
    let s = Setup::new(geom, drive, epsilon)?;
    let c = solve_model_b(&s, epsilon, false)?;
    let value = residual_b_with(&s, &c);
    if value.re.is_finite() && value.im.is_finite() {
        Ok(value)
    } else {
        Err(Error::Pole { at: epsilon })
    }
}

/// Residual of whichever model `drive` selects.
pub fn residual(geom: &WellGeometry, drive: &DriveSpec, epsilon: Complex64) -> Result<Complex64> {
    match drive.model {
        Model::A => residual_a(geom, drive, epsilon),
        Model::B => residual_b(geom, drive, epsilon),
    }
}

/// Side-band amplitudes of a Floquet state, each indexed by `n + N`.
///
/// For model A `well` holds `A_n` (with `A_0 = 1`) and `transmitted` holds
/// `t_n`; for model B they hold `A'_n` and `t'_l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidebandCoefficients {
    pub well: Vec<Complex64>,
    /// `a_l e^{q_l b}`
    pub barrier_up: Vec<Complex64>,
    /// `b_l e^{-q_l a}`
    pub barrier_down: Vec<Complex64>,
    pub transmitted: Vec<Complex64>,
}

impl SidebandCoefficients {
    pub fn n_sidebands(&self) -> usize {
        self.well.len() / 2
    }

    fn idx(&self, n: i64) -> usize {
        (n + self.n_sidebands() as i64) as usize
    }

    pub fn well(&self, n: i64) -> Complex64 {
        self.well[self.idx(n)]
    }

    pub fn barrier_up(&self, l: i64) -> Complex64 {
        self.barrier_up[self.idx(l)]
    }

    pub fn barrier_down(&self, l: i64) -> Complex64 {
        self.barrier_down[self.idx(l)]
    }

    pub fn transmitted(&self, n: i64) -> Complex64 {
        self.transmitted[self.idx(n)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloquetRoot {
    pub epsilon: Complex64,
    pub geometry: WellGeometry,
    pub drive: DriveSpec,
    pub coefficients: SidebandCoefficients,
    pub residual_norm: f64,
    pub iterations: usize,
}

impl FloquetRoot {
    pub fn model(&self) -> Model {
        self.drive.model
    }

    pub fn kinematics(&self) -> SidebandKinematics {
        sideband_kinematics(&self.geometry, &self.drive, self.epsilon)
    }

    /// Unscaled barrier amplitudes `(a_l, b_l)`.
    pub fn barrier_amplitudes(&self, l: i64) -> (Complex64, Complex64) {
        let q = self.geometry.decay_constant(self.epsilon + l as f64 * self.drive.quantum(&self.geometry));
        let c = &self.coefficients;
        (c.barrier_up(l) * (-q * self.geometry.b).exp(), c.barrier_down(l) * (q * self.geometry.a).exp())
    }
}

fn coefficients_a(s: &Setup, epsilon: Complex64) -> Result<SidebandCoefficients> {
    let (parts, fam) = residual_a_parts(s, epsilon)?;
    let [f1, f2, ..] = parts.f.f;
    let n = s.n();
    let size = (2 * n + 1) as usize;
    let (sin0, _) = s.trig(0);
    let e0 = s.across(0);
    let y = sin0 / (f1 * parts.ratio * e0 * e0 + f2);
    let up0 = parts.ratio * y * e0;

    let mut up = vec![ZERO; size];
    let mut down = vec![ZERO; size];
    up[n as usize] = up0;
    down[n as usize] = y;
    for (j, &l) in side_orders(n as usize).iter().enumerate() {
        let i = (l + n) as usize;
        up[i] = up0 * fam.up_a[j] + y * fam.up_b[j];
        down[i] = up0 * fam.down_a[j] + y * fam.down_b[j];
    }

    let mut well = vec![ZERO; size];
    let mut transmitted = vec![ZERO; size];
    for band in -n..=n {
        let (mut at_a, mut slope_a, mut at_b) = (ZERO, ZERO, ZERO);
        for l in -n..=n {
            let jn = s.j(band - l);
            if jn == 0.0 {
                continue;
            }
            let i = (l + n) as usize;
            let e = s.across(l);
            let q = s.kin.q(l);
            at_a += (up[i] * e + down[i]) * jn;
            slope_a += q * (up[i] * e - down[i]) * jn;
            at_b += (up[i] + down[i] * e) * jn;
        }
        let k = s.kin.k(band);
        let (sin, cos) = s.trig(band);
        let i = (band + n) as usize;
        well[i] = if band == 0 {
            ONE
        } else if sin.norm() >= cos.norm() {
            at_a / sin
        } else {
            slope_a / (k * cos)
        };
        transmitted[i] = at_b * (-I * k * s.geom.b).exp();
    }
    Ok(SidebandCoefficients { well, barrier_up: up, barrier_down: down, transmitted })
}

fn coefficients_b(s: &Setup, epsilon: Complex64) -> Result<SidebandCoefficients> {
    let c = solve_model_b(s, epsilon, false)?;
    let n = s.n();
    let size = (2 * n + 1) as usize;
    let mut up = vec![ZERO; size];
    let mut down = vec![ZERO; size];
    let mut transmitted = vec![ZERO; size];
    for l in -n..=n {
        let (mut at_a, mut slope_a) = (ZERO, ZERO);
        for band in -n..=n {
            let jn = s.j(l - band);
            if jn == 0.0 {
                continue;
            }
            let (sin, cos) = s.trig(band);
            at_a += c.get(band) * sin * jn;
            slope_a += s.kin.k(band) * c.get(band) * cos * jn;
        }
        let q = s.kin.q(l);
        let kl = s.kin.k(l);
        let r = (kl + I * q) / (kl - I * q);
        let e = s.across(l);
        let beta = 0.5 * (at_a - slope_a / q);
        let alpha = -beta * e / r;
        let i = (l + n) as usize;
        up[i] = alpha;
        down[i] = beta;
        transmitted[i] = (alpha + beta * e) * (-I * kl * s.geom.b).exp();
    }
    Ok(SidebandCoefficients { well: c.c, barrier_up: up, barrier_down: down, transmitted })
}

/// Builds the full Floquet state at a (previously located) quasienergy.
pub fn floquet_state(
    geom: &WellGeometry,
    drive: &DriveSpec,
    epsilon: Complex64,
) -> Result<FloquetRoot> {
    let s = Setup::new(geom, drive, epsilon)?;
    let coefficients = match drive.model {
        Model::A => coefficients_a(&s, epsilon)?,
        Model::B => coefficients_b(&s, epsilon)?,
    };
    let residual_norm = residual(geom, drive, epsilon)?.norm();
    Ok(FloquetRoot { epsilon, geometry: *geom, drive: *drive, coefficients, residual_norm, iterations: 0 })
}

/// Locates the quasienergy nearest `guess` and assembles its Floquet state.
///
/// Only the basic drive checks are applied here; the amplitude bound and the
/// truncation floor are left to the caller.
pub fn solve_floquet(
    geom: &WellGeometry,
    drive: &DriveSpec,
    guess: Complex64,
    cfg: &RootConfig,
) -> Result<FloquetRoot> {
    geom.validate()?;
    drive.validate(geom, true)?;
    let info = find_root(|z| residual(geom, drive, z), guess, cfg)?;
    if info.root.im > 0.0 {
        return Err(Error::NonPhysical { energy: info.root });
    }
    let mut root = floquet_state(geom, drive, info.root)?;
    root.residual_norm = info.residual;
    root.iterations = info.iterations;
    Ok(root)
}

/// Relative defects of the four boundary-matching equations (value and slope
/// at `x = a`, value and slope at `x = b`), each normalized by the largest
/// term entering it.
pub fn matching_defects(root: &FloquetRoot) -> Result<[f64; 4]> {
    matching_defects_at(&root.geometry, &root.drive, root.epsilon, &root.coefficients)
}

/// Same as [`matching_defects`] for an arbitrary coefficient set.
pub fn matching_defects_at(
    geom: &WellGeometry,
    drive: &DriveSpec,
    epsilon: Complex64,
    c: &SidebandCoefficients,
) -> Result<[f64; 4]> {
    let s = Setup::new(geom, drive, epsilon)?;
    let n = s.n();
    let mut diff = [0.0f64; 4];
    let mut scale = [0.0f64; 4];
    let mut track = |i: usize, lhs: Complex64, rhs: Complex64| {
        diff[i] = diff[i].max((lhs - rhs).norm());
        scale[i] = scale[i].max(lhs.norm()).max(rhs.norm());
    };
    for band in -n..=n {
        let k = s.kin.k(band);
        let (sin, cos) = s.trig(band);
        let outgoing = (I * k * geom.b).exp();
        match drive.model {
            Model::A => {
                let mut sums = [ZERO; 4];
                for l in -n..=n {
                    let jn = s.j(band - l);
                    let (u, d, e, q) = (c.barrier_up(l), c.barrier_down(l), s.across(l), s.kin.q(l));
                    sums[0] += (u * e + d) * jn;
                    sums[1] += q * (u * e - d) * jn;
                    sums[2] += (u + d * e) * jn;
                    sums[3] += q * (u - d * e) * jn;
                }
                let a_n = c.well(band);
                let t_n = c.transmitted(band) * outgoing;
                track(0, a_n * sin, sums[0]);
                track(1, k * a_n * cos, sums[1]);
                track(2, t_n, sums[2]);
                track(3, I * k * t_n, sums[3]);
            }
            Model::B => {
                let l = band;
                let (mut at_a, mut slope_a) = (ZERO, ZERO);
                for m in -n..=n {
                    let jn = s.j(l - m);
                    let (sm, cm) = s.trig(m);
                    at_a += c.well(m) * sm * jn;
                    slope_a += s.kin.k(m) * c.well(m) * cm * jn;
                }
                let (u, d, e, q) = (c.barrier_up(l), c.barrier_down(l), s.across(l), s.kin.q(l));
                let t_l = c.transmitted(l) * outgoing;
                track(0, at_a, u * e + d);
                track(1, slope_a, q * (u * e - d));
                track(2, t_l, u + d * e);
                track(3, I * k * t_l, q * (u - d * e));
            }
        }
    }
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = if scale[i] > 0.0 { diff[i] / scale[i] } else { 0.0 };
    }
    Ok(out)
}
