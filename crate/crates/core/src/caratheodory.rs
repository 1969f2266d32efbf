//! Carathéodory functions: analytic `p` on the disk with `p(0) = 1` and
//! positive real part.
//!
//! Two representations are used. [`HerglotzSpec`] is a finite average of the
//! extreme points `(1 + ηz)/(1 - ηz)`, `|η| = 1`, whose coefficients are
//! `c_n = 2 Σ w_k η_k^n`. [`BodyPoint`] is the chart `(c1, ζ)` of the first
//! two coefficients with `c1 ∈ [0, 2]` real and `|ζ| ≤ 1`:
//!
//! ```text
//! c2 = c1²/2 + (4 - c1²) ζ / 2
//! ```
//!
//! [`NamedGenerator`] collects the rational generators used as extremal
//! witnesses.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::series::{Series, SeriesError};

/// Weight-sum and unit-modulus tolerance for Herglotz atoms.
pub const ATOM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CaratheodoryError {
    #[error("a Herglotz measure needs at least one atom")]
    Empty,
    #[error("negative atom weight {0}")]
    NegativeWeight(f64),
    #[error("atom weights sum to {0}, expected 1")]
    WeightSum(f64),
    #[error("atom point {0} is not on the unit circle")]
    OffCircle(Complex64),
    #[error("generator parameter {name} = {value} outside {range}")]
    ParameterRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("body point (c1 = {c1}, |zeta| = {zeta_abs}) outside c1 in [0, 2], |zeta| <= 1")]
    OutsideBody { c1: f64, zeta_abs: f64 },
    #[error("degenerate realization: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

type Result<T> = std::result::Result<T, CaratheodoryError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub weight: f64,
    pub point: Complex64,
}

/// A finite Herglotz measure `Σ w_k δ_{η_k}` on the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub struct HerglotzSpec {
    atoms: Vec<Atom>,
}

impl HerglotzSpec {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(CaratheodoryError::Empty);
        }
        let mut total = 0.0;
        for a in &atoms {
            if a.weight < 0.0 {
                return Err(CaratheodoryError::NegativeWeight(a.weight));
            }
            if (a.point.norm() - 1.0).abs() > ATOM_TOL {
                return Err(CaratheodoryError::OffCircle(a.point));
            }
            total += a.weight;
        }
        if (total - 1.0).abs() > ATOM_TOL {
            return Err(CaratheodoryError::WeightSum(total));
        }
        Ok(HerglotzSpec { atoms })
    }

    /// Single atom at `η`, the extreme point `(1 + ηz)/(1 - ηz)`.
    pub fn extreme(point: Complex64) -> Result<Self> {
        HerglotzSpec::new(vec![Atom { weight: 1.0, point }])
    }

    /// Random measure with `1..=max_atoms` atoms at uniform angles.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max_atoms: usize) -> Self {
        let k = rng.gen_range(1..=max_atoms.max(1));
        let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(1e-3..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let atoms = raw
            .into_iter()
            .map(|w| Atom {
                weight: w / total,
                point: Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI)),
            })
            .collect();
        HerglotzSpec { atoms }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `c_n = 2 Σ w_k η_k^n` for `n ≥ 1`, and `1` for `n = 0`.
    pub fn coefficient(&self, n: usize) -> Complex64 {
        if n == 0 {
            return Complex64::new(1.0, 0.0);
        }
        self.atoms
            .iter()
            .map(|a| a.point.powu(n as u32) * (2.0 * a.weight))
            .sum()
    }

    pub fn series(&self, order: usize) -> Series {
        Series::from_coeffs((0..=order).map(|n| self.coefficient(n)), order)
    }

    /// `p(z)` in closed form (valid on the open disk).
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.atoms
            .iter()
            .map(|a| (1.0 + a.point * z) / (1.0 - a.point * z) * a.weight)
            .sum()
    }
}

/// Coefficients of a Herglotz measure up to `order`.
pub fn herglotz_series(spec: &HerglotzSpec, order: usize) -> Series {
    spec.series(order)
}

/// A point `(c1, ζ)` of the normalized coefficient body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BodyPoint {
    pub c1: f64,
    pub zeta: Complex64,
}

/// Slack allowed when validating body coordinates supplied by callers.
const BODY_TOL: f64 = 1e-12;

impl BodyPoint {
    pub fn new(c1: f64, zeta: Complex64) -> Result<Self> {
        if !(-BODY_TOL..=2.0 + BODY_TOL).contains(&c1) || zeta.norm() > 1.0 + BODY_TOL {
            return Err(CaratheodoryError::OutsideBody {
                c1,
                zeta_abs: zeta.norm(),
            });
        }
        Ok(BodyPoint { c1, zeta })
    }

    /// `c2 = c1²/2 + (4 - c1²) ζ / 2`.
    pub fn c2(&self) -> Complex64 {
        let s = self.c1 * self.c1;
        Complex64::new(s / 2.0, 0.0) + self.zeta * ((4.0 - s) / 2.0)
    }

    pub fn coeffs(&self) -> (f64, Complex64) {
        (self.c1, self.c2())
    }

    /// Lexicographic key `(c1, Re ζ, Im ζ)` used to break ties.
    pub fn key(&self) -> (f64, f64, f64) {
        (self.c1, self.zeta.re, self.zeta.im)
    }
}

pub fn body_to_coeffs(b: BodyPoint) -> (f64, Complex64) {
    b.coeffs()
}

/// Inverse chart: `ζ` from a pair `(c1, c2)` with `0 ≤ c1 < 2`.
pub fn zeta_from_coeffs(c1: f64, c2: Complex64) -> Complex64 {
    let s = c1 * c1;
    (c2 * 2.0 - s) / (4.0 - s)
}

/// Realizes a body point by a finite Herglotz measure.
///
/// `c1 = 2` is the single atom at 1. A boundary point `|ζ| = 1` with `c1 < 2`
/// takes two atoms, the roots of `x² - (c1/2)(1 - ζ) x - ζ`, with weights
/// fixed by the first moment. An interior point is split along the horizontal
/// chord of the ζ-disk through it into two boundary points, giving four atoms.
pub fn realize_body_point(b: BodyPoint) -> Result<HerglotzSpec> {
    let c1 = b.c1.clamp(0.0, 2.0);
    if c1 >= 2.0 {
        return HerglotzSpec::extreme(Complex64::new(1.0, 0.0));
    }
    let r = b.zeta.norm();
    if r >= 1.0 - 1e-14 {
        let zeta = b.zeta / r;
        return realize_boundary(c1, zeta);
    }
    let y = b.zeta.im;
    let half = (1.0 - y * y).sqrt();
    let left = Complex64::new(-half, y);
    let right = Complex64::new(half, y);
    let s = (b.zeta.re + half) / (2.0 * half);
    let mut atoms = Vec::with_capacity(4);
    for (mix, zeta) in [(1.0 - s, left), (s, right)] {
        if mix <= 0.0 {
            continue;
        }
        for a in realize_boundary(c1, zeta)?.atoms {
            atoms.push(Atom {
                weight: a.weight * mix,
                point: a.point,
            });
        }
    }
    HerglotzSpec::new(atoms)
}

fn realize_boundary(c1: f64, zeta: Complex64) -> Result<HerglotzSpec> {
    let sum = (1.0 - zeta) * (c1 / 2.0);
    let disc = (sum * sum + zeta * 4.0).sqrt();
    let eta1 = (sum + disc) / 2.0;
    let eta2 = (sum - disc) / 2.0;
    let gap = (eta1 - eta2).norm();
    if gap < 1e-9 {
        return Err(CaratheodoryError::Degenerate(format!(
            "coincident atoms for c1 = {c1}, zeta = {zeta}"
        )));
    }
    // Normalize away rounding; both roots lie on the circle when c1 ≤ 2.
    let eta1 = eta1 / eta1.norm();
    let eta2 = eta2 / eta2.norm();
    let w = (Complex64::new(c1 / 2.0, 0.0) - eta2) / (eta1 - eta2);
    if w.im.abs() > 1e-8 || w.re < -1e-10 || w.re > 1.0 + 1e-10 {
        return Err(CaratheodoryError::Degenerate(format!(
            "weight {w} is not in [0, 1] for c1 = {c1}, zeta = {zeta}"
        )));
    }
    let w = w.re.clamp(0.0, 1.0);
    HerglotzSpec::new(vec![
        Atom {
            weight: w,
            point: eta1,
        },
        Atom {
            weight: 1.0 - w,
            point: eta2,
        },
    ])
}

/// Rational Carathéodory generators used by the sharpness constructions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "id", rename_all = "lowercase")]
pub enum NamedGenerator {
    /// `(1 + z)/(1 - z)`.
    P1,
    /// `(1 + z²)/(1 - z²)`.
    P2,
    /// `(1 - z²)/(1 - 2sz + z²)`.
    P3 { s: f64 },
    /// Same rational form as `P3`, parameterized by `r`.
    P4 { r: f64 },
    /// `(1 + 2tz + z²)/(1 - z²)`.
    Pt { t: f64 },
    /// `(1 + q1(q2 + 1)z + q2 z²)/(1 + q1(q2 - 1)z - q2 z²)`.
    Pq { q1: f64, q2: Complex64 },
}

fn unit_interval(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value <= 1.0 + ATOM_TOL {
        Ok(())
    } else {
        Err(CaratheodoryError::ParameterRange {
            name,
            value,
            range: "(0, 1]",
        })
    }
}

impl NamedGenerator {
    pub fn id(&self) -> &'static str {
        match self {
            NamedGenerator::P1 => "p1",
            NamedGenerator::P2 => "p2",
            NamedGenerator::P3 { .. } => "p3",
            NamedGenerator::P4 { .. } => "p4",
            NamedGenerator::Pt { .. } => "pt",
            NamedGenerator::Pq { .. } => "pq",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NamedGenerator::P1 | NamedGenerator::P2 => Ok(()),
            NamedGenerator::P3 { s } => unit_interval("s", s),
            NamedGenerator::P4 { r } => unit_interval("r", r),
            NamedGenerator::Pt { t } => unit_interval("t", t),
            NamedGenerator::Pq { q1, q2 } => {
                unit_interval("q1", q1)?;
                if (q2.norm() - 1.0).abs() > ATOM_TOL {
                    return Err(CaratheodoryError::ParameterRange {
                        name: "|q2|",
                        value: q2.norm(),
                        range: "{1}",
                    });
                }
                Ok(())
            }
        }
    }

    /// Numerator and denominator coefficients `[1, z, z²]`.
    fn rational(&self) -> ([Complex64; 3], [Complex64; 3]) {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let re = |x: f64| Complex64::new(x, 0.0);
        match *self {
            NamedGenerator::P1 => ([one, one, zero], [one, -one, zero]),
            NamedGenerator::P2 => ([one, zero, one], [one, zero, -one]),
            NamedGenerator::P3 { s: x } | NamedGenerator::P4 { r: x } => {
                ([one, zero, -one], [one, re(-2.0 * x), one])
            }
            NamedGenerator::Pt { t } => ([one, re(2.0 * t), one], [one, zero, -one]),
            NamedGenerator::Pq { q1, q2 } => {
                ([one, (q2 + 1.0) * q1, q2], [one, (q2 - 1.0) * q1, -q2])
            }
        }
    }

    /// Taylor expansion of the rational form to `order`.
    pub fn series(&self, order: usize) -> Result<Series> {
        self.validate()?;
        let (num, den) = self.rational();
        let num = Series::from_coeffs(num, order);
        let den = Series::from_coeffs(den, order);
        Ok(num.div(&den)?)
    }

    /// `p(z)` from the rational form.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let (num, den) = self.rational();
        let poly = |c: [Complex64; 3]| c[0] + z * (c[1] + z * c[2]);
        poly(num) / poly(den)
    }
}

impl fmt::Display for NamedGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            NamedGenerator::P1 | NamedGenerator::P2 => write!(f, "{}", self.id()),
            NamedGenerator::P3 { s } => write!(f, "p3(s={s})"),
            NamedGenerator::P4 { r } => write!(f, "p4(r={r})"),
            NamedGenerator::Pt { t } => write!(f, "pt(t={t})"),
            NamedGenerator::Pq { q1, q2 } => write!(f, "pq(q1={q1}, q2={q2})"),
        }
    }
}

pub fn named_series(g: NamedGenerator, order: usize) -> Result<Series> {
    g.series(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn atom(weight: f64, point: Complex64) -> Atom {
        Atom { weight, point }
    }

    #[test]
    fn single_atom_is_p1() {
        let spec = HerglotzSpec::extreme(c(1.0, 0.0)).unwrap();
        let s = spec.series(6);
        assert_eq!(s[0], c(1.0, 0.0));
        for n in 1..=6 {
            assert_eq!(s[n], c(2.0, 0.0));
        }
        let p1 = NamedGenerator::P1.series(6).unwrap();
        assert!(s.max_abs_diff(&p1).unwrap() <= 1e-12);
    }

    #[test]
    fn antipodal_atoms_give_p2() {
        let spec =
            HerglotzSpec::new(vec![atom(0.5, c(1.0, 0.0)), atom(0.5, c(-1.0, 0.0))]).unwrap();
        let s = spec.series(5);
        let expected = Series::from_real(&[1.0, 0.0, 2.0, 0.0, 2.0, 0.0], 5);
        assert!(s.max_abs_diff(&expected).unwrap() <= 1e-15);
        let p2 = NamedGenerator::P2.series(5).unwrap();
        assert!(s.max_abs_diff(&p2).unwrap() <= 1e-15);
    }

    #[test]
    fn imaginary_atoms_match_rational_form() {
        let spec =
            HerglotzSpec::new(vec![atom(0.5, c(0.0, 1.0)), atom(0.5, c(0.0, -1.0))]).unwrap();
        let s = spec.series(6);
        // c_n = 2 cos(nπ/2)
        let direct = Series::from_real(&[1.0, 0.0, -2.0, 0.0, 2.0, 0.0, -2.0], 6);
        assert!(s.max_abs_diff(&direct).unwrap() <= 1e-14);
        let rational = Series::from_real(&[1.0, 0.0, -1.0], 6)
            .div(&Series::from_real(&[1.0, 0.0, 1.0], 6))
            .unwrap();
        assert!(s.max_abs_diff(&rational).unwrap() <= 1e-14);
    }

    #[test]
    fn spec_validation() {
        assert_eq!(HerglotzSpec::new(vec![]), Err(CaratheodoryError::Empty));
        assert!(matches!(
            HerglotzSpec::new(vec![atom(1.5, c(1.0, 0.0)), atom(-0.5, c(1.0, 0.0))]),
            Err(CaratheodoryError::NegativeWeight(_))
        ));
        assert!(matches!(
            HerglotzSpec::new(vec![atom(0.7, c(1.0, 0.0))]),
            Err(CaratheodoryError::WeightSum(_))
        ));
        assert!(matches!(
            HerglotzSpec::new(vec![atom(1.0, c(0.9, 0.0))]),
            Err(CaratheodoryError::OffCircle(_))
        ));
    }

    #[test]
    fn p3_coefficients() {
        let nu: f64 = 1.0;
        let s = 1.0 / (2.0 * (nu + 1.0)).sqrt();
        let p = NamedGenerator::P3 { s }.series(4).unwrap();
        assert!((p[1] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((p[2] - c(-2.0 * nu / (nu + 1.0), 0.0)).norm() < 1e-15);
        // 8s³ - 6s
        assert!((p[3] - c(8.0 * s.powi(3) - 6.0 * s, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn pt_coefficients() {
        let lambda: f64 = 0.5;
        let t = 1.0 / (4.0 * lambda + 2.0).sqrt();
        let p = NamedGenerator::Pt { t }.series(5).unwrap();
        let expected = Series::from_real(&[1.0, 2.0 * t, 2.0, 2.0 * t, 2.0, 2.0 * t], 5);
        assert!(p.max_abs_diff(&expected).unwrap() < 1e-15);
        let back = p.mul(&Series::from_real(&[1.0, 0.0, -1.0], 5)).unwrap();
        let num = Series::from_real(&[1.0, 2.0 * t, 1.0], 5);
        assert!(back.max_abs_diff(&num).unwrap() < 1e-15);
    }

    #[test]
    fn p4_coefficients() {
        let nu: f64 = 1.0;
        let r = 3.0 / (4.0 * nu + 4.0);
        let p = NamedGenerator::P4 { r }.series(3).unwrap();
        assert!((p[1] - c(0.75, 0.0)).norm() < 1e-15);
        assert!((p[2] - c(-23.0 / 16.0, 0.0)).norm() < 1e-15);
        let printed = (1.0 - 16.0 * nu - 8.0 * nu * nu) / (2.0 * nu + 2.0).powi(2);
        assert!((p[2].re - printed).abs() < 1e-15);
    }

    #[test]
    fn pq_lies_on_body_boundary() {
        let q2 = Complex64::from_polar(1.0, 0.7);
        let p = NamedGenerator::Pq { q1: 0.4, q2 }.series(3).unwrap();
        assert!((p[0] - 1.0).norm() < 1e-15);
        assert!((p[1] - 0.8).norm() < 1e-15);
        let zeta = zeta_from_coeffs(0.8, p[2]);
        assert!((zeta - q2).norm() < 1e-14);
    }

    #[test]
    fn generator_ranges() {
        for g in [
            NamedGenerator::P3 { s: 0.0 },
            NamedGenerator::P4 { r: 1.2 },
            NamedGenerator::Pt { t: -0.1 },
            NamedGenerator::Pq {
                q1: 1.5,
                q2: c(1.0, 0.0),
            },
            NamedGenerator::Pq {
                q1: 0.5,
                q2: c(0.5, 0.0),
            },
        ] {
            assert!(matches!(
                g.series(3),
                Err(CaratheodoryError::ParameterRange { .. })
            ));
        }
    }

    #[test]
    fn named_generators_have_positive_real_part() {
        let gens = [
            NamedGenerator::P1,
            NamedGenerator::P2,
            NamedGenerator::P3 { s: 0.5 },
            NamedGenerator::P3 { s: 1.0 },
            NamedGenerator::P4 { r: 0.375 },
            NamedGenerator::Pt { t: 0.5 },
            NamedGenerator::Pt { t: 1.0 },
            NamedGenerator::Pq {
                q1: 0.5,
                q2: Complex64::from_polar(1.0, 1.1),
            },
            NamedGenerator::Pq {
                q1: 1.0,
                q2: Complex64::from_polar(1.0, -2.0),
            },
        ];
        for g in gens {
            for k in 0..360 {
                let z = Complex64::from_polar(0.99, 2.0 * PI * k as f64 / 360.0);
                let v = g.eval(z);
                assert!(v.re > 0.0, "{g} at {z}: {v}");
            }
        }
    }

    #[test]
    fn body_chart_examples() {
        for zeta in [c(1.0, 0.0), c(-0.3, 0.4), c(0.0, 0.0)] {
            let b = BodyPoint::new(2.0, zeta).unwrap();
            assert!((b.c2() - 2.0).norm() < 1e-15);
        }
        assert_eq!(BodyPoint::new(0.0, c(1.0, 0.0)).unwrap().c2(), c(2.0, 0.0));
        assert_eq!(
            BodyPoint::new(1.0, c(-1.0, 0.0)).unwrap().c2(),
            c(-1.0, 0.0)
        );
        assert!(BodyPoint::new(2.1, c(0.0, 0.0)).is_err());
        assert!(BodyPoint::new(1.0, c(0.8, 0.8)).is_err());
    }

    #[test]
    fn realization_examples() {
        let spec = realize_body_point(BodyPoint::new(2.0, c(0.3, 0.1)).unwrap()).unwrap();
        assert_eq!(spec.atoms().len(), 1);
        assert_eq!(spec.atoms()[0].point, c(1.0, 0.0));

        let spec = realize_body_point(BodyPoint::new(0.0, c(1.0, 0.0)).unwrap()).unwrap();
        assert_eq!(spec.atoms().len(), 2);
        let mut pts: Vec<f64> = spec.atoms().iter().map(|a| a.point.re).collect();
        pts.sort_by(f64::total_cmp);
        assert!((pts[0] + 1.0).abs() < 1e-15 && (pts[1] - 1.0).abs() < 1e-15);
        for a in spec.atoms() {
            assert!((a.weight - 0.5).abs() < 1e-15);
        }

        // (c1, ζ) = (1, -1) is p3 at s = 1/2.
        let b = BodyPoint::new(1.0, c(-1.0, 0.0)).unwrap();
        let spec = realize_body_point(b).unwrap();
        let s = spec.series(4);
        let p3 = NamedGenerator::P3 { s: 0.5 }.series(4).unwrap();
        assert!(s.max_abs_diff(&p3).unwrap() < 1e-12);
    }

    #[test]
    fn realization_round_trips_on_grid() {
        let n = 50;
        let mut checked = 0;
        for i in 0..n {
            let c1 = 2.0 * i as f64 / (n - 1) as f64;
            for j in 0..n {
                for k in 0..n {
                    let x = -1.0 + 2.0 * j as f64 / (n - 1) as f64;
                    let y = -1.0 + 2.0 * k as f64 / (n - 1) as f64;
                    let zeta = c(x, y);
                    if zeta.norm() > 1.0 {
                        continue;
                    }
                    let b = BodyPoint::new(c1, zeta).unwrap();
                    let spec = realize_body_point(b).unwrap();
                    let (e1, e2) = b.coeffs();
                    assert!((spec.coefficient(1) - e1).norm() < 1e-10, "{b:?}");
                    assert!((spec.coefficient(2) - e2).norm() < 1e-10, "{b:?}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 90_000);
    }

    #[test]
    fn random_specs_respect_coefficient_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let spec = HerglotzSpec::random(&mut rng, 5);
            HerglotzSpec::new(spec.atoms().to_vec()).unwrap();
            for n in 1..=12 {
                assert!(spec.coefficient(n).norm() <= 2.0 + 1e-12);
            }
            let z = Complex64::from_polar(0.99, rng.gen_range(0.0..2.0 * PI));
            assert!(spec.eval(z).re > 0.0);
        }
    }
}
