//! The three function classes and their coefficient maps.
//!
//! Each class is described by a Carathéodory generator through
//! `z f''/f' = κ (p - 1)`:
//!
//! | class        | defining condition                          | κ              |
//! |--------------|---------------------------------------------|----------------|
//! | `G(ν)`       | `Re(1 + z f''/f') < 1 + ν/2`                | `-ν/2`         |
//! | `F₀(λ)`      | `Re(1 + z f''/f') > 1/2 - λ`                | `1/2 + λ`      |
//! | `C_γ(α)`     | `Re(e^{-iγ}(1 + z f''/f')) > α cos γ`       | `(1 - α) μ`    |
//!
//! with `μ = e^{iγ} cos γ` and `τ = 4(1 - α)μ - 1`.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::caratheodory::{CaratheodoryError, NamedGenerator};
use crate::series::{Series, SeriesError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassError {
    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("generator must satisfy p(0) = 1 (got {0})")]
    GeneratorConstant(Complex64),
    #[error("witness {witness} does not belong to class {class}")]
    WitnessClass {
        witness: WitnessId,
        class: &'static str,
    },
    #[error(transparent)]
    Generator(#[from] CaratheodoryError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

type Result<T> = std::result::Result<T, ClassError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "lowercase")]
pub enum ClassParams {
    #[serde(rename = "g")]
    Gnu { nu: f64 },
    #[serde(rename = "f0")]
    F0 { lambda: f64 },
    #[serde(rename = "c")]
    Cgamma { gamma: f64, alpha: f64 },
}

impl ClassParams {
    /// `G(ν)` with `0 < ν ≤ 1`.
    pub fn gnu(nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu <= 1.0) {
            return Err(ClassError::OutOfRange {
                name: "nu",
                value: nu,
                range: "(0, 1]",
            });
        }
        Ok(ClassParams::Gnu { nu })
    }

    /// `F₀(λ)` with `1/2 ≤ λ ≤ 1`.
    pub fn f0(lambda: f64) -> Result<Self> {
        if !(0.5..=1.0).contains(&lambda) {
            return Err(ClassError::OutOfRange {
                name: "lambda",
                value: lambda,
                range: "[1/2, 1]",
            });
        }
        Ok(ClassParams::F0 { lambda })
    }

    /// `C_γ(α)` with `-π/2 < γ < π/2` and `0 ≤ α < 1`.
    pub fn cgamma(gamma: f64, alpha: f64) -> Result<Self> {
        let half_pi = std::f64::consts::FRAC_PI_2;
        if !(gamma > -half_pi && gamma < half_pi) {
            return Err(ClassError::OutOfRange {
                name: "gamma",
                value: gamma,
                range: "(-pi/2, pi/2)",
            });
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(ClassError::OutOfRange {
                name: "alpha",
                value: alpha,
                range: "[0, 1)",
            });
        }
        Ok(ClassParams::Cgamma { gamma, alpha })
    }

    /// Short selector used on the command line and in reports.
    pub fn class_id(&self) -> &'static str {
        match self {
            ClassParams::Gnu { .. } => "g",
            ClassParams::F0 { .. } => "f0",
            ClassParams::Cgamma { .. } => "c",
        }
    }

    /// Parameters as reported in tables (second slot empty for one-parameter classes).
    pub fn params(&self) -> (f64, Option<f64>) {
        match *self {
            ClassParams::Gnu { nu } => (nu, None),
            ClassParams::F0 { lambda } => (lambda, None),
            ClassParams::Cgamma { gamma, alpha } => (gamma, Some(alpha)),
        }
    }

    /// `μ = e^{iγ} cos γ`; only defined for `C_γ(α)`.
    pub fn mu(&self) -> Option<Complex64> {
        match *self {
            ClassParams::Cgamma { gamma, .. } => Some(Complex64::from_polar(gamma.cos(), gamma)),
            _ => None,
        }
    }

    /// `τ = 4(1 - α)μ - 1`; only defined for `C_γ(α)`.
    pub fn tau(&self) -> Option<Complex64> {
        match *self {
            ClassParams::Cgamma { alpha, .. } => Some(self.mu()? * (4.0 * (1.0 - alpha)) - 1.0),
            _ => None,
        }
    }

    /// The factor κ in `z f''/f' = κ (p - 1)`.
    pub fn kappa(&self) -> Complex64 {
        match *self {
            ClassParams::Gnu { nu } => Complex64::new(-nu / 2.0, 0.0),
            ClassParams::F0 { lambda } => Complex64::new(0.5 + lambda, 0.0),
            ClassParams::Cgamma { alpha, .. } => self.mu().unwrap() * (1.0 - alpha),
        }
    }

    /// Signed distance of `w = 1 + z f''/f'` from the class boundary;
    /// positive inside the class.
    pub fn membership_margin(&self, w: Complex64) -> f64 {
        match *self {
            ClassParams::Gnu { nu } => 1.0 + nu / 2.0 - w.re,
            ClassParams::F0 { lambda } => w.re - (0.5 - lambda),
            ClassParams::Cgamma { gamma, alpha } => {
                (Complex64::from_polar(1.0, -gamma) * w).re - alpha * gamma.cos()
            }
        }
    }
}

impl fmt::Display for ClassParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ClassParams::Gnu { nu } => write!(f, "G(nu={nu})"),
            ClassParams::F0 { lambda } => write!(f, "F0(lambda={lambda})"),
            ClassParams::Cgamma { gamma, alpha } => write!(f, "C(gamma={gamma}, alpha={alpha})"),
        }
    }
}

/// Second and third Taylor coefficients of `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoeffPair {
    pub a2: Complex64,
    pub a3: Complex64,
}

/// `F(w) = A1 w + A2 w² + A3 w³ + ...` for the inverse of `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InverseCoeffs {
    pub a1: f64,
    pub a2: Complex64,
    pub a3: Complex64,
}

impl InverseCoeffs {
    /// Reads `A2`, `A3` off a reverted series (order ≥ 3).
    pub fn from_series(inverse: &Series) -> Self {
        InverseCoeffs {
            a1: 1.0,
            a2: inverse[2],
            a3: inverse[3],
        }
    }
}

/// `f` from its generator: `z f''/f' = κ(p - 1)`, so
/// `log f' = Σ κ c_n z^n / n` and `f = ∫ f'`.
///
/// The result has the same truncation order as `p` and every coefficient in
/// the window is exact.
pub fn build_function(params: ClassParams, p: &Series) -> Result<Series> {
    if (p[0] - 1.0).norm() > 1e-12 {
        return Err(ClassError::GeneratorConstant(p[0]));
    }
    let order = p.order();
    let kappa = params.kappa();
    // q / z with q = κ(p - 1); p(0) is only checked to tolerance.
    let q_over_z = Series::from_coeffs(p.coeffs()[1..].iter().map(|c| c * kappa), order);
    let log_fp = q_over_z.integrate();
    let fp = log_fp.exp()?;
    Ok(fp.integrate())
}

/// The series `1 + z f''/f'`, one order below `f`'s.
pub fn curvature_series(f: &Series) -> Result<Series> {
    let fp = f.derive();
    let zfpp = fp.derive().shift_up();
    let ratio = zfpp.div(&fp)?;
    Ok(ratio.add(&Series::one(ratio.order()))?)
}

/// Closed-form `(a2, a3)` in terms of the generator's first two coefficients.
pub fn coeffs_from_c(params: ClassParams, c1: Complex64, c2: Complex64) -> CoeffPair {
    match params {
        ClassParams::Gnu { nu } => CoeffPair {
            a2: -c1 * nu / 4.0,
            a3: (c1 * c1 * nu * nu - c2 * 2.0 * nu) / 24.0,
        },
        ClassParams::F0 { lambda } => {
            let k = 1.0 + 2.0 * lambda;
            CoeffPair {
                a2: c1 * k / 4.0,
                a3: (c2 * 2.0 + c1 * c1 * k) * k / 24.0,
            }
        }
        ClassParams::Cgamma { alpha, .. } => {
            let m = params.mu().unwrap() * (1.0 - alpha);
            CoeffPair {
                a2: m * c1 / 2.0,
                a3: (m * m * c1 * c1 + m * c2) / 6.0,
            }
        }
    }
}

/// `A2 = -a2`, `A3 = 2a2² - a3`.
pub fn inverse_coeffs(cp: CoeffPair) -> InverseCoeffs {
    InverseCoeffs {
        a1: 1.0,
        a2: -cp.a2,
        a3: cp.a2 * cp.a2 * 2.0 - cp.a3,
    }
}

/// Extremal functions used in the sharpness constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessId {
    G1,
    G2,
    G3,
    G4,
    F1,
    F2,
    F3,
    H1,
    H2,
    H3,
    H4,
}

impl WitnessId {
    pub const ALL: [WitnessId; 11] = [
        WitnessId::G1,
        WitnessId::G2,
        WitnessId::G3,
        WitnessId::G4,
        WitnessId::F1,
        WitnessId::F2,
        WitnessId::F3,
        WitnessId::H1,
        WitnessId::H2,
        WitnessId::H3,
        WitnessId::H4,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            WitnessId::G1 => "g1",
            WitnessId::G2 => "g2",
            WitnessId::G3 => "g3",
            WitnessId::G4 => "g4",
            WitnessId::F1 => "f1",
            WitnessId::F2 => "f2",
            WitnessId::F3 => "f3",
            WitnessId::H1 => "h1",
            WitnessId::H2 => "h2",
            WitnessId::H3 => "h3",
            WitnessId::H4 => "h4",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        WitnessId::ALL.into_iter().find(|w| w.name() == s)
    }

    pub fn class_id(&self) -> &'static str {
        match self {
            WitnessId::G1 | WitnessId::G2 | WitnessId::G3 | WitnessId::G4 => "g",
            WitnessId::F1 | WitnessId::F2 | WitnessId::F3 => "f0",
            _ => "c",
        }
    }

    /// Witnesses available for a class.
    pub fn for_class(params: ClassParams) -> impl Iterator<Item = WitnessId> {
        WitnessId::ALL
            .into_iter()
            .filter(move |w| w.class_id() == params.class_id())
    }
}

impl fmt::Display for WitnessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A witness function together with its generator and its inverse.
#[derive(Debug, Clone)]
pub struct Witness {
    pub id: WitnessId,
    pub generator: NamedGenerator,
    pub function: Series,
    pub inverse: Series,
}

/// The generator that produces witness `id` in class `params`.
pub fn witness_generator(params: ClassParams, id: WitnessId) -> Result<NamedGenerator> {
    if id.class_id() != params.class_id() {
        return Err(ClassError::WitnessClass {
            witness: id,
            class: params.class_id(),
        });
    }
    let g = match (id, params) {
        (WitnessId::G1 | WitnessId::F1 | WitnessId::H1, _) => NamedGenerator::P1,
        (WitnessId::G2 | WitnessId::F2 | WitnessId::H2, _) => NamedGenerator::P2,
        (WitnessId::G3, ClassParams::Gnu { nu }) => NamedGenerator::P3 {
            s: 1.0 / (2.0 * (nu + 1.0)).sqrt(),
        },
        (WitnessId::G4, ClassParams::Gnu { nu }) => NamedGenerator::P4 {
            r: 3.0 / (4.0 * nu + 4.0),
        },
        (WitnessId::F3, ClassParams::F0 { lambda }) => NamedGenerator::Pt {
            t: 1.0 / (4.0 * lambda + 2.0).sqrt(),
        },
        (WitnessId::H3 | WitnessId::H4, _) => {
            let tau = params.tau().unwrap();
            let abs = tau.norm();
            let q2 = if abs > 0.0 {
                tau / abs
            } else {
                Complex64::new(1.0, 0.0)
            };
            let q1 = if id == WitnessId::H3 {
                1.0 / (abs + 1.0).sqrt()
            } else {
                3.0 / (2.0 * (abs + 1.0))
            };
            NamedGenerator::Pq { q1, q2 }
        }
        _ => unreachable!("class checked above"),
    };
    Ok(g)
}

/// Builds witness `id` from its generator and reverts it, both to `order`.
pub fn witness(params: ClassParams, id: WitnessId, order: usize) -> Result<Witness> {
    let generator = witness_generator(params, id)?;
    let p = generator.series(order)?;
    let function = build_function(params, &p)?;
    let inverse = function.revert()?;
    Ok(Witness {
        id,
        generator,
        function,
        inverse,
    })
}

/// Closed-form expansion of the witnesses that have one: `g1`, `g2`, `f1`
/// and `h1` (the latter only when `2(1 - α)μ ≠ 1`).
///
/// `g1`'s closed form `((1 + z)^{1+ν} - 1)/(ν + 1)` is the generator-built
/// function under `z → -z`; only coefficient moduli agree.
pub fn witness_closed_form(
    params: ClassParams,
    id: WitnessId,
    order: usize,
) -> Option<Result<Series>> {
    let one = Complex64::new(1.0, 0.0);
    let base = |sign: f64| Series::from_coeffs([one, Complex64::new(sign, 0.0)], order);
    let build = || -> Result<Option<Series>> {
        Ok(match (id, params) {
            (WitnessId::G1, ClassParams::Gnu { nu }) => {
                let s = base(1.0).pow(Complex64::new(1.0 + nu, 0.0))?;
                Some(s.sub(&Series::one(order))?.scale(one / (nu + 1.0)))
            }
            (WitnessId::G2, ClassParams::Gnu { nu }) => {
                let s = Series::from_real(&[1.0, 0.0, -1.0], order)
                    .pow(Complex64::new(nu / 2.0, 0.0))?;
                Some(s.integrate())
            }
            (WitnessId::F1, ClassParams::F0 { lambda }) => {
                let s = base(-1.0).pow(Complex64::new(-2.0 * lambda, 0.0))?;
                Some(s.sub(&Series::one(order))?.scale(one / (2.0 * lambda)))
            }
            (WitnessId::H1, ClassParams::Cgamma { .. }) => {
                let e = params.kappa() * 2.0 - 1.0;
                if e.norm() < 1e-9 {
                    None
                } else {
                    let s = base(-1.0).pow(-e)?;
                    Some(s.sub(&Series::one(order))?.scale(one / e))
                }
            }
            _ => None,
        })
    };
    build().transpose()
}
