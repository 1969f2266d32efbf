//! Successive-difference functionals `|A_{n+1}| - |A_n|` and their sharp
//! bounds.
//!
//! Every class reduces to the same two-coefficient functional
//!
//! ```text
//! |A3| - |A2| = scale * (|B2 c1² + B3 c2| - |B1 c1|)
//! ```
//!
//! whose extrema over the Carathéodory body are the piecewise maxima
//! [`psi_plus_bound`] and [`psi_minus_bound`]. [`theorem_bounds`] evaluates
//! the per-class closed forms and records the lemma values beside them.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::classes::{ClassParams, InverseCoeffs, WitnessId};

/// Parameter distance at which a point counts as sitting on a breakpoint.
pub const BREAKPOINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("successive difference index must be 1 or 2 (got {0})")]
    Index(usize),
    #[error("lemma requires B1 > 0 (got {0})")]
    NonPositiveB1(f64),
}

/// `(B1, B2, B3)` with `B1 > 0`, `B2` complex and `B3` real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaInput {
    pub b1: f64,
    pub b2: Complex64,
    pub b3: f64,
}

impl LemmaInput {
    pub fn new(b1: f64, b2: Complex64, b3: f64) -> Result<Self, BoundsError> {
        if !(b1 > 0.0) {
            return Err(BoundsError::NonPositiveB1(b1));
        }
        Ok(LemmaInput { b1, b2, b3 })
    }

    /// `B4 = |4B2 + 2B3|`.
    pub fn b4(&self) -> f64 {
        (self.b2 * 4.0 + 2.0 * self.b3).norm()
    }

    /// `Ψ₊(c1, c2) = |B2 c1² + B3 c2| - |B1 c1|`.
    pub fn psi_plus(&self, c1: Complex64, c2: Complex64) -> f64 {
        (self.b2 * c1 * c1 + c2 * self.b3).norm() - self.b1 * c1.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PlusCase {
    /// `|2B2 + B3| ≥ |B3| + B1`: value `B4 - 2B1`.
    Dominant,
    /// Value `2|B3|`.
    Otherwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MinusCase {
    /// `B1 ≥ B4 + 2|B3|`: value `2B1 - B4`.
    Linear,
    /// `B1² ≤ 2|B3|(B4 + 2|B3|)`: value `2B1 √(2|B3|/(B4 + 2|B3|))`.
    Root,
    /// Value `2|B3| + B1²/(B4 + 2|B3|)`.
    Otherwise,
}

impl fmt::Display for PlusCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlusCase::Dominant => "psi+:dominant",
            PlusCase::Otherwise => "psi+:otherwise",
        })
    }
}

impl fmt::Display for MinusCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MinusCase::Linear => "psi-:linear",
            MinusCase::Root => "psi-:root",
            MinusCase::Otherwise => "psi-:otherwise",
        })
    }
}

/// Upper bound of `Ψ₊` over the body and the case that produced it.
pub fn psi_plus_bound(input: LemmaInput) -> (f64, PlusCase) {
    let b3 = input.b3.abs();
    if (input.b2 * 2.0 + input.b3).norm() >= b3 + input.b1 {
        (input.b4() - 2.0 * input.b1, PlusCase::Dominant)
    } else {
        (2.0 * b3, PlusCase::Otherwise)
    }
}

/// Upper bound of `Ψ₋ = -Ψ₊` over the body; cases tried in order.
pub fn psi_minus_bound(input: LemmaInput) -> (f64, MinusCase) {
    let b1 = input.b1;
    let b3 = input.b3.abs();
    let b4 = input.b4();
    let d = b4 + 2.0 * b3;
    if b1 >= d {
        (2.0 * b1 - b4, MinusCase::Linear)
    } else if b1 * b1 <= 2.0 * b3 * d {
        (2.0 * b1 * (2.0 * b3 / d).sqrt(), MinusCase::Root)
    } else {
        (2.0 * b3 + b1 * b1 / d, MinusCase::Otherwise)
    }
}

/// `|A2| - |A1|` for `n = 1`, `|A3| - |A2|` for `n = 2`.
pub fn successive_diff(ic: &InverseCoeffs, n: usize) -> Result<f64, BoundsError> {
    match n {
        1 => Ok(ic.a2.norm() - ic.a1.abs()),
        2 => Ok(ic.a3.norm() - ic.a2.norm()),
        _ => Err(BoundsError::Index(n)),
    }
}

/// Lemma coefficients and the positive factor with
/// `|A3| - |A2| = scale * Ψ₊(c1, c2)`.
pub fn lemma_form(params: ClassParams) -> (LemmaInput, f64) {
    let re = |x: f64| Complex64::new(x, 0.0);
    match params {
        ClassParams::Gnu { nu } => (
            LemmaInput {
                b1: 3.0,
                b2: re(nu),
                b3: 1.0,
            },
            nu / 12.0,
        ),
        ClassParams::F0 { lambda } => (
            LemmaInput {
                b1: 6.0,
                b2: re(4.0 * lambda + 2.0),
                b3: -2.0,
            },
            (2.0 * lambda + 1.0) / 24.0,
        ),
        ClassParams::Cgamma { gamma, alpha } => (
            LemmaInput {
                b1: 3.0,
                b2: params.mu().unwrap() * (2.0 * (1.0 - alpha)),
                b3: -1.0,
            },
            (1.0 - alpha) * gamma.cos() / 6.0,
        ),
    }
}

/// Which closed-form piece produced a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// The bound has a single formula.
    Single,
    /// The parameter sits on a breakpoint; adjacent pieces agree there.
    Breakpoint,
    /// `0 < ν ≤ 1/8`.
    NuSmall,
    /// `1/8 ≤ ν ≤ 1`.
    NuLarge,
    /// `1/2 ≤ λ ≤ 3/4`.
    LambdaSmall,
    /// `3/4 ≤ λ ≤ 1`.
    LambdaLarge,
    /// `|τ| ≤ 1/2`.
    TauSmall,
    /// `1/2 ≤ |τ| ≤ 5/4`.
    TauMid,
    /// `|τ| ≥ 5/4`.
    TauLarge,
}

impl Branch {
    pub fn label(&self) -> &'static str {
        match self {
            Branch::Single => "single",
            Branch::Breakpoint => "breakpoint",
            Branch::NuSmall => "nu<=1/8",
            Branch::NuLarge => "nu>=1/8",
            Branch::LambdaSmall => "lambda<=3/4",
            Branch::LambdaLarge => "lambda>=3/4",
            Branch::TauSmall => "|tau|<=1/2",
            Branch::TauMid => "1/2<=|tau|<=5/4",
            Branch::TauLarge => "|tau|>=5/4",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One sharp bound with the branch that produced it and the witnesses that
/// attain it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bound {
    pub value: f64,
    pub branch: Branch,
    pub witnesses: Vec<WitnessId>,
}

impl Bound {
    fn single(value: f64, witness: WitnessId) -> Self {
        Bound {
            value,
            branch: Branch::Single,
            witnesses: vec![witness],
        }
    }
}

/// Which of the four bounds a row refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Lower21,
    Upper21,
    Lower32,
    Upper32,
}

impl BoundKind {
    pub const ALL: [BoundKind; 4] = [
        BoundKind::Lower21,
        BoundKind::Upper21,
        BoundKind::Lower32,
        BoundKind::Upper32,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BoundKind::Lower21 => "lower21",
            BoundKind::Upper21 => "upper21",
            BoundKind::Lower32 => "lower32",
            BoundKind::Upper32 => "upper32",
        }
    }

    /// Successive difference index: 1 for `|A2| - |A1|`, 2 for `|A3| - |A2|`.
    pub fn index(&self) -> usize {
        match self {
            BoundKind::Lower21 | BoundKind::Upper21 => 1,
            BoundKind::Lower32 | BoundKind::Upper32 => 2,
        }
    }

    pub fn is_upper(&self) -> bool {
        matches!(self, BoundKind::Upper21 | BoundKind::Upper32)
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub params: ClassParams,
    pub lower21: Bound,
    pub upper21: Bound,
    pub lower32: Bound,
    pub upper32: Bound,
    /// `scale * psi_plus_bound`, for cross-checking `upper32`.
    pub lemma_upper32: f64,
    pub lemma_plus_case: PlusCase,
    /// `-scale * psi_minus_bound`, for cross-checking `lower32`.
    pub lemma_lower32: f64,
    pub lemma_minus_case: MinusCase,
}

impl BoundReport {
    pub fn get(&self, kind: BoundKind) -> &Bound {
        match kind {
            BoundKind::Lower21 => &self.lower21,
            BoundKind::Upper21 => &self.upper21,
            BoundKind::Lower32 => &self.lower32,
            BoundKind::Upper32 => &self.upper32,
        }
    }

    /// Largest disagreement between the closed forms and the scaled lemma.
    pub fn lemma_gap(&self) -> f64 {
        (self.upper32.value - self.lemma_upper32)
            .abs()
            .max((self.lower32.value - self.lemma_lower32).abs())
    }
}

/// Selects a piece of a two-piece bound, marking exact breakpoints.
fn piecewise(
    x: f64,
    at: f64,
    below: (f64, Branch, WitnessId),
    above: (f64, Branch, WitnessId),
) -> Bound {
    if (x - at).abs() <= BREAKPOINT_TOL {
        Bound {
            value: above.0,
            branch: Branch::Breakpoint,
            witnesses: vec![below.2, above.2],
        }
    } else if x < at {
        Bound {
            value: below.0,
            branch: below.1,
            witnesses: vec![below.2],
        }
    } else {
        Bound {
            value: above.0,
            branch: above.1,
            witnesses: vec![above.2],
        }
    }
}

/// Closed-form lower bound of `|A3| - |A2|` on `C_γ(α)` as a function of
/// `m = (1 - α) cos γ` and `t = |τ|`.
///
/// For `t ≥ 1/2` this is the two-piece formula with breakpoint `5/4`. Below
/// `1/2` the first case of the `Ψ₋` bound applies and `h1` is extremal.
pub fn convex_lower32(m: f64, t: f64) -> Bound {
    let small = (-m * (3.0 - t) / 3.0, Branch::TauSmall, WitnessId::H1);
    let mid = (
        -m * (13.0 + 4.0 * t) / (12.0 * (t + 1.0)),
        Branch::TauMid,
        WitnessId::H4,
    );
    let large = (-m / (t + 1.0).sqrt(), Branch::TauLarge, WitnessId::H3);
    if t < 0.5 + BREAKPOINT_TOL {
        piecewise(t, 0.5, small, mid)
    } else {
        piecewise(t, 1.25, mid, large)
    }
}

/// Every sharp bound on `|A2| - |A1|` and `|A3| - |A2|` for one class.
pub fn theorem_bounds(params: ClassParams) -> BoundReport {
    let (lower21, upper21, lower32, upper32) = match params {
        ClassParams::Gnu { nu } => {
            let lower32 = piecewise(
                nu,
                0.125,
                (
                    -nu * (8.0 * nu + 17.0) / (48.0 * (nu + 1.0)),
                    Branch::NuSmall,
                    WitnessId::G4,
                ),
                (
                    -nu / (2.0 * (2.0 * (nu + 1.0)).sqrt()),
                    Branch::NuLarge,
                    WitnessId::G3,
                ),
            );
            (
                Bound::single(-1.0, WitnessId::G2),
                Bound::single((nu - 2.0) / 2.0, WitnessId::G1),
                lower32,
                Bound::single(nu / 6.0, WitnessId::G2),
            )
        }
        ClassParams::F0 { lambda } => {
            let upper32 = piecewise(
                lambda,
                0.75,
                (
                    (2.0 * lambda + 1.0) / 6.0,
                    Branch::LambdaSmall,
                    WitnessId::F2,
                ),
                (
                    (2.0 * lambda + 1.0) * (2.0 * lambda - 1.0) / 3.0,
                    Branch::LambdaLarge,
                    WitnessId::F1,
                ),
            );
            (
                Bound::single(-1.0, WitnessId::F2),
                Bound::single((2.0 * lambda - 1.0) / 2.0, WitnessId::F1),
                Bound::single(
                    -(2.0 * lambda + 1.0).sqrt() / (2.0 * 2f64.sqrt()),
                    WitnessId::F3,
                ),
                upper32,
            )
        }
        ClassParams::Cgamma { gamma, alpha } => {
            let m = (1.0 - alpha) * gamma.cos();
            let t = params.tau().unwrap().norm();
            (
                Bound::single(-1.0, WitnessId::H2),
                Bound::single(m - 1.0, WitnessId::H1),
                convex_lower32(m, t),
                Bound::single(m / 3.0, WitnessId::H2),
            )
        }
    };
    let (input, scale) = lemma_form(params);
    let (plus, plus_case) = psi_plus_bound(input);
    let (minus, minus_case) = psi_minus_bound(input);
    BoundReport {
        params,
        lower21,
        upper21,
        lower32,
        upper32,
        lemma_upper32: scale * plus,
        lemma_plus_case: plus_case,
        lemma_lower32: -scale * minus,
        lemma_minus_case: minus_case,
    }
}
