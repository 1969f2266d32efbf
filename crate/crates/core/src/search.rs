//! Independent verification: brute-force extremization over the coefficient
//! body, lemma-oracle equivalence, and witness attainment.
//!
//! The search domain is the chart `(c1, ζ)` with `c1 ∈ [0, 2]` and `ζ` in the
//! closed unit disk, sampled on a polar grid and then refined locally around
//! the incumbent. Grid values are attained values, so a search can only
//! undershoot a true supremum.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{
    successive_diff, theorem_bounds, Bound, BoundKind, BoundReport, BoundsError, Branch, LemmaInput,
};
use crate::caratheodory::{BodyPoint, HerglotzSpec, NamedGenerator};
use crate::classes::{
    build_function, coeffs_from_c, inverse_coeffs, witness, witness_closed_form, ClassError,
    ClassParams, CoeffPair, InverseCoeffs, WitnessId,
};

/// Closed form against witness: both are exact algebra in doubles.
pub const WITNESS_TOL: f64 = 1e-9;
/// Closed form against refined grid search.
pub const SEARCH_TOL: f64 = 1e-4;
/// Reversion against the two-coefficient inverse formula.
pub const PIPELINE_TOL: f64 = 1e-10;
/// Lemma closed forms against the refined oracle.
pub const ORACLE_TOL: f64 = 1e-5;
/// How far a searched value may pass a closed-form bound (rounding only).
pub const OVERSHOOT_TOL: f64 = 1e-9;

/// Grid-level ties kept per extremum.
const TIE_CAP: usize = 16;
/// Points per axis in each refinement round.
const REFINE_POINTS: usize = 21;
/// Re-centrings allowed per refinement scale.
const MAX_MOVES: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("grid resolution {name} = {value} must be at least 3")]
    Resolution { name: &'static str, value: usize },
    #[error("witness {witness} attains none of the bounds at {params}")]
    NotDesignated {
        witness: WitnessId,
        params: ClassParams,
    },
    #[error(transparent)]
    Class(#[from] ClassError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

type Result<T> = std::result::Result<T, SearchError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridSpec {
    pub c1_points: usize,
    pub radial: usize,
    pub angular: usize,
    pub refine_rounds: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            c1_points: 401,
            radial: 201,
            angular: 360,
            refine_rounds: 5,
        }
    }
}

impl GridSpec {
    pub fn new(c1_points: usize, radial: usize, angular: usize, refine_rounds: usize) -> Self {
        GridSpec {
            c1_points,
            radial,
            angular,
            refine_rounds,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("c1_points", self.c1_points),
            ("radial", self.radial),
            ("angular", self.angular),
        ] {
            if value < 3 {
                return Err(SearchError::Resolution { name, value });
            }
        }
        Ok(())
    }

    fn steps(&self) -> (f64, f64, f64) {
        (
            2.0 / (self.c1_points - 1) as f64,
            1.0 / (self.radial - 1) as f64,
            2.0 * PI / self.angular as f64,
        )
    }
}

/// A sampled point in polar body coordinates.
#[derive(Debug, Clone, Copy)]
struct Sample {
    value: f64,
    c1: f64,
    r: f64,
    theta: f64,
    point: BodyPoint,
}

impl Sample {
    fn new(value: f64, c1: f64, r: f64, theta: f64, zeta: Complex64) -> Self {
        Sample {
            value,
            c1,
            r,
            theta,
            point: BodyPoint { c1, zeta },
        }
    }

    fn key_cmp(&self, other: &Sample) -> Ordering {
        let (a, b) = (self.point.key(), other.point.key());
        a.0.total_cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.total_cmp(&b.2))
    }

    /// Strictly better for maximization; ties go to the smaller key.
    fn beats_max(&self, other: &Sample) -> bool {
        match self.value.total_cmp(&other.value) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => self.key_cmp(other) == Ordering::Less,
        }
    }

    fn beats_min(&self, other: &Sample) -> bool {
        match self.value.total_cmp(&other.value) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => self.key_cmp(other) == Ordering::Less,
        }
    }
}

/// Incumbent plus the grid points that tie with it exactly.
#[derive(Debug, Clone)]
struct Best {
    best: Sample,
    ties: Vec<Sample>,
}

impl Best {
    fn new(s: Sample) -> Self {
        Best {
            best: s,
            ties: vec![s],
        }
    }

    fn offer(&mut self, s: Sample, maximize: bool) {
        let beats = if maximize {
            s.beats_max(&self.best)
        } else {
            s.beats_min(&self.best)
        };
        if s.value == self.best.value {
            self.ties.push(s);
            self.trim();
            if beats {
                self.best = s;
            }
        } else if beats {
            self.best = s;
            self.ties.clear();
            self.ties.push(s);
        }
    }

    fn merge(mut self, other: Best, maximize: bool) -> Best {
        if self.best.value == other.best.value {
            self.ties.extend(other.ties);
            self.trim();
            let first = self.ties[0];
            self.best = first;
            self
        } else {
            let keep_other = if maximize {
                other.best.beats_max(&self.best)
            } else {
                other.best.beats_min(&self.best)
            };
            if keep_other {
                other
            } else {
                self
            }
        }
    }

    fn trim(&mut self) {
        self.ties.sort_by(Sample::key_cmp);
        self.ties.dedup_by(|a, b| a.key_cmp(b) == Ordering::Equal);
        self.ties.truncate(TIE_CAP);
    }
}

fn zeta_at(r: f64, theta: f64) -> Complex64 {
    Complex64::new(r * theta.cos(), r * theta.sin())
}

fn c2_at(c1: f64, zeta: Complex64) -> Complex64 {
    let s = c1 * c1;
    Complex64::new(s / 2.0, 0.0) + zeta * ((4.0 - s) / 2.0)
}

/// Extrema of an objective over the body: coarse grid, then local rounds.
#[derive(Debug, Clone, Serialize)]
pub struct Extrema {
    pub min: f64,
    pub max: f64,
    pub argmin: BodyPoint,
    pub argmax: BodyPoint,
    /// Coarse-grid points tying exactly with the coarse minimum.
    pub min_ties: Vec<BodyPoint>,
    pub max_ties: Vec<BodyPoint>,
}

pub fn extremize<F>(objective: F, grid: GridSpec) -> Result<Extrema>
where
    F: Fn(f64, Complex64) -> f64 + Sync,
{
    grid.validate()?;
    let (hc, hr, ht) = grid.steps();
    let trig: Vec<(f64, f64)> = (0..grid.angular)
        .map(|k| {
            let t = k as f64 * ht;
            (t.cos(), t.sin())
        })
        .collect();

    let column = |i: usize| -> (Best, Best) {
        let c1 = if i + 1 == grid.c1_points {
            2.0
        } else {
            i as f64 * hc
        };
        let s = c1 * c1;
        let base = Complex64::new(s / 2.0, 0.0);
        let half = (4.0 - s) / 2.0;
        let origin = Sample::new(objective(c1, base), c1, 0.0, 0.0, Complex64::new(0.0, 0.0));
        let mut hi = Best::new(origin);
        let mut lo = Best::new(origin);
        for j in 1..grid.radial {
            let r = if j + 1 == grid.radial {
                1.0
            } else {
                j as f64 * hr
            };
            for (k, &(cos, sin)) in trig.iter().enumerate() {
                let zeta = Complex64::new(r * cos, r * sin);
                let value = objective(c1, base + zeta * half);
                if value >= hi.best.value || value <= lo.best.value {
                    let sample = Sample::new(value, c1, r, k as f64 * ht, zeta);
                    hi.offer(sample, true);
                    lo.offer(sample, false);
                }
            }
        }
        (hi, lo)
    };

    let (hi, lo) = (0..grid.c1_points)
        .into_par_iter()
        .map(column)
        .reduce_with(|a, b| (a.0.merge(b.0, true), a.1.merge(b.1, false)))
        .expect("grid has at least three c1 points");

    let max = refine(&objective, hi.best, (hc, hr, ht), grid.refine_rounds, true);
    let min = refine(&objective, lo.best, (hc, hr, ht), grid.refine_rounds, false);
    Ok(Extrema {
        min: min.value,
        max: max.value,
        argmin: min.point,
        argmax: max.point,
        min_ties: lo.ties.iter().map(|s| s.point).collect(),
        max_ties: hi.ties.iter().map(|s| s.point).collect(),
    })
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if i + 1 == n {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    })
}

/// Local grid refinement. Each round samples `[x - h, x + h]` on every axis
/// (clamped to the body) and shrinks the steps tenfold. While the best sample
/// sits on an edge of the box that is not a body edge, the box is re-centred
/// at the same scale, so a coarse incumbent more than one cell from the
/// optimum (typical on slanted ridges) can still reach it.
fn refine<F>(
    objective: &F,
    start: Sample,
    steps: (f64, f64, f64),
    rounds: usize,
    maximize: bool,
) -> Sample
where
    F: Fn(f64, Complex64) -> f64,
{
    let (mut hc, mut hr, mut ht) = steps;
    let mut best = start;
    let last = REFINE_POINTS - 1;
    for _ in 0..rounds {
        for _ in 0..MAX_MOVES {
            let center = best;
            let (c_lo, c_hi) = ((center.c1 - hc).max(0.0), (center.c1 + hc).min(2.0));
            let (r_lo, r_hi) = ((center.r - hr).max(0.0), (center.r + hr).min(1.0));
            let cs: Vec<f64> = linspace(c_lo, c_hi, REFINE_POINTS).collect();
            let rs: Vec<f64> = linspace(r_lo, r_hi, REFINE_POINTS).collect();
            let ts: Vec<f64> =
                linspace(center.theta - ht, center.theta + ht, REFINE_POINTS).collect();
            let mut at = None;
            for (i, &c1) in cs.iter().enumerate() {
                for (j, &r) in rs.iter().enumerate() {
                    for (k, &theta) in ts.iter().enumerate() {
                        let zeta = zeta_at(r, theta);
                        let s = Sample::new(objective(c1, c2_at(c1, zeta)), c1, r, theta, zeta);
                        let better = if maximize {
                            s.value > best.value
                        } else {
                            s.value < best.value
                        };
                        if better {
                            best = s;
                            at = Some((i, j, k));
                        }
                    }
                }
            }
            let Some((i, j, k)) = at else { break };
            let open_edge = (i == 0 && c_lo > 0.0)
                || (i == last && c_hi < 2.0)
                || (j == 0 && r_lo > 0.0)
                || (j == last && r_hi < 1.0)
                || k == 0
                || k == last;
            if !open_edge {
                break;
            }
        }
        hc /= 10.0;
        hr /= 10.0;
        ht /= 10.0;
    }
    best
}

/// `|A_{n+1}| - |A_n|` at a body point, through the coefficient maps and the
/// two-coefficient inverse formula.
///
/// Moduli use `sqrt(norm_sqr)` rather than `hypot`; the grid loop is dominated
/// by them and no overflow is possible on the body.
pub fn functional_at(params: ClassParams, n: usize, c1: Complex64, c2: Complex64) -> f64 {
    let ic = inverse_coeffs(coeffs_from_c(params, c1, c2));
    let a2 = ic.a2.norm_sqr().sqrt();
    if n == 1 {
        a2 - ic.a1.abs()
    } else {
        ic.a3.norm_sqr().sqrt() - a2
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    pub params: ClassParams,
    /// 1 for `|A2| - |A1|`, 2 for `|A3| - |A2|`.
    pub functional: usize,
    pub grid: GridSpec,
    pub min: f64,
    pub max: f64,
    pub argmin: BodyPoint,
    pub argmax: BodyPoint,
    pub min_ties: Vec<BodyPoint>,
    pub max_ties: Vec<BodyPoint>,
}

/// Extrema of `|A_{n+1}| - |A_n|` over the body for one class.
pub fn brute_force_extremum(params: ClassParams, n: usize, grid: GridSpec) -> Result<SearchResult> {
    if n != 1 && n != 2 {
        return Err(BoundsError::Index(n).into());
    }
    let ext = extremize(
        |c1, c2| functional_at(params, n, Complex64::new(c1, 0.0), c2),
        grid,
    )?;
    Ok(SearchResult {
        params,
        functional: n,
        grid,
        min: ext.min,
        max: ext.max,
        argmin: ext.argmin,
        argmax: ext.argmax,
        min_ties: ext.min_ties,
        max_ties: ext.max_ties,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OracleResult {
    pub max_plus: f64,
    pub max_minus: f64,
    pub argmax_plus: BodyPoint,
    pub argmax_minus: BodyPoint,
}

/// Grid-refined maxima of `Ψ₊` and `Ψ₋ = -Ψ₊` over the body.
pub fn lemma_oracle(input: LemmaInput, grid: GridSpec) -> Result<OracleResult> {
    let LemmaInput { b1, b2, b3 } = input;
    let ext = extremize(
        |c1, c2| (b2 * (c1 * c1) + c2 * b3).norm_sqr().sqrt() - b1 * c1,
        grid,
    )?;
    Ok(OracleResult {
        max_plus: ext.max,
        max_minus: -ext.min,
        argmax_plus: ext.argmax,
        argmax_minus: ext.argmin,
    })
}

/// One bound attained (or not) by a witness.
#[derive(Debug, Clone, Serialize)]
pub struct Attainment {
    pub bound: BoundKind,
    pub closed_form: f64,
    pub value: f64,
    pub gap: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessCheck {
    pub params: ClassParams,
    pub witness: WitnessId,
    pub generator: NamedGenerator,
    /// Inverse coefficients read off the reverted series.
    pub by_reversion: InverseCoeffs,
    /// `A2 = -a2`, `A3 = 2a2² - a3` from the built function's coefficients.
    pub by_formula: InverseCoeffs,
    /// Largest of: reversion vs formula, built `(a2, a3)` vs the closed-form
    /// coefficient map on the generator's `(c1, c2)`.
    pub consistency_gap: f64,
    /// Coefficientwise modulus gap to the displayed closed form, when one exists.
    pub closed_form_gap: Option<f64>,
    pub attained: Vec<Attainment>,
    pub pass: bool,
}

/// Series order used for witness construction.
pub const WITNESS_ORDER: usize = 8;

/// Builds a witness, computes its inverse coefficients two ways and compares
/// its functional values with every bound it is designated for.
pub fn witness_check(params: ClassParams, id: WitnessId) -> Result<WitnessCheck> {
    witness_check_with(params, id, &theorem_bounds(params))
}

fn witness_check_with(
    params: ClassParams,
    id: WitnessId,
    bounds: &BoundReport,
) -> Result<WitnessCheck> {
    let designated: Vec<BoundKind> = BoundKind::ALL
        .into_iter()
        .filter(|k| bounds.get(*k).witnesses.contains(&id))
        .collect();
    if designated.is_empty() {
        return Err(SearchError::NotDesignated {
            witness: id,
            params,
        });
    }
    let w = witness(params, id, WITNESS_ORDER)?;
    let by_reversion = InverseCoeffs::from_series(&w.inverse);
    let built = CoeffPair {
        a2: w.function[2],
        a3: w.function[3],
    };
    let by_formula = inverse_coeffs(built);
    let p = w
        .generator
        .series(WITNESS_ORDER)
        .map_err(ClassError::from)?;
    let mapped = coeffs_from_c(params, p[1], p[2]);
    let consistency_gap = [
        (by_reversion.a2 - by_formula.a2).norm(),
        (by_reversion.a3 - by_formula.a3).norm(),
        (built.a2 - mapped.a2).norm(),
        (built.a3 - mapped.a3).norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let closed_form_gap = match witness_closed_form(params, id, WITNESS_ORDER) {
        Some(s) => {
            let s = s?;
            Some(
                (0..=WITNESS_ORDER)
                    .map(|n| (s[n].norm() - w.function[n].norm()).abs())
                    .fold(0.0, f64::max),
            )
        }
        None => None,
    };

    let attained: Vec<Attainment> = designated
        .into_iter()
        .map(|kind| {
            let value = successive_diff(&by_reversion, kind.index()).unwrap();
            let closed_form = bounds.get(kind).value;
            let gap = (value - closed_form).abs();
            Attainment {
                bound: kind,
                closed_form,
                value,
                gap,
                pass: gap <= WITNESS_TOL,
            }
        })
        .collect();
    let pass = consistency_gap <= PIPELINE_TOL
        && closed_form_gap.is_none_or(|g| g <= PIPELINE_TOL)
        && attained.iter().all(|a| a.pass);
    Ok(WitnessCheck {
        params,
        witness: id,
        generator: w.generator,
        by_reversion,
        by_formula,
        consistency_gap,
        closed_form_gap,
        attained,
        pass,
    })
}

/// One line of a verification report.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationRow {
    pub bound: BoundKind,
    pub branch: Branch,
    pub closed_form: f64,
    pub searched: f64,
    /// Witness value farthest from the closed form (several at breakpoints).
    pub witness: f64,
    pub witnesses: Vec<WitnessId>,
    pub search_gap: f64,
    pub witness_gap: f64,
    pub pass: bool,
}

impl VerificationRow {
    /// Larger of the two gaps, for single-column tables.
    pub fn gap(&self) -> f64 {
        self.search_gap.max(self.witness_gap)
    }
}

/// Reversion against the closed-form inverse coefficients on random generators
/// and on every witness of the class.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineRow {
    pub samples: usize,
    pub max_gap: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub params: ClassParams,
    pub grid: GridSpec,
    pub bounds: BoundReport,
    pub rows: Vec<VerificationRow>,
    pub witness_checks: Vec<WitnessCheck>,
    pub pipeline: PipelineRow,
}

impl VerificationReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass) && self.pipeline.pass
    }
}

/// Random generators sampled for the pipeline row.
const PIPELINE_SAMPLES: usize = 32;

pub fn pipeline_consistency(params: ClassParams, seed: u64, order: usize) -> Result<PipelineRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_gap: f64 = 0.0;
    let mut samples = 0;
    let mut check = |p: &crate::series::Series| -> Result<()> {
        let f = build_function(params, p)?;
        let inv = f.revert().map_err(ClassError::from)?;
        let ic = inverse_coeffs(coeffs_from_c(params, p[1], p[2]));
        max_gap = max_gap
            .max((inv[2] - ic.a2).norm())
            .max((inv[3] - ic.a3).norm());
        samples += 1;
        Ok(())
    };
    for _ in 0..PIPELINE_SAMPLES {
        let spec = HerglotzSpec::random(&mut rng, 4);
        check(&spec.series(order))?;
    }
    for id in WitnessId::for_class(params) {
        if let Ok(g) = crate::classes::witness_generator(params, id) {
            if let Ok(p) = g.series(order) {
                check(&p)?;
            }
        }
    }
    Ok(PipelineRow {
        samples,
        max_gap,
        pass: max_gap <= PIPELINE_TOL,
    })
}

fn verify_row(
    kind: BoundKind,
    bound: &Bound,
    searched: f64,
    checks: &[WitnessCheck],
) -> VerificationRow {
    let values: Vec<f64> = bound
        .witnesses
        .iter()
        .filter_map(|id| {
            checks
                .iter()
                .find(|c| c.witness == *id)
                .and_then(|c| c.attained.iter().find(|a| a.bound == kind))
                .map(|a| a.value)
        })
        .collect();
    let witness = values
        .iter()
        .copied()
        .max_by(|a, b| (a - bound.value).abs().total_cmp(&(b - bound.value).abs()))
        .unwrap_or(f64::NAN);
    let witness_gap = (witness - bound.value).abs();
    let search_gap = (searched - bound.value).abs();
    let overshoot = if kind.is_upper() {
        searched - bound.value
    } else {
        bound.value - searched
    };
    let pass = values.len() == bound.witnesses.len()
        && witness_gap <= WITNESS_TOL
        && search_gap <= SEARCH_TOL
        && overshoot <= OVERSHOOT_TOL;
    VerificationRow {
        bound: kind,
        branch: bound.branch,
        closed_form: bound.value,
        searched,
        witness,
        witnesses: bound.witnesses.clone(),
        search_gap,
        witness_gap,
        pass,
    }
}

/// All checks for one parameter point: closed form vs search vs witness for
/// the four bounds, plus the pipeline row.
pub fn full_verify(params: ClassParams, grid: GridSpec, seed: u64) -> Result<VerificationReport> {
    let bounds = theorem_bounds(params);
    let s1 = brute_force_extremum(params, 1, grid)?;
    let s2 = brute_force_extremum(params, 2, grid)?;
    let mut ids: Vec<WitnessId> = BoundKind::ALL
        .iter()
        .flat_map(|k| bounds.get(*k).witnesses.iter().copied())
        .collect();
    ids.sort();
    ids.dedup();
    let witness_checks = ids
        .into_iter()
        .map(|id| witness_check_with(params, id, &bounds))
        .collect::<Result<Vec<_>>>()?;
    let rows = BoundKind::ALL
        .into_iter()
        .map(|kind| {
            let searched = match kind {
                BoundKind::Lower21 => s1.min,
                BoundKind::Upper21 => s1.max,
                BoundKind::Lower32 => s2.min,
                BoundKind::Upper32 => s2.max,
            };
            verify_row(kind, bounds.get(kind), searched, &witness_checks)
        })
        .collect();
    let pipeline = pipeline_consistency(params, seed, crate::series::DEFAULT_ORDER)?;
    Ok(VerificationReport {
        params,
        grid,
        bounds,
        rows,
        witness_checks,
        pipeline,
    })
}

/// Caps the global rayon pool at `UIL_THREADS` when set. Returns the cap.
pub fn configure_threads_from_env() -> Option<usize> {
    let n: usize = std::env::var("UIL_THREADS").ok()?.trim().parse().ok()?;
    if n == 0 {
        return None;
    }
    // Fails only if a pool already exists; the existing pool is kept.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Some(n)
}
