//! Truncated power series over complex coefficients.
//!
//! A [`Series`] of order `N` stores the coefficients of `1, z, ..., z^N` and
//! every operation is exact modulo `z^{N+1}`. Binary operations require equal
//! orders; use [`Series::with_order`] to pad or truncate explicitly.
//!
//! Operations that consume information at the top of the window report it in
//! their output order rather than padding with zeros:
//!
//! - [`Series::derive`] and [`Series::shift_down`] lower the order by one.
//! - [`Series::integrate`] keeps the order, so the top input coefficient is
//!   dropped. A caller that wants `f` to order `N` from `f'` must supply `f'`
//!   to order `N` (only indices `0..N-1` are used).

use std::ops::Index;

use num_complex::Complex64;
use thiserror::Error;

/// Truncation order used when callers do not ask for one.
pub const DEFAULT_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("mismatched truncation orders {left} and {right}")]
    OrderMismatch { left: usize, right: usize },
    #[error("non-invertible series: constant term is zero")]
    NonInvertible,
    #[error("inner series of a composition must vanish at the origin (constant term {0})")]
    InnerConstant(Complex64),
    #[error("exponential requires zero constant term (got {0})")]
    ExpConstant(Complex64),
    #[error("logarithm and power require constant term 1 (got {0})")]
    LogConstant(Complex64),
    #[error("division by z requires zero constant term (got {0})")]
    ShiftConstant(Complex64),
    #[error("reversion requires f(0) = 0 (got {0})")]
    RevertConstant(Complex64),
    #[error("reversion requires f'(0) != 0")]
    RevertLinear,
}

pub type Result<T> = std::result::Result<T, SeriesError>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    coeffs: Vec<Complex64>,
}

impl Series {
    /// The zero series of the given order.
    pub fn zero(order: usize) -> Self {
        Series {
            coeffs: vec![ZERO; order + 1],
        }
    }

    pub fn constant(c: Complex64, order: usize) -> Self {
        let mut s = Series::zero(order);
        s.coeffs[0] = c;
        s
    }

    pub fn one(order: usize) -> Self {
        Series::constant(ONE, order)
    }

    /// The series `z` (zero when `order == 0`).
    pub fn identity(order: usize) -> Self {
        let mut s = Series::zero(order);
        if order >= 1 {
            s.coeffs[1] = ONE;
        }
        s
    }

    /// Builds a series of the given order from leading coefficients, padding
    /// with zeros or dropping anything past `order`.
    pub fn from_coeffs<I>(coeffs: I, order: usize) -> Self
    where
        I: IntoIterator<Item = Complex64>,
    {
        let mut out = Series::zero(order);
        for (slot, c) in out.coeffs.iter_mut().zip(coeffs) {
            *slot = c;
        }
        out
    }

    pub fn from_real(coeffs: &[f64], order: usize) -> Self {
        Series::from_coeffs(coeffs.iter().map(|&x| Complex64::new(x, 0.0)), order)
    }

    /// `c * z^k`, zero if `k` exceeds the order.
    pub fn monomial(c: Complex64, k: usize, order: usize) -> Self {
        let mut s = Series::zero(order);
        if k <= order {
            s.coeffs[k] = c;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of `z^n`.
    ///
    /// Panics if `n` exceeds the truncation order.
    pub fn coeff(&self, n: usize) -> Complex64 {
        self.coeffs[n]
    }

    /// Pads with zeros or truncates to the requested order.
    pub fn with_order(&self, order: usize) -> Self {
        Series::from_coeffs(self.coeffs.iter().copied(), order)
    }

    fn check_order(&self, other: &Series) -> Result<()> {
        if self.order() != other.order() {
            return Err(SeriesError::OrderMismatch {
                left: self.order(),
                right: other.order(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Series) -> Result<Series> {
        self.check_order(other)?;
        Ok(Series {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Series) -> Result<Series> {
        self.check_order(other)?;
        Ok(Series {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn scale(&self, k: Complex64) -> Series {
        Series {
            coeffs: self.coeffs.iter().map(|a| a * k).collect(),
        }
    }

    /// Cauchy product truncated at the common order.
    pub fn mul(&self, other: &Series) -> Result<Series> {
        self.check_order(other)?;
        let n = self.order();
        let mut out = vec![ZERO; n + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            for (j, b) in other.coeffs[..=n - i].iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Ok(Series { coeffs: out })
    }

    /// The quotient `q` with `q * other == self` modulo `z^{N+1}`.
    pub fn div(&self, other: &Series) -> Result<Series> {
        self.check_order(other)?;
        let b0 = other.coeffs[0];
        if b0 == ZERO {
            return Err(SeriesError::NonInvertible);
        }
        let n = self.order();
        let mut q = vec![ZERO; n + 1];
        for k in 0..=n {
            let mut acc = self.coeffs[k];
            for j in 1..=k {
                acc -= other.coeffs[j] * q[k - j];
            }
            q[k] = acc / b0;
        }
        Ok(Series { coeffs: q })
    }

    /// `self(inner(z))`, requiring `inner(0) == 0`.
    pub fn compose(&self, inner: &Series) -> Result<Series> {
        self.check_order(inner)?;
        if inner.coeffs[0] != ZERO {
            return Err(SeriesError::InnerConstant(inner.coeffs[0]));
        }
        let n = self.order();
        let mut acc = Series::constant(self.coeffs[n], n);
        for k in (0..n).rev() {
            acc = acc.mul(inner)?;
            acc.coeffs[0] += self.coeffs[k];
        }
        Ok(acc)
    }

    /// `exp(self)`, requiring a zero constant term.
    pub fn exp(&self) -> Result<Series> {
        if self.coeffs[0] != ZERO {
            return Err(SeriesError::ExpConstant(self.coeffs[0]));
        }
        // b' = a' b  =>  n b_n = sum_{k=1}^n k a_k b_{n-k}
        let n = self.order();
        let mut b = vec![ZERO; n + 1];
        b[0] = ONE;
        for m in 1..=n {
            let mut acc = ZERO;
            for k in 1..=m {
                acc += self.coeffs[k] * b[m - k] * k as f64;
            }
            b[m] = acc / m as f64;
        }
        Ok(Series { coeffs: b })
    }

    /// `log(self)`, requiring constant term 1.
    pub fn ln(&self) -> Result<Series> {
        if self.coeffs[0] != ONE {
            return Err(SeriesError::LogConstant(self.coeffs[0]));
        }
        // a l' = a'  =>  n l_n = n a_n - sum_{k=1}^{n-1} k l_k a_{n-k}
        let n = self.order();
        let mut l = vec![ZERO; n + 1];
        for m in 1..=n {
            let mut acc = self.coeffs[m] * m as f64;
            for k in 1..m {
                acc -= l[k] * self.coeffs[m - k] * k as f64;
            }
            l[m] = acc / m as f64;
        }
        Ok(Series { coeffs: l })
    }

    /// `self^e = exp(e log self)`, requiring constant term 1.
    pub fn pow(&self, e: Complex64) -> Result<Series> {
        self.ln()?.scale(e).exp()
    }

    /// Termwise derivative. The result has order `N - 1` (order 0 stays a
    /// zero series of order 0).
    pub fn derive(&self) -> Series {
        let n = self.order();
        if n == 0 {
            return Series::zero(0);
        }
        Series {
            coeffs: (1..=n).map(|k| self.coeffs[k] * k as f64).collect(),
        }
    }

    /// Antiderivative with zero constant term, same order. The top input
    /// coefficient does not fit in the window and is dropped.
    pub fn integrate(&self) -> Series {
        let n = self.order();
        let mut out = vec![ZERO; n + 1];
        for k in 1..=n {
            out[k] = self.coeffs[k - 1] / k as f64;
        }
        Series { coeffs: out }
    }

    /// `self / z`, requiring a zero constant term. Order drops by one.
    pub fn shift_down(&self) -> Result<Series> {
        if self.coeffs[0] != ZERO {
            return Err(SeriesError::ShiftConstant(self.coeffs[0]));
        }
        if self.order() == 0 {
            return Ok(Series::zero(0));
        }
        Ok(Series {
            coeffs: self.coeffs[1..].to_vec(),
        })
    }

    /// `z * self`. Order grows by one and no information is lost.
    pub fn shift_up(&self) -> Series {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(ZERO);
        coeffs.extend_from_slice(&self.coeffs);
        Series { coeffs }
    }

    /// Compositional inverse: the series `F` with `self(F(w)) = w` modulo
    /// `w^{N+1}`.
    ///
    /// Solved coefficient by coefficient: the `w^n` coefficient of `f(F)`
    /// is `a_1 F_n + sum_{k>=2} a_k [F^k]_n`, and `[F^k]_n` only involves
    /// `F_1..F_{n-1}` when `k >= 2`.
    pub fn revert(&self) -> Result<Series> {
        let n = self.order();
        if self.coeffs[0] != ZERO {
            return Err(SeriesError::RevertConstant(self.coeffs[0]));
        }
        if n == 0 {
            return Ok(Series::zero(0));
        }
        let a1 = self.coeffs[1];
        if a1 == ZERO {
            return Err(SeriesError::RevertLinear);
        }
        let mut inv = vec![ZERO; n + 1];
        inv[1] = ONE / a1;
        // powers[k][m] = [F^k]_m, filled column by column.
        let mut powers = vec![vec![ZERO; n + 1]; n + 1];
        powers[0][0] = ONE;
        powers[1][1] = inv[1];
        for m in 2..=n {
            let mut acc = ZERO;
            for k in 2..=m {
                let mut p = ZERO;
                for j in 1..=m - k + 1 {
                    p += inv[j] * powers[k - 1][m - j];
                }
                powers[k][m] = p;
                acc += self.coeffs[k] * p;
            }
            inv[m] = -acc / a1;
            powers[1][m] = inv[m];
        }
        Ok(Series { coeffs: inv })
    }

    /// Evaluates the truncated polynomial at `z` (Horner).
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, c| acc * z + c)
    }

    /// Largest coefficientwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Series) -> Result<f64> {
        self.check_order(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

impl Index<usize> for Series {
    type Output = Complex64;

    fn index(&self, n: usize) -> &Complex64 {
        &self.coeffs[n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn real(coeffs: &[f64], order: usize) -> Series {
        Series::from_real(coeffs, order)
    }

    fn assert_close(a: &Series, b: &Series, tol: f64) {
        let d = a.max_abs_diff(b).unwrap();
        assert!(d <= tol, "diff {d:e} > {tol:e}\n{a:?}\n{b:?}");
    }

    #[test]
    fn add_examples() {
        let s = real(&[1.0, 1.0], 2).add(&real(&[1.0, -1.0], 2)).unwrap();
        assert_eq!(s, real(&[2.0], 2));
        let s = Series::identity(3).add(&Series::zero(3)).unwrap();
        assert_eq!(s, Series::identity(3));
        let s = real(&[1.0, 2.0, 3.0], 2)
            .add(&real(&[1.0, 1.0], 2))
            .unwrap();
        assert_eq!(s, real(&[2.0, 3.0, 3.0], 2));
    }

    #[test]
    fn mismatched_orders_rejected() {
        let a = Series::one(2);
        let b = Series::one(3);
        let err = SeriesError::OrderMismatch { left: 2, right: 3 };
        assert_eq!(a.add(&b), Err(err.clone()));
        assert_eq!(a.mul(&b), Err(err.clone()));
        assert_eq!(a.div(&b), Err(err.clone()));
        assert_eq!(a.compose(&b), Err(err));
    }

    #[test]
    fn mul_examples() {
        let s = real(&[1.0, 1.0], 2).mul(&real(&[1.0, -1.0], 2)).unwrap();
        assert_eq!(s, real(&[1.0, 0.0, -1.0], 2));
        let z = Series::identity(1);
        assert_eq!(z.mul(&z).unwrap(), Series::zero(1));
        let s = real(&[1.0, 1.0, 1.0], 2)
            .mul(&real(&[1.0, -1.0], 2))
            .unwrap();
        assert_eq!(s, real(&[1.0, 0.0, 0.0], 2));
    }

    #[test]
    fn div_geometric() {
        let q = real(&[1.0, 1.0], 2).div(&real(&[1.0, -1.0], 2)).unwrap();
        assert_eq!(q, real(&[1.0, 2.0, 2.0], 2));
    }

    #[test]
    fn div_self_is_one() {
        let a = real(&[2.0, -1.0, 0.5, 3.0], 3);
        assert_close(&a.div(&a).unwrap(), &Series::one(3), 1e-15);
    }

    #[test]
    fn div_rational_generator() {
        // (1 - z^2) / (1 - z + z^2): long division by hand gives
        // q0 = 1, q1 = 1, q2 = -1 + 1 - 1 = -1.
        let q = real(&[1.0, 0.0, -1.0], 2)
            .div(&real(&[1.0, -1.0, 1.0], 2))
            .unwrap();
        assert_close(&q, &real(&[1.0, 1.0, -1.0], 2), 1e-15);
        let back = q.mul(&real(&[1.0, -1.0, 1.0], 2)).unwrap();
        assert_close(&back, &real(&[1.0, 0.0, -1.0], 2), 1e-15);
    }

    #[test]
    fn div_by_zero_constant() {
        let err = Series::one(2).div(&Series::identity(2)).unwrap_err();
        assert_eq!(err, SeriesError::NonInvertible);
        assert_eq!(
            err.to_string(),
            "non-invertible series: constant term is zero"
        );
    }

    #[test]
    fn compose_examples() {
        let p = real(&[3.0, -1.0, 2.0, 5.0], 3);
        assert_eq!(p.compose(&Series::identity(3)).unwrap(), p);

        let geom = real(&[1.0; 5], 4);
        let z2 = real(&[0.0, 0.0, 1.0], 4);
        assert_eq!(
            geom.compose(&z2).unwrap(),
            real(&[1.0, 0.0, 1.0, 0.0, 1.0], 4)
        );

        // exp series composed with log(1+z) series.
        let mut fact = 1.0;
        let exp_coeffs: Vec<f64> = (0..=5)
            .map(|k| {
                if k > 0 {
                    fact *= k as f64;
                }
                1.0 / fact
            })
            .collect();
        let log_coeffs: Vec<f64> = (0..=5)
            .map(|k| {
                if k == 0 {
                    0.0
                } else {
                    (-1f64).powi(k + 1) / k as f64
                }
            })
            .collect();
        let s = real(&exp_coeffs, 5).compose(&real(&log_coeffs, 5)).unwrap();
        assert_close(&s, &real(&[1.0, 1.0], 5), 1e-14);
    }

    #[test]
    fn compose_requires_vanishing_inner() {
        let err = Series::identity(2).compose(&Series::one(2)).unwrap_err();
        assert!(matches!(err, SeriesError::InnerConstant(_)));
    }

    #[test]
    fn elementary_functions() {
        assert_eq!(Series::zero(4).exp().unwrap(), Series::one(4));
        let p = real(&[1.0, 1.0], 3).pow(c(2.0)).unwrap();
        assert_close(&p, &real(&[1.0, 2.0, 1.0], 3), 1e-14);
        // (1 - z)^{-2} = sum (n+1) z^n; term ratio (n+2)/(n+1).
        let p = real(&[1.0, -1.0], 3).pow(c(-2.0)).unwrap();
        assert_close(&p, &real(&[1.0, 2.0, 3.0, 4.0], 3), 1e-14);
    }

    #[test]
    fn elementary_preconditions() {
        assert!(matches!(
            Series::one(3).exp(),
            Err(SeriesError::ExpConstant(_))
        ));
        assert!(matches!(
            Series::identity(3).ln(),
            Err(SeriesError::LogConstant(_))
        ));
        assert!(matches!(
            real(&[2.0, 1.0], 3).pow(c(0.5)),
            Err(SeriesError::LogConstant(_))
        ));
    }

    #[test]
    fn calculus() {
        let z2 = real(&[0.0, 0.0, 1.0], 2);
        assert_eq!(z2.derive(), real(&[0.0, 2.0], 1));
        assert_eq!(Series::one(3).integrate(), Series::identity(3));
        // (1 - t^2)^{1/2} = 1 - t^2/2 - ..., integral z - z^3/6.
        let root = real(&[1.0, 0.0, -1.0], 3).pow(c(0.5)).unwrap();
        assert_close(
            &root.integrate(),
            &real(&[0.0, 1.0, 0.0, -1.0 / 6.0], 3),
            1e-15,
        );
    }

    #[test]
    fn shifts() {
        let s = real(&[0.0, 1.0, 2.0], 2);
        assert_eq!(s.shift_down().unwrap(), real(&[1.0, 2.0], 1));
        assert_eq!(s.shift_up(), real(&[0.0, 0.0, 1.0, 2.0], 3));
        assert!(Series::one(2).shift_down().is_err());
    }

    #[test]
    fn revert_examples() {
        assert_eq!(Series::identity(6).revert().unwrap(), Series::identity(6));
        let inv = real(&[0.0, 1.0, 2.0, 3.0], 3).revert().unwrap();
        assert_close(&inv, &real(&[0.0, 1.0, -2.0, 5.0], 3), 1e-14);
        let inv = real(&[0.0, 1.0, 0.0, -1.0 / 6.0], 3).revert().unwrap();
        assert_close(&inv, &real(&[0.0, 1.0, 0.0, 1.0 / 6.0], 3), 1e-15);
        let inv = real(&[0.0, 1.0, 0.0, 1.0 / 6.0], 3).revert().unwrap();
        assert_close(&inv, &real(&[0.0, 1.0, 0.0, -1.0 / 6.0], 3), 1e-15);
    }

    #[test]
    fn revert_koebe_against_closed_form() {
        // The Koebe inverse has signed Catalan coefficients (-1)^{n+1} C(2n, n)/(n+1).
        let k = Series::from_real(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0], 8);
        let inv = k.revert().unwrap();
        assert_close(&k.compose(&inv).unwrap(), &Series::identity(8), 1e-10);
        let expected = [0.0, 1.0, -2.0, 5.0, -14.0, 42.0, -132.0, 429.0, -1430.0];
        assert_close(&inv, &real(&expected, 8), 1e-9);
    }

    #[test]
    fn revert_non_normalized_linear_term() {
        let f = real(&[0.0, 2.0, 1.0], 4);
        let inv = f.revert().unwrap();
        assert_close(&f.compose(&inv).unwrap(), &Series::identity(4), 1e-14);
    }

    #[test]
    fn revert_preconditions() {
        assert!(matches!(
            real(&[1.0, 1.0], 3).revert(),
            Err(SeriesError::RevertConstant(_))
        ));
        assert_eq!(
            real(&[0.0, 0.0, 1.0], 3).revert(),
            Err(SeriesError::RevertLinear)
        );
    }

    #[test]
    fn eval_horner() {
        let s = real(&[1.0, 2.0, 3.0], 2);
        assert_eq!(s.eval(c(2.0)), c(17.0));
    }

    fn normalized(max_order: usize) -> impl Strategy<Value = Series> {
        (2..=max_order).prop_flat_map(|n| {
            prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), n - 1).prop_map(move |v| {
                let mut coeffs = vec![ZERO, ONE];
                coeffs.extend(v.into_iter().map(|(re, im)| Complex64::new(re, im)));
                Series::from_coeffs(coeffs, n)
            })
        })
    }

    fn unit_constant(max_order: usize) -> impl Strategy<Value = Series> {
        (1..=max_order).prop_flat_map(|n| {
            prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n).prop_map(move |v| {
                let mut coeffs = vec![ONE];
                coeffs.extend(v.into_iter().map(|(re, im)| Complex64::new(re, im)));
                Series::from_coeffs(coeffs, n)
            })
        })
    }

    proptest! {
        #[test]
        fn revert_is_right_inverse(f in normalized(12)) {
            let inv = f.revert().unwrap();
            let id = f.compose(&inv).unwrap();
            // Inverse coefficients of a degree-12 series with entries up to 10
            // reach ~1e13, so the tolerance is relative to that scale.
            let d = id.max_abs_diff(&Series::identity(f.order())).unwrap();
            let scale = inv.coeffs().iter().map(|x| x.norm()).fold(1.0, f64::max);
            prop_assert!(d <= 1e-12 * scale, "d = {d:e}, scale = {scale:e}");
        }

        #[test]
        fn revert_is_involution(f in normalized(12)) {
            let inv = f.revert().unwrap();
            let back = inv.revert().unwrap();
            let scale = inv.coeffs().iter().map(|x| x.norm()).fold(1.0, f64::max);
            let d = back.max_abs_diff(&f).unwrap();
            prop_assert!(d <= 1e-12 * scale, "d = {d:e}, scale = {scale:e}");
        }

        #[test]
        fn low_order_inverse_coefficients(f in normalized(12)) {
            prop_assume!(f.order() >= 3);
            let inv = f.revert().unwrap();
            let a2 = f[2];
            let a3 = f[3];
            prop_assert!((inv[2] + a2).norm() <= 1e-12);
            prop_assert!((inv[3] - (a2 * a2 * 2.0 - a3)).norm() <= 1e-12 * (1.0 + a2.norm_sqr()));
        }

        #[test]
        fn div_then_mul_round_trips(a in unit_constant(12), b in unit_constant(12)) {
            let b = b.with_order(a.order());
            let q = a.div(&b).unwrap();
            let back = q.mul(&b).unwrap();
            let scale = q.coeffs().iter().map(|x| x.norm()).fold(1.0, f64::max);
            prop_assert!(back.max_abs_diff(&a).unwrap() <= 1e-12 * scale);
        }

        #[test]
        fn exp_inverts_log(a in unit_constant(12)) {
            let back = a.ln().unwrap().exp().unwrap();
            prop_assert!(back.max_abs_diff(&a).unwrap() <= 1e-12);
        }
    }
}
