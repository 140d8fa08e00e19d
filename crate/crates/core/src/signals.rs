//! Received-signal-strength and time-of-arrival transmission models, and the
//! algebraic inversions used by the distance-based baselines.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DistanceMatrix;
use crate::ordinal::{Orientation, SignalMatrix};
use crate::scalar::Scalar;

/// Links shorter than this are lengthened to it before computing a power.
pub const MIN_LINK_DISTANCE: f64 = 1e-6;

/// Power-law path loss `P_R = P_T * alpha * d^(-G)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RssModel<T> {
    /// mW
    pub transmit_power: T,
    pub alpha: T,
}

impl<T: Scalar> RssModel<T> {
    pub fn new(transmit_power: T, alpha: T) -> Result<Self> {
        if !(transmit_power > T::zero()) || !(alpha > T::zero()) {
            return Err(Error::Domain("transmit power and alpha must be positive".into()));
        }
        Ok(Self {
            transmit_power,
            alpha,
        })
    }
}

impl<T: Scalar> Default for RssModel<T> {
    fn default() -> Self {
        Self {
            transmit_power: T::one(),
            alpha: T::one(),
        }
    }
}

/// Where a link's path-loss exponent comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PathLossExponent<T> {
    Fixed(T),
    /// independent uniform draw on `[a, b]` per link
    Uniform { a: T, b: T },
}

impl<T: Scalar> PathLossExponent<T> {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PathLossExponent::Fixed(g) if g > T::zero() => Ok(()),
            PathLossExponent::Uniform { a, b } if a >= T::lit(2.0) && a <= b && b.is_finite() => Ok(()),
            _ => Err(Error::Domain(format!("invalid path-loss exponent {self:?}"))),
        }
    }
}

pub fn rss_power<T: Scalar>(model: &RssModel<T>, d: T, exponent: T) -> Result<T> {
    if !(d > T::zero()) {
        return Err(Error::Domain(format!("link distance must be positive, got {d}")));
    }
    Ok(model.transmit_power * model.alpha * d.powf(-exponent))
}

/// `d = (P_T alpha / P_R)^(1/G)`.
pub fn invert_rss<T: Scalar>(model: &RssModel<T>, received: T, exponent: T) -> Result<T> {
    if !(received > T::zero()) {
        return Err(Error::Domain(format!("received power must be positive, got {received}")));
    }
    if !(exponent > T::zero()) {
        return Err(Error::Domain(format!("path-loss exponent must be positive, got {exponent}")));
    }
    Ok((model.transmit_power * model.alpha / received).powf(T::one() / exponent))
}

/// Uniform draw on `[a, b]`; returns `a` when the interval is a point.
pub fn sample_path_loss_exponent<T: Scalar, R: Rng + ?Sized>(a: T, b: T, rng: &mut R) -> T {
    let u: f64 = rng.random();
    a + (b - a) * T::lit(u)
}

/// `tau ~ N(d / c, sigma_T^2)`, not truncated at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToaModel<T> {
    pub speed: T,
    pub sigma_t: T,
}

impl<T: Scalar> ToaModel<T> {
    pub fn new(speed: T, sigma_t: T) -> Result<Self> {
        if !(speed > T::zero()) || !(sigma_t >= T::zero()) {
            return Err(Error::Domain("need speed > 0 and sigma_T >= 0".into()));
        }
        Ok(Self { speed, sigma_t })
    }

    /// Model whose normalized variance `c * sigma_T^2` equals `normalized_variance`.
    pub fn from_normalized_variance(speed: T, normalized_variance: T) -> Result<Self> {
        if !(normalized_variance >= T::zero()) {
            return Err(Error::Domain("normalized variance must be >= 0".into()));
        }
        Self::new(speed, (normalized_variance / speed).sqrt())
    }

    pub fn normalized_variance(&self) -> T {
        self.speed * self.sigma_t * self.sigma_t
    }
}

pub fn toa_sample<T: Scalar, R: Rng + ?Sized>(model: &ToaModel<T>, d: T, rng: &mut R) -> T {
    let mean = d / model.speed;
    if model.sigma_t == T::zero() {
        return mean;
    }
    let e: f64 = rng.sample(StandardNormal);
    mean + model.sigma_t * T::lit(e)
}

/// Symmetric per-link exponents for `n` sensors, one draw per unordered pair
/// in lexicographic pair order. The diagonal is zero.
pub fn sample_link_exponents<T: Scalar, R: Rng + ?Sized>(
    n: usize,
    exponent: &PathLossExponent<T>,
    rng: &mut R,
) -> Array2<T> {
    let mut g = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let v = match *exponent {
                PathLossExponent::Fixed(v) => v,
                PathLossExponent::Uniform { a, b } => sample_path_loss_exponent(a, b, rng),
            };
            g[[i, j]] = v;
            g[[j, i]] = v;
        }
    }
    g
}

/// Received powers on every link (mW), decreasing with distance.
pub fn rss_signal_matrix<T: Scalar>(
    d: &DistanceMatrix<T>,
    model: &RssModel<T>,
    exponents: &Array2<T>,
) -> Result<SignalMatrix<T>> {
    let n = d.order();
    if exponents.dim() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: exponents.nrows(),
        });
    }
    let floor = T::lit(MIN_LINK_DISTANCE);
    let mut p = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rss_power(model, d.get(i, j).max(floor), exponents[[i, j]])?;
            p[[i, j]] = v;
            p[[j, i]] = v;
        }
    }
    SignalMatrix::complete(p, Orientation::DecreasingWithDistance)
}

/// One TOA draw per unordered link, shared by both directions.
pub fn toa_signal_matrix<T: Scalar, R: Rng + ?Sized>(
    d: &DistanceMatrix<T>,
    model: &ToaModel<T>,
    rng: &mut R,
) -> Result<SignalMatrix<T>> {
    let n = d.order();
    let mut t = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let v = toa_sample(model, d.get(i, j), rng);
            t[[i, j]] = v;
            t[[j, i]] = v;
        }
    }
    SignalMatrix::complete(t, Orientation::IncreasingWithDistance)
}

/// Converts mW to dBm.
pub fn mw_to_dbm<T: Scalar>(p: T) -> T {
    T::lit(10.0) * p.log10()
}

pub fn dbm_to_mw<T: Scalar>(dbm: T) -> T {
    T::lit(10.0).powf(dbm / T::lit(10.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn power_examples() {
        let m = RssModel::<f64>::default();
        assert_eq!(rss_power(&m, 1.0, 3.7).unwrap(), 1.0);
        assert_eq!(rss_power(&m, 2.0, 2.0).unwrap(), 0.25);
        assert!(rss_power(&m, 0.0, 2.0).is_err());
        assert!(rss_power(&m, -1.0, 2.0).is_err());
    }

    #[test]
    fn inversion_examples() {
        let m = RssModel::<f64>::default();
        assert_eq!(invert_rss(&m, 0.25, 2.0).unwrap(), 2.0);
        assert!(invert_rss(&m, 0.0, 2.0).is_err());
        // true exponent 6, calibrated exponent 2
        let p = rss_power(&m, 2.0, 6.0).unwrap();
        assert_eq!(p, 1.0 / 64.0);
        assert!((invert_rss(&m, p, 2.0).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn point_interval() {
        let mut r = rng::stream(&[1]);
        for _ in 0..10 {
            assert_eq!(sample_path_loss_exponent(4.0, 4.0, &mut r), 4.0);
        }
    }

    #[test]
    fn exponent_mean() {
        let mut r = rng::stream(&[2]);
        let n = 100_000;
        let mean = (0..n).map(|_| sample_path_loss_exponent(2.0, 6.0, &mut r)).sum::<f64>() / n as f64;
        // sd of U[2,6] is 4/sqrt(12); 3 standard errors ~ 0.011
        assert!((mean - 4.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn toa_noiseless_and_mean() {
        let mut r = rng::stream(&[3]);
        let exact = ToaModel::new(2.0, 0.0).unwrap();
        assert_eq!(toa_sample(&exact, 10.0, &mut r), 5.0);
        let noisy = ToaModel::new(1.0, 1.0).unwrap();
        let n = 100_000;
        let mean = (0..n).map(|_| toa_sample(&noisy, 100.0, &mut r)).sum::<f64>() / n as f64;
        assert!((mean - 100.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn toa_reproducible() {
        let m = ToaModel::new(1.0, 0.5).unwrap();
        let a: Vec<f64> = {
            let mut r = rng::stream(&[9]);
            (0..5).map(|_| toa_sample(&m, 3.0, &mut r)).collect()
        };
        let b: Vec<f64> = {
            let mut r = rng::stream(&[9]);
            (0..5).map(|_| toa_sample(&m, 3.0, &mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn normalized_variance_roundtrip() {
        let m = ToaModel::from_normalized_variance(4.0_f64, 2.0).unwrap();
        assert!((m.normalized_variance() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn dbm_conversion() {
        assert_eq!(mw_to_dbm(1.0_f64), 0.0);
        assert!((mw_to_dbm(0.001_f64) + 30.0).abs() < 1e-12);
        assert!((dbm_to_mw(-30.0_f64) - 0.001).abs() < 1e-15);
    }

    #[test]
    fn exponent_validation() {
        assert!(PathLossExponent::Uniform { a: 2.0, b: 6.0 }.validate().is_ok());
        assert!(PathLossExponent::Uniform { a: 1.0, b: 6.0 }.validate().is_err());
        assert!(PathLossExponent::Uniform { a: 5.0, b: 3.0 }.validate().is_err());
        assert!(PathLossExponent::Fixed(0.0).validate().is_err());
    }
}
