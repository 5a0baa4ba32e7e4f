//! Deformed exponentials and weighted power means.
//!
//! Everything here works on the extended half-line with the conventions
//! `0 * inf = 0`, `1 / 0 = inf` and `-log 0 = inf`. Branch points are decided
//! by exact comparisons against zero, never with an epsilon: the support
//! logic further up depends on telling an exact zero from a tiny positive.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// A real number or one of the two infinities.
///
/// Ordering is the usual one on the extended real line. `NaN` is never stored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);
    pub const ONE: ExtReal = ExtReal::Finite(1.0);

    /// Wraps an `f64`, mapping IEEE infinities onto the markers.
    ///
    /// Panics on `NaN`; every producer in this crate resolves indeterminate
    /// forms before constructing a value.
    pub fn from_f64(x: f64) -> Self {
        assert!(!x.is_nan(), "ExtReal::from_f64 received NaN");
        if x == f64::INFINITY {
            ExtReal::PosInf
        } else if x == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(x)
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_pos_inf(self) -> bool {
        matches!(self, ExtReal::PosInf)
    }

    /// Multiplication by a finite scalar with `0 * (+-inf) = 0`.
    pub fn scale(self, c: f64) -> Self {
        match self {
            ExtReal::Finite(x) => ExtReal::from_f64(c * x),
            _ if c == 0.0 => ExtReal::ZERO,
            ExtReal::PosInf if c > 0.0 => ExtReal::PosInf,
            ExtReal::PosInf => ExtReal::NegInf,
            ExtReal::NegInf if c > 0.0 => ExtReal::NegInf,
            ExtReal::NegInf => ExtReal::PosInf,
        }
    }

    /// `1 / x` with `1 / 0 = +inf` and `1 / inf = 0`.
    pub fn recip(self) -> Self {
        match self {
            ExtReal::Finite(0.0) => ExtReal::PosInf,
            ExtReal::Finite(x) => ExtReal::Finite(1.0 / x),
            _ => ExtReal::ZERO,
        }
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    /// `inf + (-inf)` has no value and panics.
    fn add(self, other: ExtReal) -> ExtReal {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::from_f64(a + b),
            (ExtReal::PosInf, ExtReal::NegInf) | (ExtReal::NegInf, ExtReal::PosInf) => {
                panic!("ExtReal: inf - inf is undefined")
            }
            (ExtReal::PosInf, _) | (_, ExtReal::PosInf) => ExtReal::PosInf,
            _ => ExtReal::NegInf,
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::from_f64(x)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => f.write_str("-infinite"),
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::PosInf => f.write_str("infinite"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(x) => serializer.serialize_f64(*x),
            ExtReal::PosInf => serializer.serialize_str("infinite"),
            ExtReal::NegInf => serializer.serialize_str("-infinite"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct ExtRealVisitor;

        impl Visitor<'_> for ExtRealVisitor {
            type Value = ExtReal;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number, \"infinite\" or \"-infinite\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ExtReal, E> {
                if v.is_nan() {
                    return Err(E::custom("NaN is not an extended real"));
                }
                Ok(ExtReal::from_f64(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtReal, E> {
                Ok(ExtReal::Finite(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtReal, E> {
                Ok(ExtReal::Finite(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtReal, E> {
                match v {
                    "infinite" | "+infinite" => Ok(ExtReal::PosInf),
                    "-infinite" => Ok(ExtReal::NegInf),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }

        deserializer.deserialize_any(ExtRealVisitor)
    }
}

/// The divergence order together with the cost scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaParams {
    alpha: f64,
    kappa: f64,
}

impl AlphaParams {
    pub fn new(alpha: f64, kappa: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::invalid("alpha", format!("must be finite, got {alpha}")));
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::invalid(
                "kappa",
                format!("must be a positive finite number, got {kappa}"),
            ));
        }
        Ok(AlphaParams { alpha, kappa })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `q = (3 + alpha) / 2`.
    pub fn q(&self) -> f64 {
        q_alpha(self.alpha)
    }

    /// Same cost scale, different order.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        AlphaParams::new(alpha, self.kappa)
    }
}

pub fn q_alpha(alpha: f64) -> f64 {
    (3.0 + alpha) / 2.0
}

/// Tsallis q-exponential `[1 + (1-q) x]_+^{1/(1-q)}`, `exp(x)` at `q = 1`.
///
/// When the bracket is non-positive the result is `0` for `q < 1` and `+inf`
/// for `q > 1`.
pub fn q_exp(x: f64, q: f64) -> ExtReal {
    if q == 1.0 {
        return ExtReal::from_f64(x.exp());
    }
    let one_minus_q = 1.0 - q;
    let base = 1.0 + one_minus_q * x;
    if base <= 0.0 {
        return if q < 1.0 { ExtReal::ZERO } else { ExtReal::PosInf };
    }
    ExtReal::from_f64(base.powf(1.0 / one_minus_q))
}

/// Kernel of the alpha-mean: `t^{(1-alpha)/2}`, or `log t` at `alpha = 1`.
///
/// `t = 0` is rejected for `alpha >= 1`; use [`h_alpha_extended`] when the
/// infinite limit is wanted.
pub fn h_alpha(t: ExtReal, alpha: f64) -> Result<ExtReal> {
    match t {
        ExtReal::NegInf => Err(Error::domain("h_alpha", "argument must be nonnegative")),
        ExtReal::Finite(x) if x < 0.0 => Err(Error::domain(
            "h_alpha",
            format!("argument must be nonnegative, got {x}"),
        )),
        ExtReal::Finite(x) if x == 0.0 && alpha >= 1.0 => Err(Error::domain(
            "h_alpha",
            format!("argument 0 is outside the domain for alpha = {alpha} >= 1"),
        )),
        _ => Ok(h_alpha_extended(t, alpha)),
    }
}

/// [`h_alpha`] on the closed half-line, with `log 0 = -inf` and `0^{-s} = +inf`.
pub fn h_alpha_extended(t: ExtReal, alpha: f64) -> ExtReal {
    if alpha == 1.0 {
        return match t {
            ExtReal::PosInf => ExtReal::PosInf,
            ExtReal::Finite(0.0) => ExtReal::NegInf,
            ExtReal::Finite(x) => ExtReal::Finite(x.ln()),
            ExtReal::NegInf => panic!("h_alpha_extended: negative argument"),
        };
    }
    let exponent = (1.0 - alpha) / 2.0;
    match t {
        ExtReal::PosInf if exponent > 0.0 => ExtReal::PosInf,
        ExtReal::PosInf => ExtReal::ZERO,
        ExtReal::Finite(x) if x == 0.0 && exponent > 0.0 => ExtReal::ZERO,
        ExtReal::Finite(0.0) => ExtReal::PosInf,
        ExtReal::Finite(x) => ExtReal::from_f64(x.powf(exponent)),
        ExtReal::NegInf => panic!("h_alpha_extended: negative argument"),
    }
}

/// Inverse of [`h_alpha`].
pub fn h_alpha_inv(s: ExtReal, alpha: f64) -> Result<ExtReal> {
    if alpha == 1.0 {
        return Ok(match s {
            ExtReal::NegInf => ExtReal::ZERO,
            ExtReal::Finite(x) => ExtReal::from_f64(x.exp()),
            ExtReal::PosInf => ExtReal::PosInf,
        });
    }
    let exponent = 2.0 / (1.0 - alpha);
    match s {
        ExtReal::NegInf => Err(Error::domain(
            "h_alpha_inv",
            "-inf is outside the range of h_alpha",
        )),
        ExtReal::Finite(x) if x < 0.0 => Err(Error::domain(
            "h_alpha_inv",
            format!("{x} is outside the range of h_alpha for alpha = {alpha}"),
        )),
        // h(0) = 0 for alpha < 1 and h(+inf) = 0 for alpha > 1
        ExtReal::Finite(0.0) => Ok(if exponent > 0.0 {
            ExtReal::ZERO
        } else {
            ExtReal::PosInf
        }),
        ExtReal::Finite(x) => Ok(ExtReal::from_f64(x.powf(exponent))),
        ExtReal::PosInf => Ok(if exponent > 0.0 {
            ExtReal::PosInf
        } else {
            ExtReal::ZERO
        }),
    }
}

/// `h_alpha(q_exp(x, q_alpha))` evaluated in one step.
///
/// For `alpha` outside `{-1, 1}` this is `[1 - (1+alpha) x / 2]_+^{-(1-alpha)/(1+alpha)}`,
/// `exp(x)` at `alpha = -1` and `-log [1 - x]_+` at `alpha = 1`. The single power
/// resolves the boundary cases (an infinite q-exponential fed into a negative
/// power) without forming `0 * inf`.
pub fn fused_h_qexp(x: f64, alpha: f64) -> ExtReal {
    if alpha == -1.0 {
        return ExtReal::from_f64(x.exp());
    }
    if alpha == 1.0 {
        let base = 1.0 - x;
        return if base <= 0.0 {
            ExtReal::PosInf
        } else {
            ExtReal::from_f64(-base.ln())
        };
    }
    let base = 1.0 - (1.0 + alpha) * x / 2.0;
    let exponent = -(1.0 - alpha) / (1.0 + alpha);
    if base <= 0.0 {
        return if exponent > 0.0 {
            ExtReal::ZERO
        } else {
            ExtReal::PosInf
        };
    }
    ExtReal::from_f64(base.powf(exponent))
}

/// Prior-weighted alpha-mean `h^{-1}[sum_s prior_s h(x_s)]`.
///
/// Arithmetic mean at `alpha = -1`, geometric mean at `alpha = 1`. Zero entries
/// are allowed only for `alpha < 1`.
pub fn alpha_mean(x: &[f64], prior: &[f64], alpha: f64) -> Result<f64> {
    if x.len() != prior.len() {
        return Err(Error::invalid(
            "x",
            format!("length {} does not match prior length {}", x.len(), prior.len()),
        ));
    }
    if x.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::domain(
            "alpha_mean",
            "entries must be finite and nonnegative",
        ));
    }
    let has_zero = x.contains(&0.0);
    if alpha >= 1.0 && has_zero {
        return Err(Error::domain(
            "alpha_mean",
            format!("zero entry with alpha = {alpha} >= 1"),
        ));
    }
    let largest = x.iter().cloned().fold(0.0_f64, f64::max);
    if largest == 0.0 {
        return Ok(0.0);
    }
    let exponent = (1.0 - alpha) / 2.0;
    // Homogeneous of degree one: scale so every power is at most one.
    let scale = if exponent > 0.0 {
        largest
    } else {
        x.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    if alpha == 1.0 {
        let log_mean: f64 = x.iter().zip(prior).map(|(&v, &w)| w * (v / scale).ln()).sum();
        return Ok(scale * log_mean.exp());
    }
    let inner: f64 = x
        .iter()
        .zip(prior)
        .map(|(&v, &w)| {
            if v == 0.0 {
                0.0
            } else {
                w * (v / scale).powf(exponent)
            }
        })
        .sum();
    Ok(scale * inner.powf(1.0 / exponent))
}
