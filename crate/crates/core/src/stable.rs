//! Alpha-stable marginals: parameters, characteristic function, exact
//! sampling, absolute moments, and the heavy-tail constant relations.
//!
//! The parameterization is the one fixed by the characteristic function
//!
//! ```text
//! E exp(i t X) = exp( -sigma^alpha |t|^alpha (1 - i nu sign(t) tan(pi alpha / 2)) )
//! ```
//!
//! so that `alpha = 2` is the normal law with variance `2 sigma^2`.

use crate::error::{Error, Result};
use crate::quad;
use crate::rng::Prf;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Index, scale and skewness of a stable law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    alpha: f64,
    sigma: f64,
    nu: f64,
}

impl StableParams {
    /// Validates `0 < alpha <= 2`, `sigma >= 0`, `|nu| <= 1`. Skewness is
    /// rejected at `alpha = 1` and normalized away at `alpha = 2`.
    pub fn new(alpha: f64, sigma: f64, nu: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::invalid(format!("alpha {alpha} outside (0, 2]")));
        }
        if !(sigma >= 0.0) {
            return Err(Error::invalid(format!("scale {sigma} must be >= 0")));
        }
        if !(-1.0..=1.0).contains(&nu) || nu.is_nan() {
            return Err(Error::invalid(format!("skewness {nu} outside [-1, 1]")));
        }
        if alpha == 1.0 && nu != 0.0 {
            return Err(Error::invalid("skewness must vanish when alpha = 1"));
        }
        let nu = if alpha == 2.0 { 0.0 } else { nu };
        Ok(StableParams { alpha, sigma, nu })
    }

    pub fn symmetric(alpha: f64, sigma: f64) -> Result<Self> {
        Self::new(alpha, sigma, 0.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `tan(pi alpha / 2)`, exactly zero at `alpha = 2`.
    pub fn skew_factor(&self) -> f64 {
        skew_factor(self.alpha)
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.alpha, sigma, self.nu)
    }

    /// Characteristic function at `theta`.
    pub fn char_fn(&self, theta: f64) -> Complex64 {
        let amp = self.sigma.powf(self.alpha) * theta.abs().powf(self.alpha);
        if amp == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        let skew = self.nu * sign(theta) * self.skew_factor();
        (Complex64::new(-amp, amp * skew)).exp()
    }

    /// One draw from two independent uniforms in (0, 1).
    ///
    /// Polar construction: a uniform angle and an exponential radius give an
    /// exact stable variate in O(1).
    pub fn sample_from_uniforms(&self, u1: f64, u2: f64) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        let v = PI * (u1 - 0.5); // uniform on (-pi/2, pi/2)
        let w = -(1.0 - u2).ln(); // exponential(1)
        self.sigma * unit_stable(self.alpha, self.nu, v, w)
    }

    /// `n` i.i.d. draws, replica-addressable through a counter PRF.
    pub fn sample_with(&self, prf: &Prf, start: u64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let idx = start + i as u64;
                self.sample_from_uniforms(prf.unit(&[idx, 0]), prf.unit(&[idx, 1]))
            })
            .collect()
    }

    /// Absolute moment `E |X|^p` of this law.
    ///
    /// Needs `0 < p < alpha` (any `p > 0` at `alpha = 2`). Computed through
    /// the quadrature identity
    /// `E|X|^p = int (1 - Re phi(t)) t^(-p-1) dt / int (1 - cos u) u^(-p-1) du`,
    /// with the Gaussian case for `p >= 2` closed-form.
    pub fn abs_moment(&self, p: f64) -> Result<f64> {
        if p <= 0.0 {
            return Err(Error::invalid("moment order must be positive"));
        }
        if self.alpha < 2.0 && p >= self.alpha {
            return Err(Error::invalid(format!(
                "absolute moment of order {p} diverges for alpha {}",
                self.alpha
            )));
        }
        if self.sigma == 0.0 {
            return Ok(0.0);
        }
        if self.alpha == 2.0 && p >= 2.0 {
            // E|N(0, 2 sigma^2)|^p
            let half = quad::ln_gamma((p + 1.0) / 2.0);
            return Ok((2.0 * self.sigma * self.sigma).powf(p / 2.0)
                * (2.0_f64.powf(p / 2.0) * half.exp() / PI.sqrt()));
        }
        let unit = StableParams::new(self.alpha, 1.0, self.nu)?;
        let alpha = self.alpha;
        let skew = unit.nu * unit.skew_factor();
        // 1 - Re phi, written to avoid cancellation when t^alpha underflows:
        // 1 - e^-a cos(sa) = (1 - e^-a) + e^-a (1 - cos(sa))
        let one_minus_re_cf = move |t: f64| {
            let amp = t.powf(alpha);
            let half = (0.5 * amp * skew).sin();
            -(-amp).exp_m1() + (-amp).exp() * 2.0 * half * half
        };
        // numerator: smooth positive integrand, t^(alpha-p-1) at zero
        let m = (1.0 / (alpha - p).min(1.0)).max(1.0) * 2.0;
        let head = quad::adaptive_power_left(
            |t| one_minus_re_cf(t) * t.powf(-p - 1.0),
            0.0,
            1.0,
            m,
            1e-12,
            1e-12,
        )?;
        let t_cut = 60.0_f64.powf(1.0 / alpha); // exp(-t^alpha) below 1e-26
        let body = quad::adaptive(
            |t| one_minus_re_cf(t) * t.powf(-p - 1.0),
            1.0,
            t_cut,
            1e-12,
            1e-12,
        )?;
        let tail = t_cut.powf(-p) / p;
        let numerator = head + body + tail;
        // denominator by parts: p * int (1-cos u) u^(-p-1) du = int u^-p sin u du
        let denominator = quad::sine_power_integral(p)? / p;
        Ok(self.sigma.powf(p) * numerator / denominator)
    }
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `tan(pi a / 2)` with the removable special cases pinned.
pub fn skew_factor(alpha: f64) -> f64 {
    if alpha == 2.0 || alpha == 1.0 {
        0.0
    } else {
        (FRAC_PI_2 * alpha).tan()
    }
}

/// Unit-scale stable variate from the polar pair `(v, w)`,
/// `v` uniform on (-pi/2, pi/2), `w` standard exponential.
fn unit_stable(alpha: f64, nu: f64, v: f64, w: f64) -> f64 {
    if alpha == 2.0 {
        // reduces to 2 sqrt(w) sin v ~ N(0, 2)
        return 2.0 * w.sqrt() * v.sin();
    }
    if alpha == 1.0 {
        // symmetric by construction (nu = 0): Cauchy with scale 1
        return v.tan();
    }
    let ta = skew_factor(alpha);
    let b = (nu * ta).atan() / alpha;
    let s = (1.0 + nu * nu * ta * ta).powf(0.5 / alpha);
    let avb = alpha * (v + b);
    s * avb.sin() / v.cos().powf(1.0 / alpha)
        * ((v - avb).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Tail weights of a heavy-tailed law: `P(X > x) ~ p x^-alpha` and
/// `P(X < -x) ~ q x^-alpha`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TailSpec {
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
}

impl TailSpec {
    pub fn new(alpha: f64, p: f64, q: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::invalid(format!(
                "tail index {alpha} outside (0, 2)"
            )));
        }
        if p < 0.0 || q < 0.0 || p + q <= 0.0 {
            return Err(Error::invalid("tail weights must be >= 0 with p + q > 0"));
        }
        if alpha == 1.0 && p != q {
            return Err(Error::invalid(
                "alpha = 1 requires symmetric tails (p = q)",
            ));
        }
        Ok(TailSpec { alpha, p, q })
    }

    /// Stable parameters of the attracting law.
    ///
    /// The scale solves `sigma^alpha = (p + q) int_0^inf t^-alpha sin t dt`.
    /// The skewness identity is evaluated through the convergent
    /// sine/cosine-integral forms, which collapse to `nu = (p - q)/(p + q)`;
    /// both integrals come from the module quadrature.
    pub fn to_params(&self) -> Result<StableParams> {
        let TailSpec { alpha, p, q } = *self;
        let i_sin = quad::sine_power_integral(alpha)?;
        let sigma = ((p + q) * i_sin).powf(1.0 / alpha);
        let nu = if p == q {
            0.0
        } else {
            // (p - q) I2 / ((p + q) I_sin tan(pi alpha / 2)) with
            // I2 the convergent continuation of the (1 - cos) integral
            let i2 = if alpha < 1.0 {
                quad::cosine_power_integral(alpha)?
            } else {
                -quad::haar_cosine_integral(alpha)?
            };
            let raw = (p - q) * i2 / ((p + q) * i_sin * skew_factor(alpha));
            raw.clamp(-1.0, 1.0)
        };
        StableParams::new(alpha, sigma, nu)
    }

    /// Inverts [`TailSpec::to_params`]: recovers `(p + q, p - q)` from the
    /// stable parameters. Used as a round-trip consistency check.
    pub fn weights_from_params(params: &StableParams) -> Result<(f64, f64)> {
        let alpha = params.alpha();
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::invalid("tail inversion needs alpha in (0, 2)"));
        }
        let i_sin = quad::sine_power_integral(alpha)?;
        let total = params.sigma().powf(alpha) / i_sin;
        let diff = if params.nu() == 0.0 || alpha == 1.0 {
            0.0
        } else {
            let i2 = if alpha < 1.0 {
                quad::cosine_power_integral(alpha)?
            } else {
                -quad::haar_cosine_integral(alpha)?
            };
            params.nu() * params.sigma().powf(alpha) * skew_factor(alpha) / i2
        };
        Ok((total, diff))
    }
}
