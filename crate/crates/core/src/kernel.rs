//! Integrands: evaluable functions on R^d with declared support and decay.
//!
//! A kernel carries everything the lattice machinery needs to make infinite
//! sums finite with accounted error: a bounded support box, or a decay
//! certificate `|f(x)| <= C |x|^-eta` past a stated radius. Certificates are
//! declared (by the parser or the caller), not proven; membership checks
//! falsify them by sampling.

use crate::error::{Error, Result};
use crate::gridops::CellArray;
use crate::quad;
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::invalid("box bounds must have equal, positive length"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::invalid("box must have positive extent on every axis"));
        }
        Ok(BoxDomain { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Half-open membership `lo <= x < hi`.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&v, (&a, &b))| v >= a && v < b)
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    /// Volume of the intersection with `[lo, hi)`.
    pub fn overlap(&self, lo: &[f64], hi: &[f64]) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(lo.iter().zip(hi))
            .map(|((&a, &b), (&c, &d))| (b.min(d) - a.max(c)).max(0.0))
            .product()
    }

    pub fn scaled(&self, c: f64) -> Self {
        // support of x -> f(c x) is the original box divided by c
        BoxDomain {
            lo: self.lo.iter().map(|a| a / c).collect(),
            hi: self.hi.iter().map(|b| b / c).collect(),
        }
    }

    pub fn radius(&self) -> f64 {
        self.lo
            .iter()
            .chain(&self.hi)
            .fold(0.0_f64, |r, &v| r.max(v.abs()))
    }
}

/// Declared envelope past `radius`, in the sup norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Decay {
    /// `|f(x)| <= c |x|^-eta` for `|x| >= radius`.
    Power { c: f64, eta: f64, radius: f64 },
    /// `|f(x)| <= c exp(-rate |x|)` for `|x| >= radius`.
    Exponential { c: f64, rate: f64, radius: f64 },
}

impl Decay {
    pub fn bound(&self, r: f64) -> f64 {
        match *self {
            Decay::Power { c, eta, radius } => {
                if r < radius {
                    f64::INFINITY
                } else {
                    c * r.powf(-eta)
                }
            }
            Decay::Exponential { c, rate, radius } => {
                if r < radius {
                    f64::INFINITY
                } else {
                    c * (-rate * r).exp()
                }
            }
        }
    }

    /// Certified bound on `int_{|x| > r} |f|^alpha` (sup-norm shells).
    pub fn tail_alpha_mass(&self, r: f64, alpha: f64, dim: usize) -> f64 {
        let d = dim as f64;
        match *self {
            Decay::Power { c, eta, radius } => {
                let s = eta * alpha;
                if s <= d || r < radius {
                    return f64::INFINITY;
                }
                c.powf(alpha) * 2.0_f64.powi(dim as i32) * d * r.powf(d - s) / (s - d)
            }
            Decay::Exponential { c, rate, radius } => {
                if r < radius {
                    return f64::INFINITY;
                }
                let ar = alpha * rate;
                // shell measure 2^d d r^(d-1); the polynomial factor is
                // bounded along the tail by its value shifted one e-fold out
                let poly = (r + d / ar).powf(d - 1.0).max(1.0);
                c.powf(alpha) * 2.0_f64.powi(dim as i32) * d * poly * (-ar * r).exp() / ar
            }
        }
    }

    fn scaled(&self, k: f64) -> Decay {
        // envelope of x -> f(k x)
        match *self {
            Decay::Power { c, eta, radius } => Decay::Power {
                c: c * k.powf(-eta),
                eta,
                radius: radius / k,
            },
            Decay::Exponential { c, rate, radius } => Decay::Exponential {
                c,
                rate: rate * k,
                radius: radius / k,
            },
        }
    }
}

/// Structure tags that unlock exact integration paths.
#[derive(Clone)]
pub enum Shape {
    General,
    /// Indicator of a half-open box.
    BoxIndicator(BoxDomain),
    /// Piecewise constant on lattice cells (output of the step extension).
    PiecewiseConstant(Arc<CellArray>),
}

/// An evaluable integrand on R^d.
#[derive(Clone)]
pub struct Kernel {
    dim: usize,
    eval: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    support: Option<BoxDomain>,
    decay: Option<Decay>,
    shape: Shape,
    continuous: bool,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("dim", &self.dim)
            .field("support", &self.support)
            .field("decay", &self.decay)
            .field("continuous", &self.continuous)
            .finish()
    }
}

impl Kernel {
    /// General kernel from a closure. `support = None` means unbounded; give
    /// a decay certificate in that case if any norm is to be computed.
    pub fn from_fn<F>(dim: usize, f: F, support: Option<BoxDomain>, decay: Option<Decay>) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Kernel {
            dim,
            eval: Arc::new(f),
            support,
            decay,
            shape: Shape::General,
            continuous: true,
        }
    }

    pub fn with_continuity(mut self, continuous: bool) -> Self {
        self.continuous = continuous;
        self
    }

    pub fn indicator(domain: BoxDomain) -> Self {
        let d = domain.clone();
        Kernel {
            dim: domain.dim(),
            eval: Arc::new(move |x| if d.contains(x) { 1.0 } else { 0.0 }),
            support: Some(domain.clone()),
            decay: None,
            shape: Shape::BoxIndicator(domain),
            continuous: false,
        }
    }

    pub(crate) fn piecewise(cells: Arc<CellArray>) -> Self {
        let c = Arc::clone(&cells);
        let support = cells.bounding_box();
        Kernel {
            dim: cells.dim(),
            eval: Arc::new(move |x| c.eval_at(x)),
            support: Some(support),
            decay: None,
            shape: Shape::PiecewiseConstant(cells),
            continuous: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> Option<&BoxDomain> {
        self.support.as_ref()
    }

    pub fn decay(&self) -> Option<&Decay> {
        self.decay.as_ref()
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn is_continuous(&self) -> bool {
        self.continuous
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        if let Some(b) = &self.support {
            if !b.contains(x) {
                return 0.0;
            }
        }
        (self.eval)(x)
    }

    /// The kernel `x -> f(c x)`, `c > 0`.
    pub fn dilate(&self, c: f64) -> Result<Kernel> {
        if !(c > 0.0) {
            return Err(Error::invalid("dilation factor must be positive"));
        }
        let inner = Arc::clone(&self.eval);
        let support = self.support.as_ref().map(|b| b.scaled(c));
        let shape = match &self.shape {
            Shape::BoxIndicator(b) => Shape::BoxIndicator(b.scaled(c)),
            _ => Shape::General,
        };
        Ok(Kernel {
            dim: self.dim,
            eval: Arc::new(move |x: &[f64]| {
                let y: Vec<f64> = x.iter().map(|v| v * c).collect();
                inner(&y)
            }),
            support,
            decay: self.decay.map(|d| d.scaled(c)),
            shape,
            continuous: self.continuous,
        })
    }

    /// The kernel `x -> f(x - tau)`.
    pub fn translate(&self, tau: &[f64]) -> Result<Kernel> {
        if tau.len() != self.dim {
            return Err(Error::invalid("translation dimension mismatch"));
        }
        let inner = Arc::clone(&self.eval);
        let tau = tau.to_vec();
        let shift_box = |b: &BoxDomain| BoxDomain {
            lo: b.lo.iter().zip(&tau).map(|(a, t)| a + t).collect(),
            hi: b.hi.iter().zip(&tau).map(|(a, t)| a + t).collect(),
        };
        let support = self.support.as_ref().map(shift_box);
        // the certificate still holds with the radius pushed out and the
        // constant inflated to absorb |x - tau| >= |x| / 2 there
        let shift = tau.iter().fold(0.0_f64, |r, t| r.max(t.abs()));
        let decay = self.decay.map(|d| match d {
            Decay::Power { c, eta, radius } => Decay::Power {
                c: c * 2.0_f64.powf(eta),
                eta,
                radius: 2.0 * (radius + shift).max(1e-12),
            },
            Decay::Exponential { c, rate, radius } => Decay::Exponential {
                c: c * (rate * shift).exp(),
                rate,
                radius: radius + shift,
            },
        });
        let shape = match &self.shape {
            Shape::BoxIndicator(b) => Shape::BoxIndicator(shift_box(b)),
            _ => Shape::General,
        };
        Ok(Kernel {
            dim: self.dim,
            eval: Arc::new(move |x: &[f64]| {
                let y: Vec<f64> = x.iter().zip(&tau).map(|(v, t)| v - t).collect();
                inner(&y)
            }),
            support,
            decay,
            shape,
            continuous: self.continuous,
        })
    }

    /// Pointwise linear combination `sum coef_i * f_i`.
    pub fn combine(terms: Vec<(f64, Kernel)>) -> Result<Kernel> {
        let dim = terms
            .first()
            .ok_or_else(|| Error::invalid("empty combination"))?
            .1
            .dim;
        if terms.iter().any(|(_, k)| k.dim != dim) {
            return Err(Error::invalid("combination dimension mismatch"));
        }
        let continuous = terms.iter().all(|(_, k)| k.continuous);
        // support: union box if every term is bounded
        let support = if terms.iter().all(|(_, k)| k.support.is_some()) {
            let mut lo = terms[0].1.support.as_ref().expect("bounded").lo.clone();
            let mut hi = terms[0].1.support.as_ref().expect("bounded").hi.clone();
            for (_, k) in terms.iter().skip(1) {
                let b = k.support.as_ref().expect("bounded");
                for i in 0..dim {
                    lo[i] = lo[i].min(b.lo[i]);
                    hi[i] = hi[i].max(b.hi[i]);
                }
            }
            Some(BoxDomain { lo, hi })
        } else {
            None
        };
        // conservative union certificate: slowest eta, summed constants
        let decay = if support.is_some() {
            None
        } else {
            let mut acc: Option<Decay> = None;
            for (coef, k) in &terms {
                let d = match (k.decay, k.support.as_ref()) {
                    (Some(d), _) => d,
                    (None, Some(b)) => Decay::Power {
                        c: 0.0,
                        eta: 64.0,
                        radius: b.radius() + 1.0,
                    },
                    (None, None) => {
                        return Err(Error::invalid(
                            "unbounded combination term lacks decay certificate",
                        ))
                    }
                };
                let scaled = scale_decay_constant(d, coef.abs());
                acc = Some(match acc {
                    None => scaled,
                    Some(a) => merge_decay(a, scaled),
                });
            }
            acc
        };
        let parts: Vec<(f64, Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>, Option<BoxDomain>)> = terms
            .into_iter()
            .map(|(c, k)| (c, k.eval, k.support))
            .collect();
        Ok(Kernel {
            dim,
            eval: Arc::new(move |x: &[f64]| {
                parts
                    .iter()
                    .map(|(c, f, s)| {
                        if let Some(b) = s {
                            if !b.contains(x) {
                                return 0.0;
                            }
                        }
                        c * f(x)
                    })
                    .sum()
            }),
            support,
            decay,
            shape: Shape::General,
            continuous,
        })
    }

    /// Radius past which the certified tail of `int |f|^alpha` is at most
    /// `budget`. Errors when no certificate can deliver it.
    pub fn coverage_radius(&self, alpha: f64, budget: f64) -> Result<f64> {
        if let Some(b) = &self.support {
            return Ok(b.radius());
        }
        let decay = self
            .decay
            .ok_or_else(|| Error::Truncation("unbounded kernel without decay certificate".into()))?;
        let mut r = match decay {
            Decay::Power { radius, .. } | Decay::Exponential { radius, .. } => radius.max(1.0),
        };
        for _ in 0..400 {
            if decay.tail_alpha_mass(r, alpha, self.dim) <= budget {
                return Ok(r);
            }
            r *= 1.25;
        }
        Err(Error::Truncation(format!(
            "certified tail cannot reach budget {budget:.3e} (alpha = {alpha})"
        )))
    }

    /// `int |f|^alpha` together with the certified tail bound left out of the
    /// numeric part.
    ///
    /// Fast tails reach the absolute budget `tol`; slowly convergent power
    /// tails fall back to a window whose certified remainder is small
    /// relative to the head mass, and the leftover shows up in `tail_bound`.
    pub fn alpha_norm_mass(&self, alpha: f64, tol: f64) -> Result<NormMass> {
        let (lo, hi, tail) = match (&self.support, self.decay) {
            (Some(b), _) => (b.lo.clone(), b.hi.clone(), 0.0),
            (None, Some(decay)) => {
                let r = match self.coverage_radius(alpha, tol) {
                    Ok(r) => r,
                    Err(_) => {
                        let r0 = match decay {
                            Decay::Power { radius, .. } | Decay::Exponential { radius, .. } => {
                                radius.max(1.0)
                            }
                        };
                        let head = integrate_box(
                            &|x| self.eval(x).abs().powf(alpha),
                            &vec![-8.0 * r0; self.dim],
                            &vec![8.0 * r0; self.dim],
                            tol.max(1e-9),
                        )?;
                        let budget = (1e-3 * head).max(tol);
                        let mut r = 8.0 * r0;
                        while decay.tail_alpha_mass(r, alpha, self.dim) > budget && r < 1e12 {
                            r *= 1.6;
                        }
                        if !decay.tail_alpha_mass(r, alpha, self.dim).is_finite() {
                            return Err(Error::IntegrandRejected(format!(
                                "certified tail of |f|^{alpha} diverges"
                            )));
                        }
                        r
                    }
                };
                (
                    vec![-r; self.dim],
                    vec![r; self.dim],
                    decay.tail_alpha_mass(r, alpha, self.dim),
                )
            }
            (None, None) => {
                return Err(Error::IntegrandRejected(
                    "unbounded kernel without decay certificate".into(),
                ))
            }
        };
        let value = match &self.shape {
            Shape::PiecewiseConstant(cells) => cells.lp_mass(alpha),
            Shape::BoxIndicator(b) => b.volume(),
            Shape::General => integrate_box(&|x| self.eval(x).abs().powf(alpha), &lo, &hi, tol)?,
        };
        Ok(NormMass { value, tail_bound: tail })
    }

    /// `int |f|^alpha` up to the declared tolerance.
    pub fn alpha_norm(&self, alpha: f64, tol: f64) -> Result<f64> {
        Ok(self.alpha_norm_mass(alpha, tol)?.value.powf(1.0 / alpha))
    }

    /// Marginal parameters of the white-noise integral of this kernel with
    /// Lebesgue control measure and constant skewness `nu`:
    /// `sigma_f = (int |f|^alpha)^(1/alpha)` and
    /// `sigma_f^alpha nu_f = nu int sign(f) |f|^alpha`.
    pub fn stable_params(&self, alpha: f64, nu: f64, tol: f64) -> Result<(f64, f64)> {
        let mass = self.alpha_norm_mass(alpha, tol)?;
        let total = mass.value;
        if !total.is_finite() {
            return Err(Error::IntegrandRejected("alpha-norm diverges".into()));
        }
        if total == 0.0 {
            return Ok((0.0, nu));
        }
        let sigma = total.powf(1.0 / alpha);
        let nu_f = if nu == 0.0 {
            0.0
        } else {
            let signed = match &self.shape {
                Shape::BoxIndicator(_) => total,
                Shape::PiecewiseConstant(cells) => cells.signed_lp_mass(alpha),
                Shape::General => {
                    let (lo, hi) = self.norm_window(alpha, tol)?;
                    integrate_box(
                        &|x| {
                            let v = self.eval(x);
                            v.signum() * v.abs().powf(alpha)
                        },
                        &lo,
                        &hi,
                        tol,
                    )?
                }
            };
            (nu * signed / total).clamp(-1.0, 1.0)
        };
        Ok((sigma, nu_f))
    }

    fn norm_window(&self, alpha: f64, tol: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        if let Some(b) = &self.support {
            return Ok((b.lo.clone(), b.hi.clone()));
        }
        let r = self.coverage_radius(alpha, tol)?;
        Ok((vec![-r; self.dim], vec![r; self.dim]))
    }

    /// Spot-checks the decay certificate at 32 log-spaced radii along the
    /// axes and diagonals; returns false on a counterexample.
    pub fn decay_certificate_holds(&self) -> bool {
        let decay = match self.decay {
            Some(d) => d,
            None => return true,
        };
        let start = match decay {
            Decay::Power { radius, .. } | Decay::Exponential { radius, .. } => radius.max(1e-3),
        };
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        for axis in 0..self.dim {
            for sign in [-1.0, 1.0] {
                let mut e = vec![0.0; self.dim];
                e[axis] = sign;
                dirs.push(e);
            }
        }
        if self.dim > 1 {
            dirs.push(vec![1.0; self.dim]);
            dirs.push(vec![-1.0; self.dim]);
        }
        for j in 0..32 {
            let r = start * 1.6_f64.powi(j);
            if r > 1e12 {
                break;
            }
            let bound = decay.bound(r) * (1.0 + 1e-9) + 1e-300;
            for dir in &dirs {
                let x: Vec<f64> = dir.iter().map(|d| d * r).collect();
                if self.eval(&x).abs() > bound {
                    return false;
                }
            }
        }
        true
    }
}

fn scale_decay_constant(d: Decay, k: f64) -> Decay {
    match d {
        Decay::Power { c, eta, radius } => Decay::Power { c: c * k, eta, radius },
        Decay::Exponential { c, rate, radius } => Decay::Exponential { c: c * k, rate, radius },
    }
}

fn merge_decay(a: Decay, b: Decay) -> Decay {
    // exponential + exponential stays exponential; anything else collapses
    // to the slower power law
    match (a, b) {
        (
            Decay::Exponential { c: c1, rate: r1, radius: s1 },
            Decay::Exponential { c: c2, rate: r2, radius: s2 },
        ) => Decay::Exponential {
            c: c1 + c2,
            rate: r1.min(r2),
            radius: s1.max(s2),
        },
        (x, y) => {
            let (c1, e1, s1) = as_power(x);
            let (c2, e2, s2) = as_power(y);
            Decay::Power {
                c: c1 + c2,
                eta: e1.min(e2),
                radius: s1.max(s2).max(1.0),
            }
        }
    }
}

fn as_power(d: Decay) -> (f64, f64, f64) {
    match d {
        Decay::Power { c, eta, radius } => (c, eta, radius),
        // an exponential envelope is below c r^-64 once r is past the
        // crossing point; crude but only used for merged certificates
        Decay::Exponential { c, radius, .. } => (c.max(1.0), 64.0, radius.max(1.0)),
    }
}

#[derive(Clone, Copy, Debug)]
pub struct NormMass {
    /// Numeric value of `int |f|^alpha` over the covered window.
    pub value: f64,
    /// Certified bound on the mass left outside the window.
    pub tail_bound: f64,
}

/// Verdict of the integrand membership test.
#[derive(Clone, Debug, PartialEq)]
pub enum IntegrandClass {
    /// `int |f|^alpha < inf`; the admissible class for index >= 1.
    LAlpha,
    /// Certified decay `eta > d / alpha`; the admissible class for index < 1.
    DAlpha,
    Rejected(String),
}

impl IntegrandClass {
    pub fn is_admissible(&self) -> bool {
        !matches!(self, IntegrandClass::Rejected(_))
    }
}

/// Membership of `f` in the admissible integrand set for index `alpha`:
/// finiteness of the alpha-norm when `alpha >= 1`, plus a certified decay
/// exponent above `d / alpha` when `alpha < 1`.
pub fn check_integrand(f: &Kernel, alpha: f64) -> IntegrandClass {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return IntegrandClass::Rejected(format!("index {alpha} outside (0, 2]"));
    }
    if !f.decay_certificate_holds() {
        return IntegrandClass::Rejected("decay certificate falsified by sampling".into());
    }
    let d = f.dim() as f64;
    if alpha < 1.0 {
        let ok = match (f.support(), f.decay()) {
            (Some(_), _) => true,
            (None, Some(Decay::Power { eta, .. })) => *eta > d / alpha,
            (None, Some(Decay::Exponential { .. })) => true,
            (None, None) => false,
        };
        if !ok {
            return IntegrandClass::Rejected(format!(
                "index {alpha} < 1 requires certified decay eta > {}",
                d / alpha
            ));
        }
        match f.alpha_norm_mass(alpha, 1e-6) {
            Ok(_) => IntegrandClass::DAlpha,
            Err(e) => IntegrandClass::Rejected(e.to_string()),
        }
    } else {
        match f.alpha_norm_mass(alpha, 1e-6) {
            Ok(m) if m.value.is_finite() && m.tail_bound.is_finite() => IntegrandClass::LAlpha,
            Ok(_) => IntegrandClass::Rejected(format!("int |f|^{alpha} diverges")),
            Err(e) => IntegrandClass::Rejected(e.to_string()),
        }
    }
}

/// Adaptive integration over a box, peeling one axis at a time. Practical
/// for the low dimensions this crate works in.
pub fn integrate_box(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    lo: &[f64],
    hi: &[f64],
    tol: f64,
) -> Result<f64> {
    match lo.len() {
        0 => Err(Error::invalid("zero-dimensional box")),
        1 => quad::adaptive_geometric(|x| f(&[x]), lo[0], hi[0], tol, 1e-10),
        _ => {
            let (first_lo, rest_lo) = lo.split_first().expect("non-empty");
            let (first_hi, rest_hi) = hi.split_first().expect("non-empty");
            let inner_tol = tol / (first_hi - first_lo).max(1.0) * 0.5;
            quad::adaptive_geometric(
                |x| {
                    let g = |y: &[f64]| {
                        let mut point = Vec::with_capacity(lo.len());
                        point.push(x);
                        point.extend_from_slice(y);
                        f(&point)
                    };
                    integrate_box(&g, rest_lo, rest_hi, inner_tol).unwrap_or(f64::NAN)
                },
                *first_lo,
                *first_hi,
                tol,
                1e-9,
            )
        }
    }
}
