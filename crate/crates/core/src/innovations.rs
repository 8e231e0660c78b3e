//! Lattice-indexed i.i.d. innovations in the normal domain of attraction of
//! a stable law.
//!
//! Three generators are available: exact stable draws, a two-sided Pareto
//! law with prescribed tail weights, and (for index 2 only) Gaussians. All
//! are counter based: the value at lattice index `k` of replica `r` is a
//! pure function of `(seed, r, k)`, so evaluations are reproducible under
//! any evaluation order and windows may overlap freely.

use crate::error::{Error, Result};
use crate::rng::{domain, zigzag, Prf};
use crate::stable::{StableParams, TailSpec};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InnovationMode {
    ExactStable,
    ParetoTail,
    Gaussian,
}

/// Two-sided Pareto with exact tail weights.
///
/// Survival `P(X > x) = p x^-alpha` holds exactly for `x >= x0` where
/// `x0 = max(1, (p+q)^(1/alpha))` keeps the total tail mass at most one;
/// the core on `[-x0, x0]` is uniform. For `alpha > 1` the law is centered:
/// the core absorbs the shift when it carries mass, otherwise the whole
/// variable is translated (which perturbs the tails only at second order).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
struct ParetoLaw {
    alpha: f64,
    p: f64,
    q: f64,
    x0: f64,
    mass_left: f64,
    mass_right: f64,
    core_mass: f64,
    core_shift: f64,
    whole_shift: f64,
}

impl ParetoLaw {
    fn new(spec: &TailSpec) -> Self {
        let TailSpec { alpha, p, q } = *spec;
        let x0 = (p + q).powf(1.0 / alpha).max(1.0);
        let mass_right = p * x0.powf(-alpha);
        let mass_left = q * x0.powf(-alpha);
        let core_mass = 1.0 - mass_left - mass_right;
        let mut core_shift = 0.0;
        let mut whole_shift = 0.0;
        if alpha > 1.0 {
            let tail_mean = alpha / (alpha - 1.0) * (p - q) * x0.powf(1.0 - alpha);
            if core_mass > 1e-9 {
                core_shift = -tail_mean / core_mass;
            } else {
                whole_shift = tail_mean;
            }
        }
        ParetoLaw {
            alpha,
            p,
            q,
            x0,
            mass_left,
            mass_right,
            core_mass,
            core_shift,
            whole_shift,
        }
    }

    #[inline]
    fn inverse_cdf(&self, u: f64) -> f64 {
        let value = if u < self.mass_left {
            -(self.q / u).powf(1.0 / self.alpha)
        } else if u > 1.0 - self.mass_right {
            (self.p / (1.0 - u)).powf(1.0 / self.alpha)
        } else {
            let t = (u - self.mass_left) / self.core_mass;
            self.core_shift + self.x0 * (2.0 * t - 1.0)
        };
        value - self.whole_shift
    }
}

/// Seeded, lattice-addressable innovation field.
#[derive(Clone, Debug)]
pub struct InnovationSampler {
    mode: InnovationMode,
    params: StableParams,
    pareto: Option<ParetoLaw>,
    prf: Prf,
    seed: u64,
}

impl InnovationSampler {
    /// Exact stable innovations with the given marginal.
    pub fn exact_stable(params: StableParams, seed: u64) -> Self {
        InnovationSampler {
            mode: InnovationMode::ExactStable,
            params,
            pareto: None,
            prf: Prf::new(seed, domain::INNOVATION),
            seed,
        }
    }

    /// Gaussian innovations (mean 0, variance `2 sigma^2`); index 2 only.
    pub fn gaussian(params: StableParams, seed: u64) -> Result<Self> {
        if params.alpha() != 2.0 {
            return Err(Error::invalid(
                "gaussian innovations require alpha = 2",
            ));
        }
        Ok(InnovationSampler {
            mode: InnovationMode::Gaussian,
            params,
            pareto: None,
            prf: Prf::new(seed, domain::INNOVATION),
            seed,
        })
    }

    /// Two-sided Pareto innovations attracted to the law of `spec`.
    pub fn pareto_tail(spec: TailSpec, seed: u64) -> Result<Self> {
        let params = spec.to_params()?;
        Ok(InnovationSampler {
            mode: InnovationMode::ParetoTail,
            params,
            pareto: Some(ParetoLaw::new(&spec)),
            prf: Prf::new(seed, domain::INNOVATION),
            seed,
        })
    }

    pub fn mode(&self) -> InnovationMode {
        self.mode
    }

    /// The stable law the innovations are attracted to.
    pub fn attractor(&self) -> StableParams {
        self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Innovation at lattice index `k` of replica `replica`. Pure.
    pub fn xi(&self, replica: u64, k: &[i64]) -> f64 {
        debug_assert!(k.len() <= 6, "lattice dimension above 6 not supported");
        let mut words = [0_u64; 9];
        words[0] = replica;
        words[1] = k.len() as u64;
        for (slot, &c) in words[2..].iter_mut().zip(k) {
            *slot = zigzag(c);
        }
        let used = 2 + k.len();
        let mut unit = |draw: u64| {
            words[used] = draw;
            self.prf.unit(&words[..=used])
        };
        match self.mode {
            InnovationMode::ExactStable => {
                let (u1, u2) = (unit(0), unit(1));
                self.params.sample_from_uniforms(u1, u2)
            }
            InnovationMode::Gaussian => {
                let (u1, u2) = (unit(0), unit(1));
                let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                std::f64::consts::SQRT_2 * self.params.sigma() * z
            }
            InnovationMode::ParetoTail => {
                let u = unit(0);
                self.pareto.expect("pareto law present").inverse_cdf(u)
            }
        }
    }

    /// One draw from a sequential stream (for cloud marks).
    pub fn draw_stream<R: Rng>(&self, rng: &mut R) -> f64 {
        match self.mode {
            InnovationMode::ExactStable => {
                let u1: f64 = rng.gen();
                let u2: f64 = rng.gen();
                self.params
                    .sample_from_uniforms(u1.clamp(1e-16, 1.0 - 1e-16), u2.clamp(1e-16, 1.0 - 1e-16))
            }
            InnovationMode::Gaussian => {
                let u1: f64 = rng.gen::<f64>().clamp(1e-16, 1.0 - 1e-16);
                let u2: f64 = rng.gen();
                let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                std::f64::consts::SQRT_2 * self.params.sigma() * z
            }
            InnovationMode::ParetoTail => {
                let u: f64 = rng.gen::<f64>().clamp(1e-16, 1.0 - 1e-16);
                self.pareto.expect("pareto law present").inverse_cdf(u)
            }
        }
    }

    /// True when the marginal law is symmetric.
    pub fn is_symmetric(&self) -> bool {
        match self.mode {
            InnovationMode::Gaussian => true,
            InnovationMode::ExactStable => self.params.nu() == 0.0,
            InnovationMode::ParetoTail => {
                let law = self.pareto.expect("pareto law present");
                law.p == law.q
            }
        }
    }
}
