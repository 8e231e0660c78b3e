//! Lattice filters: coefficient windows with declared tail behavior.
//!
//! A filter drives the spatially dependent innovations `xi-hat = xi * c`.
//! Two tail regimes matter: absolutely summable coefficients (the spatial
//! dependence washes out in the limit, leaving a white noise scaled by
//! `sum c_k`) and regularly varying coefficients of order `-beta` (the
//! dependence survives, producing a fractional limit with the matching
//! homogeneous profile).

use crate::error::{Error, Result};
use crate::fractional::HomogeneousProfile;
use std::sync::Arc;

#[derive(Clone)]
pub enum FilterRegime {
    /// `sum |c_k| < inf`; carries the computed total `C = sum c_k`.
    Summable { total: f64 },
    /// `t^beta c_[t x] -> p(x)` uniformly on the unit sphere.
    RegularlyVarying { beta: f64, profile: HomogeneousProfile },
}

/// Coefficients on a finite window plus an optional analytic tail form.
#[derive(Clone)]
pub struct FilterSpec {
    dim: usize,
    lo: Vec<i64>,
    hi: Vec<i64>, // exclusive
    coeffs: Vec<f64>,
    tail: Option<Arc<dyn Fn(&[i64]) -> f64 + Send + Sync>>,
    regime: FilterRegime,
}

impl FilterSpec {
    /// Summable filter from an explicit window (everything outside is zero).
    pub fn summable(dim: usize, lo: Vec<i64>, hi: Vec<i64>, coeffs: Vec<f64>) -> Result<Self> {
        validate_window(dim, &lo, &hi, &coeffs)?;
        let total = coeffs.iter().sum();
        Ok(FilterSpec {
            dim,
            lo,
            hi,
            coeffs,
            tail: None,
            regime: FilterRegime::Summable { total },
        })
    }

    /// Summable filter with an analytic coefficient form, materialized on
    /// `[-radius, radius]^d`. The declared tail must keep shrinking: shell
    /// sums are probed geometrically.
    pub fn summable_analytic<F>(dim: usize, radius: i64, form: F) -> Result<Self>
    where
        F: Fn(&[i64]) -> f64 + Send + Sync + 'static,
    {
        let (lo, hi, coeffs) = materialize(dim, radius, &form);
        let inside: f64 = coeffs.iter().sum();
        let mut spec = FilterSpec {
            dim,
            lo,
            hi,
            coeffs,
            tail: Some(Arc::new(form)),
            regime: FilterRegime::Summable { total: inside },
        };
        // probe the declared tail: shell sums past the window must decay
        let mut shells = Vec::new();
        for shell in 0..6 {
            let r = radius + 1 + shell * (radius.max(4) / 2 + 1);
            shells.push(spec.shell_abs_sum(r));
        }
        let decaying = shells.windows(2).all(|w| w[1] <= w[0] * 0.95 + 1e-300);
        if !decaying {
            return Err(Error::invalid(
                "declared tail of a summable filter does not decay",
            ));
        }
        let tail_estimate: f64 = shells.iter().sum::<f64>() * 4.0;
        if tail_estimate > 1e-3 * inside.abs().max(1e-12) {
            return Err(Error::Truncation(format!(
                "filter window drops too much coefficient mass ({tail_estimate:.3e})"
            )));
        }
        spec.regime = FilterRegime::Summable { total: inside };
        Ok(spec)
    }

    /// Regularly varying filter `c_k = |k|^-beta p(k/|k|)` (for `k != 0`)
    /// materialized out to `radius`, with the analytic form as tail.
    pub fn regularly_varying(
        dim: usize,
        radius: i64,
        center_coeff: f64,
        profile: HomogeneousProfile,
    ) -> Result<Self> {
        if profile.dim() != dim {
            return Err(Error::invalid("profile dimension mismatch"));
        }
        let beta = profile.order();
        let p = profile.clone();
        let form = move |k: &[i64]| -> f64 {
            if k.iter().all(|&c| c == 0) {
                center_coeff
            } else {
                let x: Vec<f64> = k.iter().map(|&c| c as f64).collect();
                p.eval(&x)
            }
        };
        let (lo, hi, coeffs) = materialize(dim, radius, &form);
        let spec = FilterSpec {
            dim,
            lo,
            hi,
            coeffs,
            tail: Some(Arc::new(form)),
            regime: FilterRegime::RegularlyVarying { beta, profile },
        };
        spec.check_regular_variation()?;
        Ok(spec)
    }

    /// Custom regularly-varying filter whose coefficients only approach the
    /// profile asymptotically.
    pub fn regularly_varying_with<F>(
        dim: usize,
        radius: i64,
        form: F,
        profile: HomogeneousProfile,
    ) -> Result<Self>
    where
        F: Fn(&[i64]) -> f64 + Send + Sync + 'static,
    {
        let (lo, hi, coeffs) = materialize(dim, radius, &form);
        let beta = profile.order();
        let spec = FilterSpec {
            dim,
            lo,
            hi,
            coeffs,
            tail: Some(Arc::new(form)),
            regime: FilterRegime::RegularlyVarying { beta, profile },
        };
        spec.check_regular_variation()?;
        Ok(spec)
    }

    fn check_regular_variation(&self) -> Result<()> {
        let FilterRegime::RegularlyVarying { beta, profile } = &self.regime else {
            return Ok(());
        };
        let mut errs = Vec::new();
        for &t in &[10.0, 100.0, 1000.0] {
            errs.push(self.profile_gap(t, *beta, profile));
        }
        if !errs.windows(2).all(|w| w[1] <= w[0] + 1e-12) {
            return Err(Error::invalid(format!(
                "coefficients do not approach the profile: sup errors {errs:?}"
            )));
        }
        Ok(())
    }

    /// `sup_x |t^beta c_[t x] - p(x)|` over a direction mesh.
    pub fn profile_gap(&self, t: f64, beta: f64, profile: &HomogeneousProfile) -> f64 {
        directions(self.dim)
            .into_iter()
            .map(|x| {
                let k: Vec<i64> = x.iter().map(|&v| (t * v).floor() as i64).collect();
                if k.iter().all(|&c| c == 0) {
                    return 0.0;
                }
                (t.powf(beta) * self.coeff(&k) - profile.eval(&x)).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn regime(&self) -> &FilterRegime {
        &self.regime
    }

    /// `sum c_k` (summable regime only).
    pub fn total(&self) -> Option<f64> {
        match self.regime {
            FilterRegime::Summable { total } => Some(total),
            FilterRegime::RegularlyVarying { .. } => None,
        }
    }

    pub fn window(&self) -> (&[i64], &[i64]) {
        (&self.lo, &self.hi)
    }

    /// Coefficient at `k`: materialized window first, analytic tail outside.
    pub fn coeff(&self, k: &[i64]) -> f64 {
        let mut flat = 0_usize;
        for (axis, &ki) in k.iter().enumerate() {
            let off = ki - self.lo[axis];
            if off < 0 || ki >= self.hi[axis] {
                return self.tail.as_ref().map_or(0.0, |f| f(k));
            }
            flat = flat * (self.hi[axis] - self.lo[axis]) as usize + off as usize;
        }
        self.coeffs[flat]
    }

    /// Re-materializes the window out to a larger radius (tail form needed).
    pub fn widen(&self, radius: i64) -> Result<FilterSpec> {
        let form = self
            .tail
            .as_ref()
            .ok_or_else(|| Error::invalid("filter has no analytic tail to widen with"))?;
        let f = Arc::clone(form);
        let (lo, hi, coeffs) = materialize(self.dim, radius, &move |k: &[i64]| f(k));
        let regime = match &self.regime {
            FilterRegime::Summable { .. } => FilterRegime::Summable {
                total: coeffs.iter().sum(),
            },
            r => r.clone(),
        };
        Ok(FilterSpec {
            dim: self.dim,
            lo,
            hi,
            coeffs,
            tail: self.tail.clone(),
            regime,
        })
    }

    fn shell_abs_sum(&self, r: i64) -> f64 {
        // sup-norm shell |k| = r
        let form = match &self.tail {
            Some(f) => f,
            None => return 0.0,
        };
        match self.dim {
            1 => form(&[r]).abs() + form(&[-r]).abs(),
            _ => {
                // sample the shell along axes and diagonals
                let mut acc = 0.0;
                for axis in 0..self.dim {
                    for sign in [-1_i64, 1] {
                        let mut k = vec![0_i64; self.dim];
                        k[axis] = sign * r;
                        acc += form(&k).abs();
                    }
                }
                let diag = vec![r; self.dim];
                acc += form(&diag).abs() * 2.0_f64.powi(self.dim as i32);
                acc * (2.0 * r as f64).powi(self.dim as i32 - 1)
            }
        }
    }
}

fn coeffs_sum(c: &[f64]) -> f64 {
    c.iter().sum()
}

fn validate_window(dim: usize, lo: &[i64], hi: &[i64], coeffs: &[f64]) -> Result<()> {
    if lo.len() != dim || hi.len() != dim {
        return Err(Error::invalid("filter window dimension mismatch"));
    }
    let count: i64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
    if count <= 0 || count as usize != coeffs.len() {
        return Err(Error::invalid("filter window does not match coefficients"));
    }
    Ok(())
}

fn materialize<F: Fn(&[i64]) -> f64>(
    dim: usize,
    radius: i64,
    form: &F,
) -> (Vec<i64>, Vec<i64>, Vec<f64>) {
    let lo = vec![-radius; dim];
    let hi = vec![radius + 1; dim];
    let extent = (2 * radius + 1) as usize;
    let count = extent.pow(dim as u32);
    let mut coeffs = vec![0.0; count];
    for (flat, slot) in coeffs.iter_mut().enumerate() {
        let mut k = vec![0_i64; dim];
        let mut rest = flat;
        for axis in (0..dim).rev() {
            k[axis] = lo[axis] + (rest % extent) as i64;
            rest /= extent;
        }
        *slot = form(&k);
    }
    (lo, hi, coeffs)
}

/// Direction mesh on the unit sphere used by the regular-variation checks.
pub(crate) fn directions(dim: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..64)
            .map(|j| {
                let th = std::f64::consts::TAU * j as f64 / 64.0;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        d => {
            // deterministic pseudo-mesh for higher dimensions
            let prf = crate::rng::Prf::new(0xD1CE, crate::rng::domain::GENERIC);
            (0..128_u64)
                .map(|j| {
                    let mut v: Vec<f64> = (0..d as u64)
                        .map(|axis| {
                            let u1 = prf.unit(&[j, axis, 0]);
                            let u2 = prf.unit(&[j, axis, 1]);
                            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                        })
                        .collect();
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    v.iter_mut().for_each(|x| *x /= norm);
                    v
                })
                .collect()
        }
    }
}
