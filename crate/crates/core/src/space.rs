//! Measured spaces `(E, m)` that can both sample and integrate.
//!
//! Three geometries cover the generators in this crate: weighted boxes in
//! R^d, unit spheres with the normalized uniform measure, and the product
//! of a direction sphere with a radius interval (the hyperplane space of
//! the Chentsov construction). Each exposes an exact-in-law sampler and a
//! quadrature for `int g dm`; an invariant test keeps the two consistent.

use crate::error::{Error, Result};
use crate::quad;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::TAU;
use std::sync::Arc;

#[derive(Clone)]
pub enum SpaceSpec {
    /// Box `[lo, hi)` with an optional density against Lebesgue measure;
    /// rejection sampling needs a sup bound on the density.
    BoxSpace {
        lo: Vec<f64>,
        hi: Vec<f64>,
        density: Option<(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>, f64)>,
    },
    /// Unit sphere in R^(q+1) with the normalized uniform measure.
    Sphere { q: usize },
    /// Directions in R^q times a radius interval `(0, r_max]`, carrying the
    /// product of the normalized uniform direction measure and Lebesgue
    /// measure in the radius.
    DirectionsTimesRadius { q: usize, r_max: f64 },
}

impl SpaceSpec {
    pub fn unit_box(dim: usize) -> Self {
        SpaceSpec::BoxSpace {
            lo: vec![0.0; dim],
            hi: vec![1.0; dim],
            density: None,
        }
    }

    /// Dimension of the points handed to kernels and samplers.
    pub fn point_dim(&self) -> usize {
        match self {
            SpaceSpec::BoxSpace { lo, .. } => lo.len(),
            SpaceSpec::Sphere { q } => q + 1,
            SpaceSpec::DirectionsTimesRadius { q, .. } => q + 1, // direction + radius
        }
    }

    /// Total mass `m(E)`; finite for every supported geometry.
    pub fn total_mass(&self) -> Result<f64> {
        match self {
            SpaceSpec::BoxSpace { lo, hi, density } => match density {
                None => Ok(lo.iter().zip(hi).map(|(a, b)| b - a).product()),
                Some((w, _)) => {
                    let wf = Arc::clone(w);
                    crate::kernel::integrate_box(&move |x: &[f64]| wf(x), lo, hi, 1e-9)
                }
            },
            SpaceSpec::Sphere { .. } => Ok(1.0),
            SpaceSpec::DirectionsTimesRadius { r_max, .. } => {
                if !(r_max.is_finite() && *r_max > 0.0) {
                    return Err(Error::invalid(
                        "radius window must be finite and positive",
                    ));
                }
                Ok(*r_max)
            }
        }
    }

    /// One draw from `m / m(E)`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            SpaceSpec::BoxSpace { lo, hi, density } => loop {
                let x: Vec<f64> = lo
                    .iter()
                    .zip(hi)
                    .map(|(a, b)| a + (b - a) * rng.gen::<f64>())
                    .collect();
                match density {
                    None => return x,
                    Some((w, sup)) => {
                        if rng.gen::<f64>() * sup <= w(&x) {
                            return x;
                        }
                    }
                }
            },
            SpaceSpec::Sphere { q } => sample_sphere(*q, rng),
            SpaceSpec::DirectionsTimesRadius { q, r_max } => {
                // direction on the unit sphere of R^q, radius uniform
                let mut p = sample_sphere(q - 1, rng);
                p.push(r_max * rng.gen::<f64>());
                p
            }
        }
    }

    /// `int g dm` by quadrature.
    pub fn integrate<G>(&self, g: G, tol: f64) -> Result<f64>
    where
        G: Fn(&[f64]) -> f64 + Sync,
    {
        match self {
            SpaceSpec::BoxSpace { lo, hi, density } => match density {
                None => crate::kernel::integrate_box(&g, lo, hi, tol),
                Some((w, _)) => {
                    let wf = Arc::clone(w);
                    crate::kernel::integrate_box(&move |x: &[f64]| g(x) * wf(x), lo, hi, tol)
                }
            },
            SpaceSpec::Sphere { q } => integrate_sphere(*q, &g, tol),
            SpaceSpec::DirectionsTimesRadius { q, r_max } => {
                let r = *r_max;
                let inner_tol = tol / r.max(1.0);
                integrate_sphere(q - 1, &|s: &[f64]| {
                    let mut point = s.to_vec();
                    point.push(0.0);
                    let idx = point.len() - 1;
                    quad::adaptive(
                        |rad| {
                            let mut p = point.clone();
                            p[idx] = rad;
                            g(&p)
                        },
                        0.0,
                        r,
                        inner_tol,
                        1e-9,
                    )
                    .unwrap_or(f64::NAN)
                }, tol)
            }
        }
    }
}

fn sample_sphere<R: Rng>(q: usize, rng: &mut R) -> Vec<f64> {
    // normalized isotropic gaussian: exact and dimension-generic
    loop {
        let v: Vec<f64> = (0..=q).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Integral against the normalized uniform measure on the sphere S^q.
fn integrate_sphere<G>(q: usize, g: &G, tol: f64) -> Result<f64>
where
    G: Fn(&[f64]) -> f64 + ?Sized + Sync,
{
    match q {
        0 => Ok(0.5 * (g(&[1.0]) + g(&[-1.0]))),
        1 => {
            let v = quad::adaptive(
                |th| g(&[th.cos(), th.sin()]),
                0.0,
                TAU,
                tol * TAU,
                1e-9,
            )?;
            Ok(v / TAU)
        }
        2 => {
            // polar angle integral with analytic azimuth layer
            let outer = quad::adaptive(
                |theta| {
                    let st = theta.sin();
                    let ct = theta.cos();
                    let inner = quad::adaptive(
                        |phi| g(&[st * phi.cos(), st * phi.sin(), ct]),
                        0.0,
                        TAU,
                        tol,
                        1e-8,
                    )
                    .unwrap_or(f64::NAN);
                    inner * st
                },
                0.0,
                std::f64::consts::PI,
                tol,
                1e-8,
            )?;
            Ok(outer / (2.0 * TAU))
        }
        _ => Err(Error::Unsupported(format!(
            "sphere quadrature implemented for q <= 2, got q = {q}"
        ))),
    }
}

/// Marginal parameters of the white-noise integral over a general measured
/// space: `sigma^alpha = int |g|^alpha dm`, `sigma^alpha nu_g = nu int
/// sign(g) |g|^alpha dm` with constant skewness `nu`.
pub fn integral_params<G>(
    space: &SpaceSpec,
    g: G,
    alpha: f64,
    nu: f64,
    tol: f64,
) -> Result<(f64, f64)>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::invalid(format!("index {alpha} outside (0, 2]")));
    }
    let total = space.integrate(|x| g(x).abs().powf(alpha), tol)?;
    if !total.is_finite() {
        return Err(Error::IntegrandRejected("alpha-mass diverges".into()));
    }
    if total == 0.0 {
        return Ok((0.0, nu));
    }
    let sigma = total.powf(1.0 / alpha);
    let nu_f = if nu == 0.0 {
        0.0
    } else {
        let signed = space.integrate(
            |x| {
                let v = g(x);
                v.signum() * v.abs().powf(alpha)
            },
            tol,
        )?;
        (nu * signed / total).clamp(-1.0, 1.0)
    };
    Ok((sigma, nu_f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{domain, replica_rng};
    use approx::assert_relative_eq;

    fn mc_mean<G: Fn(&[f64]) -> f64>(space: &SpaceSpec, g: G, n: usize, seed: u64) -> (f64, f64) {
        let mut rng = replica_rng(seed, domain::GENERIC, 0);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let v = g(&space.sample(&mut rng));
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        (mean, (var / n as f64).sqrt())
    }

    #[test]
    fn sampler_and_quadrature_agree_on_box() {
        let space = SpaceSpec::unit_box(2);
        let g = |x: &[f64]| (x[0] * 3.0).sin() + x[1] * x[1];
        let exact = space.integrate(g, 1e-10).unwrap();
        let (mc, se) = mc_mean(&space, g, 200_000, 1);
        assert!((mc - exact).abs() < 3.0 * se + 1e-4, "{mc} vs {exact}");
    }

    #[test]
    fn sampler_and_quadrature_agree_on_sphere() {
        for q in [1, 2] {
            let space = SpaceSpec::Sphere { q };
            let g = |x: &[f64]| x[0] * x[0] + 0.3 * x[q];
            let exact = space.integrate(g, 1e-9).unwrap();
            let (mc, se) = mc_mean(&space, g, 200_000, 2);
            assert!(
                (mc - exact).abs() < 3.0 * se + 1e-4,
                "q = {q}: {mc} vs {exact}"
            );
            // second moment of one coordinate on S^q is 1/(q+1)
            let coord = space.integrate(|x: &[f64]| x[0] * x[0], 1e-9).unwrap();
            assert_relative_eq!(coord, 1.0 / (q as f64 + 1.0), max_relative = 1e-6);
        }
    }

    #[test]
    fn sampler_and_quadrature_agree_on_hyperplane_space() {
        let space = SpaceSpec::DirectionsTimesRadius { q: 2, r_max: 2.0 };
        assert_eq!(space.total_mass().unwrap(), 2.0);
        let g = |x: &[f64]| x[0].abs() + x[2]; // direction coord + radius
        let exact = space.integrate(g, 1e-8).unwrap();
        let (mc, se) = mc_mean(&space, g, 200_000, 3);
        // the monte carlo mean estimates int g dm / m(E)
        assert!(
            (mc - exact / 2.0).abs() < 3.0 * se + 1e-4,
            "{mc} vs {}",
            exact / 2.0
        );
    }

    #[test]
    fn weighted_box_density() {
        let space = SpaceSpec::BoxSpace {
            lo: vec![0.0],
            hi: vec![1.0],
            density: Some((Arc::new(|x: &[f64]| 2.0 * x[0]), 2.0)),
        };
        assert_relative_eq!(space.total_mass().unwrap(), 1.0, max_relative = 1e-8);
        let (mc, se) = mc_mean(&space, |x| x[0], 200_000, 4);
        // E[X] under density 2x is 2/3
        assert!((mc - 2.0 / 3.0).abs() < 3.0 * se + 1e-4);
    }

    #[test]
    fn indicator_params_on_unit_interval() {
        let space = SpaceSpec::unit_box(1);
        let (sigma, nu) = integral_params(&space, |_| 1.0, 1.5, 0.7, 1e-9).unwrap();
        assert_relative_eq!(sigma, 1.0, epsilon = 1e-10);
        assert_relative_eq!(nu, 0.7, epsilon = 1e-10);
    }
}
