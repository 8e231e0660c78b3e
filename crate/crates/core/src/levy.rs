//! Shot-noise simulators for stable Levy motion on the sphere and for the
//! Chentsov field on euclidean space.
//!
//! On the sphere, the field value at `m` integrates the noise over the
//! symmetric difference of the hemispheres around the origin pole and `m`;
//! on R^q it integrates over the hyperplanes separating the origin from `m`.
//! One cloud serves every requested point of a replica, so joint laws are
//! consistent by construction.
//!
//! Marks are standardized by their root mean square at index 2 (and by the
//! stable scale below 2), which pins the Gaussian limit to the classical
//! Brownian motion on the metric space: the variance of an increment equals
//! the distance between its endpoints.

use crate::error::{Error, Result};
use crate::innovations::InnovationSampler;
use crate::rng::{domain, replica_rng};
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;

/// A point on the unit sphere of R^(q+1).
#[derive(Clone, Debug, PartialEq)]
pub struct SpherePoint(Vec<f64>);

impl SpherePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::invalid("sphere points live in R^(q+1), q >= 1"));
        }
        let norm = coords.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "sphere point has norm {norm}, must be 1 within 1e-12"
            )));
        }
        Ok(SpherePoint(coords))
    }

    /// Normalizes an arbitrary non-zero vector onto the sphere.
    pub fn project(coords: Vec<f64>) -> Result<Self> {
        let norm = coords.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::invalid("cannot project the zero vector"));
        }
        Ok(SpherePoint(coords.into_iter().map(|v| v / norm).collect()))
    }

    /// The northern pole of S^q (last coordinate 1).
    pub fn pole(q: usize) -> Self {
        let mut v = vec![0.0; q + 1];
        v[q] = 1.0;
        SpherePoint(v)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim_ambient(&self) -> usize {
        self.0.len()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Geodesic distance on the sphere.
pub fn geodesic(a: &SpherePoint, b: &SpherePoint) -> f64 {
    dot(a.coords(), b.coords()).clamp(-1.0, 1.0).acos()
}

/// Hemisphere membership: `x` lies in the hemisphere centered at `m` when
/// `<x, m> >= 0` (the boundary counts as inside).
pub fn hemisphere_contains(m: &SpherePoint, x: &SpherePoint) -> bool {
    dot(m.coords(), x.coords()) >= 0.0
}

/// Indicator of the symmetric difference of the hemispheres around `o` and
/// `m`.
pub fn symdiff_indicator(o: &SpherePoint, m: &SpherePoint, s: &SpherePoint) -> f64 {
    if hemisphere_contains(o, s) != hemisphere_contains(m, s) {
        1.0
    } else {
        0.0
    }
}

/// A hyperplane `<x, s> = r` in R^q that misses the origin.
#[derive(Clone, Debug)]
pub struct HalfSpaceParam {
    s: Vec<f64>,
    r: f64,
}

impl HalfSpaceParam {
    pub fn new(s: Vec<f64>, r: f64) -> Result<Self> {
        let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("hyperplane normal must be a unit vector"));
        }
        if !(r > 0.0) {
            return Err(Error::invalid("hyperplane offset must be positive"));
        }
        Ok(HalfSpaceParam { s, r })
    }

    pub fn normal(&self) -> &[f64] {
        &self.s
    }

    pub fn offset(&self) -> f64 {
        self.r
    }
}

/// Indicator that the hyperplane separates the origin from `m`:
/// `0 < r < <s, m>`.
pub fn chentsov_indicator(m: &[f64], h: &HalfSpaceParam) -> f64 {
    if h.r > 0.0 && h.r < dot(&h.s, m) {
        1.0
    } else {
        0.0
    }
}

/// Standardization scale for the marks: root mean square at index 2, the
/// stable scale otherwise. Keeps the Gaussian limit at variance = distance.
fn mark_scale(marks: &InnovationSampler) -> f64 {
    let law = marks.attractor();
    if law.alpha() == 2.0 {
        law.sigma() * std::f64::consts::SQRT_2
    } else {
        law.sigma()
    }
}

fn require_symmetric(marks: &InnovationSampler) -> Result<()> {
    if !marks.is_symmetric() {
        return Err(Error::invalid(
            "Levy motion requires a symmetric mark law",
        ));
    }
    Ok(())
}

/// Replica values of the spherical Levy field at each requested point.
///
/// Per replica: a Poisson(lambda) number of uniform sphere points with
/// i.i.d. marks; the field at `m` is `sqrt(pi) scale^-1 lambda^(-1/alpha)
/// sum_i xi_i 1[s_i in hemisphere symdiff]`. Rows are replicas, columns
/// follow `points`.
pub fn sphere_levy_replicas(
    q: usize,
    points: &[SpherePoint],
    lambda: f64,
    marks: &InnovationSampler,
    n: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if q < 1 {
        return Err(Error::invalid("sphere dimension q must be >= 1"));
    }
    if !(lambda > 0.0) {
        return Err(Error::invalid("intensity must be positive"));
    }
    require_symmetric(marks)?;
    for p in points {
        if p.dim_ambient() != q + 1 {
            return Err(Error::invalid("point dimension does not match the sphere"));
        }
    }
    let origin = SpherePoint::pole(q);
    let alpha = marks.attractor().alpha();
    let norm = std::f64::consts::PI.sqrt() * lambda.powf(-1.0 / alpha) / mark_scale(marks);
    let poisson =
        Poisson::new(lambda).map_err(|e| Error::invalid(format!("bad intensity: {e}")))?;
    // precompute which side of each reference hemisphere the pole test needs
    Ok((0..n as u64)
        .into_par_iter()
        .map(|replica| {
            let mut count_rng = replica_rng(seed, domain::CLOUD_COUNT, replica);
            let count = poisson.sample(&mut count_rng) as usize;
            let mut loc_rng = replica_rng(seed, domain::CLOUD_LOCATION, replica);
            let mut mark_rng = replica_rng(seed, domain::CLOUD_MARK, replica);
            let mut acc = vec![0.0; points.len()];
            let mut s = vec![0.0; q + 1];
            for _ in 0..count {
                sample_unit_vector(&mut loc_rng, &mut s);
                let xi = marks.draw_stream(&mut mark_rng);
                let in_origin = dot(&s, origin.coords()) >= 0.0;
                for (j, m) in points.iter().enumerate() {
                    let in_m = dot(&s, m.coords()) >= 0.0;
                    if in_origin != in_m {
                        acc[j] += xi;
                    }
                }
            }
            acc.iter_mut().for_each(|v| *v *= norm);
            acc
        })
        .collect())
}

/// Replica values of the Chentsov field at each requested point of R^q.
///
/// The cloud lives on directions times radii `(0, max |m|]`; hyperplanes
/// beyond that radius separate nothing in the requested set.
pub fn chentsov_levy_replicas(
    q: usize,
    points: &[Vec<f64>],
    lambda: f64,
    marks: &InnovationSampler,
    n: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if q < 1 {
        return Err(Error::invalid("ambient dimension q must be >= 1"));
    }
    if !(lambda > 0.0) {
        return Err(Error::invalid("intensity must be positive"));
    }
    require_symmetric(marks)?;
    let mut r_max = 0.0_f64;
    for m in points {
        if m.len() != q {
            return Err(Error::invalid("point dimension does not match the space"));
        }
        let norm = m.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(Error::invalid("points must be bounded"));
        }
        r_max = r_max.max(norm);
    }
    if r_max == 0.0 {
        return Ok(vec![vec![0.0; points.len()]; n]);
    }
    let alpha = marks.attractor().alpha();
    let norm_const = lambda.powf(-1.0 / alpha) / mark_scale(marks);
    let poisson = Poisson::new(lambda * r_max)
        .map_err(|e| Error::invalid(format!("bad intensity: {e}")))?;
    Ok((0..n as u64)
        .into_par_iter()
        .map(|replica| {
            let mut count_rng = replica_rng(seed, domain::CLOUD_COUNT, replica);
            let count = poisson.sample(&mut count_rng) as usize;
            let mut loc_rng = replica_rng(seed, domain::CLOUD_LOCATION, replica);
            let mut mark_rng = replica_rng(seed, domain::CLOUD_MARK, replica);
            let mut acc = vec![0.0; points.len()];
            let mut s = vec![0.0; q];
            for _ in 0..count {
                sample_unit_vector(&mut loc_rng, &mut s);
                let r = r_max * loc_rng.gen::<f64>();
                let xi = marks.draw_stream(&mut mark_rng);
                for (j, m) in points.iter().enumerate() {
                    if r > 0.0 && r < dot(&s, m) {
                        acc[j] += xi;
                    }
                }
            }
            acc.iter_mut().for_each(|v| *v *= norm_const);
            acc
        })
        .collect())
}

fn sample_unit_vector<R: Rng>(rng: &mut R, out: &mut [f64]) {
    loop {
        let mut norm_sq = 0.0;
        for slot in out.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *slot = z;
            norm_sq += z * z;
        }
        if norm_sq > 1e-24 {
            let inv = norm_sq.sqrt().recip();
            out.iter_mut().for_each(|v| *v *= inv);
            return;
        }
    }
}
