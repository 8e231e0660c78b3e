//! Poisson and binomial random-measure approximations of stable noise on a
//! general measured space.
//!
//! A cloud of marked points `(e_i, xi_i)` with intensity `lambda m(de) G(d
//! xi)` turns a kernel into the weighted sum `sigma^-1 lambda^(-1/alpha)
//! sum_i xi_i f(e_i)`. Marks and locations come from separate sub-streams of
//! the replica generator, matching the product form of the intensity.

use crate::error::{Error, Result};
use crate::innovations::InnovationSampler;
use crate::rng::{domain, replica_rng};
use crate::space::SpaceSpec;
use num_complex::Complex64;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

/// Realized marked point cloud.
#[derive(Clone, Debug)]
pub struct PointCloud {
    pub marks: Vec<(Vec<f64>, f64)>,
    pub lambda: f64,
    alpha: f64,
    sigma: f64,
}

impl PointCloud {
    /// `sigma^-1 lambda^(-1/alpha)`.
    pub fn normalization(&self) -> f64 {
        self.lambda.powf(-1.0 / self.alpha) / self.sigma
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }
}

/// Draws one Poisson cloud: the count is Poisson with mean `lambda m(E)`,
/// locations i.i.d. `m / m(E)`, marks i.i.d. from the innovation law and
/// independent of the locations.
pub fn sample_poisson_cloud(
    space: &SpaceSpec,
    lambda: f64,
    marks: &InnovationSampler,
    seed: u64,
    replica: u64,
) -> Result<PointCloud> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid("intensity must be non-negative"));
    }
    let mass = space.total_mass()?;
    if !mass.is_finite() {
        return Err(Error::invalid(
            "infinite-mass space needs a restriction window",
        ));
    }
    let mut count_rng = replica_rng(seed, domain::CLOUD_COUNT, replica);
    let count = if lambda * mass == 0.0 {
        0
    } else {
        Poisson::new(lambda * mass)
            .map_err(|e| Error::invalid(format!("bad intensity: {e}")))?
            .sample(&mut count_rng) as usize
    };
    let mut loc_rng = replica_rng(seed, domain::CLOUD_LOCATION, replica);
    let mut mark_rng = replica_rng(seed, domain::CLOUD_MARK, replica);
    let points: Vec<(Vec<f64>, f64)> = (0..count)
        .map(|_| {
            (
                space.sample(&mut loc_rng),
                marks.draw_stream(&mut mark_rng),
            )
        })
        .collect();
    Ok(PointCloud {
        marks: points,
        lambda,
        alpha: marks.attractor().alpha(),
        sigma: marks.attractor().sigma(),
    })
}

/// The shot-noise value `gamma_lambda sum_i xi_i f(e_i)` over one cloud.
pub fn shot_noise_eval<F>(cloud: &PointCloud, f: F) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    if cloud.is_empty() {
        return 0.0;
    }
    let norm = cloud.normalization();
    norm * cloud
        .marks
        .iter()
        .map(|(e, xi)| xi * f(e))
        .sum::<f64>()
}

/// One shot-noise replica: draws the cloud and integrates `f` in one pass.
pub fn shot_one<F>(
    space: &SpaceSpec,
    lambda: f64,
    marks: &InnovationSampler,
    f: F,
    seed: u64,
    replica: u64,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let alpha = marks.attractor().alpha();
    let sigma = marks.attractor().sigma();
    let norm = lambda.powf(-1.0 / alpha) / sigma;
    let mass = space.total_mass()?;
    let mut count_rng = replica_rng(seed, domain::CLOUD_COUNT, replica);
    let count = if lambda * mass == 0.0 {
        0
    } else {
        Poisson::new(lambda * mass)
            .map_err(|e| Error::invalid(format!("bad intensity: {e}")))?
            .sample(&mut count_rng) as usize
    };
    let mut loc_rng = replica_rng(seed, domain::CLOUD_LOCATION, replica);
    let mut mark_rng = replica_rng(seed, domain::CLOUD_MARK, replica);
    let mut acc = 0.0;
    for _ in 0..count {
        let e = space.sample(&mut loc_rng);
        let xi = marks.draw_stream(&mut mark_rng);
        acc += xi * f(&e);
    }
    Ok(norm * acc)
}

/// Replica batch of shot-noise values for one kernel.
pub fn shot_replicas<F>(
    space: &SpaceSpec,
    lambda: f64,
    marks: &InnovationSampler,
    f: F,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_shot_integrand(space, &f, marks.attractor().alpha())?;
    (0..n as u64)
        .into_par_iter()
        .map(|replica| shot_one(space, lambda, marks, &f, seed, replica))
        .collect()
}

/// The binomial variant: exactly `n_points` i.i.d. marked points on a
/// normalized space, scaled by `sigma^-1 n^(-1/alpha)`.
pub fn binomial_replicas<F>(
    space: &SpaceSpec,
    n_points: usize,
    marks: &InnovationSampler,
    f: F,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mass = space.total_mass()?;
    if (mass - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "binomial measure needs a normalized space, got mass {mass}"
        )));
    }
    check_shot_integrand(space, &f, marks.attractor().alpha())?;
    let alpha = marks.attractor().alpha();
    let sigma = marks.attractor().sigma();
    let norm = (n_points.max(1) as f64).powf(-1.0 / alpha) / sigma;
    Ok((0..n as u64)
        .into_par_iter()
        .map(|replica| {
            let mut loc_rng = replica_rng(seed, domain::CLOUD_LOCATION, replica);
            let mut mark_rng = replica_rng(seed, domain::CLOUD_MARK, replica);
            let mut acc = 0.0;
            for _ in 0..n_points {
                let e = space.sample(&mut loc_rng);
                let xi = marks.draw_stream(&mut mark_rng);
                acc += xi * f(&e);
            }
            norm * acc
        })
        .collect())
}

/// Admissibility of a shot-noise integrand: finiteness of `int |f|^alpha dm`
/// (the sufficient condition for the cloud integral to converge).
pub fn check_shot_integrand<F>(space: &SpaceSpec, f: F, alpha: f64) -> Result<()>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mass = space.integrate(|x| f(x).abs().powf(alpha), 1e-6);
    match mass {
        Ok(v) if v.is_finite() => Ok(()),
        Ok(_) => Err(Error::IntegrandRejected(
            "alpha-mass of the integrand is not finite".into(),
        )),
        Err(e) => Err(Error::IntegrandRejected(format!(
            "alpha-mass quadrature failed: {e}"
        ))),
    }
}

/// Analytic finite-intensity characteristic function of the shot noise:
/// `E exp(i theta mu[f]) = exp(lambda int (phi_G(theta gamma f(e)) - 1) dm)`.
///
/// `mark_char` must return `phi_G(u) - 1`; closed forms exist for the exact
/// generators, and a cached-draw average covers everything else.
pub fn predicted_char_fn<F, C>(
    space: &SpaceSpec,
    lambda: f64,
    f: F,
    mark_char: C,
    alpha: f64,
    sigma: f64,
    thetas: &[f64],
) -> Result<Vec<Complex64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
    C: Fn(f64) -> Complex64 + Sync,
{
    let gamma = lambda.powf(-1.0 / alpha) / sigma;
    thetas
        .iter()
        .map(|&theta| {
            let re = space.integrate(|e| mark_char(theta * gamma * f(e)).re, 1e-8)?;
            let im = space.integrate(|e| mark_char(theta * gamma * f(e)).im, 1e-8)?;
            Ok((Complex64::new(re, im) * lambda).exp())
        })
        .collect()
}

/// `phi_G(u) - 1` estimated from cached draws of an arbitrary mark law.
pub fn empirical_mark_char(draws: &[f64]) -> impl Fn(f64) -> Complex64 + '_ {
    move |u: f64| {
        let (mut re, mut im) = (0.0, 0.0);
        for &x in draws {
            let (s, c) = (u * x).sin_cos();
            re += c;
            im += s;
        }
        let n = draws.len() as f64;
        Complex64::new(re / n - 1.0, im / n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::THETA_GRID;
    use crate::stable::{StableParams, TailSpec};
    use crate::verify::{empirical_char_fn, ks_two_sample, ReplicaSet};
    use approx::assert_relative_eq;

    fn exact_marks(alpha: f64) -> InnovationSampler {
        InnovationSampler::exact_stable(StableParams::new(alpha, 1.0, 0.0).unwrap(), 0)
    }

    #[test]
    fn zero_intensity_gives_empty_cloud() {
        let space = SpaceSpec::unit_box(1);
        let cloud = sample_poisson_cloud(&space, 0.0, &exact_marks(1.5), 1, 0).unwrap();
        assert!(cloud.is_empty());
        assert_eq!(shot_noise_eval(&cloud, |_| 1.0), 0.0);
    }

    #[test]
    fn poisson_count_mean() {
        let space = SpaceSpec::unit_box(1);
        let marks = exact_marks(1.5);
        let reps = 10_000;
        let mean: f64 = (0..reps)
            .map(|r| {
                sample_poisson_cloud(&space, 100.0, &marks, 5, r)
                    .unwrap()
                    .len() as f64
            })
            .sum::<f64>()
            / reps as f64;
        assert!((mean - 100.0).abs() < 0.3, "mean count {mean}");
    }

    #[test]
    fn gaussian_marks_have_expected_second_moment() {
        let space = SpaceSpec::unit_box(1);
        let marks = exact_marks(2.0);
        let cloud = sample_poisson_cloud(&space, 50_000.0, &marks, 6, 0).unwrap();
        let var: f64 = cloud.marks.iter().map(|(_, xi)| xi * xi).sum::<f64>()
            / cloud.len() as f64;
        assert!((var - 2.0).abs() < 0.06, "mark variance {var}");
    }

    #[test]
    fn pathwise_linearity_over_one_cloud() {
        let space = SpaceSpec::unit_box(1);
        let cloud = sample_poisson_cloud(&space, 500.0, &exact_marks(1.5), 7, 3).unwrap();
        let f = |x: &[f64]| x[0];
        let g = |x: &[f64]| (3.0 * x[0]).cos();
        let combo = |x: &[f64]| 2.0 * x[0] - 0.5 * (3.0 * x[0]).cos();
        let lhs = shot_noise_eval(&cloud, combo);
        let rhs = 2.0 * shot_noise_eval(&cloud, f) - 0.5 * shot_noise_eval(&cloud, g);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }

    #[test]
    fn superposition_of_independent_clouds() {
        // counts of merged clouds at lambda1 + lambda2 match a single cloud:
        // chi-square on binned counts at the 1% level
        let space = SpaceSpec::unit_box(1);
        let marks = exact_marks(1.5);
        let reps = 10_000_u64;
        let (l1, l2) = (30.0, 20.0);
        let merged: Vec<usize> = (0..reps)
            .map(|r| {
                sample_poisson_cloud(&space, l1, &marks, 100, r).unwrap().len()
                    + sample_poisson_cloud(&space, l2, &marks, 200, r).unwrap().len()
            })
            .collect();
        // expected Poisson(50) bin probabilities
        let lambda = l1 + l2;
        let mut log_p = -lambda;
        let mut probs = Vec::new();
        let mut k = 0_usize;
        loop {
            probs.push(log_p.exp());
            k += 1;
            log_p += lambda.ln() - (k as f64).ln();
            if k > 120 {
                break;
            }
        }
        // bin tails so every expected count is >= 5
        let mut chi2 = 0.0;
        let mut acc_obs = 0.0;
        let mut acc_exp = 0.0;
        let mut dof = 0_i64;
        for (k, &p) in probs.iter().enumerate() {
            let obs = merged.iter().filter(|&&c| c == k).count() as f64;
            acc_obs += obs;
            acc_exp += p * reps as f64;
            if acc_exp >= 5.0 {
                chi2 += (acc_obs - acc_exp) * (acc_obs - acc_exp) / acc_exp;
                acc_obs = 0.0;
                acc_exp = 0.0;
                dof += 1;
            }
        }
        chi2 += if acc_exp > 0.0 {
            (acc_obs - acc_exp) * (acc_obs - acc_exp) / acc_exp
        } else {
            0.0
        };
        // 1% critical value for the realized dof via the normal approximation
        let dof = dof as f64;
        let crit = dof + 2.33 * (2.0 * dof).sqrt() + 3.0;
        assert!(chi2 < crit, "chi2 {chi2} at ~{dof} dof");
    }

    #[test]
    fn binomial_is_exactly_stable_for_flat_kernels() {
        // n^(-1/alpha) sum of stable marks is stable for every n
        let space = SpaceSpec::unit_box(1);
        let marks = exact_marks(1.5);
        let values = binomial_replicas(&space, 7, &marks, |_| 1.0, 100_000, 11).unwrap();
        let oracle = StableParams::new(1.5, 1.0, 0.0)
            .unwrap()
            .sample_with(&crate::rng::Prf::new(12, domain::ORACLE), 0, 100_000);
        let (stat, p) = ks_two_sample(&values, &oracle).unwrap();
        assert!(p > 0.01, "binomial law deviates: stat {stat}, p {p}");
    }

    #[test]
    fn binomial_requires_normalized_space() {
        let space = SpaceSpec::BoxSpace {
            lo: vec![0.0],
            hi: vec![2.0],
            density: None,
        };
        assert!(binomial_replicas(&space, 5, &exact_marks(1.5), |_| 1.0, 100, 1).is_err());
        let empty =
            binomial_replicas(&SpaceSpec::unit_box(1), 0, &exact_marks(1.5), |_| 1.0, 50, 1)
                .unwrap();
        assert!(empty.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn integrand_check_rejects_heavy_singularity() {
        let space = SpaceSpec::unit_box(1);
        // x^-0.9 on [0,1]: the 1.5-mass diverges
        let bad = |x: &[f64]| x[0].max(1e-300).powf(-0.9);
        assert!(check_shot_integrand(&space, bad, 1.5).is_err());
        assert!(check_shot_integrand(&space, |x: &[f64]| x[0], 1.5).is_ok());
    }

    #[test]
    fn finite_intensity_char_fn_identity() {
        // empirical char fn of mu_lambda[f] against the analytic compound
        // formula, exact-stable marks (closed-form phi_G - 1)
        let space = SpaceSpec::unit_box(1);
        let alpha = 1.5;
        let marks = exact_marks(alpha);
        let lambda = 10.0;
        let n = 100_000;
        let f = |x: &[f64]| 1.0 + 0.5 * x[0];
        let values = shot_replicas(&space, lambda, &marks, f, n, 31).unwrap();
        let set = ReplicaSet::bare(values).unwrap();
        let empirical = empirical_char_fn(&set, &THETA_GRID);
        let law = marks.attractor();
        let predicted = predicted_char_fn(
            &space,
            lambda,
            f,
            |u| law.char_fn(u) - Complex64::new(1.0, 0.0),
            alpha,
            1.0,
            &THETA_GRID,
        )
        .unwrap();
        for ((e, p), &theta) in empirical.iter().zip(&predicted).zip(&THETA_GRID) {
            let gap = (e - p).norm();
            assert!(
                gap < 3.0 / (n as f64).sqrt() + 1e-3,
                "theta {theta}: empirical {e} vs predicted {p}"
            );
        }
    }

    #[test]
    fn pareto_marks_drive_convergence_in_lambda() {
        // sup characteristic distance to the stable target decreases along
        // a geometric intensity schedule
        let space = SpaceSpec::unit_box(1);
        let spec = TailSpec::new(1.5, 0.5, 0.5).unwrap();
        let marks = InnovationSampler::pareto_tail(spec, 0).unwrap();
        let law = marks.attractor();
        let n = 30_000;
        let mut dists = Vec::new();
        for (i, &lambda) in [10.0, 100.0, 1000.0].iter().enumerate() {
            let values = shot_replicas(&space, lambda, &marks, |_| 1.0, n, 40 + i as u64).unwrap();
            let set = ReplicaSet::bare(values).unwrap();
            let d = crate::verify::char_distance(&set, &law, &THETA_GRID).unwrap();
            dists.push(d);
        }
        assert!(
            dists[0] > dists[1] && dists[1] > dists[2],
            "distances {dists:?}"
        );
    }
}
