//! Lattice discretization operators.
//!
//! Three linear maps connect functions on R^d with cell sequences:
//! per-cell averaging (function -> cells), step extension (cells ->
//! piecewise-constant function), and their composition, the cell-average
//! projection. Averages of indicators and of piecewise-constant inputs are
//! computed through exact box-overlap volumes, so the algebraic operator
//! identities hold to rounding and not merely to quadrature tolerance.

use crate::error::{Error, Result};
use crate::filter::{FilterRegime, FilterSpec};
use crate::kernel::{BoxDomain, Kernel, Shape};
use crate::quad;
use std::sync::Arc;

/// Values attached to the cells `h(k + [0,1)^d)` of a finite lattice window.
#[derive(Clone, Debug)]
pub struct CellArray {
    h: f64,
    lo: Vec<i64>,
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl CellArray {
    pub fn new(h: f64, lo: Vec<i64>, shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::invalid("cell span must be positive"));
        }
        if lo.len() != shape.len() || shape.iter().product::<usize>() != values.len() {
            return Err(Error::invalid("cell array shape mismatch"));
        }
        Ok(CellArray { h, lo, shape, values })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn window_lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn window_shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn flat_index(&self, k: &[i64]) -> Option<usize> {
        let mut idx = 0_usize;
        for (axis, &ki) in k.iter().enumerate() {
            let off = ki - self.lo[axis];
            if off < 0 || off as usize >= self.shape[axis] {
                return None;
            }
            idx = idx * self.shape[axis] + off as usize;
        }
        Some(idx)
    }

    /// Value at cell `k`; zero outside the window.
    pub fn get(&self, k: &[i64]) -> f64 {
        self.flat_index(k).map_or(0.0, |i| self.values[i])
    }

    /// Decodes the flat index back into lattice coordinates.
    pub fn cell_at(&self, mut flat: usize) -> Vec<i64> {
        let mut k = vec![0_i64; self.dim()];
        for axis in (0..self.dim()).rev() {
            let extent = self.shape[axis];
            k[axis] = self.lo[axis] + (flat % extent) as i64;
            flat /= extent;
        }
        k
    }

    /// Step-function evaluation `u_[x/h]`.
    pub fn eval_at(&self, x: &[f64]) -> f64 {
        let mut idx = 0_usize;
        for (axis, &xi) in x.iter().enumerate() {
            let ki = (xi / self.h).floor() as i64;
            let off = ki - self.lo[axis];
            if off < 0 || off as usize >= self.shape[axis] {
                return 0.0;
            }
            idx = idx * self.shape[axis] + off as usize;
        }
        self.values[idx]
    }

    /// `sum |u_k|^alpha` (the sequence-space mass).
    pub fn ell_mass(&self, alpha: f64) -> f64 {
        self.values.iter().map(|v| v.abs().powf(alpha)).sum()
    }

    /// `int |phi_h u|^alpha = h^d sum |u_k|^alpha`, exact.
    pub fn lp_mass(&self, alpha: f64) -> f64 {
        self.h.powi(self.dim() as i32) * self.ell_mass(alpha)
    }

    /// Signed mass `h^d sum sign(u_k) |u_k|^alpha`.
    pub fn signed_lp_mass(&self, alpha: f64) -> f64 {
        self.h.powi(self.dim() as i32)
            * self
                .values
                .iter()
                .map(|v| v.signum() * v.abs().powf(alpha))
                .sum::<f64>()
    }

    pub fn bounding_box(&self) -> BoxDomain {
        let lo: Vec<f64> = self.lo.iter().map(|&k| k as f64 * self.h).collect();
        let hi: Vec<f64> = self
            .lo
            .iter()
            .zip(&self.shape)
            .map(|(&k, &n)| (k as f64 + n as f64) * self.h)
            .collect();
        BoxDomain { lo, hi }
    }

    /// Exact integral over the box `[lo, hi)` of the step extension.
    pub fn integral_over(&self, lo: &[f64], hi: &[f64]) -> f64 {
        let d = self.dim();
        let j_lo: Vec<i64> = lo.iter().map(|&a| (a / self.h).floor() as i64).collect();
        let j_hi: Vec<i64> = hi.iter().map(|&b| (b / self.h).ceil() as i64).collect();
        let mut total = 0.0;
        let mut j = j_lo.clone();
        'outer: loop {
            let value = self.get(&j);
            if value != 0.0 {
                let mut vol = 1.0;
                for axis in 0..d {
                    let a = (j[axis] as f64) * self.h;
                    let b = a + self.h;
                    vol *= (b.min(hi[axis]) - a.max(lo[axis])).max(0.0);
                }
                total += value * vol;
            }
            for axis in (0..d).rev() {
                j[axis] += 1;
                if j[axis] < j_hi[axis] {
                    continue 'outer;
                }
                j[axis] = j_lo[axis];
            }
            break;
        }
        total
    }
}

/// A lattice of span `h` with a finite active window of cells.
#[derive(Clone, Debug)]
pub struct GridSpec {
    h: f64,
    lo: Vec<i64>,
    hi: Vec<i64>, // exclusive
    quad_order: usize,
}

impl GridSpec {
    pub fn new(h: f64, lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::invalid("grid span must be positive"));
        }
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::invalid("grid window bounds mismatch"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Err(Error::invalid("grid window must be non-empty"));
        }
        Ok(GridSpec {
            h,
            lo,
            hi,
            quad_order: crate::config::CELL_QUAD_ORDER,
        })
    }

    /// Window that covers the kernel's support, or its certified radius at
    /// the given alpha-mass truncation budget.
    pub fn covering(f: &Kernel, h: f64, alpha: f64, trunc_budget: f64) -> Result<Self> {
        let d = f.dim();
        let (lo_x, hi_x) = match f.support() {
            Some(b) => (b.lo.clone(), b.hi.clone()),
            None => {
                let norm = f.alpha_norm_mass(alpha, 1e-6)?;
                let r = f.coverage_radius(alpha, trunc_budget * norm.value.max(1e-12))?;
                (vec![-r; d], vec![r; d])
            }
        };
        let lo: Vec<i64> = lo_x
            .iter()
            .map(|&a| (a / h).floor() as i64)
            .collect();
        let hi: Vec<i64> = hi_x
            .iter()
            .map(|&b| ((b / h).ceil() as i64).max((b / h).floor() as i64 + 1))
            .collect();
        GridSpec::new(h, lo, hi)
    }

    pub fn with_quad_order(mut self, order: usize) -> Self {
        self.quad_order = order;
        self
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn window_lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn window_hi(&self) -> &[i64] {
        &self.hi
    }

    pub fn cell_count(&self) -> usize {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a) as usize)
            .product()
    }

    /// Lattice-noise normalization `sigma^-1 h^((1/alpha - 1) d)`.
    pub fn noise_scale(&self, alpha: f64, sigma: f64) -> f64 {
        self.h.powf((1.0 / alpha - 1.0) * self.dim() as f64) / sigma
    }

    /// Point-mass normalization `sigma^-1 h^(d/alpha)`.
    pub fn dirac_scale(&self, alpha: f64, sigma: f64) -> f64 {
        self.h.powf(self.dim() as f64 / alpha) / sigma
    }
}

/// Per-cell averages: `(h^-d int_{h(k+[0,1)^d)} f)` over the grid window.
///
/// Indicators and piecewise-constant inputs use exact overlap volumes;
/// everything else gets a tensor-product Gauss rule of the grid's order.
pub fn cell_average(f: &Kernel, grid: &GridSpec) -> Result<CellArray> {
    if f.dim() != grid.dim() {
        return Err(Error::invalid("kernel and grid dimension mismatch"));
    }
    let d = grid.dim();
    let h = grid.h;
    let shape: Vec<usize> = grid
        .lo
        .iter()
        .zip(&grid.hi)
        .map(|(a, b)| (b - a) as usize)
        .collect();
    let count: usize = shape.iter().product();
    let inv_vol = h.powi(-(d as i32));

    // aligned fast path: averaging a step function on its own lattice reads
    // the cell values back verbatim
    if let Shape::PiecewiseConstant(cells) = f.shape() {
        if (cells.h() - h).abs() <= f64::EPSILON * h {
            let mut values = vec![0.0; count];
            for (flat, slot) in values.iter_mut().enumerate() {
                let k = decode(flat, &grid.lo, &shape);
                *slot = cells.get(&k);
            }
            return CellArray::new(h, grid.lo.clone(), shape, values);
        }
    }

    let support = f.support().cloned();
    let (nodes, weights) = quad::gauss_legendre(grid.quad_order);
    let mut values = vec![0.0; count];
    let mut cell_lo = vec![0.0; d];
    let mut cell_hi = vec![0.0; d];
    for (flat, slot) in values.iter_mut().enumerate() {
        let k = decode(flat, &grid.lo, &shape);
        for axis in 0..d {
            cell_lo[axis] = k[axis] as f64 * h;
            cell_hi[axis] = cell_lo[axis] + h;
        }
        if let Some(b) = &support {
            let clipped: f64 = b.overlap(&cell_lo, &cell_hi);
            if clipped == 0.0 {
                continue;
            }
        }
        *slot = match f.shape() {
            Shape::BoxIndicator(b) => b.overlap(&cell_lo, &cell_hi) * inv_vol,
            Shape::PiecewiseConstant(cells) => {
                cells.integral_over(&cell_lo, &cell_hi) * inv_vol
            }
            Shape::General => {
                tensor_mean(f, &cell_lo, h, &nodes, &weights)
            }
        };
    }
    CellArray::new(h, grid.lo.clone(), shape, values)
}

fn decode(mut flat: usize, lo: &[i64], shape: &[usize]) -> Vec<i64> {
    let mut k = vec![0_i64; lo.len()];
    for axis in (0..lo.len()).rev() {
        k[axis] = lo[axis] + (flat % shape[axis]) as i64;
        flat /= shape[axis];
    }
    k
}

/// Mean of `f` over the cell `[lo, lo + h)^d` by a tensor Gauss rule.
fn tensor_mean(f: &Kernel, cell_lo: &[f64], h: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    let d = cell_lo.len();
    let order = nodes.len();
    let mut point = vec![0.0; d];
    let mut idx = vec![0_usize; d];
    let mut acc = 0.0;
    loop {
        let mut w = 1.0;
        for axis in 0..d {
            let t = nodes[idx[axis]];
            point[axis] = cell_lo[axis] + 0.5 * h * (t + 1.0);
            w *= 0.5 * weights[idx[axis]];
        }
        acc += w * f.eval(&point);
        let mut axis = d;
        loop {
            if axis == 0 {
                return acc;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < order {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// Step extension: the piecewise-constant function `x -> u_[x/h]`.
pub fn step_kernel(u: CellArray) -> Kernel {
    Kernel::piecewise(Arc::new(u))
}

/// Cell-average projection: averaging followed by step extension. Idempotent.
pub fn project(f: &Kernel, grid: &GridSpec) -> Result<Kernel> {
    Ok(step_kernel(cell_average(f, grid)?))
}

/// Filtered projection: averages `f`, convolves the cell sequence with the
/// reversed filter, rescales by the regime's normalization ratio, and
/// extends back to a step function.
///
/// Regime 1 wants `f` alpha-integrable; regime 2 additionally integrable.
pub fn filtered_project(
    f: &Kernel,
    filter: &FilterSpec,
    grid: &GridSpec,
    alpha: f64,
) -> Result<Kernel> {
    Ok(step_kernel(filtered_cells(f, filter, grid, alpha)?))
}

/// The cell sequence of the filtered projection (before step extension).
pub fn filtered_cells(
    f: &Kernel,
    filter: &FilterSpec,
    grid: &GridSpec,
    alpha: f64,
) -> Result<CellArray> {
    if filter.dim() != grid.dim() {
        return Err(Error::invalid("filter and grid dimension mismatch"));
    }
    let averages = cell_average(f, grid)?;
    let conv = convolve_reversed(&averages, filter)?;
    let ratio = match filter.regime() {
        FilterRegime::Summable { .. } => 1.0,
        FilterRegime::RegularlyVarying { beta, .. } => {
            grid.h.powf(grid.dim() as f64 - beta)
        }
    };
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::invalid(format!(
            "filtered projection requires index in (1, 2], got {alpha}"
        )));
    }
    let values: Vec<f64> = conv.values.iter().map(|v| v * ratio).collect();
    CellArray::new(conv.h, conv.lo, conv.shape, values)
}

/// `(w * reversed-c)_l = sum_k w_k c_{k - l}` over the filter window.
fn convolve_reversed(w: &CellArray, filter: &FilterSpec) -> Result<CellArray> {
    let d = w.dim();
    let (f_lo, f_hi) = filter.window();
    // output l ranges where some k in w-window has k - l in filter window
    let out_lo: Vec<i64> = (0..d).map(|a| w.lo[a] - (f_hi[a] - 1)).collect();
    let out_hi: Vec<i64> = (0..d)
        .map(|a| w.lo[a] + w.shape[a] as i64 - f_lo[a])
        .collect();
    let out_shape: Vec<usize> = (0..d)
        .map(|a| (out_hi[a] - out_lo[a]) as usize)
        .collect();
    let count: usize = out_shape.iter().product();
    if count > 50_000_000 {
        return Err(Error::invalid("filter convolution window too large"));
    }
    let mut values = vec![0.0; count];
    for (flat, slot) in values.iter_mut().enumerate() {
        let l = decode(flat, &out_lo, &out_shape);
        let mut acc = 0.0;
        // iterate the (small) source window
        for (src_flat, &wk) in w.values.iter().enumerate() {
            if wk == 0.0 {
                continue;
            }
            let k = w.cell_at(src_flat);
            let offset: Vec<i64> = k.iter().zip(&l).map(|(ki, li)| ki - li).collect();
            acc += wk * filter.coeff(&offset);
        }
        *slot = acc;
    }
    CellArray::new(w.h, out_lo, out_shape, values)
}

/// `int |step - f|^alpha` with per-cell adaptive quadrature plus the mass of
/// `f` outside the step window (numeric over the coverage window, certified
/// tail beyond).
pub fn lalpha_distance(step: &CellArray, f: &Kernel, alpha: f64, tol: f64) -> Result<f64> {
    let d = step.dim();
    if f.dim() != d {
        return Err(Error::invalid("dimension mismatch"));
    }
    let cells = step.len();
    let per_cell = tol / (cells as f64 + 1.0);
    let mut inside = 0.0;
    let mut cell_lo = vec![0.0; d];
    let mut cell_hi = vec![0.0; d];
    for (flat, &u) in step.values.iter().enumerate() {
        let k = step.cell_at(flat);
        for axis in 0..d {
            cell_lo[axis] = k[axis] as f64 * step.h();
            cell_hi[axis] = cell_lo[axis] + step.h();
        }
        inside += crate::kernel::integrate_box(
            &|x| (u - f.eval(x)).abs().powf(alpha),
            &cell_lo,
            &cell_hi,
            per_cell,
        )?;
    }
    // outside the step window the step is zero: remaining mass of f itself
    let sb = step.bounding_box();
    let outside = match f.support() {
        Some(b) if sb.overlap(&b.lo, &b.hi) >= b.volume() * (1.0 - 1e-12) => 0.0,
        _ => {
            let window = f.coverage_radius(alpha, tol)?;
            let mut acc = 0.0;
            // integrate over the coverage box minus the step box, axis slabs
            acc += slab_mass(f, alpha, &sb, window, per_cell)?;
            acc
        }
    };
    Ok(inside + outside)
}

/// Mass of `|f|^alpha` over `[-r, r]^d` minus the inner box, by slab
/// decomposition along each axis.
fn slab_mass(f: &Kernel, alpha: f64, inner: &BoxDomain, r: f64, tol: f64) -> Result<f64> {
    let d = f.dim();
    let g = |x: &[f64]| f.eval(x).abs().powf(alpha);
    let mut total = 0.0;
    // peel: region splits into 2d slabs outside the inner box
    for axis in 0..d {
        for side in 0..2 {
            let mut lo = vec![-r; d];
            let mut hi = vec![r; d];
            // restrict previous axes to the inner box so slabs don't overlap
            for prev in 0..axis {
                lo[prev] = inner.lo[prev].max(-r);
                hi[prev] = inner.hi[prev].min(r);
            }
            if side == 0 {
                hi[axis] = inner.lo[axis].max(-r);
            } else {
                lo[axis] = inner.hi[axis].min(r);
            }
            if lo[axis] >= hi[axis] {
                continue;
            }
            total += crate::kernel::integrate_box(&g, &lo, &hi, tol)?;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Decay;
    use crate::rng::{domain, Prf};
    use approx::assert_relative_eq;

    fn grid1(h: f64, lo: i64, hi: i64) -> GridSpec {
        GridSpec::new(h, vec![lo], vec![hi]).unwrap()
    }

    #[test]
    fn averages_of_constant_and_linear() {
        let c = Kernel::from_fn(1, |_| 3.25, Some(BoxDomain::new(vec![-8.0], vec![8.0]).unwrap()), None);
        let avg = cell_average(&c, &grid1(0.5, -4, 4)).unwrap();
        assert!(avg.values().iter().all(|&v| (v - 3.25).abs() < 1e-14));

        // f(x) = x, h = 1/2: cells 0 and 1 average to 1/4 and 3/4
        let lin = Kernel::from_fn(1, |x| x[0], Some(BoxDomain::new(vec![0.0], vec![1.0]).unwrap()), None);
        let avg = cell_average(&lin, &grid1(0.5, 0, 2)).unwrap();
        assert_relative_eq!(avg.get(&[0]), 0.25, epsilon = 1e-14);
        assert_relative_eq!(avg.get(&[1]), 0.75, epsilon = 1e-14);
    }

    #[test]
    fn indicator_fractional_overlap_is_exact() {
        let f = Kernel::indicator(BoxDomain::new(vec![0.0], vec![0.75]).unwrap());
        let avg = cell_average(&f, &grid1(0.5, 0, 2)).unwrap();
        assert_eq!(avg.get(&[0]), 1.0);
        assert_eq!(avg.get(&[1]), 0.5);
    }

    #[test]
    fn average_then_extend_recovers_cells_exactly() {
        let prf = Prf::new(5, domain::GENERIC);
        let values: Vec<f64> = (0..40).map(|i| prf.unit(&[i]) * 4.0 - 2.0).collect();
        let u = CellArray::new(0.25, vec![-20], vec![40], values.clone()).unwrap();
        let back = cell_average(&step_kernel(u), &grid1(0.25, -20, 20)).unwrap();
        assert_eq!(back.values(), values.as_slice());
    }

    #[test]
    fn step_norm_identity_exact() {
        let prf = Prf::new(6, domain::GENERIC);
        let values: Vec<f64> = (0..64).map(|i| prf.unit(&[i]) * 2.0 - 1.0).collect();
        let u = CellArray::new(0.3, vec![-30], vec![64], values).unwrap();
        for &alpha in &[0.7, 1.0, 1.5, 2.0] {
            let lhs = u.lp_mass(alpha);
            let rhs = 0.3_f64 * u.ell_mass(alpha);
            assert!((lhs - rhs).abs() <= 1e-15 * rhs.abs());
        }
    }

    #[test]
    fn projection_is_idempotent() {
        let f = Kernel::from_fn(
            1,
            |x| (1.0 + x[0]).sin() * (-x[0] * x[0]).exp(),
            Some(BoxDomain::new(vec![-3.0], vec![3.0]).unwrap()),
            None,
        );
        let grid = grid1(0.25, -12, 12);
        let once = project(&f, &grid).unwrap();
        let twice = project(&once, &grid).unwrap();
        let (Shape::PiecewiseConstant(a), Shape::PiecewiseConstant(b)) = (once.shape(), twice.shape())
        else {
            panic!("projection must produce step kernels");
        };
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
        }
    }

    #[test]
    fn projection_fixes_step_functions() {
        let u = CellArray::new(0.5, vec![0], vec![2], vec![0.25, 0.75]).unwrap();
        let s = step_kernel(u);
        let p = project(&s, &grid1(0.5, 0, 2)).unwrap();
        for &x in &[0.1, 0.3, 0.6, 0.9] {
            assert_eq!(p.eval(&[x]), s.eval(&[x]));
        }
    }

    #[test]
    fn linear_example_step_values() {
        let lin = Kernel::from_fn(1, |x| x[0], Some(BoxDomain::new(vec![0.0], vec![1.0]).unwrap()), None);
        let p = project(&lin, &grid1(0.5, 0, 2)).unwrap();
        assert_relative_eq!(p.eval(&[0.2]), 0.25, epsilon = 1e-14);
        assert_relative_eq!(p.eval(&[0.7]), 0.75, epsilon = 1e-14);
    }

    #[test]
    fn averaging_contracts_sequence_norm_for_large_alpha() {
        // ||avg f||_ell^alpha <= h^(-d/alpha) ||f||_L^alpha for alpha >= 1,
        // on random polynomial-times-gaussian kernels
        let prf = Prf::new(77, domain::GENERIC);
        for case in 0..100_u64 {
            let a0 = prf.unit(&[case, 0]) * 2.0 - 1.0;
            let a1 = prf.unit(&[case, 1]) * 2.0 - 1.0;
            let a2 = prf.unit(&[case, 2]) * 2.0 - 1.0;
            let b = 0.5 + prf.unit(&[case, 3]);
            let alpha = 1.0 + prf.unit(&[case, 4]);
            let h = 0.1 + 0.4 * prf.unit(&[case, 5]);
            let f = Kernel::from_fn(
                1,
                move |x| (a0 + a1 * x[0] + a2 * x[0] * x[0]) * (-b * x[0] * x[0]).exp(),
                Some(BoxDomain::new(vec![-6.0], vec![6.0]).unwrap()),
                None,
            );
            let grid = GridSpec::covering(&f, h, alpha, 1e-6).unwrap();
            let avg = cell_average(&f, &grid).unwrap();
            let lhs = avg.ell_mass(alpha).powf(1.0 / alpha);
            let rhs = h.powf(-1.0 / alpha) * f.alpha_norm(alpha, 1e-9).unwrap();
            assert!(
                lhs <= rhs * (1.0 + 1e-7),
                "case {case}: {lhs} > {rhs} (alpha {alpha}, h {h})"
            );
        }
    }

    #[test]
    fn projection_converges_for_lipschitz_kernels() {
        let f = Kernel::from_fn(
            1,
            |x| (1.0 - x[0].abs()).max(0.0),
            Some(BoxDomain::new(vec![-1.0], vec![1.0]).unwrap()),
            None,
        );
        let alpha = 1.5;
        let mut last = f64::INFINITY;
        for &h in &[0.5, 0.25, 0.125, 0.0625] {
            let grid = GridSpec::covering(&f, h, alpha, 1e-9).unwrap();
            let avg = cell_average(&f, &grid).unwrap();
            let dist = lalpha_distance(&avg, &f, alpha, 1e-10).unwrap();
            assert!(dist < last, "distance must shrink along h halving");
            last = dist;
        }
        assert!(last < 5e-3);
    }

    #[test]
    fn small_index_projection_counterexample() {
        // f = k^delta on [k, k + k^-gamma]: alpha-integrable, yet the unit
        // projection leaves the sequence space: partial sums keep growing.
        let (alpha, delta, gamma) = (0.5, 1.0, 2.0);
        assert!(alpha * delta - gamma < -1.0); // f in L^alpha
        assert!(alpha * (delta - gamma) >= -1.0); // projection diverges
        let f_mass: f64 = (1..100_000)
            .map(|k| (k as f64).powf(alpha * delta - gamma))
            .sum();
        assert!(f_mass.is_finite() && f_mass < 3.0);
        let partial = |cells: i64| -> f64 {
            (1..cells)
                .map(|k| (k as f64).powf(delta - gamma).abs().powf(alpha))
                .sum()
        };
        let small = partial(100);
        let large = partial(10_000);
        assert!(
            large > small + 5.0,
            "projected mass must keep growing: {small} vs {large}"
        );
    }

    #[test]
    fn distance_to_projection_of_smooth_kernel() {
        let f = Kernel::from_fn(
            1,
            |x| (-x[0] * x[0]).exp(),
            Some(BoxDomain::new(vec![-5.0], vec![5.0]).unwrap()),
            None,
        );
        let grid = grid1(0.125, -40, 40);
        let avg = cell_average(&f, &grid).unwrap();
        let d = lalpha_distance(&avg, &f, 2.0, 1e-11).unwrap();
        // within-cell deviation h^2/12 int f'^2 ~ 1.6e-3 at this span
        assert!(d > 1e-3 && d < 2.5e-3, "distance {d}");
    }

    #[test]
    fn unbounded_kernel_distance_includes_outside_mass() {
        let f = Kernel::from_fn(
            1,
            |x| (-x[0].abs()).exp(),
            None,
            Some(Decay::Exponential { c: 1.0, rate: 1.0, radius: 0.0 }),
        );
        let grid = grid1(0.25, -4, 4); // window [-1, 1] only
        let avg = cell_average(&f, &grid).unwrap();
        let d = lalpha_distance(&avg, &f, 1.0, 1e-9).unwrap();
        // the outside mass alone is 2 e^-1
        assert!(d > 2.0 * (-1.0_f64).exp() * 0.9, "distance {d}");
    }
}
