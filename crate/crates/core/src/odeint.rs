//! Fundamental solutions of the homogeneous system `z' = A(x) z`.
//!
//! `n` solutions start at the left end with `u(a) = 0, u'(a) = e_α` and are
//! integrated forward; `n` start at the right end with `v(b) = 0, v'(b) = e_β`
//! and are integrated backward. Both families use classical fixed-step RK4
//! so they share one grid.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::operator::{Grid, OperatorSpec};
use crate::scalar::Real;

/// Default ceiling on solution magnitudes before integration is abandoned.
pub const DEFAULT_GROWTH_CAP: f64 = 1e100;

#[derive(Debug, Clone, Copy)]
pub struct IntegratorOptions<T> {
    /// RK4 steps per grid cell.
    pub substeps: usize,
    /// Abort when any solution entry exceeds this magnitude.
    pub growth_cap: T,
}

impl<T: Real> Default for IntegratorOptions<T> {
    fn default() -> Self {
        Self {
            substeps: 1,
            growth_cap: T::lit(DEFAULT_GROWTH_CAP),
        }
    }
}

impl<T: Real> IntegratorOptions<T> {
    pub fn with_substeps(substeps: usize) -> Self {
        Self {
            substeps,
            ..Self::default()
        }
    }
}

/// `U, V, U', V'` at one abscissa. Columns of `u` are the left-boundary
/// solutions, columns of `v` the right-boundary ones.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionBlocks<T> {
    pub u: Matrix<T>,
    pub v: Matrix<T>,
    pub du: Matrix<T>,
    pub dv: Matrix<T>,
}

impl<T: Real> SolutionBlocks<T> {
    /// The Wronskian (fundamental) matrix `[[U, V], [U', V']]`.
    pub fn wronskian(&self) -> Matrix<T> {
        Matrix::from_blocks(&self.u, &self.v, &self.du, &self.dv)
    }
}

#[derive(Debug, Clone)]
pub struct SolutionBundle<T> {
    grid: Grid<T>,
    u: Vec<Matrix<T>>,
    v: Vec<Matrix<T>>,
    du: Vec<Matrix<T>>,
    dv: Vec<Matrix<T>>,
    // second derivatives from z' = A z, used for Hermite interpolation of U', V'
    ddu: Vec<Matrix<T>>,
    ddv: Vec<Matrix<T>>,
    max_wronskian_condition: T,
}

/// Integrate the `2n` fundamental solutions on `grid`.
pub fn integrate_fundamental<T: Real>(
    spec: &OperatorSpec<T>,
    grid: &Grid<T>,
    options: IntegratorOptions<T>,
) -> Result<SolutionBundle<T>> {
    if options.substeps == 0 {
        return Err(Error::InvalidGrid("substeps must be positive".into()));
    }
    if grid.a() != spec.a() || grid.b() != spec.b() {
        return Err(Error::InvalidGrid(format!(
            "grid spans [{}, {}] but the operator is defined on [{}, {}]",
            grid.a(),
            grid.b(),
            spec.a(),
            spec.b()
        )));
    }
    spec.validate_on(grid)?;
    let (left, right) = rayon::join(
        || sweep(spec, grid, options, Direction::Forward),
        || sweep(spec, grid, options, Direction::Backward),
    );
    let (left, right) = (left?, right?);
    let n = spec.dim();
    let nodes = grid.nodes().len();
    let mut bundle = SolutionBundle {
        grid: grid.clone(),
        u: Vec::with_capacity(nodes),
        v: Vec::with_capacity(nodes),
        du: Vec::with_capacity(nodes),
        dv: Vec::with_capacity(nodes),
        ddu: Vec::with_capacity(nodes),
        ddv: Vec::with_capacity(nodes),
        max_wronskian_condition: T::zero(),
    };
    for (k, (zl, zr)) in left.into_iter().zip(right).enumerate() {
        let a = spec.companion_matrix(grid.node(k))?;
        let dzl = &a * &zl;
        let dzr = &a * &zr;
        bundle.u.push(zl.block(0, 0, n, n));
        bundle.du.push(zl.block(n, 0, n, n));
        bundle.ddu.push(dzl.block(n, 0, n, n));
        bundle.v.push(zr.block(0, 0, n, n));
        bundle.dv.push(zr.block(n, 0, n, n));
        bundle.ddv.push(dzr.block(n, 0, n, n));
    }
    bundle.max_wronskian_condition = bundle.scan_wronskian_condition();
    Ok(bundle)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Backward,
}

/// Integrate the `2n x n` state `Z = [Y; Y']` with `Y = 0, Y' = I` at the
/// starting end; returns the state at every node in grid order.
fn sweep<T: Real>(
    spec: &OperatorSpec<T>,
    grid: &Grid<T>,
    options: IntegratorOptions<T>,
    direction: Direction,
) -> Result<Vec<Matrix<T>>> {
    let n = spec.dim();
    let nodes = grid.nodes();
    let last = nodes.len() - 1;
    let mut z = Matrix::zeros(2 * n, n);
    z.set_block(n, 0, &Matrix::identity(n));
    let mut states = vec![Matrix::zeros(2 * n, n); nodes.len()];
    let order: Vec<usize> = match direction {
        Direction::Forward => (0..=last).collect(),
        Direction::Backward => (0..=last).rev().collect(),
    };
    states[order[0]] = z.clone();
    let substeps = T::from_usize_lossy(options.substeps);
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let two = T::lit(2.0);
    for pair in order.windows(2) {
        let (from, to) = (pair[0], pair[1]);
        let x0 = nodes[from];
        let hs = (nodes[to] - x0) / substeps;
        for s in 0..options.substeps {
            let x = x0 + hs * T::from_usize_lossy(s);
            let a0 = spec.companion_matrix(x)?;
            let am = spec.companion_matrix(x + half * hs)?;
            let a1 = if s + 1 == options.substeps {
                spec.companion_matrix(nodes[to])?
            } else {
                spec.companion_matrix(x + hs)?
            };
            let k1 = &a0 * &z;
            let k2 = &am * &(&z + &k1.scale(half * hs));
            let k3 = &am * &(&z + &k2.scale(half * hs));
            let k4 = &a1 * &(&z + &k3.scale(hs));
            let incr = &(&k1 + &k4) + &(&k2 + &k3).scale(two);
            z = &z + &incr.scale(hs * sixth);
        }
        let peak = z.max_abs();
        if !peak.is_finite() || peak > options.growth_cap {
            return Err(Error::Overflow {
                x: nodes[to].as_f64(),
                cap: options.growth_cap.as_f64(),
            });
        }
        states[to] = z.clone();
    }
    Ok(states)
}

impl<T: Real> SolutionBundle<T> {
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.u[0].rows()
    }

    pub fn a(&self) -> T {
        self.grid.a()
    }

    pub fn b(&self) -> T {
        self.grid.b()
    }

    /// Stored blocks at node `k`.
    pub fn at_node(&self, k: usize) -> SolutionBlocks<T> {
        SolutionBlocks {
            u: self.u[k].clone(),
            v: self.v[k].clone(),
            du: self.du[k].clone(),
            dv: self.dv[k].clone(),
        }
    }

    /// Fundamental matrix `W(x_k)`.
    pub fn fundamental(&self, k: usize) -> Matrix<T> {
        self.at_node(k).wronskian()
    }

    /// Largest 1-norm condition number of `W` over the interior nodes
    /// (infinite if some `W` was exactly singular).
    pub fn max_wronskian_condition(&self) -> T {
        self.max_wronskian_condition
    }

    fn scan_wronskian_condition(&self) -> T {
        let last = self.grid.cells();
        (1..last)
            .map(|k| {
                let w = self.fundamental(k);
                match crate::blockalg::Lu::factor(&w) {
                    Ok(lu) => w.norm1() * lu.inverse().norm1(),
                    Err(_) => T::infinity(),
                }
            })
            .fold(T::zero(), T::max)
    }

    /// Blocks at arbitrary `x` in `[a, b]`: stored values at nodes, piecewise
    /// cubic Hermite interpolation in between (values with first derivatives
    /// for `U, V`; first with second derivatives for `U', V'`).
    pub fn evaluate(&self, x: T) -> Result<SolutionBlocks<T>> {
        if !(self.a() <= x && x <= self.b()) {
            return Err(Error::OutOfInterval {
                value: x.as_f64(),
                a: self.a().as_f64(),
                b: self.b().as_f64(),
            });
        }
        let k = self.grid.cell_of(x);
        let (x0, x1) = (self.grid.node(k), self.grid.node(k + 1));
        if x == x0 {
            return Ok(self.at_node(k));
        }
        if x == x1 {
            return Ok(self.at_node(k + 1));
        }
        let h = x1 - x0;
        let w = HermiteWeights::new((x - x0) / h, h);
        Ok(SolutionBlocks {
            u: w.combine(&self.u[k], &self.du[k], &self.u[k + 1], &self.du[k + 1]),
            v: w.combine(&self.v[k], &self.dv[k], &self.v[k + 1], &self.dv[k + 1]),
            du: w.combine(&self.du[k], &self.ddu[k], &self.du[k + 1], &self.ddu[k + 1]),
            dv: w.combine(&self.dv[k], &self.ddv[k], &self.dv[k + 1], &self.ddv[k + 1]),
        })
    }

    /// Replace the left-boundary family by `U R` (and `U' R`). Any invertible
    /// `R` yields another valid basis.
    pub fn recombine_u(&self, r: &Matrix<T>) -> Result<Self> {
        self.check_recombination(r)?;
        let mut out = self.clone();
        for m in out.u.iter_mut().chain(out.du.iter_mut()).chain(out.ddu.iter_mut()) {
            *m = &*m * r;
        }
        out.max_wronskian_condition = out.scan_wronskian_condition();
        Ok(out)
    }

    /// Replace the right-boundary family by `V R`.
    pub fn recombine_v(&self, r: &Matrix<T>) -> Result<Self> {
        self.check_recombination(r)?;
        let mut out = self.clone();
        for m in out.v.iter_mut().chain(out.dv.iter_mut()).chain(out.ddv.iter_mut()) {
            *m = &*m * r;
        }
        out.max_wronskian_condition = out.scan_wronskian_condition();
        Ok(out)
    }

    fn check_recombination(&self, r: &Matrix<T>) -> Result<()> {
        let n = self.dim();
        if r.rows() != n || r.cols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: r.rows() });
        }
        crate::blockalg::Lu::factor(r).map(|_| ())
    }

    /// Max-norm of the centred difference residual `W' − A W` over interior
    /// nodes; second order in the grid step.
    pub fn fundamental_residual(&self, spec: &OperatorSpec<T>) -> Result<T> {
        let h2 = self.grid.step() * T::lit(2.0);
        let mut worst = T::zero();
        for k in 1..self.grid.cells() {
            let dw = (&self.fundamental(k + 1) - &self.fundamental(k - 1)).scale(T::one() / h2);
            let aw = &spec.companion_matrix(self.grid.node(k))? * &self.fundamental(k);
            worst = worst.max(dw.max_abs_diff(&aw));
        }
        Ok(worst)
    }
}

struct HermiteWeights<T> {
    h00: T,
    h10: T,
    h01: T,
    h11: T,
}

impl<T: Real> HermiteWeights<T> {
    fn new(s: T, h: T) -> Self {
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let s2 = s * s;
        let s3 = s2 * s;
        Self {
            h00: two * s3 - three * s2 + T::one(),
            h10: (s3 - two * s2 + s) * h,
            h01: three * s2 - two * s3,
            h11: (s3 - s2) * h,
        }
    }

    fn combine(&self, f0: &Matrix<T>, d0: &Matrix<T>, f1: &Matrix<T>, d1: &Matrix<T>) -> Matrix<T> {
        Matrix::from_fn(f0.rows(), f0.cols(), |i, j| {
            self.h00 * f0[(i, j)] + self.h10 * d0[(i, j)] + self.h01 * f1[(i, j)] + self.h11 * d1[(i, j)]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free(n: usize) -> OperatorSpec<f64> {
        OperatorSpec::constant(0.0, 1.0, &vec![1.0; n], &vec![0.0; n], &vec![0.0; n * (n - 1) / 2]).unwrap()
    }

    #[test]
    fn linear_solutions_are_exact() {
        let spec = free(1);
        let grid = Grid::uniform(0.0, 1.0, 100).unwrap();
        let b = integrate_fundamental(&spec, &grid, IntegratorOptions::default()).unwrap();
        for (k, &x) in grid.nodes().iter().enumerate() {
            let s = b.at_node(k);
            assert!((s.u[(0, 0)] - x).abs() < 1e-15);
            assert!((s.du[(0, 0)] - 1.0).abs() < 1e-15);
            assert!((s.v[(0, 0)] - (x - 1.0)).abs() < 1e-15);
            assert!((s.dv[(0, 0)] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn boundary_data() {
        let spec = OperatorSpec::constant(0.0, 2.0, &[1.0, 2.0], &[-1.0, 0.5], &[0.3]).unwrap();
        let grid = Grid::<f64>::uniform(0.0, 2.0, 40).unwrap();
        let b = integrate_fundamental(&spec, &grid, IntegratorOptions::default()).unwrap();
        let left = b.evaluate(0.0).unwrap();
        assert_eq!(left.u, Matrix::zeros(2, 2));
        assert_eq!(left.du, Matrix::identity(2));
        let right = b.at_node(40);
        assert_eq!(right.v, Matrix::zeros(2, 2));
        assert_eq!(right.dv, Matrix::identity(2));
        assert!(b.max_wronskian_condition().is_finite());
    }

    #[test]
    fn decoupled_stays_diagonal() {
        let spec = OperatorSpec::constant(0.0, 1.0, &[1.0, 2.0], &[-3.0, 1.0], &[0.0]).unwrap();
        let grid = Grid::uniform(0.0, 1.0, 30).unwrap();
        let b = integrate_fundamental(&spec, &grid, IntegratorOptions::default()).unwrap();
        for k in 0..=30 {
            let s = b.at_node(k);
            for m in [&s.u, &s.v, &s.du, &s.dv] {
                assert_eq!(m[(0, 1)], 0.0);
                assert_eq!(m[(1, 0)], 0.0);
            }
        }
    }

    #[test]
    fn off_node_evaluation() {
        let spec = free(1);
        let grid = Grid::uniform(0.0, 1.0, 10).unwrap();
        let b = integrate_fundamental(&spec, &grid, IntegratorOptions::default()).unwrap();
        let s = b.evaluate(0.35).unwrap();
        assert!((s.u[(0, 0)] - 0.35).abs() < 1e-15);
        assert!((s.v[(0, 0)] + 0.65).abs() < 1e-15);
        assert_eq!(b.evaluate(grid.node(3)).unwrap(), b.at_node(3));
        assert!(matches!(b.evaluate(1.5), Err(Error::OutOfInterval { .. })));
        assert!(b.evaluate(-0.1).is_err());
    }

    fn rk4_error(cells: usize) -> f64 {
        // y'' = -y: u = sin x, v = sin(x - 1)
        let spec = OperatorSpec::constant(0.0, 1.0, &[1.0], &[1.0], &[]).unwrap();
        let grid = Grid::<f64>::uniform(0.0, 1.0, cells).unwrap();
        let b = integrate_fundamental(&spec, &grid, IntegratorOptions::default()).unwrap();
        grid.nodes()
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let s = b.at_node(k);
                (s.u[(0, 0)] - x.sin()).abs().max((s.v[(0, 0)] - (x - 1.0).sin()).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn rk4_is_fourth_order() {
        let (coarse, fine) = (rk4_error(10), rk4_error(20));
        let ratio = coarse / fine;
        assert!((13.0..19.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn substeps_refine_like_grid() {
        let spec = OperatorSpec::constant(0.0, 1.0, &[1.0], &[1.0], &[]).unwrap();
        let grid = Grid::uniform(0.0, 1.0, 10).unwrap();
        let b = integrate_fundamental(&spec, &grid, IntegratorOptions::with_substeps(2)).unwrap();
        let err = (b.at_node(10).u[(0, 0)] - 1f64.sin()).abs();
        assert!(err < rk4_error(10) / 10.0);
    }

    #[test]
    fn growth_cap_aborts() {
        let spec = OperatorSpec::constant(0.0, 10.0, &[1.0], &[-400.0], &[]).unwrap();
        let grid = Grid::uniform(0.0, 10.0, 2000).unwrap();
        let opts = IntegratorOptions { substeps: 1, growth_cap: 1e30 };
        assert!(matches!(integrate_fundamental(&spec, &grid, opts), Err(Error::Overflow { .. })));
    }

    #[test]
    fn vanishing_p_is_reported() {
        use crate::operator::CoefficientFn;
        let p = vec![CoefficientFn::expression("x - 0.3").unwrap()];
        let spec = OperatorSpec::new(0.0, 1.0, p, vec![CoefficientFn::constant(0.0)], vec![]).unwrap();
        let grid = Grid::uniform(0.0, 1.0, 10).unwrap();
        let err = integrate_fundamental(&spec, &grid, IntegratorOptions::default()).unwrap_err();
        assert!(matches!(err, Error::SingularLeadingCoefficient { .. }), "{err}");
    }

    #[test]
    fn fundamental_matrix_solves_companion_system() {
        let spec = OperatorSpec::constant(0.0, 1.0, &[1.0, 1.0], &[0.0, 0.0], &[4.0]).unwrap();
        let grid = Grid::uniform(0.0, 1.0, 200).unwrap();
        let b = integrate_fundamental(&spec, &grid, IntegratorOptions::default()).unwrap();
        assert!(b.fundamental_residual(&spec).unwrap() < 1e-3);
    }
}
