//! Solution of `M y = h` with Dirichlet ends as `y(x) = ∫ G(x,t) h(t) dt`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::green::{Branch, GreensMatrix};
use crate::matrix::Matrix;
use crate::operator::{CoefficientFn, Grid, OperatorSpec};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct BvpSolution<T> {
    pub grid: Grid<T>,
    /// `y[k][i]`: component `i` at node `k`.
    pub y: Vec<Vec<T>>,
    /// `max |M y − h|` at interior nodes, finite-difference `M`.
    pub residual: T,
    /// `max(|y(a)|, |y(b)|)`.
    pub boundary: T,
}

impl<T: Real> BvpSolution<T> {
    pub fn component(&self, i: usize) -> Vec<T> {
        self.y.iter().map(|row| row[i]).collect()
    }
}

fn eval_rhs<T: Real>(h: &[CoefficientFn<T>], t: T) -> Vec<T> {
    h.iter().map(|f| f.eval(t)).collect()
}

/// `∫ G(x, t) h(t) dt` over `[lo, hi]` with one Simpson panel per grid cell.
/// `branch` must be the smooth branch of `G(x, ·)` on the whole range.
fn integrate_branch<T: Real>(
    g: &GreensMatrix<T>,
    h: &[CoefficientFn<T>],
    x: T,
    nodes: &[T],
    branch: Branch,
) -> Result<Vec<T>> {
    let n = g.dim();
    let mut acc = vec![T::zero(); n];
    let integrand = |t: T| -> Result<Vec<T>> { Ok(g.evaluate_branch(x, t, branch)?.mul_vec(&eval_rhs(h, t))) };
    let six = T::lit(6.0);
    let four = T::lit(4.0);
    for w in nodes.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid = (lo + hi) * T::lit(0.5);
        let (fl, fm, fh) = (integrand(lo)?, integrand(mid)?, integrand(hi)?);
        let scale = (hi - lo) / six;
        for i in 0..n {
            acc[i] += scale * (fl[i] + four * fm[i] + fh[i]);
        }
    }
    Ok(acc)
}

/// Solve `M y = h`, `y(a) = y(b) = O` on the nodes of `grid`.
///
/// The integral is split at `t = x_k` so that each piece of `G(x_k, ·)` is
/// smooth; every grid cell is one Simpson panel with the cell midpoint as
/// the middle abscissa.
pub fn solve_bvp<T: Real>(g: &GreensMatrix<T>, h: &[CoefficientFn<T>], grid: &Grid<T>) -> Result<BvpSolution<T>> {
    let spec = g.spec();
    if h.len() != g.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), got: h.len() });
    }
    if grid.a() != spec.a() || grid.b() != spec.b() {
        return Err(Error::InvalidGrid(format!(
            "grid [{}, {}] does not match the operator interval [{}, {}]",
            grid.a(),
            grid.b(),
            spec.a(),
            spec.b()
        )));
    }
    for f in h {
        f.check_covers(spec.a(), spec.b())?;
    }
    let nodes = grid.nodes();
    let y: Vec<Vec<T>> = (0..nodes.len())
        .into_par_iter()
        .map(|k| {
            let x = nodes[k];
            // t ≤ x: the x ≥ t branch; t ≥ x: the x ≤ t branch
            let below = integrate_branch(g, h, x, &nodes[..=k], Branch::Right)?;
            let above = integrate_branch(g, h, x, &nodes[k..], Branch::Left)?;
            Ok(below.iter().zip(&above).map(|(&l, &r)| l + r).collect())
        })
        .collect::<Result<_>>()?;
    let residual = residual(spec, grid, &y, h)?;
    let last = y.len() - 1;
    let boundary = y[0].iter().chain(&y[last]).fold(T::zero(), |m, v| m.max(v.abs()));
    Ok(BvpSolution { grid: grid.clone(), y, residual, boundary })
}

/// `max |M y − h|` over interior nodes with the finite-difference `M`.
pub fn residual<T: Real>(spec: &OperatorSpec<T>, grid: &Grid<T>, y: &[Vec<T>], h: &[CoefficientFn<T>]) -> Result<T> {
    if h.len() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), got: h.len() });
    }
    let my = spec.apply(grid, y)?;
    let nodes = grid.nodes();
    let mut worst = T::zero();
    for (k, row) in my.iter().enumerate() {
        let rhs = eval_rhs(h, nodes[k + 1]);
        for (v, r) in row.iter().zip(&rhs) {
            worst = worst.max((*v - *r).abs());
        }
    }
    Ok(worst)
}

/// `∫ₐᵇ f(x)ᵀ y(x) dx` by the composite trapezoid rule on the grid.
pub fn inner_product<T: Real>(grid: &Grid<T>, f: &[CoefficientFn<T>], y: &[Vec<T>]) -> T {
    let nodes = grid.nodes();
    let last = nodes.len() - 1;
    let h = grid.step();
    let mut acc = T::zero();
    for (k, &x) in nodes.iter().enumerate() {
        let w = if k == 0 || k == last { T::lit(0.5) } else { T::one() };
        let fx = eval_rhs(f, x);
        let dot: T = fx.iter().zip(&y[k]).map(|(&a, &b)| a * b).sum();
        acc += w * h * dot;
    }
    acc
}

/// Samples of `f` as a `nodes × n` matrix, for comparisons.
pub fn sample<T: Real>(grid: &Grid<T>, f: &[CoefficientFn<T>]) -> Matrix<T> {
    let nodes = grid.nodes();
    Matrix::from_fn(nodes.len(), f.len(), |k, i| f[i].eval(nodes[k]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green::{build, GreenOptions, Route};
    use crate::odeint::{integrate_fundamental, IntegratorOptions};

    fn green(spec: OperatorSpec<f64>, cells: usize, route: Route) -> GreensMatrix<f64> {
        let grid = Grid::uniform(spec.a(), spec.b(), cells).unwrap();
        let bundle = integrate_fundamental(&spec, &grid, IntegratorOptions::default()).unwrap();
        build(route, spec, bundle, &GreenOptions::default()).unwrap()
    }

    fn free() -> OperatorSpec<f64> {
        OperatorSpec::constant(0.0, 1.0, &[1.0], &[0.0], &[]).unwrap()
    }

    fn rhs(sources: &[&str]) -> Vec<CoefficientFn<f64>> {
        sources.iter().map(|s| CoefficientFn::expression(s).unwrap()).collect()
    }

    #[test]
    fn constant_source() {
        let g = green(free(), 100, Route::Compact);
        let grid = Grid::uniform(0.0, 1.0, 100).unwrap();
        let sol = solve_bvp(&g, &rhs(&["-2"]), &grid).unwrap();
        for (k, &x) in grid.nodes().iter().enumerate() {
            assert!((sol.y[k][0] - x * (1.0 - x)).abs() < 1e-12);
        }
        assert!((sol.y[50][0] - 0.25).abs() < 1e-12);
        assert!(sol.boundary < 1e-14);
        assert!(sol.residual < 1e-10, "{}", sol.residual);
    }

    #[test]
    fn zero_source() {
        let g = green(free(), 50, Route::Guess);
        let grid = Grid::uniform(0.0, 1.0, 50).unwrap();
        let sol = solve_bvp(&g, &rhs(&["0"]), &grid).unwrap();
        assert!(sol.y.iter().all(|r| r[0] == 0.0));
        assert_eq!(sol.residual, 0.0);
    }

    #[test]
    fn linearity_and_reciprocity() {
        let spec = OperatorSpec::constant(0.0, 1.0, &[1.0, 2.0], &[-1.0, 0.5], &[1.5]).unwrap();
        let g = green(spec, 200, Route::Compact);
        let grid = Grid::uniform(0.0, 1.0, 200).unwrap();
        let h1 = rhs(&["sin(3*x)", "x^2"]);
        let h2 = rhs(&["1", "exp(x)"]);
        let combo = rhs(&["2*sin(3*x) - 3", "2*x^2 - 3*exp(x)"]);
        let y1 = solve_bvp(&g, &h1, &grid).unwrap();
        let y2 = solve_bvp(&g, &h2, &grid).unwrap();
        let yc = solve_bvp(&g, &combo, &grid).unwrap();
        for k in 0..grid.nodes().len() {
            for i in 0..2 {
                let lin = 2.0 * y1.y[k][i] - 3.0 * y2.y[k][i];
                assert!((yc.y[k][i] - lin).abs() < 1e-12);
            }
        }
        let a = inner_product(&grid, &h1, &y2.y);
        let b = inner_product(&grid, &h2, &y1.y);
        assert!((a - b).abs() < 1e-4 * a.abs().max(1.0), "{a} {b}");
    }

    #[test]
    fn scalar_convergence() {
        // y'' + y = 1, y(0) = y(1) = 0
        let spec = OperatorSpec::constant(0.0, 1.0, &[1.0], &[1.0], &[]).unwrap();
        let exact = |x: f64| 1.0 - x.cos() - (1.0 - 1f64.cos()) / 1f64.sin() * x.sin();
        let err = |cells: usize| {
            let g = green(spec.clone(), cells, Route::Compact);
            let grid = Grid::uniform(0.0, 1.0, cells).unwrap();
            let sol = solve_bvp(&g, &rhs(&["1"]), &grid).unwrap();
            grid.nodes()
                .iter()
                .enumerate()
                .map(|(k, &x)| (sol.y[k][0] - exact(x)).abs())
                .fold(0.0, f64::max)
        };
        let (coarse, fine) = (err(8), err(16));
        assert!(coarse / fine >= 4.0, "{coarse} {fine}");
    }

    #[test]
    fn rejects_mismatched_input() {
        let g = green(free(), 20, Route::Compact);
        let grid = Grid::uniform(0.0, 1.0, 20).unwrap();
        assert!(matches!(solve_bvp(&g, &rhs(&["1", "1"]), &grid), Err(Error::DimensionMismatch { .. })));
        let other = Grid::uniform(0.0, 2.0, 20).unwrap();
        assert!(matches!(solve_bvp(&g, &rhs(&["1"]), &other), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn residual_of_known_solution() {
        let spec = free();
        let grid = Grid::uniform(0.0, 1.0, 10).unwrap();
        let y: Vec<Vec<f64>> = grid.nodes().iter().map(|&x| vec![x * (1.0 - x)]).collect();
        assert!(residual(&spec, &grid, &y, &rhs(&["-2"])).unwrap() < 1e-12);
        let zero: Vec<Vec<f64>> = grid.nodes().iter().map(|_| vec![0.0]).collect();
        assert_eq!(residual(&spec, &grid, &zero, &rhs(&["0"])).unwrap(), 0.0);
        let mut bumped = zero.clone();
        bumped[5][0] = 1e-3;
        let r1 = residual(&spec, &grid, &bumped, &rhs(&["0"])).unwrap();
        bumped[5][0] = 2e-3;
        let r2 = residual(&spec, &grid, &bumped, &rhs(&["0"])).unwrap();
        assert!((r2 / r1 - 2.0).abs() < 1e-12);
    }
}
