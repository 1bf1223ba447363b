//! Green's matrix construction by three independent routes sharing one
//! evaluator type.
//!
//! * [`Route::General`]: extract the upper-left block of the first-order
//!   Green's matrix `± W(x) D⁻¹ B W(·) W⁻¹(t)`, right-multiplied by `P⁻¹(t)`.
//! * [`Route::Compact`]: `U(x) (Cᵀ)⁻¹ Vᵀ(t)` for `x ≤ t` and
//!   `V(x) C⁻¹ Uᵀ(t)` for `x ≥ t`.
//! * [`Route::Guess`]: `U(x) S(t)` / `V(x) T(t)` with `S, T` solved from
//!   continuity and the jump condition at `x = t`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::blockalg::{self, Lu};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::odeint::{SolutionBlocks, SolutionBundle};
use crate::operator::OperatorSpec;
use crate::scalar::Real;

/// Relative tolerance on the variation of `C` across the grid.
pub const DEFAULT_C_CONSTANCY_TOL: f64 = 1e-8;

/// `C` or `D` whose smallest gain relative to the size of the terms it is
/// built from falls below this is treated as singular.
pub const DEFAULT_SINGULAR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Route {
    General,
    Compact,
    Guess,
}

impl Route {
    pub const ALL: [Route; 3] = [Route::General, Route::Compact, Route::Guess];

    pub fn name(self) -> &'static str {
        match self {
            Route::General => "general",
            Route::Compact => "compact",
            Route::Guess => "guess",
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Route {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "general" => Ok(Route::General),
            "compact" => Ok(Route::Compact),
            "guess" => Ok(Route::Guess),
            other => Err(format!("unknown route '{other}' (expected general, compact or guess)")),
        }
    }
}

/// Which side of the diagonal formula to use. `x = t` is evaluated with
/// [`Branch::Left`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `x ≤ t`.
    Left,
    /// `x ≥ t`.
    Right,
}

#[derive(Debug, Clone, Copy)]
pub struct GreenOptions<T> {
    pub cond_limit: T,
    pub singular_tol: T,
    pub c_constancy_tol: T,
}

impl<T: Real> Default for GreenOptions<T> {
    fn default() -> Self {
        Self {
            cond_limit: T::lit(blockalg::DEFAULT_COND_LIMIT),
            singular_tol: T::lit(DEFAULT_SINGULAR_TOL),
            c_constancy_tol: T::lit(DEFAULT_C_CONSTANCY_TOL),
        }
    }
}

/// `Uᵀ P V′ − (U′)ᵀ P V` from blocks at one abscissa with `p = diag P`,
/// plus the magnitude of the two terms.
pub fn wronskian_analog<T: Real>(blocks: &SolutionBlocks<T>, p: &[T]) -> (Matrix<T>, T) {
    let upv = &blocks.u.transpose() * &blocks.dv.scale_rows(p);
    let dupv = &blocks.du.transpose() * &blocks.v.scale_rows(p);
    let scale = upv.norm1() + dupv.norm1();
    (&upv - &dupv, scale)
}

/// The constant matrix `C` together with its quality diagnostics.
#[derive(Debug, Clone)]
pub struct ConstantMatrix<T> {
    c: Matrix<T>,
    reference_node: usize,
    max_variation: T,
    relative_condition: T,
}

impl<T: Real> ConstantMatrix<T> {
    pub fn matrix(&self) -> &Matrix<T> {
        &self.c
    }

    /// Node at which `C` was evaluated (the grid midpoint).
    pub fn reference_node(&self) -> usize {
        self.reference_node
    }

    /// Largest entrywise deviation across interior nodes, relative to `max |C|`.
    pub fn max_variation(&self) -> T {
        self.max_variation
    }

    /// `‖C⁻¹‖₁` times the size of the terms `C` is a difference of.
    pub fn relative_condition(&self) -> T {
        self.relative_condition
    }

    /// Plain 1-norm condition number of `C`.
    pub fn condition(&self) -> T {
        match Lu::factor(&self.c) {
            Ok(lu) => self.c.norm1() * lu.inverse().norm1(),
            Err(_) => T::infinity(),
        }
    }
}

/// Evaluate `C` at the grid midpoint and check it is constant and invertible.
pub fn constant_matrix<T: Real>(
    bundle: &SolutionBundle<T>,
    spec: &OperatorSpec<T>,
    options: &GreenOptions<T>,
) -> Result<ConstantMatrix<T>> {
    if spec.dim() != bundle.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), got: bundle.dim() });
    }
    let grid = bundle.grid();
    let reference_node = grid.cells() / 2;
    let at = |k: usize| wronskian_analog(&bundle.at_node(k), &spec.p_values(grid.node(k)));
    let (c, _) = at(reference_node);
    let mut scale = T::zero();
    let mut abs_variation = T::zero();
    for k in 1..grid.cells() {
        let (ck, sk) = at(k);
        scale = scale.max(sk);
        abs_variation = abs_variation.max(ck.max_abs_diff(&c));
    }
    let inv_norm = match Lu::factor(&c) {
        Ok(lu) => lu.inverse().norm1(),
        Err(_) => T::infinity(),
    };
    let relative_condition = scale * inv_norm;
    // C is a difference of O(scale) terms known only to integration accuracy
    if is_numerically_singular(relative_condition, options) || T::one() / inv_norm <= abs_variation {
        return Err(Error::SingularConstantMatrix { condition: relative_condition.as_f64() });
    }
    let max_variation = abs_variation / c.max_abs();
    if max_variation > options.c_constancy_tol {
        return Err(Error::NonConstantC {
            variation: max_variation.as_f64(),
            tolerance: options.c_constancy_tol.as_f64(),
        });
    }
    Ok(ConstantMatrix { c, reference_node, max_variation, relative_condition })
}

fn is_numerically_singular<T: Real>(relative_condition: T, options: &GreenOptions<T>) -> bool {
    !relative_condition.is_finite()
        || relative_condition > options.cond_limit
        || relative_condition * options.singular_tol > T::one()
}

/// `B_a`, `B_b` of homogeneous Dirichlet conditions on `z = (y, y′)` and
/// `D = B_a W(a) + B_b W(b)`.
#[derive(Debug, Clone)]
pub struct BoundaryMatrices<T> {
    pub b_a: Matrix<T>,
    pub b_b: Matrix<T>,
    pub d: Matrix<T>,
}

impl<T: Real> BoundaryMatrices<T> {
    pub fn dirichlet(bundle: &SolutionBundle<T>) -> Self {
        let n = bundle.dim();
        let mut b_a = Matrix::zeros(2 * n, 2 * n);
        b_a.set_block(0, 0, &Matrix::identity(n));
        let mut b_b = Matrix::zeros(2 * n, 2 * n);
        b_b.set_block(n, 0, &Matrix::identity(n));
        let wa = bundle.fundamental(0);
        let wb = bundle.fundamental(bundle.grid().cells());
        let d = &(&b_a * &wa) + &(&b_b * &wb);
        Self { b_a, b_b, d }
    }
}

#[derive(Debug, Clone)]
enum Kernel<T> {
    General {
        /// `D⁻¹ B_a W(a)`
        left_factor: Matrix<T>,
        /// `D⁻¹ B_b W(b)`
        right_factor: Matrix<T>,
    },
    Compact,
    Guess,
}

/// Immutable evaluator `(x, t) ↦ G(x, t)`.
#[derive(Debug, Clone)]
pub struct GreensMatrix<T> {
    spec: Arc<OperatorSpec<T>>,
    bundle: Arc<SolutionBundle<T>>,
    constant: ConstantMatrix<T>,
    c_inv: Matrix<T>,
    c_inv_t: Matrix<T>,
    cond_limit: T,
    route: Route,
    kernel: Kernel<T>,
}

fn prepare<T: Real>(
    spec: Arc<OperatorSpec<T>>,
    bundle: Arc<SolutionBundle<T>>,
    options: &GreenOptions<T>,
    route: Route,
    kernel: Kernel<T>,
) -> Result<GreensMatrix<T>> {
    let constant = constant_matrix(&bundle, &spec, options)?;
    let c_inv = Lu::factor(constant.matrix())?.inverse();
    let c_inv_t = c_inv.transpose();
    Ok(GreensMatrix {
        spec,
        bundle,
        constant,
        c_inv,
        c_inv_t,
        cond_limit: options.cond_limit,
        route,
        kernel,
    })
}

/// Green's matrix from the first-order system: `D` and `W(t)` are inverted
/// by plain LU.
pub fn build_general<T: Real>(
    spec: impl Into<Arc<OperatorSpec<T>>>,
    bundle: impl Into<Arc<SolutionBundle<T>>>,
    options: &GreenOptions<T>,
) -> Result<GreensMatrix<T>> {
    let (spec, bundle) = (spec.into(), bundle.into());
    let bm = BoundaryMatrices::dirichlet(&bundle);
    let d_lu = Lu::factor(&bm.d).map_err(|_| Error::SingularBoundaryMatrix { condition: f64::INFINITY })?;
    let d_inv = d_lu.inverse();
    let wa = bundle.fundamental(0);
    let wb = bundle.fundamental(bundle.grid().cells());
    let relative_condition = (wa.norm1() + wb.norm1()) * d_inv.norm1();
    if is_numerically_singular(relative_condition, options) {
        return Err(Error::SingularBoundaryMatrix { condition: relative_condition.as_f64() });
    }
    for k in 0..=bundle.grid().cells() {
        let w = bundle.fundamental(k);
        blockalg::invert(&w, options.cond_limit).map_err(|e| match e {
            Error::Singular { .. } => Error::Singular { column: k },
            other => other,
        })?;
    }
    let left_factor = &(&d_inv * &bm.b_a) * &wa;
    let right_factor = &(&d_inv * &bm.b_b) * &wb;
    prepare(spec, bundle, options, Route::General, Kernel::General { left_factor, right_factor })
}

/// Green's matrix in the compact form built from `C`.
pub fn build_compact<T: Real>(
    spec: impl Into<Arc<OperatorSpec<T>>>,
    bundle: impl Into<Arc<SolutionBundle<T>>>,
    options: &GreenOptions<T>,
) -> Result<GreensMatrix<T>> {
    prepare(spec.into(), bundle.into(), options, Route::Compact, Kernel::Compact)
}

/// Green's matrix from the ansatz `U S` / `V T`, solving a `2n x 2n` system
/// for `S(t), T(t)` at every evaluation.
pub fn build_guess<T: Real>(
    spec: impl Into<Arc<OperatorSpec<T>>>,
    bundle: impl Into<Arc<SolutionBundle<T>>>,
    options: &GreenOptions<T>,
) -> Result<GreensMatrix<T>> {
    let g = prepare(spec.into(), bundle.into(), options, Route::Guess, Kernel::Guess)?;
    for &t in g.bundle.grid().nodes() {
        g.guess_coefficients(t)?;
    }
    Ok(g)
}

pub fn build<T: Real>(
    route: Route,
    spec: impl Into<Arc<OperatorSpec<T>>>,
    bundle: impl Into<Arc<SolutionBundle<T>>>,
    options: &GreenOptions<T>,
) -> Result<GreensMatrix<T>> {
    match route {
        Route::General => build_general(spec, bundle, options),
        Route::Compact => build_compact(spec, bundle, options),
        Route::Guess => build_guess(spec, bundle, options),
    }
}

/// Which block row of the fundamental matrix at `x` to use.
#[derive(Clone, Copy)]
enum Order {
    Value,
    Slope,
}

impl<T: Real> GreensMatrix<T> {
    pub fn route(&self) -> Route {
        self.route
    }

    pub fn spec(&self) -> &OperatorSpec<T> {
        &self.spec
    }

    pub fn bundle(&self) -> &SolutionBundle<T> {
        &self.bundle
    }

    pub fn constant(&self) -> &ConstantMatrix<T> {
        &self.constant
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn check_args(&self, x: T, t: T) -> Result<()> {
        for v in [x, t] {
            if !self.spec.contains(v) {
                return Err(Error::OutOfInterval {
                    value: v.as_f64(),
                    a: self.spec.a().as_f64(),
                    b: self.spec.b().as_f64(),
                });
            }
        }
        Ok(())
    }

    /// `G(x, t)`; on the diagonal the `x ≤ t` formula is used.
    pub fn evaluate(&self, x: T, t: T) -> Result<Matrix<T>> {
        let branch = if x <= t { Branch::Left } else { Branch::Right };
        self.evaluate_branch(x, t, branch)
    }

    /// `∂G/∂x (x, t)`, one-sided on the diagonal as for [`Self::evaluate`].
    pub fn evaluate_dx(&self, x: T, t: T) -> Result<Matrix<T>> {
        let branch = if x <= t { Branch::Left } else { Branch::Right };
        self.evaluate_dx_branch(x, t, branch)
    }

    /// One branch of `G`, continued past the diagonal.
    pub fn evaluate_branch(&self, x: T, t: T, branch: Branch) -> Result<Matrix<T>> {
        self.check_args(x, t)?;
        self.kernel_value(x, t, branch, Order::Value)
    }

    pub fn evaluate_dx_branch(&self, x: T, t: T, branch: Branch) -> Result<Matrix<T>> {
        self.check_args(x, t)?;
        self.kernel_value(x, t, branch, Order::Slope)
    }

    fn kernel_value(&self, x: T, t: T, branch: Branch, order: Order) -> Result<Matrix<T>> {
        let bx = self.bundle.evaluate(x)?;
        let bt = self.bundle.evaluate(t)?;
        let (ux, vx) = match order {
            Order::Value => (&bx.u, &bx.v),
            Order::Slope => (&bx.du, &bx.dv),
        };
        match &self.kernel {
            Kernel::Compact => Ok(self.compact_value(ux, vx, &bt, branch)),
            Kernel::Guess => {
                let (s, tt) = self.guess_coefficients(t)?;
                Ok(match branch {
                    Branch::Left => ux * &s,
                    Branch::Right => vx * &tt,
                })
            }
            Kernel::General { left_factor, right_factor } => {
                match self.general_value(&bx, &bt, t, branch, order, left_factor, right_factor) {
                    Some(g) => Ok(g),
                    // W(t) numerically singular: the compact form needs no inverse of W
                    None => Ok(self.compact_value(ux, vx, &bt, branch)),
                }
            }
        }
    }

    fn compact_value(&self, ux: &Matrix<T>, vx: &Matrix<T>, bt: &SolutionBlocks<T>, branch: Branch) -> Matrix<T> {
        match branch {
            Branch::Left => &(ux * &self.c_inv_t) * &bt.v.transpose(),
            Branch::Right => &(vx * &self.c_inv) * &bt.u.transpose(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn general_value(
        &self,
        bx: &SolutionBlocks<T>,
        bt: &SolutionBlocks<T>,
        t: T,
        branch: Branch,
        order: Order,
        left_factor: &Matrix<T>,
        right_factor: &Matrix<T>,
    ) -> Option<Matrix<T>> {
        let n = self.dim();
        let (winv, _) = blockalg::invert(&bt.wronskian(), self.cond_limit).ok()?;
        // W⁻¹(t) restricted to its last n columns, i.e. W⁻¹ L
        let winv_l = winv.block(0, n, 2 * n, n);
        let factor = match branch {
            Branch::Left => right_factor,
            Branch::Right => left_factor,
        };
        let wx_rows = match order {
            Order::Value => Matrix::from_blocks(&bx.u, &bx.v, &bx.du, &bx.dv).block(0, 0, n, 2 * n),
            Order::Slope => Matrix::from_blocks(&bx.u, &bx.v, &bx.du, &bx.dv).block(n, 0, n, 2 * n),
        };
        let g = &wx_rows * &(factor * &winv_l);
        let p_inv: Vec<T> = self.spec.p_values(t).into_iter().map(|p| T::one() / p).collect();
        let g = g.scale_cols(&p_inv);
        Some(match branch {
            Branch::Left => -&g,
            Branch::Right => g,
        })
    }

    /// `S(t), T(t)` from `U S = V T` and `V′ T − U′ S = P⁻¹` at `t`.
    pub fn guess_coefficients(&self, t: T) -> Result<(Matrix<T>, Matrix<T>)> {
        let n = self.dim();
        let bt = self.bundle.evaluate(t)?;
        let mut system = Matrix::zeros(2 * n, 2 * n);
        system.set_block(0, 0, &bt.u);
        system.set_block(0, n, &-&bt.v);
        system.set_block(n, 0, &-&bt.du);
        system.set_block(n, n, &bt.dv);
        let mut rhs = Matrix::zeros(2 * n, n);
        for (i, p) in self.spec.p_values(t).into_iter().enumerate() {
            rhs[(n + i, i)] = T::one() / p;
        }
        let singular = || Error::SingularGuessSystem { t: t.as_f64() };
        let (inv, _) = blockalg::invert(&system, self.cond_limit).map_err(|_| singular())?;
        let st = &inv * &rhs;
        Ok((st.block(0, 0, n, n), st.block(n, 0, n, n)))
    }
}

/// The explicit-boundary form built on the Schur-complement inverse of the
/// Wronskian at `t`:
///
/// ```text
/// G = O                                 x = a or x = b
///     U(x) U⁻¹(t) V(t) S⁻¹ P⁻¹(t)       a < x ≤ t
///     V(x) S⁻¹ P⁻¹(t)                   x ≥ t,      S = V′ − U′ U⁻¹ V
/// ```
///
/// `U(a)` is singular, so `t = a` is rejected.
pub fn explicit_boundary_form<T: Real>(
    spec: &OperatorSpec<T>,
    bundle: &SolutionBundle<T>,
    x: T,
    t: T,
) -> Result<Matrix<T>> {
    let n = spec.dim();
    let bx = bundle.evaluate(x)?;
    if x == spec.a() || x == spec.b() {
        return Ok(Matrix::zeros(n, n));
    }
    let bt = bundle.evaluate(t)?;
    let inv = blockalg::wronskian_inverse(&bt.u, &bt.v, &bt.du, &bt.dv)?;
    let p_inv: Vec<T> = spec.p_values(t).into_iter().map(|p| T::one() / p).collect();
    let g = if x <= t {
        // upper-right block of W⁻¹ is −U⁻¹ V S⁻¹
        -&(&bx.u * &inv.b)
    } else {
        &bx.v * &inv.d
    };
    Ok(g.scale_cols(&p_inv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odeint::{integrate_fundamental, IntegratorOptions};
    use crate::operator::Grid;

    fn free_bundle(cells: usize) -> (OperatorSpec<f64>, SolutionBundle<f64>) {
        let spec = OperatorSpec::constant(0.0, 1.0, &[1.0], &[0.0], &[]).unwrap();
        let grid = Grid::uniform(0.0, 1.0, cells).unwrap();
        let bundle = integrate_fundamental(&spec, &grid, IntegratorOptions::default()).unwrap();
        (spec, bundle)
    }

    fn analytic(x: f64, t: f64) -> f64 {
        if x <= t {
            x * (t - 1.0)
        } else {
            t * (x - 1.0)
        }
    }

    #[test]
    fn constant_matrix_of_free_operator() {
        let (spec, bundle) = free_bundle(100);
        let c = constant_matrix(&bundle, &spec, &GreenOptions::default()).unwrap();
        assert!((c.matrix()[(0, 0)] - 1.0).abs() < 1e-15);
        assert!(c.max_variation() < 1e-14);
        assert_eq!(c.reference_node(), 50);
    }

    #[test]
    fn constant_matrix_decoupled_identity() {
        let spec = OperatorSpec::constant(0.0, 1.0, &[1.0, 1.0], &[0.0, 0.0], &[0.0]).unwrap();
        let grid = Grid::uniform(0.0, 1.0, 64).unwrap();
        let bundle = integrate_fundamental(&spec, &grid, IntegratorOptions::default()).unwrap();
        let c = constant_matrix(&bundle, &spec, &GreenOptions::default()).unwrap();
        assert!(c.matrix().max_abs_diff(&Matrix::identity(2)) < 1e-14);
    }

    #[test]
    fn each_route_reproduces_analytic_values() {
        let (spec, bundle) = free_bundle(100);
        let (spec, bundle) = (Arc::new(spec), Arc::new(bundle));
        for route in Route::ALL {
            let g = build(route, spec.clone(), bundle.clone(), &GreenOptions::default()).unwrap();
            assert!((g.evaluate(0.25, 0.5).unwrap()[(0, 0)] + 0.125).abs() < 1e-14, "{route}");
            assert!((g.evaluate(0.5, 0.25).unwrap()[(0, 0)] + 0.125).abs() < 1e-14, "{route}");
            assert!((g.evaluate(0.5, 0.5).unwrap()[(0, 0)] + 0.25).abs() < 1e-14, "{route}");
            assert!(g.evaluate(0.0, 0.3).unwrap()[(0, 0)].abs() < 1e-15, "{route}");
            assert!(g.evaluate(1.0, 0.3).unwrap()[(0, 0)].abs() < 1e-15, "{route}");
            assert!(g.evaluate(0.3, 0.0).unwrap()[(0, 0)].abs() < 1e-15, "{route}");
            for &(x, t) in &[(0.13, 0.77), (0.61, 0.2), (0.9, 0.9)] {
                assert!((g.evaluate(x, t).unwrap()[(0, 0)] - analytic(x, t)).abs() < 1e-14, "{route}");
            }
        }
    }

    #[test]
    fn guess_coefficients_closed_form() {
        let (spec, bundle) = free_bundle(100);
        let g = build_guess(spec, bundle, &GreenOptions::default()).unwrap();
        for &t in &[0.0, 0.3, 0.5, 1.0] {
            let (s, tt) = g.guess_coefficients(t).unwrap();
            assert!((s[(0, 0)] - (t - 1.0)).abs() < 1e-14);
            assert!((tt[(0, 0)] - t).abs() < 1e-14);
        }
    }

    #[test]
    fn out_of_interval_arguments() {
        let (spec, bundle) = free_bundle(10);
        let g = build_compact(spec, bundle, &GreenOptions::default()).unwrap();
        assert!(matches!(g.evaluate(1.1, 0.5), Err(Error::OutOfInterval { .. })));
        assert!(matches!(g.evaluate(0.5, -0.1), Err(Error::OutOfInterval { .. })));
    }

    #[test]
    fn evaluation_is_pure() {
        let (spec, bundle) = free_bundle(17);
        let g = build_general(spec, bundle, &GreenOptions::default()).unwrap();
        let first = g.evaluate(0.123, 0.456).unwrap();
        for _ in 0..5 {
            assert_eq!(g.evaluate(0.123, 0.456).unwrap(), first);
        }
    }

    #[test]
    fn explicit_form_matches_compact() {
        let spec = OperatorSpec::constant(0.0, 1.0, &[1.0, 2.0], &[-1.0, 0.5], &[0.8]).unwrap();
        let grid = Grid::uniform(0.0, 1.0, 200).unwrap();
        let bundle = integrate_fundamental(&spec, &grid, IntegratorOptions::default()).unwrap();
        let g = build_compact(spec.clone(), bundle.clone(), &GreenOptions::default()).unwrap();
        for &(x, t) in &[(0.2, 0.7), (0.7, 0.2), (0.5, 0.5), (0.0, 0.4), (1.0, 0.4)] {
            let e = explicit_boundary_form(&spec, &bundle, x, t).unwrap();
            assert!(e.max_abs_diff(&g.evaluate(x, t).unwrap()) < 1e-12, "({x}, {t})");
        }
        assert!(matches!(
            explicit_boundary_form(&spec, &bundle, 0.5, 0.0),
            Err(Error::SingularBlock { .. })
        ));
    }

    #[test]
    fn resonant_operator_is_rejected() {
        let pi2 = std::f64::consts::PI.powi(2);
        let spec = OperatorSpec::constant(0.0, 1.0, &[1.0], &[pi2], &[]).unwrap();
        let grid = Grid::uniform(0.0, 1.0, 1000).unwrap();
        let bundle = integrate_fundamental(&spec, &grid, IntegratorOptions::default()).unwrap();
        let err = constant_matrix(&bundle, &spec, &GreenOptions::default()).unwrap_err();
        assert!(matches!(err, Error::SingularConstantMatrix { .. }), "{err}");
        let err = build_general(spec, bundle, &GreenOptions::default()).unwrap_err();
        assert!(matches!(err, Error::SingularBoundaryMatrix { .. }), "{err}");
    }

    #[test]
    fn boundary_matrices_shape() {
        let (_, bundle) = free_bundle(10);
        let bm = BoundaryMatrices::dirichlet(&bundle);
        assert_eq!(bm.b_a, Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]));
        assert_eq!(bm.b_b, Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0]]));
        // D = [[U(a), V(a)], [U(b), V(b)]] = [[0, -1], [1, 0]]
        assert!(bm.d.max_abs_diff(&Matrix::from_rows(&[[0.0, -1.0], [1.0, 0.0]])) < 1e-15);
    }
}
