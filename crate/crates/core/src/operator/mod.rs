//! The operator `M = diag(d/dx p_i d/dx + q_i) + V` on `[a, b]`, with a
//! symmetric off-diagonal potential `V`, and its first-order companion form.

pub mod expr;
pub mod table;

use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;

pub use expr::{Expr, ParseError};
pub use table::Table;

/// Prefix marking a coefficient source as a path to a two-column table.
pub const TABLE_PREFIX: &str = "table:";

/// A coefficient function of `x`: a closed-form expression or tabulated data.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientFn<T> {
    Expression { source: String, expr: Expr },
    Tabulated { origin: String, table: Table<T> },
}

impl<T: Real> CoefficientFn<T> {
    pub fn constant(value: f64) -> Self {
        CoefficientFn::Expression {
            source: format!("{value:?}"),
            expr: Expr::Num(value),
        }
    }

    pub fn expression(source: &str) -> Result<Self> {
        Ok(CoefficientFn::Expression {
            source: source.to_string(),
            expr: Expr::parse(source)?,
        })
    }

    pub fn tabulated(table: Table<T>, origin: &str) -> Self {
        CoefficientFn::Tabulated {
            origin: origin.to_string(),
            table,
        }
    }

    pub fn eval(&self, x: T) -> T {
        match self {
            CoefficientFn::Expression { expr, .. } => expr.eval(x),
            CoefficientFn::Tabulated { table, .. } => table.eval(x),
        }
    }

    /// Value and first derivative; analytic for expressions, the
    /// interpolant's derivative for tables.
    pub fn eval_with_derivative(&self, x: T) -> (T, T) {
        match self {
            CoefficientFn::Expression { expr, .. } => expr.eval_with_derivative(x),
            CoefficientFn::Tabulated { table, .. } => table.eval_with_derivative(x),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, CoefficientFn::Expression { expr, .. } if expr.is_constant())
    }

    /// Human readable origin: the expression text or the table path.
    pub fn describe(&self) -> &str {
        match self {
            CoefficientFn::Expression { source, .. } => source,
            CoefficientFn::Tabulated { origin, .. } => origin,
        }
    }

    pub fn check_covers(&self, a: T, b: T) -> Result<()> {
        match self {
            CoefficientFn::Tabulated { origin, table } if !table.covers(a, b) => {
                let (lo, hi) = table.domain();
                Err(Error::Table {
                    origin: origin.clone(),
                    reason: format!("samples span [{lo}, {hi}] but the interval is [{a}, {b}]"),
                })
            }
            _ => Ok(()),
        }
    }
}

/// Parse a coefficient source: an expression, or `table:PATH` naming a
/// two-column file. Relative table paths resolve against the working directory.
pub fn parse_coefficient<T: Real>(source: &str) -> Result<CoefficientFn<T>> {
    parse_coefficient_in(source, Path::new("."))
}

/// As [`parse_coefficient`], resolving relative table paths against `base`.
pub fn parse_coefficient_in<T: Real>(source: &str, base: &Path) -> Result<CoefficientFn<T>> {
    let source = source.trim();
    match source.strip_prefix(TABLE_PREFIX) {
        Some(path) => {
            let path = base.join(path.trim());
            let origin = path.display().to_string();
            let text = std::fs::read_to_string(&path).map_err(|e| Error::Table {
                origin: origin.clone(),
                reason: e.to_string(),
            })?;
            Ok(CoefficientFn::tabulated(Table::parse(&text, &origin)?, &origin))
        }
        None => CoefficientFn::expression(source),
    }
}

/// `N + 1` uniformly spaced nodes with `x_0 = a` and `x_N = b` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    nodes: Vec<T>,
    step: T,
}

impl<T: Real> Grid<T> {
    pub fn uniform(a: T, b: T, cells: usize) -> Result<Self> {
        if cells < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 cells, got {cells}")));
        }
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidGrid(format!("need finite a < b, got [{a}, {b}]")));
        }
        let len = b - a;
        let nc = T::from_usize_lossy(cells);
        let mut nodes: Vec<T> = (0..=cells)
            .map(|k| a + len * (T::from_usize_lossy(k) / nc))
            .collect();
        nodes[0] = a;
        nodes[cells] = b;
        Ok(Self {
            nodes,
            step: len / nc,
        })
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> T {
        self.nodes[k]
    }

    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn a(&self) -> T {
        self.nodes[0]
    }

    pub fn b(&self) -> T {
        self.nodes[self.nodes.len() - 1]
    }

    /// Cell index `k` with `x_k <= x <= x_{k+1}`, clamped to the grid.
    pub fn cell_of(&self, x: T) -> usize {
        let raw = ((x - self.a()) / self.step).floor();
        let k = raw.to_usize().unwrap_or(0).min(self.cells() - 1);
        // rounding in the division can land one cell off
        if k > 0 && x < self.nodes[k] {
            k - 1
        } else if k + 1 < self.cells() && x >= self.nodes[k + 1] {
            k + 1
        } else {
            k
        }
    }
}

/// Full description of the operator. Off-diagonal potentials are stored for
/// `i < j` only, so `V_ij = V_ji` holds by construction.
#[derive(Debug, Clone)]
pub struct OperatorSpec<T> {
    a: T,
    b: T,
    p: Vec<CoefficientFn<T>>,
    q: Vec<CoefficientFn<T>>,
    couplings: Vec<CoefficientFn<T>>,
}

/// Number of strictly upper triangular entries of an `n x n` matrix.
pub fn coupling_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

fn coupling_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

impl<T: Real> OperatorSpec<T> {
    /// `couplings` lists `V_ij` for `i < j` row by row:
    /// `V_12, V_13, …, V_1n, V_23, …`.
    pub fn new(
        a: T,
        b: T,
        p: Vec<CoefficientFn<T>>,
        q: Vec<CoefficientFn<T>>,
        couplings: Vec<CoefficientFn<T>>,
    ) -> Result<Self> {
        let n = p.len();
        if n == 0 {
            return Err(Error::InvalidOperator("dimension n must be at least 1".into()));
        }
        if q.len() != n {
            return Err(Error::InvalidOperator(format!(
                "{n} leading coefficients but {} potentials q",
                q.len()
            )));
        }
        if couplings.len() != coupling_count(n) {
            return Err(Error::InvalidOperator(format!(
                "n = {n} needs {} couplings V_ij (i < j), got {}",
                coupling_count(n),
                couplings.len()
            )));
        }
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidOperator(format!("need finite a < b, got [{a}, {b}]")));
        }
        for f in p.iter().chain(&q).chain(&couplings) {
            f.check_covers(a, b)?;
        }
        Ok(Self { a, b, p, q, couplings })
    }

    /// Operator with constant coefficients; `couplings` as in [`OperatorSpec::new`].
    pub fn constant(a: T, b: T, p: &[f64], q: &[f64], couplings: &[f64]) -> Result<Self> {
        let lift = |vs: &[f64]| vs.iter().map(|&v| CoefficientFn::constant(v)).collect();
        Self::new(a, b, lift(p), lift(q), lift(couplings))
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn b(&self) -> T {
        self.b
    }

    pub fn p(&self, i: usize) -> &CoefficientFn<T> {
        &self.p[i]
    }

    pub fn q(&self, i: usize) -> &CoefficientFn<T> {
        &self.q[i]
    }

    /// `V_ij` for `i != j`, in either order.
    pub fn coupling(&self, i: usize, j: usize) -> Option<&CoefficientFn<T>> {
        let n = self.dim();
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Less => Some(&self.couplings[coupling_index(n, i, j)]),
            std::cmp::Ordering::Greater => Some(&self.couplings[coupling_index(n, j, i)]),
        }
    }

    pub fn contains(&self, x: T) -> bool {
        self.a <= x && x <= self.b
    }

    pub fn p_values(&self, x: T) -> Vec<T> {
        self.p.iter().map(|f| f.eval(x)).collect()
    }

    /// The symmetric potential matrix: `q_i` on the diagonal, `V_ij` off it.
    pub fn potential_matrix(&self, x: T) -> Matrix<T> {
        let n = self.dim();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.q[i].eval(x);
            for j in i + 1..n {
                let v = self.couplings[coupling_index(n, i, j)].eval(x);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    /// Check on the working grid that every `p_i` is nonzero and every
    /// coefficient finite.
    pub fn validate_on(&self, grid: &Grid<T>) -> Result<()> {
        let n = self.dim();
        for &x in grid.nodes() {
            for (i, p) in self.p_values(x).into_iter().enumerate() {
                if p == T::zero() {
                    return Err(Error::SingularLeadingCoefficient { index: i + 1, x: x.as_f64() });
                }
                if !p.is_finite() {
                    return Err(Error::NonFiniteCoefficient { name: format!("p{}", i + 1), x: x.as_f64() });
                }
            }
            let v = self.potential_matrix(x);
            for i in 0..n {
                for j in i..n {
                    if !v[(i, j)].is_finite() {
                        let name = if i == j { format!("q{}", i + 1) } else { format!("V{}{}", i + 1, j + 1) };
                        return Err(Error::NonFiniteCoefficient { name, x: x.as_f64() });
                    }
                }
            }
        }
        Ok(())
    }

    /// The `2n x 2n` matrix `A(x)` of the first-order system `z' = A z` with
    /// `z = (y, y')`:
    ///
    /// ```text
    /// A = [      0            I      ]
    ///     [ -P⁻¹ (Q + V)   -P⁻¹ P'   ]
    /// ```
    pub fn companion_matrix(&self, x: T) -> Result<Matrix<T>> {
        let n = self.dim();
        let mut a = Matrix::zeros(2 * n, 2 * n);
        let pot = self.potential_matrix(x);
        for i in 0..n {
            let (p, dp) = self.p[i].eval_with_derivative(x);
            if p == T::zero() {
                return Err(Error::SingularLeadingCoefficient { index: i + 1, x: x.as_f64() });
            }
            a[(i, n + i)] = T::one();
            for j in 0..n {
                a[(n + i, j)] = -pot[(i, j)] / p;
            }
            a[(n + i, n + i)] = -dp / p;
        }
        Ok(a)
    }

    /// `(M y)(x_k)` at the interior nodes `k = 1..N-1` by the conservative
    /// second-order stencil
    /// `[p_{k+½}(y_{k+1} − y_k) − p_{k−½}(y_k − y_{k−1})] / h²`.
    ///
    /// `y[k][i]` is component `i` at node `k`. Diagnostic only.
    pub fn apply(&self, grid: &Grid<T>, y: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
        let n = self.dim();
        if y.len() != grid.nodes().len() {
            return Err(Error::DimensionMismatch {
                expected: grid.nodes().len(),
                got: y.len(),
            });
        }
        if let Some(bad) = y.iter().find(|row| row.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: bad.len() });
        }
        let h = grid.step();
        let h2 = h * h;
        let half = T::lit(0.5);
        let nodes = grid.nodes();
        let mut out = Vec::with_capacity(nodes.len().saturating_sub(2));
        for k in 1..nodes.len() - 1 {
            let x = nodes[k];
            let left = (nodes[k - 1] + x) * half;
            let right = (x + nodes[k + 1]) * half;
            let pot = self.potential_matrix(x);
            let row: Vec<T> = (0..n)
                .map(|i| {
                    let pl = self.p[i].eval(left);
                    let pr = self.p[i].eval(right);
                    let flux = pr * (y[k + 1][i] - y[k][i]) - pl * (y[k][i] - y[k - 1][i]);
                    let coupling: T = (0..n).map(|j| pot[(i, j)] * y[k][j]).sum();
                    flux / h2 + coupling
                })
                .collect();
            out.push(row);
        }
        Ok(out)
    }
}
