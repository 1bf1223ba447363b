//! Machine-checkable versions of the defining properties of a Green's matrix.

use std::fmt;

use rayon::prelude::*;

use crate::error::Result;
use crate::green::{wronskian_analog, Branch, GreensMatrix};
use crate::matrix::Matrix;
use crate::odeint::SolutionBundle;
use crate::operator::OperatorSpec;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub symmetry: f64,
    pub continuity: f64,
    pub jump: f64,
    pub delta: f64,
    pub c_constancy: f64,
    pub wronskian: f64,
    pub boundary: f64,
    pub route: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            symmetry: 1e-8,
            continuity: 1e-8,
            jump: 1e-4,
            delta: 1e-5,
            c_constancy: 1e-8,
            wronskian: 1e-8,
            boundary: 1e-8,
            route: 1e-8,
        }
    }
}

/// Tensor-product set of `(x, t)` sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice<T> {
    pub xs: Vec<T>,
    pub ts: Vec<T>,
}

impl<T: Real> Lattice<T> {
    /// `nx × nt` uniformly spaced points strictly inside `(a, b)`.
    pub fn interior(a: T, b: T, nx: usize, nt: usize) -> Self {
        let pts = |m: usize| {
            let h = (b - a) / T::from_usize_lossy(m + 1);
            (1..=m).map(|i| a + T::from_usize_lossy(i) * h).collect()
        };
        Self { xs: pts(nx), ts: pts(nt) }
    }

    /// `nx × nt` uniformly spaced points including both endpoints.
    pub fn closed(a: T, b: T, nx: usize, nt: usize) -> Self {
        let pts = |m: usize| -> Vec<T> {
            if m == 1 {
                return vec![a];
            }
            let h = (b - a) / T::from_usize_lossy(m - 1);
            (0..m)
                .map(|i| if i + 1 == m { b } else { a + T::from_usize_lossy(i) * h })
                .collect()
        };
        Self { xs: pts(nx), ts: pts(nt) }
    }

    pub fn label(&self) -> String {
        format!("{}x{}", self.xs.len(), self.ts.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub sizes: String,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, error: f64, tolerance: f64, sizes: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            error,
            tolerance,
            // NaN never passes
            pass: error <= tolerance,
            sizes: sizes.into(),
        }
    }
}

impl fmt::Display for CheckRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<28} {:>12.4e} {:>9.1e} {} {}",
            self.name,
            self.error,
            self.tolerance,
            if self.pass { "PASS" } else { "FAIL" },
            self.sizes
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerificationReport {
    pub records: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn get(&self, name: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn push(&mut self, record: CheckRecord) {
        self.records.push(record);
    }

    /// Prefix every record name with `prefix/`.
    pub fn prefixed(mut self, prefix: &str) -> Self {
        for r in &mut self.records {
            r.name = format!("{prefix}/{}", r.name);
        }
        self
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.records.extend(other.records);
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.records {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

fn sizes<T: Real>(g: &GreensMatrix<T>, lattice: &Lattice<T>) -> String {
    format!("lattice={};N={}", lattice.label(), g.bundle().grid().cells())
}

fn par_max<I, F>(items: I, f: F) -> Result<f64>
where
    I: IntoParallelIterator,
    F: Fn(I::Item) -> Result<f64> + Sync + Send,
{
    let values: Vec<f64> = items.into_par_iter().map(f).collect::<Result<_>>()?;
    Ok(values.into_iter().fold(0.0, nan_max))
}

fn nan_max(acc: f64, v: f64) -> f64 {
    if v.is_nan() || acc.is_nan() {
        f64::NAN
    } else {
        acc.max(v)
    }
}

/// `max |G_ij(x,t) − G_ji(t,x)|` over the lattice.
pub fn check_symmetry<T: Real>(g: &GreensMatrix<T>, lattice: &Lattice<T>, tol: f64) -> Result<CheckRecord> {
    let err = par_max(&lattice.xs, |&x| {
        let mut m = 0.0;
        for &t in &lattice.ts {
            let gxt = g.evaluate(x, t)?;
            let gtx = g.evaluate(t, x)?;
            m = nan_max(m, gxt.max_abs_diff(&gtx.transpose()).as_f64());
        }
        Ok(m)
    })?;
    Ok(CheckRecord::new("symmetry", err, tol, sizes(g, lattice)))
}

/// Branch mismatch on the diagonal `x = t` for every lattice `t`.
pub fn check_continuity<T: Real>(g: &GreensMatrix<T>, lattice: &Lattice<T>, tol: f64) -> Result<CheckRecord> {
    let err = par_max(&lattice.ts, |&t| {
        let left = g.evaluate_branch(t, t, Branch::Left)?;
        let right = g.evaluate_branch(t, t, Branch::Right)?;
        Ok(left.max_abs_diff(&right).as_f64())
    })?;
    Ok(CheckRecord::new("continuity", err, tol, sizes(g, lattice)))
}

/// `G(a, t)` and `G(b, t)` for every lattice `t`.
pub fn check_boundary<T: Real>(g: &GreensMatrix<T>, lattice: &Lattice<T>, tol: f64) -> Result<CheckRecord> {
    let (a, b) = (g.spec().a(), g.spec().b());
    let err = par_max(&lattice.ts, |&t| {
        let ga = g.evaluate(a, t)?.max_abs().as_f64();
        let gb = g.evaluate(b, t)?.max_abs().as_f64();
        Ok(nan_max(ga, gb))
    })?;
    Ok(CheckRecord::new("boundary", err, tol, sizes(g, lattice)))
}

/// Measured `∂G/∂x(t⁺,t) − ∂G/∂x(t⁻,t)` against `P⁻¹(t)`.
///
/// One-sided second-order differences with steps `ε` and `2ε`, `ε = 2h`,
/// shrunk near the ends of the interval. Returns the diagonal and the
/// off-diagonal records.
pub fn check_jump<T: Real>(g: &GreensMatrix<T>, lattice: &Lattice<T>, tol: f64) -> Result<[CheckRecord; 2]> {
    let spec = g.spec();
    let n = g.dim();
    let h = g.bundle().grid().step();
    let four_h = T::lit(4.0) * h;
    let errs: Vec<(f64, f64)> = lattice
        .ts
        .par_iter()
        .map(|&t| {
            let reach = four_h.min(t - spec.a()).min(spec.b() - t);
            let e = reach / T::lit(2.0);
            let g0 = g.evaluate(t, t)?;
            let fwd = &(&g.evaluate_branch(t + e, t, Branch::Right)?.scale(T::lit(4.0)) - &g0.scale(T::lit(3.0)))
                - &g.evaluate_branch(t + reach, t, Branch::Right)?;
            let bwd = &(&g0.scale(T::lit(3.0)) - &g.evaluate_branch(t - e, t, Branch::Left)?.scale(T::lit(4.0)))
                + &g.evaluate_branch(t - reach, t, Branch::Left)?;
            let jump = (&fwd - &bwd).scale(T::one() / (T::lit(2.0) * e));
            let p = spec.p_values(t);
            let (mut diag, mut off) = (0.0f64, 0.0f64);
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        diag = nan_max(diag, (jump[(i, i)] - T::one() / p[i]).abs().as_f64());
                    } else {
                        off = nan_max(off, jump[(i, j)].abs().as_f64());
                    }
                }
            }
            Ok((diag, off))
        })
        .collect::<Result<_>>()?;
    let diag = errs.iter().fold(0.0, |m, e| nan_max(m, e.0));
    let off = errs.iter().fold(0.0, |m, e| nan_max(m, e.1));
    let s = sizes(g, lattice);
    Ok([
        CheckRecord::new("jump_diagonal", diag, tol, s.clone()),
        CheckRecord::new("jump_off_diagonal", off, tol, s),
    ])
}

fn sym_defect<T: Real>(m: &Matrix<T>) -> f64 {
    (m.max_abs_diff(&m.transpose()) / m.max_abs().max(T::one())).as_f64()
}

/// Four records: `UᵀPU′ − U′ᵀPU ≈ O`, the same for `V`, constancy of
/// `UᵀPV′ − U′ᵀPV` across interior nodes, and symmetry of `PU′U⁻¹`,
/// `PV′V⁻¹` and `(Uᵀ)⁻¹CV⁻¹` at interior lattice points.
pub fn check_wronskian_identities<T: Real>(
    bundle: &SolutionBundle<T>,
    spec: &OperatorSpec<T>,
    lattice: &Lattice<T>,
    tol_wronskian: f64,
    tol_c: f64,
) -> Result<[CheckRecord; 4]> {
    let grid = bundle.grid();
    let cells = grid.cells();
    let label = format!("lattice={};N={cells}", lattice.label());
    let identity_defect = |y: &Matrix<T>, dy: &Matrix<T>, p: &[T]| {
        let a = &y.transpose() * &dy.scale_rows(p);
        let b = &dy.transpose() * &y.scale_rows(p);
        let scale = (a.max_abs() + b.max_abs()).max(T::one());
        ((&a - &b).max_abs() / scale).as_f64()
    };
    let nodes: Vec<usize> = (1..cells).collect();
    let (uu, vv) = nodes
        .par_iter()
        .map(|&k| {
            let blk = bundle.at_node(k);
            let p = spec.p_values(grid.node(k));
            (identity_defect(&blk.u, &blk.du, &p), identity_defect(&blk.v, &blk.dv, &p))
        })
        .reduce(|| (0.0, 0.0), |x, y| (nan_max(x.0, y.0), nan_max(x.1, y.1)));

    let reference = cells / 2;
    let (c, _) = wronskian_analog(&bundle.at_node(reference), &spec.p_values(grid.node(reference)));
    let c_scale = c.max_abs();
    let variation = nodes
        .par_iter()
        .map(|&k| {
            let (ck, _) = wronskian_analog(&bundle.at_node(k), &spec.p_values(grid.node(k)));
            (ck.max_abs_diff(&c) / c_scale).as_f64()
        })
        .reduce(|| 0.0, nan_max);

    let forms = par_max(&lattice.xs, |&x| {
        let blk = bundle.evaluate(x)?;
        let p = spec.p_values(x);
        let u_inv = crate::blockalg::Lu::factor(&blk.u)?.inverse();
        let v_inv = crate::blockalg::Lu::factor(&blk.v)?.inverse();
        let ut_inv = u_inv.transpose();
        let pu = (&blk.du * &u_inv).scale_rows(&p);
        let pv = (&blk.dv * &v_inv).scale_rows(&p);
        let cform = &(&ut_inv * &c) * &v_inv;
        Ok(nan_max(nan_max(sym_defect(&pu), sym_defect(&pv)), sym_defect(&cform)))
    })?;

    Ok([
        CheckRecord::new("wronskian_u", uu, tol_wronskian, label.clone()),
        CheckRecord::new("wronskian_v", vv, tol_wronskian, label.clone()),
        CheckRecord::new("c_constancy", variation, tol_c, label.clone()),
        CheckRecord::new("symmetric_forms", forms, tol_wronskian, label),
    ])
}

/// Cubic B-spline bump of half-width `2w` centred at `t`, scaled so that
/// `φ(t) = 1`; returns `(φ, φ′)`.
fn bump<T: Real>(x: T, t: T, w: T) -> (T, T) {
    let s = (x - t) / w;
    let a = s.abs();
    let scale = T::lit(1.5);
    let (v, d) = if a <= T::one() {
        (
            T::lit(2.0 / 3.0) - s * s + a * a * a / T::lit(2.0),
            -T::lit(2.0) * s + T::lit(1.5) * s * a,
        )
    } else if a <= T::lit(2.0) {
        let r = T::lit(2.0) - a;
        (r * r * r / T::lit(6.0), -s.signum() * r * r / T::lit(2.0))
    } else {
        (T::zero(), T::zero())
    };
    (scale * v, scale * d / w)
}

/// Weak form of `M_x G(·, t) = δ(x − t) I`: for a bump `φ` centred at
/// `t_probe`,
///
/// ```text
/// ∫ (−p_i ∂ₓG_ik φ′ + (q_i G_ik + Σ_j V_ij G_jk) φ) dx = δ_ik φ(t_probe)
/// ```
///
/// integrated by Simpson's rule on each smooth piece of the integrand.
pub fn check_delta_residual<T: Real>(g: &GreensMatrix<T>, t_probe: T, width: T, tol: f64) -> Result<CheckRecord> {
    let spec = g.spec();
    let n = g.dim();
    let two = T::lit(2.0);
    let w = width.min((t_probe - spec.a()) / two).min((spec.b() - t_probe) / two);
    let knots: Vec<T> = (-2i32..=2).map(|k| t_probe + T::lit(f64::from(k)) * w).collect();
    const M: usize = 64;
    let integrand = |x: T, branch: Branch| -> Result<Matrix<T>> {
        let gx = g.evaluate_branch(x, t_probe, branch)?;
        let dgx = g.evaluate_dx_branch(x, t_probe, branch)?;
        let p = spec.p_values(x);
        let (phi, dphi) = bump(x, t_probe, w);
        let pot = spec.potential_matrix(x);
        let flux = dgx.scale_rows(&p).scale(-dphi);
        Ok(&flux + &(&pot * &gx).scale(phi))
    };
    let pieces: Vec<(T, T, Branch)> = (0..4)
        .map(|k| (knots[k], knots[k + 1], if k < 2 { Branch::Left } else { Branch::Right }))
        .collect();
    let parts: Vec<Matrix<T>> = pieces
        .par_iter()
        .map(|&(lo, hi, branch)| {
            let h = (hi - lo) / T::from_usize_lossy(M);
            let mut acc = Matrix::zeros(n, n);
            for j in 0..=M {
                let x = if j == M { hi } else { lo + T::from_usize_lossy(j) * h };
                let wgt = if j == 0 || j == M {
                    T::one()
                } else if j % 2 == 1 {
                    T::lit(4.0)
                } else {
                    two
                };
                acc = &acc + &integrand(x, branch)?.scale(wgt);
            }
            Ok(acc.scale(h / T::lit(3.0)))
        })
        .collect::<Result<_>>()?;
    let mut total = Matrix::zeros(n, n);
    for part in &parts {
        total = &total + part;
    }
    let err = total.max_abs_diff(&Matrix::identity(n)).as_f64();
    Ok(CheckRecord::new(
        "delta_residual",
        err,
        tol,
        format!("t={};width={};N={}", t_probe, w, g.bundle().grid().cells()),
    ))
}

/// Largest deviation of each of `others` from `reference` over the lattice.
pub fn check_route_equivalence<T: Real>(
    reference: &GreensMatrix<T>,
    others: &[&GreensMatrix<T>],
    lattice: &Lattice<T>,
    tol: f64,
) -> Result<CheckRecord> {
    let err = par_max(&lattice.xs, |&x| {
        let mut m = 0.0;
        for &t in &lattice.ts {
            let base = reference.evaluate(x, t)?;
            for other in others {
                m = nan_max(m, other.evaluate(x, t)?.max_abs_diff(&base).as_f64());
            }
        }
        Ok(m)
    })?;
    Ok(CheckRecord::new("route_equivalence", err, tol, sizes(reference, lattice)))
}

/// Every single-route check on `g`, in a fixed order.
pub fn full_report<T: Real>(g: &GreensMatrix<T>, lattice: &Lattice<T>, tol: &Tolerances) -> Result<VerificationReport> {
    let spec = g.spec();
    let mut report = VerificationReport::default();
    report.push(check_boundary(g, lattice, tol.boundary)?);
    report.push(check_symmetry(g, lattice, tol.symmetry)?);
    report.push(check_continuity(g, lattice, tol.continuity)?);
    report.records.extend(check_jump(g, lattice, tol.jump)?);
    report
        .records
        .extend(check_wronskian_identities(g.bundle(), spec, lattice, tol.wronskian, tol.c_constancy)?);
    let two = T::lit(2.0);
    let mid = (spec.a() + spec.b()) / two;
    let width = (spec.b() - spec.a()) / T::lit(8.0);
    report.push(check_delta_residual(g, mid, width, tol.delta)?);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green::{build, GreenOptions, Route};
    use crate::odeint::{integrate_fundamental, IntegratorOptions};
    use crate::operator::{CoefficientFn, Grid};

    fn green(spec: OperatorSpec<f64>, cells: usize, route: Route) -> GreensMatrix<f64> {
        let grid = Grid::uniform(spec.a(), spec.b(), cells).unwrap();
        let bundle = integrate_fundamental(&spec, &grid, IntegratorOptions::default()).unwrap();
        build(route, spec, bundle, &GreenOptions::default()).unwrap()
    }

    fn free() -> OperatorSpec<f64> {
        OperatorSpec::constant(0.0, 1.0, &[1.0], &[0.0], &[]).unwrap()
    }

    fn coupled() -> OperatorSpec<f64> {
        OperatorSpec::constant(0.0, 1.0, &[1.0, 1.0], &[0.0, 0.0], &[4.0]).unwrap()
    }

    #[test]
    fn lattices() {
        let l = Lattice::interior(0.0, 1.0, 3, 1);
        assert_eq!(l.xs, vec![0.25, 0.5, 0.75]);
        assert_eq!(l.ts, vec![0.5]);
        let c = Lattice::closed(0.0, 1.0, 5, 2);
        assert_eq!(c.xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(c.ts, vec![0.0, 1.0]);
        assert_eq!(l.label(), "3x1");
    }

    #[test]
    fn free_operator_passes_everything() {
        let g = green(free(), 1000, Route::Compact);
        let report = full_report(&g, &Lattice::interior(0.0, 1.0, 21, 21), &Tolerances::default()).unwrap();
        assert!(report.all_pass(), "{report}");
        assert_eq!(report.records.len(), 10);
        assert!(report.get("symmetry").unwrap().error < 1e-12);
        assert!(report.get("delta_residual").unwrap().error < 1e-6);
        assert!((report.get("jump_diagonal").unwrap().error) < 1e-8);
    }

    #[test]
    fn coupled_operator_passes_everything() {
        for route in Route::ALL {
            let g = green(coupled(), 1000, route);
            let report = full_report(&g, &Lattice::interior(0.0, 1.0, 21, 21), &Tolerances::default()).unwrap();
            assert!(report.all_pass(), "{route}\n{report}");
        }
    }

    #[test]
    fn variable_p_jump_is_reciprocal() {
        let spec = OperatorSpec::new(
            0.0,
            2.0,
            vec![CoefficientFn::expression("1 + x").unwrap()],
            vec![CoefficientFn::constant(0.0)],
            vec![],
        )
        .unwrap();
        let g = green(spec, 1000, Route::Compact);
        let lattice = Lattice { xs: vec![1.0], ts: vec![1.0] };
        let [diag, off] = check_jump(&g, &lattice, 1e-4).unwrap();
        assert!(diag.pass && off.pass, "{diag} {off}");
        let d = g.evaluate_dx_branch(1.0, 1.0, Branch::Right).unwrap()[(0, 0)]
            - g.evaluate_dx_branch(1.0, 1.0, Branch::Left).unwrap()[(0, 0)];
        assert!((d - 0.5).abs() < 1e-8);
    }

    #[test]
    fn decoupled_off_diagonal_blocks_vanish() {
        let spec = OperatorSpec::constant(0.0, 1.0, &[1.0, 2.0], &[0.0, -1.0], &[0.0]).unwrap();
        let g = green(spec, 200, Route::Compact);
        for (x, t) in [(0.2, 0.7), (0.7, 0.2), (0.5, 0.5)] {
            let m = g.evaluate(x, t).unwrap();
            assert_eq!(m[(0, 1)], 0.0);
            assert_eq!(m[(1, 0)], 0.0);
        }
    }

    #[test]
    fn coarse_grid_fails_jump() {
        let g = green(coupled(), 4, Route::Compact);
        let [diag, _] = check_jump(&g, &Lattice::interior(0.0, 1.0, 21, 21), 1e-4).unwrap();
        assert!(!diag.pass, "{diag}");
    }

    #[test]
    fn route_equivalence_record() {
        let gs: Vec<_> = Route::ALL.iter().map(|&r| green(coupled(), 500, r)).collect();
        let rec =
            check_route_equivalence(&gs[1], &[&gs[0], &gs[2]], &Lattice::interior(0.0, 1.0, 21, 21), 1e-8).unwrap();
        assert!(rec.pass, "{rec}");
    }

    #[test]
    fn delta_pattern_for_each_column() {
        let g = green(coupled(), 1000, Route::Guess);
        for t in [0.3, 0.5, 0.8] {
            let rec = check_delta_residual(&g, t, 0.1, 1e-5).unwrap();
            assert!(rec.pass, "{rec}");
        }
    }

    #[test]
    fn record_formatting() {
        let r = CheckRecord::new("symmetry", 1.5e-12, 1e-8, "lattice=21x21;N=1000");
        let line = r.to_string();
        let fields: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(fields, vec!["symmetry", "1.5000e-12", "1.0e-8", "PASS", "lattice=21x21;N=1000"]);
        assert!(!CheckRecord::new("x", f64::NAN, 1.0, "").pass);
    }

    #[test]
    fn bump_shape() {
        assert_eq!(bump(0.5, 0.5, 0.1), (1.0, 0.0));
        assert_eq!(bump(0.9, 0.5, 0.1), (0.0, 0.0));
        let e = 1e-6;
        let fd: f64 = (bump(0.63 + e, 0.5, 0.1).0 - bump(0.63 - e, 0.5, 0.1).0) / (2.0 * e);
        assert!((bump(0.63, 0.5, 0.1).1 - fd).abs() < 1e-6);
    }
}
