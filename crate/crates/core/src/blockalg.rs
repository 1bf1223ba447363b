//! Dense inversion: LU with partial pivoting and the Schur-complement block
//! inverse used for Wronskian matrices.

use crate::error::{Block, Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Real;

/// Default ceiling on the 1-norm condition number accepted by [`invert`].
pub const DEFAULT_COND_LIMIT: f64 = 1e12;

/// `P A = L U` with unit lower triangular `L`, stored packed.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Real> Lu<T> {
    pub fn factor(m: &Matrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.rows(),
                got: m.cols(),
            });
        }
        let n = m.rows();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (pivot_row, pivot) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot == T::zero() || !pivot.is_finite() {
                return Err(Error::Singular { column: k });
            }
            if pivot_row != k {
                perm.swap(k, pivot_row);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(pivot_row, j)];
                    lu[(pivot_row, j)] = tmp;
                }
            }
            let diag = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / diag;
                lu[(i, k)] = f;
                if f == T::zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    /// Solve `A x = b` for a single right-hand side.
    pub fn solve_vec(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    /// Solve `A X = B` column by column.
    pub fn solve(&self, b: &Matrix<T>) -> Matrix<T> {
        assert_eq!(b.rows(), self.dim());
        let mut out = Matrix::zeros(b.rows(), b.cols());
        let mut col = vec![T::zero(); b.rows()];
        for j in 0..b.cols() {
            for (i, c) in col.iter_mut().enumerate() {
                *c = b[(i, j)];
            }
            for (i, v) in self.solve_vec(&col).into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }

    pub fn inverse(&self) -> Matrix<T> {
        self.solve(&Matrix::identity(self.dim()))
    }
}

/// Inverse of `m` together with its 1-norm condition number
/// `‖m‖₁ ‖m⁻¹‖₁`. Fails on a zero pivot or when the condition number exceeds
/// `cond_limit`.
pub fn invert<T: Real>(m: &Matrix<T>, cond_limit: T) -> Result<(Matrix<T>, T)> {
    let inv = Lu::factor(m)?.inverse();
    let cond = m.norm1() * inv.norm1();
    if !cond.is_finite() || cond > cond_limit {
        return Err(Error::IllConditioned {
            estimate: cond.as_f64(),
            limit: cond_limit.as_f64(),
        });
    }
    Ok((inv, cond))
}

/// A `2n x 2n` matrix split into four `n x n` blocks `[[A, B], [C, D]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix2x2<T> {
    pub a: Matrix<T>,
    pub b: Matrix<T>,
    pub c: Matrix<T>,
    pub d: Matrix<T>,
}

impl<T: Real> BlockMatrix2x2<T> {
    pub fn new(a: Matrix<T>, b: Matrix<T>, c: Matrix<T>, d: Matrix<T>) -> Result<Self> {
        let n = a.rows();
        for m in [&a, &b, &c, &d] {
            if m.rows() != n || m.cols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: if m.rows() != n { m.rows() } else { m.cols() },
                });
            }
        }
        Ok(Self { a, b, c, d })
    }

    /// Split an assembled `2n x 2n` matrix.
    pub fn split(m: &Matrix<T>) -> Result<Self> {
        if !m.is_square() || !m.rows().is_multiple_of(2) {
            return Err(Error::DimensionMismatch {
                expected: 2 * (m.rows() / 2),
                got: m.cols(),
            });
        }
        let n = m.rows() / 2;
        Ok(Self {
            a: m.block(0, 0, n, n),
            b: m.block(0, n, n, n),
            c: m.block(n, 0, n, n),
            d: m.block(n, n, n, n),
        })
    }

    pub fn half_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn assemble(&self) -> Matrix<T> {
        Matrix::from_blocks(&self.a, &self.b, &self.c, &self.d)
    }
}

/// `S_A = D − C A⁻¹ B`, kept together with `A⁻¹` since every consumer needs both.
#[derive(Debug, Clone)]
pub struct SchurComplement<T> {
    pub s: Matrix<T>,
    pub a_inv: Matrix<T>,
}

impl<T: Real> SchurComplement<T> {
    pub fn of(m: &BlockMatrix2x2<T>) -> Result<Self> {
        let a_inv = invert_block(&m.a, Block::UpperLeft)?;
        let s = &m.d - &(&(&m.c * &a_inv) * &m.b);
        Ok(Self { s, a_inv })
    }
}

fn invert_block<T: Real>(m: &Matrix<T>, block: Block) -> Result<Matrix<T>> {
    match invert(m, T::lit(DEFAULT_COND_LIMIT)) {
        Ok((inv, _)) => Ok(inv),
        Err(Error::Singular { .. }) | Err(Error::IllConditioned { .. }) => {
            Err(Error::SingularBlock { block })
        }
        Err(e) => Err(e),
    }
}

/// Inverse through the block factorisation
///
/// ```text
/// [A B]⁻¹   [A⁻¹ + A⁻¹ B S⁻¹ C A⁻¹   −A⁻¹ B S⁻¹]
/// [C D]   = [−S⁻¹ C A⁻¹               S⁻¹      ],   S = D − C A⁻¹ B.
/// ```
pub fn block_invert<T: Real>(m: &BlockMatrix2x2<T>) -> Result<BlockMatrix2x2<T>> {
    let SchurComplement { s, a_inv } = SchurComplement::of(m)?;
    let s_inv = invert_block(&s, Block::SchurComplement)?;
    let a_inv_b = &a_inv * &m.b;
    let c_a_inv = &m.c * &a_inv;
    let a_inv_b_s_inv = &a_inv_b * &s_inv;
    let upper_left = &a_inv + &(&a_inv_b_s_inv * &c_a_inv);
    let upper_right = -&a_inv_b_s_inv;
    let lower_left = -&(&s_inv * &c_a_inv);
    Ok(BlockMatrix2x2 {
        a: upper_left,
        b: upper_right,
        c: lower_left,
        d: s_inv,
    })
}

/// Inverse of the Wronskian matrix `[[U, V], [U′, V′]]`, with Schur complement
/// `V′ − U′ U⁻¹ V`. `U` is singular at the left endpoint, so this is only
/// usable strictly inside the interval.
pub fn wronskian_inverse<T: Real>(
    u: &Matrix<T>,
    v: &Matrix<T>,
    du: &Matrix<T>,
    dv: &Matrix<T>,
) -> Result<BlockMatrix2x2<T>> {
    let w = BlockMatrix2x2::new(u.clone(), v.clone(), du.clone(), dv.clone())?;
    block_invert(&w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[[f64; 2]]) -> Matrix<f64> {
        Matrix::from_rows(rows)
    }

    #[test]
    fn invert_identity() {
        let (inv, cond) = invert(&Matrix::<f64>::identity(3), 1e12).unwrap();
        assert_eq!(inv, Matrix::identity(3));
        assert_eq!(cond, 1.0);
    }

    #[test]
    fn invert_diagonal() {
        let (inv, _) = invert(&m(&[[2.0, 0.0], [0.0, 4.0]]), 1e12).unwrap();
        assert_eq!(inv, m(&[[0.5, 0.0], [0.0, 0.25]]));
    }

    #[test]
    fn invert_two_by_two() {
        let a = m(&[[2.0, 1.0], [1.0, 1.0]]);
        let (inv, _) = invert(&a, 1e12).unwrap();
        assert!(inv.max_abs_diff(&m(&[[1.0, -1.0], [-1.0, 2.0]])) < 1e-15);
        assert!((&a * &inv).max_abs_diff(&Matrix::identity(2)) < 1e-15);
    }

    #[test]
    fn invert_rejects_singular_and_ill_conditioned() {
        let singular = m(&[[1.0, 2.0], [2.0, 4.0]]);
        assert!(matches!(
            invert(&singular, 1e12),
            Err(Error::Singular { .. }) | Err(Error::IllConditioned { .. })
        ));
        let near = m(&[[1.0, 0.0], [0.0, 1e-9]]);
        assert!(matches!(invert(&near, 1e6), Err(Error::IllConditioned { .. })));
        assert!(invert(&near, 1e12).is_ok());
    }

    #[test]
    fn block_invert_identity() {
        let i = Matrix::<f64>::identity(2);
        let z = Matrix::zeros(2, 2);
        let bm = BlockMatrix2x2::new(i.clone(), z.clone(), z.clone(), i.clone()).unwrap();
        assert_eq!(block_invert(&bm).unwrap(), bm);
    }

    #[test]
    fn block_invert_scalar_blocks() {
        let a = m(&[[2.0, 1.0], [1.0, 1.0]]);
        let inv = block_invert(&BlockMatrix2x2::split(&a).unwrap()).unwrap().assemble();
        assert!(inv.max_abs_diff(&m(&[[1.0, -1.0], [-1.0, 2.0]])) < 1e-15);
    }

    #[test]
    fn wronskian_inverse_of_linear_solutions() {
        // u = x, v = x - 1 at x = 1/2, det W = 1
        let s = |v: f64| Matrix::from_rows(&[[v]]);
        let inv = wronskian_inverse(&s(0.5), &s(-0.5), &s(1.0), &s(1.0)).unwrap();
        assert!(inv.assemble().max_abs_diff(&m(&[[1.0, 0.5], [-1.0, 0.5]])) < 1e-15);
    }

    #[test]
    fn wronskian_inverse_identity() {
        let i = Matrix::<f64>::identity(3);
        let z = Matrix::zeros(3, 3);
        let inv = wronskian_inverse(&i, &z, &z, &i).unwrap();
        assert_eq!(inv.assemble(), Matrix::identity(6));
    }

    #[test]
    fn wronskian_inverse_reports_which_block() {
        let s = |v: f64| Matrix::from_rows(&[[v]]);
        assert!(matches!(
            wronskian_inverse(&s(0.0), &s(-1.0), &s(1.0), &s(1.0)),
            Err(Error::SingularBlock { block: Block::UpperLeft })
        ));
        // S = V' - U' U^-1 V = 1 - 1 * 1 * 1 = 0
        assert!(matches!(
            wronskian_inverse(&s(1.0), &s(1.0), &s(1.0), &s(1.0)),
            Err(Error::SingularBlock { block: Block::SchurComplement })
        ));
    }

    #[test]
    fn block_diagonal_stays_block_diagonal() {
        let a = m(&[[3.0, 1.0], [0.5, 2.0]]);
        let d = m(&[[1.0, -1.0], [2.0, 5.0]]);
        let z = Matrix::zeros(2, 2);
        let inv = block_invert(&BlockMatrix2x2::new(a.clone(), z.clone(), z.clone(), d.clone()).unwrap())
            .unwrap();
        assert_eq!(inv.b.max_abs(), 0.0);
        assert_eq!(inv.c.max_abs(), 0.0);
        assert!(inv.a.max_abs_diff(&invert(&a, 1e12).unwrap().0) < 1e-15);
        assert!(inv.d.max_abs_diff(&invert(&d, 1e12).unwrap().0) < 1e-15);
    }
}
