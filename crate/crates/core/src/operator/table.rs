//! Tabulated coefficients with a monotone piecewise-cubic (Fritsch–Carlson)
//! interpolant.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Table<T> {
    xs: Vec<T>,
    ys: Vec<T>,
    slopes: Vec<T>,
}

impl<T: Real> Table<T> {
    pub fn new(xs: Vec<T>, ys: Vec<T>, origin: &str) -> Result<Self> {
        let fail = |reason: String| Error::Table {
            origin: origin.to_string(),
            reason,
        };
        if xs.len() != ys.len() {
            return Err(fail(format!("{} abscissae but {} values", xs.len(), ys.len())));
        }
        if xs.len() < 2 {
            return Err(fail("at least two samples are required".into()));
        }
        if let Some(k) = xs.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(fail(format!(
                "abscissae not strictly increasing at row {} (x = {})",
                k + 2,
                xs[k + 1]
            )));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(fail("non-finite sample".into()));
        }
        let slopes = pchip_slopes(&xs, &ys);
        Ok(Self { xs, ys, slopes })
    }

    /// Parse whitespace separated `x value` rows. Blank lines and lines starting
    /// with `#` are skipped.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parsed = match fields.as_slice() {
                [x, y] => x.parse::<f64>().ok().zip(y.parse::<f64>().ok()),
                _ => None,
            };
            let (x, y) = parsed.ok_or_else(|| Error::Table {
                origin: origin.to_string(),
                reason: format!("line {}: expected two numeric columns", lineno + 1),
            })?;
            xs.push(T::lit(x));
            ys.push(T::lit(y));
        }
        Self::new(xs, ys, origin)
    }

    pub fn domain(&self) -> (T, T) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    pub fn covers(&self, a: T, b: T) -> bool {
        let (lo, hi) = self.domain();
        lo <= a && b <= hi
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    fn segment(&self, x: T) -> usize {
        let k = self.xs.partition_point(|&xi| xi <= x);
        k.clamp(1, self.xs.len() - 1) - 1
    }

    pub fn eval(&self, x: T) -> T {
        self.eval_with_derivative(x).0
    }

    pub fn eval_with_derivative(&self, x: T) -> (T, T) {
        let k = self.segment(x);
        let h = self.xs[k + 1] - self.xs[k];
        let s = (x - self.xs[k]) / h;
        let (y0, y1) = (self.ys[k], self.ys[k + 1]);
        let (m0, m1) = (self.slopes[k], self.slopes[k + 1]);
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = -two * s3 + three * s2;
        let h11 = s3 - s2;
        let value = h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1;
        let six = T::lit(6.0);
        let d00 = six * s2 - six * s;
        let d10 = three * s2 - T::lit(4.0) * s + T::one();
        let d01 = -d00;
        let d11 = three * s2 - two * s;
        let deriv = (d00 * y0 + d01 * y1) / h + d10 * m0 + d11 * m1;
        (value, deriv)
    }
}

fn pchip_slopes<T: Real>(xs: &[T], ys: &[T]) -> Vec<T> {
    let n = xs.len();
    let h: Vec<T> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<T> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut m = vec![T::zero(); n];
    let two = T::lit(2.0);
    for k in 1..n - 1 {
        let (d0, d1) = (delta[k - 1], delta[k]);
        if d0 * d1 > T::zero() {
            let w1 = two * h[k] + h[k - 1];
            let w2 = h[k] + two * h[k - 1];
            m[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
        }
    }
    m[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    m
}

// Shape-preserving three-point end condition.
fn edge_slope<T: Real>(h0: T, h1: T, d0: T, d1: T) -> T {
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let m = ((two * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() {
        T::zero()
    } else if d0.signum() != d1.signum() && m.abs() > three * d0.abs() {
        three * d0
    } else {
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_samples_and_lines() {
        let t = Table::<f64>::parse("0 1\n1 3\n2 5\n4 9\n", "mem").unwrap();
        for (x, y) in [(0.0, 1.0), (1.0, 3.0), (2.0, 5.0), (4.0, 9.0)] {
            assert_eq!(t.eval(x), y);
        }
        let (v, d) = t.eval_with_derivative(2.7);
        assert!((v - 6.4).abs() < 1e-14);
        assert!((d - 2.0).abs() < 1e-14);
    }

    #[test]
    fn monotone_data_stays_monotone() {
        let t = Table::<f64>::parse("0 0\n1 0\n2 1\n3 1\n", "mem").unwrap();
        let mut prev = t.eval(0.0);
        for k in 0..=300 {
            let v = t.eval(f64::from(k) / 100.0);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let rows: String = (0..=40)
            .map(|k| {
                let x = 0.5 + f64::from(k) * 0.1;
                format!("{x} {}\n", -(1.0 + 1.0 / (x * x)))
            })
            .collect();
        let t = Table::<f64>::parse(&rows, "mem").unwrap();
        let x = 1.234;
        let e = 1e-6;
        let fd = (t.eval(x + e) - t.eval(x - e)) / (2.0 * e);
        assert!((t.eval_with_derivative(x).1 - fd).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(Table::<f64>::parse("0 1\n0 2\n", "t").is_err());
        assert!(Table::<f64>::parse("0 1\n2 2\n1 3\n", "t").is_err());
        assert!(Table::<f64>::parse("0 1\n", "t").is_err());
        assert!(Table::<f64>::parse("0 1 2\n1 2 3\n", "t").is_err());
        assert!(Table::<f64>::parse("0 a\n1 2\n", "t").is_err());
        let msg = Table::<f64>::parse("# c\n0 1\n0.5 1\n0.5 1\n", "f.dat").unwrap_err().to_string();
        assert!(msg.contains("f.dat") && msg.contains("strictly increasing"), "{msg}");
    }

    #[test]
    fn coverage() {
        let t = Table::<f64>::parse("0.5 1\n5 2\n", "t").unwrap();
        assert!(t.covers(0.5, 5.0));
        assert!(!t.covers(0.4, 5.0));
        assert!(!t.covers(0.5, 5.1));
    }
}
