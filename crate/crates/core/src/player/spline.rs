use crate::error::{Error, Result};

/// Scalar cubic spline with prescribed first derivatives at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    /// Second derivative at each knot.
    curvature: Vec<f64>,
}

impl CubicSpline {
    /// Interpolates `values` at strictly increasing `knots` with end slopes
    /// `start_slope` and `end_slope`. A single knot yields a constant.
    pub fn clamped(knots: &[f64], values: &[f64], start_slope: f64, end_slope: f64) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(Error::Input(format!(
                "spline needs matching non-empty knots and values ({} vs {})",
                knots.len(),
                values.len()
            )));
        }
        if knots.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            return Err(Error::Input("spline knots must be strictly increasing".into()));
        }
        let n = knots.len();
        if n == 1 {
            return Ok(Self {
                knots: knots.to_vec(),
                values: values.to_vec(),
                curvature: vec![0.0],
            });
        }

        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let slope: Vec<f64> = (0..n - 1).map(|i| (values[i + 1] - values[i]) / h[i]).collect();

        // Tridiagonal system for the knot curvatures.
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        diag[0] = 2.0 * h[0];
        sup[0] = h[0];
        rhs[0] = 6.0 * (slope[0] - start_slope);
        for i in 1..n - 1 {
            sub[i] = h[i - 1];
            diag[i] = 2.0 * (h[i - 1] + h[i]);
            sup[i] = h[i];
            rhs[i] = 6.0 * (slope[i] - slope[i - 1]);
        }
        sub[n - 1] = h[n - 2];
        diag[n - 1] = 2.0 * h[n - 2];
        rhs[n - 1] = 6.0 * (end_slope - slope[n - 2]);

        // Thomas algorithm; the matrix is strictly diagonally dominant.
        for i in 1..n {
            let w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut curvature = vec![0.0; n];
        curvature[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            curvature[i] = (rhs[i] - sup[i] * curvature[i + 1]) / diag[i];
        }

        Ok(Self {
            knots: knots.to_vec(),
            values: values.to_vec(),
            curvature,
        })
    }

    fn segment(&self, t: f64) -> usize {
        let last = self.knots.len() - 2;
        match self.knots.binary_search_by(|k| k.total_cmp(&t)) {
            Ok(i) => i.min(last),
            Err(i) => i.saturating_sub(1).min(last),
        }
    }

    /// Value at `t`; callers keep `t` inside the knot span.
    pub fn eval(&self, t: f64) -> f64 {
        if self.knots.len() == 1 {
            return self.values[0];
        }
        let i = self.segment(t);
        let (t0, t1) = (self.knots[i], self.knots[i + 1]);
        if t == t0 {
            return self.values[i];
        }
        if t == t1 {
            return self.values[i + 1];
        }
        let h = t1 - t0;
        let (m0, m1) = (self.curvature[i], self.curvature[i + 1]);
        let (a, b) = (t1 - t, t - t0);
        m0 * a.powi(3) / (6.0 * h)
            + m1 * b.powi(3) / (6.0 * h)
            + (self.values[i] / h - m0 * h / 6.0) * a
            + (self.values[i + 1] / h - m1 * h / 6.0) * b
    }

    /// First derivative at `t`.
    pub fn derivative(&self, t: f64) -> f64 {
        if self.knots.len() == 1 {
            return 0.0;
        }
        let i = self.segment(t);
        let (t0, t1) = (self.knots[i], self.knots[i + 1]);
        let h = t1 - t0;
        let (m0, m1) = (self.curvature[i], self.curvature[i + 1]);
        let (a, b) = (t1 - t, t - t0);
        -m0 * a * a / (2.0 * h) + m1 * b * b / (2.0 * h) + (self.values[i + 1] - self.values[i]) / h
            - (m1 - m0) * h / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_knot_is_constant() {
        let s = CubicSpline::clamped(&[0.5], &[2.0], 1.0, 0.0).unwrap();
        assert_eq!(s.eval(0.5), 2.0);
        assert_eq!(s.derivative(0.5), 0.0);
    }

    #[test]
    fn reproduces_cubic_with_matching_end_slopes() {
        // y = t³ - t has slopes -1 at 0 and 26 at 3; a clamped spline on any
        // knot set reproduces it exactly.
        let f = |t: f64| t * t * t - t;
        let knots = [0.0, 0.7, 1.1, 2.0, 3.0];
        let values: Vec<f64> = knots.iter().map(|&t| f(t)).collect();
        let s = CubicSpline::clamped(&knots, &values, -1.0, 26.0).unwrap();
        for i in 0..=60 {
            let t = 3.0 * i as f64 / 60.0;
            assert!((s.eval(t) - f(t)).abs() < 1e-10, "t = {t}");
            assert!((s.derivative(t) - (3.0 * t * t - 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_unsorted_knots() {
        assert!(CubicSpline::clamped(&[0.0, 0.0], &[1.0, 2.0], 0.0, 0.0).is_err());
        assert!(CubicSpline::clamped(&[], &[], 0.0, 0.0).is_err());
    }
}
