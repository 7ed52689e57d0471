//! Small numerical helpers shared across modules.

use num_complex::Complex64;

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
    largest_term: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
        self.largest_term = self.largest_term.max(x.abs());
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }

    /// Decimal digits lost to cancellation: log10(max |term| / |sum|).
    pub fn digits_lost(&self) -> f64 {
        let v = self.value().abs();
        if self.largest_term == 0.0 {
            0.0
        } else if v == 0.0 {
            f64::INFINITY
        } else {
            (self.largest_term / v).log10().max(0.0)
        }
    }
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson) on a
/// uniform grid.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x0: f64,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x0: f64, step: f64, values: Vec<f64>) -> Self {
        let n = values.len();
        assert!(n >= 2 && step > 0.0);
        let secants: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]) / step).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            let (d0, d1) = (secants[i - 1], secants[i]);
            slopes[i] = if d0 * d1 <= 0.0 {
                0.0
            } else {
                // Harmonic mean keeps the interpolant monotone on uniform grids.
                2.0 * d0 * d1 / (d0 + d1)
            };
        }
        MonotoneCubic {
            x0,
            step,
            values,
            slopes,
        }
    }

    /// Cubic Hermite interpolant with known derivatives at the nodes.
    pub fn with_slopes(x0: f64, step: f64, values: Vec<f64>, slopes: Vec<f64>) -> Self {
        assert!(values.len() >= 2 && values.len() == slopes.len() && step > 0.0);
        MonotoneCubic {
            x0,
            step,
            values,
            slopes,
        }
    }

    pub fn end(&self) -> f64 {
        self.x0 + self.step * (self.values.len() - 1) as f64
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        if x <= self.x0 {
            return self.values[0];
        }
        if x >= self.end() {
            return self.values[n - 1];
        }
        let pos = (x - self.x0) / self.step;
        let i = (pos.floor() as usize).min(n - 2);
        let u = pos - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * self.step, self.slopes[i + 1] * self.step);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * m0 + (-2.0 * u3 + 3.0 * u2) * y1 + (u3 - u2) * m1
    }
}

/// Pool-adjacent-violators: least-squares nondecreasing fit.
pub fn isotonic_nondecreasing(values: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() >= 2 {
            let (m2, n2) = blocks[blocks.len() - 1];
            let (m1, n1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let total = n1 + n2;
            let last = blocks.last_mut().expect("two blocks present");
            *last = ((m1 * n1 as f64 + m2 * n2 as f64) / total as f64, total);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, n)| std::iter::repeat_n(m, n))
        .collect()
}

/// (1 − e^{−z})/z, continuous through z = 0.
pub fn one_minus_exp_over(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        // 1 − z/2 + z²/6 − z³/24
        Complex64::new(1.0, 0.0) - z / 2.0 + z * z / 6.0 - z * z * z / 24.0
    } else {
        (Complex64::new(1.0, 0.0) - (-z).exp()) / z
    }
}

/// Parses `start:stop:step` into an inclusive grid.
pub fn parse_grid(spec: &str) -> Option<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return None;
    }
    let start: f64 = parts[0].trim().parse().ok()?;
    let stop: f64 = parts[1].trim().parse().ok()?;
    let step: f64 = parts[2].trim().parse().ok()?;
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return None;
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Some((0..=n).map(|i| start + step * i as f64).collect())
}

/// `n` points spaced evenly in log scale on [lo, hi].
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        for x in [1e16, 1.0, -1e16, 1.0] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
        assert!(s.digits_lost() > 15.0);
    }

    #[test]
    fn monotone_cubic_interpolates_and_preserves_order() {
        let xs: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 - (-x).exp()).collect();
        let p = MonotoneCubic::new(0.0, 0.5, ys);
        assert!((p.eval(1.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-14);
        assert!((p.eval(1.25) - (1.0 - (-1.25f64).exp())).abs() < 2e-3);
        let mut last = -1.0;
        for i in 0..1000 {
            let v = p.eval(i as f64 * 0.01);
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn isotonic_pools_violators() {
        assert_eq!(isotonic_nondecreasing(&[1.0, 3.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(isotonic_nondecreasing(&[3.0, 2.0, 1.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn grid_spec() {
        assert_eq!(parse_grid("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(parse_grid("0:1:0").is_none());
        assert!(parse_grid("1:0:0.1").is_none());
    }

    #[test]
    fn one_minus_exp_is_smooth_at_zero() {
        let a = one_minus_exp_over(Complex64::new(1e-5, 0.0));
        let b = one_minus_exp_over(Complex64::new(2e-4, 0.0));
        assert!((a.re - (-(-1e-5f64).exp_m1() / 1e-5)).abs() < 1e-14);
        assert!((b.re - (-(-2e-4f64).exp_m1() / 2e-4)).abs() < 1e-13);
    }
}
