//! Small numeric helpers shared by the experiment modules.

use crate::{Error, Result};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    carry: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = NeumaierSum::default();
    xs.into_iter().for_each(|x| acc.add(x));
    acc.total()
}

/// Interior points strictly above the left neighbour and not below the right
/// one, ignoring points below `floor` (round-off in empty tails).
pub fn count_local_maxima(values: &[f64], floor: f64) -> usize {
    values
        .windows(3)
        .filter(|w| w[1] > w[0] && w[1] >= w[2] && w[1] > floor)
        .count()
}

/// Moments and quantile width of a non-negative weight distribution over
/// integer positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionStats {
    pub total: f64,
    pub mean: f64,
    pub std_dev: f64,
    /// Standardized third central moment.
    pub skewness: f64,
    pub q25: i64,
    pub q75: i64,
}

impl DistributionStats {
    pub fn interquartile_width(&self) -> i64 {
        self.q75 - self.q25
    }
}

/// `positions` must be sorted ascending. Returns `None` for zero total weight.
pub fn distribution_stats(positions: &[i64], weights: &[f64]) -> Option<DistributionStats> {
    debug_assert_eq!(positions.len(), weights.len());
    let total = compensated_sum(weights.iter().copied());
    if total.is_nan() || total <= 0.0 {
        return None;
    }
    let moment = |f: &dyn Fn(f64) -> f64| {
        compensated_sum(positions.iter().zip(weights).map(|(&j, &w)| w * f(j as f64))) / total
    };
    let mean = moment(&|x| x);
    let var = moment(&|x| (x - mean).powi(2));
    let third = moment(&|x| (x - mean).powi(3));
    let std_dev = var.sqrt();
    let skewness = if std_dev > 0.0 { third / std_dev.powi(3) } else { 0.0 };

    let quantile = |q: f64| {
        let mut acc = NeumaierSum::default();
        for (&j, &w) in positions.iter().zip(weights) {
            acc.add(w);
            if acc.total() >= q * total {
                return j;
            }
        }
        *positions.last().unwrap()
    };
    Some(DistributionStats {
        total,
        mean,
        std_dev,
        skewness,
        q25: quantile(0.25),
        q75: quantile(0.75),
    })
}

/// Least-squares fit `y ≈ offset + a·cos χ + b·sin χ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineFit {
    pub offset: f64,
    pub cos_coeff: f64,
    pub sin_coeff: f64,
    pub max_residual: f64,
}

impl CosineFit {
    pub fn amplitude(&self) -> f64 {
        self.cos_coeff.hypot(self.sin_coeff)
    }

    /// `φ` in `y = offset + amplitude·cos(χ − φ)`.
    pub fn phase(&self) -> f64 {
        self.sin_coeff.atan2(self.cos_coeff)
    }

    pub fn eval(&self, chi: f64) -> f64 {
        let (s, c) = chi.sin_cos();
        self.offset + self.cos_coeff * c + self.sin_coeff * s
    }
}

pub fn fit_cosine(chi: &[f64], y: &[f64]) -> Result<CosineFit> {
    if chi.len() != y.len() || chi.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "cosine fit needs ≥ 3 paired samples (got {} χ, {} values)",
            chi.len(),
            y.len()
        )));
    }
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for (&x, &v) in chi.iter().zip(y) {
        let (s, c) = x.sin_cos();
        let basis = [1.0, c, s];
        for r in 0..3 {
            for k in 0..3 {
                m[r][k] += basis[r] * basis[k];
            }
            rhs[r] += basis[r] * v;
        }
    }
    let [offset, cos_coeff, sin_coeff] = solve3(m, rhs).ok_or_else(|| {
        Error::InvalidArgument("χ samples do not determine a cosine (singular fit)".into())
    })?;
    let mut fit = CosineFit {
        offset,
        cos_coeff,
        sin_coeff,
        max_residual: 0.0,
    };
    fit.max_residual = chi
        .iter()
        .zip(y)
        .map(|(&x, &v)| (fit.eval(x) - v).abs())
        .fold(0.0, f64::max);
    Ok(fit)
}

/// Gaussian elimination with partial pivoting.
fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (dst, src) in m[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *dst -= f * src;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / m[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn compensated_sum_beats_naive() {
        let xs: Vec<f64> = std::iter::once(1.0).chain(std::iter::repeat_n(1e-16, 10_000)).collect();
        let naive: f64 = xs.iter().sum();
        let good = compensated_sum(xs.iter().copied());
        assert_eq!(naive, 1.0);
        assert!((good - (1.0 + 1e-12)).abs() < 1e-18);
    }

    #[test]
    fn maxima_counting() {
        assert_eq!(count_local_maxima(&[0.0, 1.0, 0.0, 2.0, 2.0, 1.0], 0.0), 2);
        assert_eq!(count_local_maxima(&[0.0, 1e-20, 0.0, 1.0, 0.0], 1e-12), 1);
        assert_eq!(count_local_maxima(&[1.0, 2.0], 0.0), 0);
    }

    #[test]
    fn symmetric_distribution_has_no_skew() {
        let pos = [-2, -1, 0, 1, 2];
        let w = [1.0, 2.0, 4.0, 2.0, 1.0];
        let s = distribution_stats(&pos, &w).unwrap();
        assert!(s.mean.abs() < 1e-15 && s.skewness.abs() < 1e-15);
        assert_eq!((s.q25, s.q75), (-1, 1));
        assert!(distribution_stats(&pos, &[0.0; 5]).is_none());
    }

    #[test]
    fn skewed_distribution_sign() {
        let pos = [0, 1, 2, 3];
        let s = distribution_stats(&pos, &[0.1, 0.1, 0.1, 5.0]).unwrap();
        assert!(s.skewness < -1.0);
    }

    #[test]
    fn cosine_fit_recovers_coefficients() {
        let chi: Vec<f64> = (0..16).map(|k| TAU * k as f64 / 16.0).collect();
        let y: Vec<f64> = chi.iter().map(|x| 0.3 - 0.1 * x.cos() + 0.02 * x.sin()).collect();
        let f = fit_cosine(&chi, &y).unwrap();
        assert!((f.offset - 0.3).abs() < 1e-15);
        assert!((f.cos_coeff + 0.1).abs() < 1e-15);
        assert!((f.sin_coeff - 0.02).abs() < 1e-15);
        assert!(f.max_residual < 1e-15);
    }

    #[test]
    fn cosine_fit_rejects_degenerate_grid() {
        assert!(fit_cosine(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0]).is_err());
        assert!(fit_cosine(&[0.0, 1.0], &[1.0, 1.0]).is_err());
    }
}
