//! Self-contained numerical statistics used by the causality and network
//! layers: ordinary least squares on small designs, the regularized
//! incomplete beta function, the F-distribution CDF, and the Jarque-Bera
//! normality test.

use ndarray::Array2;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("singular design: elimination pivot {pivot:e} below threshold at column {column}")]
    SingularDesign { column: usize, pivot: f64 },
    #[error("continued fraction did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("sample has zero variance")]
    DegenerateSample,
    #[error("sample too short: {n} observations, need at least {min}")]
    TooShort { n: usize, min: usize },
}

/// Least-squares fit of `response` on an intercept plus the given regressors.
#[derive(Debug, Clone)]
pub struct OlsFit<T> {
    /// Intercept first, then one coefficient per regressor column.
    pub coefficients: Vec<T>,
    pub residuals: Vec<T>,
    /// Residual sum of squares.
    pub rss: T,
    pub n_obs: usize,
    pub n_params: usize,
}

/// Fit by normal equations solved with symmetric positive-definite
/// elimination. A pivot below `1e-10` times the largest initial diagonal
/// entry signals collinear regressors.
pub fn ols_fit<T: Real>(regressors: &Array2<T>, response: &[T]) -> Result<OlsFit<T>, StatsError> {
    let n = regressors.nrows();
    let p = regressors.ncols();
    let q = p + 1;
    assert_eq!(n, response.len(), "design and response lengths differ");
    if n <= q {
        return Err(StatsError::TooShort { n, min: q + 1 });
    }

    // Gram matrix and right-hand side of the augmented design [1 | X].
    let mut g = vec![vec![T::zero(); q]; q];
    let mut c = vec![T::zero(); q];
    for t in 0..n {
        let y = response[t];
        for i in 0..q {
            let xi = if i == 0 { T::one() } else { regressors[(t, i - 1)] };
            c[i] = c[i] + xi * y;
            for j in i..q {
                let xj = if j == 0 { T::one() } else { regressors[(t, j - 1)] };
                g[i][j] = g[i][j] + xi * xj;
            }
        }
    }
    for i in 0..q {
        for j in 0..i {
            g[i][j] = g[j][i];
        }
    }

    let coefficients = solve_spd(&mut g, &mut c)?;

    let mut residuals = Vec::with_capacity(n);
    let mut rss = T::zero();
    for t in 0..n {
        let mut fitted = coefficients[0];
        for j in 0..p {
            fitted = fitted + coefficients[j + 1] * regressors[(t, j)];
        }
        let e = response[t] - fitted;
        rss = rss + e * e;
        residuals.push(e);
    }

    Ok(OlsFit {
        coefficients,
        residuals,
        rss,
        n_obs: n,
        n_params: q,
    })
}

/// Gaussian elimination on a symmetric system, guarding each pivot against
/// the largest initial diagonal entry.
fn solve_spd<T: Real>(g: &mut [Vec<T>], c: &mut [T]) -> Result<Vec<T>, StatsError> {
    let q = c.len();
    let mut max_diag = T::zero();
    for (i, row) in g.iter().enumerate() {
        max_diag = max_diag.max(row[i]);
    }
    let threshold = T::tol(1e-10) * max_diag;

    for k in 0..q {
        let pivot = g[k][k];
        if !(pivot > threshold) {
            return Err(StatsError::SingularDesign {
                column: k,
                pivot: pivot.to_f64().unwrap_or(f64::NAN),
            });
        }
        for i in k + 1..q {
            let f = g[i][k] / pivot;
            if f == T::zero() {
                continue;
            }
            for j in k..q {
                g[i][j] = g[i][j] - f * g[k][j];
            }
            c[i] = c[i] - f * c[k];
        }
    }

    let mut x = vec![T::zero(); q];
    for k in (0..q).rev() {
        let mut s = c[k];
        for j in k + 1..q {
            s = s - g[k][j] * x[j];
        }
        x[k] = s / g[k][k];
    }
    Ok(x)
}

const MAX_BETA_ITER: usize = 500;

/// Regularized incomplete beta function I_x(a, b).
///
/// Lentz continued fraction with relative tolerance 1e-14, switching to the
/// symmetric form when x > (a+1)/(a+b+2).
pub fn reg_inc_beta<T: Real>(x: T, a: T, b: T) -> Result<T, StatsError> {
    assert!(a > T::zero() && b > T::zero(), "shape parameters must be positive");
    assert!(x >= T::zero() && x <= T::one(), "x outside [0, 1]");
    if x == T::zero() {
        return Ok(T::zero());
    }
    if x == T::one() {
        return Ok(T::one());
    }
    if x > (a + T::one()) / (a + b + T::of(2.0)) {
        return Ok(T::one() - reg_inc_beta(T::one() - x, b, a)?);
    }
    let ln_front = a * x.ln() + b * (T::one() - x).ln() + ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
    let cf = beta_cf(x, a, b)?;
    Ok(ln_front.exp() * cf / a)
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf<T: Real>(x: T, a: T, b: T) -> Result<T, StatsError> {
    let tol = T::tol(1e-14);
    let tiny = T::of(1e-30);
    let one = T::one();

    let qab = a + b;
    let qap = a + one;
    let qam = a - one;

    let mut c = one;
    let mut d = one - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = one / d;
    let mut h = d;

    for m in 1..=MAX_BETA_ITER {
        let mf = T::of(m as f64);
        let m2 = mf + mf;

        let aa = mf * (b - mf) * x / ((qam + m2) * (a + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = one / d;
        h = h * d * c;

        let aa = -(a + mf) * (qab + mf) * x / ((a + m2) * (qap + m2));
        d = one + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = one + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = one / d;
        let del = d * c;
        h = h * del;

        if (del - one).abs() < tol {
            return Ok(h);
        }
    }
    Err(StatsError::NonConvergence {
        iterations: MAX_BETA_ITER,
    })
}

/// Lanczos coefficients (g = 7, n = 9).
const LANCZOS: [f64; 8] = [
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn ln_gamma<T: Real>(z: T) -> T {
    let half = T::of(0.5);
    if z < half {
        // Reflection; not reached for half-integer degrees of freedom >= 1.
        let pi = T::of(std::f64::consts::PI);
        return pi.ln() - (pi * z).sin().ln() - ln_gamma(T::one() - z);
    }
    let z = z - T::one();
    let mut x = T::of(0.999_999_999_999_809_93);
    for (i, &coef) in LANCZOS.iter().enumerate() {
        x = x + T::of(coef) / (z + T::of(i as f64 + 1.0));
    }
    let t = z + T::of(7.5);
    T::of(0.5 * (std::f64::consts::TAU).ln()) + (z + half) * t.ln() - t + x.ln()
}

/// CDF of the F(d1, d2) distribution.
pub fn f_cdf<T: Real>(x: T, d1: usize, d2: usize) -> Result<T, StatsError> {
    assert!(d1 >= 1 && d2 >= 1, "degrees of freedom must be >= 1");
    if x <= T::zero() {
        return Ok(T::zero());
    }
    if x.is_infinite() {
        return Ok(T::one());
    }
    let d1t = T::of(d1 as f64);
    let d2t = T::of(d2 as f64);
    let z = d1t * x / (d1t * x + d2t);
    reg_inc_beta(z, d1t / T::of(2.0), d2t / T::of(2.0))
}

/// Jarque-Bera normality test result.
#[derive(Debug, Clone)]
pub struct JbResult<T> {
    pub statistic: T,
    pub skewness: T,
    /// Raw fourth standardized moment (3 under normality).
    pub kurtosis: T,
    /// Upper tail of chi-square with 2 df: exp(-statistic / 2).
    pub p_value: T,
    pub n_obs: usize,
}

/// Jarque-Bera statistic from 1/n central moments:
/// JB = (n/6) (S^2 + (K-3)^2 / 4).
pub fn jarque_bera<T: Real>(sample: &[T]) -> Result<JbResult<T>, StatsError> {
    let n = sample.len();
    if n < 8 {
        return Err(StatsError::TooShort { n, min: 8 });
    }
    let nt = T::of(n as f64);
    let mean = sample.iter().copied().sum::<T>() / nt;
    let mut m2 = T::zero();
    let mut m3 = T::zero();
    let mut m4 = T::zero();
    for &x in sample {
        let d = x - mean;
        let d2 = d * d;
        m2 = m2 + d2;
        m3 = m3 + d2 * d;
        m4 = m4 + d2 * d2;
    }
    m2 = m2 / nt;
    m3 = m3 / nt;
    m4 = m4 / nt;
    if !(m2 > T::zero()) {
        return Err(StatsError::DegenerateSample);
    }

    let skewness = m3 / (m2 * m2.sqrt());
    let kurtosis = m4 / (m2 * m2);
    let excess = kurtosis - T::of(3.0);
    let statistic = nt / T::of(6.0) * (skewness * skewness + excess * excess / T::of(4.0));
    let p_value = (-statistic / T::of(2.0)).exp();

    Ok(JbResult {
        statistic,
        skewness,
        kurtosis,
        p_value,
        n_obs: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn col(values: &[f64]) -> Array2<f64> {
        Array2::from_shape_vec((values.len(), 1), values.to_vec()).unwrap()
    }

    #[test]
    fn ols_exact_line() {
        let x: Vec<f64> = (1..=10).map(|v| v as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let fit = ols_fit(&col(&x), &y).unwrap();
        assert!(fit.coefficients[0].abs() < 1e-12);
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-12);
        assert!(fit.rss <= 1e-18);
    }

    #[test]
    fn ols_constant_response() {
        let x: Vec<f64> = (0..8).map(|v| v as f64).collect();
        let y = vec![4.25; 8];
        let fit = ols_fit(&col(&x), &y).unwrap();
        assert!((fit.coefficients[0] - 4.25).abs() < 1e-12);
        assert!(fit.coefficients[1].abs() < 1e-12);
    }

    #[test]
    fn ols_hand_normal_equations() {
        let fit = ols_fit(&col(&[1.0, 2.0, 3.0]), &[1.0, 2.0, 2.0]).unwrap();
        assert!((fit.coefficients[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 0.5).abs() < 1e-12);
        assert!((fit.rss - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn ols_duplicated_column_is_singular() {
        let x = Array2::from_shape_fn((12, 2), |(r, _)| r as f64 + 1.0);
        let y: Vec<f64> = (0..12).map(|v| v as f64).collect();
        match ols_fit(&x, &y) {
            Err(StatsError::SingularDesign { .. }) => {}
            other => panic!("expected SingularDesign, got {other:?}"),
        }
    }

    #[test]
    fn ols_residuals_match_rss() {
        let x = Array2::from_shape_fn((20, 2), |(r, c)| ((r * (c + 3) + 1) % 7) as f64);
        let y: Vec<f64> = (0..20).map(|v| (v as f64 * 0.37).sin()).collect();
        let fit = ols_fit(&x, &y).unwrap();
        let sum: f64 = fit.residuals.iter().map(|e| e * e).sum();
        assert!((sum - fit.rss).abs() <= 1e-10 * fit.rss.max(1e-12));
    }

    #[test]
    fn beta_symmetry_at_half() {
        for a in [0.5, 1.0, 2.5, 7.0] {
            let v: f64 = reg_inc_beta(0.5, a, a).unwrap();
            assert!((v - 0.5).abs() < 1e-13, "a={a} v={v}");
        }
    }

    #[test]
    fn beta_boundaries() {
        assert_eq!(reg_inc_beta(0.0, 2.0, 3.0).unwrap(), 0.0);
        assert_eq!(reg_inc_beta(1.0, 2.0, 3.0).unwrap(), 1.0);
    }

    #[test]
    fn beta_closed_form_a_one() {
        // I_x(1, b) = 1 - (1-x)^b
        let v: f64 = reg_inc_beta(0.5, 1.0, 2.0).unwrap();
        assert!((v - 0.75).abs() < 1e-13);
    }

    #[test]
    fn f_cdf_at_zero() {
        assert_eq!(f_cdf(0.0, 3, 9).unwrap(), 0.0);
    }

    #[test]
    fn f_cdf_d1_two_closed_form() {
        // d1 = 2: F(x) = 1 - (d2 / (d2 + 2x))^(d2/2)
        let v: f64 = f_cdf(5.0, 2, 10).unwrap();
        assert!((v - 0.96875).abs() < 1e-12);
    }

    #[test]
    fn jb_two_point_sample() {
        let sample: Vec<f64> = (0..12).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let jb = jarque_bera(&sample).unwrap();
        assert!(jb.skewness.abs() < 1e-12);
        assert!((jb.kurtosis - 1.0).abs() < 1e-12);
        assert!((jb.statistic - 2.0).abs() < 1e-12);
        assert!((jb.p_value - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn jb_five_percent_critical() {
        // -2 ln 0.05 = 5.9915 to the paper's precision.
        let p = (-5.9915f64 / 2.0).exp();
        assert!((p - 0.05).abs() < 1e-5);
    }

    #[test]
    fn jb_p_matches_closed_form() {
        let sample: Vec<f64> = (0..64).map(|i| ((i * 37 % 64) as f64).sin()).collect();
        let jb = jarque_bera(&sample).unwrap();
        assert!((jb.p_value - (-jb.statistic / 2.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn jb_guards() {
        assert!(matches!(
            jarque_bera(&[1.0f64; 7]),
            Err(StatsError::TooShort { .. })
        ));
        assert!(matches!(
            jarque_bera(&[2.0f64; 16]),
            Err(StatsError::DegenerateSample)
        ));
    }

    #[test]
    fn f_cdf_works_in_f32() {
        let v: f32 = f_cdf(5.0f32, 2, 10).unwrap();
        assert!((v - 0.96875).abs() < 1e-5);
    }
}
