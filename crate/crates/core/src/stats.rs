//! Shapiro-Wilk normality test, two-sided F-test for equal variances, and
//! unpaired t-tests, with the distribution functions they need.

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

/// Relative convergence tolerance of the incomplete beta continued fraction.
pub const BETA_CF_TOLERANCE: f64 = 1e-10;
/// Iteration cap shared by the continued fractions and series.
pub const MAX_ITERATIONS: usize = 1000;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StatsError {
    #[error("sample of size {n} is too small (need at least {min})")]
    SampleTooSmall { n: usize, min: usize },
    #[error("sample of size {n} is too large (at most {max})")]
    SampleTooLarge { n: usize, max: usize },
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("invalid degrees of freedom {0}")]
    InvalidDegreesOfFreedom(f64),
    #[error("sample contains a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestName {
    ShapiroWilk,
    FTest,
    StudentT,
    WelchT,
}

impl fmt::Display for TestName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ShapiroWilk => "shapiro-wilk",
            Self::FTest => "f-test",
            Self::StudentT => "student-t",
            Self::WelchT => "welch-t",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatResult {
    pub test_name: TestName,
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    /// Zero for one-sample tests.
    pub n2: usize,
    /// Degrees of freedom of the reference distribution, if any.
    pub df: Vec<f64>,
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Standard deviation with `ddof` subtracted from the divisor.
pub fn std_dev(x: &[f64], ddof: usize) -> f64 {
    variance(x, ddof).sqrt()
}

pub fn variance(x: &[f64], ddof: usize) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - ddof) as f64
}

fn check_finite(x: &[f64]) -> Result<(), StatsError> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

fn check_dof(v: f64) -> Result<(), StatsError> {
    if v.is_finite() && v >= 1.0 {
        Ok(())
    } else {
        Err(StatsError::InvalidDegreesOfFreedom(v))
    }
}

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = G[0];
    for (i, g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Lentz continued fraction for the incomplete beta function.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITERATIONS {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < BETA_CF_TOLERANCE {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn reg_inc_gamma_lower(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_cf(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn reg_inc_gamma_upper(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_cf(a, x)
    }
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..MAX_ITERATIONS {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_cf(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITERATIONS {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

pub fn erfc(x: f64) -> f64 {
    if x >= 0.0 {
        reg_inc_gamma_upper(0.5, x * x)
    } else {
        1.0 + reg_inc_gamma_lower(0.5, x * x)
    }
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal quantile (Wichura's AS 241, PPND16).
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_6,
        1.331_416_678_917_843_8e2,
        1.971_590_950_306_551_3e3,
        1.373_169_376_550_946e4,
        4.592_195_393_154_987e4,
        6.726_577_092_700_87e4,
        3.343_057_558_358_813e4,
        2.509_080_928_730_122_7e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.231_333_070_160_091e1,
        6.871_870_074_920_579e2,
        5.394_196_021_424_751e3,
        2.121_379_430_158_659_7e4,
        3.930_789_580_009_271e4,
        2.872_908_573_572_194_3e4,
        5.226_495_278_852_545e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_6,
        4.630_337_846_156_545,
        5.769_497_221_460_691,
        3.647_848_324_763_204_5,
        1.270_458_252_452_368_4,
        2.417_807_251_774_506e-1,
        2.272_384_498_926_918_4e-2,
        7.745_450_142_783_414e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_759,
        1.676_384_830_183_803_8,
        6.897_673_349_851e-1,
        1.481_039_764_274_800_8e-1,
        1.519_866_656_361_645_7e-2,
        5.475_938_084_995_345e-4,
        1.050_750_071_644_416_8e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103,
        5.463_784_911_164_114,
        1.784_826_539_917_291_3,
        2.965_605_718_285_048_7e-1,
        2.653_218_952_657_612_4e-2,
        1.242_660_947_388_078_4e-3,
        2.711_555_568_743_487_6e-5,
        2.010_334_399_292_288_1e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.998_322_065_558_879e-1,
        1.369_298_809_227_358e-1,
        1.487_536_129_085_061_5e-2,
        7.868_691_311_456_133e-4,
        1.846_318_317_510_054_8e-5,
        1.421_511_758_316_446e-7,
        2.044_263_103_389_939_7e-15,
    ];
    fn ratio(num: &[f64; 8], den: &[f64; 8], r: f64) -> f64 {
        let n = num.iter().rev().fold(0.0, |acc, c| acc * r + c);
        let d = den.iter().rev().fold(0.0, |acc, c| acc * r + c);
        n / d
    }
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * ratio(&A, &B, r);
    }
    let r = (-(if q < 0.0 { p } else { 1.0 - p }).ln()).sqrt();
    let v = if r <= 5.0 {
        ratio(&C, &D, r - 1.6)
    } else {
        ratio(&E, &F, r - 5.0)
    };
    if q < 0.0 {
        -v
    } else {
        v
    }
}

/// Student's t CDF; `nu` may be fractional (Welch).
pub fn student_t_cdf(x: f64, nu: f64) -> Result<f64, StatsError> {
    check_dof(nu)?;
    if x.is_nan() {
        return Ok(f64::NAN);
    }
    let tail = 0.5 * reg_inc_beta(nu / 2.0, 0.5, nu / (nu + x * x));
    Ok(if x > 0.0 { 1.0 - tail } else { tail })
}

/// Two-sided tail probability `P(|T| ≥ |t|)`.
pub fn student_t_two_sided(t: f64, nu: f64) -> Result<f64, StatsError> {
    check_dof(nu)?;
    Ok(reg_inc_beta(nu / 2.0, 0.5, nu / (nu + t * t)).clamp(0.0, 1.0))
}

pub fn f_cdf(x: f64, nu1: f64, nu2: f64) -> Result<f64, StatsError> {
    check_dof(nu1)?;
    check_dof(nu2)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok(reg_inc_beta(nu1 / 2.0, nu2 / 2.0, nu1 * x / (nu1 * x + nu2)))
}

/// `1 − f_cdf`, computed without cancellation.
pub fn f_sf(x: f64, nu1: f64, nu2: f64) -> Result<f64, StatsError> {
    check_dof(nu1)?;
    check_dof(nu2)?;
    if x <= 0.0 {
        return Ok(1.0);
    }
    Ok(reg_inc_beta(nu2 / 2.0, nu1 / 2.0, nu2 / (nu2 + nu1 * x)))
}

pub const SHAPIRO_MIN_N: usize = 3;
pub const SHAPIRO_MAX_N: usize = 50;

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * x + v)
}

/// Royston's coefficients `a_1 … a_{n/2}` (positive, largest first).
fn shapiro_coefficients(n: usize) -> Vec<f64> {
    const C1: [f64; 6] = [0.0, 0.221_157, -0.147_981, -2.071_190, 4.434_685, -2.706_056];
    const C2: [f64; 6] = [0.0, 0.042_981, -0.293_762, -1.752_461, 5.682_633, -3.582_633];
    let half = n / 2;
    if n == 3 {
        return vec![std::f64::consts::FRAC_1_SQRT_2];
    }
    let an25 = n as f64 + 0.25;
    let m: Vec<f64> = (1..=half)
        .map(|i| normal_quantile((i as f64 - 0.375) / an25))
        .collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / (n as f64).sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;
    let mut a = vec![0.0; half];
    a[0] = a1;
    let (first, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        a[1] = a2;
        let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
        (2, fac)
    } else {
        let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        (1, fac)
    };
    for i in first..half {
        a[i] = -m[i] / fac;
    }
    a
}

/// Shapiro-Wilk W with Royston's p-value approximation, `3 ≤ n ≤ 50`.
pub fn shapiro_wilk(sample: &[f64]) -> Result<StatResult, StatsError> {
    let n = sample.len();
    if n < SHAPIRO_MIN_N {
        return Err(StatsError::SampleTooSmall { n, min: SHAPIRO_MIN_N });
    }
    if n > SHAPIRO_MAX_N {
        return Err(StatsError::SampleTooLarge { n, max: SHAPIRO_MAX_N });
    }
    check_finite(sample)?;
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if range <= 0.0 {
        return Err(StatsError::DegenerateSample("all values identical".into()));
    }
    let m = mean(&x);
    let scaled: Vec<f64> = x.iter().map(|v| (v - m) / range).collect();
    let ssq: f64 = scaled.iter().map(|v| v * v).sum();
    let a = shapiro_coefficients(n);
    let num: f64 = a
        .iter()
        .enumerate()
        .map(|(i, ai)| ai * (scaled[n - 1 - i] - scaled[i]))
        .sum();
    let w = (num * num / ssq).min(1.0);

    let p = if n == 3 {
        let p = 6.0 / PI * (w.sqrt().asin() - PI / 3.0);
        p.clamp(0.0, 1.0)
    } else {
        let w1 = 1.0 - w;
        if w1 <= 0.0 {
            1.0
        } else {
            let nf = n as f64;
            let mut y = w1.ln();
            let (mu, sigma) = if n <= 11 {
                let gamma = poly(&[-2.273, 0.459], nf);
                if y >= gamma {
                    return Ok(shapiro_result(w, 0.0, n));
                }
                y = -(gamma - y).ln();
                (
                    poly(&[0.544, -0.399_78, 0.025_054, -6.714e-4], nf),
                    poly(&[1.3822, -0.778_57, 0.062_767, -0.002_032_2], nf).exp(),
                )
            } else {
                let ln_n = nf.ln();
                (
                    poly(&[-1.5861, -0.310_82, -0.083_751, 0.003_891_5], ln_n),
                    poly(&[-0.4803, -0.082_676, 0.003_030_2], ln_n).exp(),
                )
            };
            1.0 - normal_cdf((y - mu) / sigma)
        }
    };
    Ok(shapiro_result(w, p, n))
}

fn shapiro_result(w: f64, p: f64, n: usize) -> StatResult {
    StatResult {
        test_name: TestName::ShapiroWilk,
        statistic: w,
        p_value: p.clamp(0.0, 1.0),
        n1: n,
        n2: 0,
        df: Vec::new(),
    }
}

fn two_samples(a: &[f64], b: &[f64]) -> Result<(), StatsError> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(StatsError::SampleTooSmall { n: s.len(), min: 2 });
        }
        check_finite(s)?;
    }
    Ok(())
}

/// `F = var(a) / var(b)` with unbiased variances; two-sided p.
pub fn f_test(a: &[f64], b: &[f64]) -> Result<StatResult, StatsError> {
    two_samples(a, b)?;
    let (va, vb) = (variance(a, 1), variance(b, 1));
    if va == 0.0 || vb == 0.0 {
        return Err(StatsError::DegenerateSample("zero variance".into()));
    }
    let f = va / vb;
    let (d1, d2) = ((a.len() - 1) as f64, (b.len() - 1) as f64);
    let lower = f_cdf(f, d1, d2)?;
    let upper = f_sf(f, d1, d2)?;
    Ok(StatResult {
        test_name: TestName::FTest,
        statistic: f,
        p_value: (2.0 * lower.min(upper)).min(1.0),
        n1: a.len(),
        n2: b.len(),
        df: vec![d1, d2],
    })
}

/// Unpaired two-sample t-test: pooled-variance Student when `pooled`,
/// Welch otherwise. Two-sided p.
pub fn t_test_unpaired(a: &[f64], b: &[f64], pooled: bool) -> Result<StatResult, StatsError> {
    two_samples(a, b)?;
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (variance(a, 1), variance(b, 1));
    let diff = mean(a) - mean(b);
    let (se2, df) = if pooled {
        let sp2 = ((n1 - 1.0) * va + (n2 - 1.0) * vb) / (n1 + n2 - 2.0);
        (sp2 * (1.0 / n1 + 1.0 / n2), n1 + n2 - 2.0)
    } else {
        let (qa, qb) = (va / n1, vb / n2);
        let se2 = qa + qb;
        (se2, se2 * se2 / (qa * qa / (n1 - 1.0) + qb * qb / (n2 - 1.0)))
    };
    let name = if pooled { TestName::StudentT } else { TestName::WelchT };
    if se2 == 0.0 {
        if diff == 0.0 {
            return Ok(StatResult {
                test_name: name,
                statistic: 0.0,
                p_value: 1.0,
                n1: a.len(),
                n2: b.len(),
                df: vec![n1 + n2 - 2.0],
            });
        }
        return Err(StatsError::DegenerateSample(
            "both samples constant with different means".into(),
        ));
    }
    let t = diff / se2.sqrt();
    Ok(StatResult {
        test_name: name,
        statistic: t,
        p_value: student_t_two_sided(t, df)?,
        n1: a.len(),
        n2: b.len(),
        df: vec![df],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() < tol, "{a} vs {b}");
    }

    #[test]
    fn cdf_reference_values() {
        close(normal_cdf(0.0), 0.5, 1e-15);
        close(normal_cdf(1.96), 0.975_002_104_851_779_5, 1e-12);
        close(normal_cdf(-3.2), 6.871_379_379_158_471e-4, 1e-14);
        close(normal_cdf(0.5), 0.691_462_461_274_013_1, 1e-12);
        close(student_t_cdf(0.0, 7.0).unwrap(), 0.5, 1e-15);
        close(student_t_cdf(1.36, 18.0).unwrap(), 0.904_689_209_682_012_8, 1e-9);
        close(student_t_cdf(-2.5, 3.0).unwrap(), 0.043_853_323_504_032_77, 1e-9);
        close(student_t_cdf(0.3, 1.0).unwrap(), 0.592_773_579_077_742_3, 1e-9);
        close(student_t_cdf(4.0, 30.0).unwrap(), 0.999_809_077_181_958_1, 1e-9);
        close(f_cdf(1.0, 9.0, 9.0).unwrap(), 0.5, 1e-9);
        close(f_cdf(2.5, 3.0, 12.0).unwrap(), 0.890_845_287_604_993_7, 1e-9);
        close(f_cdf(0.4, 7.0, 2.0).unwrap(), 0.151_603_343_303_419_37, 1e-9);
        close(f_cdf(3.0, 1.0, 5.0).unwrap(), 0.856_189_191_288_396_1, 1e-9);
    }

    #[test]
    fn quantiles() {
        close(normal_quantile(0.5), 0.0, 1e-15);
        close(normal_quantile(0.975), 1.959_963_984_540_054, 1e-12);
        close(normal_quantile(0.001), -3.090_232_306_167_813_5, 1e-12);
        close(normal_quantile(1e-10), -6.361_340_902_404_056, 1e-10);
    }

    #[test]
    fn invalid_dof() {
        assert_eq!(
            student_t_cdf(1.0, 0.5),
            Err(StatsError::InvalidDegreesOfFreedom(0.5))
        );
        assert!(f_cdf(1.0, 3.0, f64::NAN).is_err());
    }

    #[test]
    fn shapiro_reference_values() {
        let cases: [(&[f64], f64, f64); 6] = [
            (&[-1.0, 0.0, 1.0], 1.0, 1.0),
            (&[1.0, 2.0, 4.0], 0.964_285_7, 0.636_89),
            (&[2.1, 3.4, 1.9, 5.6, 4.4], 0.932_08, 0.610_66),
            (&[1.2, 3.3, 2.2, 5.0, 4.1, 3.8, 2.9], 0.991_56, 0.995_75),
            (
                &[1.0, 4.0, 9.0, 16.0, 25.0, 36.0, 49.0, 64.0, 81.0, 100.0, 121.0, 144.0],
                0.916_29,
                0.256_67,
            ),
            (
                &[
                    1.0, 1.0, 1.0, 2.0, 2.0, 3.0, 5.0, 8.0, 13.0, 21.0, 34.0, 55.0, 89.0, 144.0, 233.0, 377.0, 610.0,
                    987.0, 1597.0, 2584.0,
                ],
                0.584_47,
                2.04e-6,
            ),
        ];
        for (x, w, p) in cases {
            let r = shapiro_wilk(x).unwrap();
            close(r.statistic, w, 1e-4);
            close(r.p_value, p, 1e-4);
        }
        let seq: Vec<f64> = (1..=30).map(f64::from).collect();
        let r = shapiro_wilk(&seq).unwrap();
        close(r.statistic, 0.957_45, 1e-4);
        close(r.p_value, 0.266_23, 1e-4);
    }

    #[test]
    fn shapiro_errors() {
        assert_eq!(
            shapiro_wilk(&[1.0, 2.0]),
            Err(StatsError::SampleTooSmall { n: 2, min: 3 })
        );
        assert!(matches!(
            shapiro_wilk(&[4.0; 5]),
            Err(StatsError::DegenerateSample(_))
        ));
        let big: Vec<f64> = (0..51).map(f64::from).collect();
        assert!(matches!(
            shapiro_wilk(&big),
            Err(StatsError::SampleTooLarge { .. })
        ));
    }

    #[test]
    fn t_tests() {
        let x = [3.1, 2.4, 5.0, 4.2, 3.3];
        let y = [6.1, 5.2, 4.4, 7.9, 6.6, 5.8, 6.0];
        let pooled = t_test_unpaired(&x, &y, true).unwrap();
        close(pooled.statistic, -3.852_40, 1e-4);
        close(pooled.p_value, 0.003_199_7, 1e-6);
        let welch = t_test_unpaired(&x, &y, false).unwrap();
        close(welch.statistic, -3.909_27, 1e-4);
        close(welch.p_value, 0.003_416_7, 1e-6);
        close(welch.df[0], 9.2057, 1e-3);

        let same = t_test_unpaired(&x, &x, true).unwrap();
        assert_eq!((same.statistic, same.p_value), (0.0, 1.0));

        let a = [0.1, -0.5, 1.2, 0.3, -1.1, 0.8, -0.2, 0.4, -0.9, 0.6];
        let b: Vec<f64> = [0.5, -0.3, 0.2, 1.1, -0.8, -0.4, 0.9, -1.0, 0.3, 0.0]
            .iter()
            .map(|v| v + 10.0)
            .collect();
        let r = t_test_unpaired(&a, &b, true).unwrap();
        close(r.statistic, -31.1706, 1e-3);
        assert!(r.p_value < 1e-6);
        assert!((r.p_value / 4.075e-17 - 1.0).abs() < 1e-2);
    }

    #[test]
    fn constant_samples() {
        let r = t_test_unpaired(&[2.0, 2.0], &[2.0, 2.0, 2.0], true).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert!(matches!(
            t_test_unpaired(&[2.0, 2.0], &[3.0, 3.0], true),
            Err(StatsError::DegenerateSample(_))
        ));
    }

    #[test]
    fn f_tests() {
        let a = [1.0, 3.0, 2.0, 5.0, 4.0];
        let r = f_test(&a, &a).unwrap();
        assert_eq!(r.statistic, 1.0);
        close(r.p_value, 1.0, 1e-12);
        let b: Vec<f64> = (0..10).map(|i| (i as f64 * 1.7).sin()).collect();
        let c: Vec<f64> = b.iter().map(|v| v * 10.0).collect();
        assert!(f_test(&c, &b).unwrap().p_value < 1e-3);
        assert!(matches!(
            f_test(&[1.0, 1.0], &a),
            Err(StatsError::DegenerateSample(_))
        ));
    }
}
