use super::{Matrix, TransformConfig, TransformError};

/// Gramian angular summation field, `G[i][j] = cos(φi + φj)` with
/// `φ = arccos(x)` and `x` the value rescaled from the glucose range onto
/// [-1, 1]. Computed as `x·xᵀ − s·sᵀ` with `s = sqrt(1 − x²)`.
pub fn gaf(signal: &[f64], config: &TransformConfig) -> Result<Matrix, TransformError> {
    let (lo, hi) = config.glucose_range;
    let mut x = Vec::with_capacity(signal.len());
    for &v in signal {
        if !(v >= lo && v <= hi) {
            return Err(TransformError::ValueOutOfRange(v));
        }
        x.push((2.0 * (v - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0));
    }
    let s: Vec<f64> = x.iter().map(|v| (1.0 - v * v).max(0.0).sqrt()).collect();
    let n = x.len();
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = (x[i] * x[j] - s[i] * s[j]).clamp(-1.0, 1.0);
            g.set(i, j, v);
            g.set(j, i, v);
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> TransformConfig {
        TransformConfig::default()
    }

    #[test]
    fn all_at_max_is_ones() {
        let g = gaf(&[400.0; 10], &cfg()).unwrap();
        assert!(g.data.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn all_at_midpoint_is_minus_one() {
        let g = gaf(&[220.0; 10], &cfg()).unwrap();
        assert!(g.data.iter().all(|&v| (v + 1.0).abs() < 1e-15));
    }

    #[test]
    fn diagonal_and_symmetry() {
        let v: Vec<f64> = (0..30).map(|k| 40.0 + 12.0 * k as f64).collect();
        let g = gaf(&v, &cfg()).unwrap();
        for i in 0..30 {
            let x = 2.0 * (v[i] - 40.0) / 360.0 - 1.0;
            assert!((g.get(i, i) - (2.0 * x * x - 1.0)).abs() < 1e-12);
            for j in 0..30 {
                assert_eq!(g.get(i, j), g.get(j, i));
                assert!((-1.0..=1.0).contains(&g.get(i, j)));
            }
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert_eq!(
            gaf(&[100.0, 39.0], &cfg()),
            Err(TransformError::ValueOutOfRange(39.0))
        );
    }
}
