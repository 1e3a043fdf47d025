use crate::error::{Error, Result};

/// One explicit Euler step `x + dt·f(x)` with a single evaluation of `f`.
pub fn euler_step<F>(derivative: F, x: &[f64], dt: f64) -> Result<Vec<f64>>
where
    F: FnOnce(&[f64]) -> Vec<f64>,
{
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Argument(format!(
            "step size must be positive, got {dt}"
        )));
    }
    let dx = derivative(x);
    if dx.len() != x.len() {
        return Err(Error::Dimension(format!(
            "derivative has length {}, state has length {}",
            dx.len(),
            x.len()
        )));
    }
    if let Some(i) = dx.iter().position(|v| !v.is_finite()) {
        return Err(Error::numeric(format!(
            "derivative component {i} at state {x:?} (dt = {dt})"
        )));
    }
    Ok(x.iter().zip(&dx).map(|(xi, di)| xi + dt * di).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point() {
        assert_eq!(
            euler_step(|_| vec![0.0, 0.0], &[1.0, 2.0], 0.005).unwrap(),
            vec![1.0, 2.0]
        );
    }

    #[test]
    fn constant_rate() {
        assert_eq!(
            euler_step(|_| vec![1.0, 0.0], &[0.0, 0.0], 0.01).unwrap(),
            vec![0.01, 0.0]
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(euler_step(|_| vec![1.0], &[0.0], 0.0).is_err());
        assert!(euler_step(|_| vec![1.0, 2.0], &[0.0], 0.1).is_err());
        assert!(matches!(
            euler_step(|_| vec![f64::NAN], &[0.0], 0.1),
            Err(Error::Numeric { .. })
        ));
    }
}
