use crate::nn::tensor::Float;

/// Gradient magnitudes below this are compared in absolute rather than
/// relative terms.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Coordinate where `max_rel_error` occurred.
    pub worst_index: usize,
    pub analytic_at_worst: f64,
    pub numeric_at_worst: f64,
    pub checked: usize,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Compares `analytic` against central differences of `loss` at `params`,
/// one coordinate at a time. `loss` must be deterministic.
pub fn grad_check<T: Float>(
    params: &[T],
    analytic: &[T],
    mut loss: impl FnMut(&[T]) -> T,
    eps: f64,
    tolerance: f64,
) -> GradCheckReport {
    assert_eq!(params.len(), analytic.len(), "one analytic gradient per parameter");
    let mut probe = params.to_vec();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_index: 0,
        analytic_at_worst: 0.0,
        numeric_at_worst: 0.0,
        checked: params.len(),
        tolerance,
        passed: true,
    };
    for k in 0..params.len() {
        let orig = probe[k];
        probe[k] = orig + T::from_f64(eps);
        let up = loss(&probe).as_f64();
        probe[k] = orig - T::from_f64(eps);
        let down = loss(&probe).as_f64();
        probe[k] = orig;

        let numeric = (up - down) / (2.0 * eps);
        let a = analytic[k].as_f64();
        let err = relative_error(a, numeric);
        if err > report.max_rel_error || err.is_nan() {
            report.max_rel_error = err;
            report.worst_index = k;
            report.analytic_at_worst = a;
            report.numeric_at_worst = numeric;
        }
    }
    report.passed = report.max_rel_error < tolerance;
    report
}
