use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum MetricError {
    #[error("invalid argument: {name} must be positive, got {value}")]
    InvalidArgument { name: &'static str, value: f64 },
}

/// Relative distance of `objective` above `lower_bound`, in percent of the
/// objective.
pub fn gap(objective: f64, lower_bound: f64) -> Result<f64, MetricError> {
    if !(objective > 0.0) {
        return Err(MetricError::InvalidArgument { name: "objective", value: objective });
    }
    Ok((objective - lower_bound) / objective * 100.0)
}

/// Relative deviation of `objective` from `best_objective`, in percent of the
/// best objective.
pub fn rpd(objective: f64, best_objective: f64) -> Result<f64, MetricError> {
    if !(best_objective > 0.0) {
        return Err(MetricError::InvalidArgument { name: "best_objective", value: best_objective });
    }
    Ok((objective - best_objective) / best_objective * 100.0)
}
