use super::DensityMatrix;
use crate::error::{Error, Result};

/// `tr(ρ²)`
pub fn purity(state: &DensityMatrix) -> f64 {
    let m = state.matrix();
    // tr(ρ²) = Σ_ij |ρ_ij|² for Hermitian ρ
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Total variation distance `½ Σ_x |p(x) − q(x)|` between two distributions.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            actual: q.len(),
        });
    }
    check_distribution(p)?;
    check_distribution(q)?;
    let d = 0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>();
    Ok(d.clamp(0.0, 1.0))
}

fn check_distribution(p: &[f64]) -> Result<()> {
    if p.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(Error::InvalidInput("probabilities must be finite and non-negative".into()));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidInput(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}
