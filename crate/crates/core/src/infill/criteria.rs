//! Closed-form acquisition functions.

use crate::stats::{norm_cdf, norm_pdf};

/// Floor applied to predicted standard deviations.
pub const STD_FLOOR: f64 = 1e-12;

/// Expected improvement below the incumbent `y_min`.
pub fn expected_improvement(y_min: f64, mean: f64, std: f64) -> f64 {
    let s = std.max(STD_FLOOR);
    let diff = y_min - mean;
    let u = diff / s;
    (diff * norm_cdf(u) + s * norm_pdf(u)).max(0.0)
}

/// Probability of improving on the incumbent `y_min`.
pub fn probability_of_improvement(y_min: f64, mean: f64, std: f64) -> f64 {
    norm_cdf((y_min - mean) / std.max(STD_FLOOR))
}

/// Lower confidence bound `mean - beta * std`.
pub fn lower_confidence_bound(mean: f64, std: f64, beta: f64) -> f64 {
    mean - beta * std
}

/// Minimum over front points of the probability of not being dominated by
/// that point. Values below 1e-6 are treated as zero.
pub fn minimum_poi(front: &[Vec<f64>], mean: &[f64], std: &[f64]) -> f64 {
    let mut min = 1.0f64;
    for p in front {
        let dominated: f64 = p
            .iter()
            .zip(mean.iter().zip(std))
            .map(|(&pm, (&m, &s))| norm_cdf((m - pm) / s.max(STD_FLOOR)))
            .product();
        min = min.min(1.0 - dominated);
    }
    if min < 1e-6 {
        0.0
    } else {
        min
    }
}

/// Minimum PoI scaled by the Euclidean distance from the predicted mean to
/// the front; zero when the minimum PoI is below one half.
pub fn minimum_euclidean_poi(front: &[Vec<f64>], mean: &[f64], std: &[f64]) -> f64 {
    let mpoi = minimum_poi(front, mean, std);
    if mpoi < 0.5 {
        return 0.0;
    }
    let dist = front
        .iter()
        .map(|p| p.iter().zip(mean).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .fold(f64::INFINITY, f64::min);
    mpoi * dist
}
