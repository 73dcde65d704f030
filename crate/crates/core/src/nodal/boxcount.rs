use std::collections::HashSet;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::geometry::Vec2;

/// Dyadic box counts and the fitted growth exponent.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxCount {
    #[serde(rename = "j")]
    pub levels: Vec<u32>,
    #[serde(rename = "count")]
    pub counts: Vec<usize>,
    /// Least-squares slope of log₂ count against j over the finest half of the levels.
    pub slope: f64,
    pub slope_stderr: f64,
    /// slope ± 2 stderr.
    pub band: (f64, f64),
}

/// Counts dyadic squares of side 2^{-j}, j = 0..=j_max, that contain a point.
pub fn box_counting_dimension(points: &[Vec2], j_max: u32) -> Result<BoxCount> {
    if j_max > 14 {
        return invalid(format!("j_max = {j_max} exceeds 14"));
    }
    if j_max < 2 || points.is_empty() {
        return invalid("fewer than 3 usable levels");
    }
    let levels: Vec<u32> = (0..=j_max).collect();
    let counts: Vec<usize> = levels
        .iter()
        .map(|&j| {
            let s = (1u64 << j) as f64;
            points
                .iter()
                .map(|p| ((p.x * s).floor() as i64, (p.y * s).floor() as i64))
                .collect::<HashSet<_>>()
                .len()
        })
        .collect();
    let m = levels.len().div_ceil(2);
    let start = levels.len() - m;
    let xs: Vec<f64> = levels[start..].iter().map(|&j| j as f64).collect();
    let ys: Vec<f64> = counts[start..].iter().map(|&c| (c as f64).log2()).collect();
    let (slope, slope_stderr) = fit(&xs, &ys);
    Ok(BoxCount { levels, counts, slope, slope_stderr, band: (slope - 2.0 * slope_stderr, slope + 2.0 * slope_stderr) })
}

fn fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    if xs.len() < 3 {
        return (slope, 0.0);
    }
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    (slope, (rss / (n - 2.0) / sxx).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_and_segment() {
        let b = box_counting_dimension(&[Vec2::new(0.3, 0.7)], 10).unwrap();
        assert!(b.counts.iter().all(|&c| c == 1));
        assert_eq!(b.slope, 0.0);
        let line: Vec<Vec2> = (0..1024).map(|i| Vec2::new(i as f64 / 1024.0, 0.5)).collect();
        let b = box_counting_dimension(&line, 10).unwrap();
        assert_eq!(b.counts[10], 1024);
        assert!((b.slope - 1.0).abs() < 1e-12);
        assert!(box_counting_dimension(&line, 1).is_err());
        assert!(box_counting_dimension(&line, 15).is_err());
        assert!(box_counting_dimension(&[], 8).is_err());
    }
}
