use serde::Serialize;

/// Spread of a field over a set of points relative to its mean.
///
/// Per component: `(max - min) / (|mean| + floor)`, where `|mean|` is the norm of
/// the mean vector. The floor should be the magnitude of the terms that cancel
/// to produce the field, so that a field which is constant at zero still gets a
/// meaningful relative measure.
#[derive(Debug, Clone, Serialize)]
pub struct Constancy {
    pub per_component: Vec<f64>,
    pub mean: Vec<f64>,
    pub floor: f64,
    pub metric: f64,
}

pub fn constancy(components: &[&[f64]], points: &[usize], floor: f64) -> Constancy {
    let count = points.len().max(1) as f64;
    let mean: Vec<f64> = components.iter().map(|c| points.iter().map(|&i| c[i]).sum::<f64>() / count).collect();
    let mean_norm = mean.iter().map(|m| m * m).sum::<f64>().sqrt();
    let denom = mean_norm + floor;
    let per_component: Vec<f64> = components
        .iter()
        .map(|c| {
            let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                (lo.min(c[i]), hi.max(c[i]))
            });
            if points.is_empty() {
                0.0
            } else if denom > 0.0 {
                (hi - lo) / denom
            } else if hi > lo {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .collect();
    let metric = per_component.iter().cloned().fold(0.0, f64::max);
    Constancy { per_component, mean, floor, metric }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_varying() {
        let a = vec![2.0; 10];
        let b: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let pts: Vec<usize> = (0..10).collect();
        assert_eq!(constancy(&[&a], &pts, 0.0).metric, 0.0);
        let c = constancy(&[&a, &b], &pts, 1.0);
        assert!((c.per_component[1] - 9.0 / ((4.0f64 + 20.25).sqrt() + 1.0)).abs() < 1e-14);
        let z = vec![0.0; 10];
        assert_eq!(constancy(&[&z], &pts, 0.0).metric, 0.0);
    }
}
