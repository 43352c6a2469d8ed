//! Lower convex envelopes of rate points.

use super::RatePoint;

/// A tradeoff curve: the envelope of all points found, sorted by `R_P` with
/// `R_K` nonincreasing, plus the scalarization minimizer for each λ.
#[derive(Debug, Clone, PartialEq)]
pub struct Frontier {
    pub points: Vec<RatePoint>,
    pub by_lambda: Vec<(f64, RatePoint)>,
}

impl Frontier {
    pub(crate) fn new(by_lambda: Vec<(f64, RatePoint)>, extra: Vec<RatePoint>) -> Self {
        let all: Vec<RatePoint> = by_lambda.iter().map(|(_, p)| p.clone()).chain(extra).collect();
        Self {
            points: lower_envelope(&all),
            by_lambda,
        }
    }

    /// Least `R_P + λ R_K` over the envelope.
    pub fn support_value(&self, lambda: f64) -> f64 {
        self.points
            .iter()
            .map(|p| p.scalarized(lambda))
            .fold(f64::INFINITY, f64::min)
    }
}

fn cross(o: &RatePoint, a: &RatePoint, b: &RatePoint) -> f64 {
    (a.rp - o.rp) * (b.rk - o.rk) - (a.rk - o.rk) * (b.rp - o.rp)
}

/// The vertices of the lower-left convex envelope of `points`: sorted by
/// `R_P`, strictly decreasing in `R_K`, and convex.
pub fn lower_envelope(points: &[RatePoint]) -> Vec<RatePoint> {
    let mut pts: Vec<&RatePoint> = points.iter().collect();
    pts.sort_by(|a, b| a.rp.total_cmp(&b.rp).then(a.rk.total_cmp(&b.rk)));
    let mut hull: Vec<&RatePoint> = Vec::new();
    for p in pts {
        if let Some(last) = hull.last() {
            // same R_P: the first (lower R_K) wins
            if (p.rp - last.rp).abs() <= 1e-12 {
                continue;
            }
            // only points that improve R_K extend the envelope
            if p.rk >= last.rk - 1e-12 {
                continue;
            }
        }
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.into_iter().cloned().collect()
}
