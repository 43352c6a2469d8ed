use std::collections::{BTreeMap, BTreeSet};

use super::joint::check_distinct;
use super::{JointDist, ProbError, Result};

/// Shannon entropy in nats of an (unnormalized allowed) mass vector.
pub fn entropy_of<'a, I: IntoIterator<Item = &'a f64>>(masses: I) -> f64 {
    masses.into_iter().filter(|p| **p > 0.0).map(|&p| -p * p.ln()).sum()
}

// values in [-CLAMP_TOL, 0) are float cancellation, not real negatives
const CLAMP_TOL: f64 = 1e-9;

fn clamp(v: f64) -> f64 {
    if v < 0.0 && v >= -CLAMP_TOL {
        0.0
    } else {
        v.max(0.0)
    }
}

impl JointDist {
    fn group_entropy(&self, idx: &[usize]) -> f64 {
        if idx.is_empty() {
            return 0.0;
        }
        // a point mass can sum to 1 + ulp
        entropy_of(self.marginal_map(idx).values()).max(0.0)
    }

    fn resolve_groups<S: AsRef<str>>(&self, groups: &[&[S]]) -> Result<Vec<Vec<usize>>> {
        let resolved: Vec<Vec<usize>> = groups.iter().map(|g| self.var_indices(g)).collect::<Result<_>>()?;
        let all: Vec<usize> = resolved.iter().flatten().copied().collect();
        check_distinct(self.variables(), &all)?;
        Ok(resolved)
    }

    /// `H(A)`.
    pub fn entropy<S: AsRef<str>>(&self, a: &[S]) -> Result<f64> {
        let g = self.resolve_groups(&[a])?;
        Ok(self.group_entropy(&g[0]))
    }

    /// `H(A | C)`.
    pub fn conditional_entropy<S: AsRef<str>>(&self, a: &[S], c: &[S]) -> Result<f64> {
        let g = self.resolve_groups(&[a, c])?;
        let ac: Vec<usize> = g[0].iter().chain(&g[1]).copied().collect();
        Ok(clamp(self.group_entropy(&ac) - self.group_entropy(&g[1])))
    }

    /// `I(A; B)`.
    pub fn mutual_information<S: AsRef<str>>(&self, a: &[S], b: &[S]) -> Result<f64> {
        let g = self.resolve_groups(&[a, b])?;
        let ab: Vec<usize> = g[0].iter().chain(&g[1]).copied().collect();
        Ok(clamp(
            self.group_entropy(&g[0]) + self.group_entropy(&g[1]) - self.group_entropy(&ab),
        ))
    }

    /// `I(A; B | C)`, computed as a difference of joint entropies.
    pub fn conditional_mutual_information<S: AsRef<str>>(&self, a: &[S], b: &[S], c: &[S]) -> Result<f64> {
        let g = self.resolve_groups(&[a, b, c])?;
        let ac: Vec<usize> = g[0].iter().chain(&g[2]).copied().collect();
        let bc: Vec<usize> = g[1].iter().chain(&g[2]).copied().collect();
        let abc: Vec<usize> = g[0].iter().chain(&g[1]).chain(&g[2]).copied().collect();
        Ok(clamp(
            self.group_entropy(&ac) + self.group_entropy(&bc) - self.group_entropy(&abc) - self.group_entropy(&g[2]),
        ))
    }

    /// Single entry point: `H(A)` with only `a`, `I(A;B)` with `b`, and
    /// `I(A;B|C)` with both `b` and `c`.
    pub fn measures<S: AsRef<str>>(&self, a: &[S], b: Option<&[S]>, c: Option<&[S]>) -> Result<f64> {
        match (b, c) {
            (None, None) => self.entropy(a),
            (None, Some(c)) => self.conditional_entropy(a, c),
            (Some(b), None) => self.mutual_information(a, b),
            (Some(b), Some(c)) => self.conditional_mutual_information(a, b, c),
        }
    }

    /// True iff `A − B − C` holds, i.e. `I(A; C | B) <= tol`.
    pub fn is_markov<S: AsRef<str>>(&self, a: &[S], b: &[S], c: &[S], tol: f64) -> Result<bool> {
        Ok(self.conditional_mutual_information(a, c, b)? <= tol)
    }
}

/// `Σ |P(x) − Q(x)|` over the union of supports. Both distributions must be
/// over the same variables and alphabets.
pub fn variational_distance(p: &JointDist, q: &JointDist) -> Result<f64> {
    if p.variables() != q.variables() || p.alphabets() != q.alphabets() {
        return Err(ProbError::AlphabetMismatch);
    }
    let keys: BTreeSet<&[usize]> = p.iter().map(|(k, _)| k).chain(q.iter().map(|(k, _)| k)).collect();
    Ok(keys.into_iter().map(|k| (p.prob(k) - q.prob(k)).abs()).sum())
}

/// L1 distance between two sparse mass maps.
pub fn l1_sparse<K: Ord>(a: &BTreeMap<K, f64>, b: &BTreeMap<K, f64>) -> f64 {
    let mut d = 0.0;
    for (k, pa) in a {
        d += (pa - b.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, pb) in b {
        if !a.contains_key(k) {
            d += pb.abs();
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn entropy_of_uniform_bit() {
        let j = JointDist::from_dense(&["X"], &[2], &[0.5, 0.5]).unwrap();
        assert!((j.entropy(&["X"]).unwrap() - LN_2).abs() < 1e-15);
    }

    #[test]
    fn l_shape_x_marginal_entropy() {
        let pts = [[2, 2, 0], [2, 2, 1], [2, 2, 2], [0, 0, 2], [1, 1, 2]];
        let mut t = vec![0.0; 27];
        for p in pts {
            t[p[0] * 9 + p[1] * 3 + p[2]] = 0.2;
        }
        let j = JointDist::from_dense(&["X", "Y", "Z"], &[3, 3, 3], &t).unwrap();
        let h = j.entropy(&["X"]).unwrap();
        let expect = -0.6 * 0.6f64.ln() - 0.4 * 0.2f64.ln();
        assert!((h - expect).abs() < 1e-12);
        assert!((h - 0.9503).abs() < 1e-4);
    }

    #[test]
    fn cmi_zero_for_conditionally_independent_construction() {
        // P(w) P(x|w) P(y|w)
        let pw = [0.3, 0.7];
        let px = [[0.9, 0.1], [0.2, 0.8]];
        let py = [[0.6, 0.4], [0.1, 0.9]];
        let mut t = vec![0.0; 8];
        for w in 0..2 {
            for x in 0..2 {
                for y in 0..2 {
                    t[w * 4 + x * 2 + y] = pw[w] * px[w][x] * py[w][y];
                }
            }
        }
        let j = JointDist::from_dense(&["W", "X", "Y"], &[2, 2, 2], &t).unwrap();
        let v = j.measures(&["X"], Some(&["Y"]), Some(&["W"])).unwrap();
        assert!(v.abs() < 1e-15);
        assert!(j.mutual_information(&["X"], &["Y"]).unwrap() > 1e-3);
    }

    #[test]
    fn markov_fails_for_copied_bit_given_constant() {
        let j = JointDist::from_dense(&["X", "C", "Y"], &[2, 1, 2], &[0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!(!j.is_markov(&["X"], &["C"], &["Y"], 1e-9).unwrap());
        let cmi = j.conditional_mutual_information(&["X"], &["Y"], &["C"]).unwrap();
        assert!((cmi - LN_2).abs() < 1e-15);
    }

    #[test]
    fn group_errors() {
        let j = JointDist::from_dense(&["X", "Y"], &[2, 2], &[0.25; 4]).unwrap();
        assert!(matches!(j.entropy(&["Q"]), Err(ProbError::UnknownVariable(_))));
        assert!(matches!(
            j.mutual_information(&["X"], &["X"]),
            Err(ProbError::OverlappingGroups(_))
        ));
    }

    #[test]
    fn variational_distance_cases() {
        let a = JointDist::from_dense(&["X"], &[2], &[1.0, 0.0]).unwrap();
        let b = JointDist::from_dense(&["X"], &[2], &[0.5, 0.5]).unwrap();
        let c = JointDist::from_dense(&["X"], &[2], &[0.0, 1.0]).unwrap();
        assert_eq!(variational_distance(&a, &a).unwrap(), 0.0);
        assert!((variational_distance(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        assert!((variational_distance(&a, &c).unwrap() - 2.0).abs() < 1e-15);
        let d = JointDist::from_dense(&["X"], &[3], &[1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(variational_distance(&a, &d), Err(ProbError::AlphabetMismatch)));
    }
}
