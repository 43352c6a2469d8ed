use rand::Rng;

use super::{entropy_of, JointDist, ProbError, Result};

/// The n-fold i.i.d. product of a base distribution, evaluated pointwise.
///
/// A sequence is a list of `n` base points (each a tuple of label indices).
#[derive(Debug, Clone)]
pub struct ProductHandle {
    base: JointDist,
    n: usize,
    support: Vec<(Vec<usize>, f64)>,
}

impl ProductHandle {
    pub fn new(base: JointDist, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(ProbError::InvalidArgument("block length must be positive".into()));
        }
        let support = base.iter().map(|(k, p)| (k.to_vec(), p)).collect();
        Ok(Self { base, n, support })
    }

    pub fn base(&self) -> &JointDist {
        &self.base
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn prob(&self, seq: &[Vec<usize>]) -> f64 {
        if seq.len() != self.n {
            return 0.0;
        }
        seq.iter().map(|pt| self.base.prob(pt)).product()
    }

    /// Number of sequences with positive probability.
    pub fn support_size(&self) -> u128 {
        (self.support.len() as u128).saturating_pow(self.n as u32)
    }

    /// Visits every positive-probability sequence as indices into the base
    /// support, together with its probability.
    pub fn for_each<F: FnMut(&[usize], f64)>(&self, mut f: F) {
        let k = self.support.len();
        let mut idx = vec![0usize; self.n];
        loop {
            let p: f64 = idx.iter().map(|&i| self.support[i].1).product();
            f(&idx, p);
            let mut pos = self.n;
            loop {
                if pos == 0 {
                    return;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < k {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }

    /// Entropy by full enumeration of the product support.
    pub fn entropy_by_enumeration(&self) -> f64 {
        let mut probs = Vec::new();
        self.for_each(|_, p| probs.push(p));
        entropy_of(&probs)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|_| {
                let mut r = rng.gen::<f64>();
                for (pt, p) in &self.support {
                    if r < *p {
                        return pt.clone();
                    }
                    r -= p;
                }
                self.support.last().unwrap().0.clone()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pointwise_is_product_of_letters() {
        let j = JointDist::from_dense(&["A", "B"], &[2, 2], &[0.1, 0.2, 0.3, 0.4]).unwrap();
        let h = ProductHandle::new(j.clone(), 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let s = h.sample(&mut rng);
            let expect: f64 = s.iter().map(|pt| j.prob(pt)).product();
            assert_eq!(h.prob(&s), expect);
            assert!(h.prob(&s) > 0.0);
        }
    }

    #[test]
    fn enumerated_mass_is_one() {
        let j = JointDist::from_dense(&["A"], &[3], &[0.5, 0.25, 0.25]).unwrap();
        let h = ProductHandle::new(j, 4).unwrap();
        let mut total = 0.0;
        h.for_each(|_, p| total += p);
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(h.support_size(), 81);
    }
}
