use rand::seq::SliceRandom;
use rand::Rng;

use super::{ProbError, Result};

/// Letter counts of one type class inside a typical set.
#[derive(Debug, Clone, PartialEq)]
pub struct Composition {
    /// Counts aligned with [`TypicalSet::letters`].
    pub counts: Vec<usize>,
    /// Number of distinct sequences with these counts.
    pub size: u128,
    /// `ln` of the number of sequences.
    pub ln_size: f64,
    /// `ln P^n(s)` of any single sequence `s` in the class.
    pub ln_prob_each: f64,
}

/// The δ-typical set of a single-letter source, held as a list of type
/// classes. Sequences are produced lazily.
///
/// Only letters of positive probability take part, so a deterministic source
/// yields exactly the constant sequence.
#[derive(Debug, Clone)]
pub struct TypicalSet {
    letters: Vec<usize>,
    probs: Vec<f64>,
    n: usize,
    delta: f64,
    compositions: Vec<Composition>,
}

// frequency comparisons carry a little slack so that e.g. 1/2 vs 0.5 is not
// lost to rounding
const FREQ_SLACK: f64 = 1e-12;

fn binom(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|i| (i as f64).ln()).sum()
}

impl TypicalSet {
    /// `probs` is indexed by letter; zero-probability letters are skipped.
    pub fn new(probs: &[f64], n: usize, delta: f64) -> Result<Self> {
        if n == 0 {
            return Err(ProbError::InvalidArgument("block length must be positive".into()));
        }
        if !(delta > 0.0) {
            return Err(ProbError::InvalidArgument("delta must be positive".into()));
        }
        let letters: Vec<usize> = (0..probs.len()).filter(|&i| probs[i] > 0.0).collect();
        let p: Vec<f64> = letters.iter().map(|&i| probs[i]).collect();
        let mut compositions = Vec::new();
        if !letters.is_empty() {
            let mut counts = vec![0usize; letters.len()];
            enumerate(&p, n, delta, 0, n, &mut counts, &mut compositions);
        }
        Ok(Self {
            letters,
            probs: p,
            n,
            delta,
            compositions,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Letters (indices into the original probability vector) that can occur.
    pub fn letters(&self) -> &[usize] {
        &self.letters
    }

    pub fn compositions(&self) -> &[Composition] {
        &self.compositions
    }

    pub fn is_empty(&self) -> bool {
        self.compositions.is_empty()
    }

    /// Exact number of sequences (saturating at `u128::MAX`).
    pub fn cardinality(&self) -> u128 {
        self.compositions.iter().fold(0u128, |a, c| a.saturating_add(c.size))
    }

    pub fn ln_cardinality(&self) -> f64 {
        log_sum_exp(self.compositions.iter().map(|c| c.ln_size))
    }

    /// `P^n(T)`.
    pub fn mass(&self) -> f64 {
        self.compositions
            .iter()
            .map(|c| (c.ln_size + c.ln_prob_each).exp())
            .sum()
    }

    /// All member sequences, type class by type class, each class in
    /// lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        self.compositions.iter().flat_map(move |c| {
            let mut start: Vec<usize> = Vec::with_capacity(self.n);
            for (j, &k) in c.counts.iter().enumerate() {
                start.extend(std::iter::repeat(self.letters[j]).take(k));
            }
            MultisetPermutations { next: Some(start) }
        })
    }

    /// A uniformly random member sequence.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Vec<usize>> {
        let w: Vec<f64> = self.compositions.iter().map(|c| c.ln_size).collect();
        self.sample_with(&w, rng)
    }

    /// A member drawn from `P^n` conditioned on the typical set.
    pub fn sample_weighted<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Vec<usize>> {
        let w: Vec<f64> = self.compositions.iter().map(|c| c.ln_size + c.ln_prob_each).collect();
        self.sample_with(&w, rng)
    }

    fn sample_with<R: Rng + ?Sized>(&self, ln_w: &[f64], rng: &mut R) -> Option<Vec<usize>> {
        if self.is_empty() {
            return None;
        }
        let top = ln_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = ln_w.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = w.iter().sum();
        let mut r = rng.gen::<f64>() * total;
        let mut pick = w.len() - 1;
        for (i, wi) in w.iter().enumerate() {
            if r < *wi {
                pick = i;
                break;
            }
            r -= wi;
        }
        let c = &self.compositions[pick];
        let mut seq: Vec<usize> = Vec::with_capacity(self.n);
        for (j, &k) in c.counts.iter().enumerate() {
            seq.extend(std::iter::repeat(self.letters[j]).take(k));
        }
        seq.shuffle(rng);
        Some(seq)
    }

    /// Whether `seq` (original letter indices) is a member.
    pub fn contains(&self, seq: &[usize]) -> bool {
        if seq.len() != self.n {
            return false;
        }
        let mut counts = vec![0usize; self.letters.len()];
        for &s in seq {
            match self.letters.iter().position(|&l| l == s) {
                Some(j) => counts[j] += 1,
                None => return false,
            }
        }
        counts
            .iter()
            .zip(&self.probs)
            .all(|(&k, &p)| (k as f64 / self.n as f64 - p).abs() <= self.delta + FREQ_SLACK)
    }
}

fn enumerate(
    p: &[f64],
    n: usize,
    delta: f64,
    j: usize,
    remaining: usize,
    counts: &mut Vec<usize>,
    out: &mut Vec<Composition>,
) {
    let ok = |k: usize, pj: f64| (k as f64 / n as f64 - pj).abs() <= delta + FREQ_SLACK;
    if j + 1 == p.len() {
        if ok(remaining, p[j]) {
            counts[j] = remaining;
            let mut size: u128 = 1;
            let mut left = n;
            let mut ln_size = ln_factorial(n);
            let mut ln_prob = 0.0;
            for (i, &k) in counts.iter().enumerate() {
                size = size.saturating_mul(binom(left, k));
                left -= k;
                ln_size -= ln_factorial(k);
                ln_prob += k as f64 * p[i].ln();
            }
            out.push(Composition {
                counts: counts.clone(),
                size,
                ln_size,
                ln_prob_each: ln_prob,
            });
        }
        return;
    }
    for k in (0..=remaining).rev() {
        if ok(k, p[j]) {
            counts[j] = k;
            enumerate(p, n, delta, j + 1, remaining - k, counts, out);
        }
    }
    counts[j] = 0;
}

fn log_sum_exp<I: Iterator<Item = f64>>(it: I) -> f64 {
    let v: Vec<f64> = it.collect();
    let top = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + v.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// Distinct permutations of a multiset in lexicographic order, starting from
/// the sorted arrangement.
struct MultisetPermutations {
    next: Option<Vec<usize>>,
}

impl Iterator for MultisetPermutations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.next.take()?;
        let mut nxt = cur.clone();
        let len = nxt.len();
        if len >= 2 {
            let mut i = len - 1;
            while i > 0 && nxt[i - 1] >= nxt[i] {
                i -= 1;
            }
            if i > 0 {
                let mut j = len - 1;
                while nxt[j] <= nxt[i - 1] {
                    j -= 1;
                }
                nxt.swap(i - 1, j);
                nxt[i..].reverse();
                self.next = Some(nxt);
            }
        }
        Some(cur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn n_one_delta_one_is_every_letter() {
        let t = TypicalSet::new(&[0.2, 0.5, 0.3], 1, 1.0).unwrap();
        let all: Vec<_> = t.iter().collect();
        assert_eq!(all, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn uniform_bit_length_two() {
        let t = TypicalSet::new(&[0.5, 0.5], 2, 0.1).unwrap();
        let all: Vec<_> = t.iter().collect();
        assert_eq!(all, vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(t.cardinality(), 2);
    }

    #[test]
    fn deterministic_source_only_constant_sequence() {
        for delta in [0.01, 0.5, 2.0] {
            let t = TypicalSet::new(&[0.0, 1.0], 5, delta).unwrap();
            let all: Vec<_> = t.iter().collect();
            assert_eq!(all, vec![vec![1; 5]]);
        }
    }

    #[test]
    fn empty_for_tight_delta() {
        let t = TypicalSet::new(&[0.5, 0.5], 3, 0.1).unwrap();
        assert!(t.is_empty());
        assert_eq!(t.cardinality(), 0);
    }

    #[test]
    fn cardinality_matches_brute_force() {
        let p = [0.4, 0.4, 0.2];
        for n in 1..=7 {
            let t = TypicalSet::new(&p, n, 0.15).unwrap();
            let mut brute = 0u128;
            let total = 3usize.pow(n as u32);
            for mut c in 0..total {
                let mut counts = [0usize; 3];
                for _ in 0..n {
                    counts[c % 3] += 1;
                    c /= 3;
                }
                if counts
                    .iter()
                    .zip(&p)
                    .all(|(&k, &q)| (k as f64 / n as f64 - q).abs() <= 0.15 + 1e-12)
                {
                    brute += 1;
                }
            }
            assert_eq!(t.cardinality(), brute, "n={n}");
            assert_eq!(t.iter().count() as u128, brute);
            assert!(t.iter().all(|s| t.contains(&s)));
        }
    }

    #[test]
    fn samples_are_members() {
        let t = TypicalSet::new(&[0.3, 0.7], 10, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let s = t.sample_uniform(&mut rng).unwrap();
            assert!(t.contains(&s));
            let s = t.sample_weighted(&mut rng).unwrap();
            assert!(t.contains(&s));
        }
    }
}
