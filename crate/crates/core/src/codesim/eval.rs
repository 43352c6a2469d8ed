//! Mixture walks and distance computations shared by all codes.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Estimate, EvalConfig, Method};
use crate::exec::task_rng;

const CHUNK: u64 = 4096;
const BATCH: usize = 1000;

/// Codewords in lexicographic order, so that every prefix is a contiguous
/// range and a mixture over the book can be walked prefix by prefix.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Sorted {
    words: Vec<Vec<usize>>,
}

impl Sorted {
    pub fn new(words: &[Vec<usize>]) -> Self {
        let mut words = words.to_vec();
        words.sort();
        Self { words }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    /// Distinct words with multiplicities, in order.
    pub fn distinct(&self) -> Vec<(&[usize], usize)> {
        let mut out: Vec<(&[usize], usize)> = Vec::new();
        for w in &self.words {
            match out.last_mut() {
                Some((last, c)) if *last == w.as_slice() => *c += 1,
                _ => out.push((w, 1)),
            }
        }
        out
    }

    /// Visits every prefix of length `depth` whose weight
    /// `Π_{i<depth} step(i, w_i)` is positive. `leaf` receives one word with
    /// that prefix, the number of words sharing it, and the weight.
    pub fn walk(
        &self,
        depth: usize,
        step: &mut dyn FnMut(usize, usize) -> f64,
        leaf: &mut dyn FnMut(&[usize], usize, f64),
    ) {
        if !self.words.is_empty() {
            self.rec(0, depth, 0, self.words.len(), 1.0, step, leaf);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn rec(
        &self,
        d: usize,
        depth: usize,
        lo: usize,
        hi: usize,
        w: f64,
        step: &mut dyn FnMut(usize, usize) -> f64,
        leaf: &mut dyn FnMut(&[usize], usize, f64),
    ) {
        if d == depth {
            leaf(&self.words[lo], hi - lo, w);
            return;
        }
        let mut s = lo;
        while s < hi {
            let letter = self.words[s][d];
            let e = s + self.words[s..hi].partition_point(|x| x[d] == letter);
            let f = step(d, letter);
            if f > 0.0 {
                self.rec(d + 1, depth, s, e, w * f, step, leaf);
            }
            s = e;
        }
    }

    /// `(1/|book|) Σ_w Π_{i<depth} step(i, w_i)`.
    pub fn mixture(&self, depth: usize, step: &mut dyn FnMut(usize, usize) -> f64) -> f64 {
        if self.words.is_empty() {
            return 0.0;
        }
        let mut acc = 0.0;
        self.walk(depth, step, &mut |_, c, w| acc += c as f64 * w);
        acc / self.words.len() as f64
    }
}

/// Groups letters whose likelihood columns and target masses agree exactly.
/// Such letters are interchangeable for every distance computed here.
pub(crate) fn lump(cols: &[Vec<f64>], q: &[f64]) -> Vec<Vec<usize>> {
    let mut groups: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (a, col) in cols.iter().enumerate() {
        let mut key: Vec<u64> = col.iter().map(|x| x.to_bits()).collect();
        key.push(q[a].to_bits());
        match groups.get(&key) {
            Some(&g) => out[g].push(a),
            None => {
                groups.insert(key, out.len());
                out.push(vec![a]);
            }
        }
    }
    out
}

/// Number of sequences `k^n`, saturating.
pub(crate) fn count(k: usize, n: usize) -> u64 {
    (k as u64).checked_pow(n as u32).unwrap_or(u64::MAX)
}

pub(crate) fn decode(mut idx: u64, k: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = (idx % k as u64) as usize;
        idx /= k as u64;
    }
}

pub(crate) fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    p.iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

pub(crate) fn draw(cum: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let r = rng.gen::<f64>() * cum[cum.len() - 1];
    cum.partition_point(|&c| c <= r).min(cum.len() - 1)
}

/// `‖Q^n − P̂‖₁` where `Q` is i.i.d. with letter masses `q` and `phat` gives
/// the code's probability of a letter sequence. Exact over the lumped
/// classes when `classes.len()^n` fits the budget, else Monte Carlo.
pub(crate) fn l1_to_product(
    q: &[f64],
    classes: &[Vec<usize>],
    n: usize,
    phat: &(dyn Fn(&[usize]) -> f64 + Sync),
    cfg: &EvalConfig,
) -> Estimate {
    let k = classes.len();
    let total = count(k, n);
    if total > cfg.budget {
        let cum = cumulative(q);
        return monte_carlo(cfg, &|rng| {
            let seq: Vec<usize> = (0..n).map(|_| draw(&cum, rng)).collect();
            let qn: f64 = seq.iter().map(|&a| q[a]).product();
            (1.0 - phat(&seq) / qn).max(0.0)
        });
    }
    let qc: Vec<f64> = classes.iter().map(|c| c.iter().map(|&a| q[a]).sum()).collect();
    let tasks = total.div_ceil(CHUNK) as usize;
    let parts = cfg.exec.map(tasks, |t| {
        let mut digits = vec![0usize; n];
        let mut seq = vec![0usize; n];
        let (mut diff, mut mass) = (0.0, 0.0);
        let lo = t as u64 * CHUNK;
        for idx in lo..(lo + CHUNK).min(total) {
            decode(idx, k, &mut digits);
            let mut qn = 1.0;
            let mut mult = 1.0;
            for (i, &c) in digits.iter().enumerate() {
                seq[i] = classes[c][0];
                qn *= qc[c];
                mult *= classes[c].len() as f64;
            }
            let p = mult * phat(&seq);
            diff += (qn - p).abs();
            mass += p;
        }
        (diff, mass)
    });
    let (diff, mass) = parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Estimate {
        l1: diff + (1.0 - mass).max(0.0),
        method: Method::Exact,
        stderr: None,
    }
}

/// `2 E[deficit]` over `cfg.mc_samples` draws, in fixed batches with one
/// RNG stream each, so the result does not depend on scheduling.
pub(crate) fn monte_carlo(cfg: &EvalConfig, deficit: &(dyn Fn(&mut ChaCha8Rng) -> f64 + Sync)) -> Estimate {
    let m = cfg.mc_samples.max(1);
    let batches = m.div_ceil(BATCH);
    let sums = cfg.exec.map(batches, |b| {
        let mut rng = task_rng(cfg.seed, b as u64);
        let size = BATCH.min(m - b * BATCH);
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..size {
            let d = deficit(&mut rng);
            s1 += d;
            s2 += d * d;
        }
        (s1, s2)
    });
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let mf = m as f64;
    let mean = s1 / mf;
    let var = if m > 1 {
        ((s2 - mf * mean * mean) / (mf - 1.0)).max(0.0)
    } else {
        0.0
    };
    Estimate {
        l1: 2.0 * mean,
        method: Method::MonteCarlo,
        stderr: Some(2.0 * (var / mf).sqrt()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn walk_groups_shared_prefixes() {
        let s = Sorted::new(&[vec![1, 0], vec![0, 1], vec![0, 0], vec![0, 1]]);
        let mut leaves = Vec::new();
        s.walk(1, &mut |_, _| 1.0, &mut |w, c, _| leaves.push((w[0], c)));
        assert_eq!(leaves, vec![(0, 3), (1, 1)]);
        assert_eq!(s.distinct().len(), 3);
    }

    #[test]
    fn mixture_prunes_zero_factors() {
        let s = Sorted::new(&[vec![0, 0], vec![1, 1]]);
        let p = s.mixture(2, &mut |_, a| if a == 0 { 0.5 } else { 0.0 });
        assert!((p - 0.125).abs() < 1e-15);
    }

    #[test]
    fn lumping_needs_identical_columns() {
        let cols = vec![vec![0.4, 0.0], vec![0.4, 0.0], vec![0.2, 0.2]];
        let q = [0.2, 0.2, 0.2];
        assert_eq!(lump(&cols, &q), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn exact_and_sampled_distances_agree_on_a_product() {
        // P̂ = p^n against q^n
        let q = [0.5, 0.5];
        let p = [0.7, 0.3];
        let phat = |s: &[usize]| s.iter().map(|&a| p[a]).product::<f64>();
        let classes = vec![vec![0], vec![1]];
        let cfg = EvalConfig {
            mc_samples: 40_000,
            seed: 3,
            ..Default::default()
        };
        let exact = l1_to_product(&q, &classes, 3, &phat, &cfg);
        let mc = l1_to_product(&q, &classes, 3, &phat, &EvalConfig { budget: 1, ..cfg });
        assert_eq!(exact.method, Method::Exact);
        assert!((exact.l1 - mc.l1).abs() <= 3.0 * mc.stderr.unwrap());
    }
}
