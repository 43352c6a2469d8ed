//! Soft-covering codebooks and the mixtures they induce.

use std::collections::{BTreeMap, BTreeSet};

use super::eval::{count, decode, l1_to_product, lump, Sorted};
use super::{CodeError, Estimate, EvalConfig, Result, MAX_WORDS};
use crate::exec::task_rng;
use crate::probcore::{Channel, JointDist, ProbError, TypicalSet};

/// A list of `n`-letter codewords drawn from a typical set.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    /// Letter labels; codewords hold indices into this list.
    pub letters: Vec<String>,
    pub n: usize,
    /// Codewords in draw order. Duplicates are allowed.
    pub words: Vec<Vec<usize>>,
    /// Requested rate; the book holds `⌊exp(n · rate_nats)⌋` words unless
    /// truncated.
    pub rate_nats: f64,
    pub delta: f64,
    pub seed: u64,
    /// More words were requested than the typical set holds, so the book is
    /// the whole typical set, each member once.
    pub truncated: bool,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// `ln |book|`.
    pub fn ln_size(&self) -> f64 {
        (self.words.len() as f64).ln()
    }

    /// `ln |book| / n`.
    pub fn realized_rate(&self) -> f64 {
        self.ln_size() / self.n as f64
    }

    /// Draws a book for the source `probs` (indexed like `letters`).
    /// `stream` separates books built under the same seed.
    pub(crate) fn draw(
        letters: Vec<String>,
        probs: &[f64],
        n: usize,
        rate: f64,
        delta: f64,
        seed: u64,
        stream: u64,
    ) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(CodeError::InvalidInput(format!(
                "rate must be finite and nonnegative, got {rate}"
            )));
        }
        let typical = TypicalSet::new(probs, n, delta)?;
        if typical.is_empty() {
            return Err(CodeError::EmptyTypicalSet { n, delta });
        }
        // guard the floor against exp(ln k) landing just below k
        let requested = ((n as f64 * rate).exp() * (1.0 + 1e-12)).floor();
        let available = typical.cardinality() as f64;
        let truncated = requested > available;
        let words = if truncated {
            if available > MAX_WORDS as f64 {
                return Err(CodeError::BudgetExceeded(format!(
                    "typical set of {available} sequences exceeds the codebook limit"
                )));
            }
            typical.iter().collect()
        } else {
            if requested > MAX_WORDS as f64 {
                return Err(CodeError::BudgetExceeded(format!(
                    "{requested} codewords exceed the codebook limit"
                )));
            }
            let mut rng = task_rng(seed, stream);
            (0..requested as u64)
                .map(|_| typical.sample_uniform(&mut rng).expect("typical set is nonempty"))
                .collect()
        };
        Ok(Self {
            letters,
            n,
            words,
            rate_nats: rate,
            delta,
            seed,
            truncated,
        })
    }
}

fn joined(labels: &[&str]) -> String {
    labels.join(",")
}

/// Draws `⌊exp(n · rate)⌋` codewords uniformly, with replacement, from the
/// δ-typical set of the marginal of `b`. Letters are the support tuples of
/// that marginal, labelled by their comma-joined labels.
pub fn soft_cover_codebook<S: AsRef<str>>(
    joint: &JointDist,
    b: &[S],
    n: usize,
    rate: f64,
    delta: f64,
    seed: u64,
) -> Result<Codebook> {
    let marg = joint.marginal(b)?;
    let mut letters = Vec::new();
    let mut probs = Vec::new();
    for (pt, p) in marg.iter() {
        letters.push(joined(&marg.labels_of(pt)));
        probs.push(p);
    }
    Codebook::draw(letters, &probs, n, rate, delta, seed, 0)
}

/// The output law `(1/|book|) Σ_w Π_i P(a_i | w_i)` of a codebook fed
/// through a memoryless channel.
#[derive(Debug, Clone)]
pub struct MixtureHandle {
    n: usize,
    outputs: Vec<String>,
    output_alphabets: Vec<Vec<String>>,
    letters: Vec<Vec<usize>>,
    /// `lik[b][a]` for book letter `b` and output letter `a`.
    lik: Vec<Vec<f64>>,
    book: Sorted,
}

/// Pairs a codebook with the channel applied to each of its letters.
/// Channel inputs are matched to book letters by label.
pub fn mixture_eval(book: &Codebook, chan: &Channel) -> Result<MixtureHandle> {
    let mut by_label: BTreeMap<String, &[(Vec<usize>, f64)]> = BTreeMap::new();
    for (input, row) in chan.rows() {
        let labels: Vec<&str> = input
            .iter()
            .zip(chan.input_alphabets())
            .map(|(&i, a)| a[i].as_str())
            .collect();
        by_label.insert(joined(&labels), row);
    }
    let rows: Vec<&[(Vec<usize>, f64)]> = book
        .letters
        .iter()
        .map(|l| {
            by_label
                .get(l)
                .copied()
                .ok_or_else(|| CodeError::InvalidInput(format!("channel has no row for codeword letter `{l}`")))
        })
        .collect::<Result<_>>()?;
    let letters: Vec<Vec<usize>> = rows
        .iter()
        .flat_map(|r| r.iter().filter(|(_, p)| *p > 0.0).map(|(o, _)| o.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let pos: BTreeMap<&[usize], usize> = letters.iter().enumerate().map(|(i, l)| (l.as_slice(), i)).collect();
    let lik = rows
        .iter()
        .map(|r| {
            let mut v = vec![0.0; letters.len()];
            for (o, p) in r.iter() {
                if let Some(&i) = pos.get(o.as_slice()) {
                    v[i] = *p;
                }
            }
            v
        })
        .collect();
    Ok(MixtureHandle {
        n: book.n,
        outputs: chan.outputs().to_vec(),
        output_alphabets: chan.output_alphabets().to_vec(),
        letters,
        lik,
        book: Sorted::new(&book.words),
    })
}

impl MixtureHandle {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Output letters (label-index tuples) reachable from the book.
    pub fn letters(&self) -> &[Vec<usize>] {
        &self.letters
    }

    fn prob_indices(&self, seq: &[usize]) -> f64 {
        self.book.mixture(self.n, &mut |i, b| self.lik[b][seq[i]])
    }

    /// Probability of a sequence of output tuples.
    pub fn prob(&self, seq: &[Vec<usize>]) -> f64 {
        if seq.len() != self.n {
            return 0.0;
        }
        let mut idx = Vec::with_capacity(self.n);
        for a in seq {
            match self.letters.binary_search(a) {
                Ok(i) => idx.push(i),
                Err(_) => return 0.0,
            }
        }
        self.prob_indices(&idx)
    }

    /// Every sequence of positive probability, in lexicographic order of
    /// letter indices.
    pub fn enumerate(&self, budget: u64) -> Result<Vec<(Vec<Vec<usize>>, f64)>> {
        let k = self.letters.len();
        let total = count(k, self.n);
        if total > budget {
            return Err(CodeError::BudgetExceeded(format!(
                "{k}^{} output sequences exceed the enumeration budget {budget}",
                self.n
            )));
        }
        let mut idx = vec![0usize; self.n];
        let mut out = Vec::new();
        for c in 0..total {
            decode(c, k, &mut idx);
            let p = self.prob_indices(&idx);
            if p > 0.0 {
                out.push((idx.iter().map(|&i| self.letters[i].clone()).collect(), p));
            }
        }
        Ok(out)
    }

    /// `‖P^n − P̂‖₁` for the i.i.d. product of `target` (over the channel's
    /// output variables).
    pub fn l1_to(&self, target: &JointDist, cfg: &EvalConfig) -> Result<Estimate> {
        let t = target.marginal(&self.outputs)?;
        if t.alphabets() != self.output_alphabets.as_slice() {
            return Err(ProbError::AlphabetMismatch.into());
        }
        let mut all: BTreeSet<Vec<usize>> = self.letters.iter().cloned().collect();
        all.extend(t.iter().map(|(pt, _)| pt.to_vec()));
        let all: Vec<Vec<usize>> = all.into_iter().collect();
        let map: Vec<Option<usize>> = all.iter().map(|a| self.letters.binary_search(a).ok()).collect();
        let q: Vec<f64> = all.iter().map(|a| t.prob(a)).collect();
        let cols: Vec<Vec<f64>> = map
            .iter()
            .map(|m| self.lik.iter().map(|row| m.map_or(0.0, |i| row[i])).collect())
            .collect();
        let classes = lump(&cols, &q);
        let phat = |seq: &[usize]| {
            let mut idx = Vec::with_capacity(seq.len());
            for &a in seq {
                match map[a] {
                    Some(i) => idx.push(i),
                    None => return 0.0,
                }
            }
            self.prob_indices(&idx)
        };
        Ok(l1_to_product(&q, &classes, self.n, &phat, cfg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probcore::make_joint;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn independent() -> JointDist {
        make_joint(
            names(&["A", "B"]),
            vec![names(&["0", "1"]), names(&["0", "1"])],
            vec![
                (vec![0, 0], 0.15),
                (vec![0, 1], 0.15),
                (vec![1, 0], 0.35),
                (vec![1, 1], 0.35),
            ],
        )
        .unwrap()
    }

    #[test]
    fn rate_zero_gives_one_word_and_exact_mixture() {
        let j = independent();
        let book = soft_cover_codebook(&j, &["B"], 4, 0.0, 0.3, 1).unwrap();
        assert_eq!(book.len(), 1);
        let chan = j.conditional(&["A"], &["B"]).unwrap();
        let h = mixture_eval(&book, &chan).unwrap();
        let e = h.l1_to(&j.marginal(&["A"]).unwrap(), &EvalConfig::default()).unwrap();
        assert!(e.l1 < 1e-12);
    }

    #[test]
    fn saturated_book_is_the_typical_set() {
        let j = independent();
        let book = soft_cover_codebook(&j, &["B"], 6, 2.0, 0.2, 1).unwrap();
        assert!(book.truncated);
        let t = TypicalSet::new(&[0.5, 0.5], 6, 0.2).unwrap();
        assert_eq!(book.len() as u128, t.cardinality());
        assert!(book.words.iter().all(|w| t.contains(w)));
    }

    #[test]
    fn draws_are_reproducible() {
        let j = independent();
        let a = soft_cover_codebook(&j, &["B"], 10, 0.3, 0.2, 9).unwrap();
        let b = soft_cover_codebook(&j, &["B"], 10, 0.3, 0.2, 9).unwrap();
        let c = soft_cover_codebook(&j, &["B"], 10, 0.3, 0.2, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.words, c.words);
        assert_eq!(a.len(), (3.0f64).exp().floor() as usize);
    }

    #[test]
    fn empty_typical_set_is_reported() {
        let j = make_joint(
            names(&["B"]),
            vec![names(&["0", "1"])],
            vec![(vec![0], 0.3), (vec![1], 0.7)],
        )
        .unwrap();
        let e = soft_cover_codebook(&j, &["B"], 2, 0.1, 0.01, 0).unwrap_err();
        assert!(matches!(e, CodeError::EmptyTypicalSet { .. }));
    }

    #[test]
    fn single_word_through_identity_is_a_point_mass() {
        let j = make_joint(
            names(&["A", "B"]),
            vec![names(&["0", "1"]), names(&["0", "1"])],
            vec![(vec![0, 0], 0.5), (vec![1, 1], 0.5)],
        )
        .unwrap();
        let book = Codebook {
            letters: names(&["0", "1"]),
            n: 3,
            words: vec![vec![0, 1, 1]],
            rate_nats: 0.0,
            delta: 1.0,
            seed: 0,
            truncated: false,
        };
        let h = mixture_eval(&book, &j.conditional(&["A"], &["B"]).unwrap()).unwrap();
        let all = h.enumerate(100).unwrap();
        assert_eq!(all, vec![(vec![vec![0], vec![1], vec![1]], 1.0)]);
        assert!(h.enumerate(2).is_err());
    }

    #[test]
    fn identical_rows_give_the_common_row() {
        let j = independent();
        let book = Codebook {
            letters: names(&["0", "1"]),
            n: 2,
            words: vec![vec![0, 1], vec![1, 1]],
            rate_nats: 0.0,
            delta: 1.0,
            seed: 0,
            truncated: false,
        };
        let h = mixture_eval(&book, &j.conditional(&["A"], &["B"]).unwrap()).unwrap();
        let total: f64 = h.enumerate(100).unwrap().iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((h.prob(&[vec![1], vec![1]]) - 0.7 * 0.7).abs() < 1e-12);
    }
}
