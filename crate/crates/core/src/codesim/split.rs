//! The split-source synthesis code: a public codebook over `U` and one
//! private codebook over `V` per letter of `U`, pasted positionally.

use std::collections::BTreeMap;

use super::codebook::Codebook;
use super::eval::{l1_to_product, lump, Sorted};
use super::{CodeError, Estimate, EvalConfig, Result};
use crate::probcore::{entropy_of, variational_distance, Channel, JointDist, ProbError};
use crate::ratereg::{AuxDecomposition, Model};

/// Tolerance for accepting a decomposition as a code witness.
const WITNESS_TOL: f64 = 1e-6;

/// Per-letter tables of a decomposition, indexed by book letters.
#[derive(Debug, Clone)]
pub(crate) struct Generators {
    pub u_labels: Vec<String>,
    pub v_labels: Vec<String>,
    pub pu: Vec<f64>,
    /// `P(v | u)`.
    pub pv: Vec<Vec<f64>>,
    /// Support tuples of the observed `XY` and `Z` marginals.
    pub xy: Vec<Vec<usize>>,
    pub z: Vec<Vec<usize>>,
    /// `P(x|u,v) P(y|u,v)` as `[u][v][xy]`.
    pub pxy: Vec<Vec<Vec<f64>>>,
    /// `P(z|u)` as `[u][z]`.
    pub pz: Vec<Vec<f64>>,
    /// `I(XY; V | U = u)`.
    pub cmi: Vec<f64>,
    pub gen_x: Channel,
    pub gen_y: Channel,
    pub gen_z: Channel,
}

fn labels_of(alphabet: &[String], m: &JointDist) -> (Vec<String>, Vec<usize>, Vec<f64>) {
    let mut labels = Vec::new();
    let mut idx = Vec::new();
    let mut p = Vec::new();
    for (pt, q) in m.iter() {
        labels.push(alphabet[pt[0]].clone());
        idx.push(pt[0]);
        p.push(q);
    }
    (labels, idx, p)
}

impl Generators {
    pub fn new(j: &JointDist, aux: &AuxDecomposition, model: Model) -> Result<Self> {
        if aux.model != model || aux.groups.len() != 3 {
            return Err(CodeError::InvalidInput(format!(
                "expected a {model} decomposition, got {}",
                aux.model
            )));
        }
        let g = &aux.groups;
        let obs: Vec<String> = g.concat();
        for name in &obs {
            if j.alphabet(name)? != aux.joint.alphabet(name)? {
                return Err(ProbError::AlphabetMismatch.into());
            }
        }
        let jm = j.marginal(&obs)?;
        let gap = variational_distance(&aux.joint.marginal(&obs)?, &jm)?;
        if gap > WITNESS_TOL {
            return Err(CodeError::InvalidInput(format!(
                "decomposition does not reproduce the target (L1 gap {gap:e})"
            )));
        }
        aux.validate(WITNESS_TOL)
            .map_err(|e| CodeError::InvalidInput(format!("decomposition violates its Markov chains: {e}")))?;

        let u = aux.u.clone();
        let u_alpha = aux.joint.alphabet(&u)?.to_vec();
        let (u_labels, u_idx, pu) = labels_of(&u_alpha, &aux.joint.marginal(&[&u])?);
        let mut cond = vec![u.clone()];
        let (v_labels, v_idx) = match &aux.v {
            Some(v) => {
                cond.push(v.clone());
                let alpha = aux.joint.alphabet(v)?.to_vec();
                let (l, i, _) = labels_of(&alpha, &aux.joint.marginal(&[v])?);
                (l, i)
            }
            None => (vec!["0".to_string()], vec![0]),
        };
        let key = |ui: usize, vi: usize| -> Vec<usize> {
            if aux.v.is_some() {
                vec![u_idx[ui], v_idx[vi]]
            } else {
                vec![u_idx[ui]]
            }
        };
        let xy_names: Vec<String> = g[0].iter().chain(&g[1]).cloned().collect();
        let xy: Vec<Vec<usize>> = jm.marginal(&xy_names)?.iter().map(|(p, _)| p.to_vec()).collect();
        let z: Vec<Vec<usize>> = jm.marginal(&g[2])?.iter().map(|(p, _)| p.to_vec()).collect();
        let nx = g[0].len();
        let gen_x = aux.joint.conditional(&g[0], &cond)?;
        let gen_y = aux.joint.conditional(&g[1], &cond)?;
        let gen_z = aux.joint.conditional(&g[2], &[u.clone()])?;
        let cxy = aux.joint.conditional(&xy_names, &cond)?;
        let cxy_u = aux.joint.conditional(&xy_names, &[u.clone()])?;
        let cv = match &aux.v {
            Some(v) => Some(aux.joint.conditional(&[v.clone()], &[u.clone()])?),
            None => None,
        };

        let ku = u_labels.len();
        let kv = v_labels.len();
        let mut pxy = vec![vec![vec![0.0; xy.len()]; kv]; ku];
        let mut pz = vec![vec![0.0; z.len()]; ku];
        let mut pv = vec![vec![0.0; kv]; ku];
        let mut cmi = vec![0.0; ku];
        for ui in 0..ku {
            for (k, zt) in z.iter().enumerate() {
                pz[ui][k] = gen_z.prob(&[u_idx[ui]], zt);
            }
            let h_u = cxy_u
                .row(&[u_idx[ui]])
                .map_or(0.0, |r| entropy_of(r.iter().map(|(_, p)| p)));
            let mut h_uv = 0.0;
            for vi in 0..kv {
                pv[ui][vi] = match &cv {
                    Some(c) => c.prob(&[u_idx[ui]], &[v_idx[vi]]),
                    None => 1.0,
                };
                let k = key(ui, vi);
                for (t, xyt) in xy.iter().enumerate() {
                    pxy[ui][vi][t] = gen_x.prob(&k, &xyt[..nx]) * gen_y.prob(&k, &xyt[nx..]);
                }
                if let Some(r) = cxy.row(&k) {
                    h_uv += pv[ui][vi] * entropy_of(r.iter().map(|(_, p)| p));
                }
            }
            cmi[ui] = (h_u - h_uv).max(0.0);
        }
        Ok(Self {
            u_labels,
            v_labels,
            pu,
            pv,
            xy,
            z,
            pxy,
            pz,
            cmi,
            gen_x,
            gen_y,
            gen_z,
        })
    }

    /// Index pairs `(xy, z)` for the support of the observed marginal of
    /// `j`, with their probabilities.
    pub fn letters(&self, j: &JointDist, groups: &[Vec<String>]) -> Result<(Vec<(usize, usize)>, Vec<f64>)> {
        let obs: Vec<String> = groups.concat();
        let m = j.marginal(&obs)?;
        let split = groups[0].len() + groups[1].len();
        let mut out = Vec::new();
        let mut q = Vec::new();
        for (pt, p) in m.iter() {
            let a = self
                .xy
                .binary_search(&pt[..split].to_vec())
                .expect("xy letter in support");
            let b = self
                .z
                .binary_search(&pt[split..].to_vec())
                .expect("z letter in support");
            out.push((a, b));
            q.push(p);
        }
        Ok((out, q))
    }
}

/// Public book plus positional private books; shared by both code kinds.
#[derive(Debug, Clone)]
pub(crate) struct Layers {
    pub gen: Generators,
    pub public: Codebook,
    pub private: Vec<Codebook>,
    pub block: Vec<usize>,
    pub public_sorted: Sorted,
    pub private_sorted: Vec<Sorted>,
}

impl Layers {
    pub fn build(gen: Generators, public_rate: f64, n: usize, delta: f64, seed: u64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(CodeError::InvalidInput(format!("delta must be positive, got {delta}")));
        }
        let public = Codebook::draw(gen.u_labels.clone(), &gen.pu, n, public_rate, delta, seed, 0)?;
        let mut private = Vec::new();
        let mut block = Vec::new();
        for (ui, label) in gen.u_labels.iter().enumerate() {
            let nu = (n as f64 * (gen.pu[ui] + delta) + 1e-9).floor() as usize;
            if nu == 0 {
                return Err(CodeError::BlockTooShort {
                    letter: label.clone(),
                    detail: format!(
                        "n(P(u) + delta) = {:.3} rounds down to zero",
                        n as f64 * (gen.pu[ui] + delta)
                    ),
                });
            }
            let book = Codebook::draw(
                gen.v_labels.clone(),
                &gen.pv[ui],
                nu,
                gen.cmi[ui] + delta,
                delta,
                seed,
                1 + ui as u64,
            )?;
            private.push(book);
            block.push(nu);
        }
        for w in &public.words {
            for (ui, &nu) in block.iter().enumerate() {
                let used = w.iter().filter(|&&u| u == ui).count();
                if used > nu {
                    return Err(CodeError::BlockTooShort {
                        letter: gen.u_labels[ui].clone(),
                        detail: format!("a public word uses it {used} times but the block holds {nu}"),
                    });
                }
            }
        }
        let public_sorted = Sorted::new(&public.words);
        let private_sorted = private.iter().map(|b| Sorted::new(&b.words)).collect();
        Ok(Self {
            gen,
            public,
            private,
            block,
            public_sorted,
            private_sorted,
        })
    }

    pub fn private_map(&self) -> BTreeMap<String, Codebook> {
        self.gen
            .u_labels
            .iter()
            .cloned()
            .zip(self.private.iter().cloned())
            .collect()
    }

    /// `Σ_u ln |α_u|`.
    pub fn private_ln_size(&self) -> f64 {
        self.private.iter().map(|b| b.ln_size()).sum()
    }

    /// Probability that the private layer emits `xy` given public word
    /// `word`: a product over `U` letters of mixtures over the matching
    /// private book, each evaluated on the positions where the letter occurs.
    pub fn private_mixture(&self, word: &[usize], xy: &[usize]) -> f64 {
        let mut out = 1.0;
        let mut block: Vec<usize> = Vec::new();
        for ui in 0..self.private.len() {
            block.clear();
            block.extend(word.iter().zip(xy).filter(|(&u, _)| u == ui).map(|(_, &a)| a));
            if block.is_empty() {
                continue;
            }
            if block.len() > self.block[ui] {
                return 0.0;
            }
            let pxy = &self.gen.pxy[ui];
            out *= self.private_sorted[ui].mixture(block.len(), &mut |j, v| pxy[v][block[j]]);
            if out == 0.0 {
                return 0.0;
            }
        }
        out
    }

    /// Whether some `v` gives `xy` positive probability under `u`.
    pub fn reachable(&self) -> Vec<Vec<bool>> {
        self.gen
            .pxy
            .iter()
            .map(|rows| {
                (0..self.gen.xy.len())
                    .map(|t| rows.iter().any(|r| r[t] > 0.0))
                    .collect()
            })
            .collect()
    }
}

/// A built split-source synthesis code.
#[derive(Debug, Clone)]
pub struct SynthesisCode {
    pub n: usize,
    pub delta: f64,
    /// `W_P`, over the letters of `U`.
    pub public: Codebook,
    /// `α_u` for every letter `u`, over the letters of `V`.
    pub private: BTreeMap<String, Codebook>,
    /// `n_u = ⌊n (P(u) + δ)⌋`.
    pub block_lengths: BTreeMap<String, usize>,
    /// `I(XYZ; U)` of the witness.
    pub public_info: f64,
    /// `I(XY; V | U)` of the witness.
    pub private_info: f64,
    /// `I(XY; V | U = u)` per letter.
    pub letter_cmi: BTreeMap<String, f64>,
    /// `P(x | u, v)`, `P(y | u, v)` and `P(z | u)`.
    pub gen_x: Channel,
    pub gen_y: Channel,
    pub gen_z: Channel,
    groups: Vec<Vec<String>>,
    layers: Layers,
}

/// Builds the two-layer code for `j` from a collaborative decomposition.
/// The public book has rate `I(XYZ;U) + δ`; the book for letter `u` has
/// block length `n_u` and rate `I(XY;V|U=u) + δ`. Occurrences of `u` in the
/// public word take the letters of the chosen `α_u` word in order; the
/// unused tail of that word is discarded.
pub fn build_split_source_code(
    j: &JointDist,
    aux: &AuxDecomposition,
    n: usize,
    delta: f64,
    seed: u64,
) -> Result<SynthesisCode> {
    let gen = Generators::new(j, aux, Model::Collaborative)?;
    let (public_info, private_info) = aux.rates()?;
    let layers = Layers::build(gen, public_info + delta, n, delta, seed)?;
    let g = &layers.gen;
    Ok(SynthesisCode {
        n,
        delta,
        public: layers.public.clone(),
        private: layers.private_map(),
        block_lengths: g.u_labels.iter().cloned().zip(layers.block.iter().copied()).collect(),
        public_info,
        private_info,
        letter_cmi: g.u_labels.iter().cloned().zip(g.cmi.iter().copied()).collect(),
        gen_x: g.gen_x.clone(),
        gen_y: g.gen_y.clone(),
        gen_z: g.gen_z.clone(),
        groups: aux.groups.clone(),
        layers,
    })
}

impl SynthesisCode {
    /// `ln |W_P| / n`.
    pub fn public_rate(&self) -> f64 {
        self.public.realized_rate()
    }

    /// `ln |W_K| / n` with `W_K = Π_u α_u`.
    pub fn private_rate(&self) -> f64 {
        self.layers.private_ln_size() / self.n as f64
    }

    fn letters(&self, j: &JointDist) -> Result<(Vec<(usize, usize)>, Vec<f64>)> {
        self.layers.gen.letters(j, &self.groups)
    }

    /// `P̂(a)` for a sequence of indices into `letters`, summing over public
    /// words first and factoring the private layer per `U` letter.
    fn prob_factored(&self, letters: &[(usize, usize)], seq: &[usize], reach: &[Vec<bool>]) -> f64 {
        let l = &self.layers;
        let xy: Vec<usize> = seq.iter().map(|&a| letters[a].0).collect();
        let mut acc = 0.0;
        l.public_sorted.walk(
            self.n,
            &mut |i, u| {
                let (t, z) = letters[seq[i]];
                if reach[u][t] {
                    l.gen.pz[u][z]
                } else {
                    0.0
                }
            },
            &mut |w, c, weight| acc += c as f64 * weight * l.private_mixture(w, &xy),
        );
        acc / l.public_sorted.len() as f64
    }

    /// Probability of a sequence of observed tuples (label indices of `j`'s
    /// `X`, `Y`, `Z` variables in order).
    pub fn prob(&self, j: &JointDist, seq: &[Vec<usize>]) -> Result<f64> {
        let (letters, _) = self.letters(j)?;
        let idx = self.index(j, seq)?;
        Ok(match idx {
            Some(idx) => self.prob_factored(&letters, &idx, &self.layers.reachable()),
            None => 0.0,
        })
    }

    fn index(&self, j: &JointDist, seq: &[Vec<usize>]) -> Result<Option<Vec<usize>>> {
        let m = j.marginal(&self.groups.concat())?;
        let support: Vec<Vec<usize>> = m.iter().map(|(p, _)| p.to_vec()).collect();
        if seq.len() != self.n {
            return Ok(None);
        }
        Ok(seq.iter().map(|a| support.binary_search(a).ok()).collect())
    }

    /// The same probability by brute force over every pair of public word
    /// and private word tuple, with the full output product per pair.
    /// Exponential in the number of private books; for cross-checking.
    pub fn prob_unfactored(&self, j: &JointDist, seq: &[Vec<usize>]) -> Result<f64> {
        let (letters, _) = self.letters(j)?;
        let Some(idx) = self.index(j, seq)? else { return Ok(0.0) };
        let l = &self.layers;
        let sizes: Vec<usize> = l.private.iter().map(|b| b.len()).collect();
        let combos: f64 = sizes.iter().map(|&s| s as f64).product();
        if combos * l.public.len() as f64 > 5e6 {
            return Err(CodeError::BudgetExceeded(
                "too many message pairs for brute force".into(),
            ));
        }
        let mut pick = vec![0usize; sizes.len()];
        let mut acc = 0.0;
        for w in &l.public.words {
            pick.iter_mut().for_each(|p| *p = 0);
            loop {
                let mut next = vec![0usize; sizes.len()];
                let mut p = 1.0;
                for (i, &u) in w.iter().enumerate() {
                    let v = l.private[u].words[pick[u]][next[u]];
                    next[u] += 1;
                    let (t, z) = letters[idx[i]];
                    p *= l.gen.pxy[u][v][t] * l.gen.pz[u][z];
                }
                acc += p;
                let mut k = 0;
                while k < pick.len() {
                    pick[k] += 1;
                    if pick[k] < sizes[k] {
                        break;
                    }
                    pick[k] = 0;
                    k += 1;
                }
                if k == pick.len() {
                    break;
                }
            }
        }
        Ok(acc / (combos * l.public.len() as f64))
    }
}

/// `‖Q^n − P̂‖₁` between the i.i.d. target and the code's output law.
/// Exact when the number of distinguishable output sequences fits
/// `cfg.budget`, else a Monte Carlo estimate with its standard error.
pub fn evaluate_synthesis(code: &SynthesisCode, j: &JointDist, cfg: &EvalConfig) -> Result<Estimate> {
    let (letters, q) = code.letters(j)?;
    let g = &code.layers.gen;
    let cols: Vec<Vec<f64>> = letters
        .iter()
        .map(|&(t, z)| {
            let mut c = Vec::new();
            for u in 0..g.u_labels.len() {
                for v in 0..g.v_labels.len() {
                    c.push(g.pxy[u][v][t] * g.pz[u][z]);
                }
            }
            c
        })
        .collect();
    let classes = lump(&cols, &q);
    let reach = code.layers.reachable();
    let phat = |seq: &[usize]| code.prob_factored(&letters, seq, &reach);
    Ok(l1_to_product(&q, &classes, code.n, &phat, cfg))
}
