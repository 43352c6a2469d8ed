//! The secrecy formation code and the eavesdropper's simulation channel.

use std::collections::BTreeMap;

use super::codebook::Codebook;
use super::eval::{count, cumulative, decode, draw, l1_to_product, lump, monte_carlo};
use super::split::{Generators, Layers};
use super::{CodeError, Estimate, EvalConfig, Method, Result};
use crate::probcore::{Channel, JointDist};
use crate::ratereg::{AuxDecomposition, Model};

/// Public book `β` over `U`, the Alice/Bob private layer, and the source
/// `P(z|u)` from which Charlie's channel
/// `Φ(u|z) = (1/|β|) P(z|u) / P̂(z)` is formed.
#[derive(Debug, Clone)]
pub struct AdversarialCode {
    pub n: usize,
    pub delta: f64,
    pub public: Codebook,
    pub private: BTreeMap<String, Codebook>,
    pub block_lengths: BTreeMap<String, usize>,
    /// `I(Z; U)` of the witness.
    pub public_info: f64,
    /// `I(XY; V | U)` of the witness.
    pub private_info: f64,
    pub gen_x: Channel,
    pub gen_y: Channel,
    /// `P(z | u)`.
    pub source_z: Channel,
    groups: Vec<Vec<String>>,
    layers: Layers,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdversarialEval {
    /// `‖P̂(Z^n) − Q(Z^n)‖₁`.
    pub l1_sim: Estimate,
    /// Distance between Charlie's simulation `Q(XY|Z) Φ(Ũ|Z) Q(Z)` and the
    /// protocol's `P̃(XY Ũ)`. Sequences `z` with `P̂(z) = 0` have no row in
    /// `Φ`; their mass goes to a separate outcome that the protocol never
    /// produces.
    pub l1_charlie: Estimate,
    /// `Q^n` mass of the sequences `z` with `P̂(z) = 0`.
    pub undefined_mass: f64,
}

/// Builds the code for an adversarial decomposition (`XY − Z − U`,
/// `X − UV − Y`): `β` at rate `I(Z;U) + δ` from the typical set of `U`, and
/// the private layer exactly as in the split-source code.
pub fn build_adversarial_code(
    j: &JointDist,
    aux: &AuxDecomposition,
    n: usize,
    delta: f64,
    seed: u64,
) -> Result<AdversarialCode> {
    let gen = Generators::new(j, aux, Model::Adversarial)?;
    let (public_info, private_info) = aux.rates()?;
    let layers = Layers::build(gen, public_info + delta, n, delta, seed)?;
    let g = &layers.gen;
    Ok(AdversarialCode {
        n,
        delta,
        public: layers.public.clone(),
        private: layers.private_map(),
        block_lengths: g.u_labels.iter().cloned().zip(layers.block.iter().copied()).collect(),
        public_info,
        private_info,
        gen_x: g.gen_x.clone(),
        gen_y: g.gen_y.clone(),
        source_z: g.gen_z.clone(),
        groups: aux.groups.clone(),
        layers,
    })
}

impl AdversarialCode {
    /// `ln |β| / n`.
    pub fn public_rate(&self) -> f64 {
        self.public.realized_rate()
    }

    pub fn private_rate(&self) -> f64 {
        self.layers.private_ln_size() / self.n as f64
    }

    fn p_hat_z(&self, z: &[usize]) -> f64 {
        let pz = &self.layers.gen.pz;
        self.layers.public_sorted.mixture(self.n, &mut |i, u| pz[u][z[i]])
    }

    /// `Φ(·|z)` over the distinct codewords of `β`, or `None` when
    /// `P̂(z) = 0`.
    fn row_idx(&self, z: &[usize]) -> Option<Vec<(Vec<usize>, f64)>> {
        let pz = &self.layers.gen.pz;
        let mut row = Vec::new();
        self.layers
            .public_sorted
            .walk(self.n, &mut |i, u| pz[u][z[i]], &mut |w, c, weight| {
                row.push((w.to_vec(), c as f64 * weight))
            });
        let total: f64 = row.iter().map(|(_, p)| p).sum();
        if total <= 0.0 {
            return None;
        }
        row.iter_mut().for_each(|(_, p)| *p /= total);
        Some(row)
    }

    fn z_index(&self, z: &[Vec<usize>]) -> Option<Vec<usize>> {
        z.iter().map(|t| self.layers.gen.z.binary_search(t).ok()).collect()
    }

    /// Charlie's channel at `z` (a sequence of label-index tuples of the
    /// `Z` variables): codeword letters of `U` with probabilities. `None`
    /// when `P̂(z) = 0`.
    pub fn charlie_row(&self, z: &[Vec<usize>]) -> Option<Vec<(Vec<usize>, f64)>> {
        if z.len() != self.n {
            return None;
        }
        self.row_idx(&self.z_index(z)?)
    }

    /// `Φ` as a channel from `Z_1 … Z_n` to `U_1 … U_n`, with rows for
    /// every `z` in the support with `P̂(z) > 0`.
    pub fn charlie_channel(&self, budget: u64) -> Result<Channel> {
        let g = &self.layers.gen;
        let kz = g.z.len();
        let total = count(kz, self.n);
        if total > budget {
            return Err(CodeError::BudgetExceeded(format!(
                "{kz}^{} rows exceed the budget {budget}",
                self.n
            )));
        }
        let z_alpha: Vec<String> =
            g.z.iter()
                .map(|t| {
                    let labels: Vec<&str> = t
                        .iter()
                        .zip(self.source_z.output_alphabets())
                        .map(|(&i, a)| a[i].as_str())
                        .collect();
                    labels.join(",")
                })
                .collect();
        let mut rows = BTreeMap::new();
        let mut z = vec![0usize; self.n];
        for c in 0..total {
            decode(c, kz, &mut z);
            if let Some(row) = self.row_idx(&z) {
                rows.insert(z.clone(), row);
            }
        }
        let names = |s: &str| (1..=self.n).map(|i| format!("{s}{i}")).collect::<Vec<_>>();
        Ok(Channel::new(
            names("Z"),
            vec![z_alpha; self.n],
            names("U"),
            vec![g.u_labels.clone(); self.n],
            rows,
        )?)
    }
}

/// Both distances of the secrecy formation code: how well `β` covers
/// `Q(Z^n)`, and how well Charlie, who sees only `z`, can simulate the
/// joint law of the generated sequences and the public message.
pub fn evaluate_adversarial(code: &AdversarialCode, j: &JointDist, cfg: &EvalConfig) -> Result<AdversarialEval> {
    let g = &code.layers.gen;
    let n = code.n;
    let (letters, q) = g.letters(j, &code.groups)?;
    let kz = g.z.len();
    let kxy = g.xy.len();
    let mut qz = vec![0.0; kz];
    let mut qxyz = vec![vec![0.0; kz]; kxy];
    for (&(t, z), &p) in letters.iter().zip(&q) {
        qz[z] += p;
        qxyz[t][z] = p;
    }
    // z letters compatible with each xy letter
    let zs: Vec<Vec<usize>> = qxyz.iter().map(|r| (0..kz).filter(|&z| r[z] > 0.0).collect()).collect();

    let cols: Vec<Vec<f64>> = (0..kz).map(|z| g.pz.iter().map(|r| r[z]).collect()).collect();
    let phat_z = |s: &[usize]| code.p_hat_z(s);
    let l1_sim = l1_to_product(&qz, &lump(&cols, &qz), n, &phat_z, cfg);

    // Σ_{z ~ xy} Q(xyz) P(z|w) / P̂(z), over z compatible with xy
    let simulated = |xy: &[usize], w: &[usize], phat: &dyn Fn(&[usize]) -> f64| -> f64 {
        let sizes: Vec<usize> = xy.iter().map(|&t| zs[t].len()).collect();
        if sizes.contains(&0) {
            return 0.0;
        }
        let mut pick = vec![0usize; n];
        let mut z = vec![0usize; n];
        let mut acc = 0.0;
        loop {
            let mut p = 1.0;
            for i in 0..n {
                z[i] = zs[xy[i]][pick[i]];
                p *= qxyz[xy[i]][z[i]] * g.pz[w[i]][z[i]];
            }
            if p > 0.0 {
                let d = phat(&z);
                if d > 0.0 {
                    acc += p / d;
                }
            }
            let mut k = n;
            loop {
                if k == 0 {
                    return acc;
                }
                k -= 1;
                pick[k] += 1;
                if pick[k] < sizes[k] {
                    break;
                }
                pick[k] = 0;
            }
        }
    };

    let distinct = code.layers.public_sorted.distinct();
    let beta = code.layers.public_sorted.len() as f64;
    let joint_count = count(letters.len(), n);
    let exact = count(kz, n) <= cfg.budget && (distinct.len() as u64).saturating_mul(joint_count) <= cfg.budget;
    if exact {
        let zt = count(kz, n);
        let table: Vec<f64> = cfg.exec.map(zt as usize, |c| {
            let mut z = vec![0usize; n];
            decode(c as u64, kz, &mut z);
            code.p_hat_z(&z)
        });
        let lookup = |z: &[usize]| table[z.iter().fold(0usize, |a, &x| a * kz + x)];
        let mut undefined = 0.0;
        let mut z = vec![0usize; n];
        for (c, &p) in table.iter().enumerate() {
            if p <= 0.0 {
                decode(c as u64, kz, &mut z);
                undefined += z.iter().map(|&x| qz[x]).product::<f64>();
            }
        }
        let xt = count(kxy, n);
        let parts = cfg.exec.map_slice(&distinct, |&(w, m)| {
            let mut xy = vec![0usize; n];
            let (mut diff, mut mass) = (0.0, 0.0);
            for c in 0..xt {
                decode(c, kxy, &mut xy);
                let b = code.layers.private_mixture(w, &xy);
                let a = simulated(&xy, w, &lookup);
                diff += (a - b).abs();
                mass += b;
            }
            m as f64 / beta * (diff + (1.0 - mass).max(0.0))
        });
        return Ok(AdversarialEval {
            l1_sim,
            l1_charlie: Estimate {
                l1: parts.iter().sum::<f64>() + undefined,
                method: Method::Exact,
                stderr: None,
            },
            undefined_mass: undefined,
        });
    }

    let cum = cumulative(&q);
    let l1_charlie = monte_carlo(cfg, &|rng| {
        let seq: Vec<usize> = (0..n).map(|_| draw(&cum, rng)).collect();
        let xy: Vec<usize> = seq.iter().map(|&a| letters[a].0).collect();
        let z: Vec<usize> = seq.iter().map(|&a| letters[a].1).collect();
        let Some(row) = code.row_idx(&z) else { return 1.0 };
        let weights: Vec<f64> = row.iter().map(|(_, p)| *p).collect();
        let w = &row[draw(&cumulative(&weights), rng)].0;
        let a = simulated(&xy, w, &|s: &[usize]| code.p_hat_z(s));
        let b = code.layers.private_mixture(w, &xy);
        (1.0 - b / a).max(0.0)
    });
    let cum_z = cumulative(&qz);
    let undefined = monte_carlo(cfg, &|rng| {
        let z: Vec<usize> = (0..n).map(|_| draw(&cum_z, rng)).collect();
        if code.p_hat_z(&z) > 0.0 {
            0.0
        } else {
            1.0
        }
    });
    Ok(AdversarialEval {
        l1_sim,
        l1_charlie,
        undefined_mass: undefined.l1 / 2.0,
    })
}
