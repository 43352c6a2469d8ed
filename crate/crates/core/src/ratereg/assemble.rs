//! Conversions between witnesses, dense tables and optimizer seeds, and the
//! per-letter refinement of the private auxiliary.

use std::collections::BTreeMap;

use crate::probcore::{make_joint, JointDist};

use super::dense::{fresh_names, marginal, normalize, Flat};
use super::models::{AdvSeed, CollabComp, Comp};
use super::search::wyner_search;
use super::{AuxDecomposition, Model, OptimizerConfig, RateError, Result, Roles};

/// Dense table of a witness over `[flat groups…, aux…]`, with the auxiliary
/// cardinalities equal to their alphabet sizes.
pub(crate) fn dense_of(flat: &Flat, joint: &JointDist, aux: &[&str]) -> Result<(Vec<f64>, Vec<usize>)> {
    let gidx: Vec<Vec<usize>> = flat
        .groups
        .iter()
        .map(|g| joint.var_indices(g))
        .collect::<std::result::Result<_, _>>()?;
    let aidx = joint.var_indices(aux)?;
    let aux_cards: Vec<usize> = aidx.iter().map(|&i| joint.alphabets()[i].len()).collect();
    let mut cards = flat.cards.clone();
    cards.extend_from_slice(&aux_cards);
    let mut t = vec![0.0; cards.iter().product()];
    for (pt, p) in joint.iter() {
        let mut c = 0;
        for (g, idx) in gidx.iter().enumerate() {
            let key: Vec<usize> = idx.iter().map(|&i| pt[i]).collect();
            let k = flat.values[g]
                .binary_search(&key)
                .map_err(|_| RateError::InvalidInput("witness leaves the base support".into()))?;
            c = c * cards[g] + k;
        }
        for (a, &i) in aidx.iter().enumerate() {
            c = c * aux_cards[a] + pt[i];
        }
        t[c] += p;
    }
    Ok((t, aux_cards))
}

/// Collaborative seed components from a witness with `U` and optional `V`.
pub(crate) fn collab_comps(flat: &Flat, aux: &AuxDecomposition) -> Result<Vec<CollabComp>> {
    let mut names = vec![aux.u.as_str()];
    if let Some(v) = &aux.v {
        names.push(v);
    }
    let (t, ac) = dense_of(flat, &aux.joint, &names)?;
    let [cx, cy, cz] = [flat.cards[0], flat.cards[1], flat.cards[2]];
    let ku = ac[0];
    let kv = ac.get(1).copied().unwrap_or(1);
    let cards = [cx, cy, cz, ku, kv];
    let pu = marginal(&cards, &t, &[3]);
    let pzu = marginal(&cards, &t, &[3, 2]);
    let puvx = marginal(&cards, &t, &[3, 4, 0]);
    let puvy = marginal(&cards, &t, &[3, 4, 1]);
    let mut out = Vec::new();
    for u in 0..ku {
        if pu[u] <= 0.0 {
            continue;
        }
        let mut z = pzu[u * cz..(u + 1) * cz].to_vec();
        normalize(&mut z);
        let mut v = Vec::new();
        for vi in 0..kv {
            let r = (u * kv + vi) * cx;
            let mut px = puvx[r..r + cx].to_vec();
            let w: f64 = px.iter().sum();
            let r = (u * kv + vi) * cy;
            let mut py = puvy[r..r + cy].to_vec();
            if w > 0.0 && normalize(&mut px) && normalize(&mut py) {
                v.push(Comp {
                    w: w / pu[u],
                    parts: vec![px, py],
                });
            }
        }
        out.push(CollabComp { w: pu[u], z, v });
    }
    Ok(out)
}

/// Adversarial seed from a witness with `U` and `V`.
pub(crate) fn adv_seed(flat: &Flat, aux: &AuxDecomposition, ku: usize) -> Result<AdvSeed> {
    let comps = collab_comps(flat, aux)?;
    if comps.len() > ku {
        return Err(RateError::InvalidInput("seed does not fit".into()));
    }
    let (t, ac) = dense_of(flat, &aux.joint, &[aux.u.as_str()])?;
    let cz = flat.cards[2];
    let cards = [flat.cards[0], flat.cards[1], cz, ac[0]];
    let pzu = marginal(&cards, &t, &[2, 3]);
    // letters of U with mass, in order, map to 0..comps.len()
    let pu = marginal(&cards, &t, &[3]);
    let live: Vec<usize> = (0..ac[0]).filter(|&u| pu[u] > 0.0).collect();
    let c = (0..cz)
        .map(|z| {
            let mut row = vec![0.0; ku];
            for (k, &u) in live.iter().enumerate() {
                row[k] = pzu[z * ac[0] + u];
            }
            normalize(&mut row);
            row
        })
        .collect();
    Ok(AdvSeed {
        c,
        v: Some(comps.into_iter().map(|c| c.v).collect()),
    })
}

/// `Q(xyz) c(u|z)` as a distribution over the observed variables and `U`.
pub(crate) fn with_channel(flat: &Flat, c: &[Vec<f64>], u: &str) -> Result<JointDist> {
    let cz = flat.cards[2];
    let ku = c[0].len();
    let mut t = vec![0.0; flat.q.len() * ku];
    for (i, &q) in flat.q.iter().enumerate() {
        let z = i % cz;
        for k in 0..ku {
            t[i * ku + k] = q * c[z][k];
        }
    }
    let mut table = t;
    let cards = super::dense::project(&flat.q, &[ku], &mut table, 0.0)
        .ok_or_else(|| RateError::InvalidInput("channel leaves support uncovered".into()))?;
    flat.witness(&[u.to_string()], &cards, &table)
}

/// Restriction of `joint` to `var = label`, marginalized onto `keep`.
fn slice(joint: &JointDist, var: usize, label: usize, keep: &[usize]) -> Result<JointDist> {
    let mut entries: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let mut total = 0.0;
    for (pt, p) in joint.iter() {
        if pt[var] == label {
            *entries.entry(keep.iter().map(|&i| pt[i]).collect()).or_insert(0.0) += p;
            total += p;
        }
    }
    let vars = keep.iter().map(|&i| joint.variables()[i].clone()).collect();
    let alph = keep.iter().map(|&i| joint.alphabets()[i].clone()).collect();
    Ok(make_joint(
        vars,
        alph,
        entries.into_iter().map(|(k, p)| (k, p / total)),
    )?)
}

/// Adds a private auxiliary `V` to a distribution over `X, Y, Z, U` by
/// solving, for every letter `u`, the Wyner problem of `P(xy | u)`. When no
/// start meets the tolerance, `V` copies the lower-entropy side of that slice.
pub(crate) fn attach_v(
    joint: &JointDist,
    roles: &Roles,
    u: &str,
    cfg: &OptimizerConfig,
) -> Result<(JointDist, String)> {
    let v = fresh_names(joint.variables(), &["V"]).remove(0);
    let ui = joint.var_index(u)?;
    let xy = roles.xy();
    let xyi = joint.var_indices(&xy)?;
    let sub = OptimizerConfig {
        restarts: cfg.restarts.min(16),
        ..cfg.clone()
    };
    let mut per_u: BTreeMap<usize, BTreeMap<Vec<usize>, Vec<(usize, f64)>>> = BTreeMap::new();
    let mut kv = 1;
    let labels: Vec<usize> = joint.marginal_map(&[ui]).into_keys().map(|k| k[0]).collect();
    for &lab in &labels {
        let s = slice(joint, ui, lab, &xyi)?;
        let mut cond: BTreeMap<Vec<usize>, Vec<(usize, f64)>> = BTreeMap::new();
        // dependence below the constraint tolerance is already an admissible
        // residual of X − UV − Y with constant V
        let dependent = s.support_size() > 1 && s.mutual_information(&roles.x, &roles.y)? > cfg.tol_constraint;
        let found = if dependent {
            wyner_search(&s, &[roles.x.clone(), roles.y.clone()], &sub, &[]).ok()
        } else {
            None
        };
        if let Some(mut pts) = found {
            let best = pts.swap_remove(0);
            let w = &best.witness;
            let wi = w.joint.var_index(&w.u)?;
            let idx = w.joint.var_indices(&xy)?;
            kv = kv.max(w.joint.alphabets()[wi].len());
            for (pt, p) in w.joint.iter() {
                let key: Vec<usize> = idx.iter().map(|&i| pt[i]).collect();
                // rows are normalized below; the witness may keep points the
                // slice has pruned, so P(xy) of the slice is not a safe divisor
                cond.entry(key).or_default().push((pt[wi], p));
            }
        } else if dependent {
            // V = X or V = Y separates the pair exactly
            let nx = roles.x.len();
            let hx = s.entropy(&roles.x)?;
            let hy = s.entropy(&roles.y)?;
            let (lo, hi) = if hx <= hy { (0, nx) } else { (nx, xy.len()) };
            let keys: BTreeMap<Vec<usize>, usize> = s
                .marginal_map(&(lo..hi).collect::<Vec<_>>())
                .into_keys()
                .enumerate()
                .map(|(i, k)| (k, i))
                .collect();
            kv = kv.max(keys.len());
            for (pt, _) in s.iter() {
                cond.insert(pt.to_vec(), vec![(keys[&pt[lo..hi].to_vec()], 1.0)]);
            }
        } else {
            for (pt, _) in s.iter() {
                cond.insert(pt.to_vec(), vec![(0, 1.0)]);
            }
        }
        per_u.insert(lab, cond);
    }
    let mut vars = joint.variables().to_vec();
    vars.push(v.clone());
    let mut alph = joint.alphabets().to_vec();
    alph.push((0..kv).map(|i| i.to_string()).collect());
    let mut entries = Vec::new();
    for (pt, p) in joint.iter() {
        let key: Vec<usize> = xyi.iter().map(|&i| pt[i]).collect();
        let cond = per_u
            .get(&pt[ui])
            .ok_or_else(|| RateError::InvalidInput("inconsistent slice".into()))?;
        // a point the witness dropped carries negligible mass; give it V = 0
        let row: &[(usize, f64)] = cond.get(&key).map_or(&[(0, 1.0)], |r| r.as_slice());
        let s: f64 = row.iter().map(|r| r.1).sum();
        for &(vi, pv) in row {
            let mut q = pt.to_vec();
            q.push(vi);
            entries.push((q, p * pv / s));
        }
    }
    Ok((make_joint(vars, alph, entries)?, v))
}

/// Replaces `U, V` by a single auxiliary `W = (U, V)`.
pub(crate) fn merge_uv(aux: &AuxDecomposition) -> Result<AuxDecomposition> {
    let j = &aux.joint;
    let ui = j.var_index(&aux.u)?;
    let Some(vname) = &aux.v else {
        return Ok(AuxDecomposition {
            model: Model::Wyner3,
            v: None,
            ..aux.clone()
        });
    };
    let vi = j.var_index(vname)?;
    let kv = j.alphabets()[vi].len();
    let keep: Vec<usize> = (0..j.num_vars()).filter(|&i| i != ui && i != vi).collect();
    let w = fresh_names(aux.base.variables(), &["W"]).remove(0);
    let mut vars: Vec<String> = keep.iter().map(|&i| j.variables()[i].clone()).collect();
    vars.push(w.clone());
    let mut alph: Vec<Vec<String>> = keep.iter().map(|&i| j.alphabets()[i].clone()).collect();
    alph.push((0..j.alphabets()[ui].len() * kv).map(|i| i.to_string()).collect());
    let entries = j.iter().map(|(pt, p)| {
        let mut q: Vec<usize> = keep.iter().map(|&i| pt[i]).collect();
        q.push(pt[ui] * kv + pt[vi]);
        (q, p)
    });
    let joint = make_joint(vars, alph, entries)?.pruned();
    Ok(AuxDecomposition {
        model: Model::Wyner3,
        base: aux.base.clone(),
        joint,
        groups: aux.groups.clone(),
        u: w,
        v: None,
    })
}

/// A three-way Wyner witness read as a collaborative decomposition with a
/// constant `V`.
pub(crate) fn wyner3_as_collab(aux: &AuxDecomposition) -> Result<AuxDecomposition> {
    let names = fresh_names(aux.base.variables(), &["U", "V"]);
    let mut renamed: Vec<&str> = aux.joint.variables().iter().map(|s| s.as_str()).collect();
    let wi = aux.joint.var_index(&aux.u)?;
    renamed[wi] = &names[0];
    let joint = aux.joint.renamed(&renamed)?;
    let vconst = JointDist::from_dense(&[&names[1]], &[1], &[1.0])?;
    Ok(AuxDecomposition {
        model: Model::Collaborative,
        base: aux.base.clone(),
        joint: joint.product(&vconst)?,
        groups: aux.groups.clone(),
        u: names[0].clone(),
        v: Some(names[1].clone()),
    })
}
