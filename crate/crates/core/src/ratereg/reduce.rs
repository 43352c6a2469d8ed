//! Carathéodory reduction of auxiliary alphabets.
//!
//! A decomposition mixes per-letter conditionals with weights `P(u)`. If the
//! conditionals (augmented by the entropy row that fixes the rate) are
//! linearly dependent, the weights can move along a null direction until a
//! letter drops out, keeping every linear constraint and choosing the sign
//! that does not increase the private rate.

use nalgebra::DMatrix;

use super::assemble::dense_of;
use super::dense::{entropy, marginal, project, Flat};
use super::{AuxDecomposition, Model, RateError, Result, FINAL_TOL};

/// Null-space pivoting: returns weights with at most rank-many nonzeros and
/// `Σ w cost` not increased. `cols[i]` is the constraint vector of letter `i`.
fn caratheodory(mut w: Vec<f64>, cols: &[Vec<f64>], cost: &[f64]) -> Vec<f64> {
    loop {
        let active: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
        let n = active.len();
        if n <= 1 {
            return w;
        }
        let rows = cols[0].len();
        // pad to a square matrix so the full right singular basis is available
        let m = rows.max(n);
        let a = DMatrix::from_fn(m, n, |r, c| if r < rows { cols[active[c]][r] } else { 0.0 });
        let svd = a.svd(false, true);
        let vt = svd.v_t.expect("requested");
        let sv = &svd.singular_values;
        let (k, smin) = sv
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |b, (i, &s)| if s < b.1 { (i, s) } else { b });
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        if smin > 1e-11 * smax.max(1.0) {
            return w;
        }
        let mut d: Vec<f64> = (0..n).map(|c| vt[(k, c)]).collect();
        let dc: f64 = d.iter().zip(&active).map(|(x, &i)| x * cost[i]).sum();
        if dc > 0.0 {
            d.iter_mut().for_each(|x| *x = -*x);
        }
        // longest step keeping weights nonnegative
        let mut t = f64::INFINITY;
        let mut hit = usize::MAX;
        for (c, &i) in active.iter().enumerate() {
            if d[c] < 0.0 && w[i] / -d[c] < t {
                t = w[i] / -d[c];
                hit = i;
            }
        }
        if hit == usize::MAX {
            // numerically null direction with no negative part; flip it
            d.iter_mut().for_each(|x| *x = -*x);
            for (c, &i) in active.iter().enumerate() {
                if d[c] < 0.0 && w[i] / -d[c] < t {
                    t = w[i] / -d[c];
                    hit = i;
                }
            }
            if hit == usize::MAX {
                return w;
            }
        }
        for (c, &i) in active.iter().enumerate() {
            w[i] = (w[i] + t * d[c]).max(0.0);
        }
        w[hit] = 0.0;
    }
}

/// Shrinks the auxiliary alphabets of a decomposition while keeping the
/// observed marginal and the public rate and not increasing the private rate.
///
/// `U` is reduced to at most `|X||Y||Z| + 1` letters (`|Z| + 1` for the
/// adversarial model). For the collaborative model with `Z − U − V`, `V` is
/// reduced to at most `|X||Y|` letters per `u`; otherwise to `|X||Y||Z|`.
/// Cardinalities count observed letters in the support.
pub fn reduce_cardinality(aux: &AuxDecomposition) -> Result<AuxDecomposition> {
    aux.validate(1e-9)
        .map_err(|_| RateError::InvalidInput("decomposition does not satisfy its Markov chains".into()))?;
    let flat = Flat::new(&aux.base, &aux.groups)?;
    let nobs: usize = flat.cards.iter().product();
    let mut names = vec![aux.u.as_str()];
    if let Some(v) = &aux.v {
        names.push(v);
    }
    let (t, ac) = dense_of(&flat, &aux.joint, &names)?;
    let ku = ac[0];
    let kv = ac.get(1).copied().unwrap_or(1);
    let (before_rp, before_rk) = aux.rates()?;

    // P(obs, u, v) as [u][v][obs]
    let mut p = vec![vec![vec![0.0; nobs]; kv]; ku];
    for (c, &m) in t.iter().enumerate() {
        let o = c / (ku * kv);
        let u = (c / kv) % ku;
        let v = c % kv;
        p[u][v][o] += m;
    }
    let pu: Vec<f64> = p.iter().map(|r| r.iter().flatten().sum()).collect();
    let nxy = if aux.groups.len() == 3 {
        flat.cards[0] * flat.cards[1]
    } else {
        nobs
    };
    let cards3 = [nxy, nobs / nxy];
    let adversarial = aux.model == Model::Adversarial;
    let nz = if adversarial { flat.cards[2] } else { 0 };

    // per-u conditionals and private-rate contributions
    let mut u_cols = Vec::new();
    let mut u_cost = Vec::new();
    for u in 0..ku {
        if pu[u] <= 0.0 {
            u_cols.push(vec![0.0; if adversarial { nz + 1 } else { nobs + 1 }]);
            u_cost.push(0.0);
            continue;
        }
        let cond: Vec<f64> = (0..nobs)
            .map(|o| p[u].iter().map(|r| r[o]).sum::<f64>() / pu[u])
            .collect();
        let mut col = if adversarial {
            marginal(&cards3, &cond, &[1])
        } else {
            cond.clone()
        };
        col.push(entropy(&col));
        u_cols.push(col);
        // I(XY;V|U=u) = H(XY|u) - Σ_v P(v|u) H(XY|u,v)
        let hxy = entropy(&marginal(&cards3, &cond, &[0]));
        let mut hcond = 0.0;
        for row in &p[u] {
            let pv: f64 = row.iter().sum();
            if pv > 0.0 {
                let c: Vec<f64> = row.iter().map(|x| x / pv).collect();
                hcond += pv / pu[u] * entropy(&marginal(&cards3, &c, &[0]));
            }
        }
        u_cost.push(hxy - hcond);
    }
    let wu = caratheodory(pu.clone(), &u_cols, &u_cost);

    // V per retained u
    let z_u_v = aux.groups.len() == 3
        && !adversarial
        && aux.v.as_ref().map_or(false, |v| {
            aux.joint
                .conditional_mutual_information(&aux.groups[2], &[v.clone()], &[aux.u.clone()])
                .map_or(false, |r| r <= 1e-9)
        });
    let mut out: Vec<(f64, Vec<(f64, Vec<f64>)>)> = Vec::new();
    for u in 0..ku {
        if wu[u] <= 0.0 {
            continue;
        }
        let mut vcols = Vec::new();
        let mut vcost = Vec::new();
        let mut conds = Vec::new();
        let mut wv = Vec::new();
        for row in &p[u] {
            let pv: f64 = row.iter().sum();
            let c: Vec<f64> = if pv > 0.0 {
                row.iter().map(|x| x / pv).collect()
            } else {
                vec![0.0; nobs]
            };
            let xy = marginal(&cards3, &c, &[0]);
            vcost.push(-entropy(&xy));
            vcols.push(if z_u_v { xy } else { c.clone() });
            conds.push(c);
            wv.push(pv / pu[u]);
        }
        let wv = caratheodory(wv, &vcols, &vcost);
        let mut comps = Vec::new();
        for (v, c) in conds.into_iter().enumerate() {
            if wv[v] > 0.0 {
                comps.push((wv[v], c));
            }
        }
        if z_u_v {
            // re-attach Z through P(z|u): P(xyz|u,v) = P(xy|u,v) P(z|u)
            let cond_u: Vec<f64> = (0..nobs)
                .map(|o| p[u].iter().map(|r| r[o]).sum::<f64>() / pu[u])
                .collect();
            let pz = marginal(&cards3, &cond_u, &[1]);
            for (_, c) in comps.iter_mut() {
                let xy = marginal(&cards3, c, &[0]);
                *c = (0..nobs).map(|o| xy[o / cards3[1]] * pz[o % cards3[1]]).collect();
            }
        }
        out.push((wu[u], comps));
    }

    let nu = out.len();
    let nv = out.iter().map(|(_, c)| c.len()).max().unwrap_or(1);
    let aux_cards: Vec<usize> = if aux.v.is_some() { vec![nu, nv] } else { vec![nu] };
    let kv2 = if aux.v.is_some() { nv } else { 1 };
    let mut table = vec![0.0; nobs * nu * kv2];
    for (u, (w, comps)) in out.iter().enumerate() {
        for (v, (wv, c)) in comps.iter().enumerate() {
            for o in 0..nobs {
                table[(o * nu + u) * kv2 + v] += w * wv * c[o];
            }
        }
    }
    let fresh: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    let cards = project(&flat.q, &aux_cards, &mut table, 0.0)
        .ok_or_else(|| RateError::InfeasibleReduction("reduced mixture lost support".into()))?;
    let joint = flat.witness(&fresh, &cards, &table)?;
    let reduced = AuxDecomposition { joint, ..aux.clone() };
    let (rp, rk) = reduced.rates()?;
    let viol = reduced.violation()?;
    if viol > FINAL_TOL || (rp - before_rp).abs() > FINAL_TOL || rk > before_rk + FINAL_TOL {
        return Err(RateError::InfeasibleReduction(format!(
            "violation {viol:e}, public rate change {:e}, private rate change {:e}",
            rp - before_rp,
            rk - before_rk
        )));
    }
    Ok(reduced)
}
