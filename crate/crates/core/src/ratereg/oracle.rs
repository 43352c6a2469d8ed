//! Independent reference values by linear programming over gridded mixture
//! components.
//!
//! Every quantity the regions need is a concave-envelope problem: write the
//! observed distribution as a mixture `Σ λ_s s` of admissible components and
//! maximize `Σ λ_s f(s)`. For a fixed finite set of components this is a
//! linear program in the weights. The oracle seeds the component set with a
//! uniform grid over each factor, solves, then repeatedly adds small moves of
//! the active components while halving the move size. Nothing here shares
//! code with the gradient optimizer beyond witness assembly.

use std::cell::RefCell;
use std::collections::{HashMap, HashSet};

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use rand::seq::SliceRandom;

use crate::exec::task_rng;
use crate::probcore::JointDist;

use super::dense::{entropy, fresh_names, marginal, project, Flat};
use super::{AuxDecomposition, Corner, Model, RateError, RatePoint, Result, Roles, FINAL_TOL};

/// Weight of the secondary objective in lexicographic problems.
const EPS: f64 = 1e-4;
const MAX_COLUMNS: usize = 200_000;
const ROUNDS: usize = 60;
const INNER_GRID: usize = 12;
const INNER_ROUNDS: usize = 40;

type Parts = Vec<Vec<f64>>;

struct Envelope<'a> {
    /// Right-hand side; rows with zero target are omitted from the LP and
    /// components must vanish there.
    target: Vec<f64>,
    /// Allowed coordinates per factor.
    allowed: Vec<Vec<usize>>,
    embed: &'a dyn Fn(&Parts) -> Option<Vec<f64>>,
    value: &'a dyn Fn(&Parts) -> f64,
}

struct Column {
    parts: Parts,
    embed: Vec<f64>,
    value: f64,
}

fn compositions(total: usize, slots: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(rem: usize, slot: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if slot + 1 == cur.len() {
            cur[slot] = rem;
            f(cur);
            return;
        }
        for k in 0..=rem {
            cur[slot] = k;
            rec(rem - k, slot + 1, cur, f);
        }
    }
    if slots == 0 {
        return;
    }
    rec(total, 0, &mut vec![0; slots], f);
}

fn key(parts: &Parts) -> Vec<u64> {
    parts.iter().flatten().map(|x| x.to_bits()).collect()
}

fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

impl Envelope<'_> {
    fn column(&self, parts: Parts) -> Option<Column> {
        let embed = (self.embed)(&parts)?;
        let value = (self.value)(&parts);
        Some(Column { parts, embed, value })
    }

    fn grid(&self, g: usize, cards: &[usize]) -> Result<Vec<Column>> {
        let count = self
            .allowed
            .iter()
            .map(|a| binom(g + a.len() - 1, a.len() - 1))
            .fold(1usize, |acc, n| acc.saturating_mul(n));
        if count > MAX_COLUMNS {
            return Err(RateError::BudgetExceeded(format!(
                "{count} grid components exceed the limit of {MAX_COLUMNS}"
            )));
        }
        let per_part: Vec<Vec<Vec<f64>>> = self
            .allowed
            .iter()
            .zip(cards)
            .map(|(a, &card)| {
                let mut out = Vec::new();
                compositions(g, a.len(), &mut |c| {
                    let mut p = vec![0.0; card];
                    for (&i, &k) in a.iter().zip(c) {
                        p[i] = k as f64 / g as f64;
                    }
                    out.push(p);
                });
                out
            })
            .collect();
        let mut cols = Vec::new();
        let mut idx = vec![0usize; per_part.len()];
        loop {
            let parts: Parts = idx.iter().enumerate().map(|(k, &i)| per_part[k][i].clone()).collect();
            cols.extend(self.column(parts));
            let mut k = 0;
            loop {
                if k == idx.len() {
                    return Ok(cols);
                }
                idx[k] += 1;
                if idx[k] < per_part[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    fn lp(&self, cols: &[Column]) -> Result<(f64, Vec<f64>)> {
        self.lp_refs(&cols.iter().collect::<Vec<_>>())
    }

    fn lp_refs(&self, cols: &[&Column]) -> Result<(f64, Vec<f64>)> {
        let mut p = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> = cols.iter().map(|c| p.add_var(c.value, (0.0, f64::INFINITY))).collect();
        for (r, &t) in self.target.iter().enumerate() {
            if t <= 0.0 {
                continue;
            }
            let row: Vec<_> = cols
                .iter()
                .zip(&vars)
                .filter(|(c, _)| c.embed[r] != 0.0)
                .map(|(c, &v)| (v, c.embed[r]))
                .collect();
            p.add_constraint(&row, ComparisonOp::Eq, t);
        }
        let sol = p
            .solve()
            .map_err(|e| RateError::BudgetExceeded(format!("linear program failed: {e}")))?
            .into_solution()
            .map_err(|_| RateError::BudgetExceeded("linear program interrupted".into()))?;
        let w = vars
            .iter()
            .map(|&v| sol.var_value(v))
            .map(|x| if x > 1e-15 { x } else { 0.0 })
            .collect();
        Ok((sol.objective(), w))
    }

    fn neighbors(&self, c: &Column, step: f64, out: &mut Vec<Parts>) {
        for (k, a) in self.allowed.iter().enumerate() {
            for &i in a {
                for &j in a {
                    if i == j || c.parts[k][j] <= 0.0 {
                        continue;
                    }
                    let d = step.min(c.parts[k][j]);
                    let mut parts = c.parts.clone();
                    parts[k][i] += d;
                    parts[k][j] -= d;
                    if parts[k][j] < 1e-15 {
                        parts[k][j] = 0.0;
                    }
                    out.push(parts);
                }
            }
        }
    }

    /// Best mixture found: `(objective, [(weight, parts)])`.
    fn solve(&self, cards: &[usize], g: usize, rounds: usize) -> Result<(f64, Vec<(f64, Parts)>)> {
        let grid = self.grid(g, cards)?;
        let (mut best, w) = self.lp(&grid)?;
        let (mut cols, mut w): (Vec<Column>, Vec<f64>) = grid.into_iter().zip(w).filter(|(_, x)| *x > 0.0).unzip();
        let mut step = 0.5 / g as f64;
        for _ in 0..rounds {
            if step < 1e-9 {
                break;
            }
            let mut moves = Vec::new();
            for c in &cols {
                self.neighbors(c, step, &mut moves);
            }
            let mut seen: HashSet<Vec<u64>> = cols.iter().map(|c| key(&c.parts)).collect();
            let fresh: Vec<Column> = moves
                .into_iter()
                .filter(|p| seen.insert(key(p)))
                .filter_map(|p| self.column(p))
                .collect();
            let mut next: Vec<&Column> = cols.iter().collect();
            next.extend(&fresh);
            match self.lp_refs(&next) {
                Ok((obj, w2)) if obj > best + 1e-12 => {
                    best = obj;
                    let all: Vec<Column> = cols.into_iter().chain(fresh).collect();
                    (cols, w) = all.into_iter().zip(w2).filter(|(_, x)| *x > 0.0).unzip();
                }
                // no gain, or a numerically awkward basis: keep the incumbent
                _ => step *= 0.5,
            }
        }
        let mix = cols
            .into_iter()
            .zip(w)
            .filter(|(_, x)| *x > 1e-12)
            .map(|(c, x)| (x, c.parts))
            .collect();
        Ok((best, mix))
    }
}

fn outer(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            out.push(x * y);
        }
    }
    out
}

/// Embedding of a product of factors, rejected if it puts mass where the
/// target has none.
fn product_embed(target: &[f64]) -> impl Fn(&Parts) -> Option<Vec<f64>> + '_ {
    move |parts: &Parts| {
        let mut s = vec![1.0];
        for p in parts {
            s = outer(&s, p);
        }
        s.iter().zip(target).all(|(&v, &t)| v == 0.0 || t > 0.0).then_some(s)
    }
}

fn support(p: &[f64]) -> Vec<usize> {
    (0..p.len()).filter(|&i| p[i] > 0.0).collect()
}

/// Components of the Wyner problem of a pair table.
#[derive(Debug, Clone)]
struct PairWyner {
    value: f64,
    comps: Vec<(f64, Vec<f64>, Vec<f64>)>,
}

/// Wyner common information of a `rows × cols` table, memoized.
struct InnerWyner {
    rows: usize,
    cols: usize,
    memo: RefCell<HashMap<Vec<u64>, PairWyner>>,
}

impl InnerWyner {
    fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            memo: RefCell::new(HashMap::new()),
        }
    }

    fn get(&self, b: &[f64]) -> Result<PairWyner> {
        let key: Vec<u64> = b.iter().map(|x| x.to_bits()).collect();
        if let Some(r) = self.memo.borrow().get(&key) {
            return Ok(r.clone());
        }
        let r = self.compute(b)?;
        self.memo.borrow_mut().insert(key, r.clone());
        Ok(r)
    }

    fn compute(&self, b: &[f64]) -> Result<PairWyner> {
        let cards = [self.rows, self.cols];
        let px = marginal(&cards, b, &[0]);
        let py = marginal(&cards, b, &[1]);
        let hb = entropy(b);
        let mi = entropy(&px) + entropy(&py) - hb;
        if mi <= 1e-13 {
            return Ok(PairWyner {
                value: 0.0,
                comps: vec![(1.0, px, py)],
            });
        }
        let embed = product_embed(b);
        let value = |p: &Parts| entropy(&p[0]) + entropy(&p[1]);
        let env = Envelope {
            target: b.to_vec(),
            allowed: vec![support(&px), support(&py)],
            embed: &embed,
            value: &value,
        };
        let (obj, mix) = env.solve(&cards, INNER_GRID, INNER_ROUNDS)?;
        let comps = mix.into_iter().map(|(w, mut p)| {
            let r = p.pop().unwrap();
            (w, p.pop().unwrap(), r)
        });
        Ok(PairWyner {
            value: (hb - obj).max(mi),
            comps: comps.collect(),
        })
    }
}

fn check_groups(j: &JointDist, groups: &[Vec<String>]) -> Result<()> {
    let all: Vec<&String> = groups.iter().flatten().collect();
    j.var_indices(&all)?;
    let mut seen = std::collections::HashSet::new();
    for v in &all {
        if !seen.insert(*v) {
            return Err(crate::probcore::ProbError::OverlappingGroups((*v).clone()).into());
        }
    }
    if groups.iter().any(|g| g.is_empty()) {
        return Err(RateError::InvalidInput(
            "every group needs at least one variable".into(),
        ));
    }
    Ok(())
}

fn cap(count: usize, limit: usize, what: &str) -> Result<()> {
    if count > limit {
        return Err(RateError::BudgetExceeded(format!(
            "best mixture needs {count} {what} letters, more than the allowed {limit}"
        )));
    }
    Ok(())
}

/// Reference value of one model computed by gridded linear programming.
///
/// * `Wyner2`: `C(X:Y)` of the groups `roles.x`, `roles.y` (`roles.z` is
///   ignored and may be empty).
/// * `Wyner3`: `C(X:Y:Z)`.
/// * `Collaborative`: the corner `α`, least `I(XYZ;U)` and then least
///   `I(XY;V|U)`.
/// * `Adversarial`: the key cost, least `I(XY;V|U)` and then least `I(Z;U)`.
///
/// `grid` is the number of grid steps per factor simplex. `u_card` and
/// `v_card` cap the alphabets of the returned witness; exceeding them is a
/// `BudgetExceeded` error. The grid is deterministic, `seed` only orders the
/// initial columns.
pub fn brute_force_oracle(
    j: &JointDist,
    roles: &Roles,
    model: Model,
    u_card: usize,
    v_card: usize,
    grid: usize,
    seed: u64,
) -> Result<RatePoint> {
    if u_card == 0 || v_card == 0 || grid == 0 {
        return Err(RateError::InvalidInput(
            "cardinalities and grid must be positive".into(),
        ));
    }
    let groups = match model {
        Model::Wyner2 => vec![roles.x.clone(), roles.y.clone()],
        _ => vec![roles.x.clone(), roles.y.clone(), roles.z.clone()],
    };
    check_groups(j, &groups)?;
    let flat = Flat::new(j, &groups)?;
    let size: usize = flat.cards.iter().product();
    if size > 12 {
        return Err(RateError::InvalidInput(format!(
            "oracle supports at most 12 joint letters, found {size}"
        )));
    }
    let mut rng = task_rng(seed, 0);
    let point = match model {
        Model::Wyner2 | Model::Wyner3 => wyner(&flat, model, u_card, grid, &mut rng)?,
        Model::Collaborative => collab_alpha(&flat, u_card, v_card, grid)?,
        Model::Adversarial => key_cost(&flat, u_card, v_card, grid)?,
    };
    point.witness.validate(FINAL_TOL)?;
    Ok(point)
}

fn finish(
    flat: &Flat,
    model: Model,
    names: &[String],
    aux_cards: &[usize],
    mut table: Vec<f64>,
) -> Result<AuxDecomposition> {
    let cards = project(&flat.q, aux_cards, &mut table, 0.0)
        .ok_or_else(|| RateError::BudgetExceeded("mixture does not cover the support".into()))?;
    let joint = flat.witness(names, &cards, &table)?;
    Ok(AuxDecomposition {
        model,
        base: flat.base.clone(),
        joint,
        groups: flat.groups.clone(),
        u: names[0].clone(),
        v: names.get(1).cloned(),
    })
}

fn wyner(flat: &Flat, model: Model, u_card: usize, grid: usize, rng: &mut impl rand::Rng) -> Result<RatePoint> {
    let embed = product_embed(&flat.q);
    let value = |p: &Parts| p.iter().map(|x| entropy(x)).sum();
    let allowed = (0..flat.cards.len()).map(|g| support(&flat.marginal(&[g]))).collect();
    let env = Envelope {
        target: flat.q.clone(),
        allowed,
        embed: &embed,
        value: &value,
    };
    let (_, mut mix) = env.solve(&flat.cards, grid, ROUNDS)?;
    mix.shuffle(rng);
    mix.sort_by(|a, b| b.0.total_cmp(&a.0));
    let k = mix.len();
    cap(k, u_card, "W")?;
    let cells = flat.q.len();
    let mut table = vec![0.0; cells * k];
    for (u, (w, parts)) in mix.iter().enumerate() {
        let s = embed(parts).unwrap();
        for c in 0..cells {
            table[c * k + u] = w * s[c];
        }
    }
    let names = fresh_names(flat.base.variables(), &["W"]);
    let aux = finish(flat, model, &names, &[k], table)?;
    RatePoint::from_witness(aux, None)
}

/// Writes `w · P(z-part) · P(v|xy)` into a table over `[X, Y, Z, U, V]`,
/// with `P(v|xy)` from the pair components of `P(xy|u)`.
#[allow(clippy::too_many_arguments)]
fn fill_uv(
    table: &mut [f64],
    cards: [usize; 5],
    u: usize,
    xyz: &dyn Fn(usize, usize, usize) -> f64,
    comps: &[(f64, Vec<f64>, Vec<f64>)],
) {
    let [cx, cy, cz, ku, kv] = cards;
    for x in 0..cx {
        for y in 0..cy {
            let m: f64 = comps.iter().map(|(w, p, r)| w * p[x] * r[y]).sum();
            for z in 0..cz {
                let base = xyz(x, y, z);
                if base == 0.0 || m <= 0.0 {
                    continue;
                }
                for (v, (w, p, r)) in comps.iter().enumerate() {
                    let i = (((x * cy + y) * cz + z) * ku + u) * kv + v;
                    table[i] = base * w * p[x] * r[y] / m;
                }
            }
        }
    }
}

fn collab_alpha(flat: &Flat, u_card: usize, v_card: usize, grid: usize) -> Result<RatePoint> {
    let [cx, cy, cz] = [flat.cards[0], flat.cards[1], flat.cards[2]];
    let inner = InnerWyner::new(cx, cy);
    let pxy = flat.marginal(&[0, 1]);
    let pz = flat.marginal(&[2]);
    let embed = product_embed(&flat.q);
    let failed = RefCell::new(None);
    let value = |p: &Parts| match inner.get(&p[0]) {
        Ok(c) => entropy(&p[0]) + entropy(&p[1]) - EPS * c.value,
        Err(e) => {
            failed.borrow_mut().get_or_insert(e);
            f64::NEG_INFINITY
        }
    };
    let env = Envelope {
        target: flat.q.clone(),
        allowed: vec![support(&pxy), support(&pz)],
        embed: &embed,
        value: &value,
    };
    let (_, mix) = env.solve(&[cx * cy, cz], grid, ROUNDS)?;
    if let Some(e) = failed.into_inner() {
        return Err(e);
    }
    let ku = mix.len();
    cap(ku, u_card, "U")?;
    let splits: Vec<PairWyner> = mix.iter().map(|(_, p)| inner.get(&p[0])).collect::<Result<_>>()?;
    let kv = splits.iter().map(|s| s.comps.len()).max().unwrap_or(1);
    cap(kv, v_card, "V")?;
    let cards = [cx, cy, cz, ku, kv];
    let mut table = vec![0.0; cards.iter().product()];
    for (u, ((w, parts), split)) in mix.iter().zip(&splits).enumerate() {
        let xyz = |x: usize, y: usize, z: usize| w * parts[0][x * cy + y] * parts[1][z];
        fill_uv(&mut table, cards, u, &xyz, &split.comps);
    }
    let names = fresh_names(flat.base.variables(), &["U", "V"]);
    let aux = finish(flat, Model::Collaborative, &names, &[ku, kv], table)?;
    RatePoint::from_witness(aux, Some(Corner::Alpha))
}

fn key_cost(flat: &Flat, u_card: usize, v_card: usize, grid: usize) -> Result<RatePoint> {
    let [cx, cy, cz] = [flat.cards[0], flat.cards[1], flat.cards[2]];
    let inner = InnerWyner::new(cx, cy);
    let pz = flat.marginal(&[2]);
    // Q(xy|z), laid out [xy][z]
    let cond: Vec<f64> = (0..cx * cy * cz).map(|i| flat.q[i] / pz[i % cz]).collect();
    let mix_xy = |r: &[f64]| -> Vec<f64> {
        (0..cx * cy)
            .map(|xy| (0..cz).map(|z| cond[xy * cz + z] * r[z]).sum())
            .collect()
    };
    let failed = RefCell::new(None);
    let embed = |p: &Parts| Some(p[0].clone());
    let value = |p: &Parts| match inner.get(&mix_xy(&p[0])) {
        Ok(c) => EPS * entropy(&p[0]) - c.value,
        Err(e) => {
            failed.borrow_mut().get_or_insert(e);
            f64::NEG_INFINITY
        }
    };
    let env = Envelope {
        target: pz.clone(),
        allowed: vec![support(&pz)],
        embed: &embed,
        value: &value,
    };
    let (_, mix) = env.solve(&[cz], grid, ROUNDS)?;
    if let Some(e) = failed.into_inner() {
        return Err(e);
    }
    let ku = mix.len();
    cap(ku, u_card, "U")?;
    let splits: Vec<PairWyner> = mix
        .iter()
        .map(|(_, p)| inner.get(&mix_xy(&p[0])))
        .collect::<Result<_>>()?;
    let kv = splits.iter().map(|s| s.comps.len()).max().unwrap_or(1);
    cap(kv, v_card, "V")?;
    let cards = [cx, cy, cz, ku, kv];
    let mut table = vec![0.0; cards.iter().product()];
    for (u, ((w, parts), split)) in mix.iter().zip(&splits).enumerate() {
        let xyz = |x: usize, y: usize, z: usize| w * parts[0][z] * cond[(x * cy + y) * cz + z];
        fill_uv(&mut table, cards, u, &xyz, &split.comps);
    }
    let names = fresh_names(flat.base.variables(), &["U", "V"]);
    let aux = finish(flat, Model::Adversarial, &names, &[ku, kv], table)?;
    RatePoint::from_witness(aux, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roles2(a: &str, b: &str) -> Roles {
        Roles::new(&[a], &[b], &[] as &[&str])
    }

    #[test]
    fn independent_pair_has_zero_common_information() {
        let j = JointDist::from_dense(&["A", "B"], &[2, 2], &[0.12, 0.28, 0.18, 0.42]).unwrap();
        let p = brute_force_oracle(&j, &roles2("A", "B"), Model::Wyner2, 4, 1, 6, 0).unwrap();
        assert!(p.rp.abs() < 1e-9, "{}", p.rp);
    }

    #[test]
    fn equal_bits_need_one_full_bit() {
        let j = JointDist::from_dense(&["A", "B"], &[2, 2], &[0.5, 0.0, 0.0, 0.5]).unwrap();
        let p = brute_force_oracle(&j, &roles2("A", "B"), Model::Wyner2, 4, 1, 6, 0).unwrap();
        assert!((p.rp - 2f64.ln()).abs() < 1e-9, "{}", p.rp);
    }

    #[test]
    fn symmetric_binary_source_matches_closed_form() {
        // doubly symmetric binary source with crossover a0: C = 1 + h(a0) - 2 h(a1),
        // a1 = (1 - sqrt(1 - 2 a0)) / 2, valid for a0 ≤ 1/2
        let a0: f64 = 0.2;
        let h = |p: f64| -p * p.ln() - (1.0 - p) * (1.0 - p).ln();
        let a1 = (1.0 - (1.0 - 2.0 * a0).sqrt()) / 2.0;
        let expected = 2f64.ln() + h(a0) - 2.0 * h(a1);
        let t = [(1.0 - a0) / 2.0, a0 / 2.0, a0 / 2.0, (1.0 - a0) / 2.0];
        let j = JointDist::from_dense(&["A", "B"], &[2, 2], &t).unwrap();
        let p = brute_force_oracle(&j, &roles2("A", "B"), Model::Wyner2, 4, 1, 10, 0).unwrap();
        assert!((p.rp - expected).abs() < 1e-6, "{} vs {}", p.rp, expected);
    }
}
