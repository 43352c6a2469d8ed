//! Optimization problems for each model, their starting points, and the
//! conversion of a solution into an exact witness table.

use rand::Rng;

use super::dense::{marginal, normalize, project, Flat};
use super::engine::{FreeRef, Problem};

/// Logit floor used when a starting point has exact zeros.
const FLOOR: f64 = 1e-6;
/// Auxiliary letters lighter than this are dropped from witnesses.
pub(crate) const DROP_BELOW: f64 = 1e-10;

/// A product component: weight and one distribution per part.
#[derive(Debug, Clone)]
pub(crate) struct Comp {
    pub w: f64,
    pub parts: Vec<Vec<f64>>,
}

/// A collaborative component: `P(u)`, `P(z|u)` and a split of `P(xy|u)`
/// into `V` components with parts `[P(x|uv), P(y|uv)]`.
#[derive(Debug, Clone)]
pub(crate) struct CollabComp {
    pub w: f64,
    pub z: Vec<f64>,
    pub v: Vec<Comp>,
}

/// An adversarial starting point: `c(u|z)` rows and per-`u` splits.
#[derive(Debug, Clone)]
pub(crate) struct AdvSeed {
    pub c: Vec<Vec<f64>>,
    pub v: Option<Vec<Vec<Comp>>>,
}

#[derive(Debug, Clone)]
pub(crate) enum Layout {
    Wyner {
        pw: FreeRef,
        pg: Vec<FreeRef>,
    },
    Collab {
        pu: FreeRef,
        pv: FreeRef,
        px: FreeRef,
        py: FreeRef,
        pz: FreeRef,
    },
    Adversarial {
        c: FreeRef,
        pu: FreeRef,
        pv: FreeRef,
        px: FreeRef,
        py: FreeRef,
    },
}

#[derive(Debug, Clone)]
pub(crate) struct Built {
    pub problem: Problem,
    pub layout: Layout,
    pub aux_cards: Vec<usize>,
}

/// `I(G_1…G_k; W)` subject to the `G` marginal and mutual conditional
/// independence given `W`.
pub(crate) fn wyner(flat: &Flat, m: usize) -> Built {
    let k = flat.cards.len();
    let mut cards = flat.cards.clone();
    cards.push(m);
    let mut p = Problem::new();
    let n = p.add_net(&cards);
    let pw = p.free_factor(n, k, &[]);
    let pg = (0..k).map(|g| p.free_factor(n, g, &[k])).collect();
    let obs: Vec<usize> = (0..k).collect();
    let all: Vec<usize> = (0..=k).collect();
    p.constant(super::dense::entropy(&flat.q));
    p.entropy(n, &[k], 1.0);
    p.entropy(n, &all, -1.0);
    p.match_fixed(n, &obs, flat.q.clone());
    Built {
        problem: p,
        layout: Layout::Wyner { pw, pg },
        aux_cards: vec![m],
    }
}

/// `wp·I(XYZ;U) + wk·I(XY;V|U)` over `p(u)p(v|u)p(x|uv)p(y|uv)p(z|u)`.
pub(crate) fn collab(flat: &Flat, ku: usize, kv: usize, wp: f64, wk: f64) -> Built {
    let [cx, cy, cz] = [flat.cards[0], flat.cards[1], flat.cards[2]];
    let (x, y, z, u, v) = (0, 1, 2, 3, 4);
    let mut p = Problem::new();
    let n = p.add_net(&[cx, cy, cz, ku, kv]);
    let pu = p.free_factor(n, u, &[]);
    let pv = p.free_factor(n, v, &[u]);
    let px = p.free_factor(n, x, &[u, v]);
    let py = p.free_factor(n, y, &[u, v]);
    let pz = p.free_factor(n, z, &[u]);
    p.constant(wp * super::dense::entropy(&flat.q));
    p.entropy(n, &[u], wp - wk);
    p.entropy(n, &[x, y, z, u], -wp);
    p.entropy(n, &[x, y, u], wk);
    p.entropy(n, &[u, v], wk);
    p.entropy(n, &[x, y, u, v], -wk);
    p.match_fixed(n, &[x, y, z], flat.q.clone());
    Built {
        problem: p,
        layout: Layout::Collab { pu, pv, px, py, pz },
        aux_cards: vec![ku, kv],
    }
}

/// `wp·I(Z;U) + wk·I(XY;V|U)` with `U` generated from `Z` by a channel and a
/// second net `p(u)p(v|u)p(x|uv)p(y|uv)` that must reproduce `P(XYU)`.
pub(crate) fn adversarial(flat: &Flat, ku: usize, kv: usize, wp: f64, wk: f64) -> Built {
    let [cx, cy, cz] = [flat.cards[0], flat.cards[1], flat.cards[2]];
    let qz = flat.marginal(&[2]);
    let qxz = flat.marginal(&[0, 2]);
    // Q(x|z), parents [Z] then child X
    let mut tx = vec![0.0; cz * cx];
    for zi in 0..cz {
        for xi in 0..cx {
            tx[zi * cx + xi] = qxz[xi * cz + zi] / qz[zi];
        }
    }
    // Q(y|z,x), parents [Z, X] then child Y
    let mut ty = vec![0.0; cz * cx * cy];
    for zi in 0..cz {
        for xi in 0..cx {
            let row = &mut ty[(zi * cx + xi) * cy..(zi * cx + xi + 1) * cy];
            for yi in 0..cy {
                row[yi] = flat.q[(xi * cy + yi) * cz + zi];
            }
            if !normalize(row) {
                row.iter_mut().for_each(|r| *r = 1.0 / cy as f64);
            }
        }
    }
    let mut p = Problem::new();
    let a = p.add_net(&[cx, cy, cz, ku]);
    p.fixed_factor(a, 2, &[], qz.clone());
    p.fixed_factor(a, 0, &[2], tx);
    p.fixed_factor(a, 1, &[2, 0], ty);
    let c = p.free_factor(a, 3, &[2]);
    let b = p.add_net(&[cx, cy, ku, kv]);
    let pu = p.free_factor(b, 2, &[]);
    let pv = p.free_factor(b, 3, &[2]);
    let px = p.free_factor(b, 0, &[2, 3]);
    let py = p.free_factor(b, 1, &[2, 3]);
    p.constant(wp * super::dense::entropy(&qz));
    p.entropy(a, &[3], wp);
    p.entropy(a, &[2, 3], -wp);
    p.entropy(b, &[0, 1, 2], wk);
    p.entropy(b, &[2, 3], wk);
    p.entropy(b, &[2], -wk);
    p.entropy(b, &[0, 1, 2, 3], -wk);
    p.match_nets((a, &[0, 1, 3]), (b, &[0, 1, 2]));
    Built {
        problem: p,
        layout: Layout::Adversarial { c, pu, pv, px, py },
        aux_cards: vec![ku, kv],
    }
}

fn fill(theta: &mut [f64], r: FreeRef, row: usize, dist: &[f64]) {
    for i in 0..r.card {
        let p = dist.get(i).copied().unwrap_or(0.0);
        theta[r.offset + row * r.card + i] = p.max(FLOOR).ln();
    }
}

fn uniform(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

pub(crate) fn random_theta<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

/// Parameters for a Wyner net from components; `None` if they do not fit.
pub(crate) fn wyner_theta(built: &Built, comps: &[Comp]) -> Option<Vec<f64>> {
    let Layout::Wyner { pw, pg } = &built.layout else {
        unreachable!()
    };
    if comps.len() > pw.card {
        return None;
    }
    let mut theta = vec![0.0; built.problem.n_params()];
    let mut w: Vec<f64> = comps.iter().map(|c| c.w).collect();
    w.resize(pw.card, 0.0);
    fill(&mut theta, *pw, 0, &w);
    for (g, r) in pg.iter().enumerate() {
        for row in 0..pw.card {
            match comps.get(row) {
                Some(c) => fill(&mut theta, *r, row, &c.parts[g]),
                None => fill(&mut theta, *r, row, &uniform(r.card)),
            }
        }
    }
    Some(theta)
}

pub(crate) fn collab_theta(built: &Built, comps: &[CollabComp]) -> Option<Vec<f64>> {
    let Layout::Collab { pu, pv, px, py, pz } = built.layout else {
        unreachable!()
    };
    if comps.len() > pu.card || comps.iter().any(|c| c.v.len() > pv.card) {
        return None;
    }
    let mut theta = vec![0.0; built.problem.n_params()];
    let mut w: Vec<f64> = comps.iter().map(|c| c.w).collect();
    w.resize(pu.card, 0.0);
    fill(&mut theta, pu, 0, &w);
    for u in 0..pu.card {
        let c = comps.get(u);
        fill(
            &mut theta,
            pz,
            u,
            c.map(|c| c.z.as_slice()).unwrap_or(&uniform(pz.card)),
        );
        let mut vw: Vec<f64> = c.map(|c| c.v.iter().map(|v| v.w).collect()).unwrap_or_default();
        if vw.is_empty() {
            vw.push(1.0);
        }
        vw.resize(pv.card, 0.0);
        fill(&mut theta, pv, u, &vw);
        for v in 0..pv.card {
            let comp = c.and_then(|c| c.v.get(v));
            let row = u * pv.card + v;
            match comp {
                Some(k) => {
                    fill(&mut theta, px, row, &k.parts[0]);
                    fill(&mut theta, py, row, &k.parts[1]);
                }
                None => {
                    fill(&mut theta, px, row, &uniform(px.card));
                    fill(&mut theta, py, row, &uniform(py.card));
                }
            }
        }
    }
    Some(theta)
}

pub(crate) fn adversarial_theta(built: &Built, flat: &Flat, seed: &AdvSeed) -> Option<Vec<f64>> {
    let Layout::Adversarial { c, pu, pv, px, py } = built.layout else {
        unreachable!()
    };
    let [cx, cy, cz] = [flat.cards[0], flat.cards[1], flat.cards[2]];
    if seed.c.len() != cz || seed.c.iter().any(|r| r.len() > c.card) {
        return None;
    }
    let ku = c.card;
    let mut theta = vec![0.0; built.problem.n_params()];
    let mut pxy_u = vec![vec![0.0; cx * cy]; ku];
    let mut wu = vec![0.0; ku];
    for zi in 0..cz {
        fill(&mut theta, c, zi, &seed.c[zi]);
        for (ui, &cu) in seed.c[zi].iter().enumerate() {
            for xy in 0..cx * cy {
                let m = flat.q[xy * cz + zi] * cu;
                pxy_u[ui][xy] += m;
                wu[ui] += m;
            }
        }
    }
    fill(&mut theta, pu, 0, &wu);
    for ui in 0..ku {
        let comps = match &seed.v {
            Some(v) => v.get(ui).cloned().unwrap_or_default(),
            None => {
                let mut d = pxy_u[ui].clone();
                if normalize(&mut d) {
                    split_xy(&d, cx, cy, true)
                } else {
                    Vec::new()
                }
            }
        };
        if comps.len() > pv.card {
            return None;
        }
        let mut vw: Vec<f64> = comps.iter().map(|k| k.w).collect();
        if vw.is_empty() {
            vw.push(1.0);
        }
        vw.resize(pv.card, 0.0);
        fill(&mut theta, pv, ui, &vw);
        for v in 0..pv.card {
            let row = ui * pv.card + v;
            match comps.get(v) {
                Some(k) => {
                    fill(&mut theta, px, row, &k.parts[0]);
                    fill(&mut theta, py, row, &k.parts[1]);
                }
                None => {
                    fill(&mut theta, px, row, &uniform(cx));
                    fill(&mut theta, py, row, &uniform(cy));
                }
            }
        }
    }
    Some(theta)
}

/// Dense witness table over `[observed…, aux…]` (before projection).
pub(crate) fn raw_table(built: &Built, theta: &[f64]) -> Vec<f64> {
    match built.layout {
        Layout::Wyner { .. } | Layout::Collab { .. } => built.problem.joint(theta, 0),
        Layout::Adversarial { c, pv, .. } => {
            let a = built.problem.joint(theta, 0);
            let b = built.problem.joint(theta, 1);
            let (ku, kv) = (c.card, pv.card);
            let cz = a.len() / (b.len() / (ku * kv)) / ku;
            let nxy = b.len() / (ku * kv);
            let mut out = vec![0.0; nxy * cz * ku * kv];
            for xy in 0..nxy {
                for zi in 0..cz {
                    for ui in 0..ku {
                        let pa = a[(xy * cz + zi) * ku + ui];
                        if pa == 0.0 {
                            continue;
                        }
                        let row = &b[(xy * ku + ui) * kv..(xy * ku + ui + 1) * kv];
                        let s: f64 = row.iter().sum();
                        for vi in 0..kv {
                            let cond = if s > 0.0 { row[vi] / s } else { 1.0 / kv as f64 };
                            out[((xy * cz + zi) * ku + ui) * kv + vi] = pa * cond;
                        }
                    }
                }
            }
            out
        }
    }
}

/// Projects a raw table onto the exact observed marginal and relabels the
/// auxiliaries; returns the table and the auxiliary cardinalities.
pub(crate) fn exact_table(flat: &Flat, aux_cards: &[usize], mut table: Vec<f64>) -> Option<(Vec<f64>, Vec<usize>)> {
    let cards = project(&flat.q, aux_cards, &mut table, DROP_BELOW)?;
    Some((table, cards))
}

/// `P(xy)` split into components `V = X` (or `V = Y`).
pub(crate) fn split_xy(pxy: &[f64], cx: usize, cy: usize, via_x: bool) -> Vec<Comp> {
    let mut out = Vec::new();
    if via_x {
        for x in 0..cx {
            let mut row: Vec<f64> = (0..cy).map(|y| pxy[x * cy + y]).collect();
            let w: f64 = row.iter().sum();
            if w > 0.0 && normalize(&mut row) {
                let mut dx = vec![0.0; cx];
                dx[x] = 1.0;
                out.push(Comp {
                    w,
                    parts: vec![dx, row],
                });
            }
        }
    } else {
        for y in 0..cy {
            let mut col: Vec<f64> = (0..cx).map(|x| pxy[x * cy + y]).collect();
            let w: f64 = col.iter().sum();
            if w > 0.0 && normalize(&mut col) {
                let mut dy = vec![0.0; cy];
                dy[y] = 1.0;
                out.push(Comp {
                    w,
                    parts: vec![col, dy],
                });
            }
        }
    }
    out
}

fn delta(k: usize, i: usize) -> Vec<f64> {
    let mut d = vec![0.0; k];
    d[i] = 1.0;
    d
}

/// For each value of `axes` with positive mass: its digits, its weight and
/// the conditional table over the remaining axes.
fn slices(cards: &[usize], t: &[f64], axes: &[usize]) -> Vec<(Vec<usize>, f64, Vec<f64>)> {
    let rest: Vec<usize> = (0..cards.len()).filter(|a| !axes.contains(a)).collect();
    let mut keep = axes.to_vec();
    keep.extend_from_slice(&rest);
    let m = marginal(cards, t, &keep);
    let inner: usize = rest.iter().map(|&a| cards[a]).product();
    let outer_cards: Vec<usize> = axes.iter().map(|&a| cards[a]).collect();
    let mut out = Vec::new();
    let mut digits = vec![0; axes.len()];
    for o in 0..m.len() / inner {
        let mut row = m[o * inner..(o + 1) * inner].to_vec();
        let w: f64 = row.iter().sum();
        if w > 0.0 && normalize(&mut row) {
            super::dense::decode(o, &outer_cards, &mut digits);
            out.push((digits.clone(), w, row));
        }
    }
    out
}

/// Product components from conditioning on `axes`: each value of the
/// conditioning axes becomes a component whose parts are point masses on
/// those axes and the conditional marginals of every other axis.
pub(crate) fn condition_components(cards: &[usize], t: &[f64], axes: &[usize]) -> Vec<Comp> {
    let rest: Vec<usize> = (0..cards.len()).filter(|a| !axes.contains(a)).collect();
    let rest_cards: Vec<usize> = rest.iter().map(|&a| cards[a]).collect();
    slices(cards, t, axes)
        .into_iter()
        .map(|(digits, w, cond)| {
            let parts = (0..cards.len())
                .map(|a| match axes.iter().position(|&x| x == a) {
                    Some(i) => delta(cards[a], digits[i]),
                    None => {
                        let r = rest.iter().position(|&x| x == a).unwrap();
                        marginal(&rest_cards, &cond, &[r])
                    }
                })
                .collect();
            Comp { w, parts }
        })
        .collect()
}

/// Cover of a two-way support matrix by maximal all-positive rectangles,
/// with shared cells split evenly; each rectangle becomes a rank-one
/// component `(row dist, column dist)`.
pub(crate) fn rectangle_cover(m: &[f64], rows: usize, cols: usize) -> Vec<Comp> {
    let pos = |r: usize, c: usize| m[r * cols + c] > 0.0;
    let mut rects: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for c in 0..cols {
        let rs: Vec<usize> = (0..rows).filter(|&r| pos(r, c)).collect();
        if rs.is_empty() {
            continue;
        }
        let cs: Vec<usize> = (0..cols).filter(|&c2| rs.iter().all(|&r| pos(r, c2))).collect();
        rects.push((rs, cs));
    }
    for r in 0..rows {
        let cs: Vec<usize> = (0..cols).filter(|&c| pos(r, c)).collect();
        if cs.is_empty() {
            continue;
        }
        let rs: Vec<usize> = (0..rows).filter(|&r2| cs.iter().all(|&c| pos(r2, c))).collect();
        rects.push((rs, cs));
    }
    rects.sort();
    rects.dedup();
    let mut covered = vec![false; rows * cols];
    let mut chosen: Vec<usize> = Vec::new();
    loop {
        let best = (0..rects.len())
            .map(|i| {
                let gain = rects[i]
                    .0
                    .iter()
                    .flat_map(|&r| rects[i].1.iter().map(move |&c| (r, c)))
                    .filter(|&(r, c)| !covered[r * cols + c])
                    .count();
                (gain, i)
            })
            .max_by_key(|&(g, i)| (g, std::cmp::Reverse(i)));
        match best {
            Some((g, i)) if g > 0 => {
                for &r in &rects[i].0 {
                    for &c in &rects[i].1 {
                        covered[r * cols + c] = true;
                    }
                }
                chosen.push(i);
            }
            _ => break,
        }
    }
    let mut share = vec![0usize; rows * cols];
    for &i in &chosen {
        for &r in &rects[i].0 {
            for &c in &rects[i].1 {
                share[r * cols + c] += 1;
            }
        }
    }
    chosen
        .iter()
        .filter_map(|&i| {
            let mut rd = vec![0.0; rows];
            let mut cd = vec![0.0; cols];
            for &r in &rects[i].0 {
                for &c in &rects[i].1 {
                    let v = m[r * cols + c] / share[r * cols + c] as f64;
                    rd[r] += v;
                    cd[c] += v;
                }
            }
            let w: f64 = rd.iter().sum();
            (normalize(&mut rd) && normalize(&mut cd)).then_some(Comp { w, parts: vec![rd, cd] })
        })
        .collect()
}

/// Structured starting points for a Wyner net with `m` letters.
pub(crate) fn wyner_seeds(flat: &Flat, m: usize) -> Vec<Vec<Comp>> {
    let k = flat.cards.len();
    let mut seeds = Vec::new();
    seeds.push(condition_components(&flat.cards, &flat.q, &[]));
    for g in 0..k {
        seeds.push(condition_components(&flat.cards, &flat.q, &[g]));
    }
    if k >= 3 {
        for a in 0..k {
            for b in a + 1..k {
                seeds.push(condition_components(&flat.cards, &flat.q, &[a, b]));
            }
        }
    }
    let all: Vec<usize> = (0..k).collect();
    seeds.push(condition_components(&flat.cards, &flat.q, &all));
    if k == 2 {
        seeds.push(rectangle_cover(&flat.q, flat.cards[0], flat.cards[1]));
    }
    seeds.retain(|s| !s.is_empty() && s.len() <= m);
    seeds
}

/// Structured starting points for the collaborative net.
pub(crate) fn collab_seeds(flat: &Flat, ku: usize, kv: usize) -> Vec<Vec<CollabComp>> {
    let [cx, cy, cz] = [flat.cards[0], flat.cards[1], flat.cards[2]];
    // U components over (XY, Z)
    let two = [cx * cy, cz];
    let mut ucomps: Vec<Vec<Comp>> = Vec::new();
    ucomps.push(condition_components(&two, &flat.q, &[1]));
    ucomps.push(rectangle_cover(&flat.q, cx * cy, cz));
    ucomps.push(condition_components(&two, &flat.q, &[0]));
    ucomps.push(condition_components(&two, &flat.q, &[0, 1]));
    ucomps.push(condition_components(&two, &flat.q, &[]));
    // U = X and U = Y are not exact in general but are useful seeds
    for axis in [0usize, 1] {
        let comps = condition_components(&flat.cards, &flat.q, &[axis])
            .into_iter()
            .map(|c| {
                let mut xy = vec![0.0; cx * cy];
                for x in 0..cx {
                    for y in 0..cy {
                        xy[x * cy + y] = c.parts[0][x] * c.parts[1][y];
                    }
                }
                Comp {
                    w: c.w,
                    parts: vec![xy, c.parts[2].clone()],
                }
            })
            .collect();
        ucomps.push(comps);
    }
    let mut seeds = Vec::new();
    for comps in ucomps {
        if comps.is_empty() || comps.len() > ku {
            continue;
        }
        for via_x in [true, false] {
            let cc: Vec<CollabComp> = comps
                .iter()
                .map(|c| CollabComp {
                    w: c.w,
                    z: c.parts[1].clone(),
                    v: split_xy(&c.parts[0], cx, cy, via_x),
                })
                .collect();
            if cc.iter().all(|c| c.v.len() <= kv) {
                seeds.push(cc);
            }
        }
    }
    seeds
}

/// Structured starting points for the adversarial nets.
pub(crate) fn adversarial_seeds(flat: &Flat, ku: usize) -> Vec<AdvSeed> {
    let cz = flat.cards[2];
    let mut out = Vec::new();
    out.push(AdvSeed {
        c: vec![delta(ku, 0); cz],
        v: None,
    });
    if cz <= ku {
        out.push(AdvSeed {
            c: (0..cz).map(|z| delta(ku, z)).collect(),
            v: None,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probcore::JointDist;

    fn example2_flat() -> Flat {
        let mut t = vec![0.0; 27];
        for p in [[2, 2, 0], [2, 2, 1], [2, 2, 2], [0, 0, 2], [1, 1, 2]] {
            t[p[0] * 9 + p[1] * 3 + p[2]] = 0.2;
        }
        let j = JointDist::from_dense(&["X", "Y", "Z"], &[3, 3, 3], &t).unwrap();
        Flat::new(&j, &[vec!["X".into()], vec!["Y".into()], vec!["Z".into()]]).unwrap()
    }

    #[test]
    fn rectangle_cover_recovers_l_shape_decomposition() {
        let f = example2_flat();
        let comps = rectangle_cover(&f.q, 9, 3);
        assert_eq!(comps.len(), 2);
        for c in &comps {
            assert!((c.w - 0.5).abs() < 1e-12);
        }
        let h: f64 = comps.iter().map(|c| c.w * -(c.w.ln())).sum();
        assert!((h - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn exact_seed_evaluates_to_its_rate() {
        let f = example2_flat();
        let flat2 = Flat::new(&f.base, &[vec!["X".into(), "Y".into()], vec!["Z".into()]]).unwrap();
        let b = wyner(&flat2, 3);
        let seed = rectangle_cover(&flat2.q, flat2.cards[0], flat2.cards[1]);
        let theta = wyner_theta(&b, &seed).unwrap();
        let (t, cards) = exact_table(&flat2, &b.aux_cards, raw_table(&b, &theta)).unwrap();
        assert_eq!(cards, vec![3]);
        let all = [0usize, 1, 2];
        let cards3 = [flat2.cards[0], flat2.cards[1], cards[0]];
        let i = super::super::dense::entropy(&marginal(&cards3, &t, &[0, 1]))
            + super::super::dense::entropy(&marginal(&cards3, &t, &[2]))
            - super::super::dense::entropy(&marginal(&cards3, &t, &all));
        assert!((i - 0.8 * 2f64.ln()).abs() < 1e-4, "{i}");
    }

    #[test]
    fn adversarial_tables_are_consistent() {
        let f = example2_flat();
        let b = adversarial(&f, 4, 3, 1.0, 1.0);
        let seeds = adversarial_seeds(&f, 4);
        let theta = adversarial_theta(&b, &f, &seeds[1]).unwrap();
        let t = raw_table(&b, &theta);
        let s: f64 = t.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        let m = marginal(&[3, 3, 3, 4, 3], &t, &[0, 1, 2]);
        for (a, b) in m.iter().zip(&f.q) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
