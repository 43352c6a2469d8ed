//! Smooth optimization over products of conditional probability tables.
//!
//! A [`Net`] is a joint distribution over a few small-alphabet variables,
//! written as a product of factors `p(child | parents)`. Free factors are
//! softmax-parametrized; fixed factors are constants. A [`Problem`] couples
//! one or more nets with an objective that is a weighted sum of marginal
//! entropies and with linear equality constraints on marginals. It is solved
//! by an augmented Lagrangian with L-BFGS inner iterations.

use std::collections::HashMap;

#[derive(Debug, Clone)]
enum Kind {
    Free(usize),
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone)]
struct Factor {
    kind: Kind,
    index: Vec<u32>,
}

#[derive(Debug, Clone)]
pub(crate) struct Net {
    cards: Vec<usize>,
    size: usize,
    factors: Vec<Factor>,
}

impl Net {
    fn new(cards: &[usize]) -> Self {
        Self {
            cards: cards.to_vec(),
            size: cards.iter().product(),
            factors: Vec::new(),
        }
    }

    /// Row-major index of each configuration projected onto `vars`.
    fn projection(&self, vars: &[usize]) -> (Vec<u32>, usize) {
        let nv = self.cards.len();
        let mut strides = vec![0usize; nv];
        let mut size = 1;
        for &v in vars.iter().rev() {
            strides[v] = size;
            size *= self.cards[v];
        }
        let mut out = Vec::with_capacity(self.size);
        let mut digits = vec![0usize; nv];
        for _ in 0..self.size {
            out.push(digits.iter().zip(&strides).map(|(d, s)| d * s).sum::<usize>() as u32);
            for k in (0..nv).rev() {
                digits[k] += 1;
                if digits[k] < self.cards[k] {
                    break;
                }
                digits[k] = 0;
            }
        }
        (out, size)
    }
}

/// Handle to a free factor's parameter block.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FreeRef {
    pub offset: usize,
    pub rows: usize,
    pub card: usize,
}

#[derive(Debug, Clone)]
struct Subset {
    net: usize,
    map: Vec<u32>,
    size: usize,
}

#[derive(Debug, Clone)]
enum Target {
    Fixed(Vec<f64>),
    Subset(usize),
}

#[derive(Debug, Clone)]
struct Constraint {
    a: usize,
    b: Target,
    offset: usize,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Problem {
    nets: Vec<Net>,
    n_params: usize,
    blocks: Vec<(usize, usize)>,
    subsets: Vec<Subset>,
    subset_ids: HashMap<(usize, Vec<usize>), usize>,
    entropy: Vec<(usize, f64)>,
    constant: f64,
    constraints: Vec<Constraint>,
    n_resid: usize,
}

impl Problem {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    pub(crate) fn n_params(&self) -> usize {
        self.n_params
    }

    pub(crate) fn add_net(&mut self, cards: &[usize]) -> usize {
        self.nets.push(Net::new(cards));
        self.nets.len() - 1
    }

    fn factor_index(&self, net: usize, child: usize, parents: &[usize]) -> (Vec<u32>, usize) {
        let mut vars = parents.to_vec();
        vars.push(child);
        let (idx, size) = self.nets[net].projection(&vars);
        (idx, size)
    }

    /// Adds a softmax-parametrized `p(child | parents)`; table layout is
    /// `parent_index * card(child) + child`.
    pub(crate) fn free_factor(&mut self, net: usize, child: usize, parents: &[usize]) -> FreeRef {
        let (index, size) = self.factor_index(net, child, parents);
        let card = self.nets[net].cards[child];
        let r = FreeRef {
            offset: self.n_params,
            rows: size / card,
            card,
        };
        for row in 0..r.rows {
            self.blocks.push((r.offset + row * card, card));
        }
        self.n_params += size;
        self.nets[net].factors.push(Factor {
            kind: Kind::Free(r.offset),
            index,
        });
        r
    }

    pub(crate) fn fixed_factor(&mut self, net: usize, child: usize, parents: &[usize], table: Vec<f64>) {
        let (index, size) = self.factor_index(net, child, parents);
        assert_eq!(size, table.len());
        self.nets[net].factors.push(Factor {
            kind: Kind::Fixed(table),
            index,
        });
    }

    fn subset(&mut self, net: usize, vars: &[usize]) -> usize {
        if let Some(&id) = self.subset_ids.get(&(net, vars.to_vec())) {
            return id;
        }
        let (map, size) = self.nets[net].projection(vars);
        self.subsets.push(Subset { net, map, size });
        let id = self.subsets.len() - 1;
        self.subset_ids.insert((net, vars.to_vec()), id);
        id
    }

    /// Adds `coef * H(vars)` of `net` to the objective.
    pub(crate) fn entropy(&mut self, net: usize, vars: &[usize], coef: f64) {
        if vars.is_empty() || coef == 0.0 {
            return;
        }
        let s = self.subset(net, vars);
        self.entropy.push((s, coef));
    }

    pub(crate) fn constant(&mut self, c: f64) {
        self.constant += c;
    }

    /// Requires the marginal of `net` on `vars` to equal `target`.
    pub(crate) fn match_fixed(&mut self, net: usize, vars: &[usize], target: Vec<f64>) {
        let a = self.subset(net, vars);
        assert_eq!(self.subsets[a].size, target.len());
        self.constraints.push(Constraint {
            a,
            b: Target::Fixed(target),
            offset: self.n_resid,
        });
        self.n_resid += self.subsets[a].size;
    }

    /// Requires two nets to agree on a marginal (variables listed in
    /// corresponding order).
    pub(crate) fn match_nets(&mut self, a: (usize, &[usize]), b: (usize, &[usize])) {
        let sa = self.subset(a.0, a.1);
        let sb = self.subset(b.0, b.1);
        assert_eq!(self.subsets[sa].size, self.subsets[sb].size);
        self.constraints.push(Constraint {
            a: sa,
            b: Target::Subset(sb),
            offset: self.n_resid,
        });
        self.n_resid += self.subsets[sa].size;
    }

    pub(crate) fn workspace(&self) -> Workspace {
        Workspace {
            probs: vec![0.0; self.n_params],
            joints: self.nets.iter().map(|n| vec![0.0; n.size]).collect(),
            margs: self.subsets.iter().map(|s| vec![0.0; s.size]).collect(),
            gmarg: self.subsets.iter().map(|s| vec![0.0; s.size]).collect(),
            gjoint: self.nets.iter().map(|n| vec![0.0; n.size]).collect(),
            gprob: vec![0.0; self.n_params],
            resid: vec![0.0; self.n_resid],
        }
    }

    /// Softmax of every block.
    pub(crate) fn probabilities(&self, theta: &[f64], out: &mut [f64]) {
        for &(o, len) in &self.blocks {
            let t = &theta[o..o + len];
            let top = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut s = 0.0;
            for i in 0..len {
                let e = (t[i] - top).exp();
                out[o + i] = e;
                s += e;
            }
            for v in &mut out[o..o + len] {
                *v /= s;
            }
        }
    }

    fn forward(&self, theta: &[f64], ws: &mut Workspace) -> f64 {
        self.probabilities(theta, &mut ws.probs);
        for (n, net) in self.nets.iter().enumerate() {
            let joint = &mut ws.joints[n];
            joint.iter_mut().for_each(|v| *v = 1.0);
            for f in &net.factors {
                match &f.kind {
                    Kind::Free(o) => {
                        let t = &ws.probs[*o..];
                        for (c, j) in joint.iter_mut().enumerate() {
                            *j *= t[f.index[c] as usize];
                        }
                    }
                    Kind::Fixed(t) => {
                        for (c, j) in joint.iter_mut().enumerate() {
                            *j *= t[f.index[c] as usize];
                        }
                    }
                }
            }
        }
        for (s, sub) in self.subsets.iter().enumerate() {
            let m = &mut ws.margs[s];
            m.iter_mut().for_each(|v| *v = 0.0);
            for (c, &p) in ws.joints[sub.net].iter().enumerate() {
                m[sub.map[c] as usize] += p;
            }
        }
        for con in &self.constraints {
            let a = &ws.margs[con.a];
            for i in 0..a.len() {
                let b = match &con.b {
                    Target::Fixed(t) => t[i],
                    Target::Subset(sb) => ws.margs[*sb][i],
                };
                ws.resid[con.offset + i] = a[i] - b;
            }
        }
        let mut f = self.constant;
        for &(s, coef) in &self.entropy {
            f += coef
                * ws.margs[s]
                    .iter()
                    .filter(|&&p| p > 0.0)
                    .map(|&p| -p * p.ln())
                    .sum::<f64>();
        }
        f
    }

    /// Objective value and constraint residuals at `theta`.
    pub(crate) fn evaluate(&self, theta: &[f64], ws: &mut Workspace) -> (f64, f64) {
        let f = self.forward(theta, ws);
        let infeas = ws.resid.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        (f, infeas)
    }

    /// Augmented Lagrangian `f + νᵀr + μ/2 |r|²` and its gradient.
    fn lagrangian(&self, theta: &[f64], nu: &[f64], mu: f64, grad: &mut [f64], ws: &mut Workspace) -> f64 {
        let f = self.forward(theta, ws);
        let mut l = f;
        for (i, &r) in ws.resid.iter().enumerate() {
            l += nu[i] * r + 0.5 * mu * r * r;
        }
        for g in &mut ws.gmarg {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        for &(s, coef) in &self.entropy {
            let (m, g) = (&ws.margs[s], &mut ws.gmarg[s]);
            for i in 0..m.len() {
                if m[i] > 0.0 {
                    g[i] -= coef * (m[i].ln() + 1.0);
                }
            }
        }
        for con in &self.constraints {
            for i in 0..self.subsets[con.a].size {
                let w = nu[con.offset + i] + mu * ws.resid[con.offset + i];
                ws.gmarg[con.a][i] += w;
                if let Target::Subset(sb) = con.b {
                    ws.gmarg[sb][i] -= w;
                }
            }
        }
        for g in &mut ws.gjoint {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        for (s, sub) in self.subsets.iter().enumerate() {
            let (gj, gm) = (&mut ws.gjoint[sub.net], &ws.gmarg[s]);
            for c in 0..gj.len() {
                gj[c] += gm[sub.map[c] as usize];
            }
        }
        ws.gprob.iter_mut().for_each(|v| *v = 0.0);
        let mut vals = [0.0f64; 8];
        let mut pre = [0.0f64; 9];
        for (n, net) in self.nets.iter().enumerate() {
            let nf = net.factors.len();
            for c in 0..net.size {
                let g = ws.gjoint[n][c];
                if g == 0.0 {
                    continue;
                }
                for (k, f) in net.factors.iter().enumerate() {
                    vals[k] = match &f.kind {
                        Kind::Free(o) => ws.probs[o + f.index[c] as usize],
                        Kind::Fixed(t) => t[f.index[c] as usize],
                    };
                }
                pre[0] = 1.0;
                for k in 0..nf {
                    pre[k + 1] = pre[k] * vals[k];
                }
                let mut suf = 1.0;
                for k in (0..nf).rev() {
                    if let Kind::Free(o) = net.factors[k].kind {
                        ws.gprob[o + net.factors[k].index[c] as usize] += g * pre[k] * suf;
                    }
                    suf *= vals[k];
                }
            }
        }
        for &(o, len) in &self.blocks {
            let p = &ws.probs[o..o + len];
            let gp = &ws.gprob[o..o + len];
            let s: f64 = p.iter().zip(gp).map(|(a, b)| a * b).sum();
            for i in 0..len {
                grad[o + i] = p[i] * (gp[i] - s);
            }
        }
        l
    }

    /// Pins every free probability below `tau` to exactly zero (its logit is
    /// pushed far below the block maximum). Returns whether any entry moved.
    pub(crate) fn snap(&self, theta: &mut [f64], tau: f64) -> bool {
        let mut probs = vec![0.0; self.n_params];
        self.probabilities(theta, &mut probs);
        let mut changed = false;
        for &(o, len) in &self.blocks {
            let top = theta[o..o + len].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for i in o..o + len {
                if probs[i] > 0.0 && probs[i] < tau {
                    theta[i] = top - 1000.0;
                    changed = true;
                }
            }
        }
        changed
    }

    /// Dense joint of `net` at `theta`.
    pub(crate) fn joint(&self, theta: &[f64], net: usize) -> Vec<f64> {
        let mut ws = self.workspace();
        self.forward(theta, &mut ws);
        ws.joints.swap_remove(net)
    }
}

pub(crate) struct Workspace {
    probs: Vec<f64>,
    joints: Vec<Vec<f64>>,
    margs: Vec<Vec<f64>>,
    gmarg: Vec<Vec<f64>>,
    gjoint: Vec<Vec<f64>>,
    gprob: Vec<f64>,
    resid: Vec<f64>,
}

/// Limited-memory BFGS with Armijo backtracking. Returns the final value and
/// the number of function evaluations.
pub(crate) fn lbfgs<F>(x: &mut [f64], mut fg: F, max_evals: usize, gtol: f64) -> (f64, usize)
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    const MEM: usize = 10;
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut f = fg(x, &mut g);
    let mut evals = 1;
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho: Vec<f64> = Vec::new();
    let mut d = vec![0.0; n];
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];
    let mut alpha = vec![0.0; MEM];
    let mut stalls = 0;
    while evals < max_evals {
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(gmax > gtol) {
            break;
        }
        // two-loop recursion
        d.copy_from_slice(&g);
        let k = s_hist.len();
        for i in (0..k).rev() {
            alpha[i] = rho[i] * dot(&s_hist[i], &d);
            axpy(-alpha[i], &y_hist[i], &mut d);
        }
        if k > 0 {
            let gamma = dot(&s_hist[k - 1], &y_hist[k - 1]) / dot(&y_hist[k - 1], &y_hist[k - 1]);
            d.iter_mut().for_each(|v| *v *= gamma);
        } else {
            let sc = 1.0 / gmax.max(1.0);
            d.iter_mut().for_each(|v| *v *= sc);
        }
        for i in 0..k {
            let b = rho[i] * dot(&y_hist[i], &d);
            axpy(alpha[i] - b, &s_hist[i], &mut d);
        }
        d.iter_mut().for_each(|v| *v = -*v);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            s_hist.clear();
            y_hist.clear();
            rho.clear();
            let sc = 1.0 / gmax.max(1.0);
            for i in 0..n {
                d[i] = -g[i] * sc;
            }
            slope = dot(&g, &d);
        }
        let mut t = 1.0;
        let mut fnew;
        let mut accepted = false;
        loop {
            for i in 0..n {
                xn[i] = x[i] + t * d[i];
            }
            fnew = fg(&xn, &mut gn);
            evals += 1;
            if fnew.is_finite() && fnew <= f + 1e-4 * t * slope {
                accepted = true;
                break;
            }
            t *= 0.5;
            if t < 1e-12 || evals >= max_evals {
                break;
            }
        }
        if !accepted {
            if s_hist.is_empty() {
                break;
            }
            s_hist.clear();
            y_hist.clear();
            rho.clear();
            continue;
        }
        let mut s = vec![0.0; n];
        let mut y = vec![0.0; n];
        for i in 0..n {
            s[i] = xn[i] - x[i];
            y[i] = gn[i] - g[i];
        }
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if s_hist.len() == MEM {
                s_hist.remove(0);
                y_hist.remove(0);
                rho.remove(0);
            }
            s_hist.push(s);
            y_hist.push(y);
            rho.push(1.0 / sy);
        }
        if f - fnew <= 1e-15 * (1.0 + f.abs()) {
            stalls += 1;
        } else {
            stalls = 0;
        }
        x.copy_from_slice(&xn);
        g.copy_from_slice(&gn);
        f = fnew;
        if stalls >= 4 {
            break;
        }
    }
    (f, evals)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Settings {
    pub mu0: f64,
    pub max_evals: usize,
    pub tol: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Solved {
    pub theta: Vec<f64>,
    // read by the solver tests
    #[cfg_attr(not(test), allow(dead_code))]
    pub objective: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    pub infeasibility: f64,
}

/// Augmented-Lagrangian solve from `theta`.
pub(crate) fn solve(problem: &Problem, mut theta: Vec<f64>, s: Settings) -> Solved {
    let mut ws = problem.workspace();
    let mut nu = vec![0.0; problem.n_resid];
    let mut mu = s.mu0;
    let mut prev = f64::INFINITY;
    let mut budget = s.max_evals;
    let inner = (s.max_evals / 8).max(50);
    loop {
        let (_, used) = lbfgs(
            &mut theta,
            |x, g| problem.lagrangian(x, &nu, mu, g, &mut ws),
            inner.min(budget),
            1e-10,
        );
        budget = budget.saturating_sub(used);
        let (f, infeas) = problem.evaluate(&theta, &mut ws);
        if infeas <= s.tol || budget == 0 || problem.n_resid == 0 {
            return Solved {
                theta,
                objective: f,
                infeasibility: infeas,
            };
        }
        for (n, r) in nu.iter_mut().zip(&ws.resid) {
            *n += mu * r;
        }
        if infeas > 0.25 * prev {
            mu = (mu * 10.0).min(1e10);
        }
        prev = infeas;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lbfgs_minimizes_quadratic() {
        let mut x = vec![3.0, -2.0];
        let (f, _) = lbfgs(
            &mut x,
            |x, g| {
                g[0] = 2.0 * (x[0] - 1.0);
                g[1] = 20.0 * (x[1] + 0.5);
                (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 0.5).powi(2)
            },
            500,
            1e-12,
        );
        assert!(f < 1e-18);
        assert!((x[0] - 1.0).abs() < 1e-9 && (x[1] + 0.5).abs() < 1e-9);
    }

    fn numeric_check(p: &Problem, theta: &[f64], nu: &[f64], mu: f64) {
        let mut ws = p.workspace();
        let mut g = vec![0.0; theta.len()];
        p.lagrangian(theta, nu, mu, &mut g, &mut ws);
        let mut scratch = vec![0.0; theta.len()];
        for i in 0..theta.len() {
            let mut a = theta.to_vec();
            let mut b = theta.to_vec();
            a[i] += 1e-6;
            b[i] -= 1e-6;
            let fa = p.lagrangian(&a, nu, mu, &mut scratch, &mut ws);
            let fb = p.lagrangian(&b, nu, mu, &mut scratch, &mut ws);
            let num = (fa - fb) / 2e-6;
            assert!(
                (num - g[i]).abs() < 1e-6 * (1.0 + num.abs()),
                "param {i}: {num} vs {}",
                g[i]
            );
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // p(w) p(a|w) p(b|w) against a fixed target, plus a second net with a
        // fixed factor tied to the first
        let mut p = Problem::new();
        let n0 = p.add_net(&[2, 3, 2]);
        p.free_factor(n0, 2, &[]);
        p.free_factor(n0, 0, &[2]);
        p.free_factor(n0, 1, &[2]);
        p.entropy(n0, &[2], 1.0);
        p.entropy(n0, &[0, 1, 2], -1.0);
        p.entropy(n0, &[0, 1], 0.7);
        p.match_fixed(n0, &[0, 1], vec![0.1, 0.2, 0.1, 0.3, 0.2, 0.1]);
        let n1 = p.add_net(&[2, 2]);
        p.fixed_factor(n1, 0, &[], vec![0.4, 0.6]);
        p.free_factor(n1, 1, &[0]);
        p.entropy(n1, &[0, 1], 0.3);
        p.match_nets((n0, &[2]), (n1, &[1]));
        let theta: Vec<f64> = (0..p.n_params()).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.4).collect();
        let nu: Vec<f64> = (0..p.n_resid).map(|i| 0.1 * i as f64 - 0.3).collect();
        numeric_check(&p, &theta, &nu, 3.0);
    }

    #[test]
    fn solves_small_wyner() {
        // X = Y uniform bit: C = ln 2
        let mut p = Problem::new();
        let n = p.add_net(&[2, 2, 2]);
        p.free_factor(n, 2, &[]);
        p.free_factor(n, 0, &[2]);
        p.free_factor(n, 1, &[2]);
        p.entropy(n, &[2], 1.0);
        p.entropy(n, &[0, 1, 2], -1.0);
        p.constant(2f64.ln());
        p.match_fixed(n, &[0, 1], vec![0.5, 0.0, 0.0, 0.5]);
        let theta: Vec<f64> = (0..p.n_params()).map(|i| (i as f64 * 0.37).sin()).collect();
        let r = solve(
            &p,
            theta,
            Settings {
                mu0: 100.0,
                max_evals: 20000,
                tol: 1e-9,
            },
        );
        assert!(r.infeasibility < 1e-6, "{}", r.infeasibility);
        assert!((r.objective - 2f64.ln()).abs() < 1e-3, "{}", r.objective);
    }
}
