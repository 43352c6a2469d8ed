//! Multi-start search for each model and the public entry points.

use crate::exec::task_rng;
use crate::probcore::JointDist;

use super::assemble::{adv_seed, attach_v, collab_comps, merge_uv, with_channel, wyner3_as_collab};
use super::dense::{fresh_names, Flat};
use super::engine::{self, Settings};
use super::frontier::Frontier;
use super::models::{self, Built, Comp};
use super::{AuxDecomposition, Corner, Model, OptimizerConfig, RateError, RatePoint, Result, Roles, FINAL_TOL};

/// Factor probabilities below this are pinned to zero before polishing.
const SNAP: f64 = 1e-5;

fn settings(cfg: &OptimizerConfig) -> Settings {
    Settings {
        mu0: cfg.penalty_weight,
        max_evals: cfg.max_iters,
        tol: 1e-10,
    }
}

/// Runs every start (structured first, random after) and returns the exact
/// witness tables in start order, each followed by its polished variant.
fn run_starts(
    built: &Built,
    flat: &Flat,
    structured: &[Vec<f64>],
    cfg: &OptimizerConfig,
) -> Vec<Option<(Vec<f64>, Vec<usize>)>> {
    let n = built.problem.n_params();
    let total = cfg.restarts.max(structured.len());
    let runs = cfg.exec.map(total, |i| {
        let theta = match structured.get(i) {
            Some(t) => t.clone(),
            None => models::random_theta(n, &mut task_rng(cfg.seed, i as u64)),
        };
        let mut s = engine::solve(&built.problem, theta, settings(cfg));
        let mut out = vec![models::exact_table(
            flat,
            &built.aux_cards,
            models::raw_table(built, &s.theta),
        )];
        // optima sit on faces of the simplices; pin near-zero entries and
        // re-solve on the smaller support
        if built.problem.snap(&mut s.theta, SNAP) {
            let s = engine::solve(&built.problem, s.theta, settings(cfg));
            out.push(models::exact_table(
                flat,
                &built.aux_cards,
                models::raw_table(built, &s.theta),
            ));
        }
        out
    });
    runs.into_iter().flatten().collect()
}

/// Keeps witnesses meeting the constraint tolerance.
fn admit(cands: Vec<AuxDecomposition>, tol: f64, label: Option<Corner>) -> Result<Vec<RatePoint>> {
    let mut out = Vec::new();
    let mut worst = f64::INFINITY;
    for c in cands {
        let v = c.violation()?;
        if v <= tol {
            out.push(RatePoint::from_witness(c, label)?);
        } else {
            worst = worst.min(v);
        }
    }
    if out.is_empty() {
        return Err(RateError::OptimizerDiverged { best_violation: worst });
    }
    Ok(out)
}

fn owned_groups<G: AsRef<[S]>, S: AsRef<str>>(groups: &[G]) -> Vec<Vec<String>> {
    groups
        .iter()
        .map(|g| g.as_ref().iter().map(|s| s.as_ref().to_string()).collect())
        .collect()
}

/// All admissible Wyner witnesses for `groups`, sorted by rate.
pub(crate) fn wyner_search(
    j: &JointDist,
    groups: &[Vec<String>],
    cfg: &OptimizerConfig,
    extra: &[Vec<Comp>],
) -> Result<Vec<RatePoint>> {
    let flat = Flat::new(j, groups)?;
    let model = if groups.len() == 2 {
        Model::Wyner2
    } else {
        Model::Wyner3
    };
    let w = fresh_names(flat.base.variables(), &["W"]).remove(0);
    let m = flat.support_size().max(1);
    let built = models::wyner(&flat, m);
    let structured: Vec<Vec<f64>> = models::wyner_seeds(&flat, m)
        .iter()
        .chain(extra)
        .filter_map(|s| models::wyner_theta(&built, s))
        .collect();
    let mut cands = Vec::new();
    for (t, cards) in run_starts(&built, &flat, &structured, cfg).into_iter().flatten() {
        cands.push(AuxDecomposition {
            model,
            base: flat.base.clone(),
            joint: flat.witness(&[w.clone()], &cards, &t)?,
            groups: groups.to_vec(),
            u: w.clone(),
            v: None,
        });
    }
    let mut pts = admit(cands, cfg.tol_constraint, None)?;
    pts.sort_by(|a, b| a.rp.total_cmp(&b.rp));
    Ok(pts)
}

/// Wyner common information of two (or three) variable groups: the least
/// `I(groups; W)` over `W` making the groups conditionally independent.
pub fn wyner_ci<G: AsRef<[S]>, S: AsRef<str>>(
    j: &JointDist,
    groups: &[G],
    cfg: &OptimizerConfig,
) -> Result<(f64, AuxDecomposition)> {
    cfg.validate()?;
    let groups = owned_groups(groups);
    if !(2..=3).contains(&groups.len()) || groups.iter().any(|g| g.is_empty()) {
        return Err(RateError::InvalidInput("expected two or three nonempty groups".into()));
    }
    let all: Vec<String> = groups.iter().flatten().cloned().collect();
    j.var_indices(&all)?;
    let mut seen = std::collections::HashSet::new();
    for v in &all {
        if !seen.insert(v) {
            return Err(crate::probcore::ProbError::OverlappingGroups(v.clone()).into());
        }
    }
    let best = wyner_search(j, &groups, cfg, &[])?.swap_remove(0);
    best.witness.validate(FINAL_TOL)?;
    Ok((best.rp, best.witness))
}

fn collab_aux(flat: &Flat, joint: JointDist, u: &str, v: Option<String>) -> AuxDecomposition {
    AuxDecomposition {
        model: Model::Collaborative,
        base: flat.base.clone(),
        joint,
        groups: flat.groups.clone(),
        u: u.to_string(),
        v,
    }
}

/// Lexicographic choice: least `R_P`, then least `R_K` among points within
/// `tol` of it.
fn lexicographic(points: &[RatePoint], tol: f64) -> usize {
    let best_rp = points.iter().map(|p| p.rp).fold(f64::INFINITY, f64::min);
    let mut pick = None::<usize>;
    for (i, p) in points.iter().enumerate() {
        if p.rp <= best_rp + tol {
            pick = match pick {
                Some(k) if points[k].rk < p.rk || (points[k].rk == p.rk && points[k].rp <= p.rp) => Some(k),
                _ => Some(i),
            };
        }
    }
    pick.unwrap()
}

fn argmin_scalarized(points: &[RatePoint], lambda: f64) -> usize {
    let mut k = 0;
    for (i, p) in points.iter().enumerate() {
        if p.scalarized(lambda) < points[k].scalarized(lambda) {
            k = i;
        }
    }
    k
}

fn check_input(j: &JointDist, roles: &Roles, cfg: &OptimizerConfig) -> Result<Flat> {
    cfg.validate()?;
    roles.check(j)?;
    Flat::new(j, &[roles.x.clone(), roles.y.clone(), roles.z.clone()])
}

/// The corner points of the collaborative region: `α` of least public rate
/// `C(XY:Z)` (ties broken by least private rate) and `β = (C(X:Y:Z), 0)`.
pub fn collab_corner_points(j: &JointDist, roles: &Roles, cfg: &OptimizerConfig) -> Result<(RatePoint, RatePoint)> {
    let flat = check_input(j, roles, cfg)?;
    let names = fresh_names(flat.base.variables(), &["U"]);
    let u = &names[0];
    // stage one: U with least I(XYZ;U) under XY − U − Z
    let stage1 = wyner_search(j, &[roles.xy(), roles.z.clone()], cfg, &[])?;
    let floor = stage1[0].rp;
    let mut chosen: Vec<&RatePoint> = Vec::new();
    for p in &stage1 {
        if p.rp > floor + cfg.tol_objective || chosen.len() >= 6 {
            break;
        }
        let (rp, h) = (p.rp, p.witness.joint.entropy(&[&p.witness.u]).unwrap_or(0.0));
        let dup = chosen.iter().any(|c| {
            (c.rp - rp).abs() < 1e-7 && (c.witness.joint.entropy(&[&c.witness.u]).unwrap_or(0.0) - h).abs() < 1e-6
        });
        if !dup {
            chosen.push(p);
        }
    }
    let beta0 = wyner_search(j, &[roles.x.clone(), roles.y.clone(), roles.z.clone()], cfg, &[])?.swap_remove(0);
    // stage two: per-letter private parts
    let mut alphas = Vec::new();
    for p in chosen {
        let w = &p.witness;
        let mut vars: Vec<&str> = w.joint.variables().iter().map(|s| s.as_str()).collect();
        let wi = w.joint.var_index(&w.u)?;
        vars[wi] = u;
        let obs_u = w.joint.renamed(&vars)?;
        let (joint, v) = attach_v(&obs_u, roles, u, cfg)?;
        alphas.push(collab_aux(&flat, joint, u, Some(v)));
    }
    alphas.push(wyner3_as_collab(&beta0.witness)?);
    let alphas = admit(alphas, cfg.tol_constraint, Some(Corner::Alpha))?;
    let alpha = alphas[lexicographic(&alphas, cfg.tol_objective)].clone();
    // β: C(X:Y:Z); W = (U, V) of α is always admissible
    let mut betas = vec![beta0];
    if let Ok(mut p) = admit(vec![merge_uv(&alpha.witness)?], cfg.tol_constraint, None) {
        betas.append(&mut p);
    }
    let k = argmin_scalarized(&betas, 0.0);
    let beta = RatePoint::from_witness(wyner3_as_collab(&betas[k].witness)?, Some(Corner::Beta))?;
    alpha.witness.validate(FINAL_TOL)?;
    beta.witness.validate(FINAL_TOL)?;
    Ok((alpha, beta))
}

/// Replaces `V` by per-letter Wyner solutions when that lowers `R_K`.
fn polish(p: RatePoint, roles: &Roles, cfg: &OptimizerConfig) -> Result<RatePoint> {
    let w = &p.witness;
    let Some(v) = &w.v else { return Ok(p) };
    if p.rk <= 0.0 {
        return Ok(p);
    }
    let keep: Vec<String> = w.joint.variables().iter().filter(|s| *s != v).cloned().collect();
    let obs_u = w.joint.marginal(&keep)?;
    let (joint, v2) = attach_v(&obs_u, roles, &w.u, cfg)?;
    let cand = AuxDecomposition {
        joint,
        v: Some(v2),
        ..w.clone()
    };
    match admit(vec![cand], cfg.tol_constraint, p.label) {
        Ok(mut c) if c[0].rk < p.rk => Ok(c.swap_remove(0)),
        _ => Ok(p),
    }
}

fn check_lambdas(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() || lambdas.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return Err(RateError::InvalidInput("need a nonempty list of finite λ ≥ 0".into()));
    }
    Ok(())
}

/// Cardinalities used for the auxiliaries of the three-party models.
fn collab_cards(flat: &Flat) -> (usize, usize) {
    let xy = flat.marginal(&[0, 1]).iter().filter(|p| **p > 0.0).count();
    (flat.support_size() + 1, xy.max(1))
}

fn adversarial_cards(flat: &Flat) -> (usize, usize) {
    let xy = flat.marginal(&[0, 1]).iter().filter(|p| **p > 0.0).count();
    (flat.cards[2] + 1, xy.max(1))
}

/// Points minimizing `I(XYZ;U) + λ I(XY;V|U)` for each λ, and their lower
/// convex envelope.
pub fn collab_frontier(j: &JointDist, roles: &Roles, lambdas: &[f64], cfg: &OptimizerConfig) -> Result<Frontier> {
    check_lambdas(lambdas)?;
    let flat = check_input(j, roles, cfg)?;
    let (alpha, beta) = collab_corner_points(j, roles, cfg)?;
    let (ku, kv) = collab_cards(&flat);
    let names = fresh_names(flat.base.variables(), &["U", "V"]);
    let mut seeds = vec![
        collab_comps(&flat, &alpha.witness)?,
        collab_comps(&flat, &beta.witness)?,
    ];
    seeds.extend(models::collab_seeds(&flat, ku, kv));
    let mut by_lambda = Vec::new();
    for &lambda in lambdas {
        let built = models::collab(&flat, ku, kv, 1.0, lambda);
        let structured: Vec<Vec<f64>> = seeds.iter().filter_map(|s| models::collab_theta(&built, s)).collect();
        let mut cands = Vec::new();
        for (t, cards) in run_starts(&built, &flat, &structured, cfg).into_iter().flatten() {
            let joint = flat.witness(&names, &cards, &t)?;
            cands.push(collab_aux(&flat, joint, &names[0], Some(names[1].clone())));
        }
        let mut pts = vec![alpha.clone(), beta.clone()];
        pts.extend(admit(cands, cfg.tol_constraint, Some(Corner::Interior)).unwrap_or_default());
        let k = argmin_scalarized(&pts, lambda);
        let best = polish(pts.swap_remove(k), roles, cfg)?;
        best.witness.validate(FINAL_TOL)?;
        by_lambda.push((lambda, best));
    }
    Ok(Frontier::new(by_lambda, vec![alpha, beta]))
}

fn adv_aux(flat: &Flat, joint: JointDist, u: &str, v: String) -> AuxDecomposition {
    AuxDecomposition {
        model: Model::Adversarial,
        base: flat.base.clone(),
        joint,
        groups: flat.groups.clone(),
        u: u.to_string(),
        v: Some(v),
    }
}

/// Closed-form adversarial candidates: constant `U` (so `R_P = 0`) and
/// `U = Z`, each with per-letter Wyner private parts.
fn adversarial_direct(flat: &Flat, roles: &Roles, cfg: &OptimizerConfig, u: &str) -> Result<Vec<RatePoint>> {
    let cz = flat.cards[2];
    let mut out = Vec::new();
    let constant = vec![vec![1.0]; cz];
    let identity: Vec<Vec<f64>> = (0..cz)
        .map(|z| (0..cz).map(|k| if k == z { 1.0 } else { 0.0 }).collect())
        .collect();
    for c in [constant, identity] {
        let obs_u = with_channel(flat, &c, u)?;
        let (joint, v) = attach_v(&obs_u, roles, u, cfg)?;
        out.extend(admit(vec![adv_aux(flat, joint, u, v)], cfg.tol_constraint, None).unwrap_or_default());
    }
    Ok(out)
}

fn adversarial_runs(
    flat: &Flat,
    wp: f64,
    wk: f64,
    seeds: &[RatePoint],
    cfg: &OptimizerConfig,
    names: &[String],
) -> Result<Vec<RatePoint>> {
    let (ku, kv) = adversarial_cards(flat);
    let built = models::adversarial(flat, ku, kv, wp, wk);
    let mut structured: Vec<Vec<f64>> = Vec::new();
    for s in seeds {
        if let Ok(seed) = adv_seed(flat, &s.witness, ku) {
            structured.extend(models::adversarial_theta(&built, flat, &seed));
        }
    }
    for seed in models::adversarial_seeds(flat, ku) {
        structured.extend(models::adversarial_theta(&built, flat, &seed));
    }
    let mut cands = Vec::new();
    for (t, cards) in run_starts(&built, flat, &structured, cfg).into_iter().flatten() {
        let joint = flat.witness(names, &cards, &t)?;
        cands.push(adv_aux(flat, joint, &names[0], names[1].clone()));
    }
    Ok(admit(cands, cfg.tol_constraint, Some(Corner::Interior)).unwrap_or_default())
}

/// Least private rate of the adversarial region with the public rate
/// unconstrained (the secret key cost with free public communication).
pub fn key_cost(j: &JointDist, roles: &Roles, cfg: &OptimizerConfig) -> Result<RatePoint> {
    let flat = check_input(j, roles, cfg)?;
    key_cost_flat(&flat, roles, cfg)
}

fn key_cost_flat(flat: &Flat, roles: &Roles, cfg: &OptimizerConfig) -> Result<RatePoint> {
    let names = fresh_names(flat.base.variables(), &["U", "V"]);
    let mut pts = adversarial_direct(flat, roles, cfg, &names[0])?;
    let runs = adversarial_runs(flat, 1e-3, 1.0, &pts, cfg, &names)?;
    pts.extend(runs);
    if pts.is_empty() {
        return Err(RateError::OptimizerDiverged {
            best_violation: f64::INFINITY,
        });
    }
    // least R_K, ties to the least R_P
    let best_rk = pts.iter().map(|p| p.rk).fold(f64::INFINITY, f64::min);
    let mut k = None::<usize>;
    for (i, p) in pts.iter().enumerate() {
        if p.rk <= best_rk + cfg.tol_objective && k.map_or(true, |k| p.rp < pts[k].rp) {
            k = Some(i);
        }
    }
    let best = polish(pts.swap_remove(k.unwrap()), roles, cfg)?;
    best.witness.validate(FINAL_TOL)?;
    Ok(best)
}

/// Points minimizing `I(Z;U) + λ I(XY;V|U)` under `XY − Z − U` and
/// `X − UV − Y`, and their lower convex envelope.
pub fn adversarial_frontier(j: &JointDist, roles: &Roles, lambdas: &[f64], cfg: &OptimizerConfig) -> Result<Frontier> {
    check_lambdas(lambdas)?;
    let flat = check_input(j, roles, cfg)?;
    let names = fresh_names(flat.base.variables(), &["U", "V"]);
    let mut base = adversarial_direct(&flat, roles, cfg, &names[0])?;
    base.push(key_cost_flat(&flat, roles, cfg)?);
    let mut by_lambda = Vec::new();
    for &lambda in lambdas {
        let mut pts = base.clone();
        pts.extend(adversarial_runs(&flat, 1.0, lambda, &base, cfg, &names)?);
        let k = argmin_scalarized(&pts, lambda);
        let mut best = polish(pts.swap_remove(k), roles, cfg)?;
        best.label = Some(Corner::Interior);
        best.witness.validate(FINAL_TOL)?;
        by_lambda.push((lambda, best));
    }
    Ok(Frontier::new(by_lambda, base))
}
