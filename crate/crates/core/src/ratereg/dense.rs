//! Dense tables over flattened variable groups.

use crate::probcore::{make_joint, JointDist};

use super::Result;

/// An observed distribution with each variable group flattened to the list
/// of its support tuples.
#[derive(Debug, Clone)]
pub(crate) struct Flat {
    /// Marginal of the input on the grouped variables, groups concatenated.
    pub base: JointDist,
    pub groups: Vec<Vec<String>>,
    /// Per group, the label-index tuples of its support.
    pub values: Vec<Vec<Vec<usize>>>,
    pub cards: Vec<usize>,
    /// Row-major over `cards`.
    pub q: Vec<f64>,
}

impl Flat {
    pub(crate) fn new(j: &JointDist, groups: &[Vec<String>]) -> Result<Self> {
        let all: Vec<String> = groups.iter().flatten().cloned().collect();
        let base = j.marginal(&all)?;
        let mut values: Vec<Vec<Vec<usize>>> = Vec::with_capacity(groups.len());
        let mut start = 0;
        let mut spans = Vec::new();
        for g in groups {
            let idx: Vec<usize> = (start..start + g.len()).collect();
            let vals: Vec<Vec<usize>> = base.marginal_map(&idx).into_keys().collect();
            values.push(vals);
            spans.push(idx);
            start += g.len();
        }
        let cards: Vec<usize> = values.iter().map(|v| v.len()).collect();
        let mut q = vec![0.0; cards.iter().product()];
        for (pt, p) in base.iter() {
            let mut c = 0;
            for (g, span) in spans.iter().enumerate() {
                let key: Vec<usize> = span.iter().map(|&i| pt[i]).collect();
                let k = values[g].binary_search(&key).expect("value in support");
                c = c * cards[g] + k;
            }
            q[c] += p;
        }
        Ok(Self {
            base,
            groups: groups.to_vec(),
            values,
            cards,
            q,
        })
    }

    pub(crate) fn support_size(&self) -> usize {
        self.q.iter().filter(|p| **p > 0.0).count()
    }

    pub(crate) fn marginal(&self, keep: &[usize]) -> Vec<f64> {
        marginal(&self.cards, &self.q, keep)
    }

    /// Converts a dense table over `[groups…, aux…]` into a distribution over
    /// the observed variables followed by the named auxiliaries.
    pub(crate) fn witness(&self, aux_names: &[String], aux_cards: &[usize], table: &[f64]) -> Result<JointDist> {
        let mut cards = self.cards.clone();
        cards.extend_from_slice(aux_cards);
        let mut variables: Vec<String> = self.base.variables().to_vec();
        variables.extend(aux_names.iter().cloned());
        let mut alphabets: Vec<Vec<String>> = self.base.alphabets().to_vec();
        for &k in aux_cards {
            alphabets.push((0..k).map(|i| i.to_string()).collect());
        }
        let ng = self.cards.len();
        let mut digits = vec![0usize; cards.len()];
        let mut entries = Vec::new();
        for (c, &p) in table.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            decode(c, &cards, &mut digits);
            let mut pt = Vec::with_capacity(variables.len());
            for g in 0..ng {
                pt.extend_from_slice(&self.values[g][digits[g]]);
            }
            pt.extend_from_slice(&digits[ng..]);
            entries.push((pt, p));
        }
        Ok(make_joint(variables, alphabets, entries)?)
    }
}

pub(crate) fn decode(mut c: usize, cards: &[usize], out: &mut [usize]) {
    for k in (0..cards.len()).rev() {
        out[k] = c % cards[k];
        c /= cards[k];
    }
}

/// Marginal of a row-major table onto the listed axes (in that order).
pub(crate) fn marginal(cards: &[usize], table: &[f64], keep: &[usize]) -> Vec<f64> {
    let size: usize = keep.iter().map(|&k| cards[k]).product();
    let mut out = vec![0.0; size];
    let mut digits = vec![0usize; cards.len()];
    for (c, &p) in table.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        decode(c, cards, &mut digits);
        let mut i = 0;
        for &k in keep {
            i = i * cards[k] + digits[k];
        }
        out[i] += p;
    }
    out
}

pub(crate) fn entropy(t: &[f64]) -> f64 {
    t.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum()
}

/// Normalizes a nonnegative vector in place; returns false if it sums to 0.
pub(crate) fn normalize(v: &mut [f64]) -> bool {
    let s: f64 = v.iter().sum();
    if !(s > 0.0) {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= s);
    true
}

/// Rescales a table over `[observed…, aux…]` so that its observed marginal is
/// exactly `q`, after zeroing auxiliary prefixes of negligible mass. Unused
/// auxiliary letters are removed. Returns the new auxiliary cardinalities,
/// or `None` if some positive cell of `q` would receive no mass.
pub(crate) fn project(q: &[f64], aux_cards: &[usize], table: &mut Vec<f64>, drop_below: f64) -> Option<Vec<usize>> {
    let aux: usize = aux_cards.iter().product();
    let obs = q.len();
    let na = aux_cards.len();
    let mut digits = vec![0usize; na];
    let mut trial = table.clone();
    // drop negligible auxiliary prefixes (U, then UV, …)
    for depth in 1..=na {
        let keep: Vec<usize> = (0..depth).collect();
        let size: usize = aux_cards[..depth].iter().product();
        let mut mass = vec![0.0; size];
        for (c, &p) in trial.iter().enumerate() {
            decode(c % aux, aux_cards, &mut digits);
            let i = keep.iter().fold(0, |acc, &k| acc * aux_cards[k] + digits[k]);
            mass[i] += p;
        }
        for (c, p) in trial.iter_mut().enumerate() {
            decode(c % aux, aux_cards, &mut digits);
            let i = keep.iter().fold(0, |acc, &k| acc * aux_cards[k] + digits[k]);
            if mass[i] < drop_below {
                *p = 0.0;
            }
        }
    }
    let rescale = |t: &mut Vec<f64>| -> bool {
        for o in 0..obs {
            let row = &mut t[o * aux..(o + 1) * aux];
            let s: f64 = row.iter().sum();
            if q[o] > 0.0 {
                // a subnormal row sum would scale by an infinite factor
                if !(s >= f64::MIN_POSITIVE) {
                    return false;
                }
                let f = q[o] / s;
                row.iter_mut().for_each(|p| *p *= f);
            } else {
                row.iter_mut().for_each(|p| *p = 0.0);
            }
        }
        true
    };
    if rescale(&mut trial) {
        *table = trial;
    } else if !rescale(table) {
        return None;
    }
    // relabel: keep only auxiliary letters in use, per axis
    let mut used: Vec<Vec<bool>> = aux_cards.iter().map(|&k| vec![false; k]).collect();
    for (c, &p) in table.iter().enumerate() {
        if p > 0.0 {
            decode(c % aux, aux_cards, &mut digits);
            for k in 0..na {
                used[k][digits[k]] = true;
            }
        }
    }
    let remap: Vec<Vec<usize>> = used
        .iter()
        .map(|u| {
            let mut next = 0;
            u.iter()
                .map(|&b| {
                    let r = next;
                    if b {
                        next += 1;
                    }
                    r
                })
                .collect()
        })
        .collect();
    let new_cards: Vec<usize> = used.iter().map(|u| u.iter().filter(|b| **b).count().max(1)).collect();
    let new_aux: usize = new_cards.iter().product();
    let mut out = vec![0.0; obs * new_aux];
    for (c, &p) in table.iter().enumerate() {
        if p > 0.0 {
            decode(c % aux, aux_cards, &mut digits);
            let a = (0..na).fold(0, |acc, k| acc * new_cards[k] + remap[k][digits[k]]);
            out[(c / aux) * new_aux + a] += p;
        }
    }
    *table = out;
    Some(new_cards)
}

/// Auxiliary variable names that do not collide with `existing`.
pub(crate) fn fresh_names(existing: &[String], wanted: &[&str]) -> Vec<String> {
    let mut taken: Vec<String> = existing.to_vec();
    let mut out = Vec::new();
    for w in wanted {
        let mut name = w.to_string();
        while taken.contains(&name) {
            name.push('\'');
        }
        taken.push(name.clone());
        out.push(name);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flattening_groups_uses_support_tuples() {
        let j = JointDist::from_dense(
            &["A", "B", "C"],
            &[2, 2, 2],
            &[0.25, 0.0, 0.0, 0.25, 0.0, 0.25, 0.25, 0.0],
        )
        .unwrap();
        let f = Flat::new(&j, &[vec!["A".into(), "B".into()], vec!["C".into()]]).unwrap();
        assert_eq!(f.cards, vec![4, 2]);
        assert_eq!(f.values[0], vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(f.support_size(), 4);
        let w = f.witness(&[], &[], &f.q).unwrap();
        assert_eq!(w, j);
    }

    #[test]
    fn projection_restores_marginal_and_relabels() {
        let q = vec![0.5, 0.5];
        // aux card 3, letter 1 unused, tiny mass on letter 2
        let mut t = vec![0.4, 0.0, 1e-13, 0.1, 0.0, 0.5];
        let cards = project(&q, &[3], &mut t, 1e-10).unwrap();
        assert_eq!(cards, vec![2]);
        assert!((t[0] + t[1] - 0.5).abs() < 1e-15);
        assert!((t[2] + t[3] - 0.5).abs() < 1e-15);
        assert!((t[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn subnormal_rows_are_rejected() {
        let q = vec![0.5, 0.5];
        let mut t = vec![0.5, 0.0, 1e-310, 0.0];
        assert!(project(&q, &[2], &mut t, 0.0).is_none());
    }

    #[test]
    fn names_avoid_collisions() {
        let n = fresh_names(&["U".to_string(), "X".to_string()], &["U", "V"]);
        assert_eq!(n, vec!["U'".to_string(), "V".to_string()]);
    }
}
