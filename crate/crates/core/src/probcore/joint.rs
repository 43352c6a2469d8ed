use std::collections::{BTreeMap, HashSet};

use super::{Channel, ProbError, Result, NORM_TOL, PRUNE_BELOW};

/// A finite joint distribution over named variables.
///
/// Points are stored as tuples of label indices, one per variable, in a
/// sparse ordered map. Only strictly positive masses are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDist {
    variables: Vec<String>,
    alphabets: Vec<Vec<String>>,
    mass: BTreeMap<Vec<usize>, f64>,
}

/// Validates and builds a [`JointDist`].
///
/// Duplicate points are summed; entries below `1e-15` are dropped after
/// validation of the total.
pub fn make_joint<I>(variables: Vec<String>, alphabets: Vec<Vec<String>>, entries: I) -> Result<JointDist>
where
    I: IntoIterator<Item = (Vec<usize>, f64)>,
{
    if variables.len() != alphabets.len() {
        return Err(ProbError::ArityMismatch {
            expected: variables.len(),
            got: alphabets.len(),
        });
    }
    let mut seen = HashSet::new();
    for v in &variables {
        if !seen.insert(v.as_str()) {
            return Err(ProbError::DuplicateVariable(v.clone()));
        }
    }
    let mut mass: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let mut total = 0.0;
    for (point, p) in entries {
        if point.len() != variables.len() {
            return Err(ProbError::ArityMismatch {
                expected: variables.len(),
                got: point.len(),
            });
        }
        if p < 0.0 || p.is_nan() {
            return Err(ProbError::NegativeMass { p });
        }
        for (k, &i) in point.iter().enumerate() {
            if i >= alphabets[k].len() {
                return Err(ProbError::LabelOutOfRange {
                    var: variables[k].clone(),
                    index: i,
                });
            }
        }
        total += p;
        *mass.entry(point).or_insert(0.0) += p;
    }
    if (total - 1.0).abs() > NORM_TOL {
        return Err(ProbError::NotNormalized { sum: total });
    }
    mass.retain(|_, p| *p >= PRUNE_BELOW);
    Ok(JointDist {
        variables,
        alphabets,
        mass,
    })
}

impl JointDist {
    /// Builds from label strings rather than indices.
    pub fn from_labeled<S: AsRef<str>>(
        variables: &[&str],
        alphabets: &[Vec<S>],
        entries: &[(Vec<&str>, f64)],
    ) -> Result<Self> {
        let alphabets: Vec<Vec<String>> = alphabets
            .iter()
            .map(|a| a.iter().map(|s| s.as_ref().to_string()).collect())
            .collect();
        let variables: Vec<String> = variables.iter().map(|s| s.to_string()).collect();
        let mut pts = Vec::with_capacity(entries.len());
        for (labels, p) in entries {
            if labels.len() != variables.len() {
                return Err(ProbError::ArityMismatch {
                    expected: variables.len(),
                    got: labels.len(),
                });
            }
            let mut idx = Vec::with_capacity(labels.len());
            for (k, l) in labels.iter().enumerate() {
                let i = alphabets
                    .get(k)
                    .and_then(|a| a.iter().position(|x| x == l))
                    .ok_or_else(|| ProbError::UnknownLabel {
                        var: variables[k].clone(),
                        label: l.to_string(),
                    })?;
                idx.push(i);
            }
            pts.push((idx, *p));
        }
        make_joint(variables, alphabets, pts)
    }

    /// Builds a distribution from a dense table in row-major order over the
    /// given alphabet sizes; labels are `"0".."k-1"`.
    pub fn from_dense(variables: &[&str], cards: &[usize], table: &[f64]) -> Result<Self> {
        let total: usize = cards.iter().product();
        if table.len() != total {
            return Err(ProbError::ArityMismatch {
                expected: total,
                got: table.len(),
            });
        }
        let alphabets = cards.iter().map(|&k| (0..k).map(|i| i.to_string()).collect()).collect();
        let entries = table.iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(c, &p)| {
            let mut rem = c;
            let mut point = vec![0; cards.len()];
            for k in (0..cards.len()).rev() {
                point[k] = rem % cards[k];
                rem /= cards[k];
            }
            (point, p)
        });
        make_joint(variables.iter().map(|s| s.to_string()).collect(), alphabets, entries)
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn alphabets(&self) -> &[Vec<String>] {
        &self.alphabets
    }

    pub fn alphabet(&self, var: &str) -> Result<&[String]> {
        Ok(&self.alphabets[self.var_index(var)?])
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| ProbError::UnknownVariable(name.to_string()))
    }

    pub fn var_indices<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.var_index(n.as_ref())).collect()
    }

    /// Iterates over the support in lexicographic order of label indices.
    pub fn iter(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.mass.iter().map(|(k, &p)| (k.as_slice(), p))
    }

    pub fn support_size(&self) -> usize {
        self.mass.len()
    }

    pub fn prob(&self, point: &[usize]) -> f64 {
        self.mass.get(point).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.values().sum()
    }

    pub fn labels_of(&self, point: &[usize]) -> Vec<&str> {
        point
            .iter()
            .enumerate()
            .map(|(k, &i)| self.alphabets[k][i].as_str())
            .collect()
    }

    /// Marginal over variable positions, keyed by the projected tuple.
    pub fn marginal_map(&self, idx: &[usize]) -> BTreeMap<Vec<usize>, f64> {
        let mut out = BTreeMap::new();
        for (pt, p) in self.iter() {
            let key: Vec<usize> = idx.iter().map(|&i| pt[i]).collect();
            *out.entry(key).or_insert(0.0) += p;
        }
        out
    }

    /// Marginal distribution over the named variables, in the given order.
    pub fn marginal<S: AsRef<str>>(&self, names: &[S]) -> Result<JointDist> {
        let idx = self.var_indices(names)?;
        check_distinct(&self.variables, &idx)?;
        let map = self.marginal_map(&idx);
        Ok(JointDist {
            variables: idx.iter().map(|&i| self.variables[i].clone()).collect(),
            alphabets: idx.iter().map(|&i| self.alphabets[i].clone()).collect(),
            mass: map.into_iter().filter(|(_, p)| *p >= super::PRUNE_BELOW).collect(),
        })
    }

    /// Conditional distribution of `outputs` given `inputs`, defined on
    /// input tuples of positive probability.
    pub fn conditional<S: AsRef<str>>(&self, outputs: &[S], inputs: &[S]) -> Result<Channel> {
        let out_idx = self.var_indices(outputs)?;
        let in_idx = self.var_indices(inputs)?;
        let mut all = in_idx.clone();
        all.extend_from_slice(&out_idx);
        check_distinct(&self.variables, &all)?;
        let mut joint: BTreeMap<Vec<usize>, BTreeMap<Vec<usize>, f64>> = BTreeMap::new();
        for (pt, p) in self.iter() {
            let i: Vec<usize> = in_idx.iter().map(|&k| pt[k]).collect();
            let o: Vec<usize> = out_idx.iter().map(|&k| pt[k]).collect();
            *joint.entry(i).or_default().entry(o).or_insert(0.0) += p;
        }
        let rows = joint
            .into_iter()
            .map(|(i, row)| {
                let s: f64 = row.values().sum();
                (i, row.into_iter().map(|(o, p)| (o, p / s)).collect())
            })
            .collect();
        Channel::new(
            in_idx.iter().map(|&i| self.variables[i].clone()).collect(),
            in_idx.iter().map(|&i| self.alphabets[i].clone()).collect(),
            out_idx.iter().map(|&i| self.variables[i].clone()).collect(),
            out_idx.iter().map(|&i| self.alphabets[i].clone()).collect(),
            rows,
        )
    }

    /// Drops alphabet letters that never occur and reindexes.
    pub fn pruned(&self) -> JointDist {
        let k = self.variables.len();
        let mut used: Vec<Vec<bool>> = self.alphabets.iter().map(|a| vec![false; a.len()]).collect();
        for (pt, _) in self.iter() {
            for j in 0..k {
                used[j][pt[j]] = true;
            }
        }
        let remap: Vec<Vec<Option<usize>>> = used
            .iter()
            .map(|u| {
                let mut next = 0;
                u.iter()
                    .map(|&b| {
                        if b {
                            next += 1;
                            Some(next - 1)
                        } else {
                            None
                        }
                    })
                    .collect()
            })
            .collect();
        let alphabets = self
            .alphabets
            .iter()
            .zip(&used)
            .map(|(a, u)| a.iter().zip(u).filter(|(_, b)| **b).map(|(l, _)| l.clone()).collect())
            .collect();
        let mass = self
            .mass
            .iter()
            .map(|(pt, &p)| {
                let q: Vec<usize> = pt.iter().enumerate().map(|(j, &i)| remap[j][i].unwrap()).collect();
                (q, p)
            })
            .collect();
        JointDist {
            variables: self.variables.clone(),
            alphabets,
            mass,
        }
    }

    /// Same distribution with renamed variables.
    pub fn renamed(&self, names: &[&str]) -> Result<JointDist> {
        if names.len() != self.variables.len() {
            return Err(ProbError::ArityMismatch {
                expected: self.variables.len(),
                got: names.len(),
            });
        }
        let mut out = self.clone();
        out.variables = names.iter().map(|s| s.to_string()).collect();
        let mut seen = HashSet::new();
        for v in &out.variables {
            if !seen.insert(v.as_str()) {
                return Err(ProbError::DuplicateVariable(v.clone()));
            }
        }
        Ok(out)
    }

    /// Independent product `self ⊗ other`.
    pub fn product(&self, other: &JointDist) -> Result<JointDist> {
        let mut variables = self.variables.clone();
        variables.extend(other.variables.iter().cloned());
        let mut alphabets = self.alphabets.clone();
        alphabets.extend(other.alphabets.iter().cloned());
        let mut entries = Vec::with_capacity(self.mass.len() * other.mass.len());
        for (a, p) in self.iter() {
            for (b, q) in other.iter() {
                let mut pt = a.to_vec();
                pt.extend_from_slice(b);
                entries.push((pt, p * q));
            }
        }
        let total: f64 = entries.iter().map(|e| e.1).sum();
        for e in &mut entries {
            e.1 /= total;
        }
        make_joint(variables, alphabets, entries)
    }

    /// Dense table over the named variables (row-major, full alphabets).
    pub fn dense<S: AsRef<str>>(&self, names: &[S]) -> Result<(Vec<usize>, Vec<f64>)> {
        let idx = self.var_indices(names)?;
        check_distinct(&self.variables, &idx)?;
        let cards: Vec<usize> = idx.iter().map(|&i| self.alphabets[i].len()).collect();
        let mut table = vec![0.0; cards.iter().product()];
        for (pt, p) in self.iter() {
            let mut c = 0;
            for (j, &i) in idx.iter().enumerate() {
                c = c * cards[j] + pt[i];
            }
            table[c] += p;
        }
        Ok((cards, table))
    }
}

pub(super) fn check_distinct(vars: &[String], idx: &[usize]) -> Result<()> {
    let mut seen = HashSet::new();
    for &i in idx {
        if !seen.insert(i) {
            return Err(ProbError::OverlappingGroups(vars[i].clone()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    #[test]
    fn uniform_bit_pair() {
        let j = make_joint(
            vec!["X".into(), "Y".into()],
            vec![labels(2), labels(2)],
            vec![(vec![0, 0], 0.5), (vec![1, 1], 0.5)],
        )
        .unwrap();
        assert_eq!(j.support_size(), 2);
    }

    #[test]
    fn five_point_l_shape() {
        let pts = [[2, 2, 0], [2, 2, 1], [2, 2, 2], [0, 0, 2], [1, 1, 2]];
        let j = make_joint(
            vec!["X".into(), "Y".into(), "Z".into()],
            vec![labels(3), labels(3), labels(3)],
            pts.iter().map(|p| (p.to_vec(), 0.2)),
        )
        .unwrap();
        assert_eq!(j.support_size(), 5);
        assert!(j.iter().all(|(_, p)| (p - 0.2).abs() < 1e-15));
    }

    #[test]
    fn rejects_bad_input() {
        let e = make_joint(vec!["X".into()], vec![labels(2)], vec![(vec![0], 0.4), (vec![1], 0.5)]);
        assert!(matches!(e, Err(ProbError::NotNormalized { .. })));
        let e = make_joint(vec!["X".into()], vec![labels(2)], vec![(vec![0], -0.1), (vec![1], 1.1)]);
        assert!(matches!(e, Err(ProbError::NegativeMass { .. })));
        let e = make_joint(vec!["X".into()], vec![labels(2)], vec![(vec![0, 1], 1.0)]);
        assert!(matches!(e, Err(ProbError::ArityMismatch { .. })));
    }

    #[test]
    fn tiny_entries_are_dropped() {
        let j = make_joint(
            vec!["X".into()],
            vec![labels(2)],
            vec![(vec![0], 1.0 - 1e-16), (vec![1], 1e-16)],
        )
        .unwrap();
        assert_eq!(j.support_size(), 1);
    }

    #[test]
    fn conditional_rows_normalize() {
        let j = JointDist::from_dense(&["A", "B"], &[2, 2], &[0.1, 0.3, 0.2, 0.4]).unwrap();
        let c = j.conditional(&["B"], &["A"]).unwrap();
        assert!((c.prob(&[0], &[1]) - 0.75).abs() < 1e-12);
        assert!((c.prob(&[1], &[0]) - 1.0 / 3.0).abs() < 1e-12);
    }
}
