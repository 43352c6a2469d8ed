//! Built-in distributions and reference decompositions.

use rand::Rng;

use super::{BenchError, Result};
use crate::exec::task_rng;
use crate::probcore::{make_joint, JointDist};
use crate::ratereg::{AuxDecomposition, Model};

const NAMES: [&str; 6] = ["X", "Y", "Z", "W", "S", "T"];

fn labels(k: usize) -> Vec<String> {
    (0..k).map(|i| i.to_string()).collect()
}

fn names(k: usize) -> Vec<String> {
    NAMES[..k].iter().map(|s| s.to_string()).collect()
}

/// Splits `name(a, b, ...)` into the name and its arguments.
fn parse(id: &str) -> Result<(String, Vec<u64>)> {
    let id = id.trim();
    let Some(open) = id.find('(') else {
        return Ok((id.to_string(), Vec::new()));
    };
    let inner = id[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| BenchError::BadParams(format!("unbalanced parentheses in `{id}`")))?;
    let args = inner
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<u64>()
                .map_err(|_| BenchError::BadParams(format!("`{s}` is not a nonnegative integer")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((id[..open].trim().to_string(), args))
}

fn sizes(args: &[u64], id: &str) -> Result<Vec<usize>> {
    if !(2..=NAMES.len()).contains(&args.len()) || args.iter().any(|&s| !(1..=16).contains(&s)) {
        return Err(BenchError::BadParams(format!(
            "`{id}` needs 2 to {} alphabet sizes between 1 and 16",
            NAMES.len()
        )));
    }
    Ok(args.iter().map(|&s| s as usize).collect())
}

/// A built-in distribution by id:
///
/// * `example2`: five points of mass 1/5 on `(2,2,0), (2,2,1), (2,2,2),
///   (0,0,2), (1,1,2)`;
/// * `xor3`, `and3`: `X, Y` uniform bits and `Z = X ⊕ Y` or `Z = X ∧ Y`;
/// * `copy3`: `X = Y = Z` a uniform bit;
/// * `lshape(k)`: uniform over `(k,k,z)` for `z ≤ k` and `(i,i,k)` for
///   `i < k`, so `lshape(2)` is `example2`;
/// * `random(seed, a, b, c, ...)`: a full-support table with entries drawn
///   as squared uniforms, normalized;
/// * `random_deterministic_z(seed, a, b, c)`: a random full-support
///   `Q(XY)` with `Z` a seeded random function of `(X, Y)`.
pub fn example_distributions(id: &str) -> Result<JointDist> {
    let (name, args) = parse(id)?;
    let no_args = |j: JointDist| {
        if args.is_empty() {
            Ok(j)
        } else {
            Err(BenchError::BadParams(format!("`{name}` takes no parameters")))
        }
    };
    match name.as_str() {
        "example2" => no_args(lshape(2)?),
        "xor3" => no_args(bits3(|x, y| x ^ y)?),
        "and3" => no_args(bits3(|x, y| x & y)?),
        "copy3" => no_args(make_joint(
            names(3),
            vec![labels(2); 3],
            vec![(vec![0, 0, 0], 0.5), (vec![1, 1, 1], 0.5)],
        )?),
        "lshape" => match args.as_slice() {
            [k] if (1..=8).contains(k) => lshape(*k as usize),
            _ => Err(BenchError::BadParams(
                "`lshape` takes one size k between 1 and 8".into(),
            )),
        },
        "random" => {
            let (seed, rest) = args
                .split_first()
                .ok_or_else(|| BenchError::BadParams("`random` needs a seed and sizes".into()))?;
            random(*seed, &sizes(rest, id)?)
        }
        "random_deterministic_z" => match args.as_slice() {
            [seed, a, b, c] => {
                let s = sizes(&[*a, *b, *c], id)?;
                random_deterministic_z(*seed, s[0], s[1], s[2])
            }
            _ => Err(BenchError::BadParams(
                "`random_deterministic_z` takes a seed and three sizes".into(),
            )),
        },
        _ => Err(BenchError::UnknownId(id.to_string())),
    }
}

fn bits3(f: fn(usize, usize) -> usize) -> Result<JointDist> {
    let pts = (0..4).map(|c| {
        let (x, y) = (c / 2, c % 2);
        (vec![x, y, f(x, y)], 0.25)
    });
    Ok(make_joint(names(3), vec![labels(2); 3], pts)?)
}

fn lshape(k: usize) -> Result<JointDist> {
    let m = 1.0 / (2 * k + 1) as f64;
    let mut pts: Vec<(Vec<usize>, f64)> = (0..=k).map(|z| (vec![k, k, z], m)).collect();
    pts.extend((0..k).map(|i| (vec![i, i, k], m)));
    Ok(make_joint(names(3), vec![labels(k + 1); 3], pts)?)
}

fn random_table(seed: u64, len: usize) -> Vec<f64> {
    let mut rng = task_rng(seed, 99);
    let mut t: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..1.0f64).powi(2)).collect();
    let s: f64 = t.iter().sum();
    t.iter_mut().for_each(|x| *x /= s);
    t
}

fn random(seed: u64, cards: &[usize]) -> Result<JointDist> {
    let t = random_table(seed, cards.iter().product());
    let n: Vec<&str> = NAMES[..cards.len()].to_vec();
    Ok(JointDist::from_dense(&n, cards, &t)?)
}

fn random_deterministic_z(seed: u64, a: usize, b: usize, c: usize) -> Result<JointDist> {
    let t = random_table(seed, a * b);
    let mut rng = task_rng(seed, 100);
    let pts: Vec<(Vec<usize>, f64)> = t
        .iter()
        .enumerate()
        .map(|(i, &p)| (vec![i / b, i % b, rng.gen_range(0..c)], p))
        .collect();
    Ok(make_joint(names(3), vec![labels(a), labels(b), labels(c)], pts)?)
}

fn witness(
    model: Model,
    base: JointDist,
    v_card: usize,
    pts: Vec<(Vec<usize>, f64)>,
    u_card: usize,
) -> Result<AuxDecomposition> {
    let mut alphabets: Vec<Vec<String>> = base.alphabets().to_vec();
    alphabets.push(labels(u_card));
    alphabets.push(labels(v_card));
    let mut vars = base.variables().to_vec();
    vars.push("U".into());
    vars.push("V".into());
    decomposition_from_joint(make_joint(vars, alphabets, pts)?, model)
}

/// Reads a decomposition from a joint whose first three variables are the
/// observed `X, Y, Z`, followed by `U` and optionally `V`.
pub fn decomposition_from_joint(joint: JointDist, model: Model) -> Result<AuxDecomposition> {
    let vars = joint.variables().to_vec();
    if !(4..=5).contains(&vars.len()) {
        return Err(BenchError::BadParams(format!(
            "a decomposition needs variables X, Y, Z, U and optionally V; got {}",
            vars.len()
        )));
    }
    Ok(AuxDecomposition {
        model,
        base: joint.marginal(&vars[..3])?,
        groups: vars[..3].iter().map(|v| vec![v.clone()]).collect(),
        u: vars[3].clone(),
        v: vars.get(4).cloned(),
        joint,
    })
}

/// The collaborative decomposition of `example2` with binary `U`: given
/// `U = 0`, `XY = (2,2)` and `Z` takes 0, 1, 2 with probabilities .4, .4, .2;
/// given `U = 1`, `Z = 2` and `V = X` with `X = Y` taking 2, 0, 1 with
/// probabilities .2, .4, .4. Rates `(4/5) ln 2` and
/// `(1/2) H(.2, .4, .4)`.
pub fn example2_witness() -> Result<AuxDecomposition> {
    let pts = vec![
        (vec![2, 2, 0, 0, 0], 0.2),
        (vec![2, 2, 1, 0, 0], 0.2),
        (vec![2, 2, 2, 0, 0], 0.1),
        (vec![2, 2, 2, 1, 2], 0.1),
        (vec![0, 0, 2, 1, 0], 0.2),
        (vec![1, 1, 2, 1, 1], 0.2),
    ];
    witness(Model::Collaborative, example_distributions("example2")?, 3, pts, 2)
}

/// The adversarial decomposition of `copy3` with `U = Z` and constant `V`.
pub fn copy3_witness() -> Result<AuxDecomposition> {
    let pts = vec![(vec![0, 0, 0, 0, 0], 0.5), (vec![1, 1, 1, 1, 0], 0.5)];
    witness(Model::Adversarial, example_distributions("copy3")?, 1, pts, 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example2_has_five_equal_points() {
        let j = example_distributions("example2").unwrap();
        assert_eq!(j.support_size(), 5);
        assert!(j.iter().all(|(_, p)| (p - 0.2).abs() < 1e-15));
        assert_eq!(j, example_distributions("lshape(2)").unwrap());
    }

    #[test]
    fn xor_and_and_make_z_a_function_of_xy() {
        for id in ["xor3", "and3"] {
            let j = example_distributions(id).unwrap();
            assert!(j.conditional_entropy(&["Z"], &["X", "Y"]).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn random_tables_have_full_support() {
        let j = example_distributions("random(5, 2, 2, 2)").unwrap();
        assert_eq!(j.support_size(), 8);
        assert_eq!(j, example_distributions("random(5,2,2,2)").unwrap());
        let d = example_distributions("random_deterministic_z(3, 2, 2, 2)").unwrap();
        assert!(d.conditional_entropy(&["Z"], &["X", "Y"]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn bad_ids_are_rejected() {
        assert!(matches!(example_distributions("nope"), Err(BenchError::UnknownId(_))));
        assert!(matches!(
            example_distributions("lshape(0)"),
            Err(BenchError::BadParams(_))
        ));
        assert!(matches!(
            example_distributions("random(1, 2)"),
            Err(BenchError::BadParams(_))
        ));
        assert!(matches!(
            example_distributions("xor3(1)"),
            Err(BenchError::BadParams(_))
        ));
        assert!(matches!(
            example_distributions("random(x, 2, 2)"),
            Err(BenchError::BadParams(_))
        ));
    }

    #[test]
    fn witnesses_have_the_stated_rates() {
        let w = example2_witness().unwrap();
        w.validate(1e-12).unwrap();
        let (rp, rk) = w.rates().unwrap();
        assert!((rp - 0.8 * 2f64.ln()).abs() < 1e-12);
        let h = -(0.2f64 * 0.2f64.ln() + 0.8 * 0.4f64.ln());
        assert!((rk - h / 2.0).abs() < 1e-12);
        let c = copy3_witness().unwrap();
        c.validate(1e-12).unwrap();
        let (rp, rk) = c.rates().unwrap();
        assert!((rp - 2f64.ln()).abs() < 1e-12 && rk.abs() < 1e-12);
    }
}
