//! Seeded constructions shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use tricorr::exec::task_rng;
use tricorr::probcore::{make_joint, JointDist};
use tricorr::ratereg::{AuxDecomposition, Model};

fn labels(k: usize) -> Vec<String> {
    (0..k).map(|i| i.to_string()).collect()
}

/// A random point of the simplex with `k` entries, all positive.
pub fn simplex<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let mut p: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0f64)).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}

/// `P(u) P(z|u) P(v|u) P(x|uv) P(y|uv)` over binary `X, Y`, `|Z| = 2`,
/// `|U| = 2` and the given `|V|`; satisfies `X − UV − Y`, `XY − U − Z`
/// and `Z − U − V`.
pub fn collab_decomposition(seed: u64, v_card: usize) -> AuxDecomposition {
    let mut rng = task_rng(seed, 7);
    let (ku, kz) = (2, 2);
    let pu = simplex(&mut rng, ku);
    let pz: Vec<Vec<f64>> = (0..ku).map(|_| simplex(&mut rng, kz)).collect();
    let pv: Vec<Vec<f64>> = (0..ku).map(|_| simplex(&mut rng, v_card)).collect();
    let px: Vec<Vec<Vec<f64>>> = (0..ku)
        .map(|_| (0..v_card).map(|_| simplex(&mut rng, 2)).collect())
        .collect();
    let py: Vec<Vec<Vec<f64>>> = (0..ku)
        .map(|_| (0..v_card).map(|_| simplex(&mut rng, 2)).collect())
        .collect();
    let mut pts = Vec::new();
    for u in 0..ku {
        for v in 0..v_card {
            for z in 0..kz {
                for x in 0..2 {
                    for y in 0..2 {
                        let p = pu[u] * pz[u][z] * pv[u][v] * px[u][v][x] * py[u][v][y];
                        pts.push((vec![x, y, z, u, v], p));
                    }
                }
            }
        }
    }
    let names: Vec<String> = ["X", "Y", "Z", "U", "V"].iter().map(|s| s.to_string()).collect();
    let joint = make_joint(
        names,
        vec![labels(2), labels(2), labels(kz), labels(ku), labels(v_card)],
        pts,
    )
    .unwrap();
    tricorr::bench::decomposition_from_joint(joint, Model::Collaborative).unwrap()
}

/// Random `C` with `|C| ∈ {2, 3}` and binary `A^n`, `B^n` drawn from
/// arbitrary (non-product) channels, independent given `C`. Variables are
/// `C, A1..An, B1..Bn`.
pub fn conditionally_independent(seed: u64, n: usize) -> JointDist {
    let mut rng = task_rng(seed, 11);
    let kc = rng.gen_range(2..=3);
    let pc = simplex(&mut rng, kc);
    let size = 1usize << n;
    let pa: Vec<Vec<f64>> = (0..kc).map(|_| simplex(&mut rng, size)).collect();
    let pb: Vec<Vec<f64>> = (0..kc).map(|_| simplex(&mut rng, size)).collect();
    let bits = |w: usize| (0..n).map(move |i| (w >> (n - 1 - i)) & 1);
    let mut pts = Vec::new();
    for c in 0..kc {
        for a in 0..size {
            for b in 0..size {
                let mut pt = vec![c];
                pt.extend(bits(a));
                pt.extend(bits(b));
                pts.push((pt, pc[c] * pa[c][a] * pb[c][b]));
            }
        }
    }
    let mut names = vec!["C".to_string()];
    names.extend((1..=n).map(|i| format!("A{i}")));
    names.extend((1..=n).map(|i| format!("B{i}")));
    let mut alphabets = vec![labels(kc)];
    alphabets.extend(std::iter::repeat(labels(2)).take(2 * n));
    make_joint(names, alphabets, pts).unwrap()
}

/// Largest `I(A_j; B_k | C, A_<j, B_<k)` over all `j, k ≤ n`.
pub fn worst_reduced_cmi(j: &JointDist, n: usize) -> f64 {
    let mut worst = 0.0f64;
    for a in 1..=n {
        for b in 1..=n {
            let mut cond = vec!["C".to_string()];
            cond.extend((1..a).map(|i| format!("A{i}")));
            cond.extend((1..b).map(|i| format!("B{i}")));
            let v = j
                .conditional_mutual_information(&[format!("A{a}")], &[format!("B{b}")], &cond)
                .unwrap();
            worst = worst.max(v.abs());
        }
    }
    worst
}
