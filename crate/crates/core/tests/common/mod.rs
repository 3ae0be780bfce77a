#![allow(dead_code)]

use jumpcompare_core::model::{AffineCoefficients, ComparisonProblem, MarkMeasure, SampleDomain, SdeModel};
use jumpcompare_core::rng::{stream, StreamRng};
use rand::Rng;

/// What was done to an ordered affine pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    None,
    /// Raises a compensated drift constant: the pair stays ordered.
    Benign,
    SigmaGap,
    SigmaCoupling,
    JumpSlope,
    JumpOvershoot,
    JumpOffset,
    DriftOffDiagonal,
    DriftOffset,
}

pub const BREAKING: [Mutation; 7] = [
    Mutation::SigmaGap,
    Mutation::SigmaCoupling,
    Mutation::JumpSlope,
    Mutation::JumpOvershoot,
    Mutation::JumpOffset,
    Mutation::DriftOffDiagonal,
    Mutation::DriftOffset,
];

fn pick(rng: &mut StreamRng, grid: &[f64]) -> f64 {
    grid[rng.random_range(0..grid.len())]
}

/// Random affine pair on small coefficient grids. It is built ordered
/// (diagonal diffusion, equal jump slopes with `1 + G_kk >= 0` and
/// nonnegative off-diagonals, a quasimonotone compensated drift and ordered
/// constants), then `mutation` is applied.
pub fn random_pair(rng: &mut StreamRng, m: usize, atoms: usize, mutation: Mutation) -> (AffineCoefficients, AffineCoefficients, MarkMeasure) {
    let d = rng.random_range(1..=2);
    let marks = MarkMeasure::from_pairs(1, (0..atoms).map(|j| (vec![j as f64 + 1.0], pick(rng, &[0.5, 1.0, 2.0]))));
    let w: Vec<f64> = marks.atoms.iter().map(|a| a.weight).collect();

    let mut a2 = AffineCoefficients::zeros(m, d, atoms);
    for k in 0..m {
        for alpha in 0..d {
            a2.set_diffusion_linear(k, alpha, k, pick(rng, &[-0.5, 0.0, 0.5]));
            a2.diffusion_offset[(k, alpha)] = pick(rng, &[-0.5, 0.0, 0.5, 1.0]);
        }
    }
    let mut g_offsets1 = Vec::new();
    for j in 0..atoms {
        for k in 0..m {
            for i in 0..m {
                a2.jumps[j].matrix[(k, i)] = if i == k {
                    pick(rng, &[-1.0, -0.5, 0.0, 0.5])
                } else {
                    pick(rng, &[0.0, 0.0, 0.5])
                };
            }
            a2.jumps[j].offset[k] = pick(rng, &[-0.5, 0.0, 0.5]);
        }
        g_offsets1.push(
            a2.jumps[j]
                .offset
                .iter()
                .map(|g| g + pick(rng, &[0.0, 0.5]))
                .collect::<Vec<_>>(),
        );
    }
    // compensated drift M x + r, shared slope
    let mut slope = nalgebra::DMatrix::zeros(m, m);
    for k in 0..m {
        for i in 0..m {
            slope[(k, i)] = if i == k {
                pick(rng, &[-1.0, -0.5, 0.0, 0.5])
            } else {
                pick(rng, &[0.0, 0.5])
            };
        }
    }
    let r2: Vec<f64> = (0..m).map(|_| pick(rng, &[-1.0, 0.0, 1.0])).collect();
    let r1: Vec<f64> = r2.iter().map(|r| r + pick(rng, &[0.0, 0.5, 1.0])).collect();

    let mut a1 = a2.clone();
    for j in 0..atoms {
        a1.jumps[j].offset = g_offsets1[j].clone();
    }
    let assemble = |a: &mut AffineCoefficients, r: &[f64]| {
        let mut b = slope.clone();
        let mut c = r.to_vec();
        for j in 0..atoms {
            b += &a.jumps[j].matrix * w[j];
            for k in 0..m {
                c[k] += w[j] * a.jumps[j].offset[k];
            }
        }
        a.drift_matrix = b;
        a.drift_offset = c;
    };
    assemble(&mut a1, &r1);
    assemble(&mut a2, &r2);

    let k = rng.random_range(0..m);
    let other = (k + 1) % m;
    match mutation {
        Mutation::None => {}
        Mutation::Benign => a1.drift_offset[k] += 0.5,
        Mutation::SigmaGap => a1.diffusion_offset[(k, 0)] += pick(rng, &[-0.5, 0.5]),
        Mutation::SigmaCoupling => {
            // both models keep equal diffusions; needs m >= 2
            let v = pick(rng, &[-0.5, 0.5]);
            let j = if m > 1 { other } else { k };
            let base = a1.diffusion_linear_entry(k, 0, j);
            let v = if m > 1 { v } else { base };
            a1.set_diffusion_linear(k, 0, j, v);
            a2.set_diffusion_linear(k, 0, j, v);
            if m == 1 {
                a1.diffusion_offset[(k, 0)] += 0.5;
            }
        }
        Mutation::JumpSlope if atoms > 0 => {
            let i = rng.random_range(0..m);
            a1.jumps[0].matrix[(k, i)] += pick(rng, &[-0.5, 0.5]);
        }
        Mutation::JumpOvershoot if atoms > 0 => {
            a1.jumps[0].matrix[(k, k)] = -1.5;
            a2.jumps[0].matrix[(k, k)] = -1.5;
        }
        Mutation::JumpOffset if atoms > 0 => a1.jumps[0].offset[k] -= 1.0,
        Mutation::DriftOffDiagonal if m > 1 => {
            // strong enough to fail inside the default sampling box
            a1.drift_matrix[(k, other)] -= 2.0;
            a2.drift_matrix[(k, other)] -= 2.0;
        }
        // fallbacks for mutations that need jumps or m >= 2
        _ => a1.drift_offset[k] -= 1.5,
    }
    (a1, a2, marks)
}

pub fn problem(a1: AffineCoefficients, a2: AffineCoefficients, marks: MarkMeasure, seed: u64) -> ComparisonProblem {
    let m = a1.m;
    let m1 = SdeModel::affine(a1, marks.clone()).expect("valid model 1");
    let m2 = SdeModel::affine(a2, marks).expect("valid model 2");
    ComparisonProblem::new(m1, m2, (0.0, 1.0), vec![0.0; m], vec![0.0; m]).with_sampling(SampleDomain::new(2.0, 10_000, seed))
}

/// The `index`-th model of a seeded family: mutation cycles through
/// none, benign and the breaking kinds.
pub fn family_member(seed: u64, index: u64) -> (ComparisonProblem, Mutation) {
    let mut rng = stream(seed, index);
    let m = rng.random_range(1..=3);
    let atoms = rng.random_range(0..=3);
    let kinds = [Mutation::None, Mutation::Benign]
        .into_iter()
        .chain(BREAKING)
        .collect::<Vec<_>>();
    let mutation = kinds[index as usize % kinds.len()];
    let (a1, a2, marks) = random_pair(&mut rng, m, atoms, mutation);
    (problem(a1, a2, marks, seed ^ index), mutation)
}

/// Seeded scalar pair for a corollary variant: equal jumps for
/// `EqualJumps`, vanishing jumps for `NoJumps`.
pub fn corollary_member(seed: u64, index: u64, variant: jumpcompare_core::conditions::CorollaryVariant) -> ComparisonProblem {
    use jumpcompare_core::conditions::CorollaryVariant;
    let mut rng = stream(seed, index);
    let atoms = match variant {
        CorollaryVariant::NoJumps => rng.random_range(0..=1),
        _ => rng.random_range(1..=3),
    };
    let kinds = [
        Mutation::None,
        Mutation::Benign,
        Mutation::SigmaGap,
        Mutation::JumpSlope,
        Mutation::JumpOvershoot,
        Mutation::JumpOffset,
        Mutation::DriftOffset,
    ];
    let mutation = kinds[index as usize % kinds.len()];
    let (mut a1, mut a2, marks) = random_pair(&mut rng, 1, atoms, mutation);
    match variant {
        CorollaryVariant::Jumps => {}
        CorollaryVariant::EqualJumps => a1.jumps = a2.jumps.clone(),
        CorollaryVariant::NoJumps => {
            for j in 0..atoms {
                a1.jumps[j] = jumpcompare_core::model::AffineJump::zero(1);
                a2.jumps[j] = jumpcompare_core::model::AffineJump::zero(1);
            }
        }
    }
    problem(a1, a2, marks, seed ^ index)
}
