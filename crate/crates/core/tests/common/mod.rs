#![allow(dead_code)]

use std::f64::consts::PI;

use embedgame::classical::Primitive;
use embedgame::embedding::RegularEmbedding;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn coin() -> Primitive {
    Primitive::from_table(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap()
}

pub fn biased_pair() -> Primitive {
    Primitive::from_table(vec![vec![0.375, 0.125], vec![0.375, 0.125]]).unwrap()
}

/// `psi_0 = (sqrt3/2, 1/2)`, `psi_1 = (sqrt3/2, -1/2)`.
pub fn biased_pair_embedding() -> RegularEmbedding {
    RegularEmbedding::with_phases(&biased_pair(), vec![vec![0.0, 0.0], vec![0.0, PI]]).unwrap()
}

/// Randomized 1-2 OT over `X = (x0, x1)`, `Y = (c, x_c)`.
pub fn ot() -> Primitive {
    let mut probs = vec![vec![0.0; 4]; 4];
    for x0 in 0..2 {
        for x1 in 0..2 {
            for choice in 0..2 {
                let y = if choice == 0 { x0 } else { x1 };
                probs[x0 * 2 + x1][choice * 2 + y] += 0.125;
            }
        }
    }
    Primitive::from_table(probs).unwrap()
}

fn normalize(table: Vec<Vec<u32>>) -> Option<Primitive> {
    let total: u32 = table.iter().flatten().sum();
    if total == 0 {
        return None;
    }
    let probs = table
        .into_iter()
        .map(|row| row.into_iter().map(|v| v as f64 / total as f64).collect())
        .collect();
    Primitive::from_table(probs).ok()
}

/// Small integer weights, so zero rows and repeated conditionals are common.
pub fn arb_raw_primitive() -> impl Strategy<Value = Primitive> {
    (1usize..=4, 1usize..=4)
        .prop_flat_map(|(nx, ny)| prop::collection::vec(prop::collection::vec(0u32..4, ny), nx))
        .prop_filter_map("all-zero table", normalize)
}

/// Rows drawn from a few shared conditionals with independent row weights.
pub fn arb_shared_rows_primitive() -> impl Strategy<Value = Primitive> {
    (1usize..=4, 1usize..=4, 1usize..=3)
        .prop_flat_map(|(nx, ny, k)| {
            (
                prop::collection::vec(prop::collection::vec(0u32..5, ny), k),
                prop::collection::vec((0..k, 0u32..4), nx),
            )
        })
        .prop_filter_map("all-zero table", |(bases, rows)| {
            let table = rows
                .iter()
                .map(|&(b, w)| bases[b].iter().map(|v| v * w).collect())
                .collect();
            normalize(table)
        })
}

/// Block-diagonal support with product structure inside each block; such a
/// primitive is trivial.
pub fn arb_block_primitive() -> impl Strategy<Value = Primitive> {
    (1usize..=4, 1usize..=4)
        .prop_flat_map(|(nx, ny)| {
            let blocks = nx.min(ny);
            (
                prop::collection::vec(0..blocks, nx),
                prop::collection::vec(0..blocks, ny),
                prop::collection::vec(1u32..5, nx),
                prop::collection::vec(1u32..5, ny),
            )
        })
        .prop_filter_map("empty block", |(bx, by, wx, wy)| {
            let table = bx
                .iter()
                .zip(&wx)
                .map(|(b, a)| {
                    by.iter()
                        .zip(&wy)
                        .map(|(c, w)| if b == c { a * w } else { 0 })
                        .collect()
                })
                .collect();
            normalize(table)
        })
}

pub fn arb_primitive() -> impl Strategy<Value = Primitive> {
    prop_oneof![
        arb_raw_primitive(),
        arb_shared_rows_primitive(),
        arb_block_primitive()
    ]
}

/// Pearson statistic and the 99% quantile for `counts` against `probs`;
/// cells with zero expected mass must be empty.
pub fn chi_square(counts: &[u64], probs: &[f64]) -> (f64, f64) {
    let n: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0;
    for (&k, &p) in counts.iter().zip(probs) {
        if p <= 0.0 {
            assert_eq!(k, 0, "count in a zero-probability cell");
            continue;
        }
        let expected = p * n as f64;
        stat += (k as f64 - expected).powi(2) / expected;
        cells += 1;
    }
    let df = (cells - 1).max(1) as f64;
    (stat, ChiSquared::new(df).unwrap().inverse_cdf(0.99))
}
