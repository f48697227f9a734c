//! Test-side oracles, written independently of the library's code paths.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use statanon::{CategoricalTable, Cell, Column, Rational};

/// Random table: `n` rows, `d` columns, alphabets of 1..=max_alphabet
/// values, and roughly one cell in ten redacted.
pub fn random_table(rng: &mut ChaCha8Rng, n: usize, d: usize, max_alphabet: usize) -> CategoricalTable {
    let sizes: Vec<usize> = (0..d).map(|_| rng.random_range(1..=max_alphabet)).collect();
    let columns = sizes
        .iter()
        .enumerate()
        .map(|(j, &m)| Column::new(format!("c{j}"), (0..m).map(|v| format!("v{v}")).collect()))
        .collect();
    let rows = (0..n)
        .map(|_| {
            sizes
                .iter()
                .map(|&m| {
                    if rng.random_bool(0.1) {
                        None
                    } else {
                        Some(rng.random_range(0..m as u32))
                    }
                })
                .collect()
        })
        .collect();
    CategoricalTable::new(columns, rows).unwrap()
}

/// For each row, how many rows agree with it on `cols` (quadratic scan).
pub fn row_multiplicities(table: &CategoricalTable, cols: &[usize]) -> Vec<u64> {
    let key = |i: usize| -> Vec<Cell> { cols.iter().map(|&j| table.cell(i, j)).collect() };
    let keys: Vec<Vec<Cell>> = (0..table.n_rows()).map(key).collect();
    keys.iter()
        .map(|a| keys.iter().filter(|b| *b == a).count() as u64)
        .collect()
}

pub fn big(r: &Rational) -> BigRational {
    r.as_big().clone()
}

/// Fraction of rows whose joint value on `cols` has empirical mass
/// strictly below `t`.
pub fn brute_force_exposure(table: &CategoricalTable, cols: &[usize], t: &Rational) -> BigRational {
    let n = table.n_rows() as u64;
    let t = big(t);
    let below = row_multiplicities(table, cols)
        .into_iter()
        .filter(|&m| BigRational::new(BigInt::from(m), BigInt::from(n)) < t)
        .count();
    BigRational::new(BigInt::from(below), BigInt::from(n))
}

/// Inverse-CDF categorical draw.
pub fn draw(rng: &mut ChaCha8Rng, cumulative: &[f64]) -> usize {
    let u: f64 = rng.random();
    cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1)
}

pub fn cumulative(p: &[f64]) -> Vec<f64> {
    p.iter()
        .scan(0.0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

/// Normalized i.i.d. exponential draws: a flat Dirichlet sample.
pub fn flat_dirichlet(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..m).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}
