//! Independent oracles and generators shared by integration tests.

#![allow(dead_code)]

use layerflow_core::dsl::{AgentSpec, Difficulty, TopologyDoc};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::Rng;

/// Decimal digits carried by the fixed-point oracle.
const DIGITS: usize = 60;
/// Halvings applied before the Taylor series in [`exp_fixed`].
const HALVINGS: u32 = 16;

fn scale() -> BigInt {
    BigInt::from(10u32).pow(DIGITS as u32)
}

/// `num / den` as a fixed-point number.
pub fn ratio(num: i64, den: i64) -> BigInt {
    BigInt::from(num) * scale() / BigInt::from(den)
}

pub fn fixed_int(n: i64) -> BigInt {
    BigInt::from(n) * scale()
}

fn mul(a: &BigInt, b: &BigInt) -> BigInt {
    a * b / scale()
}

/// `exp(x)` on fixed-point numbers by halving, Taylor series, squaring.
pub fn exp_fixed(x: &BigInt) -> BigInt {
    let reduced = x / BigInt::from(2u32).pow(HALVINGS);
    let mut sum = scale();
    let mut term = scale();
    let mut k = 1u32;
    loop {
        term = mul(&term, &reduced) / BigInt::from(k);
        if term.is_zero() {
            break;
        }
        sum += &term;
        k += 1;
    }
    for _ in 0..HALVINGS {
        sum = mul(&sum, &sum);
    }
    sum
}

/// Correctly rounded conversion of a fixed-point number to `f64`.
pub fn to_f64(x: &BigInt) -> f64 {
    let digits = x.abs().to_string();
    let padded = format!("{digits:0>width$}", width = DIGITS + 1);
    let (int, frac) = padded.split_at(padded.len() - DIGITS);
    let sign = if x.is_negative() { "-" } else { "" };
    format!("{sign}{int}.{frac}").parse().expect("decimal literal")
}

/// High-precision density scores for `(|V|, |E|, s)` at cap `n_max`.
#[derive(Debug, Clone, Copy)]
pub struct DensityOracle {
    pub s_node: f64,
    pub s_edge: f64,
    pub s_depth: f64,
    pub s_complex: f64,
    pub raw_density: f64,
}

pub fn density_oracle(v: i64, e: i64, s: i64, n_max: i64) -> DensityOracle {
    let s_node = exp_fixed(&ratio(-v, n_max));
    // |E| / (|V| (|V| - 1/2)) = 2|E| / (|V| (2|V| - 1))
    let s_edge = exp_fixed(&ratio(-2 * e, v * (2 * v - 1)));
    let s_depth = ratio(v - s, v);
    let inner = &s_node + &s_edge * BigInt::from(2) + &s_depth;
    let s_complex = exp_fixed(&inner);
    let raw = ratio(v * v + 2 * e + s * v, v);
    DensityOracle {
        s_node: to_f64(&s_node),
        s_edge: to_f64(&s_edge),
        s_depth: to_f64(&s_depth),
        s_complex: to_f64(&s_complex),
        raw_density: to_f64(&raw),
    }
}

/// `tanh(p / q)` through the fixed-point exponential.
pub fn tanh_oracle(p: i64, q: i64) -> f64 {
    let e2 = exp_fixed(&ratio(2 * p, q));
    let one = scale();
    to_f64(&((&e2 - &one) * scale() / (&e2 + &one)))
}

pub fn rel_close(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol * want.abs()
}

/// A generated topology with the facts the generator knows about it.
#[derive(Debug, Clone)]
pub struct GenTopo {
    pub doc: TopologyDoc,
    pub v: usize,
    pub e: usize,
    pub s: usize,
    /// `preds[i]` are the predecessors of node `i` (flat index).
    pub preds: Vec<Vec<usize>>,
}

const ROLES: [&str; 8] = [
    "planner", "coder", "debugger", "tester", "retriever", "algorithmic", "planning", "coding",
];

/// Random valid layered topology with `v` nodes in `s` non-empty steps.
///
/// With `adjacent_edge`, every node past step 1 references at least one
/// node of the step directly before it.
pub fn random_topology(
    rng: &mut impl Rng,
    difficulty: Difficulty,
    v: usize,
    s: usize,
    adjacent_edge: bool,
    extra_ref_p: f64,
) -> GenTopo {
    assert!(1 <= s && s <= v);
    let mut sizes = vec![1usize; s];
    for _ in s..v {
        sizes[rng.gen_range(0..s)] += 1;
    }
    let mut layer_of = Vec::with_capacity(v);
    for (l, &n) in sizes.iter().enumerate() {
        layer_of.extend(std::iter::repeat_n(l, n));
    }
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); v];
    for node in 0..v {
        let layer = layer_of[node];
        if layer == 0 {
            continue;
        }
        let earlier: Vec<usize> = (0..v).filter(|&u| layer_of[u] < layer).collect();
        let mut chosen: Vec<usize> = earlier.iter().copied().filter(|_| rng.gen_bool(extra_ref_p)).collect();
        if adjacent_edge && !chosen.iter().any(|&u| layer_of[u] == layer - 1) {
            let prev: Vec<usize> = (0..v).filter(|&u| layer_of[u] == layer - 1).collect();
            chosen.push(prev[rng.gen_range(0..prev.len())]);
        }
        chosen.sort_unstable();
        preds[node] = chosen;
    }
    let mut layers: Vec<Vec<AgentSpec>> = vec![Vec::new(); s];
    for node in 0..v {
        let role = ROLES[rng.gen_range(0..ROLES.len())];
        let refs: Vec<String> = preds[node].iter().map(|u| format!("n{u}")).collect();
        layers[layer_of[node]].push(AgentSpec::new(format!("n{node}"), role, refs));
    }
    let e = preds.iter().map(Vec::len).sum();
    GenTopo {
        doc: TopologyDoc::from_layers(difficulty, layers),
        v,
        e,
        s,
        preds,
    }
}

/// Longest path, counted in nodes, by enumerating every path.
pub fn longest_path_exhaustive(preds: &[Vec<usize>]) -> usize {
    let n = preds.len();
    let mut succ = vec![Vec::new(); n];
    for (v, ps) in preds.iter().enumerate() {
        for &u in ps {
            succ[u].push(v);
        }
    }
    fn walk(node: usize, succ: &[Vec<usize>], len: usize, best: &mut usize) {
        *best = (*best).max(len);
        for &next in &succ[node] {
            walk(next, succ, len + 1, best);
        }
    }
    let mut best = 0;
    for start in 0..n {
        walk(start, &succ, 1, &mut best);
    }
    best
}

pub fn population_mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[test]
fn oracle_self_check() {
    assert!(rel_close(to_f64(&exp_fixed(&fixed_int(1))), std::f64::consts::E, 1e-15));
    assert!(rel_close(to_f64(&exp_fixed(&ratio(-1, 2))), (-0.5f64).exp(), 1e-15));
    assert!(rel_close(tanh_oracle(-1, 2), (-0.5f64).tanh(), 1e-15));
    assert_eq!(longest_path_exhaustive(&[vec![], vec![0], vec![1], vec![0]]), 3);
}
