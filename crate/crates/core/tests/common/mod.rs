//! Brute-force reference computations shared by the integration tests.
//!
//! These deliberately avoid the library's table and marginalization code:
//! marginals are rebuilt from scratch with a HashMap and entropies summed
//! directly from probabilities.

#![allow(dead_code)]

use std::collections::HashMap;

/// A finite joint as `(coordinates, probability)` with coordinates ordered
/// `(x, t, y)`.
pub type Cells = Vec<([u32; 3], f64)>;

pub const X: usize = 0;
pub const T: usize = 1;
pub const Y: usize = 2;

pub fn normalize(cells: &mut Cells) {
    let total: f64 = cells.iter().map(|(_, p)| p).sum();
    for (_, p) in cells.iter_mut() {
        *p /= total;
    }
}

/// H of the coordinates in `dims`, in bits.
pub fn h(cells: &Cells, dims: &[usize]) -> f64 {
    let mut marginal: HashMap<Vec<u32>, f64> = HashMap::new();
    for (c, p) in cells {
        let key: Vec<u32> = dims.iter().map(|&d| c[d]).collect();
        *marginal.entry(key).or_insert(0.0) += p;
    }
    marginal
        .values()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln() / std::f64::consts::LN_2)
        .sum()
}

/// H(a | b) = H(a, b) - H(b).
pub fn h_given(cells: &Cells, a: &[usize], b: &[usize]) -> f64 {
    let mut ab = a.to_vec();
    ab.extend_from_slice(b);
    h(cells, &ab) - h(cells, b)
}

/// I(a; b) = H(a) + H(b) - H(a, b).
pub fn mi(cells: &Cells, a: &[usize], b: &[usize]) -> f64 {
    let mut ab = a.to_vec();
    ab.extend_from_slice(b);
    h(cells, a) + h(cells, b) - h(cells, &ab)
}

/// Exact `(x, t, y)` joint of `T = (g(X) + N) mod k` from an `(x, y)` joint.
pub fn push_forward(xy: &[([u32; 2], f64)], mapping: &[u32], noise: &[f64]) -> Cells {
    let k = noise.len() as u32;
    let total: f64 = xy.iter().map(|(_, p)| p).sum();
    let mut out = Vec::new();
    for ([x, y], p) in xy {
        for (offset, q) in noise.iter().enumerate() {
            if *q > 0.0 {
                let t = (mapping[*x as usize] + offset as u32) % k;
                out.push(([*x, t, *y], p / total * q));
            }
        }
    }
    out
}

/// Reference values for the named quantities, `(name, value)`.
pub fn reference_quantities(cells: &Cells) -> Vec<(&'static str, f64)> {
    vec![
        ("h_x", h(cells, &[X])),
        ("h_y", h(cells, &[Y])),
        ("h_f", h(cells, &[T])),
        ("n_xy", h_given(cells, &[X], &[Y])),
        ("l_xy", h_given(cells, &[Y], &[X])),
        ("n_xxf", h_given(cells, &[T], &[X])),
        ("l_xxf", h_given(cells, &[X], &[T])),
        ("n_xyf", h_given(cells, &[T], &[Y])),
        ("l_xyf", h_given(cells, &[Y], &[T])),
        ("i_xy", mi(cells, &[X], &[Y])),
        ("i_xxf", mi(cells, &[X], &[T])),
        ("i_xyf", mi(cells, &[T], &[Y])),
    ]
}

pub fn field(q: &imflow_core::InfoQuantities, name: &str) -> f64 {
    match name {
        "h_x" => q.h_x,
        "h_y" => q.h_y,
        "h_f" => q.h_f,
        "n_xy" => q.n_xy,
        "l_xy" => q.l_xy,
        "n_xxf" => q.n_xxf,
        "l_xxf" => q.l_xxf,
        "n_xyf" => q.n_xyf,
        "l_xyf" => q.l_xyf,
        "i_xy" => q.i_xy,
        "i_xxf" => q.i_xxf,
        "i_xyf" => q.i_xyf,
        "dloss" => q.dloss,
        other => panic!("unknown quantity {other}"),
    }
}
