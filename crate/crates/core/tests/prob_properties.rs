mod common;

use common::{Cells, T, X, Y};
use imflow_core::prob::{encode_categorical, CLAMP_TOLERANCE};
use imflow_core::{conditional_entropy, entropy, joint_from_samples, mutual_information, Axis, JointTable, Symbol};
use proptest::prelude::*;

fn table_and_cells(raw: &[(u32, u32, u32, u32)]) -> (JointTable, Cells) {
    let table = JointTable::from_masses(
        vec![Axis::X, Axis::T, Axis::Y],
        raw.iter().map(|&(x, t, y, w)| (vec![x, t, y], w as f64)),
    )
    .unwrap();
    let mut cells: Cells = raw.iter().map(|&(x, t, y, w)| ([x, t, y], w as f64)).collect();
    common::normalize(&mut cells);
    (table, cells)
}

fn raw_joint() -> impl Strategy<Value = Vec<(u32, u32, u32, u32)>> {
    prop::collection::vec((0u32..6, 0u32..6, 0u32..6, 1u32..20), 1..40)
}

const ALL: [Axis; 3] = [Axis::X, Axis::T, Axis::Y];
const DIMS: [usize; 3] = [X, T, Y];

proptest! {
    #[test]
    fn entropies_match_brute_force(raw in raw_joint()) {
        let (table, cells) = table_and_cells(&raw);
        for (axis, dim) in ALL.iter().zip(DIMS) {
            let got = entropy(&table, &[*axis]).unwrap();
            prop_assert!((got - common::h(&cells, &[dim])).abs() < 1e-12);
        }
        let got = entropy(&table, &[Axis::Y, Axis::X]).unwrap();
        prop_assert!((got - common::h(&cells, &[X, Y])).abs() < 1e-12);
        let got = conditional_entropy(&table, &[Axis::T], &[Axis::Y]).unwrap();
        prop_assert!((got - common::h_given(&cells, &[T], &[Y])).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_is_symmetric(raw in raw_joint()) {
        let (table, _) = table_and_cells(&raw);
        for (a, b) in [(Axis::X, Axis::Y), (Axis::T, Axis::X), (Axis::Y, Axis::T)] {
            let ab = mutual_information(&table, &[a], &[b]).unwrap();
            let ba = mutual_information(&table, &[b], &[a]).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-12, "{ab} vs {ba}");
        }
        let lhs = mutual_information(&table, &[Axis::X, Axis::T], &[Axis::Y]).unwrap();
        let rhs = mutual_information(&table, &[Axis::Y], &[Axis::T, Axis::X]).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn chain_rule(raw in raw_joint()) {
        let (table, _) = table_and_cells(&raw);
        for (a, b) in [
            (vec![Axis::X], vec![Axis::Y]),
            (vec![Axis::T, Axis::X], vec![Axis::Y]),
            (vec![Axis::Y], vec![Axis::X, Axis::T]),
        ] {
            let mut union = a.clone();
            union.extend(&b);
            let lhs = entropy(&table, &union).unwrap();
            let rhs = entropy(&table, &b).unwrap() + conditional_entropy(&table, &a, &b).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }
    }

    #[test]
    fn non_negative_and_bounded(raw in raw_joint()) {
        let (table, _) = table_and_cells(&raw);
        for axis in ALL {
            let h = entropy(&table, &[axis]).unwrap();
            let size = table.alphabet_size(axis).unwrap() as f64;
            prop_assert!(h >= 0.0);
            prop_assert!(h <= size.log2() + 1e-12);
        }
        for (a, b) in [(Axis::X, Axis::Y), (Axis::T, Axis::Y), (Axis::X, Axis::T)] {
            prop_assert!(conditional_entropy(&table, &[a], &[b]).unwrap() >= 0.0);
            prop_assert!(mutual_information(&table, &[a], &[b]).unwrap() >= 0.0);
        }
    }

    #[test]
    fn function_of_x_has_zero_conditional_entropy(
        xs in prop::collection::vec(0u32..12, 1..300),
        mapping in prop::collection::vec(0u32..5, 12),
        ys in prop::collection::vec(0u32..3, 300),
    ) {
        let x: Vec<Symbol> = xs.iter().map(|&v| Symbol(v)).collect();
        let t: Vec<Symbol> = xs.iter().map(|&v| Symbol(mapping[v as usize])).collect();
        let y: Vec<Symbol> = ys[..xs.len()].iter().map(|&v| Symbol(v)).collect();
        let table = joint_from_samples(&[(Axis::X, &x), (Axis::T, &t), (Axis::Y, &y)]).unwrap();
        prop_assert!(conditional_entropy(&table, &[Axis::T], &[Axis::X]).unwrap().abs() <= 1e-12);
        let i = mutual_information(&table, &[Axis::X], &[Axis::T]).unwrap();
        prop_assert!((i - entropy(&table, &[Axis::T]).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn sample_counts_match_frequencies(
        rows in prop::collection::vec((0u32..4, 0u32..4), 1..200),
    ) {
        let x: Vec<Symbol> = rows.iter().map(|r| Symbol(r.0)).collect();
        let y: Vec<Symbol> = rows.iter().map(|r| Symbol(r.1)).collect();
        let table = joint_from_samples(&[(Axis::X, &x), (Axis::Y, &y)]).unwrap();
        prop_assert_eq!(table.total_mass(), rows.len() as f64);
        for (cell, mass) in table.cells() {
            let count = rows.iter().filter(|r| r.0 == cell[0] && r.1 == cell[1]).count();
            prop_assert_eq!(mass, count as f64);
        }
    }

    #[test]
    fn relabelling_leaves_entropy_unchanged(
        values in prop::collection::vec(0u32..9, 1..100),
        offset in 1u32..1000,
    ) {
        let a: Vec<Symbol> = values.iter().map(|&v| Symbol(v)).collect();
        let b: Vec<Symbol> = values.iter().map(|&v| Symbol(v * 7 + offset)).collect();
        let ha = entropy(&joint_from_samples(&[(Axis::X, &a)]).unwrap(), &[Axis::X]).unwrap();
        let hb = entropy(&joint_from_samples(&[(Axis::X, &b)]).unwrap(), &[Axis::X]).unwrap();
        prop_assert_eq!(ha.to_bits(), hb.to_bits());
        prop_assert_eq!(encode_categorical(&values), encode_categorical(&b));
    }
}

#[test]
fn clamp_tolerance_is_pinned() {
    assert_eq!(CLAMP_TOLERANCE, 1e-9);
}

#[test]
fn shuffled_insertion_order_is_bitwise_stable() {
    let cells: Vec<(Vec<u32>, f64)> = (0..30u32)
        .map(|i| (vec![i % 5, i % 3, i % 2], 0.1 + i as f64 * 0.37))
        .collect();
    let mut reversed = cells.clone();
    reversed.reverse();
    let a = JointTable::from_masses(vec![Axis::X, Axis::T, Axis::Y], cells).unwrap();
    let b = JointTable::from_masses(vec![Axis::X, Axis::T, Axis::Y], reversed).unwrap();
    for axes in [&[Axis::X][..], &[Axis::T, Axis::Y], &[Axis::Y, Axis::X, Axis::T]] {
        assert_eq!(
            entropy(&a, axes).unwrap().to_bits(),
            entropy(&b, axes).unwrap().to_bits()
        );
    }
}
