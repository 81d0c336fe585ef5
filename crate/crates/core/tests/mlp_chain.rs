mod common;

use imflow_core::mlp::{
    chain_trajectory, forward, init, layer_chain, train, Activation, ChainConfig, Dataset, MlpConfig,
};
use imflow_core::Mode;

fn short_run() -> (Dataset, Vec<imflow_core::SnapshotChain>) {
    let mut cfg = MlpConfig::new(vec![4, 6, 3, 1], Activation::Sigmoid);
    cfg.seed = 5;
    cfg.learning_rate = 1.0;
    cfg.epochs = 60;
    cfg.snapshot_epochs = vec![0, 30, 60];
    let data = Dataset::bit_xor(4, 0, 2, 1024).unwrap();
    let out = train(&init(&cfg).unwrap(), &data, &cfg).unwrap();
    let chains = chain_trajectory(&out.snapshots, &data, &ChainConfig::default()).unwrap();
    (data, chains)
}

#[test]
fn every_snapshot_satisfies_exact_layer_identities() {
    let (_, chains) = short_run();
    assert_eq!(chains.iter().map(|c| c.epoch).collect::<Vec<_>>(), [0, 30, 60]);
    for snap in &chains {
        let report = &snap.chain;
        assert_eq!(report.layers.len(), 4);
        assert_eq!(report.steps.len(), 3);
        assert_eq!(report.layers[0].label, "input");
        assert!(report.dpi_holds(1e-9));
        for entry in &report.layers {
            let q = &entry.analysis.quantities;
            assert!(q.first_violated_identity(1e-9).is_none(), "layer {}", entry.layer);
            assert_eq!(q.n_xxf, 0.0, "binned layer {} must be a function of X", entry.layer);
            assert!(entry.analysis.constraints.check("determinism").unwrap().passed);
        }
        let input = &report.layers[0].analysis;
        let q = &input.quantities;
        assert!(input.matrix.a.abs() < 1e-9 && input.matrix.c.abs() < 1e-9);
        assert!((input.matrix.b - q.n_xy).abs() < 1e-9 && (input.matrix.d - q.i_xy).abs() < 1e-9);
    }
}

#[test]
fn layer_quantities_match_brute_force() {
    let mut cfg = MlpConfig::new(vec![4, 5, 2, 1], Activation::Tanh);
    cfg.seed = 21;
    let model = init(&cfg).unwrap();
    let data = Dataset::bit_xor(4, 1, 3, 256).unwrap();
    let chain_cfg = ChainConfig::default();
    let report = layer_chain(&model, &data, &chain_cfg).unwrap();

    // Rebuild the binned symbols by hand: tanh range [-1, 1], 16 bins.
    let (_, trace) = forward(&model, &data.inputs).unwrap();
    let hidden = &trace.layers[1];
    let y = data.labels();
    let mut seen: Vec<Vec<usize>> = Vec::new();
    let mut cells: common::Cells = Vec::new();
    for (i, label) in y.iter().enumerate() {
        let bins: Vec<usize> = hidden
            .row(i)
            .iter()
            .map(|v| (((v + 1.0) / 2.0 * 16.0).floor() as usize).min(15))
            .collect();
        let t = match seen.iter().position(|b| *b == bins) {
            Some(p) => p,
            None => {
                seen.push(bins);
                seen.len() - 1
            }
        };
        let x: u32 = data
            .inputs
            .row(i)
            .iter()
            .enumerate()
            .map(|(b, &v)| (v as u32) << b)
            .sum();
        cells.push(([x, t as u32, label.0], 1.0 / data.len() as f64));
    }
    let q = &report.layers[1].analysis.quantities;
    for (name, want) in common::reference_quantities(&cells) {
        assert!((common::field(q, name) - want).abs() < 1e-9, "{name}");
    }
}

#[test]
fn chain_reports_are_reproducible() {
    let (_, a) = short_run();
    let (_, b) = short_run();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn wide_layers_are_measured_on_a_unit_subset() {
    let mut cfg = MlpConfig::new(vec![4, 12, 1], Activation::Relu);
    cfg.seed = 2;
    let model = init(&cfg).unwrap();
    let data = Dataset::bit_xor(4, 0, 1, 64).unwrap();
    let chain_cfg = ChainConfig {
        max_units: 5,
        mode: Mode::Stochastic,
        ..ChainConfig::default()
    };
    let report = layer_chain(&model, &data, &chain_cfg).unwrap();
    assert_eq!(report.layers[1].width, 12);
    assert_eq!(report.layers[1].units_measured, 5);
    assert_eq!(report.layers[2].units_measured, 1);
    assert_eq!(report.metadata.sample_count, 64);
    assert_eq!(report.metadata.bins, 16);
}
