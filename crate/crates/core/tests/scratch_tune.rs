//! Scratch experiment for tuning the toy-training uplift. Deleted before release.

use bi_core::network::synthetic::{self, BlobDatasetConfig};
use bi_core::network::{
    evaluate, prepare_instance, train_toy, Activation, InceptionConfig, LayerSpec, ParamGroup,
    Regime, SuperpixelConfig, TrainConfig,
};
use bi_core::superpixel::FeatureKind;

fn config(with_bi: bool, regime: Regime, seed: u64, warmup: usize, epochs: usize) -> TrainConfig {
    let mut layers = vec![
        LayerSpec::Dense { out: 24, activation: Activation::Relu, group: ParamGroup::Backbone },
        LayerSpec::Dense { out: 24, activation: Activation::Relu, group: ParamGroup::Fc },
    ];
    if with_bi {
        layers.push(LayerSpec::Bi);
    }
    layers.push(LayerSpec::Dense {
        out: synthetic::NUM_CLASSES,
        activation: Activation::None,
        group: ParamGroup::Fc,
    });
    TrainConfig {
        seed,
        epochs,
        warmup_epochs: warmup,
        lr: 2e-3,
        regime,
        layers,
        superpixels: SuperpixelConfig { count: 150, compactness: 10.0, iterations: 10 },
        inception: InceptionConfig {
            h: 2,
            feature_kinds: vec![FeatureKind::Position, FeatureKind::PositionColor],
        },
    }
}

#[test]
#[ignore]
fn tune_uplift() {
    let t0 = std::time::Instant::now();
    let cfg_ds = BlobDatasetConfig::default();
    let train_data = synthetic::generate_blob_dataset(424242, 50, &cfg_ds);
    let test_data = synthetic::generate_blob_dataset(999999, 20, &cfg_ds);
    println!("dataset gen: {:?}", t0.elapsed());

    let sp = SuperpixelConfig { count: 150, compactness: 10.0, iterations: 10 };
    let t1 = std::time::Instant::now();
    let test_insts: Vec<_> = test_data
        .iter()
        .map(|(img, gt)| prepare_instance(img, gt, &sp).unwrap())
        .collect();
    println!("test prep: {:?} (M of first: {})", t1.elapsed(), test_insts[0].part.segment_count());

    // Quantization ceiling at this superpixel count.
    let quant: f64 = test_insts
        .iter()
        .map(|i| {
            bi_core::superpixel::quantization_error(&i.part, &i.gt)
                .unwrap()
                .best_iou
        })
        .sum::<f64>()
        / test_insts.len() as f64;
    println!("quantization ceiling bestIoU @150: {quant:.4}");

    let (warmup, epochs) = (30, 90);
    for seed in [1u64, 2, 3, 4, 5] {
        let t = std::time::Instant::now();
        let fc = train_toy(&config(false, Regime::Full, seed, 0, warmup + epochs), &train_data).unwrap();
        let fc_iou = evaluate(&fc.net, &test_insts).unwrap().mean_iou;
        let fc_train = fc.metrics.last().unwrap().mean_iou;
        println!(
            "seed {seed} FC   : test {fc_iou:.4} train {fc_train:.4} ({:?})",
            t.elapsed()
        );

        let t = std::time::Instant::now();
        let bi = train_toy(&config(true, Regime::Bi, seed, warmup, epochs), &train_data).unwrap();
        let bi_iou = evaluate(&bi.net, &test_insts).unwrap().mean_iou;
        println!(
            "seed {seed} BI   : test {bi_iou:.4} train {:.4} ({:?})",
            bi.metrics.last().unwrap().mean_iou,
            t.elapsed()
        );

        let t = std::time::Instant::now();
        let bifc = train_toy(&config(true, Regime::BiFc, seed, warmup, epochs), &train_data).unwrap();
        let bifc_iou = evaluate(&bifc.net, &test_insts).unwrap().mean_iou;
        println!(
            "seed {seed} BI+FC: test {bifc_iou:.4} train {:.4} ({:?})",
            bifc.metrics.last().unwrap().mean_iou,
            t.elapsed()
        );

        println!(
            "seed {seed}: uplift BI {:.1} pts, BI+FC {:.1} pts",
            (bi_iou - fc_iou) * 100.0,
            (bifc_iou - fc_iou) * 100.0
        );
    }
}

#[test]
#[ignore]
fn tune_cluster_sweep() {
    use bi_core::superpixel::{agglomerative_merge, mean_features};
    let cfg_ds = BlobDatasetConfig::default();
    let train_data = synthetic::generate_blob_dataset(424242, 50, &cfg_ds);
    let test_data = synthetic::generate_blob_dataset(999999, 20, &cfg_ds);
    let sp = SuperpixelConfig { count: 150, compactness: 10.0, iterations: 10 };
    let out = train_toy(&config(true, Regime::BiFc, 1, 30, 90), &train_data).unwrap();

    for frac in [1.0f64, 0.6, 0.2] {
        let mut ious = Vec::new();
        for (img, gt) in &test_data {
            let inst = prepare_instance(img, gt, &sp).unwrap();
            let m = inst.part.segment_count();
            let target = ((m as f64 * frac).round() as usize).max(1);
            let inst = if target < m {
                let feats = mean_features(img, &inst.part, FeatureKind::PositionColor).unwrap();
                let merged = agglomerative_merge(&inst.part, &feats, target).unwrap();
                bi_core::network::SpInstance {
                    feats_pos: mean_features(img, &merged, FeatureKind::Position).unwrap(),
                    feats_poscol: mean_features(img, &merged, FeatureKind::PositionColor).unwrap(),
                    targets: bi_core::superpixel::majority_labels(&merged, gt).unwrap().iter().map(|&t| t as usize).collect(),
                    sp_weights: merged.sizes().iter().map(|&s| s as f64).collect(),
                    part: merged,
                    gt: gt.clone(),
                }
            } else {
                inst
            };
            let pred = bi_core::network::predict_label_map(&out.net, &inst).unwrap();
            ious.push(bi_core::image::mean_iou(&pred, gt).unwrap());
        }
        let mean = ious.iter().sum::<f64>() / ious.len() as f64;
        println!("frac {frac}: meanIoU {mean:.4}");
    }
}
