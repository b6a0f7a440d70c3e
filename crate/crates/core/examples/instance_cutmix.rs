//! Builds a rare-class instance bank from one scan and pastes instances into
//! another.
//!
//!     cargo run --example instance_cutmix [count]

use std::collections::BTreeSet;

use rpv::augment::{extract_instances, instance_cutmix, CutMixConfig, ExtractConfig, InstanceBank, RngStream};
use rpv::synth::{synthetic_scan, BICYCLE, CAR, CLASS_NAMES, ROAD};

fn main() -> rpv::Result<()> {
    let count = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);

    let source = synthetic_scan(40_000, 10);
    let mut bank = InstanceBank::new(BTreeSet::from([CAR, BICYCLE]), BTreeSet::from([ROAD]));
    bank.extend(extract_instances(
        &source,
        bank.rare_classes(),
        &ExtractConfig::default(),
    )?)?;
    for class in bank.classes() {
        let sizes: Vec<usize> = bank.instances(class).iter().map(|i| i.len()).collect();
        println!(
            "bank: {} x {} (points {:?})",
            sizes.len(),
            CLASS_NAMES[class as usize],
            sizes
        );
    }

    let scene = synthetic_scan(40_000, 11);
    let cfg = CutMixConfig {
        count,
        ..CutMixConfig::default()
    };
    let (mixed, summary) = instance_cutmix(&scene, &bank, &cfg, &mut RngStream::for_frame(0, 0))?;
    println!(
        "pasted {} of {} instances ({} skipped), {} -> {} points",
        summary.pasted,
        summary.requested,
        summary.skipped,
        scene.len(),
        mixed.len()
    );
    let labels = mixed.labels().unwrap_or_default();
    for class in [CAR, BICYCLE] {
        let before = scene
            .labels()
            .unwrap_or_default()
            .iter()
            .filter(|&&l| l == class)
            .count();
        let after = labels.iter().filter(|&&l| l == class).count();
        println!("{:<8} points {before} -> {after}", CLASS_NAMES[class as usize]);
    }
    Ok(())
}
