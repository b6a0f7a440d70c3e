//! Scores a noisy labelling on a synthetic scan with a confusion matrix.
//!
//!     cargo run --example evaluate_miou

use rpv::augment::RngStream;
use rpv::metrics::ConfusionMatrix;
use rpv::synth::{synthetic_scan, CLASS_NAMES};

fn main() -> rpv::Result<()> {
    let scan = synthetic_scan(60_000, 3);
    let gt = scan.labels().unwrap_or_default();
    // a noisy oracle: the true label, replaced by a random class 15% of the time
    let mut rng = RngStream::new(0);
    let pred: Vec<u32> = gt
        .iter()
        .map(|&l| {
            if rng.uniform(0.0, 1.0) < 0.15 {
                rng.index(CLASS_NAMES.len()) as u32
            } else {
                l
            }
        })
        .collect();

    let mut cm = ConfusionMatrix::new(CLASS_NAMES.len());
    cm.accumulate(gt, &pred)?;
    let names: Vec<String> = CLASS_NAMES.iter().map(|s| s.to_string()).collect();
    print!("{}", cm.miou()?.to_table(Some(&names)));

    let hand = ConfusionMatrix::from_counts(2, vec![5, 5, 0, 10])?;
    println!("\n[[5,5],[0,10]] -> mIoU {:.6}", hand.miou()?.miou);
    Ok(())
}
