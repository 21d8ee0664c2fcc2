//! Trains the one-vs-one classifier on the synthetic 24-class corpus and
//! evaluates it on 240 held-out instances.
//!
//!     cargo run --release --example svm_corpus [-- OUT_DIR]

use kinsyn::perception::{build_corpus, evaluate_confusion, svm_train, DetectionParams, SvmParams};

fn main() -> kinsyn::Result<()> {
    let params = DetectionParams::default();
    let train = build_corpus(10, "train", 0, &params)?;
    let test = build_corpus(10, "test", 1, &params)?;
    let model = svm_train(&train.pairs(), &SvmParams::default(), 0)?;
    let conf = evaluate_confusion(&model, &test.pairs())?;
    println!("accuracy {:.4} over {} instances, {} rejected", conf.accuracy, test.samples.len(), conf.rejected);
    for (i, class) in conf.classes.iter().enumerate() {
        let total: usize = conf.counts[i].iter().sum();
        if conf.counts[i][i] < total {
            println!("  {class}: {}/{total}", conf.counts[i][i]);
        }
    }
    if let Some(dir) = std::env::args().nth(1) {
        let dir = std::path::Path::new(&dir);
        kinsyn::io::write_text(dir.join("confusion.csv"), &conf.to_csv())?;
        kinsyn::io::write_text(dir.join("confusion.svg"), &conf.to_svg())?;
    }
    Ok(())
}
