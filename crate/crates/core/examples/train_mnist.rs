//! Train the CNN on MNIST and report per-epoch progress.
//!
//! cargo run --release --example train_mnist -- [epochs] [fraction]

mod support;

use mlm_core::classifier::{train, write_checkpoint, TrainConfig};
use mlm_core::data::Split;

fn main() {
    let mut args = std::env::args().skip(1);
    let epochs = args.next().map_or(2, |a| a.parse().expect("epochs"));
    let fraction: f64 = args.next().map_or(0.25, |a| a.parse().expect("fraction"));
    let train_set = support::load(Split::Train).subsample(fraction, 0).unwrap();
    let test = support::load(Split::Test);
    let cfg = TrainConfig { epochs, ..TrainConfig::default() };
    println!("{} training images, lr {}, batch {}", train_set.len(), cfg.learning_rate, cfg.batch_size);
    let t = std::time::Instant::now();
    let out = train(&train_set, &cfg, Some(&test)).unwrap();
    for e in &out.epochs {
        println!("epoch {:>2}  loss {:.4}  test accuracy {:.4}", e.epoch, e.mean_loss, e.eval_accuracy.unwrap());
    }
    let path = support::scratch_dir().join("train_mnist.ckpt");
    write_checkpoint(&out.params, &path).unwrap();
    println!("{:.1}s; checkpoint at {}", t.elapsed().as_secs_f64(), path.display());
}
