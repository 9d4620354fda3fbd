// Scratch harness for desk-scale tuning runs. Not part of the deliverable.
use std::time::Instant;

use facefuse::data::{prepare_dataset, synth_generate, AugmentSpec, DataOptions, SynthConfig, Task};
use facefuse::model::{build_backbone, InputShape, TaskDescriptor};
use facefuse::train::{evaluate, train, Precision, TrainConfig};

fn arg(name: &str, default: f64) -> f64 {
    std::env::args()
        .skip_while(|a| a != name)
        .nth(1)
        .and_then(|v| v.parse().ok())
        .unwrap_or(default)
}

fn main() {
    let iters = arg("--iters", 2000.0) as usize;
    let batch = arg("--batch", 50.0) as usize;
    let lr = arg("--lr", 0.01);
    let noise = arg("--noise", 0.02);
    let images = arg("--images", 50.0) as usize;
    let aug = arg("--aug", 10.0) as usize;
    let seed = arg("--seed", 7.0) as u64;
    let task = match arg("--task", 0.0) as usize {
        1 => Task::Age,
        2 => Task::Race,
        3 => Task::Gender,
        _ => Task::Id,
    };

    let t0 = Instant::now();
    let dir = std::env::temp_dir().join(format!("facefuse_tune_{noise}_{images}_{seed}"));
    let synth = SynthConfig {
        ids_per_subgroup: 1,
        images_per_id: images,
        resolution: 32,
        noise_level: noise,
        seed,
    };
    let manifest = if dir.join("manifest.jsonl").exists() {
        facefuse::data::load_manifest(&dir.join("manifest.jsonl")).unwrap()
    } else {
        synth_generate(&synth, &dir).unwrap()
    };
    eprintln!("synth: {} images in {:?}", manifest.records.len(), t0.elapsed());

    let t1 = Instant::now();
    let (train_set, test_set) = prepare_dataset::<f32>(
        &manifest,
        &AugmentSpec { factor: aug, seed },
        &DataOptions { train_fraction: 0.7, grouped: true, split_seed: seed },
    )
    .unwrap();
    eprintln!(
        "prepared: {} train / {} test in {:?}",
        train_set.len(),
        test_set.len(),
        t1.elapsed()
    );

    let td = TaskDescriptor::new(task, manifest.id_classes()).unwrap();
    let mut net = build_backbone::<f32>(
        &td,
        InputShape::Image { channels: 1, height: 32, width: 32 },
        seed + 1,
    )
    .unwrap();
    let config = TrainConfig {
        batch_size: batch,
        iterations: iters,
        lr_initial: lr,
        lr_decay_factor: 0.5,
        lr_decay_interval: None,
        eval_every: Some((iters / 8).max(1)),
        seed,
        precision: Precision::F32,
    };
    let t2 = Instant::now();
    let run = train(&mut net, &train_set, &test_set, task, &config).unwrap();
    let train_time = t2.elapsed();
    let acc = evaluate(&net, &test_set, task).unwrap();
    for row in run.metrics.iter().filter(|r| r.test_acc.is_some()) {
        eprintln!(
            "iter {:5}  lr {:.5}  loss {:.4}  train_acc {:.3}  test_acc {:.3}",
            row.iteration,
            row.lr,
            row.train_loss,
            row.train_acc,
            row.test_acc.unwrap()
        );
    }
    eprintln!(
        "task {:?}: final test accuracy {:.4} ({} iters, batch {}, lr {}) in {:?}",
        task, acc, iters, batch, lr, train_time
    );
}
