use hhoi::diffusion::*;
use std::time::Instant;

fn main() {
    let mut rng = hhoi::rng::Rng::seed_from(271);
    let cond = ConditionEmbedding::zeros(COND_DIM);
    let examples: Vec<ScoreExample> = (0..10_000)
        .map(|_| {
            let mean = if rng.uniform() < 0.5 { -2.0 } else { 2.0 };
            ScoreExample::new(vec![mean + 0.3 * rng.normal()], cond.clone())
        })
        .collect();
    let config = ScoreNetConfig::toy(Mode::Hoi).with_layout(HeadLayout::flat(1));
    for threads in [1, 2] {
        let cfg = ScoreTrainConfig { epochs: 5, batch_size: 500, seed: 13, threads };
        let t0 = Instant::now();
        let _ = train_score(&examples, config.clone(), &cfg).unwrap();
        let el = t0.elapsed().as_secs_f64();
        println!("threads {threads}: {el:.2}s for 5 epochs -> {:.0}s for 300", el * 60.0);
    }
}
