//! Picks the detection threshold ratio `r` on a validation sweep whose seed
//! is disjoint from the one used for reported results.
//!
//! `cargo run --release --example calibrate_threshold -- [seed] [trials]`

use leo_jadce::detection::{detect, error_probability};
use leo_jadce::harness::{Scenario, ScenarioConfig};
use leo_jadce::vbi::{run, Problem};

fn main() {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(7777, |s| s.parse().expect("seed"));
    let trials: usize = args.next().map_or(10, |s| s.parse().expect("trials"));
    let grid: Vec<f64> = (1..=10).map(|i| 0.05 * i as f64).collect();

    let base = ScenarioConfig { master_seed: seed, ..ScenarioConfig::default() };
    let loaded = ScenarioConfig {
        devices: 500,
        activity_prob: 0.2,
        antennas: 4,
        dims: vec![20, 10],
        ..base.clone()
    };
    let scenarios = [
        ("default 0 dB", ScenarioConfig { snr_db: 0.0, ..base.clone() }),
        ("default 10 dB", base.clone()),
        ("default 20 dB", ScenarioConfig { snr_db: 20.0, ..base.clone() }),
        ("p_a=0.2 M=4 L=200 20 dB", ScenarioConfig { snr_db: 20.0, ..loaded }),
    ];

    let mut total = vec![0.0; grid.len()];
    for (name, cfg) in &scenarios {
        let sc = Scenario::new(cfg.clone(), "calibration", 0.0).expect("valid scenario");
        let mut pe = vec![0.0; grid.len()];
        for t in 0..trials {
            let inst = sc.draw_trial(t);
            let problem = Problem::new(&sc.preambles, &inst.y).expect("dimensions agree");
            let out = run(&problem, &cfg.engine_config()).expect("engine run");
            for (i, &r) in grid.iter().enumerate() {
                let det = detect(&out.state.m_x, r, cfg.tx_power).expect("valid threshold");
                pe[i] += error_probability(&det.alpha_hat, inst.alpha()).unwrap() / trials as f64;
            }
        }
        println!("{name:<26} {}", row(&pe));
        for (acc, p) in total.iter_mut().zip(&pe) {
            *acc += p / scenarios.len() as f64;
        }
    }
    println!("{:<26} {}", "mean", row(&total));
    let (best, _) = total
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    println!("r grid {:?}\nbest r = {:.2}", grid.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>(), grid[best]);
}

fn row(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ")
}
