//! Ready-made benchmark configurations.

use std::f64::consts::PI;
use std::path::PathBuf;

use crate::config::{AutoTag, EpsC, NoiseConfig, RunConfig, SimulationConfig, SpecConfig, SynthesisConfig};
use crate::dynamics::{
    linspace, HeatingParams, ModelConfig, MultiplicativeParams, PendulumParams, Unicycle2dParams, Unicycle3dParams,
};
use crate::error::{Error, Result};
use crate::geometry::{AxisBox, Partition, PartitionConfig, RegionSpec};
use crate::samples::NoiseDistribution;
use crate::synthesis::Objective;

pub const NAMES: [&str; 7] = [
    "pendulum-phi1",
    "pendulum-torque-limited",
    "unicycle3d",
    "unicycle3d-difficult",
    "multiplicative",
    "unicycle2d-phi2",
    "heating-phi3",
];

pub fn preset(name: &str) -> Result<RunConfig> {
    match name {
        "pendulum-phi1" => Ok(pendulum(false)),
        "pendulum-torque-limited" => Ok(pendulum(true)),
        "unicycle3d" => Ok(unicycle3d(false)),
        "unicycle3d-difficult" => Ok(unicycle3d(true)),
        "multiplicative" => Ok(multiplicative()),
        "unicycle2d-phi2" => Ok(unicycle2d_phi2(60)),
        "heating-phi3" => Ok(heating_phi3(12, 3)),
        _ => Err(Error::Config(format!("unknown preset `{name}`; available: {}", NAMES.join(", ")))),
    }
}

fn region(lower: Vec<f64>, upper: Vec<f64>, label: &str) -> RegionSpec {
    RegionSpec { bbox: AxisBox { lower, upper }, labels: vec![label.to_string()] }
}

fn noise(distribution: NoiseDistribution, n: usize, clusters: usize, eps_c: EpsC) -> NoiseConfig {
    NoiseConfig { samples: None, distribution, n_samples: n, seed: 0, eps_c, beta_c: 0.001, alpha: 0.01, clusters }
}

fn spec(dfa: &str) -> SpecConfig {
    SpecConfig { dfa: dfa.into(), horizon: None, objective: Objective::Reach }
}

const AUTO: EpsC = EpsC::Auto(AutoTag::Auto);

/// Goal: angle within π/5 of upright, rate within 0.6.
pub fn pendulum_goal(rate: f64) -> Vec<RegionSpec> {
    let w = PI / 5.0;
    vec![
        region(vec![-PI, -rate], vec![-PI + w, rate], "goal"),
        region(vec![PI - w, -rate], vec![PI, rate], "goal"),
    ]
}

pub fn pendulum_partition(cells: usize, max_rate: f64) -> PartitionConfig {
    PartitionConfig {
        safe_box: AxisBox { lower: vec![-PI, -max_rate], upper: vec![PI, max_rate] },
        cells_per_dim: vec![cells, cells],
        coarse_block_shape: vec![2, 2],
        regions: pendulum_goal(0.6),
        periodic: vec![true, false],
    }
}

fn pendulum(torque_limited: bool) -> RunConfig {
    let (dt, drag, max_rate, torque, cells, dist, n, clusters, eps_c) = if torque_limited {
        (0.3, 0.2, 4.0, 0.415, 200, NoiseDistribution::gaussian(vec![0.0], vec![0.25]), 100_000, 175, EpsC::Value(0.001))
    } else {
        let d = NoiseDistribution::truncated_box(vec![0.0], vec![0.2], vec![-1.0], vec![1.0]);
        (0.25, 0.3, 3.0, 0.8, 100, d, 100_000, 47, AUTO)
    };
    RunConfig {
        name: if torque_limited { "pendulum-torque-limited" } else { "pendulum-phi1" }.into(),
        model: ModelConfig::Pendulum(PendulumParams {
            dt,
            drag,
            length: 1.0,
            max_rate,
            torques: linspace(-torque, torque, 5),
            w_cap: 2.0,
        }),
        partition: pendulum_partition(cells, max_rate),
        noise: noise(dist, n, clusters, eps_c),
        spec: spec("phi1"),
        synthesis: SynthesisConfig::default(),
        simulation: SimulationConfig { cells: 50, episodes: 1000, max_steps: None, seed: 1, record: 2 },
        output: PathBuf::from(if torque_limited { "out/pendulum-torque-limited" } else { "out/pendulum-phi1" }),
    }
}

fn unicycle3d(difficult: bool) -> RunConfig {
    let cells = if difficult { 42 } else { 39 };
    let bare = Partition::build_grid(
        AxisBox { lower: vec![0.0, 0.0, -PI], upper: vec![1.0, 1.0, PI] },
        &[cells; 3],
        &[],
        &[3, 3, 3],
        &[false, false, true],
    )
    .expect("grid without regions");
    let goal_edge = if difficult { 0.256 } else { 0.359 };
    // regions off the grid lines are snapped: goal shrinks, obstacle grows
    let goal = bare.snap_box(&AxisBox { lower: vec![0.0, 0.0, -PI], upper: vec![goal_edge, goal_edge, PI] }, true);
    let half = 0.154 / 2.0;
    let obstacle = bare.snap_box(&AxisBox { lower: vec![0.5 - half, 0.5 - half, -PI], upper: vec![0.5 + half, 0.5 + half, PI] }, false);
    let dist = if difficult {
        NoiseDistribution::gaussian(vec![0.4, 0.0], vec![0.2, 0.2])
    } else {
        NoiseDistribution::truncated_ball(vec![0.4, 0.0], vec![0.067, 0.067], 1.0)
    };
    RunConfig {
        name: if difficult { "unicycle3d-difficult" } else { "unicycle3d" }.into(),
        model: ModelConfig::Unicycle3d(Unicycle3dParams {
            dt: 0.5,
            drag: [0.1, 0.05],
            speeds: if difficult { vec![0.15, 0.3] } else { vec![0.21, 0.3] },
            turn_rates: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            w_cap: 2.0,
        }),
        partition: PartitionConfig {
            safe_box: bare.safe_box().clone(),
            cells_per_dim: vec![cells; 3],
            coarse_block_shape: vec![3, 3, 3],
            regions: vec![
                RegionSpec { bbox: goal, labels: vec!["goal".into()] },
                RegionSpec { bbox: obstacle, labels: vec!["unsafe".into()] },
            ],
            periodic: vec![false, false, true],
        },
        noise: noise(dist, if difficult { 1_000_000 } else { 100_000 }, if difficult { 295 } else { 325 }, if difficult { EpsC::Value(0.01) } else { AUTO }),
        spec: spec("phi1"),
        synthesis: SynthesisConfig::default(),
        simulation: SimulationConfig { cells: 20, episodes: 200, max_steps: None, seed: 1, record: 2 },
        output: PathBuf::from(if difficult { "out/unicycle3d-difficult" } else { "out/unicycle3d" }),
    }
}

fn multiplicative() -> RunConfig {
    RunConfig {
        name: "multiplicative".into(),
        model: ModelConfig::Multiplicative(MultiplicativeParams {
            a: vec![vec![0.9, 0.2], vec![-0.2, 0.9]],
            inputs: vec![vec![0.0, 0.0]],
            w_cap: 1.0,
            x_cap: 1.0,
        }),
        partition: PartitionConfig {
            safe_box: AxisBox { lower: vec![-1.0, -1.0], upper: vec![1.0, 1.0] },
            cells_per_dim: vec![60, 60],
            coarse_block_shape: vec![3, 3],
            regions: vec![region(vec![-0.2, -0.2], vec![0.2, 0.2], "goal")],
            periodic: vec![false, false],
        },
        noise: noise(NoiseDistribution::gaussian(vec![0.0, 0.0], vec![0.05, 0.05]), 46_800, 257, AUTO),
        spec: spec("phi1"),
        synthesis: SynthesisConfig::default(),
        simulation: SimulationConfig { cells: 20, episodes: 200, max_steps: None, seed: 1, record: 2 },
        output: PathBuf::from("out/multiplicative"),
    }
}

/// Water, carpet and charger layout on the unit square; every edge is a
/// multiple of 0.05 so it falls on grid lines for 20, 40 or 60 cells.
pub fn phi2_regions() -> Vec<RegionSpec> {
    vec![
        region(vec![0.4, 0.3], vec![0.6, 0.6], "unsafe"),
        region(vec![0.1, 0.65], vec![0.3, 0.85], "water"),
        region(vec![0.65, 0.1], vec![0.85, 0.25], "carpet"),
        region(vec![0.75, 0.75], vec![0.95, 0.95], "charge"),
    ]
}

pub fn unicycle2d_model() -> ModelConfig {
    ModelConfig::Unicycle2d(Unicycle2dParams {
        dt: 0.5,
        drag: 0.2,
        speed: 0.3,
        headings: Unicycle2dParams::circle_headings(8),
        w_cap: 2.0,
    })
}

pub fn unicycle2d_noise() -> NoiseDistribution {
    NoiseDistribution::truncated_box(vec![0.4], vec![0.067], vec![-0.6], vec![1.4])
}

pub fn unicycle2d_phi2(cells: usize) -> RunConfig {
    RunConfig {
        name: "unicycle2d-phi2".into(),
        model: unicycle2d_model(),
        partition: PartitionConfig {
            safe_box: AxisBox { lower: vec![0.0, 0.0], upper: vec![1.0, 1.0] },
            cells_per_dim: vec![cells, cells],
            coarse_block_shape: vec![2, 2],
            regions: phi2_regions(),
            periodic: vec![false, false],
        },
        noise: noise(unicycle2d_noise(), 10_000, 37, AUTO),
        spec: spec("phi2"),
        synthesis: SynthesisConfig::default(),
        simulation: SimulationConfig { cells: 20, episodes: 200, max_steps: None, seed: 1, record: 2 },
        output: PathBuf::from("out/unicycle2d-phi2"),
    }
}

pub fn heating_model() -> ModelConfig {
    ModelConfig::Heating4(HeatingParams {
        a: vec![
            vec![0.901, 0.0625, 0.0, 0.0],
            vec![0.0625, 0.839, 0.0625, 0.0],
            vec![0.0, 0.0625, 0.839, 0.0625],
            vec![0.0, 0.0, 0.0625, 0.901],
        ],
        b: vec![0.219; 4],
        gain: 0.7,
        w_cap: 0.05,
        x_cap: 30.0,
    })
}

/// Fifteen-step safety on `[18.5, 23.5]^4` as a `Stay` objective over the
/// two-state safety automaton.
pub fn heating_phi3(cells: usize, block: usize) -> RunConfig {
    RunConfig {
        name: "heating-phi3".into(),
        model: heating_model(),
        partition: PartitionConfig {
            safe_box: AxisBox { lower: vec![18.5; 4], upper: vec![23.5; 4] },
            cells_per_dim: vec![cells; 4],
            coarse_block_shape: vec![block; 4],
            regions: vec![],
            periodic: vec![false; 4],
        },
        noise: noise(NoiseDistribution::gaussian(vec![0.0; 4], vec![1.11e-5f64.sqrt(); 4]), 50_000, 620, EpsC::Value(0.001)),
        spec: SpecConfig { dfa: "safety".into(), horizon: Some(15), objective: Objective::Stay },
        synthesis: SynthesisConfig::default(),
        simulation: SimulationConfig { cells: 20, episodes: 200, max_steps: Some(15), seed: 1, record: 0 },
        output: PathBuf::from("out/heating-phi3"),
    }
}
