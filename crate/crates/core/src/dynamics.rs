//! System models `x' = f(x, u, w)` and reach-set over-approximation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::AxisBox;
use crate::interval::Interval;

/// Relative padding applied to every reach box.
const REACH_PAD: f64 = 1e-12;

pub trait Dynamics: Send + Sync {
    fn name(&self) -> &str;
    fn state_dim(&self) -> usize;
    fn noise_dim(&self) -> usize;
    fn controls(&self) -> &[Vec<f64>];
    fn step(&self, x: &[f64], a: usize, w: &[f64], out: &mut [f64]);
    /// Lipschitz constant in the state (Euclidean norms).
    fn lipschitz_x(&self, a: usize) -> f64;
    /// Lipschitz constant in the disturbance (Euclidean norms).
    fn lipschitz_w(&self, a: usize) -> f64;
    /// Sound image of a state box and a disturbance box, if the model has one.
    fn reach_exact(&self, _region: &AxisBox, _a: usize, _noise: &[Interval]) -> Option<AxisBox> {
        None
    }
    fn n_controls(&self) -> usize {
        self.controls().len()
    }
}

/// Box containing `f(x, a, w)` for every `x` in `region` and every `w`
/// within Euclidean distance `radius` of `center`.
pub fn reach_overapprox(model: &dyn Dynamics, region: &AxisBox, a: usize, center: &[f64], radius: f64) -> AxisBox {
    let noise: Vec<Interval> = center.iter().map(|c| Interval::new(c - radius, c + radius)).collect();
    if let Some(b) = model.reach_exact(region, a, &noise) {
        return b;
    }
    lipschitz_reach(model, region, a, center, radius)
}

pub fn lipschitz_reach(model: &dyn Dynamics, region: &AxisBox, a: usize, center: &[f64], radius: f64) -> AxisBox {
    let c = region.center();
    let mut y = vec![0.0; model.state_dim()];
    model.step(&c, a, center, &mut y);
    let hw = region.half_widths().iter().map(|h| h * h).sum::<f64>().sqrt();
    let r = model.lipschitz_x(a) * hw + model.lipschitz_w(a) * radius;
    let r = r + REACH_PAD * (1.0 + y.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    AxisBox::around(&y, r)
}

fn boxed(iv: Vec<Interval>) -> AxisBox {
    let iv: Vec<Interval> = iv.into_iter().map(|i| i.pad(REACH_PAD)).collect();
    AxisBox { lower: iv.iter().map(|i| i.lo).collect(), upper: iv.iter().map(|i| i.hi).collect() }
}

fn intervals(b: &AxisBox) -> Vec<Interval> {
    b.lower.iter().zip(&b.upper).map(|(l, u)| Interval::new(*l, *u)).collect()
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn frobenius(m: &[Vec<f64>]) -> f64 {
    m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

fn signed_square(v: f64) -> f64 {
    v * v.abs()
}

/// Damped pendulum with quadratic wind drag. State `(angle, rate)`, angle 0
/// hanging down and periodic on `[-π, π)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PendulumParams {
    pub dt: f64,
    pub drag: f64,
    pub length: f64,
    pub max_rate: f64,
    pub torques: Vec<f64>,
    /// Disturbance magnitude assumed by the Lipschitz constants.
    #[serde(default = "default_w_cap")]
    pub w_cap: f64,
}

fn default_w_cap() -> f64 {
    2.0
}

#[derive(Debug, Clone)]
pub struct Pendulum {
    p: PendulumParams,
    controls: Vec<Vec<f64>>,
}

impl Pendulum {
    pub fn new(p: PendulumParams) -> Self {
        let controls = p.torques.iter().map(|u| vec![*u]).collect();
        Pendulum { p, controls }
    }
}

impl Dynamics for Pendulum {
    fn name(&self) -> &str {
        "pendulum"
    }
    fn state_dim(&self) -> usize {
        2
    }
    fn noise_dim(&self) -> usize {
        1
    }
    fn controls(&self) -> &[Vec<f64>] {
        &self.controls
    }
    fn step(&self, x: &[f64], a: usize, w: &[f64], out: &mut [f64]) {
        let p = &self.p;
        let v = p.length * x[1] - w[0] * x[0].cos();
        out[0] = x[0] + p.dt * x[1];
        out[1] = x[1] + p.dt * (-p.drag * signed_square(v) - x[0].sin() + self.controls[a][0]);
    }
    fn lipschitz_x(&self, _a: usize) -> f64 {
        let p = &self.p;
        let vmax = p.length * p.max_rate + p.w_cap;
        let j = vec![
            vec![1.0, p.dt],
            vec![p.dt * (2.0 * p.drag * vmax * p.w_cap + 1.0), 1.0 + 2.0 * p.dt * p.drag * vmax * p.length],
        ];
        frobenius(&j)
    }
    fn lipschitz_w(&self, _a: usize) -> f64 {
        let p = &self.p;
        2.0 * p.dt * p.drag * (p.length * p.max_rate + p.w_cap)
    }
    fn reach_exact(&self, r: &AxisBox, a: usize, noise: &[Interval]) -> Option<AxisBox> {
        let p = &self.p;
        let x = intervals(r);
        let (th, om) = (x[0], x[1]);
        let v = om.scale(p.length) - noise[0] * th.cos();
        let drag = v.map_monotone(signed_square).scale(-p.drag);
        let acc = drag - th.sin();
        let om2 = om + acc.shift(self.controls[a][0]).scale(p.dt);
        let th2 = th + om.scale(p.dt);
        Some(boxed(vec![th2, om2]))
    }
}

/// Kinematic unicycle with friction on the speed. State `(x, y, heading)`,
/// controls `(speed, turn rate)`, disturbance `(friction, heading slip)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Unicycle3dParams {
    pub dt: f64,
    pub drag: [f64; 2],
    pub speeds: Vec<f64>,
    pub turn_rates: Vec<f64>,
    #[serde(default = "default_w_cap")]
    pub w_cap: f64,
}

#[derive(Debug, Clone)]
pub struct Unicycle3d {
    p: Unicycle3dParams,
    controls: Vec<Vec<f64>>,
}

impl Unicycle3d {
    pub fn new(p: Unicycle3dParams) -> Self {
        let controls = p.speeds.iter().flat_map(|v| p.turn_rates.iter().map(move |r| vec![*v, *r])).collect();
        Unicycle3d { p, controls }
    }
}

impl Dynamics for Unicycle3d {
    fn name(&self) -> &str {
        "unicycle3d"
    }
    fn state_dim(&self) -> usize {
        3
    }
    fn noise_dim(&self) -> usize {
        2
    }
    fn controls(&self) -> &[Vec<f64>] {
        &self.controls
    }
    fn step(&self, x: &[f64], a: usize, w: &[f64], out: &mut [f64]) {
        let p = &self.p;
        let u = &self.controls[a];
        let v = p.dt * (u[0] - p.drag[0] * w[0]);
        out[0] = x[0] + v * x[2].cos();
        out[1] = x[1] + v * x[2].sin();
        out[2] = x[2] + p.dt * u[1] + p.drag[1] * w[1];
    }
    fn lipschitz_x(&self, a: usize) -> f64 {
        let v = self.p.dt * (self.controls[a][0].abs() + self.p.drag[0] * self.p.w_cap);
        (3.0 + v * v).sqrt()
    }
    fn lipschitz_w(&self, _a: usize) -> f64 {
        let p = &self.p;
        ((p.dt * p.drag[0]).powi(2) + p.drag[1].powi(2)).sqrt()
    }
    fn reach_exact(&self, r: &AxisBox, a: usize, noise: &[Interval]) -> Option<AxisBox> {
        let p = &self.p;
        let u = &self.controls[a];
        let x = intervals(r);
        let v = noise[0].scale(-p.drag[0]).shift(u[0]).scale(p.dt);
        Some(boxed(vec![
            x[0] + v * x[2].cos(),
            x[1] + v * x[2].sin(),
            x[2].shift(p.dt * u[1]) + noise[1].scale(p.drag[1]),
        ]))
    }
}

/// Planar unicycle at fixed speed with the heading as the control.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Unicycle2dParams {
    pub dt: f64,
    pub drag: f64,
    pub speed: f64,
    pub headings: Vec<f64>,
    #[serde(default = "default_w_cap")]
    pub w_cap: f64,
}

impl Unicycle2dParams {
    /// `n` headings evenly spaced on the circle starting at -π.
    pub fn circle_headings(n: usize) -> Vec<f64> {
        (0..n).map(|k| -PI + 2.0 * PI * k as f64 / n as f64).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Unicycle2d {
    p: Unicycle2dParams,
    controls: Vec<Vec<f64>>,
}

impl Unicycle2d {
    pub fn new(p: Unicycle2dParams) -> Self {
        let controls = p.headings.iter().map(|h| vec![*h]).collect();
        Unicycle2d { p, controls }
    }
}

impl Dynamics for Unicycle2d {
    fn name(&self) -> &str {
        "unicycle2d"
    }
    fn state_dim(&self) -> usize {
        2
    }
    fn noise_dim(&self) -> usize {
        1
    }
    fn controls(&self) -> &[Vec<f64>] {
        &self.controls
    }
    fn step(&self, x: &[f64], a: usize, w: &[f64], out: &mut [f64]) {
        let h = self.controls[a][0];
        let v = self.p.dt * (self.p.speed - self.p.drag * w[0]);
        out[0] = x[0] + v * h.cos();
        out[1] = x[1] + v * h.sin();
    }
    fn lipschitz_x(&self, _a: usize) -> f64 {
        1.0
    }
    fn lipschitz_w(&self, _a: usize) -> f64 {
        self.p.dt * self.p.drag
    }
    fn reach_exact(&self, r: &AxisBox, a: usize, noise: &[Interval]) -> Option<AxisBox> {
        let h = self.controls[a][0];
        let x = intervals(r);
        let v = noise[0].scale(-self.p.drag).shift(self.p.speed).scale(self.p.dt);
        Some(boxed(vec![x[0] + v.scale(h.cos()), x[1] + v.scale(h.sin())]))
    }
}

/// Rooms coupled through `A` with multiplicative noise on each room:
/// `x' = diag(1 + w) A x + b + gain * u`, radiators on or off.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeatingParams {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub gain: f64,
    #[serde(default = "default_w_cap_small")]
    pub w_cap: f64,
    #[serde(default = "default_x_cap")]
    pub x_cap: f64,
}

fn default_w_cap_small() -> f64 {
    0.05
}

fn default_x_cap() -> f64 {
    30.0
}

#[derive(Debug, Clone)]
pub struct Heating {
    p: HeatingParams,
    controls: Vec<Vec<f64>>,
}

impl Heating {
    pub fn new(p: HeatingParams) -> Self {
        let n = p.b.len();
        let controls = (0..1usize << n).map(|m| (0..n).map(|i| ((m >> (n - 1 - i)) & 1) as f64).collect()).collect();
        Heating { p, controls }
    }
}

fn mat_interval(a: &[Vec<f64>], x: &[Interval]) -> Vec<Interval> {
    a.iter()
        .map(|row| row.iter().zip(x).fold(Interval::point(0.0), |acc, (c, xi)| acc + xi.scale(*c)))
        .collect()
}

impl Dynamics for Heating {
    fn name(&self) -> &str {
        "heating4"
    }
    fn state_dim(&self) -> usize {
        self.p.b.len()
    }
    fn noise_dim(&self) -> usize {
        self.p.b.len()
    }
    fn controls(&self) -> &[Vec<f64>] {
        &self.controls
    }
    fn step(&self, x: &[f64], a: usize, w: &[f64], out: &mut [f64]) {
        let p = &self.p;
        for i in 0..out.len() {
            let ax: f64 = p.a[i].iter().zip(x).map(|(c, v)| c * v).sum();
            out[i] = (1.0 + w[i]) * ax + p.b[i] + p.gain * self.controls[a][i];
        }
    }
    fn lipschitz_x(&self, _a: usize) -> f64 {
        (1.0 + self.p.w_cap) * frobenius(&self.p.a)
    }
    fn lipschitz_w(&self, _a: usize) -> f64 {
        let row_max = self.p.a.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        row_max * self.p.x_cap
    }
    fn reach_exact(&self, r: &AxisBox, a: usize, noise: &[Interval]) -> Option<AxisBox> {
        let p = &self.p;
        let ax = mat_interval(&p.a, &intervals(r));
        let out = (0..ax.len())
            .map(|i| (noise[i].shift(1.0) * ax[i]).shift(p.b[i] + p.gain * self.controls[a][i]))
            .collect();
        Some(boxed(out))
    }
}

/// Planar linear map with multiplicative noise on each coordinate:
/// `x' = diag(1 + w) A x + u`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiplicativeParams {
    pub a: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    #[serde(default = "default_w_cap")]
    pub w_cap: f64,
    #[serde(default = "default_x_cap")]
    pub x_cap: f64,
}

#[derive(Debug, Clone)]
pub struct Multiplicative {
    p: MultiplicativeParams,
}

impl Multiplicative {
    pub fn new(p: MultiplicativeParams) -> Self {
        Multiplicative { p }
    }
}

impl Dynamics for Multiplicative {
    fn name(&self) -> &str {
        "multiplicative"
    }
    fn state_dim(&self) -> usize {
        self.p.a.len()
    }
    fn noise_dim(&self) -> usize {
        self.p.a.len()
    }
    fn controls(&self) -> &[Vec<f64>] {
        &self.p.inputs
    }
    fn step(&self, x: &[f64], a: usize, w: &[f64], out: &mut [f64]) {
        for i in 0..out.len() {
            let ax: f64 = self.p.a[i].iter().zip(x).map(|(c, v)| c * v).sum();
            out[i] = (1.0 + w[i]) * ax + self.p.inputs[a][i];
        }
    }
    fn lipschitz_x(&self, _a: usize) -> f64 {
        (1.0 + self.p.w_cap) * frobenius(&self.p.a)
    }
    fn lipschitz_w(&self, _a: usize) -> f64 {
        frobenius(&self.p.a) * self.p.x_cap
    }
    fn reach_exact(&self, r: &AxisBox, a: usize, noise: &[Interval]) -> Option<AxisBox> {
        let ax = mat_interval(&self.p.a, &intervals(r));
        let out = (0..ax.len()).map(|i| (noise[i].shift(1.0) * ax[i]).shift(self.p.inputs[a][i])).collect();
        Some(boxed(out))
    }
}

/// `x' = A x + B u + c + G w` with explicit matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AffineParams {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    #[serde(default)]
    pub c: Vec<f64>,
    /// Disturbance input matrix; identity when omitted.
    #[serde(default)]
    pub g: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Affine {
    p: AffineParams,
}

impl Affine {
    pub fn new(mut p: AffineParams) -> Self {
        let n = p.a.len();
        if p.c.is_empty() {
            p.c = vec![0.0; n];
        }
        if p.g.is_empty() {
            p.g = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        }
        Affine { p }
    }

    /// Scalar `x' = a x + c + u + w`.
    pub fn scalar(a: f64, c: f64, inputs: &[f64]) -> Self {
        Affine::new(AffineParams {
            a: vec![vec![a]],
            b: vec![vec![1.0]],
            c: vec![c],
            g: vec![vec![1.0]],
            inputs: inputs.iter().map(|u| vec![*u]).collect(),
        })
    }
}

impl Dynamics for Affine {
    fn name(&self) -> &str {
        "custom"
    }
    fn state_dim(&self) -> usize {
        self.p.a.len()
    }
    fn noise_dim(&self) -> usize {
        self.p.g.first().map(|r| r.len()).unwrap_or(0)
    }
    fn controls(&self) -> &[Vec<f64>] {
        &self.p.inputs
    }
    fn step(&self, x: &[f64], a: usize, w: &[f64], out: &mut [f64]) {
        let p = &self.p;
        for i in 0..out.len() {
            out[i] = p.c[i]
                + p.a[i].iter().zip(x).map(|(m, v)| m * v).sum::<f64>()
                + p.b[i].iter().zip(&p.inputs[a]).map(|(m, v)| m * v).sum::<f64>()
                + p.g[i].iter().zip(w).map(|(m, v)| m * v).sum::<f64>();
        }
    }
    fn lipschitz_x(&self, _a: usize) -> f64 {
        frobenius(&self.p.a)
    }
    fn lipschitz_w(&self, _a: usize) -> f64 {
        frobenius(&self.p.g)
    }
    fn reach_exact(&self, r: &AxisBox, a: usize, noise: &[Interval]) -> Option<AxisBox> {
        let p = &self.p;
        let ax = mat_interval(&p.a, &intervals(r));
        let gw = mat_interval(&p.g, noise);
        let out = (0..ax.len())
            .map(|i| {
                let bu: f64 = p.b[i].iter().zip(&p.inputs[a]).map(|(m, v)| m * v).sum();
                (ax[i] + gw[i]).shift(p.c[i] + bu)
            })
            .collect();
        Some(boxed(out))
    }
}

/// Serializable model choice.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelConfig {
    Pendulum(PendulumParams),
    #[serde(rename = "unicycle2d")]
    Unicycle2d(Unicycle2dParams),
    #[serde(rename = "unicycle3d")]
    Unicycle3d(Unicycle3dParams),
    Multiplicative(MultiplicativeParams),
    #[serde(rename = "heating4")]
    Heating4(HeatingParams),
    Custom(AffineParams),
}

impl ModelConfig {
    pub fn build(&self) -> Box<dyn Dynamics> {
        match self {
            ModelConfig::Pendulum(p) => Box::new(Pendulum::new(p.clone())),
            ModelConfig::Unicycle2d(p) => Box::new(Unicycle2d::new(p.clone())),
            ModelConfig::Unicycle3d(p) => Box::new(Unicycle3d::new(p.clone())),
            ModelConfig::Multiplicative(p) => Box::new(Multiplicative::new(p.clone())),
            ModelConfig::Heating4(p) => Box::new(Heating::new(p.clone())),
            ModelConfig::Custom(p) => Box::new(Affine::new(p.clone())),
        }
    }
}
