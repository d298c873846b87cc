//! Closed real intervals with the handful of operations the reach hooks need.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn scale(self, k: f64) -> Self {
        if k >= 0.0 {
            Interval::new(self.lo * k, self.hi * k)
        } else {
            Interval::new(self.hi * k, self.lo * k)
        }
    }

    pub fn shift(self, c: f64) -> Self {
        Interval::new(self.lo + c, self.hi + c)
    }

    /// Image under a non-decreasing function.
    pub fn map_monotone(self, f: impl Fn(f64) -> f64) -> Self {
        Interval::new(f(self.lo), f(self.hi))
    }

    pub fn sin(self) -> Self {
        if self.width() >= TAU {
            return Interval::new(-1.0, 1.0);
        }
        let a = self.lo.sin();
        let b = self.hi.sin();
        let mut lo = a.min(b);
        let mut hi = a.max(b);
        if contains_periodic(self, FRAC_PI_2) {
            hi = 1.0;
        }
        if contains_periodic(self, -FRAC_PI_2) {
            lo = -1.0;
        }
        Interval::new(lo, hi)
    }

    pub fn cos(self) -> Self {
        self.shift(FRAC_PI_2).sin()
    }

    /// Widen by an absolute plus relative margin to absorb rounding.
    pub fn pad(self, abs: f64) -> Self {
        let m = abs * (1.0 + self.lo.abs().max(self.hi.abs()));
        Interval::new(self.lo - m, self.hi + m)
    }
}

/// Whether `iv` contains `phase + 2kπ` for some integer k.
fn contains_periodic(iv: Interval, phase: f64) -> bool {
    let k = ((iv.lo - phase) / TAU).ceil();
    let t = phase + k * TAU;
    t <= iv.hi || (t - TAU >= iv.lo && t - TAU <= iv.hi)
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval::new(self.lo + o.lo, self.hi + o.hi)
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        Interval::new(self.lo - o.hi, self.hi - o.lo)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval::new(-self.hi, -self.lo)
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::new(lo, hi)
    }
}

pub fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y >= PI {
        y - TAU
    } else {
        y
    }
}
