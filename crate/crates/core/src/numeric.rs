//! Small numeric helpers shared across modules.

/// Series length above which pair sums use compensated accumulation.
pub const COMPENSATION_THRESHOLD: usize = 1024;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Accumulator that is plain or compensated depending on problem size.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Accumulator {
    Plain(f64),
    Compensated(CompensatedSum),
}

impl Accumulator {
    pub(crate) fn for_len(n: usize) -> Self {
        if n > COMPENSATION_THRESHOLD {
            Accumulator::Compensated(CompensatedSum::default())
        } else {
            Accumulator::Plain(0.0)
        }
    }

    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        match self {
            Accumulator::Plain(s) => *s += x,
            Accumulator::Compensated(c) => c.add(x),
        }
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        match self {
            Accumulator::Plain(s) => *s,
            Accumulator::Compensated(c) => c.value(),
        }
    }
}

#[inline]
pub(crate) fn sign(v: f64) -> i32 {
    (v > 0.0) as i32 - (v < 0.0) as i32
}
