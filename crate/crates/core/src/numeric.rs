//! Summation and comparison helpers shared by the functionals.

/// Relative tolerance of every inequality check.
pub const TOLERANCE: f64 = 1e-9;

/// Neumaier compensated accumulator.
///
/// Terms must be fed in a fixed order (ascending point index everywhere in
/// this crate) for results to be bit-reproducible.
#[derive(Clone, Copy, Debug, Default)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut acc = Accumulator::new();
    for t in terms {
        acc.add(t);
    }
    acc.value()
}

/// `|a - b| <= tol * max(1, |a|, |b|)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

/// `|a - b| <= tol * max(|a|, |b|)`, with exact equality required at zero.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}
