//! Shared plumbing for the acceptance target: deterministic draws and the
//! per-criterion verdict line.

use std::f64::consts::PI;

use vaa_observer::lie_groups::{exp_so3, Rotation, Vector3};
use vaa_observer::simulator::CounterRng;

/// Sequential uniform draws from a [`CounterRng`].
pub struct Draws {
    rng: CounterRng,
    n: u64,
}

impl Draws {
    pub fn new(seed: u64) -> Self {
        Self { rng: CounterRng::new(seed), n: 0 }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = self.rng.f64_at(self.n);
        self.n += 1;
        lo + (hi - lo) * u
    }

    pub fn vector(&mut self, r: f64) -> Vector3 {
        Vector3::new(self.uniform(-r, r), self.uniform(-r, r), self.uniform(-r, r))
    }

    /// Axis uniform on the sphere (rejection from the cube), angle uniform
    /// in `[0, π)`.
    pub fn rotation(&mut self) -> Rotation {
        let axis = loop {
            let v = self.vector(1.0);
            if v.norm() > 0.1 && v.norm() <= 1.0 {
                break v.normalize();
            }
        };
        exp_so3(&(self.uniform(0.0, PI) * axis))
    }
}

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }

    pub fn line(&self, name: &str, seconds: f64) -> String {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        format!("{tag} criterion {name}: {} [{seconds:.1} s]", self.detail)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_reproducible_and_in_range() {
        let (mut a, mut b) = (Draws::new(5), Draws::new(5));
        for _ in 0..100 {
            let x = a.uniform(-2.0, 3.0);
            assert_eq!(x, b.uniform(-2.0, 3.0));
            assert!((-2.0..3.0).contains(&x));
        }
        let r = a.rotation();
        assert!(r.orthogonality_defect() < 1e-12);
    }

    #[test]
    fn verdict_line_format() {
        let line = Outcome::new(false, "x = 1".into()).line("9 demo", 0.25);
        assert_eq!(line, "FAIL criterion 9 demo: x = 1 [0.2 s]");
    }
}
