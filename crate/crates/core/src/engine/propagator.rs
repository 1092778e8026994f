use crate::model::AmalgamatedCtmc;

/// RK4 step matrices of a generator restricted to a closed set of states.
#[derive(Clone, Debug)]
pub struct Propagator {
    support: Vec<usize>,
    /// One-step transfer `R`, `k × k` row-major.
    step: Vec<f64>,
    /// One-step occupation `h·S`, `k × k` row-major.
    occupation: Vec<f64>,
}

fn matmul(a: &[f64], b: &[f64], k: usize) -> Vec<f64> {
    let mut out = vec![0.0; k * k];
    for i in 0..k {
        for l in 0..k {
            let ail = a[i * k + l];
            if ail == 0.0 {
                continue;
            }
            let row = &b[l * k..(l + 1) * k];
            let dst = &mut out[i * k..(i + 1) * k];
            for (d, r) in dst.iter_mut().zip(row) {
                *d += ail * r;
            }
        }
    }
    out
}

impl Propagator {
    /// `support` must be sorted and closed under positive rates of `ctmc`.
    pub fn new(ctmc: &AmalgamatedCtmc, support: &[usize], h: f64) -> Self {
        let k = support.len();
        let mut a = vec![0.0; k * k];
        for (i, &s) in support.iter().enumerate() {
            for (j, &s2) in support.iter().enumerate() {
                a[i * k + j] = h * ctmc.rate(s, s2);
            }
        }
        let identity_plus = |m: Vec<f64>, c: f64| -> Vec<f64> {
            let mut m: Vec<f64> = m.into_iter().map(|v| v * c).collect();
            for i in 0..k {
                m[i * k + i] += 1.0;
            }
            m
        };
        // Horner form: T4 = I + A/4, T3 = I + A T4 / 3, T2 = I + A T3 / 2.
        let t4 = identity_plus(a.clone(), 0.25);
        let t3 = identity_plus(matmul(&a, &t4, k), 1.0 / 3.0);
        let t2 = identity_plus(matmul(&a, &t3, k), 0.5);
        let step = identity_plus(matmul(&a, &t2, k), 1.0);
        let occupation = t2.into_iter().map(|v| v * h).collect();
        Propagator {
            support: support.to_vec(),
            step,
            occupation,
        }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// One forward step `p ← p R`, adding `p · hS` to `dwell`.
    pub fn forward(&self, p: &[f64], dwell: &mut [f64]) -> Vec<f64> {
        let k = self.len();
        let mut out = vec![0.0; k];
        for i in 0..k {
            let pi = p[i];
            if pi == 0.0 {
                continue;
            }
            let r = &self.step[i * k..(i + 1) * k];
            let o = &self.occupation[i * k..(i + 1) * k];
            for j in 0..k {
                out[j] += pi * r[j];
                dwell[j] += pi * o[j];
            }
        }
        out
    }

    /// Forward step without occupation bookkeeping.
    pub fn forward_only(&self, p: &[f64]) -> Vec<f64> {
        let k = self.len();
        let mut out = vec![0.0; k];
        for i in 0..k {
            let pi = p[i];
            if pi == 0.0 {
                continue;
            }
            for (o, r) in out.iter_mut().zip(&self.step[i * k..(i + 1) * k]) {
                *o += pi * r;
            }
        }
        out
    }

    /// One backward step of `dρ/dt = -W ρ` from `t` to `t - h`: `ρ ← R ρ`.
    pub fn backward(&self, rho: &[f64]) -> Vec<f64> {
        let k = self.len();
        (0..k)
            .map(|i| self.step[i * k..(i + 1) * k].iter().zip(rho).map(|(r, v)| r * v).sum())
            .collect()
    }

    /// `(R^K, Σ_{j<K} R^j hS)` for `K` a power of two.
    pub fn power_of_two(&self, steps: usize) -> (Vec<f64>, Vec<f64>) {
        debug_assert!(steps.is_power_of_two());
        let k = self.len();
        let mut a = self.step.clone();
        let mut b = self.occupation.clone();
        let mut m = 1;
        while m < steps {
            let ab = matmul(&a, &b, k);
            for (x, y) in b.iter_mut().zip(ab) {
                *x += y;
            }
            a = matmul(&a, &a, k);
            m *= 2;
        }
        (a, b)
    }

    /// Scatters a support-indexed vector into the full joint space.
    pub fn expand(&self, local: &[f64], size: usize) -> Vec<f64> {
        let mut out = vec![0.0; size];
        for (&s, &v) in self.support.iter().zip(local) {
            out[s] = v;
        }
        out
    }

    /// Gathers the support entries of a full-space vector.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.support.iter().map(|&s| full[s]).collect()
    }
}
