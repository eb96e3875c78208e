//! Adaptive Gauss–Kronrod (7/15) quadrature for vector-valued integrands.
//!
//! Every component shares the same nodes, so a family of integrals such as
//! `∫ hₙ(q) f(q) dq` for all `n < d` costs one Hermite recurrence per node.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// Absolute tolerance on the largest component.
    pub tolerance: f64,
    /// Panels the interval is split into before adaptation starts.
    pub initial_panels: usize,
    pub max_depth: u32,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            initial_panels: 16,
            max_depth: 30,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuadResult {
    pub values: Vec<f64>,
    /// Sum of the per-panel Gauss/Kronrod discrepancies (max over components).
    pub error_estimate: f64,
    pub evaluations: usize,
}

// Discrepancies below this multiple of the panel magnitude are noise.
const ROUNDOFF: f64 = 64.0 * f64::EPSILON;

struct Worker<'a, F> {
    f: &'a F,
    m: usize,
    tol_density: f64,
    max_depth: u32,
    evaluations: usize,
    fx: Vec<f64>,
    failed: bool,
}

impl<'a, F: Fn(f64, &mut [f64])> Worker<'a, F> {
    /// Fills the Kronrod and Gauss estimates; returns the largest `∫|f|`
    /// estimate, which sets the round-off floor.
    fn panel(&mut self, a: f64, b: f64, kron: &mut [f64], gauss: &mut [f64]) -> f64 {
        let mut abs_max = 0.0_f64;
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        kron.iter_mut().for_each(|v| *v = 0.0);
        gauss.iter_mut().for_each(|v| *v = 0.0);
        for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
            let nodes: &[f64] = if x == 0.0 { &[0.0] } else { &[-1.0, 1.0] };
            for &sgn in nodes {
                (self.f)(c + sgn * h * x, &mut self.fx);
                self.evaluations += 1;
                for i in 0..self.m {
                    abs_max = abs_max.max(self.fx[i].abs());
                    kron[i] += wk * self.fx[i];
                    if j % 2 == 1 {
                        gauss[i] += WG[j / 2] * self.fx[i];
                    }
                }
            }
        }
        for i in 0..self.m {
            kron[i] *= h;
            gauss[i] *= h;
        }
        abs_max * 2.0 * h
    }

    fn refine(&mut self, a: f64, b: f64, depth: u32, acc: &mut [f64], err: &mut f64) {
        let mut kron = vec![0.0; self.m];
        let mut gauss = vec![0.0; self.m];
        let scale = self.panel(a, b, &mut kron, &mut gauss);
        let local = kron
            .iter()
            .zip(&gauss)
            .fold(0.0_f64, |e, (k, g)| e.max((k - g).abs()));
        let allowed = (self.tol_density * (b - a)).max(ROUNDOFF * scale);
        if local <= allowed || depth >= self.max_depth {
            if local > allowed {
                self.failed = true;
            }
            for i in 0..self.m {
                acc[i] += kron[i];
            }
            *err += local;
            return;
        }
        let mid = 0.5 * (a + b);
        self.refine(a, mid, depth + 1, acc, err);
        self.refine(mid, b, depth + 1, acc, err);
    }
}

/// Integrates the `m`-component function `f` over `[a, b]`.
///
/// `f(x, out)` must fill `out[..m]`. Panels are visited left to right, so the
/// result is deterministic.
pub fn integrate<F>(f: &F, m: usize, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64, &mut [f64]),
{
    assert!(b > a, "empty integration interval");
    let mut worker = Worker {
        f,
        m,
        tol_density: opts.tolerance / (b - a),
        max_depth: opts.max_depth,
        evaluations: 0,
        fx: vec![0.0; m],
        failed: false,
    };
    let mut values = vec![0.0; m];
    let mut err = 0.0;
    let panels = opts.initial_panels.max(1);
    let width = (b - a) / panels as f64;
    for p in 0..panels {
        let lo = a + width * p as f64;
        let hi = if p + 1 == panels { b } else { lo + width };
        worker.refine(lo, hi, 0, &mut values, &mut err);
    }
    if worker.failed {
        return Err(Error::Quadrature {
            achieved: err,
            tolerance: opts.tolerance,
        });
    }
    Ok(QuadResult {
        values,
        error_estimate: err,
        evaluations: worker.evaluations,
    })
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let g = |x: f64, out: &mut [f64]| out[0] = f(x);
    let r = integrate(&g, 1, a, b, opts)?;
    Ok((r.values[0], r.error_estimate))
}
