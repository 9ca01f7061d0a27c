//! One-dimensional quadrature: Gauss rules built by Golub-Welsch, an adaptive
//! Gauss-Kronrod integrator, and a power-weighted rule for integrands with an
//! algebraic endpoint singularity `(x - a)^alpha`.

use std::collections::BinaryHeap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::special::ln_gamma;

/// Nodes and weights of a Gauss rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Gauss-Legendre rule with `n` nodes.
    pub fn legendre(n: usize) -> Self {
        Self::jacobi(n, 0.0, 0.0)
    }

    /// Gauss-Jacobi rule with `n` nodes for the weight `(1 - x)^a (1 + x)^b`.
    pub fn jacobi(n: usize, a: f64, b: f64) -> Self {
        assert!(n >= 1, "a Gauss rule needs at least one node");
        assert!(a > -1.0 && b > -1.0, "Jacobi exponents must exceed -1");
        let ab = a + b;
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            let kf = k as f64;
            let diag = if k == 0 {
                (b - a) / (ab + 2.0)
            } else {
                (b * b - a * a) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
            };
            jac[(k, k)] = diag;
            if k + 1 < n {
                let j = kf + 1.0;
                let beta = if k == 0 {
                    4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
                } else {
                    let s = 2.0 * j + ab;
                    4.0 * j * (j + a) * (j + b) * (j + ab) / (s * s * (s + 1.0) * (s - 1.0))
                };
                let off = beta.sqrt();
                jac[(k, k + 1)] = off;
                jac[(k + 1, k)] = off;
            }
        }
        let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
            - ln_gamma(ab + 2.0))
        .exp();
        let eig = SymmetricEigen::new(jac);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], mu0 * v0 * v0)
            })
            .collect();
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        GaussRule {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Value and error estimate of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
        }
    }
}

impl std::ops::Mul<f64> for Estimate {
    type Output = Estimate;
    fn mul(self, c: f64) -> Estimate {
        Estimate {
            value: self.value * c,
            error: self.error * c.abs(),
        }
    }
}

/// Absolute/relative tolerance pair plus a subdivision budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_panels: usize,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance {
            abs,
            rel,
            max_panels: 4000,
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

// 15-point Kronrod extension of the 7-point Gauss rule (abscissae on [0, 1]).
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
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Estimate> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    let mut abs_sum = (WGK[7] * fc).abs();
    for i in 0..7 {
        let dx = h * XGK[i];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        k += WGK[i] * (f1 + f2);
        abs_sum += WGK[i] * (f1.abs() + f2.abs());
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    let value = k * h;
    if !value.is_finite() {
        return Err(Error::Quadrature {
            lo: a,
            hi: b,
            reason: "non-finite integrand value".into(),
        });
    }
    let floor = 50.0 * f64::EPSILON * abs_sum * h.abs();
    let error = ((k - g) * h).abs().max(floor);
    Ok(Estimate { value, error })
}

struct Panel {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

/// Adaptive Gauss-Kronrod (G7/K15) quadrature of `f` over `[a, b]`.
///
/// Bisects the panel with the largest error estimate until the summed estimate
/// meets the tolerance; exhausting the panel budget is an error that names the
/// worst remaining panel.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let first = kronrod15(&f, a, b)?;
    let mut heap = BinaryHeap::new();
    let mut total = first;
    heap.push(Panel { a, b, est: first });
    let mut panels = 1;
    while total.error > tol.target(total.value) {
        let worst = heap.pop().expect("heap never empties");
        if panels >= tol.max_panels {
            return Err(Error::Quadrature {
                lo: worst.a,
                hi: worst.b,
                reason: format!(
                    "panel budget {} exhausted with error {:e}",
                    tol.max_panels, total.error
                ),
            });
        }
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Quadrature {
                lo: worst.a,
                hi: worst.b,
                reason: "panel too small to bisect".into(),
            });
        }
        let left = kronrod15(&f, worst.a, mid)?;
        let right = kronrod15(&f, mid, worst.b)?;
        total.value += left.value + right.value - worst.est.value;
        total.error += left.error + right.error - worst.est.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            est: left,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            est: right,
        });
        panels += 1;
    }
    // Re-sum to shed the drift of the running totals.
    let mut value = 0.0;
    let mut error = 0.0;
    let mut all: Vec<Panel> = heap.into_vec();
    all.sort_by(|x, y| x.a.total_cmp(&y.a));
    for p in &all {
        value += p.est.value;
        error += p.est.error;
    }
    Ok(Estimate { value, error })
}

/// Gauss-Jacobi rules for `(x - a)^alpha f(x)` on a panel adjacent to `a`.
#[derive(Debug, Clone)]
pub struct PowerRule {
    alpha: f64,
    fine: GaussRule,
    coarse: GaussRule,
}

impl PowerRule {
    /// `order` nodes for the main rule; half as many for the error estimate.
    pub fn new(alpha: f64, order: usize) -> Self {
        let order = order.max(4);
        PowerRule {
            alpha,
            fine: GaussRule::jacobi(order, 0.0, alpha),
            coarse: GaussRule::jacobi(order / 2, 0.0, alpha),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn apply<F: Fn(f64) -> f64>(&self, rule: &GaussRule, f: &F, a: f64, w: f64) -> f64 {
        let half = 0.5 * w;
        let scale = half.powf(self.alpha + 1.0);
        let s: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&y, &wt)| wt * f(a + half * (1.0 + y)))
            .sum();
        scale * s
    }

    /// `∫_a^b (x - a)^alpha f(x) dx` for `f` smooth on `[a, b]`.
    ///
    /// The panel touching `a` uses the Gauss-Jacobi rule and is halved until the
    /// two rule orders agree; the rest of the interval goes to [`adaptive`].
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
        if b < a {
            return Err(Error::Domain(format!("power rule needs a <= b, got [{a}, {b}]")));
        }
        if a == b {
            return Ok(Estimate {
                value: 0.0,
                error: 0.0,
            });
        }
        let mut w = b - a;
        let singular = loop {
            let fine = self.apply(&self.fine, &f, a, w);
            let coarse = self.apply(&self.coarse, &f, a, w);
            if !fine.is_finite() {
                return Err(Error::Quadrature {
                    lo: a,
                    hi: a + w,
                    reason: "non-finite value in endpoint panel".into(),
                });
            }
            let err = (fine - coarse).abs();
            if err <= 0.5 * tol.target(fine) || w < 1e-12 * (b - a) {
                break Estimate {
                    value: fine,
                    error: err,
                };
            }
            w *= 0.5;
        };
        if a + w >= b {
            return Ok(singular);
        }
        let alpha = self.alpha;
        let rest = adaptive(
            |x| (x - a).powf(alpha) * f(x),
            a + w,
            b,
            Tolerance {
                abs: 0.5 * tol.abs,
                ..tol
            },
        )?;
        Ok(singular + rest)
    }
}
