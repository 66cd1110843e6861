//! Quadrature on `[0, ∞)` and closed-form Fermi-Dirac moments.
//!
//! The semi-infinite range is mapped onto `(0, 1]` with `q = (1 - t)/t`,
//! `dq = dt/t²`, and the transformed integrand is handled by globally
//! adaptive bisection with a 7/15-point Gauss-Kronrod pair. Panel error
//! estimates follow the QUADPACK heuristics.
//!
//! The engine works on vector-valued integrands so that a matrix-valued
//! integral shares one set of abscissae across all entries.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use crate::error::{Error, Result};

/// ζ(3), Apéry's constant.
pub const ZETA3: f64 = 1.202_056_903_159_594_3;
/// ζ(4) = π⁴/90.
pub const ZETA4: f64 = std::f64::consts::PI
    * std::f64::consts::PI
    * std::f64::consts::PI
    * std::f64::consts::PI
    / 90.0;
/// ζ(5).
pub const ZETA5: f64 = 1.036_927_755_143_369_9;

pub const DEFAULT_ABS_TOL: f64 = 1e-12;
pub const DEFAULT_BUDGET: usize = 1_000_000;

/// Kronrod abscissae on [-1, 1], positive half, descending; the last is the centre.
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

/// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const EVALS_PER_PANEL: usize = 15;

/// Outcome of a scalar integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
    /// False when the budget ran out first; `value` is then the best estimate seen.
    pub converged: bool,
}

impl QuadratureResult {
    /// Turns a non-converged result into [`Error::NotConverged`].
    pub fn require_converged(self, abs_tol: f64) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                value: self.value,
                abs_error: self.abs_error_estimate,
                evaluations: self.evaluations,
                abs_tol,
            })
        }
    }
}

/// Outcome of a vector-valued integration. The error estimate bounds every
/// component.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorQuadratureResult {
    pub values: Vec<f64>,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl VectorQuadratureResult {
    pub fn require_converged(self, abs_tol: f64) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                value: self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
                abs_error: self.abs_error_estimate,
                evaluations: self.evaluations,
                abs_tol,
            })
        }
    }
}

/// Integrates `f` over `[0, ∞)` to absolute tolerance `abs_tol` using at most
/// `budget` integrand evaluations.
///
/// Exhausting the budget is not an error: the best estimate is returned with
/// `converged == false`. A non-finite integrand value is an error carrying the
/// offending abscissa.
pub fn integrate_semi_infinite<F>(f: F, abs_tol: f64, budget: usize) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64,
{
    let r = integrate_semi_infinite_vec(|q, out: &mut [f64]| out[0] = f(q), 1, abs_tol, budget)?;
    Ok(QuadratureResult {
        value: r.values[0],
        abs_error_estimate: r.abs_error_estimate,
        evaluations: r.evaluations,
        converged: r.converged,
    })
}

/// Vector-valued version of [`integrate_semi_infinite`]: `f(q, out)` writes
/// `dim` components into `out`.
pub fn integrate_semi_infinite_vec<F>(
    f: F,
    dim: usize,
    abs_tol: f64,
    budget: usize,
) -> Result<VectorQuadratureResult>
where
    F: Fn(f64, &mut [f64]),
{
    if !(abs_tol > 0.0) || !abs_tol.is_finite() {
        return Err(Error::Domain(format!("abs_tol must be positive, got {abs_tol}")));
    }
    if dim == 0 {
        return Err(Error::Domain("integrand dimension must be at least 1".into()));
    }
    if budget < EVALS_PER_PANEL {
        return Err(Error::Domain(format!(
            "budget must allow at least {EVALS_PER_PANEL} evaluations, got {budget}"
        )));
    }

    let mut mapped = MappedIntegrand {
        f,
        dim,
        buf: vec![0.0; dim],
    };
    let mut fv = vec![0.0; dim * EVALS_PER_PANEL];

    let first = mapped.panel(0.0, 1.0, &mut fv)?;
    let mut evaluations = EVALS_PER_PANEL;
    let mut total = first.integral.clone();
    let mut total_err = first.error;
    let mut best = (total.clone(), total_err);

    let mut heap = BinaryHeap::new();
    heap.push(first);

    let mut converged = total_err <= abs_tol;
    while !converged && evaluations + 2 * EVALS_PER_PANEL <= budget {
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // interval no longer divisible in binary64
            heap.push(worst);
            break;
        }
        let left = mapped.panel(worst.a, mid, &mut fv)?;
        let right = mapped.panel(mid, worst.b, &mut fv)?;
        evaluations += 2 * EVALS_PER_PANEL;

        for (k, t) in total.iter_mut().enumerate() {
            *t += left.integral[k] + right.integral[k] - worst.integral[k];
        }
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);

        if total_err <= abs_tol {
            // confirm against a fresh sum; the running one drifts
            let (v, e) = sum_panels(&heap, dim);
            total = v;
            total_err = e;
            converged = total_err <= abs_tol;
        }
        if total_err < best.1 {
            best = (total.clone(), total_err);
        }
    }

    if converged {
        best = (total, total_err);
    }
    Ok(VectorQuadratureResult {
        values: best.0,
        abs_error_estimate: best.1,
        evaluations,
        converged,
    })
}

fn sum_panels(heap: &BinaryHeap<Panel>, dim: usize) -> (Vec<f64>, f64) {
    let mut panels: Vec<&Panel> = heap.iter().collect();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut v = vec![0.0; dim];
    let mut e = 0.0;
    for p in panels {
        for (acc, x) in v.iter_mut().zip(&p.integral) {
            *acc += x;
        }
        e += p.error;
    }
    (v, e)
}

struct Panel {
    a: f64,
    b: f64,
    integral: Vec<f64>,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

struct MappedIntegrand<F> {
    f: F,
    dim: usize,
    buf: Vec<f64>,
}

impl<F: Fn(f64, &mut [f64])> MappedIntegrand<F> {
    /// Evaluates `f((1-t)/t)/t²` into `out`.
    fn eval(&mut self, t: f64, out: &mut [f64]) -> Result<()> {
        let q = (1.0 - t) / t;
        self.buf.iter_mut().for_each(|x| *x = 0.0);
        (self.f)(q, &mut self.buf);
        let jac = 1.0 / (t * t);
        for (o, &v) in out.iter_mut().zip(&self.buf) {
            if !v.is_finite() {
                return Err(Error::NonFinite { abscissa: q });
            }
            let w = v * jac;
            // jac overflows only for q beyond ~1e154, where supported integrands vanish
            *o = if w.is_finite() { w } else { 0.0 };
        }
        Ok(())
    }

    fn panel(&mut self, a: f64, b: f64, fv: &mut [f64]) -> Result<Panel> {
        let dim = self.dim;
        let centre = 0.5 * (a + b);
        let half = 0.5 * (b - a);

        // fv layout: node j occupies fv[j*dim .. (j+1)*dim];
        // j = 0..7 are centre - half*XGK[j], 7 is the centre, 8..15 are centre + half*XGK[j-8]
        for j in 0..7 {
            let dx = half * XGK[j];
            let (lo, hi) = fv.split_at_mut((8 + j) * dim);
            self.eval(centre - dx, &mut lo[j * dim..(j + 1) * dim])?;
            self.eval(centre + dx, &mut hi[..dim])?;
        }
        self.eval(centre, &mut fv[7 * dim..8 * dim])?;

        let mut integral = vec![0.0; dim];
        let mut error = 0.0_f64;
        for c in 0..dim {
            let at = |j: usize| fv[j * dim + c];
            let fc = at(7);
            let mut resk = WGK[7] * fc;
            let mut resg = WG[3] * fc;
            let mut resabs = resk.abs();
            for j in 0..7 {
                let (f1, f2) = (at(j), at(8 + j));
                resk += WGK[j] * (f1 + f2);
                resabs += WGK[j] * (f1.abs() + f2.abs());
                if j % 2 == 1 {
                    resg += WG[j / 2] * (f1 + f2);
                }
            }
            let mean = 0.5 * resk;
            let mut resasc = WGK[7] * (fc - mean).abs();
            for j in 0..7 {
                resasc += WGK[j] * ((at(j) - mean).abs() + (at(8 + j) - mean).abs());
            }
            let result = resk * half;
            let resabs = resabs * half.abs();
            let resasc = resasc * half.abs();
            let mut err = ((resk - resg) * half).abs();
            if resasc != 0.0 && err != 0.0 {
                err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
            }
            if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
                err = err.max(50.0 * f64::EPSILON * resabs);
            }
            integral[c] = result;
            error = error.max(err);
        }
        Ok(Panel { a, b, integral, error })
    }
}

/// `1/(e^q + 1)` without overflow for large `q`.
pub fn fermi_factor(q: f64) -> f64 {
    if q > 1.0 {
        let e = (-q).exp();
        e / (1.0 + e)
    } else {
        1.0 / (q.exp() + 1.0)
    }
}

/// `∫₀^∞ q^k/(e^q + 1) dq = (1 - 2^-k) k! ζ(k+1)` for `k ∈ {2, 3, 4}`.
pub fn fermi_moment(k: u32) -> Result<f64> {
    let zeta = match k {
        2 => ZETA3,
        3 => ZETA4,
        4 => ZETA5,
        _ => {
            return Err(Error::Domain(format!(
                "Fermi moment only tabulated for k in {{2,3,4}}, got {k}"
            )))
        }
    };
    let factorial: f64 = (1..=k).map(f64::from).product();
    Ok((1.0 - 2f64.powi(-(k as i32))) * factorial * zeta)
}

/// Fermi-Dirac moments and the zeta values they are built from.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub moment_k: BTreeMap<u32, f64>,
    pub zeta3: f64,
    pub zeta4: f64,
    pub zeta5: f64,
}

impl MomentTable {
    pub fn new() -> Self {
        let moment_k = (2..=4)
            .map(|k| (k, fermi_moment(k).expect("k in supported range")))
            .collect();
        Self {
            moment_k,
            zeta3: ZETA3,
            zeta4: ZETA4,
            zeta5: ZETA5,
        }
    }
}

impl Default for MomentTable {
    fn default() -> Self {
        Self::new()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
