//! Gaussian quadrature: node/weight construction, an adaptive composite
//! Gauss–Legendre integrator, and Gauss–Hermite expectations.
//!
//! Nodes are the roots of the orthonormal three-term recurrences, located by
//! interlacing bisection (the roots of order k strictly separate those of
//! order k+1), and the weights are the Christoffel numbers
//! `w_i = 1 / Σ_{k<n} p̂_k(x_i)²`. This is deterministic, needs no eigenvalue
//! solver, and is exact to f64 resolution for the orders used here.

use crate::error::{Error, Result};
use std::sync::OnceLock;

/// Tolerance and panel contract for the adaptive integrals (I₁, I₂, posterior
/// normalizers, the outer Bayes-risk integral).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    /// Target relative tolerance, measured against the integral's L1 scale.
    pub relative_tolerance: f64,
    /// Panel-bisection budget before giving up with a numerical error.
    pub max_subdivisions: u32,
    /// Gauss–Legendre nodes per panel.
    pub nodes_per_panel: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            relative_tolerance: 1e-10,
            max_subdivisions: 1 << 14,
            nodes_per_panel: 16,
        }
    }
}

impl QuadratureSpec {
    /// Same panel rule, different tolerance.
    pub fn with_tolerance(tol: f64) -> Self {
        QuadratureSpec { relative_tolerance: tol, ..Self::default() }
    }
}

/// Orthonormal-recurrence coefficient `a_k` in `x·p̂_k = a_{k+1}·p̂_{k+1} + a_k·p̂_{k-1}`.
#[derive(Clone, Copy)]
enum Family {
    /// Legendre, weight 1 on [-1, 1].
    Legendre,
    /// Hermite (physicists'), weight e^{-x²} on ℝ.
    Hermite,
}

impl Family {
    fn p0(self) -> f64 {
        match self {
            Family::Legendre => std::f64::consts::FRAC_1_SQRT_2,
            Family::Hermite => 1.0 / std::f64::consts::PI.powf(0.25),
        }
    }

    fn a(self, k: usize) -> f64 {
        if k == 0 {
            // a_0 multiplies p̂_{-1} = 0; return 0 rather than the Legendre
            // formula's 0/√(-1).
            return 0.0;
        }
        let k = k as f64;
        match self {
            Family::Legendre => k / (4.0 * k * k - 1.0).sqrt(),
            Family::Hermite => (k / 2.0).sqrt(),
        }
    }

    fn outer_bound(self, n: usize) -> f64 {
        match self {
            Family::Legendre => 1.0,
            Family::Hermite => (2.0 * n as f64 + 1.0).sqrt() + 1.0,
        }
    }
}

/// Value of the orthonormal polynomial of the given order at x.
fn eval(family: Family, order: usize, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = family.p0();
    for k in 0..order {
        let next = (x * cur - family.a(k) * prev) / family.a(k + 1);
        prev = cur;
        cur = next;
    }
    cur
}

/// Sum of squares Σ_{k<n} p̂_k(x)², the reciprocal Christoffel number.
fn christoffel_denominator(family: Family, n: usize, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = family.p0();
    let mut sum = cur * cur;
    for k in 0..n - 1 {
        let next = (x * cur - family.a(k) * prev) / family.a(k + 1);
        prev = cur;
        cur = next;
        sum += cur * cur;
    }
    sum
}

/// Bisect p̂_order to f64 resolution inside a sign-changing bracket.
fn bisect_root(family: Family, order: usize, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = eval(family, order, lo);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        let fmid = eval(family, order, mid);
        if fmid == 0.0 {
            return mid;
        }
        if (fmid > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
}

/// Nodes and weights for the family's n-point Gauss rule, built by
/// interlacing: the roots of each order bracket the roots of the next.
fn gauss_rule(family: Family, n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be positive");
    let bound = family.outer_bound(n);
    let mut roots: Vec<f64> = vec![];
    for order in 1..=n {
        let mut brackets = Vec::with_capacity(order + 1);
        brackets.push(-bound);
        brackets.extend_from_slice(&roots);
        brackets.push(bound);
        roots = brackets
            .windows(2)
            .map(|w| bisect_root(family, order, w[0], w[1]))
            .collect();
    }
    let weights = roots
        .iter()
        .map(|&x| 1.0 / christoffel_denominator(family, n, x))
        .collect();
    (roots, weights)
}

/// n-point Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_rule(Family::Legendre, n)
}

/// n-point Gauss–Hermite nodes and weights for ∫ f(x)·e^{-x²} dx.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_rule(Family::Hermite, n)
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Cached Gauss–Hermite rule for the default 61-node risk integral and its
/// doubled-node convergence check; other orders are computed on demand.
pub(crate) fn gauss_hermite_cached(n: usize) -> (&'static [f64], &'static [f64]) {
    static GH61: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    static GH122: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    static OTHER: OnceLock<std::sync::Mutex<std::collections::HashMap<usize, &'static (Vec<f64>, Vec<f64>)>>> =
        OnceLock::new();
    let rule: &'static (Vec<f64>, Vec<f64>) = match n {
        61 => GH61.get_or_init(|| gauss_hermite(61)),
        122 => GH122.get_or_init(|| gauss_hermite(122)),
        _ => {
            let map = OTHER.get_or_init(|| std::sync::Mutex::new(std::collections::HashMap::new()));
            let mut guard = map.lock().expect("gauss-hermite cache poisoned");
            *guard.entry(n).or_insert_with(|| Box::leak(Box::new(gauss_hermite(n))))
        }
    };
    (&rule.0, &rule.1)
}

fn panel(f: &impl Fn(f64) -> f64, a: f64, b: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (&x, &w) in nodes.iter().zip(weights) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// A bisected panel awaiting further refinement, ordered by its error
/// estimate `|left + right − whole|` so the heap always surfaces the panel
/// whose split buys the most accuracy.
struct HeapPanel {
    err: f64,
    pa: f64,
    pb: f64,
    mid: f64,
    left: f64,
    right: f64,
}

impl PartialEq for HeapPanel {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq()
    }
}

impl Eq for HeapPanel {}

impl PartialOrd for HeapPanel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapPanel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

// Local roundoff floor: once a panel's refinement change is at the rounding
// noise of its own unsigned mass, further bisection only chases f64 noise.
const NOISE_FLOOR: f64 = 3.6e-15;

/// Bisect a panel whose coarse estimate is `whole`; returns the refined value
/// and, unless the panel is converged or at f64 width resolution, a heap
/// entry for further splitting.
fn refine_panel(
    f: &impl Fn(f64) -> f64,
    pa: f64,
    pb: f64,
    whole: f64,
    nodes: &[f64],
    weights: &[f64],
) -> (f64, Option<HeapPanel>) {
    let mid = 0.5 * (pa + pb);
    let left = panel(f, pa, mid, nodes, weights);
    let right = panel(f, mid, pb, nodes, weights);
    let refined = left + right;
    let err = (refined - whole).abs();
    if err <= NOISE_FLOOR * (left.abs() + right.abs()) || mid <= pa || mid >= pb {
        return (refined, None);
    }
    (refined, Some(HeapPanel { err, pa, pb, mid, left, right }))
}

/// Adaptive composite Gauss–Legendre integral of f over [a, b].
///
/// Refinement is globally adaptive: panels live in a priority queue keyed by
/// their bisection-difference error estimate, the worst panel is split first,
/// and iteration stops once the summed estimate drops below the spec's
/// tolerance relative to the integrand's L1 scale (so heavily cancelling
/// oscillatory integrals are not chased below their conditioning). Spending
/// the budget where the error actually lives makes integrable endpoint
/// singularities converge in a number of splits linear in the digits
/// requested. Exceeding the subdivision budget yields [`Error::Numerical`]
/// carrying the remaining error-sum estimate.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return integrate(f, b, a, spec).map(|v| -v);
    }
    let fresh;
    let (nodes, weights): (&[f64], &[f64]) = if spec.nodes_per_panel == 16 {
        let r = gl16();
        (&r.0, &r.1)
    } else {
        fresh = gauss_legendre(spec.nodes_per_panel);
        (&fresh.0, &fresh.1)
    };

    const INITIAL_PANELS: usize = 4;
    let width = (b - a) / INITIAL_PANELS as f64;
    let mut coarse = [0.0; INITIAL_PANELS];
    let mut scale = 0.0;
    for (i, whole) in coarse.iter_mut().enumerate() {
        let pa = a + i as f64 * width;
        let pb = if i + 1 == INITIAL_PANELS { b } else { a + (i + 1) as f64 * width };
        *whole = panel(&f, pa, pb, nodes, weights);
        scale += whole.abs();
    }
    let tolerance = spec.relative_tolerance * scale.max(f64::MIN_POSITIVE);

    // `total` holds Σ refined over retired panels and the heap; `err_sum`
    // tracks only the heap (retired panels are converged to rounding noise).
    let mut total = 0.0;
    let mut err_sum = 0.0;
    let mut heap = std::collections::BinaryHeap::new();
    for (i, &whole) in coarse.iter().enumerate() {
        let pa = a + i as f64 * width;
        let pb = if i + 1 == INITIAL_PANELS { b } else { a + (i + 1) as f64 * width };
        let (refined, entry) = refine_panel(&f, pa, pb, whole, nodes, weights);
        total += refined;
        if let Some(entry) = entry {
            err_sum += entry.err;
            heap.push(entry);
        }
    }

    let mut splits = 0u32;
    while err_sum > tolerance {
        let Some(worst) = heap.pop() else { break };
        if splits >= spec.max_subdivisions {
            return Err(Error::Numerical {
                what: format!(
                    "adaptive Gauss-Legendre exceeded {} subdivisions (worst panel [{:.6e}, {:.6e}])",
                    spec.max_subdivisions, worst.pa, worst.pb
                ),
                achieved: err_sum,
            });
        }
        splits += 1;
        err_sum -= worst.err;
        total -= worst.left + worst.right;
        for (ca, cb, cw) in [(worst.pa, worst.mid, worst.left), (worst.mid, worst.pb, worst.right)] {
            let (refined, entry) = refine_panel(&f, ca, cb, cw, nodes, weights);
            total += refined;
            if let Some(entry) = entry {
                err_sum += entry.err;
                heap.push(entry);
            }
        }
    }
    Ok(total)
}

/// E[f(D)] for D ~ N(theta, sigma²) by an n-node Gauss–Hermite rule.
pub fn gh_expectation(f: impl Fn(f64) -> f64, theta: f64, sigma: f64, n: usize) -> f64 {
    let (nodes, weights) = gauss_hermite_cached(n);
    let scale = std::f64::consts::SQRT_2 * sigma;
    let mut acc = 0.0;
    for (&x, &w) in nodes.iter().zip(weights) {
        acc += w * f(theta + scale * x);
    }
    acc / std::f64::consts::PI.sqrt()
}

/// Pairwise (cascade) summation: schedule-independent and far better
/// conditioned than a running sum for long Monte Carlo aggregates.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 128 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
