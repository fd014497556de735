//! Standard-normal density, distribution function, and quantile.
//!
//! The distribution function goes through Cody's rational-minimax `erfc`
//! (W. J. Cody, *Rational Chebyshev approximation for the error function*,
//! 1969), and the quantile through Wichura's PPND16 (AS 241) polished with
//! one Newton step against that same `erfc`. Both are a few ulps accurate
//! over the whole range reachable from 64-bit uniforms, which is beyond what
//! general-purpose crates guarantee and what the shrinkage-rule oracles
//! need. `norm_cdf` keeps full *relative* accuracy in the lower tail — it
//! never forms `1 - Φ(-x)`.

/// 1/√(2π).
pub const FRAC_1_SQRT_2PI: f64 = 0.3989422804014326779;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal density φ(x).
pub fn phi(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// ln φ(x), usable far beyond the underflow point of [`phi`].
pub fn ln_phi(x: f64) -> f64 {
    FRAC_1_SQRT_2PI.ln() - 0.5 * x * x
}

// Cody's coefficients, regions |x| ≤ 0.46875 / (0.46875, 4] / (4, ∞).
const ERF_A: [f64; 5] = [
    3.16112374387056560e0,
    1.13864154151050156e2,
    3.77485237685302021e2,
    3.20937758913846947e3,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] = [
    2.36012909523441209e1,
    2.44024637934444173e2,
    1.28261652607737228e3,
    2.84423683343917062e3,
];
const ERF_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e0,
    6.61191906371416295e1,
    2.98635138197400131e2,
    8.81952221241769090e2,
    1.71204761263407058e3,
    2.05107837782607147e3,
    1.23033935479799725e3,
    2.15311535474403846e-8,
];
const ERF_D: [f64; 8] = [
    1.57449261107098347e1,
    1.17693950891312499e2,
    5.37181101862009858e2,
    1.62138957456669019e3,
    3.29079923573345963e3,
    4.36261909014324716e3,
    3.43936767414372164e3,
    1.23033935480374942e3,
];
const ERF_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERF_Q: [f64; 5] = [
    2.56852019228982242e0,
    1.87295284992346047e0,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];
/// 1/√π.
const FRAC_1_SQRT_PI: f64 = 5.6418958354775628695e-1;

/// e^{-y²}·r with y² split into an exactly representable head plus a small
/// correction, so the exponential sees no double-rounding.
fn scaled_exp(y: f64, r: f64) -> f64 {
    let head = (y * 16.0).trunc() / 16.0;
    let tail = (y - head) * (y + head);
    (-head * head).exp() * (-tail).exp() * r
}

/// Complementary error function, max relative error a few ulps.
fn erfc(x: f64) -> f64 {
    let y = x.abs();
    let result = if y <= 0.46875 {
        // |erf| ≤ 1/2 here, so 1 − erf(x) costs no cancellation.
        let z = y * y;
        let mut num = ERF_A[4] * z;
        let mut den = z;
        for i in 0..3 {
            num = (num + ERF_A[i]) * z;
            den = (den + ERF_B[i]) * z;
        }
        return 1.0 - x * (num + ERF_A[3]) / (den + ERF_B[3]);
    } else if y <= 4.0 {
        let mut num = ERF_C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + ERF_C[i]) * y;
            den = (den + ERF_D[i]) * y;
        }
        scaled_exp(y, (num + ERF_C[7]) / (den + ERF_D[7]))
    } else if y < 26.543 {
        let z = 1.0 / (y * y);
        let mut num = ERF_P[5] * z;
        let mut den = z;
        for i in 0..4 {
            num = (num + ERF_P[i]) * z;
            den = (den + ERF_Q[i]) * z;
        }
        let r = z * (num + ERF_P[4]) / (den + ERF_Q[4]);
        scaled_exp(y, (FRAC_1_SQRT_PI - r) / y)
    } else {
        0.0
    };
    if x < 0.0 {
        2.0 - result
    } else {
        result
    }
}

/// Standard normal distribution function Φ(x), accurate in both tails.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

// Wichura's PPND16 coefficients: central |p − 1/2| ≤ 0.425, then the two
// tail pieces in r = √(−ln p), split at r = 5.
const Q_A: [f64; 8] = [
    3.3871328727963666080e0,
    1.3314166789178437745e2,
    1.9715909503065514427e3,
    1.3731693765509461125e4,
    4.5921953931549871457e4,
    6.7265770927008700853e4,
    3.3430575583588128105e4,
    2.5090809287301226727e3,
];
const Q_B: [f64; 8] = [
    1.0,
    4.2313330701600911252e1,
    6.8718700749205790830e2,
    5.3941960214247511077e3,
    2.1213794301586595867e4,
    3.9307895800092710610e4,
    2.8729085735721942674e4,
    5.2264952788528545610e3,
];
const Q_C: [f64; 8] = [
    1.42343711074968357734e0,
    4.63033784615654529590e0,
    5.76949722146069140550e0,
    3.64784832476320460504e0,
    1.27045825245236838258e0,
    2.41780725177450611770e-1,
    2.27238449892691845833e-2,
    7.74545014278341407640e-4,
];
const Q_D: [f64; 8] = [
    1.0,
    2.05319162663775882187e0,
    1.67638483018380384940e0,
    6.89767334985100004550e-1,
    1.48103976427480074590e-1,
    1.51986665636164571966e-2,
    5.47593808499534494600e-4,
    1.05075007164441684324e-9,
];
const Q_E: [f64; 8] = [
    6.65790464350110377720e0,
    5.46378491116411436990e0,
    1.78482653991729133580e0,
    2.96560571828504891230e-1,
    2.65321895265761230930e-2,
    1.24266094738807843860e-3,
    2.71155556874348757815e-5,
    2.01033439929228813265e-7,
];
const Q_F: [f64; 8] = [
    1.0,
    5.99832206555887937690e-1,
    1.36929880922735805310e-1,
    1.48753612908506148525e-2,
    7.86869131145613259100e-4,
    1.84631831751005468180e-5,
    1.42151175831644588870e-7,
    2.04426310338993978564e-15,
];

fn horner(coefficients: &[f64; 8], r: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, &c| acc * r + c)
}

fn ppnd16(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * horner(&Q_A, r) / horner(&Q_B, r);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        let r = r - 1.6;
        horner(&Q_C, r) / horner(&Q_D, r)
    } else {
        let r = r - 5.0;
        horner(&Q_E, r) / horner(&Q_F, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

/// One Newton step for p ≤ 1/2: Φ(x) and p share a scale in the lower tail,
/// so the residual is computed at full relative precision.
fn quantile_lower(p: f64) -> f64 {
    let x = ppnd16(p);
    let f = norm_cdf(x) - p;
    let d = phi(x);
    if d > 0.0 {
        x - f / d
    } else {
        x
    }
}

/// Standard normal quantile Φ⁻¹(p) for p in (0, 1), a few ulps accurate and
/// consistent with [`norm_cdf`] at ulp level — that keeps inverse-CDF noise
/// streams stable across platforms.
pub fn norm_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile needs p in (0,1), got {p}");
    if p > 0.5 {
        -quantile_lower(1.0 - p)
    } else {
        quantile_lower(p)
    }
}
