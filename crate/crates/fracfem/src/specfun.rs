//! Special-function kernel: Γ, the modified Bessel function K_ν for
//! fractional order ν ∈ (0,1], and the one-dimensional extension profile
//! ψ(y) = c_s (√λ y)^s K_s(√λ y) with its derivative.
//!
//! Everything is self-contained: Γ through a Lanczos approximation, K_ν
//! through a Temme-style series for small arguments and a Steed continued
//! fraction for large ones, plus a slow integral-representation evaluation
//! used as an independent reference (`bessel_k_integral`).

use crate::{Error, Result};
use libm::{acosh, cosh, exp, fabs, log, pow, sin, sinh, sqrt};

/// Fractional order s with its derived constants.
///
/// `alpha` is the weight exponent of the extension problem, `d_s` the
/// Dirichlet-to-Neumann normalization 2^{1−2s}Γ(1−s)/Γ(s), `c_s` the profile
/// normalization 2^{1−s}/Γ(s) that makes ψ(0) = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracParams {
    pub s: f64,
    pub alpha: f64,
    pub d_s: f64,
    pub c_s: f64,
}

impl FracParams {
    pub fn new(s: f64) -> Result<Self> {
        if !s.is_finite() || s <= 0.0 || s >= 1.0 {
            return Err(Error::Domain("fractional order s must lie in (0,1)"));
        }
        let ln2 = core::f64::consts::LN_2;
        // Computed in log space so that s = 1/2 gives d_s = 1 exactly.
        let d_s = exp((1.0 - 2.0 * s) * ln2 + gamma_ln(1.0 - s) - gamma_ln(s));
        let c_s = exp((1.0 - s) * ln2 - gamma_ln(s));
        Ok(FracParams { s, alpha: 1.0 - 2.0 * s, d_s, c_s })
    }
}

/// ln Γ(x) for x > 0. Lanczos approximation, g = 671/128, 14 coefficients.
pub fn gamma_ln(x: f64) -> f64 {
    const COF: [f64; 14] = [
        57.156_235_665_862_923_5,
        -59.597_960_355_475_491_2,
        14.136_097_974_741_747_1,
        -0.491_913_816_097_620_199,
        0.339_946_499_848_118_887e-4,
        0.465_236_289_270_485_756e-4,
        -0.983_744_753_048_795_646e-4,
        0.158_088_703_224_912_494e-3,
        -0.210_264_441_724_104_883e-3,
        0.217_439_618_115_212_643e-3,
        -0.164_318_106_536_763_890e-3,
        0.844_182_239_838_527_433e-4,
        -0.261_908_384_015_814_087e-4,
        0.368_991_826_595_316_234e-5,
    ];
    debug_assert!(x > 0.0);
    let tmp = x + 5.242_187_5;
    let tmp = (x + 0.5) * log(tmp) - tmp;
    let mut ser = 0.999_999_999_999_997_092;
    let mut y = x;
    for c in COF {
        y += 1.0;
        ser += c / y;
    }
    tmp + log(2.506_628_274_631_000_5 * ser / x)
}

/// Γ(x) for x > 0, relative error below 1e-13 on [1e-3, 30].
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain("gamma_fn requires finite x > 0"));
    }
    Ok(exp(gamma_ln(x)))
}

// Maclaurin coefficients of 1/Γ(z): 1/Γ(z) = Σ_{k≥1} C[k-1] z^k.
// 60-digit values, so 1/Γ(1±μ) and the Temme auxiliaries below are free of
// the cancellation that a direct Γ-based difference would suffer for small μ.
const RGAMMA: [f64; 30] = [
    1.0,
    0.577_215_664_901_532_861,
    -0.655_878_071_520_253_881,
    -0.042_002_635_034_095_235_5,
    0.166_538_611_382_291_49,
    -0.042_197_734_555_544_336_7,
    -0.009_621_971_527_876_973_56,
    0.007_218_943_246_663_099_54,
    -0.001_165_167_591_859_065_11,
    -0.000_215_241_674_114_950_973,
    0.000_128_050_282_388_116_186,
    -0.000_020_134_854_780_788_238_7,
    -0.000_001_250_493_482_142_670_66,
    0.000_001_133_027_231_981_695_88,
    -2.056_338_416_977_607_1e-7,
    6.116_095_104_481_415_82e-9,
    5.002_007_644_469_222_93e-9,
    -1.181_274_570_487_020_14e-9,
    1.043_426_711_691_100_51e-10,
    7.782_263_439_905_071_25e-12,
    -3.696_805_618_642_205_71e-12,
    5.100_370_287_454_475_98e-13,
    -2.058_326_053_566_506_78e-14,
    -5.348_122_539_423_017_98e-15,
    1.226_778_628_238_260_79e-15,
    -1.181_259_301_697_458_77e-16,
    1.186_692_254_751_600_33e-18,
    1.412_380_655_318_031_78e-18,
    -2.298_745_684_435_370_21e-19,
    1.714_406_321_927_337_43e-20,
];

/// 1/Γ(1+x) for |x| ≤ 1/2.
fn rgamma1p(x: f64) -> f64 {
    let mut acc = RGAMMA[RGAMMA.len() - 1];
    for k in (0..RGAMMA.len() - 1).rev() {
        acc = acc * x + RGAMMA[k];
    }
    acc
}

/// Temme auxiliaries: gam1 = [1/Γ(1−μ) − 1/Γ(1+μ)]/(2μ), gam2 = their mean.
fn temme_gammas(mu: f64) -> (f64, f64) {
    let t = mu * mu;
    let mut gam1 = 0.0;
    let mut gam2 = 0.0;
    for k in (0..RGAMMA.len()).rev() {
        if k % 2 == 1 {
            gam1 = gam1 * t + RGAMMA[k];
        } else {
            gam2 = gam2 * t + RGAMMA[k];
        }
    }
    (-gam1, gam2)
}

const KMAX_ITER: usize = 2000;
const KEPS: f64 = 1.0e-16;

/// Temme series for z ≤ 2, |μ| ≤ 1/2: returns (K_μ(z), K_{μ+1}(z)), unscaled.
fn k_temme(mu: f64, z: f64) -> (f64, f64) {
    let x2 = 0.5 * z;
    let d_log = -log(x2);
    let sigma = mu * d_log;
    let pimu = core::f64::consts::PI * mu;
    let fact = if fabs(pimu) < 1e-6 {
        1.0 + pimu * pimu / 6.0
    } else {
        pimu / sin(pimu)
    };
    let fact2 = if fabs(sigma) < 1e-6 {
        1.0 + sigma * sigma / 6.0
    } else {
        sinh(sigma) / sigma
    };
    let (gam1, gam2) = temme_gammas(mu);
    let gampl = rgamma1p(mu);
    let gammi = rgamma1p(-mu);
    let mut f = fact * (gam1 * cosh(sigma) + gam2 * fact2 * d_log);
    let e = exp(sigma);
    let mut p = 0.5 * e / gampl;
    let mut q = 0.5 / (e * gammi);
    let mut c = 1.0;
    let d = x2 * x2;
    let mut sum = f;
    let mut sum1 = p;
    for i in 1..=KMAX_ITER {
        let fi = i as f64;
        f = (fi * f + p + q) / (fi * fi - mu * mu);
        c *= d / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * f;
        sum += del;
        let del1 = c * (p - fi * f);
        sum1 += del1;
        if fabs(del) < fabs(sum) * KEPS {
            break;
        }
    }
    (sum, sum1 * 2.0 / z)
}

/// Steed continued fraction for z > 2, |μ| ≤ 1/2:
/// returns (e^z K_μ(z), e^z K_{μ+1}(z)).
fn k_steed_scaled(mu: f64, z: f64) -> (f64, f64) {
    let mu2 = mu * mu;
    let a1 = 0.25 - mu2;
    let mut b = 2.0 * (1.0 + z);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..=KMAX_ITER {
        a -= 2.0 * (i as f64 - 1.0);
        c = -a * c / i as f64;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if fabs(dels / s) < KEPS {
            break;
        }
    }
    let h = a1 * h;
    let kmu = sqrt(core::f64::consts::PI / (2.0 * z)) / s;
    let kmu1 = kmu * (mu + z + 0.5 - h) / z;
    (kmu, kmu1)
}

fn check_k_args(nu: f64, z: f64) -> Result<()> {
    if !nu.is_finite() || nu <= 0.0 || nu > 1.0 {
        return Err(Error::Domain("bessel_k requires nu in (0, 1]"));
    }
    if !z.is_finite() || z <= 0.0 {
        return Err(Error::Domain("bessel_k requires z > 0"));
    }
    Ok(())
}

/// e^z K_ν(z) for ν ∈ (0,1], z > 0. Free of underflow for any z.
pub fn bessel_k_scaled(nu: f64, z: f64) -> Result<f64> {
    check_k_args(nu, z)?;
    // Reduce to |μ| ≤ 1/2 and recur upward; K is even in its order.
    let nl = (nu + 0.5) as i32;
    let mu = nu - nl as f64;
    let (mut kmu, mut kmu1) = if z <= 2.0 {
        let (a, b) = k_temme(mu, z);
        let ez = exp(z);
        (a * ez, b * ez)
    } else {
        k_steed_scaled(mu, z)
    };
    for i in 1..=nl {
        let next = (mu + i as f64) * (2.0 / z) * kmu1 + kmu;
        kmu = kmu1;
        kmu1 = next;
    }
    Ok(kmu)
}

/// Result of a K_ν evaluation; `underflow` marks values flushed to zero
/// because e^{−z} left the representable range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselK {
    pub value: f64,
    pub underflow: bool,
}

// exp(-z) is exactly representable (normal) down to about z = 708; beyond
// that, work in log space and flush to a flagged zero.
const LOG_SPACE_Z: f64 = 600.0;
const MIN_NORMAL_LOG: f64 = -708.0;

/// K_ν(z) for ν ∈ (0,1], z > 0, relative error below 1e-10 on z ∈ [1e-3, 30].
pub fn bessel_k(nu: f64, z: f64) -> Result<BesselK> {
    let scaled = bessel_k_scaled(nu, z)?;
    if z > LOG_SPACE_Z {
        let ln_v = log(scaled) - z;
        if ln_v < MIN_NORMAL_LOG {
            return Ok(BesselK { value: 0.0, underflow: true });
        }
        return Ok(BesselK { value: exp(ln_v), underflow: false });
    }
    Ok(BesselK { value: scaled * exp(-z), underflow: false })
}

/// Reference evaluation of K_ν(z) = ∫₀^∞ e^{−z cosh t} cosh(νt) dt by Romberg
/// integration on a truncated range. Slow; used by `selftest` and the test
/// suite as an implementation-independent check of `bessel_k`.
pub fn bessel_k_integral(nu: f64, z: f64) -> Result<f64> {
    check_k_args(nu, z)?;
    // Beyond z cosh t ≈ 780 the integrand is below 1e-330 relative weight.
    let t_max = if z >= 780.0 { 1.0 } else { acosh(780.0 / z) };
    let f = |t: f64| exp(-z * cosh(t)) * cosh(nu * t);
    Ok(romberg(&f, 0.0, t_max))
}

/// Romberg integration of a smooth integrand; relative target near 1e-14.
fn romberg(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const LEVELS: usize = 22;
    let mut rows: [f64; LEVELS] = [0.0; LEVELS];
    let mut trapezoid = 0.5 * (b - a) * (f(a) + f(b));
    rows[0] = trapezoid;
    let mut n = 1usize;
    for k in 1..LEVELS {
        // Refine the trapezoid sum with the midpoints (Kahan-compensated).
        let h = (b - a) / n as f64;
        let mut sum = 0.0;
        let mut comp = 0.0;
        for i in 0..n {
            let t = f(a + (i as f64 + 0.5) * h) - comp;
            let acc = sum + t;
            comp = (acc - sum) - t;
            sum = acc;
        }
        trapezoid = 0.5 * (trapezoid + h * sum);
        n *= 2;
        let mut prev_row_k = rows[k - 1];
        rows[k] = trapezoid;
        let mut pow4 = 1.0;
        for j in (0..k).rev() {
            pow4 *= 4.0;
            let tmp = rows[j];
            rows[j] = rows[j + 1] + (rows[j + 1] - prev_row_k) / (pow4 - 1.0);
            prev_row_k = tmp;
        }
        if k >= 4 && fabs(rows[0] - rows[1]) <= 1e-14 * fabs(rows[0]) {
            break;
        }
    }
    rows[0]
}

/// ψ and ψ' at one point. `dpsi` is `None` exactly at y = 0 with s ≠ 1/2,
/// where the raw derivative is singular; consumers there must use
/// [`weighted_flux_limit`], the finite limit of y^α ψ'(y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiEval {
    pub psi: f64,
    pub dpsi: Option<f64>,
}

/// Extension profile ψ(y) solving ψ'' + (α/y)ψ' − λψ = 0, ψ(0)=1, ψ(∞)=0:
/// ψ(y) = c_s (√λ y)^s K_s(√λ y), collapsing to e^{−√λ y} at s = 1/2.
pub fn psi_pair(params: &FracParams, lambda: f64, y: f64) -> Result<PsiEval> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::Domain("psi_pair requires lambda > 0"));
    }
    if !y.is_finite() || y < 0.0 {
        return Err(Error::Domain("psi_pair requires y >= 0"));
    }
    let root = sqrt(lambda);
    if params.s == 0.5 {
        let v = exp_or_zero(-root * y);
        return Ok(PsiEval { psi: v, dpsi: Some(-root * v) });
    }
    if y == 0.0 {
        return Ok(PsiEval { psi: 1.0, dpsi: None });
    }
    let z = root * y;
    let s = params.s;
    let k_s = bessel_k_scaled(s, z)?;
    let k_1ms = bessel_k_scaled(1.0 - s, z)?;
    let psi = weighted_k(params.c_s, s, z, k_s);
    let dpsi = -root * weighted_k(params.c_s, s, z, k_1ms);
    Ok(PsiEval { psi, dpsi: Some(dpsi) })
}

/// c · z^p · K(z) given e^z K(z), in log space for large z.
fn weighted_k(c: f64, p: f64, z: f64, k_scaled: f64) -> f64 {
    if z > LOG_SPACE_Z {
        let ln_v = log(c) + p * log(z) + log(k_scaled) - z;
        if ln_v < MIN_NORMAL_LOG {
            return 0.0;
        }
        return exp(ln_v);
    }
    c * pow(z, p) * k_scaled * exp(-z)
}

fn exp_or_zero(x: f64) -> f64 {
    if x < MIN_NORMAL_LOG {
        0.0
    } else {
        exp(x)
    }
}

/// lim_{y→0⁺} y^α ψ'(y) = −d_s λ^s, the weighted flux of the profile.
pub fn weighted_flux_limit(params: &FracParams, lambda: f64) -> Result<f64> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::Domain("weighted_flux_limit requires lambda > 0"));
    }
    Ok(-params.d_s * pow(lambda, params.s))
}
