use super::rng::RngStream;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Below this argument the Lanczos sum is used, above it the Stirling series.
pub(crate) const STIRLING_MIN: f64 = 10.0;

/// ln Γ(z) for z > 0.
pub fn log_gamma(z: f64) -> f64 {
    if z >= STIRLING_MIN {
        (z - 0.5) * z.ln() - z + HALF_LN_2PI + stirling_correction(z)
    } else if z < 0.5 {
        // reflection: Γ(z)Γ(1-z) = π / sin(πz)
        (std::f64::consts::PI / (std::f64::consts::PI * z).sin()).ln() - log_gamma(1.0 - z)
    } else {
        let z = z - 1.0;
        let mut sum = LANCZOS_COEF[0];
        for (k, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            sum += c / (z + k as f64);
        }
        let t = z + LANCZOS_G + 0.5;
        HALF_LN_2PI + (z + 0.5) * t.ln() - t + sum.ln()
    }
}

/// δ(z) = ln Γ(z) − [(z − ½) ln z − z + ½ ln 2π], valid for z ≥ 10.
pub(crate) fn stirling_correction(z: f64) -> f64 {
    // B_{2k} / (2k (2k - 1)), k = 1..8
    const C: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
        -3617.0 / 122_400.0,
    ];
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut acc = 0.0;
    for &c in C.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}

/// Log of a Gamma(shape, 1) variate.
///
/// Marsaglia–Tsang squeeze/rejection for shape ≥ 1; smaller shapes use the
/// boost `G(s) = G(s + 1) · U^{1/s}`, carried out in log space so that tiny
/// shapes do not underflow to zero.
pub(crate) fn log_gamma_variate(shape: f64, rng: &mut RngStream) -> f64 {
    if shape < 1.0 {
        let boosted = log_gamma_variate(shape + 1.0, rng);
        return boosted + rng.uniform_open().ln() / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = rng.standard_normal();
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = rng.uniform_open();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return (d * v).ln();
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return (d * v).ln();
        }
    }
}
