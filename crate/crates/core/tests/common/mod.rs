//! Independent oracles shared by the integration tests: adaptive quadrature,
//! brute-force metric definitions and finite-difference gradients.

#![allow(dead_code, clippy::excessive_precision)]

use kwmix::linalg::Matrix;
use kwmix::metrics::{ClassifPrediction, PredictiveDistribution};
use kwmix::mixer::{apply_plan, mixed_loss, Batch, MixPlan};
use kwmix::model::{Activation, Dense, Gradients, Mlp, Mode};
use kwmix::RngStream;

// Gauss–Kronrod 7/15 on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod quadrature with absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        tol: f64,
        whole: (f64, f64),
        depth: u32,
    ) -> f64 {
        let (v, err) = whole;
        if err <= tol.max(8.0 * f64::EPSILON * v.abs()) || depth == 0 {
            return v;
        }
        let m = 0.5 * (a + b);
        let l = gk15(f, a, m);
        let r = gk15(f, m, b);
        rec(f, a, m, 0.5 * tol, l, depth - 1) + rec(f, m, b, 0.5 * tol, r, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let whole = gk15(&f, a, b);
    rec(&f, a, b, tol, whole, 40)
}

/// `∫₀ˣ t^{τ−1}(1−t)^{τ−1} dt` up to a τ-dependent constant, for x ≤ ½.
/// For τ < 1 the substitution u = t^τ removes the singularity at 0; for
/// τ ≥ 1 the integrand is scaled by 4^{τ−1} so it peaks at 1.
fn half_integral(x: f64, tau: f64) -> f64 {
    let tol = 1e-14;
    if tau < 1.0 {
        let g = |u: f64| (1.0 - u.powf(1.0 / tau)).powf(tau - 1.0);
        integrate(g, 0.0, x.powf(tau), tol)
    } else {
        let g = |t: f64| (4.0 * t * (1.0 - t)).powf(tau - 1.0);
        // split where the mass of a narrow peak sits
        let w = (1.0 / (8.0 * tau)).sqrt();
        let mut knots = vec![0.0];
        for k in [12.0, 6.0, 3.0, 1.0] {
            let p = 0.5 - k * w;
            if p > 0.0 && p < x {
                knots.push(p);
            }
        }
        knots.push(x);
        knots
            .windows(2)
            .map(|s| integrate(g, s[0], s[1], tol))
            .sum()
    }
}

/// The regularized incomplete beta function I_x(τ, τ) by quadrature of the
/// Beta(τ, τ) density, using the symmetry I_x = 1 − I_{1−x}.
pub fn symmetric_beta_cdf_by_quadrature(x: f64, tau: f64) -> f64 {
    if tau == 1.0 {
        return x;
    }
    let total = 2.0 * half_integral(0.5, tau);
    if x <= 0.5 {
        half_integral(x, tau) / total
    } else {
        1.0 - half_integral(1.0 - x, tau) / total
    }
}

// ---- brute-force metric references ------------------------------------

fn in_bin(v: f64, lo: f64, hi: f64, k: usize, m: usize) -> bool {
    let lower = lo + (hi - lo) * k as f64 / m as f64;
    let upper = lo + (hi - lo) * (k + 1) as f64 / m as f64;
    v >= lower && (k == m - 1 || v < upper)
}

fn argmax_first(p: &[f64]) -> usize {
    let mut best = 0;
    for j in 1..p.len() {
        if p[j] > p[best] {
            best = j;
        }
    }
    best
}

pub fn ece_ref(preds: &[ClassifPrediction], m: usize) -> f64 {
    let n = preds.len() as f64;
    let mut total = 0.0;
    for k in 0..m {
        let mut cnt = 0.0;
        let mut acc = 0.0;
        let mut conf = 0.0;
        for p in preds {
            let c = p.probs.iter().cloned().fold(f64::MIN, f64::max);
            if in_bin(c, 0.0, 1.0, k, m) {
                cnt += 1.0;
                conf += c;
                if argmax_first(&p.probs) == p.label {
                    acc += 1.0;
                }
            }
        }
        if cnt > 0.0 {
            total += cnt / n * (acc / cnt - conf / cnt).abs();
        }
    }
    total
}

pub fn brier_ref(preds: &[ClassifPrediction]) -> f64 {
    let mut total = 0.0;
    for p in preds {
        for (j, q) in p.probs.iter().enumerate() {
            let d = if j == p.label { q - 1.0 } else { *q };
            total += d * d;
        }
    }
    total / preds.len() as f64
}

pub fn nll_ref(preds: &[ClassifPrediction]) -> f64 {
    preds
        .iter()
        .map(|p| -(p.probs[p.label].max(1e-12)).ln())
        .sum::<f64>()
        / preds.len() as f64
}

fn variance_range(preds: &[PredictiveDistribution]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in preds {
        lo = lo.min(p.variance);
        hi = hi.max(p.variance);
    }
    (lo, hi)
}

/// Per non-empty bin: (count, mse, mean variance).
fn variance_table(preds: &[PredictiveDistribution], m: usize) -> Vec<(f64, f64, f64)> {
    let (lo, hi) = variance_range(preds);
    let mut out = Vec::new();
    for k in 0..m {
        let members: Vec<&PredictiveDistribution> = preds
            .iter()
            .filter(|p| in_bin(p.variance, lo, hi, k, m))
            .collect();
        if members.is_empty() {
            continue;
        }
        let c = members.len() as f64;
        let mse = members
            .iter()
            .map(|p| (p.mean - p.target).powi(2))
            .sum::<f64>()
            / c;
        let mv = members.iter().map(|p| p.variance).sum::<f64>() / c;
        out.push((c, mse, mv));
    }
    out
}

pub fn uce_ref(preds: &[PredictiveDistribution], m: usize) -> f64 {
    let n = preds.len() as f64;
    variance_table(preds, m)
        .iter()
        .map(|&(c, mse, mv)| c / n * (mse - mv).abs())
        .sum()
}

pub fn ence_ref(preds: &[PredictiveDistribution], m: usize) -> f64 {
    let t = variance_table(preds, m);
    t.iter()
        .map(|&(_, mse, mv)| (mse.sqrt() - mv.sqrt()).abs() / mv.sqrt())
        .sum::<f64>()
        / t.len() as f64
}

// ---- random instances ---------------------------------------------------

pub fn random_classification(rng: &mut RngStream) -> Vec<ClassifPrediction> {
    let n = 1 + rng.below(300);
    let k = 2 + rng.below(9);
    let sharp = rng.uniform_in(0.1, 6.0);
    (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..k).map(|_| sharp * rng.standard_normal()).collect();
            let mx = z.iter().cloned().fold(f64::MIN, f64::max);
            let e: Vec<f64> = z.iter().map(|v| (v - mx).exp()).collect();
            let s: f64 = e.iter().sum();
            let probs = e.iter().map(|v| v / s).collect();
            ClassifPrediction::new(probs, rng.below(k)).unwrap()
        })
        .collect()
}

pub fn random_regression(rng: &mut RngStream) -> Vec<PredictiveDistribution> {
    let n = 1 + rng.below(300);
    let scale = rng.uniform_in(0.01, 3.0);
    (0..n)
        .map(|_| {
            let mean = rng.standard_normal();
            let variance = scale * (0.05 + rng.uniform());
            let target = mean + variance.sqrt() * rng.standard_normal() * rng.uniform_in(0.5, 2.0);
            PredictiveDistribution::new(mean, variance, target).unwrap()
        })
        .collect()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

// ---- finite differences ---------------------------------------------------

/// A random network of 1 to 3 layers, widths 1 to 6, ReLU or identity hidden
/// activations, small random biases.
pub fn random_network(rng: &mut RngStream) -> Mlp {
    let depth = 1 + rng.below(3);
    let mut dims = vec![1 + rng.below(6)];
    for _ in 0..depth {
        dims.push(1 + rng.below(6));
    }
    let layers = dims
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let data = (0..w[0] * w[1])
                .map(|_| rng.standard_normal() * 0.8)
                .collect();
            let bias = (0..w[1]).map(|_| 0.3 * rng.standard_normal()).collect();
            let act = if i + 2 == dims.len() || rng.below(4) == 0 {
                Activation::Identity
            } else {
                Activation::Relu
            };
            Dense::new(Matrix::from_vec(w[1], w[0], data).unwrap(), bias, act).unwrap()
        })
        .collect();
    let dropout = if rng.below(2) == 0 { 0.0 } else { 0.3 };
    Mlp::from_layers(layers, dropout).unwrap()
}

/// Loss of `model` on `batch` (unmixed) with a dropout stream seeded by
/// `mask_seed`, so repeated calls see the same mask.
pub fn loss_with_mask(model: &Mlp, batch: &Batch, mask_seed: u64) -> (f64, Gradients) {
    let mut rng = RngStream::new(mask_seed);
    let (out, cache) = model.forward(&batch.inputs, Some(&mut rng)).unwrap();
    let mixed = apply_plan(batch, MixPlan::identity(batch.len())).unwrap();
    let l = mixed_loss(&out, &mixed).unwrap();
    let g = model.backward(&cache, &l.grad).unwrap();
    (l.value, g)
}

/// Largest relative error between backprop and central differences over
/// every parameter, `|g − ĝ| / max(|g|, |ĝ|, floor)`.
pub fn max_gradient_error(
    model: &mut Mlp,
    batch: &Batch,
    mask_seed: u64,
    h: f64,
    floor: f64,
) -> f64 {
    model.set_mode(Mode::Train);
    let (_, grads) = loss_with_mask(model, batch, mask_seed);
    let mut worst: f64 = 0.0;
    for l in 0..model.layers().len() {
        let nw = model.layers()[l].weights.as_slice().len();
        let nb = model.layers()[l].bias.len();
        for idx in 0..nw + nb {
            let read = |m: &Mlp| {
                if idx < nw {
                    m.layers()[l].weights.as_slice()[idx]
                } else {
                    m.layers()[l].bias[idx - nw]
                }
            };
            let write = |m: &mut Mlp, v: f64| {
                if idx < nw {
                    m.layers_mut()[l].weights.as_mut_slice()[idx] = v;
                } else {
                    m.layers_mut()[l].bias[idx - nw] = v;
                }
            };
            let orig = read(model);
            write(model, orig + h);
            let up = loss_with_mask(model, batch, mask_seed).0;
            write(model, orig - h);
            let down = loss_with_mask(model, batch, mask_seed).0;
            write(model, orig);
            let numeric = (up - down) / (2.0 * h);
            let analytic = if idx < nw {
                grads.layers[l].weights.as_slice()[idx]
            } else {
                grads.layers[l].bias[idx - nw]
            };
            let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(floor);
            worst = worst.max(rel);
        }
    }
    worst
}

/// A batch matching the network: regression targets for one output,
/// classes otherwise.
pub fn random_batch_for(model: &Mlp, rng: &mut RngStream) -> Batch {
    let n = 1 + rng.below(8);
    let d = model.input_dim();
    let k = model.output_dim();
    let x = Matrix::from_vec(n, d, (0..n * d).map(|_| rng.standard_normal()).collect()).unwrap();
    if k == 1 {
        let y = Matrix::column(&(0..n).map(|_| rng.standard_normal()).collect::<Vec<_>>());
        Batch::regression(x, y).unwrap()
    } else {
        let labels = (0..n).map(|_| rng.below(k)).collect();
        Batch::classification(x, labels, k).unwrap()
    }
}
