//! Small quadrature toolbox: fixed Gauss–Legendre and adaptive Gauss–Kronrod.

/// 10-point Gauss–Legendre nodes on `[-1, 1]` (positive half).
const GL10_X: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL10_W: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_3,
    0.219_086_362_515_982,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// Integrates `f` over `[a, b]` with the 10-point Gauss–Legendre rule.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    GL10_X
        .iter()
        .zip(GL10_W.iter())
        .map(|(&x, &w)| w * (f(mid + half * x) + f(mid - half * x)))
        .sum::<f64>()
        * half
}

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

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(mid);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(mid - dx) + f(mid + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration of a smooth integrand.
///
/// The interval is first cut into `panels` pieces; each piece is bisected
/// until its error estimate falls below its share of `rel_tol * int |f|`,
/// so integrals that cancel to zero still terminate.
pub fn adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, panels: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let pieces: Vec<(f64, f64)> = (0..panels)
        .map(|i| (a + i as f64 * width, a + (i + 1) as f64 * width))
        .collect();
    let scale: f64 = pieces
        .iter()
        .map(|&(l, r)| gk15(&|x| f(x).abs(), l, r).0)
        .sum();
    let target = (rel_tol * scale).max(f64::MIN_POSITIVE);
    let mut stack: Vec<(f64, f64, usize)> = pieces.into_iter().map(|(l, r)| (l, r, 0)).collect();
    let mut total = 0.0;
    while let Some((l, r, depth)) = stack.pop() {
        let (val, err) = gk15(&f, l, r);
        let share = target * (r - l) / (b - a);
        if err <= share || depth >= 40 {
            total += val;
        } else {
            let m = 0.5 * (l + r);
            stack.push((l, m, depth + 1));
            stack.push((m, r, depth + 1));
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let v = gauss_legendre(|x| x.powi(19) + 3.0 * x * x, -1.0, 2.0);
        let exact = (2f64.powi(20) - 1.0) / 20.0 + (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let v = adaptive(|x| (-x * x / 1e-4).exp(), -5.0, 5.0, 1e-12, 4);
        let exact = (std::f64::consts::PI * 1e-4).sqrt();
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn adaptive_terminates_on_cancelling_integrand() {
        let v = adaptive(
            |x| (2.0 * std::f64::consts::PI * x).sin(),
            0.0,
            1.0,
            1e-14,
            8,
        );
        assert!(v.abs() < 1e-14);
    }
}
