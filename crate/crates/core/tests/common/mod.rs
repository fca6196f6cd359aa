//! Independent oracles and the criterion checks shared by the module tests
//! and the acceptance target. Each check returns a one-line summary on
//! success and a description of the first violation on failure.

#![allow(dead_code)]

use fcnn_core::baselines::{train_bayes, train_tree, TreeConfig, TreeNode};
use fcnn_core::cnn::{CnnModel, ConvLayer, DenseLayer, Layer, PoolLayer};
use fcnn_core::datasets::{generate, split, Dataset, DatasetKind, Sample, SplitSpec};
use fcnn_core::eval::roc;
use fcnn_core::fuzzy::MembershipMatrix;
use fcnn_core::fuzzy::{
    gaussian, pi_function, s_function, trapezoid, triangle, Family, GaussParams, PiParams, SParams, TermPartition,
    TrapezoidParams, TriangleParams,
};
use fcnn_core::imagemap::{render, LayoutSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn sweep(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

fn monotone(values: &[f64], rising: bool) -> bool {
    values
        .windows(2)
        .all(|w| if rising { w[1] >= w[0] } else { w[1] <= w[0] })
}

/// Range, breakpoints and ramp monotonicity of every family on 10,000-point
/// sweeps, plus partition-of-unity for the default trapezoid terms.
pub fn check_membership_math() -> Check {
    const N: usize = 10_000;
    let tol = 1e-12;

    let tp = TrapezoidParams::new(1.0, 3.0, 5.0, 9.0).map_err(|e| e.to_string())?;
    let tri = TriangleParams::new(-2.0, 0.5, 4.0).map_err(|e| e.to_string())?;
    let sp = SParams::new(0.0, 1.0, 2.0).map_err(|e| e.to_string())?;
    let pp = PiParams::new(2.0, 5.0).map_err(|e| e.to_string())?;
    let gp = GaussParams::new(1.5, 0.7).map_err(|e| e.to_string())?;

    let families: [(&str, f64, f64, &dyn Fn(f64) -> f64); 5] = [
        ("trapezoid", 0.0, 10.0, &|x| trapezoid(x, &tp)),
        ("triangle", -3.0, 5.0, &|x| triangle(x, &tri)),
        ("s", -1.0, 3.0, &|x| s_function(x, &sp)),
        ("pi", 2.0, 8.0, &|x| pi_function(x, &pp)),
        ("gaussian", -3.0, 6.0, &|x| gaussian(x, &gp)),
    ];
    for (name, lo, hi, f) in families {
        for x in sweep(lo, hi, N) {
            let v = f(x);
            ensure((0.0..=1.0).contains(&v), || format!("{name}({x}) = {v} outside [0,1]"))?;
        }
    }

    let close = |name: &str, got: f64, want: f64| {
        ensure((got - want).abs() <= tol, || {
            format!("{name}: got {got}, expected {want}")
        })
    };
    close("trapezoid rise midpoint", trapezoid(2.0, &tp), 0.5)?;
    close("trapezoid fall midpoint", trapezoid(7.0, &tp), 0.5)?;
    close("trapezoid plateau", trapezoid(4.0, &tp), 1.0)?;
    close("trapezoid outside", trapezoid(0.5, &tp), 0.0)?;
    close("triangle apex", triangle(0.5, &tri), 1.0)?;
    close("triangle rise midpoint", triangle(-0.75, &tri), 0.5)?;
    close("s crossover", s_function(1.0, &sp), 0.5)?;
    close("s quarter", s_function(0.5, &sp), 0.125)?;
    close("s top", s_function(2.0, &sp), 1.0)?;
    close("pi center", pi_function(5.0, &pp), 1.0)?;
    close("pi left crossover", pi_function(4.0, &pp), 0.5)?;
    close("pi right crossover", pi_function(6.0, &pp), 0.5)?;
    close("pi foot", pi_function(3.0, &pp), 0.0)?;
    close("gaussian center", gaussian(1.5, &gp), 1.0)?;
    close("gaussian one sigma", gaussian(2.2, &gp), (-0.5f64).exp())?;
    close("gaussian minus one sigma", gaussian(0.8, &gp), (-0.5f64).exp())?;

    let ramp = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| sweep(a, b, N).map(f).collect::<Vec<_>>();
    let ramps: [(&str, Vec<f64>, bool); 8] = [
        ("trapezoid rise", ramp(&|x| trapezoid(x, &tp), 1.0, 3.0), true),
        ("trapezoid fall", ramp(&|x| trapezoid(x, &tp), 5.0, 9.0), false),
        ("triangle rise", ramp(&|x| triangle(x, &tri), -2.0, 0.5), true),
        ("triangle fall", ramp(&|x| triangle(x, &tri), 0.5, 4.0), false),
        ("s rise", ramp(&|x| s_function(x, &sp), -1.0, 3.0), true),
        ("pi rise", ramp(&|x| pi_function(x, &pp), 2.0, 5.0), true),
        ("pi fall", ramp(&|x| pi_function(x, &pp), 5.0, 8.0), false),
        ("gaussian fall", ramp(&|x| gaussian(x, &gp), 1.5, 6.0), false),
    ];
    for (name, values, rising) in &ramps {
        ensure(monotone(values, *rising), || format!("{name} is not monotone"))?;
    }

    let (lo, hi) = (-3.7, 12.4);
    let part = TermPartition::build(lo, hi, Family::Trapezoid).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for x in sweep(lo, hi, N) {
        let sum: f64 = part.memberships(x).iter().sum();
        worst = worst.max((sum - 1.0).abs());
    }
    ensure(worst <= 1e-9, || {
        format!("trapezoid partition sum deviates by {worst:e}")
    })?;
    Ok(format!(
        "5 families x {N} points in [0,1], breakpoints exact, ramps monotone, partition sum error {worst:.1e}"
    ))
}

/// Lit-pixel count of a single cell with a 20 px interior, for every
/// μ in {0, 0.01, ..., 1}, plus byte determinism of the rendering.
pub fn check_image_mapping() -> Check {
    let layout = LayoutSpec {
        image_side: 21,
        repetition: 1,
        margin: 1,
        foreground: 255,
        background: 0,
    };
    let geo = layout.geometry(1, 1).map_err(|e| e.to_string())?;
    ensure(geo.inner == 20, || {
        format!("cell interior is {}, expected 20", geo.inner)
    })?;
    let mut worst = 0.0f64;
    for i in 0..=100 {
        let mu = i as f64 / 100.0;
        let m = MembershipMatrix::new(vec![mu], 1, 1).map_err(|e| e.to_string())?;
        let img = render(&m, &layout).map_err(|e| e.to_string())?;
        let lit = img.count_value(255) as f64;
        let target = mu * 400.0;
        let bound = 2.0 * target.sqrt() + 1.0;
        ensure((lit - target).abs() <= bound, || {
            format!("mu={mu}: {lit} lit pixels, expected {target} ± {bound}")
        })?;
        if i == 0 {
            ensure(lit == 0.0, || format!("mu=0 lit {lit} pixels"))?;
        }
        if i == 100 {
            ensure(lit == 400.0, || format!("mu=1 lit {lit} pixels"))?;
        }
        worst = worst.max((lit - target).abs());
        let again = render(&m, &layout).map_err(|e| e.to_string())?;
        ensure(
            img.to_png_bytes().map_err(|e| e.to_string())? == again.to_png_bytes().map_err(|e| e.to_string())?,
            || format!("mu={mu}: repeated render differs"),
        )?;
    }
    Ok(format!(
        "101 levels within bound (max deviation {worst} px), renders byte-identical"
    ))
}

/// Small conv → pool → dense model on an 8×8 input with random weights.
pub fn tiny_cnn(seed: u64) -> CnnModel {
    let layers = vec![
        Layer::Conv(ConvLayer::zeros(1, 2, 3, 1)),
        Layer::MaxPool(PoolLayer::square(2)),
        Layer::Flatten,
        Layer::Dense(DenseLayer::zeros(18, 3)),
    ];
    let mut model = CnnModel::new([1, 8, 8], layers, 3).expect("valid tiny model");
    model.init_weights(seed);
    // non-zero biases so their gradients are exercised too
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb1a5);
    for layer in model.layers_mut() {
        match layer {
            Layer::Conv(c) => c.biases.iter_mut().for_each(|b| *b = rng.random_range(-0.3..0.3)),
            Layer::Dense(d) => d.biases.iter_mut().for_each(|b| *b = rng.random_range(-0.3..0.3)),
            _ => {}
        }
    }
    model
}

/// Relative error with a floor on the denominator so that parameters whose
/// true gradient is essentially zero are compared in absolute terms.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Central finite differences against backprop over every parameter.
pub fn check_cnn_gradients() -> Check {
    let h = 1e-4;
    let mut worst = 0.0f64;
    let mut count = 0;
    for trial in 0..3u64 {
        let mut model = tiny_cnn(100 + trial);
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let x: Vec<f64> = (0..64).map(|_| rng.random_range(0.0..1.0)).collect();
        let label = trial as usize % 3;
        let (grads, _) = model.backward_tensor(&x, label).map_err(|e| e.to_string())?;
        let sizes: Vec<usize> = model.param_slices().iter().map(|s| s.len()).collect();
        for (si, &len) in sizes.iter().enumerate() {
            for pi in 0..len {
                let orig = model.param_slices()[si][pi];
                model.param_slices_mut()[si][pi] = orig + h;
                let up = model.loss(&x, label).map_err(|e| e.to_string())?;
                model.param_slices_mut()[si][pi] = orig - h;
                let down = model.loss(&x, label).map_err(|e| e.to_string())?;
                model.param_slices_mut()[si][pi] = orig;
                let numeric = (up - down) / (2.0 * h);
                let analytic = grads.0[si][pi];
                let err = relative_error(analytic, numeric);
                ensure(err < 1e-4, || {
                    format!(
                        "trial {trial}, slice {si}, param {pi}: analytic {analytic}, numeric {numeric}, rel {err:e}"
                    )
                })?;
                worst = worst.max(err);
                count += 1;
            }
        }
    }
    Ok(format!("{count} parameters checked, max relative error {worst:.2e}"))
}

/// Multivariate normal density through an explicit 2×2 inverse and
/// determinant, with the same ML covariance and ridge as the classifier.
pub fn bayes_oracle_posterior(ds: &Dataset, x: &[f64]) -> Vec<f64> {
    assert_eq!(ds.feature_count(), 2);
    let k = ds.class_count();
    let mut joint = Vec::with_capacity(k);
    for c in 0..k {
        let pts: Vec<&Sample> = ds.samples().iter().filter(|s| s.label == c).collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|s| s.features[0]).sum::<f64>() / n;
        let my = pts.iter().map(|s| s.features[1]).sum::<f64>() / n;
        let sxx = pts.iter().map(|s| (s.features[0] - mx).powi(2)).sum::<f64>() / n;
        let syy = pts.iter().map(|s| (s.features[1] - my).powi(2)).sum::<f64>() / n;
        let sxy = pts
            .iter()
            .map(|s| (s.features[0] - mx) * (s.features[1] - my))
            .sum::<f64>()
            / n;
        let ridge = 1e-6 * (sxx + syy) / 2.0;
        let (a, b, d) = (sxx + ridge, sxy, syy + ridge);
        let det = a * d - b * b;
        let (dx, dy) = (x[0] - mx, x[1] - my);
        let quad = (d * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det;
        let density = (-0.5 * quad).exp() / (2.0 * std::f64::consts::PI * det.sqrt());
        joint.push(n / ds.len() as f64 * density);
    }
    let total: f64 = joint.iter().sum();
    joint.into_iter().map(|j| j / total).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleTree {
    Leaf(usize),
    Split(usize, f64, Box<OracleTree>, Box<OracleTree>),
}

fn oracle_entropy(labels: &[usize], k: usize) -> f64 {
    let mut h = vec![0usize; k];
    for &l in labels {
        h[l] += 1;
    }
    let n = labels.len() as f64;
    h.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Brute-force ID3: every feature, every midpoint between distinct values,
/// children counted from scratch; first strictly best split wins.
pub fn oracle_tree(rows: &[Vec<f64>], labels: &[usize], k: usize, depth: usize) -> OracleTree {
    let mut hist = vec![0usize; k];
    for &l in labels {
        hist[l] += 1;
    }
    let majority = (0..k).fold(0, |best, c| if hist[c] > hist[best] { c } else { best });
    if depth == 0 || hist.iter().filter(|&&c| c > 0).count() <= 1 {
        return OracleTree::Leaf(majority);
    }
    let n = rows.len();
    let parent = oracle_entropy(labels, k);
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..rows[0].len() {
        let mut values: Vec<f64> = rows.iter().map(|r| r[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = 0.5 * (w[0] + w[1]);
            let left: Vec<usize> = (0..n).filter(|&i| rows[i][f] < t).map(|i| labels[i]).collect();
            let right: Vec<usize> = (0..n).filter(|&i| rows[i][f] >= t).map(|i| labels[i]).collect();
            let children = (left.len() as f64 * oracle_entropy(&left, k)
                + right.len() as f64 * oracle_entropy(&right, k))
                / n as f64;
            let gain = parent - children;
            if best.is_none_or(|(_, _, g)| gain > g) {
                best = Some((f, t, gain));
            }
        }
    }
    let Some((f, t, _)) = best else {
        return OracleTree::Leaf(majority);
    };
    let (mut lr, mut ll, mut rr, mut rl) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (r, &l) in rows.iter().zip(labels) {
        if r[f] < t {
            lr.push(r.clone());
            ll.push(l);
        } else {
            rr.push(r.clone());
            rl.push(l);
        }
    }
    OracleTree::Split(
        f,
        t,
        Box::new(oracle_tree(&lr, &ll, k, depth - 1)),
        Box::new(oracle_tree(&rr, &rl, k, depth - 1)),
    )
}

pub fn to_oracle(node: &TreeNode) -> OracleTree {
    match node {
        TreeNode::Leaf { class, .. } => OracleTree::Leaf(*class),
        TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
        } => OracleTree::Split(
            *feature,
            *threshold,
            Box::new(to_oracle(left)),
            Box::new(to_oracle(right)),
        ),
    }
}

/// Mann–Whitney count over all positive/negative pairs, ties worth ½.
pub fn pair_auc(scores: &[f64], truth: &[bool]) -> f64 {
    let mut twice = 0usize;
    let (mut p, mut n) = (0usize, 0usize);
    for (i, &ti) in truth.iter().enumerate() {
        if ti {
            p += 1;
        } else {
            n += 1;
        }
        for (j, &tj) in truth.iter().enumerate() {
            if ti && !tj {
                if scores[i] > scores[j] {
                    twice += 2;
                } else if scores[i] == scores[j] {
                    twice += 1;
                }
            }
        }
    }
    twice as f64 / (2.0 * p as f64 * n as f64)
}

/// Bayes posteriors, depth-2 trees and AUC against their oracles.
pub fn check_oracles() -> Check {
    let ds = generate(DatasetKind::CrescentMoon, 100, 0.2, 11).map_err(|e| e.to_string())?;
    let stats = train_bayes(&ds).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let x = [rng.random_range(-1.5..2.5), rng.random_range(-1.0..1.5)];
        let got = stats.posterior(&x).map_err(|e| e.to_string())?;
        let want = bayes_oracle_posterior(&ds, &x);
        for (g, w) in got.iter().zip(&want) {
            worst = worst.max((g - w).abs());
        }
    }
    ensure(worst <= 1e-10, || {
        format!("Bayes posterior differs from oracle by {worst:e}")
    })?;

    let mut trees = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(5..=50);
        let samples: Vec<Sample> = (0..n)
            .map(|_| {
                // coarse grid values so tied thresholds and gains occur
                let x = (rng.random_range(0..12) as f64) * 0.5;
                let y = (rng.random_range(0..12) as f64) * 0.5;
                let label = usize::from(x + y + rng.random_range(-2.0..2.0) > 5.5);
                Sample::new(vec![x, y], label)
            })
            .collect();
        let ds = Dataset::new(samples, vec!["a".into(), "b".into()], 2).map_err(|e| e.to_string())?;
        let tree = train_tree(
            &ds,
            &TreeConfig {
                max_depth: Some(2),
                min_leaf: 1,
            },
        )
        .map_err(|e| e.to_string())?;
        let rows: Vec<Vec<f64>> = ds.samples().iter().map(|s| s.features.clone()).collect();
        let want = oracle_tree(&rows, &ds.labels(), 2, 2);
        ensure(to_oracle(&tree) == want, || {
            format!(
                "seed {seed}: tree {:?} differs from exhaustive search {want:?}",
                to_oracle(&tree)
            )
        })?;
        trees += 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for trial in 0..10 {
        let truth: Vec<bool> = (0..50).map(|i| i % 3 == 0 || i == 1).collect();
        let scores: Vec<f64> = (0..50).map(|_| rng.random_range(0..8) as f64 / 8.0).collect();
        let got = roc(&scores, &truth).map_err(|e| e.to_string())?.auc;
        let want = pair_auc(&scores, &truth);
        ensure(got == want, || format!("trial {trial}: AUC {got} vs pair count {want}"))?;
    }
    Ok(format!(
        "Bayes max |Δ| {worst:.1e} on 200 points, {trees} depth-2 trees match, 10 AUCs exact"
    ))
}

/// 400 samples split 70/30.
pub fn check_split_protocol() -> Check {
    let ds = generate(DatasetKind::TwoSpirals, 200, 0.3, 1).map_err(|e| e.to_string())?;
    let (train, test) = split(&ds, SplitSpec::new(0.7, 2).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure(ds.len() == 400 && train.len() == 280 && test.len() == 120, || {
        format!("{} samples split into {}/{}", ds.len(), train.len(), test.len())
    })?;
    Ok("400 samples -> 280 train / 120 test".into())
}
