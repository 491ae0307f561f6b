//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::rc::Rc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dti_core::adversarial::{
    alignment_matrix, alignment_rows, composite_generator_loss, discriminator_loss, evaluate_set, generator_adv_loss,
    mse_loss, train, TrainConfig,
};
use dti_core::chem::{parse_smiles, random_smiles};
use dti_core::data::{
    apply_filter_threshold, featurize_table, split, synth_table, FeatureCache, FeaturizeConfig, InteractionRecord,
    InteractionTable, SplitScheme, SynthConfig, SynthMode,
};
use dti_core::experiment::{
    cmd_evaluate, cmd_featurize, cmd_split, cmd_synth_data, cmd_train, load_prepared, run_cell, ExperimentConfig,
};
use dti_core::fingerprint::ecfp;
use dti_core::metrics::{concordance_index, concordance_index_fast, rmse};
use dti_core::nn::{
    graphconv_forward, Activation, BoundGraphConv, BoundMlp, DtiModel, EncodedSet, FeatureStandardizer,
    GraphConvParams, Mlp, ModelConfig, ModelVariant, MolBatch,
};
use dti_core::protein::{psc, AMINO_ACIDS, PSC_LEN};
use dti_core::tensor::{grad_check, Graph, Tensor, Var, DEFAULT_LOG_EPS};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

// ---------------------------------------------------------------------------
// 1. gradient suite

const GRAD_POINTS: usize = 20;
const GRAD_TOL: f64 = 1e-4;
const GRAD_STEP: f64 = 1e-6;

/// Uniform values in `[lo, hi]` kept at least 1e-3 away from zero, so that
/// kinks of relu and abs stay outside the finite-difference stencil.
fn away_from_zero(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n)
        .map(|_| loop {
            let x = rng.gen_range(lo..hi);
            if x.abs() > 1e-3 {
                break x;
            }
        })
        .collect()
}

fn rand_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Tensor {
    Tensor::matrix(r, c, away_from_zero(rng, r * c, -2.0, 2.0)).unwrap()
}

/// Reduces a node to a scalar through a fixed random weighting.
fn weighted_sum(g: &mut Graph, x: Var, weights: &Tensor) -> dti_core::Result<Var> {
    let w = g.constant(weights.clone());
    let p = g.mul(x, w)?;
    Ok(g.sum(p))
}

fn weights_like(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

type Case = Box<dyn Fn(&mut ChaCha8Rng) -> dti_core::Result<f64>>;

fn unary_case(shape_out: Vec<usize>, lo: f64, hi: f64, op: fn(&mut Graph, Var) -> dti_core::Result<Var>) -> Case {
    Box::new(move |rng| {
        let x = Tensor::matrix(3, 4, away_from_zero(rng, 12, lo, hi)).unwrap();
        let w = weights_like(rng, &shape_out);
        grad_check(
            |g, v| {
                let y = op(g, v[0])?;
                weighted_sum(g, y, &w)
            },
            &[x],
            GRAD_STEP,
        )
    })
}

fn gradient_cases() -> Vec<(&'static str, Case)> {
    let mut cases: Vec<(&'static str, Case)> = vec![
        (
            "matmul",
            Box::new(|rng| {
                let (a, b, w) = (
                    rand_matrix(rng, 3, 4),
                    rand_matrix(rng, 4, 2),
                    weights_like(rng, &[3, 2]),
                );
                grad_check(
                    |g, v| {
                        let y = g.matmul(v[0], v[1])?;
                        weighted_sum(g, y, &w)
                    },
                    &[a, b],
                    GRAD_STEP,
                )
            }),
        ),
        (
            "add",
            Box::new(|rng| {
                let (a, b, w) = (
                    rand_matrix(rng, 3, 4),
                    rand_matrix(rng, 3, 4),
                    weights_like(rng, &[3, 4]),
                );
                grad_check(
                    |g, v| {
                        let y = g.add(v[0], v[1])?;
                        weighted_sum(g, y, &w)
                    },
                    &[a, b],
                    GRAD_STEP,
                )
            }),
        ),
        (
            "add row bias",
            Box::new(|rng| {
                let a = rand_matrix(rng, 3, 4);
                let b = Tensor::from_vec(away_from_zero(rng, 4, -1.0, 1.0));
                let w = weights_like(rng, &[3, 4]);
                grad_check(
                    |g, v| {
                        let y = g.add(v[0], v[1])?;
                        weighted_sum(g, y, &w)
                    },
                    &[a, b],
                    GRAD_STEP,
                )
            }),
        ),
        (
            "sub",
            Box::new(|rng| {
                let (a, b, w) = (
                    rand_matrix(rng, 3, 4),
                    rand_matrix(rng, 3, 4),
                    weights_like(rng, &[3, 4]),
                );
                grad_check(
                    |g, v| {
                        let y = g.sub(v[0], v[1])?;
                        weighted_sum(g, y, &w)
                    },
                    &[a, b],
                    GRAD_STEP,
                )
            }),
        ),
        (
            "mul",
            Box::new(|rng| {
                let (a, b, w) = (
                    rand_matrix(rng, 3, 4),
                    rand_matrix(rng, 3, 4),
                    weights_like(rng, &[3, 4]),
                );
                grad_check(
                    |g, v| {
                        let y = g.mul(v[0], v[1])?;
                        weighted_sum(g, y, &w)
                    },
                    &[a, b],
                    GRAD_STEP,
                )
            }),
        ),
        ("relu", unary_case(vec![3, 4], -2.0, 2.0, |g, x| Ok(g.relu(x)))),
        ("sigmoid", unary_case(vec![3, 4], -4.0, 4.0, |g, x| Ok(g.sigmoid(x)))),
        ("abs", unary_case(vec![3, 4], -2.0, 2.0, |g, x| Ok(g.abs(x)))),
        ("square", unary_case(vec![3, 4], -2.0, 2.0, |g, x| Ok(g.square(x)))),
        (
            "log_guarded",
            unary_case(vec![3, 4], 0.05, 3.0, |g, x| g.log_guarded(x, DEFAULT_LOG_EPS)),
        ),
        (
            "scalar_mul",
            unary_case(vec![3, 4], -2.0, 2.0, |g, x| Ok(g.scalar_mul(x, -1.7))),
        ),
        (
            "add_scalar",
            unary_case(vec![3, 4], -2.0, 2.0, |g, x| Ok(g.add_scalar(x, 0.3))),
        ),
        ("neg", unary_case(vec![3, 4], -2.0, 2.0, |g, x| Ok(g.neg(x)))),
        (
            "map",
            unary_case(vec![3, 4], -2.0, 2.0, |g, x| {
                Ok(g.map(x, |t| t.sin() * t, |t| t.cos() * t + t.sin()))
            }),
        ),
        (
            "sum",
            Box::new(|rng| {
                let a = rand_matrix(rng, 3, 4);
                grad_check(
                    |g, v| {
                        let s = g.square(v[0]);
                        Ok(g.sum(s))
                    },
                    &[a],
                    GRAD_STEP,
                )
            }),
        ),
        (
            "mean",
            Box::new(|rng| {
                let a = rand_matrix(rng, 3, 4);
                grad_check(
                    |g, v| {
                        let s = g.square(v[0]);
                        g.mean(s)
                    },
                    &[a],
                    GRAD_STEP,
                )
            }),
        ),
    ];
    for axis in [0usize, 1] {
        cases.push((
            if axis == 0 { "concat rows" } else { "concat columns" },
            Box::new(move |rng| {
                let (a, b) = if axis == 0 {
                    (rand_matrix(rng, 2, 3), rand_matrix(rng, 4, 3))
                } else {
                    (rand_matrix(rng, 3, 2), rand_matrix(rng, 3, 4))
                };
                let w = weights_like(rng, if axis == 0 { &[6, 3] } else { &[3, 6] });
                grad_check(
                    |g, v| {
                        let y = g.concat(&[v[0], v[1]], axis)?;
                        weighted_sum(g, y, &w)
                    },
                    &[a, b],
                    GRAD_STEP,
                )
            }),
        ));
    }
    cases.push((
        "gather",
        Box::new(|rng| {
            let a = rand_matrix(rng, 3, 4);
            let idx: Vec<usize> = (0..10).map(|_| rng.gen_range(0..12)).collect();
            let w = weights_like(rng, &[5, 2]);
            grad_check(
                |g, v| {
                    let y = g.gather(v[0], idx.clone(), vec![5, 2])?;
                    weighted_sum(g, y, &w)
                },
                &[a],
                GRAD_STEP,
            )
        }),
    ));
    cases.push((
        "row_group_sum",
        Box::new(|rng| {
            let a = rand_matrix(rng, 6, 3);
            let groups: Vec<Vec<usize>> = (0..4)
                .map(|_| (0..rng.gen_range(0..5)).map(|_| rng.gen_range(0..6)).collect())
                .collect();
            let groups = Rc::new(groups);
            let w = weights_like(rng, &[4, 3]);
            grad_check(
                |g, v| {
                    let y = g.row_group_sum(v[0], Rc::clone(&groups))?;
                    weighted_sum(g, y, &w)
                },
                &[a],
                GRAD_STEP,
            )
        }),
    ));
    cases.push((
        "alignment rows",
        Box::new(|rng| {
            let n = rng.gen_range(3..9);
            let values = Tensor::column(away_from_zero(rng, n, -2.0, 2.0));
            let include_self = rng.gen_bool(0.5);
            let k = rng.gen_range(1..n);
            let w = weights_like(rng, &[n, k]);
            grad_check(
                |g, v| {
                    let y = alignment_rows(g, v[0], k, include_self)?;
                    weighted_sum(g, y, &w)
                },
                &[values],
                GRAD_STEP,
            )
        }),
    ));
    cases.push((
        "graph convolution",
        Box::new(|rng| {
            let mut params = GraphConvParams::new(&[5, 4], rng).unwrap();
            for l in &mut params.layers {
                l.bias.data_mut().iter_mut().for_each(|b| *b = rng.gen_range(-0.3..0.3));
            }
            let pool = ["CC(=O)Nc1ccc(O)cc1", "OCC=O", "c1ccncc1", "CN", "[Na+].[Cl-]"];
            let graphs: Vec<_> = pool.iter().map(|s| parse_smiles(s).unwrap()).collect();
            let batch = MolBatch::new(&graphs.iter().collect::<Vec<_>>());
            let point: Vec<Tensor> = params
                .layers
                .iter()
                .flat_map(|l| [l.w_self.clone(), l.w_neigh.clone(), l.bias.clone()])
                .collect();
            let w = weights_like(rng, &[pool.len(), 4]);
            grad_check(
                |g, v| {
                    let bound = BoundGraphConv {
                        layers: v.chunks(3).map(|c| [c[0], c[1], c[2]]).collect(),
                    };
                    let y = graphconv_forward(g, &bound, &batch)?;
                    weighted_sum(g, y, &w)
                },
                &point,
                GRAD_STEP,
            )
        }),
    ));

    // composed losses on a small generator + discriminator pair
    for loss in ["mse", "discriminator", "generator adversarial", "composite"] {
        cases.push((
            match loss {
                "mse" => "mse loss",
                "discriminator" => "discriminator loss",
                "generator adversarial" => "generator adversarial loss",
                _ => "composite generator loss",
            },
            Box::new(move |rng| composed_loss_check(rng, loss)),
        ));
    }
    cases
}

fn mlp_point(mlp: &Mlp) -> Vec<Tensor> {
    mlp.layers
        .iter()
        .flat_map(|l| [l.weight.clone(), l.bias.clone()])
        .collect()
}

fn composed_loss_check(rng: &mut ChaCha8Rng, loss: &str) -> dti_core::Result<f64> {
    let (n, d, k) = (8, 5, 3);
    let mut generator = Mlp::new(&[d, 6, 1], Activation::Relu, Activation::Identity, rng)?;
    let mut discriminator = Mlp::new(&[k, 4, 1], Activation::Relu, Activation::Sigmoid, rng)?;
    for l in generator.layers.iter_mut().chain(discriminator.layers.iter_mut()) {
        l.bias.data_mut().iter_mut().for_each(|b| *b = rng.gen_range(-0.3..0.3));
    }
    let x = rand_matrix(rng, n, d);
    let y = Tensor::column((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect());
    let include_self = rng.gen_bool(0.5);
    let lambda = rng.gen_range(0.05..1.0);
    let n_gen = generator.layers.len() * 2;
    let mut point = mlp_point(&generator);
    point.extend(mlp_point(&discriminator));

    grad_check(
        |g, v| {
            let gen = BoundMlp::from_vars(&v[..n_gen], Activation::Relu, Activation::Identity);
            let disc = BoundMlp::from_vars(&v[n_gen..], Activation::Relu, Activation::Sigmoid);
            let xv = g.constant(x.clone());
            let yv = g.constant(y.clone());
            let pred = gen.forward(g, xv)?;
            let mse = mse_loss(g, pred, yv)?;
            if loss == "mse" {
                return Ok(mse);
            }
            let fake_rows = alignment_rows(g, pred, k, include_self)?;
            let d_fake = disc.forward(g, fake_rows)?;
            let adv = generator_adv_loss(g, d_fake, DEFAULT_LOG_EPS)?;
            match loss {
                "generator adversarial" => Ok(adv),
                "composite" => composite_generator_loss(g, mse, adv, lambda),
                _ => {
                    let real_rows = g.constant(alignment_matrix(y.data(), k, include_self)?.to_tensor());
                    let d_real = disc.forward(g, real_rows)?;
                    discriminator_loss(g, d_real, d_fake, DEFAULT_LOG_EPS)
                }
            }
        },
        &point,
        GRAD_STEP,
    )
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cases = gradient_cases();
    let mut worst = (0.0f64, "");
    for (name, case) in &cases {
        for point in 0..GRAD_POINTS {
            let e = case(&mut rng).map_err(|e| format!("{name} point {point}: {e}"))?;
            ensure(e <= GRAD_TOL, || {
                format!("{name} point {point}: relative error {e:.3e}")
            })?;
            if e > worst.0 {
                worst = (e, name);
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} checks x {GRAD_POINTS} points, worst {:.2e} ({}), {:.1}s",
        cases.len(),
        worst.0,
        worst.1,
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------
// 2. alignment matrix oracle

fn alignment_oracle(values: &[f64], k: usize, include_self: bool) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..values.len() {
        let mut d = Vec::new();
        for j in 0..values.len() {
            if include_self || i != j {
                d.push((values[i] - values[j]).abs());
            }
        }
        // insertion sort, independent of the library's selection path
        for a in 1..d.len() {
            let mut b = a;
            while b > 0 && d[b - 1] > d[b] {
                d.swap(b - 1, b);
                b -= 1;
            }
        }
        out.extend_from_slice(&d[..k]);
    }
    out
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn ac2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut compared = 0;
    for case in 0..100 {
        let n = rng.gen_range(2..=200);
        let values: Vec<f64> = if case % 3 == 0 {
            // heavy ties
            (0..n).map(|_| rng.gen_range(0..6) as f64 * 0.5).collect()
        } else {
            (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect()
        };
        for include_self in [true, false] {
            let max_k = if include_self { n } else { n - 1 };
            let k = rng.gen_range(1..=max_k);
            let got = alignment_matrix(&values, k, include_self).map_err(err)?;
            let want = alignment_oracle(&values, k, include_self);
            ensure(bits(got.data()) == bits(&want), || {
                format!("case {case}: n={n} k={k} include_self={include_self} differs from oracle")
            })?;
            compared += 1;
        }
    }

    // translation invariance and positive-scale equivariance: exact on a
    // dyadic grid, within 1e-9 relative on general values
    let mut checked = 0;
    for case in 0..100 {
        let n = rng.gen_range(2..=60);
        let include_self = case % 2 == 0;
        let k = rng.gen_range(1..=if include_self { n } else { n - 1 });
        let dyadic = case % 2 == 1;
        let values: Vec<f64> = (0..n)
            .map(|_| {
                if dyadic {
                    rng.gen_range(-4096..4096) as f64 / 1024.0
                } else {
                    rng.gen_range(-10.0..10.0)
                }
            })
            .collect();
        let (shift, scale) = if dyadic {
            (rng.gen_range(-64..64) as f64 / 8.0, 2f64.powi(rng.gen_range(-3..4)))
        } else {
            (rng.gen_range(-50.0..50.0), rng.gen_range(0.01..20.0))
        };
        let base = alignment_matrix(&values, k, include_self).map_err(err)?;
        let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
        let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
        let shifted = alignment_matrix(&shifted, k, include_self).map_err(err)?;
        let scaled = alignment_matrix(&scaled, k, include_self).map_err(err)?;
        for ((b, t), s) in base.data().iter().zip(shifted.data()).zip(scaled.data()) {
            if dyadic {
                ensure(b == t, || format!("case {case}: translation changed {b} to {t}"))?;
                ensure(b * scale == *s, || {
                    format!("case {case}: scaling gave {s}, want {}", b * scale)
                })?;
            } else {
                let tol = 1e-9 * (1.0 + shift.abs() + b.abs());
                ensure((b - t).abs() <= tol, || format!("case {case}: translation {b} vs {t}"))?;
                ensure((b * scale - s).abs() <= 1e-9 * (1.0 + s.abs()), || {
                    format!("case {case}: scaling {s} vs {}", b * scale)
                })?;
            }
        }
        checked += 1;
    }
    Ok(format!(
        "{compared} oracle comparisons bitwise equal, {checked} shift/scale properties hold"
    ))
}

// ---------------------------------------------------------------------------
// 3. concordance index oracle

fn ci_oracle(pred: &[f64], labels: &[f64]) -> f64 {
    let (mut score, mut pairs) = (0.0, 0.0);
    for i in 0..labels.len() {
        for j in 0..labels.len() {
            if labels[i] > labels[j] {
                pairs += 1.0;
                if pred[i] > pred[j] {
                    score += 1.0;
                } else if pred[i] == pred[j] {
                    score += 0.5;
                }
            }
        }
    }
    score / pairs
}

fn ac3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..100 {
        let n = rng.gen_range(2..=500);
        let tied = case % 2 == 0;
        let draw = |rng: &mut ChaCha8Rng| {
            if tied {
                rng.gen_range(0..8) as f64
            } else {
                rng.gen_range(-5.0..5.0)
            }
        };
        let mut labels: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        if labels.iter().all(|&y| y == labels[0]) {
            labels[0] += 1.0;
        }
        let pred: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let want = ci_oracle(&pred, &labels);
        let slow = concordance_index(&pred, &labels).map_err(err)?;
        let fast = concordance_index_fast(&pred, &labels).map_err(err)?;
        ensure(slow == want && fast == want, || {
            format!("case {case} (n={n}): oracle {want}, direct {slow}, fast {fast}")
        })?;
    }
    let y = [1.0, 2.0, 3.0];
    let anchors = [
        (concordance_index(&[1.0, 2.0, 3.0], &y).map_err(err)?, 1.0),
        (concordance_index(&[3.0, 2.0, 1.0], &y).map_err(err)?, 0.0),
        (concordance_index(&[2.0, 2.0, 2.0], &y).map_err(err)?, 0.5),
        (concordance_index_fast(&[1.0, 2.0, 3.0], &y).map_err(err)?, 1.0),
        (concordance_index_fast(&[3.0, 2.0, 1.0], &y).map_err(err)?, 0.0),
        (concordance_index_fast(&[2.0, 2.0, 2.0], &y).map_err(err)?, 0.5),
    ];
    for (got, want) in anchors {
        ensure(got == want, || format!("anchor: got {got}, want {want}"))?;
    }
    Ok("100 instances equal the pair-loop oracle exactly; anchors 1.0/0.0/0.5 exact".into())
}

// ---------------------------------------------------------------------------
// 4. fingerprint invariance

const CORPUS: [&str; 50] = [
    "CC(=O)Oc1ccccc1C(=O)O",
    "CC(C)Cc1ccc(cc1)C(C)C(=O)O",
    "CN1C=NC2=C1C(=O)N(C(=O)N2C)C",
    "CC(=O)Nc1ccc(O)cc1",
    "OC(=O)c1ccccc1O",
    "c1ccc2ccccc2c1",
    "C1CCCCC1",
    "c1ccncc1",
    "c1ccc(cc1)-c1ccccc1",
    "CCN(CC)CC",
    "CCO",
    "O=C=O",
    "C#N",
    "CC(C)(C)OC(=O)N",
    "Clc1ccc(Cl)cc1",
    "FC(F)(F)c1ccccc1",
    "O=S(=O)(N)c1ccccc1",
    "CN1CCC[C@H]1c1cccnc1",
    "C[C@@H](N)C(=O)O",
    "N[C@@H](Cc1ccccc1)C(=O)O",
    "OC[C@H]1OC(O)[C@H](O)[C@@H](O)[C@@H]1O",
    "C/C=C/C",
    "F/C=C\\F",
    "c1ccc2[nH]ccc2c1",
    "c1cc[nH]c1",
    "c1ccoc1",
    "c1ccsc1",
    "Cc1ncc[nH]1",
    "O=C1NC(=O)c2ccccc12",
    "CC(=O)c1ccc2nc(sc2c1)N",
    "COc1cc2c(cc1OC)C(=O)C(C2)CC1CCN(CC1)Cc1ccccc1",
    "CN(C)CCCN1c2ccccc2CCc2ccccc21",
    "OC(=O)CCCc1c[nH]c2ccccc12",
    "Nc1nc2[nH]cnc2c(=O)[nH]1",
    "O=C(O)C1CC1",
    "C1CC2CCC1C2",
    "C1=CC=CC=C1",
    "[NH4+].[Cl-]",
    "[Na+].[O-]C(=O)C",
    "[O-][N+](=O)c1ccccc1",
    "CS(=O)(=O)c1ccc(cc1)C1=C(C(=O)OC1)c1ccccc1",
    "Cc1ccc(cc1)S(=O)(=O)NC(=O)NN1CCCCC1",
    "CCCCCCCCCCCCCCCC(=O)O",
    "OCC(O)CO",
    "C1CCOC1",
    "c1ccc(cc1)C(=O)c1ccccc1",
    "Brc1ccc(cc1)N",
    "[13CH4]",
    "CC1=C(C(=O)CC1(C)C)/C=C/C(C)=C/C=C/C(C)=C/C=O",
    "Oc1ccc(cc1)/C=C/c1cc(O)cc(O)c1",
];

fn ac4() -> Outcome {
    let mut rewrites_differing = 0;
    let mut fingerprints = Vec::new();
    for smiles in CORPUS {
        let graph = parse_smiles(smiles).map_err(|e| format!("{smiles}: {e}"))?;
        let fp = ecfp(&graph, 8, 1024).map_err(err)?;
        for seed in 0..5 {
            let rewrite = random_smiles(&graph, seed);
            if rewrite != smiles {
                rewrites_differing += 1;
            }
            let other = parse_smiles(&rewrite).map_err(|e| format!("rewrite {rewrite} of {smiles}: {e}"))?;
            let ofp = ecfp(&other, 8, 1024).map_err(err)?;
            ensure(ofp == fp, || {
                format!("{smiles}: rewrite {rewrite} changes the fingerprint")
            })?;
        }
        fingerprints.push(fp.to_hex());
    }
    for atom in ["C", "N", "O", "[Na+]", "[Cl-]", "[Fe]", "[2H]"] {
        let fp = ecfp(&parse_smiles(atom).map_err(err)?, 8, 1024).map_err(err)?;
        ensure(fp.popcount() == 1, || format!("{atom}: popcount {}", fp.popcount()))?;
    }

    // two separate featurize processes must write byte-identical caches
    let dir = tempfile::tempdir().map_err(err)?;
    let records: Vec<InteractionRecord> = CORPUS
        .iter()
        .enumerate()
        .map(|(i, s)| InteractionRecord {
            compound_id: format!("m{i:02}"),
            smiles: s.to_string(),
            target_id: "t0".into(),
            sequence: "MKVLAAGIVGLLLAAW".into(),
            affinity: i as f64,
        })
        .collect();
    let data = dir.path().join("corpus.csv");
    InteractionTable::new(records).map_err(err)?.save(&data).map_err(err)?;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let cache = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_dti"))
            .args(["featurize", "--data"])
            .arg(&data)
            .arg("--out")
            .arg(dir.path().join(format!("out_{run}")))
            .arg("--cache-dir")
            .arg(&cache)
            .output()
            .map_err(err)?;
        ensure(status.status.success(), || {
            String::from_utf8_lossy(&status.stderr).into_owned()
        })?;
        outputs.push(std::fs::read(cache.join("compounds.csv")).map_err(err)?);
    }
    ensure(outputs[0] == outputs[1], || {
        "cache files differ between processes".into()
    })?;
    let text = String::from_utf8_lossy(&outputs[0]);
    for (i, hex) in fingerprints.iter().enumerate() {
        ensure(text.contains(hex.as_str()), || {
            format!("cache is missing the in-process fingerprint of m{i:02}")
        })?;
    }
    Ok(format!(
        "{} molecules x 5 rewrites ({rewrites_differing} differ textually) invariant; single atoms popcount 1; cross-process bytes equal",
        CORPUS.len()
    ))
}

// ---------------------------------------------------------------------------
// 5. protein sequence composition

fn ac5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..100 {
        let len = rng.gen_range(3..=500);
        let seq: String = (0..len)
            .map(|_| *AMINO_ACIDS.choose(&mut rng).unwrap() as char)
            .collect();
        let v = psc(&seq).map_err(err)?;
        ensure(v.as_slice().len() == PSC_LEN && PSC_LEN == 8420, || {
            format!("dimension {}", v.as_slice().len())
        })?;
        for (name, block) in [("AAC", v.aac()), ("DC", v.dc()), ("TC", v.tc())] {
            let s: f64 = block.iter().sum();
            ensure((s - 1.0).abs() <= 1e-9, || format!("case {case}: {name} sums to {s}"))?;
        }
        // spot-check one dipeptide frequency against a direct count
        let b = seq.as_bytes();
        let (p, q) = (b[0], b[1]);
        let count = b.windows(2).filter(|w| w[0] == p && w[1] == q).count();
        let pi = AMINO_ACIDS.iter().position(|&a| a == p).unwrap();
        let qi = AMINO_ACIDS.iter().position(|&a| a == q).unwrap();
        let want = count as f64 / (len - 1) as f64;
        ensure((v.dc()[pi * 20 + qi] - want).abs() <= 1e-12, || {
            format!("case {case}: dipeptide count")
        })?;
    }
    let aaa = psc("AAA").map_err(err)?;
    let nonzero = aaa.as_slice().iter().filter(|&&x| x != 0.0).count();
    ensure(nonzero == 3, || format!("AAA has {nonzero} nonzero entries"))?;
    Ok("100 sequences: block sums within 1e-9, 8420 dims; AAA has 3 nonzeros".into())
}

// ---------------------------------------------------------------------------
// 6. split and filter invariants

fn ac6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..20 {
        let n_compounds = rng.gen_range(5..30);
        let n_targets = rng.gen_range(5..20);
        let table = synth_table(&SynthConfig {
            n_compounds,
            n_targets,
            n_records: rng.gen_range(40..300),
            min_sequence_len: 10,
            max_sequence_len: 30,
            seed: rng.gen(),
            ..SynthConfig::default()
        })
        .map_err(err)?;
        for scheme in [SplitScheme::ColdDrug, SplitScheme::ColdTarget] {
            let a = split(&table, scheme, 5, rng.gen()).map_err(err)?;
            let entity = |i: usize| {
                let r = &table.records()[i];
                if scheme == SplitScheme::ColdDrug {
                    r.compound_id.clone()
                } else {
                    r.target_id.clone()
                }
            };
            let mut covered = vec![0usize; table.len()];
            for fold in 0..5 {
                let val = a.validation_indices(fold);
                val.iter().for_each(|&i| covered[i] += 1);
                let inside: BTreeSet<String> = val.iter().map(|&i| entity(i)).collect();
                let rest: BTreeSet<String> = a.training_indices(fold).into_iter().map(entity).collect();
                ensure(inside.intersection(&rest).next().is_none(), || {
                    format!("case {case}: {scheme} fold {fold} shares entities with the rest")
                })?;
            }
            ensure(covered.iter().all(|&c| c == 1), || {
                format!("case {case}: {scheme} is not a partition")
            })?;
        }
        let t = rng.gen_range(1..6);
        let (filtered, _) = apply_filter_threshold(&table, t, false).map_err(err)?;
        let mut counts: BTreeMap<(bool, &str), usize> = BTreeMap::new();
        for r in filtered.records() {
            *counts.entry((true, r.compound_id.as_str())).or_default() += 1;
            *counts.entry((false, r.target_id.as_str())).or_default() += 1;
        }
        if let Some(((_, id), c)) = counts.iter().find(|(_, &c)| c <= t) {
            return Err(format!("case {case}: {id} keeps {c} <= {t} records after filtering"));
        }
    }
    Ok("20 tables: cold folds entity-disjoint, filter fixpoint leaves no entity at or below t".into())
}

// ---------------------------------------------------------------------------
// 7. discriminator anchors

fn ac7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let k = 4;
    let mut disc = Mlp::new(&[k, 8, 1], Activation::Relu, Activation::Sigmoid, &mut rng).map_err(err)?;
    let last = disc.layers.last_mut().unwrap();
    last.weight.data_mut().fill(0.0);
    last.bias.data_mut().fill(0.0);

    let labels: Vec<f64> = (0..16).map(|_| rng.gen_range(4.0..9.0)).collect();
    let preds: Vec<f64> = (0..16).map(|_| rng.gen_range(4.0..9.0)).collect();
    let mut g = Graph::new();
    let bound = disc.bind(&mut g, true);
    let real = g.constant(alignment_matrix(&labels, k, true).map_err(err)?.to_tensor());
    let fake = g.constant(alignment_matrix(&preds, k, true).map_err(err)?.to_tensor());
    let d_real = bound.forward(&mut g, real).map_err(err)?;
    let d_fake = bound.forward(&mut g, fake).map_err(err)?;
    ensure(
        g.value(d_real)
            .data()
            .iter()
            .chain(g.value(d_fake).data())
            .all(|&d| d == 0.5),
        || "discriminator is not at 0.5".into(),
    )?;
    let ld = discriminator_loss(&mut g, d_real, d_fake, DEFAULT_LOG_EPS).map_err(err)?;
    let la = generator_adv_loss(&mut g, d_fake, DEFAULT_LOG_EPS).map_err(err)?;
    let (ld, la) = (g.value(ld).data()[0], g.value(la).data()[0]);
    let ln2 = std::f64::consts::LN_2;
    ensure((ld - 2.0 * ln2).abs() <= 1e-12, || format!("discriminator loss {ld}"))?;
    ensure((la - ln2).abs() <= 1e-12, || format!("generator adversarial loss {la}"))?;
    Ok(format!("L_D = {ld:.15}, L_adv = {la:.15}"))
}

// ---------------------------------------------------------------------------
// 8. overfit smoke test

struct Encoded {
    cache: FeatureCache,
    train: Vec<(String, String, f64)>,
    val: Vec<(String, String, f64)>,
    standardizer: FeatureStandardizer,
}

impl Encoded {
    fn set<'a>(&'a self, rows: &'a [(String, String, f64)]) -> dti_core::Result<EncodedSet<'a>> {
        EncodedSet::build(
            &self.cache,
            rows.iter().map(|(c, t, y)| (c.as_str(), t.as_str(), *y)),
            &self.standardizer,
        )
    }
}

fn overfit_data() -> dti_core::Result<Encoded> {
    let table = synth_table(&SynthConfig {
        n_compounds: 5,
        n_targets: 10,
        n_records: 50,
        mode: SynthMode::Linear,
        noise: 0.0,
        seed: 8,
        ..SynthConfig::default()
    })?;
    if table.len() != 50 {
        return Err(dti_core::Error::Data(format!(
            "expected 50 records, got {}",
            table.len()
        )));
    }
    let (cache, table, _) = featurize_table(&table, &FeaturizeConfig::default(), false)?;
    let folds = split(&table, SplitScheme::Warm, 5, 0)?;
    let rows = |idx: Vec<usize>| -> Vec<(String, String, f64)> {
        idx.into_iter()
            .map(|i| {
                let r = &table.records()[i];
                (r.compound_id.clone(), r.target_id.clone(), r.affinity)
            })
            .collect()
    };
    let train = rows(folds.training_indices(0));
    let val = rows(folds.validation_indices(0));
    let mut per_target: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, t, _) in &train {
        *per_target.entry(t.as_str()).or_default() += 1;
    }
    let standardizer =
        FeatureStandardizer::fit_weighted(per_target.iter().map(|(t, &n)| (cache.targets[*t].psc.as_slice(), n)))?;
    Ok(Encoded {
        cache,
        train,
        val,
        standardizer,
    })
}

fn ac8() -> Outcome {
    let start = Instant::now();
    let data = overfit_data().map_err(err)?;
    let train_set = data.set(&data.train).map_err(err)?;
    let val_set = data.set(&data.val).map_err(err)?;
    let model_cfg = ModelConfig {
        variant: ModelVariant::Ivpgan,
        generator_hidden: vec![256, 64],
        ..ModelConfig::default()
    };
    let mut results = Vec::new();
    for lambda in [0.0, 0.1] {
        let cfg = TrainConfig {
            lambda,
            epochs: 500,
            batch_size: 50,
            generator_lr: 1e-3,
            inner_val_fraction: 0.0,
            ..TrainConfig::default()
        };
        let k = cfg.resolved_k(train_set.len());
        let mut model = DtiModel::new(&model_cfg, 1024, k, data.standardizer.clone(), 0).map_err(err)?;
        let outcome = train(&mut model, &train_set, None, &cfg).map_err(err)?;
        ensure(outcome.history.len() <= 500, || "more than 500 epochs".into())?;
        let finite = outcome.history.iter().all(|h| {
            h.mse.is_finite()
                && h.composite.is_finite()
                && h.adv.is_some_and(f64::is_finite)
                && h.disc.is_some_and(f64::is_finite)
        });
        let train_rmse = evaluate_set(&model, &train_set).map_err(err)?.rmse;
        let val_rmse = evaluate_set(&model, &val_set).map_err(err)?.rmse;
        results.push((lambda, train_rmse, val_rmse, finite));
    }
    let elapsed = start.elapsed();
    let (_, base_train, base_val, _) = results[0];
    let (_, adv_train, adv_val, adv_finite) = results[1];
    ensure(base_train < 0.05, || format!("lambda=0 training rmse {base_train:.4}"))?;
    ensure(adv_finite, || "lambda=0.1 produced non-finite loss components".into())?;
    ensure(adv_val <= 2.0 * base_val, || {
        format!("lambda=0.1 validation rmse {adv_val:.4} exceeds 2x {base_val:.4}")
    })?;
    ensure(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "lambda=0: train {base_train:.4} val {base_val:.4}; lambda=0.1: train {adv_train:.4} val {adv_val:.4}, finite; {:.1}s",
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------
// 9. warm vs cold trend

fn trend_config(dir: &Path) -> dti_core::Result<ExperimentConfig> {
    let data = dir.join("trend.csv");
    cmd_synth_data(&SynthConfig::default(), &data)?;
    let mut cfg = ExperimentConfig::default();
    cfg.data.path = data;
    cfg.output.dir = dir.join("out");
    cfg.split.seeds = vec![0, 1, 2];
    cfg.model.gconv_widths = vec![32, 64];
    cfg.model.generator_hidden = vec![128, 32];
    cfg.train.generator_lr = 1e-3;
    cfg.train.epochs = 30;
    cfg.train.patience = 5;
    Ok(cfg)
}

fn ac9() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(err)?;
    let mut cfg = trend_config(dir.path()).map_err(err)?;
    cmd_featurize(&cfg).map_err(err)?;
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    for variant in ModelVariant::ALL {
        cfg.model.variant = variant;
        let prepared = load_prepared(&cfg).map_err(err)?;
        let mut means = BTreeMap::new();
        for scheme in SplitScheme::ALL {
            let mut total = 0.0;
            let mut cells = 0;
            for &seed in &cfg.split.seeds {
                let a = split(&prepared.table, scheme, 5, seed).map_err(err)?;
                for fold in 0..5 {
                    let cell = run_cell(&cfg, &prepared, &a, fold).map_err(err)?;
                    let model = &cell.checkpoint.model;
                    let val = a.validation_indices(fold);
                    let set = EncodedSet::build(
                        &prepared.cache,
                        val.iter().map(|&i| {
                            let r = &prepared.table.records()[i];
                            (r.compound_id.as_str(), r.target_id.as_str(), r.affinity)
                        }),
                        &model.standardizer,
                    )
                    .map_err(err)?;
                    total += rmse(&model.predict(&set).map_err(err)?, &set.labels()).map_err(err)?;
                    cells += 1;
                }
            }
            means.insert(scheme, total / cells as f64);
        }
        let (w, d, t) = (
            means[&SplitScheme::Warm],
            means[&SplitScheme::ColdDrug],
            means[&SplitScheme::ColdTarget],
        );
        lines.push(format!("{} {w:.3}/{d:.3}/{t:.3}", variant.name()));
        if !(w <= d && w <= t) {
            failures.push(variant.name());
        }
    }
    let elapsed = start.elapsed();
    let summary = format!(
        "warm/cold_drug/cold_target rmse: {}; {:.0}s",
        lines.join(", "),
        elapsed.as_secs_f64()
    );
    ensure(failures.is_empty(), || {
        format!("ordering violated for {failures:?}; {summary}")
    })?;
    ensure(elapsed < Duration::from_secs(900), || format!("too slow; {summary}"))?;
    Ok(summary)
}

// ---------------------------------------------------------------------------
// 10. end-to-end determinism

fn ac10() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let data = dir.path().join("det.csv");
    cmd_synth_data(
        &SynthConfig {
            n_compounds: 12,
            n_targets: 10,
            n_records: 100,
            min_sequence_len: 20,
            max_sequence_len: 40,
            ..SynthConfig::default()
        },
        &data,
    )
    .map_err(err)?;
    let toml = format!(
        "[data]\npath = {:?}\n\n[split]\nseeds = [0, 1]\n\n[model]\nvariant = \"ivpgan\"\ngconv_widths = [8, 16]\ngenerator_hidden = [32, 8]\n\n[train]\nepochs = 4\nbatch_size = 16\ngenerator_lr = 1e-3\n\n[output]\ndir = {:?}\n",
        data.display().to_string(),
        dir.path().join("out").display().to_string()
    );
    let config_path = dir.path().join("det.toml");
    std::fs::write(&config_path, &toml).map_err(err)?;
    let cfg = ExperimentConfig::from_toml(&toml, &[]).map_err(err)?;
    let metrics_path = cfg.output.dir.join("ivpgan").join("metrics.json");

    // first run in this process
    cmd_featurize(&cfg).map_err(err)?;
    cmd_split(&cfg).map_err(err)?;
    cmd_train(&cfg).map_err(err)?;
    cmd_evaluate(&cfg).map_err(err)?;
    let first = std::fs::read(&metrics_path).map_err(err)?;

    // second run from scratch in a separate process
    std::fs::remove_dir_all(&cfg.output.dir).map_err(err)?;
    for cmd in ["featurize", "split", "train", "evaluate"] {
        let out = Command::new(env!("CARGO_BIN_EXE_dti"))
            .args([cmd, "--config"])
            .arg(&config_path)
            .env_remove("DTI_CACHE_DIR")
            .output()
            .map_err(err)?;
        ensure(out.status.success(), || {
            format!("dti {cmd}: {}", String::from_utf8_lossy(&out.stderr))
        })?;
    }
    let second = std::fs::read(&metrics_path).map_err(err)?;
    ensure(first == second, || "metrics.json differs between runs".into())?;
    Ok(format!(
        "30 cells trained twice (in-process and via dti); metrics.json identical ({} bytes)",
        first.len()
    ))
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    type Criterion = (&'static str, &'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("AC1", "gradient suite", ac1),
        ("AC2", "alignment matrix oracle", ac2),
        ("AC3", "concordance index oracle", ac3),
        ("AC4", "fingerprint invariance", ac4),
        ("AC5", "sequence composition normalization", ac5),
        ("AC6", "split and filter invariants", ac6),
        ("AC7", "discriminator loss anchors", ac7),
        ("AC8", "overfit smoke test", ac8),
        ("AC9", "warm vs cold trend", ac9),
        ("AC10", "end-to-end determinism", ac10),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with("AC")).collect();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !only.is_empty() && !only.iter().any(|o| o == id) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("{id:<4} PASS  {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("{id:<4} FAIL  {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
