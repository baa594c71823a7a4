use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::nn::{self, ForwardCache, Gradients, LayerKind, LayerSpec, LossKind, MlpModel, Mode};
use crate::sphere::{linear_mean_norm, spherical_mean, LatentVector};

pub const DENSE_TOLERANCE: f64 = 1e-4;
pub const BATCHNORM_TOLERANCE: f64 = 1e-3;
pub const GRADCHECK_SEEDS: [u64; 3] = [0, 1, 2];

/// Worst relative error seen for one layer kind. Models that contain a
/// training-mode batchnorm are held to the looser tolerance, so their errors
/// are kept apart.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KindReport {
    pub kind: String,
    /// Over models without training-mode batchnorm.
    pub plain: Option<f64>,
    /// Over models with training-mode batchnorm.
    pub with_batchnorm: Option<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradcheckSummary {
    /// One row per layer kind, in [`LayerKind::ALL`] order.
    pub kinds: Vec<KindReport>,
    pub entries_checked: usize,
}

impl GradcheckSummary {
    pub fn passed(&self) -> bool {
        self.kinds.iter().all(|k| k.passed)
    }

    /// A numeric error naming every layer kind over its tolerance.
    pub fn check(&self) -> Result<()> {
        let failed: Vec<&str> = self
            .kinds
            .iter()
            .filter(|k| !k.passed)
            .map(|k| k.kind.as_str())
            .collect();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(crate::Error::Numeric(format!(
                "gradient check failed for {}",
                failed.join(", ")
            )))
        }
    }
}

pub fn gradcheck_table(summary: &GradcheckSummary) -> String {
    let cell = |v: Option<f64>| v.map_or_else(|| "-".to_owned(), |e| format!("{e:.3e}"));
    let mut out =
        format!("kind\tplain (<{DENSE_TOLERANCE:.0e})\twith batchnorm (<{BATCHNORM_TOLERANCE:.0e})\tstatus\n");
    for k in &summary.kinds {
        let status = if k.passed { "ok" } else { "FAIL" };
        out.push_str(&format!(
            "{}\t{}\t{}\t{status}\n",
            k.kind,
            cell(k.plain),
            cell(k.with_batchnorm)
        ));
    }
    out
}

struct Case {
    layers: Vec<LayerSpec>,
    loss: LossKind,
    mode: Mode,
    batch: usize,
}

fn suite() -> Vec<Case> {
    vec![
        Case {
            layers: vec![
                LayerSpec::dense(5, 7),
                LayerSpec::tanh(7),
                LayerSpec::dense(7, 3),
                LayerSpec::sigmoid(3),
            ],
            loss: LossKind::Bce,
            mode: Mode::Inference,
            batch: 6,
        },
        Case {
            layers: vec![LayerSpec::dense(4, 6), LayerSpec::sigmoid(6), LayerSpec::dense(6, 2)],
            loss: LossKind::Mse,
            mode: Mode::Inference,
            batch: 5,
        },
        Case {
            layers: vec![
                LayerSpec::dense(4, 6),
                LayerSpec::batchnorm(6),
                LayerSpec::tanh(6),
                LayerSpec::dense(6, 3),
            ],
            loss: LossKind::Mse,
            mode: Mode::Training,
            batch: 8,
        },
        Case {
            layers: vec![
                LayerSpec::dense(3, 5),
                LayerSpec::batchnorm(5),
                LayerSpec::sigmoid(5),
                LayerSpec::dense(5, 1),
                LayerSpec::sigmoid(1),
            ],
            loss: LossKind::Bce,
            mode: Mode::Training,
            batch: 7,
        },
    ]
}

/// Finite-difference checks over small networks covering every layer kind,
/// in both modes, with both losses.
pub fn gradcheck_suite(eps: f64) -> Result<GradcheckSummary> {
    gradcheck_suite_with(eps, |m, cache, g| m.backward(cache, g))
}

/// [`gradcheck_suite`] with a caller-supplied backward pass.
pub fn gradcheck_suite_with<B>(eps: f64, backward: B) -> Result<GradcheckSummary>
where
    B: Fn(&MlpModel, &ForwardCache, &Array2<f64>) -> Result<Gradients>,
{
    let mut plain: [Option<f64>; 4] = [None; 4];
    let mut with_bn: [Option<f64>; 4] = [None; 4];
    let mut entries = 0;
    for case in suite() {
        for seed in GRADCHECK_SEEDS {
            let mut model = MlpModel::init(&case.layers, seed)?;
            model.set_mode(case.mode);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
            let x = Array2::from_shape_fn((case.batch, model.in_dim()), |_| rng.random_range(-1.5..1.5));
            let y = match case.loss {
                LossKind::Bce => Array2::from_shape_fn((case.batch, model.out_dim()), |_| {
                    f64::from(u8::from(rng.random_bool(0.5)))
                }),
                LossKind::Mse => Array2::from_shape_fn((case.batch, model.out_dim()), |_| rng.random_range(-1.0..1.0)),
            };
            let report = nn::gradient_check_with(&model, &x, &y, case.loss, eps, &backward)?;
            let worst = if case.mode == Mode::Training && model.has_batchnorm() {
                &mut with_bn
            } else {
                &mut plain
            };
            for (kind, err) in report.by_kind {
                let slot = &mut worst[LayerKind::ALL.iter().position(|&k| k == kind).expect("known kind")];
                *slot = Some(slot.map_or(err, |w| w.max(err)));
            }
            entries += report.entries_checked;
        }
    }
    let kinds = LayerKind::ALL
        .iter()
        .enumerate()
        .map(|(i, kind)| KindReport {
            kind: kind.name().to_owned(),
            plain: plain[i],
            with_batchnorm: with_bn[i],
            passed: plain[i].is_none_or(|e| e < DENSE_TOLERANCE) && with_bn[i].is_none_or(|e| e < BATCHNORM_TOLERANCE),
        })
        .collect();
    Ok(GradcheckSummary {
        kinds,
        entries_checked: entries,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollapseRow {
    pub n: usize,
    pub trials: usize,
    pub mean_linear_norm: f64,
    pub std_error: f64,
    /// Expected norm of the mean of `n` independent uniform unit vectors.
    pub oracle: f64,
    /// Largest `|‖spherical mean‖ − 1|` over all trials.
    pub max_spherical_deviation: f64,
}

impl CollapseRow {
    pub fn z_score(&self) -> f64 {
        if self.std_error == 0.0 {
            if self.mean_linear_norm == self.oracle {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean_linear_norm - self.oracle) / self.std_error
        }
    }
}

/// `E‖(1/n)Σvᵢ‖` for `n` independent uniform points on the unit sphere in
/// `d` dimensions, to second order in the pairwise cosines:
/// `n^(−1/2)·(1 − (n−1)/(4nd))`. Exact for `n = 1`.
pub fn collapse_oracle(n: usize, d: usize) -> f64 {
    let (n, d) = (n as f64, d as f64);
    (1.0 - (n - 1.0) / (4.0 * n * d)) / n.sqrt()
}

/// Averages `n` random unit latents `trials` times per `n`, reporting the
/// collapse of the Euclidean mean next to the spherical mean's norm.
pub fn collapse_study(n_list: &[usize], trials: usize, dim: usize, seed: u64) -> Result<Vec<CollapseRow>> {
    if n_list.contains(&0) || trials < 2 || dim < 2 {
        return Err(crate::Error::Invalid(
            "collapse study needs n ≥ 1, trials ≥ 2 and d ≥ 2".into(),
        ));
    }
    n_list
        .iter()
        .map(|&n| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(n as u64);
            let mut norms = Vec::with_capacity(trials);
            let mut max_dev: f64 = 0.0;
            for _ in 0..trials {
                let vs: Vec<LatentVector> = (0..n).map(|_| LatentVector::random(dim, &mut rng)).collect();
                norms.push(linear_mean_norm(&vs)?);
                max_dev = max_dev.max((spherical_mean(&vs)?.norm() - 1.0).abs());
            }
            let mean = crate::stats::mean(&norms);
            let std_error = crate::stats::std_dev(&norms) / (trials as f64).sqrt();
            Ok(CollapseRow {
                n,
                trials,
                mean_linear_norm: mean,
                std_error,
                oracle: collapse_oracle(n, dim),
                max_spherical_deviation: max_dev,
            })
        })
        .collect()
}
