//! The gradcheck subcommand: finite-difference verification of every
//! trainable tensor on a small random instance, per variant and pooling.

use clap::Args;
use musem_core::attention::{AttentionVariant, Pooling};
use musem_core::gradcheck::grad_check;
use musem_core::model::{example_loss_and_grad, ExampleEncoding};
use musem_core::tensor::{Mat, ParamSet};
use musem_core::train::{init_params, TrainConfig};
use musem_core::{MusemError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;
const TOLERANCE: f64 = 1e-4;

/// Test hook: corrupts one analytic gradient so the check must fail.
const CORRUPT_ENV: &str = "MUSEM_GRADCHECK_CORRUPT";

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,

    /// Embedding dimension (capped at 8 to keep runs fast).
    #[arg(long, default_value_t = 6)]
    d: usize,

    #[arg(long, default_value_t = 4)]
    hidden: usize,

    /// Token count for the longer side of the random instance (at most 5).
    #[arg(long, default_value_t = 5)]
    len: usize,

    /// Check only this variant [default: all four].
    #[arg(long)]
    variant: Option<AttentionVariant>,

    /// Check only this pooling [default: both].
    #[arg(long)]
    pooling: Option<Pooling>,
}

fn random_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat {
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Mat::from_vec(rows, cols, data).unwrap()
}

/// One padded position per side exercises the masking paths.
fn random_instance(rng: &mut ChaCha8Rng, len: usize, d: usize) -> ExampleEncoding {
    let l = len.max(2);
    let p = (len - 1).max(1) + 1;
    let mut mask_o = vec![true; l];
    mask_o[l - 1] = false;
    let mut mask_s = vec![true; p];
    mask_s[p - 1] = false;
    ExampleEncoding {
        h_o: random_mat(rng, l, d),
        mask_o,
        h_s: random_mat(rng, p, d),
        mask_s,
    }
}

pub fn run(args: &GradcheckArgs) -> Result<()> {
    if args.d == 0 || args.d > 8 {
        return Err(MusemError::Config(format!(
            "d must be between 1 and 8 for gradcheck, got {}",
            args.d
        )));
    }
    if args.len == 0 || args.len > 5 {
        return Err(MusemError::Config(format!(
            "len must be between 1 and 5, got {}",
            args.len
        )));
    }
    let corrupt = std::env::var_os(CORRUPT_ENV).is_some_and(|v| !v.is_empty());
    let variants = match args.variant {
        Some(v) => vec![v],
        None => AttentionVariant::all().to_vec(),
    };
    let poolings = match args.pooling {
        Some(p) => vec![p],
        None => vec![Pooling::Avg, Pooling::Max],
    };

    let mut failures: Vec<String> = Vec::new();
    for &variant in &variants {
        for &pooling in &poolings {
            let config = TrainConfig {
                d: args.d,
                hidden: args.hidden,
                variant,
                pooling,
                seed: args.seed,
                dropout: 0.0,
                max_len: 5,
                ..TrainConfig::default()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            let mut params = init_params(&config, &mut rng)?;
            let enc = random_instance(&mut rng, args.len, args.d);

            // A random init can leave every joint ReLU unit dead, which would
            // make the W_t and W_cl checks vacuous. Nudge b_t until the
            // classifier sees at least one live unit.
            for _ in 0..32 {
                params.zero_grads();
                example_loss_and_grad(&mut params, &enc, 1, [1.0, 1.0], None, 1.0)?;
                if params.classifier.w_cl.grad.data().iter().any(|&g| g != 0.0) {
                    break;
                }
                for v in params.classifier.b_t.value.data_mut() {
                    *v += rng.gen_range(0.05..0.3);
                }
            }
            params.zero_grads();

            let report = grad_check(
                &mut params,
                |p| {
                    p.zero_grads();
                    let loss = example_loss_and_grad(p, &enc, 1, [1.0, 1.0], None, 1.0)?;
                    if corrupt {
                        p.classifier.w_cl.grad.add_at(0, 0, 0.01);
                    }
                    Ok(loss)
                },
                STEP,
                TOLERANCE,
            )?;

            println!("variant={variant} pooling={pooling}");
            print!("{}", report.render_table());
            println!();
            for check in &report.params {
                if !check.passed(TOLERANCE) {
                    failures.push(format!("{variant}/{pooling}/{}", check.name));
                }
            }
        }
    }

    if failures.is_empty() {
        println!("all parameters passed (tolerance {TOLERANCE:e})");
        Ok(())
    } else {
        Err(MusemError::GradCheckFailed {
            tensors: failures.join(", "),
        })
    }
}
