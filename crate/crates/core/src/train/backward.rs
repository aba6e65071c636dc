//! Batched forward pass with a recorded tape and its reverse sweep.

use alloc::vec;
use alloc::vec::Vec;

use super::{Batch, Gradients, LossBreakdown};
use crate::error::{Error, Result};
use crate::harmonics::encode_into;
use crate::joints::JOINT_COUNT;
use crate::prior::{axpy, normalize_frequency, silu, silu_grad, PriorModel, FILM_BOUND, LOGVAR_MAX, LOGVAR_MIN};

struct LayerTape {
    /// Pre-modulation affine output `a = W h + b`.
    affine: Vec<f64>,
    /// Modulated pre-activation `u = γ ⊙ a + β`.
    modulated: Vec<f64>,
    activated: Vec<f64>,
    gamma: Vec<f64>,
    gamma_tanh: Vec<f64>,
    beta_tanh: Vec<f64>,
}

/// Composite loss over `batch` and the gradient of every parameter.
pub fn loss_and_gradients(model: &PriorModel, batch: &Batch, beta_kl: f64) -> Result<(LossBreakdown, Gradients)> {
    batch.validate(model)?;
    let arch = model.architecture();
    let dz = arch.latent_dim;
    let rows = batch.len();
    let fh = normalize_frequency(batch.frequency)?;

    // Encoder.
    let mut enc_pre = vec![0.0; arch.encoder_hidden];
    model.encoder_hidden.apply(&[fh], &mut enc_pre);
    let enc_h: Vec<f64> = enc_pre.iter().map(|&v| silu(v)).collect();
    let mut enc_out = vec![0.0; 2 * dz];
    model.encoder_output.apply(&enc_h, &mut enc_out);
    let (mu, logvar_raw) = enc_out.split_at(dz);
    let logvar: Vec<f64> = logvar_raw.iter().map(|v| v.clamp(LOGVAR_MIN, LOGVAR_MAX)).collect();
    let sigma: Vec<f64> = logvar.iter().map(|&lv| libm::exp(0.5 * lv)).collect();
    let mut context: Vec<f64> = (0..dz).map(|i| mu[i] + sigma[i] * batch.epsilon[i]).collect();
    context.push(fh);

    // Decoder with FiLM.
    let mut x = vec![0.0; rows * arch.input_width()];
    for (row, &t) in x.chunks_exact_mut(arch.input_width()).zip(&batch.times) {
        encode_into(t, batch.frequency, row);
    }
    let mut tapes: Vec<LayerTape> = Vec::with_capacity(model.hidden.len());
    for (layer, film) in model.hidden.iter().zip(&model.films) {
        let width = layer.outputs;
        let mut g_pre = vec![0.0; width];
        let mut b_pre = vec![0.0; width];
        film.gamma.apply(&context, &mut g_pre);
        film.beta.apply(&context, &mut b_pre);
        let gamma_tanh: Vec<f64> = g_pre.iter().map(|&v| libm::tanh(v)).collect();
        let beta_tanh: Vec<f64> = b_pre.iter().map(|&v| libm::tanh(v)).collect();
        let gamma: Vec<f64> = gamma_tanh.iter().map(|t| 1.0 + FILM_BOUND * t).collect();

        let input = tapes.last().map_or(&x, |t| &t.activated);
        let mut affine = vec![0.0; rows * width];
        layer.apply_batch(input, &mut affine);
        let mut modulated = affine.clone();
        for row in modulated.chunks_exact_mut(width) {
            for ((u, g), bt) in row.iter_mut().zip(&gamma).zip(&beta_tanh) {
                *u = g * *u + FILM_BOUND * bt;
            }
        }
        let activated = modulated.iter().map(|&u| silu(u)).collect();
        tapes.push(LayerTape { affine, modulated, activated, gamma, gamma_tanh, beta_tanh });
    }
    let last = &tapes.last().expect("at least one hidden layer").activated;
    let mut y = vec![0.0; rows * JOINT_COUNT];
    model.output.apply_batch(last, &mut y);

    // Losses.
    let count = (rows * JOINT_COUNT) as f64;
    let mut sq = 0.0;
    let mut dy = vec![0.0; y.len()];
    for ((d, &p), &t) in dy.iter_mut().zip(&y).zip(&batch.targets) {
        let r = p - t;
        sq += r * r;
        *d = 2.0 * r / count;
    }
    let reconstruction = sq / count;
    let kl = super::kl_loss(mu, &logvar)?;
    let loss = LossBreakdown::new(reconstruction, kl, beta_kl);
    if !loss.total.is_finite() {
        return Err(Error::Diverged { step: 0, quantity: "loss" });
    }

    // Reverse sweep.
    let mut grads = Gradients::zeros(model);
    let g = &mut grads.model;
    accumulate_affine(&dy, last, &mut g.output.weight, &mut g.output.bias, JOINT_COUNT);
    let mut dh = back_input(&dy, &model.output.weight, rows, model.output.inputs);

    let mut dcontext = vec![0.0; context.len()];
    for l in (0..model.hidden.len()).rev() {
        let tape = &tapes[l];
        let layer = &model.hidden[l];
        let width = layer.outputs;
        let mut dgamma = vec![0.0; width];
        let mut dbeta = vec![0.0; width];
        let mut da = dh;
        for (r, da_row) in da.chunks_exact_mut(width).enumerate() {
            let span = r * width..(r + 1) * width;
            let (u, a) = (&tape.modulated[span.clone()], &tape.affine[span]);
            for o in 0..width {
                let du = da_row[o] * silu_grad(u[o]);
                dgamma[o] += du * a[o];
                dbeta[o] += du;
                da_row[o] = du * tape.gamma[o];
            }
        }
        let input = if l == 0 { &x } else { &tapes[l - 1].activated };
        let gl = &mut g.hidden[l];
        accumulate_affine(&da, input, &mut gl.weight, &mut gl.bias, width);
        dh = if l == 0 { Vec::new() } else { back_input(&da, &layer.weight, rows, layer.inputs) };

        let gf = &mut g.films[l];
        let film = &model.films[l];
        for o in 0..width {
            let dg = dgamma[o] * FILM_BOUND * (1.0 - tape.gamma_tanh[o] * tape.gamma_tanh[o]);
            let db = dbeta[o] * FILM_BOUND * (1.0 - tape.beta_tanh[o] * tape.beta_tanh[o]);
            gf.gamma.bias[o] += dg;
            gf.beta.bias[o] += db;
            axpy(dg, &context, &mut gf.gamma.weight[o * context.len()..(o + 1) * context.len()]);
            axpy(db, &context, &mut gf.beta.weight[o * context.len()..(o + 1) * context.len()]);
            axpy(dg, film.gamma.row(o), &mut dcontext);
            axpy(db, film.beta.row(o), &mut dcontext);
        }
    }

    // Reparameterization and encoder; the normalized frequency is an input.
    let mut denc_out = vec![0.0; 2 * dz];
    for i in 0..dz {
        let dzi = dcontext[i];
        denc_out[i] = dzi + beta_kl * mu[i];
        let in_range = (LOGVAR_MIN..=LOGVAR_MAX).contains(&logvar_raw[i]);
        if in_range {
            let lv = logvar[i];
            denc_out[dz + i] = dzi * 0.5 * sigma[i] * batch.epsilon[i] + beta_kl * 0.5 * (libm::exp(lv) - 1.0);
        }
    }
    accumulate_affine(&denc_out, &enc_h, &mut g.encoder_output.weight, &mut g.encoder_output.bias, 2 * dz);
    let denc_h = back_input(&denc_out, &model.encoder_output.weight, 1, arch.encoder_hidden);
    for (o, (&dhh, &pre)) in denc_h.iter().zip(&enc_pre).enumerate() {
        let d = dhh * silu_grad(pre);
        g.encoder_hidden.weight[o] += d * fh;
        g.encoder_hidden.bias[o] += d;
    }

    if !grads.is_finite() {
        return Err(Error::Diverged { step: 0, quantity: "gradient" });
    }
    Ok((loss, grads))
}

/// `dW += Σ_r dout_r ⊗ in_r`, `db += Σ_r dout_r`.
fn accumulate_affine(dout: &[f64], input: &[f64], dw: &mut [f64], db: &mut [f64], outputs: usize) {
    let rows = dout.len() / outputs;
    let inputs = input.len() / rows;
    for (d_row, in_row) in dout.chunks_exact(outputs).zip(input.chunks_exact(inputs)) {
        for (o, &d) in d_row.iter().enumerate() {
            if d != 0.0 {
                axpy(d, in_row, &mut dw[o * inputs..(o + 1) * inputs]);
            }
            db[o] += d;
        }
    }
}

/// `dX = dY W` for row-major `W` of shape `outputs × inputs`.
fn back_input(dout: &[f64], weight: &[f64], rows: usize, inputs: usize) -> Vec<f64> {
    let outputs = dout.len() / rows;
    let mut dx = vec![0.0; rows * inputs];
    for (d_row, dx_row) in dout.chunks_exact(outputs).zip(dx.chunks_exact_mut(inputs)) {
        for (o, &d) in d_row.iter().enumerate() {
            if d != 0.0 {
                axpy(d, &weight[o * inputs..(o + 1) * inputs], dx_row);
            }
        }
    }
    dx
}
