//! Independent reference implementations used by the test suites.
//!
//! Everything here recomputes results with plain scalar loops and explicit
//! formulas, deliberately sharing no code with the tape/layer path it
//! validates.

use crate::nn::config::ModelConfig;
use crate::nn::params::{gate_bias_name, gate_weight_name, ModelParams};
use crate::tensor::{Real, Tensor};

/// Scalar step-by-step evaluation of one recurrent direction.
///
/// Gate pre-activations come from an explicit per-unit Hamilton
/// product-sum over kernel taps; the recurrence is an elementwise loop.
/// Returns `[n, 4h]` at 64-bit.
pub fn qqlstm_scalar<T: Real>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    layer: usize,
    weight_dir: &str,
    x: &Tensor<T>,
    mask: &[bool],
    time_reversed: bool,
) -> Tensor<f64> {
    let (n, width) = x.as_2d();
    let a = width / 4;
    let h = cfg.hidden;
    assert_eq!(mask.len(), n);

    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|t| x.row(t).iter().map(|&v| Real::to_f64(v)).collect())
        .collect();
    let mut m: Vec<bool> = mask.to_vec();
    if time_reversed {
        rows.reverse();
        m.reverse();
    }

    let comp = |gate: &str, tap: usize, c: &str| -> Vec<f64> {
        params
            .get(&gate_weight_name(layer, weight_dir, gate, tap, c))
            .data()
            .iter()
            .map(|&v| Real::to_f64(v))
            .collect()
    };
    let bias = |gate: &str| -> Vec<f64> {
        params
            .get(&gate_bias_name(layer, weight_dir, gate))
            .data()
            .iter()
            .map(|&v| Real::to_f64(v))
            .collect()
    };

    let gate_pre = |gate: &str, t: usize, rows: &[Vec<f64>]| -> Vec<f64> {
        let mut pre = bias(gate);
        for tap in 0..cfg.conv_width {
            if tap > t {
                break;
            }
            let (wr, wx, wy, wz) = (
                comp(gate, tap, "r"),
                comp(gate, tap, "x"),
                comp(gate, tap, "y"),
                comp(gate, tap, "z"),
            );
            let src = &rows[t - tap];
            for j in 0..h {
                for i in 0..a {
                    let (qr, qx, qy, qz) = (src[i], src[a + i], src[2 * a + i], src[3 * a + i]);
                    let (r, xx, yy, zz) =
                        (wr[i * h + j], wx[i * h + j], wy[i * h + j], wz[i * h + j]);
                    pre[j] += r * qr - xx * qx - yy * qy - zz * qz;
                    pre[h + j] += r * qx + xx * qr + yy * qz - zz * qy;
                    pre[2 * h + j] += r * qy - xx * qz + yy * qr + zz * qx;
                    pre[3 * h + j] += r * qz + xx * qy - yy * qx + zz * qr;
                }
            }
        }
        pre
    };

    let sigm = |v: f64| 1.0 / (1.0 + (-v).exp());
    let hreal = 4 * h;
    let mut c = vec![0.0; hreal];
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
    for t in 0..n {
        let f: Vec<f64> = gate_pre("f", t, &rows).into_iter().map(sigm).collect();
        let o: Vec<f64> = gate_pre("o", t, &rows).into_iter().map(sigm).collect();
        let i: Vec<f64> = gate_pre("i", t, &rows).into_iter().map(sigm).collect();
        let z: Vec<f64> = gate_pre("z", t, &rows).into_iter().map(f64::tanh).collect();
        let mut ct = vec![0.0; hreal];
        if m[t] {
            for u in 0..hreal {
                ct[u] = f[u] * c[u] + i[u] * z[u];
            }
        }
        c = ct;
        out.push((0..hreal).map(|u| o[u] * c[u]).collect());
    }
    if time_reversed {
        out.reverse();
    }
    Tensor::matrix(n, hreal, out.into_iter().flatten().collect())
}
