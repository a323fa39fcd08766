use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::numerics::{compare_grads, finite_diff_grad, Matrix, ParamSet};

const REL_TOL: f64 = 1e-4;
const ABS_FLOOR: f64 = 1e-8;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_vec(r, c, random_vec(rng, r * c)).unwrap()
}

fn lstm_set(seed: u64, d: usize, h: usize) -> (ParamSet, LstmLayer) {
    let mut ps = ParamSet::new();
    let layer = LstmLayer::register(&mut ps, "l", d, h, &mut rng(seed)).unwrap();
    (ps, layer)
}

fn zero_lstm(d: usize, h: usize) -> ParamSet {
    let mut ps = ParamSet::new();
    ps.add("l.w_ih", Matrix::zeros(4 * h, d)).unwrap();
    ps.add("l.w_hh", Matrix::zeros(4 * h, h)).unwrap();
    ps.add("l.b", Matrix::zeros(4 * h, 1)).unwrap();
    ps
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Scalar reference cell, written independently of the vectorized kernel.
fn reference_cell(w_ih: &Matrix, w_hh: &Matrix, b: &Matrix, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let hs = h.len();
    let mut h_new = vec![0.0; hs];
    let mut c_new = vec![0.0; hs];
    for j in 0..hs {
        let mut pre = [0.0f64; 4];
        for (k, p) in pre.iter_mut().enumerate() {
            let row = k * hs + j;
            let mut s = b.get(row, 0);
            for (d, xv) in x.iter().enumerate() {
                s += w_ih.get(row, d) * xv;
            }
            for (l, hv) in h.iter().enumerate() {
                s += w_hh.get(row, l) * hv;
            }
            *p = s;
        }
        let i = sig(pre[0]);
        let f = sig(pre[1]);
        let g = pre[2].tanh();
        let o = sig(pre[3]);
        c_new[j] = f * c[j] + i * g;
        h_new[j] = o * c_new[j].tanh();
    }
    (h_new, c_new)
}

#[test]
fn zero_params_zero_state_gives_zero() {
    let ps = zero_lstm(3, 4);
    let layer = LstmLayer::register(&mut ParamSet::new(), "l", 3, 4, &mut rng(0)).unwrap();
    let p = layer.params(ps.values());
    let (next, _) = lstm_cell_forward(&[0.3, -2.0, 7.0], &LstmState::zeros(4), &p).unwrap();
    assert!(next.h.iter().chain(&next.c).all(|&v| v == 0.0));
}

#[test]
fn zero_params_halve_cell_state() {
    let ps = zero_lstm(2, 3);
    let layer = LstmLayer::register(&mut ParamSet::new(), "l", 2, 3, &mut rng(0)).unwrap();
    let p = layer.params(ps.values());
    let prev = LstmState { h: vec![0.0; 3], c: vec![1.0, -0.4, 2.5] };
    let (next, _) = lstm_cell_forward(&[1.0, 1.0], &prev, &p).unwrap();
    for j in 0..3 {
        let c = 0.5 * prev.c[j];
        assert!((next.c[j] - c).abs() < 1e-15);
        assert!((next.h[j] - 0.5 * c.tanh()).abs() < 1e-15);
    }
}

#[test]
fn cell_matches_scalar_reference() {
    for seed in 0..3 {
        let (ps, layer) = lstm_set(seed, 3, 5);
        let p = layer.params(ps.values());
        let mut r = rng(100 + seed);
        let x = random_vec(&mut r, 3);
        let prev = LstmState { h: random_vec(&mut r, 5), c: random_vec(&mut r, 5) };
        let (next, _) = lstm_cell_forward(&x, &prev, &p).unwrap();
        let (h_ref, c_ref) = reference_cell(p.w_ih, p.w_hh, p.b, &x, &prev.h, &prev.c);
        for j in 0..5 {
            assert!((next.h[j] - h_ref[j]).abs() < 1e-14);
            assert!((next.c[j] - c_ref[j]).abs() < 1e-14);
        }
    }
}

#[test]
fn cell_shape_errors() {
    let (ps, layer) = lstm_set(1, 3, 2);
    let p = layer.params(ps.values());
    assert!(lstm_cell_forward(&[1.0], &LstmState::zeros(2), &p).is_err());
    assert!(lstm_cell_forward(&[1.0; 3], &LstmState::zeros(3), &p).is_err());
}

#[test]
fn cell_backward_zero_upstream() {
    let (mut ps, layer) = lstm_set(4, 3, 4);
    let mut r = rng(9);
    let x = random_vec(&mut r, 3);
    let prev = LstmState { h: random_vec(&mut r, 4), c: random_vec(&mut r, 4) };
    let (values, grads) = ps.split_mut();
    let p = layer.params(values);
    let (_, cache) = lstm_cell_forward(&x, &prev, &p).unwrap();
    let mut g = layer.grads(grads);
    let out = lstm_cell_backward(&[0.0; 4], &[0.0; 4], &cache, &p, &mut g).unwrap();
    assert!(out.dx.iter().chain(&out.dh_prev).chain(&out.dc_prev).all(|&v| v == 0.0));
    assert!(ps.grads().iter().all(|g| g.as_slice().iter().all(|&v| v == 0.0)));
}

/// Loss over one or two chained cells: Σ h'. Inputs and initial state are
/// appended to the parameter set so their gradients are checked too.
fn chained_cells_check(seed: u64, steps: usize) {
    let (d, h) = (3, 4);
    let (mut ps, layer) = lstm_set(seed, d, h);
    let mut r = rng(seed + 50);
    let x_idx = ps.add("x", random_matrix(&mut r, steps, d)).unwrap();
    let h0_idx = ps.add("h0", random_matrix(&mut r, h, 1)).unwrap();
    let c0_idx = ps.add("c0", random_matrix(&mut r, h, 1)).unwrap();

    let loss = |ps: &ParamSet| -> crate::Result<f64> {
        let p = layer.params(ps.values());
        let mut st = LstmState { h: ps.value(h0_idx).as_slice().to_vec(), c: ps.value(c0_idx).as_slice().to_vec() };
        for t in 0..steps {
            st = lstm_cell_forward(ps.value(x_idx).row(t), &st, &p)?.0;
        }
        Ok(st.h.iter().sum())
    };

    // analytic
    let (values, grads) = ps.split_mut();
    let p = layer.params(values);
    let mut st = LstmState { h: values[h0_idx].as_slice().to_vec(), c: values[c0_idx].as_slice().to_vec() };
    let mut caches = Vec::new();
    for t in 0..steps {
        let (next, cache) = lstm_cell_forward(values[x_idx].row(t), &st, &p).unwrap();
        caches.push(cache);
        st = next;
    }
    let mut dx_all = vec![vec![0.0; d]; steps];
    let (mut dh, mut dc) = (vec![1.0; h], vec![0.0; h]);
    {
        let mut g = layer.grads(grads);
        for t in (0..steps).rev() {
            let out = lstm_cell_backward(&dh, &dc, &caches[t], &p, &mut g).unwrap();
            dx_all[t] = out.dx;
            dh = out.dh_prev;
            dc = out.dc_prev;
        }
    }
    for t in 0..steps {
        grads[x_idx].row_mut(t).copy_from_slice(&dx_all[t]);
    }
    grads[h0_idx].as_mut_slice().copy_from_slice(&dh);
    grads[c0_idx].as_mut_slice().copy_from_slice(&dc);
    let analytic = ps.grads().to_vec();

    let numeric = finite_diff_grad(loss, &mut ps, 1e-5).unwrap();
    let cmp = compare_grads(ps.names(), &analytic, &numeric);
    assert!(cmp.passes(REL_TOL, ABS_FLOOR), "seed {seed}, steps {steps}: {}", cmp.summary(REL_TOL, ABS_FLOOR));
}

#[test]
fn single_cell_gradients_match_finite_differences() {
    for seed in 0..3 {
        chained_cells_check(seed, 1);
    }
}

#[test]
fn two_chained_cells_accumulate_shared_gradients() {
    for seed in 0..3 {
        chained_cells_check(seed, 2);
    }
}

#[test]
fn sequence_of_one_equals_one_cell() {
    let (ps, layer) = lstm_set(3, 2, 3);
    let p = layer.params(ps.values());
    let xs = Matrix::from_vec(1, 2, vec![0.4, -0.9]).unwrap();
    let seq = lstm_sequence(&xs, &LstmState::zeros(3), &p).unwrap();
    let (cell, _) = lstm_cell_forward(xs.row(0), &LstmState::zeros(3), &p).unwrap();
    assert_eq!(seq.final_state(), cell);
    assert_eq!(seq.len(), 1);
}

#[test]
fn sequence_zero_params_zero_outputs() {
    let ps = zero_lstm(2, 3);
    let layer = LstmLayer::register(&mut ParamSet::new(), "l", 2, 3, &mut rng(0)).unwrap();
    let xs = random_matrix(&mut rng(5), 6, 2);
    let seq = lstm_sequence(&xs, &LstmState::zeros(3), &layer.params(ps.values())).unwrap();
    assert!(seq.hidden_matrix().as_slice().iter().all(|&v| v == 0.0));
}

#[test]
fn sequence_final_state_matches_reference() {
    let (ps, layer) = lstm_set(11, 3, 4);
    let p = layer.params(ps.values());
    let xs = random_matrix(&mut rng(12), 5, 3);
    let seq = lstm_sequence(&xs, &LstmState::zeros(4), &p).unwrap();
    let (mut h, mut c) = (vec![0.0; 4], vec![0.0; 4]);
    for t in 0..5 {
        (h, c) = reference_cell(p.w_ih, p.w_hh, p.b, xs.row(t), &h, &c);
    }
    for j in 0..4 {
        assert!((seq.final_state().h[j] - h[j]).abs() < 1e-14);
    }
}

#[test]
fn empty_sequence_rejected() {
    let (ps, layer) = lstm_set(0, 2, 2);
    assert!(lstm_sequence(&Matrix::zeros(0, 2), &LstmState::zeros(2), &layer.params(ps.values())).is_err());
}

#[test]
fn sequence_backward_matches_finite_differences() {
    for seed in 0..3 {
        let (d, h, n) = (2, 3, 6);
        let (mut ps, layer) = lstm_set(seed, d, h);
        let mut r = rng(seed + 7);
        let xs = random_matrix(&mut r, n, d);
        let weights = random_matrix(&mut r, n, h);
        let cw = random_vec(&mut r, h);
        let loss = |ps: &ParamSet| -> crate::Result<f64> {
            let seq = lstm_sequence(&xs, &LstmState::zeros(h), &layer.params(ps.values()))?;
            let hm = seq.hidden_matrix();
            let mut l: f64 = hm.as_slice().iter().zip(weights.as_slice()).map(|(a, b)| a * b).sum();
            l += seq.final_state().c.iter().zip(&cw).map(|(a, b)| a * b).sum::<f64>();
            Ok(l)
        };
        let (values, grads) = ps.split_mut();
        let p = layer.params(values);
        let seq = lstm_sequence(&xs, &LstmState::zeros(h), &p).unwrap();
        lstm_sequence_backward(&seq, &p, &mut layer.grads(grads), &weights, Some(&cw)).unwrap();
        let analytic = ps.grads().to_vec();
        let numeric = finite_diff_grad(loss, &mut ps, 1e-5).unwrap();
        let cmp = compare_grads(ps.names(), &analytic, &numeric);
        assert!(cmp.passes(REL_TOL, ABS_FLOOR), "{}", cmp.summary(REL_TOL, ABS_FLOOR));
    }
}

#[test]
fn bilstm_zero_backward_params_give_forward_terminal() {
    let mut ps = ParamSet::new();
    let fwd = LstmLayer::register(&mut ps, "f", 2, 3, &mut rng(1)).unwrap();
    let zeros = zero_lstm(2, 3);
    let bwd = LstmLayer::register(&mut ParamSet::new(), "l", 2, 3, &mut rng(0)).unwrap();
    let xs = random_matrix(&mut rng(2), 4, 2);
    let out = bilstm_embed(&xs, &fwd.params(ps.values()), &bwd.params(zeros.values())).unwrap();
    assert_eq!(out.embedding.as_slice(), out.fwd_hidden(3));
}

#[test]
fn bilstm_length_one() {
    let mut ps = ParamSet::new();
    let layer = BiLstmLayer::register(&mut ps, "b", 2, 3, &mut rng(3)).unwrap();
    let (fp, bp) = (layer.fwd.params(ps.values()), layer.bwd.params(ps.values()));
    let x = [0.7, -0.1];
    let xs = Matrix::from_vec(1, 2, x.to_vec()).unwrap();
    let out = bilstm_embed(&xs, &fp, &bp).unwrap();
    let (hf, _) = lstm_cell_forward(&x, &LstmState::zeros(3), &fp).unwrap();
    let (hb, _) = lstm_cell_forward(&x, &LstmState::zeros(3), &bp).unwrap();
    for j in 0..3 {
        assert_eq!(out.embedding[j], hf.h[j] + hb.h[j]);
    }
}

#[test]
fn bilstm_time_reversal_symmetry() {
    let mut ps = ParamSet::new();
    let layer = BiLstmLayer::register(&mut ps, "b", 3, 4, &mut rng(8)).unwrap();
    let (fp, bp) = (layer.fwd.params(ps.values()), layer.bwd.params(ps.values()));
    let xs = random_matrix(&mut rng(9), 7, 3);
    let mut rev = Matrix::zeros(7, 3);
    for t in 0..7 {
        rev.row_mut(6 - t).copy_from_slice(xs.row(t));
    }
    let a = bilstm_embed(&xs, &fp, &bp).unwrap();
    let b = bilstm_embed(&rev, &bp, &fp).unwrap();
    for (x, y) in a.embedding.iter().zip(&b.embedding) {
        assert!((x - y).abs() < 1e-15);
    }
}

#[test]
fn bilstm_rejects_mismatched_hidden() {
    let mut ps = ParamSet::new();
    let f = LstmLayer::register(&mut ps, "f", 2, 3, &mut rng(1)).unwrap();
    let b = LstmLayer::register(&mut ps, "b", 2, 4, &mut rng(1)).unwrap();
    let xs = Matrix::zeros(3, 2);
    assert!(bilstm_embed(&xs, &f.params(ps.values()), &b.params(ps.values())).is_err());
}

#[test]
fn bilstm_backward_matches_finite_differences() {
    for seed in 0..3 {
        let (d, h, n) = (2, 3, 5);
        let mut ps = ParamSet::new();
        let layer = BiLstmLayer::register(&mut ps, "b", d, h, &mut rng(seed)).unwrap();
        let mut r = rng(seed + 40);
        let xi = ps.add("xs", random_matrix(&mut r, n, d)).unwrap();
        let wf = random_matrix(&mut r, n, h);
        let wb = random_matrix(&mut r, n, h);
        let we = random_vec(&mut r, h);
        let loss = |ps: &ParamSet| -> crate::Result<f64> {
            let v = ps.values();
            let out = bilstm_embed(&v[xi], &layer.fwd.params(v), &layer.bwd.params(v))?;
            let mut l = 0.0;
            for t in 0..n {
                for j in 0..h {
                    l += out.fwd_hidden(t)[j] * wf.get(t, j) + out.bwd_hidden(t)[j] * wb.get(t, j);
                }
            }
            Ok(l + out.embedding.iter().zip(&we).map(|(a, b)| a * b).sum::<f64>())
        };
        let (values, grads) = ps.split_mut();
        let (fp, bp) = (layer.fwd.params(values), layer.bwd.params(values));
        let out = bilstm_embed(&values[xi], &fp, &bp).unwrap();
        let dxs = {
            let (mut fg, mut bg) = layer.grads(grads);
            bilstm_backward(&out, &fp, &bp, &mut fg, &mut bg, &wf, &wb, &we).unwrap()
        };
        grads[xi] = dxs;
        let analytic = ps.grads().to_vec();
        let numeric = finite_diff_grad(loss, &mut ps, 1e-5).unwrap();
        let cmp = compare_grads(ps.names(), &analytic, &numeric);
        assert!(cmp.passes(REL_TOL, ABS_FLOOR), "{}", cmp.summary(REL_TOL, ABS_FLOOR));
    }
}

#[test]
fn mlp_zero_params_zero_output() {
    let mut ps = ParamSet::new();
    let layer = MlpLayer::register(&mut ps, "m", 3, 4, 2, &mut rng(0)).unwrap();
    for i in 0..ps.len() {
        ps.value_mut(i).fill(0.0);
    }
    let (y, _) = mlp_forward(&[1.0, 2.0, 3.0], &layer.params(ps.values())).unwrap();
    assert_eq!(y, vec![0.0, 0.0]);
}

#[test]
fn mlp_bias_passthrough() {
    let mut ps = ParamSet::new();
    ps.add("w1", Matrix::zeros(3, 3)).unwrap();
    ps.add("b1", Matrix::zeros(3, 1)).unwrap();
    ps.add("w2", Matrix::identity(3)).unwrap();
    ps.add("b2", Matrix::from_vec(3, 1, vec![0.5, -1.0, 2.0]).unwrap()).unwrap();
    let v = ps.values();
    let p = MlpParams { w1: &v[0], b1: &v[1], w2: &v[2], b2: &v[3] };
    let (y, _) = mlp_forward(&[9.0, 9.0, 9.0], &p).unwrap();
    assert_eq!(y, vec![0.5, -1.0, 2.0]);
}

#[test]
fn mlp_shape_mismatch() {
    let mut ps = ParamSet::new();
    let layer = MlpLayer::register(&mut ps, "m", 3, 4, 2, &mut rng(0)).unwrap();
    assert!(mlp_forward(&[1.0], &layer.params(ps.values())).is_err());
}

#[test]
fn mlp_backward_matches_finite_differences() {
    for seed in 0..3 {
        let mut ps = ParamSet::new();
        let layer = MlpLayer::register(&mut ps, "m", 4, 5, 3, &mut rng(seed)).unwrap();
        let mut r = rng(seed + 20);
        let xi = ps.add("x", random_matrix(&mut r, 4, 1)).unwrap();
        let w = random_vec(&mut r, 3);
        let loss = |ps: &ParamSet| -> crate::Result<f64> {
            let (y, _) = mlp_forward(ps.value(xi).as_slice(), &layer.params(ps.values()))?;
            Ok(y.iter().zip(&w).map(|(a, b)| a * b).sum())
        };
        let (values, grads) = ps.split_mut();
        let p = layer.params(values);
        let (_, cache) = mlp_forward(values[xi].as_slice(), &p).unwrap();
        let dx = mlp_backward(&w, &cache, &p, &mut layer.grads(grads)).unwrap();
        grads[xi].as_mut_slice().copy_from_slice(&dx);
        let analytic = ps.grads().to_vec();
        let numeric = finite_diff_grad(loss, &mut ps, 1e-5).unwrap();
        let cmp = compare_grads(ps.names(), &analytic, &numeric);
        assert!(cmp.passes(REL_TOL, ABS_FLOOR), "{}", cmp.summary(REL_TOL, ABS_FLOOR));
    }
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn unrolling_in_two_chunks_matches_whole(seed in 0u64..1000, split in 1usize..7) {
            let (ps, layer) = lstm_set(seed, 2, 3);
            let p = layer.params(ps.values());
            let xs = random_matrix(&mut rng(seed ^ 0xabc), 8, 2);
            let whole = lstm_sequence(&xs, &LstmState::zeros(3), &p).unwrap();
            let head = Matrix::from_vec(split, 2, xs.as_slice()[..split * 2].to_vec()).unwrap();
            let tail = Matrix::from_vec(8 - split, 2, xs.as_slice()[split * 2..].to_vec()).unwrap();
            let a = lstm_sequence(&head, &LstmState::zeros(3), &p).unwrap();
            let b = lstm_sequence(&tail, &a.final_state(), &p).unwrap();
            prop_assert_eq!(whole.final_state(), b.final_state());
        }

        #[test]
        fn hidden_bounded_and_cell_grows_at_most_linearly(seed in 0u64..1000, n in 1usize..30) {
            let (ps, layer) = lstm_set(seed, 3, 4);
            let p = layer.params(ps.values());
            let xs = random_matrix(&mut rng(seed + 1), n, 3);
            let seq = lstm_sequence(&xs, &LstmState::zeros(4), &p).unwrap();
            for t in 0..n {
                for j in 0..4 {
                    prop_assert!(seq.hidden(t)[j].abs() <= 1.0);
                    prop_assert!(seq.cell(t)[j].abs() <= (t + 1) as f64);
                }
            }
        }
    }
}
