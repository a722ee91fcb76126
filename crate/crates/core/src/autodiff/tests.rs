use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::params::{ParamStore, Role};

fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2 {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    Array2::from_vec(rows, cols, data).unwrap()
}

#[test]
fn sum_of_squares_gradient() {
    let mut store = ParamStore::new();
    let w = store.add(Role::F, "w", Array2::row(&[1.0, -2.0, 3.0]));
    let mut g = Graph::new();
    let wv = g.param(&store, w).unwrap();
    let sq = g.mul(wv, wv).unwrap();
    let loss = g.sum(sq).unwrap();
    assert_eq!(g.item(loss), 14.0);
    let grads = g.backward(loss).unwrap();
    assert_eq!(grads.get(w).unwrap().data(), &[2.0, -4.0, 6.0]);
}

#[test]
fn constant_loss_has_no_parameter_gradient() {
    let mut store = ParamStore::new();
    let w = store.add(Role::F, "w", Array2::row(&[1.0, 2.0]));
    let mut g = Graph::new();
    let _ = g.param(&store, w).unwrap();
    let c = g.constant(Array2::scalar(3.0)).unwrap();
    let grads = g.backward(c).unwrap();
    assert!(grads.get(w).is_none_or(|gr| gr.data().iter().all(|&v| v == 0.0)));
}

#[test]
fn non_scalar_loss_is_rejected() {
    let mut g = Graph::new();
    let c = g.constant(Array2::zeros(2, 1)).unwrap();
    assert!(matches!(
        g.backward(c),
        Err(AutodiffError::NonScalarLoss { shape: (2, 1) })
    ));
}

#[test]
fn non_finite_forward_names_the_op() {
    let mut g = Graph::new();
    let c = g.constant(Array2::row(&[0.0, 1.0])).unwrap();
    let err = g.log(c).unwrap_err();
    assert_eq!(
        err,
        AutodiffError::NonFinite {
            op: "log",
            pass: "forward"
        }
    );
}

#[test]
fn shape_mismatch_lists_both_shapes() {
    let mut g = Graph::new();
    let a = g.constant(Array2::zeros(2, 3)).unwrap();
    let b = g.constant(Array2::zeros(3, 2)).unwrap();
    let msg = g.add(a, b).unwrap_err().to_string();
    assert!(msg.contains("2×3") && msg.contains("3×2"), "{msg}");
}

#[test]
fn softmax_of_zeros_is_uniform() {
    let mut g = Graph::new();
    let a = g.constant(Array2::zeros(1, 3)).unwrap();
    let s = g.softmax_rows(a).unwrap();
    for &v in g.value(s).data() {
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }
}

#[test]
fn stop_gradient_blocks_one_factor() {
    let mut store = ParamStore::new();
    let x = store.add(Role::F, "x", Array2::scalar(2.0));
    let mut g = Graph::new();
    let xv = g.param(&store, x).unwrap();
    let frozen = g.stop_gradient(xv).unwrap();
    let y = g.mul(frozen, xv).unwrap();
    assert_eq!(g.item(y), 4.0);
    let grads = g.backward(y).unwrap();
    assert_eq!(grads.get(x).unwrap().item(), 2.0);
}

#[test]
fn squared_frobenius_value_and_gradient() {
    let mut store = ParamStore::new();
    let a = Array2::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let id = store.add(Role::F, "a", a.clone());
    let mut g = Graph::new();
    let av = g.param(&store, id).unwrap();
    let n = g.sq_frobenius(av).unwrap();
    assert_eq!(g.item(n), 30.0);
    let grads = g.backward(n).unwrap();
    assert_eq!(grads.get(id).unwrap(), &a.map(|v| 2.0 * v));
}

#[test]
fn fan_out_accumulates() {
    // y = x + x must have the same gradient as y = 2x
    let mut store = ParamStore::new();
    let x = store.add(Role::F, "x", Array2::row(&[0.7, -1.3]));
    let mut g = Graph::new();
    let xv = g.param(&store, x).unwrap();
    let twice = g.add(xv, xv).unwrap();
    let l1 = g.sum(twice).unwrap();
    let g1 = g.backward(l1).unwrap();

    let mut h = Graph::new();
    let xv = h.param(&store, x).unwrap();
    let scaled = h.scale(xv, 2.0).unwrap();
    let l2 = h.sum(scaled).unwrap();
    let g2 = h.backward(l2).unwrap();
    assert_eq!(g1.get(x), g2.get(x));
    assert_eq!(g1.get(x).unwrap().data(), &[2.0, 2.0]);
}

#[test]
fn relu_subgradient_at_zero_is_zero() {
    let mut store = ParamStore::new();
    let x = store.add(Role::F, "x", Array2::row(&[0.0, 1.0, -1.0]));
    let mut g = Graph::new();
    let xv = g.param(&store, x).unwrap();
    let r = g.relu(xv).unwrap();
    let l = g.sum(r).unwrap();
    let grads = g.backward(l).unwrap();
    assert_eq!(grads.get(x).unwrap().data(), &[0.0, 1.0, 0.0]);
}

fn sigmoid_layer_loss(store: &ParamStore, w: crate::params::ParamId, b: crate::params::ParamId, x: &Array2) -> Result<(Graph, Var), AutodiffError> {
    let mut g = Graph::new();
    let wv = g.param(store, w)?;
    let bv = g.param(store, b)?;
    let xv = g.constant(x.clone())?;
    let z = g.affine(xv, wv, bv)?;
    let s = g.sigmoid(z)?;
    let loss = g.mean(s)?;
    Ok((g, loss))
}

#[test]
fn sigmoid_layer_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut store = ParamStore::new();
    // x·W with W stored in×out = 3×4, i.e. a 4×3 map in column convention
    let w = store.add(Role::F, "w", random(&mut rng, 3, 4));
    let b = store.add(Role::F, "b", random(&mut rng, 1, 4));
    let x = random(&mut rng, 5, 3);
    let (g, loss) = sigmoid_layer_loss(&store, w, b, &x).unwrap();
    let grads = g.backward(loss).unwrap();
    let err = finite_diff_check(&mut store, &[w, b], &grads, 1e-6, |s| {
        let (g, l) = sigmoid_layer_loss(s, w, b, &x)?;
        Ok(g.item(l))
    })
    .unwrap();
    assert!(err < 1e-5, "relative error {err}");
}

#[test]
fn finite_diff_of_exact_quadratic() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut store = ParamStore::new();
    let w = store.add(Role::F, "w", random(&mut rng, 2, 3));
    let f = |s: &ParamStore| -> Result<(Graph, Var), AutodiffError> {
        let mut g = Graph::new();
        let wv = g.param(s, w)?;
        let l = g.sq_frobenius(wv)?;
        Ok((g, l))
    };
    let (g, l) = f(&store).unwrap();
    let grads = g.backward(l).unwrap();
    let err = finite_diff_check(&mut store, &[w], &grads, 1e-6, |s| {
        let (g, l) = f(s)?;
        Ok(g.item(l))
    })
    .unwrap();
    assert!(err < 1e-9, "{err}");
}

#[test]
fn relu_kink_coordinate_is_excluded() {
    // the first coordinate sits exactly on the kink: analytic 0, numeric 0.5
    let mut store = ParamStore::new();
    let w = store.add(Role::F, "w", Array2::row(&[0.0, 0.8]));
    let f = |s: &ParamStore| -> Result<(Graph, Var), AutodiffError> {
        let mut g = Graph::new();
        let wv = g.param(s, w)?;
        let r = g.relu(wv)?;
        let l = g.sum(r)?;
        Ok((g, l))
    };
    let (g, l) = f(&store).unwrap();
    let grads = g.backward(l).unwrap();
    let err = finite_diff_check(&mut store, &[w], &grads, 1e-6, |s| {
        let (g, l) = f(s)?;
        Ok(g.item(l))
    })
    .unwrap();
    assert!(err < 1e-9, "{err}");
}

/// Every op on one random composite, checked against central differences.
#[test]
fn all_ops_match_finite_differences() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let a = store.add(Role::F, "a", random(&mut rng, 3, 4));
        let b = store.add(Role::G, "b", random(&mut rng, 4, 2));
        let bias = store.add(Role::H, "bias", random(&mut rng, 1, 2));
        let col = store.add(Role::D, "col", random(&mut rng, 3, 1));
        let build = |s: &ParamStore| -> Result<(Graph, Var), AutodiffError> {
            let mut g = Graph::new();
            let av = g.param(s, a)?;
            let bv = g.param(s, b)?;
            let biasv = g.param(s, bias)?;
            let colv = g.param(s, col)?;
            let ab = g.matmul(av, bv)?;
            let z = g.add_row(ab, biasv)?;
            let t = g.tanh(z)?;
            let sg = g.sigmoid(z)?;
            let prod = g.mul(t, sg)?;
            let cat = g.concat_cols(&[prod, z, t])?;
            let sl = g.slice_cols(cat, 1, 5)?;
            let lsm = g.log_softmax_rows(sl)?;
            let sm = g.softmax_rows(sl)?;
            let lg = g.log(sm)?;
            let diff = g.sub(lsm, lg)?; // ≈ 0 but exercises both paths
            let picked = g.pick(lsm, &[0, 3, 1])?;
            let weighted = g.mul_col(sl, colv)?;
            let rows = g.select_rows(weighted, &[2, 0, 2])?;
            let norms = g.row_norms(rows)?;
            let ls = g.log_sigmoid(z)?;
            let rs = g.sum_cols(ls)?;
            let r = g.relu(z)?;
            let parts = [
                g.sum(picked)?,
                g.mean(norms)?,
                g.sum(rs)?,
                g.sq_frobenius(diff)?,
                g.mean(r)?,
                g.sq_frobenius(colv)?,
            ];
            let mut total = parts[0];
            for &p in &parts[1..] {
                total = g.add(total, p)?;
            }
            let total = g.scale(total, 0.7)?;
            Ok((g, total))
        };
        let (g, l) = build(&store).unwrap();
        let grads = g.backward(l).unwrap();
        let err = finite_diff_check(&mut store, &[a, b, bias, col], &grads, 1e-6, |s| {
            let (g, l) = build(s)?;
            Ok(g.item(l))
        })
        .unwrap();
        assert!(err < 1e-5, "seed {seed}: {err}");
    }
}

#[test]
fn forward_and_backward_are_deterministic() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut store = ParamStore::new();
        let w = store.add(Role::F, "w", random(&mut rng, 4, 4));
        let x = random(&mut rng, 3, 4);
        let mut g = Graph::new();
        let xv = g.constant(x).unwrap();
        let wv = g.param(&store, w).unwrap();
        let h = g.matmul(xv, wv).unwrap();
        let h = g.tanh(h).unwrap();
        let l = g.sq_frobenius(h).unwrap();
        let grads = g.backward(l).unwrap();
        (g.item(l).to_bits(), grads.get(w).unwrap().clone())
    };
    assert_eq!(run(), run());
}

#[test]
fn frozen_parameters_receive_no_gradient() {
    let mut store = ParamStore::new();
    let f = store.add(Role::F, "f", Array2::scalar(1.5));
    let d = store.add(Role::D, "d", Array2::scalar(-0.5));
    let mut g = Graph::with_trainable(Trainable::Only(crate::params::UpdateSet::Discriminator));
    let fv = g.param(&store, f).unwrap();
    let dv = g.param(&store, d).unwrap();
    let p = g.mul(fv, dv).unwrap();
    let grads = g.backward(p).unwrap();
    assert!(grads.get(f).is_none());
    assert_eq!(grads.get(d).unwrap().item(), 1.5);
}
