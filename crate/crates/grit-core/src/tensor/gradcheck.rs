//! Central-difference gradient verification.
//!
//! The analytic gradient from one backward pass is compared against
//! `(f(x + h e_i) - f(x - h e_i)) / 2h` for every coordinate. Inputs must be
//! sampled away from the non-differentiable points (relu and the signed
//! square root at zero); with `h = 1e-5` that means keeping entries at least
//! about `10 * sqrt(h) ≈ 3e-2` in magnitude when they feed a kinked op.

use super::{Tape, TensorRef};

#[derive(Debug, Clone)]
pub struct GradcheckReport {
    pub max_rel_err: f64,
    pub tol: f64,
    pub pass: bool,
    /// (input index, coordinate) of the worst entry.
    pub worst: Option<(usize, usize)>,
}

/// Relative error with a small floor so near-zero pairs compare absolutely.
fn rel_err(a: f64, fd: f64) -> f64 {
    (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6)
}

/// Checks `f`'s gradient w.r.t. several inputs at once. `f` receives leaf
/// tensors in the order of `inputs` (each `(rows, cols, data)`) and must
/// return a scalar.
pub fn gradcheck_multi<F>(
    f: F,
    inputs: &[(usize, usize, Vec<f64>)],
    h: f64,
    tol: f64,
) -> GradcheckReport
where
    F: Fn(&mut Tape, &[TensorRef]) -> TensorRef,
{
    let eval = |datas: &[Vec<f64>]| -> f64 {
        let mut tape = Tape::new();
        let refs: Vec<TensorRef> = inputs
            .iter()
            .zip(datas)
            .map(|(&(r, c, _), d)| tape.leaf(r, c, d.clone(), true))
            .collect();
        let out = f(&mut tape, &refs);
        tape.scalar_value(out)
    };

    // analytic gradients
    let mut tape = Tape::new();
    let refs: Vec<TensorRef> = inputs
        .iter()
        .map(|&(r, c, ref d)| tape.leaf(r, c, d.clone(), true))
        .collect();
    let out = f(&mut tape, &refs);
    let grads = tape.backward(out);
    let analytic: Vec<Vec<f64>> = refs
        .iter()
        .zip(inputs)
        .map(|(&t, &(r, c, _))| grads.get_or_zeros(t, r * c))
        .collect();

    let base: Vec<Vec<f64>> = inputs.iter().map(|(_, _, d)| d.clone()).collect();
    let mut max_rel_err: f64 = 0.0;
    let mut worst = None;
    for (which, (_, _, data)) in inputs.iter().enumerate() {
        for coord in 0..data.len() {
            let mut plus = base.clone();
            plus[which][coord] += h;
            let mut minus = base.clone();
            minus[which][coord] -= h;
            let fd = (eval(&plus) - eval(&minus)) / (2.0 * h);
            let err = rel_err(analytic[which][coord], fd);
            if err > max_rel_err {
                max_rel_err = err;
                worst = Some((which, coord));
            }
        }
    }
    GradcheckReport { max_rel_err, tol, pass: max_rel_err <= tol, worst }
}

/// Single-input convenience wrapper around [`gradcheck_multi`].
pub fn gradcheck<F>(f: F, rows: usize, cols: usize, x: &[f64], h: f64, tol: f64) -> GradcheckReport
where
    F: Fn(&mut Tape, TensorRef) -> TensorRef,
{
    gradcheck_multi(
        |tape, refs| f(tape, refs[0]),
        &[(rows, cols, x.to_vec())],
        h,
        tol,
    )
}
