//! A standard LSTM cell composed from tape primitives.

use crate::error::Result;

use super::tape::{Tape, Var};

/// Parameter handles for one LSTM cell. Weights are laid out with the four
/// gates stacked in i, f, g, o order: `w_ih` is `[4H, in]`, `w_hh` is
/// `[4H, H]`, `b` is `[4H]`.
#[derive(Debug, Clone, Copy)]
pub struct LstmVars {
    pub w_ih: Var,
    pub w_hh: Var,
    pub b: Var,
}

/// One gated update: returns the new hidden and cell states.
pub fn lstm_cell(
    tape: &mut Tape,
    x: Var,
    h_prev: Var,
    c_prev: Var,
    params: LstmVars,
) -> Result<(Var, Var)> {
    let hidden = tape.value(h_prev).len();
    let zx = tape.matmul(params.w_ih, x)?;
    let zh = tape.matmul(params.w_hh, h_prev)?;
    let zsum = tape.add(zx, zh)?;
    let z = tape.add(zsum, params.b)?;

    let zi = tape.slice(z, 0, hidden)?;
    let zf = tape.slice(z, hidden, hidden)?;
    let zg = tape.slice(z, 2 * hidden, hidden)?;
    let zo = tape.slice(z, 3 * hidden, hidden)?;

    let i = tape.sigmoid(zi);
    let f = tape.sigmoid(zf);
    let g = tape.tanh(zg);
    let o = tape.sigmoid(zo);

    let fc = tape.mul(f, c_prev)?;
    let ig = tape.mul(i, g)?;
    let c = tape.add(fc, ig)?;
    let tc = tape.tanh(c);
    let h = tape.mul(o, tc)?;
    Ok((h, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::check::grad_check;
    use crate::autodiff::tensor::Tensor;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn zeros_cell(tape: &mut Tape, hidden: usize, input: usize) -> LstmVars {
        LstmVars {
            w_ih: tape.leaf(Tensor::zeros(vec![4 * hidden, input])),
            w_hh: tape.leaf(Tensor::zeros(vec![4 * hidden, hidden])),
            b: tape.leaf(Tensor::zeros(vec![4 * hidden])),
        }
    }

    #[test]
    fn zero_weights_zero_state_is_fixed_point() {
        let mut tape = Tape::new();
        let params = zeros_cell(&mut tape, 3, 2);
        let x = tape.constant(Tensor::vector(vec![0.0, 0.0]));
        let h0 = tape.constant(Tensor::zeros(vec![3]));
        let c0 = tape.constant(Tensor::zeros(vec![3]));
        let (h, c) = lstm_cell(&mut tape, x, h0, c0, params).unwrap();
        assert_eq!(tape.value(h).data(), &[0.0, 0.0, 0.0]);
        assert_eq!(tape.value(c).data(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn saturated_forget_gate_preserves_cell() {
        // Bias of +100 on the forget gate saturates sigmoid to ~1, so
        // c ~= c_prev + i (.) g; compare against the direct formula.
        let hidden = 2;
        let input = 2;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut tape = Tape::new();
        let w_ih_data: Vec<f64> = (0..4 * hidden * input).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let w_hh_data: Vec<f64> = (0..4 * hidden * hidden).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let mut b_data = vec![0.0; 4 * hidden];
        for bv in b_data.iter_mut().take(2 * hidden).skip(hidden) {
            *bv = 100.0;
        }
        let params = LstmVars {
            w_ih: tape.leaf(Tensor::matrix(4 * hidden, input, w_ih_data.clone()).unwrap()),
            w_hh: tape.leaf(Tensor::matrix(4 * hidden, hidden, w_hh_data.clone()).unwrap()),
            b: tape.leaf(Tensor::vector(b_data.clone())),
        };
        let xv = vec![0.3, -0.7];
        let hv = vec![0.1, 0.2];
        let cv = vec![0.5, -0.4];
        let x = tape.constant(Tensor::vector(xv.clone()));
        let h0 = tape.constant(Tensor::vector(hv.clone()));
        let c0 = tape.constant(Tensor::vector(cv.clone()));
        let (_, c) = lstm_cell(&mut tape, x, h0, c0, params).unwrap();

        // Direct gate evaluation.
        let sigmoid = |x: f64| 1.0 / (1.0 + (-x).exp());
        let gate = |row: usize| -> f64 {
            let mut z = b_data[row];
            for (j, xj) in xv.iter().enumerate() {
                z += w_ih_data[row * input + j] * xj;
            }
            for (j, hj) in hv.iter().enumerate() {
                z += w_hh_data[row * hidden + j] * hj;
            }
            z
        };
        for k in 0..hidden {
            let i = sigmoid(gate(k));
            let g = gate(2 * hidden + k).tanh();
            let expected = cv[k] + i * g;
            assert!((tape.value(c).data()[k] - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let hidden = 4;
        let input = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rand_t = |rng: &mut ChaCha8Rng, shape: Vec<usize>| {
            let n: usize = shape.iter().product();
            Tensor::from_vec(shape, (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect()).unwrap()
        };
        let inputs = vec![
            rand_t(&mut rng, vec![4 * hidden, input]),
            rand_t(&mut rng, vec![4 * hidden, hidden]),
            rand_t(&mut rng, vec![4 * hidden]),
            rand_t(&mut rng, vec![input]),
            rand_t(&mut rng, vec![hidden]),
            rand_t(&mut rng, vec![hidden]),
        ];
        let report = grad_check(
            |tape, vars| {
                let params = LstmVars { w_ih: vars[0], w_hh: vars[1], b: vars[2] };
                let (h, c) = lstm_cell(tape, vars[3], vars[4], vars[5], params)?;
                let hc = tape.concat(&[h, c])?;
                Ok(tape.sum(hc))
            },
            &inputs,
            1e-5,
            1e-6,
        )
        .unwrap();
        assert!(report.passed(), "max rel err {}", report.max_rel_err);
    }
}
