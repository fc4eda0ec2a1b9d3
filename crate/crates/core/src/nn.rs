//! Multi-layer perceptrons over a shared [`ParamSet`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Bound, Mat, ParamId, ParamSet, Tape, Var};

/// Fully connected ReLU network; the final layer is linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<(ParamId, ParamId)>,
    input: usize,
    output: usize,
}

impl Mlp {
    /// Registers weights `"{prefix}.w{i}"` / `"{prefix}.b{i}"` in `params`.
    pub fn new(
        params: &mut ParamSet,
        prefix: &str,
        input: usize,
        hidden: &[usize],
        output: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let mut widths = vec![input];
        widths.extend_from_slice(hidden);
        widths.push(output);
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let wid = params.add_weight(format!("{prefix}.w{i}"), w[0], w[1], rng);
                let bid = params.add_bias(format!("{prefix}.b{i}"), w[1]);
                (wid, bid)
            })
            .collect();
        Self {
            layers,
            input,
            output,
        }
    }

    pub fn input_width(&self) -> usize {
        self.input
    }

    pub fn output_width(&self) -> usize {
        self.output
    }

    pub fn forward(&self, tape: &mut Tape, bound: &Bound, x: Var) -> Var {
        let mut h = x;
        let last = self.layers.len() - 1;
        for (i, &(w, b)) in self.layers.iter().enumerate() {
            let z = tape.matmul(h, bound.get(w));
            h = tape.add_row(z, bound.get(b));
            if i < last {
                h = tape.relu(h);
            }
        }
        h
    }

    /// Tape-free evaluation with identical arithmetic.
    pub fn eval(&self, params: &ParamSet, x: &Mat) -> Mat {
        let mut h = x.clone();
        let last = self.layers.len() - 1;
        for (i, &(w, b)) in self.layers.iter().enumerate() {
            h = h.matmul(params.get(w)).add_row(params.get(b));
            if i < last {
                h = h.map(crate::autodiff::mat::relu);
            }
        }
        h
    }

    /// Parameter ids of the final layer (weight, bias).
    pub fn output_layer(&self) -> (ParamId, ParamId) {
        *self.layers.last().expect("mlp has at least one layer")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{check_gradients, GradCheckConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn loss_and_grads(mlp: &Mlp, params: &ParamSet, x: &Mat) -> (f64, Vec<Mat>) {
        let mut tape = Tape::new();
        let bound = params.bind(&mut tape);
        let xv = tape.constant(x.clone());
        let y = mlp.forward(&mut tape, &bound, xv);
        let sq = tape.square(y);
        let l = tape.mean(sq);
        let g = tape.backward(l);
        (tape.value(l).item(), params.grads(&g, &bound))
    }

    #[test]
    fn tape_and_eval_paths_agree_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut params = ParamSet::new();
        let mlp = Mlp::new(&mut params, "m", 4, &[8, 5], 3, &mut rng);
        let x = Mat::from_vec(2, 4, (0..8).map(|i| i as f64 * 0.1 - 0.3).collect());
        let mut tape = Tape::new();
        let bound = params.bind(&mut tape);
        let xv = tape.constant(x.clone());
        let y = mlp.forward(&mut tape, &bound, xv);
        assert_eq!(tape.value(y), &mlp.eval(&params, &x));
    }

    #[test]
    fn mlp_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut params = ParamSet::new();
        let mlp = Mlp::new(&mut params, "m", 3, &[6, 4], 2, &mut rng);
        // nonzero biases so every unit sits away from its kink
        for name in ["m.b0", "m.b1", "m.b2"] {
            let id = params.id_of(name).unwrap();
            for x in &mut params.get_mut(id).data {
                *x = rng.gen_range(0.05..0.3);
            }
        }
        let x = Mat::from_vec(3, 3, (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let (_, grads) = loss_and_grads(&mlp, &params, &x);
        let report = check_gradients(
            &params,
            &grads,
            |p| loss_and_grads(&mlp, p, &x).0,
            GradCheckConfig::default(),
        );
        assert!(report.passed(), "{:?}", report.failures);
    }
}
