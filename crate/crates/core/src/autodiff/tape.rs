//! Reverse-mode automatic differentiation over [`Mat`] values.
//!
//! A [`Tape`] records every operation of one forward evaluation. Calling
//! [`Tape::backward`] on a scalar node returns the gradient of that scalar
//! with respect to every recorded node; callers read off the gradients of
//! the leaves they bound as parameters.

use super::mat::{relu, sigmoid, softmax_in_place, softplus, Mat};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Const,
    MatMul(Var, Var),
    MatMulT(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    MulCol(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Relu(Var),
    Softplus(Var),
    Exp(Var),
    Log(Var),
    ClampMin(Var, f64),
    Square(Var),
    SoftmaxRows(Var),
    CausalSoftmaxRows(Var),
    ConcatCols(Vec<Var>),
    SliceCols(Var, usize),
    SelectRows(Var, Vec<usize>),
    SumAll(Var),
    SumCols(Var),
}

struct Node {
    value: Mat,
    op: Op,
    /// Whether any leaf feeds this node.
    grad: bool,
}

impl Op {
    fn inputs(&self) -> Vec<Var> {
        match self {
            Op::Leaf | Op::Const => Vec::new(),
            Op::MatMul(a, b)
            | Op::MatMulT(a, b)
            | Op::Add(a, b)
            | Op::Sub(a, b)
            | Op::Mul(a, b)
            | Op::AddRow(a, b)
            | Op::MulCol(a, b) => vec![*a, *b],
            Op::Scale(a, _)
            | Op::AddScalar(a)
            | Op::Relu(a)
            | Op::Softplus(a)
            | Op::Exp(a)
            | Op::Log(a)
            | Op::ClampMin(a, _)
            | Op::Square(a)
            | Op::SoftmaxRows(a)
            | Op::CausalSoftmaxRows(a)
            | Op::SliceCols(a, _)
            | Op::SelectRows(a, _)
            | Op::SumAll(a)
            | Op::SumCols(a) => vec![*a],
            Op::ConcatCols(parts) => parts.clone(),
        }
    }
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of one backward pass, indexed by [`Var`].
pub struct Gradients {
    grads: Vec<Option<Mat>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    /// Gradient of `v`; zeros when nothing flowed into it.
    pub fn of(&self, v: Var) -> Mat {
        match &self.grads[v.0] {
            Some(g) => g.clone(),
            None => {
                let (r, c) = self.shapes[v.0];
                Mat::zeros(r, c)
            }
        }
    }

    pub fn take(&mut self, v: Var) -> Mat {
        match self.grads[v.0].take() {
            Some(g) => g,
            None => {
                let (r, c) = self.shapes[v.0];
                Mat::zeros(r, c)
            }
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Mat, op: Op) -> Var {
        let grad = match op {
            Op::Leaf => true,
            _ => op.inputs().iter().any(|v| self.nodes[v.0].grad),
        };
        self.nodes.push(Node { value, op, grad });
        Var(self.nodes.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Mat {
        &self.nodes[v.0].value
    }

    pub fn leaf(&mut self, value: Mat) -> Var {
        self.push(value, Op::Leaf)
    }

    /// A node no gradient is propagated into.
    pub fn constant(&mut self, value: Mat) -> Var {
        self.push(value, Op::Const)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    /// `a @ b^T`.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul_t(self.value(b));
        self.push(v, Op::MatMulT(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y);
        self.push(v, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip_map(self.value(b), |x, y| x - y);
        self.push(v, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y);
        self.push(v, Op::Mul(a, b))
    }

    /// Broadcast-adds a 1×c row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let v = self.value(a).add_row(self.value(row));
        self.push(v, Op::AddRow(a, row))
    }

    /// Multiplies every row `r` of `a` by the scalar `col[r]` (col is r×1).
    pub fn mul_col(&mut self, a: Var, col: Var) -> Var {
        let (av, cv) = (self.value(a), self.value(col));
        assert_eq!(cv.cols, 1);
        assert_eq!(cv.rows, av.rows);
        let mut out = av.clone();
        for r in 0..out.rows {
            let s = cv.data[r];
            for x in out.row_mut(r) {
                *x *= s;
            }
        }
        self.push(out, Op::MulCol(a, col))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let v = self.value(a).map(|x| x * s);
        self.push(v, Op::Scale(a, s))
    }

    pub fn add_scalar(&mut self, a: Var, s: f64) -> Var {
        let v = self.value(a).map(|x| x + s);
        self.push(v, Op::AddScalar(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(relu);
        self.push(v, Op::Relu(a))
    }

    pub fn softplus(&mut self, a: Var) -> Var {
        let v = self.value(a).map(softplus);
        self.push(v, Op::Softplus(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::exp);
        self.push(v, Op::Exp(a))
    }

    pub fn log(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::ln);
        self.push(v, Op::Log(a))
    }

    /// `max(a, floor)` elementwise; no gradient below the floor.
    pub fn clamp_min(&mut self, a: Var, floor: f64) -> Var {
        let v = self.value(a).map(|x| x.max(floor));
        self.push(v, Op::ClampMin(a, floor))
    }

    pub fn square(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x * x);
        self.push(v, Op::Square(a))
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let mut v = self.value(a).clone();
        for r in 0..v.rows {
            softmax_in_place(v.row_mut(r));
        }
        self.push(v, Op::SoftmaxRows(a))
    }

    /// Row-wise softmax of a square score matrix where row `i` only sees
    /// columns `0..=i`; masked entries are exactly zero.
    pub fn causal_softmax_rows(&mut self, a: Var) -> Var {
        let mut v = self.value(a).clone();
        assert_eq!(v.rows, v.cols, "causal softmax needs a square score matrix");
        for r in 0..v.rows {
            let row = v.row_mut(r);
            softmax_in_place(&mut row[..=r]);
            for x in &mut row[r + 1..] {
                *x = 0.0;
            }
        }
        self.push(v, Op::CausalSoftmaxRows(a))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let mats: Vec<&Mat> = parts.iter().map(|&p| self.value(p)).collect();
        let v = Mat::concat_cols(&mats);
        self.push(v, Op::ConcatCols(parts.to_vec()))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Var {
        let v = self.value(a).slice_cols(start, len);
        self.push(v, Op::SliceCols(a, start))
    }

    pub fn select_rows(&mut self, a: Var, idx: &[usize]) -> Var {
        let v = self.value(a).select_rows(idx);
        self.push(v, Op::SelectRows(a, idx.to_vec()))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let v = Mat::scalar(self.value(a).sum());
        self.push(v, Op::SumAll(a))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let n = self.value(a).len() as f64;
        let s = self.sum(a);
        self.scale(s, 1.0 / n)
    }

    /// Sums each row: r×c → r×1.
    pub fn sum_cols(&mut self, a: Var) -> Var {
        let av = self.value(a);
        let data = (0..av.rows).map(|r| av.row(r).iter().sum()).collect();
        let v = Mat::col_vector(data);
        self.push(v, Op::SumCols(a))
    }

    /// Gradients of the scalar node `root` with respect to every node.
    pub fn backward(&self, root: Var) -> Gradients {
        assert_eq!(self.value(root).len(), 1, "backward needs a scalar root");
        let mut grads: Vec<Option<Mat>> = vec![None; self.nodes.len()];
        grads[root.0] = Some(Mat::scalar(1.0));

        for idx in (0..=root.0).rev() {
            let node = &self.nodes[idx];
            if matches!(node.op, Op::Leaf | Op::Const) || !node.grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            let needs = |v: &Var| self.nodes[v.0].grad;
            let mut grads = Acc {
                grads: &mut grads,
                nodes: &self.nodes,
            };
            let grads = &mut grads;
            match &node.op {
                Op::Leaf | Op::Const => unreachable!(),
                Op::MatMul(a, b) => {
                    if needs(a) {
                        accumulate(grads, *a, g.matmul_t(self.value(*b)));
                    }
                    if needs(b) {
                        accumulate(grads, *b, self.value(*a).t_matmul(&g));
                    }
                }
                Op::MatMulT(a, b) => {
                    // y = a b^T: da = g b, db = g^T a
                    if needs(a) {
                        accumulate(grads, *a, g.matmul(self.value(*b)));
                    }
                    if needs(b) {
                        accumulate(grads, *b, g.t_matmul(self.value(*a)));
                    }
                }
                Op::Add(a, b) => {
                    accumulate(grads, *b, g.clone());
                    accumulate(grads, *a, g);
                }
                Op::Sub(a, b) => {
                    accumulate(grads, *b, g.map(|x| -x));
                    accumulate(grads, *a, g);
                }
                Op::Mul(a, b) => {
                    let ga = g.zip_map(self.value(*b), |x, y| x * y);
                    let gb = g.zip_map(self.value(*a), |x, y| x * y);
                    accumulate(grads, *a, ga);
                    accumulate(grads, *b, gb);
                }
                Op::AddRow(a, row) => {
                    let mut gr = Mat::zeros(1, g.cols);
                    for r in 0..g.rows {
                        for (acc, x) in gr.data.iter_mut().zip(g.row(r)) {
                            *acc += x;
                        }
                    }
                    accumulate(grads, *row, gr);
                    accumulate(grads, *a, g);
                }
                Op::MulCol(a, col) => {
                    let av = self.value(*a);
                    let cv = self.value(*col);
                    let mut ga = g.clone();
                    let mut gc = Mat::zeros(cv.rows, 1);
                    for r in 0..g.rows {
                        let s = cv.data[r];
                        let mut dot = 0.0;
                        for (x, y) in g.row(r).iter().zip(av.row(r)) {
                            dot += x * y;
                        }
                        gc.data[r] = dot;
                        for x in ga.row_mut(r) {
                            *x *= s;
                        }
                    }
                    accumulate(grads, *a, ga);
                    accumulate(grads, *col, gc);
                }
                Op::Scale(a, s) => {
                    let s = *s;
                    accumulate(grads, *a, g.map(|x| x * s));
                }
                Op::AddScalar(a) => accumulate(grads, *a, g),
                Op::Relu(a) => {
                    let ga = g.zip_map(self.value(*a), |x, y| if y > 0.0 { x } else { 0.0 });
                    accumulate(grads, *a, ga);
                }
                Op::Softplus(a) => {
                    let ga = g.zip_map(self.value(*a), |x, y| x * sigmoid(y));
                    accumulate(grads, *a, ga);
                }
                Op::Exp(a) => {
                    let ga = g.zip_map(&node.value, |x, y| x * y);
                    accumulate(grads, *a, ga);
                }
                Op::Log(a) => {
                    let ga = g.zip_map(self.value(*a), |x, y| x / y);
                    accumulate(grads, *a, ga);
                }
                Op::ClampMin(a, floor) => {
                    let floor = *floor;
                    let ga = g.zip_map(self.value(*a), |x, y| if y > floor { x } else { 0.0 });
                    accumulate(grads, *a, ga);
                }
                Op::Square(a) => {
                    let ga = g.zip_map(self.value(*a), |x, y| 2.0 * x * y);
                    accumulate(grads, *a, ga);
                }
                Op::SoftmaxRows(a) | Op::CausalSoftmaxRows(a) => {
                    // dz = p * (g - <g, p>) per row; masked entries have p = 0.
                    let p = &node.value;
                    let mut ga = Mat::zeros(p.rows, p.cols);
                    for r in 0..p.rows {
                        let (pr, gr) = (p.row(r), g.row(r));
                        let dot: f64 = pr.iter().zip(gr).map(|(x, y)| x * y).sum();
                        for ((o, &pv), &gv) in ga.row_mut(r).iter_mut().zip(pr).zip(gr) {
                            *o = pv * (gv - dot);
                        }
                    }
                    accumulate(grads, *a, ga);
                }
                Op::ConcatCols(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let w = self.value(*p).cols;
                        accumulate(grads, *p, g.slice_cols(off, w));
                        off += w;
                    }
                }
                Op::SliceCols(a, start) => {
                    let av = self.value(*a);
                    let mut ga = Mat::zeros(av.rows, av.cols);
                    for r in 0..g.rows {
                        ga.row_mut(r)[*start..*start + g.cols].copy_from_slice(g.row(r));
                    }
                    accumulate(grads, *a, ga);
                }
                Op::SelectRows(a, idx) => {
                    let av = self.value(*a);
                    let mut ga = Mat::zeros(av.rows, av.cols);
                    for (o, &i) in idx.iter().enumerate() {
                        for (acc, x) in ga.row_mut(i).iter_mut().zip(g.row(o)) {
                            *acc += x;
                        }
                    }
                    accumulate(grads, *a, ga);
                }
                Op::SumAll(a) => {
                    let (r, c) = self.value(*a).shape();
                    accumulate(grads, *a, Mat::filled(r, c, g.item()));
                }
                Op::SumCols(a) => {
                    let (r, c) = self.value(*a).shape();
                    let mut ga = Mat::zeros(r, c);
                    for i in 0..r {
                        let s = g.data[i];
                        for x in ga.row_mut(i) {
                            *x = s;
                        }
                    }
                    accumulate(grads, *a, ga);
                }
            }
        }

        // Interior gradients were consumed above; leaves keep theirs.
        let shapes = self.nodes.iter().map(|n| n.value.shape()).collect();
        Gradients { grads, shapes }
    }
}

struct Acc<'a> {
    grads: &'a mut [Option<Mat>],
    nodes: &'a [Node],
}

fn accumulate(acc: &mut Acc<'_>, v: Var, g: Mat) {
    if !acc.nodes[v.0].grad {
        return;
    }
    match &mut acc.grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}
