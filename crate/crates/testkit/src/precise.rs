//! Double-double (~32 significant digits) evaluation of an LSTM, so finite
//! differences at small steps are not swamped by f64 rounding in the
//! objective.

use twofloat::TwoFloat;

pub type Dd = TwoFloat;

pub fn dd(x: f64) -> Dd {
    TwoFloat::from(x)
}

/// `a / b` by long division; the `Div` impls of the version in use lose the
/// low word.
pub fn div(a: Dd, b: Dd) -> Dd {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    TwoFloat::new_add(q1, q2) + q3
}

const LN2: (f64, f64) = (std::f64::consts::LN_2, 2.3190468138462996e-17);

/// `TwoFloat::exp` is likewise only good to ~1e-11 relative, so this reduces by
/// `k ln 2`, then by `2^-10`, sums a short Taylor series and squares back.
pub fn exp(x: Dd) -> Dd {
    if x.hi() == 0.0 {
        return dd(1.0);
    }
    let k = (x.hi() / LN2.0).round();
    let ln2 = TwoFloat::new_add(LN2.0, LN2.1);
    let r = (x - ln2 * k) * (1.0 / 1024.0);
    let mut term = dd(1.0);
    let mut sum = dd(1.0);
    for n in 1..=10 {
        term = div(term * r, dd(n as f64));
        sum += term;
    }
    for _ in 0..10 {
        sum = sum * sum;
    }
    sum * 2f64.powi(k as i32)
}

pub fn sigmoid(x: Dd) -> Dd {
    div(dd(1.0), dd(1.0) + exp(-x))
}

pub fn tanh(x: Dd) -> Dd {
    if x.hi() < 0.0 {
        return -tanh(-x);
    }
    let e = exp(x * -2.0);
    div(dd(1.0) - e, dd(1.0) + e)
}

/// Row-major concatenated-form weights, `[(hidden + input) x hidden]` per
/// gate in the order input, forget, candidate, output.
pub struct LstmWeights<'a> {
    pub hidden: usize,
    pub input: usize,
    pub w: [&'a [f64]; 4],
    pub b: [&'a [f64]; 4],
    pub head_w: &'a [f64],
    pub head_b: f64,
}

/// `head_w · h_T + head_b` from the zero state.
pub fn lstm_prediction(p: &LstmWeights<'_>, sequence: &[Vec<f64>]) -> Dd {
    let (hn, width) = (p.hidden, p.hidden + p.input);
    let mut h = vec![dd(0.0); hn];
    let mut c = vec![dd(0.0); hn];
    for x in sequence {
        let v: Vec<Dd> = h
            .iter()
            .copied()
            .chain(x.iter().map(|&xi| dd(xi)))
            .collect();
        let pre = |g: usize, k: usize| {
            let mut s = dd(p.b[g][k]);
            for r in 0..width {
                s += v[r] * p.w[g][r * hn + k];
            }
            s
        };
        let mut next = vec![dd(0.0); hn];
        for k in 0..hn {
            let i = sigmoid(pre(0, k));
            let f = sigmoid(pre(1, k));
            let g = tanh(pre(2, k));
            let o = sigmoid(pre(3, k));
            c[k] = i * g + f * c[k];
            next[k] = o * tanh(c[k]);
        }
        h = next;
    }
    let mut y = dd(p.head_b);
    for k in 0..hn {
        y += h[k] * p.head_w[k];
    }
    y
}

/// Central differences of an extended-precision objective. The divisor is
/// the step actually taken, `(x + h) - (x - h)` in f64.
pub fn central_gradient(x: &[f64], step: f64, mut f: impl FnMut(&[f64]) -> Dd) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            let (up, down) = (orig + step, orig - step);
            probe[i] = up;
            let plus = f(&probe);
            probe[i] = down;
            let minus = f(&probe);
            probe[i] = orig;
            let width = dd(up) - dd(down);
            f64::from(div(plus - minus, width))
        })
        .collect()
}
