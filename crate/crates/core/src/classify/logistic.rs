use ndarray::{Array1, Array2};

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean cross-entropy plus `(l2 / 2)·‖w‖²`; the bias is not penalized.
pub fn logistic_loss(w: &Array1<f64>, b: f64, x: &Array2<f64>, y: &[u8], l2: f64) -> f64 {
    let z = x.dot(w) + b;
    let ce: f64 = z.iter().zip(y).map(|(&z, &t)| softplus(z) - t as f64 * z).sum::<f64>() / y.len() as f64;
    ce + 0.5 * l2 * w.dot(w)
}

/// Analytic gradient of [`logistic_loss`] with respect to `(w, b)`.
pub fn logistic_gradient(w: &Array1<f64>, b: f64, x: &Array2<f64>, y: &[u8], l2: f64) -> (Array1<f64>, f64) {
    let n = y.len() as f64;
    let residual: Array1<f64> = (x.dot(w) + b).iter().zip(y).map(|(&z, &t)| sigmoid(z) - t as f64).collect();
    let gw = x.t().dot(&residual) / n + l2 * w;
    (gw, residual.sum() / n)
}

/// Full-batch gradient descent from zero weights. Returns `(w, b, losses)`
/// where `losses[e]` is the objective before epoch `e` and the last entry is
/// the final objective.
pub fn train_logistic(
    x: &Array2<f64>,
    y: &[u8],
    l2: f64,
    learning_rate: f64,
    epochs: usize,
) -> (Array1<f64>, f64, Vec<f64>) {
    let mut w = Array1::zeros(x.ncols());
    let mut b = 0.0;
    let mut losses = Vec::with_capacity(epochs + 1);
    for _ in 0..epochs {
        losses.push(logistic_loss(&w, b, x, y, l2));
        let (gw, gb) = logistic_gradient(&w, b, x, y, l2);
        w.scaled_add(-learning_rate, &gw);
        b -= learning_rate * gb;
    }
    losses.push(logistic_loss(&w, b, x, y, l2));
    (w, b, losses)
}

/// Subgradient descent on mean hinge loss plus `‖w‖² / (2c)`, labels mapped to ±1.
pub fn train_linear_svm(
    x: &Array2<f64>,
    y: &[u8],
    c: f64,
    learning_rate: f64,
    epochs: usize,
) -> (Array1<f64>, f64) {
    let n = y.len() as f64;
    let mut w = Array1::zeros(x.ncols());
    let mut b = 0.0;
    for _ in 0..epochs {
        let margins = x.dot(&w) + b;
        let mut gw: Array1<f64> = &w / c;
        let mut gb = 0.0;
        for (i, (&m, &t)) in margins.iter().zip(y).enumerate() {
            let s = if t == 1 { 1.0 } else { -1.0 };
            if s * m < 1.0 {
                gw.scaled_add(-s / n, &x.row(i));
                gb -= s / n;
            }
        }
        w.scaled_add(-learning_rate, &gw);
        b -= learning_rate * gb;
    }
    (w, b)
}
