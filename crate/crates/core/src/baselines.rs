//! Comparison learners trained on disclosed labels only: a classical
//! perceptron and a class-weighted, L2-regularized logistic regression fit by
//! SGD. Also the `[X | P·pi]` feature augmentation.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::{SparseMatrix, SparseRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierKind {
    Perceptron,
    Logistic,
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassifierKind::Perceptron => "perceptron",
            ClassifierKind::Logistic => "logistic",
        })
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perceptron" => Ok(ClassifierKind::Perceptron),
            "logistic" => Ok(ClassifierKind::Logistic),
            other => Err(Error::InvalidConfig(format!("unknown classifier kind `{other}`"))),
        }
    }
}

/// Linear scorer `w · x + b`; `weights` holds `w` followed by `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    pub weights: Vec<f64>,
    pub kind: ClassifierKind,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl LinearClassifier {
    pub fn n_features(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn bias(&self) -> f64 {
        self.weights[self.n_features()]
    }

    fn margin(&self, row: &SparseRow<'_>) -> f64 {
        row.dot(&self.weights) + self.bias()
    }

    /// Raw margins for every row of `x`.
    pub fn decision_function(&self, x: &SparseMatrix) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(x.rows().map(|r| self.margin(&r)).collect())
    }

    /// `sigmoid(w · x + b)` for every row of `x`.
    pub fn predict_proba(&self, x: &SparseMatrix) -> Result<Vec<f64>> {
        Ok(self.decision_function(x)?.into_iter().map(sigmoid).collect())
    }

    fn check(&self, x: &SparseMatrix) -> Result<()> {
        if x.n_cols() != self.n_features() {
            return Err(Error::DimensionMismatch(format!(
                "classifier has {} features, matrix has {} columns",
                self.n_features(),
                x.n_cols()
            )));
        }
        Ok(())
    }
}

fn check_training(x: &SparseMatrix, y: &[bool]) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} rows, {} labels", x.n_rows(), y.len())));
    }
    let pos = y.iter().filter(|&&v| v).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Mistake-driven perceptron with a seeded shuffle every epoch.
pub fn train_perceptron(x: &SparseMatrix, y: &[bool], epochs: usize, seed: u64) -> Result<LinearClassifier> {
    check_training(x, y)?;
    let m = x.n_cols();
    let mut weights = vec![0.0; m + 1];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..x.n_rows()).collect();
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let row = x.row(i);
            let target = if y[i] { 1.0 } else { -1.0 };
            let margin = row.dot(&weights) + weights[m];
            if target * margin <= 0.0 {
                for (j, v) in row.iter() {
                    weights[j] += target * v;
                }
                weights[m] += target;
            }
        }
    }
    Ok(LinearClassifier {
        weights,
        kind: ClassifierKind::Perceptron,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticConfig {
    /// Loss weights for positive and negative examples.
    pub class_weights: (f64, f64),
    pub l2: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            class_weights: (1.0, 1.0),
            l2: 1e-4,
            epochs: 10,
            learning_rate: 0.005,
            seed: 0,
        }
    }
}

impl LogisticConfig {
    /// Class weights inversely proportional to class frequency in `y`.
    pub fn balanced(y: &[bool]) -> (f64, f64) {
        let pos = y.iter().filter(|&&v| v).count().max(1) as f64;
        let neg = (y.len() as f64 - pos).max(1.0);
        (neg / pos, 1.0)
    }
}

/// Weighted L2-regularized logistic regression by plain SGD with a per-epoch
/// `1 / (1 + epoch)` step decay. The bias is not regularized.
pub fn train_logistic(x: &SparseMatrix, y: &[bool], cfg: &LogisticConfig) -> Result<LinearClassifier> {
    check_training(x, y)?;
    let (wp, wn) = cfg.class_weights;
    if !(wp > 0.0 && wn > 0.0) || cfg.l2 < 0.0 || cfg.learning_rate <= 0.0 {
        return Err(Error::InvalidConfig(format!("bad logistic settings {cfg:?}")));
    }
    let m = x.n_cols();
    let mut weights = vec![0.0; m + 1];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..x.n_rows()).collect();
    for epoch in 0..cfg.epochs {
        let lr = cfg.learning_rate / (1.0 + epoch as f64);
        let shrink = (1.0 - lr * cfg.l2).max(0.0);
        order.shuffle(&mut rng);
        for &i in &order {
            let row = x.row(i);
            let p = sigmoid(row.dot(&weights) + weights[m]);
            let (target, cw) = if y[i] { (1.0, wp) } else { (0.0, wn) };
            let g = cw * (p - target);
            if cfg.l2 > 0.0 {
                weights[..m].iter_mut().for_each(|w| *w *= shrink);
            }
            for (j, v) in row.iter() {
                weights[j] -= lr * g * v;
            }
            weights[m] -= lr * g;
        }
    }
    Ok(LinearClassifier {
        weights,
        kind: ClassifierKind::Logistic,
    })
}

/// `[X | P · pi]`: one extra column holding each row's property statistic.
pub fn augment_with_pi(x: &SparseMatrix, p: &SparseMatrix, pi: &[f64]) -> Result<SparseMatrix> {
    if p.n_rows() != x.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} rows, P has {}",
            x.n_rows(),
            p.n_rows()
        )));
    }
    x.append_column(&p.mul_vec(pi)?)
}

/// Text form: `kind<TAB>m`, then `index<TAB>weight` for nonzero weights with
/// the bias at index `m`.
pub fn format_classifier(c: &LinearClassifier) -> String {
    let mut s = format!("{}\t{}\n", c.kind, c.n_features());
    for (i, w) in c.weights.iter().enumerate().filter(|(_, w)| **w != 0.0) {
        writeln!(s, "{i}\t{w}").unwrap();
    }
    s
}

pub fn parse_classifier(text: &str, origin: &Path) -> Result<LinearClassifier> {
    let malformed = |line: usize, message: String| Error::Malformed {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| malformed(1, "empty model file".into()))?;
    let (kind, m) = header
        .split_once('\t')
        .ok_or_else(|| malformed(1, "expected `kind<TAB>m`".into()))?;
    let kind: ClassifierKind = kind.parse().map_err(|e: Error| malformed(1, e.to_string()))?;
    let m: usize = m.trim().parse().map_err(|_| malformed(1, format!("bad feature count `{m}`")))?;
    let mut weights = vec![0.0; m + 1];
    for (no, line) in lines {
        let parsed = line
            .split_once('\t')
            .and_then(|(i, v)| Some((i.trim().parse::<usize>().ok()?, v.trim().parse::<f64>().ok()?)));
        match parsed {
            Some((i, v)) if i <= m => weights[i] = v,
            _ => return Err(malformed(no + 1, format!("bad weight line `{line}`"))),
        }
    }
    Ok(LinearClassifier { weights, kind })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::roc_auc;

    fn toy() -> (SparseMatrix, Vec<bool>) {
        let x = SparseMatrix::from_rows(
            2,
            &[
                vec![(0, 2.0), (1, 0.5)],
                vec![(0, 1.5)],
                vec![(0, 3.0), (1, 1.0)],
                vec![(1, 2.0)],
                vec![(0, 0.2), (1, 1.5)],
                vec![(1, 3.0)],
            ],
        )
        .unwrap();
        (x, vec![true, true, true, false, false, false])
    }

    fn errors(c: &LinearClassifier, x: &SparseMatrix, y: &[bool]) -> usize {
        c.decision_function(x)
            .unwrap()
            .iter()
            .zip(y)
            .filter(|(s, t)| (**s > 0.0) != **t)
            .count()
    }

    #[test]
    fn perceptron_separates() {
        let (x, y) = toy();
        let c = train_perceptron(&x, &y, 50, 1).unwrap();
        assert_eq!(errors(&c, &x, &y), 0);
        assert_eq!(c, train_perceptron(&x, &y, 50, 1).unwrap());
    }

    #[test]
    fn perceptron_zero_epochs() {
        let (x, y) = toy();
        let c = train_perceptron(&x, &y, 0, 1).unwrap();
        assert!(c.weights.iter().all(|&w| w == 0.0));
        assert!(c.predict_proba(&x).unwrap().iter().all(|&p| p == 0.5));
    }

    #[test]
    fn perceptron_xor_never_separates() {
        let x = SparseMatrix::from_rows(2, &[vec![], vec![(0, 1.0), (1, 1.0)], vec![(0, 1.0)], vec![(1, 1.0)]]).unwrap();
        let y = [true, true, false, false];
        for epochs in [1, 10, 100] {
            assert!(errors(&train_perceptron(&x, &y, epochs, 0).unwrap(), &x, &y) > 0);
        }
    }

    #[test]
    fn single_class_rejected() {
        let (x, _) = toy();
        assert!(matches!(train_perceptron(&x, &[false; 6], 1, 0), Err(Error::SingleClass)));
        assert!(matches!(train_logistic(&x, &[true; 6], &LogisticConfig::default()), Err(Error::SingleClass)));
    }

    #[test]
    fn logistic_ranks_toy_perfectly() {
        let (x, y) = toy();
        let cfg = LogisticConfig { epochs: 200, learning_rate: 0.5, ..Default::default() };
        let c = train_logistic(&x, &y, &cfg).unwrap();
        let p = c.predict_proba(&x).unwrap();
        assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
        assert_eq!(roc_auc(&p, &y).unwrap().auc, 1.0);
    }

    #[test]
    fn class_weights_raise_minority_recall() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..400 {
            let pos = i % 8 == 0;
            let shift = if pos { 1.0 } else { 0.0 };
            rows.push(vec![(0, shift + rng.random::<f64>() * 1.5), (1, rng.random::<f64>())]);
            y.push(pos);
        }
        let x = SparseMatrix::from_rows(2, &rows).unwrap();
        let recall = |cw: (f64, f64)| {
            let cfg = LogisticConfig { class_weights: cw, epochs: 30, ..Default::default() };
            let p = train_logistic(&x, &y, &cfg).unwrap().predict_proba(&x).unwrap();
            p.iter().zip(&y).filter(|(p, t)| **t && **p >= 0.5).count()
        };
        assert!(recall((3.0, 1.0)) > recall((1.0, 1.0)));
    }

    #[test]
    fn heavy_l2_collapses_to_base_rate() {
        let (x, y) = toy();
        let cfg = LogisticConfig { l2: 1e9, epochs: 200, learning_rate: 0.1, ..Default::default() };
        let c = train_logistic(&x, &y, &cfg).unwrap();
        assert!(c.weights[..2].iter().all(|w| w.abs() < 1e-3));
        let p = c.predict_proba(&x).unwrap();
        assert!(p.iter().all(|v| (v - 0.5).abs() < 0.1));
    }

    #[test]
    fn augmentation_appends_pi_column() {
        let (x, _) = toy();
        let p = SparseMatrix::from_triplets(6, 2, (0..6).map(|i| (i, i % 2, 1.0)).collect()).unwrap();
        let aug = augment_with_pi(&x, &p, &[0.25, 0.75]).unwrap();
        assert_eq!(aug.n_cols(), 3);
        for i in 0..6 {
            assert_eq!(aug.get(i, 2), if i % 2 == 0 { 0.25 } else { 0.75 });
            assert_eq!(aug.row(i).values[..x.row(i).nnz()], *x.row(i).values);
        }
        let zero = augment_with_pi(&x, &p, &[0.0, 0.0]).unwrap();
        assert_eq!(zero.n_cols(), 3);
        assert!((0..6).all(|i| zero.get(i, 2) == 0.0));
    }

    #[test]
    fn classifier_text_round_trip() {
        let (x, y) = toy();
        let c = train_logistic(&x, &y, &LogisticConfig::default()).unwrap();
        let text = format_classifier(&c);
        assert!(text.starts_with("logistic\t2\n"));
        assert_eq!(parse_classifier(&text, Path::new("c")).unwrap(), c);
    }
}
