use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Result, TuneError};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "k")]
pub enum CvKind {
    Loocv,
    KFold(usize),
    StratifiedKFold(usize),
}

/// Cross-validation scheme; the seed drives the shuffles of the k-fold
/// variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvScheme {
    pub kind: CvKind,
    pub seed: u64,
}

impl CvScheme {
    pub fn loocv() -> Self {
        CvScheme {
            kind: CvKind::Loocv,
            seed: 0,
        }
    }

    pub fn kfold(k: usize, seed: u64) -> Self {
        CvScheme {
            kind: CvKind::KFold(k),
            seed,
        }
    }

    pub fn stratified(k: usize, seed: u64) -> Self {
        CvScheme {
            kind: CvKind::StratifiedKFold(k),
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        CvScheme { seed, ..self }
    }

    pub fn is_stratified(&self) -> bool {
        matches!(self.kind, CvKind::StratifiedKFold(_))
    }
}

impl fmt::Display for CvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CvKind::Loocv => f.write_str("loocv"),
            CvKind::KFold(k) => write!(f, "kfold{k}"),
            CvKind::StratifiedKFold(k) => write!(f, "stratified{k}"),
        }
    }
}

impl FromStr for CvKind {
    type Err = TuneError;

    /// `loocv`, `kfold<k>` or `stratified<k>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        let k = |rest: &str| match rest.parse::<usize>() {
            Ok(k) if k >= 2 => Ok(k),
            _ => Err(TuneError::Config(format!(
                "bad fold count in `{s}` (need at least 2)"
            ))),
        };
        if s == "loocv" {
            Ok(CvKind::Loocv)
        } else if let Some(rest) = s.strip_prefix("stratified") {
            Ok(CvKind::StratifiedKFold(k(rest)?))
        } else if let Some(rest) = s.strip_prefix("kfold") {
            Ok(CvKind::KFold(k(rest)?))
        } else {
            Err(TuneError::Config(format!("unknown CV scheme `{s}`")))
        }
    }
}

/// Test folds, each sorted ascending; together they partition `0..n`.
///
/// LOOCV gives `n` singletons. k-fold shuffles once and cuts contiguous
/// chunks whose sizes differ by at most one. Stratified k-fold shuffles
/// each class separately and deals negatives then positives round-robin
/// with a single running counter, so both fold sizes and per-fold positive
/// counts differ by at most one.
pub fn make_folds(n: usize, labels: Option<&[bool]>, scheme: &CvScheme) -> Result<Vec<Vec<usize>>> {
    if n == 0 {
        return Err(TuneError::Config("cannot split zero samples".into()));
    }
    let check_k = |k: usize| {
        if k < 2 {
            Err(TuneError::Config(format!("need at least 2 folds, got {k}")))
        } else if k > n {
            Err(TuneError::Config(format!("{k} folds for {n} samples")))
        } else {
            Ok(())
        }
    };
    let mut rng = seed::rng(seed::derive(scheme.seed, "folds"));
    let mut folds = match scheme.kind {
        CvKind::Loocv => (0..n).map(|i| vec![i]).collect(),
        CvKind::KFold(k) => {
            check_k(k)?;
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            let (base, extra) = (n / k, n % k);
            let mut out = Vec::with_capacity(k);
            let mut start = 0;
            for f in 0..k {
                let len = base + usize::from(f < extra);
                out.push(idx[start..start + len].to_vec());
                start += len;
            }
            out
        }
        CvKind::StratifiedKFold(k) => {
            check_k(k)?;
            let labels =
                labels.ok_or_else(|| TuneError::Config("stratified CV needs labels".into()))?;
            if labels.len() != n {
                return Err(TuneError::Config(format!(
                    "{} labels for {n} samples",
                    labels.len()
                )));
            }
            let mut neg: Vec<usize> = (0..n).filter(|&i| !labels[i]).collect();
            let mut pos: Vec<usize> = (0..n).filter(|&i| labels[i]).collect();
            if neg.is_empty() || pos.is_empty() {
                return Err(TuneError::Config("stratified CV needs both classes".into()));
            }
            neg.shuffle(&mut rng);
            pos.shuffle(&mut rng);
            let mut out = vec![Vec::new(); k];
            for (c, &i) in neg.iter().chain(&pos).enumerate() {
                out[c % k].push(i);
            }
            out
        }
    };
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}
