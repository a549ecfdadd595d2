use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditOp {
    Match,
    Substitution,
    Deletion,
    Insertion,
}

fn table<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> Vec<Vec<usize>> {
    let (n, m) = (reference.len(), hypothesis.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        d[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = d[i - 1][j - 1] + usize::from(reference[i - 1] != hypothesis[j - 1]);
            d[i][j] = diag.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d
}

/// Unit-cost Levenshtein distance.
pub fn edit_distance<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> usize {
    table(reference, hypothesis)[reference.len()][hypothesis.len()]
}

/// Minimal-cost alignment, in reference order. The backtrace runs from the
/// end and prefers match, then substitution, deletion, insertion.
pub fn align<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> Vec<EditOp> {
    let d = table(reference, hypothesis);
    let (mut i, mut j) = (reference.len(), hypothesis.len());
    let mut ops = Vec::with_capacity(i.max(j));
    while i > 0 || j > 0 {
        let here = d[i][j];
        if i > 0 && j > 0 && reference[i - 1] == hypothesis[j - 1] && here == d[i - 1][j - 1] {
            ops.push(EditOp::Match);
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && here == d[i - 1][j - 1] + 1 {
            ops.push(EditOp::Substitution);
            i -= 1;
            j -= 1;
        } else if i > 0 && here == d[i - 1][j] + 1 {
            ops.push(EditOp::Deletion);
            i -= 1;
        } else {
            ops.push(EditOp::Insertion);
            j -= 1;
        }
    }
    ops.reverse();
    ops
}
