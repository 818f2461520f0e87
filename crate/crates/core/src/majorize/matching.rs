//! Maximum-cardinality bipartite matching (Kuhn's augmenting paths).
//!
//! Graphs here are at most a few dozen vertices per side, so the simple
//! `O(V·E)` algorithm is plenty.

/// Returns `row → column` for a perfect matching of the bipartite graph
/// given by `adj[row][col]`, or `None` when no perfect matching exists.
pub(crate) fn perfect_matching(adj: &[Vec<bool>]) -> Option<Vec<usize>> {
    let n = adj.len();
    let mut col_owner: Vec<Option<usize>> = vec![None; n];
    for row in 0..n {
        let mut seen = vec![false; n];
        if !augment(adj, row, &mut seen, &mut col_owner) {
            return None;
        }
    }
    let mut row_to_col = vec![usize::MAX; n];
    for (col, owner) in col_owner.iter().enumerate() {
        row_to_col[owner.expect("perfect matching covers every column")] = col;
    }
    Some(row_to_col)
}

fn augment(adj: &[Vec<bool>], row: usize, seen: &mut [bool], col_owner: &mut [Option<usize>]) -> bool {
    for col in 0..adj[row].len() {
        if !adj[row][col] || seen[col] {
            continue;
        }
        seen[col] = true;
        let free = match col_owner[col] {
            None => true,
            Some(other) => augment(adj, other, seen, col_owner),
        };
        if free {
            col_owner[col] = Some(row);
            return true;
        }
    }
    false
}

/// Perfect matching on `weights` that maximizes the smallest matched entry,
/// restricted to entries strictly above `floor`. Returns the matching and its
/// bottleneck value.
pub(crate) fn bottleneck_matching(weights: &[Vec<f64>], floor: f64) -> Option<(Vec<usize>, f64)> {
    let n = weights.len();
    let mut levels: Vec<f64> = weights.iter().flatten().copied().filter(|&w| w > floor).collect();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();
    if levels.is_empty() {
        return None;
    }

    let try_level = |tau: f64| {
        let adj: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| weights[i][j] >= tau).collect()).collect();
        perfect_matching(&adj)
    };

    // Feasibility is monotone in the level index, find the first feasible one.
    let last = levels.len() - 1;
    try_level(levels[last])?;
    let (mut lo, mut hi) = (0usize, last);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if try_level(levels[mid]).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let perm = try_level(levels[lo])?;
    let bottleneck = perm
        .iter()
        .enumerate()
        .map(|(i, &j)| weights[i][j])
        .fold(f64::INFINITY, f64::min);
    Some((perm, bottleneck))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_identity_and_swap() {
        let adj = vec![vec![true, false], vec![false, true]];
        assert_eq!(perfect_matching(&adj), Some(vec![0, 1]));
        let adj = vec![vec![false, true], vec![true, false]];
        assert_eq!(perfect_matching(&adj), Some(vec![1, 0]));
    }

    #[test]
    fn detects_hall_violation() {
        let adj = vec![
            vec![true, false, false],
            vec![true, false, false],
            vec![true, true, true],
        ];
        assert_eq!(perfect_matching(&adj), None);
    }

    #[test]
    fn needs_augmenting_path() {
        // greedy row-by-row would take (0,0) and strand row 1
        let adj = vec![vec![true, true], vec![true, false]];
        assert_eq!(perfect_matching(&adj), Some(vec![1, 0]));
    }

    #[test]
    fn bottleneck_prefers_heavy_entries() {
        let w = vec![vec![0.9, 0.1], vec![0.1, 0.9]];
        let (perm, b) = bottleneck_matching(&w, 0.0).unwrap();
        assert_eq!(perm, vec![0, 1]);
        assert_eq!(b, 0.9);
        assert!(bottleneck_matching(&[vec![0.0]], 0.0).is_none());
    }
}
