use serde::{Deserialize, Serialize};

use crate::geometry::{Manifold, Point};
use crate::{Error, Result, EPS_MATCH};

/// Base projection `(x_i, y_i)` of the i-th prescribed arrow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasePair {
    pub x: Point,
    pub y: Point,
    pub index: usize,
}

impl BasePair {
    pub fn new(index: usize, x: Point, y: Point) -> Self {
        BasePair { x, y, index }
    }
}

fn same(m: &Manifold, a: &Point, b: &Point) -> bool {
    m.distance(a, b) <= EPS_MATCH
}

/// First pair of indices sharing a source or a target, if any.
pub fn concordance_violation(m: &Manifold, pairs: &[BasePair]) -> Option<Error> {
    for j in 0..pairs.len() {
        for i in 0..j {
            if same(m, &pairs[i].x, &pairs[j].x) {
                return Some(Error::NotConcordant {
                    first: pairs[i].index,
                    second: pairs[j].index,
                    role: "source",
                });
            }
            if same(m, &pairs[i].y, &pairs[j].y) {
                return Some(Error::NotConcordant {
                    first: pairs[i].index,
                    second: pairs[j].index,
                    role: "target",
                });
            }
        }
    }
    None
}

/// Pairwise distinct sources and pairwise distinct targets.
pub fn is_concordant(m: &Manifold, pairs: &[BasePair]) -> bool {
    concordance_violation(m, pairs).is_none()
}

/// `next[i] = j` when `y_i = x_j` with `j != i`. Unique by concordance.
fn successors(m: &Manifold, pairs: &[BasePair]) -> Vec<Option<usize>> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, p)| (0..pairs.len()).find(|&j| j != i && same(m, &p.y, &pairs[j].x)))
        .collect()
}

/// Cycles of length at least two under `i → j` whenever `y_i = x_j`.
///
/// Each chain is listed from its smallest position and follows the
/// matching, and chains are sorted by that smallest position. Entries are
/// positions in `pairs`. A pair with `x = y` closes on itself but never
/// obstructs an ordering, so it is not reported.
pub fn find_chains(m: &Manifold, pairs: &[BasePair]) -> Vec<Vec<usize>> {
    let next = successors(m, pairs);
    let n = pairs.len();
    let mut seen = vec![false; n];
    let mut chains = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        // walk until the path ends or repeats
        let mut path = Vec::new();
        let mut pos = vec![usize::MAX; n];
        let mut cur = Some(start);
        while let Some(i) = cur {
            if seen[i] {
                break;
            }
            if pos[i] != usize::MAX {
                let cycle = &path[pos[i]..];
                if cycle.len() >= 2 {
                    let min_at = cycle
                        .iter()
                        .enumerate()
                        .min_by_key(|(_, &v)| v)
                        .map(|(k, _)| k)
                        .unwrap();
                    let mut c: Vec<usize> = cycle[min_at..].to_vec();
                    c.extend_from_slice(&cycle[..min_at]);
                    chains.push(c);
                }
                break;
            }
            pos[i] = path.len();
            path.push(i);
            cur = next[i];
        }
        for i in path {
            seen[i] = true;
        }
    }
    chains.sort_by_key(|c| c[0]);
    chains
}

/// Concordant and chain-free.
pub fn is_independent(m: &Manifold, pairs: &[BasePair]) -> bool {
    is_concordant(m, pairs) && find_chains(m, pairs).is_empty()
}

/// True when `x̄_k ≠ ȳ_l` for all `l < k` in the given order.
pub fn is_well_ordered(m: &Manifold, pairs: &[BasePair], order: &[usize]) -> bool {
    (0..order.len()).all(|k| (0..k).all(|l| !same(m, &pairs[order[k]].x, &pairs[order[l]].y)))
}

/// An order in which no source equals an earlier target.
///
/// Built back to front: among the remaining pairs, the smallest position
/// whose source differs from every other remaining target goes last.
/// Returns positions in `pairs`.
pub fn well_order(m: &Manifold, pairs: &[BasePair]) -> Result<Vec<usize>> {
    let mut remaining: Vec<usize> = (0..pairs.len()).collect();
    let mut order = vec![0; pairs.len()];
    for slot in (0..pairs.len()).rev() {
        let pick = remaining.iter().position(|&k| {
            remaining
                .iter()
                .all(|&l| l == k || !same(m, &pairs[k].x, &pairs[l].y))
        });
        match pick {
            Some(p) => order[slot] = remaining.remove(p),
            None => {
                return Err(Error::NotIndependent(format!(
                    "every remaining source is another remaining target (pairs {:?} contain a chain)",
                    remaining.iter().map(|&i| pairs[i].index).collect::<Vec<_>>()
                )))
            }
        }
    }
    debug_assert!(is_well_ordered(m, pairs, &order));
    if !is_well_ordered(m, pairs, &order) {
        return Err(Error::NotIndependent("ordering check failed".into()));
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane() -> Manifold {
        Manifold::unit_box(2, 0.0, 10.0)
    }

    fn pt(i: usize) -> Point {
        Point::new(&[i as f64, (i * i % 7) as f64])
    }

    fn pairs(ix: &[(usize, usize)]) -> Vec<BasePair> {
        ix.iter()
            .enumerate()
            .map(|(k, &(a, b))| BasePair::new(k, pt(a), pt(b)))
            .collect()
    }

    #[test]
    fn concordance() {
        let m = plane();
        assert!(is_concordant(&m, &pairs(&[(0, 1)])));
        assert!(!is_concordant(&m, &pairs(&[(0, 1), (0, 2)])));
        assert!(!is_concordant(&m, &pairs(&[(0, 1), (2, 1)])));
        assert!(is_concordant(&m, &pairs(&[(0, 1), (1, 0)])));
        match concordance_violation(&m, &pairs(&[(0, 1), (3, 4), (0, 2)])) {
            Some(Error::NotConcordant { first, second, role }) => {
                assert_eq!((first, second, role), (0, 2, "source"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn chains() {
        let m = plane();
        assert_eq!(find_chains(&m, &pairs(&[(0, 1), (1, 0)])), vec![vec![0, 1]]);
        assert_eq!(
            find_chains(&m, &pairs(&[(0, 1), (1, 2), (2, 0), (3, 4)])),
            vec![vec![0, 1, 2]]
        );
        // branching path without a loop
        let branching = pairs(&[(0, 1), (1, 2), (3, 4), (4, 5), (2, 6)]);
        assert!(find_chains(&m, &branching).is_empty());
        assert!(is_independent(&m, &branching));
        // chains listed from their smallest index, sorted
        let two = pairs(&[(5, 6), (0, 1), (6, 5), (1, 0)]);
        assert_eq!(find_chains(&m, &two), vec![vec![0, 2], vec![1, 3]]);
        assert!(!is_independent(&m, &pairs(&[(0, 1), (1, 0)])));
        assert!(find_chains(&m, &pairs(&[(3, 3)])).is_empty());
    }

    #[test]
    fn orders() {
        let m = plane();
        assert_eq!(well_order(&m, &pairs(&[(0, 1)])).unwrap(), vec![0]);
        let p = pairs(&[(0, 1), (1, 2)]);
        // pair 2 (source b) cannot follow pair 1 (target b)
        assert!(!is_well_ordered(&m, &p, &[0, 1]));
        assert!(is_well_ordered(&m, &p, &[1, 0]));
        assert_eq!(well_order(&m, &p).unwrap(), vec![1, 0]);
        assert!(matches!(
            well_order(&m, &pairs(&[(0, 1), (1, 0)])),
            Err(Error::NotIndependent(_))
        ));
    }
}
