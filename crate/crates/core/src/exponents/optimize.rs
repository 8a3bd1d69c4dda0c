//! Product-of-simplices grid minimization.
//!
//! A problem is a list of blocks, each a probability simplex; the objective
//! maps one point per block to an extended real. The engine scans the full
//! product lattice at a budget-capped resolution, then runs a local
//! refinement pass at finer spacing around the incumbent (jointly across
//! blocks when the local product fits the budget, block-cyclically
//! otherwise). Constraints are expressed by returning `+∞`.
//!
//! Reductions are deterministic regardless of thread count: candidates are
//! compared by `(value, flat index)`.

use rayon::prelude::*;

use crate::measures::composition_count;

/// The lattice points of one block, plus optional injected off-lattice
/// candidates (e.g. the reference distribution itself).
pub(crate) struct BlockGrid {
    pub points: Vec<Vec<f64>>,
}

impl BlockGrid {
    /// Grid over the `cells`-simplex at `resolution`, plus injected points.
    ///
    /// The resolution solver keeps single blocks under
    /// [`MAX_BLOCK_POINTS`], so materializing is safe.
    pub fn lattice(cells: usize, resolution: u32, injected: &[Vec<f64>]) -> Self {
        let mut points: Vec<Vec<f64>> =
            crate::measures::CompositionIter::new(resolution as u64, cells)
                .map(|c| c.iter().map(|&v| v as f64 / resolution as f64).collect())
                .collect();
        points.extend(injected.iter().cloned());
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
}

fn scaled_counts(probs: &[f64], m: u64) -> Vec<u64> {
    probs.iter().map(|&p| (p * m as f64).round() as u64).collect()
}

/// Outcome of a product scan.
#[derive(Debug, Clone)]
pub(crate) struct MinOutcome {
    pub value: f64,
    /// One probability vector per block; empty when nothing was evaluated.
    pub argmin: Vec<Vec<f64>>,
}

/// Cap on materialized points of a single block.
pub(crate) const MAX_BLOCK_POINTS: u64 = 2_000_000;

/// Largest resolution `m <= requested` whose product lattice stays within
/// `budget` points and whose single blocks stay materializable; at least 2.
pub(crate) fn effective_resolution(requested: u32, block_cells: &[usize], budget: u64) -> u32 {
    let mut m = requested.max(2);
    while m > 2 {
        let mut total: u128 = 1;
        let mut fits = true;
        for &k in block_cells {
            let block = composition_count(m as u64, k);
            if block > MAX_BLOCK_POINTS as u128 {
                fits = false;
                break;
            }
            total = total.saturating_mul(block);
            if total > budget as u128 {
                fits = false;
                break;
            }
        }
        if fits {
            return m;
        }
        m -= 1;
    }
    2
}

/// Exhaustive scan of the product of block grids.
pub(crate) fn minimize_product<F>(blocks: &[BlockGrid], objective: F) -> MinOutcome
where
    F: Fn(&[&[f64]]) -> f64 + Sync,
{
    assert!(!blocks.is_empty());
    let best = (0..blocks[0].len())
        .into_par_iter()
        .map(|first| {
            let mut slot: Vec<&[f64]> = Vec::with_capacity(blocks.len());
            slot.push(&blocks[0].points[first]);
            let mut local = (f64::INFINITY, u64::MAX);
            scan_rest(blocks, 1, first as u64, &mut slot, &objective, &mut local);
            local
        })
        .reduce(
            || (f64::INFINITY, u64::MAX),
            |a, b| if (b.0, b.1) < (a.0, a.1) { b } else { a },
        );

    let (value, flat) = best;
    if flat == u64::MAX {
        return MinOutcome {
            value,
            argmin: Vec::new(),
        };
    }
    // Decode the flat index back into per-block points.
    let mut idx = flat;
    let mut argmin = vec![Vec::new(); blocks.len()];
    for b in (0..blocks.len()).rev() {
        let len = blocks[b].len() as u64;
        argmin[b] = blocks[b].points[(idx % len) as usize].clone();
        idx /= len;
    }
    MinOutcome { value, argmin }
}

fn scan_rest<'a, F>(
    blocks: &'a [BlockGrid],
    depth: usize,
    flat: u64,
    slot: &mut Vec<&'a [f64]>,
    objective: &F,
    best: &mut (f64, u64),
) where
    F: Fn(&[&[f64]]) -> f64 + Sync,
{
    if depth == blocks.len() {
        let v = objective(slot);
        debug_assert!(!v.is_nan());
        // Infeasible points (+∞) never become the arg-min.
        if v < f64::INFINITY && (v, flat) < *best {
            *best = (v, flat);
        }
        return;
    }
    let len = blocks[depth].len() as u64;
    for (i, p) in blocks[depth].points.iter().enumerate() {
        slot.push(p);
        scan_rest(blocks, depth + 1, flat * len + i as u64, slot, objective, best);
        slot.pop();
    }
}

/// All count vectors at resolution `total` within `radius` (in fine steps)
/// of `center`, cell-wise. `center` need not itself sum to `total`.
pub(crate) fn local_lattice(center: &[u64], total: u64, radius: u64) -> Vec<Vec<u64>> {
    let k = center.len();
    let mut out = Vec::new();
    let mut current = vec![0u64; k];
    fn rec(
        center: &[u64],
        total: u64,
        radius: u64,
        cell: usize,
        used: u64,
        current: &mut Vec<u64>,
        out: &mut Vec<Vec<u64>>,
    ) {
        let k = center.len();
        if cell == k - 1 {
            let rest = total - used;
            if rest.abs_diff(center[k - 1]) <= radius {
                current[k - 1] = rest;
                out.push(current.clone());
            }
            return;
        }
        let lo = center[cell].saturating_sub(radius);
        let hi = center[cell] + radius;
        for v in lo..=hi {
            if used + v > total {
                break;
            }
            current[cell] = v;
            rec(center, total, radius, cell + 1, used + v, current, out);
        }
    }
    rec(center, total, radius, 0, 0, &mut current, &mut out);
    out
}

/// Local refinement around an incumbent: each block's neighborhood at
/// `factor`× finer spacing, scanned jointly when the product fits
/// `budget`, block-cyclically (two sweeps) otherwise. Returns the best of
/// incumbent and refined candidates.
pub(crate) fn refine_product<F>(
    incumbent: &MinOutcome,
    resolution: u32,
    factor: u32,
    radius: u32,
    budget: u64,
    objective: F,
) -> MinOutcome
where
    F: Fn(&[&[f64]]) -> f64 + Sync,
{
    if incumbent.argmin.is_empty() || !incumbent.value.is_finite() {
        return incumbent.clone();
    }
    let fine = resolution as u64 * factor as u64;
    let fine_radius = radius as u64 * factor as u64;
    let local: Vec<BlockGrid> = incumbent
        .argmin
        .iter()
        .map(|probs| {
            let center = scaled_counts(probs, fine);
            let points = local_lattice(&center, fine, fine_radius)
                .iter()
                .map(|c| c.iter().map(|&v| v as f64 / fine as f64).collect())
                .collect();
            BlockGrid { points }
        })
        .collect();

    let product: u128 = local.iter().map(|b| b.len() as u128).product();
    let mut best = incumbent.clone();
    if product <= budget as u128 {
        let refined = minimize_product(&local, &objective);
        if refined.value < best.value {
            best = refined;
        }
        return best;
    }

    // Block-cyclic sweeps.
    for _ in 0..2 {
        for b in 0..local.len() {
            let candidate = (0..local[b].len())
                .into_par_iter()
                .map(|i| {
                    let slot: Vec<&[f64]> = best
                        .argmin
                        .iter()
                        .enumerate()
                        .map(|(j, p)| {
                            if j == b {
                                local[b].points[i].as_slice()
                            } else {
                                p.as_slice()
                            }
                        })
                        .collect();
                    (objective(&slot), i as u64)
                })
                .reduce(
                    || (f64::INFINITY, u64::MAX),
                    |x, y| if (y.0, y.1) < (x.0, x.1) { y } else { x },
                );
            if candidate.0 < best.value {
                best.value = candidate.0;
                best.argmin[b] = local[b].points[candidate.1 as usize].clone();
            }
        }
    }
    best
}
