//! The expurgated false-reject bound and its auxiliary functionals.
//!
//! For a fixed enrollment type `q_x`, the expurgated exponent is
//!
//! `E_ex(R_w, q_x) = inf { Λ(Q_XX') − H_Q(X'|X) + R_w :  H_Q(X'|X) ≥ R_w }`
//!
//! with the pairwise functional
//!
//! `Λ(Q_XX') = min_{Q_{Y|XX'}} { γ(Q_XY) − H_Q(Y|X,X') − E_Q ln P(Y|X) − a(Q_{X'Y}) }`,
//!
//! `γ(Q_XY) = max{ a(Q_XY), α(R_w, Q_Y) }` and `α` a constrained supremum
//! over conditionals. The `X`-marginal of `Q_XX'` is the supplied
//! enrollment type throughout.
//!
//! For the min-entropy metric `a(Q) = −β H_Q(X|Y)`, `α` has a closed form
//! and `γ` reduces accordingly; for channel-based metrics `α` is
//! precomputed on a quantized grid of `Y`-marginals. Setting `ρ = 1` in
//! [`fr_expurgated_rho`] removes the conditional-entropy constraint (the
//! plain ensemble average), and `ρ → ∞` recovers the expurgated value.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::decoders::DecodingMetric;
use crate::extreal::{pos, sum as xsum, EMPTY_INF};
use crate::measures::{
    entropy_of_slice, kl_slices, CompositionIter, CondPmf, JointPmf, Pmf,
};
use crate::measures::composition_count;
use crate::{Error, Result};

use super::optimize::{
    effective_resolution, minimize_product, refine_product, BlockGrid, MinOutcome,
    MAX_BLOCK_POINTS,
};
use super::{ExponentResult, GridOpts, NamedVector};

/// β grid of the min-entropy family supremum in [`fr_expurgated_sup_beta`].
pub const EXPURGATED_BETA_GRID: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];

/// Feasibility slack on entropy constraints.
const CONSTRAINT_SLACK: f64 = 1e-9;

/// `α(R_w, Q_Y) = sup { [a(Q_XY) + H_Q(X|Y)] − R_w : H_Q(X|Y) > R_w }`.
///
/// `x_alphabet` is the size of the optimized conditional's alphabet.
/// `-∞` when the constraint set is empty (`R_w ≥ ln|X|`). The min-entropy
/// family takes the closed form; channel metrics fall back to a grid
/// supremum. MAP-limit metrics have no finite `α` of their own; their
/// exponents go through the constrained forms instead.
pub fn alpha(
    r_w: f64,
    q_y: &Pmf,
    x_alphabet: usize,
    metric: &DecodingMetric,
    opts: &GridOpts,
) -> Result<f64> {
    match metric {
        DecodingMetric::MinEntropy { beta } => {
            Ok(alpha_min_entropy(*beta, r_w, (x_alphabet as f64).ln()))
        }
        DecodingMetric::TemperedLikelihood { beta, channel }
        | DecodingMetric::Mismatched { beta, channel } => {
            if channel.given_size() != q_y.alphabet_size() || channel.out_size() != x_alphabet {
                return Err(Error::ShapeMismatch(format!(
                    "channel ({} given {}), expected ({x_alphabet} given {})",
                    channel.out_size(),
                    channel.given_size(),
                    q_y.alphabet_size()
                )));
            }
            Ok(alpha_grid(*beta, channel, r_w, q_y.probs(), opts))
        }
        DecodingMetric::MapLimit { .. } => Err(Error::InvalidArgument(
            "alpha of a map-limit metric diverges; use the constrained exponent forms".into(),
        )),
    }
}

/// Closed-form `α` for `a(Q) = −β H_Q(X|Y)`.
///
/// For `β ≥ 1` the supremum is approached at the constraint boundary and
/// equals `−β R_w`; for `β < 1` it sits at maximal conditional entropy.
pub(crate) fn alpha_min_entropy(beta: f64, r_w: f64, ln_x: f64) -> f64 {
    if r_w >= ln_x {
        return f64::NEG_INFINITY;
    }
    if beta >= 1.0 {
        -beta * r_w
    } else {
        (1.0 - beta) * ln_x - r_w
    }
}

/// Grid supremum for channel metrics: rows of `Q_{X|Y}` over each `y`.
pub(crate) fn alpha_grid(
    beta: f64,
    channel: &CondPmf,
    r_w: f64,
    q_y: &[f64],
    opts: &GridOpts,
) -> f64 {
    let x_size = channel.out_size();
    let y_size = channel.given_size();
    let ln_chan = log_channel(channel);
    let cells = vec![x_size; y_size];
    let m = effective_resolution(opts.resolution, &cells, opts.point_budget);
    let blocks: Vec<BlockGrid> = (0..y_size)
        .map(|_| BlockGrid::lattice(x_size, m, &[]))
        .collect();
    let objective = |rows: &[&[f64]]| -> f64 {
        alpha_objective_neg(beta, &ln_chan, x_size, r_w, q_y, rows)
    };
    let coarse = minimize_product(&blocks, objective);
    let refined = refine_product(
        &coarse,
        m,
        opts.refine_factor,
        opts.refine_radius,
        opts.point_budget,
        objective,
    );
    -refined.value
}

/// Negated `α` objective (for minimization); `+∞` marks infeasibility.
fn alpha_objective_neg(
    beta: f64,
    ln_chan: &[f64],
    x_size: usize,
    r_w: f64,
    q_y: &[f64],
    rows: &[&[f64]],
) -> f64 {
    let mut h = 0.0;
    let mut a = 0.0;
    for (y, &w) in q_y.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        h += w * entropy_of_slice(rows[y]);
        if a > f64::NEG_INFINITY {
            for (x, &px) in rows[y].iter().enumerate() {
                if px == 0.0 {
                    continue;
                }
                let l = ln_chan[y * x_size + x];
                if l == f64::NEG_INFINITY {
                    a = f64::NEG_INFINITY;
                    break;
                }
                a += w * px * l;
            }
        }
    }
    if h <= r_w {
        return f64::INFINITY;
    }
    if a == f64::NEG_INFINITY {
        // a + H = −∞: never the supremum, but feasible.
        return f64::INFINITY;
    }
    -((beta * a + h) - r_w)
}

/// `γ(Q_XY) = max{ a(Q_XY), α(R_w, Q_Y) }`.
pub fn gamma(
    q_xy: &JointPmf,
    r_w: f64,
    metric: &DecodingMetric,
    opts: &GridOpts,
) -> Result<f64> {
    let a = metric.value(q_xy);
    let al = alpha(r_w, &q_xy.y_marginal(), q_xy.rows(), metric, opts)?;
    Ok(a.max(al))
}

fn log_channel(channel: &CondPmf) -> Vec<f64> {
    let (x_size, y_size) = (channel.out_size(), channel.given_size());
    let mut lut = vec![0.0f64; x_size * y_size];
    for y in 0..y_size {
        for x in 0..x_size {
            let p = channel.prob(x, y);
            lut[y * x_size + x] = if p > 0.0 { p.ln() } else { f64::NEG_INFINITY };
        }
    }
    lut
}

/// Precomputed `α` values on a quantized grid of `Y`-marginals.
struct AlphaTable {
    res: u64,
    values: HashMap<Vec<u64>, f64>,
}

impl AlphaTable {
    fn build(beta: f64, channel: &CondPmf, r_w: f64, opts: &GridOpts) -> Self {
        let y_size = channel.given_size();
        let res: u64 = match y_size {
            2 => 512,
            3 => 64,
            _ => 24,
        };
        // Each entry is itself a small constrained supremum; a reduced
        // budget keeps the table cheap relative to the scan it serves.
        let inner_opts = GridOpts {
            resolution: opts.resolution,
            point_budget: 1_000_000,
            refine_factor: opts.refine_factor,
            refine_radius: opts.refine_radius,
            check_convergence: false,
        };
        let nodes: Vec<Vec<u64>> = CompositionIter::new(res, y_size).collect();
        let values: HashMap<Vec<u64>, f64> = nodes
            .into_par_iter()
            .map(|counts| {
                let qy: Vec<f64> = counts.iter().map(|&c| c as f64 / res as f64).collect();
                let a = alpha_grid(beta, channel, r_w, &qy, &inner_opts);
                (counts, a)
            })
            .collect();
        Self { res, values }
    }

    /// Nearest-node lookup (quantization error is part of the documented
    /// grid error of channel-metric Λ evaluations).
    fn lookup(&self, q_y: &[f64]) -> f64 {
        let mut counts: Vec<u64> = q_y
            .iter()
            .map(|&p| (p * self.res as f64).round() as u64)
            .collect();
        let total: u64 = counts.iter().sum();
        if total != self.res {
            // Push the rounding drift into the largest cell.
            let argmax = counts
                .iter()
                .enumerate()
                .max_by_key(|&(_, &c)| c)
                .map(|(i, _)| i)
                .unwrap_or(0);
            let c = counts[argmax] as i128 + self.res as i128 - total as i128;
            counts[argmax] = c.max(0) as u64;
        }
        *self
            .values
            .get(&counts)
            .expect("quantized marginal is a table node")
    }
}

/// The metric as seen by the pairwise functional.
enum LambdaMetric {
    Channel {
        beta: f64,
        ln_chan: Vec<f64>,
        alpha_table: AlphaTable,
    },
    NegEntropy {
        beta: f64,
        alpha_closed: f64,
    },
    /// β → ∞ limit of the min-entropy family: the β-scaled term becomes
    /// the constraint `H_Q(X'|Y) ≤ min{H_Q(X|Y), R_w}`.
    MapMinEntropy,
}

fn lambda_metric(
    metric: &DecodingMetric,
    x_size: usize,
    y_size: usize,
    r_w: f64,
    opts: &GridOpts,
) -> Result<LambdaMetric> {
    match metric {
        DecodingMetric::TemperedLikelihood { beta, channel }
        | DecodingMetric::Mismatched { beta, channel } => {
            if channel.out_size() != x_size || channel.given_size() != y_size {
                return Err(Error::ShapeMismatch(format!(
                    "metric channel ({} given {}), pairwise problem needs ({x_size} given {y_size})",
                    channel.out_size(),
                    channel.given_size()
                )));
            }
            Ok(LambdaMetric::Channel {
                beta: *beta,
                ln_chan: log_channel(channel),
                alpha_table: AlphaTable::build(*beta, channel, r_w, opts),
            })
        }
        DecodingMetric::MinEntropy { beta } => Ok(LambdaMetric::NegEntropy {
            beta: *beta,
            alpha_closed: alpha_min_entropy(*beta, r_w, (x_size as f64).ln()),
        }),
        DecodingMetric::MapLimit { base } => match base.as_ref() {
            DecodingMetric::MinEntropy { .. } => Ok(LambdaMetric::MapMinEntropy),
            _ => Err(Error::InvalidArgument(
                "map-limit pairwise exponents are supported for the min-entropy family only"
                    .into(),
            )),
        },
    }
}

/// Fixed data of one pairwise problem.
struct LambdaProblem {
    x_size: usize,
    xp_size: usize,
    y_size: usize,
    r_w: f64,
    metric: LambdaMetric,
    /// `ln P(y|x)` indexed `[x * y_size + y]`.
    ln_p: Vec<f64>,
    /// `q_x(x) · P(y|x)` reference joint for the MAP-limit divergence term.
    ref_joint: Vec<f64>,
    /// `H(q_x)` of the enrollment type (X-marginal).
    h_qx: f64,
}

impl LambdaProblem {
    fn new(
        q_x_marginal: &[f64],
        p_y_given_x: &CondPmf,
        metric: &DecodingMetric,
        r_w: f64,
        opts: &GridOpts,
    ) -> Result<Self> {
        let x_size = q_x_marginal.len();
        let xp_size = x_size;
        let y_size = p_y_given_x.out_size();
        if p_y_given_x.given_size() != x_size {
            return Err(Error::ShapeMismatch(format!(
                "channel given {} symbols, type over {x_size}",
                p_y_given_x.given_size()
            )));
        }
        if y_size > 16 {
            return Err(Error::GuardExceeded {
                what: "pairwise problem observation alphabet",
                count: y_size as u128,
                limit: 16,
            });
        }
        let mut ln_p = vec![0.0f64; x_size * y_size];
        let mut ref_joint = vec![0.0f64; x_size * y_size];
        for x in 0..x_size {
            for y in 0..y_size {
                let p = p_y_given_x.prob(y, x);
                ln_p[x * y_size + y] = if p > 0.0 { p.ln() } else { f64::NEG_INFINITY };
                ref_joint[x * y_size + y] = q_x_marginal[x] * p;
            }
        }
        Ok(Self {
            x_size,
            xp_size,
            y_size,
            r_w,
            metric: lambda_metric(metric, x_size, y_size, r_w, opts)?,
            ln_p,
            ref_joint,
            h_qx: entropy_of_slice(q_x_marginal),
        })
    }

    /// The Λ integrand at one full choice of conditional rows: `rows[cell]`
    /// is `Q_{Y|X=x,X'=x'}` for `cell = x * |X'| + x'`, and `mass[cell]`
    /// is `Q_XX'(x, x')`.
    fn integrand(&self, mass: &[f64], rows: &[&[f64]]) -> f64 {
        let (xs, xps, ys) = (self.x_size, self.xp_size, self.y_size);
        let mut q_xy = vec![0.0f64; xs * ys];
        let mut q_xpy = vec![0.0f64; xps * ys];
        let mut h_y_given_xxp = 0.0;
        let mut e_lnp = 0.0;
        for x in 0..xs {
            for xp in 0..xps {
                let w = mass[x * xps + xp];
                if w == 0.0 {
                    continue;
                }
                let row = rows[x * xps + xp];
                h_y_given_xxp += w * entropy_of_slice(row);
                for (y, &py) in row.iter().enumerate() {
                    if py == 0.0 {
                        continue;
                    }
                    q_xy[x * ys + y] += w * py;
                    q_xpy[xp * ys + y] += w * py;
                    if e_lnp > f64::NEG_INFINITY {
                        let l = self.ln_p[x * ys + y];
                        if l == f64::NEG_INFINITY {
                            e_lnp = f64::NEG_INFINITY;
                        } else {
                            e_lnp += w * py * l;
                        }
                    }
                }
            }
        }
        self.finish(&q_xy, &q_xpy, h_y_given_xxp, e_lnp)
    }

    /// Final integrand value from accumulated marginals and scalars.
    fn finish(&self, q_xy: &[f64], q_xpy: &[f64], h_y_given_xxp: f64, e_lnp: f64) -> f64 {
        let (xs, xps, ys) = (self.x_size, self.xp_size, self.y_size);
        // Stack buffer for the small Y-marginal (alphabets are capped well
        // below this by the enumeration guards).
        let mut q_y_buf = [0.0f64; 16];
        let q_y = &mut q_y_buf[..ys];
        for x in 0..xs {
            for y in 0..ys {
                q_y[y] += q_xy[x * ys + y];
            }
        }
        match &self.metric {
            LambdaMetric::Channel {
                beta,
                ln_chan,
                alpha_table,
            } => {
                let a_xy = linear_metric(q_xy, ln_chan, xs, ys, *beta);
                let a_xpy = linear_metric(q_xpy, ln_chan, xps, ys, *beta);
                let gamma_v = a_xy.max(alpha_table.lookup(q_y));
                // f64 negation maps −∞ metric values to the +∞ penalty.
                xsum([gamma_v, -h_y_given_xxp, -e_lnp, -a_xpy])
            }
            LambdaMetric::NegEntropy { beta, alpha_closed } => {
                let h_y = entropy_of_slice(q_y);
                let h_x_given_y = (entropy_of_slice(q_xy) - h_y).max(0.0);
                let h_xp_given_y = (entropy_of_slice(q_xpy) - h_y).max(0.0);
                let gamma_v = (-beta * h_x_given_y).max(*alpha_closed);
                xsum([gamma_v, -h_y_given_xxp, -e_lnp, beta * h_xp_given_y])
            }
            LambdaMetric::MapMinEntropy => {
                let h_y = entropy_of_slice(q_y);
                let h_x_given_y = (entropy_of_slice(q_xy) - h_y).max(0.0);
                let h_xp_given_y = (entropy_of_slice(q_xpy) - h_y).max(0.0);
                if h_xp_given_y > h_x_given_y.min(self.r_w) + CONSTRAINT_SLACK {
                    return f64::INFINITY;
                }
                // I(X';Y|X) + D(Q_{Y|X} ‖ P_{Y|X} | q_x)
                let h_y_given_x = (entropy_of_slice(q_xy) - self.h_qx).max(0.0);
                let mi = (h_y_given_x - h_y_given_xxp).max(0.0);
                let d = kl_slices(q_xy, &self.ref_joint);
                xsum([mi, d])
            }
        }
    }
}

fn linear_metric(q: &[f64], ln_chan: &[f64], rows: usize, y_size: usize, beta: f64) -> f64 {
    let mut total = 0.0;
    for x in 0..rows {
        for y in 0..y_size {
            let mass = q[x * y_size + y];
            if mass == 0.0 {
                continue;
            }
            let l = ln_chan[y * rows + x];
            if l == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            total += mass * l;
        }
    }
    beta * total
}

/// `Λ(Q_XX')`: grid-plus-refinement minimum of the integrand over the
/// conditional rows `Q_{Y|XX'}`.
pub fn lambda_pairwise(
    q_xxp: &JointPmf,
    p_y_given_x: &CondPmf,
    metric: &DecodingMetric,
    r_w: f64,
    opts: &GridOpts,
) -> Result<f64> {
    if q_xxp.rows() != q_xxp.cols() {
        return Err(Error::ShapeMismatch(
            "pairwise joint must be square (X and X' share an alphabet)".into(),
        ));
    }
    let q_x = q_xxp.x_marginal();
    let problem = LambdaProblem::new(q_x.probs(), p_y_given_x, metric, r_w, opts)?;
    let mass = q_xxp.probs().to_vec();
    let cells = problem.x_size * problem.xp_size;
    let block_cells = vec![problem.y_size; cells];
    let m = effective_resolution(opts.resolution, &block_cells, opts.point_budget);
    let blocks: Vec<BlockGrid> = (0..cells)
        .map(|_| BlockGrid::lattice(problem.y_size, m, &[]))
        .collect();
    let objective = |rows: &[&[f64]]| problem.integrand(&mass, rows);
    let coarse = minimize_product(&blocks, objective);
    let refined = refine_product(
        &coarse,
        m,
        opts.refine_factor,
        opts.refine_radius,
        opts.point_budget,
        objective,
    );
    Ok(refined.value)
}

/// Λ evaluated on every outer lattice point of `Q_{X'|X}`, plus the
/// per-point conditional entropy `H_Q(X'|X)`; the base of every
/// expurgated-family quantity.
pub struct ExpurgatedAnalysis {
    q_x: Pmf,
    r_w: f64,
    resolution: u32,
    problem: LambdaProblem,
    /// Per outer point: rows of `Q_{X'|X}`, `H_Q(X'|X)`, `Λ`, inner rows.
    outer: Vec<OuterPoint>,
}

struct OuterPoint {
    rows: Vec<Vec<f64>>,
    h_prime: f64,
    lambda: f64,
    inner_rows: Vec<Vec<f64>>,
}

impl ExpurgatedAnalysis {
    pub fn new(
        q_x: &Pmf,
        p_y_given_x: &CondPmf,
        metric: &DecodingMetric,
        r_w: f64,
        opts: &GridOpts,
    ) -> Result<Self> {
        if !r_w.is_finite() || r_w < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "rate {r_w} must be finite and non-negative"
            )));
        }
        let problem = LambdaProblem::new(q_x.probs(), p_y_given_x, metric, r_w, opts)?;
        let x_size = problem.x_size;
        let xp_size = problem.xp_size;
        let y_size = problem.y_size;
        let cells = x_size * xp_size;

        let m = pick_nested_resolution(opts, x_size, xp_size, y_size);
        let outer_rows: Vec<Vec<f64>> = CompositionIter::new(m as u64, xp_size)
            .map(|c| c.iter().map(|&v| v as f64 / m as f64).collect())
            .collect();
        let inner_rows: Vec<Vec<f64>> = CompositionIter::new(m as u64, y_size)
            .map(|c| c.iter().map(|&v| v as f64 / m as f64).collect())
            .collect();
        let cache = RowCache::build(&problem, inner_rows);

        // Outer points are tuples of |X| rows.
        let n_rows = outer_rows.len();
        let n_outer = (n_rows as u64).pow(x_size as u32);
        let outer: Vec<OuterPoint> = (0..n_outer)
            .into_par_iter()
            .map(|flat| {
                let mut idx = flat;
                let mut rows: Vec<Vec<f64>> = Vec::with_capacity(x_size);
                for _ in 0..x_size {
                    rows.push(outer_rows[(idx % n_rows as u64) as usize].clone());
                    idx /= n_rows as u64;
                }
                rows.reverse();
                let mut mass = vec![0.0f64; cells];
                let mut h_prime = 0.0;
                for x in 0..x_size {
                    let w = q_x.prob(x);
                    h_prime += w * entropy_of_slice(&rows[x]);
                    for xp in 0..xp_size {
                        mass[x * xp_size + xp] = w * rows[x][xp];
                    }
                }
                let (lambda, inner) = lambda_scan(&problem, &mass, &cache);
                OuterPoint {
                    rows,
                    h_prime,
                    lambda,
                    inner_rows: inner,
                }
            })
            .collect();

        Ok(Self {
            q_x: q_x.clone(),
            r_w,
            resolution: m,
            problem,
            outer,
        })
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// Raw lattice expurgated exponent (no refinement): consistent with
    /// [`Self::rho_exponent`] and [`Self::rho_one_identity`].
    pub fn expurgated_raw(&self) -> f64 {
        self.outer
            .iter()
            .filter(|o| o.h_prime >= self.r_w - CONSTRAINT_SLACK)
            .map(|o| xsum([o.lambda, -o.h_prime, self.r_w]))
            .fold(EMPTY_INF, f64::min)
    }

    /// `E_x(R_w, q_x, ρ) = inf_Q { Λ − [H−R_w]_+ + ρ[R_w−H]_+ }` on the
    /// lattice; unconstrained in `Q_{X'|X}`.
    pub fn rho_exponent(&self, rho: f64) -> Result<f64> {
        if !(rho >= 1.0) {
            return Err(Error::InvalidArgument(format!("rho = {rho} must be >= 1")));
        }
        Ok(self
            .outer
            .iter()
            .map(|o| {
                xsum([
                    o.lambda,
                    -pos(o.h_prime - self.r_w),
                    rho * pos(self.r_w - o.h_prime),
                ])
            })
            .fold(EMPTY_INF, f64::min))
    }

    /// The `ρ = 1` closed form `inf_Q { Λ + R_w − H_Q(X'|X) }`, computed
    /// through an independent fold.
    pub fn rho_one_identity(&self) -> f64 {
        self.outer
            .iter()
            .map(|o| xsum([o.lambda, self.r_w, -o.h_prime]))
            .fold(EMPTY_INF, f64::min)
    }

    /// Refined expurgated exponent with its arg-min.
    pub fn expurgated(&self, opts: &GridOpts) -> ExponentResult {
        let feasible = self
            .outer
            .iter()
            .enumerate()
            .filter(|(_, o)| o.h_prime >= self.r_w - CONSTRAINT_SLACK)
            .map(|(i, o)| (xsum([o.lambda, -o.h_prime, self.r_w]), i))
            .fold((EMPTY_INF, usize::MAX), |acc, c| {
                if (c.0, c.1) < acc {
                    c
                } else {
                    acc
                }
            });
        if feasible.1 == usize::MAX {
            // Empty constraint set: E_ex = +∞ (e.g. R_w > ln|X|).
            return ExponentResult::new(f64::INFINITY, Vec::new(), self.resolution, false);
        }
        let incumbent = &self.outer[feasible.1];
        let cells = self.problem.x_size * self.problem.xp_size;

        // Joint refinement over the outer rows and the inner rows.
        let blocks: Vec<Vec<f64>> = incumbent
            .rows
            .iter()
            .cloned()
            .chain(incumbent.inner_rows.iter().cloned())
            .collect();
        let start = MinOutcome {
            value: feasible.0,
            argmin: blocks,
        };
        let q_x = self.q_x.clone();
        let x_size = self.problem.x_size;
        let xp_size = self.problem.xp_size;
        let r_w = self.r_w;
        let problem = &self.problem;
        let objective = move |pt: &[&[f64]]| -> f64 {
            let outer_rows = &pt[..x_size];
            let inner_rows = &pt[x_size..];
            let mut mass = vec![0.0f64; cells];
            let mut h_prime = 0.0;
            for x in 0..x_size {
                let w = q_x.prob(x);
                h_prime += w * entropy_of_slice(outer_rows[x]);
                for xp in 0..xp_size {
                    mass[x * xp_size + xp] = w * outer_rows[x][xp];
                }
            }
            if h_prime < r_w - CONSTRAINT_SLACK {
                return f64::INFINITY;
            }
            xsum([problem.integrand(&mass, inner_rows), -h_prime, r_w])
        };
        let refined = refine_product(
            &start,
            self.resolution,
            opts.refine_factor,
            opts.refine_radius,
            opts.point_budget,
            objective,
        );
        let mut argmin = Vec::new();
        if refined.value.is_finite() {
            argmin.push(NamedVector::new(
                "q_xprime_given_x_rows",
                refined.argmin[..x_size].concat(),
            ));
            argmin.push(NamedVector::new(
                "q_y_given_xxprime_rows",
                refined.argmin[x_size..].concat(),
            ));
        }
        ExponentResult::new(refined.value, argmin, self.resolution, true)
    }
}

/// Per-row statistics cached once per inner scan.
struct RowCache {
    probs: Vec<Vec<f64>>,
    /// Shannon entropy per row.
    h: Vec<f64>,
    /// `Σ_y row[y] ln P(y|x)` per `(x, row)`, indexed `[x][row]`.
    ellp: Vec<Vec<f64>>,
}

impl RowCache {
    fn build(problem: &LambdaProblem, rows: Vec<Vec<f64>>) -> Self {
        let h = rows.iter().map(|r| entropy_of_slice(r)).collect();
        let ellp = (0..problem.x_size)
            .map(|x| {
                rows.iter()
                    .map(|row| {
                        let mut total = 0.0;
                        for (y, &py) in row.iter().enumerate() {
                            if py == 0.0 {
                                continue;
                            }
                            let l = problem.ln_p[x * problem.y_size + y];
                            if l == f64::NEG_INFINITY {
                                return f64::NEG_INFINITY;
                            }
                            total += py * l;
                        }
                        total
                    })
                    .collect()
            })
            .collect();
        Self { probs: rows, h, ellp }
    }
}

/// Per-depth accumulator buffers for the inner Λ recursion (no per-leaf
/// allocation; each level copies its parent and adds one cell).
struct LambdaLevels {
    q_xy: Vec<Vec<f64>>,
    q_xpy: Vec<Vec<f64>>,
    h: Vec<f64>,
    e: Vec<f64>,
}

impl LambdaLevels {
    fn new(depths: usize, xs: usize, xps: usize, ys: usize) -> Self {
        Self {
            q_xy: vec![vec![0.0; xs * ys]; depths + 1],
            q_xpy: vec![vec![0.0; xps * ys]; depths + 1],
            h: vec![0.0; depths + 1],
            e: vec![0.0; depths + 1],
        }
    }
}

/// Inner Λ scan for one outer point: exhaustive over row tuples of the
/// active cells.
fn lambda_scan(
    problem: &LambdaProblem,
    mass: &[f64],
    cache: &RowCache,
) -> (f64, Vec<Vec<f64>>) {
    let (xs, xps, ys) = (problem.x_size, problem.xp_size, problem.y_size);
    let cells = xs * xps;
    let active: Vec<usize> = (0..cells).filter(|&c| mass[c] > 0.0).collect();
    let uniform = vec![1.0 / ys as f64; ys];
    if active.is_empty() {
        let rows = vec![uniform; cells];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        return (problem.integrand(mass, &refs), rows);
    }

    let mut levels = LambdaLevels::new(active.len(), xs, xps, ys);
    let mut choice = vec![0usize; active.len()];
    let mut best = (f64::INFINITY, vec![0usize; active.len()]);
    scan_levels(
        problem, mass, cache, &active, 0, &mut levels, &mut choice, &mut best,
    );

    let mut rows = vec![uniform; cells];
    for (d, &cell) in active.iter().enumerate() {
        rows[cell] = cache.probs[best.1[d]].clone();
    }
    (best.0, rows)
}

#[allow(clippy::too_many_arguments)]
fn scan_levels(
    problem: &LambdaProblem,
    mass: &[f64],
    cache: &RowCache,
    active: &[usize],
    depth: usize,
    levels: &mut LambdaLevels,
    choice: &mut Vec<usize>,
    best: &mut (f64, Vec<usize>),
) {
    let ys = problem.y_size;
    let xps = problem.xp_size;
    let cell = active[depth];
    let (x, xp) = (cell / xps, cell % xps);
    let w = mass[cell];
    for (i, row) in cache.probs.iter().enumerate() {
        // Copy the parent accumulators and add this cell's contribution.
        let (parents, childs) = levels.q_xy.split_at_mut(depth + 1);
        childs[0].copy_from_slice(&parents[depth]);
        for (y, &py) in row.iter().enumerate() {
            childs[0][x * ys + y] += w * py;
        }
        let (parents, childs) = levels.q_xpy.split_at_mut(depth + 1);
        childs[0].copy_from_slice(&parents[depth]);
        for (y, &py) in row.iter().enumerate() {
            childs[0][xp * ys + y] += w * py;
        }
        levels.h[depth + 1] = levels.h[depth] + w * cache.h[i];
        let e_parent = levels.e[depth];
        levels.e[depth + 1] = if e_parent == f64::NEG_INFINITY
            || cache.ellp[x][i] == f64::NEG_INFINITY
        {
            f64::NEG_INFINITY
        } else {
            e_parent + w * cache.ellp[x][i]
        };
        choice[depth] = i;
        if depth + 1 == active.len() {
            let v = problem.finish(
                &levels.q_xy[depth + 1],
                &levels.q_xpy[depth + 1],
                levels.h[depth + 1],
                levels.e[depth + 1],
            );
            if v < best.0 {
                best.0 = v;
                best.1 = choice.clone();
            }
        } else {
            scan_levels(
                problem, mass, cache, active, depth + 1, levels, choice, best,
            );
        }
    }
}

fn pick_nested_resolution(opts: &GridOpts, x_size: usize, xp_size: usize, y_size: usize) -> u32 {
    let mut m = opts.resolution.max(2);
    while m > 2 {
        let outer_rows = composition_count(m as u64, xp_size);
        let inner_rows = composition_count(m as u64, y_size);
        if outer_rows <= MAX_BLOCK_POINTS as u128 && inner_rows <= MAX_BLOCK_POINTS as u128 {
            let outer = outer_rows.saturating_pow(x_size as u32);
            let inner = inner_rows.saturating_pow((x_size * xp_size) as u32);
            if outer.saturating_mul(inner) <= opts.point_budget as u128 {
                return m;
            }
        }
        m -= 1;
    }
    2
}

/// The expurgated exponent for the enrollment type `q_x` at the given
/// metric (fixed β), with the half-resolution convergence check.
pub fn fr_expurgated_exponent(
    q_x: &Pmf,
    p_y_given_x: &CondPmf,
    r_w: f64,
    metric: &DecodingMetric,
    opts: &GridOpts,
) -> Result<ExponentResult> {
    let analysis = ExpurgatedAnalysis::new(q_x, p_y_given_x, metric, r_w, &opts.single_pass())?;
    let result = analysis.expurgated(opts);
    if !opts.check_convergence {
        return Ok(result);
    }
    let half_opts = opts.half_resolution();
    let half = ExpurgatedAnalysis::new(q_x, p_y_given_x, metric, r_w, &half_opts)?
        .expurgated(&half_opts);
    Ok(result.mark_convergence(half.value))
}

/// `E_x(R_w, q_x, ρ)` on the lattice (shares its Λ values with the
/// expurgated exponent at the same options).
pub fn fr_expurgated_rho(
    q_x: &Pmf,
    p_y_given_x: &CondPmf,
    r_w: f64,
    metric: &DecodingMetric,
    rho: f64,
    opts: &GridOpts,
) -> Result<f64> {
    ExpurgatedAnalysis::new(q_x, p_y_given_x, metric, r_w, &opts.single_pass())?.rho_exponent(rho)
}

/// Supremum of the expurgated exponent over the min-entropy family on the
/// documented β grid plus the MAP-limit constrained variant.
///
/// A finite β grid makes this a lower bound on the family's true
/// supremum; the optimal β is rate-dependent.
pub fn fr_expurgated_sup_beta(
    q_x: &Pmf,
    p_y_given_x: &CondPmf,
    r_w: f64,
    opts: &GridOpts,
) -> Result<ExponentResult> {
    let mut best: Option<(f64, ExponentResult, String)> = None;
    for &beta in EXPURGATED_BETA_GRID.iter() {
        let metric = DecodingMetric::min_entropy(beta)?;
        let r = fr_expurgated_exponent(q_x, p_y_given_x, r_w, &metric, opts)?;
        if best.as_ref().map_or(true, |(v, _, _)| r.value > *v) {
            best = Some((r.value, r, format!("min_entropy(beta={beta})")));
        }
    }
    let map_metric = DecodingMetric::map_limit(DecodingMetric::min_entropy(1.0)?)?;
    let r = fr_expurgated_exponent(q_x, p_y_given_x, r_w, &map_metric, opts)?;
    if best.as_ref().map_or(true, |(v, _, _)| r.value > *v) {
        best = Some((r.value, r, "map_limit(min_entropy)".into()));
    }
    let (_, mut result, which) = best.expect("beta grid is non-empty");
    result
        .argmin
        .push(NamedVector::new(format!("achieved_by:{which}"), vec![]));
    Ok(result)
}
