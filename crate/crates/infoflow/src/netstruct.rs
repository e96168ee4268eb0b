//! Correlation structure of a return panel: Pearson matrix, ultrametric
//! distance, Kruskal minimal spanning tree, dominant eigenmode, the market
//! series it induces, and the three-step market-factor removal.

use std::io::{self, Write};

use ndarray::Array2;
use thiserror::Error;

use crate::numstats::{ols_fit, StatsError};
use crate::panel::{return_panel_unchecked, ReturnPanel};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("column {ticker:?} has zero variance")]
    ZeroVarianceColumn { ticker: String },
    #[error("need at least {min} observations, found {m}")]
    TooFewObservations { m: usize, min: usize },
    #[error("power iteration did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("dimension mismatch: eigenvector has {mode} entries, panel has {panel} assets")]
    DimensionMismatch { mode: usize, panel: usize },
    #[error("market series has zero variance")]
    ZeroVarianceMarket,
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Symmetric Pearson correlation matrix of one return panel.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix<T> {
    pub n: usize,
    pub values: Array2<T>,
    /// Time scale of the source returns.
    pub k: usize,
    pub tickers: Vec<String>,
}

impl<T: Real> CorrelationMatrix<T> {
    pub fn get(&self, a: usize, b: usize) -> T {
        self.values[(a, b)]
    }
}

/// Pearson coefficients over the panel's observations; diagonal exactly 1,
/// off-diagonal entries clamped into [-1, 1] against rounding.
pub fn correlation_matrix<T: Real>(panel: &ReturnPanel<T>) -> Result<CorrelationMatrix<T>, NetError> {
    let m = panel.n_obs();
    let n = panel.n_assets();
    if m < 3 {
        return Err(NetError::TooFewObservations { m, min: 3 });
    }
    let mt = T::of(m as f64);

    let mut centered: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut norms: Vec<T> = Vec::with_capacity(n);
    for j in 0..n {
        let col = panel.returns.column(j);
        let mean = col.iter().copied().sum::<T>() / mt;
        let c: Vec<T> = col.iter().map(|&v| v - mean).collect();
        let ss = c.iter().map(|&v| v * v).sum::<T>();
        if !(ss > T::zero()) {
            return Err(NetError::ZeroVarianceColumn {
                ticker: panel.tickers[j].clone(),
            });
        }
        centered.push(c);
        norms.push(ss.sqrt());
    }

    let mut values = Array2::from_elem((n, n), T::one());
    for a in 0..n {
        for b in a + 1..n {
            let dot = centered[a]
                .iter()
                .zip(&centered[b])
                .map(|(&x, &y)| x * y)
                .sum::<T>();
            let rho = (dot / (norms[a] * norms[b])).max(-T::one()).min(T::one());
            values[(a, b)] = rho;
            values[(b, a)] = rho;
        }
    }

    Ok(CorrelationMatrix {
        n,
        values,
        k: panel.k,
        tickers: panel.tickers.clone(),
    })
}

/// Ultrametric distance d = sqrt(2 (1 - rho)); zero diagonal.
pub fn distance_matrix<T: Real>(corr: &CorrelationMatrix<T>) -> Array2<T> {
    let n = corr.n;
    Array2::from_shape_fn((n, n), |(a, b)| {
        if a == b {
            T::zero()
        } else {
            let two = T::of(2.0);
            (two * (T::one() - corr.values[(a, b)])).max(T::zero()).sqrt()
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MstEdge<T> {
    pub a: usize,
    pub b: usize,
    pub distance: T,
}

/// Minimal spanning tree as an edge list, edges stored with a < b.
#[derive(Debug, Clone)]
pub struct MstEdges<T> {
    pub edges: Vec<MstEdge<T>>,
    pub total_length: T,
}

impl<T> MstEdges<T> {
    pub fn links(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.a, e.b)).collect()
    }
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, x: usize, y: usize) -> bool {
        let rx = self.find(x);
        let ry = self.find(y);
        if rx == ry {
            return false;
        }
        match self.rank[rx].cmp(&self.rank[ry]) {
            std::cmp::Ordering::Less => self.parent[rx] = ry,
            std::cmp::Ordering::Greater => self.parent[ry] = rx,
            std::cmp::Ordering::Equal => {
                self.parent[ry] = rx;
                self.rank[rx] += 1;
            }
        }
        true
    }
}

/// Kruskal MST over a full symmetric distance matrix.
///
/// Candidate edges are sorted by (distance, min index, max index), so trees
/// are reproducible on data with repeated distances.
pub fn mst_kruskal<T: Real>(dist: &Array2<T>) -> MstEdges<T> {
    let n = dist.nrows();
    assert_eq!(n, dist.ncols(), "distance matrix must be square");
    assert!(n >= 2, "need at least two nodes");

    let mut edges: Vec<MstEdge<T>> = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            edges.push(MstEdge {
                a,
                b,
                distance: dist[(a, b)],
            });
        }
    }
    edges.sort_by(|x, y| {
        x.distance
            .partial_cmp(&y.distance)
            .expect("distances must be ordered")
            .then(x.a.cmp(&y.a))
            .then(x.b.cmp(&y.b))
    });

    let mut uf = UnionFind::new(n);
    let mut picked = Vec::with_capacity(n - 1);
    let mut total = T::zero();
    for e in edges {
        if uf.union(e.a, e.b) {
            total = total + e.distance;
            picked.push(e);
            if picked.len() == n - 1 {
                break;
            }
        }
    }
    debug_assert_eq!(picked.len(), n - 1);

    MstEdges {
        edges: picked,
        total_length: total,
    }
}

const MAX_POWER_ITER: usize = 10_000;

/// Dominant eigenpair of a correlation matrix.
#[derive(Debug, Clone)]
pub struct EigenMode<T> {
    pub eigenvalue: T,
    /// Unit-norm eigenvector with nonnegative component sum.
    pub eigenvector: Vec<T>,
    pub iterations: usize,
}

/// Power iteration from the normalized all-ones vector. Converged when
/// successive Rayleigh quotients differ by less than 1e-12 relative and the
/// iterate moves by less than 1e-10 in Euclidean norm.
pub fn largest_eigen<T: Real>(corr: &CorrelationMatrix<T>) -> Result<EigenMode<T>, NetError> {
    let n = corr.n;
    let lambda_tol = T::tol(1e-12);
    let vec_tol = T::tol(1e-10);

    let mut v = vec![T::one() / T::of(n as f64).sqrt(); n];
    let mut lambda_prev = T::nan();

    for iter in 1..=MAX_POWER_ITER {
        let mut w = vec![T::zero(); n];
        for (a, wa) in w.iter_mut().enumerate() {
            let mut s = T::zero();
            for b in 0..n {
                s = s + corr.values[(a, b)] * v[b];
            }
            *wa = s;
        }
        // Rayleigh quotient with the unit-norm iterate.
        let lambda = v.iter().zip(&w).map(|(&x, &y)| x * y).sum::<T>();
        let norm = w.iter().map(|&x| x * x).sum::<T>().sqrt();
        if !(norm > T::zero()) {
            return Err(NetError::NonConvergence { iterations: iter });
        }
        // Keep the iterate aligned with its predecessor so the step size is
        // meaningful even when the eigenvalue is negative-dominant.
        let align = v.iter().zip(&w).map(|(&x, &y)| x * y).sum::<T>();
        let sign = if align < T::zero() { -T::one() } else { T::one() };
        let next: Vec<T> = w.iter().map(|&x| sign * x / norm).collect();

        let step = v
            .iter()
            .zip(&next)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt();
        let lambda_step = (lambda - lambda_prev).abs();
        v = next;
        if lambda_step <= lambda_tol * lambda.abs().max(T::one()) && step <= vec_tol {
            let total = v.iter().copied().sum::<T>();
            if total < T::zero() {
                for x in &mut v {
                    *x = -*x;
                }
            }
            return Ok(EigenMode {
                eigenvalue: lambda,
                eigenvector: v,
                iterations: iter,
            });
        }
        lambda_prev = lambda;
    }
    Err(NetError::NonConvergence {
        iterations: MAX_POWER_ITER,
    })
}

/// Market-mode return series R_M(t) = sum_j V_j R_j(t).
#[derive(Debug, Clone)]
pub struct MarketSeries<T> {
    pub values: Vec<T>,
    pub k: usize,
}

pub fn market_series<T: Real>(
    mode: &EigenMode<T>,
    panel: &ReturnPanel<T>,
) -> Result<MarketSeries<T>, NetError> {
    let n = panel.n_assets();
    if mode.eigenvector.len() != n {
        return Err(NetError::DimensionMismatch {
            mode: mode.eigenvector.len(),
            panel: n,
        });
    }
    let values = (0..panel.n_obs())
        .map(|t| {
            mode.eigenvector
                .iter()
                .enumerate()
                .map(|(j, &vj)| vj * panel.returns[(t, j)])
                .sum::<T>()
        })
        .collect();
    Ok(MarketSeries { values, k: panel.k })
}

/// Remove the market factor from every column: fit
/// R_j = alpha + beta R_M + eps, rebuild the fitted series, and keep the
/// residual R*_j = R_j - (alpha + beta R_M).
pub fn remove_market_factor<T: Real>(
    panel: &ReturnPanel<T>,
    market: &MarketSeries<T>,
) -> Result<ReturnPanel<T>, NetError> {
    let m = panel.n_obs();
    if market.values.len() != m {
        return Err(NetError::DimensionMismatch {
            mode: market.values.len(),
            panel: m,
        });
    }
    let first = market.values[0];
    if market.values.iter().all(|&v| v == first) {
        return Err(NetError::ZeroVarianceMarket);
    }

    let design = Array2::from_shape_fn((m, 1), |(r, _)| market.values[r]);
    let n = panel.n_assets();
    let mut residuals = Array2::from_elem((m, n), T::zero());
    for j in 0..n {
        let col = panel.column(j);
        let fit = ols_fit(&design, &col)?;
        for t in 0..m {
            residuals[(t, j)] = fit.residuals[t];
        }
    }
    Ok(return_panel_unchecked(panel, residuals))
}

/// Top and bottom `q` fraction of links ranked by correlation value.
///
/// Links are sorted ascending by (rho, a, b); the lower set is the first
/// floor(q * L) entries, the upper set the last floor(q * L). Returned sets
/// are each in lexicographic order.
pub fn quantile_link_groups<T: Real>(
    corr: &CorrelationMatrix<T>,
    q: f64,
) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    assert!(q > 0.0 && q <= 0.5, "quantile fraction must lie in (0, 0.5]");
    let n = corr.n;
    let mut ranked: Vec<(T, usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            ranked.push((corr.values[(a, b)], a, b));
        }
    }
    ranked.sort_by(|x, y| {
        x.0.partial_cmp(&y.0)
            .expect("correlations must be ordered")
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });
    let count = ((n * (n - 1) / 2) as f64 * q).floor() as usize;
    let mut lower: Vec<(usize, usize)> = ranked[..count].iter().map(|&(_, a, b)| (a, b)).collect();
    let mut upper: Vec<(usize, usize)> = ranked[ranked.len() - count..]
        .iter()
        .map(|&(_, a, b)| (a, b))
        .collect();
    lower.sort_unstable();
    upper.sort_unstable();
    (upper, lower)
}

/// Serialize MST edges as `a,b,distance`.
pub fn write_mst_csv<T: Real, W: Write>(mst: &MstEdges<T>, out: &mut W) -> io::Result<()> {
    writeln!(out, "a,b,distance")?;
    for e in &mst.edges {
        writeln!(out, "{},{},{:.16e}", e.a, e.b, e.distance)?;
    }
    Ok(())
}

/// Serialize a correlation matrix as dense CSV with ticker header row and
/// column.
pub fn write_corr_csv<T: Real, W: Write>(
    corr: &CorrelationMatrix<T>,
    out: &mut W,
) -> io::Result<()> {
    write!(out, "ticker")?;
    for t in &corr.tickers {
        write!(out, ",{t}")?;
    }
    writeln!(out)?;
    for a in 0..corr.n {
        write!(out, "{}", corr.tickers[a])?;
        for b in 0..corr.n {
            write!(out, ",{:.16e}", corr.values[(a, b)])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{gen_factor_panel, gen_white_noise, FactorPanelSpec};
    use ndarray::Array2;

    fn panel_from_columns(cols: Vec<Vec<f64>>) -> ReturnPanel<f64> {
        let template = gen_white_noise::<f64>(cols.len().max(2), cols[0].len().max(10), 0);
        let m = cols[0].len();
        let n = cols.len();
        let mut returns = Array2::zeros((m, n));
        for (j, c) in cols.iter().enumerate() {
            for (t, &v) in c.iter().enumerate() {
                returns[(t, j)] = v;
            }
        }
        ReturnPanel {
            k: 1,
            obs_index: (1..=m).collect(),
            dates: template.dates[..m].to_vec(),
            tickers: (0..n).map(|j| format!("A{j:03}")).collect(),
            returns,
        }
    }

    #[test]
    fn correlation_duplicate_and_negated_columns() {
        let base = vec![1.0, 2.0, 0.5, 3.0, 1.5];
        let panel = panel_from_columns(vec![
            base.clone(),
            base.clone(),
            base.iter().map(|v| -v).collect(),
        ]);
        let corr = correlation_matrix(&panel).unwrap();
        assert!((corr.get(0, 1) - 1.0).abs() < 1e-12);
        assert!((corr.get(0, 2) + 1.0).abs() < 1e-12);
        assert_eq!(corr.get(1, 1), 1.0);
    }

    #[test]
    fn correlation_hand_example() {
        let panel = panel_from_columns(vec![
            vec![1.0, 2.0, 3.0, 4.0],
            vec![1.0, 3.0, 2.0, 4.0],
        ]);
        let corr = correlation_matrix(&panel).unwrap();
        assert!((corr.get(0, 1) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn correlation_guards() {
        let panel = panel_from_columns(vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(matches!(
            correlation_matrix(&panel),
            Err(NetError::TooFewObservations { m: 2, min: 3 })
        ));
        let panel = panel_from_columns(vec![vec![1.0, 1.0, 1.0], vec![2.0, 1.0, 3.0]]);
        assert!(matches!(
            correlation_matrix(&panel),
            Err(NetError::ZeroVarianceColumn { .. })
        ));
    }

    #[test]
    fn distance_endpoints() {
        let panel = panel_from_columns(vec![
            vec![1.0, 2.0, 3.0, 4.0],
            vec![1.0, 3.0, 2.0, 4.0],
        ]);
        let mut corr = correlation_matrix(&panel).unwrap();
        for (rho, want) in [(1.0, 0.0), (0.0, std::f64::consts::SQRT_2), (-1.0, 2.0)] {
            corr.values[(0, 1)] = rho;
            corr.values[(1, 0)] = rho;
            let d = distance_matrix(&corr);
            assert!((d[(0, 1)] - want).abs() < 1e-12, "rho={rho}");
            assert_eq!(d[(0, 0)], 0.0);
        }
    }

    #[test]
    fn mst_three_node_example() {
        let mut dist: Array2<f64> = Array2::zeros((3, 3));
        for (a, b, d) in [(0, 1, 0.5), (0, 2, 0.9), (1, 2, 0.7)] {
            dist[(a, b)] = d;
            dist[(b, a)] = d;
        }
        let mst = mst_kruskal(&dist);
        let links = mst.links();
        assert_eq!(links, vec![(0, 1), (1, 2)]);
        assert!((mst.total_length - 1.2).abs() < 1e-12);
    }

    #[test]
    fn mst_tie_break_gives_star() {
        let n = 5;
        let dist = Array2::from_shape_fn((n, n), |(a, b)| if a == b { 0.0 } else { 1.0 });
        let mst = mst_kruskal(&dist);
        assert_eq!(mst.links(), vec![(0, 1), (0, 2), (0, 3), (0, 4)]);
    }

    #[test]
    fn mst_two_nodes() {
        let mut dist: Array2<f64> = Array2::zeros((2, 2));
        dist[(0, 1)] = 0.3;
        dist[(1, 0)] = 0.3;
        let mst = mst_kruskal(&dist);
        assert_eq!(mst.links(), vec![(0, 1)]);
    }

    #[test]
    fn eigen_two_by_two() {
        let panel = panel_from_columns(vec![
            vec![1.0, 2.0, 3.0, 4.0],
            vec![1.0, 3.0, 2.0, 4.0],
        ]);
        let mut corr = correlation_matrix(&panel).unwrap();
        corr.values[(0, 1)] = 0.5;
        corr.values[(1, 0)] = 0.5;
        let mode = largest_eigen(&corr).unwrap();
        assert!((mode.eigenvalue - 1.5).abs() < 1e-10);
        let half_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((mode.eigenvector[0] - half_sqrt2).abs() < 1e-8);
        assert!((mode.eigenvector[1] - half_sqrt2).abs() < 1e-8);
    }

    #[test]
    fn eigen_equicorrelation_closed_form() {
        let n = 8;
        let rho = 0.35;
        let panel = panel_from_columns(vec![vec![0.0; 4]; n]);
        let values = Array2::from_shape_fn((n, n), |(a, b)| if a == b { 1.0 } else { rho });
        let corr = CorrelationMatrix {
            n,
            values,
            k: 1,
            tickers: panel.tickers.clone(),
        };
        let mode = largest_eigen(&corr).unwrap();
        assert!((mode.eigenvalue - (1.0 + (n as f64 - 1.0) * rho)).abs() < 1e-8);
        let want = 1.0 / (n as f64).sqrt();
        for &v in &mode.eigenvector {
            assert!((v - want).abs() < 1e-8);
        }
        // Residual of the eigen equation.
        let mut max_resid: f64 = 0.0;
        for a in 0..n {
            let mut s = 0.0;
            for b in 0..n {
                s += corr.values[(a, b)] * mode.eigenvector[b];
            }
            max_resid = max_resid.max((s - mode.eigenvalue * mode.eigenvector[a]).abs());
        }
        assert!(max_resid < 1e-8);
    }

    #[test]
    fn market_series_arithmetic() {
        let panel = panel_from_columns(vec![vec![1.0, 1.0, 1.0], vec![1.0, 1.0, 1.0]]);
        let mode = EigenMode {
            eigenvalue: 1.0,
            eigenvector: vec![0.6, 0.8],
            iterations: 1,
        };
        let market = market_series(&mode, &panel).unwrap();
        for &v in &market.values {
            assert!((v - 1.4).abs() < 1e-12);
        }
    }

    #[test]
    fn market_series_on_rank_one_panel_is_mean_scaled() {
        let spec = FactorPanelSpec::new(5, 200, 31).with_idio(0.0);
        let panel = gen_factor_panel::<f64>(&spec).unwrap();
        let corr = correlation_matrix(&panel).unwrap();
        // idio 0, equal lags: correlation matrix is exactly rank one.
        for a in 0..5 {
            for b in 0..5 {
                if a != b {
                    assert!((corr.get(a, b).abs() - 1.0).abs() < 1e-10);
                }
            }
        }
        let mode = largest_eigen(&corr).unwrap();
        let market = market_series(&mode, &panel).unwrap();
        let n = 5.0f64;
        for t in 0..panel.n_obs() {
            let mean = (0..5).map(|j| panel.returns[(t, j)]).sum::<f64>() / n;
            assert!((market.values[t] - n.sqrt() * mean).abs() < 1e-10);
        }
    }

    #[test]
    fn defactoring_kills_exact_factor() {
        let m = 40;
        let market_vals: Vec<f64> = (0..m).map(|t| ((t * 13 % 17) as f64).sin()).collect();
        let col: Vec<f64> = market_vals.iter().map(|v| 3.0 * v).collect();
        let panel = panel_from_columns(vec![col.clone(), market_vals.clone()]);
        let market = MarketSeries {
            values: market_vals,
            k: 1,
        };
        let star = remove_market_factor(&panel, &market).unwrap();
        for t in 0..m {
            assert!(star.returns[(t, 0)].abs() <= 1e-12);
        }
        // Residuals regress to zero slope and intercept against the market.
        let design = Array2::from_shape_fn((m, 1), |(r, _)| market.values[r]);
        for j in 0..2 {
            let fit = ols_fit(&design, &star.column(j)).unwrap();
            assert!(fit.coefficients[0].abs() < 1e-10);
            assert!(fit.coefficients[1].abs() < 1e-10);
        }
    }

    #[test]
    fn defactoring_guards() {
        let panel = panel_from_columns(vec![vec![1.0, 2.0, 3.0], vec![3.0, 1.0, 2.0]]);
        let market = MarketSeries {
            values: vec![5.0, 5.0, 5.0],
            k: 1,
        };
        assert!(matches!(
            remove_market_factor(&panel, &market),
            Err(NetError::ZeroVarianceMarket)
        ));
        let market = MarketSeries {
            values: vec![1.0, 2.0],
            k: 1,
        };
        assert!(matches!(
            remove_market_factor(&panel, &market),
            Err(NetError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn quantile_counts_and_tie_break() {
        // N=5 gives 10 links; q = 0.2 keeps 2 on each side.
        let n = 5;
        let values = Array2::from_shape_fn((n, n), |(a, b)| {
            if a == b {
                1.0
            } else {
                ((a + b) as f64 * 0.711).sin() * 0.8
            }
        });
        // Symmetrize.
        let mut sym = values.clone();
        for a in 0..n {
            for b in 0..n {
                sym[(a, b)] = values[(a.min(b), a.max(b))];
            }
        }
        let corr = CorrelationMatrix {
            n,
            values: sym,
            k: 1,
            tickers: (0..n).map(|j| format!("A{j:03}")).collect(),
        };
        let (upper, lower) = quantile_link_groups(&corr, 0.2);
        assert_eq!(upper.len(), 2);
        assert_eq!(lower.len(), 2);
        assert!(upper.iter().all(|l| !lower.contains(l)));

        // All-equal coefficients: sets are fixed by the lexicographic
        // tie-break and stay disjoint.
        let flat = CorrelationMatrix {
            n,
            values: Array2::from_shape_fn((n, n), |(a, b)| if a == b { 1.0 } else { 0.5 }),
            k: 1,
            tickers: corr.tickers.clone(),
        };
        let (upper, lower) = quantile_link_groups(&flat, 0.2);
        assert_eq!(lower, vec![(0, 1), (0, 2)]);
        assert_eq!(upper, vec![(2, 4), (3, 4)]);
    }

    #[test]
    fn csv_writers_shape() {
        let panel = panel_from_columns(vec![
            vec![1.0, 2.0, 3.0, 4.0],
            vec![1.0, 3.0, 2.0, 4.0],
        ]);
        let corr = correlation_matrix(&panel).unwrap();
        let mst = mst_kruskal(&distance_matrix(&corr));
        let mut buf = Vec::new();
        write_mst_csv(&mst, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("a,b,distance\n0,1,"));

        let mut buf = Vec::new();
        write_corr_csv(&corr, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("ticker,A000,A001\nA000,1.0000000000000000e0,"));
    }
}
