//! Pairwise Granger-causality testing, flow classification, and flow-ratio
//! aggregation over link universes.
//!
//! For each ordered pair the unrestricted model regresses the target series
//! on its own lags 1..L plus the other series' lags 1..L; the restricted
//! model keeps own lags only. The F statistic compares the two residual sums
//! of squares with L numerator and (M - L) - (2L + 1) denominator degrees of
//! freedom, where M - L rows enter both fits.

use std::io::{self, Write};

use ndarray::Array2;
use rayon::prelude::*;
use thiserror::Error;

use crate::numstats::{f_cdf, ols_fit, StatsError};
use crate::panel::ReturnPanel;
use crate::scalar::Real;

/// Largest supported lag order in the Granger regressions.
pub const MAX_LAG_ORDER: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrangerError {
    #[error("series too short: {m} observations cannot support lag order {l} (need {min})")]
    TooShort { m: usize, l: usize, min: usize },
    #[error("series lengths differ: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("lag order {l} outside 1..={MAX_LAG_ORDER}")]
    BadLagOrder { l: usize },
    #[error("pair ({a}, {b}): {source}")]
    AtPair {
        a: usize,
        b: usize,
        source: Box<GrangerError>,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("link ({a}, {b}) not present in sweep results")]
    UnknownLink { a: usize, b: usize },
    #[error("flow ratios mix universes")]
    MixedUniverse,
    #[error("flow ratios mix time scales or lag orders")]
    MixedScale,
    #[error("no flow ratios to aggregate")]
    EmptyAggregate,
}

/// Direction classification of one unordered pair at a significance level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowClass {
    /// Both directional tests significant.
    Mutual,
    /// Only "A Granger-causes B" significant.
    AtoB,
    /// Only "B Granger-causes A" significant.
    BtoA,
    None,
}

impl FlowClass {
    pub fn label(self) -> &'static str {
        match self {
            FlowClass::Mutual => "mutual",
            FlowClass::AtoB => "a_to_b",
            FlowClass::BtoA => "b_to_a",
            FlowClass::None => "none",
        }
    }

    pub fn is_one_way(self) -> bool {
        matches!(self, FlowClass::AtoB | FlowClass::BtoA)
    }
}

/// Classification from the two directional p-values at level `alpha`.
pub fn classify<T: Real>(p_ab: T, p_ba: T, alpha: T) -> FlowClass {
    match (p_ab < alpha, p_ba < alpha) {
        (true, true) => FlowClass::Mutual,
        (true, false) => FlowClass::AtoB,
        (false, true) => FlowClass::BtoA,
        (false, false) => FlowClass::None,
    }
}

/// Both directional Granger tests for one unordered pair.
#[derive(Debug, Clone)]
pub struct PairCausality<T> {
    /// Asset indices with `pair.0 < pair.1`.
    pub pair: (usize, usize),
    pub k: usize,
    pub l: usize,
    /// F statistic and p-value for "A Granger-causes B".
    pub f_ab: T,
    pub p_ab: T,
    /// F statistic and p-value for "B Granger-causes A".
    pub f_ba: T,
    pub p_ba: T,
    pub class: FlowClass,
    /// Set when the pair hit a singular design and was recorded as None
    /// instead of aborting the sweep.
    pub degenerate: bool,
}

impl<T: Real> PairCausality<T> {
    fn degenerate_none(a: usize, b: usize, k: usize, l: usize) -> Self {
        Self {
            pair: (a, b),
            k,
            l,
            f_ab: T::zero(),
            p_ab: T::one(),
            f_ba: T::zero(),
            p_ba: T::one(),
            class: FlowClass::None,
            degenerate: true,
        }
    }

    /// Re-derive the classification at a different significance level.
    pub fn reclassify(&self, alpha: T) -> FlowClass {
        if self.degenerate {
            FlowClass::None
        } else {
            classify(self.p_ab, self.p_ba, alpha)
        }
    }
}

fn lag_columns<T: Real>(series: &[T], l: usize) -> Array2<T> {
    let n_use = series.len() - l;
    Array2::from_shape_fn((n_use, l), |(r, c)| series[l + r - (c + 1)])
}

/// One direction: F test of "other Granger-causes target".
fn granger_direction<T: Real>(
    target: &[T],
    own_lags: &Array2<T>,
    other_lags: &Array2<T>,
    l: usize,
) -> Result<(T, T), StatsError> {
    let n_use = own_lags.nrows();
    let y = &target[target.len() - n_use..];

    let unrestricted = Array2::from_shape_fn((n_use, 2 * l), |(r, c)| {
        if c < l {
            own_lags[(r, c)]
        } else {
            other_lags[(r, c - l)]
        }
    });

    let fit_r = ols_fit(own_lags, y)?;
    let fit_u = ols_fit(&unrestricted, y)?;

    let df2 = n_use - (2 * l + 1);
    let lt = T::of(l as f64);
    let df2t = T::of(df2 as f64);
    let f = if fit_u.rss > T::zero() {
        (((fit_r.rss - fit_u.rss) / lt) / (fit_u.rss / df2t)).max(T::zero())
    } else {
        T::infinity()
    };
    let p = T::one() - f_cdf(f, l, df2)?;
    Ok((f, p))
}

/// Granger test in both directions for two aligned return series.
///
/// The returned record carries `pair = (0, 1)` and `k = 1`; `sweep_pairs`
/// rewrites both from the panel context. The restricted and unrestricted
/// models share one lag slab per series, built once per call.
pub fn granger_pair<T: Real>(
    ra: &[T],
    rb: &[T],
    l: usize,
    alpha: T,
) -> Result<PairCausality<T>, GrangerError> {
    if ra.len() != rb.len() {
        return Err(GrangerError::LengthMismatch {
            a: ra.len(),
            b: rb.len(),
        });
    }
    if l == 0 || l > MAX_LAG_ORDER {
        return Err(GrangerError::BadLagOrder { l });
    }
    let m = ra.len();
    // Denominator df must stay positive: (m - l) - (2l + 1) >= 1.
    let min = 3 * l + 2;
    if m < min {
        return Err(GrangerError::TooShort { m, l, min });
    }

    let a_lags = lag_columns(ra, l);
    let b_lags = lag_columns(rb, l);

    let (f_ab, p_ab) = granger_direction(rb, &b_lags, &a_lags, l)?;
    let (f_ba, p_ba) = granger_direction(ra, &a_lags, &b_lags, l)?;

    Ok(PairCausality {
        pair: (0, 1),
        k: 1,
        l,
        f_ab,
        p_ab,
        f_ba,
        p_ba,
        class: classify(p_ab, p_ba, alpha),
        degenerate: false,
    })
}

/// All-pairs sweep at one (k, L) cell.
#[derive(Debug, Clone)]
pub struct SweepResult<T> {
    pub k: usize,
    pub l: usize,
    pub alpha: T,
    pub n_assets: usize,
    /// Lexicographically ordered by (a, b), all a < b.
    pub pairs: Vec<PairCausality<T>>,
}

/// Run `granger_pair` over every unordered pair of panel columns.
///
/// Pairs are partitioned across the current rayon pool; results are collected
/// back in lexicographic order, so output is identical for any worker count.
/// A pair that hits a singular design is recorded as a flagged `None`
/// classification rather than aborting the sweep.
pub fn sweep_pairs<T: Real>(
    panel: &ReturnPanel<T>,
    l: usize,
    alpha: T,
) -> Result<SweepResult<T>, GrangerError> {
    let n = panel.n_assets();
    assert!(n >= 2, "need at least two columns to sweep");
    let columns: Vec<Vec<T>> = (0..n).map(|j| panel.column(j)).collect();
    let index_pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .collect();

    let pairs: Result<Vec<PairCausality<T>>, GrangerError> = index_pairs
        .par_iter()
        .map(|&(a, b)| match granger_pair(&columns[a], &columns[b], l, alpha) {
            Ok(mut pc) => {
                pc.pair = (a, b);
                pc.k = panel.k;
                Ok(pc)
            }
            Err(GrangerError::Stats(StatsError::SingularDesign { .. })) => {
                Ok(PairCausality::degenerate_none(a, b, panel.k, l))
            }
            Err(e) => Err(GrangerError::AtPair {
                a,
                b,
                source: Box::new(e),
            }),
        })
        .collect();

    Ok(SweepResult {
        k: panel.k,
        l,
        alpha,
        n_assets: n,
        pairs: pairs?,
    })
}

/// Which links a flow ratio is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UniverseKind {
    AllLinks,
    MstLinks,
    UpperQuantile,
    LowerQuantile,
}

impl UniverseKind {
    pub fn label(self) -> &'static str {
        match self {
            UniverseKind::AllLinks => "all",
            UniverseKind::MstLinks => "mst",
            UniverseKind::UpperQuantile => "upper",
            UniverseKind::LowerQuantile => "lower",
        }
    }
}

/// A labelled link set; `links = None` means every pair in the sweep.
#[derive(Debug, Clone)]
pub struct LinkSelection {
    pub kind: UniverseKind,
    pub links: Option<Vec<(usize, usize)>>,
}

impl LinkSelection {
    pub fn all() -> Self {
        Self {
            kind: UniverseKind::AllLinks,
            links: None,
        }
    }

    pub fn subset(kind: UniverseKind, links: Vec<(usize, usize)>) -> Self {
        Self {
            kind,
            links: Some(links),
        }
    }
}

/// Counts and ratios of mutual / one-way flows over one link universe.
#[derive(Debug, Clone)]
pub struct FlowRatios<T> {
    pub universe: UniverseKind,
    pub n_links: usize,
    pub n_mutual: usize,
    pub n_oneway: usize,
    pub fr_mutual: T,
    pub fr_oneway: T,
    pub k: usize,
    pub l: usize,
    pub alpha: T,
}

/// Count flow classifications over the selected links.
pub fn flow_ratios<T: Real>(
    sweep: &SweepResult<T>,
    selection: &LinkSelection,
) -> Result<FlowRatios<T>, GrangerError> {
    let mut n_mutual = 0usize;
    let mut n_oneway = 0usize;
    let n_links;
    match &selection.links {
        None => {
            n_links = sweep.pairs.len();
            for pc in &sweep.pairs {
                match pc.class {
                    FlowClass::Mutual => n_mutual += 1,
                    c if c.is_one_way() => n_oneway += 1,
                    _ => {}
                }
            }
        }
        Some(links) => {
            n_links = links.len();
            for &(a, b) in links {
                let idx = sweep
                    .pairs
                    .binary_search_by_key(&(a, b), |pc| pc.pair)
                    .map_err(|_| GrangerError::UnknownLink { a, b })?;
                match sweep.pairs[idx].class {
                    FlowClass::Mutual => n_mutual += 1,
                    c if c.is_one_way() => n_oneway += 1,
                    _ => {}
                }
            }
        }
    }
    let denom = T::of(n_links as f64);
    Ok(FlowRatios {
        universe: selection.kind,
        n_links,
        n_mutual,
        n_oneway,
        fr_mutual: T::of(n_mutual as f64) / denom,
        fr_oneway: T::of(n_oneway as f64) / denom,
        k: sweep.k,
        l: sweep.l,
        alpha: sweep.alpha,
    })
}

/// Flow ratios averaged over lag orders at a fixed time scale.
#[derive(Debug, Clone)]
pub struct AvgFlowRatios<T> {
    pub universe: UniverseKind,
    pub k: usize,
    pub alpha: T,
    pub l_count: usize,
    pub fr_mutual: T,
    pub fr_oneway: T,
}

/// Arithmetic mean of the ratios over one FlowRatios per lag order.
pub fn avg_over_lags<T: Real>(ratios: &[FlowRatios<T>]) -> Result<AvgFlowRatios<T>, GrangerError> {
    let first = ratios.first().ok_or(GrangerError::EmptyAggregate)?;
    for r in ratios {
        if r.universe != first.universe {
            return Err(GrangerError::MixedUniverse);
        }
        if r.k != first.k {
            return Err(GrangerError::MixedScale);
        }
    }
    let n = T::of(ratios.len() as f64);
    Ok(AvgFlowRatios {
        universe: first.universe,
        k: first.k,
        alpha: first.alpha,
        l_count: ratios.len(),
        fr_mutual: ratios.iter().map(|r| r.fr_mutual).sum::<T>() / n,
        fr_oneway: ratios.iter().map(|r| r.fr_oneway).sum::<T>() / n,
    })
}

/// Serialize a sweep as `a,b,k,L,f_ab,p_ab,f_ba,p_ba,class` with
/// 17-significant-digit statistics.
pub fn write_sweep_csv<T: Real, W: Write>(sweep: &SweepResult<T>, out: &mut W) -> io::Result<()> {
    writeln!(out, "a,b,k,L,f_ab,p_ab,f_ba,p_ba,class")?;
    for pc in &sweep.pairs {
        writeln!(
            out,
            "{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            pc.pair.0,
            pc.pair.1,
            pc.k,
            pc.l,
            pc.f_ab,
            pc.p_ab,
            pc.f_ba,
            pc.p_ba,
            pc.class.label()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::gen_white_noise;
    use crate::rng::{Gaussian, SplitMix64};

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut g = Gaussian::new(SplitMix64::new(seed));
        (0..n).map(|_| g.next()).collect()
    }

    #[test]
    fn classification_truth_table() {
        assert_eq!(classify(0.01, 0.01, 0.05), FlowClass::Mutual);
        assert_eq!(classify(0.01, 0.50, 0.05), FlowClass::AtoB);
        assert_eq!(classify(0.50, 0.01, 0.05), FlowClass::BtoA);
        assert_eq!(classify(0.50, 0.50, 0.05), FlowClass::None);
    }

    #[test]
    fn swap_mirrors_statistics() {
        let a = noise(1, 120);
        let b = noise(2, 120);
        let ab = granger_pair(&a, &b, 2, 0.05).unwrap();
        let ba = granger_pair(&b, &a, 2, 0.05).unwrap();
        assert!((ab.f_ab - ba.f_ba).abs() < 1e-10);
        assert!((ab.f_ba - ba.f_ab).abs() < 1e-10);
        assert!((ab.p_ab - ba.p_ba).abs() < 1e-10);
    }

    #[test]
    fn scale_invariance() {
        let a = noise(3, 150);
        let b = noise(4, 150);
        let base = granger_pair(&a, &b, 3, 0.05).unwrap();
        let scaled_a: Vec<f64> = a.iter().map(|v| v * 250.0).collect();
        let scaled = granger_pair(&scaled_a, &b, 3, 0.05).unwrap();
        assert!((base.f_ab - scaled.f_ab).abs() < 1e-8 * base.f_ab.max(1.0));
        assert!((base.f_ba - scaled.f_ba).abs() < 1e-8 * base.f_ba.max(1.0));
    }

    #[test]
    fn guards() {
        let a = noise(5, 10);
        let b = noise(6, 10);
        assert!(matches!(
            granger_pair(&a, &b, 3, 0.05),
            Err(GrangerError::TooShort { min: 11, .. })
        ));
        assert!(matches!(
            granger_pair(&a, &b, 0, 0.05),
            Err(GrangerError::BadLagOrder { l: 0 })
        ));
        assert!(matches!(
            granger_pair(&a, &b[..9], 1, 0.05),
            Err(GrangerError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn constant_series_is_singular() {
        let a = vec![1.0f64; 60];
        let b = noise(7, 60);
        assert!(matches!(
            granger_pair(&a, &b, 1, 0.05),
            Err(GrangerError::Stats(StatsError::SingularDesign { .. }))
        ));
    }

    #[test]
    fn sweep_base_case_matches_pair() {
        let panel = gen_white_noise::<f64>(2, 80, 11);
        let sweep = sweep_pairs(&panel, 2, 0.05).unwrap();
        assert_eq!(sweep.pairs.len(), 1);
        let direct = granger_pair(&panel.column(0), &panel.column(1), 2, 0.05).unwrap();
        assert_eq!(sweep.pairs[0].pair, (0, 1));
        assert!((sweep.pairs[0].f_ab - direct.f_ab).abs() < 1e-15);
    }

    #[test]
    fn sweep_counts_and_order() {
        let panel = gen_white_noise::<f64>(7, 40, 13);
        let sweep = sweep_pairs(&panel, 1, 0.05).unwrap();
        assert_eq!(sweep.pairs.len(), 21);
        let mut expect = Vec::new();
        for a in 0..7 {
            for b in a + 1..7 {
                expect.push((a, b));
            }
        }
        let got: Vec<_> = sweep.pairs.iter().map(|p| p.pair).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn sweep_flags_degenerate_pair() {
        let mut panel = gen_white_noise::<f64>(3, 60, 17);
        for t in 0..60 {
            panel.returns[(t, 1)] = 2.5;
        }
        let sweep = sweep_pairs(&panel, 1, 0.05).unwrap();
        assert_eq!(sweep.pairs.len(), 3);
        let degenerate: Vec<_> = sweep.pairs.iter().filter(|p| p.degenerate).map(|p| p.pair).collect();
        assert_eq!(degenerate, vec![(0, 1), (1, 2)]);
        assert!(sweep
            .pairs
            .iter()
            .filter(|p| p.degenerate)
            .all(|p| p.class == FlowClass::None));
    }

    #[test]
    fn ratios_all_mutual_and_none() {
        let panel = gen_white_noise::<f64>(4, 60, 19);
        let mut sweep = sweep_pairs(&panel, 1, 0.05).unwrap();
        for pc in &mut sweep.pairs {
            pc.class = FlowClass::Mutual;
        }
        let fr = flow_ratios(&sweep, &LinkSelection::all()).unwrap();
        assert_eq!(fr.n_links, 6);
        assert_eq!(fr.fr_mutual, 1.0);
        assert_eq!(fr.fr_oneway, 0.0);

        for pc in &mut sweep.pairs {
            pc.class = FlowClass::None;
        }
        let fr = flow_ratios(&sweep, &LinkSelection::all()).unwrap();
        assert_eq!(fr.fr_mutual, 0.0);
        assert_eq!(fr.fr_oneway, 0.0);
    }

    #[test]
    fn ratios_paper_denominator() {
        // 1000 mutual links out of N=104 pairs.
        let n = 104;
        let mut pairs = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                pairs.push(PairCausality::<f64> {
                    pair: (a, b),
                    k: 1,
                    l: 1,
                    f_ab: 0.0,
                    p_ab: 1.0,
                    f_ba: 0.0,
                    p_ba: 1.0,
                    class: if pairs.len() < 1000 {
                        FlowClass::Mutual
                    } else {
                        FlowClass::None
                    },
                    degenerate: false,
                });
            }
        }
        let sweep = SweepResult {
            k: 1,
            l: 1,
            alpha: 0.05,
            n_assets: n,
            pairs,
        };
        let fr = flow_ratios(&sweep, &LinkSelection::all()).unwrap();
        assert_eq!(fr.n_links, 5356);
        assert!((fr.fr_mutual - 1000.0 / 5356.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_link_is_reported() {
        let panel = gen_white_noise::<f64>(3, 60, 23);
        let sweep = sweep_pairs(&panel, 1, 0.05).unwrap();
        let sel = LinkSelection::subset(UniverseKind::MstLinks, vec![(0, 1), (1, 5)]);
        assert!(matches!(
            flow_ratios(&sweep, &sel),
            Err(GrangerError::UnknownLink { a: 1, b: 5 })
        ));
    }

    #[test]
    fn averaging_examples() {
        let mk = |l: usize, fr: f64| FlowRatios::<f64> {
            universe: UniverseKind::AllLinks,
            n_links: 10,
            n_mutual: 0,
            n_oneway: 0,
            fr_mutual: fr,
            fr_oneway: fr,
            k: 1,
            l,
            alpha: 0.05,
        };
        let cells: Vec<_> = [0.1, 0.2, 0.3, 0.4, 0.5]
            .iter()
            .enumerate()
            .map(|(i, &v)| mk(i + 1, v))
            .collect();
        let avg = avg_over_lags(&cells).unwrap();
        assert!((avg.fr_mutual - 0.3).abs() < 1e-15);

        let single = avg_over_lags(&cells[..1]).unwrap();
        assert_eq!(single.fr_mutual, 0.1);

        let zero = avg_over_lags(&[mk(1, 0.0), mk(2, 0.0)]).unwrap();
        assert_eq!(zero.fr_oneway, 0.0);

        let mut mixed = cells.clone();
        mixed[1].k = 2;
        assert!(matches!(avg_over_lags(&mixed), Err(GrangerError::MixedScale)));
        let mut mixed = cells;
        mixed[1].universe = UniverseKind::MstLinks;
        assert!(matches!(avg_over_lags(&mixed), Err(GrangerError::MixedUniverse)));
    }

    #[test]
    fn sweep_csv_shape() {
        let panel = gen_white_noise::<f64>(3, 60, 29);
        let sweep = sweep_pairs(&panel, 1, 0.05).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&sweep, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "a,b,k,L,f_ab,p_ab,f_ba,p_ba,class");
        assert!(lines[1].starts_with("0,1,1,1,"));
    }
}
