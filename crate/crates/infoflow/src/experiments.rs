//! The three studies: the (k, L) grid of flow ratios with its link
//! universes, the market-factor removal comparison, and the rolling-window
//! time-variation analysis. Each emits a plot-ready CSV table.

use thiserror::Error;

use crate::granger::{
    avg_over_lags, flow_ratios, sweep_pairs, AvgFlowRatios, FlowRatios, GrangerError,
    LinkSelection, UniverseKind,
};
use crate::netstruct::{
    correlation_matrix, distance_matrix, largest_eigen, market_series, mst_kruskal,
    quantile_link_groups, remove_market_factor, NetError,
};
use crate::numstats::{jarque_bera, JbResult, StatsError};
use crate::panel::{to_returns, PanelError, PricePanel, ReturnPanel};
use crate::scalar::Real;

/// Link fraction for the upper/lower correlation groups.
pub const DEFAULT_QUANTILE: f64 = 0.2;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {reason}")]
    BadConfig { reason: String },
    #[error("k={k}: {source}")]
    PanelAt { k: usize, source: PanelError },
    #[error("k={k}: {source}")]
    NetAt { k: usize, source: NetError },
    #[error("k={k}, L={l}: {source}")]
    GrangerAt {
        k: usize,
        l: usize,
        source: GrangerError,
    },
    #[error("window {window} (start {start}): {source}")]
    WindowAt {
        window: usize,
        start: usize,
        source: Box<ExperimentError>,
    },
    #[error("rolling window too short: {t} observations < window length {w}")]
    WindowTooShort { t: usize, w: usize },
}

impl ExperimentError {
    /// Whether the failure is numerical (non-convergence, singularity) as
    /// opposed to an input problem.
    pub fn is_numerical(&self) -> bool {
        match self {
            ExperimentError::NetAt { source, .. } => matches!(
                source,
                NetError::NonConvergence { .. }
                    | NetError::Stats(StatsError::SingularDesign { .. })
                    | NetError::Stats(StatsError::NonConvergence { .. })
            ),
            ExperimentError::GrangerAt { source, .. } => granger_is_numerical(source),
            ExperimentError::WindowAt { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

fn granger_is_numerical(e: &GrangerError) -> bool {
    match e {
        GrangerError::Stats(StatsError::SingularDesign { .. })
        | GrangerError::Stats(StatsError::NonConvergence { .. }) => true,
        GrangerError::AtPair { source, .. } => granger_is_numerical(source),
        _ => false,
    }
}

/// Flow type reported in the output tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FlowKind {
    Mutual,
    OneWay,
}

impl FlowKind {
    pub const BOTH: [FlowKind; 2] = [FlowKind::Mutual, FlowKind::OneWay];

    pub fn label(self) -> &'static str {
        match self {
            FlowKind::Mutual => "mutual",
            FlowKind::OneWay => "oneway",
        }
    }
}

/// Configuration of one grid run.
#[derive(Debug, Clone)]
pub struct GridConfig<T> {
    pub k_values: Vec<usize>,
    pub l_max: usize,
    pub alpha: T,
    pub universes: Vec<UniverseKind>,
    pub quantile: f64,
}

impl<T: Real> Default for GridConfig<T> {
    fn default() -> Self {
        Self {
            k_values: (1..=5).collect(),
            l_max: 5,
            alpha: T::of(0.05),
            universes: vec![
                UniverseKind::AllLinks,
                UniverseKind::MstLinks,
                UniverseKind::UpperQuantile,
                UniverseKind::LowerQuantile,
            ],
            quantile: DEFAULT_QUANTILE,
        }
    }
}

impl<T: Real> GridConfig<T> {
    fn validated(&self) -> Result<GridConfig<T>, ExperimentError> {
        let bad = |reason: String| Err(ExperimentError::BadConfig { reason });
        if self.k_values.is_empty() {
            return bad("k_values must not be empty".into());
        }
        if self.k_values.iter().any(|&k| k == 0 || k > 5) {
            return bad(format!("k_values {:?} must lie in 1..=5", self.k_values));
        }
        if self.l_max == 0 || self.l_max > 5 {
            return bad(format!("l_max {} must lie in 1..=5", self.l_max));
        }
        if !(self.alpha > T::zero() && self.alpha < T::one()) {
            return bad("alpha must lie in (0, 1)".into());
        }
        if self.universes.is_empty() {
            return bad("universes must not be empty".into());
        }
        if !(self.quantile > 0.0 && self.quantile <= 0.5) {
            return bad(format!("quantile {} must lie in (0, 0.5]", self.quantile));
        }
        let mut cfg = self.clone();
        cfg.k_values.sort_unstable();
        cfg.k_values.dedup();
        cfg.universes.sort_unstable();
        cfg.universes.dedup();
        Ok(cfg)
    }
}

/// Flow ratios per (k, L, universe) cell plus their per-k averages over L.
#[derive(Debug, Clone)]
pub struct GridResult<T> {
    /// Ordered by (k, L, universe).
    pub cells: Vec<FlowRatios<T>>,
    /// Ordered by (k, universe).
    pub averaged: Vec<AvgFlowRatios<T>>,
}

impl<T: Real> GridResult<T> {
    pub fn avg(&self, k: usize, universe: UniverseKind) -> Option<&AvgFlowRatios<T>> {
        self.averaged
            .iter()
            .find(|a| a.k == k && a.universe == universe)
    }

    pub fn avg_ratio(&self, k: usize, universe: UniverseKind, flow: FlowKind) -> Option<T> {
        self.avg(k, universe).map(|a| match flow {
            FlowKind::Mutual => a.fr_mutual,
            FlowKind::OneWay => a.fr_oneway,
        })
    }
}

/// Build the requested link selections from one return panel. Structures
/// are computed only for the universes that need them, so an AllLinks-only
/// run tolerates degenerate columns that the sweep flags per pair.
fn build_selections<T: Real>(
    panel: &ReturnPanel<T>,
    universes: &[UniverseKind],
    quantile: f64,
) -> Result<Vec<LinkSelection>, NetError> {
    let needs_corr = universes.iter().any(|u| *u != UniverseKind::AllLinks);
    let corr = if needs_corr {
        Some(correlation_matrix(panel)?)
    } else {
        None
    };
    let mut quantiles = None;
    let mut selections = Vec::with_capacity(universes.len());
    for &u in universes {
        let sel = match u {
            UniverseKind::AllLinks => LinkSelection::all(),
            UniverseKind::MstLinks => {
                let corr = corr.as_ref().expect("corr built for MST");
                let mst = mst_kruskal(&distance_matrix(corr));
                LinkSelection::subset(u, mst.links())
            }
            UniverseKind::UpperQuantile | UniverseKind::LowerQuantile => {
                let corr = corr.as_ref().expect("corr built for quantiles");
                let (upper, lower) = quantiles
                    .get_or_insert_with(|| quantile_link_groups(corr, quantile))
                    .clone();
                LinkSelection::subset(
                    u,
                    if u == UniverseKind::UpperQuantile {
                        upper
                    } else {
                        lower
                    },
                )
            }
        };
        selections.push(sel);
    }
    Ok(selections)
}

/// Grid over pre-built return panels, one per k.
fn grid_over_panels<T: Real>(
    panels: &[ReturnPanel<T>],
    cfg: &GridConfig<T>,
) -> Result<GridResult<T>, ExperimentError> {
    let mut cells = Vec::new();
    let mut averaged = Vec::new();
    for panel in panels {
        let k = panel.k;
        let min_obs = 3 * cfg.l_max + 2;
        if panel.n_obs() < min_obs {
            return Err(ExperimentError::GrangerAt {
                k,
                l: cfg.l_max,
                source: GrangerError::TooShort {
                    m: panel.n_obs(),
                    l: cfg.l_max,
                    min: min_obs,
                },
            });
        }
        let selections = build_selections(panel, &cfg.universes, cfg.quantile)
            .map_err(|source| ExperimentError::NetAt { k, source })?;

        let mut per_universe: Vec<Vec<FlowRatios<T>>> =
            vec![Vec::with_capacity(cfg.l_max); selections.len()];
        for l in 1..=cfg.l_max {
            let sweep = sweep_pairs(panel, l, cfg.alpha)
                .map_err(|source| ExperimentError::GrangerAt { k, l, source })?;
            for (u, sel) in selections.iter().enumerate() {
                let fr = flow_ratios(&sweep, sel)
                    .map_err(|source| ExperimentError::GrangerAt { k, l, source })?;
                per_universe[u].push(fr);
            }
        }
        for (u, ratios) in per_universe.iter().enumerate() {
            let avg = avg_over_lags(ratios).map_err(|source| ExperimentError::GrangerAt {
                k,
                l: cfg.l_max,
                source,
            })?;
            averaged.push(avg);
            let _ = u;
        }
        for l in 0..cfg.l_max {
            for ratios in &per_universe {
                cells.push(ratios[l].clone());
            }
        }
    }
    Ok(GridResult { cells, averaged })
}

/// Convert prices at each configured k and run the full (k, L) grid.
pub fn run_grid<T: Real>(
    prices: &PricePanel<T>,
    cfg: &GridConfig<T>,
) -> Result<GridResult<T>, ExperimentError> {
    let cfg = cfg.validated()?;
    let mut panels = Vec::with_capacity(cfg.k_values.len());
    for &k in &cfg.k_values {
        let panel =
            to_returns(prices, k).map_err(|source| ExperimentError::PanelAt { k, source })?;
        panels.push(panel);
    }
    grid_over_panels(&panels, &cfg)
}

/// One row of the defactoring comparison.
#[derive(Debug, Clone)]
pub struct DfrRow<T> {
    pub k: usize,
    pub universe: UniverseKind,
    pub flow: FlowKind,
    /// Average ratio on the original returns.
    pub fr: T,
    /// Average ratio on the market-factor-removed returns.
    pub mfr: T,
    /// fr - mfr.
    pub dfr: T,
}

#[derive(Debug, Clone)]
pub struct DfrTable<T> {
    pub rows: Vec<DfrRow<T>>,
}

impl<T: Real> DfrTable<T> {
    pub fn row(&self, k: usize, universe: UniverseKind, flow: FlowKind) -> Option<&DfrRow<T>> {
        self.rows
            .iter()
            .find(|r| r.k == k && r.universe == universe && r.flow == flow)
    }
}

/// Run the grid on the original panel and on the defactored panel, where the
/// market series is rebuilt per k from the dominant eigenmode of that k's
/// correlation matrix, and report FR, MFR, and their difference.
pub fn run_defactor<T: Real>(
    prices: &PricePanel<T>,
    cfg: &GridConfig<T>,
) -> Result<DfrTable<T>, ExperimentError> {
    let cfg = cfg.validated()?;
    let mut originals = Vec::with_capacity(cfg.k_values.len());
    let mut defactored = Vec::with_capacity(cfg.k_values.len());
    for &k in &cfg.k_values {
        let panel =
            to_returns(prices, k).map_err(|source| ExperimentError::PanelAt { k, source })?;
        let star = (|| {
            let corr = correlation_matrix(&panel)?;
            let mode = largest_eigen(&corr)?;
            let market = market_series(&mode, &panel)?;
            remove_market_factor(&panel, &market)
        })()
        .map_err(|source| ExperimentError::NetAt { k, source })?;
        originals.push(panel);
        defactored.push(star);
    }

    let fr_grid = grid_over_panels(&originals, &cfg)?;
    let mfr_grid = grid_over_panels(&defactored, &cfg)?;

    let mut rows = Vec::new();
    for fr_avg in &fr_grid.averaged {
        let mfr_avg = mfr_grid
            .avg(fr_avg.k, fr_avg.universe)
            .expect("both grids share the cell layout");
        for flow in FlowKind::BOTH {
            let (fr, mfr) = match flow {
                FlowKind::Mutual => (fr_avg.fr_mutual, mfr_avg.fr_mutual),
                FlowKind::OneWay => (fr_avg.fr_oneway, mfr_avg.fr_oneway),
            };
            rows.push(DfrRow {
                k: fr_avg.k,
                universe: fr_avg.universe,
                flow,
                fr,
                mfr,
                dfr: fr - mfr,
            });
        }
    }
    Ok(DfrTable { rows })
}

/// Number of length-`w` windows advanced by `step` over `t` observations.
pub fn window_count(t: usize, w: usize, step: usize) -> Result<usize, ExperimentError> {
    if w == 0 || step == 0 {
        return Err(ExperimentError::BadConfig {
            reason: "window length and step must be positive".into(),
        });
    }
    if t < w {
        return Err(ExperimentError::WindowTooShort { t, w });
    }
    Ok((t - w) / step + 1)
}

#[derive(Debug, Clone)]
pub struct RollingConfig<T> {
    pub window_len: usize,
    pub step: usize,
    pub grid: GridConfig<T>,
}

/// One (k, universe, flow) series across the rolling windows.
#[derive(Debug, Clone)]
pub struct RollingTrace<T> {
    pub k: usize,
    pub universe: UniverseKind,
    pub flow: FlowKind,
    pub values: Vec<T>,
    /// Absent when the series is too short or degenerate for the test.
    pub jb: Option<JbResult<T>>,
}

impl<T> RollingTrace<T> {
    pub fn series_id(&self) -> String {
        format!("k{}_{}_{}", self.k, self.universe.label(), self.flow.label())
    }
}

#[derive(Debug, Clone)]
pub struct RollingSeries<T> {
    pub window_starts: Vec<usize>,
    /// Ordered by (k, universe, flow).
    pub traces: Vec<RollingTrace<T>>,
}

impl<T: Real> RollingSeries<T> {
    pub fn trace(&self, k: usize, universe: UniverseKind, flow: FlowKind) -> Option<&RollingTrace<T>> {
        self.traces
            .iter()
            .find(|t| t.k == k && t.universe == universe && t.flow == flow)
    }
}

/// Slide a window over the price rows, rerun the averaged (k, L) grid inside
/// each window (universes rebuilt per window), and test each resulting flow
/// series for normality.
pub fn run_rolling<T: Real>(
    prices: &PricePanel<T>,
    cfg: &RollingConfig<T>,
) -> Result<RollingSeries<T>, ExperimentError> {
    let grid_cfg = cfg.grid.validated()?;
    let t_total = prices.n_obs();
    let n_windows = window_count(t_total, cfg.window_len, cfg.step)?;
    for &k in &grid_cfg.k_values {
        if cfg.window_len < k + 1 || (cfg.window_len - 1) / k < 3 * grid_cfg.l_max + 2 {
            return Err(ExperimentError::WindowTooShort {
                t: cfg.window_len,
                w: k * (3 * grid_cfg.l_max + 2) + 1,
            });
        }
    }

    let window_starts: Vec<usize> = (0..n_windows).map(|w| w * cfg.step).collect();
    let mut series: Vec<Vec<T>> = Vec::new();
    let mut layout: Vec<(usize, UniverseKind)> = Vec::new();

    for (w, &start) in window_starts.iter().enumerate() {
        let sub = prices.window(start, cfg.window_len);
        let grid = run_grid(&sub, &grid_cfg).map_err(|source| ExperimentError::WindowAt {
            window: w,
            start,
            source: Box::new(source),
        })?;
        if w == 0 {
            layout = grid.averaged.iter().map(|a| (a.k, a.universe)).collect();
            series = vec![Vec::with_capacity(n_windows); layout.len() * 2];
        }
        for (i, avg) in grid.averaged.iter().enumerate() {
            series[2 * i].push(avg.fr_mutual);
            series[2 * i + 1].push(avg.fr_oneway);
        }
    }

    let mut traces = Vec::with_capacity(series.len());
    for (i, &(k, universe)) in layout.iter().enumerate() {
        for (slot, flow) in FlowKind::BOTH.iter().enumerate() {
            let values = series[2 * i + slot].clone();
            let jb = match jarque_bera(&values) {
                Ok(jb) => Some(jb),
                Err(StatsError::TooShort { .. }) | Err(StatsError::DegenerateSample) => None,
                Err(e) => {
                    return Err(ExperimentError::NetAt {
                        k,
                        source: NetError::Stats(e),
                    })
                }
            };
            traces.push(RollingTrace {
                k,
                universe,
                flow: *flow,
                values,
                jb,
            });
        }
    }

    Ok(RollingSeries {
        window_starts,
        traces,
    })
}

fn sig10<T: Real>(v: T) -> String {
    format!("{v:.9e}")
}

/// `k,L,universe,flow,count,ratio` rows for every grid cell.
pub fn grid_csv<T: Real>(grid: &GridResult<T>) -> String {
    let mut out = String::from("k,L,universe,flow,count,ratio\n");
    for cell in &grid.cells {
        for flow in FlowKind::BOTH {
            let (count, ratio) = match flow {
                FlowKind::Mutual => (cell.n_mutual, cell.fr_mutual),
                FlowKind::OneWay => (cell.n_oneway, cell.fr_oneway),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                cell.k,
                cell.l,
                cell.universe.label(),
                flow.label(),
                count,
                sig10(ratio)
            ));
        }
    }
    out
}

/// `k,universe,flow,ratio` rows for the per-k averages over L.
pub fn grid_avg_csv<T: Real>(grid: &GridResult<T>) -> String {
    let mut out = String::from("k,universe,flow,ratio\n");
    for avg in &grid.averaged {
        for flow in FlowKind::BOTH {
            let ratio = match flow {
                FlowKind::Mutual => avg.fr_mutual,
                FlowKind::OneWay => avg.fr_oneway,
            };
            out.push_str(&format!(
                "{},{},{},{}\n",
                avg.k,
                avg.universe.label(),
                flow.label(),
                sig10(ratio)
            ));
        }
    }
    out
}

/// `k,universe,flow,fr,mfr,dfr` rows.
pub fn dfr_csv<T: Real>(table: &DfrTable<T>) -> String {
    let mut out = String::from("k,universe,flow,fr,mfr,dfr\n");
    for r in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.k,
            r.universe.label(),
            r.flow.label(),
            sig10(r.fr),
            sig10(r.mfr),
            sig10(r.dfr)
        ));
    }
    out
}

/// `window_start,k,universe,flow,ratio` rows, one block per series.
pub fn rolling_csv<T: Real>(rolling: &RollingSeries<T>) -> String {
    let mut out = String::from("window_start,k,universe,flow,ratio\n");
    for trace in &rolling.traces {
        for (w, &start) in rolling.window_starts.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                start,
                trace.k,
                trace.universe.label(),
                trace.flow.label(),
                sig10(trace.values[w])
            ));
        }
    }
    out
}

/// `series,jb,p` rows, `nan` where the test is undefined.
pub fn rolling_jb_csv<T: Real>(rolling: &RollingSeries<T>) -> String {
    let mut out = String::from("series,jb,p\n");
    for trace in &rolling.traces {
        match &trace.jb {
            Some(jb) => out.push_str(&format!(
                "{},{},{}\n",
                trace.series_id(),
                sig10(jb.statistic),
                sig10(jb.p_value)
            )),
            None => out.push_str(&format!("{},nan,nan\n", trace.series_id())),
        }
    }
    out
}
