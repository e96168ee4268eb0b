//! Price and return panels: CSV ingestion, multi-scale log-return
//! conversion, per-column shuffling, and seeded synthetic generators.

use std::io::{self, Read, Write};

use chrono::NaiveDate;
use ndarray::Array2;
use thiserror::Error;

use crate::rng::{permutation, Gaussian, SplitMix64};
use crate::scalar::Real;

/// Largest supported stride for converting prices to returns.
pub const MAX_TIME_SCALE: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PanelError {
    #[error("i/o error reading panel: {0}")]
    Io(String),
    #[error("bad header: {reason}")]
    BadHeader { reason: String },
    #[error("row {row}: expected {want} fields, found {got}")]
    RaggedRow { row: usize, want: usize, got: usize },
    #[error("row {row}, column {column}: empty cell")]
    MissingCell { row: usize, column: String },
    #[error("row {row}, column {column}: cannot parse number from {text:?}")]
    BadNumber {
        row: usize,
        column: String,
        text: String,
    },
    #[error("row {row}, column {column}: price {text:?} is not a positive finite number")]
    NonPositivePrice {
        row: usize,
        column: String,
        text: String,
    },
    #[error("row {row}: cannot parse date from {text:?}")]
    BadDate { row: usize, text: String },
    #[error("row {row}: dates are not strictly increasing")]
    NonMonotoneDates { row: usize },
    #[error("duplicate ticker {name:?}")]
    DuplicateTicker { name: String },
    #[error("need at least 2 price rows, found {rows}")]
    TooFewRows { rows: usize },
    #[error("need at least 2 asset columns, found {columns}")]
    TooFewColumns { columns: usize },
    #[error("time scale k={k} unusable: need 1 <= k <= {MAX_TIME_SCALE} and at least k+1 of {rows} price rows")]
    KTooLarge { k: usize, rows: usize },
    #[error("column {ticker:?} has zero variance")]
    ZeroVarianceColumn { ticker: String },
    #[error("invalid factor panel spec: {reason}")]
    InvalidFactorSpec { reason: String },
    #[error("price reconstruction needs a k=1 return panel, got k={k}")]
    NotUnitScale { k: usize },
}

impl From<io::Error> for PanelError {
    fn from(e: io::Error) -> Self {
        PanelError::Io(e.to_string())
    }
}

/// Dated matrix of strictly positive price levels, one column per asset.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel<T> {
    pub dates: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    /// Rows are dates, columns are assets.
    pub prices: Array2<T>,
}

impl<T: Real> PricePanel<T> {
    pub fn new(
        dates: Vec<NaiveDate>,
        tickers: Vec<String>,
        prices: Array2<T>,
    ) -> Result<Self, PanelError> {
        let rows = prices.nrows();
        let cols = prices.ncols();
        if rows < 2 {
            return Err(PanelError::TooFewRows { rows });
        }
        if cols < 2 {
            return Err(PanelError::TooFewColumns { columns: cols });
        }
        assert_eq!(dates.len(), rows, "date count must match price rows");
        assert_eq!(tickers.len(), cols, "ticker count must match price columns");
        for w in dates.windows(2) {
            if w[1] <= w[0] {
                let row = dates.iter().position(|d| *d == w[1]).unwrap_or(0) + 1;
                return Err(PanelError::NonMonotoneDates { row });
            }
        }
        for (i, a) in tickers.iter().enumerate() {
            if tickers[i + 1..].contains(a) {
                return Err(PanelError::DuplicateTicker { name: a.clone() });
            }
        }
        for r in 0..rows {
            for c in 0..cols {
                let v = prices[(r, c)];
                if !(v.is_finite() && v > T::zero()) {
                    return Err(PanelError::NonPositivePrice {
                        row: r + 1,
                        column: tickers[c].clone(),
                        text: format!("{v}"),
                    });
                }
            }
        }
        Ok(Self {
            dates,
            tickers,
            prices,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.prices.nrows()
    }

    pub fn n_assets(&self) -> usize {
        self.prices.ncols()
    }

    /// Copy of the rows [start, start + len).
    pub fn window(&self, start: usize, len: usize) -> PricePanel<T> {
        assert!(start + len <= self.n_obs(), "window out of range");
        let prices = Array2::from_shape_fn((len, self.n_assets()), |(r, c)| {
            self.prices[(start + r, c)]
        });
        PricePanel {
            dates: self.dates[start..start + len].to_vec(),
            tickers: self.tickers.clone(),
            prices,
        }
    }
}

/// Log-return matrix at time scale `k`, sampled at stride `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel<T> {
    pub k: usize,
    /// Price-row index of each retained observation time.
    pub obs_index: Vec<usize>,
    pub dates: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    /// Rows are observation times, columns are assets.
    pub returns: Array2<T>,
}

impl<T: Real> ReturnPanel<T> {
    pub fn n_obs(&self) -> usize {
        self.returns.nrows()
    }

    pub fn n_assets(&self) -> usize {
        self.returns.ncols()
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        self.returns.column(j).to_vec()
    }

    fn check_variance(&self) -> Result<(), PanelError> {
        if self.n_obs() < 2 {
            // A single observation cannot witness zero variance.
            return Ok(());
        }
        for j in 0..self.n_assets() {
            let col = self.returns.column(j);
            let first = col[0];
            if col.iter().all(|v| *v == first) {
                return Err(PanelError::ZeroVarianceColumn {
                    ticker: self.tickers[j].clone(),
                });
            }
        }
        Ok(())
    }
}

/// Parse a `date,<ticker>,...` CSV of prices. `#` lines are skipped.
pub fn load_price_panel<T: Real, R: Read>(mut reader: R) -> Result<PricePanel<T>, PanelError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;

    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));

    let (_, header) = lines.next().ok_or(PanelError::BadHeader {
        reason: "empty input".into(),
    })?;
    let mut fields = header.split(',');
    match fields.next() {
        Some("date") => {}
        other => {
            return Err(PanelError::BadHeader {
                reason: format!("first column must be \"date\", found {other:?}"),
            })
        }
    }
    let tickers: Vec<String> = fields.map(|f| f.trim().to_string()).collect();
    if tickers.len() < 2 {
        return Err(PanelError::TooFewColumns {
            columns: tickers.len(),
        });
    }
    for (i, a) in tickers.iter().enumerate() {
        if a.is_empty() {
            return Err(PanelError::BadHeader {
                reason: format!("ticker {} in header is empty", i + 1),
            });
        }
        if tickers[i + 1..].contains(a) {
            return Err(PanelError::DuplicateTicker { name: a.clone() });
        }
    }

    let n = tickers.len();
    let mut dates = Vec::new();
    let mut values: Vec<T> = Vec::new();
    for (row, (_, line)) in lines.enumerate() {
        let row = row + 1; // 1-based data row, excluding the header
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n + 1 {
            return Err(PanelError::RaggedRow {
                row,
                want: n + 1,
                got: cells.len(),
            });
        }
        let date_text = cells[0].trim();
        let date: NaiveDate = date_text.parse().map_err(|_| PanelError::BadDate {
            row,
            text: date_text.to_string(),
        })?;
        if let Some(prev) = dates.last() {
            if date <= *prev {
                return Err(PanelError::NonMonotoneDates { row });
            }
        }
        dates.push(date);
        for (c, cell) in cells[1..].iter().enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                return Err(PanelError::MissingCell {
                    row,
                    column: tickers[c].clone(),
                });
            }
            let v: T = cell.parse().map_err(|_| PanelError::BadNumber {
                row,
                column: tickers[c].clone(),
                text: cell.to_string(),
            })?;
            if !(v.is_finite() && v > T::zero()) {
                return Err(PanelError::NonPositivePrice {
                    row,
                    column: tickers[c].clone(),
                    text: cell.to_string(),
                });
            }
            values.push(v);
        }
    }

    let rows = dates.len();
    if rows < 2 {
        return Err(PanelError::TooFewRows { rows });
    }
    let prices = Array2::from_shape_vec((rows, n), values).expect("shape checked per row");
    PricePanel::new(dates, tickers, prices)
}

/// Serialize prices back to the input CSV schema.
pub fn write_price_csv<T: Real, W: Write>(panel: &PricePanel<T>, out: &mut W) -> io::Result<()> {
    write!(out, "date")?;
    for t in &panel.tickers {
        write!(out, ",{t}")?;
    }
    writeln!(out)?;
    for r in 0..panel.n_obs() {
        write!(out, "{}", panel.dates[r])?;
        for c in 0..panel.n_assets() {
            write!(out, ",{:.16e}", panel.prices[(r, c)])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Same schema with returns in place of prices, preceded by a `# k=<k>` line.
pub fn write_return_csv<T: Real, W: Write>(panel: &ReturnPanel<T>, out: &mut W) -> io::Result<()> {
    writeln!(out, "# k={}", panel.k)?;
    write!(out, "date")?;
    for t in &panel.tickers {
        write!(out, ",{t}")?;
    }
    writeln!(out)?;
    for r in 0..panel.n_obs() {
        write!(out, "{}", panel.dates[r])?;
        for c in 0..panel.n_assets() {
            write!(out, ",{:.16e}", panel.returns[(r, c)])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Non-overlapping log returns at stride `k`: observation times t = k, 2k, ...
/// (0-based row indices into the panel), return = ln P(t) - ln P(t-k).
pub fn to_returns<T: Real>(panel: &PricePanel<T>, k: usize) -> Result<ReturnPanel<T>, PanelError> {
    let rows = panel.n_obs();
    if k == 0 || k > MAX_TIME_SCALE || rows < k + 1 {
        return Err(PanelError::KTooLarge { k, rows });
    }
    let m = (rows - 1) / k;
    let n = panel.n_assets();
    let obs_index: Vec<usize> = (1..=m).map(|i| i * k).collect();
    let returns = Array2::from_shape_fn((m, n), |(r, c)| {
        let t = obs_index[r];
        panel.prices[(t, c)].ln() - panel.prices[(t - k, c)].ln()
    });
    let panel = ReturnPanel {
        k,
        dates: obs_index.iter().map(|&t| panel.dates[t]).collect(),
        obs_index,
        tickers: panel.tickers.clone(),
        returns,
    };
    panel.check_variance()?;
    Ok(panel)
}

/// Rebuild a price path from a k=1 return panel: P(0) = base,
/// P(i+1) = P(i) * exp(r_i). The synthetic generators feed this so the full
/// multi-scale pipeline can run on generated data.
pub fn price_panel_from_returns<T: Real>(
    panel: &ReturnPanel<T>,
    base: T,
) -> Result<PricePanel<T>, PanelError> {
    if panel.k != 1 {
        return Err(PanelError::NotUnitScale { k: panel.k });
    }
    let m = panel.n_obs();
    let n = panel.n_assets();
    let mut prices = Array2::from_elem((m + 1, n), base);
    for r in 0..m {
        for c in 0..n {
            let prev = prices[(r, c)];
            prices[(r + 1, c)] = prev * panel.returns[(r, c)].exp();
        }
    }
    let mut dates = Vec::with_capacity(m + 1);
    dates.push(panel.dates[0].pred_opt().expect("date has a predecessor"));
    dates.extend_from_slice(&panel.dates);
    PricePanel::new(dates, panel.tickers.clone(), prices)
}

/// Permute each column independently in time with a seeded permutation.
/// Shape, scale, and per-column value multisets are preserved.
pub fn shuffle_returns<T: Real>(panel: &ReturnPanel<T>, seed: u64) -> ReturnPanel<T> {
    let m = panel.n_obs();
    let n = panel.n_assets();
    let mut returns = Array2::from_elem((m, n), T::zero());
    for j in 0..n {
        let mut rng = SplitMix64::stream(seed, j as u64);
        let perm = permutation(&mut rng, m);
        for (i, &src) in perm.iter().enumerate() {
            returns[(i, j)] = panel.returns[(src, j)];
        }
    }
    ReturnPanel {
        k: panel.k,
        obs_index: panel.obs_index.clone(),
        dates: panel.dates.clone(),
        tickers: panel.tickers.clone(),
        returns,
    }
}

fn synth_tickers(n: usize) -> Vec<String> {
    (0..n).map(|j| format!("A{j:03}")).collect()
}

fn synth_dates(m: usize) -> Vec<NaiveDate> {
    let base = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
    (0..m)
        .map(|i| base + chrono::Duration::days(i as i64 + 1))
        .collect()
}

/// I.i.d. standard Gaussian return panel, recorded at k = 1.
pub fn gen_white_noise<T: Real>(n_assets: usize, n_obs: usize, seed: u64) -> ReturnPanel<T> {
    assert!(n_assets >= 2, "need at least two assets");
    assert!(n_obs >= 10, "need at least ten observations");
    let mut returns = Array2::from_elem((n_obs, n_assets), T::zero());
    for j in 0..n_assets {
        let mut gauss = Gaussian::new(SplitMix64::stream(seed, j as u64));
        for i in 0..n_obs {
            returns[(i, j)] = T::of(gauss.next());
        }
    }
    ReturnPanel {
        k: 1,
        obs_index: (1..=n_obs).collect(),
        dates: synth_dates(n_obs),
        tickers: synth_tickers(n_assets),
        returns,
    }
}

/// A loading-multiplier regime over observation rows [start, end).
#[derive(Debug, Clone, PartialEq)]
pub struct Regime {
    pub start: usize,
    pub end: usize,
    pub multiplier: f64,
}

/// Synthetic one-factor return panel.
///
/// Asset j at row t is `m(t) * beta_j * F(t - lag_j) + idio_sigma * eps_j(t)`
/// with F and eps standard Gaussian and m(t) the regime multiplier (1 outside
/// regimes). The factor is pre-extended by the largest lag so every column
/// has exactly `n_obs` aligned rows. `factor_ar` optionally makes F an AR(1)
/// process with unit marginal variance (0 keeps it i.i.d.), which lets high
/// correlation and information flow coexist the way a common market factor
/// induces both.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPanelSpec {
    pub n_assets: usize,
    pub n_obs: usize,
    pub loadings: Vec<f64>,
    pub response_lags: Vec<usize>,
    pub idio_sigma: f64,
    pub factor_ar: f64,
    pub regimes: Vec<Regime>,
    pub seed: u64,
}

impl FactorPanelSpec {
    /// Spec with unit loadings, zero lags, i.i.d. factor, and idio 0.5.
    pub fn new(n_assets: usize, n_obs: usize, seed: u64) -> Self {
        Self {
            n_assets,
            n_obs,
            loadings: vec![1.0; n_assets],
            response_lags: vec![0; n_assets],
            idio_sigma: 0.5,
            factor_ar: 0.0,
            regimes: Vec::new(),
            seed,
        }
    }

    /// Loadings ramp linearly from `lo` to `hi` across assets.
    pub fn with_loading_ramp(mut self, lo: f64, hi: f64) -> Self {
        let n = self.n_assets;
        self.loadings = (0..n)
            .map(|j| {
                if n == 1 {
                    lo
                } else {
                    lo + (hi - lo) * j as f64 / (n - 1) as f64
                }
            })
            .collect();
        self
    }

    /// Response lags cycle through `pattern` across assets.
    pub fn with_lag_cycle(mut self, pattern: &[usize]) -> Self {
        assert!(!pattern.is_empty());
        self.response_lags = (0..self.n_assets).map(|j| pattern[j % pattern.len()]).collect();
        self
    }

    pub fn with_idio(mut self, sigma: f64) -> Self {
        self.idio_sigma = sigma;
        self
    }

    pub fn with_factor_ar(mut self, phi: f64) -> Self {
        self.factor_ar = phi;
        self
    }

    pub fn with_regime(mut self, start: usize, end: usize, multiplier: f64) -> Self {
        self.regimes.push(Regime {
            start,
            end,
            multiplier,
        });
        self
    }

    fn validate(&self) -> Result<(), PanelError> {
        let fail = |reason: &str| {
            Err(PanelError::InvalidFactorSpec {
                reason: reason.to_string(),
            })
        };
        if self.n_assets < 2 {
            return fail("need at least two assets");
        }
        if self.n_obs < 10 {
            return fail("need at least ten observations");
        }
        if self.loadings.len() != self.n_assets || self.response_lags.len() != self.n_assets {
            return fail("loadings and response_lags must have one entry per asset");
        }
        if self.response_lags.iter().any(|&l| l > 1) {
            return fail("response lags must be 0 or 1");
        }
        if !(self.idio_sigma >= 0.0 && self.idio_sigma.is_finite()) {
            return fail("idio_sigma must be nonnegative");
        }
        if !(self.factor_ar.abs() < 1.0) {
            return fail("factor_ar must lie in (-1, 1)");
        }
        let mut sorted = self.regimes.clone();
        sorted.sort_by_key(|r| r.start);
        for r in &sorted {
            if r.start >= r.end || r.end > self.n_obs {
                return fail("regime interval must satisfy start < end <= n_obs");
            }
            if !(r.multiplier.is_finite() && r.multiplier > 0.0) {
                return fail("regime multiplier must be positive");
            }
        }
        for w in sorted.windows(2) {
            if w[1].start < w[0].end {
                return fail("regime intervals must not overlap");
            }
        }
        Ok(())
    }

    fn multiplier_at(&self, t: usize) -> f64 {
        for r in &self.regimes {
            if t >= r.start && t < r.end {
                return r.multiplier;
            }
        }
        1.0
    }
}

/// Generate the factor panel described by `spec`, recorded at k = 1.
pub fn gen_factor_panel<T: Real>(spec: &FactorPanelSpec) -> Result<ReturnPanel<T>, PanelError> {
    spec.validate()?;
    let max_lag = spec.response_lags.iter().copied().max().unwrap_or(0);
    let total = spec.n_obs + max_lag;

    let mut factor = Vec::with_capacity(total);
    let mut gauss = Gaussian::new(SplitMix64::stream(spec.seed, 0));
    let phi = spec.factor_ar;
    let innov_scale = (1.0 - phi * phi).sqrt();
    let mut prev = gauss.next();
    factor.push(prev);
    for _ in 1..total {
        prev = phi * prev + innov_scale * gauss.next();
        factor.push(prev);
    }

    let mut returns = Array2::from_elem((spec.n_obs, spec.n_assets), T::zero());
    for j in 0..spec.n_assets {
        let mut idio = Gaussian::new(SplitMix64::stream(spec.seed, j as u64 + 1));
        let beta = spec.loadings[j];
        let lag = spec.response_lags[j];
        for t in 0..spec.n_obs {
            let common = spec.multiplier_at(t) * beta * factor[t + max_lag - lag];
            returns[(t, j)] = T::of(common + spec.idio_sigma * idio.next());
        }
    }

    Ok(ReturnPanel {
        k: 1,
        obs_index: (1..=spec.n_obs).collect(),
        dates: synth_dates(spec.n_obs),
        tickers: synth_tickers(spec.n_assets),
        returns,
    })
}

/// Internal constructor that skips the variance check; the defactoring step
/// may produce (near-)degenerate columns that downstream guards must see.
pub(crate) fn return_panel_unchecked<T: Real>(
    template: &ReturnPanel<T>,
    returns: Array2<T>,
) -> ReturnPanel<T> {
    assert_eq!(returns.dim(), template.returns.dim());
    ReturnPanel {
        k: template.k,
        obs_index: template.obs_index.clone(),
        dates: template.dates.clone(),
        tickers: template.tickers.clone(),
        returns,
    }
}
