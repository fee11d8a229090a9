//! Post-hoc analysis of two station datasets: coincidence identification,
//! single- and two-particle averages, correlation, the CHSH combination and
//! its maximum, clock-shift search, window sweeps, and time-difference
//! histograms. Everything here is read-only over the datasets.

use crate::dataset::StationDataset;
use crate::{Error, Result};
use std::collections::HashMap;

/// Which coincidence criterion to apply to a candidate pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoincidenceRule {
    /// Compare discretized tags: `|ceil(t1/tau) - ceil((t2+delta)/tau)| < ceil(W/tau)`.
    /// This is the criterion used on real experiment data, so it is the default.
    #[default]
    Discretized,
    /// Compare raw tags: `|t1 - (t2 + delta)| <= W`.
    Continuous,
}

/// How records of the two stations are paired before the coincidence test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairingMode {
    /// Pair records with equal event index `n`. Requires equal-length
    /// datasets; this is the mode for simulated data, where both stations
    /// log every pair.
    #[default]
    ByIndex,
    /// Greedy one-to-one nearest-neighbor matching of time-tags within the
    /// window, for real-format data with unequal record counts. Station-1
    /// events are visited in time order and each takes the nearest unused
    /// station-2 event; double counts are thereby removed.
    ByTimeMatching,
}

/// Everything the coincidence analysis depends on besides the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    /// Time-tag resolution, > 0.
    pub tau: f64,
    /// Coincidence window, >= tau (may be `f64::INFINITY` to count every pair).
    pub window: f64,
    /// Relative time shift added to station-2 tags before discretization.
    pub delta: f64,
    pub pairing: PairingMode,
    pub rule: CoincidenceRule,
}

impl AnalysisConfig {
    pub fn new(tau: f64, window: f64) -> Result<Self> {
        let cfg = AnalysisConfig {
            tau,
            window,
            delta: 0.0,
            pairing: PairingMode::default(),
            rule: CoincidenceRule::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_pairing(mut self, pairing: PairingMode) -> Self {
        self.pairing = pairing;
        self
    }

    pub fn with_rule(mut self, rule: CoincidenceRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::invalid(format!(
                "time-tag resolution tau must be positive, got {}",
                self.tau
            )));
        }
        if !(self.window >= self.tau) {
            return Err(Error::invalid(format!(
                "coincidence window {} must be at least tau = {}",
                self.window, self.tau
            )));
        }
        if !self.delta.is_finite() {
            return Err(Error::invalid("delta must be finite"));
        }
        Ok(())
    }

    fn is_coincident(&self, t1: f64, t2_shifted: f64) -> bool {
        if self.window.is_infinite() {
            return true;
        }
        match self.rule {
            CoincidenceRule::Discretized => {
                let k = (self.window / self.tau).ceil() as i64;
                (bin_index(t1, self.tau) - bin_index(t2_shifted, self.tau)).abs() < k
            }
            CoincidenceRule::Continuous => (t1 - t2_shifted).abs() <= self.window,
        }
    }
}

/// Discretized time-tag `k = ceil(t / tau)`, satisfying `k - 1 < t/tau <= k`.
pub fn discretize(t: f64, tau: f64) -> Result<i64> {
    if !(tau > 0.0) {
        return Err(Error::invalid(format!("tau must be positive, got {tau}")));
    }
    Ok(bin_index(t, tau))
}

#[inline]
fn bin_index(t: f64, tau: f64) -> i64 {
    (t / tau).ceil() as i64
}

/// Coincidence counts indexed by both outcomes and both setting indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoincidenceTable {
    settings1: u32,
    settings2: u32,
    /// Per setting pair: counts for (x, y) = (+,+), (+,-), (-,+), (-,-).
    counts: Vec<[u64; 4]>,
    pairs_considered: u64,
}

fn xy_slot(x: i8, y: i8) -> usize {
    let row = usize::from(x < 0);
    let col = usize::from(y < 0);
    row * 2 + col
}

impl CoincidenceTable {
    fn new(settings1: u32, settings2: u32) -> Self {
        CoincidenceTable {
            settings1,
            settings2,
            counts: vec![[0; 4]; (settings1 * settings2) as usize],
            pairs_considered: 0,
        }
    }

    fn slot(&self, m1: u32, m2: u32) -> usize {
        ((m1 - 1) * self.settings2 + (m2 - 1)) as usize
    }

    fn add(&mut self, m1: u32, m2: u32, x: i8, y: i8) {
        let s = self.slot(m1, m2);
        self.counts[s][xy_slot(x, y)] += 1;
    }

    pub fn settings1(&self) -> u32 {
        self.settings1
    }

    pub fn settings2(&self) -> u32 {
        self.settings2
    }

    /// Count for outcome pair `(x, y)` at settings `(m1, m2)` (1-based).
    pub fn count(&self, x: i8, y: i8, m1: u32, m2: u32) -> u64 {
        self.counts[self.slot(m1, m2)][xy_slot(x, y)]
    }

    /// The four counts `[C++, C+-, C-+, C--]` for one setting pair.
    pub fn pair_counts(&self, m1: u32, m2: u32) -> [u64; 4] {
        self.counts[self.slot(m1, m2)]
    }

    pub fn pair_total(&self, m1: u32, m2: u32) -> u64 {
        self.pair_counts(m1, m2).iter().sum()
    }

    /// Total coincidences over all settings and outcomes.
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Number of candidate pairs examined (N in by-index mode).
    pub fn pairs_considered(&self) -> u64 {
        self.pairs_considered
    }

    /// Per-pair statistics; `None` when the setting pair has no coincidences.
    pub fn stats(&self, m1: u32, m2: u32) -> Option<SettingPairStats> {
        let [pp, pm, mp, mm] = self.pair_counts(m1, m2);
        let tot = pp + pm + mp + mm;
        if tot == 0 {
            return None;
        }
        let tot_f = tot as f64;
        let e1 = (pp as f64 + pm as f64 - mp as f64 - mm as f64) / tot_f;
        let e2 = (pp as f64 - pm as f64 + mp as f64 - mm as f64) / tot_f;
        let e = (pp as f64 + mm as f64 - pm as f64 - mp as f64) / tot_f;
        // For dichotomic outcomes x^2 = y^2 = 1, so the variances reduce to
        // 1 - E1^2 and 1 - E2^2.
        let var = (1.0 - e1 * e1) * (1.0 - e2 * e2);
        let rho = if var > 0.0 {
            Some((e - e1 * e2) / var.sqrt())
        } else {
            None
        };
        Some(SettingPairStats {
            e1,
            e2,
            e,
            rho,
            coincidences: tot,
        })
    }

    /// Two-particle average per setting pair, `None` where undefined.
    pub fn e_matrix(&self) -> Vec<Vec<Option<f64>>> {
        (1..=self.settings1)
            .map(|m1| {
                (1..=self.settings2)
                    .map(|m2| self.stats(m1, m2).map(|s| s.e))
                    .collect()
            })
            .collect()
    }
}

/// Single-particle averages, two-particle average, and correlation for one
/// setting pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettingPairStats {
    pub e1: f64,
    pub e2: f64,
    pub e: f64,
    /// Undefined when either marginal is +-1 (zero variance).
    pub rho: Option<f64>,
    pub coincidences: u64,
}

fn sorted_by_n(ds: &StationDataset) -> Result<Vec<usize>> {
    let mut order: Vec<usize> = (0..ds.records.len()).collect();
    if !ds.records.windows(2).all(|w| w[0].n < w[1].n) {
        order.sort_by_key(|&i| ds.records[i].n);
        if order
            .windows(2)
            .any(|w| ds.records[w[0]].n == ds.records[w[1]].n)
        {
            return Err(Error::invalid("duplicate event index in dataset"));
        }
    }
    Ok(order)
}

fn check_settings(ds: &StationDataset, station: &str) -> Result<()> {
    let m = ds.settings();
    if ds.records.iter().any(|r| r.m == 0 || r.m > m) {
        return Err(Error::invalid(format!(
            "{station} has a record with setting index outside 1..={m}"
        )));
    }
    Ok(())
}

/// Greedy one-to-one nearest-neighbor matching. Returns record index pairs.
fn greedy_match(
    d1: &StationDataset,
    d2: &StationDataset,
    cfg: &AnalysisConfig,
) -> Vec<(usize, usize)> {
    let mut order1: Vec<usize> = (0..d1.records.len()).collect();
    order1.sort_by(|&a, &b| d1.records[a].t.total_cmp(&d1.records[b].t));
    let mut shifted: Vec<(f64, usize)> = d2
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.t + cfg.delta, i))
        .collect();
    shifted.sort_by(|a, b| a.0.total_cmp(&b.0));

    let reach = if cfg.window.is_infinite() {
        f64::INFINITY
    } else {
        // The discretized criterion can accept pairs up to W + tau apart.
        cfg.window + cfg.tau
    };
    let mut used = vec![false; shifted.len()];
    let mut lo = 0usize;
    let mut matches = Vec::new();
    for &i1 in &order1 {
        let t1 = d1.records[i1].t;
        // Entries before the reach of this (and every later) t1, and entries
        // already consumed, never match again.
        while lo < shifted.len() && (used[lo] || shifted[lo].0 < t1 - reach) {
            lo += 1;
        }
        let mut best: Option<(f64, usize)> = None;
        let mut j = lo;
        while j < shifted.len() && shifted[j].0 <= t1 + reach {
            if !used[j] && cfg.is_coincident(t1, shifted[j].0) {
                let dist = (t1 - shifted[j].0).abs();
                let better = match best {
                    None => true,
                    Some((bd, _)) => dist < bd,
                };
                if better {
                    best = Some((dist, j));
                }
            }
            j += 1;
        }
        if let Some((_, j)) = best {
            used[j] = true;
            matches.push((i1, shifted[j].1));
        }
    }
    matches
}

/// Identify coincidences and tally them per outcome pair and setting pair.
pub fn count_coincidences(
    d1: &StationDataset,
    d2: &StationDataset,
    cfg: &AnalysisConfig,
) -> Result<CoincidenceTable> {
    cfg.validate()?;
    check_settings(d1, "station 1")?;
    check_settings(d2, "station 2")?;
    let mut table = CoincidenceTable::new(d1.settings(), d2.settings());
    match cfg.pairing {
        PairingMode::ByIndex => {
            if d1.records.len() != d2.records.len() {
                return Err(Error::invalid(format!(
                    "by-index pairing needs equal-length datasets, got {} and {}",
                    d1.records.len(),
                    d2.records.len()
                )));
            }
            let o1 = sorted_by_n(d1)?;
            let o2 = sorted_by_n(d2)?;
            for (&i1, &i2) in o1.iter().zip(&o2) {
                let r1 = &d1.records[i1];
                let r2 = &d2.records[i2];
                if r1.n != r2.n {
                    return Err(Error::invalid(format!(
                        "event index mismatch: {} vs {}",
                        r1.n, r2.n
                    )));
                }
                table.pairs_considered += 1;
                if cfg.is_coincident(r1.t, r2.t + cfg.delta) {
                    table.add(r1.m, r2.m, r1.x, r2.x);
                }
            }
        }
        PairingMode::ByTimeMatching => {
            for (i1, i2) in greedy_match(d1, d2, cfg) {
                let r1 = &d1.records[i1];
                let r2 = &d2.records[i2];
                table.pairs_considered += 1;
                table.add(r1.m, r2.m, r1.x, r2.x);
            }
        }
    }
    Ok(table)
}

/// The CHSH maximum over ordered setting quadruples.
#[derive(Debug, Clone, PartialEq)]
pub struct ChshResult {
    /// `max |S|` over all quadruples with defined correlations. Both signs
    /// of the combination occur in the data depending on which quadruple is
    /// taken, so the magnitude is the meaningful maximum.
    pub smax: f64,
    /// The signed value of S at the maximizing quadruple.
    pub s_value: f64,
    /// 0-based indices `(a, b)` into station-1 settings and `(c, d)` into
    /// station-2 settings of the maximizing quadruple.
    pub quadruple: (usize, usize, usize, usize),
    /// Number of quadruples with all four correlations defined.
    pub evaluated: u64,
}

/// Exhaustive search of `S = E(a,c) - E(a,d) + E(b,c) + E(b,d)` over all
/// ordered quadruples; quadruples touching an undefined correlation are
/// skipped. Errors if every quadruple is skipped.
pub fn chsh(e: &[Vec<Option<f64>>]) -> Result<ChshResult> {
    let m1 = e.len();
    let m2 = e.first().map_or(0, Vec::len);
    let mut best: Option<ChshResult> = None;
    let mut evaluated = 0u64;
    for a in 0..m1 {
        for b in 0..m1 {
            for c in 0..m2 {
                for d in 0..m2 {
                    let (Some(eac), Some(ead), Some(ebc), Some(ebd)) =
                        (e[a][c], e[a][d], e[b][c], e[b][d])
                    else {
                        continue;
                    };
                    evaluated += 1;
                    let s = eac - ead + ebc + ebd;
                    if best.as_ref().is_none_or(|r| s.abs() > r.smax) {
                        best = Some(ChshResult {
                            smax: s.abs(),
                            s_value: s,
                            quadruple: (a, b, c, d),
                            evaluated: 0,
                        });
                    }
                }
            }
        }
    }
    match best {
        Some(mut r) => {
            r.evaluated = evaluated;
            Ok(r)
        }
        None => Err(Error::NoValidQuadruple),
    }
}

/// Estimate the relative clock shift between the stations: histogram the
/// time differences `t1 - t2` at the given resolution and return the center
/// of the fullest bin. The returned value is the shift to pass as
/// [`AnalysisConfig::delta`] (added to station-2 tags) to maximize
/// coincidences; for station-2 tags displaced by `+D` it returns `-D`.
pub fn find_delta(
    d1: &StationDataset,
    d2: &StationDataset,
    resolution: f64,
) -> Result<f64> {
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(Error::invalid(format!(
            "histogram resolution must be positive, got {resolution}"
        )));
    }
    if d1.records.is_empty() || d2.records.is_empty() {
        return Err(Error::invalid("find_delta needs nonempty datasets"));
    }
    let index_paired = d1.records.len() == d2.records.len() && {
        let o1 = sorted_by_n(d1)?;
        let o2 = sorted_by_n(d2)?;
        o1.iter()
            .zip(&o2)
            .all(|(&i1, &i2)| d1.records[i1].n == d2.records[i2].n)
    };
    let mut bins: HashMap<i64, u64> = HashMap::new();
    if index_paired {
        let o1 = sorted_by_n(d1)?;
        let o2 = sorted_by_n(d2)?;
        for (&i1, &i2) in o1.iter().zip(&o2) {
            let dt = d1.records[i1].t - d2.records[i2].t;
            *bins.entry((dt / resolution).round() as i64).or_insert(0) += 1;
        }
    } else {
        // Unmatched logs (real-format data): histogram nearby cross pairs.
        let mut t1s: Vec<f64> = d1.records.iter().map(|r| r.t).collect();
        let mut t2s: Vec<f64> = d2.records.iter().map(|r| r.t).collect();
        t1s.sort_by(f64::total_cmp);
        t2s.sort_by(f64::total_cmp);
        let reach = resolution * 200.0;
        let mut lo = 0usize;
        for &t1 in &t1s {
            while lo < t2s.len() && t2s[lo] < t1 - reach {
                lo += 1;
            }
            let mut j = lo;
            while j < t2s.len() && t2s[j] <= t1 + reach {
                let dt = t1 - t2s[j];
                *bins.entry((dt / resolution).round() as i64).or_insert(0) += 1;
                j += 1;
            }
        }
        if bins.is_empty() {
            return Err(Error::invalid(
                "no time differences within the search range",
            ));
        }
    }
    // Deterministic argmax: highest count, ties broken toward zero shift.
    let (&bin, _) = bins
        .iter()
        .max_by(|(ka, va), (kb, vb)| {
            va.cmp(vb)
                .then(kb.abs().cmp(&ka.abs()))
                .then(kb.cmp(ka))
        })
        .expect("bins nonempty");
    Ok(bin as f64 * resolution)
}

/// One point of an `Smax(W)` sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmaxPoint {
    pub window: f64,
    pub smax: f64,
    pub coincidences: u64,
}

/// Run the full pipeline once per window. `windows` must be sorted
/// ascending and each at least `cfg.tau`.
pub fn smax_vs_window(
    d1: &StationDataset,
    d2: &StationDataset,
    windows: &[f64],
    cfg: &AnalysisConfig,
) -> Result<Vec<SmaxPoint>> {
    if windows.is_empty() {
        return Err(Error::invalid("window list must be nonempty"));
    }
    if windows.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("window list must be sorted ascending"));
    }
    let mut out = Vec::with_capacity(windows.len());
    for &w in windows {
        let mut point_cfg = *cfg;
        point_cfg.window = w;
        let table = count_coincidences(d1, d2, &point_cfg)?;
        let result = chsh(&table.e_matrix())?;
        out.push(SmaxPoint {
            window: w,
            smax: result.smax,
            coincidences: table.total(),
        });
    }
    Ok(out)
}

/// Filters and binning for a time-difference histogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramSpec {
    /// Keep only pairs with these outcomes, e.g. `Some((1, 1))`.
    pub outcomes: Option<(i8, i8)>,
    /// Keep only pairs with these 1-based setting indices.
    pub settings: Option<(u32, u32)>,
    /// Bin width of the histogram, > 0.
    pub bin_width: f64,
    /// Only pairs with `|t1 - (t2 + delta)| <= match_window` enter; use
    /// `f64::INFINITY` for no restriction (by-index pairing only).
    pub match_window: f64,
    /// Shift added to station-2 tags.
    pub delta: f64,
    /// By-index for simulated logs; time matching for real-format data
    /// with unequal record counts (requires a finite match window).
    pub pairing: PairingMode,
}

impl HistogramSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.bin_width > 0.0) || !self.bin_width.is_finite() {
            return Err(Error::invalid("histogram bin width must be positive"));
        }
        if !(self.match_window >= 0.0) {
            return Err(Error::invalid("match window must be non-negative"));
        }
        if self.pairing == PairingMode::ByTimeMatching && !self.match_window.is_finite() {
            return Err(Error::invalid(
                "time matching needs a finite match window",
            ));
        }
        if let Some((x, y)) = self.outcomes {
            if x.abs() != 1 || y.abs() != 1 {
                return Err(Error::invalid("outcome filter values must be +1 or -1"));
            }
        }
        Ok(())
    }
}

/// Histogram of time-tag differences `t1 - (t2 + delta)` over matched pairs.
/// Bins are centered on integer multiples of the bin width; counts are also
/// reported as fractions of the total. A histogram with `total() == 0` is
/// the empty marker for filters that match nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeDiffHistogram {
    bin_width: f64,
    total: u64,
    bins: Vec<(i64, u64)>,
}

impl TimeDiffHistogram {
    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Sorted `(bin center, count, fraction)` triples.
    pub fn bins(&self) -> impl Iterator<Item = (f64, u64, f64)> + '_ {
        let total = self.total.max(1) as f64;
        self.bins
            .iter()
            .map(move |&(k, c)| (k as f64 * self.bin_width, c, c as f64 / total))
    }

    /// Center of the fullest bin; ties break toward zero. `None` if empty.
    pub fn peak(&self) -> Option<f64> {
        self.bins
            .iter()
            .max_by(|(ka, va), (kb, vb)| {
                va.cmp(vb)
                    .then(kb.abs().cmp(&ka.abs()))
                    .then(kb.cmp(ka))
            })
            .map(|&(k, _)| k as f64 * self.bin_width)
    }
}

/// Build the time-difference histogram over matched pairs passing the
/// filters.
pub fn coincidence_time_histogram(
    d1: &StationDataset,
    d2: &StationDataset,
    spec: &HistogramSpec,
) -> Result<TimeDiffHistogram> {
    spec.validate()?;
    let pairs: Vec<(usize, usize)> = match spec.pairing {
        PairingMode::ByIndex => {
            if d1.records.len() != d2.records.len() {
                return Err(Error::invalid(
                    "by-index histogram needs equal-length datasets",
                ));
            }
            let o1 = sorted_by_n(d1)?;
            let o2 = sorted_by_n(d2)?;
            o1.into_iter().zip(o2).collect()
        }
        PairingMode::ByTimeMatching => {
            let cfg = AnalysisConfig {
                tau: spec.match_window,
                window: spec.match_window,
                delta: spec.delta,
                pairing: PairingMode::ByTimeMatching,
                rule: CoincidenceRule::Continuous,
            };
            greedy_match(d1, d2, &cfg)
        }
    };
    let mut bins: HashMap<i64, u64> = HashMap::new();
    let mut total = 0u64;
    for (i1, i2) in pairs {
        let r1 = &d1.records[i1];
        let r2 = &d2.records[i2];
        if let Some((x, y)) = spec.outcomes {
            if r1.x != x || r2.x != y {
                continue;
            }
        }
        if let Some((m1, m2)) = spec.settings {
            if r1.m != m1 || r2.m != m2 {
                continue;
            }
        }
        let dt = r1.t - (r2.t + spec.delta);
        if dt.abs() > spec.match_window {
            continue;
        }
        *bins.entry((dt / spec.bin_width).round() as i64).or_insert(0) += 1;
        total += 1;
    }
    let mut bins: Vec<(i64, u64)> = bins.into_iter().collect();
    bins.sort_unstable();
    Ok(TimeDiffHistogram {
        bin_width: spec.bin_width,
        total,
        bins,
    })
}

/// Mean outcome of a whole station log, one number per dataset.
pub fn station_mean_outcome(ds: &StationDataset) -> f64 {
    if ds.records.is_empty() {
        return 0.0;
    }
    ds.records.iter().map(|r| f64::from(r.x)).sum::<f64>() / ds.records.len() as f64
}
