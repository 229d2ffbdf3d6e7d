//! Presence records to aligned, normalised snapshot pairs.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use chrono::{DateTime, TimeDelta, Utc};
use thiserror::Error;

use crate::matrix::DenseMatrix;
use crate::polytope::{FlowMatrix, Marginals};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: negative count {value}")]
    NegativeCount { line: usize, value: i64 },
    #[error("unknown zone {0:?}")]
    UnknownZone(String),
    #[error("bucket length must be positive")]
    InvalidBucket,
    #[error("snapshot at {0} has no events")]
    ZeroTotal(DateTime<Utc>),
    #[error("snapshot has {found} zones, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("need at least two snapshots, have {0}")]
    TooFewSnapshots(usize),
    #[error("no flows to average")]
    NoFlows,
    #[error("target total must be positive")]
    InvalidTarget,
    #[error(transparent)]
    Polytope(#[from] crate::polytope::PolytopeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Ordered zone ids with reverse lookup. The order is the matrix order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZoneIndex {
    ids: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl ZoneIndex {
    /// Panics on duplicate ids.
    pub fn new(ids: Vec<String>) -> Self {
        let lookup: HashMap<_, _> = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        assert_eq!(lookup.len(), ids.len(), "zone ids must be unique");
        Self { ids, lookup }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.lookup.get(id).copied()
    }
}

impl<T: num_traits::Float> From<&crate::geometry::ZoneSet<T>> for ZoneIndex {
    fn from(zs: &crate::geometry::ZoneSet<T>) -> Self {
        Self::new(zs.ids())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PresenceRecord {
    pub zone_id: String,
    pub interval_end: DateTime<Utc>,
    pub event_count: u64,
}

/// A well-formed line naming a zone outside the index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedRecord {
    pub line: usize,
    pub zone_id: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedPresence {
    pub records: Vec<PresenceRecord>,
    pub rejects: Vec<RejectedRecord>,
}

/// Parses `zone_id,iso8601_interval_end,count` lines. An optional header
/// line starting with `zone_id` and blank lines are skipped.
pub fn parse_presence<R: BufRead>(input: R, zones: &ZoneIndex) -> Result<ParsedPresence, IngestError> {
    let mut out = ParsedPresence::default();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if out.records.is_empty() && out.rejects.is_empty() && fields[0] == "zone_id" {
            continue;
        }
        let malformed = |message: String| IngestError::Malformed { line: line_no, message };
        if fields.len() != 3 {
            return Err(malformed(format!("expected 3 fields, found {}", fields.len())));
        }
        let interval_end = DateTime::parse_from_rfc3339(fields[1])
            .map_err(|e| malformed(format!("bad timestamp {:?}: {e}", fields[1])))?
            .with_timezone(&Utc);
        let count: i64 = fields[2]
            .parse()
            .map_err(|_| malformed(format!("bad count {:?}", fields[2])))?;
        let event_count = u64::try_from(count).map_err(|_| IngestError::NegativeCount {
            line: line_no,
            value: count,
        })?;
        if zones.get(fields[0]).is_none() {
            out.rejects.push(RejectedRecord {
                line: line_no,
                zone_id: fields[0].to_string(),
            });
            continue;
        }
        out.records.push(PresenceRecord {
            zone_id: fields[0].to_string(),
            interval_end,
            event_count,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PresenceSnapshot {
    pub interval_end: DateTime<Utc>,
    /// Counts in zone-index order.
    pub counts: Vec<u64>,
}

impl PresenceSnapshot {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Equally spaced snapshots in time order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotSeries {
    pub snapshots: Vec<PresenceSnapshot>,
    pub spacing: TimeDelta,
    /// Indices of snapshots that had no records and were filled with zeros.
    pub gaps: Vec<usize>,
}

impl SnapshotSeries {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.snapshots.iter().map(PresenceSnapshot::total).sum()
    }
}

/// Sums counts per zone into buckets of length `bucket`, aligned to the
/// Unix epoch; a record belongs to the bucket whose end is its
/// `interval_end` rounded up to the grid. Every bucket between the first
/// and last is present, empty ones as zeros listed in `gaps`.
pub fn aggregate(records: &[PresenceRecord], zones: &ZoneIndex, bucket: TimeDelta) -> Result<SnapshotSeries, IngestError> {
    let width = bucket.num_seconds();
    if width <= 0 {
        return Err(IngestError::InvalidBucket);
    }
    let mut buckets: BTreeMap<i64, Vec<u64>> = BTreeMap::new();
    for r in records {
        let zone = zones
            .get(&r.zone_id)
            .ok_or_else(|| IngestError::UnknownZone(r.zone_id.clone()))?;
        let end = ceil_to(r.interval_end, width);
        buckets.entry(end).or_insert_with(|| vec![0; zones.len()])[zone] += r.event_count;
    }

    let (Some(&first), Some(&last)) = (buckets.keys().next(), buckets.keys().next_back()) else {
        return Ok(SnapshotSeries {
            snapshots: Vec::new(),
            spacing: bucket,
            gaps: Vec::new(),
        });
    };
    let mut snapshots = Vec::new();
    let mut gaps = Vec::new();
    let mut t = first;
    while t <= last {
        let counts = buckets.remove(&t).unwrap_or_else(|| {
            gaps.push(snapshots.len());
            vec![0; zones.len()]
        });
        snapshots.push(PresenceSnapshot {
            interval_end: DateTime::from_timestamp(t, 0).expect("bucket end within chrono range"),
            counts,
        });
        t += width;
    }
    Ok(SnapshotSeries {
        snapshots,
        spacing: bucket,
        gaps,
    })
}

fn ceil_to(t: DateTime<Utc>, width: i64) -> i64 {
    let secs = t.timestamp() + i64::from(t.timestamp_subsec_nanos() > 0);
    secs.div_euclid(width) * width + if secs.rem_euclid(width) > 0 { width } else { 0 }
}

/// Scales integer counts to sum exactly to `target`: floor of the exact
/// quotient, then one extra unit to each of the largest remainders (ties to
/// the lowest index). Every entry moves by less than 1 from its exact value.
pub fn largest_remainder(counts: &[u64], target: u64) -> Option<Vec<u64>> {
    let total: u128 = counts.iter().map(|&c| c as u128).sum();
    if total == 0 {
        return None;
    }
    let target = target as u128;
    let mut out = Vec::with_capacity(counts.len());
    let mut remainders = Vec::with_capacity(counts.len());
    for (i, &c) in counts.iter().enumerate() {
        let scaled = c as u128 * target;
        out.push((scaled / total) as u64);
        remainders.push((scaled % total, i));
    }
    let assigned: u128 = out.iter().map(|&v| v as u128).sum();
    let shortfall = (target - assigned) as usize;
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in remainders.iter().take(shortfall) {
        out[i] += 1;
    }
    Some(out)
}

/// [`largest_remainder`] for nonnegative real weights.
pub fn largest_remainder_real(weights: &[f64], target: u64) -> Option<Vec<u64>> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return None;
    }
    let scaled: Vec<f64> = weights.iter().map(|&w| w / total * target as f64).collect();
    let mut out: Vec<u64> = scaled.iter().map(|&s| s.floor() as u64).collect();
    let assigned: u64 = out.iter().sum();
    if assigned > target {
        // floating error in the quotient; shave from the largest entries
        let mut excess = assigned - target;
        let mut order: Vec<usize> = (0..out.len()).collect();
        order.sort_by(|&a, &b| out[b].cmp(&out[a]).then(a.cmp(&b)));
        for i in order.into_iter().cycle() {
            if excess == 0 {
                break;
            }
            if out[i] > 0 {
                out[i] -= 1;
                excess -= 1;
            }
        }
        return Some(out);
    }
    let mut order: Vec<(f64, usize)> = scaled.iter().enumerate().map(|(i, &s)| (s - s.floor(), i)).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let shortfall = (target - assigned) as usize;
    for k in 0..shortfall {
        out[order[k % order.len()].1] += 1;
    }
    Some(out)
}

/// Scales both snapshots to `target_total` users with
/// [`largest_remainder`] and returns them as marginals.
pub fn normalize_pair(e1: &PresenceSnapshot, e2: &PresenceSnapshot, target_total: u64) -> Result<Marginals, IngestError> {
    if target_total == 0 {
        return Err(IngestError::InvalidTarget);
    }
    if e1.counts.len() != e2.counts.len() {
        return Err(IngestError::DimensionMismatch {
            expected: e1.counts.len(),
            found: e2.counts.len(),
        });
    }
    let gamma = largest_remainder(&e1.counts, target_total).ok_or(IngestError::ZeroTotal(e1.interval_end))?;
    let eta = largest_remainder(&e2.counts, target_total).ok_or(IngestError::ZeroTotal(e2.interval_end))?;
    Ok(Marginals::new(gamma, eta)?)
}

/// Two consecutive snapshots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotPair {
    pub from: PresenceSnapshot,
    pub to: PresenceSnapshot,
}

pub fn pair_stream(series: &SnapshotSeries) -> Result<Vec<SnapshotPair>, IngestError> {
    if series.len() < 2 {
        return Err(IngestError::TooFewSnapshots(series.len()));
    }
    Ok(series
        .snapshots
        .windows(2)
        .map(|w| SnapshotPair {
            from: w[0].clone(),
            to: w[1].clone(),
        })
        .collect())
}

/// Elementwise mean of integral flows.
pub fn average_flows<T: Scalar>(flows: &[FlowMatrix]) -> Result<DenseMatrix<T>, IngestError> {
    let first = flows.first().ok_or(IngestError::NoFlows)?;
    let (rows, cols) = (first.n_rows(), first.n_cols());
    let mut sums = vec![0u128; rows * cols];
    for f in flows {
        if f.n_rows() != rows || f.n_cols() != cols {
            return Err(IngestError::DimensionMismatch {
                expected: rows,
                found: f.n_rows(),
            });
        }
        for (i, j, v) in f.iter() {
            sums[i * cols + j] += v as u128;
        }
    }
    let count = T::from_count(flows.len() as u64);
    let data = sums
        .into_iter()
        .map(|s| T::from_u128(s).expect("flow sum representable") / count)
        .collect();
    Ok(DenseMatrix::from_vec(rows, cols, data).expect("shape matches"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn zones() -> ZoneIndex {
        ZoneIndex::new(vec!["A".into(), "B".into()])
    }

    fn at(h: u32, m: u32) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2017, 3, 6, h, m, 0).unwrap()
    }

    fn rec(zone: &str, t: DateTime<Utc>, n: u64) -> PresenceRecord {
        PresenceRecord {
            zone_id: zone.into(),
            interval_end: t,
            event_count: n,
        }
    }

    #[test]
    fn parses_a_record() {
        let p = parse_presence("A,2017-03-06T08:15:00Z,42\n".as_bytes(), &zones()).unwrap();
        assert_eq!(p.records, vec![rec("A", at(8, 15), 42)]);
        assert!(p.rejects.is_empty());
    }

    #[test]
    fn header_blank_lines_and_unknown_zones() {
        let text = "zone_id,interval_end,count\n\nC,2017-03-06T08:15:00Z,1\nB,2017-03-06T08:15:00+01:00,2\n";
        let p = parse_presence(text.as_bytes(), &zones()).unwrap();
        assert_eq!(p.rejects, vec![RejectedRecord { line: 3, zone_id: "C".into() }]);
        assert_eq!(p.records, vec![rec("B", at(7, 15), 2)]);
        assert_eq!(parse_presence("".as_bytes(), &zones()).unwrap(), ParsedPresence::default());
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = parse_presence("A,2017-03-06T08:15:00Z,1\nA,yesterday,3\n".as_bytes(), &zones()).unwrap_err();
        assert!(matches!(err, IngestError::Malformed { line: 2, .. }));
        let err = parse_presence("A,2017-03-06T08:15:00Z,-3\n".as_bytes(), &zones()).unwrap_err();
        assert!(matches!(err, IngestError::NegativeCount { line: 1, value: -3 }));
        let err = parse_presence("A,2017-03-06T08:15:00Z\n".as_bytes(), &zones()).unwrap_err();
        assert!(matches!(err, IngestError::Malformed { line: 1, .. }));
    }

    #[test]
    fn same_bucket_counts_add_up() {
        let recs = [rec("A", at(8, 3), 3), rec("A", at(8, 14), 4)];
        let s = aggregate(&recs, &zones(), TimeDelta::minutes(15)).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.snapshots[0].counts, vec![7, 0]);
        assert_eq!(s.snapshots[0].interval_end, at(8, 15));
    }

    #[test]
    fn ninety_minute_window_gives_six_buckets() {
        let recs: Vec<_> = (1..=18).map(|k| rec("B", at(8, 0) + TimeDelta::minutes(5 * k), 1)).collect();
        let s = aggregate(&recs, &zones(), TimeDelta::minutes(15)).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s.snapshots[0].interval_end, at(8, 15));
        assert_eq!(s.snapshots[5].interval_end, at(9, 30));
        assert_eq!(s.total(), 18);
        assert!(s.gaps.is_empty());
    }

    #[test]
    fn gaps_are_zero_filled_and_flagged() {
        let recs = [rec("A", at(8, 15), 1), rec("B", at(9, 0), 2)];
        let s = aggregate(&recs, &zones(), TimeDelta::minutes(15)).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.gaps, vec![1, 2]);
        assert_eq!(s.snapshots[1].counts, vec![0, 0]);
        assert!(aggregate(&[], &zones(), TimeDelta::minutes(15)).unwrap().is_empty());
        assert!(aggregate(&recs, &zones(), TimeDelta::zero()).is_err());
    }

    #[test]
    fn largest_remainder_cases() {
        assert_eq!(largest_remainder(&[1, 1, 2], 8), Some(vec![2, 2, 4]));
        assert_eq!(largest_remainder(&[1, 1, 1], 10), Some(vec![4, 3, 3]));
        assert_eq!(largest_remainder(&[5, 0, 5], 10), Some(vec![5, 0, 5]));
        assert_eq!(largest_remainder(&[0, 0], 10), None);
        assert_eq!(largest_remainder_real(&[1.0, 1.0, 1.0], 10), Some(vec![4, 3, 3]));
    }

    #[test]
    fn normalize_pair_hits_the_target() {
        let s = |c: Vec<u64>| PresenceSnapshot {
            interval_end: at(8, 15),
            counts: c,
        };
        let m = normalize_pair(&s(vec![3, 1]), &s(vec![2, 2]), 4).unwrap();
        assert_eq!((m.gamma(), m.eta()), (&[3, 1][..], &[2, 2][..]));
        let m = normalize_pair(&s(vec![1, 1, 1]), &s(vec![0, 7, 0]), 10).unwrap();
        assert_eq!(m.gamma(), &[4, 3, 3]);
        assert_eq!(m.eta(), &[0, 10, 0]);
        assert!(matches!(
            normalize_pair(&s(vec![0, 0]), &s(vec![1, 1]), 10),
            Err(IngestError::ZeroTotal(_))
        ));
    }

    #[test]
    fn pairs() {
        let snap = |m| PresenceSnapshot {
            interval_end: at(8, m),
            counts: vec![1, 1],
        };
        let series = SnapshotSeries {
            snapshots: (0..6).map(|k| snap(k * 5)).collect(),
            spacing: TimeDelta::minutes(5),
            gaps: vec![],
        };
        let p = pair_stream(&series).unwrap();
        assert_eq!(p.len(), 5);
        assert_eq!(p[4].from.interval_end, at(8, 20));
        assert_eq!(p[4].to.interval_end, at(8, 25));
        let two = SnapshotSeries {
            snapshots: series.snapshots[..2].to_vec(),
            ..series.clone()
        };
        assert_eq!(pair_stream(&two).unwrap().len(), 1);
        let one = SnapshotSeries {
            snapshots: series.snapshots[..1].to_vec(),
            ..series
        };
        assert!(matches!(pair_stream(&one), Err(IngestError::TooFewSnapshots(1))));
    }

    #[test]
    fn averaging() {
        let a = FlowMatrix::from_dense(&[vec![2, 0], vec![0, 0]]);
        let b = FlowMatrix::from_dense(&[vec![0, 2], vec![0, 0]]);
        let avg: DenseMatrix<f64> = average_flows(&[a.clone(), b]).unwrap();
        assert_eq!(avg.to_rows(), vec![vec![1.0, 1.0], vec![0.0, 0.0]]);
        let same: DenseMatrix<f64> = average_flows(&[a.clone(), a.clone()]).unwrap();
        assert_eq!(same, a.to_matrix());
        assert!(matches!(average_flows::<f64>(&[]), Err(IngestError::NoFlows)));
        assert!(average_flows::<f64>(&[a, FlowMatrix::empty(3, 3)]).is_err());
    }
}
