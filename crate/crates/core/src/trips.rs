//! Trips as sequences of link records paired with an observed total cost,
//! and the linear trip cost model over a [`CostVector`].

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{CostVector, DayClass, RoadGraph, TagSchedule, MINUTES_PER_DAY};

/// One traversal of one edge. Times are fractional minutes of the day; a
/// record never spans midnight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRecord {
    pub edge: usize,
    pub day: DayClass,
    pub enter: f64,
    pub exit: f64,
}

impl LinkRecord {
    pub fn new(edge: usize, day: DayClass, enter: f64, exit: f64) -> Result<Self> {
        let r = LinkRecord {
            edge,
            day,
            enter,
            exit,
        };
        r.check_times()?;
        Ok(r)
    }

    fn check_times(&self) -> Result<()> {
        let day_len = MINUTES_PER_DAY as f64;
        if !(self.enter.is_finite() && self.exit.is_finite()) {
            return Err(Error::contract("non-finite record timestamp"));
        }
        if self.enter < 0.0 || self.exit > day_len {
            return Err(Error::contract(format!(
                "record [{}, {}] leaves the day; split records at midnight",
                self.enter, self.exit
            )));
        }
        if self.exit <= self.enter {
            return Err(Error::contract(format!(
                "record on edge {} has non-positive duration [{}, {}]",
                self.edge, self.enter, self.exit
            )));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.exit - self.enter
    }
}

/// An ordered sequence of link records with its total observed cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Trip {
    pub id: String,
    pub records: Vec<LinkRecord>,
    pub cost: f64,
}

impl Trip {
    pub fn duration(&self) -> f64 {
        self.records.iter().map(LinkRecord::duration).sum()
    }

    /// Validates the trip against a graph: non-empty, edges exist, positive
    /// record durations, temporally ordered records, non-negative cost.
    pub fn validate(&self, graph: &RoadGraph) -> Result<()> {
        if self.records.is_empty() {
            return Err(Error::contract(format!("trip {} has no records", self.id)));
        }
        if !(self.cost.is_finite() && self.cost >= 0.0) {
            return Err(Error::contract(format!(
                "trip {} has invalid cost {}",
                self.id, self.cost
            )));
        }
        for r in &self.records {
            if r.edge >= graph.num_edges() {
                return Err(Error::Index {
                    what: "edge",
                    index: r.edge,
                    len: graph.num_edges(),
                });
            }
            r.check_times()?;
        }
        for w in self.records.windows(2) {
            if w[0].day != w[1].day || w[0].exit > w[1].enter {
                return Err(Error::contract(format!(
                    "trip {} records are not temporally ordered within one day",
                    self.id
                )));
            }
        }
        Ok(())
    }
}

/// The (trip, cost) pairs used for training or testing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TripSet {
    trips: Vec<Trip>,
}

impl TripSet {
    pub fn new(graph: &RoadGraph, trips: Vec<Trip>) -> Result<Self> {
        for t in &trips {
            t.validate(graph)?;
        }
        Ok(TripSet { trips })
    }

    /// Wraps trips that were already validated against the graph.
    pub(crate) fn from_validated(trips: Vec<Trip>) -> Self {
        TripSet { trips }
    }

    pub fn empty() -> Self {
        TripSet::default()
    }

    pub fn len(&self) -> usize {
        self.trips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trips.is_empty()
    }

    pub fn trips(&self) -> &[Trip] {
        &self.trips
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Trip> {
        self.trips.iter()
    }

    pub fn costs(&self) -> Vec<f64> {
        self.trips.iter().map(|t| t.cost).collect()
    }

    pub fn into_trips(self) -> Vec<Trip> {
        self.trips
    }

    /// Subset by trip positions, preserving the given order.
    pub fn select(&self, indices: &[usize]) -> TripSet {
        TripSet {
            trips: indices.iter().map(|&i| self.trips[i].clone()).collect(),
        }
    }

    /// Concatenation of two sets.
    pub fn merged(&self, other: &TripSet) -> TripSet {
        let mut trips = self.trips.clone();
        trips.extend(other.trips.iter().cloned());
        TripSet { trips }
    }

    /// Per-edge mask of edges touched by any record.
    pub fn touched_edges(&self, num_edges: usize) -> Vec<bool> {
        let mut seen = vec![false; num_edges];
        for t in &self.trips {
            for r in &t.records {
                seen[r.edge] = true;
            }
        }
        seen
    }

    /// Fraction of the graph's edges traversed by at least one trip.
    pub fn edge_coverage(&self, num_edges: usize) -> f64 {
        if num_edges == 0 {
            return 0.0;
        }
        let seen = self.touched_edges(num_edges);
        seen.iter().filter(|&&s| s).count() as f64 / num_edges as f64
    }
}

impl<'a> IntoIterator for &'a TripSet {
    type Item = &'a Trip;
    type IntoIter = std::slice::Iter<'a, Trip>;

    fn into_iter(self) -> Self::IntoIter {
        self.trips.iter()
    }
}

/// Fraction of the record's duration that falls under `tag`.
pub fn tag_weight(record: &LinkRecord, tag: usize, schedule: &TagSchedule) -> Result<f64> {
    let duration = record.duration();
    if !(duration > 0.0) {
        return Err(Error::contract(format!(
            "record on edge {} has zero duration",
            record.edge
        )));
    }
    Ok(schedule.overlap(record.day, record.enter, record.exit, tag) / duration)
}

/// `tag_weight` for every tag at once.
pub fn tag_weights(record: &LinkRecord, schedule: &TagSchedule) -> Result<Vec<f64>> {
    (0..schedule.num_tags())
        .map(|k| tag_weight(record, k, schedule))
        .collect()
}

/// Estimated cost of a trip: for each record and tag, the tag's share of the
/// record duration times the unit cost of `(edge, tag)` times the edge length.
pub fn trip_cost(trip: &Trip, graph: &RoadGraph, d: &CostVector) -> Result<f64> {
    if d.layout() != graph.layout() {
        return Err(Error::contract(format!(
            "cost vector layout {:?} does not match graph layout {:?}",
            d.layout(),
            graph.layout()
        )));
    }
    let schedule = graph.schedule();
    let mut total = 0.0;
    for r in &trip.records {
        if r.edge >= graph.num_edges() {
            return Err(Error::Index {
                what: "edge",
                index: r.edge,
                len: graph.num_edges(),
            });
        }
        let len = graph.length(r.edge);
        for k in 0..schedule.num_tags() {
            let w = tag_weight(r, k, schedule)?;
            if w != 0.0 {
                total += w * d.get(r.edge, k) * len;
            }
        }
    }
    Ok(total)
}

/// Minutes of the whole trip spent under each tag.
pub fn tag_durations(trip: &Trip, schedule: &TagSchedule) -> Vec<f64> {
    let mut out = vec![0.0; schedule.num_tags()];
    for r in &trip.records {
        for (k, slot) in out.iter_mut().enumerate() {
            *slot += schedule.overlap(r.day, r.enter, r.exit, k);
        }
    }
    out
}

/// Tag holding the majority of a trip's traversal time; ties go to the lower tag.
pub fn dominant_tag(trip: &Trip, schedule: &TagSchedule) -> usize {
    let durations = tag_durations(trip, schedule);
    let mut best = 0;
    for (k, &v) in durations.iter().enumerate().skip(1) {
        if v > durations[best] {
            best = k;
        }
    }
    best
}

/// Splits trips into one set per tag by [`dominant_tag`].
pub fn partition_by_tag(trips: &TripSet, schedule: &TagSchedule) -> Vec<TripSet> {
    let mut parts = vec![Vec::new(); schedule.num_tags()];
    for t in trips {
        parts[dominant_tag(t, schedule)].push(t.clone());
    }
    parts.into_iter().map(TripSet::from_validated).collect()
}

fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    idx
}

/// Random disjoint train/test split with `round(train_fraction * N)` training trips.
/// Both halves keep the original trip order.
pub fn split(trips: &TripSet, train_fraction: f64, seed: u64) -> Result<(TripSet, TripSet)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::contract(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let n = trips.len();
    if n < 2 {
        return Err(Error::contract(format!("cannot split {n} trip(s)")));
    }
    let n_train = (train_fraction * n as f64).round() as usize;
    let idx = shuffled_indices(n, seed);
    let mut train: Vec<usize> = idx[..n_train].to_vec();
    let mut test: Vec<usize> = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((trips.select(&train), trips.select(&test)))
}

/// First `round(fraction * N)` trips of a seeded permutation. For a fixed
/// seed, smaller fractions give subsets of larger ones.
pub fn subsample(trips: &TripSet, fraction: f64, seed: u64) -> Result<TripSet> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::contract(format!("fraction {fraction} outside (0, 1]")));
    }
    let n = trips.len();
    let keep = (fraction * n as f64).round() as usize;
    let mut idx = shuffled_indices(n, seed);
    idx.truncate(keep);
    idx.sort_unstable();
    Ok(trips.select(&idx))
}
