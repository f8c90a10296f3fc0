//! Synthetic grid networks with known ground-truth costs and simulated trips.
//!
//! The network is a `rows × cols` grid of junctions joined by two-way roads.
//! Every `highway_every`-th grid line is a highway; the rest is urban, with
//! optional arterial lines that attract more traffic than side streets.
//! Trips are random walks without immediate u-turns that start from the
//! walk's stationary flow. Each step prefers highways, arterials, going
//! straight and roads near the grid center, so traffic concentrates on some
//! roads. Ground truth is a multiplier on the free-flow travel time
//! `3.6 / limit` (seconds per meter): per tag it lies in the tag's range and
//! mixes the road's flow rank (the stationary distribution of the walk) with
//! independent per-edge noise, so busier roads are slower.
//! Trip timestamps follow the ground truth and trip costs are the linear
//! trip cost of the ground truth times `1 + noise · N(0, 1)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::{CostVector, DayClass, Edge, RoadGraph, TagSchedule};
use crate::pagerank::{pagerank, TransitionMatrix};
use crate::trips::{trip_cost, LinkRecord, Trip, TripSet};

const SECONDS_PER_DAY: u32 = 86_400;
const MAX_ATTEMPTS: u64 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    /// Junction rows and columns, both at least 2.
    pub rows: usize,
    pub cols: usize,
    /// Road lengths are drawn uniformly from this range (meters).
    pub length_range: (f64, f64),
    /// Every n-th grid line (offset n/2) is a highway; 0 disables highways.
    pub highway_every: usize,
    /// Every n-th grid line (offset 0) that is not a highway is an arterial:
    /// an urban road that walks prefer. 0 disables arterials.
    pub arterial_every: usize,
    pub urban_speed_kmh: f64,
    pub highway_speed_kmh: f64,
    /// Share of urban roads whose speed limit is withheld from the network.
    /// Their hidden limit is `urban_speed_kmh`.
    pub missing_speed_fraction: f64,
    pub schedule: TagSchedule,
    /// Per tag, the range of the multiplier on free-flow travel time.
    pub weight_ranges: Vec<(f64, f64)>,
    /// Weight of the flow rank versus per-edge noise in the multiplier, in [0, 1].
    pub flow_share: f64,
    /// Relative weight of continuing onto a highway.
    pub highway_preference: f64,
    /// Relative weight of continuing onto an arterial.
    pub arterial_preference: f64,
    /// Relative weight of continuing straight ahead.
    pub straight_preference: f64,
    /// A continuation's weight grows as `exp(center_preference · c)` with its
    /// closeness `c` in (0, 1] to the grid center.
    pub center_preference: f64,
    /// Trips to generate, or the cap when a coverage target is set.
    pub trip_count: usize,
    /// Inclusive range of records per trip.
    pub records_per_trip: (usize, usize),
    /// Stop adding trips once this fraction of edges is traversed.
    pub coverage_target: Option<f64>,
    /// Relative standard deviation of the multiplicative cost noise.
    pub noise: f64,
    /// Probability that a trip happens on a weekend.
    pub weekend_share: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            rows: 20,
            cols: 20,
            length_range: (80.0, 160.0),
            highway_every: 5,
            arterial_every: 0,
            urban_speed_kmh: 50.0,
            highway_speed_kmh: 110.0,
            missing_speed_fraction: 0.0,
            schedule: TagSchedule::peak_offpeak_weekends(),
            weight_ranges: vec![(1.1, 2.0), (1.5, 3.5), (1.0, 1.6)],
            flow_share: 0.7,
            highway_preference: 3.0,
            arterial_preference: 1.0,
            straight_preference: 2.0,
            center_preference: 1.6,
            trip_count: 500,
            records_per_trip: (5, 20),
            coverage_target: None,
            noise: 0.0,
            weekend_share: 2.0 / 7.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Generation(m));
        if self.rows < 2 || self.cols < 2 {
            return fail(format!("grid {}x{} is smaller than 2x2", self.rows, self.cols));
        }
        let (lo, hi) = self.length_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return fail(format!("bad length range ({lo}, {hi})"));
        }
        if !(self.urban_speed_kmh > 0.0 && self.highway_speed_kmh > 0.0) {
            return fail("speeds must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.missing_speed_fraction)
            || !(0.0..=1.0).contains(&self.flow_share)
            || !(0.0..=1.0).contains(&self.weekend_share)
        {
            return fail("fractions must lie in [0, 1]".into());
        }
        if self.weight_ranges.len() != self.schedule.num_tags() {
            return fail(format!(
                "{} weight ranges for {} tags",
                self.weight_ranges.len(),
                self.schedule.num_tags()
            ));
        }
        if self.weight_ranges.iter().any(|&(a, b)| !(a > 0.0 && b >= a && b.is_finite())) {
            return fail("weight ranges must be positive and ordered".into());
        }
        let (rmin, rmax) = self.records_per_trip;
        if rmin == 0 || rmax < rmin {
            return fail(format!("bad records per trip range ({rmin}, {rmax})"));
        }
        if let Some(t) = self.coverage_target {
            if !(t > 0.0 && t <= 1.0) {
                return fail(format!("coverage target {t} outside (0, 1]"));
            }
        }
        if !(self.highway_preference > 0.0 && self.arterial_preference > 0.0 && self.straight_preference > 0.0)
            || !self.center_preference.is_finite()
        {
            return fail("walk preferences must be positive and finite".into());
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return fail(format!("noise {} must be non-negative", self.noise));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub graph: RoadGraph,
    pub truth: CostVector,
    pub trips: TripSet,
}

/// Seconds from midnight as fractional minutes. Loaders use the same
/// conversion, so generated and re-loaded timestamps are bit-identical.
pub fn minutes_from_seconds(seconds: u32) -> f64 {
    seconds as f64 / 60.0
}

struct Network {
    graph: RoadGraph,
    // per edge, the allowed continuations with their probabilities
    kernel: Vec<Vec<(usize, f64)>>,
    // stationary flow of the walk and its rank in [0, 1]
    flow: Vec<f64>,
    flow_rank: Vec<f64>,
}

fn build_network(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Result<Network> {
    let name = |r: usize, c: usize| format!("r{r}c{c}");
    let vertices: Vec<String> = (0..spec.rows)
        .flat_map(|r| (0..spec.cols).map(move |c| name(r, c)))
        .collect();
    let vid = |r: usize, c: usize| r * spec.cols + c;
    let highway_line = |i: usize| spec.highway_every > 0 && i % spec.highway_every == spec.highway_every / 2;
    let arterial_line = |i: usize| spec.arterial_every > 0 && i.is_multiple_of(spec.arterial_every);
    let (cr, cc) = ((spec.rows - 1) as f64 / 2.0, (spec.cols - 1) as f64 / 2.0);
    let sigma = 0.35 * spec.rows.max(spec.cols) as f64;
    let bump = |r: f64, c: f64| (-((r - cr).powi(2) + (c - cc).powi(2)) / (2.0 * sigma * sigma)).exp();

    let mut edges = Vec::new();
    // per edge: closeness to the grid center and the walk preference for it
    let mut centrality = Vec::new();
    let mut preference = Vec::new();
    let mut roads = Vec::new();
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            if c + 1 < spec.cols {
                roads.push(((r, c), (r, c + 1), r));
            }
            if r + 1 < spec.rows {
                roads.push(((r, c), (r + 1, c), c));
            }
        }
    }
    for ((r0, c0), (r1, c1), line) in roads {
        let highway = highway_line(line);
        let pref = if highway {
            spec.highway_preference
        } else if arterial_line(line) {
            spec.arterial_preference
        } else {
            1.0
        };
        let (lo, hi) = spec.length_range;
        let length = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let withheld = !highway && rng.random::<f64>() < spec.missing_speed_fraction;
        let limit = if highway {
            Some(spec.highway_speed_kmh)
        } else if withheld {
            None
        } else {
            Some(spec.urban_speed_kmh)
        };
        let mid = bump((r0 + r1) as f64 / 2.0, (c0 + c1) as f64 / 2.0);
        for ((ra, ca), (rb, cb)) in [((r0, c0), (r1, c1)), ((r1, c1), (r0, c0))] {
            edges.push(Edge {
                id: format!("{}-{}", name(ra, ca), name(rb, cb)),
                tail: vid(ra, ca),
                head: vid(rb, cb),
                length,
                speed_limit: limit,
            });
            centrality.push(mid);
            preference.push(pref);
        }
    }
    let graph = RoadGraph::new(vertices, edges, spec.schedule.clone())?;

    let kernel: Vec<Vec<(usize, f64)>> = (0..graph.num_edges())
        .map(|cur| {
            let here = graph.edge(cur);
            let step = here.head as isize - here.tail as isize;
            let mut row: Vec<(usize, f64)> = graph
                .out_edges(here.head)
                .iter()
                .filter(|&&n| !graph.is_reverse_pair(cur, n))
                .map(|&n| {
                    let next = graph.edge(n);
                    let mut w = preference[n] * (spec.center_preference * centrality[n]).exp();
                    if next.head as isize - next.tail as isize == step {
                        w *= spec.straight_preference;
                    }
                    (n, w)
                })
                .collect();
            let total: f64 = row.iter().map(|o| o.1).sum();
            row.iter_mut().for_each(|o| o.1 /= total);
            // absorb rounding so the row sums to one
            let head: f64 = row.iter().rev().skip(1).map(|o| o.1).sum();
            if let Some(last) = row.last_mut() {
                last.1 = 1.0 - head;
            }
            row
        })
        .collect();
    let flow = pagerank(&TransitionMatrix::from_rows(0, kernel.clone())?, 1e-13, 1_000_000)?;
    let mut order: Vec<usize> = (0..graph.num_edges()).collect();
    order.sort_by(|&a, &b| flow.values[a].total_cmp(&flow.values[b]).then(a.cmp(&b)));
    let mut flow_rank = vec![0.0; graph.num_edges()];
    let denom = (graph.num_edges() - 1).max(1) as f64;
    for (pos, &e) in order.iter().enumerate() {
        flow_rank[e] = pos as f64 / denom;
    }
    Ok(Network {
        graph,
        kernel,
        flow: flow.values,
        flow_rank,
    })
}

fn ground_truth(spec: &SyntheticSpec, net: &Network, rng: &mut ChaCha8Rng) -> CostVector {
    let g = &net.graph;
    let mut d = CostVector::zeros(g.layout());
    for e in 0..g.num_edges() {
        let limit = g.edge(e).speed_limit.unwrap_or(spec.urban_speed_kmh);
        let free_flow = 3.6 / limit;
        for (k, &(lo, hi)) in spec.weight_ranges.iter().enumerate() {
            let u: f64 = rng.random();
            let mix = spec.flow_share * net.flow_rank[e] + (1.0 - spec.flow_share) * u;
            d.set(e, k, free_flow * (lo + (hi - lo) * mix));
        }
    }
    d
}

fn walk(net: &Network, len: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut path = vec![pick(net.flow.iter().copied().enumerate(), rng)];
    while path.len() < len {
        let options = &net.kernel[*path.last().unwrap()];
        if options.is_empty() {
            break;
        }
        path.push(pick(options.iter().copied(), rng));
    }
    path
}

// Samples from `(item, probability)` pairs whose probabilities sum to one.
fn pick(options: impl Iterator<Item = (usize, f64)>, rng: &mut ChaCha8Rng) -> usize {
    let mut u: f64 = rng.random();
    let mut last = 0;
    for (item, p) in options {
        if u < p {
            return item;
        }
        u -= p;
        last = item;
    }
    last
}

fn simulate_trip(
    spec: &SyntheticSpec,
    net: &Network,
    truth: &CostVector,
    id: String,
    rng: &mut ChaCha8Rng,
) -> Result<Trip> {
    let g = &net.graph;
    let schedule = g.schedule();
    let (rmin, rmax) = spec.records_per_trip;
    let path = walk(net, rng.random_range(rmin..=rmax), rng);
    let day = if rng.random::<f64>() < spec.weekend_share {
        DayClass::Weekend
    } else {
        DayClass::Weekday
    };
    loop {
        let mut t: u32 = rng.random_range(0..SECONDS_PER_DAY);
        let mut records = Vec::with_capacity(path.len());
        for &e in &path {
            if t >= SECONDS_PER_DAY {
                break;
            }
            let tag = schedule.tag_of(day, minutes_from_seconds(t));
            let secs = (g.length(e) * truth.get(e, tag)).round().max(1.0) as u32;
            if t + secs > SECONDS_PER_DAY {
                break;
            }
            records.push(LinkRecord::new(
                e,
                day,
                minutes_from_seconds(t),
                minutes_from_seconds(t + secs),
            )?);
            t += secs;
        }
        if records.is_empty() {
            continue;
        }
        let mut trip = Trip {
            id,
            records,
            cost: 0.0,
        };
        let exact = trip_cost(&trip, g, truth)?;
        let factor = if spec.noise > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            (1.0 + spec.noise * z).max(0.0)
        } else {
            1.0
        };
        trip.cost = exact * factor;
        return Ok(trip);
    }
}

/// Generates a network, its ground truth and trips, deterministically per seed.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = build_network(spec, &mut rng)?;
    let truth = ground_truth(spec, &net, &mut rng);
    let n_edges = net.graph.num_edges();
    for attempt in 0..MAX_ATTEMPTS {
        let mut trip_rng = ChaCha8Rng::seed_from_u64(seed);
        trip_rng.set_stream(attempt + 1);
        let mut trips = Vec::new();
        let mut seen = vec![false; n_edges];
        let mut covered = 0usize;
        let reached = |covered: usize| {
            spec.coverage_target
                .is_some_and(|t| covered as f64 >= t * n_edges as f64)
        };
        while trips.len() < spec.trip_count && !reached(covered) {
            let trip = simulate_trip(spec, &net, &truth, format!("trip{:06}", trips.len()), &mut trip_rng)?;
            for r in &trip.records {
                if !seen[r.edge] {
                    seen[r.edge] = true;
                    covered += 1;
                }
            }
            trips.push(trip);
        }
        if spec.coverage_target.is_none() || reached(covered) {
            let trips = TripSet::new(&net.graph, trips)?;
            return Ok(SyntheticData {
                graph: net.graph,
                truth,
                trips,
            });
        }
        log::warn!(
            "attempt {}: {} trips cover {:.3} of edges, below target",
            attempt + 1,
            trips.len(),
            covered as f64 / n_edges as f64
        );
    }
    Err(Error::Generation(format!(
        "coverage target {:?} not reached with {} trips after {MAX_ATTEMPTS} attempts",
        spec.coverage_target, spec.trip_count
    )))
}
