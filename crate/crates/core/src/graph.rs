//! Road network model: the directed primal graph, the traffic tag schedule,
//! the per-(edge, tag) cost vector layout, and the primal to dual transform.
//!
//! Edge indices are 0-based positions in the edge list and are the canonical
//! index used by every downstream module. The cost vector is laid out in
//! per-tag contiguous blocks of `|E|` entries:
//!
//! ```text
//! [d(e0,t0) .. d(eN,t0), d(e0,t1) .. d(eN,t1), ...]
//! ```
//!
//! so entry `(edge, tag)` lives at `tag * |E| + edge`.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MINUTES_PER_DAY: u32 = 1440;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DayClass {
    Weekday,
    Weekend,
}

impl DayClass {
    pub const ALL: [DayClass; 2] = [DayClass::Weekday, DayClass::Weekend];

    fn slot(self) -> usize {
        match self {
            DayClass::Weekday => 0,
            DayClass::Weekend => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DayClass::Weekday => "weekday",
            DayClass::Weekend => "weekend",
        }
    }
}

impl fmt::Display for DayClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DayClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "weekday" | "weekdays" => Ok(DayClass::Weekday),
            "weekend" | "weekends" => Ok(DayClass::Weekend),
            other => Err(format!("unknown day class {other:?} (expected weekday or weekend)")),
        }
    }
}

/// Maps a half-open minute-of-day interval of one day class to a tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagRule {
    pub day: DayClass,
    pub start: u32,
    pub end: u32,
    pub tag: usize,
}

/// Traffic category tags and the function assigning a tag to every minute of
/// a weekday and of a weekend day.
#[derive(Debug, Clone, PartialEq)]
pub struct TagSchedule {
    tags: Vec<String>,
    rules: Vec<TagRule>,
    // per day class, rules sorted by start
    by_day: [Vec<TagRule>; 2],
}

impl TagSchedule {
    /// Builds a schedule, checking that for each day class the rules cover
    /// `[0, 1440)` with no gap and no overlap.
    pub fn new(tags: Vec<String>, rules: Vec<TagRule>) -> Result<Self> {
        if tags.is_empty() {
            return Err(Error::contract("tag schedule has no tags"));
        }
        let mut by_day: [Vec<TagRule>; 2] = [Vec::new(), Vec::new()];
        for rule in &rules {
            if rule.tag >= tags.len() {
                return Err(Error::Index {
                    what: "tag",
                    index: rule.tag,
                    len: tags.len(),
                });
            }
            if rule.start >= rule.end || rule.end > MINUTES_PER_DAY {
                return Err(Error::contract(format!(
                    "invalid rule interval [{}, {}) for {}",
                    rule.start, rule.end, rule.day
                )));
            }
            by_day[rule.day.slot()].push(*rule);
        }
        for day in DayClass::ALL {
            let list = &mut by_day[day.slot()];
            list.sort_by_key(|r| r.start);
            let mut cursor = 0;
            for r in list.iter() {
                if r.start != cursor {
                    return Err(Error::contract(format!(
                        "{day} rules do not partition the day: {} at minute {cursor}",
                        if r.start > cursor { "gap" } else { "overlap" }
                    )));
                }
                cursor = r.end;
            }
            if cursor != MINUTES_PER_DAY {
                return Err(Error::contract(format!(
                    "{day} rules do not partition the day: gap from minute {cursor}"
                )));
            }
        }
        Ok(TagSchedule { tags, rules, by_day })
    }

    /// PEAK on weekdays 07:00-08:00 and 15:00-17:00, OFFPEAK for the rest of
    /// weekdays, WEEKENDS all day on weekends. Tag order: OFFPEAK, PEAK, WEEKENDS.
    pub fn peak_offpeak_weekends() -> Self {
        use DayClass::*;
        let r = |day, start_h: u32, end_h: u32, tag| TagRule {
            day,
            start: start_h * 60,
            end: end_h * 60,
            tag,
        };
        TagSchedule::new(
            vec!["OFFPEAK".into(), "PEAK".into(), "WEEKENDS".into()],
            vec![
                r(Weekday, 0, 7, 0),
                r(Weekday, 7, 8, 1),
                r(Weekday, 8, 15, 0),
                r(Weekday, 15, 17, 1),
                r(Weekday, 17, 24, 0),
                r(Weekend, 0, 24, 2),
            ],
        )
        .expect("built-in schedule is a partition")
    }

    /// One tag covering every minute of every day.
    pub fn single(tag: &str) -> Self {
        TagSchedule::new(
            vec![tag.to_string()],
            DayClass::ALL
                .iter()
                .map(|&day| TagRule {
                    day,
                    start: 0,
                    end: MINUTES_PER_DAY,
                    tag: 0,
                })
                .collect(),
        )
        .expect("single-tag schedule is a partition")
    }

    pub fn num_tags(&self) -> usize {
        self.tags.len()
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn tag_name(&self, tag: usize) -> &str {
        &self.tags[tag]
    }

    pub fn tag_index(&self, name: &str) -> Option<usize> {
        self.tags.iter().position(|t| t == name)
    }

    /// Rules in their original order.
    pub fn rules(&self) -> &[TagRule] {
        &self.rules
    }

    /// Tag in force at `minute` (fractional, in `[0, 1440)`) of a `day`.
    pub fn tag_of(&self, day: DayClass, minute: f64) -> usize {
        debug_assert!((0.0..MINUTES_PER_DAY as f64).contains(&minute));
        let list = &self.by_day[day.slot()];
        let idx = list.partition_point(|r| (r.end as f64) <= minute);
        list[idx.min(list.len() - 1)].tag
    }

    /// The intervals assigned to `tag` on `day` (the inverse tag function).
    pub fn intervals(&self, day: DayClass, tag: usize) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.by_day[day.slot()]
            .iter()
            .filter(move |r| r.tag == tag)
            .map(|r| (r.start, r.end))
    }

    /// Minutes of `[start, end]` on `day` that fall under `tag`.
    pub fn overlap(&self, day: DayClass, start: f64, end: f64, tag: usize) -> f64 {
        self.intervals(day, tag)
            .map(|(a, b)| (end.min(b as f64) - start.max(a as f64)).max(0.0))
            .sum()
    }
}

/// Position of `(edge, tag)` entries inside a cost vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLayout {
    pub num_edges: usize,
    pub num_tags: usize,
}

impl CostLayout {
    pub fn new(num_edges: usize, num_tags: usize) -> Self {
        CostLayout {
            num_edges,
            num_tags,
        }
    }

    pub fn len(&self) -> usize {
        self.num_edges * self.num_tags
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat_index(&self, edge: usize, tag: usize) -> Result<usize> {
        if edge >= self.num_edges {
            return Err(Error::Index {
                what: "edge",
                index: edge,
                len: self.num_edges,
            });
        }
        if tag >= self.num_tags {
            return Err(Error::Index {
                what: "tag",
                index: tag,
                len: self.num_tags,
            });
        }
        Ok(self.index(edge, tag))
    }

    /// Unchecked variant of [`CostLayout::flat_index`].
    #[inline]
    pub fn index(&self, edge: usize, tag: usize) -> usize {
        tag * self.num_edges + edge
    }

    /// Inverse of [`CostLayout::index`]: `(edge, tag)`.
    #[inline]
    pub fn split(&self, flat: usize) -> (usize, usize) {
        (flat % self.num_edges, flat / self.num_edges)
    }

    /// Flat range covering every edge of one tag.
    pub fn block(&self, tag: usize) -> Range<usize> {
        tag * self.num_edges..(tag + 1) * self.num_edges
    }
}

/// Per-(edge, tag) unit costs (cost per meter).
#[derive(Debug, Clone, PartialEq)]
pub struct CostVector {
    layout: CostLayout,
    values: Vec<f64>,
}

impl CostVector {
    pub fn zeros(layout: CostLayout) -> Self {
        CostVector {
            layout,
            values: vec![0.0; layout.len()],
        }
    }

    pub fn from_values(layout: CostLayout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::contract(format!(
                "cost vector has {} entries, layout needs {}",
                values.len(),
                layout.len()
            )));
        }
        Ok(CostVector { layout, values })
    }

    pub fn layout(&self) -> CostLayout {
        self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, edge: usize, tag: usize) -> f64 {
        self.values[self.layout.index(edge, tag)]
    }

    pub fn set(&mut self, edge: usize, tag: usize, value: f64) {
        let i = self.layout.index(edge, tag);
        self.values[i] = value;
    }
}

/// A directed road segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub tail: usize,
    pub head: usize,
    /// Meters.
    pub length: f64,
    /// km/h, when known.
    pub speed_limit: Option<f64>,
}

/// The temporal road network: junctions, directed segments with lengths and
/// optional speed limits, and the traffic tag schedule.
#[derive(Debug, Clone)]
pub struct RoadGraph {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    schedule: TagSchedule,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    edge_lookup: HashMap<String, usize>,
}

impl RoadGraph {
    pub fn new(vertices: Vec<String>, edges: Vec<Edge>, schedule: TagSchedule) -> Result<Self> {
        let n = vertices.len();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        let mut edge_lookup = HashMap::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            if e.tail >= n || e.head >= n {
                return Err(Error::contract(format!(
                    "edge {} references a missing vertex",
                    e.id
                )));
            }
            if e.tail == e.head {
                return Err(Error::contract(format!("edge {} is a self loop", e.id)));
            }
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(Error::contract(format!(
                    "edge {} has non-positive length {}",
                    e.id, e.length
                )));
            }
            if let Some(sl) = e.speed_limit {
                if !(sl.is_finite() && sl > 0.0) {
                    return Err(Error::contract(format!(
                        "edge {} has non-positive speed limit {sl}",
                        e.id
                    )));
                }
            }
            if edge_lookup.insert(e.id.clone(), i).is_some() {
                return Err(Error::contract(format!("duplicate edge id {}", e.id)));
            }
            out_edges[e.tail].push(i);
            in_edges[e.head].push(i);
        }
        Ok(RoadGraph {
            vertices,
            edges,
            schedule,
            out_edges,
            in_edges,
            edge_lookup,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_tags(&self) -> usize {
        self.schedule.num_tags()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    pub fn length(&self, i: usize) -> f64 {
        self.edges[i].length
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edge_lookup.get(id).copied()
    }

    pub fn schedule(&self) -> &TagSchedule {
        &self.schedule
    }

    /// Outgoing edge indices of a vertex, ascending.
    pub fn out_edges(&self, vertex: usize) -> &[usize] {
        &self.out_edges[vertex]
    }

    pub fn in_edges(&self, vertex: usize) -> &[usize] {
        &self.in_edges[vertex]
    }

    pub fn layout(&self) -> CostLayout {
        CostLayout::new(self.num_edges(), self.num_tags())
    }

    pub fn flat_index(&self, edge: usize, tag: usize) -> Result<usize> {
        self.layout().flat_index(edge, tag)
    }

    /// True when `a` and `b` are opposite directions between the same two junctions.
    pub fn is_reverse_pair(&self, a: usize, b: usize) -> bool {
        let (ea, eb) = (&self.edges[a], &self.edges[b]);
        ea.tail == eb.head && ea.head == eb.tail
    }

    /// Highway when the speed limit is strictly above `cutoff_kmh`; unknown
    /// limits count as urban.
    pub fn is_highway(&self, edge: usize, cutoff_kmh: f64) -> bool {
        self.edges[edge].speed_limit.is_some_and(|sl| sl > cutoff_kmh)
    }
}

/// Line graph of a [`RoadGraph`]: one dual vertex per primal edge (same
/// index), one dual edge per consecutive pair of primal edges sharing a junction.
#[derive(Debug, Clone)]
pub struct DualGraph {
    primal: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    sources: Vec<usize>,
    targets: Vec<usize>,
    via: Vec<usize>,
    reverse: Vec<bool>,
    // dual edge ids grouped by target
    in_offsets: Vec<usize>,
    in_edges: Vec<usize>,
}

/// Builds the dual graph. Dual edges are ordered by source dual vertex, then
/// by target index, so the output is deterministic for a given edge order.
/// U-turn dual edges (into the reverse pair) are kept.
pub fn build_dual(graph: &RoadGraph) -> DualGraph {
    let m = graph.num_edges();
    let primal: Vec<(usize, usize)> = graph.edges().iter().map(|e| (e.tail, e.head)).collect();
    let mut offsets = Vec::with_capacity(m + 1);
    let mut sources = Vec::new();
    let mut targets = Vec::new();
    let mut via = Vec::new();
    let mut reverse = Vec::new();
    offsets.push(0);
    for (u, &(tail, head)) in primal.iter().enumerate() {
        for &v in graph.out_edges(head) {
            sources.push(u);
            targets.push(v);
            via.push(head);
            reverse.push(primal[v].1 == tail);
        }
        offsets.push(targets.len());
    }

    let mut in_count = vec![0usize; m + 1];
    for &t in &targets {
        in_count[t + 1] += 1;
    }
    for i in 0..m {
        in_count[i + 1] += in_count[i];
    }
    let in_offsets = in_count.clone();
    let mut cursor = in_count;
    let mut in_edges = vec![0; targets.len()];
    for (e, &t) in targets.iter().enumerate() {
        in_edges[cursor[t]] = e;
        cursor[t] += 1;
    }

    DualGraph {
        primal,
        offsets,
        sources,
        targets,
        via,
        reverse,
        in_offsets,
        in_edges,
    }
}

impl DualGraph {
    pub fn num_vertices(&self) -> usize {
        self.primal.len()
    }

    pub fn num_edges(&self) -> usize {
        self.targets.len()
    }

    /// Dual edge ids leaving `u`.
    pub fn out_edge_ids(&self, u: usize) -> Range<usize> {
        self.offsets[u]..self.offsets[u + 1]
    }

    pub fn out_degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    /// Dual edge ids entering `v`.
    pub fn in_edge_ids(&self, v: usize) -> &[usize] {
        &self.in_edges[self.in_offsets[v]..self.in_offsets[v + 1]]
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.in_offsets[v + 1] - self.in_offsets[v]
    }

    pub fn source(&self, e: usize) -> usize {
        self.sources[e]
    }

    pub fn target(&self, e: usize) -> usize {
        self.targets[e]
    }

    /// `(source, target)` for every dual edge, in id order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.sources.iter().copied().zip(self.targets.iter().copied())
    }

    /// Primal edge `(tail, head)` represented by dual vertex `u`.
    pub fn d2p_vertex(&self, u: usize) -> (usize, usize) {
        self.primal[u]
    }

    /// Primal junction shared by the two segments of dual edge `e`.
    pub fn d2p_edge(&self, e: usize) -> usize {
        self.via[e]
    }

    /// Whether dual edge `e` is a u-turn into the reverse direction.
    pub fn is_reverse_edge(&self, e: usize) -> bool {
        self.reverse[e]
    }

    pub fn reverse_pair(&self, u: usize, v: usize) -> bool {
        let (a, b) = self.primal[u];
        let (c, d) = self.primal[v];
        a == d && b == c
    }

    pub fn find_edge(&self, u: usize, v: usize) -> Option<usize> {
        self.out_edge_ids(u).find(|&e| self.targets[e] == v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_way_junction() -> RoadGraph {
        // A=0 B=1 C=2 D=3; edges AB, BA, BC, CB, BD
        let edges = [("AB", 0, 1), ("BA", 1, 0), ("BC", 1, 2), ("CB", 2, 1), ("BD", 1, 3)]
            .iter()
            .map(|&(id, t, h)| Edge {
                id: id.into(),
                tail: t,
                head: h,
                length: 100.0,
                speed_limit: Some(50.0),
            })
            .collect();
        RoadGraph::new(
            vec!["A".into(), "B".into(), "C".into(), "D".into()],
            edges,
            TagSchedule::peak_offpeak_weekends(),
        )
        .unwrap()
    }

    #[test]
    fn flat_index_examples() {
        let layout = CostLayout::new(4, 2);
        assert_eq!(layout.flat_index(0, 0).unwrap(), 0);
        assert_eq!(layout.flat_index(3, 1).unwrap(), 7);
        // enumerate [e1t1,e2t1,e3t1,e4t1,e1t2,e2t2,e3t2,e4t2]
        let enumerated: Vec<(usize, usize)> =
            (0..2).flat_map(|t| (0..4).map(move |e| (e, t))).collect();
        let pos = enumerated.iter().position(|&p| p == (2, 1)).unwrap();
        assert_eq!(layout.flat_index(2, 1).unwrap(), pos);
        assert_eq!(pos, 6);
    }

    #[test]
    fn flat_index_out_of_range() {
        let layout = CostLayout::new(4, 2);
        assert!(matches!(layout.flat_index(4, 0), Err(Error::Index { what: "edge", .. })));
        assert!(matches!(layout.flat_index(0, 2), Err(Error::Index { what: "tag", .. })));
    }

    #[test]
    fn flat_index_is_bijection() {
        let layout = CostLayout::new(7, 3);
        let mut seen = vec![false; layout.len()];
        for t in 0..3 {
            for e in 0..7 {
                let x = layout.flat_index(e, t).unwrap();
                assert!(!seen[x]);
                seen[x] = true;
                assert_eq!(layout.split(x), (e, t));
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn three_tag_schedule_lookup() {
        let s = TagSchedule::peak_offpeak_weekends();
        let peak = s.tag_index("PEAK").unwrap();
        let off = s.tag_index("OFFPEAK").unwrap();
        let wkd = s.tag_index("WEEKENDS").unwrap();
        assert_eq!(s.tag_of(DayClass::Weekday, 7.0 * 60.0 + 30.0), peak);
        assert_eq!(s.tag_of(DayClass::Weekday, 12.0 * 60.0), off);
        assert_eq!(s.tag_of(DayClass::Weekend, 23.0 * 60.0 + 59.0), wkd);
        assert_eq!(s.tag_of(DayClass::Weekday, 420.0), peak);
        assert_eq!(s.tag_of(DayClass::Weekday, 419.999), off);
        assert_eq!(s.tag_of(DayClass::Weekday, 1439.9), off);
    }

    #[test]
    fn schedule_total_and_inverse() {
        let s = TagSchedule::peak_offpeak_weekends();
        for day in DayClass::ALL {
            for m in 0..MINUTES_PER_DAY {
                let t = s.tag_of(day, m as f64);
                let hits = (0..s.num_tags())
                    .filter(|&k| s.intervals(day, k).any(|(a, b)| a <= m && m < b))
                    .count();
                assert_eq!(hits, 1);
                assert!(s.intervals(day, t).any(|(a, b)| a <= m && m < b));
            }
        }
        let peak: Vec<_> = s.intervals(DayClass::Weekday, 1).collect();
        assert_eq!(peak, vec![(420, 480), (900, 1020)]);
    }

    #[test]
    fn schedule_rejects_gap_and_overlap() {
        let tags = vec!["X".to_string()];
        let rule = |day, start, end| TagRule { day, start, end, tag: 0 };
        let gap = TagSchedule::new(
            tags.clone(),
            vec![
                rule(DayClass::Weekday, 0, 600),
                rule(DayClass::Weekday, 700, 1440),
                rule(DayClass::Weekend, 0, 1440),
            ],
        );
        assert!(gap.is_err());
        let overlap = TagSchedule::new(
            tags.clone(),
            vec![
                rule(DayClass::Weekday, 0, 800),
                rule(DayClass::Weekday, 700, 1440),
                rule(DayClass::Weekend, 0, 1440),
            ],
        );
        assert!(overlap.is_err());
        let missing_weekend = TagSchedule::new(tags, vec![rule(DayClass::Weekday, 0, 1440)]);
        assert!(missing_weekend.is_err());
    }

    #[test]
    fn rejects_self_loop_and_bad_length() {
        let mk = |t, h, len| Edge {
            id: "e".into(),
            tail: t,
            head: h,
            length: len,
            speed_limit: None,
        };
        let v = vec!["a".to_string(), "b".to_string()];
        let s = TagSchedule::single("ALL");
        assert!(RoadGraph::new(v.clone(), vec![mk(0, 0, 1.0)], s.clone()).is_err());
        assert!(RoadGraph::new(v.clone(), vec![mk(0, 1, 0.0)], s.clone()).is_err());
        assert!(RoadGraph::new(v.clone(), vec![mk(0, 2, 1.0)], s.clone()).is_err());
        assert!(RoadGraph::new(v, vec![mk(0, 1, 1.0)], s).is_ok());
    }

    #[test]
    fn dual_of_three_way_junction() {
        let g = three_way_junction();
        let dual = build_dual(&g);
        assert_eq!(dual.num_vertices(), 5);
        let ab = g.edge_index("AB").unwrap();
        let ba = g.edge_index("BA").unwrap();
        let cb = g.edge_index("CB").unwrap();
        assert_eq!(dual.d2p_vertex(ab), (0, 1));
        let e = dual.find_edge(cb, ba).expect("dual edge (CB, BA)");
        assert_eq!(dual.d2p_edge(e), 1);
        // AB -> BA, BC, BD ; BA -> AB ; BC -> CB ; CB -> BA, BC, BD ; BD -> none
        assert_eq!(dual.num_edges(), 8);
        assert_eq!(dual.out_degree(ab), 3);
        assert_eq!(dual.out_degree(g.edge_index("BD").unwrap()), 0);
        for (e, (u, v)) in dual.edges().enumerate() {
            assert_eq!(dual.d2p_vertex(u).1, dual.d2p_vertex(v).0);
            assert_eq!(dual.d2p_edge(e), dual.d2p_vertex(u).1);
        }
        assert!(dual.reverse_pair(ab, ba));
        assert!(dual.reverse_pair(ba, ab));
        assert!(!dual.reverse_pair(ab, g.edge_index("BC").unwrap()));
        let uturn = dual.find_edge(ab, ba).unwrap();
        assert!(dual.is_reverse_edge(uturn));
    }

    #[test]
    fn dual_single_edge() {
        let g = RoadGraph::new(
            vec!["A".into(), "B".into()],
            vec![Edge {
                id: "AB".into(),
                tail: 0,
                head: 1,
                length: 5.0,
                speed_limit: None,
            }],
            TagSchedule::single("ALL"),
        )
        .unwrap();
        let dual = build_dual(&g);
        assert_eq!(dual.num_vertices(), 1);
        assert_eq!(dual.num_edges(), 0);
    }

    #[test]
    fn parallel_edges_get_distinct_indices() {
        let mk = |id: &str, t, h| Edge {
            id: id.into(),
            tail: t,
            head: h,
            length: 1.0,
            speed_limit: None,
        };
        let g = RoadGraph::new(
            vec!["a".into(), "b".into()],
            vec![mk("x", 0, 1), mk("y", 0, 1), mk("z", 1, 0)],
            TagSchedule::single("ALL"),
        )
        .unwrap();
        let dual = build_dual(&g);
        assert!(dual.reverse_pair(0, 2) && dual.reverse_pair(1, 2));
        assert!(!dual.reverse_pair(0, 1));
        assert_eq!(dual.in_degree(2), 2);
    }
}
