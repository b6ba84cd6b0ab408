//! Planar road network, shortest-path travel times and skim matrices.
//!
//! Networks are directed graphs with edge traversal time `length / speed`.
//! They are read from two CSV files (`nodes.csv`: `id,x,y`, `edges.csv`:
//! `from,to,length_m,speed_mps`) or generated as a 4-neighbour lattice.

use std::cmp::Ordering;
use std::collections::{hash_map::Entry, BinaryHeap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = u64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    #[serde(rename = "length_m")]
    pub length: f64,
    #[serde(rename = "speed_mps")]
    pub speed: f64,
}

impl Edge {
    pub fn travel_time(&self) -> f64 {
        self.length / self.speed
    }
}

/// Shortest path cost between two nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathCost {
    /// seconds
    pub time: f64,
    /// meters
    pub length: f64,
}

#[derive(Clone, Debug)]
struct Arc {
    head: usize,
    time: f64,
    length: f64,
}

#[derive(Clone, Debug)]
pub struct Network {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    center: (f64, f64),
    index: HashMap<NodeId, usize>,
    out_arcs: Vec<Vec<Arc>>,
    warnings: Vec<String>,
}

impl Network {
    /// Builds and validates a network. The center defaults to the node centroid.
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if !(node.x.is_finite() && node.y.is_finite()) {
                return Err(Error::InvalidNetwork(format!(
                    "node {} has non-finite coordinates",
                    node.id
                )));
            }
            if index.insert(node.id, i).is_some() {
                return Err(Error::DuplicateNode(node.id));
            }
        }

        let mut out_arcs = vec![Vec::new(); nodes.len()];
        for edge in &edges {
            let tail = *index.get(&edge.from).ok_or(Error::DanglingEdge {
                from: edge.from,
                to: edge.to,
                missing: edge.from,
            })?;
            let head = *index.get(&edge.to).ok_or(Error::DanglingEdge {
                from: edge.from,
                to: edge.to,
                missing: edge.to,
            })?;
            let time = edge.travel_time();
            if !(edge.length > 0.0 && edge.speed > 0.0 && time.is_finite()) {
                return Err(Error::InvalidNetwork(format!(
                    "edge {}->{} must have positive finite length and speed",
                    edge.from, edge.to
                )));
            }
            out_arcs[tail].push(Arc {
                head,
                time,
                length: edge.length,
            });
        }

        let center = centroid(&nodes);
        let mut net = Network {
            nodes,
            edges,
            center,
            index,
            out_arcs,
            warnings: Vec::new(),
        };
        let sizes = net.component_sizes();
        if sizes.len() > 1 {
            net.warnings.push(format!(
                "network is not strongly connected: component sizes {:?}",
                sizes
            ));
        }
        Ok(net)
    }

    pub fn with_center(mut self, x: f64, y: f64) -> Self {
        self.center = (x, y);
        self
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn center(&self) -> (f64, f64) {
        self.center
    }

    /// Validation warnings gathered at construction (e.g. disconnected parts).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.index.get(&id).map(|&i| &self.nodes[i])
    }

    pub fn distance_to_center(&self, id: NodeId) -> Option<f64> {
        self.node(id).map(|n| {
            let (cx, cy) = self.center;
            (n.x - cx).hypot(n.y - cy)
        })
    }

    /// Largest distance of any node from the center.
    pub fn radius(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| (n.x - self.center.0).hypot(n.y - self.center.1))
            .fold(0.0, f64::max)
    }

    fn idx(&self, id: NodeId) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::UnknownNode(id))
    }

    /// Single-source shortest paths by time; ties on time are broken by length.
    /// `None` marks unreachable nodes.
    pub fn shortest_paths_from(&self, source: NodeId) -> Result<Vec<Option<PathCost>>> {
        let src = self.idx(source)?;
        Ok(self.dijkstra(src))
    }

    fn dijkstra(&self, src: usize) -> Vec<Option<PathCost>> {
        let mut best: Vec<Option<PathCost>> = vec![None; self.nodes.len()];
        let mut settled = vec![false; self.nodes.len()];
        let mut heap = BinaryHeap::new();
        best[src] = Some(PathCost { time: 0.0, length: 0.0 });
        heap.push(Frontier {
            time: 0.0,
            length: 0.0,
            node: src,
        });
        while let Some(Frontier { time, length, node }) = heap.pop() {
            if settled[node] {
                continue;
            }
            settled[node] = true;
            for arc in &self.out_arcs[node] {
                if settled[arc.head] {
                    continue;
                }
                let cand = PathCost {
                    time: time + arc.time,
                    length: length + arc.length,
                };
                let improves = match best[arc.head] {
                    None => true,
                    Some(cur) => cost_cmp(&cand, &cur) == Ordering::Less,
                };
                if improves {
                    best[arc.head] = Some(cand);
                    heap.push(Frontier {
                        time: cand.time,
                        length: cand.length,
                        node: arc.head,
                    });
                }
            }
        }
        best
    }

    /// Shortest travel time and length from `a` to `b`.
    pub fn shortest_path(&self, a: NodeId, b: NodeId) -> Result<PathCost> {
        let target = self.idx(b)?;
        self.shortest_paths_from(a)?[target].ok_or(Error::Unreachable { from: a, to: b })
    }

    /// Shortest travel time in seconds; unreachable pairs are an error, never a sentinel.
    pub fn shortest_travel_time(&self, a: NodeId, b: NodeId) -> Result<f64> {
        self.shortest_path(a, b).map(|c| c.time)
    }

    /// Pairwise shortest times among `ids` only.
    pub fn build_skim(&self, ids: &[NodeId]) -> Result<SkimMatrix> {
        let mut order: Vec<NodeId> = Vec::with_capacity(ids.len());
        let mut index = HashMap::with_capacity(ids.len());
        for &id in ids {
            self.idx(id)?;
            if let Entry::Vacant(e) = index.entry(id) {
                e.insert(order.len());
                order.push(id);
            }
        }
        let n = order.len();
        let mut times = vec![None; n * n];
        for (row, &id) in order.iter().enumerate() {
            let dist = self.dijkstra(self.index[&id]);
            for (col, &other) in order.iter().enumerate() {
                times[row * n + col] = dist[self.index[&other]].map(|c| c.time);
            }
        }
        Ok(SkimMatrix {
            ids: order,
            index,
            times,
        })
    }

    /// Sizes of strongly connected components, largest first.
    pub fn component_sizes(&self) -> Vec<usize> {
        let n = self.nodes.len();
        let mut reverse = vec![Vec::new(); n];
        for (tail, arcs) in self.out_arcs.iter().enumerate() {
            for arc in arcs {
                reverse[arc.head].push(tail);
            }
        }
        // Kosaraju: finishing order on forward graph, then sweep the reverse graph.
        let mut visited = vec![false; n];
        let mut order = Vec::with_capacity(n);
        for start in 0..n {
            if visited[start] {
                continue;
            }
            visited[start] = true;
            let mut stack = vec![(start, 0usize)];
            while let Some((v, next)) = stack.pop() {
                if let Some(arc) = self.out_arcs[v].get(next) {
                    stack.push((v, next + 1));
                    if !visited[arc.head] {
                        visited[arc.head] = true;
                        stack.push((arc.head, 0));
                    }
                } else {
                    order.push(v);
                }
            }
        }
        let mut comp = vec![usize::MAX; n];
        let mut sizes = Vec::new();
        for &root in order.iter().rev() {
            if comp[root] != usize::MAX {
                continue;
            }
            let id = sizes.len();
            let mut size = 0;
            let mut stack = vec![root];
            comp[root] = id;
            while let Some(v) = stack.pop() {
                size += 1;
                for &u in &reverse[v] {
                    if comp[u] == usize::MAX {
                        comp[u] = id;
                        stack.push(u);
                    }
                }
            }
            sizes.push(size);
        }
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }
}

fn centroid(nodes: &[Node]) -> (f64, f64) {
    if nodes.is_empty() {
        return (0.0, 0.0);
    }
    let n = nodes.len() as f64;
    let (sx, sy) = nodes
        .iter()
        .fold((0.0, 0.0), |(sx, sy), node| (sx + node.x, sy + node.y));
    (sx / n, sy / n)
}

fn cost_cmp(a: &PathCost, b: &PathCost) -> Ordering {
    a.time.total_cmp(&b.time).then_with(|| a.length.total_cmp(&b.length))
}

#[derive(Debug)]
struct Frontier {
    time: f64,
    length: f64,
    node: usize,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Frontier {}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frontier {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.length.total_cmp(&self.length))
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Shortest travel times among a fixed set of nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct SkimMatrix {
    ids: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    times: Vec<Option<f64>>,
}

impl SkimMatrix {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn node_ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    /// Entry for an ordered pair; `None` when unreachable or not part of the skim.
    pub fn get(&self, a: NodeId, b: NodeId) -> Option<f64> {
        let (i, j) = (self.index_of(a)?, self.index_of(b)?);
        self.at(i, j)
    }

    /// Entry by matrix position.
    pub fn at(&self, i: usize, j: usize) -> Option<f64> {
        self.times[i * self.ids.len() + j]
    }

    pub fn travel_time(&self, a: NodeId, b: NodeId) -> Result<f64> {
        let i = self.index_of(a).ok_or(Error::UnknownNode(a))?;
        let j = self.index_of(b).ok_or(Error::UnknownNode(b))?;
        self.at(i, j).ok_or(Error::Unreachable { from: a, to: b })
    }
}

/// 4-neighbour lattice with bidirectional edges. Node `r * cols + c` sits at
/// `(c * spacing, r * spacing)`; the center is the geometric lattice center.
pub fn generate_grid(rows: usize, cols: usize, spacing: f64, speed: f64) -> Result<Network> {
    if rows < 2 || cols < 2 {
        return Err(Error::config("rows/cols", "grid needs at least 2 rows and 2 columns"));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::config("spacing", "must be positive"));
    }
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(Error::config("speed", "must be positive"));
    }
    let id = |r: usize, c: usize| (r * cols + c) as NodeId;
    let mut nodes = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            nodes.push(Node {
                id: id(r, c),
                x: c as f64 * spacing,
                y: r as f64 * spacing,
            });
        }
    }
    let mut edges = Vec::with_capacity(2 * (rows * (cols - 1) + cols * (rows - 1)));
    let mut link = |a: NodeId, b: NodeId| {
        for (from, to) in [(a, b), (b, a)] {
            edges.push(Edge {
                from,
                to,
                length: spacing,
                speed,
            });
        }
    };
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                link(id(r, c), id(r, c + 1));
            }
            if r + 1 < rows {
                link(id(r, c), id(r + 1, c));
            }
        }
    }
    let center = ((cols - 1) as f64 * spacing / 2.0, (rows - 1) as f64 * spacing / 2.0);
    Ok(Network::new(nodes, edges)?.with_center(center.0, center.1))
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let name = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::malformed(&name, 0, format!("{:?}", other)),
        })?;
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        rows.push(record.map_err(|e| Error::from_csv(&name, e))?);
    }
    Ok(rows)
}

/// Reads `nodes.csv` / `edges.csv` and validates the result.
pub fn load_network(nodes_file: &Path, edges_file: &Path) -> Result<Network> {
    let nodes: Vec<Node> = read_rows(nodes_file)?;
    let edges: Vec<Edge> = read_rows(edges_file)?;
    Network::new(nodes, edges)
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let name = path.display().to_string();
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::from_csv(&name, e))?;
    writer.write_record(header).map_err(|e| Error::from_csv(&name, e))?;
    for row in rows {
        writer.serialize(row).map_err(|e| Error::from_csv(&name, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn save_network(net: &Network, nodes_file: &Path, edges_file: &Path) -> Result<()> {
    write_rows(nodes_file, net.nodes(), &["id", "x", "y"])?;
    write_rows(edges_file, net.edges(), &["from", "to", "length_m", "speed_mps"])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn single_edge_network() {
        let nodes = vec![
            Node { id: 1, x: 0.0, y: 0.0 },
            Node {
                id: 2,
                x: 600.0,
                y: 0.0,
            },
        ];
        let edges = vec![Edge {
            from: 1,
            to: 2,
            length: 600.0,
            speed: 10.0,
        }];
        let net = Network::new(nodes, edges).unwrap();
        assert_eq!(net.shortest_travel_time(1, 2).unwrap(), 60.0);
        assert_eq!(net.center(), (300.0, 0.0));
        assert!(matches!(
            net.shortest_travel_time(2, 1),
            Err(Error::Unreachable { from: 2, to: 1 })
        ));
        assert!(!net.warnings().is_empty());
    }

    #[test]
    fn duplicate_and_dangling_are_rejected() {
        let dup = vec![Node { id: 7, x: 0.0, y: 0.0 }, Node { id: 7, x: 1.0, y: 0.0 }];
        let err = Network::new(dup, vec![]).unwrap_err();
        assert_eq!(err.to_string(), "duplicate node id 7");

        let nodes = vec![Node { id: 1, x: 0.0, y: 0.0 }];
        let edges = vec![Edge {
            from: 1,
            to: 9,
            length: 1.0,
            speed: 1.0,
        }];
        assert!(matches!(
            Network::new(nodes, edges),
            Err(Error::DanglingEdge { missing: 9, .. })
        ));
    }

    #[test]
    fn zero_length_edge_is_rejected() {
        let nodes = vec![Node { id: 1, x: 0.0, y: 0.0 }, Node { id: 2, x: 0.0, y: 0.0 }];
        let edges = vec![Edge {
            from: 1,
            to: 2,
            length: 0.0,
            speed: 1.0,
        }];
        assert!(matches!(Network::new(nodes, edges), Err(Error::InvalidNetwork(_))));
    }

    #[test]
    fn grid_sizes_and_times() {
        let g = generate_grid(2, 2, 600.0, 10.0).unwrap();
        assert_eq!(g.nodes().len(), 4);
        assert_eq!(g.edges().len(), 8);
        assert!(g.edges().iter().all(|e| e.travel_time() == 60.0));

        let g = generate_grid(2, 5, 100.0, 5.0).unwrap();
        assert_eq!(g.nodes().len(), 10);
        assert_eq!(g.edges().len(), 26);

        let g = generate_grid(3, 3, 600.0, 10.0).unwrap();
        assert_eq!(g.center(), (600.0, 600.0));
        assert_eq!(g.shortest_travel_time(0, 8).unwrap(), 240.0);
        assert_eq!(g.shortest_travel_time(4, 4).unwrap(), 0.0);
        assert_eq!(g.shortest_travel_time(0, 1).unwrap(), 60.0);
        assert_eq!(g.shortest_travel_time(4, 0).unwrap(), 120.0);
        assert_eq!(g.shortest_path(4, 0).unwrap().length, 1200.0);
        assert!(g.warnings().is_empty());
    }

    #[test]
    fn grid_preconditions() {
        assert!(generate_grid(1, 5, 1.0, 1.0).is_err());
        assert!(generate_grid(2, 2, 0.0, 1.0).is_err());
        assert!(generate_grid(2, 2, 1.0, -1.0).is_err());
    }

    #[test]
    fn skim_small_cases() {
        let g = generate_grid(3, 3, 600.0, 10.0).unwrap();
        let s = g.build_skim(&[4]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.get(4, 4), Some(0.0));

        let s = g.build_skim(&[0, 1]).unwrap();
        assert_eq!(s.get(0, 1), Some(60.0));
        assert_eq!(s.get(1, 0), Some(60.0));
        assert!(matches!(g.build_skim(&[0, 99]), Err(Error::UnknownNode(99))));
    }

    #[test]
    fn skim_flags_unreachable_entries() {
        let nodes = vec![Node { id: 1, x: 0.0, y: 0.0 }, Node { id: 2, x: 1.0, y: 0.0 }];
        let edges = vec![Edge {
            from: 1,
            to: 2,
            length: 1.0,
            speed: 1.0,
        }];
        let net = Network::new(nodes, edges).unwrap();
        let s = net.build_skim(&[1, 2]).unwrap();
        assert_eq!(s.get(1, 2), Some(1.0));
        assert_eq!(s.get(2, 1), None);
        assert!(s.travel_time(2, 1).is_err());
    }

    #[test]
    fn malformed_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = dir.path().join("nodes.csv");
        let edges = dir.path().join("edges.csv");
        let mut f = std::fs::File::create(&nodes).unwrap();
        writeln!(f, "id,x,y\n1,0,0\n2,abc,0").unwrap();
        std::fs::write(&edges, "from,to,length_m,speed_mps\n").unwrap();
        let err = load_network(&nodes, &edges).unwrap_err();
        match err {
            Error::Malformed { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn scc_sizes() {
        let g = generate_grid(3, 4, 1.0, 1.0).unwrap();
        assert_eq!(g.component_sizes(), vec![12]);
    }
}
