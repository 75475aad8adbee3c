//! Queries over a diagram: alias classes, contraction of a process's
//! control subtree, and data-source tracing.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::model::{
    Diagram, Edge, EdgeId, EdgeKind, Endpoint, NodeId, OrderMark, TimelineId, TimelineOwner,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    UnknownNode(NodeId),
    NotProcessLike(NodeId),
    NotAHolder(NodeId),
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::UnknownNode(n) => write!(f, "unknown node {n}"),
            GraphError::NotProcessLike(n) => write!(f, "{n} is not process-like"),
            GraphError::NotAHolder(n) => write!(f, "{n} is not a data holder"),
        }
    }
}

impl core::error::Error for GraphError {}

/// Representative (smallest id) of every node's alias-connected component.
/// Nodes without alias edges map to themselves.
pub fn alias_classes(d: &Diagram) -> BTreeMap<NodeId, NodeId> {
    let mut parent: BTreeMap<NodeId, NodeId> = d.nodes().map(|n| (n.id(), n.id())).collect();
    fn find(parent: &mut BTreeMap<NodeId, NodeId>, mut n: NodeId) -> NodeId {
        while parent[&n] != n {
            let up = parent[&parent[&n]];
            parent.insert(n, up);
            n = up;
        }
        n
    }
    for e in d.edges() {
        if let (EdgeKind::Alias(_), Endpoint::Node(b)) = (e.kind, e.dst) {
            let ra = find(&mut parent, e.src);
            let rb = find(&mut parent, b);
            // keep the smaller id as root
            if ra < rb {
                parent.insert(rb, ra);
            } else if rb < ra {
                parent.insert(ra, rb);
            }
        }
    }
    let ids: Vec<NodeId> = parent.keys().copied().collect();
    ids.into_iter()
        .map(|n| (n, find(&mut parent, n)))
        .collect()
}

/// The designated representative of `node`'s alias class.
pub fn alias_canonical(d: &Diagram, node: NodeId) -> NodeId {
    alias_classes(d).get(&node).copied().unwrap_or(node)
}

/// Nodes that have a container, either by a has line or by Euler nesting.
fn owned_nodes(d: &Diagram) -> BTreeSet<NodeId> {
    let mut out: BTreeSet<NodeId> = d.euler().keys().copied().collect();
    for e in d.edges().filter(|e| e.kind == EdgeKind::Has) {
        if let Endpoint::Node(n) = e.dst {
            out.insert(n);
        }
    }
    out
}

fn aliased_nodes(d: &Diagram) -> BTreeSet<NodeId> {
    let mut out = BTreeSet::new();
    for e in d.edges() {
        if let EdgeKind::Alias(_) = e.kind {
            out.insert(e.src);
            if let Endpoint::Node(n) = e.dst {
                out.insert(n);
            }
        }
    }
    out
}

/// Nodes collapsed into `process` by [`contract`], excluding `process`
/// itself: everything dispatched from its timelines, recursively, except
/// nodes that have a container of their own (functions in a module,
/// nested blocks, ...) and nodes that take part in an alias.
pub fn control_interior(d: &Diagram, process: NodeId) -> BTreeSet<NodeId> {
    let owned = owned_nodes(d);
    let aliased = aliased_nodes(d);
    let mut interior = BTreeSet::new();
    let mut queue = VecDeque::from([process]);
    while let Some(owner) = queue.pop_front() {
        for tl in d.timelines_owned_by(owner) {
            for dsp in tl.dispatches() {
                let t = dsp.target;
                if t == process || owned.contains(&t) || aliased.contains(&t) {
                    continue;
                }
                if interior.insert(t) {
                    queue.push_back(t);
                }
            }
        }
    }
    interior
}

fn merge_tokens(into: &mut String, from: &str) {
    let mut set: BTreeSet<&str> = into.split_whitespace().collect();
    set.extend(from.split_whitespace());
    let mut joined = String::new();
    for (i, t) in set.into_iter().enumerate() {
        if i > 0 {
            joined.push(' ');
        }
        joined.push_str(t);
    }
    *into = joined;
}

/// Collapses the control subtree of `process` into that single node.
///
/// Data edges between the collapsed set and the rest of the diagram are
/// re-attached to `process` as abstract flows (creation and destruction
/// keep their kind); duplicates are merged. Edges wholly inside the
/// subtree disappear. Returning lines that start inside it now start at
/// `process`. When dispatches are removed from the node's own timelines
/// those timelines are renumbered 1..k, and returning lines that pointed
/// at a removed rank move to the next surviving position. Ids of
/// surviving elements are kept.
pub fn contract(d: &Diagram, process: NodeId) -> Result<Diagram, GraphError> {
    let node = d.node(process).ok_or(GraphError::UnknownNode(process))?;
    if !node.is_process_like() {
        return Err(GraphError::NotProcessLike(process));
    }
    let interior = control_interior(d, process);
    let collapsed = |n: NodeId| n == process || interior.contains(&n);
    let map = |n: NodeId| if interior.contains(&n) { process } else { n };

    let mut out = d.clone();

    // attributes that record provenance are merged into the survivor
    for key in ["sites", "calls"] {
        let mut acc = String::new();
        for n in core::iter::once(process).chain(interior.iter().copied()) {
            if let Some(v) = d.node(n).and_then(|n| n.attr(key)) {
                merge_tokens(&mut acc, v);
            }
        }
        if !acc.is_empty() {
            out.set_attr(process, key, acc).ok();
        }
    }

    for n in &interior {
        out.nodes.remove(n);
    }

    let removed_timelines: BTreeSet<TimelineId> = d
        .timelines()
        .filter(|t| t.owner_node().is_some_and(|o| interior.contains(&o)))
        .map(|t| t.id())
        .collect();
    for t in &removed_timelines {
        out.timelines.remove(t);
    }
    let mut removed_ranks: BTreeMap<TimelineId, BTreeSet<u32>> = BTreeMap::new();
    for tl in out.timelines.values_mut() {
        let own = matches!(tl.owner, TimelineOwner::Node(o) if o == process);
        let id = tl.id;
        tl.dispatches.retain_mut(|dsp| {
            if !interior.contains(&dsp.target) {
                return true;
            }
            if own {
                removed_ranks.entry(id).or_default().insert(dsp.mark.rank);
                false
            } else {
                dsp.target = process;
                true
            }
        });
    }

    // the collapsed node's own timelines are renumbered 1..k; old ranks
    // (removed ones included) map to the rank that now stands in for them
    let mut rank_map: BTreeMap<TimelineId, BTreeMap<u32, u32>> = BTreeMap::new();
    for (t, removed) in &removed_ranks {
        let tl = out.timelines.get_mut(t).expect("timeline kept");
        let mut map = BTreeMap::new();
        let mut old_ranks: Vec<u32> = tl.dispatches.iter().map(|x| x.mark.rank).collect();
        old_ranks.extend(removed.iter().copied());
        old_ranks.sort_unstable();
        let mut next = 1;
        for r in old_ranks {
            map.insert(r, next);
            if !removed.contains(&r) {
                next += 1;
            }
        }
        map.insert(tl.last_rank().max(removed.iter().copied().max().unwrap_or(0)) + 1, next);
        for dsp in tl.dispatches.iter_mut() {
            let new_rank = map[&dsp.mark.rank];
            if dsp.mark.has_default_label() {
                dsp.mark = OrderMark::new(new_rank);
            } else {
                dsp.mark.rank = new_rank;
            }
        }
        rank_map.insert(*t, map);
    }

    let euler: Vec<(NodeId, NodeId)> = out.euler.iter().map(|(c, p)| (*c, *p)).collect();
    out.euler.clear();
    for (child, parent) in euler {
        if interior.contains(&child) {
            continue;
        }
        let parent = map(parent);
        if parent != child {
            out.euler.insert(child, parent);
        }
    }

    // edges
    let mut new_edges: BTreeMap<EdgeId, Edge> = BTreeMap::new();
    let mut renamed: BTreeMap<EdgeId, EdgeId> = BTreeMap::new();
    let mut seen: BTreeMap<(EdgeKind, NodeId, Endpoint), EdgeId> = BTreeMap::new();
    for e in d.edges() {
        if e.kind == EdgeKind::Gate {
            continue;
        }
        seen.entry((e.kind, e.src, e.dst)).or_insert(e.id);
    }
    let mut emit = |new_edges: &mut BTreeMap<EdgeId, Edge>,
                    renamed: &mut BTreeMap<EdgeId, EdgeId>,
                    e: &Edge,
                    kind: EdgeKind,
                    src: NodeId,
                    dst: Endpoint| {
        let key = (kind, src, dst);
        match seen.get(&key) {
            Some(&existing) if existing != e.id && new_edges.contains_key(&existing) => {
                renamed.insert(e.id, existing);
            }
            _ => {
                seen.insert(key, e.id);
                new_edges.insert(
                    e.id,
                    Edge {
                        id: e.id,
                        kind,
                        src,
                        dst,
                    },
                );
                renamed.insert(e.id, e.id);
            }
        }
    };

    for e in d.edges() {
        let src_in = collapsed(e.src);
        let dst_node = e.dst.node();
        let dst_in = dst_node.is_some_and(collapsed);
        match e.kind {
            EdgeKind::Gate => {}
            EdgeKind::DataUpdate | EdgeKind::DataRead | EdgeKind::DataFlow => {
                if !src_in && !dst_in {
                    emit(&mut new_edges, &mut renamed, e, e.kind, e.src, e.dst);
                } else if src_in && dst_in {
                    // internal to the collapsed node
                } else {
                    let dst = dst_node.map_or(e.dst, |n| Endpoint::Node(map(n)));
                    emit(&mut new_edges, &mut renamed, e, EdgeKind::DataFlow, map(e.src), dst);
                }
            }
            EdgeKind::ControlReturn => {
                let dst = match e.dst {
                    Endpoint::TimelinePos(t, rank) => {
                        if removed_timelines.contains(&t) {
                            continue;
                        }
                        match rank_map.get(&t) {
                            Some(m) => Endpoint::TimelinePos(t, m.get(&rank).copied().unwrap_or(rank)),
                            None => e.dst,
                        }
                    }
                    other => other,
                };
                emit(&mut new_edges, &mut renamed, e, e.kind, map(e.src), dst);
            }
            _ => {
                if !src_in && !dst_in {
                    emit(&mut new_edges, &mut renamed, e, e.kind, e.src, e.dst);
                    continue;
                }
                let src = map(e.src);
                let dst = dst_node.map_or(e.dst, |n| Endpoint::Node(map(n)));
                let was_loop = Endpoint::Node(e.src) == e.dst;
                if Endpoint::Node(src) == dst && !was_loop {
                    continue;
                }
                emit(&mut new_edges, &mut renamed, e, e.kind, src, dst);
            }
        }
    }

    // gates follow their targets; a gate whose target vanished goes too
    let gates: Vec<&Edge> = d.edges().filter(|e| e.kind == EdgeKind::Gate).collect();
    let gate_ids: BTreeSet<EdgeId> = gates.iter().map(|g| g.id).collect();
    let mut dropped: BTreeSet<EdgeId> = BTreeSet::new();
    loop {
        let mut changed = false;
        for g in &gates {
            if dropped.contains(&g.id) {
                continue;
            }
            if let Endpoint::EdgeRef(t) = g.dst {
                let gone = if gate_ids.contains(&t) {
                    dropped.contains(&t)
                } else {
                    !renamed.contains_key(&t)
                };
                if gone {
                    dropped.insert(g.id);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    for g in gates {
        if dropped.contains(&g.id) {
            continue;
        }
        let dst = match g.dst {
            Endpoint::EdgeRef(t) if !gate_ids.contains(&t) => Endpoint::EdgeRef(renamed[&t]),
            Endpoint::Node(n) => Endpoint::Node(map(n)),
            other => other,
        };
        new_edges.insert(
            g.id,
            Edge {
                id: g.id,
                kind: g.kind,
                src: map(g.src),
                dst,
            },
        );
    }
    out.edges = new_edges;
    Ok(out)
}

/// Every node whose information can reach `holder` along updates and
/// abstract flows (a path of at least one edge).
pub fn data_sources(d: &Diagram, holder: NodeId) -> Result<BTreeSet<NodeId>, GraphError> {
    let node = d.node(holder).ok_or(GraphError::UnknownNode(holder))?;
    if !node.is_holder() {
        return Err(GraphError::NotAHolder(holder));
    }
    let mut preds: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for e in d.edges() {
        if matches!(e.kind, EdgeKind::DataUpdate | EdgeKind::DataFlow) {
            if let Endpoint::Node(dst) = e.dst {
                preds.entry(dst).or_default().push(e.src);
            }
        }
    }
    let mut seen = BTreeSet::new();
    let mut queue: VecDeque<NodeId> = preds.get(&holder).cloned().unwrap_or_default().into();
    while let Some(n) = queue.pop_front() {
        if seen.insert(n) {
            if let Some(ps) = preds.get(&n) {
                queue.extend(ps.iter().copied());
            }
        }
    }
    Ok(seen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{HolderKind, NodeKind, NodeSpec, OrderMark, TimelineSpec};
    use crate::validate::validate;

    fn p(d: &mut Diagram, ident: &str) -> NodeId {
        d.add_node(NodeSpec::new(NodeKind::Process).ident(ident)).unwrap()
    }
    fn h(d: &mut Diagram, ident: &str) -> NodeId {
        d.add_node(NodeSpec::holder(HolderKind::Stack).ident(ident)).unwrap()
    }

    #[test]
    fn singleton_alias_class() {
        let mut d = Diagram::new();
        let a = p(&mut d, "A");
        assert_eq!(alias_canonical(&d, a), a);
    }

    #[test]
    fn alias_chain_maps_to_first() {
        let mut d = Diagram::new();
        let f = p(&mut d, "F");
        let f1 = p(&mut d, "F1");
        let f2 = p(&mut d, "F2");
        d.add_edge(EdgeKind::Alias(3), f2, f1).unwrap();
        d.add_edge(EdgeKind::Alias(3), f1, f).unwrap();
        for n in [f, f1, f2] {
            assert_eq!(alias_canonical(&d, n), f);
            assert_eq!(alias_canonical(&d, alias_canonical(&d, n)), f);
        }
    }

    #[test]
    fn contract_leaf_abstracts_kinds() {
        let mut d = Diagram::new();
        let a = p(&mut d, "A");
        let x = h(&mut d, "x");
        let y = h(&mut d, "y");
        d.add_edge(EdgeKind::DataRead, x, a).unwrap();
        d.add_edge(EdgeKind::DataUpdate, a, y).unwrap();
        let c = contract(&d, a).unwrap();
        assert_eq!(c.node_count(), 3);
        let kinds: Vec<_> = c.edges().map(|e| (e.kind, e.src, e.dst)).collect();
        assert_eq!(
            kinds,
            [
                (EdgeKind::DataFlow, x, Endpoint::Node(a)),
                (EdgeKind::DataFlow, a, Endpoint::Node(y)),
            ]
        );
    }

    #[test]
    fn contract_unions_sub_block_io() {
        let mut d = Diagram::new();
        let main = p(&mut d, "main");
        let s1 = p(&mut d, "s1");
        let s2 = p(&mut d, "s2");
        let x = h(&mut d, "X");
        let y = h(&mut d, "Y");
        let z = h(&mut d, "Z");
        let t = d.add_timeline(TimelineSpec::on(main)).unwrap();
        d.append_dispatch(t, OrderMark::new(1), s1).unwrap();
        d.append_dispatch(t, OrderMark::new(2), s2).unwrap();
        d.add_edge(EdgeKind::DataRead, x, s1).unwrap();
        d.add_edge(EdgeKind::DataRead, y, s2).unwrap();
        d.add_edge(EdgeKind::DataUpdate, s1, z).unwrap();
        d.add_edge(EdgeKind::DataUpdate, s2, z).unwrap();
        let c = contract(&d, main).unwrap();
        assert!(c.node(s1).is_none() && c.node(s2).is_none());
        let ins: BTreeSet<_> = c
            .edges()
            .filter(|e| e.dst == Endpoint::Node(main))
            .map(|e| e.src)
            .collect();
        let outs: Vec<_> = c.edges().filter(|e| e.src == main).map(|e| e.dst).collect();
        assert_eq!(ins, BTreeSet::from([x, y]));
        assert_eq!(outs, [Endpoint::Node(z)]);
        assert!(c.timeline(t).unwrap().dispatches().is_empty());
        assert!(validate(&c).is_empty());
        assert_eq!(contract(&c, main).unwrap(), c);
        // input untouched
        assert_eq!(d.node_count(), 6);
    }

    #[test]
    fn contract_rejects_holders() {
        let mut d = Diagram::new();
        let x = h(&mut d, "x");
        assert_eq!(contract(&d, x), Err(GraphError::NotProcessLike(x)));
    }

    #[test]
    fn data_sources_chain() {
        let mut d = Diagram::new();
        let a = h(&mut d, "a");
        let b = h(&mut d, "b");
        let c = h(&mut d, "c");
        assert!(data_sources(&d, c).unwrap().is_empty());
        d.add_edge(EdgeKind::DataFlow, a, b).unwrap();
        d.add_edge(EdgeKind::DataFlow, b, c).unwrap();
        assert_eq!(data_sources(&d, c).unwrap(), BTreeSet::from([a, b]));
        let q = p(&mut d, "q");
        assert_eq!(data_sources(&d, q), Err(GraphError::NotAHolder(q)));
    }
}
