//! Semantic validation against the closed rule set.
//!
//! | code     | rule |
//! |----------|------|
//! | R-CTL-01 | control (dispatch, parallel, exception) only between process-like nodes; an OR join may carry control |
//! | R-CTL-02 | a returning line must end on an existing timeline position |
//! | R-DAT-01 | update: process-like source, holder destination |
//! | R-DAT-02 | read: holder source, process-like destination |
//! | R-DAT-03 | abstract flow never touches a comment, mark or OR join |
//! | R-CRE-01 | create/destroy: process-like source, holder destination |
//! | R-REF-01 | references leave address holders, at most one per referenced entity |
//! | R-HAS-01 | the has relation (alone or mixed with Euler containment) is acyclic |
//! | R-EUL-01 | Euler containment is a forest |
//! | R-MIX-01 | a part has a single container whether drawn by has line or by nesting |
//! | R-ALI-01 | aliases join nodes of one kind and count at least 1 |
//! | R-ORJ-01 | an OR join has no data edges and fans out to at least two paths |
//! | R-GTE-01 | a gate runs from a process onto a data or parallel-control edge |
//! | R-CMT-01 | comment attachments start at a comment |
//! | R-TLM-01 | a timeline is not both stopped and done, and its ranks increase |
//! | R-END-01 | timeline positions and edge references appear only where allowed |

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::model::{
    Diagram, DiagramNode, Edge, EdgeKind, Endpoint, HolderKind, Marker, NodeId, NodeKind,
    TimelineOwner,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleCode {
    Ctl01,
    Ctl02,
    Dat01,
    Dat02,
    Dat03,
    Cre01,
    Ref01,
    Has01,
    Eul01,
    Mix01,
    Ali01,
    Orj01,
    Gte01,
    Cmt01,
    Tlm01,
    End01,
}

impl RuleCode {
    pub const ALL: [RuleCode; 16] = [
        RuleCode::Ctl01,
        RuleCode::Ctl02,
        RuleCode::Dat01,
        RuleCode::Dat02,
        RuleCode::Dat03,
        RuleCode::Cre01,
        RuleCode::Ref01,
        RuleCode::Has01,
        RuleCode::Eul01,
        RuleCode::Mix01,
        RuleCode::Ali01,
        RuleCode::Orj01,
        RuleCode::Gte01,
        RuleCode::Cmt01,
        RuleCode::Tlm01,
        RuleCode::End01,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleCode::Ctl01 => "R-CTL-01",
            RuleCode::Ctl02 => "R-CTL-02",
            RuleCode::Dat01 => "R-DAT-01",
            RuleCode::Dat02 => "R-DAT-02",
            RuleCode::Dat03 => "R-DAT-03",
            RuleCode::Cre01 => "R-CRE-01",
            RuleCode::Ref01 => "R-REF-01",
            RuleCode::Has01 => "R-HAS-01",
            RuleCode::Eul01 => "R-EUL-01",
            RuleCode::Mix01 => "R-MIX-01",
            RuleCode::Ali01 => "R-ALI-01",
            RuleCode::Orj01 => "R-ORJ-01",
            RuleCode::Gte01 => "R-GTE-01",
            RuleCode::Cmt01 => "R-CMT-01",
            RuleCode::Tlm01 => "R-TLM-01",
            RuleCode::End01 => "R-END-01",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for RuleCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule_code: RuleCode,
    pub message: String,
    /// Whole timelines are referenced as position 0.
    pub subject: Vec<Endpoint>,
}

impl Violation {
    /// One-line report: code, message, subjects by identifier.
    pub fn render(&self, d: &Diagram) -> String {
        let subjects: Vec<String> = self.subject.iter().map(|ep| d.describe(*ep)).collect();
        format!("{} {} [{}]", self.rule_code, self.message, subjects.join(", "))
    }
}

struct Checker<'a> {
    d: &'a Diagram,
    out: Vec<Violation>,
}

impl Checker<'_> {
    fn push(&mut self, rule_code: RuleCode, message: String, subject: Vec<Endpoint>) {
        self.out.push(Violation {
            rule_code,
            message,
            subject,
        });
    }

    fn name(&self, ep: Endpoint) -> String {
        self.d.describe(ep)
    }

    fn node(&self, ep: Endpoint) -> Option<&DiagramNode> {
        ep.node().and_then(|n| self.d.node(n))
    }
}

fn carries_control(n: &DiagramNode) -> bool {
    n.is_process_like() || n.kind() == NodeKind::OrJoin
}

/// Checks every rule and returns the violations sorted by rule code and
/// subjects. An empty list means the diagram conforms.
pub fn validate(d: &Diagram) -> Vec<Violation> {
    let mut c = Checker { d, out: Vec::new() };
    check_timelines(&mut c);
    check_edges(&mut c);
    check_orjoins(&mut c);
    check_part_of(&mut c);
    let mut out = c.out;
    out.sort_by(|a, b| {
        (a.rule_code, &a.subject, &a.message).cmp(&(b.rule_code, &b.subject, &b.message))
    });
    out
}

fn check_timelines(c: &mut Checker<'_>) {
    for tl in c.d.timelines() {
        let whole = Endpoint::TimelinePos(tl.id(), 0);
        if tl.markers().contains(&Marker::Stop) && tl.markers().contains(&Marker::Done) {
            let msg = format!("timeline {} is marked both stop and done", tl.ident());
            c.push(RuleCode::Tlm01, msg, vec![whole]);
        }
        for pair in tl.dispatches().windows(2) {
            if pair[1].mark.rank <= pair[0].mark.rank {
                let msg = format!(
                    "timeline {} rank {} does not exceed {}",
                    tl.ident(),
                    pair[1].mark.rank,
                    pair[0].mark.rank
                );
                c.push(RuleCode::Tlm01, msg, vec![whole]);
            }
        }
        if let TimelineOwner::Node(owner) = tl.owner() {
            if c.d.node(*owner).is_some_and(|n| !n.is_process_like()) {
                let msg = format!(
                    "timeline {} is owned by {}, which is not process-like",
                    tl.ident(),
                    c.name(Endpoint::Node(*owner))
                );
                c.push(RuleCode::Ctl01, msg, vec![Endpoint::Node(*owner), whole]);
            }
        }
        for dsp in tl.dispatches() {
            let target = Endpoint::Node(dsp.target);
            if c.node(target).is_some_and(|n| !carries_control(n)) {
                let msg = format!(
                    "dispatch target {} on {} is not process-like",
                    c.name(target),
                    tl.ident()
                );
                c.push(
                    RuleCode::Ctl01,
                    msg,
                    vec![Endpoint::TimelinePos(tl.id(), dsp.mark.rank), target],
                );
            }
        }
    }
}

fn check_edges(c: &mut Checker<'_>) {
    let mut refs: BTreeSet<(NodeId, Endpoint)> = BTreeSet::new();
    for e in c.d.edges() {
        let src_ep = Endpoint::Node(e.src);
        let subject = vec![src_ep, e.dst];
        let Some(src) = c.d.node(e.src) else { continue };

        // positions and edge references belong to returns and gates only
        match e.kind {
            EdgeKind::ControlReturn | EdgeKind::Gate => {}
            _ => {
                if e.dst.node().is_none() {
                    let msg = format!(
                        "{} edge from {} cannot end on {}",
                        e.kind.style_key(),
                        c.name(src_ep),
                        c.name(e.dst)
                    );
                    c.push(RuleCode::End01, msg, subject);
                    continue;
                }
            }
        }
        let dst = c.node(e.dst);

        match e.kind {
            EdgeKind::ControlPar | EdgeKind::ExceptionCtl => {
                let ok = |n: &DiagramNode| {
                    if e.kind == EdgeKind::ControlPar {
                        carries_control(n)
                    } else {
                        n.is_process_like()
                    }
                };
                if !ok(src) || dst.is_some_and(|n| !ok(n)) {
                    let msg = format!(
                        "control line {} -> {} joins a non-process",
                        c.name(src_ep),
                        c.name(e.dst)
                    );
                    c.push(RuleCode::Ctl01, msg, subject);
                }
            }
            EdgeKind::ControlReturn => match e.dst {
                Endpoint::TimelinePos(t, rank) => {
                    let present = c.d.timeline(t).is_some_and(|tl| tl.has_position(rank));
                    if !present {
                        let msg = format!("return target {} is not a timeline position", c.name(e.dst));
                        c.push(RuleCode::Ctl02, msg, subject);
                    } else if !src.is_process_like() {
                        let msg = format!("returning block {} is not process-like", c.name(src_ep));
                        c.push(RuleCode::Ctl01, msg, subject);
                    }
                }
                _ => {
                    let msg = format!("return from {} must end on a timeline position", c.name(src_ep));
                    c.push(RuleCode::Ctl02, msg, subject);
                }
            },
            EdgeKind::DataUpdate => {
                if !src.is_process_like() || !dst.is_some_and(DiagramNode::is_holder) {
                    let msg = format!(
                        "update {} -> {} must run from a process to a holder",
                        c.name(src_ep),
                        c.name(e.dst)
                    );
                    c.push(RuleCode::Dat01, msg, subject);
                }
            }
            EdgeKind::DataRead => {
                if !src.is_holder() || !dst.is_some_and(DiagramNode::is_process_like) {
                    let msg = format!(
                        "read {} -> {} must run from a holder to a process",
                        c.name(src_ep),
                        c.name(e.dst)
                    );
                    c.push(RuleCode::Dat02, msg, subject);
                }
            }
            EdgeKind::DataFlow => {
                let bad = |n: &DiagramNode| {
                    matches!(n.kind(), NodeKind::Comment | NodeKind::Mark | NodeKind::OrJoin)
                };
                if bad(src) || dst.is_some_and(bad) {
                    let msg = format!(
                        "data flow {} -> {} touches a comment, mark or OR join",
                        c.name(src_ep),
                        c.name(e.dst)
                    );
                    c.push(RuleCode::Dat03, msg, subject);
                }
            }
            EdgeKind::Create | EdgeKind::Destroy => {
                if !src.is_process_like() || !dst.is_some_and(DiagramNode::is_holder) {
                    let msg = format!(
                        "{} {} -> {} must run from a process to a holder",
                        e.kind.style_key(),
                        c.name(src_ep),
                        c.name(e.dst)
                    );
                    c.push(RuleCode::Cre01, msg, subject);
                }
            }
            EdgeKind::Ref => {
                if src.kind() != NodeKind::Holder(HolderKind::Address) {
                    let msg = format!("reference from {} which is not an address holder", c.name(src_ep));
                    c.push(RuleCode::Ref01, msg, subject);
                } else if !refs.insert((e.src, e.dst)) {
                    let msg = format!(
                        "address {} references {} more than once",
                        c.name(src_ep),
                        c.name(e.dst)
                    );
                    c.push(RuleCode::Ref01, msg, subject);
                }
            }
            EdgeKind::Alias(count) => {
                if count < 1 || dst.is_some_and(|n| n.kind() != src.kind()) {
                    let msg = format!(
                        "alias {} ~~ {} joins different kinds or has count {count}",
                        c.name(src_ep),
                        c.name(e.dst)
                    );
                    c.push(RuleCode::Ali01, msg, subject);
                }
            }
            EdgeKind::CommentAttach => {
                if src.kind() != NodeKind::Comment {
                    let msg = format!("comment attachment from {} which is not a comment", c.name(src_ep));
                    c.push(RuleCode::Cmt01, msg, subject);
                }
            }
            EdgeKind::Gate => {
                let target_ok = match e.dst {
                    Endpoint::EdgeRef(t) => c.d.edge(t).is_some_and(|g| {
                        g.kind.is_data() || g.kind == EdgeKind::ControlPar
                    }),
                    _ => false,
                };
                if !target_ok || !src.is_process_like() {
                    let msg = format!(
                        "gate {} -> {} must run from a process onto a data or parallel edge",
                        c.name(src_ep),
                        c.name(e.dst)
                    );
                    c.push(RuleCode::Gte01, msg, subject);
                }
            }
            EdgeKind::Has | EdgeKind::Is => {}
        }
    }
}

fn check_orjoins(c: &mut Checker<'_>) {
    for n in c.d.nodes().filter(|n| n.kind() == NodeKind::OrJoin) {
        let ep = Endpoint::Node(n.id());
        let touches = |e: &&Edge| e.src == n.id() || e.dst == ep;
        let data = c
            .d
            .edges()
            .filter(touches)
            .filter(|e| e.kind.is_data() || matches!(e.kind, EdgeKind::Create | EdgeKind::Destroy))
            .count();
        let fanout = c
            .d
            .edges()
            .filter(|e| e.kind == EdgeKind::ControlPar && e.src == n.id())
            .count();
        if data > 0 || fanout < 2 {
            let msg = format!(
                "OR join {} has {data} data edges and {fanout} outgoing control paths",
                n.ident()
            );
            c.push(RuleCode::Orj01, msg, vec![ep]);
        }
    }
}

/// Strongly connected components with a cycle (size > 1 or a self loop).
fn cyclic_components(nodes: &BTreeSet<NodeId>, succ: &BTreeMap<NodeId, Vec<NodeId>>) -> Vec<Vec<NodeId>> {
    // Kosaraju, iterative.
    let empty = Vec::new();
    let mut visited = BTreeSet::new();
    let mut order = Vec::new();
    for &start in nodes {
        if visited.contains(&start) {
            continue;
        }
        visited.insert(start);
        let mut stack = vec![(start, 0usize)];
        while let Some((n, i)) = stack.pop() {
            let next = succ.get(&n).unwrap_or(&empty);
            if i < next.len() {
                stack.push((n, i + 1));
                let m = next[i];
                if visited.insert(m) {
                    stack.push((m, 0));
                }
            } else {
                order.push(n);
            }
        }
    }
    let mut pred: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for (a, bs) in succ {
        for b in bs {
            pred.entry(*b).or_default().push(*a);
        }
    }
    let mut assigned = BTreeSet::new();
    let mut out = Vec::new();
    for &root in order.iter().rev() {
        if !assigned.insert(root) {
            continue;
        }
        let mut comp = vec![root];
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            for &m in pred.get(&n).unwrap_or(&empty) {
                if assigned.insert(m) {
                    comp.push(m);
                    stack.push(m);
                }
            }
        }
        let self_loop = succ.get(&root).is_some_and(|s| s.contains(&root));
        if comp.len() > 1 || self_loop {
            comp.sort();
            out.push(comp);
        }
    }
    out.sort();
    out
}

fn check_part_of(c: &mut Checker<'_>) {
    let all: BTreeSet<NodeId> = c.d.nodes().map(DiagramNode::id).collect();
    let mut has: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    let mut has_parents: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for e in c.d.edges().filter(|e| e.kind == EdgeKind::Has) {
        if let Endpoint::Node(child) = e.dst {
            has.entry(e.src).or_default().push(child);
            has_parents.entry(child).or_default().insert(e.src);
        }
    }
    let mut euler: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for (child, parent) in c.d.euler() {
        euler.entry(*parent).or_default().push(*child);
    }
    let mut combined = has.clone();
    for (p, cs) in &euler {
        combined.entry(*p).or_default().extend(cs.iter().copied());
    }

    let has_cycles = cyclic_components(&all, &has);
    let euler_cycles = cyclic_components(&all, &euler);
    for comp in &has_cycles {
        let names: Vec<String> = comp.iter().map(|n| c.name(Endpoint::Node(*n))).collect();
        let msg = format!("has relation is cyclic through {}", names.join(", "));
        c.push(RuleCode::Has01, msg, comp.iter().map(|n| Endpoint::Node(*n)).collect());
    }
    for comp in &euler_cycles {
        let names: Vec<String> = comp.iter().map(|n| c.name(Endpoint::Node(*n))).collect();
        let msg = format!("Euler containment is cyclic through {}", names.join(", "));
        c.push(RuleCode::Eul01, msg, comp.iter().map(|n| Endpoint::Node(*n)).collect());
    }
    // cycles that need both relations
    for comp in cyclic_components(&all, &combined) {
        let covered = has_cycles
            .iter()
            .chain(euler_cycles.iter())
            .any(|k| comp.iter().all(|n| k.contains(n)));
        if !covered {
            let names: Vec<String> = comp.iter().map(|n| c.name(Endpoint::Node(*n))).collect();
            let msg = format!("has lines and Euler nesting form a cycle through {}", names.join(", "));
            c.push(RuleCode::Has01, msg, comp.iter().map(|n| Endpoint::Node(*n)).collect());
        }
    }

    for (child, parents) in &has_parents {
        if let Some(container) = c.d.euler().get(child) {
            if let Some(p) = parents.iter().find(|p| *p != container) {
                let msg = format!(
                    "{} is part of {} by a has line but nested in {}",
                    c.name(Endpoint::Node(*child)),
                    c.name(Endpoint::Node(*p)),
                    c.name(Endpoint::Node(*container))
                );
                c.push(
                    RuleCode::Mix01,
                    msg,
                    vec![Endpoint::Node(*child), Endpoint::Node(*p), Endpoint::Node(*container)],
                );
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NodeSpec, OrderMark, TimelineSpec};

    fn proc(d: &mut Diagram) -> NodeId {
        d.add_node(NodeSpec::new(NodeKind::Process)).unwrap()
    }

    fn holder(d: &mut Diagram, k: HolderKind) -> NodeId {
        d.add_node(NodeSpec::holder(k)).unwrap()
    }

    fn codes(d: &Diagram) -> Vec<RuleCode> {
        validate(d).into_iter().map(|v| v.rule_code).collect()
    }

    #[test]
    fn empty_diagram_is_clean() {
        assert!(validate(&Diagram::new()).is_empty());
    }

    #[test]
    fn dispatch_to_holder_is_ctl01() {
        let mut d = Diagram::new();
        let a = holder(&mut d, HolderKind::Stack);
        let t = d.add_timeline(TimelineSpec::root(None)).unwrap();
        d.append_dispatch(t, OrderMark::new(1), a).unwrap();
        assert_eq!(codes(&d), [RuleCode::Ctl01]);
    }

    #[test]
    fn update_and_read_directions() {
        let mut d = Diagram::new();
        let a = proc(&mut d);
        let b = holder(&mut d, HolderKind::Static);
        d.add_edge(EdgeKind::DataUpdate, a, b).unwrap();
        d.add_edge(EdgeKind::DataRead, b, a).unwrap();
        assert!(validate(&d).is_empty());
        d.add_edge(EdgeKind::DataUpdate, b, b).unwrap();
        assert_eq!(codes(&d), [RuleCode::Dat01]);
    }

    #[test]
    fn return_to_timeline_position() {
        let mut d = Diagram::new();
        let main = proc(&mut d);
        let a = proc(&mut d);
        let g = proc(&mut d);
        let t = d.add_timeline(TimelineSpec::on(main)).unwrap();
        d.append_dispatch(t, OrderMark::new(1), a).unwrap();
        d.append_dispatch(t, OrderMark::new(2), g).unwrap();
        d.add_edge(EdgeKind::ControlReturn, g, Endpoint::TimelinePos(t, 1)).unwrap();
        // end position
        d.add_edge(EdgeKind::ControlReturn, g, Endpoint::TimelinePos(t, 3)).unwrap();
        assert!(validate(&d).is_empty());
        d.add_edge(EdgeKind::ControlReturn, g, Endpoint::TimelinePos(t, 7)).unwrap();
        assert_eq!(codes(&d), [RuleCode::Ctl02]);
    }

    #[test]
    fn part_of_cycles() {
        let mut d = Diagram::new();
        let a = proc(&mut d);
        let b = proc(&mut d);
        d.add_edge(EdgeKind::Has, a, b).unwrap();
        d.set_euler_parent(a, b).unwrap();
        // a has b, b contains a
        assert_eq!(codes(&d), [RuleCode::Has01]);
        let mut d = Diagram::new();
        let a = proc(&mut d);
        let b = proc(&mut d);
        let x = holder(&mut d, HolderKind::Stack);
        d.add_edge(EdgeKind::Has, a, x).unwrap();
        d.set_euler_parent(x, b).unwrap();
        assert_eq!(codes(&d), [RuleCode::Mix01]);
    }

    #[test]
    fn validate_is_deterministic() {
        let mut d = Diagram::new();
        let a = holder(&mut d, HolderKind::Stack);
        let b = holder(&mut d, HolderKind::Heap);
        d.add_edge(EdgeKind::DataUpdate, a, b).unwrap();
        d.add_edge(EdgeKind::Create, b, a).unwrap();
        d.add_edge(EdgeKind::Alias(0), a, b).unwrap();
        assert_eq!(validate(&d), validate(&d));
        assert_eq!(codes(&d), [RuleCode::Dat01, RuleCode::Cre01, RuleCode::Ali01]);
    }
}
