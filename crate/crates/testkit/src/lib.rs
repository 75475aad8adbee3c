//! Seeded generators for the test suites: random diagrams and random
//! Flow-C programs. The same seed always gives the same output.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ucdf_core::extract::{CallStyle, ExtractOptions, Granularity};
use ucdf_core::model::{
    Diagram, EdgeId, EdgeKind, Endpoint, HolderKind, Marker, NodeId, NodeKind, NodeSpec,
    OrderMark, TimelineId, TimelineSpec,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const TEXT_CHARS: &[char] = &['a', 'b', 'z', 'Q', '0', '7', ' ', '_', '"', '\\', '\n', '(', ':', '\u{e9}', '\u{2605}'];

fn text(r: &mut impl Rng) -> String {
    let n = r.gen_range(0..8);
    (0..n).map(|_| *TEXT_CHARS.choose(r).unwrap()).collect()
}

fn remark(r: &mut impl Rng) -> String {
    let words = ["note", "x = 1", "see main()", "TODO-free", "\u{2630}"];
    let n = r.gen_range(0..3);
    (0..n).map(|_| *words.choose(r).unwrap()).collect::<Vec<_>>().join(" ")
}

fn random_kind(r: &mut impl Rng) -> NodeKind {
    *NodeKind::all().choose(r).unwrap()
}

fn random_edge_kind(r: &mut impl Rng) -> EdgeKind {
    match *EdgeKind::ALL.choose(r).unwrap() {
        EdgeKind::Alias(_) => EdgeKind::Alias(r.gen_range(1..5)),
        k => k,
    }
}

/// A random diagram that the text format can carry. It need not pass
/// validation.
pub fn random_diagram(seed: u64) -> Diagram {
    let r = &mut rng(seed);
    let mut d = Diagram::new();
    for _ in 0..r.gen_range(0..3) {
        d.push_remark(remark(r));
    }
    let mut nodes: Vec<NodeId> = Vec::new();
    for i in 0..r.gen_range(0..12) {
        let kind = random_kind(r);
        let mut spec = NodeSpec::new(kind).ident(format!("n{i}"));
        if r.gen_bool(0.5) {
            spec = spec.name(text(r));
        }
        if r.gen_bool(0.3) {
            spec = spec.content(text(r));
        }
        if kind == NodeKind::Holder(HolderKind::Document) && r.gen_bool(0.5) {
            spec = spec.as_process();
        }
        nodes.push(d.add_node(spec).unwrap());
    }
    let owners: Vec<NodeId> = nodes
        .iter()
        .copied()
        .filter(|n| d.node(*n).unwrap().is_process_like())
        .collect();
    let mut timelines: Vec<TimelineId> = Vec::new();
    for i in 0..r.gen_range(0..4) {
        let mut spec = if !owners.is_empty() && r.gen_bool(0.7) {
            TimelineSpec::on(*owners.choose(r).unwrap())
        } else if r.gen_bool(0.5) {
            TimelineSpec::root(Some(&text(r)))
        } else {
            TimelineSpec::root(None)
        };
        spec = spec.ident(format!("t{i}"));
        for m in Marker::ALL {
            if r.gen_bool(0.25) {
                spec = spec.marker(m);
            }
        }
        let t = d.add_timeline(spec).unwrap();
        timelines.push(t);
        if nodes.is_empty() {
            continue;
        }
        let mut rank = 0;
        for _ in 0..r.gen_range(0..4) {
            rank += r.gen_range(1..3);
            let mark = if r.gen_bool(0.3) {
                OrderMark::labeled(rank, format!("{}{}", ["a", "b", "x"].choose(r).unwrap(), text(r)))
            } else {
                OrderMark::new(rank)
            };
            d.append_dispatch(t, mark, *nodes.choose(r).unwrap()).unwrap();
        }
    }
    if !nodes.is_empty() {
        let mut edges: Vec<EdgeId> = Vec::new();
        for _ in 0..r.gen_range(0..15) {
            let mut kind = random_edge_kind(r);
            if r.gen_bool(0.1) {
                kind = EdgeKind::ControlReturn;
            }
            let src = *nodes.choose(r).unwrap();
            let dst = match r.gen_range(0..6) {
                0 if kind == EdgeKind::ControlReturn && !timelines.is_empty() => {
                    let t = *timelines.choose(r).unwrap();
                    let tl = d.timeline(t).unwrap();
                    let mut ranks: Vec<u32> = tl.dispatches().iter().map(|x| x.mark.rank).collect();
                    ranks.push(tl.last_rank() + 1);
                    Endpoint::TimelinePos(t, *ranks.choose(r).unwrap())
                }
                1 if !edges.is_empty() => Endpoint::EdgeRef(*edges.choose(r).unwrap()),
                _ => Endpoint::Node(*nodes.choose(r).unwrap()),
            };
            edges.push(d.add_edge(kind, src, dst).unwrap());
        }
        for (i, &child) in nodes.iter().enumerate().skip(1) {
            if r.gen_bool(0.2) {
                let parent = nodes[r.gen_range(0..i)];
                d.set_euler_parent(child, parent).unwrap();
            }
        }
    }
    d
}

/// Builds Flow-C source with unique names and no recursion. Every
/// function returns `int`; `main` is last.
struct ProgramGen<'a, R: Rng> {
    r: &'a mut R,
    branching: bool,
    out: String,
    /// Parameter counts of the functions written so far.
    funcs: Vec<usize>,
    globals: Vec<String>,
    next_local: usize,
    next_label: usize,
    /// Loop nesting, for `break` and `continue`.
    loops: usize,
    depth: usize,
}

impl<'a, R: Rng> ProgramGen<'a, R> {
    fn local(&mut self) -> String {
        self.next_local += 1;
        format!("v{}", self.next_local)
    }

    fn expr(&mut self, scope: &[String], budget: u32) -> String {
        let choice = if budget == 0 { self.r.gen_range(0..2) } else { self.r.gen_range(0..5) };
        match choice {
            0 => self.r.gen_range(0..10).to_string(),
            1 => scope.choose(self.r).cloned().unwrap_or_else(|| String::from("1")),
            2 | 3 => {
                let op = ["+", "-", "+"].choose(self.r).unwrap();
                let a = self.expr(scope, budget - 1);
                let b = self.expr(scope, budget - 1);
                format!("{a} {op} {b}")
            }
            _ => self.call(scope, budget - 1).unwrap_or_else(|| String::from("2")),
        }
    }

    fn call(&mut self, scope: &[String], budget: u32) -> Option<String> {
        if self.funcs.is_empty() {
            return None;
        }
        let f = self.r.gen_range(0..self.funcs.len());
        let args: Vec<String> = (0..self.funcs[f]).map(|_| self.expr(scope, budget)).collect();
        Some(format!("f{f}({})", args.join(", ")))
    }

    fn cond(&mut self, scope: &[String]) -> String {
        let op = ["<", "=="].choose(self.r).unwrap();
        let a = self.expr(scope, 0);
        let b = self.r.gen_range(0..8);
        format!("{a} {op} {b}")
    }

    fn pad(&self) -> String {
        "    ".repeat(self.depth)
    }

    /// Writes statements into `out`. Callers pass a copy of the outer
    /// scope for nested blocks.
    fn block(&mut self, scope: &mut Vec<String>, len: usize, is_main: bool) {
        for _ in 0..len {
            self.stmt(scope, is_main);
        }
    }

    fn stmt(&mut self, scope: &mut Vec<String>, is_main: bool) {
        let pad = self.pad();
        let structured = if self.branching && self.depth < 3 { 5 } else { 0 };
        let pick = self.r.gen_range(0..6 + structured);
        match pick {
            0 | 1 => {
                let v = self.local();
                let e = self.expr(scope, 2);
                self.out.push_str(&format!("{pad}int {v} = {e};\n"));
                scope.push(v);
            }
            2 if !self.globals.is_empty() => {
                let g = self.globals.choose(self.r).unwrap().clone();
                let e = self.expr(scope, 2);
                self.out.push_str(&format!("{pad}{g} = {e};\n"));
            }
            3 => {
                if let Some(c) = self.call(scope, 1) {
                    self.out.push_str(&format!("{pad}{c};\n"));
                }
            }
            4 => {
                let xs = self.local();
                let i = self.r.gen_range(0..3);
                let e = self.expr(scope, 1);
                let v = self.local();
                self.out.push_str(&format!("{pad}int[3] {xs};\n{pad}{xs}[{i}] = {e};\n{pad}int {v} = {xs}[{i}] + 1;\n"));
                scope.push(v);
            }
            5 if is_main && !self.funcs.is_empty() => {
                let f = self.r.gen_range(0..self.funcs.len());
                let n = self.funcs[f];
                let p = self.local();
                let types = vec!["int"; n].join(", ");
                let args: Vec<String> = (0..n).map(|_| self.expr(scope, 0)).collect();
                let v = self.local();
                self.out.push_str(&format!(
                    "{pad}int (*{p})({types});\n{pad}{p} = f{f};\n{pad}int {v} = (*{p})({});\n",
                    args.join(", ")
                ));
                scope.push(v);
            }
            5 => {
                self.out.push_str(&format!("{pad}{{\n"));
                self.depth += 1;
                let mut inner = scope.clone();
                let n = self.r.gen_range(1..3);
                self.block(&mut inner, n, is_main);
                self.depth -= 1;
                self.out.push_str(&format!("{pad}}}\n"));
            }
            6 => {
                let c = self.cond(scope);
                self.out.push_str(&format!("{pad}if ({c}) {{\n"));
                self.nested(scope, is_main);
                if self.r.gen_bool(0.5) {
                    self.out.push_str(&format!("{pad}}} else {{\n"));
                    self.nested(scope, is_main);
                }
                self.out.push_str(&format!("{pad}}}\n"));
            }
            7 => {
                let i = self.local();
                let n = self.r.gen_range(0..4);
                self.out.push_str(&format!("{pad}int {i} = 0;\n{pad}while ({i} < {n}) {{\n{pad}    {i} = {i} + 1;\n"));
                self.loops += 1;
                let mut inner = scope.clone();
                inner.push(i.clone());
                self.depth += 1;
                let len = self.r.gen_range(1..3);
                self.block(&mut inner, len, is_main);
                self.depth -= 1;
                self.loops -= 1;
                self.out.push_str(&format!("{pad}}}\n"));
            }
            8 if self.loops > 0 => {
                let c = self.cond(scope);
                let jump = ["break", "continue"].choose(self.r).unwrap();
                self.out.push_str(&format!("{pad}if ({c}) {{\n{pad}    {jump};\n{pad}}}\n"));
            }
            8 => {
                let c = self.cond(scope);
                self.out.push_str(&format!("{pad}try {{\n{pad}    if ({c}) {{\n{pad}        throw {};\n{pad}    }}\n", self.r.gen_range(0..5)));
                self.nested_body(scope, is_main);
                let e = self.local();
                self.out.push_str(&format!("{pad}}} catch ({e}) {{\n"));
                let mut inner = scope.clone();
                inner.push(e);
                self.depth += 1;
                self.block(&mut inner, 1, is_main);
                self.depth -= 1;
                self.out.push_str(&format!("{pad}}}\n"));
            }
            9 => {
                let c = self.local();
                self.next_label += 1;
                let l = format!("L{}", self.next_label);
                let n = self.r.gen_range(1..4);
                self.out.push_str(&format!(
                    "{pad}int {c} = 0;\n{pad}{l}: {c} = {c} + 1;\n{pad}if ({c} < {n}) {{\n{pad}    goto {l};\n{pad}}}\n"
                ));
                scope.push(c);
            }
            _ => {
                let v = self.local();
                let e = self.expr(scope, 1);
                self.out.push_str(&format!("{pad}int {v} = {e};\n"));
                scope.push(v);
            }
        }
    }

    fn nested(&mut self, scope: &[String], is_main: bool) {
        let mut inner = scope.to_vec();
        self.depth += 1;
        let n = self.r.gen_range(1..3);
        self.block(&mut inner, n, is_main);
        self.depth -= 1;
    }

    fn nested_body(&mut self, scope: &[String], is_main: bool) {
        let mut inner = scope.to_vec();
        self.depth += 1;
        self.block(&mut inner, 1, is_main);
        self.depth -= 1;
    }

    fn program(mut self) -> String {
        for g in 0..self.r.gen_range(0..3) {
            let v = self.r.gen_range(0..5);
            self.out.push_str(&format!("int g{g} = {v};\n"));
            self.globals.push(format!("g{g}"));
        }
        for f in 0..self.r.gen_range(0..4) {
            let n = self.r.gen_range(0..3);
            let params: Vec<String> = (0..n).map(|i| format!("p{f}_{i}")).collect();
            let decl: Vec<String> = params.iter().map(|p| format!("int {p}")).collect();
            self.out.push_str(&format!("int f{f}({}) {{\n", decl.join(", ")));
            self.depth = 1;
            let mut scope = params;
            let len = self.r.gen_range(0..4);
            self.block(&mut scope, len, false);
            let e = self.expr(&scope, 1);
            self.out.push_str(&format!("    return {e};\n}}\n"));
            self.funcs.push(n);
        }
        self.out.push_str("void main() {\n");
        self.depth = 1;
        let mut scope = Vec::new();
        let len = self.r.gen_range(1..7);
        self.block(&mut scope, len, true);
        if !self.funcs.is_empty() && self.r.gen_bool(0.3) {
            let f = self.r.gen_range(0..self.funcs.len());
            let args: Vec<String> = (0..self.funcs[f]).map(|_| self.r.gen_range(0..9).to_string()).collect();
            self.out.push_str(&format!("    spawn f{f}({});\n", args.join(", ")));
        }
        self.out.push_str("}\n");
        self.out
    }
}

fn program(seed: u64, branching: bool) -> String {
    let r = &mut rng(seed);
    ProgramGen {
        r,
        branching,
        out: String::new(),
        funcs: Vec::new(),
        globals: Vec::new(),
        next_local: 0,
        next_label: 0,
        loops: 0,
        depth: 0,
    }
    .program()
}

/// Flow-C source with calls, indirect calls through a single-target
/// pointer, arrays, blocks and spawn, but no branching of any kind.
pub fn straight_line_program(seed: u64) -> String {
    program(seed, false)
}

/// Like [`straight_line_program`] plus `if`, bounded `while` loops with
/// `break`/`continue`, `try`/`throw`/`catch` and backward `goto`. Every
/// run terminates.
pub fn branching_program(seed: u64) -> String {
    program(seed, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ucdf_core::flowc::compile;

    #[test]
    fn generators_are_seeded() {
        assert_eq!(straight_line_program(7), straight_line_program(7));
        assert_eq!(branching_program(7), branching_program(7));
        assert_eq!(random_diagram(7), random_diagram(7));
    }

    #[test]
    fn programs_compile() {
        for seed in 0..200 {
            for src in [straight_line_program(seed), branching_program(seed)] {
                if let Err(e) = compile(&src) {
                    panic!("seed {seed}: {e:?}\n{src}");
                }
            }
        }
    }
}

/// Root of the fixture tree in `ucdf-core`.
pub fn fixtures_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

/// A Flow-C corpus program and the options its golden diagram was
/// extracted with. Goldens live at `programs/<name>.ucdf`.
#[derive(Debug, Clone)]
pub struct CorpusProgram {
    pub name: &'static str,
    pub source: &'static str,
    pub granularity: Granularity,
    pub call_style: CallStyle,
}

impl CorpusProgram {
    pub fn source_path(&self) -> std::path::PathBuf {
        fixtures_dir().join("programs").join(self.source)
    }

    pub fn golden_path(&self) -> std::path::PathBuf {
        fixtures_dir().join("programs").join(format!("{}.ucdf", self.name))
    }

    pub fn options(&self) -> ExtractOptions {
        ExtractOptions {
            granularity: self.granularity,
            call_style: self.call_style,
            ..ExtractOptions::default()
        }
    }

    /// The same options as `ucdf extract` flags.
    pub fn cli_flags(&self) -> Vec<String> {
        vec![
            String::from("--granularity"),
            String::from(self.granularity.keyword()),
            String::from("--call-style"),
            String::from(self.call_style.keyword()),
        ]
    }
}

pub fn corpus() -> Vec<CorpusProgram> {
    use CallStyle::{Full, Simplified};
    use Granularity::{Block, Operator};
    let p = |name, source, granularity, call_style| CorpusProgram {
        name,
        source,
        granularity,
        call_style,
    };
    vec![
        p("function_a", "function_a.fc", Block, Full),
        p("simplified", "function_a.fc", Block, Simplified),
        p("member_record", "member_record.fc", Block, Full),
        p("callback", "callback.fc", Block, Simplified),
        p("nested", "nested.fc", Block, Simplified),
        p("goto", "goto.fc", Operator, Simplified),
        p("try_catch", "try_catch.fc", Block, Simplified),
        p("spawn", "spawn.fc", Block, Simplified),
    ]
}

fn holders_named<'d>(d: &'d Diagram, name: &str) -> Vec<&'d ucdf_core::DiagramNode> {
    d.nodes().filter(|n| n.is_holder() && n.name() == Some(name)).collect()
}

fn process_named(d: &Diagram, name: &str) -> Result<NodeId, String> {
    d.nodes()
        .find(|n| n.is_process_like() && (n.ident() == name || n.name() == Some(name)))
        .map(|n| n.id())
        .ok_or_else(|| format!("no process {name:?}"))
}

/// Everything reachable from `n` by Has edges, including `n`.
fn has_closure(d: &Diagram, n: NodeId) -> std::collections::BTreeSet<NodeId> {
    let mut out = std::collections::BTreeSet::from([n]);
    let mut stack = vec![n];
    while let Some(x) = stack.pop() {
        for e in d.edges().filter(|e| e.kind == EdgeKind::Has && e.src == x) {
            if let Endpoint::Node(c) = e.dst {
                if out.insert(c) {
                    stack.push(c);
                }
            }
        }
    }
    out
}

fn rank_of(d: &Diagram, target: NodeId) -> Option<(TimelineId, u32)> {
    d.timelines()
        .find_map(|t| t.dispatches().iter().find(|x| x.target == target).map(|x| (t.id(), x.mark.rank)))
}

/// The structural facts each corpus diagram must show.
pub fn structural_facts(name: &str, d: &Diagram) -> Result<(), String> {
    let ensure = |ok: bool, what: &str| if ok { Ok(()) } else { Err(String::from(what)) };
    match name {
        "function_a" | "simplified" => {
            let a = holders_named(d, "arg: a");
            ensure(a.len() == 2, "two distinct holders named a")?;
            let f = process_named(d, "functionA")?;
            let inside = has_closure(d, f);
            ensure(
                a.iter().filter(|h| inside.contains(&h.id())).count() == 1,
                "one a is the parameter of functionA",
            )
        }
        "member_record" => {
            let a = holders_named(d, "arg: a");
            let this = holders_named(d, "arg: this");
            ensure(a.len() == 1 && this.len() == 1, "caller a and receiver this are separate holders")?;
            let f = process_named(d, "arg_functionA")?;
            ensure(has_closure(d, f).contains(&this[0].id()), "this belongs to the member function")
        }
        "callback" => {
            let func = d
                .nodes()
                .find(|n| n.kind() == NodeKind::Holder(HolderKind::Constant) && n.name() == Some("func"))
                .ok_or("constant holder for func")?;
            ensure(
                d.edges().any(|e| {
                    e.kind == EdgeKind::Ref
                        && e.dst == Endpoint::Node(func.id())
                        && d.node(e.src).is_some_and(|s| s.kind() == NodeKind::Holder(HolderKind::Address))
                }),
                "ref edge from fp to func",
            )
        }
        "nested" => {
            for f in ["f1", "f2"] {
                let p = process_named(d, f)?;
                let inside = has_closure(d, p);
                let ret = d
                    .nodes()
                    .find(|n| n.name() == Some("int: ret") && inside.contains(&n.id()))
                    .ok_or_else(|| format!("ret holder of {f}"))?;
                let outside_in = d.edges().any(|e| {
                    e.dst == Endpoint::Node(ret.id())
                        && (e.kind.is_data() || e.kind == EdgeKind::Create)
                        && !inside.contains(&e.src)
                });
                ensure(!outside_in, "ret has no input from outside its function")?;
            }
            let (t1, r1) = rank_of(d, process_named(d, "f1")?).ok_or("f1 dispatched")?;
            let (t2, r2) = rank_of(d, process_named(d, "f2")?).ok_or("f2 dispatched")?;
            ensure(t1 == t2 && r1 < r2, "f1 runs before f2 on one timeline")
        }
        "goto" => {
            let label = process_named(d, "L:")?;
            let (t, rank) = rank_of(d, label).ok_or("label dispatched")?;
            let jump = process_named(d, "goto L")?;
            ensure(
                d.has_edge(EdgeKind::ControlReturn, jump, Endpoint::TimelinePos(t, rank)),
                "goto returns to the label's position",
            )
        }
        "try_catch" => {
            let t = d.nodes().find(|n| n.name() == Some("try")).ok_or("try block")?;
            let c = d.nodes().find(|n| n.name() == Some("catch (e)")).ok_or("catch block")?;
            ensure(d.has_edge(EdgeKind::ExceptionCtl, t.id(), Endpoint::Node(c.id())), "exception edge from try to catch")
        }
        "spawn" => {
            let work = process_named(d, "work")?;
            let spawned = d
                .timelines()
                .filter(|t| t.owner_node().is_none() && t.dispatches().iter().any(|x| x.target == work))
                .count();
            ensure(spawned == 2, "two root timelines run work")
        }
        _ => Err(format!("no facts recorded for {name}")),
    }
}

/// Deletes each diagram element an executed event relies on, one at a
/// time, and counts the deletions `conform` notices. Returns
/// `(killed, total)`.
pub fn mutation_kills(d: &Diagram, trace: &ucdf_core::trace::Trace) -> (usize, usize) {
    use ucdf_core::trace::{conform, justifying_elements, ConformOptions, Element};
    let elements = justifying_elements(d, trace).expect("fingerprint");
    let mut killed = 0;
    for el in &elements {
        let mut m = d.clone();
        match *el {
            Element::Edge(id) => {
                m.remove_edge(id);
            }
            Element::Dispatch(t, rank) => {
                let i = m.timeline(t).unwrap().dispatches().iter().position(|x| x.mark.rank == rank).unwrap();
                m.remove_dispatch(t, i);
            }
        }
        if !conform(&m, trace, ConformOptions::default()).expect("fingerprint").is_empty() {
            killed += 1;
        }
    }
    (killed, elements.len())
}
