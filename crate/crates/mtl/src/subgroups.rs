//! Finitely generated subgroups of free groups as folded core graphs.
//!
//! A `SubgroupGraph` is a folded, connected, basepointed core graph with a
//! canonical vertex numbering (BFS from the basepoint in basis order), so
//! two graphs compare equal exactly when they represent the same subgroup.
//! The basepoint is always vertex 0.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::words::{letter_gen, FreeBasis, Letter, Word};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubgroupGraph {
    n_gens: usize,
    out: Vec<Vec<Option<u32>>>,
    inn: Vec<Vec<Option<u32>>>,
}

/// A folded graph whose edges carry expressions over the input generators;
/// membership witnesses come out as words over those generators.
#[derive(Debug, Clone)]
pub struct AnnotatedGraph {
    pub graph: SubgroupGraph,
    labels: HashMap<(u32, usize), Word>,
}

type FoldResult = (SubgroupGraph, Option<HashMap<(u32, usize), Word>>);

#[derive(Debug, Clone)]
struct FoldEdge {
    u: usize,
    gen: usize,
    v: usize,
    y: Word,
    alive: bool,
}

struct Folder {
    edges: Vec<FoldEdge>,
    next_vertex: usize,
    track: bool,
    pending: VecDeque<(usize, usize, Word)>,
}

impl Folder {
    fn new(track: bool) -> Folder {
        Folder {
            edges: Vec::new(),
            next_vertex: 1,
            track,
            pending: VecDeque::new(),
        }
    }

    fn fresh(&mut self) -> usize {
        let v = self.next_vertex;
        self.next_vertex += 1;
        v
    }

    fn add_petal(&mut self, index: usize, w: &Word) {
        if w.is_empty() {
            return;
        }
        let y_first = Word::generator(index);
        let mut cur = 0usize;
        for (pos, &l) in w.letters().iter().enumerate() {
            let next = if pos + 1 == w.len() { 0 } else { self.fresh() };
            let g = letter_gen(l);
            let label = if self.track && pos == 0 {
                if l > 0 {
                    y_first.clone()
                } else {
                    y_first.inverse()
                }
            } else {
                Word::empty()
            };
            let (eu, ev) = if l > 0 { (cur, next) } else { (next, cur) };
            self.edges.push(FoldEdge {
                u: eu,
                gen: g,
                v: ev,
                y: label,
                alive: true,
            });
            cur = next;
        }
    }

    /// Merge vertex `b` into vertex `a`; crossing a -> b multiplies the
    /// tracked expression by `delta`.
    fn contract(&mut self, a: usize, b: usize, delta: Word) {
        debug_assert!(a != b);
        for e in self.edges.iter_mut().filter(|e| e.alive) {
            if e.u == b {
                e.u = a;
                if self.track {
                    e.y = delta.concat(&e.y);
                }
            }
            if e.v == b {
                e.v = a;
                if self.track {
                    e.y = e.y.concat(&delta.inverse());
                }
            }
        }
        for (p, q, d) in self.pending.iter_mut() {
            if *p == b {
                *p = a;
                if self.track {
                    *d = delta.concat(d);
                }
            }
            if *q == b {
                *q = a;
                if self.track {
                    *d = d.concat(&delta.inverse());
                }
            }
        }
    }

    fn run(&mut self) {
        loop {
            if let Some((u, v, delta)) = self.pending.pop_front() {
                if u == v {
                    continue;
                }
                // keep the basepoint alive
                if v == 0 {
                    self.contract(v, u, delta.inverse());
                } else {
                    self.contract(u, v, delta);
                }
                continue;
            }
            let mut out_seen: HashMap<(usize, usize), usize> = HashMap::new();
            let mut in_seen: HashMap<(usize, usize), usize> = HashMap::new();
            let mut fold_at: Option<(usize, usize)> = None;
            let mut fold_in = false;
            for (i, e) in self.edges.iter().enumerate().filter(|(_, e)| e.alive) {
                if let Some(&j) = out_seen.get(&(e.u, e.gen)) {
                    fold_at = Some((j, i));
                    break;
                }
                out_seen.insert((e.u, e.gen), i);
                if let Some(&j) = in_seen.get(&(e.gen, e.v)) {
                    fold_at = Some((j, i));
                    fold_in = true;
                    break;
                }
                in_seen.insert((e.gen, e.v), i);
            }
            match fold_at {
                None => break,
                Some((keep, drop)) => {
                    let (yk, yd) = (self.edges[keep].y.clone(), self.edges[drop].y.clone());
                    self.edges[drop].alive = false;
                    if fold_in {
                        // e_keep: u1 -> v, e_drop: u2 -> v; reroute u2 through u1
                        let (u1, u2) = (self.edges[keep].u, self.edges[drop].u);
                        let delta = if self.track {
                            yd.concat(&yk.inverse())
                        } else {
                            Word::empty()
                        };
                        self.pending.push_back((u2, u1, delta));
                    } else {
                        // e_keep: u -> v1, e_drop: u -> v2; reroute v2 through v1
                        let (v1, v2) = (self.edges[keep].v, self.edges[drop].v);
                        let delta = if self.track {
                            yk.inverse().concat(&yd)
                        } else {
                            Word::empty()
                        };
                        self.pending.push_back((v1, v2, delta));
                    }
                }
            }
        }
    }
}

fn trim_to_core(edges: &mut Vec<(usize, usize, usize, Word)>, keep: usize) {
    loop {
        let mut degree: HashMap<usize, usize> = HashMap::new();
        for &(u, _, v, _) in edges.iter() {
            *degree.entry(u).or_default() += 1;
            *degree.entry(v).or_default() += 1;
        }
        let before = edges.len();
        edges.retain(|&(u, _, v, _)| {
            !(u != keep && degree[&u] <= 1 || v != keep && degree[&v] <= 1)
        });
        if edges.len() == before {
            break;
        }
    }
}

impl SubgroupGraph {
    pub fn trivial(n_gens: usize) -> SubgroupGraph {
        SubgroupGraph {
            n_gens,
            out: vec![vec![None; n_gens]],
            inn: vec![vec![None; n_gens]],
        }
    }

    /// The graph of the whole group: one vertex with every loop.
    pub fn whole_group(n_gens: usize) -> SubgroupGraph {
        SubgroupGraph {
            n_gens,
            out: vec![vec![Some(0); n_gens]],
            inn: vec![vec![Some(0); n_gens]],
        }
    }

    /// Stallings fold of the given generating words.
    pub fn fold(n_gens: usize, generators: &[Word]) -> SubgroupGraph {
        Self::fold_impl(n_gens, generators, false).0
    }

    /// Fold while tracking expressions over the input generators.
    pub fn fold_annotated(n_gens: usize, generators: &[Word]) -> AnnotatedGraph {
        let (graph, labels) = Self::fold_impl(n_gens, generators, true);
        AnnotatedGraph {
            graph,
            labels: labels.unwrap(),
        }
    }

    fn fold_impl(n_gens: usize, generators: &[Word], track: bool) -> FoldResult {
        let mut folder = Folder::new(track);
        for (i, w) in generators.iter().enumerate() {
            folder.add_petal(i, w);
        }
        folder.run();
        let mut edges: Vec<(usize, usize, usize, Word)> = folder
            .edges
            .into_iter()
            .filter(|e| e.alive)
            .map(|e| (e.u, e.gen, e.v, e.y))
            .collect();
        trim_to_core(&mut edges, 0);
        Self::canonicalize(n_gens, 0, edges, track)
    }

    /// Canonical BFS renumbering from the base vertex; edge order within a
    /// vertex is generator order, outgoing before incoming.
    fn canonicalize(
        n_gens: usize,
        base: usize,
        edges: Vec<(usize, usize, usize, Word)>,
        track: bool,
    ) -> FoldResult {
        let mut out_map: BTreeMap<(usize, usize), (usize, Word)> = BTreeMap::new();
        let mut in_map: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (u, g, v, y) in edges {
            out_map.insert((u, g), (v, y));
            in_map.insert((v, g), u);
        }
        let mut number: HashMap<usize, u32> = HashMap::new();
        let mut order: Vec<usize> = Vec::new();
        number.insert(base, 0);
        order.push(base);
        let mut queue = VecDeque::from([base]);
        while let Some(v) = queue.pop_front() {
            for g in 0..n_gens {
                if let Some(&(w, _)) = out_map.get(&(v, g)) {
                    number.entry(w).or_insert_with(|| {
                        order.push(w);
                        queue.push_back(w);
                        (order.len() - 1) as u32
                    });
                }
                if let Some(&u) = in_map.get(&(v, g)) {
                    number.entry(u).or_insert_with(|| {
                        order.push(u);
                        queue.push_back(u);
                        (order.len() - 1) as u32
                    });
                }
            }
        }
        let nv = order.len();
        let mut out = vec![vec![None; n_gens]; nv];
        let mut inn = vec![vec![None; n_gens]; nv];
        let mut labels: HashMap<(u32, usize), Word> = HashMap::new();
        for (&(u, g), &(v, ref y)) in out_map.iter() {
            // unreachable stray components cannot occur: petals attach to
            // the basepoint and contractions preserve connectivity
            let (cu, cv) = (number[&u], number[&v]);
            out[cu as usize][g] = Some(cv);
            inn[cv as usize][g] = Some(cu);
            if track {
                labels.insert((cu, g), y.clone());
            }
        }
        (
            SubgroupGraph { n_gens, out, inn },
            if track { Some(labels) } else { None },
        )
    }

    pub fn n_gens(&self) -> usize {
        self.n_gens
    }

    pub fn vertex_count(&self) -> usize {
        self.out.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().flatten().filter(|e| e.is_some()).count()
    }

    pub fn rank(&self) -> usize {
        self.edge_count() + 1 - self.vertex_count()
    }

    pub fn is_trivial(&self) -> bool {
        self.vertex_count() == 1 && self.edge_count() == 0
    }

    pub fn is_whole_group(&self) -> bool {
        self.vertex_count() == 1 && self.edge_count() == self.n_gens
    }

    pub fn out_edge(&self, v: u32, gen: usize) -> Option<u32> {
        self.out[v as usize][gen]
    }

    pub fn in_edge(&self, v: u32, gen: usize) -> Option<u32> {
        self.inn[v as usize][gen]
    }

    pub fn trace(&self, start: u32, w: &Word) -> Option<u32> {
        let mut v = start;
        for &l in w.letters() {
            let g = letter_gen(l);
            v = if l > 0 {
                self.out[v as usize][g]?
            } else {
                self.inn[v as usize][g]?
            };
        }
        Some(v)
    }

    pub fn member(&self, w: &Word) -> bool {
        self.trace(0, w) == Some(0)
    }

    /// BFS tree: for each vertex the (parent, letter read parent -> v).
    fn bfs_tree(&self) -> Vec<Option<(u32, Letter)>> {
        let mut parent: Vec<Option<(u32, Letter)>> = vec![None; self.vertex_count()];
        let mut seen = vec![false; self.vertex_count()];
        seen[0] = true;
        let mut queue = VecDeque::from([0u32]);
        while let Some(v) = queue.pop_front() {
            for g in 0..self.n_gens {
                if let Some(w) = self.out[v as usize][g] {
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        parent[w as usize] = Some((v, (g + 1) as Letter));
                        queue.push_back(w);
                    }
                }
                if let Some(u) = self.inn[v as usize][g] {
                    if !seen[u as usize] {
                        seen[u as usize] = true;
                        parent[u as usize] = Some((v, -((g + 1) as Letter)));
                        queue.push_back(u);
                    }
                }
            }
        }
        parent
    }

    /// The word read along the BFS tree path from the basepoint to `v`.
    pub fn path_from_basepoint(&self, v: u32) -> Word {
        let tree = self.bfs_tree();
        self.path_in_tree(&tree, v)
    }

    fn path_in_tree(&self, tree: &[Option<(u32, Letter)>], v: u32) -> Word {
        let mut letters = Vec::new();
        let mut cur = v;
        while let Some((p, l)) = tree[cur as usize] {
            letters.push(l);
            cur = p;
        }
        letters.reverse();
        Word::reduce(letters)
    }

    /// A free basis of the subgroup, one element per non-tree edge, in
    /// canonical order.
    pub fn free_basis(&self) -> Vec<Word> {
        let tree = self.bfs_tree();
        let mut tree_edges: BTreeSet<(u32, usize)> = BTreeSet::new();
        for (v, entry) in tree.iter().enumerate() {
            if let Some((p, l)) = entry {
                if *l > 0 {
                    tree_edges.insert((*p, letter_gen(*l)));
                } else {
                    tree_edges.insert((v as u32, letter_gen(*l)));
                }
            }
        }
        let mut basis = Vec::new();
        for v in 0..self.vertex_count() as u32 {
            for g in 0..self.n_gens {
                if let Some(w) = self.out[v as usize][g] {
                    if !tree_edges.contains(&(v, g)) {
                        let pv = self.path_in_tree(&tree, v);
                        let pw = self.path_in_tree(&tree, w);
                        let mid = Word::reduce(vec![(g + 1) as Letter]);
                        basis.push(pv.concat(&mid).concat(&pw.inverse()));
                    }
                }
            }
        }
        basis
    }

    /// Generating words (the free basis) rendered for reports.
    pub fn generator_words(&self, basis: &FreeBasis) -> Vec<String> {
        self.free_basis().iter().map(|w| basis.render(w)).collect()
    }

    /// The conjugate subgroup `g^-1 * self * g`.
    pub fn conjugated(&self, g: &Word) -> SubgroupGraph {
        let gens: Vec<Word> = self.free_basis().iter().map(|x| x.conjugated(g)).collect();
        SubgroupGraph::fold(self.n_gens, &gens)
    }

    pub fn join(&self, other: &SubgroupGraph) -> SubgroupGraph {
        let mut gens = self.free_basis();
        gens.extend(other.free_basis());
        SubgroupGraph::fold(self.n_gens, &gens)
    }

    /// If some conjugate `z^-1 w z`... precisely: returns `(z, x)` with
    /// `w = z * x * z^-1` and `x` accepted by the graph, if the conjugacy
    /// class of `w` meets the subgroup.
    pub fn conjugate_into(&self, w: &Word) -> Option<(Word, Word)> {
        let (core, d) = w.cyclic_reduce();
        if core.is_empty() {
            return Some((Word::empty(), Word::empty()));
        }
        for v in 0..self.vertex_count() as u32 {
            for r in 0..core.len() {
                let mut rot = core.letters()[r..].to_vec();
                rot.extend_from_slice(&core.letters()[..r]);
                let rot = Word::reduce(rot);
                if self.trace(v, &rot) == Some(v) {
                    let pre = Word::reduce(core.letters()[..r].to_vec());
                    let p = self.path_from_basepoint(v);
                    let z = d.concat(&pre).concat(&p.inverse());
                    let x = p.concat(&rot).concat(&p.inverse());
                    return Some((z, x));
                }
            }
        }
        None
    }

    /// Vertices surviving a full trim (the basepoint gets no exemption).
    fn bare_core(&self) -> BTreeSet<u32> {
        let mut alive: BTreeSet<u32> = (0..self.vertex_count() as u32).collect();
        loop {
            let mut degree: HashMap<u32, usize> = HashMap::new();
            for v in alive.iter().copied() {
                for g in 0..self.n_gens {
                    if let Some(w) = self.out[v as usize][g] {
                        if alive.contains(&w) {
                            *degree.entry(v).or_default() += 1;
                            *degree.entry(w).or_default() += 1;
                        }
                    }
                }
            }
            let next: BTreeSet<u32> = alive
                .iter()
                .copied()
                .filter(|v| degree.get(v).copied().unwrap_or(0) >= 2)
                .collect();
            if next.len() == alive.len() {
                return alive;
            }
            alive = next;
        }
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph subgroup {\n");
        if self.edge_count() == 0 {
            s.push_str("  0;\n");
        }
        for v in 0..self.vertex_count() as u32 {
            for g in 0..self.n_gens {
                if let Some(w) = self.out[v as usize][g] {
                    s.push_str(&format!("  {} -> {} [label=\"{}\"];\n", v, w, g));
                }
            }
        }
        s.push_str("}\n");
        s
    }

    /// DOT export with generator names.
    pub fn to_dot_named(&self, basis: &FreeBasis) -> String {
        let mut s = String::from("digraph subgroup {\n");
        if self.edge_count() == 0 {
            s.push_str("  0;\n");
        }
        for v in 0..self.vertex_count() as u32 {
            for g in 0..self.n_gens {
                if let Some(w) = self.out[v as usize][g] {
                    s.push_str(&format!(
                        "  {} -> {} [label=\"{}\"];\n",
                        v,
                        w,
                        basis.name(g)
                    ));
                }
            }
        }
        s.push_str("}\n");
        s
    }
}

impl AnnotatedGraph {
    /// Membership with a witness over the input generators: the returned
    /// word, with letter `i+1` standing for input generator `i`,
    /// multiplies out to `w`.
    pub fn witness(&self, w: &Word) -> Option<Word> {
        let g = &self.graph;
        let mut v = 0u32;
        let mut acc = Word::empty();
        for &l in w.letters() {
            let gen = letter_gen(l);
            if l > 0 {
                let next = g.out_edge(v, gen)?;
                if let Some(y) = self.labels.get(&(v, gen)) {
                    acc = acc.concat(y);
                }
                v = next;
            } else {
                let prev = g.in_edge(v, gen)?;
                if let Some(y) = self.labels.get(&(prev, gen)) {
                    acc = acc.concat(&y.inverse());
                }
                v = prev;
            }
        }
        if v == 0 {
            Some(acc)
        } else {
            None
        }
    }
}

/// Substitute actual generator words into a witness expression.
pub fn evaluate_witness(witness: &Word, generators: &[Word]) -> Word {
    let mut acc = Word::empty();
    for &l in witness.letters() {
        let g = &generators[letter_gen(l)];
        acc = if l > 0 {
            acc.concat(g)
        } else {
            acc.concat(&g.inverse())
        };
    }
    acc
}

// ---------------------------------------------------------------------------
// Pullbacks (fiber products) and malnormality
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PullbackComponent {
    pub graph: SubgroupGraph,
    /// Double coset representative g; the component certifies the
    /// intersection of the first subgroup with g * (second) * g^-1.
    pub rep: Word,
    pub based: bool,
}

type Pair = (u32, u32);

fn product_components(a: &SubgroupGraph, b: &SubgroupGraph) -> Vec<BTreeSet<Pair>> {
    let n = a.n_gens();
    let mut parent: HashMap<Pair, Pair> = HashMap::new();
    fn find(parent: &mut HashMap<Pair, Pair>, x: Pair) -> Pair {
        let p = *parent.entry(x).or_insert(x);
        if p == x {
            return x;
        }
        let root = find(parent, p);
        parent.insert(x, root);
        root
    }
    let union = |parent: &mut HashMap<Pair, Pair>, x: Pair, y: Pair| {
        let (rx, ry) = (find(parent, x), find(parent, y));
        if rx != ry {
            parent.insert(rx, ry);
        }
    };
    for u in 0..a.vertex_count() as u32 {
        for v in 0..b.vertex_count() as u32 {
            find(&mut parent, (u, v));
            for g in 0..n {
                if let (Some(u2), Some(v2)) = (a.out_edge(u, g), b.out_edge(v, g)) {
                    union(&mut parent, (u, v), (u2, v2));
                }
            }
        }
    }
    let mut groups: BTreeMap<Pair, BTreeSet<Pair>> = BTreeMap::new();
    let keys: Vec<Pair> = parent.keys().copied().collect();
    for k in keys {
        let root = find(&mut parent, k);
        groups.entry(root).or_default().insert(k);
    }
    groups.into_values().collect()
}

fn component_edges(
    a: &SubgroupGraph,
    b: &SubgroupGraph,
    verts: &BTreeSet<Pair>,
) -> Vec<(Pair, usize, Pair)> {
    let mut edges = Vec::new();
    for &(u, v) in verts {
        for g in 0..a.n_gens() {
            if let (Some(u2), Some(v2)) = (a.out_edge(u, g), b.out_edge(v, g)) {
                edges.push(((u, v), g, (u2, v2)));
            }
        }
    }
    edges
}

fn trim_pair_edges(edges: &mut Vec<(Pair, usize, Pair)>, keep: Option<Pair>) {
    loop {
        let mut degree: HashMap<Pair, usize> = HashMap::new();
        for &(u, _, v) in edges.iter() {
            *degree.entry(u).or_default() += 1;
            *degree.entry(v).or_default() += 1;
        }
        let before = edges.len();
        edges.retain(|&(u, _, v)| {
            let dead = |x: Pair| Some(x) != keep && degree[&x] <= 1;
            !(dead(u) || dead(v))
        });
        if edges.len() == before {
            break;
        }
    }
}

fn pair_graph(n_gens: usize, base: Pair, edges: &[(Pair, usize, Pair)]) -> SubgroupGraph {
    let mut ids: HashMap<Pair, usize> = HashMap::new();
    let mut next = 0usize;
    let id = |p: Pair, ids: &mut HashMap<Pair, usize>, next: &mut usize| -> usize {
        *ids.entry(p).or_insert_with(|| {
            let v = *next;
            *next += 1;
            v
        })
    };
    let base_id = id(base, &mut ids, &mut next);
    debug_assert_eq!(base_id, 0);
    let mapped: Vec<(usize, usize, usize, Word)> = edges
        .iter()
        .map(|&(u, g, v)| {
            let cu = id(u, &mut ids, &mut next);
            let cv = id(v, &mut ids, &mut next);
            (cu, g, cv, Word::empty())
        })
        .collect();
    SubgroupGraph::canonicalize(n_gens, 0, mapped, false).0
}

/// Fiber product of two folded core graphs. The based component (listed
/// first) represents the intersection; every other returned component has
/// nontrivial fundamental group and certifies a nontrivial intersection
/// with the conjugate by its double coset representative.
pub fn pullback(a: &SubgroupGraph, b: &SubgroupGraph) -> Vec<PullbackComponent> {
    let comps = product_components(a, b);
    let mut out: Vec<PullbackComponent> = Vec::new();
    let mut others: Vec<PullbackComponent> = Vec::new();
    for verts in comps {
        let based = verts.contains(&(0, 0));
        let mut edges = component_edges(a, b, &verts);
        trim_pair_edges(&mut edges, if based { Some((0, 0)) } else { None });
        if based {
            out.push(PullbackComponent {
                graph: pair_graph(a.n_gens(), (0, 0), &edges),
                rep: Word::empty(),
                based: true,
            });
        } else if !edges.is_empty() {
            let mut core_verts: BTreeSet<Pair> = BTreeSet::new();
            for &(u, _, v) in &edges {
                core_verts.insert(u);
                core_verts.insert(v);
            }
            let base = *core_verts.iter().next().unwrap();
            let rep = a
                .path_from_basepoint(base.0)
                .concat(&b.path_from_basepoint(base.1).inverse());
            others.push(PullbackComponent {
                graph: pair_graph(a.n_gens(), base, &edges),
                rep,
                based: false,
            });
        }
    }
    others.sort_by(|x, y| Word::shortlex_cmp(&x.rep, &y.rep));
    out.extend(others);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MalnormalWitness {
    pub i: usize,
    pub j: usize,
    /// g with: element is in H_i, and g^-1 * element * g is in H_j, while
    /// g is not in H_i when i = j.
    pub conjugator: Word,
    pub element: Word,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MalnormalityReport {
    pub malnormal: bool,
    pub witness: Option<MalnormalWitness>,
}

/// Exact malnormality test for a family of subgroups, via pullback
/// components: for i != j every component must be a tree, and the only
/// non-tree component of a self pullback must be the based (diagonal) one.
pub fn is_malnormal_family(graphs: &[&SubgroupGraph]) -> MalnormalityReport {
    for i in 0..graphs.len() {
        for j in i..graphs.len() {
            let (gi, gj) = (graphs[i], graphs[j]);
            for verts in product_components(gi, gj) {
                let based = verts.contains(&(0, 0));
                if i == j && based {
                    continue;
                }
                let mut edges = component_edges(gi, gj, &verts);
                trim_pair_edges(&mut edges, None);
                if edges.is_empty() {
                    continue;
                }
                // violating component: pick the core vertex giving the
                // shortlex-least conjugator
                let mut core_verts: BTreeSet<Pair> = BTreeSet::new();
                for &(u, _, v) in &edges {
                    core_verts.insert(u);
                    core_verts.insert(v);
                }
                let mut best: Option<(Word, Pair)> = None;
                for &p in &core_verts {
                    let rep = gi
                        .path_from_basepoint(p.0)
                        .concat(&gj.path_from_basepoint(p.1).inverse());
                    if best.as_ref().is_none_or(|(r, _)| {
                        Word::shortlex_cmp(&rep, r) == std::cmp::Ordering::Less
                    }) {
                        best = Some((rep, p));
                    }
                }
                let (rep, base) = best.unwrap();
                let comp = pair_graph(gi.n_gens(), base, &edges);
                let loop_word = comp
                    .free_basis()
                    .into_iter()
                    .min_by(Word::shortlex_cmp)
                    .unwrap();
                let p_u = gi.path_from_basepoint(base.0);
                let element = p_u.concat(&loop_word).concat(&p_u.inverse());
                return MalnormalityReport {
                    malnormal: false,
                    witness: Some(MalnormalWitness {
                        i,
                        j,
                        conjugator: rep,
                        element,
                    }),
                };
            }
        }
    }
    MalnormalityReport {
        malnormal: true,
        witness: None,
    }
}

/// Conjugacy of subgroups: returns g with `g^-1 * A * g = B` when the
/// basepoint-free cores are label-isomorphic, verified by membership of
/// generators both ways.
pub fn subgroups_conjugate(a: &SubgroupGraph, b: &SubgroupGraph) -> Option<Word> {
    if a.is_trivial() && b.is_trivial() {
        return Some(Word::empty());
    }
    if a.is_trivial() != b.is_trivial() {
        return None;
    }
    let core_a = a.bare_core();
    let core_b = b.bare_core();
    if core_a.len() != core_b.len() || a.rank() != b.rank() {
        return None;
    }
    // nearest core vertex to the basepoint of a, by BFS
    let v0 = nearest_core_vertex(a, &core_a)?;
    let p = a.path_from_basepoint(v0);
    for &w0 in &core_b {
        if !iso_extends(a, &core_a, v0, b, &core_b, w0) {
            continue;
        }
        let q = b.path_from_basepoint(w0);
        let g = p.concat(&q.inverse());
        let ok = a.free_basis().iter().all(|x| b.member(&x.conjugated(&g)))
            && b.free_basis()
                .iter()
                .all(|y| a.member(&y.conjugated(&g.inverse())));
        if ok {
            return Some(g);
        }
    }
    None
}

fn nearest_core_vertex(g: &SubgroupGraph, core: &BTreeSet<u32>) -> Option<u32> {
    let mut seen = vec![false; g.vertex_count()];
    let mut queue = VecDeque::from([0u32]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        if core.contains(&v) {
            return Some(v);
        }
        for gen in 0..g.n_gens() {
            for next in [g.out_edge(v, gen), g.in_edge(v, gen)]
                .into_iter()
                .flatten()
            {
                if !seen[next as usize] {
                    seen[next as usize] = true;
                    queue.push_back(next);
                }
            }
        }
    }
    None
}

fn iso_extends(
    a: &SubgroupGraph,
    core_a: &BTreeSet<u32>,
    v0: u32,
    b: &SubgroupGraph,
    core_b: &BTreeSet<u32>,
    w0: u32,
) -> bool {
    let core_edge = |g: &SubgroupGraph, core: &BTreeSet<u32>, v: u32, gen: usize, dir_out: bool| {
        let t = if dir_out {
            g.out_edge(v, gen)
        } else {
            g.in_edge(v, gen)
        };
        t.filter(|t| core.contains(t))
    };
    let mut map: HashMap<u32, u32> = HashMap::new();
    let mut used: BTreeSet<u32> = BTreeSet::new();
    map.insert(v0, w0);
    used.insert(w0);
    let mut stack = vec![(v0, w0)];
    while let Some((x, y)) = stack.pop() {
        for gen in 0..a.n_gens() {
            for dir_out in [true, false] {
                let ax = core_edge(a, core_a, x, gen, dir_out);
                let by = core_edge(b, core_b, y, gen, dir_out);
                match (ax, by) {
                    (None, None) => {}
                    (Some(x2), Some(y2)) => match map.get(&x2) {
                        Some(&m) if m == y2 => {}
                        Some(_) => return false,
                        None => {
                            if used.contains(&y2) {
                                return false;
                            }
                            map.insert(x2, y2);
                            used.insert(y2);
                            stack.push((x2, y2));
                        }
                    },
                    _ => return false,
                }
            }
        }
    }
    map.len() == core_a.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::words::{random_reduced_word, reduced_words, FreeBasis};

    fn b2() -> FreeBasis {
        FreeBasis::parse("a b").unwrap()
    }

    fn graph(gens: &[&str]) -> SubgroupGraph {
        let b = b2();
        let ws: Vec<Word> = gens.iter().map(|s| b.parse_word(s).unwrap()).collect();
        SubgroupGraph::fold(2, &ws)
    }

    #[test]
    fn fold_whole_group() {
        let g = graph(&["a", "b"]);
        assert!(g.is_whole_group());
        assert_eq!(g.rank(), 2);
    }

    #[test]
    fn fold_squares_and_b() {
        // a 2-cycle of a-edges through the basepoint plus a b-loop
        let g = graph(&["aa", "b"]);
        assert_eq!(g.rank(), 2);
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 3);
        assert!(g.member(&b2().parse_word("aa").unwrap()));
        assert!(!g.member(&b2().parse_word("a").unwrap()));
    }

    #[test]
    fn fold_conjugate_generator() {
        // path a, b-loop at the far vertex
        let g = graph(&["abA"]);
        assert_eq!(g.rank(), 1);
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn fold_empty_is_trivial() {
        let g = SubgroupGraph::fold(2, &[]);
        assert!(g.is_trivial());
        assert!(g.member(&Word::empty()));
    }

    #[test]
    fn folding_is_order_independent() {
        let b = b2();
        let gens = ["abA", "aa", "bab", "BaB"];
        let words: Vec<Word> = gens.iter().map(|s| b.parse_word(s).unwrap()).collect();
        let reference = SubgroupGraph::fold(2, &words);
        let mut rng = SplitMix64::new(1);
        for _ in 0..12 {
            let mut permuted = words.clone();
            for i in (1..permuted.len()).rev() {
                permuted.swap(i, rng.below(i + 1));
            }
            assert_eq!(SubgroupGraph::fold(2, &permuted), reference);
        }
    }

    #[test]
    fn member_examples() {
        let g = graph(&["aa", "b"]);
        assert!(g.member(&b2().parse_word("aa").unwrap()));
        assert!(!g.member(&b2().parse_word("a").unwrap()));
        assert!(g.member(&Word::empty()));
        let c = graph(&["abAB"]);
        let sq = b2().parse_word("abAB").unwrap().pow(2);
        assert!(c.member(&sq));
    }

    #[test]
    fn member_agrees_with_product_oracle() {
        let b = b2();
        for gens in [vec!["aa", "b"], vec!["abA"], vec!["ab", "ba"]] {
            let words: Vec<Word> = gens.iter().map(|s| b.parse_word(s).unwrap()).collect();
            let g = SubgroupGraph::fold(2, &words);
            // every product of at most 4 generators and inverses is accepted
            let mut pool = vec![Word::empty()];
            for _ in 0..4 {
                let mut next = Vec::new();
                for w in &pool {
                    for x in &words {
                        next.push(w.concat(x));
                        next.push(w.concat(&x.inverse()));
                    }
                }
                for w in &next {
                    assert!(g.member(w), "oracle product rejected: {w}");
                }
                pool = next;
            }
        }
        // spot negatives
        let g = graph(&["aa", "b"]);
        for bad in ["a", "ab", "ba"] {
            assert!(!g.member(&b.parse_word(bad).unwrap()));
        }
    }

    #[test]
    fn witness_remultiplies() {
        let b = b2();
        let gens: Vec<Word> = ["aa", "bab"]
            .iter()
            .map(|s| b.parse_word(s).unwrap())
            .collect();
        let ag = SubgroupGraph::fold_annotated(2, &gens);
        let w = gens[0].concat(&gens[1].inverse()).concat(&gens[0]);
        let witness = ag.witness(&w).expect("member");
        assert_eq!(evaluate_witness(&witness, &gens), w);
        assert!(ag.witness(&b.parse_word("a").unwrap()).is_none());
    }

    #[test]
    fn rank_vs_generator_count() {
        assert_eq!(graph(&["a", "b"]).rank(), 2);
        assert_eq!(graph(&["aa", "b"]).rank(), 2);
        assert_eq!(graph(&["ab", "ba"]).rank(), 2);
        // dependent generators drop rank
        assert_eq!(graph(&["a", "aa"]).rank(), 1);
        assert_eq!(graph(&["ab", "abab"]).rank(), 1);
    }

    #[test]
    fn pullback_gcd_of_cycles() {
        let a = graph(&["aa"]);
        let b = graph(&["aaa"]);
        let comps = pullback(&a, &b);
        let based = &comps[0];
        assert!(based.based);
        // a^2 meet a^3 = a^6
        let a6 = b2().parse_word("aaaaaa").unwrap();
        assert!(based.graph.member(&a6));
        assert!(!based.graph.member(&b2().parse_word("aa").unwrap()));
        assert_eq!(based.graph.rank(), 1);
        assert_eq!(based.graph.vertex_count(), 6);
    }

    #[test]
    fn pullback_disjoint_letters() {
        let a = graph(&["a"]);
        let b = graph(&["b"]);
        let comps = pullback(&a, &b);
        assert_eq!(comps.len(), 1);
        assert!(comps[0].based);
        assert!(comps[0].graph.is_trivial());
    }

    #[test]
    fn pullback_reps_certify_conjugate_intersections() {
        // the self pullback of <aa> has one off-diagonal component whose
        // representative g certifies that <aa> meets g <aa> g^-1
        let a2 = graph(&["aa"]);
        let comps = pullback(&a2, &a2);
        assert_eq!(comps.len(), 2);
        let other = comps.iter().find(|c| !c.based).unwrap();
        assert_eq!(other.graph.rank(), 1);
        let g = &other.rep;
        assert_eq!(g.len(), 1);
        // a nontrivial element of the certified intersection
        let sq = b2().parse_word("aa").unwrap();
        assert!(a2.member(&sq));
        assert!(a2.member(&sq.conjugated(g)));
        assert!(!a2.member(g));
    }

    #[test]
    fn pullback_self_of_malnormal_cyclic() {
        let a = graph(&["a"]);
        let comps = pullback(&a, &a);
        // only the diagonal (based) component is nontrivial
        assert_eq!(comps.len(), 1);
        assert!(comps[0].based);
        assert_eq!(comps[0].graph.rank(), 1);
    }

    #[test]
    fn pullback_based_component_matches_member_intersection() {
        let b = b2();
        let g1 = graph(&["aa", "b"]);
        let g2 = graph(&["a", "bb"]);
        let based = &pullback(&g1, &g2)[0];
        for w in reduced_words(&[0, 1], 6) {
            let both = g1.member(&w) && g2.member(&w);
            assert_eq!(based.graph.member(&w), both, "word {}", b.render(&w));
        }
    }

    #[test]
    fn malnormal_family_examples() {
        let a = graph(&["a"]);
        let b = graph(&["b"]);
        let report = is_malnormal_family(&[&a]);
        assert!(report.malnormal);
        let report = is_malnormal_family(&[&a, &b]);
        assert!(report.malnormal);
        let sq = graph(&["aa"]);
        let report = is_malnormal_family(&[&sq]);
        assert!(!report.malnormal);
        let w = report.witness.unwrap();
        let basis = b2();
        assert_eq!(basis.render(&w.conjugator), "a");
        assert_eq!(basis.render(&w.element), "aa");
        // witness satisfies the violated condition exactly
        assert!(sq.member(&w.element));
        assert!(sq.member(&w.element.conjugated(&w.conjugator)));
        assert!(!sq.member(&w.conjugator));
    }

    #[test]
    fn conjugate_subgroups() {
        let b = b2();
        let a = graph(&["a"]);
        let bab = graph(&["baB"]);
        let g = subgroups_conjugate(&a, &bab).expect("conjugate");
        // g^-1 <a> g = <baB>
        assert!(bab.member(&b.parse_word("a").unwrap().conjugated(&g)));
        assert!(subgroups_conjugate(&a, &graph(&["b"])).is_none());
        let self_conj = subgroups_conjugate(&a, &a).unwrap();
        assert!(self_conj.is_empty());
    }

    #[test]
    fn conjugacy_witnesses_compose() {
        let b = b2();
        let base = graph(&["ab"]);
        let c1 = base.conjugated(&b.parse_word("a").unwrap());
        let c2 = base.conjugated(&b.parse_word("ba").unwrap());
        let g12 = subgroups_conjugate(&c1, &c2).unwrap();
        let g21 = subgroups_conjugate(&c2, &c1).unwrap();
        // symmetric witnesses invert each other up to the subgroup
        assert_eq!(c1, c2.conjugated(&g21));
        assert_eq!(c2, c1.conjugated(&g12));
        let g1b = subgroups_conjugate(&c1, &base).unwrap();
        let g2b = subgroups_conjugate(&c2, &base).unwrap();
        // transitivity: conjugating c1 by g12 * g2b lands on base
        assert_eq!(base, c1.conjugated(&g12.concat(&g2b)));
        let _ = g1b;
    }

    #[test]
    fn conjugate_into_finds_rotations() {
        let b = b2();
        let c = graph(&["abAB"]);
        let w = b.parse_word("baBA").unwrap(); // inverse class
        let (z, x) = c.conjugate_into(&w).expect("conjugate in");
        assert!(c.member(&x));
        assert_eq!(z.concat(&x).concat(&z.inverse()), w);
        let conj = b
            .parse_word("abAB")
            .unwrap()
            .conjugated(&b.parse_word("bab").unwrap());
        let (z, x) = c.conjugate_into(&conj).expect("conjugate in");
        assert_eq!(z.concat(&x).concat(&z.inverse()), conj);
        assert!(c.conjugate_into(&b.parse_word("ab").unwrap()).is_none());
    }

    #[test]
    fn dot_export_is_deterministic() {
        let g = graph(&["abA"]);
        let dot = g.to_dot_named(&b2());
        assert_eq!(
            dot,
            "digraph subgroup {\n  0 -> 1 [label=\"a\"];\n  1 -> 1 [label=\"b\"];\n}\n"
        );
    }

    #[test]
    fn random_membership_closure() {
        // subgroup elements stay members under products and conjugation
        // by members
        let b = b2();
        let gens: Vec<Word> = ["aa", "bab"]
            .iter()
            .map(|s| b.parse_word(s).unwrap())
            .collect();
        let g = SubgroupGraph::fold(2, &gens);
        let mut rng = SplitMix64::new(9);
        for _ in 0..100 {
            let mut w = Word::empty();
            for _ in 0..rng.below(5) {
                let pick = &gens[rng.below(gens.len())];
                w = if rng.below(2) == 0 {
                    w.concat(pick)
                } else {
                    w.concat(&pick.inverse())
                };
            }
            assert!(g.member(&w));
        }
        let _ = random_reduced_word(&mut rng, &[0, 1], 4);
    }
}
