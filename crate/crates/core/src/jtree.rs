//! Junction trees built from block scopes, and one-way min-propagation.
//!
//! The pipeline is [`build_graph`] → [`triangulate`] → [`build_tree`] →
//! [`JunctionTree::assign_blocks`] → [`JunctionTree::collect_min`]. Trees are
//! rebuilt per query and may be forests when block scopes do not connect.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::scalar::Scalar;
use crate::table::{Assignment, CombineOp, DenseTable, QuestionId, Reducer, Scope, TableError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("elimination order is not a perfect elimination order of the graph")]
    NotChordal,
    #[error("running intersection property violated for {0}")]
    RunningIntersection(QuestionId),
    #[error("no clique contains block scope {0}")]
    NoContainingClique(Scope),
    #[error("tree has {0} components; a connected tree is required")]
    Disconnected(usize),
    #[error("clique {0} does not exist")]
    UnknownClique(usize),
}

pub type Result<T, E = TreeError> = std::result::Result<T, E>;

/// Undirected graph over questions; each vertex remembers its cardinality.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UndirectedGraph {
    cards: BTreeMap<QuestionId, usize>,
    adj: BTreeMap<QuestionId, BTreeSet<QuestionId>>,
}

impl UndirectedGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, var: QuestionId, card: usize) {
        self.cards.entry(var).or_insert(card);
        self.adj.entry(var).or_default();
    }

    /// Adds `a – b`. Self-loops and edges to unknown vertices are ignored.
    pub fn add_edge(&mut self, a: QuestionId, b: QuestionId) {
        if a == b || !self.cards.contains_key(&a) || !self.cards.contains_key(&b) {
            return;
        }
        self.adj.entry(a).or_default().insert(b);
        self.adj.entry(b).or_default().insert(a);
    }

    pub fn has_edge(&self, a: QuestionId, b: QuestionId) -> bool {
        self.adj.get(&a).is_some_and(|n| n.contains(&b))
    }

    pub fn vertices(&self) -> impl Iterator<Item = QuestionId> + '_ {
        self.cards.keys().copied()
    }

    pub fn vertex_count(&self) -> usize {
        self.cards.len()
    }

    pub fn card_of(&self, var: QuestionId) -> Option<usize> {
        self.cards.get(&var).copied()
    }

    pub fn neighbors(&self, var: QuestionId) -> impl Iterator<Item = QuestionId> + '_ {
        self.adj.get(&var).into_iter().flatten().copied()
    }

    /// Edges as `(low, high)` pairs in ascending order.
    pub fn edges(&self) -> Vec<(QuestionId, QuestionId)> {
        self.adj
            .iter()
            .flat_map(|(&a, n)| n.range(a..).map(move |&b| (a, b)))
            .filter(|(a, b)| a != b)
            .collect()
    }

    pub fn with_edges(&self, extra: &[(QuestionId, QuestionId)]) -> Self {
        let mut g = self.clone();
        for &(a, b) in extra {
            g.add_edge(a, b);
        }
        g
    }

    fn scope_of(&self, vars: impl IntoIterator<Item = QuestionId>) -> Result<Scope> {
        Ok(Scope::new(vars.into_iter().map(|q| (q, self.cards[&q])))?)
    }

    /// Chordality via maximum cardinality search followed by a perfect
    /// elimination check on the reversed visit order.
    pub fn is_chordal(&self) -> bool {
        let mut weight: BTreeMap<QuestionId, usize> = self.vertices().map(|v| (v, 0)).collect();
        let mut visited = Vec::with_capacity(self.vertex_count());
        while !weight.is_empty() {
            let (&v, _) = weight
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .expect("nonempty");
            weight.remove(&v);
            for n in self.neighbors(v) {
                if let Some(w) = weight.get_mut(&n) {
                    *w += 1;
                }
            }
            visited.push(v);
        }
        visited.reverse();
        is_perfect_elimination_order(self, &visited)
    }
}

/// Connects every pair of variables that co-occur in some scope.
pub fn build_graph<'a>(scopes: impl IntoIterator<Item = &'a Scope>) -> UndirectedGraph {
    let mut g = UndirectedGraph::new();
    for scope in scopes {
        for (q, c) in scope.pairs() {
            g.add_vertex(q, c);
        }
        for (i, &a) in scope.vars().iter().enumerate() {
            for &b in &scope.vars()[i + 1..] {
                g.add_edge(a, b);
            }
        }
    }
    g
}

/// Fill edges and the elimination order that produced them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triangulation {
    pub fill_edges: Vec<(QuestionId, QuestionId)>,
    pub order: Vec<QuestionId>,
}

/// Min-fill elimination; ties go to the lowest `QuestionId`.
pub fn triangulate(graph: &UndirectedGraph) -> Triangulation {
    let mut work = graph.clone();
    let mut remaining: BTreeSet<QuestionId> = graph.vertices().collect();
    let mut fill_edges = Vec::new();
    let mut order = Vec::with_capacity(remaining.len());

    let missing_edges = |g: &UndirectedGraph, left: &BTreeSet<QuestionId>, v: QuestionId| {
        let nbrs: Vec<_> = g.neighbors(v).filter(|n| left.contains(n)).collect();
        let mut missing = Vec::new();
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                if !g.has_edge(a, b) {
                    missing.push((a, b));
                }
            }
        }
        missing
    };

    while !remaining.is_empty() {
        let mut best: Option<(QuestionId, Vec<(QuestionId, QuestionId)>)> = None;
        for &v in &remaining {
            let missing = missing_edges(&work, &remaining, v);
            if best.as_ref().is_none_or(|(_, m)| missing.len() < m.len()) {
                best = Some((v, missing));
            }
        }
        let (v, missing) = best.expect("nonempty");
        for &(a, b) in &missing {
            work.add_edge(a, b);
        }
        fill_edges.extend(missing);
        remaining.remove(&v);
        order.push(v);
    }
    Triangulation { fill_edges, order }
}

/// `true` if every vertex's later neighbours in `order` are pairwise adjacent.
pub fn is_perfect_elimination_order(graph: &UndirectedGraph, order: &[QuestionId]) -> bool {
    if order.len() != graph.vertex_count() {
        return false;
    }
    let rank: BTreeMap<QuestionId, usize> =
        order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    if rank.len() != order.len() {
        return false;
    }
    order.iter().enumerate().all(|(i, &v)| {
        let later: Vec<_> = graph.neighbors(v).filter(|n| rank[n] > i).collect();
        later
            .iter()
            .enumerate()
            .all(|(j, &a)| later[j + 1..].iter().all(|&b| graph.has_edge(a, b)))
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clique<S> {
    pub table: DenseTable<S>,
}

impl<S: Scalar> Clique<S> {
    pub fn scope(&self) -> &Scope {
        self.table.scope()
    }
}

/// Edge of the tree, carrying the intersection of its endpoint cliques.
#[derive(Clone, Debug, PartialEq)]
pub struct Separator<S> {
    pub table: DenseTable<S>,
    pub cliques: (usize, usize),
}

impl<S: Scalar> Separator<S> {
    pub fn scope(&self) -> &Scope {
        self.table.scope()
    }
}

/// One message of a collect pass, reported to observers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Message {
    pub from: usize,
    pub to: usize,
    pub separator: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JunctionTree<S> {
    cliques: Vec<Clique<S>>,
    separators: Vec<Separator<S>>,
}

/// Builds the junction forest of a chordal graph from a perfect elimination
/// order. Cliques are stored in lexicographic scope order.
pub fn build_tree<S: Scalar>(
    chordal: &UndirectedGraph,
    order: &[QuestionId],
    cell_cap: usize,
) -> Result<JunctionTree<S>> {
    if !is_perfect_elimination_order(chordal, order) {
        return Err(TreeError::NotChordal);
    }
    let rank: BTreeMap<QuestionId, usize> =
        order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut candidates: Vec<BTreeSet<QuestionId>> = order
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            std::iter::once(v)
                .chain(chordal.neighbors(v).filter(|n| rank[n] > i))
                .collect()
        })
        .collect();
    candidates.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
    let mut maximal: Vec<BTreeSet<QuestionId>> = Vec::new();
    for c in candidates {
        if !maximal.iter().any(|m| c.is_subset(m)) {
            maximal.push(c);
        }
    }
    let mut scopes = maximal
        .into_iter()
        .map(|c| chordal.scope_of(c))
        .collect::<Result<Vec<_>>>()?;
    scopes.sort();
    for s in &scopes {
        s.check_capacity(cell_cap)?;
    }

    let mut candidates_edges = Vec::new();
    for i in 0..scopes.len() {
        for j in i + 1..scopes.len() {
            let shared = scopes[i].intersection(&scopes[j]);
            if !shared.is_empty() {
                candidates_edges.push((shared.len(), i, j, shared));
            }
        }
    }
    candidates_edges.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut parent: Vec<usize> = (0..scopes.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut separators = Vec::new();
    for (_, i, j, shared) in candidates_edges {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri] = rj;
            separators.push(Separator {
                table: DenseTable::zeros(shared),
                cliques: (i, j),
            });
        }
    }
    let tree = JunctionTree {
        cliques: scopes
            .into_iter()
            .map(|s| Clique {
                table: DenseTable::zeros(s),
            })
            .collect(),
        separators,
    };
    tree.check_running_intersection()?;
    Ok(tree)
}

/// Graph, triangulation and tree for a set of scopes in one call.
pub fn junction_forest<'a, S: Scalar>(
    scopes: impl IntoIterator<Item = &'a Scope>,
    cell_cap: usize,
) -> Result<JunctionTree<S>> {
    let graph = build_graph(scopes);
    let tri = triangulate(&graph);
    build_tree(&graph.with_edges(&tri.fill_edges), &tri.order, cell_cap)
}

impl<S: Scalar> JunctionTree<S> {
    pub fn cliques(&self) -> &[Clique<S>] {
        &self.cliques
    }

    pub fn separators(&self) -> &[Separator<S>] {
        &self.separators
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    /// `(neighbour clique, separator index)` pairs.
    pub fn neighbors(&self, clique: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.separators
            .iter()
            .enumerate()
            .filter_map(move |(k, s)| match s.cliques {
                (a, b) if a == clique => Some((b, k)),
                (a, b) if b == clique => Some((a, k)),
                _ => None,
            })
    }

    /// Clique indices grouped by connected component, each group ascending.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.cliques.len()];
        let mut out = Vec::new();
        for start in 0..self.cliques.len() {
            if seen[start] {
                continue;
            }
            let mut group = Vec::new();
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(c) = queue.pop_front() {
                group.push(c);
                for (n, _) in self.neighbors(c) {
                    if !seen[n] {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                }
            }
            group.sort_unstable();
            out.push(group);
        }
        out
    }

    /// Splits a forest into independent trees.
    pub fn into_components(self) -> Vec<JunctionTree<S>> {
        let groups = self.components();
        if groups.len() <= 1 {
            return vec![self];
        }
        let mut slot = vec![(0, 0); self.cliques.len()];
        for (g, members) in groups.iter().enumerate() {
            for (local, &c) in members.iter().enumerate() {
                slot[c] = (g, local);
            }
        }
        let mut trees: Vec<JunctionTree<S>> = groups
            .iter()
            .map(|_| JunctionTree {
                cliques: Vec::new(),
                separators: Vec::new(),
            })
            .collect();
        for (c, clique) in self.cliques.into_iter().enumerate() {
            trees[slot[c].0].cliques.push(clique);
        }
        for mut sep in self.separators {
            let (g, a) = slot[sep.cliques.0];
            let (_, b) = slot[sep.cliques.1];
            sep.cliques = (a, b);
            trees[g].separators.push(sep);
        }
        trees
    }

    /// Clique with the most variables; the lexicographically first wins ties.
    pub fn default_root(&self) -> Option<usize> {
        (0..self.cliques.len())
            .rev()
            .max_by_key(|&i| self.cliques[i].scope().len())
    }

    pub fn check_running_intersection(&self) -> Result<()> {
        let vars: BTreeSet<QuestionId> = self
            .cliques
            .iter()
            .flat_map(|c| c.scope().vars().iter().copied())
            .collect();
        for var in vars {
            let holders: Vec<usize> = (0..self.cliques.len())
                .filter(|&i| self.cliques[i].scope().contains(var))
                .collect();
            let mut seen = BTreeSet::from([holders[0]]);
            let mut queue = VecDeque::from([holders[0]]);
            while let Some(c) = queue.pop_front() {
                for (n, k) in self.neighbors(c) {
                    if self.separators[k].scope().contains(var) && seen.insert(n) {
                        queue.push_back(n);
                    }
                }
            }
            if seen.len() != holders.len() {
                return Err(TreeError::RunningIntersection(var));
            }
        }
        Ok(())
    }

    /// Adds each block into exactly one containing clique: the smallest by
    /// state count, lexicographic among equals. Returns the chosen cliques.
    pub fn assign_blocks<'a>(
        &mut self,
        blocks: impl IntoIterator<Item = &'a DenseTable<S>>,
    ) -> Result<Vec<usize>> {
        let mut chosen = Vec::new();
        for block in blocks {
            let target = (0..self.cliques.len())
                .filter(|&i| block.scope().is_subset_of(self.cliques[i].scope()))
                .min_by_key(|&i| (self.cliques[i].scope().size(), i))
                .ok_or_else(|| TreeError::NoContainingClique(block.scope().clone()))?;
            self.cliques[target]
                .table
                .combine_in_place(block, CombineOp::Add)?;
            chosen.push(target);
        }
        Ok(chosen)
    }

    /// Σ cliques − Σ separators at a full assignment of the tree's variables.
    pub fn decomposed_value(&self, assignment: &Assignment) -> Result<S> {
        let mut total = S::zero();
        for c in &self.cliques {
            total = total + c.table.value_at(assignment)?;
        }
        for s in &self.separators {
            total = total - s.table.value_at(assignment)?;
        }
        Ok(total)
    }

    /// Leaves-to-root min-propagation. Returns the root clique table, whose
    /// smallest cell is the minimum of the decomposed function.
    pub fn collect_min(&mut self, root: usize) -> Result<DenseTable<S>> {
        self.collect_min_observed(root, |_, _| {})
    }

    /// [`collect_min`](Self::collect_min) that calls `observer` after every
    /// message.
    pub fn collect_min_observed(
        &mut self,
        root: usize,
        mut observer: impl FnMut(&Self, Message),
    ) -> Result<DenseTable<S>> {
        if root >= self.cliques.len() {
            return Err(TreeError::UnknownClique(root));
        }
        let n = self.components().len();
        if n > 1 {
            return Err(TreeError::Disconnected(n));
        }
        for msg in self.collect_schedule(root) {
            self.send(msg)?;
            observer(self, msg);
        }
        Ok(self.cliques[root].table.clone())
    }

    /// Messages in post-order: every clique sends only after all its children.
    fn collect_schedule(&self, root: usize) -> Vec<Message> {
        let mut schedule = Vec::new();
        let mut stack = vec![(root, usize::MAX, usize::MAX, false)];
        while let Some((node, parent, sep, expanded)) = stack.pop() {
            if expanded {
                if parent != usize::MAX {
                    schedule.push(Message {
                        from: node,
                        to: parent,
                        separator: sep,
                    });
                }
                continue;
            }
            stack.push((node, parent, sep, true));
            let mut children: Vec<_> = self.neighbors(node).filter(|&(c, _)| c != parent).collect();
            children.sort_unstable();
            for (child, k) in children.into_iter().rev() {
                stack.push((child, node, k, false));
            }
        }
        schedule
    }

    fn send(&mut self, msg: Message) -> Result<()> {
        let sep_scope = self.separators[msg.separator].scope().clone();
        let projected = self.cliques[msg.from]
            .table
            .project(&sep_scope, Reducer::Min)?;
        let gain = projected.combine(&self.separators[msg.separator].table, CombineOp::Sub)?;
        self.cliques[msg.to]
            .table
            .combine_in_place(&gain, CombineOp::Add)?;
        self.separators[msg.separator].table = projected;
        Ok(())
    }

    /// Recovers a minimising assignment after [`collect_min`](Self::collect_min)
    /// from `root` by walking back down the tree.
    pub fn decode_argmin(&self, root: usize) -> Result<Assignment> {
        if root >= self.cliques.len() {
            return Err(TreeError::UnknownClique(root));
        }
        let root_table = &self.cliques[root].table;
        let (idx, _) = root_table.min_cell();
        let mut assignment = root_table.scope().assignment_of(idx);
        let mut queue = VecDeque::from([(root, usize::MAX)]);
        while let Some((node, parent)) = queue.pop_front() {
            let mut children: Vec<_> = self.neighbors(node).filter(|&(c, _)| c != parent).collect();
            children.sort_unstable();
            for (child, k) in children {
                let fixed = assignment.restrict(self.separators[k].scope());
                let rest = self.cliques[child].table.slice(&fixed)?;
                let (i, _) = rest.min_cell();
                assignment = assignment.merged(&rest.scope().assignment_of(i));
                queue.push_back((child, node));
            }
        }
        Ok(assignment)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::DEFAULT_CELL_CAP;

    fn q(i: u32) -> QuestionId {
        QuestionId(i)
    }

    fn bin(vars: &[u32]) -> Scope {
        Scope::new(vars.iter().map(|&v| (q(v), 2))).unwrap()
    }

    fn table(vars: &[u32], values: &[i64]) -> DenseTable<i64> {
        DenseTable::new(bin(vars), values.to_vec()).unwrap()
    }

    #[test]
    fn build_graph_examples() {
        let g = build_graph(&[bin(&[0, 1]), bin(&[1, 2])]);
        assert_eq!(g.edges(), vec![(q(0), q(1)), (q(1), q(2))]);
        let g = build_graph(&[bin(&[0])]);
        assert_eq!(g.vertex_count(), 1);
        assert!(g.edges().is_empty());
        let g = build_graph(&[bin(&[0, 1, 2])]);
        assert_eq!(g.edges(), vec![(q(0), q(1)), (q(0), q(2)), (q(1), q(2))]);
    }

    #[test]
    fn triangulate_examples() {
        let chain = build_graph(&[bin(&[0, 1]), bin(&[1, 2])]);
        assert!(triangulate(&chain).fill_edges.is_empty());
        let tri = build_graph(&[bin(&[0, 1, 2])]);
        assert!(triangulate(&tri).fill_edges.is_empty());

        // 0-1-2-3-0: every vertex has fill 1, so 0 goes first and 1-3 is added.
        let cycle = build_graph(&[bin(&[0, 1]), bin(&[1, 2]), bin(&[2, 3]), bin(&[0, 3])]);
        assert!(!cycle.is_chordal());
        let t = triangulate(&cycle);
        assert_eq!(t.fill_edges, vec![(q(1), q(3))]);
        assert_eq!(t.order[0], q(0));
        let chordal = cycle.with_edges(&t.fill_edges);
        assert!(chordal.is_chordal());
        assert!(is_perfect_elimination_order(&chordal, &t.order));
    }

    #[test]
    fn build_tree_examples() {
        let t: JunctionTree<i64> =
            junction_forest(&[bin(&[0, 1]), bin(&[1, 2])], DEFAULT_CELL_CAP).unwrap();
        assert_eq!(t.cliques().len(), 2);
        assert_eq!(t.cliques()[0].scope(), &bin(&[0, 1]));
        assert_eq!(t.cliques()[1].scope(), &bin(&[1, 2]));
        assert_eq!(t.separators().len(), 1);
        assert_eq!(t.separators()[0].scope(), &bin(&[1]));

        let t: JunctionTree<i64> = junction_forest(&[bin(&[0, 1, 2])], DEFAULT_CELL_CAP).unwrap();
        assert_eq!(t.cliques().len(), 1);
        assert!(t.separators().is_empty());

        let cycle = [bin(&[0, 1]), bin(&[1, 2]), bin(&[2, 3]), bin(&[0, 3])];
        let t: JunctionTree<i64> = junction_forest(&cycle, DEFAULT_CELL_CAP).unwrap();
        assert_eq!(t.cliques().len(), 2);
        assert!(t.cliques().iter().all(|c| c.scope().len() == 3));
        assert_eq!(t.separators()[0].scope(), &bin(&[1, 3]));
    }

    #[test]
    fn build_tree_rejects_non_peo() {
        let cycle = build_graph(&[bin(&[0, 1]), bin(&[1, 2]), bin(&[2, 3]), bin(&[0, 3])]);
        let order = vec![q(0), q(1), q(2), q(3)];
        assert_eq!(
            build_tree::<i64>(&cycle, &order, DEFAULT_CELL_CAP),
            Err(TreeError::NotChordal)
        );
    }

    #[test]
    fn disjoint_scopes_give_a_forest() {
        let t: JunctionTree<i64> =
            junction_forest(&[bin(&[0, 1]), bin(&[5, 6])], DEFAULT_CELL_CAP).unwrap();
        assert_eq!(t.components().len(), 2);
        let mut t2 = t.clone();
        assert_eq!(t2.collect_min(0), Err(TreeError::Disconnected(2)));
        let parts = t.into_components();
        assert_eq!(parts.len(), 2);
        assert!(parts.iter().all(|p| p.cliques().len() == 1));
    }

    #[test]
    fn assign_blocks_counts_each_block_once() {
        let mut t: JunctionTree<i64> =
            junction_forest(&[bin(&[0, 1]), bin(&[1, 2])], DEFAULT_CELL_CAP).unwrap();
        let b_only = table(&[1], &[7, 11]);
        let chosen = t.assign_blocks([&b_only]).unwrap();
        assert_eq!(chosen, vec![0]);
        assert_eq!(t.cliques()[0].table.values(), &[7, 11, 7, 11]);
        assert_eq!(t.cliques()[1].table.values(), &[0, 0, 0, 0]);

        let stranger = table(&[0, 2], &[1, 2, 3, 4]);
        assert!(matches!(
            t.assign_blocks([&stranger]),
            Err(TreeError::NoContainingClique(_))
        ));
    }

    #[test]
    fn collect_min_worked_fixture() {
        let ab = table(&[0, 1], &[10, -20, 0, 5]);
        let bc = table(&[1, 2], &[-5, 15, 3, -8]);
        let mut t: JunctionTree<i64> =
            junction_forest([ab.scope(), bc.scope()], DEFAULT_CELL_CAP).unwrap();
        t.assign_blocks([&ab, &bc]).unwrap();
        let root = t.default_root().unwrap();
        assert_eq!(root, 0);
        let out = t.collect_min(1).unwrap();
        assert_eq!(t.separators()[0].table.values(), &[0, -20]);
        assert_eq!(out.values(), &[-5, 15, -17, -28]);
        assert_eq!(out.min_cell().1, -28);
        let arg = t.decode_argmin(1).unwrap();
        assert_eq!(
            arg,
            Assignment::new().with(q(0), 0).with(q(1), 1).with(q(2), 1)
        );
    }

    #[test]
    fn collect_min_trivial_cases() {
        let abc = table(&[0, 1, 2], &[3, 1, 4, 1, 5, 9, 2, 6]);
        let mut t: JunctionTree<i64> = junction_forest([abc.scope()], DEFAULT_CELL_CAP).unwrap();
        t.assign_blocks([&abc]).unwrap();
        assert_eq!(t.collect_min(0).unwrap(), abc);

        let mut t: JunctionTree<i64> =
            junction_forest(&[bin(&[0, 1]), bin(&[1, 2])], DEFAULT_CELL_CAP).unwrap();
        let out = t.collect_min(0).unwrap();
        assert!(out.values().iter().all(|&v| v == 0));
    }

    #[test]
    fn identical_input_gives_identical_tree() {
        let scopes = [bin(&[3, 1]), bin(&[1, 2, 5]), bin(&[2, 4]), bin(&[4, 3])];
        let a: JunctionTree<i64> = junction_forest(&scopes, DEFAULT_CELL_CAP).unwrap();
        let b: JunctionTree<i64> = junction_forest(&scopes, DEFAULT_CELL_CAP).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn clique_capacity_is_enforced() {
        let s = Scope::new((0..5).map(|i| (q(i), 2))).unwrap();
        let err = junction_forest::<i64>([&s], 16).unwrap_err();
        assert!(matches!(
            err,
            TreeError::Table(TableError::CapacityExceeded { .. })
        ));
    }
}
