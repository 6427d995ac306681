//! Regular values as minimal, canonically numbered graphs.
//!
//! Two values are bisimilar exactly when their canonical graphs are equal, so
//! every value gets a small integer id and equality is id equality.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::Arc;

use crate::algebra::undetermined;
use crate::ast::{name, Name, OpenValue};
use crate::capsule::{Capsule, Environment};

pub type ValueId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Obj(Name),
    Int(i64),
    Bool(bool),
    /// An undetermined value, kept rigid: it equals only itself.
    Opaque(Name),
}

/// Node 0 is the root; nodes are numbered breadth-first from it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Graph(Vec<(Label, Vec<u32>)>);

#[derive(Debug, Default, Clone)]
pub struct ValueStore {
    graphs: Vec<Arc<Graph>>,
    index: HashMap<Arc<Graph>, ValueId>,
    child_cache: HashMap<(ValueId, usize), ValueId>,
    new_cache: HashMap<(Name, Vec<ValueId>), ValueId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnboundVar(pub Name);

impl ValueStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn label(&self, v: ValueId) -> &Label {
        &self.graphs[v as usize].0[0].0
    }

    pub fn arity(&self, v: ValueId) -> usize {
        self.graphs[v as usize].0[0].1.len()
    }

    pub fn int(&mut self, n: i64) -> ValueId {
        self.intern(Graph(vec![(Label::Int(n), vec![])]))
    }

    pub fn boolean(&mut self, b: bool) -> ValueId {
        self.intern(Graph(vec![(Label::Bool(b), vec![])]))
    }

    /// The `i`-th field of an object value.
    pub fn child(&mut self, v: ValueId, i: usize) -> ValueId {
        if let Some(&c) = self.child_cache.get(&(v, i)) {
            return c;
        }
        let g = self.graphs[v as usize].clone();
        let root = g.0[0].1[i];
        // A reachable part of a minimal graph is minimal; only renumber.
        let out = self.intern(renumber(&g.0, root));
        self.child_cache.insert((v, i), out);
        out
    }

    /// `new C(v1, …, vn)`
    pub fn construct(&mut self, class: &Name, args: &[ValueId]) -> ValueId {
        let key = (class.clone(), args.to_vec());
        if let Some(&c) = self.new_cache.get(&key) {
            return c;
        }
        let mut nodes: Vec<(Label, Vec<u32>)> = vec![(Label::Obj(class.clone()), vec![])];
        for &a in args {
            let offset = nodes.len() as u32;
            nodes[0].1.push(offset);
            for (l, cs) in &self.graphs[a as usize].0 {
                nodes.push((l.clone(), cs.iter().map(|c| c + offset).collect()));
            }
        }
        let out = self.intern(minimize(&nodes, 0));
        self.new_cache.insert(key, out);
        out
    }

    /// Interns the value denoted by a capsule. Undetermined variables become
    /// opaque leaves named after their class representative.
    pub fn intern_capsule(&mut self, c: &Capsule) -> Result<ValueId, UnboundVar> {
        self.intern_open(&c.open, &c.env)
    }

    pub fn intern_open(&mut self, u: &OpenValue, env: &Environment) -> Result<ValueId, UnboundVar> {
        let und = undetermined(env);
        let mut b = Builder {
            env,
            und: &und,
            nodes: vec![],
            var_node: BTreeMap::new(),
        };
        let root = b.node(u)?;
        let g = minimize(&b.nodes, root);
        Ok(self.intern(g))
    }

    fn intern(&mut self, g: Graph) -> ValueId {
        if let Some(&id) = self.index.get(&g) {
            return id;
        }
        let id = self.graphs.len() as ValueId;
        let g = Arc::new(g);
        self.graphs.push(g.clone());
        self.index.insert(g, id);
        id
    }

    /// Every value reachable from `v`, including `v`.
    pub fn subvalues(&mut self, v: ValueId) -> Vec<ValueId> {
        let n = self.graphs[v as usize].0.len();
        let g = self.graphs[v as usize].clone();
        (0..n as u32)
            .map(|i| self.intern(renumber(&g.0, i)))
            .collect()
    }

    /// A capsule denoting `v`; one variable per non-primitive node.
    pub fn to_capsule(&self, v: ValueId) -> Capsule {
        let g = &self.graphs[v as usize].0;
        let var = |i: u32| -> OpenValue {
            match &g[i as usize].0 {
                Label::Int(n) => OpenValue::Int(*n),
                Label::Bool(b) => OpenValue::Bool(*b),
                Label::Opaque(x) => OpenValue::Var(x.clone()),
                Label::Obj(_) => OpenValue::Var(name(&format!("v{i}"))),
            }
        };
        let mut env = Environment::new();
        for (i, (l, cs)) in g.iter().enumerate() {
            match l {
                Label::Obj(c) => {
                    env.insert(
                        name(&format!("v{i}")),
                        OpenValue::Obj(c.clone(), cs.iter().map(|&j| var(j)).collect()),
                    );
                }
                Label::Opaque(x) => {
                    env.insert(x.clone(), OpenValue::Var(x.clone()));
                }
                _ => {}
            }
        }
        Capsule::new(var(0), env)
    }
}

struct Builder<'a> {
    env: &'a Environment,
    und: &'a crate::algebra::UndeterminedSet,
    nodes: Vec<(Label, Vec<u32>)>,
    var_node: BTreeMap<Name, u32>,
}

impl Builder<'_> {
    fn node(&mut self, u: &OpenValue) -> Result<u32, UnboundVar> {
        match u {
            OpenValue::Int(n) => Ok(self.push(Label::Int(*n), vec![])),
            OpenValue::Bool(b) => Ok(self.push(Label::Bool(*b), vec![])),
            OpenValue::Obj(c, args) => {
                let id = self.push(Label::Obj(c.clone()), vec![]);
                let mut cs = Vec::with_capacity(args.len());
                for a in args {
                    cs.push(stacker::maybe_grow(32 * 1024, 1024 * 1024, || {
                        self.node(a)
                    })?);
                }
                self.nodes[id as usize].1 = cs;
                Ok(id)
            }
            OpenValue::Var(x) => {
                if let Some(&id) = self.var_node.get(x) {
                    return Ok(id);
                }
                if let Some(rep) = self.und.representative(x) {
                    let id = self.push(Label::Opaque(rep.clone()), vec![]);
                    self.var_node.insert(x.clone(), id);
                    return Ok(id);
                }
                let bound = self.env.get(x).ok_or_else(|| UnboundVar(x.clone()))?;
                match bound {
                    // Indirection: share the node of the target variable.
                    OpenValue::Var(_) => {
                        let id = self.node(&bound.clone())?;
                        self.var_node.insert(x.clone(), id);
                        Ok(id)
                    }
                    OpenValue::Obj(c, args) => {
                        let id = self.push(Label::Obj(c.clone()), vec![]);
                        self.var_node.insert(x.clone(), id);
                        let mut cs = Vec::with_capacity(args.len());
                        for a in args {
                            cs.push(stacker::maybe_grow(32 * 1024, 1024 * 1024, || {
                                self.node(a)
                            })?);
                        }
                        self.nodes[id as usize].1 = cs;
                        Ok(id)
                    }
                    prim => {
                        let id = self.node(&prim.clone())?;
                        self.var_node.insert(x.clone(), id);
                        Ok(id)
                    }
                }
            }
        }
    }

    fn push(&mut self, l: Label, cs: Vec<u32>) -> u32 {
        self.nodes.push((l, cs));
        (self.nodes.len() - 1) as u32
    }
}

/// Breadth-first renumbering of the part reachable from `root`.
fn renumber(nodes: &[(Label, Vec<u32>)], root: u32) -> Graph {
    let mut order: HashMap<u32, u32> = HashMap::new();
    let mut queue = VecDeque::from([root]);
    order.insert(root, 0);
    let mut seq = vec![root];
    while let Some(n) = queue.pop_front() {
        for &c in &nodes[n as usize].1 {
            if let std::collections::hash_map::Entry::Vacant(e) = order.entry(c) {
                e.insert(seq.len() as u32);
                seq.push(c);
                queue.push_back(c);
            }
        }
    }
    Graph(
        seq.iter()
            .map(|&n| {
                let (l, cs) = &nodes[n as usize];
                (l.clone(), cs.iter().map(|c| order[c]).collect())
            })
            .collect(),
    )
}

/// Merges bisimilar nodes (partition refinement) and renumbers canonically.
fn minimize(nodes: &[(Label, Vec<u32>)], root: u32) -> Graph {
    let reach = renumber(nodes, root).0;
    let n = reach.len();
    let mut block: Vec<u32> = {
        let mut ids: HashMap<(&Label, usize), u32> = HashMap::new();
        reach
            .iter()
            .map(|(l, cs)| {
                let k = ids.len() as u32;
                *ids.entry((l, cs.len())).or_insert(k)
            })
            .collect()
    };
    let mut count = block.iter().copied().max().map_or(0, |m| m + 1);
    loop {
        let mut ids: HashMap<(u32, Vec<u32>), u32> = HashMap::new();
        let next: Vec<u32> = (0..n)
            .map(|i| {
                let sig = (
                    block[i],
                    reach[i].1.iter().map(|&c| block[c as usize]).collect(),
                );
                let k = ids.len() as u32;
                *ids.entry(sig).or_insert(k)
            })
            .collect();
        let next_count = ids.len() as u32;
        block = next;
        if next_count == count {
            break;
        }
        count = next_count;
    }
    // One representative per block; children redirected to representatives.
    let mut rep: HashMap<u32, u32> = HashMap::new();
    for (i, &b) in block.iter().enumerate() {
        rep.entry(b).or_insert(i as u32);
    }
    let merged: Vec<(Label, Vec<u32>)> = reach
        .iter()
        .map(|(l, cs)| {
            (
                l.clone(),
                cs.iter().map(|&c| rep[&block[c as usize]]).collect(),
            )
        })
        .collect();
    renumber(&merged, rep[&block[0]])
}
