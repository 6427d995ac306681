//! Generators and reference oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use cofj::algebra::Tree;
use cofj::ast::{name, BinOp, Expr, Name, OpenValue};
use cofj::classtable::Program;
use cofj::parser::{ClassDecl, FieldDecl, MethodDecl, SourceProgram};
use cofj::{Capsule, Environment};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::TestRunner;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

// ---------------------------------------------------------------- capsules

const NAMES: [&str; 4] = ["x", "y", "z", "w"];
const RENAMED: [&str; 6] = ["y", "x", "w", "z", "p", "q"];

fn var(i: usize) -> OpenValue {
    OpenValue::Var(name(NAMES[i]))
}

fn obj(c: &str, args: Vec<OpenValue>) -> OpenValue {
    OpenValue::Obj(name(c), args)
}

fn leaf(n: usize) -> impl Strategy<Value = OpenValue> {
    prop_oneof![
        3 => (0..n).prop_map(var),
        1 => (0..2i64).prop_map(OpenValue::Int),
        1 => Just(obj("A", vec![])),
    ]
}

/// Constructors `A()`, `B(_)` and `P(_, _)` over leaves, nested once.
fn node(n: usize) -> impl Strategy<Value = OpenValue> {
    let shallow = prop_oneof![
        Just(obj("A", vec![])),
        leaf(n).prop_map(|a| obj("B", vec![a])),
        (leaf(n), leaf(n)).prop_map(|(a, b)| obj("P", vec![a, b])),
    ];
    let inner = prop_oneof![3 => leaf(n), 1 => shallow.clone()];
    prop_oneof![
        1 => shallow,
        2 => inner.clone().prop_map(|a| obj("B", vec![a])),
        2 => (inner.clone(), inner).prop_map(|(a, b)| obj("P", vec![a, b])),
    ]
}

/// Closed capsules over at most four variables named from `x, y, z, w`.
pub fn capsule() -> impl Strategy<Value = Capsule> {
    (1..=4usize).prop_flat_map(|n| {
        let binding = prop_oneof![1 => (0..n).prop_map(var), 4 => node(n)];
        let open = prop_oneof![1 => (0..n).prop_map(var), 1 => node(n)];
        (prop::collection::vec(binding, n), open).prop_map(|(bs, open)| {
            let env: Environment = bs
                .into_iter()
                .enumerate()
                .map(|(i, u)| (name(NAMES[i]), u))
                .collect();
            Capsule::new(open, env)
        })
    })
}

/// Ways of producing a second capsule from a first.
#[derive(Debug, Clone, Copy)]
pub enum Transform {
    /// Bijective renaming of every variable, possibly onto shared names.
    Rename(usize),
    /// Replaces the root (or a variable in the root) by its binding.
    Unroll,
    /// Routes one binding through a new variable.
    Indirect(usize),
    /// Changes one integer or the first constructor; usually not equivalent.
    Perturb,
}

pub fn transform() -> impl Strategy<Value = Transform> {
    prop_oneof![
        2 => (0..24usize).prop_map(Transform::Rename),
        2 => Just(Transform::Unroll),
        2 => (0..4usize).prop_map(Transform::Indirect),
        1 => Just(Transform::Perturb),
    ]
}

pub fn apply(c: &Capsule, t: Transform) -> Capsule {
    match t {
        Transform::Rename(seed) => {
            let vars: Vec<Name> = c.env.domain().cloned().collect();
            let mut pool: Vec<&str> = RENAMED.to_vec();
            let mut map = BTreeMap::new();
            let mut s = seed;
            for x in &vars {
                let k = s % pool.len();
                s = s / pool.len() + 7 * k + 1;
                map.insert(x.clone(), name(pool.remove(k)));
            }
            let r = |u: &OpenValue| rename(u, &map);
            Capsule::new(
                r(&c.open),
                c.env.iter().map(|(x, u)| (map[x].clone(), r(u))).collect(),
            )
        }
        Transform::Unroll => {
            let open = match &c.open {
                OpenValue::Var(x) => c.env.get(x).cloned().unwrap_or_else(|| c.open.clone()),
                OpenValue::Obj(k, args) => OpenValue::Obj(
                    k.clone(),
                    args.iter()
                        .map(|a| match a {
                            OpenValue::Var(x) => c.env.get(x).cloned().unwrap_or_else(|| a.clone()),
                            other => other.clone(),
                        })
                        .collect(),
                ),
                other => other.clone(),
            };
            Capsule::new(open, c.env.clone())
        }
        Transform::Indirect(i) => {
            let vars: Vec<Name> = c.env.domain().cloned().collect();
            let x = &vars[i % vars.len()];
            let fresh = (0..)
                .map(|k| name(&format!("t{k}")))
                .find(|t| !c.env.contains(t))
                .unwrap();
            let mut env = c.env.clone();
            let u = env
                .insert(x.clone(), OpenValue::Var(fresh.clone()))
                .expect("bound");
            env.insert(fresh, u);
            Capsule::new(c.open.clone(), env)
        }
        Transform::Perturb => {
            let mut done = false;
            let open = perturb(&c.open, &mut done);
            let env = c
                .env
                .iter()
                .map(|(x, u)| (x.clone(), perturb(u, &mut done)))
                .collect();
            Capsule::new(open, env)
        }
    }
}

fn rename(u: &OpenValue, map: &BTreeMap<Name, Name>) -> OpenValue {
    match u {
        OpenValue::Var(x) => OpenValue::Var(map[x].clone()),
        OpenValue::Obj(c, args) => {
            OpenValue::Obj(c.clone(), args.iter().map(|a| rename(a, map)).collect())
        }
        other => other.clone(),
    }
}

fn perturb(u: &OpenValue, done: &mut bool) -> OpenValue {
    if *done {
        return u.clone();
    }
    match u {
        OpenValue::Int(n) => {
            *done = true;
            OpenValue::Int(1 - n)
        }
        OpenValue::Obj(_, args) if args.is_empty() => {
            *done = true;
            obj("Z", vec![])
        }
        OpenValue::Obj(c, args) => {
            OpenValue::Obj(c.clone(), args.iter().map(|a| perturb(a, done)).collect())
        }
        other => other.clone(),
    }
}

/// Pairs mixing independent capsules with transformed copies.
pub fn pair() -> impl Strategy<Value = (Capsule, Capsule)> {
    prop_oneof![
        1 => (capsule(), capsule()),
        3 => (capsule(), transform()).prop_map(|(a, t)| {
            let b = apply(&a, t);
            (a, b)
        }),
    ]
}

/// Chains `a, t(a), t'(t(a))` mixed with independent triples.
pub fn triple() -> impl Strategy<Value = (Capsule, Capsule, Capsule)> {
    prop_oneof![
        1 => (capsule(), capsule(), capsule()),
        4 => (capsule(), transform(), transform()).prop_map(|(a, t, u)| {
            let b = apply(&a, t);
            let c = apply(&b, u);
            (a, b, c)
        }),
    ]
}

/// Deterministic samples of a strategy.
pub fn sample<S: Strategy>(s: S, n: usize) -> Vec<S::Value> {
    let mut runner = TestRunner::deterministic();
    (0..n)
        .map(|_| s.new_tree(&mut runner).expect("strategy").current())
        .collect()
}

// ------------------------------------------------------------ tree oracle

/// Compares finite expansions independently of the bisimulation code: the
/// trees must have the same shape, and their undetermined leaves must be
/// matched class-to-class by a partial bijection. With `strict`, a variable
/// undetermined in both capsules must also be matched with itself.
pub fn trees_agree(a: &Capsule, ta: &Tree, b: &Capsule, tb: &Tree, strict: bool) -> bool {
    let mut fwd: BTreeMap<Name, Name> = BTreeMap::new();
    let mut bwd: BTreeMap<Name, Name> = BTreeMap::new();
    let mut link = |x: &Name, y: &Name| -> bool {
        let (Some(cx), Some(cy)) = (var_class(&a.env, x), var_class(&b.env, y)) else {
            return false;
        };
        let f = fwd.entry(cx.clone()).or_insert_with(|| cy.clone()).clone();
        let g = bwd.entry(cy.clone()).or_insert_with(|| cx.clone()).clone();
        f == cy && g == cx
    };
    let mut stack = vec![(ta, tb)];
    while let Some((s, t)) = stack.pop() {
        match (s, t) {
            (Tree::Obj(c, xs), Tree::Obj(d, ys)) => {
                if c != d || xs.len() != ys.len() {
                    return false;
                }
                stack.extend(xs.iter().zip(ys));
            }
            (Tree::Var(x), Tree::Var(y)) => {
                if !link(x, y) {
                    return false;
                }
            }
            (s, t) if s == t => {}
            _ => return false,
        }
    }
    if strict {
        for x in a.env.domain() {
            if var_class(&a.env, x).is_some() && var_class(&b.env, x).is_some() && !link(x, x) {
                return false;
            }
        }
    }
    true
}

/// For a variable whose binding chain only meets variables, the least
/// variable on the cycle the chain ends in; `None` if the chain reaches a
/// value.
pub fn var_class(env: &Environment, x: &Name) -> Option<Name> {
    let mut path: Vec<Name> = Vec::new();
    let mut cur = x.clone();
    loop {
        if let Some(i) = path.iter().position(|y| *y == cur) {
            return path[i..].iter().min().cloned();
        }
        path.push(cur.clone());
        match env.get(&cur)? {
            OpenValue::Var(y) => cur = y.clone(),
            _ => return None,
        }
    }
}

// ------------------------------------------------------ program generator

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sort {
    Int,
    Bool,
    Obj,
}

const SORTS: [Sort; 3] = [Sort::Int, Sort::Bool, Sort::Obj];

struct Method {
    name: Name,
    ret: Sort,
    params: Vec<Sort>,
}

struct Class {
    name: Name,
    superclass: Option<usize>,
    own: Vec<(Name, Sort)>,
    /// Own fields and inherited ones, in constructor order.
    fields: Vec<(Name, Sort)>,
}

/// Random codefinition-free programs whose objects are all finite.
///
/// Expressions are generated by sort (int, bool, object) so that most runs
/// get past primitive misuse. `K0` declares every method and all other
/// classes descend from it, so dispatch on a generated object never fails;
/// bodies may recurse, and some programs diverge.
pub struct ProgramGen {
    rng: StdRng,
}

struct Scope<'a> {
    vars: Vec<(Expr, Sort)>,
    classes: &'a [Class],
    methods: &'a [Method],
}

impl ProgramGen {
    pub fn new(seed: u64) -> Self {
        ProgramGen {
            rng: StdRng::seed_from_u64(seed),
        }
    }

    fn sort(&mut self) -> Sort {
        SORTS[self.rng.random_range(0..SORTS.len())]
    }

    pub fn program(&mut self) -> (Program, Expr) {
        let src = self.source();
        let main = src
            .main
            .clone()
            .expect("generated programs have a main expression");
        let program = Program::from_source(src).expect("generated programs are well formed");
        (program, main)
    }

    pub fn source(&mut self) -> SourceProgram {
        let methods: Vec<Method> = (0..3)
            .map(|m| Method {
                name: name(&format!("m{m}")),
                ret: self.sort(),
                params: (0..m).map(|_| self.sort()).collect(),
            })
            .collect();
        let n = self.rng.random_range(1..=4);
        let mut classes: Vec<Class> = Vec::new();
        let mut next_field = 0;
        for i in 0..n {
            let superclass = (i > 0).then(|| self.rng.random_range(0..i));
            let own: Vec<(Name, Sort)> = (0..self.rng.random_range(0..=2))
                .map(|_| {
                    next_field += 1;
                    // K0 gets primitive fields only, so constructors can always bottom out.
                    let sort = if i == 0 || self.rng.random_bool(0.5) {
                        [Sort::Int, Sort::Bool][self.rng.random_range(0..2)]
                    } else {
                        self.sort()
                    };
                    (name(&format!("f{next_field}")), sort)
                })
                .collect();
            let mut fields = superclass.map_or(Vec::new(), |p: usize| classes[p].fields.clone());
            fields.extend(own.iter().cloned());
            classes.push(Class {
                name: name(&format!("K{i}")),
                superclass,
                own,
                fields,
            });
        }
        let mut decls = Vec::new();
        for (i, c) in classes.iter().enumerate() {
            let mut decl_methods = Vec::new();
            for m in &methods {
                if i > 0 && !self.rng.random_bool(0.5) {
                    continue;
                }
                let params: Vec<Name> = (0..m.params.len())
                    .map(|k| name(&format!("p{k}")))
                    .collect();
                let mut vars: Vec<(Expr, Sort)> = params
                    .iter()
                    .zip(&m.params)
                    .map(|(p, s)| (Expr::Var(p.clone()), *s))
                    .collect();
                vars.push((Expr::var("this"), Sort::Obj));
                vars.extend(
                    c.fields
                        .iter()
                        .map(|(f, s)| (Expr::field(Expr::var("this"), f), *s)),
                );
                let scope = Scope {
                    vars,
                    classes: &classes,
                    methods: &methods,
                };
                let body = self.expr(m.ret, 3, &scope);
                decl_methods.push(MethodDecl {
                    ret: name("Object"),
                    name: m.name.clone(),
                    params: params.into_iter().map(|p| (name("Object"), p)).collect(),
                    body,
                    cobody: None,
                });
            }
            decls.push(ClassDecl {
                name: c.name.clone(),
                superclass: c
                    .superclass
                    .map_or(name("Object"), |p| classes[p].name.clone()),
                fields: c
                    .own
                    .iter()
                    .map(|(f, _)| FieldDecl {
                        ty: name("Object"),
                        name: f.clone(),
                    })
                    .collect(),
                methods: decl_methods,
            });
        }
        let scope = Scope {
            vars: Vec::new(),
            classes: &classes,
            methods: &methods,
        };
        let sort = self.sort();
        let main = self.expr(sort, 3, &scope);
        SourceProgram {
            classes: decls,
            main: Some(main),
        }
    }

    fn expr(&mut self, sort: Sort, depth: u32, scope: &Scope) -> Expr {
        let vars: Vec<&Expr> = scope
            .vars
            .iter()
            .filter(|(_, s)| *s == sort)
            .map(|(e, _)| e)
            .collect();
        if depth == 0 || self.rng.random_bool(0.2) {
            if !vars.is_empty() && self.rng.random_bool(0.6) {
                return vars[self.rng.random_range(0..vars.len())].clone();
            }
            return match sort {
                Sort::Int => Expr::Int(self.rng.random_range(-2..=5)),
                Sort::Bool => Expr::Bool(self.rng.random_bool(0.5)),
                Sort::Obj => self.new_obj(0, scope),
            };
        }
        let d = depth - 1;
        let callers: Vec<usize> = (0..scope.methods.len())
            .filter(|&m| scope.methods[m].ret == sort)
            .collect();
        match self.rng.random_range(0..6) {
            0 if !callers.is_empty() => {
                let m = &scope.methods[callers[self.rng.random_range(0..callers.len())]];
                let target = self.expr(Sort::Obj, d, scope);
                let args = m.params.iter().map(|&s| self.expr(s, d, scope)).collect();
                Expr::Call(Box::new(target), m.name.clone(), args)
            }
            1 => Expr::if_(
                self.expr(Sort::Bool, d, scope),
                self.expr(sort, d, scope),
                self.expr(sort, d, scope),
            ),
            _ => match sort {
                Sort::Int => {
                    const OPS: [BinOp; 6] = [
                        BinOp::Add,
                        BinOp::Sub,
                        BinOp::Mul,
                        BinOp::Div,
                        BinOp::Rem,
                        BinOp::Min,
                    ];
                    let op = OPS[self.rng.random_range(0..OPS.len())];
                    Expr::binop(
                        op,
                        self.expr(Sort::Int, d, scope),
                        self.expr(Sort::Int, d, scope),
                    )
                }
                Sort::Bool => {
                    const OPS: [BinOp; 4] = [BinOp::Eq, BinOp::Ne, BinOp::Lt, BinOp::Ge];
                    let op = OPS[self.rng.random_range(0..OPS.len())];
                    Expr::binop(
                        op,
                        self.expr(Sort::Int, d, scope),
                        self.expr(Sort::Int, d, scope),
                    )
                }
                Sort::Obj => self.new_obj(d, scope),
            },
        }
    }

    fn new_obj(&mut self, depth: u32, scope: &Scope) -> Expr {
        let flat = |c: &&Class| c.fields.iter().all(|(_, s)| *s != Sort::Obj);
        let pool: Vec<&Class> = scope
            .classes
            .iter()
            .filter(|c| depth > 0 || flat(c))
            .collect();
        let k = pool[self.rng.random_range(0..pool.len())];
        let args = k
            .fields
            .iter()
            .map(|&(_, s)| self.expr(s, depth.saturating_sub(1), scope))
            .collect();
        Expr::New(k.name.clone(), args)
    }
}

// --------------------------------------------------------- number oracle

/// Decimal expansion of `p/q` in `[0, 1]` as (prefix, period).
///
/// Terminating fractions get the `0̄` tail unless `nines`, which selects the
/// other expansion (`1/2 = 0.4999…`, `1 = 0.999…`, `0` has none).
pub fn expansion(p: u64, q: u64, nines: bool) -> Option<(Vec<i64>, Vec<i64>)> {
    assert!(p <= q && q > 0);
    if nines {
        if p == 0 {
            return None;
        }
        if p == q {
            return Some((vec![], vec![9]));
        }
        // 0.d1…dk999… where d1…dk is the terminating expansion minus one ulp.
        let (prefix, period) = expansion(p, q, false)?;
        if period != [0] {
            return None;
        }
        let mut digits = prefix;
        while digits.last() == Some(&0) {
            digits.pop();
        }
        *digits.last_mut()? -= 1;
        return Some((digits, vec![9]));
    }
    if p == q {
        // Only representable with nines.
        return None;
    }
    let mut seen: BTreeMap<u64, usize> = BTreeMap::new();
    let mut digits = Vec::new();
    let mut r = p % q;
    loop {
        if let Some(&at) = seen.get(&r) {
            let period = digits.split_off(at);
            return Some((digits, period));
        }
        seen.insert(r, digits.len());
        r *= 10;
        digits.push((r / q) as i64);
        r %= q;
    }
}

/// The `Number` capsule for an expansion.
pub fn number_capsule(prefix: &[i64], period: &[i64]) -> Capsule {
    let cell = |d: i64, rest: OpenValue| obj("Number", vec![OpenValue::Int(d), rest]);
    let x = name("x");
    let mut tail = OpenValue::Var(x.clone());
    for &d in period.iter().rev() {
        tail = cell(d, tail);
    }
    let mut env = Environment::new();
    env.insert(x.clone(), tail);
    let mut open = OpenValue::Var(x);
    for &d in prefix.iter().rev() {
        open = cell(d, open);
    }
    Capsule::new(open, env)
}

/// The `i`-th digit of an expansion, counting from zero.
pub fn digit(prefix: &[i64], period: &[i64], i: usize) -> i64 {
    if i < prefix.len() {
        prefix[i]
    } else {
        period[(i - prefix.len()) % period.len()]
    }
}

/// `a + b` in lowest terms.
pub fn add_fractions((p, q): (u64, u64), (r, s): (u64, u64)) -> (u64, u64) {
    let (n, d) = (p * s + r * q, q * s);
    let g = gcd(n, d);
    (n / g, d / g)
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
