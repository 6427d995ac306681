//! Tabled least-fixpoint computation of answer sets for goals.
//!
//! A goal's answers are recomputed from the current answers of its subgoals
//! whenever one of those grows; cyclic dependencies simply converge.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::hash::Hash;

pub type GoalId = usize;

#[derive(Debug)]
pub struct Table<G, A> {
    goals: Vec<G>,
    index: HashMap<G, GoalId>,
    answers: Vec<BTreeSet<A>>,
    dependents: Vec<BTreeSet<GoalId>>,
    queue: VecDeque<GoalId>,
    queued: Vec<bool>,
    /// Remaining work units.
    pub budget: u64,
}

impl<G: Clone + Eq + Hash, A: Clone + Ord> Table<G, A> {
    pub fn new(budget: u64) -> Self {
        Table {
            goals: Vec::new(),
            index: HashMap::new(),
            answers: Vec::new(),
            dependents: Vec::new(),
            queue: VecDeque::new(),
            queued: Vec::new(),
            budget,
        }
    }

    pub fn goal(&self, g: GoalId) -> &G {
        &self.goals[g]
    }

    pub fn answers(&self, g: GoalId) -> &BTreeSet<A> {
        &self.answers[g]
    }

    pub fn len(&self) -> usize {
        self.goals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
    }

    /// Interns `g` without recording a dependency.
    pub fn root(&mut self, g: G) -> GoalId {
        if let Some(&id) = self.index.get(&g) {
            return id;
        }
        let id = self.goals.len();
        self.goals.push(g.clone());
        self.index.insert(g, id);
        self.answers.push(BTreeSet::new());
        self.dependents.push(BTreeSet::new());
        self.queued.push(true);
        self.queue.push_back(id);
        id
    }

    /// Interns `sub` and records that `from` reads its answers.
    pub fn require(&mut self, from: GoalId, sub: G) -> GoalId {
        let id = self.root(sub);
        self.dependents[id].insert(from);
        id
    }

    /// Snapshot of the current answers of `sub`, read on behalf of `from`.
    pub fn read(&mut self, from: GoalId, sub: G) -> Vec<A> {
        let id = self.require(from, sub);
        self.answers[id].iter().cloned().collect()
    }

    pub fn charge(&mut self, units: u64) -> bool {
        if self.budget < units {
            self.budget = 0;
            false
        } else {
            self.budget -= units;
            true
        }
    }

    /// Runs `expand` to a fixpoint or until `done` holds or the budget runs
    /// out. Returns true when a fixpoint was reached.
    pub fn solve<S>(
        &mut self,
        state: &mut S,
        mut expand: impl FnMut(&mut S, &mut Self, GoalId) -> Vec<A>,
        mut done: impl FnMut(&Self) -> bool,
    ) -> bool {
        while let Some(g) = self.queue.pop_front() {
            self.queued[g] = false;
            if !self.charge(1) {
                return false;
            }
            let found = expand(state, self, g);
            let mut grew = false;
            for a in found {
                grew |= self.answers[g].insert(a);
            }
            if grew {
                let deps: Vec<GoalId> = self.dependents[g].iter().copied().collect();
                for d in deps {
                    if !self.queued[d] {
                        self.queued[d] = true;
                        self.queue.push_back(d);
                    }
                }
            }
            if done(self) {
                return false;
            }
            if self.budget == 0 {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Reachability in a cyclic graph as a tabled computation.
    #[test]
    fn cyclic_goals_converge() {
        let edges: Vec<Vec<usize>> = vec![vec![1], vec![2], vec![0, 3], vec![]];
        let mut t: Table<usize, usize> = Table::new(1000);
        let root = t.root(0);
        let complete = t.solve(
            &mut (),
            |_, t, g| {
                let n = *t.goal(g);
                let mut out = vec![n];
                for &m in &edges[n] {
                    out.extend(t.read(g, m));
                }
                out
            },
            |_| false,
        );
        assert!(complete);
        assert_eq!(
            t.answers(root).iter().copied().collect::<Vec<_>>(),
            vec![0, 1, 2, 3]
        );
    }

    #[test]
    fn budget_stops_unbounded_growth() {
        let mut t: Table<u8, u64> = Table::new(50);
        t.root(0);
        let complete = t.solve(
            &mut (),
            |_, t, g| {
                let mut out = vec![0];
                out.extend(t.read(g, 0).into_iter().map(|n| n + 1));
                out
            },
            |_| false,
        );
        assert!(!complete);
    }
}
